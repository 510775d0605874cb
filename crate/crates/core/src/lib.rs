//! Verification laboratory for explicit Kähler and almost-Kähler 4-manifold
//! metric families.
//!
//! The crate is organized bottom-up:
//!
//! * [`jets`] — truncated Taylor arithmetic in four variables (exact
//!   differentiation up to total degree four);
//! * [`tensor`] — pointwise multilinear algebra on a 4-dimensional tangent
//!   space with jet-valued components (Hodge star, selfdual/anti-selfdual
//!   splits, pfaffians);
//! * [`curvature`] — the curvature engine: Levi-Civita connection, Riemann /
//!   Ricci / Weyl / Cotton-York / Bach tensors, Kähler-specific data (Ricci
//!   form, Lee form, conformal scalar curvature, hamiltonian 2-form probes);
//! * [`families`] — constructors for the explicit metric families (ortho-toric,
//!   toric, Calabi-type fibrations, Hirzebruch-profile instances, LeBrun-type
//!   almost-Kähler metrics, Kähler surface products);
//! * [`verify`] — sampled identity suites, tolerance policy, reports,
//!   classification, and constant extraction.

pub mod curvature;
pub mod families;
pub mod jets;
pub mod tensor;
pub mod verify;
