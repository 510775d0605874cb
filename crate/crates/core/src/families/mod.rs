//! Catalogue of explicit four-dimensional metric families.
//!
//! Each family packages a coordinate-chart builder (metric, fundamental
//! two-form, and optional distinguished anti-selfdual form and hamiltonian
//! two-form, all as truncated Taylor jets), a sampling box on which the
//! chart has Riemannian signature, a set of structural predictions to be
//! checked downstream, and closed-form reference functions for the scalar
//! invariants the curvature engine recomputes independently.

pub mod calabi;
pub mod catalog;
pub mod hirzebruch;
pub mod lebrun;
pub mod ode;
pub mod orthotoric;
pub mod product;
pub mod toric;

use crate::curvature::{CurvatureError, Frame};
use crate::jets::{Jet, JetError};
use crate::tensor::{Mat4, TensorError, TwoForm};
use thiserror::Error;

/// Errors arising while instantiating a family chart at a point.
#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("point {point:?} leaves the sampling domain along axis {axis}")]
    OutsideDomain { axis: usize, point: [f64; 4] },
    #[error("signature guard `{what}` = {value:.6e} violated at {point:?}")]
    SignatureViolation {
        what: &'static str,
        value: f64,
        point: [f64; 4],
    },
    #[error("invalid family parameter: {what}")]
    BadParameter { what: String },
    #[error("profile solve failed: {what}")]
    Profile { what: String },
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

/// Axis-aligned coordinate box used as the sampling domain of a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box4 {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl Box4 {
    pub fn new(lo: [f64; 4], hi: [f64; 4]) -> Box4 {
        assert!(
            lo.iter().zip(hi.iter()).all(|(a, b)| a < b),
            "degenerate box: lo {lo:?} must be strictly below hi {hi:?}"
        );
        Box4 { lo, hi }
    }

    pub fn center(&self) -> [f64; 4] {
        let mut c = [0.0; 4];
        for a in 0..4 {
            c[a] = 0.5 * (self.lo[a] + self.hi[a]);
        }
        c
    }

    pub fn contains(&self, p: &[f64; 4]) -> bool {
        (0..4).all(|a| self.lo[a] <= p[a] && p[a] <= self.hi[a])
    }

    /// Shrinks the box towards its center by the given fraction of each
    /// half-width (0.0 is the identity, 0.5 halves every edge).
    pub fn shrink(&self, fraction: f64) -> Box4 {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for a in 0..4 {
            let half = 0.5 * (self.hi[a] - self.lo[a]) * fraction;
            lo[a] += half;
            hi[a] -= half;
        }
        Box4 { lo, hi }
    }

    /// Maps a point of the unit cube affinely into the box.
    pub fn point_from_unit(&self, u: [f64; 4]) -> [f64; 4] {
        let mut p = [0.0; 4];
        for a in 0..4 {
            p[a] = self.lo[a] + (self.hi[a] - self.lo[a]) * u[a];
        }
        p
    }

    /// The sixteen vertices of the box.
    pub fn corners(&self) -> Vec<[f64; 4]> {
        let mut out = Vec::with_capacity(16);
        for mask in 0..16u32 {
            let mut p = self.lo;
            for a in 0..4 {
                if mask & (1 << a) != 0 {
                    p[a] = self.hi[a];
                }
            }
            out.push(p);
        }
        out
    }
}

/// Structural properties a family instance claims about itself.
///
/// Every flag is a *prediction*: the verification layer recomputes the
/// corresponding tensor quantity from the jets and asserts that flags set
/// to `true` hold to tolerance while flags set to `false` fail by a clear
/// margin (negative controls).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Predictions {
    /// Complex structure is integrable and the fundamental form is closed.
    pub kahler: bool,
    /// The fundamental form is closed but the structure need not be
    /// integrable (strictly almost Kähler when `kahler` is false).
    pub symplectic: bool,
    /// The scalar curvature is constant on the chart.
    pub constant_scalar: bool,
    /// The gradient of the scalar curvature is a holomorphic potential
    /// (extremal metric).
    pub extremal: bool,
    /// The Ricci form is a hamiltonian two-form source: both the scalar
    /// curvature and the Ricci endomorphism give Killing fields.
    pub biextremal: bool,
    /// The negative-half Cotton tensor vanishes.
    pub weakly_selfdual: bool,
    /// The negative-half Weyl tensor vanishes.
    pub selfdual: bool,
    /// The Bach tensor vanishes.
    pub bach_flat: bool,
    /// The trace-free Ricci tensor vanishes.
    pub einstein: bool,
    /// The full Ricci tensor vanishes.
    pub ricci_flat: bool,
    /// The trace-free Ricci form is nowhere zero on the sampling box.
    pub rho0_nonvanishing: bool,
    /// The negative-half Weyl tensor is nowhere zero on the sampling box.
    pub wminus_nonvanishing: bool,
    /// The Ricci tensor commutes with the almost complex structure.
    /// Automatic for integrable members; a hypothesis that the transport
    /// identities need in the strictly almost-Kähler case.
    pub ricci_j_invariant: bool,
}

impl Default for Predictions {
    fn default() -> Predictions {
        Predictions {
            kahler: true,
            symplectic: true,
            constant_scalar: false,
            extremal: false,
            biextremal: false,
            weakly_selfdual: false,
            selfdual: false,
            bach_flat: false,
            einstein: false,
            ricci_flat: false,
            rho0_nonvanishing: false,
            wminus_nonvanishing: false,
            ricci_j_invariant: true,
        }
    }
}

/// Closed-form reference function of the chart coordinates.
pub type ScalarRef = Box<dyn Fn(&[f64; 4]) -> f64 + Send + Sync>;
/// Closed-form reference covector field (components in chart order).
pub type CovectorRef = Box<dyn Fn(&[f64; 4]) -> [f64; 4] + Send + Sync>;
/// Jet-valued closed-form reference (for references that get differentiated
/// downstream, such as Ricci potentials).
pub type JetScalarRef = Box<dyn Fn(&[f64; 4], usize) -> Result<Jet, FamilyError> + Send + Sync>;

/// Optional closed-form expressions for derived invariants, evaluated
/// pointwise and compared against the jet computation.
#[derive(Default)]
pub struct References {
    /// Normalized scalar curvature (one sixth of the scalar curvature).
    pub s: Option<ScalarRef>,
    /// Coefficient of the trace-free Ricci form on the reference
    /// anti-selfdual form.
    pub mu: Option<ScalarRef>,
    /// Conformal scalar curvature (distinguished negative-half Weyl
    /// eigenvalue over the pinned eigenvalue ratio).
    pub kappa: Option<ScalarRef>,
    /// Positive simple-eigenvalue coefficient of the trace-free Ricci form.
    pub lambda: Option<ScalarRef>,
    /// Pfaffian of the normalized Ricci form.
    pub p: Option<ScalarRef>,
    /// Trace potential of the hamiltonian two-form.
    pub sigma: Option<ScalarRef>,
    /// Pfaffian potential of the hamiltonian two-form.
    pub pi: Option<ScalarRef>,
    /// Lee form of the conformally rescaled anti-selfdual structure.
    pub theta: Option<CovectorRef>,
    /// Coefficient of the J-anti-invariant Bach part on the reference
    /// anti-selfdual form.
    pub bach_form_coeff: Option<ScalarRef>,
    /// Constant value of kappa times lambda cubed when both are defined.
    pub kappa_lambda_cubed: Option<f64>,
    /// Potential u with Ricci form -1/2 d(J du) (log of the volume ratio
    /// against a holomorphic coordinate volume).
    pub ricci_potential: Option<JetScalarRef>,
    /// Conformal factor whose rescaling `factor^-2 g` is Kahler with respect
    /// to the opposite-oriented structure carried by `omega_i`.
    pub conformal_factor: Option<JetScalarRef>,
}

/// Raw jet-valued chart data produced by a family builder at one point.
#[derive(Debug)]
pub struct FrameData {
    /// Covariant metric components.
    pub g: Mat4,
    /// Fundamental (symplectic) two-form.
    pub omega: TwoForm,
    /// Reference anti-selfdual form normalized against the trace-free
    /// Ricci form, when the family distinguishes one.
    pub omega_i: Option<TwoForm>,
    /// Hamiltonian two-form, when the family carries one.
    pub phi: Option<TwoForm>,
}

/// Which construction a [`FamilyInstance`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    OrthoToric,
    Toric,
    Calabi,
    Hirzebruch,
    LeBrun,
    Product,
}

type Builder = Box<dyn Fn(&[f64; 4], usize) -> Result<FrameData, FamilyError> + Send + Sync>;

/// A fully specified metric family member: builder plus domain,
/// predictions, and closed-form references.
pub struct FamilyInstance {
    pub name: String,
    pub kind: FamilyKind,
    /// Chart coordinate names in storage order.
    pub coords: [&'static str; 4],
    /// Box on which the chart is valid with Riemannian signature.
    pub domain: Box4,
    /// Fraction by which the domain shrinks before sampling, keeping
    /// evaluation points away from signature boundaries.
    pub margin: f64,
    pub predictions: Predictions,
    pub refs: References,
    builder: Builder,
}

impl FamilyInstance {
    pub fn new(
        name: impl Into<String>,
        kind: FamilyKind,
        coords: [&'static str; 4],
        domain: Box4,
        margin: f64,
        predictions: Predictions,
        refs: References,
        builder: Builder,
    ) -> FamilyInstance {
        FamilyInstance {
            name: name.into(),
            kind,
            coords,
            domain,
            margin,
            predictions,
            refs,
            builder,
        }
    }

    /// The shrunken box actually used for sampling.
    pub fn sampling_box(&self) -> Box4 {
        self.domain.shrink(self.margin)
    }

    /// Builds the raw jet data at a point of the domain.
    pub fn frame_data_at(&self, point: &[f64; 4], order: usize) -> Result<FrameData, FamilyError> {
        for axis in 0..4 {
            if point[axis] < self.domain.lo[axis] || point[axis] > self.domain.hi[axis] {
                return Err(FamilyError::OutsideDomain {
                    axis,
                    point: *point,
                });
            }
        }
        (self.builder)(point, order)
    }

    /// Builds the orthonormal-free frame (metric, orientation, complex
    /// structure) at a point, returning the remaining optional forms too.
    pub fn frame_at(
        &self,
        point: &[f64; 4],
        order: usize,
    ) -> Result<(Frame, Option<TwoForm>, Option<TwoForm>), FamilyError> {
        let data = self.frame_data_at(point, order)?;
        let frame = Frame::new(data.g, data.omega, data.omega_i.clone())?;
        Ok((frame, data.omega_i, data.phi))
    }
}

/// Seeds the four chart coordinates as first-order-exact jets at a point.
pub(crate) fn chart_jets(point: &[f64; 4], order: usize) -> [Jet; 4] {
    crate::jets::seed_point(*point, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_geometry_roundtrips() {
        let b = Box4::new([0.0, -1.0, 2.0, 0.5], [1.0, 1.0, 4.0, 1.5]);
        assert_eq!(b.center(), [0.5, 0.0, 3.0, 1.0]);
        assert!(b.contains(&[0.25, 0.9, 2.1, 1.49]));
        assert!(!b.contains(&[1.25, 0.0, 3.0, 1.0]));

        let s = b.shrink(0.5);
        assert_eq!(s.lo, [0.25, -0.5, 2.5, 0.75]);
        assert_eq!(s.hi, [0.75, 0.5, 3.5, 1.25]);

        let corners = b.corners();
        assert_eq!(corners.len(), 16);
        assert!(corners.iter().all(|c| b.contains(c)));
        assert!(corners.contains(&[0.0, -1.0, 2.0, 0.5]));
        assert!(corners.contains(&[1.0, 1.0, 4.0, 1.5]));

        let p = b.point_from_unit([0.0, 1.0, 0.5, 0.25]);
        assert_eq!(p, [0.0, 1.0, 3.0, 0.75]);
    }

    #[test]
    #[should_panic(expected = "degenerate box")]
    fn degenerate_box_rejected() {
        let _ = Box4::new([0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 1.0, 1.0]);
    }
}
