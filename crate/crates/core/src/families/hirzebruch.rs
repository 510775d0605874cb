//! Compact fibered instances: the Calabi-type profile whose vertical
//! polynomial closes up on a ruled surface over the round sphere.
//!
//! For momentum endpoints `0 < a < b` the profile
//!
//! ```text
//! V(z) = A1 z^4 + A2 z^3 + z^2 + A3 z + A4
//! ```
//!
//! with
//!
//! ```text
//! Dn = (b - a)(a^2 + 4ab + b^2)
//! A1 = -2a/Dn            A2 = (3a^2 - b^2)/Dn
//! A3 = ab(3a^2 - b^2)/Dn A4 = -2 a^3 b^2 / Dn
//! ```
//!
//! vanishes at `z = a, b`, stays positive between them, and satisfies the
//! endpoint slope conditions that smooth the fibers off. Two charts are
//! provided: the momentum chart (fiber coordinate `z` itself) and the
//! arclength-style potential chart `(x, y, u, t)` in which `z = psi(u)`
//! solves `psi' = V(psi)/psi`. The two describe the same metric, which
//! makes them curvature-level cross-checks of each other.
//!
//! When `b^2 = 3 a^2` the cubic and linear coefficients vanish (the
//! weakly selfdual member of the pencil) and the potential profile has
//! the closed form `psi = a sqrt((1 + 3 e^u)/(1 + e^u))`; otherwise the
//! profile is integrated numerically and lifted to exact jets through its
//! defining equation.

use super::calabi::{self, CalabiParams};
use super::ode::{integrate_profile, jet_lift, DenseProfile};
use super::{chart_jets, Box4, FamilyError, FamilyInstance, FamilyKind, Predictions, References};
use crate::jets::{poly_eval, Jet};
use std::sync::Arc;

/// Profile coefficients for momentum endpoints `0 < a < b`. Exactly
/// degenerate coefficient combinations are snapped to literal zeros so
/// the downstream flag logic sees them.
pub fn coefficients(a: f64, b: f64) -> Result<CalabiParams, FamilyError> {
    pencil_coefficients(a, b, 1.0, 1.0)
}

/// Profile coefficients of the two-parameter pencil indexed by the twist
/// degree `k >= 1` and a sign `eps`: the quartic profile closes up at both
/// momentum endpoints with boundary slopes `V'(a) = k a` and `V'(b) = -k b`.
/// The shared numerator of the middle coefficients is snapped to a literal
/// zero when it degenerates so downstream flag logic sees it.
pub fn pencil_coefficients(
    a: f64,
    b: f64,
    k: f64,
    eps: f64,
) -> Result<CalabiParams, FamilyError> {
    if !(0.0 < a && a < b) {
        return Err(FamilyError::BadParameter {
            what: format!("momentum endpoints must satisfy 0 < a < b, got ({a}, {b})"),
        });
    }
    if !(k >= 1.0) || k.fract() != 0.0 {
        return Err(FamilyError::BadParameter {
            what: format!("twist degree must be a positive integer, got {k}"),
        });
    }
    if eps != 1.0 && eps != -1.0 {
        return Err(FamilyError::BadParameter {
            what: format!("orientation sign must be +1 or -1, got {eps}"),
        });
    }
    let dn = (b - a) * (a * a + 4.0 * a * b + b * b);
    let mut q = k * (a * a + b * b) - 2.0 * eps * (b * b - a * a);
    if q.abs() <= 1e-12 * (k * (a * a + b * b) + 2.0 * (b * b - a * a)) {
        q = 0.0;
    }
    let a1 = -(k * (a + b) + eps * (a - b)) / dn;
    Ok(CalabiParams::new(
        1.0,
        a1,
        q / dn,
        a * b * q / dn,
        a * a * b * b * a1,
    ))
}

fn poly_val(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Momentum chart: the plain Calabi-type chart restricted to an inner
/// band of the fiber interval `(a, b)`.
pub fn momentum_instance(
    name: &str,
    a: f64,
    b: f64,
    margin: f64,
) -> Result<FamilyInstance, FamilyError> {
    let params = coefficients(a, b)?;
    let lo = a + 0.2 * (b - a);
    let hi = b - 0.2 * (b - a);
    let mut inst = calabi::instance(name, params, calabi::standard_domain(lo, hi), margin);
    inst.kind = FamilyKind::Hirzebruch;
    Ok(inst)
}

enum PsiKind {
    /// `psi = a sqrt((1 + 3 e^(u+shift))/(1 + e^(u+shift)))`.
    ClosedForm { a: f64, shift: f64 },
    Dense(DenseProfile),
}

struct PsiProfile {
    vc: [f64; 5],
    kind: PsiKind,
}

impl PsiProfile {
    fn value(&self, u: f64) -> Result<f64, FamilyError> {
        match &self.kind {
            PsiKind::ClosedForm { a, shift } => {
                let e = (u + shift).exp();
                Ok(a * ((1.0 + 3.0 * e) / (1.0 + e)).sqrt())
            }
            PsiKind::Dense(prof) => prof.eval(u),
        }
    }

    /// Full jet of `psi` in the third chart variable.
    fn jet(&self, u: f64, order: usize) -> Result<Jet, FamilyError> {
        match &self.kind {
            PsiKind::ClosedForm { a, shift } => {
                let [_, _, uj, _] = chart_jets(&[0.0, 0.0, u + shift, 0.0], order);
                let e = uj.exp();
                let w = (&e * 3.0 + 1.0) / (&e + 1.0);
                Ok((w * (a * a)).sqrt()?)
            }
            PsiKind::Dense(prof) => {
                let y0 = prof.eval(u)?;
                let vc = self.vc;
                jet_lift(y0, 2, order, move |y| Ok(&poly_eval(&vc, y) / y))
            }
        }
    }
}

/// Potential chart `(x, y, u, t)` with `z = psi(u)`, `psi' = V(psi)/psi`,
/// anchored at `psi(anchor_u) = anchor_psi`. The `twist` selects the
/// pencil member (boundary slopes `+/- twist * endpoint`). With
/// `force_ode` the profile is integrated numerically even when the closed
/// form applies, which turns the closed-form twin into an oracle for the
/// solver path.
pub fn potential_instance(
    name: &str,
    a: f64,
    b: f64,
    anchor: (f64, f64),
    u_range: (f64, f64),
    margin: f64,
    twist: f64,
    force_ode: bool,
) -> Result<FamilyInstance, FamilyError> {
    let params = pencil_coefficients(a, b, twist, 1.0)?;
    let CalabiParams { a1, a2, a3, a4, .. } = params;
    let vc = params.v_coeffs();
    let (u0, psi0) = anchor;
    let (u_lo, u_hi) = u_range;
    if !(a < psi0 && psi0 < b) {
        return Err(FamilyError::BadParameter {
            what: format!("anchor value {psi0} outside fiber interval ({a}, {b})"),
        });
    }

    let kind = if a3 == 0.0 && !force_ode {
        // b^2 = 3a^2: translate the closed form so it hits the anchor.
        let w = psi0 * psi0 / (a * a);
        PsiKind::ClosedForm {
            a,
            shift: ((w - 1.0) / (3.0 - w)).ln() - u0,
        }
    } else {
        let vc_ode = vc;
        PsiKind::Dense(integrate_profile(
            move |_, y| poly_val(&vc_ode, y) / y,
            u0,
            psi0,
            u_lo,
            u_hi,
            0.01,
        )?)
    };
    let prof = Arc::new(PsiProfile { vc, kind });

    let psi_of = {
        let prof = prof.clone();
        move |u: f64| {
            prof.value(u)
                .expect("fiber profile covers the chart domain")
        }
    };

    let mu = move |z: f64| -a1 * z + a3 / (2.0 * z * z);
    let s = move |z: f64| -2.0 * a1 * z - a2;
    let kappa = move |z: f64| -a3 / (z * z) - 2.0 * a4 / (z * z * z);

    let domain = Box4::new([-0.5, -0.5, u_lo, 0.0], [0.5, 0.5, u_hi, 1.0]);
    let sample = domain.shrink(margin);
    let mut mu_min = f64::INFINITY;
    let mut kappa_min = f64::INFINITY;
    for i in 0..17 {
        let u = sample.lo[2] + (sample.hi[2] - sample.lo[2]) * i as f64 / 16.0;
        let z = psi_of(u);
        mu_min = mu_min.min(mu(z).abs());
        kappa_min = kappa_min.min(kappa(z).abs());
    }

    let wsd = a3 == 0.0;
    let predictions = Predictions {
        kahler: true,
        symplectic: true,
        constant_scalar: a1 == 0.0,
        extremal: true,
        biextremal: wsd,
        weakly_selfdual: wsd,
        selfdual: a3 == 0.0 && a4 == 0.0,
        bach_flat: (4.0 * a1 * a4 - a2 * a3).abs() < 1e-12,
        einstein: a1 == 0.0 && a3 == 0.0,
        ricci_flat: a1 == 0.0 && a2 == 0.0 && a3 == 0.0,
        rho0_nonvanishing: mu_min > 1e-3,
        wminus_nonvanishing: kappa_min > 1e-3,
        ricci_j_invariant: true,
    };

    let p1 = psi_of.clone();
    let p2 = psi_of.clone();
    let p3 = psi_of.clone();
    let p4 = psi_of.clone();
    let p5 = psi_of.clone();
    let p6 = psi_of.clone();
    let p7 = psi_of.clone();
    let p8 = psi_of.clone();
    let prof_ricci = prof.clone();
    let prof_conf = prof.clone();
    let refs = References {
        s: Some(Box::new(move |p: &[f64; 4]| s(p1(p[2])))),
        mu: Some(Box::new(move |p: &[f64; 4]| mu(p2(p[2])))),
        kappa: Some(Box::new(move |p: &[f64; 4]| kappa(p3(p[2])))),
        lambda: Some(Box::new(move |p: &[f64; 4]| mu(p4(p[2])).abs())),
        p: Some(Box::new(move |p: &[f64; 4]| {
            let z = p5(p[2]);
            let (sv, mv) = (s(z), mu(z));
            0.25 * sv * sv - mv * mv
        })),
        sigma: Some(Box::new(move |p: &[f64; 4]| 2.0 * p6(p[2]))),
        pi: Some(Box::new(|_: &[f64; 4]| 0.0)),
        theta: Some(Box::new(move |p: &[f64; 4]| {
            // theta = -dz/z pulled back through z = psi(u).
            let z = p7(p[2]);
            [0.0, 0.0, -poly_val(&vc, z) / (z * z), 0.0]
        })),
        bach_form_coeff: Some(Box::new(move |p: &[f64; 4]| {
            let z = p8(p[2]);
            (4.0 * a1 * a4 - a2 * a3) / (2.0 * z * z)
        })),
        kappa_lambda_cubed: if wsd && a1 != 0.0 {
            Some(-2.0 * a4 * a1.abs().powi(3))
        } else {
            None
        },
        ricci_potential: Some(Box::new(move |p: &[f64; 4], order: usize| {
            let [x, y, _, _] = chart_jets(p, order);
            let d = (&x * &x + &y * &y) * 0.25 + 1.0;
            let psi = prof_ricci.jet(p[2], order)?;
            Ok(poly_eval(&vc, &psi).ln()? - d.ln()? * 2.0)
        })),
        conformal_factor: if wsd && a1 != 0.0 {
            // lambda = |a1| psi(u) through the fiber profile.
            let a1_abs = a1.abs();
            Some(Box::new(move |p: &[f64; 4], order: usize| {
                Ok(prof_conf.jet(p[2], order)? * a1_abs)
            }))
        } else {
            None
        },
    };

    let builder = Box::new(move |p: &[f64; 4], order: usize| {
        let [x, y, _, _] = chart_jets(p, order);
        let psi = prof.jet(p[2], order)?;
        let psi_prime = &poly_eval(&vc, &psi) / &psi;
        let zero = Jet::constant(0.0, order);
        let dz = [zero.clone(), zero.clone(), psi_prime, zero];
        calabi::assemble_chart(order, p, &x, &y, &psi, &dz, 1.0, &vc, [0.0, 0.0])
    });

    Ok(FamilyInstance::new(
        name,
        FamilyKind::Hirzebruch,
        ["x", "y", "u", "t"],
        domain,
        margin,
        predictions,
        refs,
        builder,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coefficients_close_up_at_both_endpoints() {
        let (a, b) = (1.3, 2.1);
        let params = coefficients(a, b).unwrap();
        let vc = params.v_coeffs();
        assert!(poly_val(&vc, a).abs() < 1e-14);
        assert!(poly_val(&vc, b).abs() < 1e-14);
        assert!(poly_val(&vc, 0.5 * (a + b)) > 0.0);
    }

    #[test]
    fn degenerate_pencil_member_has_exact_zeros() {
        let params = coefficients(1.0, 3f64.sqrt()).unwrap();
        assert_relative_eq!(params.a1, -0.25);
        assert_eq!(params.a2, 0.0);
        assert_eq!(params.a3, 0.0);
        assert_relative_eq!(params.a4, -0.75);

        let generic = coefficients(1.0, 2.0).unwrap();
        assert_relative_eq!(generic.a1, -2.0 / 13.0);
        assert_relative_eq!(generic.a2, -1.0 / 13.0);
        assert_relative_eq!(generic.a3, -2.0 / 13.0);
        assert_relative_eq!(generic.a4, -8.0 / 13.0);
    }

    #[test]
    fn higher_twist_coefficients_keep_the_boundary_slopes() {
        let params = pencil_coefficients(1.0, 2.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(params.a1, -5.0 / 13.0);
        assert_relative_eq!(params.a2, 4.0 / 13.0);
        assert_relative_eq!(params.a3, 8.0 / 13.0);
        assert_relative_eq!(params.a4, -20.0 / 13.0);
        // V closes up at the endpoints with slopes k*a and -k*b.
        for (a, b, k) in [(1.0, 2.0, 2.0), (0.7, 1.9, 3.0)] {
            let p = pencil_coefficients(a, b, k, 1.0).unwrap();
            let vc = p.v_coeffs();
            assert!(poly_val(&vc, a).abs() < 1e-13);
            assert!(poly_val(&vc, b).abs() < 1e-13);
            let dva = (poly_val(&vc, a + 1e-6) - poly_val(&vc, a - 1e-6)) / 2e-6;
            let dvb = (poly_val(&vc, b + 1e-6) - poly_val(&vc, b - 1e-6)) / 2e-6;
            assert_relative_eq!(dva, k * a, epsilon = 1e-6);
            assert_relative_eq!(dvb, -k * b, epsilon = 1e-6);
        }
        assert!(pencil_coefficients(1.0, 2.0, 0.0, 1.0).is_err());
        assert!(pencil_coefficients(1.0, 2.0, 1.5, 1.0).is_err());
        assert!(pencil_coefficients(1.0, 2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn closed_form_and_solver_charts_agree() {
        let anchor = (0.0, 2f64.sqrt());
        let exact =
            potential_instance("pot_exact", 1.0, 3f64.sqrt(), anchor, (-1.0, 1.0), 0.1, 1.0, false)
                .unwrap();
        let solved =
            potential_instance("pot_ode", 1.0, 3f64.sqrt(), anchor, (-1.0, 1.0), 0.1, 1.0, true)
                .unwrap();
        for p in [[0.1, -0.2, 0.6, 0.3], [0.0, 0.0, -0.8, 0.0]] {
            let fa = exact.frame_data_at(&p, 3).unwrap();
            let fb = solved.frame_data_at(&p, 3).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert_relative_eq!(
                        fa.g[i][j].value(),
                        fb.g[i][j].value(),
                        epsilon = 1e-9,
                        max_relative = 1e-9
                    );
                    assert_relative_eq!(
                        fa.omega.0[i][j].value(),
                        fb.omega.0[i][j].value(),
                        epsilon = 1e-9
                    );
                }
            }
            // Higher fiber derivatives survive the lift with full accuracy.
            assert_relative_eq!(
                fa.g[3][3].partial([0, 0, 2, 0]).unwrap(),
                fb.g[3][3].partial([0, 0, 2, 0]).unwrap(),
                epsilon = 1e-8,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn profile_is_monotonic_and_stays_inside_the_fiber_interval() {
        let inst =
            potential_instance("pot_generic", 1.0, 2.0, (0.0, 1.5), (-1.0, 1.0), 0.1, 2.0, false)
                .unwrap();
        let sig = inst.refs.sigma.as_ref().unwrap();
        let lo = sig(&[0.0, 0.0, -1.0, 0.0]) / 2.0;
        let mid = sig(&[0.0, 0.0, 0.0, 0.0]) / 2.0;
        let hi = sig(&[0.0, 0.0, 1.0, 0.0]) / 2.0;
        assert!(1.0 < lo && lo < mid && mid < hi && hi < 2.0);
        assert_relative_eq!(mid, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_profile_solves_its_equation() {
        let params = coefficients(1.0, 3f64.sqrt()).unwrap();
        let prof = PsiProfile {
            vc: params.v_coeffs(),
            kind: PsiKind::ClosedForm {
                a: 1.0,
                shift: 0.0,
            },
        };
        let j = prof.jet(0.4, 3).unwrap();
        let psi = j.value();
        let dpsi = j.partial([0, 0, 1, 0]).unwrap();
        assert_relative_eq!(
            dpsi,
            poly_val(&params.v_coeffs(), psi) / psi,
            max_relative = 1e-13
        );
    }

    #[test]
    fn momentum_chart_flags_follow_the_pencil() {
        let wsd = momentum_instance("mom_wsd", 1.0, 3f64.sqrt(), 0.1).unwrap();
        assert!(wsd.predictions.weakly_selfdual && !wsd.predictions.bach_flat);
        let generic = momentum_instance("mom_generic", 1.0, 2.0, 0.1).unwrap();
        assert!(generic.predictions.extremal && !generic.predictions.weakly_selfdual);
        assert!(matches!(generic.kind, FamilyKind::Hirzebruch));
    }
}
