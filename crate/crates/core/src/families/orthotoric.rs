//! Ortho-toric charts: two commuting hamiltonian Killing fields whose
//! momenta are the elementary symmetric functions of a coordinate pair
//! `(xi, eta)` with orthogonal differentials.
//!
//! The chart is driven by two one-variable profile polynomials `F` and `G`:
//!
//! ```text
//! g = (xi - eta) (dxi^2/F(xi) - deta^2/G(eta))
//!     + (F(xi) (dt + eta dz)^2 - G(eta) (dt + xi dz)^2) / (xi - eta)
//! omega   = dxi ^ (dt + eta dz) + deta ^ (dt + xi dz)
//! omega_I = dxi ^ (dt + eta dz) - deta ^ (dt + xi dz)
//! ```
//!
//! Riemannian signature requires `xi > eta`, `F(xi) > 0` and `G(eta) < 0`
//! on the chart.  The structure is Kähler for every profile pair; scalar
//! invariants have closed forms in terms of `F`, `G` and their first two
//! derivatives, and the structure is extremal precisely when `F` and `G`
//! are quartics sharing their three leading coefficients:
//!
//! ```text
//! F(x) = k x^4 + l x^3 + a x^2 + b1 x + c1
//! G(x) = k x^4 + l x^3 + a x^2 + b2 x + c2
//! ```

use super::{chart_jets, Box4, FamilyError, FamilyInstance, FamilyKind, FrameData, Predictions, References};
use crate::jets::{poly_eval, Jet};
use crate::tensor::TwoForm;

/// Coefficient list (low order first) of the shared-leading quartic family.
pub fn quartic(k: f64, l: f64, a: f64, b: f64, c: f64) -> Vec<f64> {
    vec![c, b, a, l, k]
}

fn poly_val(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn poly_d1(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &ci)| acc * x + i as f64 * ci)
}

fn poly_d2(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(2)
        .rev()
        .fold(0.0, |acc, (i, &ci)| acc * x + (i * (i - 1)) as f64 * ci)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs() + b.abs())
}

/// Coefficient (index 4 and up) padding for structural classification.
fn padded(c: &[f64]) -> Vec<f64> {
    let mut p = c.to_vec();
    while p.len() < 5 {
        p.push(0.0);
    }
    p
}

pub(crate) struct Structure {
    pub(crate) extremal: bool,
    pub(crate) biextremal: bool,
    pub(crate) k: f64,
    pub(crate) l: f64,
    pub(crate) b1: f64,
    pub(crate) b2: f64,
    pub(crate) c1: f64,
    pub(crate) c2: f64,
}

pub(crate) fn classify(fc: &[f64], gc: &[f64]) -> Structure {
    let fp = padded(fc);
    let gp = padded(gc);
    let tail_zero = fp[5..].iter().all(|&x| x == 0.0) && gp[5..].iter().all(|&x| x == 0.0);
    let extremal =
        tail_zero && close(fp[4], gp[4]) && close(fp[3], gp[3]) && close(fp[2], gp[2]);
    let biextremal = extremal && close(fp[1], gp[1]);
    Structure {
        extremal,
        biextremal,
        k: fp[4],
        l: fp[3],
        b1: fp[1],
        b2: gp[1],
        c1: fp[0],
        c2: gp[0],
    }
}

/// The normalized scalar curvature of the chart (valid for any profiles).
pub fn s_formula(fc: &[f64], gc: &[f64], xi: f64, eta: f64) -> f64 {
    -(poly_d2(fc, xi) - poly_d2(gc, eta)) / (6.0 * (xi - eta))
}

/// The coefficient of the trace-free Ricci form on `omega_I`.
pub fn mu_formula(fc: &[f64], gc: &[f64], xi: f64, eta: f64) -> f64 {
    let d = xi - eta;
    (poly_d1(fc, xi) - poly_d1(gc, eta)) / (2.0 * d * d)
        - (poly_d2(fc, xi) + poly_d2(gc, eta)) / (4.0 * d)
}

/// The conformal scalar curvature of the oppositely oriented Kähler pair.
pub fn kappa_formula(fc: &[f64], gc: &[f64], xi: f64, eta: f64) -> f64 {
    let d = xi - eta;
    -(poly_d2(fc, xi) - poly_d2(gc, eta)) / (6.0 * d)
        + (poly_d1(fc, xi) + poly_d1(gc, eta)) / (d * d)
        - 2.0 * (poly_val(fc, xi) - poly_val(gc, eta)) / (d * d * d)
}

/// Structural flags implied by a profile pair, given grid minima of the
/// closed-form `mu` and `kappa` over the sampling region.
pub(crate) fn profile_predictions(st: &Structure, mu_min: f64, kappa_min: f64) -> Predictions {
    let bach_flat = st.extremal && close(4.0 * st.k * (st.c1 - st.c2), (st.b1 - st.b2) * st.l);
    Predictions {
        kahler: true,
        symplectic: true,
        constant_scalar: st.extremal && st.k == 0.0,
        extremal: st.extremal,
        biextremal: st.biextremal,
        weakly_selfdual: st.biextremal,
        selfdual: st.biextremal && close(st.c1, st.c2),
        bach_flat,
        einstein: st.biextremal && st.k == 0.0,
        ricci_flat: st.biextremal && st.k == 0.0 && st.l == 0.0,
        rho0_nonvanishing: mu_min > 1e-3,
        wminus_nonvanishing: kappa_min > 1e-3,
        ricci_j_invariant: true,
    }
}

/// Assembles the chart tensors from jet-valued `(xi, eta)`; the momentum
/// charts reuse this with `(xi, eta)` given as functions of their own
/// coordinates.
pub(crate) fn assemble_chart(
    xi: &Jet,
    eta: &Jet,
    fc: &[f64],
    gc: &[f64],
    order: usize,
    point: &[f64; 4],
) -> Result<FrameData, FamilyError> {
    let d = xi - eta;
    if d.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "xi - eta",
            value: d.value(),
            point: *point,
        });
    }
    let f = poly_eval(fc, xi);
    if f.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "F(xi)",
            value: f.value(),
            point: *point,
        });
    }
    let g = poly_eval(gc, eta);
    if g.value() >= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "G(eta)",
            value: g.value(),
            point: *point,
        });
    }

    let dinv = d.recip()?;
    let zero = Jet::constant(0.0, order);
    let mut gm = [
        [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
        [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
        [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
        [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
    ];
    gm[0][0] = &d / &f;
    gm[1][1] = -(&d / &g);
    gm[2][2] = (&f - &g) * &dinv;
    gm[2][3] = (&f * eta - &g * xi) * &dinv;
    gm[3][2] = gm[2][3].clone();
    gm[3][3] = (&f * (eta * eta) - &g * (xi * xi)) * &dinv;

    let one = Jet::constant(1.0, order);
    let omega = TwoForm::from_upper(
        order,
        [
            zero.clone(),
            one.clone(),
            eta.clone(),
            one.clone(),
            xi.clone(),
            zero.clone(),
        ],
    );
    let omega_i = TwoForm::from_upper(
        order,
        [zero.clone(), one.clone(), eta.clone(), -&one, -xi, zero],
    );
    let sigma = xi + eta;
    let phi = omega_i
        .scale_jet(&(&d * 0.5))
        .add(&omega.scale_jet(&(&sigma * 1.5)));

    Ok(FrameData {
        g: gm,
        omega,
        omega_i: Some(omega_i),
        phi: Some(phi),
    })
}

/// Builds an ortho-toric family member from profile coefficient lists
/// (low order first).  Chart coordinates are `(xi, eta, t, z)`.
pub fn instance(
    name: &str,
    f_coeffs: &[f64],
    g_coeffs: &[f64],
    domain: Box4,
    margin: f64,
) -> FamilyInstance {
    let st = classify(f_coeffs, g_coeffs);
    let fc = f_coeffs.to_vec();
    let gc = g_coeffs.to_vec();

    // Scan closed-form scalars over the sampling box to decide whether the
    // trace-free Ricci form and the distinguished Weyl half stay away from
    // zero (sufficient conditions; used to enable nondegeneracy checks).
    let sample = domain.shrink(margin);
    let mut mu_min = f64::INFINITY;
    let mut kappa_min = f64::INFINITY;
    for i in 0..9 {
        for j in 0..9 {
            let xi = sample.lo[0] + (sample.hi[0] - sample.lo[0]) * i as f64 / 8.0;
            let eta = sample.lo[1] + (sample.hi[1] - sample.lo[1]) * j as f64 / 8.0;
            mu_min = mu_min.min(mu_formula(&fc, &gc, xi, eta).abs());
            kappa_min = kappa_min.min(kappa_formula(&fc, &gc, xi, eta).abs());
        }
    }

    let predictions = profile_predictions(&st, mu_min, kappa_min);

    let refs = References {
        s: Some({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |p: &[f64; 4]| s_formula(&fc, &gc, p[0], p[1]))
        }),
        mu: Some({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |p: &[f64; 4]| mu_formula(&fc, &gc, p[0], p[1]))
        }),
        kappa: Some({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |p: &[f64; 4]| kappa_formula(&fc, &gc, p[0], p[1]))
        }),
        lambda: Some({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |p: &[f64; 4]| mu_formula(&fc, &gc, p[0], p[1]).abs())
        }),
        p: Some({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |p: &[f64; 4]| {
                let s = s_formula(&fc, &gc, p[0], p[1]);
                let mu = mu_formula(&fc, &gc, p[0], p[1]);
                0.25 * s * s - mu * mu
            })
        }),
        sigma: Some(Box::new(|p: &[f64; 4]| p[0] + p[1])),
        pi: Some(Box::new(|p: &[f64; 4]| p[0] * p[1])),
        theta: Some(Box::new(|p: &[f64; 4]| {
            let d = p[0] - p[1];
            [-1.0 / d, 1.0 / d, 0.0, 0.0]
        })),
        bach_form_coeff: if st.extremal {
            let (k, l, b1, b2, c1, c2) = (st.k, st.l, st.b1, st.b2, st.c1, st.c2);
            Some(Box::new(move |p: &[f64; 4]| {
                let d = p[0] - p[1];
                (4.0 * k * (c1 - c2) - (b1 - b2) * l) / (2.0 * d * d)
            }))
        } else {
            None
        },
        kappa_lambda_cubed: if st.biextremal && st.k != 0.0 {
            Some(-2.0 * (st.c1 - st.c2) * st.k.abs().powi(3))
        } else {
            None
        },
        ricci_potential: Some({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |p: &[f64; 4], order: usize| {
                let [xi, eta, _, _] = chart_jets(p, order);
                let f = poly_eval(&fc, &xi);
                let g = poly_eval(&gc, &eta);
                // F > 0 and G < 0 on the chart, so log|FG| = log F + log(-G).
                Ok(f.ln()? + (-g).ln()?)
            })
        }),
        conformal_factor: if st.biextremal && st.k != 0.0 {
            // lambda = |mu| = |k| (xi - eta), positive on the chart.
            let k_abs = st.k.abs();
            Some(Box::new(move |p: &[f64; 4], order: usize| {
                let [xi, eta, _, _] = chart_jets(p, order);
                Ok((xi - eta) * k_abs)
            }))
        } else {
            None
        },
    };

    let (fc_b, gc_b) = (fc.clone(), gc.clone());
    let builder = Box::new(move |p: &[f64; 4], order: usize| {
        let [xi, eta, _, _] = chart_jets(p, order);
        assemble_chart(&xi, &eta, &fc_b, &gc_b, order, p)
    });

    FamilyInstance::new(
        name,
        FamilyKind::OrthoToric,
        ["xi", "eta", "t", "z"],
        domain,
        margin,
        predictions,
        refs,
        builder,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e1_like() -> FamilyInstance {
        instance(
            "orthotoric_test",
            &quartic(1.0, 0.0, 0.0, 0.0, 1.0),
            &quartic(1.0, 0.0, 0.0, 0.0, -1.0),
            Box4::new([1.2, 0.2, 0.0, 0.0], [1.8, 0.8, 1.0, 1.0]),
            0.1,
        )
    }

    #[test]
    fn structural_flags_follow_from_profiles() {
        let inst = e1_like();
        assert!(inst.predictions.extremal);
        assert!(inst.predictions.biextremal);
        assert!(inst.predictions.weakly_selfdual);
        assert!(!inst.predictions.selfdual);
        assert!(!inst.predictions.bach_flat);
        assert!(!inst.predictions.einstein);
        assert!(inst.predictions.rho0_nonvanishing);
        assert!(inst.predictions.wminus_nonvanishing);
        assert_relative_eq!(inst.refs.kappa_lambda_cubed.unwrap(), -4.0);

        let flat = instance(
            "flat_test",
            &[0.0, 1.0],
            &[0.0, 1.0],
            Box4::new([0.5, -1.5, 0.0, 0.0], [1.5, -0.5, 1.0, 1.0]),
            0.1,
        );
        assert!(flat.predictions.ricci_flat && flat.predictions.selfdual);
        assert!(flat.predictions.bach_flat && flat.predictions.constant_scalar);

        let bach = instance(
            "bach_test",
            &[0.0, 2.0, 0.0, 2.0, 1.0],
            &[-1.0, 0.0, 0.0, 2.0, 1.0],
            Box4::new([1.2, 0.1, 0.0, 0.0], [1.8, 0.6, 1.0, 1.0]),
            0.1,
        );
        assert!(bach.predictions.extremal && bach.predictions.bach_flat);
        assert!(!bach.predictions.weakly_selfdual);
    }

    #[test]
    fn closed_form_scalars_match_quartic_reductions() {
        let fc = quartic(1.0, 0.5, 0.25, 2.0, 1.0);
        let gc = quartic(1.0, 0.5, 0.25, 2.0, -1.0);
        let (xi, eta) = (1.4, 0.3);
        // Shared-leading quartics with equal linear terms reduce to
        // s = -2k(xi+eta) - l and mu = -k(xi-eta).
        assert_relative_eq!(
            s_formula(&fc, &gc, xi, eta),
            -2.0 * (xi + eta) - 0.5,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            mu_formula(&fc, &gc, xi, eta),
            -(xi - eta),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            kappa_formula(&fc, &gc, xi, eta),
            -2.0 * 2.0 / (xi - eta).powi(3),
            max_relative = 1e-13
        );
    }

    #[test]
    fn chart_has_expected_signature_and_forms() {
        let inst = e1_like();
        let p = inst.domain.center();
        let data = inst.frame_data_at(&p, 2).unwrap();
        // Diagonal block positivity and symmetry of the angular block.
        assert!(data.g[0][0].value() > 0.0 && data.g[1][1].value() > 0.0);
        assert_eq!(data.g[2][3], data.g[3][2]);
        assert_eq!(data.omega.0[0][2].value(), 1.0);
        assert_eq!(data.omega.0[1][3].value(), p[0]);
        let phi = data.phi.unwrap();
        // phi trace potential: phi breaks into (xi-eta)/2 omega_I
        // + 3(xi+eta)/2 omega, so its (1,2) entry is 3sigma/2 - d/2.
        let d = p[0] - p[1];
        let sigma = p[0] + p[1];
        assert_relative_eq!(phi.0[1][2].value(), 1.5 * sigma - 0.5 * d, max_relative = 1e-14);
    }

    #[test]
    fn signature_guards_fire() {
        let inst = instance(
            "guard_test",
            &quartic(1.0, 0.0, 0.0, 0.0, 1.0),
            &quartic(1.0, 0.0, 0.0, 0.0, -1.0),
            Box4::new([0.0, -0.5, 0.0, 0.0], [2.5, 2.4, 1.0, 1.0]),
            0.0,
        );
        // eta above xi flips the coordinate gap.
        let err = inst.frame_data_at(&[1.0, 2.0, 0.5, 0.5], 1).unwrap_err();
        assert!(matches!(
            err,
            FamilyError::SignatureViolation { what: "xi - eta", .. }
        ));
        // eta with G(eta) > 0.
        let err = inst.frame_data_at(&[2.2, 1.5, 0.5, 0.5], 1).unwrap_err();
        assert!(matches!(
            err,
            FamilyError::SignatureViolation { what: "G(eta)", .. }
        ));
    }
}
