//! Momentum charts: two commuting hamiltonian Killing fields with
//! Poisson-commuting momenta `(x1, x2)` and angular coordinates
//! `(t1, t2)`, with `omega = dx1 ^ dt1 + dx2 ^ dt2`.
//!
//! Two constructions live here:
//!
//! * a change of variables from the ortho-toric chart via the elementary
//!   symmetric functions `x1 = xi + eta`, `x2 = xi eta` — the full tensor
//!   pullback is carried out in exact jet arithmetic, so every invariant
//!   must agree with the ortho-toric chart at matched points (coordinate
//!   covariance oracle);
//! * the general momentum-block form `g = G_ab dx^a dx^b + H_ab dt^a dt^b`
//!   with `H = G^{-1}`, which is almost Kähler for any symmetric positive
//!   `G` but Kähler only when `G` is a Hessian.  A non-Hessian choice of
//!   `G` is the integrability negative control.

use super::{
    chart_jets, orthotoric, Box4, FamilyError, FamilyInstance, FamilyKind, FrameData,
    Predictions, References,
};
use crate::jets::{poly_eval, Jet};
use crate::tensor::{mat4_from_fn, Mat4, TwoForm};

/// Solves `x1 = xi + eta`, `x2 = xi eta` for `xi >= eta` at a point.
fn roots(x1: f64, x2: f64) -> (f64, f64) {
    let r = (x1 * x1 - 4.0 * x2).sqrt();
    (0.5 * (x1 + r), 0.5 * (x1 - r))
}

fn pullback2(f: &TwoForm, jac: &Mat4) -> TwoForm {
    TwoForm(mat4_from_fn(|a, b| {
        let mut acc = Jet::constant(0.0, f.0[0][1].order());
        for i in 0..4 {
            for j in 0..4 {
                acc = acc + &f.0[i][j] * &jac[i][a] * &jac[j][b];
            }
        }
        acc
    }))
}

/// Momentum-chart member equivalent to an ortho-toric profile pair.
/// Chart coordinates are `(x1, x2, t1, t2)`; the domain must keep
/// `x1^2 - 4 x2` positive.
pub fn from_orthotoric_profiles(
    name: &str,
    f_coeffs: &[f64],
    g_coeffs: &[f64],
    domain: Box4,
    margin: f64,
) -> FamilyInstance {
    let st = orthotoric::classify(f_coeffs, g_coeffs);
    let fc = f_coeffs.to_vec();
    let gc = g_coeffs.to_vec();

    let sample = domain.shrink(margin);
    let mut mu_min = f64::INFINITY;
    let mut kappa_min = f64::INFINITY;
    for i in 0..9 {
        for j in 0..9 {
            let x1 = sample.lo[0] + (sample.hi[0] - sample.lo[0]) * i as f64 / 8.0;
            let x2 = sample.lo[1] + (sample.hi[1] - sample.lo[1]) * j as f64 / 8.0;
            let (xi, eta) = roots(x1, x2);
            mu_min = mu_min.min(orthotoric::mu_formula(&fc, &gc, xi, eta).abs());
            kappa_min = kappa_min.min(orthotoric::kappa_formula(&fc, &gc, xi, eta).abs());
        }
    }
    let predictions = orthotoric::profile_predictions(&st, mu_min, kappa_min);

    let wrap = |f: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>| -> super::ScalarRef {
        Box::new(move |p: &[f64; 4]| {
            let (xi, eta) = roots(p[0], p[1]);
            f(xi, eta)
        })
    };
    let refs = References {
        s: Some(wrap({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |xi, eta| orthotoric::s_formula(&fc, &gc, xi, eta))
        })),
        mu: Some(wrap({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |xi, eta| orthotoric::mu_formula(&fc, &gc, xi, eta))
        })),
        kappa: Some(wrap({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |xi, eta| orthotoric::kappa_formula(&fc, &gc, xi, eta))
        })),
        lambda: Some(wrap({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |xi, eta| orthotoric::mu_formula(&fc, &gc, xi, eta).abs())
        })),
        p: Some(wrap({
            let (fc, gc) = (fc.clone(), gc.clone());
            Box::new(move |xi, eta| {
                let s = orthotoric::s_formula(&fc, &gc, xi, eta);
                let mu = orthotoric::mu_formula(&fc, &gc, xi, eta);
                0.25 * s * s - mu * mu
            })
        })),
        sigma: Some(Box::new(|p: &[f64; 4]| p[0])),
        pi: Some(Box::new(|p: &[f64; 4]| p[1])),
        // theta = -d log(xi - eta) expressed in momentum coordinates.
        theta: Some(Box::new(|p: &[f64; 4]| {
            let disc = p[0] * p[0] - 4.0 * p[1];
            [-p[0] / disc, 2.0 / disc, 0.0, 0.0]
        })),
        bach_form_coeff: if st.extremal {
            let (k, l, b1, b2, c1, c2) = (st.k, st.l, st.b1, st.b2, st.c1, st.c2);
            Some(Box::new(move |p: &[f64; 4]| {
                let disc = p[0] * p[0] - 4.0 * p[1];
                (4.0 * k * (c1 - c2) - (b1 - b2) * l) / (2.0 * disc)
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
                let (xi, eta) = momentum_roots_jets(p, order)?;
                let f = poly_eval(&fc, &xi);
                let g = poly_eval(&gc, &eta);
                Ok(f.ln()? + (-g).ln()?)
            })
        }),
        conformal_factor: if st.biextremal && st.k != 0.0 {
            // lambda = |k| (xi - eta) expressed through the momentum roots.
            let k_abs = st.k.abs();
            Some(Box::new(move |p: &[f64; 4], order: usize| {
                let (xi, eta) = momentum_roots_jets(p, order)?;
                Ok((xi - eta) * k_abs)
            }))
        } else {
            None
        },
    };

    let (fc_b, gc_b) = (fc.clone(), gc.clone());
    let builder = Box::new(move |p: &[f64; 4], order: usize| {
        let (xi, eta) = momentum_roots_jets(p, order)?;
        let data = orthotoric::assemble_chart(&xi, &eta, &fc_b, &gc_b, order, p)?;

        // Jacobian of the chart map (x1,x2,t1,t2) -> (xi,eta,t,z), with the
        // root derivatives in closed form so no jet order is lost.
        let [x1, _, _, _] = chart_jets(p, order);
        let rinv = (&xi - &eta).recip()?;
        let zero = Jet::constant(0.0, order);
        let one = Jet::constant(1.0, order);
        let mut jac = mat4_from_fn(|_, _| zero.clone());
        jac[0][0] = (&one + &x1 * &rinv) * 0.5;
        jac[0][1] = -&rinv;
        jac[1][0] = (&one - &x1 * &rinv) * 0.5;
        jac[1][1] = rinv.clone();
        jac[2][2] = one.clone();
        jac[3][3] = one;

        let g = mat4_from_fn(|a, b| {
            let mut acc = zero.clone();
            for i in 0..4 {
                for j in 0..4 {
                    acc = acc + &data.g[i][j] * &jac[i][a] * &jac[j][b];
                }
            }
            acc
        });
        Ok(FrameData {
            g,
            omega: pullback2(&data.omega, &jac),
            omega_i: data.omega_i.as_ref().map(|f| pullback2(f, &jac)),
            phi: data.phi.as_ref().map(|f| pullback2(f, &jac)),
        })
    });

    FamilyInstance::new(
        name,
        FamilyKind::Toric,
        ["x1", "x2", "t1", "t2"],
        domain,
        margin,
        predictions,
        refs,
        builder,
    )
}

fn momentum_roots_jets(p: &[f64; 4], order: usize) -> Result<(Jet, Jet), FamilyError> {
    let [x1, x2, _, _] = chart_jets(p, order);
    let disc = &x1 * &x1 - &x2 * 4.0;
    if disc.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "x1^2 - 4 x2",
            value: disc.value(),
            point: *p,
        });
    }
    let r = disc.sqrt()?;
    Ok(((&x1 + &r) * 0.5, (&x1 - &r) * 0.5))
}

/// General momentum-block chart with `H = G^{-1}` read off a symmetric
/// positive momentum matrix that is *not* a Hessian: the structure is
/// almost Kähler (the fundamental form is closed) but not integrable.
pub fn non_hessian_instance(name: &str, domain: Box4, margin: f64) -> FamilyInstance {
    let predictions = Predictions {
        kahler: false,
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
        // The chart is built to break this hypothesis; the verification
        // layer asserts the anti-invariant Ricci part is visibly nonzero.
        ricci_j_invariant: false,
    };

    let builder = Box::new(move |p: &[f64; 4], order: usize| {
        let [x1, x2, _, _] = chart_jets(p, order);
        // Rows of G are not curl-free (d/dx2 of G11 is 2 x2, d/dx1 of G12
        // is x2/4), so G is not a Hessian and the chart is non-integrable.
        let g11 = &x2 * &x2 + 1.0;
        let g22 = &x1 * &x1 + 1.0;
        let g12 = (&x1 * &x2) * 0.25;
        let det = &g11 * &g22 - &g12 * &g12;
        if det.value() <= 0.0 || g11.value() <= 0.0 {
            return Err(FamilyError::SignatureViolation {
                what: "momentum block",
                value: det.value(),
                point: *p,
            });
        }
        let dinv = det.recip()?;
        let h11 = &g22 * &dinv;
        let h22 = &g11 * &dinv;
        let h12 = -(&g12 * &dinv);

        let zero = Jet::constant(0.0, order);
        let one = Jet::constant(1.0, order);
        let mut gm = mat4_from_fn(|_, _| zero.clone());
        gm[0][0] = g11;
        gm[0][1] = g12.clone();
        gm[1][0] = g12;
        gm[1][1] = g22;
        gm[2][2] = h11;
        gm[2][3] = h12.clone();
        gm[3][2] = h12;
        gm[3][3] = h22;

        let omega = TwoForm::from_upper(
            order,
            [zero.clone(), one.clone(), zero.clone(), zero.clone(), one, zero],
        );
        Ok(FrameData {
            g: gm,
            omega,
            omega_i: None,
            phi: None,
        })
    });

    FamilyInstance::new(
        name,
        FamilyKind::Toric,
        ["x1", "x2", "t1", "t2"],
        domain,
        margin,
        predictions,
        References::default(),
        builder,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn momentum_e1() -> FamilyInstance {
        from_orthotoric_profiles(
            "momentum_test",
            &orthotoric::quartic(1.0, 0.0, 0.0, 0.0, 1.0),
            &orthotoric::quartic(1.0, 0.0, 0.0, 0.0, -1.0),
            Box4::new([1.9, 0.5, 0.0, 0.0], [2.4, 0.85, 1.0, 1.0]),
            0.1,
        )
    }

    #[test]
    fn pullback_fundamental_form_is_canonical() {
        let inst = momentum_e1();
        let p = inst.domain.center();
        let data = inst.frame_data_at(&p, 3).unwrap();
        // omega must pull back to dx1 ^ dt1 + dx2 ^ dt2 exactly.
        for i in 0..4 {
            for j in 0..4 {
                let expected = match (i, j) {
                    (0, 2) | (1, 3) => 1.0,
                    (2, 0) | (3, 1) => -1.0,
                    _ => 0.0,
                };
                assert_relative_eq!(data.omega.0[i][j].value(), expected, epsilon = 1e-12);
                // All Taylor coefficients above the constant must vanish.
                assert!(
                    (&data.omega.0[i][j] - expected).max_abs_coeff() < 1e-12,
                    "omega pullback not constant at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn momentum_refs_match_root_substitution() {
        let inst = momentum_e1();
        let p = [2.1, 0.7, 0.3, 0.4];
        let (xi, eta) = roots(2.1, 0.7);
        assert_relative_eq!(xi + eta, 2.1, epsilon = 1e-14);
        assert_relative_eq!(xi * eta, 0.7, epsilon = 1e-14);
        let s_ref = inst.refs.s.as_ref().unwrap()(&p);
        assert_relative_eq!(s_ref, -2.0 * 2.1, epsilon = 1e-12);
        let mu_ref = inst.refs.mu.as_ref().unwrap()(&p);
        assert_relative_eq!(mu_ref, -(xi - eta), epsilon = 1e-12);
    }

    #[test]
    fn non_hessian_block_inverts_cleanly() {
        let inst = non_hessian_instance(
            "nh",
            Box4::new([-0.5, -0.5, 0.0, 0.0], [0.5, 0.5, 1.0, 1.0]),
            0.1,
        );
        assert!(!inst.predictions.kahler && inst.predictions.symplectic);
        let data = inst.frame_data_at(&[0.2, -0.3, 0.1, 0.9], 2).unwrap();
        // Momentum and angular blocks are mutually inverse.
        let gblock = [
            [data.g[0][0].value(), data.g[0][1].value()],
            [data.g[1][0].value(), data.g[1][1].value()],
        ];
        let hblock = [
            [data.g[2][2].value(), data.g[2][3].value()],
            [data.g[3][2].value(), data.g[3][3].value()],
        ];
        for a in 0..2 {
            for b in 0..2 {
                let prod = gblock[a][0] * hblock[0][b] + gblock[a][1] * hblock[1][b];
                let expected = if a == b { 1.0 } else { 0.0 };
                assert_relative_eq!(prod, expected, epsilon = 1e-12);
            }
        }
    }
}
