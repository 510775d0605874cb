//! Products of two constant-curvature surfaces in isothermal charts.
//!
//! Each factor carries the metric `(dx^2 + dy^2)/D^2` with
//! `D = 1 + (k/4)(x^2 + y^2)`, which has constant Gauss curvature `k`.
//! The product is Kähler with parallel Ricci form `k1 w1 + k2 w2`, so every
//! scalar invariant is constant:
//!
//! ```text
//! s = (k1 + k2)/3      mu = (k1 - k2)/2      kappa = (k1 + k2)/3
//! ```
//!
//! The reference anti-selfdual form is `w1 - w2`, which is closed, so the
//! oppositely oriented pair is Kähler too and its Lee form vanishes.

use super::{chart_jets, Box4, FamilyError, FamilyInstance, FamilyKind, FrameData, Predictions, References};
use crate::jets::Jet;
use crate::tensor::TwoForm;

/// Builds a constant-curvature surface product on the chart
/// `(x1, y1, x2, y2)`.
pub fn instance(name: &str, k1: f64, k2: f64, domain: Box4, margin: f64) -> FamilyInstance {
    let s = (k1 + k2) / 3.0;
    let mu = (k1 - k2) / 2.0;
    let kappa = s;

    let predictions = Predictions {
        kahler: true,
        symplectic: true,
        constant_scalar: true,
        extremal: true,
        biextremal: true,
        weakly_selfdual: true,
        selfdual: kappa == 0.0,
        bach_flat: kappa == 0.0 || mu == 0.0,
        einstein: mu == 0.0,
        ricci_flat: k1 == 0.0 && k2 == 0.0,
        rho0_nonvanishing: mu.abs() > 1e-3,
        wminus_nonvanishing: kappa.abs() > 1e-3,
        ricci_j_invariant: true,
    };

    let refs = References {
        s: Some(Box::new(move |_: &[f64; 4]| s)),
        mu: Some(Box::new(move |_: &[f64; 4]| mu)),
        kappa: Some(Box::new(move |_: &[f64; 4]| kappa)),
        lambda: Some(Box::new(move |_: &[f64; 4]| mu.abs())),
        p: Some(Box::new(move |_: &[f64; 4]| 0.25 * s * s - mu * mu)),
        // The Ricci form itself serves as the hamiltonian two-form; both
        // potentials are constant because it is parallel.
        sigma: Some(Box::new(move |_: &[f64; 4]| s)),
        pi: Some(Box::new(move |_: &[f64; 4]| 0.25 * s * s - mu * mu)),
        theta: Some(Box::new(|_: &[f64; 4]| [0.0; 4])),
        bach_form_coeff: Some(Box::new(move |_: &[f64; 4]| kappa * mu)),
        kappa_lambda_cubed: if mu != 0.0 {
            Some(kappa * mu.abs().powi(3))
        } else {
            None
        },
        ricci_potential: Some(Box::new(move |p: &[f64; 4], order: usize| {
            let [x1, y1, x2, y2] = chart_jets(p, order);
            let d1 = (&x1 * &x1 + &y1 * &y1) * (k1 / 4.0) + 1.0;
            let d2 = (&x2 * &x2 + &y2 * &y2) * (k2 / 4.0) + 1.0;
            Ok(-(d1.ln()? + d2.ln()?) * 2.0)
        })),
        conformal_factor: if mu != 0.0 {
            // lambda = |mu| is constant; the rescaled metric is a homothety.
            Some(Box::new(move |_: &[f64; 4], order: usize| {
                Ok(Jet::constant(mu.abs(), order))
            }))
        } else {
            None
        },
    };

    let builder = Box::new(move |p: &[f64; 4], order: usize| {
        let [x1, y1, x2, y2] = chart_jets(p, order);
        let d1 = (&x1 * &x1 + &y1 * &y1) * (k1 / 4.0) + 1.0;
        let d2 = (&x2 * &x2 + &y2 * &y2) * (k2 / 4.0) + 1.0;
        if d1.value() <= 0.0 {
            return Err(FamilyError::SignatureViolation {
                what: "D1",
                value: d1.value(),
                point: *p,
            });
        }
        if d2.value() <= 0.0 {
            return Err(FamilyError::SignatureViolation {
                what: "D2",
                value: d2.value(),
                point: *p,
            });
        }
        let c1 = (&d1 * &d1).recip()?;
        let c2 = (&d2 * &d2).recip()?;

        let zero = Jet::constant(0.0, order);
        let mut gm = [
            [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
            [zero.clone(), zero.clone(), zero.clone(), zero.clone()],
        ];
        gm[0][0] = c1.clone();
        gm[1][1] = c1.clone();
        gm[2][2] = c2.clone();
        gm[3][3] = c2.clone();

        // w1 = dx1 ^ dy1 / D1^2 on slots (0,1); w2 likewise on (2,3).
        let omega = TwoForm::from_upper(
            order,
            [
                c1.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                c2.clone(),
            ],
        );
        let omega_i = TwoForm::from_upper(
            order,
            [
                c1.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                -&c2,
            ],
        );
        let phi = TwoForm::from_upper(
            order,
            [
                &c1 * k1,
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                &c2 * k2,
            ],
        );

        Ok(FrameData {
            g: gm,
            omega,
            omega_i: Some(omega_i),
            phi: Some(phi),
        })
    });

    FamilyInstance::new(
        name,
        FamilyKind::Product,
        ["x1", "y1", "x2", "y2"],
        domain,
        margin,
        predictions,
        refs,
        builder,
    )
}

/// Standard sampling box keeping both conformal factors positive for
/// curvatures down to `k = -4`.
pub fn standard_domain() -> Box4 {
    Box4::new([-0.5, -0.5, -0.5, -0.5], [0.5, 0.5, 0.5, 0.5])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_logic_covers_the_constant_cases() {
        let sd = instance("sd", 2.0, -2.0, standard_domain(), 0.1);
        assert!(sd.predictions.selfdual && sd.predictions.bach_flat);
        assert!(sd.predictions.rho0_nonvanishing && !sd.predictions.wminus_nonvanishing);

        let ke = instance("ke", 1.0, 1.0, standard_domain(), 0.1);
        assert!(ke.predictions.einstein && ke.predictions.bach_flat);
        assert!(!ke.predictions.rho0_nonvanishing);

        let generic = instance("g", 1.0, -2.0, standard_domain(), 0.1);
        assert!(!generic.predictions.selfdual && !generic.predictions.bach_flat);
        assert!(generic.predictions.weakly_selfdual);
        assert_eq!(generic.refs.kappa_lambda_cubed.unwrap(), (-1.0 / 3.0) * 1.5f64.powi(3));
    }

    #[test]
    fn metric_blocks_are_conformally_round() {
        let inst = instance("g", 1.0, -2.0, standard_domain(), 0.1);
        let data = inst.frame_data_at(&[0.2, -0.1, 0.3, 0.4], 2).unwrap();
        assert_eq!(data.g[0][0], data.g[1][1]);
        assert_eq!(data.g[2][2], data.g[3][3]);
        assert_eq!(data.g[0][2].value(), 0.0);
        assert_eq!(data.omega.0[0][1], data.g[0][0]);
        assert_eq!(data.omega.0[2][3], data.g[2][2]);
    }
}
