//! Line-bundle charts over a constant-curvature surface ("Calabi type"):
//! a Kähler surface with a nowhere-zero hamiltonian Killing field whose
//! oppositely oriented Hermitian pair is conformally Kähler.
//!
//! With base metric `g_S = (dx^2 + dy^2)/D^2`, `D = 1 + (eps/4)(x^2+y^2)`
//! of constant Gauss curvature `eps`, connection form `alpha` with
//! `d alpha = omega_S`, fiber momentum `z > 0` and vertical profile
//!
//! ```text
//! V(z) = A1 z^4 + A2 z^3 + eps z^2 + A3 z + A4,
//! ```
//!
//! the chart is
//!
//! ```text
//! g = z g_S + (z/V) dz^2 + (V/z)(dt + alpha)^2
//! omega   =  z omega_S + dz ^ (dt + alpha)
//! omega_I = -z omega_S + dz ^ (dt + alpha)
//! phi     =  z omega_I + 3 z omega
//! ```
//!
//! Every member is an extremal Kähler surface; the scalar invariants are
//! functions of `z` alone:
//!
//! ```text
//! mu = -A1 z + A3/(2 z^2)     s = -2 A1 z - A2     kappa = -A3/z^2 - 2 A4/z^3
//! ```
//!
//! The fiber momentum enters the assembly as a jet together with its
//! coordinate differential, so fibered charts can reparametrize `z`
//! through a profile function without losing jet order.

use super::{chart_jets, Box4, FamilyError, FamilyInstance, FamilyKind, FrameData, Predictions, References};
use crate::jets::{poly_eval, Jet};
use crate::tensor::{mat4_from_fn, TwoForm};

/// Parameters of a Calabi-type member.
#[derive(Debug, Clone, Copy)]
pub struct CalabiParams {
    /// Gauss curvature of the base (also the quadratic profile coefficient).
    pub eps: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    /// Exact gauge shift of the connection form by `c0 dx + c1 dy`; the
    /// chart is isometric for any value, which makes this a covariance
    /// control knob.
    pub gauge: [f64; 2],
}

impl CalabiParams {
    pub fn new(eps: f64, a1: f64, a2: f64, a3: f64, a4: f64) -> CalabiParams {
        CalabiParams {
            eps,
            a1,
            a2,
            a3,
            a4,
            gauge: [0.0, 0.0],
        }
    }

    pub fn with_gauge(mut self, gauge: [f64; 2]) -> CalabiParams {
        self.gauge = gauge;
        self
    }

    /// Vertical profile coefficients, low order first.
    pub fn v_coeffs(&self) -> [f64; 5] {
        [self.a4, self.a3, self.eps, self.a2, self.a1]
    }
}

/// Assembles the chart tensors with the fiber momentum supplied as a jet
/// along with its coordinate differential components.
pub(crate) fn assemble_chart(
    order: usize,
    point: &[f64; 4],
    x: &Jet,
    y: &Jet,
    z: &Jet,
    dz: &[Jet; 4],
    eps: f64,
    v_coeffs: &[f64],
    gauge: [f64; 2],
) -> Result<FrameData, FamilyError> {
    if z.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "z",
            value: z.value(),
            point: *point,
        });
    }
    let d = (x * x + y * y) * (eps / 4.0) + 1.0;
    if d.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "D",
            value: d.value(),
            point: *point,
        });
    }
    let v = poly_eval(v_coeffs, z);
    if v.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "V(z)",
            value: v.value(),
            point: *point,
        });
    }

    let zero = Jet::constant(0.0, order);
    let conf = (&d * &d).recip()?; // 1/D^2
    let half_d = (&d * 2.0).recip()?;
    // alpha = (x dy - y dx)/(2D) + gauge, so d(alpha) = omega_S exactly.
    let alpha = [
        -(y * &half_d) + gauge[0],
        x * &half_d + gauge[1],
        zero.clone(),
        zero.clone(),
    ];
    // tau = dt + alpha; t is the last chart coordinate.
    let tau = [
        alpha[0].clone(),
        alpha[1].clone(),
        zero.clone(),
        Jet::constant(1.0, order),
    ];

    let z_over_v = z / &v;
    let v_over_z = &v / z;
    let g = mat4_from_fn(|a, b| {
        let mut acc = &z_over_v * (&dz[a] * &dz[b]) + &v_over_z * (&tau[a] * &tau[b]);
        if a < 2 && b < 2 && a == b {
            acc = acc + z * &conf;
        }
        acc
    });

    let base = z * &conf; // z * omega_S coefficient on dx ^ dy
    let fiber = mat4_from_fn(|a, b| &dz[a] * &tau[b] - &dz[b] * &tau[a]);
    let mut omega = TwoForm(fiber.clone());
    omega.0[0][1] = &omega.0[0][1] + &base;
    omega.0[1][0] = &omega.0[1][0] - &base;
    let mut omega_i = TwoForm(fiber);
    omega_i.0[0][1] = &omega_i.0[0][1] - &base;
    omega_i.0[1][0] = &omega_i.0[1][0] + &base;

    let phi = omega_i.scale_jet(z).add(&omega.scale_jet(&(z * 3.0)));

    Ok(FrameData {
        g,
        omega,
        omega_i: Some(omega_i),
        phi: Some(phi),
    })
}

/// Builds a Calabi-type member on the chart `(x, y, z, t)`.
pub fn instance(name: &str, params: CalabiParams, domain: Box4, margin: f64) -> FamilyInstance {
    let CalabiParams { eps, a1, a2, a3, a4, gauge } = params;
    let vc = params.v_coeffs();

    let mu = move |z: f64| -a1 * z + a3 / (2.0 * z * z);
    let s = move |z: f64| -2.0 * a1 * z - a2;
    let kappa = move |z: f64| -a3 / (z * z) - 2.0 * a4 / (z * z * z);

    let sample = domain.shrink(margin);
    let mut mu_min = f64::INFINITY;
    let mut kappa_min = f64::INFINITY;
    for i in 0..17 {
        let z = sample.lo[2] + (sample.hi[2] - sample.lo[2]) * i as f64 / 16.0;
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

    let refs = References {
        s: Some(Box::new(move |p: &[f64; 4]| s(p[2]))),
        mu: Some(Box::new(move |p: &[f64; 4]| mu(p[2]))),
        kappa: Some(Box::new(move |p: &[f64; 4]| kappa(p[2]))),
        lambda: Some(Box::new(move |p: &[f64; 4]| mu(p[2]).abs())),
        p: Some(Box::new(move |p: &[f64; 4]| {
            let (sv, mv) = (s(p[2]), mu(p[2]));
            0.25 * sv * sv - mv * mv
        })),
        sigma: Some(Box::new(|p: &[f64; 4]| 2.0 * p[2])),
        // The hamiltonian potentials are xi = 2z, eta = 0, so the pfaffian
        // potential vanishes identically.
        pi: Some(Box::new(|_: &[f64; 4]| 0.0)),
        theta: Some(Box::new(|p: &[f64; 4]| [0.0, 0.0, -1.0 / p[2], 0.0])),
        bach_form_coeff: Some(Box::new(move |p: &[f64; 4]| {
            (4.0 * a1 * a4 - a2 * a3) / (2.0 * p[2] * p[2])
        })),
        kappa_lambda_cubed: if wsd && a1 != 0.0 {
            Some(-2.0 * a4 * a1.abs().powi(3))
        } else {
            None
        },
        ricci_potential: Some(Box::new(move |p: &[f64; 4], order: usize| {
            let [x, y, z, _] = chart_jets(p, order);
            let d = (&x * &x + &y * &y) * (eps / 4.0) + 1.0;
            let v = poly_eval(&vc, &z);
            Ok(v.ln()? - d.ln()? * 2.0)
        })),
        conformal_factor: if wsd && a1 != 0.0 {
            // lambda = |mu| = |a1| z on the fiber chart (z > 0).
            let a1_abs = a1.abs();
            Some(Box::new(move |p: &[f64; 4], order: usize| {
                let [_, _, z, _] = chart_jets(p, order);
                Ok(z * a1_abs)
            }))
        } else {
            None
        },
    };

    let builder = Box::new(move |p: &[f64; 4], order: usize| {
        let [x, y, z, _] = chart_jets(p, order);
        let zero = Jet::constant(0.0, order);
        let dz = [
            zero.clone(),
            zero.clone(),
            Jet::constant(1.0, order),
            zero,
        ];
        assemble_chart(order, p, &x, &y, &z, &dz, eps, &vc, gauge)
    });

    FamilyInstance::new(
        name,
        FamilyKind::Calabi,
        ["x", "y", "z", "t"],
        domain,
        margin,
        predictions,
        refs,
        builder,
    )
}

/// Standard sampling box: disc of the base chart crossed with a fiber
/// interval on which the profile must stay positive.
pub fn standard_domain(z_lo: f64, z_hi: f64) -> Box4 {
    Box4::new([-0.5, -0.5, z_lo, 0.0], [0.5, 0.5, z_hi, 1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e2() -> FamilyInstance {
        instance(
            "calabi_test",
            CalabiParams::new(1.0, 1.0, 0.0, 0.0, -1.0),
            standard_domain(0.9, 1.5),
            0.1,
        )
    }

    #[test]
    fn invariants_at_unit_fiber() {
        let inst = e2();
        let p = [0.1, -0.2, 1.0, 0.3];
        assert_relative_eq!(inst.refs.s.as_ref().unwrap()(&p), -2.0);
        assert_relative_eq!(inst.refs.mu.as_ref().unwrap()(&p), -1.0);
        assert_relative_eq!(inst.refs.kappa.as_ref().unwrap()(&p), 2.0);
        assert_relative_eq!(inst.refs.kappa_lambda_cubed.unwrap(), 2.0);
        assert!(inst.predictions.weakly_selfdual);
        assert!(!inst.predictions.selfdual && !inst.predictions.bach_flat);
    }

    #[test]
    fn flag_logic_tracks_profile_coefficients() {
        let bach = instance(
            "calabi_bach",
            CalabiParams::new(1.0, 1.0, 2.0, 2.0, 1.0),
            standard_domain(0.9, 1.5),
            0.1,
        );
        assert!(bach.predictions.bach_flat && !bach.predictions.weakly_selfdual);

        let einstein = instance(
            "calabi_ke",
            CalabiParams::new(1.0, 0.0, 1.0, 0.0, -0.5),
            standard_domain(0.9, 1.5),
            0.1,
        );
        assert!(einstein.predictions.einstein && einstein.predictions.constant_scalar);
        assert!(!einstein.predictions.rho0_nonvanishing);
    }

    #[test]
    fn chart_blocks_have_the_fibered_shape() {
        let inst = e2();
        let p = [0.2, 0.1, 1.2, 0.4];
        let data = inst.frame_data_at(&p, 2).unwrap();
        let dval = 1.0 + 0.25 * (0.04 + 0.01);
        let v = {
            let z: f64 = 1.2;
            z.powi(4) + z * z - 1.0
        };
        // Base block carries z/D^2 plus the alpha-square correction.
        let ay = 0.2 / (2.0 * dval);
        assert_relative_eq!(
            data.g[1][1].value(),
            1.2 / (dval * dval) + (v / 1.2) * ay * ay,
            max_relative = 1e-14
        );
        assert_relative_eq!(data.g[2][2].value(), 1.2 / v, max_relative = 1e-14);
        assert_relative_eq!(data.g[3][3].value(), v / 1.2, max_relative = 1e-14);
        assert_relative_eq!(data.omega.0[2][3].value(), 1.0);
        // phi = z omega_I + 3z omega doubles the fiber part and flips the
        // base part to 2 z^2 omega_S.
        let phi = data.phi.unwrap();
        assert_relative_eq!(phi.0[2][3].value(), 4.0 * 1.2, max_relative = 1e-14);
        assert_relative_eq!(
            phi.0[0][1].value(),
            2.0 * 1.2 * 1.2 / (dval * dval),
            max_relative = 1e-14
        );
    }

    #[test]
    fn gauge_shift_keeps_fiber_blocks() {
        let base = e2();
        let shifted = instance(
            "calabi_gauge",
            CalabiParams::new(1.0, 1.0, 0.0, 0.0, -1.0).with_gauge([0.3, -0.2]),
            standard_domain(0.9, 1.5),
            0.1,
        );
        let p = [0.1, 0.2, 1.1, 0.7];
        let a = base.frame_data_at(&p, 2).unwrap();
        let b = shifted.frame_data_at(&p, 2).unwrap();
        // The fiber-fiber entries do not see the gauge change.
        assert_eq!(a.g[2][2], b.g[2][2]);
        assert_eq!(a.g[3][3], b.g[3][3]);
        // The base-t entries do.
        assert!(a.g[0][3] != b.g[0][3]);
    }
}
