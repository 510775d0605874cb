//! Almost-Kähler charts fibered over a conformally flat surface, driven
//! by a holomorphic function `H = W + iV` of `x + iy`:
//!
//! ```text
//! g = (W/z)(z^2 g_S + dz^2) + (z/W)(dt - (V/z) dz + beta)^2
//! omega   =  z W omega_S + dz ^ (dt + beta)
//! omega_I = -z W omega_S + dz ^ (dt + beta)
//! ```
//!
//! with `g_S = e^U (dx^2 + dy^2)`, `omega_S = e^U dx ^ dy`, `W > 0`
//! harmonic with conjugate `V`, and `beta = P dy`, `P_x = W e^U` (so
//! `d beta = W omega_S` exactly).  The `-(V/z) dz` leg makes the
//! connection form satisfy the monopole pairing with `W/z` on the flat
//! three-dimensional quotient, which is what kills the Ricci tensor on
//! the harmonic members.  The fundamental form is always closed;
//! the structure is integrable precisely when `W` is constant, so
//! nonconstant `W` gives strictly almost-Kähler members whose Ricci
//! tensor still commutes with the almost complex structure. The
//! oppositely oriented structure `I` is integrable and `z^{-2} g` is
//! Kähler with respect to it, which is the conformal mechanism the
//! verification layer probes on these charts.
//!
//! The scalar curvature is `s = -(U_xx + U_yy + 2 e^U)/(6 z W e^U)` in the
//! normalized convention, so the Liouville base `e^U = 4/(1+x^2+y^2)^2`
//! gives scalar-flat members for every `W`.

use super::ode::gauss_legendre_jet;
use super::{
    chart_jets, Box4, FamilyError, FamilyInstance, FamilyKind, FrameData, Predictions, References,
};
use crate::jets::Jet;
use crate::tensor::{mat4_from_fn, TwoForm};

/// Jets at one point of the surface data entering the chart.
struct SurfaceJets {
    /// Conformal factor `e^U` of the base surface.
    eu: Jet,
    /// Positive harmonic function `W`.
    w: Jet,
    /// Harmonic conjugate `V` of `W`.
    v: Jet,
    /// Potential `P` of the connection form `beta = P dy`, `P_x = W e^U`.
    p: Jet,
    /// Whether to attach the hamiltonian form `z omega_I + 3 z omega`
    /// (valid on the integrable members).
    phi: bool,
}

type SurfaceFn = Box<dyn Fn(&[f64; 4], usize) -> Result<SurfaceJets, FamilyError> + Send + Sync>;

fn assemble(order: usize, point: &[f64; 4], surf: &SurfaceJets) -> Result<FrameData, FamilyError> {
    let [_, _, z, _] = chart_jets(point, order);
    if z.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "z",
            value: z.value(),
            point: *point,
        });
    }
    if surf.w.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "W",
            value: surf.w.value(),
            point: *point,
        });
    }
    if surf.eu.value() <= 0.0 {
        return Err(FamilyError::SignatureViolation {
            what: "e^U",
            value: surf.eu.value(),
            point: *point,
        });
    }

    let zero = Jet::constant(0.0, order);
    let one = Jet::constant(1.0, order);
    let zinv = z.recip()?;
    // eta = dt - (V/z) dz + beta with beta = P dy.
    let eta = [
        zero.clone(),
        surf.p.clone(),
        -(&surf.v * &zinv),
        one.clone(),
    ];
    let zw_eu = (&z * &surf.w) * &surf.eu;
    let z_over_w = &z / &surf.w;
    let w_over_z = &surf.w * &zinv;

    let g = mat4_from_fn(|a, b| {
        let mut acc = &z_over_w * (&eta[a] * &eta[b]);
        if a == b && a < 2 {
            acc = acc + &zw_eu;
        }
        if a == 2 && b == 2 {
            acc = acc + &w_over_z;
        }
        acc
    });

    // dz ^ (dt + beta) has entries on (z,t) and (z,y); the base part sits
    // on (x,y). Fill the upper triangle and antisymmetrize.
    let build = |base_sign: f64| {
        let mut m = mat4_from_fn(|_, _| zero.clone());
        m[0][1] = &zw_eu * base_sign;
        m[1][2] = -surf.p.clone();
        m[2][3] = one.clone();
        for i in 0..4 {
            for j in 0..i {
                m[i][j] = -m[j][i].clone();
            }
        }
        TwoForm(m)
    };
    let omega = build(1.0);
    let omega_i = build(-1.0);
    let phi = if surf.phi {
        Some(omega_i.scale_jet(&z).add(&omega.scale_jet(&(&z * 3.0))))
    } else {
        None
    };

    Ok(FrameData {
        g,
        omega,
        omega_i: Some(omega_i),
        phi,
    })
}

/// Liouville conformal factor `4/(1 + x^2 + y^2)^2` (unit round base).
fn liouville(x: &Jet, y: &Jet) -> Result<Jet, FamilyError> {
    let r2p1 = x * x + y * y + 1.0;
    Ok(r2p1.recip()?.powi(2) * 4.0)
}

/// Standard chart box: base disc crossed with a fiber band away from the
/// conformal singularity at `z = 0`.
pub fn standard_domain() -> Box4 {
    Box4::new([-0.5, -0.5, 1.0, 0.0], [0.5, 0.5, 2.0, 1.0])
}

fn make(name: &str, surface: SurfaceFn, predictions: Predictions, refs: References) -> FamilyInstance {
    let builder = Box::new(move |p: &[f64; 4], order: usize| {
        let surf = surface(p, order)?;
        assemble(order, p, &surf)
    });
    FamilyInstance::new(
        name,
        FamilyKind::LeBrun,
        ["x", "y", "z", "t"],
        standard_domain(),
        0.1,
        predictions,
        refs,
        builder,
    )
}

fn rescale_refs() -> References {
    References {
        conformal_factor: Some(Box::new(|p: &[f64; 4], order: usize| {
            Ok(chart_jets(p, order)[2].clone())
        })),
        theta: Some(Box::new(|p: &[f64; 4]| [0.0, 0.0, -1.0 / p[2], 0.0])),
        ..Default::default()
    }
}

/// Strictly almost-Kähler, scalar-flat, selfdual and Ricci-flat member:
/// Liouville base with `H = (2 + x) + i y`. Its connection potential has
/// the closed form used here; see [`gibbons_hawking_quadrature`] for the
/// same chart with `P` produced by quadrature instead.
pub fn gibbons_hawking() -> FamilyInstance {
    let surface: SurfaceFn = Box::new(|p, order| {
        let [x, y, _, _] = chart_jets(p, order);
        let eu = liouville(&x, &y)?;
        let w = &x + 2.0;
        let c = &y * &y + 1.0;
        let r2p1 = &c + &x * &x;
        let cs = c.sqrt()?;
        // Antiderivative of (2 + x) e^U in x, gauged so P(0, y) = 0.
        let p_jet = c.recip()? * 2.0 - r2p1.recip()? * 2.0
            + (&x * (&c * &r2p1).recip()?) * 4.0
            + ((&cs * &c).recip()? * (&x / &cs).atan()) * 4.0;
        Ok(SurfaceJets {
            eu,
            w,
            v: y,
            p: p_jet,
            phi: false,
        })
    });
    let mut refs = rescale_refs();
    refs.s = Some(Box::new(|_| 0.0));
    make("lebrun_gibbons_hawking", surface, gh_predictions(), refs)
}

/// The same chart as [`gibbons_hawking`] with the connection potential
/// obtained by Gauss-Legendre quadrature of `W e^U` plus an exact jet
/// antiderivative, making the pair a cross-check of the quadrature path.
pub fn gibbons_hawking_quadrature() -> FamilyInstance {
    let we_u = |x: &Jet, y: &Jet| -> Result<Jet, FamilyError> {
        Ok((x + 2.0) * liouville(x, y)?)
    };
    let surface: SurfaceFn = Box::new(move |p, order| {
        let [x, y, _, _] = chart_jets(p, order);
        let pure_y = gauss_legendre_jet(|u| we_u(&Jet::constant(u, order), &y), 0.0, p[0], order)?;
        let p_jet = pure_y + we_u(&x, &y)?.integrate(0, 0.0);
        Ok(SurfaceJets {
            eu: liouville(&x, &y)?,
            w: &x + 2.0,
            v: y,
            p: p_jet,
            phi: false,
        })
    });
    let mut refs = rescale_refs();
    refs.s = Some(Box::new(|_| 0.0));
    make(
        "lebrun_gibbons_hawking_quadrature",
        surface,
        gh_predictions(),
        refs,
    )
}

fn gh_predictions() -> Predictions {
    Predictions {
        kahler: false,
        symplectic: true,
        constant_scalar: true,
        extremal: true,
        biextremal: false,
        weakly_selfdual: true,
        selfdual: true,
        bach_flat: true,
        einstein: true,
        ricci_flat: true,
        rho0_nonvanishing: false,
        wminus_nonvanishing: false,
        ricci_j_invariant: true,
    }
}

/// Integrable control: constant `H = 1` over the Liouville base. The
/// chart is Kähler and in fact flat, so every vanishing flag is a direct
/// positive control for the almost-Kähler checks.
pub fn constant_h() -> FamilyInstance {
    let surface: SurfaceFn = Box::new(|p, order| {
        let [x, y, _, _] = chart_jets(p, order);
        let eu = liouville(&x, &y)?;
        let c = &y * &y + 1.0;
        let r2p1 = &c + &x * &x;
        let cs = c.sqrt()?;
        // Antiderivative of e^U in x, gauged so P(0, y) = 0.
        let p_jet =
            (&x * (&c * &r2p1).recip()?) * 2.0 + ((&cs * &c).recip()? * (&x / &cs).atan()) * 2.0;
        Ok(SurfaceJets {
            eu,
            w: Jet::constant(1.0, order),
            v: Jet::constant(0.0, order),
            p: p_jet,
            phi: true,
        })
    });
    let mut refs = rescale_refs();
    refs.s = Some(Box::new(|_| 0.0));
    refs.mu = Some(Box::new(|_| 0.0));
    refs.kappa = Some(Box::new(|_| 0.0));
    refs.sigma = Some(Box::new(|p: &[f64; 4]| 2.0 * p[2]));
    refs.pi = Some(Box::new(|_| 0.0));
    refs.ricci_potential = Some(Box::new(|p: &[f64; 4], order: usize| {
        let [x, y, z, _] = chart_jets(p, order);
        Ok(z.ln()? * 2.0 + liouville(&x, &y)?.ln()?)
    }));
    let predictions = Predictions {
        kahler: true,
        symplectic: true,
        constant_scalar: true,
        extremal: true,
        biextremal: true,
        weakly_selfdual: true,
        selfdual: true,
        bach_flat: true,
        einstein: true,
        ricci_flat: true,
        rho0_nonvanishing: false,
        wminus_nonvanishing: false,
        ricci_j_invariant: true,
    };
    make("lebrun_constant_h", surface, predictions, refs)
}

/// Strictly almost-Kähler member over the flat base (`U = 0`,
/// `H = (2 + x) + i y`): nonconstant scalar curvature `-1/(3 z W)` and a
/// J-invariant Ricci tensor, exercising the transport identities away
/// from the scalar-flat locus.
pub fn flat_sigma() -> FamilyInstance {
    let surface: SurfaceFn = Box::new(|p, order| {
        let [x, y, _, _] = chart_jets(p, order);
        let p_jet = &x * 2.0 + (&x * &x) * 0.5;
        Ok(SurfaceJets {
            eu: Jet::constant(1.0, order),
            w: &x + 2.0,
            v: y,
            p: p_jet,
            phi: false,
        })
    });
    let mut refs = rescale_refs();
    // The flat base breaks the Liouville constraint, so the rescaled pair is
    // symplectic but not integrable: no conformal Kahler factor exists.
    refs.conformal_factor = None;
    refs.s = Some(Box::new(|p: &[f64; 4]| -1.0 / (3.0 * p[2] * (2.0 + p[0]))));
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
        ricci_j_invariant: true,
    };
    make("lebrun_flat_sigma", surface, predictions, refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::d_two_form;
    use approx::assert_relative_eq;

    #[test]
    fn quadrature_potential_matches_closed_form() {
        let exact = gibbons_hawking();
        let quad = gibbons_hawking_quadrature();
        for p in [[0.3, -0.2, 1.4, 0.5], [-0.4, 0.45, 1.9, 0.0]] {
            let fa = exact.frame_data_at(&p, 3).unwrap();
            let fb = quad.frame_data_at(&p, 3).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let diff = &fa.g[i][j] - &fb.g[i][j];
                    assert!(diff.max_abs_coeff() < 1e-11, "g[{i}][{j}] differs");
                    let do_ = &fa.omega.0[i][j] - &fb.omega.0[i][j];
                    assert!(do_.max_abs_coeff() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn fundamental_form_is_closed_and_rescaled_pair_form_is_closed() {
        for inst in [gibbons_hawking(), constant_h(), flat_sigma()] {
            let p = [0.25, -0.3, 1.5, 0.2];
            let data = inst.frame_data_at(&p, 3).unwrap();
            let dom = d_two_form(&data.omega);
            let mut worst = 0.0f64;
            for row in dom.0.iter() {
                for e in row.iter() {
                    for f in e.iter() {
                        worst = worst.max(f.max_abs_coeff());
                    }
                }
            }
            assert!(worst < 1e-10, "{}: d omega = {worst}", inst.name);

            // z^{-2} omega_I is closed: the oppositely oriented structure
            // is Kähler after the conformal rescale.
            let [_, _, z, _] = chart_jets(&p, 3);
            let scaled = data
                .omega_i
                .as_ref()
                .unwrap()
                .scale_jet(&(&z * &z).recip().unwrap());
            let dsc = d_two_form(&scaled);
            let mut worst = 0.0f64;
            for row in dsc.0.iter() {
                for e in row.iter() {
                    for f in e.iter() {
                        worst = worst.max(f.max_abs_coeff());
                    }
                }
            }
            assert!(worst < 1e-10, "{}: d(z^-2 omega_I) = {worst}", inst.name);
        }
    }

    #[test]
    fn chart_blocks_have_the_fibered_shape() {
        let inst = flat_sigma();
        let p = [0.2, 0.1, 1.5, 0.0];
        let data = inst.frame_data_at(&p, 2).unwrap();
        let (z, w) = (1.5, 2.2);
        let pv = 2.0 * 0.2 + 0.5 * 0.04;
        assert_relative_eq!(data.g[0][0].value(), z * w, max_relative = 1e-14);
        assert_relative_eq!(
            data.g[1][1].value(),
            z * w + (z / w) * pv * pv,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            data.g[2][2].value(),
            w / z + (z / w) * (0.1 / z) * (0.1 / z),
            max_relative = 1e-14
        );
        assert_relative_eq!(data.g[3][3].value(), z / w, max_relative = 1e-14);
        // eta = dt - (V/z) dz + beta, so the fiber cross term carries -V/W.
        assert_relative_eq!(data.g[2][3].value(), -0.1 / w, max_relative = 1e-14);
        assert_relative_eq!(data.omega.0[0][1].value(), z * w, max_relative = 1e-14);
        assert_relative_eq!(data.omega.0[1][2].value(), -pv, max_relative = 1e-14);
        assert_relative_eq!(data.omega.0[2][3].value(), 1.0);
    }

    #[test]
    fn surface_data_satisfies_its_defining_equations() {
        // P_x = W e^U and the Cauchy-Riemann pair for (W, V), checked on
        // the jets of the closed-form chart.
        let inst = gibbons_hawking();
        let p = [0.35, -0.15, 1.2, 0.0];
        let data = inst.frame_data_at(&p, 3).unwrap();
        // omega[1][2] = -P and omega[0][1] = z W e^U; compare d/dx of P
        // against W e^U via the assembled entries.
        let p_x = data.omega.0[2][1].deriv(0);
        let [_, _, z, _] = chart_jets(&p, 3);
        let we_u = &data.omega.0[0][1] / &z;
        let diff = &p_x - &we_u;
        assert!(diff.max_abs_coeff() < 1e-10);
    }
}
