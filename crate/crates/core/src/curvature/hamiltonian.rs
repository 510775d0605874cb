//! Probe for J-invariant closed 2-forms whose trace-free part transports like
//! a twistor form.  Given a candidate `phi`, the probe measures every identity
//! such a form must satisfy: the transport equation with `beta = d sigma / 2`,
//! the least-squares twistor fit, holomorphy of the trace `sigma` and the
//! pfaffian `pi` of the normalized form, the Killing property and commutation
//! of the induced vector fields, and the spectral-potential orthogonality.

use super::{
    hessian, j_grad, kahler::hamiltonian_transport_residual, nabla_two_tensor, norm_mat,
    CurvatureBundle, CurvatureError, Frame,
};
use crate::jets::Jet;
use crate::tensor::{self, mat4_from_fn, mat4_values, vec4_from_fn, TwoForm, DIM};

/// Solve a small dense linear system with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for col in (0..4).rev() {
        let mut acc = b[col];
        for c in col + 1..4 {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Least-squares fit of the 1-form `beta` in the twistor transport shape
/// `nabla_X phi0 = -beta(X) omega + beta ^ (JX)b - (J beta) ^ Xb`.
/// Returns the fitted coefficients and the relative fit residual.
pub fn twistor_fit(
    frame: &Frame,
    bundle: &CurvatureBundle,
    phi0: &TwoForm,
) -> ([f64; DIM], f64) {
    let dphi = nabla_two_tensor(&bundle.gamma, &phi0.0);
    let gv = mat4_values(frame.metric.g());
    let jv = mat4_values(&frame.j);
    let om = mat4_values(&frame.omega.0);
    let jflat: [[f64; DIM]; DIM] = std::array::from_fn(|k| {
        std::array::from_fn(|j| {
            let mut acc = 0.0;
            for a in 0..DIM {
                acc += gv[a][j] * jv[a][k];
            }
            acc
        })
    });
    // Row per (k, i<j); column per beta component m.
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    let mut bmax = 0.0f64;
    for k in 0..DIM {
        for i in 0..DIM {
            for j in i + 1..DIM {
                let mut row = [0.0f64; 4];
                for m in 0..DIM {
                    let mut c = 0.0;
                    if m == k {
                        c -= om[i][j];
                    }
                    if m == i {
                        c += jflat[k][j];
                    }
                    if m == j {
                        c -= jflat[k][i];
                    }
                    // -(J beta)_i X^b_j + (J beta)_j X^b_i with
                    // (J beta)_i = -beta_m J^m_i.
                    c += jv[m][i] * gv[k][j] - jv[m][j] * gv[k][i];
                    row[m] = c;
                }
                let rhs = dphi[k][i][j].value();
                bmax = bmax.max(rhs.abs());
                for m in 0..DIM {
                    for n in 0..DIM {
                        ata[m][n] += row[m] * row[n];
                    }
                    atb[m] += row[m] * rhs;
                }
            }
        }
    }
    // Regularize the normal equations so a parallel form (zero derivative,
    // zero fit) stays solvable.
    for m in 0..DIM {
        ata[m][m] += 1e-14;
    }
    let beta = solve4(ata, atb).unwrap_or([0.0; 4]);
    // Residual of the fitted shape.
    let mut dev = 0.0f64;
    for k in 0..DIM {
        for i in 0..DIM {
            for j in i + 1..DIM {
                let mut pred = 0.0;
                for m in 0..DIM {
                    let mut c = 0.0;
                    if m == k {
                        c -= om[i][j];
                    }
                    if m == i {
                        c += jflat[k][j];
                    }
                    if m == j {
                        c -= jflat[k][i];
                    }
                    c += jv[m][i] * gv[k][j] - jv[m][j] * gv[k][i];
                    pred += c * beta[m];
                }
                dev = dev.max((dphi[k][i][j].value() - pred).abs());
            }
        }
    }
    (beta, dev / bmax.max(1.0))
}

/// All measurements for one candidate 2-form.
pub struct HamiltonianProbe {
    /// Trace potential: `phi = phi0 + (3/2) sigma omega`.
    pub sigma: Jet,
    /// Pfaffian of the normalized form `phi0/2 + (sigma/4) omega`.
    pub pi: Jet,
    pub lambda: Option<Jet>,
    pub xi: Option<Jet>,
    pub eta: Option<Jet>,
    /// `|d phi|`.
    pub closedness_residual: f64,
    /// J-invariance of `phi`.
    pub invariance_residual: f64,
    /// Selfdual part of `phi` against `(3/2) sigma omega`.
    pub trace_split_residual: f64,
    /// Transport equation with `beta = d sigma / 2`.
    pub transport_residual: f64,
    /// Best-fit twistor shape residual (no assumption on `beta`).
    pub twistor_residual: f64,
    /// Fitted `beta` against `d sigma / 2`.
    pub beta_residual: f64,
    /// `pi` against `sigma^2/4 - |phi0|^2/2`.
    pub pfaffian_split_residual: f64,
    pub sigma_potential_residual: f64,
    pub pi_potential_residual: f64,
    pub k1_killing_residual: f64,
    pub k2_killing_residual: f64,
    /// `|omega(K1, K2)|`.
    pub omega_k1_k2: f64,
    /// Norm of the Lie bracket `[K1, K2]`.
    pub commutator_residual: f64,
    /// `d pi = -2 star(J d sigma ^ phi_tilde)`.
    pub dpi_residual: f64,
    /// `d(lambda^2) = -phi0(J d sigma)`.
    pub swap_residual: f64,
    /// `I d sigma = 2 J d lambda` (needs `lambda > 0`).
    pub idsig_residual: Option<f64>,
    /// `<d xi, d eta>` (needs `lambda > 0`).
    pub dxi_deta_inner: Option<f64>,
}

pub fn hamiltonian_probe(
    frame: &Frame,
    bundle: &CurvatureBundle,
    phi: &TwoForm,
    degenerate_tol: f64,
) -> Result<HamiltonianProbe, CurvatureError> {
    let metric = &frame.metric;
    let jv = mat4_values(&frame.j);
    let phiv = mat4_values(&phi.0);
    let phi_scale = phi.max_abs_value().max(1.0);

    let mut invariance_residual = 0.0f64;
    for i in 0..DIM {
        for j in 0..DIM {
            let mut acc = 0.0;
            for a in 0..DIM {
                for b in 0..DIM {
                    acc += jv[a][i] * jv[b][j] * phiv[a][b];
                }
            }
            invariance_residual = invariance_residual.max((acc - phiv[i][j]).abs());
        }
    }
    invariance_residual /= phi_scale;

    let closedness_residual = tensor::d_two_form(phi).max_abs_value() / phi_scale;

    let sigma = metric.inner2(phi, &frame.omega) * (1.0 / 3.0);
    let (phi_sd, phi0) = metric.sd_asd_split(phi);
    let trace_split_residual = {
        let expected = frame.omega.scale_jet(&(&sigma * 1.5));
        phi_sd.sub(&expected).max_abs_value() / phi_scale
    };

    let transport_residual = hamiltonian_transport_residual(frame, bundle, &phi0, &sigma);
    let (beta_fit, twistor_residual) = twistor_fit(frame, bundle, &phi0);
    let dsigma = vec4_from_fn(|i| sigma.deriv(i));
    let beta_residual = {
        let mut dev = 0.0f64;
        let mut scale = 1.0f64;
        for m in 0..DIM {
            let target = 0.5 * dsigma[m].value();
            scale = scale.max(target.abs());
            dev = dev.max((beta_fit[m] - target).abs());
        }
        dev / scale
    };

    let phi_tilde = TwoForm(mat4_from_fn(|i, j| {
        &phi0.0[i][j] * 0.5 + &sigma * 0.25 * &frame.omega.0[i][j]
    }));
    let pi = metric.pfaffian(&phi_tilde);
    let lam2 = metric.inner2(&phi0, &phi0) * 0.5;
    // pi = sigma^2/4 - |phi0|^2/2, and lam2 is already |phi0|^2/2.
    let pfaffian_split_residual = {
        let expected = &sigma * &sigma * 0.25 - &lam2;
        (pi.value() - expected.value()).abs() / pi.value().abs().max(1.0)
    };

    let sigma_potential_residual = super::potential_residual(frame, bundle, &sigma);
    let pi_potential_residual = super::potential_residual(frame, bundle, &pi);

    let k1 = j_grad(frame, &sigma);
    let k2 = j_grad(frame, &pi);
    let k1_killing_residual = super::killing_residual(frame, bundle, &k1);
    let k2_killing_residual = super::killing_residual(frame, bundle, &k2);
    let k_scale = {
        let n1 = super::norm_vec(metric, &metric.lower1(&k1));
        let n2 = super::norm_vec(metric, &metric.lower1(&k2));
        (n1 * n2).max(1.0)
    };
    let omega_k1_k2 = {
        let om = mat4_values(&frame.omega.0);
        let mut acc = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                acc += om[i][j] * k1[i].value() * k2[j].value();
            }
        }
        acc.abs() / k_scale
    };
    let commutator_residual = {
        let br = vec4_from_fn(|i| {
            let mut acc = Jet::constant(0.0, k1[0].order().saturating_sub(1));
            for m in 0..DIM {
                acc = acc + &k1[m] * k2[i].deriv(m) - &k2[m] * k1[i].deriv(m);
            }
            acc
        });
        super::norm_vec(metric, &metric.lower1(&br)) / k_scale
    };

    let j_dsigma = tensor::j_one_form(&frame.j, &dsigma);
    let dpi_residual = {
        let three = tensor::wedge12(&j_dsigma, &phi_tilde);
        let star = metric.star3(&three);
        let mut dev = 0.0f64;
        let mut scale = 1.0f64;
        for i in 0..DIM {
            let lhs = pi.deriv(i).value();
            let rhs = -2.0 * star[i].value();
            scale = scale.max(lhs.abs()).max(rhs.abs());
            dev = dev.max((lhs - rhs).abs());
        }
        dev / scale
    };

    let swap_residual = {
        let j_dsigma_up = metric.raise1(&j_dsigma);
        let mut dev = 0.0f64;
        let mut scale = 1.0f64;
        for i in 0..DIM {
            let lhs = lam2.deriv(i).value();
            let mut rhs = 0.0;
            for m in 0..DIM {
                rhs -= j_dsigma_up[m].value() * phi0.0[m][i].value();
            }
            scale = scale.max(lhs.abs()).max(rhs.abs());
            dev = dev.max((lhs - rhs).abs());
        }
        dev / scale
    };

    let eigen = match metric.asd_eigendata(&phi0, degenerate_tol) {
        Ok(pair) => Some(pair),
        Err(tensor::TensorError::DegenerateNorm { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let (lambda, xi, eta, idsig_residual, dxi_deta_inner) = match eigen {
        Some((lambda, omega_i)) => {
            let i_endo = metric.endo_from_form(&omega_i);
            let i_dsigma = tensor::j_one_form(&i_endo, &dsigma);
            let dlambda = vec4_from_fn(|i| lambda.deriv(i));
            let j_dlambda = tensor::j_one_form(&frame.j, &dlambda);
            let idsig = {
                let mut dev = 0.0f64;
                let mut scale = 1.0f64;
                for i in 0..DIM {
                    let lhs = i_dsigma[i].value();
                    let rhs = 2.0 * j_dlambda[i].value();
                    scale = scale.max(lhs.abs()).max(rhs.abs());
                    dev = dev.max((lhs - rhs).abs());
                }
                dev / scale
            };
            let xi = &sigma * 0.5 + &lambda;
            let eta = &sigma * 0.5 - &lambda;
            let dxi = vec4_from_fn(|i| xi.deriv(i));
            let deta = vec4_from_fn(|i| eta.deriv(i));
            let inner = metric.inner1(&dxi, &deta).value();
            let scale = (super::norm_vec(metric, &dxi) * super::norm_vec(metric, &deta)).max(1.0);
            (
                Some(lambda),
                Some(xi),
                Some(eta),
                Some(idsig),
                Some(inner.abs() / scale),
            )
        }
        None => (None, None, None, None, None),
    };

    Ok(HamiltonianProbe {
        sigma,
        pi,
        lambda,
        xi,
        eta,
        closedness_residual,
        invariance_residual,
        trace_split_residual,
        transport_residual,
        twistor_residual,
        beta_residual,
        pfaffian_split_residual,
        sigma_potential_residual,
        pi_potential_residual,
        k1_killing_residual,
        k2_killing_residual,
        omega_k1_k2,
        commutator_residual,
        dpi_residual,
        swap_residual,
        idsig_residual,
        dxi_deta_inner,
    })
}

/// The symmetric J-anti-commuting endomorphism measuring failure of a
/// function to be a holomorphic potential, `S(X, Y) = H(X, Y) - H(JX, JY)`,
/// returned as its normalized norm (same quantity `potential_residual`
/// reports, exposed for direct inspection of the Hessian split).
pub fn potential_defect_tensor(frame: &Frame, bundle: &CurvatureBundle, f: &Jet) -> (f64, f64) {
    let hess = hessian(&bundle.gamma, f);
    let (inv, anti) = tensor::sym_j_split(&frame.j, &hess);
    let scale = norm_mat(&frame.metric, &hess).max(1.0);
    (
        norm_mat(&frame.metric, &inv) / scale,
        norm_mat(&frame.metric, &anti) / scale,
    )
}
