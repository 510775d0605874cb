//! Curvature engine over jet-valued frames.
//!
//! Everything is computed in exact truncated-Taylor arithmetic: the input
//! frame carries metric/form components as jets of some order `n`, each
//! derivative consumes one order, and the engine tracks what remains.  With
//! `n = 4` the full chain is available (Christoffel at `n-1`, curvature at
//! `n-2`, Cotton-York at `n-3`, Bach at `n-4`); lower input orders truncate
//! the chain and the corresponding bundle fields are absent.
//!
//! Index conventions (fixed once, used verbatim in every formula):
//!
//! * curvature operator `R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z -
//!   nabla_[X,Y] Z`;
//! * `riem[i][j][k][l] = g(R(e_i, e_j) e_k, e_l)`, so the sectional curvature
//!   of a plane `(X, Y)` is the contraction `riem(X, Y, Y, X)` and the round
//!   sphere comes out positive;
//! * `ric[i][j] = trace(Z -> R(Z, e_i) e_j)`, positive for spheres, and
//!   `scal = g^{ij} ric_{ij}`;
//! * the normalized scalar curvature is `s = scal / 6`;
//! * `h = ric0/2 + (s/4) g` (the 4-dimensional Schouten-type tensor), so that
//!   the full curvature decomposes as `kn(h, g) + weyl` where `weyl` is stored
//!   with the sign that makes `weyl[i][j][k][l] = -(riem + kn(h,g))[i][j][k][l]`
//!   a totally trace-free tensor whose 2-form action is
//!   `W(F)_{ij} = (1/2) weyl_{ijkl} F^{kl}`;
//! * `cotton[i][j][k] = -(nabla_i h)(j,k) + (nabla_j h)(i,k)`: a 2-form in
//!   `(i,j)` with values in 1-forms `(k)`.

pub mod hamiltonian;
pub mod kahler;

use crate::jets::Jet;
use crate::tensor::{
    self, apply_endo, eps4, mat4_from_fn, mat4_mul, mat4_values, sym3_eigenvalues, vec4_from_fn,
    Mat4, Metric, TensorError, TwoForm, Vec4, DIM,
};
use thiserror::Error;

pub type Ten3 = Box<[[[Jet; DIM]; DIM]; DIM]>;
pub type Ten4 = Box<[[[[Jet; DIM]; DIM]; DIM]; DIM]>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("operation needs jet order {needed}, frame provides {got}")]
    UnderOrdered { needed: usize, got: usize },
    #[error("almost-complex structure fails J^2 = -Id by {dev:e}")]
    NotAlmostComplex { dev: f64 },
    #[error("metric is not J-hermitian: deviation {dev:e}")]
    NotHermitian { dev: f64 },
    #[error("Ricci tensor has a J-anti-invariant part of norm {dev:e}")]
    NonInvariantRicci { dev: f64 },
    #[error("scalar curvature |s| = {value:e} too close to zero for this check")]
    VanishingScalar { value: f64 },
    #[error("anti-selfdual Ricci form degenerate: |rho0| = {norm:e}")]
    DegenerateRho { norm: f64 },
}

pub(crate) fn ten3_from_fn(mut f: impl FnMut(usize, usize, usize) -> Jet) -> Ten3 {
    Box::new(std::array::from_fn(|i| {
        std::array::from_fn(|j| std::array::from_fn(|k| f(i, j, k)))
    }))
}

pub(crate) fn ten4_from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> Jet) -> Ten4 {
    Box::new(std::array::from_fn(|i| {
        std::array::from_fn(|j| std::array::from_fn(|k| std::array::from_fn(|l| f(i, j, k, l))))
    }))
}

pub(crate) fn ten3_sub(a: &Ten3, b: &Ten3) -> Ten3 {
    ten3_from_fn(|i, j, k| &a[i][j][k] - &b[i][j][k])
}

/// A pointwise almost-hermitian frame: metric, compatible 2-form, and the
/// derived almost-complex structure, all jet-valued.
#[derive(Debug, Clone)]
pub struct Frame {
    pub metric: Metric,
    /// Fundamental 2-form; also fixes the orientation `vol = omega^omega / 2`.
    pub omega: TwoForm,
    /// `J^i_j`, derived from `omega(X, Y) = g(J X, Y)`.
    pub j: Mat4,
    /// Optional family-supplied opposite-orientation reference form.
    pub omega_i: Option<TwoForm>,
}

impl Frame {
    pub fn new(g: Mat4, omega: TwoForm, omega_i: Option<TwoForm>) -> Result<Frame, CurvatureError> {
        let w = tensor::wedge22_top(&omega, &omega) * 0.5;
        let metric = Metric::with_orientation(g, w)?;
        let j = metric.endo_from_form(&omega);
        let jj = mat4_mul(&j, &j);
        let mut dev = 0.0f64;
        for i in 0..DIM {
            for k in 0..DIM {
                let want = if i == k { -1.0 } else { 0.0 };
                dev = dev.max((jj[i][k].value() - want).abs());
            }
        }
        if dev > 1e-10 {
            return Err(CurvatureError::NotAlmostComplex { dev });
        }
        // Hermitian compatibility g(J., J.) = g at the value level.
        let mut hdev = 0.0f64;
        let gv = mat4_values(metric.g());
        let jv = mat4_values(&j);
        for i in 0..DIM {
            for k in 0..DIM {
                let mut acc = 0.0;
                for a in 0..DIM {
                    for b in 0..DIM {
                        acc += jv[a][i] * jv[b][k] * gv[a][b];
                    }
                }
                hdev = hdev.max((acc - gv[i][k]).abs());
            }
        }
        let scale = gv.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        if hdev > 1e-10 * scale {
            return Err(CurvatureError::NotHermitian { dev: hdev });
        }
        Ok(Frame {
            metric,
            omega,
            j,
            omega_i,
        })
    }

    pub fn order(&self) -> usize {
        self.metric.g()[0][0].order()
    }
}

/// Everything derivable from the frame by repeated covariant differentiation.
pub struct CurvatureBundle {
    /// Jet order of the input frame.
    pub order: usize,
    /// `Gamma^k_{ij}` at `gamma[k][i][j]`.
    pub gamma: Ten3,
    /// `riem[i][j][k][l] = g(R(e_i,e_j) e_k, e_l)`.
    pub riem: Ten4,
    pub ric: Mat4,
    pub scal: Jet,
    /// `scal / 6`.
    pub s: Jet,
    /// Trace-free Ricci.
    pub ric0: Mat4,
    /// `ric0/2 + (s/4) g`.
    pub h: Mat4,
    /// Trace-free conformal curvature, 2-form action `(1/2) weyl_{ijkl} F^{kl}`.
    pub weyl: Ten4,
    pub weyl_plus: Ten4,
    pub weyl_minus: Ten4,
    /// `cotton[i][j][k]`, present when the frame order allows three derivatives.
    pub cotton: Option<Ten3>,
    /// Frobenius magnitude of `riem` at the point (used to normalize residuals).
    pub curvature_scale: f64,
}

/// Covariant derivative of a 1-form: `out[k][i] = (nabla_k a)_i`.
pub fn nabla_one_form(gamma: &Ten3, a: &Vec4) -> Mat4 {
    mat4_from_fn(|k, i| {
        let mut acc = a[i].deriv(k);
        for m in 0..DIM {
            acc = acc - &gamma[m][k][i] * &a[m];
        }
        acc
    })
}

/// Covariant derivative of a covariant 2-tensor: `out[k][i][j] = (nabla_k t)_{ij}`.
pub fn nabla_two_tensor(gamma: &Ten3, t: &Mat4) -> Ten3 {
    ten3_from_fn(|k, i, j| {
        let mut acc = t[i][j].deriv(k);
        for m in 0..DIM {
            acc = acc - &gamma[m][k][i] * &t[m][j] - &gamma[m][k][j] * &t[i][m];
        }
        acc
    })
}

/// Covariant derivative of a covariant 3-tensor: `out[a][i][j][k]`.
pub fn nabla_three_tensor(gamma: &Ten3, t: &Ten3) -> Ten4 {
    ten4_from_fn(|a, i, j, k| {
        let mut acc = t[i][j][k].deriv(a);
        for m in 0..DIM {
            acc = acc
                - &gamma[m][a][i] * &t[m][j][k]
                - &gamma[m][a][j] * &t[i][m][k]
                - &gamma[m][a][k] * &t[i][j][m];
        }
        acc
    })
}

/// Covariant derivative of a covariant 4-tensor, direction index first:
/// `out[a][i][j][k][l]` boxed as a 5-level array.
pub fn nabla_four_tensor(gamma: &Ten3, t: &Ten4) -> Box<[[[[[Jet; DIM]; DIM]; DIM]; DIM]; DIM]> {
    Box::new(std::array::from_fn(|a| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    std::array::from_fn(|l| {
                        let mut acc = t[i][j][k][l].deriv(a);
                        for m in 0..DIM {
                            acc = acc
                                - &gamma[m][a][i] * &t[m][j][k][l]
                                - &gamma[m][a][j] * &t[i][m][k][l]
                                - &gamma[m][a][k] * &t[i][j][m][l]
                                - &gamma[m][a][l] * &t[i][j][k][m];
                        }
                        acc
                    })
                })
            })
        })
    }))
}

/// Covariant derivative of an endomorphism: `out[k][i][j] = (nabla_k A)^i_j`.
pub fn nabla_endo(gamma: &Ten3, a: &Mat4) -> Ten3 {
    ten3_from_fn(|k, i, j| {
        let mut acc = a[i][j].deriv(k);
        for m in 0..DIM {
            acc = acc + &gamma[i][k][m] * &a[m][j] - &gamma[m][k][j] * &a[i][m];
        }
        acc
    })
}

/// Covariant derivative of a vector field: `out[k][i] = (nabla_k V)^i`.
pub fn nabla_vector(gamma: &Ten3, v: &Vec4) -> Mat4 {
    mat4_from_fn(|k, i| {
        let mut acc = v[i].deriv(k);
        for m in 0..DIM {
            acc = acc + &gamma[i][k][m] * &v[m];
        }
        acc
    })
}

/// Christoffel symbols of the metric.
pub fn christoffel(metric: &Metric) -> Result<Ten3, CurvatureError> {
    let g = metric.g();
    if g[0][0].order() < 1 {
        return Err(CurvatureError::UnderOrdered {
            needed: 1,
            got: g[0][0].order(),
        });
    }
    let ginv = metric.ginv();
    let dg = ten3_from_fn(|k, i, j| g[i][j].deriv(k));
    Ok(ten3_from_fn(|k, i, j| {
        let mut acc = Jet::constant(0.0, dg[0][0][0].order());
        for m in 0..DIM {
            let sum = &dg[i][j][m] + &dg[j][i][m] - &dg[m][i][j];
            acc = acc + &ginv[k][m] * sum * 0.5;
        }
        acc
    }))
}

/// Kulkarni-Nomizu style product entering the curvature decomposition:
/// `kn(h,g)_{ijkl} = h_{ik} g_{jl} + h_{jl} g_{ik} - h_{il} g_{jk} - h_{jk} g_{il}`.
fn kn_product(h: &Mat4, g: &Mat4) -> Ten4 {
    ten4_from_fn(|i, j, k, l| {
        &h[i][k] * &g[j][l] + &h[j][l] * &g[i][k] - &h[i][l] * &g[j][k] - &h[j][k] * &g[i][l]
    })
}

/// Hodge star acting on the first antisymmetric pair of a 4-tensor.
fn star_pair_first(metric: &Metric, t: &Ten4) -> Ten4 {
    let ginv = metric.ginv();
    let w = metric.vol_coeff();
    // Raise the first pair: up[c][d][k][l] = g^{ca} g^{db} t[a][b][k][l].
    let up = ten4_from_fn(|c, d, k, l| {
        let mut acc = Jet::constant(0.0, t[0][0][0][0].order());
        for a in 0..DIM {
            for b in 0..DIM {
                acc = acc + &ginv[c][a] * &ginv[d][b] * &t[a][b][k][l];
            }
        }
        acc
    });
    ten4_from_fn(|i, j, k, l| {
        let mut acc = Jet::constant(0.0, t[0][0][0][0].order());
        for c in 0..DIM {
            for d in 0..DIM {
                let e = eps4(i, j, c, d);
                if e != 0.0 {
                    acc = acc + &up[c][d][k][l] * e;
                }
            }
        }
        acc * w * 0.5
    })
}

/// Hodge star acting on the second antisymmetric pair of a 4-tensor.
fn star_pair_second(metric: &Metric, t: &Ten4) -> Ten4 {
    let ginv = metric.ginv();
    let w = metric.vol_coeff();
    let up = ten4_from_fn(|i, j, c, d| {
        let mut acc = Jet::constant(0.0, t[0][0][0][0].order());
        for a in 0..DIM {
            for b in 0..DIM {
                acc = acc + &ginv[c][a] * &ginv[d][b] * &t[i][j][a][b];
            }
        }
        acc
    });
    ten4_from_fn(|i, j, k, l| {
        let mut acc = Jet::constant(0.0, t[0][0][0][0].order());
        for c in 0..DIM {
            for d in 0..DIM {
                let e = eps4(k, l, c, d);
                if e != 0.0 {
                    acc = acc + &up[i][j][c][d] * e;
                }
            }
        }
        acc * w * 0.5
    })
}

/// Compute the full curvature chain available at the frame's jet order.
pub fn curvature_bundle(frame: &Frame) -> Result<CurvatureBundle, CurvatureError> {
    let order = frame.order();
    if order < 2 {
        return Err(CurvatureError::UnderOrdered {
            needed: 2,
            got: order,
        });
    }
    let metric = &frame.metric;
    let g = metric.g();
    let ginv = metric.ginv();
    let gamma = christoffel(metric)?;
    let dgamma = ten4_from_fn(|a, l, i, j| gamma[l][i][j].deriv(a));

    // R(e_i, e_j) e_k = rup[l][k][i][j] e_l.
    let rup = ten4_from_fn(|l, k, i, j| {
        let mut acc = &dgamma[i][l][j][k] - &dgamma[j][l][i][k];
        for m in 0..DIM {
            acc = acc + &gamma[m][j][k] * &gamma[l][i][m] - &gamma[m][i][k] * &gamma[l][j][m];
        }
        acc
    });
    let riem = ten4_from_fn(|i, j, k, l| {
        let mut acc = Jet::constant(0.0, rup[0][0][0][0].order());
        for m in 0..DIM {
            acc = acc + &g[m][l] * &rup[m][k][i][j];
        }
        acc
    });
    let ric = mat4_from_fn(|i, j| {
        let mut acc = rup[0][j][0][i].clone();
        for m in 1..DIM {
            acc = acc + &rup[m][j][m][i];
        }
        acc
    });
    let mut scal = Jet::constant(0.0, ric[0][0].order());
    for i in 0..DIM {
        for j in 0..DIM {
            scal = scal + &ginv[i][j] * &ric[i][j];
        }
    }
    let s = &scal * (1.0 / 6.0);
    let ric0 = mat4_from_fn(|i, j| &ric[i][j] - &scal * 0.25 * &g[i][j]);
    let h = mat4_from_fn(|i, j| &ric0[i][j] * 0.5 + &s * 0.25 * &g[i][j]);
    let kn = kn_product(&h, g);
    let weyl = ten4_from_fn(|i, j, k, l| -(&riem[i][j][k][l] + &kn[i][j][k][l]));

    let s1 = star_pair_first(metric, &weyl);
    let s2 = star_pair_second(metric, &weyl);
    let s12 = star_pair_second(metric, &s1);
    let weyl_plus = ten4_from_fn(|i, j, k, l| {
        (&weyl[i][j][k][l] + &s1[i][j][k][l] + &s2[i][j][k][l] + &s12[i][j][k][l]) * 0.25
    });
    let weyl_minus = ten4_from_fn(|i, j, k, l| {
        (&weyl[i][j][k][l] - &s1[i][j][k][l] - &s2[i][j][k][l] + &s12[i][j][k][l]) * 0.25
    });

    let cotton = if order >= 3 {
        let dh = nabla_two_tensor(&gamma, &h);
        Some(ten3_from_fn(|i, j, k| -&dh[i][j][k] + &dh[j][i][k]))
    } else {
        None
    };

    let curvature_scale = norm_ten4(metric, &riem);

    Ok(CurvatureBundle {
        order,
        gamma,
        riem,
        ric,
        scal,
        s,
        ric0,
        h,
        weyl,
        weyl_plus,
        weyl_minus,
        cotton,
        curvature_scale,
    })
}

/// Scalar curvature alone (used for conformally rescaled metrics where no
/// orientation data is needed).
pub fn scalar_curvature(g: Mat4) -> Result<Jet, CurvatureError> {
    let metric = Metric::new(g)?;
    let gamma = christoffel(&metric)?;
    let dgamma = ten4_from_fn(|a, l, i, j| gamma[l][i][j].deriv(a));
    let rup = ten4_from_fn(|l, k, i, j| {
        let mut acc = &dgamma[i][l][j][k] - &dgamma[j][l][i][k];
        for m in 0..DIM {
            acc = acc + &gamma[m][j][k] * &gamma[l][i][m] - &gamma[m][i][k] * &gamma[l][j][m];
        }
        acc
    });
    let ric = mat4_from_fn(|i, j| {
        let mut acc = rup[0][j][0][i].clone();
        for m in 1..DIM {
            acc = acc + &rup[m][j][m][i];
        }
        acc
    });
    let ginv = metric.ginv();
    let mut scal = Jet::constant(0.0, ric[0][0].order());
    for i in 0..DIM {
        for j in 0..DIM {
            scal = scal + &ginv[i][j] * &ric[i][j];
        }
    }
    Ok(scal)
}

/// Frobenius norm of a covariant 4-tensor at the value level, all indices
/// raised with the metric.
pub fn norm_ten4(metric: &Metric, t: &Ten4) -> f64 {
    let gi = mat4_values(metric.ginv());
    let tv: Vec<f64> = {
        let mut v = Vec::with_capacity(256);
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        v.push(t[i][j][k][l].value());
                    }
                }
            }
        }
        v
    };
    let at = |i: usize, j: usize, k: usize, l: usize| tv[((i * DIM + j) * DIM + k) * DIM + l];
    let mut acc = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                for l in 0..DIM {
                    let mut up = 0.0;
                    for a in 0..DIM {
                        for b in 0..DIM {
                            for c in 0..DIM {
                                for d in 0..DIM {
                                    up += gi[i][a] * gi[j][b] * gi[k][c] * gi[l][d] * at(a, b, c, d);
                                }
                            }
                        }
                    }
                    acc += at(i, j, k, l) * up;
                }
            }
        }
    }
    acc.max(0.0).sqrt()
}

/// Frobenius norm of a covariant 3-tensor at the value level.
pub fn norm_ten3(metric: &Metric, t: &Ten3) -> f64 {
    let gi = mat4_values(metric.ginv());
    let mut acc = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                let mut up = 0.0;
                for a in 0..DIM {
                    for b in 0..DIM {
                        for c in 0..DIM {
                            up += gi[i][a] * gi[j][b] * gi[k][c] * t[a][b][c].value();
                        }
                    }
                }
                acc += t[i][j][k].value() * up;
            }
        }
    }
    acc.max(0.0).sqrt()
}

/// Frobenius norm of a covariant 2-tensor at the value level.
pub fn norm_mat(metric: &Metric, t: &Mat4) -> f64 {
    let gi = mat4_values(metric.ginv());
    let tv = mat4_values(t);
    let mut acc = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            let mut up = 0.0;
            for a in 0..DIM {
                for b in 0..DIM {
                    up += gi[i][a] * gi[j][b] * tv[a][b];
                }
            }
            acc += tv[i][j] * up;
        }
    }
    acc.max(0.0).sqrt()
}

/// Norm of a 1-form at the value level.
pub fn norm_vec(metric: &Metric, a: &Vec4) -> f64 {
    metric.inner1(a, a).value().max(0.0).sqrt()
}

impl CurvatureBundle {
    /// Residual of the first Bianchi identity (cyclic sum on the first three
    /// slots), normalized by the local curvature scale.
    pub fn first_bianchi_residual(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        let v = self.riem[i][j][k][l].value()
                            + self.riem[j][k][i][l].value()
                            + self.riem[k][i][j][l].value();
                        dev = dev.max(v.abs());
                    }
                }
            }
        }
        dev / self.curvature_scale.max(1.0)
    }

    /// Largest trace of the Weyl tensor over any index pair, normalized.
    pub fn weyl_trace_residual(&self, metric: &Metric) -> f64 {
        let gi = mat4_values(metric.ginv());
        let mut dev = 0.0f64;
        // Trace over slots (1,3) suffices given the symmetries; check (1,3)
        // and (1,4) to be thorough.
        for j in 0..DIM {
            for l in 0..DIM {
                let mut t13 = 0.0;
                let mut t14 = 0.0;
                for a in 0..DIM {
                    for b in 0..DIM {
                        t13 += gi[a][b] * self.weyl[a][j][b][l].value();
                        t14 += gi[a][b] * self.weyl[a][j][l][b].value();
                    }
                }
                dev = dev.max(t13.abs()).max(t14.abs());
            }
        }
        dev / self.curvature_scale.max(1.0)
    }

    /// Residual of `weyl_plus + weyl_minus = weyl`, normalized.
    pub fn weyl_split_residual(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        let v = self.weyl_plus[i][j][k][l].value()
                            + self.weyl_minus[i][j][k][l].value()
                            - self.weyl[i][j][k][l].value();
                        dev = dev.max(v.abs());
                    }
                }
            }
        }
        dev / self.curvature_scale.max(1.0)
    }
}

/// Orthonormal, positively-oriented tangent frame at the value level, plus
/// orthonormal bases of the selfdual and anti-selfdual 2-form spaces.
pub struct PointFrame {
    /// `e[a][i]`: coordinates of the a-th frame vector.
    pub e: [[f64; DIM]; DIM],
    /// Covariant components of the selfdual basis (each of unit norm).
    pub sd_basis: [[[f64; DIM]; DIM]; 3],
    /// Covariant components of the anti-selfdual basis.
    pub asd_basis: [[[f64; DIM]; DIM]; 3],
}

pub fn point_frame(metric: &Metric) -> PointFrame {
    let gv = mat4_values(metric.g());
    let dot = |a: &[f64; DIM], b: &[f64; DIM]| -> f64 {
        let mut acc = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                acc += gv[i][j] * a[i] * b[j];
            }
        }
        acc
    };
    // Gram-Schmidt on the coordinate basis.
    let mut e = [[0.0f64; DIM]; DIM];
    for a in 0..DIM {
        let mut v = [0.0f64; DIM];
        v[a] = 1.0;
        for b in 0..a {
            let c = dot(&v, &e[b]);
            for i in 0..DIM {
                v[i] -= c * e[b][i];
            }
        }
        let n = dot(&v, &v).sqrt();
        for i in 0..DIM {
            e[a][i] = v[i] / n;
        }
    }
    // Positive orientation with respect to the stored volume coefficient.
    let det_e = {
        let m = e;
        let mut det = 0.0;
        for p in [
            (0usize, 1usize, 2usize, 3usize, 1.0),
            (0, 1, 3, 2, -1.0),
            (0, 2, 1, 3, -1.0),
            (0, 2, 3, 1, 1.0),
            (0, 3, 1, 2, 1.0),
            (0, 3, 2, 1, -1.0),
            (1, 0, 2, 3, -1.0),
            (1, 0, 3, 2, 1.0),
            (1, 2, 0, 3, 1.0),
            (1, 2, 3, 0, -1.0),
            (1, 3, 0, 2, -1.0),
            (1, 3, 2, 0, 1.0),
            (2, 0, 1, 3, 1.0),
            (2, 0, 3, 1, -1.0),
            (2, 1, 0, 3, -1.0),
            (2, 1, 3, 0, 1.0),
            (2, 3, 0, 1, 1.0),
            (2, 3, 1, 0, -1.0),
            (3, 0, 1, 2, 1.0),
            (3, 0, 2, 1, -1.0),
            (3, 1, 0, 2, 1.0),
            (3, 1, 2, 0, -1.0),
            (3, 2, 0, 1, -1.0),
            (3, 2, 1, 0, 1.0),
        ] {
            det += p.4 * m[0][p.0] * m[1][p.1] * m[2][p.2] * m[3][p.3];
        }
        det
    };
    if det_e * metric.vol_coeff().value() < 0.0 {
        e.swap(2, 3);
    }
    // Coframe theta^a_i = g_{ij} e[a]^j.
    let mut th = [[0.0f64; DIM]; DIM];
    for a in 0..DIM {
        for i in 0..DIM {
            let mut acc = 0.0;
            for j in 0..DIM {
                acc += gv[i][j] * e[a][j];
            }
            th[a][i] = acc;
        }
    }
    let wedge = |a: usize, b: usize| -> [[f64; DIM]; DIM] {
        std::array::from_fn(|i| std::array::from_fn(|j| th[a][i] * th[b][j] - th[a][j] * th[b][i]))
    };
    let combine = |p: [[f64; DIM]; DIM], q: [[f64; DIM]; DIM], sign: f64| -> [[f64; DIM]; DIM] {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        std::array::from_fn(|i| std::array::from_fn(|j| inv_sqrt2 * (p[i][j] + sign * q[i][j])))
    };
    let w01 = wedge(0, 1);
    let w23 = wedge(2, 3);
    let w02 = wedge(0, 2);
    let w13 = wedge(1, 3);
    let w03 = wedge(0, 3);
    let w12 = wedge(1, 2);
    PointFrame {
        e,
        sd_basis: [
            combine(w01, w23, 1.0),
            combine(w02, w13, -1.0),
            combine(w03, w12, 1.0),
        ],
        asd_basis: [
            combine(w01, w23, -1.0),
            combine(w02, w13, 1.0),
            combine(w03, w12, -1.0),
        ],
    }
}

/// The action of a curvature-type 4-tensor on a value-level 2-form:
/// `(T(F))_{ij} = (1/2) T_{ijkl} F^{kl}`.
fn act_on_form(
    metric: &Metric,
    t: &Ten4,
    f: &[[f64; DIM]; DIM],
) -> [[f64; DIM]; DIM] {
    let gi = mat4_values(metric.ginv());
    let mut fu = [[0.0f64; DIM]; DIM];
    for k in 0..DIM {
        for l in 0..DIM {
            let mut acc = 0.0;
            for a in 0..DIM {
                for b in 0..DIM {
                    acc += gi[k][a] * gi[l][b] * f[a][b];
                }
            }
            fu[k][l] = acc;
        }
    }
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = 0.0;
            for k in 0..DIM {
                for l in 0..DIM {
                    acc += t[i][j][k][l].value() * fu[k][l];
                }
            }
            0.5 * acc
        })
    })
}

fn inner2_values(metric: &Metric, a: &[[f64; DIM]; DIM], b: &[[f64; DIM]; DIM]) -> f64 {
    let gi = mat4_values(metric.ginv());
    let mut acc = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            let mut up = 0.0;
            for k in 0..DIM {
                for l in 0..DIM {
                    up += gi[i][k] * gi[j][l] * b[k][l];
                }
            }
            acc += a[i][j] * up;
        }
    }
    0.5 * acc
}

/// Spectral data of one Weyl half acting on its 3-dimensional form space.
pub struct WeylHalfSpectrum {
    /// Eigenvalues, ascending.
    pub eigenvalues: [f64; 3],
    /// Residual of the distinguished form being an eigenform, normalized.
    pub eigenform_residual: f64,
    /// Rayleigh quotient of the distinguished form (its eigenvalue estimate).
    pub distinguished_eigenvalue: f64,
    /// Gap between the two non-distinguished eigenvalues, normalized.
    pub double_eigenvalue_gap: f64,
}

/// Spectrum of a Weyl half on its eigenspace, with the distinguished 2-form
/// (omega for the selfdual half, an opposite-orientation form for the
/// anti-selfdual half) tested as an eigenform.
pub fn weyl_half_spectrum(
    metric: &Metric,
    half: &Ten4,
    basis: &[[[f64; DIM]; DIM]; 3],
    distinguished: &TwoForm,
) -> WeylHalfSpectrum {
    let mut block = [[0.0f64; 3]; 3];
    for a in 0..3 {
        let wa = act_on_form(metric, half, &basis[a]);
        for b in 0..3 {
            block[a][b] = inner2_values(metric, &wa, &basis[b]);
        }
    }
    let sym: [[f64; 3]; 3] =
        std::array::from_fn(|a| std::array::from_fn(|b| 0.5 * (block[a][b] + block[b][a])));
    // Normalize eigenvalues so a compatible structure carries the
    // distinguished eigenvalue `WEYL_EIGENVALUE_RATIO * s` on its selfdual
    // half (the raw Gram quotient of the double contraction is 3/2 of that).
    let eig_scale = 2.0 / 3.0;
    let eigenvalues = sym3_eigenvalues(sym).map(|e| e * eig_scale);
    let dval = tensor::mat4_values(&distinguished.0);
    let dnorm2 = inner2_values(metric, &dval, &dval);
    let wd = act_on_form(metric, half, &dval);
    let rayleigh_raw = inner2_values(metric, &wd, &dval) / dnorm2;
    let mut res2 = 0.0;
    let resid: [[f64; DIM]; DIM] =
        std::array::from_fn(|i| std::array::from_fn(|j| wd[i][j] - rayleigh_raw * dval[i][j]));
    res2 += inner2_values(metric, &resid, &resid).max(0.0);
    let rayleigh = rayleigh_raw * eig_scale;
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eigenform_residual = (res2.sqrt() / dnorm2.sqrt()) / scale.max(1.0);
    // Which eigenvalue is closest to the Rayleigh quotient? The other two form
    // the "double" pair.
    let mut idx = 0;
    let mut best = f64::INFINITY;
    for (k, ev) in eigenvalues.iter().enumerate() {
        let d = (ev - rayleigh).abs();
        if d < best {
            best = d;
            idx = k;
        }
    }
    let others: Vec<f64> = (0..3).filter(|&k| k != idx).map(|k| eigenvalues[k]).collect();
    let double_eigenvalue_gap = (others[0] - others[1]).abs() / scale.max(1.0);
    WeylHalfSpectrum {
        eigenvalues,
        eigenform_residual,
        distinguished_eigenvalue: rayleigh,
        double_eigenvalue_gap,
    }
}

/// Value-level norm of one Weyl half, normalized by the curvature scale.
pub fn weyl_half_norm(metric: &Metric, half: &Ten4) -> f64 {
    norm_ten4(metric, half)
}

/// Residual of `nabla J = 0` (Kähler condition), normalized.
pub fn nabla_j_residual(frame: &Frame, bundle: &CurvatureBundle) -> f64 {
    let dj = nabla_endo(&bundle.gamma, &frame.j);
    let mut dev = 0.0f64;
    for k in 0..DIM {
        for i in 0..DIM {
            for j in 0..DIM {
                dev = dev.max(dj[k][i][j].value().abs());
            }
        }
    }
    dev
}

/// Value-level norm of `d omega`.
pub fn d_omega_residual(frame: &Frame) -> f64 {
    tensor::d_two_form(&frame.omega).max_abs_value()
}

/// Nijenhuis tensor `N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]` on
/// coordinate fields, returned as its value-level norm (indices lowered and
/// raised with the metric).
pub fn nijenhuis_norm(frame: &Frame) -> f64 {
    let j = &frame.j;
    let mut n = [[[0.0f64; DIM]; DIM]; DIM]; // n[c][i][j]
    let jv = mat4_values(j);
    let mut djv = [[[0.0f64; DIM]; DIM]; DIM]; // d_k J^c_i
    for k in 0..DIM {
        for c in 0..DIM {
            for i in 0..DIM {
                djv[k][c][i] = j[c][i].deriv(k).value();
            }
        }
    }
    for i in 0..DIM {
        for jx in 0..DIM {
            for c in 0..DIM {
                let mut acc = 0.0;
                for a in 0..DIM {
                    acc += jv[a][i] * djv[a][c][jx] - jv[a][jx] * djv[a][c][i];
                    acc += jv[c][a] * djv[jx][a][i] - jv[c][a] * djv[i][a][jx];
                }
                n[c][i][jx] = acc;
            }
        }
    }
    let gv = mat4_values(frame.metric.g());
    let gi = mat4_values(frame.metric.ginv());
    let mut acc = 0.0;
    for c in 0..DIM {
        for i in 0..DIM {
            for jx in 0..DIM {
                let mut up = 0.0;
                for cc in 0..DIM {
                    for ii in 0..DIM {
                        for jj in 0..DIM {
                            up += gv[c][cc] * gi[i][ii] * gi[jx][jj] * n[cc][ii][jj];
                        }
                    }
                }
                acc += n[c][i][jx] * up;
            }
        }
    }
    acc.max(0.0).sqrt()
}

/// Symmetrized covariant derivative of the dual of a vector field;
/// vanishes exactly when the field is Killing.  Returns the normalized norm.
pub fn killing_residual(frame: &Frame, bundle: &CurvatureBundle, k_field: &Vec4) -> f64 {
    let kb = frame.metric.lower1(k_field);
    let dk = nabla_one_form(&bundle.gamma, &kb);
    let sym = mat4_from_fn(|i, j| (&dk[i][j] + &dk[j][i]) * 0.5);
    let scale = {
        let mut m = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                m = m.max(dk[i][j].value().abs());
            }
        }
        m
    };
    norm_mat(&frame.metric, &sym) / scale.max(1.0)
}

/// Hessian of a scalar: `(nabla d f)_{ij}`.
pub fn hessian(gamma: &Ten3, f: &Jet) -> Mat4 {
    let df = vec4_from_fn(|i| f.deriv(i));
    nabla_one_form(gamma, &df)
}

/// Residual of `f` being a holomorphic potential: the J-anti-invariant part
/// of its Hessian (vanishes iff `J grad f` is Killing), normalized by the
/// Hessian magnitude.
pub fn potential_residual(frame: &Frame, bundle: &CurvatureBundle, f: &Jet) -> f64 {
    let hess = hessian(&bundle.gamma, f);
    let (_, anti) = tensor::sym_j_split(&frame.j, &hess);
    let scale = norm_mat(&frame.metric, &hess);
    norm_mat(&frame.metric, &anti) / scale.max(1.0)
}

/// Sectional curvatures over randomly sampled Lagrangian planes (planes with
/// `omega(X, Y) = 0`), returned as `(min, max)`.
pub fn lagrangian_sectional_range(
    frame: &Frame,
    bundle: &CurvatureBundle,
    rng: &mut impl rand::Rng,
    pairs: usize,
) -> (f64, f64) {
    let gv = mat4_values(frame.metric.g());
    let jv = mat4_values(&frame.j);
    let dot = |a: &[f64; DIM], b: &[f64; DIM]| -> f64 {
        let mut acc = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                acc += gv[i][j] * a[i] * b[j];
            }
        }
        acc
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut found = 0usize;
    while found < pairs {
        let mut x = [0.0f64; DIM];
        let mut y = [0.0f64; DIM];
        for i in 0..DIM {
            x[i] = rng.gen_range(-1.0..1.0);
            y[i] = rng.gen_range(-1.0..1.0);
        }
        let nx = dot(&x, &x).sqrt();
        if nx < 1e-3 {
            continue;
        }
        for xi in x.iter_mut() {
            *xi /= nx;
        }
        // J x in coordinates.
        let jx: [f64; DIM] = std::array::from_fn(|i| {
            let mut acc = 0.0;
            for m in 0..DIM {
                acc += jv[i][m] * x[m];
            }
            acc
        });
        // Remove the x and Jx components: the remainder spans a Lagrangian
        // plane with x (omega(x, y) = g(Jx, y) = 0).
        let cx = dot(&y, &x);
        let cjx = dot(&y, &jx);
        for i in 0..DIM {
            y[i] -= cx * x[i] + cjx * jx[i];
        }
        let ny = dot(&y, &y).sqrt();
        if ny < 1e-3 {
            continue;
        }
        for yi in y.iter_mut() {
            *yi /= ny;
        }
        let mut k = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                for kk in 0..DIM {
                    for l in 0..DIM {
                        k += bundle.riem[i][j][kk][l].value() * x[i] * y[j] * y[kk] * x[l];
                    }
                }
            }
        }
        lo = lo.min(k);
        hi = hi.max(k);
        found += 1;
    }
    (lo, hi)
}

/// Vector field `J grad f`.
pub fn j_grad(frame: &Frame, f: &Jet) -> Vec4 {
    let df = vec4_from_fn(|i| f.deriv(i));
    let grad = frame.metric.raise1(&df);
    apply_endo(&frame.j, &grad)
}
