//! Pointwise multilinear algebra on a 4-dimensional tangent space.
//!
//! All component containers hold [`Jet`] entries, so every operation here is
//! simultaneously a value-level operation and an exact derivative-level
//! operation.  Index conventions used throughout the crate:
//!
//! * metrics and 2-forms are covariant: `g[i][j] = g(e_i, e_j)`,
//!   `f[i][j] = f(e_i, e_j)`;
//! * endomorphisms carry the contravariant index first: `a[i][j] = a^i_j`,
//!   i.e. `A(e_j) = a[i][j] e_i`;
//! * the orientation is stored as the signed coefficient `w` of
//!   `dx0^dx1^dx2^dx3` in the chosen volume form.  Compatible triples pass the
//!   *symplectic* orientation `w = (1/2) (omega ^ omega)_{0123}`, which may be
//!   negative relative to the coordinate order; the Hodge star reads the sign
//!   from `w`, never from index relabeling.
//! * the inner product of 2-forms carries the 1/2 normalization
//!   `<a, b> = (1/2) a_{ij} b^{ij}`, so a compatible Kähler form has
//!   `|omega|^2 = 2`.

use crate::jets::Jet;
use thiserror::Error;

pub const DIM: usize = 4;

pub type Vec4 = [Jet; DIM];
pub type Mat4 = [[Jet; DIM]; DIM];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("matrix entry ({i},{j}) breaks symmetry by {dev:e}")]
    NotSymmetric { i: usize, j: usize, dev: f64 },
    #[error("constant term is not positive definite: leading minor {k} = {minor:e}")]
    NotPositiveDefinite { k: usize, minor: f64 },
    #[error("singular matrix: determinant constant term vanishes")]
    SingularMatrix,
    #[error("inverse residual {residual:e} exceeds 1e-12")]
    InverseResidual { residual: f64 },
    #[error("orientation coefficient {w:e} inconsistent with metric volume {sqrt_det:e}")]
    OrientationMismatch { w: f64, sqrt_det: f64 },
    #[error("2-form is not anti-selfdual: selfdual part has norm {dev:e}")]
    NotAntiSelfdual { dev: f64 },
    #[error("2-form norm {norm:e} below degeneracy threshold {threshold:e}")]
    DegenerateNorm { norm: f64, threshold: f64 },
}

/// Build a 4x4 component array from a closure.
pub fn mat4_from_fn(mut f: impl FnMut(usize, usize) -> Jet) -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| f(i, j)))
}

/// Build a 4-component array from a closure.
pub fn vec4_from_fn(mut f: impl FnMut(usize) -> Jet) -> Vec4 {
    std::array::from_fn(|i| f(i))
}

pub fn mat4_zero(order: usize) -> Mat4 {
    mat4_from_fn(|_, _| Jet::constant(0.0, order))
}

pub fn mat4_identity(order: usize) -> Mat4 {
    mat4_from_fn(|i, j| Jet::constant(if i == j { 1.0 } else { 0.0 }, order))
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    mat4_from_fn(|i, j| {
        let mut acc = &a[i][0] * &b[0][j];
        for k in 1..DIM {
            acc = acc + &a[i][k] * &b[k][j];
        }
        acc
    })
}

/// Determinant by cofactor expansion over 2x2 minors of the top two rows.
pub fn mat4_det(a: &Mat4) -> Jet {
    let m = |r0: usize, r1: usize, c0: usize, c1: usize| -> Jet {
        &a[r0][c0] * &a[r1][c1] - &a[r0][c1] * &a[r1][c0]
    };
    let s0 = m(0, 1, 0, 1);
    let s1 = m(0, 1, 0, 2);
    let s2 = m(0, 1, 0, 3);
    let s3 = m(0, 1, 1, 2);
    let s4 = m(0, 1, 1, 3);
    let s5 = m(0, 1, 2, 3);
    let c5 = m(2, 3, 2, 3);
    let c4 = m(2, 3, 1, 3);
    let c3 = m(2, 3, 1, 2);
    let c2 = m(2, 3, 0, 3);
    let c1 = m(2, 3, 0, 2);
    let c0 = m(2, 3, 0, 1);
    s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0
}

/// Inverse via the adjugate; errors when the determinant's value vanishes.
pub fn mat4_inv(a: &Mat4) -> Result<Mat4, TensorError> {
    let det = mat4_det(a);
    if det.value() == 0.0 {
        return Err(TensorError::SingularMatrix);
    }
    // Cofactor C_{ij} = (-1)^{i+j} det(minor_ij); inverse = adj / det with
    // adj = C^T.
    let minor = |r: usize, c: usize| -> Jet {
        let rows: Vec<usize> = (0..DIM).filter(|&k| k != r).collect();
        let cols: Vec<usize> = (0..DIM).filter(|&k| k != c).collect();
        let e = |i: usize, j: usize| &a[rows[i]][cols[j]];
        e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
            - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
    };
    let inv = mat4_from_fn(|i, j| {
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        minor(j, i) * sign / &det
    });
    Ok(inv)
}

/// Antisymmetric 2-form components.
#[derive(Debug, Clone)]
pub struct TwoForm(pub Mat4);

impl TwoForm {
    /// Build from the six independent upper-triangle components
    /// `(f01, f02, f03, f12, f13, f23)`.
    pub fn from_upper(order: usize, u: [Jet; 6]) -> TwoForm {
        let z = || Jet::constant(0.0, order);
        let [f01, f02, f03, f12, f13, f23] = u;
        TwoForm([
            [z(), f01.clone(), f02.clone(), f03.clone()],
            [-&f01, z(), f12.clone(), f13.clone()],
            [-&f02, -&f12, z(), f23.clone()],
            [-&f03, -&f13, -&f23, z()],
        ])
    }

    pub fn from_fn_upper(order: usize, mut f: impl FnMut(usize, usize) -> Jet) -> TwoForm {
        TwoForm::from_upper(
            order,
            [f(0, 1), f(0, 2), f(0, 3), f(1, 2), f(1, 3), f(2, 3)],
        )
    }

    pub fn zero(order: usize) -> TwoForm {
        TwoForm(mat4_zero(order))
    }

    pub fn scale(&self, s: f64) -> TwoForm {
        TwoForm(mat4_from_fn(|i, j| &self.0[i][j] * s))
    }

    pub fn scale_jet(&self, s: &Jet) -> TwoForm {
        TwoForm(mat4_from_fn(|i, j| &self.0[i][j] * s))
    }

    pub fn add(&self, o: &TwoForm) -> TwoForm {
        TwoForm(mat4_from_fn(|i, j| &self.0[i][j] + &o.0[i][j]))
    }

    pub fn sub(&self, o: &TwoForm) -> TwoForm {
        TwoForm(mat4_from_fn(|i, j| &self.0[i][j] - &o.0[i][j]))
    }

    /// Interior product with a vector: `(i_V f)_j = V^i f_{ij}`.
    pub fn contract_vector(&self, v: &Vec4) -> Vec4 {
        vec4_from_fn(|j| {
            let mut acc = &v[0] * &self.0[0][j];
            for i in 1..DIM {
                acc = acc + &v[i] * &self.0[i][j];
            }
            acc
        })
    }

    /// Largest absolute value among components.
    pub fn max_abs_value(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                m = m.max(self.0[i][j].value().abs());
            }
        }
        m
    }
}

/// Totally antisymmetric 3-form components.
#[derive(Debug, Clone)]
pub struct ThreeForm(pub Box<[[[Jet; DIM]; DIM]; DIM]>);

impl ThreeForm {
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> Jet) -> ThreeForm {
        ThreeForm(Box::new(std::array::from_fn(|i| {
            std::array::from_fn(|j| std::array::from_fn(|k| f(i, j, k)))
        })))
    }

    pub fn max_abs_value(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    m = m.max(self.0[i][j][k].value().abs());
                }
            }
        }
        m
    }
}

/// Permutation symbol on four indices.
pub fn eps4(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let p = [i as i32, j as i32, k as i32, l as i32];
    let mut sign = 1.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            match p[a].cmp(&p[b]) {
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Equal => return 0.0,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    sign
}

/// Riemannian metric with cached inverse and a signed orientation coefficient.
#[derive(Debug, Clone)]
pub struct Metric {
    g: Mat4,
    ginv: Mat4,
    /// Signed coefficient of `dx0^dx1^dx2^dx3` in the volume form.
    vol: Jet,
}

impl Metric {
    /// Metric with the coordinate orientation (`vol = +sqrt(det g)`).
    pub fn new(g: Mat4) -> Result<Metric, TensorError> {
        let vol = mat4_det(&g)
            .sqrt()
            .map_err(|_| TensorError::NotPositiveDefinite {
                k: DIM,
                minor: mat4_det(&g).value(),
            })?;
        Metric::with_orientation(g, vol)
    }

    /// Metric with an explicit signed orientation coefficient.  The magnitude
    /// must match `sqrt(det g)`: the orientation picks a sign, not a scale.
    pub fn with_orientation(g: Mat4, vol: Jet) -> Result<Metric, TensorError> {
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                let dev = (&g[i][j] - &g[j][i]).max_abs_coeff();
                let scale = g[i][j].max_abs_coeff().max(1.0);
                if dev > 1e-10 * scale {
                    return Err(TensorError::NotSymmetric { i, j, dev });
                }
            }
        }
        // Leading principal minors of the constant term.
        let gv: [[f64; DIM]; DIM] = std::array::from_fn(|i| std::array::from_fn(|j| g[i][j].value()));
        let mut minor_scale = 1.0f64;
        for k in 1..=DIM {
            let minor = det_leading(&gv, k);
            if minor <= 0.0 {
                return Err(TensorError::NotPositiveDefinite { k, minor });
            }
            minor_scale = minor;
        }
        let sqrt_det = minor_scale.sqrt();
        let wv = vol.value();
        if (wv.abs() - sqrt_det).abs() > 1e-8 * sqrt_det.max(1.0) {
            return Err(TensorError::OrientationMismatch { w: wv, sqrt_det });
        }
        let ginv = mat4_inv(&g)?;
        // Residual of g * ginv against the identity, at the value level.
        let prod = mat4_mul(&g, &ginv);
        let mut res = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                let target = if i == j { 1.0 } else { 0.0 };
                res = res.max((prod[i][j].value() - target).abs());
            }
        }
        if res > 1e-12 * gv.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs())) {
            return Err(TensorError::InverseResidual { residual: res });
        }
        Ok(Metric { g, ginv, vol })
    }

    pub fn g(&self) -> &Mat4 {
        &self.g
    }

    pub fn ginv(&self) -> &Mat4 {
        &self.ginv
    }

    /// Signed orientation coefficient.
    pub fn vol_coeff(&self) -> &Jet {
        &self.vol
    }

    /// Raise the index of a 1-form.
    pub fn raise1(&self, a: &Vec4) -> Vec4 {
        vec4_from_fn(|i| {
            let mut acc = &self.ginv[i][0] * &a[0];
            for j in 1..DIM {
                acc = acc + &self.ginv[i][j] * &a[j];
            }
            acc
        })
    }

    /// Lower the index of a vector.
    pub fn lower1(&self, v: &Vec4) -> Vec4 {
        vec4_from_fn(|i| {
            let mut acc = &self.g[i][0] * &v[0];
            for j in 1..DIM {
                acc = acc + &self.g[i][j] * &v[j];
            }
            acc
        })
    }

    /// Inner product of 1-forms.
    pub fn inner1(&self, a: &Vec4, b: &Vec4) -> Jet {
        let bu = self.raise1(b);
        let mut acc = &a[0] * &bu[0];
        for i in 1..DIM {
            acc = acc + &a[i] * &bu[i];
        }
        acc
    }

    /// Raise both indices of a 2-form: `F^{ij} = g^{ia} g^{jb} F_{ab}`.
    pub fn raise2(&self, f: &TwoForm) -> Mat4 {
        let tmp = mat4_from_fn(|i, b| {
            let mut acc = &self.ginv[i][0] * &f.0[0][b];
            for a in 1..DIM {
                acc = acc + &self.ginv[i][a] * &f.0[a][b];
            }
            acc
        });
        mat4_from_fn(|i, j| {
            let mut acc = &tmp[i][0] * &self.ginv[j][0];
            for b in 1..DIM {
                acc = acc + &tmp[i][b] * &self.ginv[j][b];
            }
            acc
        })
    }

    /// Inner product of 2-forms with the 1/2 normalization.
    pub fn inner2(&self, a: &TwoForm, b: &TwoForm) -> Jet {
        let bu = self.raise2(b);
        let mut acc = Jet::constant(0.0, a.0[0][1].order().min(bu[0][1].order()));
        for i in 0..DIM {
            for j in 0..DIM {
                acc = acc + &a.0[i][j] * &bu[i][j];
            }
        }
        acc * 0.5
    }

    /// Norm of a 2-form under the 1/2-normalized inner product.
    pub fn norm2(&self, a: &TwoForm) -> Result<Jet, TensorError> {
        self.inner2(a, a)
            .sqrt()
            .map_err(|_| TensorError::DegenerateNorm {
                norm: 0.0,
                threshold: 0.0,
            })
    }

    /// Hodge star on 2-forms: `(*F)_{ij} = (w/2) eps_{ijkl} F^{kl}`.
    ///
    /// `flip` evaluates the star of the opposite orientation (same components,
    /// negated sign), used when a computation must see the anti-complex
    /// orientation without touching the stored one.
    pub fn star2_oriented(&self, f: &TwoForm, flip: bool) -> TwoForm {
        let fu = self.raise2(f);
        let w = if flip { -&self.vol } else { self.vol.clone() };
        TwoForm::from_fn_upper(f.0[0][1].order().min(self.vol.order()), |i, j| {
            let mut acc = Jet::constant(0.0, fu[0][1].order().min(w.order()));
            for k in 0..DIM {
                for l in 0..DIM {
                    let e = eps4(i, j, k, l);
                    if e != 0.0 {
                        acc = acc + &fu[k][l] * e;
                    }
                }
            }
            acc * &w * 0.5
        })
    }

    pub fn star2(&self, f: &TwoForm) -> TwoForm {
        self.star2_oriented(f, false)
    }

    /// Selfdual / anti-selfdual split: `f = f+ + f-`, `f± = (f ± *f)/2`.
    pub fn sd_asd_split(&self, f: &TwoForm) -> (TwoForm, TwoForm) {
        let sf = self.star2(f);
        (f.add(&sf).scale(0.5), f.sub(&sf).scale(0.5))
    }

    /// Hodge star from 3-forms to 1-forms:
    /// `(*t)_m = (w/6) eps_{abcm} t^{abc}` with all indices raised by `g`.
    pub fn star3(&self, t: &ThreeForm) -> Vec4 {
        let order = t.0[0][1][2].order().min(self.vol.order());
        // Raise all three indices.
        let mut up = ThreeForm::from_fn(|_, _, _| Jet::constant(0.0, order));
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    let mut acc = Jet::constant(0.0, order);
                    for i in 0..DIM {
                        for j in 0..DIM {
                            for k in 0..DIM {
                                let prod = &self.ginv[a][i] * &self.ginv[b][j];
                                acc = acc + prod * &self.ginv[c][k] * &t.0[i][j][k];
                            }
                        }
                    }
                    up.0[a][b][c] = acc;
                }
            }
        }
        vec4_from_fn(|m| {
            let mut acc = Jet::constant(0.0, order);
            for a in 0..DIM {
                for b in 0..DIM {
                    for c in 0..DIM {
                        let e = eps4(a, b, c, m);
                        if e != 0.0 {
                            acc = acc + &up.0[a][b][c] * e;
                        }
                    }
                }
            }
            acc * &self.vol * (1.0 / 6.0)
        })
    }

    /// Pfaffian normalized so a compatible Kähler form has `pf = 4`:
    /// `pf(f) = 2 * star(f ^ f)` where `star` divides a 4-form by the volume.
    pub fn pfaffian(&self, f: &TwoForm) -> Jet {
        wedge22_top(f, f) * 2.0 / &self.vol
    }

    /// Endomorphism associated to a 2-form by `f(X, Y) = g(A X, Y)`:
    /// `A^a_i = f_{ij} g^{ja}`.
    pub fn endo_from_form(&self, f: &TwoForm) -> Mat4 {
        mat4_from_fn(|a, i| {
            let mut acc = &f.0[i][0] * &self.ginv[0][a];
            for j in 1..DIM {
                acc = acc + &f.0[i][j] * &self.ginv[j][a];
            }
            acc
        })
    }

    /// Anti-selfdual eigendata: for an ASD 2-form `f`, its pointwise norm
    /// eigenvalue `lambda = |f| / sqrt(2)` and the normalized form
    /// `f / lambda` (a candidate almost-complex Kähler form for the reversed
    /// orientation, squaring to -Id when nondegenerate).
    ///
    /// `zero_threshold` is an absolute floor (callers scale it by the local
    /// metric magnitude); below it the form is reported degenerate.
    pub fn asd_eigendata(
        &self,
        f: &TwoForm,
        zero_threshold: f64,
    ) -> Result<(Jet, TwoForm), TensorError> {
        let (sd, _) = self.sd_asd_split(f);
        let fnorm2 = self.inner2(f, f);
        let sd_dev = self.inner2(&sd, &sd).value().max(0.0).sqrt();
        if sd_dev > 1e-8 * (1.0 + fnorm2.value().abs().sqrt()) {
            return Err(TensorError::NotAntiSelfdual { dev: sd_dev });
        }
        let lambda2 = fnorm2 * 0.5;
        if lambda2.value() <= zero_threshold * zero_threshold {
            return Err(TensorError::DegenerateNorm {
                norm: lambda2.value().max(0.0).sqrt(),
                threshold: zero_threshold,
            });
        }
        let lambda = lambda2.sqrt().expect("positive by the threshold check");
        let inv = lambda.recip().expect("nonzero by the threshold check");
        Ok((lambda, f.scale_jet(&inv)))
    }
}

fn det_leading(m: &[[f64; DIM]; DIM], k: usize) -> f64 {
    match k {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        4 => {
            let mut det = 0.0;
            for c in 0..4 {
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                let rows = [1, 2, 3];
                let cols: Vec<usize> = (0..4).filter(|&x| x != c).collect();
                let e = |i: usize, j: usize| m[rows[i]][cols[j]];
                let minor = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                    - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                    + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
                det += sign * m[0][c] * minor;
            }
            det
        }
        _ => unreachable!(),
    }
}

/// Top coefficient of `a ^ b` for 2-forms: `(a ^ b)(e0, e1, e2, e3)`.
pub fn wedge22_top(a: &TwoForm, b: &TwoForm) -> Jet {
    let t = |i: usize, j: usize, k: usize, l: usize| &a.0[i][j] * &b.0[k][l];
    t(0, 1, 2, 3) - t(0, 2, 1, 3) + t(0, 3, 1, 2) + t(2, 3, 0, 1) - t(1, 3, 0, 2) + t(1, 2, 0, 3)
}

/// Exterior derivative of a 1-form (components are jets of one order less).
pub fn d_one_form(a: &Vec4) -> TwoForm {
    TwoForm::from_fn_upper(a[0].order() - 1, |i, j| a[j].deriv(i) - a[i].deriv(j))
}

/// Exterior derivative of a 2-form.
pub fn d_two_form(f: &TwoForm) -> ThreeForm {
    ThreeForm::from_fn(|i, j, k| f.0[j][k].deriv(i) - f.0[i][k].deriv(j) + f.0[i][j].deriv(k))
}

/// Wedge of a 1-form with a 2-form.
pub fn wedge12(a: &Vec4, f: &TwoForm) -> ThreeForm {
    ThreeForm::from_fn(|i, j, k| {
        &a[i] * &f.0[j][k] - &a[j] * &f.0[i][k] + &a[k] * &f.0[i][j]
    })
}

/// Wedge of two 1-forms.
pub fn wedge11(a: &Vec4, b: &Vec4) -> TwoForm {
    TwoForm::from_fn_upper(a[0].order().min(b[0].order()), |i, j| {
        &a[i] * &b[j] - &a[j] * &b[i]
    })
}

/// Action of an almost-complex structure on a 1-form: `(J a)(X) = -a(J X)`,
/// the metric dual of rotating the dual vector by `J`.
pub fn j_one_form(j: &Mat4, a: &Vec4) -> Vec4 {
    vec4_from_fn(|i| {
        let mut acc = -(&a[0] * &j[0][i]);
        for m in 1..DIM {
            acc = acc - &a[m] * &j[m][i];
        }
        acc
    })
}

/// Action of an endomorphism on a vector.
pub fn apply_endo(j: &Mat4, v: &Vec4) -> Vec4 {
    vec4_from_fn(|i| {
        let mut acc = &j[i][0] * &v[0];
        for m in 1..DIM {
            acc = acc + &j[i][m] * &v[m];
        }
        acc
    })
}

/// J-invariant and J-anti-invariant parts of a symmetric 2-tensor:
/// `inv = (T + T(J., J.))/2`, `anti = (T - T(J., J.))/2`.
pub fn sym_j_split(j: &Mat4, t: &Mat4) -> (Mat4, Mat4) {
    let tjj = mat4_from_fn(|i, k| {
        let mut acc = Jet::constant(0.0, t[0][0].order().min(j[0][0].order()));
        for a in 0..DIM {
            for b in 0..DIM {
                acc = acc + &j[a][i] * &j[b][k] * &t[a][b];
            }
        }
        acc
    });
    (
        mat4_from_fn(|i, k| (&t[i][k] + &tjj[i][k]) * 0.5),
        mat4_from_fn(|i, k| (&t[i][k] - &tjj[i][k]) * 0.5),
    )
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending (Cardano / trigonometric
/// form; robust for the well-conditioned spectra showing up in Weyl blocks).
pub fn sym3_eigenvalues(a: [[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b: [[f64; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p)
    });
    let detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut d = [e1, e2, e3];
    d.sort_by(f64::total_cmp);
    d
}

/// Value-level snapshot of a component matrix.
pub fn mat4_values(m: &Mat4) -> [[f64; DIM]; DIM] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Jet;
    use approx::assert_relative_eq;

    fn euclidean(order: usize) -> Metric {
        Metric::new(mat4_identity(order)).unwrap()
    }

    fn std_kahler_form(order: usize) -> TwoForm {
        let z = || Jet::constant(0.0, order);
        let o = || Jet::constant(1.0, order);
        TwoForm::from_upper(order, [o(), z(), z(), z(), z(), o()])
    }

    #[test]
    fn euclidean_star_permutes_basis_forms() {
        let m = euclidean(2);
        let e01 = TwoForm::from_upper(2, [
            Jet::constant(1.0, 2),
            Jet::constant(0.0, 2),
            Jet::constant(0.0, 2),
            Jet::constant(0.0, 2),
            Jet::constant(0.0, 2),
            Jet::constant(0.0, 2),
        ]);
        let s = m.star2(&e01);
        assert_relative_eq!(s.0[2][3].value(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.0[0][1].value(), 0.0, epsilon = 1e-14);
        // Star squares to the identity on 2-forms in dimension four.
        let ss = m.star2(&s);
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(ss.0[i][j].value(), e01.0[i][j].value(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn compatible_form_norm_and_pfaffian() {
        let m = euclidean(2);
        let om = std_kahler_form(2);
        assert_relative_eq!(m.inner2(&om, &om).value(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(m.pfaffian(&om).value(), 4.0, epsilon = 1e-14);
        // omega is selfdual for the standard orientation.
        let (sd, asd) = m.sd_asd_split(&om);
        assert_relative_eq!(m.inner2(&asd, &asd).value(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(m.inner2(&sd, &sd).value(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn wedge_pairing_matches_inner_product() {
        // a ^ b = <a, *b> vol for arbitrary 2-forms.
        let m = euclidean(2);
        let mk = |u: [f64; 6]| {
            TwoForm::from_upper(2, std::array::from_fn(|i| Jet::constant(u[i], 2)))
        };
        let a = mk([0.3, -1.2, 0.7, 2.0, -0.4, 1.1]);
        let b = mk([-0.8, 0.5, 1.9, -0.3, 0.6, -1.4]);
        let lhs = wedge22_top(&a, &b).value();
        let rhs = m.inner2(&a, &m.star2(&b)).value() * m.vol_coeff().value();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn endo_from_compatible_form_squares_to_minus_id() {
        let m = euclidean(2);
        let om = std_kahler_form(2);
        let j = m.endo_from_form(&om);
        let jj = mat4_mul(&j, &j);
        for i in 0..4 {
            for k in 0..4 {
                let want = if i == k { -1.0 } else { 0.0 };
                assert_relative_eq!(jj[i][k].value(), want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn asd_eigendata_recovers_scaled_form() {
        let m = euclidean(2);
        // Anti-selfdual basis form e01 - e23, scaled by 0.7: lambda = 0.7.
        let f = TwoForm::from_upper(2, [
            Jet::constant(0.7, 2),
            Jet::constant(0.0, 2),
            Jet::constant(0.0, 2),
            Jet::constant(0.0, 2),
            Jet::constant(0.0, 2),
            Jet::constant(-0.7, 2),
        ]);
        let (lambda, omega_i) = m.asd_eigendata(&f, 1e-8).unwrap();
        assert_relative_eq!(lambda.value(), 0.7, epsilon = 1e-13);
        let ji = m.endo_from_form(&omega_i);
        let jj = mat4_mul(&ji, &ji);
        for i in 0..4 {
            assert_relative_eq!(jj[i][i].value(), -1.0, epsilon = 1e-13);
        }
        // A selfdual form is rejected.
        let om = std_kahler_form(2);
        assert!(matches!(
            m.asd_eigendata(&om, 1e-8),
            Err(TensorError::NotAntiSelfdual { .. })
        ));
        // A vanishing form is reported degenerate.
        let z = TwoForm::zero(2);
        assert!(matches!(
            m.asd_eigendata(&z, 1e-8),
            Err(TensorError::DegenerateNorm { .. })
        ));
    }

    #[test]
    fn star3_sends_basis_3form_to_basis_1form() {
        let m = euclidean(2);
        let t = ThreeForm::from_fn(|i, j, k| Jet::constant(eps4_3(i, j, k), 2));
        // t = dx1 ^ dx2 ^ dx3; pairing t ^ (*t) = <t,t> vol forces
        // *t = -dx0 because dx1^dx2^dx3^dx0 = -vol.
        let s = m.star3(&t);
        assert_relative_eq!(s[0].value(), -1.0, epsilon = 1e-13);
        for i in 1..4 {
            assert_relative_eq!(s[i].value(), 0.0, epsilon = 1e-13);
        }
    }

    fn eps4_3(i: usize, j: usize, k: usize) -> f64 {
        // Components of dx1^dx2^dx3: antisymmetrization of (1,2,3).
        if i == 0 || j == 0 || k == 0 {
            return 0.0;
        }
        eps4(0, i, j, k)
    }

    #[test]
    fn negative_definite_metric_is_rejected() {
        let mut g = mat4_identity(2);
        g[1][1] = Jet::constant(-2.0, 2);
        assert!(matches!(
            Metric::new(g),
            Err(TensorError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn sym3_eigenvalues_on_known_matrix() {
        let a = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let e = sym3_eigenvalues(a);
        assert_relative_eq!(e[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(e[2], 5.0, epsilon = 1e-12);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use crate::jets::Jet;
    use proptest::prelude::*;

    fn form_strategy() -> impl Strategy<Value = [f64; 6]> {
        proptest::array::uniform6(-2.0..2.0f64)
    }

    proptest! {
        /// The pfaffian is a quadratic form: for ASD `f0` and the standard
        /// selfdual form, `pf(f0/2 + (s/4) omega) = s^2/4 - |f0|^2 / 2`.
        #[test]
        fn pfaffian_of_mixed_form(u in form_strategy(), s in -3.0..3.0f64) {
            let m = Metric::new(mat4_identity(2)).unwrap();
            let f = TwoForm::from_upper(2, std::array::from_fn(|i| Jet::constant(u[i], 2)));
            let (_, asd) = m.sd_asd_split(&f);
            let om = TwoForm::from_upper(2, [
                Jet::constant(1.0, 2), Jet::constant(0.0, 2), Jet::constant(0.0, 2),
                Jet::constant(0.0, 2), Jet::constant(0.0, 2), Jet::constant(1.0, 2),
            ]);
            let mixed = asd.scale(0.5).add(&om.scale(s / 4.0));
            let pf = m.pfaffian(&mixed).value();
            let expect = s * s / 4.0 - m.inner2(&asd, &asd).value() / 2.0;
            prop_assert!((pf - expect).abs() < 1e-10 * (1.0 + expect.abs()));
        }

        /// Selfdual and anti-selfdual parts are orthogonal and recompose.
        #[test]
        fn sd_asd_orthogonal_decomposition(u in form_strategy()) {
            let m = Metric::new(mat4_identity(2)).unwrap();
            let f = TwoForm::from_upper(2, std::array::from_fn(|i| Jet::constant(u[i], 2)));
            let (sd, asd) = m.sd_asd_split(&f);
            prop_assert!(m.inner2(&sd, &asd).value().abs() < 1e-12);
            let re = sd.add(&asd);
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((re.0[i][j].value() - f.0[i][j].value()).abs() < 1e-12);
                }
            }
            // Star is +1 on sd and -1 on asd.
            let ssd = m.star2(&sd);
            let sasd = m.star2(&asd);
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((ssd.0[i][j].value() - sd.0[i][j].value()).abs() < 1e-12);
                    prop_assert!((sasd.0[i][j].value() + asd.0[i][j].value()).abs() < 1e-12);
                }
            }
        }
    }
}
