//! Truncated multivariate Taylor arithmetic ("jets") in four variables.
//!
//! A [`Jet`] stores the Taylor coefficients of a smooth function at a point,
//! up to a total degree (`order`) of at most four.  Coefficients are stored in
//! the *Taylor normalization* `c[gamma] = partial^gamma f / gamma!`, so that
//! multiplication is a plain truncated convolution and factorials enter only
//! when a raw partial derivative is extracted.
//!
//! Storage is dense, in graded-lex slot order (degree first, then
//! lexicographic with `x0 > x1 > x2 > x3`), 70 slots at full order.  Every
//! operation is pure; nothing mutates in place.
//!
//! The `order` field tracks how many total degrees of the stored coefficients
//! are *valid*.  Differentiation lowers it by one; binary operations take the
//! minimum of the operand orders.  Exact arithmetic on polynomial seeds stays
//! exact: the convolution of coefficients of degree `<= n` only ever reads
//! coefficients of degree `<= n`.

use std::fmt;
use std::sync::LazyLock;
use thiserror::Error;

/// Number of coordinates a jet depends on.
pub const NVARS: usize = 4;
/// Highest representable total degree.
pub const MAX_ORDER: usize = 4;
/// Dense slot count for total degree `<= MAX_ORDER` in `NVARS` variables.
pub const SLOTS: usize = 70;

/// Errors surfaced by jet construction and the partial-function operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("coordinate index {0} out of range ({NVARS} variables)")]
    VarOutOfRange(usize),
    #[error("truncation order {0} out of range (max {MAX_ORDER})")]
    OrderOutOfRange(usize),
    #[error("multi-index {mi:?} has degree {degree}, above jet order {order}")]
    DegreeAboveOrder {
        mi: [usize; NVARS],
        degree: usize,
        order: usize,
    },
    #[error("division by a jet with vanishing constant term")]
    SingularDivision,
    #[error("{op} applied to a jet with constant term {value} outside its domain")]
    Domain { op: &'static str, value: f64 },
}

struct Tables {
    /// Slot -> multi-index.
    mi: [[u8; NVARS]; SLOTS],
    /// Packed multi-index -> slot (sentinel `u8::MAX` for degree > 4 packs).
    slot: [u8; 5 * 5 * 5 * 5],
    /// Number of slots of total degree `<= n`, for `n = 0..=4`.
    upto: [usize; MAX_ORDER + 1],
    /// For each target slot `c`, all pairs `(a, b)` with `mi[a] + mi[b] = mi[c]`.
    conv: Vec<Vec<(u16, u16)>>,
    /// `gamma!` per slot (product of component factorials).
    fact: [f64; SLOTS],
}

fn pack(mi: [u8; NVARS]) -> usize {
    mi.iter().fold(0usize, |acc, &d| acc * 5 + d as usize)
}

static TABLES: LazyLock<Tables> = LazyLock::new(|| {
    let mut mi = [[0u8; NVARS]; SLOTS];
    let mut upto = [0usize; MAX_ORDER + 1];
    let mut n = 0usize;
    for deg in 0..=MAX_ORDER as u8 {
        for i0 in (0..=deg).rev() {
            for i1 in (0..=deg - i0).rev() {
                for i2 in (0..=deg - i0 - i1).rev() {
                    let i3 = deg - i0 - i1 - i2;
                    mi[n] = [i0, i1, i2, i3];
                    n += 1;
                }
            }
        }
        upto[deg as usize] = n;
    }
    debug_assert_eq!(n, SLOTS);

    let mut slot = [u8::MAX; 5 * 5 * 5 * 5];
    for (s, m) in mi.iter().enumerate() {
        slot[pack(*m)] = s as u8;
    }

    let mut conv = vec![Vec::new(); SLOTS];
    for (c, target) in mi.iter().enumerate() {
        for (a, left) in mi.iter().enumerate() {
            if left.iter().zip(target).all(|(l, t)| l <= t) {
                let rest = [
                    target[0] - left[0],
                    target[1] - left[1],
                    target[2] - left[2],
                    target[3] - left[3],
                ];
                let b = slot[pack(rest)];
                debug_assert_ne!(b, u8::MAX);
                conv[c].push((a as u16, b as u16));
            }
        }
    }

    let mut fact = [1.0f64; SLOTS];
    for (s, m) in mi.iter().enumerate() {
        let f = |d: u8| -> f64 { (1..=d as u64).product::<u64>().max(1) as f64 };
        fact[s] = m.iter().map(|&d| f(d)).product();
    }

    Tables {
        mi,
        slot,
        upto,
        conv,
        fact,
    }
});

/// Truncated Taylor expansion of a scalar function of four variables.
#[derive(Clone, PartialEq)]
pub struct Jet {
    order: u8,
    c: [f64; SLOTS],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &*TABLES;
        write!(f, "Jet(order {}; ", self.order)?;
        let mut first = true;
        for s in 0..t.upto[self.order as usize] {
            if self.c[s] != 0.0 {
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "{:?}*x^{:?}", self.c[s], t.mi[s])?;
                first = false;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl Jet {
    /// Constant jet (all derivatives zero).
    pub fn constant(value: f64, order: usize) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} out of range");
        let mut c = [0.0; SLOTS];
        c[0] = value;
        Jet {
            order: order as u8,
            c,
        }
    }

    /// Coordinate seed: the function `x_var`, expanded at `value`.
    pub fn seed(var: usize, value: f64, order: usize) -> Result<Jet, JetError> {
        if var >= NVARS {
            return Err(JetError::VarOutOfRange(var));
        }
        if order > MAX_ORDER {
            return Err(JetError::OrderOutOfRange(order));
        }
        let mut j = Jet::constant(value, order);
        if order >= 1 {
            // Degree-1 slots are 1..=4 in graded-lex order (x0 first).
            j.c[1 + var] = 1.0;
        }
        Ok(j)
    }

    /// Valid truncation order.
    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// Value at the expansion point (the constant term).
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Raw partial derivative `partial^mi f` at the expansion point.
    pub fn partial(&self, mi: [usize; NVARS]) -> Result<f64, JetError> {
        let degree: usize = mi.iter().sum();
        if degree > self.order() || mi.iter().any(|&d| d > MAX_ORDER) {
            return Err(JetError::DegreeAboveOrder {
                mi,
                degree,
                order: self.order(),
            });
        }
        let t = &*TABLES;
        let s = t.slot[pack([mi[0] as u8, mi[1] as u8, mi[2] as u8, mi[3] as u8])] as usize;
        Ok(self.c[s] * t.fact[s])
    }

    /// Taylor coefficient at a multi-index (derivative / factorials).
    pub fn coeff(&self, mi: [usize; NVARS]) -> Result<f64, JetError> {
        let s = {
            let degree: usize = mi.iter().sum();
            if degree > self.order() || mi.iter().any(|&d| d > MAX_ORDER) {
                return Err(JetError::DegreeAboveOrder {
                    mi,
                    degree,
                    order: self.order(),
                });
            }
            TABLES.slot[pack([mi[0] as u8, mi[1] as u8, mi[2] as u8, mi[3] as u8])] as usize
        };
        Ok(self.c[s])
    }

    /// Partial derivative as a jet of one order less.
    ///
    /// # Panics
    /// If the jet has order 0 (no derivative information left) or `var` is out
    /// of range; both are caller bugs, not data-dependent conditions.
    pub fn deriv(&self, var: usize) -> Jet {
        assert!(var < NVARS, "coordinate index {var} out of range");
        assert!(
            self.order >= 1,
            "cannot differentiate an order-0 jet; request a higher truncation order"
        );
        let t = &*TABLES;
        let mut out = Jet::constant(0.0, self.order() - 1);
        for s in 0..t.upto[out.order as usize] {
            let mut up = t.mi[s];
            up[var] += 1;
            let src = t.slot[pack(up)] as usize;
            out.c[s] = self.c[src] * f64::from(up[var]);
        }
        out
    }

    /// Antiderivative in `var` with prescribed value at the expansion point.
    ///
    /// The result keeps the same order: degree-`n` output coefficients come
    /// from degree-`n-1` input coefficients, so the input's top-degree slice is
    /// deliberately dropped (it would belong to degree `order + 1`).
    pub fn integrate(&self, var: usize, at_point: f64) -> Jet {
        assert!(var < NVARS, "coordinate index {var} out of range");
        let t = &*TABLES;
        let mut out = Jet::constant(at_point, self.order());
        if self.order == 0 {
            return out;
        }
        for s in 0..t.upto[self.order as usize - 1] {
            let mut up = t.mi[s];
            up[var] += 1;
            let dst = t.slot[pack(up)] as usize;
            out.c[dst] = self.c[s] / f64::from(up[var]);
        }
        out
    }

    fn bin_order(&self, rhs: &Jet) -> u8 {
        self.order.min(rhs.order)
    }

    fn add_impl(&self, rhs: &Jet) -> Jet {
        let order = self.bin_order(rhs);
        let mut c = [0.0; SLOTS];
        for s in 0..TABLES.upto[order as usize] {
            c[s] = self.c[s] + rhs.c[s];
        }
        Jet { order, c }
    }

    fn sub_impl(&self, rhs: &Jet) -> Jet {
        let order = self.bin_order(rhs);
        let mut c = [0.0; SLOTS];
        for s in 0..TABLES.upto[order as usize] {
            c[s] = self.c[s] - rhs.c[s];
        }
        Jet { order, c }
    }

    fn mul_impl(&self, rhs: &Jet) -> Jet {
        let t = &*TABLES;
        let order = self.bin_order(rhs);
        let mut c = [0.0; SLOTS];
        for (s, cs) in c.iter_mut().enumerate().take(t.upto[order as usize]) {
            let mut acc = 0.0;
            for &(a, b) in &t.conv[s] {
                acc += self.c[a as usize] * rhs.c[b as usize];
            }
            *cs = acc;
        }
        Jet { order, c }
    }

    fn neg_impl(&self) -> Jet {
        let mut c = [0.0; SLOTS];
        for s in 0..TABLES.upto[self.order as usize] {
            c[s] = -self.c[s];
        }
        Jet {
            order: self.order,
            c,
        }
    }

    /// Quotient, solved coefficient-by-coefficient in graded order.
    pub fn try_div(&self, rhs: &Jet) -> Result<Jet, JetError> {
        let t = &*TABLES;
        if rhs.c[0] == 0.0 {
            return Err(JetError::SingularDivision);
        }
        let order = self.bin_order(rhs);
        let inv_b0 = 1.0 / rhs.c[0];
        let mut c = [0.0; SLOTS];
        for s in 0..t.upto[order as usize] {
            let mut acc = self.c[s];
            for &(a, b) in &t.conv[s] {
                if a != 0 {
                    acc -= rhs.c[a as usize] * c[b as usize];
                }
            }
            c[s] = acc * inv_b0;
        }
        Ok(Jet { order, c })
    }

    /// Reciprocal jet.
    pub fn recip(&self) -> Result<Jet, JetError> {
        Jet::constant(1.0, self.order()).try_div(self)
    }

    /// Non-negative integer power by repeated multiplication.
    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = Jet::constant(1.0, self.order());
        for _ in 0..n {
            acc = acc.mul_impl(self);
        }
        acc
    }

    /// Compose with a scalar function given its derivative values at the
    /// constant term: `derivs[k] = f^(k)(self.value())`, `k = 0..=order`.
    ///
    /// Exact for the truncation: with `w = self - value` (nilpotent to the
    /// stored degree), computes `sum_k derivs[k]/k! * w^k` by Horner.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        debug_assert!(derivs.len() > order);
        let mut w = self.clone();
        w.c[0] = 0.0;
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        let mut acc = Jet::constant(derivs[order] / fact[order], order);
        for k in (0..order).rev() {
            acc = acc.mul_impl(&w);
            acc.c[0] += derivs[k] / fact[k];
        }
        acc
    }

    /// Exponential.
    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    /// Natural logarithm; requires a positive constant term.
    pub fn ln(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetError::Domain {
                op: "ln",
                value: v,
            });
        }
        let r = 1.0 / v;
        Ok(self.compose(&[v.ln(), r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    /// Square root; requires a positive constant term.
    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetError::Domain {
                op: "sqrt",
                value: v,
            });
        }
        let s = v.sqrt();
        Ok(self.compose(&[
            s,
            0.5 / s,
            -0.25 / (s * v),
            0.375 / (s * v * v),
            -0.9375 / (s * v * v * v),
        ]))
    }

    /// Real power; requires a positive constant term.
    pub fn powf(&self, p: f64) -> Result<Jet, JetError> {
        let v = self.value();
        if v <= 0.0 {
            return Err(JetError::Domain {
                op: "powf",
                value: v,
            });
        }
        let mut d = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = coef * v.powf(p - k as f64);
            coef *= p - k as f64;
        }
        Ok(self.compose(&d))
    }

    /// Arctangent (total).
    pub fn atan(&self) -> Jet {
        let x = self.value();
        let q = 1.0 + x * x;
        self.compose(&[
            x.atan(),
            1.0 / q,
            -2.0 * x / (q * q),
            (6.0 * x * x - 2.0) / (q * q * q),
            (24.0 * x - 24.0 * x * x * x) / (q * q * q * q),
        ])
    }

    /// Sine (total).
    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c, s])
    }

    /// Cosine (total).
    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s, c])
    }

    /// Largest absolute coefficient among the valid slots.
    pub fn max_abs_coeff(&self) -> f64 {
        self.c[..TABLES.upto[self.order as usize]]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $impl:ident) => {
        impl std::ops::$trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$impl(&rhs)
            }
        }
        impl std::ops::$trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$impl(rhs)
            }
        }
        impl std::ops::$trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$impl(&rhs)
            }
        }
        impl std::ops::$trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$impl(rhs)
            }
        }
    };
}

jet_binop!(Add, add, add_impl);
jet_binop!(Sub, sub, sub_impl);
jet_binop!(Mul, mul, mul_impl);

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.neg_impl()
    }
}

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.neg_impl()
    }
}

/// Division panics on a vanishing constant term; evaluation domains are
/// validated at instance construction, so hitting this inside the engine is a
/// bug, not an input condition.  Use [`Jet::try_div`] at validation
/// boundaries.
impl std::ops::Div<&Jet> for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self.try_div(rhs)
            .expect("jet division by vanishing constant term")
    }
}

impl std::ops::Div<Jet> for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        (&self) / (&rhs)
    }
}

impl std::ops::Div<&Jet> for Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        (&self) / rhs
    }
}

impl std::ops::Div<Jet> for &Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self / (&rhs)
    }
}

impl std::ops::Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        for s in 0..TABLES.upto[out.order as usize] {
            out.c[s] *= rhs;
        }
        out
    }
}

impl std::ops::Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        (&self) * rhs
    }
}

impl std::ops::Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs * self
    }
}

impl std::ops::Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        (&rhs) * self
    }
}

impl std::ops::Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += rhs;
        out
    }
}

impl std::ops::Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        (&self) + rhs
    }
}

impl std::ops::Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] -= rhs;
        out
    }
}

impl std::ops::Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        (&self) - rhs
    }
}

/// Seed all four coordinates at a point.
pub fn seed_point(pt: [f64; NVARS], order: usize) -> [Jet; NVARS] {
    std::array::from_fn(|i| Jet::seed(i, pt[i], order).expect("static seed parameters"))
}

/// Evaluate a polynomial (low-degree coefficients first) on a jet by Horner.
pub fn poly_eval(coeffs_low_first: &[f64], x: &Jet) -> Jet {
    let mut acc = Jet::constant(0.0, x.order());
    for &c in coeffs_low_first.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn seed_square_has_polynomial_derivatives() {
        // (x0)^2 expanded at 3: value 9, d/dx0 = 6, d2/dx0^2 = 2.
        let x = Jet::seed(0, 3.0, 4).unwrap();
        let f = x.powi(2);
        assert_relative_eq!(f.value(), 9.0, epsilon = 1e-14);
        assert_relative_eq!(f.partial([1, 0, 0, 0]).unwrap(), 6.0, epsilon = 1e-14);
        assert_relative_eq!(f.partial([2, 0, 0, 0]).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.partial([3, 0, 0, 0]).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn quartic_derivative_at_two() {
        // F(x) = x^4 + 1 at x = 2: F = 17, F' = 32, F'' = 48, F''' = 48, F'''' = 24.
        let x = Jet::seed(0, 2.0, 4).unwrap();
        let f = poly_eval(&[1.0, 0.0, 0.0, 0.0, 1.0], &x);
        assert_relative_eq!(f.value(), 17.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([1, 0, 0, 0]).unwrap(), 32.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([2, 0, 0, 0]).unwrap(), 48.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([3, 0, 0, 0]).unwrap(), 48.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([4, 0, 0, 0]).unwrap(), 24.0, epsilon = 1e-12);
    }

    #[test]
    fn reciprocal_of_coordinate_difference() {
        // 1/(x - y) at (2, 1): all mixed partials of (x - y)^(-1).
        let x = Jet::seed(0, 2.0, 4).unwrap();
        let y = Jet::seed(1, 1.0, 4).unwrap();
        let f = (x - y).recip().unwrap();
        assert_relative_eq!(f.value(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([1, 0, 0, 0]).unwrap(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([0, 1, 0, 0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([2, 0, 0, 0]).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([1, 1, 0, 0]).unwrap(), -2.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([0, 2, 0, 0]).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([2, 2, 0, 0]).unwrap(), 24.0, epsilon = 1e-12);
        assert_relative_eq!(f.partial([3, 1, 0, 0]).unwrap(), -24.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_series_coefficients() {
        let x = Jet::seed(2, 0.0, 4).unwrap();
        let f = x.exp();
        for k in 0..=4usize {
            let mut mi = [0usize; 4];
            mi[2] = k;
            assert_relative_eq!(f.partial(mi).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn elementary_functions_match_univariate_series() {
        // Expand around a generic point and compare against hand values.
        let x = Jet::seed(0, 0.7, 4).unwrap();
        let f = x.sin();
        assert_relative_eq!(f.partial([1, 0, 0, 0]).unwrap(), 0.7f64.cos(), epsilon = 1e-14);
        assert_relative_eq!(
            f.partial([2, 0, 0, 0]).unwrap(),
            -0.7f64.sin(),
            epsilon = 1e-14
        );
        let g = x.ln().unwrap();
        assert_relative_eq!(g.partial([1, 0, 0, 0]).unwrap(), 1.0 / 0.7, epsilon = 1e-13);
        assert_relative_eq!(
            g.partial([3, 0, 0, 0]).unwrap(),
            2.0 / 0.7f64.powi(3),
            epsilon = 1e-12
        );
        let h = x.sqrt().unwrap();
        assert_relative_eq!(
            h.partial([2, 0, 0, 0]).unwrap(),
            -0.25 * 0.7f64.powf(-1.5),
            epsilon = 1e-13
        );
        let a = x.atan();
        assert_relative_eq!(
            a.partial([1, 0, 0, 0]).unwrap(),
            1.0 / (1.0 + 0.49),
            epsilon = 1e-14
        );
    }

    #[test]
    fn division_roundtrip_and_singularity() {
        let x = Jet::seed(0, 1.3, 3).unwrap();
        let y = Jet::seed(1, -0.4, 3).unwrap();
        let a = (&x * &x) + (&y * 2.0) + 5.0;
        let b = (&x * &y) + 3.0;
        let q = a.try_div(&b).unwrap();
        let back = q * &b;
        for s in 0..TABLES.upto[3] {
            assert_relative_eq!(back.c[s], a.c[s], epsilon = 1e-12, max_relative = 1e-12);
        }
        let z = Jet::seed(0, 0.0, 3).unwrap();
        assert_eq!(a.try_div(&z).unwrap_err(), JetError::SingularDivision);
        assert!(matches!(
            z.ln().unwrap_err(),
            JetError::Domain { op: "ln", .. }
        ));
    }

    #[test]
    fn derivative_and_integral_are_inverse_on_seeds() {
        let x = Jet::seed(0, 1.1, 4).unwrap();
        let y = Jet::seed(1, 0.3, 4).unwrap();
        let f = (&x * &x * &y) + (&y * &y) * 0.5;
        let df = f.deriv(0);
        assert_eq!(df.order(), 3);
        assert_relative_eq!(df.value(), 2.0 * 1.1 * 0.3, epsilon = 1e-14);
        let back = df.integrate(0, f.value());
        // The constant slot carries the supplied value; slots depending on x0
        // are restored, while the x0-free transverse slots stay zero (the
        // antiderivative is only determined up to a function of the other
        // variables).
        assert_relative_eq!(back.value(), f.value(), epsilon = 1e-14);
        for s in 1..TABLES.upto[3] {
            if TABLES.mi[s][0] > 0 {
                assert_relative_eq!(back.c[s], f.c[s], epsilon = 1e-14);
            } else {
                assert_eq!(back.c[s], 0.0);
            }
        }
    }

    #[test]
    fn partial_above_order_is_rejected() {
        let x = Jet::seed(0, 2.0, 2).unwrap();
        let err = x.partial([2, 1, 0, 0]).unwrap_err();
        assert!(matches!(err, JetError::DegreeAboveOrder { degree: 3, .. }));
        assert!(Jet::seed(4, 0.0, 2).is_err());
        assert!(Jet::seed(0, 0.0, 5).is_err());
    }

    #[test]
    fn order_mixing_takes_minimum() {
        let a = Jet::seed(0, 1.0, 4).unwrap();
        let b = Jet::seed(1, 2.0, 2).unwrap();
        assert_eq!((a * b).order(), 2);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn small_poly() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0..2.0f64, 5)
    }

    proptest! {
        /// Product rule: the w-derivative of a product of two polynomial jets
        /// matches the Leibniz combination, coefficient by coefficient.
        #[test]
        fn leibniz_rule(ca in small_poly(), cb in small_poly(), x0 in -1.5..1.5f64, y0 in -1.5..1.5f64) {
            let x = Jet::seed(0, x0, 4).unwrap();
            let y = Jet::seed(1, y0, 4).unwrap();
            let a = poly_eval(&ca, &x) * poly_eval(&cb[..3], &y);
            let b = poly_eval(&cb, &y) + poly_eval(&ca[..2], &x);
            let lhs = (&a * &b).deriv(0);
            let rhs = a.deriv(0) * &b + &a * b.deriv(0);
            for s in 0..TABLES.upto[3] {
                prop_assert!((lhs.c[s] - rhs.c[s]).abs() <= 1e-9 * (1.0 + lhs.c[s].abs()));
            }
        }

        /// exp(ln(f)) is the identity wherever ln is defined.
        #[test]
        fn exp_ln_roundtrip(c in small_poly(), x0 in -1.0..1.0f64) {
            let x = Jet::seed(0, x0, 4).unwrap();
            let f = poly_eval(&c, &x) * 0.25 + 3.0; // constant term in [2, 4+]
            prop_assume!(f.value() > 0.5);
            let g = f.ln().unwrap().exp();
            for s in 0..TABLES.upto[4] {
                prop_assert!((g.c[s] - f.c[s]).abs() <= 1e-10 * (1.0 + f.c[s].abs()));
            }
        }

        /// Chain rule against direct polynomial re-expansion: evaluating
        /// p(q(x)) via jets equals expanding the composed polynomial.
        #[test]
        fn polynomial_composition(p in small_poly(), x0 in -1.2..1.2f64) {
            let x = Jet::seed(0, x0, 4).unwrap();
            // q(x) = x^2 + 1; composed coefficients computed independently.
            let q = &x * &x + 1.0;
            let via_jets = poly_eval(&p, &q);
            // Direct: expand p(u) at u0 = x0^2+1 with u-derivatives, then chain
            // through the quadratic by finite Taylor algebra on univariate data.
            let u0 = x0 * x0 + 1.0;
            let u = Jet::seed(0, u0, 4).unwrap();
            let pu = poly_eval(&p, &u);
            // Compose manually: derivatives of q are known (2x0, 2, 0, 0).
            let w = &x * &x + (1.0 - u0); // q - u0 as a jet with zero constant
            let mut acc = Jet::constant(pu.partial([4,0,0,0]).unwrap() / 24.0, 4);
            for k in (0..4).rev() {
                let fact = [1.0, 1.0, 2.0, 6.0][k];
                let mut mi = [0usize; 4];
                mi[0] = k;
                acc = acc * &w + pu.partial(mi).unwrap() / fact;
            }
            for s in 0..TABLES.upto[4] {
                prop_assert!((via_jets.c[s] - acc.c[s]).abs() <= 1e-9 * (1.0 + acc.c[s].abs()));
            }
        }
    }
}
