//! Profile solves for fibered charts: adaptive Runge–Kutta integration
//! with dense output, exact jet lifts through a profile's defining
//! equation, and Gauss–Legendre quadrature of jet-valued integrands.

use super::FamilyError;
use crate::jets::Jet;
use std::sync::LazyLock;

#[derive(Debug, Clone, Copy)]
struct Knot {
    t: f64,
    y: f64,
    yp: f64,
}

/// Dense output of a one-dimensional profile solve: cubic Hermite
/// interpolation between accepted integration knots.
#[derive(Debug, Clone)]
pub struct DenseProfile {
    knots: Vec<Knot>,
}

impl DenseProfile {
    /// Interpolated profile value; errors outside the integrated range.
    pub fn eval(&self, t: f64) -> Result<f64, FamilyError> {
        let first = self.knots.first().expect("profile has knots");
        let last = self.knots.last().expect("profile has knots");
        if t < first.t - 1e-12 || t > last.t + 1e-12 {
            return Err(FamilyError::Profile {
                what: format!(
                    "evaluation point {t} outside integrated range [{}, {}]",
                    first.t, last.t
                ),
            });
        }
        let idx = self
            .knots
            .partition_point(|k| k.t <= t)
            .clamp(1, self.knots.len() - 1);
        let (a, b) = (&self.knots[idx - 1], &self.knots[idx]);
        let h = b.t - a.t;
        let u = ((t - a.t) / h).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        Ok(h00 * a.y + h10 * h * a.yp + h01 * b.y + h11 * h * b.yp)
    }

    /// Integrated parameter range.
    pub fn range(&self) -> (f64, f64) {
        (
            self.knots.first().expect("profile has knots").t,
            self.knots.last().expect("profile has knots").t,
        )
    }
}

/// Dormand–Prince 5(4) step returning the fifth-order value and the
/// embedded error estimate.
fn dopri5_step(rhs: &impl Fn(f64, f64) -> f64, t: f64, y: f64, h: f64) -> (f64, f64) {
    let k1 = rhs(t, y);
    let k2 = rhs(t + h / 5.0, y + h * (k1 / 5.0));
    let k3 = rhs(t + 3.0 * h / 10.0, y + h * (3.0 * k1 / 40.0 + 9.0 * k2 / 40.0));
    let k4 = rhs(
        t + 4.0 * h / 5.0,
        y + h * (44.0 * k1 / 45.0 - 56.0 * k2 / 15.0 + 32.0 * k3 / 9.0),
    );
    let k5 = rhs(
        t + 8.0 * h / 9.0,
        y + h * (19372.0 * k1 / 6561.0 - 25360.0 * k2 / 2187.0 + 64448.0 * k3 / 6561.0
            - 212.0 * k4 / 729.0),
    );
    let k6 = rhs(
        t + h,
        y + h * (9017.0 * k1 / 3168.0 - 355.0 * k2 / 33.0 + 46732.0 * k3 / 5247.0
            + 49.0 * k4 / 176.0
            - 5103.0 * k5 / 18656.0),
    );
    let y5 = y
        + h * (35.0 * k1 / 384.0 + 500.0 * k3 / 1113.0 + 125.0 * k4 / 192.0
            - 2187.0 * k5 / 6784.0
            + 11.0 * k6 / 84.0);
    let k7 = rhs(t + h, y5);
    let y4 = y
        + h * (5179.0 * k1 / 57600.0 + 7571.0 * k3 / 16695.0 + 393.0 * k4 / 640.0
            - 92097.0 * k5 / 339200.0
            + 187.0 * k6 / 2100.0
            + k7 / 40.0);
    (y5, (y5 - y4).abs())
}

fn sweep(
    rhs: &impl Fn(f64, f64) -> f64,
    t0: f64,
    y0: f64,
    t_end: f64,
    tol: f64,
    h_max: f64,
) -> Result<Vec<Knot>, FamilyError> {
    let dir = (t_end - t0).signum();
    let mut knots = vec![Knot {
        t: t0,
        y: y0,
        yp: rhs(t0, y0),
    }];
    if dir == 0.0 {
        return Ok(knots);
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = h_max * dir;
    let mut steps = 0usize;
    while (t_end - t) * dir > 1e-14 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(FamilyError::Profile {
                what: "step budget exhausted".into(),
            });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        let (y_new, err) = dopri5_step(rhs, t, y, h);
        let scale = tol * (1.0 + y.abs().max(y_new.abs()));
        if err <= scale {
            t += h;
            y = y_new;
            knots.push(Knot {
                t,
                y,
                yp: rhs(t, y),
            });
        }
        // Standard PI-free step controller with safety factor.
        let factor = if err > 0.0 {
            (0.9 * (scale / err).powf(0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h.abs() * factor).min(h_max) * dir;
        if h.abs() < 1e-14 {
            return Err(FamilyError::Profile {
                what: format!("step size underflow at t = {t}"),
            });
        }
    }
    Ok(knots)
}

/// Integrates `y' = rhs(t, y)` from the anchor `(t0, y0)` over
/// `[t_lo, t_hi]` (which must contain `t0`), producing dense output.
/// The step cap keeps the Hermite interpolation error near roundoff.
pub fn integrate_profile(
    rhs: impl Fn(f64, f64) -> f64,
    t0: f64,
    y0: f64,
    t_lo: f64,
    t_hi: f64,
    h_max: f64,
) -> Result<DenseProfile, FamilyError> {
    if !(t_lo <= t0 && t0 <= t_hi) {
        return Err(FamilyError::Profile {
            what: format!("anchor {t0} outside target range [{t_lo}, {t_hi}]"),
        });
    }
    let tol = 1e-12;
    let mut down = sweep(&rhs, t0, y0, t_lo, tol, h_max)?;
    let up = sweep(&rhs, t0, y0, t_hi, tol, h_max)?;
    down.reverse();
    down.extend_from_slice(&up[1..]);
    Ok(DenseProfile { knots: down })
}

/// Lifts a profile value to its full jet in the chart variable `var`
/// through the autonomous equation `y' = rhs(y)`, by Picard iteration
/// (each pass extends the correct Taylor degree by one).
pub fn jet_lift(
    y0: f64,
    var: usize,
    order: usize,
    rhs: impl Fn(&Jet) -> Result<Jet, FamilyError>,
) -> Result<Jet, FamilyError> {
    let mut y = Jet::constant(y0, order);
    for _ in 0..order {
        y = rhs(&y)?.integrate(var, y0);
    }
    Ok(y)
}

/// 32-point Gauss–Legendre nodes and weights on [-1, 1], generated by
/// Newton iteration on the Legendre recurrence.
static GL32: LazyLock<[(f64, f64); 32]> = LazyLock::new(|| {
    let n = 32usize;
    let mut out = [(0.0, 0.0); 32];
    for i in 0..n {
        // Chebyshev-style initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_{n-1} by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
        out[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    out
});

/// Gauss–Legendre quadrature of a jet-valued integrand over `[a, b]`.
pub fn gauss_legendre_jet(
    mut f: impl FnMut(f64) -> Result<Jet, FamilyError>,
    a: f64,
    b: f64,
    order: usize,
) -> Result<Jet, FamilyError> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = Jet::constant(0.0, order);
    for &(x, w) in GL32.iter() {
        acc = acc + f(mid + half * x)? * (w * half);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dense_profile_tracks_exponential() {
        let prof = integrate_profile(|_, y| y, 0.0, 1.0, -1.0, 1.0, 0.01).unwrap();
        for &t in &[-1.0, -0.37, 0.0, 0.4, 0.99] {
            assert_relative_eq!(prof.eval(t).unwrap(), t.exp(), max_relative = 1e-10);
        }
        assert!(prof.eval(1.5).is_err());
    }

    #[test]
    fn jet_lift_matches_logistic_derivatives() {
        // y' = y(1 - y) with y(0) = 1/2 has y'' = y'(1 - 2y), etc.
        let y = jet_lift(0.5, 2, 4, |y| Ok(y * (-y + 1.0))).unwrap();
        assert_relative_eq!(y.value(), 0.5);
        assert_relative_eq!(y.partial([0, 0, 1, 0]).unwrap(), 0.25);
        assert_relative_eq!(y.partial([0, 0, 2, 0]).unwrap(), 0.0);
        assert_relative_eq!(y.partial([0, 0, 3, 0]).unwrap(), -0.125, epsilon = 1e-14);
    }

    #[test]
    fn quadrature_is_machine_accurate_on_smooth_integrand() {
        let val = gauss_legendre_jet(
            |u| Ok(Jet::constant(1.0 / (1.0 + u * u), 1)),
            0.0,
            1.0,
            1,
        )
        .unwrap();
        assert_relative_eq!(val.value(), std::f64::consts::FRAC_PI_4, epsilon = 1e-15);
    }
}
