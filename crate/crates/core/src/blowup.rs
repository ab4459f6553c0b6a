//! Rescaling-chart analysis at a regular jump point: the limiting Riccati
//! system `x' = a0 u`, `u' = d0 + b1 x u`, its special solution `zeta` and
//! the exit constant `Omega_0`.

use serde::Serialize;

use crate::error::{GsptError, Result};
use crate::ode::{solve, Crossing, Event, Termination, Tolerance, Trajectory};
use crate::singular::ExpansionCoeffs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiProblem {
    pub a0: f64,
    pub b1: f64,
    pub d0: f64,
    /// Integration interval `[-X, X]` in the chart coordinate.
    pub x_span: (f64, f64),
}

impl RiccatiProblem {
    /// Problem on `[-x_max, x_max]`; `x_max` must be at least
    /// `10 (d0/b1)^(1/3)`.
    pub fn new(a0: f64, b1: f64, d0: f64, x_max: f64) -> Result<Self> {
        for (name, v) in [("a0", a0), ("b1", b1), ("d0", d0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GsptError::precondition(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let min = Self::min_extent(b1, d0);
        if !(x_max >= min) {
            return Err(GsptError::precondition(format!(
                "x_max = {x_max} is below 10 (d0/b1)^(1/3) = {min}"
            )));
        }
        Ok(Self {
            a0,
            b1,
            d0,
            x_span: (-x_max, x_max),
        })
    }

    pub fn from_coeffs(c: &ExpansionCoeffs, x_max: f64) -> Result<Self> {
        Self::new(c.a0, c.b1, c.d0, x_max)
    }

    fn min_extent(b1: f64, d0: f64) -> f64 {
        10.0 * (d0 / b1).cbrt()
    }

    /// `(2 d0^2 / (a0 b1))^(1/3)`, the factor in front of `Omega_0`.
    pub fn exit_scale(&self) -> f64 {
        (2.0 * self.d0 * self.d0 / (self.a0 * self.b1)).cbrt()
    }

    /// Left asymptote `-(d0/b1)/x`.
    pub fn left_asymptote(&self, x: f64) -> f64 {
        -(self.d0 / self.b1) / x
    }

    /// Right asymptote without the constant: `(b1/2a0) x^2 - (2 d0/b1)/x`.
    pub fn right_asymptote(&self, x: f64) -> f64 {
        self.b1 / (2.0 * self.a0) * x * x - 2.0 * self.d0 / self.b1 / x
    }
}

/// Dense representation of the special solution over the problem span.
#[derive(Debug, Clone)]
pub struct SpecialSolution {
    pub problem: RiccatiProblem,
    trajectory: Trajectory<1>,
}

impl SpecialSolution {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.trajectory.t_start(), self.trajectory.t_end());
        if x < lo || x > hi {
            return Err(GsptError::precondition(format!(
                "x = {x} outside the solved span [{lo}, {hi}]"
            )));
        }
        Ok(self.trajectory.interpolate(x)[0])
    }
}

/// Integrates `du/dx = (d0 + b1 x u) / (a0 u)` from the left asymptote at
/// `x = -X` to `x = X`. The special solution attracts nearby solutions
/// going right, so the crude start is forgotten quickly.
pub fn solve_special(prob: &RiccatiProblem) -> Result<SpecialSolution> {
    let mut p = *prob;
    for _ in 0..3 {
        match solve_special_once(&p) {
            Ok(s) => return Ok(s),
            Err(GsptError::Consistency(msg)) => {
                log::info!("{msg}; retrying with a wider start");
                p.x_span.0 *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(GsptError::Consistency(format!(
        "special solution still crosses u = 0 starting from x = {}",
        p.x_span.0
    )))
}

fn solve_special_once(prob: &RiccatiProblem) -> Result<SpecialSolution> {
    let (x0, x1) = prob.x_span;
    let (a0, b1, d0) = (prob.a0, prob.b1, prob.d0);
    let u0 = prob.left_asymptote(x0);
    let rhs = |x: f64, u: &[f64; 1]| [(d0 + b1 * x * u[0]) / (a0 * u[0])];
    let zero = Event::new(|_x, u: &[f64; 1]| u[0], Crossing::Falling);
    let sol = solve(rhs, x0, [u0], x1, &Tolerance::new(1e-13), &[zero], None)?;
    if let Termination::Event(_) = sol.termination {
        return Err(GsptError::Consistency(format!(
            "u crossed zero at x = {} (initialisation at {x0} too crude)",
            sol.trajectory.t_end()
        )));
    }
    Ok(SpecialSolution {
        problem: *prob,
        trajectory: sol.trajectory,
    })
}

/// Samples of `zeta` on `grid` (all points inside the problem span).
pub fn riccati_special_solution(prob: &RiccatiProblem, grid: &[f64]) -> Result<Vec<f64>> {
    let s = solve_special(prob)?;
    grid.iter().map(|&x| s.eval(x)).collect()
}

/// Fitted decay of `|zeta + (d0/b1)/x|` as `x -> -inf`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LeftTail {
    /// `p` in `|deviation| ~ C |x|^-p`.
    pub exponent: f64,
    pub constant: f64,
}

/// Fits the left-tail decay on `x` in `[-16 s, -4 s]`, `s = (d0/b1)^(1/3)`,
/// clipped to the right half of the solved span.
pub fn left_tail(sol: &SpecialSolution) -> Result<LeftTail> {
    let p = &sol.problem;
    let s = (p.d0 / p.b1).cbrt();
    let n = 13;
    let lo = (-16.0 * s).max(0.5 * sol.trajectory.t_start());
    let hi = -4.0 * s;
    let mut lx = Vec::with_capacity(n);
    let mut ld = Vec::with_capacity(n);
    for k in 0..n {
        let x = hi * (lo / hi).powf(k as f64 / (n - 1) as f64);
        let dev = (sol.eval(x)? - p.left_asymptote(x)).abs();
        if !(dev > 0.0) {
            return Err(GsptError::Consistency(format!("no measurable deviation at x = {x}")));
        }
        lx.push(x.abs().ln());
        ld.push(dev.ln());
    }
    let (slope, intercept) = line_fit(&lx, &ld);
    Ok(LeftTail {
        exponent: -slope,
        constant: intercept.exp(),
    })
}

fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Constant in the right asymptotics, from a least-squares fit of
/// `zeta - (b1/2a0) x^2 + (2 d0/b1)/x = K + c / x^3` over the upper half of
/// the span.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RightTail {
    pub constant: f64,
    pub remainder_coeff: f64,
}

pub fn right_tail(sol: &SpecialSolution) -> Result<RightTail> {
    let p = &sol.problem;
    let x_hi = sol.trajectory.t_end();
    let n = 41;
    let (mut v, mut r) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..n {
        let x = x_hi * (0.5 + 0.5 * k as f64 / (n - 1) as f64);
        v.push(x.powi(-3));
        r.push(sol.eval(x)? - p.right_asymptote(x));
    }
    let (c, k) = line_fit(&v, &r);
    Ok(RightTail {
        constant: k,
        remainder_coeff: c,
    })
}

/// Exit height predicted at `x = delta^(-1/3)` by the three-term right
/// asymptotics with the given `Omega_0`.
pub fn exit_prediction(prob: &RiccatiProblem, delta: f64, omega0: f64) -> f64 {
    let x = delta.powf(-1.0 / 3.0);
    prob.b1 / (2.0 * prob.a0) * x * x + prob.exit_scale() * omega0 - 2.0 * prob.d0 / prob.b1 / x
}

// ---------------------------------------------------------------------------
// Omega_0

/// Gamma function by the Lanczos approximation (g = 7, 9 terms), with
/// reflection for `x < 1/2`.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Bessel function of the first kind by its power series; accurate for
/// moderate arguments (`|x| <= 20`).
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_{-1/3}(2 z^{3/2}/3) + J_{1/3}(2 z^{3/2}/3)`.
pub fn omega_function(z: f64) -> f64 {
    let w = 2.0 / 3.0 * z.powf(1.5);
    bessel_j(-1.0 / 3.0, w) + bessel_j(1.0 / 3.0, w)
}

/// Smallest positive zero of [`omega_function`], scanning `(0, 5]` at the
/// given step and bisecting the first sign change.
pub fn omega0_with_step(step: f64) -> Result<f64> {
    let mut a = step;
    let mut fa = omega_function(a);
    while a < 5.0 {
        let b = (a + step).min(5.0);
        let fb = omega_function(b);
        if fa == 0.0 {
            return Ok(a);
        }
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = omega_function(mid);
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Err(GsptError::Internal("no sign change of the Bessel combination in (0, 5]".into()))
}

/// `Omega_0` with the default scan step 0.01.
pub fn omega0_constant() -> Result<f64> {
    omega0_with_step(0.01)
}

// ---------------------------------------------------------------------------
// normalised chart

/// Linear map between the normalised Riccati system
/// `x' = x^2 - y`, `y' = -1` (written with `u = x^2 - y`) and the chart
/// system with coefficients `(a0, b1, d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartMap {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ChartMap {
    pub fn new(prob: &RiccatiProblem) -> Self {
        let (a0, b1, d0) = (prob.a0, prob.b1, prob.d0);
        Self {
            alpha: (b1 * b1 / (4.0 * a0 * d0)).cbrt(),
            beta: (a0 * b1 / (2.0 * d0 * d0)).cbrt(),
            gamma: (a0 * b1 * d0 / 2.0).cbrt(),
        }
    }

    /// Normalised `(x, u)` to chart `(x, u)`.
    pub fn to_chart(&self, x: f64, u: f64) -> (f64, f64) {
        (x / self.alpha, u / self.beta)
    }

    /// Chart `(x, u)` to normalised `(x, u)`.
    pub fn to_normalised(&self, x: f64, u: f64) -> (f64, f64) {
        (x * self.alpha, u * self.beta)
    }
}

/// Special solution of the normalised system in its own coordinates: start
/// on the attracting parabola `y = x^2 + 1/(2x)` at `x = -X`, integrate in
/// time and return `u = x^2 - y` where `x` passes each grid point.
pub fn normalised_special_solution(grid: &[f64], x_start: f64) -> Result<Vec<f64>> {
    let x_end = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(x_start < grid.iter().copied().fold(f64::INFINITY, f64::min)) {
        return Err(GsptError::precondition("start must lie left of the grid"));
    }
    let y0 = x_start * x_start + 0.5 / x_start;
    let stop = Event::new(move |_t, z: &[f64; 2]| z[0] - x_end - 1.0, Crossing::Rising);
    let sol = solve(
        |_t, z: &[f64; 2]| [z[0] * z[0] - z[1], -1.0],
        0.0,
        [x_start, y0],
        1e6,
        &Tolerance::new(1e-13),
        &[stop],
        None,
    )?;
    let traj = sol.trajectory;
    grid.iter()
        .map(|&xg| {
            let step = traj
                .steps()
                .iter()
                .find(|s| (s.y0[0] - xg) * (s.y1[0] - xg) <= 0.0)
                .ok_or_else(|| GsptError::Internal(format!("grid point {xg} not reached")))?;
            let (mut lo, mut hi) = (step.t0, step.t1());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if step.eval(mid)[0] < xg {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let z = step.eval(0.5 * (lo + hi));
            Ok(z[0] * z[0] - z[1])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const OMEGA0: f64 = 2.338_107_410_459_767;

    #[test]
    fn gamma_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.0 / 3.0) - 2.678_938_534_707_747_6).abs() < 1e-13);
        assert!((gamma(-0.5) + 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bessel_values() {
        assert!((bessel_j(0.0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1.0, 2.5) - 0.497_094_102_464_274_4).abs() < 1e-14);
        assert!((bessel_j(0.5, 3.0) - (2.0 / (std::f64::consts::PI * 3.0)).sqrt() * 3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn omega0_is_stable_under_refinement() {
        let a = omega0_constant().unwrap();
        let b = omega0_with_step(0.005).unwrap();
        assert!((a - b).abs() < 1e-10);
        assert!((a - OMEGA0).abs() < 1e-9);
    }

    #[test]
    fn problem_validation() {
        assert!(RiccatiProblem::new(1.0, 1.0, 1.0, 5.0).is_err());
        assert!(RiccatiProblem::new(-1.0, 1.0, 1.0, 20.0).is_err());
        assert!(RiccatiProblem::new(1.0, 1.0, 1.0, 10.0).is_ok());
    }

    #[test]
    fn unit_problem_tails() {
        let p = RiccatiProblem::new(1.0, 1.0, 1.0, 40.0).unwrap();
        let s = solve_special(&p).unwrap();
        let left = left_tail(&s).unwrap();
        assert!((left.exponent - 4.0).abs() < 0.2, "{left:?}");
        // leading left remainder is -a0 d0^2 / (b1^3 x^4)
        assert!((left.constant - 1.0).abs() < 0.2, "{left:?}");
        let right = right_tail(&s).unwrap();
        assert!((right.constant - 2f64.cbrt() * OMEGA0).abs() < 1e-4, "{right:?}");
    }

    #[test]
    fn zeta_is_positive_and_increasing() {
        let p = RiccatiProblem::new(1.0, 1.0, 1.0, 20.0).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| -20.0 + 0.1 * i as f64).collect();
        let z = riccati_special_solution(&p, &grid).unwrap();
        assert!(z.iter().all(|v| *v > 0.0));
        assert!(z.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn chart_map_carries_normalised_solution() {
        let p = RiccatiProblem::new(2.0, 0.5, 1.5, 30.0).unwrap();
        let map = ChartMap::new(&p);
        let s = solve_special(&p).unwrap();
        let grid: Vec<f64> = (0..=30).map(|i| -3.0 + 0.2 * i as f64).collect();
        let xt: Vec<f64> = grid.iter().map(|x| map.to_normalised(*x, 0.0).0).collect();
        let ut = normalised_special_solution(&xt, -40.0).unwrap();
        for ((x, xt), ut) in grid.iter().zip(&xt).zip(&ut) {
            let (x2, u2) = map.to_chart(*xt, *ut);
            assert!((x2 - x).abs() < 1e-12);
            let z = s.eval(*x).unwrap();
            assert!((z - u2).abs() < 1e-6 * (1.0 + z.abs()), "x = {x}: {z} vs {u2}");
        }
    }

    #[test]
    fn exit_closure_error_shrinks_like_delta() {
        let p = RiccatiProblem::new(1.0, 1.0, 1.0, 60.0).unwrap();
        let s = solve_special(&p).unwrap();
        let err = |d: f64| (s.eval(d.powf(-1.0 / 3.0)).unwrap() - exit_prediction(&p, d, OMEGA0)).abs();
        let (e1, e2) = (err(1e-2), err(1e-3));
        let ratio = e1 / e2;
        assert!(ratio > 7.0 && ratio < 13.0, "{e1} {e2}");
    }
}
