//! Dormand–Prince 5(4) integrator with continuous extension and event location.
//!
//! The stepper follows the classical DOPRI5 layout (Hairer, Nørsett & Wanner,
//! *Solving ODEs I*, II.5): FSAL stages, PI step-size control and the
//! fourth-order dense output `contd5`. It is generic over the state dimension so
//! that augmented systems (e.g. a planar field plus a running divergence
//! integral) share the same machinery.

use crate::error::{GsptError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings. `rtol` and `atol` are applied componentwise.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|; `f64::INFINITY` leaves it unconstrained.
    pub h_max: f64,
    pub max_steps: usize,
    /// Keep every step in the returned trajectory. When false only the
    /// endpoints survive, for long runs observed through `on_step`.
    pub store_steps: bool,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
            store_steps: true,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn without_storage(mut self) -> Self {
        self.store_steps = false;
        self
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10)
    }
}

/// One accepted step together with its continuous extension.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const D: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; D]; 5],
    pub y0: [f64; D],
    pub y1: [f64; D],
}

impl<const D: usize> DenseStep<D> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Evaluates the fourth-order interpolant at `t` (expected within the step).
    pub fn eval(&self, t: f64) -> [f64; D] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        let mut out = [0.0; D];
        for i in 0..D {
            out[i] = r[0][i]
                + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }

    /// Time derivative of the interpolant.
    pub fn eval_derivative(&self, t: f64) -> [f64; D] {
        let s = (t - self.t0) / self.h;
        let r = &self.rcont;
        let mut out = [0.0; D];
        for i in 0..D {
            // d/ds of r0 + s r1 + s(1-s) r2 + s^2 (1-s) r3 + s^2 (1-s)^2 r4
            let d = r[1][i]
                + (1.0 - 2.0 * s) * r[2][i]
                + (2.0 * s - 3.0 * s * s) * r[3][i]
                + (2.0 * s - 6.0 * s * s + 4.0 * s * s * s) * r[4][i];
            out[i] = d / self.h;
        }
        out
    }
}

/// Sign convention for a crossing of an event function through zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

impl Crossing {
    fn matches(self, g0: f64, g1: f64) -> bool {
        match self {
            Crossing::Rising => g0 < 0.0 && g1 >= 0.0,
            Crossing::Falling => g0 > 0.0 && g1 <= 0.0,
            Crossing::Either => (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0),
        }
    }
}

type EventFn<'a, const D: usize> = Box<dyn Fn(f64, &[f64; D]) -> f64 + 'a>;
type GuardFn<'a, const D: usize> = Box<dyn Fn(f64, &[f64; D]) -> bool + 'a>;

/// A scalar event function with a direction, optional acceptance guard, and
/// a terminal flag. Located zeros failing the guard are ignored.
pub struct Event<'a, const D: usize> {
    g: EventFn<'a, D>,
    guard: Option<GuardFn<'a, D>>,
    pub crossing: Crossing,
    pub terminal: bool,
}

impl<'a, const D: usize> Event<'a, D> {
    pub fn new(g: impl Fn(f64, &[f64; D]) -> f64 + 'a, crossing: Crossing) -> Self {
        Self {
            g: Box::new(g),
            guard: None,
            crossing,
            terminal: true,
        }
    }

    pub fn non_terminal(mut self) -> Self {
        self.terminal = false;
        self
    }

    pub fn with_guard(mut self, guard: impl Fn(f64, &[f64; D]) -> bool + 'a) -> Self {
        self.guard = Some(Box::new(guard));
        self
    }

    pub fn value(&self, t: f64, y: &[f64; D]) -> f64 {
        (self.g)(t, y)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EventHit<const D: usize> {
    /// Index into the event list passed to the solver.
    pub event: usize,
    pub t: f64,
    pub y: [f64; D],
}

/// Why the integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    Event(usize),
}

/// Times, states and dense output of an integration.
#[derive(Debug, Clone)]
pub struct Trajectory<const D: usize = 2> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; D]>,
    steps: Vec<DenseStep<D>>,
}

impl<const D: usize> Trajectory<D> {
    fn start(t0: f64, y0: [f64; D]) -> Self {
        Self {
            times: vec![t0],
            states: vec![y0],
            steps: Vec::new(),
        }
    }

    /// A trajectory that never moves: `duration` of a constant state.
    pub fn constant(y: [f64; D], t0: f64, duration: f64) -> Self {
        let mut rcont = [[0.0; D]; 5];
        rcont[0] = y;
        let step = DenseStep {
            t0,
            h: duration,
            rcont,
            y0: y,
            y1: y,
        };
        Self {
            times: vec![t0, t0 + duration],
            states: vec![y, y],
            steps: vec![step],
        }
    }

    /// Keeps only the start point and the latest step.
    fn replace_last(&mut self, step: DenseStep<D>) {
        self.times.truncate(1);
        self.states.truncate(1);
        self.steps.clear();
        self.push(step);
    }

    fn push(&mut self, step: DenseStep<D>) {
        self.times.push(step.t1());
        self.states.push(step.y1);
        self.steps.push(step);
    }

    /// Replaces the final sample by an interior point of the last step.
    fn truncate_last(&mut self, t: f64, y: [f64; D]) {
        if let (Some(tl), Some(sl)) = (self.times.last_mut(), self.states.last_mut()) {
            *tl = t;
            *sl = y;
        }
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    pub fn duration(&self) -> f64 {
        self.t_end() - self.t_start()
    }

    pub fn last(&self) -> [f64; D] {
        *self.states.last().expect("trajectory has at least one sample")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.len() < 2
    }

    pub fn steps(&self) -> &[DenseStep<D>] {
        &self.steps
    }

    fn step_index(&self, t: f64) -> usize {
        // times[i]..times[i+1] is covered by steps[i]
        let n = self.steps.len();
        match self.times[..n]
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 1),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 1),
        }
    }

    /// Dense-output evaluation; `t` is clamped to the covered interval.
    pub fn interpolate(&self, t: f64) -> [f64; D] {
        if self.steps.is_empty() {
            return self.states[0];
        }
        let t = t.clamp(self.t_start(), self.t_end());
        let step = &self.steps[self.step_index(t)];
        step.eval(t)
    }

    /// Gauss–Legendre quadrature of `integrand` over the trajectory, using the
    /// dense output inside each step.
    pub fn integrate_along(&self, integrand: impl Fn(&[f64; D]) -> f64) -> f64 {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
            0.236_926_885_056_189_08,
        ];
        let mut total = 0.0;
        for (i, step) in self.steps.iter().enumerate() {
            let a = self.times[i];
            let b = self.times[i + 1];
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut acc = 0.0;
            for (x, w) in NODES.iter().zip(WEIGHTS) {
                acc += w * integrand(&step.eval(mid + half * x));
            }
            total += half * acc;
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct Solution<const D: usize> {
    pub trajectory: Trajectory<D>,
    pub hits: Vec<EventHit<D>>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Integrate `rhs` from `(t0, y0)` towards `t_end` (either direction), stopping
/// early at the first terminal event. `on_step` sees every accepted step.
pub fn solve<const D: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    tol: &Tolerance,
    events: &[Event<'_, D>],
    mut on_step: Option<&mut dyn FnMut(&DenseStep<D>)>,
) -> Result<Solution<D>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    check_finite(&y0, t0)?;
    let mut trajectory = Trajectory::start(t0, y0);
    let mut hits = Vec::new();
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(Solution {
            trajectory,
            hits,
            termination: Termination::Completed,
            accepted_steps: 0,
            rejected_steps: 0,
        });
    }
    let dir = span.signum();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    check_finite(&k1, t)?;
    let mut h = initial_step(&rhs, t, &y, &k1, dir, tol).min(tol.h_max) * dir;

    let mut g_prev: Vec<f64> = events.iter().map(|e| e.value(t, &y)).collect();

    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let safe = 0.9;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let facc1 = 1.0 / 0.2;
    let facc2 = 1.0 / 10.0;

    loop {
        if accepted + rejected >= tol.max_steps {
            return Err(GsptError::Timeout {
                steps: tol.max_steps,
                t,
            });
        }
        let remaining = t_end - t;
        if remaining * dir <= 0.0 {
            break;
        }
        let mut last = false;
        if (h.abs() - remaining.abs()) >= -1e-15 * t.abs().max(1.0) || (t + h - t_end) * dir > 0.0 {
            h = remaining;
            last = true;
        }
        if h.abs() <= 1e-14 * t.abs().max(1.0) {
            return Err(GsptError::StepUnderflow { t, h });
        }

        let mut yt = [0.0; D];
        for i in 0..D {
            yt[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = rhs(t + C2 * h, &yt);
        for i in 0..D {
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = rhs(t + C3 * h, &yt);
        for i in 0..D {
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = rhs(t + C4 * h, &yt);
        for i in 0..D {
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = rhs(t + C5 * h, &yt);
        for i in 0..D {
            yt[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = rhs(t + h, &yt);
        let mut y1 = [0.0; D];
        for i in 0..D {
            y1[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let k7 = rhs(t + h, &y1);

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..D {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sk) * (e / sk);
            finite &= y1[i].is_finite() && k7[i].is_finite();
        }
        err = (err / D as f64).sqrt();
        if !finite || !err.is_finite() {
            // Shrink hard and retry; persistent blow-up ends in underflow.
            rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(expo1);
        let fac = (fac11 / facold.powf(beta)).clamp(facc2, facc1) / safe;
        let mut hnew = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            accepted += 1;
            if hnew.abs() > tol.h_max {
                hnew = tol.h_max * dir;
            }
            if last_rejected {
                hnew = dir * hnew.abs().min(h.abs());
            }
            last_rejected = false;

            let mut rcont = [[0.0; D]; 5];
            for i in 0..D {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            let step = DenseStep {
                t0: t,
                h,
                rcont,
                y0: y,
                y1,
            };

            // events: earliest terminal zero inside this step wins
            let mut stop: Option<(usize, f64, [f64; D])> = None;
            for (ei, ev) in events.iter().enumerate() {
                let g1 = ev.value(t + h, &y1);
                if ev.crossing.matches(g_prev[ei], g1) {
                    let (te, ye) = locate(ev, &step, g_prev[ei], g1);
                    let accept = ev.guard.as_ref().map_or(true, |gd| gd(te, &ye));
                    if accept {
                        if ev.terminal {
                            let earlier = stop.map_or(true, |(_, ts, _)| (te - ts) * dir < 0.0);
                            if earlier {
                                stop = Some((ei, te, ye));
                            }
                        } else {
                            hits.push(EventHit { event: ei, t: te, y: ye });
                        }
                    }
                }
                g_prev[ei] = g1;
            }

            if let Some(cb) = on_step.as_deref_mut() {
                cb(&step);
            }
            if tol.store_steps {
                trajectory.push(step);
            } else {
                trajectory.replace_last(step);
            }

            if let Some((ei, te, ye)) = stop {
                // drop non-terminal hits recorded after the terminal time
                hits.retain(|hit| (hit.t - te) * dir <= 0.0);
                hits.push(EventHit { event: ei, t: te, y: ye });
                trajectory.truncate_last(te, ye);
                return Ok(Solution {
                    trajectory,
                    hits,
                    termination: Termination::Event(ei),
                    accepted_steps: accepted,
                    rejected_steps: rejected,
                });
            }

            k1 = k7;
            y = y1;
            t += h;
            if last {
                break;
            }
            h = hnew;
        } else {
            rejected += 1;
            hnew = h / facc1.min(fac11 / safe);
            last_rejected = true;
            h = hnew;
        }
    }

    Ok(Solution {
        trajectory,
        hits,
        termination: Termination::Completed,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

fn check_finite<const D: usize>(y: &[f64; D], t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GsptError::Domain {
            field: "state",
            x: y.first().copied().unwrap_or(f64::NAN),
            y: y.get(1).copied().unwrap_or(f64::NAN),
            detail: format!("non-finite state at t = {t}"),
        })
    }
}

fn initial_step<const D: usize, F>(
    rhs: &F,
    t: f64,
    y: &[f64; D],
    f0: &[f64; D],
    dir: f64,
    tol: &Tolerance,
) -> f64
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..D {
        let sk = tol.atol + tol.rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(tol.h_max);
    let mut y1 = [0.0; D];
    for i in 0..D {
        y1[i] = y[i] + dir * h * f0[i];
    }
    let f1 = rhs(t + dir * h, &y1);
    let mut der2 = 0.0;
    for i in 0..D {
        let sk = tol.atol + tol.rtol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    if !der2.is_finite() {
        return 1e-8;
    }
    der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(tol.h_max)
}

/// Root of the event function on the dense output of a step (Illinois
/// false position, falling back to bisection).
fn locate<const D: usize>(
    ev: &Event<'_, D>,
    step: &DenseStep<D>,
    g0: f64,
    g1: f64,
) -> (f64, [f64; D]) {
    let mut a = step.t0;
    let mut b = step.t1();
    let mut ga = g0;
    let mut gb = g1;
    if gb == 0.0 {
        return (b, step.y1);
    }
    let scale = a.abs().max(b.abs()).max(1.0);
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * scale {
            break;
        }
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) {
            c = 0.5 * (a + b);
        }
        let yc = step.eval(c);
        let gc = ev.value(c, &yc);
        if gc == 0.0 {
            return (c, yc);
        }
        if (gc < 0.0) == (gb < 0.0) {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    // keep the endpoint on the "after" side of the crossing
    (b, step.eval(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let sol = solve(
            |_t, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            5.0,
            &Tolerance::new(1e-12),
            &[],
            None,
        )
        .unwrap();
        assert!((sol.trajectory.last()[0] - (-5.0f64).exp()).abs() < 1e-11);
        // dense output in the middle of a step
        let t = 2.345;
        let y = sol.trajectory.interpolate(t)[0];
        assert!((y - (-t).exp()).abs() < 1e-9, "{y}");
    }

    #[test]
    fn backward_integration() {
        let sol = solve(
            |_t, y: &[f64; 1]| [y[0]],
            1.0,
            [1.0],
            0.0,
            &Tolerance::new(1e-12),
            &[],
            None,
        )
        .unwrap();
        assert!((sol.trajectory.last()[0] - (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_event_locates_quarter_period() {
        // x' = -y, y' = x from (1, 0): x crosses zero (falling) at t = pi/2
        let ev = Event::new(|_t, y: &[f64; 2]| y[0], Crossing::Falling);
        let sol = solve(
            |_t, y: &[f64; 2]| [-y[1], y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &Tolerance::new(1e-12),
            &[ev],
            None,
        )
        .unwrap();
        assert_eq!(sol.termination, Termination::Event(0));
        let hit = sol.hits[0];
        assert!((hit.t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        assert!(hit.y[0].abs() < 1e-10);
    }

    #[test]
    fn guard_skips_rejected_zeros() {
        let ev = Event::new(|_t, y: &[f64; 2]| y[0], Crossing::Either).with_guard(|t, _| t > 2.0);
        let sol = solve(
            |_t, y: &[f64; 2]| [-y[1], y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &Tolerance::new(1e-12),
            &[ev],
            None,
        )
        .unwrap();
        let t = sol.hits[0].t;
        assert!((t - 1.5 * std::f64::consts::PI).abs() < 1e-9, "{t}");
    }

    #[test]
    fn dense_derivative_matches_field() {
        let sol = solve(
            |_t, y: &[f64; 2]| [-y[1], y[0]],
            0.0,
            [1.0, 0.0],
            3.0,
            &Tolerance::new(1e-12),
            &[],
            None,
        )
        .unwrap();
        let step = sol.trajectory.steps()[3];
        let t = step.t0 + 0.3 * step.h;
        let d = step.eval_derivative(t);
        let y = step.eval(t);
        assert!((d[0] + y[1]).abs() < 1e-7 && (d[1] - y[0]).abs() < 1e-7);
    }

    #[test]
    fn quadrature_along_trajectory() {
        let sol = solve(
            |_t, y: &[f64; 1]| [1.0 + 0.0 * y[0]],
            0.0,
            [0.0],
            2.0,
            &Tolerance::new(1e-12),
            &[],
            None,
        )
        .unwrap();
        // integral of y = t over [0, 2]
        let v = sol.trajectory.integrate_along(|y| y[0]);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn blow_up_reports_underflow() {
        let err = solve(
            |_t, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            &Tolerance::new(1e-10),
            &[],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, GsptError::StepUnderflow { .. } | GsptError::Timeout { .. }));
    }
}
