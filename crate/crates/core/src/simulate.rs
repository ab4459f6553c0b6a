//! Full-eps integration, Poincaré return maps and limit cycles.

use serde::Serialize;

use crate::cycle::{build_singular_cycle, SingularCycle};
use crate::error::{GsptError, Result};
use crate::model::{default_window, dot, norm, ModelSpec, Vec2};
use crate::ode::{solve, Crossing, DenseStep, Event, Termination, Tolerance, Trajectory};
use crate::singular::find_n_singularities;

/// Integrates the full system over `t_span` with relative and absolute
/// tolerance `tol`.
pub fn integrate(
    model: &ModelSpec,
    z0: Vec2,
    eps: f64,
    t_span: (f64, f64),
    tol: f64,
) -> Result<Trajectory<2>> {
    check_tol(tol)?;
    check_eps(eps)?;
    let sol = solve(
        |_t, z: &Vec2| model.rhs(*z, eps),
        t_span.0,
        z0,
        t_span.1,
        &Tolerance::new(tol),
        &[],
        None,
    )?;
    Ok(sol.trajectory)
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-13..=1e-5).contains(&tol) {
        Ok(())
    } else {
        Err(GsptError::precondition(format!(
            "tolerance must lie in [1e-13, 1e-5], got {tol:e}"
        )))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(GsptError::precondition(format!("eps must be >= 0, got {eps}")))
    }
}

/// A line segment transverse to the flow. Points are addressed by the
/// signed coordinate `s` along `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareSection {
    pub base: Vec2,
    /// Unit vector along the section line.
    pub direction: Vec2,
    pub half_width: f64,
    /// +1 if returns cross along the normal `(-d_y, d_x)`, -1 against it.
    pub orientation: f64,
}

impl PoincareSection {
    /// Section through `base` perpendicular to `flow`, crossed along `flow`.
    pub fn normal_to(base: Vec2, flow: Vec2, half_width: f64) -> Self {
        let n = norm(flow);
        let u = [flow[0] / n, flow[1] / n];
        // normal(direction) = (-d_y, d_x) = u  =>  direction = (u_y, -u_x)
        Self {
            base,
            direction: [u[1], -u[0]],
            half_width,
            orientation: 1.0,
        }
    }

    pub fn normal(&self) -> Vec2 {
        [-self.direction[1], self.direction[0]]
    }

    pub fn point(&self, s: f64) -> Vec2 {
        [
            self.base[0] + s * self.direction[0],
            self.base[1] + s * self.direction[1],
        ]
    }

    pub fn coordinate(&self, z: Vec2) -> f64 {
        dot([z[0] - self.base[0], z[1] - self.base[1]], self.direction)
    }

    pub fn signed_distance(&self, z: Vec2) -> f64 {
        dot([z[0] - self.base[0], z[1] - self.base[1]], self.normal())
    }

    /// Checks transversality of the flow at the base point.
    pub fn check_transverse(&self, model: &ModelSpec, eps: f64, time_sign: f64) -> Result<()> {
        let h = model.rhs(self.base, eps);
        let flux = time_sign * dot(h, self.normal()) * self.orientation;
        if flux > 1e-6 {
            Ok(())
        } else {
            Err(GsptError::precondition(format!(
                "section at {:?} is not transverse to the flow (flux {flux:e})",
                self.base
            )))
        }
    }
}

/// Outcome of one return to the section.
#[derive(Debug, Clone)]
pub struct Return {
    pub s0: f64,
    pub s1: f64,
    pub z1: Vec2,
    pub time: f64,
    /// Natural log of the derivative of the one-dimensional return map.
    pub log_derivative: f64,
    /// `exp(log_derivative)`; underflows to zero for strongly contracting cycles.
    pub derivative: f64,
    /// `int time_factor dt` over the return, when the model has a factor.
    pub physical_time: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReturnOptions {
    pub tol: f64,
    pub max_time: f64,
    pub max_steps: usize,
    /// +1 integrates forwards; -1 follows the flow backwards (repelling cycles).
    pub time_sign: f64,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_time: 1e7,
            max_steps: 100_000_000,
            time_sign: 1.0,
        }
    }
}

/// Collects an arclength-decimated polyline of the orbit while integrating.
struct PolylineRecorder {
    spacing: f64,
    points: Vec<(f64, Vec2)>,
    since_last: f64,
}

impl PolylineRecorder {
    fn new(start: Vec2, spacing: f64) -> Self {
        Self {
            spacing,
            points: vec![(0.0, start)],
            since_last: 0.0,
        }
    }

    fn observe(&mut self, step: &DenseStep<4>) {
        let a = [step.y0[0], step.y0[1]];
        let b = [step.y1[0], step.y1[1]];
        let chord = norm([b[0] - a[0], b[1] - a[1]]);
        let pieces = ((chord / self.spacing).ceil() as usize).clamp(1, 256);
        let mut prev = a;
        for k in 1..=pieces {
            let t = step.t0 + step.h * k as f64 / pieces as f64;
            let y = step.eval(t);
            let p = [y[0], y[1]];
            self.since_last += norm([p[0] - prev[0], p[1] - prev[1]]);
            prev = p;
            if self.since_last >= 0.25 * self.spacing {
                self.points.push((t, p));
                self.since_last = 0.0;
            }
        }
    }
}

fn return_with(
    model: &ModelSpec,
    eps: f64,
    section: &PoincareSection,
    s0: f64,
    opts: &ReturnOptions,
    recorder: Option<&mut PolylineRecorder>,
) -> Result<Return> {
    let z0 = section.point(s0);
    let sign = opts.time_sign;
    let factor = model.time_factor.clone();
    let rhs = |_t: f64, u: &[f64; 4]| {
        let z = [u[0], u[1]];
        let h = model.rhs(z, eps);
        let tf = factor.as_ref().map_or(0.0, |f| f.value(z));
        [sign * h[0], sign * h[1], sign * model.divergence(z, eps), tf]
    };
    let sec = *section;
    let crossing = if section.orientation > 0.0 {
        Crossing::Rising
    } else {
        Crossing::Falling
    };
    let event = Event::new(move |_t, u: &[f64; 4]| sec.signed_distance([u[0], u[1]]), crossing)
        .with_guard(move |t, u: &[f64; 4]| {
            t > 1e-6 && sec.coordinate([u[0], u[1]]).abs() <= sec.half_width
        });
    let tol = Tolerance::new(opts.tol)
        .with_max_steps(opts.max_steps)
        .without_storage();
    let mut observer = recorder.map(|r| move |step: &DenseStep<4>| r.observe(step));
    let sol = solve(
        rhs,
        0.0,
        [z0[0], z0[1], 0.0, 0.0],
        opts.max_time,
        &tol,
        &[event],
        observer.as_mut().map(|o| o as &mut dyn FnMut(&DenseStep<4>)),
    )?;
    if sol.termination != Termination::Event(0) {
        let end = sol.trajectory.last();
        return Err(GsptError::Escape(format!(
            "no return to the section from s = {s0} within time {} (ended at ({}, {}))",
            opts.max_time, end[0], end[1]
        )));
    }
    let end = sol.trajectory.last();
    let z1 = [end[0], end[1]];
    let n = section.normal();
    let flux0 = dot(model.rhs(z0, eps), n);
    let flux1 = dot(model.rhs(z1, eps), n);
    if !(flux0 * flux1 > 0.0) {
        return Err(GsptError::Orientation(format!(
            "flow crosses the section with opposite orientations at s = {s0} and its return"
        )));
    }
    // planar return-map derivative: exp(int div H) * <H(z0), n> / <H(z1), n>;
    // in reversed time the divergence integral carries the sign already
    let log_derivative = end[2] + (flux0 / flux1).ln();
    Ok(Return {
        s0,
        s1: section.coordinate(z1),
        z1,
        time: sol.trajectory.t_end(),
        log_derivative,
        derivative: log_derivative.exp(),
        physical_time: factor.as_ref().map(|_| sign * end[3]),
    })
}

/// First return to the section from the point at coordinate `s0`, with the
/// derivative of the return map from the planar flux formula.
pub fn poincare_return(
    model: &ModelSpec,
    eps: f64,
    section: &PoincareSection,
    s0: f64,
    opts: &ReturnOptions,
) -> Result<Return> {
    check_eps(eps)?;
    return_with(model, eps, section, s0, opts, None)
}

/// Central-difference derivative of the return map, step `1e-4 * half_width`.
/// Useful only when the derivative is not vanishingly small.
pub fn return_derivative_fd(
    model: &ModelSpec,
    eps: f64,
    section: &PoincareSection,
    s0: f64,
    opts: &ReturnOptions,
) -> Result<f64> {
    let h = 1e-4 * section.half_width;
    let plus = poincare_return(model, eps, section, s0 + h, opts)?;
    let minus = poincare_return(model, eps, section, s0 - h, opts)?;
    Ok((plus.s1 - minus.s1) / (2.0 * h))
}

/// Floquet exponent `ln(d) / period` for an orientation-preserving return
/// with derivative `d`.
pub fn floquet_exponent(period: f64, return_derivative: f64) -> Result<f64> {
    if !(return_derivative > 0.0) {
        return Err(GsptError::Orientation(format!(
            "return derivative {return_derivative:e} is not positive"
        )));
    }
    if !(period > 0.0) {
        return Err(GsptError::precondition("period must be positive"));
    }
    Ok(return_derivative.ln() / period)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Amplitude {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitCycle {
    pub eps: f64,
    /// Closed polyline, uniform in arclength, starting at the section point.
    pub samples: Vec<Vec2>,
    pub period_desing: f64,
    /// Original-time period, for models with a time factor.
    pub period_physical: Option<f64>,
    /// Floquet exponent on the slow timescale `tau = eps * t`:
    /// `ln(return derivative) / (eps * period_desing)`.
    pub floquet_exponent: f64,
    /// Floquet exponent per unit of the integration time.
    pub floquet_exponent_desing: f64,
    pub log_return_derivative: f64,
    pub amplitude: Amplitude,
    pub strokes: Option<u32>,
    pub section: PoincareSection,
    pub fixed_point: Vec2,
    /// `|P(s*) - s*|` at the accepted fixed point.
    pub residual: f64,
    pub iterations: usize,
    /// Found in reversed time.
    pub repelling: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CycleOptions {
    pub section: Option<PoincareSection>,
    /// Starting coordinate on the section.
    pub seed: f64,
    pub tol: f64,
    pub max_iterations: usize,
    /// Convergence threshold on successive section coordinates.
    pub convergence: f64,
    /// Number of arclength-uniform samples of the returned cycle.
    pub samples: usize,
    /// Transient integration time used when no singular cycle exists.
    pub transient_time: f64,
    pub max_time: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            section: None,
            seed: 0.0,
            tol: 1e-11,
            max_iterations: 60,
            convergence: 1e-10,
            samples: 4096,
            transient_time: 5000.0,
            max_time: 1e8,
        }
    }
}

/// Where the cycle search starts: a section plus the expected period.
#[derive(Debug, Clone)]
pub struct SectionPlan {
    pub section: PoincareSection,
    pub time_sign: f64,
    /// Rough period estimate in the integration clock, used for caps.
    pub period_estimate: f64,
    /// Length estimate of the cycle, used for sample spacing.
    pub length_estimate: f64,
}

/// Section across the fast fibre of the singular cycle at its highest point
/// (largest `|f|`), perpendicular to the layer flow there.
pub fn section_from_singular(model: &ModelSpec, eps: f64, cycle: &SingularCycle) -> Result<SectionPlan> {
    let pts = cycle.layer_samples(2000);
    let (k, _) = pts
        .iter()
        .enumerate()
        .map(|(i, z)| (i, model.f(*z).abs()))
        .fold((0, f64::NEG_INFINITY), |acc, it| if it.1 > acc.1 { it } else { acc });
    let p = pts[k];
    let time_sign = if cycle.repelling { -1.0 } else { 1.0 };
    let mut flow = model.rhs(p, eps);
    flow = [time_sign * flow[0], time_sign * flow[1]];
    let f_peak = model.f(p).abs();
    let to_singularity = cycle
        .singularities
        .iter()
        .map(|s| norm([p[0] - s.location[0], p[1] - s.location[1]]))
        .fold(f64::INFINITY, f64::min);
    let half_width = (0.5 * f_peak / norm(model.grad_f(p)))
        .min(0.5 * to_singularity)
        .max(1e-3);
    let section = PoincareSection::normal_to(p, flow, half_width);
    let length: f64 = cycle
        .polyline(2000)
        .windows(2)
        .map(|w| norm([w[1][0] - w[0][0], w[1][1] - w[0][1]]))
        .sum();
    let slow = if eps > 0.0 {
        cycle.reduced.reduced_time.abs() / eps
    } else {
        f64::INFINITY
    };
    Ok(SectionPlan {
        section,
        time_sign,
        period_estimate: slow + cycle.layer_arc.duration() * 10.0 + 100.0,
        length_estimate: length,
    })
}

/// Section from a transient simulation: perpendicular to the flow at the
/// fastest point of the final part of the transient.
pub fn section_from_transient(model: &ModelSpec, eps: f64, transient_time: f64) -> Result<SectionPlan> {
    let window = default_window(model);
    let singular = find_n_singularities(model, window)?;
    let seed = match singular.first() {
        Some(s) => [
            s.location[0] + 0.05 * window.width(),
            s.location[1] + 0.05 * window.height(),
        ],
        None => [
            0.5 * (window.x_min + window.x_max) + 0.2 * window.width(),
            0.5 * (window.y_min + window.y_max),
        ],
    };
    let traj = integrate(model, seed, eps, (0.0, transient_time), 1e-9)?;
    let t_cut = traj.t_start() + 0.6 * traj.duration();
    let mut best = (traj.last(), 0.0);
    let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    let mut length = 0.0;
    for (i, step) in traj.steps().iter().enumerate() {
        if traj.times[i] < t_cut {
            continue;
        }
        for k in 0..4 {
            let z = step.eval(step.t0 + step.h * k as f64 / 4.0);
            let sp = norm(model.rhs(z, eps));
            if sp > best.1 {
                best = (z, sp);
            }
            bbox = [bbox[0].min(z[0]), bbox[1].max(z[0]), bbox[2].min(z[1]), bbox[3].max(z[1])];
        }
        length += norm([step.y1[0] - step.y0[0], step.y1[1] - step.y0[1]]);
    }
    if !(best.1 > 0.0) {
        return Err(GsptError::NoConvergence(
            "transient settled at an equilibrium; no cycle to find".into(),
        ));
    }
    let diag = norm([bbox[1] - bbox[0], bbox[3] - bbox[2]]);
    let section = PoincareSection::normal_to(best.0, model.rhs(best.0, eps), 0.25 * diag);
    Ok(SectionPlan {
        section,
        time_sign: 1.0,
        period_estimate: 0.4 * transient_time,
        length_estimate: length.max(diag),
    })
}

/// Plans a section automatically: from the singular cycle when one exists,
/// otherwise from a transient simulation.
pub fn plan_section(model: &ModelSpec, eps: f64, transient_time: f64) -> Result<SectionPlan> {
    match build_singular_cycle(model) {
        Ok(cycle) => section_from_singular(model, eps, &cycle),
        Err(e) => {
            log::info!("no singular cycle for `{}` ({e}); placing section from a transient", model.name);
            section_from_transient(model, eps, transient_time)
        }
    }
}

/// Finds the limit cycle through a Poincaré section by fixed-point iteration
/// of the return map (Newton steps when the map is weakly contracting).
pub fn find_limit_cycle(model: &ModelSpec, eps: f64, opts: &CycleOptions) -> Result<LimitCycle> {
    check_eps(eps)?;
    if !(eps > 0.0) {
        return Err(GsptError::precondition("limit cycles need eps > 0"));
    }
    if let Some(section) = opts.section {
        let plan = SectionPlan {
            section,
            time_sign: 1.0,
            period_estimate: opts.max_time / 10.0,
            length_estimate: 10.0 * section.half_width,
        };
        return limit_cycle_on(model, eps, &plan, opts.seed, opts);
    }
    // the singular cycle gives the best section for small eps; for large eps
    // it can miss the cycle entirely, so fall back to a transient
    if let Ok(cycle) = build_singular_cycle(model) {
        let attempt = section_from_singular(model, eps, &cycle)
            .and_then(|plan| limit_cycle_on(model, eps, &plan, opts.seed, opts));
        match attempt {
            Ok(c) => return Ok(c),
            Err(e) => log::info!("section from the singular cycle failed ({e}); trying a transient"),
        }
    }
    let plan = section_from_transient(model, eps, opts.transient_time)?;
    limit_cycle_on(model, eps, &plan, 0.0, opts)
}

/// Fixed-point iteration on a given section plan from coordinate `seed`.
pub fn limit_cycle_on(
    model: &ModelSpec,
    eps: f64,
    plan: &SectionPlan,
    seed: f64,
    opts: &CycleOptions,
) -> Result<LimitCycle> {
    let section = plan.section;
    section.check_transverse(model, eps, plan.time_sign)?;
    let ropts = ReturnOptions {
        tol: opts.tol,
        max_time: (10.0 * plan.period_estimate).min(opts.max_time).max(100.0),
        time_sign: plan.time_sign,
        ..ReturnOptions::default()
    };
    let mut s = seed;
    let mut iterations = 0;
    let mut last: Option<Return> = None;
    while iterations < opts.max_iterations {
        iterations += 1;
        let r = return_with(model, eps, &section, s, &ropts, None)?;
        let g = r.s1 - s;
        let d = r.derivative;
        let next = if d > 0.1 && (d - 1.0).abs() > 1e-6 {
            // Newton on P(s) - s, kept inside the section
            let step = -g / (d - 1.0);
            let cap = 0.5 * section.half_width;
            s + step.clamp(-cap, cap)
        } else {
            r.s1
        };
        let converged = (r.s1 - s).abs() < opts.convergence;
        last = Some(r);
        if converged {
            break;
        }
        if !next.is_finite() || next.abs() > section.half_width {
            return Err(GsptError::NoConvergence(format!(
                "iterate left the section (s = {next}); try a smaller eps, or the cycle may be repelling"
            )));
        }
        s = next;
    }
    let r = last.ok_or_else(|| GsptError::Internal("no iteration performed".into()))?;
    if (r.s1 - s).abs() >= opts.convergence {
        return Err(GsptError::NoConvergence(format!(
            "return map residual {:e} after {iterations} iterations; try a smaller eps, or the cycle may be repelling",
            (r.s1 - s).abs()
        )));
    }

    // final pass from the fixed point, recording the orbit
    let spacing = (plan.length_estimate / (4.0 * opts.samples as f64)).max(1e-9);
    let start = section.point(r.s1);
    let mut recorder = PolylineRecorder::new(start, spacing);
    let fin = return_with(model, eps, &section, r.s1, &ropts, Some(&mut recorder))?;
    // the observer sees the whole final step, past the section crossing
    let mut poly: Vec<Vec2> = recorder
        .points
        .into_iter()
        .filter(|(t, _)| *t < fin.time)
        .map(|(_, p)| p)
        .collect();
    poly.push(fin.z1);
    let samples = resample_closed(&poly, opts.samples);
    let amplitude = amplitude_of(&samples);
    let period = fin.time;
    let log_d = plan.time_sign * fin.log_derivative;
    let floquet_exponent_desing = log_d / period;
    let mut cycle = LimitCycle {
        eps,
        samples,
        period_desing: period,
        period_physical: fin.physical_time,
        floquet_exponent: floquet_exponent_desing / eps,
        floquet_exponent_desing,
        log_return_derivative: log_d,
        amplitude,
        strokes: None,
        section,
        fixed_point: fin.z1,
        residual: (fin.s1 - r.s1).abs(),
        iterations,
        repelling: plan.time_sign < 0.0,
    };
    cycle.strokes = match stroke_count_with(model, &cycle) {
        Ok(n) => Some(n),
        Err(e) => {
            log::info!("stroke count unavailable: {e}");
            None
        }
    };
    Ok(cycle)
}

/// Result of running the cycle search from one seed point.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: Vec2,
    pub cycle: std::result::Result<LimitCycle, String>,
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub outcomes: Vec<SeedOutcome>,
    /// Largest Hausdorff distance between any converged cycle and the first.
    pub max_spread: f64,
    pub all_converged: bool,
    pub all_attracting: bool,
}

/// Seeds spread around the rest point of `N` inside the default window
/// (or around the window centre), at radii from 5% to 45% of the window.
pub fn probe_seeds(model: &ModelSpec, n: usize) -> Result<Vec<Vec2>> {
    let w = default_window(model);
    let centre = find_n_singularities(model, w)?
        .first()
        .map(|s| s.location)
        .unwrap_or([0.5 * (w.x_min + w.x_max), 0.5 * (w.y_min + w.y_max)]);
    Ok((0..n)
        .map(|i| {
            let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            let r = 0.05 + 0.4 * frac;
            let theta = 2.0 * std::f64::consts::PI * i as f64 * 0.618_033_988_75;
            let z = [
                centre[0] + r * w.width() * theta.cos(),
                centre[1] + r * w.height() * theta.sin(),
            ];
            [z[0].clamp(w.x_min, w.x_max), z[1].clamp(w.y_min, w.y_max)]
        })
        .collect())
}

/// Runs the cycle search from several seed points: each seed is followed to
/// its first pass through the section, then iterated to a fixed point.
pub fn uniqueness_probe(model: &ModelSpec, eps: f64, seeds: &[Vec2]) -> Result<UniquenessReport> {
    use rayon::prelude::*;
    let opts = CycleOptions::default();
    let plan = plan_section(model, eps, opts.transient_time)?;
    let section = plan.section;
    let outcomes: Vec<SeedOutcome> = seeds
        .par_iter()
        .map(|&seed| {
            let run = || -> Result<LimitCycle> {
                let sign = plan.time_sign;
                let sec = section;
                let hit = Event::new(move |_t, z: &Vec2| sec.signed_distance(*z), Crossing::Rising)
                    .with_guard(move |_t, z: &Vec2| sec.coordinate(*z).abs() <= sec.half_width);
                let sol = solve(
                    |_t, z: &Vec2| {
                        let h = model.rhs(*z, eps);
                        [sign * h[0], sign * h[1]]
                    },
                    0.0,
                    seed,
                    20.0 * plan.period_estimate,
                    &Tolerance::new(1e-10).without_storage(),
                    &[hit],
                    None,
                )?;
                if sol.termination != Termination::Event(0) {
                    return Err(GsptError::Escape(format!(
                        "orbit from {seed:?} never reached the section"
                    )));
                }
                let s0 = section.coordinate(sol.trajectory.last());
                limit_cycle_on(model, eps, &plan, s0, &opts)
            };
            SeedOutcome {
                seed,
                cycle: run().map_err(|e| e.to_string()),
            }
        })
        .collect();
    let cycles: Vec<&LimitCycle> = outcomes.iter().filter_map(|o| o.cycle.as_ref().ok()).collect();
    let mut max_spread: f64 = 0.0;
    if let Some(first) = cycles.first() {
        for c in &cycles[1..] {
            max_spread = max_spread.max(hausdorff_distance(&first.samples, &c.samples)?);
        }
    }
    Ok(UniquenessReport {
        all_converged: cycles.len() == outcomes.len(),
        all_attracting: cycles.iter().all(|c| c.floquet_exponent < 0.0 && !c.repelling),
        max_spread,
        outcomes,
    })
}

fn amplitude_of(samples: &[Vec2]) -> Amplitude {
    let mut a = Amplitude {
        x_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_min: f64::INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for z in samples {
        a.x_min = a.x_min.min(z[0]);
        a.x_max = a.x_max.max(z[0]);
        a.y_min = a.y_min.min(z[1]);
        a.y_max = a.y_max.max(z[1]);
    }
    a
}

/// `n` points spaced uniformly in arclength along a closed polyline whose
/// first and last points (nearly) coincide.
pub fn resample_closed(poly: &[Vec2], n: usize) -> Vec<Vec2> {
    if poly.len() < 2 || n == 0 {
        return poly.to_vec();
    }
    let mut cum = Vec::with_capacity(poly.len());
    cum.push(0.0);
    for w in poly.windows(2) {
        let l = norm([w[1][0] - w[0][0], w[1][1] - w[0][1]]);
        cum.push(cum.last().unwrap() + l);
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let target = total * i as f64 / n as f64;
        while j + 1 < cum.len() - 1 && cum[j + 1] < target {
            j += 1;
        }
        let seg = cum[j + 1] - cum[j];
        let t = if seg > 0.0 { (target - cum[j]) / seg } else { 0.0 };
        let (a, b) = (poly[j], poly[j + 1]);
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    out
}

/// Number of alternating slow/fast phases along a cycle, using the speed of
/// the model's field at the samples.
pub fn stroke_count_with(model: &ModelSpec, cycle: &LimitCycle) -> Result<u32> {
    let speeds: Vec<f64> = cycle
        .samples
        .iter()
        .map(|z| norm(model.rhs(*z, cycle.eps)))
        .collect();
    stroke_count(&speeds)
}

/// Counts phase blocks in a cyclic speed profile: samples faster than the
/// geometric mean of the extreme speeds are fast, the rest slow; the count
/// is the number of maximal runs around the cycle.
pub fn stroke_count(speeds: &[f64]) -> Result<u32> {
    if speeds.len() < 1000 {
        return Err(GsptError::precondition(format!(
            "stroke count needs at least 1000 samples, got {}",
            speeds.len()
        )));
    }
    let s_min = speeds.iter().copied().fold(f64::INFINITY, f64::min);
    let s_max = speeds.iter().copied().fold(0.0, f64::max);
    let ratio = s_max / s_min.max(f64::MIN_POSITIVE);
    if !(ratio >= 10.0) {
        return Err(GsptError::NoTimescaleSeparation { ratio });
    }
    let threshold = (s_min.max(f64::MIN_POSITIVE) * s_max).sqrt();
    let fast: Vec<bool> = speeds.iter().map(|s| *s > threshold).collect();
    let changes = (0..fast.len())
        .filter(|&i| fast[i] != fast[(i + 1) % fast.len()])
        .count();
    Ok(if changes == 0 { 1 } else { changes as u32 })
}

/// Symmetric discrete Hausdorff distance between closed polylines, measuring
/// vertices of one against segments of the other.
pub fn hausdorff_distance(a: &[Vec2], b: &[Vec2]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(GsptError::precondition("Hausdorff distance of an empty polyline"));
    }
    Ok(directed(a, b).max(directed(b, a)))
}

fn directed(from: &[Vec2], to: &[Vec2]) -> f64 {
    use rayon::prelude::*;
    from.par_iter()
        .map(|p| distance_to_polyline(*p, to))
        .reduce(|| 0.0, f64::max)
}

/// Distance from a point to a closed polyline.
pub fn distance_to_polyline(p: Vec2, poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n == 1 {
        return norm([p[0] - poly[0][0], p[1] - poly[0][1]]);
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        best = best.min(point_segment(p, a, b));
    }
    best
}

fn point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let ll = dot(ab, ab);
    let t = if ll > 0.0 { (dot(ap, ab) / ll).clamp(0.0, 1.0) } else { 0.0 };
    norm([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

/// Distance of the cycle's slow phase from the critical curve, measured
/// where the cycle crosses the normal line through `anchor` (a point of the
/// attracting branch): `|f| / |grad f|` at the crossing closest to `anchor`.
pub fn slow_segment_distance(model: &ModelSpec, cycle: &LimitCycle, anchor: Vec2) -> Result<f64> {
    let g = model.grad_f(anchor);
    let tangent = [g[1], -g[0]];
    let side = |z: Vec2| dot([z[0] - anchor[0], z[1] - anchor[1]], tangent);
    let n = cycle.samples.len();
    let mut best: Option<(f64, Vec2)> = None;
    for i in 0..n {
        let a = cycle.samples[i];
        let b = cycle.samples[(i + 1) % n];
        let (sa, sb) = (side(a), side(b));
        if (sa <= 0.0) != (sb <= 0.0) {
            let t = sa / (sa - sb);
            let z = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let d = norm([z[0] - anchor[0], z[1] - anchor[1]]);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, z));
            }
        }
    }
    let (_, z) = best.ok_or_else(|| {
        GsptError::precondition(format!("cycle does not cross the normal line at {anchor:?}"))
    })?;
    Ok(model.f(z).abs() / norm(model.grad_f(z)))
}
