//! Parameter studies: exit offsets past the jump point, epsilon ladders,
//! friction regime sweeps and stroke phase diagrams.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::cycle::{build_singular_cycle, SingularCycle};
use crate::error::{GsptError, Result};
use crate::model::{builtin_model, norm, ModelKind, ModelSpec, Vec2};
use crate::ode::{solve, Crossing, DenseStep, Event, Termination, Tolerance, Trajectory};
use crate::simulate::{
    find_limit_cycle, hausdorff_distance, plan_section, slow_segment_distance, CycleOptions,
    LimitCycle,
};

/// Default distance of the exit transversal from the jump point.
pub const DEFAULT_RHO: f64 = 0.1;
/// Horizontal distance of the slow-manifold seed from the jump point.
pub const SLOW_SEED_DISTANCE: f64 = 0.5;

/// Exit coordinates on the transversal `x = x_F + side * rho`: `y_s` for the
/// attracting slow manifold and `y_l` for the critical fibre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionOffsets {
    pub y_s: f64,
    pub y_l: f64,
    /// +1 when the fibre leaves the jump point towards larger x.
    pub side: f64,
}

impl SectionOffsets {
    pub fn offset(&self) -> f64 {
        (self.y_s - self.y_l).abs()
    }
}

/// First crossing of `x = x_line` (moving in direction `side`) along a
/// stored trajectory, located with the dense output.
fn first_crossing_x(traj: &Trajectory<2>, x_line: f64, side: f64) -> Option<Vec2> {
    for step in traj.steps() {
        let g0 = side * (step.y0[0] - x_line);
        let g1 = side * (step.y1[0] - x_line);
        if g0 < 0.0 && g1 >= 0.0 {
            let (mut a, mut b) = (step.t0, step.t1());
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if side * (step.eval(m)[0] - x_line) < 0.0 {
                    a = m;
                } else {
                    b = m;
                }
                if (b - a).abs() <= 1e-15 * (1.0 + b.abs()) {
                    break;
                }
            }
            return Some(step.eval(0.5 * (a + b)));
        }
    }
    None
}

/// Point at horizontal distance `dist` from the jump point along the reduced
/// segment of the singular cycle (which lies on the attracting branch).
fn slow_seed(cycle: &SingularCycle, dist: f64) -> Result<Vec2> {
    let xf = cycle.contact.location[0];
    let pts = &cycle.reduced.samples;
    for w in pts.windows(2).rev() {
        let (da, db) = ((w[0][0] - xf).abs(), (w[1][0] - xf).abs());
        if da >= dist && db < dist {
            let t = (da - dist) / (da - db);
            return Ok([
                w[0][0] + t * (w[1][0] - w[0][0]),
                w[0][1] + t * (w[1][1] - w[0][1]),
            ]);
        }
    }
    Err(GsptError::precondition(format!(
        "attracting branch before the jump point is shorter than {dist} in x"
    )))
}

/// Exit offsets on `x = x_F ± rho` for the slow manifold at `eps` and the
/// critical fibre, with the slow manifold seeded `seed_shift` further from
/// the jump point than the default seed.
pub fn section_offsets_seeded(
    model: &ModelSpec,
    eps: f64,
    rho: f64,
    seed_shift: f64,
) -> Result<SectionOffsets> {
    if !(eps > 0.0) || !(rho > 0.0) {
        return Err(GsptError::precondition("eps and rho must be positive"));
    }
    let cycle = build_singular_cycle(model)?;
    section_offsets_for(model, &cycle, eps, rho, seed_shift)
}

/// Exit offsets on the transversal at distance `rho` past the jump point.
pub fn section_offsets(model: &ModelSpec, eps: f64, rho: f64) -> Result<SectionOffsets> {
    section_offsets_seeded(model, eps, rho, 0.0)
}

pub fn section_offsets_for(
    model: &ModelSpec,
    cycle: &SingularCycle,
    eps: f64,
    rho: f64,
    seed_shift: f64,
) -> Result<SectionOffsets> {
    let f_pt = cycle.contact.location;
    if model.grad_f(f_pt)[1].abs() < 1e-12 {
        return Err(GsptError::precondition(
            "exit offsets need f to depend on y at the jump point",
        ));
    }
    let fibre = &cycle.layer_arc;
    let first = fibre
        .steps()
        .first()
        .ok_or_else(|| GsptError::Internal("empty fibre".into()))?;
    let side = (first.eval(first.t0 + 1e-3 * first.h)[0] - f_pt[0]).signum();
    let x_line = f_pt[0] + side * rho;
    let fibre_hit = first_crossing_x(fibre, x_line, side).ok_or_else(|| {
        GsptError::precondition(format!("critical fibre never reaches x = {x_line}"))
    })?;
    let transverse = |z: Vec2, v: Vec2| (v[0] / norm(v)).abs() > 1e-3 && z[0].is_finite();
    if !transverse(fibre_hit, model.n(fibre_hit)) {
        return Err(GsptError::precondition(format!(
            "fibre is tangent to x = {x_line}; choose another rho"
        )));
    }

    let base = slow_seed(cycle, SLOW_SEED_DISTANCE + seed_shift)?;
    let n = model.n(base);
    let nn = norm(n);
    let seed = [base[0] + eps * n[0] / nn, base[1] + eps * n[1] / nn];
    let exit = Event::new(move |_t, z: &Vec2| side * (z[0] - x_line), Crossing::Rising);
    // Coming back to just behind the seed means a full loop without an exit.
    let x_back = seed[0] - side * 0.1 * SLOW_SEED_DISTANCE;
    let looped = Event::new(move |_t, z: &Vec2| side * (z[0] - x_back), Crossing::Rising);
    let mut reach = f64::NEG_INFINITY;
    let mut track = |step: &DenseStep<2>| reach = reach.max(side * (step.y1[0] - f_pt[0]));
    let sol = solve(
        |_t, z: &Vec2| model.rhs(*z, eps),
        0.0,
        seed,
        1e4 / eps,
        &Tolerance::new(1e-12)
            .with_max_steps(20_000_000)
            .without_storage(),
        &[exit, looped],
        Some(&mut track),
    )?;
    match sol.termination {
        Termination::Event(0) => {}
        Termination::Event(1) => {
            return Err(GsptError::Escape(format!(
                "slow manifold from {seed:?} turned back at {reach:+.4} from x_F without reaching x = {x_line}"
            )))
        }
        _ => {
            return Err(GsptError::Escape(format!(
                "slow manifold from {seed:?} did not reach x = {x_line}"
            )))
        }
    }
    let z = sol.trajectory.last();
    if !transverse(z, model.rhs(z, eps)) {
        return Err(GsptError::precondition(format!(
            "slow manifold is tangent to x = {x_line}; choose another rho"
        )));
    }
    Ok(SectionOffsets {
        y_s: z[1],
        y_l: fibre_hit[1],
        side,
    })
}

/// Least-squares slope of `ln y` against `ln x` with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub half_width_95: f64,
    pub points: usize,
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(GsptError::precondition("log-log fit needs at least 3 paired points"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(GsptError::precondition("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(GsptError::precondition("log-log fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let dof = n - 2.0;
    let se = (sse / dof / sxx).sqrt();
    let t = student_t_975(dof)?;
    Ok(LogLogFit {
        slope,
        intercept,
        half_width_95: t * se,
        points: x.len(),
    })
}

fn student_t_975(dof: f64) -> Result<f64> {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| GsptError::Internal(format!("Student t distribution: {e}")))?;
    Ok(dist.inverse_cdf(0.975))
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub model: String,
    pub rho: f64,
    pub eps_values: Vec<f64>,
    pub offsets: Vec<Option<f64>>,
    pub floquet: Vec<Option<f64>>,
    pub hausdorff: Vec<Option<f64>>,
    pub slow_dist: Vec<Option<f64>>,
    /// Per-epsilon failure notes; empty when every quantity was computed.
    pub failures: Vec<(f64, String)>,
    pub offset_fit: Option<LogLogFit>,
    /// Fit of `-floquet` against `1/eps`.
    pub floquet_fit: Option<LogLogFit>,
    pub hausdorff_fit: Option<LogLogFit>,
    pub slow_dist_fit: Option<LogLogFit>,
}

impl ScalingReport {
    /// Hausdorff distances strictly decrease as eps decreases.
    pub fn hausdorff_monotone(&self) -> bool {
        let mut pairs: Vec<(f64, f64)> = self
            .eps_values
            .iter()
            .zip(&self.hausdorff)
            .filter_map(|(e, h)| h.map(|h| (*e, h)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.len() == self.eps_values.len() && pairs.windows(2).all(|w| w[0].1 < w[1].1)
    }

    /// Largest relative deviation of `-floquet * eps` from its median.
    pub fn floquet_spread(&self) -> Option<f64> {
        let mut k: Vec<f64> = self
            .eps_values
            .iter()
            .zip(&self.floquet)
            .map(|(e, f)| f.map(|f| -f * e))
            .collect::<Option<Vec<f64>>>()?;
        k.sort_by(f64::total_cmp);
        let median = if k.len() % 2 == 1 {
            k[k.len() / 2]
        } else {
            0.5 * (k[k.len() / 2 - 1] + k[k.len() / 2])
        };
        k.iter()
            .map(|v| ((v - median) / median).abs())
            .fold(Some(0.0), |acc, d| acc.map(|a: f64| a.max(d)))
    }
}

struct LadderCell {
    offset: Result<f64>,
    cycle: Result<(f64, f64, f64)>,
}

/// Runs the exit-offset and limit-cycle measurements over an epsilon ladder.
pub fn epsilon_scaling_report(
    model: &ModelSpec,
    eps_values: &[f64],
    rho: f64,
) -> Result<ScalingReport> {
    let mut eps: Vec<f64> = eps_values.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.len() < 5 || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(GsptError::precondition("need at least 5 distinct positive eps values"));
    }
    if (eps[eps.len() - 1] / eps[0]).log10() < 1.5 {
        return Err(GsptError::precondition("eps values must span at least 1.5 decades"));
    }
    let singular = build_singular_cycle(model)?;
    let singular_poly = singular.polyline(4000);
    let anchor = slow_anchor(&singular);
    let cells: Vec<LadderCell> = eps
        .par_iter()
        .map(|&e| LadderCell {
            offset: section_offsets_for(model, &singular, e, rho, 0.0).map(|o| o.offset()),
            cycle: cycle_measurements(model, e, &singular_poly, anchor),
        })
        .collect();
    let mut report = ScalingReport {
        model: model.name.clone(),
        rho,
        eps_values: eps.clone(),
        offsets: Vec::new(),
        floquet: Vec::new(),
        hausdorff: Vec::new(),
        slow_dist: Vec::new(),
        failures: Vec::new(),
        offset_fit: None,
        floquet_fit: None,
        hausdorff_fit: None,
        slow_dist_fit: None,
    };
    for (e, cell) in eps.iter().zip(cells) {
        match cell.offset {
            Ok(o) => report.offsets.push(Some(o)),
            Err(err) => {
                report.offsets.push(None);
                report.failures.push((*e, format!("offset: {err}")));
            }
        }
        match cell.cycle {
            Ok((fl, h, sd)) => {
                report.floquet.push(Some(fl));
                report.hausdorff.push(Some(h));
                report.slow_dist.push(Some(sd));
            }
            Err(err) => {
                report.floquet.push(None);
                report.hausdorff.push(None);
                report.slow_dist.push(None);
                report.failures.push((*e, format!("limit cycle: {err}")));
            }
        }
    }
    let fit = |xs: &[f64], ys: &[Option<f64>]| {
        let (x, y): (Vec<f64>, Vec<f64>) = xs
            .iter()
            .zip(ys)
            .filter_map(|(x, y)| y.map(|y| (*x, y)))
            .unzip();
        loglog_fit(&x, &y).ok()
    };
    report.offset_fit = fit(&eps, &report.offsets);
    let inv: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    let neg_floquet: Vec<Option<f64>> = report.floquet.iter().map(|f| f.map(|f| -f)).collect();
    report.floquet_fit = fit(&inv, &neg_floquet);
    report.hausdorff_fit = fit(&eps, &report.hausdorff);
    report.slow_dist_fit = fit(&eps, &report.slow_dist);
    Ok(report)
}

/// Midpoint (in arclength) of the reduced segment of the singular cycle.
pub fn slow_anchor(cycle: &SingularCycle) -> Vec2 {
    let pts = &cycle.reduced.samples;
    let total: f64 = pts
        .windows(2)
        .map(|w| norm([w[1][0] - w[0][0], w[1][1] - w[0][1]]))
        .sum();
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let l = norm([w[1][0] - w[0][0], w[1][1] - w[0][1]]);
        if acc + l >= 0.5 * total && l > 0.0 {
            let t = (0.5 * total - acc) / l;
            return [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])];
        }
        acc += l;
    }
    pts[pts.len() / 2]
}

fn cycle_measurements(
    model: &ModelSpec,
    eps: f64,
    singular_poly: &[Vec2],
    anchor: Vec2,
) -> Result<(f64, f64, f64)> {
    let c = find_limit_cycle(model, eps, &CycleOptions::default())?;
    let h = hausdorff_distance(&c.samples, singular_poly)?;
    let sd = slow_segment_distance(model, &c, anchor)?;
    Ok((c.floquet_exponent, h, sd))
}

// ---------------------------------------------------------------------------
// friction regimes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SteadySliding,
    PureSlip,
    StickSlip,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::SteadySliding => "steady_sliding",
            Regime::PureSlip => "pure_slip",
            Regime::StickSlip => "stick_slip",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeCell {
    pub v0: f64,
    pub regime: Option<Regime>,
    /// Trace of the linearisation at the equilibrium, full eps field.
    pub trace: f64,
    /// Fraction of the period spent within the slow band near `y = 0`.
    pub dwell_fraction: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeMap {
    pub cells: Vec<RegimeCell>,
    /// `sqrt(a1 / (3 a3))`.
    pub v_m_analytic: f64,
    /// Smallest `v0` above which every cell is steady sliding.
    pub v_m_empirical: Option<f64>,
    /// `[last stick_slip, first pure_slip]` along increasing `v0`.
    pub v_ss_bracket: Option<(f64, f64)>,
    pub hints: Vec<String>,
}

/// Parameters of the friction oscillator sweep.
#[derive(Debug, Clone, Copy)]
pub struct FrictionSweep {
    pub delta: f64,
    pub mu_s: f64,
    pub a1: f64,
    pub a3: f64,
    pub eps: f64,
}

impl FrictionSweep {
    fn model(&self, v0: f64) -> Result<ModelSpec> {
        let params = BTreeMap::from([
            ("delta".to_string(), self.delta),
            ("v0".to_string(), v0),
            ("mu_s".to_string(), self.mu_s),
            ("a1".to_string(), self.a1),
            ("a3".to_string(), self.a3),
        ]);
        builtin_model(ModelKind::Transition.name(), &params)
    }
}

/// Width of the slow band around `y = 0`, in units of eps.
pub const STICK_BAND: f64 = 5.0;
/// Minimal dwell fraction in the band for stick-slip.
pub const STICK_DWELL: f64 = 0.1;

/// Classifies the friction oscillator over a grid of belt speeds.
pub fn stickslip_regime_sweep(sweep: &FrictionSweep, v0_values: &[f64]) -> Result<RegimeMap> {
    if sweep.a1 <= 0.0 || sweep.a3 <= 0.0 {
        return Err(GsptError::precondition("a1 and a3 must be positive"));
    }
    let mut v0s = v0_values.to_vec();
    v0s.sort_by(f64::total_cmp);
    v0s.dedup();
    let cells: Vec<RegimeCell> = v0s
        .par_iter()
        .map(|&v0| classify_regime(sweep, v0))
        .collect::<Result<Vec<_>>>()?;
    let v_m_analytic = (sweep.a1 / (3.0 * sweep.a3)).sqrt();
    let first_steady_tail = cells
        .iter()
        .rposition(|c| c.regime != Some(Regime::SteadySliding))
        .map_or(0, |i| i + 1);
    let v_m_empirical = if first_steady_tail < cells.len() && first_steady_tail > 0 {
        Some(0.5 * (cells[first_steady_tail - 1].v0 + cells[first_steady_tail].v0))
    } else {
        None
    };
    let mut hints = Vec::new();
    let mut v_ss_bracket = None;
    for w in cells.windows(2) {
        match (w[0].regime, w[1].regime) {
            (Some(Regime::StickSlip), Some(Regime::PureSlip)) => {
                v_ss_bracket = Some((w[0].v0, w[1].v0));
            }
            (Some(Regime::StickSlip), Some(Regime::SteadySliding)) => hints.push(format!(
                "no pure-slip cell between v0 = {} and {}; refine the grid to bracket v_ss",
                w[0].v0, w[1].v0
            )),
            _ => {}
        }
    }
    Ok(RegimeMap {
        cells,
        v_m_analytic,
        v_m_empirical,
        v_ss_bracket,
        hints,
    })
}

fn classify_regime(sweep: &FrictionSweep, v0: f64) -> Result<RegimeCell> {
    let model = sweep.model(v0)?;
    let eps = sweep.eps;
    // equilibrium (mu(v0), v0): trace of the full linearisation
    let trace = equilibrium_trace(&model, v0, eps);
    let mut cell = RegimeCell {
        v0,
        regime: None,
        trace,
        dwell_fraction: None,
        note: None,
    };
    if trace < 0.0 && settles(&model, v0, eps)? {
        cell.regime = Some(Regime::SteadySliding);
        return Ok(cell);
    }
    let opts = CycleOptions {
        transient_time: 4000.0 / sweep.delta.min(1.0),
        ..CycleOptions::default()
    };
    let plan = plan_section(&model, eps, opts.transient_time);
    let found = plan.and_then(|p| {
        crate::simulate::limit_cycle_on(&model, eps, &p, 0.0, &opts)
    });
    match found {
        Ok(c) => {
            let dwell = dwell_fraction(&model, &c, STICK_BAND * eps)?;
            cell.dwell_fraction = Some(dwell);
            cell.regime = Some(if dwell >= STICK_DWELL {
                Regime::StickSlip
            } else {
                Regime::PureSlip
            });
        }
        Err(e) => cell.note = Some(e.to_string()),
    }
    Ok(cell)
}

/// Rest point of the full friction oscillator: `y = v0`, `x = mu(v0) - eps / v0`.
fn equilibrium(model: &ModelSpec, v0: f64, eps: f64) -> Vec2 {
    let mu_s = model.param("mu_s").unwrap_or(0.0);
    let a1 = model.param("a1").unwrap_or(0.0);
    let a3 = model.param("a3").unwrap_or(0.0);
    [mu_s - a1 * v0 + a3 * v0.powi(3) - eps / v0, v0]
}

fn equilibrium_trace(model: &ModelSpec, v0: f64, eps: f64) -> f64 {
    let j = model.rhs_jacobian(equilibrium(model, v0, eps), eps);
    j[0][0] + j[1][1]
}

/// Whether a perturbed start relaxes onto the equilibrium.
fn settles(model: &ModelSpec, v0: f64, eps: f64) -> Result<bool> {
    let z0 = equilibrium(model, v0, eps);
    let start = [z0[0], z0[1] + 0.05 * v0];
    let sol = solve(
        |_t, z: &Vec2| model.rhs(*z, eps),
        0.0,
        start,
        2e4,
        &Tolerance::new(1e-10).without_storage(),
        &[],
        None,
    )?;
    let end = sol.trajectory.last();
    Ok(norm([end[0] - z0[0], end[1] - z0[1]]) < 0.01 * v0)
}

/// Fraction of the period (integration time) spent with `y <= band`.
pub fn dwell_fraction(model: &ModelSpec, cycle: &LimitCycle, band: f64) -> Result<f64> {
    // samples are uniform in arclength; weight each by its time share 1/|H|
    let n = cycle.samples.len();
    let mut total = 0.0;
    let mut inside = 0.0;
    for i in 0..n {
        let a = cycle.samples[i];
        let b = cycle.samples[(i + 1) % n];
        let ds = norm([b[0] - a[0], b[1] - a[1]]);
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let speed = norm(model.rhs(m, cycle.eps));
        if !(speed > 0.0) {
            return Err(GsptError::Degenerate(format!("cycle passes through a rest point near {m:?}")));
        }
        let dt = ds / speed;
        total += dt;
        if m[1] <= band {
            inside += dt;
        }
    }
    Ok(inside / total)
}

// ---------------------------------------------------------------------------
// stroke phase diagram

#[derive(Debug, Clone, Serialize)]
pub struct StrokeCell {
    pub eps: f64,
    pub delta: f64,
    pub strokes: Option<u32>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrokeDiagram {
    /// Row-major over `(eps, delta)` in the order given.
    pub cells: Vec<StrokeCell>,
}

impl StrokeDiagram {
    pub fn get(&self, eps: f64, delta: f64) -> Option<&StrokeCell> {
        self.cells.iter().find(|c| c.eps == eps && c.delta == delta)
    }
}

/// Stroke counts of the transition model over an `(eps, delta)` grid.
/// `base` holds the remaining parameters (`v0`, `mu_s`, `a1`, `a3`).
pub fn stroke_phase_diagram(
    eps_values: &[f64],
    delta_values: &[f64],
    base: &BTreeMap<String, f64>,
) -> Result<StrokeDiagram> {
    let grid: Vec<(f64, f64)> = eps_values
        .iter()
        .flat_map(|e| delta_values.iter().map(move |d| (*e, *d)))
        .collect();
    let models = grid
        .iter()
        .map(|(_, d)| {
            let mut p = base.clone();
            p.insert("delta".into(), *d);
            builtin_model(ModelKind::Transition.name(), &p)
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = grid
        .par_iter()
        .zip(models.par_iter())
        .map(|(&(eps, delta), model)| {
            let opts = CycleOptions {
                // Both eps and delta slow the drift along y = 0.
                transient_time: 50.0 / (eps.min(1.0) * delta.min(1.0)),
                ..CycleOptions::default()
            };
            match find_limit_cycle(model, eps, &opts) {
                Ok(c) => StrokeCell {
                    eps,
                    delta,
                    strokes: c.strokes,
                    note: c.strokes.is_none().then(|| "no timescale separation".to_string()),
                },
                Err(e) => StrokeCell {
                    eps,
                    delta,
                    strokes: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(StrokeDiagram { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_model;

    #[test]
    fn fit_recovers_power_law() {
        let x = log_ladder(1e-4, 1e-2, 6);
        let y: Vec<f64> = x.iter().map(|e| 3.0 * e.powf(2.0 / 3.0)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(f.half_width_95 < 1e-10);
    }

    #[test]
    fn t_quantile_matches_table() {
        // two-sided 95% critical values
        assert!((student_t_975(4.0).unwrap() - 2.776445).abs() < 1e-5);
        assert!((student_t_975(10.0).unwrap() - 2.228139).abs() < 1e-5);
    }

    #[test]
    fn ladder_is_log_spaced() {
        let l = log_ladder(10f64.powf(-4.5), 1e-2, 6);
        assert_eq!(l.len(), 6);
        assert!((l[0] - 10f64.powf(-4.5)).abs() < 1e-18);
        assert!((l[5] - 1e-2).abs() < 1e-15);
        assert!((l[1] / l[0] - 10f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn minimal_fibre_exit_matches_direct_layer_integration() {
        // oracle: integrate the layer field x' = 1 - y, y' = x - 1 + y from F
        // (already on the side where y grows) until x = 1.1
        let m = default_model(ModelKind::Minimal);
        let o = section_offsets(&m, 1e-3, 0.1).unwrap();
        assert_eq!(o.side, 1.0);
        let exit = Event::new(|_t, z: &Vec2| z[0] - 1.1, Crossing::Rising);
        let sol = solve(
            |_t, z: &Vec2| [1.0 - z[1], z[0] - 1.0 + z[1]],
            0.0,
            [1.0, 0.0],
            10.0,
            &Tolerance::new(1e-12),
            &[exit],
            None,
        )
        .unwrap();
        assert!((o.y_l - sol.trajectory.last()[1]).abs() < 1e-9);
        assert!(o.y_s > o.y_l);
    }

    #[test]
    fn slow_manifold_exit_ignores_seed() {
        let m = default_model(ModelKind::Minimal);
        let a = section_offsets_seeded(&m, 1e-3, 0.1, 0.0).unwrap();
        let b = section_offsets_seeded(&m, 1e-3, 0.1, 0.1).unwrap();
        assert!((a.y_s - b.y_s).abs() < 1e-8, "{} vs {}", a.y_s, b.y_s);
    }
}
