//! One function per subcommand. Each reads its blocks from the config,
//! runs the analysis and writes CSV and SVG files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use anyhow::{anyhow, Result};
use gspt_core::blowup::{
    omega0_constant, right_tail, left_tail, solve_special, RiccatiProblem,
};
use gspt_core::cycle::{build_singular_cycle, build_singular_cycle_in, SingularCycle};
use gspt_core::model::{builtin_model, default_window, ModelKind, ModelSpec, Window};
use gspt_core::scaling::{
    epsilon_scaling_report, stickslip_regime_sweep, stroke_phase_diagram, FrictionSweep,
    LogLogFit, Regime, DEFAULT_RHO,
};
use gspt_core::simulate::{find_limit_cycle, integrate, CycleOptions, PoincareSection};
use gspt_core::singular::{
    expansion_coeffs, find_contact_points, find_n_singularities, trace_critical_curve,
    CriticalCurve, NSingularity,
};

use crate::config::RunConfig;
use crate::output::{num, opt, Output};
use crate::svg::{Layer, Plot, BLUE, GREEN, GREY, ORANGE, RED};

/// A problem with the configuration rather than the computation.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(ConfigError(msg.into()))
}

pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub eps_override: Option<f64>,
    pub quiet: bool,
}

const CURVE_RESOLUTION: usize = 240;
/// Row cap for trajectory CSV files; longer runs are thinned evenly.
const MAX_TRAJECTORY_ROWS: usize = 20_000;

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn model(&self) -> Result<ModelSpec> {
        let m = self
            .config
            .model
            .as_ref()
            .ok_or_else(|| config_err("missing [model] block"))?;
        builtin_model(&m.name, &m.params).map_err(|e| config_err(e.to_string()))
    }

    fn window(&self, model: &ModelSpec) -> Window {
        self.config
            .window
            .map(Window::from)
            .unwrap_or_else(|| default_window(model))
    }

    fn eps_values(&self) -> Result<Vec<f64>> {
        if let Some(e) = self.eps_override {
            if !(e > 0.0) || !e.is_finite() {
                return Err(config_err(format!("--eps must be positive, got {e}")));
            }
            return Ok(vec![e]);
        }
        self.config
            .eps
            .as_ref()
            .map(|e| e.values())
            .ok_or_else(|| config_err("missing eps"))
    }

    fn eps(&self) -> Result<f64> {
        let v = self.eps_values()?;
        if v.len() != 1 {
            return Err(config_err("this command needs a single eps value"));
        }
        Ok(v[0])
    }

    fn ode_tol(&self) -> f64 {
        self.config
            .tolerances
            .as_ref()
            .and_then(|t| t.ode)
            .unwrap_or(1e-10)
    }

    fn output(&self) -> Result<Output> {
        Output::new(&self.out_dir)
    }

    fn finish(&self, out: Output) {
        for p in &out.written {
            self.say(format!("wrote {}", p.display()));
        }
    }
}

fn curve_layers(plot: Plot, curve: &CriticalCurve) -> Plot {
    let mut plot = plot;
    for (i, arc) in curve.arcs.iter().enumerate() {
        let pts = arc.iter().map(|s| s.point).collect();
        let label = (i == 0).then_some("critical curve");
        plot = plot.line(pts, GREEN, label);
    }
    plot
}

fn singularity_layer(plot: Plot, sings: &[NSingularity]) -> Plot {
    if sings.is_empty() {
        return plot;
    }
    plot.markers(sings.iter().map(|s| s.location).collect(), RED, Some("equilibrium"))
}

fn window_plot(title: String, w: Window) -> Plot {
    let mut p = Plot::new(title, "x", "y");
    p.x_range = Some((w.x_min, w.x_max));
    p.y_range = Some((w.y_min, w.y_max));
    p
}

pub fn analyze(ctx: &Ctx) -> Result<()> {
    let model = ctx.model()?;
    let window = ctx.window(&model);
    let curve = trace_critical_curve(&model, window, CURVE_RESOLUTION)?;
    let contacts = find_contact_points(&model, &curve)?;
    let sings = find_n_singularities(&model, window)?;
    let mut out = ctx.output()?;

    let mut rows = Vec::new();
    for (i, arc) in curve.arcs.iter().enumerate() {
        for s in arc {
            let stab = if s.lambda < 0.0 { "attracting" } else { "repelling" };
            rows.push(vec![
                i.to_string(),
                num(s.point[0]),
                num(s.point[1]),
                num(s.lambda),
                stab.to_string(),
            ]);
        }
    }
    out.csv("critical_curve.csv", &["arc", "x", "y", "lambda", "stability"], &rows)?;
    let rows: Vec<Vec<String>> = contacts
        .iter()
        .map(|c| {
            vec![
                num(c.location[0]),
                num(c.location[1]),
                c.order.to_string(),
                c.regular.to_string(),
                c.jump_class.label().to_string(),
            ]
        })
        .collect();
    out.csv("contact_points.csv", &["x", "y", "order", "regular", "jump"], &rows)?;
    let rows: Vec<Vec<String>> = sings
        .iter()
        .map(|s| {
            vec![
                num(s.location[0]),
                num(s.location[1]),
                num(s.trace),
                num(s.det),
                s.kind.label().to_string(),
            ]
        })
        .collect();
    out.csv("n_singularities.csv", &["x", "y", "trace", "det", "kind"], &rows)?;

    let mut plot = curve_layers(window_plot(format!("{}: critical curve", model.name), window), &curve);
    if !contacts.is_empty() {
        plot = plot.markers(contacts.iter().map(|c| c.location).collect(), BLUE, Some("contact point"));
    }
    plot = singularity_layer(plot, &sings);
    out.svg("phase_portrait.svg", &plot)?;

    ctx.say(format!(
        "{}: {} curve arcs, {} contact points, {} equilibria of N",
        model.name,
        curve.arcs.len(),
        contacts.len(),
        sings.len()
    ));
    for c in &contacts {
        ctx.say(format!(
            "  contact ({:.6}, {:.6}) order {} regular {} jump {}",
            c.location[0],
            c.location[1],
            c.order,
            c.regular,
            c.jump_class.label()
        ));
    }
    ctx.finish(out);
    Ok(())
}

fn singular_cycle(ctx: &Ctx, model: &ModelSpec) -> Result<SingularCycle> {
    Ok(match ctx.config.window {
        Some(w) => build_singular_cycle_in(model, Window::from(w), CURVE_RESOLUTION)?,
        None => build_singular_cycle(model)?,
    })
}

pub fn cycle(ctx: &Ctx) -> Result<()> {
    let model = ctx.model()?;
    let window = ctx.window(&model);
    let sc = singular_cycle(ctx, &model)?;
    let curve = trace_critical_curve(&model, window, CURVE_RESOLUTION)?;
    let mut out = ctx.output()?;

    let mut rows = Vec::new();
    for z in sc.layer_samples(1000) {
        rows.push(vec!["layer".into(), num(z[0]), num(z[1])]);
    }
    for z in &sc.reduced.samples {
        rows.push(vec!["reduced".into(), num(z[0]), num(z[1])]);
    }
    out.csv("singular_cycle.csv", &["segment", "x", "y"], &rows)?;
    let kv = |k: &str, v: String| vec![k.to_string(), v];
    let summary = vec![
        kv("contact_x", num(sc.contact.location[0])),
        kv("contact_y", num(sc.contact.location[1])),
        kv("jump", sc.contact.jump_class.label().into()),
        kv("reciprocal_x", num(sc.reciprocal[0])),
        kv("reciprocal_y", num(sc.reciprocal[1])),
        kv("reduced_desing_time", num(sc.reduced.desing_time)),
        kv("reduced_time", num(sc.reduced.reduced_time)),
        kv("repelling", sc.repelling.to_string()),
        kv("landing_branch_ok", sc.assumptions.landing_branch_ok.to_string()),
        kv("min_singularity_distance", num(sc.assumptions.min_singularity_distance)),
    ];
    out.csv("singular_cycle_summary.csv", &["key", "value"], &summary)?;

    let plot = curve_layers(window_plot(format!("{}: singular cycle", model.name), window), &curve)
        .line(sc.polyline(1000), BLUE, Some("singular cycle"))
        .markers(vec![sc.contact.location, sc.reciprocal], ORANGE, Some("jump / landing"));
    let plot = singularity_layer(plot, &sc.singularities);
    out.svg("singular_cycle.svg", &plot)?;

    ctx.say(format!(
        "{}: jump at ({:.6}, {:.6}), reciprocal point ({:.6}, {:.6})",
        model.name, sc.contact.location[0], sc.contact.location[1], sc.reciprocal[0], sc.reciprocal[1]
    ));
    ctx.finish(out);
    Ok(())
}

pub fn simulate(ctx: &Ctx) -> Result<()> {
    let model = ctx.model()?;
    let eps = ctx.eps()?;
    let window = ctx.window(&model);
    let sim = ctx.config.simulate.clone();
    let want_cycle = sim.as_ref().map_or(true, |s| s.limit_cycle);
    let mut out = ctx.output()?;

    let mut plot = window_plot(format!("{} at eps = {eps}", model.name), window);
    if let Ok(curve) = trace_critical_curve(&model, window, CURVE_RESOLUTION) {
        plot = curve_layers(plot, &curve);
    }
    let mut cycle_info = None;
    if want_cycle {
        let mut opts = CycleOptions {
            tol: ctx.ode_tol().min(1e-10),
            ..CycleOptions::default()
        };
        if let Some(c) = ctx.config.tolerances.as_ref().and_then(|t| t.cycle) {
            opts.convergence = c;
        }
        if let Some(s) = &ctx.config.section {
            opts.section = Some(PoincareSection::normal_to(s.base, s.flow, s.half_width));
        }
        let c = find_limit_cycle(&model, eps, &opts)?;
        let rows: Vec<Vec<String>> = c.samples.iter().map(|z| vec![num(z[0]), num(z[1])]).collect();
        out.csv("limit_cycle.csv", &["x", "y"], &rows)?;
        let kv = |k: &str, v: String| vec![k.to_string(), v];
        let summary = vec![
            kv("eps", num(eps)),
            kv("period", num(c.period_desing)),
            kv("period_physical", opt(c.period_physical)),
            kv("floquet_exponent", num(c.floquet_exponent)),
            kv("floquet_exponent_fast", num(c.floquet_exponent_desing)),
            kv("log_return_derivative", num(c.log_return_derivative)),
            kv("strokes", c.strokes.map(|s| s.to_string()).unwrap_or_default()),
            kv("x_min", num(c.amplitude.x_min)),
            kv("x_max", num(c.amplitude.x_max)),
            kv("y_min", num(c.amplitude.y_min)),
            kv("y_max", num(c.amplitude.y_max)),
            kv("residual", num(c.residual)),
            kv("iterations", c.iterations.to_string()),
        ];
        out.csv("limit_cycle_summary.csv", &["key", "value"], &summary)?;
        if let Ok(sc) = build_singular_cycle(&model) {
            plot = plot.dashed(sc.polyline(1000), GREY, Some("singular cycle"));
        }
        plot = plot.line(c.samples.clone(), BLUE, Some("limit cycle"));
        ctx.say(format!(
            "limit cycle: period {:.6e}, floquet exponent {:.6e}, strokes {}",
            c.period_desing,
            c.floquet_exponent,
            c.strokes.map_or("-".to_string(), |s| s.to_string())
        ));
        cycle_info = Some((c.fixed_point, c.period_desing));
    }

    let z0 = sim
        .as_ref()
        .and_then(|s| s.z0)
        .or(cycle_info.map(|c| c.0))
        .ok_or_else(|| config_err("simulate.z0 is required when limit_cycle = false"))?;
    let t_end = sim
        .as_ref()
        .and_then(|s| s.t_end)
        .or(cycle_info.map(|c| c.1))
        .ok_or_else(|| config_err("simulate.t_end is required when limit_cycle = false"))?;
    let traj = integrate(&model, z0, eps, (0.0, t_end), ctx.ode_tol())?;
    let stride = traj.len().div_ceil(MAX_TRAJECTORY_ROWS).max(1);
    let mut rows = Vec::new();
    let mut pts = Vec::new();
    let (mut tx, mut ty) = (Vec::new(), Vec::new());
    for (i, (t, z)) in traj.times.iter().zip(&traj.states).enumerate() {
        if i % stride == 0 || i + 1 == traj.len() {
            rows.push(vec![num(*t), num(z[0]), num(z[1])]);
            pts.push(*z);
            tx.push([*t, z[0]]);
            ty.push([*t, z[1]]);
        }
    }
    out.csv("trajectory.csv", &["t", "x", "y"], &rows)?;
    plot = plot.line(pts, ORANGE, Some("trajectory"));
    out.svg("phase.svg", &plot)?;
    let trace = Plot::new(format!("{}: time trace", model.name), "t", "x, y")
        .line(tx, BLUE, Some("x"))
        .line(ty, RED, Some("y"));
    out.svg("time_trace.svg", &trace)?;
    ctx.finish(out);
    Ok(())
}

fn fit_row(name: &str, fit: Option<LogLogFit>, expected: f64) -> Vec<String> {
    vec![
        name.to_string(),
        opt(fit.map(|f| f.slope)),
        opt(fit.map(|f| f.half_width_95)),
        num(expected),
    ]
}

pub fn scale(ctx: &Ctx) -> Result<()> {
    let model = ctx.model()?;
    let eps = ctx.eps_values()?;
    let rho = ctx.config.scale.as_ref().and_then(|s| s.rho).unwrap_or(DEFAULT_RHO);
    let report = epsilon_scaling_report(&model, &eps, rho).map_err(|e| match e {
        gspt_core::error::GsptError::Precondition(m) => config_err(m),
        other => other.into(),
    })?;
    let mut out = ctx.output()?;
    let rows: Vec<Vec<String>> = report
        .eps_values
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let notes: Vec<&str> = report
                .failures
                .iter()
                .filter(|(fe, _)| fe == e)
                .map(|(_, m)| m.as_str())
                .collect();
            vec![
                num(*e),
                opt(report.offsets[i]),
                opt(report.floquet[i]),
                opt(report.hausdorff[i]),
                opt(report.slow_dist[i]),
                notes.join("; "),
            ]
        })
        .collect();
    out.csv(
        "scaling.csv",
        &["eps", "offset", "floquet", "hausdorff", "slow_dist", "note"],
        &rows,
    )?;
    let fits = vec![
        fit_row("offset_vs_eps", report.offset_fit, 2.0 / 3.0),
        fit_row("neg_floquet_vs_inv_eps", report.floquet_fit, 1.0),
        fit_row("hausdorff_vs_eps", report.hausdorff_fit, f64::NAN),
        fit_row("slow_dist_vs_eps", report.slow_dist_fit, 1.0),
    ];
    out.csv("fits.csv", &["quantity", "slope", "half_width_95", "expected"], &fits)?;

    let series = |v: &[Option<f64>]| -> Vec<[f64; 2]> {
        report
            .eps_values
            .iter()
            .zip(v)
            .filter_map(|(e, y)| y.map(|y| [*e, y]))
            .collect()
    };
    let mut plot = Plot::new(format!("{}: eps scaling (rho = {rho})", model.name), "eps", "distance");
    plot.log_x = true;
    plot.log_y = true;
    let offsets = series(&report.offsets);
    let hausdorff = series(&report.hausdorff);
    let slow = series(&report.slow_dist);
    plot = plot
        .line(offsets.clone(), BLUE, Some("exit offset"))
        .markers(offsets, BLUE, None)
        .line(hausdorff.clone(), ORANGE, Some("Hausdorff"))
        .markers(hausdorff, ORANGE, None)
        .line(slow.clone(), GREEN, Some("slow distance"))
        .markers(slow, GREEN, None);
    out.svg("loglog.svg", &plot)?;

    if let Some(f) = report.offset_fit {
        ctx.say(format!("offset slope {:.4} +- {:.4}", f.slope, f.half_width_95));
    }
    for (e, m) in &report.failures {
        ctx.say(format!("eps {e:e}: {m}"));
    }
    ctx.finish(out);
    Ok(())
}

fn regime_colour(r: Option<Regime>) -> &'static str {
    match r {
        Some(Regime::StickSlip) => "#d7191c",
        Some(Regime::PureSlip) => "#fdae61",
        Some(Regime::SteadySliding) => "#2c7bb6",
        None => "#cccccc",
    }
}

pub fn regimes(ctx: &Ctx) -> Result<()> {
    let rc = ctx
        .config
        .regimes
        .clone()
        .ok_or_else(|| config_err("missing [regimes] block"))?;
    let eps = ctx.eps()?;
    let sweep = FrictionSweep {
        delta: rc.delta,
        mu_s: rc.mu_s,
        a1: rc.a1,
        a3: rc.a3,
        eps,
    };
    let map = stickslip_regime_sweep(&sweep, &rc.v0.values())?;
    let mut out = ctx.output()?;
    let rows: Vec<Vec<String>> = map
        .cells
        .iter()
        .map(|c| {
            vec![
                num(c.v0),
                c.regime.map(|r| r.label().to_string()).unwrap_or_default(),
                num(c.trace),
                opt(c.dwell_fraction),
                c.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    out.csv("regimes.csv", &["v0", "regime", "trace", "dwell_fraction", "note"], &rows)?;
    let reference = (4.0f64 / 5.0).sqrt() * map.v_m_analytic;
    let thresholds = vec![vec![
        num(map.v_m_analytic),
        opt(map.v_m_empirical),
        opt(map.v_ss_bracket.map(|b| b.0)),
        opt(map.v_ss_bracket.map(|b| b.1)),
        num(reference),
    ]];
    out.csv(
        "thresholds.csv",
        &["v_m_analytic", "v_m_empirical", "v_ss_low", "v_ss_high", "v_ss_small_gap_reference"],
        &thresholds,
    )?;

    let v: Vec<f64> = map.cells.iter().map(|c| c.v0).collect();
    let mut plot = Plot::new("friction regimes", "v0", "");
    for (i, c) in map.cells.iter().enumerate() {
        let lo = if i == 0 { v[0] - 0.5 * (v.get(1).unwrap_or(&v[0]) - v[0]) } else { 0.5 * (v[i - 1] + v[i]) };
        let hi = if i + 1 == v.len() { v[i] + 0.5 * (v[i] - v[i.saturating_sub(1)]) } else { 0.5 * (v[i] + v[i + 1]) };
        let hi = if hi > lo { hi } else { lo + 0.01 };
        let label = match c.regime {
            Some(Regime::StickSlip) => "S",
            Some(Regime::PureSlip) => "P",
            Some(Regime::SteadySliding) => "E",
            None => "?",
        };
        plot.layers.push(Layer::Cell {
            lo: [lo, 0.0],
            hi: [hi, 1.0],
            fill: regime_colour(c.regime).to_string(),
            text: label.to_string(),
        });
    }
    plot = plot.dashed(vec![[map.v_m_analytic, 0.0], [map.v_m_analytic, 1.0]], GREY, Some("v_m"));
    out.svg("regimes.svg", &plot)?;

    ctx.say(format!(
        "v_m = {:.4} (analytic), {} (detected); v_ss in {}; small-gap reference {:.4}",
        map.v_m_analytic,
        map.v_m_empirical.map_or("-".into(), |v| format!("{v:.4}")),
        map.v_ss_bracket.map_or("-".into(), |b| format!("[{:.4}, {:.4}]", b.0, b.1)),
        reference
    ));
    for h in &map.hints {
        ctx.say(h);
    }
    ctx.finish(out);
    Ok(())
}

pub fn strokes(ctx: &Ctx) -> Result<()> {
    let sc = ctx
        .config
        .strokes
        .clone()
        .ok_or_else(|| config_err("missing [strokes] block"))?;
    let mut base: BTreeMap<String, f64> = ModelKind::Transition
        .default_params()
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    base.remove("delta");
    for (k, v) in &sc.params {
        if k == "delta" || !base.contains_key(k) {
            return Err(config_err(format!("strokes.params: unknown or grid parameter `{k}`")));
        }
        base.insert(k.clone(), *v);
    }
    let eps = sc.eps.values();
    let delta = sc.delta.values();
    let diagram = stroke_phase_diagram(&eps, &delta, &base)?;
    let mut out = ctx.output()?;
    let rows: Vec<Vec<String>> = diagram
        .cells
        .iter()
        .map(|c| {
            vec![
                num(c.eps),
                num(c.delta),
                c.strokes.map(|s| s.to_string()).unwrap_or_default(),
                c.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    out.csv("phase_diagram.csv", &["eps", "delta", "strokes", "note"], &rows)?;

    let mut plot = Plot::new("stroke count", "eps", "delta");
    plot.log_x = true;
    plot.log_y = true;
    let edges = |v: &[f64], i: usize| -> (f64, f64) {
        let r = if v.len() > 1 { (v[v.len() - 1] / v[0]).powf(0.5 / (v.len() - 1) as f64) } else { 2.0 };
        let r = if r > 1.0 { r } else { 2.0 };
        (v[i] / r, v[i] * r)
    };
    let mut sorted_e = eps.clone();
    sorted_e.sort_by(f64::total_cmp);
    let mut sorted_d = delta.clone();
    sorted_d.sort_by(f64::total_cmp);
    for c in &diagram.cells {
        let ie = sorted_e.iter().position(|e| *e == c.eps).unwrap_or(0);
        let id = sorted_d.iter().position(|d| *d == c.delta).unwrap_or(0);
        let (e0, e1) = edges(&sorted_e, ie);
        let (d0, d1) = edges(&sorted_d, id);
        let (fill, text) = match c.strokes {
            Some(2) => ("#abd9e9", "2".to_string()),
            Some(4) => ("#fdae61", "4".to_string()),
            Some(n) => ("#ffffbf", n.to_string()),
            None => ("#cccccc", "-".to_string()),
        };
        plot.layers.push(Layer::Cell {
            lo: [e0, d0],
            hi: [e1, d1],
            fill: fill.to_string(),
            text,
        });
    }
    out.svg("phase_diagram.svg", &plot)?;
    for c in &diagram.cells {
        ctx.say(format!(
            "eps {:e}, delta {:e}: {}",
            c.eps,
            c.delta,
            c.strokes.map_or_else(|| c.note.clone().unwrap_or_default(), |s| format!("{s} strokes"))
        ));
    }
    ctx.finish(out);
    Ok(())
}

pub fn riccati(ctx: &Ctx) -> Result<()> {
    let rc = ctx.config.riccati.clone();
    let pick = |f: fn(&crate::config::RiccatiConfig) -> Option<f64>| rc.as_ref().and_then(f);
    let (a0, b1, d0) = match (pick(|r| r.a0), pick(|r| r.b1), pick(|r| r.d0)) {
        (Some(a), Some(b), Some(d)) => (a, b, d),
        (None, None, None) => {
            let model = ctx.model()?;
            let sc = singular_cycle(ctx, &model)?;
            let c = expansion_coeffs(&model, sc.contact.location)?;
            (c.a0, c.b1, c.d0)
        }
        _ => return Err(config_err("riccati: give all of a0, b1, d0 or none")),
    };
    let x_max = pick(|r| r.x_max).unwrap_or(40.0);
    let points = rc.as_ref().and_then(|r| r.points).unwrap_or(401);
    let prob = RiccatiProblem::new(a0, b1, d0, x_max).map_err(|e| config_err(e.to_string()))?;
    let sol = solve_special(&prob)?;
    let omega0 = omega0_constant()?;
    let right = right_tail(&sol)?;
    let left = left_tail(&sol)?;
    let mut out = ctx.output()?;
    let mut rows = Vec::with_capacity(points);
    let mut pts = Vec::with_capacity(points);
    for i in 0..points {
        let x = -x_max + 2.0 * x_max * i as f64 / (points - 1) as f64;
        let z = sol.eval(x)?;
        rows.push(vec![num(x), num(z)]);
        pts.push([x, z]);
    }
    out.csv("zeta.csv", &["x", "zeta"], &rows)?;
    let predicted = prob.exit_scale() * omega0;
    let kv = |k: &str, v: f64| vec![k.to_string(), num(v)];
    let summary = vec![
        kv("a0", a0),
        kv("b1", b1),
        kv("d0", d0),
        kv("omega0", omega0),
        kv("right_constant_fitted", right.constant),
        kv("right_constant_predicted", predicted),
        kv("left_decay_exponent", left.exponent),
    ];
    out.csv("riccati_summary.csv", &["key", "value"], &summary)?;
    let view = 4.0 * (d0 / b1).cbrt();
    let near: Vec<[f64; 2]> = pts.iter().copied().filter(|p| p[0].abs() <= view).collect();
    let right_asym: Vec<[f64; 2]> = near
        .iter()
        .filter(|p| p[0] > 0.5)
        .map(|p| [p[0], prob.right_asymptote(p[0]) + predicted])
        .collect();
    let left_asym: Vec<[f64; 2]> = near
        .iter()
        .filter(|p| p[0] < -0.5)
        .map(|p| [p[0], prob.left_asymptote(p[0])])
        .collect();
    let plot = Plot::new(format!("special solution (a0, b1, d0) = ({a0}, {b1}, {d0})"), "x", "zeta")
        .line(near, BLUE, Some("zeta"))
        .dashed(right_asym, GREY, Some("asymptotes"))
        .dashed(left_asym, GREY, None);
    out.svg("zeta.svg", &plot)?;
    ctx.say(format!(
        "Omega_0 = {omega0:.12}; right constant {:.8} (predicted {predicted:.8}); left decay exponent {:.3}",
        right.constant, left.exponent
    ));
    ctx.finish(out);
    Ok(())
}

pub fn list_models(ctx: &Ctx) -> Result<()> {
    let rows: Vec<Vec<String>> = ModelKind::ALL
        .iter()
        .map(|k| {
            let params: Vec<String> = k
                .default_params()
                .iter()
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            vec![
                k.name().to_string(),
                params.join(";"),
                k.has_time_factor().to_string(),
                k.description().to_string(),
            ]
        })
        .collect();
    if !ctx.quiet {
        println!("{:<16} {:<48} description", "name", "parameters (defaults)");
        for r in &rows {
            println!("{:<16} {:<48} {}", r[0], r[1], r[3]);
        }
    }
    let mut out = ctx.output()?;
    out.csv("models.csv", &["name", "params", "time_factor", "description"], &rows)?;
    ctx.finish(out);
    Ok(())
}

/// Maps the top-level error to an exit code: 2 for configuration problems,
/// 3 for failed computations.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use gspt_core::error::GsptError;
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<GsptError>() {
        Some(GsptError::UnknownModel(_)) | Some(GsptError::InvalidParameter { .. }) => 2,
        _ => 3,
    }
}
