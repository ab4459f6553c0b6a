//! Singular-limit (eps = 0) geometry: critical curve, contact points,
//! N-singularities, projection, reduced and desingularised flows, and the
//! rectified coordinates near a contact point.

use std::cell::Cell;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GsptError, Result};
use crate::model::{dot, norm, Mat2, ModelSpec, Vec2, Window};

/// Residual to which points of the critical curve are refined.
pub const ROOT_TOL: f64 = 1e-10;
/// Threshold below which the nontrivial eigenvalue counts as zero.
pub const LAMBDA_ZERO: f64 = 1e-9;
/// Threshold above which a contact-order derivative counts as nonzero.
pub const DERIVATIVE_NONZERO: f64 = 1e-5;
/// Largest contact order that can be resolved.
pub const MAX_CONTACT_ORDER: u32 = 3;

/// `<grad f, N>` at a point of the critical curve.
pub fn nontrivial_eigenvalue(model: &ModelSpec, z: Vec2) -> Result<f64> {
    let f = model.f(z);
    if !(f.abs() < 1e-8) {
        return Err(GsptError::precondition(format!(
            "point {z:?} is not on the critical curve (f = {f:e})"
        )));
    }
    Ok(model.lambda(z))
}

/// Newton projection onto `{f = 0}` along the gradient.
pub fn project_to_curve(model: &ModelSpec, z: Vec2) -> Result<Vec2> {
    let mut p = z;
    for _ in 0..60 {
        let f = model.f(p);
        if f.abs() < ROOT_TOL * 1e-2 {
            return Ok(p);
        }
        let g = model.grad_f(p);
        let gg = dot(g, g);
        if !(gg > 1e-300) || !f.is_finite() {
            break;
        }
        let step = [f * g[0] / gg, f * g[1] / gg];
        p = [p[0] - step[0], p[1] - step[1]];
        if norm(step) < 1e-16 * (1.0 + norm(p)) && f.abs() < ROOT_TOL {
            return Ok(p);
        }
    }
    if model.f(p).abs() < ROOT_TOL {
        Ok(p)
    } else {
        Err(GsptError::NewtonFailure(format!(
            "projection onto the critical curve from {z:?} failed"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attracting,
    Repelling,
}

impl Stability {
    pub fn of(lambda: f64) -> Self {
        if lambda < 0.0 {
            Stability::Attracting
        } else {
            Stability::Repelling
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub point: Vec2,
    pub lambda: f64,
}

/// One normally hyperbolic piece of the critical curve. Endpoints may be
/// contact points, where `lambda` vanishes.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub samples: Vec<CurveSample>,
    pub stability: Stability,
    /// Index of the arc this branch was cut from.
    pub arc: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CriticalCurve {
    /// Connected components of `{f = 0}` inside the window.
    pub arcs: Vec<Vec<CurveSample>>,
    pub branches: Vec<Branch>,
    /// Points where a stability switch was located (branch boundaries).
    pub switch_points: Vec<Vec2>,
}

impl CriticalCurve {
    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}

/// Marching-squares tracing of `{f = 0}` on a `resolution x resolution` grid,
/// with bisection on cell edges and branch splitting at sign changes of
/// `lambda`.
pub fn trace_critical_curve(
    model: &ModelSpec,
    window: Window,
    resolution: usize,
) -> Result<CriticalCurve> {
    if !window.is_valid() {
        return Err(GsptError::precondition(format!("invalid window {window:?}")));
    }
    if resolution < 16 {
        return Err(GsptError::precondition(format!(
            "resolution must be at least 16, got {resolution}"
        )));
    }
    let n = resolution;
    let xs: Vec<f64> = (0..=n)
        .map(|i| window.x_min + window.width() * i as f64 / n as f64)
        .collect();
    let ys: Vec<f64> = (0..=n)
        .map(|j| window.y_min + window.height() * j as f64 / n as f64)
        .collect();
    let values: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| ys.iter().map(|&y| model.f([x, y])).collect())
        .collect();
    let positive = |i: usize, j: usize| values[i][j] >= 0.0;

    // Edge keys: (i, j, dir) with dir 0 = horizontal (i,j)-(i+1,j), 1 = vertical (i,j)-(i,j+1).
    type EdgeKey = (usize, usize, u8);
    let mut roots: HashMap<EdgeKey, Vec2> = HashMap::new();
    let mut edge_root = |key: EdgeKey| -> Result<Option<Vec2>> {
        if let Some(r) = roots.get(&key) {
            return Ok(Some(*r));
        }
        let (i, j, d) = key;
        let (a, b) = if d == 0 {
            ([xs[i], ys[j]], [xs[i + 1], ys[j]])
        } else {
            ([xs[i], ys[j]], [xs[i], ys[j + 1]])
        };
        let (fa, fb) = if d == 0 {
            (values[i][j], values[i + 1][j])
        } else {
            (values[i][j], values[i][j + 1])
        };
        if !fa.is_finite() || !fb.is_finite() || (fa >= 0.0) == (fb >= 0.0) {
            return Ok(None);
        }
        let r = bisect_segment(model, a, b, fa)?;
        roots.insert(key, r);
        Ok(Some(r))
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let corners = [
                positive(i, j),
                positive(i + 1, j),
                positive(i + 1, j + 1),
                positive(i, j + 1),
            ];
            if corners.iter().all(|c| *c) || corners.iter().all(|c| !*c) {
                continue;
            }
            // bottom, right, top, left
            let edges: [EdgeKey; 4] = [(i, j, 0), (i + 1, j, 1), (i, j + 1, 0), (i, j, 1)];
            let mut crossing = Vec::with_capacity(4);
            for e in edges {
                if edge_root(e)?.is_some() {
                    crossing.push(e);
                }
            }
            match crossing.len() {
                2 => segments.push((crossing[0], crossing[1])),
                4 => {
                    let centre = model.f([
                        0.5 * (xs[i] + xs[i + 1]),
                        0.5 * (ys[j] + ys[j + 1]),
                    ]);
                    // connect around the corner whose sign differs from the centre
                    if (centre >= 0.0) == corners[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[0], edges[3]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let polylines = chain_segments(&segments);
    let mut arcs = Vec::new();
    for poly in polylines {
        let mut arc: Vec<CurveSample> = Vec::with_capacity(poly.len());
        for key in poly {
            let p = roots[&key];
            if let Some(last) = arc.last() {
                if norm([p[0] - last.point[0], p[1] - last.point[1]]) < 1e-13 {
                    continue;
                }
            }
            let g = model.grad_f(p);
            if norm(g) < 1e-10 {
                return Err(GsptError::precondition(format!(
                    "gradient of f vanishes at {p:?}: critical curve is not regularly embedded"
                )));
            }
            arc.push(CurveSample {
                point: p,
                lambda: model.lambda(p),
            });
        }
        if arc.len() >= 2 {
            orient_arc(&mut arc);
            arcs.push(arc);
        }
    }
    arcs.sort_by(|a, b| {
        let (pa, pb) = (a[0].point, b[0].point);
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });

    let mut branches = Vec::new();
    let mut switch_points = Vec::new();
    for (ai, arc) in arcs.iter_mut().enumerate() {
        let mut with_switches: Vec<CurveSample> = Vec::with_capacity(arc.len() + 4);
        let mut cut_at: Vec<usize> = Vec::new();
        for k in 0..arc.len() {
            if k > 0 {
                let (a, b) = (arc[k - 1], arc[k]);
                if a.lambda != 0.0 && b.lambda != 0.0 && (a.lambda < 0.0) != (b.lambda < 0.0) {
                    let p = bisect_lambda(model, a.point, b.point)?;
                    with_switches.push(CurveSample {
                        point: p,
                        lambda: model.lambda(p),
                    });
                    cut_at.push(with_switches.len() - 1);
                    switch_points.push(p);
                }
            }
            with_switches.push(arc[k]);
        }
        *arc = with_switches;
        let mut start = 0;
        let mut bounds = cut_at.clone();
        bounds.push(arc.len() - 1);
        for end in bounds {
            let piece: Vec<CurveSample> = arc[start..=end].to_vec();
            if piece.len() >= 2 {
                let sign = piece
                    .iter()
                    .map(|s| s.lambda)
                    .find(|l| l.abs() > LAMBDA_ZERO)
                    .unwrap_or(0.0);
                branches.push(Branch {
                    samples: piece,
                    stability: Stability::of(sign),
                    arc: ai,
                });
            }
            start = end;
        }
    }

    Ok(CriticalCurve {
        arcs,
        branches,
        switch_points,
    })
}

fn chain_segments<K: Copy + Eq + std::hash::Hash>(segments: &[(K, K)]) -> Vec<Vec<K>> {
    let mut adj: HashMap<K, Vec<usize>> = HashMap::new();
    for (si, (a, b)) in segments.iter().enumerate() {
        adj.entry(*a).or_default().push(si);
        adj.entry(*b).or_default().push(si);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start_seg: usize, from: K, used: &mut Vec<bool>| -> Vec<K> {
        let mut path = vec![from];
        let mut seg = start_seg;
        let mut at = from;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            path.push(next);
            at = next;
            match adj[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        path
    };
    // open chains first (start at endpoints of degree one), then closed loops
    let mut starts: Vec<(usize, K)> = Vec::new();
    for (si, (a, b)) in segments.iter().enumerate() {
        if adj[a].len() == 1 {
            starts.push((si, *a));
        }
        if adj[b].len() == 1 {
            starts.push((si, *b));
        }
    }
    for (si, k) in starts {
        if !used[si] {
            out.push(walk(si, k, &mut used));
        }
    }
    for si in 0..segments.len() {
        if !used[si] {
            out.push(walk(si, segments[si].0, &mut used));
        }
    }
    out
}

/// Orders an arc so it runs with increasing x (or increasing y for
/// vertical arcs). Closed arcs are left as traced.
fn orient_arc(arc: &mut [CurveSample]) {
    let (a, b) = (arc[0].point, arc[arc.len() - 1].point);
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let flip = if dx.abs() >= dy.abs() { dx < 0.0 } else { dy < 0.0 };
    if flip {
        arc.reverse();
    }
}

fn bisect_segment(model: &ModelSpec, a: Vec2, b: Vec2, fa: f64) -> Result<Vec2> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let at = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
    let neg_lo = fa < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = model.f(at(mid));
        if fm.abs() < ROOT_TOL * 1e-3 || hi - lo < 1e-17 {
            return Ok(at(mid));
        }
        if (fm < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = at(0.5 * (lo + hi));
    if model.f(p).abs() < ROOT_TOL {
        Ok(p)
    } else {
        project_to_curve(model, p)
    }
}

/// Bisection for the zero of `lambda` along the curve between two curve
/// points with opposite `lambda` signs.
fn bisect_lambda(model: &ModelSpec, a: Vec2, b: Vec2) -> Result<Vec2> {
    let at = |s: f64| -> Result<Vec2> {
        project_to_curve(model, [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
    };
    let la = model.lambda(a);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = at(0.5)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = at(mid)?;
        let l = model.lambda(p);
        best = p;
        if l.abs() < LAMBDA_ZERO * 1e-3 || hi - lo < 1e-16 {
            break;
        }
        if (l < 0.0) == (la < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpClass {
    JumpOff,
    JumpOn,
    None,
}

impl JumpClass {
    pub fn label(self) -> &'static str {
        match self {
            JumpClass::JumpOff => "off",
            JumpClass::JumpOn => "on",
            JumpClass::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactPoint {
    pub location: Vec2,
    pub order: u32,
    pub regular: bool,
    pub jump_class: JumpClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContactClass {
    pub regular: bool,
    pub jump_class: JumpClass,
}

/// Locates and classifies the contact points along every arc of `curve`.
pub fn find_contact_points(model: &ModelSpec, curve: &CriticalCurve) -> Result<Vec<ContactPoint>> {
    if curve.is_empty() {
        return Err(GsptError::precondition("critical curve is empty"));
    }
    let mut found: Vec<(Vec2, bool)> = Vec::new();
    for arc in &curve.arcs {
        for k in 1..arc.len() {
            let (a, b) = (arc[k - 1], arc[k]);
            if a.lambda.abs() <= LAMBDA_ZERO {
                found.push((a.point, true));
            } else if b.lambda.abs() > LAMBDA_ZERO && (a.lambda < 0.0) != (b.lambda < 0.0) {
                found.push((bisect_lambda(model, a.point, b.point)?, true));
            }
        }
        if let Some(last) = arc.last() {
            if last.lambda.abs() <= LAMBDA_ZERO {
                found.push((last.point, true));
            }
        }
        // tangential zeros: interior local minima of |lambda| without a sign change
        for k in 1..arc.len().saturating_sub(1) {
            let (a, b, c) = (arc[k - 1].lambda, arc[k].lambda, arc[k + 1].lambda);
            let same_sign = (a < 0.0) == (b < 0.0) && (b < 0.0) == (c < 0.0);
            if same_sign && b.abs() < a.abs() && b.abs() <= c.abs() && b.abs() > LAMBDA_ZERO {
                if let Some(p) = minimise_abs_lambda(model, arc[k - 1].point, arc[k + 1].point)? {
                    found.push((p, false));
                }
            }
        }
    }
    // deduplicate
    let mut unique: Vec<(Vec2, bool)> = Vec::new();
    for (p, sign_change) in found {
        if !unique
            .iter()
            .any(|(q, _)| norm([p[0] - q[0], p[1] - q[1]]) < 1e-7 * (1.0 + norm(p)))
        {
            unique.push((p, sign_change));
        }
    }
    let mut out = Vec::with_capacity(unique.len());
    for (p, sign_change) in unique {
        let order = contact_order(model, p)?;
        let class = if sign_change {
            classify_contact(model, p, order)?
        } else {
            ContactClass {
                regular: regularity(model, p)?,
                jump_class: JumpClass::None,
            }
        };
        out.push(ContactPoint {
            location: p,
            order,
            regular: class.regular,
            jump_class: class.jump_class,
        });
    }
    out.sort_by(|a, b| {
        a.location[0]
            .total_cmp(&b.location[0])
            .then(a.location[1].total_cmp(&b.location[1]))
    });
    Ok(out)
}

fn minimise_abs_lambda(model: &ModelSpec, a: Vec2, b: Vec2) -> Result<Option<Vec2>> {
    let at = |s: f64| -> Result<Vec2> {
        project_to_curve(model, [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..120 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if model.lambda(at(m1)?).abs() < model.lambda(at(m2)?).abs() {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let p = at(0.5 * (lo + hi))?;
    Ok((model.lambda(p).abs() <= LAMBDA_ZERO).then_some(p))
}

/// Local parameterisation of the critical curve as a graph over one
/// coordinate, obtained by Newton continuation from a base point.
struct CurveGraph<'a> {
    model: &'a ModelSpec,
    /// Index of the independent coordinate (0: graph over x, 1: over y).
    indep: usize,
    base: Vec2,
}

impl<'a> CurveGraph<'a> {
    fn new(model: &'a ModelSpec, base: Vec2) -> Self {
        let g = model.grad_f(base);
        // graph over x needs D_y f != 0
        let indep = if g[1].abs() >= g[0].abs() { 0 } else { 1 };
        Self { model, indep, base }
    }

    /// Point of the curve whose independent coordinate is `base + s`.
    fn point(&self, s: f64) -> Result<Vec2> {
        let dep = 1 - self.indep;
        let mut p = self.base;
        p[self.indep] += s;
        // continuation: a few sub-steps keep Newton in its basin
        let substeps = 4;
        let mut q = self.base;
        for k in 1..=substeps {
            q[self.indep] = self.base[self.indep] + s * k as f64 / substeps as f64;
            let mut converged = false;
            for _ in 0..50 {
                let f = self.model.f(q);
                let d = self.model.grad_f(q)[dep];
                if !(d.abs() > 1e-14) || !f.is_finite() {
                    break;
                }
                let step = f / d;
                q[dep] -= step;
                if step.abs() <= 1e-15 * (1.0 + q[dep].abs()) {
                    converged = true;
                    break;
                }
            }
            if !converged && self.model.f(q).abs() > ROOT_TOL {
                return Err(GsptError::NewtonFailure(format!(
                    "graph continuation of the critical curve failed near {q:?}"
                )));
            }
        }
        p[dep] = q[dep];
        Ok(p)
    }

    fn lambda(&self, s: f64) -> Result<f64> {
        Ok(self.model.lambda(self.point(s)?))
    }

    /// Unit tangent pointing in the direction of increasing parameter.
    fn tangent(&self) -> Vec2 {
        let g = self.model.grad_f(self.base);
        let t = [g[1], -g[0]];
        let n = norm(t);
        let t = [t[0] / n, t[1] / n];
        if t[self.indep] < 0.0 {
            [-t[0], -t[1]]
        } else {
            t
        }
    }
}

/// `n`-th derivative of `g` at 0 by central differences with two levels of
/// Richardson extrapolation.
fn richardson_derivative(g: &dyn Fn(f64) -> Result<f64>, n: u32, h: f64) -> Result<f64> {
    let central = |h: f64| -> Result<f64> {
        match n {
            1 => Ok((g(h)? - g(-h)?) / (2.0 * h)),
            2 => Ok((g(h)? - 2.0 * g(0.0)? + g(-h)?) / (h * h)),
            3 => Ok((g(2.0 * h)? - 2.0 * g(h)? + 2.0 * g(-h)? - g(-2.0 * h)?) / (2.0 * h * h * h)),
            _ => Err(GsptError::UnsupportedOrder),
        }
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    let d3 = central(0.25 * h)?;
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

fn contact_step(base: Vec2, indep: usize) -> f64 {
    2e-2 * base[indep].abs().max(1.0)
}

/// Contact order at a point where `lambda` vanishes: the smallest `n <= 3`
/// with a nonzero `n`-th derivative of `lambda` along the curve.
pub fn contact_order(model: &ModelSpec, f_point: Vec2) -> Result<u32> {
    let lam = model.lambda(f_point);
    if !(lam.abs() < 1e-6) {
        return Err(GsptError::precondition(format!(
            "lambda = {lam:e} at {f_point:?} is not zero"
        )));
    }
    let graph = CurveGraph::new(model, f_point);
    let h = contact_step(f_point, graph.indep);
    let g = |s: f64| graph.lambda(s);
    for n in 1..=MAX_CONTACT_ORDER {
        let d = richardson_derivative(&g, n, h)?;
        if d.abs() > DERIVATIVE_NONZERO {
            return Ok(n);
        }
    }
    Err(GsptError::UnsupportedOrder)
}

/// Derivative of `lambda` along the curve at a contact point, in the
/// direction of the graph parameter, together with that unit direction.
fn lambda_slope(model: &ModelSpec, f_point: Vec2) -> Result<(f64, Vec2)> {
    let graph = CurveGraph::new(model, f_point);
    let h = contact_step(f_point, graph.indep);
    let d = richardson_derivative(&|s| graph.lambda(s), 1, h)?;
    Ok((d, graph.tangent()))
}

fn regularity(model: &ModelSpec, p: Vec2) -> Result<bool> {
    let det = model.det_ng(p, 0.0);
    let flux = dot(model.grad_f(p), model.g(p, 0.0));
    let (by_det, by_flux) = (det.abs() > LAMBDA_ZERO, flux.abs() > LAMBDA_ZERO);
    if by_det != by_flux {
        return Err(GsptError::Consistency(format!(
            "regularity tests disagree at {p:?}: det(N|G) = {det:e}, <grad f, G> = {flux:e}"
        )));
    }
    Ok(by_det)
}

/// Regularity and jump class of a contact point. Only order-one points get
/// a jump class; others are reported as `JumpClass::None`.
pub fn classify_contact(model: &ModelSpec, f_point: Vec2, order: u32) -> Result<ContactClass> {
    let regular = regularity(model, f_point)?;
    if order != 1 || !regular {
        return Ok(ContactClass {
            regular,
            jump_class: JumpClass::None,
        });
    }
    let (slope, tangent) = lambda_slope(model, f_point)?;
    // direction along the curve into the attracting side (lambda < 0)
    let a_dir = if slope > 0.0 {
        [-tangent[0], -tangent[1]]
    } else {
        tangent
    };
    let desing = desingularised_rhs(model, f_point)?;
    let jump_class = if dot(desing, a_dir) < 0.0 {
        JumpClass::JumpOff
    } else {
        JumpClass::JumpOn
    };
    Ok(ContactClass {
        regular,
        jump_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityKind {
    UnstableFocus,
    UnstableNode,
    StableFocus,
    StableNode,
    Saddle,
    CenterDegenerate,
}

impl SingularityKind {
    pub fn classify(trace: f64, det: f64) -> Self {
        let tiny = 1e-12;
        if det < -tiny {
            return SingularityKind::Saddle;
        }
        if det.abs() <= tiny || trace.abs() <= tiny {
            return SingularityKind::CenterDegenerate;
        }
        let focus = trace * trace < 4.0 * det;
        match (trace > 0.0, focus) {
            (true, true) => SingularityKind::UnstableFocus,
            (true, false) => SingularityKind::UnstableNode,
            (false, true) => SingularityKind::StableFocus,
            (false, false) => SingularityKind::StableNode,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SingularityKind::UnstableFocus => "unstable_focus",
            SingularityKind::UnstableNode => "unstable_node",
            SingularityKind::StableFocus => "stable_focus",
            SingularityKind::StableNode => "stable_node",
            SingularityKind::Saddle => "saddle",
            SingularityKind::CenterDegenerate => "center_degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NSingularity {
    pub location: Vec2,
    pub trace: f64,
    pub det: f64,
    pub kind: SingularityKind,
}

/// Zeros of `N` inside `window`, classified by the layer Jacobian
/// `DN(p) f(p)`.
pub fn find_n_singularities(model: &ModelSpec, window: Window) -> Result<Vec<NSingularity>> {
    if !window.is_valid() {
        return Err(GsptError::precondition(format!("invalid window {window:?}")));
    }
    let seeds_per_axis = 16;
    let seeds: Vec<Vec2> = (0..seeds_per_axis)
        .flat_map(|i| {
            (0..seeds_per_axis).map(move |j| {
                [
                    window.x_min + window.width() * (i as f64 + 0.5) / seeds_per_axis as f64,
                    window.y_min + window.height() * (j as f64 + 0.5) / seeds_per_axis as f64,
                ]
            })
        })
        .collect();
    let roots: Vec<Vec2> = seeds
        .par_iter()
        .filter_map(|&s| newton_n(model, s))
        .filter(|p| window.contains(*p))
        .collect();
    let mut unique: Vec<Vec2> = Vec::new();
    for p in roots {
        if !unique
            .iter()
            .any(|q| norm([p[0] - q[0], p[1] - q[1]]) < 1e-6 * (1.0 + norm(p)))
        {
            unique.push(p);
        }
    }
    if unique.is_empty() {
        log::debug!("no zero of N found in {window:?}");
    }
    unique.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok(unique
        .into_iter()
        .map(|p| {
            let dn = model.dn(p);
            let f = model.f(p);
            let jac: Mat2 = [
                [dn[0][0] * f, dn[0][1] * f],
                [dn[1][0] * f, dn[1][1] * f],
            ];
            let trace = jac[0][0] + jac[1][1];
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            NSingularity {
                location: p,
                trace,
                det,
                kind: SingularityKind::classify(trace, det),
            }
        })
        .collect())
}

fn newton_n(model: &ModelSpec, seed: Vec2) -> Option<Vec2> {
    let mut p = seed;
    for _ in 0..60 {
        let n = model.n(p);
        if !n.iter().all(|v| v.is_finite()) {
            return None;
        }
        if norm(n) < 1e-13 {
            return Some(p);
        }
        let j = model.dn(p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 1e-300) {
            return None;
        }
        let dx = (j[1][1] * n[0] - j[0][1] * n[1]) / det;
        let dy = (-j[1][0] * n[0] + j[0][0] * n[1]) / det;
        p = [p[0] - dx, p[1] - dy];
        if !p.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    (norm(model.n(p)) < 1e-9).then_some(p)
}

fn require_hyperbolic(model: &ModelSpec, z: Vec2) -> Result<f64> {
    let f = model.f(z);
    if !(f.abs() < 1e-8) {
        return Err(GsptError::precondition(format!(
            "point {z:?} is not on the critical curve (f = {f:e})"
        )));
    }
    let lam = model.lambda(z);
    if !(lam.abs() > 1e-8) {
        return Err(GsptError::precondition(format!(
            "point {z:?} is not normally hyperbolic (lambda = {lam:e})"
        )));
    }
    Ok(lam)
}

/// Oblique projection `I - N grad f^T / <grad f, N>` onto the tangent line of
/// the critical curve along the fast fibre direction.
pub fn projection(model: &ModelSpec, z: Vec2) -> Result<Mat2> {
    let lam = require_hyperbolic(model, z)?;
    let n = model.n(z);
    let g = model.grad_f(z);
    Ok([
        [1.0 - n[0] * g[0] / lam, -n[0] * g[1] / lam],
        [-n[1] * g[0] / lam, 1.0 - n[1] * g[1] / lam],
    ])
}

/// Reduced vector field `det(N|G)/lambda * (-D_y f, D_x f)`.
pub fn reduced_rhs(model: &ModelSpec, z: Vec2) -> Result<Vec2> {
    let lam = require_hyperbolic(model, z)?;
    let g = model.grad_f(z);
    let c = model.det_ng(z, 0.0) / lam;
    Ok([-c * g[1], c * g[0]])
}

/// Reduced vector field as the projection `Pi G` (cross-check of
/// [`reduced_rhs`]).
pub fn reduced_rhs_projected(model: &ModelSpec, z: Vec2) -> Result<Vec2> {
    let p = projection(model, z)?;
    let g = model.g(z, 0.0);
    Ok([
        p[0][0] * g[0] + p[0][1] * g[1],
        p[1][0] * g[0] + p[1][1] * g[1],
    ])
}

/// Desingularised reduced field `det(N|G) * (D_y f, -D_x f)`, regular at
/// contact points.
pub fn desingularised_rhs(model: &ModelSpec, z: Vec2) -> Result<Vec2> {
    let f = model.f(z);
    if !(f.abs() < 1e-8) {
        return Err(GsptError::precondition(format!(
            "point {z:?} is not on the critical curve (f = {f:e})"
        )));
    }
    let g = model.grad_f(z);
    let d = model.det_ng(z, 0.0);
    Ok([d * g[1], -d * g[0]])
}

/// The system in coordinates `(s, u)` where `u = f(z)` and `s` is one of the
/// original coordinates; the other is recovered by Newton on `f = u`.
pub struct Rectified<'a> {
    model: &'a ModelSpec,
    /// Index of the original coordinate kept as `s`.
    pub kept: usize,
    last: Cell<f64>,
}

impl<'a> Rectified<'a> {
    /// Rectified coordinates near `z0`, keeping `x` when `D_y f(z0) != 0`
    /// and `y` otherwise.
    pub fn new(model: &'a ModelSpec, z0: Vec2) -> Result<Self> {
        let g = model.grad_f(z0);
        let kept = if g[1].abs() > 1e-12 {
            0
        } else if g[0].abs() > 1e-12 {
            1
        } else {
            return Err(GsptError::precondition(format!(
                "gradient of f vanishes at {z0:?}"
            )));
        };
        Ok(Self {
            model,
            kept,
            last: Cell::new(z0[1 - kept]),
        })
    }

    pub fn from_plane(&self, z: Vec2) -> Vec2 {
        [z[self.kept], self.model.f(z)]
    }

    /// Inverse map: the plane point with kept coordinate `s` and `f = u`.
    pub fn to_plane(&self, s: f64, u: f64) -> Result<Vec2> {
        let dep = 1 - self.kept;
        let mut z = [0.0; 2];
        z[self.kept] = s;
        z[dep] = self.last.get();
        for _ in 0..60 {
            let r = self.model.f(z) - u;
            let d = self.model.grad_f(z)[dep];
            if !r.is_finite() || !(d.abs() > 1e-14) {
                break;
            }
            let step = r / d;
            z[dep] -= step;
            if step.abs() <= 1e-15 * (1.0 + z[dep].abs()) {
                self.last.set(z[dep]);
                return Ok(z);
            }
        }
        if (self.model.f(z) - u).abs() < 1e-12 * (1.0 + u.abs()) {
            self.last.set(z[dep]);
            Ok(z)
        } else {
            Err(GsptError::Domain {
                field: "rectified inverse",
                x: z[0],
                y: z[1],
                detail: format!("Newton for f = {u} failed at kept coordinate {s}"),
            })
        }
    }

    /// Fibre part `(N_s, lambda)` so that `(s', u') = n_tilde * u + eps * g_tilde`.
    pub fn n_tilde(&self, s: f64, u: f64) -> Result<Vec2> {
        let z = self.to_plane(s, u)?;
        Ok([self.model.n(z)[self.kept], self.model.lambda(z)])
    }

    pub fn g_tilde(&self, s: f64, u: f64, eps: f64) -> Result<Vec2> {
        let z = self.to_plane(s, u)?;
        let g = self.model.g(z, eps);
        Ok([g[self.kept], dot(self.model.grad_f(z), g)])
    }

    /// Full rectified field `(s', u')`.
    pub fn field(&self, s: f64, u: f64, eps: f64) -> Result<Vec2> {
        let n = self.n_tilde(s, u)?;
        let g = self.g_tilde(s, u, eps)?;
        Ok([n[0] * u + eps * g[0], n[1] * u + eps * g[1]])
    }
}

/// Leading coefficients of the rectified system at a regular order-one
/// contact point: `a0 = N_s`, `b1 = d lambda / ds`, `d0 = <grad f, G>`,
/// `c0 = G_s`, all at the contact point with `eps = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionCoeffs {
    pub a0: f64,
    pub b1: f64,
    pub d0: f64,
    pub c0: f64,
}

pub fn expansion_coeffs(model: &ModelSpec, f_point: Vec2) -> Result<ExpansionCoeffs> {
    let order = contact_order(model, f_point)?;
    let class = classify_contact(model, f_point, order)?;
    if order != 1 || !class.regular {
        return Err(GsptError::precondition(format!(
            "expansion needs a regular order-one contact point (order {order}, regular {})",
            class.regular
        )));
    }
    let rect = Rectified::new(model, f_point)?;
    let s0 = f_point[rect.kept];
    let n0 = rect.n_tilde(s0, 0.0)?;
    let g0 = rect.g_tilde(s0, 0.0, 0.0)?;
    let h = contact_step(f_point, rect.kept);
    let b1 = richardson_derivative(&|s| Ok(rect.n_tilde(s0 + s, 0.0)?[1]), 1, h)?;
    let coeffs = ExpansionCoeffs {
        a0: n0[0],
        b1,
        d0: g0[1],
        c0: g0[0],
    };
    for (name, v) in [("a0", coeffs.a0), ("b1", coeffs.b1), ("d0", coeffs.d0)] {
        if !(v.abs() > 1e-8) {
            return Err(GsptError::Degenerate(format!("{name} = {v:e} vanishes")));
        }
    }
    Ok(coeffs)
}
