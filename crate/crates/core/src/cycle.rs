//! Singular relaxation cycles: a fast fibre of the layer problem from the
//! jump point to its reciprocal point, closed by a reduced-flow segment back
//! along the critical curve.

use serde::Serialize;

use crate::error::{GsptError, Result};
use crate::model::{default_window, dot, gradient_fd, norm, ModelSpec, Vec2, Window};
use crate::ode::{solve, Crossing, Event, Termination, Tolerance, Trajectory};
use crate::singular::{
    desingularised_rhs, find_contact_points, find_n_singularities, trace_critical_curve,
    ContactPoint, JumpClass, NSingularity,
};

/// Radius around the launch point inside which returns to the critical curve
/// are ignored.
pub const LAUNCH_EXCLUSION: f64 = 1e-3;
/// Distance to a zero of `N` at which the layer flow counts as stalled.
pub const STALL_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct LayerStop {
    pub window: Option<Window>,
    /// Cap on the reparametrised time.
    pub max_time: f64,
    /// Ignore returns to the critical curve inside this ball.
    pub exclude: Option<(Vec2, f64)>,
    /// +1 follows the layer flow forwards, -1 backwards.
    pub direction: f64,
    pub tol: f64,
}

impl Default for LayerStop {
    fn default() -> Self {
        Self {
            window: None,
            max_time: 1e3,
            exclude: None,
            direction: 1.0,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerEnd {
    ReachedCurve,
    LeftWindow,
    MaxTime,
}

/// A layer-flow orbit. The time variable is the reparametrisation in which
/// the orbit solves `z' = sign(f) N(z)`: the layer field divided by `|f|`,
/// which keeps the orbit but removes the slowdown near the critical curve.
#[derive(Debug, Clone)]
pub struct LayerRun {
    pub trajectory: Trajectory<2>,
    pub end: LayerEnd,
    /// Always true: times are in the reparametrised clock described above.
    pub reparametrised_time: bool,
}

impl LayerRun {
    pub fn end_point(&self) -> Vec2 {
        self.trajectory.last()
    }
}

/// Follows the layer orbit through `z0` until it returns to `{f = 0}`, leaves
/// the window, or hits the time cap.
pub fn layer_flow(model: &ModelSpec, z0: Vec2, stop: &LayerStop) -> Result<LayerRun> {
    let f0 = model.f(z0);
    if f0 == 0.0 {
        return Ok(LayerRun {
            trajectory: Trajectory::constant(z0, 0.0, 0.0),
            end: LayerEnd::ReachedCurve,
            reparametrised_time: true,
        });
    }
    layer_flow_signed(model, z0, f0.signum() * stop.direction, stop)
}

/// Layer orbit following `sign * N`; needed when launching from a point of
/// the critical curve where `f` itself gives no side.
fn layer_flow_signed(model: &ModelSpec, z0: Vec2, sign: f64, stop: &LayerStop) -> Result<LayerRun> {
    if norm(model.n(z0)) < 1e-8 {
        return Err(GsptError::precondition(format!(
            "start point {z0:?} is a zero of N"
        )));
    }
    let rhs = |_t: f64, z: &Vec2| {
        let n = model.n(*z);
        [sign * n[0], sign * n[1]]
    };
    let mut events = vec![Event::new(|_t, z: &Vec2| model.f(*z), Crossing::Either)];
    if let Some((c, r)) = stop.exclude {
        events[0] = Event::new(|_t, z: &Vec2| model.f(*z), Crossing::Either)
            .with_guard(move |_t, z: &Vec2| norm([z[0] - c[0], z[1] - c[1]]) > r);
    }
    events.push(Event::new(
        |_t, z: &Vec2| norm(model.n(*z)) - STALL_RADIUS * (1.0 + norm(*z)),
        Crossing::Falling,
    ));
    if let Some(w) = stop.window {
        events.push(Event::new(
            move |_t, z: &Vec2| {
                (z[0] - w.x_min)
                    .min(w.x_max - z[0])
                    .min(z[1] - w.y_min)
                    .min(w.y_max - z[1])
            },
            Crossing::Falling,
        ));
    }
    let tol = Tolerance::new(stop.tol).with_max_steps(2_000_000);
    let sol = solve(rhs, 0.0, z0, stop.max_time, &tol, &events, None)?;
    let end = match sol.termination {
        Termination::Event(0) => LayerEnd::ReachedCurve,
        Termination::Event(1) => {
            let z = sol.trajectory.last();
            return Err(GsptError::Stalled { x: z[0], y: z[1] });
        }
        Termination::Event(_) => LayerEnd::LeftWindow,
        Termination::Completed => LayerEnd::MaxTime,
    };
    Ok(LayerRun {
        trajectory: sol.trajectory,
        end,
        reparametrised_time: true,
    })
}

#[derive(Debug, Clone)]
pub struct Reciprocal {
    pub point: Vec2,
    pub arc: LayerRun,
    pub landing_lambda: f64,
    /// Which side of the contact point the fibre leaves on: sign of `f` there.
    pub launch_side: f64,
}

/// Side of the critical curve (sign of `f`) into which the fast fibre through
/// an order-one contact point bends.
pub fn launch_side(model: &ModelSpec, contact: Vec2) -> Result<f64> {
    let grad_lambda = gradient_fd(|z| model.lambda(z), contact)?;
    let s = dot(grad_lambda, model.n(contact));
    if !(s.abs() > 1e-12) {
        return Err(GsptError::Degenerate(format!(
            "fast fibre through {contact:?} does not leave the critical curve"
        )));
    }
    Ok(s.signum())
}

/// The other endpoint of the layer heteroclinic through a regular contact
/// point: first return of the fibre to `{f = 0}` outside a small ball around
/// the contact point. Jump-on points are handled by reversing time.
pub fn reciprocal_point(
    model: &ModelSpec,
    contact: &ContactPoint,
    window: Option<Window>,
) -> Result<Reciprocal> {
    let direction = match contact.jump_class {
        JumpClass::JumpOff => 1.0,
        JumpClass::JumpOn => -1.0,
        JumpClass::None => {
            return Err(GsptError::precondition(
                "reciprocal point needs a regular order-one jump point",
            ))
        }
    };
    if contact.order != 1 || !contact.regular {
        return Err(GsptError::precondition(
            "reciprocal point needs a regular order-one jump point",
        ));
    }
    let f_pt = contact.location;
    let side = launch_side(model, f_pt)?;
    let stop = LayerStop {
        window,
        exclude: Some((f_pt, LAUNCH_EXCLUSION)),
        direction,
        ..LayerStop::default()
    };
    let run = layer_flow_signed(model, f_pt, side * direction, &stop)?;
    match run.end {
        LayerEnd::ReachedCurve => {}
        LayerEnd::LeftWindow => {
            return Err(GsptError::NoReciprocalPoint(format!(
                "fibre from {f_pt:?} left the window at {:?}",
                run.end_point()
            )))
        }
        LayerEnd::MaxTime => {
            return Err(GsptError::NoReciprocalPoint(format!(
                "fibre from {f_pt:?} did not return within time {}",
                stop.max_time
            )))
        }
    }
    let point = run.end_point();
    let landing_lambda = model.lambda(point);
    let wanted_attracting = direction > 0.0;
    if (landing_lambda < 0.0) != wanted_attracting {
        log::warn!(
            "reciprocal point {point:?} lies on the {} branch (lambda = {landing_lambda:e})",
            if landing_lambda < 0.0 { "attracting" } else { "repelling" }
        );
    }
    Ok(Reciprocal {
        point,
        arc: run,
        landing_lambda,
        launch_side: side,
    })
}

/// A piece of reduced flow along the critical curve.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedSegment {
    pub samples: Vec<Vec2>,
    /// Duration in the desingularised clock.
    pub desing_time: f64,
    /// Duration in the reduced clock, `int -lambda dt_desing`; finite because
    /// the reduced flow reaches the contact point in finite time.
    pub reduced_time: f64,
}

/// Integrates the desingularised reduced field from `from` to the contact
/// point. The field is extended off the curve as `det(N|G) (D_y f, -D_x f)`,
/// which is tangent to the level sets of `f`, so the curve is preserved.
pub fn reduced_segment(model: &ModelSpec, from: Vec2, to: &ContactPoint) -> Result<ReducedSegment> {
    let target = to.location;
    let gap = [target[0] - from[0], target[1] - from[1]];
    if norm(gap) < 1e-14 {
        return Ok(ReducedSegment {
            samples: Vec::new(),
            desing_time: 0.0,
            reduced_time: 0.0,
        });
    }
    let d0 = desingularised_rhs(model, from)?;
    if dot(d0, gap) <= 0.0 {
        return Err(GsptError::Orientation(format!(
            "reduced flow at {from:?} points away from the contact point {target:?}"
        )));
    }
    let dt = desingularised_rhs(model, target)?;
    let tangent = if norm(dt) > 0.0 { dt } else { d0 };
    let field = |_t: f64, z: &[f64; 3]| {
        let p = [z[0], z[1]];
        let g = model.grad_f(p);
        let d = model.det_ng(p, 0.0);
        [d * g[1], -d * g[0], -model.lambda(p)]
    };
    let arrive = Event::new(
        move |_t, z: &[f64; 3]| (z[0] - target[0]) * tangent[0] + (z[1] - target[1]) * tangent[1],
        Crossing::Rising,
    );
    // generous cap: the desingularised speed is bounded away from zero near a regular point
    let t_cap = 1e6;
    let sol = solve(
        field,
        0.0,
        [from[0], from[1], 0.0],
        t_cap,
        &Tolerance::new(1e-12).with_max_steps(1_000_000),
        &[arrive],
        None,
    )?;
    if sol.termination != Termination::Event(0) {
        return Err(GsptError::Orientation(format!(
            "reduced flow from {from:?} never reached {target:?}"
        )));
    }
    let traj = &sol.trajectory;
    let n = 400;
    let samples: Vec<Vec2> = (0..=n)
        .map(|i| {
            let t = traj.t_start() + traj.duration() * i as f64 / n as f64;
            let s = traj.interpolate(t);
            [s[0], s[1]]
        })
        .collect();
    Ok(ReducedSegment {
        samples,
        desing_time: traj.duration(),
        reduced_time: traj.last()[2],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionsReport {
    /// Exactly one regular order-one jump point on the critical curve.
    pub single_jump_point: bool,
    /// A fast fibre connects the jump point to a reciprocal point.
    pub reciprocal_found: bool,
    /// Reciprocal point lies on the branch that flows back to the jump point.
    pub landing_branch_ok: bool,
    /// Smallest distance from the fast fibre to a zero of `N`.
    pub min_singularity_distance: f64,
}

#[derive(Debug, Clone)]
pub struct SingularCycle {
    pub contact: ContactPoint,
    pub reciprocal: Vec2,
    pub layer_arc: Trajectory<2>,
    pub reduced: ReducedSegment,
    pub assumptions: AssumptionsReport,
    /// Built from a jump-on point in reversed time; the nearby cycle repels.
    pub repelling: bool,
    pub singularities: Vec<NSingularity>,
}

impl SingularCycle {
    /// Dense samples of the fast fibre from the jump point to the reciprocal
    /// point.
    pub fn layer_samples(&self, n: usize) -> Vec<Vec2> {
        let t = &self.layer_arc;
        (0..=n)
            .map(|i| t.interpolate(t.t_start() + t.duration() * i as f64 / n as f64))
            .collect()
    }

    /// Closed polyline of the whole cycle: fast fibre then reduced segment.
    pub fn polyline(&self, n_layer: usize) -> Vec<Vec2> {
        let mut out = self.layer_samples(n_layer);
        out.extend(self.reduced.samples.iter().skip(1));
        out
    }
}

/// Builds the singular relaxation cycle of a model with exactly one regular
/// jump point.
pub fn build_singular_cycle(model: &ModelSpec) -> Result<SingularCycle> {
    build_singular_cycle_in(model, default_window(model), 240)
}

pub fn build_singular_cycle_in(
    model: &ModelSpec,
    window: Window,
    resolution: usize,
) -> Result<SingularCycle> {
    let curve = trace_critical_curve(model, window, resolution)?;
    if curve.is_empty() {
        return Err(GsptError::ContactAssumption(
            "no critical curve inside the window".into(),
        ));
    }
    let contacts = find_contact_points(model, &curve)?;
    let jumps: Vec<ContactPoint> = contacts
        .iter()
        .copied()
        .filter(|c| c.order == 1 && c.regular && c.jump_class != JumpClass::None)
        .collect();
    if jumps.len() != 1 || contacts.len() != 1 {
        return Err(GsptError::ContactAssumption(format!(
            "expected exactly one regular jump point, found {} contact points ({} regular jump points)",
            contacts.len(),
            jumps.len()
        )));
    }
    let contact = jumps[0];
    let reach = Window::new(
        window.x_min - 2.0 * window.width(),
        window.x_max + 2.0 * window.width(),
        window.y_min - 2.0 * window.height(),
        window.y_max + 2.0 * window.height(),
    );
    let rec = reciprocal_point(model, &contact, Some(reach))?;
    let repelling = contact.jump_class == JumpClass::JumpOn;
    let landing_branch_ok = (rec.landing_lambda < 0.0) != repelling;
    let reduced = reduced_segment(model, rec.point, &contact)?;

    let singularities = find_n_singularities(model, reach)?;
    let min_singularity_distance = rec
        .arc
        .trajectory
        .states
        .iter()
        .flat_map(|z| {
            singularities
                .iter()
                .map(move |s| norm([z[0] - s.location[0], z[1] - s.location[1]]))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(SingularCycle {
        contact,
        reciprocal: rec.point,
        layer_arc: rec.arc.trajectory,
        reduced,
        assumptions: AssumptionsReport {
            single_jump_point: true,
            reciprocal_found: true,
            landing_branch_ok,
            min_singularity_distance,
        },
        repelling,
        singularities,
    })
}

/// Winding number of a closed polyline around a point.
pub fn winding_number(polyline: &[Vec2], centre: Vec2) -> i64 {
    let mut total = 0.0;
    let n = polyline.len();
    for i in 0..n {
        let a = polyline[i];
        let b = polyline[(i + 1) % n];
        let ta = (a[1] - centre[1]).atan2(a[0] - centre[0]);
        let tb = (b[1] - centre[1]).atan2(b[0] - centre[0]);
        let mut d = tb - ta;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_model, ModelKind};

    fn minimal_contact() -> ContactPoint {
        ContactPoint {
            location: [1.0, 0.0],
            order: 1,
            regular: true,
            jump_class: JumpClass::JumpOff,
        }
    }

    #[test]
    fn minimal_layer_orbit_spirals_back() {
        let m = default_model(ModelKind::Minimal);
        let run = layer_flow(&m, [1.0, 1e-3], &LayerStop::default()).unwrap();
        assert_eq!(run.end, LayerEnd::ReachedCurve);
        let end = run.end_point();
        assert!(end[1].abs() < 1e-10 && end[0] < -5.0, "{end:?}");
        let max_y = run.trajectory.states.iter().map(|z| z[1]).fold(0.0, f64::max);
        assert!(max_y > 1.0);
    }

    #[test]
    fn layer_flow_on_curve_is_immediate() {
        let m = default_model(ModelKind::Minimal);
        let run = layer_flow(&m, [-3.0, 0.0], &LayerStop::default()).unwrap();
        assert_eq!(run.end, LayerEnd::ReachedCurve);
        assert_eq!(run.end_point(), [-3.0, 0.0]);
    }

    #[test]
    fn vdp_fibres_are_horizontal() {
        let v = default_model(ModelKind::Vdp);
        let z0 = [1.5, -2.0 / 3.0 + 0.1];
        let run = layer_flow(&v, z0, &LayerStop::default()).unwrap();
        assert_eq!(run.end, LayerEnd::ReachedCurve);
        let xs: Vec<f64> = run.trajectory.states.iter().map(|z| z[0]).collect();
        assert!(xs.windows(2).all(|w| w[1] <= w[0]));
        assert!(run.trajectory.states.iter().all(|z| (z[1] - z0[1]).abs() < 1e-14));
    }

    #[test]
    fn stall_near_singularity() {
        // N = (x, y) vanishes at the origin; f = y - 1 keeps the curve away
        use crate::model::{PerturbationField, PlaneField, ScalarField};
        let m = ModelSpec::new(
            "sink",
            PlaneField::new(|z: Vec2| [-z[0], -z[1]]),
            ScalarField::new(|z: Vec2| z[1] + 1.0),
            PerturbationField::new(|_z: Vec2, _e: f64| [0.0, 1.0]),
        );
        let err = layer_flow(&m, [0.5, 0.5], &LayerStop::default()).unwrap_err();
        assert!(matches!(err, GsptError::Stalled { .. }), "{err:?}");
    }

    #[test]
    fn minimal_reciprocal_and_reduced_segment() {
        let m = default_model(ModelKind::Minimal);
        let rec = reciprocal_point(&m, &minimal_contact(), None).unwrap();
        assert!((rec.point[0] + 11.2).abs() < 0.1, "{:?}", rec.point);
        assert!(rec.landing_lambda < -1e-6);
        let seg = reduced_segment(&m, rec.point, &minimal_contact()).unwrap();
        // constant desingularised speed 1 along y = 0
        let dx = 1.0 - rec.point[0];
        assert!((seg.desing_time - dx).abs() < 1e-9);
        assert!((seg.reduced_time - 0.5 * dx * dx).abs() < 1e-8);
        let fixed = reduced_segment(&m, [-11.2, 0.0], &minimal_contact()).unwrap();
        assert!((fixed.desing_time - 12.2).abs() < 1e-9);
    }

    #[test]
    fn reduced_segment_edge_cases() {
        let m = default_model(ModelKind::Minimal);
        let seg = reduced_segment(&m, [1.0, 0.0], &minimal_contact()).unwrap();
        assert!(seg.samples.is_empty() && seg.desing_time == 0.0);
        assert!(matches!(
            reduced_segment(&m, [2.0, 0.0], &minimal_contact()),
            Err(GsptError::Orientation(_))
        ));
        let p = default_model(ModelKind::StickSlipPoly);
        let seg = reduced_segment(&p, [0.0, 0.0], &minimal_contact()).unwrap();
        assert!((seg.desing_time - 1.0 / 0.25).abs() < 1e-9);
    }

    #[test]
    fn minimal_cycle_winds_once() {
        let m = default_model(ModelKind::Minimal);
        let c = build_singular_cycle(&m).unwrap();
        assert!(c.assumptions.landing_branch_ok);
        assert!(c.assumptions.min_singularity_distance > 1e-3);
        assert_eq!(winding_number(&c.polyline(2000), [0.0, 1.0]).abs(), 1);
        let poly = c.polyline(100);
        let (a, b) = (poly[0], poly[poly.len() - 1]);
        assert!(norm([a[0] - b[0], a[1] - b[1]]) < 1e-6);
    }

    #[test]
    fn vdp_has_no_two_stroke_cycle() {
        let v = default_model(ModelKind::Vdp);
        assert!(matches!(
            build_singular_cycle(&v),
            Err(GsptError::ContactAssumption(_))
        ));
    }
}
