//! Planar systems of the form `z' = N(z) f(z) + eps * G(z; eps)` and the
//! built-in model zoo.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{GsptError, Result};
use crate::ode::Trajectory;

pub type Vec2 = [f64; 2];
/// Row-major 2x2 matrix: `m[i][j] = d value_i / d z_j`.
pub type Mat2 = [[f64; 2]; 2];

type ScalarFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
type VecFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
type JacFn = Arc<dyn Fn(Vec2) -> Mat2 + Send + Sync>;
type PertFn = Arc<dyn Fn(Vec2, f64) -> Vec2 + Send + Sync>;
type PertJacFn = Arc<dyn Fn(Vec2, f64) -> Mat2 + Send + Sync>;

/// Scalar map with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    value: ScalarFn,
    gradient: Option<GradFn>,
}

impl ScalarField {
    pub fn new(value: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn value(&self, z: Vec2) -> f64 {
        (self.value)(z)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Analytic gradient if supplied, otherwise central differences.
    pub fn gradient(&self, z: Vec2) -> Vec2 {
        match &self.gradient {
            Some(g) => g(z),
            None => gradient_fd(|p| (self.value)(p), z).unwrap_or([f64::NAN; 2]),
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

/// Vector field on the plane with an optional analytic Jacobian.
#[derive(Clone)]
pub struct PlaneField {
    value: VecFn,
    jacobian: Option<JacFn>,
}

impl PlaneField {
    pub fn new(value: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn value(&self, z: Vec2) -> Vec2 {
        (self.value)(z)
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn jacobian(&self, z: Vec2) -> Mat2 {
        match &self.jacobian {
            Some(j) => j(z),
            None => jacobian_fd(|p| (self.value)(p), z).unwrap_or([[f64::NAN; 2]; 2]),
        }
    }
}

impl fmt::Debug for PlaneField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlaneField")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

/// The perturbation `G(z; eps)`; the small parameter enters as an argument.
#[derive(Clone)]
pub struct PerturbationField {
    value: PertFn,
    jacobian: Option<PertJacFn>,
}

impl PerturbationField {
    pub fn new(value: impl Fn(Vec2, f64) -> Vec2 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            jacobian: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(Vec2, f64) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn value(&self, z: Vec2, eps: f64) -> Vec2 {
        (self.value)(z, eps)
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn jacobian(&self, z: Vec2, eps: f64) -> Mat2 {
        match &self.jacobian {
            Some(j) => j(z, eps),
            None => jacobian_fd(|p| (self.value)(p, eps), z).unwrap_or([[f64::NAN; 2]; 2]),
        }
    }
}

impl fmt::Debug for PerturbationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbationField")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

/// Names of the built-in models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Minimal,
    EbersMoll,
    StickSlipExp,
    StickSlipPoly,
    Vdp,
    Transition,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Minimal,
        ModelKind::EbersMoll,
        ModelKind::StickSlipExp,
        ModelKind::StickSlipPoly,
        ModelKind::Vdp,
        ModelKind::Transition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Minimal => "minimal",
            ModelKind::EbersMoll => "ebers_moll",
            ModelKind::StickSlipExp => "stickslip_exp",
            ModelKind::StickSlipPoly => "stickslip_poly",
            ModelKind::Vdp => "vdp",
            ModelKind::Transition => "transition",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| GsptError::UnknownModel(name.to_string()))
    }

    /// Parameter names with their default values.
    pub fn default_params(self) -> &'static [(&'static str, f64)] {
        match self {
            ModelKind::Minimal | ModelKind::Vdp => &[],
            ModelKind::EbersMoll => &[("mu", 1.0), ("kappa", 1e-2), ("a", 4.0), ("b", 6.0)],
            ModelKind::StickSlipExp => &[("v0", 0.5), ("mu_m", 1.0), ("mu_s", 2.0), ("a", 3.0)],
            ModelKind::StickSlipPoly => {
                &[("v0", 0.25), ("v_m", 1.0), ("mu_m", 0.5), ("mu_s", 1.0)]
            }
            ModelKind::Transition => &[
                ("delta", 5.0),
                ("v0", 2.0),
                ("mu_s", 9.0),
                ("a1", 4.0),
                ("a3", 0.1),
            ],
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ModelKind::Minimal => "rational two-stroke oscillator x'=(1-y)y, y'=(x-1+y)y+eps",
            ModelKind::EbersMoll => "Ebers-Moll transistor with exponential characteristic",
            ModelKind::StickSlipExp => "stick-slip oscillator, exponential friction law",
            ModelKind::StickSlipPoly => "stick-slip oscillator, cubic friction law",
            ModelKind::Vdp => "van der Pol relaxation oscillator in fast time",
            ModelKind::Transition => "friction oscillator with two- and four-stroke regimes",
        }
    }

    /// Models whose desingularisation factor is `y`.
    pub fn has_time_factor(self) -> bool {
        !matches!(self, ModelKind::Vdp | ModelKind::Transition)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A planar system `z' = N(z) f(z) + eps G(z; eps)`. Immutable once built.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub name: String,
    pub kind: Option<ModelKind>,
    pub n_field: PlaneField,
    pub f_field: ScalarField,
    pub g_field: PerturbationField,
    pub params: BTreeMap<String, f64>,
    /// Factor `y` of the transformation `dt = y dt_bar`, where present.
    pub time_factor: Option<ScalarField>,
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        n_field: PlaneField,
        f_field: ScalarField,
        g_field: PerturbationField,
    ) -> Self {
        Self {
            name: name.into(),
            kind: None,
            n_field,
            f_field,
            g_field,
            params: BTreeMap::new(),
            time_factor: None,
        }
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn with_time_factor(mut self, factor: ScalarField) -> Self {
        self.time_factor = Some(factor);
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn n(&self, z: Vec2) -> Vec2 {
        self.n_field.value(z)
    }

    pub fn f(&self, z: Vec2) -> f64 {
        self.f_field.value(z)
    }

    pub fn grad_f(&self, z: Vec2) -> Vec2 {
        self.f_field.gradient(z)
    }

    pub fn dn(&self, z: Vec2) -> Mat2 {
        self.n_field.jacobian(z)
    }

    pub fn g(&self, z: Vec2, eps: f64) -> Vec2 {
        self.g_field.value(z, eps)
    }

    /// The nontrivial eigenvalue candidate `<grad f, N>`.
    pub fn lambda(&self, z: Vec2) -> f64 {
        dot(self.grad_f(z), self.n(z))
    }

    /// `det(N | G)` with `G` evaluated at `eps`.
    pub fn det_ng(&self, z: Vec2, eps: f64) -> f64 {
        det_cols(self.n(z), self.g(z, eps))
    }

    /// Unchecked right-hand side, for the integrator's inner loop.
    pub fn rhs(&self, z: Vec2, eps: f64) -> Vec2 {
        let n = self.n(z);
        let f = self.f(z);
        if eps == 0.0 {
            return [n[0] * f, n[1] * f];
        }
        let g = self.g(z, eps);
        [n[0] * f + eps * g[0], n[1] * f + eps * g[1]]
    }

    /// Divergence of the full field.
    pub fn divergence(&self, z: Vec2, eps: f64) -> f64 {
        let dn = self.dn(z);
        let mut div = self.f(z) * (dn[0][0] + dn[1][1]) + self.lambda(z);
        if eps != 0.0 {
            let dg = self.g_field.jacobian(z, eps);
            div += eps * (dg[0][0] + dg[1][1]);
        }
        div
    }

    /// Jacobian of the full field.
    pub fn rhs_jacobian(&self, z: Vec2, eps: f64) -> Mat2 {
        let dn = self.dn(z);
        let n = self.n(z);
        let f = self.f(z);
        let gf = self.grad_f(z);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = dn[i][j] * f + n[i] * gf[j];
            }
        }
        if eps != 0.0 {
            let dg = self.g_field.jacobian(z, eps);
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += eps * dg[i][j];
                }
            }
        }
        out
    }
}

/// `N(z) f(z) + eps G(z; eps)`, with non-finite evaluations reported against
/// the field that produced them.
pub fn eval_rhs(model: &ModelSpec, z: Vec2, eps: f64) -> Result<Vec2> {
    if !z.iter().all(|v| v.is_finite()) {
        return Err(GsptError::precondition(format!("non-finite state {z:?}")));
    }
    if !(eps >= 0.0) {
        return Err(GsptError::precondition(format!("eps must be >= 0, got {eps}")));
    }
    let domain = |field: &'static str, detail: String| GsptError::Domain {
        field,
        x: z[0],
        y: z[1],
        detail,
    };
    let n = model.n(z);
    if !n.iter().all(|v| v.is_finite()) {
        return Err(domain("N", format!("N = {n:?}")));
    }
    let f = model.f(z);
    if !f.is_finite() {
        return Err(domain("f", format!("f = {f}")));
    }
    let mut out = [n[0] * f, n[1] * f];
    if eps > 0.0 {
        let g = model.g(z, eps);
        if !g.iter().all(|v| v.is_finite()) {
            return Err(domain("G", format!("G = {g:?}")));
        }
        out[0] += eps * g[0];
        out[1] += eps * g[1];
    }
    Ok(out)
}

fn fd_steps(z: Vec2) -> Vec2 {
    let base = f64::EPSILON.cbrt();
    [base * z[0].abs().max(1.0), base * z[1].abs().max(1.0)]
}

/// Central-difference gradient with step `eps_mach^(1/3) * max(1, |z_i|)`.
pub fn gradient_fd(field: impl Fn(Vec2) -> f64, z: Vec2) -> Result<Vec2> {
    let h = fd_steps(z);
    let mut out = [0.0; 2];
    for i in 0..2 {
        let mut zp = z;
        let mut zm = z;
        zp[i] += h[i];
        zm[i] -= h[i];
        let (fp, fm) = (field(zp), field(zm));
        if !fp.is_finite() || !fm.is_finite() {
            return Err(GsptError::Domain {
                field: "scalar field",
                x: z[0],
                y: z[1],
                detail: "non-finite sample in finite-difference stencil".into(),
            });
        }
        // divide by the step actually realised in floating point
        out[i] = (fp - fm) / (zp[i] - zm[i]);
    }
    Ok(out)
}

/// Central-difference Jacobian, same step rule as [`gradient_fd`].
pub fn jacobian_fd(field: impl Fn(Vec2) -> Vec2, z: Vec2) -> Result<Mat2> {
    let h = fd_steps(z);
    let mut out = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut zp = z;
        let mut zm = z;
        zp[j] += h[j];
        zm[j] -= h[j];
        let (fp, fm) = (field(zp), field(zm));
        for i in 0..2 {
            if !fp[i].is_finite() || !fm[i].is_finite() {
                return Err(GsptError::Domain {
                    field: "vector field",
                    x: z[0],
                    y: z[1],
                    detail: "non-finite sample in finite-difference stencil".into(),
                });
            }
            out[i][j] = (fp[i] - fm[i]) / (zp[j] - zm[j]);
        }
    }
    Ok(out)
}

/// Turning point `(x_*, y_*)` of the Ebers–Moll characteristic.
pub fn em_turning_point(mu: f64, kappa: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && b > 0.0 && kappa > 0.0) {
        return Err(GsptError::precondition(format!(
            "Ebers-Moll turning point needs a, b, kappa > 0 (got a={a}, b={b}, kappa={kappa})"
        )));
    }
    let r = a / (a + b);
    if kappa >= r {
        return Err(GsptError::precondition(format!(
            "Ebers-Moll turning point needs kappa < a/(a+b) = {r}, got {kappa}"
        )));
    }
    let q = r / kappa;
    let x_star = mu * q.powf(a / b) * (b / (a + b));
    let y_star = -q.ln() / b;
    Ok((x_star, y_star))
}

/// Result of [`physical_time`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalTime {
    pub value: f64,
    /// The time factor changed sign along the trajectory, so part of it runs
    /// with reversed orientation in original time.
    pub orientation_reversed: bool,
}

/// Original-time duration `int time_factor(z(t_bar)) dt_bar` of a trajectory
/// given in desingularised time.
pub fn physical_time(model: &ModelSpec, traj: &Trajectory<2>) -> Result<PhysicalTime> {
    let factor = model.time_factor.as_ref().ok_or_else(|| {
        GsptError::precondition(format!("model `{}` has no time factor", model.name))
    })?;
    let mut pos = false;
    let mut neg = false;
    for s in &traj.states {
        let v = factor.value(*s);
        pos |= v > 0.0;
        neg |= v < 0.0;
    }
    let value = traj.integrate_along(|z| factor.value(*z));
    if !value.is_finite() {
        return Err(GsptError::Domain {
            field: "time factor",
            x: traj.last()[0],
            y: traj.last()[1],
            detail: "non-finite quadrature".into(),
        });
    }
    if pos && neg {
        log::warn!("time factor changes sign along the trajectory");
    }
    Ok(PhysicalTime {
        value,
        orientation_reversed: pos && neg,
    })
}

pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn det_cols(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

fn require(model: ModelKind, params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params.get(key).copied().ok_or_else(|| GsptError::InvalidParameter {
        model: model.name().into(),
        reason: format!("missing parameter `{key}`"),
    })
}

fn positive(model: ModelKind, key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GsptError::InvalidParameter {
            model: model.name().into(),
            reason: format!("`{key}` must be positive and finite, got {v}"),
        })
    }
}

/// Builds one of the zoo models. Missing parameters take the defaults from
/// [`ModelKind::default_params`]; unknown keys are rejected.
pub fn builtin_model(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ModelSpec> {
    let kind = ModelKind::from_name(name)?;
    let defaults = kind.default_params();
    let mut params: BTreeMap<String, f64> =
        defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(GsptError::InvalidParameter {
                model: kind.name().into(),
                reason: format!("unknown parameter `{k}`"),
            });
        }
        if !v.is_finite() {
            return Err(GsptError::InvalidParameter {
                model: kind.name().into(),
                reason: format!("parameter `{k}` is not finite"),
            });
        }
        params.insert(k.clone(), *v);
    }

    let f_is_y = || {
        ScalarField::new(|z: Vec2| z[1]).with_gradient(|_z: Vec2| [0.0, 1.0])
    };
    let g_unit_y = || {
        PerturbationField::new(|_z: Vec2, _e: f64| [0.0, 1.0])
            .with_jacobian(|_z: Vec2, _e: f64| [[0.0; 2]; 2])
    };

    let model = match kind {
        ModelKind::Minimal => {
            let n = PlaneField::new(|z: Vec2| [1.0 - z[1], z[0] - 1.0 + z[1]])
                .with_jacobian(|_z: Vec2| [[0.0, -1.0], [1.0, 1.0]]);
            ModelSpec::new(kind.name(), n, f_is_y(), g_unit_y()).with_time_factor(f_is_y())
        }
        ModelKind::EbersMoll => {
            let mu = require(kind, &params, "mu")?;
            let kappa = require(kind, &params, "kappa")?;
            let a = require(kind, &params, "a")?;
            let b = require(kind, &params, "b")?;
            positive(kind, "mu", mu)?;
            let (xs, ys) = em_turning_point(mu, kappa, a, b).map_err(|e| {
                GsptError::InvalidParameter {
                    model: kind.name().into(),
                    reason: e.to_string(),
                }
            })?;
            params.insert("x_star".into(), xs);
            params.insert("y_star".into(), ys);
            let n = PlaneField::new(move |z: Vec2| [-ys - z[1], z[0] - xs * (-a * z[1]).exp()])
                .with_jacobian(move |z: Vec2| [[0.0, -1.0], [1.0, a * xs * (-a * z[1]).exp()]]);
            ModelSpec::new(kind.name(), n, f_is_y(), g_unit_y()).with_time_factor(f_is_y())
        }
        ModelKind::StickSlipExp | ModelKind::StickSlipPoly => {
            let v0 = require(kind, &params, "v0")?;
            positive(kind, "v0", v0)?;
            let friction = friction_law(kind, &params)?;
            let (mu, dmu) = (friction.clone(), friction);
            let n = PlaneField::new(move |z: Vec2| [v0 - z[1], z[0] - mu.value(z[1])])
                .with_jacobian(move |z: Vec2| [[0.0, -1.0], [1.0, -dmu.slope(z[1])]]);
            ModelSpec::new(kind.name(), n, f_is_y(), g_unit_y()).with_time_factor(f_is_y())
        }
        ModelKind::Vdp => {
            let n = PlaneField::new(|_z: Vec2| [1.0, 0.0]).with_jacobian(|_z: Vec2| [[0.0; 2]; 2]);
            let f = ScalarField::new(|z: Vec2| z[1] + z[0] - z[0].powi(3) / 3.0)
                .with_gradient(|z: Vec2| [1.0 - z[0] * z[0], 1.0]);
            let g = PerturbationField::new(|z: Vec2, _e: f64| [0.0, -z[0]])
                .with_jacobian(|_z: Vec2, _e: f64| [[0.0, 0.0], [-1.0, 0.0]]);
            ModelSpec::new(kind.name(), n, f, g)
        }
        ModelKind::Transition => {
            let delta = require(kind, &params, "delta")?;
            let v0 = require(kind, &params, "v0")?;
            let mu_s = require(kind, &params, "mu_s")?;
            let a1 = require(kind, &params, "a1")?;
            let a3 = require(kind, &params, "a3")?;
            positive(kind, "delta", delta)?;
            positive(kind, "v0", v0)?;
            let n = PlaneField::new(move |z: Vec2| {
                let y = z[1];
                [delta * (v0 - y), z[0] - mu_s + a1 * y - a3 * y * y * y]
            })
            .with_jacobian(move |z: Vec2| {
                [[0.0, -delta], [1.0, a1 - 3.0 * a3 * z[1] * z[1]]]
            });
            ModelSpec::new(kind.name(), n, f_is_y(), g_unit_y())
        }
    };
    let mut model = model.with_params(params);
    model.kind = Some(kind);
    Ok(model)
}

/// Friction law `mu(y)` of the stick-slip models, evaluated for `y >= 0`
/// (the analytic branch is used for `y < 0`).
#[derive(Debug, Clone, Copy)]
pub enum FrictionLaw {
    Exponential { mu_m: f64, mu_s: f64, a: f64 },
    Cubic { mu_m: f64, mu_s: f64, v_m: f64 },
}

impl FrictionLaw {
    pub fn value(&self, y: f64) -> f64 {
        match *self {
            FrictionLaw::Exponential { mu_m, mu_s, a } => mu_m + (mu_s - mu_m) * (-a * y).exp(),
            FrictionLaw::Cubic { mu_m, mu_s, v_m } => {
                let d = mu_s - mu_m;
                mu_s - 1.5 * d * y / v_m + 0.5 * d * y * y * y / (v_m * v_m * v_m)
            }
        }
    }

    pub fn slope(&self, y: f64) -> f64 {
        match *self {
            FrictionLaw::Exponential { mu_m, mu_s, a } => -a * (mu_s - mu_m) * (-a * y).exp(),
            FrictionLaw::Cubic { mu_m, mu_s, v_m } => {
                let d = mu_s - mu_m;
                -1.5 * d / v_m + 1.5 * d * y * y / (v_m * v_m * v_m)
            }
        }
    }
}

/// The friction law of a stick-slip model, if `model` is one.
pub fn friction_law(kind: ModelKind, params: &BTreeMap<String, f64>) -> Result<FrictionLaw> {
    match kind {
        ModelKind::StickSlipExp => {
            let mu_m = require(kind, params, "mu_m")?;
            let mu_s = require(kind, params, "mu_s")?;
            let a = require(kind, params, "a")?;
            positive(kind, "a", a)?;
            Ok(FrictionLaw::Exponential { mu_m, mu_s, a })
        }
        ModelKind::StickSlipPoly => {
            let mu_m = require(kind, params, "mu_m")?;
            let mu_s = require(kind, params, "mu_s")?;
            let v_m = require(kind, params, "v_m")?;
            positive(kind, "v_m", v_m)?;
            Ok(FrictionLaw::Cubic { mu_m, mu_s, v_m })
        }
        _ => Err(GsptError::InvalidParameter {
            model: kind.name().into(),
            reason: "not a stick-slip model".into(),
        }),
    }
}

/// Convenience: a zoo model with all default parameters.
pub fn default_model(kind: ModelKind) -> ModelSpec {
    builtin_model(kind.name(), &BTreeMap::new()).expect("default parameters are valid")
}

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn contains(&self, z: Vec2) -> bool {
        z[0] >= self.x_min && z[0] <= self.x_max && z[1] >= self.y_min && z[1] <= self.y_max
    }

    pub fn is_valid(&self) -> bool {
        [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_max > self.x_min
            && self.y_max > self.y_min
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

impl From<[f64; 4]> for Window {
    fn from(w: [f64; 4]) -> Self {
        Window::new(w[0], w[1], w[2], w[3])
    }
}

/// Plotting window used for each zoo model.
pub fn default_window(model: &ModelSpec) -> Window {
    match model.kind {
        Some(ModelKind::Minimal) => Window::new(-15.0, 3.0, -1.0, 3.0),
        Some(ModelKind::EbersMoll) => {
            let xs = model.param("x_star").unwrap_or(7.0);
            Window::new(-2.0 * xs, 1.5 * xs, -1.0, 2.0)
        }
        Some(ModelKind::StickSlipExp) | Some(ModelKind::StickSlipPoly) => {
            let v0 = model.param("v0").unwrap_or(0.5);
            let mu_s = model.param("mu_s").unwrap_or(1.0);
            Window::new(-mu_s - 1.0, mu_s + 1.0, -0.5, 4.0 * v0 + 0.5)
        }
        Some(ModelKind::Vdp) => Window::new(-3.0, 3.0, -2.0, 2.0),
        Some(ModelKind::Transition) => {
            let mu_s = model.param("mu_s").unwrap_or(9.0);
            let v0 = model.param("v0").unwrap_or(2.0);
            Window::new(mu_s - 15.0, mu_s + 15.0, -1.0, 4.0 * v0 + 4.0)
        }
        None => Window::new(-5.0, 5.0, -5.0, 5.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn minimal_rhs_examples() {
        let m = default_model(ModelKind::Minimal);
        assert_eq!(eval_rhs(&m, [1.0, 0.0], 0.0).unwrap(), [0.0, 0.0]);
        assert_eq!(eval_rhs(&m, [0.0, 1.0], 0.0).unwrap(), [0.0, 0.0]);
        assert_eq!(eval_rhs(&m, [0.0, 0.0], 1e-2).unwrap(), [0.0, 1e-2]);
    }

    #[test]
    fn rhs_overflow_names_field() {
        let m = builtin_model("ebers_moll", &BTreeMap::new()).unwrap();
        match eval_rhs(&m, [0.0, -1e6], 0.0) {
            Err(GsptError::Domain { field, .. }) => assert_eq!(field, "N"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn em_turning_point_examples() {
        let (xs, ys) = em_turning_point(1.0, 1e-2, 4.0, 6.0).unwrap();
        assert!((xs - 7.0176).abs() < 1e-4, "{xs}");
        assert!((ys + 0.61481).abs() < 1e-5, "{ys}");
        let (_, yb) = em_turning_point(1.0, 0.4 - 1e-12, 4.0, 6.0).unwrap();
        assert!(yb < 0.0 && yb > -1e-10);
        let (x2, y2) = em_turning_point(2.0, 1e-2, 4.0, 6.0).unwrap();
        assert!((x2 - 2.0 * xs).abs() < 1e-12 && y2 == ys);
        assert!(em_turning_point(1.0, 0.4, 4.0, 6.0).is_err());
    }

    #[test]
    fn em_turning_point_is_characteristic_maximum() {
        // brute-force maximisation of mu e^{-a y}(1 - kappa e^{-b y}) on a grid
        let (mu, kappa, a, b) = (1.0, 1e-2, 4.0, 6.0);
        let r = |y: f64| mu * (-a * y).exp() * (1.0 - kappa * (-b * y).exp());
        let (mut best_y, mut best) = (0.0, f64::NEG_INFINITY);
        for i in 0..=200_000 {
            let y = -2.0 + 2.0 * i as f64 / 200_000.0;
            if r(y) > best {
                best = r(y);
                best_y = y;
            }
        }
        let (xs, ys) = em_turning_point(mu, kappa, a, b).unwrap();
        assert!((xs - best).abs() < 1e-6, "{xs} vs {best}");
        assert!((ys - best_y).abs() < 2e-5, "{ys} vs {best_y}");
    }

    #[test]
    fn fd_examples() {
        let g = gradient_fd(|z| z[1], [0.3, -2.0]).unwrap();
        assert!((g[0]).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        let g = gradient_fd(|z| z[0] * z[0], [3.0, 0.0]).unwrap();
        assert!((g[0] - 6.0).abs() / 6.0 < 1e-8 && g[1] == 0.0);
        let (xs, a) = (7.0176, 4.0);
        let g = gradient_fd(|z| xs * (-a * z[1]).exp(), [0.0, 0.0]).unwrap();
        assert!((g[1] + a * xs).abs() / (a * xs) < 1e-6);
        assert!(gradient_fd(|z| 1.0 / z[0], [0.0, 0.0]).is_err());
    }

    #[test]
    fn builtin_parameter_checks() {
        assert!(matches!(
            builtin_model("pendulum", &BTreeMap::new()),
            Err(GsptError::UnknownModel(_))
        ));
        assert!(builtin_model("stickslip_poly", &params(&[("v0", 0.0)])).is_err());
        assert!(builtin_model("stickslip_poly", &params(&[("nu", 1.0)])).is_err());
        assert!(builtin_model("ebers_moll", &params(&[("kappa", 0.5)])).is_err());
    }

    #[test]
    fn poly_friction_law() {
        let m = builtin_model(
            "stickslip_poly",
            &params(&[("v0", 0.25), ("v_m", 1.0), ("mu_m", 0.5), ("mu_s", 1.0)]),
        )
        .unwrap();
        for y in [0.0, 0.3, 1.0, 1.7] {
            let mu = 1.0 - 3.0 * 0.5 * y / 2.0 + 0.5 * y * y * y / 2.0;
            // N2 at x = 0 is -mu(y)
            assert!((m.n([0.0, y])[1] + mu).abs() < 1e-14);
        }
        // minimum mu_m at v_m
        assert!((m.n([0.0, 1.0])[1] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn transition_fields() {
        let m = builtin_model(
            "transition",
            &params(&[("delta", 5.0), ("v0", 2.0), ("mu_s", 9.0), ("a1", 4.0), ("a3", 0.1)]),
        )
        .unwrap();
        let z = [1.5, 0.7];
        let y = z[1];
        let expect = [
            5.0 * (2.0 - y) * y,
            (z[0] - 9.0 + 4.0 * y - 0.1 * y * y * y) * y + 1e-2,
        ];
        let got = eval_rhs(&m, z, 1e-2).unwrap();
        assert!((got[0] - expect[0]).abs() < 1e-14 && (got[1] - expect[1]).abs() < 1e-14);
    }

    #[test]
    fn physical_time_of_constant_states() {
        let m = default_model(ModelKind::Minimal);
        let t1 = Trajectory::constant([0.0, 1.0], 0.0, 5.0);
        assert!((physical_time(&m, &t1).unwrap().value - 5.0).abs() < 1e-12);
        let t2 = Trajectory::constant([0.0, 2.0], 0.0, 5.0);
        assert!((physical_time(&m, &t2).unwrap().value - 10.0).abs() < 1e-12);
        let vdp = default_model(ModelKind::Vdp);
        assert!(physical_time(&vdp, &t1).is_err());
    }
}
