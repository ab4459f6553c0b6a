//! Run configuration, read from TOML. Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    pub eps: Option<EpsSpec>,
    pub output: Option<OutputConfig>,
    pub window: Option<[f64; 4]>,
    pub tolerances: Option<Tolerances>,
    pub section: Option<SectionConfig>,
    pub simulate: Option<SimulateConfig>,
    pub scale: Option<ScaleConfig>,
    pub regimes: Option<RegimesConfig>,
    pub strokes: Option<StrokesConfig>,
    pub riccati: Option<RiccatiConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// Either a single value or a ladder `{ min, max, count, log }`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EpsSpec {
    Value(f64),
    List(Vec<f64>),
    Ladder(Ladder),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "yes")]
    pub log: bool,
}

fn yes() -> bool {
    true
}

impl Ladder {
    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / n;
                if self.log {
                    (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + t * (self.max - self.min)
                }
            })
            .collect()
    }

    fn validate(&self, what: &str) -> Result<(), String> {
        if self.count == 0 {
            return Err(format!("{what}: count must be at least 1"));
        }
        if !(self.min <= self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(format!("{what}: need finite min <= max"));
        }
        if self.log && !(self.min > 0.0) {
            return Err(format!("{what}: log ladders need min > 0"));
        }
        Ok(())
    }
}

impl EpsSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsSpec::Value(v) => vec![*v],
            EpsSpec::List(v) => v.clone(),
            EpsSpec::Ladder(l) => l.values(),
        }
    }

    fn validate(&self, what: &str) -> Result<(), String> {
        if let EpsSpec::Ladder(l) = self {
            l.validate(what)?;
        }
        let v = self.values();
        if v.is_empty() {
            return Err(format!("{what}: no values"));
        }
        if v.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(format!("{what}: values must be positive and finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Integration tolerance (relative and absolute).
    pub ode: Option<f64>,
    /// Fixed-point convergence threshold of the cycle search.
    pub cycle: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionConfig {
    pub base: [f64; 2],
    /// Flow direction the section is normal to.
    pub flow: [f64; 2],
    pub half_width: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub z0: Option<[f64; 2]>,
    pub t_end: Option<f64>,
    #[serde(default = "yes")]
    pub limit_cycle: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub rho: Option<f64>,
}

/// Either a list of values or a ladder.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Ladder(Ladder),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Ladder(l) => l.values(),
        }
    }

    fn validate(&self, what: &str) -> Result<(), String> {
        if let Grid::Ladder(l) = self {
            l.validate(what)?;
        }
        let v = self.values();
        if v.is_empty() || v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(format!("{what}: need at least one positive finite value"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimesConfig {
    pub delta: f64,
    pub mu_s: f64,
    pub a1: f64,
    pub a3: f64,
    pub v0: Grid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokesConfig {
    pub eps: Grid,
    pub delta: Grid,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiccatiConfig {
    /// Coefficients; taken from the model's jump point when omitted.
    pub a0: Option<f64>,
    pub b1: Option<f64>,
    pub d0: Option<f64>,
    pub x_max: Option<f64>,
    pub points: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(e) = &self.eps {
            e.validate("eps")?;
        }
        if let Some(w) = self.window {
            if !(w[0] < w[1] && w[2] < w[3]) || w.iter().any(|v| !v.is_finite()) {
                return Err("window: need [x_min, x_max, y_min, y_max] with min < max".into());
            }
        }
        if let Some(t) = &self.tolerances {
            if let Some(v) = t.ode {
                if !(1e-13..=1e-5).contains(&v) {
                    return Err(format!("tolerances.ode: {v} outside [1e-13, 1e-5]"));
                }
            }
            if let Some(v) = t.cycle {
                if !(v > 0.0) {
                    return Err("tolerances.cycle: must be positive".into());
                }
            }
        }
        if let Some(s) = &self.section {
            if !(s.half_width > 0.0) || (s.flow[0] == 0.0 && s.flow[1] == 0.0) {
                return Err("section: need half_width > 0 and a nonzero flow direction".into());
            }
        }
        if let Some(s) = &self.simulate {
            if let Some(t) = s.t_end {
                if !(t > 0.0) {
                    return Err("simulate.t_end: must be positive".into());
                }
            }
        }
        if let Some(s) = &self.scale {
            if let Some(r) = s.rho {
                if !(r > 0.0) {
                    return Err("scale.rho: must be positive".into());
                }
            }
        }
        if let Some(r) = &self.regimes {
            r.v0.validate("regimes.v0")?;
            if !(r.delta > 0.0) {
                return Err("regimes.delta: must be positive".into());
            }
        }
        if let Some(s) = &self.strokes {
            s.eps.validate("strokes.eps")?;
            s.delta.validate("strokes.delta")?;
        }
        if let Some(r) = &self.riccati {
            if let Some(n) = r.points {
                if n < 2 {
                    return Err("riccati.points: need at least 2".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_and_ladder_eps() {
        let c = RunConfig::parse("eps = 0.01\n[model]\nname = \"minimal\"\n").unwrap();
        assert_eq!(c.eps, Some(EpsSpec::Value(0.01)));
        let c = RunConfig::parse("[eps]\nmin = 1e-4\nmax = 1e-2\ncount = 3\n").unwrap();
        let v = c.eps.unwrap().values();
        assert_eq!(v.len(), 3);
        assert!((v[1] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("[model]\nname = \"minimal\"\ncolour = 3\n").unwrap_err();
        assert!(err.contains("colour"), "{err}");
        let err = RunConfig::parse("bogus = 1\n").unwrap_err();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(RunConfig::parse("eps = -1.0\n").is_err());
        assert!(RunConfig::parse("window = [1.0, 0.0, 0.0, 1.0]\n").is_err());
        assert!(RunConfig::parse("[tolerances]\node = 1e-3\n").is_err());
    }
}
