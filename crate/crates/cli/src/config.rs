//! Scenario files.
//!
//! A scenario is a TOML document. Unknown keys are rejected, and physics
//! parameters never have defaults; only numerical knobs do.

use std::path::Path;

use kerr_echo::analysis::GridSpec;
use kerr_echo::dynamics::{Excitation, KickSpec, PulseSpec, SystemParams};
use kerr_echo::open_system::BathParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}: {source}")]
    Parse { origin: String, source: toml::de::Error },
    #[error("{origin}: {field}: {message}")]
    Invalid {
        origin: String,
        field: &'static str,
        message: String,
    },
    #[error("unknown preset `{0}` (see `kerr-echo presets-list`)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Free,
    Kicked,
    Classical,
    Lindblad,
    Husimi,
    Analytic,
    EchoScan,
    LambdaScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct System {
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Coherent {
        alpha0: f64,
    },
    /// Equilibrium with a bath given either by `epsilon = ħω/k_BT` or by its
    /// mean occupation.
    Thermal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nbar: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub e0: f64,
    pub sigma: f64,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kick {
    pub lambda: f64,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bath {
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contrast {
    pub half_width: f64,
    pub sectors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub snapshots: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Bins per axis of the classical histogram.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<Contrast>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
    /// Time at which the initial state is prepared; defaults to `t_start`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_initial: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Step inside pulse windows for pure-state runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_pulse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_free: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical_dt: Option<f64>,
    /// Positivity check stride for density-matrix runs (0 = off).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity_stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticOrder {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableName {
    Q1,
    Q2,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    /// Observables passed to the echo detector.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detect: Vec<ObservableName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_order: Option<AnalyticOrder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prominence_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    pub lambdas: Vec<f64>,
    pub tau: f64,
    pub samples_per_window: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub system: System,
    pub initial: Initial,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulses: Vec<Pulse>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kicks: Vec<Kick>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<Bath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
    #[serde(default)]
    pub output: Output,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            origin: origin.to_string(),
            source,
        })?;
        cfg.validate(origin)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialise")
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams::new(self.system.delta).expect("validated")
    }

    pub fn excitations(&self) -> Vec<Excitation> {
        let mut out: Vec<Excitation> = self
            .pulses
            .iter()
            .map(|p| PulseSpec::new(p.e0, p.sigma, p.center).expect("validated").into())
            .collect();
        out.extend(
            self.kicks
                .iter()
                .map(|k| Excitation::from(KickSpec::new(k.lambda, k.center).expect("validated"))),
        );
        out
    }

    pub fn bath_params(&self) -> Option<BathParams> {
        self.bath.as_ref().map(|b| match (b.nbar, b.epsilon) {
            (Some(n), None) => BathParams::from_nbar(b.gamma, n).expect("validated"),
            (None, Some(e)) => BathParams::from_epsilon(b.gamma, e).expect("validated"),
            _ => unreachable!("validated"),
        })
    }

    /// Mean thermal occupation of a thermal initial state.
    pub fn initial_nbar(&self) -> Option<f64> {
        match self.initial {
            Initial::Coherent { .. } => None,
            Initial::Thermal { epsilon, nbar } => Some(match (epsilon, nbar) {
                (Some(e), None) => 1.0 / e.exp_m1(),
                (None, Some(n)) => n,
                _ => unreachable!("validated"),
            }),
        }
    }

    pub fn alpha0(&self) -> Option<f64> {
        match self.initial {
            Initial::Coherent { alpha0 } => Some(alpha0),
            Initial::Thermal { .. } => None,
        }
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let s = self.sampling.as_ref().expect("validated");
        kerr_echo::dynamics::linspace(s.t_start, s.t_end, s.n_samples)
    }

    pub fn t_initial(&self) -> f64 {
        self.sampling.as_ref().map_or(0.0, |s| s.t_initial.unwrap_or(s.t_start))
    }

    pub fn grid_spec(&self, alpha_eff: f64, nbar: f64) -> GridSpec {
        let g = self.grid.as_ref().expect("validated");
        let rec = kerr_echo::analysis::recommended_grid(alpha_eff, nbar);
        GridSpec {
            q_range: g.q_range.map_or(rec.q_range, |r| (r[0], r[1])),
            p_range: g.p_range.map_or(rec.p_range, |r| (r[0], r[1])),
            resolution: g.resolution.unwrap_or(rec.resolution),
        }
    }

    fn validate(&self, origin: &str) -> Result<(), ConfigError> {
        let bad = |field: &'static str, message: String| ConfigError::Invalid {
            origin: origin.to_string(),
            field,
            message,
        };
        let finite = |field: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(bad(field, format!("must be finite, got {v}")))
            }
        };
        finite("system.delta", self.system.delta)?;
        match self.initial {
            Initial::Coherent { alpha0 } => finite("initial.alpha0", alpha0)?,
            Initial::Thermal { epsilon, nbar } => match (epsilon, nbar) {
                (Some(e), None) if e > 0.0 && e.is_finite() => {}
                (None, Some(n)) if n >= 0.0 && n.is_finite() => {}
                (Some(_), Some(_)) | (None, None) => {
                    return Err(bad(
                        "initial",
                        "thermal state needs exactly one of `epsilon`, `nbar`".into(),
                    ))
                }
                _ => return Err(bad("initial", "epsilon must be > 0 and nbar ≥ 0".into())),
            },
        }
        for p in &self.pulses {
            PulseSpec::new(p.e0, p.sigma, p.center).map_err(|e| bad("pulses", e.to_string()))?;
        }
        for k in &self.kicks {
            KickSpec::new(k.lambda, k.center).map_err(|e| bad("kicks", e.to_string()))?;
        }
        kerr_echo::dynamics::schedule(&self.excitations()).map_err(|e| bad("pulses", e.to_string()))?;
        if let Some(b) = &self.bath {
            let r = match (b.nbar, b.epsilon) {
                (Some(n), None) => BathParams::from_nbar(b.gamma, n),
                (None, Some(e)) => BathParams::from_epsilon(b.gamma, e),
                _ => return Err(bad("bath", "needs exactly one of `nbar`, `epsilon`".into())),
            };
            r.map_err(|e| bad("bath", e.to_string()))?;
        }
        if let Some(e) = &self.ensemble {
            if e.n == 0 {
                return Err(bad("ensemble.n", "must be ≥ 1".into()));
            }
        }
        if let Some(s) = &self.sampling {
            if !(s.t_start.is_finite() && s.t_end.is_finite() && s.t_end > s.t_start) {
                return Err(bad(
                    "sampling",
                    format!("need t_end > t_start, got [{}, {}]", s.t_start, s.t_end),
                ));
            }
            if s.n_samples < 2 {
                return Err(bad("sampling.n_samples", "must be ≥ 2".into()));
            }
            if s.t_initial.is_some_and(|t0| !(t0.is_finite() && t0 <= s.t_start)) {
                return Err(bad("sampling.t_initial", "must be ≤ t_start".into()));
            }
        }
        if let Some(g) = &self.grid {
            if g.snapshots.is_empty() {
                return Err(bad("grid.snapshots", "need at least one snapshot time".into()));
            }
            if g.snapshots.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("grid.snapshots", "must be strictly increasing".into()));
            }
            if g.resolution.is_some_and(|r| r < 2) || g.histogram_bins.is_some_and(|r| r < 2) {
                return Err(bad("grid", "resolution and histogram_bins must be ≥ 2".into()));
            }
            if let Some(c) = &g.contrast {
                if c.sectors < 2 || !(c.half_width > 0.0) {
                    return Err(bad("grid.contrast", "need sectors ≥ 2 and half_width > 0".into()));
                }
            }
        }
        for (field, v) in [
            ("numerics.dt", self.numerics.dt),
            ("numerics.dt_pulse", self.numerics.dt_pulse),
            ("numerics.dt_free", self.numerics.dt_free),
            ("numerics.classical_dt", self.numerics.classical_dt),
        ] {
            if v.is_some_and(|d| !(d > 0.0 && d.is_finite())) {
                return Err(bad(field, "must be > 0".into()));
            }
        }
        if self.numerics.n_max == Some(0) {
            return Err(bad("numerics.n_max", "must be ≥ 1".into()));
        }

        let coherent = matches!(self.initial, Initial::Coherent { .. });
        let n_exc = self.pulses.len() + self.kicks.len();
        let need = |ok: bool, field: &'static str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(bad(field, format!("mode {:?} {what}", self.mode)))
            }
        };
        let needs_sampling = !matches!(self.mode, Mode::Husimi | Mode::LambdaScaling);
        need(
            !needs_sampling || self.sampling.is_some(),
            "sampling",
            "requires [sampling]",
        )?;
        match self.mode {
            Mode::Free => {
                need(n_exc == 0, "pulses", "takes no pulses or kicks")?;
                need(
                    coherent || self.bath.is_some(),
                    "initial",
                    "needs a coherent state or a [bath]",
                )?;
            }
            Mode::Kicked => {
                need(coherent, "initial", "needs a coherent initial state")?;
                need(n_exc > 0, "pulses", "needs at least one pulse or kick")?;
            }
            Mode::Classical => {
                need(coherent, "initial", "needs a coherent initial state")?;
                need(self.ensemble.is_some(), "ensemble", "requires [ensemble]")?;
            }
            Mode::Lindblad => {
                need(self.bath.is_some(), "bath", "requires [bath]")?;
                need(self.kicks.is_empty(), "kicks", "takes finite-width pulses only")?;
            }
            Mode::Husimi => {
                need(self.grid.is_some(), "grid", "requires [grid]")?;
                need(
                    coherent || self.bath.is_some(),
                    "initial",
                    "needs a coherent state or a [bath]",
                )?;
                need(
                    self.bath.is_none() || self.kicks.is_empty(),
                    "kicks",
                    "takes finite-width pulses only with a bath",
                )?;
            }
            Mode::Analytic => {
                need(coherent, "initial", "needs a coherent initial state")?;
                need(n_exc == 1, "pulses", "needs exactly one pulse or kick")?;
                need(
                    self.analysis.analytic_order.is_some(),
                    "analysis.analytic_order",
                    "requires an order",
                )?;
                need(self.bath.is_none(), "bath", "is closed-system only")?;
            }
            Mode::EchoScan => {
                need(
                    coherent || self.bath.is_some(),
                    "initial",
                    "needs a coherent state or a [bath]",
                )?;
                need(n_exc > 0, "pulses", "needs at least one pulse or kick")?;
                need(
                    !self.analysis.detect.is_empty(),
                    "analysis.detect",
                    "needs observables to scan",
                )?;
                need(
                    self.bath.is_none() || self.kicks.is_empty(),
                    "kicks",
                    "takes finite-width pulses only with a bath",
                )?;
                need(
                    self.analysis.analytic_order.is_none() || (n_exc == 1 && self.bath.is_none()),
                    "analysis.analytic_order",
                    "overlay needs a single excitation and no bath",
                )?;
            }
            Mode::LambdaScaling => {
                need(coherent, "initial", "needs a coherent initial state")?;
                let s = self
                    .scaling
                    .as_ref()
                    .ok_or_else(|| bad("scaling", "mode lambda_scaling requires [scaling]".into()))?;
                if s.lambdas.len() < 2 || s.lambdas.iter().any(|l| !(l.is_finite() && *l != 0.0)) {
                    return Err(bad("scaling.lambdas", "need at least two finite nonzero values".into()));
                }
                if !(s.tau > 0.0 && s.tau.is_finite()) || s.samples_per_window < 2 {
                    return Err(bad("scaling", "need tau > 0 and samples_per_window ≥ 2".into()));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_toml(&text, &path.display().to_string())
}
