//! Simulation configuration and its validation / defaulting rules.

use serde::{Deserialize, Serialize};

use crate::sensing::NoiseMetric;
use crate::trackers::TrackerKind;

/// Default timestep rules. Unobstructed adversary runs must resolve the
/// per-phase growth of order d_i/lambda^2, hence the lambda^-2 factor;
/// gadget and scene runs resolve channel features of order d0/lambda.
/// Plain targets only need the coarse d0/(100 s) resolution bound.
pub fn default_dt(cfg: &SimConfig) -> f64 {
    let d0 = cfg.d0;
    match (&cfg.env, &cfg.target) {
        (EnvSpec::Unobstructed { .. }, TargetSpec::PhaseAdversary) => {
            d0 / (cfg.lambda * cfg.lambda) / 100.0
        }
        (EnvSpec::GadgetTree, _) | (EnvSpec::GraphJson(_), _) => d0 / (400.0 * cfg.lambda),
        (EnvSpec::UShape, _) | (EnvSpec::SceneJson(_), _) => d0 / (400.0 * cfg.lambda),
        _ => d0 / (100.0 * cfg.speed.max(1.0)),
    }
}

/// Hard ceiling on dt relative to the starting distance (resolution rule).
pub fn max_dt(d0: f64, speed: f64) -> f64 {
    d0 / (100.0 * speed.max(1.0))
}

/// A run ends as Captured when the kept-world distance falls below this
/// fraction of d0.
pub const CAPTURE_FRACTION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum EnvSpec {
    Unobstructed { dim: usize },
    UShape,
    GadgetTree,
    SceneJson(String),
    GraphJson(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    PhaseAdversary,
    GadgetAdversary { phases: u64 },
    UShapeAdversary,
    Random,
    ScriptedJson(String),
}

impl TargetSpec {
    /// Deferred-branch adversaries keep two live worlds per phase.
    pub fn is_deferred_branch(&self) -> bool {
        matches!(
            self,
            TargetSpec::PhaseAdversary
                | TargetSpec::GadgetAdversary { .. }
                | TargetSpec::UShapeAdversary
        )
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub dt: Option<f64>,
    pub t_max: f64,
    pub lambda: f64,
    /// None: Euclidean-relative except on graph environments, which default
    /// to geodesic-relative (the path-proportionate model).
    pub metric: Option<NoiseMetric>,
    pub tracker: TrackerKind,
    pub speed: f64,
    pub target: TargetSpec,
    pub env: EnvSpec,
    pub d0: f64,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub record_trace: bool,
    /// Record every n-th step; None picks a stride keeping traces under
    /// ~200k rows. Summary statistics always cover every step.
    pub trace_stride: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: None,
            t_max: 100.0,
            lambda: 2.0,
            metric: None,
            tracker: TrackerKind::Greedy,
            speed: 1.0,
            target: TargetSpec::PhaseAdversary,
            env: EnvSpec::Unobstructed { dim: 2 },
            d0: 1.0,
            seed: 1,
            alpha: None,
            record_trace: true,
            trace_stride: None,
        }
    }
}

impl SimConfig {
    pub fn effective_dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(self))
    }

    pub fn effective_metric(&self) -> NoiseMetric {
        self.metric.unwrap_or(match &self.env {
            EnvSpec::GadgetTree | EnvSpec::GraphJson(_) => NoiseMetric::GeodesicRelative,
            _ => NoiseMetric::EuclideanRelative,
        })
    }
}

/// JSON mirror of SimConfig for `--config` files; every field optional so
/// flags can override.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SimConfigFile {
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub lambda: Option<f64>,
    pub metric: Option<String>,
    pub tracker: Option<String>,
    pub speed: Option<f64>,
    pub target: Option<String>,
    pub env: Option<String>,
    pub d0: Option<f64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub phases: Option<u64>,
    pub dim: Option<usize>,
}
