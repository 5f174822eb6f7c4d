//! Fixed-timestep game loop binding environment, noise model, tracker, and
//! target; performs per-step invariant checking, deferred-branch two-world
//! bookkeeping, and trace recording. Runs are deterministic given a config.

pub mod config;
pub mod trace;

pub use config::{EnvSpec, SimConfig, TargetSpec, CAPTURE_FRACTION};
pub use trace::{write_phase_csv, PhaseRecord, Trace, TraceRow, TrackerPhaseRecord};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adversaries::{GadgetAdversary, PhaseAdversary, UShapeAdversary};
use crate::environments::{append_gadget, build_ushape, EnvError};
use crate::geometry::{Environment, GeometryError, MetricGraph, Point, PolygonalScene, Position};
use crate::sensing::{NoiseModel, SensingError};
use crate::targets::{
    Branch, RandomGraphTarget, RandomTarget, ScriptedTarget, Target, TargetError, WorldView,
};
use crate::trackers::{
    DiscGreedyTracker, GreedyTracker, Observation, Tracker, TrackerError, TrackerKind,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("invariant violation at t={t}: {message}")]
    Invariant { t: f64, message: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

impl SimError {
    /// Process exit code: 3 for configuration problems, 2 for anything
    /// that aborts a running simulation.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::InsufficientData(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    Captured { at: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct RunSummary {
    pub d0: f64,
    pub final_d: f64,
    pub max_d: f64,
    pub min_d: f64,
    /// Supremum over recorded steps of (D(t) - D(0)) / t in the kept world.
    pub max_gain_ratio: f64,
    pub steps: u64,
    pub dt: f64,
    pub lambda: f64,
    pub speed: f64,
    pub status: RunStatus,
    pub invariant_checks: u64,
}

pub struct RunOutput {
    pub trace: Trace,
    pub phases: Vec<PhaseRecord>,
    pub tracker_phases: Vec<TrackerPhaseRecord>,
    pub summary: RunSummary,
    /// Final environment (gadget runs grow their graph during play).
    pub env: Environment,
}

/// Least-squares slope of D(t) over rows with t > burn_in.
pub fn fit_growth_rate(trace: &Trace, burn_in: f64) -> Result<f64, SimError> {
    let pts: Vec<(f64, f64)> = trace
        .rows
        .iter()
        .filter(|r| r.t > burn_in)
        .map(|r| (r.t, r.d))
        .collect();
    if pts.len() < 10 {
        return Err(SimError::InsufficientData(format!(
            "{} samples after burn-in",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_d = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (t, d) in &pts {
        cov += (t - mean_t) * (d - mean_d);
        var += (t - mean_t) * (t - mean_t);
    }
    if var == 0.0 {
        return Err(SimError::InsufficientData("degenerate time axis".into()));
    }
    Ok(cov / var)
}

/// Runs a simulation to completion. Deferred-branch targets are handled
/// with full two-world bookkeeping; see [`run_two_worlds`].
pub fn run(cfg: &SimConfig) -> Result<RunOutput, SimError> {
    Sim::prepare(cfg)?.run()
}

/// Runs a deferred-branch adversary and returns the worst-world trace: both
/// branch hypotheses are maintained during each phase and the kept world's
/// history is materialized retroactively, so the returned trajectory is a
/// valid unit-speed target path with valid observations throughout.
pub fn run_two_worlds(cfg: &SimConfig) -> Result<RunOutput, SimError> {
    if !cfg.target.is_deferred_branch() {
        return Err(SimError::Config(
            "run_two_worlds requires a deferred-branch adversary target".into(),
        ));
    }
    run(cfg)
}

// ---------------------------------------------------------------------------
// Internal machinery
// ---------------------------------------------------------------------------

struct PendingStep {
    t: f64,
    d: [f64; 2],
    gamma: [f64; 2],
    row: Option<PendingRow>,
}

struct PendingRow {
    p: Position,
    q: [Position; 2],
    obs: Position,
    phase: u64,
    d_i: f64,
}

struct PendingTrackerPhase {
    index: u64,
    t: f64,
    d: [f64; 2],
}

struct Sim {
    dt: f64,
    steps: u64,
    stride: usize,
    d0: f64,
    lambda: f64,
    speed: f64,
    record_trace: bool,
    dim: usize,
    noise: NoiseModel,
    env: Environment,
    target: Box<dyn Target>,
    tracker: Box<dyn Tracker>,
    tracker_kind: TrackerKind,
    p: Position,
    view: WorldView,
    rng: ChaCha8Rng,
    unobstructed_greedy: bool,
    /// One-step travel bias: positions are step-quantized, so instantaneous
    /// distances differ from their continuous-time counterparts by at most
    /// (1 + s) * dt per step. Boundary-tight checks carry this slack.
    step_slack: f64,
}

impl Sim {
    fn prepare(cfg: &SimConfig) -> Result<Self, SimError> {
        if !(cfg.lambda >= 1.0) {
            return Err(SimError::Config(format!("lambda must be >= 1, got {}", cfg.lambda)));
        }
        if !(cfg.speed >= 1.0) {
            return Err(SimError::Config(format!("speed must be >= 1, got {}", cfg.speed)));
        }
        if !(cfg.d0 > 0.0) {
            return Err(SimError::Config(format!("d0 must be > 0, got {}", cfg.d0)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let noise = NoiseModel::new(cfg.lambda, cfg.effective_metric())
            .map_err(|e| SimError::Config(e.to_string()))?;

        let (env, target, p, q0, dim, d0): (
            Environment,
            Box<dyn Target>,
            Position,
            Position,
            usize,
            f64,
        ) = match (&cfg.env, &cfg.target) {
            (EnvSpec::Unobstructed { dim }, spec) => {
                let dim = *dim;
                if dim < 2 {
                    return Err(SimError::Config("dimension must be >= 2".into()));
                }
                let q0 = Point::zeros(dim);
                let mut p0 = Point::zeros(dim);
                let p0 = {
                    let mut c: Vec<f64> = p0.coords().to_vec();
                    c[0] = -cfg.d0;
                    p0 = Point::new(&c);
                    p0
                };
                let target: Box<dyn Target> = match spec {
                    TargetSpec::PhaseAdversary => Box::new(
                        PhaseAdversary::new(&p0, &q0, cfg.lambda, cfg.speed, cfg.alpha)
                            .map_err(|e| SimError::Config(e.to_string()))?,
                    ),
                    TargetSpec::Random => Box::new(RandomTarget::new(q0.clone(), &mut rng)),
                    TargetSpec::ScriptedJson(text) => {
                        let scripted = ScriptedTarget::from_json(text)
                            .map_err(|e| SimError::Config(e.to_string()))?;
                        let start = scripted.start();
                        let sp = start
                            .as_free()
                            .ok_or_else(|| SimError::Config("script start".into()))?
                            .clone();
                        if sp.dim() != dim {
                            return Err(SimError::Config(format!(
                                "script dimension {} != env dimension {dim}",
                                sp.dim()
                            )));
                        }
                        let mut c: Vec<f64> = sp.coords().to_vec();
                        c[0] -= cfg.d0;
                        return Sim::finish_prepare(
                            cfg,
                            rng,
                            noise,
                            Environment::Unobstructed { dim },
                            Box::new(scripted),
                            Position::Free(Point::new(&c)),
                            start,
                            dim,
                            cfg.d0,
                        );
                    }
                    other => {
                        return Err(SimError::Config(format!(
                            "target {other:?} is not available in unobstructed environments"
                        )))
                    }
                };
                (
                    Environment::Unobstructed { dim },
                    target,
                    Position::Free(p0),
                    Position::Free(q0),
                    dim,
                    cfg.d0,
                )
            }
            (EnvSpec::UShape, TargetSpec::UShapeAdversary) => {
                let world = build_ushape(cfg.d0, cfg.lambda)?;
                let adv = UShapeAdversary::new(&world, cfg.d0)
                    .map_err(|e| SimError::Config(e.to_string()))?;
                let p = Position::Free(world.tracker_start.clone());
                let q = Position::Free(world.mouth.clone());
                (
                    Environment::scene(world.scene),
                    Box::new(adv),
                    p,
                    q,
                    2,
                    cfg.d0,
                )
            }
            (EnvSpec::GadgetTree, TargetSpec::GadgetAdversary { phases }) => {
                let mut graph = MetricGraph::new();
                let start = graph.add_node("start", Some([-cfg.d0, 0.0]));
                let entry = graph.add_node("entry", Some([0.0, 0.0]));
                let approach = graph
                    .add_edge(start, entry, cfg.d0)
                    .map_err(SimError::Geometry)?;
                let meta = append_gadget(&mut graph, entry, cfg.d0, cfg.lambda, "g0")?;
                let adv = GadgetAdversary::new(meta, cfg.lambda, *phases)
                    .map_err(|e| SimError::Config(e.to_string()))?;
                let p = Position::Graph(crate::geometry::GraphLocation {
                    edge: approach,
                    offset: 0.0,
                });
                let q = Position::Graph(crate::geometry::GraphLocation {
                    edge: approach,
                    offset: cfg.d0,
                });
                (Environment::Graph(graph), Box::new(adv), p, q, 2, cfg.d0)
            }
            (EnvSpec::SceneJson(text), TargetSpec::ScriptedJson(script)) => {
                let scene = PolygonalScene::from_json(text).map_err(SimError::Geometry)?;
                let scripted =
                    ScriptedTarget::from_json(script).map_err(|e| SimError::Config(e.to_string()))?;
                let start = scripted.start();
                let sp = start
                    .as_free()
                    .ok_or_else(|| SimError::Config("script start".into()))?
                    .clone();
                let mut c: Vec<f64> = sp.coords().to_vec();
                c[0] -= cfg.d0;
                let p0 = Point::new(&c);
                if !scene.in_free_space(&p0) || !scene.in_free_space(&sp) {
                    return Err(SimError::Config(
                        "start positions must lie in free space".into(),
                    ));
                }
                (
                    Environment::scene(scene),
                    Box::new(scripted),
                    Position::Free(p0),
                    start,
                    2,
                    cfg.d0,
                )
            }
            (EnvSpec::GraphJson(text), TargetSpec::Random) => {
                let graph = MetricGraph::from_json(text).map_err(SimError::Geometry)?;
                if graph.node_count() == 0 {
                    return Err(SimError::Config("empty graph".into()));
                }
                let p_loc = graph.node_location(0).map_err(SimError::Geometry)?;
                // Start the walk from the node farthest from the tracker.
                let dists = graph.node_distances(&p_loc);
                let (far, d0) = dists
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.is_finite())
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                    .map(|(i, d)| (i, *d))
                    .ok_or_else(|| SimError::Config("disconnected graph".into()))?;
                if d0 <= 0.0 {
                    return Err(SimError::Config("graph has no extent".into()));
                }
                let q_loc = graph.node_location(far).map_err(SimError::Geometry)?;
                (
                    Environment::Graph(graph),
                    Box::new(RandomGraphTarget::new(q_loc)),
                    Position::Graph(p_loc),
                    Position::Graph(q_loc),
                    2,
                    d0,
                )
            }
            (env, target) => {
                return Err(SimError::Config(format!(
                    "unsupported environment/target pairing: {env:?} with {target:?}"
                )))
            }
        };

        Sim::finish_prepare(cfg, rng, noise, env, target, p, q0, dim, d0)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_prepare(
        cfg: &SimConfig,
        rng: ChaCha8Rng,
        noise: NoiseModel,
        env: Environment,
        target: Box<dyn Target>,
        p: Position,
        q0: Position,
        dim: usize,
        d0: f64,
    ) -> Result<Self, SimError> {
        let dt = cfg.effective_dt();
        if !(dt > 0.0) {
            return Err(SimError::Config(format!("dt must be > 0, got {dt}")));
        }
        let cap = config::max_dt(d0, cfg.speed);
        if dt > cap * (1.0 + 1e-9) {
            return Err(SimError::Config(format!(
                "dt {dt} violates the resolution rule dt <= {cap}"
            )));
        }
        if cfg.t_max < dt {
            return Err(SimError::Config("t_max must be at least dt".into()));
        }
        let initial_d = env.distance(&p, &q0)?;
        if (initial_d - d0).abs() > 1e-9 * d0.max(1.0) {
            return Err(SimError::Config(format!(
                "start distance {initial_d} does not match d0 {d0}"
            )));
        }
        let steps = (cfg.t_max / dt).floor() as u64;
        let stride = cfg
            .trace_stride
            .unwrap_or_else(|| ((steps as usize) / 200_000).max(1));
        let tracker: Box<dyn Tracker> = match cfg.tracker {
            TrackerKind::Greedy => Box::new(GreedyTracker),
            TrackerKind::DiscGreedy => Box::new(DiscGreedyTracker::new()),
        };
        let unobstructed_greedy = matches!(env, Environment::Unobstructed { .. })
            && cfg.tracker == TrackerKind::Greedy;
        Ok(Sim {
            dt,
            steps,
            stride,
            d0,
            lambda: cfg.lambda,
            speed: cfg.speed,
            record_trace: cfg.record_trace,
            dim,
            noise,
            env,
            target,
            tracker,
            tracker_kind: cfg.tracker,
            p,
            view: WorldView::Single(q0),
            rng,
            unobstructed_greedy,
            step_slack: 2.0 * (1.0 + cfg.speed) * dt,
        })
    }

    fn metric_distance(&self, a: &Position, b: &Position) -> Result<f64, SimError> {
        Ok(match self.noise.metric {
            crate::sensing::NoiseMetric::EuclideanRelative => self.env.euclidean(a, b)?,
            crate::sensing::NoiseMetric::GeodesicRelative => self.env.distance(a, b)?,
        })
    }

    fn run(mut self) -> Result<RunOutput, SimError> {
        let mut trace = Trace {
            rows: Vec::new(),
            dim: self.dim,
        };
        let mut phases: Vec<PhaseRecord> = Vec::new();
        let mut tracker_phases: Vec<TrackerPhaseRecord> = Vec::new();
        let mut pending: Vec<PendingStep> = Vec::new();
        let mut pending_tracker: Vec<PendingTrackerPhase> = Vec::new();

        let mut max_d = self.d0;
        let mut min_d = self.d0;
        let mut final_d = self.d0;
        let mut max_gain_ratio = f64::NEG_INFINITY;
        let mut checks: u64 = 0;
        let mut status = RunStatus::Completed;
        let mut phase_min = self.d0;

        let capture_at = CAPTURE_FRACTION * self.d0;
        let mut t = 0.0;
        let mut steps_done: u64 = 0;

        // Distances to the live hypotheses at the previous step, indexed
        // like the world view; used by the derivative check.
        let mut prev_d = [self.d0, self.d0];
        let mut prev_view = self.view.clone();

        let mut flush =
            |branch: Branch,
             pending: &mut Vec<PendingStep>,
             pending_tracker: &mut Vec<PendingTrackerPhase>,
             trace: &mut Trace,
             tracker_phases: &mut Vec<TrackerPhaseRecord>,
             max_d: &mut f64,
             min_d: &mut f64,
             final_d: &mut f64,
             max_gain_ratio: &mut f64,
             d0: f64| {
                let k = match branch {
                    Branch::A => 0,
                    Branch::B => 1,
                };
                for step in pending.drain(..) {
                    let d = step.d[k];
                    *max_d = max_d.max(d);
                    *min_d = min_d.min(d);
                    *final_d = d;
                    if step.t > 0.0 {
                        *max_gain_ratio = max_gain_ratio.max((d - d0) / step.t);
                    }
                    if let Some(row) = step.row {
                        let [qa, qb] = row.q;
                        trace.rows.push(TraceRow {
                            t: step.t,
                            p: row.p,
                            q: if k == 0 { qa } else { qb },
                            q_obs: row.obs,
                            d,
                            phase: row.phase,
                            d_i: row.d_i,
                            gamma: step.gamma[k],
                        });
                    }
                }
                for tp in pending_tracker.drain(..) {
                    tracker_phases.push(TrackerPhaseRecord {
                        index: tp.index,
                        t: tp.t,
                        d: tp.d[k],
                    });
                }
            };

        for step in 0..self.steps {
            let now = t;
            let upd = self
                .target
                .advance(self.dt, now, &self.p, &mut self.env, &self.noise, &mut self.rng)?;
            let boundary_step = !upd.events.is_empty();

            // Completed phases resolve the buffered two-world steps.
            for ev in &upd.events {
                flush(
                    ev.branch,
                    &mut pending,
                    &mut pending_tracker,
                    &mut trace,
                    &mut tracker_phases,
                    &mut max_d,
                    &mut min_d,
                    &mut final_d,
                    &mut max_gain_ratio,
                    self.d0,
                );
                phases.push(PhaseRecord {
                    i: ev.index,
                    t_i: ev.t_start,
                    d_i: ev.d_i,
                    duration: ev.t_end - ev.t_start,
                    d_next: ev.d_next,
                    predicted: ev.predicted_next,
                    min_d: phase_min,
                });
                phase_min = f64::INFINITY;
            }

            // Observation validity in every live world, against the tracker
            // position at delivery time.
            let candidates: Vec<Position> = upd.view.candidates().into_iter().cloned().collect();
            let mut errs = [0.0_f64; 2];
            for (i, q) in candidates.iter().enumerate() {
                let dist_pq = self.metric_distance(&self.p, q)?;
                let err = self.metric_distance(q, &upd.observation)?;
                errs[i] = err;
                checks += 1;
                if err > (dist_pq + self.step_slack) / self.lambda + 1e-9 * dist_pq {
                    return Err(SimError::Invariant {
                        t: now,
                        message: format!(
                            "observation error {err} exceeds bound {} in world {i}",
                            dist_pq / self.lambda
                        ),
                    });
                }
            }

            // Diagnostic angle between true and observed locations seen
            // from the tracker (before it moves).
            let mut gammas = [f64::NAN; 2];
            if self.unobstructed_greedy {
                for (i, q) in candidates.iter().enumerate() {
                    gammas[i] = angle_at(&self.p, q, &upd.observation);
                }
            }
            let clamped = if self.unobstructed_greedy {
                self.env.euclidean(&self.p, &upd.observation)? <= self.speed * self.dt
            } else {
                false
            };

            // Tracker moves with its arc budget.
            let obs = Observation {
                location: upd.observation.clone(),
                disk_radius: if self.tracker.wants_uncertainty_disk() {
                    Some(self.metric_distance(&self.p, &candidates[0])? / self.lambda)
                } else {
                    None
                },
            };
            let mv = self
                .tracker
                .advance(&self.p, &obs, &self.env, self.dt, self.speed, now)?;
            let moved = self.env.distance(&self.p, &mv.new_pos)?;
            checks += 1;
            if moved > self.speed * self.dt + 1e-12 {
                return Err(SimError::Invariant {
                    t: now,
                    message: format!(
                        "tracker displacement {moved} exceeds budget {}",
                        self.speed * self.dt
                    ),
                });
            }
            let p_new = mv.new_pos;

            // Distances in every live world after both moves.
            let mut d_now = [f64::NAN; 2];
            for (i, q) in candidates.iter().enumerate() {
                d_now[i] = self.env.distance(&p_new, q)?;
            }
            let n_worlds = candidates.len();

            // Target speed: within a phase the displacement of each live
            // hypothesis is one arc step, so its metric displacement cannot
            // exceed dt. Phase boundaries re-anchor the hypotheses.
            if !boundary_step {
                let prev_candidates: Vec<&Position> = prev_view.candidates();
                if prev_candidates.len() == n_worlds {
                    for (i, q) in candidates.iter().enumerate() {
                        let hop = self.env.distance(prev_candidates[i], q)?;
                        checks += 1;
                        if hop > self.dt + 1e-12 {
                            return Err(SimError::Invariant {
                                t: now,
                                message: format!(
                                    "target displacement {hop} exceeds unit speed in world {i}"
                                ),
                            });
                        }
                    }
                }
            }

            // Phase feasibility floors (the adversary's per-phase bounds).
            if let Some(b) = upd.bounds {
                let tol = 1e-9 * (1.0 + b.min_distance) + self.step_slack;
                for i in 0..n_worlds {
                    checks += 1;
                    if d_now[i] < b.min_distance - tol {
                        return Err(SimError::Invariant {
                            t: now,
                            message: format!(
                                "world {i} distance {} fell below the phase floor {}",
                                d_now[i], b.min_distance
                            ),
                        });
                    }
                    checks += 1;
                    if errs[i] > b.max_error + tol {
                        return Err(SimError::Invariant {
                            t: now,
                            message: format!(
                                "world {i} observation error {} exceeds the phase cap {}",
                                errs[i], b.max_error
                            ),
                        });
                    }
                }
            }

            // Distance-derivative envelope for unobstructed greedy: each
            // step may gain at most dt*(1 - s*cos(gamma)) plus a second-
            // order discretization term.
            if self.unobstructed_greedy && !boundary_step && !clamped {
                let c_check = 4.0 * (1.0 + self.speed * self.speed);
                for i in 0..n_worlds {
                    let d_ref = prev_d[i].min(d_now[i]);
                    if d_ref > 10.0 * self.speed * self.dt {
                        let allowed = self.dt * (1.0 - self.speed * gammas[i].cos())
                            + c_check * self.dt * self.dt * (1.0 + 1.0 / d_ref);
                        checks += 1;
                        if d_now[i] - prev_d[i] > allowed {
                            return Err(SimError::Invariant {
                                t: now,
                                message: format!(
                                    "per-step distance gain {} exceeds the greedy envelope {allowed}",
                                    d_now[i] - prev_d[i]
                                ),
                            });
                        }
                    }
                }
            }

            t += self.dt;
            steps_done += 1;
            self.p = p_new;
            for i in 0..n_worlds {
                phase_min = phase_min.min(d_now[i]);
            }

            // Tracker commitment boundaries (buffered until the branch is
            // known, so the recorded distance is the kept world's).
            for tev in &mv.events {
                let mut ds = [f64::NAN; 2];
                for (i, q) in candidates.iter().enumerate() {
                    ds[i] = self.env.distance(&tev.position, q)?;
                }
                if n_worlds == 1 {
                    ds[1] = ds[0];
                }
                pending_tracker.push(PendingTrackerPhase {
                    index: tev.index,
                    t: tev.time,
                    d: ds,
                });
            }

            let record_row = self.record_trace && (step as usize) % self.stride == 0;
            match &upd.view {
                WorldView::Single(q) => {
                    // Single-world data materializes immediately.
                    let d = d_now[0];
                    max_d = max_d.max(d);
                    min_d = min_d.min(d);
                    final_d = d;
                    if t > 0.0 {
                        max_gain_ratio = max_gain_ratio.max((d - self.d0) / t);
                    }
                    for tp in pending_tracker.drain(..) {
                        tracker_phases.push(TrackerPhaseRecord {
                            index: tp.index,
                            t: tp.t,
                            d: tp.d[0],
                        });
                    }
                    if record_row {
                        trace.rows.push(TraceRow {
                            t,
                            p: self.p.clone(),
                            q: q.clone(),
                            q_obs: upd.observation.clone(),
                            d,
                            phase: upd.phase_index,
                            d_i: upd.phase_scale,
                            gamma: gammas[0],
                        });
                    }
                }
                WorldView::Dual { a, b } => {
                    pending.push(PendingStep {
                        t,
                        d: [d_now[0], d_now[1]],
                        gamma: gammas,
                        row: record_row.then(|| PendingRow {
                            p: self.p.clone(),
                            q: [a.clone(), b.clone()],
                            obs: upd.observation.clone(),
                            phase: upd.phase_index,
                            d_i: upd.phase_scale,
                        }),
                    });
                }
            }

            prev_d = d_now;
            prev_view = upd.view.clone();

            // Capture ends the run; for dual views the adversary would keep
            // the farther world, so capture requires both to collapse.
            let kept_potential = if n_worlds == 1 {
                d_now[0]
            } else {
                d_now[0].max(d_now[1])
            };
            if kept_potential < capture_at {
                let branch = if n_worlds == 1 || d_now[0] >= d_now[1] {
                    Branch::A
                } else {
                    Branch::B
                };
                flush(
                    branch,
                    &mut pending,
                    &mut pending_tracker,
                    &mut trace,
                    &mut tracker_phases,
                    &mut max_d,
                    &mut min_d,
                    &mut final_d,
                    &mut max_gain_ratio,
                    self.d0,
                );
                status = RunStatus::Captured { at: t };
                break;
            }

            let _ = step;
        }

        // Horizon reached mid-phase: resolve the remaining buffer by the
        // same worse-world rule, using the final step's distances.
        if !pending.is_empty() || !pending_tracker.is_empty() {
            let branch = if prev_d[0] >= prev_d[1] || prev_d[1].is_nan() {
                Branch::A
            } else {
                Branch::B
            };
            flush(
                branch,
                &mut pending,
                &mut pending_tracker,
                &mut trace,
                &mut tracker_phases,
                &mut max_d,
                &mut min_d,
                &mut final_d,
                &mut max_gain_ratio,
                self.d0,
            );
        }

        let summary = RunSummary {
            d0: self.d0,
            final_d,
            max_d,
            min_d,
            max_gain_ratio,
            steps: steps_done,
            dt: self.dt,
            lambda: self.lambda,
            speed: self.speed,
            status,
            invariant_checks: checks,
        };
        Ok(RunOutput {
            trace,
            phases,
            tracker_phases,
            summary,
            env: self.env,
        })
    }
}

/// Angle at `p` between the directions to `q` and to `obs` (free space).
fn angle_at(p: &Position, q: &Position, obs: &Position) -> f64 {
    match (p, q, obs) {
        (Position::Free(p), Position::Free(q), Position::Free(o)) => {
            let u = q.sub(p);
            let v = o.sub(p);
            let nu = u.norm();
            let nv = v.norm();
            if nu == 0.0 || nv == 0.0 {
                return 0.0;
            }
            (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0).acos()
        }
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stationary_cfg() -> SimConfig {
        SimConfig {
            t_max: 3.0,
            lambda: 2.0,
            target: TargetSpec::ScriptedJson(
                r#"{"waypoints": [{"pos": [0.0, 0.0]}]}"#.to_string(),
            ),
            dt: Some(0.01),
            ..SimConfig::default()
        }
    }

    #[test]
    fn stationary_target_is_captured_along_a_line() {
        let out = run(&stationary_cfg()).unwrap();
        match out.summary.status {
            RunStatus::Captured { at } => {
                // Straight-line capture: D(t) = max(0, d0 - t).
                assert!((at - 1.0).abs() < 0.02, "captured at {at}");
            }
            RunStatus::Completed => panic!("expected capture"),
        }
        for row in &out.trace.rows {
            let expect = (1.0 - row.t).max(0.0);
            assert!((row.d - expect).abs() < 1e-9, "t={} d={}", row.t, row.d);
        }
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let cfg = SimConfig {
            t_max: 5.0,
            target: TargetSpec::Random,
            seed: 42,
            dt: Some(0.01),
            ..SimConfig::default()
        };
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.trace.rows.len(), b.trace.rows.len());
        for (x, y) in a.trace.rows.iter().zip(&b.trace.rows) {
            assert_eq!(x.t.to_bits(), y.t.to_bits());
            assert_eq!(x.d.to_bits(), y.d.to_bits());
            assert_eq!(x.q_obs, y.q_obs);
        }
    }

    #[test]
    fn fit_recovers_exact_linear_growth() {
        let rows: Vec<TraceRow> = (0..1000)
            .map(|i| {
                let t = i as f64 * 0.1;
                TraceRow {
                    t,
                    p: Position::Free(Point::xy(0.0, 0.0)),
                    q: Position::Free(Point::xy(0.0, 0.0)),
                    q_obs: Position::Free(Point::xy(0.0, 0.0)),
                    d: 1.0 + 0.01 * t,
                    phase: 0,
                    d_i: f64::NAN,
                    gamma: f64::NAN,
                }
            })
            .collect();
        let trace = Trace { rows, dim: 2 };
        let slope = fit_growth_rate(&trace, 0.0).unwrap();
        assert!((slope - 0.01).abs() < 1e-12);
    }

    #[test]
    fn fit_of_constant_trace_is_zero() {
        let rows: Vec<TraceRow> = (0..100)
            .map(|i| TraceRow {
                t: i as f64,
                p: Position::Free(Point::xy(0.0, 0.0)),
                q: Position::Free(Point::xy(0.0, 0.0)),
                q_obs: Position::Free(Point::xy(0.0, 0.0)),
                d: 2.5,
                phase: 0,
                d_i: f64::NAN,
                gamma: f64::NAN,
            })
            .collect();
        let trace = Trace { rows, dim: 2 };
        assert_eq!(fit_growth_rate(&trace, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn fit_requires_enough_samples() {
        let trace = Trace { rows: vec![], dim: 2 };
        assert!(matches!(
            fit_growth_rate(&trace, 0.0),
            Err(SimError::InsufficientData(_))
        ));
    }

    #[test]
    fn run_two_worlds_rejects_plain_targets() {
        match run_two_worlds(&stationary_cfg()) {
            Err(SimError::Config(_)) => {}
            Err(other) => panic!("unexpected error kind: {other}"),
            Ok(_) => panic!("expected a config error"),
        }
    }

    #[test]
    fn phase_adversary_grows_against_greedy() {
        let cfg = SimConfig {
            t_max: 40.0,
            lambda: 2.0,
            target: TargetSpec::PhaseAdversary,
            seed: 7,
            ..SimConfig::default()
        };
        let out = run_two_worlds(&cfg).unwrap();
        assert!(out.summary.final_d > 1.0, "final {}", out.summary.final_d);
        assert!(!out.phases.is_empty());
        // Realized growth beats the closed-form floor on every phase, up to
        // the one-step slack the time discretization can hand the tracker.
        for ph in &out.phases {
            assert!(
                ph.d_next >= ph.predicted - 2.0 * out.summary.dt,
                "phase {}: {} < {}",
                ph.i,
                ph.d_next,
                ph.predicted
            );
        }
    }
}
