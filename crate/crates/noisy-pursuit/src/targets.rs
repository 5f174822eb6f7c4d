//! Target-side interface of the game and the benign (non-adversarial)
//! target strategies: scripted waypoint paths and seeded random walks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Environment, GeoPath, GeometryError, GraphLocation, Point, Position};
use crate::sensing::NoiseModel;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("scripted path needs at least one waypoint")]
    EmptyScript,
    #[error("malformed script: {0}")]
    BadScript(String),
    #[error("adversary construction failed: {0}")]
    Construction(String),
}

/// Candidate true positions after a step. Deferred-branch adversaries keep
/// two live hypotheses per phase; plain targets keep one.
#[derive(Clone, Debug)]
pub enum WorldView {
    Single(Position),
    Dual { a: Position, b: Position },
}

impl WorldView {
    pub fn candidates(&self) -> Vec<&Position> {
        match self {
            WorldView::Single(q) => vec![q],
            WorldView::Dual { a, b } => vec![a, b],
        }
    }
}

/// Which branch a resolved phase committed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    A,
    B,
}

/// A completed adversary phase, reported by the target that ran it.
#[derive(Clone, Debug)]
pub struct PhaseEvent {
    pub index: u64,
    pub t_start: f64,
    pub t_end: f64,
    /// Distance scale d_i the phase was constructed for.
    pub d_i: f64,
    /// Realized distance at the start of the next phase.
    pub d_next: f64,
    /// Closed-form lower bound on d_next, when the strategy has one.
    pub predicted_next: f64,
    pub branch: Branch,
}

/// Per-phase feasibility floors checked by the engine every step: the
/// distance to every live hypothesis must stay at or above `min_distance`
/// and the reported error within `max_error` of every hypothesis.
#[derive(Clone, Copy, Debug)]
pub struct InvariantBounds {
    pub min_distance: f64,
    pub max_error: f64,
}

#[derive(Clone, Debug)]
pub struct TargetUpdate {
    pub view: WorldView,
    pub observation: Position,
    pub bounds: Option<InvariantBounds>,
    pub events: Vec<PhaseEvent>,
    /// Index of the phase the update's positions belong to (0 for plain
    /// targets) and its distance scale d_i (NaN for plain targets).
    pub phase_index: u64,
    pub phase_scale: f64,
}

pub trait Target {
    /// Advance the target by `dt` time (unit speed: `dt` arc length) and
    /// produce the observation for the new instant. `tracker` is the
    /// tracker's position at delivery time; worst-case strategies consult
    /// it only when a phase resolves.
    fn advance(
        &mut self,
        dt: f64,
        now: f64,
        tracker: &Position,
        env: &mut Environment,
        noise: &NoiseModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<TargetUpdate, TargetError>;
}

// ---------------------------------------------------------------------------
// Scripted targets
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ScriptDto {
    waypoints: Vec<ScriptWaypointDto>,
}

#[derive(Serialize, Deserialize)]
struct ScriptWaypointDto {
    pos: Vec<f64>,
    #[serde(default)]
    report_offset: Option<Vec<f64>>,
}

/// Follows a fixed waypoint polyline at unit speed, reporting its true
/// position displaced by the per-waypoint offsets (linearly interpolated
/// along each leg). Offsets are validated against the noise model by the
/// engine like any other observation.
pub struct ScriptedTarget {
    path: GeoPath,
    offsets: Vec<Point>,
    cums: Vec<f64>,
    arc: f64,
}

impl ScriptedTarget {
    pub fn from_json(text: &str) -> Result<Self, TargetError> {
        let dto: ScriptDto =
            serde_json::from_str(text).map_err(|e| TargetError::BadScript(e.to_string()))?;
        if dto.waypoints.is_empty() {
            return Err(TargetError::EmptyScript);
        }
        let dim = dto.waypoints[0].pos.len();
        if dim < 2 {
            return Err(TargetError::BadScript(
                "waypoints need dimension >= 2".into(),
            ));
        }
        let mut points = Vec::new();
        let mut offsets = Vec::new();
        for w in &dto.waypoints {
            if w.pos.len() != dim {
                return Err(TargetError::BadScript("inconsistent dimensions".into()));
            }
            points.push(Point::new(&w.pos));
            match &w.report_offset {
                Some(o) if o.len() == dim => offsets.push(Point::new(o)),
                Some(_) => return Err(TargetError::BadScript("offset dimension mismatch".into())),
                None => offsets.push(Point::zeros(dim)),
            }
        }
        if points.len() == 1 {
            points.push(points[0].clone());
            offsets.push(offsets[0].clone());
        }
        let mut cums = vec![0.0];
        for w in points.windows(2) {
            cums.push(cums.last().unwrap() + w[0].distance(&w[1]));
        }
        let path = GeoPath::from_points(points)?;
        Ok(ScriptedTarget {
            path,
            offsets,
            cums,
            arc: 0.0,
        })
    }

    pub fn stationary(pos: Point) -> Self {
        let dim = pos.dim();
        let path = GeoPath::from_points(vec![pos.clone(), pos]).expect("two points");
        ScriptedTarget {
            path,
            offsets: vec![Point::zeros(dim), Point::zeros(dim)],
            cums: vec![0.0, 0.0],
            arc: 0.0,
        }
    }

    pub fn start(&self) -> Position {
        self.path.start()
    }

    fn offset_at(&self, arc: f64) -> Point {
        let total = *self.cums.last().unwrap();
        let arc = arc.clamp(0.0, total);
        let mut seg = 0;
        while seg + 2 < self.cums.len() && self.cums[seg + 1] < arc {
            seg += 1;
        }
        let span = self.cums[seg + 1] - self.cums[seg];
        let t = if span > 0.0 {
            (arc - self.cums[seg]) / span
        } else {
            1.0
        };
        self.offsets[seg].lerp(&self.offsets[seg + 1], t)
    }
}

impl Target for ScriptedTarget {
    fn advance(
        &mut self,
        dt: f64,
        _now: f64,
        _tracker: &Position,
        _env: &mut Environment,
        _noise: &NoiseModel,
        _rng: &mut ChaCha8Rng,
    ) -> Result<TargetUpdate, TargetError> {
        self.arc += dt;
        let q = self.path.position_at(self.arc);
        let point = q
            .as_free()
            .ok_or_else(|| TargetError::BadScript("scripted targets are Euclidean".into()))?;
        let obs = point.add(&self.offset_at(self.arc));
        Ok(TargetUpdate {
            view: WorldView::Single(q.clone()),
            observation: Position::Free(obs),
            bounds: None,
            events: vec![],
            phase_index: 0,
            phase_scale: f64::NAN,
        })
    }
}

// ---------------------------------------------------------------------------
// Random targets
// ---------------------------------------------------------------------------

/// Unit-speed random walk with direction changes at a fixed cadence, with
/// observations drawn uniformly from the allowed uncertainty ball.
pub struct RandomTarget {
    pos: Point,
    dir: Point,
    until_turn: f64,
    turn_every: f64,
}

impl RandomTarget {
    pub fn new(start: Point, rng: &mut ChaCha8Rng) -> Self {
        let dim = start.dim();
        let dir = random_unit(dim, rng);
        RandomTarget {
            pos: start,
            dir,
            until_turn: 1.0,
            turn_every: 1.0,
        }
    }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Point {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.gen::<f64>();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        if let Some(u) = Point::new(&v).unit() {
            return u;
        }
    }
}

impl Target for RandomTarget {
    fn advance(
        &mut self,
        dt: f64,
        _now: f64,
        tracker: &Position,
        env: &mut Environment,
        noise: &NoiseModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<TargetUpdate, TargetError> {
        self.until_turn -= dt;
        if self.until_turn <= 0.0 {
            self.dir = random_unit(self.pos.dim(), rng);
            self.until_turn = self.turn_every;
        }
        self.pos = self.pos.axpy(dt, &self.dir);
        let q = Position::Free(self.pos.clone());
        let obs = noise.sample_observation_with(env, tracker, &q, rng)?;
        Ok(TargetUpdate {
            view: WorldView::Single(q),
            observation: obs,
            bounds: None,
            events: vec![],
            phase_index: 0,
            phase_scale: f64::NAN,
        })
    }
}

/// Unit-speed random walk over a metric graph: traverses edges, picking a
/// random incident edge at each node, avoiding an instant backtrack unless
/// stuck at a dead end.
pub struct RandomGraphTarget {
    loc: GraphLocation,
    /// Walking toward edge endpoint `b` when true.
    forward: bool,
}

impl RandomGraphTarget {
    pub fn new(loc: GraphLocation) -> Self {
        RandomGraphTarget { loc, forward: true }
    }
}

impl Target for RandomGraphTarget {
    fn advance(
        &mut self,
        dt: f64,
        _now: f64,
        tracker: &Position,
        env: &mut Environment,
        noise: &NoiseModel,
        rng: &mut ChaCha8Rng,
    ) -> Result<TargetUpdate, TargetError> {
        let g = match env {
            Environment::Graph(g) => g,
            _ => {
                return Err(TargetError::Construction(
                    "graph walk needs a graph environment".into(),
                ))
            }
        };
        let mut remaining = dt;
        while remaining > 0.0 {
            let edge = *g.edge(self.loc.edge);
            let room = if self.forward {
                edge.len - self.loc.offset
            } else {
                self.loc.offset
            };
            if room > remaining {
                self.loc.offset += if self.forward { remaining } else { -remaining };
                remaining = 0.0;
            } else {
                remaining -= room;
                let node = if self.forward { edge.b } else { edge.a };
                let mut options: Vec<(usize, bool)> = Vec::new();
                for e in 0..g.edge_count() {
                    let ed = g.edge(e);
                    if ed.a == node && !(e == self.loc.edge && !self.forward) {
                        options.push((e, true));
                    }
                    if ed.b == node && !(e == self.loc.edge && self.forward) {
                        options.push((e, false));
                    }
                }
                let (e, fwd) = if options.is_empty() {
                    (self.loc.edge, !self.forward)
                } else {
                    options[rng.gen_range(0..options.len())]
                };
                let ed = g.edge(e);
                self.loc = GraphLocation {
                    edge: e,
                    offset: if fwd { 0.0 } else { ed.len },
                };
                self.forward = fwd;
            }
        }
        let q = Position::Graph(self.loc);
        let obs = noise.sample_observation_with(env, tracker, &q, rng)?;
        Ok(TargetUpdate {
            view: WorldView::Single(q),
            observation: obs,
            bounds: None,
            events: vec![],
            phase_index: 0,
            phase_scale: f64::NAN,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn scripted_parses_and_walks() {
        let text = r#"{"waypoints": [
            {"pos": [0.0, 0.0]},
            {"pos": [2.0, 0.0], "report_offset": [0.0, 0.1]}
        ]}"#;
        let mut t = ScriptedTarget::from_json(text).unwrap();
        let mut env = Environment::Unobstructed { dim: 2 };
        let noise = NoiseModel::new(2.0, crate::sensing::NoiseMetric::EuclideanRelative).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tracker = Position::Free(Point::xy(0.0, -5.0));
        let upd = t
            .advance(1.0, 1.0, &tracker, &mut env, &noise, &mut rng)
            .unwrap();
        match upd.view {
            WorldView::Single(Position::Free(p)) => {
                assert!(p.distance(&Point::xy(1.0, 0.0)) < 1e-12)
            }
            _ => panic!("single world expected"),
        }
        let obs = upd.observation.as_free().unwrap().clone();
        assert!(obs.distance(&Point::xy(1.0, 0.05)) < 1e-12);
    }

    #[test]
    fn stationary_script_stays_put() {
        let text = r#"{"waypoints": [{"pos": [3.0, 4.0]}]}"#;
        let mut t = ScriptedTarget::from_json(text).unwrap();
        let mut env = Environment::Unobstructed { dim: 2 };
        let noise = NoiseModel::new(2.0, crate::sensing::NoiseMetric::EuclideanRelative).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tracker = Position::Free(Point::xy(0.0, 0.0));
        for step in 1..5 {
            let upd = t
                .advance(0.5, step as f64 * 0.5, &tracker, &mut env, &noise, &mut rng)
                .unwrap();
            let q = upd.view.candidates()[0].as_free().unwrap().clone();
            assert_eq!(q, Point::xy(3.0, 4.0));
        }
    }

    #[test]
    fn random_target_moves_at_unit_speed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut t = RandomTarget::new(Point::xy(0.0, 0.0), &mut rng);
        let mut env = Environment::Unobstructed { dim: 2 };
        let noise = NoiseModel::new(4.0, crate::sensing::NoiseMetric::EuclideanRelative).unwrap();
        let tracker = Position::Free(Point::xy(10.0, 0.0));
        let mut prev = Point::xy(0.0, 0.0);
        for i in 0..200 {
            let upd = t
                .advance(0.01, i as f64 * 0.01, &tracker, &mut env, &noise, &mut rng)
                .unwrap();
            let q = upd.view.candidates()[0].as_free().unwrap().clone();
            let step = q.distance(&prev);
            assert!((step - 0.01).abs() < 1e-12);
            prev = q;
        }
    }
}
