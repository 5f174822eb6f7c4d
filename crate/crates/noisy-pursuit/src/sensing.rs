//! The relative-error noise model: every reported target location must lie
//! within dist(p, q)/lambda of the true position, under either the Euclidean
//! or the geodesic (path-proportionate) metric.
//!
//! lambda is an analysis parameter only; trackers never see it, the radius,
//! or the true position — they receive the bare observation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Environment, GeometryError, GraphLocation, Point, Position};

/// Validation slack absorbs floating-point drift; adversarial strategies sit
/// exactly on the error bound, so the tolerance scales with the distance.
pub const VALIDATION_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseMetric {
    /// Error proportional to straight-line distance, even among obstacles.
    EuclideanRelative,
    /// Error proportional to shortest-path distance in the environment.
    GeodesicRelative,
}

#[derive(Clone, Copy, Debug)]
pub struct NoiseModel {
    pub lambda: f64,
    pub metric: NoiseMetric,
}

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("lambda must be >= 1, got {0}")]
    BadLambda(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl NoiseModel {
    pub fn new(lambda: f64, metric: NoiseMetric) -> Result<Self, SensingError> {
        if !(lambda >= 1.0) {
            return Err(SensingError::BadLambda(lambda));
        }
        Ok(NoiseModel { lambda, metric })
    }

    fn metric_distance(
        &self,
        env: &Environment,
        a: &Position,
        b: &Position,
    ) -> Result<f64, GeometryError> {
        match self.metric {
            NoiseMetric::EuclideanRelative => env.euclidean(a, b),
            NoiseMetric::GeodesicRelative => env.distance(a, b),
        }
    }

    /// dist(p, q) / lambda under the model's metric.
    pub fn uncertainty_radius(
        &self,
        env: &Environment,
        p: &Position,
        q: &Position,
    ) -> Result<f64, GeometryError> {
        Ok(self.metric_distance(env, p, q)? / self.lambda)
    }

    /// True iff dist(q, q_obs) <= radius + slack, where the slack is
    /// proportional to dist(p, q).
    pub fn validate_observation(
        &self,
        env: &Environment,
        p: &Position,
        q: &Position,
        q_obs: &Position,
    ) -> Result<bool, GeometryError> {
        let d = self.metric_distance(env, p, q)?;
        let err = self.metric_distance(env, q, q_obs)?;
        Ok(err <= d / self.lambda + VALIDATION_SLACK * d)
    }

    /// Draws an observation uniformly from the uncertainty ball around `q`.
    ///
    /// Euclidean model: uniform in the d-ball. Geodesic model on scenes:
    /// rejection sampling of the Euclidean ball against the geodesic ball;
    /// on graphs: exact length-measure sampling of the graph ball.
    pub fn sample_observation(
        &self,
        env: &Environment,
        p: &Position,
        q: &Position,
        seed: u64,
    ) -> Result<Position, GeometryError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_observation_with(env, p, q, &mut rng)
    }

    pub fn sample_observation_with(
        &self,
        env: &Environment,
        p: &Position,
        q: &Position,
        rng: &mut ChaCha8Rng,
    ) -> Result<Position, GeometryError> {
        let r = self.uncertainty_radius(env, p, q)?;
        if r == 0.0 {
            return Ok(q.clone());
        }
        match (self.metric, q) {
            (NoiseMetric::EuclideanRelative, Position::Free(qp)) => {
                Ok(Position::Free(sample_ball(qp, r, rng)))
            }
            (NoiseMetric::GeodesicRelative, Position::Free(qp)) => {
                // Rejection against the geodesic ball; fall back to the true
                // position (always valid) if free space is too tight.
                for _ in 0..200 {
                    let cand = sample_ball(qp, r, rng);
                    let pos = Position::Free(cand);
                    if let Ok(d) = env.distance(q, &pos) {
                        if d <= r {
                            return Ok(pos);
                        }
                    }
                }
                Ok(q.clone())
            }
            (_, Position::Graph(loc)) => {
                let g = match env {
                    Environment::Graph(g) => g,
                    _ => return Err(GeometryError::PositionKindMismatch),
                };
                Ok(Position::Graph(sample_graph_ball(g, loc, r, rng)))
            }
        }
    }
}

/// Uniform sample from the d-ball of radius `r` around `center`.
fn sample_ball(center: &Point, r: f64, rng: &mut ChaCha8Rng) -> Point {
    let dim = center.dim();
    // Direction from normalized Gaussians, radius from U^(1/d).
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let dir = Point::new(&v);
        if let Some(unit) = dir.unit() {
            let u: f64 = rng.gen::<f64>();
            let radius = r * u.powf(1.0 / dim as f64);
            return center.axpy(radius, &unit);
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one value per call keeps the stream simple.
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniform (by length measure) sample from the graph ball of radius `r`.
fn sample_graph_ball(
    g: &crate::geometry::MetricGraph,
    center: &GraphLocation,
    r: f64,
    rng: &mut ChaCha8Rng,
) -> GraphLocation {
    // Covered sub-intervals per edge: x in [0, len] is reachable when
    // min(d(a) + x, d(b) + len - x) <= r, which is a union of up to two
    // intervals anchored at the endpoints, plus the center's own edge.
    let mut segments: Vec<(usize, f64, f64)> = Vec::new();
    let mut total = 0.0;
    let endpoint_dist = g.node_distances(center);
    for e in 0..g.edge_count() {
        let edge = *g.edge(e);
        let da = endpoint_dist[edge.a];
        let db = endpoint_dist[edge.b];
        let mut ivs: Vec<(f64, f64)> = Vec::new();
        if e == center.edge {
            let lo = (center.offset - r).max(0.0);
            let hi = (center.offset + r).min(edge.len);
            if hi > lo {
                ivs.push((lo, hi));
            }
        }
        if da <= r {
            ivs.push((0.0, (r - da).min(edge.len)));
        }
        if db <= r {
            ivs.push(((edge.len - (r - db)).max(0.0), edge.len));
        }
        ivs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for iv in ivs {
            match merged.last_mut() {
                Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
                _ => merged.push(iv),
            }
        }
        for (lo, hi) in merged {
            total += hi - lo;
            segments.push((e, lo, hi));
        }
    }
    if total <= 0.0 || segments.is_empty() {
        return *center;
    }
    let mut pick = rng.gen::<f64>() * total;
    for (e, lo, hi) in &segments {
        let span = hi - lo;
        if pick <= span {
            return GraphLocation {
                edge: *e,
                offset: lo + pick,
            };
        }
        pick -= span;
    }
    *center
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricGraph;

    fn unobstructed() -> Environment {
        Environment::Unobstructed { dim: 2 }
    }

    #[test]
    fn radius_at_lambda_one_is_full_distance() {
        let m = NoiseModel::new(1.0, NoiseMetric::EuclideanRelative).unwrap();
        let p = Position::Free(Point::xy(0.0, 0.0));
        let q = Position::Free(Point::xy(5.0, 0.0));
        assert_eq!(m.uncertainty_radius(&unobstructed(), &p, &q).unwrap(), 5.0);
    }

    #[test]
    fn radius_scales_inverse_lambda() {
        let m = NoiseModel::new(10.0, NoiseMetric::EuclideanRelative).unwrap();
        let p = Position::Free(Point::xy(0.0, 0.0));
        let q = Position::Free(Point::xy(3.0, 4.0));
        assert_eq!(m.uncertainty_radius(&unobstructed(), &p, &q).unwrap(), 0.5);
    }

    #[test]
    fn geodesic_radius_on_graph() {
        let mut g = MetricGraph::new();
        let a = g.add_node("a", None);
        let b = g.add_node("b", None);
        g.add_edge(a, b, 8.0).unwrap();
        let env = Environment::Graph(g);
        let m = NoiseModel::new(4.0, NoiseMetric::GeodesicRelative).unwrap();
        let p = Position::Graph(GraphLocation { edge: 0, offset: 0.0 });
        let q = Position::Graph(GraphLocation { edge: 0, offset: 8.0 });
        assert_eq!(m.uncertainty_radius(&env, &p, &q).unwrap(), 2.0);
    }

    #[test]
    fn validate_exact_boundary_and_just_over() {
        let m = NoiseModel::new(2.0, NoiseMetric::EuclideanRelative).unwrap();
        let env = unobstructed();
        let p = Position::Free(Point::xy(0.0, 0.0));
        let q = Position::Free(Point::xy(4.0, 0.0));
        let on = Position::Free(Point::xy(4.0, 2.0));
        let over = Position::Free(Point::xy(4.0, 2.1));
        assert!(m.validate_observation(&env, &p, &q, &q).unwrap());
        assert!(m.validate_observation(&env, &p, &q, &on).unwrap());
        assert!(!m.validate_observation(&env, &p, &q, &over).unwrap());
    }

    #[test]
    fn sampler_zero_radius_returns_truth() {
        let m = NoiseModel::new(2.0, NoiseMetric::EuclideanRelative).unwrap();
        let env = unobstructed();
        let q = Position::Free(Point::xy(1.0, 1.0));
        let got = m.sample_observation(&env, &q, &q, 7).unwrap();
        assert_eq!(got, q);
    }

    #[test]
    fn sampler_statistics_match_uniform_disk() {
        // lambda = 2, D = 1: radius 0.5. Mean distance of a uniform disk
        // sample from its center is 2r/3; check a generous window.
        let m = NoiseModel::new(2.0, NoiseMetric::EuclideanRelative).unwrap();
        let env = unobstructed();
        let p = Position::Free(Point::xy(0.0, 0.0));
        let q = Position::Free(Point::xy(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut max_err: f64 = 0.0;
        let mut sum = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let obs = m.sample_observation_with(&env, &p, &q, &mut rng).unwrap();
            let err = obs.as_free().unwrap().distance(q.as_free().unwrap());
            assert!(m.validate_observation(&env, &p, &q, &obs).unwrap());
            max_err = max_err.max(err);
            sum += err;
        }
        let mean = sum / n as f64;
        assert!(max_err <= 0.5 + 1e-12);
        assert!((0.30..=0.37).contains(&mean), "mean {mean}");
    }

    #[test]
    fn sampler_is_deterministic_for_fixed_seed() {
        let m = NoiseModel::new(3.0, NoiseMetric::EuclideanRelative).unwrap();
        let env = unobstructed();
        let p = Position::Free(Point::xy(0.0, 0.0));
        let q = Position::Free(Point::xy(2.0, 1.0));
        let a = m.sample_observation(&env, &p, &q, 99).unwrap();
        let b = m.sample_observation(&env, &p, &q, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn radius_monotone_in_lambda() {
        let env = unobstructed();
        let p = Position::Free(Point::xy(0.0, 0.0));
        let q = Position::Free(Point::xy(1.0, 2.0));
        let mut prev = f64::INFINITY;
        for lambda in [1.0, 1.5, 2.0, 4.0, 16.0, 256.0] {
            let m = NoiseModel::new(lambda, NoiseMetric::EuclideanRelative).unwrap();
            let r = m.uncertainty_radius(&env, &p, &q).unwrap();
            assert!(r <= prev);
            prev = r;
        }
    }
}
