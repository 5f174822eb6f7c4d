//! The U-shape blind-alley adversary: one long deferred phase in which the
//! target either dives into the channel or rounds the outer wall, reporting
//! the in-channel positions either way. Works under the Euclidean-relative
//! noise model, where the thin wall keeps both hypotheses observation-
//! equivalent until the channel floor.

use rand_chacha::ChaCha8Rng;

use super::AdversaryError;
use crate::environments::UShapeWorld;
use crate::geometry::{Environment, GeoPath, Position};
use crate::sensing::NoiseModel;
use crate::targets::{Branch, PhaseEvent, Target, TargetError, TargetUpdate, WorldView};

pub struct UShapeAdversary {
    route_a: GeoPath,
    route_b: GeoPath,
    shared_arc: f64,
    d0: f64,
    arc: f64,
    resolved: Option<Branch>,
    phase_start: f64,
}

impl UShapeAdversary {
    pub fn new(world: &UShapeWorld, d0: f64) -> Result<Self, AdversaryError> {
        let route_a = GeoPath::from_points(world.route_inside.clone())
            .map_err(|_| AdversaryError::Undefined("inside route".into()))?;
        let route_b = GeoPath::from_points(world.route_outside.clone())
            .map_err(|_| AdversaryError::Undefined("outside route".into()))?;
        Ok(UShapeAdversary {
            route_a,
            route_b,
            shared_arc: world.shared_arc,
            d0,
            arc: 0.0,
            resolved: None,
            phase_start: 0.0,
        })
    }

    fn kept_route(&self) -> &GeoPath {
        match self.resolved.expect("resolved") {
            Branch::A => &self.route_a,
            Branch::B => &self.route_b,
        }
    }

    fn resolve(
        &mut self,
        now: f64,
        tracker: &Position,
        env: &Environment,
    ) -> Result<PhaseEvent, TargetError> {
        let qa = self.route_a.position_at(self.arc);
        let qb = self.route_b.position_at(self.arc);
        let da = env.distance(tracker, &qa)?;
        let db = env.distance(tracker, &qb)?;
        let branch = if da >= db { Branch::A } else { Branch::B };
        self.resolved = Some(branch);
        Ok(PhaseEvent {
            index: 0,
            t_start: self.phase_start,
            t_end: now,
            d_i: self.d0,
            d_next: da.max(db),
            predicted_next: f64::NAN,
            branch,
        })
    }
}

impl Target for UShapeAdversary {
    fn advance(
        &mut self,
        dt: f64,
        now: f64,
        tracker: &Position,
        env: &mut Environment,
        noise: &NoiseModel,
        _rng: &mut ChaCha8Rng,
    ) -> Result<TargetUpdate, TargetError> {
        let mut events = Vec::new();

        if self.resolved.is_none() {
            let next_arc = self.arc + dt;
            if next_arc >= self.shared_arc {
                // The shared stream ends at the channel floor: finish it,
                // commit to the branch farther from the tracker, and spend
                // the leftover motion on the kept route.
                self.arc = self.shared_arc;
                let used = self.shared_arc - (next_arc - dt);
                events.push(self.resolve(now + used, tracker, env)?);
                self.arc = next_arc;
            } else {
                // Safety valve: if continuing the shared stream would break
                // observation validity in either world (a tracker straying
                // right up to one hypothesis), resolve early instead of
                // emitting an invalid observation.
                let obs = self.route_a.position_at(next_arc);
                let qa = self.route_a.position_at(next_arc);
                let qb = self.route_b.position_at(next_arc);
                let ok_a = noise.validate_observation(env, tracker, &qa, &obs)?;
                let ok_b = noise.validate_observation(env, tracker, &qb, &obs)?;
                if ok_a && ok_b {
                    self.arc = next_arc;
                } else {
                    events.push(self.resolve(now, tracker, env)?);
                    self.arc = next_arc;
                }
            }
        } else {
            self.arc += dt;
        }

        match self.resolved {
            None => {
                let obs = self.route_a.position_at(self.arc);
                Ok(TargetUpdate {
                    view: WorldView::Dual {
                        a: self.route_a.position_at(self.arc),
                        b: self.route_b.position_at(self.arc),
                    },
                    observation: obs,
                    bounds: None,
                    events,
                    phase_index: 0,
                    phase_scale: self.d0,
                })
            }
            Some(_) => {
                // Post-resolution the target reports truthfully while it
                // walks the rest of its route (branch A dead-ends at the
                // floor; branch B escapes along the outer wall).
                let q = self.kept_route().position_at(self.arc);
                Ok(TargetUpdate {
                    view: WorldView::Single(q.clone()),
                    observation: q,
                    bounds: None,
                    events,
                    phase_index: 1,
                    phase_scale: self.d0,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::build_ushape;
    use crate::geometry::Point;
    use crate::sensing::NoiseMetric;
    use rand::SeedableRng;

    #[test]
    fn shared_stream_is_valid_for_both_worlds_against_a_chasing_tracker() {
        let world = build_ushape(1.0, 10.0).unwrap();
        let mut env = Environment::scene(world.scene.clone());
        let noise = NoiseModel::new(10.0, NoiseMetric::EuclideanRelative).unwrap();
        let mut adv = UShapeAdversary::new(&world, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);

        // Tracker chases the observation stream at distance ~d0 behind.
        let mut tracker = Position::Free(world.tracker_start.clone());
        let dt = 0.05;
        let mut now = 0.0;
        let steps = (world.shared_arc / dt) as usize - 2;
        for _ in 0..steps {
            let upd = adv
                .advance(dt, now, &tracker, &mut env, &noise, &mut rng)
                .unwrap();
            now += dt;
            assert!(upd.events.is_empty(), "no early resolution expected");
            for q in upd.view.candidates() {
                assert!(noise
                    .validate_observation(&env, &tracker, q, &upd.observation)
                    .unwrap());
            }
            // Follow the observation like a simple pursuer.
            let goal = upd.observation.as_free().unwrap().clone();
            let here = tracker.as_free().unwrap().clone();
            tracker = Position::Free(crate::trackers::greedy_step(&here, &goal, 1.0, dt));
        }
    }

    #[test]
    fn resolves_to_outside_branch_when_tracker_commits_inside() {
        let world = build_ushape(1.0, 10.0).unwrap();
        let mut env = Environment::scene(world.scene.clone());
        let noise = NoiseModel::new(10.0, NoiseMetric::EuclideanRelative).unwrap();
        let mut adv = UShapeAdversary::new(&world, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);

        // Plant the tracker deep inside the channel just before the floor.
        let tracker = Position::Free(Point::xy(0.0, -world.depth + 1.5));
        let upd = adv
            .advance(world.shared_arc + 0.5, 0.0, &tracker, &mut env, &noise, &mut rng)
            .unwrap();
        assert_eq!(upd.events.len(), 1);
        assert_eq!(upd.events[0].branch, Branch::B);
        // Kept world keeps walking the outside route.
        match upd.view {
            WorldView::Single(Position::Free(p)) => assert!(p.x() < 0.0),
            _ => panic!("resolved view expected"),
        }
    }
}
