//! The unobstructed phase adversary: isosceles-triangle phases whose two
//! branch trajectories share one projected observation stream.

use rand_chacha::ChaCha8Rng;

use super::{
    alpha_max, phase_observation, plan_phase, predicted_phase_growth, resolve_phase,
    AdversaryError, PhaseGeometry,
};
use crate::geometry::{Environment, Point, Position};
use crate::sensing::NoiseModel;
use crate::targets::{
    Branch, InvariantBounds, PhaseEvent, Target, TargetError, TargetUpdate, WorldView,
};

pub struct PhaseAdversary {
    lambda: f64,
    alpha: f64,
    tracker_speed: f64,
    geom: PhaseGeometry,
    arc: f64,
    phase_index: u64,
    phase_start: f64,
}

impl PhaseAdversary {
    /// `alpha` defaults to the feasibility maximum for (lambda, speed).
    pub fn new(
        tracker_start: &Point,
        target_start: &Point,
        lambda: f64,
        tracker_speed: f64,
        alpha: Option<f64>,
    ) -> Result<Self, AdversaryError> {
        let alpha_cap = alpha_max(lambda, tracker_speed)?;
        let alpha = match alpha {
            Some(a) => {
                if !(a > 0.0 && a <= alpha_cap * (1.0 + 1e-9)) {
                    return Err(AdversaryError::BadAlpha(a));
                }
                a
            }
            None => alpha_cap,
        };
        let geom = plan_phase(tracker_start, target_start, lambda, alpha)?;
        Ok(PhaseAdversary {
            lambda,
            alpha,
            tracker_speed,
            geom,
            arc: 0.0,
            phase_index: 0,
            phase_start: 0.0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn current_phase_scale(&self) -> f64 {
        self.geom.d_i
    }
}

impl Target for PhaseAdversary {
    fn advance(
        &mut self,
        dt: f64,
        now: f64,
        tracker: &Position,
        _env: &mut Environment,
        _noise: &NoiseModel,
        _rng: &mut ChaCha8Rng,
    ) -> Result<TargetUpdate, TargetError> {
        let p = tracker
            .as_free()
            .ok_or_else(|| TargetError::Construction("phase adversary needs free space".into()))?;
        let mut events = Vec::new();
        let mut budget = dt;
        let mut consumed = 0.0;

        while budget > 0.0 {
            let side = self.geom.side_length();
            let left = side - self.arc;
            if budget < left {
                self.arc += budget;
                consumed += budget;
                budget = 0.0;
            } else {
                // Phase completes inside this step: resolve against the
                // tracker's position at delivery time and roll the leftover
                // motion into the next phase.
                budget -= left;
                consumed += left;
                let branch = resolve_phase(&self.geom, p);
                let endpoint = self.geom.branch_position(side, branch);
                let d_next = p.distance(&endpoint);
                events.push(PhaseEvent {
                    index: self.phase_index,
                    t_start: self.phase_start,
                    t_end: now + consumed,
                    d_i: self.geom.d_i,
                    d_next,
                    predicted_next: predicted_phase_growth(
                        self.geom.d_i,
                        self.lambda,
                        self.alpha,
                        self.tracker_speed,
                    ),
                    branch,
                });
                if d_next == 0.0 {
                    return Err(TargetError::Construction(
                        "tracker reached the branch endpoint exactly".into(),
                    ));
                }
                self.geom = plan_phase(p, &endpoint, self.lambda, self.alpha)
                    .map_err(|e| TargetError::Construction(e.to_string()))?;
                self.phase_index += 1;
                self.phase_start = now + consumed;
                self.arc = 0.0;
            }
        }

        let observation = phase_observation(&self.geom, self.arc)
            .map_err(|e| TargetError::Construction(e.to_string()))?;
        let qa = self.geom.branch_position(self.arc, Branch::A);
        let qb = self.geom.branch_position(self.arc, Branch::B);
        Ok(TargetUpdate {
            view: WorldView::Dual {
                a: Position::Free(qa),
                b: Position::Free(qb),
            },
            observation: Position::Free(observation),
            bounds: Some(InvariantBounds {
                min_distance: self.alpha * self.geom.d_i,
                max_error: self.alpha * self.geom.d_i / self.lambda,
            }),
            events,
            phase_index: self.phase_index,
            phase_scale: self.geom.d_i,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn emits_phase_event_and_grows() {
        let p0 = Point::xy(0.0, 0.0);
        let q0 = Point::xy(1.0, 0.0);
        let mut adv = PhaseAdversary::new(&p0, &q0, 2.0, 1.0, None).unwrap();
        let mut env = Environment::Unobstructed { dim: 2 };
        let noise = NoiseModel::new(2.0, crate::sensing::NoiseMetric::EuclideanRelative).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        // A tracker glued to its start: one full phase lasts 2*d_i = 2.
        let tracker = Position::Free(p0.clone());
        let dt = 0.01;
        let mut events = Vec::new();
        let mut now = 0.0;
        for _ in 0..250 {
            let upd = adv
                .advance(dt, now, &tracker, &mut env, &noise, &mut rng)
                .unwrap();
            events.extend(upd.events);
            now += dt;
        }
        assert_eq!(events.len(), 1);
        let ev = &events[0];
        assert!((ev.t_end - 2.0).abs() < 1e-9);
        // Against a motionless tracker the realized growth far exceeds the
        // worst-case closed form.
        assert!(ev.d_next > ev.predicted_next);
    }

    #[test]
    fn observations_stay_on_axis_and_error_within_alpha_bound() {
        let p0 = Point::xy(0.0, 0.0);
        let q0 = Point::xy(0.3, 0.9);
        let mut adv = PhaseAdversary::new(&p0, &q0, 4.0, 1.0, None).unwrap();
        let alpha = adv.alpha();
        let d_i = adv.current_phase_scale();
        let mut env = Environment::Unobstructed { dim: 2 };
        let noise = NoiseModel::new(4.0, crate::sensing::NoiseMetric::EuclideanRelative).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tracker = Position::Free(p0.clone());
        let mut now = 0.0;
        for _ in 0..100 {
            let upd = adv
                .advance(0.01, now, &tracker, &mut env, &noise, &mut rng)
                .unwrap();
            now += 0.01;
            let obs = upd.observation.as_free().unwrap().clone();
            for q in upd.view.candidates() {
                let err = q.as_free().unwrap().distance(&obs);
                assert!(err <= alpha * d_i / 4.0 + 1e-12);
            }
        }
    }
}
