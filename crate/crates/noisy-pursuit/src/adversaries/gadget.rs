//! The gadget-graph adversary for the path-proportionate error model:
//! walks the top or bottom channel of each gadget while reporting along the
//! center channel, extending the gadget chain lazily along the realized
//! branch.

use rand_chacha::ChaCha8Rng;

use super::AdversaryError;
use crate::environments::{append_gadget, gadget_growth_ratio, GadgetMeta};
use crate::geometry::{Environment, Position};
use crate::sensing::NoiseModel;
use crate::targets::{
    Branch, InvariantBounds, PhaseEvent, Target, TargetError, TargetUpdate, WorldView,
};

pub struct GadgetAdversary {
    lambda: f64,
    current: GadgetMeta,
    arc: f64,
    phase_index: u64,
    phase_start: f64,
    max_phases: u64,
    finished: bool,
    /// Resting position after all phases are exhausted.
    final_pos: Option<Position>,
}

impl GadgetAdversary {
    /// The caller owns a graph environment that already contains the first
    /// gadget (see the engine's gadget-tree setup).
    pub fn new(first: GadgetMeta, lambda: f64, max_phases: u64) -> Result<Self, AdversaryError> {
        if !(lambda >= 1.0) {
            return Err(AdversaryError::BadLambda(lambda));
        }
        Ok(GadgetAdversary {
            lambda,
            current: first,
            arc: 0.0,
            phase_index: 0,
            phase_start: 0.0,
            max_phases: max_phases.max(1),
            finished: false,
            final_pos: None,
        })
    }

    pub fn phases_completed(&self) -> u64 {
        self.phase_index
    }

    /// Observation position at the current arc: along the center path.
    fn observation(&self) -> Position {
        self.current.path_c.position_at(self.arc)
    }
}

impl Target for GadgetAdversary {
    fn advance(
        &mut self,
        dt: f64,
        now: f64,
        tracker: &Position,
        env: &mut Environment,
        _noise: &NoiseModel,
        _rng: &mut ChaCha8Rng,
    ) -> Result<TargetUpdate, TargetError> {
        let graph = match env {
            Environment::Graph(g) => g,
            _ => {
                return Err(TargetError::Construction(
                    "gadget adversary needs a metric-graph environment".into(),
                ))
            }
        };
        if self.finished {
            let q = self.final_pos.clone().expect("set when finishing");
            return Ok(TargetUpdate {
                view: WorldView::Single(q.clone()),
                observation: q,
                bounds: None,
                events: vec![],
                phase_index: self.phase_index,
                phase_scale: self.current.d_i,
            });
        }

        let tracker_loc = tracker
            .as_graph()
            .ok_or_else(|| TargetError::Construction("tracker must live on the graph".into()))?;
        let mut events = Vec::new();
        let mut budget = dt;
        let mut consumed = 0.0;

        while budget > 0.0 && !self.finished {
            let total = self.current.path_length();
            let left = total - self.arc;
            if budget < left {
                self.arc += budget;
                consumed += budget;
                budget = 0.0;
            } else {
                budget -= left;
                consumed += left;
                // Resolve: keep the exit farther from the tracker (graph
                // metric); exact ties go to the top branch.
                let exit_a = graph
                    .node_location(self.current.exit_a)
                    .map_err(TargetError::from)?;
                let exit_b = graph
                    .node_location(self.current.exit_b)
                    .map_err(TargetError::from)?;
                let d = graph.distances(tracker_loc, &[exit_a, exit_b]);
                let (branch, d_next, exit_node) = if d[0] >= d[1] {
                    (Branch::A, d[0], self.current.exit_a)
                } else {
                    (Branch::B, d[1], self.current.exit_b)
                };
                events.push(PhaseEvent {
                    index: self.phase_index,
                    t_start: self.phase_start,
                    t_end: now + consumed,
                    d_i: self.current.d_i,
                    d_next,
                    predicted_next: self.current.d_i * gadget_growth_ratio(self.lambda),
                    branch,
                });
                self.phase_index += 1;
                self.phase_start = now + consumed;
                self.arc = 0.0;
                if self.phase_index >= self.max_phases {
                    self.finished = true;
                    let loc = graph.node_location(exit_node).map_err(TargetError::from)?;
                    self.final_pos = Some(Position::Graph(loc));
                } else {
                    // Grow the realized branch: the next gadget hangs off the
                    // exit we just committed to, scaled by the guaranteed
                    // ratio regardless of the realized distance.
                    let d_build = self.current.d_i * gadget_growth_ratio(self.lambda);
                    let meta = append_gadget(
                        graph,
                        exit_node,
                        d_build,
                        self.lambda,
                        &format!("g{}", self.phase_index),
                    )
                    .map_err(|e| TargetError::Construction(e.to_string()))?;
                    self.current = meta;
                }
            }
        }

        if self.finished {
            let q = self.final_pos.clone().expect("set when finishing");
            return Ok(TargetUpdate {
                view: WorldView::Single(q.clone()),
                observation: q,
                bounds: None,
                events,
                phase_index: self.phase_index,
                phase_scale: self.current.d_i,
            });
        }

        let qa = self.current.path_a.position_at(self.arc);
        let qb = self.current.path_b.position_at(self.arc);
        Ok(TargetUpdate {
            view: WorldView::Dual { a: qa, b: qb },
            observation: self.observation(),
            bounds: Some(InvariantBounds {
                min_distance: self.current.d_i,
                max_error: self.current.d_i / self.lambda,
            }),
            events,
            phase_index: self.phase_index,
            phase_scale: self.current.d_i,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::build_gadget;
    use crate::geometry::GraphLocation;
    use rand::SeedableRng;

    #[test]
    fn candidates_and_observation_track_equal_arcs() {
        let built = build_gadget(1.0, 2.0).unwrap();
        let mut env = Environment::Graph(built.graph);
        let mut adv = GadgetAdversary::new(built.meta.clone(), 2.0, 3).unwrap();
        let noise = NoiseModel::new(2.0, crate::sensing::NoiseMetric::GeodesicRelative).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // Park the tracker at the entry.
        let tracker = Position::Graph(GraphLocation { edge: 0, offset: 0.0 });
        let mut now = 0.0;
        for _ in 0..40 {
            let upd = adv
                .advance(0.01, now, &tracker, &mut env, &noise, &mut rng)
                .unwrap();
            now += 0.01;
            let g = match &env {
                Environment::Graph(g) => g,
                _ => unreachable!(),
            };
            let obs = upd.observation.as_graph().copied().unwrap();
            for q in upd.view.candidates() {
                let ql = q.as_graph().copied().unwrap();
                let d = g.distances(&ql, &[obs])[0];
                assert!(d <= 0.5 + 1e-9, "gap {d} exceeds d_i/lambda");
            }
        }
    }

    #[test]
    fn phase_end_extends_the_chain() {
        let built = build_gadget(1.0, 2.0).unwrap();
        let mut env = Environment::Graph(built.graph);
        let mut adv = GadgetAdversary::new(built.meta.clone(), 2.0, 2).unwrap();
        let noise = NoiseModel::new(2.0, crate::sensing::NoiseMetric::GeodesicRelative).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tracker = Position::Graph(GraphLocation { edge: 0, offset: 0.0 });
        let nodes_before = match &env {
            Environment::Graph(g) => g.node_count(),
            _ => unreachable!(),
        };
        // One phase lasts (1 + 1/2) * 1 = 1.5.
        let upd = adv
            .advance(1.6, 0.0, &tracker, &mut env, &noise, &mut rng)
            .unwrap();
        assert_eq!(upd.events.len(), 1);
        assert_eq!(upd.events[0].branch, Branch::A); // symmetric tie
        let nodes_after = match &env {
            Environment::Graph(g) => g.node_count(),
            _ => unreachable!(),
        };
        assert!(nodes_after > nodes_before, "lazy extension materialized");
        // The second gadget is scaled by 1 + 1/(2*lambda) = 1.25.
        assert!((adv.current.d_i - 1.25).abs() < 1e-12);
    }
}
