//! Tracker strategies.
//!
//! Trackers receive only the observed target location — never lambda, the
//! uncertainty radius, or the true position. The engine moves them with a
//! per-step arc budget of s*dt.

use thiserror::Error;

use crate::geometry::{Environment, GeoPath, GeometryError, Point, Position};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackerKind {
    Greedy,
    DiscGreedy,
}

#[derive(Clone, Copy, Debug)]
pub struct TrackerParams {
    /// Tracker speed; target speed is normalized to 1.
    pub speed: f64,
    pub kind: TrackerKind,
}

impl TrackerParams {
    pub fn new(kind: TrackerKind, speed: f64) -> Result<Self, TrackerError> {
        if !(speed >= 1.0) {
            return Err(TrackerError::BadSpeed(speed));
        }
        Ok(TrackerParams { speed, kind })
    }
}

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("tracker speed must be >= 1, got {0}")]
    BadSpeed(f64),
    #[error("speedup is only defined for lambda > 1, got {0}")]
    SpeedupUndefined(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Speedup sufficient to keep the distance from growing: (1 - 1/l^2)^(-1/2).
pub fn required_speedup(lambda: f64) -> Result<f64, TrackerError> {
    if !(lambda > 1.0) {
        return Err(TrackerError::SpeedupUndefined(lambda));
    }
    Ok((1.0 / (1.0 - 1.0 / (lambda * lambda))).sqrt())
}

/// One greedy move: straight toward the observed location, clamping at it
/// so a discrete step never orbits the goal.
pub fn greedy_step(p: &Point, q_obs: &Point, speed: f64, dt: f64) -> Point {
    let to_goal = q_obs.sub(p);
    let gap = to_goal.norm();
    let reach = speed * dt;
    if gap <= reach {
        return q_obs.clone();
    }
    p.axpy(reach / gap, &to_goal)
}

/// What a tracker is shown each step. The uncertainty radius is populated
/// only for trackers that opt in; none of the provided strategies do.
#[derive(Clone, Debug)]
pub struct Observation {
    pub location: Position,
    pub disk_radius: Option<f64>,
}

/// A commitment boundary crossed while the tracker advanced.
#[derive(Clone, Debug)]
pub struct TrackerPhaseEvent {
    /// Exact time the commitment was made (may fall inside a step).
    pub time: f64,
    /// Tracker position at the commitment instant.
    pub position: Position,
    /// Index of the commitment that starts here (0 = initial).
    pub index: u64,
}

#[derive(Clone, Debug)]
pub struct TrackerMove {
    pub new_pos: Position,
    pub events: Vec<TrackerPhaseEvent>,
}

pub trait Tracker {
    /// Whether the strategy wants the uncertainty disk alongside the
    /// observation. Kept for experimentation; defaults to hidden.
    fn wants_uncertainty_disk(&self) -> bool {
        false
    }

    /// Advance by up to `speed * dt` arc length toward/along the strategy's
    /// current goal, reacting to the newest observation.
    fn advance(
        &mut self,
        pos: &Position,
        obs: &Observation,
        env: &Environment,
        dt: f64,
        speed: f64,
        now: f64,
    ) -> Result<TrackerMove, TrackerError>;
}

/// Continuous greedy: re-aim at the newest observation every step. In
/// obstructed environments the straight line generalizes to the first leg
/// of the geodesic shortest path.
#[derive(Default)]
pub struct GreedyTracker;

impl Tracker for GreedyTracker {
    fn advance(
        &mut self,
        pos: &Position,
        obs: &Observation,
        env: &Environment,
        dt: f64,
        speed: f64,
        _now: f64,
    ) -> Result<TrackerMove, TrackerError> {
        let budget = speed * dt;
        match (env, pos, &obs.location) {
            (Environment::Unobstructed { .. }, Position::Free(p), Position::Free(goal)) => {
                Ok(TrackerMove {
                    new_pos: Position::Free(greedy_step(p, goal, speed, dt)),
                    events: vec![],
                })
            }
            _ => {
                let (dist, path) = env.shortest_path(pos, &obs.location)?;
                let new_pos = if dist <= budget {
                    obs.location.clone()
                } else {
                    path.position_at(budget)
                };
                Ok(TrackerMove {
                    new_pos,
                    events: vec![],
                })
            }
        }
    }
}

/// Phase-committed pursuit: fix the observed location at the phase start as
/// the goal, follow the shortest path to it, and only then look at the
/// sensor again. Observations arriving mid-phase are read but discarded.
pub struct DiscGreedyTracker {
    committed: Option<Commitment>,
    next_index: u64,
}

struct Commitment {
    path: GeoPath,
    progress: f64,
}

impl DiscGreedyTracker {
    pub fn new() -> Self {
        DiscGreedyTracker {
            committed: None,
            next_index: 0,
        }
    }
}

impl Default for DiscGreedyTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl Tracker for DiscGreedyTracker {
    fn advance(
        &mut self,
        pos: &Position,
        obs: &Observation,
        env: &Environment,
        dt: f64,
        speed: f64,
        now: f64,
    ) -> Result<TrackerMove, TrackerError> {
        let mut events = Vec::new();
        let mut current = pos.clone();
        let mut remaining = speed * dt;
        let mut elapsed = 0.0;

        if self.committed.is_none() {
            let (_, path) = env.shortest_path(&current, &obs.location)?;
            events.push(TrackerPhaseEvent {
                time: now,
                position: current.clone(),
                index: self.next_index,
            });
            self.next_index += 1;
            self.committed = Some(Commitment {
                path,
                progress: 0.0,
            });
        }

        while remaining > 0.0 {
            let c = self.committed.as_mut().expect("commitment exists");
            let left = c.path.total_length() - c.progress;
            if left > remaining {
                c.progress += remaining;
                current = c.path.position_at(c.progress);
                elapsed += remaining;
                remaining = 0.0;
            } else {
                c.progress = c.path.total_length();
                current = c.path.end();
                remaining -= left;
                elapsed += left;
                // Goal reached: recommit to the freshest observation.
                let (dist, path) = env.shortest_path(&current, &obs.location)?;
                events.push(TrackerPhaseEvent {
                    time: now + elapsed / speed,
                    position: current.clone(),
                    index: self.next_index,
                });
                self.next_index += 1;
                self.committed = Some(Commitment {
                    path,
                    progress: 0.0,
                });
                if dist <= 1e-12 {
                    // Standing on the observed location already; stop rather
                    // than spin through zero-length commitments.
                    break;
                }
            }
        }

        Ok(TrackerMove {
            new_pos: current,
            events,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_step_moves_toward_goal() {
        let p = greedy_step(&Point::xy(0.0, 0.0), &Point::xy(10.0, 0.0), 1.0, 0.5);
        assert!(p.distance(&Point::xy(0.5, 0.0)) < 1e-12);
    }

    #[test]
    fn greedy_step_stays_when_at_goal() {
        let here = Point::xy(2.0, 3.0);
        let p = greedy_step(&here, &here, 1.0, 0.5);
        assert_eq!(p, here);
    }

    #[test]
    fn greedy_step_clamps_overshoot() {
        let p = greedy_step(&Point::xy(0.0, 0.0), &Point::xy(0.3, 0.0), 1.0, 0.5);
        assert_eq!(p, Point::xy(0.3, 0.0));
    }

    #[test]
    fn required_speedup_values() {
        assert!((required_speedup(2.0).unwrap() - 2.0 / 3.0_f64.sqrt()).abs() < 1e-12);
        assert!((required_speedup(2.0_f64.sqrt()).unwrap() - 2.0_f64.sqrt()).abs() < 1e-12);
        assert!((required_speedup(1e6).unwrap() - 1.0).abs() < 1e-9);
        assert!(required_speedup(1.0).is_err());
        assert!(required_speedup(0.5).is_err());
    }

    #[test]
    fn disc_greedy_advances_along_commitment() {
        let env = Environment::Unobstructed { dim: 2 };
        let mut t = DiscGreedyTracker::new();
        let pos = Position::Free(Point::xy(0.0, 0.0));
        let obs = Observation {
            location: Position::Free(Point::xy(10.0, 0.0)),
            disk_radius: None,
        };
        let mv = t.advance(&pos, &obs, &env, 0.25, 1.0, 0.0).unwrap();
        assert!(mv.new_pos.as_free().unwrap().distance(&Point::xy(0.25, 0.0)) < 1e-12);
        assert_eq!(mv.events.len(), 1); // initial commitment only

        // A new observation mid-phase is ignored; motion continues along the
        // original commitment.
        let distracting = Observation {
            location: Position::Free(Point::xy(0.0, 10.0)),
            disk_radius: None,
        };
        let mv2 = t
            .advance(&mv.new_pos, &distracting, &env, 0.25, 1.0, 0.25)
            .unwrap();
        assert!(
            mv2.new_pos
                .as_free()
                .unwrap()
                .distance(&Point::xy(0.5, 0.0))
                < 1e-12
        );
        assert!(mv2.events.is_empty());
    }

    #[test]
    fn disc_greedy_recommits_at_goal() {
        let env = Environment::Unobstructed { dim: 2 };
        let mut t = DiscGreedyTracker::new();
        let pos = Position::Free(Point::xy(0.0, 0.0));
        let first = Observation {
            location: Position::Free(Point::xy(1.0, 0.0)),
            disk_radius: None,
        };
        let mv = t.advance(&pos, &first, &env, 0.6, 1.0, 0.0).unwrap();
        assert_eq!(mv.events.len(), 1);
        let fresh = Observation {
            location: Position::Free(Point::xy(1.0, 2.0)),
            disk_radius: None,
        };
        let mv2 = t.advance(&mv.new_pos, &fresh, &env, 0.6, 1.0, 0.6).unwrap();
        // Reaches (1,0) after 0.4 more, recommits toward (1,2), walks 0.2 up.
        assert_eq!(mv2.events.len(), 1);
        assert!((mv2.events[0].time - 1.0).abs() < 1e-12);
        assert!(
            mv2.new_pos
                .as_free()
                .unwrap()
                .distance(&Point::xy(1.0, 0.2))
                < 1e-12
        );
    }
}
