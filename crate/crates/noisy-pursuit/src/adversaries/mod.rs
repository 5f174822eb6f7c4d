//! Worst-case target strategies.
//!
//! All three adversaries share the deferred-branch principle: during a phase
//! the target emits one branch-independent observation stream while two true
//! trajectories stay feasible; when the phase ends it retroactively commits
//! to whichever branch left the tracker worse off. This realizes the
//! worst case over deterministic trackers without simulating 2^i worlds.

mod gadget;
mod phase;
mod ushape;

pub use gadget::GadgetAdversary;
pub use phase::PhaseAdversary;
pub use ushape::UShapeAdversary;

use thiserror::Error;

use crate::geometry::Point;
use crate::targets::Branch;
use crate::trackers::required_speedup;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("lambda must be >= 1, got {0}")]
    BadLambda(f64),
    #[error("tracker speed must be >= 1, got {0}")]
    BadSpeed(f64),
    #[error("speed {speed} exceeds the feasible speedup {max} at lambda {lambda}")]
    SpeedTooLarge { speed: f64, max: f64, lambda: f64 },
    #[error("no feasible alpha for lambda {lambda}, speed {speed}")]
    NoFeasibleAlpha { lambda: f64, speed: f64 },
    #[error("alpha {0} outside (0, 1]")]
    BadAlpha(f64),
    #[error("players are coincident; phase geometry undefined")]
    CoincidentPlayers,
    #[error("arc {arc} outside [0, {max}]")]
    ArcOutOfRange { arc: f64, max: f64 },
    #[error("closed form undefined: {0}")]
    Undefined(String),
}

/// Largest feasible phase constant alpha for localization parameter
/// `lambda` and tracker speed `s`: the positive root of
/// alpha^2 (1 + 1/(2 lambda^2)) + 4 alpha s + 4 s^2 - 9 = 0.
///
/// Evaluates to (sqrt(46) - 4)/3 ~ 0.9274 at (1, 1) and ~0.6809 at
/// (2, required_speedup(2)); tends to 1 as lambda grows with s = 1.
pub fn alpha_max(lambda: f64, s: f64) -> Result<f64, AdversaryError> {
    if !(lambda >= 1.0) {
        return Err(AdversaryError::BadLambda(lambda));
    }
    if !(s >= 1.0) {
        return Err(AdversaryError::BadSpeed(s));
    }
    if s > 1.0 {
        let max = required_speedup(lambda).map_err(|_| AdversaryError::BadLambda(lambda))?;
        if s > max * (1.0 + 1e-12) {
            return Err(AdversaryError::SpeedTooLarge {
                speed: s,
                max,
                lambda,
            });
        }
    }
    let a = 1.0 + 1.0 / (2.0 * lambda * lambda);
    let disc = 16.0 * s * s - 4.0 * a * (4.0 * s * s - 9.0);
    if disc < 0.0 {
        return Err(AdversaryError::NoFeasibleAlpha { lambda, speed: s });
    }
    let alpha = (-4.0 * s + disc.sqrt()) / (2.0 * a);
    if alpha <= 0.0 {
        return Err(AdversaryError::NoFeasibleAlpha { lambda, speed: s });
    }
    Ok(alpha)
}

/// Closed-form lower bound on the distance at the start of the next phase:
/// d_i * sqrt((2s - 3)^2 + alpha^2 (s - 1/2) / lambda^2).
///
/// At s = 1 this reduces to d_i * sqrt(1 + alpha^2 / (2 lambda^2)).
pub fn predicted_phase_growth(d_i: f64, lambda: f64, alpha: f64, s: f64) -> f64 {
    let t = 2.0 * s - 3.0;
    d_i * (t * t + alpha * alpha * (s - 0.5) / (lambda * lambda)).sqrt()
}

/// Exact end-of-phase distance against a tracker that spends its whole
/// budget moving along the phase axis (which greedy does):
/// d_i * sqrt(5 + 4s^2 - 4s - 2(2s - 1) sqrt(4 - alpha^2/lambda^2)).
/// `predicted_phase_growth` is the closed-form lower bound of this value.
pub fn exact_phase_growth(d_i: f64, lambda: f64, alpha: f64, s: f64) -> f64 {
    let root = (4.0 - alpha * alpha / (lambda * lambda)).sqrt();
    d_i * (5.0 + 4.0 * s * s - 4.0 * s - 2.0 * (2.0 * s - 1.0) * root).sqrt()
}

/// Maximum tracker speed against which the phase strategy still prevents
/// the distance from shrinking, for lambda >= 2:
/// s = (B - sqrt(B^2 - 8 + alpha^2/(2 lambda^2))) / 2 with
/// B = (12 - (alpha/lambda)^2) / 4.
pub fn max_target_safe_speed(lambda: f64, alpha: f64) -> Result<f64, AdversaryError> {
    if !(lambda >= 2.0) {
        return Err(AdversaryError::Undefined(format!(
            "requires lambda >= 2, got {lambda}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(AdversaryError::BadAlpha(alpha));
    }
    let b = (12.0 - (alpha / lambda) * (alpha / lambda)) / 4.0;
    let rad = b * b - 8.0 + alpha * alpha / (2.0 * lambda * lambda);
    if rad < 0.0 {
        return Err(AdversaryError::Undefined(
            "negative radicand in safe-speed form".into(),
        ));
    }
    Ok((b - rad.sqrt()) / 2.0)
}

/// One unobstructed phase's construction: the isosceles triangle with apex
/// at the target's phase-start position, equal sides 2*d_i toward the two
/// branch endpoints, and base midpoint q_c straight away from the tracker.
#[derive(Clone, Debug)]
pub struct PhaseGeometry {
    pub apex: Point,
    pub qa: Point,
    pub qb: Point,
    pub qc: Point,
    /// Unit vector from apex to q_c (pointing directly away from the
    /// tracker's phase-start position).
    pub axis: Point,
    pub d_i: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl PhaseGeometry {
    pub fn side_length(&self) -> f64 {
        2.0 * self.d_i
    }

    pub fn half_base(&self) -> f64 {
        self.alpha * self.d_i / self.lambda
    }

    /// True position at arc length `arc` along the chosen branch side.
    pub fn branch_position(&self, arc: f64, branch: Branch) -> Point {
        let end = match branch {
            Branch::A => &self.qa,
            Branch::B => &self.qb,
        };
        let t = (arc / self.side_length()).clamp(0.0, 1.0);
        self.apex.lerp(end, t)
    }
}

/// Plans one phase from the current configuration. The base q_a q_b is
/// perpendicular to the tracker-target line, the base midpoint q_c lies at
/// distance d_i*sqrt(4 - (alpha/lambda)^2) beyond the apex, and both equal
/// sides have length exactly 2*d_i.
pub fn plan_phase(
    p_i: &Point,
    q_i: &Point,
    lambda: f64,
    alpha: f64,
) -> Result<PhaseGeometry, AdversaryError> {
    if !(lambda >= 1.0) {
        return Err(AdversaryError::BadLambda(lambda));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(AdversaryError::BadAlpha(alpha));
    }
    let to_target = q_i.sub(p_i);
    let d_i = to_target.norm();
    if d_i == 0.0 {
        return Err(AdversaryError::CoincidentPlayers);
    }
    let axis = to_target.scale(1.0 / d_i);
    let ratio = alpha / lambda;
    let axis_offset = d_i * (4.0 - ratio * ratio).sqrt();
    let qc = q_i.axpy(axis_offset, &axis);
    let normal = axis
        .orthonormal()
        .ok_or(AdversaryError::CoincidentPlayers)?;
    let half_base = alpha * d_i / lambda;
    let qa = qc.axpy(half_base, &normal);
    let qb = qc.axpy(-half_base, &normal);
    Ok(PhaseGeometry {
        apex: q_i.clone(),
        qa,
        qb,
        qc,
        axis,
        d_i,
        alpha,
        lambda,
    })
}

/// The branch-independent observation at arc length `arc` along either
/// side: the perpendicular projection of the true position onto the line
/// through the apex and q_c.
pub fn phase_observation(geom: &PhaseGeometry, arc: f64) -> Result<Point, AdversaryError> {
    let max = geom.side_length();
    if !(0.0..=max * (1.0 + 1e-12)).contains(&arc) {
        return Err(AdversaryError::ArcOutOfRange { arc, max });
    }
    // cos of the half-apex angle: adjacent (axis offset) over hypotenuse 2d.
    let ratio = geom.alpha / (2.0 * geom.lambda);
    let cos_theta = (1.0 - ratio * ratio).sqrt();
    Ok(geom.apex.axpy(arc.min(max) * cos_theta, &geom.axis))
}

/// Commits the finished phase to the branch endpoint farther from the
/// tracker; exact ties resolve to A, matching the convention that a tracker
/// on the dividing line counts as having chosen the B side.
pub fn resolve_phase(geom: &PhaseGeometry, tracker_final: &Point) -> Branch {
    let da = tracker_final.distance(&geom.qa);
    let db = tracker_final.distance(&geom.qb);
    if da >= db {
        Branch::A
    } else {
        Branch::B
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT46: f64 = 6.782329983125268; // sqrt(46)

    #[test]
    fn alpha_max_reference_points() {
        let a11 = alpha_max(1.0, 1.0).unwrap();
        assert!((a11 - (SQRT46 - 4.0) / 3.0).abs() < 1e-12);

        let s2 = required_speedup(2.0).unwrap();
        let a2 = alpha_max(2.0, s2).unwrap();
        assert!((0.68..=0.69).contains(&a2), "alpha {a2}");

        // Large lambda, s = 1: the quadratic becomes a^2 + 4a - 5 = 0.
        let a_inf = alpha_max(1e9, 1.0).unwrap();
        assert!((a_inf - 1.0).abs() < 1e-6);
    }

    #[test]
    fn alpha_max_rejects_excessive_speed() {
        let s = required_speedup(2.0).unwrap();
        assert!(alpha_max(2.0, s * 1.01).is_err());
        assert!(alpha_max(0.5, 1.0).is_err());
    }

    #[test]
    fn predicted_growth_reference_points() {
        // d=1, lambda=2, alpha=0.927, s=1: sqrt(1 + 0.927^2/8).
        let g = predicted_phase_growth(1.0, 2.0, 0.927, 1.0);
        assert!((g - 1.0523384080228184).abs() < 1e-9);

        // d=1, lambda=2, alpha=0.68, s=2/sqrt(3): evaluate the general form.
        let s = 2.0 / 3.0_f64.sqrt();
        let g2 = predicted_phase_growth(1.0, 2.0, 0.68, s);
        assert!((g2 - 0.7433775992178914).abs() < 1e-9);
    }

    #[test]
    fn growth_forms_agree_at_unit_speed() {
        for lambda in [1.0, 2.0, 5.0, 32.0] {
            for alpha in [0.3, 0.68, 0.927] {
                let general = predicted_phase_growth(1.7, lambda, alpha, 1.0);
                let reduced = 1.7 * (1.0 + alpha * alpha / (2.0 * lambda * lambda)).sqrt();
                assert!((general - reduced).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_growth_dominates_predicted() {
        for lambda in [2.0, 4.0, 8.0, 16.0] {
            let alpha = alpha_max(lambda, 1.0).unwrap();
            let exact = exact_phase_growth(1.0, lambda, alpha, 1.0);
            let predicted = predicted_phase_growth(1.0, lambda, alpha, 1.0);
            assert!(exact >= predicted, "{exact} < {predicted}");
        }
    }

    #[test]
    fn safe_speed_reference_points() {
        let s = max_target_safe_speed(2.0, 0.68).unwrap();
        assert!((s - 1.0151153047446437).abs() < 1e-9);
        // Large-lambda limit: (3 - sqrt(9 - 8)) / 2 = 1.
        let s_inf = max_target_safe_speed(1e9, 0.68).unwrap();
        assert!((s_inf - 1.0).abs() < 1e-6);
        assert!(max_target_safe_speed(1.5, 0.68).is_err());
    }

    #[test]
    fn safe_speed_sandwich() {
        for lambda in 2..=64 {
            let lambda = lambda as f64;
            let s_req = required_speedup(lambda).unwrap();
            let alpha = alpha_max(lambda, s_req).unwrap();
            let s_safe = max_target_safe_speed(lambda, alpha).unwrap();
            assert!(
                (1.0..=s_req + 1e-12).contains(&s_safe),
                "lambda {lambda}: 1 <= {s_safe} <= {s_req} violated"
            );
        }
    }

    #[test]
    fn plan_phase_geometry() {
        let p = Point::xy(0.0, 0.0);
        let q = Point::xy(1.0, 0.0);
        let g = plan_phase(&p, &q, 2.0, 0.927).unwrap();
        // Base midpoint straight ahead at apex + sqrt(4 - (alpha/lambda)^2).
        let expect_offset = (4.0_f64 - (0.927 / 2.0) * (0.927 / 2.0)).sqrt();
        assert!((g.qc.x() - (1.0 + expect_offset)).abs() < 1e-12);
        assert!(g.qc.y().abs() < 1e-12);
        assert!((g.qa.y() - 0.4635).abs() < 1e-12);
        assert!((g.qb.y() + 0.4635).abs() < 1e-12);
        // Equal sides have length exactly 2 d_i.
        assert!((g.apex.distance(&g.qa) - 2.0).abs() < 1e-9);
        assert!((g.apex.distance(&g.qb) - 2.0).abs() < 1e-9);
        // q_c is the base midpoint.
        let mid = g.qa.lerp(&g.qb, 0.5);
        assert!(mid.distance(&g.qc) < 1e-12);
    }

    #[test]
    fn plan_phase_degenerates_for_huge_lambda() {
        let g = plan_phase(&Point::xy(0.0, 0.0), &Point::xy(1.0, 0.0), 1e12, 0.9).unwrap();
        assert!(g.qa.distance(&g.qb) < 1e-9);
        assert!(g.qa.distance(&g.qc) < 1e-9);
    }

    #[test]
    fn plan_phase_rejects_coincident_players() {
        let p = Point::xy(1.0, 1.0);
        assert!(matches!(
            plan_phase(&p, &p, 2.0, 0.9),
            Err(AdversaryError::CoincidentPlayers)
        ));
    }

    #[test]
    fn observation_projection() {
        let g = plan_phase(&Point::xy(0.0, 0.0), &Point::xy(1.0, 0.0), 2.0, 0.927).unwrap();
        // arc = 0: the apex itself.
        let at0 = phase_observation(&g, 0.0).unwrap();
        assert!(at0.distance(&g.apex) < 1e-12);
        // arc = 2 d_i: projection of a branch endpoint is q_c.
        let at_end = phase_observation(&g, 2.0).unwrap();
        assert!(at_end.distance(&g.qc) < 1e-9);
        // arc = d_i: apex + d_i cos(theta) along the axis.
        let cos_theta = (1.0_f64 - (0.927 / 4.0) * (0.927 / 4.0)).sqrt();
        let at_mid = phase_observation(&g, 1.0).unwrap();
        assert!((at_mid.x() - (1.0 + cos_theta)).abs() < 1e-12);
        // Out of range.
        assert!(phase_observation(&g, 2.5).is_err());
        assert!(phase_observation(&g, -0.1).is_err());
        // The projection equals its definition: observation error is purely
        // perpendicular and the branch position projects onto the axis line.
        for arc in [0.25, 0.8, 1.3, 1.9] {
            let obs = phase_observation(&g, arc).unwrap();
            let qa_pos = g.branch_position(arc, Branch::A);
            let offset = qa_pos.sub(&obs);
            assert!(offset.dot(&g.axis).abs() < 1e-12, "arc {arc}");
        }
    }

    #[test]
    fn resolve_follows_argmax_with_tie_to_a() {
        let g = plan_phase(&Point::xy(0.0, 0.0), &Point::xy(1.0, 0.0), 2.0, 0.927).unwrap();
        // Tracker below the axis line: farther from the upper endpoint.
        assert_eq!(resolve_phase(&g, &Point::xy(2.0, -0.5)), Branch::A);
        // Exactly on the line: tie resolves to A.
        assert_eq!(resolve_phase(&g, &Point::xy(2.0, 0.0)), Branch::A);
        // Standing on q_a: B is farther.
        assert_eq!(resolve_phase(&g, &g.qa.clone()), Branch::B);
    }
}
