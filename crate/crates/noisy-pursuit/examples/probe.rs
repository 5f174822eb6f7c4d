// Scratch probe for development; replaced by real examples later.
use noisy_pursuit::engine::{self, EnvSpec, SimConfig, TargetSpec};
use noisy_pursuit::environments::build_gadget;
use noisy_pursuit::trackers::TrackerKind;
use noisy_pursuit::adversaries::{alpha_max, max_target_safe_speed};
use noisy_pursuit::trackers::required_speedup;

fn main() {
    // Criterion 1: random targets, envelope sup (D-
    // D0)/t <= 1.05/l^2, dt from the plain resolution rule.
    let t0 = std::time::Instant::now();
    for lambda in [2.0, 16.0] {
        let mut worst = f64::NEG_INFINITY;
        for seed in 0..100u64 {
            let cfg = SimConfig {
                t_max: 200.0,
                lambda,
                target: TargetSpec::Random,
                seed,
                record_trace: false,
                ..SimConfig::default()
            };
            let out = engine::run(&cfg).unwrap();
            worst = worst.max(out.summary.max_gain_ratio);
        }
        println!(
            "random lambda={lambda}: worst ratio={:.3e} cap={:.3e} ({:?})",
            worst,
            1.05 / (lambda * lambda),
            t0.elapsed()
        );
    }

    // Criterion 11: 3D phase adversary + random.
    for lambda in [2.0, 4.0] {
        let cfg = SimConfig {
            t_max: 200.0,
            lambda,
            target: TargetSpec::PhaseAdversary,
            env: EnvSpec::Unobstructed { dim: 3 },
            ..SimConfig::default()
        };
        let out = engine::run_two_worlds(&cfg).unwrap();
        let slope = engine::fit_growth_rate(&out.trace, 20.0).unwrap();
        println!(
            "3d phase lambda={lambda}: slope={:.6} worst_margin={:.2e}",
            slope,
            out.phases
                .iter()
                .map(|p| p.d_next - p.predicted)
                .fold(f64::INFINITY, f64::min)
        );
    }

    // Criterion 7: disc-greedy vs random graph walks on a gadget arena.
    let t0 = std::time::Instant::now();
    for lambda in [2.0, 8.0] {
        let arena = build_gadget(1.0, lambda).unwrap();
        let json = arena.graph.to_json();
        let mut worst = f64::NEG_INFINITY;
        let mut runs = 0;
        for seed in 0..20u64 {
            let cfg = SimConfig {
                t_max: 20.0,
                lambda,
                tracker: TrackerKind::DiscGreedy,
                target: TargetSpec::Random,
                env: EnvSpec::GraphJson(json.clone()),
                seed,
                record_trace: false,
                ..SimConfig::default()
            };
            let out = engine::run(&cfg).unwrap();
            let floor = 100.0 * 2.0 * out.summary.dt;
            for w in out.tracker_phases.windows(2) {
                let dt_phase = w[1].t - w[0].t;
                if dt_phase >= floor {
                    worst = worst.max((w[1].d - w[0].d) / dt_phase);
                }
            }
            runs += 1;
        }
        println!(
            "random graph walks lambda={lambda}: runs={runs} worst up-ratio={:.4} cap={:.4} ({:?})",
            worst,
            2.0 / (lambda + 1.0) + 0.02,
            t0.elapsed()
        );
    }

    // Criterion 5: margin run at s just under the safe speed.
    for lambda in [2.0, 4.0, 8.0, 16.0] {
        let s_req = required_speedup(lambda).unwrap();
        let alpha = alpha_max(lambda, s_req).unwrap();
        let mts = max_target_safe_speed(lambda, alpha).unwrap();
        let s_run = mts - 0.01 * (mts - 1.0);
        let cfg = SimConfig {
            t_max: 100.0,
            lambda,
            speed: s_run,
            alpha: Some(alpha),
            target: TargetSpec::PhaseAdversary,
            ..SimConfig::default()
        };
        let out = engine::run_two_worlds(&cfg).unwrap();
        let worst_phase_end = out
            .phases
            .iter()
            .map(|p| p.d_next)
            .fold(f64::INFINITY, f64::min);
        println!(
            "margin lambda={lambda}: s={s_run:.6} worst phase-end D={:.6} floor={:.6} status={:?}",
            worst_phase_end,
            1.0 - 10.0 * out.summary.dt,
            out.summary.status
        );
    }
}
