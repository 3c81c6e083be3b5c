//! Kinematic bicycle rollouts: turning-circle fidelity, lateral recovery
//! from an offset, and longitudinal step-target tracking.

use onrails::dynamics::{bicycle_advance, forecast_ego, ControlAction, DynamicsConfig, SpeedPlan};
use onrails::geom::Pose;
use onrails::synth::FrameBuilder;

fn main() -> anyhow::Result<()> {
    let cfg = DynamicsConfig::default();

    println!("# constant-steer turning radius vs closed form L/tan(delta)");
    for steer in [0.05, 0.2, 0.5] {
        let frame = FrameBuilder::new(0).ego_speed(5.0).build();
        let mut state = frame.ego;
        let action = ControlAction { steer, accel: 0.0 };
        let yaw_rate = state.speed / state.wheelbase * f64::tan(steer);
        let steps = ((std::f64::consts::PI / 2.0) / (yaw_rate * cfg.dt)).ceil() as usize;
        let start = state.pose.position();
        for _ in 0..steps {
            state = bicycle_advance(&state, &action, cfg.dt, cfg.substeps);
        }
        let phi = yaw_rate * cfg.dt * steps as f64;
        let radius = state.pose.position().distance(start) / (2.0 * (phi / 2.0).sin());
        let expected = state.wheelbase / steer.tan();
        println!(
            "  steer {steer:>4}: measured {radius:8.3} m  expected {expected:8.3} m  error {:+.3}%",
            100.0 * (radius - expected) / expected
        );
    }

    println!("\n# lateral recovery from a 1 m offset at 5 m/s");
    let frame = FrameBuilder::new(1).ego_speed(5.0).build();
    let path: Vec<Pose> = (0..=80).map(|i| Pose::new(i as f64, -1.0, 0.0)).collect();
    let rollout = forecast_ego(&frame, &path, &SpeedPlan::constant_speed(5.0, 40), 40, &cfg)?;
    for (k, pose) in rollout.poses.iter().enumerate().step_by(8) {
        println!(
            "  t={:5.2} s  cross-track {:+.3} m",
            k as f64 * cfg.dt,
            pose.y + 1.0
        );
    }
    println!(
        "  final cross-track error: {:.4} m",
        (rollout.final_pose().y + 1.0).abs()
    );

    println!("\n# speed step 0 -> 8 m/s");
    let frame = FrameBuilder::new(2)
        .ego_speed(0.0)
        .straight_route(200.0)
        .build();
    let rollout = forecast_ego(
        &frame,
        &frame.route.dense_path,
        &SpeedPlan::constant_speed(8.0, 20),
        20,
        &cfg,
    )?;
    for (k, v) in rollout.speeds.iter().enumerate().step_by(2) {
        println!("  t={:5.2} s  v={v:6.3} m/s", k as f64 * cfg.dt);
    }
    Ok(())
}
