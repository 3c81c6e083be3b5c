//! World-on-rails collision forecasting: the ego rolls forward while every
//! actor replays its recorded track, and oriented boxes are tested each tick.

use onrails::dynamics::{forecast_ego, obb_overlap, DynamicsConfig, SpeedPlan};
use onrails::geom::Pose;
use onrails::scene::OrientedBox;
use onrails::synth::FrameBuilder;

fn main() -> anyhow::Result<()> {
    let cfg = DynamicsConfig::default();

    println!("# separating-axis box tests");
    let ego = OrientedBox::new(Pose::new(0.0, 0.0, 0.0), 2.3, 0.95);
    for (desc, other) in [
        (
            "car ahead, clear",
            OrientedBox::new(Pose::new(8.0, 0.0, 0.0), 2.3, 0.95),
        ),
        (
            "car ahead, touching",
            OrientedBox::new(Pose::new(4.5, 0.0, 0.0), 2.3, 0.95),
        ),
        (
            "crossing car, rotated",
            OrientedBox::new(Pose::new(3.0, 1.0, 1.2), 2.3, 0.95),
        ),
    ] {
        println!("  {desc:<24} overlap: {}", obb_overlap(&ego, &other));
    }

    println!("\n# forecast against a crossing pedestrian (on rails)");
    let frame = FrameBuilder::new(0)
        .ego_speed(5.0)
        .straight_route(60.0)
        .pedestrian("walker", 9.0, -4.0, std::f64::consts::FRAC_PI_2, 1.5)
        .build();
    let rollout = forecast_ego(
        &frame,
        &frame.route.dense_path,
        &SpeedPlan::constant_speed(5.0, 10),
        10,
        &cfg,
    )?;
    for (k, pose) in rollout.poses.iter().enumerate() {
        let walker = frame.actor("walker").unwrap().state_at(k).unwrap();
        println!(
            "  step {k:2}: ego x={:6.2}  walker y={:6.2}",
            pose.x, walker.pose.y
        );
    }
    match &rollout.collided {
        Some(hit) => println!(
            "  -> collision with `{}` at step {}",
            hit.actor_id, hit.step
        ),
        None => println!("  -> no collision within the horizon"),
    }

    println!("\n# same scene, braking instead");
    let braking = forecast_ego(
        &frame,
        &frame.route.dense_path,
        &SpeedPlan::constant_speed(0.0, 10),
        10,
        &cfg,
    )?;
    match &braking.collided {
        Some(hit) => println!(
            "  -> collision with `{}` at step {}",
            hit.actor_id, hit.step
        ),
        None => println!(
            "  -> no collision; stopped after {:.2} m",
            braking.total_distance()
        ),
    }
    Ok(())
}
