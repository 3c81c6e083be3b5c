//! Generate all five dream modes for one frame and print the instruction,
//! safety verdict, and trajectory endpoints of every sample.

use onrails::config::Config;
use onrails::dreamer::generate_frame;
use onrails::scene::{LaneType, LightState};
use onrails::synth::FrameBuilder;

fn main() -> anyhow::Result<()> {
    let config = Config::default();
    let frame = FrameBuilder::new(0)
        .ego_speed(5.0)
        .straight_route(80.0)
        .lanes(
            vec![LaneType::DrivingSame, LaneType::DrivingOpposite],
            vec![LaneType::Parking, LaneType::Sidewalk],
        )
        .cone_ahead("cone", 12.0, 1.5)
        .vehicle("suv", 22.0, 0.0, 0.0, 2.0)
        .traffic_light("light", 40.0, LightState::Red)
        .build();

    let samples = generate_frame(&frame, &config.dreamer, &config.dynamics)?;
    println!("frame 0: ego at 5.0 m/s, {} samples\n", samples.len());
    for sample in &samples {
        let end = sample.trajectory.speed_wps.last().unwrap();
        let end_speed = sample
            .trajectory
            .decoded_speeds(sample.dt)
            .last()
            .copied()
            .unwrap_or(0.0);
        println!("[{}] {}", sample.sample_id, sample.instruction);
        println!(
            "    safe: {:<5}  endpoint: ({:6.2}, {:6.2})  end speed: {:5.2} m/s",
            sample.safe, end.x, end.y, end_speed
        );
        if let Some(reason) = &sample.rejection_reason {
            println!("    rejection: {reason}");
        }
        if let Some(hit) = &sample.collision {
            println!("    collides with `{}` at step {}", hit.actor_id, hit.step);
        }
        println!();
    }
    Ok(())
}
