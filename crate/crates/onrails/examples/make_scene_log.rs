//! Build a small synthetic scene log and write it to disk.
//!
//! The produced file is valid input for the `onrails` binary:
//!
//! ```text
//! cargo run --example make_scene_log -- demo_log.jsonl
//! cargo run --bin onrails -- dream generate --log demo_log.jsonl --out dreams.jsonl --seed 7
//! cargo run --bin onrails -- label --log demo_log.jsonl
//! ```

use std::path::PathBuf;

use onrails::scene::{save_scene_log, LaneType, LightState, SceneLog};
use onrails::synth::FrameBuilder;

fn main() -> anyhow::Result<()> {
    let path: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "demo_log.jsonl".into())
        .into();

    let mut frames = Vec::new();
    for i in 0..24u64 {
        let t = i as f64 * 0.25;
        let speed = 4.0 + 2.0 * (i % 4) as f64 * 0.5;
        let mut builder = FrameBuilder::new(i)
            .timestamp(t)
            .ego_speed(speed)
            .straight_route(80.0)
            .lanes(vec![LaneType::DrivingSame], vec![LaneType::Parking])
            .town("Town12")
            .expert_accel(if i % 5 == 0 { 1.6 } else { 0.4 })
            .expert_steer(0.0);
        if i % 3 == 0 {
            builder = builder.cone_ahead("cone", 14.0, 1.0);
        }
        if i % 4 == 0 {
            builder = builder
                .vehicle("lead", 18.0, 0.0, 0.0, 3.0)
                .idm_leader("lead", 18.0, 3.0);
        }
        if i % 6 == 0 {
            builder = builder.traffic_light("tl", 30.0, LightState::Green);
        }
        frames.push(builder.build());
    }

    let log = SceneLog { frames };
    save_scene_log(&log, &path)?;
    println!("wrote {} frames to {}", log.len(), path.display());
    Ok(())
}
