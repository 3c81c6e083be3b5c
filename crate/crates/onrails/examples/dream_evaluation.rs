//! Per-category success-rate evaluation: feed the samples' own
//! trajectories back as predictions (upper bound) and the expert
//! trajectories (lane-change failure case).

use onrails::config::Config;
use onrails::pipeline::{
    dream_eval, dream_generate, dream_report_csv, read_dream_samples, write_predictions, Prediction,
};
use onrails::scene::{save_scene_log, LaneType, SceneLog};
use onrails::synth::FrameBuilder;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let log_path = dir.path().join("log.jsonl");
    let log = SceneLog {
        frames: (0..20)
            .map(|i| {
                FrameBuilder::new(i)
                    .timestamp(i as f64 * 0.25)
                    .ego_speed(4.0 + (i % 3) as f64)
                    .straight_route(80.0)
                    .lanes(vec![LaneType::DrivingSame], vec![])
                    .cone_ahead("cone", 11.0 + (i % 5) as f64, 0.8)
                    .build()
            })
            .collect(),
    };
    save_scene_log(&log, &log_path)?;

    let config = Config::default();
    let samples_path = dir.path().join("dreams.jsonl");
    let summary = dream_generate(&log_path, &config, &samples_path, 1)?;
    println!(
        "generated {} samples over {} frames\n",
        summary.samples, summary.frames
    );

    let samples = read_dream_samples(&samples_path)?;
    let self_preds: Vec<Prediction> = samples
        .iter()
        .map(|s| Prediction {
            sample_id: s.sample_id.clone(),
            trajectory: s.trajectory.clone(),
        })
        .collect();
    let preds_path = dir.path().join("self.jsonl");
    write_predictions(&self_preds, &preds_path)?;
    println!("success rates when predicting the dreamed trajectory itself:");
    print!(
        "{}",
        dream_report_csv(&dream_eval(&preds_path, &samples_path)?)
    );

    let expert_preds: Vec<Prediction> = samples
        .iter()
        .map(|s| Prediction {
            sample_id: s.sample_id.clone(),
            trajectory: s.expert.clone(),
        })
        .collect();
    let expert_path = dir.path().join("expert.jsonl");
    write_predictions(&expert_preds, &expert_path)?;
    println!("\nsuccess rates when predicting the expert trajectory instead:");
    print!(
        "{}",
        dream_report_csv(&dream_eval(&expert_path, &samples_path)?)
    );
    Ok(())
}
