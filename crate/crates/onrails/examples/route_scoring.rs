//! Score a handful of synthetic route runs: driving score, route
//! completion, infraction score, comfort, and efficiency.

use onrails::config::Config;
use onrails::metrics::{InfractionEvent, InfractionKind, KinematicsTrace, RouteRun, Termination};
use onrails::pipeline::{score_report_csv, score_runs, write_route_runs};

fn smooth_trace(n: usize) -> KinematicsTrace {
    KinematicsTrace {
        speed: vec![8.0; n],
        long_accel: vec![0.2; n],
        lat_accel: vec![0.4; n],
        jerk_mag: vec![0.8; n],
        long_jerk: vec![0.3; n],
        yaw_rate: vec![0.05; n],
        yaw_accel: vec![0.02; n],
    }
}

fn main() -> anyhow::Result<()> {
    let runs = vec![
        RouteRun {
            id: "clean_run".into(),
            route_length: 150.0,
            completed_length: 150.0,
            offroad_length: 0.0,
            infractions: vec![],
            termination: Termination::Finished,
            kinematics: smooth_trace(64),
            surrounding_speed: vec![Some(9.0); 64],
        },
        RouteRun {
            id: "ran_red_light".into(),
            route_length: 150.0,
            completed_length: 150.0,
            offroad_length: 0.0,
            infractions: vec![InfractionEvent::new(InfractionKind::RedLight, 12.0, 80.0)],
            termination: Termination::Finished,
            kinematics: smooth_trace(64),
            surrounding_speed: vec![Some(8.0); 64],
        },
        RouteRun {
            id: "hit_pedestrian_then_blocked".into(),
            route_length: 150.0,
            completed_length: 90.0,
            offroad_length: 6.0,
            infractions: vec![InfractionEvent::new(
                InfractionKind::PedestrianCollision,
                20.0,
                88.0,
            )],
            termination: Termination::Blocked,
            kinematics: smooth_trace(48),
            surrounding_speed: vec![Some(7.0); 48],
        },
    ];

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("runs.jsonl");
    write_route_runs(&runs, &path)?;
    let report = score_runs(&path, &Config::default())?;
    print!("{}", score_report_csv(&report)?);
    println!(
        "\nJSON means:\n{}",
        serde_json::to_string_pretty(&report.mean)?
    );
    Ok(())
}
