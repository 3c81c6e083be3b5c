//! Build the default training buckets over a synthetic log and draw a
//! weighted epoch.

use std::collections::BTreeMap;

use onrails::buckets::{build_buckets, default_buckets, sample_epoch};
use onrails::scene::{HazardDirection, SceneLog};
use onrails::synth::FrameBuilder;

fn main() -> anyhow::Result<()> {
    let frames = (0..200u64)
        .map(|i| {
            let mut b = FrameBuilder::new(i)
                .timestamp(i as f64 * 0.25)
                .town(if i % 2 == 0 { "Town03" } else { "Town12" })
                .expert_accel(match i % 5 {
                    0 => 1.8,
                    1 => -2.5,
                    2 => 0.3, // inside the excluded (-1, 1) band
                    3 => 1.2,
                    _ => -0.4,
                })
                .expert_steer(if i % 7 == 0 { 0.4 } else { 0.0 });
            if i % 11 == 0 {
                b = b.vehicle_hazard(HazardDirection::Left);
            }
            if i % 13 == 0 {
                b = b.walker_hazard();
            }
            b.build()
        })
        .collect();
    let log = SceneLog { frames };

    let specs = default_buckets();
    let index = build_buckets(&log, &specs)?;
    println!("bucket sizes over {} frames:", log.len());
    for (name, ids) in &index.buckets {
        println!("  {name:<22} {:5}", ids.len());
    }

    let ids = sample_epoch(&index, &specs, 1000, 7)?;
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for id in &ids {
        *counts.entry(*id % 5).or_default() += 1;
    }
    println!("\n1000 draws, grouped by frame id mod 5 (2 never matches a niche bucket):");
    for (group, count) in counts {
        println!("  id % 5 == {group}: {count}");
    }
    Ok(())
}
