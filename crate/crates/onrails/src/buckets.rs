//! Training-data buckets over a scene log: declarative per-frame predicates
//! plus weighted epoch sampling.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{ActorClass, HazardDirection, LightState, SceneFrame, SceneLog};

#[derive(Debug, Error)]
pub enum BucketError {
    #[error("empty scene log")]
    EmptyLog,
    #[error("all weighted buckets are empty")]
    AllBucketsEmpty,
}

/// Declarative frame predicate. Frames missing the context fields a
/// predicate reads simply fail it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BucketPredicate {
    /// Expert acceleration within [min, max).
    AccelRange {
        min: f64,
        max: f64,
    },
    /// Stopped ego about to accelerate.
    StartFromStop,
    /// Expert steering within [min, max).
    SteerRange {
        min: f64,
        max: f64,
    },
    VehicleHazard {
        direction: HazardDirection,
    },
    WalkerHazard,
    StopSign,
    RedLight,
    /// Active lane deviation (swerving around an obstacle).
    Swerve,
    TownIn {
        names: Vec<String>,
    },
    /// Whole-dataset catch-all.
    All,
}

impl BucketPredicate {
    pub fn matches(&self, frame: &SceneFrame) -> bool {
        match self {
            BucketPredicate::AccelRange { min, max } => frame
                .context
                .expert_accel
                .map(|a| a >= *min && a < *max)
                .unwrap_or(false),
            BucketPredicate::StartFromStop => {
                frame.ego.speed < 0.1
                    && frame
                        .context
                        .expert_accel
                        .map(|a| a >= 1.0)
                        .unwrap_or(false)
            }
            BucketPredicate::SteerRange { min, max } => frame
                .context
                .expert_steer
                .map(|s| s >= *min && s < *max)
                .unwrap_or(false),
            BucketPredicate::VehicleHazard { direction } => {
                frame.context.vehicle_hazard == Some(*direction)
            }
            BucketPredicate::WalkerHazard => frame.context.walker_hazard,
            BucketPredicate::StopSign => {
                frame.actors.iter().any(|a| a.class == ActorClass::StopSign)
            }
            BucketPredicate::RedLight => frame.actors.iter().any(|a| {
                a.class == ActorClass::TrafficLight && a.light_state == Some(LightState::Red)
            }),
            BucketPredicate::Swerve => frame.context.deviation_phase.is_some(),
            BucketPredicate::TownIn { names } => frame
                .context
                .town
                .as_ref()
                .map(|t| names.iter().any(|n| n == t))
                .unwrap_or(false),
            BucketPredicate::All => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSpec {
    pub name: String,
    pub predicate: BucketPredicate,
    /// Sampling weight; normalized over the spec set when drawing.
    pub weight: f64,
}

impl BucketSpec {
    fn new(name: &str, predicate: BucketPredicate, weight: f64) -> Self {
        Self {
            name: name.into(),
            predicate,
            weight,
        }
    }
}

/// Default bucket set: acceleration bands (excluding |a| < 1) with a
/// start-from-stop bucket, two steering buckets (excluding going straight),
/// three vehicle-hazard directions, stop-sign / red-light / walker-hazard,
/// swerve, old towns, and a whole-dataset catch-all. Uniform weights.
pub fn default_buckets() -> Vec<BucketSpec> {
    let mut specs = vec![
        BucketSpec::new(
            "brake_hard",
            BucketPredicate::AccelRange {
                min: f64::NEG_INFINITY,
                max: -2.0,
            },
            1.0,
        ),
        BucketSpec::new(
            "brake",
            BucketPredicate::AccelRange {
                min: -2.0,
                max: -1.0,
            },
            1.0,
        ),
        BucketSpec::new(
            "accel",
            BucketPredicate::AccelRange { min: 1.0, max: 2.0 },
            1.0,
        ),
        BucketSpec::new(
            "accel_hard",
            BucketPredicate::AccelRange {
                min: 2.0,
                max: f64::INFINITY,
            },
            1.0,
        ),
        BucketSpec::new("start_from_stop", BucketPredicate::StartFromStop, 1.0),
        BucketSpec::new(
            "steer_left",
            BucketPredicate::SteerRange {
                min: 0.05,
                max: f64::INFINITY,
            },
            1.0,
        ),
        BucketSpec::new(
            "steer_right",
            BucketPredicate::SteerRange {
                min: f64::NEG_INFINITY,
                max: -0.05,
            },
            1.0,
        ),
        BucketSpec::new(
            "vehicle_hazard_left",
            BucketPredicate::VehicleHazard {
                direction: HazardDirection::Left,
            },
            1.0,
        ),
        BucketSpec::new(
            "vehicle_hazard_right",
            BucketPredicate::VehicleHazard {
                direction: HazardDirection::Right,
            },
            1.0,
        ),
        BucketSpec::new(
            "vehicle_hazard_front",
            BucketPredicate::VehicleHazard {
                direction: HazardDirection::Front,
            },
            1.0,
        ),
        BucketSpec::new("stop_sign", BucketPredicate::StopSign, 1.0),
        BucketSpec::new("red_light", BucketPredicate::RedLight, 1.0),
        BucketSpec::new("walker_hazard", BucketPredicate::WalkerHazard, 1.0),
        BucketSpec::new("swerve", BucketPredicate::Swerve, 1.0),
        BucketSpec::new(
            "old_towns",
            BucketPredicate::TownIn {
                names: (1..=10).map(|i| format!("Town{i:02}")).collect(),
            },
            1.0,
        ),
        BucketSpec::new("all", BucketPredicate::All, 1.0),
    ];
    let n = specs.len() as f64;
    for s in &mut specs {
        s.weight = 1.0 / n;
    }
    specs
}

/// Frame-id index per bucket, deterministically ordered.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BucketIndex {
    pub buckets: BTreeMap<String, Vec<u64>>,
}

/// Assign every frame to each bucket whose predicate it satisfies.
pub fn build_buckets(log: &SceneLog, specs: &[BucketSpec]) -> Result<BucketIndex, BucketError> {
    assert!(!specs.is_empty(), "bucket spec list must not be empty");
    if log.is_empty() {
        return Err(BucketError::EmptyLog);
    }
    let mut buckets: BTreeMap<String, Vec<u64>> =
        specs.iter().map(|s| (s.name.clone(), Vec::new())).collect();
    for frame in &log.frames {
        for spec in specs {
            if spec.predicate.matches(frame) {
                buckets.get_mut(&spec.name).unwrap().push(frame.frame_id);
            }
        }
    }
    for ids in buckets.values_mut() {
        ids.sort_unstable();
    }
    Ok(BucketIndex { buckets })
}

/// Draw `n` frame ids: pick a bucket by weight, then a frame uniformly
/// within it. Empty and zero-weight buckets are excluded up front, which
/// matches redrawing until a non-empty bucket is hit.
pub fn sample_epoch(
    index: &BucketIndex,
    specs: &[BucketSpec],
    n: usize,
    seed: u64,
) -> Result<Vec<u64>, BucketError> {
    assert!(n > 0, "sample count must be positive");
    let eligible: Vec<(&Vec<u64>, f64)> = specs
        .iter()
        .filter_map(|s| {
            let ids = index.buckets.get(&s.name)?;
            (!ids.is_empty() && s.weight > 0.0).then_some((ids, s.weight))
        })
        .collect();
    if eligible.is_empty() {
        return Err(BucketError::AllBucketsEmpty);
    }
    let dist =
        WeightedIndex::new(eligible.iter().map(|(_, w)| *w)).expect("weights validated above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let (ids, _) = eligible[dist.sample(&mut rng)];
            ids[rng.random_range(0..ids.len())]
        })
        .collect())
}
