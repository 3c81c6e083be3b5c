//! Offline, deterministic driving-log simulation and evaluation.
//!
//! From recorded scene logs this crate generates instruction-conditioned
//! alternative ego trajectories ("dream" samples) with a kinematic bicycle
//! model under the world-on-rails assumption, produces rule-based commentary
//! labels, and scores trajectories and route runs with a closed-loop driving
//! metric suite.
//!
//! Start with the runnable programs in `examples/` — one per major
//! capability — or the `onrails` binary for batch pipelines.

pub mod buckets;
pub mod commentary;
pub mod config;
pub mod dreamer;
pub mod dynamics;
pub mod geom;
pub mod metrics;
pub mod pipeline;
pub mod scene;
pub mod synth;
