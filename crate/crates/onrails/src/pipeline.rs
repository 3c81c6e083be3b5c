//! Batch pipelines behind the command-line interface: dream-sample
//! generation and evaluation, route scoring, commentary labeling, and
//! bucket building/sampling.
//!
//! Frame processing streams in fixed-size chunks with a worker pool;
//! output order follows input order regardless of worker scheduling, so
//! results are byte-identical for any `--jobs` value.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::buckets::{build_buckets, sample_epoch, BucketError, BucketIndex};
use crate::commentary::label_frame;
use crate::config::Config;
use crate::dreamer::{generate_frame, DreamError, DreamMode, DreamSample};
use crate::metrics::{
    comfortness, dream_success, driving_score, efficiency, infraction_score, route_completion,
    route_success, DreamReport, MetricsError, PenaltyTable, RouteRun, Termination,
};
use crate::scene::{load_scene_log, SceneError, SceneLogReader, Trajectory};

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DREAM_SCHEMA: &str = "dream-samples/v1";
pub const PRED_SCHEMA: &str = "dream-preds/v1";
pub const RUN_SCHEMA: &str = "route-runs/v1";
pub const LABEL_SCHEMA: &str = "commentary-labels/v1";

const CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("frame {frame_id}: {source}")]
    Frame { frame_id: u64, source: DreamError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Buckets(#[from] BucketError),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing prediction for sample `{0}`")]
    MissingPrediction(String),
    #[error("no input records")]
    EmptyInput,
    #[error("worker pool: {0}")]
    Pool(String),
}

fn json_line<T: Serialize>(w: &mut impl Write, value: &T) -> Result<(), PipelineError> {
    serde_json::to_writer(&mut *w, value)
        .map_err(|e| PipelineError::Io(std::io::Error::other(e)))?;
    w.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DreamHeader {
    schema: String,
    generator_version: String,
    seed: u64,
}

/// A line of the generated dataset: each frame contributes its commentary
/// label followed by its dream samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum DatasetRecord {
    Commentary { frame_id: u64, text: String },
    Dream(DreamSample),
}

/// Generation summary printed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub frames: usize,
    pub samples: usize,
    pub per_mode: BTreeMap<DreamMode, usize>,
    pub unsafe_fraction: f64,
}

/// Generate dream samples for every frame of a log, streaming them to
/// `out` as line-delimited records with a provenance header.
pub fn dream_generate(
    log_path: &Path,
    config: &Config,
    out_path: &Path,
    jobs: usize,
) -> Result<GenerateSummary, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let mut reader = SceneLogReader::open(log_path)?;
    let mut writer = BufWriter::new(File::create(out_path)?);
    json_line(
        &mut writer,
        &DreamHeader {
            schema: DREAM_SCHEMA.into(),
            generator_version: GENERATOR_VERSION.into(),
            seed: config.dreamer.seed,
        },
    )?;

    let mut frames = 0usize;
    let mut samples = 0usize;
    let mut unsafe_count = 0usize;
    let mut per_mode: BTreeMap<DreamMode, usize> = BTreeMap::new();
    loop {
        let mut chunk = Vec::with_capacity(CHUNK);
        for item in reader.by_ref().take(CHUNK) {
            chunk.push(item?);
        }
        if chunk.is_empty() {
            break;
        }
        type FrameOutput = (u64, String, Vec<DreamSample>);
        let results: Vec<Result<FrameOutput, PipelineError>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|frame| {
                    let label = label_frame(frame, &config.commentary);
                    let samples = generate_frame(frame, &config.dreamer, &config.dynamics)
                        .map_err(|source| PipelineError::Frame {
                            frame_id: frame.frame_id,
                            source,
                        })?;
                    Ok((frame.frame_id, label.full_text, samples))
                })
                .collect()
        });
        for result in results {
            let (frame_id, text, frame_samples) = result?;
            frames += 1;
            json_line(&mut writer, &DatasetRecord::Commentary { frame_id, text })?;
            for sample in frame_samples {
                samples += 1;
                *per_mode.entry(sample.mode).or_default() += 1;
                if !sample.safe {
                    unsafe_count += 1;
                }
                json_line(&mut writer, &DatasetRecord::Dream(sample))?;
            }
        }
    }
    writer.flush()?;
    Ok(GenerateSummary {
        frames,
        samples,
        per_mode,
        unsafe_fraction: if samples == 0 {
            0.0
        } else {
            unsafe_count as f64 / samples as f64
        },
    })
}

/// Read the dream samples of a generated dataset, skipping the provenance
/// header and interleaved commentary records.
pub fn read_dream_samples(path: &Path) -> Result<Vec<DreamSample>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        if line_no == 1 {
            let header: DreamHeader =
                serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
                    line: line_no,
                    message: format!("header: {e}"),
                })?;
            if header.schema != DREAM_SCHEMA {
                return Err(PipelineError::Malformed {
                    line: line_no,
                    message: format!("unsupported schema `{}`", header.schema),
                });
            }
            continue;
        }
        let record: DatasetRecord =
            serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if let DatasetRecord::Dream(sample) = record {
            samples.push(sample);
        }
    }
    Ok(samples)
}

#[derive(Serialize, Deserialize)]
struct SchemaOnly {
    schema: String,
}

/// A predicted trajectory keyed by the sample it answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub trajectory: Trajectory,
}

pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, Trajectory>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut map = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        if line_no == 1 {
            let header: SchemaOnly =
                serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
                    line: line_no,
                    message: format!("header: {e}"),
                })?;
            if header.schema != PRED_SCHEMA {
                return Err(PipelineError::Malformed {
                    line: line_no,
                    message: format!("unsupported schema `{}`", header.schema),
                });
            }
            continue;
        }
        let pred: Prediction =
            serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        map.insert(pred.sample_id, pred.trajectory);
    }
    Ok(map)
}

/// Write a prediction file in the format read by [`read_predictions`].
pub fn write_predictions(preds: &[Prediction], path: &Path) -> Result<(), PipelineError> {
    let mut w = BufWriter::new(File::create(path)?);
    json_line(
        &mut w,
        &SchemaOnly {
            schema: PRED_SCHEMA.into(),
        },
    )?;
    for p in preds {
        json_line(&mut w, p)?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluate predictions against dream samples: per-category success rates.
pub fn dream_eval(pred_path: &Path, samples_path: &Path) -> Result<DreamReport, PipelineError> {
    let samples = read_dream_samples(samples_path)?;
    let predictions = read_predictions(pred_path)?;
    if samples.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let mut outcomes = Vec::with_capacity(samples.len());
    for sample in &samples {
        let pred = predictions
            .get(&sample.sample_id)
            .ok_or_else(|| PipelineError::MissingPrediction(sample.sample_id.clone()))?;
        outcomes.push((sample.mode, dream_success(pred, sample)?));
    }
    Ok(DreamReport::from_outcomes(&outcomes))
}

/// One-row CSV with a column per category plus the average, in percent.
pub fn dream_report_csv(report: &DreamReport) -> String {
    let header: Vec<&str> = DreamMode::ALL
        .iter()
        .map(|m| m.name())
        .chain(["avg"])
        .collect();
    let cells: Vec<String> = DreamMode::ALL
        .iter()
        .map(|m| {
            report
                .per_mode
                .get(m)
                .map(|s| format!("{:.2}", s.success_rate))
                .unwrap_or_default()
        })
        .chain([report
            .average
            .map(|a| format!("{a:.2}"))
            .unwrap_or_default()])
        .collect();
    format!("{}\n{}\n", header.join(","), cells.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    pub driving_score: f64,
    pub route_completion: f64,
    pub infraction_score: f64,
    pub bench2drive_ds: f64,
    pub success: bool,
    pub efficiency: Option<f64>,
    pub comfortable: Option<bool>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMeans {
    pub driving_score: f64,
    pub route_completion: f64,
    pub infraction_score: f64,
    pub bench2drive_ds: f64,
    pub success_rate: f64,
    pub efficiency: Option<f64>,
    /// Percentage of comfortable routes among those with traces.
    pub comfortness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub rows: Vec<ScoreRow>,
    pub mean: ScoreMeans,
}

pub fn read_route_runs(path: &Path) -> Result<Vec<RouteRun>, PipelineError> {
    let reader = BufReader::new(File::open(path)?);
    let mut runs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        if line_no == 1 {
            let header: SchemaOnly =
                serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
                    line: line_no,
                    message: format!("header: {e}"),
                })?;
            if header.schema != RUN_SCHEMA {
                return Err(PipelineError::Malformed {
                    line: line_no,
                    message: format!("unsupported schema `{}`", header.schema),
                });
            }
            continue;
        }
        let run: RouteRun = serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if run.completed_length > run.route_length + 1e-9 {
            return Err(PipelineError::Malformed {
                line: line_no,
                message: format!(
                    "completed_length {} exceeds route_length {}",
                    run.completed_length, run.route_length
                ),
            });
        }
        if !run.surrounding_speed.is_empty() && run.surrounding_speed.len() != run.kinematics.len()
        {
            return Err(PipelineError::Malformed {
                line: line_no,
                message: "surrounding_speed length differs from kinematics traces".into(),
            });
        }
        runs.push(run);
    }
    Ok(runs)
}

pub fn write_route_runs(runs: &[RouteRun], path: &Path) -> Result<(), PipelineError> {
    let mut w = BufWriter::new(File::create(path)?);
    json_line(
        &mut w,
        &SchemaOnly {
            schema: RUN_SCHEMA.into(),
        },
    )?;
    for run in runs {
        json_line(&mut w, run)?;
    }
    w.flush()?;
    Ok(())
}

/// Score a set of route runs: per-route rows plus arithmetic means.
pub fn score_runs(runs_path: &Path, config: &Config) -> Result<ScoreReport, PipelineError> {
    let runs = read_route_runs(runs_path)?;
    if runs.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let table = &config.metrics.penalties;
    // Bench2Drive ignores the minimum-speed penalty
    let b2d_table = PenaltyTable {
        min_speed: 1.0,
        ..table.clone()
    };
    let rows: Vec<ScoreRow> = runs
        .iter()
        .map(|run| {
            let comfortable = (!run.kinematics.is_empty())
                .then(|| comfortness(run, &config.metrics.comfort).map(|c| c.overall))
                .transpose()?;
            Ok(ScoreRow {
                id: run.id.clone(),
                driving_score: driving_score(run, table),
                route_completion: route_completion(run),
                infraction_score: infraction_score(&run.infractions, table),
                bench2drive_ds: driving_score(run, &b2d_table),
                success: route_success(run),
                efficiency: efficiency(run),
                comfortable,
                termination: run.termination,
            })
        })
        .collect::<Result<_, PipelineError>>()?;

    let n = rows.len() as f64;
    let mean_of = |f: fn(&ScoreRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let efficiencies: Vec<f64> = rows.iter().filter_map(|r| r.efficiency).collect();
    let comfort_flags: Vec<bool> = rows.iter().filter_map(|r| r.comfortable).collect();
    let mean = ScoreMeans {
        driving_score: mean_of(|r| r.driving_score),
        route_completion: mean_of(|r| r.route_completion),
        infraction_score: mean_of(|r| r.infraction_score),
        bench2drive_ds: mean_of(|r| r.bench2drive_ds),
        success_rate: 100.0 * rows.iter().filter(|r| r.success).count() as f64 / n,
        efficiency: (!efficiencies.is_empty())
            .then(|| efficiencies.iter().sum::<f64>() / efficiencies.len() as f64),
        comfortness: (!comfort_flags.is_empty()).then(|| {
            100.0 * comfort_flags.iter().filter(|c| **c).count() as f64 / comfort_flags.len() as f64
        }),
    };
    Ok(ScoreReport { rows, mean })
}

/// Score report as CSV: one row per route and a trailing mean row.
pub fn score_report_csv(report: &ScoreReport) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id",
        "driving_score",
        "route_completion",
        "infraction_score",
        "bench2drive_ds",
        "success",
        "efficiency",
        "comfortable",
        "termination",
    ])
    .map_err(csv_err)?;
    let opt = |v: &Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for r in &report.rows {
        w.write_record([
            r.id.clone(),
            format!("{:.4}", r.driving_score),
            format!("{:.4}", r.route_completion),
            format!("{:.4}", r.infraction_score),
            format!("{:.4}", r.bench2drive_ds),
            r.success.to_string(),
            opt(&r.efficiency),
            r.comfortable.map(|c| c.to_string()).unwrap_or_default(),
            serde_json::to_value(r.termination)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let m = &report.mean;
    w.write_record([
        "mean".to_string(),
        format!("{:.4}", m.driving_score),
        format!("{:.4}", m.route_completion),
        format!("{:.4}", m.infraction_score),
        format!("{:.4}", m.bench2drive_ds),
        format!("{:.2}", m.success_rate),
        opt(&m.efficiency),
        opt(&m.comfortness),
        String::new(),
    ])
    .map_err(csv_err)?;
    String::from_utf8(
        w.into_inner()
            .map_err(|e| PipelineError::Pool(e.to_string()))?,
    )
    .map_err(|e| PipelineError::Pool(e.to_string()))
}

fn csv_err(e: csv::Error) -> PipelineError {
    PipelineError::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub frame_id: u64,
    pub text: String,
}

/// Commentary labels for every frame, streamed as line-delimited records.
pub fn label_log(
    log_path: &Path,
    config: &Config,
    writer: &mut impl Write,
) -> Result<usize, PipelineError> {
    let mut reader = SceneLogReader::open(log_path)?;
    json_line(
        writer,
        &SchemaOnly {
            schema: LABEL_SCHEMA.into(),
        },
    )?;
    let mut count = 0usize;
    loop {
        let mut chunk = Vec::with_capacity(CHUNK);
        for item in reader.by_ref().take(CHUNK) {
            chunk.push(item?);
        }
        if chunk.is_empty() {
            break;
        }
        for frame in &chunk {
            let label = label_frame(frame, &config.commentary);
            json_line(
                writer,
                &LabelRecord {
                    frame_id: frame.frame_id,
                    text: label.full_text,
                },
            )?;
            count += 1;
        }
    }
    Ok(count)
}

/// Build the bucket index for a log and serialize it as JSON.
pub fn buckets_build(log_path: &Path, config: &Config) -> Result<BucketIndex, PipelineError> {
    let log = load_scene_log(log_path)?;
    let specs = config.buckets.effective_specs();
    Ok(build_buckets(&log, &specs)?)
}

/// Sample an epoch of frame ids from a stored bucket index.
pub fn buckets_sample(
    index_path: &Path,
    config: &Config,
    n: usize,
    seed: u64,
) -> Result<Vec<u64>, PipelineError> {
    let text = std::fs::read_to_string(index_path)?;
    let index: BucketIndex = serde_json::from_str(&text).map_err(|e| PipelineError::Malformed {
        line: 1,
        message: e.to_string(),
    })?;
    let specs = config.buckets.effective_specs();
    Ok(sample_epoch(&index, &specs, n, seed)?)
}
