//! Seeded parameter sweeps: configs in, result maps and manifests out.
//!
//! A run evaluates every grid cell independently (keyed by cell index and
//! global seed) on a worker pool and collects them in index order, so the
//! number of workers never changes the output.

pub mod cells;
pub mod config;
pub mod result;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

pub use cells::{evaluate_cell, metric_names, CellOutput, Trace};
pub use config::{Axis, ExperimentConfig, ExperimentKind, Settings};
pub use result::{
    best_power_projection, compare_baseline, CellRecord, CellStatus, Metric, Provenance, ResultMap,
};

use crate::error::{Error, Result};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "MICRORING_WORKERS";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream `stream` of `seed`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Seed of grid cell `index`.
pub fn cell_seed(global: u64, index: usize) -> u64 {
    sub_seed(global, index as u64)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write per-cell traces and readout weights under `trace/`.
    pub dump_traces: bool,
    /// Worker threads; `None` reads [`WORKERS_ENV`], then the core count.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub map: ResultMap,
    pub baseline: Option<ResultMap>,
    pub diverged: usize,
}

fn worker_count(opts: &RunOptions) -> Result<usize> {
    if let Some(n) = opts.workers {
        return Ok(n.max(1));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::invalid(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

enum CellResult {
    Done(CellOutput),
    Diverged,
}

/// Load `path` and run it.
pub fn run(path: impl AsRef<Path>, opts: &RunOptions) -> Result<RunSummary> {
    run_config(&ExperimentConfig::load(path)?, opts)
}

/// Evaluate every cell of `cfg` and write the artifact tree into
/// `cfg.output`.
pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let started = Instant::now();
    let workers = worker_count(opts)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let n = cfg.n_cells();
    let outcomes: Vec<Result<CellResult>> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| match evaluate_cell(cfg, i, cell_seed(cfg.seed, i), opts.dump_traces) {
                Ok(out) if out.metrics.iter().all(|m| m.value.is_finite()) => Ok(CellResult::Done(out)),
                Ok(_) | Err(Error::Divergence { .. }) => Ok(CellResult::Diverged),
                Err(e) => Err(e),
            })
            .collect()
    });

    let names = metric_names(cfg);
    let base_names = cells::baseline_names(cfg);
    let provenance = Provenance::new(cfg.kind.name(), &cfg.source_hash, cfg.seed);
    let mut records = Vec::with_capacity(n);
    let mut base_records = Vec::with_capacity(n);
    let mut details = Vec::new();
    let mut diverged = 0;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let seed = cell_seed(cfg.seed, i);
        let record = |status, metrics| CellRecord {
            index: i,
            seed,
            status,
            metrics,
        };
        match outcome.map_err(|e| Error::invalid(format!("cell {i}: {e}")))? {
            CellResult::Done(out) => {
                records.push(record(CellStatus::Ok, out.metrics));
                if let Some(b) = out.baseline {
                    base_records.push(record(CellStatus::Ok, b));
                }
                details.push((i, out.trace, out.artifacts));
            }
            CellResult::Diverged => {
                diverged += 1;
                let nan = |k: usize| vec![Metric::plain(f64::NAN); k];
                records.push(record(CellStatus::Diverged, nan(names.len())));
                if let Some(b) = &base_names {
                    base_records.push(record(CellStatus::Diverged, nan(b.len())));
                }
            }
        }
    }
    let map = ResultMap::new(cfg.axes.clone(), names, records, provenance.clone())?;
    let baseline = match base_names {
        Some(b) => Some(ResultMap::new(cfg.axes.clone(), b, base_records, provenance)?),
        None => None,
    };

    let out = &cfg.output;
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut write_map = |name: &str, m: &ResultMap| -> Result<()> {
        fs::write(out.join(name), m.to_csv_string()?)?;
        files.push(name.to_string());
        Ok(())
    };
    write_map("map.csv", &map)?;
    if let Some(b) = &baseline {
        write_map("baseline.csv", b)?;
        write_map("rb.csv", &compare_baseline(&map, b)?)?;
    }
    let ber_metrics: Vec<&str> = map.metrics.iter().map(String::as_str).filter(|m| m.starts_with("ber")).collect();
    if map.axes.iter().any(|a| a.name == "power") && !ber_metrics.is_empty() {
        let best = best_power_projection(&map, &ber_metrics)?;
        write_map("best.csv", &best)?;
        if let Some(b) = &baseline {
            let shared: Vec<&str> = ber_metrics.iter().copied().filter(|m| b.metric_index(m).is_some()).collect();
            let best_in = best_power_projection(b, &shared)?;
            write_map("best_baseline.csv", &best_in)?;
            write_map("rb_best.csv", &compare_baseline(&best, &best_in)?)?;
        }
    }
    fs::write(out.join("map.json"), serde_json::to_string_pretty(&map)?)?;
    files.push("map.json".into());
    if cfg.kind == ExperimentKind::StabilityMap {
        fs::write(out.join("stability.csv"), stability_csv(cfg, &map))?;
        files.push("stability.csv".into());
    }
    for (i, trace, artifacts) in details {
        if let (true, Some(t)) = (opts.dump_traces, trace) {
            let dir = out.join("trace");
            fs::create_dir_all(&dir)?;
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            fs::write(dir.join(format!("cell_{i:04}.csv")), buf)?;
        }
        if !artifacts.is_empty() {
            let dir = out.join("cells");
            fs::create_dir_all(&dir)?;
            for a in artifacts {
                fs::write(dir.join(format!("cell_{i:04}_{}", a.name)), a.contents)?;
            }
        }
    }

    let manifest = json!({
        "kind": cfg.kind.name(),
        "preset": cfg.preset,
        "seed": cfg.seed,
        "config_sha256": cfg.source_hash,
        "code_version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "workers": workers,
        "cells": n,
        "diverged": diverged,
        "sampling": sampling_info(cfg),
        "dataset": dataset_info(cfg),
        "device": cfg.device,
        "axes": cfg.axes,
        "settings": cfg.settings,
        "files": files,
        "traces_dumped": opts.dump_traces,
    });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;

    Ok(RunSummary {
        output: out.clone(),
        map,
        baseline,
        diverged,
    })
}

/// `P,delta_nu,class,sp_freq_hz` rows, one per cell.
fn stability_csv(cfg: &ExperimentConfig, map: &ResultMap) -> String {
    let mut s = String::from("P,delta_nu,class,sp_freq_hz\n");
    for cell in &map.cells {
        let Settings::Stability(st) = cells::cell_settings(cfg, cell.index) else {
            unreachable!("stability run")
        };
        let class = match cell.status {
            CellStatus::Diverged => "diverged",
            CellStatus::Ok if cell.metrics[0].value > 0.5 => "self_pulsing",
            CellStatus::Ok => "stable",
        };
        s += &format!(
            "{:e},{:e},{class},{:e}\n",
            st.power, st.detuning, cell.metrics[1].value
        );
    }
    s
}

/// Simulated time resolution of every cell, for the manifest.
fn sampling_info(cfg: &ExperimentConfig) -> serde_json::Value {
    let mut rates = Vec::new();
    let mut solver = Vec::new();
    for i in 0..cfg.n_cells() {
        let (rate, dt) = match cells::cell_settings(cfg, i) {
            Settings::Stability(s) => (1.0 / s.sample_interval, s.solver_dt),
            Settings::Logic(s) => (s.sample_rate, s.solver_dt),
            Settings::Xor(s) => {
                let spacing = 1.0 / (s.bitrate * s.n_virtual as f64);
                let spn = ((20.0 * spacing / s.tau_fc).ceil()).max(4.0);
                (spn / spacing, spacing / spn)
            }
            Settings::Feedback(s) => (s.n_virtual as f64 / s.bit_width, s.solver_dt),
            Settings::Dcp(s) => {
                let r = s.bitrate * s.samples_per_bit as f64;
                (r, 1.0 / r)
            }
            Settings::Iris(s) => {
                let spn = ((20.0 * s.node_spacing / s.tau_fc).ceil()).max(4.0);
                (spn / s.node_spacing, s.node_spacing / spn)
            }
        };
        rates.push(rate);
        solver.push(dt);
    }
    let range = |v: &[f64]| {
        json!({
            "min": v.iter().copied().fold(f64::INFINITY, f64::min),
            "max": v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    };
    json!({ "sample_rate_hz": range(&rates), "solver_step_s": range(&solver) })
}

fn dataset_info(cfg: &ExperimentConfig) -> serde_json::Value {
    match (&cfg.settings, cfg.kind) {
        (Settings::Logic(s), _) => json!({"generator": "uniform_bits", "seed": cfg.seed, "length": s.readout.len()}),
        (Settings::Xor(s), _) => json!({"generator": "uniform_bits", "seed": cfg.seed, "length": s.readout.len()}),
        (Settings::Feedback(s), ExperimentKind::Narma10) => json!({
            "generator": "narma10", "seed": cfg.seed, "length": s.readout.len(), "input_scale": 2.0,
            "mask_seed": s.mask_seed,
        }),
        (Settings::Feedback(s), ExperimentKind::MackeyGlass) => json!({
            "generator": "mackey_glass",
            "params": crate::tasks::MackeyGlassParams::default(),
            "stride": s.stride, "length": s.readout.len(), "input_scaling": "min_max",
            "mask_seed": s.mask_seed,
        }),
        (Settings::Feedback(s), _) => json!({
            "generator": "uniform", "seed": cfg.seed, "length": s.readout.len(), "mask_seed": s.mask_seed,
        }),
        (Settings::Dcp(s), _) => json!({"generator": "prbs", "order": s.prbs_order}),
        (Settings::Iris(s), _) => json!({
            "generator": "iris",
            "source": s.data.as_ref().map_or("bundled".to_string(), |p| p.display().to_string()),
            "split_seed": cfg.seed,
        }),
        _ => serde_json::Value::Null,
    }
}
