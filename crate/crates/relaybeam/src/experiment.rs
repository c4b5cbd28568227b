//! Experiment orchestration and tabular output.
//!
//! Four commands over Monte Carlo channel trials: `solve` (one constrained
//! solve per trial), `region` (a full rate-energy sweep per trial), `sweep`
//! (one solve per trial per swept parameter value), and `compare` (every
//! configured scheme per trial, optionally along a sweep). Per-trial rows
//! are followed by aggregate rows whose `experiment` column carries a
//! `_mean` suffix; a trial's channels depend only on `seed ^ trial`, so any
//! trial can be reproduced in isolation and trials can run in parallel
//! without changing a single output byte.

use std::io::{self, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, Scheme, SweepParameter};
use crate::model::{self, dbw_to_watts, ChannelSet, ModelError, SystemParams};
use crate::region::{self, RegionError};
use crate::baselines;

/// The pinned CSV header.
pub const CSV_HEADER: &str = "experiment,trial,scheme,formulation,k,p_s_dbw,p_j_dbw,\
p_r_max_dbw,epsilon,q_watts,rate_bits,q_max_watts,status,rank1_gap,solver_ms";

/// Stream separator mixed into the zero-forcing draw so its random direction
/// is independent of the channel stream but still a pure function of
/// `(seed, trial)`.
const ZF_STREAM: u64 = 0x7a66_7a66_7a66_7a66;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Region,
    Sweep,
    Compare,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Region => "region",
            Command::Sweep => "sweep",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid system parameters: {0}")]
    Params(#[from] ModelError),
}

/// One output row. Every command writes the same 15 columns.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub experiment: String,
    pub trial: u64,
    pub scheme: String,
    pub formulation: String,
    pub k: usize,
    pub p_s_dbw: f64,
    pub p_j_dbw: f64,
    pub p_r_max_dbw: f64,
    pub epsilon: f64,
    pub q_watts: f64,
    pub rate_bits: f64,
    pub q_max_watts: f64,
    pub status: String,
    pub rank1_gap: f64,
    pub solver_ms: u64,
}

// ── Entry point ──────────────────────────────────────────────────────────

/// Run a command over all trials and return its rows (per-trial rows in
/// `(trial, sweep index)` order, then the aggregate rows).
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Vec<Record>, ExperimentError> {
    let seed = cfg.require_seed()?;
    // Validate the parameter set once up front so a bad configuration fails
    // before any trial starts.
    params_for(cfg)?;
    match cmd {
        Command::Solve => run_solve(cfg, seed),
        Command::Region => run_region(cfg, seed),
        Command::Sweep => run_sweep(cfg, seed),
        Command::Compare => run_compare(cfg, seed),
    }
}

// ── solve ────────────────────────────────────────────────────────────────

fn run_solve(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Record>, ExperimentError> {
    let trials: Vec<Vec<Record>> = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let ch = trial_channels(cfg, seed, t);
            let p = params_for(cfg).expect("validated");
            vec![proposed_record("solve", cfg, cfg, t, &ch, &p)]
        })
        .collect();
    let mut records: Vec<Record> = trials.into_iter().flatten().collect();
    records.push(mean_record("solve_mean", cfg, cfg, &records));
    Ok(records)
}

// ── region ───────────────────────────────────────────────────────────────

fn run_region(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Record>, ExperimentError> {
    let trials: Vec<Vec<Record>> = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|t| region_trial(cfg, seed, t))
        .collect();

    let mut records: Vec<Record> = trials.iter().flatten().cloned().collect();

    // Aggregate per grid index over the trials that delivered a full grid.
    let full: Vec<&Vec<Record>> = trials.iter().filter(|rows| rows.len() == cfg.n_grid).collect();
    for i in 0..cfg.n_grid {
        let group: Vec<Record> = full.iter().map(|rows| rows[i].clone()).collect();
        if group.is_empty() {
            break;
        }
        let mut row = mean_record("region_mean", cfg, cfg, &group);
        row.q_watts = mean(group.iter().map(|r| r.q_watts));
        row.q_max_watts = mean(group.iter().map(|r| r.q_max_watts));
        records.push(row);
    }
    Ok(records)
}

fn region_trial(cfg: &ExperimentConfig, seed: u64, t: u64) -> Vec<Record> {
    let ch = trial_channels(cfg, seed, t);
    let p = params_for(cfg).expect("validated");
    let base = |q: f64| Record {
        experiment: "region".into(),
        trial: t,
        scheme: Scheme::Proposed.as_str().into(),
        formulation: formulation_label(cfg),
        q_watts: q,
        ..blank(cfg)
    };
    match region::region_sweep(&ch, &p, cfg.n_grid, cfg.formulation) {
        Ok(result) => {
            let mut rows: Vec<Record> = Vec::with_capacity(cfg.n_grid);
            for pt in &result.points {
                rows.push(Record {
                    rate_bits: pt.rate_bits,
                    q_max_watts: result.q_max,
                    status: "optimal".into(),
                    rank1_gap: pt.rank1_gap,
                    solver_ms: u64::from(pt.iterations),
                    ..base(pt.q_watts)
                });
            }
            for f in &result.failures {
                rows.push(Record {
                    q_max_watts: result.q_max,
                    status: f.status_label().into(),
                    ..base(f.q_watts)
                });
            }
            rows.sort_by(|a, b| a.q_watts.partial_cmp(&b.q_watts).expect("finite grid"));
            rows
        }
        Err(e) => vec![Record { status: status_label(&e).into(), ..base(0.0) }],
    }
}

// ── sweep ────────────────────────────────────────────────────────────────

fn run_sweep(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Record>, ExperimentError> {
    let Some(sweep) = &cfg.sweep else {
        return Err(ExperimentError::Config(ConfigError::Invalid {
            field: "sweep",
            reason: "the sweep command needs sweep_parameter/from/to/step".to_string(),
        }));
    };
    let values = sweep.values();
    let slots: Vec<ExperimentConfig> =
        values.iter().map(|&v| apply_sweep(cfg, sweep.parameter, v)).collect();

    let trials: Vec<Vec<Record>> = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let ch = trial_channels(cfg, seed, t);
            slots
                .iter()
                .map(|slot| {
                    let p = params_for(slot).expect("validated");
                    proposed_record("sweep", cfg, slot, t, &ch, &p)
                })
                .collect()
        })
        .collect();

    let mut records: Vec<Record> = trials.iter().flatten().cloned().collect();
    for (j, slot) in slots.iter().enumerate() {
        let group: Vec<Record> = trials.iter().map(|rows| rows[j].clone()).collect();
        records.push(mean_record("sweep_mean", cfg, slot, &group));
    }
    Ok(records)
}

// ── compare ──────────────────────────────────────────────────────────────

fn run_compare(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Record>, ExperimentError> {
    let slots: Vec<ExperimentConfig> = match &cfg.sweep {
        Some(sweep) => {
            sweep.values().iter().map(|&v| apply_sweep(cfg, sweep.parameter, v)).collect()
        }
        None => vec![cfg.clone()],
    };

    let trials: Vec<Vec<Record>> = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let ch = trial_channels(cfg, seed, t);
            let mut rows = Vec::with_capacity(slots.len() * cfg.schemes.len());
            for slot in &slots {
                let p = params_for(slot).expect("validated");
                for &scheme in &cfg.schemes {
                    rows.push(scheme_record(cfg, slot, seed, t, scheme, &ch, &p));
                }
            }
            rows
        })
        .collect();

    let mut records: Vec<Record> = trials.iter().flatten().cloned().collect();
    let per_trial = slots.len() * cfg.schemes.len();
    for (j, slot) in slots.iter().enumerate() {
        for (s, _) in cfg.schemes.iter().enumerate() {
            let idx = j * cfg.schemes.len() + s;
            let group: Vec<Record> = trials
                .iter()
                .filter(|rows| rows.len() == per_trial)
                .map(|rows| rows[idx].clone())
                .collect();
            records.push(mean_record("compare_mean", cfg, slot, &group));
        }
    }
    Ok(records)
}

/// One scheme evaluated on one trial: the design is built per the scheme's
/// own rules, then always rated under the true slot parameters.
fn scheme_record(
    cfg: &ExperimentConfig,
    slot: &ExperimentConfig,
    seed: u64,
    t: u64,
    scheme: Scheme,
    ch: &ChannelSet,
    p: &SystemParams,
) -> Record {
    let base = Record {
        experiment: "compare".into(),
        trial: t,
        scheme: scheme.as_str().into(),
        q_watts: slot.q_target,
        ..blank(slot)
    };
    match scheme {
        Scheme::Proposed => Record {
            scheme: base.scheme.clone(),
            ..proposed_record("compare", cfg, slot, t, ch, p)
        },
        Scheme::NoJammer => {
            // The oblivious designer: full pipeline at P_J = 0 and no energy
            // demand, rated under the true jammer.
            let oblivious = p.with_p_j(0.0).with_q_target(0.0);
            match region::solve_master(ch, &oblivious, cfg.formulation) {
                Ok(ms) => {
                    let rate = model::capacity(&ms.beamformer, ch, p).unwrap_or(0.0);
                    Record {
                        formulation: ms.kind.as_str().into(),
                        rate_bits: rate,
                        status: "optimal".into(),
                        rank1_gap: ms.rank1_gap,
                        solver_ms: u64::from(ms.iterations),
                        ..base
                    }
                }
                Err(e) => Record { status: status_label(&e).into(), ..base },
            }
        }
        Scheme::Pmf | Scheme::Zf | Scheme::Dr => {
            let design = match scheme {
                Scheme::Pmf => baselines::pmf(ch, p),
                Scheme::Dr => baselines::dr(ch, p),
                Scheme::Zf => {
                    // Fresh stream per call: the drawn direction depends only
                    // on (seed, trial), not on sweep position or scheme order.
                    let mut rng = ChaCha8Rng::seed_from_u64((seed ^ t) ^ ZF_STREAM);
                    baselines::zf(ch, p, &mut rng)
                }
                _ => unreachable!(),
            };
            match design {
                Ok(a) => Record {
                    formulation: "none".into(),
                    rate_bits: model::capacity(&a, ch, p).unwrap_or(0.0),
                    status: "optimal".into(),
                    ..base
                },
                Err(_) => Record { formulation: "none".into(), status: "error".into(), ..base },
            }
        }
    }
}

// ── Shared helpers ───────────────────────────────────────────────────────

fn trial_channels(cfg: &ExperimentConfig, seed: u64, t: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t);
    model::sample_channels(&mut rng, cfg.k).expect("k >= 1 validated")
}

fn params_for(cfg: &ExperimentConfig) -> Result<SystemParams, ModelError> {
    SystemParams::new(
        cfg.k,
        dbw_to_watts(cfg.p_s_dbw),
        dbw_to_watts(cfg.p_j_dbw),
        dbw_to_watts(cfg.p_r_max_dbw),
        cfg.sigma_r2,
        cfg.sigma_d2,
        cfg.q_target,
        cfg.epsilon,
    )
}

fn apply_sweep(cfg: &ExperimentConfig, parameter: SweepParameter, v: f64) -> ExperimentConfig {
    let mut slot = cfg.clone();
    match parameter {
        SweepParameter::PsDbw => slot.p_s_dbw = v,
        SweepParameter::PjDbw => slot.p_j_dbw = v,
        SweepParameter::PrMaxDbw => slot.p_r_max_dbw = v,
        SweepParameter::QTarget => slot.q_target = v,
    }
    slot
}

/// Row skeleton carrying the slot parameters and zeroed outputs.
fn blank(slot: &ExperimentConfig) -> Record {
    Record {
        experiment: String::new(),
        trial: 0,
        scheme: String::new(),
        formulation: "none".into(),
        k: slot.k,
        p_s_dbw: slot.p_s_dbw,
        p_j_dbw: slot.p_j_dbw,
        p_r_max_dbw: slot.p_r_max_dbw,
        epsilon: slot.epsilon,
        q_watts: 0.0,
        rate_bits: 0.0,
        q_max_watts: 0.0,
        status: String::new(),
        rank1_gap: 0.0,
        solver_ms: 0,
    }
}

/// Label for rows that describe a solve the config controls: the pinned
/// formulation, or the dimension rule's choice under `auto`.
fn formulation_label(cfg: &ExperimentConfig) -> String {
    cfg.formulation.unwrap_or_else(|| region::default_formulation(cfg.k)).as_str().into()
}

fn proposed_record(
    experiment: &str,
    cfg: &ExperimentConfig,
    slot: &ExperimentConfig,
    t: u64,
    ch: &ChannelSet,
    p: &SystemParams,
) -> Record {
    let base = Record {
        experiment: experiment.into(),
        trial: t,
        scheme: Scheme::Proposed.as_str().into(),
        formulation: formulation_label(cfg),
        q_watts: slot.q_target,
        ..blank(slot)
    };
    match region::solve_master(ch, p, cfg.formulation) {
        Ok(ms) => Record {
            formulation: ms.kind.as_str().into(),
            rate_bits: ms.rate_bits,
            status: "optimal".into(),
            rank1_gap: ms.rank1_gap,
            solver_ms: u64::from(ms.iterations),
            ..base
        },
        Err(e) => Record { status: status_label(&e).into(), ..base },
    }
}

fn status_label(e: &RegionError) -> &'static str {
    match e {
        RegionError::NotOptimal(st) => st.as_str(),
        _ => "error",
    }
}

fn mean(vals: impl Iterator<Item = f64>) -> f64 {
    let (n, sum) = vals.fold((0usize, 0.0f64), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Aggregate a group of rows into one `_mean` row. Rates of failed rows are
/// already 0.0 and stay in the average; the trial column carries the group
/// size.
fn mean_record(
    experiment: &str,
    cfg: &ExperimentConfig,
    slot: &ExperimentConfig,
    group: &[Record],
) -> Record {
    let scheme = group
        .first()
        .map(|r| r.scheme.clone())
        .unwrap_or_else(|| Scheme::Proposed.as_str().into());
    Record {
        experiment: experiment.into(),
        trial: group.len() as u64,
        scheme,
        formulation: formulation_label(cfg),
        q_watts: slot.q_target,
        rate_bits: mean(group.iter().map(|r| r.rate_bits)),
        rank1_gap: mean(group.iter().map(|r| r.rank1_gap)),
        status: "mean".into(),
        ..blank(slot)
    }
}

// ── Output ───────────────────────────────────────────────────────────────

fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

/// Write records as CSV: the pinned header, UTF-8, LF endings, floats at 12
/// significant digits.
pub fn write_csv<W: Write>(w: &mut W, records: &[Record]) -> io::Result<()> {
    w.write_all(CSV_HEADER.as_bytes())?;
    w.write_all(b"\n")?;
    for r in records {
        let line = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.trial,
            r.scheme,
            r.formulation,
            r.k,
            fmt_float(r.p_s_dbw),
            fmt_float(r.p_j_dbw),
            fmt_float(r.p_r_max_dbw),
            fmt_float(r.epsilon),
            fmt_float(r.q_watts),
            fmt_float(r.rate_bits),
            fmt_float(r.q_max_watts),
            r.status,
            fmt_float(r.rank1_gap),
            r.solver_ms,
        );
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_csv_file(path: &Path, records: &[Record]) -> io::Result<()> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(&mut file, records)?;
    file.flush()
}

/// JSON mirror: the same records as an array of objects.
pub fn write_json<W: Write>(w: &mut W, records: &[Record]) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, records)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    w.write_all(b"\n")
}

pub fn write_json_file(path: &Path, records: &[Record]) -> io::Result<()> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_json(&mut file, records)?;
    file.flush()
}

// ── Tests ────────────────────────────────────────────────────────────────
