//! The four Monte-Carlo studies. Rows come out in grid order, and for each
//! grid point one row per code kind in the order given.

use std::io::Write;

use rkrp_core::metrics::{
    avg_log_condition, balanced_factorization, run_trials, summarize, workers_for_fraction,
    workers_for_fraction_ceil, CondPoint, ErrorSummary,
};
use rkrp_core::{CodeKind, TrialConfig};

use crate::config::{Experiment, Resolved};
use crate::error::CliError;

pub const SWEEP_HEADER: [&str; 6] = ["param", "kind", "eta_ave", "stderr", "num_trials", "num_singular"];
pub const COND_HEADER: [&str; 5] = ["param", "kind", "mean_log_cond", "stderr", "num_samples"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub kind: CodeKind,
    pub summary: ErrorSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondRow {
    pub param: String,
    pub kind: CodeKind,
    pub point: CondPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    Sweep(SweepRow),
    Cond(CondRow),
}

impl Row {
    pub fn record(&self) -> Vec<String> {
        match self {
            Row::Sweep(r) => vec![
                r.param.clone(),
                r.kind.to_string(),
                fmt_float(r.summary.eta_ave),
                fmt_float(r.summary.stderr),
                r.summary.num_trials.to_string(),
                r.summary.num_singular.to_string(),
            ],
            Row::Cond(r) => vec![
                r.param.clone(),
                r.kind.to_string(),
                fmt_float(r.point.mean_log_cond),
                fmt_float(r.point.stderr),
                r.point.num_samples.to_string(),
            ],
        }
    }
}

/// Shortest round-trip scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:e}")
}

pub fn header(experiment: Experiment) -> &'static [&'static str] {
    match experiment {
        Experiment::Cond => &COND_HEADER,
        _ => &SWEEP_HEADER,
    }
}

/// CSV sink that flushes after every row.
pub struct RowWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RowWriter<W> {
    pub fn new(out: W, experiment: Experiment) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(header(experiment))?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &Row) -> Result<(), CliError> {
        self.inner.write_record(row.record())?;
        self.inner.flush()?;
        Ok(())
    }
}

fn warn_skip(what: &str, err: impl std::fmt::Display) {
    eprintln!("warning: skipping {what}: {err}");
}

fn sweep_point(
    cfg: &Resolved,
    param: String,
    (m, n, big_n): (usize, usize, usize),
    emit: &mut dyn FnMut(Row) -> Result<(), CliError>,
) -> Result<(), CliError> {
    for &kind in &cfg.kinds {
        let mut trial = TrialConfig::new(kind, m, n, big_n, cfg.num_trials, cfg.base_seed);
        trial.all_entries = cfg.all_entries;
        trial.polynomial_nodes = cfg.polynomial_nodes;
        let summary = summarize(&run_trials(&trial)?);
        emit(Row::Sweep(SweepRow {
            param: param.clone(),
            kind,
            summary,
        }))?;
    }
    Ok(())
}

/// Error versus `N = ⌈K/(1−α)⌉` for each K in the grid, fixed α.
pub fn sweep_n(cfg: &Resolved, emit: &mut dyn FnMut(Row) -> Result<(), CliError>) -> Result<(), CliError> {
    let alpha = cfg.alpha[0];
    for &k in &cfg.k_grid {
        let big_n = match workers_for_fraction_ceil(k, alpha) {
            Ok(big_n) => big_n,
            Err(e) => {
                warn_skip(&format!("K = {k}"), e);
                continue;
            }
        };
        let (m, n) = balanced_factorization(k);
        eprintln!("K = {k}: (m, n) = ({m}, {n}), N = {big_n}");
        sweep_point(cfg, big_n.to_string(), (m, n, big_n), emit)?;
    }
    Ok(())
}

/// Error versus α at fixed K, `N = round(K/(1−α))`.
pub fn sweep_alpha(cfg: &Resolved, emit: &mut dyn FnMut(Row) -> Result<(), CliError>) -> Result<(), CliError> {
    let k = cfg.k();
    let (m, n) = balanced_factorization(k);
    for &alpha in &cfg.alpha {
        match workers_for_fraction(k, alpha) {
            Ok(big_n) => sweep_point(cfg, alpha.to_string(), (m, n, big_n), emit)?,
            Err(e) => warn_skip(&format!("alpha = {alpha}"), e),
        }
    }
    Ok(())
}

/// Error versus straggler count S at fixed K, `N = K + S`.
pub fn sweep_s(cfg: &Resolved, emit: &mut dyn FnMut(Row) -> Result<(), CliError>) -> Result<(), CliError> {
    let k = cfg.k();
    let (m, n) = balanced_factorization(k);
    for s in 0..=cfg.s_max {
        sweep_point(cfg, s.to_string(), (m, n, k + s), emit)?;
    }
    Ok(())
}

/// Mean natural-log condition number of the inverted matrix versus α.
pub fn cond(cfg: &Resolved, emit: &mut dyn FnMut(Row) -> Result<(), CliError>) -> Result<(), CliError> {
    let k = cfg.k();
    let (m, n) = balanced_factorization(k);
    for &alpha in &cfg.alpha {
        if let Err(e) = workers_for_fraction(k, alpha) {
            warn_skip(&format!("alpha = {alpha}"), e);
            continue;
        }
        for &kind in &cfg.kinds {
            let points = avg_log_condition(kind, m, n, &[alpha], cfg.num_trials, cfg.base_seed)?;
            for point in points {
                emit(Row::Cond(CondRow {
                    param: alpha.to_string(),
                    kind,
                    point,
                }))?;
            }
        }
    }
    Ok(())
}

pub fn run_experiment(cfg: &Resolved, emit: &mut dyn FnMut(Row) -> Result<(), CliError>) -> Result<(), CliError> {
    match cfg.experiment {
        Experiment::SweepN => sweep_n(cfg, emit),
        Experiment::SweepAlpha => sweep_alpha(cfg, emit),
        Experiment::SweepS => sweep_s(cfg, emit),
        Experiment::Cond => cond(cfg, emit),
    }
}

/// Runs an experiment and collects its rows.
pub fn collect_rows(cfg: &Resolved) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    run_experiment(cfg, &mut |row| {
        rows.push(row);
        Ok(())
    })?;
    Ok(rows)
}
