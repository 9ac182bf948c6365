//! Monte-Carlo ensembles: average relative error, mean log condition
//! number, and empirical MDS checks.
//!
//! Trial `t` of a run uses seed `base_seed + t`; data, coefficients and the
//! straggler pattern each come from their own ChaCha stream of that seed.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{
    build_code, build_polynomial_with_nodes, CodeKind, CodeSpec, CoefficientDistribution,
    PolynomialNodes,
};
use crate::decode::{coded_multiply, decode_system, direct_blocks, relative_error, DecodeError, DecodeOptions};
use crate::linalg::{rank_of, DenseMatrix};
use crate::partition::split;
use crate::runtime::{sample_pattern, StragglerModel};
use crate::{stream_rng, Error, DATA_STREAM};

/// Shape of the random `Aᵀ` (`n1 x n2`) and `B` (`n2 x n3`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataDims {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl DataDims {
    /// `n1 = 7m`, `n2 = 8`, `n3 = 7n`.
    pub fn default_for(m: usize, n: usize) -> Self {
        Self {
            n1: 7 * m,
            n2: 8,
            n3: 7 * n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub kind: CodeKind,
    pub m: usize,
    pub n: usize,
    pub big_n: usize,
    pub stragglers: StragglerModel,
    pub num_trials: usize,
    pub base_seed: u64,
    pub dims: DataDims,
    /// Score every entry instead of only the `(1,1)` entry of each block.
    pub all_entries: bool,
    pub polynomial_nodes: PolynomialNodes,
    pub options: DecodeOptions,
}

impl TrialConfig {
    /// `N − K` uniformly random stragglers, default data dimensions.
    pub fn new(kind: CodeKind, m: usize, n: usize, big_n: usize, num_trials: usize, base_seed: u64) -> Self {
        Self {
            kind,
            m,
            n,
            big_n,
            stragglers: StragglerModel::UniformKOfN { k: m * n },
            num_trials,
            base_seed,
            dims: DataDims::default_for(m, n),
            all_entries: false,
            polynomial_nodes: PolynomialNodes::default(),
            options: DecodeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub kind: CodeKind,
    pub m: usize,
    pub n: usize,
    pub big_n: usize,
    /// Dimension of the solved system (S₁ for systematic codes).
    pub s1: usize,
    pub relative_err: Option<f64>,
    pub log_cond: Option<f64>,
    pub singular_flag: bool,
}

/// Aggregate of a batch of trials; singular trials are counted, not
/// averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub eta_ave: f64,
    pub stderr: f64,
    pub num_trials: usize,
    pub num_singular: usize,
}

/// Mean and standard error of the mean. `NaN` mean for an empty sample.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let count = values.len();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    if count == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    (mean, (var / count as f64).sqrt())
}

pub fn summarize(records: &[TrialRecord]) -> ErrorSummary {
    let errs: Vec<f64> = records.iter().filter_map(|r| r.relative_err).collect();
    let (eta_ave, stderr) = mean_and_stderr(&errs);
    ErrorSummary {
        eta_ave,
        stderr,
        num_trials: records.len(),
        num_singular: records.iter().filter(|r| r.singular_flag).count(),
    }
}

/// Matrix of i.i.d. Gaussian(0, 1) entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn build_for_trial(
    kind: CodeKind,
    m: usize,
    n: usize,
    big_n: usize,
    seed: u64,
    nodes: PolynomialNodes,
) -> Result<CodeSpec, Error> {
    let spec = match kind {
        CodeKind::Polynomial => build_polynomial_with_nodes(m, n, big_n, nodes)?,
        _ => build_code(kind, m, n, big_n, &CoefficientDistribution::standard(seed))?,
    };
    Ok(spec)
}

fn run_one(config: &TrialConfig, seed: u64) -> Result<TrialRecord, Error> {
    let TrialConfig { kind, m, n, big_n, .. } = *config;
    let spec = build_for_trial(kind, m, n, big_n, seed, config.polynomial_nodes)?;
    let mut data_rng = stream_rng(seed, DATA_STREAM);
    let a_t = gaussian_matrix(config.dims.n1, config.dims.n2, &mut data_rng);
    let b = gaussian_matrix(config.dims.n2, config.dims.n3, &mut data_rng);
    let pattern = sample_pattern(&config.stragglers, big_n, spec.k(), seed)?;

    let mut record = TrialRecord {
        seed,
        kind,
        m,
        n,
        big_n,
        s1: 0,
        relative_err: None,
        log_cond: None,
        singular_flag: false,
    };
    let outcome = match coded_multiply(&spec, &a_t, &b, &pattern, config.options) {
        Ok(out) => out,
        Err(DecodeError::Singular { .. }) => {
            record.singular_flag = true;
            return Ok(record);
        }
        Err(e) => return Err(e.into()),
    };
    let report = outcome.report;
    record.s1 = report.solve_dim;
    record.log_cond = Some(report.condition_estimate.ln());

    let (a_blocks, b_blocks, _) = split(&a_t, &b, m, n)?;
    let truth = direct_blocks(&a_blocks, &b_blocks);
    let err = if config.all_entries {
        let stack = |blocks: &[DenseMatrix]| {
            let data: Vec<f64> = blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect();
            DenseMatrix::from_raw_unchecked(1, data.len(), data)
        };
        relative_error(&stack(&truth), &stack(&report.blocks))?
    } else {
        let first = |blocks: &[DenseMatrix]| {
            DenseMatrix::from_raw_unchecked(1, blocks.len(), blocks.iter().map(|b| b.get(0, 0)).collect())
        };
        relative_error(&first(&truth), &first(&report.blocks))?
    };
    record.relative_err = Some(err);
    Ok(record)
}

/// Runs `num_trials` independent encode/compute/decode rounds. Records are
/// returned in trial order regardless of scheduling.
pub fn run_trials(config: &TrialConfig) -> Result<Vec<TrialRecord>, Error> {
    if config.num_trials == 0 {
        return Err(Error::Config("num_trials must be at least 1".into()));
    }
    if !config.dims.n1.is_multiple_of(config.m) || !config.dims.n3.is_multiple_of(config.n) {
        return Err(Error::Config(format!(
            "data dims {:?} not divisible by (m, n) = ({}, {})",
            config.dims, config.m, config.n
        )));
    }
    // fail fast on infeasible geometry before spawning work
    build_for_trial(config.kind, config.m, config.n, config.big_n, config.base_seed, config.polynomial_nodes)?;
    (0..config.num_trials)
        .into_par_iter()
        .map(|t| run_one(config, config.base_seed.wrapping_add(t as u64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdsCheck {
    pub failures: usize,
    pub trials: usize,
}

fn rank_deficient(spec: &CodeSpec, responders: &[usize]) -> Result<bool, Error> {
    let system = decode_system(spec, responders)?;
    Ok(system.dim() > 0 && rank_of(&system.matrix) < system.dim())
}

/// Samples `num_subsets` codes and uniformly random `K`-responder patterns
/// and counts rank-deficient decode systems.
pub fn mds_check(
    kind: CodeKind,
    m: usize,
    n: usize,
    big_n: usize,
    num_subsets: usize,
    seed: u64,
) -> Result<MdsCheck, Error> {
    let model = StragglerModel::UniformKOfN { k: m * n };
    let failures = (0..num_subsets)
        .into_par_iter()
        .map(|t| {
            let s = seed.wrapping_add(t as u64);
            let spec = build_for_trial(kind, m, n, big_n, s, PolynomialNodes::default())?;
            let pattern = sample_pattern(&model, big_n, spec.k(), s)?;
            rank_deficient(&spec, &pattern.responder_vec())
        })
        .collect::<Result<Vec<bool>, Error>>()?
        .into_iter()
        .filter(|&f| f)
        .count();
    Ok(MdsCheck {
        failures,
        trials: num_subsets,
    })
}

/// Same as [`mds_check`] but with one fixed code.
pub fn mds_check_spec(spec: &CodeSpec, num_subsets: usize, seed: u64) -> Result<MdsCheck, Error> {
    let model = StragglerModel::UniformKOfN { k: spec.k() };
    let failures = (0..num_subsets)
        .into_par_iter()
        .map(|t| {
            let pattern = sample_pattern(&model, spec.big_n(), spec.k(), seed.wrapping_add(t as u64))?;
            rank_deficient(spec, &pattern.responder_vec())
        })
        .collect::<Result<Vec<bool>, Error>>()?
        .into_iter()
        .filter(|&f| f)
        .count();
    Ok(MdsCheck {
        failures,
        trials: num_subsets,
    })
}

/// Worker count for straggler fraction `α = (N − K)/N`, rounded to the
/// nearest integer.
pub fn workers_for_fraction(k: usize, alpha: f64) -> Result<usize, Error> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("straggler fraction {alpha} outside [0, 1)")));
    }
    Ok(((k as f64) / (1.0 - alpha)).round() as usize)
}

/// `N = ⌈K / (1 − α)⌉`, tolerant of representation error in `α`.
pub fn workers_for_fraction_ceil(k: usize, alpha: f64) -> Result<usize, Error> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("straggler fraction {alpha} outside [0, 1)")));
    }
    Ok(((k as f64) / (1.0 - alpha) - 1e-9).ceil() as usize)
}

/// Factor pair `(m, n)` of `k` with `m ≤ n` and `n − m` minimal.
pub fn balanced_factorization(k: usize) -> (usize, usize) {
    assert!(k > 0);
    let mut m = (k as f64).sqrt() as usize;
    while m > 1 && !k.is_multiple_of(m) {
        m -= 1;
    }
    let m = m.max(1);
    (m, k / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondPoint {
    pub alpha: f64,
    pub big_n: usize,
    pub mean_log_cond: f64,
    pub stderr: f64,
    pub num_samples: usize,
}

/// Mean natural-log condition number of the matrix each decoder inverts,
/// with `N = round(K/(1−α))` and `N − K` uniformly random stragglers.
pub fn avg_log_condition(
    kind: CodeKind,
    m: usize,
    n: usize,
    alpha_grid: &[f64],
    num_samples: usize,
    seed: u64,
) -> Result<Vec<CondPoint>, Error> {
    if num_samples == 0 {
        return Err(Error::Config("num_samples must be at least 1".into()));
    }
    let k = m * n;
    let model = StragglerModel::UniformKOfN { k };
    alpha_grid
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let big_n = workers_for_fraction(k, alpha)?;
            let logs = (0..num_samples)
                .into_par_iter()
                .map(|s| {
                    let trial_seed = seed.wrapping_add((ai * num_samples + s) as u64);
                    let spec = build_for_trial(kind, m, n, big_n, trial_seed, PolynomialNodes::default())?;
                    let pattern = sample_pattern(&model, big_n, k, trial_seed)?;
                    let system = decode_system(&spec, &pattern.responder_vec())?;
                    Ok(system.condition().ln())
                })
                .collect::<Result<Vec<f64>, Error>>()?;
            let (mean_log_cond, stderr) = mean_and_stderr(&logs);
            Ok(CondPoint {
                alpha,
                big_n,
                mean_log_cond,
                stderr,
                num_samples,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::CodeSpec;

    #[test]
    fn systematic_without_stragglers_is_exact() {
        let mut cfg = TrialConfig::new(CodeKind::RkrpSystematic, 2, 3, 6, 1, 17);
        cfg.all_entries = true;
        let rec = run_trials(&cfg).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec[0].relative_err, Some(0.0));
        assert_eq!(rec[0].s1, 0);
        assert_eq!(rec[0].log_cond, Some(0.0));
    }

    #[test]
    fn run_trials_is_deterministic() {
        let cfg = TrialConfig::new(CodeKind::RkrpNonsystematic, 2, 2, 7, 16, 3);
        let a = run_trials(&cfg).unwrap();
        let b = run_trials(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), (3..19).collect::<Vec<_>>());
    }

    #[test]
    fn run_trials_rejects_bad_config() {
        let cfg = TrialConfig::new(CodeKind::Orthopoly, 2, 2, 3, 4, 0);
        assert!(run_trials(&cfg).is_err());
        let cfg = TrialConfig::new(CodeKind::Orthopoly, 2, 2, 6, 0, 0);
        assert!(run_trials(&cfg).is_err());
    }

    #[test]
    fn summary_excludes_singular() {
        let rec = |e: Option<f64>| TrialRecord {
            seed: 0,
            kind: CodeKind::Polynomial,
            m: 1,
            n: 1,
            big_n: 1,
            s1: 1,
            relative_err: e,
            log_cond: None,
            singular_flag: e.is_none(),
        };
        let s = summarize(&[rec(Some(1.0)), rec(None), rec(Some(3.0))]);
        assert_eq!(s.eta_ave, 2.0);
        assert_eq!(s.num_singular, 1);
        assert_eq!(s.num_trials, 3);
        assert!((s.stderr - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mds_single_block_never_fails() {
        for kind in CodeKind::ALL {
            let r = mds_check(kind, 1, 1, 4, 50, 9).unwrap();
            assert_eq!(r.failures, 0);
        }
    }

    #[test]
    fn mds_rkrp_m2_n3() {
        for kind in [CodeKind::RkrpNonsystematic, CodeKind::RkrpSystematic] {
            let r = mds_check(kind, 2, 3, 10, 10_000, 1).unwrap();
            assert_eq!(r, MdsCheck { failures: 0, trials: 10_000 });
        }
    }

    #[test]
    fn mds_detects_duplicated_rows() {
        let p = DenseMatrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [0.3, -1.0], [2.0, 0.7]]).unwrap();
        let q = DenseMatrix::from_rows(&[[1.5], [1.5], [0.4], [-2.0]]).unwrap();
        let spec = CodeSpec::from_coefficients(CodeKind::RkrpNonsystematic, 2, 1, 4, p, q).unwrap();
        // rows 1 and 2 are chosen together in 1/6 of the 2-subsets
        let r = mds_check_spec(&spec, 600, 4).unwrap();
        assert!(r.failures >= 1);
        assert!(r.failures < 600);
    }

    #[test]
    fn factorization_and_geometry() {
        assert_eq!(balanced_factorization(49), (7, 7));
        assert_eq!(balanced_factorization(12), (3, 4));
        assert_eq!(balanced_factorization(13), (1, 13));
        assert_eq!(balanced_factorization(1), (1, 1));
        assert_eq!(workers_for_fraction_ceil(27, 0.1).unwrap(), 30);
        assert_eq!(workers_for_fraction_ceil(49, 0.1).unwrap(), 55);
        assert_eq!(workers_for_fraction(49, 0.95).unwrap(), 980);
        assert_eq!(workers_for_fraction(49, 0.0).unwrap(), 49);
        assert!(workers_for_fraction(49, 1.0).is_err());
    }

    #[test]
    fn systematic_log_cond_zero_at_alpha_zero() {
        let pts = avg_log_condition(CodeKind::RkrpSystematic, 3, 3, &[0.0], 10, 1).unwrap();
        assert_eq!(pts[0].mean_log_cond, 0.0);
        assert_eq!(pts[0].big_n, 9);
    }
}
