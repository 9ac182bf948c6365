//! Recovery of all `mn` block products from responder results.
//!
//! Every scalar position `(s, t)` of the blocks gives the same linear
//! system with a different right-hand side, so each decoder factorizes its
//! system matrix once and solves all `N1·N3/(mn)` positions as columns of
//! one right-hand side.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codes::{
    chebyshev_vandermonde, degree_to_block_order, encode_tasks, generator_matrix, orthopoly_h_matrix,
    CodeError, CodeKind, CodeSpec,
};
use crate::linalg::{
    condition_number, solve_linear_with, DenseMatrix, LinalgError, LuFactorization, SolveOptions,
};
use crate::partition::{assemble, split, BlockPartition, PartitionError};
use crate::runtime::{compute_all, split_pattern, StragglerPattern, WorkerResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("{got} usable responders, need {needed}")]
    InsufficientResponders { got: usize, needed: usize },
    #[error("worker {0} reported more than once")]
    DuplicateWorker(usize),
    #[error("worker {worker} outside [1, {big_n}]")]
    UnknownWorker { worker: usize, big_n: usize },
    #[error("worker {worker} returned a {got:?} block, expected {expected:?}")]
    ResultShape {
        worker: usize,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("code has (m, n) = {code:?} but partition has {partition:?}")]
    GeometryMismatch {
        code: (usize, usize),
        partition: (usize, usize),
    },
    #[error("decode system singular at pivot {pivot} for responders {responders:?}")]
    Singular { responders: Vec<usize>, pivot: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("reference has zero norm; relative error undefined")]
    ZeroNorm,
    #[error("shape mismatch: {0:?} vs {1:?}")]
    Shape((usize, usize), (usize, usize)),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecodeOptions {
    pub solve: SolveOptions,
}

/// Recovered block products and fidelity data for one decode.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    /// `A_{j'}ᵀ B_{j''}` in flat block order.
    pub blocks: Vec<DenseMatrix>,
    pub product: DenseMatrix,
    /// Condition number of the matrix that was factorized; `1.0` without
    /// a solve.
    pub condition_estimate: f64,
    pub solve_dim: usize,
    /// Workers whose results entered the decode.
    pub responders_used: Vec<usize>,
}

/// The square system a decoder inverts for a given responder set.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeSystem {
    /// Responders whose values form the right-hand side, in row order.
    pub rows_from: Vec<usize>,
    /// 1-based flat block indices being solved for, in column order.
    pub unknowns: Vec<usize>,
    /// For systematic codes, responders copied directly.
    pub copied: Vec<usize>,
    /// Composite matrix; for OrthoPoly this is `G_O·H` with columns in
    /// Chebyshev-degree order.
    pub matrix: DenseMatrix,
}

impl DecodeSystem {
    pub fn dim(&self) -> usize {
        self.unknowns.len()
    }

    pub fn condition(&self) -> f64 {
        if self.dim() == 0 {
            1.0
        } else {
            condition_number(&self.matrix)
        }
    }
}

fn first_k(responders: &[usize], k: usize) -> Result<Vec<usize>, DecodeError> {
    if responders.len() < k {
        return Err(DecodeError::InsufficientResponders {
            got: responders.len(),
            needed: k,
        });
    }
    Ok(responders[..k].to_vec())
}

/// Builds the decode system for ascending 1-based `responders`.
///
/// Non-systematic kinds use the `K` smallest responder indices. Systematic
/// codes copy every surviving systematic worker and pair the `S₁` missing
/// blocks with the `S₁` smallest surviving parity workers.
pub fn decode_system(spec: &CodeSpec, responders: &[usize]) -> Result<DecodeSystem, DecodeError> {
    let k = spec.k();
    let (m, n) = (spec.m(), spec.n());
    match spec.kind() {
        CodeKind::RkrpNonsystematic | CodeKind::Polynomial => {
            let chosen = first_k(responders, k)?;
            let rows: Vec<usize> = chosen.iter().map(|w| w - 1).collect();
            Ok(DecodeSystem {
                matrix: generator_matrix(spec).select_rows(&rows),
                rows_from: chosen,
                unknowns: (1..=k).collect(),
                copied: Vec::new(),
            })
        }
        CodeKind::Orthopoly => {
            let chosen = first_k(responders, k)?;
            let nodes = spec.nodes().expect("orthopoly carries nodes");
            let x: Vec<f64> = chosen.iter().map(|w| nodes[w - 1]).collect();
            let composite = chebyshev_vandermonde(&x, k).matmul(&orthopoly_h_matrix(m, n))?;
            let order = degree_to_block_order(m, n);
            Ok(DecodeSystem {
                matrix: composite,
                rows_from: chosen,
                unknowns: order.iter().map(|b| b + 1).collect(),
                copied: Vec::new(),
            })
        }
        CodeKind::RkrpSystematic => {
            let pattern = StragglerPattern::from_responders(responders.iter().copied(), spec.big_n())
                .map_err(|_| DecodeError::UnknownWorker {
                    worker: *responders.iter().find(|&&w| w == 0 || w > spec.big_n()).unwrap_or(&0),
                    big_n: spec.big_n(),
                })?;
            let (missing, parity) = split_pattern(&pattern, k);
            let s1 = missing.len();
            if parity.len() < s1 {
                return Err(DecodeError::InsufficientResponders {
                    got: responders.len(),
                    needed: k,
                });
            }
            let chosen: Vec<usize> = parity[..s1].to_vec();
            let f = spec.parity_matrix().expect("systematic carries F");
            let rows: Vec<usize> = chosen.iter().map(|w| w - k - 1).collect();
            let cols: Vec<usize> = missing.iter().map(|j| j - 1).collect();
            Ok(DecodeSystem {
                matrix: f.select_rows(&rows).select_cols(&cols),
                rows_from: chosen,
                unknowns: missing,
                copied: pattern.responders().filter(|&w| w <= k).collect(),
            })
        }
    }
}

fn index_results<'a>(
    spec: &CodeSpec,
    results: &'a [WorkerResult],
    part: &BlockPartition,
) -> Result<BTreeMap<usize, &'a DenseMatrix>, DecodeError> {
    if (spec.m(), spec.n()) != (part.m, part.n) {
        return Err(DecodeError::GeometryMismatch {
            code: (spec.m(), spec.n()),
            partition: (part.m, part.n),
        });
    }
    let expected = part.block_shape();
    let mut by_worker = BTreeMap::new();
    for r in results {
        if r.worker == 0 || r.worker > spec.big_n() {
            return Err(DecodeError::UnknownWorker {
                worker: r.worker,
                big_n: spec.big_n(),
            });
        }
        if r.x.shape() != expected {
            return Err(DecodeError::ResultShape {
                worker: r.worker,
                got: r.x.shape(),
                expected,
            });
        }
        if by_worker.insert(r.worker, &r.x).is_some() {
            return Err(DecodeError::DuplicateWorker(r.worker));
        }
    }
    Ok(by_worker)
}

/// Stacks the flattened results of `workers` as rows.
fn stack_values(by_worker: &BTreeMap<usize, &DenseMatrix>, workers: &[usize], width: usize) -> DenseMatrix {
    let mut data = Vec::with_capacity(workers.len() * width);
    for w in workers {
        data.extend_from_slice(by_worker[w].as_slice());
    }
    DenseMatrix::from_raw_unchecked(workers.len(), width, data)
}

fn row_as_block(values: &DenseMatrix, row: usize, shape: (usize, usize)) -> DenseMatrix {
    DenseMatrix::from_raw_unchecked(shape.0, shape.1, values.row(row).to_vec())
}

fn map_singular(err: LinalgError, responders: &[usize]) -> DecodeError {
    match err {
        LinalgError::Singular { pivot, .. } => DecodeError::Singular {
            responders: responders.to_vec(),
            pivot,
        },
        other => DecodeError::Linalg(other),
    }
}

fn finish(
    blocks: Vec<DenseMatrix>,
    part: &BlockPartition,
    condition_estimate: f64,
    solve_dim: usize,
    responders_used: Vec<usize>,
) -> Result<DecodeReport, DecodeError> {
    let product = assemble(&blocks, part)?;
    Ok(DecodeReport {
        blocks,
        product,
        condition_estimate,
        solve_dim,
        responders_used,
    })
}

/// Decodes with the family-specific routine.
pub fn decode(
    spec: &CodeSpec,
    results: &[WorkerResult],
    part: &BlockPartition,
    options: DecodeOptions,
) -> Result<DecodeReport, DecodeError> {
    match spec.kind() {
        CodeKind::RkrpNonsystematic | CodeKind::Polynomial => {
            decode_nonsystematic(spec, results, part, options)
        }
        CodeKind::RkrpSystematic => decode_systematic(spec, results, part, options),
        CodeKind::Orthopoly => decode_orthopoly(spec, results, part, options),
    }
}

/// Solves `G_sub · W = Y` for the `K` smallest-index responders. Also used
/// for the Polynomial baseline, whose generator is a Vandermonde matrix.
pub fn decode_nonsystematic(
    spec: &CodeSpec,
    results: &[WorkerResult],
    part: &BlockPartition,
    options: DecodeOptions,
) -> Result<DecodeReport, DecodeError> {
    let by_worker = index_results(spec, results, part)?;
    let responders: Vec<usize> = by_worker.keys().copied().collect();
    let system = decode_system(spec, &responders)?;
    let shape = part.block_shape();
    let y = stack_values(&by_worker, &system.rows_from, part.entries_per_block());
    let outcome = solve_linear_with(&system.matrix, &y, options.solve)
        .map_err(|e| map_singular(e, &system.rows_from))?;
    let blocks = (0..spec.k())
        .map(|j| row_as_block(&outcome.solution, j, shape))
        .collect();
    finish(
        blocks,
        part,
        outcome.condition_estimate,
        spec.k(),
        system.rows_from,
    )
}

/// Copies surviving systematic blocks verbatim, subtracts their parity
/// contribution, and solves only the `S₁ x S₁` system for the rest.
pub fn decode_systematic(
    spec: &CodeSpec,
    results: &[WorkerResult],
    part: &BlockPartition,
    options: DecodeOptions,
) -> Result<DecodeReport, DecodeError> {
    let by_worker = index_results(spec, results, part)?;
    let responders: Vec<usize> = by_worker.keys().copied().collect();
    let system = decode_system(spec, &responders)?;
    let k = spec.k();
    let shape = part.block_shape();
    let mut blocks: Vec<Option<DenseMatrix>> = vec![None; k];
    for &w in &system.copied {
        blocks[w - 1] = Some(by_worker[&w].clone());
    }
    let mut used = system.copied.clone();
    let mut condition = 1.0;
    let s1 = system.dim();
    if s1 > 0 {
        let f = spec.parity_matrix().expect("systematic carries F");
        let width = part.entries_per_block();
        let mut y = stack_values(&by_worker, &system.rows_from, width);
        for (row, &parity_worker) in system.rows_from.iter().enumerate() {
            let f_row = f.row(parity_worker - k - 1);
            let target = y.row_mut(row);
            for &known in &system.copied {
                let coef = f_row[known - 1];
                for (t, &v) in target.iter_mut().zip(by_worker[&known].as_slice()) {
                    *t -= coef * v;
                }
            }
        }
        let outcome = solve_linear_with(&system.matrix, &y, options.solve)
            .map_err(|e| map_singular(e, &responders))?;
        for (row, &j) in system.unknowns.iter().enumerate() {
            blocks[j - 1] = Some(row_as_block(&outcome.solution, row, shape));
        }
        condition = outcome.condition_estimate;
        used.extend_from_slice(&system.rows_from);
    }
    let blocks = blocks
        .into_iter()
        .map(|b| b.expect("every block copied or solved"))
        .collect();
    finish(blocks, part, condition, s1, used)
}

/// Two-stage decode: `G_O · C = Y` over the chosen nodes, then `H · W = C`.
/// The reported condition number is that of `G_O·H`.
pub fn decode_orthopoly(
    spec: &CodeSpec,
    results: &[WorkerResult],
    part: &BlockPartition,
    options: DecodeOptions,
) -> Result<DecodeReport, DecodeError> {
    let by_worker = index_results(spec, results, part)?;
    let responders: Vec<usize> = by_worker.keys().copied().collect();
    let chosen = first_k(&responders, spec.k())?;
    let (m, n, k) = (spec.m(), spec.n(), spec.k());
    let nodes = spec.nodes().expect("orthopoly carries nodes");
    let x: Vec<f64> = chosen.iter().map(|w| nodes[w - 1]).collect();
    let go = chebyshev_vandermonde(&x, k);
    let h = orthopoly_h_matrix(m, n);
    let y = stack_values(&by_worker, &chosen, part.entries_per_block());

    let coeffs = solve_linear_with(&go, &y, options.solve).map_err(|e| map_singular(e, &chosen))?;
    let h_lu = LuFactorization::factor(&h, options.solve.pivot_tolerance)
        .map_err(|e| map_singular(e, &chosen))?;
    let by_degree = h_lu.solve(&coeffs.solution)?;

    let shape = part.block_shape();
    let mut blocks = vec![DenseMatrix::zeros(shape.0, shape.1); k];
    for (deg, &blk) in degree_to_block_order(m, n).iter().enumerate() {
        blocks[blk] = row_as_block(&by_degree, deg, shape);
    }
    let condition = condition_number(&go.matmul(&h)?);
    finish(blocks, part, condition, k, chosen)
}

/// `‖truth − estimate‖ / ‖truth‖` over all entries (vector 2-norm).
pub fn relative_error(truth: &DenseMatrix, estimate: &DenseMatrix) -> Result<f64, MetricError> {
    if truth.shape() != estimate.shape() {
        return Err(MetricError::Shape(truth.shape(), estimate.shape()));
    }
    let norm = truth.frobenius_norm();
    if norm == 0.0 {
        return Err(MetricError::ZeroNorm);
    }
    let diff: f64 = truth
        .as_slice()
        .iter()
        .zip(estimate.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(diff.sqrt() / norm)
}

/// Exact block products `A_{j'}ᵀ B_{j''}` in flat order, computed with the
/// same kernel the workers use.
pub fn direct_blocks(a_blocks: &[DenseMatrix], b_blocks: &[DenseMatrix]) -> Vec<DenseMatrix> {
    a_blocks
        .iter()
        .flat_map(|a| b_blocks.iter().map(move |b| a.matmul(b).expect("compatible blocks")))
        .collect()
}

/// Output of [`coded_multiply`].
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub partition: BlockPartition,
    pub results: Vec<WorkerResult>,
    pub report: DecodeReport,
}

/// Full round: split, encode, compute on every worker, drop stragglers,
/// decode.
pub fn coded_multiply(
    spec: &CodeSpec,
    a_t: &DenseMatrix,
    b: &DenseMatrix,
    pattern: &StragglerPattern,
    options: DecodeOptions,
) -> Result<RoundOutcome, DecodeError> {
    let (a_blocks, b_blocks, partition) = split(a_t, b, spec.m(), spec.n())?;
    let tasks = encode_tasks(spec, &a_blocks, &b_blocks)?;
    let results = pattern.filter_results(compute_all(&tasks));
    let report = decode(spec, &results, &partition, options)?;
    Ok(RoundOutcome {
        partition,
        results,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{
        build_orthopoly, build_polynomial, sample_rkrp_nonsystematic, sample_rkrp_systematic,
        CoefficientDistribution,
    };
    use crate::linalg::{reset_solve_call_count, solve_call_count};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn run(spec: &CodeSpec, pattern: &StragglerPattern, seed: u64) -> (RoundOutcome, DenseMatrix) {
        let a_t = gaussian(spec.m() * 3, 5, seed);
        let b = gaussian(5, spec.n() * 2, seed + 1);
        let out = coded_multiply(spec, &a_t, &b, pattern, DecodeOptions::default()).unwrap();
        (out, a_t.matmul(&b).unwrap())
    }

    #[test]
    fn nonsystematic_single_block_copies_scaled_result() {
        let spec = sample_rkrp_nonsystematic(1, 1, 3, &CoefficientDistribution::standard(1)).unwrap();
        let (out, direct) = run(&spec, &StragglerPattern::all(3), 4);
        assert_eq!(out.report.solve_dim, 1);
        assert!(relative_error(&direct, &out.report.product).unwrap() < 1e-14);
    }

    #[test]
    fn nonsystematic_k6_seed7() {
        let spec = sample_rkrp_nonsystematic(2, 3, 6, &CoefficientDistribution::standard(7)).unwrap();
        let (out, direct) = run(&spec, &StragglerPattern::all(6), 70);
        assert!(relative_error(&direct, &out.report.product).unwrap() < 1e-12);
        assert_eq!(out.report.responders_used, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn nonsystematic_uses_smallest_responders() {
        let spec = sample_rkrp_nonsystematic(2, 2, 8, &CoefficientDistribution::standard(2)).unwrap();
        let pattern = StragglerPattern::from_stragglers([1, 4], 8).unwrap();
        let (out, direct) = run(&spec, &pattern, 3);
        assert_eq!(out.report.responders_used, vec![2, 3, 5, 6]);
        assert!(relative_error(&direct, &out.report.product).unwrap() < 1e-12);
    }

    #[test]
    fn small_system_recovers_true_values() {
        // y = G·z with G built literally as p_{i,j'}·q_{i,j''}
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = DenseMatrix::from_fn(6, 2, |_, _| StandardNormal.sample(&mut rng));
        let q = DenseMatrix::from_fn(6, 3, |_, _| StandardNormal.sample(&mut rng));
        let literal = DenseMatrix::from_fn(6, 6, |i, c| p.get(i, c / 3) * q.get(i, c % 3));
        let spec = CodeSpec::from_coefficients(CodeKind::RkrpNonsystematic, 2, 3, 6, p, q).unwrap();
        assert_eq!(generator_matrix(&spec), literal);
        let z = [0.5, -1.25, 2.0, 3.5, -0.75, 1.0];
        let results: Vec<WorkerResult> = (0..6)
            .map(|i| WorkerResult {
                worker: i + 1,
                x: DenseMatrix::new(1, 1, vec![(0..6).map(|c| literal.get(i, c) * z[c]).sum()]).unwrap(),
            })
            .collect();
        let part = BlockPartition::new(2, 3, 2, 1, 3).unwrap();
        let rep = decode_nonsystematic(&spec, &results, &part, DecodeOptions::default()).unwrap();
        for (blk, &zj) in rep.blocks.iter().zip(&z) {
            assert!((blk.get(0, 0) - zj).abs() < 1e-12);
        }
    }

    #[test]
    fn insufficient_and_malformed_results() {
        let spec = sample_rkrp_nonsystematic(2, 2, 6, &CoefficientDistribution::standard(1)).unwrap();
        let part = BlockPartition::new(2, 2, 2, 1, 2).unwrap();
        let r = |w| WorkerResult {
            worker: w,
            x: DenseMatrix::zeros(1, 1),
        };
        assert!(matches!(
            decode(&spec, &[r(1), r(2), r(3)], &part, DecodeOptions::default()),
            Err(DecodeError::InsufficientResponders { got: 3, needed: 4 })
        ));
        assert!(matches!(
            decode(&spec, &[r(1), r(1), r(2), r(3)], &part, DecodeOptions::default()),
            Err(DecodeError::DuplicateWorker(1))
        ));
        assert!(matches!(
            decode(&spec, &[r(1), r(2), r(3), r(9)], &part, DecodeOptions::default()),
            Err(DecodeError::UnknownWorker { worker: 9, .. })
        ));
        let wrong = BlockPartition::new(1, 2, 2, 1, 2).unwrap();
        assert!(matches!(
            decode(&spec, &[r(1), r(2), r(3), r(4)], &wrong, DecodeOptions::default()),
            Err(DecodeError::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn singular_generator_surfaces_responders() {
        let p = DenseMatrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [0.5, 1.0]]).unwrap();
        let q = DenseMatrix::from_rows(&[[1.0], [1.0], [3.0]]).unwrap();
        let spec = CodeSpec::from_coefficients(CodeKind::RkrpNonsystematic, 2, 1, 3, p, q).unwrap();
        let part = BlockPartition::new(2, 1, 2, 1, 1).unwrap();
        let results: Vec<_> = (1..=2)
            .map(|w| WorkerResult {
                worker: w,
                x: DenseMatrix::new(1, 1, vec![1.0]).unwrap(),
            })
            .collect();
        match decode(&spec, &results, &part, DecodeOptions::default()) {
            Err(DecodeError::Singular { responders, .. }) => assert_eq!(responders, vec![1, 2]),
            other => panic!("expected singular decode, got {other:?}"),
        }
    }

    #[test]
    fn systematic_pure_copy_never_solves() {
        let spec = sample_rkrp_systematic(2, 3, 9, &CoefficientDistribution::standard(4)).unwrap();
        let pattern = StragglerPattern::from_stragglers([8], 9).unwrap();
        reset_solve_call_count();
        let (out, _) = run(&spec, &pattern, 9);
        assert_eq!(solve_call_count(), 0);
        assert_eq!(out.report.solve_dim, 0);
        assert_eq!(out.report.condition_estimate, 1.0);
        for (j, blk) in out.report.blocks.iter().enumerate() {
            let worker = out.results.iter().find(|r| r.worker == j + 1).unwrap();
            assert_eq!(blk, &worker.x);
        }
    }

    #[test]
    fn systematic_stragglers_2_4_5_8() {
        let spec = sample_rkrp_systematic(2, 3, 10, &CoefficientDistribution::standard(5)).unwrap();
        let pattern = StragglerPattern::from_stragglers([2, 4, 5, 8], 10).unwrap();
        let system = decode_system(&spec, &pattern.responder_vec()).unwrap();
        assert_eq!(system.copied, vec![1, 3, 6]);
        assert_eq!(system.unknowns, vec![2, 4, 5]);
        assert_eq!(system.rows_from, vec![7, 9, 10]);
        let f = spec.parity_matrix().unwrap();
        assert_eq!(system.matrix, f.select_rows(&[0, 2, 3]).select_cols(&[1, 3, 4]));

        let (out, direct) = run(&spec, &pattern, 21);
        assert_eq!(out.report.solve_dim, 3);
        assert!(relative_error(&direct, &out.report.product).unwrap() < 1e-12);
        for j in [1usize, 3, 6] {
            let worker = out.results.iter().find(|r| r.worker == j).unwrap();
            assert_eq!(out.report.blocks[j - 1], worker.x);
        }
    }

    #[test]
    fn systematic_needs_enough_parity() {
        let spec = sample_rkrp_systematic(2, 2, 6, &CoefficientDistribution::standard(5)).unwrap();
        let pattern = StragglerPattern::from_stragglers([1, 2, 5], 6).unwrap();
        let a_t = gaussian(2, 2, 1);
        let b = gaussian(2, 2, 2);
        assert!(matches!(
            coded_multiply(&spec, &a_t, &b, &pattern, DecodeOptions::default()),
            Err(DecodeError::InsufficientResponders { .. })
        ));
    }

    #[test]
    fn orthopoly_cases() {
        let spec = build_orthopoly(1, 1, 3).unwrap();
        let (out, direct) = run(&spec, &StragglerPattern::all(3), 1);
        assert!(relative_error(&direct, &out.report.product).unwrap() < 1e-15);

        let spec = build_orthopoly(2, 2, 6).unwrap();
        let pattern = StragglerPattern::from_stragglers([2, 5], 6).unwrap();
        let (out, direct) = run(&spec, &pattern, 2);
        assert!(relative_error(&direct, &out.report.product).unwrap() < 1e-10);
        assert_eq!(out.report.solve_dim, 4);
        assert!(out.report.condition_estimate >= 1.0);
    }

    #[test]
    fn polynomial_roundtrip_k6() {
        let spec = build_polynomial(2, 3, 8).unwrap();
        let pattern = StragglerPattern::from_stragglers([3, 7], 8).unwrap();
        let (out, direct) = run(&spec, &pattern, 6);
        assert!(relative_error(&direct, &out.report.product).unwrap() < 1e-9);
    }

    #[test]
    fn batched_matches_per_entry_bitwise() {
        let spec = sample_rkrp_nonsystematic(2, 2, 6, &CoefficientDistribution::standard(31)).unwrap();
        let pattern = StragglerPattern::from_stragglers([1, 3], 6).unwrap();
        let (out, _) = run(&spec, &pattern, 77);
        let system = decode_system(&spec, &pattern.responder_vec()).unwrap();
        let lu = LuFactorization::factor(&system.matrix, 1e-12).unwrap();
        let by_worker: BTreeMap<usize, &DenseMatrix> = out.results.iter().map(|r| (r.worker, &r.x)).collect();
        let (rows, cols) = out.partition.block_shape();
        for s in 0..rows {
            for t in 0..cols {
                let y = DenseMatrix::from_fn(4, 1, |r, _| by_worker[&system.rows_from[r]].get(s, t));
                let w = lu.solve(&y).unwrap();
                for j in 0..4 {
                    assert_eq!(w.get(j, 0).to_bits(), out.report.blocks[j].get(s, t).to_bits());
                }
            }
        }
    }

    #[test]
    fn relative_error_cases() {
        let t = DenseMatrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(relative_error(&t, &t).unwrap(), 0.0);
        let e = DenseMatrix::from_rows(&[[3.3, 4.4]]).unwrap();
        assert!((relative_error(&t, &e).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(
            relative_error(&DenseMatrix::zeros(1, 2), &t),
            Err(MetricError::ZeroNorm)
        );
        assert!(relative_error(&t, &DenseMatrix::zeros(2, 1)).is_err());
    }
}
