use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkrp_core::codes::{build_code, chebyshev_t};
use rkrp_core::decode::{coded_multiply, relative_error};
use rkrp_core::linalg::{
    condition_number, khatri_rao_rowwise, kr_column, kr_factor_columns, rank_of, solve_linear,
};
use rkrp_core::metrics::gaussian_matrix;
use rkrp_core::partition::{assemble, flat_index, split};
use rkrp_core::{CodeKind, CoefficientDistribution, DecodeOptions, DenseMatrix, StragglerPattern};

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(rows, cols, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn khatri_rao_shape_and_factorization(rows in 1usize..6, a in 1usize..5, b in 1usize..5, seed: u64) {
        let p = gaussian(rows, a, seed);
        let q = gaussian(rows, b, seed ^ 1);
        let kr = khatri_rao_rowwise(&p, &q).unwrap();
        prop_assert_eq!(kr.shape(), (rows, a * b));
        for i in 0..rows {
            for j in 1..=a * b {
                let (jp, jpp) = kr_factor_columns(j, b);
                prop_assert_eq!(kr.get(i, j - 1), p.get(i, jp - 1) * q.get(i, jpp - 1));
            }
        }
    }

    #[test]
    fn flat_index_is_a_bijection(m in 1usize..9, n in 1usize..9) {
        let mut seen = std::collections::HashSet::new();
        for j in 1..=m * n {
            let idx = flat_index(j, m, n).unwrap();
            prop_assert!((1..=m).contains(&idx.row_block) && (1..=n).contains(&idx.col_block));
            prop_assert_eq!(kr_column(idx.row_block, idx.col_block, n), j);
            prop_assert!(seen.insert((idx.row_block, idx.col_block)));
        }
        prop_assert_eq!(seen.len(), m * n);
    }

    #[test]
    fn split_then_assemble_matches_direct(m in 1usize..4, n in 1usize..4, br in 1usize..4, bc in 1usize..4, inner in 1usize..5, seed: u64) {
        let a_t = gaussian(m * br, inner, seed);
        let b = gaussian(inner, n * bc, seed ^ 7);
        let (ab, bb, part) = split(&a_t, &b, m, n).unwrap();
        let blocks: Vec<DenseMatrix> = (1..=part.k())
            .map(|j| {
                let idx = part.flat_index(j).unwrap();
                ab[idx.row_block - 1].matmul(&bb[idx.col_block - 1]).unwrap()
            })
            .collect();
        let got = assemble(&blocks, &part).unwrap();
        let direct = a_t.matmul(&b).unwrap();
        prop_assert!(got.sub(&direct).unwrap().frobenius_norm() <= 1e-13 * direct.frobenius_norm());
    }

    #[test]
    fn rank_is_row_permutation_invariant(rows in 1usize..8, cols in 1usize..8, deficiency in 0usize..3, seed: u64) {
        let inner = rows.min(cols).saturating_sub(deficiency).max(1);
        let a = gaussian(rows, inner, seed).matmul(&gaussian(inner, cols, seed ^ 3)).unwrap();
        let mut order: Vec<usize> = (0..rows).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(rank_of(&a), rank_of(&a.select_rows(&order)));
        prop_assert_eq!(rank_of(&a), inner);
    }

    #[test]
    fn solve_recovers_known_solution(size in 1usize..12, seed: u64) {
        let a = gaussian(size, size, seed);
        prop_assume!(condition_number(&a) <= 1e6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 11);
        // entries bounded away from zero so a componentwise ratio is meaningful
        let x = DenseMatrix::from_fn(size, 2, |_, _| {
            let v: f64 = rand::Rng::random_range(&mut rng, 0.5..2.0);
            if rand::Rng::random_bool(&mut rng, 0.5) { v } else { -v }
        });
        let out = solve_linear(&a, &a.matmul(&x).unwrap()).unwrap();
        for (got, want) in out.solution.as_slice().iter().zip(x.as_slice()) {
            prop_assert!(((got - want) / want).abs() <= 1e-10);
        }
    }

    #[test]
    fn chebyshev_product_identity(a in 0usize..40, b in 0usize..40, x in -1.0f64..1.0) {
        let lhs = chebyshev_t(a, x) * chebyshev_t(b, x);
        let rhs = 0.5 * (chebyshev_t(a + b, x) + chebyshev_t(a.abs_diff(b), x));
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn decode_recovers_product_under_any_feasible_pattern(
        kind_idx in 0usize..3, m in 1usize..4, n in 1usize..4, extra in 0usize..5, seed: u64,
    ) {
        let kind = [CodeKind::RkrpNonsystematic, CodeKind::RkrpSystematic, CodeKind::Orthopoly][kind_idx];
        let k = m * n;
        let big_n = k + extra;
        let spec = build_code(kind, m, n, big_n, &CoefficientDistribution::standard(seed)).unwrap();
        let mut workers: Vec<usize> = (1..=big_n).collect();
        workers.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 5));
        let pattern = StragglerPattern::from_responders(workers[..k].iter().copied(), big_n).unwrap();
        let a_t = gaussian(2 * m, 3, seed ^ 9);
        let b = gaussian(3, 2 * n, seed ^ 10);
        let out = coded_multiply(&spec, &a_t, &b, &pattern, DecodeOptions::default()).unwrap();
        let err = relative_error(&a_t.matmul(&b).unwrap(), &out.report.product).unwrap();
        prop_assert!(err <= 1e-9, "{} err {:e}", kind, err);
    }

    #[test]
    fn matrix_json_roundtrip(rows in 1usize..5, cols in 1usize..5, seed: u64) {
        let a = gaussian(rows, cols, seed);
        let back: DenseMatrix = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }
}
