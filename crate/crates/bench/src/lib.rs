//! Fixtures shared by the benchmarks in `benches/`.

use rkrp_core::codes::{build_code, encode_tasks};
use rkrp_core::partition::split;
use rkrp_core::runtime::compute_all;
use rkrp_core::{BlockPartition, CodeKind, CodeSpec, CoefficientDistribution, DenseMatrix, WorkerResult};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic pseudo-random entries in `[-1, 1)`, distinct per `salt`.
pub fn data(rows: usize, cols: usize, salt: u64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |r, c| {
        let h = splitmix(salt.wrapping_mul(1 << 40) ^ ((r as u64) << 20) ^ c as u64);
        (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    })
}

/// A code plus every worker's result for a `2m x 4` by `4 x 2n` product.
pub struct Round {
    pub spec: CodeSpec,
    pub part: BlockPartition,
    pub results: Vec<WorkerResult>,
}

pub fn round(kind: CodeKind, m: usize, n: usize, big_n: usize) -> Round {
    let spec = build_code(kind, m, n, big_n, &CoefficientDistribution::standard(1)).expect("valid geometry");
    let (a_blocks, b_blocks, part) = split(&data(2 * m, 4, 1), &data(4, 2 * n, 2), m, n).expect("divisible");
    let results = compute_all(&encode_tasks(&spec, &a_blocks, &b_blocks).expect("matching blocks"));
    Round { spec, part, results }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rkrp_core::linalg::rank_of;

    #[test]
    fn data_is_full_rank_and_bounded() {
        let a = data(49, 49, 5);
        assert_eq!(rank_of(&a), 49);
        assert!(a.as_slice().iter().all(|v| (-1.0..1.0).contains(v)));
        assert_ne!(data(3, 3, 1), data(3, 3, 2));
    }

    #[test]
    fn fixture_rounds_decode() {
        let r = round(CodeKind::RkrpSystematic, 2, 3, 9);
        assert_eq!(r.results.len(), 9);
        assert_eq!(r.part.k(), 6);
    }
}
