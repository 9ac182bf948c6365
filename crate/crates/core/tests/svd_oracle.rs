//! Cross-checks of the SVD-backed helpers against a one-sided Jacobi SVD.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkrp_core::codes::{generator_matrix, sample_rkrp_nonsystematic};
use rkrp_core::linalg::{condition_number, rank_of, singular_values, solve_linear};
use rkrp_core::metrics::gaussian_matrix;
use rkrp_core::{CoefficientDistribution, DenseMatrix};

/// One-sided Jacobi: orthogonalize columns by plane rotations; singular
/// values are the final column norms.
fn jacobi_singular_values(a: &DenseMatrix) -> Vec<f64> {
    let (rows, cols) = a.shape();
    let mut u: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| a.get(r, c)).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (head, tail) = u.split_at_mut(q);
                for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (xv, yv) = (*x, *y);
                    *x = c * xv - s * yv;
                    *y = s * xv + c * yv;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = u.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv.truncate(rows.min(cols));
    sv
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    gaussian_matrix(rows, cols, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn singular_values_match_jacobi() {
    for (seed, (r, c)) in [(6, 6), (9, 4), (5, 8), (20, 20)].into_iter().enumerate() {
        let a = gaussian(r, c, seed as u64);
        let jacobi = jacobi_singular_values(&a);
        let sv = singular_values(&a);
        assert_eq!(sv.len(), jacobi.len());
        for (x, y) in sv.iter().zip(&jacobi) {
            assert!((x - y).abs() <= 1e-12 * jacobi[0], "{x} vs {y}");
        }
    }
}

#[test]
fn condition_matches_jacobi_ratio() {
    let a = gaussian(12, 12, 77);
    let sv = jacobi_singular_values(&a);
    let expected = sv[0] / sv[sv.len() - 1];
    assert!((condition_number(&a) / expected - 1.0).abs() < 1e-9);
}

#[test]
fn rkrp_generator_6x6_has_full_rank() {
    for seed in 0..20 {
        let spec = sample_rkrp_nonsystematic(2, 3, 6, &CoefficientDistribution::standard(seed)).unwrap();
        let g = generator_matrix(&spec);
        assert_eq!(g.shape(), (6, 6));
        assert_eq!(rank_of(&g), 6);
        let sv = jacobi_singular_values(&g);
        assert!(sv[5] > 6.0 * f64::EPSILON * sv[0]);
    }
}

#[test]
fn seed_42_generator_solve_roundtrip() {
    let spec = sample_rkrp_nonsystematic(2, 3, 6, &CoefficientDistribution::standard(42)).unwrap();
    let g = generator_matrix(&spec);
    let w = gaussian(6, 1, 4242);
    let b = g.matmul(&w).unwrap();
    let out = solve_linear(&g, &b).unwrap();
    let err = out.solution.sub(&w).unwrap().frobenius_norm() / w.frobenius_norm();
    assert!(err < 1e-12, "{err:e}");
    let sv = jacobi_singular_values(&g);
    assert!((out.condition_estimate / (sv[0] / sv[5]) - 1.0).abs() < 1e-9);
}

#[test]
fn rank_of_deficient_products() {
    let left = gaussian(8, 3, 1);
    let right = gaussian(3, 8, 2);
    let low = left.matmul(&right).unwrap();
    assert_eq!(rank_of(&low), 3);
    let sv = jacobi_singular_values(&low);
    assert!(sv[3] < 1e-12 * sv[0]);
}
