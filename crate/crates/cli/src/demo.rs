//! One end-to-end coded multiplication of `AᵀB` read from files.

use std::path::PathBuf;

use rkrp_core::codes::{build_code, build_polynomial_with_nodes};
use rkrp_core::decode::{coded_multiply, relative_error};
use rkrp_core::partition::pad_to_multiple;
use rkrp_core::runtime::sample_pattern;
use rkrp_core::{
    CodeKind, CoefficientDistribution, DecodeError, DecodeOptions, DenseMatrix, PolynomialNodes, StragglerModel,
    StragglerPattern,
};
use serde::Serialize;

use crate::error::CliError;
use crate::matrix_io::{read_matrix, write_matrix};

#[derive(Debug, Clone)]
pub struct DemoArgs {
    /// `A`, shape `N2 x N1`; the product is `AᵀB`.
    pub a: PathBuf,
    /// `B`, shape `N2 x N3`.
    pub b: PathBuf,
    pub kind: CodeKind,
    pub m: usize,
    pub n: usize,
    pub big_n: usize,
    pub seed: u64,
    /// 1-based workers that never respond.
    pub stragglers: Vec<usize>,
    /// Instead of a fixed set, this many uniformly random stragglers.
    pub random_stragglers: Option<usize>,
    pub pad: bool,
    pub polynomial_nodes: PolynomialNodes,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoSummary {
    pub kind: CodeKind,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub stragglers: Vec<usize>,
    pub responders_used: Vec<usize>,
    pub solve_dim: usize,
    pub condition_estimate: f64,
    pub product_shape: (usize, usize),
    pub padded: bool,
    /// Against the uncoded product; absent when that product is zero.
    pub relative_error: Option<f64>,
}

pub fn run_demo(args: &DemoArgs) -> Result<(DenseMatrix, DemoSummary), CliError> {
    let a = read_matrix(&args.a)?;
    let b = read_matrix(&args.b)?;
    let mut a_t = a.transpose();
    let mut b = b;
    let orig = (a_t.rows(), b.cols());
    if args.pad {
        let (ap, bp, _) = pad_to_multiple(&a_t, &b, args.m, args.n)?;
        a_t = ap;
        b = bp;
    }

    let spec = match args.kind {
        CodeKind::Polynomial => build_polynomial_with_nodes(args.m, args.n, args.big_n, args.polynomial_nodes),
        kind => build_code(kind, args.m, args.n, args.big_n, &CoefficientDistribution::standard(args.seed)),
    }
    .map_err(rkrp_core::Error::from)?;

    let pattern = match args.random_stragglers {
        Some(s) => {
            let k = args.big_n.checked_sub(s).ok_or_else(|| {
                CliError::Config(format!("{s} stragglers requested from {} workers", args.big_n))
            })?;
            sample_pattern(&StragglerModel::UniformKOfN { k }, args.big_n, spec.k(), args.seed)
                .map_err(rkrp_core::Error::from)?
        }
        None => StragglerPattern::from_stragglers(args.stragglers.iter().copied(), args.big_n)
            .map_err(rkrp_core::Error::from)?,
    };
    if pattern.len() < spec.k() {
        return Err(DecodeError::InsufficientResponders {
            got: pattern.len(),
            needed: spec.k(),
        }
        .into());
    }

    let outcome = coded_multiply(&spec, &a_t, &b, &pattern, DecodeOptions::default())?;
    let report = outcome.report;
    let product = report.product.block(0, 0, orig.0, orig.1);
    let direct = a_t.matmul(&b).map_err(rkrp_core::Error::from)?.block(0, 0, orig.0, orig.1);
    let relative_error = relative_error(&direct, &product).ok();

    write_matrix(&args.out, &product)?;
    let summary = DemoSummary {
        kind: args.kind,
        m: args.m,
        n: args.n,
        big_n: args.big_n,
        stragglers: pattern.stragglers(),
        responders_used: report.responders_used,
        solve_dim: report.solve_dim,
        condition_estimate: report.condition_estimate,
        product_shape: product.shape(),
        padded: args.pad,
        relative_error,
    };
    Ok((product, summary))
}
