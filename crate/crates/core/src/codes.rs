//! Code families: coefficient sampling, generator matrices and per-worker
//! encodings.
//!
//! Every family encodes worker `i` as
//!
//! ```text
//! Uᵢᵀ = Σ_j a[i,j] A_jᵀ      Vᵢ = Σ_l b[i,l] B_l
//! Xᵢ  = Σ_{j,l} a[i,j] b[i,l] A_jᵀ B_l
//! ```
//!
//! so one scalar entry of the `N` worker products is `G · w`, where `G` is
//! `N x mn` and `w` lists the same entry of every block product in flat
//! block order (block-column index varying fastest).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{khatri_rao_rowwise, kr_factor_columns, DenseMatrix, LinalgError};
use crate::runtime::WorkerTask;
use crate::{stream_rng, COEFFICIENT_STREAM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodeError {
    #[error("need at least K = {k} workers, got N = {big_n}")]
    TooFewWorkers { k: usize, big_n: usize },
    #[error("block counts must be positive (m = {m}, n = {n})")]
    ZeroBlocks { m: usize, n: usize },
    #[error("invalid coefficient distribution: {0}")]
    Distribution(String),
    #[error("coefficient matrix {name} has shape {got:?}, expected {expected:?}")]
    CoefficientShape {
        name: &'static str,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("{kind} codes carry {what}")]
    Malformed { kind: CodeKind, what: &'static str },
    #[error("block lists do not match the code: {0}")]
    BlockMismatch(String),
    #[error("unknown code kind `{0}`")]
    UnknownKind(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum CodeKind {
    RkrpNonsystematic,
    RkrpSystematic,
    Orthopoly,
    Polynomial,
}

impl CodeKind {
    pub const ALL: [CodeKind; 4] = [
        CodeKind::RkrpNonsystematic,
        CodeKind::RkrpSystematic,
        CodeKind::Orthopoly,
        CodeKind::Polynomial,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeKind::RkrpNonsystematic => "rkrp-nonsystematic",
            CodeKind::RkrpSystematic => "rkrp-systematic",
            CodeKind::Orthopoly => "orthopoly",
            CodeKind::Polynomial => "polynomial",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, CodeKind::RkrpNonsystematic | CodeKind::RkrpSystematic)
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeKind {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rkrp-nonsystematic" | "nonsystematic" | "nonsys" | "rkrp" => {
                Ok(CodeKind::RkrpNonsystematic)
            }
            "rkrp-systematic" | "systematic" | "sys" => Ok(CodeKind::RkrpSystematic),
            "orthopoly" | "ortho" => Ok(CodeKind::Orthopoly),
            "polynomial" | "poly" => Ok(CodeKind::Polynomial),
            other => Err(CodeError::UnknownKind(other.to_string())),
        }
    }
}

/// Continuous law the random coefficients are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum CoefficientLaw {
    Gaussian { mean: f64, std: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDistribution {
    pub law: CoefficientLaw,
    pub seed: u64,
}

impl CoefficientDistribution {
    pub fn gaussian(mean: f64, std: f64, seed: u64) -> Result<Self, CodeError> {
        if !mean.is_finite() || !std.is_finite() || std <= 0.0 {
            return Err(CodeError::Distribution(format!(
                "gaussian needs finite mean and positive std, got ({mean}, {std})"
            )));
        }
        Ok(Self {
            law: CoefficientLaw::Gaussian { mean, std },
            seed,
        })
    }

    /// Gaussian(0, 1).
    pub fn standard(seed: u64) -> Self {
        Self {
            law: CoefficientLaw::Gaussian { mean: 0.0, std: 1.0 },
            seed,
        }
    }

    fn sample_pair(&self, rows: usize, m: usize, n: usize) -> (DenseMatrix, DenseMatrix) {
        let mut rng = stream_rng(self.seed, COEFFICIENT_STREAM);
        let CoefficientLaw::Gaussian { mean, std } = self.law;
        let normal = Normal::new(mean, std).expect("validated on construction");
        let p = DenseMatrix::from_fn(rows, m, |_, _| normal.sample(&mut rng));
        let q = DenseMatrix::from_fn(rows, n, |_, _| normal.sample(&mut rng));
        (p, q)
    }
}

/// Evaluation points for the Polynomial baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolynomialNodes {
    /// `x_i = −1 + 2(i−1)/(N−1)`.
    #[default]
    Equispaced,
    /// `x_i = i`.
    Integer,
}

impl PolynomialNodes {
    pub fn points(self, big_n: usize) -> Vec<f64> {
        match self {
            PolynomialNodes::Integer => (1..=big_n).map(|i| i as f64).collect(),
            PolynomialNodes::Equispaced if big_n == 1 => vec![0.0],
            PolynomialNodes::Equispaced => (0..big_n)
                .map(|i| -1.0 + 2.0 * i as f64 / (big_n - 1) as f64)
                .collect(),
        }
    }
}

/// One code instance. Immutable once built; RKRP coefficients are sampled
/// once and shared by every scalar position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCodeSpec", into = "RawCodeSpec")]
pub struct CodeSpec {
    kind: CodeKind,
    m: usize,
    n: usize,
    big_n: usize,
    seed: Option<u64>,
    p: Option<DenseMatrix>,
    q: Option<DenseMatrix>,
    nodes: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawCodeSpec {
    kind: CodeKind,
    m: usize,
    n: usize,
    #[serde(rename = "N")]
    big_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<DenseMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<DenseMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<f64>>,
}

impl From<CodeSpec> for RawCodeSpec {
    fn from(s: CodeSpec) -> Self {
        RawCodeSpec {
            kind: s.kind,
            m: s.m,
            n: s.n,
            big_n: s.big_n,
            seed: s.seed,
            p: s.p,
            q: s.q,
            nodes: s.nodes,
        }
    }
}

impl TryFrom<RawCodeSpec> for CodeSpec {
    type Error = CodeError;

    fn try_from(raw: RawCodeSpec) -> Result<Self, Self::Error> {
        let spec = CodeSpec {
            kind: raw.kind,
            m: raw.m,
            n: raw.n,
            big_n: raw.big_n,
            seed: raw.seed,
            p: raw.p,
            q: raw.q,
            nodes: raw.nodes,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn check_geometry(m: usize, n: usize, big_n: usize) -> Result<(), CodeError> {
    if m == 0 || n == 0 {
        return Err(CodeError::ZeroBlocks { m, n });
    }
    if big_n < m * n {
        return Err(CodeError::TooFewWorkers { k: m * n, big_n });
    }
    Ok(())
}

pub fn sample_rkrp_nonsystematic(
    m: usize,
    n: usize,
    big_n: usize,
    dist: &CoefficientDistribution,
) -> Result<CodeSpec, CodeError> {
    check_geometry(m, n, big_n)?;
    let (p, q) = dist.sample_pair(big_n, m, n);
    Ok(CodeSpec {
        kind: CodeKind::RkrpNonsystematic,
        m,
        n,
        big_n,
        seed: Some(dist.seed),
        p: Some(p),
        q: Some(q),
        nodes: None,
    })
}

/// Workers `1..=K` are uncoded; only the `N − K` parity workers get
/// random coefficients.
pub fn sample_rkrp_systematic(
    m: usize,
    n: usize,
    big_n: usize,
    dist: &CoefficientDistribution,
) -> Result<CodeSpec, CodeError> {
    check_geometry(m, n, big_n)?;
    let (p, q) = dist.sample_pair(big_n - m * n, m, n);
    Ok(CodeSpec {
        kind: CodeKind::RkrpSystematic,
        m,
        n,
        big_n,
        seed: Some(dist.seed),
        p: Some(p),
        q: Some(q),
        nodes: None,
    })
}

pub fn build_orthopoly(m: usize, n: usize, big_n: usize) -> Result<CodeSpec, CodeError> {
    check_geometry(m, n, big_n)?;
    Ok(CodeSpec {
        kind: CodeKind::Orthopoly,
        m,
        n,
        big_n,
        seed: None,
        p: None,
        q: None,
        nodes: Some(chebyshev_nodes(big_n)),
    })
}

pub fn build_polynomial(m: usize, n: usize, big_n: usize) -> Result<CodeSpec, CodeError> {
    build_polynomial_with_nodes(m, n, big_n, PolynomialNodes::default())
}

pub fn build_polynomial_with_nodes(
    m: usize,
    n: usize,
    big_n: usize,
    nodes: PolynomialNodes,
) -> Result<CodeSpec, CodeError> {
    check_geometry(m, n, big_n)?;
    Ok(CodeSpec {
        kind: CodeKind::Polynomial,
        m,
        n,
        big_n,
        seed: None,
        p: None,
        q: None,
        nodes: Some(nodes.points(big_n)),
    })
}

/// Builds a code of the given family, sampling coefficients from `dist`
/// for the random kinds.
pub fn build_code(
    kind: CodeKind,
    m: usize,
    n: usize,
    big_n: usize,
    dist: &CoefficientDistribution,
) -> Result<CodeSpec, CodeError> {
    match kind {
        CodeKind::RkrpNonsystematic => sample_rkrp_nonsystematic(m, n, big_n, dist),
        CodeKind::RkrpSystematic => sample_rkrp_systematic(m, n, big_n, dist),
        CodeKind::Orthopoly => build_orthopoly(m, n, big_n),
        CodeKind::Polynomial => build_polynomial(m, n, big_n),
    }
}

impl CodeSpec {
    /// RKRP code with explicit coefficient matrices (`N x m`, `N x n` for
    /// the non-systematic kind, `(N−K) x m`, `(N−K) x n` for systematic).
    pub fn from_coefficients(
        kind: CodeKind,
        m: usize,
        n: usize,
        big_n: usize,
        p: DenseMatrix,
        q: DenseMatrix,
    ) -> Result<Self, CodeError> {
        let spec = CodeSpec {
            kind,
            m,
            n,
            big_n,
            seed: None,
            p: Some(p),
            q: Some(q),
            nodes: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Code with explicit evaluation nodes (OrthoPoly or Polynomial).
    pub fn from_nodes(kind: CodeKind, m: usize, n: usize, nodes: Vec<f64>) -> Result<Self, CodeError> {
        let spec = CodeSpec {
            kind,
            m,
            n,
            big_n: nodes.len(),
            seed: None,
            p: None,
            q: None,
            nodes: Some(nodes),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CodeError> {
        check_geometry(self.m, self.n, self.big_n)?;
        let kind = self.kind;
        match kind {
            CodeKind::RkrpNonsystematic | CodeKind::RkrpSystematic => {
                let rows = if kind == CodeKind::RkrpSystematic {
                    self.big_n - self.k()
                } else {
                    self.big_n
                };
                let (Some(p), Some(q)) = (&self.p, &self.q) else {
                    return Err(CodeError::Malformed {
                        kind,
                        what: "no coefficient matrices",
                    });
                };
                if p.shape() != (rows, self.m) {
                    return Err(CodeError::CoefficientShape {
                        name: "p",
                        got: p.shape(),
                        expected: (rows, self.m),
                    });
                }
                if q.shape() != (rows, self.n) {
                    return Err(CodeError::CoefficientShape {
                        name: "q",
                        got: q.shape(),
                        expected: (rows, self.n),
                    });
                }
                if self.nodes.is_some() {
                    return Err(CodeError::Malformed {
                        kind,
                        what: "evaluation nodes",
                    });
                }
            }
            CodeKind::Orthopoly | CodeKind::Polynomial => {
                let Some(nodes) = &self.nodes else {
                    return Err(CodeError::Malformed {
                        kind,
                        what: "no evaluation nodes",
                    });
                };
                if nodes.len() != self.big_n || nodes.iter().any(|x| !x.is_finite()) {
                    return Err(CodeError::Malformed {
                        kind,
                        what: "a node list that does not match N",
                    });
                }
                if kind == CodeKind::Orthopoly && nodes.iter().any(|x| x.abs() > 1.0) {
                    return Err(CodeError::Malformed {
                        kind,
                        what: "nodes outside [-1, 1]",
                    });
                }
                if self.p.is_some() || self.q.is_some() {
                    return Err(CodeError::Malformed {
                        kind,
                        what: "coefficient matrices",
                    });
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Worker count `N`.
    pub fn big_n(&self) -> usize {
        self.big_n
    }

    /// Recovery threshold `K = m·n`.
    pub fn k(&self) -> usize {
        self.m * self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn p(&self) -> Option<&DenseMatrix> {
        self.p.as_ref()
    }

    pub fn q(&self) -> Option<&DenseMatrix> {
        self.q.as_ref()
    }

    pub fn nodes(&self) -> Option<&[f64]> {
        self.nodes.as_deref()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("CodeSpec is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Whether worker `i` (1-based) receives raw blocks.
    pub fn is_systematic_worker(&self, worker: usize) -> bool {
        self.kind == CodeKind::RkrpSystematic && worker <= self.k()
    }

    /// Parity part `F = P ⊙ Q` of a systematic generator (`(N−K) x K`).
    pub fn parity_matrix(&self) -> Option<DenseMatrix> {
        if self.kind != CodeKind::RkrpSystematic {
            return None;
        }
        let (p, q) = (self.p.as_ref()?, self.q.as_ref()?);
        Some(khatri_rao_rowwise(p, q).expect("validated shapes"))
    }

    /// Per-worker encoding weights: `a` is `N x m` (applied to the `A_jᵀ`),
    /// `b` is `N x n` (applied to the `B_l`).
    pub fn encoding_coefficients(&self) -> (DenseMatrix, DenseMatrix) {
        let (m, n, big_n, k) = (self.m, self.n, self.big_n, self.k());
        match self.kind {
            CodeKind::RkrpNonsystematic => (
                self.p.clone().expect("validated"),
                self.q.clone().expect("validated"),
            ),
            CodeKind::RkrpSystematic => {
                let (p, q) = (self.p.as_ref().expect("validated"), self.q.as_ref().expect("validated"));
                let a = DenseMatrix::from_fn(big_n, m, |r, c| {
                    if r < k {
                        f64::from(u8::from(kr_factor_columns(r + 1, n).0 == c + 1))
                    } else {
                        p.get(r - k, c)
                    }
                });
                let b = DenseMatrix::from_fn(big_n, n, |r, c| {
                    if r < k {
                        f64::from(u8::from(kr_factor_columns(r + 1, n).1 == c + 1))
                    } else {
                        q.get(r - k, c)
                    }
                });
                (a, b)
            }
            CodeKind::Orthopoly => {
                let x = self.nodes.as_ref().expect("validated");
                (
                    DenseMatrix::from_fn(big_n, m, |r, c| chebyshev_t(c, x[r])),
                    DenseMatrix::from_fn(big_n, n, |r, c| chebyshev_t(c * m, x[r])),
                )
            }
            CodeKind::Polynomial => {
                let x = self.nodes.as_ref().expect("validated");
                (
                    DenseMatrix::from_fn(big_n, m, |r, c| x[r].powi(c as i32)),
                    DenseMatrix::from_fn(big_n, n, |r, c| x[r].powi((c * m) as i32)),
                )
            }
        }
    }

    /// Row `worker` (1-based) of [`generator_matrix`].
    pub fn generator_row(&self, worker: usize) -> GeneratorRow {
        assert!((1..=self.big_n).contains(&worker), "worker {worker} out of range");
        let g = generator_matrix(self);
        GeneratorRow {
            worker,
            weights: g.row(worker - 1).to_vec(),
        }
    }
}

/// One row of the generator: the weights mapping `w` to a worker's value.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorRow {
    pub worker: usize,
    pub weights: Vec<f64>,
}

/// `x_i = cos((2i−1)π / 2N)` for `i = 1..=N`, strictly decreasing.
pub fn chebyshev_nodes(big_n: usize) -> Vec<f64> {
    (1..=big_n)
        .map(|i| ((2 * i - 1) as f64 * PI / (2 * big_n) as f64).cos())
        .collect()
}

/// Chebyshev polynomial of the first kind, `T_r(x) = cos(r·arccos x)`, for
/// `x ∈ [−1, 1]`.
#[inline]
pub fn chebyshev_t(r: usize, x: f64) -> f64 {
    (r as f64 * x.clamp(-1.0, 1.0).acos()).cos()
}

/// Chebyshev-Vandermonde matrix `[T_{c}(x_r)]` with `degrees` columns.
pub fn chebyshev_vandermonde(nodes: &[f64], degrees: usize) -> DenseMatrix {
    DenseMatrix::from_fn(nodes.len(), degrees, |r, c| chebyshev_t(c, nodes[r]))
}

/// Basis-change matrix taking block products (in Chebyshev-degree order,
/// column `(i−1)+(j−1)m+1` for A-block `i` and B-block `j`) to Chebyshev
/// coefficients, built from `T_a·T_b = ½(T_{a+b} + T_{|a−b|})`.
/// Coinciding cases accumulate.
pub fn orthopoly_h_matrix(m: usize, n: usize) -> DenseMatrix {
    let k = m * n;
    let mut h = DenseMatrix::zeros(k, k);
    for i in 1..=m {
        for j in 1..=n {
            let col = (i - 1) + (j - 1) * m;
            if i == 1 {
                h.set(col, col, h.get(col, col) + 1.0);
            } else {
                h.set(col, col, h.get(col, col) + 0.5);
                let low = (i - 1).abs_diff((j - 1) * m);
                h.set(low, col, h.get(low, col) + 0.5);
            }
        }
    }
    h
}

/// `order[c]` is the 0-based flat block index of Chebyshev-degree column `c`.
pub fn degree_to_block_order(m: usize, n: usize) -> Vec<usize> {
    let mut order = vec![0; m * n];
    for i in 1..=m {
        for j in 1..=n {
            order[(i - 1) + (j - 1) * m] = (i - 1) * n + (j - 1);
        }
    }
    order
}

/// Permutes columns of a matrix from Chebyshev-degree order to flat block
/// order.
pub(crate) fn degree_cols_to_block_order(mat: &DenseMatrix, m: usize, n: usize) -> DenseMatrix {
    let order = degree_to_block_order(m, n);
    let mut inverse = vec![0; order.len()];
    for (deg, &blk) in order.iter().enumerate() {
        inverse[blk] = deg;
    }
    mat.select_cols(&inverse)
}

/// `N x K` matrix with `y = G·w` for every scalar position, `w` in flat
/// block order. OrthoPoly returns the composite `G_O·H` (columns permuted
/// to block order).
pub fn generator_matrix(spec: &CodeSpec) -> DenseMatrix {
    let (m, n, k) = (spec.m, spec.n, spec.k());
    match spec.kind {
        CodeKind::RkrpNonsystematic => khatri_rao_rowwise(
            spec.p.as_ref().expect("validated"),
            spec.q.as_ref().expect("validated"),
        )
        .expect("validated shapes"),
        CodeKind::RkrpSystematic => {
            let f = spec.parity_matrix().expect("validated");
            let mut g = DenseMatrix::zeros(spec.big_n, k);
            g.write_block(0, 0, &DenseMatrix::identity(k));
            g.write_block(k, 0, &f);
            g
        }
        CodeKind::Orthopoly => {
            let go = chebyshev_vandermonde(spec.nodes.as_ref().expect("validated"), k);
            let composite = go.matmul(&orthopoly_h_matrix(m, n)).expect("K x K");
            degree_cols_to_block_order(&composite, m, n)
        }
        CodeKind::Polynomial => {
            let x = spec.nodes.as_ref().expect("validated");
            DenseMatrix::from_fn(spec.big_n, k, |r, c| {
                let (jp, jpp) = kr_factor_columns(c + 1, n);
                x[r].powi(((jp - 1) + (jpp - 1) * m) as i32)
            })
        }
    }
}

/// Builds the `N` worker tasks. Systematic workers `i ≤ K` receive clones
/// of `(A_{i'}ᵀ, B_{i''})` with no arithmetic.
pub fn encode_tasks(
    spec: &CodeSpec,
    a_blocks: &[DenseMatrix],
    b_blocks: &[DenseMatrix],
) -> Result<Vec<WorkerTask>, CodeError> {
    if a_blocks.len() != spec.m || b_blocks.len() != spec.n {
        return Err(CodeError::BlockMismatch(format!(
            "code has (m, n) = ({}, {}), got {} A-blocks and {} B-blocks",
            spec.m,
            spec.n,
            a_blocks.len(),
            b_blocks.len()
        )));
    }
    let a_shape = a_blocks[0].shape();
    let b_shape = b_blocks[0].shape();
    if a_blocks.iter().any(|a| a.shape() != a_shape)
        || b_blocks.iter().any(|b| b.shape() != b_shape)
        || a_shape.1 != b_shape.0
    {
        return Err(CodeError::BlockMismatch("inconsistent block shapes".into()));
    }
    let (ca, cb) = spec.encoding_coefficients();
    let combine = |blocks: &[DenseMatrix], weights: &[f64]| {
        let mut acc = DenseMatrix::zeros(blocks[0].rows(), blocks[0].cols());
        for (blk, &w) in blocks.iter().zip(weights) {
            acc.add_scaled(w, blk).expect("shapes checked");
        }
        acc
    };
    let tasks = (1..=spec.big_n)
        .map(|worker| {
            if spec.is_systematic_worker(worker) {
                let (jp, jpp) = kr_factor_columns(worker, spec.n);
                WorkerTask {
                    worker,
                    u_t: a_blocks[jp - 1].clone(),
                    v: b_blocks[jpp - 1].clone(),
                }
            } else {
                WorkerTask {
                    worker,
                    u_t: combine(a_blocks, ca.row(worker - 1)),
                    v: combine(b_blocks, cb.row(worker - 1)),
                }
            }
        })
        .collect();
    Ok(tasks)
}
