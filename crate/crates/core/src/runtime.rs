//! Simulated master/worker round: workers multiply their encoded pair, a
//! straggler pattern decides who responds.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::{stream_rng, PATTERN_STREAM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatternError {
    #[error("{k} responders cannot reach the recovery threshold K = {big_k}")]
    Infeasible { k: usize, big_k: usize },
    #[error("{k} responders requested from only {big_n} workers")]
    TooManyResponders { k: usize, big_n: usize },
    #[error("worker {worker} outside [1, {big_n}]")]
    UnknownWorker { worker: usize, big_n: usize },
    #[error("straggle probability {0} outside [0, 1]")]
    Probability(f64),
}

/// The encoded pair shipped to one worker.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerTask {
    /// 1-based worker index.
    pub worker: usize,
    pub u_t: DenseMatrix,
    pub v: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerResult {
    pub worker: usize,
    pub x: DenseMatrix,
}

impl WorkerTask {
    pub fn compute(&self) -> WorkerResult {
        WorkerResult {
            worker: self.worker,
            x: self
                .u_t
                .matmul(&self.v)
                .expect("encoded pair shapes agree by construction"),
        }
    }
}

/// Runs every task, possibly in parallel. Output order matches input order.
pub fn compute_all(tasks: &[WorkerTask]) -> Vec<WorkerResult> {
    tasks.par_iter().map(WorkerTask::compute).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum StragglerModel {
    /// These 1-based workers respond.
    FixedSet { responders: Vec<usize> },
    /// A uniformly random `k`-subset responds.
    UniformKOfN { k: usize },
    /// Each worker independently straggles with this probability.
    Bernoulli { prob_straggle: f64 },
}

/// The set of workers whose results reach the master in a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StragglerPattern {
    responders: BTreeSet<usize>,
    big_n: usize,
}

impl StragglerPattern {
    pub fn from_responders(
        responders: impl IntoIterator<Item = usize>,
        big_n: usize,
    ) -> Result<Self, PatternError> {
        let responders: BTreeSet<usize> = responders.into_iter().collect();
        if let Some(&worker) = responders.iter().find(|&&w| w == 0 || w > big_n) {
            return Err(PatternError::UnknownWorker { worker, big_n });
        }
        Ok(Self { responders, big_n })
    }

    pub fn from_stragglers(
        stragglers: impl IntoIterator<Item = usize>,
        big_n: usize,
    ) -> Result<Self, PatternError> {
        let stragglers: BTreeSet<usize> = stragglers.into_iter().collect();
        if let Some(&worker) = stragglers.iter().find(|&&w| w == 0 || w > big_n) {
            return Err(PatternError::UnknownWorker { worker, big_n });
        }
        Ok(Self {
            responders: (1..=big_n).filter(|w| !stragglers.contains(w)).collect(),
            big_n,
        })
    }

    pub fn all(big_n: usize) -> Self {
        Self {
            responders: (1..=big_n).collect(),
            big_n,
        }
    }

    /// Ascending 1-based responder indices.
    pub fn responders(&self) -> impl Iterator<Item = usize> + '_ {
        self.responders.iter().copied()
    }

    pub fn responder_vec(&self) -> Vec<usize> {
        self.responders.iter().copied().collect()
    }

    pub fn stragglers(&self) -> Vec<usize> {
        (1..=self.big_n).filter(|w| !self.responders.contains(w)).collect()
    }

    pub fn contains(&self, worker: usize) -> bool {
        self.responders.contains(&worker)
    }

    pub fn len(&self) -> usize {
        self.responders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responders.is_empty()
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    /// Keeps only the results of responding workers.
    pub fn filter_results(&self, results: Vec<WorkerResult>) -> Vec<WorkerResult> {
        results.into_iter().filter(|r| self.contains(r.worker)).collect()
    }
}

/// Draws a pattern over `big_n` workers. Deterministic given `seed`.
pub fn sample_pattern(
    model: &StragglerModel,
    big_n: usize,
    big_k: usize,
    seed: u64,
) -> Result<StragglerPattern, PatternError> {
    let mut rng = stream_rng(seed, PATTERN_STREAM);
    sample_pattern_with(model, big_n, big_k, &mut rng)
}

pub fn sample_pattern_with<R: Rng + ?Sized>(
    model: &StragglerModel,
    big_n: usize,
    big_k: usize,
    rng: &mut R,
) -> Result<StragglerPattern, PatternError> {
    match model {
        StragglerModel::FixedSet { responders } => {
            StragglerPattern::from_responders(responders.iter().copied(), big_n)
        }
        &StragglerModel::UniformKOfN { k } => {
            if k < big_k {
                return Err(PatternError::Infeasible { k, big_k });
            }
            if k > big_n {
                return Err(PatternError::TooManyResponders { k, big_n });
            }
            let picked = sample(rng, big_n, k).into_iter().map(|i| i + 1);
            StragglerPattern::from_responders(picked, big_n)
        }
        &StragglerModel::Bernoulli { prob_straggle } => {
            if !(0.0..=1.0).contains(&prob_straggle) {
                return Err(PatternError::Probability(prob_straggle));
            }
            let picked: Vec<usize> = (1..=big_n)
                .filter(|_| !rng.random_bool(prob_straggle))
                .collect();
            StragglerPattern::from_responders(picked, big_n)
        }
    }
}

/// For a systematic code with `big_k` uncoded workers: the systematic
/// workers that straggled and the parity workers that responded.
pub fn split_pattern(pattern: &StragglerPattern, big_k: usize) -> (Vec<usize>, Vec<usize>) {
    let systematic_stragglers = (1..=big_k.min(pattern.big_n))
        .filter(|w| !pattern.contains(*w))
        .collect();
    let surviving_parity = pattern.responders().filter(|&w| w > big_k).collect();
    (systematic_stragglers, surviving_parity)
}
