//! Sampling-based VaR and CVaR estimation.
//!
//! Samples are sorted in descending order (stable, ties broken by original
//! index); the tail index k is the smallest k with
//! sum_{l<k} p_l <= 1-beta < sum_{l<=k} p_l, VaR is the k-th largest value,
//! and CVaR follows either the shifted-positive-part form (default, faster
//! converging) or the tail-indicator form. For uniform weights the tail
//! index has the closed form floor(L(1-beta)) + 1, which is used directly so
//! the cumulative scan cannot drift against it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{RandomInputModel, SampleScheme};
use crate::error::{Error, Result};
use crate::stats::derive_seed;
use crate::surrogate::DdGpceSurrogate;

/// Which CVaR estimator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// VaR + mean positive exceedance / (1-beta).
    Rockafellar,
    /// Tail-indicator average / (1-beta).
    Indicator,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Estimator::Rockafellar => write!(f, "rockafellar"),
            Estimator::Indicator => write!(f, "indicator"),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rockafellar" => Ok(Estimator::Rockafellar),
            "indicator" => Ok(Estimator::Indicator),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimator {other:?}; expected rockafellar or indicator"
            ))),
        }
    }
}

/// Point estimates of VaR and CVaR at one risk level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub beta: f64,
    pub var: f64,
    pub cvar: f64,
    pub sample_count: usize,
    /// Tail index: VaR is the k-th largest sample.
    pub k_beta: usize,
    pub estimator: Estimator,
}

fn validate_level(samples: usize, beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "risk level must lie in (0,1), got {beta}"
        )));
    }
    if samples == 0 || beta >= 1.0 - 1.0 / samples as f64 {
        return Err(Error::InsufficientTail { samples, beta });
    }
    Ok(())
}

/// VaR/CVaR from output samples with uniform probabilities 1/L.
pub fn var_cvar(values: &[f64], beta: f64, estimator: Estimator) -> Result<RiskEstimate> {
    let l = values.len();
    validate_level(l, beta)?;
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "output samples contain a non-finite value {v}"
        )));
    }
    let k_beta = (l as f64 * (1.0 - beta)).floor() as usize + 1;
    let var = kth_largest(values, k_beta);
    let cvar = match estimator {
        Estimator::Rockafellar => {
            let sum: f64 = values.iter().map(|y| (y - var).max(0.0)).sum();
            var + sum / (l as f64 * (1.0 - beta))
        }
        Estimator::Indicator => {
            let sum: f64 = values.iter().filter(|&&y| y >= var).sum();
            sum / (l as f64 * (1.0 - beta))
        }
    };
    Ok(RiskEstimate {
        beta,
        var,
        cvar,
        sample_count: l,
        k_beta,
        estimator,
    })
}

/// VaR/CVaR with explicit probability weights (importance-sampling weights
/// are admissible; no weight construction is provided here).
pub fn var_cvar_weighted(
    values: &[f64],
    probabilities: &[f64],
    beta: f64,
    estimator: Estimator,
) -> Result<RiskEstimate> {
    let l = values.len();
    validate_level(l, beta)?;
    if probabilities.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            actual: probabilities.len(),
            context: "probability weights".into(),
        });
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::WeightSum { sum });
    }
    // Exactly uniform weights take the closed-form path.
    if probabilities.windows(2).all(|w| w[0] == w[1]) {
        return var_cvar(values, beta, estimator);
    }

    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let tail_mass = 1.0 - beta;
    let mut cumulative = 0.0;
    let mut k_beta = l;
    for (rank, &idx) in order.iter().enumerate() {
        cumulative += probabilities[idx];
        if cumulative > tail_mass {
            k_beta = rank + 1;
            break;
        }
    }
    let var = values[order[k_beta - 1]];
    let cvar = match estimator {
        Estimator::Rockafellar => {
            let exceed: f64 = values
                .iter()
                .zip(probabilities)
                .map(|(y, p)| p * (y - var).max(0.0))
                .sum();
            var + exceed / tail_mass
        }
        Estimator::Indicator => {
            let tail: f64 = values
                .iter()
                .zip(probabilities)
                .filter(|(y, _)| **y >= var)
                .map(|(y, p)| p * y)
                .sum();
            tail / tail_mass
        }
    };
    Ok(RiskEstimate {
        beta,
        var,
        cvar,
        sample_count: l,
        k_beta,
        estimator,
    })
}

/// k-th largest value under descending order with index tie-break (the
/// tie-break cannot change the value, so a select suffices).
fn kth_largest(values: &[f64], k: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[sorted.len() - k]
}

/// Draw fresh Monte Carlo inputs from the model, evaluate the surrogate, and
/// estimate. Inputs are generated chunk by chunk and never materialized.
pub fn var_cvar_surrogate(
    surrogate: &DdGpceSurrogate,
    model: &RandomInputModel,
    count: usize,
    beta: f64,
    seed: u64,
    estimator: Estimator,
) -> Result<RiskEstimate> {
    let values = surrogate_samples(surrogate, model, count, seed)?;
    var_cvar(&values, beta, estimator)
}

/// The MCS input sampler used for risk estimation; shared by every pipeline
/// (single- and bi-fidelity) so estimates at equal seeds see equal inputs.
pub fn risk_input_sampler(
    model: &RandomInputModel,
    count: usize,
    seed: u64,
) -> Result<crate::distributions::Sampler<'_>> {
    model.sampler(SampleScheme::Mcs, count, derive_seed(seed, "risk-sample"))
}

/// Surrogate outputs on a fresh seeded MCS input sample.
pub fn surrogate_samples(
    surrogate: &DdGpceSurrogate,
    model: &RandomInputModel,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = risk_input_sampler(model, count, seed)?;
    let chunks: Vec<Vec<f64>> = (0..sampler.chunk_count())
        .into_par_iter()
        .map(|c| surrogate.evaluate(&sampler.chunk(c)))
        .collect();
    Ok(chunks.concat())
}

/// Mean relative difference of trial estimates from a benchmark.
pub fn mrd(benchmark: f64, trials: &[f64]) -> Result<f64> {
    if benchmark == 0.0 || !benchmark.is_finite() {
        return Err(Error::ZeroBenchmark);
    }
    if trials.is_empty() {
        return Err(Error::InvalidArgument("mrd needs at least one trial".into()));
    }
    let sum: f64 = trials.iter().map(|t| (benchmark - t).abs()).sum();
    Ok(sum / (trials.len() as f64 * benchmark.abs()))
}
