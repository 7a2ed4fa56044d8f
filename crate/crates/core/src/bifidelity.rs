//! Bi-fidelity surrogate pipeline: a low-fidelity polynomial-chaos surrogate
//! corrected by a univariate Fourier-polynomial link fitted from a handful
//! of high-fidelity runs.
//!
//! The link basis lives in the low-fidelity *output* variable: orthonormal
//! polynomials consistent with the distribution of the low surrogate's
//! output, whose moments are estimated from surrogate realizations on fresh
//! quasi-Monte Carlo inputs. Link coefficients are fitted on matched pairs
//! {y_low(x), y_high(x)} where both solvers are run at identical inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{RandomInputModel, SampleScheme, Sampler};
use crate::error::{Error, Result};
use crate::models::{evaluate_checked, CountingEvaluator, ModelEvaluator};
use crate::multiindex::generate_reduced_with_cap;
use crate::orthopoly::{
    build_basis, BasisIndex, MomentOptions, OrthonormalBasis, PointSource,
};
use crate::risk::{risk_input_sampler, var_cvar, Estimator, RiskEstimate};
use crate::stats::derive_seed;
use crate::surrogate::{fit_sls, DdGpceSurrogate, ExperimentalDesign, FidelityTag, FitReport};

/// Relative variance below which a low-fidelity output is considered
/// constant and the link construction aborts.
pub const DEGENERATE_VARIANCE_FLOOR: f64 = 1e-12;

/// Allowed pair-count factor range: 3 <= L'' / (link_degree + 1) <= 8.
pub const PAIR_FACTOR_MIN: f64 = 3.0;
pub const PAIR_FACTOR_MAX: f64 = 8.0;

/// Univariate expansion mapping the low-fidelity output to the high-fidelity
/// output.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierLink {
    pub basis: OrthonormalBasis,
    pub coefficients: DVector<f64>,
    pub fit_report: FitReport,
    pub pair_count: usize,
    collapsed: DVector<f64>,
}

impl FourierLink {
    pub fn from_parts(
        basis: OrthonormalBasis,
        coefficients: DVector<f64>,
        fit_report: FitReport,
        pair_count: usize,
    ) -> Result<Self> {
        if coefficients.len() != basis.cardinality() {
            return Err(Error::DimensionMismatch {
                expected: basis.cardinality(),
                actual: coefficients.len(),
                context: "link coefficients vs basis".into(),
            });
        }
        let collapsed = basis.collapse_coefficients(&coefficients);
        Ok(FourierLink {
            basis,
            coefficients,
            fit_report,
            pair_count,
            collapsed,
        })
    }

    pub fn degree(&self) -> u32 {
        match self.basis.index {
            BasisIndex::Univariate { degree } => degree,
            BasisIndex::Multivariate { .. } => unreachable!("link bases are univariate"),
        }
    }

    pub fn evaluate(&self, low_values: &[f64]) -> Vec<f64> {
        let column = DMatrix::from_column_slice(low_values.len(), 1, low_values);
        self.basis.eval_collapsed(&self.collapsed, &column)
    }

    pub fn evaluate_scalar(&self, low_value: f64) -> f64 {
        self.evaluate(&[low_value])[0]
    }
}

/// Seeds and sizes that produced a bi-fidelity surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub design_size: usize,
    pub pair_count: usize,
    pub moment_samples: usize,
    pub low_evaluations: u64,
    pub high_evaluations: u64,
}

/// Low-fidelity surrogate plus the high-fidelity correction link.
#[derive(Debug, Clone, PartialEq)]
pub struct BiFidelitySurrogate {
    pub low: DdGpceSurrogate,
    pub link: FourierLink,
    pub provenance: Provenance,
}

impl BiFidelitySurrogate {
    pub fn dimension(&self) -> usize {
        self.low.dimension()
    }

    /// link(low(x)) on a batch of input rows.
    pub fn evaluate(&self, points: &DMatrix<f64>) -> Vec<f64> {
        self.link.evaluate(&self.low.evaluate(points))
    }
}

/// Cost model for choosing the low-fidelity level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetModel {
    pub total_budget: f64,
    pub high_cost: f64,
    pub low_cost: f64,
    pub design_size: usize,
    pub pair_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    /// Permissible low-fidelity cost (budget minus high-fidelity runs,
    /// spread over the design): (c_T - L'' c_H) / L'.
    pub low_cost_bound: f64,
    /// Whether the configured low-fidelity cost fits the bound.
    pub feasible: bool,
    /// Set when the high-fidelity runs alone exceed the budget.
    pub infeasible_budget: bool,
}

/// Evaluate the cost inequality; an exhausted budget is flagged, not fatal.
pub fn check_budget(budget: &BudgetModel) -> Result<BudgetReport> {
    if budget.total_budget <= 0.0 || budget.high_cost <= 0.0 || budget.low_cost < 0.0 {
        return Err(Error::InvalidArgument(
            "budget and per-run costs must be positive".into(),
        ));
    }
    if budget.design_size == 0 {
        return Err(Error::InvalidArgument("design size must be >= 1".into()));
    }
    let remaining = budget.total_budget - budget.pair_count as f64 * budget.high_cost;
    let low_cost_bound = remaining / budget.design_size as f64;
    Ok(BudgetReport {
        low_cost_bound,
        feasible: remaining >= 0.0 && budget.low_cost <= low_cost_bound,
        infeasible_budget: remaining < 0.0,
    })
}

/// Draw a seeded design, run one fidelity's evaluator, and fit a surrogate.
#[allow(clippy::too_many_arguments)]
pub fn fit_fidelity_surrogate(
    basis: &OrthonormalBasis,
    model: &RandomInputModel,
    evaluator: &dyn ModelEvaluator,
    design_size: usize,
    seed: u64,
    scheme: SampleScheme,
    ratio_min: f64,
    fidelity: FidelityTag,
) -> Result<DdGpceSurrogate> {
    let sampler = model.sampler(scheme, design_size, derive_seed(seed, "design"))?;
    let inputs = collect_points(&sampler)?;
    let outputs = evaluate_checked(evaluator, &inputs, 0)?;
    let design = ExperimentalDesign::new(inputs, outputs, fidelity)?;
    fit_sls(basis, &design, ratio_min)
}

fn collect_points(sampler: &Sampler<'_>) -> Result<DMatrix<f64>> {
    Ok(sampler.collect_batch()?.points)
}

/// Point source producing realizations of a surrogate on fresh inputs,
/// used for estimating the link basis moments.
pub struct SurrogateOutputSource<'a> {
    pub sampler: Sampler<'a>,
    pub surrogate: &'a DdGpceSurrogate,
}

impl PointSource for SurrogateOutputSource<'_> {
    fn dimension(&self) -> usize {
        1
    }
    fn count(&self) -> usize {
        self.sampler.count()
    }
    fn chunk_count(&self) -> usize {
        self.sampler.chunk_count()
    }
    fn chunk(&self, index: usize) -> Result<DMatrix<f64>> {
        let values = self.surrogate.evaluate(&self.sampler.chunk(index));
        Ok(DMatrix::from_column_slice(values.len(), 1, &values))
    }
}

/// Build the univariate orthonormal basis in the low-fidelity output from
/// surrogate realizations on fresh quasi-Monte Carlo inputs.
pub fn build_link_basis(
    low: &DdGpceSurrogate,
    model: &RandomInputModel,
    link_degree: u32,
    moment_samples: usize,
    seed: u64,
) -> Result<OrthonormalBasis> {
    if link_degree == 0 {
        return Err(Error::InvalidArgument(
            "link degree must be >= 1 (a constant link cannot correct anything)".into(),
        ));
    }
    let needed = 10 * (link_degree as usize + 1);
    if moment_samples < needed {
        return Err(Error::InvalidArgument(format!(
            "link moment sample count {moment_samples} is below {needed}"
        )));
    }
    let sampler = model.sampler(
        SampleScheme::Qmcs,
        moment_samples,
        derive_seed(seed, "link-moments"),
    )?;
    let source = SurrogateOutputSource {
        sampler,
        surrogate: low,
    };
    // Degeneracy check on the realized output scale.
    let (mean, std) = crate::orthopoly::source_mean_std(&source)?;
    let variance = std[0] * std[0];
    if variance <= DEGENERATE_VARIANCE_FLOOR * mean[0].mul_add(mean[0], 1.0) {
        return Err(Error::DegenerateLowFidelity { variance });
    }
    build_basis(
        &source,
        BasisIndex::Univariate { degree: link_degree },
        MomentOptions::default(),
    )
}

/// Fit link coefficients on matched low/high output pairs.
pub fn fit_link(
    link_basis: &OrthonormalBasis,
    low_values: &[f64],
    high_values: &[f64],
) -> Result<FourierLink> {
    if low_values.len() != high_values.len() {
        return Err(Error::DimensionMismatch {
            expected: low_values.len(),
            actual: high_values.len(),
            context: "link pair counts".into(),
        });
    }
    let pair_count = low_values.len();
    let k = link_basis.cardinality();
    if pair_count <= k {
        return Err(Error::InvalidArgument(format!(
            "need more than {k} pairs to fit a degree-{} link, got {pair_count}",
            k - 1
        )));
    }
    let factor = pair_count as f64 / k as f64;
    let inputs = DMatrix::from_column_slice(pair_count, 1, low_values);
    let design = ExperimentalDesign::new(inputs, high_values.to_vec(), FidelityTag::High)?;
    let mut fitted = fit_sls(link_basis, &design, PAIR_FACTOR_MIN)?;
    fitted.fit_report.ratio_warning = !(PAIR_FACTOR_MIN..=PAIR_FACTOR_MAX).contains(&factor);
    FourierLink::from_parts(
        fitted.basis,
        fitted.coefficients,
        fitted.fit_report,
        pair_count,
    )
}

/// Sizes, seeds, and truncation orders for the full bi-fidelity pipeline.
#[derive(Debug, Clone, Copy)]
pub struct BiFidelityConfig {
    pub interaction_order: usize,
    pub degree: u32,
    pub link_degree: u32,
    /// L: sample count for the final risk estimate.
    pub risk_samples: usize,
    /// L': low-fidelity design size.
    pub design_size: usize,
    /// L'': high-fidelity pair count.
    pub pair_count: usize,
    /// L-bar: moment-estimation sample count.
    pub moment_samples: usize,
    pub beta: f64,
    pub seed: u64,
    pub estimator: Estimator,
    pub ratio_min: f64,
    pub cardinality_cap: u128,
}

/// The complete bi-fidelity run: input basis, low fit, link basis, link fit,
/// and the final sampling-based risk estimate. Every failure names the step.
pub fn run_algorithm2(
    model: &RandomInputModel,
    low_evaluator: &dyn ModelEvaluator,
    high_evaluator: &dyn ModelEvaluator,
    cfg: &BiFidelityConfig,
) -> Result<(RiskEstimate, BiFidelitySurrogate)> {
    let surrogate = build_bifidelity_surrogate(model, low_evaluator, high_evaluator, cfg)?;
    let values = bifi_samples(&surrogate, model, cfg.risk_samples, cfg.seed)
        .map_err(|e| e.at_step("estimate"))?;
    let estimate =
        var_cvar(&values, cfg.beta, cfg.estimator).map_err(|e| e.at_step("estimate"))?;
    Ok((estimate, surrogate))
}

/// Steps 1-4: input basis, low-fidelity fit, link basis, link fit.
pub fn build_bifidelity_surrogate(
    model: &RandomInputModel,
    low_evaluator: &dyn ModelEvaluator,
    high_evaluator: &dyn ModelEvaluator,
    cfg: &BiFidelityConfig,
) -> Result<BiFidelitySurrogate> {
    let low_counter = CountingEvaluator::new(low_evaluator);
    let high_counter = CountingEvaluator::new(high_evaluator);

    // Orthonormal basis in the inputs.
    let set = generate_reduced_with_cap(
        model.dimension(),
        cfg.interaction_order,
        cfg.degree,
        cfg.cardinality_cap,
    )
    .map_err(|e| e.at_step("input-basis"))?;
    let moment_sampler = model
        .sampler(
            SampleScheme::Qmcs,
            cfg.moment_samples,
            derive_seed(cfg.seed, "moments"),
        )
        .map_err(|e| e.at_step("input-basis"))?;
    let basis = build_basis(
        &moment_sampler,
        BasisIndex::Multivariate { set },
        MomentOptions::default(),
    )
    .map_err(|e| e.at_step("input-basis"))?;

    // Low-fidelity expansion coefficients.
    let low = fit_fidelity_surrogate(
        &basis,
        model,
        &low_counter,
        cfg.design_size,
        cfg.seed,
        SampleScheme::Mcs,
        cfg.ratio_min,
        FidelityTag::Low,
    )
    .map_err(|e| e.at_step("low-fit"))?;

    // Orthonormal polynomials in the low-fidelity output.
    let link_basis = build_link_basis(&low, model, cfg.link_degree, cfg.moment_samples, cfg.seed)
        .map_err(|e| e.at_step("link-basis"))?;

    // Matched pairs at fresh inputs: both solvers run at identical points.
    let pair_sampler = model
        .sampler(
            SampleScheme::Mcs,
            cfg.pair_count,
            derive_seed(cfg.seed, "pairs"),
        )
        .map_err(|e| e.at_step("pairs"))?;
    let pair_inputs = collect_points(&pair_sampler).map_err(|e| e.at_step("pairs"))?;
    let pair_low =
        evaluate_checked(&low_counter, &pair_inputs, 0).map_err(|e| e.at_step("pairs"))?;
    let pair_high =
        evaluate_checked(&high_counter, &pair_inputs, 0).map_err(|e| e.at_step("pairs"))?;
    let link =
        fit_link(&link_basis, &pair_low, &pair_high).map_err(|e| e.at_step("link-fit"))?;

    Ok(BiFidelitySurrogate {
        low,
        link,
        provenance: Provenance {
            seed: cfg.seed,
            design_size: cfg.design_size,
            pair_count: cfg.pair_count,
            moment_samples: cfg.moment_samples,
            low_evaluations: low_counter.samples(),
            high_evaluations: high_counter.samples(),
        },
    })
}

/// Corrected-surrogate outputs on the shared risk input sample.
pub fn bifi_samples(
    surrogate: &BiFidelitySurrogate,
    model: &RandomInputModel,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    let sampler = risk_input_sampler(model, count, seed)?;
    let chunks: Vec<Vec<f64>> = (0..sampler.chunk_count())
        .into_par_iter()
        .map(|c| surrogate.evaluate(&sampler.chunk(c)))
        .collect();
    Ok(chunks.concat())
}
