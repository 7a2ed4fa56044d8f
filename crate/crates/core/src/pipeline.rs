//! Command implementations behind the CLI: fit, estimate, bifit, trials,
//! sample, and validate. Every command validates the configuration up front
//! and produces deterministic report text (no timestamps, shortest
//! round-trip float formatting).

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::archive::{ArchiveProvenance, LoadedSurrogate, SurrogateArchive};
use crate::bifidelity::{
    bifi_samples, build_bifidelity_surrogate, check_budget, BiFidelityConfig, BudgetModel,
    BudgetReport,
};
use crate::config::{CommandKind, PipelineConfig};
use crate::distributions::{empirical_moments, ks_statistic, RandomInputModel, SampleBatch};
use crate::error::{Error, Result};
use crate::models::{evaluate_checked, CountingEvaluator};
use crate::multiindex::generate_reduced_with_cap;
use crate::orthopoly::{build_basis, BasisIndex, MomentOptions, OrthonormalBasis};
use crate::risk::{risk_input_sampler, var_cvar, Estimator, RiskEstimate};
use crate::stats::derive_seed;
use crate::surrogate::{fit_sls, ExperimentalDesign, FidelityTag};

/// One row of a risk report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskRow {
    pub beta: f64,
    pub var: f64,
    pub cvar: f64,
    pub samples: usize,
    pub k_beta: usize,
    pub estimator: Estimator,
    pub seed: u64,
}

impl RiskRow {
    pub fn from_estimate(estimate: &RiskEstimate, seed: u64) -> Self {
        RiskRow {
            beta: estimate.beta,
            var: estimate.var,
            cvar: estimate.cvar,
            samples: estimate.sample_count,
            k_beta: estimate.k_beta,
            estimator: estimate.estimator,
            seed,
        }
    }

    pub const CSV_HEADER: &'static str = "beta,var,cvar,samples,k_beta,estimator,seed";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.beta, self.var, self.cvar, self.samples, self.k_beta, self.estimator, self.seed
        )
    }
}

pub fn risk_rows_csv(rows: &[RiskRow]) -> String {
    let mut text = String::from(RiskRow::CSV_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    text
}

pub fn rows_json<T: Serialize>(rows: &[T]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

/// Build the configured input basis (moment estimation + whitening).
fn build_input_basis(config: &PipelineConfig, model: &RandomInputModel) -> Result<OrthonormalBasis> {
    let set = generate_reduced_with_cap(
        model.dimension(),
        config.basis.interaction_order,
        config.basis.degree,
        u128::from(config.cardinality_cap),
    )?;
    let sampler = model.sampler(
        config.schemes.moments,
        config.samples.moments,
        derive_seed(config.seed, "moments"),
    )?;
    build_basis(
        &sampler,
        BasisIndex::Multivariate { set },
        MomentOptions::default(),
    )
}

fn basis_summary(basis: &OrthonormalBasis, config: &PipelineConfig) -> String {
    let mut line = format!(
        "basis: S={}, m={}, cardinality {}\nmoment samples: {} ({}), condition estimate {:.3e}",
        config.basis.interaction_order,
        config.basis.degree,
        basis.cardinality(),
        config.samples.moments,
        config.schemes.moments,
        basis.condition_estimate,
    );
    if let Some(jitter) = basis.jitter {
        line.push_str(&format!("\nmoment-matrix jitter applied: {jitter:e}"));
    }
    if basis.ill_conditioned {
        line.push_str("\nwarning: moment matrix is ill conditioned");
    }
    line
}

pub struct FitOutcome {
    pub archive: SurrogateArchive,
    pub report: String,
    pub model_evaluations: u64,
}

/// Fit a surrogate to the configured model on a fresh seeded design.
pub fn cmd_fit(config: &PipelineConfig, base_dir: &Path) -> Result<FitOutcome> {
    config.validate(base_dir, CommandKind::Fit)?;
    let model = config.input_model.build()?;
    let evaluator = config
        .model
        .as_ref()
        .expect("validated")
        .resolve(base_dir, &config.external)?;
    let counted = CountingEvaluator::new(evaluator.as_ref());

    let basis = build_input_basis(config, &model)?;
    let sampler = model.sampler(
        config.schemes.design,
        config.samples.design,
        derive_seed(config.seed, "design"),
    )?;
    let inputs = sampler.collect_batch()?.points;
    let outputs = evaluate_checked(&counted, &inputs, 0)?;
    let design = ExperimentalDesign::new(inputs, outputs, FidelityTag::High)?;
    let surrogate = fit_sls(&basis, &design, config.oversampling.min_ratio)?;

    let model_evaluations = counted.samples();
    let report = format!(
        "fit report\nmodel: {}\ninput dimension: {}\n{}\ndesign: {} {} points (oversampling {:.3})\nresidual: {:e}\ndesign condition estimate: {:.3e}\nmodel evaluations: {}{}",
        config.model.as_ref().expect("validated").describe(),
        model.dimension(),
        basis_summary(&basis, config),
        config.samples.design,
        config.schemes.design,
        surrogate.fit_report.oversampling,
        surrogate.fit_report.residual,
        surrogate.fit_report.condition_estimate,
        model_evaluations,
        if surrogate.fit_report.ratio_warning {
            "\nwarning: oversampling ratio below the configured minimum"
        } else {
            ""
        },
    );

    let archive = SurrogateArchive::from_surrogate(
        &surrogate,
        ArchiveProvenance {
            seed: config.seed,
            model: Some(config.model.as_ref().expect("validated").describe()),
            design_size: Some(config.samples.design),
            moment_samples: Some(config.samples.moments),
            low_evaluations: None,
            high_evaluations: Some(model_evaluations),
            ..Default::default()
        },
    );
    Ok(FitOutcome {
        archive,
        report,
        model_evaluations,
    })
}

pub struct EstimateOutcome {
    pub rows: Vec<RiskRow>,
    /// Sorted (value, empirical probability) pairs when requested.
    pub cdf_csv: Option<String>,
    pub report: String,
}

/// Surrogate outputs over the shared risk input sample.
fn loaded_samples(
    loaded: &LoadedSurrogate,
    model: &RandomInputModel,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = risk_input_sampler(model, count, seed)?;
    let chunks: Vec<Vec<f64>> = (0..sampler.chunk_count())
        .into_par_iter()
        .map(|c| loaded.evaluate(&sampler.chunk(c)))
        .collect();
    Ok(chunks.concat())
}

/// Empirical CDF rows of a value sample.
pub fn empirical_cdf_csv(values: &[f64]) -> String {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let l = sorted.len() as f64;
    let mut text = String::from("value,probability\n");
    for (i, v) in sorted.iter().enumerate() {
        text.push_str(&format!("{},{}\n", v, (i + 1) as f64 / l));
    }
    text
}

/// Estimate VaR/CVaR for every configured risk level from an archive.
pub fn cmd_estimate(
    archive: &SurrogateArchive,
    config: &PipelineConfig,
    base_dir: &Path,
    want_cdf: bool,
) -> Result<EstimateOutcome> {
    config.validate(base_dir, CommandKind::Estimate)?;
    let model = config.input_model.build()?;
    let loaded = archive.instantiate()?;
    if loaded.dimension() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: loaded.dimension(),
            context: "archive input dimension vs configured model".into(),
        });
    }
    let values = loaded_samples(&loaded, &model, config.samples.risk, config.seed)?;
    let mut rows = Vec::with_capacity(config.betas.len());
    for &beta in &config.betas {
        let estimate = var_cvar(&values, beta, config.estimator)?;
        rows.push(RiskRow::from_estimate(&estimate, config.seed));
    }
    let cdf_csv = want_cdf.then(|| empirical_cdf_csv(&values));
    let mut report = format!(
        "risk report\nsamples: {} (seed {})\nestimator: {}\n",
        config.samples.risk, config.seed, config.estimator
    );
    for row in &rows {
        report.push_str(&format!(
            "beta {}: VaR {} CVaR {} (k={})\n",
            row.beta, row.var, row.cvar, row.k_beta
        ));
    }
    Ok(EstimateOutcome {
        rows,
        cdf_csv,
        report,
    })
}

pub struct BifitOutcome {
    pub archive: SurrogateArchive,
    pub rows: Vec<RiskRow>,
    pub budget: Option<BudgetReport>,
    pub report: String,
    pub low_evaluations: u64,
    pub high_evaluations: u64,
}

/// Run the bi-fidelity pipeline and estimate every configured risk level.
pub fn cmd_bifit(config: &PipelineConfig, base_dir: &Path) -> Result<BifitOutcome> {
    config.validate(base_dir, CommandKind::Bifit)?;
    let model = config.input_model.build()?;
    let low = config
        .low_model
        .as_ref()
        .expect("validated")
        .resolve(base_dir, &config.external)?;
    let high = config
        .high_model
        .as_ref()
        .expect("validated")
        .resolve(base_dir, &config.external)?;

    let cfg = BiFidelityConfig {
        interaction_order: config.basis.interaction_order,
        degree: config.basis.degree,
        link_degree: config.basis.link_degree,
        risk_samples: config.samples.risk,
        design_size: config.samples.design,
        pair_count: config.pair_count(),
        moment_samples: config.samples.moments,
        beta: config.betas[0],
        seed: config.seed,
        estimator: config.estimator,
        ratio_min: config.oversampling.min_ratio,
        cardinality_cap: u128::from(config.cardinality_cap),
    };
    let surrogate = build_bifidelity_surrogate(&model, low.as_ref(), high.as_ref(), &cfg)?;
    let values = bifi_samples(&surrogate, &model, config.samples.risk, config.seed)?;
    let mut rows = Vec::with_capacity(config.betas.len());
    for &beta in &config.betas {
        let estimate = var_cvar(&values, beta, config.estimator)?;
        rows.push(RiskRow::from_estimate(&estimate, config.seed));
    }

    let budget = match &config.budget {
        None => None,
        Some(spec) => Some(check_budget(&BudgetModel {
            total_budget: spec.total,
            high_cost: spec.high_cost,
            low_cost: spec.low_cost,
            design_size: config.samples.design,
            pair_count: config.pair_count(),
        })?),
    };

    let mut report = format!(
        "bi-fidelity report\nlow model: {}\nhigh model: {}\nlink degree: {}\nlow-fidelity evaluations: {} ({} design + {} link pairs)\nhigh-fidelity evaluations: {}\nlink residual: {:e}\n",
        config.low_model.as_ref().expect("validated").describe(),
        config.high_model.as_ref().expect("validated").describe(),
        config.basis.link_degree,
        surrogate.provenance.low_evaluations,
        config.samples.design,
        config.pair_count(),
        surrogate.provenance.high_evaluations,
        surrogate.link.fit_report.residual,
    );
    if let Some(b) = &budget {
        report.push_str(&format!(
            "budget: permissible low-fidelity cost {} ({})\n",
            b.low_cost_bound,
            if b.infeasible_budget {
                "infeasible: high-fidelity runs alone exceed the budget"
            } else if b.feasible {
                "feasible"
            } else {
                "low-fidelity cost exceeds the bound"
            }
        ));
    }
    for row in &rows {
        report.push_str(&format!(
            "beta {}: VaR {} CVaR {} (k={})\n",
            row.beta, row.var, row.cvar, row.k_beta
        ));
    }

    let archive = SurrogateArchive::from_bifidelity(
        &surrogate,
        ArchiveProvenance {
            seed: config.seed,
            low_model: Some(config.low_model.as_ref().expect("validated").describe()),
            high_model: Some(config.high_model.as_ref().expect("validated").describe()),
            ..Default::default()
        },
    );
    Ok(BifitOutcome {
        archive,
        rows,
        budget,
        report,
        low_evaluations: surrogate.provenance.low_evaluations,
        high_evaluations: surrogate.provenance.high_evaluations,
    })
}

/// One row of a trials report: per risk level, the crude-MCS benchmark, the
/// average trial estimate, and the mean relative difference.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub beta: f64,
    pub benchmark_var: f64,
    pub benchmark_cvar: f64,
    pub mean_trial_cvar: f64,
    pub mrd: f64,
    pub trials: usize,
    pub design_size: usize,
}

impl TrialRow {
    pub const CSV_HEADER: &'static str =
        "beta,benchmark_var,benchmark_cvar,mean_trial_cvar,mrd,trials,design_size";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.beta,
            self.benchmark_var,
            self.benchmark_cvar,
            self.mean_trial_cvar,
            self.mrd,
            self.trials,
            self.design_size
        )
    }
}

pub fn trial_rows_csv(rows: &[TrialRow]) -> String {
    let mut text = String::from(TrialRow::CSV_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    text
}

pub struct TrialsOutcome {
    pub rows: Vec<TrialRow>,
    pub report: String,
    pub model_evaluations: u64,
}

/// Draw the first `take` entries of a seeded permutation of 0..total.
fn subset_without_replacement(total: usize, take: usize, seed: u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..total).collect();
    let mut rng = crate::distributions::chacha(seed, 0);
    use rand_core::RngCore;
    // Partial Fisher-Yates: only the first `take` positions are needed.
    for i in 0..take.min(total.saturating_sub(1)) {
        let range = (total - i) as u64;
        let threshold = u64::MAX - u64::MAX % range;
        let offset = loop {
            let x = rng.next_u64();
            if x < threshold {
                break (x % range) as usize;
            }
        };
        indices.swap(i, i + offset);
    }
    indices.truncate(take);
    indices
}

/// Repeated-trial study: fit surrogates on random subsets of one shared
/// high-fidelity pool and compare trial CVaR estimates to the crude-MCS
/// benchmark via the mean relative difference.
pub fn cmd_trials(config: &PipelineConfig, base_dir: &Path) -> Result<TrialsOutcome> {
    config.validate(base_dir, CommandKind::Trials)?;
    let model = config.input_model.build()?;
    let evaluator = config
        .model
        .as_ref()
        .expect("validated")
        .resolve(base_dir, &config.external)?;
    let counted = CountingEvaluator::new(evaluator.as_ref());

    // The shared pool doubles as the crude-MCS benchmark.
    let pool_size = config.samples.risk;
    let pool_sampler = model.sampler(
        crate::distributions::SampleScheme::Mcs,
        pool_size,
        derive_seed(config.seed, "pool"),
    )?;
    let pool_inputs = pool_sampler.collect_batch()?.points;
    let pool_outputs = evaluate_checked(&counted, &pool_inputs, 0)?;

    let basis = build_input_basis(config, &model)?;

    let trial_count = config.trials.count;
    let design_size = config.samples.design;
    let mut trial_cvars: Vec<Vec<f64>> = vec![Vec::with_capacity(trial_count); config.betas.len()];
    for k in 0..trial_count {
        let subset = subset_without_replacement(
            pool_size,
            design_size,
            derive_seed(config.seed, &format!("trial-subset-{k}")),
        );
        let mut inputs = DMatrix::zeros(design_size, model.dimension());
        let mut outputs = Vec::with_capacity(design_size);
        for (row, &idx) in subset.iter().enumerate() {
            for d in 0..model.dimension() {
                inputs[(row, d)] = pool_inputs[(idx, d)];
            }
            outputs.push(pool_outputs[idx]);
        }
        let design = ExperimentalDesign::new(inputs, outputs, FidelityTag::High)?;
        let surrogate = fit_sls(&basis, &design, config.oversampling.min_ratio)?;
        let values = crate::risk::surrogate_samples(
            &surrogate,
            &model,
            config.samples.risk,
            derive_seed(config.seed, &format!("trial-estimate-{k}")),
        )?;
        for (bi, &beta) in config.betas.iter().enumerate() {
            let estimate = var_cvar(&values, beta, config.estimator)?;
            trial_cvars[bi].push(estimate.cvar);
        }
    }

    let mut rows = Vec::with_capacity(config.betas.len());
    for (bi, &beta) in config.betas.iter().enumerate() {
        let benchmark = var_cvar(&pool_outputs, beta, config.estimator)?;
        let mrd = crate::risk::mrd(benchmark.cvar, &trial_cvars[bi])?;
        let mean_trial_cvar =
            trial_cvars[bi].iter().sum::<f64>() / trial_cvars[bi].len() as f64;
        rows.push(TrialRow {
            beta,
            benchmark_var: benchmark.var,
            benchmark_cvar: benchmark.cvar,
            mean_trial_cvar,
            mrd,
            trials: trial_count,
            design_size,
        });
    }

    let model_evaluations = counted.samples();
    let mut report = format!(
        "trials report\nmodel: {}\npool: {} crude-MCS evaluations (seed {})\ntrials: {} x {} design points (without replacement)\n",
        config.model.as_ref().expect("validated").describe(),
        pool_size,
        config.seed,
        trial_count,
        design_size,
    );
    for row in &rows {
        report.push_str(&format!(
            "beta {}: benchmark CVaR {} mean trial CVaR {} MRD {:.6e}\n",
            row.beta, row.benchmark_cvar, row.mean_trial_cvar, row.mrd
        ));
    }
    report.push_str(&format!("model evaluations: {model_evaluations}\n"));
    Ok(TrialsOutcome {
        rows,
        report,
        model_evaluations,
    })
}

/// Export a seeded sample batch.
pub fn cmd_sample(
    config: &PipelineConfig,
    base_dir: &Path,
    scheme: Option<crate::distributions::SampleScheme>,
    count: Option<usize>,
) -> Result<SampleBatch> {
    config.validate(base_dir, CommandKind::Sample)?;
    let model = config.input_model.build()?;
    model.sample(
        scheme.unwrap_or(config.schemes.design),
        count.unwrap_or(config.samples.risk),
        derive_seed(config.seed, "sample"),
    )
}

pub struct ValidationReport {
    pub lines: Vec<String>,
}

impl ValidationReport {
    pub fn text(&self) -> String {
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}

/// Check the configuration and produce an input-model validation report.
pub fn cmd_validate(config: &PipelineConfig, base_dir: &Path) -> Result<ValidationReport> {
    config.validate(base_dir, CommandKind::Validate)?;
    let model = config.input_model.build()?;
    let mut lines = vec![
        "configuration: ok".to_string(),
        format!("input dimension: {}", model.dimension()),
    ];
    if let Ok(k) = config.basis_cardinality() {
        lines.push(format!(
            "basis cardinality: {k} (S={}, m={})",
            config.basis.interaction_order, config.basis.degree
        ));
        lines.push(format!(
            "design size {} gives oversampling ratio {:.3}",
            config.samples.design,
            config.samples.design as f64 / k as f64
        ));
    }

    let check_size = config.samples.risk.clamp(100, 10_000);
    let batch = model.sample(
        crate::distributions::SampleScheme::Mcs,
        check_size,
        derive_seed(config.seed, "validate"),
    )?;
    let moments = empirical_moments(&batch.points)?;
    let mut max_ks = 0.0f64;
    for (d, marginal) in model.marginals.iter().enumerate() {
        let column: Vec<f64> = batch.points.column(d).iter().copied().collect();
        max_ks = max_ks.max(ks_statistic(&column, |x| marginal.cdf(x)));
    }
    lines.push(format!(
        "marginal check at {check_size} samples: max KS statistic {max_ks:.4}"
    ));
    let mut max_corr_dev = 0.0f64;
    for i in 0..model.dimension() {
        for j in 0..i {
            max_corr_dev = max_corr_dev
                .max((moments.correlation[(i, j)] - model.correlation[(i, j)]).abs());
        }
    }
    lines.push(format!(
        "correlation check: max |empirical - target| = {max_corr_dev:.4}"
    ));

    let has_lognormal = model
        .marginals
        .iter()
        .any(|m| matches!(m, crate::distributions::Marginal::Lognormal { .. }));
    let independent = model.correlation == DMatrix::identity(model.dimension(), model.dimension());
    if has_lognormal && !independent {
        lines.push(
            "note: correlations for lognormal marginals are Gaussian-copula correlations; \
             the Pearson correlation of the lognormal values differs slightly"
                .to_string(),
        );
    }

    for (model_ref, label) in [
        (&config.model, "model"),
        (&config.low_model, "low_model"),
        (&config.high_model, "high_model"),
    ]
    .iter()
    .filter_map(|(m, label)| m.as_ref().map(|m| (m, *label)))
    {
        lines.push(format!("{label}: {} (resolvable)", model_ref.describe()));
    }
    Ok(ValidationReport { lines })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_fit_config() -> PipelineConfig {
        serde_json::from_str(
            r#"{
                "input_model": {
                    "marginals": [ {"kind": "normal", "mean": 1.0, "std": 0.7, "repeat": 3} ],
                    "correlation": {"kind": "equicorrelated", "rho": 0.4}
                },
                "basis": {"interaction_order": 1, "degree": 1},
                "samples": {"design": 40, "moments": 200000},
                "betas": [0.95],
                "seed": 11,
                "model": {"kind": "linear", "weights": [2.0, -1.5, 0.25]}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn linear_model_coefficients_recover_the_weights() {
        // For a first-order basis the collapsed monomial coefficients divided
        // by the standardization scales are the raw-input gradient.
        let config = linear_fit_config();
        assert_eq!(config.samples.risk, 10_000, "risk size defaults to 1e4");
        let outcome = pipeline_fit(&config);
        let loaded = outcome.archive.instantiate().unwrap();
        let crate::archive::LoadedSurrogate::Single(surrogate) = loaded else {
            panic!("single-fidelity archive expected");
        };
        let collapsed = surrogate.basis.collapse_coefficients(&surrogate.coefficients);
        let weights = [2.0, -1.5, 0.25];
        for (i, want) in weights.iter().enumerate() {
            let gradient = collapsed[1 + i] / surrogate.basis.standardization.scale[i];
            let rel = (gradient - want).abs() / want.abs();
            assert!(rel <= 0.01, "weight {i}: {gradient} vs {want}");
        }
    }

    fn pipeline_fit(config: &PipelineConfig) -> FitOutcome {
        cmd_fit(config, std::path::Path::new(".")).unwrap()
    }

    #[test]
    fn fit_is_identical_across_thread_counts() {
        let config = linear_fit_config();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| pipeline_fit(&config));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| pipeline_fit(&config));
        assert_eq!(
            single.archive.to_json().unwrap(),
            many.archive.to_json().unwrap(),
            "archives must not depend on the thread count"
        );
    }

    #[test]
    fn bifit_pair_count_defaults_to_factor_eight() {
        let mut config = linear_fit_config();
        config.basis.link_degree = 2;
        assert_eq!(config.pair_count(), 24);
        config.samples.pairs = 30;
        assert_eq!(config.pair_count(), 30);
    }

    #[test]
    fn subsets_are_distinct_and_seeded() {
        let a = subset_without_replacement(100, 30, 7);
        let b = subset_without_replacement(100, 30, 7);
        let c = subset_without_replacement(100, 30, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 30, "indices must be distinct");
        assert!(sorted.iter().all(|&i| i < 100));
    }

    #[test]
    fn cdf_rows_are_monotone() {
        let csv = empirical_cdf_csv(&[3.0, 1.0, 2.0, 2.0]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "value,probability");
        assert_eq!(lines.len(), 5);
        let mut prev_v = f64::MIN;
        let mut prev_p = 0.0;
        for line in &lines[1..] {
            let mut parts = line.split(',');
            let v: f64 = parts.next().unwrap().parse().unwrap();
            let p: f64 = parts.next().unwrap().parse().unwrap();
            assert!(v >= prev_v);
            assert!(p > prev_p);
            prev_v = v;
            prev_p = p;
        }
        assert!((prev_p - 1.0).abs() < 1e-12);
    }
}
