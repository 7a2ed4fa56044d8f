//! Built-in evaluable models: analytic stochastic test functions and the
//! linear-elastic truss in [`truss`], plus the evaluator trait everything
//! (including external commands) plugs into.

pub mod truss;

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distributions::{Marginal, RandomInputModel};
use crate::error::{Error, Result};
use crate::stats::gaussian_cvar;

/// A batch-evaluable output function y(x).
pub trait ModelEvaluator: Sync + Send {
    fn name(&self) -> String;
    /// Expected input dimension, when the model knows it.
    fn input_dimension(&self) -> Option<usize> {
        None
    }
    /// Outputs for each input row, in row order.
    fn evaluate_batch(&self, points: &DMatrix<f64>) -> Result<Vec<f64>>;
}

/// Evaluate a design and reject non-finite outputs, naming the sample.
pub fn evaluate_checked(
    evaluator: &dyn ModelEvaluator,
    points: &DMatrix<f64>,
    sample_offset: usize,
) -> Result<Vec<f64>> {
    if let Some(expected) = evaluator.input_dimension() {
        if expected != points.ncols() {
            return Err(Error::DimensionMismatch {
                expected,
                actual: points.ncols(),
                context: format!("inputs for model {}", evaluator.name()),
            });
        }
    }
    let values = evaluator.evaluate_batch(points)?;
    if values.len() != points.nrows() {
        return Err(Error::CountMismatch {
            expected: points.nrows(),
            actual: values.len(),
        });
    }
    for (l, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteModelOutput {
                sample: sample_offset + l,
                value: *v,
            });
        }
    }
    Ok(values)
}

/// Wrapper that counts evaluated samples; used to verify evaluation budgets.
pub struct CountingEvaluator<'a> {
    inner: &'a dyn ModelEvaluator,
    samples: AtomicU64,
}

impl<'a> CountingEvaluator<'a> {
    pub fn new(inner: &'a dyn ModelEvaluator) -> Self {
        CountingEvaluator {
            inner,
            samples: AtomicU64::new(0),
        }
    }

    /// Total samples evaluated so far.
    pub fn samples(&self) -> u64 {
        self.samples.load(Ordering::SeqCst)
    }
}

impl ModelEvaluator for CountingEvaluator<'_> {
    fn name(&self) -> String {
        self.inner.name()
    }
    fn input_dimension(&self) -> Option<usize> {
        self.inner.input_dimension()
    }
    fn evaluate_batch(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.samples
            .fetch_add(points.nrows() as u64, Ordering::SeqCst);
        self.inner.evaluate_batch(points)
    }
}

/// Closed-form analytic test models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticModel {
    Constant { value: f64 },
    /// y = sum_i weights_i * x_i
    LinearCombo { weights: Vec<f64> },
}

impl ModelEvaluator for AnalyticModel {
    fn name(&self) -> String {
        match self {
            AnalyticModel::Constant { value } => format!("constant({value})"),
            AnalyticModel::LinearCombo { weights } => format!("linear(dim={})", weights.len()),
        }
    }

    fn input_dimension(&self) -> Option<usize> {
        match self {
            AnalyticModel::Constant { .. } => None,
            AnalyticModel::LinearCombo { weights } => Some(weights.len()),
        }
    }

    fn evaluate_batch(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        match self {
            AnalyticModel::Constant { value } => Ok(vec![*value; points.nrows()]),
            AnalyticModel::LinearCombo { weights } => Ok((0..points.nrows())
                .map(|l| {
                    weights
                        .iter()
                        .enumerate()
                        .map(|(d, w)| w * points[(l, d)])
                        .sum()
                })
                .collect()),
        }
    }
}

/// Output distribution with a closed-form CVaR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputLaw {
    Gaussian { mean: f64, std: f64 },
    Uniform { lower: f64, upper: f64 },
    Constant(f64),
}

impl AnalyticModel {
    /// Output law under the given input model, when a closed form exists.
    pub fn output_law(&self, model: &RandomInputModel) -> Option<OutputLaw> {
        match self {
            AnalyticModel::Constant { value } => Some(OutputLaw::Constant(*value)),
            AnalyticModel::LinearCombo { weights } => {
                if let Some((mean, std)) = model.linear_output_law(weights) {
                    return Some(OutputLaw::Gaussian { mean, std });
                }
                // A single uniform input passed through one weight stays uniform.
                let nonzero: Vec<usize> = weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(i, _)| i)
                    .collect();
                if nonzero.len() == 1 {
                    let d = nonzero[0];
                    if let Marginal::Uniform { lower, upper } = model.marginals[d] {
                        let w = weights[d];
                        let (a, b) = (w * lower, w * upper);
                        return Some(OutputLaw::Uniform {
                            lower: a.min(b),
                            upper: a.max(b),
                        });
                    }
                }
                None
            }
        }
    }
}

/// Exact CVaR of a closed-form output law.
pub fn analytic_cvar(law: &OutputLaw, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "risk level must lie in (0,1), got {beta}"
        )));
    }
    Ok(match *law {
        OutputLaw::Gaussian { mean, std } => gaussian_cvar(mean, std, beta),
        OutputLaw::Uniform { lower, upper } => {
            let quantile = lower + (upper - lower) * beta;
            (quantile + upper) / 2.0
        }
        OutputLaw::Constant(c) => c,
    })
}

/// Evaluator backed by a plain closure; handy for tests and composition.
pub struct FnEvaluator<F> {
    pub label: String,
    pub dimension: Option<usize>,
    pub f: F,
}

impl<F> ModelEvaluator for FnEvaluator<F>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    fn name(&self) -> String {
        self.label.clone()
    }
    fn input_dimension(&self) -> Option<usize> {
        self.dimension
    }
    fn evaluate_batch(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok((0..points.nrows())
            .map(|l| {
                let row: Vec<f64> = points.row(l).iter().copied().collect();
                (self.f)(&row)
            })
            .collect())
    }
}
