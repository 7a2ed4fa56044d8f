//! Least-squares fitting and evaluation of polynomial-chaos surrogates on
//! experimental-design data.
//!
//! The minimizer of || b - A c ||_2 is computed by Householder QR of the
//! design matrix, which is numerically equivalent to solving the normal
//! equations A^T A c = A^T b when A has full column rank but avoids
//! squaring the condition number. Rank deficiency is surfaced as an error
//! rather than regularized away.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::OrthonormalBasis;

/// Origin label of design outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityTag {
    High,
    Low,
    Named(String),
}

/// Input-output data set used for fitting.
#[derive(Debug, Clone)]
pub struct ExperimentalDesign {
    pub inputs: DMatrix<f64>,
    pub outputs: DVector<f64>,
    pub fidelity: FidelityTag,
}

impl ExperimentalDesign {
    pub fn new(inputs: DMatrix<f64>, outputs: Vec<f64>, fidelity: FidelityTag) -> Result<Self> {
        if inputs.nrows() != outputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.nrows(),
                actual: outputs.len(),
                context: "design outputs vs input rows".into(),
            });
        }
        for (l, v) in outputs.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteModelOutput {
                    sample: l,
                    value: *v,
                });
            }
        }
        if let Some(v) = inputs.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "design inputs contain a non-finite value {v}"
            )));
        }
        Ok(ExperimentalDesign {
            inputs,
            outputs: DVector::from_vec(outputs),
            fidelity,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Diagnostics from a least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Mean-squared design residual.
    pub residual: f64,
    /// Design size over basis cardinality.
    pub oversampling: f64,
    /// |R_11|max / |R_ii|min from the QR factor.
    pub condition_estimate: f64,
    /// Set when the oversampling ratio fell below the requested minimum.
    pub ratio_warning: bool,
}

/// A fitted expansion: basis, coefficients, and fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DdGpceSurrogate {
    pub basis: OrthonormalBasis,
    pub coefficients: DVector<f64>,
    pub fit_report: FitReport,
    /// W^T c, cached so evaluation is one monomial dot product per point.
    collapsed: DVector<f64>,
}

/// Default minimum oversampling ratio L' / cardinality.
pub const DEFAULT_RATIO_MIN: f64 = 3.0;

/// Fit expansion coefficients by standard least squares.
pub fn fit_sls(
    basis: &OrthonormalBasis,
    design: &ExperimentalDesign,
    ratio_min: f64,
) -> Result<DdGpceSurrogate> {
    let k = basis.cardinality();
    let l = design.len();
    if design.inputs.ncols() != basis.dimension() {
        return Err(Error::DimensionMismatch {
            expected: basis.dimension(),
            actual: design.inputs.ncols(),
            context: "design input dimension vs basis".into(),
        });
    }
    if l <= k {
        return Err(Error::InvalidArgument(format!(
            "design size {l} must exceed the number of coefficients {k}"
        )));
    }
    let ratio = l as f64 / k as f64;
    let ratio_warning = ratio < ratio_min;

    let a = basis.eval_matrix(&design.inputs);
    let qr = a.clone().qr();
    let r = qr.r();
    let mut dmax = 0.0f64;
    let mut dmin = f64::MAX;
    for i in 0..k {
        let d = r[(i, i)].abs();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    let tol = dmax * l.max(k) as f64 * f64::EPSILON;
    let rank = (0..k).filter(|&i| r[(i, i)].abs() > tol).count();
    if rank < k {
        return Err(Error::RankDeficient { rank, columns: k });
    }
    let mut qtb = design.outputs.clone();
    qr.q_tr_mul(&mut qtb);
    let coefficients = r
        .solve_upper_triangular(&qtb.rows(0, k).into_owned())
        .ok_or(Error::RankDeficient { rank, columns: k })?;

    let residual_vec = &design.outputs - &a * &coefficients;
    let residual = residual_vec.norm_squared() / l as f64;
    let collapsed = basis.collapse_coefficients(&coefficients);
    Ok(DdGpceSurrogate {
        basis: basis.clone(),
        coefficients,
        fit_report: FitReport {
            residual,
            oversampling: ratio,
            condition_estimate: if dmin > 0.0 { dmax / dmin } else { f64::INFINITY },
            ratio_warning,
        },
        collapsed,
    })
}

impl DdGpceSurrogate {
    /// Rebuild from stored parts (archive loading).
    pub fn from_parts(
        basis: OrthonormalBasis,
        coefficients: DVector<f64>,
        fit_report: FitReport,
    ) -> Result<Self> {
        if coefficients.len() != basis.cardinality() {
            return Err(Error::DimensionMismatch {
                expected: basis.cardinality(),
                actual: coefficients.len(),
                context: "coefficient count vs basis cardinality".into(),
            });
        }
        let collapsed = basis.collapse_coefficients(&coefficients);
        Ok(DdGpceSurrogate {
            basis,
            coefficients,
            fit_report,
            collapsed,
        })
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    /// Evaluate on a batch of raw points (rows).
    pub fn evaluate(&self, points: &DMatrix<f64>) -> Vec<f64> {
        self.basis.eval_collapsed(&self.collapsed, points)
    }

    pub fn evaluate_one(&self, point: &[f64]) -> f64 {
        let m = DMatrix::from_row_slice(1, point.len(), point);
        self.evaluate(&m)[0]
    }

    /// Mean and variance implied by orthonormality: (c_1, sum_{i>=2} c_i^2).
    pub fn second_moments(&self) -> (f64, f64) {
        let mean = self.coefficients[0];
        let variance = self
            .coefficients
            .iter()
            .skip(1)
            .map(|c| c * c)
            .sum::<f64>();
        (mean, variance)
    }
}
