//! Measure-consistent orthonormal polynomial bases.
//!
//! The construction is the same for multivariate input bases and for the
//! univariate basis in a low-fidelity output variable: estimate the monomial
//! moment matrix G = E[M M^T] by sampling, Cholesky-factor it, and take the
//! inverse factor W as the whitening map so that Psi = W M is orthonormal
//! under the sampled measure.
//!
//! Raw coordinates are affinely standardized (zero mean, unit variance,
//! estimated from the moment sample) before monomials are formed; this keeps
//! the moment matrix well conditioned at higher degrees. Standardization is
//! an invertible reparameterization absorbed by W, so downstream surrogate
//! values do not depend on it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndexSet;
use crate::stats::pairwise_reduce;

/// Condition-estimate threshold above which a basis is flagged as
/// ill-conditioned (a warning, not an error).
pub const ILL_CONDITION_THRESHOLD: f64 = 1e12;

const JITTER_LADDER: [f64; 5] = [1e-14, 1e-13, 1e-12, 1e-11, 1e-10];

/// Index structure of a basis: a multivariate multi-index set or plain
/// univariate powers 1, t, ..., t^degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisIndex {
    Multivariate { set: MultiIndexSet },
    Univariate { degree: u32 },
}

impl BasisIndex {
    pub fn dimension(&self) -> usize {
        match self {
            BasisIndex::Multivariate { set } => set.dimension,
            BasisIndex::Univariate { .. } => 1,
        }
    }

    pub fn cardinality(&self) -> usize {
        match self {
            BasisIndex::Multivariate { set } => set.cardinality(),
            BasisIndex::Univariate { degree } => *degree as usize + 1,
        }
    }

    fn max_degree_per_dimension(&self) -> Vec<u32> {
        match self {
            BasisIndex::Multivariate { set } => {
                let mut max = vec![0u32; set.dimension];
                for idx in &set.indices {
                    for (d, &e) in idx.exponents.iter().enumerate() {
                        max[d] = max[d].max(u32::from(e));
                    }
                }
                max
            }
            BasisIndex::Univariate { degree } => vec![*degree],
        }
    }
}

/// Per-dimension affine map applied to raw coordinates before monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn identity(dimension: usize) -> Self {
        Standardization {
            shift: vec![0.0; dimension],
            scale: vec![1.0; dimension],
        }
    }

    #[inline]
    pub fn apply(&self, dim: usize, value: f64) -> f64 {
        (value - self.shift[dim]) / self.scale[dim]
    }
}

/// Estimated monomial moment matrix.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    pub matrix: DMatrix<f64>,
    pub sample_count: usize,
    /// Cheap diagonal-ratio estimate, always >= 1.
    pub condition_estimate: f64,
}

impl MomentMatrix {
    pub fn new(matrix: DMatrix<f64>, sample_count: usize) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let mut dmax = f64::MIN;
        let mut dmin = f64::MAX;
        for i in 0..sym.nrows() {
            dmax = dmax.max(sym[(i, i)]);
            dmin = dmin.min(sym[(i, i)]);
        }
        let condition_estimate = if dmin > 0.0 { (dmax / dmin).max(1.0) } else { f64::INFINITY };
        MomentMatrix {
            matrix: sym,
            sample_count,
            condition_estimate,
        }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Measure-consistent orthonormal basis: index set, standardization, and the
/// lower-triangular whitening matrix W with W G W^T = I.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    pub index: BasisIndex,
    pub standardization: Standardization,
    pub whitening: DMatrix<f64>,
    /// Squared diagonal ratio of the Cholesky factor; estimates cond(G).
    pub condition_estimate: f64,
    /// Diagonal jitter applied to G before factorization, if any.
    pub jitter: Option<f64>,
    /// True when the condition estimate exceeded the warning threshold.
    pub ill_conditioned: bool,
}

/// Deterministic chunked access to sample points; chunk boundaries are part
/// of the reproducibility contract.
pub trait PointSource: Sync {
    fn dimension(&self) -> usize;
    fn count(&self) -> usize;
    fn chunk_count(&self) -> usize;
    fn chunk(&self, index: usize) -> Result<DMatrix<f64>>;
}

impl PointSource for crate::distributions::Sampler<'_> {
    fn dimension(&self) -> usize {
        crate::distributions::Sampler::dimension(self)
    }
    fn count(&self) -> usize {
        crate::distributions::Sampler::count(self)
    }
    fn chunk_count(&self) -> usize {
        crate::distributions::Sampler::chunk_count(self)
    }
    fn chunk(&self, index: usize) -> Result<DMatrix<f64>> {
        Ok(crate::distributions::Sampler::chunk(self, index))
    }
}

/// Monomial vector M(point) in the index order; entry 0 is the constant 1.
/// The point is taken as already standardized.
pub fn monomial_vector(index: &BasisIndex, point: &[f64]) -> Vec<f64> {
    let max_deg = index.max_degree_per_dimension();
    let mut powers = PowerTable::new(&max_deg);
    powers.fill(point);
    let mut out = vec![0.0; index.cardinality()];
    write_monomials(index, &powers, &mut out);
    out
}

/// Per-dimension power table reused across rows.
struct PowerTable {
    stride: usize,
    values: Vec<f64>,
    max_deg: Vec<u32>,
}

impl PowerTable {
    fn new(max_deg: &[u32]) -> Self {
        let stride = max_deg.iter().map(|&d| d as usize + 1).max().unwrap_or(1);
        PowerTable {
            stride,
            values: vec![1.0; stride * max_deg.len()],
            max_deg: max_deg.to_vec(),
        }
    }

    fn fill(&mut self, point: &[f64]) {
        for (d, &x) in point.iter().enumerate() {
            let base = d * self.stride;
            self.values[base] = 1.0;
            for e in 1..=self.max_deg[d] as usize {
                self.values[base + e] = self.values[base + e - 1] * x;
            }
        }
    }

    #[inline]
    fn power(&self, dim: usize, exponent: u8) -> f64 {
        self.values[dim * self.stride + exponent as usize]
    }
}

fn write_monomials(index: &BasisIndex, powers: &PowerTable, out: &mut [f64]) {
    match index {
        BasisIndex::Univariate { degree } => {
            for (e, slot) in out.iter_mut().enumerate().take(*degree as usize + 1) {
                *slot = powers.power(0, e as u8);
            }
        }
        BasisIndex::Multivariate { set } => {
            for (k, idx) in set.indices.iter().enumerate() {
                let mut prod = 1.0;
                for (d, &e) in idx.exponents.iter().enumerate() {
                    if e > 0 {
                        prod *= powers.power(d, e);
                    }
                }
                out[k] = prod;
            }
        }
    }
}

/// Monomial design block for a set of raw points: rows x cardinality, with
/// standardization applied.
pub fn monomial_matrix(
    index: &BasisIndex,
    standardization: &Standardization,
    points: &DMatrix<f64>,
) -> DMatrix<f64> {
    let rows = points.nrows();
    let k = index.cardinality();
    let n = index.dimension();
    let max_deg = index.max_degree_per_dimension();
    let mut powers = PowerTable::new(&max_deg);
    let mut m = DMatrix::zeros(rows, k);
    let mut std_point = vec![0.0; n];
    let mut row_buf = vec![0.0; k];
    for r in 0..rows {
        for d in 0..n {
            std_point[d] = standardization.apply(d, points[(r, d)]);
        }
        powers.fill(&std_point);
        write_monomials(index, &powers, &mut row_buf);
        for c in 0..k {
            m[(r, c)] = row_buf[c];
        }
    }
    m
}

/// Per-dimension mean/std of a source, chunk by chunk with a deterministic
/// pairwise reduction.
pub fn source_mean_std(source: &dyn PointSource) -> Result<(Vec<f64>, Vec<f64>)> {
    #[derive(Clone)]
    struct Acc {
        count: f64,
        sum: Vec<f64>,
        sumsq: Vec<f64>,
    }
    let partials: Vec<Acc> = (0..source.chunk_count())
        .into_par_iter()
        .map(|c| {
            let chunk = source.chunk(c)?;
            let n = chunk.ncols();
            let mut sum = vec![0.0; n];
            let mut sumsq = vec![0.0; n];
            for r in 0..chunk.nrows() {
                for d in 0..n {
                    let v = chunk[(r, d)];
                    sum[d] += v;
                    sumsq[d] += v * v;
                }
            }
            Ok(Acc {
                count: chunk.nrows() as f64,
                sum,
                sumsq,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = pairwise_reduce(partials, |mut a, b| {
        a.count += b.count;
        for (x, y) in a.sum.iter_mut().zip(&b.sum) {
            *x += y;
        }
        for (x, y) in a.sumsq.iter_mut().zip(&b.sumsq) {
            *x += y;
        }
        a
    })
    .expect("at least one chunk");
    let mean: Vec<f64> = total.sum.iter().map(|s| s / total.count).collect();
    let std: Vec<f64> = total
        .sumsq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| (sq / total.count - m * m).max(0.0).sqrt())
        .collect();
    Ok((mean, std))
}

/// Options for moment-matrix estimation.
#[derive(Debug, Clone, Copy)]
pub struct MomentOptions {
    /// Standardize coordinates to zero mean / unit variance first.
    pub standardize: bool,
    /// Require count >= 10 * cardinality (the default contract).
    pub enforce_sample_floor: bool,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            standardize: true,
            enforce_sample_floor: true,
        }
    }
}

/// Estimate G = E[M M^T] over the source by chunked averaging. Returns the
/// matrix together with the standardization that was applied.
pub fn estimate_moment_matrix(
    source: &dyn PointSource,
    index: &BasisIndex,
    options: MomentOptions,
) -> Result<(MomentMatrix, Standardization)> {
    let k = index.cardinality();
    if source.dimension() != index.dimension() {
        return Err(Error::DimensionMismatch {
            expected: index.dimension(),
            actual: source.dimension(),
            context: "moment source dimension".into(),
        });
    }
    if options.enforce_sample_floor && source.count() < 10 * k {
        return Err(Error::InvalidArgument(format!(
            "moment sample count {} is below 10 x cardinality {}",
            source.count(),
            k
        )));
    }
    let standardization = if options.standardize {
        let (mean, std) = source_mean_std(source)?;
        let scale = std
            .into_iter()
            .map(|s| if s > 0.0 { s } else { 1.0 })
            .collect();
        Standardization { shift: mean, scale }
    } else {
        Standardization::identity(index.dimension())
    };

    let partials: Vec<DMatrix<f64>> = (0..source.chunk_count())
        .into_par_iter()
        .map(|c| {
            let chunk = source.chunk(c)?;
            let m = monomial_matrix(index, &standardization, &chunk);
            Ok(m.tr_mul(&m))
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = pairwise_reduce(partials, |a, b| a + b).expect("at least one chunk");
    let g = sum / source.count() as f64;
    for i in 0..k {
        for j in 0..k {
            if !g[(i, j)].is_finite() {
                return Err(Error::NonFiniteMoment { i, j });
            }
        }
    }
    Ok((MomentMatrix::new(g, source.count()), standardization))
}

/// Whiten a moment matrix: W = Q^{-1} from the Cholesky factorization
/// G = Q Q^T, with an escalating diagonal jitter fallback that is recorded
/// on the returned basis.
pub fn whiten(
    moment: &MomentMatrix,
    index: BasisIndex,
    standardization: Standardization,
) -> Result<OrthonormalBasis> {
    let k = moment.size();
    if index.cardinality() != k {
        return Err(Error::DimensionMismatch {
            expected: index.cardinality(),
            actual: k,
            context: "moment matrix size vs basis cardinality".into(),
        });
    }
    let max_diag = (0..k).fold(0.0f64, |m, i| m.max(moment.matrix[(i, i)]));
    let mut applied_jitter = None;
    let mut cholesky = nalgebra::Cholesky::new(moment.matrix.clone());
    if cholesky.is_none() {
        for eps in JITTER_LADDER {
            let mut jittered = moment.matrix.clone();
            for i in 0..k {
                jittered[(i, i)] += eps * max_diag;
            }
            cholesky = nalgebra::Cholesky::new(jittered);
            if cholesky.is_some() {
                applied_jitter = Some(eps * max_diag);
                break;
            }
        }
    }
    let Some(cholesky) = cholesky else {
        return Err(Error::NotPositiveDefinite {
            max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * max_diag,
        });
    };
    let q = cholesky.unpack();
    let mut dmax = f64::MIN;
    let mut dmin = f64::MAX;
    for i in 0..k {
        dmax = dmax.max(q[(i, i)]);
        dmin = dmin.min(q[(i, i)]);
    }
    let ratio = dmax / dmin;
    let condition_estimate = (ratio * ratio).max(1.0);
    let whitening = q
        .solve_lower_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::NotPositiveDefinite { max_jitter: 0.0 })?;
    Ok(OrthonormalBasis {
        index,
        standardization,
        whitening,
        condition_estimate,
        jitter: applied_jitter,
        ill_conditioned: condition_estimate > ILL_CONDITION_THRESHOLD,
    })
}

/// Build a basis from a source in one call: estimate moments, then whiten.
pub fn build_basis(
    source: &dyn PointSource,
    index: BasisIndex,
    options: MomentOptions,
) -> Result<OrthonormalBasis> {
    let (moment, standardization) = estimate_moment_matrix(source, &index, options)?;
    whiten(&moment, index, standardization)
}

impl OrthonormalBasis {
    pub fn dimension(&self) -> usize {
        self.index.dimension()
    }

    pub fn cardinality(&self) -> usize {
        self.index.cardinality()
    }

    /// Psi(x) = W M(standardize(x)) for a single raw point.
    pub fn eval_point(&self, point: &[f64]) -> Vec<f64> {
        let std_point: Vec<f64> = point
            .iter()
            .enumerate()
            .map(|(d, &v)| self.standardization.apply(d, v))
            .collect();
        let m = DVector::from_vec(monomial_vector(&self.index, &std_point));
        (&self.whitening * m).iter().copied().collect()
    }

    /// Design block: rows are Psi(x_l)^T for each raw point row.
    pub fn eval_matrix(&self, points: &DMatrix<f64>) -> DMatrix<f64> {
        let m = monomial_matrix(&self.index, &self.standardization, points);
        m * self.whitening.transpose()
    }

    /// Collapse expansion coefficients onto the monomial vector:
    /// sum_i c_i Psi_i(x) = (W^T c) . M(x). Evaluating through the returned
    /// vector is O(cardinality) per point.
    pub fn collapse_coefficients(&self, coefficients: &DVector<f64>) -> DVector<f64> {
        self.whitening.tr_mul(coefficients)
    }

    /// Evaluate a collapsed-coefficient expansion on raw points.
    pub fn eval_collapsed(&self, collapsed: &DVector<f64>, points: &DMatrix<f64>) -> Vec<f64> {
        let rows = points.nrows();
        let n = self.dimension();
        let max_deg = self.index.max_degree_per_dimension();
        let mut powers = PowerTable::new(&max_deg);
        let mut std_point = vec![0.0; n];
        let mut mono = vec![0.0; self.cardinality()];
        let mut out = Vec::with_capacity(rows);
        for r in 0..rows {
            for d in 0..n {
                std_point[d] = self.standardization.apply(d, points[(r, d)]);
            }
            powers.fill(&std_point);
            write_monomials(&self.index, &powers, &mut mono);
            let mut acc = 0.0;
            for (c, m) in collapsed.iter().zip(&mono) {
                acc += c * m;
            }
            out.push(acc);
        }
        out
    }
}

/// Mean of Psi Psi^T over a fresh validation source; close to the identity
/// for a well-built basis.
pub fn validation_gram(basis: &OrthonormalBasis, source: &dyn PointSource) -> Result<DMatrix<f64>> {
    let partials: Vec<DMatrix<f64>> = (0..source.chunk_count())
        .into_par_iter()
        .map(|c| {
            let a = basis.eval_matrix(&source.chunk(c)?);
            Ok(a.tr_mul(&a))
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = pairwise_reduce(partials, |a, b| a + b).expect("at least one chunk");
    Ok(sum / source.count() as f64)
}
