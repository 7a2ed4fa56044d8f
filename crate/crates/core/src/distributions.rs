//! The dependent input law f_X(x)dx: marginal distributions coupled through a
//! Gaussian copula, with plain Monte Carlo, Sobol quasi-Monte Carlo, and
//! Latin hypercube sampling.
//!
//! Sampling is deterministic given (model, scheme, count, seed) and is
//! organized in fixed 4096-point chunks; each chunk derives its own RNG
//! stream, so chunks can be produced independently (and in parallel) while
//! remaining bit-identical to sequential generation.

use nalgebra::DMatrix;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sobol_seq::SobolSequence;
use crate::stats::{derive_seed, normal_cdf, normal_quantile};

/// Fixed generation chunk size; part of the deterministic contract.
pub const CHUNK_SIZE: usize = 4096;

const UNIT_SCALE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53

/// Seeded ChaCha12 RNG on an independent stream.
pub(crate) fn chacha(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw strictly inside (0,1) from one 64-bit word.
#[inline]
fn unit_open(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * UNIT_SCALE
}

/// One-dimensional marginal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    Normal { mean: f64, std: f64 },
    Uniform { lower: f64, upper: f64 },
    /// Parameterized by its mean and coefficient of variation; the internal
    /// log-space parameters are moment matched.
    Lognormal { mean: f64, cov: f64 },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Normal { std, .. } => std > 0.0 && std.is_finite(),
            Marginal::Uniform { lower, upper } => upper > lower && lower.is_finite(),
            Marginal::Lognormal { mean, cov } => mean > 0.0 && cov > 0.0 && cov.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid marginal parameters: {self:?}"
            )))
        }
    }

    /// Log-space parameters (mu_ln, sigma_ln) of a lognormal marginal.
    fn log_params(mean: f64, cov: f64) -> (f64, f64) {
        let sigma2 = (1.0 + cov * cov).ln();
        let sigma = sigma2.sqrt();
        (mean.ln() - 0.5 * sigma2, sigma)
    }

    /// Reflection of x through the distribution's median in latent space:
    /// the image of z -> -z under the copula coordinate.
    pub fn reflect(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, .. } => 2.0 * mean - x,
            Marginal::Uniform { lower, upper } => lower + upper - x,
            Marginal::Lognormal { mean, cov } => {
                let (mu, _) = Self::log_params(mean, cov);
                (2.0 * mu - x.ln()).exp()
            }
        }
    }

    /// Inverse CDF on (0,1).
    pub fn inv_cdf(&self, u: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, std } => mean + std * normal_quantile(u),
            Marginal::Uniform { lower, upper } => lower + (upper - lower) * u,
            Marginal::Lognormal { mean, cov } => {
                let (mu, sigma) = Self::log_params(mean, cov);
                (mu + sigma * normal_quantile(u)).exp()
            }
        }
    }

    /// Value at copula coordinate z, i.e. inv_cdf(Phi(z)), with the normal
    /// round trip short-circuited so Gaussian and lognormal marginals are
    /// exact linear/exponential maps of z.
    pub fn from_z(&self, z: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, std } => mean + std * z,
            Marginal::Uniform { lower, upper } => lower + (upper - lower) * normal_cdf(z),
            Marginal::Lognormal { mean, cov } => {
                let (mu, sigma) = Self::log_params(mean, cov);
                (mu + sigma * z).exp()
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, std } => normal_cdf((x - mean) / std),
            Marginal::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            Marginal::Lognormal { mean, cov } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let (mu, sigma) = Self::log_params(mean, cov);
                    normal_cdf((x.ln() - mu) / sigma)
                }
            }
        }
    }

    /// Analytic mean and standard deviation.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Marginal::Normal { mean, std } => (mean, std),
            Marginal::Uniform { lower, upper } => {
                ((lower + upper) / 2.0, (upper - lower) / 12f64.sqrt())
            }
            Marginal::Lognormal { mean, cov } => (mean, mean * cov),
        }
    }
}

/// Joint input law: marginals plus a copula correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInputModel {
    pub marginals: Vec<Marginal>,
    /// N x N symmetric copula correlation with unit diagonal. For normal
    /// marginals this is exactly the Pearson correlation of the inputs.
    pub correlation: DMatrix<f64>,
}

impl RandomInputModel {
    pub fn new(marginals: Vec<Marginal>, correlation: DMatrix<f64>) -> Result<Self> {
        let model = RandomInputModel {
            marginals,
            correlation,
        };
        model.validate()?;
        Ok(model)
    }

    /// Independent inputs: identity correlation.
    pub fn independent(marginals: Vec<Marginal>) -> Result<Self> {
        let n = marginals.len();
        Self::new(marginals, DMatrix::identity(n, n))
    }

    /// Identical off-diagonal correlation rho.
    pub fn equicorrelated(marginals: Vec<Marginal>, rho: f64) -> Result<Self> {
        let n = marginals.len();
        let correlation = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rho });
        Self::new(marginals, correlation)
    }

    pub fn dimension(&self) -> usize {
        self.marginals.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.marginals.len();
        if n == 0 {
            return Err(Error::InvalidArgument("input model has no marginals".into()));
        }
        for m in &self.marginals {
            m.validate()?;
        }
        if self.correlation.nrows() != n || self.correlation.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.correlation.nrows(),
                context: "correlation matrix size".into(),
            });
        }
        for i in 0..n {
            if (self.correlation[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "correlation diagonal entry {i} is not 1"
                )));
            }
            for j in 0..i {
                let a = self.correlation[(i, j)];
                let b = self.correlation[(j, i)];
                if (a - b).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "correlation matrix is not symmetric at ({i}, {j})"
                    )));
                }
                if !(-1.0..=1.0).contains(&a) {
                    return Err(Error::InvalidArgument(format!(
                        "correlation entry ({i}, {j}) = {a} outside [-1, 1]"
                    )));
                }
            }
        }
        self.cholesky_factor()?;
        Ok(())
    }

    /// Lower Cholesky factor of the correlation, or None when R = I (the
    /// copula transform is skipped entirely in that case, which keeps
    /// uniform marginals bit-exact with the underlying unit-cube points).
    fn cholesky_factor(&self) -> Result<Option<DMatrix<f64>>> {
        let n = self.dimension();
        if self.correlation == DMatrix::identity(n, n) {
            return Ok(None);
        }
        nalgebra::Cholesky::new(self.correlation.clone())
            .map(|c| Some(c.unpack()))
            .ok_or(Error::NotPositiveDefiniteCorrelation)
    }

    /// Output law of a linear combination of the inputs, available when all
    /// marginals are normal (the copula then is exactly multivariate normal).
    pub fn linear_output_law(&self, weights: &[f64]) -> Option<(f64, f64)> {
        if weights.len() != self.dimension() {
            return None;
        }
        let mut means = Vec::with_capacity(self.dimension());
        let mut stds = Vec::with_capacity(self.dimension());
        for m in &self.marginals {
            match *m {
                Marginal::Normal { mean, std } => {
                    means.push(mean);
                    stds.push(std);
                }
                _ => return None,
            }
        }
        let mean: f64 = weights.iter().zip(&means).map(|(w, m)| w * m).sum();
        let mut var = 0.0;
        for i in 0..weights.len() {
            for j in 0..weights.len() {
                var += weights[i] * weights[j] * self.correlation[(i, j)] * stds[i] * stds[j];
            }
        }
        Some((mean, var.sqrt()))
    }

    pub fn sampler(&self, scheme: SampleScheme, count: usize, seed: u64) -> Result<Sampler<'_>> {
        Sampler::new(self, scheme, count, seed, false)
    }

    /// Antithetic sampler: points come in reflected pairs (the latent normal
    /// coordinate is negated), which cancels odd-moment estimation error.
    /// Used by default for moment-matrix estimation.
    pub fn sampler_antithetic(
        &self,
        scheme: SampleScheme,
        count: usize,
        seed: u64,
    ) -> Result<Sampler<'_>> {
        Sampler::new(self, scheme, count, seed, true)
    }

    /// Materialize a full sample batch.
    pub fn sample(&self, scheme: SampleScheme, count: usize, seed: u64) -> Result<SampleBatch> {
        self.sampler(scheme, count, seed)?.collect_batch()
    }
}

/// Sampling scheme for experimental designs and risk estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleScheme {
    Mcs,
    Qmcs,
    Lhs,
}

impl std::fmt::Display for SampleScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleScheme::Mcs => write!(f, "mcs"),
            SampleScheme::Qmcs => write!(f, "qmcs"),
            SampleScheme::Lhs => write!(f, "lhs"),
        }
    }
}

/// A realized set of input samples with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub scheme: SampleScheme,
    pub seed: u64,
    pub points: DMatrix<f64>,
    pub probabilities: Vec<f64>,
}

impl SampleBatch {
    pub fn count(&self) -> usize {
        self.points.nrows()
    }

    /// CSV export: header `x1,...,xN,p`, one row per sample.
    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.points.ncols();
        let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},p", header.join(","))?;
        for l in 0..self.count() {
            let mut row = String::new();
            for d in 0..n {
                row.push_str(&format!("{},", self.points[(l, d)]));
            }
            row.push_str(&format!("{}", self.probabilities[l]));
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

/// Deterministic chunked sampler over one input model.
pub struct Sampler<'m> {
    model: &'m RandomInputModel,
    scheme: SampleScheme,
    count: usize,
    seed: u64,
    /// Points come in latent-reflected pairs when set.
    antithetic: bool,
    cholesky: Option<DMatrix<f64>>,
    sobol: Option<SobolSequence>,
    lhs_strata: Vec<Vec<u32>>,
}

impl<'m> Sampler<'m> {
    fn new(
        model: &'m RandomInputModel,
        scheme: SampleScheme,
        count: usize,
        seed: u64,
        antithetic: bool,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("sample count must be >= 1".into()));
        }
        model.validate()?;
        let cholesky = model.cholesky_factor()?;
        let n = model.dimension();
        let base_count = if antithetic { count.div_ceil(2) } else { count };
        let sobol = match scheme {
            SampleScheme::Qmcs => Some(SobolSequence::new(n, seed)?),
            _ => None,
        };
        let lhs_strata = match scheme {
            SampleScheme::Lhs => (0..n)
                .map(|d| {
                    let mut perm: Vec<u32> = (0..base_count as u32).collect();
                    shuffle(&mut perm, &mut chacha(derive_seed(seed, "lhs-perm"), d as u64));
                    perm
                })
                .collect(),
            _ => Vec::new(),
        };
        Ok(Sampler {
            model,
            scheme,
            count,
            seed,
            antithetic,
            cholesky,
            sobol,
            lhs_strata,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    pub fn chunk_count(&self) -> usize {
        self.count.div_ceil(CHUNK_SIZE)
    }

    fn chunk_len(&self, chunk: usize) -> usize {
        let start = chunk * CHUNK_SIZE;
        (self.count - start).min(CHUNK_SIZE)
    }

    /// Unit-cube coordinates for a run of underlying point indices. MCS fills
    /// row by row from the chunk's own RNG stream so the order is well
    /// defined; QMC and LHS are random access by index.
    fn unit_rows(&self, chunk: usize, first_index: usize, rows: usize) -> DMatrix<f64> {
        let n = self.model.dimension();
        match self.scheme {
            SampleScheme::Mcs => {
                let mut rng = chacha(derive_seed(self.seed, "mcs-unit"), chunk as u64);
                let mut m = DMatrix::zeros(rows, n);
                for r in 0..rows {
                    for d in 0..n {
                        m[(r, d)] = unit_open(rng.next_u64());
                    }
                }
                m
            }
            SampleScheme::Qmcs => {
                let seq = self.sobol.as_ref().expect("sobol state");
                let mut m = DMatrix::zeros(rows, n);
                let mut buf = vec![0.0; n];
                for r in 0..rows {
                    seq.point_into((first_index + r) as u64, &mut buf);
                    for d in 0..n {
                        m[(r, d)] = buf[d];
                    }
                }
                m
            }
            SampleScheme::Lhs => {
                let base_count = if self.antithetic {
                    self.count.div_ceil(2)
                } else {
                    self.count
                };
                let inv = 1.0 / base_count as f64;
                DMatrix::from_fn(rows, n, |r, d| {
                    (f64::from(self.lhs_strata[d][first_index + r]) + 0.5) * inv
                })
            }
        }
    }

    /// Transformed input points for one chunk.
    pub fn chunk(&self, chunk: usize) -> DMatrix<f64> {
        let n = self.model.dimension();
        let rows = self.chunk_len(chunk);
        let start = chunk * CHUNK_SIZE;
        if !self.antithetic {
            let u = self.unit_rows(chunk, start, rows);
            return self.transform(u, None);
        }
        // Chunk size is even, so pairs never straddle chunk boundaries.
        let base_lo = start / 2;
        let bases = (start + rows - 1) / 2 - base_lo + 1;
        let u = self.unit_rows(chunk, base_lo, bases);
        let base_points = self.transform(u.clone(), Some(false));
        let reflected = self.transform(u, Some(true));
        let mut out = DMatrix::zeros(rows, n);
        for r in 0..rows {
            let g = start + r;
            let b = g / 2 - base_lo;
            let source = if g.is_multiple_of(2) { &base_points } else { &reflected };
            for d in 0..n {
                out[(r, d)] = source[(b, d)];
            }
        }
        out
    }

    /// Copula transform of unit-cube rows. `flip` of Some(true) negates the
    /// latent normal coordinate (antithetic partner).
    fn transform(&self, mut u: DMatrix<f64>, flip: Option<bool>) -> DMatrix<f64> {
        let n = self.model.dimension();
        match &self.cholesky {
            None => {
                for r in 0..u.nrows() {
                    for d in 0..n {
                        let x = self.model.marginals[d].inv_cdf(u[(r, d)]);
                        u[(r, d)] = if flip == Some(true) {
                            self.model.marginals[d].reflect(x)
                        } else {
                            x
                        };
                    }
                }
                u
            }
            Some(chol) => {
                u.apply(|v| *v = normal_quantile(*v));
                let z = u * chol.transpose();
                let sign = if flip == Some(true) { -1.0 } else { 1.0 };
                DMatrix::from_fn(z.nrows(), n, |r, d| {
                    self.model.marginals[d].from_z(sign * z[(r, d)])
                })
            }
        }
    }

    pub fn collect_batch(&self) -> Result<SampleBatch> {
        let n = self.model.dimension();
        let mut points = DMatrix::zeros(self.count, n);
        for c in 0..self.chunk_count() {
            let chunk = self.chunk(c);
            points
                .rows_mut(c * CHUNK_SIZE, chunk.nrows())
                .copy_from(&chunk);
        }
        let p = 1.0 / self.count as f64;
        Ok(SampleBatch {
            scheme: self.scheme,
            seed: self.seed,
            points,
            probabilities: vec![p; self.count],
        })
    }
}

/// Unbiased Fisher-Yates shuffle driven by rejection-sampled bounded draws,
/// kept in-crate so the byte layout of seeded designs never shifts under
/// dependency upgrades.
fn shuffle(values: &mut [u32], rng: &mut ChaCha12Rng) {
    for i in (1..values.len()).rev() {
        let j = bounded(rng, (i + 1) as u64) as usize;
        values.swap(i, j);
    }
}

fn bounded(rng: &mut ChaCha12Rng, range: u64) -> u64 {
    let threshold = u64::MAX - u64::MAX % range;
    loop {
        let x = rng.next_u64();
        if x < threshold {
            return x % range;
        }
    }
}

/// Per-dimension sample statistics of a batch.
#[derive(Debug, Clone)]
pub struct EmpiricalMoments {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub correlation: DMatrix<f64>,
}

/// Unbiased sample mean/std and the Pearson correlation matrix.
pub fn empirical_moments(points: &DMatrix<f64>) -> Result<EmpiricalMoments> {
    let (l, n) = (points.nrows(), points.ncols());
    if l < 2 {
        return Err(Error::InvalidArgument(
            "empirical moments need at least 2 samples".into(),
        ));
    }
    let mean: Vec<f64> = (0..n).map(|d| points.column(d).sum() / l as f64).collect();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for r in 0..l {
                acc += (points[(r, i)] - mean[i]) * (points[(r, j)] - mean[j]);
            }
            let c = acc / (l - 1) as f64;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    let std: Vec<f64> = (0..n).map(|d| cov[(d, d)].sqrt()).collect();
    let correlation = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if std[i] == 0.0 || std[j] == 0.0 {
            0.0
        } else {
            cov[(i, j)] / (std[i] * std[j])
        }
    });
    Ok(EmpiricalMoments {
        mean,
        std,
        correlation,
    })
}

/// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let l = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / l).abs());
        d = d.max(((i + 1) as f64 / l - f).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_uniform_model(n: usize) -> RandomInputModel {
        RandomInputModel::independent(vec![
            Marginal::Uniform {
                lower: 0.0,
                upper: 1.0
            };
            n
        ])
        .unwrap()
    }

    #[test]
    fn identity_correlation_reproduces_unit_cube_exactly() {
        let model = unit_uniform_model(3);
        let batch = model.sample(SampleScheme::Qmcs, 37, 0).unwrap();
        let raw = crate::sobol_seq::sobol_unit(37, 3, 0).unwrap();
        assert_eq!(batch.points, raw);
    }

    #[test]
    fn batches_are_bit_identical_across_calls() {
        let model = RandomInputModel::equicorrelated(
            vec![Marginal::Normal { mean: 30.0, std: 1.5 }; 4],
            0.5,
        )
        .unwrap();
        for scheme in [SampleScheme::Mcs, SampleScheme::Qmcs, SampleScheme::Lhs] {
            let a = model.sample(scheme, 5000, 99).unwrap();
            let b = model.sample(scheme, 5000, 99).unwrap();
            assert_eq!(a.points, b.points, "{scheme}");
        }
    }

    #[test]
    fn correlated_normals_show_target_pearson_correlation() {
        let model = RandomInputModel::equicorrelated(
            vec![Marginal::Normal { mean: 30.0, std: 1.5 }; 5],
            0.5,
        )
        .unwrap();
        let batch = model.sample(SampleScheme::Mcs, 100_000, 7).unwrap();
        let m = empirical_moments(&batch.points).unwrap();
        for i in 0..5 {
            assert!((m.mean[i] - 30.0).abs() < 0.02, "mean {}", m.mean[i]);
            for j in 0..i {
                let r = m.correlation[(i, j)];
                assert!((r - 0.5).abs() < 0.02, "corr({i},{j}) = {r}");
            }
        }
    }

    #[test]
    fn lognormal_sample_mean_matches_moment_matching() {
        let model = RandomInputModel::independent(vec![Marginal::Lognormal {
            mean: 0.144,
            cov: 0.06,
        }])
        .unwrap();
        let batch = model.sample(SampleScheme::Mcs, 100_000, 3).unwrap();
        let mean = batch.points.column(0).sum() / 100_000.0;
        assert!((mean - 0.144).abs() < 0.001, "mean {mean}");
        assert!(batch.points.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn probabilities_are_uniform_and_sum_to_one() {
        let model = unit_uniform_model(2);
        let batch = model.sample(SampleScheme::Lhs, 1000, 1).unwrap();
        let total: f64 = batch.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(batch.probabilities.iter().all(|p| *p == 1e-3));
    }

    #[test]
    fn marginal_ks_statistics_are_small_at_1e4() {
        let marginals = vec![
            Marginal::Normal { mean: 2.0, std: 0.5 },
            Marginal::Uniform { lower: -1.0, upper: 3.0 },
            Marginal::Lognormal { mean: 1.2, cov: 0.2 },
        ];
        let model = RandomInputModel::equicorrelated(marginals.clone(), 0.3).unwrap();
        let batch = model.sample(SampleScheme::Mcs, 10_000, 11).unwrap();
        for (d, marg) in marginals.iter().enumerate() {
            let col: Vec<f64> = batch.points.column(d).iter().copied().collect();
            let ks = ks_statistic(&col, |x| marg.cdf(x));
            assert!(ks < 0.02, "dim {d}: KS = {ks}");
        }
    }

    #[test]
    fn copula_covariance_matches_analytic_for_normals() {
        let stds = [1.0, 2.0, 0.5];
        let marginals: Vec<Marginal> = stds
            .iter()
            .map(|&s| Marginal::Normal { mean: 0.0, std: s })
            .collect();
        let model = RandomInputModel::equicorrelated(marginals, 0.4).unwrap();
        let l = 100_000;
        let batch = model.sample(SampleScheme::Mcs, l, 5).unwrap();
        let m = empirical_moments(&batch.points).unwrap();
        for i in 0..3 {
            for j in 0..i {
                let target = 0.4 * stds[i] * stds[j];
                let got = m.correlation[(i, j)] * m.std[i] * m.std[j];
                // three MC standard errors of a covariance estimate
                let tol = 3.0 * (1.0 + 0.4 * 0.4) * stds[i] * stds[j] / (l as f64).sqrt();
                assert!((got - target).abs() < tol, "cov({i},{j}) {got} vs {target}");
            }
        }
    }

    #[test]
    fn non_positive_definite_correlation_is_rejected() {
        let marginals = vec![Marginal::Normal { mean: 0.0, std: 1.0 }; 3];
        let err = RandomInputModel::equicorrelated(marginals, -0.9).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefiniteCorrelation));
    }

    #[test]
    fn empirical_moment_edge_cases() {
        let pts = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0]);
        let m = empirical_moments(&pts).unwrap();
        assert_eq!(m.std[0], 0.0);
        let dup = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 5.0, 5.0]);
        let m2 = empirical_moments(&dup).unwrap();
        assert!((m2.correlation[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iid_standard_normal_mean_is_near_zero() {
        let model =
            RandomInputModel::independent(vec![Marginal::Normal { mean: 0.0, std: 1.0 }])
                .unwrap();
        let batch = model.sample(SampleScheme::Mcs, 100_000, 21).unwrap();
        let mean = batch.points.column(0).sum() / 100_000.0;
        assert!(mean.abs() < 0.01, "CLT bound 3/sqrt(L): {mean}");
    }

    #[test]
    fn lhs_is_stratified_per_dimension() {
        let model = unit_uniform_model(2);
        let batch = model.sample(SampleScheme::Lhs, 64, 13).unwrap();
        for d in 0..2 {
            let mut cells: Vec<usize> = batch
                .points
                .column(d)
                .iter()
                .map(|v| (v * 64.0).floor() as usize)
                .collect();
            cells.sort_unstable();
            let want: Vec<usize> = (0..64).collect();
            assert_eq!(cells, want);
        }
    }
}
