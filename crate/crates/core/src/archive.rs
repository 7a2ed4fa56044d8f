//! Surrogate archives: JSON persistence for fitted surrogates, with or
//! without a bi-fidelity link section.
//!
//! Serialization goes through serde_json, whose float formatting is
//! shortest-round-trip, so a load/save cycle reproduces every coefficient
//! bit for bit. Archives carry no wall-clock timestamps: rerunning a
//! pipeline with identical seeds must produce byte-identical files.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bifidelity::{BiFidelitySurrogate, FourierLink, Provenance};
use crate::error::{Error, Result};
use crate::orthopoly::OrthonormalBasis;
use crate::surrogate::{DdGpceSurrogate, FitReport};

pub const ARCHIVE_SCHEMA: &str = "ddgpce-archive";
pub const ARCHIVE_VERSION: u32 = 1;

/// Portable form of an orthonormal basis: index set, standardization, and
/// the whitening matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub index: crate::orthopoly::BasisIndex,
    pub standardization: crate::orthopoly::Standardization,
    pub whitening: Vec<Vec<f64>>,
    pub condition_estimate: f64,
    pub jitter: Option<f64>,
    pub ill_conditioned: bool,
}

impl BasisRecord {
    pub fn from_basis(basis: &OrthonormalBasis) -> Self {
        let k = basis.whitening.nrows();
        let whitening = (0..k)
            .map(|i| (0..k).map(|j| basis.whitening[(i, j)]).collect())
            .collect();
        BasisRecord {
            index: basis.index.clone(),
            standardization: basis.standardization.clone(),
            whitening,
            condition_estimate: basis.condition_estimate,
            jitter: basis.jitter,
            ill_conditioned: basis.ill_conditioned,
        }
    }

    pub fn to_basis(&self) -> Result<OrthonormalBasis> {
        let k = self.index.cardinality();
        if self.whitening.len() != k || self.whitening.iter().any(|row| row.len() != k) {
            return Err(Error::Archive(format!(
                "whitening matrix is not {k} x {k}"
            )));
        }
        let whitening = DMatrix::from_fn(k, k, |i, j| self.whitening[i][j]);
        if self.standardization.shift.len() != self.index.dimension()
            || self.standardization.scale.len() != self.index.dimension()
        {
            return Err(Error::Archive("standardization length mismatch".into()));
        }
        Ok(OrthonormalBasis {
            index: self.index.clone(),
            standardization: self.standardization.clone(),
            whitening,
            condition_estimate: self.condition_estimate,
            jitter: self.jitter,
            ill_conditioned: self.ill_conditioned,
        })
    }
}

/// Identifiers and sizes recorded alongside a fitted surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ArchiveProvenance {
    pub seed: u64,
    pub model: Option<String>,
    pub low_model: Option<String>,
    pub high_model: Option<String>,
    pub design_size: Option<usize>,
    pub pair_count: Option<usize>,
    pub moment_samples: Option<usize>,
    pub low_evaluations: Option<u64>,
    pub high_evaluations: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSection {
    pub basis: BasisRecord,
    pub coefficients: Vec<f64>,
    pub fit_report: FitReport,
    pub pair_count: usize,
}

/// On-disk form of a fitted surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateArchive {
    pub schema: String,
    pub format_version: u32,
    pub input_dimension: usize,
    pub basis: BasisRecord,
    pub coefficients: Vec<f64>,
    pub fit_report: FitReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkSection>,
    pub provenance: ArchiveProvenance,
}

/// A deserialized archive ready to evaluate.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum LoadedSurrogate {
    Single(DdGpceSurrogate),
    BiFidelity(BiFidelitySurrogate),
}

impl LoadedSurrogate {
    pub fn dimension(&self) -> usize {
        match self {
            LoadedSurrogate::Single(s) => s.dimension(),
            LoadedSurrogate::BiFidelity(s) => s.dimension(),
        }
    }

    pub fn evaluate(&self, points: &DMatrix<f64>) -> Vec<f64> {
        match self {
            LoadedSurrogate::Single(s) => s.evaluate(points),
            LoadedSurrogate::BiFidelity(s) => s.evaluate(points),
        }
    }

    /// Evaluate on a row-major flat buffer of `rows x dimension` points.
    pub fn evaluate_rows(&self, flat: &[f64], rows: usize) -> Result<Vec<f64>> {
        let dimension = self.dimension();
        if flat.len() != rows * dimension {
            return Err(Error::DimensionMismatch {
                expected: rows * dimension,
                actual: flat.len(),
                context: "flat point buffer length".into(),
            });
        }
        Ok(self.evaluate(&DMatrix::from_row_slice(rows, dimension, flat)))
    }
}

impl SurrogateArchive {
    pub fn from_surrogate(surrogate: &DdGpceSurrogate, provenance: ArchiveProvenance) -> Self {
        SurrogateArchive {
            schema: ARCHIVE_SCHEMA.to_string(),
            format_version: ARCHIVE_VERSION,
            input_dimension: surrogate.dimension(),
            basis: BasisRecord::from_basis(&surrogate.basis),
            coefficients: surrogate.coefficients.iter().copied().collect(),
            fit_report: surrogate.fit_report.clone(),
            link: None,
            provenance,
        }
    }

    pub fn from_bifidelity(surrogate: &BiFidelitySurrogate, mut provenance: ArchiveProvenance) -> Self {
        let p: &Provenance = &surrogate.provenance;
        provenance.design_size = Some(p.design_size);
        provenance.pair_count = Some(p.pair_count);
        provenance.moment_samples = Some(p.moment_samples);
        provenance.low_evaluations = Some(p.low_evaluations);
        provenance.high_evaluations = Some(p.high_evaluations);
        SurrogateArchive {
            schema: ARCHIVE_SCHEMA.to_string(),
            format_version: ARCHIVE_VERSION,
            input_dimension: surrogate.dimension(),
            basis: BasisRecord::from_basis(&surrogate.low.basis),
            coefficients: surrogate.low.coefficients.iter().copied().collect(),
            fit_report: surrogate.low.fit_report.clone(),
            link: Some(LinkSection {
                basis: BasisRecord::from_basis(&surrogate.link.basis),
                coefficients: surrogate.link.coefficients.iter().copied().collect(),
                fit_report: surrogate.link.fit_report.clone(),
                pair_count: surrogate.link.pair_count,
            }),
            provenance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != ARCHIVE_SCHEMA {
            return Err(Error::Archive(format!(
                "unexpected schema {:?}, expected {ARCHIVE_SCHEMA:?}",
                self.schema
            )));
        }
        if self.format_version != ARCHIVE_VERSION {
            return Err(Error::Archive(format!(
                "unsupported format version {}",
                self.format_version
            )));
        }
        if self.basis.index.cardinality() != self.coefficients.len() {
            return Err(Error::Archive(format!(
                "coefficient count {} does not match basis cardinality {}",
                self.coefficients.len(),
                self.basis.index.cardinality()
            )));
        }
        if self.basis.index.dimension() != self.input_dimension {
            return Err(Error::Archive("basis dimension mismatch".into()));
        }
        if let Some(link) = &self.link {
            if link.basis.index.dimension() != 1 {
                return Err(Error::Archive("link basis must be univariate".into()));
            }
            if link.basis.index.cardinality() != link.coefficients.len() {
                return Err(Error::Archive("link coefficient count mismatch".into()));
            }
        }
        Ok(())
    }

    /// Reconstruct the evaluable surrogate.
    pub fn instantiate(&self) -> Result<LoadedSurrogate> {
        self.validate()?;
        let single = DdGpceSurrogate::from_parts(
            self.basis.to_basis()?,
            DVector::from_vec(self.coefficients.clone()),
            self.fit_report.clone(),
        )?;
        match &self.link {
            None => Ok(LoadedSurrogate::Single(single)),
            Some(section) => {
                let link = FourierLink::from_parts(
                    section.basis.to_basis()?,
                    DVector::from_vec(section.coefficients.clone()),
                    section.fit_report.clone(),
                    section.pair_count,
                )?;
                Ok(LoadedSurrogate::BiFidelity(BiFidelitySurrogate {
                    low: single,
                    link,
                    provenance: Provenance {
                        seed: self.provenance.seed,
                        design_size: self.provenance.design_size.unwrap_or(0),
                        pair_count: self.provenance.pair_count.unwrap_or(0),
                        moment_samples: self.provenance.moment_samples.unwrap_or(0),
                        low_evaluations: self.provenance.low_evaluations.unwrap_or(0),
                        high_evaluations: self.provenance.high_evaluations.unwrap_or(0),
                    },
                }))
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let archive: SurrogateArchive = serde_json::from_str(text)?;
        archive.validate()?;
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        std::fs::write(path, text.as_bytes()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}
