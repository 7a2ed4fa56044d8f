//! Pipeline configuration: a single JSON document describing the input law,
//! truncation orders, sample sizes, risk levels, seeds, and model
//! references. Validation reports every problem at once, before any model
//! evaluation is launched.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distributions::{Marginal, RandomInputModel, SampleScheme};
use crate::error::{Error, Result};
use crate::external::CommandEvaluator;
use crate::models::truss::{builtin_truss36, TrussEvaluator, TrussModel, TrussOutput};
use crate::models::{AnalyticModel, ModelEvaluator};
use crate::multiindex::{cardinality_reduced, DEFAULT_CARDINALITY_CAP};
use crate::risk::Estimator;

/// Marginal entry, optionally repeated over consecutive dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalSpec {
    #[serde(flatten)]
    pub marginal: Marginal,
    #[serde(default = "one")]
    pub repeat: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelationSpec {
    Identity,
    Equicorrelated { rho: f64 },
    Dense { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputModelSpec {
    pub marginals: Vec<MarginalSpec>,
    pub correlation: CorrelationSpec,
}

impl InputModelSpec {
    pub fn dimension(&self) -> usize {
        self.marginals.iter().map(|m| m.repeat).sum()
    }

    pub fn build(&self) -> Result<RandomInputModel> {
        let mut marginals = Vec::with_capacity(self.dimension());
        for spec in &self.marginals {
            for _ in 0..spec.repeat {
                marginals.push(spec.marginal);
            }
        }
        let n = marginals.len();
        let correlation = match &self.correlation {
            CorrelationSpec::Identity => DMatrix::identity(n, n),
            CorrelationSpec::Equicorrelated { rho } => {
                DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { *rho })
            }
            CorrelationSpec::Dense { rows } => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: rows.len(),
                        context: "dense correlation rows".into(),
                    });
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
        };
        RandomInputModel::new(marginals, correlation)
    }
}

/// Truncation orders: interaction order S, polynomial degree m, and the
/// optional link degree for bi-fidelity runs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BasisSpec {
    pub interaction_order: usize,
    pub degree: u32,
    #[serde(default = "default_link_degree")]
    pub link_degree: u32,
}

fn default_link_degree() -> u32 {
    3
}

/// Sample sizes: risk-estimation draws L, design size L', high-fidelity
/// pair count L'', and moment-estimation draws.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleSizes {
    #[serde(default = "default_risk")]
    pub risk: usize,
    pub design: usize,
    /// 0 means "use the default policy": 8 x (link_degree + 1).
    #[serde(default)]
    pub pairs: usize,
    #[serde(default = "default_moments")]
    pub moments: usize,
}

fn default_risk() -> usize {
    10_000
}

fn default_moments() -> usize {
    5_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelRef {
    /// Built-in models: `truss36/fine/y1`, `truss36/fine/y2`,
    /// `truss36/low/y1`, `truss36/low/y2`.
    Builtin { name: String },
    Linear { weights: Vec<f64> },
    Constant { value: f64 },
    /// A truss loaded from the documented JSON schema.
    TrussFile { path: String, output: TrussOutput },
    /// External executable speaking the batch CSV protocol on stdin/stdout.
    Command { argv: Vec<String> },
}

impl ModelRef {
    pub fn describe(&self) -> String {
        match self {
            ModelRef::Builtin { name } => format!("builtin:{name}"),
            ModelRef::Linear { weights } => format!("linear[{}]", weights.len()),
            ModelRef::Constant { value } => format!("constant({value})"),
            ModelRef::TrussFile { path, output } => format!("truss:{path}:{output:?}"),
            ModelRef::Command { argv } => format!("command:{}", argv.join(" ")),
        }
    }

    /// Problems that make the reference unusable, without running anything.
    fn check(&self, base_dir: &Path, errors: &mut Vec<String>) {
        match self {
            ModelRef::Builtin { name } => {
                if parse_builtin(name).is_none() {
                    errors.push(format!(
                        "unknown builtin model {name:?}; expected truss36/{{fine|low}}/{{y1|y2}}"
                    ));
                }
            }
            ModelRef::Linear { weights } => {
                if weights.is_empty() {
                    errors.push("linear model needs at least one weight".into());
                }
            }
            ModelRef::Constant { .. } => {}
            ModelRef::TrussFile { path, .. } => {
                let resolved = resolve_path(base_dir, path);
                if !resolved.is_file() {
                    errors.push(format!("truss file {} does not exist", resolved.display()));
                }
            }
            ModelRef::Command { argv } => {
                if argv.is_empty() {
                    errors.push("external command is empty".into());
                } else if !command_exists(&argv[0]) {
                    errors.push(format!("external command {:?} not found", argv[0]));
                }
            }
        }
    }

    pub fn resolve(
        &self,
        base_dir: &Path,
        external: &ExternalSpec,
    ) -> Result<Box<dyn ModelEvaluator>> {
        match self {
            ModelRef::Builtin { name } => {
                let (low, output) = parse_builtin(name).ok_or_else(|| {
                    Error::Config(vec![format!("unknown builtin model {name:?}")])
                })?;
                Ok(Box::new(if low {
                    TrussEvaluator::low(builtin_truss36(), output)
                } else {
                    TrussEvaluator::fine(builtin_truss36(), output)
                }))
            }
            ModelRef::Linear { weights } => Ok(Box::new(AnalyticModel::LinearCombo {
                weights: weights.clone(),
            })),
            ModelRef::Constant { value } => {
                Ok(Box::new(AnalyticModel::Constant { value: *value }))
            }
            ModelRef::TrussFile { path, output } => {
                let resolved = resolve_path(base_dir, path);
                let text = std::fs::read_to_string(&resolved).map_err(|source| Error::Io {
                    path: resolved.display().to_string(),
                    source,
                })?;
                let truss = TrussModel::from_json(&text)?;
                Ok(Box::new(TrussEvaluator::fine(truss, *output)))
            }
            ModelRef::Command { argv } => Ok(Box::new(CommandEvaluator::new(
                argv.clone(),
                external.batch_size,
                external.timeout_seconds,
            )?)),
        }
    }
}

fn parse_builtin(name: &str) -> Option<(bool, TrussOutput)> {
    let output = |tag: &str| match tag {
        "y1" => Some(TrussOutput::Y1),
        "y2" => Some(TrussOutput::Y2),
        _ => None,
    };
    match name.split('/').collect::<Vec<_>>().as_slice() {
        ["truss36", "fine", tag] => output(tag).map(|o| (false, o)),
        ["truss36", "low", tag] => output(tag).map(|o| (true, o)),
        _ => None,
    }
}

fn resolve_path(base_dir: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

fn command_exists(program: &str) -> bool {
    if program.contains('/') {
        return Path::new(program).is_file();
    }
    std::env::var_os("PATH")
        .map(|paths| {
            std::env::split_paths(&paths).any(|dir| dir.join(program).is_file())
        })
        .unwrap_or(false)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialsSpec {
    #[serde(default = "default_trials")]
    pub count: usize,
}

fn default_trials() -> usize {
    20
}

impl Default for TrialsSpec {
    fn default() -> Self {
        TrialsSpec {
            count: default_trials(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OversamplingSpec {
    #[serde(default = "default_ratio")]
    pub min_ratio: f64,
}

fn default_ratio() -> f64 {
    3.0
}

impl Default for OversamplingSpec {
    fn default() -> Self {
        OversamplingSpec {
            min_ratio: default_ratio(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchemeSpec {
    #[serde(default = "mcs")]
    pub design: SampleScheme,
    #[serde(default = "qmcs")]
    pub moments: SampleScheme,
}

fn mcs() -> SampleScheme {
    SampleScheme::Mcs
}
fn qmcs() -> SampleScheme {
    SampleScheme::Qmcs
}

impl Default for SchemeSpec {
    fn default() -> Self {
        SchemeSpec {
            design: mcs(),
            moments: qmcs(),
        }
    }
}

/// External-command protocol options.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ExternalSpec {
    /// Samples per spawned process; 0 sends the whole batch to one process.
    #[serde(default)]
    pub batch_size: usize,
    #[serde(default)]
    pub timeout_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub total: f64,
    pub high_cost: f64,
    pub low_cost: f64,
}

/// The whole pipeline configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input_model: InputModelSpec,
    pub basis: BasisSpec,
    pub samples: SampleSizes,
    pub betas: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_model: Option<ModelRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_model: Option<ModelRef>,
    #[serde(default)]
    pub trials: TrialsSpec,
    #[serde(default)]
    pub oversampling: OversamplingSpec,
    #[serde(default)]
    pub schemes: SchemeSpec,
    #[serde(default = "default_cap")]
    pub cardinality_cap: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSpec>,
    #[serde(default)]
    pub external: ExternalSpec,
}

fn default_estimator() -> Estimator {
    Estimator::Rockafellar
}

fn default_cap() -> u64 {
    DEFAULT_CARDINALITY_CAP as u64
}

/// Which command the configuration is being validated for; commands differ
/// in which model references they require.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Fit,
    Estimate,
    Bifit,
    Trials,
    Sample,
    Validate,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn dimension(&self) -> usize {
        self.input_model.dimension()
    }

    /// Effective high-fidelity pair count: the configured value, or the
    /// default factor-8 policy 8 x (link_degree + 1) when left at 0.
    pub fn pair_count(&self) -> usize {
        if self.samples.pairs != 0 {
            self.samples.pairs
        } else {
            8 * (self.basis.link_degree as usize + 1)
        }
    }

    /// Cardinality of the configured basis, if representable.
    pub fn basis_cardinality(&self) -> Result<u128> {
        cardinality_reduced(
            self.dimension(),
            self.basis.interaction_order,
            self.basis.degree,
        )
    }

    /// Validate everything that can be checked without running models.
    /// Collects every problem; returns them all at once.
    pub fn validate(&self, base_dir: &Path, command: CommandKind) -> Result<()> {
        let mut errors = Vec::new();

        if self.input_model.marginals.is_empty() {
            errors.push("input model has no marginals".into());
        }
        for (i, spec) in self.input_model.marginals.iter().enumerate() {
            if spec.repeat == 0 {
                errors.push(format!("marginal {i} has repeat 0"));
            }
            if let Err(e) = spec.marginal.validate() {
                errors.push(format!("marginal {i}: {e}"));
            }
        }
        match self.input_model.build() {
            Err(e) => errors.push(format!("input model: {e}")),
            Ok(model) => {
                if let Err(e) = model.validate() {
                    errors.push(format!("input model: {e}"));
                }
            }
        }

        let n = self.dimension();
        if self.basis.interaction_order > n {
            errors.push(format!(
                "interaction order {} exceeds input dimension {n}",
                self.basis.interaction_order
            ));
        }
        if u64::from(self.basis.degree) < self.basis.interaction_order as u64 {
            errors.push(format!(
                "degree {} is below the interaction order {}",
                self.basis.degree, self.basis.interaction_order
            ));
        }

        let cardinality = match self.basis_cardinality() {
            Ok(k) => {
                if k > u128::from(self.cardinality_cap) {
                    errors.push(format!(
                        "basis cardinality {k} exceeds the cap {}",
                        self.cardinality_cap
                    ));
                }
                Some(k)
            }
            Err(e) => {
                errors.push(format!("basis cardinality: {e}"));
                None
            }
        };

        if let Some(k) = cardinality {
            if matches!(command, CommandKind::Fit | CommandKind::Bifit | CommandKind::Trials)
                && (self.samples.design as u128) <= k
            {
                errors.push(format!(
                    "design size {} must exceed the basis cardinality {k}",
                    self.samples.design
                ));
            }
        }

        if self.samples.risk == 0 {
            errors.push("risk sample count must be >= 1".into());
        }
        if self.samples.moments == 0 {
            errors.push("moment sample count must be >= 1".into());
        }
        if let Some(k) = cardinality {
            if matches!(command, CommandKind::Fit | CommandKind::Bifit | CommandKind::Trials)
                && (self.samples.moments as u128) < 10 * k
            {
                errors.push(format!(
                    "moment sample count {} is below 10 x cardinality {k}",
                    self.samples.moments
                ));
            }
        }

        if self.betas.is_empty() {
            errors.push("at least one risk level is required".into());
        }
        for beta in &self.betas {
            if !(*beta > 0.0 && *beta < 1.0) {
                errors.push(format!("risk level {beta} outside (0,1)"));
            } else if *beta >= 1.0 - 1.0 / self.samples.risk.max(1) as f64 {
                errors.push(format!(
                    "risk level {beta} leaves no tail samples at L = {}",
                    self.samples.risk
                ));
            }
        }

        if matches!(command, CommandKind::Bifit) {
            let needed = self.basis.link_degree as usize + 1;
            if self.basis.link_degree == 0 {
                errors.push("link degree must be >= 1 for bi-fidelity runs".into());
            }
            if self.pair_count() <= needed {
                errors.push(format!(
                    "pair count {} must exceed link degree + 1 = {needed}",
                    self.pair_count()
                ));
            }
        }

        if matches!(command, CommandKind::Trials) {
            if self.trials.count == 0 {
                errors.push("trial count must be >= 1".into());
            }
            if self.samples.risk < self.samples.design {
                errors.push(format!(
                    "crude-MCS pool {} is smaller than the per-trial design {} (subsets are drawn without replacement)",
                    self.samples.risk, self.samples.design
                ));
            }
        }

        match command {
            CommandKind::Fit | CommandKind::Estimate | CommandKind::Trials => {
                match &self.model {
                    None => errors.push("this command requires a \"model\" reference".into()),
                    Some(m) => m.check(base_dir, &mut errors),
                }
            }
            CommandKind::Bifit => {
                match &self.low_model {
                    None => errors.push("bifit requires a \"low_model\" reference".into()),
                    Some(m) => m.check(base_dir, &mut errors),
                }
                match &self.high_model {
                    None => errors.push("bifit requires a \"high_model\" reference".into()),
                    Some(m) => m.check(base_dir, &mut errors),
                }
            }
            CommandKind::Sample | CommandKind::Validate => {
                if let Some(m) = &self.model {
                    m.check(base_dir, &mut errors);
                }
            }
        }

        for (model_ref, label) in [
            (&self.model, "model"),
            (&self.low_model, "low_model"),
            (&self.high_model, "high_model"),
        ]
        .iter()
        .filter_map(|(m, label)| m.as_ref().map(|m| (m, *label)))
        {
            if let ModelRef::Linear { weights } = model_ref {
                if weights.len() != n {
                    errors.push(format!(
                        "{label} has {} weights but the input dimension is {n}",
                        weights.len()
                    ));
                }
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}
