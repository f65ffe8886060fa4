//! Declarative experiment configuration: a TOML file mirroring the pipeline
//! knobs. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{LogFormat, SamplePolicy};
use crate::matcher::ParseMode;
use crate::metrics::SupportPolicy;
use crate::profile::{ContextStrategy, DemographicAttr};
use crate::promptgen::{Emphasis, Role, Scenario};

use super::RunnerError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub matrix: Option<MatrixSpec>,
    #[serde(default)]
    pub sequential: Option<SequentialSpec>,
    pub provider: ProviderSpec,
    #[serde(default)]
    pub matcher: MatcherSpec,
    #[serde(default)]
    pub stats: StatsSpec,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: LogFormat,
    /// k-core preprocessing threshold; 1 leaves the dataset untouched.
    #[serde(default = "default_kcore")]
    pub kcore: usize,
    /// Two (train/test) or three (train/validation/test) ratios summing to 1.
    pub split: Vec<f64>,
    #[serde(default)]
    pub sample: Option<SampleSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub n: usize,
    pub policy: SamplePolicy,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub scenarios: Vec<Scenario>,
    pub roles: Vec<Role>,
    pub emphases: Vec<Emphasis>,
    /// Render S3 cells with explicit ratings.
    #[serde(default)]
    pub explicit: bool,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_context_size")]
    pub context_size: usize,
    #[serde(default = "default_context_strategy")]
    pub context_strategy: ContextStrategy,
    #[serde(default = "default_lambda")]
    pub recency_lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialSpec {
    /// Demonstration counts to run: subsets of {0, 1, 2}.
    pub icl_demos: Vec<usize>,
    pub context_strategies: Vec<ContextStrategy>,
    pub demographics: Vec<DemographicAttr>,
    #[serde(default = "default_context_size")]
    pub context_size: usize,
    #[serde(default = "default_context_size")]
    pub n_recent: usize,
    #[serde(default = "default_lambda")]
    pub recency_lambda: f64,
    #[serde(default = "default_k")]
    pub eval_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Live,
    Mock,
    Replay,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(ProviderKind::Live),
            "mock" => Ok(ProviderKind::Mock),
            "replay" => Ok(ProviderKind::Replay),
            other => Err(format!(
                "unknown provider {other:?} (expected live|mock|replay)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSpec {
    pub kind: ProviderKind,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Cost per 1000 tokens.
    #[serde(default = "default_alpha")]
    pub alpha_per_1k_tokens: f64,
    /// Bound on in-flight completions.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub replay_path: Option<PathBuf>,
    #[serde(default)]
    pub record_path: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub strict_replay: bool,
    #[serde(default)]
    pub mock_seed: u64,
    /// Lines per synthetic mock response; defaults to the evaluation k.
    #[serde(default)]
    pub mock_list_len: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatcherSpec {
    #[serde(default = "default_parse_mode")]
    pub mode: ParseMode,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl Default for MatcherSpec {
    fn default() -> Self {
        MatcherSpec {
            mode: ParseMode::Rules,
            threshold: crate::matcher::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSpec {
    #[serde(default = "default_bootstrap")]
    pub bootstrap_samples: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_support")]
    pub fairness_support: SupportPolicy,
}

impl Default for StatsSpec {
    fn default() -> Self {
        StatsSpec {
            bootstrap_samples: default_bootstrap(),
            seed: default_seed(),
            repetitions: default_repetitions(),
            fairness_support: default_support(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

fn default_kcore() -> usize {
    1
}
fn default_k() -> usize {
    10
}
fn default_context_size() -> usize {
    crate::profile::DEFAULT_CONTEXT_SIZE
}
fn default_context_strategy() -> ContextStrategy {
    ContextStrategy::Frequent
}
fn default_lambda() -> f64 {
    crate::profile::DEFAULT_RECENCY_LAMBDA
}
fn default_model() -> String {
    "gpt-3.5-turbo".to_string()
}
fn default_max_tokens() -> u32 {
    crate::llmclient::DEFAULT_MAX_TOKENS
}
fn default_alpha() -> f64 {
    crate::llmclient::DEFAULT_ALPHA
}
fn default_concurrency() -> usize {
    4
}
fn default_true() -> bool {
    true
}
fn default_parse_mode() -> ParseMode {
    ParseMode::Rules
}
fn default_threshold() -> f64 {
    crate::matcher::DEFAULT_THRESHOLD
}
fn default_bootstrap() -> u64 {
    1000
}
fn default_seed() -> u64 {
    42
}
fn default_repetitions() -> usize {
    5
}
fn default_support() -> SupportPolicy {
    SupportPolicy::NonzeroOnly
}

/// One experiment-matrix cell: everything needed to build a prompt.
#[derive(Debug, Clone, PartialEq)]
pub enum CellSpec {
    TopK {
        scenario: Scenario,
        role: Role,
        emphasis: Emphasis,
        explicit: bool,
        k: usize,
    },
    Sequential {
        demos: usize,
        strategy: ContextStrategy,
        demographic: DemographicAttr,
    },
}

impl CellSpec {
    pub fn tag(&self) -> String {
        match self {
            CellSpec::TopK {
                scenario,
                role,
                emphasis,
                explicit,
                ..
            } => {
                let mut tag = format!("{}_{}_{}", scenario.tag(), role.tag(), emphasis.tag());
                if *explicit {
                    tag.push_str("_explicit");
                }
                tag
            }
            CellSpec::Sequential {
                demos,
                strategy,
                demographic,
            } => {
                let kind = match demos {
                    0 => "zeroshot",
                    1 => "icl1",
                    _ => "icl2",
                };
                let strat = match strategy {
                    ContextStrategy::Frequent => "freq",
                    ContextStrategy::RecencyFrequent => "recfreq",
                };
                let demo = match demographic {
                    DemographicAttr::None => "nodemo",
                    DemographicAttr::Gender => "gender",
                    DemographicAttr::AgeGroup => "age",
                };
                format!("seq_{kind}_{strat}_{demo}")
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(raw: &str) -> Result<Self, RunnerError> {
        let config: ExperimentConfig =
            toml::from_str(raw).map_err(|e| RunnerError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let raw = std::fs::read_to_string(path).map_err(|e| RunnerError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&raw)
    }

    /// Every matrix cell must be a valid prompt combination; checked before
    /// any network call.
    pub fn validate(&self) -> Result<(), RunnerError> {
        match (&self.matrix, &self.sequential) {
            (Some(_), Some(_)) => {
                return Err(RunnerError::Config(
                    "config declares both [matrix] and [sequential]; pick one".into(),
                ))
            }
            (None, None) => {
                return Err(RunnerError::Config(
                    "config needs a [matrix] or a [sequential] section".into(),
                ))
            }
            _ => {}
        }
        if let Some(matrix) = &self.matrix {
            if matrix.scenarios.is_empty() || matrix.roles.is_empty() || matrix.emphases.is_empty()
            {
                return Err(RunnerError::Config(
                    "matrix scenario/role/emphasis lists must be non-empty".into(),
                ));
            }
            if matrix.k == 0 {
                return Err(RunnerError::Config("matrix k must be >= 1".into()));
            }
            if matrix.explicit && !matrix.scenarios.contains(&Scenario::S3) {
                return Err(RunnerError::Config(
                    "explicit ratings are only valid with scenario s3, which is not in the matrix"
                        .into(),
                ));
            }
        }
        if let Some(seq) = &self.sequential {
            if seq.icl_demos.is_empty()
                || seq.context_strategies.is_empty()
                || seq.demographics.is_empty()
            {
                return Err(RunnerError::Config(
                    "sequential demo/strategy/demographic lists must be non-empty".into(),
                ));
            }
            if seq.icl_demos.iter().any(|&d| d > 2) {
                return Err(RunnerError::Config(
                    "icl_demos entries must be 0, 1, or 2".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.matcher.threshold) {
            return Err(RunnerError::Config(format!(
                "matcher threshold {} outside [0, 1]",
                self.matcher.threshold
            )));
        }
        if self.stats.repetitions == 0 {
            return Err(RunnerError::Config("repetitions must be >= 1".into()));
        }
        if self.provider.kind == ProviderKind::Replay && self.provider.replay_path.is_none() {
            return Err(RunnerError::Config(
                "replay provider needs replay_path".into(),
            ));
        }
        Ok(())
    }

    /// Expand the config into its cell list, in deterministic order.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut cells = Vec::new();
        if let Some(matrix) = &self.matrix {
            for &scenario in &matrix.scenarios {
                for &role in &matrix.roles {
                    for &emphasis in &matrix.emphases {
                        cells.push(CellSpec::TopK {
                            scenario,
                            role,
                            emphasis,
                            explicit: matrix.explicit && scenario == Scenario::S3,
                            k: matrix.k,
                        });
                    }
                }
            }
        }
        if let Some(seq) = &self.sequential {
            for &demos in &seq.icl_demos {
                for &strategy in &seq.context_strategies {
                    for &demographic in &seq.demographics {
                        cells.push(CellSpec::Sequential {
                            demos,
                            strategy,
                            demographic,
                        });
                    }
                }
            }
        }
        cells
    }

    /// The k at which accuracy metrics are evaluated.
    pub fn eval_k(&self) -> usize {
        match (&self.matrix, &self.sequential) {
            (Some(m), _) => m.k,
            (_, Some(s)) => s.eval_k,
            _ => default_k(),
        }
    }

    /// Canonical hash of the config for the run manifest. The output
    /// directory is a location, not experiment content, so it is excluded;
    /// moving a results directory must not invalidate its resume state.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serialization is infallible");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
