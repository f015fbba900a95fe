//! Model and training configuration: the five design axes plus dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{MatchError, Result};
use crate::interaction::{AlignSettings, Nonlinearity, Structure};
use crate::params::AdamConfig;

/// How a query/corpus embedding pair is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceDistance {
    /// Hinge mass left over after aligning the corpus embedding set onto the
    /// query set with a trained soft permutation.
    #[default]
    SetAlign,
    /// Hinge distance between aggregated whole-graph vectors.
    AggHinge,
    /// MLP on the concatenated whole-graph vectors.
    AggMlp,
    /// Neural tensor network on the whole-graph vectors.
    AggNtn,
}

/// Whether cross-graph signals enter during message passing or only at scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    #[default]
    Early,
    Late,
}

/// Whether alignment and interaction operate on node or edge embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Node,
    #[default]
    Edge,
}

/// Full model specification. The defaults are the strongest configuration:
/// set alignment, early interaction, injective structure, hinge
/// non-linearity, edge granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub distance: RelevanceDistance,
    pub stage: Stage,
    pub structure: Structure,
    pub nonlinearity: Nonlinearity,
    pub granularity: Granularity,
    /// Message-passing layers K.
    pub layers: usize,
    /// Node embedding width.
    pub dim_h: usize,
    /// Edge embedding and message width.
    pub dim_m: usize,
    /// Alignment temperature.
    pub tau: f64,
    /// Sinkhorn iterations T (injective structure only).
    pub sinkhorn_steps: usize,
    /// Add Gumbel noise to similarities before Sinkhorn during training.
    pub gumbel_noise: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            distance: RelevanceDistance::SetAlign,
            stage: Stage::Early,
            structure: Structure::Injective,
            nonlinearity: Nonlinearity::Hinge,
            granularity: Granularity::Edge,
            layers: 5,
            dim_h: 10,
            dim_m: 20,
            tau: 0.1,
            sinkhorn_steps: 20,
            gumbel_noise: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(MatchError::Config("layers (K) must be at least 1".into()));
        }
        if self.dim_h == 0 || self.dim_m == 0 {
            return Err(MatchError::Config("embedding widths must be at least 1".into()));
        }
        if self.tau <= 0.0 {
            return Err(MatchError::Config(format!(
                "temperature must be positive, got {}",
                self.tau
            )));
        }
        if self.sinkhorn_steps == 0 {
            return Err(MatchError::Config("sinkhorn_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// True when some alignment matrix is computed anywhere in the pipeline.
    pub fn uses_alignment(&self) -> bool {
        self.stage == Stage::Early || self.distance == RelevanceDistance::SetAlign
    }

    /// Structure and non-linearity are dead weight for aggregated heads under
    /// late interaction. Returns warnings naming the ignored settings.
    pub fn ignored_axis_warnings(&self) -> Vec<String> {
        if self.uses_alignment() {
            Vec::new()
        } else {
            vec![format!(
                "structure ({:?}) and nonlinearity ({:?}) are ignored: no alignment \
                 is used with {:?} distance under late interaction",
                self.structure, self.nonlinearity, self.distance
            )]
        }
    }

    /// Embedding width at the configured granularity (also the whole-graph
    /// vector width for aggregated heads).
    pub fn granularity_dim(&self) -> usize {
        match self.granularity {
            Granularity::Node => self.dim_h,
            Granularity::Edge => self.dim_m,
        }
    }

    pub fn align_settings(&self) -> AlignSettings {
        AlignSettings {
            structure: self.structure,
            nonlinearity: self.nonlinearity,
            tau: self.tau,
            sinkhorn_steps: self.sinkhorn_steps,
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Ranking-loss margin.
    pub margin: f64,
    /// Triples sampled per batch.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-MAP improvement before stopping.
    pub patience: usize,
    /// Minimum improvement that resets patience.
    pub min_delta: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            margin: 0.5,
            batch_size: 128,
            max_epochs: 1000,
            patience: 50,
            min_delta: 1e-4,
            seed: 1704,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.margin <= 0.0 {
            return Err(MatchError::Config(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if self.batch_size == 0 {
            return Err(MatchError::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// A full experiment: model plus trainer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()
    }
}

/// One grid row. Structure and non-linearity are `None` exactly where no
/// alignment exists (aggregated heads under late interaction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEntry {
    pub distance: RelevanceDistance,
    pub stage: Stage,
    pub granularity: Granularity,
    pub structure: Option<Structure>,
    pub nonlinearity: Option<Nonlinearity>,
}

impl GridEntry {
    pub fn to_model(&self, base: &ModelConfig) -> ModelConfig {
        ModelConfig {
            distance: self.distance,
            stage: self.stage,
            granularity: self.granularity,
            structure: self.structure.unwrap_or(base.structure),
            nonlinearity: self.nonlinearity.unwrap_or(base.nonlinearity),
            ..*base
        }
    }

    /// Axis values as CSV-friendly strings; absent axes print "na".
    pub fn axis_strings(&self) -> [String; 5] {
        [
            snake(&self.distance),
            snake(&self.stage),
            self.structure.map_or("na".into(), |s| snake(&s)),
            self.nonlinearity.map_or("na".into(), |s| snake(&s)),
            snake(&self.granularity),
        ]
    }

    /// Match a `key=value` filter over the axis columns.
    pub fn matches_filter(&self, key: &str, value: &str) -> Result<bool> {
        let [d, st, sr, nl, g] = self.axis_strings();
        let actual = match key {
            "distance" => d,
            "stage" => st,
            "structure" => sr,
            "nonlinearity" => nl,
            "granularity" => g,
            _ => {
                return Err(MatchError::Config(format!(
                    "unknown filter key {key:?} (expected distance/stage/structure/nonlinearity/granularity)"
                )))
            }
        };
        Ok(actual == value)
    }
}

/// Serde snake_case rendering of an axis value.
pub fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// The rule generating the configuration grid, also embedded in the CSV
/// header so every run documents its own enumeration.
pub const GRID_RULE: &str = "set_align varies all five axes (2 stages x 2 structures x \
    3 nonlinearities x 2 granularities = 24); aggregated heads (agg_hinge, agg_mlp, agg_ntn) \
    have no alignment under late interaction (structure/nonlinearity = na; 3 x 2 granularities = 6) \
    and vary structure and nonlinearity under early interaction (3 x 2 x 3 x 2 = 36); 66 rows total";

/// Every valid design-space configuration, grouped by stage and granularity.
pub fn enumerate_grid() -> Vec<GridEntry> {
    use Granularity::*;
    use RelevanceDistance::*;
    use Stage::*;

    let distances = [SetAlign, AggHinge, AggMlp, AggNtn];
    let structures = [Structure::NonInjective, Structure::Injective];
    let nonlinearities = [Nonlinearity::Neural, Nonlinearity::Dot, Nonlinearity::Hinge];

    let mut entries = Vec::new();
    for stage in [Late, Early] {
        for granularity in [Node, Edge] {
            for distance in distances {
                let aligned = stage == Early || distance == SetAlign;
                if aligned {
                    for structure in structures {
                        for nonlinearity in nonlinearities {
                            entries.push(GridEntry {
                                distance,
                                stage,
                                granularity,
                                structure: Some(structure),
                                nonlinearity: Some(nonlinearity),
                            });
                        }
                    }
                } else {
                    entries.push(GridEntry {
                        distance,
                        stage,
                        granularity,
                        structure: None,
                        nonlinearity: None,
                    });
                }
            }
        }
    }
    entries
}
