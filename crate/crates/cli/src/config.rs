use std::path::PathBuf;

use hina_core::mdl::SearchOptions;
use hina_core::{FixDeg, HinSpec, NullModelSpec};
use serde::{Deserialize, Serialize};

/// Everything `hina run` needs to go from an interaction log to the full set
/// of artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    /// Single-byte field delimiter; detected from the header when absent.
    #[serde(default)]
    pub delimiter: Option<char>,
    pub hin: HinSpec,
    #[serde(default = "default_null_model")]
    pub null_model: NullModelSpec,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    /// Significance settings for the per-cluster projections.
    #[serde(default = "default_null_model")]
    pub projection: NullModelSpec,
    #[serde(default)]
    pub group_attr: Option<String>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub method: String,
    pub seed: Option<u64>,
    pub restarts: usize,
    pub max_n1: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let options = SearchOptions::default();
        Self {
            method: "greedy".into(),
            seed: options.seed,
            restarts: options.restarts,
            max_n1: options.max_n1,
        }
    }
}

impl ClusteringConfig {
    pub fn options(&self) -> SearchOptions {
        SearchOptions {
            seed: self.seed,
            restarts: self.restarts.max(1),
            max_n1: self.max_n1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub draws: u64,
    pub seed: u64,
}

fn default_null_model() -> NullModelSpec {
    NullModelSpec::new(FixDeg::None, 0.05)
}

fn default_out_dir() -> PathBuf {
    PathBuf::from(".")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let mut hin = HinSpec::new(["student"], ["code", "partner"]);
        hin.allow_self_pairs = true;
        let config = PipelineConfig {
            input: "log.csv".into(),
            delimiter: Some('\t'),
            hin,
            null_model: NullModelSpec::new(FixDeg::Set2, 0.01),
            clustering: ClusteringConfig {
                seed: Some(7),
                restarts: 4,
                ..ClusteringConfig::default()
            },
            projection: default_null_model(),
            group_attr: Some("class".into()),
            simulate: Some(SimulateConfig { draws: 100, seed: 3 }),
            out_dir: "out".into(),
        };
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let config: PipelineConfig = serde_json::from_str(
            r#"{"input":"a.csv","hin":{"set1_columns":["s"],"set2_columns":["p"]}}"#,
        )
        .unwrap();
        assert_eq!(config.null_model, default_null_model());
        assert_eq!(config.clustering.method, "greedy");
        assert_eq!(config.out_dir, PathBuf::from("."));
    }
}
