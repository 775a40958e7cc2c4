//! One serializable run configuration: dataset paths, propagation and
//! clustering knobs, evaluation settings, output directory. Every run echoes
//! its effective configuration into the output directory so results can be
//! reproduced from the artifacts alone.

use crate::clustering::ClusterConfig;
use crate::error::{Error, Result};
use crate::io::{self, Dataset};
use crate::propagation::PropagationConfig;
use std::fs;
use std::path::{Path, PathBuf};

/// Locations of the five dataset files. Relative paths resolve against the
/// process working directory; `rebase` points them all into one directory.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub graph: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: PathBuf,
    /// Optional batch stream; required only by the evolve pipeline.
    pub stream: Option<PathBuf>,
}

impl Default for DataPaths {
    fn default() -> Self {
        DataPaths {
            graph: "graph.edges".into(),
            features: "features.csv".into(),
            labels: "labels.txt".into(),
            splits: "splits.json".into(),
            stream: None,
        }
    }
}

impl DataPaths {
    /// Standard file names inside one dataset directory, stream included.
    pub fn in_dir(dir: &Path) -> Self {
        DataPaths {
            graph: dir.join("graph.edges"),
            features: dir.join("features.csv"),
            labels: dir.join("labels.txt"),
            splits: dir.join("splits.json"),
            stream: Some(dir.join("stream.json")),
        }
    }
}

/// Downstream-evaluation knobs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Ridge term for the closed-form linear fit; purely for numerical
    /// stability.
    pub epsilon: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { epsilon: 1e-6 }
    }
}

/// The complete, echoable configuration of one run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    pub propagation: PropagationConfig,
    pub clustering: ClusterConfig,
    pub eval: EvalConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataPaths::default(),
            propagation: PropagationConfig::default(),
            clustering: ClusterConfig::default(),
            eval: EvalConfig::default(),
            out_dir: "out".into(),
        }
    }
}

pub const CONFIG_ECHO_NAME: &str = "run_config.json";

impl RunConfig {
    /// Parses a JSON config file. Missing fields take defaults; unknown keys
    /// are rejected so typos cannot silently change a run.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    /// Validates the nested knob groups; returns advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let warnings = self.propagation.validate()?;
        self.clustering.validate()?;
        if !(self.eval.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "eval.epsilon must be non-negative, got {}",
                self.eval.epsilon
            )));
        }
        Ok(warnings)
    }

    /// Writes the effective configuration into `dir` as `run_config.json`.
    /// Parsing the echo reproduces this config exactly.
    pub fn echo(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(CONFIG_ECHO_NAME);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Internal(format!("serializing config: {e}")))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Loads the dataset this config points at.
    pub fn load_dataset(&self) -> Result<Dataset> {
        io::load_dataset(
            &self.data.graph,
            &self.data.features,
            &self.data.labels,
            &self.data.splits,
            self.data.stream.as_deref(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{ClusterMode, SeedLaw};
    use tempfile::tempdir;

    fn nontrivial() -> RunConfig {
        RunConfig {
            data: DataPaths {
                graph: "d/graph.edges".into(),
                features: "d/features.csv".into(),
                labels: "d/labels.txt".into(),
                splits: "d/splits.json".into(),
                stream: Some("d/stream.json".into()),
            },
            propagation: PropagationConfig {
                max_depth: 3,
                alphas: vec![0.1, 0.2, 0.3, 0.4],
            },
            clustering: ClusterConfig {
                reduction_rate: 0.05,
                mode: ClusterMode::Fuzzy,
                fuzziness: 2.0,
                repeats: 7,
                max_iter: 123,
                tol: 1e-7,
                seed: 99,
                balance_weight: 0.5,
                seed_law: SeedLaw::Classic,
            },
            eval: EvalConfig { epsilon: 1e-4 },
            out_dir: "results".into(),
        }
    }

    #[test]
    fn echo_round_trips_exactly() {
        let dir = tempdir().unwrap();
        let cfg = nontrivial();
        cfg.echo(dir.path()).unwrap();
        let back = RunConfig::from_file(&dir.path().join(CONFIG_ECHO_NAME)).unwrap();
        assert_eq!(back, cfg);
        // Echoing the parsed config reproduces the file byte-for-byte.
        let first = fs::read(dir.path().join(CONFIG_ECHO_NAME)).unwrap();
        let dir2 = tempdir().unwrap();
        back.echo(dir2.path()).unwrap();
        let second = fs::read(dir2.path().join(CONFIG_ECHO_NAME)).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn partial_config_takes_defaults() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("partial.json");
        fs::write(&p, r#"{"clustering": {"reduction_rate": 0.1}}"#).unwrap();
        let cfg = RunConfig::from_file(&p).unwrap();
        assert_eq!(cfg.clustering.reduction_rate, 0.1);
        assert_eq!(cfg.clustering.repeats, ClusterConfig::default().repeats);
        assert_eq!(cfg.data.graph, PathBuf::from("graph.edges"));
        assert_eq!(cfg.eval.epsilon, 1e-6);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("typo.json");
        fs::write(&p, r#"{"clustering": {"reduction_rte": 0.1}}"#).unwrap();
        let err = RunConfig::from_file(&p).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(err.to_string().contains("reduction_rte"), "{err}");
    }

    #[test]
    fn invalid_nested_knobs_fail_validation() {
        let mut cfg = nontrivial();
        cfg.clustering.reduction_rate = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = nontrivial();
        cfg.propagation.alphas = vec![0.5];
        assert!(cfg.validate().is_err(), "alpha count must be depth+1");
        let mut cfg = nontrivial();
        cfg.eval.epsilon = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dataset_dir_layout_uses_standard_names() {
        let paths = DataPaths::in_dir(Path::new("ds"));
        assert_eq!(paths.graph, PathBuf::from("ds/graph.edges"));
        assert_eq!(paths.stream, Some(PathBuf::from("ds/stream.json")));
    }
}
