//! Scenario documents: a network (inline or by path), failure inputs,
//! goal and construction options.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragility::{FailureProfile, FragilityDocument, FragilityError};
use crate::mdp::Goal;
use crate::network::{load_network, Network, NetworkDocument, NetworkError};
use crate::planner::{PlannerError, Session, SessionOptions};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("fragility: {0}")]
    Fragility(#[from] FragilityError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

impl ScenarioError {
    /// Dotted path of the scenario field the error is about.
    pub fn field(&self) -> &'static str {
        match self {
            ScenarioError::Parse(_) => "",
            ScenarioError::Io { .. } | ScenarioError::Network(_) => "network",
            ScenarioError::Fragility(_) => "fragility",
            ScenarioError::Planner(PlannerError::Network(NetworkError::UnknownBus(_))) => "goal",
            ScenarioError::Planner(_) => "options",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    Inline(NetworkDocument),
    /// Path to a network document, relative to the scenario file.
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub network: NetworkSource,
    #[serde(default)]
    pub fragility: FragilityDocument,
    #[serde(default)]
    pub goal: Goal,
    #[serde(default)]
    pub options: SessionOptions,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub network: Arc<Network>,
    pub profile: FailureProfile,
    pub goal: Goal,
    pub options: SessionOptions,
}

impl ScenarioDocument {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    /// Loads the network and computes the failure profile. Relative
    /// network paths are resolved against `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Scenario, ScenarioError> {
        let network = match &self.network {
            NetworkSource::Inline(doc) => Network::from_document(doc.clone())?,
            NetworkSource::Path(rel) => {
                let path = match base_dir {
                    Some(dir) if rel.is_relative() => dir.join(rel),
                    _ => rel.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|source| ScenarioError::Io { path, source })?;
                load_network(&text)?
            }
        };
        let profile = self.fragility.resolve(network.branch_count())?;
        Ok(Scenario {
            network: Arc::new(network),
            profile,
            goal: self.goal.clone(),
            options: self.options.clone(),
        })
    }
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ScenarioDocument::parse(&text)?.resolve(path.parent())
    }

    pub fn start_session(&self) -> Result<Session, ScenarioError> {
        Ok(Session::start(
            self.network.clone(),
            self.profile.clone(),
            self.options.clone(),
            self.goal.clone(),
        )?)
    }
}
