use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Limit, PpfError, PpfProblem};
use crate::casedata::{parse_case, NetworkCase};
use crate::powerflow::ResponseId;
use crate::randinputs::UncertaintyConfig;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Ppf(#[from] PpfError),
}

/// Random inputs, responses and limits of a study, with an optional case
/// path relative to the study file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Study {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<PathBuf>,
    #[serde(default)]
    pub responses: Vec<ResponseId>,
    #[serde(default)]
    pub limits: Vec<Limit>,
    #[serde(default)]
    pub quantiles: Vec<f64>,
    #[serde(flatten)]
    pub inputs: UncertaintyConfig,
}

impl Study {
    /// JSON when the text starts with `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self, String> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    pub fn load(path: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path).map_err(|source| StudyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut study = Study::parse(&text).map_err(|message| StudyError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        if let (Some(case), Some(dir)) = (&study.case, path.parent()) {
            if case.is_relative() {
                study.case = Some(dir.join(case));
            }
        }
        Ok(study)
    }

    /// Read and parse the case named by the study.
    pub fn load_case(&self) -> Result<NetworkCase, StudyError> {
        let path = self.case.clone().ok_or_else(|| StudyError::Parse {
            path: PathBuf::new(),
            message: "study names no case".into(),
        })?;
        let text = std::fs::read_to_string(&path).map_err(|source| StudyError::Io {
            path: path.clone(),
            source,
        })?;
        parse_case(&text).map_err(|e| StudyError::Ppf(e.into()))
    }

    /// Resolve inputs against `case`.
    pub fn problem(&self, case: NetworkCase) -> Result<PpfProblem, PpfError> {
        let spec = self.inputs.resolve(&case)?;
        Ok(PpfProblem {
            case,
            spec,
            responses: self.responses.clone(),
            limits: self.limits.clone(),
        })
    }
}
