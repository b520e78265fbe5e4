use thiserror::Error;

use crate::scene::ObjectId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("could not decode scene: {0}")]
    Decode(String),
    #[error("scene failed validation: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("malformed skill call `{0}`")]
    MalformedCall(String),
    #[error("no JSON object found in reply")]
    NoJsonFound,
    #[error("reply does not match the plan schema at `{0}`")]
    SchemaMismatch(String),
    #[error("reply has no next_action")]
    MissingNextAction,
    #[error("unrecognized feedback message `{0}`")]
    BadFeedback(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unknown site `{0}`")]
    UnknownSite(String),
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("no path to the target")]
    Unreachable,
    #[error("robot is not facing a site")]
    NotFacingSite,
    #[error("object `{0}` is not visible")]
    ObjectNotVisible(String),
    #[error("perturbation rejected: {0}")]
    InvalidPerturbation(String),
    #[error("skill dispatched without passing preconditions: {0}")]
    PreconditionBypassed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("could not decode memory dump: {0}")]
    Decode(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend returned HTTP {0}")]
    BadStatus(u16),
    #[error("script exhausted")]
    ScriptExhausted,
    #[error("script mismatch: expected stimulus containing `{expected}`, got `{got}`")]
    ScriptMismatch { expected: String, got: String },
    #[error("object `{0}` is not visible")]
    ObjectNotVisible(String),
    #[error("could not parse backend reply: {0}")]
    ParseFail(String),
    #[error("task cannot be planned: {0}")]
    ImpossibleTask(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("metric is undefined for empty input")]
    EmptyInput,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("could not parse {path}: {message}")]
    Parse { path: String, message: String },
}

impl ConfigError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        ConfigError::Io { path: path.into(), source }
    }
}
