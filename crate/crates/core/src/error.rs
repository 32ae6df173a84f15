use thiserror::Error;

use crate::story::{Action, Verb};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("`{0}` needs a subject")]
    EmptySubject(Verb),
    #[error("`{0}` requires an object")]
    MissingObject(Verb),
    #[error("`{0}` does not take an object (got `{1}`)")]
    UnexpectedObject(Verb, String),
    #[error("cannot parse action `{0}`")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum StoryError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),
    #[error("unresolved references: {}", .0.join("; "))]
    UnresolvedReferences(Vec<String>),
    #[error("story declares no start location")]
    MissingStart,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for StoryError {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            return StoryError::Io(err.into());
        }
        StoryError::Parse {
            line: err.line(),
            column: err.column(),
            message: strip_position(&err.to_string()),
        }
    }
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(pos) => message[..pos].to_owned(),
        None => message.to_owned(),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("illegal action `{action}` at tick {tick}")]
    IllegalAction { action: Action, tick: u64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("likert answer {value} at position {index} is outside 1..=5")]
    OutOfRange { index: usize, value: i64 },
    #[error("expected {expected} answers, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("profile factor {factor} = {value} is outside [0, 1]")]
    FactorOutOfRange { factor: &'static str, value: f64 },
    #[error("game index must be at least 1")]
    ZeroGameIndex,
    #[error("invalid binary profile `{0}`; expected four 0/1 digits")]
    BadBits(String),
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("story `{story}` failed validation: {summary}")]
    InvalidStory { story: String, summary: String },
    #[error("informed simulations need a player profile")]
    MissingProfile,
    #[error("uninformed simulations must not carry a player profile")]
    UnexpectedProfile,
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Story(#[from] StoryError),
}

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("trace belongs to story `{found}`, expected `{expected}`")]
    StoryMismatch { expected: String, found: String },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("replay diverged at action {index}: {detail}")]
    ReplayDiverged { index: usize, detail: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Story(#[from] StoryError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
