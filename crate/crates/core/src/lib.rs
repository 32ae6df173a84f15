//! Story engine, player profiles and belief-desire-intention player agents
//! for interactive narratives, plus batch simulation and evaluation.

pub mod agent;
pub mod error;
pub mod evaluation;
pub mod profile;
pub mod simulation;
pub mod story;
pub mod trace;

pub use error::{
    ActionError, EngineError, EvaluationError, ProfileError, SimulationError, StoryError,
    TraceError,
};
