//! Story worlds: data model, loading, validation and the game engine.

mod engine;
mod load;
mod model;
mod validate;

pub use engine::{
    apply_action, available_actions, initial_state, is_available, is_terminal, GameState,
    Transition,
};
pub use load::{build_story, load_story, load_story_file, load_story_str};
pub use model::*;
pub use validate::{validate_story, Problem, ValidationReport};
