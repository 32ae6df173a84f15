//! Play-through records shared by human sessions and simulated agents.
//!
//! Trace files hold one JSON object per line. Human and simulated traces use
//! exactly the same fields so evaluation can treat them alike.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ActionError, TraceError};
use crate::profile::PlayerProfile;
use crate::story::{apply_action, initial_state, is_terminal, Action, GameState, StoryDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Human,
    Uninformed,
    Informed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub tick: u64,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub session_id: String,
    pub story_id: String,
    pub agent_kind: AgentKind,
    pub seed: Option<u64>,
    pub profile_used: Option<PlayerProfile>,
    pub actions: Vec<TraceStep>,
    pub plot_points: Vec<String>,
    pub ending: Option<String>,
}

impl Trace {
    pub fn plot_point_set(&self) -> BTreeSet<&str> {
        self.plot_points.iter().map(String::as_str).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.ending.is_some()
    }

    pub fn action_list(&self) -> impl Iterator<Item = &Action> {
        self.actions.iter().map(|s| &s.action)
    }

    /// Plot points and ending of a finished game state.
    pub fn outcome(def: &StoryDefinition, state: &GameState) -> (Vec<String>, Option<String>) {
        (
            state.discovered.iter().cloned().collect(),
            is_terminal(def, state).map(str::to_owned),
        )
    }
}

pub fn write_trace<W: Write>(mut out: W, trace: &Trace) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, trace)?;
    out.write_all(b"\n")
}

pub fn write_traces<'a, W: Write>(
    mut out: W,
    traces: impl IntoIterator<Item = &'a Trace>,
) -> std::io::Result<()> {
    for t in traces {
        write_trace(&mut out, t)?;
    }
    out.flush()
}

/// Reads a line-delimited trace file, skipping blank lines.
pub fn read_traces<R: BufRead>(input: R) -> Result<Vec<Trace>, TraceError> {
    let mut traces = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let trace = serde_json::from_str(&line).map_err(|source| TraceError::Parse {
            line: i + 1,
            source,
        })?;
        traces.push(trace);
    }
    Ok(traces)
}

/// A scripted player: a fixed list of actions written as
/// `verb subject [object]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerScript {
    pub name: String,
    #[serde(default)]
    pub story: Option<String>,
    #[serde(default)]
    pub description: String,
    pub actions: Vec<String>,
}

impl PlayerScript {
    pub fn parse_actions(&self) -> Result<Vec<Action>, ActionError> {
        self.actions.iter().map(|a| a.parse()).collect()
    }

    /// Plays the script and returns its trace, with the script name as the
    /// session id.
    pub fn play(&self, def: &StoryDefinition) -> Result<Trace, TraceError> {
        play_script(def, &self.name, &self.parse_actions()?)
    }
}

pub fn load_script(path: impl AsRef<std::path::Path>) -> Result<PlayerScript, TraceError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| TraceError::Parse { line: 1, source })
}

/// Plays `actions` from the initial state and records the result as a
/// human trace.
pub fn play_script(
    def: &StoryDefinition,
    session_id: &str,
    actions: &[Action],
) -> Result<Trace, TraceError> {
    let mut state = initial_state(def)?;
    let mut steps = Vec::with_capacity(actions.len());
    for action in actions {
        steps.push(TraceStep {
            tick: state.tick,
            action: action.clone(),
        });
        state = apply_action(def, &state, action)?.state;
    }
    let (plot_points, ending) = Trace::outcome(def, &state);
    Ok(Trace {
        session_id: session_id.to_owned(),
        story_id: def.id.clone(),
        agent_kind: AgentKind::Human,
        seed: None,
        profile_used: None,
        actions: steps,
        plot_points,
        ending,
    })
}

/// Re-applies a stored trace and checks that it reproduces the stored plot
/// points and ending exactly.
pub fn replay_trace(def: &StoryDefinition, trace: &Trace) -> Result<GameState, TraceError> {
    let mut state = initial_state(def)?;
    for (index, step) in trace.actions.iter().enumerate() {
        if step.tick != state.tick {
            return Err(TraceError::ReplayDiverged {
                index,
                detail: format!("stored tick {} but engine is at {}", step.tick, state.tick),
            });
        }
        state = apply_action(def, &state, &step.action)
            .map_err(|e| TraceError::ReplayDiverged {
                index,
                detail: e.to_string(),
            })?
            .state;
    }
    let (plot_points, ending) = Trace::outcome(def, &state);
    if plot_points != trace.plot_points {
        return Err(TraceError::ReplayDiverged {
            index: trace.actions.len(),
            detail: format!(
                "plot points {:?} differ from stored {:?}",
                plot_points, trace.plot_points
            ),
        });
    }
    if ending != trace.ending {
        return Err(TraceError::ReplayDiverged {
            index: trace.actions.len(),
            detail: format!("ending {ending:?} differs from stored {:?}", trace.ending),
        });
    }
    Ok(state)
}
