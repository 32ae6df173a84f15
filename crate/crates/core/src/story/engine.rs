//! Pure state transitions over a [`StoryDefinition`].

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use super::model::*;
use crate::error::{EngineError, StoryError};

/// Session-local game state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub current_location: String,
    pub inventory: BTreeSet<String>,
    /// Items lying somewhere in the world, keyed by item id.
    pub placed: BTreeMap<String, String>,
    /// Plot points in the order they were triggered.
    pub discovered: IndexSet<String>,
    pub visited: BTreeSet<String>,
    pub flags: BTreeMap<String, bool>,
    pub tick: u64,
}

impl GameState {
    pub fn has(&self, item: &str) -> bool {
        self.inventory.contains(item)
    }

    pub fn is_discovered(&self, plot_point: &str) -> bool {
        self.discovered.contains(plot_point)
    }

    pub fn flag(&self, name: &str) -> bool {
        self.flags.get(name).copied().unwrap_or(false)
    }

    /// Items lying at the player's location, in id order.
    pub fn items_here(&self) -> impl Iterator<Item = &str> {
        self.placed
            .iter()
            .filter(|(_, at)| **at == self.current_location)
            .map(|(item, _)| item.as_str())
    }

    pub fn is_visible(&self, item: &str) -> bool {
        self.inventory.contains(item)
            || self.placed.get(item).is_some_and(|at| *at == self.current_location)
    }

    pub fn holds(&self, condition: &Condition) -> bool {
        match condition {
            Condition::At(loc) => self.current_location == *loc,
            Condition::Has(item) => self.has(item),
            Condition::Lacks(item) => !self.has(item),
            Condition::Flag(f) => self.flag(f),
            Condition::NotFlag(f) => !self.flag(f),
            Condition::Discovered(p) => self.is_discovered(p),
            Condition::Undiscovered(p) => !self.is_discovered(p),
            Condition::Visited(loc) => self.visited.contains(loc),
        }
    }

    fn apply_effect(&mut self, effect: &Effect) {
        match effect {
            Effect::Place { item, at } => {
                self.inventory.remove(item);
                self.placed.insert(item.clone(), at.clone());
            }
            Effect::Give(item) => {
                self.placed.remove(item);
                self.inventory.insert(item.clone());
            }
            Effect::Remove(item) => {
                self.placed.remove(item);
                self.inventory.remove(item);
            }
            Effect::SetFlag(f) => {
                self.flags.insert(f.clone(), true);
            }
            Effect::ClearFlag(f) => {
                self.flags.insert(f.clone(), false);
            }
            Effect::Move(loc) => {
                self.current_location = loc.clone();
                self.visited.insert(loc.clone());
            }
        }
    }
}

/// Result of applying one action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub state: GameState,
    pub triggered: Vec<String>,
}

pub fn initial_state(def: &StoryDefinition) -> Result<GameState, StoryError> {
    let start = def.world.start.clone().ok_or(StoryError::MissingStart)?;
    let mut inventory = BTreeSet::new();
    let mut placed = BTreeMap::new();
    for item in &def.world.items {
        if item.holder.as_deref() == Some("player") {
            inventory.insert(item.id.clone());
        } else if let (Some(at), None) = (&item.location, &item.holder) {
            placed.insert(item.id.clone(), at.clone());
        }
    }
    Ok(GameState {
        visited: BTreeSet::from([start.clone()]),
        current_location: start,
        inventory,
        placed,
        discovered: IndexSet::new(),
        flags: BTreeMap::new(),
        tick: 0,
    })
}

/// The first ending in discovery order, if any.
pub fn is_terminal<'a>(def: &StoryDefinition, state: &'a GameState) -> Option<&'a str> {
    state
        .discovered
        .iter()
        .find(|p| def.plot.is_ending(p))
        .map(String::as_str)
}

fn character_here(def: &StoryDefinition, state: &GameState, id: &str) -> bool {
    def.world
        .character(id)
        .is_some_and(|c| c.location == state.current_location)
}

/// Whether the entities an action names are within the player's reach.
fn accessible(def: &StoryDefinition, state: &GameState, action: &Action) -> bool {
    let subject = action.subject.as_str();
    let object = action.object.as_deref();
    let item_here = |id: &str| state.placed.get(id) == Some(&state.current_location);
    match action.verb {
        Verb::Goto => def
            .world
            .location(&state.current_location)
            .is_some_and(|l| l.exits.iter().any(|e| e == subject)),
        Verb::Take | Verb::Buy => item_here(subject),
        Verb::Give | Verb::Show => {
            state.has(subject) && object.is_some_and(|o| character_here(def, state, o))
        }
        Verb::Talk | Verb::Ask => character_here(def, state, subject),
        Verb::Examine => state.is_visible(subject) || character_here(def, state, subject),
        Verb::Open | Verb::Read => state.is_visible(subject),
        Verb::Use => {
            state.is_visible(subject)
                && object.is_none_or(|o| state.is_visible(o) || character_here(def, state, o))
        }
    }
}

fn rule_enabled(def: &StoryDefinition, state: &GameState, rule: &ActionRule) -> bool {
    rule.requires.iter().all(|c| state.holds(c)) && accessible(def, state, &rule.action())
}

/// Every legal action, sorted by verb, subject, object. Empty once an
/// ending has been reached.
pub fn available_actions(def: &StoryDefinition, state: &GameState) -> Vec<Action> {
    if is_terminal(def, state).is_some() {
        return Vec::new();
    }
    let mut actions = BTreeSet::new();
    if let Some(here) = def.world.location(&state.current_location) {
        for exit in &here.exits {
            actions.insert(Action::goto(exit));
        }
    }
    for item in state.items_here() {
        actions.insert(Action::simple(Verb::Examine, item));
        if def.world.item(item).is_some_and(|i| i.takeable) {
            actions.insert(Action::simple(Verb::Take, item));
        }
    }
    for item in &state.inventory {
        actions.insert(Action::simple(Verb::Examine, item));
    }
    for ch in def.world.characters_at(&state.current_location) {
        actions.insert(Action::simple(Verb::Examine, &ch.id));
        actions.insert(Action::simple(Verb::Talk, &ch.id));
    }
    for rule in &def.world.action_rules {
        if rule_enabled(def, state, rule) {
            actions.insert(rule.action());
        }
    }
    actions.into_iter().collect()
}

pub fn is_available(def: &StoryDefinition, state: &GameState, action: &Action) -> bool {
    if is_terminal(def, state).is_some() || !accessible(def, state, action) {
        return false;
    }
    let generic = match action.verb {
        Verb::Goto | Verb::Examine | Verb::Talk => true,
        Verb::Take => def.world.item(&action.subject).is_some_and(|i| i.takeable),
        _ => false,
    };
    generic
        || def
            .world
            .rules_for(action)
            .any(|r| r.requires.iter().all(|c| state.holds(c)))
}

/// Applies `action`, firing every matching rule whose requirements held
/// before the action. A triggered plot point is recorded only when all of
/// its predecessors are already discovered.
pub fn apply_action(
    def: &StoryDefinition,
    state: &GameState,
    action: &Action,
) -> Result<Transition, EngineError> {
    if !is_available(def, state, action) {
        return Err(EngineError::IllegalAction {
            action: action.clone(),
            tick: state.tick,
        });
    }
    let mut next = state.clone();
    match action.verb {
        Verb::Goto => {
            next.current_location = action.subject.clone();
            next.visited.insert(action.subject.clone());
        }
        Verb::Take => {
            next.placed.remove(&action.subject);
            next.inventory.insert(action.subject.clone());
        }
        _ => {}
    }
    let fired: Vec<&ActionRule> = def
        .world
        .rules_for(action)
        .filter(|r| r.requires.iter().all(|c| state.holds(c)))
        .collect();
    for rule in &fired {
        for effect in &rule.effects {
            next.apply_effect(effect);
        }
    }
    let mut triggered = Vec::new();
    for id in fired.iter().flat_map(|r| r.triggers.iter()) {
        if next.discovered.contains(id) {
            continue;
        }
        let ready = def
            .plot
            .get(id)
            .is_some_and(|p| p.predecessors.iter().all(|q| next.discovered.contains(q)));
        if ready {
            next.discovered.insert(id.clone());
            triggered.push(id.clone());
        }
    }
    next.tick += 1;
    Ok(Transition {
        state: next,
        triggered,
    })
}
