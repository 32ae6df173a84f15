use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::profile::PlayerProfile;
use crate::story::{Action, GameState, StoryDefinition, Verb};
use crate::trace::Trace;

/// Something new the agent noticed during the last perception.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Percept {
    Entered(String),
    Saw(String),
    Gained(String),
    Lost(String),
    Discovered(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItemBelief {
    At(String),
    Carried,
}

/// What the agent believes about the game world.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeliefSet {
    pub location: String,
    pub known_locations: BTreeSet<String>,
    pub visited: BTreeSet<String>,
    pub known_exits: BTreeMap<String, BTreeSet<String>>,
    pub known_items: BTreeMap<String, ItemBelief>,
    pub known_characters: BTreeMap<String, String>,
    /// Every item and character ever seen.
    pub seen: BTreeSet<String>,
    /// Non-movement actions last observed at each location.
    pub affordances: BTreeMap<String, BTreeSet<Action>>,
    pub available_now: BTreeSet<Action>,
    pub tried: BTreeSet<Action>,
    pub discovered: Vec<String>,
    pub profile: Option<PlayerProfile>,
    pub previous_trace: Option<Trace>,
    pub pending_percepts: VecDeque<Percept>,
}

impl BeliefSet {
    pub fn new(start: &str, profile: Option<PlayerProfile>) -> Self {
        Self {
            location: start.to_owned(),
            known_locations: BTreeSet::from([start.to_owned()]),
            profile,
            ..Self::default()
        }
    }

    pub fn carries(&self, item: &str) -> bool {
        matches!(self.known_items.get(item), Some(ItemBelief::Carried))
    }

    pub fn is_discovered(&self, plot_point: &str) -> bool {
        self.discovered.iter().any(|p| p == plot_point)
    }

    /// Where the agent believes an entity is. `Some(None)` means "carried",
    /// which needs no travel.
    pub fn whereabouts(&self, entity: &str) -> Option<Option<&str>> {
        if let Some(loc) = self.known_characters.get(entity) {
            return Some(Some(loc));
        }
        match self.known_items.get(entity)? {
            ItemBelief::At(loc) => Some(Some(loc)),
            ItemBelief::Carried => Some(None),
        }
    }

    /// Updates beliefs from the engine's observable state. Calling it twice
    /// on the same state leaves the beliefs unchanged.
    pub fn perceive(&mut self, def: &StoryDefinition, state: &GameState, actions: &[Action]) {
        let here = state.current_location.clone();
        self.location = here.clone();
        self.known_locations.insert(here.clone());
        if self.visited.insert(here.clone()) {
            self.pending_percepts.push_back(Percept::Entered(here.clone()));
        }

        let exits: BTreeSet<String> = actions
            .iter()
            .filter(|a| a.verb == Verb::Goto)
            .map(|a| a.subject.clone())
            .collect();
        self.known_locations.extend(exits.iter().cloned());
        self.known_exits.insert(here.clone(), exits);

        let items_here: BTreeSet<&str> = state.items_here().collect();
        self.known_items
            .retain(|id, b| !matches!(b, ItemBelief::At(loc) if *loc == here && !items_here.contains(id.as_str())));
        for item in &items_here {
            self.notice(item);
            self.known_items
                .insert((*item).to_owned(), ItemBelief::At(here.clone()));
        }

        let lost: Vec<String> = self
            .known_items
            .iter()
            .filter(|(id, b)| **b == ItemBelief::Carried && !state.inventory.contains(*id))
            .map(|(id, _)| id.clone())
            .collect();
        for id in lost {
            self.known_items.remove(&id);
            self.pending_percepts.push_back(Percept::Lost(id));
        }
        for item in &state.inventory {
            self.notice(item);
            if !self.carries(item) {
                self.known_items.insert(item.clone(), ItemBelief::Carried);
                self.pending_percepts.push_back(Percept::Gained(item.clone()));
            }
        }

        for ch in def.world.characters_at(&here) {
            self.notice(&ch.id);
            self.known_characters.insert(ch.id.clone(), here.clone());
        }

        self.affordances.insert(
            here,
            actions
                .iter()
                .filter(|a| a.verb != Verb::Goto)
                .cloned()
                .collect(),
        );
        self.available_now = actions.iter().cloned().collect();

        for pp in state.discovered.iter().skip(self.discovered.len()) {
            self.pending_percepts
                .push_back(Percept::Discovered(pp.clone()));
        }
        if self.discovered.len() != state.discovered.len() {
            self.discovered = state.discovered.iter().cloned().collect();
        }
    }

    fn notice(&mut self, entity: &str) {
        if self.seen.insert(entity.to_owned()) {
            self.pending_percepts
                .push_back(Percept::Saw(entity.to_owned()));
        }
    }
}
