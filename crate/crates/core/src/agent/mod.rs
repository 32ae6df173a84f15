//! Belief-desire-intention player agent.
//!
//! Each tick the agent perceives the game state, adopts goals from belief
//! patterns, picks one goal and one plan as its intention, emits a single
//! action and finally enforces its persistence budget.
//!
//! Random choices all come from one ChaCha8 generator seeded from the
//! config. Draws happen only when there is a real tie, in this order within
//! a tick: plan tie among equally specific plans, target tie inside the plan
//! body, action tie inside the plan body, fallback exploration.

mod beliefs;
mod goals;
mod plans;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use beliefs::{BeliefSet, ItemBelief, Percept};
pub use goals::{Goal, GoalKind, GoalStatus};
pub use plans::{applicable, plans_for, Body, Context, Plan, PLAN_LIBRARY};

use crate::error::{SimulationError, StoryError};
use crate::profile::{BinaryProfile, Factor, PlayerProfile};
use crate::story::{
    apply_action, available_actions, initial_state, is_terminal, Action, GameState,
    StoryDefinition, Verb,
};
use crate::trace::{AgentKind, Trace, TraceStep};

pub const DEFAULT_MAX_TICKS: u64 = 300;
/// Priority added to exploration goals once a low-persistence agent has
/// given up on something.
pub const EXPLORATION_BOOST: i32 = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub seed: u64,
    pub max_ticks: u64,
    pub persistence_budget: u64,
}

impl AgentConfig {
    pub fn new(seed: u64) -> Self {
        Self::with_max_ticks(seed, DEFAULT_MAX_TICKS)
    }

    /// Budget defaults to one fifth of the tick limit, rounded up.
    pub fn with_max_ticks(seed: u64, max_ticks: u64) -> Self {
        Self {
            seed,
            max_ticks,
            persistence_budget: max_ticks.div_ceil(5),
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.max_ticks == 0 {
            return Err(SimulationError::Config("max_ticks must be positive".into()));
        }
        if self.persistence_budget == 0 || self.persistence_budget > self.max_ticks {
            return Err(SimulationError::Config(format!(
                "persistence_budget must be in 1..={}, got {}",
                self.max_ticks, self.persistence_budget
            )));
        }
        Ok(())
    }
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self::new(0)
    }
}

/// The goal and plan chosen for this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Intention {
    pub goal: usize,
    pub plan: &'static Plan,
}

/// Why a plan body could not produce an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanFailure {
    /// Nothing left to do for this goal.
    Exhausted,
    /// The goal's action is not available where it should be.
    Blocked,
    /// The agent decided the goal needs no action.
    Declined,
    /// No known route or target.
    Lost,
}

/// One line of the optional agent log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentEvent {
    pub tick: u64,
    pub goal: Option<String>,
    pub plan: Option<String>,
    pub action: Action,
    pub drops: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRun {
    pub trace: Trace,
    pub events: Vec<AgentEvent>,
    pub dropped_goals: usize,
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub beliefs: BeliefSet,
    pub goals: Vec<Goal>,
    pub config: AgentConfig,
    binary: Option<BinaryProfile>,
    rng: ChaCha8Rng,
    epoch: u64,
    tick: u64,
    next_seq: u64,
    boosted: bool,
    /// Items the agent chose not to pick up.
    declined: BTreeSet<String>,
    familiar: bool,
    previous_actions: BTreeSet<Action>,
    /// Final action of the previous play-through, put off until nothing else
    /// is left.
    deferred: Option<Action>,
}

pub fn init_agent(
    def: &StoryDefinition,
    profile: Option<PlayerProfile>,
    config: AgentConfig,
) -> AgentState {
    let start = def.world.start.clone().unwrap_or_default();
    let binary = profile.as_ref().map(PlayerProfile::binarize);
    let mut agent = AgentState {
        beliefs: BeliefSet::new(&start, profile),
        goals: Vec::new(),
        config,
        binary,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        epoch: 0,
        tick: 0,
        next_seq: 0,
        boosted: false,
        declined: BTreeSet::new(),
        familiar: false,
        previous_actions: BTreeSet::new(),
        deferred: None,
    };
    agent.adopt(GoalKind::ExploreRoom, &start);
    agent
}

impl AgentState {
    pub fn kind(&self) -> AgentKind {
        if self.binary.is_some() {
            AgentKind::Informed
        } else {
            AgentKind::Uninformed
        }
    }

    pub fn binary_profile(&self) -> Option<&BinaryProfile> {
        self.binary.as_ref()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Supplies the trace of an earlier play-through. Only a high
    /// familiarity score makes the agent act on it.
    pub fn with_previous_trace(mut self, trace: Trace) -> Self {
        self.familiar = self
            .binary
            .is_some_and(|b| b.is_high(Factor::Familiarity));
        if self.familiar {
            self.previous_actions = trace.action_list().cloned().collect();
            if trace.ending.is_some() {
                self.deferred = trace.actions.last().map(|s| s.action.clone());
            }
        }
        self.beliefs.previous_trace = Some(trace);
        self
    }

    pub fn active_goals(&self) -> impl Iterator<Item = &Goal> {
        self.goals.iter().filter(|g| g.is_active())
    }

    pub fn goal(&self, id: &str) -> Option<&Goal> {
        self.goals.iter().rev().find(|g| g.id == id)
    }

    pub fn perceive(&mut self, def: &StoryDefinition, state: &GameState, actions: &[Action]) {
        self.tick = state.tick;
        self.beliefs.perceive(def, state, actions);
    }

    fn priority_of(&self, kind: GoalKind) -> i32 {
        let base = kind.base_priority();
        if self.boosted && kind.is_exploration() {
            base + EXPLORATION_BOOST
        } else {
            base
        }
    }

    fn adopt(&mut self, kind: GoalKind, target: &str) -> Goal {
        let goal = Goal::new(kind, target, self.priority_of(kind), self.tick, self.next_seq);
        self.next_seq += 1;
        self.goals.push(goal.clone());
        goal
    }

    /// Whether a goal with this id may be adopted now.
    fn may_adopt(&self, id: &str) -> bool {
        match self.goal(id) {
            None => true,
            Some(g) => match g.status {
                GoalStatus::Active => false,
                GoalStatus::Achieved => g.kind != GoalKind::InSpecific,
                GoalStatus::Dropped => g.dropped_epoch.is_some_and(|e| e < self.epoch),
            },
        }
    }

    fn plan_body(&self, kind: GoalKind) -> Body {
        applicable(kind, self.binary.as_ref(), false)[0].body
    }

    /// Untried non-character actions at a location for the given style.
    fn room_todo(&self, def: &StoryDefinition, loc: &str, body: Body) -> Vec<Action> {
        let Some(affs) = self.beliefs.affordances.get(loc) else {
            return Vec::new();
        };
        affs.iter()
            .filter(|a| !matches!(a.verb, Verb::Goto | Verb::Take))
            .filter(|a| !a.entities().any(|e| def.world.character(e).is_some()))
            .filter(|a| !self.beliefs.tried.contains(*a))
            .filter(|a| self.deferred.as_ref() != Some(*a))
            .filter(|a| body != Body::ExploreImportant || def.world.is_important(&a.subject))
            .cloned()
            .collect()
    }

    fn npc_todo(&self, character: &str, body: Body) -> Vec<Action> {
        let Some(loc) = self.beliefs.known_characters.get(character) else {
            return Vec::new();
        };
        let Some(affs) = self.beliefs.affordances.get(loc) else {
            return Vec::new();
        };
        affs.iter()
            .filter(|a| a.mentions(character))
            .filter(|a| body != Body::NpcTalkOnly || a.verb == Verb::Talk)
            .filter(|a| !self.beliefs.tried.contains(*a))
            .filter(|a| self.deferred.as_ref() != Some(*a))
            .cloned()
            .collect()
    }

    fn wants(&self, def: &StoryDefinition, item: &str, body: Body) -> bool {
        body != Body::TakeImportant || def.world.is_important(item)
    }

    fn take_todo(&self, def: &StoryDefinition, loc: &str) -> Vec<Action> {
        let body = self.plan_body(GoalKind::DecideObject);
        self.beliefs
            .affordances
            .get(loc)
            .into_iter()
            .flatten()
            .filter(|a| a.verb == Verb::Take && self.wants(def, &a.subject, body))
            .filter(|a| !self.declined.contains(&a.subject))
            .cloned()
            .collect()
    }

    /// Everything the agent's exploration style would still do here.
    fn local_todo(&self, def: &StoryDefinition, loc: &str) -> Vec<Action> {
        let mut todo = self.room_todo(def, loc, self.plan_body(GoalKind::ExploreRoom));
        let npc_body = self.plan_body(GoalKind::InteractNpc);
        for ch in def.world.characters_at(loc) {
            if self.beliefs.known_characters.get(&ch.id).map(String::as_str) == Some(loc) {
                todo.extend(self.npc_todo(&ch.id, npc_body));
            }
        }
        todo.extend(self.take_todo(def, loc));
        todo.sort();
        todo.dedup();
        todo
    }

    fn story_goal_done(&self, def: &StoryDefinition, id: &str) -> bool {
        let Some(sg) = def.goals.iter().find(|g| g.id == id) else {
            return true;
        };
        match &sg.achieved_when {
            Some(pp) => self.beliefs.is_discovered(pp),
            None => self.beliefs.tried.contains(&sg.action),
        }
    }

    fn is_achieved(&self, def: &StoryDefinition, goal: &Goal) -> bool {
        let b = &self.beliefs;
        match goal.kind {
            GoalKind::ExploreRoom => self
                .room_todo(def, &goal.target, self.plan_body(GoalKind::ExploreRoom))
                .is_empty(),
            GoalKind::Navigate => b.visited.contains(&goal.target),
            GoalKind::InteractNpc => self
                .npc_todo(&goal.target, self.plan_body(GoalKind::InteractNpc))
                .is_empty(),
            GoalKind::DecideObject => {
                b.carries(&goal.target)
                    || self.declined.contains(&goal.target)
                    || !matches!(b.known_items.get(&goal.target), Some(ItemBelief::At(_)))
            }
            GoalKind::InSpecific => self.story_goal_done(def, &goal.target),
        }
    }

    /// Adopts goals for every belief pattern that has none yet, and marks
    /// finished goals achieved.
    pub fn trigger_goals(&mut self, def: &StoryDefinition) -> Vec<Goal> {
        let mut changed = false;
        while let Some(p) = self.beliefs.pending_percepts.pop_front() {
            changed |= matches!(p, Percept::Gained(_) | Percept::Lost(_) | Percept::Discovered(_));
        }
        if changed {
            self.epoch += 1;
        }

        let finished: Vec<usize> = (0..self.goals.len())
            .filter(|&i| self.goals[i].is_active() && self.is_achieved(def, &self.goals[i]))
            .collect();
        for i in finished {
            self.goals[i].status = GoalStatus::Achieved;
        }

        let mut wanted: Vec<(GoalKind, String)> = Vec::new();
        let here = self.beliefs.location.clone();
        wanted.push((GoalKind::ExploreRoom, here.clone()));
        for loc in &self.beliefs.known_locations {
            if !self.beliefs.visited.contains(loc) {
                wanted.push((GoalKind::Navigate, loc.clone()));
            }
        }
        for ch in def.world.characters_at(&here) {
            if self.beliefs.seen.contains(&ch.id) {
                wanted.push((GoalKind::InteractNpc, ch.id.clone()));
            }
        }
        for a in self.beliefs.affordances.get(&here).into_iter().flatten() {
            if a.verb == Verb::Take {
                wanted.push((GoalKind::DecideObject, a.subject.clone()));
            }
        }
        for sg in &def.goals {
            let holds = sg.trigger.iter().all(|c| match c {
                crate::story::BeliefCondition::Seen(e) => self.beliefs.seen.contains(e),
                crate::story::BeliefCondition::Has(i) => self.beliefs.carries(i),
                crate::story::BeliefCondition::Discovered(p) => self.beliefs.is_discovered(p),
            });
            if holds {
                wanted.push((GoalKind::InSpecific, sg.id.clone()));
            }
        }

        let mut adopted = Vec::new();
        for (kind, target) in wanted {
            let id = Goal::key(kind, &target);
            if !self.may_adopt(&id) {
                continue;
            }
            let probe = Goal::new(kind, &target, 0, self.tick, 0);
            if self.is_achieved(def, &probe) {
                continue;
            }
            adopted.push(self.adopt(kind, &target));
        }
        adopted
    }

    fn is_blocked(&self, goal: &Goal) -> bool {
        goal.blocked_epoch == Some(self.epoch)
    }

    fn is_deferred(&self, def: &StoryDefinition, goal: &Goal) -> bool {
        goal.kind == GoalKind::InSpecific
            && self.deferred.as_ref().is_some_and(|d| {
                def.goals
                    .iter()
                    .any(|sg| sg.id == goal.target && sg.action == *d)
            })
    }

    /// Target location of a story goal's action. `Some(None)` means it can
    /// be done anywhere.
    fn story_goal_site(&self, def: &StoryDefinition, id: &str) -> Option<Option<String>> {
        let sg = def.goals.iter().find(|g| g.id == id)?;
        let mut site = None;
        if sg.action.verb == Verb::Goto {
            return Some(Some(sg.action.subject.clone()));
        }
        let located = sg
            .action
            .entities()
            .filter(|e| def.world.item(e).is_some() || def.world.character(e).is_some());
        for e in located {
            if let Some(loc) = self.beliefs.whereabouts(e)? {
                site = Some(loc.to_owned());
            }
        }
        Some(site)
    }

    fn plan_ready(&self, def: &StoryDefinition, goal: &Goal, plan: &Plan) -> bool {
        match plan.body {
            Body::Pursue | Body::PursueExploring if !self.is_blocked(goal) => {
                self.story_goal_site(def, &goal.target).is_some()
            }
            _ => true,
        }
    }

    /// Picks the highest-priority goal that has an applicable plan.
    pub fn select_intention(&mut self, def: &StoryDefinition) -> Option<Intention> {
        let low_persistence = self
            .binary
            .is_some_and(|b| !b.is_high(Factor::Persistence));
        let mut order: Vec<usize> = (0..self.goals.len())
            .filter(|&i| {
                let g = &self.goals[i];
                g.is_active() && g.stalled_epoch != Some(self.epoch)
            })
            .collect();
        order.sort_by(|&a, &b| {
            let (ga, gb) = (&self.goals[a], &self.goals[b]);
            let recency = if low_persistence {
                gb.seq.cmp(&ga.seq)
            } else {
                ga.seq.cmp(&gb.seq)
            };
            gb.priority
                .cmp(&ga.priority)
                .then(self.is_blocked(ga).cmp(&self.is_blocked(gb)))
                .then(recency)
        });
        let (normal, deferred): (Vec<usize>, Vec<usize>) = order
            .into_iter()
            .partition(|&i| !self.is_deferred(def, &self.goals[i]));

        for i in normal.into_iter().chain(deferred) {
            let goal = &self.goals[i];
            let plans: Vec<&'static Plan> =
                applicable(goal.kind, self.binary.as_ref(), self.is_blocked(goal))
                    .into_iter()
                    .filter(|p| self.plan_ready(def, goal, p))
                    .collect();
            let plan = match plans.len() {
                0 => continue,
                1 => plans[0],
                n => plans[self.rng.random_range(0..n)],
            };
            return Some(Intention { goal: i, plan });
        }
        None
    }

    /// Random choice that prefers actions absent from the previous
    /// play-through when the agent is familiar with the story.
    fn choose(&mut self, mut options: Vec<Action>) -> Option<Action> {
        if options.is_empty() {
            return None;
        }
        if self.familiar {
            let novel: Vec<Action> = options
                .iter()
                .filter(|a| !self.previous_actions.contains(*a))
                .cloned()
                .collect();
            if !novel.is_empty() {
                options = novel;
            }
        }
        let i = if options.len() == 1 {
            0
        } else {
            self.rng.random_range(0..options.len())
        };
        Some(options.swap_remove(i))
    }

    /// Breadth-first distances over known exits from the current location.
    fn distances(&self) -> BTreeMap<String, (usize, String)> {
        let here = &self.beliefs.location;
        let mut dist: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut queue = VecDeque::new();
        dist.insert(here.clone(), (0, here.clone()));
        queue.push_back(here.clone());
        while let Some(loc) = queue.pop_front() {
            let (d, first) = dist[&loc].clone();
            for next in self.beliefs.known_exits.get(&loc).into_iter().flatten() {
                if dist.contains_key(next) {
                    continue;
                }
                let first_step = if d == 0 { next.clone() } else { first.clone() };
                dist.insert(next.clone(), (d + 1, first_step));
                queue.push_back(next.clone());
            }
        }
        dist
    }

    fn step_toward(&self, target: &str) -> Option<Action> {
        let dist = self.distances();
        match dist.get(target) {
            Some((d, first)) if *d > 0 => Some(Action::goto(first)),
            _ => None,
        }
    }

    /// Moves toward a random nearest location satisfying `pred`.
    fn step_to_nearest(&mut self, pred: impl Fn(&Self, &str) -> bool) -> Option<Action> {
        let dist = self.distances();
        let best = dist
            .iter()
            .filter(|(loc, (d, _))| *d > 0 && pred(self, loc))
            .map(|(_, (d, _))| *d)
            .min()?;
        let firsts: Vec<Action> = dist
            .iter()
            .filter(|(loc, (d, _))| *d == best && pred(self, loc))
            .map(|(_, (_, first))| Action::goto(first))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        self.choose(firsts)
    }

    fn search_step(&mut self, def: &StoryDefinition) -> Option<Action> {
        let here = self.beliefs.location.clone();
        let local = self.local_todo(def, &here);
        if !local.is_empty() {
            return self.choose(local);
        }
        self.step_to_nearest(|me, loc| {
            !me.beliefs.visited.contains(loc) || !me.local_todo(def, loc).is_empty()
        })
    }

    fn body_step(
        &mut self,
        def: &StoryDefinition,
        goal: &Goal,
        body: Body,
    ) -> Result<Action, PlanFailure> {
        let here = self.beliefs.location.clone();
        match body {
            Body::ExploreAll | Body::ExploreImportant => {
                if goal.target == here {
                    let todo = self.room_todo(def, &here, body);
                    self.choose(todo).ok_or(PlanFailure::Exhausted)
                } else {
                    self.step_toward(&goal.target).ok_or(PlanFailure::Lost)
                }
            }
            Body::NavUnexploredFirst => {
                let fresh: Vec<Action> = self
                    .beliefs
                    .known_exits
                    .get(&here)
                    .into_iter()
                    .flatten()
                    .filter(|l| !self.beliefs.visited.contains(*l))
                    .map(|l| Action::goto(l))
                    .collect();
                if fresh.is_empty() {
                    self.step_toward(&goal.target).ok_or(PlanFailure::Lost)
                } else {
                    Ok(self.choose(fresh).expect("non-empty"))
                }
            }
            Body::NavExhaustive => self
                .step_to_nearest(|me, loc| !me.beliefs.visited.contains(loc))
                .ok_or(PlanFailure::Lost),
            Body::NavDirect => self.step_toward(&goal.target).ok_or(PlanFailure::Lost),
            Body::NpcAll | Body::NpcTalkOnly => {
                let loc = self
                    .beliefs
                    .known_characters
                    .get(&goal.target)
                    .cloned()
                    .ok_or(PlanFailure::Lost)?;
                if loc == here {
                    let todo = self.npc_todo(&goal.target, body);
                    self.choose(todo).ok_or(PlanFailure::Exhausted)
                } else {
                    self.step_toward(&loc).ok_or(PlanFailure::Lost)
                }
            }
            Body::TakeAll | Body::TakeImportant => {
                if !self.wants(def, &goal.target, body) {
                    self.declined.insert(goal.target.clone());
                    return Err(PlanFailure::Declined);
                }
                let Some(ItemBelief::At(loc)) = self.beliefs.known_items.get(&goal.target).cloned()
                else {
                    return Err(PlanFailure::Exhausted);
                };
                if loc == here {
                    let take = Action::simple(Verb::Take, &goal.target);
                    if self.beliefs.available_now.contains(&take) {
                        Ok(take)
                    } else {
                        self.declined.insert(goal.target.clone());
                        Err(PlanFailure::Declined)
                    }
                } else {
                    self.step_toward(&loc).ok_or(PlanFailure::Lost)
                }
            }
            Body::Pursue if self.is_blocked(goal) => {
                self.search_step(def).ok_or(PlanFailure::Exhausted)
            }
            Body::PursueExploring => {
                let here_todo = self.local_todo(def, &here);
                if !here_todo.is_empty() {
                    return self.choose(here_todo).ok_or(PlanFailure::Exhausted);
                }
                match self.step_to_nearest(|me, loc| !me.beliefs.visited.contains(loc)) {
                    Some(step) => Ok(step),
                    None => self.body_step(def, goal, Body::Pursue),
                }
            }
            Body::Pursue => {
                let action = def
                    .goals
                    .iter()
                    .find(|g| g.id == goal.target)
                    .map(|g| g.action.clone())
                    .ok_or(PlanFailure::Lost)?;
                match self.story_goal_site(def, &goal.target) {
                    Some(Some(loc)) if loc != here && action.verb != Verb::Goto => {
                        self.step_toward(&loc).ok_or(PlanFailure::Lost)
                    }
                    Some(Some(loc)) if action.verb == Verb::Goto && loc != here => {
                        if self.beliefs.available_now.contains(&action) {
                            Ok(action)
                        } else {
                            self.step_toward(&loc).ok_or(PlanFailure::Lost)
                        }
                    }
                    Some(_) if self.beliefs.available_now.contains(&action) => Ok(action),
                    Some(_) => Err(PlanFailure::Blocked),
                    None => Err(PlanFailure::Lost),
                }
            }
            Body::Search => self.search_step(def).ok_or(PlanFailure::Exhausted),
        }
    }

    /// Produces the intention's next action, which is always one of the
    /// actions perceived this tick.
    pub fn execute_step(
        &mut self,
        def: &StoryDefinition,
        intention: Intention,
    ) -> Result<Action, PlanFailure> {
        let goal = self.goals[intention.goal].clone();
        let result = self
            .body_step(def, &goal, intention.plan.body)
            .and_then(|a| {
                if self.beliefs.available_now.contains(&a) {
                    Ok(a)
                } else {
                    Err(PlanFailure::Lost)
                }
            });
        let epoch = self.epoch;
        let g = &mut self.goals[intention.goal];
        match result {
            Ok(_) => g.attempt_ticks += 1,
            Err(PlanFailure::Blocked) => g.blocked_epoch = Some(epoch),
            Err(PlanFailure::Declined) => g.status = GoalStatus::Achieved,
            Err(PlanFailure::Exhausted | PlanFailure::Lost) => g.stalled_epoch = Some(epoch),
        }
        result
    }

    /// Exploration step used when no intention produced an action.
    pub fn fallback_step(&mut self, def: &StoryDefinition) -> Option<Action> {
        if let Some(a) = self.search_step(def) {
            return Some(a);
        }
        if let Some(d) = self.deferred.clone() {
            if self.beliefs.available_now.contains(&d) {
                return Some(d);
            }
        }
        let moves: Vec<Action> = self
            .beliefs
            .available_now
            .iter()
            .filter(|a| a.verb == Verb::Goto)
            .cloned()
            .collect();
        if !moves.is_empty() {
            return self.choose(moves);
        }
        let any: Vec<Action> = self.beliefs.available_now.iter().cloned().collect();
        self.choose(any)
    }

    /// Records that an action was performed.
    pub fn note_action(&mut self, action: &Action) {
        if action.verb != Verb::Goto {
            self.beliefs.tried.insert(action.clone());
        }
    }

    /// Drops goals that used up their budget when persistence is low.
    pub fn enforce_persistence(&mut self) -> Vec<String> {
        let low = self
            .binary
            .is_some_and(|b| !b.is_high(Factor::Persistence));
        if !low {
            return Vec::new();
        }
        let budget = self.config.persistence_budget;
        let epoch = self.epoch;
        let mut dropped = Vec::new();
        for g in self.goals.iter_mut() {
            if g.is_active() && g.attempt_ticks >= budget {
                g.status = GoalStatus::Dropped;
                g.dropped_epoch = Some(epoch);
                dropped.push(g.id.clone());
            }
        }
        if !dropped.is_empty() && !self.boosted {
            self.boosted = true;
            for g in self.goals.iter_mut() {
                if g.is_active() && g.kind.is_exploration() {
                    g.priority += EXPLORATION_BOOST;
                }
            }
        }
        dropped
    }
}

/// Plays the story to an ending or the tick limit.
pub fn run_agent(
    def: &StoryDefinition,
    profile: Option<PlayerProfile>,
    config: AgentConfig,
) -> Result<Trace, StoryError> {
    Ok(run_agent_logged(def, profile, config, None)?.trace)
}

/// Like [`run_agent`], also returning the per-tick log.
pub fn run_agent_logged(
    def: &StoryDefinition,
    profile: Option<PlayerProfile>,
    config: AgentConfig,
    previous: Option<Trace>,
) -> Result<AgentRun, StoryError> {
    let mut agent = init_agent(def, profile, config);
    if let Some(prev) = previous {
        agent = agent.with_previous_trace(prev);
    }
    let mut state = initial_state(def)?;
    let mut steps = Vec::new();
    let mut events = Vec::new();
    let mut dropped_goals = 0;

    while is_terminal(def, &state).is_none() && state.tick < config.max_ticks {
        let actions = available_actions(def, &state);
        if actions.is_empty() {
            break;
        }
        agent.perceive(def, &state, &actions);
        agent.trigger_goals(def);

        let mut goal_id = None;
        let mut plan_id = None;
        let mut chosen = None;
        if let Some(intention) = agent.select_intention(def) {
            goal_id = Some(agent.goals[intention.goal].id.clone());
            plan_id = Some(intention.plan.id.to_owned());
            chosen = agent.execute_step(def, intention).ok();
        }
        let action = match chosen {
            Some(a) => a,
            None => {
                plan_id = Some("fallback".to_owned());
                match agent.fallback_step(def) {
                    Some(a) => a,
                    None => break,
                }
            }
        };

        steps.push(TraceStep {
            tick: state.tick,
            action: action.clone(),
        });
        state = apply_action(def, &state, &action)
            .expect("agent emits only available actions")
            .state;
        agent.note_action(&action);
        let drops = agent.enforce_persistence();
        dropped_goals += drops.len();
        events.push(AgentEvent {
            tick: state.tick - 1,
            goal: goal_id,
            plan: plan_id,
            action,
            drops,
        });
    }

    let (plot_points, ending) = Trace::outcome(def, &state);
    let kind = agent.kind();
    let trace = Trace {
        session_id: session_id(kind, agent.binary_profile(), config.seed),
        story_id: def.id.clone(),
        agent_kind: kind,
        seed: Some(config.seed),
        profile_used: agent.beliefs.profile,
        actions: steps,
        plot_points,
        ending,
    };
    Ok(AgentRun {
        trace,
        events,
        dropped_goals,
    })
}

fn session_id(kind: AgentKind, profile: Option<&BinaryProfile>, seed: u64) -> String {
    match profile {
        Some(bp) => format!("informed-{bp}-{seed}"),
        None => match kind {
            AgentKind::Human => format!("human-{seed}"),
            _ => format!("uninformed-{seed}"),
        },
    }
}
