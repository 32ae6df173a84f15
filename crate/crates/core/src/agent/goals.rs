use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoalKind {
    ExploreRoom,
    Navigate,
    InteractNpc,
    DecideObject,
    InSpecific,
}

impl GoalKind {
    pub const ALL: [GoalKind; 5] = [
        GoalKind::ExploreRoom,
        GoalKind::Navigate,
        GoalKind::InteractNpc,
        GoalKind::DecideObject,
        GoalKind::InSpecific,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GoalKind::ExploreRoom => "explore-room",
            GoalKind::Navigate => "navigate",
            GoalKind::InteractNpc => "interact-npc",
            GoalKind::DecideObject => "decide-object",
            GoalKind::InSpecific => "in-specific",
        }
    }

    /// Base priority. Story-specific goals first, room exploration last.
    pub fn base_priority(self) -> i32 {
        match self {
            GoalKind::InSpecific => 50,
            GoalKind::DecideObject => 40,
            GoalKind::InteractNpc => 30,
            GoalKind::Navigate => 20,
            GoalKind::ExploreRoom => 10,
        }
    }

    pub fn is_exploration(self) -> bool {
        matches!(self, GoalKind::ExploreRoom | GoalKind::Navigate)
    }
}

impl fmt::Display for GoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalStatus {
    Active,
    Achieved,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub id: String,
    pub kind: GoalKind,
    /// Location, item, character or story-goal id, depending on the kind.
    pub target: String,
    pub priority: i32,
    pub acquired_tick: u64,
    /// Acquisition order, used for tie-breaks.
    pub seq: u64,
    pub attempt_ticks: u64,
    pub status: GoalStatus,
    /// Belief epoch in which the goal's action was found unavailable.
    #[serde(skip)]
    pub blocked_epoch: Option<u64>,
    /// Belief epoch in which a plan for the goal ran out of steps.
    #[serde(skip)]
    pub stalled_epoch: Option<u64>,
    #[serde(skip)]
    pub dropped_epoch: Option<u64>,
}

impl Goal {
    pub fn key(kind: GoalKind, target: &str) -> String {
        format!("{}:{}", kind.as_str(), target)
    }

    pub fn new(kind: GoalKind, target: &str, priority: i32, tick: u64, seq: u64) -> Self {
        Self {
            id: Self::key(kind, target),
            kind,
            target: target.to_owned(),
            priority,
            acquired_tick: tick,
            seq,
            attempt_ticks: 0,
            status: GoalStatus::Active,
            blocked_epoch: None,
            stalled_epoch: None,
            dropped_epoch: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == GoalStatus::Active
    }
}
