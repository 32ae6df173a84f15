use crate::profile::{BinaryProfile, Factor, Level};

use super::goals::GoalKind;

/// What a plan does each time it is asked for a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Body {
    /// Try every untried action in the room.
    ExploreAll,
    /// Only actions on important objects.
    ExploreImportant,
    /// Adjacent unvisited exits first, random ties.
    NavUnexploredFirst,
    /// Always head for the nearest unvisited place.
    NavExhaustive,
    /// Shortest known route to the goal's target.
    NavDirect,
    NpcAll,
    NpcTalkOnly,
    TakeAll,
    TakeImportant,
    /// Walk to where the goal's action can be done, then do it. Falls back
    /// to searching when the action was found unavailable.
    Pursue,
    /// Like `Pursue`, but first visits every known place not yet seen and
    /// finishes what is left in the current room.
    PursueExploring,
    /// Look for anything left to do that might unblock the goal.
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    pub factors: &'static [(Factor, Level)],
    /// `Some(b)` restricts the plan to goals whose blocked state equals `b`.
    pub blocked: Option<bool>,
}

impl Context {
    pub fn holds(&self, profile: Option<&BinaryProfile>, blocked: bool) -> bool {
        if self.blocked.is_some_and(|b| b != blocked) {
            return false;
        }
        match profile {
            Some(bp) => self.factors.iter().all(|&(f, l)| bp.level(f) == l),
            None => self.factors.is_empty(),
        }
    }

    /// Number of profile tests. Zero marks a default plan.
    pub fn specificity(&self) -> usize {
        self.factors.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plan {
    pub id: &'static str,
    pub goal_kind: GoalKind,
    pub context: Context,
    pub body: Body,
}

impl Plan {
    pub fn is_default(&self) -> bool {
        self.context.specificity() == 0
    }
}

const fn plan(
    id: &'static str,
    goal_kind: GoalKind,
    factors: &'static [(Factor, Level)],
    blocked: Option<bool>,
    body: Body,
) -> Plan {
    Plan {
        id,
        goal_kind,
        context: Context { factors, blocked },
        body,
    }
}

const PE_HIGH: &[(Factor, Level)] = &[(Factor::PreferenceToExplore, Level::High)];
const PE_LOW: &[(Factor, Level)] = &[(Factor::PreferenceToExplore, Level::Low)];
const GE_HIGH: &[(Factor, Level)] = &[(Factor::GamingExperience, Level::High)];
const GE_LOW: &[(Factor, Level)] = &[(Factor::GamingExperience, Level::Low)];
const P_HIGH: &[(Factor, Level)] = &[(Factor::Persistence, Level::High)];
const P_LOW: &[(Factor, Level)] = &[(Factor::Persistence, Level::Low)];

/// The full plan library. Default plans have no profile tests and are the
/// only ones available to an agent without a profile.
pub const PLAN_LIBRARY: &[Plan] = &[
    plan("explore-room/default", GoalKind::ExploreRoom, &[], None, Body::ExploreAll),
    plan("explore-room/thorough", GoalKind::ExploreRoom, PE_HIGH, None, Body::ExploreAll),
    plan("explore-room/glance", GoalKind::ExploreRoom, PE_LOW, None, Body::ExploreImportant),
    plan("navigate/unexplored-first", GoalKind::Navigate, &[], None, Body::NavUnexploredFirst),
    plan("navigate/exhaustive", GoalKind::Navigate, PE_HIGH, None, Body::NavExhaustive),
    plan("navigate/direct", GoalKind::Navigate, PE_LOW, None, Body::NavDirect),
    plan("interact-npc/default", GoalKind::InteractNpc, &[], None, Body::NpcAll),
    plan("interact-npc/inquisitive", GoalKind::InteractNpc, PE_HIGH, None, Body::NpcAll),
    plan("interact-npc/brief", GoalKind::InteractNpc, PE_LOW, None, Body::NpcTalkOnly),
    plan("decide-object/take-all", GoalKind::DecideObject, &[], None, Body::TakeAll),
    plan("decide-object/strategic", GoalKind::DecideObject, GE_HIGH, None, Body::TakeImportant),
    plan("decide-object/impulsive", GoalKind::DecideObject, GE_LOW, None, Body::TakeAll),
    plan("in-specific/pursue", GoalKind::InSpecific, &[], None, Body::Pursue),
    plan("in-specific/straight", GoalKind::InSpecific, PE_LOW, Some(false), Body::Pursue),
    plan("in-specific/roundabout", GoalKind::InSpecific, PE_HIGH, Some(false), Body::PursueExploring),
    plan("in-specific/persist", GoalKind::InSpecific, P_HIGH, Some(true), Body::Search),
    plan("in-specific/give-up-later", GoalKind::InSpecific, P_LOW, Some(true), Body::Search),
];

pub fn plans_for(kind: GoalKind) -> impl Iterator<Item = &'static Plan> {
    PLAN_LIBRARY.iter().filter(move |p| p.goal_kind == kind)
}

/// Applicable plans for a goal, keeping only the most specific ones.
pub fn applicable(
    kind: GoalKind,
    profile: Option<&BinaryProfile>,
    blocked: bool,
) -> Vec<&'static Plan> {
    let holding: Vec<&'static Plan> = plans_for(kind)
        .filter(|p| p.context.holds(profile, blocked))
        .collect();
    let best = holding
        .iter()
        .map(|p| p.context.specificity())
        .max()
        .unwrap_or(0);
    holding
        .into_iter()
        .filter(|p| p.context.specificity() == best)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::enumerate_binary_profiles;

    #[test]
    fn uninformed_agent_has_one_plan_per_kind() {
        for kind in GoalKind::ALL {
            for blocked in [false, true] {
                let plans = applicable(kind, None, blocked);
                assert_eq!(plans.len(), 1, "{kind} blocked={blocked}");
                assert!(plans[0].is_default());
            }
        }
    }

    #[test]
    fn conditioned_kinds_have_low_and_high_plans() {
        for kind in GoalKind::ALL {
            let factors: Vec<Factor> = plans_for(kind)
                .flat_map(|p| p.context.factors.iter().map(|(f, _)| *f))
                .collect();
            for f in factors {
                for level in [Level::Low, Level::High] {
                    assert!(
                        plans_for(kind).any(|p| p.context.factors.contains(&(f, level))),
                        "{kind} lacks a {level:?} plan for {f:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn every_profile_gets_exactly_one_plan() {
        for bp in enumerate_binary_profiles() {
            for kind in GoalKind::ALL {
                for blocked in [false, true] {
                    assert_eq!(applicable(kind, Some(&bp), blocked).len(), 1);
                }
            }
        }
    }

    #[test]
    fn navigation_follows_exploration_factor() {
        let high: BinaryProfile = "0010".parse().unwrap();
        let low: BinaryProfile = "0000".parse().unwrap();
        assert_eq!(applicable(GoalKind::Navigate, Some(&high), false)[0].id, "navigate/exhaustive");
        assert_eq!(applicable(GoalKind::Navigate, Some(&low), false)[0].id, "navigate/direct");
        assert_eq!(
            applicable(GoalKind::Navigate, None, false)[0].id,
            "navigate/unexplored-first"
        );
    }
}
