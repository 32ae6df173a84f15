mod common;

use std::collections::BTreeSet;

use narrasim::story::{
    apply_action, available_actions, initial_state, is_terminal, load_story_str, validate_story,
    Action, GameState, StoryDefinition, Verb,
};
use narrasim::trace::{load_script, replay_trace};
use narrasim::{EngineError, StoryError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

/// Every discovered plot point has all its predecessors earlier in the order.
fn precedence_holds(def: &StoryDefinition, state: &GameState) -> bool {
    state.discovered.iter().enumerate().all(|(i, id)| {
        def.plot.get(id).unwrap().predecessors.iter().all(|p| {
            state
                .discovered
                .get_index_of(p.as_str())
                .is_some_and(|j| j < i)
        })
    })
}

#[test]
fn shipped_story_has_recorded_plot_points_and_two_endings() {
    let def = shipped_story();
    let non_endings: BTreeSet<&str> = def
        .plot
        .plot_points
        .iter()
        .filter(|p| !p.is_ending)
        .map(|p| p.id.as_str())
        .collect();
    assert_eq!(non_endings, RECORDED_ORDER.into_iter().collect());
    assert_eq!(
        def.plot.endings.iter().map(String::as_str).collect::<Vec<_>>(),
        vec!["ending-a", "ending-b"]
    );
}

#[test]
fn shipped_story_is_valid() {
    let def = shipped_story();
    let report = validate_story(&def);
    assert!(report.is_valid(), "{report}");
    assert!(report.acyclic);
    assert_eq!(report.ending_count, 2);
    assert!(report.unreachable.is_empty());
    assert!(report.uncovered.is_empty());
}

#[test]
fn initial_state_starts_in_livingroom() {
    let def = shipped_story();
    let state = initial_state(&def).unwrap();
    assert_eq!(state.current_location, "livingroom");
    assert!(state.discovered.is_empty());
    assert!(state.inventory.is_empty());
    assert_eq!(state.tick, 0);
    assert_eq!(is_terminal(&def, &state), None);
    let actions = available_actions(&def, &state);
    assert!(actions.contains(&Action::goto("hall")));
    assert!(actions.contains(&Action::goto("street")));
}

#[test]
fn available_actions_are_sorted_by_verb_then_subject() {
    let def = shipped_story();
    let state = initial_state(&def).unwrap();
    let actions = available_actions(&def, &state);
    let mut sorted = actions.clone();
    sorted.sort_by(|a, b| (a.verb, &a.subject, &a.object).cmp(&(b.verb, &b.subject, &b.object)));
    assert_eq!(actions, sorted);
}

fn play(def: &StoryDefinition, script: &[&str]) -> GameState {
    let mut state = initial_state(def).unwrap();
    for step in script {
        let action: Action = step.parse().unwrap();
        state = apply_action(def, &state, &action).unwrap().state;
    }
    state
}

#[test]
fn safe_cannot_be_opened_before_the_combination() {
    let def = shipped_story();
    let state = play(&def, &["examine album", "take card", "goto hall", "goto study"]);
    let open_safe = Action::simple(Verb::Open, "safe");
    assert!(!available_actions(&def, &state).contains(&open_safe));
    assert!(matches!(
        apply_action(&def, &state, &open_safe),
        Err(EngineError::IllegalAction { .. })
    ));

    let read = apply_action(&def, &state, &"read card".parse().unwrap()).unwrap();
    assert_eq!(read.triggered, vec!["get-safe-combo"]);
    let opened = apply_action(&def, &read.state, &open_safe).unwrap();
    assert_eq!(opened.triggered, vec!["open-safe"]);
    assert_eq!(opened.state.tick, read.state.tick + 1);
}

#[test]
fn examine_without_rule_only_advances_tick() {
    let def = shipped_story();
    let state = initial_state(&def).unwrap();
    let t = apply_action(&def, &state, &"examine fireplace".parse().unwrap()).unwrap();
    assert!(t.triggered.is_empty());
    let mut expected = state.clone();
    expected.tick = 1;
    assert_eq!(t.state, expected);
}

#[test]
fn reference_script_discovers_recorded_order() {
    let def = shipped_story();
    let script = load_script(fixture_path("reference-script.json")).unwrap();
    let trace = script.play(&def).unwrap();
    assert_eq!(trace.plot_points, RECORDED_ORDER);
    assert_eq!(trace.ending, None);
    replay_trace(&def, &trace).unwrap();
}

#[test]
fn archetype_scripts_reach_endings() {
    let def = shipped_story();
    for (name, ending) in [
        ("explorer", "ending-a"),
        ("completionist", "ending-a"),
        ("speedrunner", "ending-b"),
    ] {
        let trace = archetype(name, &def);
        assert_eq!(trace.ending.as_deref(), Some(ending), "{name}");
        assert!(def.plot.respects_precedence(&trace.plot_points), "{name}");
        let state = replay_trace(&def, &trace).unwrap();
        assert!(available_actions(&def, &state).is_empty());
    }
}

#[test]
fn ending_reached_makes_state_terminal() {
    let def = shipped_story();
    let trace = archetype("speedrunner", &def);
    let state = replay_trace(&def, &trace).unwrap();
    assert_eq!(is_terminal(&def, &state), Some("ending-b"));
}

#[test]
fn story_without_start_has_no_initial_state() {
    let def = load_story_str(
        r#"{"locations": [{"id": "a", "exits": []}], "plot_points": [{"id": "p", "is_ending": true}],
            "action_rules": [{"verb": "goto", "subject": "a", "triggers": ["p"]}]}"#,
    )
    .unwrap();
    assert!(matches!(initial_state(&def), Err(StoryError::MissingStart)));
}

#[test]
fn kahn_elimination_matches_acyclicity_on_fixtures() {
    assert!(validate_story(&fixture("linear")).acyclic);
    assert!(validate_story(&fixture("detour")).acyclic);
    let cyclic = validate_story(&fixture("cyclic"));
    assert!(!cyclic.acyclic);
    assert!(!cyclic.is_valid());
}

fn random_walk(def: &StoryDefinition, seed: u64, steps: usize) -> Result<GameState, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = initial_state(def).unwrap();
    for _ in 0..steps {
        let actions = available_actions(def, &state);
        if actions.is_empty() {
            break;
        }
        let action = &actions[rng.random_range(0..actions.len())];
        let before = state.clone();
        let t = apply_action(def, &state, action)?;
        assert_eq!(t.state.tick, before.tick + 1);
        assert_eq!(apply_action(def, &before, action)?.state, t.state);
        assert!(precedence_holds(def, &t.state));
        state = t.state;
    }
    Ok(state)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_walks_stay_legal_and_ordered(seed in any::<u64>(), steps in 0usize..400) {
        let def = shipped_story();
        let state = random_walk(&def, seed, steps).unwrap();
        prop_assert!(def.plot.respects_precedence(
            &state.discovered.iter().cloned().collect::<Vec<_>>()
        ));
        prop_assert!(state.tick as usize <= steps);
    }
}
