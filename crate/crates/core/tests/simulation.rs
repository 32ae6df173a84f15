mod common;

use narrasim::agent::{run_agent, AgentConfig};
use narrasim::profile::BinaryProfile;
use narrasim::simulation::{
    manifest_path, run_batch, run_batch_timed, write_batch, BatchManifest, SimulationSpec,
};
use narrasim::story::load_story_str;
use narrasim::trace::{read_traces, AgentKind};
use narrasim::SimulationError;

use common::*;

fn bits(s: &str) -> narrasim::profile::PlayerProfile {
    s.parse::<BinaryProfile>().unwrap().to_profile()
}

#[test]
fn run_i_uses_seed_base_plus_i() {
    let def = shipped_story();
    let spec = SimulationSpec::informed(&def, bits("0101"), 40).with_runs(4);
    let batch = run_batch(&spec).unwrap();
    assert_eq!(batch.seeds, vec![40, 41, 42, 43]);
    for (i, trace) in batch.traces.iter().enumerate() {
        let alone = run_agent(&def, Some(bits("0101")), AgentConfig::new(40 + i as u64)).unwrap();
        assert_eq!(*trace, alone);
        assert_eq!(trace.agent_kind, AgentKind::Informed);
    }
}

#[test]
fn parallel_and_sequential_batches_agree() {
    let def = shipped_story();
    let spec = SimulationSpec::uninformed(&def, 7).with_runs(12);
    let (par, t1) = run_batch_timed(&spec, true).unwrap();
    let (seq, t2) = run_batch_timed(&spec, false).unwrap();
    assert_eq!(par, seq);
    assert_eq!(t1.per_run_ms.len(), 12);
    assert_eq!(t2.per_run_ms.len(), 12);
    assert_eq!(run_batch(&spec).unwrap(), par);
}

#[test]
fn batch_echoes_its_spec() {
    let def = shipped_story();
    let config = AgentConfig::with_max_ticks(0, 120);
    let spec = SimulationSpec::informed(&def, bits("1100"), 3)
        .with_runs(2)
        .with_config(config);
    let batch = run_batch(&spec).unwrap();
    assert_eq!(batch.story_id(), "anchorhead-day2");
    assert_eq!(batch.spec.runs, 2);
    assert_eq!(batch.spec.max_ticks, 120);
    assert_eq!(batch.spec.persistence_budget, 24);
    assert_eq!(batch.dropped_goals.len(), 2);
    assert!(batch.traces.iter().all(|t| t.actions.len() <= 120));
}

#[test]
fn invalid_specs_are_rejected() {
    let def = shipped_story();
    assert!(matches!(
        run_batch(&SimulationSpec::uninformed(&def, 0).with_runs(0)),
        Err(SimulationError::NoRuns)
    ));
    let mut spec = SimulationSpec::uninformed(&def, 0);
    spec.agent_kind = AgentKind::Informed;
    assert!(matches!(run_batch(&spec), Err(SimulationError::MissingProfile)));
    spec.agent_kind = AgentKind::Uninformed;
    spec.profile = Some(bits("0000"));
    assert!(matches!(run_batch(&spec), Err(SimulationError::UnexpectedProfile)));
    let bad_budget = AgentConfig {
        persistence_budget: 0,
        ..AgentConfig::new(0)
    };
    assert!(matches!(
        run_batch(&SimulationSpec::uninformed(&def, 0).with_config(bad_budget)),
        Err(SimulationError::Config(_))
    ));
    let cyclic = fixture("cyclic");
    assert!(matches!(
        run_batch(&SimulationSpec::uninformed(&cyclic, 0)),
        Err(SimulationError::InvalidStory { .. })
    ));
    let no_ending = load_story_str(
        r#"{"start": "a", "locations": [{"id": "a", "exits": ["b"]}, {"id": "b", "exits": ["a"]}],
            "plot_points": [{"id": "p"}],
            "action_rules": [{"verb": "goto", "subject": "b", "triggers": ["p"]}]}"#,
    )
    .unwrap();
    assert!(matches!(
        run_batch(&SimulationSpec::uninformed(&no_ending, 0)),
        Err(SimulationError::InvalidStory { .. })
    ));
}

#[test]
fn written_batch_has_traces_and_manifest() {
    let def = shipped_story();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    let spec = SimulationSpec::informed(&def, bits("0011"), 100).with_runs(5);
    let (batch, timings) = run_batch_timed(&spec, true).unwrap();
    let manifest = write_batch(&batch, &timings, &path).unwrap();
    assert_eq!(manifest, manifest_path(&path));
    assert_eq!(manifest, dir.path().join("runs.manifest.json"));

    let file = std::io::BufReader::new(std::fs::File::open(&path).unwrap());
    assert_eq!(read_traces(file).unwrap(), batch.traces);
    let m: BatchManifest =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m.spec, batch.spec);
    assert_eq!(m.seeds, (100..105).collect::<Vec<_>>());
    assert_eq!(m.trace_file, "runs.jsonl");
    assert_eq!(
        m.completed,
        batch.traces.iter().filter(|t| t.ending.is_some()).count()
    );
}

#[test]
fn batches_are_byte_identical_across_runs() {
    let def = shipped_story();
    let spec = SimulationSpec::uninformed(&def, 11).with_runs(6);
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_batch(&spec).unwrap().write_traces(&mut a).unwrap();
    run_batch(&spec).unwrap().write_traces(&mut b).unwrap();
    assert_eq!(a, b);
}
