//! Seeded batches of agent play-throughs.
//!
//! Run `i` of a batch is seeded with `seed_base + i`, so any single trace can
//! be reproduced with [`run_agent`](crate::agent::run_agent) alone.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{run_agent_logged, AgentConfig, AgentEvent, AgentRun};
use crate::error::SimulationError;
use crate::profile::PlayerProfile;
use crate::story::{validate_story, StoryDefinition};
use crate::trace::{write_traces, AgentKind, Trace};

pub const DEFAULT_RUNS: usize = 20;

#[derive(Debug, Clone)]
pub struct SimulationSpec<'a> {
    pub story: &'a StoryDefinition,
    pub agent_kind: AgentKind,
    pub profile: Option<PlayerProfile>,
    pub runs: usize,
    pub seed_base: u64,
    pub config: AgentConfig,
    /// Earlier play-through the agents may remember.
    pub previous_trace: Option<Trace>,
}

impl<'a> SimulationSpec<'a> {
    pub fn uninformed(story: &'a StoryDefinition, seed_base: u64) -> Self {
        Self {
            story,
            agent_kind: AgentKind::Uninformed,
            profile: None,
            runs: DEFAULT_RUNS,
            seed_base,
            config: AgentConfig::new(seed_base),
            previous_trace: None,
        }
    }

    pub fn informed(story: &'a StoryDefinition, profile: PlayerProfile, seed_base: u64) -> Self {
        Self {
            agent_kind: AgentKind::Informed,
            profile: Some(profile),
            ..Self::uninformed(story, seed_base)
        }
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_config(mut self, config: AgentConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_previous_trace(mut self, trace: Trace) -> Self {
        self.previous_trace = Some(trace);
        self
    }

    pub fn check(&self) -> Result<(), SimulationError> {
        if self.runs == 0 {
            return Err(SimulationError::NoRuns);
        }
        match (self.agent_kind, &self.profile) {
            (AgentKind::Informed, None) => return Err(SimulationError::MissingProfile),
            (AgentKind::Uninformed, Some(_)) => return Err(SimulationError::UnexpectedProfile),
            (AgentKind::Human, _) => {
                return Err(SimulationError::Config(
                    "human is not a simulated agent kind".into(),
                ))
            }
            _ => {}
        }
        self.config.validate()?;
        let report = validate_story(self.story);
        if !report.is_valid() {
            return Err(SimulationError::InvalidStory {
                story: report.story.clone(),
                summary: report.summary(),
            });
        }
        Ok(())
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.seed_base.wrapping_add(run as u64)
    }

    pub fn echo(&self) -> SpecEcho {
        SpecEcho {
            story: self.story.id.clone(),
            agent_kind: self.agent_kind,
            profile: self.profile,
            runs: self.runs,
            seed_base: self.seed_base,
            max_ticks: self.config.max_ticks,
            persistence_budget: self.config.persistence_budget,
            previous_trace: self.previous_trace.as_ref().map(|t| t.session_id.clone()),
        }
    }

    fn run_one(&self, run: usize) -> (AgentRun, Duration) {
        let config = AgentConfig {
            seed: self.seed(run),
            ..self.config
        };
        let started = Instant::now();
        let result = run_agent_logged(
            self.story,
            self.profile,
            config,
            self.previous_trace.clone(),
        )
        .expect("validated story has a start location");
        (result, started.elapsed())
    }
}

/// Serializable copy of a spec, without the story itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub story: String,
    pub agent_kind: AgentKind,
    pub profile: Option<PlayerProfile>,
    pub runs: usize,
    pub seed_base: u64,
    pub max_ticks: u64,
    pub persistence_budget: u64,
    pub previous_trace: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationBatch {
    pub spec: SpecEcho,
    pub seeds: Vec<u64>,
    pub traces: Vec<Trace>,
    /// Goals dropped in each run.
    pub dropped_goals: Vec<usize>,
    /// Per-tick agent log of each run. Not part of the serialized batch.
    #[serde(skip)]
    pub events: Vec<Vec<AgentEvent>>,
}

impl SimulationBatch {
    pub fn story_id(&self) -> &str {
        &self.spec.story
    }

    pub fn write_traces<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_traces(out, &self.traces)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchTimings {
    pub total_ms: f64,
    pub per_run_ms: Vec<f64>,
}

/// Manifest written next to a batch's trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub spec: SpecEcho,
    pub seeds: Vec<u64>,
    pub trace_file: String,
    pub completed: usize,
    pub timings: BatchTimings,
}

pub fn run_batch(spec: &SimulationSpec<'_>) -> Result<SimulationBatch, SimulationError> {
    Ok(run_batch_timed(spec, true)?.0)
}

/// Runs a batch, in parallel or one run after another. Both give the same
/// batch.
pub fn run_batch_timed(
    spec: &SimulationSpec<'_>,
    parallel: bool,
) -> Result<(SimulationBatch, BatchTimings), SimulationError> {
    spec.check()?;
    let started = Instant::now();
    let results: Vec<(AgentRun, Duration)> = if parallel {
        (0..spec.runs)
            .into_par_iter()
            .map(|i| spec.run_one(i))
            .collect()
    } else {
        (0..spec.runs).map(|i| spec.run_one(i)).collect()
    };
    let total = started.elapsed();
    let per_run_ms = results
        .iter()
        .map(|(_, d)| d.as_secs_f64() * 1e3)
        .collect();
    let mut traces = Vec::with_capacity(spec.runs);
    let mut dropped_goals = Vec::with_capacity(spec.runs);
    let mut events = Vec::with_capacity(spec.runs);
    for (run, _) in results {
        traces.push(run.trace);
        dropped_goals.push(run.dropped_goals);
        events.push(run.events);
    }
    let batch = SimulationBatch {
        spec: spec.echo(),
        seeds: (0..spec.runs).map(|i| spec.seed(i)).collect(),
        traces,
        dropped_goals,
        events,
    };
    let timings = BatchTimings {
        total_ms: total.as_secs_f64() * 1e3,
        per_run_ms,
    };
    Ok((batch, timings))
}

/// Writes the trace file and a manifest beside it (`<stem>.manifest.json`).
pub fn write_batch(
    batch: &SimulationBatch,
    timings: &BatchTimings,
    trace_path: &Path,
) -> std::io::Result<std::path::PathBuf> {
    let file = std::fs::File::create(trace_path)?;
    batch.write_traces(std::io::BufWriter::new(file))?;
    let manifest = BatchManifest {
        spec: batch.spec.clone(),
        seeds: batch.seeds.clone(),
        trace_file: trace_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        completed: batch.traces.iter().filter(|t| t.is_complete()).count(),
        timings: timings.clone(),
    };
    let manifest_path = manifest_path(trace_path);
    let mut out = std::fs::File::create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut out, &manifest)?;
    out.write_all(b"\n")?;
    Ok(manifest_path)
}

pub fn manifest_path(trace_path: &Path) -> std::path::PathBuf {
    let stem = trace_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "batch".into());
    trace_path.with_file_name(format!("{stem}.manifest.json"))
}
