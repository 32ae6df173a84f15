//! Trace similarity, best-profile grid search and method comparison.
//!
//! Traces are compared by the Jaccard index of their plot-point sets. Two
//! empty sets count as identical. Quartiles use linear interpolation between
//! closest ranks.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::error::EvaluationError;
use crate::profile::{enumerate_binary_profiles, BinaryProfile, PlayerProfile};
use crate::simulation::{run_batch, SimulationBatch, SimulationSpec};
use crate::story::StoryDefinition;
use crate::trace::Trace;

pub const SCHEMA_VERSION: u32 = 1;

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub fn trace_similarity(a: &Trace, b: &Trace) -> f64 {
    jaccard(&a.plot_point_set(), &b.plot_point_set())
}

/// Quantile of sorted values by linear interpolation between closest ranks.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub values: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl SimilarityReport {
    /// Summary of the values. An empty input gives all-zero statistics.
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let mean = if sorted.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        Self {
            mean,
            min: sorted.first().copied().unwrap_or(0.0),
            max: sorted.last().copied().unwrap_or(0.0),
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn similarity_to_batch(
    human: &Trace,
    batch: &SimulationBatch,
) -> Result<SimilarityReport, EvaluationError> {
    if human.story_id != batch.story_id() {
        return Err(EvaluationError::StoryMismatch {
            expected: batch.story_id().to_owned(),
            found: human.story_id.clone(),
        });
    }
    let reference = human.plot_point_set();
    let values = batch
        .traces
        .iter()
        .map(|t| jaccard(&reference, &t.plot_point_set()))
        .collect();
    Ok(SimilarityReport::from_values(values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub profile: BinaryProfile,
    pub report: SimilarityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub session_id: String,
    pub runs: usize,
    pub seed_base: u64,
    /// One entry per binary profile, in lexicographic profile order.
    pub entries: Vec<GridEntry>,
    pub best_profile: BinaryProfile,
    pub best_mean: f64,
}

impl GridSearchResult {
    pub fn report(&self, profile: &BinaryProfile) -> Option<&SimilarityReport> {
        self.entries
            .iter()
            .find(|e| e.profile == *profile)
            .map(|e| &e.report)
    }

    pub fn best_report(&self) -> &SimilarityReport {
        self.report(&self.best_profile)
            .expect("best profile is one of the entries")
    }
}

fn check_story(human: &Trace, story: &StoryDefinition) -> Result<(), EvaluationError> {
    if human.story_id != story.id {
        return Err(EvaluationError::StoryMismatch {
            expected: story.id.clone(),
            found: human.story_id.clone(),
        });
    }
    Ok(())
}

/// Runs an informed batch for each of the 16 binary profiles with the same
/// seeds and picks the profile with the highest mean similarity. Ties go to
/// the lexicographically smallest profile.
pub fn grid_search(
    story: &StoryDefinition,
    human: &Trace,
    runs: usize,
    seed_base: u64,
    config: AgentConfig,
) -> Result<GridSearchResult, EvaluationError> {
    check_story(human, story)?;
    let entries = enumerate_binary_profiles()
        .into_par_iter()
        .map(|profile| {
            let spec = SimulationSpec::informed(story, profile.to_profile(), seed_base)
                .with_runs(runs)
                .with_config(config);
            let batch = run_batch(&spec)?;
            Ok(GridEntry {
                profile,
                report: similarity_to_batch(human, &batch)?,
            })
        })
        .collect::<Result<Vec<_>, EvaluationError>>()?;

    let mut best = &entries[0];
    for e in &entries[1..] {
        if e.report.mean > best.report.mean {
            best = e;
        }
    }
    Ok(GridSearchResult {
        session_id: human.session_id.clone(),
        runs,
        seed_base,
        best_profile: best.profile,
        best_mean: best.report.mean,
        entries: entries.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub session_id: String,
    pub reported_profile: PlayerProfile,
    pub reported: SimilarityReport,
    pub best_profile: BinaryProfile,
    pub best: SimilarityReport,
    pub uninformed: SimilarityReport,
    pub reported_equals_best: bool,
}

/// Similarity of a human trace to agents using the reported profile, the
/// best grid-search profile and no profile.
pub fn compare_methods(
    human: &Trace,
    reported_pp: &PlayerProfile,
    story: &StoryDefinition,
    runs: usize,
    seed_base: u64,
    config: AgentConfig,
) -> Result<ComparisonRow, EvaluationError> {
    check_story(human, story)?;
    let grid = grid_search(story, human, runs, seed_base, config)?;
    let reported_batch = run_batch(
        &SimulationSpec::informed(story, *reported_pp, seed_base)
            .with_runs(runs)
            .with_config(config),
    )?;
    let uninformed_batch = run_batch(
        &SimulationSpec::uninformed(story, seed_base)
            .with_runs(runs)
            .with_config(config),
    )?;
    Ok(ComparisonRow {
        session_id: human.session_id.clone(),
        reported_profile: *reported_pp,
        reported: similarity_to_batch(human, &reported_batch)?,
        best_profile: grid.best_profile,
        best: grid.best_report().clone(),
        uninformed: similarity_to_batch(human, &uninformed_batch)?,
        reported_equals_best: reported_pp.binarize() == grid.best_profile,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown report format `{other}` (expected csv or json)")),
        }
    }
}

/// Anything [`export_report`] can write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Report {
    Similarity(SimilarityReport),
    Grid(GridSearchResult),
    Comparison(Vec<ComparisonRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: Report,
}

pub const SIMILARITY_COLUMNS: [&str; 2] = ["run", "jaccard"];
pub const GRID_COLUMNS: [&str; 12] = [
    "f", "gE", "pE", "p", "runs", "mean", "min", "q1", "median", "q3", "max", "values",
];
pub const COMPARISON_COLUMNS: [&str; 14] = [
    "session_id",
    "method",
    "f",
    "gE",
    "pE",
    "p",
    "runs",
    "mean",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "reported_equals_best",
];

fn stats(r: &SimilarityReport) -> [String; 7] {
    [
        r.len().to_string(),
        r.mean.to_string(),
        r.min.to_string(),
        r.q1.to_string(),
        r.median.to_string(),
        r.q3.to_string(),
        r.max.to_string(),
    ]
}

fn bits(p: &BinaryProfile) -> [String; 4] {
    p.bits().map(|b| b.to_string())
}

pub fn export_report<W: Write>(
    report: &Report,
    format: ReportFormat,
    sink: W,
) -> Result<(), EvaluationError> {
    match format {
        ReportFormat::Json => {
            let doc = ReportDocument {
                schema_version: SCHEMA_VERSION,
                report: report.clone(),
            };
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            match report {
                Report::Similarity(r) => {
                    w.write_record(SIMILARITY_COLUMNS)?;
                    for (i, v) in r.values.iter().enumerate() {
                        w.write_record([i.to_string(), v.to_string()])?;
                    }
                }
                Report::Grid(g) => {
                    w.write_record(GRID_COLUMNS)?;
                    for e in &g.entries {
                        let values = e
                            .report
                            .values
                            .iter()
                            .map(f64::to_string)
                            .collect::<Vec<_>>()
                            .join(";");
                        let mut row: Vec<String> = bits(&e.profile).to_vec();
                        row.extend(stats(&e.report));
                        row.push(values);
                        w.write_record(&row)?;
                    }
                }
                Report::Comparison(rows) => {
                    w.write_record(COMPARISON_COLUMNS)?;
                    for row in rows {
                        let reported_bits = row.reported_profile.binarize();
                        let methods = [
                            ("reported", Some(reported_bits), &row.reported),
                            ("best", Some(row.best_profile), &row.best),
                            ("uninformed", None, &row.uninformed),
                        ];
                        for (method, profile, report) in methods {
                            let mut rec = vec![row.session_id.clone(), method.to_owned()];
                            match profile {
                                Some(p) => rec.extend(bits(&p)),
                                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
                            }
                            rec.extend(stats(report));
                            rec.push(row.reported_equals_best.to_string());
                            w.write_record(&rec)?;
                        }
                    }
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn import_report_json<R: std::io::Read>(source: R) -> Result<ReportDocument, EvaluationError> {
    Ok(serde_json::from_reader(source)?)
}
