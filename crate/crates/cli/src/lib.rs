//! Command line entry points.
//!
//! Every command except `serve` is deterministic given its flags. Exit codes
//! are 0 on success, 1 on a domain failure (invalid story, mismatched
//! inputs) and 2 on usage or I/O errors.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use narrasim::agent::{AgentConfig, DEFAULT_MAX_TICKS};
use narrasim::evaluation::{compare_methods, export_report, grid_search, Report, ReportFormat};
use narrasim::profile::{BinaryProfile, PlayerProfile};
use narrasim::simulation::{run_batch_timed, write_batch, SimulationSpec, DEFAULT_RUNS};
use narrasim::story::{load_story_file, validate_story, StoryDefinition};
use narrasim::trace::{read_traces, Trace};
use narrasim::{EvaluationError, SimulationError, StoryError, TraceError};
use serde::Deserialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable files. Exit code 2.
    Usage(String),
    /// The inputs were read but the request cannot be satisfied. Exit code 1.
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Domain(_) => 1,
            Self::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Domain(m) => f.write_str(m),
        }
    }
}

fn io_error(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {err}", path.display()))
}

impl From<StoryError> for CliError {
    fn from(e: StoryError) -> Self {
        match e {
            StoryError::Io(_) => Self::Usage(e.to_string()),
            _ => Self::Domain(e.to_string()),
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Config(_) => Self::Usage(e.to_string()),
            _ => Self::Domain(e.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Io(_) | EvaluationError::Csv(_) => Self::Usage(e.to_string()),
            _ => Self::Domain(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "narrasim", version, about = "Simulate and evaluate player agents on interactive narratives")]
pub struct Cli {
    /// TOML file with defaults for any flag below; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a story's plot graph and action coverage.
    Validate(ValidateArgs),
    /// Run a batch of seeded agent play-throughs.
    Simulate(SimulateArgs),
    /// Find the profile whose agents best match a human trace.
    Gridsearch(GridsearchArgs),
    /// Compare reported, best and uninformed profiles for human traces.
    Compare(CompareArgs),
    /// Export human traces and reported profiles from a session data directory.
    Export(ExportArgs),
    /// Serve the session API and the play client.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Story file.
    pub story: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

/// Agent settings shared by the batch commands.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Runs per batch [default: 20]
    #[arg(long)]
    pub runs: Option<usize>,
    /// Seed of the first run; run i uses seed + i [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tick limit per run [default: 300]
    #[arg(long)]
    pub max_ticks: Option<u64>,
    /// Ticks a low-persistence agent spends on a goal before dropping it
    /// [default: max-ticks / 5, rounded up]
    #[arg(long)]
    pub persistence_budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub story: PathBuf,
    /// Profile as a JSON file with f, gE, pE and p, or as four bits such as 0110.
    #[arg(long, conflicts_with = "uninformed", required_unless_present = "uninformed")]
    pub profile: Option<String>,
    /// Use agents without a profile.
    #[arg(long)]
    pub uninformed: bool,
    /// Trace file of an earlier play-through the agents remember.
    #[arg(long, value_name = "FILE")]
    pub previous_trace: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Trace file to write; a manifest is written beside it.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-tick agent log as JSON lines.
    #[arg(long, value_name = "FILE")]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridsearchArgs {
    #[arg(long)]
    pub story: PathBuf,
    /// Trace file holding the human play-through.
    #[arg(long)]
    pub trace: PathBuf,
    /// Session to use when the file holds several traces [default: first complete trace]
    #[arg(long)]
    pub session: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// csv or json
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub story: PathBuf,
    /// Trace file with human play-throughs.
    #[arg(long)]
    pub traces: PathBuf,
    /// JSON object mapping session ids to reported profiles.
    #[arg(long)]
    pub profiles: PathBuf,
    /// Also compare traces that did not reach an ending.
    #[arg(long)]
    pub include_incomplete: bool,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// csv or json
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Stories directory the sessions were played on.
    #[arg(long)]
    pub stories: Option<PathBuf>,
    /// Session data directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Only sessions of this story.
    #[arg(long = "story-id")]
    pub story_id: Option<String>,
    /// Only sessions that reached an ending.
    #[arg(long)]
    pub complete: bool,
    /// Trace file to write.
    #[arg(long)]
    pub traces: PathBuf,
    /// Profiles file to write, for `compare`.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of story files [default: stories]
    #[arg(long)]
    pub stories: Option<PathBuf>,
    /// Session data directory [default: data]
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Static files of the play client.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// [default: 127.0.0.1]
    #[arg(long)]
    pub host: Option<IpAddr>,
    /// [default: 8080]
    #[arg(long)]
    pub port: Option<u16>,
}

/// Defaults read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub max_ticks: Option<u64>,
    pub persistence_budget: Option<u64>,
    pub stories: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub assets: Option<PathBuf>,
    pub host: Option<IpAddr>,
    pub port: Option<u16>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

struct Resolved {
    runs: usize,
    seed: u64,
    config: AgentConfig,
}

fn resolve(run: &RunArgs, file: &FileConfig) -> Result<Resolved, CliError> {
    let seed = run.seed.or(file.seed).unwrap_or(0);
    let max_ticks = run.max_ticks.or(file.max_ticks).unwrap_or(DEFAULT_MAX_TICKS);
    let mut config = AgentConfig::with_max_ticks(seed, max_ticks);
    if let Some(b) = run.persistence_budget.or(file.persistence_budget) {
        config.persistence_budget = b;
    }
    config.validate()?;
    Ok(Resolved {
        runs: run.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
        seed,
        config,
    })
}

fn load_story(path: &Path) -> Result<StoryDefinition, CliError> {
    load_story_file(path).map_err(|e| match e {
        StoryError::Io(io) => io_error(path, io),
        other => CliError::Domain(format!("{}: {other}", path.display())),
    })
}

fn load_traces(path: &Path) -> Result<Vec<Trace>, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_traces(BufReader::new(file)).map_err(|e| match e {
        TraceError::Io(io) => io_error(path, io),
        other => CliError::Domain(format!("{}: {other}", path.display())),
    })
}

fn parse_profile(arg: &str) -> Result<PlayerProfile, CliError> {
    if let Ok(bits) = arg.parse::<BinaryProfile>() {
        return Ok(bits.to_profile());
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{arg}: {e}")))
}

/// Creates missing parent directories of an output file.
fn make_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
        }
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    make_parent(path)?;
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn write_report(report: &Report, format: ReportFormat, out: &Path) -> Result<(), CliError> {
    export_report(report, format, create(out)?).map_err(|e| match e {
        EvaluationError::Io(io) => io_error(out, io),
        other => CliError::from(other),
    })
}

/// Runs a parsed command line, writing human-readable output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let say = |stdout: &mut dyn Write, line: String| {
        writeln!(stdout, "{line}").map_err(|e| CliError::Usage(e.to_string()))
    };
    match cli.command {
        Command::Validate(args) => {
            let def = load_story(&args.story)?;
            let report = validate_story(&def);
            let text = if args.json {
                serde_json::to_string_pretty(&report).expect("report serializes")
            } else {
                report.to_string()
            };
            say(stdout, text)?;
            if !report.is_valid() {
                return Err(CliError::Domain(format!("story `{}` is invalid", report.story)));
            }
        }
        Command::Simulate(args) => {
            let def = load_story(&args.story)?;
            let r = resolve(&args.run, &file)?;
            let mut spec = match &args.profile {
                Some(p) => SimulationSpec::informed(&def, parse_profile(p)?, r.seed),
                None => SimulationSpec::uninformed(&def, r.seed),
            }
            .with_runs(r.runs)
            .with_config(r.config);
            if let Some(path) = &args.previous_trace {
                let prev = load_traces(path)?.into_iter().next().ok_or_else(|| {
                    CliError::Domain(format!("{}: no trace", path.display()))
                })?;
                spec = spec.with_previous_trace(prev);
            }
            let (batch, timings) = run_batch_timed(&spec, true)?;
            make_parent(&args.out)?;
            let manifest =
                write_batch(&batch, &timings, &args.out).map_err(|e| io_error(&args.out, e))?;
            if let Some(path) = &args.events {
                let mut out = create(path)?;
                for (run, events) in batch.events.iter().enumerate() {
                    for e in events {
                        let mut line = serde_json::to_value(e).expect("event serializes");
                        line["run"] = run.into();
                        line["seed"] = batch.seeds[run].into();
                        writeln!(out, "{line}").map_err(|e| io_error(path, e))?;
                    }
                }
                out.flush().map_err(|e| io_error(path, e))?;
            }
            let complete = batch.traces.iter().filter(|t| t.is_complete()).count();
            say(
                stdout,
                format!(
                    "wrote {} traces to {} ({complete} reached an ending); manifest {}",
                    batch.traces.len(),
                    args.out.display(),
                    manifest.display()
                ),
            )?;
        }
        Command::Gridsearch(args) => {
            let def = load_story(&args.story)?;
            let r = resolve(&args.run, &file)?;
            let traces = load_traces(&args.trace)?;
            let human = match &args.session {
                Some(id) => traces.iter().find(|t| t.session_id == *id).ok_or_else(|| {
                    CliError::Domain(format!("no trace for session `{id}`"))
                })?,
                None => traces.iter().find(|t| t.is_complete()).ok_or_else(|| {
                    CliError::Domain(format!("{}: no complete trace", args.trace.display()))
                })?,
            };
            let grid = grid_search(&def, human, r.runs, r.seed, r.config)?;
            say(
                stdout,
                format!(
                    "best profile {} mean {} over {} profiles ({} runs each, seed {})",
                    grid.best_profile,
                    grid.best_mean,
                    grid.entries.len(),
                    grid.runs,
                    grid.seed_base
                ),
            )?;
            write_report(&Report::Grid(grid), args.format, &args.out)?;
        }
        Command::Compare(args) => {
            let def = load_story(&args.story)?;
            let r = resolve(&args.run, &file)?;
            let traces = load_traces(&args.traces)?;
            let text = std::fs::read_to_string(&args.profiles)
                .map_err(|e| io_error(&args.profiles, e))?;
            let profiles: BTreeMap<String, PlayerProfile> = serde_json::from_str(&text)
                .map_err(|e| CliError::Domain(format!("{}: {e}", args.profiles.display())))?;
            let selected: Vec<&Trace> = traces
                .iter()
                .filter(|t| args.include_incomplete || t.is_complete())
                .collect();
            let missing: Vec<&str> = selected
                .iter()
                .filter(|t| !profiles.contains_key(&t.session_id))
                .map(|t| t.session_id.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(CliError::Domain(format!(
                    "no reported profile for sessions: {}",
                    missing.join(", ")
                )));
            }
            let mut rows = Vec::new();
            for t in selected {
                let reported = &profiles[&t.session_id];
                rows.push(compare_methods(t, reported, &def, r.runs, r.seed, r.config)?);
            }
            let matched = rows.iter().filter(|r| r.reported_equals_best).count();
            say(
                stdout,
                format!("compared {} traces; reported profile was best for {matched}", rows.len()),
            )?;
            write_report(&Report::Comparison(rows), args.format, &args.out)?;
        }
        Command::Export(args) => {
            let stories = args
                .stories
                .or(file.stories)
                .unwrap_or_else(|| "stories".into());
            let data = args.data.or(file.data).unwrap_or_else(|| "data".into());
            let store = narrasim_service::load_stories(&stories)
                .and_then(|s| narrasim_service::SessionStore::open(&data, s))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let filter = narrasim_service::TraceFilter {
                story: args.story_id,
                complete: args.complete,
            };
            let traces = store.traces(&filter);
            let mut out = create(&args.traces)?;
            narrasim::trace::write_traces(&mut out, &traces)
                .map_err(|e| io_error(&args.traces, e))?;
            if let Some(path) = &args.profiles {
                let all = store.profiles();
                let wanted: BTreeMap<&String, &PlayerProfile> = traces
                    .iter()
                    .filter_map(|t| all.get_key_value(&t.session_id))
                    .collect();
                let mut out = create(path)?;
                serde_json::to_writer_pretty(&mut out, &wanted)
                    .map_err(|e| io_error(path, e))?;
                writeln!(out).map_err(|e| io_error(path, e))?;
            }
            say(stdout, format!("exported {} traces", traces.len()))?;
        }
        Command::Serve(args) => {
            let config = narrasim_service::ServiceConfig {
                stories_dir: args.stories.or(file.stories).unwrap_or_else(|| "stories".into()),
                data_dir: args.data.or(file.data).unwrap_or_else(|| "data".into()),
                assets_dir: args.assets.or(file.assets),
                addr: SocketAddr::new(
                    args.host.or(file.host).unwrap_or([127, 0, 0, 1].into()),
                    args.port.or(file.port).unwrap_or(8080),
                ),
            };
            let _ = tracing_subscriber::fmt()
                .with_writer(std::io::stderr)
                .try_init();
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            runtime
                .block_on(narrasim_service::serve(config))
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
