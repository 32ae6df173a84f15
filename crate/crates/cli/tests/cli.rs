use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use narrasim::trace::{load_script, play_script, read_traces, write_traces};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn story() -> String {
    root().join("stories/anchorhead-day2.json").display().to_string()
}

fn fixture(name: &str) -> String {
    root()
        .join(format!("crates/core/tests/fixtures/{name}.json"))
        .display()
        .to_string()
}

fn narrasim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_narrasim"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Writes the human trace of an archetype script to a file.
fn archetype_trace(dir: &Path, name: &str) -> PathBuf {
    let def = narrasim::story::load_story_file(story()).unwrap();
    let trace = load_script(root().join(format!("stories/archetypes/{name}.json")))
        .unwrap()
        .play(&def)
        .unwrap();
    let path = dir.join(format!("{name}.jsonl"));
    write_traces(std::fs::File::create(&path).unwrap(), [&trace]).unwrap();
    path
}

#[test]
fn validate_exit_codes() {
    let ok = narrasim(&["validate", &story()]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("VALID"));
    let bad = narrasim(&["validate", &fixture("cyclic")]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("INVALID"));
    assert_eq!(code(&narrasim(&["validate", "no/such/story.json"])), 2);
    let json = narrasim(&["validate", "--json", &story()]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["acyclic"], true);
    assert_eq!(v["ending_count"], 2);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&narrasim(&[])), 2);
    assert_eq!(code(&narrasim(&["frobnicate"])), 2);
    let both = narrasim(&[
        "simulate", "--story", &story(), "--uninformed", "--profile", "0101", "--out", "x",
    ]);
    assert_eq!(code(&both), 2);
    let neither = narrasim(&["simulate", "--story", &story(), "--out", "x"]);
    assert_eq!(code(&neither), 2);
    assert_eq!(code(&narrasim(&["--help"])), 0);
}

#[test]
fn simulate_writes_one_line_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("batch.jsonl");
    let events = dir.path().join("events.jsonl");
    let r = narrasim(&[
        "simulate", "--story", &story(), "--profile", "0011", "--runs", "20", "--seed", "3",
        "--out", &path_str(&out), "--events", &path_str(&events),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let traces = read_traces(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(traces.len(), 20);
    assert_eq!(traces[0].seed, Some(3));
    assert_eq!(traces[19].seed, Some(22));
    assert!(dir.path().join("batch.manifest.json").exists());
    let log = std::fs::read_to_string(&events).unwrap();
    let ticks: usize = traces.iter().map(|t| t.actions.len()).sum();
    assert_eq!(log.lines().count(), ticks);
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(first["run"], 0);
    assert_eq!(first["seed"], 3);
}

#[test]
fn outputs_create_missing_directories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs/a/u.jsonl");
    let events = dir.path().join("logs/e.jsonl");
    let grid = dir.path().join("reports/grid.csv");
    let sim = narrasim(&[
        "simulate", "--story", &story(), "--uninformed", "--runs", "2",
        "--out", &path_str(&out), "--events", &path_str(&events),
    ]);
    assert_eq!(code(&sim), 0, "{}", String::from_utf8_lossy(&sim.stderr));
    assert!(out.exists() && events.exists());
    assert!(dir.path().join("runs/a/u.manifest.json").exists());
    let gs = narrasim(&[
        "gridsearch", "--story", &story(), "--trace", &path_str(&out), "--runs", "1",
        "--out", &path_str(&grid),
    ]);
    assert_eq!(code(&gs), 0);
    assert!(grid.exists());
}

#[test]
fn simulate_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        let r = narrasim(&[
            "simulate", "--story", &story(), "--uninformed", "--runs", "8", "--seed", "99",
            "--out", &path_str(out),
        ]);
        assert_eq!(code(&r), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn profile_file_and_config_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("pp.json");
    std::fs::write(&profile, r#"{"f": 0.25, "gE": 0.75, "pE": 1.0, "p": 0.5}"#).unwrap();
    let config = dir.path().join("narrasim.toml");
    std::fs::write(&config, "runs = 3\nseed = 50\nmax_ticks = 100\n").unwrap();
    let out = dir.path().join("t.jsonl");
    let r = narrasim(&[
        "--config", &path_str(&config), "simulate", "--story", &story(), "--profile",
        &path_str(&profile), "--out", &path_str(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let traces = read_traces(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(traces.len(), 3);
    assert_eq!(traces[0].session_id, "informed-0110-50");
    assert!(traces.iter().all(|t| t.actions.len() <= 100));

    let r = narrasim(&[
        "--config", &path_str(&config), "simulate", "--story", &story(), "--uninformed",
        "--runs", "2", "--out", &path_str(&out),
    ]);
    assert_eq!(code(&r), 0);
    let traces = read_traces(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(traces.len(), 2);

    std::fs::write(&config, "bogus = 1\n").unwrap();
    let r = narrasim(&[
        "--config", &path_str(&config), "simulate", "--story", &story(), "--uninformed",
        "--out", &path_str(&out),
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn gridsearch_writes_sixteen_rows_and_the_best() {
    let dir = tempfile::tempdir().unwrap();
    let trace = archetype_trace(dir.path(), "explorer");
    let out = dir.path().join("grid.csv");
    let r = narrasim(&[
        "gridsearch", "--story", &story(), "--trace", &path_str(&trace), "--runs", "5",
        "--out", &path_str(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 16);
    let means: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    let best = means.iter().cloned().fold(f64::MIN, f64::max);
    let first = means.iter().position(|m| *m == best).unwrap();
    let bits: String = (0..4).map(|i| rows[first][i].to_owned()).collect();
    let line = stdout(&r);
    assert!(line.starts_with(&format!("best profile {bits} mean {best} ")), "{line}");
}

#[test]
fn gridsearch_rejects_empty_and_foreign_traces() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = path_str(&dir.path().join("g.csv"));
    let r = narrasim(&["gridsearch", "--story", &story(), "--trace", &path_str(&empty), "--out", &out]);
    assert_eq!(code(&r), 1);

    let linear = narrasim::story::load_story_file(fixture("linear")).unwrap();
    let foreign = play_script(&linear, "f", &["open a-box".parse().unwrap()]).unwrap();
    let mut done = foreign.clone();
    done.ending = Some("c".into());
    let path = dir.path().join("foreign.jsonl");
    write_traces(std::fs::File::create(&path).unwrap(), [&done]).unwrap();
    let r = narrasim(&["gridsearch", "--story", &story(), "--trace", &path_str(&path), "--out", &out]);
    assert_eq!(code(&r), 1);
}

/// Six linear-story traces; every profile ties there, so the best profile
/// is always 0000 and exactly the sessions reported as 0000 are flagged.
#[test]
fn compare_flags_reported_equals_best() {
    let dir = tempfile::tempdir().unwrap();
    let def = narrasim::story::load_story_file(fixture("linear")).unwrap();
    let actions: Vec<narrasim::story::Action> = ["open a-box", "open b-box", "open c-box"]
        .iter()
        .map(|a| a.parse().unwrap())
        .collect();
    let traces: Vec<_> = (0..6)
        .map(|i| play_script(&def, &format!("s{i}"), &actions).unwrap())
        .collect();
    let traces_path = dir.path().join("humans.jsonl");
    write_traces(std::fs::File::create(&traces_path).unwrap(), &traces).unwrap();
    let profiles = serde_json::json!({
        "s0": {"f": 0.0, "gE": 0.5, "pE": 0.25, "p": 0.0},
        "s1": {"f": 0.5, "gE": 0.5, "pE": 0.5, "p": 0.5},
        "s2": {"f": 1.0, "gE": 0.0, "pE": 0.0, "p": 0.0},
        "s3": {"f": 0.1, "gE": 0.2, "pE": 0.3, "p": 0.4},
        "s4": {"f": 0.0, "gE": 0.0, "pE": 0.0, "p": 0.75},
        "s5": {"f": 0.0, "gE": 0.0, "pE": 0.0, "p": 0.0}
    });
    let profiles_path = dir.path().join("pp.json");
    std::fs::write(&profiles_path, profiles.to_string()).unwrap();
    let out = dir.path().join("cmp.csv");
    let r = narrasim(&[
        "compare", "--story", &fixture("linear"), "--traces", &path_str(&traces_path),
        "--profiles", &path_str(&profiles_path), "--runs", "2", "--out", &path_str(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 18);
    let flagged: Vec<&str> = rows
        .iter()
        .filter(|r| &r[1] == "reported" && &r[13] == "true")
        .map(|r| r.get(0).unwrap())
        .collect();
    assert_eq!(flagged, vec!["s0", "s1", "s3", "s5"]);
    assert!(stdout(&r).contains("best for 4"));

    let empty = dir.path().join("none.jsonl");
    std::fs::write(&empty, "").unwrap();
    let r = narrasim(&[
        "compare", "--story", &fixture("linear"), "--traces", &path_str(&empty),
        "--profiles", &path_str(&profiles_path), "--out", &path_str(&out),
    ]);
    assert_eq!(code(&r), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("session_id,method"));

    std::fs::write(&profiles_path, r#"{"other": {"f": 0, "gE": 0, "pE": 0, "p": 0}}"#).unwrap();
    let r = narrasim(&[
        "compare", "--story", &fixture("linear"), "--traces", &path_str(&traces_path),
        "--profiles", &path_str(&profiles_path), "--out", &path_str(&out),
    ]);
    assert_eq!(code(&r), 1);
}

#[test]
fn export_feeds_compare() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let stories = root().join("stories");
    {
        let store = narrasim_service::SessionStore::open(
            &data,
            narrasim_service::load_stories(&stories).unwrap(),
        )
        .unwrap();
        let view = store.create_session(Some("anchorhead-day2"), None).unwrap();
        store
            .post_questionnaire(&view.session_id, vec![4, 4, 4, 2, 4, 4, 2, 2, 2, 4], None)
            .unwrap();
        let script = load_script(stories.join("archetypes/speedrunner.json")).unwrap();
        for a in script.parse_actions().unwrap() {
            store.post_action(&view.session_id, a, None).unwrap();
        }
        store.create_session(Some("anchorhead-day2"), None).unwrap();
    }
    let traces = dir.path().join("humans.jsonl");
    let profiles = dir.path().join("profiles.json");
    let r = narrasim(&[
        "export", "--stories", &path_str(&stories), "--data", &path_str(&data), "--complete",
        "--traces", &path_str(&traces), "--profiles", &path_str(&profiles),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(stdout(&r).contains("exported 1 traces"));
    let out = dir.path().join("cmp.json");
    let r = narrasim(&[
        "compare", "--story", &story(), "--traces", &path_str(&traces), "--profiles",
        &path_str(&profiles), "--runs", "2", "--format", "json", "--out", &path_str(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["kind"], "comparison");
    assert_eq!(doc["data"].as_array().unwrap().len(), 1);
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut stream = std::net::TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(stream, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_answers_health_and_lists_stories() {
    let dir = tempfile::tempdir().unwrap();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_narrasim"))
        .args([
            "serve", "--stories", &path_str(&root().join("stories")), "--data",
            &path_str(dir.path()), "--port", &port.to_string(),
        ])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let started = Instant::now();
    let health = loop {
        if let Some(r) = http_get(port, "/api/health") {
            break r;
        }
        assert!(started.elapsed() < Duration::from_secs(20), "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    let stories = http_get(port, "/api/stories").unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(health.starts_with("HTTP/1.1 200"));
    assert!(health.contains("\"status\":\"ok\""));
    assert!(stories.contains("anchorhead-day2"));
}

#[test]
fn serve_fails_on_a_busy_port() {
    let dir = tempfile::tempdir().unwrap();
    let busy = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = busy.local_addr().unwrap().port().to_string();
    let r = narrasim(&[
        "serve", "--stories", &path_str(&root().join("stories")), "--data",
        &path_str(dir.path()), "--port", &port,
    ]);
    assert_eq!(code(&r), 2);
    let r = narrasim(&["serve", "--port", "99999"]);
    assert_eq!(code(&r), 2);
}
