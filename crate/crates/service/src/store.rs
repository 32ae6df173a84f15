//! Session storage.
//!
//! Each session is an append-only event log at `sessions/<id>.jsonl` under
//! the data directory, and `index.jsonl` lists sessions in creation order.
//! The in-memory state is rebuilt from these files on startup by replaying
//! every logged action through the engine.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use narrasim::profile::{
    apply_replay_rule, build_profile, LikertResponse, PlayerProfile, ProfileExport, Questionnaire,
};
use narrasim::story::{
    apply_action, initial_state, is_terminal, load_story_file, validate_story,
    Action, GameState, StoryDefinition,
};
use narrasim::trace::{AgentKind, Trace, TraceStep};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::view::{action_views, session_view, ActionsView, SessionView, ViewParts};

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEntry {
    Created {
        id: String,
        story_id: String,
        game_index: u32,
        prior_session_id: Option<String>,
        at: String,
    },
    Action {
        tick: u64,
        #[serde(flatten)]
        action: Action,
        token: Option<String>,
        triggered: Vec<String>,
        at: String,
    },
    Questionnaire {
        answers: LikertResponse,
        familiar: Option<bool>,
        /// Copied from the prior session rather than answered here.
        #[serde(default)]
        inherited: bool,
        at: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    story_id: String,
    game_index: u32,
    created_at: String,
}

#[derive(Debug, Clone)]
struct Answers {
    response: LikertResponse,
    familiar: Option<bool>,
}

#[derive(Debug)]
struct Session {
    id: String,
    story: Arc<StoryDefinition>,
    game_index: u32,
    prior: Option<String>,
    created_at: String,
    updated_at: String,
    state: GameState,
    steps: Vec<TraceStep>,
    tokens: HashMap<String, (Action, Vec<String>)>,
    answers: Option<Answers>,
    log: PathBuf,
}

impl Session {
    fn profile(&self) -> Option<PlayerProfile> {
        let answers = self.answers.as_ref()?;
        profile_for(answers, self.game_index).ok()
    }

    fn view(&self) -> SessionView {
        session_view(
            &self.story,
            &self.state,
            ViewParts {
                session_id: &self.id,
                game_index: self.game_index,
                prior: self.prior.as_deref(),
                created_at: &self.created_at,
                updated_at: &self.updated_at,
                profile: self.profile().map(ProfileExport::from),
            },
        )
    }

    fn ended(&self) -> bool {
        is_terminal(&self.story, &self.state).is_some()
    }

    fn trace(&self) -> Trace {
        let (plot_points, ending) = Trace::outcome(&self.story, &self.state);
        Trace {
            session_id: self.id.clone(),
            story_id: self.story.id.clone(),
            agent_kind: AgentKind::Human,
            seed: None,
            profile_used: self.profile(),
            actions: self.steps.clone(),
            plot_points,
            ending,
        }
    }

    fn append(&self, entry: &LogEntry) -> std::io::Result<()> {
        let mut file = OpenOptions::new().create(true).append(true).open(&self.log)?;
        let mut line = serde_json::to_vec(entry)?;
        line.push(b'\n');
        file.write_all(&line)?;
        file.sync_data()
    }

    /// Applies a logged entry to the in-memory state.
    fn replay(&mut self, entry: LogEntry) -> Result<(), String> {
        match entry {
            LogEntry::Created { .. } => Err("duplicate creation entry".into()),
            LogEntry::Action {
                tick,
                action,
                token,
                triggered,
                at,
            } => {
                if tick != self.state.tick {
                    return Err(format!("action at tick {tick}, state is at {}", self.state.tick));
                }
                let t = apply_action(&self.story, &self.state, &action).map_err(|e| e.to_string())?;
                if t.triggered != triggered {
                    return Err(format!("`{action}` no longer triggers {triggered:?}"));
                }
                self.record(action, token, t.triggered, t.state, at);
                Ok(())
            }
            LogEntry::Questionnaire {
                answers, familiar, at, ..
            } => {
                self.answers = Some(Answers {
                    response: answers,
                    familiar,
                });
                self.updated_at = at;
                Ok(())
            }
        }
    }

    fn record(
        &mut self,
        action: Action,
        token: Option<String>,
        triggered: Vec<String>,
        state: GameState,
        at: String,
    ) {
        self.steps.push(TraceStep {
            tick: self.state.tick,
            action: action.clone(),
        });
        if let Some(token) = token {
            self.tokens.insert(token, (action, triggered));
        }
        self.state = state;
        self.updated_at = at;
    }
}

fn profile_for(answers: &Answers, game_index: u32) -> Result<PlayerProfile, ServiceError> {
    let mut profile = build_profile(&Questionnaire::standard(), &answers.response)?;
    if let Some(familiar) = answers.familiar {
        profile = profile.with_boolean_familiarity(familiar);
    }
    Ok(apply_replay_rule(profile, game_index)?)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Which traces an export should include.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct TraceFilter {
    pub story: Option<String>,
    /// Only sessions that reached an ending.
    #[serde(default)]
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorySummary {
    pub id: String,
    pub title: String,
    pub start: Option<String>,
    pub plot_points: usize,
    pub endings: usize,
}

/// Result of posting an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub triggered: Vec<Triggered>,
    /// True when the token had already been applied and nothing changed.
    pub replayed: bool,
    pub view: SessionView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triggered {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireOutcome {
    pub session_id: String,
    pub game_index: u32,
    #[serde(flatten)]
    pub profile: ProfileExport,
}

/// Loads every `*.json` story in a directory, rejecting invalid ones.
pub fn load_stories(dir: &Path) -> Result<Vec<StoryDefinition>, ServiceError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut stories = Vec::new();
    for path in paths {
        let def = load_story_file(&path).map_err(|source| ServiceError::Story {
            path: path.clone(),
            source,
        })?;
        let report = validate_story(&def);
        if !report.is_valid() {
            return Err(ServiceError::InvalidStory {
                id: def.id,
                summary: report.summary(),
            });
        }
        stories.push(def);
    }
    Ok(stories)
}

/// Thread-safe session store. Operations on one session are serialized by
/// that session's lock; different sessions proceed independently.
#[derive(Debug)]
pub struct SessionStore {
    data_dir: PathBuf,
    stories: BTreeMap<String, Arc<StoryDefinition>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    /// Session ids in creation order. Also guards appends to the index.
    order: Mutex<Vec<String>>,
}

impl SessionStore {
    /// Opens a data directory, creating it if needed, and restores all
    /// sessions found in it.
    pub fn open(
        data_dir: impl Into<PathBuf>,
        stories: Vec<StoryDefinition>,
    ) -> Result<Self, ServiceError> {
        let data_dir = data_dir.into();
        fs::create_dir_all(data_dir.join("sessions"))?;
        let store = Self {
            stories: stories
                .into_iter()
                .map(|s| (s.id.clone(), Arc::new(s)))
                .collect(),
            data_dir,
            sessions: RwLock::new(HashMap::new()),
            order: Mutex::new(Vec::new()),
        };
        store.restore()?;
        Ok(store)
    }

    fn index_path(&self) -> PathBuf {
        self.data_dir.join("index.jsonl")
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.data_dir.join("sessions").join(format!("{id}.jsonl"))
    }

    fn restore(&self) -> Result<(), ServiceError> {
        let mut listed = Vec::new();
        if let Ok(file) = File::open(self.index_path()) {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: IndexEntry =
                    serde_json::from_str(&line).map_err(|e| ServiceError::Corrupt {
                        path: self.index_path(),
                        message: format!("line {}: {e}", i + 1),
                    })?;
                listed.push(entry.id);
            }
        }
        let mut on_disk: Vec<(String, std::time::SystemTime)> = Vec::new();
        for entry in fs::read_dir(self.data_dir.join("sessions"))? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = path.file_stem() {
                    let modified = fs::metadata(&path)?.modified()?;
                    on_disk.push((stem.to_string_lossy().into_owned(), modified));
                }
            }
        }
        on_disk.sort();

        let mut sessions = self.sessions.write().unwrap();
        let mut order = self.order.lock().unwrap();
        let mut unlisted = Vec::new();
        for (id, _) in &on_disk {
            if !listed.contains(id) {
                unlisted.push(id.clone());
            }
        }
        for id in listed.iter().chain(&unlisted) {
            if sessions.contains_key(id) {
                continue;
            }
            let path = self.log_path(id);
            if !path.exists() {
                tracing::warn!("index lists session {id} but its log is missing");
                continue;
            }
            let session = self.load_session(&path)?;
            sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
            order.push(id.clone());
        }
        for id in &unlisted {
            if let Some(s) = sessions.get(id) {
                let s = s.lock().unwrap();
                self.append_index(&s)?;
            }
        }
        Ok(())
    }

    fn load_session(&self, path: &Path) -> Result<Session, ServiceError> {
        let corrupt = |message: String| ServiceError::Corrupt {
            path: path.to_owned(),
            message,
        };
        let file = File::open(path)?;
        let lines = BufReader::new(file).lines().enumerate();
        let mut session = None;
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LogEntry = serde_json::from_str(&line)
                .map_err(|e| corrupt(format!("line {}: {e}", i + 1)))?;
            match (&mut session, entry) {
                (
                    None,
                    LogEntry::Created {
                        id,
                        story_id,
                        game_index,
                        prior_session_id,
                        at,
                    },
                ) => {
                    let story = self
                        .stories
                        .get(&story_id)
                        .cloned()
                        .ok_or_else(|| corrupt(format!("story `{story_id}` is not loaded")))?;
                    let state = initial_state(&story).map_err(|e| corrupt(e.to_string()))?;
                    session = Some(Session {
                        id,
                        story,
                        game_index,
                        prior: prior_session_id,
                        created_at: at.clone(),
                        updated_at: at,
                        state,
                        steps: Vec::new(),
                        tokens: HashMap::new(),
                        answers: None,
                        log: path.to_owned(),
                    });
                }
                (None, _) => return Err(corrupt("log does not start with a creation entry".into())),
                (Some(s), entry) => s
                    .replay(entry)
                    .map_err(|m| corrupt(format!("line {}: {m}", i + 1)))?,
            }
        }
        session.ok_or_else(|| corrupt("empty log".into()))
    }

    fn append_index(&self, session: &Session) -> std::io::Result<()> {
        let entry = IndexEntry {
            id: session.id.clone(),
            story_id: session.story.id.clone(),
            game_index: session.game_index,
            created_at: session.created_at.clone(),
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.index_path())?;
        let mut line = serde_json::to_vec(&entry)?;
        line.push(b'\n');
        file.write_all(&line)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_owned()))
    }

    pub fn stories(&self) -> Vec<StorySummary> {
        self.stories
            .values()
            .map(|s| StorySummary {
                id: s.id.clone(),
                title: s.title.clone(),
                start: s.world.start.clone(),
                plot_points: s.plot.len(),
                endings: s.plot.endings.len(),
            })
            .collect()
    }

    pub fn session_count(&self) -> usize {
        self.order.lock().unwrap().len()
    }

    /// Starts a session. A linked session continues from a finished prior
    /// one: its game index is one higher and it inherits the prior answers.
    pub fn create_session(
        &self,
        story_id: Option<&str>,
        prior_id: Option<&str>,
    ) -> Result<SessionView, ServiceError> {
        let mut game_index = 1;
        let mut inherited = None;
        let mut story_id = story_id.map(str::to_owned);
        if let Some(prior_id) = prior_id {
            let prior = self.session(prior_id)?;
            let prior = prior.lock().unwrap();
            if !prior.ended() {
                return Err(ServiceError::PriorUnfinished(prior_id.to_owned()));
            }
            match &story_id {
                Some(s) if *s != prior.story.id => {
                    return Err(ServiceError::PriorStoryMismatch {
                        prior: prior_id.to_owned(),
                        story: prior.story.id.clone(),
                    })
                }
                _ => story_id = Some(prior.story.id.clone()),
            }
            game_index = prior.game_index + 1;
            inherited = prior.answers.clone();
        }
        let story_id =
            story_id.ok_or_else(|| ServiceError::BadRequest("story_id is required".into()))?;
        let story = self
            .stories
            .get(&story_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownStory(story_id.clone()))?;
        let state = initial_state(&story).map_err(|e| ServiceError::InvalidStory {
            id: story_id.clone(),
            summary: e.to_string(),
        })?;

        let id = uuid::Uuid::new_v4().simple().to_string();
        let at = now();
        let mut session = Session {
            log: self.log_path(&id),
            id: id.clone(),
            story,
            game_index,
            prior: prior_id.map(str::to_owned),
            created_at: at.clone(),
            updated_at: at.clone(),
            state,
            steps: Vec::new(),
            tokens: HashMap::new(),
            answers: None,
        };
        session.append(&LogEntry::Created {
            id: id.clone(),
            story_id,
            game_index,
            prior_session_id: session.prior.clone(),
            at: at.clone(),
        })?;
        if let Some(answers) = inherited {
            session.append(&LogEntry::Questionnaire {
                answers: answers.response.clone(),
                familiar: answers.familiar,
                inherited: true,
                at,
            })?;
            session.answers = Some(answers);
        }

        let view = session.view();
        let mut order = self.order.lock().unwrap();
        self.append_index(&session)?;
        order.push(id.clone());
        self.sessions
            .write()
            .unwrap()
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn view(&self, id: &str) -> Result<SessionView, ServiceError> {
        Ok(self.session(id)?.lock().unwrap().view())
    }

    pub fn actions(&self, id: &str) -> Result<ActionsView, ServiceError> {
        let session = self.session(id)?;
        let s = session.lock().unwrap();
        Ok(ActionsView {
            available: if s.ended() {
                Vec::new()
            } else {
                action_views(&s.story, &s.state)
            },
            history: s.steps.clone(),
        })
    }

    /// Applies one action. Repeating a token returns the earlier outcome
    /// without applying the action again.
    pub fn post_action(
        &self,
        id: &str,
        action: Action,
        token: Option<String>,
    ) -> Result<ActionOutcome, ServiceError> {
        let session = self.session(id)?;
        let mut s = session.lock().unwrap();
        let labels = |story: &StoryDefinition, ids: &[String]| -> Vec<Triggered> {
            ids.iter()
                .map(|p| Triggered {
                    id: p.clone(),
                    label: story.plot.get(p).map(|pp| pp.label.clone()).unwrap_or_default(),
                })
                .collect()
        };
        if let Some(token) = &token {
            if let Some((done, triggered)) = s.tokens.get(token) {
                if *done != action {
                    return Err(ServiceError::TokenConflict(token.clone()));
                }
                return Ok(ActionOutcome {
                    triggered: labels(&s.story, triggered),
                    replayed: true,
                    view: s.view(),
                });
            }
        }
        if s.ended() {
            return Err(ServiceError::SessionEnded(id.to_owned()));
        }
        let t = apply_action(&s.story, &s.state, &action)?;
        let at = now();
        s.append(&LogEntry::Action {
            tick: s.state.tick,
            action: action.clone(),
            token: token.clone(),
            triggered: t.triggered.clone(),
            at: at.clone(),
        })?;
        let triggered = labels(&s.story, &t.triggered);
        s.record(action, token, t.triggered, t.state, at);
        Ok(ActionOutcome {
            triggered,
            replayed: false,
            view: s.view(),
        })
    }

    /// Stores questionnaire answers and returns the resulting profile.
    /// `familiar` replaces the familiarity answer with a yes/no choice.
    pub fn post_questionnaire(
        &self,
        id: &str,
        answers: Vec<i64>,
        familiar: Option<bool>,
    ) -> Result<QuestionnaireOutcome, ServiceError> {
        let session = self.session(id)?;
        let mut s = session.lock().unwrap();
        let answers = Answers {
            response: LikertResponse::new(answers)?,
            familiar,
        };
        let profile = profile_for(&answers, s.game_index)?;
        let at = now();
        s.append(&LogEntry::Questionnaire {
            answers: answers.response.clone(),
            familiar,
            inherited: false,
            at: at.clone(),
        })?;
        s.answers = Some(answers);
        s.updated_at = at;
        Ok(QuestionnaireOutcome {
            session_id: s.id.clone(),
            game_index: s.game_index,
            profile: profile.into(),
        })
    }

    /// Human traces in session creation order.
    pub fn traces(&self, filter: &TraceFilter) -> Vec<Trace> {
        let order = self.order.lock().unwrap().clone();
        let sessions = self.sessions.read().unwrap();
        order
            .iter()
            .filter_map(|id| sessions.get(id))
            .filter_map(|s| {
                let s = s.lock().unwrap();
                let wanted = filter.story.as_ref().is_none_or(|st| *st == s.story.id)
                    && (!filter.complete || s.ended());
                wanted.then(|| s.trace())
            })
            .collect()
    }

    /// Reported profiles keyed by session id, for sessions with answers.
    pub fn profiles(&self) -> BTreeMap<String, PlayerProfile> {
        let sessions = self.sessions.read().unwrap();
        sessions
            .iter()
            .filter_map(|(id, s)| Some((id.clone(), s.lock().unwrap().profile()?)))
            .collect()
    }
}
