use narrasim::profile::{ProfileExport, Questionnaire, Statement};
use narrasim::story::{available_actions, is_terminal, Action, GameState, StoryDefinition, Verb};
use narrasim::trace::TraceStep;
use serde::{Deserialize, Serialize};

/// Something the player can see, by id and display name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Named {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationView {
    pub id: String,
    pub name: String,
    pub description: String,
}

/// An available action with a button label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionView {
    #[serde(flatten)]
    pub action: Action,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndingView {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireView {
    pub statements: Vec<StatementView>,
    pub answered: bool,
    /// Profile built from the answers, after the replay rule.
    pub profile: Option<ProfileExport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementView {
    #[serde(flatten)]
    pub statement: Statement,
    /// Scale ends shown to the player.
    pub scale: [String; 2],
}

/// Everything the play client needs to render a session. Plot points are
/// only reported as a count, except for a reached ending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub story_id: String,
    pub game_index: u32,
    pub prior_session_id: Option<String>,
    pub created_at: String,
    pub updated_at: String,
    pub location: LocationView,
    pub items_here: Vec<Named>,
    pub characters_here: Vec<Named>,
    pub inventory: Vec<Named>,
    pub actions: Vec<ActionView>,
    pub discovered_count: usize,
    pub tick: u64,
    pub ended: bool,
    pub ending: Option<EndingView>,
    pub questionnaire: QuestionnaireView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionsView {
    pub available: Vec<ActionView>,
    pub history: Vec<TraceStep>,
}

pub(crate) fn display_name(def: &StoryDefinition, id: &str) -> String {
    let name = def
        .world
        .item(id)
        .map(|i| i.name.as_str())
        .or_else(|| def.world.character(id).map(|c| c.name.as_str()))
        .or_else(|| def.world.location(id).map(|l| l.name.as_str()))
        .unwrap_or_default();
    if name.is_empty() {
        id.replace('-', " ")
    } else {
        name.to_owned()
    }
}

fn named(def: &StoryDefinition, id: &str) -> Named {
    Named {
        id: id.to_owned(),
        name: display_name(def, id),
    }
}

pub fn action_label(def: &StoryDefinition, action: &Action) -> String {
    let subject = display_name(def, &action.subject);
    let object = action.object.as_deref().map(|o| display_name(def, o));
    match (action.verb, object) {
        (Verb::Goto, _) => format!("Go to {subject}"),
        (Verb::Talk, _) => format!("Talk to {subject}"),
        (Verb::Ask, Some(o)) => format!("Ask {subject} about {o}"),
        (Verb::Give, Some(o)) => format!("Give {subject} to {o}"),
        (Verb::Show, Some(o)) => format!("Show {subject} to {o}"),
        (Verb::Use, Some(o)) => format!("Use {subject} on {o}"),
        (verb, Some(o)) => format!("{} {subject} {o}", capitalized(verb.as_str())),
        (verb, None) => format!("{} {subject}", capitalized(verb.as_str())),
    }
}

fn capitalized(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn action_views(def: &StoryDefinition, state: &GameState) -> Vec<ActionView> {
    available_actions(def, state)
        .into_iter()
        .map(|action| ActionView {
            label: action_label(def, &action),
            action,
        })
        .collect()
}

pub(crate) fn questionnaire_view(profile: Option<ProfileExport>) -> QuestionnaireView {
    let statements = Questionnaire::standard()
        .statements
        .into_iter()
        .enumerate()
        .map(|(i, statement)| StatementView {
            statement,
            scale: if i < 2 {
                ["very low".into(), "very high".into()]
            } else {
                ["strongly disagree".into(), "strongly agree".into()]
            },
        })
        .collect();
    QuestionnaireView {
        statements,
        answered: profile.is_some(),
        profile,
    }
}

pub(crate) struct ViewParts<'a> {
    pub session_id: &'a str,
    pub game_index: u32,
    pub prior: Option<&'a str>,
    pub created_at: &'a str,
    pub updated_at: &'a str,
    pub profile: Option<ProfileExport>,
}

pub(crate) fn session_view(def: &StoryDefinition, state: &GameState, parts: ViewParts) -> SessionView {
    let loc = def.world.location(&state.current_location);
    let ending = is_terminal(def, state).map(|id| EndingView {
        id: id.to_owned(),
        label: def
            .plot
            .get(id)
            .map(|p| p.label.clone())
            .unwrap_or_default(),
    });
    SessionView {
        session_id: parts.session_id.to_owned(),
        story_id: def.id.clone(),
        game_index: parts.game_index,
        prior_session_id: parts.prior.map(str::to_owned),
        created_at: parts.created_at.to_owned(),
        updated_at: parts.updated_at.to_owned(),
        location: LocationView {
            id: state.current_location.clone(),
            name: display_name(def, &state.current_location),
            description: loc.map(|l| l.description.clone()).unwrap_or_default(),
        },
        items_here: state.items_here().map(|i| named(def, i)).collect(),
        characters_here: def
            .world
            .characters_at(&state.current_location)
            .map(|c| named(def, &c.id))
            .collect(),
        inventory: state.inventory.iter().map(|i| named(def, i)).collect(),
        actions: if ending.is_some() {
            Vec::new()
        } else {
            action_views(def, state)
        },
        discovered_count: state.discovered.len(),
        tick: state.tick,
        ended: ending.is_some(),
        ending,
        questionnaire: questionnaire_view(parts.profile),
    }
}
