//! Story document types: the world, the plot graph, and the rules that tie
//! player actions to plot points.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::ActionError;

/// Verbs understood by the engine. Variants are declared in alphabetical
/// order so the derived `Ord` sorts actions by verb name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Ask,
    Buy,
    Examine,
    Give,
    Goto,
    Open,
    Read,
    Show,
    Take,
    Talk,
    Use,
}

/// Whether a verb takes a second argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectArity {
    Forbidden,
    Required,
    Optional,
}

impl Verb {
    pub const ALL: [Verb; 11] = [
        Verb::Ask,
        Verb::Buy,
        Verb::Examine,
        Verb::Give,
        Verb::Goto,
        Verb::Open,
        Verb::Read,
        Verb::Show,
        Verb::Take,
        Verb::Talk,
        Verb::Use,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Ask => "ask",
            Verb::Buy => "buy",
            Verb::Examine => "examine",
            Verb::Give => "give",
            Verb::Goto => "goto",
            Verb::Open => "open",
            Verb::Read => "read",
            Verb::Show => "show",
            Verb::Take => "take",
            Verb::Talk => "talk",
            Verb::Use => "use",
        }
    }

    pub fn object_arity(self) -> ObjectArity {
        match self {
            Verb::Ask | Verb::Give | Verb::Show => ObjectArity::Required,
            Verb::Use => ObjectArity::Optional,
            _ => ObjectArity::Forbidden,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Deserialize)]
struct RawAction {
    verb: Verb,
    subject: String,
    #[serde(default)]
    object: Option<String>,
}

/// One player command. Ordering is by verb, then subject, then object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAction")]
pub struct Action {
    pub verb: Verb,
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
}

impl TryFrom<RawAction> for Action {
    type Error = ActionError;

    fn try_from(raw: RawAction) -> Result<Self, Self::Error> {
        Action::new(raw.verb, raw.subject, raw.object)
    }
}

impl Action {
    /// Builds an action, checking the verb's object arity.
    pub fn new(
        verb: Verb,
        subject: impl Into<String>,
        object: Option<String>,
    ) -> Result<Self, ActionError> {
        let subject = subject.into();
        if subject.is_empty() {
            return Err(ActionError::EmptySubject(verb));
        }
        match (verb.object_arity(), &object) {
            (ObjectArity::Required, None) => return Err(ActionError::MissingObject(verb)),
            (ObjectArity::Forbidden, Some(o)) => {
                return Err(ActionError::UnexpectedObject(verb, o.clone()))
            }
            _ => {}
        }
        Ok(Self {
            verb,
            subject,
            object,
        })
    }

    /// Shorthand for verbs without an object. Panics on arity mismatch, so
    /// only use it with literal verbs.
    pub fn simple(verb: Verb, subject: &str) -> Self {
        Self::new(verb, subject, None).expect("verb requires an object")
    }

    pub fn with_object(verb: Verb, subject: &str, object: &str) -> Self {
        Self::new(verb, subject, Some(object.to_owned())).expect("verb forbids an object")
    }

    pub fn goto(location: &str) -> Self {
        Self::simple(Verb::Goto, location)
    }

    /// Ids of the entities this action mentions.
    pub fn entities(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.subject.as_str()).chain(self.object.as_deref())
    }

    pub fn mentions(&self, id: &str) -> bool {
        self.subject == id || self.object.as_deref() == Some(id)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.object {
            Some(o) => write!(f, "{} {} {}", self.verb, self.subject, o),
            None => write!(f, "{} {}", self.verb, self.subject),
        }
    }
}

/// Parses `verb subject [object]`, the same form `Display` writes.
impl std::str::FromStr for Action {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let malformed = || ActionError::Malformed(s.to_owned());
        let (verb, subject, object) = match words.as_slice() {
            [v, s] => (*v, *s, None),
            [v, s, o] => (*v, *s, Some((*o).to_owned())),
            _ => return Err(malformed()),
        };
        let verb = Verb::ALL
            .into_iter()
            .find(|v| v.as_str() == verb)
            .ok_or_else(malformed)?;
        Action::new(verb, subject, object)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub exits: Vec<String>,
    /// Exits that are not mirrored by the destination.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub one_way: Vec<String>,
    #[serde(default)]
    pub is_indoor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Initial location. `None` with no holder means the item is hidden
    /// until a rule places it.
    #[serde(default)]
    pub location: Option<String>,
    /// `"player"` starts the item in the inventory; a character id keeps
    /// it out of sight with that character.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder: Option<String>,
    #[serde(default)]
    pub takeable: bool,
    #[serde(default)]
    pub importance_hint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Character {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub location: String,
    #[serde(default)]
    pub topics: Vec<String>,
}

/// A state predicate guarding an action rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    At(String),
    Has(String),
    Lacks(String),
    Flag(String),
    NotFlag(String),
    Discovered(String),
    Undiscovered(String),
    Visited(String),
}

/// A state change produced by an action rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    /// Put an item at a location (from anywhere, including the inventory).
    Place { item: String, at: String },
    /// Move an item into the inventory.
    Give(String),
    /// Take an item out of the game.
    Remove(String),
    SetFlag(String),
    ClearFlag(String),
    /// Move the player.
    Move(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawActionRule")]
pub struct ActionRule {
    pub verb: Verb,
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default)]
    pub requires: Vec<Condition>,
    #[serde(default)]
    pub effects: Vec<Effect>,
    #[serde(default)]
    pub triggers: Vec<String>,
}

#[derive(Deserialize)]
struct RawActionRule {
    verb: Verb,
    subject: String,
    #[serde(default)]
    object: Option<String>,
    #[serde(default)]
    requires: Vec<Condition>,
    #[serde(default)]
    effects: Vec<Effect>,
    #[serde(default)]
    triggers: Vec<String>,
}

impl TryFrom<RawActionRule> for ActionRule {
    type Error = ActionError;

    fn try_from(raw: RawActionRule) -> Result<Self, Self::Error> {
        Action::new(raw.verb, raw.subject.as_str(), raw.object.clone())?;
        Ok(Self {
            verb: raw.verb,
            subject: raw.subject,
            object: raw.object,
            requires: raw.requires,
            effects: raw.effects,
            triggers: raw.triggers,
        })
    }
}

impl ActionRule {
    pub fn action(&self) -> Action {
        Action {
            verb: self.verb,
            subject: self.subject.clone(),
            object: self.object.clone(),
        }
    }

    pub fn matches(&self, action: &Action) -> bool {
        self.verb == action.verb && self.subject == action.subject && self.object == action.object
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub predecessors: Vec<String>,
    #[serde(default)]
    pub is_ending: bool,
}

/// Belief pattern that makes an agent adopt a story-specific goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefCondition {
    /// The agent has seen this item or character.
    Seen(String),
    Has(String),
    Discovered(String),
}

/// A story-specific (higher-level) goal the player agent may adopt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryGoal {
    pub id: String,
    pub trigger: Vec<BeliefCondition>,
    pub action: Action,
    /// Plot point whose discovery marks the goal achieved. Without it the
    /// goal is achieved once its action has been performed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_when: Option<String>,
}

fn non_empty_plot_points<'de, D>(deserializer: D) -> Result<Vec<PlotPoint>, D::Error>
where
    D: Deserializer<'de>,
{
    let points = Vec::<PlotPoint>::deserialize(deserializer)?;
    if points.is_empty() {
        return Err(serde::de::Error::custom("no plot points"));
    }
    Ok(points)
}

/// On-disk story document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoryDocument {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default)]
    pub start: Option<String>,
    pub locations: Vec<Location>,
    #[serde(default)]
    pub items: Vec<Item>,
    #[serde(default)]
    pub characters: Vec<Character>,
    #[serde(deserialize_with = "non_empty_plot_points")]
    pub plot_points: Vec<PlotPoint>,
    #[serde(default)]
    pub action_rules: Vec<ActionRule>,
    #[serde(default)]
    pub goals: Vec<StoryGoal>,
}

/// Locations, items, characters and action rules.
#[derive(Debug, Clone)]
pub struct WorldModel {
    pub start: Option<String>,
    pub locations: Vec<Location>,
    pub items: Vec<Item>,
    pub characters: Vec<Character>,
    pub action_rules: Vec<ActionRule>,
    location_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    character_index: HashMap<String, usize>,
}

impl WorldModel {
    pub(crate) fn new(
        start: Option<String>,
        locations: Vec<Location>,
        items: Vec<Item>,
        characters: Vec<Character>,
        action_rules: Vec<ActionRule>,
    ) -> Self {
        let location_index = index_by(&locations, |l| &l.id);
        let item_index = index_by(&items, |i| &i.id);
        let character_index = index_by(&characters, |c| &c.id);
        Self {
            start,
            locations,
            items,
            characters,
            action_rules,
            location_index,
            item_index,
            character_index,
        }
    }

    pub fn location(&self, id: &str) -> Option<&Location> {
        self.location_index.get(id).map(|&i| &self.locations[i])
    }

    pub fn item(&self, id: &str) -> Option<&Item> {
        self.item_index.get(id).map(|&i| &self.items[i])
    }

    pub fn character(&self, id: &str) -> Option<&Character> {
        self.character_index.get(id).map(|&i| &self.characters[i])
    }

    pub fn characters_at<'a>(&'a self, location: &'a str) -> impl Iterator<Item = &'a Character> {
        self.characters.iter().filter(move |c| c.location == location)
    }

    pub fn rules_for<'a>(&'a self, action: &'a Action) -> impl Iterator<Item = &'a ActionRule> {
        self.action_rules.iter().filter(move |r| r.matches(action))
    }

    pub fn is_important(&self, id: &str) -> bool {
        self.item(id).is_some_and(|i| i.importance_hint) || self.character(id).is_some()
    }
}

/// Plot points and their precedence constraints.
#[derive(Debug, Clone)]
pub struct PlotGraph {
    pub plot_points: Vec<PlotPoint>,
    pub endings: BTreeSet<String>,
    index: HashMap<String, usize>,
}

impl PlotGraph {
    pub fn new(plot_points: Vec<PlotPoint>) -> Self {
        let endings = plot_points
            .iter()
            .filter(|p| p.is_ending)
            .map(|p| p.id.clone())
            .collect();
        let index = index_by(&plot_points, |p| &p.id);
        Self {
            plot_points,
            endings,
            index,
        }
    }

    pub fn get(&self, id: &str) -> Option<&PlotPoint> {
        self.index.get(id).map(|&i| &self.plot_points[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn is_ending(&self, id: &str) -> bool {
        self.endings.contains(id)
    }

    pub fn roots(&self) -> impl Iterator<Item = &PlotPoint> {
        self.plot_points.iter().filter(|p| p.predecessors.is_empty())
    }

    pub fn len(&self) -> usize {
        self.plot_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plot_points.is_empty()
    }

    /// True when every plot point in `sequence` appears after all of its
    /// predecessors and no id repeats.
    pub fn respects_precedence<S: AsRef<str>>(&self, sequence: &[S]) -> bool {
        let mut seen = BTreeSet::new();
        for id in sequence {
            let id = id.as_ref();
            let Some(point) = self.get(id) else {
                return false;
            };
            if !point.predecessors.iter().all(|p| seen.contains(p.as_str())) {
                return false;
            }
            if !seen.insert(id) {
                return false;
            }
        }
        true
    }
}

fn index_by<T>(items: &[T], key: impl Fn(&T) -> &String) -> HashMap<String, usize> {
    items
        .iter()
        .enumerate()
        .map(|(i, t)| (key(t).clone(), i))
        .collect()
}

/// A loaded, reference-checked story. Immutable once built.
#[derive(Debug, Clone)]
pub struct StoryDefinition {
    pub id: String,
    pub title: String,
    pub note: Option<String>,
    pub world: WorldModel,
    pub plot: PlotGraph,
    pub goals: Vec<StoryGoal>,
}
