use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::model::*;
use crate::error::StoryError;

/// Parses a story document and resolves every id it mentions.
pub fn load_story<R: Read>(source: R) -> Result<StoryDefinition, StoryError> {
    let doc: StoryDocument = serde_json::from_reader(source)?;
    build_story(doc, None)
}

/// Loads a story file; the file stem is the story id unless the document
/// declares one.
pub fn load_story_file(path: impl AsRef<Path>) -> Result<StoryDefinition, StoryError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let doc: StoryDocument = serde_json::from_reader(BufReader::new(file))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    build_story(doc, stem)
}

pub fn load_story_str(text: &str) -> Result<StoryDefinition, StoryError> {
    load_story(text.as_bytes())
}

pub fn build_story(
    doc: StoryDocument,
    fallback_id: Option<String>,
) -> Result<StoryDefinition, StoryError> {
    check_duplicates(&doc)?;
    let missing = unresolved(&doc);
    if !missing.is_empty() {
        return Err(StoryError::UnresolvedReferences(missing));
    }
    let id = doc
        .id
        .or(fallback_id)
        .unwrap_or_else(|| "story".to_owned());
    let title = doc.title.unwrap_or_else(|| id.clone());
    Ok(StoryDefinition {
        title,
        id,
        note: doc.note,
        world: WorldModel::new(
            doc.start,
            doc.locations,
            doc.items,
            doc.characters,
            doc.action_rules,
        ),
        plot: PlotGraph::new(doc.plot_points),
        goals: doc.goals,
    })
}

fn check_duplicates(doc: &StoryDocument) -> Result<(), StoryError> {
    let mut dups = BTreeSet::new();
    let mut seen = HashSet::new();
    for id in doc.locations.iter().map(|l| &l.id) {
        if !seen.insert(id.as_str()) {
            dups.insert(format!("location {id}"));
        }
    }
    // Items and characters share one namespace because both appear as
    // action subjects.
    let mut seen = HashSet::new();
    for id in doc
        .items
        .iter()
        .map(|i| &i.id)
        .chain(doc.characters.iter().map(|c| &c.id))
    {
        if !seen.insert(id.as_str()) {
            dups.insert(format!("entity {id}"));
        }
    }
    let mut seen = HashSet::new();
    for id in doc.plot_points.iter().map(|p| &p.id) {
        if !seen.insert(id.as_str()) {
            dups.insert(format!("plot point {id}"));
        }
    }
    let mut seen = HashSet::new();
    for id in doc.goals.iter().map(|g| &g.id) {
        if !seen.insert(id.as_str()) {
            dups.insert(format!("goal {id}"));
        }
    }
    if dups.is_empty() {
        Ok(())
    } else {
        Err(StoryError::DuplicateIds(dups.into_iter().collect()))
    }
}

struct Names<'a> {
    locations: HashSet<&'a str>,
    items: HashSet<&'a str>,
    characters: HashSet<&'a str>,
    plot: HashSet<&'a str>,
}

fn unresolved(doc: &StoryDocument) -> Vec<String> {
    let names = Names {
        locations: doc.locations.iter().map(|l| l.id.as_str()).collect(),
        items: doc.items.iter().map(|i| i.id.as_str()).collect(),
        characters: doc.characters.iter().map(|c| c.id.as_str()).collect(),
        plot: doc.plot_points.iter().map(|p| p.id.as_str()).collect(),
    };
    let mut missing = Vec::new();
    let mut need = |ok: bool, what: String| {
        if !ok {
            missing.push(what);
        }
    };

    if let Some(start) = &doc.start {
        need(
            names.locations.contains(start.as_str()),
            format!("start -> location `{start}`"),
        );
    }
    for loc in &doc.locations {
        for exit in &loc.exits {
            need(
                names.locations.contains(exit.as_str()),
                format!("locations[{}].exits -> location `{exit}`", loc.id),
            );
        }
        for exit in &loc.one_way {
            need(
                loc.exits.contains(exit),
                format!("locations[{}].one_way -> exit `{exit}`", loc.id),
            );
        }
    }
    for item in &doc.items {
        if let Some(at) = &item.location {
            need(
                names.locations.contains(at.as_str()),
                format!("items[{}].location -> location `{at}`", item.id),
            );
        }
        if let Some(holder) = &item.holder {
            need(
                holder == "player" || names.characters.contains(holder.as_str()),
                format!("items[{}].holder -> character `{holder}`", item.id),
            );
        }
    }
    for ch in &doc.characters {
        need(
            names.locations.contains(ch.location.as_str()),
            format!("characters[{}].location -> location `{}`", ch.id, ch.location),
        );
    }
    for point in &doc.plot_points {
        for pred in &point.predecessors {
            need(
                names.plot.contains(pred.as_str()),
                format!("plot_points[{}].predecessors -> plot point `{pred}`", point.id),
            );
        }
    }
    for (i, rule) in doc.action_rules.iter().enumerate() {
        let ctx = format!("action_rules[{i}]");
        for problem in action_refs(&names, doc, rule.verb, &rule.subject, rule.object.as_deref())
        {
            need(false, format!("{ctx}: {problem}"));
        }
        for cond in &rule.requires {
            if let Some(problem) = condition_ref(&names, cond) {
                need(false, format!("{ctx}.requires: {problem}"));
            }
        }
        for effect in &rule.effects {
            for problem in effect_refs(&names, effect) {
                need(false, format!("{ctx}.effects: {problem}"));
            }
        }
        for t in &rule.triggers {
            need(
                names.plot.contains(t.as_str()),
                format!("{ctx}.triggers -> plot point `{t}`"),
            );
        }
    }
    for goal in &doc.goals {
        let ctx = format!("goals[{}]", goal.id);
        let a = &goal.action;
        for problem in action_refs(&names, doc, a.verb, &a.subject, a.object.as_deref()) {
            need(false, format!("{ctx}: {problem}"));
        }
        for cond in &goal.trigger {
            let ok = match cond {
                BeliefCondition::Seen(id) => {
                    names.items.contains(id.as_str()) || names.characters.contains(id.as_str())
                }
                BeliefCondition::Has(id) => names.items.contains(id.as_str()),
                BeliefCondition::Discovered(id) => names.plot.contains(id.as_str()),
            };
            need(ok, format!("{ctx}.trigger -> `{cond:?}`"));
        }
        if let Some(pp) = &goal.achieved_when {
            need(
                names.plot.contains(pp.as_str()),
                format!("{ctx}.achieved_when -> plot point `{pp}`"),
            );
        }
    }
    missing
}

fn action_refs(
    names: &Names<'_>,
    doc: &StoryDocument,
    verb: Verb,
    subject: &str,
    object: Option<&str>,
) -> Vec<String> {
    let item = |id: &str| names.items.contains(id);
    let character = |id: &str| names.characters.contains(id);
    let mut out = Vec::new();
    let subject_ok = match verb {
        Verb::Goto => names.locations.contains(subject),
        Verb::Talk | Verb::Ask => character(subject),
        Verb::Examine => item(subject) || character(subject),
        _ => item(subject),
    };
    if !subject_ok {
        out.push(format!("{verb} subject `{subject}` not found"));
    }
    match (verb, object) {
        (Verb::Give | Verb::Show, Some(o)) if !character(o) => {
            out.push(format!("{verb} object -> character `{o}` not found"));
        }
        (Verb::Use, Some(o)) if !(item(o) || character(o)) => {
            out.push(format!("use object `{o}` not found"));
        }
        (Verb::Ask, Some(topic)) => {
            let known = doc
                .characters
                .iter()
                .find(|c| c.id == subject)
                .is_some_and(|c| c.topics.iter().any(|t| t == topic));
            if subject_ok && !known {
                out.push(format!("ask topic `{topic}` is not a topic of `{subject}`"));
            }
        }
        _ => {}
    }
    out
}

fn condition_ref(names: &Names<'_>, cond: &Condition) -> Option<String> {
    let (ok, what) = match cond {
        Condition::At(id) | Condition::Visited(id) => {
            (names.locations.contains(id.as_str()), "location")
        }
        Condition::Has(id) | Condition::Lacks(id) => (names.items.contains(id.as_str()), "item"),
        Condition::Discovered(id) | Condition::Undiscovered(id) => {
            (names.plot.contains(id.as_str()), "plot point")
        }
        Condition::Flag(_) | Condition::NotFlag(_) => (true, "flag"),
    };
    (!ok).then(|| format!("{cond:?} -> unknown {what}"))
}

fn effect_refs(names: &Names<'_>, effect: &Effect) -> Vec<String> {
    let mut out = Vec::new();
    match effect {
        Effect::Place { item, at } => {
            if !names.items.contains(item.as_str()) {
                out.push(format!("place -> unknown item `{item}`"));
            }
            if !names.locations.contains(at.as_str()) {
                out.push(format!("place -> unknown location `{at}`"));
            }
        }
        Effect::Give(item) | Effect::Remove(item) => {
            if !names.items.contains(item.as_str()) {
                out.push(format!("{effect:?} -> unknown item"));
            }
        }
        Effect::Move(loc) => {
            if !names.locations.contains(loc.as_str()) {
                out.push(format!("move -> unknown location `{loc}`"));
            }
        }
        Effect::SetFlag(_) | Effect::ClearFlag(_) => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "start": "a",
        "locations": [{"id": "a", "exits": []}],
        "plot_points": [{"id": "p", "predecessors": [], "is_ending": true}],
        "action_rules": [{"verb": "goto", "subject": "a", "triggers": ["p"]}]
    }"#;

    #[test]
    fn minimal_story_loads() {
        let def = load_story_str(MINIMAL).unwrap();
        assert_eq!(def.id, "story");
        assert_eq!(def.plot.endings.len(), 1);
    }

    #[test]
    fn empty_plot_points_is_a_parse_error() {
        let text = r#"{"start": "a", "locations": [{"id": "a", "exits": []}],
            "plot_points": []}"#;
        match load_story_str(text) {
            Err(StoryError::Parse { message, line, .. }) => {
                assert!(message.contains("no plot points"), "{message}");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = load_story_str("{\n  \"start\": ,\n}").unwrap_err();
        match err {
            StoryError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn unknown_location_is_unresolved() {
        let text = MINIMAL.replace(r#""exits": []"#, r#""exits": ["nowhere"]"#);
        match load_story_str(&text) {
            Err(StoryError::UnresolvedReferences(missing)) => {
                assert_eq!(missing.len(), 1);
                assert!(missing[0].contains("nowhere"));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn give_without_object_fails_to_parse() {
        let text = MINIMAL.replace(
            r#"{"verb": "goto", "subject": "a", "triggers": ["p"]}"#,
            r#"{"verb": "give", "subject": "x", "triggers": ["p"]}"#,
        );
        let err = load_story_str(&text).unwrap_err();
        assert!(err.to_string().contains("requires an object"), "{err}");
    }

    #[test]
    fn duplicate_plot_points_rejected() {
        let text = MINIMAL.replace(
            r#"[{"id": "p", "predecessors": [], "is_ending": true}]"#,
            r#"[{"id": "p"}, {"id": "p"}]"#,
        );
        assert!(matches!(
            load_story_str(&text),
            Err(StoryError::DuplicateIds(_))
        ));
    }
}
