use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use super::model::StoryDefinition;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    NoRoot,
    Cycle { plot_points: Vec<String> },
    Unreachable { plot_point: String },
    Uncovered { plot_point: String },
    NoEndings,
    AsymmetricExit { from: String, to: String },
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::NoRoot => write!(f, "no plot point without predecessors"),
            Problem::Cycle { plot_points } => {
                write!(f, "precedence cycle: {}", plot_points.join(" -> "))
            }
            Problem::Unreachable { plot_point } => {
                write!(f, "plot point `{plot_point}` is unreachable from the roots")
            }
            Problem::Uncovered { plot_point } => {
                write!(f, "plot point `{plot_point}` is not triggered by any action rule")
            }
            Problem::NoEndings => write!(f, "story has no ending"),
            Problem::AsymmetricExit { from, to } => {
                write!(f, "exit {from} -> {to} is not mirrored and not declared one-way")
            }
        }
    }
}

/// Structural checks on a story. Any problem makes the story invalid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub story: String,
    pub acyclic: bool,
    pub unreachable: Vec<String>,
    pub uncovered: Vec<String>,
    pub ending_count: usize,
    pub problems: Vec<Problem>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.is_valid() {
            "ok".to_owned()
        } else {
            self.problems
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "story: {}", self.story)?;
        writeln!(f, "acyclic: {}", self.acyclic)?;
        writeln!(f, "endings: {}", self.ending_count)?;
        writeln!(f, "problems: {}", self.problems.len())?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        write!(f, "{}", if self.is_valid() { "VALID" } else { "INVALID" })
    }
}

pub fn validate_story(def: &StoryDefinition) -> ValidationReport {
    let mut problems = Vec::new();
    let plot = &def.plot;

    if plot.roots().next().is_none() {
        problems.push(Problem::NoRoot);
    }

    let leftover = kahn_leftover(def);
    let acyclic = leftover.is_empty();
    if let Some(cycle) = find_cycle(def, &leftover) {
        problems.push(Problem::Cycle { plot_points: cycle });
    }

    let unreachable = unreachable_from_roots(def);
    problems.extend(unreachable.iter().map(|p| Problem::Unreachable {
        plot_point: p.clone(),
    }));

    let triggered: BTreeSet<&str> = def
        .world
        .action_rules
        .iter()
        .flat_map(|r| r.triggers.iter().map(String::as_str))
        .collect();
    let uncovered: Vec<String> = plot
        .plot_points
        .iter()
        .filter(|p| !triggered.contains(p.id.as_str()))
        .map(|p| p.id.clone())
        .collect();
    problems.extend(uncovered.iter().map(|p| Problem::Uncovered {
        plot_point: p.clone(),
    }));

    if plot.endings.is_empty() {
        problems.push(Problem::NoEndings);
    }

    for loc in &def.world.locations {
        for exit in &loc.exits {
            if loc.one_way.contains(exit) {
                continue;
            }
            let mirrored = def
                .world
                .location(exit)
                .is_some_and(|l| l.exits.contains(&loc.id));
            if !mirrored {
                problems.push(Problem::AsymmetricExit {
                    from: loc.id.clone(),
                    to: exit.clone(),
                });
            }
        }
    }

    ValidationReport {
        story: def.id.clone(),
        acyclic,
        unreachable,
        uncovered,
        ending_count: plot.endings.len(),
        problems,
    }
}

/// Kahn elimination; returns the plot points it could not consume.
fn kahn_leftover(def: &StoryDefinition) -> BTreeSet<String> {
    let mut indegree: BTreeMap<&str, usize> = def
        .plot
        .plot_points
        .iter()
        .map(|p| (p.id.as_str(), p.predecessors.len()))
        .collect();
    let successors = successor_map(def);
    let mut queue: VecDeque<&str> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&id, _)| id)
        .collect();
    while let Some(id) = queue.pop_front() {
        indegree.remove(id);
        for &succ in successors.get(id).into_iter().flatten() {
            if let Some(d) = indegree.get_mut(succ) {
                *d -= 1;
                if *d == 0 {
                    queue.push_back(succ);
                }
            }
        }
    }
    indegree.keys().map(|s| (*s).to_owned()).collect()
}

fn successor_map(def: &StoryDefinition) -> BTreeMap<&str, Vec<&str>> {
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for p in &def.plot.plot_points {
        for pred in &p.predecessors {
            succ.entry(pred.as_str()).or_default().push(p.id.as_str());
        }
    }
    succ
}

/// Walks predecessor links inside the non-eliminated set until a node
/// repeats, returning the cycle in successor order.
fn find_cycle(def: &StoryDefinition, leftover: &BTreeSet<String>) -> Option<Vec<String>> {
    let start = leftover.iter().next()?;
    let mut path: Vec<&str> = Vec::new();
    let mut current = start.as_str();
    loop {
        if let Some(pos) = path.iter().position(|&p| p == current) {
            let mut cycle: Vec<String> = path[pos..].iter().map(|s| (*s).to_owned()).collect();
            cycle.reverse();
            return Some(cycle);
        }
        path.push(current);
        // Every leftover node has at least one leftover predecessor.
        current = def
            .plot
            .get(current)?
            .predecessors
            .iter()
            .find(|p| leftover.contains(*p))?
            .as_str();
    }
}

fn unreachable_from_roots(def: &StoryDefinition) -> Vec<String> {
    let successors = successor_map(def);
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut queue: VecDeque<&str> = def.plot.roots().map(|p| p.id.as_str()).collect();
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id) {
            continue;
        }
        queue.extend(successors.get(id).into_iter().flatten().copied());
    }
    def.plot
        .plot_points
        .iter()
        .filter(|p| !seen.contains(p.id.as_str()))
        .map(|p| p.id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::story::load_story_str;

    fn story(plot: &str, rules: &str) -> StoryDefinition {
        load_story_str(&format!(
            r#"{{"start": "a", "locations": [{{"id": "a", "exits": []}}],
                "plot_points": {plot}, "action_rules": {rules}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn two_node_cycle_is_named() {
        let def = story(
            r#"[{"id": "r"}, {"id": "a", "predecessors": ["b"]},
                {"id": "b", "predecessors": ["a"], "is_ending": true}]"#,
            r#"[{"verb": "goto", "subject": "a", "triggers": ["r", "a", "b"]}]"#,
        );
        let report = validate_story(&def);
        assert!(!report.acyclic);
        let cycle = report
            .problems
            .iter()
            .find_map(|p| match p {
                Problem::Cycle { plot_points } => Some(plot_points.clone()),
                _ => None,
            })
            .expect("cycle reported");
        let mut sorted = cycle.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["a", "b"]);
        assert_eq!(report.unreachable, vec!["a", "b"]);
    }

    #[test]
    fn plot_point_without_rule_is_uncovered() {
        let def = story(
            r#"[{"id": "r"}, {"id": "e", "predecessors": ["r"], "is_ending": true}]"#,
            r#"[{"verb": "goto", "subject": "a", "triggers": ["r"]}]"#,
        );
        let report = validate_story(&def);
        assert_eq!(report.uncovered, vec!["e"]);
        assert!(report.problems.contains(&Problem::Uncovered {
            plot_point: "e".into()
        }));
        assert!(!report.is_valid());
    }

    #[test]
    fn clean_story_is_valid() {
        let def = story(
            r#"[{"id": "r"}, {"id": "e", "predecessors": ["r"], "is_ending": true}]"#,
            r#"[{"verb": "goto", "subject": "a", "triggers": ["r", "e"]}]"#,
        );
        let report = validate_story(&def);
        assert!(report.is_valid(), "{report}");
        assert_eq!(report.ending_count, 1);
    }
}
