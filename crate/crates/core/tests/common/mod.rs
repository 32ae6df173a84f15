#![allow(dead_code)]

use std::path::PathBuf;

use narrasim::story::{load_story_file, StoryDefinition};
use narrasim::trace::{load_script, Trace};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn shipped_story() -> StoryDefinition {
    load_story_file(repo_root().join("stories/anchorhead-day2.json")).unwrap()
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> StoryDefinition {
    load_story_file(fixture_path(&format!("{name}.json"))).unwrap()
}

pub fn archetype(name: &str, def: &StoryDefinition) -> Trace {
    load_script(repo_root().join(format!("stories/archetypes/{name}.json")))
        .unwrap()
        .play(def)
        .unwrap()
}

pub const RECORDED_ORDER: [&str; 26] = [
    "examine-album",
    "get-card",
    "get-safe-combo",
    "open-safe",
    "get-crypt-key",
    "get-silver-locket",
    "read-basement-clippings",
    "read-bedroom-pages",
    "find-williams-coffin",
    "see-skull",
    "get-skull",
    "start-talking-to-bum",
    "get-flask",
    "give-bum-flask",
    "ask-bum-about-photo",
    "get-library-book",
    "no-more-flasks",
    "find-magic-shop",
    "buy-magic-ball",
    "get-amulet",
    "ask-bum-about-william",
    "open-puzzle-box",
    "show-bum-skull",
    "give-bum-amulet",
    "reject-amulet-from-player",
    "discover-book-in-sewer",
];
