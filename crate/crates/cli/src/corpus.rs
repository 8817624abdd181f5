use std::collections::BTreeMap;
use std::path::Path;

use qslant_core::exprmap::MapSpec;
use qslant_core::hstructure::StructureTag;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Expected classification facts for one corpus map. Angles are
/// expressions in the map's parameters (`"pi/2 - (alpha + beta)"`), or
/// `"complex"` for an empty `D₂` with a nontrivial `D₁`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default)]
    pub angles: BTreeMap<StructureTag, String>,
    #[serde(default)]
    pub d1_dims: BTreeMap<StructureTag, usize>,
    #[serde(default)]
    pub d2_dims: BTreeMap<StructureTag, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    #[serde(flatten)]
    pub spec: MapSpec,
    #[serde(default)]
    pub expect: Expectation,
}

impl CorpusEntry {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| qslant_core::Error::Spec(e.to_string()).into())
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }
}

const BUILTIN: [(&str, &str); 7] = [
    ("example_5_5", include_str!("../corpus/example_5_5.json")),
    ("example_5_6", include_str!("../corpus/example_5_6.json")),
    ("example_5_7", include_str!("../corpus/example_5_7.json")),
    ("example_5_8", include_str!("../corpus/example_5_8.json")),
    ("example_5_9", include_str!("../corpus/example_5_9.json")),
    ("example_5_10", include_str!("../corpus/example_5_10.json")),
    ("sphere_norm", include_str!("../corpus/sphere_norm.json")),
];

fn with_name(mut entry: CorpusEntry, fallback: &str) -> CorpusEntry {
    if entry.spec.name.is_empty() {
        entry.spec.name = fallback.to_string();
    }
    entry
}

/// The corpus compiled into the binary, in a fixed order.
pub fn builtin_corpus() -> Vec<CorpusEntry> {
    BUILTIN
        .iter()
        .map(|(name, text)| {
            with_name(
                CorpusEntry::from_json(text).expect("built-in corpus entries are valid"),
                name,
            )
        })
        .collect()
}

pub fn builtin(name: &str) -> Option<CorpusEntry> {
    builtin_corpus().into_iter().find(|e| e.name() == name)
}

/// Loads every `*.json` file of `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> CliResult<Vec<CorpusEntry>> {
    let listing = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for item in listing {
        let path = item.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(CliError::Config(format!(
            "corpus directory {} contains no .json map specs",
            dir.display()
        )));
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let entry = CorpusEntry::from_json(&text).map_err(|e| CliError::io(p, e))?;
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("map");
            Ok(with_name(entry, stem))
        })
        .collect()
}
