use std::collections::{BTreeMap, BTreeSet};

use super::{Category, ChangeOp, DiffResult};
use crate::ontology::OntologyVersion;

/// Pairwise-disjoint partition of the concepts named by a set of ops.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptClasses {
    pub ext: BTreeSet<String>,
    pub red: BTreeSet<String>,
    pub rev: BTreeSet<String>,
}

/// Purely extending concepts go to `ext`, purely reducing ones to `red`,
/// everything else (any revision op, or a mix) to `rev`.
pub fn classify_concepts(ops: &[ChangeOp]) -> ConceptClasses {
    #[derive(Default)]
    struct Seen {
        ext: bool,
        red: bool,
        rev: bool,
    }
    let mut per_concept: BTreeMap<&str, Seen> = BTreeMap::new();
    for op in ops {
        for subject in &op.subjects {
            let seen = per_concept.entry(subject).or_default();
            match op.category() {
                Category::Extension => seen.ext = true,
                Category::Reduction => seen.red = true,
                Category::Revision => seen.rev = true,
            }
        }
    }
    let mut classes = ConceptClasses::default();
    for (acc, seen) in per_concept {
        let target = match seen {
            Seen {
                ext: true,
                red: false,
                rev: false,
            } => &mut classes.ext,
            Seen {
                ext: false,
                red: true,
                rev: false,
            } => &mut classes.red,
            _ => &mut classes.rev,
        };
        target.insert(acc.to_string());
    }
    classes
}

/// `|Ext ∪ Red ∪ Rev| / |O_v ∪ O_v+1|`; zero when both versions are empty.
pub fn ontology_change_ratio(
    diff: &DiffResult,
    old: &OntologyVersion,
    new: &OntologyVersion,
) -> f64 {
    let union: BTreeSet<&String> = old
        .concept_map()
        .keys()
        .chain(new.concept_map().keys())
        .collect();
    if union.is_empty() {
        return 0.0;
    }
    let changed = diff.ext.len() + diff.red.len() + diff.rev.len();
    changed as f64 / union.len() as f64
}
