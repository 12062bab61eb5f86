//! Change operations between two versions of one ontology.
//!
//! [`diff`] runs the full chain: basic operations under accession identity,
//! folding of basic operations into complex ones, and the per-concept
//! extension / reduction / revision partition.

mod apply;
mod basic;
mod classify;
mod complex;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ontology::{Concept, OntologyVersion, Relationship};

pub use apply::apply_diff;
pub use basic::compute_basic_diff;
pub use classify::{classify_concepts, ontology_change_ratio, ConceptClasses};
pub use complex::detect_complex_changes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    AddConcept,
    DelConcept,
    AddSubgraph,
    DelSubgraph,
    AddRelationship,
    DelRelationship,
    AddAttribute,
    DelAttribute,
    ChangeAttributeValue,
    MarkObsolete,
    MarkNonObsolete,
    Split,
    Merge,
    Substitute,
    Move,
}

impl ChangeKind {
    pub const ALL: [ChangeKind; 15] = [
        ChangeKind::AddConcept,
        ChangeKind::DelConcept,
        ChangeKind::AddSubgraph,
        ChangeKind::DelSubgraph,
        ChangeKind::AddRelationship,
        ChangeKind::DelRelationship,
        ChangeKind::AddAttribute,
        ChangeKind::DelAttribute,
        ChangeKind::ChangeAttributeValue,
        ChangeKind::MarkObsolete,
        ChangeKind::MarkNonObsolete,
        ChangeKind::Split,
        ChangeKind::Merge,
        ChangeKind::Substitute,
        ChangeKind::Move,
    ];

    pub fn category(self) -> Category {
        use ChangeKind::*;
        match self {
            AddConcept | AddSubgraph | AddRelationship | AddAttribute | MarkNonObsolete => {
                Category::Extension
            }
            DelConcept | DelSubgraph | DelRelationship | DelAttribute | MarkObsolete => {
                Category::Reduction
            }
            Split | Merge | Substitute | Move | ChangeAttributeValue => Category::Revision,
        }
    }

    pub fn as_str(self) -> &'static str {
        use ChangeKind::*;
        match self {
            AddConcept => "add_concept",
            DelConcept => "del_concept",
            AddSubgraph => "add_subgraph",
            DelSubgraph => "del_subgraph",
            AddRelationship => "add_relationship",
            DelRelationship => "del_relationship",
            AddAttribute => "add_attribute",
            DelAttribute => "del_attribute",
            ChangeAttributeValue => "change_attribute_value",
            MarkObsolete => "mark_obsolete",
            MarkNonObsolete => "mark_non_obsolete",
            Split => "split",
            Merge => "merge",
            Substitute => "substitute",
            Move => "move",
        }
    }
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Extension,
    Reduction,
    Revision,
}

/// Concept attributes tracked by the diff. `Name` and `Definition` are
/// single-valued; the rest are sets compared element by element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Name,
    Definition,
    Synonym,
    ReplacedBy,
    Consider,
}

impl Attribute {
    pub fn is_single_valued(self) -> bool {
        matches!(self, Attribute::Name | Attribute::Definition)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    None,
    /// Full content of an inserted concept.
    Concept {
        concept: Concept,
    },
    Attribute {
        attribute: Attribute,
        value: String,
    },
    ValueChange {
        attribute: Attribute,
        old: String,
        new: String,
    },
    Relationship {
        relationship: Relationship,
    },
    /// Split, merge or substitution of `from` concepts by `to` concepts.
    Replacement {
        from: Vec<String>,
        to: Vec<String>,
        parts: Vec<ChangeOp>,
    },
    Move {
        old_parents: Vec<String>,
        new_parents: Vec<String>,
        parts: Vec<ChangeOp>,
    },
    Subgraph {
        root: String,
        anchor: String,
        parts: Vec<ChangeOp>,
    },
}

/// One change operation. Complex operations keep the basic operations they
/// were folded from in their payload, so every op can be applied.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChangeOp {
    pub kind: ChangeKind,
    pub subjects: Vec<String>,
    pub payload: Payload,
}

impl ChangeOp {
    pub fn new(kind: ChangeKind, subjects: Vec<String>, payload: Payload) -> Self {
        ChangeOp {
            kind,
            subjects,
            payload,
        }
    }

    pub fn category(&self) -> Category {
        self.kind.category()
    }

    /// Basic operations this op is made of; a basic op yields itself.
    pub fn basic_parts(&self) -> Vec<&ChangeOp> {
        match &self.payload {
            Payload::Replacement { parts, .. }
            | Payload::Move { parts, .. }
            | Payload::Subgraph { parts, .. } => {
                parts.iter().flat_map(ChangeOp::basic_parts).collect()
            }
            _ => vec![self],
        }
    }
}

/// Which version a changed concept lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Old,
    New,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChangedConcept {
    pub accession: String,
    pub side: Side,
}

/// `diff(O_v, O_v+1)` with the derived concept partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffResult {
    pub ontology_id: String,
    pub old_version: u32,
    pub new_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_release_date: Option<String>,
    /// Distinct accessions across both versions, the change-ratio denominator.
    pub concept_union: usize,
    pub ops: Vec<ChangeOp>,
    pub ext: BTreeSet<ChangedConcept>,
    pub red: BTreeSet<ChangedConcept>,
    pub rev: BTreeSet<ChangedConcept>,
}

impl DiffResult {
    /// Assembles a result from ops already computed against `old`/`new`.
    pub fn from_ops(old: &OntologyVersion, new: &OntologyVersion, mut ops: Vec<ChangeOp>) -> Self {
        ops.sort();
        ops.dedup();
        let classes = classify_concepts(&ops);
        let qualify = |set: BTreeSet<String>| -> BTreeSet<ChangedConcept> {
            set.into_iter()
                .map(|accession| {
                    let side = match (old.contains(&accession), new.contains(&accession)) {
                        (true, true) => Side::Both,
                        (true, false) => Side::Old,
                        _ => Side::New,
                    };
                    ChangedConcept { accession, side }
                })
                .collect()
        };
        let concept_union = old
            .concept_map()
            .keys()
            .chain(new.concept_map().keys())
            .collect::<BTreeSet<_>>()
            .len();
        DiffResult {
            ontology_id: new.ontology_id().to_string(),
            old_version: old.version(),
            new_version: new.version(),
            new_release_date: new.release_date().map(str::to_string),
            concept_union,
            ops,
            ext: qualify(classes.ext),
            red: qualify(classes.red),
            rev: qualify(classes.rev),
        }
    }

    pub fn ext_accessions(&self) -> BTreeSet<&str> {
        self.ext.iter().map(|c| c.accession.as_str()).collect()
    }

    pub fn red_accessions(&self) -> BTreeSet<&str> {
        self.red.iter().map(|c| c.accession.as_str()).collect()
    }

    pub fn rev_accessions(&self) -> BTreeSet<&str> {
        self.rev.iter().map(|c| c.accession.as_str()).collect()
    }

    /// OCR over the stored partition and concept union.
    pub fn change_ratio(&self) -> f64 {
        if self.concept_union == 0 {
            return 0.0;
        }
        (self.ext.len() + self.red.len() + self.rev.len()) as f64 / self.concept_union as f64
    }

    /// Applies the ops to `old` and relabels the result with the new version.
    pub fn apply(&self, old: &OntologyVersion) -> Result<OntologyVersion> {
        Ok(apply_diff(old, &self.ops)?
            .with_version(self.new_version)
            .with_release_date(self.new_release_date.clone()))
    }

    /// `|Ext|=… |Red|=… |Rev|=… OCR=…` style one-line summary.
    pub fn summary_line(&self) -> String {
        format!(
            "Ext={} Red={} Rev={} OCR={:.4}",
            self.ext.len(),
            self.red.len(),
            self.rev.len(),
            self.change_ratio()
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diff serializes")
    }
}

/// Basic diff, complex-change folding and classification in one call.
pub fn diff(old: &OntologyVersion, new: &OntologyVersion) -> Result<DiffResult> {
    let basic = compute_basic_diff(old, new)?;
    let ops = detect_complex_changes(old, new, basic);
    Ok(DiffResult::from_ops(old, new, ops))
}
