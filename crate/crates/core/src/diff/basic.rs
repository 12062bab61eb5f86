use std::collections::BTreeSet;

use super::{Attribute, ChangeKind, ChangeOp, Payload};
use crate::error::{Error, Result};
use crate::ontology::{Concept, OntologyVersion};

/// Basic operations transforming `old` into `new` under accession identity.
pub fn compute_basic_diff(old: &OntologyVersion, new: &OntologyVersion) -> Result<Vec<ChangeOp>> {
    if old.ontology_id() != new.ontology_id() {
        return Err(Error::OntologyMismatch {
            old: old.ontology_id().to_string(),
            new: new.ontology_id().to_string(),
        });
    }
    let mut ops = Vec::new();
    let old_map = old.concept_map();
    let new_map = new.concept_map();

    for (acc, concept) in new_map {
        match old_map.get(acc) {
            None => ops.push(ChangeOp::new(
                ChangeKind::AddConcept,
                vec![acc.clone()],
                Payload::Concept {
                    concept: concept.clone(),
                },
            )),
            Some(before) => attribute_ops(before, concept, &mut ops),
        }
    }
    for acc in old_map.keys().filter(|acc| !new_map.contains_key(*acc)) {
        ops.push(ChangeOp::new(
            ChangeKind::DelConcept,
            vec![acc.clone()],
            Payload::None,
        ));
    }

    // Relationship ops are attributed to the source concept.
    for rel in new.relationships().difference(old.relationships()) {
        ops.push(ChangeOp::new(
            ChangeKind::AddRelationship,
            vec![rel.source.clone()],
            Payload::Relationship {
                relationship: rel.clone(),
            },
        ));
    }
    for rel in old.relationships().difference(new.relationships()) {
        ops.push(ChangeOp::new(
            ChangeKind::DelRelationship,
            vec![rel.source.clone()],
            Payload::Relationship {
                relationship: rel.clone(),
            },
        ));
    }
    ops.sort();
    Ok(ops)
}

fn attribute_ops(before: &Concept, after: &Concept, ops: &mut Vec<ChangeOp>) {
    let acc = &after.accession;
    let non_empty = |s: &str| (!s.is_empty()).then(|| s.to_string());
    single_valued(
        acc,
        Attribute::Name,
        non_empty(&before.name),
        non_empty(&after.name),
        ops,
    );
    single_valued(
        acc,
        Attribute::Definition,
        before.definition.clone(),
        after.definition.clone(),
        ops,
    );
    multi_valued(
        acc,
        Attribute::Synonym,
        &before.synonyms,
        &after.synonyms,
        ops,
    );
    multi_valued(
        acc,
        Attribute::ReplacedBy,
        &before.replaced_by,
        &after.replaced_by,
        ops,
    );
    multi_valued(
        acc,
        Attribute::Consider,
        &before.consider,
        &after.consider,
        ops,
    );
    match (before.obsolete, after.obsolete) {
        (false, true) => ops.push(ChangeOp::new(
            ChangeKind::MarkObsolete,
            vec![acc.clone()],
            Payload::None,
        )),
        (true, false) => ops.push(ChangeOp::new(
            ChangeKind::MarkNonObsolete,
            vec![acc.clone()],
            Payload::None,
        )),
        _ => {}
    }
}

fn single_valued(
    acc: &str,
    attribute: Attribute,
    before: Option<String>,
    after: Option<String>,
    ops: &mut Vec<ChangeOp>,
) {
    let op = match (before, after) {
        (None, Some(value)) => ChangeOp::new(
            ChangeKind::AddAttribute,
            vec![acc.to_string()],
            Payload::Attribute { attribute, value },
        ),
        (Some(value), None) => ChangeOp::new(
            ChangeKind::DelAttribute,
            vec![acc.to_string()],
            Payload::Attribute { attribute, value },
        ),
        (Some(old), Some(new)) if old != new => ChangeOp::new(
            ChangeKind::ChangeAttributeValue,
            vec![acc.to_string()],
            Payload::ValueChange {
                attribute,
                old,
                new,
            },
        ),
        _ => return,
    };
    ops.push(op);
}

fn multi_valued(
    acc: &str,
    attribute: Attribute,
    before: &BTreeSet<String>,
    after: &BTreeSet<String>,
    ops: &mut Vec<ChangeOp>,
) {
    for value in after.difference(before) {
        ops.push(ChangeOp::new(
            ChangeKind::AddAttribute,
            vec![acc.to_string()],
            Payload::Attribute {
                attribute,
                value: value.clone(),
            },
        ));
    }
    for value in before.difference(after) {
        ops.push(ChangeOp::new(
            ChangeKind::DelAttribute,
            vec![acc.to_string()],
            Payload::Attribute {
                attribute,
                value: value.clone(),
            },
        ));
    }
}
