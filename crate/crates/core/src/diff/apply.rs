use super::{Attribute, ChangeKind, ChangeOp, Payload};
use crate::error::{Error, Result};
use crate::ontology::{Concept, OntologyVersion};

/// Applies ops to `old`. Complex ops are expanded into their basic parts and
/// the parts run in fixed phases (relationship deletions, concept deletions,
/// concept insertions, attribute edits, relationship insertions), so the
/// result does not depend on the order of `ops`.
pub fn apply_diff(old: &OntologyVersion, ops: &[ChangeOp]) -> Result<OntologyVersion> {
    let mut basic: Vec<&ChangeOp> = ops.iter().flat_map(ChangeOp::basic_parts).collect();
    basic.sort_by_key(|op| phase(op.kind));

    let mut onto = old.clone();
    for op in basic {
        apply_basic(&mut onto, op)?;
    }
    onto.validate()
        .map_err(|e| Error::Apply(format!("result is not a valid ontology: {e}")))?;
    Ok(onto)
}

fn phase(kind: ChangeKind) -> u8 {
    match kind {
        ChangeKind::DelRelationship => 0,
        ChangeKind::DelConcept => 1,
        ChangeKind::AddConcept => 2,
        ChangeKind::AddRelationship => 4,
        _ => 3,
    }
}

fn subject(op: &ChangeOp) -> Result<&str> {
    op.subjects
        .first()
        .map(String::as_str)
        .ok_or_else(|| Error::Apply(format!("{} without subject", op.kind)))
}

fn concept_mut<'a>(onto: &'a mut OntologyVersion, acc: &str) -> Result<&'a mut Concept> {
    onto.concepts_mut()
        .get_mut(acc)
        .ok_or_else(|| Error::Apply(format!("unknown accession `{acc}`")))
}

fn apply_basic(onto: &mut OntologyVersion, op: &ChangeOp) -> Result<()> {
    let acc = subject(op)?;
    let mismatch = || {
        Error::Apply(format!(
            "{} on `{acc}` has payload {:?}",
            op.kind, op.payload
        ))
    };
    match (op.kind, &op.payload) {
        (ChangeKind::DelRelationship, Payload::Relationship { relationship }) => {
            if !onto.relationships_mut().remove(relationship) {
                return Err(Error::Apply(format!(
                    "relationship {} -{}-> {} not present",
                    relationship.source, relationship.kind, relationship.target
                )));
            }
        }
        (ChangeKind::AddRelationship, Payload::Relationship { relationship }) => {
            if !onto.relationships_mut().insert(relationship.clone()) {
                return Err(Error::Apply(format!(
                    "relationship {} -{}-> {} already present",
                    relationship.source, relationship.kind, relationship.target
                )));
            }
        }
        (ChangeKind::DelConcept, _) => {
            if onto.concepts_mut().remove(acc).is_none() {
                return Err(Error::Apply(format!("unknown accession `{acc}`")));
            }
        }
        (ChangeKind::AddConcept, Payload::Concept { concept }) => {
            if onto.contains(&concept.accession) {
                return Err(Error::Apply(format!(
                    "concept `{}` already present",
                    concept.accession
                )));
            }
            onto.concepts_mut()
                .insert(concept.accession.clone(), concept.clone());
        }
        (ChangeKind::MarkObsolete, _) => concept_mut(onto, acc)?.obsolete = true,
        (ChangeKind::MarkNonObsolete, _) => concept_mut(onto, acc)?.obsolete = false,
        (ChangeKind::AddAttribute, Payload::Attribute { attribute, value }) => {
            add_value(concept_mut(onto, acc)?, *attribute, value)?
        }
        (ChangeKind::DelAttribute, Payload::Attribute { attribute, value }) => {
            del_value(concept_mut(onto, acc)?, *attribute, value)?
        }
        (
            ChangeKind::ChangeAttributeValue,
            Payload::ValueChange {
                attribute,
                old,
                new,
            },
        ) => {
            let concept = concept_mut(onto, acc)?;
            del_value(concept, *attribute, old)?;
            add_value(concept, *attribute, new)?;
        }
        _ => return Err(mismatch()),
    }
    Ok(())
}

fn add_value(concept: &mut Concept, attribute: Attribute, value: &str) -> Result<()> {
    let acc = concept.accession.clone();
    let taken = || Error::Apply(format!("`{acc}` already has {attribute:?} `{value}`"));
    match attribute {
        Attribute::Name if concept.name.is_empty() => concept.name = value.to_string(),
        Attribute::Definition if concept.definition.is_none() => {
            concept.definition = Some(value.to_string())
        }
        Attribute::Name | Attribute::Definition => return Err(taken()),
        Attribute::Synonym | Attribute::ReplacedBy | Attribute::Consider => {
            if !multi(concept, attribute).insert(value.to_string()) {
                return Err(taken());
            }
        }
    }
    Ok(())
}

fn del_value(concept: &mut Concept, attribute: Attribute, value: &str) -> Result<()> {
    let missing = || {
        Error::Apply(format!(
            "`{}` has no {attribute:?} `{value}`",
            concept.accession
        ))
    };
    match attribute {
        Attribute::Name if concept.name == value => {
            concept.name.clear();
            Ok(())
        }
        Attribute::Definition if concept.definition.as_deref() == Some(value) => {
            concept.definition = None;
            Ok(())
        }
        Attribute::Name | Attribute::Definition => Err(missing()),
        _ => {
            let err = missing();
            if multi(concept, attribute).remove(value) {
                Ok(())
            } else {
                Err(err)
            }
        }
    }
}

fn multi(concept: &mut Concept, attribute: Attribute) -> &mut std::collections::BTreeSet<String> {
    match attribute {
        Attribute::Synonym => &mut concept.synonyms,
        Attribute::ReplacedBy => &mut concept.replaced_by,
        Attribute::Consider => &mut concept.consider,
        Attribute::Name | Attribute::Definition => unreachable!("single-valued attribute"),
    }
}
