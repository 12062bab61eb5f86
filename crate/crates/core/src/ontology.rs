//! Versioned ontology snapshots: concepts, typed relationships and the
//! structural invariants every snapshot must satisfy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A concept with its attributes. Identity is the accession.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Concept {
    pub accession: String,
    pub name: String,
    #[serde(default)]
    pub synonyms: BTreeSet<String>,
    #[serde(default)]
    pub definition: Option<String>,
    #[serde(default)]
    pub obsolete: bool,
    /// Accessions linked through `replaced_by` tags.
    #[serde(default)]
    pub replaced_by: BTreeSet<String>,
    #[serde(default)]
    pub consider: BTreeSet<String>,
}

impl Concept {
    pub fn new(accession: impl Into<String>, name: impl Into<String>) -> Self {
        Concept {
            accession: accession.into(),
            name: name.into(),
            synonyms: BTreeSet::new(),
            definition: None,
            obsolete: false,
            replaced_by: BTreeSet::new(),
            consider: BTreeSet::new(),
        }
    }

    pub fn with_synonym(mut self, synonym: impl Into<String>) -> Self {
        self.synonyms.insert(synonym.into());
        self
    }

    pub fn with_definition(mut self, definition: impl Into<String>) -> Self {
        self.definition = Some(definition.into());
        self
    }

    pub fn with_replaced_by(mut self, accession: impl Into<String>) -> Self {
        self.replaced_by.insert(accession.into());
        self
    }

    pub fn obsolete(mut self) -> Self {
        self.obsolete = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum RelationKind {
    IsA,
    PartOf,
    Other(String),
}

impl RelationKind {
    /// Whether the kind defines parent/child structure (`is_a`, `part_of`).
    pub fn is_hierarchical(&self) -> bool {
        matches!(self, RelationKind::IsA | RelationKind::PartOf)
    }

    pub fn as_str(&self) -> &str {
        match self {
            RelationKind::IsA => "is_a",
            RelationKind::PartOf => "part_of",
            RelationKind::Other(tag) => tag,
        }
    }
}

impl From<String> for RelationKind {
    fn from(tag: String) -> Self {
        match tag.as_str() {
            "is_a" => RelationKind::IsA,
            "part_of" => RelationKind::PartOf,
            _ => RelationKind::Other(tag),
        }
    }
}

impl From<&str> for RelationKind {
    fn from(tag: &str) -> Self {
        RelationKind::from(tag.to_string())
    }
}

impl From<RelationKind> for String {
    fn from(kind: RelationKind) -> Self {
        kind.as_str().to_string()
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Directed, typed edge between two concepts of the same version.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relationship {
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
}

impl Relationship {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        kind: impl Into<RelationKind>,
    ) -> Self {
        Relationship {
            source: source.into(),
            target: target.into(),
            kind: kind.into(),
        }
    }

    pub fn is_a(source: impl Into<String>, target: impl Into<String>) -> Self {
        Relationship::new(source, target, RelationKind::IsA)
    }
}

/// Snapshot of one ontology at one release.
///
/// Concepts are keyed by accession and relationships are kept as an ordered
/// set, so two structurally identical versions compare (and serialize) equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawOntology")]
pub struct OntologyVersion {
    ontology_id: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    release_date: Option<String>,
    concepts: BTreeMap<String, Concept>,
    relationships: BTreeSet<Relationship>,
}

#[derive(Deserialize)]
struct RawOntology {
    ontology_id: String,
    version: u32,
    #[serde(default)]
    release_date: Option<String>,
    concepts: BTreeMap<String, Concept>,
    relationships: BTreeSet<Relationship>,
}

impl TryFrom<RawOntology> for OntologyVersion {
    type Error = Error;

    fn try_from(raw: RawOntology) -> Result<Self> {
        for (key, concept) in &raw.concepts {
            if key != &concept.accession {
                return Err(Error::Validation(format!(
                    "concept keyed `{key}` carries accession `{}`",
                    concept.accession
                )));
            }
        }
        let version = OntologyVersion {
            ontology_id: raw.ontology_id,
            version: raw.version,
            release_date: raw.release_date,
            concepts: raw.concepts,
            relationships: raw.relationships,
        };
        version.validate()?;
        Ok(version)
    }
}

impl OntologyVersion {
    /// An empty version.
    pub fn empty(ontology_id: impl Into<String>, version: u32) -> Self {
        OntologyVersion {
            ontology_id: ontology_id.into(),
            version,
            release_date: None,
            concepts: BTreeMap::new(),
            relationships: BTreeSet::new(),
        }
    }

    /// Builds and validates a version from its parts.
    pub fn from_parts(
        ontology_id: impl Into<String>,
        version: u32,
        concepts: impl IntoIterator<Item = Concept>,
        relationships: impl IntoIterator<Item = Relationship>,
    ) -> Result<Self> {
        let mut onto = OntologyVersion::empty(ontology_id, version);
        for concept in concepts {
            if onto.concepts.contains_key(&concept.accession) {
                return Err(Error::DuplicateAccession(concept.accession));
            }
            onto.concepts.insert(concept.accession.clone(), concept);
        }
        onto.relationships = relationships.into_iter().collect();
        onto.validate()?;
        Ok(onto)
    }

    pub fn ontology_id(&self) -> &str {
        &self.ontology_id
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn release_date(&self) -> Option<&str> {
        self.release_date.as_deref()
    }

    pub fn with_version(mut self, version: u32) -> Self {
        self.version = version;
        self
    }

    pub fn with_release_date(mut self, date: Option<String>) -> Self {
        self.release_date = date;
        self
    }

    pub fn concepts(&self) -> impl ExactSizeIterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn concept_map(&self) -> &BTreeMap<String, Concept> {
        &self.concepts
    }

    pub fn relationships(&self) -> &BTreeSet<Relationship> {
        &self.relationships
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn contains(&self, accession: &str) -> bool {
        self.concepts.contains_key(accession)
    }

    /// Looks up a concept; unknown accessions yield `None`.
    pub fn get_concept(&self, accession: &str) -> Option<&Concept> {
        self.concepts.get(accession)
    }

    /// Targets of outgoing `is_a`/`part_of` edges, sorted by accession.
    pub fn parents_of(&self, accession: &str) -> Result<Vec<String>> {
        if !self.contains(accession) {
            return Err(Error::UnknownAccession(accession.to_string()));
        }
        let parents: BTreeSet<&str> = self
            .relationships
            .iter()
            .filter(|r| r.kind.is_hierarchical() && r.source == accession)
            .map(|r| r.target.as_str())
            .collect();
        Ok(parents.into_iter().map(str::to_string).collect())
    }

    /// Sources of incoming `is_a`/`part_of` edges, sorted by accession.
    pub fn children_of(&self, accession: &str) -> Result<Vec<String>> {
        if !self.contains(accession) {
            return Err(Error::UnknownAccession(accession.to_string()));
        }
        let children: BTreeSet<&str> = self
            .relationships
            .iter()
            .filter(|r| r.kind.is_hierarchical() && r.target == accession)
            .map(|r| r.source.as_str())
            .collect();
        Ok(children.into_iter().map(str::to_string).collect())
    }

    /// Parent and child adjacency for every concept, built in one pass.
    pub fn hierarchy(&self) -> Hierarchy<'_> {
        let mut parents: HashMap<&str, Vec<&str>> = HashMap::new();
        let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
        for rel in self
            .relationships
            .iter()
            .filter(|r| r.kind.is_hierarchical())
        {
            parents.entry(&rel.source).or_default().push(&rel.target);
            children.entry(&rel.target).or_default().push(&rel.source);
        }
        for list in parents.values_mut().chain(children.values_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Hierarchy { parents, children }
    }

    /// Checks every structural invariant of a version.
    pub fn validate(&self) -> Result<()> {
        for concept in self.concepts.values() {
            if concept.accession.trim().is_empty() {
                return Err(Error::Validation("empty accession".into()));
            }
            if concept.name.trim().is_empty() && !concept.obsolete {
                return Err(Error::Validation(format!(
                    "concept `{}` has no name",
                    concept.accession
                )));
            }
        }
        for rel in &self.relationships {
            for endpoint in [&rel.source, &rel.target] {
                if !self.concepts.contains_key(endpoint) {
                    return Err(Error::DanglingRelationship {
                        source_id: rel.source.clone(),
                        target_id: rel.target.clone(),
                        missing: endpoint.clone(),
                    });
                }
            }
            if rel.source == rel.target {
                return Err(Error::Validation(format!(
                    "self-loop on `{}` ({})",
                    rel.source, rel.kind
                )));
            }
        }
        self.check_is_a_acyclic()
    }

    /// Kahn's algorithm over the `is_a` subgraph.
    fn check_is_a_acyclic(&self) -> Result<()> {
        let mut indegree: HashMap<&str, usize> = HashMap::new();
        let mut out: HashMap<&str, Vec<&str>> = HashMap::new();
        for rel in self
            .relationships
            .iter()
            .filter(|r| r.kind == RelationKind::IsA)
        {
            out.entry(&rel.source).or_default().push(&rel.target);
            *indegree.entry(&rel.target).or_default() += 1;
            indegree.entry(&rel.source).or_default();
        }
        let mut ready: Vec<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        let mut visited = 0;
        while let Some(node) = ready.pop() {
            visited += 1;
            for next in out.get(node).into_iter().flatten() {
                let d = indegree.get_mut(next).expect("node registered");
                *d -= 1;
                if *d == 0 {
                    ready.push(next);
                }
            }
        }
        if visited == indegree.len() {
            Ok(())
        } else {
            let mut cyclic: Vec<&str> = indegree
                .iter()
                .filter(|(_, d)| **d > 0)
                .map(|(k, _)| *k)
                .collect();
            cyclic.sort_unstable();
            Err(Error::Validation(format!(
                "is_a cycle through {}",
                cyclic.join(", ")
            )))
        }
    }

    pub(crate) fn concepts_mut(&mut self) -> &mut BTreeMap<String, Concept> {
        &mut self.concepts
    }

    pub(crate) fn relationships_mut(&mut self) -> &mut BTreeSet<Relationship> {
        &mut self.relationships
    }

    /// Canonical JSON: stable key order, concepts sorted by accession.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ontology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Parent/child lookup over `is_a` and `part_of` edges.
#[derive(Debug)]
pub struct Hierarchy<'a> {
    parents: HashMap<&'a str, Vec<&'a str>>,
    children: HashMap<&'a str, Vec<&'a str>>,
}

impl<'a> Hierarchy<'a> {
    pub fn parents(&self, accession: &str) -> &[&'a str] {
        self.parents.get(accession).map_or(&[], Vec::as_slice)
    }

    pub fn children(&self, accession: &str) -> &[&'a str] {
        self.children.get(accession).map_or(&[], Vec::as_slice)
    }
}
