//! Reader and writer for the OBO 1.2 subset used by the toolkit.
//!
//! Supported `[Term]` tags: `id`, `name`, `synonym`, `def`, `is_a`,
//! `relationship`, `is_obsolete`, `replaced_by`, `consider`. Other stanzas
//! and tags are skipped and tallied in [`ParseWarnings`].

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ontology::{Concept, OntologyVersion, RelationKind, Relationship};

/// Tally of input the parser skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseWarnings {
    pub ignored_stanzas: BTreeMap<String, usize>,
    pub ignored_tags: BTreeMap<String, usize>,
}

impl ParseWarnings {
    pub fn total(&self) -> usize {
        self.ignored_stanzas.values().sum::<usize>() + self.ignored_tags.values().sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

/// Parses OBO text into a validated version (labelled version 1).
pub fn parse_ontology(text: &str) -> Result<OntologyVersion> {
    parse_ontology_with_warnings(text).map(|(onto, _)| onto)
}

pub fn parse_ontology_with_warnings(text: &str) -> Result<(OntologyVersion, ParseWarnings)> {
    let mut warnings = ParseWarnings::default();
    let mut ontology_id = String::new();
    let mut release_date = None;
    let mut concepts: Vec<Concept> = Vec::new();
    let mut relationships = Vec::new();
    let mut seen = HashSet::new();

    let mut stanza: Option<String> = None;
    let mut term: Option<TermBuilder> = None;

    let mut finish = |term: Option<TermBuilder>,
                      concepts: &mut Vec<Concept>,
                      relationships: &mut Vec<Relationship>|
     -> Result<()> {
        if let Some(t) = term {
            let (concept, rels) = t.build()?;
            if !seen.insert(concept.accession.clone()) {
                return Err(Error::DuplicateAccession(concept.accession));
            }
            concepts.push(concept);
            relationships.extend(rels);
        }
        Ok(())
    };

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        if line.starts_with('[') {
            let name = line
                .strip_prefix('[')
                .and_then(|l| l.strip_suffix(']'))
                .ok_or_else(|| syntax(line_no, "malformed stanza header"))?
                .trim()
                .to_string();
            finish(term.take(), &mut concepts, &mut relationships)?;
            if name == "Term" {
                term = Some(TermBuilder::new(line_no));
            } else {
                *warnings.ignored_stanzas.entry(name.clone()).or_default() += 1;
            }
            stanza = Some(name);
            continue;
        }
        let (tag, value) = line
            .split_once(':')
            .map(|(t, v)| (t.trim(), v.trim()))
            .ok_or_else(|| syntax(line_no, format!("expected `tag: value`, found `{line}`")))?;
        if tag.is_empty() {
            return Err(syntax(line_no, "empty tag"));
        }
        match (&stanza, term.as_mut()) {
            (None, _) => match tag {
                "ontology" => ontology_id = strip_comment(value).to_string(),
                "date" => release_date = Some(value.to_string()),
                _ => {}
            },
            (Some(_), Some(t)) => {
                if !t.apply(tag, value, line_no)? {
                    *warnings.ignored_tags.entry(tag.to_string()).or_default() += 1;
                }
            }
            // Tags inside ignored stanzas were already counted with the stanza.
            (Some(_), None) => {}
        }
    }
    finish(term.take(), &mut concepts, &mut relationships)?;

    let onto = OntologyVersion::from_parts(ontology_id, 1, concepts, relationships)?
        .with_release_date(release_date);
    Ok((onto, warnings))
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

/// Drops trailing `! comment` and `{qualifier}` blocks from a reference value.
fn strip_comment(value: &str) -> &str {
    let cut = value.find(['!', '{']).unwrap_or(value.len());
    value[..cut].trim()
}

/// Reads a leading double-quoted OBO string, returning it unescaped.
fn quoted(value: &str, line: usize) -> Result<String> {
    let mut chars = value.chars();
    if chars.next() != Some('"') {
        return Err(syntax(line, "expected quoted string"));
    }
    let mut out = String::new();
    while let Some(c) = chars.next() {
        match c {
            '"' => return Ok(out),
            '\\' => match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => break,
            },
            c => out.push(c),
        }
    }
    Err(syntax(line, "unterminated quoted string"))
}

struct TermBuilder {
    line: usize,
    id: Option<String>,
    name: Option<String>,
    synonyms: Vec<String>,
    definition: Option<String>,
    obsolete: bool,
    replaced_by: Vec<String>,
    consider: Vec<String>,
    relations: Vec<(String, RelationKind)>,
}

impl TermBuilder {
    fn new(line: usize) -> Self {
        TermBuilder {
            line,
            id: None,
            name: None,
            synonyms: Vec::new(),
            definition: None,
            obsolete: false,
            replaced_by: Vec::new(),
            consider: Vec::new(),
            relations: Vec::new(),
        }
    }

    /// Returns false when the tag is not part of the supported subset.
    fn apply(&mut self, tag: &str, value: &str, line: usize) -> Result<bool> {
        let reference = |v: &str| -> Result<String> {
            let v = strip_comment(v);
            match v.split_whitespace().next() {
                Some(tok) => Ok(tok.to_string()),
                None => Err(syntax(line, format!("`{tag}` needs an accession"))),
            }
        };
        match tag {
            "id" => {
                if self.id.is_some() {
                    return Err(syntax(line, "repeated `id` tag"));
                }
                self.id = Some(reference(value)?);
            }
            "name" => {
                if self.name.is_some() {
                    return Err(syntax(line, "repeated `name` tag"));
                }
                self.name = Some(value.to_string());
            }
            "synonym" => self.synonyms.push(quoted(value, line)?),
            "def" => {
                if self.definition.is_some() {
                    return Err(syntax(line, "repeated `def` tag"));
                }
                self.definition = Some(quoted(value, line)?);
            }
            "is_a" => self.relations.push((reference(value)?, RelationKind::IsA)),
            "relationship" => {
                let v = strip_comment(value);
                let mut parts = v.split_whitespace();
                match (parts.next(), parts.next()) {
                    (Some(kind), Some(target)) => self
                        .relations
                        .push((target.to_string(), RelationKind::from(kind))),
                    _ => return Err(syntax(line, "`relationship` needs a type and a target")),
                }
            }
            "is_obsolete" => match strip_comment(value) {
                "true" => self.obsolete = true,
                "false" => self.obsolete = false,
                other => return Err(syntax(line, format!("bad boolean `{other}`"))),
            },
            "replaced_by" => self.replaced_by.push(reference(value)?),
            "consider" => self.consider.push(reference(value)?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn build(self) -> Result<(Concept, Vec<Relationship>)> {
        let id = self
            .id
            .ok_or_else(|| syntax(self.line, "[Term] stanza without `id`"))?;
        let concept = Concept {
            accession: id.clone(),
            name: self.name.unwrap_or_default(),
            synonyms: self.synonyms.into_iter().collect(),
            definition: self.definition,
            obsolete: self.obsolete,
            replaced_by: self.replaced_by.into_iter().collect(),
            consider: self.consider.into_iter().collect(),
        };
        let rels = self
            .relations
            .into_iter()
            .map(|(target, kind)| Relationship {
                source: id.clone(),
                target,
                kind,
            })
            .collect();
        Ok((concept, rels))
    }
}

fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Writes a version back out as OBO. Synonyms are emitted with `EXACT` scope.
pub fn to_obo(onto: &OntologyVersion) -> String {
    let mut out = String::from("format-version: 1.2\n");
    if let Some(date) = onto.release_date() {
        let _ = writeln!(out, "date: {date}");
    }
    if !onto.ontology_id().is_empty() {
        let _ = writeln!(out, "ontology: {}", onto.ontology_id());
    }
    let mut outgoing: BTreeMap<&str, Vec<&Relationship>> = BTreeMap::new();
    for rel in onto.relationships() {
        outgoing.entry(&rel.source).or_default().push(rel);
    }
    for c in onto.concepts() {
        out.push_str("\n[Term]\n");
        let _ = writeln!(out, "id: {}", c.accession);
        if !c.name.is_empty() {
            let _ = writeln!(out, "name: {}", c.name);
        }
        if let Some(def) = &c.definition {
            let _ = writeln!(out, "def: \"{}\" []", escape(def));
        }
        for syn in &c.synonyms {
            let _ = writeln!(out, "synonym: \"{}\" EXACT []", escape(syn));
        }
        if c.obsolete {
            out.push_str("is_obsolete: true\n");
        }
        for r in &c.replaced_by {
            let _ = writeln!(out, "replaced_by: {r}");
        }
        for r in &c.consider {
            let _ = writeln!(out, "consider: {r}");
        }
        for rel in outgoing.get(c.accession.as_str()).into_iter().flatten() {
            match rel.kind {
                RelationKind::IsA => {
                    let _ = writeln!(out, "is_a: {}", rel.target);
                }
                _ => {
                    let _ = writeln!(out, "relationship: {} {}", rel.kind, rel.target);
                }
            }
        }
    }
    out
}

/// Reads a version from `path`: canonical JSON for `.json` files, OBO
/// otherwise. Errors name the file.
pub fn load_ontology(path: &Path) -> Result<OntologyVersion> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        OntologyVersion::from_json(&text)
    } else {
        parse_ontology(&text)
    };
    parsed.map_err(|e| Error::Stage {
        stage: "parse",
        input: path.display().to_string(),
        source: Box::new(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_stanza() {
        let onto = parse_ontology("[Term]\nid: X:1\nname: heart\n").unwrap();
        assert_eq!(onto.len(), 1);
        assert!(onto.relationships().is_empty());
        assert_eq!(onto.get_concept("X:1").unwrap().name, "heart");
    }

    #[test]
    fn two_terms_one_is_a() {
        let text =
            "[Term]\nid: X:1\nname: organ\n\n[Term]\nid: X:2\nname: heart\nis_a: X:1 ! organ\n";
        let onto = parse_ontology(text).unwrap();
        assert_eq!(onto.len(), 2);
        let rels: Vec<_> = onto.relationships().iter().collect();
        assert_eq!(rels, vec![&Relationship::is_a("X:2", "X:1")]);
    }

    #[test]
    fn full_tag_set() {
        let text = r#"format-version: 1.2
date: 01:06:2010 12:00
ontology: ma
! a comment line

[Term]
id: MA:1
name: heart
def: "A \"hollow\" organ." [MA:curators]
synonym: "cor" EXACT []
synonym: "cardium" RELATED [PMID:1]
relationship: part_of MA:2 ! body
relationship: regulates MA:2
xref: UBERON:0000948

[Term]
id: MA:2
name: body

[Term]
id: MA:3
name: old heart
is_obsolete: true
replaced_by: MA:1
consider: MA:2

[Typedef]
id: part_of
name: part of
"#;
        let (onto, warnings) = parse_ontology_with_warnings(text).unwrap();
        assert_eq!(onto.ontology_id(), "ma");
        assert_eq!(onto.release_date(), Some("01:06:2010 12:00"));
        let heart = onto.get_concept("MA:1").unwrap();
        assert_eq!(heart.definition.as_deref(), Some("A \"hollow\" organ."));
        assert_eq!(heart.synonyms.len(), 2);
        assert!(heart.synonyms.contains("cardium"));
        assert_eq!(onto.parents_of("MA:1").unwrap(), vec!["MA:2"]);
        assert!(onto
            .relationships()
            .contains(&Relationship::new("MA:1", "MA:2", "regulates")));
        let old = onto.get_concept("MA:3").unwrap();
        assert!(old.obsolete);
        assert!(old.replaced_by.contains("MA:1"));
        assert!(old.consider.contains("MA:2"));
        assert_eq!(warnings.ignored_tags.get("xref"), Some(&1));
        assert_eq!(warnings.ignored_stanzas.get("Typedef"), Some(&1));
    }

    #[test]
    fn errors_carry_context() {
        let err = parse_ontology("[Term]\nid: A\nname a\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 3, .. }), "{err}");

        let err = parse_ontology("[Term]\nid: A\nname: a\n[Term]\nid: A\nname: b\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateAccession(ref a) if a == "A"));

        let err = parse_ontology("[Term]\nid: A\nname: a\nis_a: B\n").unwrap_err();
        match err {
            Error::DanglingRelationship {
                source_id,
                target_id,
                ..
            } => assert_eq!((source_id.as_str(), target_id.as_str()), ("A", "B")),
            other => panic!("unexpected {other}"),
        }

        let err = parse_ontology("[Term]\nid: A\nsynonym: \"open\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 3, .. }));

        let err = parse_ontology("[Term]\nname: a\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }));
    }

    #[test]
    fn is_a_cycle_is_validation_error() {
        let text = "[Term]\nid: A\nname: a\nis_a: B\n[Term]\nid: B\nname: b\nis_a: A\n";
        assert!(matches!(parse_ontology(text), Err(Error::Validation(_))));
    }

    #[test]
    fn writer_round_trips() {
        let text = "ontology: t\n[Term]\nid: A\nname: a\ndef: \"x \\\\ y\" []\nsynonym: \"q\\\"r\" EXACT []\n[Term]\nid: B\nname: b\nis_a: A\nrelationship: part_of A\nrelationship: has_part A\n";
        let onto = parse_ontology(text).unwrap();
        assert_eq!(parse_ontology(&to_obo(&onto)).unwrap(), onto);
    }
}
