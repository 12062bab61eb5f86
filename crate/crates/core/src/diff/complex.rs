//! Rule-based folding of basic operations into split / merge / substitute /
//! move / subgraph operations.
//!
//! Rules run in a fixed order and each basic op is consumed at most once:
//! 1. `replaced_by` metadata (either on the deleted concept in the old version
//!    or on the replacing concept in the new one; `consider` as a fallback
//!    when it names exactly one concept).
//! 2. A deleted concept whose name shows up as a synonym newly added to
//!    exactly one concept is merged into that concept.
//! 3. Structure: parent-set changes of surviving concepts become moves, and
//!    connected groups of inserted (removed) concepts hanging off a single
//!    surviving concept become subgraph operations.
//!
//! This approximates full change detection; deletions matching no rule stay
//! `del_concept`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{Attribute, ChangeKind, ChangeOp, Payload};
use crate::ontology::{Hierarchy, OntologyVersion};

struct Pool {
    slots: Vec<Option<ChangeOp>>,
    add_concept: HashMap<String, usize>,
    del_concept: HashMap<String, usize>,
    add_rels: HashMap<String, Vec<usize>>,
    del_rels: HashMap<String, Vec<usize>>,
    added_attr: HashMap<(String, Attribute, String), usize>,
}

impl Pool {
    fn new(basic: Vec<ChangeOp>) -> Self {
        let mut pool = Pool {
            slots: Vec::with_capacity(basic.len()),
            add_concept: HashMap::new(),
            del_concept: HashMap::new(),
            add_rels: HashMap::new(),
            del_rels: HashMap::new(),
            added_attr: HashMap::new(),
        };
        for (i, op) in basic.into_iter().enumerate() {
            let subject = op.subjects.first().cloned().unwrap_or_default();
            match (&op.kind, &op.payload) {
                (ChangeKind::AddConcept, _) => {
                    pool.add_concept.insert(subject, i);
                }
                (ChangeKind::DelConcept, _) => {
                    pool.del_concept.insert(subject, i);
                }
                (ChangeKind::AddRelationship, _) => {
                    pool.add_rels.entry(subject).or_default().push(i)
                }
                (ChangeKind::DelRelationship, _) => {
                    pool.del_rels.entry(subject).or_default().push(i)
                }
                (ChangeKind::AddAttribute, Payload::Attribute { attribute, value }) => {
                    pool.added_attr
                        .insert((subject, *attribute, value.clone()), i);
                }
                _ => {}
            }
            pool.slots.push(Some(op));
        }
        pool
    }

    fn take(&mut self, slot: usize) -> Option<ChangeOp> {
        self.slots[slot].take()
    }

    fn available(&self, slot: usize) -> bool {
        self.slots[slot].is_some()
    }

    fn take_concept(&mut self, index: Index, acc: &str, parts: &mut Vec<ChangeOp>) {
        let (concepts, rels) = match index {
            Index::Added => (&self.add_concept, &self.add_rels),
            Index::Deleted => (&self.del_concept, &self.del_rels),
        };
        let mut slots: Vec<usize> = concepts.get(acc).copied().into_iter().collect();
        slots.extend(rels.get(acc).into_iter().flatten().copied());
        parts.extend(slots.into_iter().filter_map(|s| self.take(s)));
    }

    fn take_attr(
        &mut self,
        acc: &str,
        attribute: Attribute,
        value: &str,
        parts: &mut Vec<ChangeOp>,
    ) {
        if let Some(&slot) = self
            .added_attr
            .get(&(acc.to_string(), attribute, value.to_string()))
        {
            parts.extend(self.take(slot));
        }
    }

    fn concept_pending(&self, index: Index, acc: &str) -> bool {
        let map = match index {
            Index::Added => &self.add_concept,
            Index::Deleted => &self.del_concept,
        };
        map.get(acc).is_some_and(|&s| self.available(s))
    }
}

#[derive(Clone, Copy)]
enum Index {
    Added,
    Deleted,
}

pub fn detect_complex_changes(
    old: &OntologyVersion,
    new: &OntologyVersion,
    basic: Vec<ChangeOp>,
) -> Vec<ChangeOp> {
    let mut pool = Pool::new(basic);
    let mut complex = Vec::new();

    replacements(old, new, &mut pool, &mut complex);
    moves(old, new, &mut pool, &mut complex);
    subgraphs(old, new, Index::Added, &mut pool, &mut complex);
    subgraphs(new, old, Index::Deleted, &mut pool, &mut complex);

    let mut ops: Vec<ChangeOp> = pool.slots.into_iter().flatten().collect();
    ops.extend(complex);
    ops.sort();
    ops
}

fn reverse_links<'a>(
    onto: &'a OntologyVersion,
    pick: impl Fn(&'a crate::ontology::Concept) -> &'a BTreeSet<String>,
) -> HashMap<&'a str, Vec<&'a str>> {
    let mut map: HashMap<&str, Vec<&str>> = HashMap::new();
    for concept in onto.concepts() {
        for linked in pick(concept) {
            map.entry(linked.as_str())
                .or_default()
                .push(concept.accession.as_str());
        }
    }
    map
}

fn replacements(
    old: &OntologyVersion,
    new: &OntologyVersion,
    pool: &mut Pool,
    out: &mut Vec<ChangeOp>,
) {
    let replaced_in_new = reverse_links(new, |c| &c.replaced_by);
    let considered_in_new = reverse_links(new, |c| &c.consider);

    let mut deleted: Vec<String> = pool.del_concept.keys().cloned().collect();
    deleted.sort();

    let mut singles: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut via_synonym: HashMap<String, String> = HashMap::new();
    let mut unmatched = Vec::new();

    for c in &deleted {
        let before = old.get_concept(c).expect("deleted concept exists in old");
        let targets = |own: &BTreeSet<String>, reverse: &HashMap<&str, Vec<&str>>| {
            own.iter()
                .map(String::as_str)
                .chain(reverse.get(c.as_str()).into_iter().flatten().copied())
                .filter(|t| new.contains(t))
                .map(str::to_string)
                .collect::<BTreeSet<String>>()
        };
        let mut found = targets(&before.replaced_by, &replaced_in_new);
        if found.is_empty() {
            let considered = targets(&before.consider, &considered_in_new);
            if considered.len() == 1 {
                found = considered;
            }
        }
        match found.len() {
            0 => unmatched.push(c.clone()),
            1 => singles
                .entry(found.into_iter().next().unwrap())
                .or_default()
                .push(c.clone()),
            _ => {
                let mut parts = Vec::new();
                pool.take_concept(Index::Deleted, c, &mut parts);
                for t in &found {
                    claim_target(pool, old, t, c, &mut parts);
                }
                let mut subjects = vec![c.clone()];
                subjects.extend(found.iter().cloned());
                parts.sort();
                out.push(ChangeOp::new(
                    ChangeKind::Split,
                    subjects,
                    Payload::Replacement {
                        from: vec![c.clone()],
                        to: found.into_iter().collect(),
                        parts,
                    },
                ));
            }
        }
    }

    // Name of a deleted concept re-appearing as a fresh synonym elsewhere.
    let mut fresh_synonyms: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for (acc, attribute, value) in pool.added_attr.keys() {
        if *attribute == Attribute::Synonym {
            fresh_synonyms
                .entry(value.as_str())
                .or_default()
                .insert(acc.as_str());
        }
    }
    let mut synonym_hits = Vec::new();
    for c in &unmatched {
        let name = &old.get_concept(c).expect("deleted concept exists").name;
        if name.is_empty() {
            continue;
        }
        if let Some(holders) = fresh_synonyms.get(name.as_str()) {
            if holders.len() == 1 {
                let t = holders.iter().next().unwrap().to_string();
                synonym_hits.push((t, c.clone(), name.clone()));
            }
        }
    }
    for (t, c, name) in synonym_hits {
        singles.entry(t).or_default().push(c.clone());
        via_synonym.insert(c, name);
    }

    for (t, mut sources) in singles {
        sources.sort();
        let kind = if sources.len() == 1 && !old.contains(&t) {
            ChangeKind::Substitute
        } else {
            ChangeKind::Merge
        };
        let mut parts = Vec::new();
        for c in &sources {
            pool.take_concept(Index::Deleted, c, &mut parts);
            if let Some(name) = via_synonym.get(c) {
                pool.take_attr(&t, Attribute::Synonym, name, &mut parts);
            }
            claim_target(pool, old, &t, c, &mut parts);
        }
        let mut subjects = sources.clone();
        subjects.push(t.clone());
        parts.sort();
        out.push(ChangeOp::new(
            kind,
            subjects,
            Payload::Replacement {
                from: sources,
                to: vec![t],
                parts,
            },
        ));
    }
}

/// Pulls the ops describing replacement target `t` of deleted `c` into `parts`.
fn claim_target(
    pool: &mut Pool,
    old: &OntologyVersion,
    t: &str,
    c: &str,
    parts: &mut Vec<ChangeOp>,
) {
    if old.contains(t) {
        pool.take_attr(t, Attribute::ReplacedBy, c, parts);
        pool.take_attr(t, Attribute::Consider, c, parts);
    } else if pool.concept_pending(Index::Added, t) {
        pool.take_concept(Index::Added, t, parts);
    }
}

fn hierarchical_slots(
    pool: &Pool,
    by_source: &HashMap<String, Vec<usize>>,
    acc: &str,
) -> Vec<usize> {
    by_source
        .get(acc)
        .into_iter()
        .flatten()
        .copied()
        .filter(|&s| match &pool.slots[s] {
            Some(ChangeOp {
                payload: Payload::Relationship { relationship },
                ..
            }) => relationship.kind.is_hierarchical(),
            _ => false,
        })
        .collect()
}

fn relationship_target(op: &ChangeOp) -> String {
    match &op.payload {
        Payload::Relationship { relationship } => relationship.target.clone(),
        _ => unreachable!("relationship slot"),
    }
}

fn moves(old: &OntologyVersion, new: &OntologyVersion, pool: &mut Pool, out: &mut Vec<ChangeOp>) {
    let shared = old
        .concept_map()
        .keys()
        .filter(|acc| new.contains(acc))
        .cloned()
        .collect::<Vec<_>>();
    for acc in shared {
        let removed = hierarchical_slots(pool, &pool.del_rels, &acc);
        let added = hierarchical_slots(pool, &pool.add_rels, &acc);
        if removed.is_empty() || added.is_empty() {
            continue;
        }
        let removed: Vec<ChangeOp> = removed.into_iter().filter_map(|s| pool.take(s)).collect();
        let added: Vec<ChangeOp> = added.into_iter().filter_map(|s| pool.take(s)).collect();
        let old_parents = removed.iter().map(relationship_target).collect();
        let new_parents = added.iter().map(relationship_target).collect();
        let mut parts: Vec<ChangeOp> = removed.into_iter().chain(added).collect();
        parts.sort();
        out.push(ChangeOp::new(
            ChangeKind::Move,
            vec![acc],
            Payload::Move {
                old_parents,
                new_parents,
                parts,
            },
        ));
    }
}

/// Pending insertions (deletions) are grouped using the hierarchy of
/// `structure`; the anchor must also exist in `counterpart`.
fn subgraphs(
    counterpart: &OntologyVersion,
    structure: &OntologyVersion,
    index: Index,
    pool: &mut Pool,
    out: &mut Vec<ChangeOp>,
) {
    let (pending_map, kind) = match index {
        Index::Added => (pool.add_concept.clone(), ChangeKind::AddSubgraph),
        Index::Deleted => (pool.del_concept.clone(), ChangeKind::DelSubgraph),
    };
    let pending: BTreeSet<String> = pending_map
        .iter()
        .filter(|(_, &s)| pool.available(s))
        .map(|(acc, _)| acc.clone())
        .collect();
    if pending.len() < 2 {
        return;
    }
    let hierarchy = structure.hierarchy();
    let mut visited: BTreeSet<&str> = BTreeSet::new();
    let mut components = Vec::new();
    for start in &pending {
        if visited.contains(start.as_str()) {
            continue;
        }
        let component = component_of(start, &pending, &hierarchy, &mut visited);
        if component.len() >= 2 {
            components.push(component);
        }
    }

    for component in components {
        let members: BTreeSet<&str> = component.iter().map(String::as_str).collect();
        let mut anchors = BTreeSet::new();
        let mut roots = BTreeSet::new();
        let mut entered_from_outside = false;
        for m in &members {
            for parent in hierarchy.parents(m) {
                if !members.contains(parent) {
                    anchors.insert(*parent);
                    roots.insert(*m);
                }
            }
            if hierarchy.children(m).iter().any(|c| !members.contains(c)) {
                entered_from_outside = true;
            }
        }
        if entered_from_outside || anchors.len() != 1 {
            continue;
        }
        let anchor = *anchors.iter().next().unwrap();
        if !counterpart.contains(anchor) || !structure.contains(anchor) {
            continue;
        }
        let by_source = match index {
            Index::Added => &pool.add_rels,
            Index::Deleted => &pool.del_rels,
        };
        let mut slots: Vec<usize> = members
            .iter()
            .filter_map(|m| pending_map.get(*m).copied())
            .collect();
        for m in &members {
            slots.extend(hierarchical_slots(pool, by_source, m));
        }
        let mut parts: Vec<ChangeOp> = slots.into_iter().filter_map(|s| pool.take(s)).collect();
        parts.sort();
        out.push(ChangeOp::new(
            kind,
            component.clone(),
            Payload::Subgraph {
                root: roots.iter().next().unwrap().to_string(),
                anchor: anchor.to_string(),
                parts,
            },
        ));
    }
}

fn component_of<'a>(
    start: &'a str,
    pending: &'a BTreeSet<String>,
    hierarchy: &Hierarchy<'_>,
    visited: &mut BTreeSet<&'a str>,
) -> Vec<String> {
    let mut component = Vec::new();
    let mut queue = VecDeque::from([start]);
    visited.insert(start);
    while let Some(node) = queue.pop_front() {
        component.push(node.to_string());
        for next in hierarchy
            .parents(node)
            .iter()
            .chain(hierarchy.children(node))
        {
            if let Some(next) = pending.get(*next) {
                if visited.insert(next.as_str()) {
                    queue.push_back(next.as_str());
                }
            }
        }
    }
    component.sort();
    component
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{apply_diff, compute_basic_diff};
    use crate::ontology::{Concept, Relationship};

    fn run(old: &OntologyVersion, new: &OntologyVersion) -> Vec<ChangeOp> {
        let basic = compute_basic_diff(old, new).unwrap();
        let ops = detect_complex_changes(old, new, basic.clone());
        assert_eq!(
            apply_diff(old, &ops).unwrap(),
            apply_diff(old, &basic).unwrap()
        );
        ops
    }

    fn kinds(ops: &[ChangeOp]) -> Vec<ChangeKind> {
        ops.iter().map(|o| o.kind).collect()
    }

    #[test]
    fn replaced_by_on_survivor_is_merge() {
        let old = OntologyVersion::from_parts(
            "o",
            1,
            [
                Concept::new("c1", "heart muscle"),
                Concept::new("c2", "cardiac muscle"),
            ],
            [],
        )
        .unwrap();
        let new = OntologyVersion::from_parts(
            "o",
            2,
            [Concept::new("c2", "cardiac muscle").with_replaced_by("c1")],
            [],
        )
        .unwrap();
        let ops = run(&old, &new);
        assert_eq!(kinds(&ops), vec![ChangeKind::Merge]);
        assert_eq!(ops[0].subjects, vec!["c1", "c2"]);
        match &ops[0].payload {
            Payload::Replacement { from, to, parts } => {
                assert_eq!(from, &vec!["c1".to_string()]);
                assert_eq!(to, &vec!["c2".to_string()]);
                // del_concept(c1) plus the replaced_by tag on c2.
                assert_eq!(parts.len(), 2);
            }
            other => panic!("unexpected payload {other:?}"),
        }
    }

    #[test]
    fn two_deletions_into_one_survivor_fold_into_one_merge() {
        let old = OntologyVersion::from_parts(
            "o",
            1,
            [
                Concept::new("a", "x").with_replaced_by("c"),
                Concept::new("b", "y").with_replaced_by("c"),
                Concept::new("c", "z"),
            ],
            [],
        )
        .unwrap();
        let new = OntologyVersion::from_parts("o", 2, [Concept::new("c", "z")], []).unwrap();
        let ops = run(&old, &new);
        assert_eq!(kinds(&ops), vec![ChangeKind::Merge]);
        assert_eq!(ops[0].subjects, vec!["a", "b", "c"]);
    }

    #[test]
    fn split_and_substitute() {
        let old = OntologyVersion::from_parts(
            "o",
            1,
            [
                Concept::new("s", "limb")
                    .with_replaced_by("s1")
                    .with_replaced_by("s2"),
                Concept::new("u", "old name").with_replaced_by("u2"),
            ],
            [],
        )
        .unwrap();
        let new = OntologyVersion::from_parts(
            "o",
            2,
            [
                Concept::new("s1", "arm"),
                Concept::new("s2", "leg"),
                Concept::new("u2", "new name"),
            ],
            [],
        )
        .unwrap();
        let ops = run(&old, &new);
        assert_eq!(kinds(&ops), vec![ChangeKind::Split, ChangeKind::Substitute]);
        assert_eq!(ops[0].subjects, vec!["s", "s1", "s2"]);
        assert_eq!(ops[1].subjects, vec!["u", "u2"]);
    }

    #[test]
    fn name_reappearing_as_synonym_is_merge() {
        let old = OntologyVersion::from_parts(
            "o",
            1,
            [Concept::new("a", "cor"), Concept::new("b", "heart")],
            [],
        )
        .unwrap();
        let new = OntologyVersion::from_parts(
            "o",
            2,
            [Concept::new("b", "heart").with_synonym("cor")],
            [],
        )
        .unwrap();
        let ops = run(&old, &new);
        assert_eq!(kinds(&ops), vec![ChangeKind::Merge]);
    }

    #[test]
    fn chain_under_existing_root_is_one_subgraph() {
        let old = OntologyVersion::from_parts("o", 1, [Concept::new("r", "root")], []).unwrap();
        let new = OntologyVersion::from_parts(
            "o",
            2,
            [
                Concept::new("r", "root"),
                Concept::new("n1", "one"),
                Concept::new("n2", "two"),
                Concept::new("n3", "three"),
            ],
            [
                Relationship::is_a("n1", "r"),
                Relationship::is_a("n2", "n1"),
                Relationship::is_a("n3", "n2"),
            ],
        )
        .unwrap();
        let ops = run(&old, &new);
        assert_eq!(kinds(&ops), vec![ChangeKind::AddSubgraph]);
        assert_eq!(ops[0].subjects.len(), 3);
        match &ops[0].payload {
            Payload::Subgraph {
                root,
                anchor,
                parts,
            } => {
                assert_eq!((root.as_str(), anchor.as_str()), ("n1", "r"));
                assert_eq!(parts.len(), 6);
            }
            other => panic!("unexpected payload {other:?}"),
        }
        // Reverse direction removes the same subtree.
        let back = run(&new, &old.clone().with_version(3));
        assert_eq!(kinds(&back), vec![ChangeKind::DelSubgraph]);
    }

    #[test]
    fn reparenting_is_move() {
        let concepts = [
            Concept::new("a", "a"),
            Concept::new("b", "b"),
            Concept::new("c", "c"),
        ];
        let old =
            OntologyVersion::from_parts("o", 1, concepts.clone(), [Relationship::is_a("c", "a")])
                .unwrap();
        let new =
            OntologyVersion::from_parts("o", 2, concepts, [Relationship::is_a("c", "b")]).unwrap();
        let ops = run(&old, &new);
        assert_eq!(kinds(&ops), vec![ChangeKind::Move]);
        assert_eq!(ops[0].subjects, vec!["c"]);
    }

    #[test]
    fn plain_changes_pass_through() {
        let old = OntologyVersion::from_parts("o", 1, [Concept::new("a", "a")], []).unwrap();
        let new = OntologyVersion::from_parts("o", 2, [Concept::new("b", "b")], []).unwrap();
        let basic = compute_basic_diff(&old, &new).unwrap();
        assert_eq!(detect_complex_changes(&old, &new, basic.clone()), basic);
    }
}
