#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use mapevo_core::ontology::{Concept, OntologyVersion, Relationship};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(rel)
}

const SYLLABLES: &[&str] = &[
    "car", "di", "ac", "neu", "ron", "he", "pat", "ic", "os", "te", "o", "my", "o", "cyte", "re",
    "nal", "gas", "tric", "lym", "pho", "ves", "sel", "mem", "brane", "epi", "the", "li", "al",
];

/// A pseudo-anatomical word built from a small syllable set, so that names
/// share many trigrams.
pub fn word(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(2..=3);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

pub fn name(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

/// Random letter word; 26³ trigrams keep posting lists short at scale.
pub fn random_word(rng: &mut impl Rng) -> String {
    let len = rng.gen_range(4..=9);
    (0..len)
        .map(|_| rng.gen_range(b'a'..=b'z') as char)
        .collect()
}

/// Copies `s` with one random character replaced, inserted or removed.
pub fn typo(rng: &mut impl Rng, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    if chars.is_empty() {
        return "x".into();
    }
    let i = rng.gen_range(0..chars.len());
    let c = rng.gen_range(b'a'..=b'z') as char;
    match rng.gen_range(0..3) {
        0 => chars[i] = c,
        1 => chars.insert(i, c),
        _ if chars.len() > 1 => {
            chars.remove(i);
        }
        _ => chars[i] = c,
    }
    chars.into_iter().collect()
}

/// Random tree-shaped ontology; every `is_a` edge points to a concept with a
/// smaller index, so the hierarchy stays acyclic.
pub fn random_ontology(rng: &mut impl Rng, id: &str, prefix: &str, n: usize) -> OntologyVersion {
    let mut concepts = Vec::with_capacity(n);
    let mut rels = Vec::new();
    for i in 0..n {
        let acc = format!("{prefix}:{i:05}");
        let mut c = Concept::new(acc.clone(), name(rng));
        if rng.gen_bool(0.3) {
            c = c.with_synonym(name(rng));
        }
        if rng.gen_bool(0.1) {
            let t = typo(rng, &c.name);
            c = c.with_synonym(t);
        }
        if i > 0 && rng.gen_bool(0.9) {
            rels.push(Relationship::is_a(
                acc.clone(),
                format!("{prefix}:{:05}", rng.gen_range(0..i)),
            ));
        }
        if i > 1 && rng.gen_bool(0.1) {
            rels.push(Relationship::new(
                acc.clone(),
                format!("{prefix}:{:05}", rng.gen_range(0..i)),
                "part_of",
            ));
        }
        concepts.push(c);
    }
    OntologyVersion::from_parts(id, 1, concepts, rels).unwrap()
}

/// A second ontology sharing part of `base`'s vocabulary: some names are
/// copied, some get typos, the rest are fresh.
pub fn perturbed_counterpart(
    rng: &mut impl Rng,
    base: &OntologyVersion,
    id: &str,
    prefix: &str,
    n: usize,
) -> OntologyVersion {
    let names: Vec<&str> = base.concepts().map(|c| c.name.as_str()).collect();
    let mut concepts = Vec::with_capacity(n);
    let mut rels = Vec::new();
    for i in 0..n {
        let acc = format!("{prefix}:{i:05}");
        let nm = match rng.gen_range(0..4) {
            0 if !names.is_empty() => names.choose(rng).unwrap().to_string(),
            1 if !names.is_empty() => {
                let src = *names.choose(rng).unwrap();
                typo(rng, src)
            }
            _ => name(rng),
        };
        let mut c = Concept::new(acc.clone(), nm);
        if rng.gen_bool(0.3) && !names.is_empty() {
            let src = *names.choose(rng).unwrap();
            let t = typo(rng, src);
            c = c.with_synonym(t);
        }
        if rng.gen_bool(0.05) {
            c = c.obsolete();
        }
        if i > 0 && rng.gen_bool(0.85) {
            rels.push(Relationship::is_a(
                acc.clone(),
                format!("{prefix}:{:05}", rng.gen_range(0..i)),
            ));
        }
        concepts.push(c);
    }
    OntologyVersion::from_parts(id, 1, concepts, rels).unwrap()
}

/// Large flat ontology with random-letter names for throughput checks.
pub fn large_ontology(
    seed: u64,
    id: &str,
    prefix: &str,
    n: usize,
    vocabulary: &[String],
) -> OntologyVersion {
    let mut rng = rng(seed);
    let concepts = (0..n).map(|i| {
        let words = rng.gen_range(1..=3);
        let nm = (0..words)
            .map(|_| vocabulary.choose(&mut rng).unwrap().as_str())
            .collect::<Vec<_>>()
            .join(" ");
        Concept::new(format!("{prefix}:{i:06}"), nm)
    });
    OntologyVersion::from_parts(id, 1, concepts, []).unwrap()
}

/// Counterpart of a large ontology: about half the names are copied from
/// `base`, some of those with a typo, the rest drawn fresh.
pub fn large_counterpart(
    seed: u64,
    base: &OntologyVersion,
    id: &str,
    prefix: &str,
    vocabulary: &[String],
) -> OntologyVersion {
    let mut rng = rng(seed);
    let names: Vec<&str> = base.concepts().map(|c| c.name.as_str()).collect();
    let concepts = (0..names.len()).map(|i| {
        let nm = match rng.gen_range(0..4) {
            0 => names.choose(&mut rng).unwrap().to_string(),
            1 => {
                let src = *names.choose(&mut rng).unwrap();
                typo(&mut rng, src)
            }
            _ => {
                let words = rng.gen_range(1..=3);
                (0..words)
                    .map(|_| vocabulary.choose(&mut rng).unwrap().as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            }
        };
        Concept::new(format!("{prefix}:{i:06}"), nm)
    });
    OntologyVersion::from_parts(id, 1, concepts, []).unwrap()
}

pub fn vocabulary(seed: u64, size: usize) -> Vec<String> {
    let mut rng = rng(seed);
    (0..size).map(|_| random_word(&mut rng)).collect()
}

/// Keeps the first `n` concepts (by accession) and the edges among them.
pub fn subsample(onto: &OntologyVersion, n: usize) -> OntologyVersion {
    let keep: BTreeSet<&str> = onto
        .concepts()
        .take(n)
        .map(|c| c.accession.as_str())
        .collect();
    let rels = onto
        .relationships()
        .iter()
        .filter(|r| keep.contains(r.source.as_str()) && keep.contains(r.target.as_str()))
        .cloned();
    OntologyVersion::from_parts(
        onto.ontology_id(),
        onto.version(),
        onto.concepts().take(n).cloned(),
        rels,
    )
    .unwrap()
}

/// `n` concepts of `onto`: those in `preferred` first, then the remaining
/// ones by accession.
pub fn sample_preferring(
    onto: &OntologyVersion,
    preferred: &BTreeSet<String>,
    n: usize,
) -> OntologyVersion {
    let picked: Vec<Concept> = onto
        .concepts()
        .filter(|c| preferred.contains(&c.accession))
        .chain(
            onto.concepts()
                .filter(|c| !preferred.contains(&c.accession)),
        )
        .take(n)
        .cloned()
        .collect();
    OntologyVersion::from_parts(onto.ontology_id(), onto.version(), picked, []).unwrap()
}

/// Base version for evolution fixtures: a random tree with synonyms,
/// definitions, `part_of` edges and a few relationship-free obsolete terms.
pub fn evolution_base(rng: &mut impl Rng, n: usize) -> OntologyVersion {
    let mut concepts = Vec::new();
    let mut rels = Vec::new();
    for i in 0..n {
        let acc = format!("E:{i:04}");
        let mut c = Concept::new(acc.clone(), format!("{} {i}", name(rng)));
        if rng.gen_bool(0.4) {
            c = c.with_synonym(format!("syn {i} {}", word(rng)));
        }
        if rng.gen_bool(0.4) {
            c = c.with_definition(format!("def {i} {}", name(rng)));
        }
        if i > 0 {
            rels.push(Relationship::is_a(
                acc.clone(),
                format!("E:{:04}", rng.gen_range(0..i)),
            ));
        }
        if i > 1 && rng.gen_bool(0.2) {
            rels.push(Relationship::new(
                acc.clone(),
                format!("E:{:04}", rng.gen_range(0..i)),
                "part_of",
            ));
        }
        concepts.push(c);
    }
    for j in 0..3 {
        concepts.push(Concept::new(format!("E:9{j:03}"), format!("retired {j}")).obsolete());
    }
    OntologyVersion::from_parts("evo", 1, concepts, rels).unwrap()
}

/// Mutable working copy used to build an evolved version.
pub struct Evolver {
    pub concepts: BTreeMap<String, Concept>,
    pub rels: BTreeSet<Relationship>,
    used: BTreeSet<String>,
    fresh: usize,
}

impl Evolver {
    pub fn new(base: &OntologyVersion) -> Self {
        Evolver {
            concepts: base.concept_map().clone(),
            rels: base.relationships().clone(),
            used: BTreeSet::new(),
            fresh: 0,
        }
    }

    fn fresh_acc(&mut self) -> String {
        self.fresh += 1;
        format!("N:{:04}", self.fresh)
    }

    fn fresh_name(&mut self, rng: &mut impl Rng) -> String {
        format!("{} new{}", name(rng), self.fresh)
    }

    fn children(&self, acc: &str) -> Vec<String> {
        self.rels
            .iter()
            .filter(|r| r.kind.is_hierarchical() && r.target == acc)
            .map(|r| r.source.clone())
            .collect()
    }

    fn parents(&self, acc: &str) -> Vec<&Relationship> {
        self.rels
            .iter()
            .filter(|r| r.kind.is_hierarchical() && r.source == acc)
            .collect()
    }

    fn touches(&self, acc: &str) -> bool {
        self.used.contains(acc)
    }

    /// Unused live concepts, none of whose neighbours are used either.
    fn free(&self, pred: impl Fn(&Self, &Concept) -> bool) -> Vec<String> {
        self.concepts
            .values()
            .filter(|c| !c.obsolete && !self.touches(&c.accession))
            .filter(|c| {
                self.rels
                    .iter()
                    .filter(|r| r.source == c.accession || r.target == c.accession)
                    .all(|r| !self.touches(&r.source) && !self.touches(&r.target))
            })
            .filter(|c| pred(self, c))
            .map(|c| c.accession.clone())
            .collect()
    }

    fn pick(
        &mut self,
        rng: &mut impl Rng,
        pred: impl Fn(&Self, &Concept) -> bool,
    ) -> Option<String> {
        let options = self.free(pred);
        let choice = options.choose(rng).cloned()?;
        self.used.insert(choice.clone());
        Some(choice)
    }

    fn is_leaf(&self, c: &Concept) -> bool {
        self.children(&c.accession).is_empty() && !self.rels.iter().any(|r| r.target == c.accession)
    }

    fn remove_concept(&mut self, acc: &str) {
        self.concepts.remove(acc);
        self.rels.retain(|r| r.source != acc && r.target != acc);
    }

    pub fn add_concept(&mut self, rng: &mut impl Rng) -> bool {
        let acc = self.fresh_acc();
        let nm = self.fresh_name(rng);
        self.used.insert(acc.clone());
        self.concepts.insert(acc.clone(), Concept::new(acc, nm));
        true
    }

    pub fn add_subgraph(&mut self, rng: &mut impl Rng) -> bool {
        let Some(anchor) = self.pick(rng, |_, _| true) else {
            return false;
        };
        let a = self.fresh_acc();
        let an = self.fresh_name(rng);
        let b = self.fresh_acc();
        let bn = self.fresh_name(rng);
        for (acc, nm) in [(&a, an), (&b, bn)] {
            self.used.insert(acc.clone());
            self.concepts
                .insert(acc.clone(), Concept::new(acc.clone(), nm));
        }
        self.rels.insert(Relationship::is_a(a.clone(), anchor));
        self.rels.insert(Relationship::is_a(b, a));
        true
    }

    pub fn add_relationship(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |_, _| true) else {
            return false;
        };
        let Some(y) = self.pick(rng, |_, _| true) else {
            return false;
        };
        self.rels.insert(Relationship::new(x, y, "develops_from"));
        true
    }

    pub fn add_attribute(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |_, _| true) else {
            return false;
        };
        let syn = format!("extra synonym {}", self.fresh_acc());
        self.concepts.get_mut(&x).unwrap().synonyms.insert(syn);
        true
    }

    pub fn mark_non_obsolete(&mut self, rng: &mut impl Rng) -> bool {
        let options: Vec<String> = self
            .concepts
            .values()
            .filter(|c| c.obsolete && !self.used.contains(&c.accession))
            .map(|c| c.accession.clone())
            .collect();
        let Some(x) = options.choose(rng).cloned() else {
            return false;
        };
        self.used.insert(x.clone());
        self.concepts.get_mut(&x).unwrap().obsolete = false;
        true
    }

    pub fn del_concept(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |s, c| s.is_leaf(c)) else {
            return false;
        };
        self.remove_concept(&x);
        true
    }

    pub fn del_subgraph(&mut self, rng: &mut impl Rng) -> bool {
        let Some(p) = self.pick(rng, |s, c| {
            let kids = s.children(&c.accession);
            kids.len() == 1
                && s.parents(&c.accession).len() == 1
                && !s
                    .rels
                    .iter()
                    .any(|r| r.target == c.accession && r.source != kids[0])
                && s.concepts
                    .get(&kids[0])
                    .is_some_and(|k| s.is_leaf(k) && !s.touches(&k.accession))
                && s.parents(&kids[0]).len() == 1
        }) else {
            return false;
        };
        let kid = self.children(&p)[0].clone();
        self.used.insert(kid.clone());
        self.remove_concept(&kid);
        self.remove_concept(&p);
        true
    }

    pub fn del_relationship(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |s, c| {
            s.rels
                .iter()
                .any(|r| r.source == c.accession && r.kind.as_str() == "part_of")
        }) else {
            return false;
        };
        let edge = self
            .rels
            .iter()
            .find(|r| r.source == x && r.kind.as_str() == "part_of")
            .cloned()
            .unwrap();
        self.rels.remove(&edge);
        true
    }

    pub fn del_attribute(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |_, c| !c.synonyms.is_empty()) else {
            return false;
        };
        self.concepts.get_mut(&x).unwrap().synonyms.clear();
        true
    }

    pub fn mark_obsolete(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |s, c| s.is_leaf(c)) else {
            return false;
        };
        self.concepts.get_mut(&x).unwrap().obsolete = true;
        true
    }

    pub fn split(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |s, c| s.is_leaf(c)) else {
            return false;
        };
        self.remove_concept(&x);
        for _ in 0..2 {
            let acc = self.fresh_acc();
            let nm = self.fresh_name(rng);
            self.used.insert(acc.clone());
            self.concepts.insert(
                acc.clone(),
                Concept::new(acc, nm).with_replaced_by(x.clone()),
            );
        }
        true
    }

    pub fn merge(&mut self, rng: &mut impl Rng) -> bool {
        let Some(a) = self.pick(rng, |s, c| s.is_leaf(c)) else {
            return false;
        };
        let Some(b) = self.pick(rng, |s, c| s.is_leaf(c)) else {
            return false;
        };
        let Some(t) = self.pick(rng, |_, _| true) else {
            return false;
        };
        self.remove_concept(&a);
        self.remove_concept(&b);
        let target = self.concepts.get_mut(&t).unwrap();
        target.replaced_by.insert(a);
        target.replaced_by.insert(b);
        true
    }

    pub fn substitute(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |s, c| s.is_leaf(c)) else {
            return false;
        };
        self.remove_concept(&x);
        let acc = self.fresh_acc();
        let nm = self.fresh_name(rng);
        self.used.insert(acc.clone());
        self.concepts
            .insert(acc.clone(), Concept::new(acc, nm).with_replaced_by(x));
        true
    }

    pub fn move_concept(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |s, c| {
            s.parents(&c.accession)
                .iter()
                .any(|r| r.kind.as_str() == "is_a")
        }) else {
            return false;
        };
        let old = self
            .rels
            .iter()
            .find(|r| r.source == x && r.kind.as_str() == "is_a")
            .cloned()
            .unwrap();
        // Any concept with a smaller index keeps the is_a graph acyclic.
        let Some(q) = self.pick(rng, |_, c| {
            c.accession < x && c.accession != old.target && c.accession.starts_with("E:0")
        }) else {
            return false;
        };
        self.rels.remove(&old);
        self.rels.insert(Relationship::is_a(x, q));
        true
    }

    pub fn change_attribute_value(&mut self, rng: &mut impl Rng) -> bool {
        let Some(x) = self.pick(rng, |_, _| true) else {
            return false;
        };
        let nm = self.fresh_name(rng);
        self.fresh += 1;
        self.concepts.get_mut(&x).unwrap().name = nm;
        true
    }

    pub fn finish(self, version: u32) -> OntologyVersion {
        OntologyVersion::from_parts("evo", version, self.concepts.into_values(), self.rels).unwrap()
    }
}

/// Old/new pair with every kind of change applied when the base allows it.
pub fn evolution_pair(seed: u64) -> (OntologyVersion, OntologyVersion) {
    let mut rng = rng(seed);
    let n = rng.gen_range(40..=80);
    let base = evolution_base(&mut rng, n);
    let mut ev = Evolver::new(&base);
    type Mutation = fn(&mut Evolver, &mut ChaCha8Rng) -> bool;
    let mut mutations: Vec<Mutation> = vec![
        |e, r| e.add_concept(r),
        |e, r| e.add_subgraph(r),
        |e, r| e.add_relationship(r),
        |e, r| e.add_attribute(r),
        |e, r| e.mark_non_obsolete(r),
        |e, r| e.del_concept(r),
        |e, r| e.del_subgraph(r),
        |e, r| e.del_relationship(r),
        |e, r| e.del_attribute(r),
        |e, r| e.mark_obsolete(r),
        |e, r| e.split(r),
        |e, r| e.merge(r),
        |e, r| e.substitute(r),
        |e, r| e.move_concept(r),
        |e, r| e.change_attribute_value(r),
    ];
    mutations.shuffle(&mut rng);
    for m in mutations {
        if rng.gen_bool(0.8) {
            m(&mut ev, &mut rng);
        }
    }
    (base, ev.finish(2))
}
