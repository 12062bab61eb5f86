//! Inverted trigram index over the strings a strategy compares.
//!
//! Scoring walks the posting lists of a query's trigrams and accumulates the
//! multiset overlap per indexed string, so only strings sharing at least one
//! trigram with the query are ever scored. Strings sharing none have Dice
//! similarity 0, which no positive threshold admits.

use std::collections::HashMap;

use super::similarity::ConceptContext;
use super::trigram::{dice, TrigramProfile};
use super::Strategy;
use crate::ontology::OntologyVersion;

#[derive(Debug, Clone, Copy)]
struct Posting {
    profile: u32,
    count: u32,
}

/// One side of a match: the non-obsolete concepts of a version (sorted by
/// accession) and their trigram profiles under a strategy.
#[derive(Debug, Clone)]
pub(crate) struct Profiles {
    pub accessions: Vec<String>,
    pub per_concept: Vec<Vec<TrigramProfile>>,
}

impl Profiles {
    pub fn build(onto: &OntologyVersion, strategy: Strategy) -> Self {
        let hierarchy = onto.hierarchy();
        let mut accessions = Vec::new();
        let mut per_concept = Vec::new();
        for concept in onto.concepts().filter(|c| !c.obsolete) {
            let ctx = ConceptContext::with_hierarchy(onto, &hierarchy, concept);
            accessions.push(concept.accession.clone());
            per_concept.push(ctx.profiles(strategy));
        }
        Profiles {
            accessions,
            per_concept,
        }
    }

    pub fn len(&self) -> usize {
        self.accessions.len()
    }
}

#[derive(Debug, Clone)]
pub struct TrigramIndex {
    strategy: Strategy,
    pub(crate) profiles: Profiles,
    postings: HashMap<u64, Vec<Posting>>,
    profile_owner: Vec<u32>,
    profile_len: Vec<u32>,
    /// Concepts owning a profile with no trigrams (similarity 1 to another
    /// empty profile).
    empty_owners: Vec<u32>,
}

/// Builds the index over the non-obsolete concepts of `version`.
pub fn build_trigram_index(version: &OntologyVersion, strategy: Strategy) -> TrigramIndex {
    TrigramIndex::from_profiles(Profiles::build(version, strategy), strategy)
}

impl TrigramIndex {
    pub(crate) fn from_profiles(profiles: Profiles, strategy: Strategy) -> Self {
        let mut postings: HashMap<u64, Vec<Posting>> = HashMap::new();
        let mut profile_owner = Vec::new();
        let mut profile_len = Vec::new();
        let mut empty_owners = Vec::new();
        for (owner, list) in profiles.per_concept.iter().enumerate() {
            for profile in list {
                if profile.is_empty() {
                    if empty_owners.last() != Some(&(owner as u32)) {
                        empty_owners.push(owner as u32);
                    }
                    continue;
                }
                let id = profile_owner.len() as u32;
                profile_owner.push(owner as u32);
                profile_len.push(profile.len() as u32);
                for (gram, count) in profile.counts() {
                    postings
                        .entry(gram)
                        .or_default()
                        .push(Posting { profile: id, count });
                }
            }
        }
        TrigramIndex {
            strategy,
            profiles,
            postings,
            profile_owner,
            profile_len,
            empty_owners,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Number of indexed concepts.
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.len() == 0
    }

    pub fn distinct_trigrams(&self) -> usize {
        self.postings.len()
    }

    pub fn accession(&self, idx: usize) -> &str {
        &self.profiles.accessions[idx]
    }

    /// Accessions of concepts sharing at least one trigram with `text`.
    pub fn lookup(&self, text: &str) -> Vec<&str> {
        let query = TrigramProfile::new(text);
        let mut scratch = Scratch::new(self);
        let mut hits: Vec<&str> = self
            .candidates(
                std::slice::from_ref(&query),
                f64::MIN_POSITIVE,
                &mut scratch,
            )
            .into_iter()
            .map(|(idx, _)| self.accession(idx as usize))
            .collect();
        hits.sort_unstable();
        hits
    }

    /// Indexed concepts whose best profile similarity to `query` is at least
    /// `threshold` (which must be positive), as `(concept index, score)`
    /// sorted by index.
    pub(crate) fn candidates(
        &self,
        query: &[TrigramProfile],
        threshold: f64,
        scratch: &mut Scratch,
    ) -> Vec<(u32, f64)> {
        debug_assert!(threshold > 0.0);
        for q in query {
            if q.is_empty() {
                for &owner in &self.empty_owners {
                    scratch.offer(owner, 1.0);
                }
                continue;
            }
            for (gram, count) in q.counts() {
                let Some(list) = self.postings.get(&gram) else {
                    continue;
                };
                for p in list {
                    let slot = &mut scratch.overlap[p.profile as usize];
                    if *slot == 0 {
                        scratch.touched.push(p.profile);
                    }
                    *slot += count.min(p.count);
                }
            }
            let qlen = q.len();
            for i in 0..scratch.touched.len() {
                let profile = scratch.touched[i] as usize;
                let shared = std::mem::take(&mut scratch.overlap[profile]) as usize;
                let score = dice(shared, qlen, self.profile_len[profile] as usize);
                scratch.offer(self.profile_owner[profile], score);
            }
            scratch.touched.clear();
        }
        let mut out: Vec<(u32, f64)> = scratch
            .best_touched
            .drain(..)
            .filter_map(|owner| {
                let score = std::mem::take(&mut scratch.best[owner as usize]);
                (score >= threshold).then_some((owner, score))
            })
            .collect();
        out.sort_unstable_by_key(|&(owner, _)| owner);
        out
    }
}

/// Per-worker accumulators, sized to the index and reset after each query.
pub(crate) struct Scratch {
    overlap: Vec<u32>,
    touched: Vec<u32>,
    best: Vec<f64>,
    best_touched: Vec<u32>,
}

impl Scratch {
    pub fn new(index: &TrigramIndex) -> Self {
        Scratch {
            overlap: vec![0; index.profile_len.len()],
            touched: Vec::new(),
            best: vec![0.0; index.len()],
            best_touched: Vec::new(),
        }
    }

    fn offer(&mut self, owner: u32, score: f64) {
        let slot = &mut self.best[owner as usize];
        if *slot == 0.0 {
            self.best_touched.push(owner);
        }
        if score > *slot {
            *slot = score;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Concept;

    fn onto(names: &[(&str, &str)]) -> OntologyVersion {
        OntologyVersion::from_parts("o", 1, names.iter().map(|(a, n)| Concept::new(*a, *n)), [])
            .unwrap()
    }

    #[test]
    fn empty_version_gives_empty_index() {
        let idx = build_trigram_index(&OntologyVersion::empty("o", 1), Strategy::Name);
        assert!(idx.is_empty());
        assert_eq!(idx.distinct_trigrams(), 0);
    }

    #[test]
    fn lookup_finds_only_trigram_sharing_concepts() {
        let idx = build_trigram_index(
            &onto(&[("a", "heart"), ("b", "liver"), ("c", "hearth")]),
            Strategy::Name,
        );
        assert_eq!(idx.lookup("heart"), vec!["a", "c"]);
        assert!(idx.lookup("xyz").is_empty());
    }

    #[test]
    fn obsolete_concepts_are_not_indexed() {
        let o = OntologyVersion::from_parts(
            "o",
            1,
            [
                Concept::new("a", "heart"),
                Concept::new("b", "heart").obsolete(),
            ],
            [],
        )
        .unwrap();
        assert_eq!(build_trigram_index(&o, Strategy::Name).len(), 1);
    }

    #[test]
    fn scores_match_direct_similarity() {
        let idx = build_trigram_index(
            &onto(&[("a", "heart"), ("b", "hearts"), ("c", "earth")]),
            Strategy::Name,
        );
        let q = [TrigramProfile::new("heart")];
        let mut scratch = Scratch::new(&idx);
        for (owner, score) in idx.candidates(&q, 1e-9, &mut scratch) {
            let direct = q[0].similarity(&idx.profiles.per_concept[owner as usize][0]);
            assert_eq!(score, direct);
        }
        // Scratch is clean for the next query.
        assert!(scratch.overlap.iter().all(|&v| v == 0));
        assert!(scratch.best.iter().all(|&v| v == 0.0));
    }
}
