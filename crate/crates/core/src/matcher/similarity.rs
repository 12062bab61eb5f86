use crate::ontology::{Concept, Hierarchy, OntologyVersion};

use super::trigram::{normalize, TrigramProfile};
use super::Strategy;

/// A concept together with the parent and child names the Context strategy
/// reads. Only `is_a`/`part_of` edges count as hierarchy.
#[derive(Debug, Clone)]
pub struct ConceptContext<'a> {
    pub concept: &'a Concept,
    pub parent_names: Vec<&'a str>,
    pub child_names: Vec<&'a str>,
}

impl<'a> ConceptContext<'a> {
    /// A concept with no hierarchy around it.
    pub fn isolated(concept: &'a Concept) -> Self {
        ConceptContext {
            concept,
            parent_names: Vec::new(),
            child_names: Vec::new(),
        }
    }

    pub fn in_version(onto: &'a OntologyVersion, accession: &str) -> Option<Self> {
        let concept = onto.get_concept(accession)?;
        Some(Self::with_hierarchy(onto, &onto.hierarchy(), concept))
    }

    pub fn with_hierarchy(
        onto: &'a OntologyVersion,
        hierarchy: &Hierarchy<'a>,
        concept: &'a Concept,
    ) -> Self {
        let names = |accs: &[&'a str]| {
            let mut names: Vec<&'a str> = accs
                .iter()
                .filter_map(|a| onto.get_concept(a))
                .map(|c| c.name.as_str())
                .collect();
            names.sort_by_cached_key(|n| normalize(n));
            names
        };
        ConceptContext {
            concept,
            parent_names: names(hierarchy.parents(&concept.accession)),
            child_names: names(hierarchy.children(&concept.accession)),
        }
    }

    /// The strings a strategy compares, already normalized.
    ///
    /// NameSyn uses the name plus every synonym that is non-empty after
    /// normalization; Context joins sorted parent names, the own name and
    /// sorted child names with single spaces.
    pub fn strings(&self, strategy: Strategy) -> Vec<String> {
        match strategy {
            Strategy::Name => vec![normalize(&self.concept.name)],
            Strategy::NameSyn => {
                let mut out = vec![normalize(&self.concept.name)];
                for syn in &self.concept.synonyms {
                    let s = normalize(syn);
                    if !s.is_empty() && !out.contains(&s) {
                        out.push(s);
                    }
                }
                out
            }
            Strategy::Context => {
                let joined = self
                    .parent_names
                    .iter()
                    .copied()
                    .chain(std::iter::once(self.concept.name.as_str()))
                    .chain(self.child_names.iter().copied())
                    .collect::<Vec<_>>()
                    .join(" ");
                vec![normalize(&joined)]
            }
        }
    }

    pub fn profiles(&self, strategy: Strategy) -> Vec<TrigramProfile> {
        self.strings(strategy)
            .iter()
            .map(|s| TrigramProfile::from_normalized(s))
            .collect()
    }
}

/// Highest similarity over all profile pairs.
pub(crate) fn best_profile_similarity(left: &[TrigramProfile], right: &[TrigramProfile]) -> f64 {
    let mut best = 0.0f64;
    for l in left {
        for r in right {
            best = best.max(l.similarity(r));
        }
    }
    best
}

/// Strategy-dependent similarity of two concepts in `[0, 1]`.
pub fn concept_similarity(
    a: &ConceptContext<'_>,
    b: &ConceptContext<'_>,
    strategy: Strategy,
) -> f64 {
    best_profile_similarity(&a.profiles(strategy), &b.profiles(strategy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Relationship;

    #[test]
    fn name_equality_ignores_synonyms() {
        let a = Concept::new("a", "heart").with_synonym("cor");
        let b = Concept::new("b", "heart").with_synonym("cardium");
        let s = concept_similarity(
            &ConceptContext::isolated(&a),
            &ConceptContext::isolated(&b),
            Strategy::Name,
        );
        assert_eq!(s, 1.0);
    }

    #[test]
    fn synonym_hit_wins_under_namesyn() {
        let a = Concept::new("a", "cardiac muscle");
        let b = Concept::new("b", "myocardium").with_synonym("cardiac muscle");
        let (ca, cb) = (ConceptContext::isolated(&a), ConceptContext::isolated(&b));
        assert_eq!(concept_similarity(&ca, &cb, Strategy::NameSyn), 1.0);
        assert!(concept_similarity(&ca, &cb, Strategy::Name) < 1.0);
    }

    #[test]
    fn context_string_layout() {
        let onto = OntologyVersion::from_parts(
            "o",
            1,
            [
                Concept::new("p2", "Zeta organ"),
                Concept::new("p1", "alpha organ"),
                Concept::new("c", "Heart"),
                Concept::new("k", "valve"),
            ],
            [
                Relationship::is_a("c", "p2"),
                Relationship::new("c", "p1", "part_of"),
                Relationship::is_a("k", "c"),
            ],
        )
        .unwrap();
        let ctx = ConceptContext::in_version(&onto, "c").unwrap();
        assert_eq!(
            ctx.strings(Strategy::Context),
            vec!["alpha organ zeta organ heart valve"]
        );
        let lone = ConceptContext::in_version(&onto, "p1").unwrap();
        assert_eq!(lone.strings(Strategy::Context), vec!["alpha organ heart"]);
    }
}
