mod common;

use mapevo_core::matcher::{
    concept_similarity, trigram_similarity, ConceptContext, Strategy as MatchStrategy,
};
use mapevo_core::obo::{parse_ontology, to_obo};
use mapevo_core::ontology::Concept;
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ,'-]{0,24}"
}

proptest! {
    #[test]
    fn similarity_is_symmetric_and_bounded(a in text(), b in text()) {
        let ab = trigram_similarity(&a, &b);
        prop_assert_eq!(ab, trigram_similarity(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(trigram_similarity(&a, &a), 1.0);
    }

    #[test]
    fn normalization_does_not_change_scores(a in text(), b in text()) {
        let upper = format!("  {}  ", a.to_uppercase());
        prop_assert_eq!(trigram_similarity(&a, &b), trigram_similarity(&upper, &b));
    }

    #[test]
    fn namesyn_dominates_name(a in text(), b in text(), syns in prop::collection::vec(text(), 0..3)) {
        let mut left = Concept::new("l", a);
        for s in syns {
            left = left.with_synonym(s);
        }
        let right = Concept::new("r", b);
        let (l, r) = (ConceptContext::isolated(&left), ConceptContext::isolated(&right));
        prop_assert!(concept_similarity(&l, &r, MatchStrategy::NameSyn) >= concept_similarity(&l, &r, MatchStrategy::Name));
    }

    #[test]
    fn obo_round_trip(seed in 0u64..10_000, n in 1usize..40) {
        let mut rng = common::rng(seed);
        let onto = common::random_ontology(&mut rng, "rt", "RT", n);
        let back = parse_ontology(&to_obo(&onto)).unwrap();
        prop_assert_eq!(back.to_canonical_json(), onto.to_canonical_json());
    }
}
