use std::collections::{HashMap, HashSet};

use pairforge_core::corpus::{make_splits, silver_label, to_tsv, parse_tsv, SplitFractions, UnlabeledPair};
use pairforge_core::judgment::mask_provenance;
use pairforge_core::lm::NgramModel;
use pairforge_core::swap::{generate_swap_pair, SwapConfig};
use pairforge_core::tagging::{build_candidate_sets, build_template, TaggedToken};
use pairforge_core::text::{bag_of_words, FeatureOrder, Sentence};
use pairforge_core::{Label, Provenance};
use proptest::prelude::*;

fn s(words: &[u8], prefix: &str) -> Sentence {
    Sentence::from_tokens(words.iter().map(|w| format!("{prefix}{w}"))).unwrap()
}

fn arb_pool() -> impl Strategy<Value = Vec<UnlabeledPair>> {
    let pair = (prop::collection::vec(0u8..6, 2..5), prop::collection::vec(0u8..6, 2..5), any::<bool>());
    prop::collection::vec(pair, 1..60).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (a, b, swap))| {
                let s1 = s(&a, "w");
                let s2 = if swap {
                    let mut t = a.clone();
                    t.reverse();
                    s(&t, "w")
                } else {
                    s(&b, "w")
                };
                UnlabeledPair {
                    id: i as u64 + 1,
                    s1,
                    s2,
                    provenance: Some(if swap { Provenance::Swap } else { Provenance::Backtranslation }),
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn silver_masked_splits_keep_invariants(pool in arb_pool(), seed in any::<u64>()) {
        let labeled = silver_label(&pool).unwrap();
        let bts = pool.iter().filter(|p| p.provenance == Some(Provenance::Backtranslation)).count();
        prop_assert!(labeled.len() >= bts);
        let unique: HashSet<u64> = labeled.iter().map(|p| p.id).collect();
        prop_assert_eq!(unique.len(), labeled.len());

        let masked = mask_provenance(labeled.clone(), seed);
        for (a, b) in labeled.iter().zip(&masked) {
            prop_assert_eq!(a.id, b.id);
            prop_assert_eq!(a.label, b.label);
            prop_assert!((a.s1 == b.s1 && a.s2 == b.s2) || (a.s1 == b.s2 && a.s2 == b.s1));
        }

        let Ok(splits) = make_splits(masked.clone(), SplitFractions::default(), seed) else {
            return Ok(());
        };
        let mut owner: HashMap<&[String], usize> = HashMap::new();
        let mut kept = 0;
        for (i, split) in splits.iter().enumerate() {
            kept += split.pairs.len();
            for p in &split.pairs {
                for snt in [&p.s1, &p.s2] {
                    prop_assert_eq!(*owner.entry(snt.tokens()).or_insert(i), i);
                }
                if i > 0 {
                    prop_assert!(!p.is_identical());
                }
            }
            let rows = parse_tsv(&to_tsv(split)).unwrap();
            prop_assert_eq!(rows.len(), split.pairs.len());
            for (r, p) in rows.iter().zip(&split.pairs) {
                prop_assert_eq!(r.id, p.id);
                prop_assert_eq!(r.label, p.label);
            }
        }
        let identical = masked.iter().filter(|p| p.is_identical()).count();
        prop_assert!(kept + identical >= masked.len() && kept <= masked.len());
    }

    #[test]
    fn swaps_preserve_the_bag_of_words(words in prop::collection::vec(0u8..5, 3..8), tags in prop::collection::vec(0u8..2, 3..8)) {
        let n = words.len().min(tags.len());
        let sentence = s(&words[..n], "t");
        let tagged: Vec<TaggedToken> = sentence
            .tokens()
            .iter()
            .zip(&tags)
            .map(|(w, t)| TaggedToken::word(w.clone(), if *t == 0 { "NOUN" } else { "VERB" }))
            .collect();
        let template = build_template(&sentence, &tagged, 0.95).unwrap();
        let candidates = build_candidate_sets(&template);
        let model = NgramModel::train(std::slice::from_ref(&sentence), 2).unwrap();
        let config = SwapConfig { beam_size: 8, threshold: f64::MAX };
        let r = generate_swap_pair(&sentence, &template, &candidates, &model, config).unwrap();
        if let Some(g) = r.generated {
            prop_assert_ne!(g.tokens(), sentence.tokens());
            prop_assert_eq!(bag_of_words(&g, FeatureOrder::Unigram), bag_of_words(&sentence, FeatureOrder::Unigram));
            prop_assert!(r.accepted);
        }
    }
}

#[test]
fn silver_labels_follow_provenance() {
    let pool = vec![
        UnlabeledPair { id: 1, s1: s(&[1, 2], "w"), s2: s(&[2, 1], "w"), provenance: Some(Provenance::Swap) },
        UnlabeledPair { id: 2, s1: s(&[1, 2], "w"), s2: s(&[1, 3], "w"), provenance: Some(Provenance::Backtranslation) },
    ];
    let out = silver_label(&pool).unwrap();
    assert_eq!(out[0].label, Label::Paraphrase);
    assert_eq!(out[1].label, Label::NonParaphrase);
    assert_eq!(out[1].lineage, vec![1, 2]);
    assert_eq!(out.len(), 2);
}
