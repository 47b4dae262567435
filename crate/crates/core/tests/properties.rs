use std::collections::HashSet;
use std::ops::Range;

use ned_core::dictbuild::{Dictionary, DictionaryBuilder};
use ned_core::evalkit::{micro_accuracy, Answer, Genre, GoldRecord, Subset};
use ned_core::expand::{expand_mention, NerTagger};
use ned_core::lookup::{
    heur_filter, is_date_page, is_disambiguation_page, is_list_page, CandidateGenerator,
    CandidateMode, HeurConfig,
};
use ned_core::par::{self, Execution};
use ned_core::wordexpert::maxent::{fit, probabilities, Dataset, LbfgsOptions};
use ned_core::wordexpert::{extract_spans, Corpus, MatchMode, RuleAnnotator, SpanMode};
use proptest::prelude::*;

const TITLES: [&str; 8] = [
    "Mercury_(planet)",
    "Mercury_(element)",
    "Freddie_Mercury",
    "Mercury_(disambiguation)",
    "1999",
    "List_of_planets",
    "Mercury_Records",
    "Merc",
];
const STRINGS: [&str; 6] = [
    "Mercury",
    "mercury",
    "Freddie Mercury",
    "MERCURY",
    "Mercury Records",
    "Mercur",
];

fn dictionary() -> impl Strategy<Value = Dictionary> {
    prop::collection::vec(
        (0..STRINGS.len(), 0..TITLES.len(), 0u64..40, any::<bool>()),
        1..24,
    )
    .prop_map(|rows| {
        let mut b = DictionaryBuilder::new();
        for (s, t, n, web) in rows {
            if web {
                b.add_web_anchor(STRINGS[s], TITLES[t], n);
            } else {
                b.add_wiki_anchor(STRINGS[s], TITLES[t], n);
            }
        }
        b.build()
    })
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..5, 2usize..4)
        .prop_flat_map(|(nf, nc)| {
            (
                prop::collection::vec(
                    (prop::collection::btree_set(0..nf as u32, 0..=nf), 0..nc),
                    2..12,
                ),
                Just(nf),
                Just(nc),
            )
        })
        .prop_map(|(rows, n_features, n_classes)| Dataset {
            rows: rows
                .iter()
                .map(|(r, _)| r.iter().copied().collect())
                .collect(),
            labels: rows.iter().map(|(_, y)| *y).collect(),
            n_features,
            n_classes,
        })
}

const WORDS: [&str; 8] = [
    "the", "orbit", "singer", "metal", "band", "toxic", "sun", "was",
];
const ANCHORS: [&str; 4] = ["Mercury", "Freddie Mercury", "the planet", "quicksilver"];
const TARGETS: [&str; 3] = ["Mercury_(planet)", "Freddie_Mercury", "Mercury_(element)"];

/// Documents of filler words with links scattered through them.
fn corpus_text() -> impl Strategy<Value = String> {
    let item = prop_oneof![
        3 => (0..WORDS.len()).prop_map(|w| WORDS[w].to_string()),
        1 => (0..TARGETS.len(), 0..ANCHORS.len()).prop_map(|(t, a)| format!("[[{}|{}]]", TARGETS[t], ANCHORS[a])),
    ];
    prop::collection::vec(prop::collection::vec(item, 1..25), 1..6).prop_map(|docs| {
        docs.iter()
            .enumerate()
            .map(|(i, words)| format!("# doc=d{i}\n{}.\n", words.join(" ")))
            .collect()
    })
}

struct Chunks(Vec<Range<usize>>);

impl NerTagger for Chunks {
    fn chunks(&self, _doc: &str) -> Vec<Range<usize>> {
        self.0.clone()
    }
}

fn gold_and_answers() -> impl Strategy<Value = (Vec<GoldRecord>, Vec<Answer>)> {
    let kb = prop::option::of(0..4usize);
    prop::collection::vec((kb.clone(), kb, any::<bool>(), any::<bool>()), 1..30).prop_map(|rows| {
        let id = |k: Option<usize>| k.map(|k| format!("E{k}"));
        let gold = rows
            .iter()
            .enumerate()
            .map(|(i, (g, _, news, _))| GoldRecord {
                query_id: format!("q{i}"),
                kb_id: id(*g),
                wiki_title: None,
                genre: if *news { Genre::News } else { Genre::Web },
            })
            .collect();
        let answers = rows
            .iter()
            .enumerate()
            .filter(|(_, (_, _, _, answered))| *answered)
            .map(|(i, (_, a, _, _))| Answer {
                query_id: format!("q{i}"),
                kb_id: id(*a),
                wiki_title: None,
                error: None,
            })
            .collect();
        (gold, answers)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heur_output_is_an_ordered_subset_without_page_types(d in dictionary(), s in 0..STRINGS.len()) {
        let s = STRINGS[s];
        let cl = CandidateGenerator::new(&d, CandidateMode::Fuzz).generate(s);
        let kept = heur_filter(&cl, s, &d, None, &HeurConfig::default());
        let mut rest = cl.candidates.iter();
        for c in &kept.candidates {
            prop_assert!(rest.any(|o| o == c), "{} not in input order", c.entity);
            prop_assert!(!is_disambiguation_page(&c.entity, None) && !is_date_page(&c.entity) && !is_list_page(&c.entity));
        }
        let heur = CandidateGenerator::new(&d, CandidateMode::Heur).generate(s);
        prop_assert!(heur.len() <= cl.len());
    }

    #[test]
    fn probabilities_sum_to_one(data in dataset(), seed in prop::collection::vec(-30.0f64..30.0, 24)) {
        let w: Vec<f64> = (0..data.dim()).map(|i| seed[i % seed.len()] * (i as f64 + 1.0)).collect();
        for row in &data.rows {
            let p = probabilities(&w, data.n_features, data.n_classes, row);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn stronger_l2_never_grows_the_weights(data in dataset(), l2 in 0.05f64..3.0, factor in 1.0f64..10.0) {
        let opts = LbfgsOptions { max_iterations: 2000, tolerance: 1e-12, ..LbfgsOptions::default() };
        let weak = fit(&data, l2, &opts).x;
        let strong = fit(&data, l2 * factor, &opts).x;
        let norm = |w: &[f64]| w.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(norm(&strong) <= norm(&weak) + 1e-6, "{} > {}", norm(&strong), norm(&weak));
    }

    #[test]
    fn lex_spans_are_a_subset_of_sense_spans(text in corpus_text(), s in 0..ANCHORS.len()) {
        let corpus = Corpus::parse(&text, None, &RuleAnnotator, Execution::Sequential).unwrap();
        let mut b = DictionaryBuilder::new();
        for t in TARGETS {
            b.add_wiki_anchor(ANCHORS[s], t, 1);
        }
        let d = b.build();
        let cl = CandidateGenerator::new(&d, CandidateMode::Exct).generate(ANCHORS[s]);
        let key = |sp: &ned_core::wordexpert::TrainingSpan| (sp.source_doc.clone(), sp.anchor_text.clone(), sp.target.clone(), sp.anchor.clone(), sp.tokens.len());
        for mode in [SpanMode::T100, SpanMode::Sent, SpanMode::Para] {
            let lex = extract_spans(&corpus, ANCHORS[s], &cl, mode, MatchMode::Lex).unwrap();
            let sense = extract_spans(&corpus, ANCHORS[s], &cl, mode, MatchMode::Sense).unwrap();
            let sense: HashSet<_> = sense.iter().map(key).collect();
            prop_assert!(lex.iter().all(|sp| sense.contains(&key(sp))));
        }
    }

    #[test]
    fn expansion_never_adds_candidates(
        d in dictionary(),
        words in prop::collection::vec(0..STRINGS.len(), 1..8),
        chunk in (0usize..200, 0usize..40),
    ) {
        let doc = words.iter().map(|&w| STRINGS[w]).collect::<Vec<_>>().join(" , ");
        let mention = STRINGS[words[0]];
        let start = chunk.0.min(doc.len());
        let end = (start + chunk.1).min(doc.len());
        let ner = Chunks(if doc.is_char_boundary(start) && doc.is_char_boundary(end) { vec![start..end] } else { vec![] });
        let g = CandidateGenerator::new(&d, CandidateMode::Lnrm);
        let original = g.generate(mention);
        let r = expand_mention(&doc, mention, &g, Some(&ner), None).unwrap();
        prop_assert!(r.final_candidates.entities().all(|e| original.contains(e)));
        let again = expand_mention(&doc, mention, &g, Some(&ner), None).unwrap();
        prop_assert_eq!(r, again);
    }

    #[test]
    fn accuracy_is_the_subset_mixture((gold, answers) in gold_and_answers()) {
        let all = micro_accuracy(&gold, &answers, Subset::All);
        let kb = micro_accuracy(&gold, &answers, Subset::KbOnly);
        prop_assert_eq!(all.n_correct, all.nil.gold_nil.correct + all.nil.gold_kb.correct);
        prop_assert_eq!(kb.n_correct, all.nil.gold_kb.correct);
        prop_assert_eq!(kb.n_queries, all.nil.gold_kb.n);
        let mixed = (all.nil.gold_nil.n as f64 * all.nil.gold_nil.accuracy()
            + all.nil.gold_kb.n as f64 * all.nil.gold_kb.accuracy()) / all.n_queries as f64;
        prop_assert!((all.micro_accuracy - mixed).abs() < 1e-12);
    }

    #[test]
    fn query_order_does_not_change_results((gold, answers) in gold_and_answers(), d in dictionary(), rot in 0usize..30) {
        let mut g2 = gold.clone();
        let mut a2 = answers.clone();
        let n = g2.len();
        g2.rotate_left(rot % n);
        a2.reverse();
        for subset in [Subset::All, Subset::KbOnly] {
            prop_assert_eq!(micro_accuracy(&gold, &answers, subset).to_tsv(), micro_accuracy(&g2, &a2, subset).to_tsv());
        }
        let g = CandidateGenerator::new(&d, CandidateMode::Fuzz);
        let mut names: Vec<&str> = STRINGS.to_vec();
        let forward = par::map(Execution::Parallel, &names, |s| g.generate(s));
        names.reverse();
        let mut backward = par::map(Execution::Sequential, &names, |s| g.generate(s));
        backward.reverse();
        prop_assert_eq!(forward, backward);
    }
}
