use proptest::prelude::*;
use unicode_normalization::is_nfc;
use unicode_segmentation::UnicodeSegmentation;

use udkit::conllu::{self, validate_sentence, Document, Features, Sentence, Token};
use udkit::eval::{self, EvalOptions};
use udkit::mwt::CliticTable;
use udkit::normalize::{apply_replacements, Normalizer};
use udkit::pos::viterbi;
use udkit::tokenize::Tokenizer;

/// Tamil letters, signs, pulli and AU length mark, plus a little ASCII.
fn tamil_text() -> impl Strategy<Value = String> {
    let chars: Vec<char> = "\u{0B85}\u{0B92}\u{0B95}\u{0BA4}\u{0BAE}\u{0BB0}\u{0BB8}\u{0BB6}\u{0BBE}\u{0BBF}\u{0BC0}\u{0BC6}\u{0BC7}\u{0BCA}\u{0BCD}\u{0BD7}ab. "
        .chars()
        .collect();
    prop::collection::vec(prop::sample::select(chars), 0..40).prop_map(|v| v.into_iter().collect())
}

fn tree(n: usize) -> impl Strategy<Value = Vec<usize>> {
    (Just(n), prop::collection::vec(any::<prop::sample::Index>(), n * 2)).prop_map(|(n, picks)| {
        let mut order: Vec<usize> = (1..=n).collect();
        for i in (1..n).rev() {
            order.swap(i, picks[i].index(i + 1));
        }
        let mut heads = vec![0; n];
        for i in 1..n {
            heads[order[i] - 1] = order[picks[n + i].index(i)];
        }
        heads
    })
}

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,6}(um)?"
}

proptest! {
    #[test]
    fn normalization_is_idempotent(s in tamil_text()) {
        let n = Normalizer::default();
        let once = n.normalize_text(&s).output;
        prop_assert_eq!(n.normalize_text(&once).output, once.clone());
        prop_assert!(is_nfc(&once));
    }

    #[test]
    fn normalization_report_replays(s in tamil_text()) {
        let report = Normalizer::default().normalize_text(&s);
        prop_assert_eq!(apply_replacements(&s, &report.replacements), report.output);
    }

    #[test]
    fn normalization_keeps_whitespace_and_never_adds_graphemes(s in tamil_text()) {
        let out = Normalizer::default().normalize_text(&s).output;
        let spaces = |t: &str| t.chars().filter(|c| c.is_whitespace()).count();
        prop_assert_eq!(spaces(&out), spaces(&s));
        prop_assert!(out.graphemes(true).count() <= s.graphemes(true).count());
    }

    #[test]
    fn tokens_reconstruct_text(words in prop::collection::vec("[a-z]{1,5}[.,?]?", 1..12)) {
        let text = words.join(" ");
        let doc = Tokenizer::default().tokenize_document(&text);
        let mut all = String::new();
        for s in &doc.sentences {
            let mut rebuilt = String::new();
            for t in &s.tokens {
                rebuilt.push_str(&t.form);
                if t.misc_get("SpaceAfter") != Some("No") {
                    rebuilt.push(' ');
                }
            }
            prop_assert_eq!(rebuilt.trim_end(), s.text().unwrap());
            all.push_str(&rebuilt);
        }
        prop_assert_eq!(all.trim_end(), text);
    }

    #[test]
    fn mwt_expansion_is_inverse_of_surface(forms in prop::collection::vec(word(), 1..10)) {
        let table = CliticTable::default();
        let s = Sentence::from_forms(&forms);
        let expanded = table.expand_sentence(&s);
        prop_assert_eq!(expanded.surface_forms(), s.surface_forms());
        prop_assert_eq!(table.expand_sentence(&expanded), expanded.clone());
        prop_assert!(validate_sentence(0, &expanded).is_empty());
    }

    #[test]
    fn conllu_round_trips(
        sentences in prop::collection::vec(
            (1usize..8).prop_flat_map(|n| (
                prop::collection::vec(("[a-z]{1,5}", prop::option::of("[A-Z][a-z]{1,4}")), n),
                tree(n),
            )),
            0..4,
        ),
    ) {
        let mut doc = Document::new(Vec::new());
        for (i, (cols, heads)) in sentences.iter().enumerate() {
            let mut s = Sentence::new();
            s.set_metadata("sent_id", &(i + 1).to_string());
            for (k, ((form, feat), head)) in cols.iter().zip(heads).enumerate() {
                let mut t = Token::new(k + 1, form.clone());
                t.lemma = Some(form.to_uppercase());
                t.upos = Some("NOUN".to_owned());
                if let Some(f) = feat {
                    t.feats = Features::from_pairs([(f.clone(), "Yes".to_owned()), ("Case".to_owned(), "Nom".to_owned())]).canonical();
                }
                t.head = Some(*head);
                t.deprel = Some(if *head == 0 { "root" } else { "dep" }.to_owned());
                s.tokens.push(t);
            }
            doc.sentences.push(s);
        }
        let text = conllu::serialize_document(&doc).unwrap();
        let back = conllu::parse_document(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(conllu::serialize_document(&back).unwrap(), text);
    }

    #[test]
    fn random_trees_validate(heads in (1usize..12).prop_flat_map(tree)) {
        let mut s = Sentence::from_forms(&vec!["w"; heads.len()]);
        for (t, h) in s.tokens.iter_mut().zip(&heads) {
            t.head = Some(*h);
        }
        prop_assert!(conllu::is_tree(&heads));
        prop_assert!(validate_sentence(0, &s).is_empty());
    }

    #[test]
    fn viterbi_score_matches_path(
        (emissions, transitions) in (1usize..7, 1usize..6).prop_flat_map(|(n, t)| (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, t), n),
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, t), t + 1),
        )),
    ) {
        let t = emissions[0].len();
        let (path, score) = viterbi(&emissions, &transitions, &vec![None; emissions.len()]);
        let mut prev = t;
        let mut total = 0.0;
        for (i, &p) in path.iter().enumerate() {
            total += transitions[prev][p] + emissions[i][p];
            prev = p;
        }
        prop_assert!((total - score).abs() < 1e-9);
    }

    #[test]
    fn las_never_exceeds_uas(
        (gold, system, labels) in (1usize..10).prop_flat_map(|n| (
            tree(n),
            tree(n),
            prop::collection::vec((0usize..3, 0usize..3), n),
        )),
    ) {
        let names = ["nsubj", "obj", "obl:tmod"];
        let build = |heads: &[usize], pick: &dyn Fn(usize) -> usize| {
            let mut s = Sentence::from_forms(&vec!["w"; heads.len()]);
            for (i, t) in s.tokens.iter_mut().enumerate() {
                t.head = Some(heads[i]);
                t.deprel = Some(names[pick(i)].to_owned());
            }
            Document::new(vec![s])
        };
        let g = build(&gold, &|i| labels[i].0);
        let s = build(&system, &|i| labels[i].1);
        for strict in [false, true] {
            let r = eval::score_attachments(&g, &s, EvalOptions { strict_labels: strict }).unwrap();
            prop_assert!(r.las() <= r.uas());
        }
        prop_assert_eq!(eval::score_attachments(&g, &g, EvalOptions::default()).unwrap().las(), 100.0);
    }

    #[test]
    fn aligned_scoring_is_symmetric(
        (text, cuts_a, cuts_b) in (2usize..20).prop_flat_map(|n| (
            prop::collection::vec(prop::sample::select(vec!['a', 'b', 'c']), n),
            prop::collection::vec(any::<bool>(), n - 1),
            prop::collection::vec(any::<bool>(), n - 1),
        )),
    ) {
        let split = |cuts: &[bool]| {
            let mut forms = vec![String::new()];
            for (i, c) in text.iter().enumerate() {
                forms.last_mut().unwrap().push(*c);
                if i < cuts.len() && cuts[i] {
                    forms.push(String::new());
                }
            }
            let mut s = Sentence::from_forms(&forms);
            let n = s.tokens.len();
            for t in &mut s.tokens {
                t.head = Some(if t.id == 1 { 0 } else { 1 });
                t.deprel = Some(if t.id == 1 { "root" } else { "dep" }.to_owned());
            }
            prop_assert_eq!(n, forms.len());
            Ok(Document::new(vec![s]))
        };
        let a = split(&cuts_a)?;
        let b = split(&cuts_b)?;
        let ab = eval::score_aligned(&a, &b, EvalOptions::default()).unwrap().tokens.unwrap();
        let ba = eval::score_aligned(&b, &a, EvalOptions::default()).unwrap().tokens.unwrap();
        prop_assert_eq!(ab.precision(), ba.recall());
        prop_assert_eq!(ab.recall(), ba.precision());
        prop_assert!((ab.f1() - ba.f1()).abs() < 1e-9);
    }
}
