//! Property tests for the module invariants.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;

use mtgender::aligner::{distortion, train, AlignerConfig, ParallelCorpus};
use mtgender::attention::{aggregate, cue_attention, AttentionDump, DumpMeta, HeadMatrix, SpanMap};
use mtgender::corpus::{
    build_minimal_pairs, parse_challenge_set, GenderColumn, PairLink, ProfessionStereotype, SentenceRecord,
    StereotypeLexicon,
};
use mtgender::metrics::{minimal_pair_accuracy, prior_bias, standard_accuracy, unknown_rate};
use mtgender::morpho::{ArticleClass, ArticleTable, GenderLexicon, Morphology};
use mtgender::neutralizer::neutralize;
use mtgender::{Gender, GenderLabel, GenderOutcome, MetricsReport, SentenceId};

fn pro_anti() -> &'static [SentenceRecord] {
    static RECORDS: OnceLock<Vec<SentenceRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| {
        let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/winomt");
        let mut r = parse_challenge_set(&dir.join("en_pro.txt"), GenderColumn::Gendered).unwrap();
        r.extend(parse_challenge_set(&dir.join("en_anti.txt"), GenderColumn::Gendered).unwrap());
        r
    })
}

fn label() -> impl Strategy<Value = GenderLabel> {
    prop_oneof![Just(GenderLabel::Masculine), Just(GenderLabel::Feminine), Just(GenderLabel::Unknown)]
}

fn gendered() -> impl Strategy<Value = Vec<(bool, GenderLabel)>> {
    prop::collection::vec((any::<bool>(), label()), 1..200)
}

fn outcomes(draws: &[(bool, GenderLabel)]) -> Vec<GenderOutcome> {
    draws
        .iter()
        .enumerate()
        .map(|(k, &(male, l))| {
            let gold = if male { Gender::Male } else { Gender::Female };
            GenderOutcome::new(SentenceId::new("p", k + 1), gold, l, vec![])
        })
        .collect()
}

fn neutral(labels: &[GenderLabel], offset: usize) -> Vec<GenderOutcome> {
    labels
        .iter()
        .enumerate()
        .map(|(k, &l)| GenderOutcome::new(SentenceId::new("n", offset + k + 1), Gender::Neutral, l, vec![]))
        .collect()
}

// ------------------------------------------------------------------ corpus

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairing_ignores_order_and_partitions(picks in prop::collection::vec(0usize..3168, 1..300), seed in any::<u64>()) {
        let all = pro_anti();
        let mut chosen: Vec<SentenceRecord> = picks.iter().map(|&i| all[i].clone()).collect();
        chosen.sort_by(|a, b| a.id.cmp(&b.id));
        chosen.dedup_by(|a, b| a.id == b.id);
        let lex = StereotypeLexicon::bundled();
        let a = build_minimal_pairs(&chosen, &lex).unwrap();

        let mut shuffled = chosen.clone();
        let n = shuffled.len();
        for i in 0..n {
            shuffled.swap(i, (seed as usize).wrapping_add(i * 7919) % n);
        }
        let b = build_minimal_pairs(&shuffled, &lex).unwrap();
        prop_assert_eq!(a.links(), b.links());
        prop_assert_eq!(&a.unpaired, &b.unpaired);
        prop_assert_eq!(2 * a.pairs.len() + a.unpaired.len(), chosen.len());
        for p in &a.pairs {
            let (m, f) = (p.male_variant.tokens(), p.female_variant.tokens());
            prop_assert_eq!(m.len(), f.len());
            prop_assert!(m != f);
        }
    }

    #[test]
    fn neutralizing_keeps_token_count(i in 0usize..3168) {
        let r = &pro_anti()[i];
        let n = neutralize(r).unwrap();
        prop_assert_eq!(n.tokens().len(), r.tokens().len());
        prop_assert_eq!(n.entity_index, r.entity_index);
        prop_assert_eq!(n.gold_gender, Gender::Neutral);
    }
}

// ----------------------------------------------------------------- aligner

fn small_corpus() -> impl Strategy<Value = Vec<(Vec<String>, Vec<String>)>> {
    let side = |p: &'static str| prop::collection::vec((0u8..12).prop_map(move |w| format!("{p}{w}")), 1..9);
    prop::collection::vec((side("s"), side("t")), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn translation_rows_stay_stochastic(corpus in small_corpus(), iterations in 1usize..6) {
        let c = ParallelCorpus::new(corpus.clone()).unwrap();
        let model = train(&c, &AlignerConfig { iterations, ..AlignerConfig::default() }).unwrap();
        for (word, sum) in model.row_sums() {
            prop_assert!((sum - 1.0).abs() < 1e-9, "row {} sums to {}", word, sum);
        }
        prop_assert_eq!(model.log_likelihoods.len(), iterations);
        for w in model.log_likelihoods.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        for (src, tgt) in &corpus {
            for l in model.align(src, tgt).links {
                prop_assert!(l.source_index < src.len() && l.target_index < tgt.len());
            }
        }
    }

    #[test]
    fn distortion_is_a_distribution(m in 1usize..30, n in 1usize..30, j in 1usize..30, lambda in 0.0f64..20.0, p0 in 0.0f64..0.99) {
        let j = j.min(m);
        let d = distortion(j, m, n, lambda, p0);
        prop_assert_eq!(d.len(), n + 1);
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(d[0], p0);
        // ratio of two positions follows the exponential kernel
        if n >= 2 {
            let k = |i: usize| (-lambda * (i as f64 / n as f64 - j as f64 / m as f64).abs()).exp();
            prop_assert!((d[1] / d[n] - k(1) / k(n)).abs() < 1e-9 * (k(1) / k(n)).max(1.0));
        }
    }
}

// -------------------------------------------------------------- morphology

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lexicon_beats_article_and_suffix(entry in 0usize..200, form in 0usize..8, article in 0usize..60, fem_side in any::<bool>()) {
        let lexicon = GenderLexicon::bundled();
        let entries: Vec<_> = lexicon.entries().filter(|e| !e.epicene).collect();
        let e = entries[entry % entries.len()];
        let (forms, want) = if fem_side { (&e.fem_forms, GenderLabel::Feminine) } else { (&e.masc_forms, GenderLabel::Masculine) };
        let noun = &forms[form % forms.len()];
        let table = ArticleTable::bundled();
        let articles = ["il", "la", "lo", "le", "gli", "una", "un", "della", "del"];
        let art = articles[article % articles.len()];
        prop_assert!(table.get(art).is_some());
        let morph = Morphology::default();
        let got = morph.detect_gender(&[art, noun.as_str()], &[1]);
        prop_assert_eq!(got, want);
        prop_assert_eq!(morph.detect_gender(&[art, noun.as_str()], &[1]), got);
    }

    #[test]
    fn bare_epicenes_resolve_only_through_articles(entry in 0usize..200, article in 0usize..60) {
        let lexicon = GenderLexicon::bundled();
        let entries: Vec<_> = lexicon.entries().filter(|e| e.epicene).collect();
        let e = entries[entry % entries.len()];
        let Some(shared) = e.masc_forms.iter().find(|f| e.fem_forms.contains(f)) else { return Ok(()) };
        let morph = Morphology::default();
        prop_assert_eq!(morph.detect_gender(&[shared.as_str()], &[0]), GenderLabel::Unknown);
        let articles = ["il", "la", "l'", "un'", "uno", "le"];
        let art = articles[article % articles.len()];
        let want = match ArticleTable::bundled().get(art) {
            Some(ArticleClass::Masculine) => GenderLabel::Masculine,
            Some(ArticleClass::Feminine) => GenderLabel::Feminine,
            _ => GenderLabel::Unknown,
        };
        prop_assert_eq!(morph.detect_gender(&[art, shared.as_str()], &[1]), want);
    }
}

// ----------------------------------------------------------------- metrics

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn outcomes_carry_correctness(male in any::<bool>(), neutral_gold in any::<bool>(), l in label()) {
        let gold = if neutral_gold { Gender::Neutral } else if male { Gender::Male } else { Gender::Female };
        let o = GenderOutcome::new(SentenceId::new("o", 1), gold, l, vec![]);
        prop_assert_eq!(o.correct.is_some(), gold != Gender::Neutral);
        if o.correct == Some(true) {
            prop_assert!(l != GenderLabel::Unknown);
        }
    }

    #[test]
    fn metrics_ignore_order(draws in gendered(), pair_flags in prop::collection::vec(any::<bool>(), 100), rot in 0usize..1000) {
        let outs = outcomes(&draws);
        let mut rotated = outs.clone();
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        rotated.reverse();
        prop_assert_eq!(standard_accuracy(&outs).unwrap(), standard_accuracy(&rotated).unwrap());
        prop_assert_eq!(unknown_rate(&outs).unwrap(), unknown_rate(&rotated).unwrap());

        // pair up consecutive male/female outcomes
        let males: Vec<&GenderOutcome> = outs.iter().filter(|o| o.gold_gender == Gender::Male).collect();
        let females: Vec<&GenderOutcome> = outs.iter().filter(|o| o.gold_gender == Gender::Female).collect();
        let links: Vec<PairLink> = males
            .iter()
            .zip(&females)
            .zip(&pair_flags)
            .enumerate()
            .map(|(i, ((m, f), &pf))| PairLink {
                key_hash: format!("{i:016x}"),
                male_id: m.record_id.clone(),
                female_id: f.record_id.clone(),
                stereotype: if pf { ProfessionStereotype::ProF } else { ProfessionStereotype::ProM },
            })
            .collect();
        if !links.is_empty() {
            let by_a: HashMap<_, _> = outs.iter().map(|o| (o.record_id.clone(), o.clone())).collect();
            let by_b: HashMap<_, _> = rotated.iter().map(|o| (o.record_id.clone(), o.clone())).collect();
            let a = minimal_pair_accuracy(&links, &by_a).unwrap();
            prop_assert_eq!(&a, &minimal_pair_accuracy(&links, &by_b).unwrap());
            if a.mpa.num > 0 {
                prop_assert_eq!(a.pro_f.num + a.pro_m.num, a.pro_f.den);
                // exact in counts; two half-up roundings may show 100.1
                let shown = a.pro_f.tenths().unwrap() + a.pro_m.tenths().unwrap();
                prop_assert!((999..=1001).contains(&shown), "shares show {}", shown);
            } else {
                prop_assert!(a.pro_f.is_absent() && a.pro_m.is_absent());
            }
        }
    }

    #[test]
    fn prior_bias_ignores_unknowns(labels in prop::collection::vec(label(), 1..300), extra in 0usize..50) {
        let base = neutral(&labels, 0);
        let Ok(before) = prior_bias(&base) else { return Ok(()) };
        let mut more = base.clone();
        more.extend(neutral(&vec![GenderLabel::Unknown; extra], labels.len()));
        let after = prior_bias(&more).unwrap();
        prop_assert_eq!((before.masc, before.fem, before.detected), (after.masc, after.fem, after.detected));
        prop_assert_eq!(after.unknown, before.unknown + extra as u64);
        prop_assert_eq!(before.masc.num + before.fem.num, before.detected);
        let mut reversed = base.clone();
        reversed.reverse();
        prop_assert_eq!(prior_bias(&reversed).unwrap(), before);
    }

    #[test]
    fn machine_report_roundtrips(draws in gendered(), labels in prop::collection::vec(label(), 1..100)) {
        let outs = outcomes(&draws);
        let report = MetricsReport {
            standard: Some(standard_accuracy(&outs).unwrap()),
            unknown_rate: Some(unknown_rate(&outs).unwrap()),
            pairs: None,
            prior: prior_bias(&neutral(&labels, 0)).ok(),
        };
        prop_assert_eq!(MetricsReport::parse_machine(&report.to_machine()).unwrap(), report);
    }
}

// --------------------------------------------------------------- attention

fn meta(prompt_len: usize, steps: usize, layers: usize, heads: usize) -> DumpMeta {
    DumpMeta {
        sentence_id: "p:1".into(),
        prompt_len,
        source_span: (0, prompt_len),
        context_tokens: (0..prompt_len).map(|k| format!("x{k}")).collect(),
        generated_tokens: (0..steps).map(|k| format!("y{k}")).collect(),
        n_layers: layers,
        n_heads: heads,
        dtype: "f32le".into(),
    }
}

/// Random row-stochastic dump from a seed.
fn random_dump(prompt_len: usize, steps: usize, layers: usize, heads: usize, seed: u64) -> AttentionDump {
    let raw = |t: usize, l: usize, h: usize, p: usize| {
        let x = seed ^ ((t as u64) << 48) ^ ((l as u64) << 32) ^ ((h as u64) << 16) ^ p as u64;
        (x.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 40) as f32 + 1.0
    };
    AttentionDump::from_fn(meta(prompt_len, steps, layers, heads), move |t, l, h, p| {
        let total: f32 = (0..prompt_len + t).map(|q| raw(t, l, h, q)).sum();
        raw(t, l, h, p) / total
    })
}

fn dump_shape() -> impl Strategy<Value = (usize, usize, usize, usize, u64)> {
    (2usize..12, 1usize..6, 1usize..4, 1usize..4, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dump_bytes_roundtrip((pl, st, nl, nh, seed) in dump_shape()) {
        let d = random_dump(pl, st, nl, nh, seed);
        prop_assert!(d.validate().is_ok());
        let back = AttentionDump::decode(d.meta.clone(), &d.encode()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn head_values_are_probabilities((pl, st, nl, nh, seed) in dump_shape(), cue in prop::collection::btree_set(0usize..12, 1..4)) {
        let d = random_dump(pl, st, nl, nh, seed);
        let cue: Vec<usize> = cue.into_iter().filter(|&p| p < pl).collect();
        prop_assume!(!cue.is_empty());
        let span = SpanMap { target_span: (0..st).collect(), cue_positions: cue, secondary_span: None };
        let m = cue_attention(&d, &span).unwrap();
        prop_assert!(m.values.iter().all(|v| (0.0..=1.0 + 1e-6).contains(v)));
    }

    #[test]
    fn cue_mass_scales_linearly(base in 0.01f32..0.2, k in 0.0f32..4.0, pl in 4usize..10, st in 1usize..4) {
        // cue gets c, everything else shares the rest evenly
        let build = |c: f32| AttentionDump::from_fn(meta(pl, st, 2, 2), move |t, _, _, p| {
            if p == 1 { c } else { (1.0 - c) / (pl + t - 1) as f32 }
        });
        let span = SpanMap { target_span: (0..st).collect(), cue_positions: vec![1], secondary_span: None };
        let a = cue_attention(&build(base), &span).unwrap();
        let b = cue_attention(&build(base * k), &span).unwrap();
        prop_assert!(build(base * k).validate().is_ok());
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((y - k as f64 * x).abs() < 1e-6);
        }
    }

    #[test]
    fn full_aggregation_ignores_order(vals in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 1..20), rot in 0usize..20) {
        let inst: Vec<(SentenceId, HeadMatrix)> = vals
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut m = HeadMatrix::zeros(2, 3);
                for (c, &x) in v.iter().enumerate() {
                    m.set(c / 3, c % 3, x);
                }
                (SentenceId::new("a", i + 1), m)
            })
            .collect();
        let mut moved = inst.clone();
        let r = rot % moved.len();
        moved.rotate_left(r);
        let a = aggregate(&inst, inst.len()).unwrap();
        let b = aggregate(&moved, moved.len()).unwrap();
        prop_assert_eq!(a.values, b.values);
    }
}
