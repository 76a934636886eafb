//! Subcommand bodies. Each returns the text to print on stdout.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde_json::json;

use super::config::{ReportFormat, RunConfig};
use super::io::{self, align_err, corpus_err, validation};
use super::CliError;
use crate::aligner::{
    format_pharaoh, read_bitext, read_parallel_files, tokenize, train, AlignmentLink, Lang, ParallelCorpus,
};
use crate::attention::{
    aggregate, cue_attention, export_heatmap, list_dumps, locate_spans, prompt_attention_mass, read_dump,
    secondary_entity_attention, AttentionDump, HeadMatrix, SpanMap, SpanMatch,
};
use crate::corpus::{
    build_minimal_pairs, classify_stereotypes, format_challenge_set, format_pairs, parse_challenge_set, parse_pairs,
    pronouns, GenderColumn, SentenceId, SentenceRecord, StereotypeLexicon,
};
use crate::metrics::{
    format_outcomes, minimal_pair_accuracy, parse_outcomes, prior_bias, standard_accuracy, unknown_rate, GenderOutcome,
    MetricsReport,
};
use crate::morpho::{ArticleTable, GenderLabel, GenderLexicon, Morphology, ProfessionMap};
use crate::neutralizer::{neutralize as neutralize_record, verify_neutral};

type Out = Result<Option<String>, CliError>;

struct Resources {
    stereotypes: StereotypeLexicon,
    lexicon: GenderLexicon,
    articles: ArticleTable,
    map: ProfessionMap,
}

impl Resources {
    fn load(cfg: &RunConfig) -> Result<Self, CliError> {
        let p = &cfg.paths;
        let stereotypes = match &p.stereotypes {
            Some(path) => StereotypeLexicon::parse(&io::read(path)?).map_err(corpus_err)?,
            None => StereotypeLexicon::bundled(),
        };
        let lexicon = match &p.gender_lexicon {
            Some(path) => GenderLexicon::parse(&io::read(path)?).map_err(validation)?,
            None => GenderLexicon::bundled().clone(),
        };
        let articles = match &p.articles {
            Some(path) => ArticleTable::parse(&io::read(path)?).map_err(validation)?,
            None => ArticleTable::bundled().clone(),
        };
        let map = match &p.profession_map {
            Some(path) => ProfessionMap::parse(&io::read(path)?).map_err(validation)?,
            None => ProfessionMap::bundled().clone(),
        };
        Ok(Resources { stereotypes, lexicon, articles, map })
    }

    fn morphology(&self) -> Morphology<'_> {
        Morphology::new(&self.lexicon, &self.articles)
    }

    /// Italian surface forms for an English profession.
    fn forms(&self, english: &str) -> Option<Vec<String>> {
        let lemma = self.map.lemma(english)?;
        Some(self.lexicon.entry(lemma)?.all_forms().map(String::from).collect())
    }
}

fn require<'a>(slot: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    slot.as_deref().ok_or_else(|| CliError::Validation(format!("missing input: --{flag}")))
}

fn load_sets(cfg: &RunConfig, expect: GenderColumn) -> Result<Vec<SentenceRecord>, CliError> {
    if cfg.paths.challenge_sets.is_empty() {
        return Err(CliError::Validation("missing input: --challenge-set".into()));
    }
    let mut all = Vec::new();
    for path in &cfg.paths.challenge_sets {
        all.extend(parse_challenge_set(path, expect).map_err(corpus_err)?);
    }
    Ok(all)
}

fn render(cfg: &RunConfig, report: &MetricsReport) -> String {
    match cfg.format {
        ReportFormat::Table => report.to_table(),
        ReportFormat::Machine => report.to_machine(),
    }
}

fn write_report(cfg: &RunConfig, report: &MetricsReport) -> Result<(), CliError> {
    let dir = &cfg.paths.output_dir;
    io::write(&dir.join("report.txt"), report.to_table())?;
    io::write(&dir.join("report.kv"), report.to_machine())
}

pub fn pairs(cfg: &RunConfig) -> Out {
    let res = Resources::load(cfg)?;
    let mut records = load_sets(cfg, GenderColumn::Gendered)?;
    classify_stereotypes(&mut records, &res.stereotypes);
    let set = build_minimal_pairs(&records, &res.stereotypes).map_err(corpus_err)?;
    let links = set.links();
    let dir = &cfg.paths.output_dir;
    io::write(&dir.join("pairs.tsv"), format_pairs(&links))?;
    let unpaired: Vec<_> =
        set.unpaired.iter().map(|(id, why)| json!({"id": id, "reason": format!("{why:?}")})).collect();
    io::write_log(dir, "pairs", &json!({"records": records.len(), "pairs": links.len(), "unpaired": unpaired}))?;
    Ok(Some(format!("pairs={}\nunpaired={}\n", links.len(), set.unpaired.len())))
}

pub fn neutralize(cfg: &RunConfig) -> Out {
    let mut summary = String::new();
    let mut logs = Vec::new();
    let mut failed = Vec::new();
    if cfg.paths.challenge_sets.is_empty() {
        return Err(CliError::Validation("missing input: --challenge-set".into()));
    }
    for path in &cfg.paths.challenge_sets {
        let records = parse_challenge_set(path, GenderColumn::Any).map_err(corpus_err)?;
        let neutral: Vec<SentenceRecord> =
            records.iter().map(neutralize_record).collect::<Result<_, _>>().map_err(validation)?;
        let report = verify_neutral(&neutral);
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("set");
        let out = cfg.paths.output_dir.join(format!("{stem}_neutral.txt"));
        io::write(&out, format_challenge_set(&neutral))?;
        let issues: Vec<_> = report
            .issues
            .iter()
            .map(|i| json!({"id": i.id, "index": i.index, "kind": format!("{:?}", i.kind), "token": i.token}))
            .collect();
        logs.push(json!({"input": path, "output": out, "records": neutral.len(), "issues": issues}));
        summary.push_str(&format!("{}: {} sentences, {} issues\n", out.display(), neutral.len(), report.issues.len()));
        if !report.is_clean() {
            failed.push(format!("{} ({} issues)", path.display(), report.issues.len()));
        }
    }
    io::write_log(&cfg.paths.output_dir, "neutralize", &json!({"sets": logs}))?;
    if !failed.is_empty() {
        return Err(CliError::Validation(format!("neutral set verification failed: {}", failed.join(", "))));
    }
    Ok(Some(summary))
}

pub fn align(cfg: &RunConfig, bitext: Option<&Path>, parallel: Option<(&Path, &Path)>) -> Out {
    let pairs = match (bitext, parallel) {
        (Some(b), _) => read_bitext(b).map_err(align_err)?,
        (None, Some((s, t))) => read_parallel_files(s, t).map_err(align_err)?,
        (None, None) => return Err(CliError::Validation("missing input: --bitext or --source/--target".into())),
    };
    let tokenized: Vec<_> =
        pairs.iter().map(|(s, t)| (tokenize(s, Lang::English).tokens, tokenize(t, Lang::Italian).tokens)).collect();
    let corpus = ParallelCorpus::new(tokenized.clone()).map_err(align_err)?;
    let model = train(&corpus, &cfg.aligner).map_err(align_err)?;
    let mut out = String::new();
    let mut fallback = 0;
    for (s, t) in &tokenized {
        let a = model.align(s, t);
        fallback += a.fallback_positions.len();
        out.push_str(&format_pharaoh(&a.links));
        out.push('\n');
    }
    let dir = &cfg.paths.output_dir;
    io::write(&dir.join("alignments.txt"), &out)?;
    io::write_log(
        dir,
        "align",
        &json!({
            "pairs": tokenized.len(),
            "config": cfg.aligner,
            "log_likelihoods": model.log_likelihoods,
            "fallback_positions": fallback,
        }),
    )?;
    Ok(Some(format!("aligned {} sentence pairs\n", tokenized.len())))
}

/// Align (or read alignments) and extract one outcome per record.
fn score(
    cfg: &RunConfig,
    res: &Resources,
    records: &[SentenceRecord],
    translations: &Path,
    alignments: Option<&Path>,
) -> Result<(Vec<GenderOutcome>, serde_json::Value), CliError> {
    let trans = io::read_translations(translations)?;
    let order: Vec<SentenceId> = trans.iter().map(|(id, _)| id.clone()).collect();
    let by_id: HashMap<&SentenceId, &str> = trans.iter().map(|(id, t)| (id, t.as_str())).collect();
    let mut texts = Vec::with_capacity(records.len());
    for r in records {
        let t = by_id.get(&r.id).ok_or_else(|| CliError::Validation(format!("no translation for {}", r.id)))?;
        texts.push(*t);
    }
    let mut fallback = 0;
    let links: Vec<Vec<AlignmentLink>> = match alignments {
        Some(path) => {
            let map = io::read_alignments(path, &order)?;
            records
                .iter()
                .map(|r| {
                    map.get(&r.id).cloned().ok_or_else(|| CliError::Validation(format!("no alignment for {}", r.id)))
                })
                .collect::<Result<_, _>>()?
        }
        None => {
            let corpus = ParallelCorpus::from_text(records.iter().zip(&texts).map(|(r, t)| (r.sentence.as_str(), *t)))
                .map_err(align_err)?;
            let model = train(&corpus, &cfg.aligner).map_err(align_err)?;
            records
                .iter()
                .zip(&texts)
                .map(|(r, t)| {
                    let a =
                        model.align(&tokenize(&r.sentence, Lang::English).tokens, &tokenize(t, Lang::Italian).tokens);
                    fallback += a.fallback_positions.len();
                    a.links
                })
                .collect()
        }
    };
    let morph = res.morphology();
    let outcomes: Vec<GenderOutcome> =
        records.iter().zip(&texts).zip(&links).map(|((r, t), l)| morph.extract_outcome(r, t, l)).collect();
    let unknown: Vec<&SentenceId> =
        outcomes.iter().filter(|o| o.label == GenderLabel::Unknown).map(|o| &o.record_id).collect();
    let unaligned: Vec<&SentenceId> = outcomes.iter().filter(|o| o.span.is_empty()).map(|o| &o.record_id).collect();
    let log = json!({
        "records": records.len(),
        "alignments": if alignments.is_some() { "file" } else { "trained" },
        "fallback_positions": fallback,
        "unknown_ids": unknown,
        "unaligned_ids": unaligned,
    });
    Ok((outcomes, log))
}

pub fn evaluate(cfg: &RunConfig) -> Out {
    let res = Resources::load(cfg)?;
    let p = &cfg.paths;
    let dir = &p.output_dir;
    let records = load_sets(cfg, GenderColumn::Gendered)?;
    let (outcomes, gendered_log) =
        score(cfg, &res, &records, require(&p.translations, "translations")?, p.alignments.as_deref())?;
    io::write(&dir.join("outcomes.tsv"), format_outcomes(&outcomes))?;
    let mut report = MetricsReport {
        standard: Some(standard_accuracy(&outcomes).map_err(validation)?),
        unknown_rate: Some(unknown_rate(&outcomes).map_err(validation)?),
        ..MetricsReport::default()
    };
    let mut log = json!({"gendered": gendered_log});
    if let Some(pairs_path) = &p.pairs {
        let pairs = parse_pairs(&io::read(pairs_path)?).map_err(corpus_err)?;
        let by_id: HashMap<SentenceId, GenderOutcome> =
            outcomes.iter().map(|o| (o.record_id.clone(), o.clone())).collect();
        report.pairs = Some(minimal_pair_accuracy(&pairs, &by_id).map_err(validation)?);
    }
    if let Some(neutral_path) = &p.neutral_set {
        let neutral = parse_challenge_set(neutral_path, GenderColumn::Neutral).map_err(corpus_err)?;
        let (n_out, n_log) = score(
            cfg,
            &res,
            &neutral,
            require(&p.neutral_translations, "neutral-translations")?,
            p.neutral_alignments.as_deref(),
        )?;
        io::write(&dir.join("neutral_outcomes.tsv"), format_outcomes(&n_out))?;
        report.prior = Some(prior_bias(&n_out).map_err(validation)?);
        log["neutral"] = n_log;
    }
    write_report(cfg, &report)?;
    io::write_log(dir, "evaluate", &log)?;
    Ok(Some(render(cfg, &report)))
}

pub fn mpa(cfg: &RunConfig) -> Out {
    let p = &cfg.paths;
    let pairs = parse_pairs(&io::read(require(&p.pairs, "pairs")?)?).map_err(corpus_err)?;
    let outcomes = parse_outcomes(&io::read(require(&p.outcomes, "outcomes")?)?).map_err(validation)?;
    let by_id: HashMap<SentenceId, GenderOutcome> = outcomes.into_iter().map(|o| (o.record_id.clone(), o)).collect();
    let result = minimal_pair_accuracy(&pairs, &by_id).map_err(validation)?;
    io::write_log(&p.output_dir, "mpa", &json!({"pairs": pairs.len(), "accurate": result.accurate}))?;
    let report = MetricsReport { pairs: Some(result), ..MetricsReport::default() };
    write_report(cfg, &report)?;
    Ok(Some(render(cfg, &report)))
}

pub fn prior_bias_cmd(cfg: &RunConfig) -> Out {
    let res = Resources::load(cfg)?;
    let p = &cfg.paths;
    let neutral =
        parse_challenge_set(require(&p.neutral_set, "neutral-set")?, GenderColumn::Neutral).map_err(corpus_err)?;
    let (outcomes, log) = score(
        cfg,
        &res,
        &neutral,
        require(&p.neutral_translations, "neutral-translations")?,
        p.neutral_alignments.as_deref(),
    )?;
    io::write(&p.output_dir.join("neutral_outcomes.tsv"), format_outcomes(&outcomes))?;
    let report = MetricsReport {
        prior: Some(prior_bias(&outcomes).map_err(validation)?),
        unknown_rate: Some(unknown_rate(&outcomes).map_err(validation)?),
        ..MetricsReport::default()
    };
    write_report(cfg, &report)?;
    io::write_log(&p.output_dir, "prior_bias", &log)?;
    Ok(Some(render(cfg, &report)))
}

struct Instance {
    id: SentenceId,
    dump: AttentionDump,
    span: SpanMap,
}

/// Located dumps for the chosen variant of every accurate pair, sorted by id.
fn instances(cfg: &RunConfig, res: &Resources) -> Result<(Vec<Instance>, serde_json::Value), CliError> {
    let p = &cfg.paths;
    let records: HashMap<SentenceId, SentenceRecord> =
        load_sets(cfg, GenderColumn::Gendered)?.into_iter().map(|r| (r.id.clone(), r)).collect();
    let pairs = parse_pairs(&io::read(require(&p.pairs, "pairs")?)?).map_err(corpus_err)?;
    let outcomes = parse_outcomes(&io::read(require(&p.outcomes, "outcomes")?)?).map_err(validation)?;
    let by_id: HashMap<SentenceId, GenderOutcome> = outcomes.into_iter().map(|o| (o.record_id.clone(), o)).collect();
    let accurate: HashSet<String> =
        minimal_pair_accuracy(&pairs, &by_id).map_err(validation)?.accurate.into_iter().collect();
    let mut wanted: Vec<SentenceId> = pairs
        .iter()
        .filter(|pl| accurate.contains(&pl.key_hash))
        .map(|pl| if cfg.attention.masculine_cue { pl.male_id.clone() } else { pl.female_id.clone() })
        .collect();
    wanted.sort();

    let mut dumps: BTreeMap<SentenceId, AttentionDump> = BTreeMap::new();
    for dir in list_dumps(require(&p.dumps, "dumps")?).map_err(validation)? {
        let d = read_dump(&dir).map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?;
        dumps.insert(SentenceId::from(d.meta.sentence_id.as_str()), d);
    }

    let mut out = Vec::new();
    let mut excluded = Vec::new();
    for id in wanted {
        let record = records
            .get(&id)
            .ok_or_else(|| CliError::Validation(format!("pair member {id} not in the challenge sets")))?;
        let Some(dump) = dumps.remove(&id) else {
            excluded.push(json!({"id": id, "reason": "no dump"}));
            continue;
        };
        let tokens = record.tokens();
        let cue = pronouns::find_all(&tokens)
            .into_iter()
            .next()
            .map(|(_, hit)| hit.base)
            .ok_or_else(|| CliError::Validation(format!("{id} has no gender cue")))?;
        let Some(forms) = res.forms(&record.profession) else {
            excluded.push(json!({"id": id, "reason": "profession not in lexicon"}));
            continue;
        };
        let secondary = record.secondary_word().and_then(|w| res.forms(&w));
        match locate_spans(&dump, &forms, &cue, secondary.as_deref(), &res.articles) {
            Ok(SpanMatch::Matched(span)) => out.push(Instance { id, dump, span }),
            Ok(SpanMatch::NoMatch) => excluded.push(json!({"id": id, "reason": "unmatched span"})),
            Err(e) => return Err(CliError::Validation(format!("{id}: {e}"))),
        }
    }
    let log = json!({"accurate_pairs": accurate.len(), "instances": out.len(), "excluded": excluded});
    Ok((out, log))
}

fn head_err(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

pub fn attention_report(cfg: &RunConfig) -> Out {
    let res = Resources::load(cfg)?;
    let (inst, mut log) = instances(cfg, &res)?;
    let matrices: Vec<(SentenceId, HeadMatrix)> = inst
        .iter()
        .map(|i| Ok((i.id.clone(), cue_attention(&i.dump, &i.span).map_err(head_err)?)))
        .collect::<Result<_, CliError>>()?;
    let agg = aggregate(&matrices, cfg.attention.n_min).map_err(head_err)?;
    let dir = &cfg.paths.output_dir;
    let a = &cfg.attention;
    export_heatmap(&agg, a.layers, a.scale, &dir.join("heatmap.csv"), &dir.join("heatmap.png")).map_err(head_err)?;
    io::write(&dir.join("head_matrix.json"), serde_json::to_string(&agg).expect("matrix serializes") + "\n")?;
    log["aggregated"] = json!(agg.n);
    log["layers"] = json!(a.layers);
    io::write_log(dir, "attention_report", &log)?;
    Ok(Some(format!("aggregated {} instances over layers {}-{}\n", agg.n, a.layers.0, a.layers.1)))
}

pub fn sanity_check(cfg: &RunConfig) -> Out {
    let res = Resources::load(cfg)?;
    let (inst, mut log) = instances(cfg, &res)?;
    let a = &cfg.attention;
    if inst.len() < a.n_min {
        return Err(CliError::Validation(format!("need at least {} instances, have {}", a.n_min, inst.len())));
    }
    let used = &inst[..a.n_min];
    let (nl, nh) = (used[0].dump.meta.n_layers, used[0].dump.meta.n_heads);
    if a.check_layer >= nl || a.check_heads.iter().any(|&h| h >= nh) {
        return Err(CliError::Validation(format!("check cells outside {nl} layers x {nh} heads")));
    }
    let mut mass = 0.0;
    let mut target = Vec::new();
    let mut secondary = Vec::new();
    for i in used {
        mass += prompt_attention_mass(&i.dump, &i.span).map_err(head_err)?;
        target.push((i.id.clone(), cue_attention(&i.dump, &i.span).map_err(head_err)?));
        if i.span.secondary_span.is_some() {
            secondary.push((i.id.clone(), secondary_entity_attention(&i.dump, &i.span).map_err(head_err)?));
        }
    }
    let mass = mass / used.len() as f64;
    let target = aggregate(&target, target.len()).map_err(head_err)?;
    let secondary =
        if secondary.is_empty() { None } else { Some(aggregate(&secondary, secondary.len()).map_err(head_err)?) };

    let mut kv = vec![("prompt_attention_mass".to_string(), format!("{mass:.4}"))];
    kv.push(("instances".into(), used.len().to_string()));
    kv.push(("secondary_instances".into(), secondary.as_ref().map(|m| m.n).unwrap_or(0).to_string()));
    for &h in &a.check_heads {
        let l = a.check_layer;
        kv.push((format!("target_L{l}_H{h}"), format!("{:.4}", target.get(l, h))));
        let s = secondary.as_ref().map(|m| format!("{:.4}", m.get(l, h))).unwrap_or_else(|| "NA".into());
        kv.push((format!("secondary_L{l}_H{h}"), s));
    }
    let machine: String = kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    let table: String = kv.iter().map(|(k, v)| format!("{k:<28} {v:>8}\n")).collect();
    let dir = &cfg.paths.output_dir;
    io::write(&dir.join("sanity.kv"), &machine)?;
    io::write(&dir.join("sanity.txt"), &table)?;
    log["prompt_attention_mass"] = json!(mass);
    io::write_log(dir, "sanity_check", &log)?;
    Ok(Some(match cfg.format {
        ReportFormat::Table => table,
        ReportFormat::Machine => machine,
    }))
}
