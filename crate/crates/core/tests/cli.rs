//! Command-line behaviour driven through `run_with`.

use std::fs;
use std::path::{Path, PathBuf};

use mtgender::attention::{write_dump, AttentionDump, DumpMeta};
use mtgender::cli::{run_with, RunConfig};
use mtgender::corpus::{parse_challenge_set, GenderColumn};

fn e2e(f: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e").join(f).display().to_string()
}

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run_with(std::iter::once("mtgender").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn evaluate_args(out: &Path) -> Vec<String> {
    let mut v: Vec<String> = vec!["--format".into(), "machine".into(), "--out-dir".into(), out.display().to_string()];
    v.push("evaluate".into());
    for (flag, file) in [
        ("--challenge-set", "en.txt"),
        ("--translations", "translations.tsv"),
        ("--alignments", "alignments.txt"),
        ("--pairs", "pairs.tsv"),
        ("--neutral-set", "en_neutral.txt"),
        ("--neutral-translations", "neutral_translations.tsv"),
        ("--neutral-alignments", "neutral_alignments.txt"),
        ("--stereotypes", "stereotypes.tsv"),
    ] {
        v.push(flag.into());
        v.push(e2e(file));
    }
    v
}

fn evaluate(out: &Path) -> (i32, String) {
    let args = evaluate_args(out);
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn evaluate_is_idempotent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ca, sa) = evaluate(a.path());
    let (cb, sb) = evaluate(b.path());
    assert_eq!((ca, cb), (0, 0));
    assert_eq!(sa, sb);
    for f in ["report.kv", "report.txt", "outcomes.tsv", "neutral_outcomes.tsv", "evaluate.log.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn pairs_match_committed_file() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().display().to_string();
    let (code, stdout) =
        run(&["--out-dir", &dir, "pairs", "--challenge-set", &e2e("en.txt"), "--stereotypes", &e2e("stereotypes.tsv")]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "pairs=10\nunpaired=0\n");
    assert_eq!(
        fs::read_to_string(out.path().join("pairs.tsv")).unwrap(),
        fs::read_to_string(e2e("pairs.tsv")).unwrap()
    );
}

#[test]
fn neutralize_reproduces_neutral_fixture() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().display().to_string();
    let (code, _) = run(&["--out-dir", &dir, "neutralize", "--challenge-set", &e2e("en.txt")]);
    assert_eq!(code, 0);
    let ours = parse_challenge_set(&out.path().join("en_neutral.txt"), GenderColumn::Neutral).unwrap();
    let fixture = fs::read_to_string(e2e("en_neutral.txt")).unwrap();
    let want: Vec<&str> = fixture.lines().collect();
    // male and female lines collapse onto one neutral line each
    for (k, r) in ours.iter().enumerate() {
        assert_eq!(r.to_line(), want[k / 2], "line {}", k + 1);
    }
}

#[test]
fn mpa_from_outcome_file() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(evaluate(out.path()).0, 0);
    let dir = out.path().display().to_string();
    let outcomes = out.path().join("outcomes.tsv").display().to_string();
    let (code, stdout) =
        run(&["--format", "machine", "--out-dir", &dir, "mpa", "--pairs", &e2e("pairs.tsv"), "--outcomes", &outcomes]);
    assert_eq!(code, 0);
    assert!(stdout.contains("mpa=50.0\nmpa_num=5\nmpa_den=10\n"), "{stdout}");
    assert!(stdout.contains("overall_acc=NA\n"));
}

#[test]
fn prior_bias_rejects_gendered_set() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().display().to_string();
    let (code, _) = run(&[
        "--out-dir",
        &dir,
        "prior-bias",
        "--neutral-set",
        &e2e("en.txt"),
        "--neutral-translations",
        &e2e("translations.tsv"),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn prior_bias_on_neutral_set() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().display().to_string();
    let (code, stdout) = run(&[
        "--format",
        "machine",
        "--out-dir",
        &dir,
        "prior-bias",
        "--neutral-set",
        &e2e("en_neutral.txt"),
        "--neutral-translations",
        &e2e("neutral_translations.tsv"),
        "--neutral-alignments",
        &e2e("neutral_alignments.txt"),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("prior_masc=75.0\n") && stdout.contains("prior_unknown=2\n"), "{stdout}");
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().display().to_string();
    // missing input file
    let (code, _) = run(&["--out-dir", &dir, "pairs", "--challenge-set", "/nonexistent/en.txt"]);
    assert_eq!(code, 3);
    // missing required input
    let (code, _) = run(&["--out-dir", &dir, "evaluate", "--challenge-set", &e2e("en.txt")]);
    assert_eq!(code, 2);
    // bad hyperparameter
    let (code, _) = run(&["--out-dir", &dir, "align", "--bitext", &e2e("en.txt"), "--null-prob", "1.5"]);
    assert_eq!(code, 2);
    // unknown subcommand
    let (code, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn show_config_roundtrips() {
    let (code, stdout) = run(&["--show-config", "align", "--tension", "2.5", "--iterations", "7"]);
    assert_eq!(code, 0);
    let cfg: RunConfig = toml::from_str(&stdout).unwrap();
    assert_eq!(cfg.aligner.tension, 2.5);
    assert_eq!(cfg.aligner.iterations, 7);

    // a config file is overridden by flags
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "[aligner]\ntension = 1.0\nnull_prob = 0.2\n").unwrap();
    let (code, stdout) = run(&["--config", path.to_str().unwrap(), "--show-config", "align", "--tension", "3.0"]);
    assert_eq!(code, 0);
    let cfg: RunConfig = toml::from_str(&stdout).unwrap();
    assert_eq!((cfg.aligner.tension, cfg.aligner.null_prob), (3.0, 0.2));
}

#[test]
fn align_writes_one_line_per_pair() {
    let out = tempfile::tempdir().unwrap();
    let bitext = out.path().join("bitext.txt");
    let src = fs::read_to_string(e2e("en.txt")).unwrap();
    let tgt = fs::read_to_string(e2e("translations.tsv")).unwrap();
    let lines: String = src
        .lines()
        .zip(tgt.lines())
        .map(|(s, t)| format!("{} ||| {}\n", s.split('\t').nth(2).unwrap(), t.split_once('\t').unwrap().1))
        .collect();
    fs::write(&bitext, lines).unwrap();
    let dir = out.path().display().to_string();
    let (code, _) = run(&["--out-dir", &dir, "align", "--bitext", bitext.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(out.path().join("alignments.txt")).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert!(out.path().join("align.log.json").exists());
}

/// Uniform-attention dumps for the feminine variant of every accurate pair.
fn write_dumps(root: &Path) {
    let records = parse_challenge_set(Path::new(&e2e("en.txt")), GenderColumn::Gendered).unwrap();
    let translations = fs::read_to_string(e2e("translations.tsv")).unwrap();
    for id in ["en:2", "en:6", "en:8", "en:12", "en:16"] {
        let record = records.iter().find(|r| r.id.as_str() == id).unwrap();
        let italian = translations.lines().find_map(|l| l.strip_prefix(&format!("{id}\t"))).unwrap();
        let piece = |w: &str| format!("\u{2581}{w}");
        let mut prompt = vec![piece("English"), ":".to_string()];
        let start = prompt.len();
        prompt.extend(record.sentence.split_whitespace().map(piece));
        let end = prompt.len();
        prompt.extend([piece("Italian"), ":".to_string()]);
        let meta = DumpMeta {
            sentence_id: id.into(),
            prompt_len: prompt.len(),
            source_span: (start, end),
            context_tokens: prompt,
            generated_tokens: italian.split_whitespace().map(piece).collect(),
            n_layers: 24,
            n_heads: 4,
            dtype: "f32le".into(),
        };
        let width = meta.prompt_len;
        let dump = AttentionDump::from_fn(meta, |t, _, _, _| 1.0 / (width + t) as f32);
        write_dump(&root.join(id.replace(':', "_")), &dump).unwrap();
    }
}

#[test]
fn attention_report_and_sanity_check() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(evaluate(out.path()).0, 0);
    let dumps = out.path().join("dumps");
    write_dumps(&dumps);
    let dir = out.path().display().to_string();
    let outcomes = out.path().join("outcomes.tsv").display().to_string();
    let common = [
        "--challenge-set",
        &e2e("en.txt"),
        "--pairs",
        &e2e("pairs.tsv"),
        "--outcomes",
        &outcomes,
        "--dumps",
        dumps.to_str().unwrap(),
    ];

    let mut args = vec!["--out-dir", &dir, "attention-report"];
    args.extend(common);
    args.extend(["--n-min", "5", "--layers", "8-20", "--scale", "0,0.2"]);
    let (code, stdout) = run(&args);
    assert_eq!(code, 0, "{stdout}");
    let csv = fs::read_to_string(out.path().join("heatmap.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.lines().all(|l| l.split(',').count() == 4));
    assert!(out.path().join("heatmap.png").exists());

    // one instance short
    let mut args = vec!["--out-dir", &dir, "attention-report"];
    args.extend(common);
    args.extend(["--n-min", "6"]);
    assert_eq!(run(&args).0, 2);
    assert_eq!(fs::read_to_string(out.path().join("heatmap.csv")).unwrap(), csv);

    let mut args = vec!["--format", "machine", "--out-dir", &dir, "sanity-check"];
    args.extend(common);
    args.extend(["--n-min", "5", "--check-layer", "15", "--check-heads", "0,3"]);
    let (code, stdout) = run(&args);
    assert_eq!(code, 0, "{stdout}");
    for key in ["prompt_attention_mass=", "target_L15_H0=", "target_L15_H3=", "secondary_L15_H3=", "instances=5"] {
        assert!(stdout.contains(key), "{key} missing from\n{stdout}");
    }
}
