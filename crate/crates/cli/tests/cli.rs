use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pairforge"));
    c.env_remove("PAIRFORGE_CONFIG");
    c
}

fn toy(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/toy")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn p(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn train(dir: &Path) -> PathBuf {
    let lm = dir.join("lm.txt");
    ok(bin().args(["train-lm", "--corpus", &toy("corpus.txt"), "--out", &p(&lm)]).output().unwrap());
    lm
}

#[test]
fn help_for_every_subcommand() {
    for sub in [
        "train-lm",
        "generate-swaps",
        "back-translate",
        "balance",
        "silver",
        "serve-annotation",
        "build-dataset",
        "evaluate",
    ] {
        let text = ok(bin().args([sub, "--help"]).output().unwrap());
        assert!(text.contains("Usage"), "{sub}");
    }
}

#[test]
fn missing_lm_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["generate-swaps", "--tags", &toy("corpus.tagged"), "--lm", "/nonexistent/lm.txt"])
        .args(["--out", &p(&dir.path().join("s.jsonl"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/lm.txt"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "beam = 10\nbogus = 1\n").unwrap();
    let lm = dir.path().join("lm.txt");
    let run = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(run(&["--config", &p(&cfg), "train-lm", "--corpus", &toy("corpus.txt"), "--out", &p(&lm)]), Some(2));
    assert_eq!(run(&["--min-cosine", "1.5", "train-lm", "--corpus", &toy("corpus.txt"), "--out", &p(&lm)]), Some(2));
    assert_eq!(run(&["back-translate", "--sentences", &toy("corpus.txt"), "--provider", "nmt", "--out", &p(&lm)]), Some(2));
    assert!(!lm.exists());

    std::fs::write(&cfg, "lm_order = 2\n").unwrap();
    let out = bin()
        .env("PAIRFORGE_CONFIG", &cfg)
        .args(["train-lm", "--corpus", &toy("corpus.txt"), "--out", &p(&lm)])
        .output()
        .unwrap();
    ok(out);
    assert!(std::fs::read_to_string(&lm).unwrap().lines().any(|l| l == "order 2"));
    let manifest = std::fs::read_to_string(dir.path().join("lm.txt.manifest.json")).unwrap();
    assert!(manifest.contains("\"lm_order\": 2"));
}

#[test]
fn staged_pipeline_matches_build_dataset_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let lm = train(d);
    let swaps = d.join("swaps.jsonl");
    let results = d.join("results.jsonl");
    let counts = ok(bin()
        .args(["generate-swaps", "--tags", &toy("corpus.tagged"), "--lm", &p(&lm)])
        .args(["--out", &p(&swaps), "--results", &p(&results)])
        .output()
        .unwrap());
    assert!(counts.contains("sentences=200"));
    assert_eq!(std::fs::read_to_string(&results).unwrap().lines().count(), 200);

    let bt = d.join("bt.jsonl");
    ok(bin()
        .args(["back-translate", "--pairs", &p(&swaps), "--provider", &format!("rules:{}", toy("pivot.rules"))])
        .args(["--out", &p(&bt)])
        .output()
        .unwrap());
    let silver = d.join("silver.jsonl");
    ok(bin().args(["silver", "--pairs", &p(&swaps), &p(&bt), "--out", &p(&silver)]).output().unwrap());

    let build = d.join("ds");
    ok(bin()
        .args(["build-dataset", "--tags", &toy("corpus.tagged"), "--lm", &p(&lm)])
        .args(["--provider", &format!("rules:{}", toy("pivot.rules")), "--out", &p(&build)])
        .output()
        .unwrap());
    assert_eq!(std::fs::read(&swaps).unwrap(), std::fs::read(build.join("swaps.jsonl")).unwrap());
    assert_eq!(std::fs::read(&bt).unwrap(), std::fs::read(build.join("backtranslations.jsonl")).unwrap());

    let rows = |path: &Path| std::fs::read_to_string(path).unwrap().lines().count();
    let split_rows: usize = ["train", "dev", "test"].iter().map(|s| rows(&build.join(format!("{s}.tsv"))) - 1).sum();
    let identical_dropped = rows(&silver) - split_rows;
    assert!(identical_dropped < rows(&silver) / 10, "{identical_dropped}");

    let labeled = std::fs::read_to_string(&silver).unwrap();
    let first: serde_json::Value = serde_json::from_str(labeled.lines().next().unwrap()).unwrap();
    assert_eq!(first["provenance"], "swap");
    assert_eq!(first["label"], "non_paraphrase");
}

#[test]
fn balance_human_labels() {
    let dir = tempfile::tempdir().unwrap();
    let swaps = dir.path().join("sw.jsonl");
    let bt = dir.path().join("bt.jsonl");
    std::fs::write(
        &swaps,
        r#"{"id":1,"s1":"he ate an apple","s2":"an apple ate he","label":"non_paraphrase","provenance":"swap"}"#,
    )
    .unwrap();
    std::fs::write(
        &bt,
        concat!(
            r#"{"id":2,"s1":"he ate an apple","s2":"an apple was eaten by him","label":"paraphrase","provenance":"backtranslation"}"#,
            "\n",
            r#"{"id":3,"s1":"an apple ate he","s2":"he was eaten by an apple","label":"paraphrase","provenance":"backtranslation"}"#,
        ),
    )
    .unwrap();
    let out = dir.path().join("out.jsonl");
    ok(bin().args(["balance", "--swaps", &p(&swaps), "--bt", &p(&bt), "--out", &p(&out)]).output().unwrap());
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // swap pair, both back translations, then three recombinations
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[3]["s1"], "an apple ate he");
    assert_eq!(lines[3]["s2"], "an apple was eaten by him");
    assert_eq!(lines[3]["label"], "non_paraphrase");
    assert_eq!(lines[3]["label_source"], "recombined");
    assert_eq!(lines[5]["s1"], "he was eaten by an apple");
    assert_eq!(lines[5]["s2"], "an apple was eaten by him");
    assert_eq!(lines[5]["lineage"], serde_json::json!([4, 3]));
}

#[test]
fn evaluate_report() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = dir.path().join("t.tsv");
    std::fs::write(
        &tsv,
        "id\tsentence1\tsentence2\tlabel\n\
         1\tflights from new york to florida\tflights from florida to new york\t0\n\
         2\tthe cat sat\tthe cat sat down\t1\n\
         3\ta b c\tx y z\t0\n",
    )
    .unwrap();
    let out = dir.path().join("r.json");
    ok(bin().args(["evaluate", "--pairs", &p(&tsv), "--out", &p(&out)]).output().unwrap());
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["pairs"], 3);
    assert_eq!(r["unigram_predicted_paraphrase"], 2);
    assert!((r["unigram_accuracy"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!(r["pr_auc"].as_f64().is_some());
    assert!(dir.path().join("r.json.manifest.json").exists());
}

#[test]
fn annotations_feed_build_dataset() {
    use pairforge_annotation::{BatchRequest, CorrectionAction, CorrectionRecord, JudgmentSubmission, PairInput, Phase, Workspace};
    use pairforge_core::corpus::{Label, Provenance};

    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("ann.sqlite");
    {
        let ws = Workspace::open(&store, 4).unwrap();
        let pair = |id, s1: &str, s2: &str, provenance| PairInput {
            id,
            s1: s1.into(),
            s2: s2.into(),
            provenance,
        };
        let mut swaps = Vec::new();
        let mut bts = Vec::new();
        for i in 0..12u64 {
            let a = format!("person {i} flew from paris to rome");
            let b = format!("person {i} flew from rome to paris");
            swaps.push(pair(3 * i + 1, &a, &b, Provenance::Swap));
            bts.push(pair(3 * i + 2, &a, &format!("from paris to rome flew person {i}"), Provenance::Backtranslation));
            bts.push(pair(3 * i + 3, &b, &format!("from rome to paris flew person {i}"), Provenance::Backtranslation));
        }
        let ids: Vec<u64> = swaps.iter().chain(&bts).map(|p| p.id).collect();
        ws.enqueue_batch(BatchRequest { batch_id: None, phase: Phase::Correction, pairs: swaps }).unwrap();
        ws.enqueue_batch(BatchRequest { batch_id: None, phase: Phase::Judgment, pairs: bts }).unwrap();
        for &id in &ids {
            if id % 3 == 1 {
                ws.submit_correction(CorrectionRecord {
                    pair_id: id,
                    rater_id: "c".into(),
                    action: CorrectionAction::Accept,
                    fixed_text: None,
                })
                .unwrap();
            }
            for r in 0..5 {
                let vote = if id % 3 == 1 { Label::NonParaphrase } else { Label::Paraphrase };
                ws.submit_judgment(JudgmentSubmission {
                    pair_id: id,
                    rater_id: format!("r{r}"),
                    vote,
                })
                .unwrap();
            }
        }
    }
    let out = dir.path().join("ds");
    let counts = ok(bin()
        .args(["build-dataset", "--annotations", &p(&store), "--out", &p(&out)])
        .output()
        .unwrap());
    assert!(counts.contains("judged=36"), "{counts}");
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["mean_agreement"], 1.0);
    // 12 swaps, 24 back translations, 36 recombinations
    assert_eq!(stats["total"], 72);
}
