//! Pipeline stages behind each subcommand. Every command computes its outputs
//! in memory, then commits them together with a run manifest.

use std::collections::{BTreeMap, HashSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use pairforge_annotation::{BatchRequest, PairInput, Phase, Workspace};
use pairforge_core::backtrans::{
    filter_candidates, round_trip, sample_by_inversion, BackTransCandidate, ExternalProvider, PseudoPivotProvider,
    RoundTripConfig, ScriptedProvider, TranslationProvider,
};
use pairforge_core::config::PipelineConfig;
use pairforge_core::corpus::{
    balance_labels, make_splits, metadata_jsonl, report_stats, silver_inputs, to_tsv, LabeledPair, Provenance,
    UnlabeledPair,
};
use pairforge_core::eval::{accuracy, bow_score, pr_auc, score_with, EvalError, ScoredPair};
use pairforge_core::judgment::{mask_provenance, JudgmentRecord};
use pairforge_core::lm::NgramModel;
use pairforge_core::swap::{generate_corpus, prune_list_permutations, SwapConfig, SwapInput, SwapResult};
use pairforge_core::tagging::{build_candidate_sets, build_template, LexiconTagger, PreTaggedProvider, TaggerProvider};
use pairforge_core::text::{read_corpus, Casing, FeatureOrder, Sentence};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{manifest_path, require_file, runtime, CliError, FileDigest, Outputs};
use crate::records::{labeled_records, read_jsonl, to_jsonl, PairRecord, SwapRecord};

pub type Counts = BTreeMap<String, usize>;

const EXTERNAL_TIMEOUT: Duration = Duration::from_secs(30);
const EXTERNAL_RETRIES: usize = 2;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<FileDigest>,
    pub parameters: BTreeMap<String, String>,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub counts: Counts,
    pub outputs: Vec<FileDigest>,
}

struct Run<'a> {
    command: &'static str,
    cfg: &'a PipelineConfig,
    inputs: Vec<FileDigest>,
    parameters: BTreeMap<String, String>,
    counts: Counts,
    outputs: Outputs,
}

impl<'a> Run<'a> {
    fn new(command: &'static str, cfg: &'a PipelineConfig) -> Self {
        Run {
            command,
            cfg,
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            counts: Counts::new(),
            outputs: Outputs::default(),
        }
    }

    fn input(&mut self, path: &Path, what: &str) -> Result<(), CliError> {
        require_file(path, what)?;
        self.inputs.push(FileDigest::of_file(path)?);
        Ok(())
    }

    fn count(&mut self, key: &str, n: usize) {
        self.counts.insert(key.to_string(), n);
    }

    /// Writes outputs plus a manifest at `manifest`. Output paths in the
    /// manifest are relative to `base` when given.
    fn finish(mut self, manifest: PathBuf, base: Option<&Path>) -> Result<Counts, CliError> {
        let m = Manifest {
            tool: "pairforge",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            inputs: self.inputs,
            parameters: self.parameters,
            config_hash: self.cfg.hash(),
            config: self.cfg.clone(),
            counts: self.counts.clone(),
            outputs: self.outputs.digests(base),
        };
        let mut body = serde_json::to_vec_pretty(&m).expect("serializable");
        body.push(b'\n');
        self.outputs.add(manifest, body);
        self.outputs.commit()?;
        Ok(self.counts)
    }
}

fn load_model(path: &Path, run: &mut Run) -> Result<NgramModel, CliError> {
    run.input(path, "language model file")?;
    NgramModel::load(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

pub fn train_lm(cfg: &PipelineConfig, corpus: &Path, out: &Path) -> Result<Counts, CliError> {
    let mut run = Run::new("train-lm", cfg);
    run.input(corpus, "corpus file")?;
    let sentences = read_corpus(corpus, cfg.casing).map_err(runtime)?;
    let model = NgramModel::train(&sentences, cfg.lm_order).map_err(runtime)?;
    run.count("sentences", sentences.len());
    run.count("vocab", model.vocab_size());
    run.count("ngrams", model.ngrams().count());
    run.outputs.add(out, model.to_text());
    run.finish(manifest_path(out), None)
}

/// Where tagged sentences come from.
#[derive(Debug, Clone)]
pub enum TagSource {
    Tagged(PathBuf),
    Lexicon {
        corpus: PathBuf,
        lexicon: PathBuf,
        gazetteer: Option<PathBuf>,
    },
}

fn swap_inputs(src: &TagSource, cfg: &PipelineConfig, run: &mut Run) -> Result<Vec<SwapInput>, CliError> {
    let (sentences, tagger): (Vec<Sentence>, Box<dyn TaggerProvider>) = match src {
        TagSource::Tagged(path) => {
            run.input(path, "tagged corpus")?;
            let p = PreTaggedProvider::from_path(path, cfg.casing).map_err(runtime)?;
            (p.sentences().to_vec(), Box::new(p))
        }
        TagSource::Lexicon {
            corpus,
            lexicon,
            gazetteer,
        } => {
            run.input(corpus, "corpus file")?;
            run.input(lexicon, "lexicon file")?;
            if let Some(g) = gazetteer {
                run.input(g, "gazetteer file")?;
            }
            let t = LexiconTagger::from_paths(lexicon, gazetteer.as_deref(), cfg.casing).map_err(runtime)?;
            (read_corpus(corpus, cfg.casing).map_err(runtime)?, Box::new(t))
        }
    };
    sentences
        .into_iter()
        .map(|s| {
            let tagged = tagger.tag(&s).map_err(runtime)?;
            let template = build_template(&s, &tagged, cfg.ner_threshold).map_err(|e| runtime(format!("{s}: {e}")))?;
            let candidates = build_candidate_sets(&template);
            Ok(SwapInput {
                sentence: s,
                template,
                candidates,
            })
        })
        .collect()
}

pub struct SwapStage {
    pub results: Vec<SwapResult>,
    pub pairs: Vec<PairRecord>,
}

/// Beam search over every input, list-permutation pruning, then accepted
/// pairs numbered from `first_id`.
pub fn run_swaps(inputs: &[SwapInput], model: &NgramModel, cfg: &PipelineConfig, first_id: u64) -> Result<SwapStage, CliError> {
    let config = SwapConfig {
        beam_size: cfg.beam,
        threshold: cfg.t,
    };
    let results = generate_corpus(inputs, model, config).map_err(runtime)?;
    let results = prune_list_permutations(results, cfg.list_keep_fraction, cfg.seed);
    let pairs = results
        .iter()
        .filter(|r| r.accepted)
        .zip(first_id..)
        .map(|(r, id)| PairRecord::generated(id, &r.source, r.generated.as_ref().expect("accepted"), Provenance::Swap))
        .collect();
    Ok(SwapStage { results, pairs })
}

fn swap_counts(run: &mut Run, stage: &SwapStage) {
    run.count("sentences", stage.results.len());
    run.count("swap_pairs", stage.pairs.len());
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for r in &stage.results {
        if let Some(reason) = r.rejection_reason {
            let key = serde_json::to_value(reason).expect("serializable");
            *reasons.entry(format!("rejected_{}", key.as_str().unwrap_or_default())).or_insert(0) += 1;
        }
    }
    run.counts.extend(reasons);
}

pub fn generate_swaps(
    cfg: &PipelineConfig,
    src: &TagSource,
    lm: &Path,
    out: &Path,
    results_out: Option<&Path>,
) -> Result<Counts, CliError> {
    let mut run = Run::new("generate-swaps", cfg);
    let model = load_model(lm, &mut run)?;
    let inputs = swap_inputs(src, cfg, &mut run)?;
    let stage = run_swaps(&inputs, &model, cfg, 1)?;
    swap_counts(&mut run, &stage);
    run.outputs.add(out, to_jsonl(&stage.pairs));
    if let Some(p) = results_out {
        let records: Vec<SwapRecord> = stage.results.iter().enumerate().map(|(i, r)| SwapRecord::new(i, r)).collect();
        run.outputs.add(p, to_jsonl(&records));
    }
    run.finish(manifest_path(out), None)
}

/// `script:FILE`, `rules:FILE` or `exec:COMMAND ARGS...`.
pub fn load_provider(spec: &str, cfg: &PipelineConfig) -> Result<(Box<dyn TranslationProvider>, Option<PathBuf>), CliError> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("provider {spec:?} must be script:FILE, rules:FILE or exec:COMMAND")))?;
    match kind {
        "script" => {
            let path = PathBuf::from(rest);
            require_file(&path, "translation script")?;
            let p = ScriptedProvider::from_path(&path, cfg.casing).map_err(runtime)?;
            Ok((Box::new(p), Some(path)))
        }
        "rules" => {
            let path = PathBuf::from(rest);
            require_file(&path, "pivot rules file")?;
            let p = PseudoPivotProvider::from_path(&path, cfg.seed).map_err(runtime)?;
            Ok((Box::new(p), Some(path)))
        }
        "exec" => {
            let mut words = rest.split_whitespace().map(str::to_string);
            let program = words
                .next()
                .ok_or_else(|| CliError::Config("exec provider needs a command".into()))?;
            let p = ExternalProvider::new(program, words.collect(), cfg.casing, EXTERNAL_TIMEOUT, EXTERNAL_RETRIES);
            Ok((Box::new(p), None))
        }
        other => Err(CliError::Config(format!("unknown provider kind {other:?}"))),
    }
}

pub struct BtStage {
    pub candidates: usize,
    pub filtered: usize,
    pub retained: Vec<BackTransCandidate>,
    pub pairs: Vec<PairRecord>,
}

/// Round trip for every sentence, cosine filter, then inversion-based
/// sampling over the whole pool.
pub fn run_backtranslation(
    sentences: &[Sentence],
    provider: &dyn TranslationProvider,
    cfg: &PipelineConfig,
    first_id: u64,
) -> Result<BtStage, CliError> {
    let config = RoundTripConfig {
        k: cfg.k,
        feature_order: cfg.bt_features,
        casing: cfg.casing,
    };
    let per_sentence: Vec<Vec<BackTransCandidate>> = if provider.max_in_flight() > 1 {
        sentences
            .par_iter()
            .map(|s| round_trip(s, provider, config))
            .collect::<Result<_, _>>()
            .map_err(runtime)?
    } else {
        sentences
            .iter()
            .map(|s| round_trip(s, provider, config))
            .collect::<Result<_, _>>()
            .map_err(runtime)?
    };
    let all: Vec<BackTransCandidate> = per_sentence.into_iter().flatten().collect();
    let candidates = all.len();
    let kept = filter_candidates(all, cfg.min_cosine);
    let filtered = kept.len();
    let retained = sample_by_inversion(kept, cfg.min_inversion, cfg.target_fraction, cfg.seed);
    let pairs = retained
        .iter()
        .zip(first_id..)
        .map(|(c, id)| PairRecord::generated(id, &c.source, &c.candidate, Provenance::Backtranslation))
        .collect();
    Ok(BtStage {
        candidates,
        filtered,
        retained,
        pairs,
    })
}

fn bt_counts(run: &mut Run, sentences: usize, stage: &BtStage) {
    run.count("bt_sentences", sentences);
    run.count("bt_candidates", stage.candidates);
    run.count("bt_after_cosine", stage.filtered);
    run.count("bt_pairs", stage.pairs.len());
}

/// Unique sentences of the pairs, first appearance first.
pub fn pair_sentences(pairs: &[PairRecord], casing: Casing) -> Result<Vec<Sentence>, CliError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in pairs {
        let u = p.to_unlabeled(casing)?;
        for s in [u.s1, u.s2] {
            if seen.insert(s.tokens().to_vec()) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

pub enum BtInput {
    Pairs(PathBuf),
    Sentences(PathBuf),
}

pub fn back_translate(cfg: &PipelineConfig, input: &BtInput, provider_spec: &str, out: &Path) -> Result<Counts, CliError> {
    let mut run = Run::new("back-translate", cfg);
    let (sentences, first_id) = match input {
        BtInput::Pairs(path) => {
            run.input(path, "pairs file")?;
            let pairs: Vec<PairRecord> = read_jsonl(path, "pairs file")?;
            let next = pairs.iter().map(|p| p.id).max().map_or(1, |m| m + 1);
            (pair_sentences(&pairs, cfg.casing)?, next)
        }
        BtInput::Sentences(path) => {
            run.input(path, "sentence file")?;
            (read_corpus(path, cfg.casing).map_err(runtime)?, 1)
        }
    };
    let (provider, provider_file) = load_provider(provider_spec, cfg)?;
    if let Some(p) = provider_file {
        run.input(&p, "provider file")?;
    }
    run.parameters.insert("provider".into(), provider_spec.into());
    let stage = run_backtranslation(&sentences, provider.as_ref(), cfg, first_id)?;
    bt_counts(&mut run, sentences.len(), &stage);
    run.outputs.add(out, to_jsonl(&stage.pairs));
    run.finish(manifest_path(out), None)
}

fn labeled_from(path: &Path, run: &mut Run, casing: Casing) -> Result<Vec<LabeledPair>, CliError> {
    run.input(path, "pairs file")?;
    read_jsonl::<PairRecord>(path, "pairs file")?.iter().map(|r| r.to_labeled(casing)).collect()
}

/// Labeled swap pairs (when configured) followed by the balanced set.
fn assemble(swaps: Vec<LabeledPair>, bts: Vec<LabeledPair>, cfg: &PipelineConfig) -> Result<Vec<LabeledPair>, CliError> {
    let balanced = balance_labels(&swaps, &bts).map_err(runtime)?;
    let mut all = if cfg.include_swap_pairs { swaps } else { Vec::new() };
    all.extend(balanced);
    Ok(all)
}

fn label_counts(run: &mut Run, pairs: &[LabeledPair]) {
    run.count("pairs", pairs.len());
    run.count("recombined", pairs.iter().filter(|p| p.provenance == Provenance::Recombined).count());
    run.count(
        "paraphrase",
        pairs.iter().filter(|p| p.label == pairforge_core::corpus::Label::Paraphrase).count(),
    );
}

pub fn balance(cfg: &PipelineConfig, swaps: &Path, bt: &Path, out: &Path) -> Result<Counts, CliError> {
    let mut run = Run::new("balance", cfg);
    let swaps = labeled_from(swaps, &mut run, cfg.casing)?;
    let bts = labeled_from(bt, &mut run, cfg.casing)?;
    let all = assemble(swaps, bts, cfg)?;
    label_counts(&mut run, &all);
    run.outputs.add(out, to_jsonl(&labeled_records(&all)));
    run.finish(manifest_path(out), None)
}

pub fn silver(cfg: &PipelineConfig, inputs: &[PathBuf], out: &Path) -> Result<Counts, CliError> {
    let mut run = Run::new("silver", cfg);
    let mut pairs: Vec<UnlabeledPair> = Vec::new();
    for path in inputs {
        run.input(path, "pairs file")?;
        for r in read_jsonl::<PairRecord>(path, "pairs file")? {
            pairs.push(r.to_unlabeled(cfg.casing)?);
        }
    }
    let (swaps, bts) = silver_inputs(&pairs).map_err(runtime)?;
    let all = assemble(swaps, bts, cfg)?;
    label_counts(&mut run, &all);
    run.outputs.add(out, to_jsonl(&labeled_records(&all)));
    run.finish(manifest_path(out), None)
}

#[derive(Debug, Clone)]
pub struct BuildArgs {
    pub source: Option<TagSource>,
    pub lm: Option<PathBuf>,
    pub provider: Option<String>,
    pub annotations: Option<PathBuf>,
    pub out: PathBuf,
}

/// Generation (or a reviewed annotation store), labels, balancing, masking,
/// splits and emission into `out`.
pub fn build_dataset(cfg: &PipelineConfig, args: &BuildArgs) -> Result<Counts, CliError> {
    let mut run = Run::new("build-dataset", cfg);
    let out = &args.out;
    let mut records: Option<Vec<JudgmentRecord>> = None;
    let (swaps, bts) = if let Some(store) = &args.annotations {
        run.input(store, "annotation store")?;
        let ws = Workspace::open(store, cfg.agreement_min).map_err(|e| runtime(format!("{}: {e}", store.display())))?;
        let export = ws.labeled_pairs(cfg.casing).map_err(runtime)?;
        run.count("judged", export.records.len());
        records = Some(export.records);
        (export.swap_pairs, export.bt_pairs)
    } else {
        let src = args
            .source
            .as_ref()
            .ok_or_else(|| CliError::Config("build-dataset needs --tags, --corpus with --lexicon, or --annotations".into()))?;
        let lm = args.lm.as_ref().ok_or_else(|| CliError::Config("build-dataset needs --lm".into()))?;
        let spec = args
            .provider
            .as_ref()
            .ok_or_else(|| CliError::Config("build-dataset needs --provider".into()))?;
        let model = load_model(lm, &mut run)?;
        let (provider, provider_file) = load_provider(spec, cfg)?;
        if let Some(p) = provider_file {
            run.input(&p, "provider file")?;
        }
        run.parameters.insert("provider".into(), spec.clone());
        let inputs = swap_inputs(src, cfg, &mut run)?;
        let swap_stage = run_swaps(&inputs, &model, cfg, 1)?;
        swap_counts(&mut run, &swap_stage);
        let sentences = pair_sentences(&swap_stage.pairs, cfg.casing)?;
        let next = swap_stage.pairs.len() as u64 + 1;
        let bt_stage = run_backtranslation(&sentences, provider.as_ref(), cfg, next)?;
        bt_counts(&mut run, sentences.len(), &bt_stage);
        run.outputs.add(out.join("swaps.jsonl"), to_jsonl(&swap_stage.pairs));
        run.outputs.add(out.join("backtranslations.jsonl"), to_jsonl(&bt_stage.pairs));
        let generated: Vec<UnlabeledPair> = swap_stage
            .pairs
            .iter()
            .chain(&bt_stage.pairs)
            .map(|r| r.to_unlabeled(cfg.casing))
            .collect::<Result<_, _>>()?;
        silver_inputs(&generated).map_err(runtime)?
    };

    let all = mask_provenance(assemble(swaps, bts, cfg)?, cfg.seed);
    label_counts(&mut run, &all);
    let splits = make_splits(all, cfg.split_fractions(), cfg.seed).map_err(runtime)?;
    for s in &splits {
        run.count(&format!("{}_pairs", s.name.as_str()), s.pairs.len());
        run.outputs.add(out.join(format!("{}.tsv", s.name.as_str())), to_tsv(s));
    }
    run.outputs.add(out.join("metadata.jsonl"), metadata_jsonl(&splits));
    let stats = report_stats(&splits, records.as_deref());
    let mut stats_json = serde_json::to_vec_pretty(&stats).expect("serializable");
    stats_json.push(b'\n');
    run.outputs.add(out.join("stats.json"), stats_json);
    run.finish(out.join("manifest.json"), Some(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub pairs: usize,
    pub accuracy: f64,
    pub pr_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pairs: usize,
    pub positive_fraction: f64,
    pub accuracy: f64,
    pub pr_auc: Option<f64>,
    /// Same classifier on unigram counts only.
    pub unigram_accuracy: f64,
    pub unigram_predicted_paraphrase: usize,
    pub by_provenance: BTreeMap<String, GroupReport>,
}

#[derive(Deserialize)]
struct MetaLine {
    id: u64,
    provenance: Provenance,
}

fn group(scored: &[ScoredPair]) -> Result<GroupReport, CliError> {
    Ok(GroupReport {
        pairs: scored.len(),
        accuracy: accuracy(scored).map_err(runtime)?,
        pr_auc: match pr_auc(scored) {
            Ok(c) => Some(c.auc),
            Err(EvalError::UndefinedAuc) => None,
            Err(e) => return Err(runtime(e)),
        },
    })
}

pub fn evaluate(cfg: &PipelineConfig, pairs: &Path, meta: Option<&Path>, out: &Path) -> Result<Counts, CliError> {
    let mut run = Run::new("evaluate", cfg);
    run.input(pairs, "pairs TSV")?;
    let text = std::fs::read_to_string(pairs).map_err(runtime)?;
    let rows = pairforge_core::corpus::parse_tsv(&text).map_err(|e| runtime(format!("{}: {e}", pairs.display())))?;
    if rows.is_empty() {
        return Err(runtime(format!("{} has no pairs", pairs.display())));
    }
    let mut provenance: BTreeMap<u64, Provenance> = BTreeMap::new();
    if let Some(m) = meta {
        run.input(m, "metadata file")?;
        for line in read_jsonl::<MetaLine>(m, "metadata file")? {
            provenance.insert(line.id, line.provenance);
        }
    }
    let mut scored = Vec::with_capacity(rows.len());
    let mut unigram = Vec::with_capacity(rows.len());
    for r in &rows {
        let id = r.id.to_string();
        scored.push(ScoredPair {
            pair_id: id.clone(),
            score: bow_score(&r.s1, &r.s2).map_err(runtime)?,
            gold: r.label,
        });
        unigram.push(ScoredPair {
            pair_id: id,
            score: score_with(&r.s1, &r.s2, FeatureOrder::Unigram).map_err(runtime)?,
            gold: r.label,
        });
    }
    let overall = group(&scored)?;
    let mut by_provenance = BTreeMap::new();
    let mut buckets: BTreeMap<String, Vec<ScoredPair>> = BTreeMap::new();
    for (r, s) in rows.iter().zip(&scored) {
        if let Some(p) = provenance.get(&r.id) {
            buckets.entry(p.to_string()).or_default().push(s.clone());
        }
    }
    for (k, v) in buckets {
        by_provenance.insert(k, group(&v)?);
    }
    let positives = rows.iter().filter(|r| r.label == pairforge_core::corpus::Label::Paraphrase).count();
    let report = EvalReport {
        pairs: rows.len(),
        positive_fraction: positives as f64 / rows.len() as f64,
        accuracy: overall.accuracy,
        pr_auc: overall.pr_auc,
        unigram_accuracy: accuracy(&unigram).map_err(runtime)?,
        unigram_predicted_paraphrase: unigram.iter().filter(|s| s.score > 0.5).count(),
        by_provenance,
    };
    run.count("pairs", rows.len());
    let mut body = serde_json::to_vec_pretty(&report).expect("serializable");
    body.push(b'\n');
    run.outputs.add(out, body);
    run.finish(manifest_path(out), None)
}

/// Opens (or creates) the store, optionally enqueues pairs, then serves
/// until the process is stopped.
pub fn serve_annotation(
    cfg: &PipelineConfig,
    store: &Path,
    bind: SocketAddr,
    key: Option<String>,
    enqueue: Option<&Path>,
) -> Result<(), CliError> {
    let ws = Workspace::open(store, cfg.agreement_min).map_err(|e| runtime(format!("{}: {e}", store.display())))?;
    if let Some(path) = enqueue {
        let pairs: Vec<PairRecord> = read_jsonl(path, "pairs file")?;
        let mut by_phase: BTreeMap<&'static str, (Phase, Vec<PairInput>)> = BTreeMap::new();
        for p in pairs {
            let provenance = p.provenance.ok_or_else(|| runtime(format!("pair {} has no provenance", p.id)))?;
            let phase = Phase::for_provenance(provenance)
                .ok_or_else(|| runtime(format!("pair {} has {provenance} provenance and cannot be reviewed", p.id)))?;
            let key = if phase == Phase::Correction { "correction" } else { "judgment" };
            by_phase.entry(key).or_insert((phase, Vec::new())).1.push(PairInput {
                id: p.id,
                s1: p.s1,
                s2: p.s2,
                provenance,
            });
        }
        for (_, (phase, pairs)) in by_phase {
            let out = ws
                .enqueue_batch(BatchRequest {
                    batch_id: None,
                    phase,
                    pairs,
                })
                .map_err(runtime)?;
            eprintln!("batch {}: {} new tasks", out.batch_id, out.created);
        }
    }
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    eprintln!("listening on http://{bind}");
    rt.block_on(pairforge_annotation::serve(Arc::new(ws), key, bind)).map_err(runtime)
}
