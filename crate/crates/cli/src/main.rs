use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pairforge_cli::output::CliError;
use pairforge_cli::pipeline::{self, BtInput, BuildArgs, Counts, TagSource};
use pairforge_core::config::PipelineConfig;

/// Paraphrase-pair generation pipeline.
#[derive(Parser)]
#[command(name = "pairforge", version)]
struct Cli {
    /// TOML config; defaults to $PAIRFORGE_CONFIG, then built-in values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Per-run overrides of config values.
#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    beam: Option<usize>,
    /// LM acceptance margin for swaps.
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    ner_threshold: Option<f64>,
    /// Translations per direction.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    min_cosine: Option<f64>,
    #[arg(long, global = true)]
    min_inversion: Option<f64>,
    #[arg(long, global = true)]
    target_fraction: Option<f64>,
    #[arg(long, global = true)]
    agreement_min: Option<usize>,
}

#[derive(Args)]
struct TagArgs {
    /// Pre-tagged corpus.
    #[arg(long, conflicts_with_all = ["corpus", "lexicon"])]
    tags: Option<PathBuf>,
    /// Plain corpus, one sentence per line; needs --lexicon.
    #[arg(long, requires = "lexicon")]
    corpus: Option<PathBuf>,
    /// `word<TAB>POS` lexicon.
    #[arg(long, requires = "corpus")]
    lexicon: Option<PathBuf>,
    /// `phrase<TAB>entity` gazetteer.
    #[arg(long, requires = "lexicon")]
    gazetteer: Option<PathBuf>,
}

impl TagArgs {
    fn source(&self, cfg: &PipelineConfig) -> Option<TagSource> {
        match (&self.tags, &self.corpus, &self.lexicon) {
            (Some(t), _, _) => Some(TagSource::Tagged(t.clone())),
            (None, Some(c), Some(l)) => Some(TagSource::Lexicon {
                corpus: c.clone(),
                lexicon: l.clone(),
                gazetteer: self.gazetteer.clone(),
            }),
            _ => cfg.tags.clone().map(TagSource::Tagged),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a Witten-Bell n-gram model.
    TrainLm {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate word-swap pairs with beam search under the LM.
    GenerateSwaps {
        #[command(flatten)]
        tags: TagArgs,
        #[arg(long)]
        lm: Option<PathBuf>,
        /// Accepted pairs as JSON lines.
        #[arg(long)]
        out: PathBuf,
        /// Every per-sentence outcome, including rejections.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Round-trip translation, cosine filter and inversion sampling.
    BackTranslate {
        /// Pairs whose sentences are translated.
        #[arg(long, conflicts_with = "sentences", required_unless_present = "sentences")]
        pairs: Option<PathBuf>,
        /// Plain sentences, one per line.
        #[arg(long)]
        sentences: Option<PathBuf>,
        /// script:FILE, rules:FILE or exec:COMMAND
        #[arg(long)]
        provider: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recombine labeled swap and back-translation pairs.
    Balance {
        #[arg(long)]
        swaps: PathBuf,
        #[arg(long)]
        bt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label generated pairs by provenance, then balance.
    Silver {
        #[arg(long, required = true, num_args = 1..)]
        pairs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the annotation service.
    ServeAnnotation {
        /// SQLite event store, created if missing.
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Shared key required in x-workspace-key.
        #[arg(long, env = "PAIRFORGE_WORKSPACE_KEY")]
        key: Option<String>,
        /// Pairs to enqueue before serving.
        #[arg(long)]
        enqueue: Option<PathBuf>,
    },
    /// Full pipeline into TSV splits, metadata, stats and a manifest.
    BuildDataset {
        #[command(flatten)]
        tags: TagArgs,
        #[arg(long)]
        lm: Option<PathBuf>,
        #[arg(long)]
        provider: Option<String>,
        /// Use reviewed pairs from an annotation store instead of generating.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score pairs with the BOW baseline.
    Evaluate {
        /// Split TSV.
        #[arg(long)]
        pairs: PathBuf,
        /// metadata.jsonl for per-provenance scores.
        #[arg(long)]
        meta: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::resolve(cli.config.as_deref()).map_err(|e| CliError::Config(e.to_string()))?;
    let o = &cli.overrides;
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = o.$f { cfg.$f = v; })* };
    }
    set!(seed, beam, t, ner_threshold, k, min_cosine, min_inversion, target_fraction, agreement_min);
    if let Command::TrainLm { order: Some(n), .. } = cli.command {
        cfg.lm_order = n;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn need<'a>(v: Option<&'a Path>, what: &str) -> Result<&'a Path, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing {what}")))
}

fn run(cli: Cli) -> Result<Option<Counts>, CliError> {
    let cfg = config(&cli)?;
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let counts = match &cli.command {
        Command::TrainLm { corpus, out, .. } => {
            let corpus = need(corpus.as_deref().or(cfg.corpus.as_deref()), "--corpus")?;
            pipeline::train_lm(&cfg, corpus, out)?
        }
        Command::GenerateSwaps { tags, lm, out, results } => {
            let src = tags
                .source(&cfg)
                .ok_or_else(|| CliError::Config("missing --tags or --corpus with --lexicon".into()))?;
            let lm = need(lm.as_deref().or(cfg.lm.as_deref()), "--lm")?;
            pipeline::generate_swaps(&cfg, &src, lm, out, results.as_deref())?
        }
        Command::BackTranslate {
            pairs,
            sentences,
            provider,
            out,
        } => {
            let input = match (pairs, sentences) {
                (Some(p), _) => BtInput::Pairs(p.clone()),
                (None, Some(s)) => BtInput::Sentences(s.clone()),
                (None, None) => return Err(CliError::Config("missing --pairs or --sentences".into())),
            };
            let spec = provider
                .as_deref()
                .or(cfg.provider.as_deref())
                .ok_or_else(|| CliError::Config("missing --provider".into()))?;
            pipeline::back_translate(&cfg, &input, spec, out)?
        }
        Command::Balance { swaps, bt, out } => pipeline::balance(&cfg, swaps, bt, out)?,
        Command::Silver { pairs, out } => pipeline::silver(&cfg, pairs, out)?,
        Command::ServeAnnotation {
            store,
            bind,
            key,
            enqueue,
        } => {
            pipeline::serve_annotation(&cfg, store, *bind, key.clone(), enqueue.as_deref())?;
            return Ok(None);
        }
        Command::BuildDataset {
            tags,
            lm,
            provider,
            annotations,
            out,
        } => {
            let out = need(out.as_deref().or(cfg.output_dir.as_deref()), "--out")?.to_path_buf();
            let args = BuildArgs {
                source: tags.source(&cfg),
                lm: lm.clone().or_else(|| cfg.lm.clone()),
                provider: provider.clone().or_else(|| cfg.provider.clone()),
                annotations: annotations.clone(),
                out,
            };
            pipeline::build_dataset(&cfg, &args)?
        }
        Command::Evaluate { pairs, meta, out } => pipeline::evaluate(&cfg, pairs, meta.as_deref(), out)?,
    };
    Ok(Some(counts))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(counts) => {
            if let Some(c) = counts {
                let line: Vec<String> = c.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{}", line.join(" "));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
