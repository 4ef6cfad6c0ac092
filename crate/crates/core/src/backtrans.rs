//! Round-trip translation candidates and their BOW/inversion filtering.
//!
//! Translation itself sits behind [`TranslationProvider`]. Three providers
//! ship here: a scripted file-backed one for reproducible runs, a rule-based
//! pseudo-pivot for demos (not machine translation), and an adapter for an
//! external process speaking line-delimited JSON.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::align::{sentence_inversion, InversionReport};
use crate::text::{sentence_cosine, tokenize, Casing, FeatureOrder, Sentence};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_MIN_COSINE: f64 = 0.9;
pub const DEFAULT_MIN_INVERSION: f64 = 0.02;
pub const DEFAULT_TARGET_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            _ => Err(format!("unknown direction {s:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum BackTransError {
    #[error("{direction} translation failed (pivot rank {rank:?}): {message}")]
    Provider {
        direction: Direction,
        rank: Option<usize>,
        message: String,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Top-k translation in one direction, best first.
pub trait TranslationProvider: Send + Sync {
    fn translate(&self, s: &Sentence, direction: Direction, k: usize) -> Result<Vec<Sentence>, String>;

    /// Maximum number of concurrent `translate` calls the provider accepts.
    fn max_in_flight(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackTransCandidate {
    pub source: Sentence,
    pub candidate: Sentence,
    pub bow_cosine: f64,
    pub inversion: InversionReport,
    pub forward_rank: usize,
    pub backward_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTripConfig {
    pub k: usize,
    pub feature_order: FeatureOrder,
    pub casing: Casing,
}

impl Default for RoundTripConfig {
    fn default() -> Self {
        RoundTripConfig {
            k: DEFAULT_K,
            feature_order: FeatureOrder::Unigram,
            casing: Casing::Lower,
        }
    }
}

/// One raw hypothesis of the k x k expansion, ranks 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct RawHypothesis {
    pub forward_rank: usize,
    pub backward_rank: usize,
    pub text: Sentence,
}

/// Forward top-k, then backward top-k for every pivot: at most k² hypotheses,
/// before any deduplication.
pub fn expand(
    s: &Sentence,
    provider: &dyn TranslationProvider,
    k: usize,
) -> Result<Vec<RawHypothesis>, BackTransError> {
    if k == 0 {
        return Err(BackTransError::InvalidK);
    }
    let pivots = provider
        .translate(s, Direction::Forward, k)
        .map_err(|message| BackTransError::Provider {
            direction: Direction::Forward,
            rank: None,
            message,
        })?;
    let mut out = Vec::new();
    for (i, pivot) in pivots.iter().take(k).enumerate() {
        let backs = provider
            .translate(pivot, Direction::Backward, k)
            .map_err(|message| BackTransError::Provider {
                direction: Direction::Backward,
                rank: Some(i + 1),
                message,
            })?;
        out.extend(backs.into_iter().take(k).enumerate().map(|(j, text)| RawHypothesis {
            forward_rank: i + 1,
            backward_rank: j + 1,
            text,
        }));
    }
    Ok(out)
}

/// Collapses whitespace-normalized duplicates, keeping the first occurrence in
/// (forward rank, backward rank) order, and drops copies of the source.
pub fn dedup_hypotheses(source: &Sentence, raw: Vec<RawHypothesis>, casing: Casing) -> Vec<RawHypothesis> {
    let key = |s: &Sentence| {
        s.tokens()
            .iter()
            .map(|t| casing.apply(t))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut raw = raw;
    raw.sort_by_key(|h| (h.forward_rank, h.backward_rank));
    let mut seen = HashSet::from([key(source)]);
    raw.into_iter().filter(|h| seen.insert(key(&h.text))).collect()
}

pub fn round_trip(
    s: &Sentence,
    provider: &dyn TranslationProvider,
    config: RoundTripConfig,
) -> Result<Vec<BackTransCandidate>, BackTransError> {
    let raw = expand(s, provider, config.k)?;
    Ok(dedup_hypotheses(s, raw, config.casing)
        .into_iter()
        .map(|h| BackTransCandidate {
            bow_cosine: sentence_cosine(&lowered(s, config.casing), &lowered(&h.text, config.casing), config.feature_order),
            inversion: sentence_inversion(s, &h.text, config.casing),
            source: s.clone(),
            candidate: h.text,
            forward_rank: h.forward_rank,
            backward_rank: h.backward_rank,
        })
        .collect())
}

fn lowered(s: &Sentence, casing: Casing) -> Sentence {
    match casing {
        Casing::Preserve => s.clone(),
        Casing::Lower => Sentence::from_tokens(s.tokens().iter().map(|t| t.to_lowercase())).expect("non-empty"),
    }
}

/// Keeps candidates with `bow_cosine >= min_cosine`, in order.
pub fn filter_candidates(cands: Vec<BackTransCandidate>, min_cosine: f64) -> Vec<BackTransCandidate> {
    cands.into_iter().filter(|c| c.bow_cosine >= min_cosine).collect()
}

/// Subsamples low-inversion candidates so that at least `target_fraction` of
/// the output has inversion rate above `min_rate`. All high-inversion
/// candidates are kept; with none of them the output is empty.
pub fn sample_by_inversion(
    cands: Vec<BackTransCandidate>,
    min_rate: f64,
    target_fraction: f64,
    seed: u64,
) -> Vec<BackTransCandidate> {
    let high = cands.iter().filter(|c| c.inversion.rate > min_rate).count();
    let total = cands.len();
    if total == 0 || target_fraction <= 0.0 || high as f64 >= target_fraction * total as f64 {
        return cands;
    }
    if high == 0 {
        return Vec::new();
    }
    let low_total = total - high;
    let mut allowed = ((high as f64) * (1.0 - target_fraction) / target_fraction).floor() as usize;
    allowed = allowed.min(low_total);
    while allowed > 0 && (high as f64) < target_fraction * (high + allowed) as f64 {
        allowed -= 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: HashSet<usize> = sample(&mut rng, low_total, allowed).into_iter().collect();
    let mut low_idx = 0;
    cands
        .into_iter()
        .filter(|c| {
            if c.inversion.rate > min_rate {
                return true;
            }
            let keep = picked.contains(&low_idx);
            low_idx += 1;
            keep
        })
        .collect()
}

fn normalized_key(text: &str, casing: Casing) -> Option<String> {
    tokenize(text, casing).ok().map(|s| s.detokenize())
}

/// File-backed provider. Lines are
/// `direction<TAB>source_sentence<TAB>rank<TAB>hypothesis`; sources match
/// after tokenization under the provider's casing.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    casing: Casing,
    table: HashMap<(Direction, String), Vec<(usize, Sentence)>>,
}

impl ScriptedProvider {
    pub fn parse(text: &str, casing: Casing) -> Result<Self, BackTransError> {
        let mut table: HashMap<(Direction, String), Vec<(usize, Sentence)>> = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| BackTransError::Parse { line: idx + 1, message };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 tab-separated fields, found {}", f.len())));
            }
            let direction: Direction = f[0].trim().parse().map_err(err)?;
            let source = normalized_key(f[1], casing).ok_or_else(|| err("empty source".into()))?;
            let rank: usize = f[2].trim().parse().map_err(|_| err(format!("bad rank {:?}", f[2])))?;
            if rank == 0 {
                return Err(err("ranks start at 1".into()));
            }
            let hyp = tokenize(f[3], casing).map_err(|e| err(e.to_string()))?;
            table.entry((direction, source)).or_default().push((rank, hyp));
        }
        for v in table.values_mut() {
            v.sort_by_key(|(r, _)| *r);
        }
        Ok(ScriptedProvider { casing, table })
    }

    pub fn from_path(path: &Path, casing: Casing) -> Result<Self, BackTransError> {
        Self::parse(&std::fs::read_to_string(path)?, casing)
    }
}

impl TranslationProvider for ScriptedProvider {
    fn translate(&self, s: &Sentence, direction: Direction, k: usize) -> Result<Vec<Sentence>, String> {
        let key = s.tokens().iter().map(|t| self.casing.apply(t)).collect::<Vec<_>>().join(" ");
        Ok(self
            .table
            .get(&(direction, key))
            .map(|v| v.iter().take(k).map(|(_, s)| s.clone()).collect())
            .unwrap_or_default())
    }

    fn max_in_flight(&self) -> usize {
        usize::MAX
    }
}

/// Rule-based stand-in for a pivot round trip. It is not a translation
/// system: the "pivot" is the sentence itself with seeded synonym
/// substitutions, and the way back applies more substitutions plus
/// phrase-fronting reorderings.
///
/// Rules file lines:
/// - `synonym<TAB>word<TAB>replacement`
/// - `front<TAB>marker`: move the last phrase starting at `marker` (up to the
///   final punctuation) to the front of the sentence, followed by a comma.
#[derive(Debug, Clone, Default)]
pub struct PseudoPivotProvider {
    synonyms: HashMap<String, Vec<String>>,
    fronting: Vec<String>,
    seed: u64,
}

impl PseudoPivotProvider {
    pub fn parse(text: &str, seed: u64) -> Result<Self, BackTransError> {
        let mut p = PseudoPivotProvider {
            seed,
            ..Default::default()
        };
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            match f.as_slice() {
                ["synonym", from, to] => p.synonyms.entry(from.to_lowercase()).or_default().push(to.to_lowercase()),
                ["front", marker] => p.fronting.push(marker.to_lowercase()),
                _ => {
                    return Err(BackTransError::Parse {
                        line: idx + 1,
                        message: format!("unrecognized rule {line:?}"),
                    })
                }
            }
        }
        Ok(p)
    }

    pub fn from_path(path: &Path, seed: u64) -> Result<Self, BackTransError> {
        Self::parse(&std::fs::read_to_string(path)?, seed)
    }

    fn rng_for(&self, s: &Sentence, direction: Direction, rank: usize) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(direction.to_string().as_bytes());
        h.update((rank as u64).to_le_bytes());
        h.update(s.detokenize().as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest[..32]);
        ChaCha8Rng::from_seed(seed)
    }

    fn substitute(&self, tokens: &mut [String], rng: &mut ChaCha8Rng) {
        for tok in tokens.iter_mut() {
            if let Some(options) = self.synonyms.get(&tok.to_lowercase()) {
                if rng.random_bool(0.5) {
                    *tok = options[rng.random_range(0..options.len())].clone();
                }
            }
        }
    }

    fn front(&self, tokens: &[String]) -> Option<Vec<String>> {
        let end = tokens
            .iter()
            .rposition(|t| t.chars().any(char::is_alphanumeric))
            .map(|i| i + 1)?;
        let start = (1..end).rev().find(|&i| self.fronting.contains(&tokens[i].to_lowercase()))?;
        let mut out: Vec<String> = tokens[start..end].to_vec();
        out.push(",".into());
        out.extend(tokens[..start].iter().cloned());
        out.extend(tokens[end..].iter().cloned());
        Some(out)
    }
}

impl TranslationProvider for PseudoPivotProvider {
    fn translate(&self, s: &Sentence, direction: Direction, k: usize) -> Result<Vec<Sentence>, String> {
        let mut out = Vec::with_capacity(k);
        for rank in 1..=k {
            let mut tokens = s.tokens().to_vec();
            let mut rng = self.rng_for(s, direction, rank);
            match direction {
                Direction::Forward => {
                    if rank > 1 {
                        self.substitute(&mut tokens, &mut rng);
                    }
                }
                Direction::Backward => {
                    if rank % 2 == 0 {
                        if let Some(f) = self.front(&tokens) {
                            tokens = f;
                        }
                    }
                    if rank > 2 {
                        self.substitute(&mut tokens, &mut rng);
                    }
                }
            }
            out.push(Sentence::from_tokens(tokens).map_err(|e| e.to_string())?);
        }
        Ok(out)
    }

    fn max_in_flight(&self) -> usize {
        usize::MAX
    }
}

#[derive(Debug, Serialize)]
struct ExternalRequest<'a> {
    id: u64,
    text: &'a str,
    direction: Direction,
    k: usize,
}

#[derive(Debug, Deserialize)]
struct ExternalResponse {
    id: u64,
    hypotheses: Vec<String>,
}

struct ExternalProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl ExternalProcess {
    fn spawn(program: &str, args: &[String]) -> std::io::Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalProcess { child, stdin, lines: rx })
    }
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Talks to a subprocess over stdin/stdout, one JSON object per line:
/// requests `{id, text, direction, k}`, responses `{id, hypotheses: [...]}`.
/// A timed-out or failed request restarts the process and retries.
pub struct ExternalProvider {
    program: String,
    args: Vec<String>,
    casing: Casing,
    timeout: Duration,
    retries: usize,
    state: Mutex<(u64, Option<ExternalProcess>)>,
}

impl ExternalProvider {
    pub fn new(program: impl Into<String>, args: Vec<String>, casing: Casing, timeout: Duration, retries: usize) -> Self {
        ExternalProvider {
            program: program.into(),
            args,
            casing,
            timeout,
            retries,
            state: Mutex::new((0, None)),
        }
    }

    fn attempt(&self, proc_: &mut ExternalProcess, id: u64, text: &str, direction: Direction, k: usize) -> Result<Vec<String>, String> {
        let req = serde_json::to_string(&ExternalRequest { id, text, direction, k }).map_err(|e| e.to_string())?;
        writeln!(proc_.stdin, "{req}").and_then(|_| proc_.stdin.flush()).map_err(|e| format!("write failed: {e}"))?;
        loop {
            let line = match proc_.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(format!("read failed: {e}")),
                Err(RecvTimeoutError::Timeout) => return Err(format!("timed out after {:?}", self.timeout)),
                Err(RecvTimeoutError::Disconnected) => return Err("provider process exited".into()),
            };
            let resp: ExternalResponse = serde_json::from_str(&line).map_err(|e| format!("bad response {line:?}: {e}"))?;
            // stale answers from an earlier timed-out request are skipped
            if resp.id == id {
                return Ok(resp.hypotheses);
            }
        }
    }
}

impl TranslationProvider for ExternalProvider {
    fn translate(&self, s: &Sentence, direction: Direction, k: usize) -> Result<Vec<Sentence>, String> {
        let mut state = self.state.lock().map_err(|_| "provider lock poisoned".to_string())?;
        let text = s.detokenize();
        let mut last_err = String::new();
        for _ in 0..=self.retries {
            state.0 += 1;
            let id = state.0;
            if state.1.is_none() {
                state.1 = Some(ExternalProcess::spawn(&self.program, &self.args).map_err(|e| format!("cannot start {:?}: {e}", self.program))?);
            }
            match self.attempt(state.1.as_mut().expect("spawned"), id, &text, direction, k) {
                Ok(hyps) => {
                    return Ok(hyps
                        .iter()
                        .take(k)
                        .filter_map(|h| tokenize(h, self.casing).ok())
                        .collect())
                }
                Err(e) => {
                    last_err = e;
                    state.1 = None;
                }
            }
        }
        Err(last_err)
    }
}
