//! Word n-gram language model with Witten-Bell interpolation.
//!
//! `P(w|h) = (c(h,w) + T(h)·P(w|h')) / (c(h) + T(h))`, where `T(h)` is the
//! number of distinct continuations of `h` and `h'` drops the oldest token.
//! The recursion bottoms out in a uniform distribution over the known word
//! types, `</s>` and `<unk>`. Unseen contexts back off directly.
//!
//! Scores are natural logs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::text::Sentence;

pub const BOS: u32 = 0;
pub const EOS: u32 = 1;
pub const UNK: u32 = 2;
const RESERVED: u32 = 3;

pub const DEFAULT_ORDER: usize = 3;
const FORMAT_MAGIC: &str = "pairforge-ngram";
const FORMAT_VERSION: u32 = 1;
const SMOOTHING_ID: &str = "witten-bell";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ContextStats {
    total: u64,
    followers: HashMap<u32, u64>,
}

impl ContextStats {
    fn distinct(&self) -> u64 {
        self.followers.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    // Keyed by context ids (length 0..order-1), oldest first.
    contexts: HashMap<Vec<u32>, ContextStats>,
}

impl NgramModel {
    pub fn train(corpus: &[Sentence], order: usize) -> Result<Self, LmError> {
        if order == 0 {
            return Err(LmError::InvalidOrder);
        }
        if corpus.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let mut model = NgramModel {
            order,
            vocab: Vec::new(),
            index: HashMap::new(),
            contexts: HashMap::new(),
        };
        for s in corpus {
            let mut padded: Vec<u32> = vec![BOS; order - 1];
            padded.extend(s.tokens().iter().map(|t| model.intern(t)));
            padded.push(EOS);
            for i in (order - 1)..padded.len() {
                let w = padded[i];
                for k in 0..order {
                    let stats = model.contexts.entry(padded[i - k..i].to_vec()).or_default();
                    stats.total += 1;
                    *stats.followers.entry(w).or_insert(0) += 1;
                }
            }
        }
        Ok(model)
    }

    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = RESERVED + self.vocab.len() as u32;
        self.vocab.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of distinct training word types (excluding reserved symbols).
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn token_id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    /// Every id that can be predicted: known words, `</s>` and `<unk>`.
    pub fn outcome_ids(&self) -> impl Iterator<Item = u32> + '_ {
        [EOS, UNK].into_iter().chain((0..self.vocab.len() as u32).map(|i| i + RESERVED))
    }

    pub fn token(&self, id: u32) -> &str {
        match id {
            BOS => "<s>",
            EOS => "</s>",
            UNK => "<unk>",
            _ => &self.vocab[(id - RESERVED) as usize],
        }
    }

    /// Count of `w` after the given context (ids, oldest first).
    pub fn count(&self, context: &[u32], w: u32) -> u64 {
        self.contexts
            .get(context)
            .and_then(|s| s.followers.get(&w))
            .copied()
            .unwrap_or(0)
    }

    /// Total count of the context, i.e. the sum over its continuations.
    pub fn context_count(&self, context: &[u32]) -> u64 {
        self.contexts.get(context).map_or(0, |s| s.total)
    }

    /// Every stored n-gram as (context, word, count).
    pub fn ngrams(&self) -> impl Iterator<Item = (&[u32], u32, u64)> {
        self.contexts
            .iter()
            .flat_map(|(ctx, s)| s.followers.iter().map(move |(&w, &c)| (ctx.as_slice(), w, c)))
    }

    fn floor(&self) -> f64 {
        // known types + EOS, plus UNK
        1.0 / (self.vocab.len() as f64 + 2.0)
    }

    /// `P(w | context)`. Only the last `order - 1` context ids are used.
    pub fn prob(&self, context: &[u32], w: u32) -> f64 {
        let keep = context.len().min(self.order - 1);
        let context = &context[context.len() - keep..];
        let mut p = self.floor();
        for k in 0..=keep {
            let Some(stats) = self.contexts.get(&context[keep - k..]) else {
                break;
            };
            let t = stats.distinct() as f64;
            let c = stats.followers.get(&w).copied().unwrap_or(0) as f64;
            p = (c + t * p) / (stats.total as f64 + t);
        }
        p
    }

    pub fn log_prob(&self, context: &[u32], w: u32) -> f64 {
        self.prob(context, w).ln()
    }

    /// BOS-padded id history for a token prefix.
    pub fn history(&self, prefix: &[String]) -> Vec<u32> {
        let mut h = vec![BOS; self.order - 1];
        h.extend(prefix.iter().map(|t| self.token_id(t)));
        h
    }

    /// Log-probability of `span` following `history` (ids, BOS-padded);
    /// pushes the span's ids onto `history`.
    pub fn extend_history(&self, history: &mut Vec<u32>, span: &[String]) -> f64 {
        let mut total = 0.0;
        for tok in span {
            let id = self.token_id(tok);
            total += self.log_prob(history, id);
            history.push(id);
        }
        total
    }

    pub fn eos_log_prob(&self, history: &[u32]) -> f64 {
        self.log_prob(history, EOS)
    }

    /// Incremental log-probability of `next_span` given `prefix`.
    pub fn score_continuation(&self, prefix: &[String], next_span: &[String]) -> f64 {
        let mut h = self.history(prefix);
        self.extend_history(&mut h, next_span)
    }

    /// Sentence log-likelihood including the `</s>` transition.
    pub fn log_likelihood(&self, s: &Sentence) -> f64 {
        self.log_likelihood_tokens(s.tokens())
    }

    pub fn log_likelihood_tokens(&self, tokens: &[String]) -> f64 {
        let mut h = self.history(&[]);
        let mut total = 0.0;
        for tok in tokens {
            let id = self.token_id(tok);
            total += self.log_prob(&h, id);
            h.push(id);
        }
        total + self.eos_log_prob(&h)
    }

    /// Text serialization. Contexts and continuations are sorted so equal
    /// models serialize to identical bytes.
    ///
    /// ```text
    /// pairforge-ngram 1
    /// order 3
    /// smoothing witten-bell
    /// vocab 4
    /// <one token per line, ids 3.. in order>
    /// contexts 12
    /// <context ids space-separated, or "-"><TAB><id>:<count> ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(out, "order {}", self.order);
        let _ = writeln!(out, "smoothing {SMOOTHING_ID}");
        let _ = writeln!(out, "vocab {}", self.vocab.len());
        for t in &self.vocab {
            out.push_str(t);
            out.push('\n');
        }
        let mut ctxs: Vec<(&Vec<u32>, &ContextStats)> = self.contexts.iter().collect();
        ctxs.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
        let _ = writeln!(out, "contexts {}", ctxs.len());
        for (ctx, stats) in ctxs {
            if ctx.is_empty() {
                out.push('-');
            } else {
                let ids: Vec<String> = ctx.iter().map(u32::to_string).collect();
                out.push_str(&ids.join(" "));
            }
            out.push('\t');
            let mut followers: Vec<(&u32, &u64)> = stats.followers.iter().collect();
            followers.sort();
            let body: Vec<String> = followers.iter().map(|(w, c)| format!("{w}:{c}")).collect();
            out.push_str(&body.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LmError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| LmError::Format {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })
        };
        let bad = |line: usize, message: String| LmError::Format { line, message };

        let (n, header) = next("header")?;
        if header != format!("{FORMAT_MAGIC} {FORMAT_VERSION}") {
            return Err(bad(n, format!("unsupported header {header:?}")));
        }
        let field = |(n, line): (usize, &str), key: &str| -> Result<String, LmError> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(n, format!("expected `{key} ...`")))
        };
        let num = |(n, line): (usize, &str), key: &str| -> Result<usize, LmError> {
            field((n, line), key)?
                .parse()
                .map_err(|_| bad(n, format!("bad {key} value")))
        };
        let order = num(next("order")?, "order")?;
        if order == 0 {
            return Err(LmError::InvalidOrder);
        }
        let smoothing = field(next("smoothing")?, "smoothing")?;
        if smoothing != SMOOTHING_ID {
            return Err(bad(3, format!("unsupported smoothing {smoothing:?}")));
        }
        let vocab_len = num(next("vocab")?, "vocab")?;
        let mut model = NgramModel {
            order,
            vocab: Vec::with_capacity(vocab_len),
            index: HashMap::with_capacity(vocab_len),
            contexts: HashMap::new(),
        };
        for _ in 0..vocab_len {
            let (n, tok) = next("vocab entry")?;
            if model.index.contains_key(tok) {
                return Err(bad(n, format!("duplicate vocab entry {tok:?}")));
            }
            model.intern(tok);
        }
        let max_id = RESERVED + vocab_len as u32;
        let ctx_len = num(next("contexts")?, "contexts")?;
        for _ in 0..ctx_len {
            let (n, line) = next("context")?;
            let (ctx, body) = line.split_once('\t').ok_or_else(|| bad(n, "missing tab".into()))?;
            let parse_id = |s: &str| -> Result<u32, LmError> {
                let id: u32 = s.parse().map_err(|_| bad(n, format!("bad id {s:?}")))?;
                if id >= max_id {
                    return Err(bad(n, format!("id {id} out of range")));
                }
                Ok(id)
            };
            let ctx: Vec<u32> = if ctx == "-" {
                Vec::new()
            } else {
                ctx.split(' ').map(parse_id).collect::<Result<_, _>>()?
            };
            if ctx.len() >= order {
                return Err(bad(n, "context longer than order - 1".into()));
            }
            let mut stats = ContextStats::default();
            for item in body.split(' ').filter(|s| !s.is_empty()) {
                let (w, c) = item.split_once(':').ok_or_else(|| bad(n, format!("bad entry {item:?}")))?;
                let c: u64 = c.parse().map_err(|_| bad(n, format!("bad count {c:?}")))?;
                stats.followers.insert(parse_id(w)?, c);
                stats.total += c;
            }
            model.contexts.insert(ctx, stats);
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
