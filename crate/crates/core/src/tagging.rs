//! Tag templates and candidate sets for word swapping.
//!
//! A tagger assigns every token (or entity phrase) a POS tag and optionally an
//! entity tag with a confidence. Entity tags above the NER threshold replace
//! the POS tag and keep the phrase as a single slot; everything else becomes
//! one slot per token. Slots sharing a tag form a candidate set.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{Casing, Sentence};

pub const DEFAULT_NER_THRESHOLD: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum TagError {
    #[error("malformed tagging: {0}")]
    MalformedTagging(String),
    #[error("no tagging available for sentence {0:?}")]
    Untagged(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown entity tag {0:?}")]
    UnknownEntity(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityTag {
    Person,
    Location,
    Organization,
}

impl EntityTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityTag::Person => "PERSON",
            EntityTag::Location => "LOCATION",
            EntityTag::Organization => "ORGANIZATION",
        }
    }
}

impl fmt::Display for EntityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityTag {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PERSON" | "PER" => Ok(EntityTag::Person),
            "LOCATION" | "LOC" => Ok(EntityTag::Location),
            "ORGANIZATION" | "ORG" => Ok(EntityTag::Organization),
            _ => Err(TagError::UnknownEntity(s.to_string())),
        }
    }
}

/// A token, or an entity phrase, with its tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedToken {
    span: Vec<String>,
    pos_tag: String,
    entity: Option<(EntityTag, f64)>,
}

impl TaggedToken {
    pub fn word(token: impl Into<String>, pos_tag: impl Into<String>) -> Self {
        TaggedToken {
            span: vec![token.into()],
            pos_tag: pos_tag.into(),
            entity: None,
        }
    }

    pub fn entity(
        span: Vec<String>,
        pos_tag: impl Into<String>,
        tag: EntityTag,
        confidence: f64,
    ) -> Result<Self, TagError> {
        if span.is_empty() {
            return Err(TagError::MalformedTagging("empty entity span".into()));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(TagError::MalformedTagging(format!(
                "entity confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(TaggedToken {
            span,
            pos_tag: pos_tag.into(),
            entity: Some((tag, confidence)),
        })
    }

    pub fn span(&self) -> &[String] {
        &self.span
    }

    pub fn pos_tag(&self) -> &str {
        &self.pos_tag
    }

    pub fn entity_tag(&self) -> Option<EntityTag> {
        self.entity.map(|(t, _)| t)
    }

    pub fn entity_confidence(&self) -> Option<f64> {
        self.entity.map(|(_, c)| c)
    }
}

/// One template slot: its effective tag and the source span filling it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub tag: String,
    pub span: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagTemplate {
    slots: Vec<Slot>,
}

impl TagTemplate {
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.tag.as_str())
    }

    /// The source token sequence, recovered by concatenating the spans.
    pub fn source_tokens(&self) -> Vec<String> {
        self.slots.iter().flat_map(|s| s.span.iter().cloned()).collect()
    }

    pub fn entity_slot_count(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.tag.parse::<EntityTag>().is_ok())
            .count()
    }
}

/// Checks that `tagged` tiles `tokens` exactly, in order.
pub fn check_tiling(tokens: &[String], tagged: &[TaggedToken]) -> Result<(), TagError> {
    let mut pos = 0;
    for (i, t) in tagged.iter().enumerate() {
        if t.span.is_empty() {
            return Err(TagError::MalformedTagging(format!("group {i} has an empty span")));
        }
        if t.span.len() > 1 && t.entity.is_none() {
            return Err(TagError::MalformedTagging(format!(
                "group {i} spans {} tokens without an entity tag",
                t.span.len()
            )));
        }
        let end = pos + t.span.len();
        if end > tokens.len() || tokens[pos..end] != t.span[..] {
            return Err(TagError::MalformedTagging(format!(
                "group {i} {:?} does not match tokens at position {pos}",
                t.span.join(" ")
            )));
        }
        pos = end;
    }
    if pos != tokens.len() {
        return Err(TagError::MalformedTagging(format!(
            "tagging covers {pos} of {} tokens",
            tokens.len()
        )));
    }
    Ok(())
}

/// Builds the slot template. An entity tag is promoted when its confidence is
/// strictly above `ner_threshold`; a demoted entity phrase splits into one slot
/// per token carrying the phrase's POS tag.
pub fn build_template(
    sentence: &Sentence,
    tagged: &[TaggedToken],
    ner_threshold: f64,
) -> Result<TagTemplate, TagError> {
    check_tiling(sentence.tokens(), tagged)?;
    let mut slots = Vec::with_capacity(sentence.len());
    for t in tagged {
        match t.entity {
            Some((tag, conf)) if conf > ner_threshold => slots.push(Slot {
                tag: tag.as_str().to_string(),
                span: t.span.clone(),
            }),
            _ => slots.extend(t.span.iter().map(|tok| Slot {
                tag: t.pos_tag.clone(),
                span: vec![tok.clone()],
            })),
        }
    }
    Ok(TagTemplate { slots })
}

/// Spans grouped by effective tag, in source order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CandidateSets {
    by_tag: BTreeMap<String, Vec<Vec<String>>>,
}

impl CandidateSets {
    pub fn get(&self, tag: &str) -> Option<&[Vec<String>]> {
        self.by_tag.get(tag).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Vec<String>])> {
        self.by_tag.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn total(&self) -> usize {
        self.by_tag.values().map(Vec::len).sum()
    }

    /// Candidate sets with at least two distinct spans; only these allow a
    /// filling that differs from the source.
    pub fn permutable_tags(&self) -> usize {
        self.by_tag
            .values()
            .filter(|spans| spans.iter().any(|s| *s != spans[0]))
            .count()
    }
}

pub fn build_candidate_sets(template: &TagTemplate) -> CandidateSets {
    let mut by_tag: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for slot in &template.slots {
        by_tag.entry(slot.tag.clone()).or_default().push(slot.span.clone());
    }
    CandidateSets { by_tag }
}

/// Seam for POS/NER tagging.
pub trait TaggerProvider: Send + Sync {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<TaggedToken>, TagError>;
}

/// Serves taggings read from a pre-tagged file.
///
/// Format: one token group per line, `span<TAB>pos[<TAB>entity<TAB>confidence]`,
/// sentences separated by blank lines. Multi-token spans are space-joined.
#[derive(Debug, Clone, Default)]
pub struct PreTaggedProvider {
    sentences: Vec<Sentence>,
    by_tokens: HashMap<Vec<String>, Vec<TaggedToken>>,
}

impl PreTaggedProvider {
    pub fn from_path(path: &Path, casing: Casing) -> Result<Self, TagError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TagError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, casing)
    }

    pub fn parse(text: &str, casing: Casing) -> Result<Self, TagError> {
        let mut provider = PreTaggedProvider::default();
        let mut current: Vec<TaggedToken> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                provider.finish(&mut current);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parse_err = |message: String| TagError::Parse {
                line: line_no,
                message,
            };
            let span: Vec<String> = fields[0].split_whitespace().map(|t| casing.apply(t)).collect();
            if span.is_empty() {
                return Err(parse_err("empty span".into()));
            }
            let token = match fields.len() {
                2 if span.len() == 1 => TaggedToken::word(span[0].clone(), fields[1]),
                2 => return Err(parse_err("multi-token span needs an entity tag".into())),
                4 => {
                    let tag: EntityTag = fields[2].parse().map_err(|e: TagError| parse_err(e.to_string()))?;
                    let conf: f64 = fields[3]
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(format!("bad confidence {:?}", fields[3])))?;
                    TaggedToken::entity(span, fields[1], tag, conf)
                        .map_err(|e| parse_err(e.to_string()))?
                }
                n => return Err(parse_err(format!("expected 2 or 4 fields, found {n}"))),
            };
            current.push(token);
        }
        provider.finish(&mut current);
        Ok(provider)
    }

    fn finish(&mut self, current: &mut Vec<TaggedToken>) {
        if current.is_empty() {
            return;
        }
        let tokens: Vec<String> = current.iter().flat_map(|t| t.span.iter().cloned()).collect();
        if !self.by_tokens.contains_key(&tokens) {
            if let Ok(s) = Sentence::from_tokens(tokens.clone()) {
                self.sentences.push(s);
            }
        }
        self.by_tokens.insert(tokens, std::mem::take(current));
    }

    /// Sentences in file order.
    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }
}

impl TaggerProvider for PreTaggedProvider {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<TaggedToken>, TagError> {
        self.by_tokens
            .get(sentence.tokens())
            .cloned()
            .ok_or_else(|| TagError::Untagged(sentence.detokenize()))
    }
}

pub const LEXICON_FALLBACK_TAG: &str = "NOUN";
pub const GAZETTEER_CONFIDENCE: f64 = 0.99;
pub const GAZETTEER_POS_TAG: &str = "PROPN";

/// Tags each token with its most frequent lexicon tag (ties broken by tag
/// name, unknown tokens get `NOUN`) and marks gazetteer phrases as entities
/// with fixed confidence 0.99, longest match first.
#[derive(Debug, Clone, Default)]
pub struct LexiconTagger {
    lexicon: HashMap<String, String>,
    gazetteer: HashMap<Vec<String>, EntityTag>,
    max_phrase: usize,
}

impl LexiconTagger {
    /// Lexicon lines: `token<TAB>tag[<TAB>count]`; repeated lines accumulate.
    /// Gazetteer lines: `ENTITY<TAB>phrase`.
    pub fn parse(lexicon: &str, gazetteer: &str, casing: Casing) -> Result<Self, TagError> {
        let mut counts: HashMap<String, BTreeMap<String, u64>> = HashMap::new();
        for (idx, line) in lexicon.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let err = |m: &str| TagError::Parse {
                line: idx + 1,
                message: m.to_string(),
            };
            let (tok, tag, n) = match f.len() {
                2 => (f[0], f[1], 1),
                3 => (f[0], f[1], f[2].trim().parse().map_err(|_| err("bad count"))?),
                _ => return Err(err("expected token<TAB>tag[<TAB>count]")),
            };
            *counts
                .entry(casing.apply(tok.trim()))
                .or_default()
                .entry(tag.trim().to_string())
                .or_insert(0) += n;
        }
        let lexicon = counts
            .into_iter()
            .filter_map(|(tok, tags)| {
                // BTreeMap iteration is by tag name, so max_by_key keeps the
                // last maximum; reverse to keep the first name on ties.
                tags.into_iter()
                    .rev()
                    .max_by_key(|(_, c)| *c)
                    .map(|(tag, _)| (tok, tag))
            })
            .collect();

        let mut gaz = HashMap::new();
        let mut max_phrase = 0;
        for (idx, line) in gazetteer.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, phrase) = line.split_once('\t').ok_or(TagError::Parse {
                line: idx + 1,
                message: "expected ENTITY<TAB>phrase".into(),
            })?;
            let tag: EntityTag = tag.trim().parse()?;
            let phrase: Vec<String> = phrase.split_whitespace().map(|t| casing.apply(t)).collect();
            if phrase.is_empty() {
                continue;
            }
            max_phrase = max_phrase.max(phrase.len());
            gaz.insert(phrase, tag);
        }
        Ok(LexiconTagger {
            lexicon,
            gazetteer: gaz,
            max_phrase,
        })
    }

    pub fn from_paths(lexicon: &Path, gazetteer: Option<&Path>, casing: Casing) -> Result<Self, TagError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| TagError::Io(format!("{}: {e}", p.display())));
        let lex = read(lexicon)?;
        let gaz = match gazetteer {
            Some(p) => read(p)?,
            None => String::new(),
        };
        Self::parse(&lex, &gaz, casing)
    }
}

impl TaggerProvider for LexiconTagger {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<TaggedToken>, TagError> {
        let tokens = sentence.tokens();
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let longest = (1..=self.max_phrase.min(tokens.len() - i))
                .rev()
                .find_map(|n| self.gazetteer.get(&tokens[i..i + n]).map(|tag| (n, *tag)));
            if let Some((n, tag)) = longest {
                out.push(TaggedToken::entity(
                    tokens[i..i + n].to_vec(),
                    GAZETTEER_POS_TAG,
                    tag,
                    GAZETTEER_CONFIDENCE,
                )?);
                i += n;
            } else {
                let tag = self
                    .lexicon
                    .get(&tokens[i])
                    .map(String::as_str)
                    .unwrap_or(LEXICON_FALLBACK_TAG);
                out.push(TaggedToken::word(tokens[i].clone(), tag));
                i += 1;
            }
        }
        Ok(out)
    }
}
