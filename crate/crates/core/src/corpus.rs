//! Labeled pairs, label balancing by recombination, silver labels, splits and
//! TSV emission.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::judgment::{corpus_agreement, JudgmentRecord};
use crate::text::Sentence;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid label {0:?}")]
    InvalidLabel(String),
    #[error("pair {0} has no provenance")]
    MissingProvenance(u64),
    #[error("pair {id}: expected {expected} provenance, found {found}")]
    WrongProvenance {
        id: u64,
        expected: Provenance,
        found: Provenance,
    },
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    InvalidFractions([f64; 3]),
    #[error("{groups} source groups cannot fill {splits} non-empty splits")]
    InsufficientData { groups: usize, splits: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Paraphrase,
    NonParaphrase,
}

impl Label {
    pub fn as_int(self) -> u8 {
        match self {
            Label::Paraphrase => 1,
            Label::NonParaphrase => 0,
        }
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" | "P" | "Y" | "paraphrase" => Ok(Label::Paraphrase),
            "0" | "N" | "non_paraphrase" => Ok(Label::NonParaphrase),
            other => Err(CorpusError::InvalidLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Human,
    Silver,
    Recombined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Swap,
    Backtranslation,
    Recombined,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Swap => "swap",
            Provenance::Backtranslation => "backtranslation",
            Provenance::Recombined => "recombined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub id: u64,
    pub s1: Sentence,
    pub s2: Sentence,
    pub label: Label,
    pub label_source: LabelSource,
    pub provenance: Provenance,
    #[serde(default)]
    pub lineage: Vec<u64>,
}

impl LabeledPair {
    pub fn is_identical(&self) -> bool {
        self.s1.tokens() == self.s2.tokens()
    }
}

/// Label of a pair derived by chaining two labeled pairs through a shared
/// sentence: paraphrase if both are, non-paraphrase if exactly one is not,
/// unknown (None) if neither is.
pub fn recombine(a: Label, b: Label) -> Option<Label> {
    match (a, b) {
        (Label::Paraphrase, Label::Paraphrase) => Some(Label::Paraphrase),
        (Label::NonParaphrase, Label::NonParaphrase) => None,
        _ => Some(Label::NonParaphrase),
    }
}

fn key(s: &Sentence) -> &[String] {
    s.tokens()
}

/// Output holds every back-translation pair, then recombined pairs.
///
/// For a swap pair `(s1, s2)` and back translations `(s1, s1')` and
/// `(s2, s2')` it derives `(s2, s1')`, `(s2', s1)` and, chained through
/// `(s2, s1')`, the pair `(s2', s1')`. New ids continue after the largest
/// input id.
pub fn balance_labels(swap_pairs: &[LabeledPair], bt_pairs: &[LabeledPair]) -> Result<Vec<LabeledPair>, CorpusError> {
    for p in swap_pairs {
        if p.provenance != Provenance::Swap {
            return Err(CorpusError::WrongProvenance {
                id: p.id,
                expected: Provenance::Swap,
                found: p.provenance,
            });
        }
    }
    for p in bt_pairs {
        if p.provenance != Provenance::Backtranslation {
            return Err(CorpusError::WrongProvenance {
                id: p.id,
                expected: Provenance::Backtranslation,
                found: p.provenance,
            });
        }
    }
    let mut by_source: HashMap<&[String], Vec<&LabeledPair>> = HashMap::new();
    for b in bt_pairs {
        by_source.entry(key(&b.s1)).or_default().push(b);
    }
    let mut next_id = swap_pairs.iter().chain(bt_pairs).map(|p| p.id).max().map_or(1, |m| m + 1);
    let mut out: Vec<LabeledPair> = bt_pairs.to_vec();
    let none: Vec<&LabeledPair> = Vec::new();

    let mut emit = |s1: &Sentence, s2: &Sentence, label: Label, parents: [&LabeledPair; 2], out: &mut Vec<LabeledPair>| {
        let silver = parents.iter().any(|p| p.label_source == LabelSource::Silver);
        let pair = LabeledPair {
            id: next_id,
            s1: s1.clone(),
            s2: s2.clone(),
            label,
            label_source: if silver { LabelSource::Silver } else { LabelSource::Recombined },
            provenance: Provenance::Recombined,
            lineage: vec![parents[0].id, parents[1].id],
        };
        next_id += 1;
        out.push(pair);
        out.len() - 1
    };

    for sw in swap_pairs {
        let first = by_source.get(key(&sw.s1)).unwrap_or(&none);
        let second = by_source.get(key(&sw.s2)).unwrap_or(&none);
        let mut via_first: Vec<usize> = Vec::new();
        for b1 in first {
            if let Some(label) = recombine(sw.label, b1.label) {
                via_first.push(emit(&sw.s2, &b1.s2, label, [sw, b1], &mut out));
            }
        }
        for b2 in second {
            if let Some(label) = recombine(sw.label, b2.label) {
                emit(&b2.s2, &sw.s1, label, [sw, b2], &mut out);
            }
        }
        for &r in &via_first {
            for b2 in second {
                let mid = out[r].clone();
                if let Some(label) = recombine(mid.label, b2.label) {
                    emit(&b2.s2, &mid.s2, label, [&mid, b2], &mut out);
                }
            }
        }
    }
    Ok(out)
}

/// A generated pair awaiting labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnlabeledPair {
    pub id: u64,
    pub s1: Sentence,
    pub s2: Sentence,
    pub provenance: Option<Provenance>,
}

/// Labels by provenance (swap: non-paraphrase, back translation: paraphrase),
/// then balances exactly like human-labeled data.
pub fn silver_label(pairs: &[UnlabeledPair]) -> Result<Vec<LabeledPair>, CorpusError> {
    let (swaps, bts) = silver_inputs(pairs)?;
    balance_labels(&swaps, &bts)
}

/// The silver-labeled swap and back-translation pairs, before balancing.
pub fn silver_inputs(pairs: &[UnlabeledPair]) -> Result<(Vec<LabeledPair>, Vec<LabeledPair>), CorpusError> {
    let mut swaps = Vec::new();
    let mut bts = Vec::new();
    for p in pairs {
        let provenance = p.provenance.ok_or(CorpusError::MissingProvenance(p.id))?;
        let (label, bucket) = match provenance {
            Provenance::Swap => (Label::NonParaphrase, &mut swaps),
            Provenance::Backtranslation => (Label::Paraphrase, &mut bts),
            Provenance::Recombined => {
                return Err(CorpusError::WrongProvenance {
                    id: p.id,
                    expected: Provenance::Swap,
                    found: provenance,
                })
            }
        };
        bucket.push(LabeledPair {
            id: p.id,
            s1: p.s1.clone(),
            s2: p.s2.clone(),
            label,
            label_source: LabelSource::Silver,
            provenance,
            lineage: Vec::new(),
        });
    }
    Ok((swaps, bts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Dev, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub pairs: Vec<LabeledPair>,
}

impl DatasetSplit {
    pub fn positive_fraction(&self) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        self.pairs.iter().filter(|p| p.label == Label::Paraphrase).count() as f64 / self.pairs.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    fn as_array(&self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let a = self.as_array();
        if a.iter().any(|f| !f.is_finite() || *f < 0.0) || (a.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidFractions(a));
        }
        Ok(())
    }
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Splits pairs so that no sentence string occurs in two splits.
///
/// Pairs sharing any sentence form one group; groups are shuffled with `seed`
/// and dealt to dev, then test, until each reaches its share of pairs, the
/// rest going to train. Pairs with identical sentences are then dropped from
/// dev and test. Only splits with a positive fraction are returned, in
/// train/dev/test order, pairs sorted by id.
pub fn make_splits(pairs: Vec<LabeledPair>, fractions: SplitFractions, seed: u64) -> Result<Vec<DatasetSplit>, CorpusError> {
    fractions.validate()?;
    let mut ids: HashMap<&[String], usize> = HashMap::new();
    for p in &pairs {
        for s in [&p.s1, &p.s2] {
            let n = ids.len();
            ids.entry(key(s)).or_insert(n);
        }
    }
    let mut sets = DisjointSets((0..ids.len()).collect());
    for p in &pairs {
        sets.union(ids[key(&p.s1)], ids[key(&p.s2)]);
    }
    let roots: Vec<usize> = pairs.iter().map(|p| sets.find(ids[key(&p.s1)])).collect();
    drop(ids);

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut group_key: HashMap<usize, u64> = HashMap::new();
    let mut order: Vec<(usize, usize)> = roots.iter().copied().enumerate().collect();
    order.sort_by_key(|&(i, _)| pairs[i].id);
    for (i, root) in order {
        let k = *group_key.entry(root).or_insert(pairs[i].id);
        groups.entry(k).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();

    let active: Vec<SplitName> = SplitName::ALL
        .into_iter()
        .zip(fractions.as_array())
        .filter(|(_, f)| *f > 0.0)
        .map(|(n, _)| n)
        .collect();
    if groups.len() < active.len() {
        return Err(CorpusError::InsufficientData {
            groups: groups.len(),
            splits: active.len(),
        });
    }
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n = pairs.len() as f64;
    let target = |f: f64| if f > 0.0 { ((f * n).round() as usize).max(1) } else { 0 };
    let (dev_target, test_target) = (target(fractions.dev), target(fractions.test));
    let mut assigned: Vec<SplitName> = vec![SplitName::Train; pairs.len()];
    let (mut dev_n, mut test_n) = (0, 0);
    let remaining_for_train = |idx: usize| groups.len() - idx - 1;
    for (gi, g) in groups.iter().enumerate() {
        // keep at least one group for train when it is requested
        let train_needs = fractions.train > 0.0 && remaining_for_train(gi) == 0 && !assigned_any_train(&assigned, &groups[..gi]);
        let split = if train_needs {
            SplitName::Train
        } else if dev_n < dev_target {
            dev_n += g.len();
            SplitName::Dev
        } else if test_n < test_target {
            test_n += g.len();
            SplitName::Test
        } else {
            SplitName::Train
        };
        for &i in g {
            assigned[i] = split;
        }
    }

    let mut buckets: BTreeMap<SplitName, Vec<LabeledPair>> = active.iter().map(|n| (*n, Vec::new())).collect();
    for (p, split) in pairs.into_iter().zip(assigned) {
        if split != SplitName::Train && p.is_identical() {
            continue;
        }
        buckets.entry(split).or_default().push(p);
    }
    let mut out = Vec::new();
    for name in active {
        let mut pairs = buckets.remove(&name).unwrap_or_default();
        if pairs.is_empty() {
            return Err(CorpusError::InsufficientData {
                groups: groups.len(),
                splits: out.len() + 1,
            });
        }
        pairs.sort_by_key(|p| p.id);
        out.push(DatasetSplit { name, pairs });
    }
    Ok(out)
}

fn assigned_any_train(assigned: &[SplitName], groups: &[Vec<usize>]) -> bool {
    groups.iter().any(|g| assigned[g[0]] == SplitName::Train)
}

pub const TSV_HEADER: &str = "id\tsentence1\tsentence2\tlabel";

pub fn to_tsv(split: &DatasetSplit) -> String {
    let mut out = String::with_capacity(64 * (split.pairs.len() + 1));
    out.push_str(TSV_HEADER);
    out.push('\n');
    for p in &split.pairs {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", p.id, p.s1.detokenize(), p.s2.detokenize(), p.label.as_int()));
    }
    out
}

pub fn emit_tsv(split: &DatasetSplit, path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, to_tsv(split))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsvRow {
    pub id: u64,
    pub s1: Sentence,
    pub s2: Sentence,
    pub label: Label,
}

impl From<&LabeledPair> for TsvRow {
    fn from(p: &LabeledPair) -> Self {
        TsvRow {
            id: p.id,
            s1: p.s1.clone(),
            s2: p.s2.clone(),
            label: p.label,
        }
    }
}

/// Parses a TSV written by [`to_tsv`]. Sentence fields split on single spaces.
pub fn parse_tsv(text: &str) -> Result<Vec<TsvRow>, CorpusError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TSV_HEADER => {}
        _ => {
            return Err(CorpusError::Parse {
                line: 1,
                message: format!("expected header {TSV_HEADER:?}"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let err = |message: String| CorpusError::Parse { line: i + 1, message };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", f.len())));
            }
            let sentence = |s: &str| Sentence::from_tokens(s.split(' ')).map_err(|e| err(e.to_string()));
            Ok(TsvRow {
                id: f[0].parse().map_err(|_| err(format!("bad id {:?}", f[0])))?,
                s1: sentence(f[1])?,
                s2: sentence(f[2])?,
                label: f[3].parse()?,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct MetadataLine<'a> {
    id: u64,
    split: SplitName,
    label_source: LabelSource,
    provenance: Provenance,
    lineage: &'a [u64],
}

/// Sidecar metadata, one JSON object per pair.
pub fn metadata_jsonl(splits: &[DatasetSplit]) -> String {
    let mut out = String::new();
    for split in splits {
        for p in &split.pairs {
            let line = MetadataLine {
                id: p.id,
                split: split.name,
                label_source: p.label_source,
                provenance: p.provenance,
                lineage: &p.lineage,
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
    }
    out
}

pub fn write_metadata(splits: &[DatasetSplit], path: &Path) -> Result<(), CorpusError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(metadata_jsonl(splits).as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub name: SplitName,
    pub total: usize,
    pub paraphrase: usize,
    pub non_paraphrase: usize,
    pub positive_fraction: f64,
    /// Positive fraction as a percentage, one decimal.
    pub yes_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub splits: Vec<SplitStats>,
    pub total: usize,
    pub positive_fraction: f64,
    pub by_provenance: BTreeMap<String, usize>,
    pub mean_agreement: Option<f64>,
    pub mean_agreement_kept: Option<f64>,
}

fn yes_percent(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    (1000.0 * pos as f64 / total as f64).round() / 10.0
}

pub fn report_stats(splits: &[DatasetSplit], judgments: Option<&[JudgmentRecord]>) -> DatasetStats {
    let mut by_provenance = BTreeMap::new();
    let mut all_pos = 0;
    let mut all = 0;
    let stats = splits
        .iter()
        .map(|s| {
            let pos = s.pairs.iter().filter(|p| p.label == Label::Paraphrase).count();
            for p in &s.pairs {
                *by_provenance.entry(p.provenance.to_string()).or_insert(0) += 1;
            }
            all_pos += pos;
            all += s.pairs.len();
            SplitStats {
                name: s.name,
                total: s.pairs.len(),
                paraphrase: pos,
                non_paraphrase: s.pairs.len() - pos,
                positive_fraction: s.positive_fraction(),
                yes_percent: yes_percent(pos, s.pairs.len()),
            }
        })
        .collect();
    DatasetStats {
        splits: stats,
        total: all,
        positive_fraction: if all == 0 { 0.0 } else { all_pos as f64 / all as f64 },
        by_provenance,
        mean_agreement: judgments.and_then(|j| corpus_agreement(j, false).ok()),
        mean_agreement_kept: judgments.and_then(|j| corpus_agreement(j, true).ok()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use crate::text::Casing;
    use proptest::prelude::*;

    fn sent(t: &str) -> Sentence {
        tokenize(t, Casing::Lower).unwrap()
    }

    fn pair(id: u64, a: &str, b: &str, label: Label, provenance: Provenance) -> LabeledPair {
        LabeledPair {
            id,
            s1: sent(a),
            s2: sent(b),
            label,
            label_source: LabelSource::Human,
            provenance,
            lineage: Vec::new(),
        }
    }

    use Label::{NonParaphrase as N, Paraphrase as P};

    #[test]
    fn truth_table() {
        for (a, b, expected) in [(P, P, Some(P)), (P, N, Some(N)), (N, P, Some(N)), (N, N, None)] {
            let swaps = [pair(1, "s one", "one s", a, Provenance::Swap)];
            let bts = [pair(2, "s one", "s first", b, Provenance::Backtranslation)];
            let out = balance_labels(&swaps, &bts).unwrap();
            assert_eq!(out[0], bts[0]);
            let rec: Vec<&LabeledPair> = out.iter().filter(|p| p.provenance == Provenance::Recombined).collect();
            match expected {
                Some(l) => {
                    assert_eq!(rec.len(), 1);
                    assert_eq!(rec[0].label, l);
                    assert_eq!(rec[0].s1, sent("one s"));
                    assert_eq!(rec[0].s2, sent("s first"));
                    assert_eq!(rec[0].lineage, vec![1, 2]);
                    assert_eq!(rec[0].id, 3);
                    assert_eq!(rec[0].label_source, LabelSource::Recombined);
                }
                None => assert!(rec.is_empty()),
            }
        }
    }

    #[test]
    fn second_side_and_chained_pairs() {
        let swaps = [pair(1, "a b", "b a", P, Provenance::Swap)];
        let bts = [
            pair(2, "a b", "a then b", P, Provenance::Backtranslation),
            pair(3, "b a", "b then a", N, Provenance::Backtranslation),
        ];
        let out = balance_labels(&swaps, &bts).unwrap();
        let rec: Vec<(String, String, Label, Vec<u64>)> = out[2..]
            .iter()
            .map(|p| (p.s1.detokenize(), p.s2.detokenize(), p.label, p.lineage.clone()))
            .collect();
        assert_eq!(
            rec,
            vec![
                ("b a".into(), "a then b".into(), P, vec![1, 2]),
                ("b then a".into(), "a b".into(), N, vec![1, 3]),
                ("b then a".into(), "a then b".into(), N, vec![4, 3]),
            ]
        );
    }

    #[test]
    fn provenance_checked() {
        let swaps = [pair(1, "a", "b", P, Provenance::Backtranslation)];
        assert!(matches!(balance_labels(&swaps, &[]), Err(CorpusError::WrongProvenance { .. })));
        assert!(matches!("maybe".parse::<Label>(), Err(CorpusError::InvalidLabel(_))));
    }

    #[test]
    fn silver_labels() {
        let pairs = [
            UnlabeledPair { id: 1, s1: sent("x y"), s2: sent("y x"), provenance: Some(Provenance::Swap) },
            UnlabeledPair { id: 2, s1: sent("x y"), s2: sent("x then y"), provenance: Some(Provenance::Backtranslation) },
        ];
        let (swaps, bts) = silver_inputs(&pairs).unwrap();
        assert_eq!(swaps[0].label, N);
        assert_eq!(bts[0].label, P);
        let out = silver_label(&pairs).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].label, N);
        assert_eq!(out[1].label_source, LabelSource::Silver);

        let missing = [UnlabeledPair { id: 9, s1: sent("a"), s2: sent("b"), provenance: None }];
        assert!(matches!(silver_label(&missing), Err(CorpusError::MissingProvenance(9))));
    }

    fn pool(groups: usize) -> Vec<LabeledPair> {
        let mut out = Vec::new();
        for g in 0..groups {
            let a = format!("src{g} x y");
            out.push(pair(out.len() as u64 + 1, &a, &format!("y src{g} x"), N, Provenance::Swap));
            out.push(pair(out.len() as u64 + 1, &a, &a, P, Provenance::Swap));
            out.push(pair(out.len() as u64 + 1, &a, &format!("src{g} then x y"), P, Provenance::Backtranslation));
        }
        out
    }

    #[test]
    fn splits_respect_invariants() {
        let pairs = pool(100);
        let f = SplitFractions::default();
        let splits = make_splits(pairs.clone(), f, 5).unwrap();
        assert_eq!(splits.iter().map(|s| s.name).collect::<Vec<_>>(), SplitName::ALL);
        let mut seen: HashMap<Vec<String>, SplitName> = HashMap::new();
        for s in &splits {
            for p in &s.pairs {
                for sent in [&p.s1, &p.s2] {
                    let prev = seen.insert(sent.tokens().to_vec(), s.name);
                    assert!(prev.is_none() || prev == Some(s.name));
                }
                if s.name != SplitName::Train {
                    assert!(!p.is_identical());
                }
            }
        }
        let identical_in_train = splits[0].pairs.iter().filter(|p| p.is_identical()).count();
        assert!(identical_in_train > 0);
        let total: usize = splits.iter().map(|s| s.pairs.len()).sum();
        let removed = pairs.iter().filter(|p| p.is_identical()).count() - identical_in_train;
        assert_eq!(total + removed, pairs.len());
        assert_eq!(splits, make_splits(pairs, f, 5).unwrap());
    }

    #[test]
    fn single_train_split() {
        let pairs = pool(3);
        let splits = make_splits(pairs.clone(), SplitFractions { train: 1.0, dev: 0.0, test: 0.0 }, 1).unwrap();
        assert_eq!(splits.len(), 1);
        assert_eq!(splits[0].pairs, pairs);
    }

    #[test]
    fn split_errors() {
        let bad = SplitFractions { train: 0.5, dev: 0.1, test: 0.1 };
        assert!(matches!(make_splits(pool(3), bad, 1), Err(CorpusError::InvalidFractions(_))));
        assert!(matches!(
            make_splits(pool(2), SplitFractions::default(), 1),
            Err(CorpusError::InsufficientData { .. })
        ));
    }

    #[test]
    fn tsv_fixture() {
        let empty = DatasetSplit { name: SplitName::Dev, pairs: Vec::new() };
        assert_eq!(to_tsv(&empty), "id\tsentence1\tsentence2\tlabel\n");
        let split = DatasetSplit {
            name: SplitName::Train,
            pairs: vec![
                pair(7, "Can a bad person become good?", "Can a good person become bad?", N, Provenance::Swap),
                pair(8, "flights from new york to florida", "flights to florida from new york", P, Provenance::Backtranslation),
            ],
        };
        let expected = "id\tsentence1\tsentence2\tlabel\n\
                        7\tcan a bad person become good ?\tcan a good person become bad ?\t0\n\
                        8\tflights from new york to florida\tflights to florida from new york\t1\n";
        assert_eq!(to_tsv(&split), expected);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tsv");
        emit_tsv(&split, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), expected);
        assert!(emit_tsv(&split, &dir.path().join("missing/x.tsv")).is_err());
    }

    #[test]
    fn qqp_shaped_stats() {
        let mut pairs = Vec::new();
        for i in 0..12_665u64 {
            let label = if i < 3_966 { P } else { N };
            pairs.push(pair(i, "a b", "b a", label, Provenance::Swap));
        }
        let split = DatasetSplit { name: SplitName::Train, pairs };
        let stats = report_stats(&[split], None);
        assert_eq!(stats.splits[0].yes_percent, 31.3);
        assert_eq!(stats.splits[0].paraphrase, 3_966);
        assert_eq!(stats.mean_agreement, None);
    }

    fn arb_pairs() -> impl Strategy<Value = Vec<LabeledPair>> {
        prop::collection::vec(("[a-c]( [a-c]){0,3}", "[a-c]( [a-c]){0,3}", any::<bool>()), 0..20).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (a, b, l))| pair(i as u64, &a, &b, if l { P } else { N }, Provenance::Recombined))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn tsv_round_trip(pairs in arb_pairs()) {
            let split = DatasetSplit { name: SplitName::Test, pairs };
            let rows = parse_tsv(&to_tsv(&split)).unwrap();
            let expected: Vec<TsvRow> = split.pairs.iter().map(TsvRow::from).collect();
            prop_assert_eq!(rows, expected);
        }
    }
}
