use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bpe::bpe_segment;
use crate::codec::{encode, EncodeMode};
use crate::error::{Error, Result};
use crate::syntax::SourceText;
use crate::vocab::{BaseVocab, MergedVocab};

use super::chisq::ContingencyTable;
use super::levenshtein::levenshtein;

pub const DEFAULT_THRESHOLD: usize = 50;
pub const BUCKET_WIDTH: usize = 5;
pub const BUCKET_COUNT: usize = 10;

/// An error/correct code pair for one problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub problem_id: String,
    pub error_code: SourceText,
    pub correct_code: SourceText,
    /// Whether an external classifier judged this pair correctly.
    pub outcome: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct PairLine {
    problem_id: String,
    wrong_code: String,
    correct_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcome: Option<bool>,
}

impl PairRecord {
    pub fn new(problem_id: impl Into<String>, error_code: &str, correct_code: &str) -> Self {
        PairRecord {
            problem_id: problem_id.into(),
            error_code: SourceText::from(error_code),
            correct_code: SourceText::from(correct_code),
            outcome: None,
        }
    }

    pub fn with_outcome(mut self, outcome: bool) -> Self {
        self.outcome = Some(outcome);
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&PairLine {
            problem_id: self.problem_id.clone(),
            wrong_code: String::from_utf8_lossy(&self.error_code.bytes).into_owned(),
            correct_code: String::from_utf8_lossy(&self.correct_code.bytes).into_owned(),
            outcome: self.outcome,
        })
        .expect("pair serializes")
    }
}

/// Reads a pairs JSONL file (`problem_id`, `wrong_code`, `correct_code`, optional `outcome`).
pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<PairRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: PairLine = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if p.wrong_code.is_empty() || p.correct_code.is_empty() {
            return Err(Error::format(format!(
                "{}:{}: pair `{}` has an empty code field",
                path.display(),
                n + 1,
                p.problem_id
            )));
        }
        pairs.push(PairRecord {
            error_code: SourceText::with_origin(p.wrong_code, format!("{}/wrong", p.problem_id)),
            correct_code: SourceText::with_origin(p.correct_code, format!("{}/correct", p.problem_id)),
            problem_id: p.problem_id,
            outcome: p.outcome,
        });
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDistances {
    /// Over base-vocab subword segmentation of the raw bytes.
    pub token_ed: usize,
    /// Over canonical-mode grammar sequences.
    pub grammar_ed: usize,
    /// Over raw bytes.
    pub byte_ed: usize,
}

impl PairDistances {
    pub fn amplification(&self) -> i64 {
        self.grammar_ed as i64 - self.token_ed as i64
    }
}

pub fn pair_distances(pair: &PairRecord, vocab: &MergedVocab, base: &BaseVocab) -> Result<PairDistances> {
    let wrong = encode(&pair.error_code, vocab, EncodeMode::Canonical)?;
    let right = encode(&pair.correct_code, vocab, EncodeMode::Canonical)?;
    let token_ed = levenshtein(
        &bpe_segment(&pair.error_code.bytes, base),
        &bpe_segment(&pair.correct_code.bytes, base),
    );
    Ok(PairDistances {
        token_ed,
        grammar_ed: levenshtein(&wrong.ids, &right.ids),
        byte_ed: levenshtein(&pair.error_code.bytes, &pair.correct_code.bytes),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub problem_id: String,
    #[serde(flatten)]
    pub distances: PairDistances,
    pub within_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFailure {
    pub index: usize,
    pub problem_id: String,
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdReport {
    pub threshold: usize,
    pub total_pairs: usize,
    pub unparseable: usize,
    pub excluded_by_threshold: usize,
    pub count: usize,
    /// `count / parseable pairs`; null when nothing parsed.
    pub coverage: Option<f64>,
    pub mean_token_ed: Option<f64>,
    pub mean_grammar_ed: Option<f64>,
    pub mean_byte_ed: Option<f64>,
    /// `mean_grammar_ed / mean_token_ed`; null unless the token mean is positive.
    pub amplification: Option<f64>,
    /// Token-level distances of the counted pairs, buckets `[0–4] … [45–49]`.
    pub histogram: Vec<Bucket>,
    pub grammar_histogram: Vec<Bucket>,
    /// Counted pairs whose distance is past the last bucket.
    pub histogram_overflow: usize,
    pub grammar_histogram_overflow: usize,
    pub pairs: Vec<PairEntry>,
    pub failures: Vec<PairFailure>,
}

fn histogram(values: impl Iterator<Item = usize>) -> (Vec<Bucket>, usize) {
    let mut buckets: Vec<Bucket> = (0..BUCKET_COUNT)
        .map(|i| Bucket {
            lo: i * BUCKET_WIDTH,
            hi: i * BUCKET_WIDTH + BUCKET_WIDTH - 1,
            count: 0,
        })
        .collect();
    let mut overflow = 0;
    for v in values {
        match buckets.get_mut(v / BUCKET_WIDTH) {
            Some(b) => b.count += 1,
            None => overflow += 1,
        }
    }
    (buckets, overflow)
}

fn mean(values: impl Iterator<Item = usize>) -> Option<f64> {
    let (sum, n) = values.fold((0usize, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum as f64 / n as f64)
}

/// Distances for every pair, in input order; unparseable pairs become errors.
pub fn all_pair_distances(
    pairs: &[PairRecord],
    vocab: &MergedVocab,
    base: &BaseVocab,
) -> Vec<Result<PairDistances>> {
    pairs
        .par_iter()
        .map(|p| pair_distances(p, vocab, base))
        .collect()
}

pub fn pair_report(
    pairs: &[PairRecord],
    vocab: &MergedVocab,
    base: &BaseVocab,
    threshold: usize,
) -> EdReport {
    let results = all_pair_distances(pairs, vocab, base);
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (index, (pair, result)) in pairs.iter().zip(results).enumerate() {
        match result {
            Ok(distances) => entries.push(PairEntry {
                problem_id: pair.problem_id.clone(),
                within_threshold: distances.token_ed < threshold,
                distances,
            }),
            Err(e) => failures.push(PairFailure {
                index,
                problem_id: pair.problem_id.clone(),
                error: e.name().to_string(),
                message: e.to_string(),
            }),
        }
    }
    let counted: Vec<&PairDistances> = entries
        .iter()
        .filter(|e| e.within_threshold)
        .map(|e| &e.distances)
        .collect();
    let mean_token_ed = mean(counted.iter().map(|d| d.token_ed));
    let mean_grammar_ed = mean(counted.iter().map(|d| d.grammar_ed));
    let amplification = match (mean_token_ed, mean_grammar_ed) {
        (Some(t), Some(g)) if t > 0.0 => Some(g / t),
        _ => None,
    };
    let (histogram, histogram_overflow) = histogram_of(&counted, |d| d.token_ed);
    let (grammar_histogram, grammar_histogram_overflow) = histogram_of(&counted, |d| d.grammar_ed);
    EdReport {
        threshold,
        total_pairs: pairs.len(),
        unparseable: failures.len(),
        excluded_by_threshold: entries.len() - counted.len(),
        count: counted.len(),
        coverage: (!entries.is_empty()).then(|| counted.len() as f64 / entries.len() as f64),
        mean_token_ed,
        mean_grammar_ed,
        mean_byte_ed: mean(counted.iter().map(|d| d.byte_ed)),
        amplification,
        histogram,
        grammar_histogram,
        histogram_overflow,
        grammar_histogram_overflow,
        pairs: entries,
        failures,
    }
}

fn histogram_of(counted: &[&PairDistances], f: impl Fn(&PairDistances) -> usize) -> (Vec<Bucket>, usize) {
    histogram(counted.iter().map(|d| f(d)))
}

/// Row split for the contingency table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cut {
    Median,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contingency {
    /// Rows: amplification above the cut, at or below it.
    /// Columns: outcome true, outcome false.
    pub table: ContingencyTable,
    pub cut: f64,
    pub pairs_used: usize,
    pub skipped: usize,
}

pub fn median(values: &[i64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] as f64 + v[mid] as f64) / 2.0
    } else {
        v[mid] as f64
    })
}

/// Cross-tabulates amplification (`grammar_ed − token_ed`) against outcome.
/// Unparseable pairs are skipped.
pub fn build_contingency(
    pairs: &[PairRecord],
    vocab: &MergedVocab,
    base: &BaseVocab,
    cut: Cut,
) -> Result<Contingency> {
    if let Some(p) = pairs.iter().find(|p| p.outcome.is_none()) {
        return Err(Error::MissingOutcome(p.problem_id.clone()));
    }
    let results = all_pair_distances(pairs, vocab, base);
    let used: Vec<(i64, bool)> = pairs
        .iter()
        .zip(&results)
        .filter_map(|(p, r)| r.as_ref().ok().map(|d| (d.amplification(), p.outcome.unwrap_or_default())))
        .collect();
    if used.len() < 4 {
        return Err(Error::TooFewPairs(used.len()));
    }
    let amps: Vec<i64> = used.iter().map(|(a, _)| *a).collect();
    let cut = match cut {
        Cut::Value(v) => v,
        Cut::Median => median(&amps).expect("at least four pairs"),
    };
    Ok(Contingency {
        table: tabulate(&used, cut),
        cut,
        pairs_used: used.len(),
        skipped: pairs.len() - used.len(),
    })
}

/// Counts `(amplification, outcome)` observations into the 2×2 table.
pub fn tabulate(observations: &[(i64, bool)], cut: f64) -> ContingencyTable {
    let mut t = [[0u64; 2]; 2];
    for &(amp, outcome) in observations {
        let row = if amp as f64 > cut { 0 } else { 1 };
        let col = if outcome { 0 } else { 1 };
        t[row][col] += 1;
    }
    ContingencyTable(t)
}
