//! Corpus preparation: exact deduplication, syntax filtering, sequence
//! export and length statistics.
//!
//! Every stage keeps first-seen input order. Parallel stages collect by
//! input index, so results match a sequential run.

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bpe::bpe_segment;
use crate::codec::{encode_tree, EncodeMode, SequenceRecord};
use crate::error::{Error, Result};
use crate::syntax::{Language, Production, SourceText};
use crate::vocab::MergedVocab;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub id: String,
    pub source: SourceText,
}

impl CorpusRecord {
    pub fn new(id: impl Into<String>, content: impl Into<Vec<u8>>) -> Self {
        let id = id.into();
        CorpusRecord {
            source: SourceText::with_origin(content, id.clone()),
            id,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InputLine {
    id: String,
    content: String,
}

/// Loads a directory (every `.py` file below it, sorted by relative path)
/// or a JSONL file of `{"id", "content"}` objects.
pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let path = path.as_ref();
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let records = if meta.is_dir() {
        load_dir(path)?
    } else {
        load_jsonl(path)?
    };
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::format(format!("duplicate record id `{}`", r.id)));
        }
    }
    Ok(records)
}

fn load_dir(dir: &Path) -> Result<Vec<CorpusRecord>> {
    let mut records = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|x| x != "py") {
            continue;
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let rel = path.strip_prefix(dir).unwrap_or(path);
        let id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        records.push(CorpusRecord::new(id, bytes));
    }
    Ok(records)
}

fn load_jsonl(path: &Path) -> Result<Vec<CorpusRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InputLine = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("{}:{}: {e}", path.display(), n + 1)))?;
        records.push(CorpusRecord::new(rec.id, rec.content));
    }
    Ok(records)
}

/// Writes records as `{"id", "content"}` JSONL. Content must be UTF-8.
pub fn write_records(path: impl AsRef<Path>, records: &[CorpusRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for r in records {
        let content = std::str::from_utf8(&r.source.bytes)
            .map_err(|_| Error::format(format!("record `{}` is not valid UTF-8", r.id)))?;
        let line = serde_json::to_string(&InputLine {
            id: r.id.clone(),
            content: content.to_string(),
        })
        .expect("record serializes");
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_count: usize,
    pub duplicate_count: usize,
    pub syntax_rejected_count: usize,
    pub kept_count: usize,
    pub rejected_ids: Vec<String>,
}

/// Keeps the first occurrence of each exact byte string.
pub fn dedup(records: Vec<CorpusRecord>) -> (Vec<CorpusRecord>, FilterReport) {
    let keep: Vec<bool> = {
        let mut seen: HashSet<&[u8]> = HashSet::with_capacity(records.len());
        records.iter().map(|r| seen.insert(&r.source.bytes)).collect()
    };
    let mut report = FilterReport {
        input_count: records.len(),
        ..FilterReport::default()
    };
    let mut kept = Vec::with_capacity(records.len());
    for (r, keep) in records.into_iter().zip(keep) {
        if keep {
            kept.push(r);
        } else {
            report.duplicate_count += 1;
            report.rejected_ids.push(r.id);
        }
    }
    report.kept_count = kept.len();
    (kept, report)
}

/// Keeps the records that parse without error nodes.
pub fn syntax_filter(records: Vec<CorpusRecord>, language: &Language) -> (Vec<CorpusRecord>, FilterReport) {
    let valid: Vec<bool> = records
        .par_iter()
        .map(|r| language.validate_syntax(&r.source))
        .collect();
    let mut report = FilterReport {
        input_count: records.len(),
        ..FilterReport::default()
    };
    let mut kept = Vec::with_capacity(records.len());
    for (r, ok) in records.into_iter().zip(valid) {
        if ok {
            kept.push(r);
        } else {
            report.syntax_rejected_count += 1;
            report.rejected_ids.push(r.id);
        }
    }
    report.kept_count = kept.len();
    (kept, report)
}

/// Deduplication followed by syntax filtering, with one combined report.
pub fn filter_corpus(records: Vec<CorpusRecord>, language: &Language) -> (Vec<CorpusRecord>, FilterReport) {
    let (unique, d) = dedup(records);
    let (kept, s) = syntax_filter(unique, language);
    let mut rejected_ids = d.rejected_ids;
    rejected_ids.extend(s.rejected_ids);
    let report = FilterReport {
        input_count: d.input_count,
        duplicate_count: d.duplicate_count,
        syntax_rejected_count: s.syntax_rejected_count,
        kept_count: s.kept_count,
        rejected_ids,
    };
    (kept, report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub shards: Vec<String>,
    pub records: usize,
    pub mode: EncodeMode,
    pub vocab_digest: String,
}

pub fn shard_name(index: usize) -> String {
    format!("shard-{index:05}.jsonl")
}

/// Encodes every record and writes JSONL shards of at most `shard_size`
/// records plus `manifest.json` into `out_dir`.
pub fn export_dataset(
    records: &[CorpusRecord],
    vocab: &MergedVocab,
    mode: EncodeMode,
    out_dir: impl AsRef<Path>,
    shard_size: usize,
) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    if shard_size == 0 {
        return Err(Error::format("shard size must be positive"));
    }
    let language = Language::from_name(vocab.language())?;
    let encoded: Vec<Result<SequenceRecord>> = records
        .par_iter()
        .map(|r| {
            let tree = language.parse(&r.source)?;
            let seq = encode_tree(&tree, vocab, mode)?;
            Ok(SequenceRecord {
                id: r.id.clone(),
                mode,
                ids: seq.ids,
            })
        })
        .collect();
    let encoded = records
        .iter()
        .zip(encoded)
        .map(|(r, e)| e.map_err(|err| err.in_record(&r.id)))
        .collect::<Result<Vec<_>>>()?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut shards = Vec::new();
    for (i, chunk) in encoded.chunks(shard_size).enumerate() {
        let name = shard_name(i);
        let path = out_dir.join(&name);
        let mut buf = Vec::new();
        for rec in chunk {
            serde_json::to_writer(&mut buf, rec).expect("sequence serializes");
            buf.push(b'\n');
        }
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        shards.push(name);
    }
    let manifest = Manifest {
        shards,
        records: encoded.len(),
        mode,
        vocab_digest: vocab.digest(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    let mut file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordStats {
    pub id: String,
    /// Base-vocab subword tokens of the raw bytes.
    pub token_len: usize,
    pub canonical_len: usize,
    pub exact_len: usize,
    pub internal_nodes: usize,
    pub canonical_ratio: Option<f64>,
    pub exact_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSummary {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub max: usize,
    pub total: usize,
}

impl LengthSummary {
    fn of(values: &[usize]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let total: usize = sorted.iter().sum();
        let median = match n {
            0 => None,
            _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
            _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0),
        };
        LengthSummary {
            mean: (n > 0).then(|| total as f64 / n as f64),
            median,
            max: sorted.last().copied().unwrap_or(0),
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub records: Vec<RecordStats>,
    pub token: LengthSummary,
    pub canonical: LengthSummary,
    pub exact: LengthSummary,
    /// Total canonical length over total token length.
    pub canonical_ratio: Option<f64>,
    pub exact_ratio: Option<f64>,
    pub distinct_rules_seen: usize,
    pub vocab_rules: u32,
    pub rule_coverage: Option<f64>,
    /// Records that could not be encoded, with the error name.
    pub failures: Vec<(String, String)>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn corpus_stats(records: &[CorpusRecord], vocab: &MergedVocab) -> Result<StatsReport> {
    let language = Language::from_name(vocab.language())?;
    let per: Vec<Result<(RecordStats, Vec<Production>)>> = records
        .par_iter()
        .map(|r| {
            let tree = language.parse(&r.source)?;
            let exact = encode_tree(&tree, vocab, EncodeMode::Exact)?;
            let canonical = encode_tree(&tree, vocab, EncodeMode::Canonical)?;
            let token_len = bpe_segment(&r.source.bytes, vocab.base()).len();
            let stats = RecordStats {
                id: r.id.clone(),
                token_len,
                canonical_len: canonical.len(),
                exact_len: exact.len(),
                internal_nodes: tree.internal_node_count(),
                canonical_ratio: ratio(canonical.len(), token_len),
                exact_ratio: ratio(exact.len(), token_len),
            };
            Ok((stats, tree.internal_productions_preorder()?))
        })
        .collect();
    let mut stats = Vec::new();
    let mut failures = Vec::new();
    let mut seen = BTreeSet::new();
    for (r, result) in records.iter().zip(per) {
        match result {
            Ok((s, prods)) => {
                stats.push(s);
                seen.extend(prods);
            }
            Err(e) => failures.push((r.id.clone(), e.name().to_string())),
        }
    }
    let column = |f: fn(&RecordStats) -> usize| stats.iter().map(f).collect::<Vec<_>>();
    let token = LengthSummary::of(&column(|s| s.token_len));
    let canonical = LengthSummary::of(&column(|s| s.canonical_len));
    let exact = LengthSummary::of(&column(|s| s.exact_len));
    Ok(StatsReport {
        canonical_ratio: ratio(canonical.total, token.total),
        exact_ratio: ratio(exact.total, token.total),
        token,
        canonical,
        exact,
        distinct_rules_seen: seen.len(),
        vocab_rules: vocab.rule_len(),
        rule_coverage: ratio(seen.len(), vocab.rule_len() as usize),
        records: stats,
        failures,
    })
}
