//! The merged vocabulary: base subword tokens, two sentinels and grammar rules.
//!
//! IDs are laid out as
//!
//! ```text
//! [0, m)              base tokens, in file order
//! [m, m + 2)          END_OF_LEAF, GAP
//! [m + 2, m + 2 + k)  rules, in canonical order
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::escape::{escape_bytes, unescape_bytes};
use crate::syntax::{Language, Production, SourceText};

pub const FORMAT_VERSION: u64 = 1;
pub const SENTINEL_COUNT: u32 = 2;

/// Byte-complete subword vocabulary with a ranked merge table.
#[derive(Debug, Clone)]
pub struct BaseVocab {
    tokens: Vec<Vec<u8>>,
    merges: Vec<(Vec<u8>, Vec<u8>)>,
    index: HashMap<Vec<u8>, u32>,
    byte_ids: [u32; 256],
    // (left id, right id) -> (rank, merged id)
    merge_table: HashMap<(u32, u32), (u32, u32)>,
}

impl PartialEq for BaseVocab {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.merges == other.merges
    }
}

impl Eq for BaseVocab {}

impl BaseVocab {
    pub fn new(tokens: Vec<Vec<u8>>, merges: Vec<(Vec<u8>, Vec<u8>)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(Error::format(format!("empty token at id {id}")));
            }
            if index.insert(tok.clone(), id as u32).is_some() {
                return Err(Error::format(format!(
                    "duplicate token {:?}",
                    escape_bytes(tok)
                )));
            }
        }
        let mut byte_ids = [0u32; 256];
        for b in 0..=255u8 {
            byte_ids[b as usize] = *index.get(&[b][..]).ok_or(Error::NotByteComplete(b))?;
        }
        let mut merge_table = HashMap::with_capacity(merges.len());
        for (rank, (left, right)) in merges.iter().enumerate() {
            let lookup = |sym: &[u8]| {
                index.get(sym).copied().ok_or_else(|| {
                    Error::format(format!("merge {rank} references unknown symbol {:?}", escape_bytes(sym)))
                })
            };
            let l = lookup(left)?;
            let r = lookup(right)?;
            let merged = lookup(&[left.as_slice(), right.as_slice()].concat())?;
            if merge_table.insert((l, r), (rank as u32, merged)).is_some() {
                return Err(Error::format(format!("duplicate merge at rank {rank}")));
            }
        }
        Ok(BaseVocab {
            tokens,
            merges,
            index,
            byte_ids,
            merge_table,
        })
    }

    /// The 256 single-byte tokens, ID = byte value, no merges.
    pub fn byte_identity() -> Self {
        BaseVocab::new((0..=255u8).map(|b| vec![b]).collect(), Vec::new())
            .expect("byte identity vocabulary is valid")
    }

    /// Loads either a base vocab file (`{"tokens", "merges"}`) or the base
    /// section of a merged vocab file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::format(e.to_string()))?;
        let base = match value.get("base") {
            Some(b) if value.get("format_version").is_some() => b.clone(),
            _ => value,
        };
        let file: BaseFile =
            serde_json::from_value(base).map_err(|e| Error::format(e.to_string()))?;
        file.into_vocab()
    }

    pub fn len(&self) -> u32 {
        self.tokens.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Vec<u8>] {
        &self.tokens
    }

    pub fn merges(&self) -> &[(Vec<u8>, Vec<u8>)] {
        &self.merges
    }

    pub fn token(&self, id: u32) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(Vec::as_slice)
    }

    pub fn lookup(&self, symbol: &[u8]) -> Option<u32> {
        self.index.get(symbol).copied()
    }

    pub(crate) fn byte_id(&self, b: u8) -> u32 {
        self.byte_ids[b as usize]
    }

    pub(crate) fn merge(&self, left: u32, right: u32) -> Option<(u32, u32)> {
        self.merge_table.get(&(left, right)).copied()
    }

    fn to_file(&self) -> BaseFile {
        BaseFile {
            tokens: self.tokens.iter().map(|t| escape_bytes(t)).collect(),
            merges: self
                .merges
                .iter()
                .map(|(l, r)| (escape_bytes(l), escape_bytes(r)))
                .collect(),
        }
    }
}

/// Grammar rules in canonical order, without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleVocab {
    rules: Vec<Production>,
}

impl RuleVocab {
    pub fn from_rules(rules: impl IntoIterator<Item = Production>) -> Self {
        let set: BTreeSet<Production> = rules.into_iter().collect();
        RuleVocab {
            rules: set.into_iter().collect(),
        }
    }

    pub fn rules(&self) -> &[Production] {
        &self.rules
    }

    pub fn len(&self) -> u32 {
        self.rules.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RuleBuildStats {
    pub parsed: usize,
    pub skipped: usize,
}

/// Collects every distinct production of the parseable files in `corpus`.
/// Files that fail to parse cleanly are skipped and counted.
pub fn build_rule_vocab<I>(corpus: I, language: &Language) -> Result<(RuleVocab, RuleBuildStats)>
where
    I: IntoIterator<Item = SourceText>,
{
    let sources: Vec<SourceText> = corpus.into_iter().collect();
    let per_file: Vec<Option<Vec<Production>>> = sources
        .par_iter()
        .map(|src| {
            language
                .parse(src)
                .ok()
                .and_then(|tree| tree.internal_productions_preorder().ok())
        })
        .collect();
    let mut stats = RuleBuildStats::default();
    let mut rules = BTreeSet::new();
    for prods in per_file {
        match prods {
            Some(p) => {
                stats.parsed += 1;
                rules.extend(p);
            }
            None => stats.skipped += 1,
        }
    }
    if stats.parsed == 0 {
        return Err(Error::EmptyCorpus {
            skipped: stats.skipped,
        });
    }
    Ok((
        RuleVocab {
            rules: rules.into_iter().collect(),
        },
        stats,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sentinel {
    EndOfLeaf,
    Gap,
}

impl Sentinel {
    pub const ALL: [Sentinel; 2] = [Sentinel::EndOfLeaf, Sentinel::Gap];

    pub fn name(self) -> &'static str {
        match self {
            Sentinel::EndOfLeaf => "END_OF_LEAF",
            Sentinel::Gap => "GAP",
        }
    }

    fn offset(self) -> u32 {
        match self {
            Sentinel::EndOfLeaf => 0,
            Sentinel::Gap => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenClass {
    Terminal,
    Sentinel,
    Rule,
}

impl fmt::Display for TokenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenClass::Terminal => "terminal",
            TokenClass::Sentinel => "sentinel",
            TokenClass::Rule => "rule",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol<'a> {
    Terminal(&'a [u8]),
    Sentinel(Sentinel),
    Rule(&'a Production),
}

/// V_grammar: the total bijection between symbols and IDs.
#[derive(Debug, Clone)]
pub struct MergedVocab {
    language: String,
    base: BaseVocab,
    rules: RuleVocab,
    rule_index: HashMap<Production, u32>,
}

impl PartialEq for MergedVocab {
    fn eq(&self, other: &Self) -> bool {
        self.language == other.language && self.base == other.base && self.rules == other.rules
    }
}

impl Eq for MergedVocab {}

impl MergedVocab {
    pub fn new(language: impl Into<String>, base: BaseVocab, rules: RuleVocab) -> Self {
        let first = base.len() + SENTINEL_COUNT;
        let rule_index = rules
            .rules
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), first + i as u32))
            .collect();
        MergedVocab {
            language: language.into(),
            base,
            rules,
            rule_index,
        }
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn base(&self) -> &BaseVocab {
        &self.base
    }

    pub fn rules(&self) -> &RuleVocab {
        &self.rules
    }

    /// m
    pub fn base_len(&self) -> u32 {
        self.base.len()
    }

    /// k
    pub fn rule_len(&self) -> u32 {
        self.rules.len()
    }

    pub fn total(&self) -> u32 {
        self.base.len() + SENTINEL_COUNT + self.rules.len()
    }

    pub fn sentinel_id(&self, s: Sentinel) -> u32 {
        self.base.len() + s.offset()
    }

    pub fn end_of_leaf(&self) -> u32 {
        self.sentinel_id(Sentinel::EndOfLeaf)
    }

    pub fn gap(&self) -> u32 {
        self.sentinel_id(Sentinel::Gap)
    }

    pub fn rule_id(&self, p: &Production) -> Option<u32> {
        self.rule_index.get(p).copied()
    }

    pub fn rule(&self, id: u32) -> Option<&Production> {
        let first = self.base.len() + SENTINEL_COUNT;
        id.checked_sub(first)
            .and_then(|i| self.rules.rules.get(i as usize))
    }

    pub fn classify(&self, id: u32) -> Result<TokenClass> {
        let m = self.base.len();
        match id {
            _ if id < m => Ok(TokenClass::Terminal),
            _ if id < m + SENTINEL_COUNT => Ok(TokenClass::Sentinel),
            _ if id < self.total() => Ok(TokenClass::Rule),
            _ => Err(Error::OutOfRange {
                id,
                total: self.total(),
            }),
        }
    }

    pub fn symbol_of(&self, id: u32) -> Result<Symbol<'_>> {
        let m = self.base.len();
        Ok(match self.classify(id)? {
            TokenClass::Terminal => Symbol::Terminal(&self.base.tokens[id as usize]),
            TokenClass::Sentinel => Symbol::Sentinel(Sentinel::ALL[(id - m) as usize]),
            TokenClass::Rule => Symbol::Rule(self.rule(id).expect("id classified as rule")),
        })
    }

    pub fn id_of(&self, symbol: &Symbol<'_>) -> Option<u32> {
        match symbol {
            Symbol::Terminal(bytes) => self.base.lookup(bytes),
            Symbol::Sentinel(s) => Some(self.sentinel_id(*s)),
            Symbol::Rule(p) => self.rule_id(p),
        }
    }

    /// Canonical file bytes: fixed key order, pretty-printed, trailing newline.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let file = VocabFile {
            format_version: FORMAT_VERSION,
            language: self.language.clone(),
            base: self.base.to_file(),
            sentinels: Sentinel::ALL.iter().map(|s| s.name().to_string()).collect(),
            rules: self.rules.rules.clone(),
        };
        let mut out = serde_json::to_vec_pretty(&file).expect("vocab serializes");
        out.push(b'\n');
        out
    }

    /// Hex SHA-256 of the canonical file bytes.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_bytes()))
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| Error::format(e.to_string()))?;
        let version = value
            .get("format_version")
            .ok_or_else(|| Error::format("missing format_version"))?
            .as_u64()
            .ok_or_else(|| Error::format("format_version is not an unsigned integer"))?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let file: VocabFile =
            serde_json::from_value(value).map_err(|e| Error::format(e.to_string()))?;
        let expected: Vec<&str> = Sentinel::ALL.iter().map(|s| s.name()).collect();
        if file.sentinels != expected {
            return Err(Error::format(format!(
                "sentinels must be {expected:?}, found {:?}",
                file.sentinels
            )));
        }
        for (i, rule) in file.rules.iter().enumerate() {
            if rule.children.is_empty() {
                return Err(Error::format(format!("rule {i} has no children")));
            }
            if i > 0 {
                let prev = &file.rules[i - 1];
                if prev == rule {
                    return Err(Error::format(format!("duplicate rule `{rule}`")));
                }
                if prev > rule {
                    return Err(Error::format(format!(
                        "rule `{rule}` is out of canonical order"
                    )));
                }
            }
        }
        let base = file.base.into_vocab()?;
        Ok(MergedVocab::new(
            file.language,
            base,
            RuleVocab { rules: file.rules },
        ))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        MergedVocab::from_json_bytes(&bytes)
    }
}

pub fn merge_vocabs(language: &str, base: BaseVocab, rules: RuleVocab) -> MergedVocab {
    MergedVocab::new(language, base, rules)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseFile {
    tokens: Vec<String>,
    merges: Vec<(String, String)>,
}

impl BaseFile {
    fn into_vocab(self) -> Result<BaseVocab> {
        let tokens = self
            .tokens
            .iter()
            .map(|t| unescape_bytes(t))
            .collect::<Result<Vec<_>>>()?;
        let merges = self
            .merges
            .iter()
            .map(|(l, r)| Ok((unescape_bytes(l)?, unescape_bytes(r)?)))
            .collect::<Result<Vec<_>>>()?;
        BaseVocab::new(tokens, merges)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabFile {
    format_version: u64,
    language: String,
    base: BaseFile,
    sentinels: Vec<String>,
    rules: Vec<Production>,
}
