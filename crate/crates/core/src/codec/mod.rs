//! Source ⇄ mixed rule/terminal token sequences.
//!
//! A sequence is the preorder walk of the concrete syntax tree:
//!
//! * every internal node contributes the ID of its production;
//! * every named leaf contributes the subword tokens of its text followed
//!   by `END_OF_LEAF`;
//! * anonymous leaves contribute nothing, their text is the literal fixed
//!   by the parent's production.
//!
//! In exact mode the layout between leaves is kept as gap runs
//! (`GAP`, subword tokens of the gap bytes, `END_OF_LEAF`) placed before the
//! leaf they precede, plus one trailing run for bytes after the last leaf.
//! The decoder attaches a gap run to the next pending leaf, so when an
//! anonymous leaf with no gap of its own sits between a gap run and the
//! previous token, it gets an empty run (`GAP END_OF_LEAF`) to keep the
//! attachment unambiguous. Canonical mode drops all gap runs.

mod machine;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bpe::bpe_segment;
use crate::error::{Error, Result};
use crate::escape::escape_bytes;
use crate::syntax::{Language, SourceText, SyntaxTree};
use crate::vocab::{MergedVocab, Symbol, TokenClass};

pub use machine::{decode, is_valid_prefix, PrefixState, PrefixStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodeMode {
    Exact,
    Canonical,
}

impl EncodeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EncodeMode::Exact => "exact",
            EncodeMode::Canonical => "canonical",
        }
    }
}

impl std::str::FromStr for EncodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(EncodeMode::Exact),
            "canonical" => Ok(EncodeMode::Canonical),
            other => Err(Error::format(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub classes: Vec<TokenClass>,
    pub mode: EncodeMode,
}

impl TokenSequence {
    /// Attaches classes to raw IDs; fails on any ID outside the vocabulary.
    pub fn from_ids(ids: Vec<u32>, mode: EncodeMode, vocab: &MergedVocab) -> Result<Self> {
        let classes = ids
            .iter()
            .map(|&id| vocab.classify(id))
            .collect::<Result<Vec<_>>>()?;
        Ok(TokenSequence { ids, classes, mode })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn rule_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.ids
            .iter()
            .zip(&self.classes)
            .filter(|(_, c)| **c == TokenClass::Rule)
            .map(|(id, _)| *id)
    }
}

/// One line of a sequence JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub mode: EncodeMode,
    pub ids: Vec<u32>,
}

pub fn encode(source: &SourceText, vocab: &MergedVocab, mode: EncodeMode) -> Result<TokenSequence> {
    let language = Language::from_name(vocab.language())?;
    let tree = language.parse(source)?;
    encode_tree(&tree, vocab, mode)
}

pub fn encode_tree(tree: &SyntaxTree, vocab: &MergedVocab, mode: EncodeMode) -> Result<TokenSequence> {
    tree.ensure_valid()?;
    let mut out = Emitter {
        vocab,
        ids: Vec::new(),
        classes: Vec::new(),
        silent_anonymous: 0,
    };
    let exact = mode == EncodeMode::Exact;
    let src = &tree.source.bytes;
    let mut prev_end = 0;
    if !tree.root.is_leaf() {
        for node in tree.root.preorder() {
            if let Some(prod) = node.production() {
                let id = vocab
                    .rule_id(&prod)
                    .ok_or(Error::UnknownProduction(prod))?;
                out.push(id, TokenClass::Rule);
                continue;
            }
            let gap = &src[prev_end..node.span.start];
            if exact && !gap.is_empty() {
                out.gap_run(gap);
            }
            let text = &src[node.span.clone()];
            if node.named {
                out.terminal_run(text);
            } else {
                if text != node.kind.as_bytes() {
                    return Err(Error::UnfixedLiteral {
                        kind: node.kind.to_string(),
                        offset: node.span.start,
                    });
                }
                if gap.is_empty() || !exact {
                    out.silent_anonymous += 1;
                }
            }
            prev_end = node.span.end;
        }
    }
    let trailing = &src[prev_end..];
    if exact && !trailing.is_empty() {
        out.gap_run(trailing);
    }
    Ok(TokenSequence {
        ids: out.ids,
        classes: out.classes,
        mode,
    })
}

struct Emitter<'v> {
    vocab: &'v MergedVocab,
    ids: Vec<u32>,
    classes: Vec<TokenClass>,
    // anonymous leaves passed since the last emitted token
    silent_anonymous: usize,
}

impl Emitter<'_> {
    fn push(&mut self, id: u32, class: TokenClass) {
        self.ids.push(id);
        self.classes.push(class);
        self.silent_anonymous = 0;
    }

    fn terminal_run(&mut self, bytes: &[u8]) {
        for id in bpe_segment(bytes, self.vocab.base()) {
            self.push(id, TokenClass::Terminal);
        }
        self.push(self.vocab.end_of_leaf(), TokenClass::Sentinel);
    }

    fn gap_run(&mut self, gap: &[u8]) {
        for _ in 0..self.silent_anonymous {
            self.ids.extend([self.vocab.gap(), self.vocab.end_of_leaf()]);
            self.classes.extend([TokenClass::Sentinel; 2]);
        }
        self.push(self.vocab.gap(), TokenClass::Sentinel);
        self.terminal_run(gap);
    }
}

/// One line per token: index, ID, class, symbol.
pub fn explain(seq: &TokenSequence, vocab: &MergedVocab) -> Result<String> {
    let mut out = String::new();
    for (i, &id) in seq.ids.iter().enumerate() {
        let class = vocab.classify(id)?;
        let symbol = match vocab.symbol_of(id)? {
            Symbol::Rule(p) => p.to_string(),
            Symbol::Sentinel(s) => s.name().to_string(),
            Symbol::Terminal(bytes) => format!("{:?}", escape_bytes(bytes)),
        };
        writeln!(out, "{i}\t{id}\t{class}\t{symbol}").expect("writing to a String");
    }
    Ok(out)
}
