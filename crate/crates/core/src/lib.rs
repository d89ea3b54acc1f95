//! Grammar-rule code tokenization.
//!
//! Source files are parsed into concrete syntax trees and serialized by a
//! preorder walk into a single token stream that mixes grammar-rule tokens
//! (one per internal node) with subword tokens for the text of named
//! leaves. The crate builds the merged vocabulary, encodes and decodes
//! sequences losslessly, prepares training corpora and measures how the
//! grammar representation changes edit distances between code pairs.

pub mod analysis;
pub mod bpe;
pub mod cli;
pub mod codec;
pub mod corpus;
pub mod error;
pub mod escape;
pub mod syntax;
pub mod vocab;

pub use bpe::bpe_segment;
pub use codec::{decode, encode, explain, is_valid_prefix, EncodeMode, PrefixState, PrefixStatus, TokenSequence};
pub use error::{Error, Result};
pub use syntax::{Language, LeafInfo, Production, SourceText, SyntaxNode, SyntaxTree};
pub use vocab::{build_rule_vocab, merge_vocabs, BaseVocab, MergedVocab, RuleVocab, TokenClass};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
