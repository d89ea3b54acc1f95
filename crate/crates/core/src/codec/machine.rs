//! Pushdown replay of a token sequence against the merged vocabulary.
//!
//! The stack holds the child slots still to be filled, top = next in
//! preorder. Decoding and prefix validation run the same machine; only
//! decoding collects bytes.

use crate::error::{Error, Result};
use crate::syntax::Language;
use crate::vocab::{MergedVocab, Sentinel, Symbol};

use super::{EncodeMode, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frame<'v> {
    Root,
    Slot { kind: &'v str, named: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GapTarget<'v> {
    Named,
    Anonymous(&'v str),
    Trailing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State<'v> {
    Expect,
    Gap(GapTarget<'v>),
    LeafText,
    Done,
}

struct Machine<'v> {
    vocab: &'v MergedVocab,
    start: &'v str,
    stack: Vec<Frame<'v>>,
    state: State<'v>,
    position: usize,
    out: Option<Vec<u8>>,
}

impl<'v> Machine<'v> {
    fn new(vocab: &'v MergedVocab, start: &'v str, collect: bool) -> Self {
        Machine {
            vocab,
            start,
            stack: vec![Frame::Root],
            state: State::Expect,
            position: 0,
            out: collect.then(Vec::new),
        }
    }

    fn append(&mut self, bytes: &[u8]) {
        if let Some(out) = &mut self.out {
            out.extend_from_slice(bytes);
        }
    }

    fn invalid(&self, expected: impl Into<String>) -> Error {
        Error::InvalidToken {
            position: self.position,
            expected: expected.into(),
        }
    }

    fn expand(&mut self, children: &'v [crate::syntax::ChildKind]) {
        self.stack.extend(children.iter().rev().map(|c| Frame::Slot {
            kind: c.kind.as_str(),
            named: c.named,
        }));
    }

    fn feed(&mut self, id: u32) -> Result<()> {
        let symbol = self
            .vocab
            .symbol_of(id)
            .map_err(|_| self.invalid(format!("an id below {}", self.vocab.total())))?;
        match self.state {
            State::Done => return Err(self.invalid("end of sequence")),
            State::Gap(target) => match symbol {
                Symbol::Terminal(bytes) => self.append(bytes),
                Symbol::Sentinel(Sentinel::EndOfLeaf) => {
                    self.state = match target {
                        GapTarget::Named => State::LeafText,
                        GapTarget::Anonymous(kind) => {
                            self.append(kind.as_bytes());
                            State::Expect
                        }
                        GapTarget::Trailing => State::Done,
                    };
                }
                _ => return Err(self.invalid("terminal or END_OF_LEAF in gap")),
            },
            State::LeafText => match symbol {
                Symbol::Terminal(bytes) => self.append(bytes),
                Symbol::Sentinel(Sentinel::EndOfLeaf) => self.state = State::Expect,
                _ => return Err(self.invalid("terminal or END_OF_LEAF in leaf")),
            },
            State::Expect => self.expect(symbol)?,
        }
        self.position += 1;
        Ok(())
    }

    fn expect(&mut self, symbol: Symbol<'v>) -> Result<()> {
        loop {
            match self.stack.last().copied() {
                None => {
                    return match symbol {
                        Symbol::Sentinel(Sentinel::Gap) => {
                            self.state = State::Gap(GapTarget::Trailing);
                            Ok(())
                        }
                        _ => Err(self.invalid("GAP or end of sequence")),
                    };
                }
                Some(Frame::Root) => {
                    return match symbol {
                        Symbol::Rule(p) if p.expands(self.start, true) => {
                            self.stack.pop();
                            self.expand(&p.children);
                            Ok(())
                        }
                        Symbol::Sentinel(Sentinel::Gap) => {
                            self.stack.pop();
                            self.state = State::Gap(GapTarget::Trailing);
                            Ok(())
                        }
                        _ => Err(self.invalid(format!("rule for `{}` or GAP", self.start))),
                    };
                }
                Some(Frame::Slot { kind, named: true }) => {
                    self.stack.pop();
                    return match symbol {
                        Symbol::Rule(p) if p.expands(kind, true) => {
                            self.expand(&p.children);
                            Ok(())
                        }
                        Symbol::Sentinel(Sentinel::Gap) => {
                            self.state = State::Gap(GapTarget::Named);
                            Ok(())
                        }
                        Symbol::Terminal(bytes) => {
                            self.append(bytes);
                            self.state = State::LeafText;
                            Ok(())
                        }
                        Symbol::Sentinel(Sentinel::EndOfLeaf) => Ok(()),
                        Symbol::Rule(_) => {
                            self.stack.push(Frame::Slot { kind, named: true });
                            Err(self.invalid(format!("rule for `{kind}` or a leaf of `{kind}`")))
                        }
                    };
                }
                Some(Frame::Slot { kind, named: false }) => match symbol {
                    Symbol::Rule(p) if p.expands(kind, false) => {
                        self.stack.pop();
                        self.expand(&p.children);
                        return Ok(());
                    }
                    Symbol::Sentinel(Sentinel::Gap) => {
                        self.stack.pop();
                        self.state = State::Gap(GapTarget::Anonymous(kind));
                        return Ok(());
                    }
                    // literal without layout; the token belongs to a later slot
                    _ => {
                        self.stack.pop();
                        self.append(kind.as_bytes());
                    }
                },
            }
        }
    }

    /// True when the tokens so far form a whole derivation: the root has
    /// been expanded and every pending slot is an anonymous literal.
    fn closable(&self) -> bool {
        match self.state {
            State::Done => true,
            State::Expect => self
                .stack
                .iter()
                .all(|f| matches!(f, Frame::Slot { named: false, .. })),
            _ => false,
        }
    }

    fn pending(&self) -> Vec<String> {
        self.stack
            .iter()
            .rev()
            .map(|f| match f {
                Frame::Root => self.start.to_string(),
                Frame::Slot { kind, named: true } => kind.to_string(),
                Frame::Slot { kind, named: false } => format!("{kind:?}"),
            })
            .collect()
    }

    fn finish(mut self) -> Result<Vec<u8>> {
        if !self.closable() {
            return Err(Error::IncompleteSequence {
                position: self.position,
            });
        }
        while let Some(Frame::Slot { kind, .. }) = self.stack.pop() {
            self.append(kind.as_bytes());
        }
        Ok(self.out.unwrap_or_default())
    }
}

fn start_symbol(vocab: &MergedVocab) -> Result<&'static str> {
    Ok(Language::from_name(vocab.language())?.start_symbol())
}

/// Rebuilds the exact source bytes of an exact-mode sequence.
pub fn decode(seq: &TokenSequence, vocab: &MergedVocab) -> Result<Vec<u8>> {
    if seq.mode != EncodeMode::Exact {
        return Err(Error::ModeUnsupported);
    }
    if seq.ids.is_empty() {
        return Ok(Vec::new());
    }
    let mut machine = Machine::new(vocab, start_symbol(vocab)?, true);
    for &id in &seq.ids {
        machine.feed(id)?;
    }
    machine.finish()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrefixStatus {
    Open,
    Complete,
    Invalid { position: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixState {
    /// Pending symbols, next expected first. Anonymous literals are quoted.
    pub expecting: Vec<String>,
    pub position: usize,
    pub status: PrefixStatus,
}

impl PrefixState {
    pub fn is_invalid(&self) -> bool {
        matches!(self.status, PrefixStatus::Invalid { .. })
    }
}

/// Checks whether `ids` can start (or already is) a well-formed sequence.
///
/// `Complete` means the IDs form a whole derivation. Layout runs may still
/// follow one (a gap before a trailing literal, or the trailing gap of the
/// file), so `Complete` is not terminal for exact-mode sequences.
pub fn is_valid_prefix(ids: &[u32], vocab: &MergedVocab) -> PrefixState {
    let start = match start_symbol(vocab) {
        Ok(s) => s,
        Err(e) => {
            return PrefixState {
                expecting: Vec::new(),
                position: 0,
                status: PrefixStatus::Invalid {
                    position: 0,
                    reason: e.to_string(),
                },
            }
        }
    };
    let mut machine = Machine::new(vocab, start, false);
    for &id in ids {
        if let Err(e) = machine.feed(id) {
            let position = machine.position;
            return PrefixState {
                expecting: machine.pending(),
                position,
                status: PrefixStatus::Invalid {
                    position,
                    reason: e.to_string(),
                },
            };
        }
    }
    let status = if machine.position > 0 && machine.closable() {
        PrefixStatus::Complete
    } else {
        PrefixStatus::Open
    };
    PrefixState {
        expecting: machine.pending(),
        position: machine.position,
        status,
    }
}
