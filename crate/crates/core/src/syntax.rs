//! Concrete syntax trees and the structural facts extracted from them.
//!
//! Trees keep every token the grammar produces, anonymous literals and
//! comments included, so the leaves together with the gaps between them
//! cover the source byte for byte.

use std::fmt;
use std::ops::Range;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LANGUAGE: &str = "python";

/// Raw source bytes plus an optional origin (path or record key).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceText {
    pub bytes: Vec<u8>,
    pub origin: Option<String>,
}

impl SourceText {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        SourceText {
            bytes: bytes.into(),
            origin: None,
        }
    }

    pub fn with_origin(bytes: impl Into<Vec<u8>>, origin: impl Into<String>) -> Self {
        SourceText {
            bytes: bytes.into(),
            origin: Some(origin.into()),
        }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

impl From<&str> for SourceText {
    fn from(s: &str) -> Self {
        SourceText::new(s.as_bytes())
    }
}

/// A grammar the toolkit can parse with.
#[derive(Clone)]
pub struct Language {
    name: &'static str,
    start_symbol: &'static str,
    grammar: tree_sitter::Language,
    // node kind names indexed by kind id
    kinds: &'static [&'static str],
}

impl fmt::Debug for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Language")
            .field("name", &self.name)
            .field("start_symbol", &self.start_symbol)
            .finish()
    }
}

impl Language {
    pub fn python() -> Self {
        static KINDS: OnceLock<Vec<&'static str>> = OnceLock::new();
        let grammar: tree_sitter::Language = tree_sitter_python::LANGUAGE.into();
        let kinds = KINDS.get_or_init(|| kind_table(&grammar));
        Language {
            name: "python",
            start_symbol: "module",
            grammar,
            kinds,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "python" => Ok(Language::python()),
            other => Err(Error::ParserUnavailable(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Kind of the root node of every tree this grammar produces.
    pub fn start_symbol(&self) -> &'static str {
        self.start_symbol
    }

    pub fn parse(&self, source: &SourceText) -> Result<SyntaxTree> {
        let mut parser = tree_sitter::Parser::new();
        parser
            .set_language(&self.grammar)
            .map_err(|_| Error::ParserUnavailable(self.name.to_string()))?;
        let tree = parser
            .parse(&source.bytes, None)
            .ok_or_else(|| Error::ParserUnavailable(self.name.to_string()))?;
        let ts_root = tree.root_node();
        let has_error = ts_root.has_error();
        let first_error = if has_error { first_error_offset(ts_root) } else { None };
        Ok(SyntaxTree {
            root: convert(ts_root, self.kinds),
            source: source.clone(),
            has_error,
            first_error,
        })
    }

    pub fn validate_syntax(&self, source: &SourceText) -> bool {
        self.parse(source).map(|t| !t.has_error).unwrap_or(false)
    }
}

/// One node of a concrete syntax tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: &'static str,
    pub span: Range<usize>,
    pub named: bool,
    pub children: Vec<SyntaxNode>,
}

impl SyntaxNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// The production rooted at this node, or `None` for a leaf.
    pub fn production(&self) -> Option<Production> {
        if self.is_leaf() {
            return None;
        }
        Some(Production {
            parent: self.kind.to_string(),
            parent_named: self.named,
            children: self
                .children
                .iter()
                .map(|c| ChildKind::new(c.kind, c.named))
                .collect(),
        })
    }

    /// Preorder iterator over this node and its descendants.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a SyntaxNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a SyntaxNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxTree {
    pub root: SyntaxNode,
    pub source: SourceText,
    pub has_error: bool,
    first_error: Option<usize>,
}

impl SyntaxTree {
    /// Byte offset of the first error or missing node, when the tree has one.
    pub fn first_error(&self) -> Option<usize> {
        self.first_error
    }

    pub fn ensure_valid(&self) -> Result<()> {
        if self.has_error {
            Err(Error::SyntaxInvalid {
                offset: self.first_error,
            })
        } else {
            Ok(())
        }
    }

    /// Productions of all internal nodes in preorder.
    pub fn internal_productions_preorder(&self) -> Result<Vec<Production>> {
        if self.has_error {
            return Err(Error::TreeHasErrors);
        }
        Ok(self.root.preorder().filter_map(SyntaxNode::production).collect())
    }

    /// Leaf tokens in source order. A childless root is the empty start
    /// symbol, not a token, and is not reported.
    pub fn leaves_in_order(&self) -> Vec<LeafInfo<'_>> {
        if self.root.is_leaf() {
            return Vec::new();
        }
        self.root
            .preorder()
            .filter(|n| n.is_leaf())
            .map(|n| LeafInfo {
                kind: n.kind,
                named: n.named,
                span: n.span.clone(),
                text: &self.source.bytes[n.span.clone()],
            })
            .collect()
    }

    /// Bytes after the last leaf.
    pub fn trailing_gap(&self) -> &[u8] {
        let end = self
            .leaves_in_order()
            .last()
            .map(|l| l.span.end)
            .unwrap_or(0);
        &self.source.bytes[end..]
    }

    pub fn internal_node_count(&self) -> usize {
        self.root.preorder().filter(|n| !n.is_leaf()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafInfo<'a> {
    pub kind: &'static str,
    pub named: bool,
    pub span: Range<usize>,
    pub text: &'a [u8],
}

/// A child slot of a production: node kind plus the named/anonymous flag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChildKind {
    pub kind: String,
    pub named: bool,
}

impl ChildKind {
    pub fn new(kind: impl Into<String>, named: bool) -> Self {
        ChildKind {
            kind: kind.into(),
            named,
        }
    }
}

/// One grammar rule: a parent kind expanded into an ordered list of children.
///
/// The derived ordering (parent kind, parent named flag, then the child
/// list compared element-wise by kind and named flag) is the canonical rule
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Production {
    pub parent: String,
    /// False for anonymous internal nodes such as `is not`, whose kind may
    /// coincide with a named kind.
    #[serde(default = "named_default", skip_serializing_if = "is_named")]
    pub parent_named: bool,
    pub children: Vec<ChildKind>,
}

fn named_default() -> bool {
    true
}

fn is_named(named: &bool) -> bool {
    *named
}

impl Production {
    pub fn new(parent: impl Into<String>, children: impl IntoIterator<Item = ChildKind>) -> Self {
        Production {
            parent: parent.into(),
            parent_named: true,
            children: children.into_iter().collect(),
        }
    }

    pub fn anonymous(parent: impl Into<String>, children: impl IntoIterator<Item = ChildKind>) -> Self {
        Production {
            parent_named: false,
            ..Production::new(parent, children)
        }
    }

    /// True if this rule can expand a slot of the given kind.
    pub fn expands(&self, kind: &str, named: bool) -> bool {
        self.parent == kind && self.parent_named == named
    }
}

impl fmt::Display for Production {
    /// `parent → child child` with anonymous kinds quoted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parent_named {
            write!(f, "{} →", self.parent)?;
        } else {
            write!(f, "{:?} →", self.parent)?;
        }
        for c in &self.children {
            if c.named {
                write!(f, " {}", c.kind)?;
            } else {
                write!(f, " {:?}", c.kind)?;
            }
        }
        Ok(())
    }
}

fn kind_table(grammar: &tree_sitter::Language) -> Vec<&'static str> {
    (0..grammar.node_kind_count())
        .map(|id| {
            let name = grammar.node_kind_for_id(id as u16).unwrap_or("ERROR");
            &*Box::leak(name.to_owned().into_boxed_str())
        })
        .collect()
}

fn first_error_offset(root: tree_sitter::Node<'_>) -> Option<usize> {
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if n.is_error() || n.is_missing() {
            return Some(n.start_byte());
        }
        if n.has_error() {
            let mut cursor = n.walk();
            let kids: Vec<_> = n.children(&mut cursor).collect();
            stack.extend(kids.into_iter().rev());
        }
    }
    None
}

// Iterative so that deeply nested expressions cannot exhaust the stack.
fn convert(root: tree_sitter::Node<'_>, kinds: &'static [&'static str]) -> SyntaxNode {
    struct Frame<'t> {
        node: tree_sitter::Node<'t>,
        pending: std::vec::IntoIter<tree_sitter::Node<'t>>,
        done: Vec<SyntaxNode>,
    }

    fn frame(node: tree_sitter::Node<'_>) -> Frame<'_> {
        let mut cursor = node.walk();
        let kids: Vec<_> = node.children(&mut cursor).collect();
        Frame {
            node,
            done: Vec::with_capacity(kids.len()),
            pending: kids.into_iter(),
        }
    }

    let mut stack = vec![frame(root)];
    loop {
        let top = stack.last_mut().expect("stack holds the root until it is finished");
        if let Some(child) = top.pending.next() {
            stack.push(frame(child));
            continue;
        }
        let finished = stack.pop().expect("non-empty");
        let node = SyntaxNode {
            kind: kinds
                .get(finished.node.kind_id() as usize)
                .copied()
                .unwrap_or("ERROR"),
            span: finished.node.start_byte()..finished.node.end_byte(),
            named: finished.node.is_named(),
            children: finished.done,
        };
        match stack.last_mut() {
            Some(parent) => parent.done.push(node),
            None => return node,
        }
    }
}
