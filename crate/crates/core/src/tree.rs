//! Constituency parse trees in Penn-Treebank bracketed notation.
//!
//! A tree is read from strings such as
//! `(S (NP (DT the) (NN dog)) (VP (VBZ runs)))`. Preterminals carry the
//! surface token, every other node carries only a label. An unlabeled outer
//! wrapper, as emitted by most treebank dumps (`( (S ...) )`), is stripped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TreeError;

/// A node of a constituency tree. Leaves hold a token, internal nodes hold
/// children; never both.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: String,
    pub children: Vec<Node>,
    pub token: Option<String>,
}

impl Node {
    pub fn leaf(label: impl Into<String>, token: impl Into<String>) -> Self {
        Node {
            label: label.into(),
            children: Vec::new(),
            token: Some(token.into()),
        }
    }

    pub fn internal(label: impl Into<String>, children: Vec<Node>) -> Self {
        Node {
            label: label.into(),
            children,
            token: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn write_bracketed(&self, out: &mut String) {
        out.push('(');
        out.push_str(&self.label);
        if let Some(token) = &self.token {
            out.push(' ');
            out.push_str(token);
        }
        for child in &self.children {
            out.push(' ');
            child.write_bracketed(out);
        }
        out.push(')');
    }
}

/// A labeled, ordered, rooted tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParseTree {
    root: Node,
}

impl ParseTree {
    /// Wraps a node. Panics if the token invariant does not hold; use
    /// [`ParseTree::try_new`] for untrusted input.
    pub fn new(root: Node) -> Self {
        Self::try_new(root).expect("tokens must appear exactly on leaves")
    }

    pub fn try_new(root: Node) -> Result<Self, TreeError> {
        fn check(node: &Node) -> Result<(), TreeError> {
            if node.label.is_empty() {
                return Err(TreeError::LabellessNode);
            }
            match (node.children.is_empty(), node.token.is_some()) {
                (true, true) => Ok(()),
                (true, false) => Err(TreeError::MissingToken(node.label.clone())),
                (false, true) => Err(TreeError::UnexpectedToken(
                    node.token.clone().unwrap_or_default(),
                )),
                (false, false) => node.children.iter().try_for_each(check),
            }
        }
        check(&root)?;
        Ok(ParseTree { root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    /// Number of nodes, leaves included.
    pub fn size(&self) -> usize {
        self.preorder().count()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.preorder().map(|(n, _)| n).filter(|n| n.is_leaf())
    }

    /// Surface tokens in sentence order.
    pub fn tokens(&self) -> Vec<&str> {
        self.leaves().filter_map(|n| n.token.as_deref()).collect()
    }

    /// Maximum depth of any node (root = 0).
    pub fn height(&self) -> usize {
        self.preorder().map(|(_, d)| d).max().unwrap_or(0)
    }

    /// Depth-first, left-to-right traversal yielding `(node, depth)`.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder {
            stack: vec![(&self.root, 0)],
        }
    }

    /// Serializes to single-line bracketed notation without an outer wrapper.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.root.write_bracketed(&mut out);
        out
    }
}

pub struct Preorder<'a> {
    stack: Vec<(&'a Node, usize)>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = (&'a Node, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let (node, depth) = self.stack.pop()?;
        self.stack
            .extend(node.children.iter().rev().map(|c| (c, depth + 1)));
        Some((node, depth))
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

impl FromStr for ParseTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_bracketed(s)
    }
}

impl Serialize for ParseTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bracketed())
    }
}

impl<'de> Deserialize<'de> for ParseTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_bracketed(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(text: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok::Atom(&text[s..i]));
            }
            match c {
                '(' => toks.push(Tok::Open),
                ')' => toks.push(Tok::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok::Atom(&text[s..]));
    }
    toks
}

/// Raw bracket structure before the leaf/internal distinction is enforced.
enum Raw<'a> {
    Bracket {
        label: Option<&'a str>,
        items: Vec<Raw<'a>>,
    },
    Atom(&'a str),
}

struct Reader<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bracket(&mut self) -> Result<Raw<'a>, TreeError> {
        debug_assert_eq!(self.toks.get(self.pos), Some(&Tok::Open));
        self.pos += 1;
        let label = match self.toks.get(self.pos) {
            Some(Tok::Atom(a)) => {
                self.pos += 1;
                Some(*a)
            }
            _ => None,
        };
        let mut items = Vec::new();
        loop {
            match self.toks.get(self.pos) {
                None => return Err(TreeError::UnbalancedBrackets),
                Some(Tok::Close) => {
                    self.pos += 1;
                    return Ok(Raw::Bracket { label, items });
                }
                Some(Tok::Open) => items.push(self.bracket()?),
                Some(Tok::Atom(a)) => {
                    items.push(Raw::Atom(a));
                    self.pos += 1;
                }
            }
        }
    }
}

fn build(raw: Raw<'_>) -> Result<Node, TreeError> {
    let Raw::Bracket { label, items } = raw else {
        unreachable!("atoms are consumed by their parent bracket")
    };
    let Some(label) = label else {
        // "( (S ...) )": a bare wrapper around exactly one constituent.
        return match items.len() {
            1 if matches!(items[0], Raw::Bracket { .. }) => {
                build(items.into_iter().next().expect("one item"))
            }
            _ => Err(TreeError::LabellessNode),
        };
    };
    match items.as_slice() {
        [] => Err(TreeError::MissingToken(label.to_string())),
        [Raw::Atom(token)] => Ok(Node::leaf(label, *token)),
        _ => {
            let mut children = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    Raw::Atom(a) => return Err(TreeError::UnexpectedToken(a.to_string())),
                    bracket => children.push(build(bracket)?),
                }
            }
            Ok(Node::internal(label, children))
        }
    }
}

/// Parses a single bracketed tree.
pub fn parse_bracketed(text: &str) -> Result<ParseTree, TreeError> {
    let toks = lex(text);
    match toks.first() {
        None => return Err(TreeError::EmptyInput),
        Some(Tok::Open) => {}
        Some(Tok::Close) => return Err(TreeError::UnbalancedBrackets),
        Some(Tok::Atom(a)) => return Err(TreeError::UnexpectedToken(a.to_string())),
    }
    let mut reader = Reader { toks, pos: 0 };
    let raw = reader.bracket()?;
    match reader.toks.get(reader.pos) {
        None => {}
        Some(Tok::Close) => return Err(TreeError::UnbalancedBrackets),
        Some(Tok::Open) => return Err(TreeError::TrailingInput),
        Some(Tok::Atom(a)) => return Err(TreeError::UnexpectedToken(a.to_string())),
    }
    Ok(ParseTree { root: build(raw)? })
}
