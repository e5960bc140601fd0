//! Join plan trees and their postfix (RPN) form.
//!
//! A [`PlanTree`] keeps its nodes in an arena and links children by
//! [`NodeId`], so arbitrarily deep trees can be built, compared, printed and
//! dropped without recursion. [`PlanTree::to_rpn`] is an explicit-stack
//! post-order traversal; [`rpn_to_plan`] rebuilds a tree from a program.
//!
//! Text forms:
//!
//! ```text
//! plan:  expr := term { "JOIN" term } ;  term := IDENT | "(" expr ")"
//! rpn:   whitespace-separated IDENT operands and JOIN operators
//! ```
//!
//! `JOIN` is left-associative and `⋈` is accepted wherever `JOIN` is.
//! Identifiers are ASCII letters, digits and `_`, starting with a letter.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanNode {
    Leaf(String),
    Join { left: NodeId, right: NodeId },
}

/// A binary join tree: leaves name catalog relations, internal nodes join
/// their two children on the key.
#[derive(Debug, Clone)]
pub struct PlanTree {
    nodes: Vec<PlanNode>,
    root: NodeId,
}

impl PlanTree {
    pub fn leaf(name: impl Into<String>) -> Self {
        Self {
            nodes: vec![PlanNode::Leaf(name.into())],
            root: NodeId(0),
        }
    }

    /// Joins two trees under a new root. Copies both arenas, so prefer the
    /// shape generators or [`rpn_to_plan`] for large trees.
    pub fn join(left: PlanTree, right: PlanTree) -> Self {
        let offset = left.nodes.len();
        let mut nodes = left.nodes;
        nodes.extend(right.nodes.into_iter().map(|node| match node {
            PlanNode::Join { left, right } => PlanNode::Join {
                left: NodeId(left.0 + offset),
                right: NodeId(right.0 + offset),
            },
            leaf => leaf,
        }));
        let root = NodeId(nodes.len());
        nodes.push(PlanNode::Join {
            left: left.root,
            right: NodeId(right.root.0 + offset),
        });
        Self { nodes, root }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &PlanNode {
        &self.nodes[id.0]
    }

    /// Total number of nodes, `2·leaves − 1`.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, PlanNode::Leaf(_)))
            .count()
    }

    /// Node ids in post-order: left subtree, right subtree, then the node.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        // (node, children already scheduled)
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            match self.node(id) {
                PlanNode::Join { left, right } if !expanded => {
                    stack.push((id, true));
                    stack.push((*right, false));
                    stack.push((*left, false));
                }
                _ => order.push(id),
            }
        }
        order
    }

    pub fn to_rpn(&self) -> RpnProgram {
        RpnProgram(
            self.postorder()
                .into_iter()
                .map(|id| match self.node(id) {
                    PlanNode::Leaf(name) => RpnToken::Operand(name.clone()),
                    PlanNode::Join { .. } => RpnToken::Join,
                })
                .collect(),
        )
    }

    /// Leaf names from left to right.
    pub fn leaf_names(&self) -> Vec<&str> {
        self.postorder()
            .into_iter()
            .filter_map(|id| match self.node(id) {
                PlanNode::Leaf(name) => Some(name.as_str()),
                PlanNode::Join { .. } => None,
            })
            .collect()
    }

    /// Edges on the longest root-to-leaf path; a bare leaf has height 0.
    pub fn height(&self) -> usize {
        let mut heights = vec![0usize; self.nodes.len()];
        for id in self.postorder() {
            if let PlanNode::Join { left, right } = self.node(id) {
                heights[id.0] = 1 + heights[left.0].max(heights[right.0]);
            }
        }
        heights[self.root.0]
    }
}

/// Structural equality, independent of arena layout.
impl PartialEq for PlanTree {
    fn eq(&self, other: &Self) -> bool {
        let mut pending = vec![(self.root, other.root)];
        while let Some((a, b)) = pending.pop() {
            match (self.node(a), other.node(b)) {
                (PlanNode::Leaf(x), PlanNode::Leaf(y)) if x == y => {}
                (
                    PlanNode::Join {
                        left: la,
                        right: ra,
                    },
                    PlanNode::Join {
                        left: lb,
                        right: rb,
                    },
                ) => {
                    pending.push((*la, *lb));
                    pending.push((*ra, *rb));
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for PlanTree {}

/// Fully parenthesized infix text, e.g. `((R1 JOIN R2) JOIN R3)`.
impl fmt::Display for PlanTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        enum Frame {
            Node(NodeId),
            Text(&'static str),
        }
        let mut stack = vec![Frame::Node(self.root)];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Text(text) => f.write_str(text)?,
                Frame::Node(id) => match self.node(id) {
                    PlanNode::Leaf(name) => f.write_str(name)?,
                    PlanNode::Join { left, right } => {
                        f.write_str("(")?;
                        stack.push(Frame::Text(")"));
                        stack.push(Frame::Node(*right));
                        stack.push(Frame::Text(" JOIN "));
                        stack.push(Frame::Node(*left));
                    }
                },
            }
        }
        Ok(())
    }
}

impl FromStr for PlanTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_plan(s)
    }
}

pub fn plan_to_text(plan: &PlanTree) -> String {
    plan.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RpnToken {
    Operand(String),
    Join,
}

/// A plan in postfix order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RpnProgram(pub Vec<RpnToken>);

impl RpnProgram {
    pub fn tokens(&self) -> &[RpnToken] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join_count(&self) -> usize {
        self.0.iter().filter(|t| **t == RpnToken::Join).count()
    }

    /// Simulates the operand stack and returns its peak depth. Fails if a
    /// JOIN finds fewer than two operands or the scan ends with anything
    /// other than one.
    pub fn check(&self) -> Result<usize> {
        if self.0.is_empty() {
            return Err(Error::EmptyProgram);
        }
        let (mut depth, mut peak) = (0usize, 0usize);
        for (position, token) in self.0.iter().enumerate() {
            match token {
                RpnToken::Operand(_) => {
                    depth += 1;
                    peak = peak.max(depth);
                }
                RpnToken::Join if depth < 2 => return Err(Error::StackUnderflow { position }),
                RpnToken::Join => depth -= 1,
            }
        }
        if depth != 1 {
            return Err(Error::LeftoverOperands { count: depth });
        }
        Ok(peak)
    }
}

impl fmt::Display for RpnProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, token) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match token {
                RpnToken::Operand(name) => f.write_str(name)?,
                RpnToken::Join => f.write_str("JOIN")?,
            }
        }
        Ok(())
    }
}

/// Tokenizes RPN text. Structure is not checked here; see [`RpnProgram::check`].
impl FromStr for RpnProgram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        lex(s)?
            .into_iter()
            .map(|(lexeme, column)| match lexeme {
                Lexeme::Ident(name) => Ok(RpnToken::Operand(name)),
                Lexeme::Join => Ok(RpnToken::Join),
                Lexeme::LParen | Lexeme::RParen => Err(Error::Syntax {
                    column,
                    message: "parentheses are not allowed in RPN text".into(),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(RpnProgram)
    }
}

pub fn rpn_to_text(program: &RpnProgram) -> String {
    program.to_string()
}

pub fn parse_rpn(text: &str) -> Result<RpnProgram> {
    text.parse()
}

/// Rebuilds the tree a well-formed program encodes.
pub fn rpn_to_plan(program: &RpnProgram) -> Result<PlanTree> {
    let mut nodes = Vec::with_capacity(program.len());
    let mut stack: Vec<NodeId> = Vec::new();
    for (position, token) in program.tokens().iter().enumerate() {
        let node = match token {
            RpnToken::Operand(name) => PlanNode::Leaf(name.clone()),
            RpnToken::Join => {
                let (Some(right), Some(left)) = (stack.pop(), stack.pop()) else {
                    return Err(Error::StackUnderflow { position });
                };
                PlanNode::Join { left, right }
            }
        };
        stack.push(NodeId(nodes.len()));
        nodes.push(node);
    }
    match stack.len() {
        1 => Ok(PlanTree {
            nodes,
            root: stack[0],
        }),
        0 => Err(Error::EmptyProgram),
        count => Err(Error::LeftoverOperands { count }),
    }
}

/// Left-deep chain `((…(n1 ⋈ n2) ⋈ n3) …) ⋈ nk`; each join result feeds only
/// the next join.
pub fn make_linear_plan<S: AsRef<str>>(names: &[S]) -> Result<PlanTree> {
    let (first, rest) = names.split_first().ok_or(Error::NoRelations)?;
    let mut nodes = Vec::with_capacity(2 * names.len() - 1);
    nodes.push(PlanNode::Leaf(first.as_ref().to_owned()));
    let mut acc = NodeId(0);
    for name in rest {
        let leaf = NodeId(nodes.len());
        nodes.push(PlanNode::Leaf(name.as_ref().to_owned()));
        nodes.push(PlanNode::Join {
            left: acc,
            right: leaf,
        });
        acc = NodeId(nodes.len() - 1);
    }
    Ok(PlanTree { nodes, root: acc })
}

/// Bushy tree by bottom-up pairing: adjacent leaves are joined pairwise, then
/// adjacent results, until one root is left. An odd trailing node is carried
/// to the next level unchanged.
pub fn make_bushy_plan<S: AsRef<str>>(names: &[S]) -> Result<PlanTree> {
    if names.is_empty() {
        return Err(Error::NoRelations);
    }
    let mut nodes: Vec<PlanNode> = names
        .iter()
        .map(|n| PlanNode::Leaf(n.as_ref().to_owned()))
        .collect();
    let mut level: Vec<NodeId> = (0..nodes.len()).map(NodeId).collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            match *pair {
                [left, right] => {
                    next.push(NodeId(nodes.len()));
                    nodes.push(PlanNode::Join { left, right });
                }
                [odd] => next.push(odd),
                _ => unreachable!(),
            }
        }
        level = next;
    }
    Ok(PlanTree {
        nodes,
        root: level[0],
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Lexeme {
    Ident(String),
    Join,
    LParen,
    RParen,
}

/// Splits text into lexemes paired with their 1-based character column.
fn lex(text: &str) -> Result<Vec<(Lexeme, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut lexemes = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let column = i + 1;
        match chars[i] {
            c if c.is_whitespace() => i += 1,
            '(' => {
                lexemes.push((Lexeme::LParen, column));
                i += 1;
            }
            ')' => {
                lexemes.push((Lexeme::RParen, column));
                i += 1;
            }
            '⋈' => {
                lexemes.push((Lexeme::Join, column));
                i += 1;
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                if !c.is_ascii_alphabetic() {
                    return Err(Error::Syntax {
                        column,
                        message: "relation names must start with a letter".into(),
                    });
                }
                let word: String = chars[start..i].iter().collect();
                if word == "JOIN" {
                    lexemes.push((Lexeme::Join, column));
                } else {
                    lexemes.push((Lexeme::Ident(word), column));
                }
            }
            c => {
                return Err(Error::Syntax {
                    column,
                    message: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(lexemes)
}

/// Parses infix plan text with a shunting-yard pass into postfix, then
/// rebuilds the tree. No recursion, so nesting depth is unbounded.
pub fn parse_plan(text: &str) -> Result<PlanTree> {
    enum Pending {
        Join,
        Open(usize),
    }

    let lexemes = lex(text)?;
    if lexemes.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let syntax = |column: usize, message: &str| Error::Syntax {
        column,
        message: message.to_owned(),
    };

    let mut output = Vec::new();
    let mut pending: Vec<Pending> = Vec::new();
    let mut expect_operand = true;
    for (lexeme, column) in lexemes {
        match lexeme {
            Lexeme::Ident(name) => {
                if !expect_operand {
                    return Err(syntax(column, "expected JOIN or ')'"));
                }
                output.push(RpnToken::Operand(name));
                expect_operand = false;
            }
            Lexeme::LParen => {
                if !expect_operand {
                    return Err(syntax(column, "expected JOIN or ')'"));
                }
                pending.push(Pending::Open(column));
            }
            Lexeme::Join => {
                if expect_operand {
                    return Err(syntax(column, "expected a relation name or '('"));
                }
                // Left associativity: an earlier JOIN at this level binds first.
                while let Some(Pending::Join) = pending.last() {
                    pending.pop();
                    output.push(RpnToken::Join);
                }
                pending.push(Pending::Join);
                expect_operand = true;
            }
            Lexeme::RParen => {
                if expect_operand {
                    return Err(syntax(column, "expected a relation name or '('"));
                }
                loop {
                    match pending.pop() {
                        Some(Pending::Join) => output.push(RpnToken::Join),
                        Some(Pending::Open(_)) => break,
                        None => return Err(syntax(column, "unmatched ')'")),
                    }
                }
            }
        }
    }
    if expect_operand {
        return Err(syntax(
            text.chars().count() + 1,
            "unexpected end of input, expected a relation name or '('",
        ));
    }
    while let Some(op) = pending.pop() {
        match op {
            Pending::Join => output.push(RpnToken::Join),
            Pending::Open(column) => return Err(syntax(column, "unclosed '('")),
        }
    }
    rpn_to_plan(&RpnProgram(output))
}
