//! PENMAN-notation semantic graphs.
//!
//! Graphs are parsed from the usual sembank layout (optional `# ::key value`
//! metadata lines followed by one parenthesized expression), serialized back
//! to PENMAN, and mined for `(key, value)` predicates.

mod extract;
mod parse;
mod serialize;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

pub use extract::{extract_predicates, ExtractionRules, Predicate, PredicateError};
pub use parse::{parse_penman, parse_sembank};
pub use serialize::serialize_penman;

/// Target of an edge: another node (by variable) or a constant token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Node(String),
    /// Raw constant text as written, quotes included for string literals.
    Constant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: String,
    pub role: String,
    pub target: Target,
}

/// A rooted, labeled, directed graph.
///
/// Node order is the order of first binding in the source text and is kept so
/// that serialization is stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrGraph {
    root: String,
    nodes: Vec<(String, String)>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    metadata: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("root `{0}` is not a node")]
    MissingRoot(String),
    #[error("edge endpoint `{0}` is not a node")]
    DanglingEndpoint(String),
    #[error("node `{0}` is not reachable from the root")]
    Unreachable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnbalancedParens,
    DuplicateVariable,
    DanglingReference,
    UnterminatedString,
    UnexpectedToken,
    TrailingInput,
}

/// Parse failure with a 1-based line/column location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

type Signature = (String, BTreeMap<String, usize>, BTreeMap<(String, String, String), usize>);

impl AmrGraph {
    /// Builds a graph and checks the structural invariants.
    pub fn new(
        root: impl Into<String>,
        nodes: Vec<(String, String)>,
        edges: Vec<Edge>,
        metadata: Vec<(String, String)>,
    ) -> Result<Self, GraphError> {
        let root = root.into();
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, (var, _)) in nodes.iter().enumerate() {
            if index.insert(var.clone(), i).is_some() {
                return Err(GraphError::DuplicateVariable(var.clone()));
            }
        }
        if !index.contains_key(&root) {
            return Err(GraphError::MissingRoot(root));
        }
        for e in &edges {
            if !index.contains_key(&e.source) {
                return Err(GraphError::DanglingEndpoint(e.source.clone()));
            }
            if let Target::Node(v) = &e.target {
                if !index.contains_key(v) {
                    return Err(GraphError::DanglingEndpoint(v.clone()));
                }
            }
        }
        Ok(Self {
            root,
            nodes,
            index,
            edges,
            metadata,
        })
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    /// `(variable, concept)` pairs in binding order.
    pub fn nodes(&self) -> &[(String, String)] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// First metadata value for `key` (e.g. `"snt"` or `"id"`).
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.index.get(var).map(|&i| self.nodes[i].1.as_str())
    }

    pub fn contains(&self, var: &str) -> bool {
        self.index.contains_key(var)
    }

    /// Returns a copy with the edge list replaced (same nodes, root, metadata).
    pub fn with_edges(&self, edges: Vec<Edge>) -> Result<Self, GraphError> {
        Self::new(
            self.root.clone(),
            self.nodes.clone(),
            edges,
            self.metadata.clone(),
        )
    }

    pub(crate) fn outgoing(&self) -> HashMap<&str, Vec<&Edge>> {
        let mut out: HashMap<&str, Vec<&Edge>> = HashMap::new();
        for e in &self.edges {
            out.entry(e.source.as_str()).or_default().push(e);
        }
        out
    }

    fn target_label<'a>(&'a self, t: &'a Target) -> &'a str {
        match t {
            Target::Node(v) => self.concept(v).unwrap_or(v),
            Target::Constant(c) => c,
        }
    }

    /// Variable-independent signature: root concept, concept multiset and
    /// `(source concept, role, target label)` edge multiset.
    fn signature(&self) -> Signature {
        let mut concepts = BTreeMap::new();
        for (_, c) in &self.nodes {
            *concepts.entry(c.clone()).or_insert(0) += 1;
        }
        let mut edges = BTreeMap::new();
        for e in &self.edges {
            let key = (
                self.concept(&e.source).unwrap_or_default().to_string(),
                e.role.clone(),
                self.target_label(&e.target).to_string(),
            );
            *edges.entry(key).or_insert(0) += 1;
        }
        let root = self.concept(&self.root).unwrap_or_default().to_string();
        (root, concepts, edges)
    }

    /// Isomorphism check on labels: equal root concept, equal concept
    /// multiset and equal labeled-edge multiset. Variable names are ignored.
    pub fn is_isomorphic(&self, other: &AmrGraph) -> bool {
        self.signature() == other.signature()
    }
}

impl fmt::Display for AmrGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match serialize_penman(self) {
            Ok(s) => f.write_str(&s),
            Err(e) => write!(f, "<unserializable graph: {e}>"),
        }
    }
}
