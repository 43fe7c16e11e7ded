use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::{AmrGraph, Edge, Target};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredicateError {
    #[error("predicate key is empty")]
    EmptyKey,
    #[error("predicate value is empty")]
    EmptyValue,
    #[error("predicate value `{0}` contains `_`")]
    UnderscoreInValue(String),
    #[error("predicate field `{0}` contains a tab or newline")]
    ControlCharacter(String),
    #[error("predicate name `{0}` has no `_` separator")]
    MalformedName(String),
}

/// A `(key, value)` pair such as `("have", "downs")`, named `have_downs`.
///
/// Values never contain `_`, so the name splits back at its last underscore
/// even when the key itself contains one (`HAS_POSSESSION_your medication`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    key: String,
    value: String,
}

impl Predicate {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Result<Self, PredicateError> {
        let key = key.into();
        let value = value.into();
        if key.is_empty() {
            return Err(PredicateError::EmptyKey);
        }
        if value.is_empty() {
            return Err(PredicateError::EmptyValue);
        }
        if value.contains('_') {
            return Err(PredicateError::UnderscoreInValue(value));
        }
        for field in [&key, &value] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(PredicateError::ControlCharacter(field.clone()));
            }
        }
        Ok(Self { key, value })
    }

    pub fn from_name(name: &str) -> Result<Self, PredicateError> {
        let (key, value) = name
            .rsplit_once('_')
            .ok_or_else(|| PredicateError::MalformedName(name.to_string()))?;
        Self::new(key, value)
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn name(&self) -> String {
        format!("{}_{}", self.key, self.value)
    }

    /// Whitespace-separated tokens of the value.
    pub fn value_tokens(&self) -> impl Iterator<Item = &str> {
        self.value.split(' ')
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.key, self.value)
    }
}

/// Graph-to-predicate mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionRules {
    /// Relation label (without `:`) to predicate key.
    pub relation_keys: BTreeMap<String, String>,
    /// Strip the `-NN` sense suffix from frame concepts (`have-01` -> `have`).
    pub strip_sense: bool,
    pub max_value_tokens: usize,
    /// Roles of a frame node whose subtrees become values.
    pub core_args: BTreeSet<String>,
}

impl Default for ExtractionRules {
    fn default() -> Self {
        let relation_keys = [("poss", "HAS_POSSESSION"), ("manner", "HAS_MANNER")]
            .into_iter()
            .map(|(r, k)| (r.to_string(), k.to_string()))
            .collect();
        let core_args = (0..=4).map(|i| format!("ARG{i}")).collect();
        Self {
            relation_keys,
            strip_sense: true,
            max_value_tokens: 6,
            core_args,
        }
    }
}

impl ExtractionRules {
    pub fn validate(&self) -> Result<(), String> {
        if self.relation_keys.is_empty() {
            return Err("relation keys must not be empty".into());
        }
        if self.max_value_tokens == 0 {
            return Err("max value tokens must be at least 1".into());
        }
        if self.relation_keys.values().any(|k| normalize_key(k).is_empty()) {
            return Err("relation keys must map to non-empty names".into());
        }
        Ok(())
    }
}

/// `have-01` -> `Some("have")`; concepts without a two-digit sense suffix -> `None`.
pub(crate) fn frame_name(concept: &str) -> Option<&str> {
    let bytes = concept.as_bytes();
    let n = bytes.len();
    if n >= 4 && bytes[n - 3] == b'-' && bytes[n - 2].is_ascii_digit() && bytes[n - 1].is_ascii_digit() {
        Some(&concept[..n - 3])
    } else {
        None
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(s)
}

fn normalize_key(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercased whitespace-separated tokens; `_` counts as whitespace.
fn tokens_of(label: &str) -> Vec<String> {
    label
        .to_lowercase()
        .replace('_', " ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Role ordering that puts `op2` before `op10`.
fn role_key(role: &str) -> (&str, u64) {
    let split = role.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let num = role[split..].parse().unwrap_or(0);
    (&role[..split], num)
}

struct PhraseBuilder<'g> {
    graph: &'g AmrGraph,
    outgoing: HashMap<&'g str, Vec<&'g Edge>>,
    rules: &'g ExtractionRules,
}

impl<'g> PhraseBuilder<'g> {
    fn concept_tokens(&self, concept: &str) -> Vec<String> {
        let concept = unquote(concept);
        let concept = match (self.rules.strip_sense, frame_name(concept)) {
            (true, Some(name)) => name,
            _ => concept,
        };
        tokens_of(concept)
    }

    fn target_phrase(&self, target: &Target, path: &mut Vec<&'g str>, budget: usize) -> Vec<String> {
        match target {
            Target::Constant(c) => {
                let mut t = tokens_of(unquote(c));
                t.truncate(budget);
                t
            }
            Target::Node(v) => self.node_phrase(v, path, budget),
        }
    }

    /// Depth-first concatenation of concepts under `var`, at most `budget`
    /// tokens. Children are visited in role order, then by their own phrase,
    /// so the result does not depend on edge-list order. A node already on
    /// the current path contributes its concept but is not expanded again.
    fn node_phrase(&self, var: &str, path: &mut Vec<&'g str>, budget: usize) -> Vec<String> {
        if budget == 0 {
            return Vec::new();
        }
        let Some((var, concept)) = self.graph.index.get(var).map(|&i| &self.graph.nodes[i]) else {
            return Vec::new();
        };
        let mut tokens = self.concept_tokens(concept);
        tokens.truncate(budget);
        if path.contains(&var.as_str()) {
            return tokens;
        }
        // every level consumes at least one unit so recursion depth <= budget
        let child_budget = budget - tokens.len().max(1);
        if child_budget == 0 {
            return tokens;
        }
        path.push(var.as_str());
        let mut children: Vec<(&str, Vec<String>)> = self
            .outgoing
            .get(var.as_str())
            .map(|edges| {
                edges
                    .iter()
                    .map(|e| (e.role.as_str(), self.target_phrase(&e.target, path, child_budget)))
                    .collect()
            })
            .unwrap_or_default();
        path.pop();
        children.sort_by(|a, b| role_key(a.0).cmp(&role_key(b.0)).then_with(|| a.1.cmp(&b.1)));
        for (_, phrase) in children {
            let room = budget - tokens.len();
            if room == 0 {
                break;
            }
            tokens.extend(phrase.into_iter().take(room));
        }
        tokens
    }

    fn phrase(&self, target: &Target) -> Option<String> {
        let tokens = self.target_phrase(target, &mut Vec::new(), self.rules.max_value_tokens);
        if tokens.is_empty() {
            None
        } else {
            Some(tokens.join(" "))
        }
    }
}

/// Mines `(key, value)` predicates from a graph.
///
/// * every edge whose role is in `relation_keys` yields `(mapped key, phrase
///   of the target subtree)`;
/// * every frame node (`name-NN`) yields `(frame name, phrase)` for each of
///   its core-argument edges.
pub fn extract_predicates(g: &AmrGraph, rules: &ExtractionRules) -> BTreeSet<Predicate> {
    let builder = PhraseBuilder {
        graph: g,
        outgoing: g.outgoing(),
        rules,
    };
    let mut out = BTreeSet::new();
    let mut push = |key: &str, target: &Target| {
        let key = normalize_key(key);
        if let Some(value) = builder.phrase(target) {
            if let Ok(p) = Predicate::new(key, value) {
                out.insert(p);
            }
        }
    };

    for e in g.edges() {
        if let Some(key) = rules.relation_keys.get(&e.role) {
            push(key, &e.target);
        }
    }
    for (var, concept) in g.nodes() {
        let concept = unquote(concept);
        let Some(name) = frame_name(concept) else {
            continue;
        };
        let key = if rules.strip_sense { name } else { concept };
        if let Some(edges) = builder.outgoing.get(var.as_str()) {
            for e in edges {
                if rules.core_args.contains(&e.role) {
                    push(key, &e.target);
                }
            }
        }
    }
    out
}
