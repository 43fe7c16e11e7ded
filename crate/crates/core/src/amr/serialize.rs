use std::collections::HashSet;
use std::fmt::Write;

use super::{AmrGraph, GraphError, Target};

const INDENT: &str = "    ";

/// Writes `g` as PENMAN text, metadata lines first.
///
/// Each node is written in full at its first mention (depth-first, edge-list
/// order); later mentions use the bare variable. Nodes that cannot be reached
/// from the root have no place in the tree and are reported.
pub fn serialize_penman(g: &AmrGraph) -> Result<String, GraphError> {
    let outgoing = g.outgoing();
    let mut out = String::new();
    for (k, v) in g.metadata() {
        if v.is_empty() {
            let _ = writeln!(out, "# ::{k}");
        } else {
            let _ = writeln!(out, "# ::{k} {v}");
        }
    }

    let mut visited: HashSet<&str> = HashSet::new();
    let root = g.root();
    let _ = write!(out, "({} / {}", root, g.concept(root).unwrap_or_default());
    visited.insert(root);
    // (variable, index of next outgoing edge to write)
    let mut stack: Vec<(&str, usize)> = vec![(root, 0)];

    while let Some(top) = stack.last_mut() {
        let (var, cursor) = *top;
        let edges = outgoing.get(var).map(Vec::as_slice).unwrap_or(&[]);
        if cursor >= edges.len() {
            out.push(')');
            stack.pop();
            continue;
        }
        top.1 += 1;
        let edge = edges[cursor];
        out.push('\n');
        for _ in 0..stack.len() {
            out.push_str(INDENT);
        }
        let _ = write!(out, ":{} ", edge.role);
        match &edge.target {
            Target::Constant(c) => out.push_str(c),
            Target::Node(v) => {
                if visited.contains(v.as_str()) {
                    out.push_str(v);
                } else {
                    visited.insert(v.as_str());
                    let _ = write!(out, "({} / {}", v, g.concept(v).unwrap_or_default());
                    stack.push((v.as_str(), 0));
                }
            }
        }
    }

    if let Some((var, _)) = g.nodes().iter().find(|(v, _)| !visited.contains(v.as_str())) {
        return Err(GraphError::Unreachable(var.clone()));
    }
    Ok(out)
}
