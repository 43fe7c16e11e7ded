//! Highest-weight predicates per class, for explaining a trained model.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

use crate::lnn::{LnnError, LnnModel};
use crate::store::PredicateUniverse;
use crate::textio::{format_sci17, header_line};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InsightError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Model(#[from] LnnError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsightEntry {
    /// 1-based.
    pub rank: usize,
    pub predicate: String,
    /// Stored gate weight, verbatim.
    pub weight: f64,
    /// Sessions of this class where the predicate was TRUE.
    pub class_frequency: usize,
    pub example: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassInsights {
    pub class: String,
    pub entries: Vec<InsightEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsightReport {
    pub k: usize,
    /// `k` exceeded the number of predicates, so lists are shorter than `k`.
    pub truncated: bool,
    pub classes: Vec<ClassInsights>,
}

/// Per gate, the `k` largest weights; ties go to the smaller name.
/// `examples` maps predicate names to a sentence where they occur.
pub fn top_k_predicates(
    model: &LnnModel,
    universe: &PredicateUniverse,
    k: usize,
    examples: Option<&HashMap<String, String>>,
) -> Result<InsightReport, InsightError> {
    if k == 0 {
        return Err(InsightError::ZeroK);
    }
    model.check_universe(universe)?;
    let names = model.predicate_names();
    let classes = model
        .gates()
        .iter()
        .map(|g| {
            let mut ids: Vec<usize> = (0..names.len()).collect();
            ids.sort_by(|&a, &b| {
                g.weights()[b]
                    .total_cmp(&g.weights()[a])
                    .then_with(|| names[a].cmp(&names[b]))
            });
            let entries = ids
                .into_iter()
                .take(k)
                .enumerate()
                .map(|(r, id)| InsightEntry {
                    rank: r + 1,
                    predicate: names[id].clone(),
                    weight: g.weights()[id],
                    class_frequency: universe.class_frequency(id, g.class()),
                    example: examples.and_then(|e| e.get(&names[id]).cloned()),
                })
                .collect();
            ClassInsights {
                class: g.class().to_string(),
                entries,
            }
        })
        .collect();
    Ok(InsightReport {
        k,
        truncated: k > names.len(),
        classes,
    })
}

impl InsightReport {
    /// `#plc-insights/1 k=<k> truncated=<bool>`, then
    /// `class rank predicate weight freq` rows.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let fields = [format!("k={}", self.k), format!("truncated={}", self.truncated)];
        writeln!(w, "{}", header_line("insights", &fields))?;
        writeln!(w, "class\trank\tpredicate\tweight\tfreq")?;
        for c in &self.classes {
            for e in &c.entries {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}",
                    c.class,
                    e.rank,
                    e.predicate,
                    format_sci17(e.weight),
                    e.class_frequency
                )?;
            }
        }
        Ok(())
    }

    /// Human-readable listing; examples are clipped to a short prefix.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for c in &self.classes {
            let _ = writeln!(s, "{} (top {}):", c.class, c.entries.len());
            for e in &c.entries {
                let _ = write!(
                    s,
                    "  {:>3}. {:<40} w={:.4} sessions={}",
                    e.rank, e.predicate, e.weight, e.class_frequency
                );
                if let Some(ex) = &e.example {
                    let _ = write!(s, "  \"{}\"", clip(ex, EXAMPLE_CHARS));
                }
                s.push('\n');
            }
        }
        if self.truncated {
            let _ = writeln!(s, "(k = {} exceeds the number of predicates)", self.k);
        }
        s
    }
}

const EXAMPLE_CHARS: usize = 60;

fn clip(s: &str, n: usize) -> String {
    match s.char_indices().nth(n) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}
