//! Predicate pruning: similarity grouping, session-frequency bands,
//! class exclusivity and per-class balancing.
//!
//! Every stage takes the universe (whose provenance drives the decisions)
//! and returns the ids it keeps plus a report. Stages compose through
//! [`run_chain`]; [`apply_pruning`] turns the result into a restricted
//! grounding table.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::exec::Exec;
use crate::store::{restrict_table, GroundingTable, PredicateUniverse, StoreError};
use crate::textio::header_line;

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("prune chain is empty")]
    EmptyChain,
    #[error("invalid prune config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Which session frequencies `F` a predicate must have to be kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyRule {
    /// `F > n`
    GreaterThan(usize),
    /// `F = n`
    Equals(usize),
    /// `lo < F < hi`
    Between(usize, usize),
}

impl FrequencyRule {
    pub fn accepts(&self, f: usize) -> bool {
        match *self {
            FrequencyRule::GreaterThan(n) => f > n,
            FrequencyRule::Equals(n) => f == n,
            FrequencyRule::Between(lo, hi) => lo < f && f < hi,
        }
    }

    pub fn validate(&self) -> Result<(), PruneError> {
        match *self {
            FrequencyRule::Between(lo, hi) if lo >= hi => {
                Err(PruneError::InvalidConfig(format!("range {lo}<F<{hi} is empty")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FrequencyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FrequencyRule::GreaterThan(n) => write!(f, "F>{n}"),
            FrequencyRule::Equals(n) => write!(f, "F={n}"),
            FrequencyRule::Between(lo, hi) => write!(f, "{lo}<F<{hi}"),
        }
    }
}

impl FromStr for FrequencyRule {
    type Err = PruneError;

    /// Accepts `F>5`, `>5`, `F=2`, `=2` and `2<F<10`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || PruneError::InvalidConfig(format!("cannot parse frequency rule `{s}`"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let rule = if let Some((lo, hi)) = s.split_once("<F<") {
            FrequencyRule::Between(num(lo)?, num(hi)?)
        } else {
            let t = s.strip_prefix('F').unwrap_or(&s);
            if let Some(n) = t.strip_prefix('>') {
                FrequencyRule::GreaterThan(num(n)?)
            } else if let Some(n) = t.strip_prefix('=') {
                FrequencyRule::Equals(num(n)?)
            } else {
                return Err(bad());
            }
        };
        rule.validate()?;
        Ok(rule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Similarity,
    Frequency,
    Exclusive,
}

impl FromStr for Stage {
    type Err = PruneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "similarity" => Ok(Stage::Similarity),
            "frequency" => Ok(Stage::Frequency),
            "exclusive" => Ok(Stage::Exclusive),
            other => Err(PruneError::InvalidConfig(format!("unknown stage `{other}`"))),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Similarity => "similarity",
            Stage::Frequency => "frequency",
            Stage::Exclusive => "exclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneConfig {
    pub frequency: FrequencyRule,
    /// Per-class target predicate count applied after the chain.
    pub balanced: Option<usize>,
    pub chain: Vec<Stage>,
}

impl Default for PruneConfig {
    /// similarity, then `F>1`, then exclusive.
    fn default() -> Self {
        Self {
            frequency: FrequencyRule::GreaterThan(1),
            balanced: None,
            chain: vec![Stage::Similarity, Stage::Frequency, Stage::Exclusive],
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<(), PruneError> {
        if self.chain.is_empty() {
            return Err(PruneError::EmptyChain);
        }
        self.frequency.validate()?;
        if self.balanced == Some(0) {
            return Err(PruneError::InvalidConfig("balanced target must be >= 1".into()));
        }
        Ok(())
    }
}

/// Why a predicate left the kept set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Removal {
    /// Grouped under this representative id.
    MergedInto(usize),
    /// Session frequency outside the configured band.
    Frequency(usize),
    /// Supported by this many classes (not exactly one).
    NotExclusive(usize),
    /// Dropped to meet the per-class target.
    Balanced,
}

impl fmt::Display for Removal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Removal::MergedInto(rep) => write!(f, "rep:{rep}"),
            Removal::Frequency(n) => write!(f, "frequency:{n}"),
            Removal::NotExclusive(n) => write!(f, "classes:{n}"),
            Removal::Balanced => f.write_str("balanced"),
        }
    }
}

/// Counts for one stage. Predicates are attributed to their majority class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSummary {
    pub stage: String,
    pub input: usize,
    pub output: usize,
    pub input_per_class: BTreeMap<String, usize>,
    pub output_per_class: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruneReport {
    pub stages: Vec<StageSummary>,
    /// Removed id -> reason (for similarity, the representative).
    pub removed: BTreeMap<usize, Removal>,
    /// Classes that could not reach the balancing target: class -> count reached.
    pub shortfalls: BTreeMap<String, usize>,
    /// Ids that were restored from the frequency-excluded pool by balancing.
    pub restored: BTreeSet<usize>,
}

impl PruneReport {
    fn extend(&mut self, other: PruneReport) {
        self.stages.extend(other.stages);
        self.removed.extend(other.removed);
        self.shortfalls.extend(other.shortfalls);
        for id in &other.restored {
            self.removed.remove(id);
        }
        self.restored.extend(other.restored);
    }

    /// Stage summary as `stage TAB class TAB input TAB output`; class `*` is the total.
    pub fn write_summary<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", header_line("prune-report", &["stage", "class", "input", "output"]))?;
        for s in &self.stages {
            writeln!(w, "{}\t*\t{}\t{}", s.stage, s.input, s.output)?;
            let classes: BTreeSet<&String> = s.input_per_class.keys().chain(s.output_per_class.keys()).collect();
            for c in classes {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}",
                    s.stage,
                    c,
                    s.input_per_class.get(c).copied().unwrap_or(0),
                    s.output_per_class.get(c).copied().unwrap_or(0)
                )?;
            }
        }
        for (class, n) in &self.shortfalls {
            writeln!(w, "shortfall\t{class}\t\t{n}")?;
        }
        Ok(())
    }

    /// `removed-id TAB reason-or-representative`.
    pub fn write_mapping<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", header_line("prune-mapping", &["removed", "reason"]))?;
        for (id, why) in &self.removed {
            writeln!(w, "{id}\t{why}")?;
        }
        Ok(())
    }
}

/// Kept ids plus the similarity aliases needed to remap groundings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub kept: BTreeSet<usize>,
    /// Alias id -> representative id, from similarity grouping.
    pub aliases: BTreeMap<usize, usize>,
    pub report: PruneReport,
}

/// Majority-class attribution counts over `ids`; unattributed ids count under `""`.
fn per_class(universe: &PredicateUniverse, ids: &BTreeSet<usize>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for &id in ids {
        let class = universe.majority_class(id).unwrap_or("").to_string();
        *m.entry(class).or_insert(0) += 1;
    }
    m
}

fn summary(stage: String, universe: &PredicateUniverse, input: &BTreeSet<usize>, output: &BTreeSet<usize>) -> StageSummary {
    StageSummary {
        stage,
        input: input.len(),
        output: output.len(),
        input_per_class: per_class(universe, input),
        output_per_class: per_class(universe, output),
    }
}

fn all_ids(universe: &PredicateUniverse) -> BTreeSet<usize> {
    (0..universe.len()).collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups predicates of the same key whose values are related by contiguous
/// token containment (transitively); returns alias -> representative. The
/// representative is the member with the most value tokens, ties broken by
/// the lexicographically smallest value.
fn similarity_groups(universe: &PredicateUniverse, alive: &BTreeSet<usize>, exec: Exec) -> BTreeMap<usize, usize> {
    let ids: Vec<usize> = alive.iter().copied().collect();
    let mut by_value: HashMap<(&str, &str), usize> = HashMap::with_capacity(ids.len());
    for (pos, &id) in ids.iter().enumerate() {
        let p = universe.predicate(id);
        by_value.insert((p.key(), p.value()), pos);
    }
    // every contiguous sub-phrase of each value that is itself a live value
    let links: Vec<Vec<usize>> = exec.map(&ids, |&id| {
        let p = universe.predicate(id);
        let toks: Vec<&str> = p.value_tokens().collect();
        let mut out = Vec::new();
        for start in 0..toks.len() {
            for end in start + 1..=toks.len() {
                if end - start == toks.len() {
                    continue;
                }
                let sub = toks[start..end].join(" ");
                if let Some(&other) = by_value.get(&(p.key(), sub.as_str())) {
                    out.push(other);
                }
            }
        }
        out
    });
    let mut uf = UnionFind::new(ids.len());
    for (pos, others) in links.iter().enumerate() {
        for &o in others {
            uf.union(pos, o);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, &id) in ids.iter().enumerate() {
        groups.entry(uf.find(pos)).or_default().push(id);
    }
    let mut aliases = BTreeMap::new();
    for members in groups.values().filter(|m| m.len() > 1) {
        let rep = *members
            .iter()
            .min_by(|&&a, &&b| {
                let (pa, pb) = (universe.predicate(a), universe.predicate(b));
                let (la, lb) = (pa.value_tokens().count(), pb.value_tokens().count());
                lb.cmp(&la).then_with(|| pa.value().cmp(pb.value()))
            })
            .expect("non-empty group");
        for &m in members {
            if m != rep {
                aliases.insert(m, rep);
            }
        }
    }
    aliases
}

fn similarity_stage(universe: &PredicateUniverse, alive: &BTreeSet<usize>, exec: Exec) -> Pruned {
    let aliases = similarity_groups(universe, alive, exec);
    let kept: BTreeSet<usize> = alive.iter().copied().filter(|id| !aliases.contains_key(id)).collect();
    let merged = universe.with_merged_provenance(&aliases);
    let report = PruneReport {
        stages: vec![summary(Stage::Similarity.to_string(), &merged, alive, &kept)],
        removed: aliases.iter().map(|(&a, &r)| (a, Removal::MergedInto(r))).collect(),
        ..PruneReport::default()
    };
    Pruned { kept, aliases, report }
}

fn frequency_stage(universe: &PredicateUniverse, alive: &BTreeSet<usize>, rule: &FrequencyRule, exec: Exec) -> Pruned {
    let ids: Vec<usize> = alive.iter().copied().collect();
    let freqs = exec.map(&ids, |&id| universe.session_frequency(id));
    let mut kept = BTreeSet::new();
    let mut removed = BTreeMap::new();
    for (&id, &f) in ids.iter().zip(&freqs) {
        if rule.accepts(f) {
            kept.insert(id);
        } else {
            removed.insert(id, Removal::Frequency(f));
        }
    }
    let report = PruneReport {
        stages: vec![summary(format!("frequency({rule})"), universe, alive, &kept)],
        removed,
        ..PruneReport::default()
    };
    Pruned {
        kept,
        aliases: BTreeMap::new(),
        report,
    }
}

fn exclusive_stage(universe: &PredicateUniverse, alive: &BTreeSet<usize>, exec: Exec) -> Pruned {
    let ids: Vec<usize> = alive.iter().copied().collect();
    let classes = exec.map(&ids, |&id| universe.supporting_classes(id));
    let mut kept = BTreeSet::new();
    let mut removed = BTreeMap::new();
    for (&id, &n) in ids.iter().zip(&classes) {
        if n == 1 {
            kept.insert(id);
        } else {
            removed.insert(id, Removal::NotExclusive(n));
        }
    }
    let report = PruneReport {
        stages: vec![summary(Stage::Exclusive.to_string(), universe, alive, &kept)],
        removed,
        ..PruneReport::default()
    };
    Pruned {
        kept,
        aliases: BTreeMap::new(),
        report,
    }
}

/// Collapses lookalike predicates of the same key into one representative.
pub fn similarity_prune(universe: &PredicateUniverse) -> Pruned {
    similarity_stage(universe, &all_ids(universe), Exec::default())
}

/// Keeps predicates whose distinct-session count satisfies `rule`.
pub fn frequency_prune(universe: &PredicateUniverse, rule: &FrequencyRule) -> Pruned {
    frequency_stage(universe, &all_ids(universe), rule, Exec::default())
}

/// Keeps predicates that occurred in exactly one class.
pub fn exclusive_prune(universe: &PredicateUniverse) -> Pruned {
    exclusive_stage(universe, &all_ids(universe), Exec::default())
}

/// Ranking used when balancing: higher session frequency first, then name.
fn by_frequency_desc(universe: &PredicateUniverse, ids: &mut [usize]) {
    ids.sort_by(|&a, &b| {
        universe
            .session_frequency(b)
            .cmp(&universe.session_frequency(a))
            .then_with(|| universe.predicate(a).name().cmp(&universe.predicate(b).name()))
    });
}

/// Brings every class to exactly `target` kept predicates.
///
/// Each predicate belongs to its majority-provenance class. Classes above
/// target drop their lowest-frequency predicates; classes below target
/// refill with the highest-frequency members of `refill_pool` (predicates
/// previously excluded by frequency pruning). A class that cannot reach the
/// target keeps everything available and is listed in `shortfalls`.
pub fn balance_classes(
    universe: &PredicateUniverse,
    kept: &BTreeSet<usize>,
    refill_pool: &BTreeSet<usize>,
    target: usize,
) -> Pruned {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut pool_by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut unattributed = Vec::new();
    for &id in kept {
        match universe.majority_class(id) {
            Some(c) => by_class.entry(c).or_default().push(id),
            None => unattributed.push(id),
        }
    }
    for &id in refill_pool.difference(kept) {
        if let Some(c) = universe.majority_class(id) {
            pool_by_class.entry(c).or_default().push(id);
        }
    }
    let mut out = BTreeSet::new();
    let mut report = PruneReport::default();
    for &id in &unattributed {
        report.removed.insert(id, Removal::Balanced);
    }
    let classes: BTreeSet<&str> = by_class.keys().chain(pool_by_class.keys()).copied().collect();
    for class in classes {
        let mut members = by_class.remove(class).unwrap_or_default();
        by_frequency_desc(universe, &mut members);
        if members.len() >= target {
            for &id in &members[target..] {
                report.removed.insert(id, Removal::Balanced);
            }
            out.extend(&members[..target]);
            continue;
        }
        let mut pool = pool_by_class.remove(class).unwrap_or_default();
        by_frequency_desc(universe, &mut pool);
        let need = target - members.len();
        let refill: Vec<usize> = pool.into_iter().take(need).collect();
        if refill.len() < need {
            report
                .shortfalls
                .insert(class.to_string(), members.len() + refill.len());
        }
        out.extend(&members);
        report.restored.extend(&refill);
        out.extend(refill);
    }
    report
        .stages
        .push(summary(format!("balanced({target})"), universe, kept, &out));
    Pruned {
        kept: out,
        aliases: BTreeMap::new(),
        report,
    }
}

/// Applies the configured stages in order, then balancing when requested.
///
/// Stages after similarity see the merged provenance of each group. The
/// balancing refill pool is whatever the frequency stage(s) excluded.
pub fn run_chain(universe: &PredicateUniverse, cfg: &PruneConfig) -> Result<Pruned, PruneError> {
    run_chain_with(universe, cfg, Exec::default())
}

pub fn run_chain_with(universe: &PredicateUniverse, cfg: &PruneConfig, exec: Exec) -> Result<Pruned, PruneError> {
    cfg.validate()?;
    let mut working = universe.clone();
    let mut alive = all_ids(universe);
    let mut aliases: BTreeMap<usize, usize> = BTreeMap::new();
    let mut report = PruneReport::default();
    let mut frequency_excluded = BTreeSet::new();
    for stage in &cfg.chain {
        let step = match stage {
            Stage::Similarity => similarity_stage(&working, &alive, exec),
            Stage::Frequency => frequency_stage(&working, &alive, &cfg.frequency, exec),
            Stage::Exclusive => exclusive_stage(&working, &alive, exec),
        };
        if !step.aliases.is_empty() {
            // an alias of an existing representative chain points at the final rep
            for rep in aliases.values_mut() {
                if let Some(&r) = step.aliases.get(rep) {
                    *rep = r;
                }
            }
            aliases.extend(step.aliases.iter().map(|(&a, &r)| (a, r)));
            working = universe.with_merged_provenance(&aliases);
        }
        if *stage == Stage::Frequency {
            frequency_excluded.extend(alive.difference(&step.kept));
        }
        alive = step.kept;
        report.extend(step.report);
    }
    if let Some(target) = cfg.balanced {
        let step = balance_classes(&working, &alive, &frequency_excluded, target);
        alive = step.kept;
        report.extend(step.report);
    }
    Ok(Pruned {
        kept: alive,
        aliases,
        report,
    })
}

/// Rewrites alias groundings onto their representatives, merges provenance,
/// and restricts the table to the kept ids.
pub fn apply_pruning(table: &GroundingTable, pruned: &Pruned) -> Result<GroundingTable, PruneError> {
    let merged = table.universe().with_merged_provenance(&pruned.aliases);
    let remapped = table.with_aliases(merged, &pruned.aliases);
    Ok(restrict_table(&remapped, &pruned.kept)?)
}
