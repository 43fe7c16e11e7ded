//! Predicate universe, grounding table and their on-disk formats.
//!
//! The universe is the set of `(key, value)` pairs observed TRUE in at least
//! one utterance, with dense ids in first-occurrence order and, per
//! predicate, the sessions of each class in which it occurred. The grounding
//! table stores each sample's TRUE predicate ids; every other predicate is
//! FALSE for that sample.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{self, BufRead, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::amr::{Predicate, PredicateError};
use crate::textio::{header_line, parse_header, HeaderError};

/// Class label -> session ids in which a predicate occurred TRUE.
pub type Provenance = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate sample id `{0}`")]
    DuplicateSample(String),
    #[error("unknown class label `{0}`")]
    UnknownLabel(String),
    #[error("invalid label set: {0}")]
    InvalidLabels(String),
    #[error("duplicate predicate `{0}`")]
    DuplicatePredicate(String),
    #[error("keep set is empty")]
    EmptyKeep,
    #[error("predicate id {0} is outside the universe")]
    IdOutOfRange(usize),
    #[error("field `{0}` contains a tab, newline or separator character")]
    InvalidField(String),
    #[error("universe fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Header(#[from] HeaderError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_err(line: usize, message: impl Into<String>) -> StoreError {
    StoreError::Format {
        line,
        message: message.into(),
    }
}

/// Ordered class labels; the order is the tie-break order for prediction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSet(Vec<String>);

impl LabelSet {
    pub fn new<I, S>(labels: I) -> Result<Self, StoreError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(StoreError::InvalidLabels("no labels".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.is_empty() || l.contains(['\t', '\n', ',', ' ']) {
                return Err(StoreError::InvalidLabels(format!("bad label `{l}`")));
            }
            if !seen.insert(l) {
                return Err(StoreError::InvalidLabels(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self(labels))
    }

    /// anxiety, depression, suicidal, schizophrenia
    pub fn clinical() -> Self {
        Self::new(["anxiety", "depression", "suicidal", "schizophrenia"]).expect("valid labels")
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn get(&self, i: usize) -> &str {
        &self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }
}

/// Extraction result for one utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedUtterance {
    pub sample_id: String,
    pub session_id: String,
    pub label: String,
    pub predicates: BTreeSet<Predicate>,
}

/// Short hex digest over predicate names in id order.
pub fn fingerprint<'a>(names: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update(b"\n");
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateUniverse {
    predicates: Vec<Predicate>,
    index: HashMap<String, usize>,
    provenance: Vec<Provenance>,
    fingerprint: String,
}

impl PredicateUniverse {
    pub fn from_parts(predicates: Vec<Predicate>, provenance: Vec<Provenance>) -> Result<Self, StoreError> {
        assert_eq!(predicates.len(), provenance.len(), "one provenance entry per predicate");
        let mut index = HashMap::with_capacity(predicates.len());
        for (i, p) in predicates.iter().enumerate() {
            if index.insert(p.name(), i).is_some() {
                return Err(StoreError::DuplicatePredicate(p.name()));
            }
        }
        let fp = fingerprint(predicates.iter().map(|p| p.name()).collect::<Vec<_>>().iter().map(String::as_str));
        Ok(Self {
            predicates,
            index,
            provenance,
            fingerprint: fp,
        })
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new()).expect("empty universe")
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn predicate(&self, id: usize) -> &Predicate {
        &self.predicates[id]
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn provenance(&self, id: usize) -> &Provenance {
        &self.provenance[id]
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn names(&self) -> Vec<String> {
        self.predicates.iter().map(Predicate::name).collect()
    }

    /// Distinct sessions, across all classes, where the predicate was TRUE.
    pub fn session_frequency(&self, id: usize) -> usize {
        let mut sessions: HashSet<&str> = HashSet::new();
        for s in self.provenance[id].values() {
            sessions.extend(s.iter().map(String::as_str));
        }
        sessions.len()
    }

    /// Sessions of `class` where the predicate was TRUE.
    pub fn class_frequency(&self, id: usize, class: &str) -> usize {
        self.provenance[id].get(class).map_or(0, BTreeSet::len)
    }

    /// Number of classes with at least one supporting session.
    pub fn supporting_classes(&self, id: usize) -> usize {
        self.provenance[id].values().filter(|s| !s.is_empty()).count()
    }

    /// Class with the most supporting sessions; ties go to the
    /// lexicographically smallest label. `None` for empty provenance.
    pub fn majority_class(&self, id: usize) -> Option<&str> {
        let mut best: Option<(&str, usize)> = None;
        // BTreeMap iterates labels in ascending order, so strict `>` keeps the smallest on ties
        for (label, sessions) in &self.provenance[id] {
            if sessions.is_empty() {
                continue;
            }
            if best.is_none_or(|(_, n)| sessions.len() > n) {
                best = Some((label.as_str(), sessions.len()));
            }
        }
        best.map(|(l, _)| l)
    }

    /// Sub-universe of `keep` in ascending original-id order. Returns the new
    /// universe and an old-id -> new-id map.
    pub fn restrict(&self, keep: &BTreeSet<usize>) -> Result<(Self, HashMap<usize, usize>), StoreError> {
        if let Some(&bad) = keep.iter().find(|&&i| i >= self.len()) {
            return Err(StoreError::IdOutOfRange(bad));
        }
        let mut preds = Vec::with_capacity(keep.len());
        let mut prov = Vec::with_capacity(keep.len());
        let mut map = HashMap::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            preds.push(self.predicates[old].clone());
            prov.push(self.provenance[old].clone());
            map.insert(old, new);
        }
        Ok((Self::from_parts(preds, prov)?, map))
    }

    /// Same ids, with each alias's provenance unioned into its representative.
    pub fn with_merged_provenance(&self, aliases: &BTreeMap<usize, usize>) -> Self {
        let mut out = self.clone();
        for (&alias, &rep) in aliases {
            let extra = self.provenance[alias].clone();
            let target = &mut out.provenance[rep];
            for (class, sessions) in extra {
                target.entry(class).or_default().extend(sessions);
            }
        }
        out
    }
}

/// Builds the universe as the union of observed predicates, ids in
/// first-occurrence order.
pub fn build_universe(parsed: &[ParsedUtterance]) -> Result<PredicateUniverse, StoreError> {
    let mut seen_samples = HashSet::new();
    let mut predicates = Vec::new();
    let mut provenance: Vec<Provenance> = Vec::new();
    let mut index: HashMap<&Predicate, usize> = HashMap::new();
    for u in parsed {
        if !seen_samples.insert(u.sample_id.as_str()) {
            return Err(StoreError::DuplicateSample(u.sample_id.clone()));
        }
        for p in &u.predicates {
            let id = *index.entry(p).or_insert_with(|| {
                predicates.push(p.clone());
                provenance.push(Provenance::new());
                predicates.len() - 1
            });
            provenance[id]
                .entry(u.label.clone())
                .or_default()
                .insert(u.session_id.clone());
        }
    }
    PredicateUniverse::from_parts(predicates, provenance)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub sample_id: String,
    pub session_id: String,
    /// Index into the table's label set.
    pub label: usize,
    /// Sorted ids of predicates grounded TRUE.
    pub true_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundingTable {
    universe: PredicateUniverse,
    labels: LabelSet,
    samples: Vec<Sample>,
}

impl GroundingTable {
    pub fn new(universe: PredicateUniverse, labels: LabelSet, samples: Vec<Sample>) -> Result<Self, StoreError> {
        for s in &samples {
            if s.label >= labels.len() {
                return Err(StoreError::UnknownLabel(format!("#{}", s.label)));
            }
            if let Some(&bad) = s.true_ids.iter().find(|&&i| i >= universe.len()) {
                return Err(StoreError::IdOutOfRange(bad));
            }
            if s.true_ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format_err(0, format!("sample `{}` ids not strictly ascending", s.sample_id)));
            }
        }
        Ok(Self {
            universe,
            labels,
            samples,
        })
    }

    pub fn universe(&self) -> &PredicateUniverse {
        &self.universe
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn label_of(&self, row: usize) -> &str {
        self.labels.get(self.samples[row].label)
    }

    /// Dense boolean grounding of one row over the universe.
    pub fn row_dense(&self, row: usize) -> Vec<bool> {
        let mut v = vec![false; self.universe.len()];
        for &i in &self.samples[row].true_ids {
            v[i] = true;
        }
        v
    }

    /// Rows with no TRUE grounding.
    pub fn empty_rows(&self) -> usize {
        self.samples.iter().filter(|s| s.true_ids.is_empty()).count()
    }

    /// Samples per class in label order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.labels.len()];
        for s in &self.samples {
            c[s.label] += 1;
        }
        c
    }

    /// Keeps the given rows (in the given order) over the same universe.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            universe: self.universe.clone(),
            labels: self.labels.clone(),
            samples: rows.iter().map(|&r| self.samples[r].clone()).collect(),
        }
    }

    /// Replaces the universe by one with identical ids (e.g. merged
    /// provenance), rewriting alias ids in every row to their representative.
    pub fn with_aliases(&self, universe: PredicateUniverse, aliases: &BTreeMap<usize, usize>) -> Self {
        assert_eq!(universe.len(), self.universe.len(), "alias remap keeps ids");
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let mut ids: Vec<usize> = s.true_ids.iter().map(|i| *aliases.get(i).unwrap_or(i)).collect();
                ids.sort_unstable();
                ids.dedup();
                Sample {
                    true_ids: ids,
                    ..s.clone()
                }
            })
            .collect();
        Self {
            universe,
            labels: self.labels.clone(),
            samples,
        }
    }
}

/// One sample per utterance; predicates absent from the universe are dropped.
pub fn build_grounding_table(
    universe: &PredicateUniverse,
    labels: &LabelSet,
    parsed: &[ParsedUtterance],
) -> Result<GroundingTable, StoreError> {
    let mut samples = Vec::with_capacity(parsed.len());
    for u in parsed {
        let label = labels
            .index_of(&u.label)
            .ok_or_else(|| StoreError::UnknownLabel(u.label.clone()))?;
        let mut ids: Vec<usize> = u
            .predicates
            .iter()
            .filter_map(|p| universe.id_of(&p.name()))
            .collect();
        ids.sort_unstable();
        samples.push(Sample {
            sample_id: u.sample_id.clone(),
            session_id: u.session_id.clone(),
            label,
            true_ids: ids,
        });
    }
    GroundingTable::new(universe.clone(), labels.clone(), samples)
}

/// Restricts the table to `keep`, re-densifying ids. Sample count is unchanged.
pub fn restrict_table(table: &GroundingTable, keep: &BTreeSet<usize>) -> Result<GroundingTable, StoreError> {
    if keep.is_empty() {
        return Err(StoreError::EmptyKeep);
    }
    let (universe, map) = table.universe.restrict(keep)?;
    let samples = table
        .samples
        .iter()
        .map(|s| Sample {
            true_ids: s.true_ids.iter().filter_map(|i| map.get(i).copied()).collect(),
            ..s.clone()
        })
        .collect();
    Ok(GroundingTable {
        universe,
        labels: table.labels.clone(),
        samples,
    })
}

fn check_field(s: &str, extra: &[char]) -> Result<(), StoreError> {
    if s.contains(['\t', '\n', '\r']) || s.contains(extra) {
        return Err(StoreError::InvalidField(s.to_string()));
    }
    Ok(())
}

/// Predicate table: `id TAB key TAB value TAB <sessions per class>`.
pub fn write_universe<W: Write>(mut w: W, universe: &PredicateUniverse, labels: &LabelSet) -> Result<(), StoreError> {
    let mut cols = vec!["id".to_string(), "key".into(), "value".into()];
    cols.extend(labels.iter().map(str::to_string));
    writeln!(w, "{}", header_line("predicates", &cols))?;
    for (id, p) in universe.predicates.iter().enumerate() {
        let prov = &universe.provenance[id];
        if let Some(bad) = prov.keys().find(|k| labels.index_of(k).is_none()) {
            return Err(StoreError::UnknownLabel(bad.clone()));
        }
        write!(w, "{id}\t{}\t{}", p.key(), p.value())?;
        for label in labels.iter() {
            let sessions = prov.get(label).map(|s| {
                s.iter().map(String::as_str).collect::<Vec<_>>().join(",")
            });
            for s in prov.get(label).into_iter().flatten() {
                check_field(s, &[','])?;
            }
            write!(w, "\t{}", sessions.unwrap_or_default())?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_universe<R: BufRead>(r: R) -> Result<(PredicateUniverse, LabelSet), StoreError> {
    let mut lines = r.lines();
    let first = lines.next().transpose()?;
    let header = parse_header(first.as_deref(), "predicates")?;
    if header.len() < 4 || header[..3] != ["id", "key", "value"] {
        return Err(format_err(1, "expected columns id, key, value, <classes>"));
    }
    let labels = LabelSet::new(header[3..].iter().copied())?;
    let mut preds = Vec::new();
    let mut prov = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 + labels.len() {
            return Err(format_err(lineno, format!("expected {} fields, found {}", 3 + labels.len(), fields.len())));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| format_err(lineno, format!("bad id `{}`", fields[0])))?;
        if id != preds.len() {
            return Err(format_err(lineno, format!("ids must be dense, expected {}", preds.len())));
        }
        preds.push(Predicate::new(fields[1], fields[2])?);
        let mut p = Provenance::new();
        for (label, sessions) in labels.iter().zip(&fields[3..]) {
            if !sessions.is_empty() {
                p.insert(label.to_string(), sessions.split(',').map(str::to_string).collect());
            }
        }
        prov.push(p);
    }
    Ok((PredicateUniverse::from_parts(preds, prov)?, labels))
}

/// Grounding file: `sample TAB session TAB class TAB <space-separated ids>`.
pub fn write_grounding<W: Write>(mut w: W, table: &GroundingTable) -> Result<(), StoreError> {
    let fields = [
        format!("universe={}", table.universe.fingerprint()),
        format!("labels={}", table.labels.as_slice().join(",")),
    ];
    writeln!(w, "{}", header_line("grounding", &fields))?;
    for s in &table.samples {
        check_field(&s.sample_id, &[])?;
        check_field(&s.session_id, &[','])?;
        let ids: Vec<String> = s.true_ids.iter().map(usize::to_string).collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            s.sample_id,
            s.session_id,
            table.labels.get(s.label),
            ids.join(" ")
        )?;
    }
    Ok(())
}

pub fn read_grounding<R: BufRead>(r: R, universe: &PredicateUniverse) -> Result<GroundingTable, StoreError> {
    let mut lines = r.lines();
    let first = lines.next().transpose()?;
    let header = parse_header(first.as_deref(), "grounding")?;
    let mut fp = None;
    let mut labels = None;
    for f in header {
        if let Some(v) = f.strip_prefix("universe=") {
            fp = Some(v.to_string());
        } else if let Some(v) = f.strip_prefix("labels=") {
            labels = Some(LabelSet::new(v.split(','))?);
        }
    }
    let fp = fp.ok_or_else(|| format_err(1, "missing universe fingerprint"))?;
    let labels = labels.ok_or_else(|| format_err(1, "missing labels"))?;
    if fp != universe.fingerprint() {
        return Err(StoreError::FingerprintMismatch {
            expected: universe.fingerprint().to_string(),
            found: fp,
        });
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(format_err(lineno, format!("expected 4 fields, found {}", fields.len())));
        }
        let label = labels
            .index_of(fields[2])
            .ok_or_else(|| StoreError::UnknownLabel(fields[2].to_string()))?;
        let true_ids = fields[3]
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| format_err(lineno, format!("bad id `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        samples.push(Sample {
            sample_id: fields[0].to_string(),
            session_id: fields[1].to_string(),
            label,
            true_ids,
        });
    }
    let mut seen = HashSet::new();
    for s in &samples {
        if !seen.insert(s.sample_id.as_str()) {
            return Err(StoreError::DuplicateSample(s.sample_id.clone()));
        }
    }
    GroundingTable::new(universe.clone(), labels, samples)
}
