//! Synthetic labeled corpora with planted per-class predicates.
//!
//! Every class gets `E` exclusive predicates, TRUE with probability
//! `p_signal` in its own utterances and `p_noise` elsewhere, plus `S` shared
//! predicates TRUE with probability `p_shared` everywhere. Each utterance is
//! emitted as a graph whose extraction (default rules) is exactly its sampled
//! set: possession and manner edges to `thing` nodes, or a frame node with an
//! `:ARG1`, each pointing to an `:op1` chain of the value's words.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::amr::{serialize_penman, AmrGraph, Edge, Predicate, Target};
use crate::store::LabelSet;
use crate::textio::header_line;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("configuration yields an empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: Vec<String>,
    pub sessions_per_class: usize,
    pub utterances_per_session: usize,
    /// Exclusive predicates per class.
    pub exclusive: usize,
    pub shared: usize,
    pub p_signal: f64,
    pub p_noise: f64,
    pub p_shared: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: LabelSet::clinical().as_slice().to_vec(),
            sessions_per_class: 12,
            utterances_per_session: 20,
            exclusive: 20,
            shared: 100,
            p_signal: 0.8,
            p_noise: 0.05,
            p_shared: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Weak class signal buried under frequent shared predicates.
    pub fn shared_dominated() -> Self {
        Self {
            p_signal: 0.01,
            p_noise: 0.005,
            p_shared: 0.3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.classes.is_empty() {
            return Err(SynthError::EmptyCorpus);
        }
        let mut seen = HashSet::new();
        for c in &self.classes {
            if c.is_empty() || !c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '-') {
                return bad(format!("class label `{c}` must be non-empty ASCII letters, digits or `-`"));
            }
            if !seen.insert(c) {
                return bad(format!("duplicate class `{c}`"));
            }
        }
        if self.sessions_per_class == 0 || self.utterances_per_session == 0 {
            return Err(SynthError::EmptyCorpus);
        }
        for (name, p) in [("p-signal", self.p_signal), ("p-noise", self.p_noise), ("p-shared", self.p_shared)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.p_noise >= self.p_signal {
            return bad(format!(
                "p-noise {} must be below p-signal {}",
                self.p_noise, self.p_signal
            ));
        }
        if self.exclusive == 0 && (self.shared == 0 || self.p_shared == 0.0) {
            return Err(SynthError::EmptyCorpus);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthUtterance {
    pub id: String,
    pub session: String,
    pub class: String,
    /// The sampled TRUE set.
    pub predicates: BTreeSet<Predicate>,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSession {
    pub id: String,
    pub class: String,
    pub file_name: String,
    /// Blank-line separated PENMAN blocks with `id` and `snt` metadata.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub sessions: Vec<SynthSession>,
    pub utterances: Vec<SynthUtterance>,
    /// Exclusive predicate and its class.
    pub plants: Vec<(Predicate, String)>,
    pub shared: Vec<Predicate>,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn pseudo_word(rng: &mut ChaCha8Rng, used: &mut HashSet<String>) -> String {
    loop {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*CONSONANTS.choose(rng).unwrap() as char);
            w.push(*VOWELS.choose(rng).unwrap() as char);
        }
        if used.insert(w.clone()) {
            return w;
        }
    }
}

/// Predicate vocabulary. Every word is used once, so no value is contained
/// in another and similarity pruning leaves the vocabulary intact.
fn vocabulary(rng: &mut ChaCha8Rng, count: usize) -> Vec<Predicate> {
    let mut used = HashSet::new();
    let mut keys = vec!["HAS_POSSESSION".to_string(), "HAS_MANNER".to_string()];
    for _ in 0..6 {
        keys.push(pseudo_word(rng, &mut used));
    }
    (0..count)
        .map(|_| {
            let key = keys.choose(rng).unwrap().clone();
            let len = rng.gen_range(1..=3);
            let value: Vec<String> = (0..len).map(|_| pseudo_word(rng, &mut used)).collect();
            Predicate::new(key, value.join(" ")).expect("generated predicate is valid")
        })
        .collect()
}

struct GraphBuilder {
    nodes: Vec<(String, String)>,
    edges: Vec<Edge>,
}

impl GraphBuilder {
    fn node(&mut self, concept: &str) -> String {
        let var = if self.nodes.is_empty() {
            "r".to_string()
        } else {
            format!("v{}", self.nodes.len())
        };
        self.nodes.push((var.clone(), concept.to_string()));
        var
    }

    fn edge(&mut self, source: &str, role: &str, target: &str) {
        self.edges.push(Edge {
            source: source.to_string(),
            role: role.to_string(),
            target: Target::Node(target.to_string()),
        });
    }

    fn chain(&mut self, value: &str) -> String {
        let vars: Vec<String> = value.split(' ').map(|w| self.node(w)).collect();
        for pair in vars.windows(2) {
            self.edge(&pair[0], "op1", &pair[1]);
        }
        vars[0].clone()
    }
}

fn utterance_graph(id: &str, sentence: &str, preds: &BTreeSet<Predicate>) -> AmrGraph {
    let mut b = GraphBuilder {
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let root = b.node("multi-sentence");
    for (i, p) in preds.iter().enumerate() {
        let (concept, role) = match p.key() {
            "HAS_POSSESSION" => ("thing".to_string(), "poss"),
            "HAS_MANNER" => ("thing".to_string(), "manner"),
            verb => (format!("{verb}-01"), "ARG1"),
        };
        let head = b.node(&concept);
        b.edge(&root, &format!("snt{}", i + 1), &head);
        let value = b.chain(p.value());
        b.edge(&head, role, &value);
    }
    let meta = vec![("id".to_string(), id.to_string()), ("snt".to_string(), sentence.to_string())];
    AmrGraph::new(root, b.nodes, b.edges, meta).expect("generated graph is well formed")
}

fn sentence(preds: &BTreeSet<Predicate>) -> String {
    if preds.is_empty() {
        return "...".to_string();
    }
    let parts: Vec<String> = preds
        .iter()
        .map(|p| match p.key() {
            "HAS_POSSESSION" => format!("my {}", p.value()),
            "HAS_MANNER" => format!("{} like", p.value()),
            verb => format!("{verb} {}", p.value()),
        })
        .collect();
    parts.join(", ")
}

/// Samples a corpus. Fully determined by the config, seed included.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_classes = cfg.classes.len();
    let vocab = vocabulary(&mut rng, cfg.exclusive * n_classes + cfg.shared);
    let (exclusive, shared) = vocab.split_at(cfg.exclusive * n_classes);
    let plants: Vec<(Predicate, String)> = exclusive
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), cfg.classes[i / cfg.exclusive.max(1)].clone()))
        .collect();

    let mut sessions = Vec::new();
    let mut utterances = Vec::new();
    for (ci, class) in cfg.classes.iter().enumerate() {
        for s in 1..=cfg.sessions_per_class {
            let session = format!("{class}_s{s:02}");
            let mut blocks = Vec::with_capacity(cfg.utterances_per_session);
            for u in 1..=cfg.utterances_per_session {
                let mut preds = BTreeSet::new();
                for (i, p) in exclusive.iter().enumerate() {
                    let own = i / cfg.exclusive == ci;
                    if rng.gen_bool(if own { cfg.p_signal } else { cfg.p_noise }) {
                        preds.insert(p.clone());
                    }
                }
                for p in shared {
                    if rng.gen_bool(cfg.p_shared) {
                        preds.insert(p.clone());
                    }
                }
                let id = format!("{session}_u{u:02}");
                let snt = sentence(&preds);
                let g = utterance_graph(&id, &snt, &preds);
                blocks.push(serialize_penman(&g).expect("generated graph is connected"));
                utterances.push(SynthUtterance {
                    id,
                    session: session.clone(),
                    class: class.clone(),
                    predicates: preds,
                    sentence: snt,
                });
            }
            let mut text = blocks.join("\n\n");
            text.push('\n');
            sessions.push(SynthSession {
                file_name: format!("{session}.amr"),
                id: session,
                class: class.clone(),
                text,
            });
        }
    }
    if utterances.iter().all(|u| u.predicates.is_empty()) {
        return Err(SynthError::EmptyCorpus);
    }
    Ok(SynthCorpus {
        sessions,
        utterances,
        plants,
        shared: shared.to_vec(),
    })
}

impl SynthCorpus {
    /// `#plc-manifest/1`, then `session-file class`.
    pub fn manifest_tsv(&self) -> String {
        let mut s = header_line::<&str>("manifest", &[]);
        s.push('\n');
        for sess in &self.sessions {
            s.push_str(&format!("{}\t{}\n", sess.file_name, sess.class));
        }
        s
    }

    /// `#plc-plants/1`, then `predicate class`.
    pub fn plants_tsv(&self) -> String {
        let mut s = header_line::<&str>("plants", &[]);
        s.push('\n');
        for (p, c) in &self.plants {
            s.push_str(&format!("{p}\t{c}\n"));
        }
        s
    }

    /// Utterances in which each predicate was sampled TRUE.
    pub fn predicate_counts(&self) -> BTreeMap<Predicate, usize> {
        let mut counts = BTreeMap::new();
        for u in &self.utterances {
            for p in &u.predicates {
                *counts.entry(p.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    /// `#plc-synth-stats/1`, then `predicate utterances` for every predicate
    /// sampled at least once.
    pub fn stats_tsv(&self) -> String {
        let mut s = header_line::<&str>("synth-stats", &[]);
        s.push('\n');
        for (p, n) in self.predicate_counts() {
            s.push_str(&format!("{p}\t{n}\n"));
        }
        s
    }

    /// Session files plus `manifest.tsv`, `plants.tsv` and `stats.tsv`.
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        fs::create_dir_all(dir)?;
        for s in &self.sessions {
            fs::write(dir.join(&s.file_name), &s.text)?;
        }
        fs::write(dir.join("manifest.tsv"), self.manifest_tsv())?;
        fs::write(dir.join("plants.tsv"), self.plants_tsv())?;
        fs::write(dir.join("stats.tsv"), self.stats_tsv())?;
        Ok(())
    }
}
