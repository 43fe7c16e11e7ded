//! Pipeline configuration: flat `[section]` blocks of `key = value` lines.
//!
//! ```text
//! [paths]
//! corpus = corpus
//! work_dir = work
//!
//! [prune]
//! chain = similarity, frequency, exclusive
//! frequency = F>1
//! ```
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Unknown
//! sections or keys are errors, so typos never silently fall back to a
//! default.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plc_core::amr::ExtractionRules;
use plc_core::lnn::{Scorer, TrainConfig};
use plc_core::pruning::{FrequencyRule, PruneConfig, Stage};
use plc_core::store::LabelSet;
use plc_core::synth::SynthConfig;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    /// Share of each class's samples held out for testing.
    pub test_fraction: f64,
    pub seed: u64,
    /// Hold out whole sessions instead of single utterances.
    pub by_session: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.3,
            seed: 0,
            by_session: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub work_dir: Option<PathBuf>,
    pub labels: LabelSet,
    pub extraction: ExtractionRules,
    /// `None` keeps every predicate.
    pub prune: Option<PruneConfig>,
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub synth: SynthConfig,
    pub explain_k: usize,
    pub bench_counts: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            work_dir: None,
            labels: LabelSet::clinical(),
            extraction: ExtractionRules::default(),
            prune: Some(PruneConfig::default()),
            train: TrainConfig::default(),
            split: SplitConfig::default(),
            synth: SynthConfig::default(),
            explain_k: 20,
            bench_counts: vec![710, 1415],
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let lineno = i + 1;
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {lineno}: expected `key = value`")))?;
            cfg.set(&section, key.trim(), value.trim())
                .map_err(|m| CliError::Usage(format!("config line {lineno}: [{section}] {}: {m}", key.trim())))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        let flag = |v: &str| parse_bool(v).ok_or_else(|| format!("expected true or false, found `{v}`"));
        match (section, key) {
            ("paths", "corpus") => self.corpus = Some(PathBuf::from(v)),
            ("paths", "work_dir") => self.work_dir = Some(PathBuf::from(v)),
            ("labels", "classes") => {
                self.labels = LabelSet::new(list(v)).map_err(|e| e.to_string())?;
                self.synth.classes = self.labels.as_slice().to_vec();
            }
            ("extract", "strip_sense") => self.extraction.strip_sense = flag(v)?,
            ("extract", "max_value_tokens") => self.extraction.max_value_tokens = num(v)?,
            ("extract", "core_args") => self.extraction.core_args = list(v).into_iter().collect(),
            ("extract", "relations") => {
                self.extraction.relation_keys = list(v)
                    .iter()
                    .map(|pair| {
                        pair.split_once(':')
                            .map(|(r, k)| (r.trim().to_string(), k.trim().to_string()))
                            .ok_or_else(|| format!("expected role:KEY, found `{pair}`"))
                    })
                    .collect::<Result<_, _>>()?;
            }
            ("prune", "chain") => {
                if v == "none" {
                    self.prune = None;
                } else {
                    let chain = list(v)
                        .iter()
                        .map(|s| s.parse::<Stage>().map_err(|e| e.to_string()))
                        .collect::<Result<_, _>>()?;
                    self.prune.get_or_insert_with(PruneConfig::default).chain = chain;
                }
            }
            ("prune", "frequency") => {
                let rule: FrequencyRule = v.parse().map_err(|e: plc_core::pruning::PruneError| e.to_string())?;
                self.prune.get_or_insert_with(PruneConfig::default).frequency = rule;
            }
            ("prune", "balanced") => {
                let target = if v == "none" { None } else { Some(num(v)?) };
                self.prune.get_or_insert_with(PruneConfig::default).balanced = target;
            }
            ("train", "learning_rate") => self.train.learning_rate = num(v)?,
            ("train", "epochs") => self.train.epochs = num(v)?,
            ("train", "seed") => self.train.seed = num(v)?,
            ("train", "leak") => self.train.leak = num(v)?,
            ("train", "init_scale") => self.train.init_scale = if v == "auto" { None } else { Some(num(v)?) },
            ("train", "scorer") => self.train.scorer = v.parse::<Scorer>().map_err(|e| e.to_string())?,
            ("split", "test_fraction") => self.split.test_fraction = num(v)?,
            ("split", "seed") => self.split.seed = num(v)?,
            ("split", "by_session") => self.split.by_session = flag(v)?,
            ("synth", "sessions_per_class") => self.synth.sessions_per_class = num(v)?,
            ("synth", "utterances_per_session") => self.synth.utterances_per_session = num(v)?,
            ("synth", "exclusive") => self.synth.exclusive = num(v)?,
            ("synth", "shared") => self.synth.shared = num(v)?,
            ("synth", "p_signal") => self.synth.p_signal = num(v)?,
            ("synth", "p_noise") => self.synth.p_noise = num(v)?,
            ("synth", "p_shared") => self.synth.p_shared = num(v)?,
            ("synth", "seed") => self.synth.seed = num(v)?,
            ("explain", "k") => self.explain_k = num(v)?,
            ("bench", "counts") => {
                self.bench_counts = list(v).iter().map(|c| num(c)).collect::<Result<_, _>>()?;
            }
            _ => return Err("unknown setting".into()),
        }
        Ok(())
    }

    /// `--seed` sets every seed at once.
    pub fn set_seed(&mut self, seed: u64) {
        self.split.seed = seed;
        self.train.seed = seed;
        self.synth.seed = seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return usage(format!("split test_fraction {} must be in (0, 1)", self.split.test_fraction));
        }
        if let (Some(c), Some(w)) = (&self.corpus, &self.work_dir) {
            if c == w {
                return usage("corpus and work_dir must be different paths".into());
            }
        }
        self.extraction.validate().map_err(CliError::Usage)?;
        if let Some(p) = &self.prune {
            p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        self.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.explain_k == 0 {
            return usage("explain k must be >= 1".into());
        }
        if self.synth.classes != self.labels.as_slice() {
            return usage("synth classes must equal the label set".into());
        }
        Ok(())
    }

    /// Canonical text of every setting; its digest identifies a run's config.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        let _ = writeln!(s, "paths.corpus={}", path(&self.corpus));
        let _ = writeln!(s, "paths.work_dir={}", path(&self.work_dir));
        let _ = writeln!(s, "labels.classes={}", self.labels.as_slice().join(","));
        let x = &self.extraction;
        let rel: Vec<String> = x.relation_keys.iter().map(|(r, k)| format!("{r}:{k}")).collect();
        let args: Vec<&str> = x.core_args.iter().map(String::as_str).collect();
        let _ = writeln!(s, "extract.relations={}", rel.join(","));
        let _ = writeln!(s, "extract.strip_sense={}", x.strip_sense);
        let _ = writeln!(s, "extract.max_value_tokens={}", x.max_value_tokens);
        let _ = writeln!(s, "extract.core_args={}", args.join(","));
        match &self.prune {
            None => {
                let _ = writeln!(s, "prune.chain=none");
            }
            Some(p) => {
                let chain: Vec<String> = p.chain.iter().map(Stage::to_string).collect();
                let _ = writeln!(s, "prune.chain={}", chain.join(","));
                let _ = writeln!(s, "prune.frequency={}", p.frequency);
                let _ = writeln!(s, "prune.balanced={}", p.balanced.map_or("none".into(), |b| b.to_string()));
            }
        }
        let t = &self.train;
        let _ = writeln!(s, "train.learning_rate={:?}", t.learning_rate);
        let _ = writeln!(s, "train.epochs={}", t.epochs);
        let _ = writeln!(s, "train.seed={}", t.seed);
        let _ = writeln!(s, "train.leak={:?}", t.leak);
        let _ = writeln!(s, "train.init_scale={}", t.init_scale.map_or("auto".into(), |v| format!("{v:?}")));
        let _ = writeln!(s, "train.scorer={}", t.scorer);
        let _ = writeln!(s, "split.test_fraction={:?}", self.split.test_fraction);
        let _ = writeln!(s, "split.seed={}", self.split.seed);
        let _ = writeln!(s, "split.by_session={}", self.split.by_session);
        let y = &self.synth;
        let _ = writeln!(
            s,
            "synth={},{},{},{},{:?},{:?},{:?},{}",
            y.sessions_per_class, y.utterances_per_session, y.exclusive, y.shared, y.p_signal, y.p_noise, y.p_shared, y.seed
        );
        let _ = writeln!(s, "explain.k={}", self.explain_k);
        let counts: Vec<String> = self.bench_counts.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "bench.counts={}", counts.join(","));
        s
    }

    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.canonical().as_bytes());
        d[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Chain stages as written, for reporting.
    pub fn chain_label(&self) -> String {
        match &self.prune {
            None => "none".into(),
            Some(p) => p.chain.iter().map(Stage::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = PipelineConfig::parse(
            "# comment\n[paths]\ncorpus = c\nwork_dir = w\n\n[prune]\nchain = frequency\nfrequency = F>5\nbalanced = 10\n\
             [train]\nlearning_rate = 0.01\nscorer = linear\n[split]\ntest_fraction = 0.25\nby_session = true\n",
        )
        .unwrap();
        assert_eq!(cfg.corpus, Some(PathBuf::from("c")));
        let p = cfg.prune.unwrap();
        assert_eq!(p.chain, vec![Stage::Frequency]);
        assert_eq!(p.frequency, FrequencyRule::GreaterThan(5));
        assert_eq!(p.balanced, Some(10));
        assert_eq!(cfg.train.learning_rate, 0.01);
        assert_eq!(cfg.train.scorer, Scorer::Linear);
        assert!(cfg.split.by_session);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        for text in [
            "[train]\nlearning_rat = 0.1\n",
            "[nope]\nx = 1\n",
            "[split]\ntest_fraction = 1.0\n",
            "[paths]\ncorpus = a\nwork_dir = a\n",
            "[prune]\nfrequency = 5<F<2\n",
            "just words\n",
        ] {
            assert!(matches!(PipelineConfig::parse(text), Err(CliError::Usage(_))), "{text}");
        }
    }

    #[test]
    fn hash_tracks_settings() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.set_seed(9);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(PipelineConfig::parse("[prune]\nchain = none\n").unwrap().prune, None);
    }
}
