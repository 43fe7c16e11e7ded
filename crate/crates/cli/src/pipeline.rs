//! Pipeline commands. Each reads its inputs from the work directory (or the
//! corpus), writes its artifacts there and returns a printable summary.
//!
//! Work directory layout:
//!
//! ```text
//! extract/index.tsv        session TAB class
//! extract/<session>.tsv    sample TAB sentence TAB predicate...
//! extract/summary.tsv      predicate TAB utterances
//! dataset/                 predicates.tsv, train.tsv, test.tsv, split.tsv
//! prune/                   predicates.tsv, train.tsv, test.tsv, report.tsv, mapping.tsv
//! model/model.tsv
//! eval/                    summary.tsv, <scorer>/roc_<class>.tsv
//! explain/                 insights.tsv, insights.txt
//! bench/timing.tsv
//! run.log
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use plc_core::amr::{extract_predicates, parse_sembank, Predicate};
use plc_core::eval::{class_rocs, multiclass_accuracy, write_roc};
use plc_core::insights::{top_k_predicates, InsightReport};
use plc_core::lnn::{load_model, save_model, train as train_model, Scorer};
use plc_core::pruning::{apply_pruning, run_chain, PruneReport, Pruned};
use plc_core::store::{
    build_grounding_table, build_universe, read_grounding, read_universe, restrict_table, write_grounding,
    write_universe, GroundingTable, LabelSet, ParsedUtterance, PredicateUniverse,
};
use plc_core::synth::generate_corpus;
use plc_core::textio::{format_exact, header_line, parse_header};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{PipelineConfig, SplitConfig};
use crate::error::CliError;
use crate::workdir::Workspace;

/// One utterance as written by `extract`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedUtterance {
    pub sample_id: String,
    pub sentence: String,
    pub predicates: BTreeSet<Predicate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedSession {
    pub id: String,
    pub class: String,
    pub utterances: Vec<ExtractedUtterance>,
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Data(e.to_string())
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Replaces a work-dir subdirectory so stale files never survive a rerun.
fn fresh_dir(ws: &Workspace, rel: &str) -> Result<(), CliError> {
    let p = ws.path(rel);
    if p.exists() {
        fs::remove_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
    }
    ws.dir(rel).map(|_| ())
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Clone)]
pub struct SynthSummary {
    pub sessions: usize,
    pub utterances: usize,
    pub plants: usize,
    pub shared: usize,
}

impl fmt::Display for SynthSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sessions={} utterances={} planted={} shared={}",
            self.sessions, self.utterances, self.plants, self.shared
        )
    }
}

pub fn synth(cfg: &PipelineConfig, out: &Path) -> Result<SynthSummary, CliError> {
    let corpus = generate_corpus(&cfg.synth)?;
    corpus.write_to(out)?;
    Ok(SynthSummary {
        sessions: corpus.sessions.len(),
        utterances: corpus.utterances.len(),
        plants: corpus.plants.len(),
        shared: corpus.shared.len(),
    })
}

// ---------------------------------------------------------------- extract

#[derive(Debug, Clone)]
pub struct ExtractSummary {
    pub sessions: usize,
    pub utterances: usize,
    pub distinct_predicates: usize,
    /// `file: reason` for every session file that could not be processed.
    pub failed: Vec<String>,
}

impl fmt::Display for ExtractSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sessions={} utterances={} predicates={} failed={}",
            self.sessions,
            self.utterances,
            self.distinct_predicates,
            self.failed.len()
        )
    }
}

/// `#plc-manifest/1`, then `session-file TAB class`.
fn read_manifest(corpus: &Path, labels: &LabelSet) -> Result<Vec<(String, String)>, CliError> {
    let path = corpus.join("manifest.tsv");
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let mut lines = text.lines();
    parse_header(lines.next(), "manifest").map_err(|e| CliError::at(&path, e))?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (file, class) = line
            .split_once('\t')
            .ok_or_else(|| CliError::at(&path, format!("line {}: expected `file TAB class`", i + 2)))?;
        if labels.index_of(class).is_none() {
            return Err(CliError::at(&path, format!("line {}: unknown class `{class}`", i + 2)));
        }
        out.push((file.to_string(), class.to_string()));
    }
    if out.is_empty() {
        return Err(CliError::at(&path, "corpus lists no session files"));
    }
    Ok(out)
}

fn write_session(s: &ExtractedSession) -> Vec<u8> {
    let mut out = header_line("extract", &[format!("session={}", s.id), format!("class={}", s.class)]);
    out.push('\n');
    for u in &s.utterances {
        out.push_str(&clean(&u.sample_id));
        out.push('\t');
        out.push_str(&clean(&u.sentence));
        for p in &u.predicates {
            out.push('\t');
            out.push_str(&p.name());
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Parses every session file listed in the corpus manifest and writes its predicates.
pub fn extract(cfg: &PipelineConfig, ws: &Workspace, corpus: &Path) -> Result<ExtractSummary, CliError> {
    if !corpus.is_dir() {
        return Err(CliError::Data(format!("corpus {} is not a directory", corpus.display())));
    }
    let entries = read_manifest(corpus, &cfg.labels)?;
    fresh_dir(ws, "extract")?;
    let mut failed = Vec::new();
    let mut index = header_line::<&str>("extract-index", &[]);
    index.push('\n');
    let mut counts: BTreeMap<Predicate, usize> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    let (mut sessions, mut utterances) = (0, 0);
    for (file, class) in &entries {
        let path = corpus.join(file);
        let stem = Path::new(file)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if stem.is_empty() || stem.contains(['\t', ',']) || !seen.insert(stem.clone()) {
            failed.push(format!("{file}: empty, invalid or duplicate session name"));
            continue;
        }
        let graphs = match fs::read_to_string(&path) {
            Ok(text) => match parse_sembank(&text) {
                Ok(g) => g,
                Err(e) => {
                    failed.push(format!("{file}:{e}"));
                    continue;
                }
            },
            Err(e) => {
                failed.push(format!("{file}: {e}"));
                continue;
            }
        };
        let session = ExtractedSession {
            id: stem.clone(),
            class: class.clone(),
            utterances: graphs
                .iter()
                .enumerate()
                .map(|(i, g)| ExtractedUtterance {
                    sample_id: g.meta("id").map_or_else(|| format!("{stem}_{}", i + 1), clean),
                    sentence: g.meta("snt").map(clean).unwrap_or_default(),
                    predicates: extract_predicates(g, &cfg.extraction),
                })
                .collect(),
        };
        for u in &session.utterances {
            for p in &u.predicates {
                *counts.entry(p.clone()).or_insert(0) += 1;
            }
        }
        sessions += 1;
        utterances += session.utterances.len();
        ws.write(&format!("extract/{stem}.tsv"), &write_session(&session))?;
        index.push_str(&format!("{stem}\t{class}\n"));
    }
    ws.write("extract/index.tsv", index.as_bytes())?;
    let mut summary = header_line::<&str>("extract-summary", &[]);
    summary.push('\n');
    for (p, n) in &counts {
        summary.push_str(&format!("{p}\t{n}\n"));
    }
    ws.write("extract/summary.tsv", summary.as_bytes())?;
    let s = ExtractSummary {
        sessions,
        utterances,
        distinct_predicates: counts.len(),
        failed,
    };
    if !s.failed.is_empty() {
        return Err(CliError::Data(format!(
            "{} of {} session files failed:\n  {}",
            s.failed.len(),
            entries.len(),
            s.failed.join("\n  ")
        )));
    }
    Ok(s)
}

/// Reads everything `extract` wrote, in index order.
pub fn read_extracted(ws: &Workspace) -> Result<Vec<ExtractedSession>, CliError> {
    let index = ws.read_text("extract/index.tsv", "extract")?;
    let mut lines = index.lines();
    parse_header(lines.next(), "extract-index").map_err(|e| CliError::at(&ws.path("extract/index.tsv"), e))?;
    let mut sessions = Vec::new();
    for line in lines {
        let (id, class) = line
            .split_once('\t')
            .ok_or_else(|| CliError::Data(format!("bad extract index line `{line}`")))?;
        let rel = format!("extract/{id}.tsv");
        let text = ws.read_text(&rel, "extract")?;
        let mut rows = text.lines();
        parse_header(rows.next(), "extract").map_err(|e| CliError::at(&ws.path(&rel), e))?;
        let mut utterances = Vec::new();
        for (i, row) in rows.enumerate() {
            let mut f = row.split('\t');
            let sample_id = f.next().unwrap_or_default().to_string();
            let sentence = f
                .next()
                .ok_or_else(|| CliError::at(&ws.path(&rel), format!("line {}: missing sentence field", i + 2)))?
                .to_string();
            let predicates = f
                .map(Predicate::from_name)
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::at(&ws.path(&rel), format!("line {}: {e}", i + 2)))?;
            utterances.push(ExtractedUtterance {
                sample_id,
                sentence,
                predicates,
            });
        }
        sessions.push(ExtractedSession {
            id: id.to_string(),
            class: class.to_string(),
            utterances,
        });
    }
    Ok(sessions)
}

// ---------------------------------------------------------------- dataset

/// Marks test samples: per class, a seeded shuffle of its units (utterances,
/// or whole sessions) and the first `round(n * fraction)` go to test. Classes
/// with at least two units always keep one on each side.
pub fn stratified_split(parsed: &[ParsedUtterance], labels: &LabelSet, split: &SplitConfig) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(split.seed);
    let mut is_test = vec![false; parsed.len()];
    for class in labels.iter() {
        let rows: Vec<usize> = (0..parsed.len()).filter(|&i| parsed[i].label == class).collect();
        let mut units: Vec<Vec<usize>> = if split.by_session {
            let mut by: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            let mut order = Vec::new();
            for &i in &rows {
                let s = parsed[i].session_id.as_str();
                if !by.contains_key(s) {
                    order.push(s);
                }
                by.entry(s).or_default().push(i);
            }
            order.into_iter().map(|s| by.remove(s).unwrap_or_default()).collect()
        } else {
            rows.iter().map(|&i| vec![i]).collect()
        };
        units.shuffle(&mut rng);
        let n = units.len();
        let mut k = (n as f64 * split.test_fraction).round() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        } else {
            k = 0;
        }
        for unit in &units[..k] {
            for &i in unit {
                is_test[i] = true;
            }
        }
    }
    is_test
}

#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub train: usize,
    pub test: usize,
    pub predicates: usize,
    pub per_class: Vec<(String, usize, usize)>,
    pub empty_train_rows: usize,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "train={} test={} predicates={} empty_train_rows={}",
            self.train, self.test, self.predicates, self.empty_train_rows
        )?;
        for (c, tr, te) in &self.per_class {
            write!(f, "\n  {c}: train={tr} test={te}")?;
        }
        Ok(())
    }
}

/// Splits samples and builds the universe (from training samples only) and
/// both grounding tables.
pub fn build_dataset(cfg: &PipelineConfig, ws: &Workspace) -> Result<DatasetSummary, CliError> {
    let sessions = read_extracted(ws)?;
    let parsed: Vec<ParsedUtterance> = sessions
        .iter()
        .flat_map(|s| {
            s.utterances.iter().map(move |u| ParsedUtterance {
                sample_id: u.sample_id.clone(),
                session_id: s.id.clone(),
                label: s.class.clone(),
                predicates: u.predicates.clone(),
            })
        })
        .collect();
    if parsed.is_empty() {
        return Err(CliError::Data("extraction produced no utterances".into()));
    }
    let is_test = stratified_split(&parsed, &cfg.labels, &cfg.split);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    let mut split_tsv = header_line("split", &[format!("seed={}", cfg.split.seed)]);
    split_tsv.push('\n');
    for (u, &t) in parsed.iter().zip(&is_test) {
        split_tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            u.sample_id,
            u.session_id,
            u.label,
            if t { "test" } else { "train" }
        ));
        if t {
            test.push(u.clone());
        } else {
            train.push(u.clone());
        }
    }
    let universe = build_universe(&train)?;
    let tr = build_grounding_table(&universe, &cfg.labels, &train)?;
    let te = build_grounding_table(&universe, &cfg.labels, &test)?;
    fresh_dir(ws, "dataset")?;
    ws.write("dataset/split.tsv", split_tsv.as_bytes())?;
    write_tables(ws, "dataset", &universe, &cfg.labels, &tr, &te)?;
    let (ctr, cte) = (tr.class_counts(), te.class_counts());
    Ok(DatasetSummary {
        train: tr.len(),
        test: te.len(),
        predicates: universe.len(),
        per_class: cfg
            .labels
            .iter()
            .enumerate()
            .map(|(i, c)| (c.to_string(), ctr[i], cte[i]))
            .collect(),
        empty_train_rows: tr.empty_rows(),
    })
}

fn write_tables(
    ws: &Workspace,
    dir: &str,
    universe: &PredicateUniverse,
    labels: &LabelSet,
    train: &GroundingTable,
    test: &GroundingTable,
) -> Result<(), CliError> {
    ws.write(&format!("{dir}/predicates.tsv"), &to_bytes(|b| Ok(write_universe(b, universe, labels)?))?)?;
    ws.write(&format!("{dir}/train.tsv"), &to_bytes(|b| Ok(write_grounding(b, train)?))?)?;
    ws.write(&format!("{dir}/test.tsv"), &to_bytes(|b| Ok(write_grounding(b, test)?))?)?;
    Ok(())
}

/// Universe plus train and test tables from `dir`.
fn read_tables(ws: &Workspace, dir: &str, producer: &str) -> Result<(PredicateUniverse, GroundingTable, GroundingTable), CliError> {
    let (universe, _) = read_universe(ws.input(&format!("{dir}/predicates.tsv"), producer)?)
        .map_err(|e| CliError::at(&ws.path(&format!("{dir}/predicates.tsv")), e))?;
    let train = read_grounding(ws.input(&format!("{dir}/train.tsv"), producer)?, &universe)
        .map_err(|e| CliError::at(&ws.path(&format!("{dir}/train.tsv")), e))?;
    let test = read_grounding(ws.input(&format!("{dir}/test.tsv"), producer)?, &universe)
        .map_err(|e| CliError::at(&ws.path(&format!("{dir}/test.tsv")), e))?;
    Ok((universe, train, test))
}

// ---------------------------------------------------------------- prune

#[derive(Debug, Clone)]
pub struct PruneSummary {
    pub chain: String,
    pub before: usize,
    pub after: usize,
    pub report: PruneReport,
}

impl fmt::Display for PruneSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chain={} predicates {} -> {}", self.chain, self.before, self.after)?;
        for s in &self.report.stages {
            write!(f, "\n  {}: {} -> {}", s.stage, s.input, s.output)?;
        }
        for (c, n) in &self.report.shortfalls {
            write!(f, "\n  shortfall {c}: {n}")?;
        }
        Ok(())
    }
}

pub fn prune(cfg: &PipelineConfig, ws: &Workspace) -> Result<PruneSummary, CliError> {
    let (universe, train, test) = read_tables(ws, "dataset", "build-dataset")?;
    let pruned = match &cfg.prune {
        Some(p) => run_chain(&universe, p)?,
        None => Pruned {
            kept: (0..universe.len()).collect(),
            aliases: BTreeMap::new(),
            report: PruneReport::default(),
        },
    };
    if pruned.kept.is_empty() {
        return Err(CliError::Data(format!(
            "pruning chain `{}` removed all {} predicates{}",
            cfg.chain_label(),
            universe.len(),
            if cfg.chain_label().contains("exclusive") {
                " (exclusive drops every predicate seen in more than one class; try a chain without it)"
            } else {
                ""
            }
        )));
    }
    let tr = apply_pruning(&train, &pruned)?;
    let te = apply_pruning(&test, &pruned)?;
    fresh_dir(ws, "prune")?;
    write_tables(ws, "prune", tr.universe(), &cfg.labels, &tr, &te)?;
    ws.write("prune/report.tsv", &to_bytes(|b| pruned.report.write_summary(b).map_err(io_err))?)?;
    ws.write("prune/mapping.tsv", &to_bytes(|b| pruned.report.write_mapping(b).map_err(io_err))?)?;
    Ok(PruneSummary {
        chain: cfg.chain_label(),
        before: universe.len(),
        after: tr.universe().len(),
        report: pruned.report,
    })
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub predicates: usize,
    pub samples: usize,
    pub final_loss: Vec<(String, f64)>,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "predicates={} samples={}", self.predicates, self.samples)?;
        for (c, l) in &self.final_loss {
            write!(f, "\n  {c}: final loss {l:.6}")?;
        }
        Ok(())
    }
}

pub fn train(cfg: &PipelineConfig, ws: &Workspace) -> Result<TrainSummary, CliError> {
    let (universe, table, _) = read_tables(ws, "prune", "prune")?;
    let model = train_model(&table, &cfg.train)?;
    ws.dir("model")?;
    save_model(ws.path("model/model.tsv"), &model)?;
    Ok(TrainSummary {
        predicates: universe.len(),
        samples: table.len(),
        final_loss: model
            .classes()
            .zip(model.loss_trace())
            .map(|(c, t)| (c.to_string(), t.last().copied().unwrap_or(f64::NAN)))
            .collect(),
    })
}

// ---------------------------------------------------------------- eval

/// Held-out results under one scorer.
#[derive(Debug, Clone)]
pub struct ScorerResult {
    pub scorer: Scorer,
    pub aucs: Vec<(String, f64)>,
    pub accuracy: f64,
}

/// Results under the configured scorer, then under the other one.
#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub primary: ScorerResult,
    pub secondary: ScorerResult,
}

impl EvalSummary {
    /// Per-class AUCs under the configured scorer.
    pub fn aucs(&self) -> &[(String, f64)] {
        &self.primary.aucs
    }
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class\t{}\t{}", self.primary.scorer, self.secondary.scorer)?;
        for ((c, a), (_, b)) in self.primary.aucs.iter().zip(&self.secondary.aucs) {
            write!(f, "\n  {c}: AUC {a:.4}\t{b:.4}")?;
        }
        write!(
            f,
            "\n  multiclass accuracy {:.4}\t{:.4}",
            self.primary.accuracy, self.secondary.accuracy
        )
    }
}

/// Scores the held-out table under both scorers. ROC curves go to
/// `eval/<scorer>/roc_<class>.tsv`; `eval/summary.tsv` lists
/// `scorer TAB metric TAB value` with the configured scorer first.
pub fn eval(cfg: &PipelineConfig, ws: &Workspace) -> Result<EvalSummary, CliError> {
    let model = load_model(ws.path("model/model.tsv")).map_err(|e| CliError::at(&ws.path("model/model.tsv"), e))?;
    let (_, _, test) = read_tables(ws, "prune", "prune")?;
    let primary = cfg.train.scorer;
    let secondary = match primary {
        Scorer::BoundsAverage => Scorer::Linear,
        Scorer::Linear => Scorer::BoundsAverage,
    };
    fresh_dir(ws, "eval")?;
    let mut summary = header_line("eval", &[format!("primary={primary}"), format!("test={}", test.len())]);
    summary.push_str("\nscorer\tmetric\tvalue\n");
    let mut results = Vec::new();
    for scorer in [primary, secondary] {
        let m = model.with_scorer(scorer);
        let rocs = class_rocs(&m, &test)?;
        let accuracy = multiclass_accuracy(&m, &test)?;
        let mut aucs = Vec::new();
        for (class, roc) in test.labels().iter().zip(&rocs) {
            ws.write(
                &format!("eval/{scorer}/roc_{class}.tsv"),
                &to_bytes(|b| write_roc(b, class, roc).map_err(io_err))?,
            )?;
            summary.push_str(&format!("{scorer}\tauc:{class}\t{}\n", format_exact(roc.auc)));
            aucs.push((class.to_string(), roc.auc));
        }
        summary.push_str(&format!("{scorer}\taccuracy\t{}\n", format_exact(accuracy)));
        results.push(ScorerResult { scorer, aucs, accuracy });
    }
    ws.write("eval/summary.tsv", summary.as_bytes())?;
    let secondary = results.pop().expect("two scorers");
    let primary = results.pop().expect("two scorers");
    Ok(EvalSummary { primary, secondary })
}

// ---------------------------------------------------------------- explain

pub fn explain(cfg: &PipelineConfig, ws: &Workspace) -> Result<InsightReport, CliError> {
    let model = load_model(ws.path("model/model.tsv")).map_err(|e| CliError::at(&ws.path("model/model.tsv"), e))?;
    let (universe, _) = read_universe(ws.input("prune/predicates.tsv", "prune")?)?;
    let mut examples: HashMap<String, String> = HashMap::new();
    for s in read_extracted(ws)? {
        for u in s.utterances {
            if u.sentence.is_empty() {
                continue;
            }
            for p in u.predicates {
                examples.entry(p.name()).or_insert_with(|| u.sentence.clone());
            }
        }
    }
    let report = top_k_predicates(&model, &universe, cfg.explain_k, Some(&examples))?;
    fresh_dir(ws, "explain")?;
    ws.write("explain/insights.tsv", &to_bytes(|b| report.write_tsv(b).map_err(io_err))?)?;
    ws.write("explain/insights.txt", report.render_text().as_bytes())?;
    Ok(report)
}

// ---------------------------------------------------------------- bench

#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub rows: Vec<(usize, f64)>,
}

impl fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "count\tseconds")?;
        for (n, s) in &self.rows {
            write!(f, "\n{n}\t{s:.3}")?;
        }
        Ok(())
    }
}

/// Trains on the first `count` dataset predicates for each count and times it.
pub fn bench(cfg: &PipelineConfig, ws: &Workspace, counts: &[usize]) -> Result<BenchSummary, CliError> {
    let (universe, table, _) = read_tables(ws, "dataset", "build-dataset")?;
    if counts.is_empty() {
        return Err(CliError::Usage("no predicate counts given".into()));
    }
    if let Some(&bad) = counts.iter().find(|&&c| c == 0 || c > universe.len()) {
        return Err(CliError::Data(format!(
            "predicate count {bad} is outside 1..={} (the dataset universe)",
            universe.len()
        )));
    }
    let mut rows = Vec::new();
    for &count in counts {
        let t = restrict_table(&table, &(0..count).collect())?;
        let start = Instant::now();
        train_model(&t, &cfg.train)?;
        rows.push((count, start.elapsed().as_secs_f64()));
    }
    let mut out = header_line("bench", &[format!("samples={}", table.len()), format!("epochs={}", cfg.train.epochs)]);
    out.push_str("\ncount\tseconds\n");
    for (n, s) in &rows {
        out.push_str(&format!("{n}\t{s:.6}\n"));
    }
    ws.write("bench/timing.tsv", out.as_bytes())?;
    Ok(BenchSummary { rows })
}

/// extract, build-dataset, prune, train, eval and explain in sequence.
pub fn run_all(cfg: &PipelineConfig, ws: &Workspace, corpus: &Path) -> Result<EvalSummary, CliError> {
    extract(cfg, ws, corpus)?;
    build_dataset(cfg, ws)?;
    prune(cfg, ws)?;
    train(cfg, ws)?;
    let summary = eval(cfg, ws)?;
    explain(cfg, ws)?;
    Ok(summary)
}
