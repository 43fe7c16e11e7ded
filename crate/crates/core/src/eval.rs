//! Confusion counts, TPR/FPR, ROC curves, AUC and multiclass accuracy.

use std::cmp::Ordering;
use std::io::{self, Write};

use thiserror::Error;

use crate::lnn::{predict_sparse, LnnError, LnnModel};
use crate::store::GroundingTable;
use crate::textio::{format_exact, header_line};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("labels need at least one positive and one negative")]
    SingleClass,
    #[error("rate denominator is zero")]
    ZeroDenominator,
    #[error("score {index} is NaN")]
    NanScore { index: usize },
    #[error("evaluation table is empty")]
    EmptyTable,
    #[error("model classes {model:?} do not match table labels {table:?}")]
    LabelMismatch { model: Vec<String>, table: Vec<String> },
    #[error(transparent)]
    Model(#[from] LnnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(EvalError::SingleClass);
    }
    if let Some(index) = scores.iter().position(|s| s.is_nan()) {
        return Err(EvalError::NanScore { index });
    }
    Ok(())
}

/// Counts with the rule "predicted positive iff score >= t".
pub fn confusion_at_threshold(scores: &[f64], labels: &[bool], t: f64) -> Result<Confusion, EvalError> {
    check_inputs(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= t, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// `TP / (TP + FN)`.
pub fn tpr(c: &Confusion) -> Result<f64, EvalError> {
    let d = c.tp + c.fn_;
    if d == 0 {
        return Err(EvalError::ZeroDenominator);
    }
    Ok(c.tp as f64 / d as f64)
}

/// `FP / (TN + FP)`.
pub fn fpr(c: &Confusion) -> Result<f64, EvalError> {
    let d = c.fp + c.tn;
    if d == 0 {
        return Err(EvalError::ZeroDenominator);
    }
    Ok(c.fp as f64 / d as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Threshold per point; the first is `+inf`.
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

/// Sweeps thresholds over the distinct scores in descending order. Equal
/// scores enter together, so ties give diagonal segments and the area counts
/// them as half a win.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve, EvalError> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area in units of one (positive, negative) pair
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += u128::from(fp - fp0) * u128::from(tp + tp0);
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(t);
    }
    let auc = area2 as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve {
        points,
        thresholds,
        auc,
    })
}

fn check_labels(model: &LnnModel, table: &GroundingTable) -> Result<(), EvalError> {
    if !model.classes().eq(table.labels().iter()) {
        return Err(EvalError::LabelMismatch {
            model: model.classes().map(str::to_string).collect(),
            table: table.labels().as_slice().to_vec(),
        });
    }
    Ok(())
}

/// Per-sample gate scores, `scores[row][class]`.
pub fn score_table(model: &LnnModel, table: &GroundingTable) -> Result<Vec<Vec<f64>>, EvalError> {
    model.check_universe(table.universe())?;
    check_labels(model, table)?;
    Ok(table.samples().iter().map(|s| model.scores_sparse(&s.true_ids)).collect())
}

/// Fraction of samples whose best-scoring gate is the true class.
pub fn multiclass_accuracy(model: &LnnModel, table: &GroundingTable) -> Result<f64, EvalError> {
    model.check_universe(table.universe())?;
    check_labels(model, table)?;
    if table.is_empty() {
        return Err(EvalError::EmptyTable);
    }
    let hits = table
        .samples()
        .iter()
        .filter(|s| predict_sparse(model, &s.true_ids).class == s.label)
        .count();
    Ok(hits as f64 / table.len() as f64)
}

/// One-vs-rest ROC for every class, in label order.
pub fn class_rocs(model: &LnnModel, table: &GroundingTable) -> Result<Vec<RocCurve>, EvalError> {
    let scores = score_table(model, table)?;
    (0..table.labels().len())
        .map(|c| {
            let s: Vec<f64> = scores.iter().map(|row| row[c]).collect();
            let l: Vec<bool> = table.samples().iter().map(|x| x.label == c).collect();
            roc_auc(&s, &l)
        })
        .collect()
}

/// `#plc-roc/1 class=<c>`, then `threshold fpr tpr` rows, then `auc value`.
pub fn write_roc<W: Write>(mut w: W, class: &str, curve: &RocCurve) -> io::Result<()> {
    writeln!(w, "{}", header_line("roc", &[format!("class={class}")]))?;
    writeln!(w, "threshold\tfpr\ttpr")?;
    for (&t, &(x, y)) in curve.thresholds.iter().zip(&curve.points) {
        writeln!(w, "{}\t{}\t{}", format_exact(t), format_exact(x), format_exact(y))?;
    }
    writeln!(w, "auc\t{}", format_exact(curve.auc))
}
