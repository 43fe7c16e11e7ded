//! Weighted real-valued AND gates with lower/upper truth bounds.
//!
//! A gate computes `raw(x) = bias - sum_i w_i * (1 - x_i)` separately on the
//! lower and upper input bounds and clamps to `[0, 1]`. With non-negative
//! weights the gate is monotone in every input, and with unit weights, unit
//! bias and crisp inputs it is exactly boolean AND. One gate per class makes
//! a one-vs-rest classifier.

mod io;
mod train;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::store::PredicateUniverse;

pub use io::{load_model, read_model, save_model, write_model, ModelIoError};
pub use train::{loss_and_gradient, train, train_with, LossGradient};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LnnError {
    #[error("input length {found} does not match {expected} weights")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid truth bounds [{lower}, {upper}]")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("weight {index} is negative or not finite ({value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training table has no predicates")]
    NoPredicates,
    #[error("training table has no samples")]
    NoSamples,
    #[error("class `{0}` has no positive samples")]
    EmptyClass(String),
    #[error("non-finite loss for class `{class}` at epoch {epoch}")]
    NonFiniteLoss { class: String, epoch: usize },
    #[error("universe fingerprint mismatch: model {model}, data {data}")]
    FingerprintMismatch { model: String, data: String },
}

/// Interval `[lower, upper]` within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthBounds {
    lower: f64,
    upper: f64,
}

impl TruthBounds {
    pub const TRUE: TruthBounds = TruthBounds { lower: 1.0, upper: 1.0 };
    pub const FALSE: TruthBounds = TruthBounds { lower: 0.0, upper: 0.0 };
    pub const UNKNOWN: TruthBounds = TruthBounds { lower: 0.0, upper: 1.0 };

    pub fn new(lower: f64, upper: f64) -> Result<Self, LnnError> {
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower > upper {
            return Err(LnnError::InvalidBounds { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    /// Crisp truth degree `v` (lower = upper = v).
    pub fn crisp(v: f64) -> Result<Self, LnnError> {
        Self::new(v, v)
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Self::TRUE
        } else {
            Self::FALSE
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// How a gate's output becomes a single class score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scorer {
    /// Mean of the clamped lower and upper output bounds.
    #[default]
    BoundsAverage,
    /// `sum_i w_i * x_i`, unclamped and without bias.
    Linear,
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scorer::BoundsAverage => "bounds-average",
            Scorer::Linear => "linear",
        })
    }
}

impl FromStr for Scorer {
    type Err = LnnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bounds-average" => Ok(Scorer::BoundsAverage),
            "linear" => Ok(Scorer::Linear),
            other => Err(LnnError::InvalidConfig(format!("unknown scorer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAndGate {
    class: String,
    weights: Vec<f64>,
    bias: f64,
}

impl WeightedAndGate {
    pub fn new(class: impl Into<String>, weights: Vec<f64>, bias: f64) -> Result<Self, LnnError> {
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(LnnError::InvalidWeight { index, value });
        }
        if !bias.is_finite() {
            return Err(LnnError::InvalidConfig(format!("bias {bias} is not finite")));
        }
        Ok(Self {
            class: class.into(),
            weights,
            bias,
        })
    }

    pub fn class(&self) -> &str {
        &self.class
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn check_len(&self, n: usize) -> Result<(), LnnError> {
        if n != self.weights.len() {
            return Err(LnnError::LengthMismatch {
                expected: self.weights.len(),
                found: n,
            });
        }
        Ok(())
    }

    /// Pre-activation for a crisp sparse grounding: TRUE ids in `true_ids`.
    pub(crate) fn raw_sparse(&self, total_weight: f64, true_ids: &[usize]) -> f64 {
        self.bias - total_weight + true_ids.iter().map(|&i| self.weights[i]).sum::<f64>()
    }

    pub(crate) fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Score of a sparse crisp grounding.
    pub(crate) fn score_sparse(&self, total_weight: f64, true_ids: &[usize], scorer: Scorer) -> f64 {
        match scorer {
            Scorer::BoundsAverage => clamp01(self.raw_sparse(total_weight, true_ids)),
            Scorer::Linear => true_ids.iter().map(|&i| self.weights[i]).sum(),
        }
    }
}

pub(crate) fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Leaky clamp: identity on `[0, 1]`, slope `alpha` outside.
pub(crate) fn leaky_clamp(x: f64, alpha: f64) -> f64 {
    if x < 0.0 {
        alpha * x
    } else if x > 1.0 {
        1.0 + alpha * (x - 1.0)
    } else {
        x
    }
}

pub(crate) fn leaky_slope(x: f64, alpha: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        1.0
    } else {
        alpha
    }
}

fn raw(gate: &WeightedAndGate, xs: impl Iterator<Item = f64>) -> f64 {
    gate.bias - gate.weights.iter().zip(xs).map(|(w, x)| w * (1.0 - x)).sum::<f64>()
}

/// Hard-clamped weighted AND over interval inputs.
pub fn and_activation(gate: &WeightedAndGate, inputs: &[TruthBounds]) -> Result<TruthBounds, LnnError> {
    gate.check_len(inputs.len())?;
    let lower = clamp01(raw(gate, inputs.iter().map(|b| b.lower)));
    let upper = clamp01(raw(gate, inputs.iter().map(|b| b.upper)));
    // monotone in every input, so lower <= upper up to rounding
    Ok(TruthBounds {
        lower: lower.min(upper),
        upper,
    })
}

/// Class score for a crisp boolean grounding.
pub fn gate_score(gate: &WeightedAndGate, grounding: &[bool], scorer: Scorer) -> Result<f64, LnnError> {
    gate.check_len(grounding.len())?;
    Ok(match scorer {
        Scorer::BoundsAverage => {
            let inputs: Vec<TruthBounds> = grounding.iter().map(|&b| TruthBounds::from_bool(b)).collect();
            and_activation(gate, &inputs)?.midpoint()
        }
        Scorer::Linear => gate
            .weights
            .iter()
            .zip(grounding)
            .filter(|(_, &x)| x)
            .map(|(w, _)| w)
            .sum(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Reserved for sampling extensions; full-batch training ignores it.
    pub seed: u64,
    /// Slope of the clamp outside `[0, 1]` during training.
    pub leak: f64,
    /// Initial weight; `None` means `1 / N` for `N` predicates.
    pub init_scale: Option<f64>,
    pub scorer: Scorer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 50,
            seed: 0,
            leak: 0.01,
            init_scale: None,
            scorer: Scorer::BoundsAverage,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LnnError> {
        let bad = |m: String| Err(LnnError::InvalidConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be > 0", self.learning_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(0.0..0.5).contains(&self.leak) {
            return bad(format!("leak {} must be in [0, 0.5)", self.leak));
        }
        if let Some(s) = self.init_scale {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("init scale {s} must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Trained classifier: one gate per class over a shared universe.
#[derive(Debug, Clone, PartialEq)]
pub struct LnnModel {
    pub(crate) fingerprint: String,
    pub(crate) predicate_names: Vec<String>,
    pub(crate) gates: Vec<WeightedAndGate>,
    pub(crate) config: TrainConfig,
    /// Per gate, mean loss at each epoch.
    pub(crate) loss_trace: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    /// Index of the best gate; ties go to the earliest class.
    pub class: usize,
}

impl LnnModel {
    pub fn new(
        predicate_names: Vec<String>,
        gates: Vec<WeightedAndGate>,
        config: TrainConfig,
        loss_trace: Vec<Vec<f64>>,
    ) -> Result<Self, LnnError> {
        for g in &gates {
            g.check_len(predicate_names.len())?;
        }
        let fingerprint = crate::store::fingerprint(predicate_names.iter().map(String::as_str));
        Ok(Self {
            fingerprint,
            predicate_names,
            gates,
            config,
            loss_trace,
        })
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn predicate_names(&self) -> &[String] {
        &self.predicate_names
    }

    pub fn gates(&self) -> &[WeightedAndGate] {
        &self.gates
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn scorer(&self) -> Scorer {
        self.config.scorer
    }

    /// Same model scored differently.
    pub fn with_scorer(&self, scorer: Scorer) -> Self {
        let mut m = self.clone();
        m.config.scorer = scorer;
        m
    }

    pub fn loss_trace(&self) -> &[Vec<f64>] {
        &self.loss_trace
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.gates.iter().map(WeightedAndGate::class)
    }

    pub fn check_universe(&self, universe: &PredicateUniverse) -> Result<(), LnnError> {
        if self.fingerprint != universe.fingerprint() {
            return Err(LnnError::FingerprintMismatch {
                model: self.fingerprint.clone(),
                data: universe.fingerprint().to_string(),
            });
        }
        Ok(())
    }

    /// Per-gate scores of a sparse crisp grounding (ids must be in range).
    pub fn scores_sparse(&self, true_ids: &[usize]) -> Vec<f64> {
        self.gates
            .iter()
            .map(|g| g.score_sparse(g.total_weight(), true_ids, self.config.scorer))
            .collect()
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Scores every gate and picks the best class.
pub fn predict(model: &LnnModel, universe: &PredicateUniverse, grounding: &[bool]) -> Result<Prediction, LnnError> {
    model.check_universe(universe)?;
    let scores = model
        .gates
        .iter()
        .map(|g| gate_score(g, grounding, model.config.scorer))
        .collect::<Result<Vec<_>, _>>()?;
    let class = argmax(&scores);
    Ok(Prediction { scores, class })
}

pub(crate) fn predict_sparse(model: &LnnModel, true_ids: &[usize]) -> Prediction {
    let scores = model.scores_sparse(true_ids);
    let class = argmax(&scores);
    Prediction { scores, class }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::Predicate;
    use crate::store::Provenance;

    fn gate(w: &[f64], b: f64) -> WeightedAndGate {
        WeightedAndGate::new("c", w.to_vec(), b).unwrap()
    }

    #[test]
    fn classical_and() {
        let g = gate(&[1.0, 1.0], 1.0);
        let tt = and_activation(&g, &[TruthBounds::TRUE, TruthBounds::TRUE]).unwrap();
        assert_eq!((tt.lower(), tt.upper()), (1.0, 1.0));
        let tf = and_activation(&g, &[TruthBounds::TRUE, TruthBounds::FALSE]).unwrap();
        assert_eq!((tf.lower(), tf.upper()), (0.0, 0.0));
    }

    #[test]
    fn fractional_inputs() {
        let g = gate(&[1.0, 1.0], 1.0);
        let out = and_activation(
            &g,
            &[TruthBounds::crisp(0.8).unwrap(), TruthBounds::crisp(0.6).unwrap()],
        )
        .unwrap();
        // 1 - (0.2 + 0.4)
        assert!((out.lower() - 0.4).abs() < 1e-12);
        assert!((out.upper() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn unknown_input_widens_bounds() {
        let g = gate(&[1.0, 1.0], 1.0);
        let out = and_activation(&g, &[TruthBounds::TRUE, TruthBounds::UNKNOWN]).unwrap();
        assert_eq!((out.lower(), out.upper()), (0.0, 1.0));
    }

    #[test]
    fn length_mismatch() {
        let g = gate(&[1.0], 1.0);
        assert!(matches!(
            and_activation(&g, &[]),
            Err(LnnError::LengthMismatch { expected: 1, found: 0 })
        ));
        assert!(gate_score(&g, &[true, false], Scorer::Linear).is_err());
    }

    #[test]
    fn linear_score() {
        let g = gate(&[2.0, 3.0, 0.0], 1.0);
        assert_eq!(gate_score(&g, &[true, false, true], Scorer::Linear).unwrap(), 2.0);
        assert_eq!(gate_score(&g, &[false, false, false], Scorer::Linear).unwrap(), 0.0);
    }

    #[test]
    fn bounds_average_equals_clamp_on_crisp() {
        let g = gate(&[0.3, 0.2, 0.9], 1.1);
        let x = [true, false, true];
        let s = gate_score(&g, &x, Scorer::BoundsAverage).unwrap();
        let b = and_activation(&g, &x.map(TruthBounds::from_bool)).unwrap();
        assert_eq!(b.lower(), b.upper());
        assert_eq!(s, b.lower());
        assert!((s - (1.1 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(TruthBounds::new(0.6, 0.4).is_err());
        assert!(TruthBounds::new(-0.1, 0.4).is_err());
        assert!(WeightedAndGate::new("c", vec![-1.0], 1.0).is_err());
        assert!(WeightedAndGate::new("c", vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn leaky_clamp_pieces() {
        assert_eq!(leaky_clamp(0.5, 0.01), 0.5);
        assert_eq!(leaky_clamp(-2.0, 0.01), -0.02);
        assert!((leaky_clamp(3.0, 0.01) - 1.02).abs() < 1e-15);
        assert_eq!(leaky_slope(-1.0, 0.01), 0.01);
        assert_eq!(leaky_slope(1.0, 0.01), 1.0);
    }

    fn universe(n: usize) -> PredicateUniverse {
        let preds = (0..n).map(|i| Predicate::new("k", format!("v{i}")).unwrap()).collect();
        PredicateUniverse::from_parts(preds, vec![Provenance::new(); n]).unwrap()
    }

    #[test]
    fn predict_picks_dominant_and_breaks_ties_by_order() {
        let u = universe(2);
        let names = u.names();
        let m = LnnModel::new(
            names.clone(),
            vec![gate(&[0.1, 0.1], 0.5), gate(&[0.0, 0.9], 0.5)].into_iter().enumerate().map(|(i, mut g)| {
                g.class = format!("c{i}");
                g
            }).collect(),
            TrainConfig { scorer: Scorer::Linear, ..TrainConfig::default() },
            vec![],
        )
        .unwrap();
        assert_eq!(predict(&m, &u, &[false, true]).unwrap().class, 1);

        let zero = LnnModel::new(
            names,
            vec![gate(&[0.0, 0.0], 1.0), gate(&[0.0, 0.0], 1.0)],
            TrainConfig::default(),
            vec![],
        )
        .unwrap();
        assert_eq!(predict(&zero, &u, &[true, true]).unwrap().class, 0);
        assert!(matches!(
            predict(&zero, &universe(3), &[true, true, true]),
            Err(LnnError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for cfg in [
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { epochs: 0, ..TrainConfig::default() },
            TrainConfig { leak: 0.5, ..TrainConfig::default() },
            TrainConfig { init_scale: Some(-1.0), ..TrainConfig::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
        assert_eq!("linear".parse::<Scorer>().unwrap(), Scorer::Linear);
        assert!("softmax".parse::<Scorer>().is_err());
    }
}
