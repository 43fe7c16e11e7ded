use super::{leaky_clamp, leaky_slope, LnnError, LnnModel, TrainConfig, WeightedAndGate};
use crate::exec::Exec;
use crate::store::{GroundingTable, Sample};

/// Samples per reduction chunk. Fixed so that sequential and parallel runs
/// sum in the same order.
const CHUNK: usize = 256;

/// Mean squared loss of a gate and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

struct Partial {
    loss: f64,
    /// sum of dL/draw over the chunk
    slope_sum: f64,
    /// per predicate, sum of dL/draw over chunk samples where it is TRUE
    scatter: Vec<f64>,
}

/// Loss `mean_m (leaky(raw_m) - y_m)^2` for the one-vs-rest target
/// `y_m = [label_m == positive]`, with its gradient in `(weights, bias)`.
///
/// Since `d raw / d w_i = -(1 - x_i)`, the weight gradient is
/// `(-sum_m g_m + sum_{m: x_mi = 1} g_m) / M` with `g_m = dL_m / d raw_m`,
/// which only touches TRUE groundings.
pub fn loss_and_gradient(gate: &WeightedAndGate, samples: &[Sample], positive: usize, leak: f64, exec: Exec) -> LossGradient {
    let n = gate.len();
    let total = gate.total_weight();
    let partials = exec.map_chunks(samples, CHUNK, |_, chunk| {
        let mut p = Partial {
            loss: 0.0,
            slope_sum: 0.0,
            scatter: vec![0.0; n],
        };
        for s in chunk {
            let raw = gate.raw_sparse(total, &s.true_ids);
            let target = if s.label == positive { 1.0 } else { 0.0 };
            let err = leaky_clamp(raw, leak) - target;
            let g = 2.0 * err * leaky_slope(raw, leak);
            p.loss += err * err;
            p.slope_sum += g;
            for &i in &s.true_ids {
                p.scatter[i] += g;
            }
        }
        p
    });
    let mut loss = 0.0;
    let mut slope_sum = 0.0;
    let mut scatter = vec![0.0; n];
    for p in partials {
        loss += p.loss;
        slope_sum += p.slope_sum;
        for (acc, v) in scatter.iter_mut().zip(&p.scatter) {
            *acc += v;
        }
    }
    let m = samples.len().max(1) as f64;
    LossGradient {
        loss: loss / m,
        weights: scatter.into_iter().map(|s| (s - slope_sum) / m).collect(),
        bias: slope_sum / m,
    }
}

fn train_gate(
    table: &GroundingTable,
    class: usize,
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<(WeightedAndGate, Vec<f64>), LnnError> {
    let n = table.universe().len();
    let init = cfg.init_scale.unwrap_or(1.0 / n as f64);
    let label = table.labels().get(class).to_string();
    let mut gate = WeightedAndGate::new(label.clone(), vec![init; n], 1.0)?;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let lg = loss_and_gradient(&gate, table.samples(), class, cfg.leak, exec);
        if !lg.loss.is_finite() {
            return Err(LnnError::NonFiniteLoss { class: label, epoch });
        }
        trace.push(lg.loss);
        for (w, g) in gate.weights.iter_mut().zip(&lg.weights) {
            *w = (*w - cfg.learning_rate * g).max(0.0);
        }
        gate.bias -= cfg.learning_rate * lg.bias;
        if !gate.bias.is_finite() || gate.weights.iter().any(|w| !w.is_finite()) {
            return Err(LnnError::NonFiniteLoss { class: label, epoch });
        }
    }
    Ok((gate, trace))
}

/// Trains one gate per class (one-vs-rest) by full-batch projected gradient
/// descent, using the default execution mode.
pub fn train(table: &GroundingTable, cfg: &TrainConfig) -> Result<LnnModel, LnnError> {
    train_with(table, cfg, Exec::default())
}

/// Like [`train`], with explicit execution mode. Results are bit-identical
/// across modes.
pub fn train_with(table: &GroundingTable, cfg: &TrainConfig, exec: Exec) -> Result<LnnModel, LnnError> {
    cfg.validate()?;
    if table.universe().is_empty() {
        return Err(LnnError::NoPredicates);
    }
    if table.is_empty() {
        return Err(LnnError::NoSamples);
    }
    let counts = table.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(LnnError::EmptyClass(table.labels().get(c).to_string()));
    }
    let classes: Vec<usize> = (0..table.labels().len()).collect();
    let results = exec.map(&classes, |&c| train_gate(table, c, cfg, exec));
    let mut gates = Vec::with_capacity(classes.len());
    let mut traces = Vec::with_capacity(classes.len());
    for r in results {
        let (g, t) = r?;
        gates.push(g);
        traces.push(t);
    }
    LnnModel::new(table.universe().names(), gates, cfg.clone(), traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::Predicate;
    use crate::store::{LabelSet, PredicateUniverse, Provenance};

    fn table(rows: &[(usize, &[usize])], n: usize, labels: &[&str]) -> GroundingTable {
        let preds = (0..n).map(|i| Predicate::new("k", format!("v{i}")).unwrap()).collect();
        let u = PredicateUniverse::from_parts(preds, vec![Provenance::new(); n]).unwrap();
        let samples = rows
            .iter()
            .enumerate()
            .map(|(i, (label, ids))| Sample {
                sample_id: format!("u{i}"),
                session_id: "s".into(),
                label: *label,
                true_ids: ids.to_vec(),
            })
            .collect();
        GroundingTable::new(u, LabelSet::new(labels.iter().copied()).unwrap(), samples).unwrap()
    }

    #[test]
    fn weights_stay_non_negative() {
        let rows: Vec<(usize, &[usize])> = (0..40)
            .map(|i| if i % 2 == 0 { (0, &[0usize, 2][..]) } else { (1, &[1usize, 2][..]) })
            .collect();
        let t = table(&rows, 3, &["a", "b"]);
        let m = train(&t, &TrainConfig { epochs: 200, learning_rate: 0.5, ..TrainConfig::default() }).unwrap();
        for g in m.gates() {
            assert!(g.weights().iter().all(|&w| w >= 0.0));
        }
        assert!(m.loss_trace().iter().flatten().all(|l| l.is_finite()));
        assert_eq!(m.loss_trace()[0].len(), 200);
    }

    #[test]
    fn rejects_degenerate_tables() {
        let t = table(&[(0, &[])], 0, &["a"]);
        assert_eq!(train(&t, &TrainConfig::default()), Err(LnnError::NoPredicates));
        let t = table(&[(0, &[0])], 1, &["a", "b"]);
        assert_eq!(train(&t, &TrainConfig::default()), Err(LnnError::EmptyClass("b".into())));
    }

    #[test]
    fn modes_agree_bitwise() {
        let rows: Vec<(usize, Vec<usize>)> = (0..1000)
            .map(|i| (i % 3, (0..7).filter(|j| (i * 7 + j * 3) % 5 < 2).collect()))
            .collect();
        let rows_ref: Vec<(usize, &[usize])> = rows.iter().map(|(l, v)| (*l, v.as_slice())).collect();
        let t = table(&rows_ref, 7, &["a", "b", "c"]);
        let cfg = TrainConfig::default();
        let a = train_with(&t, &cfg, Exec::Sequential).unwrap();
        let b = train_with(&t, &cfg, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        for (ga, gb) in a.gates().iter().zip(b.gates()) {
            assert_eq!(ga.bias().to_bits(), gb.bias().to_bits());
        }
    }
}
