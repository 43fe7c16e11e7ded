//! Slow, direct reference implementations used to check the fast paths.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use plc_core::amr::Predicate;
use plc_core::lnn::WeightedAndGate;
use plc_core::store::{PredicateUniverse, Provenance, Sample};
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- universes

/// Universe over a tiny vocabulary so that containment and collisions are common.
pub fn random_universe<R: Rng>(rng: &mut R, max_len: usize, classes: &[&str]) -> PredicateUniverse {
    let keys = ["have", "HAS_POSSESSION", "feel"];
    let words = ["my", "mom", "down", "big", "red", "dog", "sad", "day"];
    let n = rng.gen_range(1..=max_len);
    let mut names = BTreeSet::new();
    let mut preds = Vec::new();
    let mut prov = Vec::new();
    for _ in 0..n * 3 {
        if preds.len() == n {
            break;
        }
        let len = rng.gen_range(1..=4);
        let value: Vec<&str> = (0..len).map(|_| *words.choose(rng).unwrap()).collect();
        let p = Predicate::new(*keys.choose(rng).unwrap(), value.join(" ")).unwrap();
        if !names.insert(p.name()) {
            continue;
        }
        let mut pv = Provenance::new();
        let support = rng.gen_range(1..=classes.len());
        for c in classes.choose_multiple(rng, support) {
            let sessions: BTreeSet<String> = (0..rng.gen_range(1..=6))
                .map(|_| format!("{c}_s{}", rng.gen_range(0..8)))
                .collect();
            pv.insert(c.to_string(), sessions);
        }
        preds.push(p);
        prov.push(pv);
    }
    PredicateUniverse::from_parts(preds, prov).unwrap()
}

fn contains_contiguous(hay: &[&str], needle: &[&str]) -> bool {
    needle.len() < hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

/// All-pairs containment, closed transitively by repeated relabeling.
/// Returns alias -> representative over `alive`.
pub fn similarity_oracle(u: &PredicateUniverse, alive: &BTreeSet<usize>) -> BTreeMap<usize, usize> {
    let ids: Vec<usize> = alive.iter().copied().collect();
    let toks: Vec<Vec<&str>> = ids.iter().map(|&i| u.predicate(i).value().split(' ').collect()).collect();
    let mut comp: Vec<usize> = (0..ids.len()).collect();
    loop {
        let mut changed = false;
        for a in 0..ids.len() {
            for b in 0..ids.len() {
                if u.predicate(ids[a]).key() != u.predicate(ids[b]).key() {
                    continue;
                }
                if contains_contiguous(&toks[a], &toks[b]) && comp[a] != comp[b] {
                    let m = comp[a].min(comp[b]);
                    comp[a] = m;
                    comp[b] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, &c) in comp.iter().enumerate() {
        groups.entry(c).or_default().push(pos);
    }
    let mut aliases = BTreeMap::new();
    for members in groups.values() {
        let best_len = members.iter().map(|&m| toks[m].len()).max().unwrap();
        let rep = members
            .iter()
            .filter(|&&m| toks[m].len() == best_len)
            .min_by_key(|&&m| u.predicate(ids[m]).value())
            .copied()
            .unwrap();
        for &m in members {
            if m != rep {
                aliases.insert(ids[m], ids[rep]);
            }
        }
    }
    aliases
}

/// Distinct sessions over all classes.
pub fn session_frequency_oracle(prov: &Provenance) -> usize {
    let mut all: Vec<&String> = prov.values().flatten().collect();
    all.sort();
    all.dedup();
    all.len()
}

pub fn exclusive_oracle(u: &PredicateUniverse, alive: &BTreeSet<usize>) -> BTreeSet<usize> {
    alive
        .iter()
        .copied()
        .filter(|&i| u.provenance(i).values().filter(|s| !s.is_empty()).count() == 1)
        .collect()
}

pub fn majority_oracle(prov: &Provenance) -> Option<String> {
    let best = prov.values().map(BTreeSet::len).max().filter(|&n| n > 0)?;
    prov.iter()
        .filter(|(_, s)| s.len() == best)
        .map(|(c, _)| c.clone())
        .min()
}

/// Per class: first `target` of (kept members ranked) ++ (pool members ranked).
pub fn balance_oracle(
    u: &PredicateUniverse,
    kept: &BTreeSet<usize>,
    pool: &BTreeSet<usize>,
    target: usize,
) -> BTreeSet<usize> {
    let rank = |ids: &mut Vec<usize>| {
        ids.sort_by_key(|&i| {
            (
                std::cmp::Reverse(session_frequency_oracle(u.provenance(i))),
                u.predicate(i).name(),
            )
        })
    };
    let mut classes: BTreeSet<String> = BTreeSet::new();
    for &i in kept.iter().chain(pool) {
        if let Some(c) = majority_oracle(u.provenance(i)) {
            classes.insert(c);
        }
    }
    let mut out = BTreeSet::new();
    for c in classes {
        let of = |set: &BTreeSet<usize>, exclude: &BTreeSet<usize>| -> Vec<usize> {
            set.iter()
                .copied()
                .filter(|i| !exclude.contains(i))
                .filter(|&i| majority_oracle(u.provenance(i)).as_deref() == Some(c.as_str()))
                .collect()
        };
        let mut members = of(kept, &BTreeSet::new());
        let mut extra = of(pool, kept);
        rank(&mut members);
        rank(&mut extra);
        out.extend(members.into_iter().chain(extra).take(target));
    }
    out
}

// ---------------------------------------------------------------- ROC

/// Probability that a random positive outscores a random negative, ties as half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Scores with many ties when `tie_levels` is small.
pub fn random_scored<R: Rng>(rng: &mut R, n: usize, tie_levels: Option<u32>) -> (Vec<f64>, Vec<bool>) {
    let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    let scores = (0..n)
        .map(|_| match tie_levels {
            Some(k) => f64::from(rng.gen_range(0..k)) / f64::from(k),
            None => rng.gen::<f64>(),
        })
        .collect();
    (scores, labels)
}

// ---------------------------------------------------------------- gates

pub fn leaky(x: f64, a: f64) -> f64 {
    if x < 0.0 {
        a * x
    } else if x > 1.0 {
        1.0 + a * (x - 1.0)
    } else {
        x
    }
}

/// Dense recomputation of the training loss for one gate.
pub fn dense_loss(weights: &[f64], bias: f64, rows: &[Vec<bool>], labels: &[bool], leak: f64) -> f64 {
    let mut total = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let raw = bias
            - weights
                .iter()
                .zip(x)
                .map(|(w, &xi)| w * (1.0 - if xi { 1.0 } else { 0.0 }))
                .sum::<f64>();
        let e = leaky(raw, leak) - if y { 1.0 } else { 0.0 };
        total += e * e;
    }
    total / rows.len() as f64
}

pub fn dense_raws(weights: &[f64], bias: f64, rows: &[Vec<bool>]) -> Vec<f64> {
    rows.iter()
        .map(|x| bias - weights.iter().zip(x).filter(|(_, &xi)| !xi).map(|(w, _)| w).sum::<f64>())
        .collect()
}

pub fn to_samples(rows: &[Vec<bool>], labels: &[usize]) -> Vec<Sample> {
    rows.iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (r, &l))| Sample {
            sample_id: format!("u{i}"),
            session_id: format!("s{}", i / 4),
            label: l,
            true_ids: r.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect(),
        })
        .collect()
}

pub fn random_gate<R: Rng>(rng: &mut R, n: usize) -> WeightedAndGate {
    let w = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    WeightedAndGate::new("c", w, rng.gen_range(-1.0..3.0)).unwrap()
}

// ---------------------------------------------------------------- fractions

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `num / den` reduced to lowest terms, then rounded once.
pub fn exact_ratio(num: u64, den: u64) -> f64 {
    let g = gcd(num, den).max(1);
    (num / g) as f64 / (den / g) as f64
}
