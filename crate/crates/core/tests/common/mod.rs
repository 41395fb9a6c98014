//! Brute-force reference implementations and random generators shared by the
//! integration tests. Everything here is deliberately naive.
#![allow(dead_code)]

use std::collections::BTreeSet;

use phasekit::markov::Structure;
use phasekit::signals::{Phase, NUM_PHASES};
use phasekit::{DiscreteEmissionTable, EmissionScores, TransitionModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_distribution(
    rng: &mut ChaCha8Rng,
    support: &[usize],
    n: usize,
    zero_prob: f64,
) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for &j in support {
        if rng.random::<f64>() >= zero_prob {
            w[j] = rng.random_range(0.05..1.0);
        }
    }
    if w.iter().all(|&x| x == 0.0) {
        w[support[rng.random_range(0..support.len())]] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Random left-to-right chain: structure drawn at random and some allowed
/// entries zeroed out on top of the structural zeros.
pub fn random_transitions(rng: &mut ChaCha8Rng, n: usize) -> TransitionModel {
    let structure = if rng.random::<bool>() {
        Structure::Adjacent
    } else {
        Structure::UpperTriangular
    };
    let all: Vec<usize> = (0..n).collect();
    let pi = random_distribution(rng, &all, n, 0.3);
    let a = (0..n)
        .map(|i| {
            let allowed: Vec<usize> = (0..n).filter(|&j| structure.allows(i, j)).collect();
            random_distribution(rng, &allowed, n, 0.3)
        })
        .collect();
    TransitionModel::new(pi, a, structure).unwrap()
}

pub fn random_scores(rng: &mut ChaCha8Rng, t: usize, n: usize) -> EmissionScores {
    EmissionScores::new(
        (0..t)
            .map(|_| (0..n).map(|_| rng.random_range(-6.0..0.0)).collect())
            .collect(),
    )
    .unwrap()
}

pub fn random_emission_table(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DiscreteEmissionTable {
    let symbols: Vec<usize> = (0..m).collect();
    DiscreteEmissionTable::new(
        (0..n)
            .map(|_| random_distribution(rng, &symbols, m, 0.0))
            .collect(),
    )
    .unwrap()
}

/// All n^t state paths in lexicographic order.
pub fn all_paths(n: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..t {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |s| {
                    let mut q = p.clone();
                    q.push(s);
                    q
                })
            })
            .collect();
    }
    out
}

/// Joint probability of a path and the observations, in probability space.
pub fn path_probability(trans: &TransitionModel, scores: &EmissionScores, path: &[usize]) -> f64 {
    let mut p = trans.pi[path[0]] * scores.row(0)[path[0]].exp();
    for t in 1..path.len() {
        p *= trans.a[path[t - 1]][path[t]] * scores.row(t)[path[t]].exp();
    }
    p
}

/// Filtered posteriors and log-likelihood by summing over every path prefix.
pub fn enumerate_forward(trans: &TransitionModel, scores: &EmissionScores) -> (Vec<Vec<f64>>, f64) {
    let n = trans.n_states();
    let mut posteriors = Vec::new();
    let mut total = 0.0;
    for t in 1..=scores.len() {
        let mut mass = vec![0.0; n];
        for path in all_paths(n, t) {
            mass[path[t - 1]] += path_probability(trans, scores, &path);
        }
        total = mass.iter().sum();
        posteriors.push(mass.iter().map(|m| m / total).collect());
    }
    (posteriors, total.ln())
}

/// Log score of a path, accumulated in the same order as the dynamic program.
pub fn path_log_score(trans: &TransitionModel, scores: &EmissionScores, path: &[usize]) -> f64 {
    let mut lp = trans.pi[path[0]].ln() + scores.row(0)[path[0]];
    for t in 1..path.len() {
        lp = lp + trans.a[path[t - 1]][path[t]].ln() + scores.row(t)[path[t]];
    }
    lp
}

/// Maximum-probability path by enumeration. Among equal maxima the path
/// that is smallest when read from the last frame backwards wins, which is
/// what lowest-index tie breaking during backtracking produces.
pub fn enumerate_viterbi(trans: &TransitionModel, scores: &EmissionScores) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for path in all_paths(trans.n_states(), scores.len()) {
        let lp = path_log_score(trans, scores, &path);
        let better = match &best {
            None => true,
            Some((b, bp)) => lp > *b || (lp == *b && path.iter().rev().lt(bp.iter().rev())),
        };
        if better {
            best = Some((lp, path));
        }
    }
    best.unwrap().1
}

pub fn naive_median(series: &[f64], window: usize) -> Vec<f64> {
    let before = window / 2;
    let after = (window - 1) / 2;
    (0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after).min(series.len() - 1);
            let mut w = series[lo..=hi].to_vec();
            w.sort_by(f64::total_cmp);
            let m = w.len();
            if m % 2 == 1 {
                w[m / 2]
            } else {
                (w[m / 2 - 1] + w[m / 2]) / 2.0
            }
        })
        .collect()
}

pub fn naive_cumsum(series: &[u8]) -> Vec<u64> {
    (0..series.len())
        .map(|i| series[..=i].iter().map(|&b| b as u64).sum())
        .collect()
}

pub fn naive_edges(series: &[u8]) -> Vec<u64> {
    (0..series.len())
        .map(|i| {
            (0..=i)
                .filter(|&k| series[k] == 1 && (k == 0 || series[k - 1] == 0))
                .count() as u64
        })
        .collect()
}

pub fn random_labels(rng: &mut ChaCha8Rng, len: usize) -> Vec<Phase> {
    (0..len)
        .map(|_| Phase::ALL[rng.random_range(0..NUM_PHASES)])
        .collect()
}

pub fn oracle_accuracy(truth: &[Phase], pred: &[Phase]) -> f64 {
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// |T ∩ P| / |T ∪ P| over frame-index sets; None when both sets are empty.
pub fn oracle_jaccard(truth: &[Phase], pred: &[Phase], phase: Phase) -> Option<f64> {
    let t: BTreeSet<usize> = (0..truth.len()).filter(|&i| truth[i] == phase).collect();
    let p: BTreeSet<usize> = (0..pred.len()).filter(|&i| pred[i] == phase).collect();
    let union = t.union(&p).count();
    (union > 0).then(|| t.intersection(&p).count() as f64 / union as f64)
}

pub fn is_monotone(labels: &[Phase]) -> bool {
    labels.windows(2).all(|w| w[0] <= w[1])
}
