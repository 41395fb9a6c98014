use super::model::{EmissionScores, TransitionModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult<S> {
    /// `P(state_t | obs_0..=t)`, one row per frame
    pub posteriors: Vec<Vec<S>>,
    pub log_likelihood: S,
}

/// Scaled forward pass over per-frame emission probabilities.
/// Returns the normalized alphas and the scaling factors `c_t`.
pub(crate) fn forward_scaled<S: Scalar>(
    trans: &TransitionModel<S>,
    emit: &[Vec<S>],
) -> Result<(Vec<Vec<S>>, Vec<S>)> {
    let n = trans.n_states();
    let mut alphas: Vec<Vec<S>> = Vec::with_capacity(emit.len());
    let mut scales = Vec::with_capacity(emit.len());
    for (t, e) in emit.iter().enumerate() {
        let mut next: Vec<S> = match alphas.last() {
            None => (0..n).map(|s| trans.pi[s] * e[s]).collect(),
            Some(prev) => (0..n)
                .map(|j| {
                    let mut acc = S::zero();
                    for i in 0..=j {
                        acc += prev[i] * trans.a[i][j];
                    }
                    acc * e[j]
                })
                .collect(),
        };
        let c: S = next.iter().copied().sum();
        if !(c > S::zero()) {
            return Err(Error::ImpossibleObservation { t });
        }
        next.iter_mut().for_each(|v| *v /= c);
        alphas.push(next);
        scales.push(c);
    }
    Ok((alphas, scales))
}

/// Scaled backward pass matching [`forward_scaled`]: `beta_t` is divided by
/// `c_{t+1}` at every step so that `alpha_t * beta_t` is the smoothed posterior.
pub(crate) fn backward_scaled<S: Scalar>(
    trans: &TransitionModel<S>,
    emit: &[Vec<S>],
    scales: &[S],
) -> Vec<Vec<S>> {
    let n = trans.n_states();
    let len = emit.len();
    let mut betas = vec![vec![S::one(); n]; len];
    for t in (0..len.saturating_sub(1)).rev() {
        let (head, tail) = betas.split_at_mut(t + 1);
        let next = &tail[0];
        for i in 0..n {
            let mut acc = S::zero();
            for j in i..n {
                acc += trans.a[i][j] * emit[t + 1][j] * next[j];
            }
            head[t][i] = acc / scales[t + 1];
        }
    }
    betas
}

/// Causal filtering: posterior over states given observations up to each frame.
///
/// Log-scores are shifted by their per-frame maximum before exponentiation, so
/// very negative log-likelihoods do not underflow; the shift is added back into
/// the log-likelihood.
pub fn forward_filter<S: Scalar>(
    trans: &TransitionModel<S>,
    scores: &EmissionScores<S>,
) -> Result<ForwardResult<S>> {
    if scores.n_states() != trans.n_states() {
        return Err(Error::DimensionMismatch {
            expected: trans.n_states(),
            got: scores.n_states(),
        });
    }
    let mut shifts = Vec::with_capacity(scores.len());
    let emit: Vec<Vec<S>> = scores
        .rows()
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let m = row.iter().copied().fold(S::neg_infinity(), S::max);
            if m == S::neg_infinity() {
                return Err(Error::ImpossibleObservation { t });
            }
            shifts.push(m);
            Ok(row.iter().map(|&l| (l - m).exp()).collect())
        })
        .collect::<Result<_>>()?;
    let (posteriors, scales) = forward_scaled(trans, &emit)?;
    let log_likelihood = scales.iter().zip(&shifts).map(|(&c, &m)| c.ln() + m).sum();
    Ok(ForwardResult {
        posteriors,
        log_likelihood,
    })
}

fn argmax_lowest<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-frame argmax of the filtered posteriors, ties to the lower state.
pub fn filtered_path<S: Scalar>(result: &ForwardResult<S>) -> Vec<usize> {
    result.posteriors.iter().map(|p| argmax_lowest(p)).collect()
}

/// Most probable state path, by dynamic programming in log space.
/// Ties, both in the recursion and the final state, go to the lower state index.
pub fn viterbi_decode<S: Scalar>(
    trans: &TransitionModel<S>,
    scores: &EmissionScores<S>,
) -> Result<Vec<usize>> {
    let n = trans.n_states();
    if scores.n_states() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: scores.n_states(),
        });
    }
    let log_a: Vec<Vec<S>> = trans
        .a
        .iter()
        .map(|r| r.iter().map(|p| p.ln()).collect())
        .collect();
    let mut delta: Vec<S> = (0..n)
        .map(|s| trans.pi[s].ln() + scores.row(0)[s])
        .collect();
    if delta.iter().all(|&d| d == S::neg_infinity()) {
        return Err(Error::ImpossibleObservation { t: 0 });
    }
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(scores.len());
    back.push(vec![0; n]);
    for t in 1..scores.len() {
        let row = scores.row(t);
        let mut next = vec![S::neg_infinity(); n];
        let mut arg = vec![0usize; n];
        for j in 0..n {
            let mut best = S::neg_infinity();
            let mut best_i = 0;
            for i in 0..n {
                let cand = delta[i] + log_a[i][j];
                if cand > best {
                    best = cand;
                    best_i = i;
                }
            }
            next[j] = best + row[j];
            arg[j] = best_i;
        }
        if next.iter().all(|&d| d == S::neg_infinity()) {
            return Err(Error::ImpossibleObservation { t });
        }
        delta = next;
        back.push(arg);
    }
    let mut path = vec![0usize; scores.len()];
    let mut state = argmax_lowest(&delta);
    for t in (0..scores.len()).rev() {
        path[t] = state;
        state = back[t][state];
    }
    Ok(path)
}

/// Log-probability of a given state path jointly with the observations.
pub fn path_log_probability<S: Scalar>(
    trans: &TransitionModel<S>,
    scores: &EmissionScores<S>,
    path: &[usize],
) -> S {
    let mut lp = trans.pi[path[0]].ln() + scores.row(0)[path[0]];
    for t in 1..path.len() {
        lp += trans.a[path[t - 1]][path[t]].ln() + scores.row(t)[path[t]];
    }
    lp
}
