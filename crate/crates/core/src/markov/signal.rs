//! Naive Bernoulli/Gaussian emission model over raw sensor features, used by
//! the HMM-only baseline.

use serde::{Deserialize, Serialize};

use super::model::EmissionScores;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signals::{FeatureMatrix, FeatureMode, Phase, NUM_ANALOG, NUM_BINARY, NUM_PHASES};

pub const MIN_ON_PROBABILITY: f64 = 1e-4;
pub const MIN_STDDEV: f64 = 1e-3;

/// Per-state parameters: one on-probability per binary channel and a
/// (mean, stddev) pair for each analog channel and the elapsed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateProfile<S> {
    pub on_probability: Vec<S>,
    pub mean: Vec<S>,
    pub stddev: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalEmissionModel<S> {
    pub states: Vec<StateProfile<S>>,
}

const N_GAUSSIAN: usize = NUM_ANALOG + 1;

/// Fits the per-state channel models from labeled raw-mode feature matrices.
pub fn fit_signal_emissions<S: Scalar>(
    features: &[&FeatureMatrix],
    labels: &[&[Phase]],
) -> Result<SignalEmissionModel<S>> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let mut count = [0usize; NUM_PHASES];
    let mut on = [[0usize; NUM_BINARY]; NUM_PHASES];
    let mut sum = [[S::zero(); N_GAUSSIAN]; NUM_PHASES];
    for (m, l) in features.iter().zip(labels) {
        if m.mode != FeatureMode::Raw {
            return Err(Error::invalid(
                "signal emissions are fitted on raw-mode features",
            ));
        }
        if m.len() != l.len() {
            return Err(Error::LengthMismatch {
                left: m.len(),
                right: l.len(),
            });
        }
        for (row, phase) in m.rows.iter().zip(l.iter()) {
            let s = phase.index();
            count[s] += 1;
            for (c, v) in row[..NUM_BINARY].iter().enumerate() {
                on[s][c] += (*v >= 0.5) as usize;
            }
            for (g, v) in row[NUM_BINARY..].iter().enumerate() {
                sum[s][g] += S::of(*v);
            }
        }
    }
    if let Some(missing) = count.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!(
            "phase {:?} is absent from the training labels",
            Phase::ALL[missing].name()
        )));
    }
    let means: Vec<[S; N_GAUSSIAN]> = (0..NUM_PHASES)
        .map(|s| sum[s].map(|v| v / S::of_usize(count[s])))
        .collect();
    let mut sq = [[S::zero(); N_GAUSSIAN]; NUM_PHASES];
    for (m, l) in features.iter().zip(labels) {
        for (row, phase) in m.rows.iter().zip(l.iter()) {
            let s = phase.index();
            for (g, v) in row[NUM_BINARY..].iter().enumerate() {
                let d = S::of(*v) - means[s][g];
                sq[s][g] += d * d;
            }
        }
    }
    let (p_lo, p_hi) = (
        S::of(MIN_ON_PROBABILITY),
        S::one() - S::of(MIN_ON_PROBABILITY),
    );
    let states = (0..NUM_PHASES)
        .map(|s| {
            let n = S::of_usize(count[s]);
            StateProfile {
                on_probability: on[s]
                    .iter()
                    .map(|&k| (S::of_usize(k) / n).max(p_lo).min(p_hi))
                    .collect(),
                mean: means[s].to_vec(),
                stddev: sq[s]
                    .iter()
                    .map(|&v| (v / n).sqrt().max(S::of(MIN_STDDEV)))
                    .collect(),
            }
        })
        .collect();
    Ok(SignalEmissionModel { states })
}

impl<S: Scalar> SignalEmissionModel<S> {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Sum of per-channel log masses/densities of one raw feature row.
    pub fn log_likelihood(&self, state: usize, row: &[f64]) -> S {
        let p = &self.states[state];
        let half_log_2pi = S::of(0.5 * (2.0 * std::f64::consts::PI).ln());
        let mut total = S::zero();
        for (c, v) in row[..NUM_BINARY].iter().enumerate() {
            let q = p.on_probability[c];
            total += if *v >= 0.5 {
                q.ln()
            } else {
                (S::one() - q).ln()
            };
        }
        for (g, v) in row[NUM_BINARY..NUM_BINARY + N_GAUSSIAN].iter().enumerate() {
            let z = (S::of(*v) - p.mean[g]) / p.stddev[g];
            total -= half_log_2pi + p.stddev[g].ln() + S::of(0.5) * z * z;
        }
        total
    }

    pub fn score(&self, features: &FeatureMatrix) -> Result<EmissionScores<S>> {
        if features.mode != FeatureMode::Raw {
            return Err(Error::invalid("signal emissions score raw-mode features"));
        }
        EmissionScores::new(
            features
                .rows
                .iter()
                .map(|row| {
                    (0..self.n_states())
                        .map(|s| self.log_likelihood(s, row))
                        .collect()
                })
                .collect(),
        )
    }
}
