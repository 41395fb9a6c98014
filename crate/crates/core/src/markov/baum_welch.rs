use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inference::{backward_scaled, forward_scaled};
use super::model::{DiscreteEmissionTable, TransitionModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaumWelchOptions {
    pub max_iter: usize,
    /// stop once the total log-likelihood improves by less than this
    pub tol: f64,
    /// re-estimate the emission table too; off keeps it fixed
    pub update_emissions: bool,
}

impl Default for BaumWelchOptions {
    fn default() -> Self {
        BaumWelchOptions {
            max_iter: 100,
            tol: 1e-6,
            update_emissions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaumWelchResult<S> {
    pub transitions: TransitionModel<S>,
    pub emission: DiscreteEmissionTable<S>,
    /// total log-likelihood of the initial model, then after every update
    pub likelihood_trace: Vec<S>,
}

struct Stats<S> {
    log_likelihood: S,
    transitions: Vec<Vec<S>>,
    emissions: Vec<Vec<S>>,
}

fn expected_counts<S: Scalar>(
    trans: &TransitionModel<S>,
    emission: &DiscreteEmissionTable<S>,
    obs: &[usize],
) -> Result<Stats<S>> {
    let n = trans.n_states();
    let emit: Vec<Vec<S>> = obs
        .iter()
        .map(|&o| emission.b.iter().map(|row| row[o]).collect())
        .collect();
    let (alphas, scales) = forward_scaled(trans, &emit)?;
    let betas = backward_scaled(trans, &emit, &scales);
    let mut xi = vec![vec![S::zero(); n]; n];
    for t in 0..obs.len().saturating_sub(1) {
        for i in 0..n {
            if alphas[t][i] == S::zero() {
                continue;
            }
            for j in i..n {
                xi[i][j] +=
                    alphas[t][i] * trans.a[i][j] * emit[t + 1][j] * betas[t + 1][j] / scales[t + 1];
            }
        }
    }
    let mut gamma_by_symbol = vec![vec![S::zero(); emission.n_symbols()]; n];
    for (t, &o) in obs.iter().enumerate() {
        for s in 0..n {
            gamma_by_symbol[s][o] += alphas[t][s] * betas[t][s];
        }
    }
    Ok(Stats {
        log_likelihood: scales.iter().map(|c| c.ln()).sum(),
        transitions: xi,
        emissions: gamma_by_symbol,
    })
}

fn e_step<S: Scalar>(
    trans: &TransitionModel<S>,
    emission: &DiscreteEmissionTable<S>,
    sequences: &[Vec<usize>],
) -> Result<Stats<S>> {
    let per_seq: Vec<Stats<S>> = sequences
        .par_iter()
        .map(|obs| expected_counts(trans, emission, obs))
        .collect::<Result<_>>()?;
    let n = trans.n_states();
    let mut total = Stats {
        log_likelihood: S::zero(),
        transitions: vec![vec![S::zero(); n]; n],
        emissions: vec![vec![S::zero(); emission.n_symbols()]; n],
    };
    // merged in input order so the result does not depend on scheduling
    for stats in per_seq {
        total.log_likelihood += stats.log_likelihood;
        for (dst, src) in total.transitions.iter_mut().zip(&stats.transitions) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += *s);
        }
        for (dst, src) in total.emissions.iter_mut().zip(&stats.emissions) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += *s);
        }
    }
    Ok(total)
}

/// Rows with no expected mass keep their previous values.
fn normalize_rows<S: Scalar>(counts: &[Vec<S>], previous: &[Vec<S>]) -> Vec<Vec<S>> {
    counts
        .iter()
        .zip(previous)
        .map(|(row, old)| {
            let mass: S = row.iter().copied().sum();
            if mass > S::zero() {
                row.iter().map(|&v| v / mass).collect()
            } else {
                old.clone()
            }
        })
        .collect()
}

/// Multi-sequence EM refinement of the transition matrix (and, optionally, the
/// emission table). The initial distribution is held fixed. Entries that start
/// at zero stay exactly zero because their expected counts are proportional to
/// the current value.
pub fn baum_welch<S: Scalar>(
    trans: &TransitionModel<S>,
    emission: &DiscreteEmissionTable<S>,
    obs_sequences: &[Vec<usize>],
    opts: &BaumWelchOptions,
) -> Result<BaumWelchResult<S>> {
    trans.validate()?;
    emission.validate()?;
    if emission.n_states() != trans.n_states() {
        return Err(Error::DimensionMismatch {
            expected: trans.n_states(),
            got: emission.n_states(),
        });
    }
    if obs_sequences.is_empty() || obs_sequences.iter().any(Vec::is_empty) {
        return Err(Error::invalid(
            "Baum-Welch needs non-empty observation sequences",
        ));
    }
    for seq in obs_sequences {
        emission.check_symbols(seq)?;
    }
    if !(opts.tol >= 0.0) {
        return Err(Error::invalid("Baum-Welch tolerance must be non-negative"));
    }

    let mut current = trans.clone();
    let mut table = emission.clone();
    let mut stats = e_step(&current, &table, obs_sequences)?;
    let mut trace = vec![stats.log_likelihood];
    for _ in 0..opts.max_iter {
        let next_trans = TransitionModel {
            pi: current.pi.clone(),
            a: normalize_rows(&stats.transitions, &current.a),
            structure: current.structure,
        };
        let next_table = if opts.update_emissions {
            DiscreteEmissionTable {
                b: normalize_rows(&stats.emissions, &table.b),
            }
        } else {
            table.clone()
        };
        let next_stats = e_step(&next_trans, &next_table, obs_sequences)?;
        let gain = (next_stats.log_likelihood - stats.log_likelihood).as_f64();
        current = next_trans;
        table = next_table;
        trace.push(next_stats.log_likelihood);
        stats = next_stats;
        if gain < opts.tol {
            break;
        }
    }
    Ok(BaumWelchResult {
        transitions: current,
        emission: table,
        likelihood_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::inference::forward_filter;
    use crate::markov::model::{scores_from_discrete, Structure};

    #[test]
    fn deterministic_model_is_a_fixed_point() {
        let trans = TransitionModel::new(
            vec![1.0, 0.0],
            vec![vec![0.5, 0.5], vec![0.0, 1.0]],
            Structure::UpperTriangular,
        )
        .unwrap();
        let b = DiscreteEmissionTable::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // symbols reveal the states; with A[0] = (1/2, 1/2) this data is the MLE
        let res: BaumWelchResult<f64> = baum_welch(
            &trans,
            &b,
            &[vec![0, 0, 1, 1], vec![0, 0, 1]],
            &BaumWelchOptions::default(),
        )
        .unwrap();
        assert!((res.likelihood_trace[1] - res.likelihood_trace[0]).abs() < 1e-12);
        assert!((res.transitions.a[0][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn likelihood_trace_matches_forward_recomputation() {
        let trans = TransitionModel::new(
            vec![1.0, 0.0, 0.0],
            vec![
                vec![0.6, 0.3, 0.1],
                vec![0.0, 0.7, 0.3],
                vec![0.0, 0.0, 1.0],
            ],
            Structure::UpperTriangular,
        )
        .unwrap();
        let b = DiscreteEmissionTable::new(vec![
            vec![0.7, 0.2, 0.1],
            vec![0.2, 0.6, 0.2],
            vec![0.1, 0.2, 0.7],
        ])
        .unwrap();
        let seqs = vec![
            vec![0, 0, 1, 1, 2, 2, 2],
            vec![0, 1, 0, 2, 2],
            vec![0, 0, 0, 1],
        ];
        let res = baum_welch(&trans, &b, &seqs, &BaumWelchOptions::default()).unwrap();
        assert!(res.likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        let recomputed: f64 = seqs
            .iter()
            .map(|s| {
                forward_filter(
                    &res.transitions,
                    &scores_from_discrete(&res.emission, s).unwrap(),
                )
                .unwrap()
                .log_likelihood
            })
            .sum();
        assert!((recomputed - res.likelihood_trace.last().unwrap()).abs() < 1e-9);
        assert_eq!(res.transitions.a[1][0], 0.0);
        assert_eq!(res.emission, b);
    }

    #[test]
    fn emission_update_behind_flag() {
        let trans = TransitionModel::new(
            vec![1.0, 0.0],
            vec![vec![0.8, 0.2], vec![0.0, 1.0]],
            Structure::Adjacent,
        )
        .unwrap();
        let b = DiscreteEmissionTable::new(vec![vec![0.6, 0.4], vec![0.3, 0.7]]).unwrap();
        let opts = BaumWelchOptions {
            update_emissions: true,
            ..Default::default()
        };
        let res = baum_welch(&trans, &b, &[vec![0, 0, 0, 1, 1, 1, 1]], &opts).unwrap();
        assert_ne!(res.emission, b);
        assert!(res.likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(baum_welch(&trans, &b, &[vec![0, 2]], &opts).is_err());
        assert!(baum_welch(&trans, &b, &[], &opts).is_err());
    }
}
