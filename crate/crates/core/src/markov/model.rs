use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which forward transitions a left-to-right model may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// stay, or advance by exactly one state
    Adjacent,
    /// stay, or jump to any later state
    #[default]
    UpperTriangular,
}

impl Structure {
    pub fn allows(self, from: usize, to: usize) -> bool {
        match self {
            Structure::Adjacent => to == from || to == from + 1,
            Structure::UpperTriangular => to >= from,
        }
    }

    pub fn successors(self, from: usize, n_states: usize) -> impl Iterator<Item = usize> {
        (from..n_states).filter(move |&to| self.allows(from, to))
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Adjacent => "adjacent",
            Structure::UpperTriangular => "upper_triangular",
        })
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" => Ok(Structure::Adjacent),
            "upper_triangular" => Ok(Structure::UpperTriangular),
            other => Err(Error::invalid(format!(
                "unknown transition structure {other:?}"
            ))),
        }
    }
}

fn check_distribution<S: Scalar>(row: &[S], what: &str) -> Result<()> {
    if row.iter().any(|&p| !p.is_finite() || p < S::zero()) {
        return Err(Error::invalid(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: S = row.iter().copied().sum();
    if (sum - S::one()).abs() > S::unit_tolerance() {
        return Err(Error::invalid(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Initial distribution and transition matrix of a left-to-right chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel<S> {
    pub pi: Vec<S>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<S>>,
    pub structure: Structure,
}

impl<S: Scalar> TransitionModel<S> {
    pub fn new(pi: Vec<S>, a: Vec<Vec<S>>, structure: Structure) -> Result<Self> {
        let model = TransitionModel { pi, a, structure };
        model.validate()?;
        Ok(model)
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    /// Point mass on the first state.
    pub fn start_distribution(n_states: usize) -> Vec<S> {
        let mut pi = vec![S::zero(); n_states];
        pi[0] = S::one();
        pi
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pi.len();
        if n == 0 {
            return Err(Error::invalid("transition model has no states"));
        }
        check_distribution(&self.pi, "initial distribution")?;
        if self.a.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.a.len(),
            });
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            check_distribution(row, &format!("transition row {i}"))?;
            if let Some(j) = (0..n).find(|&j| !self.structure.allows(i, j) && row[j] != S::zero()) {
                return Err(Error::invalid(format!(
                    "transition {i}->{j} is not allowed under {} structure",
                    self.structure
                )));
            }
        }
        Ok(())
    }
}

/// `B[s][o]`: probability of observing symbol `o` while in state `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEmissionTable<S> {
    #[serde(rename = "B")]
    pub b: Vec<Vec<S>>,
}

impl<S: Scalar> DiscreteEmissionTable<S> {
    pub fn new(b: Vec<Vec<S>>) -> Result<Self> {
        let table = DiscreteEmissionTable { b };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_symbols();
        if self.b.is_empty() || m == 0 {
            return Err(Error::invalid("emission table is empty"));
        }
        for (s, row) in self.b.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            check_distribution(row, &format!("emission row {s}"))?;
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.b.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }

    pub(crate) fn check_symbols(&self, obs: &[usize]) -> Result<()> {
        match obs.iter().position(|&o| o >= self.n_symbols()) {
            Some(t) => Err(Error::invalid(format!(
                "observation symbol {} at t={t} is outside 0..{}",
                obs[t],
                self.n_symbols()
            ))),
            None => Ok(()),
        }
    }
}

/// Per-frame, per-state log-likelihoods `log P(obs_t | state)`.
/// Entries may be `-inf` (impossible) but never NaN or `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionScores<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> EmissionScores<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 {
            return Err(Error::invalid("emission scores are empty"));
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| v.is_nan() || *v == S::infinity()) {
                return Err(Error::invalid("emission scores contain NaN or +inf"));
            }
        }
        Ok(EmissionScores { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> &[S] {
        &self.rows[t]
    }
}

/// Looks up `log B[s][obs_t]` for every frame and state.
pub fn scores_from_discrete<S: Scalar>(
    emission: &DiscreteEmissionTable<S>,
    obs: &[usize],
) -> Result<EmissionScores<S>> {
    emission.check_symbols(obs)?;
    EmissionScores::new(
        obs.iter()
            .map(|&o| emission.b.iter().map(|row| row[o].ln()).collect())
            .collect(),
    )
}

/// Estimates transitions by counting consecutive label pairs, adding
/// `smoothing` to every allowed entry and normalizing each row. Rows without
/// mass become uniform over their allowed successors; disallowed transitions
/// (including observed skips under adjacent structure) stay exactly zero.
pub fn init_transitions_from_labels<S: Scalar>(
    label_sequences: &[Vec<usize>],
    n_states: usize,
    structure: Structure,
    smoothing: S,
) -> Result<TransitionModel<S>> {
    if !(smoothing >= S::zero()) {
        return Err(Error::invalid("smoothing must be non-negative"));
    }
    if label_sequences.is_empty() || n_states == 0 {
        return Err(Error::invalid(
            "no label sequences to count transitions from",
        ));
    }
    let mut counts = vec![vec![S::zero(); n_states]; n_states];
    for seq in label_sequences {
        if let Some(&bad) = seq.iter().find(|&&s| s >= n_states) {
            return Err(Error::invalid(format!("state {bad} outside 0..{n_states}")));
        }
        for (k, w) in seq.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::NonMonotone { t: k as u64 + 1 });
            }
            if structure.allows(w[0], w[1]) {
                counts[w[0]][w[1]] += S::one();
            }
        }
    }
    let a = counts
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            for j in structure.successors(i, n_states) {
                row[j] += smoothing;
            }
            let mass: S = row.iter().copied().sum();
            if mass > S::zero() {
                row.iter_mut().for_each(|v| *v /= mass);
            } else {
                let allowed: Vec<usize> = structure.successors(i, n_states).collect();
                let u = S::one() / S::of_usize(allowed.len());
                for j in allowed {
                    row[j] = u;
                }
            }
            row
        })
        .collect();
    TransitionModel::new(TransitionModel::start_distribution(n_states), a, structure)
}
