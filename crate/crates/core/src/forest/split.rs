use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signals::{Phase, NUM_PHASES};

pub type ClassCounts = [u64; NUM_PHASES];

/// `1 - sum p_c^2` over the class proportions.
pub fn gini_impurity<S: Scalar>(counts: &ClassCounts) -> Result<S> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("gini impurity of an empty node"));
    }
    let n = S::of(total as f64);
    let sum_sq: S = counts
        .iter()
        .map(|&c| {
            let p = S::of(c as f64) / n;
            p * p
        })
        .sum();
    Ok(S::one() - sum_sq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// `sum_c n_c^2 / n` kept as an exact fraction. Maximizing the sum of this
/// quantity over both children minimizes the weighted child Gini impurity.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of_children(sq_left: u64, n_left: u64, sq_right: u64, n_right: u64) -> Self {
        Purity {
            num: sq_left as u128 * n_right as u128 + sq_right as u128 * n_left as u128,
            den: n_left as u128 * n_right as u128,
        }
    }

    fn gt(&self, other: &Purity) -> bool {
        self.num * other.den > other.num * self.den
    }

    fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

pub(crate) fn class_counts(samples: &[usize], labels: &[Phase]) -> ClassCounts {
    let mut counts = [0u64; NUM_PHASES];
    for &i in samples {
        counts[labels[i].index()] += 1;
    }
    counts
}

fn sum_sq(counts: &ClassCounts) -> u64 {
    counts.iter().map(|c| c * c).sum()
}

/// Best Gini split of `samples` (row indices, repeats allowed) over the
/// `candidate_features`, with thresholds at midpoints between consecutive
/// distinct values. Ties go to the lower feature index, then the lower threshold.
/// Returns `None` when no split strictly lowers the impurity.
pub fn best_split(
    samples: &[usize],
    rows: &[Vec<f64>],
    labels: &[Phase],
    candidate_features: &[usize],
) -> Option<Split> {
    find_split(samples, rows, labels, candidate_features, 1)
}

pub(crate) fn find_split(
    samples: &[usize],
    rows: &[Vec<f64>],
    labels: &[Phase],
    candidate_features: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let n = samples.len() as u64;
    let min_leaf = min_samples_leaf.max(1) as u64;
    if n < 2 * min_leaf {
        return None;
    }
    let total = class_counts(samples, labels);
    let parent_sq = sum_sq(&total);
    if parent_sq == n * n {
        return None;
    }
    let parent = Purity {
        num: parent_sq as u128,
        den: n as u128,
    };

    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<(Purity, usize, f64)> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
    for &feature in &features {
        sorted.clear();
        sorted.extend(
            samples
                .iter()
                .map(|&i| (rows[i][feature], labels[i].index())),
        );
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u64; NUM_PHASES];
        let mut right = total;
        let (mut sq_left, mut sq_right) = (0u64, parent_sq);
        for k in 0..sorted.len() - 1 {
            let c = sorted[k].1;
            sq_left += 2 * left[c] + 1;
            left[c] += 1;
            sq_right -= 2 * right[c] - 1;
            right[c] -= 1;

            let (lo, hi) = (sorted[k].0, sorted[k + 1].0);
            if lo == hi {
                continue;
            }
            let n_left = k as u64 + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let score = Purity::of_children(sq_left, n_left, sq_right, n_right);
            if !score.gt(&parent) {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _, _)| score.gt(b)) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid >= lo && mid < hi { mid } else { lo };
                best = Some((score, feature, threshold));
            }
        }
    }
    best.map(|(score, feature, threshold)| Split {
        feature,
        threshold,
        impurity_decrease: (score.value() - parent.value()) / n as f64,
    })
}
