//! One-dimensional preprocessing of the sensor channels.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of samples before and after the centre of a window of nominal width
/// `window`. Even widths lean one sample into the past.
pub fn window_extent(window: usize) -> (usize, usize) {
    (window / 2, (window - 1) / 2)
}

fn cmp<S: Scalar>(a: &S, b: &S) -> Ordering {
    a.partial_cmp(b).expect("finite values are totally ordered")
}

fn median_of_sorted<S: Scalar>(sorted: &[S]) -> S {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / S::of(2.0)
    }
}

/// Centered sliding-window median, truncated at the sequence boundaries.
///
/// Keeps the current window as a sorted buffer, so each step costs one binary
/// search plus an O(window) shift instead of a full sort.
pub fn median_filter<S: Scalar>(series: &[S], window: usize) -> Result<Vec<S>> {
    if window == 0 {
        return Err(Error::invalid("median window must be at least 1"));
    }
    if series.is_empty() {
        return Err(Error::invalid("median filter input is empty"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "median filter input contains non-finite values",
        ));
    }
    let n = series.len();
    let (before, after) = window_extent(window);
    let mut sorted: Vec<S> = series[..(after + 1).min(n)].to_vec();
    sorted.sort_by(cmp);
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        out.push(median_of_sorted(&sorted));
        if t + 1 == n {
            break;
        }
        let entering = t + 1 + after;
        if entering < n {
            let v = series[entering];
            let pos = sorted.partition_point(|x| cmp(x, &v) == Ordering::Less);
            sorted.insert(pos, v);
        }
        if t >= before {
            let v = series[t - before];
            let pos = sorted.partition_point(|x| cmp(x, &v) == Ordering::Less);
            debug_assert!(sorted[pos] == v);
            sorted.remove(pos);
        }
    }
    Ok(out)
}

/// Residual of a smoothing step: `raw - filtered`, elementwise.
pub fn noise_component<S: Scalar>(raw: &[S], filtered: &[S]) -> Result<Vec<S>> {
    if raw.len() != filtered.len() {
        return Err(Error::LengthMismatch {
            left: raw.len(),
            right: filtered.len(),
        });
    }
    Ok(raw.iter().zip(filtered).map(|(&r, &f)| r - f).collect())
}

fn check_binary(series: &[u8]) -> Result<()> {
    match series.iter().position(|&b| b > 1) {
        Some(i) => Err(Error::invalid(format!(
            "invalid binary value {} at index {i}",
            series[i]
        ))),
        None => Ok(()),
    }
}

/// Running count of active frames since the start of the recording.
pub fn cumulative_sum(series: &[u8]) -> Result<Vec<u64>> {
    check_binary(series)?;
    Ok(series
        .iter()
        .scan(0u64, |acc, &b| {
            *acc += b as u64;
            Some(*acc)
        })
        .collect())
}

/// Running count of 0->1 transitions. A leading 1 counts as an edge.
pub fn rising_edge_sum(series: &[u8]) -> Result<Vec<u64>> {
    check_binary(series)?;
    let mut prev = 0u8;
    let mut count = 0u64;
    Ok(series
        .iter()
        .map(|&b| {
            if b == 1 && prev == 0 {
                count += 1;
            }
            prev = b;
            count
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_median(series: &[f64], window: usize) -> Vec<f64> {
        let (before, after) = window_extent(window);
        (0..series.len())
            .map(|t| {
                let lo = t.saturating_sub(before);
                let hi = (t + after + 1).min(series.len());
                let mut w = series[lo..hi].to_vec();
                w.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = w.len();
                if n % 2 == 1 {
                    w[n / 2]
                } else {
                    (w[n / 2 - 1] + w[n / 2]) / 2.0
                }
            })
            .collect()
    }

    #[test]
    fn median_examples() {
        assert_eq!(
            median_filter(&[5.0, 5.0, 5.0, 5.0], 3).unwrap(),
            vec![5.0; 4]
        );
        assert_eq!(
            median_filter(&[1.0, 2.0, 100.0, 3.0, 4.0], 3).unwrap(),
            vec![1.5, 2.0, 3.0, 4.0, 3.5]
        );
        assert_eq!(median_filter(&[1.0, 2.0, 3.0], 120).unwrap(), vec![2.0; 3]);
        assert_eq!(
            median_filter(&[1.0f32, 2.0, 100.0], 1).unwrap(),
            vec![1.0, 2.0, 100.0]
        );
    }

    #[test]
    fn median_errors() {
        assert!(median_filter::<f64>(&[1.0], 0).is_err());
        assert!(median_filter::<f64>(&[], 3).is_err());
        assert!(median_filter(&[1.0, f64::NAN], 3).is_err());
    }

    #[test]
    fn even_window_extent() {
        assert_eq!(window_extent(120), (60, 59));
        assert_eq!(window_extent(3), (1, 1));
        assert_eq!(window_extent(1), (0, 0));
        // window 2 covers the previous and the current sample
        assert_eq!(
            median_filter(&[0.0, 4.0, 8.0], 2).unwrap(),
            vec![0.0, 2.0, 6.0]
        );
    }

    #[test]
    fn noise_examples() {
        assert_eq!(
            noise_component(&[1.0, 2.0, 100.0], &[1.0, 2.0, 3.0]).unwrap(),
            vec![0.0, 0.0, 97.0]
        );
        assert_eq!(
            noise_component(&[3.0, 4.0], &[3.0, 4.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            noise_component(&[0.0, -1.0], &[1.0, 1.0]).unwrap(),
            vec![-1.0, -2.0]
        );
        assert!(noise_component(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn counting_examples() {
        assert_eq!(
            cumulative_sum(&[0, 1, 1, 0, 1]).unwrap(),
            vec![0, 1, 2, 2, 3]
        );
        assert_eq!(cumulative_sum(&[0; 4]).unwrap(), vec![0; 4]);
        assert_eq!(cumulative_sum(&[1; 4]).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(
            rising_edge_sum(&[0, 1, 1, 0, 1]).unwrap(),
            vec![0, 1, 1, 1, 2]
        );
        assert_eq!(rising_edge_sum(&[1, 1, 0, 1]).unwrap(), vec![1, 1, 1, 2]);
        assert_eq!(rising_edge_sum(&[0; 5]).unwrap(), vec![0; 5]);
        assert!(cumulative_sum(&[0, 2]).is_err());
        assert!(rising_edge_sum(&[3]).is_err());
    }

    proptest! {
        #[test]
        fn median_matches_sorting_oracle(
            series in prop::collection::vec(-50i32..50, 1..200),
            window in 1usize..40,
        ) {
            // small integer range forces many duplicate values
            let series: Vec<f64> = series.into_iter().map(|v| v as f64 / 4.0).collect();
            prop_assert_eq!(median_filter(&series, window).unwrap(), naive_median(&series, window));
        }

        #[test]
        fn noise_reconstructs_raw(series in prop::collection::vec(-1_000_000_000i64..1_000_000_000, 1..100), window in 1usize..30) {
            // sensor readings on a fixed-point grid: every sum and difference is exact
            let series: Vec<f64> = series.into_iter().map(|v| v as f64 / 1024.0).collect();
            let filtered = median_filter(&series, window).unwrap();
            let noise = noise_component(&series, &filtered).unwrap();
            for ((n, f), r) in noise.iter().zip(&filtered).zip(&series) {
                prop_assert_eq!(n + f, *r);
            }
        }

        #[test]
        fn counts_monotone_and_bounded(series in prop::collection::vec(0u8..2, 1..200)) {
            let cum = cumulative_sum(&series).unwrap();
            let edges = rising_edge_sum(&series).unwrap();
            prop_assert!(cum.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(edges.windows(2).all(|w| w[0] <= w[1]));
            let ones = series.iter().filter(|&&b| b == 1).count() as u64;
            prop_assert_eq!(*cum.last().unwrap(), ones);
            prop_assert!(edges.last().unwrap() <= cum.last().unwrap());
        }
    }
}
