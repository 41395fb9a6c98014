use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::filters::{cumulative_sum, median_filter, noise_component, rising_edge_sum};
use super::recording::{SurgeryRecording, NUM_ANALOG, NUM_BINARY};
use crate::error::{Error, Result};

/// Median window used for the analog channels unless configured otherwise.
pub const DEFAULT_MEDIAN_WINDOW: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// binary, analog, elapsed time
    Raw,
    /// analog replaced by its median-filtered version plus a noise channel each
    Filtered,
    /// filtered plus cumulative-sum and rising-edge channels per binary signal
    Augmented,
}

impl FeatureMode {
    pub fn n_features(self) -> usize {
        match self {
            FeatureMode::Raw => NUM_BINARY + NUM_ANALOG + 1,
            FeatureMode::Filtered => NUM_BINARY + 2 * NUM_ANALOG + 1,
            FeatureMode::Augmented => 3 * NUM_BINARY + 2 * NUM_ANALOG + 1,
        }
    }

    pub fn feature_names(self) -> Vec<String> {
        let bin = (1..=NUM_BINARY).map(|i| format!("b{i:02}"));
        let mut names: Vec<String> = bin.collect();
        match self {
            FeatureMode::Raw => names.extend((1..=NUM_ANALOG).map(|i| format!("a{i:02}"))),
            FeatureMode::Filtered | FeatureMode::Augmented => {
                names.extend((1..=NUM_ANALOG).map(|i| format!("med_a{i:02}")));
                names.extend((1..=NUM_ANALOG).map(|i| format!("noise_a{i:02}")));
            }
        }
        names.push("t".into());
        if self == FeatureMode::Augmented {
            names.extend((1..=NUM_BINARY).map(|i| format!("cum_b{i:02}")));
            names.extend((1..=NUM_BINARY).map(|i| format!("edges_b{i:02}")));
        }
        names
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Raw => "raw",
            FeatureMode::Filtered => "filtered",
            FeatureMode::Augmented => "augmented",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FeatureMode::Raw),
            "filtered" => Ok(FeatureMode::Filtered),
            "augmented" => Ok(FeatureMode::Augmented),
            other => Err(Error::invalid(format!("unknown feature mode {other:?}"))),
        }
    }
}

/// Per-frame feature vectors for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub mode: FeatureMode,
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub n_features: usize,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn to_csv(&self, labels: Option<&[super::Phase]>) -> String {
        let mut out = self.names.join(",");
        out.push_str(",phase\n");
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push(',');
            if let Some(l) = labels {
                out.push_str(&(l[i].index() + 1).to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the feature matrix for `recording`. Column order:
/// raw `[b1..b12, a1..a4, t]`; filtered `[b1..b12, med(a1..a4), noise(a1..a4), t]`;
/// augmented appends `[cum(b1..b12), edges(b1..b12)]` to filtered.
pub fn build_features(
    recording: &SurgeryRecording,
    mode: FeatureMode,
    window: usize,
) -> Result<FeatureMatrix> {
    if window == 0 {
        return Err(Error::invalid("median window must be at least 1"));
    }
    let frames = &recording.frames;
    if frames.is_empty() {
        return Err(Error::invalid(format!(
            "recording {} is empty",
            recording.id
        )));
    }
    let n = frames.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(mode.n_features());
    for b in 0..NUM_BINARY {
        columns.push(frames.iter().map(|f| f.binary[b] as f64).collect());
    }
    let analog: Vec<Vec<f64>> = (0..NUM_ANALOG)
        .map(|a| frames.iter().map(|f| f.analog[a]).collect())
        .collect();
    match mode {
        FeatureMode::Raw => columns.extend(analog),
        FeatureMode::Filtered | FeatureMode::Augmented => {
            let filtered = analog
                .iter()
                .map(|s| median_filter(s, window))
                .collect::<Result<Vec<_>>>()?;
            let noise = analog
                .iter()
                .zip(&filtered)
                .map(|(raw, med)| noise_component(raw, med))
                .collect::<Result<Vec<_>>>()?;
            columns.extend(filtered);
            columns.extend(noise);
        }
    }
    columns.push(frames.iter().map(|f| f.t as f64).collect());
    if mode == FeatureMode::Augmented {
        let binary: Vec<Vec<u8>> = (0..NUM_BINARY)
            .map(|b| frames.iter().map(|f| f.binary[b]).collect())
            .collect();
        for series in &binary {
            columns.push(
                cumulative_sum(series)?
                    .into_iter()
                    .map(|c| c as f64)
                    .collect(),
            );
        }
        for series in &binary {
            columns.push(
                rising_edge_sum(series)?
                    .into_iter()
                    .map(|c| c as f64)
                    .collect(),
            );
        }
    }
    debug_assert_eq!(columns.len(), mode.n_features());
    let rows = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Ok(FeatureMatrix {
        mode,
        names: mode.feature_names(),
        rows,
        n_features: mode.n_features(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{Phase, SignalFrame};

    fn recording(n: usize) -> SurgeryRecording {
        let frames = (0..n)
            .map(|i| SignalFrame {
                t: i as u64,
                binary: std::array::from_fn(|b| ((i + b) % 3 == 0) as u8),
                analog: std::array::from_fn(|a| {
                    (i * (a + 1)) as f64 * 0.5 + if i == 2 { 50.0 } else { 0.0 }
                }),
            })
            .collect();
        SurgeryRecording::new("r", frames, Some(vec![Phase::TrocarPlacement; n])).unwrap()
    }

    #[test]
    fn feature_counts() {
        let rec = recording(10);
        for (mode, n) in [
            (FeatureMode::Raw, 17),
            (FeatureMode::Filtered, 21),
            (FeatureMode::Augmented, 45),
        ] {
            let m = build_features(&rec, mode, DEFAULT_MEDIAN_WINDOW).unwrap();
            assert_eq!(m.n_features, n);
            assert_eq!(m.names.len(), n);
            assert!(m
                .rows
                .iter()
                .all(|r| r.len() == n && r.iter().all(|v| v.is_finite())));
        }
    }

    #[test]
    fn column_layout() {
        let rec = recording(6);
        let raw = build_features(&rec, FeatureMode::Raw, 3).unwrap();
        assert_eq!(raw.rows[4][0], rec.frames[4].binary[0] as f64);
        assert_eq!(raw.rows[4][12], rec.frames[4].analog[0]);
        assert_eq!(raw.rows[4][16], 4.0);

        let aug = build_features(&rec, FeatureMode::Augmented, 3).unwrap();
        let a0: Vec<f64> = rec.frames.iter().map(|f| f.analog[0]).collect();
        let med = median_filter(&a0, 3).unwrap();
        assert_eq!(aug.column(12), med);
        let noise: Vec<f64> = a0.iter().zip(&med).map(|(r, m)| r - m).collect();
        assert_eq!(aug.column(16), noise);
        assert_eq!(aug.column(20), raw.column(16));
        let b0: Vec<u8> = rec.frames.iter().map(|f| f.binary[0]).collect();
        let cum: Vec<f64> = cumulative_sum(&b0)
            .unwrap()
            .into_iter()
            .map(|c| c as f64)
            .collect();
        let edges: Vec<f64> = rising_edge_sum(&b0)
            .unwrap()
            .into_iter()
            .map(|c| c as f64)
            .collect();
        assert_eq!(aug.column(21), cum);
        assert_eq!(aug.column(33), edges);
        assert_eq!(aug.names[21], "cum_b01");
        assert_eq!(aug.names[44], "edges_b12");
    }

    #[test]
    fn deterministic_and_errors() {
        let rec = recording(30);
        let a = build_features(&rec, FeatureMode::Augmented, 7).unwrap();
        let b = build_features(&rec, FeatureMode::Augmented, 7).unwrap();
        assert_eq!(a, b);
        assert!(build_features(&rec, FeatureMode::Filtered, 0).is_err());
        assert_eq!(
            "filtered".parse::<FeatureMode>().unwrap(),
            FeatureMode::Filtered
        );
        assert!("cooked".parse::<FeatureMode>().is_err());
    }
}
