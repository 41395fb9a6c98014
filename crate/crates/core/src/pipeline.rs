//! Combined architecture: the forest classifies frames, its symbols are fed to
//! a left-to-right HMM whose emission table is the forest's confusion matrix on
//! held-out training surgeries.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{train_forest_rows, ForestParams, RandomForest};
use crate::markov::{
    baum_welch, decode, init_transitions_from_labels, scores_from_discrete, BaumWelchOptions,
    DecodeMode, DiscreteEmissionTable, Emission, HmmModel, Structure, TransitionModel,
};
use crate::scalar::Scalar;
use crate::seed::derived_rng;
use crate::signals::{
    build_features, phase_indices, phases_from_indices, FeatureMatrix, FeatureMode, Phase,
    SurgeryRecording, DEFAULT_MEDIAN_WINDOW, NUM_PHASES,
};

pub type ConfusionMatrix = [[u64; NUM_PHASES]; NUM_PHASES];

const SPLIT_STREAM: u64 = 0x5917;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedParams {
    pub forest: ForestParams,
    pub mode: FeatureMode,
    pub window: usize,
    pub split_fraction: f64,
    pub split_seed: u64,
    pub smoothing: f64,
    pub structure: Structure,
    pub decode_mode: DecodeMode,
    pub baum_welch: BaumWelchOptions,
}

impl Default for CombinedParams {
    fn default() -> Self {
        CombinedParams::for_mode(FeatureMode::Raw, 0)
    }
}

impl CombinedParams {
    pub fn for_mode(mode: FeatureMode, seed: u64) -> Self {
        CombinedParams {
            forest: ForestParams::for_features(mode.n_features(), seed),
            mode,
            window: DEFAULT_MEDIAN_WINDOW,
            split_fraction: 0.5,
            split_seed: seed,
            smoothing: 1e-6,
            structure: Structure::UpperTriangular,
            decode_mode: DecodeMode::Viterbi,
            baum_welch: BaumWelchOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.forest.validate(self.mode.n_features())?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid("split_fraction must lie in (0, 1)"));
        }
        if !(self.smoothing >= 0.0) {
            return Err(Error::invalid("smoothing must be non-negative"));
        }
        if self.window == 0 {
            return Err(Error::invalid("median window must be at least 1"));
        }
        Ok(())
    }
}

/// Splits surgery indices into two disjoint parts after a seeded shuffle.
/// The first part has `max(1, round(fraction * n))` surgeries, capped so the
/// second part is never empty. Both parts are returned in ascending order.
pub fn split_training_surgeries(
    n: usize,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::invalid("splitting needs at least 2 surgeries"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid("split fraction must lie in (0, 1)"));
    }
    let size = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut derived_rng(seed, &[SPLIT_STREAM]));
    let mut first = order[..size].to_vec();
    let mut second = order[size..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

/// Rows are ground truth, columns predictions.
pub fn confusion_matrix(truth: &[Phase], predicted: &[Phase]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    let mut counts = [[0u64; NUM_PHASES]; NUM_PHASES];
    for (t, p) in truth.iter().zip(predicted) {
        counts[t.index()][p.index()] += 1;
    }
    Ok(counts)
}

/// Row-normalizes confusion counts into an emission table:
/// `B[s][o] = (counts[s][o] + smoothing) / (row_sum + K * smoothing)`.
/// Rows without any mass become uniform.
pub fn emission_from_confusion<S: Scalar, C: AsRef<[u64]>>(
    counts: &[C],
    smoothing: S,
) -> Result<DiscreteEmissionTable<S>> {
    if !(smoothing >= S::zero()) {
        return Err(Error::invalid("smoothing must be non-negative"));
    }
    let k = counts.len();
    let rows = counts
        .iter()
        .map(|row| {
            let row = row.as_ref();
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            let total = S::of(row.iter().sum::<u64>() as f64) + S::of_usize(k) * smoothing;
            if total > S::zero() {
                Ok(row
                    .iter()
                    .map(|&c| (S::of(c as f64) + smoothing) / total)
                    .collect())
            } else {
                Ok(vec![S::one() / S::of_usize(k); k])
            }
        })
        .collect::<Result<Vec<Vec<S>>>>()?;
    DiscreteEmissionTable::new(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// surgeries used to train the forest
    pub forest_ids: Vec<String>,
    /// surgeries used to calibrate the HMM
    pub hmm_ids: Vec<String>,
    pub confusion: ConfusionMatrix,
    /// forest output on each HMM-calibration surgery, in `hmm_ids` order
    pub hmm_observations: Vec<Vec<Phase>>,
    pub likelihood_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedModel {
    pub forest: RandomForest,
    pub hmm: HmmModel<f64>,
    pub params: CombinedParams,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictMethod {
    Rf,
    HmmFiltering,
    HmmViterbi,
}

pub fn labeled_features(
    surgeries: &[SurgeryRecording],
    mode: FeatureMode,
    window: usize,
) -> Result<Vec<FeatureMatrix>> {
    surgeries
        .iter()
        .map(|s| {
            s.labels()?;
            build_features(s, mode, window)
        })
        .collect()
}

pub(crate) fn stack_rows(
    features: &[&FeatureMatrix],
    labels: &[&[Phase]],
) -> (Vec<Vec<f64>>, Vec<Phase>) {
    let rows = features
        .iter()
        .flat_map(|m| m.rows.iter().cloned())
        .collect();
    let y = labels.iter().flat_map(|l| l.iter().copied()).collect();
    (rows, y)
}

/// Trains the combined model:
/// forest on the first split, forest confusion on the second split as the
/// emission table, transitions counted from the second split's labels and then
/// refined by Baum-Welch on the forest's symbol sequences.
pub fn train_combined(
    surgeries: &[SurgeryRecording],
    params: &CombinedParams,
) -> Result<CombinedModel> {
    params.validate()?;
    let features = labeled_features(surgeries, params.mode, params.window)?;
    train_combined_with_features(surgeries, &features, params)
}

pub(crate) fn train_combined_with_features(
    surgeries: &[SurgeryRecording],
    features: &[FeatureMatrix],
    params: &CombinedParams,
) -> Result<CombinedModel> {
    params.validate()?;
    if surgeries.len() < 2 {
        return Err(Error::invalid(
            "combined training needs at least 2 labeled surgeries",
        ));
    }
    let labels: Vec<&[Phase]> = surgeries
        .iter()
        .map(|s| s.labels())
        .collect::<Result<_>>()?;
    let (part1, part2) =
        split_training_surgeries(surgeries.len(), params.split_fraction, params.split_seed)?;

    let f1: Vec<&FeatureMatrix> = part1.iter().map(|&i| &features[i]).collect();
    let l1: Vec<&[Phase]> = part1.iter().map(|&i| labels[i]).collect();
    let (rows, y) = stack_rows(&f1, &l1);
    let forest = train_forest_rows(&rows, &params.mode.feature_names(), &y, &params.forest)?;

    let observations: Vec<Vec<Phase>> = part2
        .iter()
        .map(|&i| forest.predict_matrix(&features[i]))
        .collect::<Result<_>>()?;
    let mut confusion = [[0u64; NUM_PHASES]; NUM_PHASES];
    for (&i, obs) in part2.iter().zip(&observations) {
        let c = confusion_matrix(labels[i], obs)?;
        for (dst, src) in confusion.iter_mut().flatten().zip(c.iter().flatten()) {
            *dst += src;
        }
    }
    let mut warnings = Vec::new();
    for (p, row) in confusion.iter().enumerate() {
        if row.iter().all(|&c| c == 0) {
            warnings.push(format!(
                "phase {:?} absent from the HMM calibration split; its emission row is uniform",
                Phase::ALL[p].name()
            ));
        }
    }
    let emission = emission_from_confusion(&confusion, params.smoothing)?;
    let truth: Vec<Vec<usize>> = part2.iter().map(|&i| phase_indices(labels[i])).collect();
    let initial =
        init_transitions_from_labels(&truth, NUM_PHASES, params.structure, params.smoothing)?;
    let symbols: Vec<Vec<usize>> = observations.iter().map(|o| phase_indices(o)).collect();
    let refined = baum_welch(&initial, &emission, &symbols, &params.baum_welch)?;

    Ok(CombinedModel {
        forest,
        hmm: HmmModel::new(refined.transitions, Emission::Discrete(refined.emission)),
        params: params.clone(),
        provenance: Provenance {
            forest_ids: part1.iter().map(|&i| surgeries[i].id.clone()).collect(),
            hmm_ids: part2.iter().map(|&i| surgeries[i].id.clone()).collect(),
            confusion,
            hmm_observations: observations,
            likelihood_trace: refined.likelihood_trace,
            warnings,
        },
    })
}

impl CombinedModel {
    pub fn transitions(&self) -> Result<TransitionModel<f64>> {
        self.hmm.transitions()
    }

    pub fn emission(&self) -> Result<&DiscreteEmissionTable<f64>> {
        match &self.hmm.emission {
            Emission::Discrete(table) => Ok(table),
            Emission::Signal(_) => Err(Error::invalid(
                "combined model carries a non-discrete emission model",
            )),
        }
    }

    /// Forest symbols and the HMM decode of them, for one feature matrix.
    pub fn predict_features(
        &self,
        features: &FeatureMatrix,
        mode: DecodeMode,
    ) -> Result<(Vec<Phase>, Vec<Phase>)> {
        if features.mode != self.params.mode {
            return Err(Error::invalid(format!(
                "model expects {} features, got {}",
                self.params.mode, features.mode
            )));
        }
        let rf = self.forest.predict_matrix(features)?;
        let scores = scores_from_discrete(self.emission()?, &phase_indices(&rf))?;
        let path = decode(&self.transitions()?, &scores, mode)?;
        Ok((rf, phases_from_indices(&path)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: CombinedModel = serde_json::from_str(text)?;
        model.transitions()?;
        model.emission()?.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn predict_phases(
    model: &CombinedModel,
    recording: &SurgeryRecording,
    method: PredictMethod,
) -> Result<Vec<Phase>> {
    let features = build_features(recording, model.params.mode, model.params.window)?;
    match method {
        PredictMethod::Rf => model.forest.predict_matrix(&features),
        PredictMethod::HmmFiltering => {
            Ok(model.predict_features(&features, DecodeMode::Filtering)?.1)
        }
        PredictMethod::HmmViterbi => Ok(model.predict_features(&features, DecodeMode::Viterbi)?.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let (a, b) = split_training_surgeries(18, 0.5, 3).unwrap();
        assert_eq!((a.len(), b.len()), (9, 9));
        for f in [0.01, 0.5, 0.99] {
            let (a, b) = split_training_surgeries(2, f, 1).unwrap();
            assert_eq!((a.len(), b.len()), (1, 1));
        }
        let first = split_training_surgeries(3, 0.5, 11).unwrap();
        assert_eq!(first, split_training_surgeries(3, 0.5, 11).unwrap());
        let (a, b) = split_training_surgeries(10, 0.3, 5).unwrap();
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(split_training_surgeries(1, 0.5, 0).is_err());
        assert!(split_training_surgeries(4, 1.0, 0).is_err());
    }

    #[test]
    fn confusion_examples() {
        let p = |v: &[usize]| phases_from_indices(v).unwrap();
        let c = confusion_matrix(&p(&[0, 0, 1]), &p(&[0, 0, 1])).unwrap();
        assert_eq!((c[0][0], c[1][1]), (2, 1));
        assert_eq!(c.iter().flatten().sum::<u64>(), 3);
        let c = confusion_matrix(&p(&[0, 0]), &p(&[1, 1])).unwrap();
        assert_eq!(c[0][1], 2);
        assert_eq!(c.iter().flatten().sum::<u64>(), 2);
        assert!(confusion_matrix(&p(&[0]), &p(&[])).is_err());
    }

    #[test]
    fn emission_examples() {
        let table: DiscreteEmissionTable<f64> =
            emission_from_confusion(&[[8u64, 2], [1, 9]], 0.0).unwrap();
        assert_eq!(table.b, vec![vec![0.8, 0.2], vec![0.1, 0.9]]);

        let mut counts = [[0u64; 7]; 7];
        counts[0] = [5, 1, 0, 0, 0, 0, 0];
        let table: DiscreteEmissionTable<f64> = emission_from_confusion(&counts, 1e-6).unwrap();
        for row in &table.b[1..] {
            for &v in row {
                assert!((v - 1.0 / 7.0).abs() < 1e-15);
            }
        }
        for row in &table.b {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v > 0.0));
        }
        let zero: DiscreteEmissionTable<f64> =
            emission_from_confusion(&[[0u64; 3]; 3], 0.0).unwrap();
        assert_eq!(zero.b[2], vec![1.0 / 3.0; 3]);
        assert!(emission_from_confusion::<f64, _>(&counts, -1.0).is_err());
    }
}
