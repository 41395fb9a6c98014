//! Frame accuracy, per-phase Jaccard and leave-one-surgery-out evaluation.

use rayon::prelude::*;
use serde::de::{Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{train_forest_rows, ForestParams};
use crate::markov::{
    decode, fit_signal_emissions, init_transitions_from_labels, DecodeMode, SignalEmissionModel,
    Structure,
};
use crate::pipeline::{
    confusion_matrix, labeled_features, stack_rows, train_combined_with_features, CombinedParams,
    ConfusionMatrix,
};
use crate::signals::{
    phase_indices, phases_from_indices, FeatureMatrix, FeatureMode, Phase, SurgeryRecording,
    NUM_PHASES,
};

pub fn frame_accuracy(truth: &[Phase], predicted: &[Phase]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("accuracy of an empty sequence"));
    }
    let hits = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Per-phase values, serialized as an object keyed by canonical phase name.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseValues(pub [Option<f64>; NUM_PHASES]);

impl PhaseValues {
    /// Mean over the phases that have a value.
    pub fn mean(&self) -> Option<f64> {
        let present: Vec<f64> = self.0.iter().flatten().copied().collect();
        (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
    }

    pub fn get(&self, phase: Phase) -> Option<f64> {
        self.0[phase.index()]
    }
}

impl Serialize for PhaseValues {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(NUM_PHASES))?;
        for p in Phase::ALL {
            map.serialize_entry(p.name(), &self.0[p.index()])?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for PhaseValues {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = PhaseValues;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an object keyed by phase name")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut access: A,
            ) -> std::result::Result<PhaseValues, A::Error> {
                let mut values = PhaseValues::default();
                while let Some((name, value)) = access.next_entry::<String, Option<f64>>()? {
                    let phase = Phase::from_name(&name).map_err(serde::de::Error::custom)?;
                    values.0[phase.index()] = value;
                }
                Ok(values)
            }
        }
        d.deserialize_map(V)
    }
}

/// Intersection over union of the frames assigned to each phase.
/// Phases that appear in neither sequence have no value.
pub fn jaccard_scores(truth: &[Phase], predicted: &[Phase]) -> Result<PhaseValues> {
    Ok(jaccard_from_confusion(&confusion_matrix(truth, predicted)?))
}

pub fn jaccard_from_confusion(confusion: &ConfusionMatrix) -> PhaseValues {
    let mut out = PhaseValues::default();
    for p in 0..NUM_PHASES {
        let both = confusion[p][p];
        let in_truth: u64 = confusion[p].iter().sum();
        let in_pred: u64 = confusion.iter().map(|row| row[p]).sum();
        let union = in_truth + in_pred - both;
        if union > 0 {
            out.0[p] = Some(both as f64 / union as f64);
        }
    }
    out
}

pub fn accuracy_from_confusion(confusion: &ConfusionMatrix) -> f64 {
    let total: u64 = confusion.iter().flatten().sum();
    let diagonal: u64 = (0..NUM_PHASES).map(|p| confusion[p][p]).sum();
    diagonal as f64 / total as f64
}

/// Which method a cross-validation run trains and evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Rf {
        forest: ForestParams,
        mode: FeatureMode,
        window: usize,
    },
    /// HMM alone over raw signals with Bernoulli/Gaussian emissions.
    HmmSignal {
        structure: Structure,
        smoothing: f64,
        decode: DecodeMode,
    },
    Combined(CombinedParams),
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Rf { .. } => "rf",
            MethodSpec::HmmSignal { .. } => "hmm",
            MethodSpec::Combined(_) => "combined",
        }
    }

    fn feature_mode(&self) -> (FeatureMode, usize) {
        match self {
            MethodSpec::Rf { mode, window, .. } => (*mode, *window),
            MethodSpec::HmmSignal { .. } => (FeatureMode::Raw, 1),
            MethodSpec::Combined(p) => (p.mode, p.window),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub held_out_id: String,
    pub n_frames: usize,
    pub accuracy: f64,
    pub jaccard_per_phase: PhaseValues,
    pub mean_jaccard: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    /// canonical phase names, indexing the confusion matrix
    pub phases: Vec<String>,
    pub accuracy: f64,
    pub jaccard_per_phase: PhaseValues,
    pub mean_jaccard: Option<f64>,
    /// rows: ground truth, columns: prediction
    pub confusion: ConfusionMatrix,
    pub per_fold: Vec<FoldMetrics>,
}

impl MetricsReport {
    pub fn from_folds(method: &str, folds: &[FoldPrediction]) -> Result<Self> {
        let mut confusion = [[0u64; NUM_PHASES]; NUM_PHASES];
        let mut per_fold = Vec::with_capacity(folds.len());
        for fold in folds {
            let c = confusion_matrix(&fold.truth, &fold.predicted)?;
            for (dst, src) in confusion.iter_mut().flatten().zip(c.iter().flatten()) {
                *dst += src;
            }
            let jaccard = jaccard_from_confusion(&c);
            per_fold.push(FoldMetrics {
                held_out_id: fold.id.clone(),
                n_frames: fold.truth.len(),
                accuracy: frame_accuracy(&fold.truth, &fold.predicted)?,
                jaccard_per_phase: jaccard,
                mean_jaccard: jaccard.mean(),
            });
        }
        let jaccard = jaccard_from_confusion(&confusion);
        Ok(MetricsReport {
            method: method.to_string(),
            phases: Phase::ALL.iter().map(|p| p.name().to_string()).collect(),
            accuracy: accuracy_from_confusion(&confusion),
            jaccard_per_phase: jaccard,
            mean_jaccard: jaccard.mean(),
            confusion,
            per_fold,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `fold,accuracy,mean_jaccard`, one line per held-out surgery.
    pub fn fold_csv(&self) -> String {
        let mut out = String::from("fold,accuracy,mean_jaccard\n");
        for f in &self.per_fold {
            let mj = f.mean_jaccard.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", f.held_out_id, f.accuracy, mj));
        }
        out
    }
}

/// Predictions for one held-out surgery.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPrediction {
    pub id: String,
    pub truth: Vec<Phase>,
    pub predicted: Vec<Phase>,
    /// intermediate forest output, for the combined method
    pub forest_predicted: Option<Vec<Phase>>,
}

#[derive(Debug, Clone)]
pub struct LosoOutcome {
    pub report: MetricsReport,
    pub folds: Vec<FoldPrediction>,
}

fn run_fold(
    surgeries: &[SurgeryRecording],
    features: &[FeatureMatrix],
    held_out: usize,
    spec: &MethodSpec,
) -> Result<FoldPrediction> {
    let train: Vec<usize> = (0..surgeries.len()).filter(|&i| i != held_out).collect();
    let truth = surgeries[held_out].labels()?.to_vec();
    let test = &features[held_out];
    let train_features: Vec<&FeatureMatrix> = train.iter().map(|&i| &features[i]).collect();
    let train_labels: Vec<&[Phase]> = train
        .iter()
        .map(|&i| surgeries[i].labels())
        .collect::<Result<_>>()?;
    let (predicted, forest_predicted) = match spec {
        MethodSpec::Rf { forest, .. } => {
            let (rows, y) = stack_rows(&train_features, &train_labels);
            let model = train_forest_rows(&rows, &test.names, &y, forest)?;
            (model.predict_matrix(test)?, None)
        }
        MethodSpec::HmmSignal {
            structure,
            smoothing,
            decode: mode,
        } => {
            let emission: SignalEmissionModel<f64> =
                fit_signal_emissions(&train_features, &train_labels)?;
            let sequences: Vec<Vec<usize>> =
                train_labels.iter().map(|l| phase_indices(l)).collect();
            let trans =
                init_transitions_from_labels(&sequences, NUM_PHASES, *structure, *smoothing)?;
            let path = decode(&trans, &emission.score(test)?, *mode)?;
            (phases_from_indices(&path)?, None)
        }
        MethodSpec::Combined(params) => {
            let train_surgeries: Vec<SurgeryRecording> =
                train.iter().map(|&i| surgeries[i].clone()).collect();
            let owned: Vec<FeatureMatrix> = train_features.into_iter().cloned().collect();
            let model = train_combined_with_features(&train_surgeries, &owned, params)?;
            let (rf, hmm) = model.predict_features(test, params.decode_mode)?;
            (hmm, Some(rf))
        }
    };
    Ok(FoldPrediction {
        id: surgeries[held_out].id.clone(),
        truth,
        predicted,
        forest_predicted,
    })
}

/// Leave-one-surgery-out cross-validation. Every surgery is held out once; the
/// method is trained on all the others. Folds run in parallel and are reported
/// in surgery-id order; metrics are pooled over all held-out frames.
pub fn loso_cross_validate(
    surgeries: &[SurgeryRecording],
    spec: &MethodSpec,
) -> Result<LosoOutcome> {
    if surgeries.len() < 2 {
        return Err(Error::TooFewSurgeries);
    }
    if let MethodSpec::Combined(params) = spec {
        if surgeries.len() < 3 {
            return Err(Error::invalid(
                "combined cross-validation needs at least 3 surgeries",
            ));
        }
        params.validate()?;
    }
    let (mode, window) = spec.feature_mode();
    let features = labeled_features(surgeries, mode, window)?;
    let mut order: Vec<usize> = (0..surgeries.len()).collect();
    order.sort_by(|&a, &b| surgeries[a].id.cmp(&surgeries[b].id));
    let folds: Vec<FoldPrediction> = order
        .par_iter()
        .map(|&i| {
            run_fold(surgeries, &features, i, spec).map_err(|e| Error::Fold {
                held_out: surgeries[i].id.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let report = MetricsReport::from_folds(spec.name(), &folds)?;
    Ok(LosoOutcome { report, folds })
}
