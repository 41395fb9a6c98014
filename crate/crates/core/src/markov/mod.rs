//! Left-to-right hidden Markov model core: transition model, emission scoring,
//! scaled forward filtering, Viterbi decoding and Baum-Welch refinement.

mod baum_welch;
mod inference;
mod model;
mod signal;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use baum_welch::{baum_welch, BaumWelchOptions, BaumWelchResult};
pub use inference::{
    filtered_path, forward_filter, path_log_probability, viterbi_decode, ForwardResult,
};
pub use model::{
    init_transitions_from_labels, scores_from_discrete, DiscreteEmissionTable, EmissionScores,
    Structure, TransitionModel,
};
pub use signal::{
    fit_signal_emissions, SignalEmissionModel, StateProfile, MIN_ON_PROBABILITY, MIN_STDDEV,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How hidden states are read off the observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    /// per-frame argmax of the causal forward posterior
    Filtering,
    /// single most probable path over the whole sequence
    #[default]
    Viterbi,
}

impl std::str::FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "filtering" => Ok(DecodeMode::Filtering),
            "viterbi" => Ok(DecodeMode::Viterbi),
            other => Err(Error::invalid(format!("unknown decode mode {other:?}"))),
        }
    }
}

/// Decodes a state sequence from emission scores with the chosen method.
pub fn decode<S: Scalar>(
    trans: &TransitionModel<S>,
    scores: &EmissionScores<S>,
    mode: DecodeMode,
) -> Result<Vec<usize>> {
    match mode {
        DecodeMode::Filtering => Ok(filtered_path(&forward_filter(trans, scores)?)),
        DecodeMode::Viterbi => viterbi_decode(trans, scores),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Emission<S> {
    Discrete(DiscreteEmissionTable<S>),
    Signal(SignalEmissionModel<S>),
}

/// Persisted HMM: `{pi, A, structure, emission: {kind, ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel<S> {
    pub pi: Vec<S>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<S>>,
    pub structure: Structure,
    pub emission: Emission<S>,
}

impl<S: Scalar> HmmModel<S> {
    pub fn new(transitions: TransitionModel<S>, emission: Emission<S>) -> Self {
        HmmModel {
            pi: transitions.pi,
            a: transitions.a,
            structure: transitions.structure,
            emission,
        }
    }

    pub fn transitions(&self) -> Result<TransitionModel<S>> {
        TransitionModel::new(self.pi.clone(), self.a.clone(), self.structure)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: HmmModel<S> = serde_json::from_str(text)?;
        model.transitions()?;
        if let Emission::Discrete(table) = &model.emission {
            table.validate()?;
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let trans = TransitionModel::new(
            vec![1.0, 0.0, 0.0],
            vec![
                vec![0.1 + 0.2, 1.0 - (0.1 + 0.2), 0.0],
                vec![0.0, 1.0 / 3.0, 2.0 / 3.0],
                vec![0.0, 0.0, 1.0],
            ],
            Structure::UpperTriangular,
        )
        .unwrap();
        let table = DiscreteEmissionTable::new(vec![vec![1.0 / 7.0, 6.0 / 7.0]; 3]).unwrap();
        let model = HmmModel::new(trans, Emission::Discrete(table));
        let json = model.to_json().unwrap();
        assert!(json.contains("\"kind\": \"discrete\""));
        assert!(json.contains("\"A\""));
        let back: HmmModel<f64> = HmmModel::from_json(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn decode_modes_parse() {
        assert_eq!(
            "viterbi".parse::<DecodeMode>().unwrap(),
            DecodeMode::Viterbi
        );
        assert_eq!(
            "filtering".parse::<DecodeMode>().unwrap(),
            DecodeMode::Filtering
        );
        assert!("smoothing".parse::<DecodeMode>().is_err());
    }
}
