use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const NUM_PHASES: usize = 7;

/// The seven workflow phases, in the order they are performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Phase {
    TrocarPlacement = 0,
    Preparation = 1,
    Clipping = 2,
    DetachingGallbladder = 3,
    RetrievingGallbladder = 4,
    Hemostasis = 5,
    Closing = 6,
}

impl Phase {
    pub const ALL: [Phase; NUM_PHASES] = [
        Phase::TrocarPlacement,
        Phase::Preparation,
        Phase::Clipping,
        Phase::DetachingGallbladder,
        Phase::RetrievingGallbladder,
        Phase::Hemostasis,
        Phase::Closing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Phase> {
        Phase::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::invalid(format!("phase index {index} out of range 0..7")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::TrocarPlacement => "Trocar placement",
            Phase::Preparation => "Preparation",
            Phase::Clipping => "Clipping",
            Phase::DetachingGallbladder => "Detaching gallbladder",
            Phase::RetrievingGallbladder => "Retrieving gallbladder",
            Phase::Hemostasis => "Hemostasis",
            Phase::Closing => "Closing",
        }
    }

    pub fn from_name(name: &str) -> Result<Phase> {
        Phase::ALL
            .iter()
            .copied()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown phase name {name:?}")))
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// Serialized as the 0-based index; reports that key by name do so explicitly.
impl Serialize for Phase {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(*self as u8)
    }
}

impl<'de> Deserialize<'de> for Phase {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let index = u8::deserialize(d)?;
        Phase::from_index(index as usize).map_err(serde::de::Error::custom)
    }
}

pub fn phase_indices(labels: &[Phase]) -> Vec<usize> {
    labels.iter().map(|p| p.index()).collect()
}

pub fn phases_from_indices(indices: &[usize]) -> Result<Vec<Phase>> {
    indices.iter().map(|&i| Phase::from_index(i)).collect()
}
