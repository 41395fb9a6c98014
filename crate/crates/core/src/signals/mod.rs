//! Data model, CSV ingestion and signal preprocessing.

mod features;
mod filters;
mod phase;
mod recording;

pub use features::{build_features, FeatureMatrix, FeatureMode, DEFAULT_MEDIAN_WINDOW};
pub use filters::{cumulative_sum, median_filter, noise_component, rising_edge_sum, window_extent};
pub use phase::{phase_indices, phases_from_indices, Phase, NUM_PHASES};
pub use recording::{
    csv_header, load_recording, parse_recording, recording_to_csv, Ingested, SignalFrame,
    SurgeryRecording, NUM_ANALOG, NUM_BINARY,
};
