mod common;

use common::*;
use phasekit::signals::{parse_recording, recording_to_csv, Phase, NUM_BINARY};
use phasekit::synth::{generate_dataset, generate_surgery, SynthConfig};

#[test]
fn on_frequencies_converge() {
    let mut config = SynthConfig {
        clipping_skip_prob: 0.0,
        ..Default::default()
    };
    config
        .phases
        .iter_mut()
        .for_each(|p| p.duration = (400, 600));
    let rec = generate_surgery(&config, 17).unwrap();
    let labels = rec.labels().unwrap();
    for phase in Phase::ALL {
        let frames: Vec<_> = rec
            .frames
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == phase)
            .map(|(f, _)| f)
            .collect();
        let t = frames.len() as f64;
        assert!(t >= 100.0);
        for c in 0..NUM_BINARY {
            let p = config.phases[phase.index()].binary_on[c];
            let q = config.flip_noise;
            let expected = p * (1.0 - q) + (1.0 - p) * q;
            let observed = frames.iter().filter(|f| f.binary[c] == 1).count() as f64 / t;
            assert!(
                (observed - expected).abs() <= 3.0 / t.sqrt(),
                "{phase:?} b{c}: {observed} vs {expected}"
            );
        }
    }
}

#[test]
fn recordings_survive_strict_csv_round_trip() {
    for rec in generate_dataset(&SynthConfig::default(), 4, 21).unwrap() {
        assert!(is_monotone(rec.labels().unwrap()));
        let back = parse_recording(&rec.id, &recording_to_csv(&rec), true).unwrap();
        assert!(back.warnings.is_empty());
        assert_eq!(back.recording, rec);
    }
}

#[test]
fn seeds_control_datasets() {
    let config = SynthConfig::default();
    assert_eq!(
        generate_dataset(&config, 3, 5).unwrap(),
        generate_dataset(&config, 3, 5).unwrap()
    );
    assert_ne!(
        generate_dataset(&config, 3, 5).unwrap(),
        generate_dataset(&config, 3, 6).unwrap()
    );
}

#[test]
fn noiseless_durations_stay_in_bounds() {
    let rec = generate_surgery(&SynthConfig::noiseless(), 2).unwrap();
    assert!((420..=840).contains(&rec.len()));
}
