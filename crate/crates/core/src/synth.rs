//! Seeded simulator of surgery-like recordings.
//!
//! Phases are visited in canonical order with uniform durations; Clipping may
//! be skipped. Binary channels are per-phase Bernoulli draws passed through a
//! flip channel; analog channels are the phase mean plus Gaussian noise, with
//! optional rare heavy glitches. All noise is i.i.d. per frame.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::seed::derived_rng;
use crate::signals::{Phase, SignalFrame, SurgeryRecording, NUM_ANALOG, NUM_BINARY, NUM_PHASES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    /// inclusive duration bounds in seconds
    pub duration: (usize, usize),
    pub binary_on: [f64; NUM_BINARY],
    pub analog_mean: [f64; NUM_ANALOG],
    pub analog_std: [f64; NUM_ANALOG],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub phases: Vec<PhaseProfile>,
    /// probability that a binary sample is inverted
    pub flip_noise: f64,
    /// stddev of extra Gaussian noise added to every analog sample
    pub analog_noise: f64,
    pub clipping_skip_prob: f64,
    /// probability that an analog sample carries a sensor glitch
    #[serde(default)]
    pub glitch_prob: f64,
    /// stddev of the Gaussian offset added by a glitch
    #[serde(default)]
    pub glitch_scale: f64,
    pub seed: u64,
}

fn profile(
    duration: (usize, usize),
    binary_on: [f64; NUM_BINARY],
    mean: [f64; NUM_ANALOG],
    std: [f64; NUM_ANALOG],
) -> PhaseProfile {
    PhaseProfile {
        duration,
        binary_on,
        analog_mean: mean,
        analog_std: std,
    }
}

impl Default for SynthConfig {
    /// Weakly separated phases with heavy analog glitches. Per frame the
    /// phases overlap strongly, so a frame classifier lands near 70% and
    /// temporal decoding matters.
    fn default() -> Self {
        let phases = vec![
            profile(
                (40, 100),
                [
                    0.417, 0.448, 0.588, 0.415, 0.536, 0.473, 0.576, 0.556, 0.468, 0.378, 0.604,
                    0.478,
                ],
                [12.562, 2.44, 6.568, 11.812],
                [1.0; NUM_ANALOG],
            ),
            profile(
                (100, 400),
                [
                    0.566, 0.6, 0.555, 0.635, 0.377, 0.495, 0.53, 0.609, 0.559, 0.58, 0.582, 0.595,
                ],
                [12.402, 6.996, 7.75, 10.959],
                [1.0; NUM_ANALOG],
            ),
            profile(
                (30, 80),
                [
                    0.402, 0.635, 0.4, 0.411, 0.54, 0.433, 0.512, 0.443, 0.497, 0.608, 0.494, 0.447,
                ],
                [10.484, 5.285, 7.363, 8.763],
                [1.0; NUM_ANALOG],
            ),
            profile(
                (100, 400),
                [
                    0.36, 0.501, 0.416, 0.367, 0.541, 0.522, 0.363, 0.544, 0.374, 0.553, 0.59,
                    0.413,
                ],
                [12.467, 5.039, 4.615, 11.234],
                [1.0; NUM_ANALOG],
            ),
            profile(
                (60, 200),
                [
                    0.369, 0.637, 0.577, 0.39, 0.503, 0.492, 0.565, 0.585, 0.603, 0.417, 0.365,
                    0.588,
                ],
                [8.872, 5.568, 3.194, 8.237],
                [1.0; NUM_ANALOG],
            ),
            profile(
                (60, 200),
                [
                    0.618, 0.542, 0.515, 0.364, 0.457, 0.408, 0.533, 0.405, 0.486, 0.633, 0.439,
                    0.489,
                ],
                [11.356, 3.421, 5.383, 8.715],
                [1.0; NUM_ANALOG],
            ),
            profile(
                (60, 150),
                [
                    0.495, 0.456, 0.379, 0.613, 0.387, 0.583, 0.541, 0.565, 0.541, 0.505, 0.522,
                    0.433,
                ],
                [11.862, 5.687, 5.057, 10.33],
                [1.0; NUM_ANALOG],
            ),
        ];
        SynthConfig {
            phases,
            flip_noise: 0.1,
            analog_noise: 3.0,
            clipping_skip_prob: 0.15,
            glitch_prob: 0.03,
            glitch_scale: 40.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Noise-free recordings with perfectly separable phases: binary channels
    /// are fixed 0/1 patterns and analog means sit 10 stddevs apart.
    pub fn noiseless() -> Self {
        let phases = (0..NUM_PHASES)
            .map(|p| {
                let binary_on = std::array::from_fn(|c| ((p >> (c % 3)) & 1) as f64);
                let base = 10.0 * p as f64;
                profile(
                    (60, 120),
                    binary_on,
                    [base, 100.0 - base, 5.0, base / 2.0],
                    [1.0, 1.0, 0.5, 0.5],
                )
            })
            .collect();
        SynthConfig {
            phases,
            flip_noise: 0.0,
            analog_noise: 0.0,
            clipping_skip_prob: 0.0,
            glitch_prob: 0.0,
            glitch_scale: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.len() != NUM_PHASES {
            return Err(Error::invalid(format!(
                "expected {NUM_PHASES} phase profiles, got {}",
                self.phases.len()
            )));
        }
        for (p, prof) in self.phases.iter().enumerate() {
            let (lo, hi) = prof.duration;
            if lo < 1 || lo > hi {
                return Err(Error::invalid(format!(
                    "phase {}: duration bounds ({lo},{hi}) invalid",
                    p + 1
                )));
            }
            if prof.binary_on.iter().any(|q| !(0.0..=1.0).contains(q)) {
                return Err(Error::invalid(format!(
                    "phase {}: on-probabilities must lie in [0,1]",
                    p + 1
                )));
            }
            if prof.analog_mean.iter().any(|m| !m.is_finite())
                || prof
                    .analog_std
                    .iter()
                    .any(|s| !(*s >= 0.0 && s.is_finite()))
            {
                return Err(Error::invalid(format!(
                    "phase {}: analog mean/stddev invalid",
                    p + 1
                )));
            }
        }
        if !(0.0..0.5).contains(&self.flip_noise) {
            return Err(Error::invalid("flip_noise must lie in [0, 0.5)"));
        }
        if !(self.analog_noise >= 0.0 && self.analog_noise.is_finite()) {
            return Err(Error::invalid("analog_noise must be a non-negative number"));
        }
        if !(0.0..1.0).contains(&self.clipping_skip_prob) {
            return Err(Error::invalid("clipping_skip_prob must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.glitch_prob)
            || !(self.glitch_scale >= 0.0 && self.glitch_scale.is_finite())
        {
            return Err(Error::invalid(
                "glitch_prob must lie in [0, 1) and glitch_scale must be non-negative",
            ));
        }
        Ok(())
    }

    /// Applies a `key = value` document on top of `self`. Recognized keys:
    /// `seed`, `flip_noise`, `analog_noise`, `clipping_skip_prob`, `glitch_prob`,
    /// `glitch_scale`, and per phase
    /// `k` in 1..=7: `phase.k.duration = min,max`, `phase.k.binary = p1,..,p12`,
    /// `phase.k.analog_mean = m1,..,m4`, `phase.k.analog_std = s1,..,s4`.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        kv.check_known(is_synth_key)?;
        if let Some(v) = kv.get("seed")? {
            self.seed = v;
        }
        if let Some(v) = kv.get("flip_noise")? {
            self.flip_noise = v;
        }
        if let Some(v) = kv.get("analog_noise")? {
            self.analog_noise = v;
        }
        if let Some(v) = kv.get("clipping_skip_prob")? {
            self.clipping_skip_prob = v;
        }
        if let Some(v) = kv.get("glitch_prob")? {
            self.glitch_prob = v;
        }
        if let Some(v) = kv.get("glitch_scale")? {
            self.glitch_scale = v;
        }
        for p in 0..NUM_PHASES {
            let key = |field: &str| format!("phase.{}.{field}", p + 1);
            let prof = &mut self.phases[p];
            if let Some(v) = kv.get_list::<usize>(&key("duration"))? {
                let [lo, hi] = fixed::<usize, 2>(&key("duration"), v)?;
                prof.duration = (lo, hi);
            }
            if let Some(v) = kv.get_list::<f64>(&key("binary"))? {
                prof.binary_on = fixed(&key("binary"), v)?;
            }
            if let Some(v) = kv.get_list::<f64>(&key("analog_mean"))? {
                prof.analog_mean = fixed(&key("analog_mean"), v)?;
            }
            if let Some(v) = kv.get_list::<f64>(&key("analog_std"))? {
                prof.analog_std = fixed(&key("analog_std"), v)?;
            }
        }
        self.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut config = SynthConfig::default();
        config.apply(&KeyValues::load(path)?)?;
        Ok(config)
    }

    /// The configuration as a `key = value` document accepted by [`SynthConfig::apply`].
    pub fn to_kv_string(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut out = format!(
            "seed = {}\nflip_noise = {}\nanalog_noise = {}\nclipping_skip_prob = {}\nglitch_prob = {}\nglitch_scale = {}\n",
            self.seed, self.flip_noise, self.analog_noise, self.clipping_skip_prob, self.glitch_prob, self.glitch_scale
        );
        for (p, prof) in self.phases.iter().enumerate() {
            let k = p + 1;
            out.push_str(&format!(
                "phase.{k}.duration = {},{}\n",
                prof.duration.0, prof.duration.1
            ));
            out.push_str(&format!("phase.{k}.binary = {}\n", join(&prof.binary_on)));
            out.push_str(&format!(
                "phase.{k}.analog_mean = {}\n",
                join(&prof.analog_mean)
            ));
            out.push_str(&format!(
                "phase.{k}.analog_std = {}\n",
                join(&prof.analog_std)
            ));
        }
        out
    }
}

pub(crate) fn is_synth_key(key: &str) -> bool {
    if matches!(
        key,
        "seed"
            | "flip_noise"
            | "analog_noise"
            | "clipping_skip_prob"
            | "glitch_prob"
            | "glitch_scale"
    ) {
        return true;
    }
    let parts: Vec<&str> = key.split('.').collect();
    matches!(parts.as_slice(), ["phase", k, field]
        if k.parse::<usize>().is_ok_and(|k| (1..=NUM_PHASES).contains(&k))
            && matches!(*field, "duration" | "binary" | "analog_mean" | "analog_std"))
}

fn fixed<T, const N: usize>(key: &str, v: Vec<T>) -> Result<[T; N]> {
    let len = v.len();
    v.try_into()
        .map_err(|_| Error::invalid(format!("{key}: expected {N} values, got {len}")))
}

fn sample_frame(
    rng: &mut ChaCha8Rng,
    t: u64,
    prof: &PhaseProfile,
    config: &SynthConfig,
) -> SignalFrame {
    let binary = std::array::from_fn(|c| {
        let on = rng.random::<f64>() < prof.binary_on[c];
        let flip = rng.random::<f64>() < config.flip_noise;
        (on ^ flip) as u8
    });
    let analog = std::array::from_fn(|a| {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let mut v = prof.analog_mean[a] + prof.analog_std[a] * z1 + config.analog_noise * z2;
        // no extra draws without glitches so glitch-free streams stay unchanged
        if config.glitch_prob > 0.0 && rng.random::<f64>() < config.glitch_prob {
            let z3: f64 = StandardNormal.sample(rng);
            v += config.glitch_scale * z3;
        }
        // millesimal sensor resolution
        (v * 1000.0).round() / 1000.0
    });
    SignalFrame { t, binary, analog }
}

/// One labeled recording, fully determined by `(config, seed)`.
pub fn generate_surgery(config: &SynthConfig, seed: u64) -> Result<SurgeryRecording> {
    config.validate()?;
    let mut rng = derived_rng(seed, &[]);
    let mut frames = Vec::new();
    let mut labels = Vec::new();
    for phase in Phase::ALL {
        if phase == Phase::Clipping && rng.random::<f64>() < config.clipping_skip_prob {
            continue;
        }
        let prof = &config.phases[phase.index()];
        let duration = rng.random_range(prof.duration.0..=prof.duration.1);
        for _ in 0..duration {
            let t = frames.len() as u64;
            frames.push(sample_frame(&mut rng, t, prof, config));
            labels.push(phase);
        }
    }
    SurgeryRecording::new(format!("synth-seed-{seed}"), frames, Some(labels))
}

/// `n` recordings with ids `synth-001`.. and per-surgery seeds derived from `seed`.
pub fn generate_dataset(
    config: &SynthConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<SurgeryRecording>> {
    (0..n)
        .map(|i| {
            let mut rec = generate_surgery(config, crate::seed::derive_seed(seed, &[i as u64]))?;
            rec.id = format!("synth-{:03}", i + 1);
            Ok(rec)
        })
        .collect()
}
