use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::phase::Phase;
use crate::error::{Error, Result};

pub const NUM_BINARY: usize = 12;
pub const NUM_ANALOG: usize = 4;

/// Header line of the recording CSV format.
pub fn csv_header() -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=NUM_BINARY).map(|i| format!("b{i:02}")));
    cols.extend((1..=NUM_ANALOG).map(|i| format!("a{i:02}")));
    cols.push("phase".to_string());
    cols.join(",")
}

/// One second of synchronized sensor readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFrame {
    pub t: u64,
    pub binary: [u8; NUM_BINARY],
    pub analog: [f64; NUM_ANALOG],
}

impl SignalFrame {
    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.binary.iter().find(|&&b| b > 1) {
            return Err(Error::invalid(format!(
                "invalid binary value {v} at t={}",
                self.t
            )));
        }
        if let Some(v) = self.analog.iter().find(|a| !a.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite analog value {v} at t={}",
                self.t
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryRecording {
    pub id: String,
    pub frames: Vec<SignalFrame>,
    pub labels: Option<Vec<Phase>>,
}

/// Result of ingesting a recording: the data plus any lenient-mode warnings.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub recording: SurgeryRecording,
    pub warnings: Vec<String>,
}

impl SurgeryRecording {
    /// Builds a recording and validates it in strict mode.
    pub fn new(
        id: impl Into<String>,
        frames: Vec<SignalFrame>,
        labels: Option<Vec<Phase>>,
    ) -> Result<Self> {
        let rec = SurgeryRecording {
            id: id.into(),
            frames,
            labels,
        };
        rec.validate(true)?;
        Ok(rec)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn labels(&self) -> Result<&[Phase]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::invalid(format!("recording {} is unlabeled", self.id)))
    }

    /// Checks the frame and label invariants. Returns the lenient-mode warnings;
    /// in strict mode a non-monotone label sequence is an error instead.
    pub fn validate(&self, strict: bool) -> Result<Vec<String>> {
        if self.frames.is_empty() {
            return Err(Error::invalid(format!("recording {} is empty", self.id)));
        }
        for frame in &self.frames {
            frame.validate()?;
        }
        for w in self.frames.windows(2) {
            if w[1].t != w[0].t + 1 {
                return Err(Error::invalid(format!(
                    "timestamps must advance by 1 s: t={} followed by t={}",
                    w[0].t, w[1].t
                )));
            }
        }
        let mut warnings = Vec::new();
        if let Some(labels) = &self.labels {
            if labels.len() != self.frames.len() {
                return Err(Error::LengthMismatch {
                    left: self.frames.len(),
                    right: labels.len(),
                });
            }
            for (k, w) in labels.windows(2).enumerate() {
                if w[1] < w[0] {
                    let t = self.frames[k + 1].t;
                    if strict {
                        return Err(Error::NonMonotone { t });
                    }
                    warnings.push(format!("non-monotone phase sequence at t={t}"));
                }
            }
        }
        Ok(warnings)
    }
}

fn parse_row(line: &str, line_no: usize) -> Result<(SignalFrame, Option<Phase>)> {
    let parse_err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let cols: Vec<&str> = line.split(',').collect();
    let expected = 1 + NUM_BINARY + NUM_ANALOG + 1;
    if cols.len() != expected {
        return Err(parse_err(format!(
            "expected {expected} columns, found {}",
            cols.len()
        )));
    }
    let t: u64 = cols[0]
        .parse()
        .map_err(|_| parse_err(format!("invalid timestamp {:?}", cols[0])))?;
    let mut binary = [0u8; NUM_BINARY];
    for (i, slot) in binary.iter_mut().enumerate() {
        *slot = match cols[1 + i] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(parse_err(format!(
                    "invalid binary value {other:?} in b{:02}",
                    i + 1
                )))
            }
        };
    }
    let mut analog = [0f64; NUM_ANALOG];
    for (i, slot) in analog.iter_mut().enumerate() {
        let raw = cols[1 + NUM_BINARY + i];
        let v: f64 = raw
            .parse()
            .map_err(|_| parse_err(format!("invalid analog value {raw:?} in a{:02}", i + 1)))?;
        if !v.is_finite() {
            return Err(parse_err(format!(
                "non-finite analog value {raw:?} in a{:02}",
                i + 1
            )));
        }
        *slot = v;
    }
    let phase = match cols[expected - 1] {
        "" => None,
        raw => {
            let p: usize = raw
                .parse()
                .map_err(|_| parse_err(format!("invalid phase {raw:?}")))?;
            if !(1..=7).contains(&p) {
                return Err(parse_err(format!("phase {p} outside 1..7")));
            }
            Some(Phase::ALL[p - 1])
        }
    };
    Ok((SignalFrame { t, binary, analog }, phase))
}

/// Parses recording CSV text. Phases are 1-based in the file, 0-based in memory.
pub fn parse_recording(id: &str, text: &str, strict: bool) -> Result<Ingested> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == csv_header() => {}
        Some(_) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {:?}", csv_header()),
            })
        }
        None => return Err(Error::invalid(format!("recording {id}: empty file"))),
    }
    let mut frames = Vec::new();
    let mut phases = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (frame, phase) = parse_row(line, i + 1)?;
        frames.push(frame);
        phases.push(phase);
    }
    if frames.is_empty() {
        return Err(Error::invalid(format!("recording {id}: empty file")));
    }
    let labels = if phases.iter().all(Option::is_none) {
        None
    } else if phases.iter().all(Option::is_some) {
        Some(phases.into_iter().flatten().collect())
    } else {
        return Err(Error::invalid(format!(
            "recording {id}: phase column is only partially filled"
        )));
    };
    let recording = SurgeryRecording {
        id: id.to_string(),
        frames,
        labels,
    };
    let warnings = recording.validate(strict)?;
    Ok(Ingested {
        recording,
        warnings,
    })
}

/// Loads one recording; the id is the file stem.
pub fn load_recording(path: &Path, strict: bool) -> Result<Ingested> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_recording(&id, &text, strict)
}

pub fn recording_to_csv(rec: &SurgeryRecording) -> String {
    let mut out = csv_header();
    out.push('\n');
    for (i, f) in rec.frames.iter().enumerate() {
        out.push_str(&f.t.to_string());
        for b in f.binary {
            out.push(',');
            out.push(if b == 1 { '1' } else { '0' });
        }
        for a in f.analog {
            out.push(',');
            // Display for f64 is the shortest representation that round-trips.
            out.push_str(&a.to_string());
        }
        out.push(',');
        if let Some(labels) = &rec.labels {
            out.push_str(&(labels[i].index() + 1).to_string());
        }
        out.push('\n');
    }
    out
}
