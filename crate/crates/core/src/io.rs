//! On-disk stream formats.
//!
//! Features are a binary matrix: a 16-byte header (magic `OCLF`, version,
//! sample count N, feature dim d, all little-endian u32 after the magic)
//! followed by N*d IEEE-754 single-precision values, row-major. Labels are
//! JSON Lines with one record per sample (`index`, `timestamp`, `label`) and
//! an optional leading header record declaring `num_classes`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::{LabeledStream, Sample};

pub const FEATURE_MAGIC: [u8; 4] = *b"OCLF";
pub const FEATURE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LabelHeader {
    num_classes: usize,
}

#[derive(Serialize, Deserialize)]
struct LabelRecord {
    index: usize,
    timestamp: u64,
    label: usize,
}

/// Writes a stream as a feature file plus a label file (with class header).
///
/// `load_stream` of the written pair reproduces the stream bit-exactly.
pub fn save_stream(
    stream: &LabeledStream<f32>,
    feature_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
) -> Result<()> {
    let fp = feature_path.as_ref();
    let file = fs::File::create(fp).map_err(|e| Error::io(fp, e))?;
    let mut w = BufWriter::new(file);
    let put = |w: &mut BufWriter<fs::File>, bytes: &[u8]| -> Result<()> {
        w.write_all(bytes).map_err(|e| Error::io(fp, e))
    };
    put(&mut w, &FEATURE_MAGIC)?;
    put(&mut w, &FEATURE_VERSION.to_le_bytes())?;
    put(&mut w, &(stream.len() as u32).to_le_bytes())?;
    put(&mut w, &(stream.feature_dim() as u32).to_le_bytes())?;
    for s in stream.samples() {
        for &x in &s.features {
            put(&mut w, &x.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(fp, e))?;

    let lp = label_path.as_ref();
    let mut out = String::new();
    out.push_str(
        &serde_json::to_string(&LabelHeader {
            num_classes: stream.num_classes(),
        })
        .expect("header serializes"),
    );
    out.push('\n');
    for s in stream.samples() {
        out.push_str(
            &serde_json::to_string(&LabelRecord {
                index: s.index,
                timestamp: s.timestamp,
                label: s.label,
            })
            .expect("record serializes"),
        );
        out.push('\n');
    }
    fs::write(lp, out).map_err(|e| Error::io(lp, e))
}

/// Loads and validates a stream from a feature file and a label file.
///
/// The class count is taken from the label header when present, otherwise
/// inferred as `1 + max label`. Malformed headers, truncated data, dimension
/// mismatches, non-finite features, and out-of-range labels are reported as
/// distinct errors naming the offending record.
pub fn load_stream(
    feature_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
) -> Result<LabeledStream<f32>> {
    let fp = feature_path.as_ref();
    let bytes = fs::read(fp).map_err(|e| Error::io(fp, e))?;
    if bytes.len() < 16 {
        return Err(Error::parse(fp, "file shorter than the 16-byte header"));
    }
    if bytes[0..4] != FEATURE_MAGIC {
        return Err(Error::parse(fp, "bad magic, expected \"OCLF\""));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != FEATURE_VERSION {
        return Err(Error::parse(
            fp,
            format!("unsupported version {version}, expected {FEATURE_VERSION}"),
        ));
    }
    let n = word(8) as usize;
    let d = word(12) as usize;
    if n == 0 || d == 0 {
        return Err(Error::parse(fp, format!("degenerate shape {n}x{d}")));
    }
    let expected = 16 + 4 * n * d;
    if bytes.len() != expected {
        return Err(Error::parse(
            fp,
            format!(
                "expected {expected} bytes for {n} samples of dim {d}, found {}",
                bytes.len()
            ),
        ));
    }
    let mut features: Vec<Vec<f32>> = Vec::with_capacity(n);
    let mut off = 16;
    for _ in 0..n {
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            row.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        features.push(row);
    }

    let lp = label_path.as_ref();
    let text = fs::read_to_string(lp).map_err(|e| Error::io(lp, e))?;
    let mut declared_classes: Option<usize> = None;
    let mut records: Vec<LabelRecord> = Vec::with_capacity(n);
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::parse(lp, format!("line {}: {e}", lineno + 1)))?;
        if records.is_empty() && declared_classes.is_none() && value.get("num_classes").is_some() {
            let header: LabelHeader = serde_json::from_value(value)
                .map_err(|e| Error::parse(lp, format!("line {}: {e}", lineno + 1)))?;
            declared_classes = Some(header.num_classes);
            continue;
        }
        let record: LabelRecord = serde_json::from_value(value)
            .map_err(|e| Error::parse(lp, format!("line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    if records.len() != n {
        return Err(Error::parse(
            lp,
            format!("{} label records for {n} feature rows", records.len()),
        ));
    }

    let num_classes = match declared_classes {
        Some(c) => c,
        None => 1 + records.iter().map(|r| r.label).max().unwrap_or(0),
    };
    let samples: Vec<Sample<f32>> = records
        .into_iter()
        .zip(features)
        .map(|(r, f)| Sample {
            index: r.index,
            timestamp: r.timestamp,
            features: f,
            label: r.label,
        })
        .collect();
    LabeledStream::new(samples, num_classes, d)
}
