//! Dataset files: CSV with an `id,label,f0..` header and a little-endian
//! binary layout.
//!
//! Binary layout: `"ASSL"`, then `u32` version, `N`, `D`, `C`, then `N x D`
//! `f64` values row-major, then `N` `i32` labels with `-1` for unlabeled.
//! Ids are not stored; reading assigns `s0, s1, ...`.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};

pub const DATASET_MAGIC: [u8; 4] = *b"ASSL";
pub const DATASET_VERSION: u32 = 1;

/// Parses CSV text. Labels must be non-negative integers or empty.
///
/// `class_count` fixes `C`; otherwise `C = max(2, largest label + 1)`.
pub fn parse_csv(text: &str, class_count: Option<usize>) -> Result<FeatureDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::MalformedHeader("expected `id,label,f0,...`".into()));
    }
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(Error::MalformedHeader(format!(
                "column {} is {name:?}, expected \"f{j}\"",
                j + 2
            )));
        }
    }
    let dim = header.len() - 2;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != dim + 2 {
            return Err(Error::RaggedRow {
                line,
                expected: dim,
                found: record.len().saturating_sub(2),
            });
        }
        ids.push(record[0].to_string());
        labels.push(match &record[1] {
            "" => None,
            s => Some(s.parse::<usize>().map_err(|_| {
                Error::Parse(format!("line {line}: label {s:?} is not a class index"))
            })?),
        });
        for field in record.iter().skip(2) {
            values.push(
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {line}: bad feature {field:?}")))?,
            );
        }
    }
    let n = ids.len();
    let class_count =
        class_count.unwrap_or_else(|| labels.iter().flatten().max().map_or(2, |m| (m + 1).max(2)));
    let features = Array2::from_shape_vec((n, dim), values)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    FeatureDataset::new(features, labels, class_count, ids)
}

/// CSV text with shortest round-trip float formatting.
pub fn to_csv(ds: &FeatureDataset) -> String {
    let mut out = String::from("id,label");
    for j in 0..ds.dim() {
        out.push_str(&format!(",f{j}"));
    }
    out.push('\n');
    for (i, row) in ds.features().outer_iter().enumerate() {
        out.push_str(&ds.ids()[i]);
        out.push(',');
        if let Some(l) = ds.label(i) {
            out.push_str(&l.to_string());
        }
        for v in row {
            out.push_str(&format!(",{v:?}"));
        }
        out.push('\n');
    }
    out
}

pub fn to_binary(ds: &FeatureDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + ds.len() * (ds.dim() * 8 + 4));
    out.extend_from_slice(&DATASET_MAGIC);
    for v in [
        DATASET_VERSION,
        ds.len() as u32,
        ds.dim() as u32,
        ds.class_count() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in ds.features().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for l in ds.labels() {
        let v: i32 = l.map_or(-1, |c| c as i32);
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_binary(bytes: &[u8]) -> Result<FeatureDataset> {
    let take = |at: usize, len: usize| -> Result<&[u8]> {
        bytes
            .get(at..at + len)
            .ok_or_else(|| Error::Parse(format!("binary dataset truncated at byte {at}")))
    };
    let magic: [u8; 4] = take(0, 4)?.try_into().expect("4 bytes");
    if magic != DATASET_MAGIC {
        return Err(Error::UnknownMagic(magic));
    }
    let u32_at = |at: usize| -> Result<u32> {
        Ok(u32::from_le_bytes(
            take(at, 4)?.try_into().expect("4 bytes"),
        ))
    };
    let version = u32_at(4)?;
    if version != DATASET_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (n, d, c) = (
        u32_at(8)? as usize,
        u32_at(12)? as usize,
        u32_at(16)? as usize,
    );
    let feature_end = 20 + n * d * 8;
    let expected = feature_end + n * 4;
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "binary dataset has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[20..feature_end]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    let labels = bytes[feature_end..]
        .chunks_exact(4)
        .enumerate()
        .map(
            |(row, b)| match i32::from_le_bytes(b.try_into().expect("4 bytes")) {
                -1 => Ok(None),
                v if v >= 0 => Ok(Some(v as usize)),
                v => Err(Error::Parse(format!("row {row}: label {v}"))),
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let features =
        Array2::from_shape_vec((n, d), values).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    FeatureDataset::with_default_ids(features, labels, c)
}

fn is_binary_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("bin") | Some("assl")
    )
}

/// Reads `.bin`/`.assl` files as binary and everything else as CSV.
pub fn read_dataset(path: &Path, class_count: Option<usize>) -> Result<FeatureDataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_binary_path(path) {
        let ds = parse_binary(&bytes)?;
        return match class_count {
            Some(c) if c != ds.class_count() => Err(Error::InvalidDataset(format!(
                "file declares {} classes, {c} expected",
                ds.class_count()
            ))),
            _ => Ok(ds),
        };
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))?;
    parse_csv(&text, class_count)
}

pub fn write_dataset(path: &Path, ds: &FeatureDataset) -> Result<()> {
    let bytes = if is_binary_path(path) {
        to_binary(ds)
    } else {
        to_csv(ds).into_bytes()
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
