//! Run outputs: manifest, metrics JSON, predictions and pseudolabels.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::eval::MetricsReport;
use crate::graph::{Pseudolabel, PseudolabelStore};
use crate::inference::Prediction;
use crate::io::config::RunConfig;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const METRICS_FILE: &str = "metrics.json";
pub const PSEUDOLABEL_FILE: &str = "pseudolabels.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Resolved config plus the crate version. Parses back as a [`RunConfig`].
pub fn manifest_text(cfg: &RunConfig) -> String {
    format!(
        "# {} run manifest\nversion = {}\n{}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        cfg.to_text()
    )
}

pub fn config_echo(cfg: &RunConfig) -> Value {
    let mut map = Map::new();
    for (k, v) in cfg.entries() {
        map.insert(k.to_string(), Value::String(v));
    }
    Value::Object(map)
}

pub fn metrics_json(report: &MetricsReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// `id,class,p0,...,p{C-1}`.
pub fn predictions_csv(preds: &[Prediction]) -> String {
    let classes = preds.first().map_or(0, |p| p.probabilities.len());
    let mut out = String::from("id,class");
    for c in 0..classes {
        out.push_str(&format!(",p{c}"));
    }
    out.push('\n');
    for p in preds {
        out.push_str(&format!("{},{}", p.id, p.class));
        for v in &p.probabilities {
            out.push_str(&format!(",{v:?}"));
        }
        out.push('\n');
    }
    out
}

/// Parses a predictions file; the seed column is not stored and reads as 0.
pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.len() < 2 || &header[0] != "id" || &header[1] != "class" {
        return Err(Error::MalformedHeader("expected `id,class,p0,...`".into()));
    }
    let classes = header.len() - 2;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != classes + 2 {
            return Err(Error::RaggedRow {
                line,
                expected: classes,
                found: record.len().saturating_sub(2),
            });
        }
        let bad = |field: &str| Error::Parse(format!("line {line}: bad value {field:?}"));
        out.push(Prediction {
            id: record[0].to_string(),
            class: record[1].parse().map_err(|_| bad(&record[1]))?,
            probabilities: record
                .iter()
                .skip(2)
                .map(|f| f.parse().map_err(|_| bad(f)))
                .collect::<Result<_>>()?,
            seed: 0,
        });
    }
    Ok(out)
}

/// `index,id,class,confidence` for every pseudolabeled training row.
pub fn pseudolabels_csv(store: &PseudolabelStore, ids: &[String]) -> String {
    let mut out = format!(
        "# epoch_of_record = {}\nindex,id,class,confidence\n",
        store.epoch_of_record
    );
    for (i, p) in store.iter() {
        out.push_str(&format!("{i},{},{},{:?}\n", ids[i], p.class, p.confidence));
    }
    out
}

pub fn parse_pseudolabels(text: &str) -> Result<PseudolabelStore> {
    let mut lines = text.lines();
    let epoch = lines
        .next()
        .and_then(|l| l.strip_prefix("# epoch_of_record = "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::MalformedHeader("missing epoch_of_record line".into()))?;
    if lines.next().map(str::trim) != Some("index,id,class,confidence") {
        return Err(Error::MalformedHeader(
            "expected `index,id,class,confidence`".into(),
        ));
    }
    let mut store = PseudolabelStore::new(epoch);
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Parse(format!("pseudolabel line {}: {line:?}", n + 3));
        if fields.len() != 4 {
            return Err(bad());
        }
        let index = fields[0].parse().map_err(|_| bad())?;
        let class = fields[2].parse().map_err(|_| bad())?;
        let confidence: f64 = fields[3].parse().map_err(|_| bad())?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(bad());
        }
        store.insert(index, Pseudolabel { class, confidence });
    }
    Ok(store)
}
