//! Output artifacts: parameter echo, feature CSV, grid CSV, score files.
//! Everything written here is a pure function of inputs and flags, so
//! reruns produce byte-identical files.

use std::path::Path;

use serde::Serialize;

use demtd_core::error::Error;
use demtd_core::glcm::{FeatureVector, DESCRIPTOR_LEN};

/// Parameter echo embedded in every JSON artifact (and written as a
/// `.meta.json` sidecar next to CSV artifacts, whose schemas are pinned).
#[derive(Debug, Clone, Serialize)]
pub struct Echo {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trees: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mtry: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fsfs: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl: Option<bool>,
}

impl Echo {
    pub fn new(command: &str) -> Echo {
        Echo {
            tool: "demtd",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            n: None,
            levels: None,
            seed: None,
            trees: None,
            mtry: None,
            repeats: None,
            fsfs: None,
            kl: None,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(path.to_path_buf(), e))
}

/// Sidecar `<path>.meta.json` carrying the echo for CSV artifacts.
pub fn write_meta_sidecar(path: &Path, echo: &Echo) -> Result<(), Error> {
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".meta.json");
    write_json(Path::new(&sidecar), echo)
}

/// Feature CSV: header `id,label,f000,...,f363`, one row per lesion,
/// '.' decimal, shortest round-trip float formatting.
pub fn write_feature_csv(path: &Path, rows: &[FeatureVector]) -> Result<(), Error> {
    let mut out = String::from("id,label");
    for i in 0..DESCRIPTOR_LEN {
        out.push_str(&format!(",f{i:03}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.id);
        out.push(',');
        out.push_str(&row.label.to_string());
        for v in &row.values {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::Io(path.to_path_buf(), e))
}

/// Parsed feature CSV: ids, labels, feature rows.
pub type FeatureTable = (Vec<String>, Vec<u8>, Vec<Vec<f64>>);

/// Parse a feature CSV with any feature width (header `id,label,...`).
pub fn read_feature_csv(path: &Path) -> Result<FeatureTable, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::MissingFile(path.to_path_buf(), e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::HeaderParse(path.to_path_buf(), "empty feature CSV".into()))?;
    if !header.starts_with("id,label") {
        return Err(Error::HeaderParse(
            path.to_path_buf(),
            "feature CSV must start with 'id,label'".into(),
        ));
    }
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut features = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields
            .next()
            .ok_or_else(|| Error::HeaderParse(path.to_path_buf(), format!("row {lineno}")))?;
        let label: u8 = fields.next().and_then(|s| s.parse().ok()).ok_or_else(|| {
            Error::HeaderParse(path.to_path_buf(), format!("bad label in row {lineno}"))
        })?;
        let values: Result<Vec<f64>, _> = fields.map(|s| s.parse::<f64>()).collect();
        let values = values.map_err(|e| {
            Error::HeaderParse(
                path.to_path_buf(),
                format!("bad value in row {lineno}: {e}"),
            )
        })?;
        ids.push(id.to_string());
        labels.push(label);
        features.push(values);
    }
    Ok((ids, labels, features))
}

/// Plain score file: one float per line.
pub fn read_scores(path: &Path) -> Result<Vec<f64>, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::MissingFile(path.to_path_buf(), e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim().parse::<f64>().map_err(|e| {
                Error::HeaderParse(path.to_path_buf(), format!("bad score '{l}': {e}"))
            })
        })
        .collect()
}

pub fn write_scores(path: &Path, scores: &[f64]) -> Result<(), Error> {
    let mut out = String::new();
    for s in scores {
        out.push_str(&format!("{s}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::Io(path.to_path_buf(), e))
}

/// Histogram CSV: `bin,probability`.
pub fn write_histogram_csv(path: &Path, histogram: &[f64]) -> Result<(), Error> {
    let mut out = String::from("bin,probability\n");
    for (bin, p) in histogram.iter().enumerate() {
        out.push_str(&format!("{bin},{p}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::Io(path.to_path_buf(), e))
}
