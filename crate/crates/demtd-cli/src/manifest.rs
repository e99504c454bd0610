//! Lesion manifest: the JSON input listing volume/mask pairs with labels,
//! plus optional global defaults for root power, gray levels, and seed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use demtd_core::classify::LesionSample;
use demtd_core::error::Error;
use demtd_core::volume::{crop_to_roi, load_mask, load_volume};

#[derive(Debug, Deserialize)]
pub struct ManifestDefaults {
    pub n: Option<u32>,
    pub levels: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub volume: String,
    pub mask: String,
    pub label: u8,
}

#[derive(Debug, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub defaults: Option<ManifestDefaults>,
    pub lesions: Vec<ManifestRecord>,
}

impl Manifest {
    /// Load and validate: unique ids, binary labels. Paths stay as written;
    /// resolve them against the manifest directory with `resolve`.
    pub fn load(path: &Path) -> Result<Manifest, Error> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::MissingFile(path.to_path_buf(), e))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::HeaderParse(path.to_path_buf(), e.to_string()))?;
        let mut seen = BTreeSet::new();
        for record in &manifest.lesions {
            if record.label > 1 {
                return Err(Error::BadParam(format!(
                    "label {} for id '{}' is not binary",
                    record.label, record.id
                )));
            }
            if !seen.insert(record.id.clone()) {
                return Err(Error::DuplicateId(record.id.clone()));
            }
        }
        Ok(manifest)
    }
}

/// Resolve a manifest-relative path.
pub fn resolve(manifest_path: &Path, entry: &str) -> PathBuf {
    let p = Path::new(entry);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(p)
    }
}

/// Load one record's volume and mask, cropped to the ROI with `margin`.
pub fn load_lesion(
    manifest_path: &Path,
    record: &ManifestRecord,
    margin: usize,
) -> Result<LesionSample, Error> {
    let volume = load_volume(&resolve(manifest_path, &record.volume))?;
    let mask = load_mask(&resolve(manifest_path, &record.mask))?;
    let (volume, mask) = crop_to_roi(&volume, &mask, margin)?;
    Ok(LesionSample {
        id: record.id.clone(),
        label: record.label,
        volume,
        mask,
    })
}
