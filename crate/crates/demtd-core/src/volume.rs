//! Volumes and masks in the on-disk pair format: a `<name>.json` sidecar
//! header plus a `<name>.raw` little-endian payload, x-fastest order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Dims = (usize, usize, usize);

/// Inclusive (low, high) voxel corners of a box.
pub type VoxelBox = ((usize, usize, usize), (usize, usize, usize));

/// 3D scalar field `I(x, y, z)` with voxel spacing carried as metadata.
///
/// Samples are stored x-fastest: `index = x + nx * (y + ny * z)`. Spacing is
/// millimeters and purely informational; all stencils work in voxel units.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume3D {
    dims: Dims,
    spacing: (f64, f64, f64),
    data: Vec<f32>,
}

impl Volume3D {
    pub fn new(dims: Dims, spacing: (f64, f64, f64), data: Vec<f32>) -> Result<Volume3D> {
        let (nx, ny, nz) = dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::BadParam("volume dims must be positive".into()));
        }
        if data.len() != nx * ny * nz {
            return Err(Error::SizeMismatch {
                path: PathBuf::new(),
                expected: nx * ny * nz,
                actual: data.len(),
            });
        }
        if !(spacing.0 > 0.0 && spacing.1 > 0.0 && spacing.2 > 0.0) {
            return Err(Error::BadParam(
                "spacing components must be positive".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("volume data".into()));
        }
        Ok(Volume3D {
            dims,
            spacing,
            data,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(x, y, z)]
    }
}

/// Binary region-of-interest mask paired with a volume of the same dims.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskROI {
    dims: Dims,
    data: Vec<u8>,
}

impl MaskROI {
    pub fn new(dims: Dims, data: Vec<u8>) -> Result<MaskROI> {
        let (nx, ny, nz) = dims;
        if data.len() != nx * ny * nz {
            return Err(Error::SizeMismatch {
                path: PathBuf::new(),
                expected: nx * ny * nz,
                actual: data.len(),
            });
        }
        if let Some(&v) = data.iter().find(|&&v| v > 1) {
            return Err(Error::NonBinary {
                path: PathBuf::new(),
                value: v,
            });
        }
        Ok(MaskROI { dims, data })
    }

    /// All-ones mask over the given dims.
    pub fn full(dims: Dims) -> MaskROI {
        MaskROI {
            dims,
            data: vec![1; dims.0 * dims.1 * dims.2],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.index(x, y, z)] != 0
    }

    pub fn set_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// Tight bounding box of set voxels as inclusive (lo, hi) corners.
    pub fn bounding_box(&self) -> Option<VoxelBox> {
        let (nx, ny, nz) = self.dims;
        let mut lo = (usize::MAX, usize::MAX, usize::MAX);
        let mut hi = (0usize, 0usize, 0usize);
        let mut any = false;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if self.is_set(x, y, z) {
                        any = true;
                        lo = (lo.0.min(x), lo.1.min(y), lo.2.min(z));
                        hi = (hi.0.max(x), hi.1.max(y), hi.2.max(z));
                    }
                }
            }
        }
        any.then_some((lo, hi))
    }
}

/// Sample format tag of the raw payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "f32le")]
    F32le,
    #[serde(rename = "u8")]
    U8,
}

/// JSON sidecar header describing a raw payload.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub dtype: Dtype,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

/// Resolve `<stem>.json` / `<stem>.raw` from any of: the header path, the
/// payload path, or the bare stem.
fn file_pair(path: &Path) -> (PathBuf, PathBuf) {
    let header = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => path.to_path_buf(),
        _ => path.with_extension("json"),
    };
    let raw = header.with_extension("raw");
    (header, raw)
}

fn read_header(path: &Path) -> Result<VolumeHeader> {
    let text = fs::read_to_string(path).map_err(|e| Error::MissingFile(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::HeaderParse(path.to_path_buf(), e.to_string()))
}

pub fn load_volume(path: &Path) -> Result<Volume3D> {
    let (header_path, raw_path) = file_pair(path);
    let header = read_header(&header_path)?;
    if header.dtype != Dtype::F32le {
        return Err(Error::HeaderParse(
            header_path,
            "expected dtype f32le".into(),
        ));
    }
    let bytes = fs::read(&raw_path).map_err(|e| Error::MissingFile(raw_path.clone(), e))?;
    let n = header.dims[0] * header.dims[1] * header.dims[2];
    if bytes.len() != n * 4 {
        return Err(Error::SizeMismatch {
            path: raw_path,
            expected: n * 4,
            actual: bytes.len(),
        });
    }
    let mut data = Vec::with_capacity(n);
    for chunk in bytes.chunks_exact(4) {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "volume payload {}",
                raw_path.display()
            )));
        }
        data.push(v);
    }
    Volume3D::new(
        (header.dims[0], header.dims[1], header.dims[2]),
        (header.spacing[0], header.spacing[1], header.spacing[2]),
        data,
    )
}

pub fn save_volume(path: &Path, volume: &Volume3D) -> Result<()> {
    save_volume_with_meta(path, volume, &BTreeMap::new())
}

pub fn save_volume_with_meta(
    path: &Path,
    volume: &Volume3D,
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    let (header_path, raw_path) = file_pair(path);
    let header = VolumeHeader {
        dims: [volume.dims.0, volume.dims.1, volume.dims.2],
        spacing: [volume.spacing.0, volume.spacing.1, volume.spacing.2],
        dtype: Dtype::F32le,
        meta: meta.clone(),
    };
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&header_path, text).map_err(|e| Error::Io(header_path.clone(), e))?;
    let mut bytes = Vec::with_capacity(volume.data.len() * 4);
    for v in &volume.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&raw_path, bytes).map_err(|e| Error::Io(raw_path, e))
}

pub fn load_mask(path: &Path) -> Result<MaskROI> {
    let (header_path, raw_path) = file_pair(path);
    let header = read_header(&header_path)?;
    if header.dtype != Dtype::U8 {
        return Err(Error::HeaderParse(header_path, "expected dtype u8".into()));
    }
    let bytes = fs::read(&raw_path).map_err(|e| Error::MissingFile(raw_path.clone(), e))?;
    let n = header.dims[0] * header.dims[1] * header.dims[2];
    if bytes.len() != n {
        return Err(Error::SizeMismatch {
            path: raw_path,
            expected: n,
            actual: bytes.len(),
        });
    }
    if let Some(&v) = bytes.iter().find(|&&v| v > 1) {
        return Err(Error::NonBinary {
            path: raw_path,
            value: v,
        });
    }
    MaskROI::new((header.dims[0], header.dims[1], header.dims[2]), bytes)
}

pub fn save_mask(path: &Path, mask: &MaskROI) -> Result<()> {
    let (header_path, raw_path) = file_pair(path);
    let header = VolumeHeader {
        dims: [mask.dims.0, mask.dims.1, mask.dims.2],
        spacing: [1.0, 1.0, 1.0],
        dtype: Dtype::U8,
        meta: BTreeMap::new(),
    };
    let text = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&header_path, text).map_err(|e| Error::Io(header_path.clone(), e))?;
    fs::write(&raw_path, &mask.data).map_err(|e| Error::Io(raw_path, e))
}

/// Crop volume and mask to the tight box of set mask voxels dilated by
/// `margin` voxels on every side, clipped to the volume bounds. The margin
/// exists so derivative stencils centered on contour voxels still see real
/// samples outside the contour.
pub fn crop_to_roi(
    volume: &Volume3D,
    mask: &MaskROI,
    margin: usize,
) -> Result<(Volume3D, MaskROI)> {
    if volume.dims != mask.dims {
        return Err(Error::DimMismatch {
            expected: volume.dims,
            actual: mask.dims,
        });
    }
    let (lo, hi) = mask.bounding_box().ok_or(Error::EmptyMask)?;
    let lo = (
        lo.0.saturating_sub(margin),
        lo.1.saturating_sub(margin),
        lo.2.saturating_sub(margin),
    );
    let hi = (
        (hi.0 + margin).min(volume.dims.0 - 1),
        (hi.1 + margin).min(volume.dims.1 - 1),
        (hi.2 + margin).min(volume.dims.2 - 1),
    );
    let out_dims = (hi.0 - lo.0 + 1, hi.1 - lo.1 + 1, hi.2 - lo.2 + 1);
    let n = out_dims.0 * out_dims.1 * out_dims.2;
    let mut vol_data = Vec::with_capacity(n);
    let mut mask_data = Vec::with_capacity(n);
    for z in lo.2..=hi.2 {
        for y in lo.1..=hi.1 {
            for x in lo.0..=hi.0 {
                vol_data.push(volume.at(x, y, z));
                mask_data.push(mask.data[mask.index(x, y, z)]);
            }
        }
    }
    let cropped_volume = Volume3D {
        dims: out_dims,
        spacing: volume.spacing,
        data: vol_data,
    };
    let cropped_mask = MaskROI {
        dims: out_dims,
        data: mask_data,
    };
    Ok((cropped_volume, cropped_mask))
}
