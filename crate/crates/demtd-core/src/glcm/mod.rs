//! Gray-level co-occurrence matrices over the masked label map and the
//! 364-dimensional descriptor assembled from them.
//!
//! Thirteen offset directions cover the 26 nearest neighbors once (a
//! direction and its negation produce the same symmetric GLCM, so only one
//! of each pair is kept). Per direction, co-occurrences at unit distance
//! are accumulated in both senses and normalized; 28 measures per matrix
//! concatenate direction-major into the descriptor.

mod haralick;
mod kl;

pub use haralick::{haralick_28, MEASURE_COUNT, MEASURE_NAMES};
pub use kl::{kl_transform_apply, kl_transform_fit, kl_transform_inverse, KlBasis};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::invariants::{invariant_map, MapParams};
use crate::suppression::{
    is_allowed_gray_levels, quantize, suppress_map, LabelMap, LABEL_EXCLUDED,
};
use crate::volume::{MaskROI, Volume3D};

/// Offset triple in voxel steps.
pub type Direction = (i32, i32, i32);

/// Number of co-occurrence directions.
pub const DIRECTION_COUNT: usize = 13;

/// Descriptor length: 13 directions x 28 measures.
pub const DESCRIPTOR_LEN: usize = DIRECTION_COUNT * MEASURE_COUNT;

/// The canonical direction order. Together with the negations these cover
/// all 26 unit-cube neighbors exactly once.
pub fn directions_13() -> [Direction; DIRECTION_COUNT] {
    [
        (1, 0, 0),
        (0, 1, 0),
        (0, 0, 1),
        (1, 1, 0),
        (1, -1, 0),
        (1, 0, 1),
        (1, 0, -1),
        (0, 1, 1),
        (0, 1, -1),
        (1, 1, 1),
        (1, 1, -1),
        (1, -1, 1),
        (-1, 1, 1),
    ]
}

/// Normalized symmetric co-occurrence matrix for one direction.
#[derive(Clone, Debug)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
    direction: Direction,
}

impl Glcm {
    pub fn from_probabilities(levels: usize, p: Vec<f64>, direction: Direction) -> Glcm {
        assert_eq!(p.len(), levels * levels);
        Glcm {
            levels,
            p,
            direction,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }
}

/// Count pairs (v, v + d) with both endpoints masked, accumulating each pair
/// in both senses, then normalize. Errors with `NoValidPairs` when no pair
/// has both endpoints inside the mask.
pub fn build_glcm(
    labels: &LabelMap,
    mask: &MaskROI,
    direction: Direction,
    levels: u32,
) -> Result<Glcm> {
    if labels.dims() != mask.dims() {
        return Err(Error::DimMismatch {
            expected: labels.dims(),
            actual: mask.dims(),
        });
    }
    if levels != labels.levels() {
        return Err(Error::BadParam(format!(
            "GLCM levels {levels} do not match label map levels {}",
            labels.levels()
        )));
    }
    let l = levels as usize;
    let (nx, ny, nz) = labels.dims();
    let (dx, dy, dz) = direction;
    let mut counts = vec![0u64; l * l];
    let mut total = 0u64;
    for z in 0..nz as i64 {
        for y in 0..ny as i64 {
            for x in 0..nx as i64 {
                let (x2, y2, z2) = (x + dx as i64, y + dy as i64, z + dz as i64);
                if x2 < 0
                    || y2 < 0
                    || z2 < 0
                    || x2 >= nx as i64
                    || y2 >= ny as i64
                    || z2 >= nz as i64
                {
                    continue;
                }
                let (xu, yu, zu) = (x as usize, y as usize, z as usize);
                let (xv, yv, zv) = (x2 as usize, y2 as usize, z2 as usize);
                if !mask.is_set(xu, yu, zu) || !mask.is_set(xv, yv, zv) {
                    continue;
                }
                let a = labels.label_at(xu, yu, zu);
                let b = labels.label_at(xv, yv, zv);
                if a == LABEL_EXCLUDED || b == LABEL_EXCLUDED {
                    continue;
                }
                counts[a as usize * l + b as usize] += 1;
                counts[b as usize * l + a as usize] += 1;
                total += 2;
            }
        }
    }
    if total == 0 {
        return Err(Error::NoValidPairs { direction });
    }
    let p = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(Glcm {
        levels: l,
        p,
        direction,
    })
}

/// One lesion's descriptor row: id, class label, 364 values.
#[derive(Clone, Debug)]
pub struct FeatureVector {
    pub id: String,
    pub label: u8,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(id: String, label: u8, values: Vec<f64>) -> Result<FeatureVector> {
        if values.len() != DESCRIPTOR_LEN {
            return Err(Error::FeatureDimMismatch {
                expected: DESCRIPTOR_LEN,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature vector '{id}'")));
        }
        Ok(FeatureVector { id, label, values })
    }
}

/// Full descriptor pipeline: invariant map, suppression with root power
/// `n`, quantization to `levels` grays, 13 GLCMs, 28 measures each,
/// concatenated direction-major (block d covers `d*28 .. (d+1)*28`).
pub fn demtd_features(
    volume: &Volume3D,
    mask: &MaskROI,
    root_power: u32,
    levels: u32,
    params: &MapParams,
) -> Result<Vec<f64>> {
    if !(1..=9).contains(&root_power) {
        return Err(Error::BadParam(format!(
            "root power {root_power} outside 1..=9"
        )));
    }
    if !is_allowed_gray_levels(levels) {
        return Err(Error::BadParam(format!(
            "gray levels {levels} not in the allowed set 16, 24, ..., 128"
        )));
    }
    let inv = invariant_map(volume, mask, params)?;
    let sup = suppress_map(&inv, root_power)?;
    let labels = quantize(&sup, mask, levels)?;
    let glcms: Vec<Result<Glcm>> = directions_13()
        .par_iter()
        .map(|&d| build_glcm(&labels, mask, d, levels))
        .collect();
    let mut out = Vec::with_capacity(DESCRIPTOR_LEN);
    for g in glcms {
        out.extend_from_slice(&haralick_28(&g?));
    }
    Ok(out)
}
