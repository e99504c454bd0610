//! Signal suppression and gray-level quantization of the invariant map.
//!
//! `suppress` maps the unbounded invariant E injectively into
//! (-pi/2, pi/2]: `atan(1 / E^{1/n})` on the nonnegative branch (with the
//! limit value pi/2 at E = 0) and the negated mirror on the negative branch.
//! Sharp responses collapse toward 0 while weak ones spread toward +-pi/2.
//! A linear gray scaling over the masked voxels then produces the label map
//! consumed by GLCM construction.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::invariants::{InvariantMap, VoxelStatus};
use crate::volume::{Dims, MaskROI};

/// Gray-level counts the feature pipeline accepts: 16, 24, ..., 128.
pub const ALLOWED_GRAY_LEVELS: [u32; 15] = [
    16, 24, 32, 40, 48, 56, 64, 72, 80, 88, 96, 104, 112, 120, 128,
];

pub fn is_allowed_gray_levels(levels: u32) -> bool {
    ALLOWED_GRAY_LEVELS.contains(&levels)
}

/// One-to-one signal suppression with root power `n >= 1`.
///
/// The negative branch covers (-pi/2, 0), the nonnegative branch (0, pi/2];
/// each branch is strictly decreasing in E, so the map is injective.
pub fn suppress(e: f64, n: u32) -> f64 {
    debug_assert!(n >= 1);
    if e == 0.0 {
        return FRAC_PI_2;
    }
    let root = e.abs().powf(1.0 / n as f64);
    let q = (1.0 / root).atan();
    if e > 0.0 {
        q
    } else {
        -q
    }
}

/// Per-voxel suppressed values Q. Excluded voxels hold 0.0 and must be
/// gated by the mask passed to `quantize`.
#[derive(Clone, Debug)]
pub struct SuppressedMap {
    dims: Dims,
    q: Vec<f64>,
    root_power: u32,
}

impl SuppressedMap {
    pub fn from_values(dims: Dims, q: Vec<f64>, root_power: u32) -> SuppressedMap {
        assert_eq!(q.len(), dims.0 * dims.1 * dims.2);
        SuppressedMap {
            dims,
            q,
            root_power,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn root_power(&self) -> u32 {
        self.root_power
    }
}

/// Apply `suppress` to every masked voxel of an invariant map. Singular
/// voxels carry E = 0 and therefore map to pi/2 like any zero.
pub fn suppress_map(map: &InvariantMap, root_power: u32) -> Result<SuppressedMap> {
    if root_power < 1 {
        return Err(Error::BadParam("root power must be >= 1".into()));
    }
    let q = map
        .status()
        .iter()
        .zip(map.e())
        .map(|(&s, &e)| {
            if s == VoxelStatus::Excluded {
                0.0
            } else {
                suppress(e, root_power)
            }
        })
        .collect();
    Ok(SuppressedMap {
        dims: map.dims(),
        q,
        root_power,
    })
}

/// Excluded-voxel sentinel in a label map.
pub const LABEL_EXCLUDED: u16 = u16::MAX;

/// Integer labels in [0, levels) at masked voxels, `LABEL_EXCLUDED` elsewhere.
#[derive(Clone, Debug)]
pub struct LabelMap {
    dims: Dims,
    labels: Vec<u16>,
    levels: u32,
}

impl LabelMap {
    pub fn from_labels(dims: Dims, labels: Vec<u16>, levels: u32) -> LabelMap {
        assert_eq!(labels.len(), dims.0 * dims.1 * dims.2);
        LabelMap {
            dims,
            labels,
            levels,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    #[inline]
    pub fn label_at(&self, x: usize, y: usize, z: usize) -> u16 {
        self.labels[x + self.dims.0 * (y + self.dims.1 * z)]
    }

    pub fn masked_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != LABEL_EXCLUDED).count()
    }
}

/// Linear gray scaling over the masked voxels:
/// `label = floor((Q - Qmin) / (Qmax - Qmin) * L)` clamped to L - 1, with
/// Qmin/Qmax taken over masked voxels only. A degenerate range maps all
/// masked voxels to label 0.
pub fn quantize(map: &SuppressedMap, mask: &MaskROI, levels: u32) -> Result<LabelMap> {
    if map.dims != mask.dims() {
        return Err(Error::DimMismatch {
            expected: map.dims,
            actual: mask.dims(),
        });
    }
    if levels < 1 || levels > u16::MAX as u32 {
        return Err(Error::BadParam(format!(
            "gray levels {levels} out of range"
        )));
    }
    let mut qmin = f64::INFINITY;
    let mut qmax = f64::NEG_INFINITY;
    let mut any = false;
    for (i, &q) in map.q.iter().enumerate() {
        if mask.data()[i] != 0 {
            any = true;
            qmin = qmin.min(q);
            qmax = qmax.max(q);
        }
    }
    if !any {
        return Err(Error::EmptyMask);
    }
    let range = qmax - qmin;
    let labels = map
        .q
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            if mask.data()[i] == 0 {
                LABEL_EXCLUDED
            } else if range == 0.0 {
                0
            } else {
                let raw = ((q - qmin) / range * levels as f64).floor() as i64;
                raw.clamp(0, levels as i64 - 1) as u16
            }
        })
        .collect();
    Ok(LabelMap {
        dims: map.dims,
        labels,
        levels,
    })
}

/// Normalized histogram of masked labels over `bins` bins. Labels are
/// rebinned proportionally (`bin = label * bins / levels`), which is the
/// identity when `bins == levels`.
pub fn histogram(labels: &LabelMap, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::BadParam("histogram needs at least one bin".into()));
    }
    let mut counts = vec![0u64; bins];
    let mut total = 0u64;
    for &l in &labels.labels {
        if l != LABEL_EXCLUDED {
            let b = (l as usize * bins) / labels.levels as usize;
            counts[b.min(bins - 1)] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn suppress_spot_values() {
        for n in 1..=9 {
            assert!((suppress(1.0, n) - FRAC_PI_4).abs() < 1e-12);
            assert!((suppress(-1.0, n) + FRAC_PI_4).abs() < 1e-12);
            assert_eq!(suppress(0.0, n), FRAC_PI_2);
        }
        let q = suppress(2e8, 1);
        assert!((q - (5e-9f64).atan()).abs() < 1e-18);
        assert!(q > 0.0 && q < 1e-8);
    }

    #[test]
    fn suppress_range_and_branch_signs() {
        let mut rng = Rng::new(21);
        for n in 1..=9 {
            for _ in 0..2000 {
                let e = rng.uniform(-1e9, 1e9);
                let q = suppress(e, n);
                assert!(q.abs() <= FRAC_PI_2);
                if e >= 0.0 {
                    assert!(q > 0.0);
                } else {
                    assert!(q < 0.0);
                }
            }
        }
    }

    #[test]
    fn suppress_monotone_decreasing_per_branch() {
        let mut rng = Rng::new(22);
        for n in [1u32, 2, 5, 9] {
            let mut pos: Vec<f64> = (0..500).map(|_| rng.uniform(0.0, 1e6)).collect();
            pos.push(0.0);
            pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
            pos.dedup();
            for w in pos.windows(2) {
                assert!(
                    suppress(w[0], n) > suppress(w[1], n),
                    "not decreasing at {w:?}"
                );
            }
            let mut neg: Vec<f64> = (0..500).map(|_| rng.uniform(-1e6, -1e-9)).collect();
            neg.sort_by(|a, b| a.partial_cmp(b).unwrap());
            neg.dedup();
            for w in neg.windows(2) {
                assert!(suppress(w[0], n) > suppress(w[1], n));
            }
        }
    }

    #[test]
    fn suppress_injective_across_branches() {
        let mut rng = Rng::new(23);
        let mut es: Vec<f64> = (0..2000).map(|_| rng.uniform(-1e4, 1e4)).collect();
        es.sort_by(|a, b| a.partial_cmp(b).unwrap());
        es.dedup();
        let qs: Vec<f64> = es.iter().map(|&e| suppress(e, 3)).collect();
        let mut sorted = qs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            assert!(w[0] < w[1], "collision at {w:?}");
        }
    }

    #[test]
    fn growing_root_power_retains_extremes() {
        for &e in &[1.5f64, 10.0, 1e4, -3.0, -2e8] {
            let mut prev = suppress(e, 1).abs();
            for n in 2..=9 {
                let cur = suppress(e, n).abs();
                assert!(cur >= prev - 1e-15, "|Q| shrank for |E|>1 at n={n}");
                prev = cur;
            }
        }
    }

    fn line_mask(n: usize) -> MaskROI {
        MaskROI::full((n, 1, 1))
    }

    #[test]
    fn quantize_degenerate_range() {
        let map = SuppressedMap::from_values((4, 1, 1), vec![0.7; 4], 1);
        let labels = quantize(&map, &line_mask(4), 16).unwrap();
        assert!(labels.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn quantize_three_values_two_levels() {
        let q = vec![-FRAC_PI_2, 0.0, FRAC_PI_2];
        let map = SuppressedMap::from_values((3, 1, 1), q, 1);
        let labels = quantize(&map, &line_mask(3), 2).unwrap();
        assert_eq!(labels.labels(), &[0, 1, 1]);
    }

    #[test]
    fn quantize_max_clamps_to_top_label() {
        let mut rng = Rng::new(4);
        let q: Vec<f64> = (0..64).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let map = SuppressedMap::from_values((64, 1, 1), q.clone(), 1);
        let labels = quantize(&map, &line_mask(64), 16).unwrap();
        let argmax = q
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(labels.labels()[argmax], 15);
        assert!(labels.labels().iter().all(|&l| l < 16));
    }

    #[test]
    fn quantize_is_monotone() {
        let mut rng = Rng::new(5);
        let q: Vec<f64> = (0..200).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let map = SuppressedMap::from_values((200, 1, 1), q.clone(), 1);
        let labels = quantize(&map, &line_mask(200), 24).unwrap();
        for i in 0..200 {
            for j in 0..200 {
                if q[i] <= q[j] {
                    assert!(labels.labels()[i] <= labels.labels()[j]);
                }
            }
        }
    }

    #[test]
    fn quantize_respects_mask_and_empty_mask_errors() {
        let q = vec![0.0, 10.0, -10.0, 0.5];
        let map = SuppressedMap::from_values((4, 1, 1), q, 1);
        let mask = MaskROI::new((4, 1, 1), vec![1, 0, 0, 1]).unwrap();
        // Min/max from masked voxels only: range is [0.0, 0.5].
        let labels = quantize(&map, &mask, 2).unwrap();
        assert_eq!(labels.labels()[0], 0);
        assert_eq!(labels.labels()[3], 1);
        assert_eq!(labels.labels()[1], LABEL_EXCLUDED);
        let empty = MaskROI::new((4, 1, 1), vec![0; 4]).unwrap();
        assert!(matches!(quantize(&map, &empty, 2), Err(Error::EmptyMask)));
    }

    #[test]
    fn histogram_masses() {
        let labels = LabelMap::from_labels((4, 1, 1), vec![3, 3, 3, 3], 16);
        let h = histogram(&labels, 16).unwrap();
        assert_eq!(h[3], 1.0);
        assert_eq!(h.iter().sum::<f64>(), 1.0);

        let labels = LabelMap::from_labels((4, 1, 1), vec![0, 0, 5, 5], 16);
        let h = histogram(&labels, 16).unwrap();
        assert_eq!(h[0], 0.5);
        assert_eq!(h[5], 0.5);
    }

    #[test]
    fn histogram_sums_to_one_on_random_maps() {
        let mut rng = Rng::new(6);
        for _ in 0..20 {
            let levels = 16u32;
            let labels: Vec<u16> = (0..500)
                .map(|_| rng.next_usize(levels as usize) as u16)
                .collect();
            let lm = LabelMap::from_labels((500, 1, 1), labels, levels);
            for bins in [16usize, 32, 256] {
                let h = histogram(&lm, bins).unwrap();
                assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(h.iter().all(|&p| p >= 0.0));
            }
        }
    }
}
