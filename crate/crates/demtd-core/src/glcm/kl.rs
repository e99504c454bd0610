//! Karhunen-Loeve decorrelation across the 13 directions, fitted per
//! measure.
//!
//! For each of the 28 measures the 13 per-direction values form a
//! sub-vector; its sample covariance over the training set is
//! eigendecomposed (descending eigenvalues, first significant eigenvector
//! component made positive) and vectors are projected onto that basis
//! after mean subtraction. Output layout stays direction-major with length
//! 364: slot (d, m) holds the d-th KL coordinate of measure m.

use serde::{Deserialize, Serialize};

use super::{DESCRIPTOR_LEN, DIRECTION_COUNT, MEASURE_COUNT};
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigh;

/// Per-measure mean and orthonormal basis over directions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KlBasis {
    /// mean[m][d]: training mean of measure m along direction d.
    pub mean: Vec<Vec<f64>>,
    /// basis[m]: 13x13 row-major; column k is the k-th eigenvector.
    pub basis: Vec<Vec<f64>>,
    /// eigenvalues[m]: descending covariance eigenvalues per measure.
    pub eigenvalues: Vec<Vec<f64>>,
}

impl KlBasis {
    fn validate(&self) -> Result<()> {
        let ok = self.mean.len() == MEASURE_COUNT
            && self.basis.len() == MEASURE_COUNT
            && self.mean.iter().all(|m| m.len() == DIRECTION_COUNT)
            && self
                .basis
                .iter()
                .all(|b| b.len() == DIRECTION_COUNT * DIRECTION_COUNT);
        if ok {
            Ok(())
        } else {
            Err(Error::BasisMismatch(
                "basis shape is not 28 x (13, 13x13)".into(),
            ))
        }
    }
}

fn check_len(v: &[f64]) -> Result<()> {
    if v.len() != DESCRIPTOR_LEN {
        return Err(Error::FeatureDimMismatch {
            expected: DESCRIPTOR_LEN,
            actual: v.len(),
        });
    }
    Ok(())
}

/// Fit per-measure direction bases on training descriptors (>= 2 samples).
pub fn kl_transform_fit(train: &[Vec<f64>]) -> Result<KlBasis> {
    if train.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            actual: train.len(),
        });
    }
    for v in train {
        check_len(v)?;
    }
    let n = train.len();
    let mut mean = vec![vec![0.0; DIRECTION_COUNT]; MEASURE_COUNT];
    let mut basis = Vec::with_capacity(MEASURE_COUNT);
    let mut eigenvalues = Vec::with_capacity(MEASURE_COUNT);
    for m in 0..MEASURE_COUNT {
        for d in 0..DIRECTION_COUNT {
            mean[m][d] = train.iter().map(|v| v[d * MEASURE_COUNT + m]).sum::<f64>() / n as f64;
        }
        let mut cov = vec![vec![0.0; DIRECTION_COUNT]; DIRECTION_COUNT];
        for v in train {
            let centered: Vec<f64> = (0..DIRECTION_COUNT)
                .map(|d| v[d * MEASURE_COUNT + m] - mean[m][d])
                .collect();
            for (i, &ci) in centered.iter().enumerate() {
                for (j, &cj) in centered.iter().enumerate() {
                    cov[i][j] += ci * cj;
                }
            }
        }
        for row in cov.iter_mut() {
            for v in row.iter_mut() {
                *v /= (n - 1) as f64;
            }
        }
        let (vals, vecs) = jacobi_eigh(&cov);
        let mut flat = vec![0.0; DIRECTION_COUNT * DIRECTION_COUNT];
        for (i, row) in vecs.iter().enumerate() {
            flat[i * DIRECTION_COUNT..(i + 1) * DIRECTION_COUNT].copy_from_slice(row);
        }
        basis.push(flat);
        eigenvalues.push(vals);
    }
    Ok(KlBasis {
        mean,
        basis,
        eigenvalues,
    })
}

/// Project a descriptor onto the fitted basis (mean-subtracted).
pub fn kl_transform_apply(basis: &KlBasis, v: &[f64]) -> Result<Vec<f64>> {
    basis.validate()?;
    check_len(v)?;
    let mut out = vec![0.0; DESCRIPTOR_LEN];
    for m in 0..MEASURE_COUNT {
        for k in 0..DIRECTION_COUNT {
            let mut acc = 0.0;
            for d in 0..DIRECTION_COUNT {
                let e = basis.basis[m][d * DIRECTION_COUNT + k];
                acc += e * (v[d * MEASURE_COUNT + m] - basis.mean[m][d]);
            }
            out[k * MEASURE_COUNT + m] = acc;
        }
    }
    Ok(out)
}

/// Invert the projection: `inverse(apply(v)) = v` up to roundoff, since the
/// basis is orthonormal.
pub fn kl_transform_inverse(basis: &KlBasis, y: &[f64]) -> Result<Vec<f64>> {
    basis.validate()?;
    check_len(y)?;
    let mut out = vec![0.0; DESCRIPTOR_LEN];
    for m in 0..MEASURE_COUNT {
        for d in 0..DIRECTION_COUNT {
            let mut acc = basis.mean[m][d];
            for k in 0..DIRECTION_COUNT {
                acc += basis.basis[m][d * DIRECTION_COUNT + k] * y[k * MEASURE_COUNT + m];
            }
            out[d * MEASURE_COUNT + m] = acc;
        }
    }
    Ok(out)
}
