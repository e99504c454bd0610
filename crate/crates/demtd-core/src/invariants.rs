//! Differential affine invariants built from the gradient and Hessian.
//!
//! Per voxel, the structure tensor `G = g^T g` and the Hessian `H` form the
//! hybrid tensors `K1 = H - G`, `K2 = H + G`. At voxels with nonsingular
//! Hessian, the fundamental invariant is `E = g H^{-1} g^T`, evaluated
//! through the adjugate as `(g adj(H) g^T) / det(H)` so there is a single
//! determinant guard and no separate inversion failure path. `F1 = 1 - E`
//! and `F2 = 1 + E` follow; the determinant-ratio route
//! `F1 = |K1| / |H|`, `F2 = |K2| / |H|` must agree and is kept as an
//! independent evaluation path. Singular voxels get `E = 0` and a flag.
//!
//! The gradient transforms as a row vector: under an affine map `P`,
//! `g' = g P` and `H' = P^T H P`, which leaves `E` unchanged for any
//! nonsingular `P`.

use serde::Serialize;

use crate::derivatives::{deriche_hessian, sobel_gradient};
use crate::error::{Error, Result};
use crate::linalg::{det3, vec_mat, Mat3, Sym3, Vec3};
use crate::volume::{Dims, MaskROI, Volume3D};

/// Structure tensor and Hessian at one voxel.
#[derive(Clone, Copy, Debug)]
pub struct TensorPair {
    pub structure: Sym3,
    pub hessian: Sym3,
}

impl TensorPair {
    pub fn from_fields(g: Vec3, h: Sym3) -> TensorPair {
        TensorPair {
            structure: harris_tensor(g),
            hessian: h,
        }
    }
}

/// Nonsingular 3x3 linear map.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    m: Mat3,
}

pub const DET_FLOOR: f64 = 1e-12;

impl AffineMap {
    pub fn new(m: Mat3) -> Result<AffineMap> {
        if det3(m).abs() <= DET_FLOOR {
            return Err(Error::SingularP);
        }
        Ok(AffineMap { m })
    }

    pub fn matrix(&self) -> Mat3 {
        self.m
    }

    pub fn det(&self) -> f64 {
        det3(self.m)
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = crate::linalg::inv3(self.m, 0.0).expect("validated nonsingular");
        AffineMap { m: inv }
    }
}

/// Structure tensor `G = g^T g` (outer product of the gradient row vector).
pub fn harris_tensor(g: Vec3) -> Sym3 {
    Sym3::outer(g)
}

/// Hybrid tensors `(K1, K2) = (H - G, H + G)`.
pub fn hybrid_tensors(g_tensor: Sym3, h: Sym3) -> (Sym3, Sym3) {
    (h - g_tensor, h + g_tensor)
}

/// Scale-aware singularity threshold for a Hessian: `1e-12 * mean(|H|)^3`,
/// floored at 1e-300 so an exactly-zero Hessian still counts as singular.
pub fn singular_eps(h: Sym3) -> f64 {
    let m = h.mean_abs();
    (1e-12 * m * m * m).max(1e-300)
}

/// Fundamental invariant `E = g H^{-1} g^T` via the adjugate identity.
/// Returns `(0.0, true)` when `|det H| < eps_singular`.
pub fn invariant_e(g: Vec3, h: Sym3, eps_singular: f64) -> (f64, bool) {
    let det = h.det();
    if det.abs() < eps_singular {
        return (0.0, true);
    }
    let e = h.adjugate().quad_form(g) / det;
    (e, false)
}

/// `(F1, F2) = (1 - E, 1 + E)`.
pub fn invariants_f(e: f64) -> (f64, f64) {
    (1.0 - e, 1.0 + e)
}

/// Determinant-ratio route: `F1 = |K1| / |H|`, `F2 = |K2| / |H|`. Kept as an
/// independent evaluation path; must agree with `invariants_f(invariant_e)`.
pub fn invariants_f_direct(g: Vec3, h: Sym3, eps_singular: f64) -> Result<(f64, f64)> {
    let det = h.det();
    if det.abs() < eps_singular {
        return Err(Error::SingularH);
    }
    let (k1, k2) = hybrid_tensors(harris_tensor(g), h);
    Ok((k1.det() / det, k2.det() / det))
}

/// Push (g, H) through an affine map: `g' = g P`, `H' = P^T H P`.
pub fn affine_pushforward(g: Vec3, h: Sym3, p: &AffineMap) -> (Vec3, Sym3) {
    (vec_mat(g, p.m), h.congruence(p.m))
}

/// Per-voxel classification in an invariant map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VoxelStatus {
    /// Outside the mask; value is a sentinel and must not feed statistics.
    Excluded,
    /// Masked but |det H| below the singularity threshold; E forced to 0.
    Singular,
    /// Masked with a well-defined invariant.
    Regular,
}

/// Per-voxel E, F1, F2 over a masked volume.
#[derive(Clone, Debug)]
pub struct InvariantMap {
    dims: Dims,
    e: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    status: Vec<VoxelStatus>,
}

impl InvariantMap {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    pub fn f2(&self) -> &[f64] {
        &self.f2
    }

    pub fn status(&self) -> &[VoxelStatus] {
        &self.status
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    /// Masked (non-excluded) voxel count.
    pub fn masked_count(&self) -> usize {
        self.status
            .iter()
            .filter(|&&s| s != VoxelStatus::Excluded)
            .count()
    }

    pub fn singular_count(&self) -> usize {
        self.status
            .iter()
            .filter(|&&s| s == VoxelStatus::Singular)
            .count()
    }

    /// Summary over masked voxels of the E channel.
    pub fn stats(&self) -> MapStats {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut n = 0usize;
        for (i, &s) in self.status.iter().enumerate() {
            if s != VoxelStatus::Excluded {
                let v = self.e[i];
                min = min.min(v);
                max = max.max(v);
                sum += v;
                n += 1;
            }
        }
        MapStats {
            masked_voxels: n,
            singular_voxels: self.singular_count(),
            e_min: if n == 0 { 0.0 } else { min },
            e_max: if n == 0 { 0.0 } else { max },
            e_mean: if n == 0 { 0.0 } else { sum / n as f64 },
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MapStats {
    pub masked_voxels: usize,
    pub singular_voxels: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub e_mean: f64,
}

/// Derivative-filter parameters for the map pipeline.
#[derive(Clone, Copy, Debug)]
pub struct MapParams {
    pub alpha: f64,
    pub window: usize,
    pub border: usize,
}

impl Default for MapParams {
    fn default() -> Self {
        MapParams {
            alpha: crate::derivatives::DERICHE_ALPHA_DEFAULT,
            window: crate::derivatives::DERICHE_WINDOW_DEFAULT,
            border: crate::derivatives::DERICHE_BORDER_DEFAULT,
        }
    }
}

/// Run Sobel + Deriche over the volume and evaluate E, F1, F2 at every
/// masked voxel. Unmasked voxels carry `VoxelStatus::Excluded` and zeros.
pub fn invariant_map(
    volume: &Volume3D,
    mask: &MaskROI,
    params: &MapParams,
) -> Result<InvariantMap> {
    if volume.dims() != mask.dims() {
        return Err(Error::DimMismatch {
            expected: volume.dims(),
            actual: mask.dims(),
        });
    }
    let grad = sobel_gradient(volume)?;
    let hess = deriche_hessian(volume, params.alpha, params.window, params.border)?;
    let n = volume.data().len();
    let mut e = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    let mut status = vec![VoxelStatus::Excluded; n];
    for i in 0..n {
        if mask.data()[i] == 0 {
            continue;
        }
        let g = grad.data()[i];
        let h = hess.data()[i];
        let (ev, singular) = invariant_e(g, h, singular_eps(h));
        e[i] = ev;
        let (a, b) = invariants_f(ev);
        f1[i] = a;
        f2[i] = b;
        status[i] = if singular {
            VoxelStatus::Singular
        } else {
            VoxelStatus::Regular
        };
    }
    Ok(InvariantMap {
        dims: volume.dims(),
        e,
        f1,
        f2,
        status,
    })
}
