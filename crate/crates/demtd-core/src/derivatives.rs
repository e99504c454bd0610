//! First- and second-order derivative fields of a volume.
//!
//! The gradient uses the separable 3D Sobel operator; second derivatives use
//! smoothing/derivative kernels sampled from the Deriche impulse responses,
//! truncated to a fixed odd window and renormalized so every operator is
//! exact on polynomials of total degree <= 2 at interior voxels. A direct
//! central-difference oracle (its own stencils, no shared filter machinery)
//! is provided for testing.
//!
//! Borders use reflect-101 mirroring (`index -k` maps to `k`), limited to
//! `border` voxels outside the array and clamped beyond. Derivative-kernel
//! passes run before smoothing passes and subtract the center sample, so a
//! constant volume yields exactly zero output.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Sym3;
use crate::volume::{Dims, Volume3D};

/// Per-voxel gradient vector (d/dx, d/dy, d/dz) in intensity per voxel.
#[derive(Clone, Debug)]
pub struct GradientField {
    dims: Dims,
    data: Vec<[f64; 3]>,
}

impl GradientField {
    pub fn new(dims: Dims, data: Vec<[f64; 3]>) -> GradientField {
        assert_eq!(data.len(), dims.0 * dims.1 * dims.2);
        GradientField { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        self.data[x + self.dims.0 * (y + self.dims.1 * z)]
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }
}

/// Per-voxel symmetric Hessian, six unique components.
#[derive(Clone, Debug)]
pub struct HessianField {
    dims: Dims,
    data: Vec<Sym3>,
}

impl HessianField {
    pub fn new(dims: Dims, data: Vec<Sym3>) -> HessianField {
        assert_eq!(data.len(), dims.0 * dims.1 * dims.2);
        HessianField { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> Sym3 {
        self.data[x + self.dims.0 * (y + self.dims.1 * z)]
    }

    pub fn data(&self) -> &[Sym3] {
        &self.data
    }
}

/// Reflect-101 fold of an arbitrary index into [0, n).
#[inline]
fn mirror(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut k = i.rem_euclid(period);
    if k >= n as isize {
        k = period - k;
    }
    k as usize
}

/// Mirror up to `border` voxels outside the array; clamp further out.
#[inline]
fn border_index(i: isize, n: usize, border: usize) -> usize {
    let lo = -(border as isize);
    let hi = n as isize - 1 + border as isize;
    mirror(i.clamp(lo, hi), n)
}

/// One separable correlation pass along `axis`. When `center_sub` is set the
/// center sample is subtracted from every tap, which makes zero-DC kernels
/// return exact zeros on constant input.
fn axis_pass(
    input: &[f64],
    dims: Dims,
    axis: usize,
    taps: &[f64],
    border: usize,
    center_sub: bool,
    out: &mut [f64],
) {
    let (nx, ny, nz) = dims;
    let half = (taps.len() / 2) as isize;
    let n_axis = [nx, ny, nz][axis];
    let stride = [1, nx, nx * ny][axis];
    out.par_chunks_mut(nx * ny)
        .enumerate()
        .for_each(|(z, slab)| {
            for y in 0..ny {
                for x in 0..nx {
                    let c = [x, y, z][axis];
                    let base = x + nx * (y + ny * z) - c * stride;
                    let center = input[base + c * stride];
                    let mut acc = 0.0;
                    for (j, &w) in taps.iter().enumerate() {
                        let src = border_index(c as isize + j as isize - half, n_axis, border);
                        let v = input[base + src * stride];
                        acc += w * if center_sub { v - center } else { v };
                    }
                    slab[x + nx * y] = acc;
                }
            }
        });
}

/// Separable kernel per axis: taps plus whether it is a derivative
/// (zero-DC, center-subtracted) kernel.
struct AxisKernel<'a> {
    taps: &'a [f64],
    derivative: bool,
}

/// Apply the three per-axis kernels. Derivative passes run first (in axis
/// order), then smoothing passes (in axis order).
fn separable3(input: &[f64], dims: Dims, kernels: [AxisKernel<'_>; 3], border: usize) -> Vec<f64> {
    let mut cur = input.to_vec();
    let mut tmp = vec![0.0; input.len()];
    let mut order: Vec<usize> = Vec::with_capacity(3);
    for (a, k) in kernels.iter().enumerate() {
        if k.derivative {
            order.push(a);
        }
    }
    for (a, k) in kernels.iter().enumerate() {
        if !k.derivative {
            order.push(a);
        }
    }
    for &a in &order {
        axis_pass(
            &cur,
            dims,
            a,
            kernels[a].taps,
            border,
            kernels[a].derivative,
            &mut tmp,
        );
        std::mem::swap(&mut cur, &mut tmp);
    }
    cur
}

const SOBEL_SMOOTH: [f64; 3] = [0.25, 0.5, 0.25];
const SOBEL_DERIV: [f64; 3] = [-0.5, 0.0, 0.5];

/// Separable 3D Sobel gradient: derivative [-1, 0, 1] along the axis,
/// smoothing [1, 2, 1] in the transverse axes, normalized by the total
/// weight 32 so a unit-slope ramp yields exactly 1.0 per voxel.
pub fn sobel_gradient(volume: &Volume3D) -> Result<GradientField> {
    let dims = volume.dims();
    if dims.0 < 3 || dims.1 < 3 || dims.2 < 3 {
        return Err(Error::TooSmall { dims, needed: 3 });
    }
    let input: Vec<f64> = volume.data().iter().map(|&v| v as f64).collect();
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(3);
    for axis in 0..3 {
        let kernels = [0, 1, 2].map(|a| AxisKernel {
            taps: if a == axis {
                &SOBEL_DERIV[..]
            } else {
                &SOBEL_SMOOTH[..]
            },
            derivative: a == axis,
        });
        components.push(separable3(&input, dims, kernels, 1));
    }
    let data = (0..input.len())
        .map(|i| [components[0][i], components[1][i], components[2][i]])
        .collect();
    Ok(GradientField::new(dims, data))
}

/// Truncated Deriche kernel triple for one alpha/window pair.
struct DericheKernels {
    smooth: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

/// Sample the Deriche impulse responses on [-w, w] and renormalize:
///
/// * smoothing  (1 + a|t|) e^{-a|t|}, scaled to unit sum;
/// * 1st deriv  t a^2 e^{-a|t|}, scaled so a unit ramp maps to 1;
/// * 2nd deriv  a^2 (a|t| - beta) e^{-a|t|} with beta chosen so the taps
///   sum to zero, scaled so t^2 maps to 2.
fn deriche_kernels(alpha: f64, window: usize) -> DericheKernels {
    let w = (window / 2) as isize;
    let ts: Vec<isize> = (-w..=w).collect();
    let env: Vec<f64> = ts
        .iter()
        .map(|&t| (-alpha * t.abs() as f64).exp())
        .collect();

    let mut smooth: Vec<f64> = ts
        .iter()
        .zip(&env)
        .map(|(&t, &e)| (1.0 + alpha * t.abs() as f64) * e)
        .collect();
    let sum: f64 = smooth.iter().sum();
    smooth.iter_mut().for_each(|v| *v /= sum);

    let mut d1: Vec<f64> = ts
        .iter()
        .zip(&env)
        .map(|(&t, &e)| alpha * alpha * t as f64 * e)
        .collect();
    let ramp: f64 = ts.iter().zip(&d1).map(|(&t, &k)| t as f64 * k).sum();
    d1.iter_mut().for_each(|v| *v /= ramp);

    let env_sum: f64 = env.iter().sum();
    let abs_mom: f64 = ts
        .iter()
        .zip(&env)
        .map(|(&t, &e)| alpha * t.abs() as f64 * e)
        .sum();
    let beta = abs_mom / env_sum;
    let mut d2: Vec<f64> = ts
        .iter()
        .zip(&env)
        .map(|(&t, &e)| alpha * alpha * (alpha * t.abs() as f64 - beta) * e)
        .collect();
    let quad: f64 = ts.iter().zip(&d2).map(|(&t, &k)| (t * t) as f64 * k).sum();
    d2.iter_mut().for_each(|v| *v *= 2.0 / quad);

    DericheKernels { smooth, d1, d2 }
}

/// Six second-derivative components via separable Deriche-style kernels.
/// Defaults are alpha = 1, window = 7, border = 3.
pub fn deriche_hessian(
    volume: &Volume3D,
    alpha: f64,
    window: usize,
    border: usize,
) -> Result<HessianField> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::BadParam(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::BadParam(format!(
            "window must be an odd integer >= 3, got {window}"
        )));
    }
    let dims = volume.dims();
    for n in [dims.0, dims.1, dims.2] {
        if n + 2 * border < window {
            return Err(Error::TooSmall {
                dims,
                needed: window.saturating_sub(2 * border),
            });
        }
    }
    let kernels = deriche_kernels(alpha, window);
    let input: Vec<f64> = volume.data().iter().map(|&v| v as f64).collect();

    // (axis pair) -> component order xx, xy, xz, yy, yz, zz
    let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let comps: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(a, b)| {
            let ks = [0, 1, 2].map(|axis| {
                if a == b && axis == a {
                    AxisKernel {
                        taps: &kernels.d2[..],
                        derivative: true,
                    }
                } else if axis == a || axis == b {
                    AxisKernel {
                        taps: &kernels.d1[..],
                        derivative: true,
                    }
                } else {
                    AxisKernel {
                        taps: &kernels.smooth[..],
                        derivative: false,
                    }
                }
            });
            separable3(&input, dims, ks, border)
        })
        .collect();

    let data = (0..input.len())
        .map(|i| Sym3 {
            xx: comps[0][i],
            xy: comps[1][i],
            xz: comps[2][i],
            yy: comps[3][i],
            yz: comps[4][i],
            zz: comps[5][i],
        })
        .collect();
    Ok(HessianField::new(dims, data))
}

pub const DERICHE_ALPHA_DEFAULT: f64 = 1.0;
pub const DERICHE_WINDOW_DEFAULT: usize = 7;
pub const DERICHE_BORDER_DEFAULT: usize = 3;

pub fn deriche_hessian_default(volume: &Volume3D) -> Result<HessianField> {
    deriche_hessian(
        volume,
        DERICHE_ALPHA_DEFAULT,
        DERICHE_WINDOW_DEFAULT,
        DERICHE_BORDER_DEFAULT,
    )
}

/// Independent brute-force oracle: central differences for the gradient,
/// 3-point and cross 4-point stencils for the Hessian, reflect-101 borders.
/// Deliberately shares no code with the separable filter path.
pub fn central_diff_oracle(volume: &Volume3D) -> Result<(GradientField, HessianField)> {
    let dims = volume.dims();
    if dims.0 < 3 || dims.1 < 3 || dims.2 < 3 {
        return Err(Error::TooSmall { dims, needed: 3 });
    }
    let (nx, ny, nz) = dims;
    let reflect = |i: isize, n: usize| -> usize {
        if i < 0 {
            (-i) as usize
        } else if i as usize >= n {
            2 * (n - 1) - i as usize
        } else {
            i as usize
        }
    };
    let sample = |x: isize, y: isize, z: isize| -> f64 {
        let xi = reflect(x, nx);
        let yi = reflect(y, ny);
        let zi = reflect(z, nz);
        volume.data()[xi + nx * (yi + ny * zi)] as f64
    };
    let n = nx * ny * nz;
    let mut grad = vec![[0.0; 3]; n];
    let mut hess = vec![Sym3::ZERO; n];
    for z in 0..nz as isize {
        for y in 0..ny as isize {
            for x in 0..nx as isize {
                let i = x as usize + nx * (y as usize + ny * z as usize);
                let c = sample(x, y, z);
                let gx = (sample(x + 1, y, z) - sample(x - 1, y, z)) / 2.0;
                let gy = (sample(x, y + 1, z) - sample(x, y - 1, z)) / 2.0;
                let gz = (sample(x, y, z + 1) - sample(x, y, z - 1)) / 2.0;
                grad[i] = [gx, gy, gz];
                hess[i] = Sym3 {
                    xx: sample(x + 1, y, z) - 2.0 * c + sample(x - 1, y, z),
                    yy: sample(x, y + 1, z) - 2.0 * c + sample(x, y - 1, z),
                    zz: sample(x, y, z + 1) - 2.0 * c + sample(x, y, z - 1),
                    xy: (sample(x + 1, y + 1, z) + sample(x - 1, y - 1, z)
                        - sample(x + 1, y - 1, z)
                        - sample(x - 1, y + 1, z))
                        / 4.0,
                    xz: (sample(x + 1, y, z + 1) + sample(x - 1, y, z - 1)
                        - sample(x + 1, y, z - 1)
                        - sample(x - 1, y, z + 1))
                        / 4.0,
                    yz: (sample(x, y + 1, z + 1) + sample(x, y - 1, z - 1)
                        - sample(x, y + 1, z - 1)
                        - sample(x, y - 1, z + 1))
                        / 4.0,
                };
            }
        }
    }
    Ok((
        GradientField::new(dims, grad),
        HessianField::new(dims, hess),
    ))
}
