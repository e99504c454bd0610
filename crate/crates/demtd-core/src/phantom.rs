//! Analytic phantoms with closed-form derivatives and the affine
//! deformation used to exercise the invariance claims end to end.
//!
//! A phantom is a polynomial (total degree <= 3) plus separable sinusoid
//! terms, evaluated on the voxel lattice with the origin at the volume
//! center. Its gradient and Hessian are available in closed form at any
//! point, which gives the invariance tests an exact reference: the
//! analytic path checks pure algebra, the discrete path runs the actual
//! filters on deformed volumes against a declared discretization budget.

use rayon::prelude::*;
use serde::Serialize;

use crate::derivatives::{deriche_hessian_default, sobel_gradient, GradientField, HessianField};
use crate::error::{Error, Result};
use crate::invariants::{affine_pushforward, invariant_e, singular_eps, AffineMap};
use crate::linalg::{mat_vec, Sym3, Vec3};
use crate::rng::Rng;
use crate::volume::{Dims, Volume3D};

/// One separable sinusoid: `a * prod_axis sin(freq * t + phase)`.
#[derive(Clone, Copy, Debug)]
pub struct SinTerm {
    pub amplitude: f64,
    pub freq: [f64; 3],
    pub phase: [f64; 3],
}

/// Polynomial plus sinusoid field with closed-form derivatives.
#[derive(Clone, Debug, Default)]
pub struct AnalyticField {
    /// (coefficient, [px, py, pz]) monomials, total degree <= 3.
    poly: Vec<(f64, [u8; 3])>,
    sins: Vec<SinTerm>,
}

impl AnalyticField {
    pub fn new(poly: Vec<(f64, [u8; 3])>, sins: Vec<SinTerm>) -> Result<AnalyticField> {
        for &(_, p) in &poly {
            if p[0] + p[1] + p[2] > 3 {
                return Err(Error::BadParam("monomial degree above 3".into()));
            }
        }
        Ok(AnalyticField { poly, sins })
    }

    /// The radial quadratic `x^2 + y^2 + z^2`.
    pub fn radial_quadratic() -> AnalyticField {
        AnalyticField {
            poly: vec![(1.0, [2, 0, 0]), (1.0, [0, 2, 0]), (1.0, [0, 0, 2])],
            sins: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> AnalyticField {
        AnalyticField {
            poly: vec![(c, [0, 0, 0])],
            sins: Vec::new(),
        }
    }

    /// Radial quadratic with `terms` low-frequency sinusoids, the standard
    /// smooth test substrate. Frequencies stay below 0.1 rad/voxel so the
    /// field is well resolved by 7-tap stencils; amplitudes are large
    /// enough that the sinusoids bend the Hessian by tens of percent.
    pub fn smooth_deformable(seed: u64, terms: usize) -> AnalyticField {
        let mut rng = Rng::new(seed);
        let sins = (0..terms)
            .map(|_| SinTerm {
                amplitude: rng.uniform(10.0, 25.0),
                freq: [(); 3].map(|_| rng.uniform(0.03, 0.10)),
                phase: [(); 3].map(|_| rng.uniform(0.0, std::f64::consts::TAU)),
            })
            .collect();
        AnalyticField {
            poly: vec![(1.0, [2, 0, 0]), (1.0, [0, 2, 0]), (1.0, [0, 0, 2])],
            sins,
        }
    }

    pub fn value(&self, p: Vec3) -> f64 {
        let mut v = 0.0;
        for &(c, pw) in &self.poly {
            v += c * p[0].powi(pw[0] as i32) * p[1].powi(pw[1] as i32) * p[2].powi(pw[2] as i32);
        }
        for s in &self.sins {
            v += s.amplitude
                * (s.freq[0] * p[0] + s.phase[0]).sin()
                * (s.freq[1] * p[1] + s.phase[1]).sin()
                * (s.freq[2] * p[2] + s.phase[2]).sin();
        }
        v
    }

    #[allow(clippy::needless_range_loop)]
    pub fn gradient(&self, p: Vec3) -> Vec3 {
        let mut g = [0.0; 3];
        for &(c, pw) in &self.poly {
            for a in 0..3 {
                if pw[a] == 0 {
                    continue;
                }
                let mut term = c * pw[a] as f64;
                for b in 0..3 {
                    let e = if b == a { pw[b] - 1 } else { pw[b] };
                    term *= p[b].powi(e as i32);
                }
                g[a] += term;
            }
        }
        for s in &self.sins {
            let sc: Vec<(f64, f64)> = (0..3)
                .map(|a| {
                    let arg = s.freq[a] * p[a] + s.phase[a];
                    (arg.sin(), arg.cos())
                })
                .collect();
            for a in 0..3 {
                let mut term = s.amplitude * s.freq[a];
                for b in 0..3 {
                    term *= if b == a { sc[b].1 } else { sc[b].0 };
                }
                g[a] += term;
            }
        }
        g
    }

    #[allow(clippy::needless_range_loop)]
    pub fn hessian(&self, p: Vec3) -> Sym3 {
        let mut h = [[0.0; 3]; 3];
        for &(c, pw) in &self.poly {
            for a in 0..3 {
                for b in a..3 {
                    let mut powers = [pw[0] as i32, pw[1] as i32, pw[2] as i32];
                    let mut coeff = c;
                    for &axis in &[a, b] {
                        if powers[axis] == 0 {
                            coeff = 0.0;
                            break;
                        }
                        coeff *= powers[axis] as f64;
                        powers[axis] -= 1;
                    }
                    if coeff != 0.0 {
                        let mut term = coeff;
                        for (axis, &e) in powers.iter().enumerate() {
                            term *= p[axis].powi(e);
                        }
                        h[a][b] += term;
                    }
                }
            }
        }
        for s in &self.sins {
            let sc: Vec<(f64, f64)> = (0..3)
                .map(|a| {
                    let arg = s.freq[a] * p[a] + s.phase[a];
                    (arg.sin(), arg.cos())
                })
                .collect();
            for a in 0..3 {
                for b in a..3 {
                    let mut term = s.amplitude;
                    if a == b {
                        // d^2/da^2 keeps every factor a sine.
                        term *= -s.freq[a] * s.freq[a];
                        for c in 0..3 {
                            term *= sc[c].0;
                        }
                    } else {
                        term *= s.freq[a] * s.freq[b];
                        for c in 0..3 {
                            term *= if c == a || c == b { sc[c].1 } else { sc[c].0 };
                        }
                    }
                    h[a][b] += term;
                }
            }
        }
        Sym3 {
            xx: h[0][0],
            xy: h[0][1],
            xz: h[0][2],
            yy: h[1][1],
            yz: h[1][2],
            zz: h[2][2],
        }
    }
}

/// Centered lattice coordinate of voxel index i along an axis of length n.
#[inline]
fn centered(i: usize, n: usize) -> f64 {
    i as f64 - (n as f64 - 1.0) / 2.0
}

/// Sample a field on the lattice (origin at volume center), returning the
/// volume together with its closed-form gradient and Hessian fields.
pub fn sample_phantom(
    field: &AnalyticField,
    dims: Dims,
) -> Result<(Volume3D, GradientField, HessianField)> {
    let (nx, ny, nz) = dims;
    if nx < 7 || ny < 7 || nz < 7 {
        return Err(Error::TooSmall { dims, needed: 7 });
    }
    let n = nx * ny * nz;
    let mut data = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    let mut hess = Vec::with_capacity(n);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = [centered(x, nx), centered(y, ny), centered(z, nz)];
                data.push(field.value(p) as f32);
                grad.push(field.gradient(p));
                hess.push(field.hessian(p));
            }
        }
    }
    Ok((
        Volume3D::new(dims, (1.0, 1.0, 1.0), data)?,
        GradientField::new(dims, grad),
        HessianField::new(dims, hess),
    ))
}

/// Resampling interpolator for deformations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    Trilinear,
    /// Catmull-Rom cubic per axis; reproduces quadratics exactly.
    Tricubic,
}

/// Mirror-fold an integer tap index into [0, n).
#[inline]
fn fold(i: isize, n: usize) -> usize {
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

fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Continuous-coordinate sample of a scalar lattice with mirror handling.
fn sample_lattice(data: &[f64], dims: Dims, pos: [f64; 3], interp: Interp) -> f64 {
    let (nx, ny, nz) = dims;
    let ns = [nx, ny, nz];
    let strides = [1usize, nx, nx * ny];
    match interp {
        Interp::Trilinear => {
            let mut i0 = [0isize; 3];
            let mut frac = [0.0; 3];
            for a in 0..3 {
                let f = pos[a].floor();
                i0[a] = f as isize;
                frac[a] = pos[a] - f;
            }
            let mut acc = 0.0;
            for dz in 0..2 {
                for dy in 0..2 {
                    for dx in 0..2 {
                        let w = (if dx == 0 { 1.0 - frac[0] } else { frac[0] })
                            * (if dy == 0 { 1.0 - frac[1] } else { frac[1] })
                            * (if dz == 0 { 1.0 - frac[2] } else { frac[2] });
                        if w == 0.0 {
                            continue;
                        }
                        let idx = fold(i0[0] + dx, ns[0]) * strides[0]
                            + fold(i0[1] + dy, ns[1]) * strides[1]
                            + fold(i0[2] + dz, ns[2]) * strides[2];
                        acc += w * data[idx];
                    }
                }
            }
            acc
        }
        Interp::Tricubic => {
            let mut i0 = [0isize; 3];
            let mut w = [[0.0; 4]; 3];
            for a in 0..3 {
                let f = pos[a].floor();
                i0[a] = f as isize;
                w[a] = catmull_rom_weights(pos[a] - f);
            }
            let mut acc = 0.0;
            for dz in 0..4 {
                for dy in 0..4 {
                    for dx in 0..4 {
                        let weight = w[0][dx] * w[1][dy] * w[2][dz];
                        if weight == 0.0 {
                            continue;
                        }
                        let idx = fold(i0[0] + dx as isize - 1, ns[0]) * strides[0]
                            + fold(i0[1] + dy as isize - 1, ns[1]) * strides[1]
                            + fold(i0[2] + dz as isize - 1, ns[2]) * strides[2];
                        acc += weight * data[idx];
                    }
                }
            }
            acc
        }
    }
}

/// Deform a volume by `I2(v) = I1(P v)` with coordinates centered at the
/// volume midpoint. Out-of-domain samples take the mirror-folded value.
pub fn apply_affine_deformation(
    volume: &Volume3D,
    p: &AffineMap,
    interp: Interp,
) -> Result<Volume3D> {
    let dims = volume.dims();
    let (nx, ny, nz) = dims;
    let data: Vec<f64> = volume.data().iter().map(|&v| v as f64).collect();
    let center = [
        (nx as f64 - 1.0) / 2.0,
        (ny as f64 - 1.0) / 2.0,
        (nz as f64 - 1.0) / 2.0,
    ];
    let m = p.matrix();
    let out: Vec<f32> = (0..nx * ny * nz)
        .into_par_iter()
        .map(|i| {
            let x = i % nx;
            let y = (i / nx) % ny;
            let z = i / (nx * ny);
            let c = [
                x as f64 - center[0],
                y as f64 - center[1],
                z as f64 - center[2],
            ];
            let mapped = mat_vec(m, c);
            let pos = [
                mapped[0] + center[0],
                mapped[1] + center[1],
                mapped[2] + center[2],
            ];
            sample_lattice(&data, dims, pos, interp) as f32
        })
        .collect();
    Volume3D::new(dims, volume.spacing(), out)
}

/// Error statistics of one deformation draw.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DrawReport {
    pub det_p: f64,
    pub analytic_rms: f64,
    pub analytic_max: f64,
    pub discrete_rms: f64,
    pub discrete_max: f64,
}

/// Aggregate report over a list of deformations.
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub dims: [usize; 3],
    pub draws: Vec<DrawReport>,
    pub analytic_rms_max: f64,
    pub discrete_rms_max: f64,
}

/// E value from the discrete filter path at every voxel (no mask: the full
/// lattice), zeros where the Hessian is singular.
fn discrete_e_map(volume: &Volume3D) -> Result<Vec<f64>> {
    let grad = sobel_gradient(volume)?;
    let hess = deriche_hessian_default(volume)?;
    Ok(grad
        .data()
        .iter()
        .zip(hess.data())
        .map(|(&g, &h)| invariant_e(g, h, singular_eps(h)).0)
        .collect())
}

/// Compare E maps of a phantom before and after each affine deformation,
/// pulling the deformed map back through P. The analytic path evaluates
/// closed-form derivatives at the mapped points (pure algebra); the
/// discrete path runs Sobel + Deriche on the resampled volume and
/// interpolates the undeformed E map at the mapped points.
pub fn invariance_report(
    field: &AnalyticField,
    dims: Dims,
    maps: &[AffineMap],
    interp: Interp,
) -> Result<InvarianceReport> {
    let (vol1, _, _) = sample_phantom(field, dims)?;
    let e1_disc = discrete_e_map(&vol1)?;
    let (nx, ny, nz) = dims;
    let center = [
        (nx as f64 - 1.0) / 2.0,
        (ny as f64 - 1.0) / 2.0,
        (nz as f64 - 1.0) / 2.0,
    ];
    // Stencil reach (3) plus cubic support and pull-back slack.
    let margin = 6usize;

    let mut draws = Vec::with_capacity(maps.len());
    for p in maps {
        let m = p.matrix();
        let vol2 = apply_affine_deformation(&vol1, p, interp)?;
        let e2_disc = discrete_e_map(&vol2)?;

        let mut an_num = 0.0;
        let mut an_den = 0.0;
        let mut an_max = 0.0f64;
        let mut di_num = 0.0;
        let mut di_den = 0.0;
        let mut di_max = 0.0f64;
        for z in margin..nz - margin {
            for y in margin..ny - margin {
                for x in margin..nx - margin {
                    let c = [
                        x as f64 - center[0],
                        y as f64 - center[1],
                        z as f64 - center[2],
                    ];
                    let mapped = mat_vec(m, c);
                    let pos = [
                        mapped[0] + center[0],
                        mapped[1] + center[1],
                        mapped[2] + center[2],
                    ];
                    // The pulled-back point must stay well inside the
                    // undeformed lattice.
                    let inside = (0..3).all(|a| {
                        pos[a] >= margin as f64
                            && pos[a] <= [nx, ny, nz][a] as f64 - 1.0 - margin as f64
                    });
                    if !inside {
                        continue;
                    }

                    // Analytic path: push-forward algebra on closed-form fields.
                    let g = field.gradient(mapped);
                    let h = field.hessian(mapped);
                    let (g2, h2) = affine_pushforward(g, h, p);
                    let (e_ref, s_ref) = invariant_e(g, h, singular_eps(h));
                    let (e_def, s_def) = invariant_e(g2, h2, singular_eps(h2));
                    if !s_ref && !s_def {
                        let d = e_def - e_ref;
                        an_num += d * d;
                        an_den += e_ref * e_ref;
                        an_max = an_max.max(d.abs() / e_ref.abs().max(1.0));
                    }

                    // Discrete path: filters on the resampled volume vs the
                    // interpolated undeformed map.
                    let e_here = e2_disc[x + nx * (y + ny * z)];
                    let e_pull = sample_lattice(&e1_disc, dims, pos, Interp::Tricubic);
                    let d = e_here - e_pull;
                    di_num += d * d;
                    di_den += e_pull * e_pull;
                    di_max = di_max.max(d.abs() / e_pull.abs().max(1.0));
                }
            }
        }
        draws.push(DrawReport {
            det_p: p.det(),
            analytic_rms: (an_num / an_den.max(1e-300)).sqrt(),
            analytic_max: an_max,
            discrete_rms: (di_num / di_den.max(1e-300)).sqrt(),
            discrete_max: di_max,
        });
    }
    let analytic_rms_max = draws.iter().map(|d| d.analytic_rms).fold(0.0, f64::max);
    let discrete_rms_max = draws.iter().map(|d| d.discrete_rms).fold(0.0, f64::max);
    Ok(InvarianceReport {
        dims: [nx, ny, nz],
        draws,
        analytic_rms_max,
        discrete_rms_max,
    })
}

/// Random rotation from Gram-Schmidt over Gaussian draws, det +1.
pub fn random_rotation(rng: &mut Rng) -> [[f64; 3]; 3] {
    loop {
        let a = [
            rng.next_gaussian(),
            rng.next_gaussian(),
            rng.next_gaussian(),
        ];
        let b = [
            rng.next_gaussian(),
            rng.next_gaussian(),
            rng.next_gaussian(),
        ];
        let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        if na < 1e-6 {
            continue;
        }
        let u = [a[0] / na, a[1] / na, a[2] / na];
        let dot = b[0] * u[0] + b[1] * u[1] + b[2] * u[2];
        let mut v = [b[0] - dot * u[0], b[1] - dot * u[1], b[2] - dot * u[2]];
        let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if nv < 1e-6 {
            continue;
        }
        v = [v[0] / nv, v[1] / nv, v[2] / nv];
        let w = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        // Columns u, v, w form a right-handed orthonormal triple.
        return [[u[0], v[0], w[0]], [u[1], v[1], w[1]], [u[2], v[2], w[2]]];
    }
}

/// Random affine map `R1 diag(s) R2` with singular values drawn uniformly
/// from [smin, smax]; well-conditioned by construction.
pub fn random_conditioned_affine(rng: &mut Rng, smin: f64, smax: f64) -> AffineMap {
    let r1 = random_rotation(rng);
    let r2 = random_rotation(rng);
    let s = [
        rng.uniform(smin, smax),
        rng.uniform(smin, smax),
        rng.uniform(smin, smax),
    ];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for (k, &sk) in s.iter().enumerate() {
                acc += r1[i][k] * sk * r2[k][j];
            }
            m[i][j] = acc;
        }
    }
    AffineMap::new(m).expect("bounded singular values imply nonsingular")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_quadratic_derivatives() {
        let f = AnalyticField::radial_quadratic();
        let p = [1.0, 1.0, 1.0];
        assert_eq!(f.value(p), 3.0);
        assert_eq!(f.gradient(p), [2.0, 2.0, 2.0]);
        let h = f.hessian(p);
        assert_eq!(h, Sym3::diag(2.0, 2.0, 2.0));
        // E at (1,1,1): g H^-1 g^T = 12 / 2 = 6.
        let (e, singular) = invariant_e(f.gradient(p), h, 1e-12);
        assert!(!singular);
        assert!((e - 6.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let f = AnalyticField::constant(4.0);
        let (_, g, h) = sample_phantom(&f, (8, 8, 8)).unwrap();
        assert!(g.data().iter().all(|v| *v == [0.0, 0.0, 0.0]));
        assert!(h.data().iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn triple_product_has_only_off_diagonal_hessian() {
        let f = AnalyticField::new(vec![(1.0, [1, 1, 1])], vec![]).unwrap();
        let p = [2.0, -1.0, 0.5];
        let h = f.hessian(p);
        assert_eq!(h.xx, 0.0);
        assert_eq!(h.yy, 0.0);
        assert_eq!(h.zz, 0.0);
        assert_eq!(h.xy, p[2]);
        assert_eq!(h.xz, p[1]);
        assert_eq!(h.yz, p[0]);
        assert!(AnalyticField::new(vec![(1.0, [2, 1, 1])], vec![]).is_err());
    }

    #[test]
    fn sinusoid_derivatives_match_finite_differences() {
        let f = AnalyticField::smooth_deformable(5, 3);
        // Second differences divide by h^2, so h balances truncation
        // against cancellation in the ~O(40) field values.
        let h = 1e-3;
        for &p in &[[0.3, -1.2, 2.0], [4.0, 4.0, -3.5], [0.0, 0.0, 0.0]] {
            let g = f.gradient(p);
            let hess = f.hessian(p);
            for a in 0..3 {
                let mut pp = p;
                let mut pm = p;
                pp[a] += h;
                pm[a] -= h;
                let fd = (f.value(pp) - f.value(pm)) / (2.0 * h);
                assert!((g[a] - fd).abs() < 1e-6, "grad[{a}] {} vs {fd}", g[a]);
                let fd2 = (f.value(pp) - 2.0 * f.value(p) + f.value(pm)) / (h * h);
                let ha = [hess.xx, hess.yy, hess.zz][a];
                assert!((ha - fd2).abs() < 1e-5, "hess[{a}{a}] {ha} vs {fd2}");
            }
            // Mixed xy by cross stencil.
            let eval = |dx: f64, dy: f64| f.value([p[0] + dx, p[1] + dy, p[2]]);
            let fd_xy = (eval(h, h) + eval(-h, -h) - eval(h, -h) - eval(-h, h)) / (4.0 * h * h);
            assert!((hess.xy - fd_xy).abs() < 1e-5);
        }
    }

    #[test]
    fn sample_phantom_too_small() {
        assert!(matches!(
            sample_phantom(&AnalyticField::radial_quadratic(), (6, 8, 8)),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn identity_deformation_is_exact_at_lattice_points() {
        let f = AnalyticField::smooth_deformable(11, 2);
        let (v, _, _) = sample_phantom(&f, (10, 10, 10)).unwrap();
        let id = AffineMap::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let out = apply_affine_deformation(&v, &id, Interp::Trilinear).unwrap();
        assert_eq!(out.data(), v.data());
        let out = apply_affine_deformation(&v, &id, Interp::Tricubic).unwrap();
        for (a, b) in out.data().iter().zip(v.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn linear_field_deforms_exactly_under_trilinear() {
        // I = x (centered); P = diag(2,1,1) gives I2 = 2x where defined.
        let f = AnalyticField::new(vec![(1.0, [1, 0, 0])], vec![]).unwrap();
        let dims = (17, 9, 9);
        let (v, _, _) = sample_phantom(&f, dims).unwrap();
        let p = AffineMap::new([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let out = apply_affine_deformation(&v, &p, Interp::Trilinear).unwrap();
        // Voxels whose doubled x-coordinate stays in the lattice.
        for x in 4..13usize {
            let want = 2.0 * centered(x, 17);
            let got = out.at(x, 4, 4) as f64;
            assert!((got - want).abs() < 1e-5, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn singular_deformation_rejected() {
        assert!(matches!(
            AffineMap::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]),
            Err(Error::SingularP)
        ));
    }

    #[test]
    fn deformation_round_trip_recovers_volume() {
        let f = AnalyticField::smooth_deformable(21, 2);
        let dims = (16, 16, 16);
        let (v, _, _) = sample_phantom(&f, dims).unwrap();
        let mut rng = Rng::new(77);
        let p = random_conditioned_affine(&mut rng, 0.85, 1.2);
        let fwd = apply_affine_deformation(&v, &p, Interp::Tricubic).unwrap();
        let back = apply_affine_deformation(&fwd, &p.inverse(), Interp::Tricubic).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for z in 5..11 {
            for y in 5..11 {
                for x in 5..11 {
                    let d = back.at(x, y, z) as f64 - v.at(x, y, z) as f64;
                    num += d * d;
                    den += (v.at(x, y, z) as f64).powi(2);
                }
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel < 0.02, "round-trip rel RMS {rel}");
    }

    #[test]
    fn random_rotations_are_orthonormal() {
        let mut rng = Rng::new(3);
        for _ in 0..50 {
            let r = random_rotation(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12);
                }
            }
            assert!((crate::linalg::det3(r) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditioned_affine_dets_in_expected_range() {
        let mut rng = Rng::new(5);
        for _ in 0..100 {
            let p = random_conditioned_affine(&mut rng, 0.8, 1.25);
            let d = p.det().abs();
            assert!(
                d >= 0.8f64.powi(3) - 1e-9 && d <= 1.25f64.powi(3) + 1e-9,
                "det {d}"
            );
        }
    }

    #[test]
    fn identity_map_gives_zero_error_report() {
        let f = AnalyticField::smooth_deformable(31, 2);
        let id = AffineMap::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let rep = invariance_report(&f, (20, 20, 20), &[id], Interp::Tricubic).unwrap();
        assert_eq!(rep.draws.len(), 1);
        assert!(rep.draws[0].analytic_rms < 1e-12);
        // Identity resampling is exact at lattice points, so the only
        // discrete error is tricubic pull-back interpolation of E1 at
        // integer positions, which is exact as well.
        assert!(
            rep.draws[0].discrete_rms < 1e-9,
            "{}",
            rep.draws[0].discrete_rms
        );
    }

    #[test]
    fn invariance_report_small_batch() {
        let f = AnalyticField::smooth_deformable(41, 3);
        let mut rng = Rng::new(17);
        let maps: Vec<AffineMap> = (0..5)
            .map(|_| random_conditioned_affine(&mut rng, 0.8, 1.25))
            .collect();
        let rep = invariance_report(&f, (24, 24, 24), &maps, Interp::Tricubic).unwrap();
        assert!(
            rep.analytic_rms_max < 1e-9,
            "analytic {}",
            rep.analytic_rms_max
        );
        assert!(
            rep.discrete_rms_max < 0.05,
            "discrete {}",
            rep.discrete_rms_max
        );
    }
}
