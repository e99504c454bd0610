//! Small dense linear algebra: 3x3 tensors stored symmetric, row-vector
//! conventions, and a cyclic Jacobi eigensolver for the per-measure
//! direction covariance matrices.

/// Full 3x3 matrix, row major.
pub type Mat3 = [[f64; 3]; 3];

/// 3-vector treated as a row vector throughout (gradients transform as
/// `g' = g * P`).
pub type Vec3 = [f64; 3];

/// Symmetric 3x3 matrix stored as its six unique components.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Sym3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl Sym3 {
    pub const ZERO: Sym3 = Sym3 {
        xx: 0.0,
        xy: 0.0,
        xz: 0.0,
        yy: 0.0,
        yz: 0.0,
        zz: 0.0,
    };

    pub fn identity() -> Sym3 {
        Sym3 {
            xx: 1.0,
            yy: 1.0,
            zz: 1.0,
            ..Sym3::ZERO
        }
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Sym3 {
        Sym3 {
            xx: a,
            yy: b,
            zz: c,
            ..Sym3::ZERO
        }
    }

    /// Outer product g^T g of a row vector with itself.
    pub fn outer(g: Vec3) -> Sym3 {
        Sym3 {
            xx: g[0] * g[0],
            xy: g[0] * g[1],
            xz: g[0] * g[2],
            yy: g[1] * g[1],
            yz: g[1] * g[2],
            zz: g[2] * g[2],
        }
    }

    pub fn to_mat(self) -> Mat3 {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    pub fn scale(self, s: f64) -> Sym3 {
        Sym3 {
            xx: s * self.xx,
            xy: s * self.xy,
            xz: s * self.xz,
            yy: s * self.yy,
            yz: s * self.yz,
            zz: s * self.zz,
        }
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn det(self) -> f64 {
        self.xx * (self.yy * self.zz - self.yz * self.yz)
            - self.xy * (self.xy * self.zz - self.yz * self.xz)
            + self.xz * (self.xy * self.yz - self.yy * self.xz)
    }

    /// Adjugate (transposed cofactor matrix); symmetric for symmetric input,
    /// satisfies `M * adj(M) = det(M) * I` without any division.
    pub fn adjugate(self) -> Sym3 {
        Sym3 {
            xx: self.yy * self.zz - self.yz * self.yz,
            xy: self.xz * self.yz - self.xy * self.zz,
            xz: self.xy * self.yz - self.xz * self.yy,
            yy: self.xx * self.zz - self.xz * self.xz,
            yz: self.xy * self.xz - self.xx * self.yz,
            zz: self.xx * self.yy - self.xy * self.xy,
        }
    }

    /// Quadratic form g * M * g^T.
    pub fn quad_form(self, g: Vec3) -> f64 {
        g[0] * (self.xx * g[0] + self.xy * g[1] + self.xz * g[2])
            + g[1] * (self.xy * g[0] + self.yy * g[1] + self.yz * g[2])
            + g[2] * (self.xz * g[0] + self.yz * g[1] + self.zz * g[2])
    }

    /// Congruence transform P^T * M * P (the push-forward of a symmetric
    /// tensor under an affine map).
    pub fn congruence(self, p: Mat3) -> Sym3 {
        let m = self.to_mat();
        let mp = mat_mul(m, p);
        let pt = transpose(p);
        let full = mat_mul(pt, mp);
        // Result is symmetric in exact arithmetic; store the upper triangle.
        Sym3 {
            xx: full[0][0],
            xy: full[0][1],
            xz: full[0][2],
            yy: full[1][1],
            yz: full[1][2],
            zz: full[2][2],
        }
    }

    pub fn max_abs(self) -> f64 {
        self.xx
            .abs()
            .max(self.xy.abs())
            .max(self.xz.abs())
            .max(self.yy.abs())
            .max(self.yz.abs())
            .max(self.zz.abs())
    }

    /// Mean absolute value of the six unique components.
    pub fn mean_abs(self) -> f64 {
        (self.xx.abs()
            + self.xy.abs()
            + self.xz.abs()
            + self.yy.abs()
            + self.yz.abs()
            + self.zz.abs())
            / 6.0
    }
}

impl std::ops::Add for Sym3 {
    type Output = Sym3;
    fn add(self, o: Sym3) -> Sym3 {
        Sym3 {
            xx: self.xx + o.xx,
            xy: self.xy + o.xy,
            xz: self.xz + o.xz,
            yy: self.yy + o.yy,
            yz: self.yz + o.yz,
            zz: self.zz + o.zz,
        }
    }
}

impl std::ops::Sub for Sym3 {
    type Output = Sym3;
    fn sub(self, o: Sym3) -> Sym3 {
        Sym3 {
            xx: self.xx - o.xx,
            xy: self.xy - o.xy,
            xz: self.xz - o.xz,
            yy: self.yy - o.yy,
            yz: self.yz - o.yz,
            zz: self.zz - o.zz,
        }
    }
}

pub fn mat_mul(a: Mat3, b: Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose(a: Mat3) -> Mat3 {
    [
        [a[0][0], a[1][0], a[2][0]],
        [a[0][1], a[1][1], a[2][1]],
        [a[0][2], a[1][2], a[2][2]],
    ]
}

/// Row vector times matrix: (g * P).
pub fn vec_mat(g: Vec3, p: Mat3) -> Vec3 {
    [
        g[0] * p[0][0] + g[1] * p[1][0] + g[2] * p[2][0],
        g[0] * p[0][1] + g[1] * p[1][1] + g[2] * p[2][1],
        g[0] * p[0][2] + g[1] * p[1][2] + g[2] * p[2][2],
    ]
}

/// Matrix times column vector.
pub fn mat_vec(p: Mat3, v: Vec3) -> Vec3 {
    [
        p[0][0] * v[0] + p[0][1] * v[1] + p[0][2] * v[2],
        p[1][0] * v[0] + p[1][1] * v[1] + p[1][2] * v[2],
        p[2][0] * v[0] + p[2][1] * v[1] + p[2][2] * v[2],
    ]
}

pub fn det3(m: Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of a general 3x3; `None` when |det| <= floor.
pub fn inv3(m: Mat3, det_floor: f64) -> Option<Mat3> {
    let d = det3(m);
    if d.abs() <= det_floor {
        return None;
    }
    let inv_d = 1.0 / d;
    let mut adj = [[0.0; 3]; 3];
    adj[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    adj[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    adj[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    adj[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    adj[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    adj[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    adj[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    adj[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    adj[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] * inv_d;
        }
    }
    Some(out)
}

/// Eigendecomposition of a dense symmetric n x n matrix by cyclic Jacobi
/// rotations with a fixed sweep order, so results are bit-stable.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns of the returned matrix, each with its first component of
/// magnitude > 1e-12 made positive.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigh(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let off = |m: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[i][j] * m[i][j];
            }
        }
        s
    };
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);
    let tol = (1e-15 * scale) * (1e-15 * scale) * n as f64;

    for _sweep in 0..64 {
        if off(&m) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Descending eigenvalues; ties broken by original column for determinism.
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap().then(i.cmp(&j)));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let mut eigenvectors: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for (new_col, &old_col) in order.iter().enumerate() {
        let mut col: Vec<f64> = (0..n).map(|r| v[r][old_col]).collect();
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                for x in col.iter_mut() {
                    *x = -*x;
                }
            }
        }
        for r in 0..n {
            eigenvectors[r][new_col] = col[r];
        }
    }
    (eigenvalues, eigenvectors)
}
