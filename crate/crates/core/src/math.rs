//! Small fixed-size linear algebra used by the mesh and calibration paths.
//!
//! Row-vector convention throughout: points transform as `v * M`, matching
//! the screen-projection pipeline (`S = N * WVP`).

/// 3x3 real matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Mat3 { m }
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Mat3 { m: out }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate. Returns `None` when the determinant
    /// magnitude is below 1e-300 (numerically singular).
    pub fn inverse(&self) -> Option<Mat3> {
        let m = &self.m;
        let det = self.det();
        if det.abs() < 1e-300 {
            return None;
        }
        let inv_det = 1.0 / det;
        let mut out = [[0.0; 3]; 3];
        out[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
        out[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
        out[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
        out[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
        out[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
        out[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
        out[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
        out[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
        out[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
        Some(Mat3 { m: out })
    }

    /// Inverse validated by `max |M * M^-1 - I| < 1e-9`.
    pub fn inverse_checked(&self) -> Option<Mat3> {
        let inv = self.inverse()?;
        let product = self.mul(&inv);
        let mut err = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                err = err.max((product.m[i][j] - expected).abs());
            }
        }
        if err < 1e-9 {
            Some(inv)
        } else {
            None
        }
    }

    /// Apply to a 2D point in homogeneous form; returns the pre-divide
    /// `(x, y, w)` so callers can detect a vanishing denominator.
    pub fn apply_homogeneous(&self, p: [f64; 2]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2],
        ]
    }

    pub fn inf_norm(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// 4x4 real matrix, row-major, composed with row vectors (`v * M`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4 {
    pub m: [[f64; 4]; 4],
}

impl Mat4 {
    pub const IDENTITY: Mat4 = Mat4 {
        m: [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
    };

    pub fn from_rows(m: [[f64; 4]; 4]) -> Self {
        Mat4 { m }
    }

    pub fn mul(&self, other: &Mat4) -> Mat4 {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Mat4 { m: out }
    }

    /// `v * M` for a homogeneous row vector.
    pub fn transform_row(&self, v: [f64; 4]) -> [f64; 4] {
        let m = &self.m;
        let mut out = [0.0; 4];
        for (j, cell) in out.iter_mut().enumerate() {
            *cell = v[0] * m[0][j] + v[1] * m[1][j] + v[2] * m[2][j] + v[3] * m[3][j];
        }
        out
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Option<Mat4> {
        let mut a = self.m;
        let mut inv = Mat4::IDENTITY.m;
        for col in 0..4 {
            let mut pivot = col;
            for row in col + 1..4 {
                if a[row][col].abs() > a[pivot][col].abs() {
                    pivot = row;
                }
            }
            if a[pivot][col].abs() < 1e-300 {
                return None;
            }
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let scale = 1.0 / a[col][col];
            for j in 0..4 {
                a[col][j] *= scale;
                inv[col][j] *= scale;
            }
            for row in 0..4 {
                if row == col {
                    continue;
                }
                let factor = a[row][col];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..4 {
                    a[row][j] -= factor * a[col][j];
                    inv[row][j] -= factor * inv[col][j];
                }
            }
        }
        Some(Mat4 { m: inv })
    }

    /// Inverse validated by `max |M * M^-1 - I| < 1e-9`.
    pub fn inverse_checked(&self) -> Option<Mat4> {
        let inv = self.inverse()?;
        let product = self.mul(&inv);
        let mut err = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                err = err.max((product.m[i][j] - expected).abs());
            }
        }
        if err < 1e-9 {
            Some(inv)
        } else {
            None
        }
    }
}

/// Solve a 3x3 linear system `A x = b` by Gaussian elimination.
#[allow(clippy::needless_range_loop)] // column-offset elimination
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut aug = [[0.0; 4]; 3];
    for i in 0..3 {
        aug[i][..3].copy_from_slice(&a[i]);
        aug[i][3] = b[i];
    }
    for col in 0..3 {
        let mut pivot = col;
        for row in col + 1..3 {
            if aug[row][col].abs() > aug[pivot][col].abs() {
                pivot = row;
            }
        }
        if aug[pivot][col].abs() < 1e-300 {
            return None;
        }
        aug.swap(col, pivot);
        let scale = 1.0 / aug[col][col];
        for j in col..4 {
            aug[col][j] *= scale;
        }
        for row in 0..3 {
            if row == col {
                continue;
            }
            let factor = aug[row][col];
            for j in col..4 {
                aug[row][j] -= factor * aug[col][j];
            }
        }
    }
    Some([aug[0][3], aug[1][3], aug[2][3]])
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted ascending by eigenvalue;
/// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
#[allow(clippy::needless_range_loop)] // paired row/column updates
pub fn jacobi_eigen_sym<const N: usize>(mut a: [[f64; N]; N]) -> ([f64; N], [[f64; N]; N]) {
    // v accumulates rotations; rows of the final transpose are eigenvectors.
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..N {
            for q in p + 1..N {
                off = off.max(a[p][q].abs());
            }
        }
        if off < 1e-15 * scale {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: [usize; N] = [0; N];
    for (i, slot) in order.iter_mut().enumerate() {
        *slot = i;
    }
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());

    let mut values = [0.0; N];
    let mut vectors = [[0.0; N]; N];
    for (rank, &idx) in order.iter().enumerate() {
        values[rank] = a[idx][idx];
        for k in 0..N {
            vectors[rank][k] = v[k][idx];
        }
    }
    (values, vectors)
}

/// Error function, accurate to roughly machine precision over the full range.
///
/// Uses the positive-term confluent series
/// `erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_k (2x^2)^k / (1*3*...*(2k+1))`,
/// which is cancellation-free; |x| >= 6 saturates to +-1 (error < 1e-17).
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x >= 6.0 {
        return 1.0;
    }
    let x2 = x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 0u32;
    loop {
        term *= 2.0 * x2 / (2.0 * f64::from(k) + 3.0);
        sum += term;
        k += 1;
        if term < 1e-17 * sum || k > 300 {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * x * (-x2).exp() * sum
}
