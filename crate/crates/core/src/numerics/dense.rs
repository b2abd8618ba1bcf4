use crate::error::{Error, Result};

pub const DEFAULT_DENSE_CAP: usize = 4000;

/// Dense symmetric matrix in full row-major storage; `set` writes both
/// triangles so symmetry is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSym {
    n: usize,
    data: Vec<f64>,
}

impl DenseSym {
    pub fn zeros(n: usize) -> Self {
        DenseSym { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n);
        for i in 0..n {
            a.set(i, i, 1.0);
        }
        a
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut a = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            a.set(i, i, v);
        }
        a
    }

    /// Builds from rows; the upper triangle is used.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut a = Self::zeros(n);
        for i in 0..n {
            assert_eq!(rows[i].len(), n);
            for j in i..n {
                a.set(i, j, rows[i][j]);
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Qᵀ·A·Q for Q given by its columns.
    pub fn congruence(&self, q: &[Vec<f64>]) -> DenseSym {
        let m = q.len();
        let aq: Vec<Vec<f64>> = q.iter().map(|c| self.matvec(c)).collect();
        let mut out = DenseSym::zeros(m);
        for i in 0..m {
            for j in i..m {
                out.set(i, j, q[i].iter().zip(&aq[j]).map(|(a, b)| a * b).sum());
            }
        }
        out
    }
}

/// Eigenvalues in ascending order with matching eigenvectors (`vectors[k]`).
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn jacobi_sym_eigen(a: &DenseSym) -> Result<SymEigen> {
    jacobi_sym_eigen_capped(a, DEFAULT_DENSE_CAP)
}

/// Cyclic Jacobi rotations until the off-diagonal part vanishes to working precision.
pub fn jacobi_sym_eigen_capped(a: &DenseSym, cap: usize) -> Result<SymEigen> {
    let n = a.dim();
    if n > cap {
        return Err(Error::Size { n, cap });
    }
    let mut m = a.data.clone();
    // rows of vt are the eigenvectors
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let frob2: f64 = m.iter().map(|v| v * v).sum();
    let mut converged = n <= 1;
    for sweep in 0..100 {
        let off2: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * m[i * n + j] * m[i * n + j])
            .sum();
        if off2 <= (f64::EPSILON * f64::EPSILON * 1e-2) * frob2 || off2 == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m[p * n + p], m[q * n + q]);
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // rows p and q (contiguous), then mirror into the columns
                let (lo, hi) = m.split_at_mut(q * n);
                let row_p = &mut lo[p * n..(p + 1) * n];
                let row_q = &mut hi[..n];
                for r in 0..n {
                    let (x, y) = (row_p[r], row_q[r]);
                    row_p[r] = c * x - s * y;
                    row_q[r] = s * x + c * y;
                }
                for r in 0..n {
                    if r != p && r != q {
                        m[r * n + p] = m[p * n + r];
                        m[r * n + q] = m[q * n + r];
                    }
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                let (lo, hi) = vt.split_at_mut(q * n);
                let vp = &mut lo[p * n..(p + 1) * n];
                let vq = &mut hi[..n];
                for r in 0..n {
                    let (x, y) = (vp[r], vq[r]);
                    vp[r] = c * x - s * y;
                    vq[r] = s * x + c * y;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations: 100, residual: f64::NAN });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    Ok(SymEigen {
        values: order.iter().map(|&i| m[i * n + i]).collect(),
        vectors: order.iter().map(|&i| vt[i * n..(i + 1) * n].to_vec()).collect(),
    })
}

/// Dense lower Cholesky factor, row-major.
#[derive(Clone, Debug)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

pub fn dense_cholesky(a: &DenseSym) -> Result<DenseCholesky> {
    let n = a.dim();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotSpd { pivot: i, value: s });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(DenseCholesky { n, l })
}

impl DenseCholesky {
    /// L⁻¹·b.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// L⁻ᵀ·y.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let xi = x[i] / self.l[i * n + i];
            x[i] = xi;
            for k in 0..i {
                x[k] -= self.l[i * n + k] * xi;
            }
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }
}

/// A·v = λ·B·v with B symmetric positive definite. Eigenvectors are
/// B-orthonormal, eigenvalues ascending.
pub fn generalized_sym_eigen(a: &DenseSym, b: &DenseSym) -> Result<SymEigen> {
    let n = a.dim();
    assert_eq!(b.dim(), n);
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::Size { n, cap: DEFAULT_DENSE_CAP });
    }
    let chol = dense_cholesky(b)?;
    // W = L⁻¹A column by column (A symmetric: column j = row j), then C = L⁻¹Wᵀ
    let w: Vec<Vec<f64>> = (0..n).map(|j| chol.solve_lower(a.row(j))).collect();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| chol.solve_lower(&(0..n).map(|k| w[k][j]).collect::<Vec<f64>>()))
        .collect();
    let mut c = DenseSym::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            c.set(i, j, 0.5 * (cols[j][i] + cols[i][j]));
        }
    }
    let eig = jacobi_sym_eigen(&c)?;
    Ok(SymEigen {
        values: eig.values,
        vectors: eig.vectors.iter().map(|z| chol.solve_upper(z)).collect(),
    })
}
