//! Double-double arithmetic (about 32 significant digits) and the few
//! kernels that need it: a sparse symmetric matrix, envelope Cholesky and
//! dense Cholesky.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact sum of two doubles.
    #[inline]
    pub fn sum(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::new(self.hi.sqrt());
        }
        let x = self.hi.sqrt();
        let r = self - Dd::prod(x, x);
        let (hi, lo) = quick_two_sum(x, r.hi / (2.0 * x));
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    #[inline]
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

pub fn dd_vec(x: &[f64]) -> Vec<Dd> {
    x.iter().map(|&v| Dd::new(v)).collect()
}

pub fn f64_vec(x: &[Dd]) -> Vec<f64> {
    x.iter().map(|v| v.to_f64()).collect()
}

pub fn dd_dot(a: &[Dd], b: &[Dd]) -> Dd {
    let mut s = Dd::ZERO;
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

/// Symmetric sparse matrix with full rows sorted by column.
#[derive(Clone, Debug)]
pub struct DdSparse {
    n: usize,
    rows: Vec<Vec<(usize, Dd)>>,
}

impl DdSparse {
    /// Builds from upper or lower triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, Dd)>) -> DdSparse {
        for t in trip.iter_mut() {
            if t.0 > t.1 {
                std::mem::swap(&mut t.0, &mut t.1);
            }
        }
        trip.sort_by_key(|t| (t.0, t.1));
        let mut rows: Vec<Vec<(usize, Dd)>> = vec![Vec::new(); n];
        let mut k = 0;
        while k < trip.len() {
            let (i, j, mut v) = trip[k];
            k += 1;
            while k < trip.len() && trip[k].0 == i && trip[k].1 == j {
                v += trip[k].2;
                k += 1;
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        for r in rows.iter_mut() {
            r.sort_by_key(|e| e.0);
        }
        DdSparse { n, rows }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, Dd)] {
        &self.rows[i]
    }

    pub fn matvec(&self, x: &[Dd]) -> Vec<Dd> {
        self.rows
            .iter()
            .map(|r| {
                let mut s = Dd::ZERO;
                for &(j, v) in r {
                    s += v * x[j];
                }
                s
            })
            .collect()
    }

    pub fn submatrix(&self, idx: &[usize]) -> DdSparse {
        let mut map = vec![usize::MAX; self.n];
        for (k, &v) in idx.iter().enumerate() {
            map[v] = k;
        }
        let rows = idx
            .iter()
            .map(|&v| self.rows[v].iter().filter(|e| map[e.0] != usize::MAX).map(|&(j, a)| (map[j], a)).collect())
            .collect();
        DdSparse { n: idx.len(), rows }
    }

    /// Rounded copy of the sparsity pattern and values.
    pub fn to_f64(&self) -> super::SparseSym {
        let mut b = super::TripletBuilder::new(self.n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                if j >= i {
                    b.add(i, j, v.to_f64());
                }
            }
        }
        b.build()
    }
}

/// Envelope Cholesky factor P·A·Pᵀ = L·Lᵀ in double-double.
#[derive(Clone, Debug)]
pub struct DdCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<Dd>,
}

impl DdCholesky {
    pub fn factor(a: &DdSparse, perm: Vec<usize>) -> Result<DdCholesky> {
        let n = a.dim();
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old, r) in a.rows.iter().enumerate() {
            let i = iperm[old];
            for &(c, _) in r {
                first[i] = first[i].min(iperm[c]);
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![Dd::ZERO; start[n]];
        for (old, r) in a.rows.iter().enumerate() {
            let i = iperm[old];
            for &(c, v) in r {
                let j = iperm[c];
                if j <= i {
                    vals[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (ri, rj) = (start[i] + lo - fi, start[j] + lo - fj);
                let len = j - lo;
                let mut s = vals[start[i] + j - fi];
                for k in 0..len {
                    s -= vals[ri + k] * vals[rj + k];
                }
                if j < i {
                    vals[start[i] + j - fi] = s / vals[start[j + 1] - 1];
                } else {
                    if !(s.hi > 0.0) || !s.hi.is_finite() {
                        return Err(Error::NotSpd { pivot: perm[i], value: s.hi });
                    }
                    vals[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(DdCholesky { n, perm, first, start, vals })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[Dd]) -> Vec<Dd> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<Dd> = self.perm.iter().map(|&old| b[old]).collect();
        let lead = y.iter().position(|v| v.hi != 0.0).unwrap_or(self.n);
        for i in lead..self.n {
            let off = self.first[i];
            let f = off.max(lead);
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let mut acc = y[i];
            for k in f..i {
                acc -= row[k - off] * y[k];
            }
            y[i] = acc / row[i - off];
        }
        for i in (0..self.n).rev() {
            let off = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let xi = y[i] / row[i - off];
            y[i] = xi;
            if xi.hi != 0.0 {
                for k in off..i {
                    y[k] -= row[k - off] * xi;
                }
            }
        }
        let mut x = vec![Dd::ZERO; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Dense symmetric matrix stored in full, row-major.
#[derive(Clone, Debug)]
pub struct DdDense {
    n: usize,
    a: Vec<Dd>,
}

impl DdDense {
    pub fn zeros(n: usize) -> DdDense {
        DdDense { n, a: vec![Dd::ZERO; n * n] }
    }

    pub fn from_f64(m: &super::DenseSym) -> DdDense {
        let n = m.dim();
        let mut out = DdDense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[i * n + j] = Dd::new(m.get(i, j));
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Dd {
        self.a[i * self.n + j]
    }

    /// Sets (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Dd) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[Dd] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[Dd]) -> Vec<Dd> {
        (0..self.n).map(|i| dd_dot(self.row(i), x)).collect()
    }

    pub fn to_f64(&self) -> super::DenseSym {
        let mut m = super::DenseSym::zeros(self.n);
        for i in 0..self.n {
            for j in i..self.n {
                m.set(i, j, self.get(i, j).to_f64());
            }
        }
        m
    }
}

/// Lower Cholesky factor of a dense matrix, rows stored contiguously.
#[derive(Clone, Debug)]
pub struct DdDenseCholesky {
    n: usize,
    l: Vec<Dd>,
}

impl DdDenseCholesky {
    pub fn factor(a: &DdDense) -> Result<DdDenseCholesky> {
        let n = a.dim();
        let mut l = vec![Dd::ZERO; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a.get(i, j);
                let (ri, rj) = (i * n, j * n);
                for k in 0..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if j < i {
                    l[ri + j] = s / l[rj + j];
                } else {
                    if !(s.hi > 0.0) || !s.hi.is_finite() {
                        return Err(Error::NotSpd { pivot: i, value: s.hi });
                    }
                    l[ri + i] = s.sqrt();
                }
            }
        }
        Ok(DdDenseCholesky { n, l })
    }

    /// Solves L·y = b.
    pub fn solve_lower(&self, b: &[Dd]) -> Vec<Dd> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut s = y[i];
            for (k, lv) in row.iter().enumerate() {
                s -= *lv * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// Solves Lᵀ·x = y.
    pub fn solve_upper(&self, y: &[Dd]) -> Vec<Dd> {
        let n = self.n;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let xi = x[i] / self.l[i * n + i];
            x[i] = xi;
            let row = &self.l[i * n..i * n + i];
            for (k, lv) in row.iter().enumerate() {
                x[k] -= *lv * xi;
            }
        }
        x
    }

    /// L⁻¹·M·L⁻ᵀ, symmetrized and rounded to double.
    pub fn congruence_inverse(&self, m: &DdDense) -> super::DenseSym {
        let n = self.n;
        // W = L⁻¹·M column by column (M symmetric, so columns are rows).
        let w: Vec<Vec<Dd>> = (0..n).map(|j| self.solve_lower(m.row(j))).collect();
        // C = L⁻¹·Wᵀ: column i of C is L⁻¹ applied to row i of W.
        let mut c = super::DenseSym::zeros(n);
        let mut rowi = vec![Dd::ZERO; n];
        let mut cols: Vec<Vec<Dd>> = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..n {
                rowi[j] = w[j][i];
            }
            cols.push(self.solve_lower(&rowi));
        }
        for i in 0..n {
            for j in i..n {
                c.set(i, j, ((cols[j][i] + cols[i][j]).mul_f64(0.5)).to_f64());
            }
        }
        c
    }
}
