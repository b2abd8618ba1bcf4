use std::fmt::Write as _;

/// Symmetric sparse matrix storing the upper triangle (row ≤ col) in
/// compressed rows with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

/// Accumulates (i, j, v) contributions; duplicates are summed in insertion
/// order, so the assembled values do not depend on hashing or threads.
#[derive(Clone, Debug)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        TripletBuilder { n, entries: Vec::with_capacity(cap) }
    }

    /// Adds `v` at (i, j) of the symmetric matrix; (i, j) and (j, i) are the same slot.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n, "triplet ({i}, {j}) outside dimension {}", self.n);
        self.entries.push((i.min(j), i.max(j), v));
    }

    pub fn build(mut self) -> SparseSym {
        // stable: equal keys keep insertion order
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col = Vec::with_capacity(self.entries.len());
        let mut val: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *val.last_mut().unwrap() += v;
            } else {
                row_ptr[i + 1] += 1;
                col.push(j);
                val.push(v);
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSym { n: self.n, row_ptr, col, val }
    }
}

impl SparseSym {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_stored(&self) -> usize {
        self.val.len()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut b = TripletBuilder::new(d.len());
        for (i, &v) in d.iter().enumerate() {
            b.add(i, i, v);
        }
        b.build()
    }

    /// Stored upper-triangle entries of row `i` as (column, value).
    pub fn upper_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    /// Every stored entry (i ≤ j).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.upper_row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(k) => self.val[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for (j, v) in self.upper_row(i) {
                acc += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
            y[i] += acc;
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (maximum absolute row sum of the full matrix).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        for (i, j, v) in self.entries() {
            rows[i] += v.abs();
            if i != j {
                rows[j] += v.abs();
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// `self + alpha·other`.
    pub fn add_scaled(&self, other: &SparseSym, alpha: f64) -> SparseSym {
        assert_eq!(self.n, other.n);
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz_stored() + other.nnz_stored());
        for (i, j, v) in self.entries() {
            b.add(i, j, v);
        }
        for (i, j, v) in other.entries() {
            b.add(i, j, alpha * v);
        }
        b.build()
    }

    pub fn scaled(&self, alpha: f64) -> SparseSym {
        SparseSym { val: self.val.iter().map(|v| alpha * v).collect(), ..self.clone() }
    }

    /// Principal submatrix on `idx` (new index k ↔ old index idx[k]).
    pub fn submatrix(&self, idx: &[usize]) -> SparseSym {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            map[i] = k;
        }
        let mut b = TripletBuilder::new(idx.len());
        for (i, j, v) in self.entries() {
            if map[i] != usize::MAX && map[j] != usize::MAX {
                b.add(map[i], map[j], v);
            }
        }
        b.build()
    }

    /// Full (both triangles) adjacency lists, column-sorted.
    pub fn full_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.n];
        for (i, j, v) in self.entries() {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        for r in &mut rows {
            r.sort_by_key(|&(j, _)| j);
        }
        rows
    }

    /// Coordinate text, one "i j value" line per stored entry (0-based).
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for (i, j, v) in self.entries() {
            writeln!(s, "{i} {j} {v:.16e}").unwrap();
        }
        s
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum_and_symmetry() {
        let mut b = TripletBuilder::new(3);
        b.add(0, 1, 1.0);
        b.add(1, 0, 2.0);
        b.add(2, 2, 5.0);
        b.add(0, 0, 1.0);
        let a = b.build();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.get(1, 2), 0.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![4.0, 3.0, 5.0]);
        assert_eq!(a.nnz_stored(), 3);
        assert_eq!(a.norm_inf(), 5.0);
        assert_eq!(a.to_coordinate_text().lines().count(), 3);
    }

    #[test]
    fn submatrix_and_scaling() {
        let mut b = TripletBuilder::new(3);
        for i in 0..3 {
            b.add(i, i, (i + 1) as f64);
        }
        b.add(0, 2, -1.0);
        let a = b.build();
        let s = a.submatrix(&[0, 2]);
        assert_eq!(s.get(0, 1), -1.0);
        assert_eq!(s.get(1, 1), 3.0);
        let c = a.add_scaled(&a, 1.0);
        assert_eq!(c, a.scaled(2.0));
    }
}
