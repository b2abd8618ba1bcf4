use std::collections::VecDeque;

use super::sparse::SparseSym;
use crate::error::{Error, Result};

/// Reverse Cuthill–McKee ordering: `perm[new] = old`.
pub fn rcm_ordering(a: &SparseSym) -> Vec<usize> {
    let n = a.dim();
    let adj: Vec<Vec<usize>> = a
        .full_rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.into_iter().map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // (eccentricity, a minimum-degree node of the last level)
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            if dist[v] > dist[last] || (dist[v] == dist[last] && (degree[v], v) < (degree[last], last)) {
                last = v;
            }
            for &u in &adj[v] {
                if dist[u] == usize::MAX && !visited[u] {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        (dist[last], last)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                order.push(u);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (profile) Cholesky factor of P·A·Pᵀ = L·Lᵀ.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    /// Row i of L occupies columns first[i]..=i, stored at vals[start[i]..start[i+1]].
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.vals[self.start[i]..self.start[i + 1]]
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        if j < self.first[i] || j > i {
            0.0
        } else {
            self.vals[self.start[i] + j - self.first[i]]
        }
    }

    /// Solves L·y = b in the permuted numbering, in place. Leading zeros of
    /// `b` are skipped.
    fn forward(&self, y: &mut [f64]) {
        let lead = y.iter().position(|&v| v != 0.0).unwrap_or(self.n);
        for i in lead..self.n {
            let f = self.first[i].max(lead);
            let row = self.row(i);
            let off = self.first[i];
            let mut acc = y[i];
            for k in f..i {
                acc -= row[k - off] * y[k];
            }
            y[i] = acc / row[i - off];
        }
    }

    /// Solves Lᵀ·x = y in the permuted numbering, in place.
    fn backward(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let row = self.row(i);
            let off = self.first[i];
            let xi = x[i] / row[i - off];
            x[i] = xi;
            if xi != 0.0 {
                for k in off..i {
                    x[k] -= row[k - off] * xi;
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        self.forward(&mut y);
        self.backward(&mut y);
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Max-norm of L·Lᵀ − P·A·Pᵀ over the envelope (zero outside it by construction).
    pub fn reconstruction_error(&self, a: &SparseSym) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in self.first[i]..=i {
                let lo = self.first[i].max(self.first[j]);
                let s: f64 = (lo..=j).map(|k| self.l(i, k) * self.l(j, k)).sum();
                let aij = a.get(self.perm[i], self.perm[j]);
                worst = worst.max((s - aij).abs());
            }
        }
        worst
    }

    pub fn inverse_permutation(&self) -> &[usize] {
        &self.iperm
    }
}

pub fn chol_factor(a: &SparseSym) -> Result<CholeskyFactor> {
    let perm = rcm_ordering(a);
    chol_factor_with(a, perm)
}

pub fn chol_factor_with(a: &SparseSym, perm: Vec<usize>) -> Result<CholeskyFactor> {
    let n = a.dim();
    let mut iperm = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, j, v) in a.entries() {
        let (pi, pj) = (iperm[i], iperm[j]);
        let (r, c) = (pi.max(pj), pi.min(pj));
        rows[r].push((c, v));
    }
    let first: Vec<usize> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|&(c, _)| c).min().unwrap_or(i).min(i))
        .collect();
    let mut start = vec![0usize; n + 1];
    for i in 0..n {
        start[i + 1] = start[i] + (i - first[i] + 1);
    }
    let mut vals = vec![0.0; start[n]];
    for (i, r) in rows.iter().enumerate() {
        for &(c, v) in r {
            vals[start[i] + c - first[i]] += v;
        }
    }
    for i in 0..n {
        let fi = first[i];
        for j in fi..=i {
            let fj = first[j];
            let lo = fi.max(fj);
            let mut s = vals[start[i] + j - fi];
            {
                let (ri, rj) = (start[i] + lo - fi, start[j] + lo - fj);
                let len = j - lo;
                let (a_i, a_j) = (&vals[ri..ri + len], &vals[rj..rj + len]);
                for k in 0..len {
                    s -= a_i[k] * a_j[k];
                }
            }
            if j < i {
                vals[start[i] + j - fi] = s / vals[start[j + 1] - 1];
            } else {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotSpd { pivot: perm[i], value: s });
                }
                vals[start[i] + i - fi] = s.sqrt();
            }
        }
    }
    Ok(CholeskyFactor { n, perm, iperm, first, start, vals })
}

pub fn chol_solve(f: &CholeskyFactor, b: &[f64]) -> Vec<f64> {
    f.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sparse::{norm2, TripletBuilder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal() {
        let f = chol_factor(&SparseSym::identity(4)).unwrap();
        assert_eq!(f.solve(&[1.0, -2.0, 3.0, 0.5]), vec![1.0, -2.0, 3.0, 0.5]);
        let f = chol_factor(&SparseSym::from_diagonal(&[1.0, 4.0])).unwrap();
        assert_eq!(f.solve(&[1.0, 4.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn random_spd_50() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50;
        let g: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            for j in i..n {
                let mut v: f64 = (0..n).map(|k| g[k][i] * g[k][j]).sum();
                if i == j {
                    v += 1.0;
                }
                b.add(i, j, v);
            }
        }
        let a = b.build();
        let f = chol_factor(&a).unwrap();
        assert!(f.reconstruction_error(&a) <= 1e-12 * a.max_abs());
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = f.solve(&rhs);
        let r: Vec<f64> = a.matvec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) <= 1e-10 * norm2(&rhs));
    }

    #[test]
    fn path_laplacian_with_shift() {
        let n = 200;
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.5);
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
            }
        }
        let a = b.build();
        let f = chol_factor(&a).unwrap();
        // RCM keeps a path tridiagonal
        assert_eq!(f.envelope_size(), 2 * n - 1);
        assert!(f.reconstruction_error(&a) < 1e-13);
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 1, 1.0);
        b.add(0, 1, 2.0);
        assert!(matches!(chol_factor(&b.build()), Err(Error::NotSpd { .. })));
    }
}
