use super::sparse::{dot, norm2, SparseSym};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual ‖b − Ax‖ / ‖b‖.
    pub residual: f64,
}

fn project_out(v: &mut [f64], z: Option<&[f64]>) {
    if let Some(z) = z {
        let c = dot(v, z);
        for (vi, zi) in v.iter_mut().zip(z) {
            *vi -= c * zi;
        }
    }
}

/// Diagonally preconditioned conjugate gradients. With `kernel` set (any
/// nonzero vector spanning the null space of a semidefinite `a`), the right
/// side and every iterate are kept orthogonal to it.
pub fn cg_solve(
    a: &SparseSym,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    kernel: Option<&[f64]>,
) -> Result<CgResult> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let z_unit: Option<Vec<f64>> = kernel.map(|z| {
        let s = norm2(z);
        z.iter().map(|v| v / s).collect()
    });
    let z = z_unit.as_deref();
    let mut r = b.to_vec();
    project_out(&mut r, z);
    let bnorm = norm2(&r);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgResult { x, iterations: 0, residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precond = |r: &[f64]| {
        let mut s: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        project_out(&mut s, z);
        s
    };
    let mut s = precond(&r);
    let mut d = s.clone();
    let mut rs = dot(&r, &s);
    for it in 1..=max_iter {
        let ad = a.matvec(&d);
        let curv = dot(&d, &ad);
        if !(curv > 0.0) {
            return Err(Error::NotSpd { pivot: it, value: curv });
        }
        let step = rs / curv;
        for i in 0..n {
            x[i] += step * d[i];
            r[i] -= step * ad[i];
        }
        project_out(&mut r, z);
        let res = norm2(&r) / bnorm;
        if res <= tol {
            project_out(&mut x, z);
            return Ok(CgResult { x, iterations: it, residual: res });
        }
        s = precond(&r);
        let rs_new = dot(&r, &s);
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            d[i] = s[i] + beta * d[i];
        }
    }
    let mut res_vec = a.matvec(&x);
    for (ri, bi) in res_vec.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    project_out(&mut res_vec, z);
    Err(Error::NonConvergence { iterations: max_iter, residual: norm2(&res_vec) / bnorm })
}
