//! Compressed sparse rows, incomplete LU without fill, and Krylov solvers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Row-by-row builder; columns within a row must be pushed in increasing order.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        CsrBuilder {
            n,
            row_ptr,
            col_idx: Vec::with_capacity(nnz_hint),
            values: Vec::with_capacity(nnz_hint),
        }
    }

    pub fn push(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.n);
        debug_assert!(
            self.col_idx.len() == *self.row_ptr.last().unwrap()
                || *self.col_idx.last().unwrap() < col
        );
        self.col_idx.push(col);
        self.values.push(value);
    }

    pub fn end_row(&mut self) {
        self.row_ptr.push(self.col_idx.len());
    }

    pub fn build(self) -> Result<CsrMatrix> {
        if self.row_ptr.len() != self.n + 1 {
            return Err(Error::LinearSolveFailure(format!(
                "built {} rows, expected {}",
                self.row_ptr.len() - 1,
                self.n
            )));
        }
        Ok(CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
        })
    }
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(c, v)| v * x[*c]).sum();
        }
    }
}

/// `L U ≈ A` on the sparsity pattern of `A` (unit lower `L`).
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.col_idx[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::LinearSolveFailure(format!("row {i} has no diagonal")));
            }
        }
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                marker[lu.col_idx[k]] = k;
            }
            for kk in start..end {
                let k = lu.col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.values[diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(Error::LinearSolveFailure(format!("zero pivot in row {k}")));
                }
                let factor = lu.values[kk] / pivot;
                lu.values[kk] = factor;
                for m in diag[k] + 1..lu.row_ptr[k + 1] {
                    let pos = marker[lu.col_idx[m]];
                    if pos != usize::MAX {
                        lu.values[pos] -= factor * lu.values[m];
                    }
                }
            }
            for k in start..end {
                marker[lu.col_idx[k]] = usize::MAX;
            }
            let d = lu.values[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::LinearSolveFailure(format!("zero pivot in row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// `z = U^{-1} L^{-1} r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = r[i];
            for k in lu.row_ptr[i]..self.diag[i] {
                s -= lu.values[k] * z[lu.col_idx[k]];
            }
            z[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.values[k] * z[lu.col_idx[k]];
            }
            z[i] = s / lu.values[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Stop once `||b - A x||_2 <= abs_tol`.
    pub abs_tol: f64,
    pub max_iters: usize,
    pub restart: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            abs_tol: 1e-10,
            max_iters: 5000,
            restart: 60,
        }
    }
}

/// Result of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub residual: f64,
    pub used_fallback: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned BiCGSTAB from the initial guess in `x`.
pub fn bicgstab(a: &CsrMatrix, pre: &Ilu0, b: &[f64], x: &mut [f64], opts: &KrylovOptions) -> Result<KrylovStats> {
    let n = a.n;
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = norm2(&r);
    if res <= opts.abs_tol {
        return Ok(KrylovStats {
            iterations: 0,
            residual: res,
            used_fallback: false,
        });
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=opts.max_iters {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return Err(Error::LinearSolveFailure(format!("BiCGSTAB breakdown (rho) at {it}")));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut p_hat);
        a.matvec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::LinearSolveFailure(format!("BiCGSTAB breakdown (alpha) at {it}")));
        }
        alpha = rho_new / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let s_norm = norm2(&s);
        if s_norm <= opts.abs_tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(KrylovStats {
                iterations: it,
                residual: s_norm,
                used_fallback: false,
            });
        }
        pre.apply(&s, &mut s_hat);
        a.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::LinearSolveFailure(format!("BiCGSTAB breakdown (omega) at {it}")));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r);
        if res <= opts.abs_tol {
            return Ok(KrylovStats {
                iterations: it,
                residual: res,
                used_fallback: false,
            });
        }
        if omega == 0.0 {
            return Err(Error::LinearSolveFailure(format!("BiCGSTAB stagnated at {it}")));
        }
        rho = rho_new;
    }
    Err(Error::LinearSolveFailure(format!(
        "BiCGSTAB reached {} iterations at residual {res:e}",
        opts.max_iters
    )))
}

/// Right-preconditioned restarted GMRES from the initial guess in `x`.
pub fn gmres(a: &CsrMatrix, pre: &Ilu0, b: &[f64], x: &mut [f64], opts: &KrylovOptions) -> Result<KrylovStats> {
    let n = a.n;
    let m = opts.restart.max(1);
    let mut total = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        a.matvec(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm2(&r);
        if beta <= opts.abs_tol {
            return Ok(KrylovStats {
                iterations: total,
                residual: beta,
                used_fallback: true,
            });
        }
        if total >= opts.max_iters {
            return Err(Error::LinearSolveFailure(format!(
                "GMRES reached {total} iterations at residual {beta:e}"
            )));
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            pre.apply(&basis[j], &mut z);
            a.matvec(&z, &mut w);
            for (i, q) in basis.iter().enumerate() {
                h[i][j] = dot(&w, q);
                for k in 0..n {
                    w[k] -= h[i][j] * q[k];
                }
            }
            h[j + 1][j] = norm2(&w);
            for i in 0..j {
                let tmp = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = tmp;
            }
            let d = h[j][j].hypot(h[j + 1][j]);
            if d == 0.0 {
                return Err(Error::LinearSolveFailure("GMRES breakdown".into()));
            }
            cs[j] = h[j][j] / d;
            sn[j] = h[j + 1][j] / d;
            let next = h[j + 1][j];
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            total += 1;
            if g[j + 1].abs() <= opts.abs_tol || total >= opts.max_iters || next == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (k, yk) in y.iter().enumerate() {
            for i in 0..n {
                update[i] += yk * basis[k][i];
            }
        }
        pre.apply(&update, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
    }
}

/// BiCGSTAB, then GMRES from the same starting point if it breaks down.
pub fn solve(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &KrylovOptions) -> Result<KrylovStats> {
    let pre = Ilu0::new(a)?;
    let start = x.to_vec();
    match bicgstab(a, &pre, b, x, opts) {
        Ok(s) => Ok(s),
        Err(_) => {
            x.copy_from_slice(&start);
            gmres(a, &pre, b, x, opts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 2-D Poisson matrix with a convection term, natural ordering
    fn convection_diffusion(m: usize, conv: f64) -> CsrMatrix {
        let n = m * m;
        let mut b = CsrBuilder::new(n, 5 * n);
        for j in 0..m {
            for i in 0..m {
                if j > 0 {
                    b.push((j - 1) * m + i, -1.0);
                }
                if i > 0 {
                    b.push(j * m + i - 1, -1.0 - conv);
                }
                b.push(j * m + i, 4.0);
                if i + 1 < m {
                    b.push(j * m + i + 1, -1.0 + conv);
                }
                if j + 1 < m {
                    b.push((j + 1) * m + i, -1.0);
                }
                b.end_row();
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        let n = 50;
        let mut b = CsrBuilder::new(n, 3 * n);
        for i in 0..n {
            if i > 0 {
                b.push(i - 1, -1.0);
            }
            b.push(i, 2.5);
            if i + 1 < n {
                b.push(i + 1, -1.2);
            }
            b.end_row();
        }
        let a = b.build().unwrap();
        let pre = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut rhs = vec![0.0; n];
        a.matvec(&x, &mut rhs);
        let mut z = vec![0.0; n];
        pre.apply(&rhs, &mut z);
        for i in 0..n {
            assert!((z[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_solvers_agree() {
        let a = convection_diffusion(30, 0.3);
        let n = a.n();
        let exact: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let mut rhs = vec![0.0; n];
        a.matvec(&exact, &mut rhs);
        let opts = KrylovOptions {
            abs_tol: 1e-10,
            ..Default::default()
        };
        let pre = Ilu0::new(&a).unwrap();
        let mut x1 = vec![0.0; n];
        bicgstab(&a, &pre, &rhs, &mut x1, &opts).unwrap();
        let mut x2 = vec![0.0; n];
        let st = gmres(&a, &pre, &rhs, &mut x2, &opts).unwrap();
        assert!(st.used_fallback);
        for i in 0..n {
            assert!((x1[i] - exact[i]).abs() < 1e-8);
            assert!((x2[i] - exact[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn missing_diagonal_is_reported() {
        let mut b = CsrBuilder::new(2, 2);
        b.push(1, 1.0);
        b.end_row();
        b.push(0, 1.0);
        b.end_row();
        let a = b.build().unwrap();
        assert!(Ilu0::new(&a).is_err());
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(0, 0), 0.0);
    }
}
