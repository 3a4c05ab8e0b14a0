//! Thin helpers over `nalgebra` dense complex matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(entries))
}

/// Elementwise complex conjugate (no transpose).
pub fn conj(m: &CMat) -> CMat {
    m.map(|x| x.conj())
}

pub fn conj_vec(v: &CVec) -> CVec {
    v.map(|x| x.conj())
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm(v: &CVec) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `a† b` for column vectors.
pub fn dot(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Singular value decomposition with singular values in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: CMat,
}

/// Thin SVD. The `nalgebra` result is checked and replaced by a one-sided Jacobi
/// decomposition when it does not reproduce `m`, which happens for some rank-deficient
/// complex inputs.
pub fn svd(m: &CMat) -> Svd {
    let d = nalgebra::SVD::new(m.clone(), true, true);
    let u = d.u.expect("u requested");
    let v = d.v_t.expect("v_t requested").adjoint();
    let out = Svd { u, s: d.singular_values.iter().copied().collect(), v };
    if out.is_accurate(m) {
        out
    } else {
        log::debug!("falling back to Jacobi SVD for a {}x{} matrix", m.nrows(), m.ncols());
        jacobi_svd(m)
    }
}

impl Svd {
    fn is_accurate(&self, m: &CMat) -> bool {
        let tol = 1e-12 * (1.0 + fro(m)) * (1 + m.nrows().max(m.ncols())) as f64;
        let p = self.s.len();
        let orth = |x: &CMat| fro(&(x.adjoint() * x - eye(x.ncols())));
        let sig = CMat::from_diagonal(&CVec::from_iterator(p, self.s.iter().map(|&x| c(x, 0.0))));
        self.s.iter().all(|x| x.is_finite())
            && fro(&(&self.u * sig * self.v.adjoint() - m)) <= tol
            && orth(&self.u) <= 1e-10
            && orth(&self.v) <= 1e-10
    }
}

/// One-sided (Hestenes) Jacobi SVD with the same thin shapes as [`svd`].
pub fn jacobi_svd(m: &CMat) -> Svd {
    if m.nrows() < m.ncols() {
        let d = jacobi_svd(&m.adjoint());
        return Svd { u: d.v, s: d.s, v: d.u };
    }
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = eye(n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let ph = gamma.conj() / g;
                for x in [&mut a, &mut v] {
                    let mut col = x.column_mut(q);
                    col *= ph;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for x in [&mut a, &mut v] {
                    let xp = x.column(p).into_owned();
                    let xq = x.column(q).into_owned();
                    x.set_column(p, &(&xp * c(cs, 0.0) - &xq * c(sn, 0.0)));
                    x.set_column(q, &(&xp * c(sn, 0.0) + &xq * c(cs, 0.0)));
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let smax = s.first().copied().unwrap_or(0.0);
    let mut u = zeros(rows, n);
    let mut vs = zeros(n, n);
    let mut next_unit = 0;
    for (slot, &k) in order.iter().enumerate() {
        vs.set_column(slot, &v.column(k));
        let mut col = if s[slot] > 1e-14 * smax && s[slot] > 0.0 {
            a.column(k) / c(s[slot], 0.0)
        } else {
            CVec::zeros(rows)
        };
        // Re-orthonormalise; columns without a usable direction are completed from unit vectors.
        loop {
            for prev in 0..slot {
                let pc = u.column(prev).into_owned();
                let proj = pc.dotc(&col);
                col -= pc * proj;
            }
            let nrm = col.norm();
            if nrm > 0.9 / (rows as f64).sqrt() || (nrm > 1e-8 && s[slot] > 1e-14 * smax) || next_unit > 2 * rows {
                col /= c(nrm, 0.0);
                break;
            }
            col = CVec::zeros(rows);
            col[next_unit % rows] = c(1.0, 0.0);
            next_unit += 1;
        }
        u.set_column(slot, &col);
    }
    Svd { u, s, v: vs }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    svd(m).s
}

pub fn sigma_max(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn sigma_min(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Right singular vector of the smallest singular value, with that value.
/// Only meaningful for square matrices.
pub fn min_right_singular(m: &CMat) -> (CVec, f64) {
    let d = svd(m);
    let k = d.s.len() - 1;
    (d.v.column(k).into_owned(), d.s[k])
}

pub fn det(m: &CMat) -> C64 {
    if m.nrows() == 0 {
        return c(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    let inv = m.clone().try_inverse()?;
    if inv.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        Some(inv)
    } else {
        None
    }
}

/// Solves `a x = b`.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    if a.nrows() == 0 {
        return Some(b.clone());
    }
    let x = a.clone().lu().solve(b)?;
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    match m.clone().try_schur(1e-15, 10_000) {
        Some(s) => s.unpack().1.diagonal().iter().copied().collect(),
        None => m.clone().schur().unpack().1.diagonal().iter().copied().collect(),
    }
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and unitary eigenvectors.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let e = nalgebra::SymmetricEigen::new(h);
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

pub fn expm(m: &CMat) -> CMat {
    m.exp()
}

/// Orthonormal basis (columns) of the approximate kernel: right singular vectors
/// whose singular value is at most `tol`.
pub fn kernel(m: &CMat, tol: f64) -> CMat {
    let d = svd(m);
    let n = m.ncols();
    let keep: Vec<usize> = (0..n).filter(|&k| k >= d.s.len() || d.s[k] <= tol).collect();
    let mut out = zeros(n, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &d.v.column(k));
    }
    out
}

/// Selects a submatrix by row and column index lists.
pub fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Block diagonal concatenation.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Assembles a matrix from a rectangular grid of blocks.
pub fn from_blocks(grid: &[Vec<&CMat>]) -> CMat {
    let rows: Vec<usize> = grid.iter().map(|r| r[0].nrows()).collect();
    let cols: Vec<usize> = grid[0].iter().map(|b| b.ncols()).collect();
    let mut out = zeros(rows.iter().sum(), cols.iter().sum());
    let mut r0 = 0;
    for (i, row) in grid.iter().enumerate() {
        let mut c0 = 0;
        for (j, b) in row.iter().enumerate() {
            debug_assert_eq!(b.shape(), (rows[i], cols[j]));
            out.view_mut((r0, c0), b.shape()).copy_from(b);
            c0 += cols[j];
        }
        r0 += rows[i];
    }
    out
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}
