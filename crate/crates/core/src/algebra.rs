//! The indefinite metric `J`, doubled-up structure and related constructions.
//!
//! Two index orders appear for a vector of `n` modes. In [`Layout::Block`] the `n`
//! annihilation components come first, then the `n` creation components, so
//! `J = diag(I, -I)` and `Σ = [[0, I], [I, 0]]`. In [`Layout::Interleaved`] the two
//! components of each mode are adjacent, `J` alternates `(+1, -1)` and `Σ` swaps
//! neighbouring entries.

use crate::error::{Error, Result};
use crate::linalg::{c, conj, eye, fro, hermitian_eigen, svd, zeros, CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    Block,
    Interleaved,
}

/// Index map from interleaved position to block position for `n` modes.
pub fn interleave_order(n: usize) -> Vec<usize> {
    (0..2 * n).map(|k| if k % 2 == 0 { k / 2 } else { n + k / 2 }).collect()
}

/// Index map from block position to interleaved position for `n` modes.
pub fn block_order(n: usize) -> Vec<usize> {
    (0..2 * n).map(|k| if k < n { 2 * k } else { 2 * (k - n) + 1 }).collect()
}

/// Reorders rows and columns of a block-layout matrix into interleaved layout.
pub fn block_to_interleaved(m: &CMat) -> CMat {
    let r = interleave_order(m.nrows() / 2);
    let cidx = interleave_order(m.ncols() / 2);
    crate::linalg::select(m, &r, &cidx)
}

pub fn interleaved_to_block(m: &CMat) -> CMat {
    let r = block_order(m.nrows() / 2);
    let cidx = block_order(m.ncols() / 2);
    crate::linalg::select(m, &r, &cidx)
}

pub fn convert(m: &CMat, from: Layout, to: Layout) -> CMat {
    match (from, to) {
        (Layout::Block, Layout::Interleaved) => block_to_interleaved(m),
        (Layout::Interleaved, Layout::Block) => interleaved_to_block(m),
        _ => m.clone(),
    }
}

/// Diagonal signature matrix of even dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureMatrix {
    pub dim: usize,
    pub layout: Layout,
}

impl SignatureMatrix {
    pub fn new(dim: usize, layout: Layout) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::DimensionMismatch {
                op: "SignatureMatrix::new",
                detail: format!("dimension {dim} is not a positive even number"),
            });
        }
        Ok(Self { dim, layout })
    }

    /// Alternating signature, the default convention for port vectors.
    pub fn interleaved(dim: usize) -> Result<Self> {
        Self::new(dim, Layout::Interleaved)
    }

    pub fn sign(&self, k: usize) -> f64 {
        signature_sign(self.dim, self.layout, k)
    }

    pub fn matrix(&self) -> CMat {
        j_matrix(self.dim, self.layout)
    }
}

fn signature_sign(dim: usize, layout: Layout, k: usize) -> f64 {
    match layout {
        Layout::Block => {
            if k < dim / 2 {
                1.0
            } else {
                -1.0
            }
        }
        Layout::Interleaved => {
            if k % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// `J` of the given dimension (which must be even).
pub fn j_matrix(dim: usize, layout: Layout) -> CMat {
    CMat::from_fn(dim, dim, |i, k| if i == k { c(signature_sign(dim, layout, i), 0.0) } else { c(0.0, 0.0) })
}

/// Multiplies rows by the diagonal of `J`.
pub fn j_left(m: &CMat, layout: Layout) -> CMat {
    let d = m.nrows();
    CMat::from_fn(d, m.ncols(), |i, k| m[(i, k)] * signature_sign(d, layout, i))
}

/// Multiplies columns by the diagonal of `J`.
pub fn j_right(m: &CMat, layout: Layout) -> CMat {
    let d = m.ncols();
    CMat::from_fn(m.nrows(), d, |i, k| m[(i, k)] * signature_sign(d, layout, k))
}

/// The exchange matrix `Σ`.
pub fn sigma_matrix(dim: usize, layout: Layout) -> CMat {
    let n = dim / 2;
    let mut s = zeros(dim, dim);
    for i in 0..n {
        match layout {
            Layout::Block => {
                s[(i, n + i)] = c(1.0, 0.0);
                s[(n + i, i)] = c(1.0, 0.0);
            }
            Layout::Interleaved => {
                s[(2 * i, 2 * i + 1)] = c(1.0, 0.0);
                s[(2 * i + 1, 2 * i)] = c(1.0, 0.0);
            }
        }
    }
    s
}

/// `Σ M^# Σ` with `Σ` sized to the rows and columns of `m`.
pub fn sigma_conj(m: &CMat, layout: Layout) -> CMat {
    sigma_matrix(m.nrows(), layout) * conj(m) * sigma_matrix(m.ncols(), layout)
}

/// Residual of the doubled-up relation `M = Σ M^# Σ`.
pub fn doubled_up_residual(m: &CMat, layout: Layout) -> f64 {
    fro(&(m - sigma_conj(m, layout)))
}

/// Outcome of a structural test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub ok: bool,
    pub residual: f64,
}

impl Residual {
    pub fn new(residual: f64, tol: f64) -> Self {
        Self { ok: residual <= tol, residual }
    }
}

/// Even-dimensional matrix with the doubled-up symmetry and a recorded index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubledUpMatrix {
    #[serde(with = "crate::io::cmat")]
    pub data: CMat,
    pub layout: Layout,
}

impl DoubledUpMatrix {
    pub fn new(data: CMat, layout: Layout) -> Result<Self> {
        if data.nrows() % 2 != 0 || data.ncols() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                op: "DoubledUpMatrix::new",
                detail: format!("shape {}x{} is not even", data.nrows(), data.ncols()),
            });
        }
        Ok(Self { data, layout })
    }

    /// `Δ(M₋, M₊) = [[M₋, M₊], [M₊^#, M₋^#]]` in block layout.
    pub fn from_blocks(minus: &CMat, plus: &CMat) -> Result<Self> {
        if minus.shape() != plus.shape() {
            return Err(Error::DimensionMismatch {
                op: "DoubledUpMatrix::from_blocks",
                detail: format!("blocks {:?} and {:?}", minus.shape(), plus.shape()),
            });
        }
        let pc = conj(plus);
        let mc = conj(minus);
        let data = crate::linalg::from_blocks(&[vec![minus, plus], vec![&pc, &mc]]);
        Ok(Self { data, layout: Layout::Block })
    }

    pub fn identity(dim: usize, layout: Layout) -> Result<Self> {
        Self::new(eye(dim), layout)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn to_layout(&self, layout: Layout) -> Self {
        Self { data: convert(&self.data, self.layout, layout), layout }
    }

    /// The `M₋` block (upper left in block layout).
    pub fn minus(&self) -> CMat {
        let b = convert(&self.data, self.layout, Layout::Block);
        b.view((0, 0), (b.nrows() / 2, b.ncols() / 2)).into_owned()
    }

    /// The `M₊` block (upper right in block layout).
    pub fn plus(&self) -> CMat {
        let b = convert(&self.data, self.layout, Layout::Block);
        b.view((0, b.ncols() / 2), (b.nrows() / 2, b.ncols() / 2)).into_owned()
    }

    fn check_layout(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch {
                op,
                detail: format!("layout {:?} combined with {:?}", self.layout, other.layout),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other, "DoubledUpMatrix::mul")?;
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch {
                op: "DoubledUpMatrix::mul",
                detail: format!("{}x{} times {}x{}", self.rows(), self.cols(), other.rows(), other.cols()),
            });
        }
        Ok(Self { data: &self.data * &other.data, layout: self.layout })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other, "DoubledUpMatrix::add")?;
        if self.data.shape() != other.data.shape() {
            return Err(Error::DimensionMismatch {
                op: "DoubledUpMatrix::add",
                detail: format!("{:?} plus {:?}", self.data.shape(), other.data.shape()),
            });
        }
        Ok(Self { data: &self.data + &other.data, layout: self.layout })
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = crate::linalg::inverse(&self.data).ok_or_else(|| Error::Singular {
            op: "DoubledUpMatrix::inverse",
            detail: "matrix is not invertible".into(),
        })?;
        Ok(Self { data: inv, layout: self.layout })
    }

    pub fn signature(&self) -> CMat {
        j_matrix(self.rows(), self.layout)
    }
}

/// `J M^# J`.
pub fn flat(m: &CMat, j: &SignatureMatrix) -> Result<CMat> {
    if m.nrows() != m.ncols() || m.nrows() != j.dim {
        return Err(Error::DimensionMismatch {
            op: "flat",
            detail: format!("matrix {}x{} with signature of dimension {}", m.nrows(), m.ncols(), j.dim),
        });
    }
    Ok(j_right(&j_left(&conj(m), j.layout), j.layout))
}

/// `J_cols M† J_rows`, the adjoint with respect to the indefinite metric. For a
/// doubled-up `X` this is the combination entering `X^♭ X` in coupling formulas.
pub fn flat_adjoint(m: &CMat, layout: Layout) -> CMat {
    j_right(&j_left(&m.adjoint(), layout), layout)
}

/// J-unitarity test with the alternating signature.
pub fn is_j_unitary(m: &CMat, tol: f64) -> Result<Residual> {
    is_j_unitary_in(m, Layout::Interleaved, tol)
}

/// J-unitarity test: `max(‖MJM† − J‖, ‖M†JM − J‖)` in Frobenius norm.
pub fn is_j_unitary_in(m: &CMat, layout: Layout, tol: f64) -> Result<Residual> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            op: "is_j_unitary",
            detail: format!("expected an even square matrix, got {}x{}", m.nrows(), m.ncols()),
        });
    }
    let j = j_matrix(m.nrows(), layout);
    let r1 = fro(&(m * &j * m.adjoint() - &j));
    let r2 = fro(&(m.adjoint() * &j * m - &j));
    Ok(Residual::new(r1.max(r2), tol))
}

/// Residual `‖MΣ − ΣM^#‖`.
pub fn is_doubled_up(m: &DoubledUpMatrix, tol: f64) -> Residual {
    let sr = sigma_matrix(m.rows(), m.layout);
    let sc = sigma_matrix(m.cols(), m.layout);
    let r = fro(&(&m.data * sc - sr * conj(&m.data)));
    Residual::new(r, tol)
}

/// Random Hermitian doubled-up matrix `Δ(H₋, H₊)` in block layout with entries of size `scale`.
pub fn random_hermitian_doubled_up<R: Rng>(n: usize, scale: f64, rng: &mut R) -> CMat {
    let mut g = |_: usize, _: usize| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
    let a = CMat::from_fn(n, n, &mut g);
    let b = CMat::from_fn(n, n, &mut g);
    let hm = (&a + a.adjoint()) * c(0.5, 0.0);
    let hp = (&b + b.transpose()) * c(0.5, 0.0);
    DoubledUpMatrix::from_blocks(&hm, &hp).expect("square blocks").data
}

/// `exp(iJH)` for a Hermitian doubled-up `H` in block layout.
pub fn j_unitary_from_generator(h: &CMat) -> CMat {
    let x = j_left(h, Layout::Block) * c(0.0, 1.0);
    crate::linalg::expm(&x)
}

/// Random J-unitary doubled-up matrix of size `2n`, block layout, reproducible from `seed`.
pub fn random_j_unitary_doubled_up(n: usize, seed: u64) -> Result<DoubledUpMatrix> {
    if n == 0 {
        return Err(Error::Invalid { op: "random_j_unitary_doubled_up", detail: "n must be at least 1".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian_doubled_up(n, 0.6, &mut rng);
    DoubledUpMatrix::new(j_unitary_from_generator(&h), Layout::Block)
}

/// Column vectors together with the Gram matrix they are expected to realise.
#[derive(Debug, Clone)]
pub struct IndefiniteBasis {
    pub columns: CMat,
    pub gram: CMat,
}

impl IndefiniteBasis {
    /// `‖X†JX − G‖` with the alternating signature.
    pub fn residual(&self) -> f64 {
        let x = &self.columns;
        fro(&(x.adjoint() * j_left(x, Layout::Interleaved) - &self.gram))
    }
}

/// Extends `W` (with `W†JW = J_k`, alternating signature) to a square J-unitary matrix
/// whose first `k` columns are `W`.
pub fn indefinite_complete(w: &CMat) -> Result<CMat> {
    let dim = w.nrows();
    let k = w.ncols();
    if dim % 2 != 0 || k > dim {
        return Err(Error::DimensionMismatch {
            op: "indefinite_complete",
            detail: format!("W is {dim}x{k}"),
        });
    }
    let lay = Layout::Interleaved;
    let gram = w.adjoint() * j_left(w, lay);
    let jk = j_matrix(k + k % 2, lay).view((0, 0), (k, k)).into_owned();
    let scale = 1.0 + fro(w).powi(2);
    let dev = fro(&(&gram - &jk));
    if dev > 1e-8 * scale {
        let isotropic = (0..k).any(|i| gram[(i, i)].norm() < 1e-6 * (1.0 + w.column(i).norm_squared()));
        return Err(Error::Degenerate {
            op: "indefinite_complete",
            detail: if isotropic {
                format!("column space contains a J-null vector (Gram deviation {dev:.3e})")
            } else {
                format!("W†JW deviates from J_k by {dev:.3e}")
            },
        });
    }
    if k == dim {
        return Ok(w.clone());
    }
    // J-orthogonal projector onto span(W), then an orthonormal basis of the complement.
    let p = w * &jk * w.adjoint() * j_matrix(dim, lay);
    let comp = eye(dim) - p;
    let d = svd(&comp);
    let m = dim - k;
    if d.s[m - 1] < 1e-10 {
        return Err(Error::Degenerate { op: "indefinite_complete", detail: "complement has deficient rank".into() });
    }
    let q = d.u.columns(0, m).into_owned();
    let h = q.adjoint() * j_left(&q, lay);
    let (lam, u) = hermitian_eigen(&h);
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (idx, &l) in lam.iter().enumerate() {
        if l.abs() < 1e-10 {
            return Err(Error::Degenerate {
                op: "indefinite_complete",
                detail: "J-orthogonal complement is degenerate".into(),
            });
        }
        let col = (&q * u.column(idx)) / c(l.abs().sqrt(), 0.0);
        if l > 0.0 {
            pos.push(col);
        } else {
            neg.push(col);
        }
    }
    let mut out = zeros(dim, dim);
    out.columns_mut(0, k).copy_from(w);
    for j in k..dim {
        let col = if j % 2 == 0 { pos.pop() } else { neg.pop() };
        let col = col.ok_or_else(|| Error::Degenerate {
            op: "indefinite_complete",
            detail: "inertia of W is incompatible with J".into(),
        })?;
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Element `x` with `|x| = 1` that maximises realness of `v[idx]`: returns `v · conj(phase)`.
pub fn fix_phase(v: &crate::linalg::CVec) -> crate::linalg::CVec {
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(C64::new(1.0, 0.0));
    if pivot.norm() == 0.0 {
        return v.clone();
    }
    let ph = pivot.conj() / pivot.norm();
    v * ph
}
