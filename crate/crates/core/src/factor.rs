//! Elementary two-zero, two-pole factors and their physical parameters.
//!
//! Every factor has the form `P(z) = I − VV♭ + V M(z) V♭` where `V` is `2N×2`,
//! doubled-up, with `V♭V = I` and `V♭ = J₂V†J`. The `2×2` core `M(z)` is a pair of
//! Blaschke ratios, diagonal for a complex root pair and conjugated by a fixed
//! matrix for a real pair.

use crate::algebra::{flat_adjoint, indefinite_complete, j_left, j_matrix, sigma_conj, sigma_matrix, DoubledUpMatrix, Layout};
use crate::delay::DelayNetwork;
use crate::error::{Error, Result};
use crate::linalg::{c, conj_vec, eye, fro, zeros, CMat, CVec, C64};
use crate::lti::SlhModel;
use crate::roots::j_norm;
use serde::{Deserialize, Serialize};

/// Threshold on `|v†Jv|` and `|v₁†Jv₂|` relative to `‖v‖²`.
pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorVariant {
    ComplexPair,
    RealPair,
    ModifiedDegenerate,
}

/// One elementary factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFactor {
    pub variant: FactorVariant,
    /// `2N × 2`, interleaved rows.
    #[serde(with = "crate::io::cmat")]
    pub v: CMat,
    /// `(z₀, z̄₀)` for complex and modified factors, `(z₁, z₂)` for real pairs.
    pub roots: [C64; 2],
    /// Eigenvectors matched at the roots, as given to the builder (after normalization).
    pub eigenvectors: Vec<Vec<C64>>,
}

fn blaschke(z: C64, zero: C64, pole: C64) -> C64 {
    (z - zero) / (z - pole)
}

/// `V♭ = J₂V†J`.
pub fn v_flat(v: &CMat) -> CMat {
    flat_adjoint(v, Layout::Interleaved)
}

impl CanonicalFactor {
    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    /// The two zeros.
    pub fn zeros(&self) -> [C64; 2] {
        self.roots
    }

    /// The two poles `−z̄` of the zeros.
    pub fn poles(&self) -> [C64; 2] {
        [-self.roots[0].conj(), -self.roots[1].conj()]
    }

    /// The `2×2` core `M(z)`.
    pub fn core(&self, z: C64) -> CMat {
        match self.variant {
            FactorVariant::ComplexPair => {
                let z0 = self.roots[0];
                crate::linalg::diag(&[blaschke(z, z0, -z0.conj()), blaschke(z, z0.conj(), -z0)])
            }
            FactorVariant::RealPair => {
                let (z1, z2) = (self.roots[0], self.roots[1]);
                let r1 = blaschke(z, z1, -z2);
                let r2 = blaschke(z, z2, -z1);
                real_core(r1, r2)
            }
            FactorVariant::ModifiedDegenerate => {
                let z0 = self.roots[0];
                let a = blaschke(z, z0, -z0.conj());
                let b = blaschke(z, z0.conj(), -z0);
                crate::linalg::diag(&[a * b, a * b])
            }
        }
    }

    fn core_inverse(&self, z: C64) -> CMat {
        match self.variant {
            FactorVariant::RealPair => {
                let (z1, z2) = (self.roots[0], self.roots[1]);
                real_core(1.0 / blaschke(z, z1, -z2), 1.0 / blaschke(z, z2, -z1))
            }
            _ => self.core(z).map(|x| if x == c(0.0, 0.0) { x } else { 1.0 / x }),
        }
    }

    fn assemble(&self, core: &CMat) -> CMat {
        let vf = v_flat(&self.v);
        let n = self.dim();
        eye(n) - &self.v * &vf + &self.v * core * vf
    }

    /// `P(z)`.
    pub fn eval(&self, z: C64) -> CMat {
        match self.variant {
            FactorVariant::ModifiedDegenerate => {
                let z0 = self.roots[0];
                let a = blaschke(z, z0, -z0.conj());
                let b = blaschke(z, z0.conj(), -z0);
                let first = self.assemble(&crate::linalg::diag(&[a, b]));
                let second = self.assemble(&crate::linalg::diag(&[b, a]));
                first * second
            }
            _ => self.assemble(&self.core(z)),
        }
    }

    /// `P(z)⁻¹`.
    pub fn eval_inverse(&self, z: C64) -> CMat {
        match self.variant {
            FactorVariant::ModifiedDegenerate => {
                let z0 = self.roots[0];
                let a = 1.0 / blaschke(z, z0, -z0.conj());
                let b = 1.0 / blaschke(z, z0.conj(), -z0);
                let first = self.assemble(&crate::linalg::diag(&[a, b]));
                let second = self.assemble(&crate::linalg::diag(&[b, a]));
                second * first
            }
            _ => self.assemble(&self.core_inverse(z)),
        }
    }

    /// Scalar eigenvalue of `P(z)` on the `k`-th stored eigenvector.
    pub fn eigenvalue(&self, z: C64, k: usize) -> C64 {
        match self.variant {
            FactorVariant::ComplexPair => {
                let z0 = if k == 0 { self.roots[0] } else { self.roots[0].conj() };
                blaschke(z, z0, -z0.conj())
            }
            FactorVariant::RealPair => {
                let (z1, z2) = (self.roots[0], self.roots[1]);
                if k == 0 {
                    blaschke(z, z1, -z2)
                } else {
                    blaschke(z, z2, -z1)
                }
            }
            FactorVariant::ModifiedDegenerate => {
                let z0 = self.roots[0];
                blaschke(z, z0, -z0.conj()) * blaschke(z, z0.conj(), -z0)
            }
        }
    }

    pub fn eigenvector(&self, k: usize) -> CVec {
        CVec::from_column_slice(&self.eigenvectors[k])
    }

    /// `max(‖V♭V − I‖, doubled-up residual of V)`.
    pub fn structure_residual(&self) -> f64 {
        let vf = v_flat(&self.v);
        let a = fro(&(vf * &self.v - eye(2)));
        let b = fro(&(&self.v - sigma_conj(&self.v, Layout::Interleaved)));
        a.max(b)
    }
}

/// `½ [[1, i], [1, −i]] diag(r₁, r₂) [[1, 1], [−i, i]]`.
fn real_core(r1: C64, r2: C64) -> CMat {
    let l = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, -1.0)]);
    let r = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0)]);
    l * crate::linalg::diag(&[r1, r2]) * r * c(0.5, 0.0)
}

/// `Σv^#`.
pub fn sigma_bar(v: &CVec) -> CVec {
    sigma_matrix(v.len(), Layout::Interleaved) * conj_vec(v)
}

fn col(v: &CVec) -> CMat {
    CMat::from_column_slice(v.len(), 1, v.as_slice())
}

/// Complex-pair factor with zeros `z₀` (eigenvector `v₀`) and `z̄₀` (eigenvector `Σv₀^#`).
///
/// When `v₀†Jv₀ < 0` the roles of the two zeros are exchanged, so the stored primary
/// root is `z̄₀` with eigenvector `Σv₀^#`.
pub fn build_complex_factor(z0: C64, v0: &CVec) -> Result<CanonicalFactor> {
    if z0.im.abs() <= 1e-12 * (1.0 + z0.norm()) {
        return Err(Error::Invalid { op: "build_complex_factor", detail: format!("root {z0} is real") });
    }
    let g = j_norm(v0);
    let nv = v0.norm_squared();
    if nv == 0.0 || g.norm() < DEGENERACY_TOL * nv {
        return Err(Error::Degenerate {
            op: "build_complex_factor",
            detail: format!("|v†Jv| = {:.3e} for ‖v‖² = {nv:.3e}; use a degeneracy workaround", g.norm()),
        });
    }
    let (root, v) = if g.re > 0.0 { (z0, v0.clone()) } else { (z0.conj(), sigma_bar(v0)) };
    let v = &v / c(g.re.abs().sqrt(), 0.0);
    let w = sigma_bar(&v);
    let mut vm = zeros(v.len(), 2);
    vm.set_column(0, &v);
    vm.set_column(1, &w);
    Ok(CanonicalFactor {
        variant: FactorVariant::ComplexPair,
        v: vm,
        roots: [root, root.conj()],
        eigenvectors: vec![v.iter().copied().collect(), w.iter().copied().collect()],
    })
}

/// Projects `v` onto self-conjugate vectors (`x = Σx^#`).
pub fn self_conjugate(v: &CVec) -> CVec {
    let s = sigma_bar(v);
    let a = v + &s;
    let b = (v - &s) * c(0.0, 1.0);
    if a.norm() >= b.norm() {
        a
    } else {
        b
    }
}

/// Real-pair factor with zeros `z₁`, `z₂` and eigenvectors `v₁`, `v₂`.
pub fn build_real_factor(z1: f64, z2: f64, v1: &CVec, v2: &CVec) -> Result<CanonicalFactor> {
    let mut a = self_conjugate(v1);
    let mut b = self_conjugate(v2);
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate { op: "build_real_factor", detail: "zero eigenvector".into() });
    }
    a /= c(na, 0.0);
    b /= c(nb, 0.0);
    let g = (a.adjoint() * j_left(&col(&b), Layout::Interleaved))[(0, 0)];
    if g.norm() < DEGENERACY_TOL {
        return Err(Error::Degenerate {
            op: "build_real_factor",
            detail: format!("|v₁†Jv₂| = {:.3e}; the pair is J-orthogonal", g.norm()),
        });
    }
    // For self-conjugate vectors g is purely imaginary; scale to ±i/2 and order so it is +i/2.
    let s = (0.5 / g.norm()).sqrt();
    a *= c(s, 0.0);
    b *= c(s, 0.0);
    let (mut r1, mut r2) = (z1, z2);
    if g.im < 0.0 {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut r1, &mut r2);
    }
    let mut vm = zeros(a.len(), 2);
    vm.set_column(0, &(&a - &b * c(0.0, 1.0)));
    vm.set_column(1, &(&a + &b * c(0.0, 1.0)));
    Ok(CanonicalFactor {
        variant: FactorVariant::RealPair,
        v: vm,
        roots: [c(r1, 0.0), c(r2, 0.0)],
        eigenvectors: vec![a.iter().copied().collect(), b.iter().copied().collect()],
    })
}

/// Two self-conjugate vectors from a (at least) two-dimensional eigenspace with the
/// largest `|v₁†Jv₂|`.
pub fn real_pair_from_eigenspace(space: &CMat) -> Result<(CVec, CVec)> {
    let mut cands = Vec::new();
    for k in 0..space.ncols() {
        let x = space.column(k).into_owned();
        let s = sigma_bar(&x);
        for v in [&x + &s, (&x - &s) * c(0.0, 1.0)] {
            let n = v.norm();
            if n > 1e-8 {
                cands.push(v / c(n, 0.0));
            }
        }
    }
    let mut best = None;
    let mut best_val = 0.0;
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let g = (cands[i].adjoint() * j_left(&col(&cands[j]), Layout::Interleaved))[(0, 0)].norm();
            if g > best_val {
                best_val = g;
                best = Some((cands[i].clone(), cands[j].clone()));
            }
        }
    }
    match best {
        Some(p) if best_val >= DEGENERACY_TOL => Ok(p),
        _ => Err(Error::Degenerate {
            op: "real_pair_from_eigenspace",
            detail: "eigenspace contains no J-paired self-conjugate vectors".into(),
        }),
    }
}

/// Two-term product for a degenerate complex pair, from a doubled-up `V` with `V♭V = I`.
pub fn build_modified_degenerate_factor(z0: C64, v: &CMat) -> Result<CanonicalFactor> {
    if v.ncols() != 2 || v.nrows() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            op: "build_modified_degenerate_factor",
            detail: format!("V is {}x{}", v.nrows(), v.ncols()),
        });
    }
    let scale = 1.0 + fro(v).powi(2);
    let r1 = fro(&(v_flat(v) * v - eye(2)));
    let r2 = fro(&(v - sigma_conj(v, Layout::Interleaved)));
    if r1 > 1e-8 * scale || r2 > 1e-8 * scale {
        return Err(Error::Degenerate {
            op: "build_modified_degenerate_factor",
            detail: format!("V violates V♭V = I or doubled-up form (residuals {r1:.3e}, {r2:.3e})"),
        });
    }
    Ok(CanonicalFactor {
        variant: FactorVariant::ModifiedDegenerate,
        v: v.clone(),
        roots: [z0, z0.conj()],
        eigenvectors: vec![v.column(0).iter().copied().collect(), v.column(1).iter().copied().collect()],
    })
}

/// Rotates `v` so its first entry is real and non-negative, then adds `eps` to that entry.
pub fn perturb_eigenvector(v: &CVec, eps: f64) -> CVec {
    let mut out = v.clone();
    let f = v[0];
    if f.norm() > 0.0 {
        out *= f.conj() / f.norm();
    }
    out[0] += c(eps, 0.0);
    out
}

/// `V = [v, Σv^#]` normalised to `V♭V = I`, for a vector with `v†Jv > 0`.
pub fn v_from_vector(v: &CVec) -> Result<CMat> {
    let g = j_norm(v).re;
    if g <= DEGENERACY_TOL * v.norm_squared() {
        return Err(Error::Degenerate { op: "v_from_vector", detail: format!("v†Jv = {g:.3e}") });
    }
    let v = v / c(g.sqrt(), 0.0);
    let mut m = zeros(v.len(), 2);
    m.set_column(0, &v);
    m.set_column(1, &sigma_bar(&v));
    Ok(m)
}

/// Loop phase shift `e^{±iδ}` on the delayed ports.
pub fn apply_loop_phase_shift(n: &DelayNetwork, delta: f64) -> Result<DelayNetwork> {
    n.with_loop_phase(delta)
}

/// Variant of a quadratic Hamiltonian `Δ(ω, ε)` after a Bogoliubov transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalOmega {
    pub variant: FactorVariant,
    pub c: f64,
    /// J-unitary doubled-up transformation (2×2).
    pub s: CMat,
}

/// Classifies `Ω = [[a, b e^{iφ}], [b e^{−iφ}, a]]`.
///
/// Complex branch (`|a| > b`): `Ω = c S²` with `c = sign(a)·√(a² − b²)`.
/// Real branch (`|a| < b`): `SΩS† = [[0, ic], [−ic, 0]]` with `c = √(b² − a²)`.
pub fn canonicalize_omega(omega: &CMat) -> Result<CanonicalOmega> {
    if omega.shape() != (2, 2) {
        return Err(Error::DimensionMismatch { op: "canonicalize_omega", detail: format!("Ω is {:?}", omega.shape()) });
    }
    let herm = fro(&(omega - omega.adjoint()));
    if herm > 1e-12 || (omega[(0, 0)] - omega[(1, 1)]).norm() > 1e-12 {
        return Err(Error::Invalid { op: "canonicalize_omega", detail: "Ω is not Hermitian of the form Δ(ω, ε)".into() });
    }
    let a = omega[(0, 0)].re;
    let b = omega[(0, 1)].norm();
    let mut phi = omega[(0, 1)].arg();
    let tol = 1e-12 * (1.0 + a.abs() + b);
    if (a.abs() - b).abs() <= tol {
        return Err(Error::Unsupported {
            op: "canonicalize_omega",
            detail: format!("parabolic boundary |ω| = |ε| = {b}"),
        });
    }
    let e = |t: f64| c(0.0, t).exp();
    if a.abs() > b {
        let eta = (b / a.abs()).atanh();
        let cval = a.signum() * (a * a - b * b).sqrt();
        if a < 0.0 {
            phi += std::f64::consts::PI;
        }
        let (ch, sh) = ((eta / 2.0).cosh(), (eta / 2.0).sinh());
        let s = CMat::from_row_slice(2, 2, &[c(ch, 0.0), e(phi) * sh, e(-phi) * sh, c(ch, 0.0)]);
        Ok(CanonicalOmega { variant: FactorVariant::ComplexPair, c: cval, s })
    } else {
        let eta = (a / b).atanh();
        let cval = (b * b - a * a).sqrt();
        let (ch, sh) = ((eta / 2.0).cosh(), (eta / 2.0).sinh());
        let q = std::f64::consts::FRAC_PI_4;
        let s = CMat::from_row_slice(
            2,
            2,
            &[e(q - phi / 2.0) * ch, -e(q + phi / 2.0) * sh, -e(-q - phi / 2.0) * sh, e(-q + phi / 2.0) * ch],
        );
        Ok(CanonicalOmega { variant: FactorVariant::RealPair, c: cval, s })
    }
}

/// Zeros `(κ/2 − c, κ/2 + c)` of a real-branch component.
pub fn real_roots(kappa: f64, c: f64) -> (f64, f64) {
    (0.5 * kappa - c, 0.5 * kappa + c)
}

/// Physical parameters of a single-mode component realising a factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlhParams {
    /// Couplings per port, `Λ₋` and `Λ₊`.
    pub lambda_minus: Vec<C64>,
    pub lambda_plus: Vec<C64>,
    pub omega: f64,
    pub epsilon: C64,
    pub kappa: f64,
    pub c: f64,
}

impl SlhParams {
    /// Single-mode model with identity scattering.
    pub fn to_slh_model(&self) -> Result<SlhModel> {
        let n = self.lambda_minus.len();
        SlhModel::single_mode(eye(n), &self.lambda_minus, &self.lambda_plus, self.omega, self.epsilon)
    }
}

/// Recovers `κ`, `c`, couplings `Λ̆ = √κ V` and the canonical Hamiltonian.
///
/// A complex factor with zero `z₀` has `κ = 2 Re z₀`, `c = −Im z₀` and `Ω = Δ(c, 0)`, so
/// its poles are `−κ/2 ∓ ic`. A real factor has `κ = z₁ + z₂`, `c = (z₂ − z₁)/2` and
/// `Ω = Δ(0, ic)`.
pub fn factor_to_slh(f: &CanonicalFactor) -> Result<SlhParams> {
    let (kappa, cval, omega, eps) = match f.variant {
        FactorVariant::ComplexPair => {
            let z0 = f.roots[0];
            (2.0 * z0.re, -z0.im, -z0.im, c(0.0, 0.0))
        }
        FactorVariant::RealPair => {
            let (z1, z2) = (f.roots[0].re, f.roots[1].re);
            let cv = 0.5 * (z2 - z1);
            (z1 + z2, cv, 0.0, c(0.0, cv))
        }
        FactorVariant::ModifiedDegenerate => {
            return Err(Error::Unsupported {
                op: "factor_to_slh",
                detail: "a modified degenerate factor is a product of two components".into(),
            })
        }
    };
    if !(kappa > 0.0) {
        return Err(Error::NotRealizable {
            op: "factor_to_slh",
            detail: format!("κ = {kappa:.6} is not positive (poles in the right half-plane)"),
        });
    }
    let l = &f.v * c(kappa.sqrt(), 0.0);
    let n = l.nrows() / 2;
    let lambda_minus = (0..n).map(|i| l[(2 * i, 0)]).collect();
    let lambda_plus = (0..n).map(|i| l[(2 * i, 1)]).collect();
    Ok(SlhParams { lambda_minus, lambda_plus, omega, epsilon: eps, kappa, c: cval })
}

/// `P(z) = M diag(a(z), −a(z̄)^*, 1, −1, …) M†J`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkePotapovForm {
    pub m: CMat,
    pub z0: C64,
}

impl BlaschkePotapovForm {
    pub fn diag_entries(&self, z: C64) -> Vec<C64> {
        let n = self.m.nrows();
        let a = blaschke(z, self.z0, -self.z0.conj());
        let a_bar = blaschke(z.conj(), self.z0, -self.z0.conj()).conj();
        (0..n)
            .map(|k| match k {
                0 => a,
                1 => -a_bar,
                _ if k % 2 == 0 => c(1.0, 0.0),
                _ => c(-1.0, 0.0),
            })
            .collect()
    }

    pub fn eval(&self, z: C64) -> CMat {
        let d = crate::linalg::diag(&self.diag_entries(z));
        crate::algebra::j_right(&(&self.m * d * self.m.adjoint()), Layout::Interleaved)
    }
}

/// Completes `W = VJ₂` to a J-unitary `M`.
pub fn to_blaschke_potapov_form(f: &CanonicalFactor) -> Result<BlaschkePotapovForm> {
    if f.variant != FactorVariant::ComplexPair {
        return Err(Error::Unsupported {
            op: "to_blaschke_potapov_form",
            detail: format!("{:?} factors have no single-zero diagonal form", f.variant),
        });
    }
    let w = crate::algebra::j_right(&f.v, Layout::Interleaved);
    let m = indefinite_complete(&w)?;
    Ok(BlaschkePotapovForm { m, z0: f.roots[0] })
}

/// Doubled-up check of a factor value `P(z̄) = ΣP(z)^#Σ`.
pub fn conjugation_residual(f: &CanonicalFactor, z: C64) -> f64 {
    fro(&(f.eval(z.conj()) - sigma_conj(&f.eval(z), Layout::Interleaved)))
}

/// `‖P(z)JP(−z̄)† − J‖`.
pub fn j_unitary_residual(f: &CanonicalFactor, z: C64) -> f64 {
    let j = j_matrix(f.dim(), Layout::Interleaved);
    fro(&(f.eval(z) * &j * f.eval(-z.conj()).adjoint() - j))
}

/// Doubled-up matrix wrapper of `V` (interleaved layout).
pub fn v_doubled_up(f: &CanonicalFactor) -> Result<DoubledUpMatrix> {
    DoubledUpMatrix::new(f.v.clone(), Layout::Interleaved)
}
