//! Rational doubled-up transfer functions from state-space realizations.
//!
//! Realization matrices are stored in block layout over modes. Port-side values
//! returned by [`RationalTf::eval`] use the interleaved layout, so that the
//! annihilation and creation components of each port sit next to each other.

use crate::algebra::{
    block_to_interleaved, doubled_up_residual, flat_adjoint, j_left, random_hermitian_doubled_up, DoubledUpMatrix,
    Layout,
};
use crate::error::{Error, Result};
use crate::linalg::{c, conj, expm, eye, fro, inverse, select, solve, zeros, CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative guard radius around eigenvalues of `A`.
pub const POLE_GUARD: f64 = 1e-9;

/// Open system given by scattering matrix, linear coupling and quadratic Hamiltonian.
///
/// `lambda_minus` and `lambda_plus` are `ports × modes`; `omega` is the
/// `2·modes` square Hermitian doubled-up Hamiltonian matrix in block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SlhModel {
    pub s: CMat,
    pub lambda_minus: CMat,
    pub lambda_plus: CMat,
    pub omega: CMat,
}

impl SlhModel {
    pub fn new(s: CMat, lambda_minus: CMat, lambda_plus: CMat, omega: CMat) -> Result<Self> {
        let m = Self { s, lambda_minus, lambda_plus, omega };
        m.validate(1e-10)?;
        Ok(m)
    }

    /// Single mode coupled to `ports` channels through `lm`, `lp`, with `Ω = Δ(ω, ε)`.
    pub fn single_mode(s: CMat, lm: &[C64], lp: &[C64], omega: f64, eps: C64) -> Result<Self> {
        let p = lm.len();
        let om = DoubledUpMatrix::from_blocks(&CMat::from_element(1, 1, c(omega, 0.0)), &CMat::from_element(1, 1, eps))?;
        Self::new(s, CMat::from_column_slice(p, 1, lm), CMat::from_column_slice(p, 1, lp), om.data)
    }

    pub fn n_modes(&self) -> usize {
        self.lambda_minus.ncols()
    }

    pub fn n_ports(&self) -> usize {
        self.lambda_minus.nrows()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let (p, n) = self.lambda_minus.shape();
        if self.lambda_plus.shape() != (p, n) || self.s.shape() != (p, p) || self.omega.shape() != (2 * n, 2 * n) {
            return Err(Error::DimensionMismatch {
                op: "SlhModel::validate",
                detail: format!(
                    "S {:?}, Λ₋ {:?}, Λ₊ {:?}, Ω {:?}",
                    self.s.shape(),
                    self.lambda_minus.shape(),
                    self.lambda_plus.shape(),
                    self.omega.shape()
                ),
            });
        }
        let su = fro(&(self.s.adjoint() * &self.s - eye(p)));
        if su > tol.max(1e-12) * 10.0 {
            return Err(Error::NotRealizable { op: "SlhModel::validate", detail: format!("S is not unitary (residual {su:.3e})") });
        }
        let herm = fro(&(&self.omega - self.omega.adjoint()));
        let dbl = doubled_up_residual(&self.omega, Layout::Block);
        if herm > tol || dbl > tol {
            return Err(Error::NotRealizable {
                op: "SlhModel::validate",
                detail: format!("Ω is not Hermitian doubled-up (residuals {herm:.3e}, {dbl:.3e})"),
            });
        }
        Ok(())
    }

    /// `Λ̆ = Δ(Λ₋, Λ₊)`.
    pub fn coupling(&self) -> CMat {
        DoubledUpMatrix::from_blocks(&self.lambda_minus, &self.lambda_plus).expect("validated shapes").data
    }

    /// Random model with unitary `S`, coupling mostly through `Λ₋`, and a random Hamiltonian.
    pub fn random(n_modes: usize, n_ports: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = |scale: f64, rng: &mut ChaCha8Rng| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
        let h = CMat::from_fn(n_ports, n_ports, |_, _| g(1.0, &mut rng));
        let herm = (&h + h.adjoint()) * c(0.0, 0.5);
        let s = expm(&(herm * c(1.5, 0.0)));
        let lm = CMat::from_fn(n_ports, n_modes, |_, _| g(1.0, &mut rng));
        let lp = CMat::from_fn(n_ports, n_modes, |_, _| g(0.3, &mut rng));
        let omega = random_hermitian_doubled_up(n_modes, 0.5, &mut rng);
        Self { s, lambda_minus: lm, lambda_plus: lp, omega }
    }
}

/// Doubled-up quadruple in block layout (states and ports both paired by mode).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
}

impl StateSpaceModel {
    pub fn new(a: CMat, b: CMat, cm: CMat, d: CMat) -> Result<Self> {
        let n = a.nrows();
        let p = d.nrows();
        let ok = a.ncols() == n
            && b.shape() == (n, p)
            && cm.shape() == (p, n)
            && d.ncols() == p
            && n % 2 == 0
            && p % 2 == 0
            && p > 0;
        if !ok {
            return Err(Error::DimensionMismatch {
                op: "StateSpaceModel::new",
                detail: format!("A {:?}, B {:?}, C {:?}, D {:?}", a.shape(), b.shape(), cm.shape(), d.shape()),
            });
        }
        Ok(Self { a, b, c: cm, d })
    }

    /// Constant transfer function `D` (given in block layout).
    pub fn constant(d: CMat) -> Result<Self> {
        let p = d.nrows();
        Self::new(zeros(0, 0), zeros(0, p), zeros(p, 0), d)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn port_dim(&self) -> usize {
        self.d.nrows()
    }

    /// Largest doubled-up residual among the four matrices.
    pub fn doubled_up_residual(&self) -> f64 {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|m| if m.is_empty() { 0.0 } else { doubled_up_residual(m, Layout::Block) })
            .fold(0.0, f64::max)
    }
}

/// `A = −½Λ̆♭Λ̆ − iΩJ`, `B = −Λ̆♭S̆`, `C = Λ̆`, `D = S̆`.
pub fn slh_to_statespace(m: &SlhModel) -> Result<StateSpaceModel> {
    m.validate(1e-10)?;
    let l = m.coupling();
    let lf = flat_adjoint(&l, Layout::Block);
    let p = m.n_ports();
    let sd = DoubledUpMatrix::from_blocks(&m.s, &zeros(p, p))?.data;
    let omj = crate::algebra::j_right(&m.omega, Layout::Block);
    let a = (&lf * &l) * c(-0.5, 0.0) - omj * c(0.0, 1.0);
    let b = -(&lf * &sd);
    StateSpaceModel::new(a, b, l, sd)
}

/// Value of a transfer function at infinity together with empirical deviations.
#[derive(Debug, Clone)]
pub struct LimitReport {
    /// `D` in interleaved port layout.
    pub s: CMat,
    pub radius: f64,
    /// `‖T(R·d) − D‖` for `d ∈ {1, i, −1, −i}`.
    pub deviations: Vec<f64>,
}

/// Transfer function `T(z) = D + C(zI − A)⁻¹B` with interleaved port layout.
#[derive(Debug, Clone)]
pub struct RationalTf {
    ss: StateSpaceModel,
    poles: Vec<C64>,
    b_port: CMat,
    c_port: CMat,
    d_port: CMat,
}

impl RationalTf {
    pub fn new(ss: StateSpaceModel) -> Self {
        let poles = crate::linalg::eigenvalues(&ss.a);
        let p = ss.port_dim() / 2;
        let order = crate::algebra::interleave_order(p);
        let states: Vec<usize> = (0..ss.state_dim()).collect();
        let b_port = select(&ss.b, &states, &order);
        let c_port = select(&ss.c, &order, &states);
        let d_port = block_to_interleaved(&ss.d);
        Self { ss, poles, b_port, c_port, d_port }
    }

    pub fn from_slh(m: &SlhModel) -> Result<Self> {
        Ok(Self::new(slh_to_statespace(m)?))
    }

    /// Constant function with value `d` given in interleaved layout.
    pub fn constant(d: &CMat) -> Result<Self> {
        Ok(Self::new(StateSpaceModel::constant(crate::algebra::interleaved_to_block(d))?))
    }

    pub fn realization(&self) -> &StateSpaceModel {
        &self.ss
    }

    /// Eigenvalues of `A`, computed once.
    pub fn poles(&self) -> &[C64] {
        &self.poles
    }

    /// Port dimension (twice the number of port modes).
    pub fn dim(&self) -> usize {
        self.d_port.nrows()
    }

    pub fn port_modes(&self) -> usize {
        self.dim() / 2
    }

    /// `D` in interleaved layout.
    pub fn s_inf(&self) -> &CMat {
        &self.d_port
    }

    /// `B` with interleaved columns.
    pub fn b_port(&self) -> &CMat {
        &self.b_port
    }

    /// `C` with interleaved rows.
    pub fn c_port(&self) -> &CMat {
        &self.c_port
    }

    /// Nearest eigenvalue of `A` if `z` lies inside its guard disc.
    pub fn guard_violation(&self, z: C64) -> Option<C64> {
        self.poles.iter().copied().find(|l| (z - l).norm() < POLE_GUARD * (1.0 + l.norm()))
    }

    /// `(zI − A)⁻¹ B` with interleaved columns.
    pub fn resolvent_b(&self, z: C64) -> Result<CMat> {
        if let Some(pole) = self.guard_violation(z) {
            return Err(Error::PoleProximity { op: "eval", z, pole });
        }
        let n = self.ss.state_dim();
        let m = eye(n) * z - &self.ss.a;
        solve(&m, &self.b_port).ok_or(Error::PoleProximity { op: "eval", z, pole: z })
    }

    pub fn eval(&self, z: C64) -> Result<CMat> {
        if self.ss.state_dim() == 0 {
            return Ok(self.d_port.clone());
        }
        let x = self.resolvent_b(z)?;
        Ok(&self.d_port + &self.c_port * x)
    }

    /// Realization `(A − BD⁻¹C, −BD⁻¹, D⁻¹C, D⁻¹)`.
    pub fn inverse(&self) -> Result<Self> {
        let ss = &self.ss;
        let di = inverse(&ss.d).ok_or_else(|| Error::Singular { op: "inverse", detail: "D is not invertible".into() })?;
        let a = &ss.a - &ss.b * &di * &ss.c;
        let b = -(&ss.b * &di);
        let cm = &di * &ss.c;
        Ok(Self::new(StateSpaceModel::new(a, b, cm, di)?))
    }

    /// Zeros of the function: eigenvalues of `A − BD⁻¹C`.
    pub fn zeros(&self) -> Result<Vec<C64>> {
        Ok(self.inverse()?.poles)
    }

    pub fn limit_at_infinity(&self) -> LimitReport {
        let radius = 1e8;
        let deviations = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
            .iter()
            .map(|d| self.deviation_at(*d * radius))
            .collect();
        LimitReport { s: self.d_port.clone(), radius, deviations }
    }

    /// `‖T(z) − D‖`, or infinity if `z` is at a pole.
    pub fn deviation_at(&self, z: C64) -> f64 {
        match self.eval(z) {
            Ok(v) => fro(&(v - &self.d_port)),
            Err(_) => f64::INFINITY,
        }
    }

    /// Pairs of eigenvalues of `A` with `λᵢ + λⱼ ≈ 0`, reported as warnings.
    pub fn nondegeneracy_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, a) in self.poles.iter().enumerate() {
            for b in &self.poles[i..] {
                if (a + b).norm() < 1e-8 * (1.0 + a.norm()) {
                    out.push(format!("eigenvalues {a} and {b} of A sum to zero"));
                }
            }
        }
        out
    }
}

/// Block-layout extraction of `(M₋, M₊)` from a doubled-up matrix.
fn halves(m: &CMat) -> (CMat, CMat) {
    let (r, cc) = (m.nrows() / 2, m.ncols() / 2);
    (m.view((0, 0), (r, cc)).into_owned(), m.view((0, cc), (r, cc)).into_owned())
}

/// Builds `Δ` of a block grid whose entries are themselves doubled-up (block layout).
fn assemble(grid: &[Vec<CMat>]) -> CMat {
    let minus: Vec<Vec<CMat>> = grid.iter().map(|r| r.iter().map(|m| halves(m).0).collect()).collect();
    let plus: Vec<Vec<CMat>> = grid.iter().map(|r| r.iter().map(|m| halves(m).1).collect()).collect();
    let refs = |g: &Vec<Vec<CMat>>| -> CMat {
        let rows: Vec<Vec<&CMat>> = g.iter().map(|r| r.iter().collect()).collect();
        crate::linalg::from_blocks(&rows)
    };
    let mm = refs(&minus);
    let pp = refs(&plus);
    let pc = conj(&pp);
    let mc = conj(&mm);
    crate::linalg::from_blocks(&[vec![&mm, &pp], vec![&pc, &mc]])
}

fn check_ports(a: &RationalTf, b: &RationalTf, op: &'static str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { op, detail: format!("port dimensions {} and {}", a.dim(), b.dim()) });
    }
    Ok(())
}

/// Ports of `a` followed by ports of `b`.
pub fn concat(a: &RationalTf, b: &RationalTf) -> Result<RationalTf> {
    let (x, y) = (&a.ss, &b.ss);
    let z = |r: usize, c: usize| zeros(r, c);
    let (na, nb, pa, pb) = (x.state_dim(), y.state_dim(), x.port_dim(), y.port_dim());
    let aa = assemble(&[vec![x.a.clone(), z(na, nb)], vec![z(nb, na), y.a.clone()]]);
    let bb = assemble(&[vec![x.b.clone(), z(na, pb)], vec![z(nb, pa), y.b.clone()]]);
    let cc = assemble(&[vec![x.c.clone(), z(pa, nb)], vec![z(pb, na), y.c.clone()]]);
    let dd = assemble(&[vec![x.d.clone(), z(pa, pb)], vec![z(pb, pa), y.d.clone()]]);
    Ok(RationalTf::new(StateSpaceModel::new(aa, bb, cc, dd)?))
}

/// `z ↦ a(z)·b(z)`: the signal passes through `b` first.
pub fn series(a: &RationalTf, b: &RationalTf) -> Result<RationalTf> {
    check_ports(a, b, "series")?;
    let (x, y) = (&a.ss, &b.ss);
    let (na, nb) = (x.state_dim(), y.state_dim());
    let aa = assemble(&[vec![x.a.clone(), &x.b * &y.c], vec![zeros(nb, na), y.a.clone()]]);
    let bb = assemble(&[vec![&x.b * &y.d], vec![y.b.clone()]]);
    let cc = assemble(&[vec![x.c.clone(), &x.d * &y.c]]);
    let dd = &x.d * &y.d;
    Ok(RationalTf::new(StateSpaceModel::new(aa, bb, cc, dd)?))
}

/// Block-layout index lists of the external (first `n_ext` modes) and internal ports.
pub fn port_partition(port_modes: usize, n_ext: usize) -> (Vec<usize>, Vec<usize>) {
    let ext: Vec<usize> = (0..n_ext).chain(port_modes..port_modes + n_ext).collect();
    let int: Vec<usize> = (n_ext..port_modes).chain(port_modes + n_ext..2 * port_modes).collect();
    (ext, int)
}

/// Closes the last `port_modes − n_ext` port modes on themselves without delay:
/// `T₁ + T₂(I − T₄)⁻¹T₃`.
pub fn feedback(t: &RationalTf, n_ext: usize) -> Result<RationalTf> {
    let m = t.port_modes();
    if n_ext == 0 || n_ext >= m {
        return Err(Error::DimensionMismatch {
            op: "feedback",
            detail: format!("{n_ext} external modes out of {m}"),
        });
    }
    let ss = &t.ss;
    let (ext, int) = port_partition(m, n_ext);
    let st: Vec<usize> = (0..ss.state_dim()).collect();
    let b1 = select(&ss.b, &st, &ext);
    let b4 = select(&ss.b, &st, &int);
    let c1 = select(&ss.c, &ext, &st);
    let c4 = select(&ss.c, &int, &st);
    let d11 = select(&ss.d, &ext, &ext);
    let d14 = select(&ss.d, &ext, &int);
    let d41 = select(&ss.d, &int, &ext);
    let d44 = select(&ss.d, &int, &int);
    let k = inverse(&(eye(int.len()) - d44))
        .ok_or_else(|| Error::Singular { op: "feedback", detail: "I − D₄₄ is singular".into() })?;
    let a = &ss.a + &b4 * &k * &c4;
    let b = b1 + &b4 * &k * &d41;
    let cm = c1 + &d14 * &k * &c4;
    let d = d11 + &d14 * &k * &d41;
    Ok(RationalTf::new(StateSpaceModel::new(a, b, cm, d)?))
}

/// Evaluates `J`-weighted Gram residual `‖T(z)JT(z)† − J‖` for convenience in sweeps.
pub fn j_unitary_residual(t: &CMat) -> f64 {
    let j = crate::algebra::j_matrix(t.nrows(), Layout::Interleaved);
    fro(&(t * j_left(&t.adjoint(), Layout::Interleaved) - j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cavity(kappa: f64) -> RationalTf {
        let s = eye(1);
        let m = SlhModel::single_mode(s, &[c(kappa.sqrt(), 0.0)], &[c(0.0, 0.0)], 0.0, c(0.0, 0.0)).unwrap();
        RationalTf::from_slh(&m).unwrap()
    }

    #[test]
    fn passive_cavity_is_blaschke_ratio() {
        let t = cavity(1.0);
        let ss = t.realization();
        assert!(fro(&(&ss.a + eye(2) * c(0.5, 0.0))) < 1e-14);
        for z in [c(0.3, 1.0), c(-2.0, 0.1), c(4.0, -3.0)] {
            let v = t.eval(z).unwrap();
            let want = (z - 0.5) / (z + 0.5);
            assert!((v[(0, 0)] - want).norm() < 1e-13);
            assert!((v[(1, 1)] - want).norm() < 1e-13);
            assert!(v[(0, 1)].norm() < 1e-14);
        }
        assert!((t.eval(c(0.0, 0.0)).unwrap()[(0, 0)] + 1.0).norm() < 1e-14);
    }

    #[test]
    fn decoupled_cavity_is_identity() {
        let m = SlhModel::single_mode(eye(1), &[c(0.0, 0.0)], &[c(0.0, 0.0)], 1.3, c(0.2, 0.1)).unwrap();
        let t = RationalTf::from_slh(&m).unwrap();
        assert!(fro(&(t.eval(c(0.1, 0.7)).unwrap() - eye(2))) < 1e-14);
    }

    #[test]
    fn guard_reports_pole() {
        let t = cavity(1.0);
        match t.eval(c(-0.5, 0.0)) {
            Err(Error::PoleProximity { pole, .. }) => assert!((pole + 0.5).norm() < 1e-12),
            other => panic!("expected pole proximity, got {other:?}"),
        }
    }

    #[test]
    fn constant_model_has_zero_deviation() {
        let d = crate::algebra::random_j_unitary_doubled_up(1, 3).unwrap().data;
        let t = RationalTf::new(StateSpaceModel::constant(d).unwrap());
        assert!(t.limit_at_infinity().deviations.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mismatched_feedback_partition_is_rejected() {
        let t = cavity(1.0);
        assert!(feedback(&t, 1).is_err());
    }
}
