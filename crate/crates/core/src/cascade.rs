//! Sequential detachment of elementary factors and the constant remainder.
//!
//! Factors are detached on the right, `R_k(z) = R_{k−1}(z) P_k(z)⁻¹`, which leaves
//! `T̃(z) ≈ B P_K(z) ⋯ P_1(z)`. The exported product form `∏ P'_k(z) · B` uses the
//! conjugated factors `P'_k = B P_k B⁻¹`, whose columns are `V' = BV`.
//!
//! Zero ladders of the delayed loop are matched to the ladders of the static
//! surrogate. A ladder is either truncated (a fixed number of members, taken in
//! the order `n = 0, 1, −1, 2, …`) or replaced by its closed-form product, which is
//! a ratio of hyperbolic sines.

use crate::algebra::{is_j_unitary, sigma_conj, Layout};
use crate::delay::{DelayNetwork, StaticFamily, Which};
use crate::error::{Error, Result};
use crate::factor::{
    build_complex_factor, build_modified_degenerate_factor, build_real_factor, perturb_eigenvector,
    real_pair_from_eigenspace, sigma_bar, v_flat, v_from_vector, CanonicalFactor,
};
use crate::linalg::{c, eye, fro, svd, CMat, CVec, C64};
use crate::lti::RationalTf;
use crate::roots::{find_roots, j_norm, scan, Kind, Polish, Rect, Scan, ScanOptions, ZeroPoleRecord, SECOND_SIGMA_TOL};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// A matrix-valued function of `z`.
pub type MatFn = Arc<dyn Fn(C64) -> Result<CMat> + Send + Sync>;

/// `sinh(a)/sinh(b)` without overflow for large real parts.
pub fn sinh_ratio(a: C64, b: C64) -> C64 {
    let one = c(1.0, 0.0);
    if a.re > 0.0 && b.re > 0.0 {
        (a - b).exp() * (one - (-2.0 * a).exp()) / (one - (-2.0 * b).exp())
    } else if a.re < 0.0 && b.re < 0.0 {
        (b - a).exp() * (one - (2.0 * a).exp()) / (one - (2.0 * b).exp())
    } else {
        a.sinh() / b.sinh()
    }
}

/// `∏_{n∈ℤ} (z − z_m − iPn)/(z + z̄_m − iPn)` in closed form.
pub fn ladder_product(z: C64, zm: C64, period: f64) -> C64 {
    let k = PI / period;
    sinh_ratio((z - zm) * k, (z + zm.conj()) * k)
}

/// Symmetric product over `n ∈ [−N, N]` and the closed form of the full ladder
/// product with zeros `z_m + iPn`.
pub fn static_sinh_oracle(zm: C64, period: f64, z: C64, terms: usize) -> Result<(C64, C64)> {
    let im = zm.im;
    if !(period > 0.0) || im <= 0.0 || im >= period || (im - 0.5 * period).abs() <= 1e-12 * period {
        return Err(Error::Invalid {
            op: "static_sinh_oracle",
            detail: format!("need 0 < Im z_m < P and Im z_m ≠ P/2, got z_m = {zm}, P = {period}"),
        });
    }
    // Poles of the closed form sit at −z̄_m + iPk.
    let w = z + zm.conj();
    let k = (w.im / period).round();
    let pole = -zm.conj() + c(0.0, period * k);
    if (z - pole).norm() <= 1e-12 * (1.0 + z.norm()) {
        return Err(Error::PoleProximity { op: "static_sinh_oracle", z, pole });
    }
    let n = terms as i64;
    let mut prod = c(1.0, 0.0);
    for j in -n..=n {
        let shift = c(0.0, period * j as f64);
        prod *= (z - zm - shift) / (z + zm.conj() - shift);
    }
    Ok((prod, ladder_product(z, zm, period)))
}

/// Shape of a closed-form ladder product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    /// Core `diag(Q(z; z_m), Q(z; z̄_m))`: a ladder and its conjugate ladder.
    Diagonal,
    /// Core `Q(z; z_m) I`: a self-conjugate ladder of double zeros.
    Scalar,
}

/// The product of all factors of one zero ladder, `I − VV♭ + V Q(z) V♭`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderFactor {
    pub kind: LadderKind,
    #[serde(with = "crate::io::cmat")]
    pub v: CMat,
    pub zm: C64,
    pub period: f64,
}

impl LadderFactor {
    fn entries(&self, z: C64) -> [C64; 2] {
        let a = ladder_product(z, self.zm, self.period);
        match self.kind {
            LadderKind::Diagonal => [a, ladder_product(z, self.zm.conj(), self.period)],
            LadderKind::Scalar => [a, a],
        }
    }

    fn assemble(&self, d: [C64; 2]) -> CMat {
        let vf = v_flat(&self.v);
        let n = self.v.nrows();
        eye(n) - &self.v * &vf + &self.v * crate::linalg::diag(&d) * vf
    }

    pub fn eval(&self, z: C64) -> CMat {
        self.assemble(self.entries(z))
    }

    pub fn eval_inverse(&self, z: C64) -> CMat {
        let [a, b] = self.entries(z);
        self.assemble([1.0 / a, 1.0 / b])
    }

    /// Member `n = 0` of each ladder carried by this product.
    pub fn base_zeros(&self) -> Vec<C64> {
        match self.kind {
            LadderKind::Diagonal => vec![self.zm, self.zm.conj()],
            LadderKind::Scalar => vec![self.zm],
        }
    }
}

/// One term of the cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum CascadeTerm {
    Factor(CanonicalFactor),
    Ladder(LadderFactor),
}

impl CascadeTerm {
    pub fn eval(&self, z: C64) -> CMat {
        match self {
            Self::Factor(f) => f.eval(z),
            Self::Ladder(l) => l.eval(z),
        }
    }

    pub fn eval_inverse(&self, z: C64) -> CMat {
        match self {
            Self::Factor(f) => f.eval_inverse(z),
            Self::Ladder(l) => l.eval_inverse(z),
        }
    }

    pub fn v(&self) -> &CMat {
        match self {
            Self::Factor(f) => &f.v,
            Self::Ladder(l) => &l.v,
        }
    }

    /// Zeros at which removability is checked (a ladder contributes its base members).
    pub fn check_zeros(&self) -> Vec<C64> {
        let mut z = match self {
            Self::Factor(f) => f.roots.to_vec(),
            Self::Ladder(l) => l.base_zeros(),
        };
        z.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
        z
    }

    /// `B P B⁻¹`, represented by `V' = BV`.
    pub fn conjugated(&self, b: &CMat) -> Self {
        match self {
            Self::Factor(f) => {
                let mut g = f.clone();
                g.v = b * &f.v;
                g.eigenvectors = f
                    .eigenvectors
                    .iter()
                    .map(|e| (b * CVec::from_column_slice(e)).iter().copied().collect())
                    .collect();
                Self::Factor(g)
            }
            Self::Ladder(l) => Self::Ladder(LadderFactor { v: b * &l.v, ..l.clone() }),
        }
    }

    /// `‖V♭V − I‖`.
    pub fn structure_residual(&self) -> f64 {
        let v = self.v();
        fro(&(v_flat(v) * v - eye(2)))
    }
}

/// A base function with detached terms, `z ↦ f(z) P_1(z)⁻¹ ⋯ P_k(z)⁻¹`.
#[derive(Clone)]
pub struct Remainder {
    base: MatFn,
    terms: Vec<CascadeTerm>,
}

impl std::fmt::Debug for Remainder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Remainder").field("terms", &self.terms.len()).finish()
    }
}

impl Remainder {
    pub fn new(base: MatFn) -> Self {
        Self { base, terms: Vec::new() }
    }

    pub fn from_network(n: &DelayNetwork, which: Which) -> Self {
        let n = n.clone();
        Self::new(Arc::new(move |z| n.eval(z, which)))
    }

    pub fn from_tf(t: &RationalTf) -> Self {
        let t = t.clone();
        Self::new(Arc::new(move |z| t.eval(z)))
    }

    pub fn terms(&self) -> &[CascadeTerm] {
        &self.terms
    }

    pub fn base(&self) -> &MatFn {
        &self.base
    }

    pub fn eval(&self, z: C64) -> Result<CMat> {
        let mut m = (self.base)(z)?;
        for t in &self.terms {
            m *= t.eval_inverse(z);
        }
        Ok(m)
    }

    /// The same base with only the first `k` terms detached.
    pub fn prefix(&self, k: usize) -> Self {
        Self { base: self.base.clone(), terms: self.terms[..k.min(self.terms.len())].to_vec() }
    }

    fn with(&self, term: CascadeTerm) -> Self {
        let mut terms = self.terms.clone();
        terms.push(term);
        Self { base: self.base.clone(), terms }
    }
}

/// Evidence that a detachment left no zero or pole behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovabilityReport {
    pub step: usize,
    pub zeros: Vec<C64>,
    pub rho: f64,
    /// Smallest `σ_min` of the result on the inner circles around the detached zeros.
    pub zero_sigma_min: f64,
    /// Largest `σ_max` of the result on all circles.
    pub scale: f64,
    /// Worst ratio of `σ_max` on the inner (ρ/10) to the outer (ρ) circle; about 10 when
    /// a pole survives.
    pub growth: f64,
    /// Worst ratio of `σ_min` on the inner to the outer circle; about 0.1 when a zero
    /// survives.
    pub decay: f64,
    pub removable: bool,
}

const CIRCLE_POINTS: usize = 16;
const GROWTH_LIMIT: f64 = 3.0;

fn circle_extremes(f: &Remainder, center: C64, rho: f64) -> Result<(f64, f64)> {
    let mut smax: f64 = 0.0;
    let mut smin = f64::INFINITY;
    for k in 0..CIRCLE_POINTS {
        let t = 2.0 * PI * (k as f64 + 0.5) / CIRCLE_POINTS as f64;
        let z = center + c(0.0, t).exp() * rho;
        let s = svd(&f.eval(z)?).s;
        smax = smax.max(s[0]);
        smin = smin.min(*s.last().unwrap_or(&0.0));
    }
    Ok((smax, smin))
}

/// Checks that `f` is analytic and invertible near the zeros of `term` and their
/// reflections `−z̄`, by comparing circles of radius `ρ` and `ρ/10`.
pub fn check_removable(f: &Remainder, term: &CascadeTerm, rho: f64) -> Result<RemovabilityReport> {
    let zeros = term.check_zeros();
    let mut sites: Vec<(C64, bool)> = zeros.iter().map(|&z| (z, true)).collect();
    sites.extend(zeros.iter().map(|&z| (-z.conj(), false)));
    let (mut growth, mut decay, mut scale, mut zero_sigma_min) = (0.0_f64, f64::INFINITY, 0.0_f64, f64::INFINITY);
    for (site, is_zero) in sites {
        let (omax, omin) = circle_extremes(f, site, rho)?;
        let (imax, imin) = circle_extremes(f, site, 0.1 * rho)?;
        growth = growth.max(imax / omax);
        decay = decay.min(if omin > 0.0 { imin / omin } else { 0.0 });
        scale = scale.max(omax).max(imax);
        if is_zero {
            zero_sigma_min = zero_sigma_min.min(imin);
        }
    }
    let removable = growth < GROWTH_LIMIT && decay > 1.0 / GROWTH_LIMIT && zero_sigma_min.is_finite();
    Ok(RemovabilityReport { step: f.terms.len(), zeros, rho, zero_sigma_min, scale, growth, decay, removable })
}

/// `z ↦ f(z) P(z)⁻¹`, refused when the result keeps a zero or pole of `P`.
pub fn detach(f: &Remainder, term: &CascadeTerm, rho: f64) -> Result<(Remainder, RemovabilityReport)> {
    let out = f.with(term.clone());
    let report = check_removable(&out, term, rho)?;
    if !report.removable {
        return Err(Error::Removability {
            op: "detach",
            step: report.step,
            detail: format!(
                "zeros {:?} not removable: σ_max growth {:.3}, σ_min decay {:.3}; the eigenvector does not match",
                report.zeros, report.growth, report.decay
            ),
        });
    }
    Ok((out, report))
}

/// A finite group of zeros detached by one factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum PlanItem {
    /// A complex zero; its conjugate is covered by the same factor.
    Complex { zero: C64, multiplicity: usize },
    RealPair { z1: f64, z2: f64 },
    /// A real zero with a two-dimensional null space.
    RealDegenerate { zero: f64 },
}

impl PlanItem {
    pub fn zeros(&self) -> Vec<C64> {
        match *self {
            Self::Complex { zero, .. } => vec![zero, zero.conj()],
            Self::RealPair { z1, z2 } => vec![c(z1, 0.0), c(z2, 0.0)],
            Self::RealDegenerate { zero } => vec![c(zero, 0.0)],
        }
    }

    fn key(&self) -> (f64, f64) {
        let z = self.zeros();
        let m = z.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
        (m, z[0].im)
    }
}

/// A zero of a ladder group, indexed by its representative member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderMember {
    pub n: i64,
    pub position: C64,
    pub multiplicity: usize,
}

/// One zero ladder of the static surrogate (with its conjugate ladder).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderGroup {
    pub family: StaticFamily,
    pub self_conjugate: bool,
    /// Matched exact zeros inside the scanned window, in spiral order.
    pub members: Vec<LadderMember>,
    /// Representative indices inside the window whose exact zero was left unmatched
    /// and therefore belongs to the inner set.
    pub absorbed: Vec<i64>,
    /// Largest representative index inside the window.
    pub window_im: f64,
}

impl LadderGroup {
    /// Whether member `0` is real and detached with a real-pair factor.
    fn real_base(&self) -> bool {
        self.self_conjugate && self.family.base.im.abs() < 1e-9 * (1.0 + self.family.base.norm())
    }

    /// Representative indices in detachment order.
    pub fn spiral(&self, count: usize) -> Vec<i64> {
        let mut out = Vec::with_capacity(count);
        let mut k: i64 = 0;
        let simple_real = self.real_base() && self.family.multiplicity == 1;
        while out.len() < count {
            let candidates: Vec<i64> = if self.self_conjugate {
                vec![k]
            } else if k == 0 {
                vec![0]
            } else {
                vec![k, -k]
            };
            for n in candidates {
                if out.len() < count && !self.absorbed.contains(&n) && !(simple_real && n == 0) {
                    out.push(n);
                }
            }
            k += 1;
        }
        out
    }

    pub fn member(&self, n: i64) -> Option<&LadderMember> {
        self.members.iter().find(|m| m.n == n)
    }

    /// Representative index of a zero on this ladder or its conjugate, and the zero
    /// moved onto the representative side.
    fn representative(&self, z: C64) -> (i64, C64) {
        if self.self_conjugate {
            // Member n pairs with −n (real base) or −n−1 (base at iP/2); n ≥ 0 represents.
            let n = self.family.index_near(z);
            if n >= 0 {
                (n, z)
            } else {
                (self.family.index_near(z.conj()), z.conj())
            }
        } else if self.family.distance(z) <= self.family.distance(z.conj()) {
            (self.family.index_near(z), z)
        } else {
            (self.family.index_near(z.conj()), z.conj())
        }
    }
}

/// Detachment order for a delayed network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationPlan {
    pub inner: Vec<PlanItem>,
    pub ladders: Vec<LadderGroup>,
    pub r0: f64,
}

fn same(a: C64, b: C64) -> bool {
    (a - b).norm() <= 1e-7 * (1.0 + a.norm())
}

/// Smallest distance between distinct members of the given ladders.
fn ladder_separation(families: &[StaticFamily]) -> f64 {
    let mut sep = families.iter().map(|f| f.period).fold(f64::INFINITY, f64::min);
    for (i, a) in families.iter().enumerate() {
        for b in &families[i + 1..] {
            let d = a.distance(b.base);
            if d > 1e-9 * (1.0 + b.base.norm()) {
                sep = sep.min(d);
            }
        }
    }
    sep
}

/// Pairs real zeros greedily by the largest `|v₁†Jv₂|`.
fn pair_real(mut reals: Vec<(f64, CVec)>) -> Result<Vec<PlanItem>> {
    if reals.len() % 2 != 0 {
        return Err(Error::Unpaired {
            count: 1,
            detail: format!("odd number ({}) of simple real zeros; no real-pair factor can absorb the last", reals.len()),
        });
    }
    reals.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
    let mut out = Vec::new();
    while !reals.is_empty() {
        let (x, v) = reals.remove(0);
        let a = crate::factor::self_conjugate(&v);
        let w = |u: &CVec| {
            let b = crate::factor::self_conjugate(u);
            let jb = crate::algebra::j_left(&CMat::from_column_slice(b.len(), 1, b.as_slice()), Layout::Interleaved);
            (a.adjoint() * jb)[(0, 0)].norm() / (a.norm() * b.norm()).max(1e-300)
        };
        let (k, _) = reals
            .iter()
            .enumerate()
            .map(|(k, (_, u))| (k, w(u)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let (y, _) = reals.remove(k);
        out.push(PlanItem::RealPair { z1: x, z2: y });
    }
    Ok(out)
}

/// Splits exact zeros into an inner set and ladder groups matched to the static
/// zero ladders.
///
/// Each static member takes the nearest exact zeros up to its multiplicity; what is
/// left over forms the inner set, ordered by `|z|`. When `r0` is given, a leftover
/// zero beyond it is a correspondence failure.
pub fn plan_order(
    exact: &[ZeroPoleRecord],
    families: &[StaticFamily],
    window_im: f64,
    r0: Option<f64>,
) -> Result<FactorizationPlan> {
    let mut zeros: Vec<&ZeroPoleRecord> = exact.iter().filter(|r| r.kind == Kind::Zero).collect();
    zeros.sort_by(|a, b| a.position.im.total_cmp(&b.position.im).then(a.position.re.total_cmp(&b.position.re)));

    // Representative families, one per conjugate pair.
    let mut groups: Vec<LadderGroup> = Vec::new();
    let mut covered = vec![false; families.len()];
    for (i, f) in families.iter().enumerate() {
        if covered[i] {
            continue;
        }
        let conj = f.conjugated();
        let j = families.iter().position(|g| same(g.base, conj.base) && g.multiplicity == f.multiplicity).ok_or_else(|| {
            Error::Correspondence { op: "plan_order", detail: format!("ladder at {} has no conjugate ladder", f.base) }
        })?;
        covered[i] = true;
        covered[j] = true;
        let self_conjugate = i == j;
        let rep = if self_conjugate || f.base.im < 0.5 * f.period { *f } else { families[j] };
        groups.push(LadderGroup { family: rep, self_conjugate, members: Vec::new(), absorbed: Vec::new(), window_im });
    }

    // Greedy nearest assignment with multiplicity capacities.
    let radius = (0.45 * ladder_separation(families)).min(1.0);
    let mut cands: Vec<(f64, usize, usize, i64)> = Vec::new();
    for (ri, r) in zeros.iter().enumerate() {
        for (gi, g) in groups.iter().enumerate() {
            let (n, w) = g.representative(r.position);
            let d = (w - g.family.member(n)).norm();
            if d <= radius {
                cands.push((d, ri, gi, n));
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut assigned = vec![false; zeros.len()];
    let mut load: std::collections::BTreeMap<(usize, i64, bool), usize> = Default::default();
    for (_, ri, gi, n) in cands {
        if assigned[ri] {
            continue;
        }
        let g = &groups[gi];
        let pos = zeros[ri].position;
        let (_, w) = g.representative(pos);
        let key = (gi, n, w != pos);
        let used = load.get(&key).copied().unwrap_or(0);
        let m = zeros[ri].multiplicity;
        if used + m > g.family.multiplicity {
            continue;
        }
        load.insert(key, used + m);
        assigned[ri] = true;
        if groups[gi].member(n).is_none() {
            groups[gi].members.push(LadderMember { n, position: w, multiplicity: m });
        }
    }

    // A simple real base member is paired with another real zero in the inner set.
    for (ri, r) in zeros.iter().enumerate() {
        if !assigned[ri] {
            continue;
        }
        for g in groups.iter_mut() {
            if g.real_base() && g.family.multiplicity == 1 && r.is_real() && g.family.distance(r.position) <= radius {
                assigned[ri] = false;
                g.members.retain(|m| m.n != 0);
            }
        }
    }

    let leftovers: Vec<&ZeroPoleRecord> = zeros.iter().enumerate().filter(|(i, _)| !assigned[*i]).map(|(_, r)| *r).collect();
    let r0_val = match r0 {
        Some(r) => {
            if let Some(bad) = leftovers.iter().find(|z| z.position.norm() > r) {
                return Err(Error::Correspondence {
                    op: "plan_order",
                    detail: format!("exact zero {} beyond R0 = {r} has no static counterpart", bad.position),
                });
            }
            r
        }
        None => leftovers.iter().map(|z| z.position.norm()).fold(0.0, f64::max),
    };

    // Window members left unmatched are accounted for by the inner set.
    for g in groups.iter_mut() {
        let reach = (window_im / g.family.period).ceil() as i64 + 1;
        for n in -reach..=reach {
            let z = g.family.member(n);
            if z.im.abs() > window_im {
                continue;
            }
            let (rn, _) = g.representative(z);
            if rn != n || (g.real_base() && g.family.multiplicity == 1 && n == 0) {
                continue;
            }
            if g.member(n).is_none() && !g.absorbed.contains(&n) {
                g.absorbed.push(n);
            }
        }
        g.absorbed.sort_unstable();
        let order = g.spiral(g.members.len() + g.absorbed.len());
        g.members.sort_by_key(|m| order.iter().position(|&k| k == m.n).unwrap_or(usize::MAX));
    }

    let mut inner = Vec::new();
    let mut reals = Vec::new();
    for r in &leftovers {
        if r.is_real() {
            if r.multiplicity >= 2 || r.eigenspace.len() >= 2 {
                inner.push(PlanItem::RealDegenerate { zero: r.position.re });
            } else {
                reals.push((r.position.re, r.vector()));
            }
        } else if r.position.im > 0.0 {
            inner.push(PlanItem::Complex { zero: r.position, multiplicity: r.multiplicity });
        }
    }
    inner.extend(pair_real(reals)?);
    inner.sort_by(|a, b| {
        let (ka, kb) = (a.key(), b.key());
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    Ok(FactorizationPlan { inner, ladders: groups, r0: r0_val })
}

/// Plan for the static surrogate: ladders only.
pub fn plan_static(families: &[StaticFamily]) -> Result<FactorizationPlan> {
    plan_order(&[], families, 0.0, Some(0.0))
}

/// How degenerate zeros are handled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// Split degenerate zeros with a loop phase `e^{±iδ}` before factorizing.
    PhaseShift { delta: f64 },
    /// Build modified two-term factors from an eigenvector perturbed by `eps`.
    Perturb { eps: f64 },
}

impl Default for Degeneracy {
    fn default() -> Self {
        Self::PhaseShift { delta: 1e-3 }
    }
}

/// Truncation of the ladder products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// This many factors per ladder group, in spiral order.
    Factors(usize),
    /// Each ladder group as one closed-form product.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizeOptions {
    pub truncation: Truncation,
    pub degeneracy: Degeneracy,
    pub which: Which,
    /// Frequencies `ω` of the residual grid `z = iω`; empty selects the default grid.
    pub grid: Vec<f64>,
    /// Dispersion of the remainder above which a warning is recorded.
    pub dispersion_warning: f64,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        Self {
            truncation: Truncation::Factors(6),
            degeneracy: Degeneracy::default(),
            which: Which::Exact,
            grid: Vec::new(),
            dispersion_warning: 1e-5,
        }
    }
}

/// `points` frequencies evenly spread over `[−4π/base, 4π/base]`.
pub fn default_grid(base_period: f64, points: usize) -> Vec<f64> {
    let w = 4.0 * PI / base_period;
    (0..points).map(|k| -w + 2.0 * w * k as f64 / (points - 1).max(1) as f64).collect()
}

/// Grid error of a truncated product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    /// Ladder factors per group (`None` for closed-form ladders).
    pub per_group: Option<usize>,
    pub factors: usize,
    pub max_rel_error: f64,
    pub b_dispersion: f64,
}

/// Diagnostics of a closed-form ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderCheck {
    pub zm: C64,
    pub kind: LadderKind,
    pub projector_drift: f64,
    /// Truncated product over the member positions against the sinh oracle, when the
    /// oracle applies.
    pub oracle_agreement: Option<f64>,
}

/// Outcome of a factorization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CascadeResult {
    /// Terms in detachment order.
    pub terms: Vec<CascadeTerm>,
    #[serde(with = "crate::io::cmat")]
    pub b: CMat,
    pub b_dispersion: f64,
    pub residual_profile: Vec<ProfileEntry>,
    pub diagnostics: Vec<RemovabilityReport>,
    pub ladder_checks: Vec<LadderCheck>,
    pub warnings: Vec<String>,
    pub r0: f64,
}

impl CascadeResult {
    /// `B P_K(z) ⋯ P_1(z)`.
    pub fn eval(&self, z: C64) -> CMat {
        let mut m = self.b.clone();
        for t in self.terms.iter().rev() {
            m *= t.eval(z);
        }
        m
    }

    /// Conjugated terms `B P_k B⁻¹` in left-to-right product order, so that the
    /// reconstruction is `∏ P'(z) · B`.
    pub fn product_form(&self) -> Vec<CascadeTerm> {
        self.terms.iter().rev().map(|t| t.conjugated(&self.b)).collect()
    }

    /// `(J-unitarity, doubled-up)` residuals of `B`.
    pub fn b_structure(&self) -> (f64, f64) {
        let j = is_j_unitary(&self.b, f64::INFINITY).map(|r| r.residual).unwrap_or(f64::INFINITY);
        let d = fro(&(&self.b - sigma_conj(&self.b, Layout::Interleaved)));
        (j, d)
    }

    pub fn factor_count(&self) -> usize {
        self.terms.len()
    }
}

/// Averages `R(iω)` over eight points of the imaginary axis spanning one period, and
/// returns the relative spread.
pub fn estimate_b(r: &Remainder, period: f64) -> Result<(CMat, f64)> {
    let pts: Vec<C64> = (0..8).map(|k| c(0.0, period * (k as f64 - 3.5) / 8.0)).collect();
    let vals = pts.iter().map(|&z| r.eval(z)).collect::<Result<Vec<_>>>()?;
    let n = vals[0].nrows();
    let mut b = CMat::zeros(n, n);
    for v in &vals {
        b += v;
    }
    b /= c(vals.len() as f64, 0.0);
    let nb = fro(&b).max(1e-300);
    let disp = vals.iter().map(|v| fro(&(v - &b))).fold(0.0, f64::max) / nb;
    Ok((b, disp))
}

/// Pointwise relative error of `recon` against `target` along `z = iω`, after the
/// constant prefactor `C = target(0) recon(0)⁻¹` is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridComparison {
    pub omegas: Vec<f64>,
    pub errors: Vec<f64>,
    #[serde(with = "crate::io::cmat")]
    pub prefactor: CMat,
    pub max_rel_error: f64,
}

pub fn compare_on_grid(
    target: &dyn Fn(C64) -> Result<CMat>,
    recon: &dyn Fn(C64) -> CMat,
    omegas: &[f64],
) -> Result<GridComparison> {
    let origin = c(0.0, 0.0);
    let prefactor = target(origin)?
        * crate::linalg::inverse(&recon(origin))
            .ok_or(Error::Singular { op: "compare_on_grid", detail: "reconstruction singular at the origin".into() })?;
    let mut kept = Vec::new();
    let mut errors = Vec::new();
    for &w in omegas {
        let z = c(0.0, w);
        let t = match target(z) {
            Ok(t) => t,
            Err(Error::PoleProximity { .. }) => {
                log::warn!("skipping ω = {w}: inside a pole guard");
                continue;
            }
            Err(e) => return Err(e),
        };
        let r = &prefactor * recon(z);
        kept.push(w);
        errors.push(fro(&(&t - r)) / fro(&t).max(1e-300));
    }
    let max_rel_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(GridComparison { omegas: kept, errors, prefactor, max_rel_error })
}

/// Null vector and null space of `R(z)`.
fn null_data(r: &Remainder, z: C64) -> Result<(CVec, CMat)> {
    let m = r.eval(z)?;
    let d = svd(&m);
    let k = d.s.len();
    let top = d.s[0].max(1.0);
    let dim = (0..k).filter(|&i| d.s[i] <= SECOND_SIGMA_TOL * top).count().max(1);
    Ok((d.v.column(k - 1).into_owned(), d.v.columns(k - dim, dim).into_owned()))
}

fn complex_term(r: &Remainder, zero: C64, multiplicity: usize, deg: Degeneracy) -> Result<CanonicalFactor> {
    let (v, space) = null_data(r, zero)?;
    let double = multiplicity >= 2 || space.ncols() >= 2;
    if !double {
        return build_complex_factor(zero, &v);
    }
    match deg {
        Degeneracy::Perturb { eps } => {
            let mut x = perturb_eigenvector(&v, eps);
            if j_norm(&x).re < 0.0 {
                x = sigma_bar(&x);
            }
            build_modified_degenerate_factor(zero, &v_from_vector(&x)?)
        }
        Degeneracy::PhaseShift { .. } => Err(Error::Degenerate {
            op: "factorize",
            detail: format!("zero {zero} is still double after the loop phase shift; increase δ or use the perturbation strategy"),
        }),
    }
}

fn item_term(r: &Remainder, item: &PlanItem, deg: Degeneracy) -> Result<CanonicalFactor> {
    match *item {
        PlanItem::Complex { zero, multiplicity } => complex_term(r, zero, multiplicity, deg),
        PlanItem::RealPair { z1, z2 } => {
            let (v1, _) = null_data(r, c(z1, 0.0))?;
            let (v2, _) = null_data(r, c(z2, 0.0))?;
            build_real_factor(z1, z2, &v1, &v2)
        }
        PlanItem::RealDegenerate { zero } => {
            let (_, space) = null_data(r, c(zero, 0.0))?;
            if space.ncols() < 2 {
                return Err(Error::Degenerate {
                    op: "factorize",
                    detail: format!("real zero {zero} was flagged double but has a one-dimensional null space"),
                });
            }
            let (a, b) = real_pair_from_eigenspace(&space)?;
            build_real_factor(zero, zero, &a, &b)
        }
    }
}

/// Exact zero of ladder `fam` near member `n`, located in a box of half-width `half`.
fn locate_member(net: &DelayNetwork, fam: &StaticFamily, n: i64, half: f64, which: Which) -> Result<(C64, usize)> {
    let seed = fam.member(n);
    if which == Which::Static {
        return Ok((seed, fam.multiplicity));
    }
    let target = |z: C64| net.zero_target(z, which);
    let mut h = half;
    let mut last = None;
    for _ in 0..3 {
        match find_roots(&target, &Rect::around(seed, h), Polish::Muller, &ScanOptions::default()) {
            Ok((roots, _)) => {
                let total: usize = roots.iter().map(|r| r.multiplicity).sum();
                if roots.len() == 1 && total == fam.multiplicity {
                    return Ok((roots[0].z, total));
                }
                return Err(Error::Correspondence {
                    op: "locate_member",
                    detail: format!("{} zero(s) near static member {seed}, expected multiplicity {}", total, fam.multiplicity),
                });
            }
            Err(e @ (Error::NearBoundary { .. } | Error::Resolution { .. })) => {
                last = Some(e);
                h *= 1.07;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("attempted"))
}

enum Step {
    Item(PlanItem),
    Member { group: usize, n: i64, position: C64, multiplicity: usize, round: usize },
    Closed { group: usize, probes: Vec<(i64, C64)> },
}

fn step_zeros(s: &Step) -> Vec<C64> {
    match s {
        Step::Item(i) => i.zeros(),
        Step::Member { position, .. } => vec![*position, position.conj()],
        Step::Closed { probes, .. } => probes.iter().flat_map(|p| [p.1, p.1.conj()]).collect(),
    }
}

fn projector(v: &CMat) -> CMat {
    v * v_flat(v)
}

/// Builds the closed-form product for one ladder group from the current remainder.
fn closed_term(
    r: &Remainder,
    group: &LadderGroup,
    probes: &[(i64, C64)],
    deg: Degeneracy,
) -> Result<(LadderFactor, LadderCheck)> {
    let fam = &group.family;
    for &(n, z) in probes {
        if (z - fam.member(n)).norm() > 1e-8 * (1.0 + z.norm()) {
            return Err(Error::Correspondence {
                op: "factorize",
                detail: format!("closed-form ladder needs exact zeros on the static ladder; member {n} is at {z}, static {}", fam.member(n)),
            });
        }
    }
    let (kind, v, zm) = if !group.self_conjugate && fam.multiplicity == 1 {
        let f = complex_term(r, probes[0].1, 1, deg)?;
        (LadderKind::Diagonal, f.v.clone(), f.roots[0])
    } else if group.real_base() && fam.multiplicity == 2 {
        let f = item_term(r, &PlanItem::RealDegenerate { zero: probes[0].1.re }, deg)?;
        (LadderKind::Scalar, f.v.clone(), c(fam.base.re, 0.0))
    } else {
        return Err(Error::Unsupported {
            op: "factorize",
            detail: format!("no closed form for a ladder at {} with multiplicity {}", fam.base, fam.multiplicity),
        });
    };
    let p0 = projector(&v);
    let mut drift: f64 = 0.0;
    for &(_, z) in &probes[1..] {
        let d = match kind {
            LadderKind::Diagonal => {
                let f = complex_term(r, z, 1, deg)?;
                // The swap to the conjugate ladder must agree with member 0.
                let zf = if (f.roots[0] - z).norm() < (f.roots[0] - z.conj()).norm() { z } else { z.conj() };
                let zref = if (zm - probes[0].1).norm() < 1e-12 { z } else { z.conj() };
                if (zf - zref).norm() > 1e-9 {
                    f64::INFINITY
                } else {
                    fro(&(projector(&f.v) - &p0))
                }
            }
            LadderKind::Scalar => {
                let (_, space) = null_data(r, z)?;
                fro(&(&space - &p0 * &space))
            }
        };
        drift = drift.max(d);
    }
    if drift > 1e-8 * (1.0 + fro(&p0)) {
        return Err(Error::Periodicity {
            op: "factorize",
            detail: format!("projector drift {drift:.3e} along the ladder at {}; use a truncated product", fam.base),
        });
    }
    let oracle_agreement = (kind == LadderKind::Diagonal)
        .then(|| {
            let z = c(0.37, 0.21);
            let mut prod = c(1.0, 0.0);
            for n in -50..=50_i64 {
                let zn = zm + c(0.0, fam.period * n as f64);
                prod *= (z - zn) / (z + zn.conj());
            }
            static_sinh_oracle(zm, fam.period, z, 50).ok().map(|(t, _)| (t - prod).norm())
        })
        .flatten();
    Ok((LadderFactor { kind, v, zm, period: fam.period }, LadderCheck { zm, kind, projector_drift: drift, oracle_agreement }))
}

fn detachment_rho(zeros: &[C64], landmarks: &[C64], families: &[StaticFamily]) -> f64 {
    let mut d = f64::INFINITY;
    for &z in zeros {
        let tiny = 1e-9 * (1.0 + z.norm());
        for f in families {
            for g in [*f, f.conjugated(), f.reflected(), f.conjugated().reflected()] {
                let dist = g.distance(z);
                if dist > tiny {
                    d = d.min(dist);
                }
            }
        }
        for &l in landmarks {
            let dist = (z - l).norm();
            if dist > 1e-9 * (1.0 + z.norm()) {
                d = d.min(dist);
            }
            let mirror = (z + l.conj()).norm();
            if mirror > 1e-9 * (1.0 + z.norm()) {
                d = d.min(mirror);
            }
        }
        d = d.min(2.0 * z.re.abs().max(1e-300));
    }
    (0.2 * d).min(1e-2)
}

/// Detaches the planned factors from the closed loop of `net`.
pub fn factorize(net: &DelayNetwork, plan: &FactorizationPlan, opts: &FactorizeOptions) -> Result<CascadeResult> {
    let which = opts.which;
    let sep = ladder_separation(&plan.ladders.iter().flat_map(|g| [g.family, g.family.conjugated()]).collect::<Vec<_>>());
    let half = (0.45 * sep).min(0.25 * net.period());

    let mut steps: Vec<Step> = plan.inner.iter().cloned().map(Step::Item).collect();
    match opts.truncation {
        Truncation::Factors(k) => {
            for round in 0..k {
                for (gi, g) in plan.ladders.iter().enumerate() {
                    let n = g.spiral(k)[round];
                    let (position, multiplicity) = match g.member(n) {
                        Some(m) => (m.position, m.multiplicity),
                        None => locate_member(net, &g.family, n, half, which)?,
                    };
                    steps.push(Step::Member { group: gi, n, position, multiplicity, round });
                }
            }
        }
        Truncation::ClosedForm => {
            for (gi, g) in plan.ladders.iter().enumerate() {
                let mut probes = Vec::new();
                for n in g.spiral(3) {
                    let pos = match g.member(n) {
                        Some(m) => m.position,
                        None => locate_member(net, &g.family, n, half, which)?.0,
                    };
                    probes.push((n, pos));
                }
                steps.push(Step::Closed { group: gi, probes });
            }
        }
    }

    let landmarks: Vec<C64> = steps.iter().flat_map(step_zeros).collect();
    let families: Vec<StaticFamily> = plan.ladders.iter().map(|g| g.family).collect();

    let mut rem = Remainder::from_network(net, which);
    let mut diagnostics = Vec::new();
    let mut ladder_checks = Vec::new();
    let mut rounds = Vec::new();
    for (idx, step) in steps.iter().enumerate() {
        let term = match step {
            Step::Item(item) => CascadeTerm::Factor(item_term(&rem, item, opts.degeneracy)?),
            Step::Member { group, n, position, multiplicity, .. } => {
                let g = &plan.ladders[*group];
                let f = if g.real_base() && *n == 0 {
                    item_term(&rem, &PlanItem::RealDegenerate { zero: position.re }, opts.degeneracy)?
                } else {
                    complex_term(&rem, *position, *multiplicity, opts.degeneracy)?
                };
                CascadeTerm::Factor(f)
            }
            Step::Closed { group, probes } => {
                let (l, check) = closed_term(&rem, &plan.ladders[*group], probes, opts.degeneracy)?;
                ladder_checks.push(check);
                CascadeTerm::Ladder(l)
            }
        };
        let rho = detachment_rho(&term.check_zeros(), &landmarks, &families);
        let (next, report) = detach(&rem, &term, rho).map_err(|e| match e {
            Error::Removability { op, detail, .. } => Error::Removability { op, step: idx, detail },
            other => other,
        })?;
        log::debug!("step {idx}: detached zeros {:?} (growth {:.3}, decay {:.3})", report.zeros, report.growth, report.decay);
        rem = next;
        diagnostics.push(report);
        rounds.push(match step {
            Step::Member { round, .. } => Some(*round),
            _ => None,
        });
    }

    let (b, b_dispersion) = estimate_b(&rem, net.period())?;
    let mut warnings = Vec::new();
    if b_dispersion > opts.dispersion_warning {
        warnings.push(format!(
            "remainder dispersion {b_dispersion:.3e} exceeds {:.1e}; the truncation is short",
            opts.dispersion_warning
        ));
    }

    let grid = if opts.grid.is_empty() { default_grid(net.delays().base_period, 401) } else { opts.grid.clone() };
    let target_net = net.clone();
    let target = move |z: C64| target_net.eval(z, which);
    let mut profile = Vec::new();
    let inner_count = plan.inner.len();
    let mut checkpoints: Vec<(Option<usize>, usize)> = Vec::new();
    match opts.truncation {
        Truncation::Factors(k) if !plan.ladders.is_empty() => {
            let mut per = 1;
            while per < k {
                checkpoints.push((Some(per), inner_count + rounds.iter().filter(|r| matches!(r, Some(x) if *x < per)).count()));
                per *= 2;
            }
            checkpoints.push((Some(k), rem.terms().len()));
        }
        _ => checkpoints.push((None, rem.terms().len())),
    }
    for (per_group, len) in checkpoints {
        let prefix = rem.prefix(len);
        let (bk, disp) = estimate_b(&prefix, net.period())?;
        let terms = prefix.terms().to_vec();
        let recon = |z: C64| {
            let mut m = bk.clone();
            for t in terms.iter().rev() {
                m *= t.eval(z);
            }
            m
        };
        let cmp = compare_on_grid(&target, &recon, &grid)?;
        profile.push(ProfileEntry { per_group, factors: len, max_rel_error: cmp.max_rel_error, b_dispersion: disp });
    }

    Ok(CascadeResult {
        terms: rem.terms().to_vec(),
        b,
        b_dispersion,
        residual_profile: profile,
        diagnostics,
        ladder_checks,
        warnings,
        r0: plan.r0,
    })
}

/// Factorization of the static surrogate with closed-form ladders.
pub fn static_factorize(net: &DelayNetwork, truncation: Truncation) -> Result<CascadeResult> {
    let fams = net.static_zero_families()?;
    let plan = plan_static(&fams)?;
    let opts = FactorizeOptions { truncation, which: Which::Static, ..FactorizeOptions::default() };
    factorize(net, &plan, &opts)
}

/// Zero records of a rational transfer function, with null vectors.
pub fn finite_zero_records(t: &RationalTf) -> Result<Vec<ZeroPoleRecord>> {
    let zs = t.zeros()?;
    let mut groups: Vec<(C64, usize)> = Vec::new();
    for z in zs {
        if let Some(g) = groups.iter_mut().find(|g| (g.0 - z).norm() < 1e-6 * (1.0 + z.norm())) {
            g.1 += 1;
        } else {
            groups.push((z, 1));
        }
    }
    let mut out = Vec::new();
    for (mut z, m) in groups {
        if z.im.abs() <= 1e-9 * (1.0 + z.norm()) {
            z = c(z.re, 0.0);
        }
        let mut rec = ZeroPoleRecord::new(z, Kind::Zero, Which::Exact, m);
        let d = svd(&t.eval(z)?);
        let k = d.s.len();
        rec.eigenvector = d.v.column(k - 1).iter().copied().collect();
        rec.residual = d.s[k - 1];
        let top = d.s[0].max(1e-300);
        let dim = (0..k).filter(|&i| d.s[i] <= SECOND_SIGMA_TOL * top).count();
        if dim >= 2 {
            rec.eigenspace = (k - dim..k).map(|j| d.v.column(j).iter().copied().collect()).collect();
        }
        out.push(rec);
    }
    out.sort_by(|a, b| a.position.im.total_cmp(&b.position.im).then(a.position.re.total_cmp(&b.position.re)));
    Ok(out)
}

/// Complete factorization of a delay-free rational transfer function.
pub fn finite_factorize(t: &RationalTf, degeneracy: Degeneracy) -> Result<CascadeResult> {
    let recs = finite_zero_records(t)?;
    let plan = plan_order(&recs, &[], 0.0, None)?;
    let landmarks: Vec<C64> = plan.inner.iter().flat_map(|i| i.zeros()).collect();
    let mut rem = Remainder::from_tf(t);
    let mut diagnostics = Vec::new();
    for (idx, item) in plan.inner.iter().enumerate() {
        let term = CascadeTerm::Factor(item_term(&rem, item, degeneracy)?);
        let rho = detachment_rho(&term.check_zeros(), &landmarks, &[]);
        let (next, report) = detach(&rem, &term, rho).map_err(|e| match e {
            Error::Removability { op, detail, .. } => Error::Removability { op, step: idx, detail },
            other => other,
        })?;
        rem = next;
        diagnostics.push(report);
    }
    let scale = 1.0 + t.poles().iter().map(|p| p.norm()).fold(0.0, f64::max);
    let (b, b_dispersion) = estimate_b(&rem, 4.0 * scale)?;
    Ok(CascadeResult {
        terms: rem.terms().to_vec(),
        b,
        b_dispersion,
        residual_profile: Vec::new(),
        diagnostics,
        ladder_checks: Vec::new(),
        warnings: Vec::new(),
        r0: plan.r0,
    })
}

/// Scan, plan, factorization and the comparison with the original closed loop.
#[derive(Debug, Clone)]
pub struct NetworkFactorization {
    /// The network actually factorized (phase-shifted when that strategy was used).
    pub network: DelayNetwork,
    pub phase_shifted: bool,
    pub scan: Scan,
    pub plan: FactorizationPlan,
    pub result: CascadeResult,
    /// Reconstruction against the unmodified `T̃` on the residual grid.
    pub comparison: GridComparison,
}

fn has_degeneracy(net: &DelayNetwork, scan: &Scan) -> Result<bool> {
    let statics = net.static_zero_families()?;
    Ok(statics.iter().any(|f| f.multiplicity > 1) || scan.zeros().any(|r| r.degenerate))
}

/// Scans `|Im z| ≤ window_im`, plans the order and factorizes. The loop phase shift
/// is applied only when degenerate zeros are present.
pub fn factorize_network(net: &DelayNetwork, window_im: f64, opts: &FactorizeOptions) -> Result<NetworkFactorization> {
    let which = opts.which;
    let mut work = net.clone();
    let mut sc = scan(&work, window_im, which)?;
    let mut phase_shifted = false;
    if let Degeneracy::PhaseShift { delta } = opts.degeneracy {
        if delta != 0.0 && has_degeneracy(&work, &sc)? {
            work = net.with_loop_phase(delta)?;
            sc = scan(&work, window_im, which)?;
            phase_shifted = true;
        }
    }
    let families = work.static_zero_families()?;
    let plan = plan_order(&sc.records, &families, sc.window_im, None)?;
    let mut result = factorize(&work, &plan, opts)?;
    if phase_shifted {
        if let Degeneracy::PhaseShift { delta } = opts.degeneracy {
            result.warnings.push(format!("degenerate zeros split with a loop phase shift δ = {delta:e}"));
        }
    }
    let grid = if opts.grid.is_empty() { default_grid(net.delays().base_period, 401) } else { opts.grid.clone() };
    let original = net.clone();
    let comparison = compare_on_grid(&move |z| original.eval(z, which), &|z| result.eval(z), &grid)?;
    Ok(NetworkFactorization { network: work, phase_shifted, scan: sc, plan, result, comparison })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::ExampleParams;

    #[test]
    fn oracle_vanishes_at_base() {
        let zm = c(-0.5, 0.8);
        let (t, cl) = static_sinh_oracle(zm, PI, zm, 10).unwrap();
        assert_eq!(t, c(0.0, 0.0));
        assert_eq!(cl, c(0.0, 0.0));
    }

    #[test]
    fn oracle_truncation_error() {
        let (t, cl) = static_sinh_oracle(c(-0.5, 0.8), PI, c(1.0, 1.0), 2000).unwrap();
        assert!((t - cl).norm() <= 1e-3);
    }

    #[test]
    fn oracle_rejects_bad_base() {
        assert!(static_sinh_oracle(c(0.1, 0.5 * PI), PI, c(1.0, 0.0), 5).is_err());
        assert!(static_sinh_oracle(c(0.1, 0.0), PI, c(1.0, 0.0), 5).is_err());
        let zm = c(0.2, 0.4);
        assert!(matches!(static_sinh_oracle(zm, PI, -zm.conj(), 5), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn closed_form_limits() {
        let zm = c(-0.5, 0.8);
        let right = ladder_product(c(400.0, 0.3), zm, PI);
        assert!((right - c((-2.0 * zm.re).exp(), 0.0)).norm() < 1e-12);
        let left = ladder_product(c(-400.0, 0.3), zm, PI);
        assert!((left - c((2.0 * zm.re).exp(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn detaching_a_factor_from_itself_leaves_identity() {
        let v = CVec::from_vec(vec![c(1.0, 0.2), c(0.3, -0.1), c(0.2, 0.4), c(-0.1, 0.0)]);
        let f = build_complex_factor(c(0.4, 0.9), &v).unwrap();
        let ff = f.clone();
        let rem = Remainder::new(Arc::new(move |z| Ok(ff.eval(z))));
        let (out, report) = detach(&rem, &CascadeTerm::Factor(f), 1e-2).unwrap();
        assert!(report.removable);
        for k in 0..20 {
            let z = c(0.1 * k as f64 - 1.0, 0.37 * k as f64 - 3.0);
            assert!(fro(&(out.eval(z).unwrap() - eye(4))) < 1e-10);
        }
    }

    fn squeezer_tf() -> RationalTf {
        RationalTf::from_slh(&ExampleParams::default().squeezer().unwrap()).unwrap()
    }

    #[test]
    fn squeezer_factorizes_exactly() {
        let t = squeezer_tf();
        let r = finite_factorize(&t, Degeneracy::default()).unwrap();
        assert_eq!(r.terms.len(), 1);
        let rem = {
            let mut rem = Remainder::from_tf(&t);
            rem.terms = r.terms.clone();
            rem
        };
        for z in [c(0.1, 2.0), c(-1.3, 0.4), c(2.0, -1.0), c(0.0, 7.0)] {
            assert!(fro(&(rem.eval(z).unwrap() - &r.b)) < 1e-8);
            assert!(fro(&(r.eval(z) - t.eval(z).unwrap())) < 1e-8);
        }
    }

    #[test]
    fn wrong_eigenvector_is_refused() {
        let t = squeezer_tf();
        // A valid real-pair factor at the right zeros but with unrelated eigenvectors.
        let v1 = CVec::from_vec(vec![c(1.0, 0.7), c(1.0, -0.7)]);
        let v2 = CVec::from_vec(vec![c(0.2, 1.0), c(0.2, -1.0)]);
        let f = build_real_factor(0.3, 0.7, &v1, &v2).unwrap();
        let term = CascadeTerm::Factor(f);
        let report = check_removable(&Remainder::from_tf(&t).with(term.clone()), &term, 1e-2).unwrap();
        assert!(!report.removable);
        assert!(matches!(detach(&Remainder::from_tf(&t), &term, 1e-2), Err(Error::Removability { .. })));
    }

    #[test]
    fn spiral_order() {
        let g = LadderGroup {
            family: StaticFamily { base: c(0.1, 0.3), period: PI, multiplicity: 1 },
            self_conjugate: false,
            members: Vec::new(),
            absorbed: Vec::new(),
            window_im: 0.0,
        };
        assert_eq!(g.spiral(6), vec![0, 1, -1, 2, -2, 3]);
        let s = LadderGroup { self_conjugate: true, family: StaticFamily { base: c(0.1, 0.0), period: PI, multiplicity: 2 }, ..g };
        assert_eq!(s.spiral(4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn default_grid_spans_four_periods() {
        let g = default_grid(2.0, 401);
        assert_eq!(g.len(), 401);
        assert!((g[0] + 2.0 * PI).abs() < 1e-12 && (g[400] - 2.0 * PI).abs() < 1e-12);
        assert!(g[200].abs() < 1e-12);
    }
}
