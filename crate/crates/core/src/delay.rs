//! Delayed feedback: `T̃(z)`, the static surrogate `S̃(z)`, loop determinants,
//! the pole strip and the standing-assumption checks.
//!
//! Port order is interleaved with the `N` external modes first and the `M`
//! internal (looped) modes last.

use crate::algebra::{j_matrix, Layout};
use crate::error::{Assumption, Error, Result};
use crate::linalg::{c, det, eigenvalues, eye, fro, from_blocks, inverse, sigma_max, singular_values, solve, zeros, CMat, C64};
use crate::lti::{j_unitary_residual, series, RationalTf};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which transfer function a query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    /// The delayed-feedback function `T̃`.
    Exact,
    /// The static surrogate `S̃` built from `S = T(∞)`.
    Static,
}

/// Loop delays with a common base period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySpec {
    pub delays: Vec<f64>,
    pub base_period: f64,
}

impl DelaySpec {
    /// Accepts any positive delays; commensurability is measured separately.
    pub fn new(delays: Vec<f64>, base_period: f64) -> Result<Self> {
        if delays.is_empty() || delays.iter().any(|&t| !(t > 0.0) || !t.is_finite()) || !(base_period > 0.0) {
            return Err(Error::Invalid {
                op: "DelaySpec::new",
                detail: format!("delays {delays:?} with base period {base_period} must be positive"),
            });
        }
        Ok(Self { delays, base_period })
    }

    /// Like [`DelaySpec::new`] but rejects incommensurate delays.
    pub fn checked(delays: Vec<f64>, base_period: f64) -> Result<Self> {
        let d = Self::new(delays, base_period)?;
        let r = d.commensurability_residual();
        if r > 1e-12 {
            return Err(Error::AssumptionViolated {
                op: "DelaySpec::checked",
                assumption: Assumption::Commensurate,
                detail: format!("delays {:?} are not multiples of {} (residual {r:.3e})", d.delays, d.base_period),
            });
        }
        Ok(d)
    }

    /// Picks the largest base period `min(delays)/k`, `k ≤ 64`, that makes every delay an
    /// integer multiple. Falls back to the smallest delay.
    pub fn infer(delays: Vec<f64>) -> Result<Self> {
        let tmin = delays.iter().copied().fold(f64::INFINITY, f64::min);
        let probe = Self::new(delays.clone(), tmin.max(f64::MIN_POSITIVE))?;
        for k in 1..=64 {
            let cand = Self { base_period: tmin / k as f64, ..probe.clone() };
            if cand.commensurability_residual() <= 1e-12 {
                return Ok(cand);
            }
        }
        Ok(probe)
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Largest relative deviation of `delay / base_period` from an integer.
    pub fn commensurability_residual(&self) -> f64 {
        self.delays
            .iter()
            .map(|&t| {
                let q = t / self.base_period;
                (q - q.round()).abs() / q.round().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Integer multiples `k_j` with `T_j = k_j · base`.
    pub fn multiples(&self) -> Vec<usize> {
        self.delays.iter().map(|&t| (t / self.base_period).round().max(1.0) as usize).collect()
    }

    /// Imaginary-direction period `2π / base`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.base_period
    }

    pub fn t_min(&self) -> f64 {
        self.delays.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn t_max(&self) -> f64 {
        self.delays.iter().copied().fold(0.0, f64::max)
    }

    /// Same delays scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { delays: self.delays.iter().map(|t| t * factor).collect(), base_period: self.base_period * factor }
    }
}

/// `E(z) = diag(e^{−T₁z}, e^{−T₁z}, …, e^{−T_M z}, e^{−T_M z})`.
pub fn delay_operator(d: &DelaySpec, z: C64) -> CMat {
    let mut e = zeros(2 * d.len(), 2 * d.len());
    for (j, &t) in d.delays.iter().enumerate() {
        let v = (-z * t).exp();
        e[(2 * j, 2 * j)] = v;
        e[(2 * j + 1, 2 * j + 1)] = v;
    }
    e
}

/// The four blocks of a partitioned port matrix.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub t1: CMat,
    pub t2: CMat,
    pub t3: CMat,
    pub t4: CMat,
}

impl Blocks {
    pub fn split(m: &CMat, ext: usize) -> Self {
        let n = m.nrows();
        let int = n - ext;
        Self {
            t1: m.view((0, 0), (ext, ext)).into_owned(),
            t2: m.view((0, ext), (ext, int)).into_owned(),
            t3: m.view((ext, 0), (int, ext)).into_owned(),
            t4: m.view((ext, ext), (int, int)).into_owned(),
        }
    }
}

/// Real-part bounds for the poles of `T̃` generated by the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStrip {
    /// Bounds used for scanning: the analytic bounds joined with the open-system
    /// poles and widened by a margin.
    pub c_low: f64,
    pub c_high: f64,
    /// Bounds from singular values of `T₄` alone.
    pub analytic_low: f64,
    pub analytic_high: f64,
    /// Tightest interval containing the static pole ladders and the open-system poles.
    pub tightened_low: f64,
    pub tightened_high: f64,
    pub period: f64,
}

impl SearchStrip {
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.c_low && z.re <= self.c_high
    }
}

/// One ladder `z_m + iPn` of static roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticFamily {
    /// Representative with `0 ≤ Im < P`.
    pub base: C64,
    pub period: f64,
    pub multiplicity: usize,
}

impl StaticFamily {
    pub fn member(&self, n: i64) -> C64 {
        self.base + c(0.0, self.period * n as f64)
    }

    /// Index `n` of the member nearest to `z`.
    pub fn index_near(&self, z: C64) -> i64 {
        ((z.im - self.base.im) / self.period).round() as i64
    }

    /// Distance from `z` to the nearest member.
    pub fn distance(&self, z: C64) -> f64 {
        (z - self.member(self.index_near(z))).norm()
    }

    /// The family obtained by `z ↦ −z̄`.
    pub fn reflected(&self) -> Self {
        Self { base: -self.base.conj(), ..*self }
    }

    /// The family obtained by `z ↦ z̄`.
    pub fn conjugated(&self) -> Self {
        let mut im = (-self.base.im).rem_euclid(self.period);
        if (im - self.period).abs() < 1e-12 * self.period {
            im = 0.0;
        }
        Self { base: c(self.base.re, im), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub status: CheckStatus,
    pub measured: Vec<(String, f64)>,
    pub note: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn status(&self, a: Assumption) -> Option<CheckStatus> {
        self.checks.iter().find(|c| c.assumption == a).map(|c| c.status)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }

    pub fn failures(&self) -> Vec<&AssumptionCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect()
    }

    /// First failure that no degeneracy workaround can address.
    pub fn hard_failure(&self) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.status == CheckStatus::Fail && c.assumption != Assumption::Simple)
    }
}

/// Open rational system with its last `M` port modes fed back through delays.
#[derive(Debug, Clone)]
pub struct DelayNetwork {
    open: RationalTf,
    n_ext: usize,
    delays: DelaySpec,
    statics: Blocks,
}

impl DelayNetwork {
    pub fn new(open: RationalTf, n_ext: usize, delays: DelaySpec) -> Result<Self> {
        let m = open.port_modes();
        if n_ext == 0 || n_ext + delays.len() != m {
            return Err(Error::DimensionMismatch {
                op: "DelayNetwork::new",
                detail: format!("{m} port modes cannot split into {n_ext} external and {} delayed", delays.len()),
            });
        }
        let statics = Blocks::split(open.s_inf(), 2 * n_ext);
        Ok(Self { open, n_ext, delays, statics })
    }

    pub fn open(&self) -> &RationalTf {
        &self.open
    }

    pub fn delays(&self) -> &DelaySpec {
        &self.delays
    }

    pub fn n_ext(&self) -> usize {
        self.n_ext
    }

    pub fn n_int(&self) -> usize {
        self.delays.len()
    }

    /// Dimension `2N` of `T̃`.
    pub fn dim(&self) -> usize {
        2 * self.n_ext
    }

    pub fn period(&self) -> f64 {
        self.delays.period()
    }

    pub fn static_blocks(&self) -> &Blocks {
        &self.statics
    }

    pub fn with_delays(&self, delays: DelaySpec) -> Result<Self> {
        Self::new(self.open.clone(), self.n_ext, delays)
    }

    /// Dresses the internal loop with `e^{iδ}` on annihilation and `e^{−iδ}` on creation
    /// components.
    pub fn with_loop_phase(&self, delta: f64) -> Result<Self> {
        if delta == 0.0 {
            return Ok(self.clone());
        }
        let dim = self.open.dim();
        let mut phase = eye(dim);
        for k in self.dim()..dim {
            phase[(k, k)] = if k % 2 == 0 { c(0.0, delta).exp() } else { c(0.0, -delta).exp() };
        }
        let open = series(&RationalTf::constant(&phase)?, &self.open)?;
        Self::new(open, self.n_ext, self.delays.clone())
    }

    pub fn blocks(&self, z: C64, which: Which) -> Result<Blocks> {
        match which {
            Which::Exact => Ok(Blocks::split(&self.open.eval(z)?, self.dim())),
            Which::Static => Ok(self.statics.clone()),
        }
    }

    pub fn delay_operator(&self, z: C64) -> CMat {
        delay_operator(&self.delays, z)
    }

    /// `T̃(z)` for [`Which::Exact`], `S̃(z)` for [`Which::Static`].
    pub fn eval(&self, z: C64, which: Which) -> Result<CMat> {
        let b = self.blocks(z, which)?;
        if z.re >= 0.0 {
            closed_forward(&b, &self.delay_operator(z), z)
        } else {
            closed_backward(&b, &self.delay_operator(-z), z)
        }
    }

    pub fn closed_tf(&self, z: C64) -> Result<CMat> {
        self.eval(z, Which::Exact)
    }

    pub fn static_tf(&self, z: C64) -> Result<CMat> {
        self.eval(z, Which::Static)
    }

    /// Both algebraic forms of the closed loop, for cross-checking.
    pub fn closed_tf_forms(&self, z: C64, which: Which) -> Result<(CMat, CMat)> {
        let b = self.blocks(z, which)?;
        Ok((closed_forward(&b, &self.delay_operator(z), z)?, closed_backward(&b, &self.delay_operator(-z), z)?))
    }

    /// `det(I − T₄(z)E(z))` or `det(I − S₄E(z))`.
    pub fn loop_determinant(&self, z: C64, which: Which) -> Result<C64> {
        let b = self.blocks(z, which)?;
        let m = b.t4.nrows();
        Ok(det(&(eye(m) - &b.t4 * self.delay_operator(z))))
    }

    /// Entire function whose zeros are the poles of the closed loop:
    /// `det(zI − A)·f_T(z)` or `f_S(z)`.
    pub fn pole_target(&self, z: C64, which: Which) -> C64 {
        det(&self.pencil(z, which, false))
    }

    /// Entire function whose zeros are the zeros of the closed loop:
    /// `det(zI − A)·f_T(z)·det T̃(z)` or `f_S(z)·det S̃(z)`.
    pub fn zero_target(&self, z: C64, which: Which) -> C64 {
        det(&self.pencil(z, which, true))
    }

    /// The loop pencil `[[zI − A, −B₄E], [−C₄, I − D₄₄E]]`, bordered by the external
    /// input/output rows when `bordered` is set.
    fn pencil(&self, z: C64, which: Which, bordered: bool) -> CMat {
        let e = self.delay_operator(z);
        let ext = self.dim();
        let full = self.open.dim();
        let int = full - ext;
        let (n, a, bp, cp, d) = match which {
            Which::Exact => {
                let ss = self.open.realization();
                (ss.state_dim(), ss.a.clone(), self.open.b_port().clone(), self.open.c_port().clone(), self.open.s_inf().clone())
            }
            Which::Static => (0, zeros(0, 0), zeros(0, full), zeros(full, 0), self.open.s_inf().clone()),
        };
        let b1 = bp.columns(0, ext).into_owned();
        let b4 = bp.columns(ext, int) * &e;
        let c1 = cp.rows(0, ext).into_owned();
        let c4 = cp.rows(ext, int).into_owned();
        let bl = Blocks::split(&d, ext);
        let za = eye(n) * z - a;
        let loop_ = eye(int) - &bl.t4 * &e;
        if !bordered {
            return from_blocks(&[vec![&za, &(-&b4)], vec![&(-&c4), &loop_]]);
        }
        let d14e = &bl.t2 * &e;
        from_blocks(&[
            vec![&za, &(-&b4), &(-b1)],
            vec![&(-c4), &loop_, &(-&bl.t3)],
            vec![&c1, &d14e, &bl.t1],
        ])
    }

    /// Pole strip from singular-value bounds on `T₄`.
    pub fn compute_strip(&self) -> Result<SearchStrip> {
        let s4 = &self.statics.t4;
        let sv = singular_values(s4);
        let smin_s = *sv.last().unwrap_or(&0.0);
        if smin_s < 1e-10 {
            return Err(Error::AssumptionViolated {
                op: "compute_strip",
                assumption: Assumption::Proper,
                detail: format!("σ_min(S₄) = {smin_s:.3e}"),
            });
        }
        let mut lo = smin_s;
        let mut hi = sv[0];
        let poles = self.open.poles();
        let scale = 1.0 + poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let ymax = (4.0 * self.period()).max(8.0 * scale);
        for &x in &[-1.0, 0.0, 1.0] {
            for k in 0..=400 {
                let y = -ymax + 2.0 * ymax * (k as f64 + 0.37) / 401.0;
                let z = c(x * scale, y);
                if poles.iter().any(|p| (z - p).norm() < 0.5 * scale.min(1.0)) {
                    continue;
                }
                if let Ok(b) = self.blocks(z, Which::Exact) {
                    let s = singular_values(&b.t4);
                    lo = lo.min(*s.last().unwrap());
                    hi = hi.max(s[0]);
                }
            }
        }
        if lo < 1e-10 {
            return Err(Error::AssumptionViolated {
                op: "compute_strip",
                assumption: Assumption::Proper,
                detail: format!("σ_min(T₄) drops to {lo:.3e}"),
            });
        }
        let (tmin, tmax) = (self.delays.t_min(), self.delays.t_max());
        let analytic_low = lo.ln() / if lo <= 1.0 { tmin } else { tmax };
        let analytic_high = hi.ln() / if hi >= 1.0 { tmin } else { tmax };
        let mut low = analytic_low;
        let mut high = analytic_high;
        for p in poles {
            low = low.min(p.re);
            high = high.max(p.re);
        }
        let (mut tl, mut th) = (f64::INFINITY, f64::NEG_INFINITY);
        for f in self.static_pole_families()? {
            tl = tl.min(f.base.re);
            th = th.max(f.base.re);
        }
        for p in poles {
            tl = tl.min(p.re);
            th = th.max(p.re);
        }
        let margin = 0.1 * (high - low).max(1.0 / tmin);
        Ok(SearchStrip {
            c_low: low - margin,
            c_high: high + margin,
            analytic_low,
            analytic_high,
            tightened_low: tl,
            tightened_high: th,
            period: self.period(),
        })
    }

    /// Coefficients of `f_S` as a polynomial in `w = e^{−z·base}` (lowest degree first).
    pub fn static_polynomial(&self) -> Vec<C64> {
        let k = self.delays.multiples();
        let deg: usize = 2 * k.iter().sum::<usize>();
        let npts = deg + 1;
        let s4 = &self.statics.t4;
        let m = s4.nrows();
        let vals: Vec<C64> = (0..npts)
            .map(|s| {
                let w = c(0.0, 2.0 * PI * s as f64 / npts as f64).exp();
                let mut e = zeros(m, m);
                for (j, &kj) in k.iter().enumerate() {
                    let v = w.powu(kj as u32);
                    e[(2 * j, 2 * j)] = v;
                    e[(2 * j + 1, 2 * j + 1)] = v;
                }
                det(&(eye(m) - s4 * e))
            })
            .collect();
        (0..npts)
            .map(|n| {
                let mut acc = c(0.0, 0.0);
                for (s, v) in vals.iter().enumerate() {
                    acc += v * c(0.0, -2.0 * PI * (s * n) as f64 / npts as f64).exp();
                }
                acc / npts as f64
            })
            .collect()
    }

    /// Pole ladders of `S̃` from the roots of the `w`-polynomial.
    pub fn static_pole_families(&self) -> Result<Vec<StaticFamily>> {
        let coef = self.static_polynomial();
        let mut deg = coef.len() - 1;
        let lead_tol = 1e-12 * coef.iter().map(|x| x.norm()).fold(0.0, f64::max);
        while deg > 0 && coef[deg].norm() <= lead_tol {
            deg -= 1;
        }
        if deg == 0 {
            return Ok(Vec::new());
        }
        let mut comp = zeros(deg, deg);
        for i in 0..deg {
            comp[(0, i)] = -coef[deg - 1 - i] / coef[deg];
            if i + 1 < deg {
                comp[(i + 1, i)] = c(1.0, 0.0);
            }
        }
        let roots = eigenvalues(&comp);
        let base = self.delays.base_period;
        let period = self.period();
        // Group coincident roots; a root of multiplicity m is perturbed by about eps^(1/m).
        let mut groups: Vec<(C64, usize)> = Vec::new();
        for w in roots {
            if let Some(g) = groups.iter_mut().find(|g| (g.0 / g.1 as f64 - w).norm() < 1e-5 * w.norm().max(1e-300)) {
                g.0 += w;
                g.1 += 1;
            } else {
                groups.push((w, 1));
            }
        }
        let mut fams: Vec<StaticFamily> = groups
            .into_iter()
            .map(|(sum, mult)| {
                let w = sum / mult as f64;
                let z = -w.ln() / base;
                let mut im = z.im.rem_euclid(period);
                if (period - im).abs() < 1e-12 * period {
                    im = 0.0;
                }
                StaticFamily { base: c(z.re, im), period, multiplicity: mult }
            })
            .collect();
        fams.sort_by(|a, b| a.base.im.total_cmp(&b.base.im).then(a.base.re.total_cmp(&b.base.re)));
        Ok(fams)
    }

    /// Zero ladders of `S̃`: reflections `z ↦ −z̄` of the pole ladders.
    pub fn static_zero_families(&self) -> Result<Vec<StaticFamily>> {
        Ok(self.static_pole_families()?.iter().map(|f| f.reflected()).collect())
    }

    pub fn validate_assumptions(&self) -> AssumptionReport {
        let mut checks = Vec::new();
        let ss = self.open.realization();
        checks.push(AssumptionCheck {
            assumption: Assumption::FiniteDimensional,
            status: CheckStatus::Pass,
            measured: vec![("state_dim".into(), ss.state_dim() as f64)],
            note: "open system given by a finite state-space realization".into(),
        });

        let dbl = ss.doubled_up_residual();
        let mut ju: f64 = 0.0;
        for k in 0..101 {
            let w = -20.0 + 40.0 * (k as f64 + 0.31) / 101.0;
            if let Ok(t) = self.open.eval(c(0.0, w)) {
                ju = ju.max(j_unitary_residual(&t));
            }
        }
        checks.push(AssumptionCheck {
            assumption: Assumption::PhysicallyRealizable,
            status: if dbl <= 1e-8 && ju <= 1e-8 { CheckStatus::Pass } else { CheckStatus::Fail },
            measured: vec![("doubled_up_residual".into(), dbl), ("j_unitary_residual_iw".into(), ju)],
            note: "realization matrices doubled-up, T(iω) J-unitary".into(),
        });

        let smin = |m: &CMat| singular_values(m).last().copied().unwrap_or(0.0);
        let (s2, s3, s4) = (smin(&self.statics.t2), smin(&self.statics.t3), smin(&self.statics.t4));
        let proper_ok = s2 > 1e-8 && s3 > 1e-8 && s4 > 1e-8;
        checks.push(AssumptionCheck {
            assumption: Assumption::Proper,
            status: if proper_ok { CheckStatus::Pass } else { CheckStatus::Fail },
            measured: vec![("sigma_min_S2".into(), s2), ("sigma_min_S3".into(), s3), ("sigma_min_S4".into(), s4)],
            note: if proper_ok { "S₂, S₃, S₄ bounded away from zero".into() } else { "a static block is singular".into() },
        });

        let res = self.delays.commensurability_residual();
        checks.push(AssumptionCheck {
            assumption: Assumption::Commensurate,
            status: if res <= 1e-12 { CheckStatus::Pass } else { CheckStatus::Fail },
            measured: vec![("commensurability_residual".into(), res), ("base_period".into(), self.delays.base_period)],
            note: format!("delays {:?}", self.delays.delays),
        });

        let fams = if proper_ok && res <= 1e-12 { self.static_pole_families().unwrap_or_default() } else { Vec::new() };
        let mut gap = f64::INFINITY;
        for p in &fams {
            for z in fams.iter().map(|f| f.reflected()) {
                gap = gap.min(p.distance(z.base));
            }
        }
        for p in self.open.poles() {
            for q in self.open.poles() {
                gap = gap.min((p + q.conj()).norm());
            }
        }
        checks.push(AssumptionCheck {
            assumption: Assumption::ZeroPoleDisjoint,
            status: if gap > 1e-6 { CheckStatus::Pass } else { CheckStatus::Fail },
            measured: vec![("min_zero_pole_gap".into(), if gap.is_finite() { gap } else { -1.0 })],
            note: "static ladders and open-system poles against their reflections".into(),
        });

        let maxmult = fams.iter().map(|f| f.multiplicity).max().unwrap_or(1);
        let mut min_jnorm = f64::INFINITY;
        for f in &fams {
            if let Ok(s) = self.static_tf(f.reflected().base) {
                let (v, _) = crate::linalg::min_right_singular(&s);
                let jv = crate::algebra::j_left(&CMat::from_column_slice(v.len(), 1, v.as_slice()), Layout::Interleaved);
                let val = (v.adjoint() * jv)[(0, 0)].norm();
                min_jnorm = min_jnorm.min(val);
            }
        }
        let simple = maxmult == 1;
        checks.push(AssumptionCheck {
            assumption: Assumption::Simple,
            status: if !simple {
                CheckStatus::Fail
            } else if min_jnorm < 1e-6 {
                CheckStatus::Warn
            } else {
                CheckStatus::Pass
            },
            measured: vec![
                ("max_static_multiplicity".into(), maxmult as f64),
                ("min_static_eigvec_j_norm".into(), if min_jnorm.is_finite() { min_jnorm } else { -1.0 }),
            ],
            note: if simple {
                "static ladders are simple".into()
            } else {
                "degenerate pole ladder: use the loop phase shift or eigenvector perturbation".into()
            },
        });
        AssumptionReport { checks }
    }
}

fn near_singular(x: &CMat) -> bool {
    let s = singular_values(x);
    let top = s[0].max(1.0);
    *s.last().unwrap() <= 1e-9 * top
}

/// `T₁ + T₂E(I − T₄E)⁻¹T₃`.
fn closed_forward(b: &Blocks, e: &CMat, z: C64) -> Result<CMat> {
    let m = b.t4.nrows();
    let x = eye(m) - &b.t4 * e;
    if near_singular(&x) {
        return Err(Error::PoleProximity { op: "closed_tf", z, pole: z });
    }
    let y = solve(&x, &b.t3).ok_or(Error::PoleProximity { op: "closed_tf", z, pole: z })?;
    Ok(&b.t1 + &b.t2 * e * y)
}

/// `T₁ + T₂(E(−z) − T₄)⁻¹T₃`, given `E(−z)`.
fn closed_backward(b: &Blocks, e_neg: &CMat, z: C64) -> Result<CMat> {
    let x = e_neg - &b.t4;
    if near_singular(&x) {
        return Err(Error::PoleProximity { op: "closed_tf", z, pole: z });
    }
    let y = solve(&x, &b.t3).ok_or(Error::PoleProximity { op: "closed_tf", z, pole: z })?;
    Ok(&b.t1 + &b.t2 * y)
}

/// Limits of `S̃` for `Re z → +∞` and `Re z → −∞`.
pub fn static_limits(n: &DelayNetwork) -> Result<(CMat, CMat)> {
    let s = n.static_blocks();
    let s4i = inverse(&s.t4).ok_or_else(|| Error::AssumptionViolated {
        op: "static_limits",
        assumption: Assumption::Proper,
        detail: "S₄ is singular".into(),
    })?;
    Ok((s.t1.clone(), &s.t1 - &s.t2 * s4i * &s.t3))
}

/// `‖T̃(iω)JT̃(iω)† − J‖` maximised over a grid, skipping guarded points.
pub fn j_unitary_sweep(n: &DelayNetwork, omegas: &[f64]) -> f64 {
    omegas
        .iter()
        .filter_map(|&w| n.closed_tf(c(0.0, w)).ok())
        .map(|t| j_unitary_residual(&t))
        .fold(0.0, f64::max)
}

/// Signature of the closed loop.
pub fn closed_signature(n: &DelayNetwork) -> CMat {
    j_matrix(n.dim(), Layout::Interleaved)
}

/// `‖T̃(z) − S̃(z)‖`.
pub fn static_gap(n: &DelayNetwork, z: C64) -> Result<f64> {
    Ok(fro(&(n.closed_tf(z)? - n.static_tf(z)?)))
}

/// Spectral norm helper re-exported for diagnostics.
pub fn spectral(m: &CMat) -> f64 {
    sigma_max(m)
}
