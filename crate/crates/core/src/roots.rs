//! Zero and pole location by the argument principle.
//!
//! Poles of the closed loop are roots of the entire function
//! `det(zI − A)·det(I − T₄E)` and zeros are roots of the bordered Rosenbrock
//! determinant, so the counting targets never have poles of their own.

use crate::algebra::{j_left, Layout};
use crate::delay::{DelayNetwork, SearchStrip, Which};
use crate::error::{Error, Result};
use crate::linalg::{c, svd, zeros, CMat, CVec, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Self {
        Self { re_lo, re_hi, im_lo, im_hi }
    }

    /// Square of half-width `h` around `center`.
    pub fn around(center: C64, h: f64) -> Self {
        Self::new(center.re - h, center.re + h, center.im - h, center.im + h)
    }

    pub fn width(&self) -> f64 {
        self.re_hi - self.re_lo
    }

    pub fn height(&self) -> f64 {
        self.im_hi - self.im_lo
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> C64 {
        c(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    pub fn expanded(&self, f: f64) -> Self {
        let (dw, dh) = (f * self.width().max(self.height()), f * self.height().max(self.width()));
        Self::new(self.re_lo - dw, self.re_hi + dw, self.im_lo - dh, self.im_hi + dh)
    }

    /// Splits the longer side at `frac`.
    pub fn split(&self, frac: f64) -> (Self, Self) {
        if self.width() >= self.height() {
            let x = self.re_lo + frac * self.width();
            (Self { re_hi: x, ..*self }, Self { re_lo: x, ..*self })
        } else {
            let y = self.im_lo + frac * self.height();
            (Self { im_hi: y, ..*self }, Self { im_lo: y, ..*self })
        }
    }

    fn corners(&self) -> [C64; 4] {
        [c(self.re_lo, self.im_lo), c(self.re_hi, self.im_lo), c(self.re_hi, self.im_hi), c(self.re_lo, self.im_hi)]
    }
}

/// Winding number of a scalar function around a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourCount {
    pub rect: Rect,
    pub winding: i64,
    pub samples_used: usize,
    /// Distance of the accumulated phase (in turns) from the nearest integer.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub samples_per_edge: usize,
    /// Cells below this diameter are reported as clusters.
    pub min_cell: f64,
    /// Cells with one root below this diameter are polished directly.
    pub polish_cell: f64,
    pub dedup: f64,
    pub max_iter: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { samples_per_edge: 48, min_cell: 1e-6, polish_cell: 0.05, dedup: 1e-8, max_iter: 100 }
    }
}

const MAX_STEP: f64 = PI / 3.0;
const MAX_DEPTH: usize = 48;

struct Walker<'a, F: Fn(C64) -> C64> {
    f: &'a F,
    samples: usize,
}

impl<'a, F: Fn(C64) -> C64> Walker<'a, F> {
    fn eval(&mut self, z: C64) -> Result<C64> {
        self.samples += 1;
        let v = (self.f)(z);
        if !(v.re.is_finite() && v.im.is_finite()) || v.norm() == 0.0 {
            return Err(Error::NearBoundary {
                op: "count_in_rectangle",
                z,
                hint: "shift the rectangle boundary".into(),
            });
        }
        Ok(v)
    }

    fn segment(&mut self, a: C64, b: C64, va: C64, vb: C64, depth: usize) -> Result<f64> {
        let d = (vb / va).arg();
        let m = 0.5 * (a + b);
        let vm = self.eval(m)?;
        if d.abs() <= MAX_STEP {
            let d1 = (vm / va).arg();
            let d2 = (vb / vm).arg();
            if (d1 + d2 - d).abs() < 1e-6 && d1.abs() <= MAX_STEP && d2.abs() <= MAX_STEP {
                return Ok(d);
            }
        }
        if depth >= MAX_DEPTH {
            return Err(Error::NearBoundary {
                op: "count_in_rectangle",
                z: m,
                hint: "a root or pole lies on or very near the contour; shift the rectangle boundary".into(),
            });
        }
        Ok(self.segment(a, m, va, vm, depth + 1)? + self.segment(m, b, vm, vb, depth + 1)?)
    }

    fn edge(&mut self, a: C64, b: C64, n: usize) -> Result<f64> {
        let mut total = 0.0;
        let mut za = a;
        let mut va = self.eval(a)?;
        for k in 1..=n {
            let zb = a + (b - a) * (k as f64 / n as f64);
            let vb = self.eval(zb)?;
            total += self.segment(za, zb, va, vb, 0)?;
            za = zb;
            va = vb;
        }
        Ok(total)
    }
}

/// Total phase change of `f` around `rect`, as a winding number.
pub fn count_in_rectangle<F: Fn(C64) -> C64>(f: &F, rect: &Rect) -> Result<ContourCount> {
    count_with(f, rect, ScanOptions::default().samples_per_edge)
}

fn count_with<F: Fn(C64) -> C64>(f: &F, rect: &Rect, per_edge: usize) -> Result<ContourCount> {
    let mut w = Walker { f, samples: 0 };
    let k = rect.corners();
    let mut total = 0.0;
    for i in 0..4 {
        total += w.edge(k[i], k[(i + 1) % 4], per_edge)?;
    }
    let turns = total / (2.0 * PI);
    let winding = turns.round();
    let residual = (turns - winding).abs();
    if residual > 0.25 {
        return Err(Error::Resolution { op: "count_in_rectangle", residual });
    }
    Ok(ContourCount { rect: *rect, winding: winding as i64, samples_used: w.samples, residual })
}

/// Mean of the `m` roots inside the circle `|z − center| = rho`, from samples of `log f`.
pub fn circle_mean<F: Fn(C64) -> C64>(f: &F, center: C64, rho: f64, m: usize, k: usize) -> Result<C64> {
    let mut logs = Vec::with_capacity(k);
    let mut prev_arg = 0.0;
    let mut unwrapped = 0.0;
    for j in 0..=k {
        let th = 2.0 * PI * j as f64 / k as f64;
        let v = f(center + c(0.0, th).exp() * rho);
        if !(v.re.is_finite() && v.im.is_finite()) || v.norm() == 0.0 {
            return Err(Error::NearBoundary { op: "circle_mean", z: center, hint: "shrink the circle".into() });
        }
        let a = v.arg();
        if j == 0 {
            unwrapped = a;
        } else {
            let mut d = a - prev_arg;
            d -= 2.0 * PI * (d / (2.0 * PI)).round();
            if d.abs() > MAX_STEP * 1.5 {
                return Err(Error::NearBoundary { op: "circle_mean", z: center, hint: "undersampled circle".into() });
            }
            unwrapped += d;
        }
        prev_arg = a;
        if j < k {
            logs.push(c(v.norm().ln(), unwrapped - m as f64 * th));
        } else {
            let turns = (unwrapped - logs[0].im) / (2.0 * PI);
            if (turns - m as f64).abs() > 0.25 {
                return Err(Error::CountMismatch {
                    op: "circle_mean",
                    detail: format!("circle winds {turns:.3} times, expected {m}"),
                });
            }
        }
    }
    let mut acc = c(0.0, 0.0);
    for (j, l) in logs.iter().enumerate() {
        acc += l * c(0.0, 2.0 * PI * j as f64 / k as f64).exp();
    }
    Ok(center - acc * (rho / (m as f64 * k as f64)))
}

/// Newton iteration with a central-difference derivative.
pub fn newton<F: Fn(C64) -> C64>(f: &F, z0: C64, max_iter: usize) -> Option<C64> {
    let mut z = z0;
    for _ in 0..max_iter {
        let h = 1e-6 * (1.0 + z.norm()).min(10.0);
        let fz = f(z);
        if fz.norm() == 0.0 {
            return Some(z);
        }
        let d = (f(z + h) - f(z - h)) / (2.0 * h);
        if d.norm() == 0.0 || !d.re.is_finite() {
            return None;
        }
        let step = fz / d;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    let last = f(z);
    let d = (f(z + 1e-6) - f(z - 1e-6)) / 2e-6;
    if (last / d).norm() <= 1e-12 * (1.0 + z.norm()) {
        Some(z)
    } else {
        None
    }
}

/// Muller iteration (no derivative).
pub fn muller<F: Fn(C64) -> C64>(f: &F, z0: C64, h: f64, max_iter: usize) -> Option<C64> {
    let mut x0 = z0 - h;
    let mut x1 = z0 + c(0.0, h);
    let mut x2 = z0;
    let (mut f0, mut f1, mut f2) = (f(x0), f(x1), f(x2));
    for _ in 0..max_iter {
        if f2.norm() == 0.0 {
            return Some(x2);
        }
        let h1 = x1 - x0;
        let h2 = x2 - x1;
        let d1 = (f1 - f0) / h1;
        let d2 = (f2 - f1) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - a * f2 * 4.0).sqrt();
        let den = if (b + disc).norm() > (b - disc).norm() { b + disc } else { b - disc };
        if den.norm() == 0.0 {
            return None;
        }
        let step = f2 * (-2.0) / den;
        let x3 = x2 + step;
        if !x3.re.is_finite() || !x3.im.is_finite() {
            return None;
        }
        x0 = x1;
        x1 = x2;
        x2 = x3;
        f0 = f1;
        f1 = f2;
        f2 = f(x2);
        if step.norm() <= 1e-15 * (1.0 + x2.norm()) {
            return Some(x2);
        }
    }
    ((x2 - x1).norm() <= 1e-11 * (1.0 + x2.norm())).then_some(x2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polish {
    Newton,
    Muller,
}

/// A root of a scalar function with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootEstimate {
    pub z: C64,
    pub multiplicity: usize,
}

const SPLITS: [f64; 6] = [0.4871, 0.5237, 0.4411, 0.5693, 0.3989, 0.6151];

fn split_counted<F: Fn(C64) -> C64>(f: &F, rect: &Rect, m: i64, per_edge: usize) -> Result<[(Rect, i64); 2]> {
    let mut last = None;
    for frac in SPLITS {
        let (a, b) = rect.split(frac);
        match (count_with(f, &a, per_edge), count_with(f, &b, per_edge)) {
            (Ok(ca), Ok(cb)) if ca.winding + cb.winding == m => return Ok([(a, ca.winding), (b, cb.winding)]),
            (Ok(ca), Ok(cb)) => {
                last = Some(Error::CountMismatch {
                    op: "subdivide",
                    detail: format!("children count {} + {} ≠ {m}", ca.winding, cb.winding),
                })
            }
            (Err(e), _) | (_, Err(e)) => last = Some(e),
        }
    }
    Err(last.expect("at least one split attempted"))
}

/// All roots of an entire function inside `rect`, with multiplicities.
pub fn find_roots<F: Fn(C64) -> C64>(
    f: &F,
    rect: &Rect,
    polish: Polish,
    opts: &ScanOptions,
) -> Result<(Vec<RootEstimate>, ContourCount)> {
    let total = count_with(f, rect, opts.samples_per_edge)?;
    if total.winding < 0 {
        return Err(Error::CountMismatch { op: "find_roots", detail: format!("negative winding {}", total.winding) });
    }
    let mut out: Vec<RootEstimate> = Vec::new();
    let mut stack = vec![(*rect, total.winding)];
    let per_edge = (opts.samples_per_edge / 2).max(12);
    while let Some((cell, m)) = stack.pop() {
        if m == 0 {
            continue;
        }
        let diam = cell.diameter();
        let center = cell.center();
        let scale = 1.0 + center.norm();
        if diam <= opts.min_cell * scale {
            let mut z = center;
            for rho in [10.0 * diam, 100.0 * diam, 1000.0 * diam] {
                if let Ok(v) = circle_mean(f, center, rho, m as usize, 128) {
                    if (v - center).norm() <= rho {
                        z = v;
                        break;
                    }
                }
            }
            out.push(RootEstimate { z, multiplicity: m as usize });
            continue;
        }
        if m == 1 && diam <= opts.polish_cell * scale {
            let start = circle_mean(f, center, 0.75 * diam, 1, 64).unwrap_or(center);
            let polished = match polish {
                Polish::Newton => newton(f, start, opts.max_iter),
                Polish::Muller => muller(f, start, 1e-3 * diam, opts.max_iter),
            };
            if let Some(z) = polished {
                if cell.expanded(0.05).contains(z) {
                    out.push(RootEstimate { z, multiplicity: 1 });
                    continue;
                }
            }
        }
        for part in split_counted(f, &cell, m, per_edge)? {
            stack.push(part);
        }
    }
    // Neighbouring cells may polish onto the same root.
    out.sort_by(|a, b| a.z.im.total_cmp(&b.z.im).then(a.z.re.total_cmp(&b.z.re)));
    let mut merged: Vec<RootEstimate> = Vec::new();
    for r in out {
        if let Some(prev) = merged.iter_mut().find(|p| (p.z - r.z).norm() <= opts.dedup * (1.0 + r.z.norm())) {
            prev.multiplicity = prev.multiplicity.max(r.multiplicity);
        } else {
            merged.push(r);
        }
    }
    let found: usize = merged.iter().map(|r| r.multiplicity).sum();
    if found as i64 != total.winding {
        return Err(Error::CountMismatch {
            op: "subdivide_and_refine",
            detail: format!("{found} roots refined but the winding number is {}", total.winding),
        });
    }
    Ok((merged, total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Zero,
    Pole,
}

/// A located zero or pole of the closed loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroPoleRecord {
    pub position: C64,
    pub kind: Kind,
    pub which: Which,
    /// Right null vector at a zero; `Jx` for the paired zero vector `x` at a pole.
    pub eigenvector: Vec<C64>,
    /// Basis of the null space when it is more than one-dimensional.
    pub eigenspace: Vec<Vec<C64>>,
    /// `σ_min` at a zero; modulus of the loop pencil determinant at a pole.
    pub residual: f64,
    pub multiplicity: usize,
    pub degenerate: bool,
    pub partner_neg_conj: Option<usize>,
    pub partner_conj: Option<usize>,
}

impl ZeroPoleRecord {
    pub fn new(position: C64, kind: Kind, which: Which, multiplicity: usize) -> Self {
        Self {
            position,
            kind,
            which,
            eigenvector: Vec::new(),
            eigenspace: Vec::new(),
            residual: 0.0,
            multiplicity,
            degenerate: multiplicity > 1,
            partner_neg_conj: None,
            partner_conj: None,
        }
    }

    pub fn vector(&self) -> CVec {
        CVec::from_column_slice(&self.eigenvector)
    }

    pub fn space(&self) -> CMat {
        let n = self.eigenvector.len();
        let mut m = zeros(n, self.eigenspace.len());
        for (j, col) in self.eigenspace.iter().enumerate() {
            m.set_column(j, &CVec::from_column_slice(col));
        }
        m
    }

    pub fn is_real(&self) -> bool {
        self.position.im.abs() <= 1e-9 * (1.0 + self.position.norm())
    }
}

/// Thresholds for flagging degenerate records.
pub const SECOND_SIGMA_TOL: f64 = 1e-4;
pub const J_NORM_TOL: f64 = 1e-6;

pub fn j_norm(v: &CVec) -> C64 {
    let jv = j_left(&CMat::from_column_slice(v.len(), 1, v.as_slice()), Layout::Interleaved);
    (v.adjoint() * jv)[(0, 0)]
}

/// Null-space analysis of the closed loop at a zero.
#[derive(Debug, Clone)]
pub struct ZeroEigen {
    pub vector: CVec,
    pub sigma_min: f64,
    pub second_sigma: f64,
    pub space: CMat,
    pub degenerate: bool,
}

pub fn zero_eigen(n: &DelayNetwork, z: C64, which: Which, is_real: bool) -> Result<ZeroEigen> {
    let t = n.eval(z, which)?;
    let d = svd(&t);
    let k = d.s.len();
    let top = d.s[0].max(1.0);
    let vector = d.v.column(k - 1).into_owned();
    let sigma_min = d.s[k - 1];
    let second_sigma = if k >= 2 { d.s[k - 2] } else { f64::INFINITY };
    let dim = (0..k).filter(|&i| d.s[i] <= SECOND_SIGMA_TOL * top).count().max(1);
    let space = d.v.columns(k - dim, dim).into_owned();
    let jn = j_norm(&vector).norm();
    let degenerate = second_sigma < SECOND_SIGMA_TOL * top || (!is_real && jn < J_NORM_TOL * vector.norm_squared());
    Ok(ZeroEigen { vector, sigma_min, second_sigma, space, degenerate })
}

/// Eigenvector of a refined record: right null vector at a zero, `Jx` at a pole where
/// `x` is the null vector at the reflected zero `−z̄`.
pub fn eigenvector_at(n: &DelayNetwork, rec: &ZeroPoleRecord) -> Result<CVec> {
    match rec.kind {
        Kind::Zero => Ok(zero_eigen(n, rec.position, rec.which, rec.is_real())?.vector),
        Kind::Pole => {
            let e = zero_eigen(n, -rec.position.conj(), rec.which, rec.is_real())?;
            Ok(j_left(&CMat::from_column_slice(e.vector.len(), 1, e.vector.as_slice()), Layout::Interleaved).column(0).into_owned())
        }
    }
}

fn fill_eigen(n: &DelayNetwork, rec: &mut ZeroPoleRecord) -> Result<()> {
    let z = match rec.kind {
        Kind::Zero => rec.position,
        Kind::Pole => -rec.position.conj(),
    };
    let e = zero_eigen(n, z, rec.which, rec.is_real())?;
    let j = |v: &CVec| -> Vec<C64> {
        match rec.kind {
            Kind::Zero => v.iter().copied().collect(),
            Kind::Pole => v.iter().enumerate().map(|(i, x)| if i % 2 == 0 { *x } else { -*x }).collect(),
        }
    };
    rec.eigenvector = j(&e.vector);
    rec.eigenspace = if e.space.ncols() > 1 { e.space.column_iter().map(|col| j(&col.into_owned())).collect() } else { Vec::new() };
    rec.degenerate = rec.degenerate || e.degenerate;
    if rec.kind == Kind::Zero {
        rec.residual = e.sigma_min;
    }
    Ok(())
}

/// Locates zeros or poles of `T̃` (or `S̃`) in `region`, with eigenvectors.
pub fn subdivide_and_refine(n: &DelayNetwork, region: &Rect, kind: Kind, which: Which) -> Result<Vec<ZeroPoleRecord>> {
    Ok(refine_region(n, region, kind, which, &ScanOptions::default())?.0)
}

/// Like [`subdivide_and_refine`], also returning the winding count. A boundary that
/// grazes a root is nudged outward a few times before giving up.
pub fn refine_region(
    n: &DelayNetwork,
    region: &Rect,
    kind: Kind,
    which: Which,
    opts: &ScanOptions,
) -> Result<(Vec<ZeroPoleRecord>, ContourCount)> {
    let target = |z: C64| match kind {
        Kind::Zero => n.zero_target(z, which),
        Kind::Pole => n.pole_target(z, which),
    };
    let polish = match kind {
        Kind::Zero => Polish::Muller,
        Kind::Pole => Polish::Newton,
    };
    let mut rect = *region;
    let mut attempt = 0;
    let (roots, count) = loop {
        match find_roots(&target, &rect, polish, opts) {
            Ok(r) => break r,
            Err(Error::NearBoundary { .. }) | Err(Error::Resolution { .. }) if attempt < 4 => {
                attempt += 1;
                let d = 1e-3 * attempt as f64 * (1.0 + rect.width());
                rect = Rect::new(rect.re_lo - d, rect.re_hi + d, rect.im_lo - 1.7 * d, rect.im_hi + 1.7 * d);
            }
            Err(e) => return Err(e),
        }
    };
    let mut out = Vec::with_capacity(roots.len());
    for r in roots {
        let mut rec = ZeroPoleRecord::new(r.z, kind, which, r.multiplicity);
        if rec.is_real() {
            rec.position = c(rec.position.re, 0.0);
        }
        if kind == Kind::Pole {
            rec.residual = n.pole_target(rec.position, which).norm();
        }
        fill_eigen(n, &mut rec)?;
        out.push(rec);
    }
    out.sort_by(|a, b| a.position.im.total_cmp(&b.position.im).then(a.position.re.total_cmp(&b.position.re)));
    Ok((out, count))
}

/// Tolerance for pairing `z ↦ −z̄` and `z ↦ z̄`.
pub const PAIR_TOL: f64 = 1e-7;

/// Links every record with its `−z̄` partner of the opposite kind and its `z̄` partner
/// of the same kind.
pub fn pair_records(mut records: Vec<ZeroPoleRecord>) -> Result<Vec<ZeroPoleRecord>> {
    let n = records.len();
    let mut missing = Vec::new();
    for i in 0..n {
        let z = records[i].position;
        let kind = records[i].kind;
        let tol = PAIR_TOL * (1.0 + z.norm());
        let find = |target: C64, want: Kind| -> Option<usize> {
            (0..n)
                .filter(|&j| records[j].kind == want)
                .map(|j| (j, (records[j].position - target).norm()))
                .filter(|(_, d)| *d <= tol)
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(j, _)| j)
        };
        let other = if kind == Kind::Zero { Kind::Pole } else { Kind::Zero };
        let neg = find(-z.conj(), other);
        let conj = find(z.conj(), kind);
        if neg.is_none() || conj.is_none() {
            missing.push(format!("{:?} at {z}", kind));
        }
        records[i].partner_neg_conj = neg;
        records[i].partner_conj = conj;
    }
    if !missing.is_empty() {
        return Err(Error::Unpaired { count: missing.len(), detail: missing.join(", ") });
    }
    Ok(records)
}

/// Result of scanning a symmetric window for zeros and poles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scan {
    pub strip: SearchStrip,
    pub window_im: f64,
    pub which: Which,
    /// Zeros first, then poles; partner indices refer to this list.
    pub records: Vec<ZeroPoleRecord>,
    pub zero_count: ContourCount,
    pub pole_count: ContourCount,
}

impl Scan {
    pub fn zeros(&self) -> impl Iterator<Item = &ZeroPoleRecord> {
        self.records.iter().filter(|r| r.kind == Kind::Zero)
    }

    pub fn poles(&self) -> impl Iterator<Item = &ZeroPoleRecord> {
        self.records.iter().filter(|r| r.kind == Kind::Pole)
    }
}

pub fn pole_rect(strip: &SearchStrip, window_im: f64) -> Rect {
    Rect::new(strip.c_low, strip.c_high, -window_im, window_im)
}

pub fn zero_rect(strip: &SearchStrip, window_im: f64) -> Rect {
    Rect::new(-strip.c_high, -strip.c_low, -window_im, window_im)
}

/// Finds and pairs all zeros and poles with `|Im z| ≤ window_im` inside the strip.
pub fn scan(n: &DelayNetwork, window_im: f64, which: Which) -> Result<Scan> {
    let strip = n.compute_strip()?;
    let opts = ScanOptions::default();
    let mut w = window_im;
    let mut last = None;
    for _ in 0..4 {
        let zr = refine_region(n, &zero_rect(&strip, w), Kind::Zero, which, &opts);
        let pr = refine_region(n, &pole_rect(&strip, w), Kind::Pole, which, &opts);
        match (zr, pr) {
            (Ok((zs, zc)), Ok((ps, pc))) => {
                let mut records = zs;
                records.extend(ps);
                match pair_records(records) {
                    Ok(records) => {
                        return Ok(Scan { strip, window_im: w, which, records, zero_count: zc, pole_count: pc })
                    }
                    Err(e) => last = Some(e),
                }
            }
            (Err(e), _) | (_, Err(e)) => last = Some(e),
        }
        // A nudged boundary can leave a partner outside; retry with a shifted window.
        w *= 1.0 + 1.3e-3;
    }
    Err(last.expect("scan attempted"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_winds_once() {
        let f = |z: C64| z;
        let r = count_in_rectangle(&f, &Rect::new(-0.5, 0.5, -0.5, 0.5)).unwrap();
        assert_eq!(r.winding, 1);
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn double_zero_minus_pole() {
        let f = |z: C64| (z - 0.3) * (z - 0.3) / (z + 0.5);
        let r = count_in_rectangle(&f, &Rect::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert_eq!(r.winding, 1);
    }

    #[test]
    fn root_on_boundary_is_reported() {
        let f = |z: C64| z - c(0.5, 0.0);
        let e = count_in_rectangle(&f, &Rect::new(-0.5, 0.5, -0.5, 0.5)).unwrap_err();
        assert!(matches!(e, Error::NearBoundary { .. }), "{e:?}");
    }

    #[test]
    fn finds_simple_and_double_roots() {
        let f = |z: C64| (z - c(0.2, 0.1)) * (z + c(0.4, -0.3)) * (z + c(0.4, -0.3)) * (z - c(0.9, 0.9));
        let (mut r, count) = find_roots(&f, &Rect::new(-1.0, 1.0, -1.0, 1.0), Polish::Newton, &ScanOptions::default()).unwrap();
        assert_eq!(count.winding, 4);
        r.sort_by(|a, b| a.z.re.total_cmp(&b.z.re));
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].z - c(-0.4, 0.3)).norm() < 1e-9);
        assert!((r[1].z - c(0.2, 0.1)).norm() < 1e-12);
        assert!((r[2].z - c(0.9, 0.9)).norm() < 1e-12);
    }

    #[test]
    fn muller_finds_cubic_root() {
        let f = |z: C64| z * z * z - 2.0;
        let z = muller(&f, c(1.0, 0.1), 1e-3, 100).unwrap();
        assert!((z.re - 2f64.cbrt()).abs() < 1e-12 && z.im.abs() < 1e-12);
    }

    #[test]
    fn circle_mean_of_two_roots() {
        let f = |z: C64| (z - c(0.1, 0.02)) * (z - c(-0.05, 0.0));
        let m = circle_mean(&f, c(0.0, 0.0), 0.5, 2, 64).unwrap();
        assert!((m - c(0.025, 0.01)).norm() < 1e-12);
    }

    #[test]
    fn lone_record_is_unpaired() {
        let r = ZeroPoleRecord::new(c(0.3, 0.4), Kind::Zero, Which::Exact, 1);
        assert!(matches!(pair_records(vec![r]), Err(Error::Unpaired { count: 1, .. })));
    }

    #[test]
    fn real_zero_is_its_own_conjugate() {
        let z = ZeroPoleRecord::new(c(0.3, 0.0), Kind::Zero, Which::Exact, 1);
        let p = ZeroPoleRecord::new(c(-0.3, 0.0), Kind::Pole, Which::Exact, 1);
        let out = pair_records(vec![z, p]).unwrap();
        assert_eq!(out[0].partner_conj, Some(0));
        assert_eq!(out[0].partner_neg_conj, Some(1));
    }
}
