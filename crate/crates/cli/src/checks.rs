//! Invariant checks shared by `factorize` and `verify`.

use qcascade_core::algebra::{sigma_conj, Layout};
use qcascade_core::cascade::{CascadeResult, GridComparison};
use qcascade_core::delay::{j_unitary_sweep, DelayNetwork};
use qcascade_core::linalg::{c, fro, C64};
use qcascade_core::lti::j_unitary_residual;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Tolerance for `B` and for the closed loop on the imaginary axis.
pub const B_TOL: f64 = 1e-8;
pub const NETWORK_TOL: f64 = 1e-9;
pub const DISPERSION_TOL: f64 = 1e-5;
/// Grid agreement between the reconstruction and the exact function.
pub const AGREEMENT_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, pass: value <= tolerance }
    }
}

pub fn all_pass(rows: &[CheckRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

pub fn print_table(rows: &[CheckRow]) {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in rows {
        let mark = if r.pass { "pass" } else { "FAIL" };
        println!("{:<width$}  {:>10.3e}  <= {:<8.1e}  {mark}", r.name, r.value, r.tolerance);
    }
}

fn axis_points(omegas: &[f64], count: usize) -> Vec<C64> {
    let lo = omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = omegas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..count).map(|k| c(0.0, lo + (hi - lo) * k as f64 / (count - 1) as f64)).collect()
}

/// Structural checks on the factors and on `B`, and agreement of the reconstruction.
pub fn structural_checks(
    result: &CascadeResult,
    network: &DelayNetwork,
    comparison: &GridComparison,
    tol: f64,
    seed: u64,
) -> Vec<CheckRow> {
    let axis = axis_points(&comparison.omegas, 25);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<C64> = (0..20).map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-8.0..8.0))).collect();

    let (mut ju, mut conj, mut shape) = (0.0f64, 0.0f64, 0.0f64);
    for t in &result.terms {
        // Residuals grow with the size of V, so they are compared relative to ‖V‖².
        let scale = fro(t.v()).powi(2).max(1.0);
        for &z in &axis {
            ju = ju.max(j_unitary_residual(&t.eval(z)) / scale);
        }
        for &z in &probes {
            let d = fro(&(t.eval(z.conj()) - sigma_conj(&t.eval(z), Layout::Interleaved))) / scale;
            if d.is_finite() {
                conj = conj.max(d);
            }
        }
        shape = shape.max(t.structure_residual() / scale);
    }
    let (b_ju, b_du) = result.b_structure();
    let omegas: Vec<f64> = axis.iter().map(|z| z.im).collect();
    vec![
        CheckRow::new("factor J-unitarity on iR", ju, tol),
        CheckRow::new("factor conjugation symmetry", conj, tol),
        CheckRow::new("factor V-flat V = I", shape, tol),
        CheckRow::new("B J-unitary", b_ju, B_TOL),
        CheckRow::new("B doubled-up", b_du, B_TOL),
        CheckRow::new("B dispersion", result.b_dispersion, DISPERSION_TOL),
        CheckRow::new("closed loop J-unitary on iR", j_unitary_sweep(network, &omegas), NETWORK_TOL),
        CheckRow::new("grid agreement", comparison.max_rel_error, AGREEMENT_TOL),
    ]
}
