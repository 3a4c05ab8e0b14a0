mod common;

use qcascade_core::algebra::{sigma_conj, Layout};
use qcascade_core::delay::*;
use qcascade_core::error::{Assumption, Error};
use qcascade_core::example::example_network;
use qcascade_core::linalg::{c, eye, fro, sigma_min, CMat, C64};
use qcascade_core::lti::{j_unitary_residual, RationalTf, SlhModel};
use qcascade_core::roots::{find_roots, Polish, Rect, ScanOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_points(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| c(rng.gen_range(-3.0..3.0), rng.gen_range(-8.0..8.0))).collect()
}

#[test]
fn delay_operator_values() {
    let d = DelaySpec::checked(vec![2.0], 2.0).unwrap();
    assert_eq!(delay_operator(&d, c(0.0, 0.0)), eye(2));
    assert!(fro(&(delay_operator(&d, c(0.0, PI / 2.0)) + eye(2))) < 1e-15);
    let d = DelaySpec::checked(vec![1.0, 3.0], 1.0).unwrap();
    for z in random_points(50, 1) {
        let p = delay_operator(&d, z) * delay_operator(&d, -z);
        assert!(fro(&(p - eye(4))) <= 1e-12);
    }
}

#[test]
fn incommensurate_delays() {
    assert!(matches!(
        DelaySpec::checked(vec![1.0, 2f64.sqrt()], 1.0),
        Err(Error::AssumptionViolated { assumption: Assumption::Commensurate, .. })
    ));
    let d = DelaySpec::new(vec![1.0, 2f64.sqrt()], 1.0).unwrap();
    let open = RationalTf::from_slh(&SlhModel::random(1, 3, 5)).unwrap();
    let n = DelayNetwork::new(open, 1, d).unwrap();
    assert_eq!(n.validate_assumptions().status(Assumption::Commensurate), Some(CheckStatus::Fail));
    assert_eq!(DelaySpec::infer(vec![1.5, 2.0]).unwrap().base_period, 0.5);
}

#[test]
fn reference_network_is_j_unitary_on_axis() {
    let n = example_network().unwrap();
    let omegas: Vec<f64> = (0..200).map(|k| -12.0 + 24.0 * k as f64 / 199.0).collect();
    assert!(j_unitary_sweep(&n, &omegas) <= 1e-9);
}

#[test]
fn both_loop_forms_agree() {
    let n = example_network().unwrap();
    for z in random_points(30, 2) {
        if let Ok((a, b)) = n.closed_tf_forms(z, Which::Exact) {
            assert!(fro(&(&a - &b)) <= 1e-10 * (1.0 + fro(&a)), "{z}");
        }
    }
}

#[test]
fn conjugation_symmetry() {
    let n = common::random_network(17);
    for z in random_points(100, 3) {
        let (Ok(a), Ok(b)) = (n.closed_tf(z), n.closed_tf(z.conj())) else { continue };
        assert!(fro(&(b - sigma_conj(&a, Layout::Interleaved))) <= 1e-9);
    }
}

#[test]
fn bounded_far_from_strip() {
    let n = example_network().unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..40 {
        for re in [-40.0, 40.0] {
            let t = n.closed_tf(c(re, 0.37 * k as f64)).unwrap();
            worst = worst.max(fro(&t));
        }
    }
    assert!(worst.is_finite() && worst < 10.0, "{worst}");
}

#[test]
fn static_limits_at_large_real_part() {
    let n = example_network().unwrap();
    let (plus, minus) = static_limits(&n).unwrap();
    for im in [0.0, 0.7, 2.1] {
        assert!(fro(&(n.static_tf(c(40.0, im)).unwrap() - &plus)) <= 1e-7);
        assert!(fro(&(n.static_tf(c(-40.0, im)).unwrap() - &minus)) <= 1e-7);
    }
}

#[test]
fn static_tf_is_periodic() {
    let n = common::random_network(6);
    for z in random_points(10, 4) {
        let (Ok(a), Ok(b)) = (n.static_tf(z), n.static_tf(z + c(0.0, n.period()))) else { continue };
        assert!(fro(&(a - b)) <= 1e-10);
    }
}

#[test]
fn loop_determinant_far_right_is_one() {
    let n = example_network().unwrap();
    for which in [Which::Exact, Which::Static] {
        assert!((n.loop_determinant(c(60.0, 0.4), which).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn static_determinant_zeros_are_static_poles() {
    let n = example_network().unwrap();
    let strip = n.compute_strip().unwrap();
    let rect = Rect::new(strip.c_low, strip.c_high, -0.1, n.period() - 0.1);
    let (roots, _) =
        find_roots(&|z| n.loop_determinant(z, Which::Static).unwrap(), &rect, Polish::Newton, &ScanOptions::default())
            .unwrap();
    assert!(!roots.is_empty());
    let fams = n.static_pole_families().unwrap();
    for r in &roots {
        assert!(fams.iter().any(|f| f.distance(r.z) < 1e-8), "{}", r.z);
        // The static loop matrix is singular there.
        let b = n.static_blocks();
        let e = n.delay_operator(r.z);
        assert!(sigma_min(&(eye(2) - &b.t4 * e)) < 1e-8);
    }
}

#[test]
fn determinant_gap_decays_like_one_over_z() {
    // First-order perturbation of a determinant: |det(I − T₄E) − det(I − S₄E)|
    // ≤ m (1 + ‖S₄E‖ + ‖ΔE‖)^{m−1} ‖ΔE‖ with ΔE = (T₄ − S₄)E, and ‖T₄ − S₄‖ = O(1/|z|).
    for seed in [1u64, 2, 3, 7] {
        let n = common::random_network(seed);
        let s4 = n.static_blocks().t4.clone();
        let m = s4.nrows() as i32;
        for x in [-0.5, 0.5] {
            for r in [1e2, 1e3, 1e4] {
                let z = c(x, r);
                let e = n.delay_operator(z);
                let t4 = n.blocks(z, Which::Exact).unwrap().t4;
                let de = fro(&((&t4 - &s4) * &e));
                let bound = m as f64 * (1.0 + fro(&(&s4 * &e)) + de).powi(m - 1) * de;
                let ft = n.loop_determinant(z, Which::Exact).unwrap();
                let fs = n.loop_determinant(z, Which::Static).unwrap();
                assert!((ft - fs).norm() <= bound, "seed {seed} z {z}");
                // ‖T₄ − S₄‖·|z| is constant along the ray.
                let k = fro(&(&t4 - &s4)) * z.norm();
                let k_far = fro(&(n.blocks(z * 10.0, Which::Exact).unwrap().t4 - &s4)) * (z * 10.0).norm();
                assert!((k / k_far - 1.0).abs() < 0.05);
            }
        }
    }
}

#[test]
fn strip_contains_reference_poles() {
    let s = example_network().unwrap().compute_strip().unwrap();
    for p in [-0.3, -0.7, -0.1116] {
        assert!(s.contains(c(p, 0.0)), "{s:?}");
    }
    assert!(s.c_low < s.c_high);
}

#[test]
fn identity_loop_strip_is_symmetric() {
    // A beamsplitter with no cavity: the loop block is a constant contraction of norm r.
    let r: f64 = 0.8;
    let eta = (1.0 - r * r).sqrt();
    let s = CMat::from_row_slice(2, 2, &[c(-r, 0.0), c(eta, 0.0), c(eta, 0.0), c(r, 0.0)]);
    let zero = CMat::zeros(2, 0);
    let m = SlhModel::new(s, zero.clone(), zero, CMat::zeros(0, 0)).unwrap();
    let n = DelayNetwork::new(RationalTf::from_slh(&m).unwrap(), 1, DelaySpec::checked(vec![1.0], 1.0).unwrap())
        .unwrap();
    let st = n.compute_strip().unwrap();
    assert!((st.analytic_low - r.ln()).abs() < 1e-9 && (st.analytic_high - r.ln()).abs() < 1e-9, "{st:?}");
    for k in 0..500 {
        let z = c(if k % 2 == 0 { st.c_high + 0.5 } else { st.c_low - 0.5 }, 0.03 * k as f64);
        assert!(n.loop_determinant(z, Which::Exact).unwrap().norm() > 1e-3);
    }
}

#[test]
fn reference_assumptions() {
    let rep = example_network().unwrap().validate_assumptions();
    for a in [Assumption::FiniteDimensional, Assumption::PhysicallyRealizable, Assumption::Proper, Assumption::Commensurate]
    {
        assert_eq!(rep.status(a), Some(CheckStatus::Pass), "{a:?}");
    }
    assert_ne!(rep.status(Assumption::Simple), Some(CheckStatus::Pass));
    assert!(rep.hard_failure().is_none());
}

#[test]
fn singular_loop_block_fails_properness() {
    let s = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let m = SlhModel::single_mode(s, &[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0); 2], 0.0, c(0.0, 0.0)).unwrap();
    let n = DelayNetwork::new(RationalTf::from_slh(&m).unwrap(), 1, DelaySpec::checked(vec![1.0], 1.0).unwrap())
        .unwrap();
    let rep = n.validate_assumptions();
    assert_eq!(rep.status(Assumption::Proper), Some(CheckStatus::Fail));
    assert!(n.compute_strip().is_err());
}

#[test]
fn phase_shift_zero_is_identity() {
    let n = example_network().unwrap();
    let m = n.with_loop_phase(0.0).unwrap();
    let z = c(0.2, 1.1);
    assert!(fro(&(n.closed_tf(z).unwrap() - m.closed_tf(z).unwrap())) < 1e-15);
    let shifted = n.with_loop_phase(1e-3).unwrap();
    assert!(j_unitary_residual(&shifted.closed_tf(c(0.0, 0.8)).unwrap()) <= 1e-10);
}
