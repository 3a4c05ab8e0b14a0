mod common;

use qcascade_core::cascade::*;
use qcascade_core::delay::{static_limits, Which};
use qcascade_core::example::{example_network, ExampleParams};
use qcascade_core::linalg::{c, eye, fro, C64};
use qcascade_core::lti::RationalTf;
use qcascade_core::roots::scan;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[test]
fn reference_plan() {
    let n = example_network().unwrap();
    let s = scan(&n, 1.5 * PI, Which::Exact).unwrap();
    let fams = n.static_zero_families().unwrap();
    let plan = plan_order(&s.records, &fams, s.window_im, None).unwrap();
    assert!(plan.inner.iter().any(|i| matches!(*i,
        PlanItem::RealPair { z1, z2 } if (z1 - 0.3).abs() < 1e-8 && (z2 - 0.7).abs() < 1e-8)));
    let lp = -ExampleParams::default().loop_pole_real_part();
    // The double real zero near 0.11 is the base of its own ladder.
    let real_ladder = plan.ladders.iter().find(|g| g.family.base.im.abs() < 1e-9).expect("real-based ladder");
    assert!(real_ladder.self_conjugate);
    let base = real_ladder.member(0).unwrap();
    assert!((base.position - c(lp, 0.0)).norm() < 1e-8 && base.multiplicity == 2);
    // Inner items are ordered by modulus.
    let keys: Vec<f64> =
        plan.inner.iter().map(|i| i.zeros().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)).collect();
    assert!(keys.windows(2).all(|w| w[0] <= w[1] + 1e-12));
}

#[test]
fn plan_is_invariant_under_permutation() {
    let n = example_network().unwrap().with_loop_phase(1e-3).unwrap();
    let s = scan(&n, 1.5 * PI, Which::Exact).unwrap();
    let fams = n.static_zero_families().unwrap();
    let reference = plan_order(&s.records, &fams, s.window_im, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let mut recs = s.records.clone();
        recs.shuffle(&mut rng);
        let mut f = fams.clone();
        f.shuffle(&mut rng);
        assert_eq!(plan_order(&recs, &f, s.window_im, None).unwrap(), reference);
    }
}

#[test]
fn plan_without_ladders_is_finite_ordering() {
    let t = common::random_finite(1003);
    let recs = finite_zero_records(&t).unwrap();
    let plan = plan_order(&recs, &[], 0.0, None).unwrap();
    assert!(plan.ladders.is_empty());
    let covered: usize = plan.inner.iter().map(|i| i.zeros().len()).sum();
    assert_eq!(covered, recs.iter().map(|r| r.multiplicity).sum::<usize>());
}

#[test]
fn static_surrogate_factorization() {
    let n = example_network().unwrap();
    let r = static_factorize(&n, Truncation::ClosedForm).unwrap();
    assert!(r.b_dispersion <= 1e-6, "{}", r.b_dispersion);
    let (plus, minus) = static_limits(&n).unwrap();
    for im in [0.0, 0.9, 2.3] {
        let hi = r.eval(c(30.0, im));
        let lo = r.eval(c(-30.0, im));
        assert!(fro(&(hi - &plus)) <= 1e-5);
        assert!(fro(&(lo - &minus)) <= 1e-5);
    }
    for z in [c(0.4, 0.2), c(-0.2, 1.7), c(1.0, -2.5)] {
        let s = n.static_tf(z).unwrap();
        assert!(fro(&(r.eval(z) - &s)) <= 1e-8 * (1.0 + fro(&s)));
    }
}

#[test]
fn static_ladders_agree_with_oracle() {
    let n = example_network().unwrap().with_loop_phase(1e-3).unwrap();
    let r = static_factorize(&n, Truncation::ClosedForm).unwrap();
    assert!(!r.ladder_checks.is_empty());
    for chk in &r.ladder_checks {
        assert!(chk.projector_drift <= 1e-8);
        if let Some(a) = chk.oracle_agreement {
            assert!(a <= 1e-6, "{a}");
        }
    }
}

#[test]
fn residual_profile_is_non_increasing() {
    let n = example_network().unwrap();
    let opts = FactorizeOptions {
        truncation: Truncation::Factors(8),
        degeneracy: Degeneracy::Perturb { eps: 1e-3 },
        ..Default::default()
    };
    let nf = factorize_network(&n, 1.5 * PI, &opts).unwrap();
    let p = &nf.result.residual_profile;
    assert!(p.len() >= 3);
    assert!(p.windows(2).all(|w| w[1].max_rel_error <= w[0].max_rel_error + 1e-12), "{p:?}");
    assert!(nf.result.diagnostics.iter().all(|d| d.removable));
}

#[test]
fn trailing_ladder_products_shrink() {
    // Scalar part of the static factors n ∈ [ℓ, 2ℓ] of one ladder, on the unit disc.
    let n = example_network().unwrap().with_loop_phase(1e-3).unwrap();
    let fam = n.static_zero_families().unwrap()[0];
    let disc: Vec<C64> = (0..24).map(|k| c(0.0, 2.0 * PI * k as f64 / 24.0).exp() * 0.9).collect();
    let tail = |l: i64| {
        disc.iter()
            .map(|&z| {
                let p: C64 = (l..=2 * l).map(|k| fam.member(k)).map(|zk| (z - zk) / (z + zk.conj())).product();
                (p - c(1.0, 0.0)).norm()
            })
            .fold(0.0, f64::max)
    };
    let seq: Vec<f64> = [4, 8, 16, 32].iter().map(|&l| tail(l)).collect();
    assert!(seq.windows(2).all(|w| w[1] < w[0]), "{seq:?}");
}

#[test]
fn closed_form_reconstruction_of_reference() {
    let n = example_network().unwrap();
    let opts = FactorizeOptions {
        truncation: Truncation::ClosedForm,
        degeneracy: Degeneracy::Perturb { eps: 1e-3 },
        ..Default::default()
    };
    let nf = factorize_network(&n, 1.5 * PI, &opts).unwrap();
    assert!(nf.comparison.max_rel_error <= 1e-10);
    let (ju, du) = nf.result.b_structure();
    assert!(ju <= 1e-8 && du <= 1e-8);
    // The conjugated product form gives the same function.
    let terms = nf.result.product_form();
    for z in [c(0.0, 0.7), c(0.3, -1.9)] {
        let mut m = eye(2);
        for t in &terms {
            m *= t.eval(z);
        }
        m *= &nf.result.b;
        assert!(fro(&(m - nf.result.eval(z))) <= 1e-10);
    }
}

#[test]
fn phase_shift_strategy_is_applied_only_when_needed() {
    let opts = FactorizeOptions { truncation: Truncation::Factors(2), ..Default::default() };
    let nf = factorize_network(&example_network().unwrap(), 1.5 * PI, &opts).unwrap();
    assert!(nf.phase_shifted);
    let nf = factorize_network(&common::random_network(0), common::random_window(), &opts).unwrap();
    assert!(!nf.phase_shifted);
}

#[test]
fn zero_delay_limit_factorizes_exactly() {
    let n = ExampleParams::default().network().unwrap();
    let t: RationalTf = qcascade_core::lti::feedback(n.open(), 1).unwrap();
    let r = finite_factorize(&t, Degeneracy::Perturb { eps: 1e-3 }).unwrap();
    for z in [c(0.2, 0.4), c(-1.5, 0.3), c(0.0, 3.0)] {
        let v = t.eval(z).unwrap();
        assert!(fro(&(r.eval(z) - &v)) <= 1e-8 * (1.0 + fro(&v)));
    }
}

#[test]
fn cascade_result_round_trips_through_json() {
    let n = example_network().unwrap();
    let r = static_factorize(&n, Truncation::ClosedForm).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    let back: CascadeResult = serde_json::from_str(&s).unwrap();
    let z = c(0.1, 0.6);
    assert!(fro(&(back.eval(z) - r.eval(z))) <= 1e-12);
}
