use proptest::prelude::*;
use qcascade_core::algebra::*;
use qcascade_core::cascade::{ladder_product, sinh_ratio, static_sinh_oracle};
use qcascade_core::factor::{build_complex_factor, conjugation_residual, j_unitary_residual, sigma_bar};
use qcascade_core::linalg::{c, eye, fro, CMat, CVec, C64};
use qcascade_core::lti::{self, RationalTf, SlhModel};
use qcascade_core::roots::j_norm;

fn cplx() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

fn cvec(n: usize) -> impl Strategy<Value = CVec> {
    prop::collection::vec(cplx(), n).prop_map(CVec::from_vec)
}

fn cmat(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(cplx(), n * n).prop_map(move |v| CMat::from_vec(n, n, v))
}

proptest! {
    #[test]
    fn j_unitary_products(n in 1usize..=4, s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_j_unitary_doubled_up(n, s1).unwrap();
        let b = random_j_unitary_doubled_up(n, s2).unwrap();
        let p = a.mul(&b).unwrap();
        prop_assert!(is_j_unitary_in(&p.data, Layout::Block, 1e-10).unwrap().ok);
        prop_assert!(is_doubled_up(&p, 1e-10).ok);
        prop_assert!(is_doubled_up(&p.inverse().unwrap(), 1e-10).ok);
    }

    #[test]
    fn doubled_up_products(n in 1usize..=3, blocks in prop::collection::vec(cmat(3), 4)) {
        let sub = |m: &CMat| m.view((0, 0), (n, n)).into_owned();
        let a = DoubledUpMatrix::from_blocks(&sub(&blocks[0]), &sub(&blocks[1])).unwrap();
        let b = DoubledUpMatrix::from_blocks(&sub(&blocks[2]), &sub(&blocks[3])).unwrap();
        prop_assert!(is_doubled_up(&a.mul(&b).unwrap(), 1e-12).ok);
        if let Ok(inv) = a.inverse() {
            let scale = 1.0 + fro(&inv.data).powi(2);
            prop_assert!(is_doubled_up(&inv, 1e-12 * scale).residual <= 1e-12 * scale);
        }
    }

    #[test]
    fn flat_is_an_involution(m in cmat(4)) {
        let j = SignatureMatrix::interleaved(4).unwrap();
        let back = flat(&flat(&m, &j).unwrap(), &j).unwrap();
        prop_assert!(fro(&(back - m)) <= 1e-14);
    }

    #[test]
    fn completion_is_j_unitary(seed in any::<u64>(), k in 1usize..=3) {
        let m = random_j_unitary_doubled_up(2, seed).unwrap().to_layout(Layout::Interleaved).data;
        let w = m.columns(0, k).into_owned();
        let out = indefinite_complete(&w).unwrap();
        let scale = 1.0 + fro(&m).powi(2);
        prop_assert!(is_j_unitary(&out, 1e-10 * scale).unwrap().ok);
        prop_assert!(fro(&(out.columns(0, k) - w)) <= 1e-12);
    }

    #[test]
    fn complex_factors_are_physical(re in 0.05..2.0f64, im in 0.05..4.0f64, v in cvec(4)) {
        prop_assume!(j_norm(&v).norm() > 1e-3 * v.norm_squared());
        let f = build_complex_factor(c(re, im), &v).unwrap();
        let scale = fro(&f.v).powi(2).max(1.0);
        for k in 0..8 {
            let z = c(0.0, -4.0 + k as f64);
            prop_assert!(j_unitary_residual(&f, z) <= 1e-10 * scale);
            prop_assert!(conjugation_residual(&f, c(0.3 * k as f64 - 1.0, 0.7 * k as f64 - 2.0)) <= 1e-10 * scale);
        }
        prop_assert!((f.eval(f.zeros()[0]) * f.eigenvector(0)).norm() <= 1e-10 * scale);
        prop_assert!(f.structure_residual() <= 1e-10 * scale);
    }

    #[test]
    fn sigma_bar_is_an_involution(v in cvec(6)) {
        prop_assert!((sigma_bar(&sigma_bar(&v)) - &v).norm() <= 1e-15);
        prop_assert!((j_norm(&sigma_bar(&v)) + j_norm(&v)).norm() <= 1e-12);
    }

    #[test]
    fn slh_models_are_j_unitary_on_axis(modes in 1usize..=2, ports in 1usize..=3, seed in any::<u64>()) {
        let t = RationalTf::from_slh(&SlhModel::random(modes, ports, seed)).unwrap();
        prop_assert!(t.realization().doubled_up_residual() <= 1e-10);
        for k in 0..10 {
            let v = t.eval(c(0.0, -5.0 + 1.1 * k as f64)).unwrap();
            prop_assert!(lti::j_unitary_residual(&v) <= 1e-9);
        }
        let ti = t.inverse().unwrap();
        let z = c(0.7, 0.4);
        if let (Ok(a), Ok(b)) = (t.eval(z), ti.eval(z)) {
            prop_assert!(fro(&(a * b - eye(2 * ports))) <= 1e-8);
        }
    }

    #[test]
    fn sinh_ratio_matches_direct_formula(a in cplx(), b in cplx()) {
        let direct = a.sinh() / b.sinh();
        prop_assume!(b.sinh().norm() > 1e-3);
        prop_assert!((sinh_ratio(a, b) - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
    }

    #[test]
    fn ladder_product_vanishes_on_the_ladder(re in -1.0..1.0f64, im in 0.05..1.5f64, k in -5i64..5) {
        let period = std::f64::consts::PI;
        prop_assume!((im - 0.5 * period).abs() > 0.05);
        let zm = c(re, im);
        prop_assert!(ladder_product(zm + c(0.0, period * k as f64), zm, period).norm() <= 1e-9);
        let (_, closed) = static_sinh_oracle(zm, period, c(0.3, 0.2), 10).unwrap();
        prop_assert!((closed - ladder_product(c(0.3, 0.2), zm, period)).norm() <= 1e-12 * (1.0 + closed.norm()));
    }
}
