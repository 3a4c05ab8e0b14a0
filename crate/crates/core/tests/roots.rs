mod common;

use qcascade_core::algebra::{j_matrix, Layout};
use qcascade_core::cascade::finite_zero_records;
use qcascade_core::delay::Which;
use qcascade_core::example::{example_network, ExampleParams};
use qcascade_core::factor::sigma_bar;
use qcascade_core::linalg::{c, fro, min_right_singular, vnorm, CMat, CVec, C64};
use qcascade_core::lti::RationalTf;
use qcascade_core::roots::*;
use std::f64::consts::PI;

fn overlap(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).norm() / (vnorm(a) * vnorm(b))
}

#[test]
fn reference_window() {
    let n = example_network().unwrap();
    let s = scan(&n, 1.5 * PI, Which::Exact).unwrap();
    let poles: Vec<C64> = s.poles().map(|r| r.position).collect();
    for p in [-0.3, -0.7] {
        assert!(poles.iter().any(|z| (z - c(p, 0.0)).norm() <= 1e-8), "{poles:?}");
    }
    let lp = ExampleParams::default().loop_pole_real_part();
    assert!(poles.iter().any(|z| z.im.abs() < 1e-9 && (z.re - lp).abs() < 1e-8));
    // Every record is paired both ways.
    for (i, r) in s.records.iter().enumerate() {
        let j = r.partner_neg_conj.expect("pole/zero partner");
        assert!((s.records[j].position + r.position.conj()).norm() <= 1e-7);
        assert_ne!(s.records[j].kind, r.kind);
        let k = r.partner_conj.expect("conjugate partner");
        assert!((s.records[k].position - r.position.conj()).norm() <= 1e-7);
        if r.is_real() {
            assert_eq!(k, i);
        }
    }
}

#[test]
fn static_poles_repeat_with_the_period() {
    let n = example_network().unwrap();
    let strip = n.compute_strip().unwrap();
    let p = n.period();
    let f = |z| n.pole_target(z, Which::Static);
    let (mut a, _) =
        find_roots(&f, &Rect::new(strip.c_low, strip.c_high, -0.4, p - 0.4), Polish::Newton, &ScanOptions::default())
            .unwrap();
    let (mut b, _) =
        find_roots(&f, &Rect::new(strip.c_low, strip.c_high, p - 0.4, 2.0 * p - 0.4), Polish::Newton, &ScanOptions::default())
            .unwrap();
    assert_eq!(a.len(), b.len());
    a.sort_by(|x, y| x.z.im.total_cmp(&y.z.im));
    b.sort_by(|x, y| x.z.im.total_cmp(&y.z.im));
    for (x, y) in a.iter().zip(&b) {
        assert!((y.z - x.z - c(0.0, p)).norm() <= 1e-9);
    }
}

#[test]
fn squeezer_zero_eigenvector() {
    let t = RationalTf::from_slh(&ExampleParams::default().squeezer().unwrap()).unwrap();
    let recs = finite_zero_records(&t).unwrap();
    let r = recs.iter().find(|r| (r.position - c(0.3, 0.0)).norm() < 1e-9).expect("zero at 0.3");
    let v = r.vector();
    assert!(vnorm(&(t.eval(r.position).unwrap() * v)) <= 1e-8);
}

#[test]
fn pole_vector_from_zero_vector() {
    let n = common::random_network(5);
    let s = scan(&n, common::random_window(), Which::Exact).unwrap();
    let z0 = s.zeros().find(|r| !r.is_real() && !r.degenerate).expect("complex zero");
    let x = z0.vector();
    let j = j_matrix(x.len(), Layout::Interleaved);
    let row = x.adjoint() * &j;
    let pole = -z0.position.conj();
    let mut seq = Vec::new();
    for d in [1e-1, 1e-2, 1e-3, 1e-4] {
        let z = pole + c(d, 0.5 * d);
        let inv = qcascade_core::linalg::inverse(&n.closed_tf(z).unwrap()).unwrap();
        seq.push((&row * inv).norm());
    }
    // Linear vanishing: three decades closer gives roughly three decades smaller.
    assert!(seq.windows(2).all(|w| w[1] < 0.2 * w[0]), "{seq:?}");
}

#[test]
fn conjugate_zero_eigenvector() {
    let n = common::random_network(9);
    let s = scan(&n, common::random_window(), Which::Exact).unwrap();
    for r in s.zeros().filter(|r| !r.is_real() && !r.degenerate) {
        let k = r.partner_conj.unwrap();
        let y = s.records[k].vector();
        assert!(overlap(&sigma_bar(&r.vector()), &y) >= 1.0 - 1e-8);
    }
}

#[test]
fn records_are_refined() {
    let n = example_network().unwrap().with_loop_phase(1e-3).unwrap();
    let s = scan(&n, 1.5 * PI, Which::Exact).unwrap();
    for r in s.zeros() {
        let t = n.closed_tf(r.position).unwrap();
        let scale = 1.0 + fro(&t);
        assert!(r.residual <= 1e-8 * scale, "{} {}", r.position, r.residual);
    }
}

#[test]
fn projector_distance_scales_like_one_over_m() {
    let n = common::random_network(11);
    let fam = n.static_zero_families().unwrap()[0];
    let mut scaled = Vec::new();
    for m in [20i64, 40, 80] {
        let zs = fam.member(m);
        let (roots, _) = find_roots(
            &|z| n.zero_target(z, Which::Exact),
            &Rect::around(zs, 0.3),
            Polish::Muller,
            &ScanOptions::default(),
        )
        .unwrap();
        let ze = roots[0].z;
        let proj = |v: CVec| -> CMat { &v * v.adjoint() / c(v.norm_squared(), 0.0) };
        let pt = proj(min_right_singular(&n.closed_tf(ze).unwrap()).0);
        let ps = proj(min_right_singular(&n.static_tf(zs).unwrap()).0);
        scaled.push(fro(&(pt - ps)) * m as f64);
    }
    let hi = scaled.iter().copied().fold(0.0, f64::max);
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 1.5, "{scaled:?}");
}

#[test]
fn winding_matches_static_subdivision() {
    let n = example_network().unwrap();
    let strip = n.compute_strip().unwrap();
    let rect = Rect::new(strip.c_low, strip.c_high, -0.4, n.period() - 0.4);
    let recs = subdivide_and_refine(&n, &rect, Kind::Pole, Which::Static).unwrap();
    let w = count_in_rectangle(&|z| n.pole_target(z, Which::Static), &rect).unwrap();
    assert_eq!(recs.iter().map(|r| r.multiplicity as i64).sum::<i64>(), w.winding);
}
