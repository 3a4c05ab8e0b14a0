use qcascade_core::algebra::{j_matrix, Layout};
use qcascade_core::factor::*;
use qcascade_core::linalg::{c, eye, fro, sigma_min, CMat, CVec, C64};
use qcascade_core::lti::RationalTf;
use qcascade_core::roots::{count_in_rectangle, j_norm, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_points(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))).collect()
}

fn axis(n: usize) -> Vec<C64> {
    (0..n).map(|k| c(0.0, -8.0 + 16.0 * k as f64 / (n - 1) as f64)).collect()
}

/// A self-conjugate vector `(a, ā, b, b̄)`.
fn self_conj(entries: &[C64]) -> CVec {
    CVec::from_iterator(entries.len() * 2, entries.iter().flat_map(|&a| [a, a.conj()]))
}

fn sample_factors() -> Vec<CanonicalFactor> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut out = Vec::new();
    for k in 0..4 {
        let v = random_vec(4, &mut rng);
        out.push(build_complex_factor(c(0.3 + 0.2 * k as f64, 0.7 - 0.4 * k as f64), &v).unwrap());
    }
    let v1 = self_conj(&[c(1.0, 0.2), c(0.3, -0.1)]);
    let v2 = self_conj(&[c(0.3, 1.0), c(0.2, 0.4)]);
    out.push(build_real_factor(0.3, 0.7, &v1, &v2).unwrap());
    out
}

#[test]
fn invariants_of_built_factors() {
    for f in sample_factors() {
        let j = j_matrix(f.dim(), Layout::Interleaved);
        for z in axis(50) {
            assert!(j_unitary_residual(&f, z) <= 1e-10);
        }
        for z in random_points(50, 7) {
            assert!(conjugation_residual(&f, z) <= 1e-10);
            // Generic points: P(z)JP(−z̄)† = J.
            assert!(fro(&(f.eval(z) * &j * f.eval(-z.conj()).adjoint() - &j)) <= 1e-10);
        }
        // P(z) − I = O(|z|⁻¹) with a constant set by the size of V.
        let scale = fro(&f.v).powi(2).max(1.0);
        for r in [1e3, 1e6] {
            assert!(fro(&(f.eval(c(r, 0.3 * r)) - eye(f.dim()))) <= 10.0 * scale / r);
        }
        assert!(fro(&(f.eval(c(0.0, 1e9)) - eye(f.dim()))) <= 1e-8 * scale);
        for (k, z) in f.zeros().iter().enumerate() {
            assert!(sigma_min(&f.eval(*z)) <= 1e-8);
            let v = f.eigenvector(k);
            assert!(fro(&(f.eval(*z) * CMat::from_column_slice(v.len(), 1, v.as_slice()))) <= 1e-10);
        }
    }
}

#[test]
fn eigenrelation_at_sampled_points() {
    for f in sample_factors() {
        let v = f.eigenvector(0);
        for z in random_points(20, 8) {
            let lhs = f.eval(z) * &v;
            let rhs = &v * f.eigenvalue(z, 0);
            assert!((lhs - rhs).norm() <= 1e-9);
        }
    }
}

#[test]
fn zeros_are_the_only_zeros() {
    for f in sample_factors() {
        let [z1, z2] = f.zeros();
        let lo_re = z1.re.min(z2.re) - 0.05;
        let hi_re = z1.re.max(z2.re) + 0.05;
        // Poles sit in the mirrored half-plane, so a rectangle around the zeros holds no pole.
        let rect = Rect::new(lo_re.max(1e-3), hi_re, -2.0, 2.0);
        let w = count_in_rectangle(&|z| qcascade_core::linalg::det(&f.eval(z)), &rect).unwrap();
        assert_eq!(w.winding, 2);
    }
}

#[test]
fn conjugate_vector_has_negative_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = build_complex_factor(c(0.4, 1.1), &random_vec(2, &mut rng)).unwrap();
    let v = f.eigenvector(0);
    let w = sigma_bar(&v);
    assert!((j_norm(&v) - c(1.0, 0.0)).norm() < 1e-12);
    assert!((j_norm(&w) + c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn modified_factor_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut v = random_vec(2, &mut rng);
    if j_norm(&v).re < 0.0 {
        v = sigma_bar(&v);
    }
    let vm = v_from_vector(&v).unwrap();
    let z0 = c(0.2, 1.3);
    let f = build_modified_degenerate_factor(z0, &vm).unwrap();
    for z in axis(50) {
        assert!(j_unitary_residual(&f, z) <= 1e-10);
    }
    assert!(fro(&(f.eval(c(1e9, 0.0)) - eye(2))) <= 1e-8);
    for k in 0..2 {
        let col = vm.column(k).into_owned();
        assert!((f.eval(z0) * col).norm() <= 1e-10);
    }
    // A perturbed eigenvector gives nearly the same factor.
    let vp = perturb_eigenvector(&v, 1e-3);
    let g = build_modified_degenerate_factor(z0, &v_from_vector(&vp).unwrap()).unwrap();
    for z in random_points(10, 9) {
        assert!(fro(&(f.eval(z) - g.eval(z))) <= 1e-2);
    }
}

#[test]
fn blaschke_potapov_reconstruction() {
    for f in sample_factors().into_iter().filter(|f| f.variant == FactorVariant::ComplexPair) {
        let w = qcascade_core::algebra::j_right(&f.v, Layout::Interleaved);
        let gram = w.adjoint() * qcascade_core::algebra::j_left(&w, Layout::Interleaved);
        assert!(fro(&(gram - j_matrix(2, Layout::Interleaved))) <= 1e-10);
        let bp = to_blaschke_potapov_form(&f).unwrap();
        for z in random_points(20, 10) {
            assert!(fro(&(bp.eval(z) - f.eval(z))) <= 1e-9);
        }
        let far = bp.diag_entries(c(1e12, 0.0));
        for (k, d) in far.iter().enumerate() {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((d - c(s, 0.0)).norm() < 1e-9);
        }
    }
    assert!(to_blaschke_potapov_form(&sample_factors()[4]).is_err());
}

#[test]
fn slh_realizations_reproduce_the_factor() {
    for f in sample_factors() {
        let p = factor_to_slh(&f).unwrap();
        let t = RationalTf::from_slh(&p.to_slh_model().unwrap()).unwrap();
        for z in random_points(20, 11) {
            let Ok(v) = t.eval(z) else { continue };
            assert!(fro(&(v - f.eval(z))) <= 1e-8, "{:?}", f.variant);
        }
        // Round trip through the model recovers (κ, c).
        let g = match f.variant {
            FactorVariant::ComplexPair => build_complex_factor(f.roots[0], &f.eigenvector(0)).unwrap(),
            _ => build_real_factor(f.roots[0].re, f.roots[1].re, &f.eigenvector(0), &f.eigenvector(1)).unwrap(),
        };
        let q = factor_to_slh(&g).unwrap();
        assert!((q.kappa - p.kappa).abs() < 1e-10 && (q.c - p.c).abs() < 1e-10);
    }
}

#[test]
fn real_factor_from_reference_roots() {
    let v1 = self_conj(&[c(1.0, 0.2)]);
    let v2 = self_conj(&[c(0.3, 1.0)]);
    let f = build_real_factor(0.3, 0.7, &v1, &v2).unwrap();
    let p = factor_to_slh(&f).unwrap();
    assert!((p.kappa - 1.0).abs() < 1e-12 && (p.c.abs() - 0.2).abs() < 1e-12);
    assert_eq!(real_roots(1.0, 0.2), (0.3, 0.7));
}
