use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssdre::riccati::{
    care_residual, eigenvalues, newton_kleinman_step, pbh_detectable, pbh_stabilizable, solve_care, solve_lyapunov,
    spectral_abscissa, RiccatiError, PBH_TOL,
};

fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Smallest singular value of `[A − λI, B]` over the eigenvalues `λ` of `A`,
/// a cheap proxy for the distance to uncontrollability.
fn pbh_margin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    eigenvalues(a)
        .unwrap()
        .into_iter()
        .map(|lambda| {
            let mut m = DMatrix::<Complex<f64>>::zeros(n, n + b.ncols());
            for i in 0..n {
                for j in 0..n {
                    let diag = if i == j { lambda } else { Complex::new(0.0, 0.0) };
                    m[(i, j)] = Complex::new(a[(i, j)], 0.0) - diag;
                }
                for j in 0..b.ncols() {
                    m[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
                }
            }
            m.singular_values().min()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random `(A, G, Q, R)` with `Q`, `R` positive definite and the pair kept
/// at distance ≥ 0.25 from uncontrollability, so that the absolute residual
/// bound is attainable in double precision.
fn random_triple(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    loop {
        let n = rng.random_range(1..=8);
        let k = rng.random_range(1..=n.min(3));
        let a = random_matrix(rng, n, n) * 2.0;
        let g = random_matrix(rng, n, k);
        let lq = random_matrix(rng, n, n);
        let q = &lq * lq.transpose() + DMatrix::identity(n, n) * 0.1;
        let lr = random_matrix(rng, k, k);
        let r = &lr * lr.transpose() + DMatrix::identity(k, k) * 0.5;
        if pbh_margin(&a, &g) >= 0.25 {
            return (a, g, q, r);
        }
    }
}

fn gain(g: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    r.clone().lu().solve(&(g.transpose() * p)).unwrap()
}

#[test]
fn scalar_oracles() {
    // a = 0, g = q = r = 1  ->  p = 1
    let sol = solve_care(&m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap();
    assert!((sol.p[(0, 0)] - 1.0).abs() < 1e-10);
    // a = 1  ->  p = 1 + √2
    let sol = solve_care(&m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap();
    assert!((sol.p[(0, 0)] - (1.0 + 2f64.sqrt())).abs() < 1e-10);
    // a = −2, g = 1, q = 3, r = 1  ->  p² + 4p − 3 = 0
    let sol = solve_care(&m(1, 1, &[-2.0]), &m(1, 1, &[1.0]), &m(1, 1, &[3.0]), &m(1, 1, &[1.0])).unwrap();
    assert!((sol.p[(0, 0)] - (-2.0 + 7f64.sqrt())).abs() < 1e-10);
}

#[test]
fn double_integrator_oracle() {
    let a = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let g = m(2, 1, &[0.0, 1.0]);
    let sol = solve_care(&a, &g, &DMatrix::identity(2, 2), &DMatrix::identity(1, 1)).unwrap();
    let s3 = 3f64.sqrt();
    assert!(max_abs_diff(&sol.p, &m(2, 2, &[s3, 1.0, 1.0, s3])) < 1e-10);
}

#[test]
fn frozen_reference_solutions() {
    // values from an independent Hamiltonian-based solver
    let a = m(2, 2, &[0.0, 1.0, -2.0, -3.0]);
    let g = m(2, 1, &[0.0, 1.0]);
    let q = m(2, 2, &[1.0, 0.0, 0.0, 2.0]);
    let r = m(1, 1, &[0.5]);
    let expected = m(
        2,
        2,
        &[
            1.5660123990577979,
            0.22474487139158916,
            0.22474487139158916,
            0.3640667561521474,
        ],
    );
    assert!(max_abs_diff(&solve_care(&a, &g, &q, &r).unwrap().p, &expected) < 1e-10);

    let a = m(3, 3, &[1.0, 2.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, 0.5]);
    let g = m(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let r = m(2, 2, &[1.0, 0.0, 0.0, 2.0]);
    let expected = m(
        3,
        3,
        &[
            2.1121752734332153,
            1.6732184324362684,
            -0.17518584663288272,
            1.6732184324362684,
            2.2139888941975037,
            -0.4003364945088492,
            -0.17518584663288272,
            -0.4003364945088492,
            1.215672834450658,
        ],
    );
    assert!(max_abs_diff(&solve_care(&a, &g, &DMatrix::identity(3, 3), &r).unwrap().p, &expected) < 1e-10);
}

#[test]
fn random_triples_are_stabilizing_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..100 {
        let (a, g, q, r) = random_triple(&mut rng);
        let sol = solve_care(&a, &g, &q, &r).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let p = &sol.p;
        let n = a.nrows();
        let s = &g * r.clone().lu().solve(&g.transpose()).unwrap();

        let scale = 1.0 + q.norm();
        assert!(care_residual(&a, &s, &q, p) <= 1e-8 * scale, "case {case} residual");
        assert!(sol.residual_norm <= 1e-8 * scale, "case {case} reported residual");
        assert!(max_abs_diff(p, &p.transpose()) <= 1e-10, "case {case} symmetry");
        let min_eig = p.clone().symmetric_eigen().eigenvalues.min();
        assert!(min_eig > -1e-9 * (1.0 + p.amax()), "case {case} P not PSD: {min_eig}");
        assert!(
            spectral_abscissa(&(&a - &s * p)).unwrap() < 0.0,
            "case {case} not stabilizing"
        );
        assert_eq!(p.nrows(), n);
    }
}

#[test]
fn newton_kleinman_fixes_the_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let (a, g, q, r) = random_triple(&mut rng);
        let p = solve_care(&a, &g, &q, &r).unwrap().p;
        let s = &g * r.clone().lu().solve(&g.transpose()).unwrap();
        let next = newton_kleinman_step(&a, &s, &q, &p).unwrap();
        assert!(
            (&next - &p).norm() <= 1e-9 * (1.0 + p.norm()),
            "case {case}: NK step moved P by {}",
            max_abs_diff(&next, &p)
        );
    }
}

#[test]
fn gain_invariant_under_joint_weight_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..100 {
        let (a, g, q, r) = random_triple(&mut rng);
        let k = gain(&g, &r, &solve_care(&a, &g, &q, &r).unwrap().p);
        for c in [0.1, 10.0] {
            let k_c = gain(&g, &(&r * c), &solve_care(&a, &g, &(&q * c), &(&r * c)).unwrap().p);
            assert!((&k - &k_c).norm() <= 1e-8, "case {case}, c = {c}");
        }
    }
}

#[test]
fn unstabilizable_pair_is_reported() {
    // unstable mode at 1 untouched by the input
    let a = m(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let g = m(2, 1, &[0.0, 1.0]);
    let err = solve_care(&a, &g, &DMatrix::identity(2, 2), &DMatrix::identity(1, 1)).unwrap_err();
    assert!(matches!(
        err,
        RiccatiError::NotStabilizing { .. } | RiccatiError::SubspaceSingular(_) | RiccatiError::ResidualTooLarge { .. }
    ));
}

fn kalman_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let k = b.ncols();
    let mut c = DMatrix::zeros(n, n * k);
    let mut block = b.clone();
    for i in 0..n {
        c.view_mut((0, i * k), (n, k)).copy_from(&block);
        block = a * block;
    }
    c.rank(1e-9 * (1.0 + c.amax()))
}

#[test]
fn pbh_agrees_with_kalman_rank_for_unstable_plants() {
    // With every eigenvalue in the open right half plane, stabilizability is
    // the same as controllability.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..100 {
        let n = rng.random_range(1..=4);
        let t = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.5 + i as f64,
            std::cmp::Ordering::Less => rng.random_range(-1.0..1.0),
            std::cmp::Ordering::Greater => 0.0,
        });
        let basis = random_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 3.0;
        let a = &basis * t * basis.clone().try_inverse().unwrap();
        let mut b = random_matrix(&mut rng, n, 1);
        if case % 3 == 0 {
            // remove the input direction from a left eigenvector: uncontrollable
            let eig = a.transpose().complex_eigenvalues();
            let lambda = eig[0].re;
            let w = (a.transpose() - DMatrix::identity(n, n) * lambda).svd(true, true);
            let v_t = w.v_t.unwrap();
            let w0 = v_t.row(n - 1).transpose();
            let proj = w0.dot(&b.column(0)) / w0.norm_squared();
            b.set_column(0, &(b.column(0) - &w0 * proj));
        }
        let controllable = kalman_rank(&a, &b) == n;
        assert_eq!(pbh_stabilizable(&a, &b, PBH_TOL).unwrap(), controllable, "case {case}");
        // duality: (Aᵀ, bᵀ) is detectable exactly when (A, b) is stabilizable
        assert_eq!(
            pbh_detectable(&a.transpose(), &b.transpose(), PBH_TOL).unwrap(),
            controllable,
            "case {case}"
        );
    }
}

#[test]
fn lyapunov_solution_satisfies_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..50 {
        let n = rng.random_range(1..=5);
        let a = random_matrix(&mut rng, n, n) - DMatrix::identity(n, n) * 3.0;
        let c = random_matrix(&mut rng, n, n);
        let c = &c + c.transpose();
        let x = solve_lyapunov(&a, &c).unwrap();
        assert!(max_abs_diff(&(a.transpose() * &x + &x * &a), &c) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_care_matches_closed_form(a in -5.0f64..5.0, g in 0.1f64..3.0, q in 0.01f64..10.0, r in 0.1f64..10.0) {
        // p = r (a + √(a² + g² q / r)) / g²
        let expected = r * (a + (a * a + g * g * q / r).sqrt()) / (g * g);
        let sol = solve_care(&m(1, 1, &[a]), &m(1, 1, &[g]), &m(1, 1, &[q]), &m(1, 1, &[r])).unwrap();
        prop_assert!((sol.p[(0, 0)] - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        prop_assert!(sol.closed_loop_abscissa < 0.0);
    }

    #[test]
    fn diagonal_systems_decouple(d in proptest::collection::vec(-3.0f64..3.0, 1..5)) {
        let n = d.len();
        let a = DMatrix::from_diagonal(&DVector::from_vec(d.clone()));
        let sol = solve_care(&a, &DMatrix::identity(n, n), &DMatrix::identity(n, n), &DMatrix::identity(n, n)).unwrap();
        for (i, &di) in d.iter().enumerate() {
            let expected = di + (di * di + 1.0).sqrt();
            prop_assert!((sol.p[(i, i)] - expected).abs() < 1e-9);
        }
    }
}
