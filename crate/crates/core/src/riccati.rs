//! Dense continuous algebraic Riccati equation solver and pointwise
//! system-theoretic diagnostics.
//!
//! The CARE `AᵀP + PA − P G R⁻¹ Gᵀ P + Q = 0` is solved through the ordered
//! real Schur form of the Hamiltonian matrix
//!
//! ```text
//!     H = [  A   −G R⁻¹ Gᵀ ]
//!         [ −Q      −Aᵀ    ]
//! ```
//!
//! The stable invariant subspace `[X1; X2]` yields `P = X2 X1⁻¹`. A bounded
//! number of Newton–Kleinman steps polishes the result when the Schur solution
//! leaves a residual above the refinement threshold.

use nalgebra::{Complex, DMatrix, Schur, SVD};
use thiserror::Error;

/// Eigenvalues with real part above `-EPS_AXIS` are not counted as stable.
pub const EPS_AXIS: f64 = 1e-9;
/// Default relative rank threshold for the PBH tests.
pub const PBH_TOL: f64 = 1e-8;

const MAX_COND_X1: f64 = 1e12;
const REFINE_TRIGGER: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_REFINE_STEPS: usize = 3;
const SCHUR_EPS_LADDER: [f64; 3] = [1e-14, 1e-12, 1e-10];
const SCHUR_ITER_PER_DIM: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiccatiError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
    #[error("no stabilizing solution: {stable} of {required} Hamiltonian eigenvalues are stable")]
    NotStabilizing { stable: usize, required: usize },
    #[error("stable subspace does not graph over the state space (cond(X1) = {0:.3e})")]
    SubspaceSingular(f64),
    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e} after refinement")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("input weight R is not positive definite")]
    WeightNotPositive,
}

#[derive(Debug, Clone)]
pub struct CareSolution {
    pub p: DMatrix<f64>,
    pub residual_norm: f64,
    pub closed_loop_abscissa: f64,
    /// Newton–Kleinman steps applied after the Schur solve.
    pub refinement_steps: usize,
}

/// Frobenius norm of `AᵀP + PA − P S P + Q` with `S = G R⁻¹ Gᵀ`.
pub fn care_residual(a: &DMatrix<f64>, s: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    (a.transpose() * p + p * a - p * s * p + q).norm()
}

fn check_square(m: &DMatrix<f64>, n: usize, what: &str) -> Result<(), RiccatiError> {
    if m.nrows() != n || m.ncols() != n {
        return Err(RiccatiError::DimensionMismatch(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Solves the continuous algebraic Riccati equation for its stabilizing
/// solution.
pub fn solve_care(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<CareSolution, RiccatiError> {
    let n = a.nrows();
    check_square(a, n, "A")?;
    check_square(q, n, "Q")?;
    if g.nrows() != n {
        return Err(RiccatiError::DimensionMismatch(format!(
            "G has {} rows, expected {n}",
            g.nrows()
        )));
    }
    let m = g.ncols();
    check_square(r, m, "R")?;

    let r_chol = r.clone().cholesky().ok_or(RiccatiError::WeightNotPositive)?;
    let s = g * r_chol.solve(&g.transpose());
    let s = (&s + s.transpose()) * 0.5;

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let (z, stable) = stable_schur_basis(h)?;
    if stable < n {
        return Err(RiccatiError::NotStabilizing { stable, required: n });
    }
    let x1 = z.view((0, 0), (n, n)).into_owned();
    let x2 = z.view((n, 0), (n, n)).into_owned();
    let sv = x1.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > MAX_COND_X1 {
        return Err(RiccatiError::SubspaceSingular(cond));
    }
    // P X1 = X2  <=>  X1ᵀ Pᵀ = X2ᵀ
    let pt = x1
        .transpose()
        .lu()
        .solve(&x2.transpose())
        .ok_or(RiccatiError::SubspaceSingular(f64::INFINITY))?;
    let mut p = pt.transpose();
    p = (&p + p.transpose()) * 0.5;

    let scale = 1.0 + q.norm();
    let mut residual = care_residual(a, &s, q, &p);
    let mut steps = 0;
    while residual > REFINE_TRIGGER * scale && steps < MAX_REFINE_STEPS {
        steps += 1;
        let Some(next) = newton_kleinman_step(a, &s, q, &p) else {
            break;
        };
        let next_residual = care_residual(a, &s, q, &next);
        if !(next_residual < residual) {
            break;
        }
        p = next;
        residual = next_residual;
    }
    if residual > RESIDUAL_TOL * scale {
        return Err(RiccatiError::ResidualTooLarge {
            residual,
            tolerance: RESIDUAL_TOL * scale,
        });
    }

    let closed_loop_abscissa = spectral_abscissa(&(a - &s * &p))?;
    if closed_loop_abscissa >= 0.0 {
        return Err(RiccatiError::NotStabilizing {
            stable: stable.min(n - 1),
            required: n,
        });
    }
    Ok(CareSolution {
        p,
        residual_norm: residual,
        closed_loop_abscissa,
        refinement_steps: steps,
    })
}

/// One Newton–Kleinman step from `p`: solves
/// `(A − S P)ᵀ P⁺ + P⁺ (A − S P) = −(Q + P S P)`.
pub fn newton_kleinman_step(
    a: &DMatrix<f64>,
    s: &DMatrix<f64>,
    q: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Option<DMatrix<f64>> {
    let acl = a - s * p;
    let rhs = -(q + p * s * p);
    let next = solve_lyapunov(&acl, &rhs)?;
    Some((&next + next.transpose()) * 0.5)
}

/// Solves `Aᵀ X + X A = C` through the Kronecker form. Intended for the
/// small dense systems handled here (n ≤ ~15).
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let nn = n * n;
    // column-major vec: vec(AᵀX) = (I ⊗ Aᵀ) vec X, vec(XA) = (Aᵀ ⊗ I) vec X
    let mut k = DMatrix::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for l in 0..n {
                // (AᵀX)_{ij} = Σ_l A_{li} X_{lj}
                k[(row, j * n + l)] += a[(l, i)];
                // (XA)_{ij} = Σ_l X_{il} A_{lj}
                k[(row, l * n + i)] += a[(l, j)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(c.as_slice());
    let x = k.lu().solve(&rhs)?;
    Some(DMatrix::from_column_slice(n, n, x.as_slice()))
}

/// Maximum real part over the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64, RiccatiError> {
    Ok(eigenvalues(a)?.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, RiccatiError> {
    if a.nrows() != a.ncols() {
        return Err(RiccatiError::DimensionMismatch("matrix must be square".into()));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(RiccatiError::EigenFailure);
    }
    let (_, t) = robust_schur(a.clone()).ok_or(RiccatiError::EigenFailure)?;
    Ok(schur_blocks(&t).iter().flat_map(|b| block_eigenvalues(&t, b)).collect())
}

/// PBH stabilizability: every eigenvalue with `Re λ ≥ −EPS_AXIS` must leave
/// `[λI − A, B]` with full row rank.
pub fn pbh_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool, RiccatiError> {
    Ok(pbh_uncontrollable_modes(a, b, tol)?.is_empty())
}

/// PBH detectability: every eigenvalue with `Re λ ≥ −EPS_AXIS` must leave
/// `[λI − A; C]` with full column rank.
pub fn pbh_detectable(a: &DMatrix<f64>, c: &DMatrix<f64>, tol: f64) -> Result<bool, RiccatiError> {
    Ok(pbh_unobservable_modes(a, c, tol)?.is_empty())
}

/// Eigenvalues of `a` that fail the PBH controllability rank test.
pub fn pbh_uncontrollable_modes(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    tol: f64,
) -> Result<Vec<Complex<f64>>, RiccatiError> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(RiccatiError::DimensionMismatch("B rows must match A".into()));
    }
    // rank threshold is anchored to the data scale so that a pencil made
    // entirely of roundoff does not count as full rank
    let scale = a.norm() + b.norm();
    let mut failing = Vec::new();
    for lambda in eigenvalues(a)? {
        if lambda.re < -EPS_AXIS {
            continue;
        }
        let mut m = DMatrix::<Complex<f64>>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j { lambda } else { Complex::new(0.0, 0.0) };
                m[(i, j)] = diag - Complex::new(a[(i, j)], 0.0);
            }
            for j in 0..b.ncols() {
                m[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        if numerical_rank(m, tol, scale) < n {
            failing.push(lambda);
        }
    }
    Ok(failing)
}

/// Eigenvalues of `a` that fail the PBH observability rank test.
pub fn pbh_unobservable_modes(a: &DMatrix<f64>, c: &DMatrix<f64>, tol: f64) -> Result<Vec<Complex<f64>>, RiccatiError> {
    if c.ncols() != a.nrows() {
        return Err(RiccatiError::DimensionMismatch("C columns must match A".into()));
    }
    pbh_uncontrollable_modes(&a.transpose(), &c.transpose(), tol)
}

/// Number of singular values above `tol · max(σ_max, scale)`.
fn numerical_rank(m: DMatrix<Complex<f64>>, tol: f64, scale: f64) -> usize {
    let sv = SVD::new(m, false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let threshold = tol * smax.max(scale);
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Symmetric PSD square root, negative eigenvalues clamped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    size: usize,
}

fn schur_blocks(t: &DMatrix<f64>) -> Vec<Block> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push(Block { start: i, size: 2 });
            i += 2;
        } else {
            blocks.push(Block { start: i, size: 1 });
            i += 1;
        }
    }
    blocks
}

fn block_eigenvalues(t: &DMatrix<f64>, b: &Block) -> Vec<Complex<f64>> {
    let i = b.start;
    if b.size == 1 {
        return vec![Complex::new(t[(i, i)], 0.0)];
    }
    let (a, bb, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let half_tr = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + bb * c;
    if disc >= 0.0 {
        let r = disc.sqrt();
        vec![Complex::new(half_tr + r, 0.0), Complex::new(half_tr - r, 0.0)]
    } else {
        let im = (-disc).sqrt();
        vec![Complex::new(half_tr, im), Complex::new(half_tr, -im)]
    }
}

fn block_real_part(t: &DMatrix<f64>, b: &Block) -> f64 {
    // only called on 1x1 blocks and complex-pair 2x2 blocks
    block_eigenvalues(t, b)[0].re
}

/// Applies the orthogonal similarity `Qsᵀ T Qs` on the index window starting
/// at `start` and accumulates `Qs` into `z`.
fn apply_similarity(t: &mut DMatrix<f64>, z: &mut DMatrix<f64>, start: usize, qs: &DMatrix<f64>) {
    let k = qs.nrows();
    let n = t.nrows();
    let rows = t.view((start, 0), (k, n)).into_owned();
    t.view_mut((start, 0), (k, n)).copy_from(&(qs.transpose() * rows));
    let cols = t.view((0, start), (n, k)).into_owned();
    t.view_mut((0, start), (n, k)).copy_from(&(cols * qs));
    let zc = z.view((0, start), (n, k)).into_owned();
    z.view_mut((0, start), (n, k)).copy_from(&(zc * qs));
}

/// Real Schur factorization `m = Z T Zᵀ`.
///
/// nalgebra deflates only when a subdiagonal entry falls below `eps` relative
/// to its diagonal neighbours. Repeated eigenvalues (the γ-shifted barrier
/// rows produce them routinely) keep those entries at roundoff level, so the
/// tolerance is relaxed in steps before the factorization is retried on
/// `W m Wᵀ` for a few fixed Householder reflections `W`.
fn robust_schur(m: DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let max_iter = SCHUR_ITER_PER_DIM * n.max(4);
    for eps in SCHUR_EPS_LADDER {
        if let Some(schur) = Schur::try_new(m.clone(), eps, max_iter) {
            return Some(schur.unpack());
        }
    }
    for attempt in 1..=3usize {
        let v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + ((i * (2 * attempt + 1)) % 7) as f64 / attempt as f64);
        let v = v.normalize();
        let w = DMatrix::identity(n, n) - &v * v.transpose() * 2.0;
        let rotated = &w * &m * &w;
        for eps in SCHUR_EPS_LADDER {
            if let Some(schur) = Schur::try_new(rotated.clone(), eps, max_iter) {
                let (z, t) = schur.unpack();
                return Some((w * z, t));
            }
        }
    }
    None
}

/// Splits 2x2 diagonal blocks that carry a real eigenvalue pair into two
/// 1x1 blocks.
fn split_real_pairs(t: &mut DMatrix<f64>, z: &mut DMatrix<f64>) {
    let n = t.nrows();
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] == 0.0 {
            i += 1;
            continue;
        }
        let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc >= 0.0 {
            let lambda = 0.5 * (a + d) + disc.sqrt().copysign(0.5 * (a - d));
            // eigenvector of [[a,b],[c,d]] for lambda
            let (v0, v1) = if (lambda - d).abs() + c.abs() >= b.abs() + (lambda - a).abs() {
                (lambda - d, c)
            } else {
                (b, lambda - a)
            };
            let norm = v0.hypot(v1);
            if norm > 0.0 {
                let (cs, sn) = (v0 / norm, v1 / norm);
                let g = DMatrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
                apply_similarity(t, z, i, &g);
            }
            t[(i + 1, i)] = 0.0;
            i += 1;
        } else {
            i += 2;
        }
    }
}

/// Swaps the adjacent diagonal blocks `first` (size p) and `second` (size q)
/// of the quasi-triangular `t`.
fn swap_blocks(t: &mut DMatrix<f64>, z: &mut DMatrix<f64>, first: Block, second: Block) -> Option<()> {
    let (p, q) = (first.size, second.size);
    let s = first.start;
    let t11 = t.view((s, s), (p, p)).into_owned();
    let t22 = t.view((s + p, s + p), (q, q)).into_owned();
    let t12 = t.view((s, s + p), (p, q)).into_owned();
    // T11 X − X T22 = T12, vectorized column-major
    let mut k = DMatrix::zeros(p * q, p * q);
    for j in 0..q {
        for i in 0..p {
            let row = j * p + i;
            for l in 0..p {
                k[(row, j * p + l)] += t11[(i, l)];
            }
            for l in 0..q {
                k[(row, l * p + i)] -= t22[(l, j)];
            }
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(t12.as_slice());
    let x = k.lu().solve(&rhs)?;
    let x = DMatrix::from_column_slice(p, q, x.as_slice());
    // span of the first q columns of M is the T22-invariant subspace [−X; I]
    let dim = p + q;
    let mut m = DMatrix::zeros(dim, dim);
    m.view_mut((0, 0), (p, q)).copy_from(&(-&x));
    m.view_mut((p, 0), (q, q)).fill_with_identity();
    m.view_mut((0, q), (p, p)).fill_with_identity();
    let qs = m.qr().q();
    apply_similarity(t, z, s, &qs);
    t.view_mut((s + q, s), (p, q)).fill(0.0);
    Some(())
}

/// Computes an orthogonal basis whose leading columns span the stable
/// invariant subspace of `h`. Returns the full Schur vector matrix and the
/// number of stable eigenvalues moved to the front.
fn stable_schur_basis(h: DMatrix<f64>) -> Result<(DMatrix<f64>, usize), RiccatiError> {
    if h.iter().any(|v| !v.is_finite()) {
        return Err(RiccatiError::EigenFailure);
    }
    let (mut z, mut t) = robust_schur(h).ok_or(RiccatiError::EigenFailure)?;
    split_real_pairs(&mut t, &mut z);

    let mut blocks = schur_blocks(&t);
    let is_stable = |t: &DMatrix<f64>, b: &Block| block_real_part(t, b) < -EPS_AXIS;
    let mut flags: Vec<bool> = blocks.iter().map(|b| is_stable(&t, b)).collect();

    // bubble stable blocks to the front, preserving relative order
    while let Some(k) = (0..blocks.len().saturating_sub(1)).find(|&k| !flags[k] && flags[k + 1]) {
        let (first, second) = (blocks[k], blocks[k + 1]);
        swap_blocks(&mut t, &mut z, first, second).ok_or(RiccatiError::EigenFailure)?;
        blocks[k] = Block {
            start: first.start,
            size: second.size,
        };
        blocks[k + 1] = Block {
            start: first.start + second.size,
            size: first.size,
        };
        flags.swap(k, k + 1);
    }
    let stable = blocks.iter().zip(&flags).filter(|(_, &f)| f).map(|(b, _)| b.size).sum();
    Ok((z, stable))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn scalar_integrator() {
        let sol = solve_care(&m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap();
        assert_close(sol.p[(0, 0)], 1.0, 1e-12);
        assert_close(sol.closed_loop_abscissa, -1.0, 1e-12);
    }

    #[test]
    fn scalar_lyapunov_case() {
        let sol = solve_care(&m(1, 1, &[-1.0]), &m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap();
        assert_close(sol.p[(0, 0)], 0.5, 1e-12);
    }

    #[test]
    fn double_integrator() {
        let sol = solve_care(
            &m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            &m(2, 1, &[0.0, 1.0]),
            &DMatrix::identity(2, 2),
            &m(1, 1, &[1.0]),
        )
        .unwrap();
        let r3 = 3f64.sqrt();
        assert_close(sol.p[(0, 0)], r3, 1e-10);
        assert_close(sol.p[(0, 1)], 1.0, 1e-10);
        assert_close(sol.p[(1, 0)], 1.0, 1e-10);
        assert_close(sol.p[(1, 1)], r3, 1e-10);
    }

    #[test]
    fn unstabilizable_pair_rejected() {
        let err = solve_care(&m(1, 1, &[1.0]), &m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap_err();
        assert!(matches!(err, RiccatiError::NotStabilizing { .. }), "{err:?}");
    }

    #[test]
    fn indefinite_r_rejected() {
        let err = solve_care(&m(1, 1, &[0.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[-1.0])).unwrap_err();
        assert_eq!(err, RiccatiError::WeightNotPositive);
    }

    #[test]
    fn dimension_mismatch() {
        let err = solve_care(
            &m(1, 1, &[0.0]),
            &m(2, 1, &[1.0, 0.0]),
            &m(1, 1, &[1.0]),
            &m(1, 1, &[1.0]),
        )
        .unwrap_err();
        assert!(matches!(err, RiccatiError::DimensionMismatch(_)));
    }

    #[test]
    fn complex_pair_reordering() {
        // oscillator with an unstable spiral: forces 2x2 block swaps
        let a = m(3, 3, &[0.3, 2.0, 0.0, -2.0, 0.3, 1.0, 0.0, 0.0, -0.5]);
        let g = m(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let q = DMatrix::identity(3, 3);
        let r = DMatrix::identity(2, 2);
        let sol = solve_care(&a, &g, &q, &r).unwrap();
        assert!(sol.residual_norm < 1e-10);
        assert!(sol.closed_loop_abscissa < 0.0);
    }

    #[test]
    fn abscissa_examples() {
        assert_close(spectral_abscissa(&m(2, 2, &[0.0, 1.0, -1.0, 1.0])).unwrap(), 0.5, 1e-12);
        assert_close(spectral_abscissa(&DMatrix::zeros(2, 2)).unwrap(), 0.0, 1e-15);
        let ad = m(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, -1.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0,
            ],
        );
        assert_close(spectral_abscissa(&ad).unwrap(), 0.0, 1e-12);
    }

    #[test]
    fn abscissa_rejects_nan() {
        assert_eq!(
            spectral_abscissa(&m(1, 1, &[f64::NAN])).unwrap_err(),
            RiccatiError::EigenFailure
        );
    }

    #[test]
    fn pbh_examples() {
        assert!(!pbh_stabilizable(&m(2, 2, &[1.0, 0.0, 0.0, 2.0]), &m(2, 1, &[1.0, 0.0]), PBH_TOL).unwrap());
        assert!(pbh_stabilizable(&m(2, 2, &[0.0, 1.0, 0.0, 0.0]), &m(2, 1, &[0.0, 1.0]), PBH_TOL).unwrap());
        assert!(!pbh_detectable(&m(2, 2, &[-1.0, 0.0, 0.0, 1.0]), &m(1, 2, &[1.0, 0.0]), PBH_TOL).unwrap());
        // the zero mode is marginal and unobserved
        assert!(!pbh_detectable(&m(1, 1, &[0.0]), &m(1, 1, &[0.0]), PBH_TOL).unwrap());
        // stable unobserved modes are fine
        assert!(pbh_detectable(&m(1, 1, &[-1.0]), &m(1, 1, &[0.0]), PBH_TOL).unwrap());
    }

    #[test]
    fn lyapunov_solution() {
        let a = m(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let c = m(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let x = solve_lyapunov(&a, &c).unwrap();
        let res = a.transpose() * &x + &x * &a - &c;
        assert!(res.norm() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let q = m(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = psd_sqrt(&q);
        assert!((&s * &s - &q).norm() < 1e-12);
    }
}
