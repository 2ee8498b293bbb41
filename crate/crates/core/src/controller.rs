//! Pointwise control laws: SSDRE (single or multiple barrier states),
//! conventional SDRE tracking and the CBF-QP safety filter.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{build_augmented, Design, ModelError, SafetyConstraint, SdcPlant};
use crate::riccati::{self, CareSolution, RiccatiError};

/// Lagrange multipliers above this are treated as non-negative.
const MULTIPLIER_TOL: f64 = -1e-12;
/// Slack allowed on inactive constraints at a candidate optimum.
const FEASIBILITY_TOL: f64 = -1e-10;
/// Reciprocal condition below which an active-set Gram matrix is singular.
const GRAM_RCOND: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Riccati solve failed: {0}")]
    Riccati(#[from] RiccatiError),
    #[error("safety QP is infeasible: constraints conflict")]
    Infeasible,
    #[error("QP has {constraints} constraints; at most {max} supported")]
    TooManyConstraints { constraints: usize, max: usize },
}

/// `K_z = [K1 | K2 | K3]` split by plant, reference and barrier columns.
#[derive(Debug, Clone)]
pub struct GainPartition {
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    pub k3: DMatrix<f64>,
}

impl GainPartition {
    fn split(k: &DMatrix<f64>, n: usize, n_d: usize, nb: usize) -> Self {
        let m = k.nrows();
        Self {
            k1: k.view((0, 0), (m, n)).into_owned(),
            k2: k.view((0, n), (m, n_d)).into_owned(),
            k3: k.view((0, n + n_d), (m, nb)).into_owned(),
        }
    }

    pub fn stacked(&self) -> DMatrix<f64> {
        let m = self.k1.nrows();
        let (n, n_d, nb) = (self.k1.ncols(), self.k2.ncols(), self.k3.ncols());
        let mut k = DMatrix::zeros(m, n + n_d + nb);
        k.view_mut((0, 0), (m, n)).copy_from(&self.k1);
        k.view_mut((0, n), (m, n_d)).copy_from(&self.k2);
        k.view_mut((0, n + n_d), (m, nb)).copy_from(&self.k3);
        k
    }
}

#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub u: DVector<f64>,
    pub gains: GainPartition,
    pub z: DVector<f64>,
    pub care: CareSolution,
}

/// SSDRE law `u = −K1 x − K2 v − K3 z⃗` with `K_z = R⁻¹ G_zᵀ P_z`.
///
/// The `e^{−γt}` scaling of the augmented state cancels in feedback form, so
/// the gain is applied to the unscaled `[x; v; z⃗]`.
pub fn ssdre_control(design: &Design, x: &DVector<f64>, v: &DVector<f64>) -> Result<ControlOutput, ControlError> {
    let z = design.barrier_values(x, v)?;
    let aug = build_augmented(design, x, v, &z)?;
    let care = riccati::solve_care(&aug.a_z, &aug.g_z, &aug.q_z, &aug.r)?;
    let rhs = aug.g_z.transpose() * &care.p;
    let k = aug
        .r
        .clone()
        .cholesky()
        .ok_or(RiccatiError::WeightNotPositive)?
        .solve(&rhs);
    let gains = GainPartition::split(&k, aug.n, aug.n_d, aug.barrier_count);
    let u = -(&gains.k1 * x) - &gains.k2 * v - &gains.k3 * &z;
    Ok(ControlOutput { u, gains, z, care })
}

/// Conventional SDRE tracking: the SSDRE pipeline with no barrier rows.
pub fn sdre_tracking_control(
    design: &Design,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<ControlOutput, ControlError> {
    ssdre_control(&design.without_barriers(), x, v)
}

/// Constraints `b_iᵀ δu ≥ −c_i` of the minimum-norm safety correction.
#[derive(Debug, Clone, Default)]
pub struct QpProblem {
    pub b_rows: Vec<DVector<f64>>,
    pub c_terms: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.b_rows.first().map_or(0, |b| b.len())
    }

    pub fn satisfied(&self, du: &DVector<f64>, slack: f64) -> bool {
        self.b_rows
            .iter()
            .zip(&self.c_terms)
            .all(|(b, c)| b.dot(du) + c >= slack)
    }
}

pub const QP_MAX_CONSTRAINTS: usize = 8;

/// Exact minimizer of `½‖δu‖²` subject to `b_iᵀδu ≥ −c_i`, by active-set
/// enumeration in order of subset size, then lexicographic order.
pub fn qp_min_norm(qp: &QpProblem) -> Result<DVector<f64>, ControlError> {
    let count = qp.b_rows.len();
    if count > QP_MAX_CONSTRAINTS {
        return Err(ControlError::TooManyConstraints {
            constraints: count,
            max: QP_MAX_CONSTRAINTS,
        });
    }
    let m = qp.dim();
    for size in 0..=count.min(m) {
        for subset in Combinations::new(count, size) {
            let Some((du, multipliers)) = solve_active_set(qp, &subset, m) else {
                continue;
            };
            if multipliers.iter().all(|&l| l >= MULTIPLIER_TOL) && qp.satisfied(&du, FEASIBILITY_TOL) {
                return Ok(du);
            }
        }
    }
    Err(ControlError::Infeasible)
}

/// Equality-constrained KKT solve on `subset`; `None` when its Gram matrix is
/// rank deficient.
fn solve_active_set(qp: &QpProblem, subset: &[usize], m: usize) -> Option<(DVector<f64>, DVector<f64>)> {
    if subset.is_empty() {
        return Some((DVector::zeros(m), DVector::zeros(0)));
    }
    let k = subset.len();
    let mut b = DMatrix::zeros(k, m);
    for (row, &i) in subset.iter().enumerate() {
        b.row_mut(row).copy_from(&qp.b_rows[i].transpose());
    }
    let gram = &b * b.transpose();
    let sv = gram.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 || sv.min() / smax < GRAM_RCOND {
        return None;
    }
    let rhs = DVector::from_iterator(k, subset.iter().map(|&i| -qp.c_terms[i]));
    let lambda = gram.lu().solve(&rhs)?;
    let du = b.transpose() * &lambda;
    Some((du, lambda))
}

/// Lexicographic `k`-subsets of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Nominal tracking law `ū(x, v, t)` filtered by the CBF-QP.
#[derive(Clone)]
pub struct NominalLaw(pub NominalFn);

/// Function of `(x, v, t)`.
pub type NominalFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync>;

impl fmt::Debug for NominalLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NominalLaw")
    }
}

/// Rows `b_i = gᵀ∇s_i`, `c_i = ∇s_iᵀ(f + g ū) + κ_i s_i`.
pub fn assemble_cbf_qp(
    plant: &SdcPlant,
    constraints: &[SafetyConstraint],
    kappa: &[f64],
    x: &DVector<f64>,
    u_nominal: &DVector<f64>,
) -> QpProblem {
    let f = plant.drift(x);
    let g = (plant.g_of)(x);
    let xdot = &f + &g * u_nominal;
    let mut qp = QpProblem::default();
    for (c, &k) in constraints.iter().zip(kappa) {
        let grad = c.gradient(x);
        qp.b_rows.push(g.transpose() * &grad);
        qp.c_terms.push(grad.dot(&xdot) + k * c.value(x));
        qp.kappa.push(k);
    }
    qp
}

/// `u = ū + δu` with `δu` the minimum-norm correction enforcing
/// `ṡ_i ≥ −κ_i s_i` for every constraint.
pub fn cbf_qp_control(
    nominal: &NominalLaw,
    constraints: &[SafetyConstraint],
    kappa: &[f64],
    plant: &SdcPlant,
    x: &DVector<f64>,
    v: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>, ControlError> {
    for c in constraints {
        let value = c.value(x);
        if !(value > 0.0) {
            return Err(ModelError::UnsafeEvaluation {
                constraint: c.name.clone(),
                value,
            }
            .into());
        }
    }
    let u_bar = (nominal.0)(x, v, t);
    let qp = assemble_cbf_qp(plant, constraints, kappa, x, &u_bar);
    if qp.c_terms.iter().all(|&c| c >= 0.0) {
        return Ok(u_bar);
    }
    Ok(u_bar + qp_min_norm(&qp)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(data: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(data)
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(Combinations::new(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn inactive_constraints_give_zero() {
        let qp = QpProblem {
            b_rows: vec![dv(&[1.0, 0.0]), dv(&[0.0, 1.0])],
            c_terms: vec![0.5, 0.0],
            kappa: vec![1.0, 1.0],
        };
        assert_eq!(qp_min_norm(&qp).unwrap(), dv(&[0.0, 0.0]));
    }

    #[test]
    fn half_space_projection() {
        let qp = QpProblem {
            b_rows: vec![dv(&[1.0, 0.0])],
            c_terms: vec![-1.0],
            kappa: vec![1.0],
        };
        let du = qp_min_norm(&qp).unwrap();
        assert!((du - dv(&[1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn two_active_constraints() {
        let qp = QpProblem {
            b_rows: vec![dv(&[1.0, 0.0]), dv(&[0.0, 1.0])],
            c_terms: vec![-1.0, -1.0],
            kappa: vec![1.0, 1.0],
        };
        let du = qp_min_norm(&qp).unwrap();
        assert!((du - dv(&[1.0, 1.0])).norm() < 1e-14);
    }

    #[test]
    fn conflicting_constraints_are_infeasible() {
        let qp = QpProblem {
            b_rows: vec![dv(&[1.0]), dv(&[-1.0])],
            c_terms: vec![-1.0, -1.0],
            kappa: vec![1.0, 1.0],
        };
        assert_eq!(qp_min_norm(&qp).unwrap_err(), ControlError::Infeasible);
    }

    #[test]
    fn duplicate_constraints_skip_singular_sets() {
        let qp = QpProblem {
            b_rows: vec![dv(&[1.0, 1.0]), dv(&[2.0, 2.0])],
            c_terms: vec![-2.0, -4.0],
            kappa: vec![1.0, 1.0],
        };
        let du = qp_min_norm(&qp).unwrap();
        assert!((du - dv(&[1.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn gain_partition_round_trip() {
        let k = DMatrix::from_fn(2, 7, |i, j| (i * 7 + j) as f64);
        let parts = GainPartition::split(&k, 4, 2, 1);
        assert_eq!(parts.k3.ncols(), 1);
        assert_eq!(parts.stacked(), k);
    }
}
