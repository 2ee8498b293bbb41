//! SDC plants, reference generators, safety constraints, barrier states and
//! the augmented system they assemble into.
//!
//! Every state-dependent quantity is a shared closure so that scenarios can be
//! cloned across worker threads without copying their definitions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

use crate::riccati::{self, RiccatiError};

pub type MatFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type VecFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
/// Function of `(x, v)`.
pub type PairScalarFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;
pub type PairMatFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
/// Function of `(x, v, z)`.
pub type SdcVecFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync>;
/// Barrier weight as a function of `(x, z)`.
pub type WeightFn = Arc<dyn Fn(&DVector<f64>, f64) -> f64 + Send + Sync>;
/// Replaces blocks of a freshly assembled augmented point; receives `(x, v, z⃗)`.
pub type AugmentOverride = Arc<dyn Fn(&mut AugmentedPoint, &DVector<f64>, &DVector<f64>, &DVector<f64>) + Send + Sync>;

/// Central finite-difference step for gradients that have no analytic form.
pub const FD_GRADIENT_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("safety function {constraint} is {value:.6e} <= 0; barrier undefined")]
    UnsafeEvaluation { constraint: String, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("discount factor must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
}

/// Plant in state-dependent coefficient form `ẋ = A(x)x + b(x) + g(x)u`,
/// `y = H(x)x`.
///
/// `bias_of` carries any drift that is not factored through `A(x)` (gravity
/// in the cable robot). It is zero for plants with `f(0) = 0`.
#[derive(Clone)]
pub struct SdcPlant {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub a_of: MatFn,
    pub g_of: MatFn,
    pub h_of: MatFn,
    pub bias_of: Option<VecFn>,
    /// True drift `f(x)`, used to validate the factorization.
    pub f_of: Option<VecFn>,
    pub state_labels: Vec<String>,
}

impl SdcPlant {
    pub fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut f = (self.a_of)(x) * x;
        if let Some(bias) = &self.bias_of {
            f += bias(x);
        }
        f
    }

    pub fn flow(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.drift(x) + (self.g_of)(x) * u
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.h_of)(x) * x
    }

    /// `‖A(x)x + b(x) − f(x)‖ / (1 + ‖f(x)‖)`, or `None` without a reference drift.
    pub fn sdc_residual(&self, x: &DVector<f64>) -> Option<f64> {
        let f = self.f_of.as_ref()?(x);
        Some((self.drift(x) - &f).norm() / (1.0 + f.norm()))
    }
}

impl fmt::Debug for SdcPlant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdcPlant")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("l", &self.l)
            .field("state_labels", &self.state_labels)
            .finish_non_exhaustive()
    }
}

/// Reference generator `v̇ = A_d(v)v`, `y_d = H_d(v)v`.
#[derive(Clone)]
pub struct ReferenceModel {
    pub n_d: usize,
    pub a_d_of: MatFn,
    pub h_d_of: MatFn,
    pub v0: DVector<f64>,
    /// Points at which the discount-factor bound is certified.
    pub abscissa_samples: Vec<DVector<f64>>,
}

impl ReferenceModel {
    pub fn flow(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.a_d_of)(v) * v
    }

    pub fn output(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.h_d_of)(v) * v
    }
}

impl fmt::Debug for ReferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceModel")
            .field("n_d", &self.n_d)
            .field("v0", &self.v0.as_slice())
            .finish_non_exhaustive()
    }
}

/// Safety function `s(x)`; the safe set is `s(x) > 0`.
#[derive(Clone)]
pub struct SafetyConstraint {
    pub name: String,
    pub s_of: ScalarFn,
    pub grad_s_of: Option<VecFn>,
}

impl SafetyConstraint {
    pub fn new(name: impl Into<String>, s_of: ScalarFn, grad_s_of: Option<VecFn>) -> Self {
        Self {
            name: name.into(),
            s_of,
            grad_s_of,
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.s_of)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.grad_s_of {
            Some(grad) => grad(x),
            None => central_gradient(&*self.s_of, x, FD_GRADIENT_STEP),
        }
    }
}

impl fmt::Debug for SafetyConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SafetyConstraint")
            .field("name", &self.name)
            .field("analytic_gradient", &self.grad_s_of.is_some())
            .finish()
    }
}

/// Central difference gradient with a step scaled by `1 + |x_i|`.
pub fn central_gradient(s: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, step: f64) -> DVector<f64> {
    let mut grad = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = step * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let up = s(&probe);
        probe[i] = x[i] - h;
        let down = s(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Barrier state `z = p(x, v) / q(∏ s_i(x))` together with its SDC dynamics
/// `ż = αᵀx + α_dᵀv + βᵀu` and cost weight `q_z(x, z)`.
#[derive(Clone)]
pub struct BarrierState {
    pub name: String,
    pub constraints: Vec<SafetyConstraint>,
    pub p_of: PairScalarFn,
    pub q_of: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub alpha_of: SdcVecFn,
    /// Reference-column terms of a tracking-error barrier; zero when absent.
    pub alpha_d_of: Option<SdcVecFn>,
    /// Input terms; zero when absent.
    pub beta_of: Option<SdcVecFn>,
    pub q_z_of: WeightFn,
}

/// SDC vectors of one barrier at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSdc {
    pub alpha: DVector<f64>,
    pub alpha_d: DVector<f64>,
    pub beta: DVector<f64>,
}

impl BarrierState {
    /// Product of the constraint values; fails on the first non-positive one.
    pub fn safety_product(&self, x: &DVector<f64>) -> Result<f64, ModelError> {
        let mut s = 1.0;
        for c in &self.constraints {
            let value = c.value(x);
            if !(value > 0.0) {
                return Err(ModelError::UnsafeEvaluation {
                    constraint: c.name.clone(),
                    value,
                });
            }
            s *= value;
        }
        Ok(s)
    }

    pub fn value(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64, ModelError> {
        let s = self.safety_product(x)?;
        Ok((self.p_of)(x, v) / (self.q_of)(s))
    }

    pub fn sdc(&self, x: &DVector<f64>, v: &DVector<f64>, z: f64, m: usize) -> Result<BarrierSdc, ModelError> {
        self.safety_product(x)?;
        let alpha = (self.alpha_of)(x, v, z);
        let alpha_d = match &self.alpha_d_of {
            Some(f) => f(x, v, z),
            None => DVector::zeros(v.len()),
        };
        let beta = match &self.beta_of {
            Some(f) => f(x, v, z),
            None => DVector::zeros(m),
        };
        if alpha.len() != x.len() || alpha_d.len() != v.len() || beta.len() != m {
            return Err(ModelError::DimensionMismatch(format!(
                "barrier {} SDC vectors have lengths ({}, {}, {}), expected ({}, {}, {m})",
                self.name,
                alpha.len(),
                alpha_d.len(),
                beta.len(),
                x.len(),
                v.len()
            )));
        }
        Ok(BarrierSdc { alpha, alpha_d, beta })
    }

    pub fn weight(&self, x: &DVector<f64>, z: f64) -> f64 {
        (self.q_z_of)(x, z)
    }
}

impl fmt::Debug for BarrierState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BarrierState")
            .field("name", &self.name)
            .field("constraints", &self.constraints)
            .finish_non_exhaustive()
    }
}

/// `z = p/q` for a barrier.
pub fn barrier_value(b: &BarrierState, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64, ModelError> {
    b.value(x, v)
}

/// Consistency of a barrier's declared SDC vectors with its definition:
/// `|αᵀx + α_dᵀv + βᵀu − ż_fd|` where `ż_fd` is a central difference of
/// `z` along the closed flow over step `h`.
pub fn validate_barrier_sdc(
    b: &BarrierState,
    plant: &SdcPlant,
    reference: &ReferenceModel,
    x: &DVector<f64>,
    v: &DVector<f64>,
    u: &DVector<f64>,
    h: f64,
) -> Result<BarrierResidual, ModelError> {
    let z = b.value(x, v)?;
    let sdc = b.sdc(x, v, z, plant.m)?;
    let xdot = plant.flow(x, u);
    let vdot = reference.flow(v);
    let z_up = b.value(&(x + &xdot * h), &(v + &vdot * h))?;
    let z_down = b.value(&(x - &xdot * h), &(v - &vdot * h))?;
    let zdot_fd = (z_up - z_down) / (2.0 * h);
    let zdot_sdc = sdc.alpha.dot(x) + sdc.alpha_d.dot(v) + sdc.beta.dot(u);
    Ok(BarrierResidual {
        residual: (zdot_sdc - zdot_fd).abs(),
        zdot_fd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierResidual {
    pub residual: f64,
    pub zdot_fd: f64,
}

impl BarrierResidual {
    pub fn relative(&self) -> f64 {
        self.residual / (1.0 + self.zdot_fd.abs())
    }
}

/// Output-error weight `Q(x, v)` and input weight `R(x)`.
#[derive(Clone)]
pub struct Weights {
    pub q_of: PairMatFn,
    pub r_of: MatFn,
}

impl fmt::Debug for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Weights { .. }")
    }
}

/// Everything a pointwise controller needs: plant, reference, barriers,
/// weights, discount factor and an optional augmentation override.
#[derive(Clone, Debug)]
pub struct Design {
    pub plant: SdcPlant,
    pub reference: ReferenceModel,
    pub barriers: Vec<BarrierState>,
    pub weights: Weights,
    pub gamma: f64,
    pub augment_override: Option<AugmentOverrideHook>,
}

#[derive(Clone)]
pub struct AugmentOverrideHook(pub AugmentOverride);

impl fmt::Debug for AugmentOverrideHook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AugmentOverrideHook")
    }
}

impl Design {
    pub fn augmented_dim(&self) -> usize {
        self.plant.n + self.reference.n_d + self.barriers.len()
    }

    /// Same design with every barrier removed (conventional SDRE tracking).
    pub fn without_barriers(&self) -> Design {
        Design {
            barriers: Vec::new(),
            ..self.clone()
        }
    }

    pub fn barrier_values(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>, ModelError> {
        let zs: Result<Vec<f64>, _> = self.barriers.iter().map(|b| b.value(x, v)).collect();
        Ok(DVector::from_vec(zs?))
    }

    /// Tracking error `H(x)x − H_d(v)v`.
    pub fn tracking_error(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.plant.output(x) - self.reference.output(v)
    }
}

/// Augmented SDC system and cost at one point.
#[derive(Debug, Clone)]
pub struct AugmentedPoint {
    pub a_z: DMatrix<f64>,
    pub g_z: DMatrix<f64>,
    pub q_z: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
    pub n: usize,
    pub n_d: usize,
    pub barrier_count: usize,
}

/// Assembles `A_z`, `G_z`, `Q_z` and `R` at `(x, v, z⃗)`.
///
/// Layout of the augmented state is `[x; v; z_1 … z_N]`. Barrier row `i` holds
/// `α_iᵀ` in the plant columns, `α_d,iᵀ` in the reference columns and `−γ` on
/// the diagonal; `G_z` stacks `g(x)`, zeros and `β_iᵀ`. `Q_z` is
/// `diag(Q_1, q_z1, …)` with `Q_1 = [H, −H_d]ᵀ Q [H, −H_d]`.
pub fn build_augmented(
    design: &Design,
    x: &DVector<f64>,
    v: &DVector<f64>,
    zs: &DVector<f64>,
) -> Result<AugmentedPoint, ModelError> {
    let plant = &design.plant;
    let reference = &design.reference;
    let (n, n_d, m) = (plant.n, reference.n_d, plant.m);
    let nb = design.barriers.len();
    if x.len() != n || v.len() != n_d || zs.len() != nb {
        return Err(ModelError::DimensionMismatch(format!(
            "point (x: {}, v: {}, z: {}) does not match design ({n}, {n_d}, {nb})",
            x.len(),
            v.len(),
            zs.len()
        )));
    }
    if !(design.gamma > 0.0) {
        return Err(ModelError::NonPositiveGamma(design.gamma));
    }
    let gamma = design.gamma;
    let dim = n + n_d + nb;

    let a = (plant.a_of)(x);
    let g = (plant.g_of)(x);
    let h = (plant.h_of)(x);
    let a_d = (reference.a_d_of)(v);
    let h_d = (reference.h_d_of)(v);
    let q = (design.weights.q_of)(x, v);
    let r = (design.weights.r_of)(x);
    let l = plant.l;
    let shapes = [
        ("A", a.shape(), (n, n)),
        ("g", g.shape(), (n, m)),
        ("H", h.shape(), (l, n)),
        ("A_d", a_d.shape(), (n_d, n_d)),
        ("H_d", h_d.shape(), (l, n_d)),
        ("Q", q.shape(), (l, l)),
        ("R", r.shape(), (m, m)),
    ];
    for (name, got, want) in shapes {
        if got != want {
            return Err(ModelError::DimensionMismatch(format!(
                "{name} is {}x{}, expected {}x{}",
                got.0, got.1, want.0, want.1
            )));
        }
    }

    let mut a_z = DMatrix::zeros(dim, dim);
    let mut g_z = DMatrix::zeros(dim, m);
    let mut q_z = DMatrix::zeros(dim, dim);

    a_z.view_mut((0, 0), (n, n))
        .copy_from(&(a - DMatrix::identity(n, n) * gamma));
    a_z.view_mut((n, n), (n_d, n_d))
        .copy_from(&(a_d - DMatrix::identity(n_d, n_d) * gamma));
    g_z.view_mut((0, 0), (n, m)).copy_from(&g);

    for (i, barrier) in design.barriers.iter().enumerate() {
        let row = n + n_d + i;
        let sdc = barrier.sdc(x, v, zs[i], m)?;
        for j in 0..n {
            a_z[(row, j)] = sdc.alpha[j];
        }
        for j in 0..n_d {
            a_z[(row, n + j)] = sdc.alpha_d[j];
        }
        a_z[(row, row)] = -gamma;
        for k in 0..m {
            g_z[(row, k)] = sdc.beta[k];
        }
        q_z[(row, row)] = barrier.weight(x, zs[i]);
    }

    let mut c = DMatrix::zeros(l, n + n_d);
    c.view_mut((0, 0), (l, n)).copy_from(&h);
    c.view_mut((0, n), (l, n_d)).copy_from(&(-h_d));
    let q1 = c.transpose() * q * &c;
    q_z.view_mut((0, 0), (n + n_d, n + n_d))
        .copy_from(&((&q1 + q1.transpose()) * 0.5));

    let mut point = AugmentedPoint {
        a_z,
        g_z,
        q_z,
        r,
        gamma,
        n,
        n_d,
        barrier_count: nb,
    };
    if let Some(hook) = &design.augment_override {
        (hook.0)(&mut point, x, v, zs);
    }
    Ok(point)
}

/// `γ > max Re λ(A_d(v))` at every certified sample, and `γ > 0`.
pub fn validate_gamma(reference: &ReferenceModel, gamma: f64) -> bool {
    if !(gamma > 0.0) || reference.abscissa_samples.is_empty() {
        return false;
    }
    reference.abscissa_samples.iter().all(|v| {
        riccati::spectral_abscissa(&(reference.a_d_of)(v))
            .map(|abscissa| gamma > abscissa)
            .unwrap_or(false)
    })
}

/// Largest reference spectral abscissa over the certified samples.
pub fn reference_abscissa_bound(reference: &ReferenceModel) -> Result<f64, RiccatiError> {
    reference
        .abscissa_samples
        .iter()
        .map(|v| riccati::spectral_abscissa(&(reference.a_d_of)(v)))
        .try_fold(f64::NEG_INFINITY, |acc, a| a.map(|a| acc.max(a)))
}

#[derive(Debug, Clone)]
pub struct PointwiseReport {
    pub stabilizable: bool,
    pub detectable: bool,
    pub uncontrollable_modes: Vec<Complex<f64>>,
    pub unobservable_modes: Vec<Complex<f64>>,
}

/// PBH stabilizability of `(A_z, G_z)` and detectability of `(A_z, Q_z^{1/2})`.
pub fn pointwise_diagnostics(aug: &AugmentedPoint, tol: f64) -> Result<PointwiseReport, RiccatiError> {
    let uncontrollable_modes = riccati::pbh_uncontrollable_modes(&aug.a_z, &aug.g_z, tol)?;
    let c = riccati::psd_sqrt(&aug.q_z);
    let unobservable_modes = riccati::pbh_unobservable_modes(&aug.a_z, &c, tol)?;
    Ok(PointwiseReport {
        stabilizable: uncontrollable_modes.is_empty(),
        detectable: unobservable_modes.is_empty(),
        uncontrollable_modes,
        unobservable_modes,
    })
}
