//! Quantum Fisher information: local generator, analytic critical QFI,
//! fidelity-based exact QFI and SLD QFI for mixed states.
//!
//! All values are reported in the model's physical parameter (g for the
//! Rabi models), i.e. with `(dλ/dp)²` applied.

use std::fmt;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{ensure_same, variance, Operator, Propagator, QuantumState};
use crate::models::{CriticalModel, ParametricFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QfiMethod {
    Analytic,
    GeneratorFull,
    FidelityExact,
    Sld,
}

impl QfiMethod {
    pub fn name(self) -> &'static str {
        match self {
            QfiMethod::Analytic => "analytic",
            QfiMethod::GeneratorFull => "generator_full",
            QfiMethod::FidelityExact => "fidelity_exact",
            QfiMethod::Sld => "sld",
        }
    }
}

impl fmt::Display for QfiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QfiResult {
    pub value: f64,
    pub method: QfiMethod,
    /// Physical parameter value the QFI refers to.
    pub lambda: f64,
    pub time: f64,
    pub fd_step: Option<f64>,
    pub error_estimate: Option<f64>,
    pub cutoff: usize,
    /// `Var[D̂]` on the initial state (analytic method only).
    pub var_d: Option<f64>,
}

impl QfiResult {
    fn new(value: f64, method: QfiMethod, lambda: f64, time: f64, cutoff: usize) -> Self {
        Self { value, method, lambda, time, fd_step: None, error_estimate: None, cutoff, var_d: None }
    }
}

/// `(cos s − 1)/Δ` and `(sin s − s)/Δ^{3/2}` with `s = √Δ t`.
pub fn generator_coefficients(delta: f64, t: f64) -> (f64, f64) {
    let root = delta.sqrt();
    let s = root * t;
    if s.abs() < 1e-3 {
        let s2 = s * s;
        let a = t * t * (-0.5 + s2 / 24.0 - s2 * s2 / 720.0);
        let b = t * t * t * (-1.0 / 6.0 + s2 / 120.0 - s2 * s2 / 5040.0);
        (a, b)
    } else {
        ((s.cos() - 1.0) / delta, (s.sin() - s) / (delta * root))
    }
}

/// Local generator `h_λ = H₁t + a(t)Ĉ − b(t)D̂` (in the linear parameter λ).
pub fn generator(model: &CriticalModel, t: f64) -> Result<Operator> {
    let delta = model.positive_delta()?;
    if !t.is_finite() {
        return Err(Error::NonFinite(format!("time {t}")));
    }
    let (a, b) = generator_coefficients(delta, t);
    model
        .h1()
        .scaled_re(t)
        .plus(&model.c_op().scaled_re(a))?
        .minus(&model.d_op().scaled_re(b))
}

/// Dominant-term QFI `4(sin s − s)²/Δ³ · Var[D̂_c]`, with `D̂_c` the part of
/// `D̂` surviving at criticality.
pub fn qfi_analytic(model: &CriticalModel, state: &QuantumState, t: f64) -> Result<QfiResult> {
    ensure_same(&model.space(), &state.space())?;
    let delta = model.positive_delta()?;
    let s = delta.sqrt() * t;
    let var_dom = variance(&model.dominant_d()?, state)?;
    let var_d = variance(model.d_op(), state)?;
    let jac = model.jacobian();
    let value = 4.0 * (s.sin() - s).powi(2) / delta.powi(3) * var_dom * jac * jac;
    let mut r = QfiResult::new(value, QfiMethod::Analytic, model.physical(), t, model.cutoff());
    r.var_d = Some(var_d);
    Ok(r)
}

/// `4 Var[h_λ]`, keeping every term of the generator.
pub fn qfi_generator_full(model: &CriticalModel, state: &QuantumState, t: f64) -> Result<QfiResult> {
    ensure_same(&model.space(), &state.space())?;
    let h = generator(model, t)?;
    let jac = model.jacobian();
    let value = 4.0 * variance(&h, state)? * jac * jac;
    Ok(QfiResult::new(value, QfiMethod::GeneratorFull, model.physical(), t, model.cutoff()))
}

/// Evolves `state` under `H(p ± δ/2)` and returns `8(1 − |⟨ψ₊|ψ₋⟩|)/δ²`.
fn fidelity_qfi_at(family: &dyn ParametricFamily, p: f64, state: &QuantumState, t: f64, step: f64) -> Result<f64> {
    let plus = Propagator::new(&family.hamiltonian(p + step / 2.0)?)?.evolve(state, t)?;
    let minus = Propagator::new(&family.hamiltonian(p - step / 2.0)?)?.evolve(state, t)?;
    let a = plus.amplitudes().expect("pure");
    let b = minus.amplitudes().expect("pure");
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let mag = overlap.norm();
    if mag == 0.0 {
        return Ok(f64::INFINITY);
    }
    // 1 − |⟨a|b⟩| = ½‖a − c b‖² with the phase c aligning b to a; avoids
    // cancellation for nearly identical states.
    let c = overlap.conj() / mag;
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let dist: f64 = a.iter().zip(b).map(|(x, y)| (x / na - c * y / nb).norm_sqr()).sum();
    Ok(4.0 * dist / (step * step))
}

/// Fidelity QFI of a parametric family in its own parameter `p`.
///
/// Starts from `initial_step`, halving until `I·δ² < 1e-2` and the estimate
/// is stable to `1e-4` (relative, with a `1e-10` absolute floor) between
/// successive steps; the returned value is the
/// Richardson extrapolation of the last two steps and the error estimate is
/// their Richardson difference.
pub fn qfi_fidelity_family(
    family: &dyn ParametricFamily,
    p: f64,
    state: &QuantumState,
    t: f64,
    initial_step: f64,
) -> Result<QfiResult> {
    ensure_same(&family.space(), &state.space())?;
    if state.amplitudes().is_none() {
        return Err(Error::InvalidState("fidelity QFI needs a pure state".into()));
    }
    if !(initial_step > 0.0) || !initial_step.is_finite() {
        return Err(Error::InvalidParameter(format!("fidelity step {initial_step}")));
    }
    let mut step = initial_step;
    let mut coarse = fidelity_qfi_at(family, p, state, t, step)?;
    for _ in 0..20 {
        let fine = fidelity_qfi_at(family, p, state, t, step / 2.0)?;
        if !fine.is_finite() {
            return Err(Error::NonFinite("fidelity QFI".into()));
        }
        let small = fine * (step / 2.0).powi(2) < 1e-2;
        let stable = (fine - coarse).abs() <= 1e-4 * fine.abs() + 1e-10;
        if small && stable {
            let value = ((4.0 * fine - coarse) / 3.0).max(0.0);
            let mut r = QfiResult::new(value, QfiMethod::FidelityExact, p, t, family.space().cutoff());
            r.fd_step = Some(step / 2.0);
            r.error_estimate = Some((fine - coarse).abs() / 3.0);
            return Ok(r);
        }
        step /= 2.0;
        coarse = fine;
    }
    Err(Error::FidelityStepFloor)
}

/// Fidelity QFI of a critical model in its physical parameter, starting
/// from `δ = 1e-4 · max(|p|, 1e-2)` unless a step is supplied.
pub fn qfi_fidelity_exact(
    model: &CriticalModel,
    state: &QuantumState,
    t: f64,
    step: Option<f64>,
) -> Result<QfiResult> {
    let p = model.physical();
    let step = step.unwrap_or(1e-4 * p.abs().max(1e-2));
    qfi_fidelity_family(model, p, state, t, step)
}

/// SLD QFI `2 Σ |⟨j|∂ρ|k⟩|²/(p_j + p_k)` over eigenpairs with `p_j + p_k > 1e-12`.
pub fn qfi_sld(rho: &QuantumState, drho: &Operator) -> Result<QfiResult> {
    ensure_same(&rho.space(), &drho.space())?;
    let trace = drho.trace();
    if trace.norm() > 1e-8 {
        return Err(Error::DerivativeNotTraceless { trace: trace.norm() });
    }
    let scale = drho.max_abs().max(1.0);
    let residual = drho.hermiticity_residual();
    if residual > 1e-10 * scale {
        return Err(Error::NotHermitian { residual });
    }
    let r = rho.density_matrix();
    let evd = r.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let n = r.nrows();
    let p: Vec<f64> = (0..n).map(|i| evd.S()[i].re.max(0.0)).collect();
    let v = evd.U();
    let rotated: Mat<C64> = v.adjoint() * drho.matrix() * v;
    let mut value = 0.0;
    for j in 0..n {
        for k in 0..n {
            let s = p[j] + p[k];
            if s > 1e-12 {
                value += 2.0 * rotated[(j, k)].norm_sqr() / s;
            }
        }
    }
    Ok(QfiResult::new(value, QfiMethod::Sld, f64::NAN, f64::NAN, rho.space().cutoff()))
}
