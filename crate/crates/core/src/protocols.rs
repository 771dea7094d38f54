//! Measurement protocols: homodyne quadrature readout and qubit
//! Loschmidt-echo readout, plus frequency estimation.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    expect, interior_weight, ladder_ops, pauli_ops, variance, Operator, Propagator, QuantumState, SpaceDescriptor,
    ONE, ZERO,
};
use crate::models::{
    build_qrm_effective, build_qrm_full, conditioned_hamiltonians, frequency_ratio, qrm_full_min_cutoff, FnFamily,
    ModelKind,
};
use crate::qfi::{qfi_fidelity_family, qfi_generator_full};
use crate::truncation::{converge, CutoffPolicy, Sample, EDGE_FRACTION};

/// Qubit amplitudes `(c_↑, c_↓)` of `|↓⟩`.
pub const QUBIT_DOWN: [C64; 2] = [ZERO, ONE];

/// Initial state of the boson mode.
#[derive(Clone, Debug, PartialEq)]
pub enum BosonState {
    /// `(|0⟩ + i|1⟩)/√2`
    Canonical,
    Fock(usize),
    Coherent(C64),
    /// Explicit Fock amplitudes, zero-padded and normalized.
    Amplitudes(Vec<C64>),
}

impl BosonState {
    pub fn amplitudes(&self, levels: usize) -> Result<Vec<C64>> {
        let mut v = match self {
            BosonState::Canonical => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                vec![C64::new(s, 0.0), C64::new(0.0, s)]
            }
            BosonState::Fock(n) => {
                let mut v = vec![ZERO; n + 1];
                v[*n] = ONE;
                v
            }
            BosonState::Coherent(alpha) => {
                let mut v = Vec::with_capacity(levels);
                let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
                for n in 0..levels {
                    if n > 0 {
                        c = c * alpha / (n as f64).sqrt();
                    }
                    v.push(c);
                }
                let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                v.iter_mut().for_each(|a| *a /= norm);
                v
            }
            BosonState::Amplitudes(a) => a.clone(),
        };
        if v.len() > levels {
            if v[levels..].iter().any(|a| *a != ZERO) {
                return Err(Error::CutoffTooSmall { cutoff: levels.saturating_sub(1), suggested: v.len() - 1 });
            }
            v.truncate(levels);
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero boson amplitudes".into()));
        }
        v.iter_mut().for_each(|a| *a /= norm);
        Ok(v)
    }

    /// Product state with the given qubit amplitudes (ignored on boson spaces).
    pub fn state(&self, space: SpaceDescriptor, qubit: [C64; 2]) -> Result<QuantumState> {
        QuantumState::product(space, qubit, &self.amplitudes(space.levels())?)
    }
}

/// `|↓⟩ ⊗ (|0⟩ + i|1⟩)/√2`, or the boson factor alone on a boson space.
pub fn canonical_initial_state(space: SpaceDescriptor) -> Result<QuantumState> {
    BosonState::Canonical.state(space, QUBIT_DOWN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatsSource {
    Simulated,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureStats {
    pub mean_x: f64,
    pub var_x: f64,
    pub time: f64,
    pub source: StatsSource,
}

/// Dimensionless gap `Δ_g = 4(1 − g²)` of the normal phase.
pub fn delta_g(g: f64) -> f64 {
    4.0 * (1.0 - g * g)
}

fn normal_phase(g: f64) -> Result<f64> {
    if !g.is_finite() || g < 0.0 || g >= 1.0 {
        return Err(Error::InvalidParameter(format!("g = {g} outside the normal phase [0, 1)")));
    }
    Ok(delta_g(g))
}

/// Closed-form quadrature mean and variance for the canonical initial state
/// under the effective Rabi Hamiltonian.
pub fn quadrature_closed_form(g: f64, omega: f64, t: f64) -> Result<QuadratureStats> {
    let delta = normal_phase(g)?;
    let phase = delta.sqrt() * omega * t;
    Ok(QuadratureStats {
        mean_x: SQRT_2 / delta.sqrt() * (phase / 2.0).sin(),
        var_x: 1.0 + (2.0 * g * g - 1.0) / delta * (1.0 - phase.cos()),
        time: t,
        source: StatsSource::ClosedForm,
    })
}

/// `τ_n = 2nπ/(√Δ_g ω)`
pub fn tau_n(g: f64, omega: f64, n: usize) -> Result<f64> {
    let delta = normal_phase(g)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(2.0 * n as f64 * PI / (delta.sqrt() * omega))
}

/// Central-difference derivative with its Richardson error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Susceptibility {
    pub value: f64,
    pub step: f64,
    pub error: f64,
}

/// `∂f/∂p` by central differences at steps `δ` and `δ/2`, combined by
/// Richardson extrapolation. `δ` defaults to `1e-5·|p|` (or `1e-5` at `p = 0`).
pub fn susceptibility(f: impl Fn(f64) -> Result<f64>, param: f64, step: Option<f64>) -> Result<Susceptibility> {
    let h = step.unwrap_or(if param == 0.0 { 1e-5 } else { 1e-5 * param.abs() });
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite-difference step {h}")));
    }
    let eval = |p: f64| -> Result<f64> {
        let v = f(p)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("observable at {p}")));
        }
        Ok(v)
    };
    let coarse = (eval(param + h)? - eval(param - h)?) / (2.0 * h);
    let fine = (eval(param + h / 2.0)? - eval(param - h / 2.0)?) / h;
    Ok(Susceptibility { value: (4.0 * fine - coarse) / 3.0, step: h, error: (fine - coarse).abs() / 3.0 })
}

/// One protocol evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolPoint {
    pub model: ModelKind,
    /// Estimated parameter (g, or ω for frequency estimation).
    pub param: f64,
    /// `Δ_g = 4(1 − g²)`.
    pub delta: f64,
    pub eta: Option<f64>,
    pub time: f64,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub chi: f64,
    /// `F = χ²/variance`
    pub inverted_variance: f64,
    /// Closed-form prediction of `F`, where one exists.
    pub closed_form: Option<f64>,
    /// Exact QFI on the same state and time.
    pub qfi_reference: Option<f64>,
    pub cutoff: usize,
    pub converged: bool,
}

/// `F = 32π²g²Δ_g⁻³n²`
pub fn inverted_variance_closed_form(g: f64, n: usize) -> Result<f64> {
    let delta = normal_phase(g)?;
    Ok(32.0 * PI * PI * g * g / delta.powi(3) * (n * n) as f64)
}

pub(crate) fn inv_var(chi: f64, var: f64) -> Result<f64> {
    if var <= 0.0 {
        return Err(Error::NonFinite(format!("vanishing observable variance {var:e}")));
    }
    Ok(chi * chi / var)
}

struct Raw {
    mean: f64,
    variance: f64,
    chi: f64,
}

fn raw_observables(raw: &Raw) -> Vec<f64> {
    vec![raw.mean, raw.variance, raw.chi]
}

/// Homodyne protocol on the effective Rabi model: `⟨X⟩` and `Var[X]` at
/// `τ_n`, with `χ = ∂_g⟨X⟩` from simulated evolutions at `g ± δ`.
pub fn inverted_variance_quadrature(
    g: f64,
    omega: f64,
    n: usize,
    boson: &BosonState,
    policy: CutoffPolicy,
) -> Result<ProtocolPoint> {
    let t = tau_n(g, omega, n)?;
    let run = converge(policy, |cutoff| {
        let model = build_qrm_effective(omega, g, cutoff)?;
        let space = model.space();
        let psi0 = boson.state(space, QUBIT_DOWN)?;
        let x = ladder_ops(space)?.x;
        let psi_t = Propagator::new(&model.hamiltonian())?.evolve(&psi0, t)?;
        let chi = susceptibility(
            |gp| {
                let psi = Propagator::new(&model.hamiltonian_at_physical(gp))?.evolve(&psi0, t)?;
                Ok(expect(&x, &psi)?.re)
            },
            g,
            None,
        )?;
        let raw = Raw { mean: expect(&x, &psi_t)?.re, variance: variance(&x, &psi_t)?, chi: chi.value };
        Ok(Sample { observables: raw_observables(&raw), edge_weight: interior_weight(&psi_t, EDGE_FRACTION)?, value: raw })
    })?;
    let model = build_qrm_effective(omega, g, run.cutoff)?;
    let psi0 = boson.state(model.space(), QUBIT_DOWN)?;
    let qfi = qfi_generator_full(&model, &psi0, t)?.value;
    let raw = run.value;
    Ok(ProtocolPoint {
        model: ModelKind::QrmEffective,
        param: g,
        delta: delta_g(g),
        eta: None,
        time: t,
        n,
        mean: raw.mean,
        variance: raw.variance,
        chi: raw.chi,
        inverted_variance: inv_var(raw.chi, raw.variance)?,
        closed_form: Some(inverted_variance_closed_form(g, n)?),
        qfi_reference: Some(qfi),
        cutoff: run.cutoff,
        converged: run.converged,
    })
}

/// Simulated quadrature statistics on a time grid (effective Rabi model).
pub fn simulate_quadrature(
    g: f64,
    omega: f64,
    boson: &BosonState,
    times: &[f64],
    cutoff: usize,
) -> Result<Vec<QuadratureStats>> {
    let model = build_qrm_effective(omega, g, cutoff)?;
    let space = model.space();
    let psi0 = boson.state(space, QUBIT_DOWN)?;
    let x = ladder_ops(space)?.x;
    let prop = Propagator::new(&model.hamiltonian())?;
    times
        .iter()
        .map(|&t| {
            let psi = prop.evolve(&psi0, t)?;
            Ok(QuadratureStats {
                mean_x: expect(&x, &psi)?.re,
                var_x: variance(&x, &psi)?,
                time: t,
                source: StatsSource::Simulated,
            })
        })
        .collect()
}

/// Homodyne protocol on the full Rabi model at finite `η`; the closed form
/// attached is the `η → ∞` prediction.
pub fn inverted_variance_full(
    g: f64,
    omega: f64,
    eta: f64,
    n: usize,
    policy: CutoffPolicy,
) -> Result<ProtocolPoint> {
    let t = tau_n(g, omega, n)?;
    let floor = qrm_full_min_cutoff(eta, g);
    let run = converge(policy.at_least(floor), |cutoff| {
        let model = build_qrm_full(omega, eta, g, cutoff)?;
        let space = model.space();
        let psi0 = canonical_initial_state(space)?;
        let x = ladder_ops(space)?.x;
        let psi_t = Propagator::new(&model.hamiltonian())?.evolve(&psi0, t)?;
        let chi = susceptibility(
            |gp| {
                let psi = Propagator::new(&model.hamiltonian_at_physical(gp))?.evolve(&psi0, t)?;
                Ok(expect(&x, &psi)?.re)
            },
            g,
            None,
        )?;
        let raw = Raw { mean: expect(&x, &psi_t)?.re, variance: variance(&x, &psi_t)?, chi: chi.value };
        Ok(Sample { observables: raw_observables(&raw), edge_weight: interior_weight(&psi_t, EDGE_FRACTION)?, value: raw })
    })?;
    let raw = run.value;
    Ok(ProtocolPoint {
        model: ModelKind::QrmFull,
        param: g,
        delta: delta_g(g),
        eta: Some(eta),
        time: t,
        n,
        mean: raw.mean,
        variance: raw.variance,
        chi: raw.chi,
        inverted_variance: inv_var(raw.chi, raw.variance)?,
        closed_form: Some(inverted_variance_closed_form(g, n)?),
        qfi_reference: None,
        cutoff: run.cutoff,
        converged: run.converged,
    })
}

/// Frequency-estimation result.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyPoint {
    pub point: ProtocolPoint,
    /// Peak dynamical excitation `max_t ⟨N⟩_t − ⟨N⟩_0` over `[0, τ_n]`.
    pub mean_excitation: f64,
    /// `F_ω/(⟨N⟩² τ_n²)`
    pub heisenberg_ratio: f64,
    /// `2g⁴/Δ_g`
    pub excitation_closed_form: f64,
}

/// `H(ω') = ω' a†a − (c/2) X²` with `c = g²ω` held fixed, i.e. fixed
/// light-matter coupling and qubit frequency.
fn frequency_hamiltonian(space: SpaceDescriptor, n: &Operator, x2: &Operator, coupling: f64, w: f64) -> Result<Operator> {
    let _ = space;
    n.scaled_re(w).minus(&x2.scaled_re(coupling / 2.0))
}

/// Estimation of `ω` from the homodyne signal at `τ_n`, with `χ_ω` by
/// central differences in `ω` at fixed time.
pub fn frequency_inverted_variance(g: f64, omega: f64, n: usize, policy: CutoffPolicy) -> Result<FrequencyPoint> {
    let t = tau_n(g, omega, n)?;
    let coupling = g * g * omega;
    struct Freq {
        raw: Raw,
        excitation: f64,
    }
    let run = converge(policy, |cutoff| {
        let space = SpaceDescriptor::boson(cutoff)?;
        let l = ladder_ops(space)?;
        let (x2, _) = crate::hilbert::quadrature_squares(space)?;
        let psi0 = canonical_initial_state(space)?;
        let h = |w: f64| frequency_hamiltonian(space, &l.n, &x2, coupling, w);
        let prop = Propagator::new(&h(omega)?)?;
        let psi_t = prop.evolve(&psi0, t)?;
        let chi = susceptibility(
            |w| {
                let psi = Propagator::new(&h(w)?)?.evolve(&psi0, t)?;
                Ok(expect(&l.x, &psi)?.re)
            },
            omega,
            None,
        )?;
        let n0 = expect(&l.n, &psi0)?.re;
        let mut peak = 0.0f64;
        let mut edge = interior_weight(&psi_t, EDGE_FRACTION)?;
        const GRID: usize = 1000;
        for k in 0..=GRID {
            let psi = prop.evolve(&psi0, t * k as f64 / GRID as f64)?;
            peak = peak.max(expect(&l.n, &psi)?.re - n0);
            edge = edge.max(interior_weight(&psi, EDGE_FRACTION)?);
        }
        let raw = Raw { mean: expect(&l.x, &psi_t)?.re, variance: variance(&l.x, &psi_t)?, chi: chi.value };
        let mut observables = raw_observables(&raw);
        observables.push(peak);
        Ok(Sample { observables, edge_weight: edge, value: Freq { raw, excitation: peak } })
    })?;
    let space = SpaceDescriptor::boson(run.cutoff)?;
    let l = ladder_ops(space)?;
    let (x2, _) = crate::hilbert::quadrature_squares(space)?;
    let family = FnFamily::new(space, move |w| frequency_hamiltonian(space, &l.n, &x2, coupling, w));
    let psi0 = canonical_initial_state(space)?;
    let qfi = qfi_fidelity_family(&family, omega, &psi0, t, 1e-4 * omega)?.value;
    let Freq { raw, excitation } = run.value;
    let f = inv_var(raw.chi, raw.variance)?;
    let delta = delta_g(g);
    let point = ProtocolPoint {
        model: ModelKind::QrmEffective,
        param: omega,
        delta,
        eta: None,
        time: t,
        n,
        mean: raw.mean,
        variance: raw.variance,
        chi: raw.chi,
        inverted_variance: f,
        closed_form: Some(2.0 * g.powi(4) / (delta * delta) * t * t),
        qfi_reference: Some(qfi),
        cutoff: run.cutoff,
        converged: run.converged,
    };
    Ok(FrequencyPoint {
        heisenberg_ratio: f / (excitation * excitation * t * t),
        mean_excitation: excitation,
        excitation_closed_form: 2.0 * g.powi(4) / delta,
        point,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkingPoint {
    pub m: usize,
    pub g_o: f64,
    /// `R(g_o) = m + 1/2`
    pub r_value: f64,
    /// `4π/(√Δ_{g_o} ω)`
    pub tau: f64,
}

/// Couplings where the fractional part of `R(g)` equals 1/2, for
/// `m = 1..=m_max`.
pub fn working_points(m_max: usize, omega: f64) -> Vec<WorkingPoint> {
    (1..=m_max)
        .map(|m| {
            let r = m as f64 + 0.5;
            let g_o = ((r * r - 1.0) / (r * r + 1.0)).sqrt();
            WorkingPoint { m, g_o, r_value: r, tau: 4.0 * PI / (delta_g(g_o).sqrt() * omega) }
        })
        .collect()
}

/// Fractional part of `R(g)`.
pub fn fractional_ratio(g: f64) -> f64 {
    let r = frequency_ratio(g);
    r - r.floor()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoschmidtPoint {
    pub point: ProtocolPoint,
    /// `𝒢 = ⟨φ|u_↑† u_↓|φ⟩`
    pub amplitude: C64,
}

fn loschmidt_amplitude(up: &Operator, down: &Operator, phi: &QuantumState, t: f64) -> Result<(C64, f64)> {
    let a = Propagator::new(up)?.evolve(phi, t)?;
    let b = Propagator::new(down)?.evolve(phi, t)?;
    let amp = a
        .amplitudes()
        .expect("pure")
        .iter()
        .zip(b.amplitudes().expect("pure"))
        .map(|(x, y)| x.conj() * y)
        .sum();
    let edge = interior_weight(&a, EDGE_FRACTION)?.max(interior_weight(&b, EDGE_FRACTION)?);
    Ok((amp, edge))
}

/// Qubit-readout protocol: `⟨σ_x⟩ = 2Re[c_↑* c_↓ 𝒢(g, t)]`, `Var = 1 − ⟨σ_x⟩²`,
/// `χ = ∂_g⟨σ_x⟩` at fixed `t`.
pub fn loschmidt(
    g: f64,
    omega: f64,
    phi: &BosonState,
    c_up: C64,
    c_down: C64,
    t: f64,
    policy: CutoffPolicy,
) -> Result<LoschmidtPoint> {
    let norm = c_up.norm_sqr() + c_down.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!("qubit amplitudes have norm {norm}")));
    }
    normal_phase(g)?;
    let weight = 2.0 * c_up.conj() * c_down;
    struct Echo {
        raw: Raw,
        amplitude: C64,
    }
    let run = converge(policy, |cutoff| {
        let model = build_qrm_effective(omega, g, cutoff)?;
        let psi = phi.state(model.space(), QUBIT_DOWN)?;
        let sx_at = |gp: f64| -> Result<(C64, f64)> {
            let (up, down) = conditioned_hamiltonians(&model, gp)?;
            loschmidt_amplitude(&up, &down, &psi, t)
        };
        let (amplitude, edge) = sx_at(g)?;
        let sx = (weight * amplitude).re;
        let chi = susceptibility(|gp| Ok((weight * sx_at(gp)?.0).re), g, None)?;
        let raw = Raw { mean: sx, variance: 1.0 - sx * sx, chi: chi.value };
        let mut observables = raw_observables(&raw);
        observables.extend([amplitude.re, amplitude.im]);
        Ok(Sample { observables, edge_weight: edge, value: Echo { raw, amplitude } })
    })?;
    let qfi = loschmidt_qfi(g, omega, phi, c_up, c_down, t, run.cutoff)?;
    let Echo { raw, amplitude } = run.value;
    Ok(LoschmidtPoint {
        point: ProtocolPoint {
            model: ModelKind::QrmEffective,
            param: g,
            delta: delta_g(g),
            eta: None,
            time: t,
            n: 0,
            mean: raw.mean,
            variance: raw.variance,
            chi: raw.chi,
            inverted_variance: inv_var(raw.chi, raw.variance)?,
            closed_form: None,
            qfi_reference: Some(qfi),
            cutoff: run.cutoff,
            converged: run.converged,
        },
        amplitude,
    })
}

/// Fidelity QFI of the qubit-conditioned evolution
/// `|↑⟩⟨↑| ⊗ H_↑(g) + |↓⟩⟨↓| ⊗ H_↓(g)` from `(c_↑|↑⟩ + c_↓|↓⟩) ⊗ |φ⟩`.
pub fn loschmidt_qfi(
    g: f64,
    omega: f64,
    phi: &BosonState,
    c_up: C64,
    c_down: C64,
    t: f64,
    cutoff: usize,
) -> Result<f64> {
    let model = build_qrm_effective(omega, g, cutoff)?;
    let space = SpaceDescriptor::qubit_boson(cutoff)?;
    let sz = pauli_ops(space)?.sz;
    let id = Operator::identity(space);
    let p_up = id.plus(&sz)?.scaled_re(0.5);
    let p_down = id.minus(&sz)?.scaled_re(0.5);
    let family = FnFamily::new(space, move |gp| {
        let (up, down) = conditioned_hamiltonians(&model, gp)?;
        let lift = |b: &Operator| {
            let q = Operator::identity(SpaceDescriptor::qubit());
            crate::hilbert::tensor(&q, b)
        };
        p_up.compose(&lift(&up)?)?.plus(&p_down.compose(&lift(&down)?)?)
    });
    let psi0 = phi.state(space, [c_up, c_down])?;
    Ok(qfi_fidelity_family(&family, g, &psi0, t, 1e-4 * g.max(1e-2))?.value)
}
