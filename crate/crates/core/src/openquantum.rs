//! Lindblad master-equation evolution (fixed-step RK4) and the noisy
//! homodyne protocol.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{ensure_same, ladder_ops, pauli_ops, Eigensystem, Operator, QuantumState, I, ZERO};
use crate::models::{build_qrm_full, qrm_full_min_cutoff, ModelKind};
use crate::protocols::{canonical_initial_state, delta_g, inv_var, inverted_variance_closed_form, tau_n, ProtocolPoint};
use crate::truncation::{converge, CutoffPolicy, Sample, EDGE_FRACTION};

/// Largest allowed `dt · ‖H‖`.
pub const STEP_BOUND: f64 = 0.05;
pub const TRACE_TOL: f64 = 1e-7;
pub const POSITIVITY_TOL: f64 = 1e-6;
const MIN_STEPS: usize = 16;

/// Rates of the four jump channels `√Γ σz`, `√γ_c σ₋`, `√γ_a a`, `√γ_h a†`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseSpec {
    pub dephasing: f64,
    pub qubit_decay: f64,
    pub boson_decay: f64,
    pub boson_heating: f64,
}

impl NoiseSpec {
    pub fn new(dephasing: f64, qubit_decay: f64, boson_decay: f64, boson_heating: f64) -> Result<Self> {
        let s = Self { dephasing, qubit_decay, boson_decay, boson_heating };
        s.validate()?;
        Ok(s)
    }

    /// Dephasing `Γ` with the other three rates at `Γ/2`.
    pub fn from_dephasing(gamma: f64) -> Result<Self> {
        Self::new(gamma, gamma / 2.0, gamma / 2.0, gamma / 2.0)
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in self.rates() {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} rate {r} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    fn rates(&self) -> [(&'static str, f64); 4] {
        [
            ("dephasing", self.dephasing),
            ("qubit decay", self.qubit_decay),
            ("boson decay", self.boson_decay),
            ("boson heating", self.boson_heating),
        ]
    }

    /// Jump operators (rate folded in) for a space; zero-rate channels are skipped.
    pub fn jumps(&self, space: crate::hilbert::SpaceDescriptor) -> Result<Vec<Operator>> {
        self.validate()?;
        let mut out = Vec::new();
        if self.dephasing > 0.0 || self.qubit_decay > 0.0 {
            let p = pauli_ops(space)?;
            if self.dephasing > 0.0 {
                out.push(p.sz.scaled_re(self.dephasing.sqrt()));
            }
            if self.qubit_decay > 0.0 {
                out.push(p.sm.scaled_re(self.qubit_decay.sqrt()));
            }
        }
        if self.boson_decay > 0.0 || self.boson_heating > 0.0 {
            let l = ladder_ops(space)?;
            if self.boson_decay > 0.0 {
                out.push(l.a.scaled_re(self.boson_decay.sqrt()));
            }
            if self.boson_heating > 0.0 {
                out.push(l.adag.scaled_re(self.boson_heating.sqrt()));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindbladOptions {
    /// Time step; derived from the stiffness bound when absent.
    pub dt: Option<f64>,
    /// Exact number of steps (overrides `dt`).
    pub steps: Option<usize>,
    /// Number of evenly spaced checkpoints for trace and positivity.
    pub checkpoints: usize,
    /// Keep the density matrix at every checkpoint.
    pub keep_samples: bool,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self { dt: None, steps: None, checkpoints: 8, keep_samples: false }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub state: QuantumState,
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<(f64, QuantumState)>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

type SparseRows = Vec<Vec<(usize, C64)>>;

fn sparse(op: &Operator) -> SparseRows {
    let n = op.dim();
    let m = op.matrix();
    (0..n).map(|i| (0..n).filter(|&j| m[(i, j)] != ZERO).map(|j| (j, m[(i, j)])).collect()).collect()
}

/// Jump operator with at most one nonzero per row, `J[i, col[i]] = val[i]`.
struct Monomial {
    col: Vec<usize>,
    val: Vec<C64>,
}

impl Monomial {
    fn of(rows: &SparseRows) -> Option<Self> {
        let mut col = Vec::with_capacity(rows.len());
        let mut val = Vec::with_capacity(rows.len());
        for row in rows {
            match row.as_slice() {
                [] => {
                    col.push(0);
                    val.push(ZERO);
                }
                [(c, v)] => {
                    col.push(*c);
                    val.push(*v);
                }
                _ => return None,
            }
        }
        Some(Self { col, val })
    }
}

/// `dρ/dt = Kρ + (Kρ)† + Σ JρJ†` with `K = −iH − ½ΣJ†J`, all operators sparse.
struct Rhs {
    dim: usize,
    k: SparseRows,
    monomial: Vec<Monomial>,
    general: Vec<SparseRows>,
    scratch: Vec<C64>,
}

impl Rhs {
    fn new(h: &Operator, jumps: &[Operator]) -> Result<Self> {
        let mut k = h.scaled(-I);
        let mut monomial = Vec::new();
        let mut general = Vec::new();
        for j in jumps {
            k = k.minus(&j.adjoint().compose(j)?.scaled_re(0.5))?;
            let rows = sparse(j);
            match Monomial::of(&rows) {
                Some(m) => monomial.push(m),
                None => general.push(rows),
            }
        }
        let d = h.dim();
        Ok(Self { dim: d, k: sparse(&k), monomial, general, scratch: vec![ZERO; d * d] })
    }

    fn left_mul(rows: &SparseRows, rho: &[C64], out: &mut [C64], d: usize) {
        for (i, row) in rows.iter().enumerate() {
            let dst = &mut out[i * d..(i + 1) * d];
            dst.iter_mut().for_each(|x| *x = ZERO);
            for &(k, v) in row {
                let src = &rho[k * d..(k + 1) * d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
    }

    fn eval(&mut self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        Self::left_mul(&self.k, rho, &mut self.scratch, d);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.scratch[i * d + j] + self.scratch[j * d + i].conj();
            }
        }
        for m in &self.monomial {
            for i in 0..d {
                let vi = m.val[i];
                if vi == ZERO {
                    continue;
                }
                let src = &rho[m.col[i] * d..(m.col[i] + 1) * d];
                let dst = &mut out[i * d..(i + 1) * d];
                for j in 0..d {
                    dst[j] += vi * m.val[j].conj() * src[m.col[j]];
                }
            }
        }
        for jump in &self.general {
            Self::left_mul(jump, rho, &mut self.scratch, d);
            for i in 0..d {
                let a = &self.scratch[i * d..(i + 1) * d];
                for (j, row) in jump.iter().enumerate() {
                    let mut acc = ZERO;
                    for &(k, v) in row {
                        acc += a[k] * v.conj();
                    }
                    out[i * d + j] += acc;
                }
            }
        }
    }
}

/// Stiffness scale used for the step bound: half the spectral width of `H`
/// plus `½ Σ ‖J†J‖`.
pub fn stiffness(h: &Operator, jumps: &[Operator]) -> Result<f64> {
    let ev = Eigensystem::new(h)?.eigenvalues();
    let width = (ev[ev.len() - 1] - ev[0]) / 2.0;
    let mut diss = 0.0;
    for j in jumps {
        let jj = j.adjoint().compose(j)?;
        diss += 0.5 * (0..jj.dim()).map(|i| jj.get(i, i).re).fold(0.0, f64::max);
    }
    Ok(width + diss)
}

fn to_flat(m: &Mat<C64>) -> Vec<C64> {
    let d = m.nrows();
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            v[i * d + j] = m[(i, j)];
        }
    }
    v
}

fn to_mat(v: &[C64], d: usize) -> Mat<C64> {
    Mat::from_fn(d, d, |i, j| v[i * d + j])
}

fn min_eigenvalue(v: &[C64], d: usize) -> Result<f64> {
    let m = to_mat(v, d);
    let ev = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
}

/// Lindblad evolution with the jump channels of `noise`.
pub fn lindblad_evolve(
    h: &Operator,
    noise: &NoiseSpec,
    rho0: &QuantumState,
    t: f64,
    options: &LindbladOptions,
) -> Result<Trajectory> {
    let jumps = noise.jumps(h.space())?;
    lindblad_evolve_jumps(h, &jumps, rho0, t, options)
}

/// Lindblad evolution with explicit jump operators (rates folded in).
pub fn lindblad_evolve_jumps(
    h: &Operator,
    jumps: &[Operator],
    rho0: &QuantumState,
    t: f64,
    options: &LindbladOptions,
) -> Result<Trajectory> {
    ensure_same(&h.space(), &rho0.space())?;
    for j in jumps {
        ensure_same(&h.space(), &j.space())?;
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("evolution time {t}")));
    }
    let scale = stiffness(h, jumps)?;
    let bound = if scale > 0.0 { STEP_BOUND / scale } else { f64::INFINITY };
    let steps = match (options.steps, options.dt) {
        (Some(n), _) => n.max(1),
        (None, Some(dt)) => {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter(format!("dt = {dt}")));
            }
            (t / dt).ceil().max(1.0) as usize
        }
        (None, None) => ((t / bound).ceil() as usize).max(MIN_STEPS),
    };
    let dt = if t == 0.0 { 0.0 } else { t / steps as f64 };
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepSizeTooLarge {
            reason: format!("dt * |H| = {:.3e} exceeds {STEP_BOUND}", dt * scale),
            suggested_dt: bound,
        });
    }

    let d = h.dim();
    let mut rhs = Rhs::new(h, jumps)?;
    let mut rho = to_flat(&rho0.density_matrix());
    let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; d * d], vec![ZERO; d * d], vec![ZERO; d * d], vec![ZERO; d * d]);
    let mut tmp = vec![ZERO; d * d];
    let checkpoints = options.checkpoints.max(1);
    let mut next_check = 1usize;
    let mut samples = Vec::new();
    let mut max_drift = 0.0f64;
    let mut min_ev = f64::INFINITY;

    let check = |rho: &[C64], max_drift: &mut f64, min_ev: &mut f64, dt: f64| -> Result<()> {
        let tr: f64 = (0..d).map(|i| rho[i * d + i].re).sum();
        let drift = (tr - 1.0).abs();
        *max_drift = max_drift.max(drift);
        if drift > TRACE_TOL {
            return Err(Error::StepSizeTooLarge { reason: format!("trace drift {drift:.3e}"), suggested_dt: dt / 2.0 });
        }
        let ev = min_eigenvalue(rho, d)?;
        *min_ev = min_ev.min(ev);
        if ev < -POSITIVITY_TOL {
            return Err(Error::StepSizeTooLarge { reason: format!("eigenvalue {ev:.3e}"), suggested_dt: dt / 2.0 });
        }
        Ok(())
    };

    for step in 1..=steps {
        rhs.eval(&rho, &mut k1);
        for (x, (r, k)) in tmp.iter_mut().zip(rho.iter().zip(&k1)) {
            *x = r + k * (dt / 2.0);
        }
        rhs.eval(&tmp, &mut k2);
        for (x, (r, k)) in tmp.iter_mut().zip(rho.iter().zip(&k2)) {
            *x = r + k * (dt / 2.0);
        }
        rhs.eval(&tmp, &mut k3);
        for (x, (r, k)) in tmp.iter_mut().zip(rho.iter().zip(&k3)) {
            *x = r + k * dt;
        }
        rhs.eval(&tmp, &mut k4);
        for idx in 0..d * d {
            rho[idx] += (k1[idx] + (k2[idx] + k3[idx]) * 2.0 + k4[idx]) * (dt / 6.0);
        }
        for i in 0..d {
            rho[i * d + i].im = 0.0;
            for j in i + 1..d {
                let avg = (rho[i * d + j] + rho[j * d + i].conj()) * 0.5;
                rho[i * d + j] = avg;
                rho[j * d + i] = avg.conj();
            }
        }
        if step * checkpoints >= next_check * steps {
            next_check += 1;
            check(&rho, &mut max_drift, &mut min_ev, dt)?;
            if options.keep_samples {
                samples.push((step as f64 * dt, QuantumState::density_unchecked(h.space(), to_mat(&rho, d))));
            }
        }
    }
    if steps == 0 || t == 0.0 {
        check(&rho, &mut max_drift, &mut min_ev, dt)?;
    }
    let state = QuantumState::density_unchecked(h.space(), to_mat(&rho, d));
    Ok(Trajectory { state, dt, steps, samples, max_trace_drift: max_drift, min_eigenvalue: min_ev })
}

/// Homodyne protocol on the full Rabi model under noise. `χ` is a plain
/// central difference in `g` with step `1e-4·g`; all three evolutions use
/// the same number of RK4 steps.
pub fn noisy_inverted_variance(
    g: f64,
    omega: f64,
    eta: f64,
    noise: &NoiseSpec,
    n: usize,
    policy: CutoffPolicy,
) -> Result<ProtocolPoint> {
    let t = tau_n(g, omega, n)?;
    let h_step = 1e-4 * g;
    struct Noisy {
        mean: f64,
        variance: f64,
        chi: f64,
    }
    let floor = qrm_full_min_cutoff(eta, g + h_step);
    let run = converge(policy.at_least(floor), |cutoff| {
        let models = [
            build_qrm_full(omega, eta, g, cutoff)?,
            build_qrm_full(omega, eta, g + h_step, cutoff)?,
            build_qrm_full(omega, eta, g - h_step, cutoff)?,
        ];
        let space = models[0].space();
        let rho0 = canonical_initial_state(space)?.to_density();
        let jumps = noise.jumps(space)?;
        let mut bound = f64::INFINITY;
        for m in &models {
            let s = stiffness(&m.hamiltonian(), &jumps)?;
            if s > 0.0 {
                bound = bound.min(STEP_BOUND / s);
            }
        }
        let steps = ((t / bound).ceil() as usize).max(MIN_STEPS);
        let options = LindbladOptions { steps: Some(steps), ..LindbladOptions::default() };
        let x = ladder_ops(space)?.x;
        let mut finals = Vec::with_capacity(3);
        for m in &models {
            finals.push(lindblad_evolve_jumps(&m.hamiltonian(), &jumps, &rho0, t, &options)?.state);
        }
        let mean = crate::hilbert::expect(&x, &finals[0])?.re;
        let variance = crate::hilbert::variance(&x, &finals[0])?;
        let chi = (crate::hilbert::expect(&x, &finals[1])?.re - crate::hilbert::expect(&x, &finals[2])?.re)
            / (2.0 * h_step);
        let edge = crate::hilbert::interior_weight(&finals[0], EDGE_FRACTION)?;
        Ok(Sample { observables: vec![mean, variance, chi], edge_weight: edge, value: Noisy { mean, variance, chi } })
    })?;
    let v = run.value;
    Ok(ProtocolPoint {
        model: ModelKind::QrmFull,
        param: g,
        delta: delta_g(g),
        eta: Some(eta),
        time: t,
        n,
        mean: v.mean,
        variance: v.variance,
        chi: v.chi,
        inverted_variance: inv_var(v.chi, v.variance)?,
        closed_form: Some(inverted_variance_closed_form(g, n)?),
        qfi_reference: None,
        cutoff: run.cutoff,
        converged: run.converged,
    })
}
