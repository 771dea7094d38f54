//! Quick invariant suite behind the `validate` experiment.

use rayon::prelude::*;

use crate::error::Result;
use crate::hilbert::{
    evolve_pure, expect, ladder_ops, variance, Eigensystem, Operator, Propagator, QuantumState, SpaceDescriptor,
};
use crate::models::{build_lmg, build_opo, build_qrm_effective, build_qrm_full, commutator_residual, spectral_delta, CriticalModel};
use crate::openquantum::{lindblad_evolve, LindbladOptions, NoiseSpec};
use crate::oracle::{det, moments_evolve, quadratic_form, MomentState, QuadraticForm};
use crate::protocols::{
    canonical_initial_state, inverted_variance_closed_form, inverted_variance_quadrature, loschmidt,
    quadrature_closed_form, simulate_quadrature, tau_n, working_points, BosonState,
};
use crate::qfi::{generator, qfi_analytic, qfi_fidelity_exact, qfi_generator_full};
use crate::runner::fit::fit_powerlaw;
use crate::truncation::CutoffPolicy;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn() -> Result<(bool, String)>;

fn models() -> Result<Vec<CriticalModel>> {
    Ok(vec![build_qrm_effective(1.0, 0.8, 40)?, build_opo(1.0, 0.3, 40)?, build_lmg(0.0, 1.3, 40)?])
}

fn max_diff(a: &Operator, b: &Operator) -> Result<f64> {
    Ok(a.minus(b)?.max_abs())
}

fn truncation_identity() -> Result<(bool, String)> {
    let cutoff = 20;
    let space = SpaceDescriptor::boson(cutoff)?;
    let l = ladder_ops(space)?;
    let c = l.a.commutator(&l.adag)?.minus(&Operator::identity(space))?;
    let mut nonzero = Vec::new();
    for i in 0..space.dim() {
        for j in 0..space.dim() {
            if c.get(i, j).norm() > 1e-12 {
                nonzero.push((i, j, c.get(i, j)));
            }
        }
    }
    let ok = nonzero.len() == 1
        && nonzero[0].0 == cutoff
        && nonzero[0].1 == cutoff
        && (nonzero[0].2.re + (cutoff + 1) as f64).abs() < 1e-12;
    Ok((ok, format!("nonzero entries of [a, a†] - 1: {nonzero:?}")))
}

fn hamiltonians_hermitian() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in models()?.into_iter().chain([build_qrm_full(1.0, 100.0, 0.7, 40)?]) {
        worst = worst.max(m.hamiltonian().hermiticity_residual());
    }
    Ok((worst < 1e-12, format!("max |H - H†| = {worst:.2e}")))
}

fn propagator_unitary() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in models()?.into_iter().chain([build_qrm_full(1.0, 100.0, 0.7, 40)?]) {
        let u = Propagator::new(&m.hamiltonian())?.unitary(3.7);
        worst = worst.max(max_diff(&u.adjoint().compose(&u)?, &Operator::identity(m.space()))?);
    }
    Ok((worst < 1e-10, format!("max |U†U - 1| = {worst:.2e}")))
}

fn energy_conservation() -> Result<(bool, String)> {
    let m = build_qrm_full(1.0, 100.0, 0.8, 40)?;
    let h = m.hamiltonian();
    let psi = canonical_initial_state(m.space())?;
    let e0 = expect(&h, &psi)?.re;
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let e = expect(&h, &evolve_pure(&h, &psi, 1.3 * k as f64)?)?.re;
        worst = worst.max(((e - e0) / e0).abs());
    }
    Ok((worst < 1e-9, format!("max relative energy drift {worst:.2e}")))
}

fn eigen_reconstruction() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in models()?.into_iter().chain([build_qrm_full(1.0, 100.0, 0.7, 40)?]) {
        let h = m.hamiltonian();
        let rec = Operator::new(m.space(), Eigensystem::new(&h)?.reconstruct())?;
        worst = worst.max(max_diff(&rec, &h)? / h.max_abs());
    }
    Ok((worst < 1e-10, format!("max |V E V† - H| / max |H| = {worst:.2e}")))
}

fn commutator_identity() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in models()? {
        worst = worst.max(commutator_residual(&m, 0.3)?);
    }
    Ok((worst < 1e-8, format!("max residual {worst:.2e}")))
}

fn gap_from_spectrum() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in [build_qrm_effective(1.0, 0.8, 120)?, build_opo(1.0, 0.3, 120)?, build_lmg(0.0, 1.3, 120)?] {
        let d = m.delta()?;
        worst = worst.max(((spectral_delta(&m, 6)? - d) / d).abs());
    }
    Ok((worst < 1e-6, format!("max relative gap error {worst:.2e}")))
}

fn parametrization_exact() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for g in [0.3, 0.7, 0.95] {
        let m = build_qrm_effective(1.0, g, 30)?;
        let split = m.h0().plus(&m.h1().scaled_re(g * g))?;
        worst = worst.max(max_diff(&split, &m.direct_hamiltonian()?)?);
    }
    Ok((worst < 1e-12, format!("max |H(g) - (H0 + g² H1)| = {worst:.2e}")))
}

fn c_d_structure() -> Result<(bool, String)> {
    let mut herm: f64 = 0.0;
    let mut lam: f64 = 0.0;
    for m in models()? {
        herm = herm.max(m.c_op().hermiticity_residual()).max(m.d_op().hermiticity_residual());
        let root = m.delta()?.sqrt();
        let expected = m.c_op().scaled(-crate::hilbert::I * root).minus(m.d_op())?;
        lam = lam.max(max_diff(&m.lambda_op()?.adjoint(), &expected)?);
    }
    Ok((herm < 1e-10 && lam < 1e-10, format!("Hermiticity {herm:.2e}, Lambda† residual {lam:.2e}")))
}

fn oracle_moments() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let models = [
        build_qrm_effective(1.0, 0.3, 100)?,
        build_qrm_effective(1.0, 0.6, 100)?,
        build_qrm_effective(1.0, 0.8, 100)?,
        build_opo(1.0, 0.1, 100)?,
        build_opo(1.0, 0.2, 100)?,
        build_opo(1.0, 0.3, 100)?,
        build_lmg(0.0, 1.3, 100)?,
        build_lmg(0.0, 1.6, 100)?,
        build_lmg(0.5, 1.5, 100)?,
    ];
    for m in models {
        let qf = quadratic_form(&m)?;
        let psi0 = canonical_initial_state(m.space())?;
        let m0 = MomentState::of_state(&psi0)?;
        let prop = Propagator::new(&m.hamiltonian())?;
        for k in 0..10 {
            let t = 0.3 * k as f64;
            let fock = MomentState::of_state(&prop.evolve(&psi0, t)?)?;
            let exact = moments_evolve(&qf, &m0, t);
            worst = worst.max((fock.r[0] - exact.r[0]).abs()).max((fock.sigma[0][0] - exact.sigma[0][0]).abs());
        }
    }
    Ok((worst < 1e-6, format!("max moment deviation {worst:.2e}")))
}

fn symplectic_branches() -> Result<(bool, String)> {
    let forms = [[[0.5, 0.1], [0.1, 2.0]], [[-0.5, 0.0], [0.0, 1.0]], [[0.0, 0.0], [0.0, 1.0]]];
    let mut det_err: f64 = 0.0;
    let mut ok = true;
    for m in forms {
        let qf = QuadraticForm::new(m)?;
        for k in 0..40 {
            det_err = det_err.max((det(&qf.symplectic(0.1 * k as f64)) - 1.0).abs());
        }
        let x = MomentState::new([1.0, 0.0], [[0.5, 0.0], [0.0, 0.5]])?;
        let traj: Vec<f64> = (0..200).map(|k| moments_evolve(&qf, &x, 0.1 * k as f64).r[0].abs()).collect();
        let bounded = traj.iter().all(|v| *v <= 10.0);
        if qf.det() > 0.0 && !bounded || qf.det() < 0.0 && (bounded || traj.windows(2).any(|w| w[1] < w[0])) {
            ok = false;
        }
    }
    Ok((ok && det_err < 1e-12, format!("max |det S - 1| = {det_err:.2e}, branch selection {}", if ok { "ok" } else { "wrong" })))
}

fn qfi_agreement() -> Result<(bool, String)> {
    let m = build_qrm_effective(1.0, 0.8, 60)?;
    let psi = canonical_initial_state(m.space())?;
    let gen = qfi_generator_full(&m, &psi, 2.0)?.value;
    let fid = qfi_fidelity_exact(&m, &psi, 2.0, None)?.value;
    let rel = ((gen - fid) / gen).abs();
    Ok((rel < 1e-2, format!("generator {gen:.6e} vs fidelity {fid:.6e}")))
}

fn qfi_monotone() -> Result<(bool, String)> {
    let mut prev = 0.0;
    let mut values = Vec::new();
    for g in [0.5, 0.7, 0.8, 0.9, 0.95] {
        let m = build_qrm_effective(1.0, g, 80)?;
        let t = 2.0 * std::f64::consts::PI / m.delta()?.sqrt();
        let v = qfi_analytic(&m, &canonical_initial_state(m.space())?, t)?.value;
        values.push(v);
        if v <= prev {
            return Ok((false, format!("not increasing: {values:?}")));
        }
        prev = v;
    }
    Ok((true, format!("{values:?}")))
}

fn qfi_small_time() -> Result<(bool, String)> {
    let t = 1e-3;
    let mut worst: f64 = 0.0;
    for m in models()? {
        let psi = canonical_initial_state(m.space())?;
        let jac = m.jacobian();
        let expected = 4.0 * t * t * jac * jac * variance(m.h1(), &psi)?;
        worst = worst.max((qfi_generator_full(&m, &psi, t)?.value / expected - 1.0).abs());
    }
    Ok((worst < 1e-3, format!("max |I / (4 t² Var[H1]) - 1| = {worst:.2e} at t = {t}")))
}

fn generator_hermitian() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for m in models()? {
        worst = worst.max(generator(&m, 2.5)?.hermiticity_residual());
    }
    Ok((worst < 1e-10, format!("max |h - h†| = {worst:.2e}")))
}

fn quadrature_closed_form_check() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (g, cutoff) in [(0.5, 80), (0.8, 80), (0.95, 160)] {
        let times: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
        let sim = simulate_quadrature(g, 1.0, &BosonState::Canonical, &times, cutoff)?;
        for s in &sim {
            let c = quadrature_closed_form(g, 1.0, s.time)?;
            worst = worst
                .max((s.var_x - c.var_x).abs() / c.var_x)
                .max((s.mean_x - c.mean_x).abs() / c.mean_x.abs().max(1.0));
        }
    }
    Ok((worst < 1e-6, format!("max relative error {worst:.2e}")))
}

fn working_point_geometry() -> Result<(bool, String)> {
    let p = inverted_variance_quadrature(0.8, 1.0, 1, &BosonState::Canonical, CutoffPolicy::new(32, 256)?)?;
    let ok = p.mean.abs() < 1e-6 && (p.variance - 1.0).abs() < 1e-6 && p.chi.abs() > 1e-3;
    Ok((ok, format!("<X> = {:.2e}, Var - 1 = {:.2e}, chi = {:.4}", p.mean, p.variance - 1.0, p.chi)))
}

fn inverted_variance_and_bound() -> Result<(bool, String)> {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    for n in [1, 2] {
        for g in [0.7, 0.85, 0.95] {
            let p = inverted_variance_quadrature(g, 1.0, n, &BosonState::Canonical, CutoffPolicy::new(32, 512)?)?;
            let ratio = p.inverted_variance / inverted_variance_closed_form(g, n)?;
            worst_ratio = worst_ratio.max((ratio - 1.0).abs());
            worst_bound = worst_bound.max(p.inverted_variance / p.qfi_reference.unwrap_or(f64::NAN));
        }
    }
    let ok = worst_ratio <= 0.01 && worst_bound <= 1.02;
    Ok((ok, format!("max |F / closed form - 1| = {worst_ratio:.2e}, max F / QFI = {worst_bound:.4}")))
}

fn loschmidt_bounded() -> Result<(bool, String)> {
    let cu = num_complex::Complex64::new(0.6, 0.0);
    let cd = num_complex::Complex64::new(0.0, 0.8);
    let phi = BosonState::Fock(0);
    let mut worst: f64 = 0.0;
    for k in 1..=6 {
        let p = loschmidt(0.8, 1.0, &phi, cu, cd, 0.9 * k as f64, CutoffPolicy::fixed(48))?;
        worst = worst.max(p.amplitude.norm());
    }
    let at_zero = loschmidt(0.8, 1.0, &phi, cu, cd, 0.0, CutoffPolicy::fixed(48))?.amplitude.norm();
    Ok((worst <= 1.0 + 1e-12 && (at_zero - 1.0).abs() < 1e-12, format!("max |G| = {worst:.12}, |G(0)| = {at_zero:.12}")))
}

fn working_points_ordered() -> Result<(bool, String)> {
    let wp = working_points(40, 1.0);
    let increasing = wp.windows(2).all(|w| w[1].g_o > w[0].g_o);
    let last = wp[wp.len() - 1].g_o;
    Ok((increasing && last < 1.0 && last > 0.99, format!("g_o(1) = {:.6}, g_o(40) = {last:.6}", wp[0].g_o)))
}

fn lindblad_unitary_limit() -> Result<(bool, String)> {
    let m = build_qrm_effective(1.0, 0.6, 16)?;
    let psi = canonical_initial_state(m.space())?;
    let traj = lindblad_evolve(&m.hamiltonian(), &NoiseSpec::none(), &psi.to_density(), 2.0, &LindbladOptions::default())?;
    let exact = Operator::new(m.space(), Propagator::new(&m.hamiltonian())?.evolve(&psi, 2.0)?.density_matrix())?;
    let rho = Operator::new(m.space(), traj.state.density_matrix())?;
    let err = max_diff(&rho, &exact)?;
    Ok((err < 1e-8, format!("max deviation {err:.2e}")))
}

fn lindblad_trace_and_hermiticity() -> Result<(bool, String)> {
    let m = build_qrm_full(1.0, 100.0, 0.8, 20)?;
    let rho0 = canonical_initial_state(m.space())?.to_density();
    let opts = LindbladOptions { keep_samples: true, ..LindbladOptions::default() };
    let traj = lindblad_evolve(&m.hamiltonian(), &NoiseSpec::from_dephasing(0.1)?, &rho0, 3.0, &opts)?;
    let herm = traj
        .samples
        .iter()
        .map(|(_, s)| Operator::new(m.space(), s.density_matrix()).map(|o| o.hermiticity_residual()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let ok = traj.max_trace_drift < 1e-7 && herm < 1e-10 && traj.min_eigenvalue > -1e-6;
    Ok((ok, format!("trace drift {:.2e}, Hermiticity {herm:.2e}, min eigenvalue {:.2e}", traj.max_trace_drift, traj.min_eigenvalue)))
}

fn lindblad_step_halving() -> Result<(bool, String)> {
    let m = build_qrm_full(1.0, 100.0, 0.8, 20)?;
    let rho0 = canonical_initial_state(m.space())?.to_density();
    let noise = NoiseSpec::from_dephasing(0.1)?;
    let x = ladder_ops(m.space())?.x;
    let t = tau_n(0.8, 1.0, 1)?;
    let coarse = lindblad_evolve(&m.hamiltonian(), &noise, &rho0, t, &LindbladOptions::default())?;
    let fine_opts = LindbladOptions { steps: Some(2 * coarse.steps), ..LindbladOptions::default() };
    let fine = lindblad_evolve(&m.hamiltonian(), &noise, &rho0, t, &fine_opts)?;
    let diff = (expect(&x, &coarse.state)?.re - expect(&x, &fine.state)?.re).abs();
    Ok((diff < 1e-5, format!("|<X>(dt) - <X>(dt/2)| = {diff:.2e} (eta 100, cutoff 20)")))
}

fn lindblad_dephasing() -> Result<(bool, String)> {
    let space = SpaceDescriptor::qubit_boson(2)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = num_complex::Complex64::new(s, 0.0);
    let rho = QuantumState::product(space, [c, c], &[crate::hilbert::ONE])?.to_density();
    let noise = NoiseSpec::new(0.3, 0.0, 0.0, 0.0)?;
    let traj = lindblad_evolve(&Operator::zeros(space), &noise, &rho, 1.0, &LindbladOptions::default())?;
    let sx = expect(&crate::hilbert::pauli_ops(space)?.sx, &traj.state)?.re;
    let rel = (sx / (-0.6f64).exp() - 1.0).abs();
    Ok((rel < 1e-5, format!("relative error of exp(-2 Gamma t) decay {rel:.2e}")))
}

fn powerlaw_fit() -> Result<(bool, String)> {
    let pts: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, 2.0 * (i as f64).powi(-3))).collect();
    let f = fit_powerlaw(&pts)?;
    Ok(((f.exponent + 3.0).abs() < 1e-12 && f.r_squared > 1.0 - 1e-12, format!("exponent {:.6}", f.exponent)))
}

const CHECKS: [(&str, CheckFn); 26] = [
    ("hilbert: truncation identity", truncation_identity),
    ("hilbert: Hamiltonians Hermitian", hamiltonians_hermitian),
    ("hilbert: propagator unitary", propagator_unitary),
    ("hilbert: energy conserved", energy_conservation),
    ("hilbert: eigendecomposition reconstruction", eigen_reconstruction),
    ("models: [H, Lambda] = sqrt(Delta) Lambda", commutator_identity),
    ("models: gap from spectrum", gap_from_spectrum),
    ("models: H(g) = H0 + g^2 H1", parametrization_exact),
    ("models: C, D Hermitian and Lambda adjoint", c_d_structure),
    ("oracle: moments match Fock evolution", oracle_moments),
    ("oracle: symplectic determinant and branches", symplectic_branches),
    ("qfi: generator vs fidelity", qfi_agreement),
    ("qfi: analytic QFI increases toward criticality", qfi_monotone),
    ("qfi: small-time law", qfi_small_time),
    ("qfi: generator Hermitian", generator_hermitian),
    ("protocols: quadrature closed form", quadrature_closed_form_check),
    ("protocols: working-point geometry", working_point_geometry),
    ("protocols: inverted variance and Cramer-Rao", inverted_variance_and_bound),
    ("protocols: Loschmidt amplitude bounded", loschmidt_bounded),
    ("protocols: working points ordered", working_points_ordered),
    ("openquantum: unitary limit", lindblad_unitary_limit),
    ("openquantum: trace and Hermiticity", lindblad_trace_and_hermiticity),
    ("openquantum: step halving", lindblad_step_halving),
    ("openquantum: dephasing decay", lindblad_dephasing),
    ("runner: power-law fit", powerlaw_fit),
    ("truncation: policy validation", || Ok((CutoffPolicy::new(1, 8).is_err(), "cutoff below 2 rejected".into()))),
];

/// Runs every check; a check that errors counts as failed.
pub fn validate() -> Vec<Check> {
    CHECKS
        .par_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
        })
        .collect()
}
