//! Critical Hamiltonian families `H(λ) = H₀ + λH₁` and their commutator algebra.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::hilbert::{
    exact_boson_poly, ladder_ops, pauli_ops, quadrature_squares, Eigensystem, Operator, SpaceDescriptor, I,
};

/// Extra Fock levels used when forming nested commutators, so that the
/// retained block of `Ĉ` and `D̂` is free of truncation artefacts.
const COMMUTATOR_MARGIN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    QrmFull,
    QrmEffective,
    Opo,
    Lmg,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::QrmFull => "qrm_full",
            ModelKind::QrmEffective => "qrm_effective",
            ModelKind::Opo => "opo",
            ModelKind::Lmg => "lmg",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qrm_full" => Ok(ModelKind::QrmFull),
            "qrm_effective" => Ok(ModelKind::QrmEffective),
            "opo" => Ok(ModelKind::Opo),
            "lmg" => Ok(ModelKind::Lmg),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// Physical parameters. `ω` is the boson frequency, `η = ω₀/ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelParams {
    QrmFull { omega: f64, eta: f64, g: f64 },
    QrmEffective { omega: f64, g: f64 },
    Opo { omega: f64, kappa: f64 },
    Lmg { gamma: f64, lambda: f64 },
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::QrmFull { .. } => ModelKind::QrmFull,
            ModelParams::QrmEffective { .. } => ModelKind::QrmEffective,
            ModelParams::Opo { .. } => ModelKind::Opo,
            ModelParams::Lmg { .. } => ModelKind::Lmg,
        }
    }

    /// The physical parameter being estimated (g, g, ω, λ).
    pub fn physical(&self) -> f64 {
        match *self {
            ModelParams::QrmFull { g, .. } | ModelParams::QrmEffective { g, .. } => g,
            ModelParams::Opo { omega, .. } => omega,
            ModelParams::Lmg { lambda, .. } => lambda,
        }
    }

    pub fn with_physical(&self, p: f64) -> Self {
        let mut out = *self;
        match &mut out {
            ModelParams::QrmFull { g, .. } | ModelParams::QrmEffective { g, .. } => *g = p,
            ModelParams::Opo { omega, .. } => *omega = p,
            ModelParams::Lmg { lambda, .. } => *lambda = p,
        }
        out
    }
}

/// Map from the physical parameter `p` to the linear parameter `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Parametrization {
    /// `λ = p`
    Identity,
    /// `λ = p²`
    Square,
}

impl Parametrization {
    pub fn lambda(&self, p: f64) -> f64 {
        match self {
            Parametrization::Identity => p,
            Parametrization::Square => p * p,
        }
    }

    /// `dλ/dp`
    pub fn jacobian(&self, p: f64) -> f64 {
        match self {
            Parametrization::Identity => 1.0,
            Parametrization::Square => 2.0 * p,
        }
    }

    pub fn physical_name(&self, kind: ModelKind) -> &'static str {
        match kind {
            ModelKind::QrmFull | ModelKind::QrmEffective => "g",
            ModelKind::Opo => "omega",
            ModelKind::Lmg => "lambda",
        }
    }
}

/// A family `H(λ) = H₀ + λH₁` at a given working point.
#[derive(Clone, Debug)]
pub struct CriticalModel {
    params: ModelParams,
    space: SpaceDescriptor,
    parametrization: Parametrization,
    h0: Operator,
    h1: Operator,
    c: OnceLock<Operator>,
    d: OnceLock<Operator>,
}

impl CriticalModel {
    fn assemble(params: ModelParams, space: SpaceDescriptor) -> Result<Self> {
        let (h0, h1) = parts_on(&params, space)?;
        let parametrization = match params.kind() {
            ModelKind::QrmEffective => Parametrization::Square,
            _ => Parametrization::Identity,
        };
        Ok(Self { params, space, parametrization, h0, h1, c: OnceLock::new(), d: OnceLock::new() })
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn cutoff(&self) -> usize {
        self.space.cutoff()
    }

    pub fn parametrization(&self) -> Parametrization {
        self.parametrization
    }

    pub fn physical(&self) -> f64 {
        self.params.physical()
    }

    /// Linear parameter `λ` at the working point.
    pub fn lambda(&self) -> f64 {
        self.parametrization.lambda(self.physical())
    }

    /// `dλ/dp` at the working point.
    pub fn jacobian(&self) -> f64 {
        self.parametrization.jacobian(self.physical())
    }

    pub fn h0(&self) -> &Operator {
        &self.h0
    }

    pub fn h1(&self) -> &Operator {
        &self.h1
    }

    pub fn hamiltonian_at(&self, lambda: f64) -> Operator {
        self.h0.plus(&self.h1.scaled_re(lambda)).expect("H0 and H1 share the model space")
    }

    pub fn hamiltonian(&self) -> Operator {
        self.hamiltonian_at(self.lambda())
    }

    /// `H` at another value of the physical parameter.
    pub fn hamiltonian_at_physical(&self, p: f64) -> Operator {
        self.hamiltonian_at(self.parametrization.lambda(p))
    }

    /// Same model family rebuilt at a different cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::assemble(self.params, self.space.with_cutoff(cutoff)?)
    }

    /// Same model family with a different physical parameter.
    pub fn with_physical(&self, p: f64) -> Result<Self> {
        build(self.params.with_physical(p), self.cutoff())
    }

    /// Hamiltonian built term by term from the physical parameters, without
    /// going through the `H₀ + λH₁` split.
    pub fn direct_hamiltonian(&self) -> Result<Operator> {
        direct_hamiltonian(&self.params, self.space)
    }

    fn commutators(&self) -> (&Operator, &Operator) {
        let c = self.c.get_or_init(|| {
            let (c, d) = nested_commutators(&self.params, self.space, self.lambda())
                .expect("model spaces always carry a boson factor");
            let _ = self.d.set(d);
            c
        });
        (c, self.d.get().expect("initialised together with C"))
    }

    /// `Ĉ = −i[H₀, H₁]`
    pub fn c_op(&self) -> &Operator {
        self.commutators().0
    }

    /// `D̂ = −[H, [H₀, H₁]]`
    pub fn d_op(&self) -> &Operator {
        self.commutators().1
    }

    /// Closed-form gap parameter `Δ(λ)` at the working point.
    pub fn delta(&self) -> Result<f64> {
        self.delta_at(self.lambda())
    }

    pub fn delta_at(&self, lambda: f64) -> Result<f64> {
        match self.params {
            ModelParams::QrmFull { .. } => Err(Error::NoClosedFormGap("qrm_full")),
            ModelParams::QrmEffective { omega, .. } => Ok(4.0 * omega * omega * (1.0 - lambda)),
            ModelParams::Opo { kappa, .. } => Ok(4.0 * lambda * lambda - 16.0 * kappa * kappa),
            ModelParams::Lmg { gamma, .. } => Ok(16.0 * (gamma - lambda) * (1.0 - lambda)),
        }
    }

    /// `Δ(λ)` required to be strictly positive.
    pub fn positive_delta(&self) -> Result<f64> {
        let delta = self.delta()?;
        if delta <= 0.0 {
            return Err(Error::ImaginaryGap { delta });
        }
        Ok(delta)
    }

    /// Critical value of the physical parameter.
    pub fn critical_point(&self) -> f64 {
        match self.params {
            ModelParams::QrmFull { .. } | ModelParams::QrmEffective { .. } => 1.0,
            ModelParams::Opo { kappa, .. } => 2.0 * kappa,
            ModelParams::Lmg { .. } => 1.0,
        }
    }

    /// `Λ̂ = i√Δ Ĉ − D̂`
    pub fn lambda_op(&self) -> Result<Operator> {
        let root = self.positive_delta()?.sqrt();
        self.c_op().scaled(I * root).minus(self.d_op())
    }

    /// The part of `D̂` that survives at criticality; this is the operator
    /// whose variance enters the analytic QFI.
    pub fn dominant_d(&self) -> Result<Operator> {
        let (_, p2) = quadrature_squares(self.space)?;
        match self.params {
            ModelParams::QrmEffective { omega, .. } => Ok(p2.scaled_re(-omega.powi(3))),
            ModelParams::Lmg { gamma, lambda } => Ok(p2.scaled_re(8.0 * (1.0 - gamma) * (lambda - gamma))),
            ModelParams::Opo { .. } => Ok(self.d_op().clone()),
            ModelParams::QrmFull { .. } => Err(Error::NoClosedFormGap("qrm_full")),
        }
    }

    /// True for the effective QRM beyond the normal phase (`g ≥ 1`).
    pub fn beyond_normal_phase(&self) -> bool {
        matches!(self.params, ModelParams::QrmEffective { g, .. } if g >= 1.0)
    }
}

fn check_finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{name} = {v}")));
        }
    }
    Ok(())
}

fn space_for(kind: ModelKind, cutoff: usize) -> Result<SpaceDescriptor> {
    match kind {
        ModelKind::QrmFull => SpaceDescriptor::qubit_boson(cutoff),
        _ => SpaceDescriptor::boson(cutoff),
    }
}

fn parts_on(params: &ModelParams, space: SpaceDescriptor) -> Result<(Operator, Operator)> {
    let l = ladder_ops(space)?;
    match *params {
        ModelParams::QrmFull { omega, eta, .. } => {
            let p = pauli_ops(space)?;
            let h0 = l.n.scaled_re(omega).plus(&p.sz.scaled_re(eta * omega / 2.0))?;
            let h1 = l.x.compose(&p.sx)?.scaled_re(-omega * eta.sqrt() / std::f64::consts::SQRT_2);
            Ok((h0, h1))
        }
        ModelParams::QrmEffective { omega, .. } => {
            let (x2, _) = quadrature_squares(space)?;
            Ok((l.n.scaled_re(omega), x2.scaled_re(-omega / 2.0)))
        }
        ModelParams::Opo { kappa, .. } => {
            let diff = exact_boson_poly(space, 2, |l| l.adag.compose(&l.adag)?.minus(&l.a.compose(&l.a)?))?;
            Ok((diff.scaled(I * kappa), l.n.clone()))
        }
        ModelParams::Lmg { gamma, .. } => {
            let h0 = exact_boson_poly(space, 2, |l| {
                let m = l.adag.minus(&l.a)?;
                let p = l.a.plus(&l.adag)?;
                m.compose(&m)?.scaled_re(gamma).minus(&p.compose(&p)?)
            })?;
            Ok((h0.scaled_re(0.5), l.n.scaled_re(2.0)))
        }
    }
}

fn direct_hamiltonian(params: &ModelParams, space: SpaceDescriptor) -> Result<Operator> {
    let l = ladder_ops(space)?;
    match *params {
        ModelParams::QrmFull { omega, eta, g } => {
            let p = pauli_ops(space)?;
            let coupling = g * (omega * eta * omega).sqrt() / 2.0;
            let a_plus = l.a.plus(&l.adag)?;
            l.n.scaled_re(omega)
                .plus(&p.sz.scaled_re(eta * omega / 2.0))?
                .minus(&a_plus.compose(&p.sx)?.scaled_re(coupling))
        }
        ModelParams::QrmEffective { omega, g } => {
            let sq = exact_boson_poly(space, 2, |l| {
                let s = l.a.plus(&l.adag)?;
                s.compose(&s)
            })?;
            l.n.minus(&sq.scaled_re(g * g / 4.0)).map(|h| h.scaled_re(omega))
        }
        ModelParams::Opo { omega, kappa } => {
            let sq = exact_boson_poly(space, 2, |l| l.adag.compose(&l.adag)?.minus(&l.a.compose(&l.a)?))?;
            l.n.scaled_re(omega).plus(&sq.scaled(I * kappa))
        }
        ModelParams::Lmg { gamma, lambda } => {
            let (x2, p2) = quadrature_squares(space)?;
            // (a† − a)² = −2P², (a + a†)² = 2X²
            l.n.scaled_re(2.0 * lambda).plus(&p2.scaled_re(-gamma))?.minus(&x2)
        }
    }
}

/// `Ĉ` and `D̂` formed on an enlarged space and restricted back.
fn nested_commutators(params: &ModelParams, space: SpaceDescriptor, lambda: f64) -> Result<(Operator, Operator)> {
    let big = space.with_cutoff(space.cutoff() + COMMUTATOR_MARGIN)?;
    let (h0, h1) = parts_on(params, big)?;
    let k = h0.commutator(&h1)?;
    let h = h0.plus(&h1.scaled_re(lambda))?;
    let c = k.scaled(-I);
    let d = h.commutator(&k)?.scaled_re(-1.0);
    Ok((symmetrize(c.restrict(space)?), symmetrize(d.restrict(space)?)))
}

/// `(M + M†)/2`, removing last-bit asymmetry from commutator roundoff.
fn symmetrize(op: Operator) -> Operator {
    let adj = op.adjoint();
    op.plus(&adj).expect("same space").scaled_re(0.5)
}

/// Smallest cutoff the full Rabi model is built with at coupling `g`.
pub fn qrm_full_min_cutoff(eta: f64, g: f64) -> usize {
    let soft = (1.0 - g * g).max(1e-4);
    let superradiant = if g > 1.0 { eta * (g.powi(4) - 1.0) / (4.0 * g * g) } else { 0.0 };
    let base = 4.0 + 2.0 / soft.sqrt() + superradiant + 6.0 * superradiant.sqrt();
    (base.ceil() as usize).max(SpaceDescriptor::MIN_CUTOFF)
}

pub fn build_qrm_full(omega: f64, eta: f64, g: f64, cutoff: usize) -> Result<CriticalModel> {
    check_finite(&[("omega", omega), ("eta", eta), ("g", g)])?;
    if omega <= 0.0 || eta < 1.0 || g < 0.0 {
        return Err(Error::InvalidParameter(format!("qrm_full requires omega > 0, eta >= 1, g >= 0 (got {omega}, {eta}, {g})")));
    }
    let suggested = qrm_full_min_cutoff(eta, g);
    if cutoff < suggested {
        return Err(Error::CutoffTooSmall { cutoff, suggested });
    }
    CriticalModel::assemble(ModelParams::QrmFull { omega, eta, g }, space_for(ModelKind::QrmFull, cutoff)?)
}

pub fn build_qrm_effective(omega: f64, g: f64, cutoff: usize) -> Result<CriticalModel> {
    check_finite(&[("omega", omega), ("g", g)])?;
    if omega <= 0.0 || g < 0.0 {
        return Err(Error::InvalidParameter(format!("qrm_effective requires omega > 0, g >= 0 (got {omega}, {g})")));
    }
    if g >= 1.0 {
        log::warn!("qrm_effective at g = {g}: beyond normal phase (delta < 0)");
    }
    CriticalModel::assemble(ModelParams::QrmEffective { omega, g }, space_for(ModelKind::QrmEffective, cutoff)?)
}

pub fn build_opo(omega: f64, kappa: f64, cutoff: usize) -> Result<CriticalModel> {
    check_finite(&[("omega", omega), ("kappa", kappa)])?;
    if omega <= 0.0 || kappa < 0.0 {
        return Err(Error::InvalidParameter(format!("opo requires omega > 0, kappa >= 0 (got {omega}, {kappa})")));
    }
    CriticalModel::assemble(ModelParams::Opo { omega, kappa }, space_for(ModelKind::Opo, cutoff)?)
}

pub fn build_lmg(gamma: f64, lambda: f64, cutoff: usize) -> Result<CriticalModel> {
    check_finite(&[("gamma", gamma), ("lambda", lambda)])?;
    if gamma == 1.0 {
        return Err(Error::IsotropicLmg);
    }
    CriticalModel::assemble(ModelParams::Lmg { gamma, lambda }, space_for(ModelKind::Lmg, cutoff)?)
}

/// Dispatches to the matching builder.
pub fn build(params: ModelParams, cutoff: usize) -> Result<CriticalModel> {
    match params {
        ModelParams::QrmFull { omega, eta, g } => build_qrm_full(omega, eta, g, cutoff),
        ModelParams::QrmEffective { omega, g } => build_qrm_effective(omega, g, cutoff),
        ModelParams::Opo { omega, kappa } => build_opo(omega, kappa, cutoff),
        ModelParams::Lmg { gamma, lambda } => build_lmg(gamma, lambda, cutoff),
    }
}

/// Relative Frobenius residual of `[H, Λ̂] = √Δ Λ̂` on the lowest
/// `(1 − interior_fraction)` Fock levels.
pub fn commutator_residual(model: &CriticalModel, interior_fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&interior_fraction) {
        return Err(Error::InvalidParameter(format!("interior fraction {interior_fraction} outside [0, 1)")));
    }
    let delta = model.positive_delta()?;
    let lam = model.lambda_op()?;
    let h = model.hamiltonian();
    let lhs = h.commutator(&lam)?.minus(&lam.scaled_re(delta.sqrt()))?;
    let keep = ((1.0 - interior_fraction) * model.space().levels() as f64).floor() as usize;
    let num = lhs.fock_projected(keep).frobenius_norm();
    let den = lam.fock_projected(keep).frobenius_norm();
    if den == 0.0 {
        return Err(Error::InvalidParameter("Lambda vanishes on the retained levels".into()));
    }
    Ok(num / den)
}

/// `Δ` read off the spectrum: `4·s²` with `s` the mean spacing of the lowest
/// `levels` eigenvalues.
pub fn spectral_delta(model: &CriticalModel, levels: usize) -> Result<f64> {
    if levels < 2 {
        return Err(Error::InvalidParameter("need at least two levels".into()));
    }
    let ev = Eigensystem::new(&model.hamiltonian())?.eigenvalues();
    if ev.len() < levels {
        return Err(Error::CutoffTooSmall { cutoff: model.cutoff(), suggested: levels });
    }
    let s = (ev[levels - 1] - ev[0]) / (levels - 1) as f64;
    Ok(4.0 * s * s)
}

/// Bosonic Hamiltonians conditioned on the qubit being `|↑⟩` or `|↓⟩`:
/// `H_↓ = ω[a†a − g²(a+a†)²/4]`, `H_↑ = ω[a†a + g²(a+a†)²/4]`.
pub fn conditioned_hamiltonians(model: &CriticalModel, g: f64) -> Result<(Operator, Operator)> {
    let ModelParams::QrmEffective { omega, .. } = model.params() else {
        return Err(Error::InvalidParameter(format!("conditioned Hamiltonians need qrm_effective, got {}", model.name())));
    };
    check_finite(&[("g", g)])?;
    let space = model.space();
    let (x2, _) = quadrature_squares(space)?;
    let n = ladder_ops(space)?.n;
    // g²(a+a†)²/4 = g²X²/2
    let shift = x2.scaled_re(g * g / 2.0);
    let up = n.plus(&shift)?.scaled_re(omega);
    let down = n.minus(&shift)?.scaled_re(omega);
    Ok((up, down))
}

/// `R(g) = √((1+g²)/(1−g²))`, ratio of the conditioned oscillator frequencies.
pub fn frequency_ratio(g: f64) -> f64 {
    ((1.0 + g * g) / (1.0 - g * g)).sqrt()
}

/// A one-parameter Hamiltonian family on a fixed space.
pub trait ParametricFamily: Send + Sync {
    fn space(&self) -> SpaceDescriptor;
    fn hamiltonian(&self, p: f64) -> Result<Operator>;
}

/// `p ↦ H(λ(p))` for a critical model.
impl ParametricFamily for CriticalModel {
    fn space(&self) -> SpaceDescriptor {
        self.space
    }

    fn hamiltonian(&self, p: f64) -> Result<Operator> {
        Ok(self.hamiltonian_at_physical(p))
    }
}

/// Closure-backed family.
#[derive(Clone)]
pub struct FnFamily {
    space: SpaceDescriptor,
    f: Arc<dyn Fn(f64) -> Result<Operator> + Send + Sync>,
}

impl FnFamily {
    pub fn new(space: SpaceDescriptor, f: impl Fn(f64) -> Result<Operator> + Send + Sync + 'static) -> Self {
        Self { space, f: Arc::new(f) }
    }
}

impl ParametricFamily for FnFamily {
    fn space(&self) -> SpaceDescriptor {
        self.space
    }

    fn hamiltonian(&self, p: f64) -> Result<Operator> {
        let h = (self.f)(p)?;
        crate::hilbert::ensure_same(&self.space, &h.space())?;
        Ok(h)
    }
}

impl fmt::Debug for FnFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnFamily").field("space", &self.space).finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expect, QuantumState, QubitLevel};

    #[test]
    fn qrm_full_decoupled_ground_state() {
        let m = build_qrm_full(1.0, 10.0, 0.0, 8).unwrap();
        let ev = Eigensystem::new(&m.hamiltonian()).unwrap().eigenvalues();
        assert!((ev[0] + 5.0).abs() < 1e-12);
        let s = QuantumState::fock(m.space(), QubitLevel::Down, 0).unwrap();
        assert!((expect(&m.hamiltonian(), &s).unwrap().re + 5.0).abs() < 1e-12);
    }

    #[test]
    fn qrm_full_cutoff_guard() {
        let err = build_qrm_full(1.0, 100.0, 0.95, 3).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { suggested, .. } if suggested > 3));
    }

    #[test]
    fn qrm_full_split_matches_direct() {
        let m = build_qrm_full(1.3, 50.0, 0.7, 20).unwrap();
        let diff = m.hamiltonian().minus(&m.direct_hamiltonian().unwrap()).unwrap();
        assert!(diff.max_abs() < 1e-12);
        assert!(m.hamiltonian().hermiticity_residual() < 1e-12);
    }

    #[test]
    fn closed_form_gaps() {
        assert_eq!(build_qrm_effective(1.0, 1.0, 10).unwrap().delta().unwrap(), 0.0);
        assert!((build_qrm_effective(1.0, 0.8, 10).unwrap().delta().unwrap() - 1.44).abs() < 1e-14);
        assert_eq!(build_opo(1.0, 0.0, 10).unwrap().delta().unwrap(), 4.0);
        assert_eq!(build_opo(1.0, 0.25, 10).unwrap().delta().unwrap(), 3.0);
        assert_eq!(build_opo(0.5, 0.25, 10).unwrap().delta().unwrap(), 0.0);
        assert_eq!(build_lmg(0.0, 1.0, 10).unwrap().delta().unwrap(), 0.0);
        assert_eq!(build_lmg(0.0, 0.5, 10).unwrap().delta().unwrap(), -4.0);
        assert!((build_lmg(0.0, 1.25, 10).unwrap().delta().unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn isotropic_lmg_rejected() {
        assert!(matches!(build_lmg(1.0, 1.5, 10), Err(Error::IsotropicLmg)));
    }

    #[test]
    fn beyond_normal_phase_is_flagged_not_rejected() {
        let m = build_qrm_effective(1.0, 1.2, 10).unwrap();
        assert!(m.beyond_normal_phase());
        assert!(matches!(commutator_residual(&m, 0.3), Err(Error::ImaginaryGap { .. })));
    }

    #[test]
    fn effective_parametrization_is_exact() {
        for g in [0.0, 0.3, 0.8, 0.99] {
            let m = build_qrm_effective(1.7, g, 30).unwrap();
            let split = m.h0().plus(&m.h1().scaled_re(g * g)).unwrap();
            assert!(split.minus(&m.direct_hamiltonian().unwrap()).unwrap().max_abs() < 1e-12);
            assert!((m.jacobian() - 2.0 * g).abs() < 1e-15);
        }
    }

    #[test]
    fn split_matches_direct_for_opo_and_lmg() {
        for m in [build_opo(1.1, 0.3, 25).unwrap(), build_lmg(0.2, 1.4, 25).unwrap()] {
            assert!(m.hamiltonian().minus(&m.direct_hamiltonian().unwrap()).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn effective_d_is_quadrature_combination() {
        let (omega, g) = (1.3, 0.8);
        let m = build_qrm_effective(omega, g, 40).unwrap();
        let (x2, p2) = quadrature_squares(m.space()).unwrap();
        let expected = x2.scaled_re(1.0 - g * g).minus(&p2).unwrap().scaled_re(omega.powi(3));
        assert!(m.d_op().minus(&expected).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn lmg_d_matches_quadratic_form() {
        let (gamma, lambda) = (0.3, 1.4);
        let m = build_lmg(gamma, lambda, 40).unwrap();
        let (x2, p2) = quadrature_squares(m.space()).unwrap();
        let expected = p2
            .scaled_re(lambda - gamma)
            .minus(&x2.scaled_re(lambda - 1.0))
            .unwrap()
            .scaled_re(8.0 * (1.0 - gamma));
        assert!(m.d_op().minus(&expected).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn c_and_d_hermitian_and_lambda_adjoint() {
        for m in [
            build_qrm_effective(1.0, 0.5, 30).unwrap(),
            build_opo(1.0, 0.2, 30).unwrap(),
            build_lmg(0.0, 1.5, 30).unwrap(),
        ] {
            assert!(m.c_op().hermiticity_residual() < 1e-10);
            assert!(m.d_op().hermiticity_residual() < 1e-10);
            let root = m.delta().unwrap().sqrt();
            let adj = m.c_op().scaled(-I * root).minus(m.d_op()).unwrap();
            assert!(m.lambda_op().unwrap().adjoint().minus(&adj).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn commutator_identity_examples() {
        for m in [
            build_qrm_effective(1.0, 0.5, 60).unwrap(),
            build_opo(1.0, 0.2, 60).unwrap(),
            build_lmg(0.0, 1.5, 60).unwrap(),
        ] {
            let r = commutator_residual(&m, 0.3).unwrap();
            assert!(r < 1e-8, "{}: {r}", m.name());
        }
    }

    #[test]
    fn spectrum_is_equally_spaced_with_closed_form_gap() {
        for m in [
            build_qrm_effective(1.0, 0.6, 200).unwrap(),
            build_opo(1.0, 0.2, 200).unwrap(),
            build_lmg(0.0, 1.5, 200).unwrap(),
        ] {
            let d = spectral_delta(&m, 6).unwrap();
            let exact = m.delta().unwrap();
            assert!(((d - exact) / exact).abs() < 1e-6, "{}: {d} vs {exact}", m.name());
        }
    }

    #[test]
    fn conditioned_frequency_ratio() {
        let g = 0.6202;
        let m = build_qrm_effective(1.0, g, 200).unwrap();
        let (up, down) = conditioned_hamiltonians(&m, g).unwrap();
        let spacing = |h: &Operator| {
            let ev = Eigensystem::new(h).unwrap().eigenvalues();
            ev[1] - ev[0]
        };
        let r = spacing(&up) / spacing(&down);
        assert!((r - frequency_ratio(g)).abs() < 1e-8);
        assert!((frequency_ratio(g) - 1.5).abs() < 1e-3);

        let (up0, down0) = conditioned_hamiltonians(&m, 0.0).unwrap();
        assert_eq!(up0.minus(&down0).unwrap().max_abs(), 0.0);
    }
}
