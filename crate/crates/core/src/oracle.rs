//! Truncation-free first- and second-moment dynamics for quadratic bosonic
//! Hamiltonians `H = ½ rᵀ M r`, `r = (X, P)`.

use crate::error::{Error, Result};
use crate::hilbert::{expect, ladder_ops, QuantumState};
use crate::models::{CriticalModel, ModelParams};

pub type Mat2 = [[f64; 2]; 2];

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticForm {
    m: Mat2,
}

impl QuadraticForm {
    pub fn new(m: Mat2) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic form entry".into()));
        }
        if m[0][1] != m[1][0] {
            return Err(Error::InvalidParameter("quadratic form must be symmetric".into()));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> Mat2 {
        self.m
    }

    pub fn det(&self) -> f64 {
        det(&self.m)
    }

    /// `S(t) = exp(ΩMt)` with `Ω = [[0, 1], [−1, 0]]`.
    ///
    /// `A = ΩM` is traceless, so `A² = −det(M)·I` and the exponential is a
    /// trigonometric, hyperbolic or linear combination of `I` and `A`.
    pub fn symplectic(&self, t: f64) -> Mat2 {
        let m = &self.m;
        let a = [[m[1][0], m[1][1]], [-m[0][0], -m[0][1]]];
        let d = self.det();
        let x = d * t * t;
        let (c0, c1) = if x.abs() < 1e-8 {
            (1.0 - x / 2.0 + x * x / 24.0, t * (1.0 - x / 6.0 + x * x / 120.0))
        } else if d > 0.0 {
            let w = d.sqrt();
            ((w * t).cos(), (w * t).sin() / w)
        } else {
            let w = (-d).sqrt();
            ((w * t).cosh(), (w * t).sinh() / w)
        };
        let mut s = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] = c0 * IDENTITY[i][j] + c1 * a[i][j];
            }
        }
        s
    }
}

/// Quadratic form of a bosonic critical model; `4·det M` reproduces the
/// model's closed-form `Δ`.
pub fn quadratic_form(model: &CriticalModel) -> Result<QuadraticForm> {
    let m = match model.params() {
        ModelParams::QrmFull { .. } => return Err(Error::NotQuadratic("qrm_full")),
        ModelParams::QrmEffective { omega, g } => [[omega * (1.0 - g * g), 0.0], [0.0, omega]],
        ModelParams::Opo { omega, kappa } => [[omega, 2.0 * kappa], [2.0 * kappa, omega]],
        ModelParams::Lmg { gamma, lambda } => [[2.0 * (lambda - 1.0), 0.0], [0.0, 2.0 * (lambda - gamma)]],
    };
    let qf = QuadraticForm::new(m)?;
    let delta = model.delta()?;
    let mismatch = (4.0 * qf.det() - delta).abs();
    if mismatch > 1e-12 * delta.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!("4 det M = {} but delta = {delta}", 4.0 * qf.det())));
    }
    Ok(qf)
}

/// First moments `(⟨X⟩, ⟨P⟩)` and symmetrized covariance matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentState {
    pub r: [f64; 2],
    pub sigma: Mat2,
}

impl MomentState {
    pub fn new(r: [f64; 2], sigma: Mat2) -> Result<Self> {
        if (sigma[0][1] - sigma[1][0]).abs() > 1e-12 * sigma[0][1].abs().max(1.0) {
            return Err(Error::InvalidParameter("covariance must be symmetric".into()));
        }
        Ok(Self { r, sigma })
    }

    /// Moments of a state with a boson factor.
    pub fn of_state(state: &QuantumState) -> Result<Self> {
        let l = ladder_ops(state.space())?;
        let mx = expect(&l.x, state)?.re;
        let mp = expect(&l.p, state)?.re;
        let xx = expect(&l.x.compose(&l.x)?, state)?.re;
        let pp = expect(&l.p.compose(&l.p)?, state)?.re;
        let sym = l.x.compose(&l.p)?.plus(&l.p.compose(&l.x)?)?;
        let xp = 0.5 * expect(&sym, state)?.re;
        let c = xp - mx * mp;
        Self::new([mx, mp], [[xx - mx * mx, c], [c, pp - mp * mp]])
    }

    /// Uncertainty bound `det σ ≥ 1/4`, meaningful for Gaussian states.
    pub fn satisfies_uncertainty(&self) -> bool {
        det(&self.sigma) >= 0.25 - 1e-12
    }
}

/// `r(t) = S r(0)`, `σ(t) = S σ(0) Sᵀ`.
pub fn moments_evolve(qf: &QuadraticForm, m0: &MomentState, t: f64) -> MomentState {
    let s = qf.symplectic(t);
    let r = [s[0][0] * m0.r[0] + s[0][1] * m0.r[1], s[1][0] * m0.r[0] + s[1][1] * m0.r[1]];
    let sigma = mul(&mul(&s, &m0.sigma), &transpose(&s));
    let c = 0.5 * (sigma[0][1] + sigma[1][0]);
    MomentState { r, sigma: [[sigma[0][0], c], [c, sigma[1][1]]] }
}
