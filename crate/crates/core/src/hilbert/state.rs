use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use super::{ensure_same, Operator, SpaceDescriptor, DOWN, UP, ZERO};
use crate::error::{Error, Result};

const PURE_NORM_TOL: f64 = 1e-10;
const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
const DENSITY_TRACE_TOL: f64 = 1e-8;
const DENSITY_EIGEN_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Pure,
    Density,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitLevel {
    Up,
    Down,
}

impl QubitLevel {
    fn index(self) -> usize {
        match self {
            QubitLevel::Up => UP,
            QubitLevel::Down => DOWN,
        }
    }
}

#[derive(Clone, Debug)]
enum StateData {
    Pure(Vec<C64>),
    Density(Mat<C64>),
}

/// A pure state vector or a density matrix on a fixed space.
#[derive(Clone, Debug)]
pub struct QuantumState {
    space: SpaceDescriptor,
    data: StateData,
}

impl QuantumState {
    pub fn pure(space: SpaceDescriptor, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: amplitudes.len() });
        }
        let norm = l2(&amplitudes);
        if (norm - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::InvalidState(format!("pure state norm {norm:.12}")));
        }
        Ok(Self { space, data: StateData::Pure(amplitudes) })
    }

    pub fn pure_normalized(space: SpaceDescriptor, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = l2(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::pure(space, amplitudes)
    }

    pub(crate) fn pure_unchecked(space: SpaceDescriptor, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), space.dim());
        Self { space, data: StateData::Pure(amplitudes) }
    }

    pub(crate) fn density_unchecked(space: SpaceDescriptor, rho: Mat<C64>) -> Self {
        debug_assert_eq!(rho.nrows(), space.dim());
        Self { space, data: StateData::Density(rho) }
    }

    pub fn density(space: SpaceDescriptor, rho: Mat<C64>) -> Result<Self> {
        let op = Operator::new(space, rho)?;
        let residual = op.hermiticity_residual();
        if residual > DENSITY_HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("density matrix not Hermitian ({residual:.3e})")));
        }
        let trace = op.trace();
        if (trace.re - 1.0).abs() > DENSITY_TRACE_TOL || trace.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {trace}")));
        }
        let min = min_eigenvalue(op.matrix())?;
        if min < -DENSITY_EIGEN_TOL {
            return Err(Error::InvalidState(format!("density matrix eigenvalue {min:.3e}")));
        }
        Ok(Self { space, data: StateData::Density(op.into_matrix()) })
    }

    /// `|q⟩ ⊗ |n⟩` on a composite space, or `|n⟩` on a boson space (`qubit` ignored).
    pub fn fock(space: SpaceDescriptor, qubit: QubitLevel, n: usize) -> Result<Self> {
        if !space.has_boson() {
            return Err(Error::NoBosonFactor(space.name()));
        }
        if n > space.cutoff() {
            return Err(Error::CutoffTooSmall { cutoff: space.cutoff(), suggested: n });
        }
        let mut amps = vec![ZERO; space.dim()];
        amps[space.index(qubit.index(), n)] = C64::new(1.0, 0.0);
        Ok(Self::pure_unchecked(space, amps))
    }

    /// Product state `(c_↑|↑⟩ + c_↓|↓⟩) ⊗ Σ bₙ|n⟩` on a composite space,
    /// or the boson factor alone on a boson space. Boson amplitudes are
    /// zero-padded up to the cutoff.
    pub fn product(space: SpaceDescriptor, qubit: [C64; 2], boson: &[C64]) -> Result<Self> {
        if !space.has_boson() {
            return Err(Error::NoBosonFactor(space.name()));
        }
        if boson.len() > space.levels() {
            return Err(Error::CutoffTooSmall { cutoff: space.cutoff(), suggested: boson.len() - 1 });
        }
        let mut amps = vec![ZERO; space.dim()];
        if space.has_qubit() {
            for (q, &cq) in qubit.iter().enumerate() {
                for (n, &b) in boson.iter().enumerate() {
                    amps[space.index(q, n)] = cq * b;
                }
            }
        } else {
            amps[..boson.len()].copy_from_slice(boson);
        }
        Self::pure(space, amps)
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn kind(&self) -> StateKind {
        match self.data {
            StateData::Pure(_) => StateKind::Pure,
            StateData::Density(_) => StateKind::Density,
        }
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn density_matrix(&self) -> Mat<C64> {
        match &self.data {
            StateData::Pure(v) => Mat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj()),
            StateData::Density(m) => m.clone(),
        }
    }

    pub fn to_density(&self) -> Self {
        Self { space: self.space, data: StateData::Density(self.density_matrix()) }
    }

    /// Re-expresses the state with a different cutoff. Growing pads with
    /// zeros; shrinking is allowed only if the discarded weight is below 1e-12.
    pub fn embed(&self, target: SpaceDescriptor) -> Result<Self> {
        if target.kind() != self.space.kind() {
            return Err(Error::SpaceMismatch { left: self.space.to_string(), right: target.to_string() });
        }
        if target == self.space {
            return Ok(self.clone());
        }
        let lost: f64 = self
            .fock_populations()
            .iter()
            .enumerate()
            .filter(|(n, _)| *n > target.cutoff())
            .map(|(_, p)| p)
            .sum();
        if lost > 1e-12 {
            return Err(Error::CutoffTooSmall { cutoff: target.cutoff(), suggested: self.space.cutoff() });
        }
        let map = |i: usize| -> Option<usize> {
            let n = self.space.fock_level(i);
            if n > target.cutoff() {
                return None;
            }
            let q = if self.space.has_qubit() { i / self.space.levels() } else { 0 };
            Some(target.index(q, n))
        };
        match &self.data {
            StateData::Pure(v) => {
                let mut out = vec![ZERO; target.dim()];
                for (i, &a) in v.iter().enumerate() {
                    if let Some(k) = map(i) {
                        out[k] = a;
                    }
                }
                QuantumState::pure_normalized(target, out)
            }
            StateData::Density(m) => {
                let mut out = Mat::<C64>::zeros(target.dim(), target.dim());
                for j in 0..m.ncols() {
                    let Some(kj) = map(j) else { continue };
                    for i in 0..m.nrows() {
                        if let Some(ki) = map(i) {
                            out[(ki, kj)] = m[(i, j)];
                        }
                    }
                }
                let tr: C64 = (0..target.dim()).map(|i| out[(i, i)]).sum();
                let out = Mat::from_fn(target.dim(), target.dim(), |i, j| out[(i, j)] / tr.re);
                QuantumState::density(target, out)
            }
        }
    }

    /// Fock-level populations with the qubit traced out.
    pub fn fock_populations(&self) -> Vec<f64> {
        let levels = self.space.levels();
        let mut pops = vec![0.0; levels];
        if levels == 0 {
            return pops;
        }
        match &self.data {
            StateData::Pure(v) => {
                for (i, a) in v.iter().enumerate() {
                    pops[self.space.fock_level(i)] += a.norm_sqr();
                }
            }
            StateData::Density(m) => {
                for i in 0..m.nrows() {
                    pops[self.space.fock_level(i)] += m[(i, i)].re;
                }
            }
        }
        pops
    }
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn min_eigenvalue(m: faer::MatRef<'_, C64>) -> Result<f64> {
    let values = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

fn hermitian_scale(op: &Operator) -> Option<f64> {
    let scale = op.max_abs().max(1.0);
    (op.hermiticity_residual() <= 1e-12 * scale).then_some(scale)
}

/// `⟨op⟩`: `ψ†Mψ` for pure states, `tr(ρM)` for density matrices. For
/// Hermitian operators the result is real; an imaginary part above
/// `1e-8 · max(1, |⟨op⟩|)` is reported as an error.
pub fn expect(op: &Operator, state: &QuantumState) -> Result<C64> {
    ensure_same(&op.space(), &state.space())?;
    let m = op.matrix();
    let value = match &state.data {
        StateData::Pure(v) => {
            let mv = op.apply(v);
            v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum::<C64>()
        }
        StateData::Density(rho) => {
            let n = rho.nrows();
            let mut acc = ZERO;
            for j in 0..n {
                for i in 0..n {
                    acc += rho[(i, j)] * m[(j, i)];
                }
            }
            acc
        }
    };
    if hermitian_scale(op).is_some() {
        if value.im.abs() > 1e-8 * value.re.abs().max(1.0) {
            return Err(Error::ImaginaryExpectation { imag: value.im });
        }
        return Ok(C64::new(value.re, 0.0));
    }
    Ok(value)
}

/// `⟨op²⟩ − ⟨op⟩²` for a Hermitian operator.
pub fn variance(op: &Operator, state: &QuantumState) -> Result<f64> {
    ensure_same(&op.space(), &state.space())?;
    if hermitian_scale(op).is_none() {
        return Err(Error::NotHermitian { residual: op.hermiticity_residual() });
    }
    let mean = expect(op, state)?.re;
    let second = match &state.data {
        StateData::Pure(v) => op.apply(v).iter().map(|a| a.norm_sqr()).sum::<f64>(),
        StateData::Density(rho) => {
            let m = op.matrix();
            let mrho = m * rho;
            let n = rho.nrows();
            let mut acc = ZERO;
            for j in 0..n {
                for i in 0..n {
                    acc += mrho[(i, j)] * m[(j, i)];
                }
            }
            acc.re
        }
    };
    Ok((second - mean * mean).max(0.0))
}

/// Population in the top `fraction` of Fock levels (at least one level),
/// traced over the qubit.
pub fn interior_weight(state: &QuantumState, fraction: f64) -> Result<f64> {
    let space = state.space();
    if !space.has_boson() {
        return Err(Error::NoBosonFactor(space.name()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("fraction {fraction} outside (0, 1)")));
    }
    let pops = state.fock_populations();
    let top = ((fraction * pops.len() as f64).ceil() as usize).max(1);
    Ok(pops[pops.len() - top..].iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{ladder_ops, ONE};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn boson(cutoff: usize) -> SpaceDescriptor {
        SpaceDescriptor::boson(cutoff).unwrap()
    }

    #[test]
    fn var_p_squared_on_vacuum_is_half() {
        let space = boson(12);
        let (_, p2) = crate::hilbert::quadrature_squares(space).unwrap();
        let vac = QuantumState::fock(space, QubitLevel::Down, 0).unwrap();
        assert!((variance(&p2, &vac).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn p_mean_on_phase_superposition() {
        let space = boson(6);
        let l = ladder_ops(space).unwrap();
        let s = QuantumState::product(space, [ONE, ZERO], &[C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)])
            .unwrap();
        let p = expect(&l.p, &s).unwrap();
        assert!((p.re - FRAC_1_SQRT_2).abs() < 1e-15 && p.im == 0.0);
        let x = expect(&l.x, &s).unwrap();
        assert!(x.re.abs() < 1e-15);
    }

    #[test]
    fn eigenstate_variance_vanishes() {
        let space = boson(6);
        let l = ladder_ops(space).unwrap();
        let s = QuantumState::fock(space, QubitLevel::Down, 3).unwrap();
        assert_eq!(variance(&l.n, &s).unwrap(), 0.0);
    }

    #[test]
    fn density_and_pure_agree() {
        let space = boson(6);
        let l = ladder_ops(space).unwrap();
        let s = QuantumState::pure_normalized(space, (0..7).map(|k| C64::new(1.0, k as f64 * 0.3)).collect()).unwrap();
        let d = s.to_density();
        assert!((expect(&l.x, &s).unwrap() - expect(&l.x, &d).unwrap()).norm() < 1e-13);
        assert!((variance(&l.p, &s).unwrap() - variance(&l.p, &d).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn imaginary_mean_of_hermitian_op_is_an_error() {
        let space = boson(3);
        let l = ladder_ops(space).unwrap();
        let s = QuantumState::fock(space, QubitLevel::Down, 1).unwrap();
        // Corrupt the "state" deliberately.
        let mut rho = s.density_matrix();
        rho[(0, 1)] = C64::new(0.0, 0.3);
        rho[(1, 0)] = C64::new(0.0, 0.3);
        let bad = QuantumState { space, data: StateData::Density(rho) };
        assert!(matches!(expect(&l.x, &bad), Err(Error::ImaginaryExpectation { .. })));
    }

    #[test]
    fn interior_weight_cases() {
        let space = boson(20);
        let low = QuantumState::fock(space, QubitLevel::Down, 0).unwrap();
        let high = QuantumState::fock(space, QubitLevel::Down, 20).unwrap();
        assert_eq!(interior_weight(&low, 0.1).unwrap(), 0.0);
        assert_eq!(interior_weight(&high, 0.1).unwrap(), 1.0);
        let mixed = Mat::from_fn(21, 21, |i, j| {
            if i == j && (i == 0 || i == 20) {
                C64::new(0.5, 0.0)
            } else {
                ZERO
            }
        });
        let mixed = QuantumState::density(space, mixed).unwrap();
        assert!((interior_weight(&mixed, 0.1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_states_rejected() {
        let space = boson(3);
        assert!(QuantumState::pure(space, vec![ONE, ONE, ZERO, ZERO]).is_err());
        let neg = Mat::from_fn(4, 4, |i, j| match (i, j) {
            (0, 0) => C64::new(1.5, 0.0),
            (1, 1) => C64::new(-0.5, 0.0),
            _ => ZERO,
        });
        assert!(QuantumState::density(space, neg).is_err());
    }

    #[test]
    fn embed_pads_and_guards() {
        let s = QuantumState::fock(boson(4), QubitLevel::Down, 4).unwrap();
        let big = s.embed(boson(10)).unwrap();
        assert_eq!(big.fock_populations()[4], 1.0);
        assert!(s.embed(boson(3)).is_err());
    }
}
