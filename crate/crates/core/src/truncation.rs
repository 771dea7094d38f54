//! Adaptive Fock cutoff: double `N_c` until the reported observables are
//! stable and the evolved state stays clear of the truncation edge.

use crate::error::{Error, Result};
use crate::hilbert::SpaceDescriptor;

/// Relative change allowed between successive cutoffs.
pub const OBSERVABLE_TOL: f64 = 1e-6;
/// Maximum population allowed in the top [`EDGE_FRACTION`] of Fock levels.
pub const EDGE_WEIGHT_TOL: f64 = 1e-8;
pub const EDGE_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CutoffPolicy {
    pub initial: usize,
    pub max: usize,
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        Self { initial: 32, max: 512 }
    }
}

impl CutoffPolicy {
    pub fn new(initial: usize, max: usize) -> Result<Self> {
        if initial < SpaceDescriptor::MIN_CUTOFF {
            return Err(Error::CutoffTooSmall { cutoff: initial, suggested: SpaceDescriptor::MIN_CUTOFF });
        }
        if max < initial {
            return Err(Error::InvalidParameter(format!("cutoff max {max} below initial {initial}")));
        }
        Ok(Self { initial, max })
    }

    /// A single cutoff, no doubling.
    pub fn fixed(cutoff: usize) -> Self {
        Self { initial: cutoff, max: cutoff }
    }

    /// Raises the starting cutoff to at least `floor` (capped at `max`).
    pub fn at_least(&self, floor: usize) -> Self {
        let initial = self.initial.max(floor).min(self.max.max(floor));
        Self { initial, max: self.max.max(initial) }
    }
}

/// One evaluation at a given cutoff.
#[derive(Clone, Debug)]
pub struct Sample<T> {
    pub value: T,
    /// Scalars compared between successive cutoffs.
    pub observables: Vec<f64>,
    /// Population near the truncation edge of the final state(s).
    pub edge_weight: f64,
}

#[derive(Clone, Debug)]
pub struct Converged<T> {
    pub value: T,
    pub cutoff: usize,
    pub converged: bool,
}

/// `|a − b| ≤ tol · max(|a|, |b|, 1)`; the floor of 1 keeps quantities that
/// vanish by symmetry from demanding impossible relative accuracy.
pub fn agrees(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Evaluates at `initial`, `2·initial`, … up to `max` until two successive
/// cutoffs agree and the edge weight is below [`EDGE_WEIGHT_TOL`]. With a
/// fixed policy only the edge weight is checked. Hitting `max` returns the
/// last evaluation flagged as not converged.
pub fn converge<T>(policy: CutoffPolicy, mut eval: impl FnMut(usize) -> Result<Sample<T>>) -> Result<Converged<T>> {
    let mut cutoff = policy.initial;
    let mut prev = eval(cutoff)?;
    if policy.initial >= policy.max {
        let converged = prev.edge_weight < EDGE_WEIGHT_TOL;
        return Ok(Converged { value: prev.value, cutoff, converged });
    }
    loop {
        let next_cutoff = (cutoff * 2).min(policy.max);
        let next = eval(next_cutoff)?;
        let stable = prev.observables.len() == next.observables.len()
            && prev.observables.iter().zip(&next.observables).all(|(a, b)| agrees(*a, *b, OBSERVABLE_TOL));
        cutoff = next_cutoff;
        if stable && next.edge_weight < EDGE_WEIGHT_TOL {
            return Ok(Converged { value: next.value, cutoff, converged: true });
        }
        if cutoff >= policy.max {
            log::warn!("cutoff {cutoff} reached without convergence");
            return Ok(Converged { value: next.value, cutoff, converged: false });
        }
        prev = next;
    }
}
