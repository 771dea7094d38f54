//! Truncated Fock-space and qubit⊗boson linear algebra.
//!
//! Composite spaces are ordered qubit-major: the `↑` block (Fock levels
//! `0..=N_c`) comes first, then the `↓` block. All matrices are dense.

mod eigen;
mod state;

use std::fmt;

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub use eigen::{evolve_pure, Eigensystem, Propagator};
pub use state::{expect, interior_weight, variance, QuantumState, QubitLevel, StateKind};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Qubit basis index of `|↑⟩`.
pub const UP: usize = 0;
/// Qubit basis index of `|↓⟩`.
pub const DOWN: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Boson,
    Qubit,
    QubitBoson,
}

impl SpaceKind {
    fn name(self) -> &'static str {
        match self {
            SpaceKind::Boson => "boson",
            SpaceKind::Qubit => "qubit",
            SpaceKind::QubitBoson => "qubit⊗boson",
        }
    }
}

/// Shape of a Hilbert space: its factor structure and the Fock cutoff `N_c`
/// (highest retained level, so the boson factor has `N_c + 1` levels).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceDescriptor {
    kind: SpaceKind,
    cutoff: usize,
}

impl SpaceDescriptor {
    pub const MIN_CUTOFF: usize = 2;

    pub fn boson(cutoff: usize) -> Result<Self> {
        Self::check_cutoff(cutoff)?;
        Ok(Self { kind: SpaceKind::Boson, cutoff })
    }

    pub fn qubit() -> Self {
        Self { kind: SpaceKind::Qubit, cutoff: 0 }
    }

    pub fn qubit_boson(cutoff: usize) -> Result<Self> {
        Self::check_cutoff(cutoff)?;
        Ok(Self { kind: SpaceKind::QubitBoson, cutoff })
    }

    fn check_cutoff(cutoff: usize) -> Result<()> {
        if cutoff < Self::MIN_CUTOFF {
            return Err(Error::CutoffTooSmall { cutoff, suggested: Self::MIN_CUTOFF });
        }
        Ok(())
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Highest Fock level; zero for a bare qubit.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of Fock levels, `N_c + 1`, or 0 without a boson factor.
    pub fn levels(&self) -> usize {
        if self.has_boson() {
            self.cutoff + 1
        } else {
            0
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SpaceKind::Boson => self.cutoff + 1,
            SpaceKind::Qubit => 2,
            SpaceKind::QubitBoson => 2 * (self.cutoff + 1),
        }
    }

    pub fn has_qubit(&self) -> bool {
        matches!(self.kind, SpaceKind::Qubit | SpaceKind::QubitBoson)
    }

    pub fn has_boson(&self) -> bool {
        matches!(self.kind, SpaceKind::Boson | SpaceKind::QubitBoson)
    }

    /// Same factor structure with a different cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        match self.kind {
            SpaceKind::Boson => Self::boson(cutoff),
            SpaceKind::QubitBoson => Self::qubit_boson(cutoff),
            SpaceKind::Qubit => Err(Error::NoBosonFactor(self.kind.name())),
        }
    }

    pub fn boson_factor(&self) -> Result<Self> {
        if !self.has_boson() {
            return Err(Error::NoBosonFactor(self.kind.name()));
        }
        Ok(Self { kind: SpaceKind::Boson, cutoff: self.cutoff })
    }

    /// Fock level `n` of a basis index (0 for a bare qubit).
    pub fn fock_level(&self, index: usize) -> usize {
        match self.kind {
            SpaceKind::Boson => index,
            SpaceKind::Qubit => 0,
            SpaceKind::QubitBoson => index % (self.cutoff + 1),
        }
    }

    /// Basis index of `|q⟩ ⊗ |n⟩` (the qubit label is ignored for boson-only spaces).
    pub fn index(&self, qubit: usize, n: usize) -> usize {
        match self.kind {
            SpaceKind::Boson => n,
            SpaceKind::Qubit => qubit,
            SpaceKind::QubitBoson => qubit * (self.cutoff + 1) + n,
        }
    }

    pub(crate) fn name(&self) -> &'static str {
        self.kind.name()
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpaceKind::Qubit => write!(f, "qubit"),
            kind => write!(f, "{}(N_c={})", kind.name(), self.cutoff),
        }
    }
}

pub(crate) fn ensure_same(a: &SpaceDescriptor, b: &SpaceDescriptor) -> Result<()> {
    if a != b {
        return Err(Error::SpaceMismatch { left: a.to_string(), right: b.to_string() });
    }
    Ok(())
}

/// Dense complex operator on a fixed space.
#[derive(Clone, Debug)]
pub struct Operator {
    space: SpaceDescriptor,
    matrix: Mat<C64>,
}

impl Operator {
    pub fn new(space: SpaceDescriptor, matrix: Mat<C64>) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { space, matrix })
    }

    pub fn from_fn(space: SpaceDescriptor, f: impl FnMut(usize, usize) -> C64) -> Self {
        let dim = space.dim();
        Self { space, matrix: Mat::from_fn(dim, dim, f) }
    }

    pub fn zeros(space: SpaceDescriptor) -> Self {
        let dim = space.dim();
        Self { space, matrix: Mat::zeros(dim, dim) }
    }

    pub fn identity(space: SpaceDescriptor) -> Self {
        Self::from_fn(space, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space, matrix: self.matrix.adjoint().to_owned() }
    }

    pub fn plus(&self, other: &Operator) -> Result<Self> {
        ensure_same(&self.space, &other.space)?;
        Ok(Self { space: self.space, matrix: &self.matrix + &other.matrix })
    }

    pub fn minus(&self, other: &Operator) -> Result<Self> {
        ensure_same(&self.space, &other.space)?;
        Ok(Self { space: self.space, matrix: &self.matrix - &other.matrix })
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Self> {
        ensure_same(&self.space, &other.space)?;
        Ok(Self { space: self.space, matrix: &self.matrix * &other.matrix })
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        ensure_same(&self.space, &other.space)?;
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        Ok(Self { space: self.space, matrix: ab - ba })
    }

    pub fn scaled(&self, c: C64) -> Self {
        let m = &self.matrix;
        Self::from_fn(self.space, |i, j| c * m[(i, j)])
    }

    pub fn scaled_re(&self, c: f64) -> Self {
        self.scaled(C64::new(c, 0.0))
    }

    /// `max |M − M†|`, entrywise.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max(self.matrix[(i, j)].norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm_l2()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.matrix[(i, j)].im == 0.0))
    }

    /// Hermitian within `1e-10 · max(1, max|M|)`.
    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= 1e-10 * self.max_abs().max(1.0)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length does not match operator dimension");
        let mut out = vec![ZERO; n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == ZERO {
                continue;
            }
            let col = self.matrix.col(j);
            for (i, o) in out.iter_mut().enumerate() {
                *o += col[i] * vj;
            }
        }
        out
    }

    /// Restriction onto a space with a smaller (or equal) cutoff: keeps the
    /// matrix elements between retained Fock levels.
    pub fn restrict(&self, target: SpaceDescriptor) -> Result<Self> {
        if target.kind() != self.space.kind() || target.cutoff() > self.space.cutoff() {
            return Err(Error::SpaceMismatch { left: self.space.to_string(), right: target.to_string() });
        }
        let map = restriction_map(&self.space, &target);
        let m = &self.matrix;
        Ok(Self::from_fn(target, |i, j| m[(map[i], map[j])]))
    }

    /// `Π M Π` where `Π` keeps Fock levels `n < keep_levels`; the rest is zeroed.
    pub fn fock_projected(&self, keep_levels: usize) -> Self {
        let space = self.space;
        let m = &self.matrix;
        Self::from_fn(space, |i, j| {
            if space.fock_level(i) < keep_levels && space.fock_level(j) < keep_levels {
                m[(i, j)]
            } else {
                ZERO
            }
        })
    }
}

/// Index of every basis state of `target` inside the larger `source` space.
fn restriction_map(source: &SpaceDescriptor, target: &SpaceDescriptor) -> Vec<usize> {
    (0..target.dim())
        .map(|i| {
            let n = target.fock_level(i);
            let q = if target.has_qubit() && target.has_boson() { i / target.levels() } else { 0 };
            source.index(q, n)
        })
        .collect()
}

/// Boson ladder operators, identity-extended on a qubit factor when present.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub a: Operator,
    pub adag: Operator,
    pub n: Operator,
    pub x: Operator,
    pub p: Operator,
}

pub fn ladder_ops(space: SpaceDescriptor) -> Result<Ladder> {
    if !space.has_boson() {
        return Err(Error::NoBosonFactor(space.name()));
    }
    let extend = |f: &dyn Fn(usize, usize) -> C64| {
        Operator::from_fn(space, |i, j| {
            let same_qubit = !space.has_qubit() || i / space.levels() == j / space.levels();
            if same_qubit {
                f(space.fock_level(i), space.fock_level(j))
            } else {
                ZERO
            }
        })
    };
    let a_el = |r: usize, c: usize| if c == r + 1 { C64::new((c as f64).sqrt(), 0.0) } else { ZERO };
    let ad_el = |r: usize, c: usize| if r == c + 1 { C64::new((r as f64).sqrt(), 0.0) } else { ZERO };
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a = extend(&a_el);
    let adag = extend(&ad_el);
    let n = extend(&|r, c| if r == c { C64::new(r as f64, 0.0) } else { ZERO });
    let x = extend(&|r, c| (a_el(r, c) + ad_el(r, c)) * s);
    let p = extend(&|r, c| I * (ad_el(r, c) - a_el(r, c)) * s);
    Ok(Ladder { a, adag, n, x, p })
}

/// Evaluates a boson polynomial `build` on a space with `margin` extra Fock
/// levels and restricts the result, so that every retained matrix element is
/// exact for polynomials of degree at most `margin`.
pub fn exact_boson_poly(
    space: SpaceDescriptor,
    margin: usize,
    build: impl FnOnce(&Ladder) -> Result<Operator>,
) -> Result<Operator> {
    let big = space.with_cutoff(space.cutoff() + margin)?;
    let ladder = ladder_ops(big)?;
    build(&ladder)?.restrict(space)
}

/// Exact `X̂²` and `P̂²` on `space`.
pub fn quadrature_squares(space: SpaceDescriptor) -> Result<(Operator, Operator)> {
    let x2 = exact_boson_poly(space, 2, |l| l.x.compose(&l.x))?;
    let p2 = exact_boson_poly(space, 2, |l| l.p.compose(&l.p))?;
    Ok((x2, p2))
}

#[derive(Clone, Debug)]
pub struct Pauli {
    pub sx: Operator,
    pub sz: Operator,
    /// `σ₋ = (σx − iσy)/2`, maps `|↑⟩ → |↓⟩`.
    pub sm: Operator,
}

pub fn pauli_ops(space: SpaceDescriptor) -> Result<Pauli> {
    if !space.has_qubit() {
        return Err(Error::NoQubitFactor(space.name()));
    }
    let levels = space.levels().max(1);
    let extend = |q: [[f64; 2]; 2]| {
        Operator::from_fn(space, |i, j| {
            if space.fock_level(i) == space.fock_level(j) {
                C64::new(q[i / levels][j / levels], 0.0)
            } else {
                ZERO
            }
        })
    };
    Ok(Pauli {
        sx: extend([[0.0, 1.0], [1.0, 0.0]]),
        sz: extend([[1.0, 0.0], [0.0, -1.0]]),
        sm: extend([[0.0, 0.0], [1.0, 0.0]]),
    })
}

/// Kronecker product `qubit_op ⊗ boson_op`, qubit index slowest.
pub fn tensor(qubit_op: &Operator, boson_op: &Operator) -> Result<Operator> {
    if qubit_op.space().kind() != SpaceKind::Qubit {
        return Err(Error::DimensionMismatch { expected: 2, got: qubit_op.dim() });
    }
    if boson_op.space().kind() != SpaceKind::Boson {
        return Err(Error::NoBosonFactor(boson_op.space().name()));
    }
    let space = SpaceDescriptor::qubit_boson(boson_op.space().cutoff())?;
    let l = space.levels();
    Ok(Operator::from_fn(space, |i, j| qubit_op.get(i / l, j / l) * boson_op.get(i % l, j % l)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn ladder_matrix_elements() {
        let l = ladder_ops(SpaceDescriptor::boson(2).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 2) => 2f64.sqrt(),
                    _ => 0.0,
                };
                assert!(close(l.a.get(i, j), C64::new(expected, 0.0)), "a[{i},{j}]");
            }
        }
        assert!((l.x.get(0, 1).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn truncated_commutator_has_single_defect() {
        let cutoff = 7;
        let l = ladder_ops(SpaceDescriptor::boson(cutoff).unwrap()).unwrap();
        let c = l.a.commutator(&l.adag).unwrap();
        let defect = c.minus(&Operator::identity(l.a.space())).unwrap();
        for i in 0..=cutoff {
            for j in 0..=cutoff {
                let expected = if i == cutoff && j == cutoff { -((cutoff + 1) as f64) } else { 0.0 };
                assert!((defect.get(i, j) - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn qubit_only_space_has_no_ladder() {
        assert!(matches!(ladder_ops(SpaceDescriptor::qubit()), Err(Error::NoBosonFactor(_))));
        assert!(matches!(pauli_ops(SpaceDescriptor::boson(3).unwrap()), Err(Error::NoQubitFactor(_))));
    }

    #[test]
    fn pauli_conventions() {
        let space = SpaceDescriptor::qubit_boson(3).unwrap();
        let p = pauli_ops(space).unwrap();
        let sxsx = p.sx.compose(&p.sx).unwrap();
        assert!(sxsx.minus(&Operator::identity(space)).unwrap().max_abs() < 1e-15);
        let down0 = space.index(DOWN, 0);
        let up0 = space.index(UP, 0);
        assert_eq!(p.sz.get(down0, down0), C64::new(-1.0, 0.0));
        assert_eq!(p.sz.get(up0, up0), C64::new(1.0, 0.0));
        // σ₋|↑⟩ = |↓⟩
        assert_eq!(p.sm.get(down0, up0), ONE);
        assert_eq!(p.sm.get(up0, down0), ZERO);
    }

    #[test]
    fn tensor_actions() {
        let bspace = SpaceDescriptor::boson(4).unwrap();
        let qspace = SpaceDescriptor::qubit();
        let id = tensor(&Operator::identity(qspace), &Operator::identity(bspace)).unwrap();
        assert!(id.minus(&Operator::identity(id.space())).unwrap().max_abs() == 0.0);

        let sx = pauli_ops(qspace).unwrap().sx;
        let x = ladder_ops(bspace).unwrap().x;
        let op = tensor(&sx, &x).unwrap();
        let space = op.space();
        let mut psi = vec![ZERO; space.dim()];
        psi[space.index(DOWN, 0)] = ONE;
        let out = op.apply(&psi);
        for (i, v) in out.iter().enumerate() {
            let expected = if i == space.index(UP, 1) { std::f64::consts::FRAC_1_SQRT_2 } else { 0.0 };
            assert!((v - C64::new(expected, 0.0)).norm() < 1e-15);
        }

        let b = ladder_ops(bspace).unwrap().n.plus(&Operator::identity(bspace)).unwrap();
        let q = pauli_ops(qspace).unwrap().sz.plus(&Operator::identity(qspace).scaled_re(3.0)).unwrap();
        let t = tensor(&q, &b).unwrap();
        assert!(close(t.trace(), q.trace() * b.trace()));
    }

    #[test]
    fn composite_ladder_is_identity_extended() {
        let space = SpaceDescriptor::qubit_boson(3).unwrap();
        let l = ladder_ops(space).unwrap();
        let bl = ladder_ops(SpaceDescriptor::boson(3).unwrap()).unwrap();
        let ext = tensor(&Operator::identity(SpaceDescriptor::qubit()), &bl.a).unwrap();
        assert!(l.a.minus(&ext).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn exact_squares_match_fock_algebra() {
        let space = SpaceDescriptor::boson(5).unwrap();
        let (x2, p2) = quadrature_squares(space).unwrap();
        // ⟨N_c|X²|N_c⟩ = (2N_c + 1)/2 exactly, unlike the truncated product.
        assert!((x2.get(5, 5).re - 5.5).abs() < 1e-12);
        assert!((p2.get(0, 2).re + 2f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn restrict_rejects_growth() {
        let small = Operator::identity(SpaceDescriptor::boson(3).unwrap());
        assert!(small.restrict(SpaceDescriptor::boson(5).unwrap()).is_err());
    }
}
