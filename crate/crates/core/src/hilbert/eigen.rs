use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use super::{ensure_same, Operator, QuantumState, SpaceDescriptor, ZERO};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
enum Vectors {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: Vectors,
}

/// Hermitian eigendecomposition `H = V E V†`.
///
/// The matrix is first split into its decoupled blocks (connected components
/// of the nonzero pattern), and blocks with exactly real entries are
/// diagonalized in real arithmetic.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    dim: usize,
    blocks: Vec<Block>,
}

impl Eigensystem {
    pub fn new(op: &Operator) -> Result<Self> {
        let scale = op.max_abs().max(1.0);
        let residual = op.hermiticity_residual();
        if residual > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { residual });
        }
        let m = op.matrix();
        let dim = op.dim();
        let mut blocks = Vec::new();
        for indices in components(op) {
            let k = indices.len();
            let real = indices.iter().all(|&j| indices.iter().all(|&i| m[(i, j)].im == 0.0));
            let (values, vectors) = if real {
                let sub = Mat::<f64>::from_fn(k, k, |i, j| m[(indices[i], indices[j])].re);
                let evd = sub.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
                let values: Vec<f64> = (0..k).map(|i| evd.S()[i]).collect();
                (values, Vectors::Real(evd.U().to_owned()))
            } else {
                let sub = Mat::<C64>::from_fn(k, k, |i, j| m[(indices[i], indices[j])]);
                let evd = sub.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
                let values: Vec<f64> = (0..k).map(|i| evd.S()[i].re).collect();
                (values, Vectors::Complex(evd.U().to_owned()))
            };
            if values.iter().any(|v: &f64| !v.is_finite()) {
                return Err(Error::Eigen("non-finite eigenvalue".into()));
            }
            blocks.push(Block { indices, values, vectors });
        }
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `f(H) v`
    pub fn apply_fn(&self, v: &[C64], f: impl Fn(f64) -> C64) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length does not match eigensystem");
        let mut out = vec![ZERO; self.dim];
        for b in &self.blocks {
            let local: Vec<C64> = b.indices.iter().map(|&i| v[i]).collect();
            for (k, &e) in b.values.iter().enumerate() {
                let fk = f(e);
                match &b.vectors {
                    Vectors::Real(u) => {
                        let col = u.col(k);
                        let c: C64 = local.iter().enumerate().map(|(i, x)| x * col[i]).sum();
                        let c = c * fk;
                        if c == ZERO {
                            continue;
                        }
                        for (i, &idx) in b.indices.iter().enumerate() {
                            out[idx] += c * col[i];
                        }
                    }
                    Vectors::Complex(u) => {
                        let col = u.col(k);
                        let c: C64 = local.iter().enumerate().map(|(i, x)| col[i].conj() * x).sum();
                        let c = c * fk;
                        if c == ZERO {
                            continue;
                        }
                        for (i, &idx) in b.indices.iter().enumerate() {
                            out[idx] += c * col[i];
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense `V f(E) V†`.
    pub fn function_matrix(&self, f: impl Fn(f64) -> C64) -> Mat<C64> {
        let mut out = Mat::<C64>::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let k = b.indices.len();
            let fe: Vec<C64> = b.values.iter().map(|&e| f(e)).collect();
            let u = match &b.vectors {
                Vectors::Real(u) => Mat::<C64>::from_fn(k, k, |i, j| C64::new(u[(i, j)], 0.0)),
                Vectors::Complex(u) => u.clone(),
            };
            let scaled = Mat::<C64>::from_fn(k, k, |i, j| u[(i, j)] * fe[j]);
            let local = &scaled * u.adjoint();
            for (j, &cj) in b.indices.iter().enumerate() {
                for (i, &ci) in b.indices.iter().enumerate() {
                    out[(ci, cj)] = local[(i, j)];
                }
            }
        }
        out
    }

    /// `V E V†`
    pub fn reconstruct(&self) -> Mat<C64> {
        self.function_matrix(|e| C64::new(e, 0.0))
    }
}

/// Connected components of the nonzero pattern, each sorted, ordered by
/// smallest index.
fn components(op: &Operator) -> Vec<Vec<usize>> {
    let n = op.dim();
    let m = op.matrix();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != ZERO || m[(j, i)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Exact propagator `exp(−iHt)` for a fixed Hamiltonian.
#[derive(Clone, Debug)]
pub struct Propagator {
    space: SpaceDescriptor,
    eig: Eigensystem,
}

impl Propagator {
    pub fn new(h: &Operator) -> Result<Self> {
        Ok(Self { space: h.space(), eig: Eigensystem::new(h)? })
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eig
    }

    pub fn evolve(&self, psi: &QuantumState, t: f64) -> Result<QuantumState> {
        ensure_same(&self.space, &psi.space())?;
        let amps = psi
            .amplitudes()
            .ok_or_else(|| Error::InvalidState("pure state required".into()))?;
        if !t.is_finite() {
            return Err(Error::NonFinite(format!("evolution time {t}")));
        }
        let out = self.eig.apply_fn(amps, |e| C64::from_polar(1.0, -e * t));
        QuantumState::pure(self.space, out)
    }

    /// Dense `exp(−iHt)`.
    pub fn unitary(&self, t: f64) -> Operator {
        let m = self.eig.function_matrix(|e| C64::from_polar(1.0, -e * t));
        Operator::new(self.space, m).expect("eigensystem dimension matches its space")
    }
}

/// `exp(−iHt)ψ` by Hermitian eigendecomposition.
pub fn evolve_pure(h: &Operator, psi: &QuantumState, t: f64) -> Result<QuantumState> {
    ensure_same(&h.space(), &psi.space())?;
    Propagator::new(h)?.evolve(psi, t)
}
