//! Dense operators with basis tags, a compressed sparse view for fast
//! matrix-vector products, and Hermitian exponentials (dense and Lanczos).

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Basis an operator or state is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Dicke block |j, m>, m = -j..j, stored by doubled `2j`.
    Dicke { two_j: u32 },
    /// Full 2^N product basis, spin k is bit k (bit set = spin down).
    Product { n_spins: usize },
    /// Dicke block tensor a truncated Fock space (spin index major).
    SpinFock { two_j: u32, cutoff: usize },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::Dicke { two_j } => two_j as usize + 1,
            Basis::Product { n_spins } => 1 << n_spins,
            Basis::SpinFock { two_j, cutoff } => (two_j as usize + 1) * cutoff,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Dicke { two_j } => write!(f, "dicke(2j={two_j})"),
            Basis::Product { n_spins } => write!(f, "product(N={n_spins})"),
            Basis::SpinFock { two_j, cutoff } => write!(f, "spin-fock(2j={two_j}, n<{cutoff})"),
        }
    }
}

fn check_basis(a: Basis, b: Basis) -> Result<()> {
    if a != b {
        return Err(Error::BasisMismatch {
            left: a.to_string(),
            right: b.to_string(),
        });
    }
    Ok(())
}

/// Dense complex matrix tagged with its basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    basis: Basis,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn new(basis: Basis, matrix: DMatrix<C64>) -> Self {
        assert_eq!(matrix.nrows(), basis.dim(), "matrix does not fit basis {basis}");
        assert_eq!(matrix.ncols(), basis.dim(), "matrix does not fit basis {basis}");
        Self { basis, matrix }
    }

    pub fn zeros(basis: Basis) -> Self {
        let d = basis.dim();
        Self::new(basis, DMatrix::zeros(d, d))
    }

    pub fn identity(basis: Basis) -> Self {
        let d = basis.dim();
        Self::new(basis, DMatrix::identity(d, d))
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        check_basis(self.basis, other.basis)?;
        Ok(Operator::new(self.basis, &self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        check_basis(self.basis, other.basis)?;
        Ok(Operator::new(self.basis, &self.matrix - &other.matrix))
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        check_basis(self.basis, other.basis)?;
        Ok(Operator::new(self.basis, &self.matrix * &other.matrix))
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        check_basis(self.basis, other.basis)?;
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        Ok(Operator::new(self.basis, ab - ba))
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator::new(self.basis, &self.matrix * c)
    }

    pub fn scale_re(&self, c: f64) -> Operator {
        self.scale(C64::new(c, 0.0))
    }

    pub fn dagger(&self) -> Operator {
        Operator::new(self.basis, self.matrix.adjoint())
    }

    /// Linear combination `sum_k c_k A_k`; all terms must share one basis.
    pub fn combine(terms: &[(f64, &Operator)]) -> Result<Operator> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty linear combination".into()))?;
        let mut acc = DMatrix::zeros(first.dim(), first.dim());
        for (c, op) in terms {
            check_basis(first.basis, op.basis)?;
            acc += &op.matrix * C64::new(*c, 0.0);
        }
        Ok(Operator::new(first.basis, acc))
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// `max |H - H^dagger|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        check_basis(self.basis, state.basis)?;
        Ok(PureState {
            basis: self.basis,
            amplitudes: &self.matrix * &state.amplitudes,
        })
    }

    pub fn expectation(&self, state: &PureState) -> Result<C64> {
        check_basis(self.basis, state.basis)?;
        Ok(state.amplitudes.dotc(&(&self.matrix * &state.amplitudes)))
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix::from_dense(&self.matrix)
    }
}

/// Normalized (or to-be-normalized) state vector with a basis tag.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    basis: Basis,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(basis: Basis, amplitudes: DVector<C64>) -> Self {
        assert_eq!(amplitudes.len(), basis.dim(), "vector does not fit basis {basis}");
        Self { basis, amplitudes }
    }

    pub fn basis_state(basis: Basis, index: usize) -> Self {
        let mut v = DVector::zeros(basis.dim());
        v[index] = ONE;
        Self::new(basis, v)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.amplitudes /= C64::new(n, 0.0);
        self
    }

    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        check_basis(self.basis, other.basis)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }
}

/// Compressed sparse row matrix used inside integrator right-hand sides.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Largest absolute row sum, an upper bound on the spectral norm of a
    /// Hermitian matrix.
    pub fn row_abs_sum_max(&self) -> f64 {
        (0..self.dim)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `y = scale * A x` (overwrites y).
    pub fn matvec(&self, x: &[C64], y: &mut [C64], scale: C64) {
        for i in 0..self.dim {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc * scale;
        }
    }

    /// `y += scale * A x`.
    pub fn matvec_add(&self, x: &[C64], y: &mut [C64], scale: C64) {
        for i in 0..self.dim {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] += acc * scale;
        }
    }

    /// Row-major dense `out = A * B` for square `B` of the same dimension.
    pub fn mul_dense(&self, b: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = ZERO);
        for i in 0..d {
            let row_out = &mut out[i * d..(i + 1) * d];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.vals[k];
                let row_b = &b[self.cols[k] * d..(self.cols[k] + 1) * d];
                for (o, bv) in row_out.iter_mut().zip(row_b) {
                    *o += a * bv;
                }
            }
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix. Real symmetric input takes a
/// purely real path.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(m: &DMatrix<C64>) -> Self {
        let real = m.iter().all(|z| z.im == 0.0);
        if real {
            let re = m.map(|z| z.re);
            let re = (&re + re.transpose()) * 0.5;
            let eig = SymmetricEigen::new(re);
            Self {
                values: eig.eigenvalues,
                vectors: eig.eigenvectors.map(|x| C64::new(x, 0.0)),
            }
        } else {
            let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
            let eig = SymmetricEigen::new(h);
            Self {
                values: eig.eigenvalues,
                vectors: eig.eigenvectors,
            }
        }
    }

    /// `exp(-i H t) v`.
    pub fn propagate(&self, v: &DVector<C64>, t: f64) -> DVector<C64> {
        let mut coeffs = self.vectors.ad_mul(v);
        for (c, e) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        &self.vectors * coeffs
    }

    /// Sorted ascending copy of the eigenvalues.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.values.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `exp(-i H t) v` by a Lanczos projection with `krylov_dim` vectors.
pub fn lanczos_expm(h: &SparseMatrix, v: &DVector<C64>, t: f64, krylov_dim: usize) -> DVector<C64> {
    let d = h.dim();
    let beta0 = v.norm();
    if beta0 == 0.0 {
        return v.clone();
    }
    let m = krylov_dim.min(d).max(1);
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    basis.push(v / C64::new(beta0, 0.0));
    let mut w = DVector::zeros(d);
    for k in 0..m {
        h.matvec(basis[k].as_slice(), w.as_mut_slice(), ONE);
        let a = basis[k].dotc(&w).re;
        alpha.push(a);
        w.axpy(C64::new(-a, 0.0), &basis[k], ONE);
        if k > 0 {
            w.axpy(C64::new(-beta[k - 1], 0.0), &basis[k - 1], ONE);
        }
        // full reorthogonalization keeps the small basis clean
        for q in &basis {
            let c = q.dotc(&w);
            w.axpy(-c, q, ONE);
        }
        let b = w.norm();
        if k + 1 == m || b < 1e-14 * beta0.max(1.0) {
            break;
        }
        beta.push(b);
        basis.push(&w / C64::new(b, 0.0));
    }
    let k = alpha.len();
    let mut t_mat = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t_mat[(i, i)] = alpha[i];
        if i + 1 < k {
            t_mat[(i, i + 1)] = beta[i];
            t_mat[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t_mat);
    // exp(-i T t) e_1
    let mut small = DVector::<C64>::zeros(k);
    for (col, &e) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(eig.eigenvectors[(0, col)], -e * t);
        for row in 0..k {
            small[row] += phase * eig.eigenvectors[(row, col)];
        }
    }
    let mut out = DVector::zeros(d);
    for (q, c) in basis.iter().zip(small.iter()) {
        out.axpy(*c * beta0, q, ONE);
    }
    out
}
