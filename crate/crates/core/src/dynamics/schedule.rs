use std::sync::Arc;

use nalgebra::DMatrix;

use crate::linalg::{Basis, Operator, SparseMatrix, C64, ONE};

/// A time-dependent Hamiltonian.
pub trait Schedule: Send + Sync {
    fn basis(&self) -> Basis;

    /// `y = scale * H(t) x`.
    fn apply(&self, t: f64, x: &[C64], y: &mut [C64], scale: C64);

    /// Dense `H(t)`.
    fn dense(&self, t: f64) -> DMatrix<C64>;
}

type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `H(t) = sum_k f_k(t) A_k` with fixed operators `A_k`.
#[derive(Clone)]
pub struct CoefficientSchedule {
    basis: Basis,
    terms: Vec<(Coefficient, Operator, SparseMatrix)>,
}

impl CoefficientSchedule {
    pub fn new(basis: Basis) -> Self {
        Self { basis, terms: Vec::new() }
    }

    pub fn term(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static, op: Operator) -> Self {
        assert_eq!(op.basis(), self.basis, "schedule term basis mismatch");
        let sp = op.to_sparse();
        self.terms.push((Arc::new(f), op, sp));
        self
    }

    pub fn at(&self, t: f64) -> Operator {
        Operator::new(self.basis, self.dense(t))
    }
}

impl Schedule for CoefficientSchedule {
    fn basis(&self) -> Basis {
        self.basis
    }

    fn apply(&self, t: f64, x: &[C64], y: &mut [C64], scale: C64) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (f, _, sp) in &self.terms {
            let c = f(t);
            if c != 0.0 {
                sp.matvec_add(x, y, scale * c);
            }
        }
    }

    fn dense(&self, t: f64) -> DMatrix<C64> {
        let d = self.basis.dim();
        let mut m = DMatrix::zeros(d, d);
        for (f, op, _) in &self.terms {
            let c = f(t);
            if c != 0.0 {
                m += op.matrix() * (ONE * c);
            }
        }
        m
    }
}
