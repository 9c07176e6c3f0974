use crate::error::{Error, Result};
use crate::linalg::{Operator, SparseMatrix, C64, I, ZERO};

/// `L(rho) = -i[H, rho] + sum_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)` on
/// one Hilbert space, acting on row-major dense matrices.
#[derive(Clone, Debug)]
pub struct DenseLindbladian {
    dim: usize,
    /// `H - (i/2) sum_k L_k^dag L_k`
    heff: SparseMatrix,
    jumps: Vec<SparseMatrix>,
}

impl DenseLindbladian {
    pub fn new(h: &Operator, jumps: &[Operator]) -> Result<Self> {
        let mut heff = h.matrix().clone();
        for l in jumps {
            if l.basis() != h.basis() {
                return Err(Error::BasisMismatch {
                    left: l.basis().to_string(),
                    right: h.basis().to_string(),
                });
            }
            heff -= (l.matrix().adjoint() * l.matrix()) * C64::new(0.0, 0.5);
        }
        Ok(Self {
            dim: h.dim(),
            heff: SparseMatrix::from_dense(&heff),
            jumps: jumps.iter().map(Operator::to_sparse).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scratch(&self) -> Scratch {
        let n = self.dim * self.dim;
        Scratch {
            a: vec![ZERO; n],
            b: vec![ZERO; n],
            c: vec![ZERO; n],
        }
    }

    /// `out += L(rho)`. Exact for any `rho`, so roundoff in the anti-Hermitian
    /// part is not amplified.
    pub fn apply_add(&self, rho: &[C64], out: &mut [C64], s: &mut Scratch) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                s.c[i * d + j] = rho[j * d + i].conj();
            }
        }
        // rho Heff^dag = (Heff rho^dag)^dag
        self.heff.mul_dense(rho, &mut s.a);
        self.heff.mul_dense(&s.c, &mut s.b);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += -I * s.a[i * d + j] + I * s.b[j * d + i].conj();
            }
        }
        for l in &self.jumps {
            // rho L^dag = (L rho^dag)^dag
            l.mul_dense(&s.c, &mut s.a);
            for i in 0..d {
                for j in 0..d {
                    s.b[i * d + j] = s.a[j * d + i].conj();
                }
            }
            l.mul_dense(&s.b, &mut s.a);
            for (o, v) in out.iter_mut().zip(&s.a) {
                *o += *v;
            }
        }
    }
}

pub struct Scratch {
    a: Vec<C64>,
    b: Vec<C64>,
    c: Vec<C64>,
}
