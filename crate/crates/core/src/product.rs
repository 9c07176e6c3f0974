//! Operators on the full 2^N product basis, used by the brute-force oracle.
//!
//! Spin `k` is bit `k` of the basis index; a set bit means spin down.

use nalgebra::DMatrix;

use crate::linalg::{Basis, Operator, C64, I, ZERO};

fn single_site(n_spins: usize, site: usize, local: [[C64; 2]; 2]) -> DMatrix<C64> {
    let d = 1usize << n_spins;
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        let b = (col >> site) & 1;
        for (a, row_local) in local.iter().enumerate() {
            // local[a][b]: <a|op|b> with a,b in {0 = up, 1 = down}
            let v = row_local[b];
            if v != ZERO {
                let row = (col & !(1 << site)) | (a << site);
                m[(row, col)] += v;
            }
        }
    }
    m
}

const O: C64 = ZERO;
const P: C64 = C64::new(1.0, 0.0);

pub fn sigma_x(n_spins: usize, site: usize) -> Operator {
    Operator::new(Basis::Product { n_spins }, single_site(n_spins, site, [[O, P], [P, O]]))
}

pub fn sigma_y(n_spins: usize, site: usize) -> Operator {
    Operator::new(Basis::Product { n_spins }, single_site(n_spins, site, [[O, -I], [I, O]]))
}

pub fn sigma_z(n_spins: usize, site: usize) -> Operator {
    Operator::new(Basis::Product { n_spins }, single_site(n_spins, site, [[P, O], [O, -P]]))
}

/// Collective `S_a = (1/2) sum_k sigma^a_k` for a in (x, y, z).
pub fn collective(n_spins: usize) -> [Operator; 3] {
    let basis = Basis::Product { n_spins };
    let mut out = [Operator::zeros(basis), Operator::zeros(basis), Operator::zeros(basis)];
    for k in 0..n_spins {
        out[0] = out[0].add(&sigma_x(n_spins, k).scale_re(0.5)).unwrap();
        out[1] = out[1].add(&sigma_y(n_spins, k).scale_re(0.5)).unwrap();
        out[2] = out[2].add(&sigma_z(n_spins, k).scale_re(0.5)).unwrap();
    }
    out
}

/// Embedding of the symmetric Dicke block into the product basis: column
/// `i` is |N/2, m = -N/2 + i>.
pub fn dicke_embedding(n_spins: usize) -> DMatrix<C64> {
    let d = 1usize << n_spins;
    let lf = crate::spin::ln_factorials(n_spins);
    let mut e = DMatrix::zeros(d, n_spins + 1);
    for idx in 0..d {
        let downs = idx.count_ones() as usize;
        let ups = n_spins - downs;
        // m = ups - N/2, Dicke index i = ups
        let ln_binom = lf[n_spins] - lf[ups] - lf[downs];
        e[(idx, ups)] = C64::new((-0.5 * ln_binom).exp(), 0.0);
    }
    e
}
