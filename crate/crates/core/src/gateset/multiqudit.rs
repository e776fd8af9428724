//! Generators `⟨CSUM_{i,i+1}, X^{(i)}, T^{(1)}⟩` of the n-qudit gate group.
//! Elements are kept as words in the generators; inversion uses exact
//! monomial algebra.

use rand::Rng;

use super::monomial::MonomialMatrix;
use super::permutation::Permutation;
use super::{default_target, fourier_matrix, is_prime_power};
use crate::error::{Error, Result};
use crate::quantum_core::{kron_all, CMatrix};

/// Largest total dimension `d^n` supported for multi-qudit work.
pub const MAX_TOTAL_DIM: usize = 16;

fn total_dim(d: usize, n: usize) -> usize {
    d.pow(n as u32)
}

/// Digits of a basis index, site 0 most significant.
fn digits(mut index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn index_of(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// `CSUM|a, b⟩ = |a, a ⊕ b⟩` with control `control` and target `control + 1`.
pub fn csum(d: usize, n: usize, control: usize, order: u64) -> MonomialMatrix {
    let dim = total_dim(d, n);
    let image = (0..dim)
        .map(|k| {
            let mut x = digits(k, d, n);
            x[control + 1] = (x[control] + x[control + 1]) % d;
            index_of(&x, d)
        })
        .collect();
    MonomialMatrix::permutation(Permutation::from_image(image).unwrap(), order)
}

/// `g` acting on `site` and identity elsewhere; `g` acts on one qudit.
pub fn single_site(g: &MonomialMatrix, d: usize, n: usize, site: usize) -> MonomialMatrix {
    let dim = total_dim(d, n);
    let mut image = Vec::with_capacity(dim);
    let mut exps = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut x = digits(k, d, n);
        exps.push(g.exponents()[x[site]]);
        x[site] = g.perm().apply(x[site]);
        image.push(index_of(&x, d));
    }
    MonomialMatrix::new(Permutation::from_image(image).unwrap(), exps, g.order())
}

/// Shift `X|i⟩ = |i+1⟩` as a monomial matrix.
fn shift(d: usize, order: u64) -> MonomialMatrix {
    let image = (0..d).map(|i| (i + 1) % d).collect();
    MonomialMatrix::permutation(Permutation::from_image(image).unwrap(), order)
}

/// Generator list in the order CSUM_{0,1}, .., CSUM_{n-2,n-1}, X on each
/// site, T on site 0.
pub fn multiqudit_generators(d: usize, n: usize) -> Result<Vec<MonomialMatrix>> {
    Ok(MultiQuditGateSet::new(d, n)?.generators().to_vec())
}

/// `F^{⊗n}`.
pub fn fourier_multi(d: usize, n: usize) -> CMatrix {
    kron_all(&vec![fourier_matrix(d); n])
}

#[derive(Debug, Clone)]
pub struct MultiQuditGateSet {
    d: usize,
    n: usize,
    order: u64,
    generators: Vec<MonomialMatrix>,
}

impl MultiQuditGateSet {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if !is_prime_power(d) {
            return Err(Error::NotPrimePower(d));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "multi-qudit gate set needs n ≥ 2, got {n}"
            )));
        }
        if total_dim(d, n) > MAX_TOTAL_DIM {
            return Err(Error::UnsupportedDimension(format!(
                "d^n = {} exceeds {MAX_TOTAL_DIM}",
                total_dim(d, n)
            )));
        }
        let (t, order) = default_target(d);
        let mut generators: Vec<MonomialMatrix> = (0..n - 1).map(|i| csum(d, n, i, order)).collect();
        let x = shift(d, order);
        generators.extend((0..n).map(|site| single_site(&x, d, n, site)));
        generators.push(single_site(&MonomialMatrix::diagonal(t, order), d, n, 0));
        Ok(Self {
            d,
            n,
            order,
            generators,
        })
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn qudits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        total_dim(self.d, self.n)
    }

    pub fn phase_order(&self) -> u64 {
        self.order
    }

    pub fn generators(&self) -> &[MonomialMatrix] {
        &self.generators
    }

    /// Product of a random word of `length` generators.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, length: usize) -> MonomialMatrix {
        let mut m = MonomialMatrix::identity(self.dim(), self.order);
        for _ in 0..length {
            let g = &self.generators[rng.random_range(0..self.generators.len())];
            m = g.mul(&m);
        }
        m
    }

    /// Inverse of a gate sequence given in application order.
    pub fn invert_sequence(&self, gates: &[MonomialMatrix]) -> MonomialMatrix {
        gates
            .iter()
            .fold(MonomialMatrix::identity(self.dim(), self.order), |acc, g| g.mul(&acc))
            .inverse()
    }
}
