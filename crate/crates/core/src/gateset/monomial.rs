use num_complex::Complex64;

use super::permutation::Permutation;
use crate::quantum_core::CMatrix;

/// Exact monomial matrix `P(σ) · diag(ω^{e_0}, .., ω^{e_{D-1}})` with
/// `ω = exp(2πi / order)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MonomialMatrix {
    perm: Permutation,
    exponents: Vec<u64>,
    order: u64,
}

pub(crate) fn root_of_unity(k: u64, order: u64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * (k % order) as f64 / order as f64)
}

impl MonomialMatrix {
    pub fn new(perm: Permutation, exponents: Vec<u64>, order: u64) -> Self {
        assert_eq!(perm.degree(), exponents.len());
        let exponents = exponents.into_iter().map(|e| e % order).collect();
        Self {
            perm,
            exponents,
            order,
        }
    }

    pub fn identity(dim: usize, order: u64) -> Self {
        Self::new(Permutation::identity(dim), vec![0; dim], order)
    }

    pub fn permutation(perm: Permutation, order: u64) -> Self {
        let dim = perm.degree();
        Self::new(perm, vec![0; dim], order)
    }

    pub fn diagonal(exponents: Vec<u64>, order: u64) -> Self {
        Self::new(Permutation::identity(exponents.len()), exponents, order)
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_identity(&self) -> bool {
        self.perm.is_identity() && self.exponents.iter().all(|&e| e == 0)
    }

    /// `self · rhs`, using `P₂† D₁ P₂ = diag(e₁ ∘ σ₂)`.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.order, rhs.order, "monomial phase orders differ");
        let exponents = (0..self.dim())
            .map(|i| (self.exponents[rhs.perm.apply(i)] + rhs.exponents[i]) % self.order)
            .collect();
        Self {
            perm: self.perm.compose(&rhs.perm),
            exponents,
            order: self.order,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv = self.perm.inverse();
        let exponents = (0..self.dim())
            .map(|j| (self.order - self.exponents[inv.apply(j)]) % self.order)
            .collect();
        Self {
            perm: inv,
            exponents,
            order: self.order,
        }
    }

    /// Re-expresses the matrix over a multiple of the current phase order.
    pub fn lift(&self, order: u64) -> Self {
        assert_eq!(order % self.order, 0, "phase order must be a multiple");
        let scale = order / self.order;
        Self {
            perm: self.perm.clone(),
            exponents: self.exponents.iter().map(|e| e * scale).collect(),
            order,
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            m[(self.perm.apply(i), i)] = root_of_unity(self.exponents[i], self.order);
        }
        m
    }

    /// `vec(U ρ U†)` for a column-stacked `vec(ρ)`, in `O(D²)`.
    pub fn conjugate_vectorised(&self, input: &[Complex64], output: &mut [Complex64]) {
        let d = self.dim();
        debug_assert_eq!(input.len(), d * d);
        let phases: Vec<Complex64> = self
            .exponents
            .iter()
            .map(|&e| root_of_unity(e, self.order))
            .collect();
        for j in 0..d {
            let sj = self.perm.apply(j);
            let pj = phases[j].conj();
            for i in 0..d {
                let si = self.perm.apply(i);
                output[si + sj * d] = phases[i] * pj * input[i + j * d];
            }
        }
    }
}
