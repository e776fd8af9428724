//! The real hyperdihedral gate group `S_d ⋉ (C_{k_0} × .. × C_{k_l})` and its
//! unitary representatives `γ(σ, α) = P(σ) ∏ T_i^{α_i}`.

mod monomial;
mod multiqudit;
pub mod permutation;

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use monomial::MonomialMatrix;
pub use multiqudit::{csum, fourier_multi, multiqudit_generators, single_site, MultiQuditGateSet};
pub use permutation::{parse_cycles, Permutation};

use crate::error::{Error, Result};
use crate::modring::{self, CoordinateSolver, Generators, ResidueVector};
use crate::quantum_core::CMatrix;

/// Largest group the enumeration helpers will walk.
pub const ENUMERATION_LIMIT: u128 = 2_000_000;

/// Which abelian factor to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `d` independent generators `D_i = diag(1, .., ω, .., 1)`.
    #[default]
    Maximal,
    /// Generators extracted from the permutation orbit of the target gate.
    Minimal,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Maximal => write!(f, "maximal"),
            Mode::Minimal => write!(f, "minimal"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximal" => Ok(Mode::Maximal),
            "minimal" => Ok(Mode::Minimal),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

pub fn is_prime_power(d: usize) -> bool {
    if d < 2 {
        return false;
    }
    let p = (2..=d).find(|p| d.is_multiple_of(*p)).unwrap();
    let mut m = d;
    while m.is_multiple_of(p) {
        m /= p;
    }
    m == 1
}

/// Order of the qudit T gate `diag(ω^{j³})`: 9 for qutrits, 18 for `d = 6`,
/// `d` otherwise.
pub fn phase_order(d: usize) -> u64 {
    match d {
        3 => 9,
        6 => 18,
        _ => d as u64,
    }
}

/// Default target diagonal gate as `(exponents, phase order)`.
///
/// Qubits use `diag(1, ω_8)`; ququarts use the two-qubit embedding
/// `diag(1, ω_8) ⊗ I`. Every other dimension uses `ω_{o(d)}^{j³}`.
pub fn default_target(d: usize) -> (Vec<u64>, u64) {
    match d {
        2 => (vec![0, 1], 8),
        4 => (vec![0, 0, 1, 1], 8),
        _ => {
            let o = phase_order(d);
            ((0..d as u64).map(|j| (j * j * j) % o).collect(), o)
        }
    }
}

pub fn fourier_matrix(d: usize) -> CMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |i, j| {
        monomial::root_of_unity((i * j) as u64 % d as u64, d as u64) * norm
    })
}

/// A unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("unitary must be square".into()));
        }
        let dev = (&m * m.adjoint() - CMatrix::identity(m.nrows(), m.ncols()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > tol {
            return Err(Error::InvalidParameter(format!(
                "matrix is not unitary (deviation {dev:e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Exactly one non-zero entry per row and per column.
    pub fn is_monomial(&self, tol: f64) -> bool {
        let m = &self.0;
        let rows_ok = (0..m.nrows()).all(|i| m.row(i).iter().filter(|z| z.norm() > tol).count() == 1);
        let cols_ok = (0..m.ncols()).all(|j| m.column(j).iter().filter(|z| z.norm() > tol).count() == 1);
        rows_ok && cols_ok
    }
}

/// Group element `(σ, α)`; `α_i ∈ Z_{k_i}` are coordinates over the
/// generators of the abelian factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub sigma: Permutation,
    pub alpha: Vec<u64>,
}

impl GroupElement {
    pub fn new(sigma: Permutation, alpha: Vec<u64>) -> Self {
        Self { sigma, alpha }
    }
}

impl fmt::Display for GroupElement {
    /// `(cycle-notation; α-tuple)`, e.g. `((23); (7,8,8))`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let alpha: Vec<String> = self.alpha.iter().map(u64::to_string).collect();
        write!(f, "({}; ({}))", self.sigma, alpha.join(","))
    }
}

/// The gate group for one qudit of dimension `d`.
#[derive(Debug, Clone)]
pub struct GateSet {
    dim: usize,
    order: u64,
    target: ResidueVector,
    mode: Mode,
    generators: Generators,
    solver: CoordinateSolver,
}

impl GateSet {
    /// Gate set for the default target gate of dimension `d`.
    pub fn build(d: usize, mode: Mode) -> Result<Self> {
        if !is_prime_power(d) {
            return Err(Error::NotPrimePower(d));
        }
        let (phases, order) = default_target(d);
        let phases: Vec<i64> = phases.iter().map(|&p| p as i64).collect();
        Self::with_target(d, &phases, order, mode)
    }

    /// Gate set for the diagonal target `diag(ω_order^{phases_j})`.
    pub fn with_target(d: usize, phases: &[i64], order: u64, mode: Mode) -> Result<Self> {
        if !is_prime_power(d) {
            return Err(Error::NotPrimePower(d));
        }
        if phases.len() != d {
            return Err(Error::InvalidPhases(format!(
                "expected {d} phases, got {}",
                phases.len()
            )));
        }
        if order < 2 {
            return Err(Error::InvalidPhases(format!("phase order {order} is below two")));
        }
        let target = ResidueVector::new(phases, order)?;
        if target.order() < 2 {
            return Err(Error::InvalidPhases(
                "target gate has order below two (zero phase vector)".into(),
            ));
        }
        let generators = match mode {
            Mode::Maximal => {
                let vectors: Vec<ResidueVector> = (0..d)
                    .map(|i| {
                        let mut e = vec![0; d];
                        e[i] = 1;
                        ResidueVector::new(&e, order)
                    })
                    .collect::<Result<_>>()?;
                Generators {
                    orders: vec![order; d],
                    vectors,
                }
            }
            Mode::Minimal => modring::independent_generators(&permutation_orbit(&target))?,
        };
        let solver = CoordinateSolver::new(&generators, d, order)?;
        Ok(Self {
            dim: d,
            order,
            target,
            mode,
            generators,
            solver,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Phase order `o`: every diagonal entry is a power of `exp(2πi/o)`.
    pub fn phase_order(&self) -> u64 {
        self.order
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn target(&self) -> &ResidueVector {
        &self.target
    }

    pub fn generators(&self) -> &Generators {
        &self.generators
    }

    pub fn cyclic_orders(&self) -> &[u64] {
        &self.generators.orders
    }

    pub fn group_order(&self) -> u128 {
        let fact: u128 = (1..=self.dim as u128).product();
        fact * self.generators.group_order()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::new(
            Permutation::identity(self.dim),
            vec![0; self.generators.vectors.len()],
        )
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        if g.sigma.degree() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "permutation of degree {} in a d = {} gate set",
                g.sigma.degree(),
                self.dim
            )));
        }
        if g.alpha.len() != self.generators.orders.len() {
            return Err(Error::LengthMismatch {
                expected: self.generators.orders.len(),
                found: g.alpha.len(),
            });
        }
        if let Some((a, k)) = g.alpha.iter().zip(&self.generators.orders).find(|(a, k)| a >= k) {
            return Err(Error::InvalidParameter(format!("α entry {a} outside Z_{k}")));
        }
        Ok(())
    }

    /// Exponent vector of `Δ(α) = ∏ T_i^{α_i}`.
    pub fn diagonal_exponents(&self, alpha: &[u64]) -> Vec<u64> {
        let o = self.order;
        let mut e = vec![0u64; self.dim];
        for (a, g) in alpha.iter().zip(&self.generators.vectors) {
            for (ej, gj) in e.iter_mut().zip(g.entries()) {
                *ej = (*ej + a * gj) % o;
            }
        }
        e
    }

    pub fn monomial(&self, g: &GroupElement) -> MonomialMatrix {
        MonomialMatrix::new(g.sigma.clone(), self.diagonal_exponents(&g.alpha), self.order)
    }

    /// `γ(σ, α) = P(σ) Δ(α)`.
    pub fn representative(&self, g: &GroupElement) -> Result<UnitaryMatrix> {
        self.check(g)?;
        Ok(UnitaryMatrix(self.monomial(g).to_dense()))
    }

    /// Recovers `(σ, α)` from an exact monomial matrix.
    pub fn decompose(&self, m: &MonomialMatrix) -> Result<GroupElement> {
        if m.dim() != self.dim || m.order() != self.order {
            return Err(Error::DimensionMismatch(
                "monomial matrix does not belong to this gate set".into(),
            ));
        }
        let alpha = self.solver.coordinates(m.exponents())?;
        Ok(GroupElement::new(m.perm().clone(), alpha))
    }

    /// Semidirect product: `γ(σ₁,α₁) γ(σ₂,α₂) = P(σ₁σ₂) Δ(α₁^{σ₂}) Δ(α₂)`
    /// with `Δ(α^{σ}) = P(σ)† Δ(α) P(σ)`.
    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        let e1 = self.diagonal_exponents(&a.alpha);
        let conjugated: Vec<u64> = (0..self.dim).map(|i| e1[b.sigma.apply(i)]).collect();
        let beta = self.solver.coordinates(&conjugated).map_err(|_| {
            Error::InvalidParameter(
                "conjugated phase vector left the diagonal subgroup (internal consistency)".into(),
            )
        })?;
        let alpha = beta
            .iter()
            .zip(&b.alpha)
            .zip(&self.generators.orders)
            .map(|((x, y), k)| (x + y) % k)
            .collect();
        Ok(GroupElement::new(a.sigma.compose(&b.sigma), alpha))
    }

    pub fn invert(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.decompose(&self.monomial(g).inverse())
    }

    /// Element `h` with `γ(h) γ(g_m) ⋯ γ(g_1) = I` for gates applied in order
    /// `g_1, .., g_m`, computed by exact monomial algebra.
    pub fn invert_sequence(&self, gates: &[GroupElement]) -> Result<GroupElement> {
        let mut total = MonomialMatrix::identity(self.dim, self.order);
        for g in gates {
            self.check(g)?;
            total = self.monomial(g).mul(&total);
        }
        self.decompose(&total.inverse())
    }

    /// Uniform sample: Fisher–Yates for `σ`, independent uniform `α_i`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        let mut image: Vec<usize> = (0..self.dim).collect();
        image.shuffle(rng);
        let alpha = self
            .generators
            .orders
            .iter()
            .map(|&k| rng.random_range(0..k))
            .collect();
        GroupElement::new(Permutation::from_image(image).expect("shuffle is a bijection"), alpha)
    }

    pub fn sample_uniform(&self, seed: u64) -> GroupElement {
        self.sample(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Every group element, permutation-major.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        let size = self.group_order();
        if size > ENUMERATION_LIMIT {
            return Err(Error::GroupTooLarge(size));
        }
        let alphas = self.alphas();
        let mut out = Vec::with_capacity(size as usize);
        for sigma in Permutation::all(self.dim) {
            for a in &alphas {
                out.push(GroupElement::new(sigma.clone(), a.clone()));
            }
        }
        Ok(out)
    }

    /// Every `α` in the abelian factor, lexicographic.
    pub fn alphas(&self) -> Vec<Vec<u64>> {
        let orders = &self.generators.orders;
        let mut out = vec![Vec::new()];
        for &k in orders {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..k).map(move |x| {
                        let mut v = prefix.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        out
    }

    pub fn parse_element(&self, text: &str) -> Result<GroupElement> {
        let g = parse_element(text, self.dim)?;
        self.check(&g)?;
        Ok(g)
    }

    pub fn fourier(&self) -> CMatrix {
        fourier_matrix(self.dim)
    }

    /// Diagonal generator matrices `T_i`.
    pub fn generator_matrices(&self) -> Vec<CMatrix> {
        self.generators
            .vectors
            .iter()
            .map(|v| MonomialMatrix::diagonal(v.entries().to_vec(), self.order).to_dense())
            .collect()
    }
}

/// Columns `toRing(P(σ) T P(σ)†)` for every `σ`, listed in arrangement order.
pub fn permutation_orbit(target: &ResidueVector) -> Vec<ResidueVector> {
    let d = target.len();
    Permutation::all(d)
        .iter()
        .map(|pi| {
            // P(σ) T P(σ)† carries the exponent at position i to σ(i); with
            // π = σ⁻¹ that is e ∘ π.
            let e = pi.image().iter().map(|&j| target.entries()[j]).collect();
            ResidueVector::from_reduced(e, target.modulus())
        })
        .collect()
}

/// Parses `(cycles; (a,b,..))`.
pub fn parse_element(text: &str, degree: usize) -> Result<GroupElement> {
    let t = text.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("expected '(σ; α)', got '{text}'")))?;
    let (perm, alpha) = inner
        .split_once(';')
        .ok_or_else(|| Error::Parse(format!("missing ';' in '{text}'")))?;
    let alpha = alpha.trim();
    let alpha = alpha
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("α must be a parenthesised tuple in '{text}'")))?;
    let alpha = alpha
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<u64>().map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupElement::new(parse_cycles(perm, degree)?, alpha))
}

/// Column-major dense product of representatives in application order.
pub fn dense_sequence_product(set: &GateSet, gates: &[GroupElement]) -> Result<CMatrix> {
    let mut total = DMatrix::<Complex64>::identity(set.dim(), set.dim());
    for g in gates {
        total = set.representative(g)?.into_inner() * total;
    }
    Ok(total)
}
