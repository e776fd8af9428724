//! Irrep projectors of the PL representation, the twirl parameters
//! `η_I, η_0, η_+`, and the character-sum checks behind the three-block
//! decomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gateset::{GateSet, MonomialMatrix, Permutation};
use crate::quantum_core::{CMatrix, CVector, Superoperator, WeylBasis};

pub type RMatrix = DMatrix<f64>;

/// Which block a PL coordinate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Block {
    Trivial,
    Standard,
    Complement,
}

#[derive(Debug, Clone)]
pub struct IrrepProjectors {
    d: usize,
    n: usize,
    blocks: Vec<Block>,
    pub pi_i: RMatrix,
    pub pi_0: RMatrix,
    pub pi_plus: RMatrix,
}

impl IrrepProjectors {
    /// Coordinate projectors in the Weyl-ordered PL basis: `W_0`, the
    /// non-identity diagonal words, and the rest.
    pub fn new(basis: &WeylBasis) -> Self {
        let len = basis.len();
        let blocks: Vec<Block> = (0..len)
            .map(|k| {
                if k == 0 {
                    Block::Trivial
                } else if basis.is_diagonal(k) {
                    Block::Standard
                } else {
                    Block::Complement
                }
            })
            .collect();
        let proj = |b: Block| RMatrix::from_fn(len, len, |i, j| if i == j && blocks[i] == b { 1.0 } else { 0.0 });
        Self {
            d: basis.local_dim(),
            n: basis.qudits(),
            pi_i: proj(Block::Trivial),
            pi_0: proj(Block::Standard),
            pi_plus: proj(Block::Complement),
            blocks,
        }
    }

    pub fn build(d: usize, n: usize) -> Result<Self> {
        Ok(Self::new(&WeylBasis::new(d, n)?))
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn qudits(&self) -> usize {
        self.n
    }

    /// Hilbert-space dimension `D`.
    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn all(&self) -> [&RMatrix; 3] {
        [&self.pi_i, &self.pi_0, &self.pi_plus]
    }

    /// `(1, D − 1, D² − D)`.
    pub fn dims(&self) -> [usize; 3] {
        let d = self.dim();
        [1, d - 1, d * d - d]
    }

    /// `‖Π_ϖ v‖` for a PL-coordinate vector.
    pub fn norms(&self, pl_vector: &CVector) -> [f64; 3] {
        self.all().map(|p| {
            p.iter()
                .step_by(p.nrows() + 1)
                .zip(pl_vector.iter())
                .map(|(w, z)| w * z.norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
    }
}

/// `‖Π_ϖ |ρ⟩⟩‖` for a density matrix, computed in the PL basis.
pub fn state_projections(projectors: &IrrepProjectors, basis: &WeylBasis, rho: &CMatrix) -> [f64; 3] {
    let v = basis.transform() * crate::quantum_core::vectorise(rho);
    projectors.norms(&v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwirledChannel {
    pub eta_i: f64,
    pub eta_0: f64,
    pub eta_plus: f64,
}

impl TwirledChannel {
    pub fn as_array(&self) -> [f64; 3] {
        [self.eta_i, self.eta_0, self.eta_plus]
    }

    /// `η_I Π_I + η_0 Π_0 + η_+ Π_+` as a PL matrix.
    pub fn pl_matrix(&self, p: &IrrepProjectors) -> CMatrix {
        let r = &p.pi_i * self.eta_i + &p.pi_0 * self.eta_0 + &p.pi_plus * self.eta_plus;
        r.map(|x| Complex64::new(x, 0.0))
    }
}

/// `η_ϖ = Re tr(ℰ Π_ϖ) / dim_ϖ` for a PL-basis channel matrix.
pub fn twirl_pl(pl: &CMatrix, projectors: &IrrepProjectors) -> Result<TwirledChannel> {
    let len = projectors.blocks.len();
    if pl.nrows() != len || pl.ncols() != len {
        return Err(Error::DimensionMismatch(format!(
            "PL matrix {}×{} for {len} basis elements",
            pl.nrows(),
            pl.ncols()
        )));
    }
    let mut sums = [0.0; 3];
    for (k, b) in projectors.blocks.iter().enumerate() {
        let slot = match b {
            Block::Trivial => 0,
            Block::Standard => 1,
            Block::Complement => 2,
        };
        sums[slot] += pl[(k, k)].re;
    }
    let dims = projectors.dims();
    Ok(TwirledChannel {
        eta_i: sums[0] / dims[0] as f64,
        eta_0: sums[1] / dims[1] as f64,
        eta_plus: sums[2] / dims[2] as f64,
    })
}

/// Twirl of a column-stacked channel.
pub fn twirl(channel: &Superoperator, basis: &WeylBasis, projectors: &IrrepProjectors) -> Result<TwirledChannel> {
    if channel.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}-level channel, {}-level basis",
            channel.dim(),
            basis.dim()
        )));
    }
    twirl_pl(&channel.pauli_liouville(basis), projectors)
}

/// `F = [D(η_I + (D−1)η_0 + (D²−D)η_+) + D²] / (D²(D+1))`.
pub fn agf_from_eta(t: &TwirledChannel, dim: usize) -> f64 {
    let d = dim as f64;
    (d * (t.eta_i + (d - 1.0) * t.eta_0 + (d * d - d) * t.eta_plus) + d * d) / (d * d * (d + 1.0))
}

/// PL matrix `Γ(g)` of a monomial unitary. The column-stacked
/// superoperator `Ū ⊗ U` is itself monomial, so `U_PL (Ū ⊗ U)` is a
/// permutation of phased columns of `U_PL`.
pub fn pl_of_monomial(m: &MonomialMatrix, basis: &WeylBasis) -> CMatrix {
    let d = m.dim();
    let u = basis.transform();
    let dense = m.to_dense();
    let phase: Vec<Complex64> = (0..d).map(|i| dense[(m.perm().apply(i), i)]).collect();
    let mut us = CMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let col = i + j * d;
            let row = m.perm().apply(i) + m.perm().apply(j) * d;
            let ph = phase[i] * phase[j].conj();
            for k in 0..d * d {
                us[(k, col)] = u[(k, row)] * ph;
            }
        }
    }
    us * u.adjoint()
}

/// Largest entry of `Γ Π − Π Γ` over the three projectors. The projectors
/// are diagonal in the Weyl basis, so `(ΓΠ − ΠΓ)_{ij} = Γ_{ij}(π_j − π_i)`.
pub fn commutator_norm(gamma: &CMatrix, projectors: &IrrepProjectors) -> f64 {
    let mut worst: f64 = 0.0;
    for p in projectors.all() {
        for j in 0..gamma.ncols() {
            for i in 0..gamma.nrows() {
                let c = gamma[(i, j)] * (p[(j, j)] - p[(i, i)]);
                worst = worst.max(c.norm());
            }
        }
    }
    worst
}

/// Explicit group average `(1/|G|) Σ_g Γ(g)† ℰ Γ(g)` over every element.
pub fn group_average_twirl(pl: &CMatrix, set: &GateSet, basis: &WeylBasis) -> Result<CMatrix> {
    let elements = set.elements()?;
    let mut acc = CMatrix::zeros(pl.nrows(), pl.ncols());
    for g in &elements {
        let gamma = pl_of_monomial(&set.monomial(g), basis);
        acc += gamma.adjoint() * pl * &gamma;
    }
    Ok(acc / Complex64::new(elements.len() as f64, 0.0))
}

/// Character projector `(dim_ϖ/|G|) Σ_g χ_ϖ(g)* Γ(g)` for a block, with
/// `χ_I = 1`, `χ_0(σ) = f_σ − 1` and `χ_+ = |tr γ|² − f_σ`.
pub fn character_projector(block: Block, set: &GateSet, basis: &WeylBasis) -> Result<CMatrix> {
    let d = set.dim();
    let dim_block = match block {
        Block::Trivial => 1.0,
        Block::Standard => (d - 1) as f64,
        Block::Complement => (d * d - d) as f64,
    };
    let elements = set.elements()?;
    let mut acc = CMatrix::zeros(d * d, d * d);
    for g in &elements {
        let m = set.monomial(g);
        let f = g.sigma.fixed_points() as f64;
        let chi = match block {
            Block::Trivial => 1.0,
            Block::Standard => f - 1.0,
            Block::Complement => m.to_dense().trace().norm_sqr() - f,
        };
        acc += pl_of_monomial(&m, basis) * Complex64::new(chi, 0.0);
    }
    Ok(acc * Complex64::new(dim_block / elements.len() as f64, 0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaRow {
    pub sigma: String,
    pub fixed_points: usize,
    /// Exact average over `α` of `χ_Γ(σ, α)²`.
    pub average: i64,
    /// The same average by direct summation in floating point.
    pub average_float: f64,
    /// `f (2f − 1)`.
    pub expected: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BellRow {
    pub r: usize,
    /// Sum over integer partitions `λ ⊢ r` of `c(λ,1)^r / z_λ`.
    pub partition_sum: String,
    /// Count of set partitions of `r` labelled points.
    pub set_partitions: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterReport {
    pub d: usize,
    pub group_order: String,
    pub per_sigma: Vec<SigmaRow>,
    /// Exact group average of `|χ_Γ|²`.
    pub group_average: String,
    pub group_average_float: f64,
    pub bell: Vec<BellRow>,
    /// `2 B_2 − B_1`.
    pub bell_combination: i64,
}

impl CharacterReport {
    pub fn passed(&self) -> bool {
        let rows_ok = self
            .per_sigma
            .iter()
            .all(|r| r.average == r.expected && (r.average_float - r.expected as f64).abs() < 1e-9);
        let bell_ok = self.bell.iter().all(|b| b.partition_sum == b.set_partitions.to_string());
        rows_ok
            && bell_ok
            && self.group_average == "3"
            && (self.group_average_float - 3.0).abs() < 1e-9
            && self.bell_combination == 3
    }
}

/// Exact `E_α |tr γ(σ, α)|⁴`: the number of fixed-point quadruples
/// `(i, j, u, v)` whose character `e_i − e_j + e_u − e_v` is trivial on the
/// diagonal subgroup.
pub fn exact_sigma_average(set: &GateSet, sigma: &Permutation) -> i64 {
    let fixed: Vec<usize> = (0..set.dim()).filter(|&i| sigma.apply(i) == i).collect();
    let o = set.phase_order() as i64;
    let gens = &set.generators().vectors;
    let mut count = 0;
    for &i in &fixed {
        for &j in &fixed {
            for &u in &fixed {
                for &v in &fixed {
                    let trivial = gens.iter().all(|g| {
                        let e = g.entries();
                        let s = e[i] as i64 - e[j] as i64 + e[u] as i64 - e[v] as i64;
                        s.rem_euclid(o) == 0
                    });
                    if trivial {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

fn sigma_average_float(set: &GateSet, sigma: &Permutation, alphas: &[Vec<u64>]) -> f64 {
    let fixed: Vec<usize> = (0..set.dim()).filter(|&i| sigma.apply(i) == i).collect();
    let o = set.phase_order();
    let sum: f64 = alphas
        .iter()
        .map(|a| {
            let e = set.diagonal_exponents(a);
            let tr: Complex64 = fixed
                .iter()
                .map(|&i| Complex64::from_polar(1.0, std::f64::consts::TAU * e[i] as f64 / o as f64))
                .sum();
            tr.norm_sqr().powi(2)
        })
        .sum();
    sum / alphas.len() as f64
}

/// Integer partitions of `r`, parts in decreasing order.
pub fn integer_partitions(r: usize) -> Vec<Vec<usize>> {
    fn go(r: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if r == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=max.min(r)).rev() {
            prefix.push(part);
            go(r - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(r, r, &mut Vec::new(), &mut out);
    out
}

/// `Σ_{λ ⊢ r} c(λ,1)^r / ∏_l l^{c(λ,l)} c(λ,l)!`.
pub fn bell_partition_sum(r: usize) -> Ratio<i128> {
    integer_partitions(r)
        .iter()
        .map(|lambda| {
            let mut z: i128 = 1;
            for l in 1..=r {
                let c = lambda.iter().filter(|&&p| p == l).count() as u32;
                let fact: i128 = (1..=c as i128).product();
                z *= (l as i128).pow(c) * fact;
            }
            let f = lambda.iter().filter(|&&p| p == 1).count() as i128;
            Ratio::new(f.pow(r as u32), z)
        })
        .sum()
}

/// Number of set partitions of `r` points, by enumerating restricted growth
/// strings.
pub fn count_set_partitions(r: usize) -> u64 {
    fn go(pos: usize, r: usize, max: usize) -> u64 {
        if pos == r {
            return 1;
        }
        (0..=max + 1).map(|b| go(pos + 1, r, max.max(b))).sum()
    }
    if r == 0 {
        return 1;
    }
    go(1, r, 0)
}

pub fn character_suite(set: &GateSet) -> Result<CharacterReport> {
    let alphas = set.alphas();
    if alphas.len() as u128 * (1..=set.dim() as u128).product::<u128>() > crate::gateset::ENUMERATION_LIMIT {
        return Err(Error::GroupTooLarge(set.group_order()));
    }
    let perms = Permutation::all(set.dim());
    let mut per_sigma = Vec::with_capacity(perms.len());
    let mut total = 0i64;
    let mut total_float = 0.0;
    for sigma in &perms {
        let f = sigma.fixed_points() as i64;
        let average = exact_sigma_average(set, sigma);
        let average_float = sigma_average_float(set, sigma, &alphas);
        total += average;
        total_float += average_float;
        per_sigma.push(SigmaRow {
            sigma: sigma.to_string(),
            fixed_points: f as usize,
            average,
            average_float,
            expected: f * (2 * f - 1),
        });
    }
    let group_average = Ratio::new(total, perms.len() as i64);
    let bell: Vec<BellRow> = (1..=6)
        .map(|r| BellRow {
            r,
            partition_sum: bell_partition_sum(r).to_string(),
            set_partitions: count_set_partitions(r),
        })
        .collect();
    let b = |r: usize| count_set_partitions(r) as i64;
    Ok(CharacterReport {
        d: set.dim(),
        group_order: set.group_order().to_string(),
        per_sigma,
        group_average: group_average.to_string(),
        group_average_float: total_float / perms.len() as f64,
        bell,
        bell_combination: 2 * b(2) - b(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateset::Mode;
    use crate::quantum_core::{DensityMatrix, NoiseModel};

    #[test]
    fn projector_traces() {
        for (d, dims) in [(3, [1.0, 2.0, 6.0]), (2, [1.0, 1.0, 2.0])] {
            let p = IrrepProjectors::build(d, 1).unwrap();
            let traces = p.all().map(|m| m.trace());
            assert_eq!(traces, dims);
        }
    }

    #[test]
    fn depolarizing_twirl() {
        let basis = WeylBasis::new(3, 1).unwrap();
        let proj = IrrepProjectors::new(&basis);
        let t = twirl(&NoiseModel::Depolarizing { p: 0.2 }.superoperator(3).unwrap(), &basis, &proj).unwrap();
        assert!((t.eta_i - 1.0).abs() < 1e-12);
        assert!((t.eta_0 - 0.8).abs() < 1e-12);
        assert!((t.eta_plus - 0.8).abs() < 1e-12);
        let full = twirl(&NoiseModel::Depolarizing { p: 1.0 }.superoperator(3).unwrap(), &basis, &proj).unwrap();
        assert!((agf_from_eta(&full, 3) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_and_plus_projections() {
        let basis = WeylBasis::new(3, 1).unwrap();
        let proj = IrrepProjectors::new(&basis);
        let zero = state_projections(&proj, &basis, DensityMatrix::basis(3, 0).matrix());
        assert!(zero[2] < 1e-12 && zero[1] > 0.1);
        let plus = state_projections(&proj, &basis, DensityMatrix::plus(3).matrix());
        assert!(plus[1] < 1e-12 && plus[2] > 0.1);
        let mixed = state_projections(&proj, &basis, DensityMatrix::maximally_mixed(3).matrix());
        assert!(mixed[1] < 1e-12 && mixed[2] < 1e-12);
    }

    #[test]
    fn monomial_pl_matches_dense_route() {
        let basis = WeylBasis::new(3, 1).unwrap();
        let set = GateSet::build(3, Mode::Maximal).unwrap();
        let g = set.sample_uniform(5);
        let m = set.monomial(&g);
        let fast = pl_of_monomial(&m, &basis);
        let slow = Superoperator::unitary(&m.to_dense()).pauli_liouville(&basis);
        assert!((fast - slow).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn bell_numbers() {
        let expected = [1u64, 2, 5, 15, 52, 203];
        for (r, b) in (1..=6).zip(expected) {
            assert_eq!(count_set_partitions(r), b);
            assert_eq!(bell_partition_sum(r), Ratio::from_integer(b as i128));
        }
    }

    #[test]
    fn qutrit_identity_class() {
        let set = GateSet::build(3, Mode::Minimal).unwrap();
        assert_eq!(exact_sigma_average(&set, &Permutation::identity(3)), 15);
        let report = character_suite(&set).unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
