//! Dense complex linear algebra for states and channels: column-stacked
//! vectorisation, the Weyl basis, Kraus sets, superoperators, the
//! Pauli–Liouville representation, noise models and average gate fidelity.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance for exact algebraic identities.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for CPTP checks.
pub const CPTP_TOL: f64 = 1e-10;
/// Largest Hilbert-space dimension accepted by the channel routines.
pub const MAX_DIM: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Shift `X|i⟩ = |i+1 mod d⟩`.
pub fn shift_matrix(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[((i + 1) % d, i)] = ONE;
    }
    m
}

/// Clock `Z|i⟩ = ω_d^i |i⟩`.
pub fn clock_matrix(d: usize) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_fn(d, |i, _| {
        Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / d as f64)
    }))
}

/// Column-stacked `|ρ⟩⟩`.
pub fn vectorise(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorise(v: &CVector) -> Result<CMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} is not a vectorised square matrix",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(d, d, v.as_slice()))
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        if max_abs(&(&m - m.adjoint())) > EXACT_TOL {
            return Err(Error::InvalidParameter("density matrix is not hermitian".into()));
        }
        if (m.trace() - ONE).norm() > EXACT_TOL {
            return Err(Error::InvalidParameter("density matrix trace is not one".into()));
        }
        let min = m.clone().symmetric_eigen().eigenvalues.min();
        if min < -CPTP_TOL {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let psi = psi / Complex64::new(norm, 0.0);
        Self::new(&psi * psi.adjoint())
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = ONE;
        Self(m)
    }

    /// `|+⟩⟨+|` on `dim` levels, `|+⟩ = F|0⟩`.
    pub fn plus(dim: usize) -> Self {
        Self(CMatrix::from_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn vectorise(&self) -> CVector {
        vectorise(&self.0)
    }
}

/// Haar-random pure state vector.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

#[derive(Debug, Clone)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
}

impl KrausSet {
    /// Checks `Σ A†A = I` within `tol`.
    pub fn new(ops: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidParameter("empty Kraus set".into()));
        };
        let d = first.nrows();
        if ops.iter().any(|a| a.nrows() != d || a.ncols() != d) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let sum = ops.iter().fold(CMatrix::zeros(d, d), |acc, a| acc + a.adjoint() * a);
        let dev = max_abs(&(sum - CMatrix::identity(d, d)));
        if dev > tol {
            return Err(Error::InvalidParameter(format!(
                "Kraus completeness violated by {dev:e}"
            )));
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.ops
            .iter()
            .fold(CMatrix::zeros(rho.nrows(), rho.ncols()), |acc, a| acc + a * rho * a.adjoint())
    }

    /// `Σ Ā ⊗ A`, the column-stacked form of `ρ ↦ Σ AρA†`.
    pub fn to_superoperator(&self) -> Superoperator {
        let d = self.dim();
        let m = self
            .ops
            .iter()
            .fold(CMatrix::zeros(d * d, d * d), |acc, a| acc + a.conjugate().kronecker(a));
        Superoperator(m)
    }
}

/// Column-stacked superoperator, `D² × D²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator(CMatrix);

impl Superoperator {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        let d = (m.nrows() as f64).sqrt().round() as usize;
        if !m.is_square() || d * d != m.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} is not a superoperator shape",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim * dim, dim * dim))
    }

    pub fn unitary(u: &CMatrix) -> Self {
        Self(u.conjugate().kronecker(u))
    }

    pub fn from_kraus(k: &KrausSet) -> Self {
        k.to_superoperator()
    }

    /// Hilbert-space dimension `D`.
    pub fn dim(&self) -> usize {
        (self.0.nrows() as f64).sqrt().round() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.0.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "vectorised state of length {} for a {}-level channel",
                v.len(),
                self.dim()
            )));
        }
        Ok(&self.0 * v)
    }

    pub fn apply_to(&self, rho: &CMatrix) -> Result<CMatrix> {
        unvectorise(&self.apply(&vectorise(rho))?)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Superoperator) -> Superoperator {
        Superoperator(&next.0 * &self.0)
    }

    pub fn adjoint(&self) -> Superoperator {
        Superoperator(self.0.adjoint())
    }

    /// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim();
        let mut c = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                // column i + j d of the superoperator is vec(ℰ(|i⟩⟨j|))
                let col = self.0.column(i + j * d);
                for a in 0..d {
                    for b in 0..d {
                        c[(i * d + a, j * d + b)] = col[a + b * d];
                    }
                }
            }
        }
        c
    }

    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for col in 0..d * d {
            let t: Complex64 = (0..d).map(|i| self.0[(i + i * d, col)]).sum();
            let (a, b) = (col % d, col / d);
            let expected = if a == b { ONE } else { ZERO };
            worst = worst.max((t - expected).norm());
        }
        worst
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        let choi = self.choi();
        let herm = max_abs(&(&choi - choi.adjoint())) <= tol;
        herm && self.trace_preservation_error() <= tol
            && choi.symmetric_eigen().eigenvalues.min() >= -tol
    }

    /// Matrix in the orthonormal basis `{W_k / √D}`:
    /// `Γ_{ij} = tr(W_i† ℰ(W_j)) / D`.
    pub fn pauli_liouville(&self, basis: &WeylBasis) -> CMatrix {
        let u = basis.transform();
        u * &self.0 * u.adjoint()
    }

    pub fn from_pauli_liouville(pl: &CMatrix, basis: &WeylBasis) -> Self {
        let u = basis.transform();
        Self(u.adjoint() * pl * u)
    }
}

/// `F(ℰ, Ẽ) = (Re tr(ℰ†Ẽ) + D) / (D(D + 1))`.
pub fn average_gate_fidelity(ideal: &Superoperator, noisy: &Superoperator) -> Result<f64> {
    if ideal.0.shape() != noisy.0.shape() {
        return Err(Error::DimensionMismatch("channels act on different spaces".into()));
    }
    let d = ideal.dim() as f64;
    let overlap: Complex64 = ideal.0.iter().zip(noisy.0.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok((overlap.re + d) / (d * (d + 1.0)))
}

/// Weyl operators `W_{d i + j} = X^i Z^j`, extended lexicographically to `n`
/// qudits with site 0 most significant.
#[derive(Debug, Clone)]
pub struct WeylBasis {
    d: usize,
    n: usize,
    labels: Vec<Vec<(usize, usize)>>,
    ops: Vec<CMatrix>,
    transform: CMatrix,
}

impl WeylBasis {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d < 2 || n < 1 {
            return Err(Error::InvalidParameter(format!("no Weyl basis for d = {d}, n = {n}")));
        }
        let dim = d.pow(n as u32);
        if dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(format!("D = {dim} exceeds {MAX_DIM}")));
        }
        let x = shift_matrix(d);
        let z = clock_matrix(d);
        let single: Vec<CMatrix> = (0..d * d)
            .map(|k| x.pow((k / d) as u32) * z.pow((k % d) as u32))
            .collect();
        let mut labels = Vec::with_capacity(dim * dim);
        let mut ops = Vec::with_capacity(dim * dim);
        for k in 0..dim * dim {
            let mut rest = k;
            let mut sites = vec![0usize; n];
            for s in sites.iter_mut().rev() {
                *s = rest % (d * d);
                rest /= d * d;
            }
            labels.push(sites.iter().map(|&s| (s / d, s % d)).collect());
            ops.push(kron_all(&sites.iter().map(|&s| single[s].clone()).collect::<Vec<_>>()));
        }
        let scale = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        let mut transform = CMatrix::zeros(dim * dim, dim * dim);
        for (k, w) in ops.iter().enumerate() {
            for (col, z) in w.iter().enumerate() {
                transform[(k, col)] = z.conj() * scale;
            }
        }
        Ok(Self {
            d,
            n,
            labels,
            ops,
            transform,
        })
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn qudits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, k: usize) -> &CMatrix {
        &self.ops[k]
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// Per-site `(x power, z power)` of `W_k`.
    pub fn label(&self, k: usize) -> &[(usize, usize)] {
        &self.labels[k]
    }

    /// True when `W_k` is diagonal, i.e. has no shift factor on any site.
    pub fn is_diagonal(&self, k: usize) -> bool {
        self.labels[k].iter().all(|&(x, _)| x == 0)
    }

    /// Unitary with rows `vec(W_k)† / √D`.
    pub fn transform(&self) -> &CMatrix {
        &self.transform
    }
}

/// Noise channels used by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Identity,
    /// `ρ ↦ (1 − p)ρ + p I/D`.
    Depolarizing { p: f64 },
    /// Every level `j ≥ 1` decays to `j − 1` with probability `gamma`.
    AmplitudeDamping { gamma: f64 },
    /// Kraus `√(1−λ) I` and `√λ |j⟩⟨j|`.
    PhaseDamping { lambda: f64 },
    /// Applied in list order: the first entry acts first.
    Composite { channels: Vec<NoiseModel> },
    /// Seeded random channel of Kraus rank `rank`, mixed with the identity:
    /// `(1 − strength) id + strength ℰ_random`.
    RandomCptp {
        seed: u64,
        rank: usize,
        #[serde(default = "default_strength")]
        strength: f64,
    },
}

fn default_strength() -> f64 {
    1.0
}

fn unit_interval(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} outside [0, 1]")))
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Identity => Ok(()),
            NoiseModel::Depolarizing { p } => unit_interval("p", *p),
            NoiseModel::AmplitudeDamping { gamma } => unit_interval("gamma", *gamma),
            NoiseModel::PhaseDamping { lambda } => unit_interval("lambda", *lambda),
            NoiseModel::Composite { channels } => channels.iter().try_for_each(NoiseModel::validate),
            NoiseModel::RandomCptp { rank, strength, .. } => {
                if *rank == 0 {
                    return Err(Error::InvalidParameter("Kraus rank must be positive".into()));
                }
                unit_interval("strength", *strength)
            }
        }
    }

    pub fn kraus(&self, dim: usize) -> Result<KrausSet> {
        self.validate()?;
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(format!("D = {dim}")));
        }
        let ops = match self {
            NoiseModel::Identity => vec![CMatrix::identity(dim, dim)],
            NoiseModel::Depolarizing { p } => depolarizing_kraus(dim, *p),
            NoiseModel::AmplitudeDamping { gamma } => {
                let mut k0 = CMatrix::identity(dim, dim);
                for j in 1..dim {
                    k0[(j, j)] = Complex64::new((1.0 - gamma).sqrt(), 0.0);
                }
                let mut ops = vec![k0];
                for j in 1..dim {
                    let mut k = CMatrix::zeros(dim, dim);
                    k[(j - 1, j)] = Complex64::new(gamma.sqrt(), 0.0);
                    ops.push(k);
                }
                ops
            }
            NoiseModel::PhaseDamping { lambda } => {
                let mut ops = vec![CMatrix::identity(dim, dim) * Complex64::new((1.0 - lambda).sqrt(), 0.0)];
                for j in 0..dim {
                    let mut k = CMatrix::zeros(dim, dim);
                    k[(j, j)] = Complex64::new(lambda.sqrt(), 0.0);
                    ops.push(k);
                }
                ops
            }
            NoiseModel::Composite { channels } => {
                let mut ops = vec![CMatrix::identity(dim, dim)];
                for ch in channels {
                    let next = ch.kraus(dim)?;
                    ops = next
                        .ops()
                        .iter()
                        .flat_map(|b| ops.iter().map(move |a| b * a))
                        .collect();
                }
                ops
            }
            NoiseModel::RandomCptp { seed, rank, strength } => random_cptp_kraus(dim, *rank, *seed, *strength),
        };
        KrausSet::new(ops, CPTP_TOL)
    }

    pub fn superoperator(&self, dim: usize) -> Result<Superoperator> {
        match self {
            NoiseModel::Composite { channels } => {
                self.validate()?;
                channels
                    .iter()
                    .try_fold(Superoperator::identity(dim), |acc, ch| Ok(acc.then(&ch.superoperator(dim)?)))
            }
            _ => Ok(self.kraus(dim)?.to_superoperator()),
        }
    }

    /// Average gate fidelity of the channel with respect to the identity.
    pub fn fidelity(&self, dim: usize) -> Result<f64> {
        average_gate_fidelity(&Superoperator::identity(dim), &self.superoperator(dim)?)
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Identity => write!(f, "identity"),
            NoiseModel::Depolarizing { p } => write!(f, "depolarizing({p})"),
            NoiseModel::AmplitudeDamping { gamma } => write!(f, "amplitude_damping({gamma})"),
            NoiseModel::PhaseDamping { lambda } => write!(f, "phase_damping({lambda})"),
            NoiseModel::Composite { channels } => {
                let parts: Vec<String> = channels.iter().map(ToString::to_string).collect();
                write!(f, "composite[{}]", parts.join(" then "))
            }
            NoiseModel::RandomCptp { seed, rank, strength } => {
                write!(f, "random_cptp(seed={seed},rank={rank},strength={strength})")
            }
        }
    }
}

fn depolarizing_kraus(dim: usize, p: f64) -> Vec<CMatrix> {
    // Any unitary operator basis works; the Weyl operators of a single
    // D-level system are used regardless of how D factorises.
    let x = shift_matrix(dim);
    let z = clock_matrix(dim);
    let d2 = (dim * dim) as f64;
    let mut ops = Vec::with_capacity(dim * dim);
    for k in 0..dim * dim {
        let w = x.pow((k / dim) as u32) * z.pow((k % dim) as u32);
        let weight = if k == 0 { 1.0 - p + p / d2 } else { p / d2 };
        ops.push(w * Complex64::new(weight.sqrt(), 0.0));
    }
    ops
}

/// Random channel from a Haar-like Stinespring isometry `V: C^D → C^{D·rank}`
/// (QR of a complex Gaussian matrix); Kraus operators are the `rank` row
/// blocks of `V`. The result is mixed with the identity channel.
pub fn random_cptp_kraus(dim: usize, rank: usize, seed: u64, strength: f64) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(dim * rank, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let q = g.qr().q();
    let s = Complex64::new(strength.sqrt(), 0.0);
    let mut ops: Vec<CMatrix> = (0..rank)
        .map(|k| q.rows(k * dim, dim).into_owned() * s)
        .collect();
    if strength < 1.0 {
        ops.push(CMatrix::identity(dim, dim) * Complex64::new((1.0 - strength).sqrt(), 0.0));
    }
    ops
}

/// Finds `x ∈ [lo, hi]` with `fidelity(make(x)) = target` by bisection,
/// assuming the fidelity is monotone in `x`. Returns the parameter, the model
/// and its fidelity.
pub fn match_fidelity<F>(make: F, dim: usize, target: f64, lo: f64, hi: f64) -> Result<(f64, NoiseModel, f64)>
where
    F: Fn(f64) -> NoiseModel,
{
    let f_lo = make(lo).fidelity(dim)?;
    let f_hi = make(hi).fidelity(dim)?;
    if (f_lo - target) * (f_hi - target) > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "target fidelity {target} not bracketed by [{f_hi}, {f_lo}]"
        )));
    }
    let increasing = f_hi > f_lo;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        let f = make(mid).fidelity(dim)?;
        if (f < target) == increasing {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let model = make(x);
    let f = model.fidelity(dim)?;
    Ok((x, model, f))
}
