//! Randomised-benchmarking simulation: random gate sequences closed by their
//! inversion gate, gate-independent noise after every gate, and finite-shot
//! estimates of the survival probability.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateset::{GateSet, GroupElement, Mode, MonomialMatrix};
use crate::quantum_core::{CMatrix, CVector, DensityMatrix, NoiseModel, Superoperator, WeylBasis};
use crate::twirl::{self, IrrepProjectors, TwirledChannel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    #[default]
    Zero,
    Plus,
}

impl std::fmt::Display for InitialState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialState::Zero => write!(f, "zero"),
            InitialState::Plus => write!(f, "plus"),
        }
    }
}

impl std::str::FromStr for InitialState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitialState::Zero),
            "plus" => Ok(InitialState::Plus),
            other => Err(Error::Parse(format!("unknown initial state '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    #[default]
    ExactCircuit,
    TwirlPower,
}

impl std::fmt::Display for SimulationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimulationMode::ExactCircuit => write!(f, "exact_circuit"),
            SimulationMode::TwirlPower => write!(f, "twirl_power"),
        }
    }
}

impl std::str::FromStr for SimulationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_circuit" => Ok(SimulationMode::ExactCircuit),
            "twirl_power" => Ok(SimulationMode::TwirlPower),
            other => Err(Error::Parse(format!("unknown simulation mode '{other}'"))),
        }
    }
}

/// Default depths: multiples of five up to 100.
pub fn default_depths() -> Vec<usize> {
    (1..=20).map(|k| 5 * k).collect()
}

fn default_variance_circuits() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dimension: usize,
    #[serde(default)]
    pub gateset_mode: Mode,
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    pub shots: u64,
    pub circuits: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial_state: InitialState,
    pub noise: NoiseModel,
    #[serde(default)]
    pub mode: SimulationMode,
    /// Extra channel applied just before measurement.
    #[serde(default)]
    pub spam: Option<NoiseModel>,
    /// Circuits used to estimate the spread in twirl-power mode.
    #[serde(default = "default_variance_circuits")]
    pub variance_circuits: usize,
}

impl ExperimentConfig {
    pub fn new(dimension: usize, noise: NoiseModel) -> Self {
        Self {
            dimension,
            gateset_mode: Mode::Maximal,
            depths: default_depths(),
            shots: 100,
            circuits: 100,
            seed: 0,
            initial_state: InitialState::Zero,
            noise,
            mode: SimulationMode::ExactCircuit,
            spam: None,
            variance_circuits: default_variance_circuits(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() {
            return Err(Error::Config("depths must not be empty".into()));
        }
        if self.depths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("depths must be strictly increasing".into()));
        }
        if self.shots == 0 || self.circuits == 0 {
            return Err(Error::Config("shots and circuits must be at least 1".into()));
        }
        if self.mode == SimulationMode::TwirlPower && self.variance_circuits < 2 {
            return Err(Error::Config("variance_circuits must be at least 2".into()));
        }
        self.noise.validate()?;
        if let Some(s) = &self.spam {
            s.validate()?;
        }
        Ok(())
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SHOT_STREAM: u64 = 0x5348_4f54;
const VARIANCE_STREAM: u64 = 0x5641_5249;

/// Seed derived from a master seed and a list of indices.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master), |h, &p| mix(h ^ mix(p)))
}

/// Precomputed data for one experiment.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: ExperimentConfig,
    set: GateSet,
    noise: Superoperator,
    spam: Option<Superoperator>,
    rho0: CVector,
    phases: Vec<Complex64>,
    coefficients: [f64; 3],
    twirled: TwirledChannel,
}

impl Simulator {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let set = GateSet::build(config.dimension, config.gateset_mode)?;
        let d = config.dimension;
        let noise = config.noise.superoperator(d)?;
        let spam = config.spam.as_ref().map(|s| s.superoperator(d)).transpose()?;
        let rho0 = match config.initial_state {
            InitialState::Zero => DensityMatrix::basis(d, 0),
            InitialState::Plus => DensityMatrix::plus(d),
        }
        .vectorise();
        let o = set.phase_order();
        let phases = (0..o)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / o as f64))
            .collect();

        let basis = WeylBasis::new(d, 1)?;
        let proj = IrrepProjectors::new(&basis);
        let twirled = twirl::twirl(&noise, &basis, &proj)?;
        // ⟨⟨ψ| S ℰ Π_ϖ |ψ⟩⟩ in the PL basis
        let last = match &spam {
            Some(s) => noise.then(s),
            None => noise.clone(),
        };
        let pl = last.pauli_liouville(&basis);
        let psi = basis.transform() * &rho0;
        let coefficients = proj.all().map(|p| {
            let projected = CVector::from_fn(psi.len(), |i, _| psi[i] * p[(i, i)]);
            (psi.adjoint() * &pl * projected)[(0, 0)].re
        });
        Ok(Self {
            config,
            set,
            noise,
            spam,
            rho0,
            phases,
            coefficients,
            twirled,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn gateset(&self) -> &GateSet {
        &self.set
    }

    pub fn twirled(&self) -> TwirledChannel {
        self.twirled
    }

    /// `⟨⟨ψ| S ℰ Π_ϖ |ψ⟩⟩` for `ϖ = I, 0, +`.
    pub fn decay_coefficients(&self) -> [f64; 3] {
        self.coefficients
    }

    /// `Σ_ϖ ⟨⟨ψ| S ℰ Π_ϖ |ψ⟩⟩ η_ϖ^m`.
    pub fn theoretical_decay(&self, m: usize) -> f64 {
        self.coefficients
            .iter()
            .zip(self.twirled.as_array())
            .map(|(c, eta)| c * eta.powi(m as i32))
            .sum()
    }

    fn conjugate(&self, m: &MonomialMatrix, input: &[Complex64], output: &mut [Complex64]) {
        let d = m.dim();
        let perm = m.perm();
        let e = m.exponents();
        for j in 0..d {
            let sj = perm.apply(j);
            let pj = self.phases[e[j] as usize].conj();
            for i in 0..d {
                let si = perm.apply(i);
                output[si + sj * d] = self.phases[e[i] as usize] * pj * input[i + j * d];
            }
        }
    }

    /// Survival probability of one circuit (gates in application order),
    /// closed by its inversion gate.
    pub fn exact_survival(&self, circuit: &[GroupElement]) -> Result<f64> {
        let monomials: Vec<MonomialMatrix> = circuit.iter().map(|g| self.set.monomial(g)).collect();
        Ok(self.survival_of_monomials(&monomials))
    }

    fn survival_of_monomials(&self, gates: &[MonomialMatrix]) -> f64 {
        let d = self.config.dimension;
        let mut total = MonomialMatrix::identity(d, self.set.phase_order());
        for g in gates {
            total = g.mul(&total);
        }
        let inv = total.inverse();
        let mut v = self.rho0.clone();
        let mut w = CVector::zeros(d * d);
        for g in gates.iter().chain(std::iter::once(&inv)) {
            self.conjugate(g, v.as_slice(), w.as_mut_slice());
            v.gemv(Complex64::new(1.0, 0.0), self.noise.matrix(), &w, Complex64::new(0.0, 0.0));
        }
        if let Some(s) = &self.spam {
            w.gemv(Complex64::new(1.0, 0.0), s.matrix(), &v, Complex64::new(0.0, 0.0));
            std::mem::swap(&mut v, &mut w);
        }
        let p: Complex64 = self.rho0.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
        p.re.clamp(0.0, 1.0)
    }

    fn random_gates<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Vec<MonomialMatrix> {
        (0..m).map(|_| self.set.monomial(&self.set.sample(rng))).collect()
    }

    /// Random circuit of depth `m`, its inversion element and exact survival.
    pub fn sample_circuit(&self, seed: u64, m: usize) -> Result<(Vec<GroupElement>, GroupElement, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gates: Vec<GroupElement> = (0..m).map(|_| self.set.sample(&mut rng)).collect();
        let inv = self.set.invert_sequence(&gates)?;
        let p = self.exact_survival(&gates)?;
        Ok((gates, inv, p))
    }

    /// Exact survival probabilities of `count` random circuits of depth `m`;
    /// circuit `c` is seeded from `(seed, depth_index, c)`.
    pub fn circuit_probabilities(&self, seed: u64, depth_index: usize, m: usize, count: usize, parallel: bool) -> Vec<f64> {
        let job = |c: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[depth_index as u64, c as u64]));
            let gates = self.random_gates(&mut rng, m);
            self.survival_of_monomials(&gates)
        };
        if parallel {
            (0..count).into_par_iter().map(job).collect()
        } else {
            (0..count).map(job).collect()
        }
    }

    /// Finite-shot frequencies `Binomial(shots, p) / shots`, one per circuit.
    pub fn sample_frequencies(&self, seed: u64, depth_index: usize, probabilities: &[f64], shots: u64) -> Vec<f64> {
        probabilities
            .iter()
            .enumerate()
            .map(|(c, &p)| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[SHOT_STREAM, depth_index as u64, c as u64]));
                let hits = Binomial::new(shots, p.clamp(0.0, 1.0)).expect("valid binomial").sample(&mut rng);
                hits as f64 / shots as f64
            })
            .collect()
    }

    /// Runs every depth with `seed` as the master seed.
    pub fn run_with_seed(&self, seed: u64, parallel: bool) -> RbRun {
        let r = self.config.circuits;
        let records = self
            .config
            .depths
            .iter()
            .enumerate()
            .map(|(di, &m)| {
                let probabilities = match self.config.mode {
                    SimulationMode::ExactCircuit => self.circuit_probabilities(seed, di, m, r, parallel),
                    SimulationMode::TwirlPower => self.twirl_power_probabilities(seed, di, m, parallel),
                };
                DepthRecord::new(m, self.sample_frequencies(seed, di, &probabilities, self.config.shots))
            })
            .collect();
        RbRun {
            config: ExperimentConfig {
                seed,
                ..self.config.clone()
            },
            records,
        }
    }

    /// Twirl-power mode: per-circuit fidelities drawn from a normal
    /// distribution around the twirl prediction, with the spread measured
    /// from exact circuits.
    fn twirl_power_probabilities(&self, seed: u64, di: usize, m: usize, parallel: bool) -> Vec<f64> {
        let n = self.config.variance_circuits;
        let samples = self.circuit_probabilities(derive_seed(seed, &[VARIANCE_STREAM]), di, m, n, parallel);
        let mean_probe = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean_probe).powi(2)).sum::<f64>() / (n - 1) as f64;
        let normal = Normal::new(self.theoretical_decay(m), var.sqrt()).expect("finite spread");
        (0..self.config.circuits)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[di as u64, c as u64]));
                normal.sample(&mut rng).clamp(0.0, 1.0)
            })
            .collect()
    }

    pub fn run(&self) -> RbRun {
        self.run_with_seed(self.config.seed, true)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RbRun> {
    Ok(Simulator::new(config.clone())?.run())
}

/// Exact average of the survival probability over every depth-one circuit.
pub fn exhaustive_depth_one(sim: &Simulator) -> Result<f64> {
    let elements = sim.set.elements()?;
    let total: f64 = elements
        .iter()
        .map(|g| sim.survival_of_monomials(&[sim.set.monomial(g)]))
        .sum();
    Ok(total / elements.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRecord {
    pub depth: usize,
    pub mean: f64,
    pub frequencies: Vec<f64>,
}

impl DepthRecord {
    pub fn new(depth: usize, frequencies: Vec<f64>) -> Self {
        let mean = frequencies.iter().sum::<f64>() / frequencies.len().max(1) as f64;
        Self {
            depth,
            mean,
            frequencies,
        }
    }
}

/// One simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RbRun {
    pub config: ExperimentConfig,
    pub records: Vec<DepthRecord>,
}

impl RbRun {
    pub fn depths(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.depth).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean).collect()
    }

    /// CSV with a `# key=value` metadata header.
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let noise = serde_json::to_string(&c.noise).expect("noise serialises");
        let _ = writeln!(out, "# dimension={}", c.dimension);
        let _ = writeln!(out, "# gateset_mode={}", c.gateset_mode);
        let _ = writeln!(out, "# shots={}", c.shots);
        let _ = writeln!(out, "# circuits={}", c.circuits);
        let _ = writeln!(out, "# seed={}", c.seed);
        let _ = writeln!(out, "# initial_state={}", c.initial_state);
        let _ = writeln!(out, "# mode={}", c.mode);
        let _ = writeln!(out, "# noise={noise}");
        if let Some(s) = &c.spam {
            let _ = writeln!(out, "# spam={}", serde_json::to_string(s).expect("noise serialises"));
        }
        out.push_str("depth,circuit_index,survival_frequency\n");
        for r in &self.records {
            for (i, f) in r.frequencies.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", r.depth, i, f);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Parses the CSV written by [`RbRun::to_csv`]. Missing metadata falls
    /// back to defaults; rows may appear in any order.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut config = ExperimentConfig::new(2, NoiseModel::Identity);
        let mut rows: Vec<(usize, usize, f64)> = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let at = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((key, value)) = meta.trim().split_once('=') else {
                    continue;
                };
                let value = value.trim();
                let num = |v: &str| v.parse::<u64>().map_err(|e| at(format!("{key}: {e}")));
                match key.trim() {
                    "dimension" => config.dimension = num(value)? as usize,
                    "gateset_mode" => config.gateset_mode = value.parse().map_err(|e: Error| at(e.to_string()))?,
                    "shots" => config.shots = num(value)?,
                    "circuits" => config.circuits = num(value)? as usize,
                    "seed" => config.seed = num(value)?,
                    "initial_state" => config.initial_state = value.parse().map_err(|e: Error| at(e.to_string()))?,
                    "mode" => config.mode = value.parse().map_err(|e: Error| at(e.to_string()))?,
                    "noise" => config.noise = serde_json::from_str(value).map_err(|e| at(e.to_string()))?,
                    "spam" => config.spam = Some(serde_json::from_str(value).map_err(|e| at(e.to_string()))?),
                    _ => {}
                }
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["depth", "circuit_index", "survival_frequency"] {
                    return Err(at(format!("unexpected header '{line}'")));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(at(format!("expected 3 fields, found {}", fields.len())));
            }
            let depth = fields[0].parse::<usize>().map_err(|e| at(format!("depth: {e}")))?;
            let idx = fields[1].parse::<usize>().map_err(|e| at(format!("circuit_index: {e}")))?;
            let f = fields[2].parse::<f64>().map_err(|e| at(format!("survival_frequency: {e}")))?;
            if !(0.0..=1.0).contains(&f) {
                return Err(at(format!("frequency {f} outside [0, 1]")));
            }
            rows.push((depth, idx, f));
        }
        if !header_seen {
            return Err(Error::Parse("missing CSV header".into()));
        }
        rows.sort_by_key(|a| (a.0, a.1));
        let mut records: Vec<DepthRecord> = Vec::new();
        for chunk in rows.chunk_by(|a, b| a.0 == b.0) {
            records.push(DepthRecord::new(chunk[0].0, chunk.iter().map(|r| r.2).collect()));
        }
        config.depths = records.iter().map(|r| r.depth).collect();
        Ok(Self { config, records })
    }
}

/// Dense-matrix survival probability, used as an independent check.
pub fn dense_survival(set: &GateSet, noise: &Superoperator, rho0: &CMatrix, circuit: &[GroupElement]) -> Result<f64> {
    let inv = set.invert_sequence(circuit)?;
    let mut v = crate::quantum_core::vectorise(rho0);
    for g in circuit.iter().chain(std::iter::once(&inv)) {
        let u = Superoperator::unitary(set.representative(g)?.matrix());
        v = noise.matrix() * (u.matrix() * v);
    }
    Ok((rho0.adjoint() * crate::quantum_core::unvectorise(&v)?).trace().re)
}
