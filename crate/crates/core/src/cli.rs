//! Command-line front end. `run` returns the process exit code:
//! 0 on success, 1 for invalid input, 2 when a verification check fails.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, StudySettings, Strategy, DEFAULT_QUANTILES};
use crate::error::{Error, Result};
use crate::gateset::{self, GateSet, Mode, MultiQuditGateSet};
use crate::modring::{howell_form, ResidueMatrix};
use crate::quantum_core::{self, DensityMatrix, NoiseModel, Superoperator, WeylBasis};
use crate::rbsim::{default_depths, ExperimentConfig, InitialState, RbRun, SimulationMode, Simulator};
use crate::twirl::{self, IrrepProjectors};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qudit-rb", version, about = "Randomised benchmarking of diagonal qudit gates with the real hyperdihedral group")]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for Monte Carlo loops (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the group order, cyclic structure and generators.
    Gateset(GatesetArgs),
    /// Run the algebraic verification suite.
    Verify(VerifyArgs),
    /// Simulate an RB experiment for |0⟩ and |+⟩ from a TOML config.
    Simulate(SimulateArgs),
    /// Fit A + B η^m to an RB CSV.
    Fit(FitArgs),
    /// Confidence table of the fitted decay rate over a (shots, circuits) grid.
    Table(TableArgs),
    /// Compare depth strategies.
    Strategies(StrategiesArgs),
}

#[derive(Debug, Args)]
pub struct GatesetArgs {
    /// Qudit dimension (prime power).
    #[arg(long)]
    pub d: usize,
    /// maximal or minimal.
    #[arg(long, default_value = "maximal")]
    pub mode: Mode,
    /// Target phase exponents, comma separated (default: the qudit T gate).
    #[arg(long, value_delimiter = ',')]
    pub phases: Option<Vec<i64>>,
    /// Phase order of the target exponents (default: that of the T gate).
    #[arg(long)]
    pub order: Option<u64>,
    /// Also print every generator as a matrix.
    #[arg(long)]
    pub matrices: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Qudit dimension (prime power).
    #[arg(long)]
    pub d: usize,
    /// Number of qudits.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// RB CSV written by `simulate`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Noise model as JSON, e.g. '{"kind":"depolarizing","p":0.05}'.
    #[arg(long, conflicts_with = "random_fidelity")]
    pub noise: Option<String>,
    /// Use a seeded random channel mixed with the identity to reach this
    /// average gate fidelity.
    #[arg(long)]
    pub random_fidelity: Option<f64>,
    /// Seed of the random channel.
    #[arg(long, default_value_t = 2024)]
    pub channel_seed: u64,
    /// Kraus rank of the random channel.
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Fits per table cell.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Circuit depths, comma separated (default 5,10,..,100).
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    /// Quantile levels, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QUANTILES.to_vec())]
    pub quantiles: Vec<f64>,
    /// exact_circuit or twirl_power.
    #[arg(long, default_value = "exact_circuit")]
    pub sim_mode: SimulationMode,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub study: StudyArgs,
    /// Grid cells as SHOTSxCIRCUITS, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100x10,10x100,100x100")]
    pub grid: Vec<String>,
}

#[derive(Debug, Args)]
pub struct StrategiesArgs {
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub study: StudyArgs,
    #[arg(long, default_value_t = 100)]
    pub shots: u64,
    #[arg(long, default_value_t = 100)]
    pub circuits: usize,
}

/// `simulate` configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    #[serde(default)]
    pub gateset_mode: Mode,
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    pub shots: u64,
    pub circuits: usize,
    pub seed: Option<u64>,
    pub noise: NoiseModel,
    #[serde(default)]
    pub mode: SimulationMode,
    pub spam: Option<NoiseModel>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !gateset::is_prime_power(cfg.dimension) {
            return Err(Error::Config(format!("dimension {} is not a prime power", cfg.dimension)));
        }
        Ok(cfg)
    }

    pub fn experiment(&self, seed: u64, state: InitialState) -> ExperimentConfig {
        ExperimentConfig {
            dimension: self.dimension,
            gateset_mode: self.gateset_mode,
            depths: self.depths.clone(),
            shots: self.shots,
            circuits: self.circuits,
            seed,
            initial_state: state,
            noise: self.noise.clone(),
            mode: self.mode,
            spam: self.spam.clone(),
            variance_circuits: 100,
        }
    }
}

/// Parses arguments (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Gateset(a) => {
            print!("{}", gateset_report(a)?);
            Ok(EXIT_OK)
        }
        Command::Verify(a) => {
            let (report, ok) = verify_report(a.d, a.n, cli.seed)?;
            print!("{report}");
            Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Fit(a) => {
            let file = fs::File::open(&a.input)?;
            let run = RbRun::read_csv(BufReader::new(file))?;
            let fit = analysis::fit_run(&run)?;
            println!("{}", serde_json::to_string_pretty(&fit).expect("estimate serialises"));
            Ok(EXIT_OK)
        }
        Command::Table(a) => {
            let grid = a.grid.iter().map(|g| parse_cell(g)).collect::<Result<Vec<_>>>()?;
            let noise = resolve_noise(&a.noise, a.study.d)?;
            let settings = study_settings(&a.study, cli.seed);
            let rows = analysis::confidence_table(&noise, &grid, &settings)?;
            emit(&a.study.out, &analysis::table_csv(&rows))?;
            Ok(EXIT_OK)
        }
        Command::Strategies(a) => {
            let noise = match (&a.noise.noise, a.noise.random_fidelity) {
                (None, None) => analysis::strategy_noise(),
                _ => resolve_noise(&a.noise, a.study.d)?,
            };
            let settings = study_settings(&a.study, cli.seed);
            let strategies: Vec<Strategy> = match &a.study.depths {
                Some(d) => {
                    let mut s = analysis::standard_strategies();
                    s.push(Strategy::new("custom", d.clone()));
                    s
                }
                None => analysis::standard_strategies(),
            };
            let rows = analysis::strategy_comparison(&noise, &strategies, a.shots, a.circuits, &settings)?;
            emit(&a.study.out, &analysis::strategies_csv(&rows))?;
            Ok(EXIT_OK)
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_cell(text: &str) -> Result<(u64, usize)> {
    let (s, r) = text
        .trim()
        .split_once('x')
        .ok_or_else(|| Error::Parse(format!("grid cell '{text}' is not SHOTSxCIRCUITS")))?;
    let s = s.parse::<u64>().map_err(|e| Error::Parse(format!("{text}: {e}")))?;
    let r = r.parse::<usize>().map_err(|e| Error::Parse(format!("{text}: {e}")))?;
    if s == 0 || r == 0 {
        return Err(Error::Parse(format!("grid cell '{text}' must be positive")));
    }
    Ok((s, r))
}

fn resolve_noise(a: &NoiseArgs, d: usize) -> Result<NoiseModel> {
    match (&a.noise, a.random_fidelity) {
        (Some(json), _) => {
            let m: NoiseModel = serde_json::from_str(json).map_err(|e| Error::Parse(format!("noise: {e}")))?;
            m.validate()?;
            Ok(m)
        }
        (None, Some(f)) => {
            let (seed, rank) = (a.channel_seed, a.rank);
            let make = |s: f64| NoiseModel::RandomCptp { seed, rank, strength: s };
            Ok(quantum_core::match_fidelity(make, d, f, 0.0, 1.0)?.1)
        }
        (None, None) => Err(Error::InvalidParameter("give --noise or --random-fidelity".into())),
    }
}

fn study_settings(a: &StudyArgs, seed: u64) -> StudySettings {
    StudySettings {
        dimension: a.d,
        depths: a.depths.clone().unwrap_or_else(default_depths),
        repetitions: a.reps,
        quantiles: a.quantiles.clone(),
        seed,
        mode: a.sim_mode,
        ..StudySettings::default()
    }
}

/// Text dump of a gate set.
pub fn gateset_report(a: &GatesetArgs) -> Result<String> {
    let set = match (&a.phases, a.order) {
        (None, None) => GateSet::build(a.d, a.mode)?,
        (phases, order) => {
            let (default_phases, default_order) = gateset::default_target(a.d);
            let phases = phases
                .clone()
                .unwrap_or_else(|| default_phases.iter().map(|&p| p as i64).collect());
            GateSet::with_target(a.d, &phases, order.unwrap_or(default_order), a.mode)?
        }
    };
    let mut out = String::new();
    let orders: Vec<String> = set.cyclic_orders().iter().map(|k| format!("C{k}")).collect();
    let _ = writeln!(out, "dimension: {}", set.dim());
    let _ = writeln!(out, "mode: {}", set.mode());
    let _ = writeln!(out, "phase order: {}", set.phase_order());
    let _ = writeln!(out, "target exponents: {}", set.target());
    if a.d == 4 && a.phases.is_none() {
        let _ = writeln!(out, "target gate: diag(1, ω8) ⊗ I");
    }
    let _ = writeln!(out, "cyclic factor: {}", orders.join(" x "));
    let _ = writeln!(out, "group order: {}", set.group_order());
    for (i, (g, k)) in set.generators().vectors.iter().zip(set.cyclic_orders()).enumerate() {
        let _ = writeln!(out, "generator {i}: exponents {g} order {k}");
    }
    if a.matrices {
        for (i, m) in set.generator_matrices().iter().enumerate() {
            let _ = writeln!(out, "T_{i} =");
            for r in 0..m.nrows() {
                let row: Vec<String> = m.row(r).iter().map(|z| format!("{:+.4}{:+.4}i", z.re, z.im)).collect();
                let _ = writeln!(out, "  [{}]", row.join(", "));
            }
        }
    }
    Ok(out)
}

struct Checks {
    lines: String,
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            lines: String::new(),
            failures: Vec::new(),
        }
    }

    fn record(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        let _ = writeln!(self.lines, "{:<4} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures.push(name.to_string());
        }
    }
}

fn max_dev(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Runs the verification suite; returns the report and whether every check
/// passed.
pub fn verify_report(d: usize, n: usize, seed: u64) -> Result<(String, bool)> {
    if !gateset::is_prime_power(d) {
        return Err(Error::NotPrimePower(d));
    }
    let mut c = Checks::new();
    let tol = 1e-10;

    let m = ResidueMatrix::from_rows(
        &[vec![0, 0, 1, 1, 8, 8], vec![1, 8, 0, 8, 0, 1], vec![8, 1, 8, 0, 1, 0]],
        9,
    )?;
    let h = howell_form(&m);
    let golden = vec![vec![1, 8, 0, 8, 0, 1], vec![0, 0, 1, 1, 8, 8], vec![0, 0, 0, 0, 0, 0]];
    let rows: Vec<Vec<i64>> = h.to_rows().iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    c.record("howell_golden", rows == golden, format!("{rows:?}"));

    let basis = WeylBasis::new(d, n)?;
    let proj = IrrepProjectors::new(&basis);
    let big = proj.dim() * proj.dim();
    let id = nalgebra::DMatrix::<f64>::identity(big, big);
    let ps = proj.all();
    let mut idem: f64 = 0.0;
    let mut orth: f64 = 0.0;
    for (i, p) in ps.iter().enumerate() {
        idem = idem.max(max_dev(&(*p * *p), p));
        idem = idem.max(max_dev(&p.transpose(), p));
        for q in ps.iter().skip(i + 1) {
            orth = orth.max((*p * *q).abs().max());
        }
    }
    c.record("projector_idempotent_symmetric", idem < tol, format!("{idem:.2e}"));
    c.record("projector_orthogonal", orth < tol, format!("{orth:.2e}"));
    let complete = max_dev(&(ps[0] + ps[1] + ps[2]), &id);
    c.record("projector_complete", complete < tol, format!("{complete:.2e}"));
    let traces = ps.map(|p| p.trace().round() as usize);
    c.record("projector_dims", traces == proj.dims(), format!("{traces:?}"));

    let dim = proj.dim();
    let zero = twirl::state_projections(&proj, &basis, DensityMatrix::basis(dim, 0).matrix());
    c.record("plus_block_kills_zero_state", zero[2] < tol, format!("{:.2e}", zero[2]));
    let plus = twirl::state_projections(&proj, &basis, DensityMatrix::plus(dim).matrix());
    c.record("standard_block_kills_plus_state", plus[1] < tol, format!("{:.2e}", plus[1]));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps: Vec<gateset::MonomialMatrix> = if n == 1 {
        let set = GateSet::build(d, Mode::Maximal)?;
        (0..100).map(|_| set.monomial(&set.sample(&mut rng))).collect()
    } else {
        let multi = MultiQuditGateSet::new(d, n)?;
        (0..100).map(|_| multi.random_element(&mut rng, 20)).collect()
    };
    let mut schur: f64 = 0.0;
    for g in &reps {
        schur = schur.max(twirl::commutator_norm(&twirl::pl_of_monomial(g, &basis), &proj));
    }
    let what = if n == 1 { "random group elements" } else { "random generator words" };
    c.record("schur_commutation", schur < tol, format!("{schur:.2e} over 100 {what}"));

    if n == 1 {
        let minimal = GateSet::build(d, Mode::Minimal)?;
        let orders: Vec<String> = minimal.cyclic_orders().iter().map(|k| format!("C{k}")).collect();
        c.record(
            "minimal_generators",
            true,
            format!("{} (group order {})", orders.join(" x "), minimal.group_order()),
        );
        for mode in [Mode::Minimal, Mode::Maximal] {
            let set = GateSet::build(d, mode)?;
            match twirl::character_suite(&set) {
                Ok(r) => {
                    c.record(
                        &format!("character_average_{mode}"),
                        r.passed(),
                        format!("{:.6} (exact {})", r.group_average_float, r.group_average),
                    );
                }
                Err(Error::GroupTooLarge(size)) => {
                    let _ = writeln!(c.lines, "SKIP character_average_{mode}: group of order {size} not enumerated");
                }
                Err(e) => return Err(e),
            }
        }
        let noise = NoiseModel::RandomCptp { seed, rank: 2, strength: 0.5 }.superoperator(d)?;
        let t = twirl::twirl(&noise, &basis, &proj)?;
        let agf = quantum_core::average_gate_fidelity(&Superoperator::identity(d), &noise)?;
        let dev = (twirl::agf_from_eta(&t, d) - agf).abs();
        c.record("agf_from_eta", dev < tol, format!("{dev:.2e}"));
    }
    let bell: Vec<u64> = (1..=6).map(twirl::count_set_partitions).collect();
    let bell_ok = (1..=6).all(|r| twirl::bell_partition_sum(r) == num_rational::Ratio::from_integer(bell[r - 1] as i128));
    c.record("bell_identity", bell_ok, format!("{bell:?}"));

    let ok = c.failures.is_empty();
    let mut out = c.lines;
    let _ = writeln!(out, "summary: d={d} n={n} failures={}", c.failures.len());
    if !ok {
        let _ = writeln!(out, "failed: {}", c.failures.join(", "));
    }
    Ok((out, ok))
}

fn simulate(a: &SimulateArgs, cli_seed: u64) -> Result<i32> {
    let text = fs::read_to_string(&a.config)?;
    let cfg = RunConfig::parse(&text)?;
    let seed = cfg.seed.unwrap_or(cli_seed);
    let out = a
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let mut sims = Vec::new();
    for state in [InitialState::Zero, InitialState::Plus] {
        sims.push((state, Simulator::new(cfg.experiment(seed, state))?));
    }

    let example_depth = cfg.depths[0];
    let (gates, inv, p) = sims[0].1.sample_circuit(seed, example_depth)?;
    let listing: Vec<String> = gates.iter().map(ToString::to_string).collect();
    eprintln!("example circuit (depth {example_depth}): {}", listing.join(" "));
    eprintln!("inversion gate: {inv}");
    eprintln!("exact survival of example circuit from |0>: {p:.6}");

    let mut meta = serde_json::Map::new();
    for (state, sim) in &sims {
        let run = sim.run();
        let path = out.join(format!("{state}.csv"));
        run.write_csv(fs::File::create(&path)?)?;
        let t = sim.twirled();
        meta.insert(
            state.to_string(),
            serde_json::json!({
                "csv": path.file_name().and_then(|s| s.to_str()),
                "decay_coefficients": sim.decay_coefficients(),
            }),
        );
        meta.insert(
            "eta".into(),
            serde_json::json!({"eta_i": t.eta_i, "eta_0": t.eta_0, "eta_plus": t.eta_plus}),
        );
        meta.insert("fidelity".into(), serde_json::json!(twirl::agf_from_eta(&t, cfg.dimension)));
    }
    meta.insert("config".into(), serde_json::to_value(&cfg).expect("config serialises"));
    meta.insert("seed".into(), serde_json::json!(seed));
    fs::write(
        out.join("metadata.json"),
        serde_json::to_string_pretty(&serde_json::Value::Object(meta)).expect("metadata serialises"),
    )?;
    eprintln!("wrote {}", display(&out));
    Ok(EXIT_OK)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
