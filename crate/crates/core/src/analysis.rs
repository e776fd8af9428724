//! Decay fitting, confidence tables and depth-strategy comparison.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gateset::Mode;
use crate::quantum_core::NoiseModel;
use crate::rbsim::{default_depths, derive_seed, ExperimentConfig, InitialState, RbRun, SimulationMode, Simulator};
use crate::twirl::agf_from_eta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// The decay rate is not identifiable (flat data, vanishing amplitude or
    /// a rate pinned at zero).
    Degenerate,
    NotConverged,
}

/// Fit of `p(m) = A + B η^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub residual_norm: f64,
    pub status: FitStatus,
    /// Standard errors of `(A, B, η)` from the residual variance; `None`
    /// when there are too few points or the normal matrix is singular.
    pub std_errors: Option<[f64; 3]>,
    pub iterations: usize,
}

impl DecayEstimate {
    pub fn eta_std_error(&self) -> Option<f64> {
        self.std_errors.map(|s| s[2])
    }
}

fn rss(depths: &[f64], y: &[f64], a: f64, b: f64, eta: f64) -> f64 {
    depths
        .iter()
        .zip(y)
        .map(|(m, v)| (a + b * eta.powf(*m) - v).powi(2))
        .sum()
}

/// Best `(A, B)` for fixed `η`, by linear least squares.
fn linear_part(depths: &[f64], y: &[f64], eta: f64) -> (f64, f64) {
    let n = y.len() as f64;
    let x: Vec<f64> = depths.iter().map(|m| eta.powf(*m)).collect();
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return (sy / n, 0.0);
    }
    let b = (n * sxy - sx * sy) / det;
    ((sy - b * sx) / n, b)
}

fn profile(depths: &[f64], y: &[f64], eta: f64) -> f64 {
    let (a, b) = linear_part(depths, y, eta);
    rss(depths, y, a, b, eta)
}

/// Rate from a straight-line fit of `log |Δp|` against depth over
/// consecutive depth pairs; insensitive to the offset `A`.
fn log_linear_rate(depths: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = depths
        .windows(2)
        .zip(y.windows(2))
        .filter_map(|(m, v)| {
            let diff = (v[1] - v[0]) / (m[1] - m[0]);
            (diff.abs() > 1e-300).then(|| (m[0], diff.abs().ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let eta = slope.exp();
    eta.is_finite().then_some(eta.clamp(0.0, 1.0))
}

/// Least-squares fit of `A + B η^m` with `η ∈ [0, 1]`.
///
/// The starting rate is the better of a log-linear estimate and a grid scan
/// of the profile residual; it is refined by a bounded Levenberg–Marquardt
/// iteration on all three parameters.
pub fn fit_decay(depths: &[usize], values: &[f64]) -> Result<DecayEstimate> {
    if depths.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: depths.len(),
            found: values.len(),
        });
    }
    let mut distinct = depths.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct depths, got {}", distinct.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite survival value".into()));
    }
    let m: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    let y = values;
    let n = y.len();

    let mean = y.iter().sum::<f64>() / n as f64;
    let spread = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread < 1e-12 {
        return Ok(DecayEstimate {
            a: mean,
            b: 0.0,
            eta: 1.0,
            residual_norm: rss(&m, y, mean, 0.0, 1.0).sqrt(),
            status: FitStatus::Degenerate,
            std_errors: None,
            iterations: 0,
        });
    }

    let mut eta0 = (1..1000)
        .map(|k| k as f64 / 1000.0)
        .min_by(|a, b| profile(&m, y, *a).total_cmp(&profile(&m, y, *b)))
        .unwrap();
    if let Some(e) = log_linear_rate(&m, y) {
        if profile(&m, y, e) < profile(&m, y, eta0) {
            eta0 = e;
        }
    }
    let (a0, b0) = linear_part(&m, y, eta0);
    let mut theta = Vector3::new(a0, b0, eta0);
    let mut cost = rss(&m, y, a0, b0, eta0);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    let jacobian = |t: &Vector3<f64>| -> (Matrix3<f64>, Vector3<f64>) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (mi, yi) in m.iter().zip(y) {
            let p = t[2].powf(*mi);
            let dp = if *mi == 0.0 { 0.0 } else { mi * t[2].powf(mi - 1.0) };
            let row = Vector3::new(1.0, p, t[1] * dp);
            let r = t[0] + t[1] * p - yi;
            jtj += row * row.transpose();
            jtr += row * r;
        }
        (jtj, jtr)
    };

    for it in 0..500 {
        iterations = it + 1;
        let (jtj, jtr) = jacobian(&theta);
        let mut accepted = false;
        for _ in 0..40 {
            let mut lhs = jtj;
            for k in 0..3 {
                lhs[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = lhs.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = theta + step;
            trial[2] = trial[2].clamp(0.0, 1.0);
            let c = rss(&m, y, trial[0], trial[1], trial[2]);
            if c <= cost {
                let small_step = (trial - theta).norm() <= 1e-14 * (1.0 + theta.norm());
                let small_gain = cost - c <= 1e-15 * cost.max(1e-300);
                theta = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }

    let (jtj, _) = jacobian(&theta);
    let std_errors = if n > 3 {
        let sigma2 = cost / (n - 3) as f64;
        jtj.try_inverse()
            .map(|inv| [0, 1, 2].map(|k| (sigma2 * inv[(k, k)]).max(0.0).sqrt()))
            .filter(|s| s.iter().all(|v| v.is_finite()))
    } else {
        None
    };
    let degenerate = theta[1].abs() < 1e-9 || theta[2] <= 0.0;
    let status = if degenerate {
        FitStatus::Degenerate
    } else if converged {
        FitStatus::Converged
    } else {
        FitStatus::NotConverged
    };
    Ok(DecayEstimate {
        a: theta[0],
        b: theta[1],
        eta: theta[2],
        residual_norm: cost.sqrt(),
        status,
        std_errors,
        iterations,
    })
}

/// Fits the per-depth mean survival frequencies of a run.
pub fn fit_run(run: &RbRun) -> Result<DecayEstimate> {
    fit_decay(&run.depths(), &run.means())
}

/// Nearest-rank quantile of unsorted data: the `⌈qN⌉`-th smallest value.
pub fn nearest_rank(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

/// Quantile levels used in the tables.
pub const DEFAULT_QUANTILES: [f64; 3] = [0.95, 0.999, 1.0];

/// Shared settings of a Monte Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySettings {
    pub dimension: usize,
    pub gateset_mode: Mode,
    pub initial_state: InitialState,
    pub depths: Vec<usize>,
    pub repetitions: usize,
    pub quantiles: Vec<f64>,
    pub seed: u64,
    pub mode: SimulationMode,
    pub parallel: bool,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            dimension: 3,
            gateset_mode: Mode::Maximal,
            initial_state: InitialState::Zero,
            depths: default_depths(),
            repetitions: 1000,
            quantiles: DEFAULT_QUANTILES.to_vec(),
            seed: 0,
            mode: SimulationMode::ExactCircuit,
            parallel: true,
        }
    }
}

/// One table row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceReport {
    pub shots: u64,
    pub circuits: usize,
    pub quantiles: Vec<f64>,
    /// Quantiles of `|η − η̂|`, one per level.
    pub errors: Vec<f64>,
    /// Average gate fidelity of the noise.
    pub fidelity: f64,
    /// The decay rate the fits estimate.
    pub eta_true: f64,
    /// Fits that were not flagged as converged.
    pub flagged_fits: usize,
    /// Every `|η − η̂|`, in repetition order.
    #[serde(skip)]
    pub raw_errors: Vec<f64>,
}

fn study_config(settings: &StudySettings, noise: &NoiseModel, shots: u64, circuits: usize, depths: &[usize]) -> ExperimentConfig {
    ExperimentConfig {
        dimension: settings.dimension,
        gateset_mode: settings.gateset_mode,
        depths: depths.to_vec(),
        shots,
        circuits,
        seed: settings.seed,
        initial_state: settings.initial_state,
        noise: noise.clone(),
        mode: settings.mode,
        spam: None,
        variance_circuits: 100,
    }
}

fn target_eta(sim: &Simulator, state: InitialState) -> f64 {
    let t = sim.twirled();
    match state {
        InitialState::Zero => t.eta_0,
        InitialState::Plus => t.eta_plus,
    }
}

/// Absolute fit errors for every grid cell and repetition.
///
/// Repetition `k` uses the same circuits in every cell (common random
/// numbers): cells with fewer circuits use a prefix of the circuit list, and
/// only the shot draws depend on the shot count.
fn grid_errors(
    noise: &NoiseModel,
    grid: &[(u64, usize)],
    depths: &[usize],
    settings: &StudySettings,
) -> Result<(Vec<Vec<(f64, FitStatus)>>, f64, f64)> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty (shots, circuits) grid".into()));
    }
    let max_r = grid.iter().map(|g| g.1).max().unwrap();
    let sim = Simulator::new(study_config(settings, noise, 1, max_r, depths))?;
    let eta = target_eta(&sim, settings.initial_state);
    let fidelity = agf_from_eta(&sim.twirled(), settings.dimension);

    let one_rep = |rep: usize| -> Result<Vec<(f64, FitStatus)>> {
        let seed = derive_seed(settings.seed, &[rep as u64]);
        let probs: Vec<Vec<f64>> = match settings.mode {
            SimulationMode::ExactCircuit => depths
                .iter()
                .enumerate()
                .map(|(di, &m)| sim.circuit_probabilities(seed, di, m, max_r, false))
                .collect(),
            SimulationMode::TwirlPower => Vec::new(),
        };
        grid.iter()
            .map(|&(s, r)| {
                let means: Vec<f64> = match settings.mode {
                    SimulationMode::ExactCircuit => probs
                        .iter()
                        .enumerate()
                        .map(|(di, p)| {
                            let f = sim.sample_frequencies(seed, di, &p[..r], s);
                            f.iter().sum::<f64>() / r as f64
                        })
                        .collect(),
                    SimulationMode::TwirlPower => {
                        let cell = Simulator::new(study_config(settings, noise, s, r, depths))?;
                        cell.run_with_seed(seed, false).means()
                    }
                };
                let fit = fit_decay(depths, &means)?;
                Ok(((fit.eta - eta).abs(), fit.status))
            })
            .collect()
    };
    let per_rep: Vec<Vec<(f64, FitStatus)>> = if settings.parallel {
        (0..settings.repetitions).into_par_iter().map(one_rep).collect::<Result<_>>()?
    } else {
        (0..settings.repetitions).map(one_rep).collect::<Result<_>>()?
    };
    // transpose to per-cell
    let cells = (0..grid.len())
        .map(|c| per_rep.iter().map(|row| row[c]).collect())
        .collect();
    Ok((cells, eta, fidelity))
}

/// Error quantiles of the fitted decay rate for each `(shots, circuits)` cell.
pub fn confidence_table(noise: &NoiseModel, grid: &[(u64, usize)], settings: &StudySettings) -> Result<Vec<ConfidenceReport>> {
    if settings.repetitions < 1 {
        return Err(Error::InvalidParameter("repetitions must be positive".into()));
    }
    let (cells, eta, fidelity) = grid_errors(noise, grid, &settings.depths, settings)?;
    Ok(grid
        .iter()
        .zip(cells)
        .map(|(&(shots, circuits), errs)| {
            let raw: Vec<f64> = errs.iter().map(|e| e.0).collect();
            ConfidenceReport {
                shots,
                circuits,
                quantiles: settings.quantiles.clone(),
                errors: settings.quantiles.iter().map(|&q| nearest_rank(&raw, q)).collect(),
                fidelity,
                eta_true: eta,
                flagged_fits: errs.iter().filter(|e| e.1 != FitStatus::Converged).count(),
                raw_errors: raw,
            }
        })
        .collect())
}

fn quantile_header(quantiles: &[f64]) -> String {
    quantiles
        .iter()
        .map(|q| {
            let digits = format!("{q}").replace("0.", "").replace('.', "");
            format!("err_q{}", if *q == 1.0 { "100".to_string() } else { digits })
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// CSV: `shots,circuits,err_q95,err_q999,err_q100,fidelity`.
pub fn table_csv(rows: &[ConfidenceReport]) -> String {
    let mut out = String::new();
    let q = rows.first().map(|r| r.quantiles.clone()).unwrap_or_else(|| DEFAULT_QUANTILES.to_vec());
    let _ = writeln!(out, "shots,circuits,{},fidelity", quantile_header(&q));
    for r in rows {
        let errs: Vec<String> = r.errors.iter().map(|e| format!("{e:.6}")).collect();
        let _ = writeln!(out, "{},{},{},{:.6}", r.shots, r.circuits, errs.join(","), r.fidelity);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strategy {
    pub name: String,
    pub depths: Vec<usize>,
}

impl Strategy {
    pub fn new(name: &str, depths: Vec<usize>) -> Self {
        Self {
            name: name.to_string(),
            depths,
        }
    }
}

/// Doubling depths, the first eight depths, the first five depths, and
/// multiples of five up to 100.
pub fn standard_strategies() -> Vec<Strategy> {
    vec![
        Strategy::new("i", vec![2, 4, 8, 16, 32, 64]),
        Strategy::new("ii", (1..=8).collect()),
        Strategy::new("iii", (1..=5).collect()),
        Strategy::new("iv", default_depths()),
    ]
}

/// Depolarising (0.1) followed by phase damping (0.1).
pub fn strategy_noise() -> NoiseModel {
    NoiseModel::Composite {
        channels: vec![NoiseModel::Depolarizing { p: 0.1 }, NoiseModel::PhaseDamping { lambda: 0.1 }],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyReport {
    pub name: String,
    pub depths: Vec<usize>,
    pub quantiles: Vec<f64>,
    pub errors: Vec<f64>,
    /// 1 for the smallest error at the first quantile level.
    pub rank: usize,
}

/// Quantile errors per strategy, ranked by the first quantile level.
pub fn strategy_comparison(
    noise: &NoiseModel,
    strategies: &[Strategy],
    shots: u64,
    circuits: usize,
    settings: &StudySettings,
) -> Result<Vec<StrategyReport>> {
    let mut reports = strategies
        .iter()
        .map(|st| {
            let (cells, _, _) = grid_errors(noise, &[(shots, circuits)], &st.depths, settings)?;
            let raw: Vec<f64> = cells[0].iter().map(|e| e.0).collect();
            Ok(StrategyReport {
                name: st.name.clone(),
                depths: st.depths.clone(),
                quantiles: settings.quantiles.clone(),
                errors: settings.quantiles.iter().map(|&q| nearest_rank(&raw, q)).collect(),
                rank: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| reports[a].errors[0].total_cmp(&reports[b].errors[0]));
    for (rank, idx) in order.into_iter().enumerate() {
        reports[idx].rank = rank + 1;
    }
    reports.sort_by_key(|r| r.rank);
    Ok(reports)
}

pub fn strategies_csv(rows: &[StrategyReport]) -> String {
    let mut out = String::new();
    let q = rows.first().map(|r| r.quantiles.clone()).unwrap_or_else(|| DEFAULT_QUANTILES.to_vec());
    let _ = writeln!(out, "rank,strategy,{}", quantile_header(&q));
    for r in rows {
        let errs: Vec<String> = r.errors.iter().map(|e| format!("{e:.6}")).collect();
        let _ = writeln!(out, "{},{},{}", r.rank, r.name, errs.join(","));
    }
    out
}
