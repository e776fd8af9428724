//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::Ratio;
use qudit_rb::analysis::{
    confidence_table, fit_decay, fit_run, standard_strategies, strategy_comparison, strategy_noise, ConfidenceReport,
    StudySettings,
};
use qudit_rb::gateset::{GateSet, Mode, MonomialMatrix, MultiQuditGateSet};
use qudit_rb::modring::{howell_form, minimal_generators, ResidueMatrix, ResidueVector};
use qudit_rb::quantum_core::{
    average_gate_fidelity, match_fidelity, CMatrix, DensityMatrix, NoiseModel, Superoperator, WeylBasis,
};
use qudit_rb::rbsim::{default_depths, exhaustive_depth_one, ExperimentConfig, InitialState, Simulator};
use qudit_rb::twirl::{
    agf_from_eta, bell_partition_sum, character_suite, count_set_partitions, group_average_twirl, pl_of_monomial,
    state_projections, twirl_pl, IrrepProjectors,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn complex(m: &nalgebra::DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn howell_golden() -> Outcome {
    let start = Instant::now();
    let m = ResidueMatrix::from_rows(&[vec![0, 0, 1, 1, 8, 8], vec![1, 8, 0, 8, 0, 1], vec![8, 1, 8, 0, 1, 0]], 9).unwrap();
    let h = howell_form(&m).to_rows();
    let golden = vec![vec![1, 8, 0, 8, 0, 1], vec![0, 0, 1, 1, 8, 8], vec![0, 0, 0, 0, 0, 0]];
    let columns: Vec<ResidueVector> = (0..6).map(|j| m.column(j)).collect();
    let g = minimal_generators(&columns).unwrap();
    let set = GateSet::build(3, Mode::Minimal).unwrap();
    let elapsed = start.elapsed();
    let pass = h == golden && g.orders == vec![9, 9] && set.cyclic_orders() == [9, 9] && elapsed < Duration::from_secs(1);
    outcome(pass, format!("howell {:?}, generators C{} x C{}, {}", h, g.orders[0], g.orders[1], secs(elapsed)))
}

fn character_identities() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    // Float route: |tr Γ(g)|² over every element.
    for d in [2, 3] {
        for mode in [Mode::Minimal, Mode::Maximal] {
            let set = GateSet::build(d, mode).unwrap();
            let basis = WeylBasis::new(d, 1).unwrap();
            let elements = set.elements().unwrap();
            let sum: f64 = elements
                .iter()
                .map(|g| pl_of_monomial(&set.monomial(g), &basis).trace().norm_sqr())
                .sum();
            let avg = sum / elements.len() as f64;
            pass &= (avg - 3.0).abs() < 1e-9;
            notes.push(format!("d={d} {mode} {avg:.12}"));
        }
    }
    // Exact per-class averages.
    for d in [2, 3, 4] {
        for mode in [Mode::Minimal, Mode::Maximal] {
            let set = GateSet::build(d, mode).unwrap();
            let r = character_suite(&set).unwrap();
            let exact = r.per_sigma.iter().all(|row| row.average == row.expected);
            pass &= exact && r.group_average == "3";
        }
    }
    let bell: Vec<u64> = (1..=6).map(count_set_partitions).collect();
    let bell_ok = bell == [1, 2, 5, 15, 52, 203]
        && (1..=6).all(|r| bell_partition_sum(r) == Ratio::from_integer(bell[r - 1] as i128));
    pass &= bell_ok;
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    outcome(
        pass,
        format!("{}; per-class exact for d<=4; Bell {:?}; {}", notes.join(", "), bell, secs(elapsed)),
    )
}

fn projector_suite() -> Outcome {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (d, n) in [(2, 1), (3, 1), (4, 1), (5, 1), (3, 2), (2, 2), (2, 3)] {
        let basis = WeylBasis::new(d, n).unwrap();
        let p = IrrepProjectors::new(&basis);
        let len = basis.len();
        let id = nalgebra::DMatrix::<f64>::identity(len, len);
        let all = p.all();
        for (i, a) in all.iter().enumerate() {
            worst = worst.max((*a * *a - *a).abs().max());
            for b in all.iter().skip(i + 1) {
                worst = worst.max((*a * *b).abs().max());
            }
        }
        worst = worst.max((all[0] + all[1] + all[2] - id).abs().max());
        pass &= all.map(|m| m.trace().round() as usize) == p.dims();
        let dim = p.dim();
        worst = worst.max(state_projections(&p, &basis, DensityMatrix::basis(dim, 0).matrix())[2]);
        worst = worst.max(state_projections(&p, &basis, DensityMatrix::plus(dim).matrix())[1]);

        let mut rng = ChaCha8Rng::seed_from_u64(2024 + d as u64 * 10 + n as u64);
        let reps: Vec<MonomialMatrix> = if n == 1 {
            let set = GateSet::build(d, Mode::Maximal).unwrap();
            (0..100).map(|_| set.monomial(&set.sample(&mut rng))).collect()
        } else {
            let multi = MultiQuditGateSet::new(d, n).unwrap();
            (0..100).map(|_| multi.random_element(&mut rng, 20)).collect()
        };
        let projs: Vec<CMatrix> = all.iter().map(|m| complex(m)).collect();
        for g in &reps {
            let gamma = pl_of_monomial(g, &basis);
            for pc in &projs {
                worst = worst.max(max_abs(&(&gamma * pc - pc * &gamma)));
            }
        }
    }
    pass &= worst < tol;
    outcome(pass, format!("max deviation {worst:.2e} over 7 (d,n) pairs, 100 representatives each"))
}

fn twirl_consistency() -> Outcome {
    let start = Instant::now();
    let set = GateSet::build(3, Mode::Minimal).unwrap();
    let basis = WeylBasis::new(3, 1).unwrap();
    let p = IrrepProjectors::new(&basis);
    let elements = set.elements().unwrap();
    let unitaries: Vec<Superoperator> = elements
        .iter()
        .map(|g| Superoperator::unitary(set.representative(g).unwrap().matrix()))
        .collect();
    let mut twirl_dev: f64 = 0.0;
    let mut agf_dev: f64 = 0.0;
    for seed in 0..20u64 {
        let noise = NoiseModel::RandomCptp { seed, rank: 1 + (seed as usize % 4), strength: 1.0 };
        let ch = noise.superoperator(3).unwrap();
        let pl = ch.pauli_liouville(&basis);
        let t = twirl_pl(&pl, &p).unwrap();
        let explicit = group_average_twirl(&pl, &set, &basis).unwrap();
        twirl_dev = twirl_dev.max(max_abs(&(explicit - t.pl_matrix(&p))));
        let avg: f64 = unitaries
            .iter()
            .map(|u| average_gate_fidelity(u, &u.then(&ch)).unwrap())
            .sum::<f64>()
            / unitaries.len() as f64;
        agf_dev = agf_dev.max((agf_from_eta(&t, 3) - avg).abs());
    }
    let elapsed = start.elapsed();
    let pass = twirl_dev < 1e-10 && agf_dev < 1e-10 && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{} elements, 20 channels: twirl {twirl_dev:.2e}, agf {agf_dev:.2e}, {}",
            elements.len(),
            secs(elapsed)
        ),
    )
}

fn exhaustive_depth_one_check() -> Outcome {
    let noise = NoiseModel::RandomCptp { seed: 2024, rank: 3, strength: 0.3 };
    let mut worst: f64 = 0.0;
    for mode in [Mode::Minimal, Mode::Maximal] {
        for state in [InitialState::Zero, InitialState::Plus] {
            let mut cfg = ExperimentConfig::new(3, noise.clone());
            cfg.gateset_mode = mode;
            cfg.initial_state = state;
            let sim = Simulator::new(cfg).unwrap();
            worst = worst.max((exhaustive_depth_one(&sim).unwrap() - sim.theoretical_decay(1)).abs());
        }
    }
    outcome(worst < 1e-10, format!("max |average - theory| = {worst:.2e} (both states, both modes)"))
}

fn table_depths() -> Vec<usize> {
    (1..=20).collect()
}

fn fmt_rows(rows: &[ConfidenceReport]) -> String {
    rows.iter()
        .map(|r| format!("({},{}) {:.4}/{:.4}/{:.4}", r.shots, r.circuits, r.errors[0], r.errors[1], r.errors[2]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn table_one() -> Outcome {
    let start = Instant::now();
    let (strength, model, f) =
        match_fidelity(|s| NoiseModel::RandomCptp { seed: 2024, rank: 3, strength: s }, 3, 0.89, 0.0, 1.0).unwrap();
    let settings = StudySettings { repetitions: 1000, seed: 1, depths: table_depths(), ..Default::default() };
    let rows = confidence_table(&model, &[(100, 10), (10, 100), (100, 100)], &settings).unwrap();
    let q95 = rows[2].errors[0];
    let elapsed = start.elapsed();
    let pass = (f - 0.89).abs() <= 0.005 && (0.001..=0.01).contains(&q95) && elapsed < Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "AGF {f:.6} (strength {strength:.4}), eta0 {:.4}, (100,100) q95 {q95:.4} (reference 0.003); {}; {}",
            rows[2].eta_true,
            fmt_rows(&rows),
            secs(elapsed)
        ),
    )
}

fn composite(x: f64) -> NoiseModel {
    NoiseModel::Composite {
        channels: vec![NoiseModel::Depolarizing { p: x }, NoiseModel::AmplitudeDamping { gamma: x }],
    }
}

fn composite_trend() -> Outcome {
    let start = Instant::now();
    let grid = [(100, 10), (10, 100), (100, 100), (20, 100), (20, 20)];
    let mut tables = Vec::new();
    let mut notes = Vec::new();
    for target in [0.931339, 0.958284, 0.985921] {
        let (x, model, f) = match_fidelity(composite, 3, target, 0.0, 0.5).unwrap();
        let settings = StudySettings { repetitions: 1000, seed: 2, ..Default::default() };
        let rows = confidence_table(&model, &grid, &settings).unwrap();
        notes.push(format!("F={f:.6} (x={x:.4}): {}", fmt_rows(&rows)));
        tables.push(rows);
    }
    let mut pass = true;
    // Lower error at higher fidelity, cell by cell.
    for c in 0..grid.len() {
        pass &= tables.windows(2).all(|w| w[1][c].errors[0] < w[0][c].errors[0]);
    }
    // Lower error at larger s·r within each table.
    for t in &tables {
        for (i, a) in grid.iter().enumerate() {
            for (j, b) in grid.iter().enumerate() {
                if a.0 * (a.1 as u64) < b.0 * (b.1 as u64) {
                    pass &= t[j].errors[0] < t[i].errors[0];
                }
            }
        }
    }
    outcome(pass, format!("{}; {}", notes.join("; "), secs(start.elapsed())))
}

fn strategy_table() -> Outcome {
    let start = Instant::now();
    let strategies: Vec<_> = standard_strategies().into_iter().filter(|s| s.name == "iii" || s.name == "iv").collect();
    let metas = 20;
    let mut wins = 0;
    for meta in 0..metas {
        let settings = StudySettings { repetitions: 100, seed: 1000 + meta, ..Default::default() };
        let rows = strategy_comparison(&strategy_noise(), &strategies, 100, 100, &settings).unwrap();
        let err = |name: &str| rows.iter().find(|r| r.name == name).unwrap().errors[0];
        if err("iv") < err("iii") {
            wins += 1;
        }
    }
    let pass = wins * 10 >= metas * 9;
    outcome(pass, format!("iv beats iii in {wins}/{metas} meta-repetitions; {}", secs(start.elapsed())))
}

fn fit_round_trip() -> Outcome {
    let depths = default_depths();
    let mut worst: f64 = 0.0;
    for eta in [0.5, 0.9, 0.95, 0.99] {
        let values: Vec<f64> = depths.iter().map(|&m| 1.0 / 3.0 + 2.0 / 3.0 * f64::powi(eta, m as i32)).collect();
        let fit = fit_decay(&depths, &values).unwrap();
        worst = worst.max((fit.eta - eta).abs());
    }
    outcome(worst < 1e-6, format!("max |eta - fit| = {worst:.2e}"))
}

fn spam_robustness() -> Outcome {
    let noise = composite(0.02);
    let mut cfg = ExperimentConfig::new(3, noise);
    cfg.shots = 1000;
    cfg.circuits = 1000;
    cfg.seed = 11;
    let plain = Simulator::new(cfg.clone()).unwrap();
    cfg.spam = Some(NoiseModel::Depolarizing { p: 0.1 });
    let spam = Simulator::new(cfg).unwrap();
    let a = fit_run(&plain.run()).unwrap();
    let b = fit_run(&spam.run()).unwrap();
    let se = (a.eta_std_error().unwrap().powi(2) + b.eta_std_error().unwrap().powi(2)).sqrt();
    let diff = (a.eta - b.eta).abs();
    let shifted = (a.b - b.b).abs() > 0.02;
    let pass = diff < 3.0 * se && shifted;
    outcome(
        pass,
        format!(
            "eta {:.5} vs {:.5} (|diff| {diff:.2e}, 3se {:.2e}); A {:.4}->{:.4}, B {:.4}->{:.4}; true eta0 {:.5}",
            a.eta,
            b.eta,
            3.0 * se,
            a.a,
            b.a,
            a.b,
            b.b,
            plain.twirled().eta_0
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("howell golden test and C9 x C9 generators", howell_golden),
        ("tri-partite decomposition character identities", character_identities),
        ("projector suite", projector_suite),
        ("group-average twirl consistency", twirl_consistency),
        ("exhaustive depth-one decay", exhaustive_depth_one_check),
        ("table 1 (100,100) reproduction", table_one),
        ("composite-noise table trends", composite_trend),
        ("strategy iv beats strategy iii", strategy_table),
        ("noiseless fit round trip", fit_round_trip),
        ("spam robustness", spam_robustness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {}: {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
