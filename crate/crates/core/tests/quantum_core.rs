use num_complex::Complex64;
use proptest::prelude::*;
use qudit_rb::quantum_core::{
    average_gate_fidelity, kron, random_pure_state, shift_matrix, unvectorise, vectorise, CMatrix, DensityMatrix,
    KrausSet, NoiseModel, Superoperator, WeylBasis,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(1/D)Σ` over Haar states of `⟨ψ|ℰ(|ψ⟩⟨ψ|)|ψ⟩`, by Monte Carlo.
fn haar_fidelity(channel: &Superoperator, samples: usize, seed: u64) -> f64 {
    let d = channel.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..samples {
        let psi = random_pure_state(&mut rng, d);
        let rho = &psi * psi.adjoint();
        let out = channel.apply_to(&rho).unwrap();
        acc += (psi.adjoint() * out * &psi)[(0, 0)].re;
    }
    acc / samples as f64
}

fn noise_strategy() -> impl Strategy<Value = NoiseModel> {
    let leaf = prop_oneof![
        Just(NoiseModel::Identity),
        (0.0..=1.0f64).prop_map(|p| NoiseModel::Depolarizing { p }),
        (0.0..=1.0f64).prop_map(|gamma| NoiseModel::AmplitudeDamping { gamma }),
        (0.0..=1.0f64).prop_map(|lambda| NoiseModel::PhaseDamping { lambda }),
        (any::<u64>(), 1usize..=4, 0.0..=1.0f64).prop_map(|(seed, rank, strength)| NoiseModel::RandomCptp {
            seed,
            rank,
            strength
        }),
    ];
    prop_oneof![
        3 => leaf.clone(),
        1 => prop::collection::vec(leaf, 1..=3).prop_map(|channels| NoiseModel::Composite { channels }),
    ]
}

#[test]
fn weyl_orthogonality() {
    for (d, n) in [(2, 1), (3, 1), (4, 1), (5, 1), (2, 2), (3, 2), (2, 3)] {
        let basis = WeylBasis::new(d, n).unwrap();
        let dim = basis.dim() as f64;
        assert_eq!(max_abs(&(basis.op(0) - CMatrix::identity(basis.dim(), basis.dim()))), 0.0);
        for (i, a) in basis.ops().iter().enumerate() {
            for (j, b) in basis.ops().iter().enumerate() {
                let t = (a.adjoint() * b).trace();
                let want = if i == j { dim } else { 0.0 };
                assert!((t - c(want)).norm() < 1e-10, "d={d} n={n} i={i} j={j}");
            }
        }
    }
}

#[test]
fn weyl_ordering_and_transform() {
    let basis = WeylBasis::new(3, 1).unwrap();
    // W_{3i+j} = X^i Z^j.
    let x = shift_matrix(3);
    assert!(max_abs(&(basis.op(3) - &x)) < 1e-15);
    assert!(basis.is_diagonal(1) && basis.is_diagonal(2) && !basis.is_diagonal(3));
    let u = basis.transform();
    assert!(max_abs(&(u * u.adjoint() - CMatrix::identity(9, 9))) < 1e-12);
    let two = WeylBasis::new(3, 2).unwrap();
    // Site 0 is the most significant factor.
    assert!(max_abs(&(two.op(9 * 3) - kron(&x, &CMatrix::identity(3, 3)))) < 1e-15);
}

#[test]
fn pl_examples() {
    let basis = WeylBasis::new(3, 1).unwrap();
    let id = Superoperator::identity(3).pauli_liouville(&basis);
    assert!(max_abs(&(id - CMatrix::identity(9, 9))) < 1e-12);
    let p = 0.2;
    let dep = NoiseModel::Depolarizing { p }.superoperator(3).unwrap().pauli_liouville(&basis);
    let mut want = CMatrix::identity(9, 9) * c(1.0 - p);
    want[(0, 0)] = c(1.0);
    assert!(max_abs(&(dep - want)) < 1e-12);
    // A diagonal unitary fixes every diagonal Weyl coordinate.
    let t = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        c(1.0),
        Complex64::from_polar(1.0, 0.7),
        Complex64::from_polar(1.0, -1.9),
    ]));
    let g = Superoperator::unitary(&t).pauli_liouville(&basis);
    for k in [0, 1, 2] {
        assert!((g[(k, k)] - c(1.0)).norm() < 1e-12);
        for l in 3..9 {
            assert!(g[(k, l)].norm() < 1e-12 && g[(l, k)].norm() < 1e-12);
        }
    }
}

#[test]
fn channel_action_examples() {
    let x = Superoperator::unitary(&shift_matrix(3));
    let one = x.apply_to(DensityMatrix::basis(3, 0).matrix()).unwrap();
    assert!(max_abs(&(one - DensityMatrix::basis(3, 1).matrix())) < 1e-15);
    let full = NoiseModel::Depolarizing { p: 1.0 }.superoperator(3).unwrap();
    let rho = DensityMatrix::plus(3);
    let out = full.apply_to(rho.matrix()).unwrap();
    assert!(max_abs(&(out - DensityMatrix::maximally_mixed(3).matrix())) < 1e-12);
    let none = NoiseModel::Depolarizing { p: 0.0 }.superoperator(3).unwrap();
    assert!(max_abs(&(none.matrix() - Superoperator::identity(3).matrix())) < 1e-12);
}

#[test]
fn agf_closed_forms() {
    for p in [0.0, 0.1, 0.5, 1.0] {
        let f = NoiseModel::Depolarizing { p }.fidelity(3).unwrap();
        assert!((f - (1.0 - 2.0 * p / 3.0)).abs() < 1e-12);
    }
    let u = Superoperator::unitary(&shift_matrix(4));
    assert!((average_gate_fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn agf_matches_haar_monte_carlo() {
    let cases = [
        NoiseModel::Depolarizing { p: 0.3 },
        NoiseModel::RandomCptp { seed: 4, rank: 2, strength: 1.0 },
        NoiseModel::Composite {
            channels: vec![NoiseModel::AmplitudeDamping { gamma: 0.2 }, NoiseModel::PhaseDamping { lambda: 0.3 }],
        },
    ];
    for (i, model) in cases.iter().enumerate() {
        let ch = model.superoperator(3).unwrap();
        let exact = model.fidelity(3).unwrap();
        let mc = haar_fidelity(&ch, 100_000, i as u64);
        assert!((exact - mc).abs() < 1e-3, "{model}: {exact} vs {mc}");
    }
}

#[test]
fn composite_anchor_fidelity() {
    let f = NoiseModel::Composite {
        channels: vec![NoiseModel::Depolarizing { p: 0.01 }, NoiseModel::AmplitudeDamping { gamma: 0.01 }],
    }
    .fidelity(3)
    .unwrap();
    // Close to the quoted 0.931339 only up to the damping convention.
    assert!((0.95..1.0).contains(&f), "{f}");
}

#[test]
fn invalid_inputs() {
    assert!(NoiseModel::Depolarizing { p: 1.5 }.kraus(3).is_err());
    assert!(NoiseModel::RandomCptp { seed: 0, rank: 0, strength: 1.0 }.kraus(3).is_err());
    assert!(KrausSet::new(vec![CMatrix::identity(2, 2) * c(0.5)], 1e-10).is_err());
    let bad = CMatrix::from_fn(2, 2, |i, _| c(i as f64));
    assert!(DensityMatrix::new(bad).is_err());
    assert!(Superoperator::identity(3).apply_to(&CMatrix::identity(2, 2)).is_err());
}

#[test]
fn noise_models_round_trip_through_json() {
    let m = NoiseModel::Composite {
        channels: vec![NoiseModel::Depolarizing { p: 0.1 }, NoiseModel::RandomCptp { seed: 3, rank: 2, strength: 0.4 }],
    };
    let text = serde_json::to_string(&m).unwrap();
    assert_eq!(serde_json::from_str::<NoiseModel>(&text).unwrap(), m);
    let parsed: NoiseModel = serde_json::from_str(r#"{"kind":"random_cptp","seed":1,"rank":2}"#).unwrap();
    assert_eq!(parsed, NoiseModel::RandomCptp { seed: 1, rank: 2, strength: 1.0 });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_noise_model_is_cptp(model in noise_strategy(), dim in 2usize..=5) {
        let k = model.kraus(dim).unwrap();
        let mut completeness = CMatrix::zeros(dim, dim);
        for a in k.ops() {
            completeness += a.adjoint() * a;
        }
        prop_assert!(max_abs(&(completeness - CMatrix::identity(dim, dim))) < 1e-10);
        let s = model.superoperator(dim).unwrap();
        prop_assert!(s.is_cptp(1e-10));
        let choi = s.choi();
        let min_eig = choi.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(min_eig > -1e-10);
        let f = model.fidelity(dim).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn pl_is_an_isometry(model in noise_strategy()) {
        let s = model.superoperator(3).unwrap();
        let basis = WeylBasis::new(3, 1).unwrap();
        let pl = s.pauli_liouville(&basis);
        let mut a: Vec<f64> = s.matrix().clone().singular_values().iter().cloned().collect();
        let mut b: Vec<f64> = pl.singular_values().iter().cloned().collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let back = Superoperator::from_pauli_liouville(&pl, &basis);
        prop_assert!(max_abs(&(back.matrix() - s.matrix())) < 1e-12);
    }

    #[test]
    fn agf_is_frame_invariant(model in noise_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_pure_state(&mut rng, 3);
        // Householder reflection: a random unitary frame.
        let u = CMatrix::identity(3, 3) - &psi * psi.adjoint() * c(2.0);
        let su = Superoperator::unitary(&u);
        let rot = |e: &Superoperator| su.adjoint().then(e).then(&su);
        let ideal = Superoperator::unitary(&shift_matrix(3));
        let noisy = ideal.then(&model.superoperator(3).unwrap());
        let f0 = average_gate_fidelity(&ideal, &noisy).unwrap();
        let f1 = average_gate_fidelity(&rot(&ideal), &rot(&noisy)).unwrap();
        prop_assert!((f0 - f1).abs() < 1e-12);
    }

    #[test]
    fn superoperator_matches_kraus_action(model in noise_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_pure_state(&mut rng, 3);
        let rho = &psi * psi.adjoint();
        let k = model.kraus(3).unwrap();
        let direct = k.apply(&rho);
        let via = unvectorise(&(model.superoperator(3).unwrap().matrix() * vectorise(&rho))).unwrap();
        prop_assert!(max_abs(&(direct - via)) < 1e-12);
    }
}
