use mdiqss::adversary::AttackStrategy;
use mdiqss::postproc::{toeplitz_hash, BitString, ToeplitzSeed};
use mdiqss::protocol::{
    decoy_check, ghz_branch, identify_prep, reconstruct_bit, run_campaign, CheckResult, ProtocolConfig,
};
use mdiqss::qsim::{
    apply_pauli_noise, apply_two_qubit_unitary, measure_bell, prepare_ghz, prepare_single, tensor, Amplitude, Basis,
    BellOutcome, NoiseSpec, SingleQubitPrep, StateVector, TwoQubitUnitary,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Amplitude> = (0..1usize << n)
        .map(|_| {
            Amplitude::new(
                rand::Rng::random::<f64>(&mut rng) - 0.5,
                rand::Rng::random::<f64>(&mut rng) - 0.5,
            )
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::new(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

proptest! {
    #[test]
    fn bell_probabilities_are_complete(n in 2usize..=5, seed in any::<u64>(), q1 in 0usize..5, q2 in 0usize..5) {
        prop_assume!(q1 < n && q2 < n && q1 != q2);
        let s = random_state(n, seed);
        let total: f64 = s.bell_probabilities(q1, q2).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unitaries_and_noise_preserve_norm(n in 2usize..=6, seed in any::<u64>(), px in 0.0f64..0.3, pz in 0.0f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(n, seed ^ 1);
        let u = TwoQubitUnitary::random(&mut rng);
        let s = apply_two_qubit_unitary(&s, 0, n - 1, &u).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
        let noise = NoiseSpec::new(px, 0.1, pz).unwrap();
        let (s, _) = apply_pauli_noise(&s, 1, &noise, &mut rng).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn x_branches_obey_reconstruction(b in 0u8..2, c in 0u8..2, d in 0usize..4, e in 0usize..4) {
        let bob = SingleQubitPrep::from_basis_bit(Basis::X, b);
        let charlie = SingleQubitPrep::from_basis_bit(Basis::X, c);
        let (bsm_d, bsm_e) = (BellOutcome::ALL[d], BellOutcome::ALL[e]);
        let (p, alice) = ghz_branch(bob, charlie, bsm_d, bsm_e).expect("every X branch occurs");
        prop_assert!((p - 1.0 / 16.0).abs() < 1e-12);
        let alice = identify_prep(&alice).unwrap();
        prop_assert_eq!(alice.basis(), Basis::X);
        prop_assert_eq!(alice.bit(), reconstruct_bit(b, c, bsm_d, bsm_e));
    }

    #[test]
    fn toeplitz_is_linear(n_in in 1usize..64, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_out = ((n_in as f64 * frac) as usize).max(1);
        let t = ToeplitzSeed::random(n_in, n_out, &mut rng).unwrap();
        let x = BitString::random(n_in, &mut rng);
        let y = BitString::random(n_in, &mut rng);
        let lhs = toeplitz_hash(&x.xor(&y).unwrap(), &t).unwrap();
        let rhs = toeplitz_hash(&x, &t).unwrap().xor(&toeplitz_hash(&y, &t).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn ghz_x_basis_decomposition() {
    use SingleQubitPrep::{Minus, Plus};
    let k = |a, b, c| {
        tensor(
            &tensor(&prepare_single(a), &prepare_single(b)).unwrap(),
            &prepare_single(c),
        )
        .unwrap()
    };
    let terms = [
        k(Plus, Plus, Plus),
        k(Plus, Minus, Minus),
        k(Minus, Plus, Minus),
        k(Minus, Minus, Plus),
    ];
    let ghz = prepare_ghz();
    for i in 0..8 {
        let expected: Amplitude = terms.iter().map(|t| t.amplitude(i)).sum::<Amplitude>() * 0.5;
        assert!((ghz.amplitude(i) - expected).norm() < 1e-12, "index {i}");
    }
}

#[test]
fn born_rule_sampling() {
    let s = random_state(4, 11);
    let probs = s.bell_probabilities(1, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 40_000;
    let mut counts = [0u32; 4];
    for _ in 0..n {
        let (outcome, _) = measure_bell(&s, 1, 3, &mut rng).unwrap();
        counts[BellOutcome::ALL.iter().position(|&b| b == outcome).unwrap()] += 1;
    }
    for (c, p) in counts.iter().zip(probs) {
        let sigma = (p * (1.0 - p) / f64::from(n)).sqrt();
        assert!(
            (f64::from(*c) / f64::from(n) - p).abs() <= 5.0 * sigma + 1e-12,
            "{c} vs {p}"
        );
    }
}

#[test]
fn decoy_checks_never_error_when_honest() {
    for decoy in SingleQubitPrep::ALL {
        for sharer in SingleQubitPrep::ALL.into_iter().filter(|s| s.basis() == decoy.basis()) {
            let pair = tensor(&prepare_single(sharer), &prepare_single(decoy)).unwrap();
            let probs = pair.bell_probabilities(0, 1).unwrap();
            let err: f64 = BellOutcome::ALL
                .into_iter()
                .zip(probs)
                .filter(|(b, _)| decoy_check(decoy, sharer, *b) == CheckResult::Error)
                .map(|(_, p)| p)
                .sum();
            assert!(err < 1e-15, "{decoy:?}/{sharer:?}: {err}");
        }
    }
}

#[test]
fn bsm_pairs_uniform_in_x_rounds() {
    let config = ProtocolConfig {
        p: 1.0,
        m: 80_000,
        seed: 21,
        ..ProtocolConfig::default()
    };
    let t = run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
    let mut counts = [[0u32; 4]; 4];
    let mut n = 0u32;
    for r in t.rounds.iter().filter(|r| r.is_sifted(Basis::X)) {
        let d = BellOutcome::ALL.iter().position(|&b| b == r.bsm_d).unwrap();
        let e = BellOutcome::ALL.iter().position(|&b| b == r.bsm_e).unwrap();
        counts[d][e] += 1;
        n += 1;
    }
    let p = 1.0 / 16.0;
    let sigma = (p * (1.0 - p) / f64::from(n)).sqrt();
    for row in counts {
        for c in row {
            assert!((f64::from(c) / f64::from(n) - p).abs() <= 5.0 * sigma, "{counts:?}");
        }
    }
}

#[test]
fn error_rate_grows_with_noise() {
    let grid = [0.0, 0.05, 0.1];
    for component in 0..3 {
        let mut rates = Vec::new();
        for &x in &grid {
            let mut spec = [0.0; 3];
            spec[component] = x;
            let config = ProtocolConfig {
                p: 0.5,
                m: 20_000,
                seed: 31,
                noise_c: NoiseSpec::new(spec[0], spec[1], spec[2]).unwrap(),
                ..ProtocolConfig::default()
            };
            let t = run_campaign(&config, &AttackStrategy::NoAttack).unwrap();
            let n = t.report.combined.checked() as f64;
            rates.push((t.report.combined.rate().value().unwrap(), n));
        }
        for w in rates.windows(2) {
            let ((lo, n), (hi, _)) = (w[0], w[1]);
            let sigma = (hi.max(1e-3) / n).sqrt();
            assert!(hi >= lo - 3.0 * sigma, "component {component}: {rates:?}");
        }
        assert!(rates[2].0 > rates[0].0, "component {component}: {rates:?}");
    }
}
