mod common;

use common::*;
use cvarbound::pauli::{
    commutes, conjugate_through_cnot_layer, diagonalize_group, group_commuting,
    qubit_wise_commutes, BasisRotation, PauliString,
};
use cvarbound::state::StateVector;
use cvarbound::{Gate1q, Simulator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pauli_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    let full = (1u128 << n) - 1;
    (any::<u128>(), any::<u128>(), any::<bool>())
        .prop_map(move |(x, z, s)| PauliString::from_masks(n, x & full, z & full, s).unwrap())
}

fn pairs_strategy(n: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 1..=n / 2)
        .prop_map(|(q, k)| q.chunks(2).take(k).map(|c| (c[0], c[1])).collect())
}

fn layer_dense(n: usize, pairs: &[(usize, usize)]) -> nalgebra::DMatrix<num_complex::Complex64> {
    pairs
        .iter()
        .fold(identity(1 << n), |acc, &(a, b)| cnot_dense(n, a, b) * acc)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn conjugation_preserves_commutation(
        (a, b, pairs) in (2usize..=12).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n), pairs_strategy(n)))
    ) {
        let ca = conjugate_through_cnot_layer(&a, &pairs).unwrap();
        let cb = conjugate_through_cnot_layer(&b, &pairs).unwrap();
        prop_assert_eq!(commutes(&a, &b).unwrap(), commutes(&ca, &cb).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conjugation_matches_dense_including_sign(
        (p, pairs) in (2usize..=5).prop_flat_map(|n| (pauli_strategy(n), pairs_strategy(n)))
    ) {
        let n = p.n();
        let u = layer_dense(n, &pairs);
        let expected = &u * pauli_dense(&p) * u.adjoint();
        let got = pauli_dense(&conjugate_through_cnot_layer(&p, &pairs).unwrap());
        prop_assert!(max_abs_diff(&expected, &got) < 1e-12);
    }

    #[test]
    fn commutation_matches_dense(
        (a, b) in (1usize..=4).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n)))
    ) {
        let (ma, mb) = (pauli_dense(&a), pauli_dense(&b));
        let dense = max_abs_diff(&(&ma * &mb), &(&mb * &ma)) < 1e-12;
        prop_assert_eq!(commutes(&a, &b).unwrap(), dense);
    }

    #[test]
    fn grouping_is_a_qubit_wise_partition(
        terms in (1usize..=6).prop_flat_map(|n| prop::collection::vec((pauli_strategy(n), -2.0f64..2.0), 1..20))
    ) {
        let groups = group_commuting(&terms).unwrap();
        let mut flat: Vec<String> = groups
            .iter()
            .flat_map(|g| g.members.iter().map(|(p, w)| format!("{p}:{w}")))
            .collect();
        let mut input: Vec<String> = terms.iter().map(|(p, w)| format!("{p}:{w}")).collect();
        flat.sort();
        input.sort();
        prop_assert_eq!(flat, input);
        for g in &groups {
            prop_assert!(g.is_valid());
            for (i, (a, _)) in g.members.iter().enumerate() {
                for (b, _) in &g.members[i + 1..] {
                    prop_assert!(qubit_wise_commutes(a, b).unwrap());
                }
            }
        }
    }
}

/// Rotating into each group's basis and summing parity-weighted probabilities
/// reproduces `⟨ψ|H|ψ⟩` from dense matrices.
#[test]
fn grouped_measurement_reproduces_dense_expectation() {
    let n = 4;
    let sim = Simulator::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let state = random_circuit(&mut rng, n, 3, 1, 0.0).without_noise();
        let terms: Vec<(PauliString, f64)> = (0..8)
            .map(|_| {
                let p = random_pauli(&mut rng, n, true);
                let signed = if rand::Rng::random::<bool>(&mut rng) {
                    p.negated()
                } else {
                    p
                };
                (signed, rand::Rng::random_range(&mut rng, -1.0..1.0))
            })
            .collect();

        let psi = sim.statevector(&state).unwrap();
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let h = terms
            .iter()
            .fold(nalgebra::DMatrix::zeros(16, 16), |acc, (p, w)| {
                acc + pauli_dense(p) * c(*w)
            });
        let dense = (v.adjoint() * &h * &v)[(0, 0)].re;

        let mut grouped = 0.0;
        for g in group_commuting(&terms).unwrap() {
            let d = diagonalize_group(&g).unwrap();
            let mut rot = state.clone();
            for (q, r) in d.rotation.iter().enumerate() {
                match r {
                    BasisRotation::I => {}
                    BasisRotation::H => {
                        rot.push_single(vec![(q, Gate1q::H)]).unwrap();
                    }
                    BasisRotation::HSdg => {
                        rot.push_single(vec![(q, Gate1q::Sdg)]).unwrap();
                        rot.push_single(vec![(q, Gate1q::H)]).unwrap();
                    }
                }
            }
            let mut phi = StateVector::zero(n).unwrap();
            phi.apply_circuit(&rot).unwrap();
            grouped += phi
                .probabilities()
                .iter()
                .enumerate()
                .map(|(x, p)| p * d.value(x as u128))
                .sum::<f64>();
        }
        assert!((grouped - dense).abs() < 1e-10, "{grouped} vs {dense}");
    }
}

#[test]
fn label_round_trip_and_y_convention() {
    let p: PauliString = "-XIYZ".parse().unwrap();
    assert_eq!(p.to_string(), "-XIYZ");
    assert_eq!(serde_json::to_string(&p).unwrap(), "\"-XIYZ\"");
    // Y = i·X·Z, so it must be the Hermitian Pauli Y.
    let y: PauliString = "Y".parse().unwrap();
    let x: PauliString = "X".parse().unwrap();
    let z: PauliString = "Z".parse().unwrap();
    let i = num_complex::Complex64::new(0.0, 1.0);
    assert!(max_abs_diff(&pauli_dense(&y), &(pauli_dense(&x) * pauli_dense(&z) * i)) < 1e-15);
    assert!("XQ".parse::<PauliString>().is_err());
}
