mod common;

use common::*;
use cvarbound::circuit::LayeredCircuit;
use cvarbound::noise::PauliLindbladModel;
use cvarbound::pec::{pec_expectation, pec_sampling_distribution, qpd_inverse, sample_pec};
use cvarbound::{Error, Simulator};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Applies the signed quasi-probability inverse term by term.
fn apply_inverse(rho: &DMatrix<C>, model: &PauliLindbladModel) -> DMatrix<C> {
    let qpd = qpd_inverse(model).unwrap();
    let mut rho = rho.clone();
    for t in &qpd.terms {
        let p = pauli_dense(&t.pauli);
        rho = &rho * c(t.a_identity) + &p * &rho * &p * c(t.a_pauli);
    }
    rho
}

/// `Λ⁻¹ ∘ Λ` is the identity superoperator: checked on every matrix unit.
#[test]
fn inverse_composed_with_noise_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=2 {
        let dim = 1 << n;
        for _ in 0..50 {
            let m = random_model(&mut rng, n, 6, 0.3);
            let qpd = qpd_inverse(&m).unwrap();
            assert!((qpd.gamma - m.gamma()).abs() <= 1e-12 * m.gamma());
            for t in &qpd.terms {
                assert!((t.a_identity + t.a_pauli - 1.0).abs() < 1e-12);
                assert!((t.p_identity + t.p_pauli - 1.0).abs() < 1e-15);
            }
            for i in 0..dim {
                for j in 0..dim {
                    let mut unit = DMatrix::zeros(dim, dim);
                    unit[(i, j)] = c(1.0);
                    let back = apply_inverse(&apply_model(&unit, &m, |w| w), &m);
                    assert!(max_abs_diff(&back, &unit) < 1e-10);
                }
            }
        }
    }
}

/// The sign-stripped mixture matches the dense oracle and dominates `p/γ`.
#[test]
fn pec_mixture_dominates_ideal_over_gamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sim = Simulator::default();
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let layers = rng.random_range(1..=5);
        let circuit = random_circuit(&mut rng, n, layers, 4, 0.2);
        let got = pec_sampling_distribution(&sim, &circuit).unwrap();
        let oracle = diag(&noisy_rho_with(&circuit, |w| w * w + (1.0 - w) * (1.0 - w)));
        let ideal = ideal_probs(&circuit);
        let gamma = circuit.total_gamma();
        for ((g, o), p) in got.probs().iter().zip(&oracle).zip(&ideal) {
            assert!((g - o).abs() < 1e-12);
            assert!(g - p / gamma >= -1e-12);
        }
    }
}

#[test]
fn signed_estimator_is_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sim = Simulator::default();
    let circuit = random_circuit(&mut rng, 4, 3, 4, 0.15);
    let h = |x: u128| x.count_ones() as f64 - 1.5 * (x & 1) as f64;
    let ideal: f64 = ideal_probs(&circuit)
        .iter()
        .enumerate()
        .map(|(x, p)| p * h(x as u128))
        .sum();
    let noisy: f64 = noisy_probs(&circuit)
        .iter()
        .enumerate()
        .map(|(x, p)| p * h(x as u128))
        .sum();
    let est = pec_expectation(&sim, &circuit, h, 400_000, 11).unwrap();
    assert!((est.gamma - circuit.total_gamma()).abs() < 1e-12 * est.gamma);
    let z = (est.estimate - ideal) / est.stderr;
    assert!(
        z.abs() < 4.0,
        "estimate {} vs ideal {ideal}, z = {z}",
        est.estimate
    );
    // the bias it removes is resolvable at this shot count
    assert!(
        (noisy - ideal).abs() > 6.0 * est.stderr,
        "noisy {noisy}, ideal {ideal}"
    );
    assert!(est.negative_fraction > 0.0 && est.negative_fraction < 0.5);
    let again = pec_expectation(&sim, &circuit, h, 400_000, 11).unwrap();
    assert_eq!(est, again);
}

#[test]
fn pec_samples_follow_the_mixture() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sim = Simulator::default();
    let circuit = random_circuit(&mut rng, 4, 4, 4, 0.2);
    let exact = pec_sampling_distribution(&sim, &circuit).unwrap();
    let s = sample_pec(&sim, &circuit, 500_000, 5).unwrap();
    let tv: f64 = exact
        .probs()
        .iter()
        .enumerate()
        .map(|(x, p)| (p - *s.counts.get(&(x as u128)).unwrap_or(&0) as f64 / s.shots as f64).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.006, "TV {tv}");
}

#[test]
fn infinite_rate_layers_are_rejected() {
    let mut c = LayeredCircuit::new(2);
    let m = PauliLindbladModel::new(2, vec![("ZZ".parse().unwrap(), f64::INFINITY)]).unwrap();
    c.push_cnot(vec![(0, 1)], Some(m), None).unwrap();
    let sim = Simulator::default();
    assert!(matches!(
        pec_sampling_distribution(&sim, &c),
        Err(Error::NonInvertible(_))
    ));
    assert!(pec_expectation(&sim, &c, |_| 1.0, 10, 0).is_err());
}
