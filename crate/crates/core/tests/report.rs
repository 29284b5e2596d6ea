use cvarbound::cvar::{cvar_upper_exact, FiniteDistribution};
use cvarbound::problems::{
    brute_force, build_qaoa, maxcut_3regular, HeavyHexLattice, HeavyHexShape, QaoaLayout,
    QaoaParams,
};
use cvarbound::report::{
    bound_report, derive_overheads, min_cnot_fidelity, min_layer_fidelity, twirl_compare,
    LayerFidelity, OverheadLadder,
};
use cvarbound::{PerCnotNoise, Simulator};

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn forty_qubit_layers() -> Vec<LayerFidelity> {
    vec!["0.7686:20".parse().unwrap(), "0.7444:19".parse().unwrap()]
}

#[test]
fn forty_qubit_overheads() {
    let one = derive_overheads(&forty_qubit_layers(), 461).unwrap();
    let two = derive_overheads(&forty_qubit_layers(), 922).unwrap();
    assert!((one.gamma_cx - 1.0290).abs() < 5e-5);
    assert!(rel(one.sqrt_gamma, 735.0) < 0.01 && rel(one.alpha, 1.361e-3) < 0.01);
    assert!(rel(two.sqrt_gamma, 540_275.9) < 0.01 && rel(two.alpha, 1.851e-6) < 0.01);
    // doubling the circuit squares the overhead
    assert!(rel(two.sqrt_gamma, one.sqrt_gamma.powi(2)) < 1e-12);
    for (o, a_prime, want) in [(one, 5.180e-3, 1.0231), (two, 1.071e-4, 1.0200)] {
        assert!((o.alpha * o.sqrt_gamma - 1.0).abs() < 1e-12);
        let cal = o.with_calibration(a_prime).unwrap();
        assert!((cal.gamma_prime_cx.unwrap() - want).abs() < 1e-3);
        // a calibrated α′ above α means the effective noise is weaker than the model's
        assert!(cal.gamma_prime_cx.unwrap() < cal.gamma_cx);
        assert!(cal.to_table().contains("gamma'_CX"));
    }
}

#[test]
fn heavy_hex_overheads() {
    let lat = HeavyHexLattice::new(HeavyHexShape::Eagle127).unwrap();
    let sizes: Vec<u64> = lat.color_classes().iter().map(|c| c.len() as u64).collect();
    assert_eq!(sizes.iter().sum::<u64>(), 144);
    let layers: Vec<LayerFidelity> = [0.056926, 0.029630, 0.167959]
        .iter()
        .zip(&sizes)
        .map(|(&lf, &cnots)| LayerFidelity { lf, cnots })
        .collect();
    let rows = [
        (1.246e7, 8.026e-8, 0.4602, 1.0054),
        (1.553e14, 6.441e-15, 0.1310, 1.0071),
        (1.935e21, 5.169e-22, 0.0305, 1.0081),
        (2.410e28, 4.149e-29, 0.0059, 1.0090),
        (3.003e35, 3.330e-36, 0.0011, 1.0096),
    ];
    for (p, (sg, alpha, a_prime, g_prime)) in (1u64..).zip(rows) {
        let o = derive_overheads(&layers, 288 * p).unwrap();
        assert!((o.f_cx - 0.944850).abs() < 1e-4);
        assert!((o.eplg - 0.055150).abs() < 1e-4);
        assert!((o.gamma_cx - 1.120146).abs() < 1e-4);
        assert!(
            rel(o.sqrt_gamma, sg) < 0.01,
            "p = {p}: {} vs {sg}",
            o.sqrt_gamma
        );
        assert!(
            rel(o.alpha, alpha) < 0.01,
            "p = {p}: {} vs {alpha}",
            o.alpha
        );
        // α′ is quoted to four decimals, which limits γ′ to about 1e-4
        let cal = o.with_calibration(a_prime).unwrap();
        assert!(
            (cal.gamma_prime_cx.unwrap() - g_prime).abs() < 2e-4,
            "p = {p}"
        );
    }
}

#[test]
fn thresholds_and_ladder() {
    for (p, want) in [(1, 0.7937), (2, 0.8909), (3, 0.9259)] {
        let lf = min_layer_fidelity(p).unwrap();
        assert!((lf - want).abs() < 5e-5);
        // three layers per round at the threshold leave exactly a factor 2 after p rounds
        assert!((lf.powi(3 * p as i32) - 0.5).abs() < 1e-12);
        let f = min_cnot_fidelity(p, 40).unwrap();
        assert!((f.powi(20 * 3 * p as i32) - 0.5).abs() < 1e-12);
    }
    assert!(min_layer_fidelity(0).is_err() && min_cnot_fidelity(1, 1).is_err());
    let l = OverheadLadder::new(4.0);
    assert_eq!((l.sqrt_gamma, l.gamma, l.gamma_squared), (2.0, 4.0, 16.0));
    assert!(derive_overheads(&[LayerFidelity { lf: 1.2, cnots: 3 }], 10).is_err());
    assert!("0.9".parse::<LayerFidelity>().is_err());
}

/// On exact noisy frequencies the reported upper CVaR at `1/√γ` dominates the
/// noise-free mean of a maximization problem.
#[test]
fn bound_report_on_small_maxcut() {
    let (_, poly) = maxcut_3regular(10, 1).unwrap();
    let opt = brute_force(&poly).unwrap().best_value;
    let params = QaoaParams::new(vec![0.6], vec![0.3]).unwrap();
    let ideal_c = build_qaoa(&poly, &params, QaoaLayout::Generic).unwrap();
    let circuit = ideal_c
        .with_cnot_noise(&PerCnotNoise::new(0.004).unwrap())
        .unwrap();
    let sim = Simulator::default();
    let ideal = sim.ideal_distribution(&circuit).unwrap();
    let values: Vec<f64> = (0..1u128 << 10).map(|x| poly.evaluate_bits(x)).collect();
    let ideal_mean: f64 = ideal.probs().iter().zip(&values).map(|(p, v)| p * v).sum();
    let alpha = 1.0 / circuit.total_gamma().sqrt();

    let noisy = sim.noisy_distribution_exact(&circuit).unwrap();
    let exact = FiniteDistribution::new(
        values
            .iter()
            .copied()
            .zip(noisy.probs().iter().copied())
            .collect(),
    )
    .unwrap();
    assert!(cvar_upper_exact(&exact, alpha).unwrap() >= ideal_mean - 1e-12);

    let samples = noisy.sample(200_000, 3);
    let (r, cdf) = bound_report(
        &samples,
        &poly,
        alpha,
        Some(ideal_mean),
        Some(opt),
        Some(30),
    )
    .unwrap();
    assert_eq!(r.cvar_bound, r.upper_cvar);
    assert!(r.lower_cvar <= r.noisy_mean && r.noisy_mean <= r.upper_cvar);
    assert_eq!(r.reference_within_bounds, Some(true));
    assert!(r.ratio_best.unwrap() <= 1.0 && r.ratio_cvar.unwrap() <= r.ratio_best.unwrap());
    assert!(r.calibration.unwrap().alpha >= alpha * 0.9);
    assert!(cdf.trim_end().ends_with(",1") || cdf.trim_end().ends_with(",1.0"));
    assert!(r.to_table().contains("upper CVaR"));
}

#[test]
fn twirl_compare_agrees_under_pauli_noise() {
    let (_, poly) = maxcut_3regular(4, 0).unwrap();
    let params = QaoaParams::new(vec![0.5], vec![0.2]).unwrap();
    let circuit = build_qaoa(&poly, &params, QaoaLayout::Generic)
        .unwrap()
        .with_cnot_noise(&PerCnotNoise::new(0.01).unwrap())
        .unwrap();
    let sim = Simulator::default();
    let (cmp, a, b) =
        twirl_compare(&sim, &circuit, |x| poly.evaluate_bits(x), 100, 2_000, 7).unwrap();
    assert_eq!((a.total(), b.total()), (200_000, 200_000));
    assert!(cmp.total_variation < 0.02 && cmp.max_cdf_gap <= cmp.total_variation + 1e-12);
    let again = twirl_compare(&sim, &circuit, |x| poly.evaluate_bits(x), 100, 2_000, 7)
        .unwrap()
        .0;
    assert_eq!(cmp, again);
}
