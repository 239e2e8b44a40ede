use fibtrace::bands::{classify_bands, compute_bands};
use fibtrace::thermo::{
    bowen_root, equidistribution_check, golden_mean, lineage_word, parry_measure, pressure_csv, pressure_curve,
    pressure_from_logs, top_entropy, ThermoError,
};
use fibtrace::trace::LOG_PHI;
use proptest::prelude::*;

fn random_matrix(bits: &[bool], n: usize) -> Vec<Vec<u8>> {
    (0..n).map(|i| (0..n).map(|j| u8::from(bits[i * n + j] || j == (i + 1) % n)).collect()).collect()
}

proptest! {
    // a cycle plus random edges is irreducible
    #[test]
    fn parry_is_stochastic_and_stationary(bits in proptest::collection::vec(any::<bool>(), 16)) {
        let a = random_matrix(&bits, 4);
        let m = parry_measure(&a).unwrap();
        for i in 0..4 {
            let row: f64 = m.transition[i].iter().sum();
            prop_assert!((row - 1.0).abs() < 1e-12);
            let back: f64 = (0..4).map(|j| m.stationary[j] * m.transition[j][i]).sum();
            prop_assert!((back - m.stationary[i]).abs() < 1e-12);
        }
        prop_assert!((top_entropy(&a).unwrap() - m.perron_value.ln()).abs() < 1e-12);
    }

    #[test]
    fn pressure_is_decreasing_in_t(t in -1.0f64..2.0, dt in 0.01f64..1.0) {
        let logs = [1.0, 1.5, 2.0, 3.5];
        prop_assert!(pressure_from_logs(&logs, 3, t + dt) < pressure_from_logs(&logs, 3, t));
    }
}

#[test]
fn golden_mean_values() {
    let m = parry_measure(&golden_mean()).unwrap();
    assert!((m.stationary[0] - 0.723_606_797_749_979).abs() < 1e-12);
    assert!((top_entropy(&golden_mean()).unwrap() - LOG_PHI).abs() < 1e-14);
    assert!(!m.admissible(&[1, 1]));
    assert!(matches!(parry_measure(&[vec![1, 0], vec![0, 1]]), Err(ThermoError::NotTransitive)));
    assert!(matches!(parry_measure(&[vec![2]]), Err(ThermoError::NotBinary)));
}

#[test]
fn curves_and_roots() {
    let h = compute_bands(4.0, 12).unwrap();
    let ts: Vec<f64> = (0..=30).map(|i| -1.0 + 0.1 * f64::from(i)).collect();
    let c = pressure_curve(&h, 12, &ts).unwrap();
    assert!(c.is_convex_decreasing());
    assert!(c.gamma_intercept < c.tangent_intercept && c.tangent_intercept < c.alpha_intercept);
    assert!(c.bowen_root > c.gamma_intercept && c.bowen_root < c.alpha_intercept);
    assert!(pressure_csv(&c).lines().count() == ts.len() + 2);
    let r = bowen_root(|t| 1.0 - t).unwrap();
    assert!((r - 1.0).abs() < 1e-12);
    assert!(bowen_root(|_| 1.0).is_none());
}

#[test]
fn lineage_words_are_admissible() {
    let h = classify_bands(compute_bands(6.0, 12).unwrap()).unwrap();
    let g = parry_measure(&golden_mean()).unwrap();
    let mut words = Vec::new();
    for b in h.level(12).unwrap() {
        let w = lineage_word(&h, 12, b.index).unwrap();
        assert!(g.admissible(&w));
        words.push(w);
    }
    words.sort();
    words.dedup();
    assert_eq!(words.len(), h.level(12).unwrap().len());
    assert!(matches!(lineage_word(&h, 12, 0), Err(ThermoError::BadIndex { .. })));
    let eq = equidistribution_check(&h, 12, 3).unwrap();
    assert!((eq.total_frequency - 1.0).abs() < 1e-12);
    assert!(eq.l1 < 0.1);
    let weak = compute_bands(2.0, 6).unwrap();
    assert!(equidistribution_check(&weak, 6, 3).is_err());
}
