use fibtrace::bands::{
    bands_csv, classify_bands, compute_bands, fib, koebe_radius_bounds, level_word, monotonicity_failures,
    root_derivatives, twisted_eigen_roots, BandType,
};
use fibtrace::trace::trace_sequence;
use fibtrace::LogScalar;

#[test]
fn counts_nesting_and_root_values() {
    for lambda in [0.5, 2.0, 8.0] {
        let h = compute_bands(lambda, 12).unwrap();
        for k in 0..=12 {
            let lv = h.level(k).unwrap();
            assert_eq!(lv.len() as u64, fib(k));
            assert!(lv.windows(2).all(|w| w[0].right < w[1].left), "lambda={lambda} k={k} overlap");
            for b in lv {
                assert!(b.left <= b.root && b.root <= b.right);
                if k >= 1 {
                    let x = trace_sequence(lambda, b.root.to_f64(), k, false).unwrap().x(k as isize);
                    assert!(x.abs() < 1e-6, "x_k(root) = {x}");
                }
            }
        }
        // sigma_{k+1} lies in sigma_k union sigma_{k-1}
        for k in 2..12 {
            for b in h.level(k + 1).unwrap() {
                let inside = |lvl: usize| h.level(lvl).unwrap().iter().any(|c| c.contains(b));
                assert!(inside(k) || inside(k - 1), "lambda={lambda} level {} band {}", k + 1, b.index);
            }
        }
    }
}

#[test]
fn band_edges_sit_at_trace_one() {
    let h = compute_bands(3.0, 9).unwrap();
    for b in h.level(9).unwrap() {
        for edge in [b.left.to_f64(), b.right.to_f64()] {
            let x = trace_sequence(3.0, edge, 9, false).unwrap().x(9);
            assert!((x.abs() - 1.0).abs() < 1e-6, "{x}");
        }
    }
}

#[test]
fn eigen_roots_match() {
    let h = compute_bands(1.5, 10).unwrap();
    for k in 1..=10 {
        let ev = twisted_eigen_roots(1.5, k).unwrap();
        for (a, b) in ev.iter().zip(h.level(k).unwrap()) {
            assert!((a - b.root.to_f64()).abs() < 1e-9);
        }
    }
    assert!(twisted_eigen_roots(1.0, 30).is_err());
    assert_eq!(level_word(2.0, 4).len() as u64, fib(4));
}

#[test]
fn types_at_strong_coupling() {
    let h = classify_bands(compute_bands(6.0, 12).unwrap()).unwrap();
    for k in 2..=12 {
        let lv = h.level(k).unwrap();
        let a = lv.iter().filter(|b| b.band_type == BandType::A).count() as u64;
        let b = lv.iter().filter(|b| b.band_type == BandType::B).count() as u64;
        assert_eq!(a + b, fib(k));
        assert_eq!(a, fib(k - 2), "k={k}");
        assert!(lv.iter().all(|b| b.parent.is_some()));
    }
    assert!(classify_bands(compute_bands(2.0, 6).unwrap()).is_err());
}

#[test]
fn derivatives_and_monotonicity() {
    let h = compute_bands(2.0, 12).unwrap();
    let d = root_derivatives(&h, 12).unwrap();
    assert_eq!(d.roots.len() as u64, fib(12));
    assert!(d.min_log <= d.max_log && d.min_log > 0.0);
    assert!(monotonicity_failures(&h, 12, 8).is_empty());
    assert!(koebe_radius_bounds(10.0, 2.0, LogScalar::ONE).is_err());
    let csv = bands_csv(&h);
    let total: u64 = (0..=12).map(fib).sum();
    assert_eq!(csv.lines().count() as u64, total + 1);
}
