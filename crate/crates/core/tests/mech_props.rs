use auctionlab_core::mech::{compare_all, lazy_utilities, myerson_utilities, Mechanism};
use auctionlab_core::Distribution;

fn laws() -> Vec<Distribution> {
    vec![
        Distribution::uniform(0.0, 1.0).unwrap(),
        Distribution::uniform(1.0, 3.0).unwrap(),
        Distribution::exponential(1.0, None).unwrap(),
        Distribution::exponential(2.5, None).unwrap(),
        Distribution::truncated_log_normal(0.0, 0.4, 0.3, 3.5).unwrap(),
    ]
}

#[test]
fn uplift_ordering() {
    for law in laws() {
        for k in [2, 3, 4] {
            let rows = compare_all(k, &law, true).unwrap();
            assert_eq!(rows.iter().map(|r| r.mechanism).collect::<Vec<_>>(), [Mechanism::Lazy, Mechanism::Myerson, Mechanism::Eager]);
            assert!(rows[1].uplift_abs >= rows[0].uplift_abs - 1e-9);
            assert!(rows[2].uplift_abs >= rows[0].uplift_abs - 1e-9);
        }
    }
}

#[test]
fn truthful_myerson_equals_lazy() {
    for law in laws() {
        for k in [2, 3, 5] {
            let (m, _) = myerson_utilities(k, &law).unwrap();
            let (l, _) = lazy_utilities(k, &law).unwrap();
            assert!((m - l).abs() < 1e-9, "{law:?}, K={k}");
        }
    }
}

#[test]
fn relative_uplift_scale_free() {
    let a = compare_all(2, &Distribution::uniform(0.0, 1.0).unwrap(), true).unwrap();
    let b = compare_all(2, &Distribution::uniform(0.0, 2.0).unwrap(), true).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.uplift_rel - y.uplift_rel).abs() < 1e-9);
        assert!((2.0 * x.uplift_abs - y.uplift_abs).abs() < 1e-9);
    }
}

#[test]
fn lazy_uplift_vanishes_with_many_bidders() {
    let law = Distribution::uniform(0.0, 1.0).unwrap();
    let ups: Vec<f64> = [2, 5, 10, 20]
        .iter()
        .map(|&k| {
            let (t, s) = lazy_utilities(k, &law).unwrap();
            s - t
        })
        .collect();
    assert!(ups.windows(2).all(|w| w[1] < w[0]));
    assert!(ups[3] < 1e-6);
}
