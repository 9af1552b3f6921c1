use auctionlab_core::dist::quasi_concavity;
use auctionlab_core::numerics::linspace;
use auctionlab_core::rng;
use auctionlab_core::strategy::lower_threshold_bound;
use auctionlab_core::{Distribution, Strategy as BidStrategy, StrategyKind};
use proptest::prelude::*;
use rand::Rng;

fn base() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0.0..1.0f64, 0.5..2.0f64).prop_map(|(a, w)| Distribution::uniform(a, a + w).unwrap()),
        (0.3..3.0f64).prop_map(|rate| Distribution::exponential(rate, None).unwrap()),
        (-0.3..0.3f64, 0.2..0.5f64).prop_map(|(mu, s)| {
            Distribution::truncated_log_normal(mu, s, (mu - 3.0 * s).exp(), (mu + 3.0 * s).exp()).unwrap()
        }),
    ]
}

/// A feasible double-threshold strategy: `x1` above the monopoly price and
/// `x0` a fraction of the way up to its bound.
fn double_threshold() -> impl Strategy<Value = BidStrategy> {
    (base(), 0.05..0.9f64, 0.0..=1.0f64).prop_map(|(d, t1, t0)| {
        let mp = d.monopoly_price().unwrap();
        let x1 = mp + t1 * (d.quantile(0.99) - mp);
        let bar = lower_threshold_bound(&d, x1);
        let x0 = d.lo() + t0 * (bar - d.lo());
        BidStrategy::new(StrategyKind::DoubleThreshold { x0, x1 }, d).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn pushforward_identity(s in double_threshold(), u in 0.001..0.999f64) {
        let x = s.base().quantile(u);
        let bd = s.pushforward();
        prop_assert!((bd.cdf(s.bid_unchecked(x)) - s.base().cdf(x)).abs() < 1e-9);
    }

    #[test]
    fn flat_revenue_on_window(s in double_threshold()) {
        let StrategyKind::DoubleThreshold { x0, x1 } = s.kind() else { unreachable!() };
        prop_assume!(x1 > x0);
        let bd = s.pushforward();
        for x in linspace(x0, x1, 999).into_iter().skip(1) {
            let b = s.bid_unchecked(x);
            prop_assert!((b * bd.sf(b) - s.level()).abs() < 1e-9);
        }
    }

    #[test]
    fn overbids_below_bound_shades_above(s in double_threshold(), u in 0.0..1.0f64) {
        let StrategyKind::DoubleThreshold { x0, x1 } = s.kind() else { unreachable!() };
        let x = s.base().quantile(u);
        let b = s.bid(x).unwrap();
        let bar = lower_threshold_bound(s.base(), x1);
        if x >= x0 && x <= bar {
            prop_assert!(b >= x - 1e-9);
        } else if x > bar && x <= x1 {
            prop_assert!(b <= x + 1e-9);
        } else {
            prop_assert_eq!(b, x);
        }
    }

    #[test]
    fn bid_revenue_quasi_concave(s in double_threshold()) {
        let bd = s.pushforward();
        let (lo, hi) = bd.support();
        let bs = linspace(lo, hi, 2000);
        let rev: Vec<f64> = bs.iter().map(|&b| bd.revenue(b)).collect();
        prop_assert!(quasi_concavity(&bs, &rev).quasi_concave);
    }
}

#[test]
fn sampled_bids_match_bid_law() {
    let n = 100_000;
    let laws = [
        Distribution::uniform(0.0, 1.0).unwrap(),
        Distribution::exponential(1.0, None).unwrap(),
    ];
    for (i, d) in laws.into_iter().enumerate() {
        let mp = d.monopoly_price().unwrap();
        let x1 = d.quantile(0.8).max(mp);
        let x0 = 0.5 * lower_threshold_bound(&d, x1);
        let strategies = [
            BidStrategy::new(StrategyKind::DoubleThreshold { x0, x1 }, d.clone()).unwrap(),
            BidStrategy::new(StrategyKind::EpsThreshold { r: mp, eps: 0.05 * mp }, d.clone()).unwrap(),
        ];
        for (j, s) in strategies.iter().enumerate() {
            let mut g = rng::stream(99, rng::key(i as u64, j as u64));
            let mut bids: Vec<f64> = (0..n).map(|_| s.bid_unchecked(d.quantile(g.gen::<f64>()))).collect();
            bids.sort_by(f64::total_cmp);
            let bd = s.pushforward();
            let ks = bids
                .iter()
                .enumerate()
                .map(|(k, &b)| {
                    let c = bd.cdf(b);
                    (c - k as f64 / n as f64).abs().max(((k + 1) as f64 / n as f64 - c).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 2.0 / (n as f64).sqrt(), "law {i}, strategy {j}: KS distance {ks}");
        }
    }
}

fn virtual_value_gap(f: &Distribution, g: &Distribution, r: f64) -> f64 {
    linspace(f.lo() + 1e-9, r, 400)
        .iter()
        .map(|&x| (f.virtual_value(x).unwrap() - g.virtual_value(x).unwrap()).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn misestimated_virtual_value(r in 0.2..0.8f64, e in 0.0..0.5f64, w in 0.8..1.3f64, t in 0.01..0.99f64) {
        let f = Distribution::uniform(0.0, 1.0).unwrap();
        let g = Distribution::uniform(0.0, w.max(1.0)).unwrap();
        let eps = e * r;
        let s = BidStrategy::new(StrategyKind::EpsThreshold { r, eps }, f.clone()).unwrap();
        let x = t * r;
        let v = s.perceived_virtual_value(&g, x).unwrap();
        let slope = s.bid_derivative(x).unwrap();
        let exact = eps - slope * (f.virtual_value(x).unwrap() - g.virtual_value(x).unwrap());
        prop_assert!((v - exact).abs() < 1e-9);
        let delta = virtual_value_gap(&f, &g, r);
        prop_assert!(v >= eps - delta * slope - 1e-9);
        if slope <= (r - eps).max(1.0) {
            prop_assert!(v >= eps - delta * (r - eps).max(1.0) - 1e-9);
        }
    }
}

#[test]
fn misestimation_bound_needs_small_slope() {
    let f = Distribution::uniform(0.0, 1.0).unwrap();
    let g = Distribution::uniform(0.0, 1.1).unwrap();
    let s = BidStrategy::new(StrategyKind::EpsThreshold { r: 0.8, eps: 0.02 }, f.clone()).unwrap();
    let v = s.perceived_virtual_value(&g, 0.8).unwrap();
    assert!((v - (0.02 - 3.9 * 0.1)).abs() < 1e-9);
    assert!(v < 0.02 - 0.1 * 1.0);
}
