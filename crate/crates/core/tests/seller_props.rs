use auctionlab_core::comp::Competition;
use auctionlab_core::game::{best_response, TwoStageProcess};
use auctionlab_core::seller::{erm_reserve, erm_theorem5_experiment, optimal_reserve, summarize, EpsSchedule, ErmExperiment};
use auctionlab_core::{Distribution, Strategy as BidStrategy};
use proptest::prelude::*;

fn bids() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![0.0..5.0f64, (0u8..10).prop_map(|k| k as f64 * 0.5)], 1..60)
}

/// Revenue-maximizing sample index over all candidate prices, by enumeration.
fn brute_index(bids: &[f64]) -> usize {
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by(|&i, &j| bids[i].total_cmp(&bids[j]).then(i.cmp(&j)));
    let mut best = (f64::NEG_INFINITY, 0);
    for &i in &order {
        let v = bids[i] * bids.iter().filter(|&&b| b >= bids[i]).count() as f64;
        if v > best.0 * (1.0 + 1e-12) || best.0 == f64::NEG_INFINITY {
            best = (v, i);
        }
    }
    best.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn duplication_invariant(b in bids(), k in 2usize..5) {
        let dup: Vec<f64> = b.iter().flat_map(|&x| std::iter::repeat(x).take(k)).collect();
        prop_assert_eq!(erm_reserve(&b).unwrap(), erm_reserve(&dup).unwrap());
    }

    #[test]
    fn never_above_max(b in bids()) {
        let m = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(erm_reserve(&b).unwrap() <= m);
    }

    #[test]
    fn matches_enumeration(b in bids()) {
        prop_assert_eq!(erm_reserve(&b).unwrap(), b[brute_index(&b)]);
    }

    #[test]
    fn monotone_relabeling(b in bids(), a in 0.1..3.0f64, c in 0.0..2.0f64, p in 0.5..2.0f64) {
        let pos: Vec<f64> = b.iter().map(|x| x + 1e-3).collect();
        let g = |x: f64| a * x.powf(p) + c;
        let mapped: Vec<f64> = pos.iter().map(|&x| g(x)).collect();
        let i = brute_index(&mapped);
        prop_assert_eq!(erm_reserve(&mapped).unwrap(), mapped[i]);
        prop_assert_eq!(g(pos[i]), mapped[i]);
    }
}

#[test]
fn best_response_never_raises_revenue() {
    let u = Distribution::uniform(0.0, 1.0).unwrap();
    let e = Distribution::exponential(1.0, None).unwrap();
    for (law, h) in [(u.clone(), None), (u.clone(), Some(u.clone())), (e.clone(), None)] {
        let truthful = optimal_reserve(&BidStrategy::truthful(law.clone()).pushforward()).attained_revenue;
        for alpha in [0.0, 0.3, 0.6, 0.9] {
            let p = TwoStageProcess::new(Competition::law(law.clone()), h.clone(), law.clone(), alpha).unwrap();
            let br = best_response(&p, 60).unwrap();
            let s = BidStrategy::new(
                auctionlab_core::StrategyKind::DoubleThreshold { x0: br.x0, x1: br.x1 },
                law.clone(),
            )
            .unwrap();
            let rev = optimal_reserve(&s.pushforward()).attained_revenue;
            assert!(rev <= truthful + 1e-9, "alpha {alpha}: {rev} > {truthful}");
        }
    }
}

fn experiment(schedule: EpsSchedule) -> ErmExperiment {
    ErmExperiment {
        dist: Distribution::uniform(0.0, 1.0).unwrap(),
        r: 0.5,
        schedule,
        n_grid: vec![100, 1000, 10_000],
        delta: 0.05,
        trials: 200,
        seed: 5,
    }
}

#[test]
fn lifted_threshold_pins_erm_reserve_low() {
    let sums = summarize(&erm_theorem5_experiment(&experiment(EpsSchedule::Power { eta: 0.1 })).unwrap());
    for s in &sums {
        assert!(s.ok, "{s:?}");
    }
    assert!(sums[2].median_x_hat < sums[0].median_x_hat);
}

#[test]
fn plain_threshold_leaves_erm_reserve_high() {
    let lifted = summarize(&erm_theorem5_experiment(&experiment(EpsSchedule::Power { eta: 0.1 })).unwrap());
    let plain = summarize(&erm_theorem5_experiment(&experiment(EpsSchedule::Zero)).unwrap());
    for (l, p) in lifted.iter().zip(&plain) {
        assert!(p.median_x_hat > l.median_x_hat, "n={}: {} vs {}", p.n, p.median_x_hat, l.median_x_hat);
    }
    assert!(plain[2].median_x_hat > 0.1);
}

#[test]
fn deterministic_given_seed() {
    let e = experiment(EpsSchedule::Power { eta: 0.1 });
    assert_eq!(erm_theorem5_experiment(&e).unwrap(), erm_theorem5_experiment(&e).unwrap());
}
