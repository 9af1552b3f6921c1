use auctionlab_core::oracle::{simulate, ReserveRule, SimConfig, SimMechanism};
use auctionlab_core::{Distribution, Strategy, StrategyKind};

fn config(seed: u64, mechanism: SimMechanism) -> SimConfig {
    let u = Distribution::uniform(0.0, 1.0).unwrap();
    SimConfig {
        n_auctions: 200_000,
        seed,
        mechanism,
        strategies: vec![
            Strategy::new(StrategyKind::DoubleThreshold { x0: 0.1, x1: 0.7 }, u.clone()).unwrap(),
            Strategy::truthful(u.clone()),
            Strategy::truthful(Distribution::exponential(2.0, None).unwrap()),
        ],
        phase1_reserve: None,
        phase2_reserve_rule: ReserveRule::MonopolyOfBids,
    }
}

const MECHANISMS: [SimMechanism; 3] = [SimMechanism::LazySecondPrice, SimMechanism::Eager, SimMechanism::Myerson];

#[test]
fn bit_identical_reruns() {
    for m in MECHANISMS {
        let a = serde_json::to_string(&simulate(&config(1, m)).unwrap()).unwrap();
        let b = serde_json::to_string(&simulate(&config(1, m)).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn disjoint_seeds_agree() {
    for m in MECHANISMS {
        let a = simulate(&config(2, m)).unwrap();
        let b = simulate(&config(3, m)).unwrap();
        assert_ne!(a, b);
        for (x, y) in a.bidders.iter().zip(&b.bidders) {
            let se = (x.se_utility.powi(2) + y.se_utility.powi(2)).sqrt();
            assert!((x.mean_utility - y.mean_utility).abs() <= 6.0 * se);
        }
    }
}

#[test]
fn accounting_identity() {
    for m in MECHANISMS {
        let r = simulate(&config(4, m)).unwrap();
        let wins: f64 = r.bidders.iter().map(|b| b.win_rate).sum();
        assert!(wins <= 1.0 + 1e-12);
        for b in &r.bidders {
            assert!((b.mean_utility + b.mean_payment - b.mean_gross).abs() < 1e-12);
            assert!(b.mean_payment >= 0.0);
        }
    }
}

#[test]
fn independent_of_worker_count() {
    let c = config(5, SimMechanism::Myerson);
    let many = simulate(&c).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| simulate(&c).unwrap());
    assert_eq!(many, one);
}
