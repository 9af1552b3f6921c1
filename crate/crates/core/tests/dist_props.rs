use auctionlab_core::numerics::{integrate, QuadOpts};
use auctionlab_core::Distribution;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0.0..2.0f64, 0.1..3.0f64).prop_map(|(a, w)| Distribution::uniform(a, a + w).unwrap()),
        (0.2..4.0f64).prop_map(|rate| Distribution::exponential(rate, None).unwrap()),
        (-0.5..0.5f64, 0.2..0.8f64).prop_map(|(mu, s)| {
            let lo = (mu - 3.0 * s).exp();
            let hi = (mu + 3.0 * s).exp();
            Distribution::truncated_log_normal(mu, s, lo, hi).unwrap()
        }),
        prop::collection::vec(0.05..1.0f64, 2..6).prop_map(|ws| {
            let total: f64 = ws.iter().sum();
            let mut acc = 0.0;
            let mut knots = vec![[0.0, 0.0]];
            for (i, w) in ws.iter().enumerate() {
                acc += w / total;
                knots.push([(i + 1) as f64 * 0.5, acc.min(1.0)]);
            }
            knots.last_mut().unwrap()[1] = 1.0;
            Distribution::piecewise(knots).unwrap()
        }),
    ]
}

fn regular() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0.0..2.0f64, 0.1..3.0f64).prop_map(|(a, w)| Distribution::uniform(a, a + w).unwrap()),
        (0.2..4.0f64).prop_map(|rate| Distribution::exponential(rate, None).unwrap()),
        (-0.5..0.5f64, 0.2..0.5f64).prop_map(|(mu, s)| {
            Distribution::truncated_log_normal(mu, s, (mu - 3.0 * s).exp(), (mu + 3.0 * s).exp()).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_integrates_to_one(d in family()) {
        let (lo, hi) = d.support();
        let mass = integrate(|x| d.pdf(x), lo, hi, &d.kinks(), QuadOpts::default());
        prop_assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn quantile_inverts_cdf(d in family(), u in 0.001..0.999f64) {
        let x = d.quantile(u);
        prop_assert!((d.cdf(x) - u).abs() < 1e-9);
        prop_assert!((d.cdf(x) + d.sf(x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monopoly_price_zeroes_virtual_value(d in regular()) {
        prop_assume!(d.is_regular());
        let mp = d.monopoly_price().unwrap();
        if mp > d.lo() {
            prop_assert!(d.virtual_value(mp).unwrap().abs() < 1e-8);
        } else {
            prop_assert!(d.virtual_value(mp).unwrap() >= -1e-8);
        }
    }

    #[test]
    fn revenue_slope(d in family(), t in 0.02..0.98f64) {
        let r = d.quantile(t);
        let h = 1e-6 * (d.hi() - d.lo());
        prop_assume!(d.kinks().iter().all(|k| (k - r).abs() > 10.0 * h));
        let fd = (d.revenue_curve(r + h) - d.revenue_curve(r - h)) / (2.0 * h);
        let exact = d.sf(r) - r * d.pdf(r);
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "{fd} vs {exact}");
    }

    #[test]
    fn hazard_identity(f in regular(), g in regular(), t in 0.05..0.95f64) {
        let lo = f.lo().max(g.lo());
        let hi = f.hi().min(g.hi());
        prop_assume!(hi > lo);
        let x = lo + t * (hi - lo);
        let lhs = g.inverse_hazard(x).unwrap() - f.inverse_hazard(x).unwrap();
        let rhs = f.virtual_value(x).unwrap() - g.virtual_value(x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }
}
