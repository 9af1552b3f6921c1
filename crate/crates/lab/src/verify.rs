//! The acceptance suite. Each criterion collects named checks; a criterion
//! passes when all of its checks do and it finishes inside its time budget.

use std::fmt;
use std::time::{Duration, Instant};

use auctionlab_core::game::{
    best_response, critical_alpha, myerson_payment, nash_report, nash_threshold, utility_grad, utility_two_stage,
    TwoStageProcess,
};
use auctionlab_core::mech::{lazy_utilities, myerson_utilities, eager_utilities};
use auctionlab_core::oracle::{simulate, simulate_two_stage, ReserveRule, SimConfig, SimMechanism};
use auctionlab_core::rng;
use auctionlab_core::seller::{erm_theorem5_experiment, summarize, EpsSchedule, ErmExperiment};
use auctionlab_core::strategy::lower_threshold_bound;
use auctionlab_core::{Competition, Distribution, Strategy, StrategyKind};
use rand::Rng;

use crate::config::{VerifyConfig, DEFAULT_SEED};
use crate::LabError;

pub const ALL: [u32; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    /// Printed but never counted as a failure.
    pub informational: bool,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl CriterionReport {
    pub fn within_budget(&self) -> bool {
        self.budget.map_or(true, |b| self.elapsed <= b)
    }

    pub fn pass(&self) -> bool {
        self.informational || (self.within_budget() && self.checks.iter().all(|c| c.pass))
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.informational {
            "INFO"
        } else if self.pass() {
            "PASS"
        } else {
            "FAIL"
        };
        let budget = match self.budget {
            Some(b) => format!(", budget {:.0} s", b.as_secs_f64()),
            None => String::new(),
        };
        writeln!(f, "criterion {:>2} {status}  {} ({:.2} s{budget})", self.id, self.title, self.elapsed.as_secs_f64())?;
        for c in &self.checks {
            let mark = if self.informational {
                "    "
            } else if c.pass {
                "  ok"
            } else {
                "  XX"
            };
            writeln!(f, "  {mark} {}: {}", c.name, c.detail)?;
        }
        if !self.within_budget() {
            writeln!(f, "    XX over time budget")?;
        }
        Ok(())
    }
}

struct Suite {
    scale: f64,
    seed: u64,
    mc: usize,
    grid: usize,
}

struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn new() -> Self {
        Builder { checks: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    /// `|got - want| <= tol`.
    fn near(&mut self, name: impl Into<String>, got: f64, want: f64, tol: f64) {
        let err = (got - want).abs();
        self.push(name, err <= tol, format!("{got:.12} vs {want:.12} (|diff| {err:.2e}, tol {tol:.1e})"));
    }

    /// Simulated mean within `k` standard errors of the analytic value.
    fn within_se(&mut self, name: impl Into<String>, mc: f64, se: f64, exact: f64, k: f64) {
        let z = (mc - exact).abs() / se;
        self.push(name, (mc - exact).abs() <= k * se, format!("mc {mc:.6} ± {se:.1e} vs {exact:.6} (z = {z:.2})"));
    }

    fn fail(&mut self, name: impl Into<String>, err: impl fmt::Display) {
        self.push(name, false, format!("error: {err}"));
    }
}

fn u01() -> Distribution {
    Distribution::uniform(0.0, 1.0).expect("valid uniform")
}

fn exponential() -> Distribution {
    Distribution::exponential(1.0, None).expect("valid exponential")
}

fn lifted(law: &Distribution, r: f64) -> Strategy {
    Strategy::new(StrategyKind::EpsThreshold { r, eps: 0.0 }, law.clone()).expect("valid threshold")
}

fn sim(mechanism: SimMechanism, strategies: Vec<Strategy>, rule: ReserveRule, n: usize, seed: u64) -> SimConfig {
    SimConfig { n_auctions: n, seed, mechanism, strategies, phase1_reserve: None, phase2_reserve_rule: rule }
}

impl Suite {
    fn nash(&self, b: &mut Builder) {
        for (k, want) in [(2, 0.75), (3, 2.0 / 3.0), (4, 0.625), (5, 0.6)] {
            match nash_threshold(k, &u01()) {
                Ok(r) => b.near(format!("K={k}"), r, want, 1e-6 * self.scale),
                Err(e) => b.fail(format!("K={k}"), e),
            }
        }
    }

    fn myerson(&self, b: &mut Builder) {
        let (t, s) = match myerson_utilities(2, &u01()) {
            Ok(v) => v,
            Err(e) => return b.fail("analytic", e),
        };
        b.near("truthful", t, 1.0 / 12.0, 1e-9 * self.scale);
        b.near("thresholded", s, 7.0 / 48.0, 1e-9 * self.scale);
        let c = sim(
            SimMechanism::Myerson,
            vec![lifted(&u01(), 0.5), Strategy::truthful(u01())],
            ReserveRule::MonopolyOfBids,
            self.mc,
            self.seed ^ 2,
        );
        match simulate(&c) {
            Ok(r) => b.within_se("monte carlo", r.bidders[0].mean_utility, r.bidders[0].se_utility, s, 4.0 * self.scale),
            Err(e) => b.fail("monte carlo", e),
        }
    }

    fn lazy(&self, b: &mut Builder) {
        let (t, s) = match lazy_utilities(2, &u01()) {
            Ok(v) => v,
            Err(e) => return b.fail("analytic", e),
        };
        b.near("truthful vs 0.083", t, 0.083, 1e-3 * self.scale);
        b.near("thresholded vs 0.132", s, 0.132, 1e-3 * self.scale);
        b.near("closed form", s, 1.0 / 12.0 + 0.25 * (2f64.ln() - 0.5), 1e-9 * self.scale);
    }

    fn phase(&self, b: &mut Builder) {
        let g = Competition::law(u01());
        match critical_alpha(&g, &u01()) {
            Ok(p) => {
                b.near("alpha_c in [0.757, 0.767]", p.alpha_c, 0.762, 0.005 * self.scale);
                b.near("utilities agree at alpha_c", p.u_truthful_at_alpha_c, p.u_threshold_at_alpha_c, 1e-8 * self.scale);
            }
            Err(e) => b.fail("alpha_c", e),
        }
    }

    fn equivalence(&self, b: &mut Builder) {
        for (name, law) in [("uniform", u01()), ("exponential", exponential())] {
            for k in [2, 3] {
                match nash_report(k, &law) {
                    Ok(r) => {
                        b.near(format!("{name} K={k} revenue"), r.seller_revenue, r.no_reserve_revenue, 1e-8 * self.scale);
                        b.near(format!("{name} K={k} utility"), r.buyer_utility, r.no_reserve_utility, 1e-8 * self.scale);
                    }
                    Err(e) => b.fail(format!("{name} K={k}"), e),
                }
            }
        }
    }

    fn gradients(&self, b: &mut Builder) {
        let lognormal = Distribution::truncated_log_normal(0.0, 0.5, 0.2, 3.0).expect("valid lognormal");
        let cases = [
            ("uniform, H none", u01(), None),
            ("uniform, H uniform", u01(), Some(u01())),
            ("lognormal, H none", lognormal.clone(), None),
            ("lognormal, H uniform", lognormal, Some(Distribution::uniform(0.0, 3.0).expect("valid uniform"))),
        ];
        for (ci, (name, law, h)) in cases.into_iter().enumerate() {
            let mp = law.monopoly_price().expect("regular law");
            let mut g = rng::stream(self.seed ^ 6, ci as u64);
            let (mut worst, mut n) = (0.0f64, 0);
            while n < 100 {
                let alpha: f64 = g.gen();
                let x1 = mp + g.gen_range(0.02..0.95) * (law.quantile(0.98) - mp);
                let bar = lower_threshold_bound(&law, x1);
                let x0 = law.lo() + g.gen_range(0.02..0.98) * (bar - law.lo());
                let step = 1e-5 * (law.hi() - law.lo());
                if x0 - step < law.lo() || x0 + step > bar {
                    continue;
                }
                let p = TwoStageProcess::new(Competition::law(law.clone()), h.clone(), law.clone(), alpha).expect("alpha in range");
                let u = |a: f64, c: f64| utility_two_stage(a, c, &p).map(|v| v.u_total).unwrap_or(f64::NAN);
                let (d0, d1) = utility_grad(x0, x1, &p).unwrap_or((f64::NAN, f64::NAN));
                let f0 = (u(x0 + step, x1) - u(x0 - step, x1)) / (2.0 * step);
                let f1 = (u(x0, x1 + step) - u(x0, x1 - step)) / (2.0 * step);
                let scale = d0.abs().max(d1.abs()).max(1e-3);
                let err = ((d0 - f0).abs().max((d1 - f1).abs()) / scale).max(0.0);
                worst = if err.is_nan() { f64::NAN } else { worst.max(err) };
                n += 1;
            }
            b.push(name, worst <= 1e-5 * self.scale, format!("worst relative error {worst:.2e} over 100 points"));
        }
    }

    /// `x0*` on a phase weight, for the uniform law with a uniform phase-1 reserve.
    fn x0_star(&self, alpha: f64) -> Result<f64, LabError> {
        let p = TwoStageProcess::new(Competition::law(u01()), Some(u01()), u01(), alpha)?;
        Ok(best_response(&p, self.grid)?.x0)
    }

    fn regime(&self, b: &mut Builder) {
        let zero = 1e-9;
        let low: Vec<f64> = (0..=12).map(|i| 0.05 * i as f64).collect();
        let high = [0.9, 0.92, 0.94, 0.96, 0.98];
        let run = |grid: &[f64]| -> Result<Vec<f64>, LabError> { grid.iter().map(|&a| self.x0_star(a)).collect() };
        match run(&low) {
            Ok(x) => {
                let bad: Vec<String> = low.iter().zip(&x).filter(|(_, &v)| v > zero).map(|(a, v)| format!("{a:.2}->{v:.4}")).collect();
                b.push("x0* = 0 for alpha <= 0.6", bad.is_empty(), if bad.is_empty() { "13 grid points".into() } else { bad.join(", ") });
            }
            Err(e) => b.fail("x0* = 0 for alpha <= 0.6", e),
        }
        match run(&high) {
            Ok(x) => {
                let hit = high.iter().zip(&x).find(|(_, &v)| v > zero);
                b.push(
                    "x0* > 0 for some alpha >= 0.9",
                    hit.is_some(),
                    hit.map_or("none".into(), |(a, v)| format!("alpha {a:.2}: x0* = {v:.5}")),
                );
            }
            Err(e) => b.fail("x0* > 0 for some alpha >= 0.9", e),
        }
        // bisection on the first phase weight with a positive x0*
        let (mut a, mut c) = (0.6, 0.9);
        let mut ok = true;
        while c - a > 1e-3 {
            let m = 0.5 * (a + c);
            match self.x0_star(m) {
                Ok(v) if v > zero => c = m,
                Ok(_) => a = m,
                Err(e) => {
                    b.fail("switch point", e);
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let s = 0.5 * (a + c);
            b.near("switch point within 0.8 ± 0.05", s, 0.8, 0.05 * self.scale);
        }
    }

    fn erm(&self, b: &mut Builder) {
        let e = ErmExperiment {
            dist: u01(),
            r: 0.5,
            schedule: EpsSchedule::Power { eta: 0.1 },
            n_grid: vec![1_000, 10_000, 100_000],
            delta: 0.05,
            trials: 200,
            seed: self.seed ^ 8,
        };
        let sums = match erm_theorem5_experiment(&e) {
            Ok(rows) => summarize(&rows),
            Err(err) => return b.fail("experiment", err),
        };
        for s in &sums {
            let need = 1.0 - e.delta - s.delta1;
            b.push(
                format!("n={} hit rate", s.n),
                s.hit_rate >= need,
                format!("{:.3} >= {need:.3} (delta1 {:.3}), median x_hat {:.3e}", s.hit_rate, s.delta1, s.median_x_hat),
            );
        }
        let dec = sums.windows(2).all(|w| w[1].median_x_hat < w[0].median_x_hat);
        let med: Vec<String> = sums.iter().map(|s| format!("{:.3e}", s.median_x_hat)).collect();
        b.push("median x_hat strictly decreasing", dec, med.join(" > "));
    }

    fn cross_validation(&self, b: &mut Builder) {
        let u = u01();
        let k = 4.0 * self.scale;
        let n = self.mc;
        let seed = self.seed ^ 9;
        let analytic = |r: Result<(f64, f64), auctionlab_core::Error>| r.expect("regular law");
        let (lazy_t2, lazy_s2) = analytic(lazy_utilities(2, &u));
        let (_, lazy_s3) = analytic(lazy_utilities(3, &u));
        let (my_t, my_s) = analytic(myerson_utilities(2, &u));
        let (_, eager_s2) = analytic(eager_utilities(2, &u));
        let (eager_t3, _) = analytic(eager_utilities(3, &u));
        let e = exponential();
        let (_, exp_s) = analytic(lazy_utilities(2, &e));
        let e_mp = e.monopoly_price().expect("regular law");
        let dt = Strategy::new(StrategyKind::DoubleThreshold { x0: 0.0, x1: 0.75 }, u.clone()).expect("feasible");
        let truthful = Strategy::truthful(u.clone());
        let nash = nash_report(2, &u).expect("regular law");
        let pay = myerson_payment(&truthful, &Competition::law(u.clone()), 0.5).expect("regular law");
        let _ = lazy_t2;

        // (name, config, bidder, payment?, analytic)
        let singles: Vec<(&str, SimConfig, usize, bool, f64)> = vec![
            ("lazy truthful, reserve 0", sim(SimMechanism::LazySecondPrice, vec![truthful.clone(); 2], ReserveRule::FixedPrice(0.0), n, seed), 0, false, 1.0 / 6.0),
            ("lazy truthful, reserve 1/2", sim(SimMechanism::LazySecondPrice, vec![truthful.clone(); 2], ReserveRule::FixedPrice(0.5), n, seed + 1), 0, false, 1.0 / 12.0),
            ("myerson threshold", sim(SimMechanism::Myerson, vec![lifted(&u, 0.5), truthful.clone()], ReserveRule::MonopolyOfBids, n, seed + 2), 0, false, my_s),
            ("myerson truthful", sim(SimMechanism::Myerson, vec![truthful.clone(); 2], ReserveRule::MonopolyOfBids, n, seed + 3), 1, false, my_t),
            ("lazy threshold K=2", sim(SimMechanism::LazySecondPrice, vec![lifted(&u, 0.5), truthful.clone()], ReserveRule::MonopolyOfBids, n, seed + 4), 0, false, lazy_s2),
            ("eager threshold K=2", sim(SimMechanism::Eager, vec![lifted(&u, 0.5), truthful.clone()], ReserveRule::MonopolyOfBids, n, seed + 5), 0, false, eager_s2),
            ("eager truthful K=3", sim(SimMechanism::Eager, vec![truthful.clone(); 3], ReserveRule::MonopolyOfValues, n, seed + 6), 2, false, eager_t3),
            ("lazy threshold K=3", sim(SimMechanism::LazySecondPrice, vec![lifted(&u, 0.5), truthful.clone(), truthful.clone()], ReserveRule::MonopolyOfBids, n, seed + 7), 0, false, lazy_s3),
            ("symmetric equilibrium utility", sim(SimMechanism::LazySecondPrice, vec![dt.clone(), dt.clone()], ReserveRule::MonopolyOfBids, n, seed + 8), 0, false, nash.buyer_utility),
            ("truthful payment, reserve 1/2", sim(SimMechanism::LazySecondPrice, vec![truthful.clone(); 2], ReserveRule::FixedPrice(0.5), n, seed + 9), 0, true, pay),
            ("exponential lazy threshold", sim(SimMechanism::LazySecondPrice, vec![lifted(&e, e_mp), Strategy::truthful(e.clone())], ReserveRule::MonopolyOfBids, n, seed + 10), 0, false, exp_s),
        ];
        for (name, c, i, payment, exact) in &singles {
            match simulate(c) {
                Ok(r) => {
                    let s = &r.bidders[*i];
                    if *payment {
                        b.within_se(*name, s.mean_payment, s.se_payment, *exact, k);
                    } else {
                        b.within_se(*name, s.mean_utility, s.se_utility, *exact, k);
                    }
                }
                Err(err) => b.fail(*name, err),
            }
        }

        let name = "two-stage alpha=1/2";
        let c = sim(SimMechanism::LazySecondPrice, vec![dt, truthful], ReserveRule::MonopolyOfBids, n, seed + 11);
        let p = TwoStageProcess::new(Competition::law(u.clone()), None, u.clone(), 0.5).expect("alpha in range");
        match (simulate_two_stage(&c, 0.5), utility_two_stage(0.0, 0.75, &p)) {
            (Ok(r), Ok(bd)) => {
                // the simulated first phase also earns the gap term of the bid image
                let want = 0.5 * (bd.u1 + bd.u1_gap) + 0.5 * bd.u2;
                b.within_se(name, r.combined[0], r.combined_se[0], want, k);
            }
            (Err(err), _) => b.fail(name, err),
            (_, Err(err)) => b.fail(name, err),
        }

        let again = simulate(&singles[2].1);
        let first = simulate(&singles[2].1);
        b.push("deterministic rerun", matches!((&again, &first), (Ok(x), Ok(y)) if x == y), "bit-identical SimResult");
    }

    fn exponential_numerics(&self, b: &mut Builder) {
        b.push("reference", true, "0.791 -> 1.025 (+29.5%), two bidders, labelled exponential with mu = 0.25, sigma = 1");
        let mut cands: Vec<(String, Distribution)> = [0.25, 1.0, 4.0]
            .iter()
            .map(|&rate| (format!("exponential rate {rate}"), Distribution::exponential(rate, None).expect("valid")))
            .collect();
        for (mu, sigma) in [(0.25, 1.0), (1.0, 0.25)] {
            let upper = (mu + 8.0 * sigma as f64).exp();
            cands.push((
                format!("lognormal mu {mu} sigma {sigma}"),
                Distribution::truncated_log_normal(mu, sigma, 1e-6, upper).expect("valid"),
            ));
        }
        for (name, law) in cands {
            match lazy_utilities(2, &law) {
                Ok((t, s)) => b.push(name, true, format!("{t:.4} -> {s:.4} (+{:.1}%)", 100.0 * (s - t) / t)),
                Err(e) => b.push(name, true, format!("not computable: {e}")),
            }
        }
    }
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "Nash thresholds, uniform K=2..5",
        2 => "Myerson uplift 1/12 -> 7/48",
        3 => "lazy uplift 0.083 -> 0.132",
        4 => "phase transition alpha_c",
        5 => "revenue and utility equivalence at equilibrium",
        6 => "utility gradients vs finite differences",
        7 => "x0* regime in alpha",
        8 => "ERM reserve bound",
        9 => "Monte Carlo cross-validation",
        10 => "exponential numerics (informational)",
        _ => "unknown",
    }
}

fn budget(id: u32) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(1)),
        2 => Some(Duration::from_secs(10)),
        4 => Some(Duration::from_secs(5)),
        8 => Some(Duration::from_secs(60)),
        _ => None,
    }
}

/// Runs one criterion.
pub fn run_one(id: u32, c: &VerifyConfig, seed: Option<u64>, grid: Option<usize>) -> Result<CriterionReport, LabError> {
    if !ALL.contains(&id) {
        return Err(LabError::Config(format!("no criterion {id}; valid ids are 1 to 10")));
    }
    if !(c.tolerance_scale >= 0.0) {
        return Err(LabError::Config("tolerance_scale must be nonnegative".into()));
    }
    if c.mc_auctions == 0 {
        return Err(LabError::Config("mc_auctions must be at least 1".into()));
    }
    let suite = Suite {
        scale: c.tolerance_scale,
        seed: seed.or(c.seed).unwrap_or(DEFAULT_SEED),
        mc: c.mc_auctions,
        grid: grid.unwrap_or(200),
    };
    let mut b = Builder::new();
    let start = Instant::now();
    match id {
        1 => suite.nash(&mut b),
        2 => suite.myerson(&mut b),
        3 => suite.lazy(&mut b),
        4 => suite.phase(&mut b),
        5 => suite.equivalence(&mut b),
        6 => suite.gradients(&mut b),
        7 => suite.regime(&mut b),
        8 => suite.erm(&mut b),
        9 => suite.cross_validation(&mut b),
        _ => suite.exponential_numerics(&mut b),
    }
    Ok(CriterionReport {
        id,
        title: title(id),
        informational: id == 10,
        checks: b.checks,
        elapsed: start.elapsed(),
        budget: budget(id),
    })
}

/// Runs the selected criteria in order.
pub fn run(c: &VerifyConfig, seed: Option<u64>, grid: Option<usize>) -> Result<Vec<CriterionReport>, LabError> {
    let ids = c.criteria.clone().unwrap_or_else(|| ALL.to_vec());
    ids.iter().map(|&id| run_one(id, c, seed, grid)).collect()
}
