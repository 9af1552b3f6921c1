//! Reserve selection: population optimum over a bid law and the empirical
//! (ERM) reserve from a finite sample.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, GRID};
use crate::error::{Error, Result};
use crate::numerics::{bisect_predicate, find_root, golden_max, linspace};
use crate::rng;
use crate::strategy::{BidDistribution, Strategy, StrategyKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReserveDecision {
    pub reserve_price: f64,
    pub reserve_value: f64,
    pub attained_revenue: f64,
}

/// Welfare-benevolent revenue-maximizing reserve against a bid law: the
/// smallest maximizer of `b (1 - F_B(b-))`.
pub fn optimal_reserve(bd: &BidDistribution) -> ReserveDecision {
    let (bmin, bmax) = bd.support();
    let xs = linspace(bmin, bmax, GRID - 1);
    let rev: Vec<f64> = xs.iter().map(|&b| bd.revenue(b)).collect();
    let m = rev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-11 * m.abs().max(1e-300);
    let i = rev.iter().position(|&v| v >= m - tol).unwrap_or(0);
    // a smooth peak can leave two grid points level; a plateau leaves more
    let plateau = i + 2 < rev.len() && rev[i + 1] >= m - tol && rev[i + 2] >= m - tol;

    let price = if plateau {
        if i == 0 {
            bmin
        } else {
            bisect_predicate(|b| bd.revenue(b) >= m - tol, xs[i - 1], xs[i], 1e-13)
        }
    } else {
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 2).min(xs.len() - 1)];
        let slope = |t: f64| bd.sf(t) - t * bd.pdf(t);
        if slope(a) <= 0.0 {
            a
        } else if slope(b) >= 0.0 {
            b
        } else {
            find_root(slope, a, b, 1e-13).unwrap_or_else(|_| golden_max(|t| bd.revenue(t), a, b, 1e-12))
        }
    };
    ReserveDecision {
        reserve_price: price,
        reserve_value: bd.inverse(price),
        attained_revenue: bd.revenue(price),
    }
}

/// Index into an ascending sample of the ERM reserve.
fn erm_index(sorted: &[f64]) -> usize {
    let n = sorted.len();
    let mut best = 0;
    let mut best_rev = f64::NEG_INFINITY;
    let mut i = 0;
    while i < n {
        let b = sorted[i];
        let rev = b * ((n - i) as f64 / n as f64);
        if rev > best_rev && (best_rev == f64::NEG_INFINITY || rev - best_rev > 1e-12 * best_rev.abs()) {
            best = i;
            best_rev = rev;
        }
        // skip ties: later copies of the same bid earn strictly less
        while i < n && sorted[i] == b {
            i += 1;
        }
    }
    best
}

/// Empirical revenue-maximizing reserve `argmax b_(i+1) (1 - i/n)`, smallest
/// maximizer.
pub fn erm_reserve(bids: &[f64]) -> Result<f64> {
    if bids.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut s = bids.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s[erm_index(&s)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsSchedule {
    /// `eps_n = n^(-1/2 + eta)`.
    Power { eta: f64 },
    /// Plain thresholding with no lift.
    Zero,
}

impl EpsSchedule {
    pub fn eps(&self, n: usize) -> f64 {
        match *self {
            EpsSchedule::Power { eta } => (n as f64).powf(-0.5 + eta),
            EpsSchedule::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmReport {
    pub n: usize,
    pub trial: usize,
    pub eps: f64,
    pub delta: f64,
    pub delta1: f64,
    pub x_hat: f64,
    pub x_max: f64,
    pub c_n: f64,
    pub bound: f64,
    pub hit: bool,
}

pub fn c_n(n: usize, delta: f64) -> f64 {
    (n as f64).powf(-0.5) * ((2.0 / delta).ln() / 2.0).sqrt()
}

/// Lower density bound `γ_F` on `[lo, r]`.
pub fn density_floor(d: &Distribution, r: f64) -> f64 {
    linspace(d.lo(), r, GRID - 1).iter().map(|&x| d.pdf(x)).fold(f64::INFINITY, f64::min) - 1e-12
}

#[derive(Debug, Clone)]
pub struct ErmExperiment {
    pub dist: Distribution,
    pub r: f64,
    pub schedule: EpsSchedule,
    pub n_grid: Vec<usize>,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Repeated ERM against the ε-lifted threshold strategy at several sample
/// sizes; one report per (n, trial).
pub fn erm_theorem5_experiment(e: &ErmExperiment) -> Result<Vec<ErmReport>> {
    let d = &e.dist;
    if e.n_grid.is_empty() || e.n_grid.iter().any(|&n| n < 2) || e.trials == 0 {
        return Err(Error::ConfigInvalid("n_grid must be nonempty with n >= 2 and trials >= 1".into()));
    }
    if !(e.delta > 0.0 && e.delta < 1.0) {
        return Err(Error::ConfigInvalid("delta must lie in (0, 1)".into()));
    }
    let gamma = density_floor(d, e.r);
    if !(gamma > 0.0) {
        return Err(Error::AssumptionViolated(format!("density floor on [lo, r] is {gamma}")));
    }
    let top = d.revenue_curve(e.r);
    let sup = linspace(e.r, d.hi(), GRID - 1).iter().map(|&t| d.revenue_curve(t)).fold(0.0, f64::max);
    if sup > top + 1e-10 {
        return Err(Error::AssumptionViolated(format!("revenue above r reaches {sup} > {top}")));
    }
    let fr = d.cdf(e.r);
    let mut out = Vec::new();
    for (ni, &n) in e.n_grid.iter().enumerate() {
        let eps = e.schedule.eps(n);
        let strat = Strategy::new(StrategyKind::EpsThreshold { r: e.r, eps }, d.clone())?;
        let cn = c_n(n, e.delta);
        let bound = 2.0 * e.r * cn / (eps * gamma);
        let mut rows: Vec<(ErmReport, bool)> = (0..e.trials)
            .into_par_iter()
            .map(|t| {
                let mut g = rng::stream(e.seed, rng::key(ni as u64, t as u64));
                let mut xs: Vec<f64> = (0..n).map(|_| d.quantile(g.gen::<f64>())).collect();
                xs.sort_by(f64::total_cmp);
                let bids: Vec<f64> = xs.iter().map(|&x| strat.bid_unchecked(x)).collect();
                let x_hat = xs[erm_index(&bids)];
                let x_max = xs[n - 1];
                let fails = eps <= x_max * cn / fr;
                let rep = ErmReport {
                    n,
                    trial: t,
                    eps,
                    delta: e.delta,
                    delta1: 0.0,
                    x_hat,
                    x_max,
                    c_n: cn,
                    bound,
                    hit: x_hat < bound,
                };
                (rep, fails)
            })
            .collect();
        let d1 = rows.iter().filter(|r| r.1).count() as f64 / e.trials as f64;
        for r in rows.iter_mut() {
            r.0.delta1 = d1;
        }
        out.extend(rows.into_iter().map(|r| r.0));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErmSummary {
    pub n: usize,
    pub hit_rate: f64,
    pub delta1: f64,
    pub median_x_hat: f64,
    pub ok: bool,
}

/// Per-n aggregates of an experiment, in grid order.
pub fn summarize(reports: &[ErmReport]) -> Vec<ErmSummary> {
    let mut ns: Vec<usize> = Vec::new();
    for r in reports {
        if !ns.contains(&r.n) {
            ns.push(r.n);
        }
    }
    ns.into_iter()
        .map(|n| {
            let rows: Vec<&ErmReport> = reports.iter().filter(|r| r.n == n).collect();
            let hit_rate = rows.iter().filter(|r| r.hit).count() as f64 / rows.len() as f64;
            let mut xh: Vec<f64> = rows.iter().map(|r| r.x_hat).collect();
            xh.sort_by(f64::total_cmp);
            let m = xh.len();
            let median = if m % 2 == 1 { xh[m / 2] } else { 0.5 * (xh[m / 2 - 1] + xh[m / 2]) };
            let delta1 = rows[0].delta1;
            ErmSummary { n, hit_rate, delta1, median_x_hat: median, ok: hit_rate >= 1.0 - rows[0].delta - delta1 }
        })
        .collect()
}
