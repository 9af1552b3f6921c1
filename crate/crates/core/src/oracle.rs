//! Monte Carlo simulation of the auctions themselves.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::rng;
use crate::seller::{erm_reserve, optimal_reserve};
use crate::strategy::Strategy;

const BATCHES: usize = 100;
const PHASE2_OFFSET: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMechanism {
    LazySecondPrice,
    Eager,
    Myerson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "price", rename_all = "snake_case")]
pub enum ReserveRule {
    FixedPrice(f64),
    /// Each bidder's welfare-benevolent optimal reserve against her bid law.
    MonopolyOfBids,
    /// The monopoly price of each bidder's value law, applied to bids.
    MonopolyOfValues,
    /// ERM reserve on each bidder's phase-1 bids (two-stage runs only).
    EmpiricalOfBids,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_auctions: usize,
    pub seed: u64,
    pub mechanism: SimMechanism,
    pub strategies: Vec<Strategy>,
    pub phase1_reserve: Option<Distribution>,
    pub phase2_reserve_rule: ReserveRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidderStats {
    pub mean_utility: f64,
    pub mean_payment: f64,
    pub mean_gross: f64,
    pub win_rate: f64,
    pub se_utility: f64,
    pub se_payment: f64,
    pub se_win_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n_auctions: usize,
    pub bidders: Vec<BidderStats>,
    /// Reserve prices in force, per bidder; empty when reserves are random.
    pub reserves: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageResult {
    pub alpha: f64,
    pub phase1: SimResult,
    pub phase2: SimResult,
    pub combined: Vec<f64>,
    pub combined_se: Vec<f64>,
}

enum Reserves<'a> {
    Fixed(&'a [f64]),
    Random(&'a Distribution),
}

#[derive(Clone, Copy, Default)]
struct Acc {
    utility: f64,
    payment: f64,
    gross: f64,
    wins: f64,
}

fn uniform(base: &ChaCha8Rng, auction: u64, slot: usize) -> f64 {
    let mut g = base.clone();
    g.set_stream(rng::key(auction, slot as u64));
    g.gen::<f64>()
}

/// Values and bids of one auction; bidder `j` reads stream `(auction, j)`.
fn draw(strats: &[Strategy], base: &ChaCha8Rng, auction: u64, xs: &mut [f64], bs: &mut [f64]) {
    for (j, s) in strats.iter().enumerate() {
        xs[j] = s.base().quantile(uniform(base, auction, j));
        bs[j] = s.bid_unchecked(xs[j]);
    }
}

/// Winner and payment of one auction.
fn settle(mech: SimMechanism, strats: &[Strategy], xs: &[f64], bs: &[f64], res: &[f64]) -> Option<(usize, f64)> {
    let k = bs.len();
    match mech {
        SimMechanism::LazySecondPrice => {
            let mut w = 0;
            for j in 1..k {
                if bs[j] > bs[w] {
                    w = j;
                }
            }
            if bs[w] < res[w] {
                return None;
            }
            let second = (0..k).filter(|&j| j != w).map(|j| bs[j]).fold(0.0, f64::max);
            Some((w, second.max(res[w])))
        }
        SimMechanism::Eager => {
            let mut w: Option<usize> = None;
            for j in 0..k {
                if bs[j] >= res[j] && w.map_or(true, |i| bs[j] > bs[i]) {
                    w = Some(j);
                }
            }
            let w = w?;
            let second = (0..k).filter(|&j| j != w && bs[j] >= res[j]).map(|j| bs[j]).fold(0.0, f64::max);
            Some((w, second.max(res[w])))
        }
        SimMechanism::Myerson => {
            let vv: Vec<f64> = (0..k)
                .map(|j| strats[j].bid_virtual_value(xs[j]).unwrap_or(f64::NEG_INFINITY))
                .collect();
            let mut w = 0;
            for j in 1..k {
                if vv[j] > vv[w] {
                    w = j;
                }
            }
            if !(vv[w] >= 0.0) {
                return None;
            }
            let t = (0..k).filter(|&j| j != w).map(|j| vv[j]).fold(0.0, f64::max);
            let pay = strats[w].min_bid_with_virtual_value(t).unwrap_or(bs[w]).min(bs[w]);
            Some((w, pay))
        }
    }
}

fn run(
    strats: &[Strategy],
    mech: SimMechanism,
    reserves: Reserves,
    n: usize,
    seed: u64,
    offset: u64,
) -> Vec<BidderStats> {
    let k = strats.len();
    let batches = BATCHES.min(n);
    let base = rng::stream(seed, 0);
    let sums: Vec<Vec<Acc>> = (0..batches)
        .into_par_iter()
        .map(|bi| {
            let (start, end) = (bi * n / batches, (bi + 1) * n / batches);
            let mut acc = vec![Acc::default(); k];
            let (mut xs, mut bs, mut rs) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
            for a in start..end {
                let auction = offset + a as u64;
                draw(strats, &base, auction, &mut xs, &mut bs);
                match reserves {
                    Reserves::Fixed(r) => rs.copy_from_slice(r),
                    Reserves::Random(h) => {
                        for (j, r) in rs.iter_mut().enumerate() {
                            *r = h.quantile(uniform(&base, auction, k + j));
                        }
                    }
                }
                if let Some((w, pay)) = settle(mech, strats, &xs, &bs, &rs) {
                    let c = &mut acc[w];
                    c.utility += xs[w] - pay;
                    c.payment += pay;
                    c.gross += xs[w];
                    c.wins += 1.0;
                }
            }
            let m = (end - start) as f64;
            acc.iter()
                .map(|c| Acc { utility: c.utility / m, payment: c.payment / m, gross: c.gross / m, wins: c.wins / m })
                .collect()
        })
        .collect();

    let weights: Vec<f64> = (0..batches).map(|bi| ((bi + 1) * n / batches - bi * n / batches) as f64 / n as f64).collect();
    (0..k)
        .map(|j| {
            let col = |f: fn(&Acc) -> f64| -> (f64, f64) {
                let v: Vec<f64> = sums.iter().map(|b| f(&b[j])).collect();
                let mean: f64 = v.iter().zip(&weights).map(|(x, w)| x * w).sum();
                if batches < 2 {
                    return (mean, f64::NAN);
                }
                let bm = v.iter().sum::<f64>() / batches as f64;
                let var = v.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / (batches - 1) as f64;
                (mean, (var / batches as f64).sqrt())
            };
            let (mu, su) = col(|a| a.utility);
            let (mp, sp) = col(|a| a.payment);
            let (mg, _) = col(|a| a.gross);
            let (mw, sw) = col(|a| a.wins);
            BidderStats {
                mean_utility: mu,
                mean_payment: mp,
                mean_gross: mg,
                win_rate: mw,
                se_utility: su,
                se_payment: sp,
                se_win_rate: sw,
            }
        })
        .collect()
}

fn validate(c: &SimConfig) -> Result<()> {
    if c.n_auctions == 0 {
        return Err(Error::ConfigInvalid("n_auctions must be at least 1".into()));
    }
    if c.strategies.is_empty() {
        return Err(Error::ConfigInvalid("at least one bidder is required".into()));
    }
    Ok(())
}

fn population_reserves(c: &SimConfig) -> Result<Vec<f64>> {
    c.strategies
        .iter()
        .map(|s| match c.phase2_reserve_rule {
            ReserveRule::FixedPrice(v) => Ok(v),
            ReserveRule::MonopolyOfBids => Ok(optimal_reserve(&s.pushforward()).reserve_price),
            ReserveRule::MonopolyOfValues => s.base().monopoly_price(),
            ReserveRule::EmpiricalOfBids => {
                Err(Error::ConfigInvalid("empirical reserves need a two-stage run".into()))
            }
        })
        .collect()
}

/// One-shot auctions under the configured mechanism and reserve rule.
pub fn simulate(c: &SimConfig) -> Result<SimResult> {
    validate(c)?;
    let reserves = population_reserves(c)?;
    let bidders = run(&c.strategies, c.mechanism, Reserves::Fixed(&reserves), c.n_auctions, c.seed, 0);
    Ok(SimResult { n_auctions: c.n_auctions, bidders, reserves })
}

/// Exploration phase (lazy second price, reserves drawn from the phase-1
/// law) followed by exploitation under the configured mechanism with
/// reserves set from phase 1.
pub fn simulate_two_stage(c: &SimConfig, alpha: f64) -> Result<TwoStageResult> {
    validate(c)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ConfigInvalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if c.n_auctions as u64 >= PHASE2_OFFSET {
        return Err(Error::ConfigInvalid("n_auctions must be below 2^30 in two-stage runs".into()));
    }
    let k = c.strategies.len();
    let zeros = vec![0.0; k];
    let r1 = match &c.phase1_reserve {
        Some(h) => Reserves::Random(h),
        None => Reserves::Fixed(&zeros),
    };
    let p1 = run(&c.strategies, SimMechanism::LazySecondPrice, r1, c.n_auctions, c.seed, 0);
    let phase1 = SimResult {
        n_auctions: c.n_auctions,
        bidders: p1,
        reserves: if c.phase1_reserve.is_some() { vec![] } else { zeros.clone() },
    };

    let reserves = if c.phase2_reserve_rule == ReserveRule::EmpiricalOfBids {
        let base = rng::stream(c.seed, 0);
        let bids: Vec<Vec<f64>> = (0..c.n_auctions)
            .into_par_iter()
            .map(|a| {
                let (mut xs, mut bs) = (vec![0.0; k], vec![0.0; k]);
                draw(&c.strategies, &base, a as u64, &mut xs, &mut bs);
                bs
            })
            .collect();
        (0..k)
            .map(|j| erm_reserve(&bids.iter().map(|b| b[j]).collect::<Vec<f64>>()))
            .collect::<Result<Vec<f64>>>()?
    } else {
        population_reserves(c)?
    };
    let p2 = run(&c.strategies, c.mechanism, Reserves::Fixed(&reserves), c.n_auctions, c.seed, PHASE2_OFFSET);
    let phase2 = SimResult { n_auctions: c.n_auctions, bidders: p2, reserves };

    let combined = (0..k)
        .map(|j| alpha * phase1.bidders[j].mean_utility + (1.0 - alpha) * phase2.bidders[j].mean_utility)
        .collect();
    let combined_se = (0..k)
        .map(|j| {
            let (a, b) = (phase1.bidders[j].se_utility, phase2.bidders[j].se_utility);
            (alpha * alpha * a * a + (1.0 - alpha) * (1.0 - alpha) * b * b).sqrt()
        })
        .collect();
    Ok(TwoStageResult { alpha, phase1, phase2, combined, combined_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::StrategyKind;

    fn u01() -> Distribution {
        Distribution::uniform(0.0, 1.0).unwrap()
    }

    fn cfg(n: usize, mech: SimMechanism, strategies: Vec<Strategy>, rule: ReserveRule) -> SimConfig {
        SimConfig { n_auctions: n, seed: 7, mechanism: mech, strategies, phase1_reserve: None, phase2_reserve_rule: rule }
    }

    #[test]
    fn lazy_truthful_pair() {
        let c = cfg(
            200_000,
            SimMechanism::LazySecondPrice,
            vec![Strategy::truthful(u01()), Strategy::truthful(u01())],
            ReserveRule::FixedPrice(0.0),
        );
        let r = simulate(&c).unwrap();
        for b in &r.bidders {
            assert!((b.mean_utility - 1.0 / 6.0).abs() < 4.0 * b.se_utility);
        }
    }

    #[test]
    fn deterministic() {
        let c = cfg(
            5_000,
            SimMechanism::Myerson,
            vec![
                Strategy::new(StrategyKind::EpsThreshold { r: 0.5, eps: 0.0 }, u01()).unwrap(),
                Strategy::truthful(u01()),
            ],
            ReserveRule::MonopolyOfBids,
        );
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let c = cfg(0, SimMechanism::Eager, vec![Strategy::truthful(u01())], ReserveRule::MonopolyOfBids);
        assert!(matches!(simulate(&c), Err(Error::ConfigInvalid(_))));
        let c = cfg(10, SimMechanism::Eager, vec![], ReserveRule::MonopolyOfBids);
        assert!(matches!(simulate(&c), Err(Error::ConfigInvalid(_))));
        let c = cfg(10, SimMechanism::Eager, vec![Strategy::truthful(u01())], ReserveRule::EmpiricalOfBids);
        assert!(matches!(simulate(&c), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn alpha_extremes_are_exact() {
        let c = cfg(
            2_000,
            SimMechanism::LazySecondPrice,
            vec![Strategy::truthful(u01()), Strategy::truthful(u01())],
            ReserveRule::EmpiricalOfBids,
        );
        let one = simulate_two_stage(&c, 1.0).unwrap();
        assert_eq!(one.combined[0], one.phase1.bidders[0].mean_utility);
        let zero = simulate_two_stage(&c, 0.0).unwrap();
        assert_eq!(zero.combined[1], zero.phase2.bidders[1].mean_utility);
    }
}
