//! The two-stage Stackelberg game between a thresholding bidder and a
//! reserve-learning seller.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comp::{Blend, Competition};
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate, QuadOpts};
use crate::strategy::{lower_threshold_bound, Strategy};

const OPTS: QuadOpts = QuadOpts { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 };
const FEAS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageProcess {
    pub competition: Competition,
    pub phase1_reserve: Option<Distribution>,
    pub value_law: Distribution,
    pub alpha: f64,
}

impl TwoStageProcess {
    pub fn new(
        competition: Competition,
        phase1_reserve: Option<Distribution>,
        value_law: Distribution,
        alpha: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParams(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(TwoStageProcess { competition, phase1_reserve, value_law, alpha })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        TwoStageProcess::new(self.competition.clone(), self.phase1_reserve.clone(), self.value_law.clone(), alpha)
    }

    /// Phase-1 effective competition `G H`.
    pub fn phase1_competition(&self) -> Competition {
        self.competition.clone().with_reserve(self.phase1_reserve.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown {
    pub u1: f64,
    pub u2: f64,
    pub u_total: f64,
    pub m1: f64,
    pub m2: f64,
    pub reserve_value: f64,
    pub reserve_price: f64,
    /// Phase-1 utility carried by bids in gaps of the bid image, which the
    /// integrated payment formula leaves out; `u1 + u1_gap` is the utility
    /// of the auction as actually run.
    pub u1_gap: f64,
}

/// Evaluation context: value law, the two phase competitions, and the
/// monopoly price, computed once.
struct Ctx<'a> {
    law: &'a Distribution,
    g1: &'a Competition,
    g2: &'a Competition,
    alpha: f64,
    mp: f64,
}

fn tail_breaks(law: &Distribution, kinks: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut v: Vec<f64> = kinks.iter().copied().filter(|&k| k > a && k < b).collect();
    v.extend(law.kinks());
    v
}

impl<'a> Ctx<'a> {
    fn new(law: &'a Distribution, g1: &'a Competition, g2: &'a Competition, alpha: f64) -> Result<Self> {
        let mp = law.monopoly_price()?;
        Ok(Ctx { law, g1, g2, alpha, mp })
    }

    fn lo(&self) -> f64 {
        self.law.lo()
    }

    fn hi(&self) -> f64 {
        self.law.hi()
    }

    /// Breakpoints in value space for `x ↦ G(level / S(x))` on `[a, b]`.
    fn mid_breaks(&self, kinks: &[f64], level: f64, a: f64, b: f64) -> Vec<f64> {
        let mut v = self.law.kinks();
        for &k in kinks {
            if k > 0.0 {
                let s = level / k;
                if s > 0.0 && s < 1.0 {
                    let x = self.law.isf(s);
                    if x > a && x < b {
                        v.push(x);
                    }
                }
            }
        }
        v
    }

    /// `∫_a^b x G(level / S(x)) f(x) dx`.
    fn mid<G: Fn(f64) -> f64>(&self, g: G, kinks: &[f64], level: f64, a: f64, b: f64) -> f64 {
        let d = self.law;
        let br = self.mid_breaks(kinks, level, a, b);
        integrate(|x| x * g(level / d.sf(x)) * d.pdf(x), a, b, &br, OPTS)
    }

    /// `∫_a^hi (1 - F) G dx`, the truthful utility of types above `a`.
    fn top<G: Fn(f64) -> f64>(&self, g: G, kinks: &[f64], a: f64) -> f64 {
        let d = self.law;
        integrate(|x| d.sf(x) * g(x), a, self.hi(), &tail_breaks(d, kinks, a, self.hi()), OPTS)
    }

    /// `∫_a^b ψ f G dx`, truthful payments of types in `[a, b]`.
    fn pay<G: Fn(f64) -> f64>(&self, g: G, kinks: &[f64], a: f64, b: f64) -> f64 {
        let d = self.law;
        integrate(|x| (x * d.pdf(x) - d.sf(x)) * g(x), a, b, &tail_breaks(d, kinks, a, b), OPTS)
    }

    fn low<G: Fn(f64) -> f64>(&self, g: G, kinks: &[f64], b: f64) -> f64 {
        let d = self.law;
        integrate(|x| d.sf(x) * g(x), self.lo(), b, &tail_breaks(d, kinks, self.lo(), b), OPTS)
    }

    /// Classifies `(x0, x1)` and returns the seller's phase-2 reserve value.
    fn reserve_value(&self, x0: f64, x1: f64) -> Result<f64> {
        let (lo, hi) = self.law.support();
        if !(x0 >= lo - FEAS_TOL && x0 <= x1 + FEAS_TOL && x1 <= hi) {
            return Err(Error::InvalidThresholds(format!("need lo <= x0 <= x1 <= hi, got ({x0}, {x1})")));
        }
        if x1 >= self.mp {
            if x1 >= hi && x0 < x1 {
                return Err(Error::InvalidThresholds("x1 must lie below the top of the support".into()));
            }
            let bar = lower_threshold_bound(self.law, x1);
            if x0 < x1 && x0 > bar + FEAS_TOL {
                return Err(Error::InvalidThresholds(format!("x0={x0} exceeds x̄0={bar}")));
            }
            Ok(x0.max(lo))
        } else {
            if x0 > lo + FEAS_TOL {
                return Err(Error::InvalidThresholds(format!(
                    "x1={x1} below the monopoly price {} admits only x0 = lo",
                    self.mp
                )));
            }
            Ok(self.mp)
        }
    }

    fn breakdown(&self, x0: f64, x1: f64) -> Result<UtilityBreakdown> {
        let xr = self.reserve_value(x0, x1)?;
        let lo = self.lo();
        let x0 = x0.max(lo).min(x1);
        let level = x1 * self.law.sf(x1);
        let shading = x0 < x1;
        let (g1, g2) = (self.g1, self.g2);
        let (k1, k2) = (g1.kinks(), g2.kinks());
        let c1 = |x: f64| g1.cdf(x);
        let c2 = |x: f64| g2.cdf(x);

        let mut u1 = self.low(c1, &k1, x0) + self.top(c1, &k1, x1);
        let m1 = self.pay(c1, &k1, lo, x0) + self.pay(c1, &k1, x1, self.hi());
        if shading {
            u1 += self.mid(c1, &k1, level, x0, x1);
        }

        let a = x0.max(xr);
        let t = x1.max(xr);
        let mut u2 = self.top(c2, &k2, t);
        let m2 = self.pay(c2, &k2, t, self.hi());
        if shading && a < x1 {
            u2 += self.mid(c2, &k2, level, a, x1);
        }

        let mut gaps: Vec<(f64, f64, f64)> = Vec::new();
        if shading && x0 > lo {
            if lo > 0.0 {
                gaps.push((0.0, lo, 1.0));
            }
            gaps.push((x0, level / self.law.sf(x0), self.law.sf(x0)));
        } else if shading {
            gaps.push((0.0, level / self.law.sf(lo), 1.0));
        } else if lo > 0.0 {
            gaps.push((0.0, lo, 1.0));
        }
        let u1_gap = gaps
            .iter()
            .map(|&(a, b, s)| s * integrate(c1, a, b, &k1, OPTS))
            .sum();

        let reserve_price = if xr == x0 && shading { level / self.law.sf(x0) } else { xr };
        let alpha = self.alpha;
        Ok(UtilityBreakdown {
            u1,
            u2,
            u_total: alpha * u1 + (1.0 - alpha) * u2,
            m1,
            m2,
            reserve_value: xr,
            reserve_price,
            u1_gap,
        })
    }

    /// `U_α` alone, for feasible points with `x1 >= mp`.
    fn total(&self, x0: f64, x1: f64) -> f64 {
        let blend = Blend { g1: self.g1, g2: self.g2, alpha: self.alpha };
        let kb = blend.kinks();
        let k1 = self.g1.kinks();
        let level = x1 * self.law.sf(x1);
        let mut u = self.alpha * self.low(|x| self.g1.cdf(x), &k1, x0) + self.top(|x| blend.cdf(x), &kb, x1);
        if x0 < x1 {
            u += self.mid(|x| blend.cdf(x), &kb, level, x0, x1);
        }
        u
    }

    fn grad(&self, x0: f64, x1: f64) -> (f64, f64) {
        let d = self.law;
        let blend = Blend { g1: self.g1, g2: self.g2, alpha: self.alpha };
        let level = x1 * d.sf(x1);
        let s0 = d.sf(x0);
        let d_x0 = self.alpha * s0 * self.g1.cdf(x0) - x0 * d.pdf(x0) * blend.cdf(level / s0);
        let kb = blend.kinks();
        let inner = if x0 < x1 {
            let br = self.mid_breaks(&kb, level, x0, x1);
            integrate(
                |x| {
                    let s = d.sf(x);
                    x / s * blend.pdf(level / s) * d.pdf(x)
                },
                x0,
                x1,
                &br,
                OPTS,
            )
        } else {
            0.0
        };
        let fpsi = x1 * d.pdf(x1) - d.sf(x1);
        (d_x0, fpsi * (blend.cdf(x1) - inner))
    }

    fn x0_bar(&self, x1: f64) -> f64 {
        lower_threshold_bound(self.law, x1)
    }
}

/// Two-stage utility of the double-threshold strategy `(x0, x1)`, with the
/// seller best-responding in phase 2.
///
/// For `x1` below the monopoly price only `x0 = lo` is admissible and the
/// seller keeps the monopoly reserve; `(0, 0)` is truthful bidding.
pub fn utility_two_stage(x0: f64, x1: f64, p: &TwoStageProcess) -> Result<UtilityBreakdown> {
    let g1 = p.phase1_competition();
    let ctx = Ctx::new(&p.value_law, &g1, &p.competition, p.alpha)?;
    ctx.breakdown(x0, x1)
}

/// Analytic partial derivatives of `U_α` in `x0` and `x1`.
pub fn utility_grad(x0: f64, x1: f64, p: &TwoStageProcess) -> Result<(f64, f64)> {
    let (lo, hi) = p.value_law.support();
    if !(x0 >= lo && x1 <= hi && x0 <= x1) {
        return Err(Error::OutOfSupport(if x0 < lo { x0 } else { x1 }));
    }
    let g1 = p.phase1_competition();
    let ctx = Ctx::new(&p.value_law, &g1, &p.competition, p.alpha)?;
    if x1 < ctx.mp {
        return Err(Error::InvalidThresholds("gradient needs x1 >= monopoly price".into()));
    }
    Ok(ctx.grad(x0, x1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub x0: f64,
    pub x1: f64,
    pub utility: UtilityBreakdown,
}

/// Maximizes `U_α` over `{lo <= x0 <= x̄0(x1), mp <= x1 < hi}` by a
/// `grid × grid` scan followed by projected gradient ascent.
pub fn best_response(p: &TwoStageProcess, grid: usize) -> Result<BestResponse> {
    let grid = grid.max(2);
    let g1 = p.phase1_competition();
    let ctx = Ctx::new(&p.value_law, &g1, &p.competition, p.alpha)?;
    let (lo, hi) = p.value_law.support();
    let mp = ctx.mp;
    let x1_max = hi - 1e-9 * (hi - lo);

    let rows: Vec<(f64, f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let x1 = mp + (x1_max - mp) * j as f64 / grid as f64;
            let bar = ctx.x0_bar(x1);
            let mut best = (f64::NEG_INFINITY, lo, x1);
            for i in 0..grid {
                let x0 = lo + (bar - lo) * i as f64 / (grid - 1) as f64;
                let u = ctx.total(x0, x1);
                if u > best.0 {
                    best = (u, x0, x1);
                }
            }
            best
        })
        .collect();
    let mut best = rows[0];
    for r in &rows[1..] {
        if r.0 > best.0 {
            best = *r;
        }
    }

    let project = |x0: f64, x1: f64| {
        let x1 = x1.clamp(mp, x1_max);
        (x0.clamp(lo, ctx.x0_bar(x1)), x1)
    };
    let (mut u, mut x0, mut x1) = best;
    let mut step = 0.01 * (hi - lo);
    for _ in 0..50 {
        let (g0, g1) = ctx.grad(x0, x1);
        let norm = (g0 * g0 + g1 * g1).sqrt();
        if !(norm > 0.0) {
            break;
        }
        let mut moved = false;
        for _ in 0..40 {
            let (c0, c1) = project(x0 + step * g0 / norm, x1 + step * g1 / norm);
            let cu = ctx.total(c0, c1);
            if cu > u {
                x0 = c0;
                x1 = c1;
                u = cu;
                moved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }

    let corner = ctx.total(mp, mp);
    if corner > u {
        x0 = mp;
        x1 = mp;
    }
    let utility = ctx.breakdown(x0, x1)?;
    Ok(BestResponse { x0, x1, utility })
}

/// Two-stage utility of committing to threshold `x1` (shading from the
/// bottom of the support), with phase competitions `G1`, `G2`.
pub fn commitment_utility(x1: f64, law: &Distribution, g1: &Competition, g2: &Competition, alpha: f64) -> Result<f64> {
    let ctx = Ctx::new(law, g1, g2, alpha)?;
    let x1 = x1.max(law.lo());
    Ok(ctx.breakdown(law.lo(), x1)?.u_total)
}

/// Both one-sided limits of [`commitment_utility`] at the monopoly price:
/// `(from below, from above)`.
pub fn commitment_one_sided(law: &Distribution, g1: &Competition, g2: &Competition, alpha: f64) -> Result<(f64, f64)> {
    let ctx = Ctx::new(law, g1, g2, alpha)?;
    let mp = ctx.mp;
    let above = ctx.breakdown(law.lo(), mp)?.u_total;
    // the branch with the monopoly reserve, evaluated at its right end
    let lo = law.lo();
    let level = mp * law.sf(mp);
    let (k1, k2) = (g1.kinks(), g2.kinks());
    let c1 = |x: f64| g1.cdf(x);
    let c2 = |x: f64| g2.cdf(x);
    let below = alpha * (ctx.mid(c1, &k1, level, lo, mp) + ctx.top(c1, &k1, mp)) + (1.0 - alpha) * ctx.top(c2, &k2, mp);
    Ok((below, above))
}

fn require_regular(law: &Distribution) -> Result<f64> {
    if !law.is_regular() {
        return Err(Error::AssumptionViolated("value law is not regular".into()));
    }
    law.monopoly_price().map_err(|_| Error::AssumptionViolated("revenue curve is not unimodal".into()))
}

/// `I(r) = E[ψ(X) G(r S(r) / S(X)) 1{X <= r}]`.
pub fn one_strategic_equation(g: &Competition, law: &Distribution, r: f64) -> f64 {
    let lo = law.lo();
    let level = r * law.sf(r);
    let scale = g.cdf(r).max(1e-300) * (law.hi() - lo) * (1.0 + law.hi());
    let opts = QuadOpts { abs_tol: 1e-14 * scale, rel_tol: 1e-12, max_intervals: 4000 };
    let mut br = law.kinks();
    for k in g.kinks() {
        if k > 0.0 && level / k < 1.0 {
            br.push(law.isf(level / k));
        }
    }
    br.push(law.monopoly_price().unwrap_or(lo));
    integrate(|x| (x * law.pdf(x) - law.sf(x)) * g.cdf(level / law.sf(x)), lo, r, &br, opts)
}

/// Optimal threshold of a single strategic bidder facing truthful
/// competition `g` with no phase-1 weight: the root of `I` above the
/// monopoly price.
pub fn one_strategic_threshold(g: &Competition, law: &Distribution) -> Result<f64> {
    let mp = require_regular(law)?;
    let hi = law.hi();
    let n = 200;
    let mut prev = mp;
    for i in 1..n {
        let r = mp + (hi - mp) * i as f64 / n as f64;
        if one_strategic_equation(g, law, r) > 0.0 {
            return find_root(|t| one_strategic_equation(g, law, t), prev, r, 1e-12)
                .map_err(|e| Error::NoRoot(e.to_string()));
        }
        prev = r;
    }
    Err(Error::NoRoot("no sign change above the monopoly price".into()))
}

/// `ℛ(r) = E[ψ(X) F^{K-1}(X) 1{X <= r}]`.
pub fn nash_equation(k: u32, law: &Distribution, r: f64) -> f64 {
    let m = k as i32 - 1;
    integrate(|x| (x * law.pdf(x) - law.sf(x)) * law.cdf(x).powi(m), law.lo(), r, &law.kinks(), OPTS)
}

/// Threshold of the symmetric equilibrium among `k` thresholding bidders.
pub fn nash_threshold(k: u32, law: &Distribution) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParams("need at least two bidders".into()));
    }
    let mp = require_regular(law)?;
    if !(law.pdf(law.hi()) > 0.0) {
        return Err(Error::AssumptionViolated("density vanishes at the top of the support".into()));
    }
    find_root(|r| nash_equation(k, law, r), mp, law.hi(), 1e-12)
        .map_err(|_| Error::AssumptionViolated("equilibrium equation has no sign change".into()))
}

/// Law of the highest opposing bid when `k - 1` opponents threshold at `r_star`.
pub fn equilibrium_competition(r_star: f64, k: u32, law: &Distribution) -> Competition {
    Competition::Equilibrium { law: law.clone(), k, r_star }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub k: u32,
    pub r_star: f64,
    pub seller_revenue: f64,
    pub buyer_utility: f64,
    pub no_reserve_revenue: f64,
    pub no_reserve_utility: f64,
    pub revenue_equivalent: bool,
    pub utility_equivalent: bool,
}

/// Equilibrium threshold with per-buyer revenue and utility, against the
/// no-reserve second-price benchmarks.
pub fn nash_report(k: u32, law: &Distribution) -> Result<NashReport> {
    let r_star = nash_threshold(k, law)?;
    let g = equilibrium_competition(r_star, k, law);
    let p = TwoStageProcess::new(g, None, law.clone(), 0.0)?;
    let b = utility_two_stage(law.lo(), r_star, &p)?;
    let m = k as i32 - 1;
    let (lo, hi) = law.support();
    let no_reserve_revenue =
        integrate(|x| (x * law.pdf(x) - law.sf(x)) * law.cdf(x).powi(m), lo, hi, &law.kinks(), OPTS);
    let no_reserve_utility = integrate(|x| law.sf(x) * law.cdf(x).powi(m), lo, hi, &law.kinks(), OPTS);
    Ok(NashReport {
        k,
        r_star,
        seller_revenue: b.m2,
        buyer_utility: b.u2,
        no_reserve_revenue,
        no_reserve_utility,
        revenue_equivalent: (b.m2 - no_reserve_revenue).abs() <= 1e-8,
        utility_equivalent: (b.u2 - no_reserve_utility).abs() <= 1e-8,
    })
}

/// Expected payment `E[ψ_B(B) G(B) 1{B >= r}]` of a bidder using `s`
/// against competition `g` and reserve price `r`.
pub fn myerson_payment(s: &Strategy, g: &Competition, r: f64) -> Result<f64> {
    let d = s.base();
    let (lo, hi) = d.support();
    let bd = s.pushforward();
    let xr = if r <= bd.support().0 { lo } else { bd.inverse(r) };
    let mut br = d.kinks();
    br.push(xr);
    match s.kind() {
        crate::StrategyKind::Truthful => {}
        crate::StrategyKind::DoubleThreshold { x0, x1 } => br.extend([x0, x1]),
        crate::StrategyKind::EpsThreshold { r, .. } => br.push(r),
    }
    for k in g.kinks() {
        let x = bd.inverse(k);
        if x > lo && x < hi {
            br.push(x);
        }
    }
    Ok(integrate(
        |x| {
            let b = s.bid_unchecked(x);
            if b < r {
                return 0.0;
            }
            let db = s.bid_derivative(x).unwrap_or(1.0);
            (b * d.pdf(x) - db * d.sf(x)) * g.cdf(b)
        },
        xr,
        hi,
        &br,
        OPTS,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub alpha_c: f64,
    pub u_truthful_at_alpha_c: f64,
    pub u_threshold_at_alpha_c: f64,
    pub x1_star: f64,
}

/// Best commitment utility over `x1 >= mp` with identical phase
/// competitions; independent of `α`.
pub fn best_commitment(g: &Competition, law: &Distribution) -> Result<(f64, f64)> {
    let ctx = Ctx::new(law, g, g, 0.0)?;
    let (lo, hi) = law.support();
    let mut cands: Vec<f64> = (0..200).map(|i| ctx.mp + (hi - ctx.mp) * i as f64 / 200.0).collect();
    if let Ok(r) = one_strategic_threshold(g, law) {
        cands.push(r);
    }
    let mut best = (f64::NEG_INFINITY, ctx.mp);
    for x1 in cands {
        let u = ctx.total(lo, x1);
        if u > best.0 {
            best = (u, x1);
        }
    }
    Ok(best)
}

/// Phase weight at which truthful bidding and the best commitment to a
/// threshold give the same two-stage utility.
pub fn critical_alpha(g: &Competition, law: &Distribution) -> Result<PhaseReport> {
    let (u_star, x1_star) = best_commitment(g, law)?;
    let lo = law.lo();
    let u0 = |a: f64| commitment_utility(lo, law, g, g, a).unwrap_or(f64::NAN);
    let (f0, f1) = (u0(0.0) - u_star, u0(1.0) - u_star);
    if !(f0 < 0.0) {
        return Err(Error::NoCrossing("truthful already matches the best threshold at alpha = 0".into()));
    }
    if !(f1 > 0.0) {
        return Err(Error::NoCrossing("thresholding beats truthful for every alpha".into()));
    }
    let a = find_root(|a| u0(a) - u_star, 0.0, 1.0, 1e-10).map_err(|e| Error::NoCrossing(e.to_string()))?;
    Ok(PhaseReport { alpha_c: a, u_truthful_at_alpha_c: u0(a), u_threshold_at_alpha_c: u_star, x1_star })
}

/// Threshold maximizing the worst case over `K ∈ {2..k_max}` truthful
/// symmetric bidders of the one-strategic utility.
pub fn worst_case_threshold(k_max: u32, law: &Distribution) -> Result<f64> {
    if k_max < 2 {
        return Err(Error::InvalidParams("k_max must be at least 2".into()));
    }
    let mp = require_regular(law)?;
    let hi = law.hi();
    let comps: Vec<Competition> = (2..=k_max).map(|k| Competition::max_of(law.clone(), k - 1)).collect();
    let ctxs: Vec<Ctx> = comps.iter().map(|g| Ctx { law, g1: g, g2: g, alpha: 0.0, mp }).collect();
    let worst = |r: f64| -> (f64, usize) {
        let mut w = (f64::INFINITY, 0);
        for (i, c) in ctxs.iter().enumerate() {
            let u = c.total(law.lo(), r);
            if u < w.0 {
                w = (u, i);
            }
        }
        w
    };
    let n = 400;
    let grid: Vec<f64> = (0..n).map(|i| mp + (hi - mp) * i as f64 / n as f64).collect();
    let vals: Vec<(f64, usize)> = grid.par_iter().map(|&r| worst(r)).collect();
    let mut bi = 0;
    for i in 1..n {
        if vals[i].0 > vals[bi].0 {
            bi = i;
        }
    }
    let active = vals[bi].1;
    let (a, b) = (grid[bi.saturating_sub(1)], if bi + 1 < n { grid[bi + 1] } else { hi });
    if let Ok(r) = one_strategic_threshold(&comps[active], law) {
        if r >= a && r <= b && worst(r).1 == active {
            return Ok(r);
        }
    }
    Ok(grid[bi])
}
