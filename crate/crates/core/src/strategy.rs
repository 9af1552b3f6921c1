//! Bid-shading strategies and the bid laws they induce.

use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::numerics::bisect_predicate;

const THRESH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyKind {
    Truthful,
    DoubleThreshold { x0: f64, x1: f64 },
    EpsThreshold { r: f64, eps: f64 },
}

/// A monotone bid map tied to the bidder's value law.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    kind: StrategyKind,
    base: Distribution,
    /// Plateau revenue: `x1 S(x1)` or `(r - eps) S(r)`.
    level: f64,
}

/// `x̄0(x1) = inf{x : x (1 - F(x)) >= x1 (1 - F(x1))}`.
pub fn lower_threshold_bound(base: &Distribution, x1: f64) -> f64 {
    let level = base.revenue_curve(x1);
    let lo = base.lo();
    if base.revenue_curve(lo) >= level {
        return lo;
    }
    // first grid point reaching the level, then bisect inside that cell
    let n = 512;
    let mut prev = lo;
    for i in 1..=n {
        let x = lo + (x1 - lo) * i as f64 / n as f64;
        if base.revenue_curve(x) >= level {
            return bisect_predicate(|y| base.revenue_curve(y) >= level, prev, x, 1e-14);
        }
        prev = x;
    }
    x1
}

impl Strategy {
    pub fn new(kind: StrategyKind, base: Distribution) -> Result<Self> {
        let (lo, hi) = base.support();
        let level = match kind {
            StrategyKind::Truthful => 0.0,
            StrategyKind::DoubleThreshold { x0, x1 } => {
                if !(x0 >= lo && x0 <= x1 && x1 <= hi) {
                    return Err(Error::InvalidThresholds(format!("need lo <= x0 <= x1 <= hi, got x0={x0}, x1={x1}")));
                }
                if x0 < x1 {
                    if x1 >= hi {
                        return Err(Error::InvalidThresholds("x1 must lie below the top of the support".into()));
                    }
                    let bar = lower_threshold_bound(&base, x1);
                    if x0 > bar + THRESH_TOL {
                        return Err(Error::InvalidThresholds(format!("x0={x0} exceeds x̄0={bar}")));
                    }
                }
                x1 * base.sf(x1)
            }
            StrategyKind::EpsThreshold { r, eps } => {
                if !(r > lo && r < hi && eps >= 0.0) {
                    return Err(Error::InvalidParams(format!("need lo < r < hi and eps >= 0, got r={r}, eps={eps}")));
                }
                if eps >= r {
                    return Err(Error::NonMonotone);
                }
                (r - eps) * base.sf(r)
            }
        };
        Ok(Strategy { kind, base, level })
    }

    pub fn truthful(base: Distribution) -> Self {
        Strategy { kind: StrategyKind::Truthful, base, level: 0.0 }
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn base(&self) -> &Distribution {
        &self.base
    }

    /// Revenue level `R` of the flat part of the bid revenue curve.
    pub fn level(&self) -> f64 {
        self.level
    }

    fn in_support(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.base.support();
        if x >= lo && x <= hi {
            Ok(())
        } else {
            Err(Error::OutOfSupport(x))
        }
    }

    /// Whether `x` lies where the bid map is truthful (left limits at thresholds).
    fn truthful_at(&self, x: f64) -> bool {
        match self.kind {
            StrategyKind::Truthful => true,
            StrategyKind::DoubleThreshold { x0, x1 } => {
                x0 == x1 || x < x0 || (x == x0 && x0 > self.base.lo()) || x > x1
            }
            StrategyKind::EpsThreshold { r, .. } => x > r,
        }
    }

    /// Bid map without the support check.
    pub fn bid_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            StrategyKind::Truthful => x,
            StrategyKind::DoubleThreshold { x0, x1 } => {
                if x0 == x1 || x < x0 || x > x1 {
                    x
                } else {
                    self.level / self.base.sf(x)
                }
            }
            StrategyKind::EpsThreshold { r, eps } => {
                if x > r {
                    x
                } else {
                    self.level / self.base.sf(x) + eps
                }
            }
        }
    }

    pub fn bid(&self, x: f64) -> Result<f64> {
        self.in_support(x)?;
        Ok(self.bid_unchecked(x))
    }

    /// `β'(x)`, taken from the left at threshold points.
    pub fn bid_derivative(&self, x: f64) -> Result<f64> {
        self.in_support(x)?;
        if self.truthful_at(x) {
            return Ok(1.0);
        }
        let s = self.base.sf(x);
        Ok(self.level * self.base.pdf(x) / (s * s))
    }

    /// Seller-perceived virtual value of the bid, `β - β' (1 - F) / f`.
    pub fn bid_virtual_value(&self, x: f64) -> Result<f64> {
        self.in_support(x)?;
        if self.truthful_at(x) {
            return self.base.virtual_value(x);
        }
        Ok(match self.kind {
            StrategyKind::EpsThreshold { eps, .. } => eps,
            _ => 0.0,
        })
    }

    /// Bid virtual value computed by a seller who believes values follow `alt`.
    pub fn perceived_virtual_value(&self, alt: &Distribution, x: f64) -> Result<f64> {
        self.in_support(x)?;
        let (alo, ahi) = alt.support();
        if !(x >= alo && x <= ahi) {
            return Err(Error::OutOfSupport(x));
        }
        if !(self.base.pdf(x) > 0.0) {
            return Err(Error::DegenerateDensity(x));
        }
        let inv = alt.inverse_hazard(x)?;
        Ok(self.bid_unchecked(x) - self.bid_derivative(x)? * inv)
    }

    /// Smallest bid in the support whose bid virtual value reaches `t`, or
    /// `None` if no bid does.
    pub fn min_bid_with_virtual_value(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.base.support();
        let d = &self.base;
        let search = |a: f64, b: f64| -> Option<f64> {
            if d.psi(b) < t {
                return None;
            }
            let x = bisect_predicate(|y| d.psi(y) >= t, a, b, 1e-13);
            Some(self.bid_unchecked(x))
        };
        match self.kind {
            StrategyKind::Truthful => {
                if d.psi(lo) >= t {
                    Some(lo)
                } else {
                    search(lo, hi)
                }
            }
            StrategyKind::EpsThreshold { r, eps } => {
                if t <= eps {
                    Some(self.bid_unchecked(lo))
                } else {
                    search(r, hi)
                }
            }
            StrategyKind::DoubleThreshold { x0, x1 } => {
                if x0 == x1 {
                    return Strategy::truthful(d.clone()).min_bid_with_virtual_value(t);
                }
                if x0 > lo && d.psi(x0) >= t {
                    if d.psi(lo) >= t {
                        return Some(lo);
                    }
                    return search(lo, x0);
                }
                if t <= 0.0 {
                    return Some(self.level / d.sf(x0));
                }
                search(x1, hi)
            }
        }
    }

    pub fn pushforward(&self) -> BidDistribution {
        BidDistribution { strategy: self.clone() }
    }
}

/// Law of `B = β(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidDistribution {
    strategy: Strategy,
}

impl BidDistribution {
    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    /// Smallest and largest bids.
    pub fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.strategy.base.support();
        (self.strategy.bid_unchecked(lo), hi)
    }

    /// Value whose bid is `b`; for bids in a gap of the image, the value at
    /// the bottom of the gap.
    pub fn inverse(&self, b: f64) -> f64 {
        let s = &self.strategy;
        let d = &s.base;
        let (lo, hi) = d.support();
        let (bmin, _) = self.support();
        if b <= bmin {
            return lo;
        }
        if b >= hi {
            return hi;
        }
        match s.kind {
            StrategyKind::Truthful => b,
            StrategyKind::DoubleThreshold { x0, x1 } => {
                if x0 == x1 || (b < x0 && x0 > d.lo()) || b > x1 {
                    b
                } else if b < s.level / d.sf(x0) {
                    x0
                } else {
                    d.isf(s.level / b).clamp(x0, x1)
                }
            }
            StrategyKind::EpsThreshold { r, eps } => {
                if b > r {
                    b
                } else {
                    d.isf(s.level / (b - eps)).min(r)
                }
            }
        }
    }

    /// Survival `P(B > b)`, equal to `P(B >= b)` since the law has no atoms.
    pub fn sf(&self, b: f64) -> f64 {
        let s = &self.strategy;
        let d = &s.base;
        let (bmin, hi) = self.support();
        if b < bmin {
            return 1.0;
        }
        if b >= hi {
            return 0.0;
        }
        match s.kind {
            StrategyKind::Truthful => d.sf(b),
            StrategyKind::DoubleThreshold { x0, x1 } => {
                if x0 == x1 || (b < x0 && x0 > d.lo()) || b > x1 {
                    d.sf(b)
                } else if b < s.level / d.sf(x0) {
                    d.sf(x0)
                } else {
                    s.level / b
                }
            }
            StrategyKind::EpsThreshold { r, eps } => {
                if b > r {
                    d.sf(b)
                } else {
                    s.level / (b - eps)
                }
            }
        }
    }

    pub fn cdf(&self, b: f64) -> f64 {
        1.0 - self.sf(b)
    }

    pub fn pdf(&self, b: f64) -> f64 {
        let s = &self.strategy;
        let d = &s.base;
        let (bmin, hi) = self.support();
        if b < bmin || b > hi {
            return 0.0;
        }
        match s.kind {
            StrategyKind::Truthful => d.pdf(b),
            StrategyKind::DoubleThreshold { x0, x1 } => {
                if x0 == x1 || (b < x0 && x0 > d.lo()) || b > x1 {
                    d.pdf(b)
                } else if b < s.level / d.sf(x0) {
                    0.0
                } else {
                    s.level / (b * b)
                }
            }
            StrategyKind::EpsThreshold { r, eps } => {
                if b > r {
                    d.pdf(b)
                } else {
                    s.level / ((b - eps) * (b - eps))
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.strategy.bid_unchecked(self.strategy.base.quantile(u))
    }

    /// Seller revenue `b (1 - F_B(b-))` at reserve price `b`.
    pub fn revenue(&self, b: f64) -> f64 {
        if b <= 0.0 {
            return 0.0;
        }
        b * self.sf(b)
    }

    /// Intervals of `[0, max bid]` that no type bids into, as
    /// `(start, end, P(B >= u))` on each interval.
    pub fn gaps(&self) -> Vec<(f64, f64, f64)> {
        let s = &self.strategy;
        let d = &s.base;
        let lo = d.lo();
        let (bmin, _) = self.support();
        let mut out = Vec::new();
        if let StrategyKind::DoubleThreshold { x0, x1 } = s.kind {
            if x0 > lo && x0 < x1 {
                if lo > 0.0 {
                    out.push((0.0, lo, 1.0));
                }
                let top = s.level / d.sf(x0);
                if top > x0 {
                    out.push((x0, top, d.sf(x0)));
                }
                return out;
            }
        }
        if bmin > 0.0 {
            out.push((0.0, bmin, 1.0));
        }
        out
    }

    /// Bid-space points where the density changes form.
    pub fn kinks(&self) -> Vec<f64> {
        let s = &self.strategy;
        let mut k: Vec<f64> = s.base.kinks();
        k.push(self.support().0);
        match s.kind {
            StrategyKind::Truthful => {}
            StrategyKind::DoubleThreshold { x0, x1 } => {
                k.extend([x0, x1]);
                if x0 < x1 {
                    k.push(s.level / s.base.sf(x0));
                }
            }
            StrategyKind::EpsThreshold { r, .. } => k.push(r),
        }
        k
    }
}
