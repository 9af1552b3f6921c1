//! Truthful versus monopoly-price thresholding under three auction formats,
//! one strategic bidder among `k` symmetric bidders.

use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::numerics::{integrate, QuadOpts};

const OPTS: QuadOpts = QuadOpts { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Lazy,
    Myerson,
    Eager,
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Lazy => "lazy",
            Mechanism::Myerson => "myerson",
            Mechanism::Eager => "eager",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismComparison {
    pub mechanism: Mechanism,
    pub u_truthful: f64,
    pub u_threshold: f64,
    pub uplift_abs: f64,
    pub uplift_rel: f64,
}

impl MechanismComparison {
    fn new(mechanism: Mechanism, (u_truthful, u_threshold): (f64, f64)) -> Self {
        let uplift_abs = u_threshold - u_truthful;
        MechanismComparison { mechanism, u_truthful, u_threshold, uplift_abs, uplift_rel: uplift_abs / u_truthful }
    }
}

fn setup(k: u32, law: &Distribution) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParams("need at least two bidders".into()));
    }
    if !law.is_regular() {
        return Err(Error::AssumptionViolated("value law is not regular".into()));
    }
    law.monopoly_price().map_err(|_| Error::AssumptionViolated("revenue curve is not unimodal".into()))
}

/// Truthful utility with the monopoly reserve: `∫_{mp}^{hi} (1 - F) F^{K-1}`.
fn truthful_above_reserve(k: u32, law: &Distribution, mp: f64) -> f64 {
    let m = k as i32 - 1;
    integrate(|x| law.sf(x) * law.cdf(x).powi(m), mp, law.hi(), &law.kinks(), OPTS)
}

/// Extra utility when every type below the monopoly price wins whenever all
/// opponents miss their reserves.
fn uplift_all_below(k: u32, law: &Distribution, mp: f64) -> f64 {
    law.cdf(mp).powi(k as i32 - 1) * law.partial_mean(law.lo(), mp)
}

/// Myerson auction, truthful versus the ε → 0 lifted threshold at the
/// monopoly price.
pub fn myerson_utilities(k: u32, law: &Distribution) -> Result<(f64, f64)> {
    let mp = setup(k, law)?;
    let m = k as i32 - 1;
    // allocation: the own virtual value is nonnegative and beats every other
    // one, P(ψ(X_j) <= ψ(x)) = F(x) for a regular law
    let alloc = |x: f64| if law.psi(x) >= 0.0 { law.cdf(x).powi(m) } else { 0.0 };
    let truthful = integrate(|x| law.sf(x) * alloc(x), law.lo(), law.hi(), &[mp], OPTS);
    Ok((truthful, truthful + uplift_all_below(k, law, mp)))
}

/// Lazy second price with monopoly reserves.
pub fn lazy_utilities(k: u32, law: &Distribution) -> Result<(f64, f64)> {
    let mp = setup(k, law)?;
    let m = k as i32 - 1;
    let truthful = truthful_above_reserve(k, law, mp);
    let level = mp * law.sf(mp);
    let extra = integrate(
        |x| x * law.cdf(level / law.sf(x)).powi(m) * law.pdf(x),
        law.lo(),
        mp,
        &law.kinks(),
        OPTS,
    );
    Ok((truthful, truthful + extra))
}

/// Eager second price with monopoly reserves.
pub fn eager_utilities(k: u32, law: &Distribution) -> Result<(f64, f64)> {
    let mp = setup(k, law)?;
    let m = k as i32 - 1;
    // competition is the law of the highest reserve-clearing bid
    let g = |x: f64| law.cdf(x.max(mp)).powi(m);
    let truthful = integrate(|x| law.sf(x) * g(x), mp, law.hi(), &law.kinks(), OPTS);
    let below = integrate(|x| x * g(0.0) * law.pdf(x), law.lo(), mp, &law.kinks(), OPTS);
    Ok((truthful, truthful + below))
}

/// The three mechanisms side by side. With `thresholding` off the strategic
/// bidder stays truthful and every uplift is zero.
pub fn compare_all(k: u32, law: &Distribution, thresholding: bool) -> Result<Vec<MechanismComparison>> {
    let mut rows = vec![
        MechanismComparison::new(Mechanism::Lazy, lazy_utilities(k, law)?),
        MechanismComparison::new(Mechanism::Myerson, myerson_utilities(k, law)?),
        MechanismComparison::new(Mechanism::Eager, eager_utilities(k, law)?),
    ];
    if !thresholding {
        for r in rows.iter_mut() {
            *r = MechanismComparison::new(r.mechanism, (r.u_truthful, r.u_truthful));
        }
    }
    let lazy = rows[0].uplift_abs;
    if rows[1].uplift_abs < lazy - 1e-9 || rows[2].uplift_abs < lazy - 1e-9 {
        return Err(Error::AssumptionViolated("mechanism uplift ordering failed".into()));
    }
    Ok(rows)
}
