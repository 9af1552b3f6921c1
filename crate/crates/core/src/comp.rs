//! Laws of the highest competing bid.

use serde::{Deserialize, Serialize};

use crate::dist::Distribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Competition {
    /// A single opponent bidding truthfully from `law` (or any explicit cdf).
    Law { law: Distribution },
    /// Maximum of `count` independent truthful opponents; `count = 0` means
    /// no competition at all.
    MaxOf { law: Distribution, count: u32 },
    /// Maximum bid of `k - 1` opponents all thresholding at `r_star`.
    Equilibrium { law: Distribution, k: u32, r_star: f64 },
    /// `G(x) H(x)`: competition together with a random reserve drawn from `reserve`.
    Reserved { base: Box<Competition>, reserve: Distribution },
}

impl Competition {
    pub fn law(law: Distribution) -> Self {
        Competition::Law { law }
    }

    pub fn max_of(law: Distribution, count: u32) -> Self {
        Competition::MaxOf { law, count }
    }

    pub fn with_reserve(self, reserve: Option<Distribution>) -> Self {
        match reserve {
            Some(reserve) => Competition::Reserved { base: Box::new(self), reserve },
            None => self,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Competition::Law { law } => law.cdf(x),
            Competition::MaxOf { law, count } => law.cdf(x).powi(*count as i32),
            Competition::Equilibrium { law, k, r_star } => {
                let level = r_star * law.sf(*r_star);
                if x < level {
                    0.0
                } else if x < *r_star {
                    (1.0 - level / x).powi(*k as i32 - 1)
                } else {
                    law.cdf(x).powi(*k as i32 - 1)
                }
            }
            Competition::Reserved { base, reserve } => base.cdf(x) * reserve.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Competition::Law { law } => law.pdf(x),
            Competition::MaxOf { law, count } => {
                if *count == 0 {
                    0.0
                } else {
                    *count as f64 * law.cdf(x).powi(*count as i32 - 1) * law.pdf(x)
                }
            }
            Competition::Equilibrium { law, k, r_star } => {
                let m = *k as i32 - 1;
                let level = r_star * law.sf(*r_star);
                if x < level {
                    0.0
                } else if x < *r_star {
                    m as f64 * (1.0 - level / x).powi(m - 1) * level / (x * x)
                } else {
                    m as f64 * law.cdf(x).powi(m - 1) * law.pdf(x)
                }
            }
            Competition::Reserved { base, reserve } => {
                base.pdf(x) * reserve.cdf(x) + base.cdf(x) * reserve.pdf(x)
            }
        }
    }

    /// Points where the cdf or its density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Competition::Law { law } | Competition::MaxOf { law, .. } => law.kinks(),
            Competition::Equilibrium { law, r_star, .. } => {
                let mut k = law.kinks();
                k.extend([r_star * law.sf(*r_star), *r_star]);
                k
            }
            Competition::Reserved { base, reserve } => {
                let mut k = base.kinks();
                k.extend(reserve.kinks());
                k
            }
        }
    }
}

/// `α G1 + (1 - α) G2`.
#[derive(Debug, Clone, Copy)]
pub struct Blend<'a> {
    pub g1: &'a Competition,
    pub g2: &'a Competition,
    pub alpha: f64,
}

impl Blend<'_> {
    pub fn cdf(&self, x: f64) -> f64 {
        self.alpha * self.g1.cdf(x) + (1.0 - self.alpha) * self.g2.cdf(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.alpha * self.g1.pdf(x) + (1.0 - self.alpha) * self.g2.pdf(x)
    }

    pub fn kinks(&self) -> Vec<f64> {
        let mut k = self.g1.kinks();
        k.extend(self.g2.kinks());
        k
    }
}
