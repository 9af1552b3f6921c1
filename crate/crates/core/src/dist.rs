//! Value distributions and their Myerson transforms.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate, QuadOpts};

/// Grid size used by the shape checks and the monopoly-price scan.
pub const GRID: usize = 10_000;
const SHAPE_TOL: f64 = 1e-10;

/// Serialized form of a distribution, `{"family": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform { a: f64, b: f64 },
    Exponential {
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
    },
    TruncatedLogNormal { mu: f64, sigma: f64, lower: f64, upper: f64 },
    PiecewiseEmpirical { knots: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64, upper: f64, mass: f64, tail: f64 },
    LogNormal { mu: f64, sigma: f64, lower: f64, upper: f64, pl: f64, pu: f64, mass: f64 },
    Piecewise { xs: Vec<f64>, fs: Vec<f64> },
}

/// A value law on a compact support `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub struct Distribution {
    spec: DistSpec,
    fam: Family,
    lo: f64,
    hi: f64,
}

fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn phi_upper(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

fn phi_inv(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

impl TryFrom<DistSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: DistSpec) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        let (fam, lo, hi) = match &spec {
            &DistSpec::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
                    return bad("uniform needs 0 <= a < b");
                }
                (Family::Uniform { a, b }, a, b)
            }
            &DistSpec::Exponential { rate, upper } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return bad("exponential rate must be positive");
                }
                let upper = upper.unwrap_or(-(1e-9f64).ln() / rate);
                if !(upper.is_finite() && upper > 0.0) {
                    return bad("exponential truncation must be positive");
                }
                let tail = (-rate * upper).exp();
                let mass = -(-rate * upper).exp_m1();
                (Family::Exponential { rate, upper, mass, tail }, 0.0, upper)
            }
            &DistSpec::TruncatedLogNormal { mu, sigma, lower, upper } => {
                if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
                    return bad("lognormal needs finite mu and sigma > 0");
                }
                if !(lower.is_finite() && upper.is_finite() && lower >= 0.0 && upper > lower) {
                    return bad("lognormal truncation needs 0 <= lower < upper");
                }
                let pl = if lower > 0.0 { phi((lower.ln() - mu) / sigma) } else { 0.0 };
                let pu = phi((upper.ln() - mu) / sigma);
                let mass = pu - pl;
                if !(mass > 0.0) {
                    return bad("lognormal truncation window carries no mass");
                }
                (Family::LogNormal { mu, sigma, lower, upper, pl, pu, mass }, lower, upper)
            }
            DistSpec::PiecewiseEmpirical { knots } => {
                if knots.len() < 2 {
                    return bad("piecewise law needs at least two knots");
                }
                let xs: Vec<f64> = knots.iter().map(|k| k[0]).collect();
                let fs: Vec<f64> = knots.iter().map(|k| k[1]).collect();
                if xs[0] < 0.0 || xs.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("knot abscissae must be nonnegative and strictly increasing");
                }
                if fs[0] != 0.0 || *fs.last().unwrap() != 1.0 || fs.windows(2).any(|w| w[1] < w[0]) {
                    return bad("knot cdf values must rise from 0 to 1");
                }
                let (lo, hi) = (xs[0], *xs.last().unwrap());
                (Family::Piecewise { xs, fs }, lo, hi)
            }
        };
        Ok(Distribution { spec, fam, lo, hi })
    }
}

impl From<Distribution> for DistSpec {
    fn from(d: Distribution) -> DistSpec {
        d.spec
    }
}

impl Distribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        DistSpec::Uniform { a, b }.try_into()
    }

    pub fn exponential(rate: f64, upper: Option<f64>) -> Result<Self> {
        DistSpec::Exponential { rate, upper }.try_into()
    }

    pub fn truncated_log_normal(mu: f64, sigma: f64, lower: f64, upper: f64) -> Result<Self> {
        DistSpec::TruncatedLogNormal { mu, sigma, lower, upper }.try_into()
    }

    pub fn piecewise(knots: Vec<[f64; 2]>) -> Result<Self> {
        DistSpec::PiecewiseEmpirical { knots }.try_into()
    }

    pub fn spec(&self) -> &DistSpec {
        &self.spec
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        match &self.fam {
            Family::Uniform { a, b } => (x - a) / (b - a),
            Family::Exponential { rate, mass, .. } => -(-rate * x).exp_m1() / mass,
            Family::LogNormal { mu, sigma, pl, mass, .. } => {
                let z = (x.ln() - mu) / sigma;
                ((phi(z) - pl) / mass).clamp(0.0, 1.0)
            }
            Family::Piecewise { xs, fs } => {
                let i = segment(xs, x);
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                fs[i] + t * (fs[i + 1] - fs[i])
            }
        }
    }

    /// Survival function `1 - F(x)`, computed without cancellation where the
    /// family allows it.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 1.0;
        }
        if x >= self.hi {
            return 0.0;
        }
        match &self.fam {
            Family::Uniform { a: _, b } => (b - x) / (self.hi - self.lo),
            Family::Exponential { rate, upper, mass, .. } => {
                (-rate * x).exp() * -(-rate * (upper - x)).exp_m1() / mass
            }
            Family::LogNormal { mu, sigma, upper, mass, .. } => {
                let z = (x.ln() - mu) / sigma;
                let zu = (upper.ln() - mu) / sigma;
                let s = if z > 0.0 { phi_upper(z) - phi_upper(zu) } else { phi(zu) - phi(z) };
                (s / mass).clamp(0.0, 1.0)
            }
            Family::Piecewise { .. } => 1.0 - self.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        match &self.fam {
            Family::Uniform { a, b } => 1.0 / (b - a),
            Family::Exponential { rate, mass, .. } => rate * (-rate * x).exp() / mass,
            Family::LogNormal { mu, sigma, mass, .. } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = (x.ln() - mu) / sigma;
                (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt()) / mass
            }
            Family::Piecewise { xs, fs } => {
                let i = segment(xs, x);
                (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i])
            }
        }
    }

    /// Smallest `x` with `F(x) >= u`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lo;
        }
        if u >= 1.0 {
            return self.hi;
        }
        let x = match &self.fam {
            Family::Uniform { a, b } => a + u * (b - a),
            Family::Exponential { rate, mass, .. } => -(-u * mass).ln_1p() / rate,
            Family::LogNormal { mu, sigma, pl, mass, .. } => {
                let mut x = (mu + sigma * phi_inv(pl + u * mass)).exp();
                for _ in 0..3 {
                    let f = self.pdf(x);
                    if !(f > 0.0) {
                        break;
                    }
                    let step = if u > 0.5 { (self.sf(x) - (1.0 - u)) / f } else { (u - self.cdf(x)) / f };
                    let nx = x + step;
                    if !(nx > self.lo && nx < self.hi) {
                        break;
                    }
                    x = nx;
                }
                x
            }
            Family::Piecewise { xs, fs } => {
                let i = fs.partition_point(|&f| f < u).max(1) - 1;
                let i = i.min(xs.len() - 2);
                let df = fs[i + 1] - fs[i];
                if df <= 0.0 {
                    xs[i + 1]
                } else {
                    xs[i] + (u - fs[i]) / df * (xs[i + 1] - xs[i])
                }
            }
        };
        x.clamp(self.lo, self.hi)
    }

    /// Inverse survival: smallest `x` with `1 - F(x) <= s`.
    pub fn isf(&self, s: f64) -> f64 {
        match &self.fam {
            Family::Exponential { rate, tail, mass, .. } if s > 0.0 && s < 1.0 => {
                // e^{-rate x} = s * mass + tail
                (-(s * mass + tail).ln() / rate).clamp(self.lo, self.hi)
            }
            _ => self.quantile(1.0 - s),
        }
    }

    /// Points where the density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.fam {
            Family::Piecewise { xs, .. } => xs.clone(),
            _ => vec![self.lo, self.hi],
        }
    }

    fn check_inside(&self, x: f64) -> Result<f64> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::OutOfSupport(x));
        }
        let f = self.pdf(x);
        if !(f > 0.0) {
            return Err(Error::DegenerateDensity(x));
        }
        Ok(f)
    }

    /// Myerson virtual value `x - (1 - F(x)) / f(x)`.
    pub fn virtual_value(&self, x: f64) -> Result<f64> {
        let f = self.check_inside(x)?;
        Ok(x - self.sf(x) / f)
    }

    /// Hazard rate `f(x) / (1 - F(x))`; infinite at the top of the support.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        let f = self.check_inside(x)?;
        Ok(f / self.sf(x))
    }

    /// `1 / hazard`, finite everywhere the density is positive.
    pub fn inverse_hazard(&self, x: f64) -> Result<f64> {
        let f = self.check_inside(x)?;
        Ok(self.sf(x) / f)
    }

    /// Virtual value without support checks; `-inf` where the density vanishes.
    pub fn psi(&self, x: f64) -> f64 {
        let f = self.pdf(x);
        if f > 0.0 {
            x - self.sf(x) / f
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn revenue_curve(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        r * self.sf(r)
    }

    /// `E[X 1{a <= X <= b}]`.
    pub fn partial_mean(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(self.lo), b.min(self.hi));
        integrate(|x| x * self.pdf(x), a, b, &self.kinks(), QuadOpts::tight())
    }

    fn grid(&self) -> Vec<f64> {
        crate::numerics::linspace(self.lo, self.hi, GRID - 1)
    }

    /// Quasi-concavity of the revenue curve on a 10^4-point grid.
    pub fn check_quasi_regular(&self) -> QuasiRegularity {
        let xs = self.grid();
        let rs: Vec<f64> = xs.iter().map(|&x| self.revenue_curve(x)).collect();
        quasi_concavity(&xs, &rs)
    }

    /// Whether the virtual value is nondecreasing on the grid.
    pub fn is_regular(&self) -> bool {
        let mut prev = f64::NEG_INFINITY;
        for &x in &self.grid()[1..GRID - 1] {
            let f = self.pdf(x);
            if !(f > 0.0) {
                return false;
            }
            let p = x - self.sf(x) / f;
            if p < prev - SHAPE_TOL * (1.0 + prev.abs()) {
                return false;
            }
            prev = p;
        }
        true
    }

    /// Smallest maximizer of `r (1 - F(r))`.
    pub fn monopoly_price(&self) -> Result<f64> {
        let q = self.check_quasi_regular();
        if !q.quasi_concave {
            return Err(Error::NotUnimodal);
        }
        let xs = self.grid();
        let i = q.argmax;
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(xs.len() - 1)];
        let slope = |r: f64| self.sf(r) - r * self.pdf(r);
        if slope(a) <= 0.0 {
            return Ok(a);
        }
        if slope(b) >= 0.0 {
            return Ok(b);
        }
        find_root(slope, a, b, 1e-13).map_err(|_| Error::NotUnimodal)
    }
}

/// Index `i` of the knot segment `[xs[i], xs[i+1])` containing `x`.
fn segment(xs: &[f64], x: f64) -> usize {
    let i = xs.partition_point(|&k| k <= x);
    i.clamp(1, xs.len() - 1) - 1
}

/// Outcome of a quasi-concavity scan.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiRegularity {
    pub quasi_concave: bool,
    pub argmax: usize,
    /// Grid cells `(i, x_i)` where the curve moves the wrong way.
    pub violations: Vec<(usize, f64)>,
}

/// Checks that `ys` rises up to its first maximum and falls after it.
pub fn quasi_concavity(xs: &[f64], ys: &[f64]) -> QuasiRegularity {
    let mut m = 0;
    for (i, &y) in ys.iter().enumerate() {
        if y > ys[m] {
            m = i;
        }
    }
    let mut violations = Vec::new();
    for i in 0..ys.len() - 1 {
        let tol = SHAPE_TOL * (1.0 + ys[i].abs());
        let wrong = if i < m { ys[i + 1] < ys[i] - tol } else { ys[i + 1] > ys[i] + tol };
        if wrong {
            violations.push((i, xs[i]));
        }
    }
    QuasiRegularity { quasi_concave: violations.is_empty(), argmax: m, violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u01() -> Distribution {
        Distribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_virtual_value() {
        let d = u01();
        assert_eq!(d.virtual_value(0.5).unwrap(), 0.0);
        assert_eq!(d.virtual_value(1.0).unwrap(), 1.0);
        assert!(matches!(d.virtual_value(1.5), Err(Error::OutOfSupport(_))));
    }

    #[test]
    fn exponential_virtual_value() {
        let d = Distribution::exponential(1.0, Some(50.0)).unwrap();
        let direct = 2.0 - d.sf(2.0) / d.pdf(2.0);
        assert!((d.virtual_value(2.0).unwrap() - 1.0).abs() < 1e-8);
        assert!((direct - 1.0).abs() < 1e-8);
    }

    #[test]
    fn monopoly_prices() {
        assert!((u01().monopoly_price().unwrap() - 0.5).abs() < 1e-10);
        let d = Distribution::uniform(0.0, 2.0).unwrap();
        assert!((d.monopoly_price().unwrap() - 1.0).abs() < 1e-10);
        let e = Distribution::exponential(1.0, Some(50.0)).unwrap();
        assert!((e.monopoly_price().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn revenue_examples() {
        let d = u01();
        assert_eq!(d.revenue_curve(0.5), 0.25);
        assert_eq!(d.revenue_curve(0.0), 0.0);
        assert_eq!(d.revenue_curve(0.75), 0.1875);
        assert_eq!(d.revenue_curve(3.0), 0.0);
    }

    #[test]
    fn quasi_regular_examples() {
        assert!(u01().check_quasi_regular().quasi_concave);
        let e = Distribution::exponential(4.0, Some(50.0)).unwrap();
        assert!(e.check_quasi_regular().quasi_concave);
    }

    #[test]
    fn piecewise_basics() {
        let d = Distribution::piecewise(vec![[0.0, 0.0], [1.0, 0.5], [2.0, 1.0]]).unwrap();
        assert!((d.cdf(0.5) - 0.25).abs() < 1e-15);
        assert!((d.quantile(0.75) - 1.5).abs() < 1e-15);
        assert_eq!(d.pdf(1.5), 0.5);
    }

    #[test]
    fn piecewise_flat_segment_quantile() {
        let d = Distribution::piecewise(vec![[0.0, 0.0], [1.0, 0.5], [2.0, 0.5], [3.0, 1.0]]).unwrap();
        assert_eq!(d.quantile(0.5), 1.0);
        assert!((d.quantile(0.6) - 2.2).abs() < 1e-12);
    }

    #[test]
    fn bad_params_rejected() {
        assert!(Distribution::uniform(1.0, 1.0).is_err());
        assert!(Distribution::exponential(-1.0, None).is_err());
        assert!(Distribution::piecewise(vec![[0.0, 0.1], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn default_truncation() {
        let d = Distribution::exponential(2.0, None).unwrap();
        assert!((d.sf_untruncated_check() - 1e-9).abs() < 1e-15);
    }

    impl Distribution {
        fn sf_untruncated_check(&self) -> f64 {
            match self.fam {
                Family::Exponential { tail, .. } => tail,
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn spec_roundtrip() {
        let d = Distribution::truncated_log_normal(0.0, 0.5, 0.0, 5.0).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        let back: Distribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert!(s.contains("\"family\":\"truncated_log_normal\""));
    }
}
