//! Waiting-time laws for the resetting epochs.
//!
//! Every density is written as f(s) = exp(-c₃s³ - c₁s + rest(s)) with the
//! leading tail exponents (c₃, c₁) split off, so that integrals of
//! exp(a s³ + b s + w(s)) f(s) can be classified as finite or infinite by
//! comparing exponents before any quadrature is attempted.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions, TailMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub enum WaitingTimeModel {
    /// Survival e^{-rs}.
    Exponential { rate: f64 },
    /// Survival e^{-rs³}.
    CubicSuperExp { rate: f64 },
    /// Survival e^{-s}/(1+s^α).
    ExpPoly { alpha: f64 },
    /// Survival e^{-s-s^β}, β ∈ (0,1).
    StretchedPlusExp { beta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DistRepr {
    family: String,
    params: BTreeMap<String, f64>,
}

impl From<WaitingTimeModel> for DistRepr {
    fn from(m: WaitingTimeModel) -> Self {
        let mut params = BTreeMap::new();
        params.insert(m.param_name().to_string(), m.param());
        DistRepr { family: m.family().to_string(), params }
    }
}

impl TryFrom<DistRepr> for WaitingTimeModel {
    type Error = Error;
    fn try_from(d: DistRepr) -> Result<Self> {
        let key = match d.family.as_str() {
            "exp" | "cubic" => "r",
            "exppoly" => "alpha",
            "stretched" => "beta",
            other => return Err(Error::Config(format!("unknown family {other:?}"))),
        };
        let v = *d
            .params
            .get(key)
            .ok_or_else(|| Error::Config(format!("family {} needs parameter {key}", d.family)))?;
        WaitingTimeModel::from_parts(&d.family, v)
    }
}

impl WaitingTimeModel {
    pub fn exponential(rate: f64) -> Result<Self> {
        positive("r", rate)?;
        Ok(Self::Exponential { rate })
    }

    pub fn cubic(rate: f64) -> Result<Self> {
        positive("r", rate)?;
        Ok(Self::CubicSuperExp { rate })
    }

    pub fn exp_poly(alpha: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        Ok(Self::ExpPoly { alpha })
    }

    pub fn stretched(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0,1), got {beta}")));
        }
        Ok(Self::StretchedPlusExp { beta })
    }

    fn from_parts(family: &str, v: f64) -> Result<Self> {
        match family {
            "exp" => Self::exponential(v),
            "cubic" => Self::cubic(v),
            "exppoly" => Self::exp_poly(v),
            "stretched" => Self::stretched(v),
            other => Err(Error::Config(format!("unknown family {other:?}"))),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exp",
            Self::CubicSuperExp { .. } => "cubic",
            Self::ExpPoly { .. } => "exppoly",
            Self::StretchedPlusExp { .. } => "stretched",
        }
    }

    fn param_name(&self) -> &'static str {
        match self {
            Self::Exponential { .. } | Self::CubicSuperExp { .. } => "r",
            Self::ExpPoly { .. } => "alpha",
            Self::StretchedPlusExp { .. } => "beta",
        }
    }

    fn param(&self) -> f64 {
        match *self {
            Self::Exponential { rate } | Self::CubicSuperExp { rate } => rate,
            Self::ExpPoly { alpha } => alpha,
            Self::StretchedPlusExp { beta } => beta,
        }
    }

    /// ℓ = lim -ln P[S>s]/s (∞ for the cubic law).
    pub fn ell(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => rate,
            Self::CubicSuperExp { .. } => f64::INFINITY,
            Self::ExpPoly { .. } | Self::StretchedPlusExp { .. } => 1.0,
        }
    }

    /// r = lim -ln P[S>s]/s³ (0 for all families other than the cubic law).
    pub fn r_cubic(&self) -> f64 {
        match *self {
            Self::CubicSuperExp { rate } => rate,
            _ => 0.0,
        }
    }

    /// (c₃, c₁) in f(s) = exp(-c₃s³ - c₁s + rest(s)).
    pub(crate) fn tail_exponents(&self) -> (f64, f64) {
        match *self {
            Self::Exponential { rate } => (0.0, rate),
            Self::CubicSuperExp { rate } => (rate, 0.0),
            Self::ExpPoly { .. } | Self::StretchedPlusExp { .. } => (0.0, 1.0),
        }
    }

    pub(crate) fn log_density_rest(&self, s: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => rate.ln(),
            Self::CubicSuperExp { rate } => (3.0 * rate).ln() + 2.0 * s.ln(),
            Self::ExpPoly { alpha } => {
                let sa = s.powf(alpha);
                (1.0 + sa + alpha * s.powf(alpha - 1.0)).ln() - 2.0 * sa.ln_1p()
            }
            Self::StretchedPlusExp { beta } => (beta * s.powf(beta - 1.0)).ln_1p() - s.powf(beta),
        }
    }

    pub fn log_survival(&self, s: f64) -> Result<f64> {
        check_time(s)?;
        Ok(match *self {
            Self::Exponential { rate } => -rate * s,
            Self::CubicSuperExp { rate } => -rate * s * s * s,
            Self::ExpPoly { alpha } => -s - s.powf(alpha).ln_1p(),
            Self::StretchedPlusExp { beta } => -s - s.powf(beta),
        })
    }

    /// P[S > s].
    pub fn survival(&self, s: f64) -> Result<f64> {
        self.log_survival(s).map(f64::exp)
    }

    pub fn log_density(&self, s: f64) -> Result<f64> {
        check_time(s)?;
        let (c3, c1) = self.tail_exponents();
        Ok(-c3 * s * s * s - c1 * s + self.log_density_rest(s))
    }

    pub fn density(&self, s: f64) -> Result<f64> {
        self.log_density(s).map(f64::exp)
    }

    /// E[exp(a S³ + b S + w(S))] for a log-weight w, +∞ when it diverges.
    /// Finiteness is decided from the exponents when they differ from the
    /// tail exponents of the law, and numerically on an exact tie.
    pub fn tilted_expectation<W: Fn(f64) -> f64>(&self, a: f64, b: f64, log_weight: W, opts: &QuadOptions) -> f64 {
        let (c3, c1) = self.tail_exponents();
        let da = snap(a - c3, a.abs().max(c3));
        let db = snap(b - c1, b.abs().max(c1));
        let mode = if da > 0.0 || (da == 0.0 && db > 0.0) {
            return f64::INFINITY;
        } else if da == 0.0 && db == 0.0 {
            TailMode::Undecided
        } else {
            TailMode::Convergent
        };
        quad::half_line_exp(
            |s| da * s * s * s + db * s + log_weight(s) + self.log_density_rest(s),
            opts,
            mode,
        )
    }

    /// E[e^{zS}], +∞ outside the domain.
    pub fn mgf(&self, z: f64) -> f64 {
        self.expect_pow_exp(0.0, z)
    }

    /// E[S^p]. Infinite moments are reported as +∞.
    pub fn moment(&self, p: f64) -> f64 {
        match *self {
            Self::CubicSuperExp { rate } => libm::tgamma(1.0 + p / 3.0) / rate.powf(p / 3.0),
            _ => self.expect_pow_exp(p, 0.0),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }

    /// E[S^p e^{zS}] for p ≥ 0.
    pub fn expect_pow_exp(&self, p: f64, z: f64) -> f64 {
        self.expect_pow_exp_with(p, z, &QuadOptions::relative(1e-12))
    }

    pub fn expect_pow_exp_with(&self, p: f64, z: f64, opts: &QuadOptions) -> f64 {
        if let Self::Exponential { rate } = *self {
            if z >= rate {
                return f64::INFINITY;
            }
            return rate * libm::tgamma(p + 1.0) / (rate - z).powf(p + 1.0);
        }
        if p == 0.0 {
            self.tilted_expectation(0.0, z, |_| 0.0, opts)
        } else {
            self.tilted_expectation(0.0, z, |s| p * s.ln(), opts)
        }
    }

    /// Inverse-transform sample from a uniform u ∈ (0, 1].
    pub fn sample_from_uniform(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::domain(format!("uniform variate must lie in (0,1], got {u}")));
        }
        let target = u.ln();
        Ok(match *self {
            Self::Exponential { rate } => -target / rate,
            Self::CubicSuperExp { rate } => (-target / rate).cbrt(),
            _ => {
                if target == 0.0 {
                    return Ok(0.0);
                }
                let mut hi = 1.0;
                while self.log_survival(hi)? > target {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                while hi - lo > 1e-12 * hi {
                    let mid = 0.5 * (lo + hi);
                    if self.log_survival(mid)? > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = 1.0 - rng.random::<f64>();
        self.sample_from_uniform(u).expect("u lies in (0,1]")
    }
}

fn snap(d: f64, scale: f64) -> f64 {
    if d.abs() <= 1e-12 * scale.max(1.0) {
        0.0
    } else {
        d
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_time(s: f64) -> Result<()> {
    if s >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("waiting time must be ≥ 0, got {s}")))
    }
}

impl fmt::Display for WaitingTimeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family(), self.param())
    }
}

impl FromStr for WaitingTimeModel {
    type Err = Error;
    /// Grammar: `exp:R`, `cubic:R`, `exppoly:ALPHA`, `stretched:BETA`.
    fn from_str(s: &str) -> Result<Self> {
        let (fam, val) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("distribution {s:?} must look like family:value")))?;
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad parameter {val:?} in distribution {s:?}")))?;
        Self::from_parts(fam.trim(), v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<WaitingTimeModel> {
        vec![
            WaitingTimeModel::exponential(1.3).unwrap(),
            WaitingTimeModel::cubic(0.7).unwrap(),
            WaitingTimeModel::exp_poly(2.0).unwrap(),
            WaitingTimeModel::exp_poly(0.6).unwrap(),
            WaitingTimeModel::stretched(0.5).unwrap(),
        ]
    }

    #[test]
    fn example_values() {
        let m = WaitingTimeModel::exp_poly(2.0).unwrap();
        assert!((m.survival(1.0).unwrap() - (-1f64).exp() / 2.0).abs() < 1e-15);
        assert!((m.density(0.0).unwrap() - 1.0).abs() < 1e-15);
        let e = WaitingTimeModel::exponential(1.0).unwrap();
        assert!((e.sample_from_uniform((-2f64).exp()).unwrap() - 2.0).abs() < 1e-15);
        assert!(e.survival(-1.0).is_err());
        assert!(WaitingTimeModel::exponential(-1.0).is_err());
        assert!(WaitingTimeModel::stretched(1.0).is_err());
    }

    #[test]
    fn densities_are_normalized_and_match_survival() {
        for m in all() {
            let total = m.mgf(0.0);
            assert!((total - 1.0).abs() < 1e-10, "{m}: {total}");
            for s in [0.3, 1.0, 2.5] {
                let h = 1e-5;
                let d = -(m.survival(s + h).unwrap() - m.survival(s - h).unwrap()) / (2.0 * h);
                assert!((d - m.density(s).unwrap()).abs() < 1e-8, "{m} at {s}");
            }
        }
    }

    #[test]
    fn exponential_closed_forms_agree_with_quadrature() {
        let m = WaitingTimeModel::exponential(1.3).unwrap();
        let opts = QuadOptions::relative(1e-12);
        for (p, z) in [(0.0, 0.4), (1.0, -2.0), (2.5, 1.0)] {
            let q = m.tilted_expectation(0.0, z, |s| p * s.ln(), &opts);
            assert!((q / m.expect_pow_exp(p, z) - 1.0).abs() < 1e-10, "p={p} z={z}");
        }
        assert_eq!(m.mgf(1.3), f64::INFINITY);
    }

    #[test]
    fn cubic_moments_closed_form() {
        let m = WaitingTimeModel::cubic(0.7).unwrap();
        let opts = QuadOptions::relative(1e-12);
        for p in [1.0, 1.5, 3.0] {
            let q = m.tilted_expectation(0.0, 0.0, |s| p * s.ln(), &opts);
            assert!((q / m.moment(p) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn finiteness_at_the_tail_boundary() {
        let opts = QuadOptions::relative(1e-10);
        // E[e^{S}] for e^{-s}/(1+s^α): finite iff α > 1
        let fin = WaitingTimeModel::exp_poly(2.0).unwrap();
        let v = fin.tilted_expectation(0.0, 1.0, |_| 0.0, &opts);
        assert!(v.is_finite() && v > 1.0);
        let inf = WaitingTimeModel::exp_poly(0.8).unwrap();
        assert_eq!(inf.tilted_expectation(0.0, 1.0, |_| 0.0, &opts), f64::INFINITY);
        // Stretched: every polynomial moment of e^{S} is finite
        let st = WaitingTimeModel::stretched(0.5).unwrap();
        assert!(st.tilted_expectation(0.0, 1.0, |s| 3.0 * s.ln(), &opts).is_finite());
        // cubic tilt above the tail rate diverges
        let c = WaitingTimeModel::cubic(1.0).unwrap();
        assert_eq!(c.tilted_expectation(1.5, -10.0, |_| 0.0, &opts), f64::INFINITY);
        assert!(c.tilted_expectation(1.0, -1.0, |_| 0.0, &opts).is_finite());
    }

    #[test]
    fn numeric_inversion_round_trips() {
        for m in all() {
            for u in [0.9, 0.3, 1e-6] {
                let s = m.sample_from_uniform(u).unwrap();
                let back = m.survival(s).unwrap();
                assert!((back / u - 1.0).abs() < 1e-9, "{m} u={u}");
            }
        }
    }

    #[test]
    fn parse_display_and_json() {
        let m: WaitingTimeModel = "exppoly:2".parse().unwrap();
        assert_eq!(m, WaitingTimeModel::ExpPoly { alpha: 2.0 });
        assert_eq!(m.to_string(), "exppoly:2");
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(j, r#"{"family":"exppoly","params":{"alpha":2.0}}"#);
        let back: WaitingTimeModel = serde_json::from_str(&j).unwrap();
        assert_eq!(back, m);
        assert!("gamma:1".parse::<WaitingTimeModel>().is_err());
        assert!(serde_json::from_str::<WaitingTimeModel>(r#"{"family":"exp","params":{"r":-1}}"#).is_err());
    }
}
