//! Rewards earned over one resetting interval of length s by the three
//! functionals of a Brownian path started afresh at 0:
//! occupation time of the positive half-line, area, and absolute area.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::abs_law::AbsAreaLaw;
use crate::airy::{self, AiryTable, MEAN_ABS_AREA};
use crate::dist::WaitingTimeModel;
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    Occupation,
    Area,
    AbsArea,
}

impl std::str::FromStr for FunctionalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "occupation" => Ok(Self::Occupation),
            "area" => Ok(Self::Area),
            "abs-area" | "absarea" => Ok(Self::AbsArea),
            _ => Err(Error::Config(format!("unknown functional {s:?}"))),
        }
    }
}

impl std::fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Occupation => "occupation",
            Self::Area => "area",
            Self::AbsArea => "abs-area",
        })
    }
}

pub const DEFAULT_PATH_STEP: f64 = 1.0 / 1024.0;
/// Minimum number of path steps per interval.
pub const MIN_PATH_STEPS: usize = 64;

#[derive(Debug, Clone)]
pub struct FunctionalModel {
    kind: FunctionalKind,
    /// Largest path step for the absolute-area sampler.
    pub path_step: f64,
    airy: Option<Arc<AiryTable>>,
    law: Option<Arc<AbsAreaLaw>>,
}

/// Exponents of ln E_s(k) = cubic·s³ + linear·s + rest(s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Growth {
    pub cubic: f64,
    pub linear: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalStats {
    pub mu: f64,
    pub v: f64,
    pub valid_lln: bool,
    pub valid_clt: bool,
    pub valid_good_ldp: bool,
}

/// Gauss–Legendre average of g(sin²θ) over θ ∈ (0, π/2), i.e. E[g(x)] under
/// the arcsine law, with a 512-node check and an adaptive fallback.
pub(crate) fn arcsine_average<G: Fn(f64) -> f64>(g: G, check: bool) -> f64 {
    let f = |t: f64| {
        let s = t.sin();
        g(s * s)
    };
    let v256 = quad::fixed(quad::gl256(), 0.0, FRAC_PI_2, f) / FRAC_PI_2;
    if !check {
        return v256;
    }
    let v512 = quad::fixed(quad::gl512(), 0.0, FRAC_PI_2, f) / FRAC_PI_2;
    if (v512 - v256).abs() <= 1e-13 * v512.abs() || !v512.is_finite() {
        return v512;
    }
    quad::adaptive(f, 0.0, FRAC_PI_2, &QuadOptions::relative(1e-14)).value / FRAC_PI_2
}

/// ln(I₀(x)e^{-x}) for x ≥ 0.
pub fn ln_i0_scaled(x: f64) -> f64 {
    if x <= 30.0 {
        let q = 0.25 * x * x;
        let (mut t, mut s) = (1.0, 1.0);
        for k in 1..200 {
            t *= q / (k * k) as f64;
            s += t;
            if t < 1e-17 * s {
                break;
            }
        }
        s.ln() - x
    } else {
        let (mut t, mut s) = (1.0f64, 1.0);
        for k in 1..40 {
            let kf = k as f64;
            let next = t * (2.0 * kf - 1.0).powi(2) / (kf * 8.0 * x);
            if next.abs() > t.abs() {
                break;
            }
            t = next;
            s += t;
            if t < 1e-17 * s {
                break;
            }
        }
        s.ln() - 0.5 * (2.0 * PI * x).ln()
    }
}

impl FunctionalModel {
    pub fn new(kind: FunctionalKind) -> Self {
        match kind {
            FunctionalKind::Occupation => Self::occupation(),
            FunctionalKind::Area => Self::area(),
            FunctionalKind::AbsArea => Self::abs_area(),
        }
    }

    pub fn occupation() -> Self {
        FunctionalModel { kind: FunctionalKind::Occupation, path_step: DEFAULT_PATH_STEP, airy: None, law: None }
    }

    pub fn area() -> Self {
        FunctionalModel { kind: FunctionalKind::Area, path_step: DEFAULT_PATH_STEP, airy: None, law: None }
    }

    /// Absolute area with the default Airy table and no tabulated law; tilts
    /// k > 0 then fail with [`Error::OracleRequired`].
    pub fn abs_area() -> Self {
        FunctionalModel {
            kind: FunctionalKind::AbsArea,
            path_step: DEFAULT_PATH_STEP,
            airy: Some(airy::default_table()),
            law: None,
        }
    }

    pub fn with_law(mut self, law: Arc<AbsAreaLaw>) -> Self {
        self.law = Some(law);
        self
    }

    pub fn with_airy(mut self, table: Arc<AiryTable>) -> Self {
        self.airy = Some(table);
        self
    }

    pub fn with_path_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::Config(format!("path step must lie in (0,1], got {step}")));
        }
        self.path_step = step;
        Ok(self)
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    /// Growth exponent: rewards are O(s^{1+α/2}).
    pub fn alpha(&self) -> f64 {
        match self.kind {
            FunctionalKind::Occupation => 0.0,
            _ => 1.0,
        }
    }

    pub fn law(&self) -> Option<&Arc<AbsAreaLaw>> {
        self.law.as_ref()
    }

    pub(crate) fn airy(&self) -> &AiryTable {
        self.airy.as_deref().expect("abs-area model carries an Airy table")
    }

    fn need_law(&self) -> Result<&AbsAreaLaw> {
        self.law
            .as_deref()
            .ok_or_else(|| Error::OracleRequired("abs-area tilt k > 0 needs the tabulated law of ∫₀¹|B|".into()))
    }

    pub(crate) fn growth(&self, k: f64) -> Result<Growth> {
        Ok(match self.kind {
            FunctionalKind::Occupation => Growth { cubic: 0.0, linear: k.max(0.0) },
            FunctionalKind::Area => Growth { cubic: k * k / 6.0, linear: 0.0 },
            FunctionalKind::AbsArea => {
                if k < 0.0 {
                    Growth { cubic: 0.0, linear: -self.airy().nu1() * (-k).powf(2.0 / 3.0) }
                } else if k == 0.0 {
                    Growth { cubic: 0.0, linear: 0.0 }
                } else {
                    self.need_law()?;
                    Growth { cubic: k * k / 6.0, linear: 0.0 }
                }
            }
        })
    }

    /// ln E_s(k) − cubic·s³ − linear·s.
    pub(crate) fn log_rest(&self, s: f64, k: f64) -> f64 {
        match self.kind {
            FunctionalKind::Occupation => {
                let a = k * s;
                let shift = a.max(0.0);
                arcsine_average(|x| (a * x - shift).exp(), a.abs() > 200.0).ln()
            }
            FunctionalKind::Area => 0.0,
            FunctionalKind::AbsArea => {
                if k < 0.0 {
                    self.airy().ln_h(-k * s.powf(1.5))
                } else if k == 0.0 {
                    0.0
                } else {
                    self.law.as_ref().map_or(f64::NAN, |l| l.ln_mgf_ratio(k * s.powf(1.5)))
                }
            }
        }
    }

    /// Sign and ln|∂_k E_s(k)| − cubic·s³ − linear·s.
    pub(crate) fn log_rest_dk(&self, s: f64, k: f64) -> (f64, f64) {
        match self.kind {
            FunctionalKind::Occupation => {
                let a = k * s;
                let shift = a.max(0.0);
                (1.0, s.ln() + arcsine_average(|x| x * (a * x - shift).exp(), a.abs() > 200.0).ln())
            }
            FunctionalKind::Area => {
                if k == 0.0 {
                    (0.0, f64::NEG_INFINITY)
                } else {
                    (k.signum(), (k.abs() / 3.0).ln() + 3.0 * s.ln())
                }
            }
            FunctionalKind::AbsArea => {
                let u = k.abs() * s.powf(1.5);
                let l = if k < 0.0 {
                    self.airy().ln_first_moment_scaled(u)
                } else if k == 0.0 {
                    MEAN_ABS_AREA.ln()
                } else {
                    self.law.as_ref().map_or(f64::NAN, |l| l.ln_first_moment_ratio(u))
                };
                (1.0, 1.5 * s.ln() + l)
            }
        }
    }

    /// E_s(k) = E[exp(k ∫₀^s f(B_τ)dτ)], possibly +∞ only in overflow.
    pub fn interval_mgf(&self, s: f64, k: f64) -> Result<f64> {
        self.log_interval_mgf(s, k).map(f64::exp)
    }

    pub fn log_interval_mgf(&self, s: f64, k: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::domain(format!("interval length must be ≥ 0, got {s}")));
        }
        if k == 0.0 || s == 0.0 {
            return Ok(0.0);
        }
        let g = self.growth(k)?;
        Ok(g.cubic * s * s * s + g.linear * s + self.log_rest(s, k))
    }

    /// lim (1/t) ln E_t(k) for the functional without resetting.
    pub fn g_without_reset(&self, k: f64) -> f64 {
        match self.kind {
            FunctionalKind::Occupation => k.max(0.0),
            FunctionalKind::Area => {
                if k == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FunctionalKind::AbsArea => {
                if k <= 0.0 {
                    -airy::default_table().nu1() * (-k).powf(2.0 / 3.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// One draw of ∫₀^s f(B_τ)dτ for a fresh path.
    pub fn sample_reward<R: Rng + ?Sized>(&self, s: f64, rng: &mut R) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.kind {
            FunctionalKind::Occupation => {
                let u: f64 = rng.random();
                let x = (FRAC_PI_2 * u).sin();
                s * x * x
            }
            FunctionalKind::Area => {
                let z: f64 = StandardNormal.sample(rng);
                z * (s * s * s / 3.0).sqrt()
            }
            FunctionalKind::AbsArea => {
                let steps = MIN_PATH_STEPS.max((s / self.path_step).ceil() as usize);
                let h = s / steps as f64;
                let sd = h.sqrt();
                let mut b = 0.0f64;
                let mut acc = 0.0;
                for _ in 1..steps {
                    let z: f64 = StandardNormal.sample(rng);
                    b += sd * z;
                    acc += b.abs();
                }
                let z: f64 = StandardNormal.sample(rng);
                b += sd * z;
                acc += 0.5 * b.abs();
                acc * h
            }
        }
    }

    pub fn typical_stats(&self, dist: &WaitingTimeModel) -> TypicalStats {
        let m1 = dist.mean();
        let (mu, v) = match self.kind {
            FunctionalKind::Occupation => (0.5, dist.moment(2.0) / (8.0 * m1)),
            FunctionalKind::Area => (0.0, dist.moment(3.0) / (3.0 * m1)),
            FunctionalKind::AbsArea => {
                let c = (8.0 / (9.0 * PI)).sqrt();
                let mu = c * dist.moment(1.5) / m1;
                let v = 0.375 * dist.moment(3.0) / m1 - mu * (32.0 / (9.0 * PI)).sqrt() * dist.moment(2.5) / m1
                    + mu * mu * dist.moment(2.0) / m1;
                (mu, v)
            }
        };
        let alpha = self.alpha();
        TypicalStats {
            mu,
            v,
            valid_lln: dist.moment(1.0 + alpha / 2.0).is_finite(),
            valid_clt: dist.moment(2.0 + alpha).is_finite(),
            valid_good_ldp: good_ldp_condition(dist, alpha),
        }
    }
}

/// limsup s^{-(2+α)/(2-α)} ln P[S>s] = −∞, decided per family: the exponent
/// is 1 for α = 0 and 3 for α = 1, and the survival exponents are known.
fn good_ldp_condition(dist: &WaitingTimeModel, alpha: f64) -> bool {
    match (dist, alpha == 0.0) {
        // ln P[S>s] ≍ -rs³: superlinear, but only cubic
        (WaitingTimeModel::CubicSuperExp { .. }, true) => true,
        (WaitingTimeModel::CubicSuperExp { .. }, false) => false,
        // linear tails: the ratio tends to -ℓ (α = 0) or 0 (α = 1)
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalization_and_area_closed_form() {
        for m in [FunctionalModel::occupation(), FunctionalModel::area(), FunctionalModel::abs_area()] {
            assert_eq!(m.interval_mgf(2.0, 0.0).unwrap(), 1.0);
        }
        let v = FunctionalModel::area().interval_mgf(1.0, 1.0).unwrap();
        assert!((v - 1.181360).abs() < 1e-6);
        assert!(FunctionalModel::area().interval_mgf(-1.0, 1.0).is_err());
    }

    #[test]
    fn occupation_mgf_against_bessel_form_and_direct_quadrature() {
        let m = FunctionalModel::occupation();
        // adaptive Gauss-Kronrod in θ with x = sin²θ
        let direct = |a: f64| {
            let o = QuadOptions::relative(1e-14);
            quad::adaptive(|t: f64| (a * t.sin().powi(2)).exp(), 0.0, FRAC_PI_2, &o).value / FRAC_PI_2
        };
        let v = m.interval_mgf(1.0, 1.0).unwrap();
        assert!((v - direct(1.0)).abs() < 1e-9, "{v}");
        for (s, k) in [(1.0, 1.0), (2.0, -3.0), (50.0, 7.0), (10.0, -40.0)] {
            let x: f64 = 0.5 * k * s;
            let bessel = x + x.abs() + ln_i0_scaled(x.abs());
            let got = m.log_interval_mgf(s, k).unwrap();
            assert!((got - bessel).abs() < 1e-11 * (1.0 + bessel.abs()), "s={s} k={k}");
        }
    }

    #[test]
    fn abs_area_negative_tilt_is_airy_series() {
        let m = FunctionalModel::abs_area();
        let v = m.interval_mgf(1.0, -1.0).unwrap();
        assert!((v - 0.6118602141006327).abs() < 1e-9);
        // scaling: E_s(k) depends on |k| s^{3/2}
        let a = m.interval_mgf(4.0, -0.5).unwrap();
        let b = m.interval_mgf(1.0, -4.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(matches!(m.interval_mgf(1.0, 0.5), Err(Error::OracleRequired(_))));
    }

    #[test]
    fn g_without_reset_examples() {
        assert_eq!(FunctionalModel::occupation().g_without_reset(-3.0), 0.0);
        assert_eq!(FunctionalModel::area().g_without_reset(0.0), 0.0);
        assert_eq!(FunctionalModel::area().g_without_reset(0.1), f64::INFINITY);
        let g = FunctionalModel::abs_area().g_without_reset(-1.0);
        assert!((g + 0.8086165174655018).abs() < 1e-12);
    }

    #[test]
    fn typical_stats_examples() {
        let e = WaitingTimeModel::exponential(1.0).unwrap();
        let c = WaitingTimeModel::cubic(1.0).unwrap();
        let t = FunctionalModel::occupation().typical_stats(&e);
        assert!((t.mu - 0.5).abs() < 1e-15 && (t.v - 0.25).abs() < 1e-12);
        assert!(!t.valid_good_ldp && t.valid_lln && t.valid_clt);
        let t = FunctionalModel::area().typical_stats(&c);
        assert!((t.v - 1.0 / libm::tgamma(1.0 / 3.0)).abs() < 1e-12);
        assert!(!FunctionalModel::area().typical_stats(&e).valid_good_ldp);
        assert!(FunctionalModel::occupation().typical_stats(&c).valid_good_ldp);
        let t = FunctionalModel::abs_area().typical_stats(&e);
        // E[S^{3/2}] = Γ(5/2) for Exp(1)
        assert!((t.mu - (8.0 / (9.0 * PI)).sqrt() * 1.329340388179137).abs() < 1e-12);
        assert!(t.v > 0.0);
    }

    #[test]
    fn samplers_basic_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let occ = FunctionalModel::occupation();
        assert_eq!(occ.sample_reward(0.0, &mut rng), 0.0);
        for _ in 0..1000 {
            let x = occ.sample_reward(2.0, &mut rng);
            assert!((0.0..=2.0).contains(&x));
            assert!(FunctionalModel::abs_area().sample_reward(0.3, &mut rng) >= 0.0);
        }
    }
}
