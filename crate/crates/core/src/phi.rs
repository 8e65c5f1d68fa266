//! The joint moment generating function Φ(ζ,k) = E[e^{ζS+kX}] of one
//! interval length S and its reward X, the function
//! φ(k) = sup{ζ : Φ(ζ,k) ≤ 1}, its derivative, and the structure of its
//! effective domain (edges, one-sided slopes, singular points).

use serde::Serialize;

use crate::dist::WaitingTimeModel;
use crate::error::{Error, Result};
use crate::functionals::{arcsine_average, FunctionalKind, FunctionalModel, TypicalStats};
use crate::quad::QuadOptions;
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhiRegime {
    InteriorRoot,
    BoundaryFormula,
    MinusInfinity,
}

impl PhiRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::InteriorRoot => "interior",
            Self::BoundaryFormula => "boundary",
            Self::MinusInfinity => "minus-infinity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiValue {
    pub k: f64,
    #[serde(with = "crate::ext")]
    pub value: f64,
    pub regime: PhiRegime,
    /// |Φ(φ(k),k) − 1| for interior roots.
    #[serde(with = "crate::ext::opt")]
    pub residual: Option<f64>,
}

/// Behaviour of φ at one end of its analytic interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Edge {
    /// φ stays analytic as k → ±∞; −φ′ tends to `w_limit`, where the rate
    /// function takes `limit_value` as a one-sided limit.
    Open {
        w_limit: f64,
        #[serde(with = "crate::ext")]
        limit_value: f64,
    },
    /// φ(k) is finite at the edge and affine with slope `slope` beyond it.
    Affine {
        k: f64,
        value: f64,
        slope: f64,
        #[serde(with = "crate::ext")]
        w_edge: f64,
    },
    /// φ(k) is finite at the edge and −∞ beyond it.
    Cliff {
        k: f64,
        value: f64,
        #[serde(with = "crate::ext")]
        w_edge: f64,
    },
}

impl Edge {
    pub fn k(&self, default: f64) -> f64 {
        match *self {
            Edge::Open { .. } => default,
            Edge::Affine { k, .. } | Edge::Cliff { k, .. } => k,
        }
    }

    /// The one-sided limit of −φ′ at this edge.
    pub fn w(&self) -> f64 {
        match *self {
            Edge::Open { w_limit, .. } => w_limit,
            Edge::Affine { w_edge, .. } | Edge::Cliff { w_edge, .. } => w_edge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    SmoothEverywhere,
    /// φ switches to its boundary formula at ±λ but stays differentiable.
    KinkAtLambda,
    AffineStretches,
    FlatZero,
    OneSidedStretch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub functional: FunctionalKind,
    pub dist: WaitingTimeModel,
    #[serde(with = "crate::ext")]
    pub ell: f64,
    pub r_cubic: f64,
    pub mu: f64,
    #[serde(with = "crate::ext::opt")]
    pub lambda: Option<f64>,
    #[serde(with = "crate::ext::opt")]
    pub xi: Option<f64>,
    #[serde(rename = "Lambda_diag", with = "crate::ext::opt")]
    pub lambda_diag: Option<f64>,
    #[serde(rename = "Xi_diag", with = "crate::ext::opt")]
    pub xi_diag: Option<f64>,
    #[serde(with = "crate::ext::opt")]
    pub w_minus: Option<f64>,
    #[serde(with = "crate::ext::opt")]
    pub w_plus: Option<f64>,
    pub classification: Classification,
    pub left: Edge,
    pub right: Edge,
    pub warnings: Vec<String>,
}

impl RegimeReport {
    /// Open k-interval on which φ is analytic.
    pub fn analytic_interval(&self) -> (f64, f64) {
        (self.left.k(f64::NEG_INFINITY), self.right.k(f64::INFINITY))
    }
}

/// ϖ(k) with a flag marking the boundary case k² = 6r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Varpi {
    #[serde(with = "crate::ext")]
    pub value: f64,
    pub boundary: bool,
}

enum ZetaDomain {
    Empty,
    Unbounded,
    Bounded(f64),
}

/// A functional paired with a waiting-time law.
#[derive(Debug, Clone)]
pub struct ResetModel {
    pub functional: FunctionalModel,
    pub dist: WaitingTimeModel,
    pub quad: QuadOptions,
}

const BOUNDARY_DELTAS: [f64; 2] = [1e-3, 1e-6];

impl ResetModel {
    pub fn new(functional: FunctionalModel, dist: WaitingTimeModel) -> Self {
        ResetModel { functional, dist, quad: QuadOptions::relative(1e-12) }
    }

    pub fn kind(&self) -> FunctionalKind {
        self.functional.kind()
    }

    pub fn typical_stats(&self) -> TypicalStats {
        self.functional.typical_stats(&self.dist)
    }

    fn exp_rate(&self) -> Option<f64> {
        match self.dist {
            WaitingTimeModel::Exponential { rate } => Some(rate),
            _ => None,
        }
    }

    fn zeta_domain(&self, k: f64) -> Result<ZetaDomain> {
        let g = self.functional.growth(k)?;
        let (c3, c1) = self.dist.tail_exponents();
        let da = g.cubic - c3;
        Ok(if da.abs() <= 1e-12 * c3.max(g.cubic).max(1.0) {
            ZetaDomain::Bounded(c1 - g.linear)
        } else if da > 0.0 {
            ZetaDomain::Empty
        } else {
            ZetaDomain::Unbounded
        })
    }

    /// Φ(ζ, k) = E[e^{ζS + kX}], +∞ where it diverges.
    pub fn joint_mgf(&self, zeta: f64, k: f64) -> Result<f64> {
        if zeta.is_nan() || k.is_nan() {
            return Err(Error::domain("NaN argument to joint_mgf"));
        }
        if zeta == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if zeta == 0.0 && k == 0.0 {
            return Ok(1.0);
        }
        match (self.kind(), self.exp_rate()) {
            (FunctionalKind::Occupation, Some(r)) => {
                if zeta + k.max(0.0) >= r {
                    return Ok(f64::INFINITY);
                }
                Ok(arcsine_average(|x| r / (r - zeta - k * x), true))
            }
            (FunctionalKind::AbsArea, Some(r)) if k < 0.0 => {
                let t = self.functional.airy();
                let kk = (-k).powf(2.0 / 3.0);
                if zeta >= r + t.nu1() * kk {
                    return Ok(f64::INFINITY);
                }
                Ok(t.spectral_sum(|nu| r / (r + nu * kk - zeta)))
            }
            _ => {
                let g = self.functional.growth(k)?;
                if k == 0.0 {
                    return Ok(self.dist.mgf(zeta));
                }
                let f = &self.functional;
                Ok(self.dist.tilted_expectation(g.cubic, zeta + g.linear, |s| f.log_rest(s, k), &self.quad))
            }
        }
    }

    /// (E[S e^{ζS+kX}], E[X e^{ζS+kX}]).
    pub fn tilted_moments(&self, zeta: f64, k: f64) -> Result<(f64, f64)> {
        match (self.kind(), self.exp_rate()) {
            (FunctionalKind::Occupation, Some(r)) => {
                if zeta + k.max(0.0) >= r {
                    return Ok((f64::INFINITY, f64::INFINITY));
                }
                let d = |x: f64| r / (r - zeta - k * x).powi(2);
                Ok((arcsine_average(d, true), arcsine_average(|x| x * d(x), true)))
            }
            (FunctionalKind::AbsArea, Some(r)) if k < 0.0 => {
                let t = self.functional.airy();
                let kap = -k;
                let kk = kap.powf(2.0 / 3.0);
                if zeta >= r + t.nu1() * kk {
                    return Ok((f64::INFINITY, f64::INFINITY));
                }
                let es = t.spectral_sum(|nu| r / (r + nu * kk - zeta).powi(2));
                let ex = t.spectral_sum(|nu| r * (2.0 / 3.0) * nu * kap.powf(-1.0 / 3.0) / (r + nu * kk - zeta).powi(2));
                Ok((es, ex))
            }
            _ => {
                let g = self.functional.growth(k)?;
                let f = &self.functional;
                let es = self.dist.tilted_expectation(g.cubic, zeta + g.linear, |s| s.ln() + f.log_rest(s, k), &self.quad);
                let sign = f.log_rest_dk(1.0, k).0;
                let ex = if sign == 0.0 {
                    0.0
                } else {
                    sign * self
                        .dist
                        .tilted_expectation(g.cubic, zeta + g.linear, |s| f.log_rest_dk(s, k).1, &self.quad)
                };
                Ok((es, ex))
            }
        }
    }

    fn ln_phi_minus_one(&self, zeta: f64, k: f64) -> Result<f64> {
        Ok(self.joint_mgf(zeta, k)?.ln())
    }

    /// φ(k) = sup{ζ : Φ(ζ,k) ≤ 1}.
    pub fn phi(&self, k: f64) -> Result<PhiValue> {
        if k == 0.0 {
            // Φ(0,0) = 1 by normalization
            self.functional.growth(0.0)?;
            return Ok(PhiValue { k, value: 0.0, regime: PhiRegime::InteriorRoot, residual: Some(0.0) });
        }
        let hi = match self.zeta_domain(k)? {
            ZetaDomain::Empty => {
                return Ok(PhiValue { k, value: f64::NEG_INFINITY, regime: PhiRegime::MinusInfinity, residual: None })
            }
            ZetaDomain::Bounded(zmax) => {
                let mut upper = None;
                for d in BOUNDARY_DELTAS {
                    let z = zmax - d;
                    let v = self.joint_mgf(z, k)?;
                    if v > 1.0 {
                        upper = Some((z, v));
                        break;
                    }
                }
                match upper {
                    Some(u) => u,
                    None => {
                        return Ok(PhiValue { k, value: zmax, regime: PhiRegime::BoundaryFormula, residual: None })
                    }
                }
            }
            ZetaDomain::Unbounded => {
                let mut z = 1.0;
                loop {
                    let v = self.joint_mgf(z, k)?;
                    if v > 1.0 {
                        break (z, v);
                    }
                    z *= 2.0;
                    if z > 1e15 {
                        return Err(Error::numeric("phi", format!("no upper bracket at k={k}")));
                    }
                }
            }
        };
        let (zh, vh) = hi;
        let mut width = 1.0f64;
        let (zl, vl) = loop {
            let z = zh.min(0.0) - width;
            let v = self.joint_mgf(z, k)?;
            if v < 1.0 {
                break (z, v);
            }
            width *= 2.0;
            if width > 1e15 {
                return Err(Error::numeric("phi", format!("no lower bracket at k={k}")));
            }
        };
        let root = roots::brent(
            |z| self.ln_phi_minus_one(z, k).unwrap_or(f64::NAN),
            zl,
            zh,
            vl.ln(),
            vh.ln(),
            1e-15 * zh.abs().max(1.0),
            200,
        )?;
        let residual = (self.joint_mgf(root.x, k)? - 1.0).abs();
        Ok(PhiValue { k, value: root.x, regime: PhiRegime::InteriorRoot, residual: Some(residual) })
    }

    /// φ′(k) for k where φ has an interior root.
    pub fn phi_prime(&self, k: f64) -> Result<f64> {
        let p = self.phi(k)?;
        if p.regime != PhiRegime::InteriorRoot {
            return Err(Error::domain(format!(
                "φ′ requested at k={k} outside the analytic region; use the edge fields of the regime report"
            )));
        }
        self.phi_prime_at(k, p.value)
    }

    pub(crate) fn phi_prime_at(&self, k: f64, phi: f64) -> Result<f64> {
        let (es, ex) = self.tilted_moments(phi, k)?;
        if !(es.is_finite() && es > 0.0) {
            return Err(Error::numeric("phi_prime", format!("E[S e^(..)] = {es} at k={k}")));
        }
        Ok(-ex / es)
    }

    /// ϖ(k) from the growth of E_t(k) without resetting and the tail of S.
    pub fn varpi(&self, k: f64) -> Varpi {
        let g = self.functional.g_without_reset(k);
        if g.is_finite() {
            return Varpi { value: self.dist.ell() - g, boundary: false };
        }
        let r = self.dist.r_cubic();
        let k2 = k * k;
        let six_r = 6.0 * r;
        if (k2 - six_r).abs() <= 1e-12 * six_r.max(1.0) {
            // e^{k²t³/6} P[S>t] has exponent exactly matched: the liminf is 0
            Varpi { value: 0.0, boundary: true }
        } else if k2 < six_r {
            Varpi { value: f64::INFINITY, boundary: false }
        } else {
            Varpi { value: f64::NEG_INFINITY, boundary: false }
        }
    }

    pub fn diagnose(&self) -> Result<RegimeReport> {
        let ell = self.dist.ell();
        let r = self.dist.r_cubic();
        let mu = self.typical_stats().mu;
        let mut rep = RegimeReport {
            functional: self.kind(),
            dist: self.dist,
            ell,
            r_cubic: r,
            mu,
            lambda: None,
            xi: None,
            lambda_diag: None,
            xi_diag: None,
            w_minus: None,
            w_plus: None,
            classification: Classification::SmoothEverywhere,
            left: Edge::Open { w_limit: 0.0, limit_value: ell },
            right: Edge::Open { w_limit: 1.0, limit_value: ell },
            warnings: Vec::new(),
        };
        match self.kind() {
            FunctionalKind::Occupation => self.diagnose_occupation(&mut rep)?,
            FunctionalKind::Area => self.diagnose_area(&mut rep)?,
            FunctionalKind::AbsArea => self.diagnose_abs_area(&mut rep)?,
        }
        Ok(rep)
    }

    fn diagnose_occupation(&self, rep: &mut RegimeReport) -> Result<()> {
        let ell = rep.ell;
        if !ell.is_finite() {
            return Ok(());
        }
        let cap = self.dist.tilted_expectation(0.0, ell, |s| -0.5 * s.ln_1p(), &self.quad);
        rep.lambda_diag = Some(cap);
        if !cap.is_finite() {
            return Ok(());
        }
        // λ solves Φ(ℓ, −λ) = 1; Φ(ℓ, −λ) decreases in λ.
        let f = |lam: f64| self.joint_mgf(ell, -lam).map(|v| v.ln());
        let mut hi = 1.0;
        while f(hi)? > 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::numeric("diagnose", "no bracket for λ"));
            }
        }
        let mut lo = hi / 2.0;
        while f(lo)? <= 0.0 {
            lo /= 2.0;
            if lo < 1e-12 {
                return Err(Error::numeric("diagnose", "λ below 1e-12"));
            }
        }
        let lam = roots::brent(|x| f(x).unwrap_or(f64::NAN), lo, hi, f(lo)?, f(hi)?, 1e-14, 200)?.x;
        rep.lambda = Some(lam);
        let xi = self.dist.tilted_expectation(0.0, ell, |s| 0.5 * s.ln(), &self.quad);
        rep.xi_diag = Some(xi);
        let (wl, wr) = if xi.is_finite() {
            let (es, ex) = self.tilted_moments(ell, -lam)?;
            let (es2, ex2) = self.tilted_moments(ell - lam, lam)?;
            (ex / es, ex2 / es2)
        } else {
            (0.0, 1.0)
        };
        rep.left = Edge::Affine { k: -lam, value: ell, slope: 0.0, w_edge: wl };
        rep.right = Edge::Affine { k: lam, value: ell - lam, slope: -1.0, w_edge: wr };
        if xi.is_finite() {
            rep.classification = Classification::AffineStretches;
            rep.w_minus = Some(wl);
            rep.w_plus = Some(wr);
        } else {
            rep.classification = Classification::KinkAtLambda;
        }
        Ok(())
    }

    /// Shared edge analysis at k_e = √(6r) for the two area functionals.
    /// Returns (ξ, w_edge) with w_edge = ∞ when −φ′ is steep at the edge.
    fn cubic_edge(&self, rep: &mut RegimeReport) -> Result<(f64, f64)> {
        let r = rep.r_cubic;
        let ke = (6.0 * r).sqrt();
        let p = self.phi(ke)?;
        rep.xi = Some(p.value);
        if !p.value.is_finite() {
            return Ok((p.value, f64::INFINITY));
        }
        let xi = p.value;
        let cap = self.joint_mgf(xi, ke)?;
        rep.lambda_diag = Some(cap);
        let big_xi = self.dist.tilted_expectation(r, xi, |s| 3.0 * s.ln(), &self.quad);
        rep.xi_diag = Some(big_xi);
        if (cap - 1.0).abs() > 1e-8 || !big_xi.is_finite() {
            return Ok((xi, f64::INFINITY));
        }
        let w = match self.kind() {
            FunctionalKind::Area => {
                let es = self.dist.tilted_expectation(r, xi, |s| s.ln(), &self.quad);
                (2.0 * r / 3.0).sqrt() * big_xi / es
            }
            _ => {
                let (es, ex) = self.tilted_moments(xi, ke)?;
                ex / es
            }
        };
        Ok((xi, w))
    }

    fn diagnose_area(&self, rep: &mut RegimeReport) -> Result<()> {
        let r = rep.r_cubic;
        if r == 0.0 {
            rep.classification = Classification::FlatZero;
            rep.left = Edge::Cliff { k: 0.0, value: 0.0, w_edge: 0.0 };
            rep.right = Edge::Cliff { k: 0.0, value: 0.0, w_edge: 0.0 };
            return Ok(());
        }
        let ke = (6.0 * r).sqrt();
        let (xi, w) = self.cubic_edge(rep)?;
        rep.left = Edge::Cliff { k: -ke, value: xi, w_edge: -w };
        rep.right = Edge::Cliff { k: ke, value: xi, w_edge: w };
        if w.is_finite() {
            rep.classification = Classification::AffineStretches;
            rep.w_minus = Some(-w);
            rep.w_plus = Some(w);
        }
        Ok(())
    }

    fn diagnose_abs_area(&self, rep: &mut RegimeReport) -> Result<()> {
        let r = rep.r_cubic;
        rep.left = Edge::Open { w_limit: 0.0, limit_value: f64::INFINITY };
        if r == 0.0 {
            rep.classification = Classification::OneSidedStretch;
            rep.right = Edge::Cliff { k: 0.0, value: 0.0, w_edge: rep.mu };
            rep.w_plus = Some(rep.mu);
            self.check_excluded_case(rep)?;
            return Ok(());
        }
        let ke = (6.0 * r).sqrt();
        let (xi, w) = self.cubic_edge(rep)?;
        rep.right = Edge::Cliff { k: ke, value: xi, w_edge: w };
        if w.is_finite() {
            rep.classification = Classification::OneSidedStretch;
            rep.w_plus = Some(w);
        }
        Ok(())
    }

    /// Probes for ℓ < ∞, E[e^{ℓS}] < ∞ and Φ(ℓ + ν₁|k|^{2/3}, k) ≤ 1 at some
    /// k < 0, a case the regime analysis leaves open.
    fn check_excluded_case(&self, rep: &mut RegimeReport) -> Result<()> {
        let ell = rep.ell;
        if !ell.is_finite() || !self.dist.mgf(ell).is_finite() {
            return Ok(());
        }
        for k in [-0.25, -1.0, -4.0, -16.0, -64.0] {
            if self.phi(k)?.regime == PhiRegime::BoundaryFormula {
                rep.warnings.push(format!(
                    "Φ(ℓ+ν₁|k|^(2/3), k) ≤ 1 detected at k={k}: excluded regime, classification not covered"
                ));
            }
        }
        Ok(())
    }
}
