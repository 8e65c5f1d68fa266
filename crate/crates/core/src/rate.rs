//! Rate function I(w) = sup_k {wk + φ(k)} and rate profiles.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::FunctionalKind;
use crate::phi::{Edge, RegimeReport, ResetModel};
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateRegime {
    /// Supremum attained inside the analytic interval of φ.
    Interior,
    /// Supremum attained at an edge tilt of φ (affine part of I).
    Edge,
    /// One-sided limit at an endpoint of the support.
    Limit,
    /// Outside the support: I = +∞.
    Outside,
}

impl RateRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Interior => "interior",
            Self::Edge => "edge",
            Self::Limit => "limit",
            Self::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub w: f64,
    #[serde(rename = "I", with = "crate::ext")]
    pub value: f64,
    /// Maximizing tilt; NaN where none exists.
    #[serde(with = "crate::ext")]
    pub k_star: f64,
    pub regime: RateRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stretch {
    pub w_start: f64,
    pub w_end: f64,
    /// Boundary tilt, the theoretical slope of I on the stretch.
    pub slope: f64,
    /// Finite-difference slope of I over the grid points in the stretch.
    pub graph_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateProfile {
    pub points: Vec<RatePoint>,
    pub stretches: Vec<Stretch>,
    pub singular_points: Vec<f64>,
}

impl RateProfile {
    pub fn w_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.w).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Legendre transform of φ for one model, with the regime analysis done once.
pub struct RateSolver<'a> {
    model: &'a ResetModel,
    report: RegimeReport,
}

const PIN_TOL: f64 = 1e-6;

impl<'a> RateSolver<'a> {
    pub fn new(model: &'a ResetModel) -> Result<Self> {
        Ok(RateSolver { model, report: model.diagnose()? })
    }

    pub fn with_report(model: &'a ResetModel, report: RegimeReport) -> Self {
        RateSolver { model, report }
    }

    pub fn report(&self) -> &RegimeReport {
        &self.report
    }

    pub fn rate_at(&self, w: f64) -> Result<RatePoint> {
        if !w.is_finite() {
            return Err(Error::domain(format!("rate requested at w={w}")));
        }
        let (wl, wr) = (self.report.left.w(), self.report.right.w());
        if w > wl && w < wr {
            let (k, value) = self.interior(w)?;
            return Ok(RatePoint { w, value, k_star: k, regime: RateRegime::Interior });
        }
        let (edge, right) = if w >= wr { (self.report.right, true) } else { (self.report.left, false) };
        Ok(beyond_edge(w, &edge, right))
    }

    fn interior(&self, w: f64) -> Result<(f64, f64)> {
        let (ka, kb) = self.report.analytic_interval();
        let h = |k: f64| self.model.phi_prime(k).map(|d| w + d);
        let k0 = match (ka.is_finite(), kb.is_finite()) {
            (true, true) => 0.5 * (ka + kb),
            (false, true) => kb.min(0.0) - if kb >= 0.0 { 1.0 } else { 0.0 },
            (true, false) => ka.max(0.0) + if ka <= 0.0 { 1.0 } else { 0.0 },
            (false, false) => 0.0,
        };
        let h0 = h(k0)?;
        if h0 == 0.0 {
            return Ok((k0, w * k0 + self.model.phi(k0)?.value));
        }
        // h is decreasing in k.
        let toward = if h0 > 0.0 { kb } else { ka };
        let dir = if h0 > 0.0 { 1.0 } else { -1.0 };
        let mut prev = (k0, h0);
        let mut trace = vec![(k0, h0)];
        for j in 1..=64 {
            let k = if toward.is_finite() {
                toward - (toward - k0) * 0.5f64.powi(j)
            } else {
                k0 + dir * 2f64.powi(j - 1)
            };
            match h(k) {
                Ok(0.0) => return Ok((k, w * k + self.model.phi(k)?.value)),
                Ok(hk) if hk.signum() != h0.signum() => {
                    let (a, b, fa, fb) = if prev.0 < k { (prev.0, k, prev.1, hk) } else { (k, prev.0, hk, prev.1) };
                    let root = roots::brent(|x| h(x).unwrap_or(f64::NAN), a, b, fa, fb, 1e-14 * a.abs().max(b.abs()).max(1.0), 200)?;
                    let phi = self.model.phi(root.x)?.value;
                    return Ok((root.x, w * root.x + phi));
                }
                Ok(hk) => {
                    trace.push((k, hk));
                    prev = (k, hk);
                }
                Err(_) if toward.is_finite() => break,
                Err(e) => return Err(e),
            }
        }
        if !toward.is_finite() {
            return Err(Error::numeric("rate_at", format!("no bracket for w={w}; trace {trace:?}")));
        }
        // φ′ unavailable next to a kink: maximize wk + φ(k) directly.
        let (a, b) = if prev.0 < toward { (prev.0, toward) } else { (toward, prev.0) };
        let (k, v) = roots::golden_max(
            |k| self.model.phi(k).map(|p| w * k + p.value).unwrap_or(f64::NEG_INFINITY),
            a,
            b,
            1e-12,
        );
        Ok((k, v))
    }

    pub fn rate_profile(&self, w_grid: &[f64]) -> Result<RateProfile> {
        if w_grid.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::domain("w grid must be strictly increasing"));
        }
        let points = w_grid.par_iter().map(|&w| self.rate_at(w)).collect::<Result<Vec<_>>>()?;
        let stretches = self.tag_stretches(&points);
        let singular_points = [self.report.w_minus, self.report.w_plus].into_iter().flatten().collect();
        Ok(RateProfile { points, stretches, singular_points })
    }

    fn tag_stretches(&self, points: &[RatePoint]) -> Vec<Stretch> {
        let mut out = Vec::new();
        for (edge, right) in [(self.report.left, false), (self.report.right, true)] {
            let (ke, w_edge) = match edge {
                Edge::Open { .. } => continue,
                Edge::Affine { k, w_edge, .. } | Edge::Cliff { k, w_edge, .. } => (k, w_edge),
            };
            let run: Vec<&RatePoint> = points
                .iter()
                .filter(|p| {
                    p.regime == RateRegime::Edge && (p.k_star - ke).abs() <= PIN_TOL && (p.w >= w_edge) == right
                })
                .collect();
            if run.len() < 2 {
                continue;
            }
            let (first, last) = (run[0], run[run.len() - 1]);
            let graph_slope = (last.value - first.value) / (last.w - first.w);
            let (w_start, w_end) = if right { (w_edge, last.w) } else { (first.w, w_edge) };
            out.push(Stretch { w_start, w_end, slope: ke, graph_slope });
        }
        out
    }
}

fn beyond_edge(w: f64, edge: &Edge, right: bool) -> RatePoint {
    let outside = RatePoint { w, value: f64::INFINITY, k_star: f64::NAN, regime: RateRegime::Outside };
    match *edge {
        Edge::Open { w_limit, limit_value } => {
            if w == w_limit {
                RatePoint { w, value: limit_value, k_star: f64::NAN, regime: RateRegime::Limit }
            } else {
                outside
            }
        }
        Edge::Cliff { k, value, .. } => RatePoint { w, value: w * k + value, k_star: k, regime: RateRegime::Edge },
        Edge::Affine { k, value, slope, .. } => {
            // beyond the edge wk + φ(k) has slope w + slope in k
            let d = w + slope;
            if (right && d > 0.0) || (!right && d < 0.0) {
                outside
            } else {
                RatePoint { w, value: w * k + value, k_star: k, regime: RateRegime::Edge }
            }
        }
    }
}

pub fn rate_at(model: &ResetModel, w: f64) -> Result<RatePoint> {
    RateSolver::new(model)?.rate_at(w)
}

pub fn rate_profile(model: &ResetModel, w_grid: &[f64]) -> Result<RateProfile> {
    RateSolver::new(model)?.rate_profile(w_grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub r: f64,
    pub w: f64,
    #[serde(rename = "I_r")]
    pub i_r: f64,
    /// r^{1/3} I_1(r^{1/6} w)
    pub predicted: f64,
    pub rel_dev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallWRow {
    pub w: f64,
    #[serde(rename = "I_1")]
    pub i_1: f64,
    pub leading: f64,
    /// (I_1 − leading)/w⁴ for Area, I_1/leading for AbsArea.
    pub statistic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub functional: FunctionalKind,
    pub rows: Vec<ScalingRow>,
    pub max_rel_dev: f64,
    pub small_w: Vec<SmallWRow>,
}

/// Checks I_r(w) = r^{1/3} I_1(r^{1/6} w) for the cubic law with rates
/// `r_list`, plus the small-w behaviour of I_1 on `small_w_grid`.
pub fn scaling_check(
    functional: &crate::functionals::FunctionalModel,
    r_list: &[f64],
    w_grid: &[f64],
    small_w_grid: &[f64],
) -> Result<ScalingReport> {
    use crate::dist::WaitingTimeModel;
    let kind = functional.kind();
    if kind == FunctionalKind::Occupation {
        return Err(Error::domain("scaling check applies to area and abs-area"));
    }
    let unit = ResetModel::new(functional.clone(), WaitingTimeModel::cubic(1.0)?);
    let unit_solver = RateSolver::new(&unit)?;
    let mut rows = Vec::new();
    for &r in r_list {
        let m = ResetModel::new(functional.clone(), WaitingTimeModel::cubic(r)?);
        let s = RateSolver::new(&m)?;
        for &w in w_grid {
            let i_r = s.rate_at(w)?.value;
            let predicted = r.cbrt() * unit_solver.rate_at(r.powf(1.0 / 6.0) * w)?.value;
            let rel_dev = ((i_r - predicted) / predicted).abs();
            rows.push(ScalingRow { r, w, i_r, predicted, rel_dev });
        }
    }
    let max_rel_dev = rows.iter().map(|r| r.rel_dev).fold(0.0, f64::max);
    let small_w = small_w_grid
        .iter()
        .map(|&w| {
            let i_1 = unit_solver.rate_at(w)?.value;
            Ok(match kind {
                FunctionalKind::Area => {
                    let leading = libm::tgamma(1.0 / 3.0) * w * w / 2.0;
                    SmallWRow { w, i_1, leading, statistic: (i_1 - leading).abs() / w.powi(4) }
                }
                _ => {
                    let leading = 4.0 * functional.airy().nu1().powi(3) / (27.0 * w * w);
                    SmallWRow { w, i_1, leading, statistic: i_1 / leading }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingReport { functional: kind, rows, max_rel_dev, small_w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::WaitingTimeModel;
    use crate::functionals::FunctionalModel;

    #[test]
    fn occupation_exponential_closed_form() {
        let m = ResetModel::new(FunctionalModel::occupation(), WaitingTimeModel::exponential(1.0).unwrap());
        let s = RateSolver::new(&m).unwrap();
        assert!(s.rate_at(0.5).unwrap().value.abs() < 1e-14);
        let p = s.rate_at(0.25).unwrap();
        assert!((p.value - (1.0 - 2.0 * 0.1875f64.sqrt())).abs() < 1e-10, "{p:?}");
        let p0 = s.rate_at(0.0).unwrap();
        assert_eq!((p0.value, p0.regime), (1.0, RateRegime::Limit));
        assert_eq!(s.rate_at(1.2).unwrap().value, f64::INFINITY);
    }

    #[test]
    fn area_cubic_boundary_formula() {
        let m = ResetModel::new(FunctionalModel::area(), WaitingTimeModel::cubic(1.0).unwrap());
        let s = RateSolver::new(&m).unwrap();
        let p = s.rate_at(6.0).unwrap();
        assert_eq!(p.regime, RateRegime::Edge);
        assert!((p.value - (6.0 * 6f64.sqrt() - 6f64.cbrt())).abs() < 1e-8);
        let q = s.rate_at(4.0).unwrap();
        assert_eq!(q.regime, RateRegime::Interior);
        assert!(q.value > 4.0 * 6f64.sqrt() - 6f64.cbrt());
        for k in [0.5, 1.5, 2.0, 2.4, 2.449] {
            assert!(6.0 * k + m.phi(k).unwrap().value < p.value);
        }
        let grid: Vec<f64> = (0..=32).map(|i| -8.0 + 0.5 * i as f64).collect();
        let prof = s.rate_profile(&grid).unwrap();
        assert_eq!(prof.stretches.len(), 2);
        for st in &prof.stretches {
            assert!((st.slope.abs() - 6f64.sqrt()).abs() < 1e-12);
            assert!((st.graph_slope - st.slope).abs() < 1e-8);
        }
    }
}
