//! Acceptance checks, shared by the `acceptance` test target and the
//! `verify` subcommand. Each check returns a report instead of panicking so
//! that a full run always lists every criterion.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::abs_law::AbsAreaLaw;
use crate::airy::{self, AiryTable};
use crate::dist::WaitingTimeModel;
use crate::error::Result;
use crate::functionals::{FunctionalKind, FunctionalModel};
use crate::phi::{Classification, ResetModel};
use crate::rate::{self, RateRegime, RateSolver};
use crate::sim;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub details: Vec<String>,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Trajectories per Monte Carlo check.
    pub mc_paths: usize,
    /// Absolute step of the abs-area path sampler in the Monte Carlo checks.
    pub abs_area_path_step: f64,
    pub law: Arc<AbsAreaLaw>,
}

impl VerifyConfig {
    pub fn new(law: Arc<AbsAreaLaw>) -> Self {
        VerifyConfig { seed: 20240917, mc_paths: 100_000, abs_area_path_step: 1.0 / 256.0, law }
    }
}

/// Collects named checks and turns them into a report.
struct Checks {
    passed: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { passed: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: String) {
        self.passed &= ok;
        self.details.push(format!("{} {msg}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, msg: String) {
        self.details.push(format!("note {msg}"));
    }

    fn finish(self, id: u32, name: &'static str, start: Instant) -> CriterionReport {
        CriterionReport { id, name, passed: self.passed, seconds: start.elapsed().as_secs_f64(), details: self.details }
    }
}

fn failed(id: u32, name: &'static str, start: Instant, err: crate::Error) -> CriterionReport {
    CriterionReport {
        id,
        name,
        passed: false,
        seconds: start.elapsed().as_secs_f64(),
        details: vec![format!("FAIL error: {err}")],
    }
}

fn run(id: u32, name: &'static str, f: impl FnOnce(&mut Checks) -> Result<()>) -> CriterionReport {
    let start = Instant::now();
    let mut c = Checks::new();
    match f(&mut c) {
        Ok(()) => c.finish(id, name, start),
        Err(e) => failed(id, name, start, e),
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn exp(r: f64) -> WaitingTimeModel {
    WaitingTimeModel::exponential(r).expect("positive rate")
}

fn cubic(r: f64) -> WaitingTimeModel {
    WaitingTimeModel::cubic(r).expect("positive rate")
}

/// The four waiting-time laws used by the pairing checks.
pub fn standard_dists() -> Vec<WaitingTimeModel> {
    vec![exp(1.0), cubic(1.0), WaitingTimeModel::exp_poly(2.0).unwrap(), WaitingTimeModel::stretched(0.5).unwrap()]
}

pub fn standard_functionals(law: &Arc<AbsAreaLaw>) -> Vec<FunctionalModel> {
    vec![FunctionalModel::occupation(), FunctionalModel::area(), FunctionalModel::abs_area().with_law(law.clone())]
}

pub fn criterion_1() -> CriterionReport {
    run(1, "Poissonian occupation closed forms", |c| {
        let start = Instant::now();
        let ks = linspace(-5.0, 5.0, 41);
        let ws = linspace(0.02, 0.98, 49);
        for r in [0.5, 1.0, 2.0] {
            let m = ResetModel::new(FunctionalModel::occupation(), exp(r));
            let mut dphi = 0.0f64;
            for &k in &ks {
                let want = r - (k + (k * k + 4.0 * r * r).sqrt()) / 2.0;
                dphi = dphi.max((m.phi(k)?.value - want).abs());
            }
            c.check(dphi < 1e-8, format!("r={r}: max |φ − closed form| = {dphi:.2e} (< 1e-8)"));
            let s = RateSolver::new(&m)?;
            let mut di = 0.0f64;
            for &w in &ws {
                let want = r * (1.0 - 2.0 * (w * (1.0 - w)).sqrt());
                di = di.max((s.rate_at(w)?.value - want).abs());
            }
            c.check(di < 1e-7, format!("r={r}: max |I − closed form| = {di:.2e} (< 1e-7)"));
        }
        let secs = start.elapsed().as_secs_f64();
        c.check(secs < 10.0, format!("runtime {secs:.2}s (< 10s)"));
        Ok(())
    })
}

fn truncated(x: f64, digits: i32) -> f64 {
    let p = 10f64.powi(digits);
    (x * p).trunc() / p
}

pub fn criterion_2() -> CriterionReport {
    run(2, "Airy constants and asymptotics", |c| {
        let start = Instant::now();
        let t: AiryTable = airy::build_table(airy::DEFAULT_MODES)?;
        let secs = start.elapsed().as_secs_f64();
        let r1 = t.rows()[0];
        c.check(
            truncated(r1.nu, 5) == 0.80861,
            format!("ν₁ = {:.10} reproduces 0.80861… to 5 decimals", r1.nu),
        );
        c.check(
            truncated(r1.c, 5) == 1.48257,
            format!("c₁ = {:.10} reproduces 1.48257… to 5 decimals", r1.c),
        );
        let r50 = t.rows()[49];
        let nu_ratio = (2.0 * std::f64::consts::PI * 50.0).powf(-2.0 / 3.0) * r50.nu;
        c.check(
            (nu_ratio / 2.0 - 1.0).abs() < 0.02,
            format!("(2πi)^(-2/3) ν_i at i=50 = {nu_ratio:.5} (target 2 within 2%)"),
        );
        let c_ratio = (75.0f64).sqrt() * r50.c;
        c.check(
            (c_ratio + 1.0).abs() < 0.05,
            format!("(-1)^i √(3i/2) c_i at i=50 = {c_ratio:.5} (target -1 within 5%)"),
        );
        c.check(secs < 5.0, format!("build_table runtime {secs:.2}s (< 5s)"));
        Ok(())
    })
}

pub fn criterion_3(law: &AbsAreaLaw) -> CriterionReport {
    run(3, "Airy series normalization and quantile-table agreement", |c| {
        let v = airy::abs_area_laplace(1e-4)?;
        c.check((v - 1.0).abs() < 1e-3, format!("L(1e-4) = {v:.8} (within 1e-3 of 1)"));
        for s in [0.5, 1.0, 2.0] {
            let l = airy::abs_area_laplace(s)?;
            let mc = law.expect(|a| (-s * a).exp());
            let se = law.standard_error(|a| (-s * a).exp()).unwrap_or(f64::NAN);
            c.check(
                (l - mc).abs() < 3.0 * se,
                format!("s={s}: series {l:.6} vs table {mc:.6} ± {se:.1e} (|Δ| = {:.2} SE)", (l - mc).abs() / se),
            );
        }
        Ok(())
    })
}

pub fn criterion_4() -> CriterionReport {
    run(4, "Area with cubic waiting times: edge diagnostics", |c| {
        for r in [0.25, 1.0, 4.0] {
            let m = ResetModel::new(FunctionalModel::area(), cubic(r));
            let s = RateSolver::new(&m)?;
            let d = s.report();
            let xi = d.xi.unwrap_or(f64::NAN);
            let xi_want = -(6.0 * r).cbrt();
            c.check((xi - xi_want).abs() < 1e-8, format!("r={r}: ξ = {xi:.12} vs {xi_want:.12}"));
            let lam = d.lambda_diag.unwrap_or(f64::NAN);
            c.check((lam - 1.0).abs() < 1e-8, format!("r={r}: Λ = {lam:.12}"));
            let wp = d.w_plus.unwrap_or(f64::NAN);
            let wp_want = 20.0 / 3.0 * (6.0 * r).powf(-1.0 / 6.0);
            c.check((wp - wp_want).abs() < 1e-6, format!("r={r}: w₊ = {wp:.10} vs {wp_want:.10}"));
            let big_xi = d.xi_diag.unwrap_or(f64::NAN);
            let oracle = 360.0 * r / xi.abs().powi(6);
            c.check(
                (big_xi / oracle - 1.0).abs() < 1e-8,
                format!("r={r}: Ξ = {big_xi:.10} vs 360r|ξ|^-6 = {oracle:.10}"),
            );
            c.note(format!("r={r}: Ξ − 10r^-2 = {:.6}", big_xi - 10.0 / (r * r)));
            let grid = linspace(-2.0 * wp_want, 2.0 * wp_want, 41);
            let p = s.rate_profile(&grid)?;
            let ke = (6.0 * r).sqrt();
            let slopes: Vec<f64> = p.stretches.iter().map(|st| st.slope).collect();
            let ok = p.stretches.len() == 2
                && p.stretches.iter().any(|st| (st.slope + ke).abs() < 1e-6 && (st.graph_slope + ke).abs() < 1e-6)
                && p.stretches.iter().any(|st| (st.slope - ke).abs() < 1e-6 && (st.graph_slope - ke).abs() < 1e-6);
            c.check(ok, format!("r={r}: stretches with slopes {slopes:?} (want ±{ke:.6})"));
        }
        Ok(())
    })
}

pub fn criterion_5() -> CriterionReport {
    run(5, "Zero-resetting scaling of the area rate function", |c| {
        let rep = rate::scaling_check(&FunctionalModel::area(), &[0.25, 1.0, 4.0], &[0.5, 1.0, 2.0], &[0.05, 0.1, 0.2])?;
        c.check(rep.max_rel_dev < 1e-6, format!("max relative deviation {:.2e} (< 1e-6)", rep.max_rel_dev));
        let stat: Vec<f64> = rep.small_w.iter().map(|r| r.statistic).collect();
        let hi = stat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = stat.iter().copied().fold(f64::INFINITY, f64::min);
        c.check(
            lo > 0.0 && hi / lo < 4.0,
            format!("|I₁(w) − Γ(1/3)w²/2|/w⁴ over w∈{{0.05,0.1,0.2}} = {stat:.5?} (spread < 4)"),
        );
        Ok(())
    })
}

pub fn criterion_6(law: &Arc<AbsAreaLaw>) -> CriterionReport {
    run(6, "Abs-area with cubic waiting times: one stretch", |c| {
        let f = FunctionalModel::abs_area().with_law(law.clone());
        let m = ResetModel::new(f.clone(), cubic(1.0));
        let s = RateSolver::new(&m)?;
        let grid = linspace(0.1, 4.0, 40);
        let p = s.rate_profile(&grid)?;
        let ke = 6f64.sqrt();
        let ok = p.stretches.len() == 1
            && (p.stretches[0].slope - ke).abs() < 1e-6
            && (p.stretches[0].graph_slope - ke).abs() < 1e-6;
        c.check(ok, format!("stretches {:?} (want one with slope {ke:.6})", p.stretches));
        let rep = rate::scaling_check(&f, &[1.0], &[], &[0.1])?;
        let stat = rep.small_w[0].statistic;
        c.check((0.85..=1.15).contains(&stat), format!("I₁(0.1)·27·0.01/(4ν₁³) = {stat:.4} (in [0.85, 1.15])"));
        Ok(())
    })
}

pub fn criterion_7(cfg: &VerifyConfig) -> CriterionReport {
    run(7, "Law of large numbers and CLT by simulation", |c| {
        let start = Instant::now();
        let fs = [
            FunctionalModel::occupation(),
            FunctionalModel::area(),
            FunctionalModel::abs_area().with_path_step(cfg.abs_area_path_step)?,
        ];
        for f in &fs {
            for d in [exp(1.0), cubic(1.0)] {
                let m = ResetModel::new(f.clone(), d);
                let tag = format!("{}/{}", f.kind(), d);
                let s50 = sim::run_summary(&m, 50.0, cfg.mc_paths, &[], cfg.seed)?;
                let (mf, mu) = (s50.mean_f_over_t, s50.mu);
                c.check(
                    (mf.value - mu).abs() < 3.0 * mf.stderr,
                    format!("{tag} t=50: mean F/t {:.5} ± {:.1e} vs μ {mu:.5}", mf.value, mf.stderr),
                );
                let vs = s50.var_scaled;
                c.check(
                    (vs.value - s50.v).abs() < 3.0 * vs.stderr,
                    format!("{tag} t=50: var {:.5} ± {:.1e} vs v {:.5}", vs.value, vs.stderr, s50.v),
                );
                let s200 = sim::run_summary(&m, 200.0, cfg.mc_paths, &[], cfg.seed.wrapping_add(1))?;
                let (sk, ku) = (s200.skewness, s200.excess_kurtosis);
                c.check(
                    sk.value.abs() < 3.0 * sk.stderr,
                    format!("{tag} t=200: skewness {:.4} ± {:.1e}", sk.value, sk.stderr),
                );
                c.check(
                    ku.value.abs() < 3.0 * ku.stderr,
                    format!("{tag} t=200: excess kurtosis {:.4} ± {:.1e}", ku.value, ku.stderr),
                );
            }
        }
        let secs = start.elapsed().as_secs_f64();
        c.check(secs < 300.0, format!("runtime {secs:.1}s (< 300s)"));
        Ok(())
    })
}

pub fn criterion_8(cfg: &VerifyConfig) -> CriterionReport {
    run(8, "Scaled CGF by simulation", |c| {
        let cases = [
            (FunctionalModel::occupation(), exp(1.0), 1.0),
            (FunctionalModel::area(), cubic(1.0), 1.5),
        ];
        for (f, d, kmax) in cases {
            let m = ResetModel::new(f.clone(), d);
            let ks = linspace(-kmax, kmax, 21);
            let s = sim::run_summary(&m, 50.0, cfg.mc_paths, &ks, cfg.seed.wrapping_add(2))?;
            let (mut covered, mut reliable) = (0usize, 0usize);
            let mut worst = (0.0, 0.0);
            for p in &s.cgf_grid {
                if !p.reliable {
                    continue;
                }
                reliable += 1;
                let g = -m.phi(p.k)?.value;
                if p.ci_lo <= g && g <= p.ci_hi {
                    covered += 1;
                } else {
                    let miss = (p.g_hat - g).abs();
                    if miss > worst.1 {
                        worst = (p.k, miss);
                    }
                }
            }
            let frac = covered as f64 / reliable.max(1) as f64;
            c.check(
                reliable > 0 && frac >= 0.9,
                format!(
                    "{}/{d}: CI covers −φ at {covered}/{reliable} reliable points ({:.0}%); largest miss {:.2e} at k={}",
                    f.kind(),
                    100.0 * frac,
                    worst.1,
                    worst.0
                ),
            );
        }
        Ok(())
    })
}

pub fn criterion_9(law: &Arc<AbsAreaLaw>) -> CriterionReport {
    run(9, "ϖ ≥ φ on every pairing with finite diagnostics", |c| {
        let ks = linspace(-3.0, 3.0, 61);
        let mut pairings = 0;
        for f in standard_functionals(law) {
            for d in standard_dists() {
                let m = ResetModel::new(f.clone(), d);
                if m.diagnose()?.classification == Classification::FlatZero {
                    continue;
                }
                pairings += 1;
                let rows = varpi_table(&m, &ks, 1e-9)?;
                let bad: Vec<f64> = rows.iter().filter(|r| !r.ok).map(|r| r.k).collect();
                c.check(bad.is_empty(), format!("{}/{d}: violations at k = {bad:?}", f.kind()));
            }
        }
        c.check(pairings == 9, format!("{pairings} pairings checked"));
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarpiRow {
    pub k: f64,
    #[serde(with = "crate::ext")]
    pub varpi: f64,
    #[serde(with = "crate::ext")]
    pub phi: f64,
    pub boundary: bool,
    pub ok: bool,
}

pub fn varpi_table(model: &ResetModel, ks: &[f64], tol: f64) -> Result<Vec<VarpiRow>> {
    ks.iter()
        .map(|&k| {
            let v = model.varpi(k);
            let phi = model.phi(k)?.value;
            let ok = phi == f64::NEG_INFINITY || v.value >= phi - tol;
            Ok(VarpiRow { k, varpi: v.value, phi, boundary: v.boundary, ok })
        })
        .collect()
}

pub fn criterion_10() -> CriterionReport {
    run(10, "Concavity, symmetry, duality and subgradient properties", |c| {
        let ks = linspace(-3.0, 3.0, 25);
        let occ_dists = standard_dists();
        let mut models: Vec<ResetModel> =
            occ_dists.iter().map(|&d| ResetModel::new(FunctionalModel::occupation(), d)).collect();
        models.push(ResetModel::new(FunctionalModel::area(), cubic(1.0)));
        models.push(ResetModel::new(FunctionalModel::abs_area(), exp(1.0)));
        for m in &models {
            let tag = format!("{}/{}", m.kind(), m.dist);
            let ks_m: Vec<f64> =
                if m.kind() == FunctionalKind::AbsArea { ks.iter().copied().filter(|&k| k <= 0.0).collect() } else { ks.clone() };
            let phi: Vec<f64> = ks_m.iter().map(|&k| m.phi(k).map(|p| p.value)).collect::<Result<_>>()?;
            let worst = phi
                .windows(3)
                .filter(|w| w.iter().all(|v| v.is_finite()))
                .map(|w| w[0] - 2.0 * w[1] + w[2])
                .fold(f64::NEG_INFINITY, f64::max);
            c.check(worst <= 1e-9, format!("{tag}: max second difference of φ {worst:.2e} (≤ 1e-9)"));
        }
        for m in &models[..4] {
            let mut worst = 0.0f64;
            for &k in &ks {
                worst = worst.max((m.phi(-k)?.value - m.phi(k)?.value - k).abs());
            }
            c.check(worst < 1e-9, format!("occupation/{}: max |φ(−k) − φ(k) − k| = {worst:.2e}", m.dist));
        }
        let occ = RateSolver::new(&models[0])?;
        let mut worst = 0.0f64;
        for w in linspace(0.02, 0.48, 24) {
            worst = worst.max((occ.rate_at(0.5 - w)?.value - occ.rate_at(0.5 + w)?.value).abs());
        }
        c.check(worst < 1e-8, format!("occupation/exp:1: max |I(1/2−w) − I(1/2+w)| = {worst:.2e}"));
        let area = RateSolver::new(&models[4])?;
        let mut worst = 0.0f64;
        for w in linspace(0.25, 8.0, 32) {
            worst = worst.max((area.rate_at(-w)?.value - area.rate_at(w)?.value).abs());
        }
        c.check(worst < 1e-8, format!("area/cubic:1: max |I(−w) − I(w)| = {worst:.2e}"));

        for (m, kset) in [(&models[0], vec![-2.0, -0.5, 0.5, 2.0]), (&models[4], vec![-2.0, -1.0, 1.0, 2.0]), (&models[5], vec![-3.0, -1.0, -0.2])] {
            let s = RateSolver::new(m)?;
            let mut worst_dual = 0.0f64;
            let mut worst_sub = 0.0f64;
            for k in kset {
                let phi = m.phi(k)?;
                let w_star = -m.phi_prime(k)?;
                let mut best = f64::NEG_INFINITY;
                for j in -40..=40 {
                    let w = w_star + j as f64 * 2.5e-4;
                    let p = s.rate_at(w)?;
                    best = best.max(k * w - p.value);
                    if p.regime == RateRegime::Interior {
                        worst_sub = worst_sub.max((w + m.phi_prime(p.k_star)?).abs());
                    }
                }
                worst_dual = worst_dual.max((best + phi.value).abs());
            }
            let tag = format!("{}/{}", m.kind(), m.dist);
            c.check(worst_dual < 1e-5, format!("{tag}: duality max |sup_w(kw − I) + φ(k)| = {worst_dual:.2e}"));
            c.check(worst_sub < 1e-6, format!("{tag}: subgradient max |w + φ′(k*)| = {worst_sub:.2e}"));
        }
        Ok(())
    })
}

pub const CRITERION_COUNT: u32 = 10;

/// Criteria that read the tabulated abs-area law.
pub const LAW_CRITERIA: [u32; 5] = [3, 6, 7, 8, 9];

pub fn run_criterion(id: u32, cfg: &VerifyConfig) -> Option<CriterionReport> {
    Some(match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(&cfg.law),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(&cfg.law),
        7 => criterion_7(cfg),
        8 => criterion_8(cfg),
        9 => criterion_9(&cfg.law),
        10 => criterion_10(),
        _ => return None,
    })
}

/// Runs every criterion in order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionReport> {
    (1..=CRITERION_COUNT).filter_map(|id| run_criterion(id, cfg)).collect()
}
