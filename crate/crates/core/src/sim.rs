//! Monte Carlo simulation of F_t for the reset process.
//!
//! Trajectories are split into fixed chunks; chunk c draws from the
//! ChaCha8 stream c of the run seed, so results do not depend on thread
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phi::ResetModel;

pub const CHUNK: usize = 1000;
const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_STREAM_BASE: u64 = 1 << 40;
pub const MIN_ESS: f64 = 50.0;
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryOutcome {
    #[serde(rename = "F_t")]
    pub f: f64,
    #[serde(rename = "W_t")]
    pub w: f64,
    #[serde(rename = "N_t")]
    pub n: u64,
    pub backlog: f64,
    /// Backward recurrence time t − T_{N_t}.
    pub age: f64,
}

/// Simulates one trajectory on [0, t].
pub fn simulate_trajectory<R: Rng + ?Sized>(model: &ResetModel, t: f64, rng: &mut R) -> TrajectoryOutcome {
    let mut elapsed = 0.0;
    let mut w = 0.0;
    let mut n = 0u64;
    loop {
        let s = model.dist.sample(rng);
        if elapsed + s > t {
            break;
        }
        elapsed += s;
        w += model.functional.sample_reward(s, rng);
        n += 1;
    }
    let age = t - elapsed;
    let backlog = model.functional.sample_reward(age, rng);
    TrajectoryOutcome { f: w + backlog, w, n, backlog, age }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// `n` trajectories in deterministic order.
pub fn simulate_many(model: &ResetModel, t: f64, n: usize, seed: u64) -> Vec<TrajectoryOutcome> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let m = CHUNK.min(n - c * CHUNK);
            (0..m).map(move |_| simulate_trajectory(model, t, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CgfPoint {
    pub k: f64,
    pub g_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ess: f64,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub n_samples: usize,
    pub t_horizon: f64,
    pub seed: u64,
    pub mu: f64,
    pub v: f64,
    pub mean_f_over_t: Estimate,
    pub mean_n_over_t: Estimate,
    /// Sample variance of (F − μt)/√t.
    pub var_scaled: Estimate,
    pub skewness: Estimate,
    pub excess_kurtosis: Estimate,
    pub cgf_grid: Vec<CgfPoint>,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn central_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m, m2 / n, m3 / n, m4 / n)
}

fn log_sum_exp(x: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = x.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + x.map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// ĝ(k) = (1/t) ln mean e^{kF}, with a bootstrap percentile interval.
pub fn cgf_point(f: &[f64], t: f64, k: f64, seed: u64, stream: u64) -> CgfPoint {
    let n = f.len();
    let ln_n = (n as f64).ln();
    if k == 0.0 {
        return CgfPoint { k, g_hat: 0.0, ci_lo: 0.0, ci_hi: 0.0, ess: n as f64, reliable: true };
    }
    let x: Vec<f64> = f.iter().map(|&v| k * v).collect();
    let lse = log_sum_exp(x.iter().copied());
    let g_hat = (lse - ln_n) / t;
    let ess = (2.0 * lse - log_sum_exp(x.iter().map(|v| 2.0 * v))).exp();
    let max_abs = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let shift = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - shift).exp()).collect();
    let mut rng = chunk_rng(seed, BOOTSTRAP_STREAM_BASE + stream);
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let s: f64 = (0..n).map(|_| e[rng.random_range(0..n)]).sum();
            (shift + s.ln() - ln_n) / t
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    CgfPoint {
        k,
        g_hat,
        ci_lo: percentile(&boot, 0.025),
        ci_hi: percentile(&boot, 0.975),
        ess,
        reliable: ess >= MIN_ESS && k.abs() * max_abs < MAX_EXPONENT,
    }
}

/// Moment, CLT-shape and CGF summary of `n` trajectories at horizon `t`.
pub fn run_summary(model: &ResetModel, t: f64, n: usize, k_grid: &[f64], seed: u64) -> Result<SimulationSummary> {
    if n < 100 {
        return Err(Error::Config(format!("need at least 100 trajectories, got {n}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("horizon must be positive, got {t}")));
    }
    let outcomes = simulate_many(model, t, n, seed);
    Ok(summarize(model, t, seed, &outcomes, k_grid))
}

pub fn summarize(
    model: &ResetModel,
    t: f64,
    seed: u64,
    outcomes: &[TrajectoryOutcome],
    k_grid: &[f64],
) -> SimulationSummary {
    let n = outcomes.len();
    let nf = n as f64;
    let stats = model.typical_stats();
    let (mu, v) = (stats.mu, stats.v);
    let f: Vec<f64> = outcomes.iter().map(|o| o.f).collect();

    let ft: Vec<f64> = f.iter().map(|x| x / t).collect();
    let (m, var_ft, _, _) = central_moments(&ft);
    let mean_f_over_t = Estimate { value: m, stderr: (var_ft / nf).sqrt() };

    let nt: Vec<f64> = outcomes.iter().map(|o| o.n as f64 / t).collect();
    let (mn, var_nt, _, _) = central_moments(&nt);
    let mean_n_over_t = Estimate { value: mn, stderr: (var_nt / nf).sqrt() };

    let y: Vec<f64> = f.iter().map(|x| (x - mu * t) / t.sqrt()).collect();
    let (_, m2, m3, m4) = central_moments(&y);
    let s2 = m2 * nf / (nf - 1.0);
    let var_scaled = Estimate { value: s2, stderr: ((m4 - m2 * m2) / nf).sqrt() };
    let skewness = Estimate { value: m3 / m2.powf(1.5), stderr: (6.0 / nf).sqrt() };
    let excess_kurtosis = Estimate { value: m4 / (m2 * m2) - 3.0, stderr: (24.0 / nf).sqrt() };

    let cgf_grid = k_grid
        .par_iter()
        .enumerate()
        .map(|(i, &k)| cgf_point(&f, t, k, seed, i as u64))
        .collect();

    SimulationSummary {
        n_samples: n,
        t_horizon: t,
        seed,
        mu,
        v,
        mean_f_over_t,
        mean_n_over_t,
        var_scaled,
        skewness,
        excess_kurtosis,
        cgf_grid,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub p_hat: f64,
    /// −(1/t) ln p̂; None for empty bins.
    #[serde(with = "crate::ext::opt")]
    pub rate: Option<f64>,
    /// Rate bounds from the 95% Wilson interval of p; for an empty bin only
    /// `rate_lo` is meaningful.
    #[serde(with = "crate::ext")]
    pub rate_lo: f64,
    #[serde(with = "crate::ext")]
    pub rate_hi: f64,
}

fn wilson(count: u64, n: u64) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let nf = n as f64;
    let p = count as f64 / nf;
    let d = 1.0 + z * z / nf;
    let c = (p + z * z / (2.0 * nf)) / d;
    let h = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / d;
    let lo = if count == 0 { 0.0 } else { (c - h).max(0.0) };
    (lo, (c + h).min(1.0))
}

/// Finite-t estimate −(1/t) ln P[F_t/t ∈ bin]. It sits below I(w) near μ
/// and is unreliable in the far tails, where counts are small.
pub fn empirical_rate(model: &ResetModel, t: f64, n: usize, bins: &[(f64, f64)], seed: u64) -> Result<Vec<RateBin>> {
    if n == 0 || !(t > 0.0) {
        return Err(Error::Config("empirical rate needs n > 0 and t > 0".into()));
    }
    if bins.iter().any(|&(lo, hi)| !(hi > lo)) {
        return Err(Error::Config("every bin needs lo < hi".into()));
    }
    let chunks = n.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let mut local = vec![0u64; bins.len()];
            for _ in 0..CHUNK.min(n - c * CHUNK) {
                let w = simulate_trajectory(model, t, &mut rng).f / t;
                for (j, &(lo, hi)) in bins.iter().enumerate() {
                    if w >= lo && w < hi {
                        local[j] += 1;
                    }
                }
            }
            local
        })
        .reduce(
            || vec![0u64; bins.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(bins
        .iter()
        .zip(counts)
        .map(|(&(lo, hi), count)| {
            let p_hat = count as f64 / n as f64;
            let (pl, ph) = wilson(count, n as u64);
            RateBin {
                lo,
                hi,
                count,
                p_hat,
                rate: (count > 0).then(|| -p_hat.ln() / t),
                rate_lo: -ph.ln() / t,
                rate_hi: -pl.ln() / t,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::WaitingTimeModel;
    use crate::functionals::FunctionalModel;

    fn occ() -> ResetModel {
        ResetModel::new(FunctionalModel::occupation(), WaitingTimeModel::exponential(1.0).unwrap())
    }

    #[test]
    fn empty_horizon() {
        let mut rng = chunk_rng(1, 0);
        let o = simulate_trajectory(&occ(), 0.0, &mut rng);
        assert_eq!((o.f, o.w, o.n), (0.0, 0.0, 0));
    }

    #[test]
    fn decomposition_and_bounds() {
        let m = occ();
        for o in simulate_many(&m, 10.0, 500, 3) {
            assert_eq!(o.f, o.w + o.backlog);
            assert!(o.backlog <= o.age && o.f >= 0.0 && o.f <= 10.0);
        }
    }

    #[test]
    fn deterministic_and_normalized() {
        let m = occ();
        let a = run_summary(&m, 5.0, 2000, &[0.0, 0.5], 11).unwrap();
        let b = run_summary(&m, 5.0, 2000, &[0.0, 0.5], 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cgf_grid[0].g_hat, 0.0);
        assert!(a.cgf_grid[1].ess <= 2000.0);
    }

    #[test]
    fn wilson_covers_extremes() {
        let (lo, hi) = wilson(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn occupation_bins_outside_support_are_empty() {
        let bins = [(-0.2, -0.01), (0.45, 0.55), (1.01, 1.2)];
        let r = empirical_rate(&occ(), 10.0, 5000, &bins, 2).unwrap();
        assert_eq!(r[0].count, 0);
        assert_eq!(r[2].count, 0);
        assert!(r[0].rate.is_none() && r[0].rate_lo.is_finite());
        assert!(r[1].count > 0);
    }
}
