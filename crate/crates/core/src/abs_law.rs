//! Tabulated law of A = ∫₀¹|B_τ|dτ, used for the exponential moments
//! E[e^{uA}], u > 0, which have no usable series.
//!
//! The table holds 4096 empirical quantiles at p_j = (j + 1/2)/4096. The
//! top cell is replaced by a normal tail N(0, 1/3) conditioned to exceed
//! the cell boundary, which reproduces the e^{u²/6} growth for large u.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const QUANTILE_COUNT: usize = 4096;
const MAGIC: &[u8; 4] = b"ABSA";
const VERSION: u32 = 1;
const CHUNK: u64 = 2048;
pub const CACHE_ENV: &str = "RESET_LDP_CACHE";
const TAB_STEP: f64 = 1.0 / 128.0;
const TAB_MAX: f64 = 64.0;

#[derive(Debug, Clone)]
pub struct AbsAreaLaw {
    quantiles: Vec<f64>,
    step_exponent: u32,
    paths: Option<u64>,
    table: OnceLock<Tabulated>,
}

impl PartialEq for AbsAreaLaw {
    fn eq(&self, other: &Self) -> bool {
        self.quantiles == other.quantiles && self.step_exponent == other.step_exponent && self.paths == other.paths
    }
}

/// Both log-ratios on a uniform u-grid, for 4-point interpolation.
#[derive(Debug, Clone)]
struct Tabulated {
    mgf: Vec<f64>,
    first: Vec<f64>,
}

fn lagrange4(v: &[f64], u: f64) -> f64 {
    let x = u / TAB_STEP;
    let i = (x.floor() as usize).clamp(1, v.len() - 3);
    let t = x - i as f64;
    let (p0, p1, p2, p3) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
    -t * (t - 1.0) * (t - 2.0) / 6.0 * p0 + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * p1
        - (t + 1.0) * t * (t - 2.0) / 2.0 * p2
        + (t + 1.0) * t * (t - 1.0) / 6.0 * p3
}

/// Trapezoidal ∫₀¹|B| on a grid of 2^e steps.
fn unit_path_abs_area<R: rand::Rng>(rng: &mut R, steps: usize) -> f64 {
    let h = 1.0 / steps as f64;
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

/// Empirical quantile by linear interpolation between order statistics.
fn quantile_of_sorted(x: &[f64], p: f64) -> f64 {
    let pos = (p * x.len() as f64 - 0.5).clamp(0.0, (x.len() - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(x.len() - 1);
    let t = pos - lo as f64;
    x[lo] * (1.0 - t) + x[hi] * t
}

fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl AbsAreaLaw {
    /// Simulates `paths` Brownian paths on [0,1] with 2^`step_exponent` steps.
    /// Deterministic in `seed` regardless of thread count.
    pub fn simulate(paths: u64, step_exponent: u32, seed: u64) -> Result<Self> {
        if paths < QUANTILE_COUNT as u64 {
            return Err(Error::Config(format!("need at least {QUANTILE_COUNT} paths, got {paths}")));
        }
        if !(1..=20).contains(&step_exponent) {
            return Err(Error::Config(format!("step exponent {step_exponent} outside 1..=20")));
        }
        let steps = 1usize << step_exponent;
        let chunks = paths.div_ceil(CHUNK);
        let mut samples: Vec<f64> = (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c);
                let n = CHUNK.min(paths - c * CHUNK);
                (0..n).map(move |_| unit_path_abs_area(&mut rng, steps)).collect::<Vec<_>>()
            })
            .collect();
        samples.sort_by(f64::total_cmp);
        let quantiles = (0..QUANTILE_COUNT)
            .map(|j| quantile_of_sorted(&samples, (j as f64 + 0.5) / QUANTILE_COUNT as f64))
            .collect();
        Ok(AbsAreaLaw { quantiles, step_exponent, paths: Some(paths), table: OnceLock::new() })
    }

    pub fn from_quantiles(quantiles: Vec<f64>, step_exponent: u32, paths: Option<u64>) -> Result<Self> {
        if quantiles.len() != QUANTILE_COUNT {
            return Err(Error::Format(format!("expected {QUANTILE_COUNT} quantiles, got {}", quantiles.len())));
        }
        if quantiles.windows(2).any(|w| !(w[1] >= w[0])) || !(quantiles[0] >= 0.0) {
            return Err(Error::Format("quantiles must be nonnegative and nondecreasing".into()));
        }
        Ok(AbsAreaLaw { quantiles, step_exponent, paths, table: OnceLock::new() })
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    pub fn step_exponent(&self) -> u32 {
        self.step_exponent
    }

    /// Number of simulated paths, when known (not stored in the cache file).
    pub fn paths(&self) -> Option<u64> {
        self.paths
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * QUANTILE_COUNT);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(QUANTILE_COUNT as u32).to_le_bytes());
        out.extend_from_slice(&self.step_exponent.to_le_bytes());
        for q in &self.quantiles {
            out.extend_from_slice(&q.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < 16 || &b[0..4] != MAGIC {
            return Err(Error::Format("not an abs-area quantile table".into()));
        }
        let word = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        if word(4) != VERSION {
            return Err(Error::Format(format!("unsupported table version {}", word(4))));
        }
        let count = word(8) as usize;
        if count != QUANTILE_COUNT || b.len() != 16 + 8 * count {
            return Err(Error::Format(format!("bad quantile count {count} or length {}", b.len())));
        }
        let q = b[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::from_quantiles(q, word(12), None)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// `$RESET_LDP_CACHE` if set, else a file in the system temp directory.
    pub fn default_cache_path() -> PathBuf {
        match std::env::var_os(CACHE_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => std::env::temp_dir().join("reset-ldp-absarea-v1.bin"),
        }
    }

    /// Loads the cached table, or simulates and caches it.
    pub fn load_or_build(path: &Path, paths: u64, step_exponent: u32, seed: u64) -> Result<Self> {
        if path.exists() {
            return Self::read_from(path);
        }
        let law = Self::simulate(paths, step_exponent, seed)?;
        law.write_to(path)?;
        Ok(law)
    }

    /// Mean of g over the quantile cells (no tail model).
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.quantiles.iter().map(|&a| g(a)).sum::<f64>() / QUANTILE_COUNT as f64
    }

    /// Standard error of the Monte Carlo estimate of E[g(A)], from the
    /// spread over the cells and the simulated path count.
    pub fn standard_error<G: Fn(f64) -> f64>(&self, g: G) -> Option<f64> {
        let n = self.paths? as f64;
        let m = self.expect(&g);
        let var = self.expect(|a| (g(a) - m).powi(2));
        Some((var / n).sqrt())
    }

    fn tail_boundary(&self) -> f64 {
        0.5 * (self.quantiles[QUANTILE_COUNT - 2] + self.quantiles[QUANTILE_COUNT - 1])
    }

    fn table(&self) -> &Tabulated {
        self.table.get_or_init(|| {
            let n = (TAB_MAX / TAB_STEP) as usize + 3;
            let grid = (0..n).map(|i| i as f64 * TAB_STEP);
            Tabulated {
                mgf: grid.clone().map(|u| self.ln_mgf_ratio_raw(u)).collect(),
                first: grid.map(|u| self.ln_first_moment_ratio_exact(u)).collect(),
            }
        })
    }

    /// ln E[e^{uA}] − u²/6 for u ≥ 0, clamped at the lower sandwich bound 0.
    /// Interpolated from a tabulation for u ≤ 64.
    pub fn ln_mgf_ratio(&self, u: f64) -> f64 {
        if u <= TAB_MAX {
            lagrange4(&self.table().mgf, u).max(0.0)
        } else {
            self.ln_mgf_ratio_exact(u)
        }
    }

    /// ln E[A e^{uA}] − u²/6 for u ≥ 0, interpolated for u ≤ 64.
    pub fn ln_first_moment_ratio(&self, u: f64) -> f64 {
        if u <= TAB_MAX {
            lagrange4(&self.table().first, u)
        } else {
            self.ln_first_moment_ratio_exact(u)
        }
    }

    pub fn ln_mgf_ratio_exact(&self, u: f64) -> f64 {
        self.ln_mgf_ratio_raw(u).max(0.0)
    }

    fn ln_mgf_ratio_raw(&self, u: f64) -> f64 {
        let a = self.tail_boundary();
        let s3 = 3f64.sqrt();
        let u6 = u * u / 6.0;
        let bulk: f64 = self.quantiles[..QUANTILE_COUNT - 1].iter().map(|&q| (u * q - u6).exp()).sum();
        let tail = norm_sf(s3 * (a - u / 3.0)) / norm_sf(s3 * a);
        ((bulk + tail) / QUANTILE_COUNT as f64).ln()
    }

    pub fn ln_first_moment_ratio_exact(&self, u: f64) -> f64 {
        let a = self.tail_boundary();
        let s3 = 3f64.sqrt();
        let u6 = u * u / 6.0;
        let bulk: f64 = self.quantiles[..QUANTILE_COUNT - 1].iter().map(|&q| q * (u * q - u6).exp()).sum();
        let b = s3 * (a - u / 3.0);
        let tail = (u / 3.0 * norm_sf(b) + norm_pdf(b) / s3) / norm_sf(s3 * a);
        ((bulk + tail) / QUANTILE_COUNT as f64).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_law() -> AbsAreaLaw {
        AbsAreaLaw::simulate(1 << 16, 8, 7).unwrap()
    }

    #[test]
    fn moments_match_known_values() {
        let law = small_law();
        let m = law.expect(|a| a);
        let se = law.standard_error(|a| a).unwrap();
        assert!((m - crate::airy::MEAN_ABS_AREA).abs() < 4.0 * se + 1e-3, "{m} ± {se}");
        let m2 = law.expect(|a| a * a);
        let se2 = law.standard_error(|a| a * a).unwrap();
        assert!((m2 - 0.375).abs() < 4.0 * se2 + 1e-3, "{m2} ± {se2}");
    }

    #[test]
    fn sandwich_and_growth() {
        let law = small_law();
        assert_eq!(law.ln_mgf_ratio(0.0), 0.0);
        let mut prev = 0.0;
        for j in 1..60 {
            let u = 0.5 * j as f64;
            let r = law.ln_mgf_ratio(u);
            assert!(r >= 0.0 && r.is_finite());
            assert!(r.exp() < 4.0, "ratio {} at {u}", r.exp());
            prev = r;
        }
        assert!(prev > 0.4);
    }

    #[test]
    fn first_moment_is_derivative_of_mgf() {
        let law = small_law();
        for u in [0.3, 2.0, 6.0, 15.0] {
            let h = 1e-5;
            let lm = |u: f64| law.ln_mgf_ratio_exact(u) + u * u / 6.0;
            let d = (lm(u + h) - lm(u - h)) / (2.0 * h);
            let ratio = (law.ln_first_moment_ratio_exact(u) - law.ln_mgf_ratio_exact(u)).exp();
            assert!((d / ratio - 1.0).abs() < 1e-6, "u={u}: {d} vs {ratio}");
        }
    }

    #[test]
    fn interpolation_matches_direct_sums() {
        let law = small_law();
        for u in [0.001, 0.3, 1.7, 9.99, 31.4, 63.9, 80.0] {
            assert!((law.ln_mgf_ratio(u) - law.ln_mgf_ratio_exact(u)).abs() < 1e-9, "u={u}");
            assert!((law.ln_first_moment_ratio(u) - law.ln_first_moment_ratio_exact(u)).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn cache_round_trip_and_header() {
        let law = small_law();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        law.write_to(&p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[0..4], b"ABSA");
        assert_eq!(bytes.len(), 16 + 8 * 4096);
        let back = AbsAreaLaw::read_from(&p).unwrap();
        assert_eq!(back.quantiles(), law.quantiles());
        assert_eq!(back.step_exponent(), 8);
        assert!(AbsAreaLaw::from_bytes(&bytes[..100]).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let a = AbsAreaLaw::simulate(8192, 6, 3).unwrap();
        let b = AbsAreaLaw::simulate(8192, 6, 3).unwrap();
        assert_eq!(a, b);
    }
}
