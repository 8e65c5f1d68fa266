//! Quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod (21 point) and a
//! half-line driver for integrands given in log form.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 500,
        }
    }
}

impl QuadOptions {
    /// Purely relative control, used where values may be very small.
    pub fn relative(rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol,
            max_subdivisions: 500,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

pub(crate) fn gl256() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(256))
}

pub(crate) fn gl512() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(512))
}

/// Fixed Gauss–Legendre rule mapped to [a, b].
pub fn fixed<F: FnMut(f64) -> f64>(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64, mut f: F) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        s += w * f(c + h * x);
    }
    s * h
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980848580,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * h;
    resabs *= h.abs();
    resasc *= h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive GK21 on a finite interval. Never evaluates the endpoints.
/// Returns the best estimate even if the tolerance was not met; the reported
/// error then exceeds the requested one.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Estimate {
    let (v, e) = gk21(&mut f, a, b);
    let mut total = v;
    let mut err = e;
    if !total.is_finite() {
        return Estimate { value: total, error: f64::INFINITY };
    }
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let mut n = 1;
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) && n < opts.max_subdivisions {
        let p = heap.pop().expect("heap holds at least one piece");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk21(&mut f, p.a, m);
        let (v2, e2) = gk21(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        if !total.is_finite() {
            return Estimate { value: total, error: f64::INFINITY };
        }
        heap.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, error: e2 });
        n += 1;
    }
    // Resum to limit drift from the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Estimate { value, error }
}

/// How the far tail of a half-line integral is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// The integral is known to converge.
    Convergent,
    /// Convergence is undecided by the exponents; detect divergence numerically.
    Undecided,
}

const MAX_BLOCKS: usize = 400;

/// ∫₀^∞ exp(g(s)) ds over doubling blocks [0,1], [1,2], [2,4], ...
/// In `Undecided` mode, returns +∞ when the block sums stop decaying or the
/// running total exceeds 1e12.
pub fn half_line_exp<G: Fn(f64) -> f64>(g: G, opts: &QuadOptions, mode: TailMode) -> f64 {
    let f = |s: f64| g(s).exp();
    let mut total = 0.0;
    let mut prev = f64::NAN;
    let mut flat_run = 0;
    let mut zero_run = 0;
    let mut last_ratio = f64::NAN;
    for j in 0..MAX_BLOCKS {
        let (a, b) = if j == 0 { (0.0, 1.0) } else { (2f64.powi(j as i32 - 1), 2f64.powi(j as i32)) };
        let block_opts = QuadOptions {
            abs_tol: (opts.rel_tol * total * 0.1).max(opts.abs_tol * 0.01),
            rel_tol: opts.rel_tol * 0.1,
            max_subdivisions: opts.max_subdivisions,
        };
        let est = adaptive(f, a, b, &block_opts);
        let blk = est.value;
        if !blk.is_finite() {
            return f64::INFINITY;
        }
        total += blk;
        if mode == TailMode::Undecided {
            if total > 1e12 {
                return f64::INFINITY;
            }
            if j > 1 && prev > 0.0 {
                let ratio = blk / prev;
                if b >= 64.0 && ratio >= 0.995 {
                    flat_run += 1;
                    if flat_run >= 3 {
                        return f64::INFINITY;
                    }
                } else {
                    flat_run = 0;
                }
                last_ratio = ratio;
            }
        }
        if total == 0.0 {
            zero_run += 1;
            if zero_run >= 12 {
                return 0.0;
            }
        }
        if j > 0 && total > 0.0 && blk <= 0.01 * opts.rel_tol * total && blk < prev {
            return total;
        }
        if j > 1 && prev > 0.0 {
            last_ratio = blk / prev;
        }
        prev = blk;
    }
    if last_ratio.is_finite() && last_ratio < 1.0 {
        total += prev * last_ratio / (1.0 - last_ratio);
        total
    } else if mode == TailMode::Undecided {
        f64::INFINITY
    } else {
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(7);
        // degree 13 is exact for 7 points
        let v = fixed(&rule, 0.0, 2.0, |x| x.powi(13));
        assert!((v - 2f64.powi(14) / 14.0).abs() < 1e-10);
        let (x, w) = gl256();
        assert_eq!(x.len(), 256);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &QuadOptions::default());
        assert!((est.value - 2.0).abs() < 1e-9, "{}", est.value);
    }

    #[test]
    fn half_line_gamma_integrals() {
        let o = QuadOptions::relative(1e-12);
        // Γ(4.5) = ∫ s^{3.5} e^{-s} ds
        let v = half_line_exp(|s: f64| 3.5 * s.ln() - s, &o, TailMode::Convergent);
        assert!((v / 11.631728396567448 - 1.0).abs() < 1e-11, "{v}");
        // sharp mass near zero
        let v = half_line_exp(|s: f64| (500.0f64).ln() - 500.0 * s, &o, TailMode::Convergent);
        assert!((v - 1.0).abs() < 1e-11, "{v}");
        // mass far out
        let v = half_line_exp(|s: f64| (1e-3f64).ln() - 1e-3 * s, &o, TailMode::Convergent);
        assert!((v - 1.0).abs() < 1e-11, "{v}");
    }

    #[test]
    fn half_line_power_tails() {
        let o = QuadOptions::relative(1e-10);
        // ∫ (1+s)^{-3} = 1/2
        let v = half_line_exp(|s: f64| -3.0 * s.ln_1p(), &o, TailMode::Undecided);
        assert!((v - 0.5).abs() < 1e-8, "{v}");
        let v = half_line_exp(|s: f64| -0.5 * s.ln_1p(), &o, TailMode::Undecided);
        assert_eq!(v, f64::INFINITY);
        let v = half_line_exp(|s: f64| -(s.ln_1p()), &o, TailMode::Undecided);
        assert_eq!(v, f64::INFINITY);
    }
}
