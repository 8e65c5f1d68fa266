/// Repeated pairwise averaging of the last `levels + 1` partial sums of an
/// alternating series. Returns the accelerated value and the change made by
/// the final level, which serves as an error estimate.
pub fn averaged_partial_sums(terms: &[f64], levels: usize) -> (f64, f64) {
    let n = terms.len();
    if n <= levels + 1 {
        let s: f64 = terms.iter().sum();
        return (s, f64::INFINITY);
    }
    let mut partial = 0.0;
    let mut tail = Vec::with_capacity(levels + 1);
    for (i, t) in terms.iter().enumerate() {
        partial += t;
        if i + levels + 1 >= n {
            tail.push(partial);
        }
    }
    let mut prev = *tail.last().unwrap();
    for _ in 0..levels {
        prev = *tail.last().unwrap();
        tail = tail.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let v = tail[0];
    (v, (v - prev).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accelerates_alternating_harmonic() {
        let terms: Vec<f64> = (1..=60).map(|i| if i % 2 == 1 { 1.0 } else { -1.0 } / i as f64).collect();
        let (v, err) = averaged_partial_sums(&terms, 10);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-10, "{v}");
        assert!(err < 1e-8);
    }
}
