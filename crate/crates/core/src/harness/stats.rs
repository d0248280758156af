use statrs::distribution::{ContinuousCDF, Normal};

/// Median of `values`; `f64::INFINITY` entries stand for trials that never
/// reached the target. NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// First quartile, median and third quartile (linear interpolation between
/// order statistics).
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    (quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75))
}

fn quantile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if lo == hi || a == b {
        a
    } else if b.is_infinite() {
        f64::INFINITY
    } else {
        a + (b - a) * (h - lo as f64)
    }
}

/// One-sided Mann-Whitney U test of "`x` tends to be smaller than `y`".
/// Uses mid-ranks for ties, the tie-corrected normal approximation and a
/// continuity correction. Returns `(u_x, p_value)`.
pub fn mann_whitney_less(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    if x.is_empty() || y.is_empty() {
        return (f64::NAN, 1.0);
    }
    let mut pooled: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pooled.len();
    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_x += pooled[i..=j].iter().filter(|p| p.1).count() as f64 * rank;
        i = j + 1;
    }
    let u_x = rank_sum_x - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let total = n1 + n2;
    let var = n1 * n2 / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if var <= 0.0 {
        return (u_x, 1.0);
    }
    let z = (u_x - mean + 0.5) / var.sqrt();
    let p = Normal::new(0.0, 1.0).expect("unit normal").cdf(z);
    (u_x, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians_with_unreached() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        assert_eq!(median(&[1.0, 2.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]), (2.0, 3.0, 4.0));
    }

    #[test]
    fn mann_whitney_separated_samples() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = (100..120).map(f64::from).collect();
        let (u, p) = mann_whitney_less(&x, &y);
        assert_eq!(u, 0.0);
        assert!(p < 1e-6);
        let (u, p) = mann_whitney_less(&y, &x);
        assert_eq!(u, 400.0);
        assert!(p > 0.999);
    }

    #[test]
    fn mann_whitney_known_value() {
        // Reference value from an independent asymptotic implementation.
        let x = [1.0, 2.0, 4.0, 5.0];
        let y = [3.0, 6.0, 7.0, 8.0, 9.0];
        let (u, p) = mann_whitney_less(&x, &y);
        assert_eq!(u, 2.0);
        assert!((p - 0.03309628986109672).abs() < 1e-9, "{p}");
        let (u, p) = mann_whitney_less(&[1.0, 2.0, 2.0, 5.0, 5.0], &[2.0, 5.0, 7.0, 7.0, 9.0, 9.0]);
        assert_eq!(u, 4.0);
        assert!((p - 0.024872995360751497).abs() < 1e-9, "{p}");
    }
}
