//! Small statistics helpers shared by the diagnostics and the test suites.
//!
//! Sums use Neumaier compensation so ensemble reductions are reproducible to
//! machine precision regardless of how the replica results were produced.

/// Kahan–Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Arithmetic mean; NaN on empty input.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs) / xs.len() as f64
}

/// Unbiased sample variance; NaN for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let mut acc = CompensatedSum::new();
    for &x in xs {
        let d = x - m;
        acc.add(d * d);
    }
    acc.value() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Median (midpoint of the two central order statistics for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Cumulative trapezoid integral of samples `(times[i], values[i])`,
/// returned at every sample time (starts at 0).
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(times.len(), values.len());
    let mut out = Vec::with_capacity(times.len());
    let mut acc = CompensatedSum::new();
    for i in 0..times.len() {
        if i > 0 {
            acc.add(0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]));
        }
        out.push(acc.value());
    }
    out
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let mx = mean(x);
    let my = mean(y);
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for i in 0..x.len() {
        num.add((x[i] - mx) * (y[i] - my));
        den.add((x[i] - mx) * (x[i] - mx));
    }
    num.value() / den.value()
}

/// Fitted exponent `p` of a power law `y ~ c x^p` through log-log regression.
/// Pairs with non-positive `x` or `y` are skipped; NaN if fewer than two remain.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> f64 {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for i in 0..x.len().min(y.len()) {
        if x[i] > 0.0 && y[i] > 0.0 {
            lx.push(x[i].ln());
            ly.push(y[i].ln());
        }
    }
    if lx.len() < 2 {
        return f64::NAN;
    }
    slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive_on_cancellation() {
        // 1 + 2^-60 repeated: naive summation loses the tail entirely.
        let xs: Vec<f64> = std::iter::once(1.0)
            .chain(std::iter::repeat_n(f64::EPSILON / 16.0, 1 << 12))
            .collect();
        let expected = 1.0 + (1 << 12) as f64 * (f64::EPSILON / 16.0);
        assert!((sum(&xs) - expected).abs() <= f64::EPSILON);
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let t = [0.0, 0.5, 1.0, 2.0];
        let v: Vec<f64> = t.iter().map(|&s| 3.0 * s).collect();
        let c = cumulative_trapezoid(&t, &v);
        assert!((c[3] - 6.0).abs() < 1e-14);
        assert_eq!(c[0], 0.0);
    }

    #[test]
    fn power_law_recovers_exponent() {
        let x = [1e-4, 1e-3, 1e-2, 1e-1];
        let y: Vec<f64> = x.iter().map(|&v: &f64| 2.0 * v.powf(0.5)).collect();
        assert!((power_law_exponent(&x, &y) - 0.5).abs() < 1e-12);
    }
}
