//! Independent numeric oracles for sampler statistics.

#![allow(dead_code)]

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(a + i as f64 * h)
        })
        .sum();
    (f(a) + inner + f(b)) * h / 3.0
}

/// Mean and variance of N(mu, sigma²) restricted to (0, ∞), by quadrature
/// of the unnormalized density.
pub fn truncated_normal_moments(mu: f64, sigma: f64) -> (f64, f64) {
    let density = |x: f64| (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp();
    let upper = mu + 14.0 * sigma;
    let n = 200_000;
    let z = simpson(density, 0.0, upper, n);
    let m1 = simpson(|x| x * density(x), 0.0, upper, n) / z;
    let m2 = simpson(|x| x * x * density(x), 0.0, upper, n) / z;
    (m1, m2 - m1 * m1)
}

/// Two-sided Kolmogorov–Smirnov distance between the sample and the
/// exponential CDF with the given rate.
pub fn ks_exponential(sample: &[f64], rate: f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-rate * x).exp();
            let above = (i + 1) as f64 / n - cdf;
            let below = cdf - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
