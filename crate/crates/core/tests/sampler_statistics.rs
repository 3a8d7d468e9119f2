mod support;

use checkpoint_core::sampling::{poisson_arrival_times, sample_service_time, ArrivalLaw, RngStream, ServiceLaw};
use support::oracles::{ks_critical_001, ks_exponential, mean_and_variance, truncated_normal_moments};

const LAMBDA: f64 = 0.81333;

#[test]
fn hourly_counts_are_poisson() {
    let law = ArrivalLaw::new(LAMBDA, 3600.0).unwrap();
    let counts: Vec<f64> = (0..200)
        .map(|rep| {
            let times = poisson_arrival_times(&law, &mut RngStream::new(42, rep));
            times.iter().filter(|&&t| (0.0..3600.0).contains(&t)).count() as f64
        })
        .collect();
    let (mean, var) = mean_and_variance(&counts);
    let expected = LAMBDA * 3600.0;
    assert!((expected - 2928.0).abs() < 0.5);
    assert!((mean - expected).abs() <= 3.0 * expected.sqrt(), "mean count {mean}");
    let ratio = var / expected;
    assert!((0.8..=1.25).contains(&ratio), "dispersion {ratio}");
}

#[test]
fn gaps_pass_kolmogorov_smirnov() {
    let law = ArrivalLaw::new(LAMBDA, 20_000.0).unwrap();
    let times = poisson_arrival_times(&law, &mut RngStream::new(2024, 0));
    assert!(times.len() > 10_000);
    let gaps: Vec<f64> = std::iter::once(times[0])
        .chain(times.windows(2).map(|w| w[1] - w[0]))
        .take(10_000)
        .collect();
    let d = ks_exponential(&gaps, LAMBDA);
    assert!(d < ks_critical_001(gaps.len()), "KS distance {d}");
}

#[test]
fn truncated_gaussian_moments_match_quadrature() {
    let (mu, sigma) = (39.02, 13.854);
    let (m_star, v_star) = truncated_normal_moments(mu, sigma);
    assert!(m_star > mu && m_star - mu < 0.2, "m* = {m_star}");

    let law = ServiceLaw::gaussian(mu, sigma).unwrap();
    let mut rng = RngStream::new(7, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_service_time(&law, &mut rng)).collect();
    assert!(draws.iter().all(|&x| x > 0.0));
    let (mean, var) = mean_and_variance(&draws);
    assert!((mean - m_star).abs() < 0.3, "mean {mean} vs {m_star}");
    assert!((mean - m_star).abs() / m_star < 0.01);
    assert!((var - v_star).abs() / v_star < 0.01, "variance {var} vs {v_star}");
}

#[test]
fn heavy_truncation_still_matches() {
    // a third of the untruncated mass lies below zero
    let (mu, sigma) = (10.0, 23.0);
    let (m_star, v_star) = truncated_normal_moments(mu, sigma);
    let law = ServiceLaw::gaussian(mu, sigma).unwrap();
    let mut rng = RngStream::new(11, 3);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_service_time(&law, &mut rng)).collect();
    let (mean, var) = mean_and_variance(&draws);
    assert!((mean - m_star).abs() / m_star < 0.01, "mean {mean} vs {m_star}");
    assert!((var - v_star).abs() / v_star < 0.02, "variance {var} vs {v_star}");
}

#[test]
fn exponential_service_mean() {
    let law = ServiceLaw::exponential(39.02).unwrap();
    let mut rng = RngStream::new(5, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_service_time(&law, &mut rng)).collect();
    let (mean, var) = mean_and_variance(&draws);
    assert!((mean - 39.02).abs() / 39.02 < 0.01, "mean {mean}");
    assert!(
        (var - 39.02f64.powi(2)).abs() / 39.02f64.powi(2) < 0.03,
        "variance {var}"
    );
}
