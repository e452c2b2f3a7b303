//! Goodness-of-fit tests used by the hypothesis checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against Uniform[0, 1). Sorts `samples`.
pub fn ks_uniform(samples: &mut [f64]) -> TestResult {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let d = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    TestResult { statistic: d, p_value: kolmogorov_sf(d, n) }
}

/// Two-sample Kolmogorov–Smirnov test. Sorts both inputs.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> TestResult {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    TestResult { statistic: d, p_value: kolmogorov_sf(d, ne) }
}

/// `P(D > d)` for the KS statistic with effective sample size `n`, using the
/// asymptotic Kolmogorov series with Stephens' small-sample correction.
fn kolmogorov_sf(d: f64, n: f64) -> f64 {
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square goodness of fit of `counts` to cell probabilities
/// `probs`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> TestResult {
    assert_eq!(counts.len(), probs.len());
    let n = counts.iter().sum::<u64>() as f64;
    let stat = counts
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&c, &p)| {
            let e = n * p;
            (c as f64 - e).powi(2) / e
        })
        .sum::<f64>();
    let df = probs.iter().filter(|&&p| p > 0.0).count() - 1;
    TestResult { statistic: stat, p_value: chi_square_sf(stat, df) }
}

/// Chi-square test that two binned samples come from the same distribution.
/// Cells empty in both samples are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> TestResult {
    assert_eq!(a.len(), b.len());
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut stat = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        cells += 1;
        let diff = ka * x as f64 - kb * y as f64;
        stat += diff * diff / (x + y) as f64;
    }
    TestResult { statistic: stat, p_value: chi_square_sf(stat, cells.max(2) - 1) }
}

fn chi_square_sf(stat: f64, df: usize) -> f64 {
    ChiSquared::new(df as f64).expect("positive degrees of freedom").sf(stat)
}
