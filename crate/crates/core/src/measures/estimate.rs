use serde::{Deserialize, Serialize};

/// Monte Carlo estimate of the measure of a set: a Bernoulli proportion with
/// its CLT standard error `√(p̂(1 − p̂)/n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: u64,
}

impl MeasureEstimate {
    pub fn from_counts(hits: u64, n_samples: u64) -> Self {
        assert!(n_samples > 0, "an estimate needs at least one sample");
        assert!(hits <= n_samples);
        let n = n_samples as f64;
        let p = hits as f64 / n;
        MeasureEstimate { mean: p, std_err: (p * (1.0 - p) / n).sqrt(), n_samples }
    }

    /// An exact value with zero error, such as a measure known by
    /// construction.
    pub fn exact(mean: f64, n_samples: u64) -> Self {
        MeasureEstimate { mean, std_err: 0.0, n_samples }
    }

    /// `mean > z · std_err`.
    pub fn significantly_positive(&self, z: f64) -> bool {
        self.mean > z * self.std_err
    }

    /// Whether `|mean − target| ≤ z · std_err`.
    pub fn consistent_with(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.std_err
    }
}

/// Monte Carlo estimate of `E[f]` for a bounded real function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: u64,
}

impl MeanEstimate {
    pub fn from_sums(sum: f64, sum_sq: f64, n_samples: u64) -> Self {
        assert!(n_samples > 0, "an estimate needs at least one sample");
        let n = n_samples as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        MeanEstimate { mean, std_err: (var / n).sqrt(), n_samples }
    }
}

/// Whether two independent estimates agree within `z` combined standard
/// errors.
pub fn agree(a_mean: f64, a_se: f64, b_mean: f64, b_se: f64, z: f64) -> bool {
    (a_mean - b_mean).abs() <= z * a_se.hypot(b_se)
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
