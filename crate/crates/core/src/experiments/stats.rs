use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `sqrt(variance / count)`.
    pub stderr: f64,
    /// 5%, 25%, 50%, 75% and 95% quantiles.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quantiles: Option<[f64; 5]>,
}

impl SummaryStats {
    pub fn from_slice(xs: &[f64]) -> Self {
        let count = xs.len();
        let mean = if count == 0 { f64::NAN } else { xs.iter().sum::<f64>() / count as f64 };
        let variance = if count < 2 {
            f64::NAN
        } else {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        };
        SummaryStats {
            count,
            mean,
            variance,
            stderr: (variance / count as f64).sqrt(),
            quantiles: None,
        }
    }

    pub fn with_quantiles(xs: &[f64]) -> Self {
        let mut s = Self::from_slice(xs);
        if !xs.is_empty() {
            let mut sorted = xs.to_vec();
            sorted.sort_by(f64::total_cmp);
            let q = |p: f64| {
                let pos = p * (sorted.len() - 1) as f64;
                let (i, frac) = (pos.floor() as usize, pos.fract());
                let next = sorted[(i + 1).min(sorted.len() - 1)];
                sorted[i] + frac * (next - sorted[i])
            };
            s.quantiles = Some([q(0.05), q(0.25), q(0.5), q(0.75), q(0.95)]);
        }
        s
    }

    /// Standard error of the sample variance under a normal model,
    /// `variance · sqrt(2/(count − 1))`.
    pub fn variance_stderr(&self) -> f64 {
        self.variance * (2.0 / (self.count as f64 - 1.0)).sqrt()
    }

    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn mean_within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Standard error of the mean recomputed from `batches` batch means.
pub fn batch_means_stderr(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    SummaryStats::from_slice(&means).stderr
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_example() {
        let s = SummaryStats::with_quantiles(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.quantiles.unwrap()[2], 2.5);
    }

    #[test]
    fn batch_means_agree_for_iid_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..200_000).map(|_| rng.gen::<f64>()).collect();
        let direct = SummaryStats::from_slice(&xs).stderr;
        let batched = batch_means_stderr(&xs, 100);
        assert!((batched / direct - 1.0).abs() < 0.2);
    }

    proptest! {
        #[test]
        fn stderr_identity(xs in proptest::collection::vec(-1e3f64..1e3, 2..200)) {
            let s = SummaryStats::from_slice(&xs);
            prop_assert!((s.stderr - (s.variance / s.count as f64).sqrt()).abs() <= 1e-12 * (1.0 + s.stderr));
            prop_assert!(s.variance >= 0.0);
        }
    }
}
