/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Estimate { mean, se: 0.0 }
    }

    /// Number of standard errors between the estimate and `target`. An
    /// exact estimate that hits its target scores 0; one that misses
    /// scores infinity.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if self.se > 0.0 {
            diff / self.se
        } else if diff <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }
}

/// Mean and standard error of independent samples.
pub(crate) fn sample_mean(xs: &[f64]) -> Option<Estimate> {
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Some(Estimate::exact(mean));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some(Estimate { mean, se: (var / n as f64).sqrt() })
}

/// Ratio estimator `Σ num / Σ den` over per-slot totals, with a standard
/// error that treats slots as the independent units. Slots with a zero
/// denominator are skipped.
pub(crate) fn ratio_estimate(slots: &[(f64, f64)]) -> Option<Estimate> {
    let used: Vec<(f64, f64)> = slots.iter().copied().filter(|&(_, d)| d > 0.0).collect();
    let t = used.len();
    let (num, den): (f64, f64) = used.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    if t == 0 {
        return None;
    }
    let ratio = num / den;
    if t < 2 {
        return Some(Estimate::exact(ratio));
    }
    let mean_den = den / t as f64;
    let ss = used.iter().map(|&(x, y)| (x - ratio * y).powi(2)).sum::<f64>();
    let se = (ss / (t * (t - 1)) as f64).sqrt() / mean_den;
    Some(Estimate { mean: ratio, se })
}

/// Batch-means estimate for an autocorrelated series.
pub(crate) fn batch_means(series: &[f64], batches: usize) -> Estimate {
    let n = series.len();
    let b = batches.min(n).max(1);
    if b < 2 {
        return Estimate::exact(series.iter().sum::<f64>() / n.max(1) as f64);
    }
    let size = n / b;
    let means: Vec<f64> = (0..b)
        .map(|i| {
            let end = if i == b - 1 { n } else { (i + 1) * size };
            let chunk = &series[i * size..end];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    let overall = series.iter().sum::<f64>() / n as f64;
    let se = sample_mean(&means).map_or(0.0, |e| e.se);
    Estimate { mean: overall, se }
}
