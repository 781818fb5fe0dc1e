use serde::{Deserialize, Serialize};

/// Right-continuous step CDF over a sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    /// Sorted sample values.
    pub values: Vec<f64>,
    /// `levels[i] = (i + 1) / n`, the CDF just after `values[i]`.
    pub levels: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `F(x) = #{x_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|v| *v <= x);
        k as f64 / self.values.len() as f64
    }

    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.values, p)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.levels.iter().copied())
    }
}

/// Panics on an empty sample or NaN values.
pub fn empirical_cdf(samples: &[f64]) -> EmpiricalCdf {
    assert!(!samples.is_empty(), "empirical CDF needs at least one sample");
    let mut values = samples.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    let n = values.len() as f64;
    let levels = (1..=values.len()).map(|i| i as f64 / n).collect();
    EmpiricalCdf { values, levels }
}

/// Linear-interpolation quantile (positions `p * (n - 1)`) of an unsorted sample.
pub fn quantile(samples: &[f64], p: f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    assert!(!v.is_empty());
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + frac * (v[hi] - v[lo])
}

/// Standard error of the sample median from the order-statistic interval
/// `n/2 +- sqrt(n)/2` (half its width).
pub fn median_stderr(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let half = (n as f64).sqrt() / 2.0;
    let mid = n as f64 / 2.0;
    let lo = ((mid - half).floor().max(0.0)) as usize;
    let hi = ((mid + half).ceil() as usize).min(n - 1);
    0.5 * (sorted[hi] - sorted[lo])
}

/// Kolmogorov-Smirnov distance between a sorted sample and a CDF given by
/// its values at the sample points.
pub fn ks_statistic(sorted: &[f64], cdf_at: impl Fn(usize, f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf_at(i, x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at level `alpha` (0.01 or 0.05).
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    // c(alpha) = sqrt(-ln(alpha / 2) / 2)
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
