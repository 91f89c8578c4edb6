//! Accumulators and the [`Estimate`] record shared by all estimators.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Welford mean/variance accumulator, mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two observations).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self, method: impl Into<String>, seed: u64) -> Estimate {
        Estimate::new(self.mean, self.std_error(), self.n, method, seed)
    }
}

/// Joint moments of a pair `(a, b)`, used for ratio estimators `E a / E b`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairStats {
    n: u64,
    mean_a: f64,
    mean_b: f64,
    m_aa: f64,
    m_bb: f64,
    m_ab: f64,
}

impl PairStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, a: f64, b: f64) {
        self.n += 1;
        let n = self.n as f64;
        let da = a - self.mean_a;
        let db = b - self.mean_b;
        self.mean_a += da / n;
        self.mean_b += db / n;
        self.m_aa += da * (a - self.mean_a);
        self.m_bb += db * (b - self.mean_b);
        self.m_ab += da * (b - self.mean_b);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let na = self.n as f64;
        let w = other.n as f64 / n as f64;
        let da = other.mean_a - self.mean_a;
        let db = other.mean_b - self.mean_b;
        self.mean_a += da * w;
        self.mean_b += db * w;
        self.m_aa += other.m_aa + da * da * na * w;
        self.m_bb += other.m_bb + db * db * na * w;
        self.m_ab += other.m_ab + da * db * na * w;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn first(&self) -> RunningStats {
        RunningStats {
            n: self.n,
            mean: self.mean_a,
            m2: self.m_aa,
        }
    }

    pub fn second(&self) -> RunningStats {
        RunningStats {
            n: self.n,
            mean: self.mean_b,
            m2: self.m_bb,
        }
    }

    /// `mean(a) / mean(b)`.
    pub fn ratio(&self) -> f64 {
        self.mean_a / self.mean_b
    }

    /// Delta-method standard error of [`ratio`](Self::ratio).
    pub fn ratio_std_error(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let r = self.ratio();
        let df = (self.n - 1) as f64;
        let var = (self.m_aa - 2.0 * r * self.m_ab + r * r * self.m_bb) / df;
        (var.max(0.0) / self.n as f64).sqrt() / self.mean_b.abs()
    }

    /// `1 - mean(a) / mean(b)` shares the ratio's standard error.
    pub fn ratio_estimate(&self, method: impl Into<String>, seed: u64) -> Estimate {
        Estimate::new(self.ratio(), self.ratio_std_error(), self.n, method, seed)
    }
}

/// Universal estimator result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub method: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_note: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub divergence_flag: bool,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64, n_samples: u64, method: impl Into<String>, seed: u64) -> Self {
        Self {
            value,
            std_error,
            n_samples,
            method: method.into(),
            seed,
            bias_note: None,
            divergence_flag: false,
        }
    }

    /// A deterministic value with zero standard error.
    pub fn exact(value: f64, n_samples: u64, method: impl Into<String>, seed: u64) -> Self {
        Self::new(value, 0.0, n_samples, method, seed)
    }

    pub fn with_bias_note(mut self, note: impl Into<String>) -> Self {
        self.bias_note = Some(note.into());
        self
    }

    pub fn with_divergence(mut self, flag: bool) -> Self {
        self.divergence_flag = flag;
        self
    }

    /// `|value - target| / std_error`; infinite when a nonzero gap has zero SE.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.value - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }

    /// Whether `target` lies within `k` standard errors of the value.
    pub fn within(&self, target: f64, k: f64) -> bool {
        self.z_score(target) <= k
    }

    /// Whether two independent estimates agree within `k` joint standard
    /// errors plus an absolute allowance.
    pub fn agrees_with(&self, other: &Estimate, k: f64, allowance: f64) -> bool {
        let se = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        (self.value - other.value).abs() <= k * se + allowance
    }
}

/// Median-of-means over `blocks` contiguous blocks. Returns the median of
/// block means and `sd(block means) / sqrt(blocks)` as its spread.
pub fn median_of_means(values: &[f64], blocks: usize) -> (f64, f64) {
    let blocks = blocks.clamp(1, values.len().max(1));
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let size = values.len() / blocks;
    let mut means: Vec<f64> = (0..blocks)
        .map(|b| {
            let end = if b + 1 == blocks { values.len() } else { (b + 1) * size };
            let chunk = &values[b * size..end];
            chunk.iter().copied().collect::<CompensatedSum>().value() / chunk.len() as f64
        })
        .collect();
    let mut sd = RunningStats::new();
    for &m in &means {
        sd.push(m);
    }
    means.sort_by(f64::total_cmp);
    let median = if blocks % 2 == 1 {
        means[blocks / 2]
    } else {
        0.5 * (means[blocks / 2 - 1] + means[blocks / 2])
    };
    (median, sd.variance().sqrt() / (blocks as f64).sqrt())
}
