//! Monte-Carlo property harnesses and the synthetic benchmark runners.

mod bench;
mod props;

pub use bench::*;
pub use props::*;

use serde::{Deserialize, Serialize};

/// One pass/fail comparison: `passed ⇔ |statistic − target| ≤ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub target: f64,
    pub threshold: f64,
    /// How `threshold` is expressed, e.g. "standard errors" or "absolute".
    pub unit: String,
    pub passed: bool,
}

impl Check {
    pub fn within(name: &str, statistic: f64, target: f64, threshold: f64, unit: &str) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            target,
            threshold,
            unit: unit.to_string(),
            passed: (statistic - target).abs() <= threshold,
        }
    }

    /// Passes when `statistic ∈ [lo, hi]`; stored as centre and half-width.
    pub fn in_range(name: &str, statistic: f64, lo: f64, hi: f64) -> Self {
        Self::within(name, statistic, 0.5 * (lo + hi), 0.5 * (hi - lo), "absolute")
    }

    /// Passes when `statistic ≥ bound`.
    pub fn at_least(name: &str, statistic: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            target: bound,
            threshold: 0.0,
            unit: "lower bound".to_string(),
            passed: statistic >= bound,
        }
    }

    /// Passes when `statistic ≤ bound`.
    pub fn at_most(name: &str, statistic: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            target: bound,
            threshold: 0.0,
            unit: "upper bound".to_string(),
            passed: statistic <= bound,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.threshold == 0.0 && self.unit.ends_with("bound") {
            write!(f, "{} = {:.4e} ({} {:.4e})", self.name, self.statistic, self.unit, self.target)
        } else {
            write!(f, "{} = {:.4e} (target {:.4e} ± {:.4e} {})", self.name, self.statistic, self.target, self.threshold, self.unit)
        }
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut m = Moments::default();
    values.iter().for_each(|&v| m.push(v));
    (m.mean(), m.variance().sqrt())
}

/// Linear-interpolation quantile of `values` (sorted internally).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Stable 64-bit FNV-1a digest of a value's JSON form, as 16 hex digits.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    let h = bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |acc, &b| {
        (acc ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    });
    format!("{h:016x}")
}

/// `items.map(f)` on up to `threads` scoped workers; output order follows
/// `items` regardless of scheduling.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<R>>> = items.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let xs: Vec<u64> = (0..37).collect();
        let seq = par_map(&xs, 1, |x| x * x);
        assert_eq!(par_map(&xs, 4, |x| x * x), seq);
        assert!(par_map(&[] as &[u64], 3, |x| *x).is_empty());
    }

    #[test]
    fn moments_match_two_pass() {
        let xs = [1.0, 4.0, -2.0, 7.5, 3.25];
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((m.mean() - mean).abs() < 1e-14);
        assert!((m.variance() - var).abs() < 1e-12);
        assert!((m.std_error() - (var / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn slope_of_power_law() {
        let x = [64.0, 256.0, 1024.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn checks() {
        assert!(Check::within("a", 3.9, 0.0, 4.0, "se").passed);
        assert!(!Check::within("a", -4.1, 0.0, 4.0, "se").passed);
        assert!(Check::in_range("s", -0.5, -0.7, -0.3).passed);
        assert!(!Check::in_range("s", -0.2, -0.7, -0.3).passed);
        assert!(Check::at_least("b", 0.95, 0.95).passed);
        assert!(!Check::at_most("c", 0.21, 0.2).passed);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        assert_eq!(config_hash(&(1, "a")), config_hash(&(1, "a")));
        assert_ne!(config_hash(&(1, "a")), config_hash(&(2, "a")));
        assert_eq!(config_hash(&(1, "a")).len(), 16);
    }
}
