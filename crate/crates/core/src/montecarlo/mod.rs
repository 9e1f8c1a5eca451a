//! Sampling of chaoses and empirical moment and tail estimates.

mod calibrate;
mod sweep;

pub use calibrate::{calibrate_constants, tail_check, CalibrationSpec, TailCheckRow};
pub use sweep::{
    decoupling_compare, growth_check, ratio_sweep, summarize, sweep_models, DecouplingRow, GrowthRow, SweepRow,
    SweepSpec, SweepSummary,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoeffMatrix;
use crate::distributions::DistributionModel;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::rng::{self, StreamKey};
use crate::special::log_sum_exp;

/// Samples per independently keyed chunk.
pub const CHUNK: usize = 8192;
/// Largest moment order accepted by the estimators.
pub const MAX_MC_P: f64 = 64.0;
pub const MOM_BLOCKS: usize = 16;
pub const BOOTSTRAP_BLOCKS: usize = 64;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_SEED: u64 = 0xb007_5743;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    PlainMean,
    MedianOfMeans,
    BootstrapTail,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::PlainMean => "plain_mean",
            Estimator::MedianOfMeans => "median_of_means",
            Estimator::BootstrapTail => "bootstrap_tail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
    pub estimator: Estimator,
}

/// `count` realizations of `Σ a_ij X_i Y_j` (`my = Some`) or of
/// `Σ a_ij X_i X_j` (`my = None`, needs a symmetric zero-diagonal matrix).
///
/// Chunk `c` of the output is drawn from stream
/// `(seed, instance, replicate·2¹⁶ + c)`, so the result does not depend on
/// how chunks are scheduled.
pub fn sample_chaos(
    a: &CoeffMatrix,
    mx: &DistributionModel,
    my: Option<&DistributionModel>,
    key: StreamKey,
    count: usize,
) -> Result<Vec<f64>> {
    sample_chaos_with(a, mx, my, key, count, Exec::default())
}

pub fn sample_chaos_with(
    a: &CoeffMatrix,
    mx: &DistributionModel,
    my: Option<&DistributionModel>,
    key: StreamKey,
    count: usize,
    exec: Exec,
) -> Result<Vec<f64>> {
    if my.is_none() && (!a.is_symmetric() || !a.is_zero_diag()) {
        return Err(Error::Flags("undecoupled sampling needs a matrix flagged symmetric and zero-diagonal".into()));
    }
    let chunks = count.div_ceil(CHUNK);
    if chunks > 1 << 16 {
        return Err(Error::SizeCap(format!("{count} samples exceed the stream layout")));
    }
    let parts = exec.map_range(chunks, |c| {
        let len = CHUNK.min(count - c * CHUNK);
        let mut r = rng::stream(key.seed, key.instance, (key.replicate << 16) | c as u32);
        sample_block(a, mx, my, &mut r, len)
    });
    Ok(parts.concat())
}

fn sample_block<R: Rng>(
    a: &CoeffMatrix,
    mx: &DistributionModel,
    my: Option<&DistributionModel>,
    r: &mut R,
    len: usize,
) -> Vec<f64> {
    let (n, m) = (a.rows(), a.cols());
    let data = a.as_slice();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; m];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        mx.sample_into(r, &mut x);
        let yv: &[f64] = match my {
            Some(model) => {
                model.sample_into(r, &mut y);
                &y
            }
            None => &x,
        };
        let mut s = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            let row = &data[i * m..(i + 1) * m];
            let mut acc = 0.0;
            for j in 0..m {
                acc += row[j] * yv[j];
            }
            s += x[i] * acc;
        }
        out.push(s);
    }
    out
}

fn check_moment_args(samples: &[f64], p: f64) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if !(1.0..=MAX_MC_P).contains(&p) {
        return Err(Error::InvalidParameter(format!("Monte-Carlo moment order must be in [1, {MAX_MC_P}], got {p}")));
    }
    Ok(())
}

/// `ln Σ |s|^p` over a slice.
fn log_power_sum(samples: &[f64], p: f64) -> f64 {
    let logs: Vec<f64> = samples.iter().map(|s| p * s.abs().ln()).collect();
    log_sum_exp(&logs)
}

/// `(mean |s|^p)^{1/p}`: plain mean for `p <= 8`, median of means above.
pub fn empirical_moment(samples: &[f64], p: f64) -> Result<MCEstimate> {
    let est = if p > 8.0 { Estimator::MedianOfMeans } else { Estimator::PlainMean };
    empirical_moment_with(samples, p, est)
}

/// Empirical `L_p` norm in the log domain with a block-bootstrap 95% interval
/// (64 contiguous blocks, 1000 resamples, fixed resampling seed).
pub fn empirical_moment_with(samples: &[f64], p: f64, estimator: Estimator) -> Result<MCEstimate> {
    check_moment_args(samples, p)?;
    let n = samples.len();
    let value = match estimator {
        Estimator::PlainMean | Estimator::BootstrapTail => ((log_power_sum(samples, p) - (n as f64).ln()) / p).exp(),
        Estimator::MedianOfMeans => {
            let blocks = MOM_BLOCKS.min(n);
            let mut means: Vec<f64> = block_ranges(n, blocks)
                .map(|(lo, hi)| log_power_sum(&samples[lo..hi], p) - ((hi - lo) as f64).ln())
                .collect();
            means.sort_by(|a, b| a.total_cmp(b));
            let k = means.len();
            let med = if k % 2 == 1 { means[k / 2] } else { 0.5 * (means[k / 2 - 1] + means[k / 2]) };
            (med / p).exp()
        }
    };
    let (lo, hi) = bootstrap_ci(samples, p);
    Ok(MCEstimate { value, ci_low: lo.min(value), ci_high: hi.max(value), samples: n, estimator })
}

fn block_ranges(n: usize, blocks: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..blocks).map(move |b| (b * n / blocks, (b + 1) * n / blocks))
}

fn bootstrap_ci(samples: &[f64], p: f64) -> (f64, f64) {
    let n = samples.len();
    let blocks = BOOTSTRAP_BLOCKS.min(n);
    let stats: Vec<(f64, usize)> =
        block_ranges(n, blocks).map(|(lo, hi)| (log_power_sum(&samples[lo..hi], p), hi - lo)).collect();
    let mut r = rng::stream(BOOTSTRAP_SEED, 0, 0);
    let mut values = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut picked = vec![0.0; blocks];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut count = 0usize;
        for slot in picked.iter_mut() {
            let (ls, c) = stats[r.random_range(0..blocks)];
            *slot = ls;
            count += c;
        }
        values.push(((log_sum_exp(&picked) - (count as f64).ln()) / p).exp());
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let q = |f: f64| values[((f * (values.len() - 1) as f64).round() as usize).min(values.len() - 1)];
    (q(0.025), q(0.975))
}

/// Fraction of `|s| >= threshold` with a 95% Wilson interval.
pub fn empirical_tail(samples: &[f64], threshold: f64) -> Result<MCEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be nonnegative, got {threshold}")));
    }
    let n = samples.len();
    let hits = samples.iter().filter(|s| s.abs() >= threshold).count();
    let (lo, hi) = wilson(hits, n, Z95);
    let value = hits as f64 / n as f64;
    Ok(MCEstimate {
        value,
        ci_low: lo.min(value),
        ci_high: hi.max(value),
        samples: n,
        estimator: Estimator::BootstrapTail,
    })
}

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson(hits: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let ph = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (ph + z2 / (2.0 * nf)) / denom;
    let half = z * (ph * (1.0 - ph) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> CoeffMatrix {
        CoeffMatrix::chaos(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn rademacher_supports() {
        let rad = DistributionModel::rademacher();
        let one = CoeffMatrix::dense(vec![vec![1.0]]).unwrap();
        let s = sample_chaos(&one, &rad, Some(&rad), StreamKey::new(1, 0, 0), 1000).unwrap();
        assert!(s.iter().all(|v| v.abs() == 1.0));
        let s = sample_chaos(&two_point(), &rad, None, StreamKey::new(1, 0, 0), 1000).unwrap();
        assert!(s.iter().all(|v| v.abs() == 2.0));
    }

    #[test]
    fn undecoupled_needs_flags() {
        let rad = DistributionModel::rademacher();
        let a = CoeffMatrix::dense(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(sample_chaos(&a, &rad, None, StreamKey::new(1, 0, 0), 10).is_err());
    }

    #[test]
    fn parallel_matches_sequential() {
        let g = DistributionModel::gaussian();
        let a = CoeffMatrix::dense(vec![vec![1.0, 2.0], vec![0.5, -1.0]]).unwrap();
        let key = StreamKey::new(9, 3, 1);
        let s1 = sample_chaos_with(&a, &g, Some(&g), key, 3 * CHUNK + 17, Exec::Sequential).unwrap();
        let s2 = sample_chaos_with(&a, &g, Some(&g), key, 3 * CHUNK + 17, Exec::Parallel).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn constant_samples() {
        let s = vec![2.0; 1000];
        for p in [1.0, 3.0, 16.0] {
            let e = empirical_moment(&s, p).unwrap();
            assert!((e.value - 2.0).abs() < 1e-12);
            assert!(e.ci_low <= e.value && e.value <= e.ci_high);
        }
    }

    #[test]
    fn tail_examples() {
        let s = vec![2.0, -2.0, 2.0, -2.0];
        assert_eq!(empirical_tail(&s, 1.5).unwrap().value, 1.0);
        let t = empirical_tail(&s, 3.0).unwrap();
        assert_eq!(t.value, 0.0);
        assert!(t.ci_high > 0.0 && t.ci_low == 0.0);
    }

    #[test]
    fn wilson_contains_phat() {
        let (lo, hi) = wilson(30, 100, Z95);
        assert!(lo < 0.3 && 0.3 < hi);
    }
}
