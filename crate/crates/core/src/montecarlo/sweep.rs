//! Comparability sweeps: deterministic bound versus Monte-Carlo moment over
//! grids of models, matrix families, sizes and moment orders.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{empirical_moment, sample_chaos_with, Estimator};
use crate::bounds::{decoupled_moment_bound, undecoupled_moment_bound, BoundReport};
use crate::coeffs::{CoeffMatrix, Family, GeneratorSpec};
use crate::distributions::DistributionModel;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::rng::StreamKey;

/// Models used by the default sweeps: Gaussian, Rademacher, symmetric
/// exponential and a truncated Weibull with a non-log-concave tail.
pub fn sweep_models() -> Vec<DistributionModel> {
    vec![
        DistributionModel::gaussian(),
        DistributionModel::rademacher(),
        DistributionModel::weibull(1.0).expect("valid shape"),
        DistributionModel::trunc_weibull(0.5, 4.0).expect("valid shape"),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub models: Vec<DistributionModel>,
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    /// Instances per (family, size); instance `k` uses matrix seed
    /// `first_seed + k·seed_stride`.
    pub instances: usize,
    pub first_seed: u64,
    pub seed_stride: u64,
    pub p_grid: Vec<f64>,
    pub samples: usize,
    /// Seed of the Monte-Carlo streams.
    pub mc_seed: u64,
    /// Decoupled chaos `Σ a_ij X_i Y_j` with `Y` an independent copy, or
    /// the undecoupled `Σ a_ij X_i X_j` on symmetric zero-diagonal draws.
    pub decoupled: bool,
    pub exec: Exec,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            models: sweep_models(),
            families: Family::ALL.to_vec(),
            sizes: vec![4, 16, 32],
            instances: 2,
            first_seed: 0,
            seed_stride: 1,
            p_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            samples: 100_000,
            mc_seed: 2024,
            decoupled: true,
            exec: Exec::default(),
        }
    }
}

impl SweepSpec {
    /// Same sweep restricted to the instances whose matrix seed has the given
    /// parity (0 = training, 1 = held out).
    pub fn with_parity(&self, parity: u64) -> Self {
        Self { first_seed: 2 * (self.first_seed / 2) + parity, seed_stride: 2, ..self.clone() }
    }

    pub(crate) fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for model in &self.models {
            for &family in &self.families {
                for &n in &self.sizes {
                    for k in 0..self.instances {
                        let seed = self.first_seed + k as u64 * self.seed_stride;
                        out.push(Cell { id: out.len() as u32, model: model.clone(), family, n, seed });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Cell {
    pub id: u32,
    pub model: DistributionModel,
    pub family: Family,
    pub n: usize,
    pub seed: u64,
}

pub(crate) struct CellResult {
    pub reports: Vec<BoundReport>,
    /// `|S|` samples, sorted increasingly.
    pub abs_sorted: Vec<f64>,
    pub samples: Vec<f64>,
}

impl Cell {
    pub fn matrix(&self, decoupled: bool) -> Result<CoeffMatrix> {
        let spec = if decoupled {
            GeneratorSpec::new(self.family, self.n, self.seed)
        } else {
            GeneratorSpec::chaos(self.family, self.n, self.seed)
        };
        spec.generate()
    }

    pub fn run(&self, spec: &SweepSpec, p_grid: &[f64], samples: usize) -> Result<CellResult> {
        let a = self.matrix(spec.decoupled)?;
        let reports = p_grid
            .iter()
            .map(|&p| {
                if spec.decoupled {
                    decoupled_moment_bound(&a, &self.model, &self.model, p)
                } else {
                    undecoupled_moment_bound(&a, &self.model, p)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let my = if spec.decoupled { Some(&self.model) } else { None };
        let key = StreamKey::new(spec.mc_seed, self.id, 0);
        let samples = sample_chaos_with(&a, &self.model, my, key, samples, Exec::Sequential)?;
        let mut abs_sorted: Vec<f64> = samples.iter().map(|s| s.abs()).collect();
        abs_sorted.sort_by(|a, b| a.total_cmp(b));
        Ok(CellResult { reports, abs_sorted, samples })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: String,
    pub family: String,
    pub n: usize,
    pub instance_seed: u64,
    pub p: f64,
    pub bound_total: f64,
    pub mc_value: f64,
    pub mc_ci_low: f64,
    pub mc_ci_high: f64,
    pub ratio: f64,
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model: String,
    pub family: String,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub all_finite_positive: bool,
}

/// `MC ‖S‖_p / total` for every cell of the sweep, with per
/// (model, family) summaries.
pub fn ratio_sweep(spec: &SweepSpec) -> Result<(Vec<SweepRow>, Vec<SweepSummary>)> {
    let cells = spec.cells();
    let results = spec.exec.map(cells, |cell| -> Result<Vec<SweepRow>> {
        let res = cell.run(spec, &spec.p_grid, spec.samples)?;
        res.reports
            .iter()
            .map(|rep| {
                let mc = empirical_moment(&res.samples, rep.p)?;
                Ok(SweepRow {
                    model: cell.model.label(),
                    family: cell.family.name().to_string(),
                    n: cell.n,
                    instance_seed: cell.seed,
                    p: rep.p,
                    bound_total: rep.total,
                    mc_value: mc.value,
                    mc_ci_low: mc.ci_low,
                    mc_ci_high: mc.ci_high,
                    ratio: mc.value / rep.total,
                    estimator: mc.estimator,
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let summary = summarize(&rows);
    Ok((rows, summary))
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.model.clone(), r.family.clone())).or_default().push(r.ratio);
    }
    groups
        .into_iter()
        .map(|((model, family), ratios)| {
            let ok = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            SweepSummary { model, family, min, max, spread: max / min, all_finite_positive: ok }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub model: String,
    pub family: String,
    pub n: usize,
    pub instance_seed: u64,
    pub p: f64,
    /// `total(2p) / total(p)`
    pub bound_growth: f64,
    /// `MC ‖S‖_{2p} / MC ‖S‖_p`
    pub mc_growth: f64,
}

/// Moment-growth ratios for every `p` whose double is also in the sweep.
pub fn growth_check(rows: &[SweepRow]) -> Vec<GrowthRow> {
    let mut out = Vec::new();
    for r in rows {
        let twice = rows.iter().find(|s| {
            s.model == r.model
                && s.family == r.family
                && s.n == r.n
                && s.instance_seed == r.instance_seed
                && s.p == 2.0 * r.p
        });
        if let Some(s) = twice {
            out.push(GrowthRow {
                model: r.model.clone(),
                family: r.family.clone(),
                n: r.n,
                instance_seed: r.instance_seed,
                p: r.p,
                bound_growth: s.bound_total / r.bound_total,
                mc_growth: s.mc_value / r.mc_value,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingRow {
    pub p: f64,
    pub undecoupled: f64,
    pub decoupled: f64,
    pub ratio: f64,
}

/// Monte-Carlo moments of `Σ a_ij X_i X_j` against `Σ a_ij X_i Y_j` on the
/// same matrix. The zero matrix gives an empty table.
pub fn decoupling_compare(
    a: &CoeffMatrix,
    model: &DistributionModel,
    p_grid: &[f64],
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<DecouplingRow>> {
    if !a.is_symmetric() || !a.is_zero_diag() {
        return Err(Error::Flags("decoupling comparison needs a symmetric zero-diagonal matrix".into()));
    }
    if a.is_zero() {
        return Ok(Vec::new());
    }
    let und = sample_chaos_with(a, model, None, StreamKey::new(seed, 0, 0), samples, exec)?;
    let dec = sample_chaos_with(a, model, Some(model), StreamKey::new(seed, 1, 0), samples, exec)?;
    p_grid
        .iter()
        .map(|&p| {
            let u = empirical_moment(&und, p)?.value;
            let d = empirical_moment(&dec, p)?.value;
            Ok(DecouplingRow { p, undecoupled: u, decoupled: d, ratio: u / d })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_split_is_disjoint() {
        let s = SweepSpec { instances: 3, ..SweepSpec::default() };
        let train: Vec<u64> = s.with_parity(0).cells().iter().map(|c| c.seed).collect();
        let held: Vec<u64> = s.with_parity(1).cells().iter().map(|c| c.seed).collect();
        assert!(train.iter().all(|x| x % 2 == 0));
        assert!(held.iter().all(|x| x % 2 == 1));
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let spec = SweepSpec {
            models: vec![DistributionModel::rademacher()],
            families: vec![Family::Diagonal],
            sizes: vec![3],
            instances: 1,
            p_grid: vec![1.0, 2.0],
            samples: 2000,
            ..SweepSpec::default()
        };
        let (a, sa) = ratio_sweep(&spec).unwrap();
        let (b, _) = ratio_sweep(&SweepSpec { exec: Exec::Sequential, ..spec }).unwrap();
        assert_eq!(a, b);
        assert!(sa[0].all_finite_positive);
    }

    #[test]
    fn two_point_decoupling() {
        let a = CoeffMatrix::chaos(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let rows =
            decoupling_compare(&a, &DistributionModel::rademacher(), &[2.0], 20_000, 5, Exec::default()).unwrap();
        assert!((rows[0].undecoupled - 2.0).abs() < 1e-12);
        assert!((rows[0].ratio - 2f64.sqrt()).abs() < 0.05);
        let z = CoeffMatrix::chaos(vec![vec![0.0; 2]; 2]).unwrap();
        let rows = decoupling_compare(&z, &DistributionModel::rademacher(), &[2.0], 10, 1, Exec::default()).unwrap();
        assert!(rows.is_empty());
    }
}
