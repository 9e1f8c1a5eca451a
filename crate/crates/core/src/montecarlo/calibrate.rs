//! Fitting and checking the empirical constant pack.

use serde::{Deserialize, Serialize};

use super::sweep::{summarize, SweepRow, SweepSpec};
use super::{empirical_moment, empirical_tail, wilson, MCEstimate, Z95};
use crate::bounds::{tail_threshold, CalibrationPack, RatioWindow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    /// Sweep whose even-seed instances form the training set.
    pub sweep: SweepSpec,
    /// Orders at which the tail constants are fitted.
    pub tail_p: Vec<f64>,
    pub growth_margin: f64,
    pub decoupling_window: (f64, f64),
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            sweep: SweepSpec::default(),
            tail_p: vec![1.0, 2.0, 4.0],
            growth_margin: 2.0,
            decoupling_window: (0.125, 8.0),
        }
    }
}

fn union_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = a.iter().chain(b).copied().collect();
    g.sort_by(|x, y| x.total_cmp(y));
    g.dedup();
    g
}

/// Rounds up to two significant digits.
fn ceil2(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return x;
    }
    let e = 10f64.powf(x.log10().floor() - 1.0);
    (x / e).ceil() * e
}

/// Rounds down to two significant digits.
fn floor2(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return x;
    }
    let e = 10f64.powf(x.log10().floor() - 1.0);
    (x / e).floor() * e
}

struct TrainingCell {
    totals: Vec<(f64, f64)>,
    abs_sorted: Vec<f64>,
}

/// Fits the pack on the even-seed instances of `spec.sweep`:
///
/// * `C_up = e · max ci_high / total`, so that Chebyshev's
///   `P(|S| >= e‖S‖_p) <= e^{-p}` carries over to `C_up · total`;
/// * `c_low = ½ · min ci_low / total` (Paley–Zygmund level);
/// * `c_exp = max −ln(P̂(|S| >= c_low · total)) / p` over the tail orders,
///   with `P̂` the lower Wilson bound;
/// * `K_growth = max total(2p) / total(p)`;
/// * per (model, family) windows of `‖S‖_p / total`.
///
/// Fitted values are rounded outward to two significant digits.
pub fn calibrate_constants(spec: &CalibrationSpec) -> Result<CalibrationPack> {
    let train = spec.sweep.with_parity(0);
    let grid = union_grid(&train.p_grid, &spec.tail_p);
    let cells = train.cells();
    let results = train.exec.map(cells, |cell| -> Result<(Vec<SweepRow>, TrainingCell)> {
        let res = cell.run(&train, &grid, train.samples)?;
        let mut rows = Vec::new();
        for rep in &res.reports {
            let mc = empirical_moment(&res.samples, rep.p)?;
            rows.push(SweepRow {
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
            });
        }
        let totals = res.reports.iter().map(|r| (r.p, r.total)).collect();
        Ok((rows, TrainingCell { totals, abs_sorted: res.abs_sorted }))
    });
    let mut rows = Vec::new();
    let mut tcells = Vec::new();
    for r in results {
        let (rw, tc) = r?;
        rows.extend(rw);
        tcells.push(tc);
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("calibration sweep is empty".into()));
    }
    let sweep_rows: Vec<&SweepRow> = rows.iter().filter(|r| train.p_grid.contains(&r.p)).collect();
    let hi = sweep_rows.iter().map(|r| r.mc_ci_high / r.bound_total).fold(0.0, f64::max);
    let lo = sweep_rows.iter().map(|r| r.mc_ci_low / r.bound_total).fold(f64::INFINITY, f64::min);
    let c_up = ceil2(std::f64::consts::E * hi);
    let c_low = floor2(0.5 * lo);

    let mut c_exp: f64 = 0.0;
    let mut k_growth: f64 = 1.0;
    for tc in &tcells {
        for &p in &spec.tail_p {
            let total = tc.totals.iter().find(|(q, _)| *q == p).map(|x| x.1).unwrap_or(0.0);
            let thr = c_low * total;
            let n = tc.abs_sorted.len();
            let hits = n - tc.abs_sorted.partition_point(|&v| v < thr);
            let (wl, _) = wilson(hits, n, Z95);
            let fitted = if wl > 0.0 { -wl.ln() / p } else { f64::INFINITY };
            c_exp = c_exp.max(fitted);
        }
        for &(p, t) in &tc.totals {
            if let Some(&(_, t2)) = tc.totals.iter().find(|(q, _)| *q == 2.0 * p) {
                if train.p_grid.contains(&p) && t > 0.0 {
                    k_growth = k_growth.max(t2 / t);
                }
            }
        }
    }
    let windows = summarize(&sweep_rows.iter().map(|r| (*r).clone()).collect::<Vec<_>>())
        .into_iter()
        .map(|s| RatioWindow { model: s.model, family: s.family, min: s.min, max: s.max })
        .collect();
    Ok(CalibrationPack {
        version: 1,
        c_up,
        c_low,
        c_exp: ceil2(c_exp.max(1e-3)),
        k_growth: ceil2(k_growth),
        growth_margin: spec.growth_margin,
        ratio_min: lo,
        ratio_max: hi,
        decoupling_window: spec.decoupling_window,
        windows,
        notes: format!(
            "trained on even matrix seeds {}..{} step 2, sizes {:?}, {} instances per cell, {} samples, mc seed {}",
            train.first_seed,
            train.first_seed + 2 * train.instances.saturating_sub(1) as u64,
            train.sizes,
            train.instances,
            train.samples,
            train.mc_seed
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheckRow {
    pub model: String,
    pub family: String,
    pub n: usize,
    pub instance_seed: u64,
    pub p: f64,
    pub total: f64,
    pub threshold_up: f64,
    pub tail_up: MCEstimate,
    pub level_up: f64,
    pub pass_up: bool,
    pub threshold_low: f64,
    pub tail_low: MCEstimate,
    pub level_low: f64,
    pub pass_low: bool,
}

/// Empirical tails at the pack's thresholds on the odd-seed (held-out)
/// instances of `sweep`.
///
/// The upper check passes when the lower Wilson bound of
/// `P(|S| >= C_up·total)` is at most `e^{-p}`; the lower check passes when
/// the empirical `P(|S| >= c_low·total)` is at least `e^{-c_exp p} / 2`.
pub fn tail_check(pack: &CalibrationPack, sweep: &SweepSpec, p_list: &[f64]) -> Result<Vec<TailCheckRow>> {
    let held = sweep.with_parity(1);
    let cells = held.cells();
    let results = held.exec.map(cells, |cell| -> Result<Vec<TailCheckRow>> {
        let res = cell.run(&held, p_list, held.samples)?;
        res.reports
            .iter()
            .map(|rep| {
                let t = tail_threshold(rep, pack);
                let up = empirical_tail(&res.samples, t.threshold_up)?;
                let low = empirical_tail(&res.samples, t.threshold_low)?;
                Ok(TailCheckRow {
                    model: cell.model.label(),
                    family: cell.family.name().to_string(),
                    n: cell.n,
                    instance_seed: cell.seed,
                    p: rep.p,
                    total: rep.total,
                    threshold_up: t.threshold_up,
                    pass_up: up.ci_low <= t.upper_level,
                    tail_up: up,
                    level_up: t.upper_level,
                    threshold_low: t.threshold_low,
                    pass_low: low.value >= 0.5 * t.lower_level,
                    tail_low: low,
                    level_low: t.lower_level,
                })
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
