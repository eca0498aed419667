//! Growth-rate fits on log-spaced samples.

use serde::Serialize;

use crate::compatible::CompatiblePair;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::kernel::KernelEval;
use crate::par::map_ordered;

/// Indices closer than this to `p` give an inconclusive convergence verdict.
pub const INDEX_MARGIN: f64 = 0.1;

/// `points_per_decade` log-spaced points from `rmin` to `rmax` inclusive.
pub fn log_grid(rmin: f64, rmax: f64, points_per_decade: usize) -> Vec<f64> {
    if !(rmax > rmin) || points_per_decade == 0 {
        return vec![rmin];
    }
    let decades = (rmax / rmin).log10();
    let n = (decades * points_per_decade as f64).round().max(1.0) as usize;
    (0..=n)
        .map(|i| rmin * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSamples {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl GrowthSamples {
    pub fn new(label: impl Into<String>, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Precondition(format!(
                "{} grid points for {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.first().is_some_and(|&r| !(r > 0.0)) {
            return Err(Error::Precondition(
                "grid must be positive and ascending".into(),
            ));
        }
        Ok(GrowthSamples {
            grid,
            values,
            label: label.into(),
        })
    }

    /// Values divided by `f(r)` pointwise.
    pub fn normalized(&self, f: impl Fn(f64) -> f64) -> GrowthSamples {
        GrowthSamples {
            grid: self.grid.clone(),
            values: self
                .grid
                .iter()
                .zip(&self.values)
                .map(|(&r, &v)| v / f(r))
                .collect(),
            label: self.label.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderEstimate {
    /// Least-squares slope of log value against log r on the tail.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub windowed_slopes: Vec<f64>,
    /// Largest windowed slope over the tail.
    pub limsup_slope: f64,
}

fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Slope of `log value` against `log r` over the last `tail_fraction` of the samples.
pub fn estimate_order(gs: &GrowthSamples, tail_fraction: f64) -> Result<OrderEstimate> {
    let n = gs.grid.len();
    let take = ((n as f64) * tail_fraction.clamp(0.0, 1.0)).round() as usize;
    if take < 8 {
        return Err(Error::Precondition(format!(
            "need at least 8 tail samples, have {take}"
        )));
    }
    let start = n - take;
    let mut xs = Vec::with_capacity(take);
    let mut ys = Vec::with_capacity(take);
    for i in start..n {
        let v = gs.values[i];
        if !(v > 0.0) {
            return Err(Error::Precondition(format!(
                "non-positive value {v} at r = {}",
                gs.grid[i]
            )));
        }
        xs.push(gs.grid[i].ln());
        ys.push(v.ln());
    }
    let (slope, intercept, residual) = fit(&xs, &ys);
    let w = (take / 4).max(3);
    let windowed_slopes: Vec<f64> = (0..=take - w)
        .map(|i| fit(&xs[i..i + w], &ys[i..i + w]).0)
        .collect();
    let limsup_slope = windowed_slopes
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(OrderEstimate {
        slope,
        intercept,
        residual,
        windowed_slopes,
        limsup_slope,
    })
}

/// JSON-ready fit summary with a verdict against an expected slope.
#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub label: String,
    pub slope: f64,
    pub windowed_slopes: Vec<f64>,
    pub residual: f64,
    pub verdict: String,
}

pub fn order_report(
    gs: &GrowthSamples,
    tail_fraction: f64,
    expected: Option<(f64, f64)>,
) -> Result<OrderReport> {
    let est = estimate_order(gs, tail_fraction)?;
    let verdict = match expected {
        Some((target, tol)) if (est.slope - target).abs() <= tol => "pass".to_string(),
        Some(_) => "fail".to_string(),
        None => "none".to_string(),
    };
    Ok(OrderReport {
        label: gs.label.clone(),
        slope: est.slope,
        windowed_slopes: est.windowed_slopes,
        residual: est.residual,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    /// `int_{r_start}^{r_max} r^{-(p+1)} int K dr`.
    pub partial_integral: f64,
    pub index: f64,
    pub trend: Trend,
}

/// Partial integral of `r^{-(p+1)} int K_H(t; r) dt` over a log grid from
/// `max(2 r0, 1)` to `r_max`, classified by the fitted index of `int K`.
pub fn convergence_class_test(
    model: &HamiltonianModel,
    c: f64,
    p: f64,
    r_max: f64,
    per_decade: usize,
) -> Result<ConvergenceReport> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::Precondition(format!(
            "p must lie in (0, 2), got {p}"
        )));
    }
    let pair = CompatiblePair::new(model, c)?;
    let start = (2.0 * pair.r0()).max(1.0);
    if !(r_max > start) {
        return Err(Error::Precondition(format!(
            "r_max = {r_max} must exceed {start}"
        )));
    }
    let grid = log_grid(start, r_max, per_decade);
    let ke = KernelEval::new(pair);
    let vals: Vec<f64> = map_ordered(&grid, |&r| ke.integral_k(r).map(|k| k.total))
        .into_iter()
        .collect::<Result<_>>()?;
    // trapezoid in log r of r^{-p} int K
    let mut partial = 0.0;
    for i in 1..grid.len() {
        let f = |j: usize| grid[j].powf(-p) * vals[j];
        partial += 0.5 * (f(i) + f(i - 1)) * (grid[i] / grid[i - 1]).ln();
    }
    let gs = GrowthSamples::new("integral_k", grid, vals)?;
    let index = estimate_order(&gs, 0.5)?.slope;
    let trend = if index < p - INDEX_MARGIN {
        Trend::Converging
    } else if index > p + INDEX_MARGIN {
        Trend::Diverging
    } else {
        Trend::Inconclusive
    };
    Ok(ConvergenceReport {
        partial_integral: partial,
        index,
        trend,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecadeRatio {
    pub from: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub label: String,
    pub decades: Vec<DecadeRatio>,
    pub min: f64,
    pub max: f64,
    /// `max / min` over the whole grid.
    pub spread: f64,
    pub drift: bool,
}

/// Per-decade extremes of `num / den`; `drift` is set when the overall
/// spread exceeds `factor`.
pub fn ratio_stability_report(
    num: &GrowthSamples,
    den: &GrowthSamples,
    factor: f64,
) -> Result<RatioReport> {
    if num.grid.len() != den.grid.len()
        || num
            .grid
            .iter()
            .zip(&den.grid)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(b.abs()))
    {
        return Err(Error::Precondition("ratio needs identical grids".into()));
    }
    if num.grid.is_empty() {
        return Err(Error::Precondition("empty grid".into()));
    }
    let ratios: Vec<f64> = num
        .values
        .iter()
        .zip(&den.values)
        .map(|(a, b)| a / b)
        .collect();
    let mut decades: Vec<DecadeRatio> = Vec::new();
    let base = num.grid[0];
    for (&r, &q) in num.grid.iter().zip(&ratios) {
        let from = base * 10f64.powf(((r / base).log10() + 1e-9).floor());
        match decades.last_mut() {
            Some(d) if d.from == from => {
                d.min = d.min.min(q);
                d.max = d.max.max(q);
            }
            _ => decades.push(DecadeRatio {
                from,
                min: q,
                max: q,
            }),
        }
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok(RatioReport {
        label: format!("{} / {}", num.label, den.label),
        decades,
        min,
        max,
        spread,
        drift: !(spread <= factor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_log_spaced() {
        let g = log_grid(10.0, 1e4, 10);
        assert_eq!(g.len(), 31);
        assert!((g[10] - 100.0).abs() < 1e-9 && (g[30] - 1e4).abs() < 1e-8);
    }

    #[test]
    fn power_law_slope() {
        let grid = log_grid(1e2, 1e5, 10);
        let vals: Vec<f64> = grid.iter().map(|r| 3.0 * r.powf(0.7)).collect();
        let gs = GrowthSamples::new("p", grid, vals).unwrap();
        let est = estimate_order(&gs, 1.0).unwrap();
        assert!((est.slope - 0.7).abs() < 1e-12 && est.residual < 1e-12);
        assert!((est.limsup_slope - 0.7).abs() < 1e-12);
        assert!(estimate_order(&gs, 0.1).is_err());
    }

    #[test]
    fn identical_ratio_is_one() {
        let grid = log_grid(1e2, 1e4, 5);
        let vals: Vec<f64> = grid.iter().map(|r| r.ceil()).collect();
        let gs = GrowthSamples::new("kappa", grid, vals).unwrap();
        let rep = ratio_stability_report(&gs, &gs, 1.0001).unwrap();
        assert_eq!(rep.min, 1.0);
        assert_eq!(rep.max, 1.0);
        assert!(!rep.drift);
        assert_eq!(rep.decades.len(), 3);
        let other = GrowthSamples::new("x", vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        assert!(ratio_stability_report(&gs, &other, 2.0).is_err());
    }

    #[test]
    fn identity_convergence_classes() {
        let m = HamiltonianModel::identity();
        let conv = convergence_class_test(&m, 1.0, 1.5, 1e4, 5).unwrap();
        assert_eq!(conv.trend, Trend::Converging);
        assert!((conv.index - 1.0).abs() < 0.01);
        let div = convergence_class_test(&m, 1.0, 0.5, 1e4, 5).unwrap();
        assert_eq!(div.trend, Trend::Diverging);
    }
}
