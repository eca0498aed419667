//! The greedy partition count `kappa_H(r)` and the tools around it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::mat::SymMat2;
use crate::par::map_ordered;
use crate::pieces::Pieces;

/// Relative slack on `c/r^2` when the last step is tested.
pub const EPS_LAST: f64 = 1e-10;
/// Relative slack used by [`bracket_kappa`].
pub const EPS_BRACKET: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct PartitionResult {
    pub r: f64,
    pub c: f64,
    /// `a = sigma_0 < ... < sigma_kappa = b`.
    pub sigma: Vec<f64>,
    pub kappa: usize,
}

fn check_model(model: &HamiltonianModel) -> Result<()> {
    if !model.is_limit_circle() {
        return Err(Error::LimitPoint);
    }
    if !model.is_definite() {
        return Err(Error::Indefinite {
            det: model.pieces().total().det(),
        });
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Precondition(format!("c must be positive, got {c}")));
    }
    Ok(())
}

/// Position error a chain of `k` steps stored in f64 can accumulate.
fn drift(p: &Pieces, k: usize) -> f64 {
    16.0 * k as f64 * f64::EPSILON * p.a().abs().max(p.b().abs()).max(p.b() - p.a())
}

/// Greedy partition: `sigma_j` is the root of `det Omega(sigma_{j-1}, u) = c/r^2`
/// until the rest of the interval carries less than `c/r^2`.
pub fn kappa(model: &HamiltonianModel, c: f64, r: f64) -> Result<PartitionResult> {
    check_model(model)?;
    check_c(c)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Precondition(format!("r must be positive, got {r}")));
    }
    let p = model.pieces();
    let q = c / (r * r);
    let b = p.b();
    let mut sigma = vec![p.a()];
    let mut hint = None;
    loop {
        let s = *sigma.last().unwrap();
        if p.det_omega(s, b) <= q * (1.0 + EPS_LAST) {
            sigma.push(b);
            break;
        }
        match p.forward_root(s, q, hint) {
            // a sliver within rounding drift of b belongs to the last step
            Some(root) if root.at < b - drift(p, sigma.len()) && root.at > s => {
                hint = Some(root.piece);
                sigma.push(root.at);
            }
            _ => {
                sigma.push(b);
                break;
            }
        }
    }
    let kappa = sigma.len() - 1;
    Ok(PartitionResult { r, c, sigma, kappa })
}

/// `kappa` over a grid of `r`, in input order.
pub fn kappa_grid(model: &HamiltonianModel, c: f64, rs: &[f64]) -> Result<Vec<usize>> {
    map_ordered(rs, |&r| kappa(model, c, r).map(|p| p.kappa))
        .into_iter()
        .collect()
}

/// `floor(r sqrt(det Omega(a, b)) / sqrt(c)) + 1`.
pub fn kappa_cap(model: &HamiltonianModel, c: f64, r: f64) -> usize {
    (r * model.pieces().total().sqrt_det() / c.sqrt()).floor() as usize + 1
}

/// Explicit lower and upper bounds for `int K_H(t; r) dt` in terms of `kappa`:
/// `kappa log 2 - [log r + log(2 tr Omega / sqrt c)]` and
/// `2e kappa [log r + log(tr Omega / (2 sqrt c)) + 1]`.
pub fn theorem3_bounds(model: &HamiltonianModel, pr: &PartitionResult) -> (f64, f64) {
    let tr = model.pieces().total().trace();
    let k = pr.kappa as f64;
    let sc = pr.c.sqrt();
    let lower = k * std::f64::consts::LN_2 - (pr.r.ln() + (2.0 * tr / sc).ln());
    let upper = 2.0 * std::f64::consts::E * k * (pr.r.ln() + (tr / (2.0 * sc)).ln() + 1.0);
    (lower, upper)
}

/// One-sided bounds on `kappa` implied by a partition `points` of `[a, b]`.
///
/// All gaps at most `c/r^2` gives `kappa <= k`. All gaps but the last at
/// least `c/r^2` gives `kappa >= k`, and `kappa >= k + 1` when the last gap
/// exceeds `c/r^2` as well. Directions not implied are reported as 0. Gaps
/// within `EPS_BRACKET` or the rounding drift of the points count as ties.
pub fn bracket_kappa(
    model: &HamiltonianModel,
    c: f64,
    r: f64,
    points: &[f64],
) -> Result<(usize, usize)> {
    check_model(model)?;
    check_c(c)?;
    let p = model.pieces();
    let tol = 1e-12 * (p.b() - p.a()).max(1.0);
    if points.len() < 2
        || (points[0] - p.a()).abs() > tol
        || (points[points.len() - 1] - p.b()).abs() > tol
        || points.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::Precondition("points must ascend from a to b".into()));
    }
    let q = c / (r * r);
    let k = points.len() - 1;
    let dr = drift(p, k);
    // a gap is a tie when moving its right end by the rounding drift crosses q
    let at_most = |s: f64, t: f64| {
        p.det_omega(s, t) <= q * (1.0 + EPS_BRACKET)
            || (t - dr > s && p.det_omega(s, t - dr) <= q * (1.0 + EPS_BRACKET))
    };
    let at_least = |s: f64, t: f64| p.det_omega(s, (t + dr).min(p.b())) >= q * (1.0 - EPS_BRACKET);
    let gaps: Vec<(f64, f64)> = points.windows(2).map(|w| (w[0], w[1])).collect();
    let hi = if gaps.iter().all(|&(s, t)| at_most(s, t)) {
        k
    } else {
        0
    };
    let lo = if gaps[..k - 1].iter().all(|&(s, t)| at_least(s, t)) {
        let (s, t) = gaps[k - 1];
        if at_most(s, t) {
            k
        } else {
            k + 1
        }
    } else {
        0
    };
    Ok((lo, hi))
}

/// `kappa(n r) <= n kappa(r)`.
pub fn kappa_subadditivity_check(
    model: &HamiltonianModel,
    c: f64,
    r: f64,
    n: usize,
) -> Result<bool> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let big = kappa(model, c, n as f64 * r)?.kappa;
    let small = kappa(model, c, r)?.kappa;
    Ok(big <= n * small)
}

/// Compress the model onto `delta`, a finite union of intervals inside
/// `[a, b]`: the result lives on `[0, |delta|]` and runs through the
/// pieces of `delta` in order.
pub fn cut_out(model: &HamiltonianModel, delta: &[(f64, f64)]) -> Result<HamiltonianModel> {
    if !model.is_limit_circle() {
        return Err(Error::LimitPoint);
    }
    let p = model.pieces();
    let mut iv: Vec<(f64, f64)> = delta
        .iter()
        .map(|&(x, y)| (x.max(p.a()), y.min(p.b())))
        .filter(|&(x, y)| y > x)
        .collect();
    iv.sort_by(|u, v| u.0.total_cmp(&v.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (x, y) in iv {
        match merged.last_mut() {
            Some(last) if x <= last.1 => last.1 = last.1.max(y),
            _ => merged.push((x, y)),
        }
    }
    if merged.is_empty() {
        return Err(Error::Model("cut-out set has measure zero".into()));
    }
    let nodes = p.nodes();
    let vals = p.values();
    let mut out_nodes = vec![0.0];
    let mut out_vals: Vec<SymMat2> = Vec::new();
    let mut pos = 0.0;
    for (x, y) in merged {
        let mut k = p.piece_of(x);
        let mut from = x;
        while from < y {
            let to = nodes[k + 1].min(y);
            if to > from {
                pos += to - from;
                out_nodes.push(pos);
                out_vals.push(vals[k]);
            }
            from = to;
            k += 1;
            if k >= vals.len() {
                break;
            }
        }
    }
    HamiltonianModel::piecewise(out_nodes, out_vals)
}
