//! The kernel `K_H(t; r)` and its integral over `[a, b)`.
//!
//! Left of `t_hat(r)` the kernel is `omega2(a,t) h1(t) / (c/r^2 + omega3(a,t)^2)`,
//! right of it `h1(t) / omega1(s_hat(t; r), t)`. The right branch is
//! integrated on segments where both `t` and `s_hat(t; r)` stay inside one
//! piece, so the integrand is analytic on every segment.

use serde::Serialize;

use crate::compatible::CompatiblePair;
use crate::error::{Error, Result};
use crate::quad;
use crate::spectrum::SpectrumResult;

pub const EPS_K: f64 = 1e-8;
pub const ABS_K: f64 = 1e-12;
/// Offset ratio above which a right-branch segment is integrated in log scale.
const LOG_SPAN: f64 = 64.0;

#[derive(Clone, Copy, Debug)]
pub struct KernelEval<'a> {
    pair: CompatiblePair<'a>,
    tol: f64,
    abs: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelIntegral {
    pub r: f64,
    pub total: f64,
    /// Integral over `[a, t_hat)`.
    pub left: f64,
    /// Integral over `[t_hat, b)`.
    pub right: f64,
    pub t_hat: f64,
    pub error: f64,
}

impl<'a> KernelEval<'a> {
    pub fn new(pair: CompatiblePair<'a>) -> Self {
        KernelEval {
            pair,
            tol: EPS_K,
            abs: ABS_K,
        }
    }

    pub fn with_tolerance(mut self, rel: f64, abs: f64) -> Self {
        self.tol = rel;
        self.abs = abs;
        self
    }

    pub fn pair(&self) -> &CompatiblePair<'a> {
        &self.pair
    }

    pub fn kernel_at(&self, t: f64, r: f64) -> Result<f64> {
        let p = self.pair.model().pieces();
        if !(t >= p.a() && t < p.b()) {
            return Err(Error::Domain {
                t,
                a: p.a(),
                b: p.b(),
            });
        }
        let t_hat = self.pair.t_hat(r)?;
        let h1 = p.value_at(t).a11;
        if t < t_hat {
            let w = p.omega_from_a(t);
            Ok(w.a22 * h1 / (self.pair.level(r) + w.a12 * w.a12))
        } else {
            let om = match p.backward_root_with_omega(t, self.pair.level(r), None) {
                Some((_, om)) => om,
                None => p.omega_from_a(t),
            };
            Ok(h1 / om.a11)
        }
    }

    /// Explicit bound `2 log r + 1 - log 4c + 2 log tr Omega(a, t_hat(r))` on the
    /// left part of the integral.
    pub fn left_part_bound(&self, r: f64) -> Result<f64> {
        let t_hat = self.pair.t_hat(r)?;
        let tr = self.pair.model().pieces().omega_from_a(t_hat).trace();
        let c = self.pair.c();
        Ok(2.0 * r.ln() + 1.0 - (4.0 * c).ln() + 2.0 * tr.ln())
    }

    pub fn integral_k(&self, r: f64) -> Result<KernelIntegral> {
        let p = self.pair.model().pieces();
        let q = self.pair.level(r);
        let root = self.pair.t_hat_root(r)?;
        let t_hat = root.at;
        let nodes = p.nodes();
        let vals = p.values();
        let span = p.b() - p.a();
        let mut err = 0.0;
        let mut ok = true;

        let mut left = 0.0;
        for k in 0..=root.piece {
            let x0 = nodes[k];
            let x1 = nodes[k + 1].min(t_hat);
            let h1 = vals[k].a11;
            if !(x1 > x0) || h1 <= 0.0 {
                continue;
            }
            let base = p.prefix(k);
            let v = vals[k];
            let res = quad::integrate(
                |t| {
                    let u = t - x0;
                    let w2 = base.a22 + u * v.a22;
                    let w3 = base.a12 + u * v.a12;
                    [w2 * h1 / (q + w3 * w3)]
                },
                x0,
                x1,
                self.tol,
                self.abs * (x1 - x0) / span,
                40,
            );
            ok &= res.converged;
            left += res.value[0];
            err += res.error;
        }

        // t where s_hat(t; r) crosses a breakpoint, as (at, piece, offset)
        let mut events = Vec::new();
        let mut hint = None;
        for &x in nodes.iter() {
            match p.forward_root(x, q, hint) {
                Some(f) => {
                    hint = Some(f.piece);
                    events.push((f.at, f.piece, f.offset));
                }
                None => break,
            }
        }
        let first_node = nodes.partition_point(|&x| x <= t_hat);
        // ordered by (piece, offset) since an event can round onto a node
        let before = |x: &(f64, usize, f64), y: &(f64, usize, f64)| (x.1, x.2) < (y.1, y.2);
        let mut cuts = Vec::with_capacity(events.len() + nodes.len() - first_node + 1);
        cuts.push((t_hat, root.piece, root.offset));
        let (mut i, mut j) = (0, first_node);
        while i < events.len() || j < nodes.len() {
            let node = (nodes.get(j).copied().unwrap_or(f64::INFINITY), j, 0.0);
            let next = if j >= nodes.len() || (i < events.len() && before(&events[i], &node)) {
                i += 1;
                events[i - 1]
            } else {
                j += 1;
                node
            };
            if before(cuts.last().unwrap(), &next) {
                cuts.push(next);
            }
        }

        // integrate in the offset from the piece start: events sit a distance
        // of order q past a node, far below the f64 spacing at t
        let mut right = 0.0;
        let mut s_hint = None;
        for w in cuts.windows(2) {
            let (u, v) = (w[0], w[1]);
            let kt = u.1.min(vals.len() - 1);
            let h1 = vals[kt].a11;
            if h1 <= 0.0 {
                continue;
            }
            let local = |c: (f64, usize, f64)| if c.1 == kt { c.2 } else { c.0 - nodes[kt] };
            let (lo, hi) = (local(u), local(v));
            if !(hi > lo) {
                continue;
            }
            if let Some((r0, _)) = p.backward_root_local(kt, 0.5 * (lo + hi), q, s_hint) {
                s_hint = Some(r0.piece);
            }
            // just right of t_hat rounding can put det Omega(a, t) below q; s_hat = a there
            let f = |d: f64| -> f64 {
                let om = match p.backward_root_local(kt, d, q, s_hint) {
                    Some((_, om)) => om,
                    None => p.prefix(kt) + vals[kt].scale(d),
                };
                h1 / om.a11
            };
            let tol_abs = self.abs * (v.0 - u.0) / span;
            let res = if lo > 0.0 && hi > LOG_SPAN * lo {
                // 1/(offset) behaviour at an event: substitute offset = e^y
                quad::integrate(
                    |y| {
                        let d = y.exp();
                        [d * f(d)]
                    },
                    lo.ln(),
                    hi.ln(),
                    self.tol,
                    tol_abs,
                    40,
                )
            } else {
                quad::integrate(|d| [f(d)], lo, hi, self.tol, tol_abs, 40)
            };
            ok &= res.converged;
            right += res.value[0];
            err += res.error;
        }
        let total = left + right;
        if !ok && err > self.tol * total.abs() + self.abs {
            return Err(Error::Tolerance {
                partial: total,
                estimate: err,
            });
        }
        Ok(KernelIntegral {
            r,
            total,
            left,
            right,
            t_hat,
            error: err,
        })
    }
}

/// `int_0^inf n(sqrt t) / (t (t + r^2)) dt` from eigenvalues below `R`, counting
/// samples beyond `R`, and a power-law extrapolation past the last sample.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Stieltjes {
    pub value: f64,
    pub tail: f64,
    pub tail_error: f64,
}

fn weight(x: f64, r: f64) -> f64 {
    2.0 / (x * (x * x + r * r))
}

pub fn stieltjes_of_counting(sr: &SpectrumResult, r: f64) -> Result<Stieltjes> {
    let reach = sr.tail.last().map_or(sr.r_max, |s| s.0.max(sr.r_max));
    if reach <= r {
        return Err(Error::InsufficientSpectrum {
            have: reach,
            want: r,
        });
    }
    let r2 = r * r;
    let head: f64 = sr
        .eigenvalues
        .iter()
        .map(|l| (r2 / (l * l)).ln_1p())
        .sum::<f64>()
        / r2;

    let n_r = sr.eigenvalues.len() as f64;
    let mut samples: Vec<(f64, f64)> = vec![(sr.r_max, n_r)];
    samples.extend(
        sr.tail
            .iter()
            .filter(|s| s.0 > sr.r_max)
            .map(|s| (s.0, s.1 as f64)),
    );

    let mut tail = 0.0;
    let mut spread = 0.0;
    for w in samples.windows(2) {
        let ((x0, n0), (x1, n1)) = (w[0], w[1]);
        let (l0, l1) = (x0.ln(), x1.ln());
        let res = quad::integrate_scalar(
            |lx| {
                let x = lx.exp();
                let th = (lx - l0) / (l1 - l0);
                (n0 + th * (n1 - n0) - n_r) * weight(x, r) * x
            },
            l0,
            l1,
            1e-10,
            1e-300,
        );
        tail += res.value[0];
        let band = quad::integrate_scalar(
            |lx| (n1 - n0) * weight(lx.exp(), r) * lx.exp(),
            l0,
            l1,
            1e-10,
            1e-300,
        );
        spread += 0.5 * band.value[0];
    }

    let (x_last, n_last) = *samples.last().unwrap();
    let rho = if samples.len() >= 3 {
        Some(fitted_index(&samples))
    } else {
        sr.tail_index
    };
    if let (Some(rho), true) = (rho, n_last > 0.0) {
        // x = x_last / u on (0, 1]
        let res = quad::integrate_scalar(
            |u| {
                if u <= 0.0 {
                    return 0.0;
                }
                let x = x_last / u;
                (n_last * u.powf(-rho) - n_r) * weight(x, r) * x_last / (u * u)
            },
            0.0,
            1.0,
            1e-10,
            1e-300,
        );
        let extra = res.value[0];
        tail += extra;
        spread += 0.5 * extra.abs();
    }
    Ok(Stieltjes {
        value: head + tail,
        tail,
        tail_error: spread,
    })
}

/// Growth index of the counting function from its last samples, clamped to `[0, 1.9]`.
fn fitted_index(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.1 > 0.0)
        .map(|s| (s.0.ln(), s.1.ln()))
        .collect();
    if pts.len() < 3 {
        return 1.0;
    }
    let tail = &pts[pts.len() / 2..];
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return 1.0;
    }
    (sxy / sxx).clamp(0.0, 1.9)
}
