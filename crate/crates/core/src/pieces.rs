//! Piecewise-constant Hamiltonians with a prefix table of Omega.
//!
//! Every model is lowered to this form. Omega over whole pieces comes from the
//! compensated prefix table; partial pieces are linear in the endpoint, so
//! det Omega restricted to one piece is a quadratic and its level sets are
//! solved in closed form.

use crate::error::{Error, Result};
use crate::mat::{Compensated, SymMat2, EPS_PSD};

#[derive(Clone, Debug)]
pub struct Pieces {
    nodes: Vec<f64>,
    vals: Vec<SymMat2>,
    prefix: Vec<Compensated>,
}

/// A level-set root located on a specific piece.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub at: f64,
    pub piece: usize,
    /// `at - nodes[piece]`, kept separately since it can be far below the
    /// spacing of f64 around `at`.
    pub offset: f64,
}

/// Smallest `x` in `[0, xmax]` with `det(A + xH) >= q`, assuming the map is
/// non-decreasing and `det A < q`.
fn quadratic_level(a: &SymMat2, h: &SymMat2, q: f64, xmax: f64) -> f64 {
    let rem = q - a.det();
    if rem <= 0.0 {
        return 0.0;
    }
    let d1 = a.cross(h).max(0.0);
    let d2 = h.det().max(0.0);
    let denom = d1 + (d1 * d1 + 4.0 * d2 * rem).sqrt();
    if denom <= 0.0 {
        return xmax;
    }
    (2.0 * rem / denom).clamp(0.0, xmax)
}

impl Pieces {
    pub fn new(nodes: Vec<f64>, vals: Vec<SymMat2>) -> Result<Self> {
        if nodes.len() < 2 || vals.len() + 1 != nodes.len() {
            return Err(Error::Model(format!(
                "need m+1 breakpoints for m pieces (got {} and {})",
                nodes.len(),
                vals.len()
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::Model(format!(
                    "breakpoints must be finite and increasing near {}",
                    w[0]
                )));
            }
        }
        for (k, v) in vals.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("piece {k}")));
            }
            if !v.is_psd(EPS_PSD) {
                return Err(Error::Model(format!(
                    "piece {k} is not positive semidefinite: {v:?}"
                )));
            }
            if v.trace() <= 0.0 {
                return Err(Error::Model(format!("piece {k} has zero trace")));
            }
        }
        let mut prefix = Vec::with_capacity(nodes.len());
        let mut acc = Compensated::default();
        prefix.push(acc);
        for (k, v) in vals.iter().enumerate() {
            acc.add(v.scale(nodes[k + 1] - nodes[k]));
            prefix.push(acc);
        }
        Ok(Pieces {
            nodes,
            vals,
            prefix,
        })
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[SymMat2] {
        &self.vals
    }

    /// Index `k` with `nodes[k] <= t < nodes[k+1]`, clamped to the valid range.
    pub fn piece_of(&self, t: f64) -> usize {
        let idx = self.nodes.partition_point(|&x| x <= t);
        idx.saturating_sub(1).min(self.vals.len() - 1)
    }

    pub fn value_at(&self, t: f64) -> SymMat2 {
        self.vals[self.piece_of(t)]
    }

    /// Omega(a, nodes[k]).
    pub fn prefix(&self, k: usize) -> SymMat2 {
        self.prefix[k].value()
    }

    /// Omega(a, t).
    pub fn omega_from_a(&self, t: f64) -> SymMat2 {
        let k = self.piece_of(t);
        self.prefix[k].value() + self.vals[k].scale(t - self.nodes[k])
    }

    /// Omega(nodes[i], nodes[j]) for i <= j.
    pub fn omega_nodes(&self, i: usize, j: usize) -> SymMat2 {
        self.prefix[j].diff(&self.prefix[i])
    }

    pub fn omega(&self, s: f64, t: f64) -> SymMat2 {
        if !(t > s) {
            return SymMat2::ZERO;
        }
        let js = self.piece_of(s);
        let jt = self.piece_of(t);
        if js == jt {
            return self.vals[js].scale(t - s);
        }
        self.vals[js].scale(self.nodes[js + 1] - s)
            + self.prefix[jt].diff(&self.prefix[js + 1])
            + self.vals[jt].scale(t - self.nodes[jt])
    }

    pub fn det_omega(&self, s: f64, t: f64) -> f64 {
        self.omega(s, t).det().max(0.0)
    }

    /// Total Omega(a, b).
    pub fn total(&self) -> SymMat2 {
        self.prefix.last().unwrap().value()
    }

    /// Smallest `u > s` with `det Omega(s, u) >= q`. `hint` is a piece index
    /// known not to exceed the answer. Returns `None` when even
    /// `det Omega(s, b) < q`.
    pub fn forward_root(&self, s: f64, q: f64, hint: Option<usize>) -> Option<Root> {
        let m = self.vals.len();
        let js = self.piece_of(s);
        let head = self.vals[js].scale(self.nodes[js + 1] - s);
        let f = |k: usize| -> f64 {
            if k == js + 1 {
                head.det()
            } else {
                (head + self.prefix[k].diff(&self.prefix[js + 1])).det()
            }
        };
        if f(m) < q {
            return None;
        }
        // f(lo) < q <= f(hi); lo == js stands for the empty interval.
        let mut lo = js;
        let mut hi;
        let start = hint.map_or(js + 1, |h| h.max(js + 1).min(m));
        if f(start) >= q {
            hi = start;
        } else {
            lo = start;
            let mut step = 1usize;
            loop {
                let k = (lo + step).min(m);
                if f(k) >= q {
                    hi = k;
                    break;
                }
                lo = k;
                step *= 2;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if f(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let piece = hi - 1;
        let (start, a) = if piece == js {
            (s, SymMat2::ZERO)
        } else {
            (
                self.nodes[piece],
                head + self.prefix[piece].diff(&self.prefix[js + 1]),
            )
        };
        let x = quadratic_level(&a, &self.vals[piece], q, self.nodes[piece + 1] - start);
        let offset = if piece == js {
            s - self.nodes[js] + x
        } else {
            x
        };
        Some(Root {
            at: start + x,
            piece,
            offset,
        })
    }

    /// Largest `s < t` with `det Omega(s, t) >= q`; by monotonicity this is
    /// the solution of `det Omega(s, t) = q`. `None` when `det Omega(a, t) < q`.
    pub fn backward_root(&self, t: f64, q: f64, hint: Option<usize>) -> Option<Root> {
        self.backward_root_with_omega(t, q, hint).map(|(r, _)| r)
    }

    /// [`Pieces::backward_root`] together with `Omega(s, t)` at the root.
    pub fn backward_root_with_omega(
        &self,
        t: f64,
        q: f64,
        hint: Option<usize>,
    ) -> Option<(Root, SymMat2)> {
        let jt = self.piece_of(t);
        self.backward_root_local(jt, t - self.nodes[jt], q, hint)
    }

    /// [`Pieces::backward_root_with_omega`] for `t = nodes[jt] + off`.
    pub fn backward_root_local(
        &self,
        jt: usize,
        off: f64,
        q: f64,
        hint: Option<usize>,
    ) -> Option<(Root, SymMat2)> {
        let t = self.nodes[jt] + off;
        let tail = self.vals[jt].scale(off);
        let g = |k: usize| -> f64 {
            if k == jt {
                tail.det()
            } else {
                (tail + self.prefix[jt].diff(&self.prefix[k])).det()
            }
        };
        let found = |k: usize| -> bool { g(k) >= q && (k == jt || g(k + 1) < q) };
        let piece = match hint {
            Some(h) if h <= jt && found(h) => h,
            _ => {
                if g(0) < q {
                    return None;
                }
                if g(jt) >= q {
                    jt
                } else {
                    // g(lo) >= q > g(hi)
                    let mut hi = jt;
                    let lo;
                    let mut step = 1usize;
                    loop {
                        let k = hi.saturating_sub(step);
                        if g(k) >= q {
                            lo = k;
                            break;
                        }
                        hi = k;
                        step *= 2;
                    }
                    let mut lo = lo;
                    while hi - lo > 1 {
                        let mid = lo + (hi - lo) / 2;
                        if g(mid) >= q {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                }
            }
        };
        let (end, len, a) = if piece == jt {
            (t, off, SymMat2::ZERO)
        } else {
            (
                self.nodes[piece + 1],
                self.nodes[piece + 1] - self.nodes[piece],
                g_mat(self, piece + 1, jt, &tail),
            )
        };
        let h = &self.vals[piece];
        let x = quadratic_level(&a, h, q, len);
        Some((
            Root {
                at: end - x,
                piece,
                offset: len - x,
            },
            a + h.scale(x),
        ))
    }

    /// Rebuild with transformed piece values.
    pub fn map_values(&self, f: impl Fn(&SymMat2) -> SymMat2) -> Result<Pieces> {
        Pieces::new(self.nodes.clone(), self.vals.iter().map(f).collect())
    }
}

fn g_mat(p: &Pieces, k: usize, jt: usize, tail: &SymMat2) -> SymMat2 {
    if k == jt {
        *tail
    } else {
        *tail + p.prefix[jt].diff(&p.prefix[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity() -> Pieces {
        Pieces::new(vec![0.0, 1.0], vec![SymMat2::IDENTITY]).unwrap()
    }

    fn two_piece() -> Pieces {
        Pieces::new(
            vec![0.0, 1.0, 2.0, 2.5],
            vec![
                SymMat2::diag(1.0, 0.0),
                SymMat2::projection(0.7),
                SymMat2::new(0.5, 0.1, 0.3),
            ],
        )
        .unwrap()
    }

    #[test]
    fn omega_identity_segment() {
        let p = identity();
        let o = p.omega(0.2, 0.7);
        assert!((o.a11 - 0.5).abs() < 1e-15 && o.a12 == 0.0);
        assert!((p.det_omega(0.0, 0.3) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn omega_is_additive() {
        let p = two_piece();
        let (s, t, u) = (0.3, 1.6, 2.4);
        let d = p.omega(s, u) - p.omega(s, t) - p.omega(t, u);
        assert!(d.max_abs() < 1e-14);
    }

    #[test]
    fn forward_root_identity() {
        let p = identity();
        let r = p.forward_root(0.25, 0.01, None).unwrap();
        assert!((r.at - 0.35).abs() < 1e-14);
        assert!(p.forward_root(0.5, 0.3, None).is_none());
    }

    #[test]
    fn backward_root_identity() {
        let p = identity();
        let r = p.backward_root(0.9, 0.04, None).unwrap();
        assert!((r.at - 0.7).abs() < 1e-14);
        assert!(p.backward_root(0.1, 0.04, None).is_none());
    }

    #[test]
    fn roots_cross_pieces() {
        let p = two_piece();
        let q = 0.05;
        let r = p.forward_root(0.1, q, None).unwrap();
        assert!((p.det_omega(0.1, r.at) / q - 1.0).abs() < 1e-12);
        let back = p.backward_root(r.at, q, None).unwrap();
        assert!((back.at - 0.1).abs() < 1e-12);
        let hinted = p.backward_root(r.at, q, Some(back.piece)).unwrap();
        assert_eq!(hinted, back);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Pieces::new(vec![0.0, 1.0], vec![SymMat2::new(1.0, 2.0, 1.0)]).is_err());
        assert!(Pieces::new(vec![0.0, 0.0], vec![SymMat2::IDENTITY]).is_err());
        assert!(Pieces::new(vec![0.0, 1.0], vec![SymMat2::ZERO]).is_err());
    }
}
