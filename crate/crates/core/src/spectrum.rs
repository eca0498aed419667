//! Fundamental solution, monodromy, eigenvalues and trace formulas.
//!
//! On a constant piece `H0` of length `d` the generator `G0 = -d H0 J` is
//! trace free with `G0^2 = -d^2 det H0 I`, so
//! `exp(z G0) = cos(z w0) I + z sinc(z w0) G0` with `w0 = d sqrt(det H0)`.
//! Products are kept with a common factor `e^logscale` divided out.
//!
//! Real spectral parameters use the Prüfer angle of the second row
//! `(w21, w22)`. It is monotone in `x`, starts at `pi/2`, and `w22(b; x)`
//! vanishes exactly when it crosses a multiple of `pi`, which turns zero
//! counting into a single propagation.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::mat::SymMat2;
use crate::par::map_ordered;
use crate::pieces::Pieces;
use crate::quad;

/// Entries are renormalized once their magnitude exceeds this.
pub const RESCALE: f64 = 1e10;
/// Relative width of the final eigenvalue bracket.
pub const EPS_EIG: f64 = 1e-12;
/// Allowed relative deviation of `det W` from 1.
pub const EPS_DET: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transfer2 {
    /// Row-major entries `w11, w12, w21, w22`, scaled by `e^-logscale`.
    pub w: [[C64; 2]; 2],
    pub logscale: f64,
}

impl Transfer2 {
    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Transfer2 {
            w: [[one, zero], [zero, one]],
            logscale: 0.0,
        }
    }

    pub fn w11(&self) -> C64 {
        self.w[0][0] * self.logscale.exp()
    }

    pub fn w12(&self) -> C64 {
        self.w[0][1] * self.logscale.exp()
    }

    pub fn w21(&self) -> C64 {
        self.w[1][0] * self.logscale.exp()
    }

    pub fn w22(&self) -> C64 {
        self.w[1][1] * self.logscale.exp()
    }

    pub fn log_abs_w22(&self) -> f64 {
        self.w[1][1].norm().ln() + self.logscale
    }

    /// `|det W_stored - e^{-2 logscale}|` relative to the size of the two
    /// products forming the determinant.
    pub fn det_residual(&self) -> f64 {
        let p = self.w[0][0] * self.w[1][1];
        let q = self.w[0][1] * self.w[1][0];
        let target = (-2.0 * self.logscale).exp();
        let scale = p.norm() + q.norm();
        ((p - q) - target).norm() / scale.max(target)
    }

    pub fn conj(&self) -> Self {
        let mut out = *self;
        for row in out.w.iter_mut() {
            for e in row.iter_mut() {
                *e = e.conj();
            }
        }
        out
    }

    fn renormalize(&mut self) {
        let m = self.w.iter().flatten().fold(0.0f64, |m, e| m.max(e.norm()));
        if m > RESCALE {
            for e in self.w.iter_mut().flatten() {
                *e /= m;
            }
            self.logscale += m.ln();
        }
    }
}

/// Scaled coefficients `(c, s, shift)` with
/// `exp(z G0) = e^shift (c I + s G0)`.
fn step_coeffs(z: C64, omega0: f64) -> (C64, C64, f64) {
    if omega0 == 0.0 {
        return (C64::new(1.0, 0.0), z, 0.0);
    }
    let w = z * omega0;
    let y = w.im.abs();
    let e2 = (-2.0 * y).exp();
    let ch = 0.5 * (1.0 + e2);
    let sh = 0.5 * (1.0 - e2) * w.im.signum();
    let (sx, cx) = w.re.sin_cos();
    let cos_s = C64::new(cx * ch, -sx * sh);
    let s = if w.norm() < 1e-4 {
        let w2 = w * w;
        z * (1.0 - w2 / 6.0 + w2 * w2 / 120.0) * (-y).exp()
    } else {
        C64::new(sx * ch, cx * sh) / omega0
    };
    (cos_s, s, y)
}

fn omega0(v: &SymMat2, d: f64) -> f64 {
    v.det().max(0.0).sqrt() * d
}

/// `u G0` for a row vector `u`, `G0 = d [[-h3, h1], [-h2, h3]]`.
fn row_times_g<T>(u: [T; 2], v: &SymMat2, d: f64) -> [T; 2]
where
    T: Copy
        + std::ops::Mul<f64, Output = T>
        + std::ops::Add<Output = T>
        + std::ops::Neg<Output = T>,
{
    [
        -(u[0] * (v.a12 * d) + u[1] * (v.a22 * d)),
        u[0] * (v.a11 * d) + u[1] * (v.a12 * d),
    ]
}

/// Complex row propagated across `length` of a constant piece.
fn row_step(u: [C64; 2], v: &SymMat2, length: f64, z: C64) -> ([C64; 2], f64) {
    let (c, s, shift) = step_coeffs(z, omega0(v, length));
    let g = row_times_g(u, v, length);
    ([c * u[0] + s * g[0], c * u[1] + s * g[1]], shift)
}

fn check_x(p: &Pieces, x: f64) -> Result<()> {
    if !(x >= p.a() && x <= p.b()) {
        return Err(Error::Domain {
            t: x,
            a: p.a(),
            b: p.b(),
        });
    }
    Ok(())
}

/// Segments `(piece, length)` covering `[a, x]`.
fn segments(p: &Pieces, x: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    let nodes = p.nodes();
    let last = if x >= p.b() {
        p.len() - 1
    } else {
        p.piece_of(x)
    };
    (0..=last).filter_map(move |k| {
        let d = nodes[k + 1].min(x) - nodes[k];
        (d > 0.0).then_some((k, d))
    })
}

/// `W_H(x; z)` by exact per-piece exponentials.
pub fn fundamental_solution(model: &HamiltonianModel, x: f64, z: C64) -> Result<Transfer2> {
    let p = model.pieces();
    check_x(p, x)?;
    let vals = p.values();
    let mut w = Transfer2::identity();
    for (k, d) in segments(p, x) {
        for row in 0..2 {
            let (u, _) = row_step(w.w[row], &vals[k], d, z);
            w.w[row] = u;
        }
        let (_, _, shift) = step_coeffs(z, omega0(&vals[k], d));
        if shift > 0.0 {
            w.logscale += shift;
        }
        w.renormalize();
    }
    Ok(w)
}

/// `W_H(b; z)`; limit circle only.
pub fn monodromy(model: &HamiltonianModel, z: C64) -> Result<Transfer2> {
    require_limit_circle(model)?;
    fundamental_solution(model, model.pieces().b(), z)
}

fn require_limit_circle(model: &HamiltonianModel) -> Result<()> {
    if !model.is_limit_circle() {
        return Err(Error::LimitPoint);
    }
    Ok(())
}

/// `log |w22(b; ir)|`, propagating only the second row.
pub fn log_w22_imaginary(model: &HamiltonianModel, r: f64) -> Result<f64> {
    require_limit_circle(model)?;
    let p = model.pieces();
    let z = C64::new(0.0, r);
    let vals = p.values();
    let mut u = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let mut log = 0.0;
    for (k, d) in segments(p, p.b()) {
        let (next, shift) = row_step(u, &vals[k], d, z);
        u = next;
        log += shift;
        let m = u[0].norm().max(u[1].norm());
        if !(1.0 / RESCALE..=RESCALE).contains(&m) {
            u[0] /= m;
            u[1] /= m;
            log += m.ln();
        }
    }
    Ok(u[1].norm().ln() + log)
}

/// `r * int_a^b Im(-w21 / w22)(t; ir) h1(t) dt`, the integrated log
/// derivative of `|w22(t; ir)|`.
pub fn log_derivative_integral(model: &HamiltonianModel, r: f64) -> Result<f64> {
    require_limit_circle(model)?;
    let p = model.pieces();
    let z = C64::new(0.0, r);
    let vals = p.values();
    let mut u = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let mut total = 0.0;
    for (k, d) in segments(p, p.b()) {
        let v = vals[k];
        if v.a11 > 0.0 {
            let start = u;
            let res = quad::integrate_scalar(
                |s| {
                    let (e, _) = row_step(start, &v, s, z);
                    (-e[0] / e[1]).im
                },
                0.0,
                d,
                1e-12,
                1e-15 * d,
            );
            total += v.a11 * res.value[0];
        }
        let (next, _) = row_step(u, &v, d, z);
        let m = next[0].norm().max(next[1].norm());
        u = [next[0] / m, next[1] / m];
    }
    Ok(r * total)
}

/// Prüfer angle of `(w21, w22)(b; x)` for real `x`, continuous in `x`,
/// equal to `pi/2` at `x = 0`.
pub fn prufer_theta(model: &HamiltonianModel, x: f64) -> Result<f64> {
    require_limit_circle(model)?;
    Ok(theta_pieces(model.pieces(), x))
}

fn theta_pieces(p: &Pieces, x: f64) -> f64 {
    let vals = p.values();
    let nodes = p.nodes();
    let sgn = if x < 0.0 { -1.0 } else { 1.0 };
    let mut u = [0.0f64, 1.0];
    let mut theta = FRAC_PI_2;
    for k in 0..vals.len() {
        let v = &vals[k];
        let d = nodes[k + 1] - nodes[k];
        let om = omega0(v, d);
        let w = x * om;
        let (sw, cw) = w.sin_cos();
        let coef = if om > 0.0 && w.abs() > 1e-8 {
            sw / om
        } else {
            x * (1.0 - w * w / 6.0)
        };
        let g = row_times_g(u, v, d);
        let mut e = [cw * u[0] + coef * g[0], cw * u[1] + coef * g[1]];
        let n = e[0].hypot(e[1]);
        e = [e[0] / n, e[1] / n];
        let half_turns = (w.abs() / PI).floor();
        let v_ = if half_turns % 2.0 == 1.0 {
            [-e[0], -e[1]]
        } else {
            e
        };
        let cross = u[0] * v_[1] - u[1] * v_[0];
        let dot = u[0] * v_[0] + u[1] * v_[1];
        let a = sgn * cross.atan2(dot);
        let delta = if dot > 0.0 {
            a.max(0.0)
        } else if a < 0.0 {
            PI
        } else {
            a
        };
        theta += sgn * (half_turns * PI + delta);
        u = e;
    }
    theta
}

fn count_from_thetas(theta_pos: f64, theta_neg: f64) -> usize {
    let pos = ((theta_pos / PI).ceil() - 1.0).max(0.0);
    let neg = (-(theta_neg / PI).floor()).max(0.0);
    (pos + neg) as usize
}

/// `n_H(x)`: number of eigenvalues with `|lambda| < x`, from two Prüfer
/// propagations.
pub fn counting_function(model: &HamiltonianModel, x: f64) -> Result<usize> {
    require_limit_circle(model)?;
    if !(x > 0.0) {
        return Ok(0);
    }
    let p = model.pieces();
    Ok(count_from_thetas(theta_pieces(p, x), theta_pieces(p, -x)))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SpectrumResult {
    /// Sorted eigenvalues in `(-r_max, r_max)`.
    pub eigenvalues: Vec<f64>,
    pub r_max: f64,
    /// Locations of numerically coincident zeros.
    pub flags: Vec<f64>,
    /// Counting samples `(x, n_H(x))` with `x > r_max`, ascending.
    pub tail: Vec<(f64, usize)>,
    /// Growth index assumed past the last sample, when known.
    pub tail_index: Option<f64>,
}

impl SpectrumResult {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, r_max: f64) -> Self {
        eigenvalues.retain(|l| l.abs() < r_max);
        eigenvalues.sort_by(f64::total_cmp);
        SpectrumResult {
            eigenvalues,
            r_max,
            ..Default::default()
        }
    }

    /// Attach counting samples at the points of `xs` beyond `r_max`.
    pub fn with_counting_tail(mut self, model: &HamiltonianModel, xs: &[f64]) -> Result<Self> {
        require_limit_circle(model)?;
        let mut pts: Vec<f64> = xs
            .iter()
            .copied()
            .filter(|&x| x > self.r_max && x.is_finite())
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let counts = map_ordered(&pts, |&x| counting_function(model, x));
        self.tail = pts
            .into_iter()
            .zip(counts)
            .map(|(x, n)| n.map(|n| (x, n)))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    /// `#{lambda : |lambda| < r}` for `r <= r_max`.
    pub fn counting(&self, r: f64) -> Result<usize> {
        if r > self.r_max {
            return Err(Error::InsufficientSpectrum {
                have: self.r_max,
                want: r,
            });
        }
        Ok(self.eigenvalues.iter().filter(|l| l.abs() < r).count())
    }
}

/// Scan options for [`eigenvalues`].
#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    /// Upper bound on the scan step.
    pub step_cap: f64,
    pub eps: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            step_cap: f64::INFINITY,
            eps: EPS_EIG,
        }
    }
}

/// Eigenvalues in `(-r_max, r_max)` with default options.
pub fn eigenvalues(model: &HamiltonianModel, r_max: f64) -> Result<SpectrumResult> {
    eigenvalues_with(model, r_max, ScanOptions::default())
}

/// Scan `(-R, R)` with step `min(pi / 4T, cap)`, `T = int sqrt det H + (b - a) R^{-1/2}`,
/// then solve `theta(b; x) = k pi` inside every sample interval the angle
/// crosses.
pub fn eigenvalues_with(
    model: &HamiltonianModel,
    r_max: f64,
    opts: ScanOptions,
) -> Result<SpectrumResult> {
    require_limit_circle(model)?;
    if !model.is_definite() {
        return Err(Error::Indefinite {
            det: model.pieces().total().det(),
        });
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::Precondition(format!(
            "R must be positive and finite, got {r_max}"
        )));
    }
    let p = model.pieces();
    let nodes = p.nodes();
    let density: f64 = p
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| omega0(v, nodes[k + 1] - nodes[k]))
        .sum();
    let t = density + (p.b() - p.a()) / r_max.sqrt();
    let step = (PI / (4.0 * t)).min(opts.step_cap);
    let n = (r_max / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(r_max)).collect();
    let signed: Vec<f64> = grid.iter().flat_map(|&x| [x, -x]).collect();
    let thetas = map_ordered(&signed, |&x| theta_pieces(p, x));

    // (sign, k, lo, hi) with theta(sign * lo) and theta(sign * hi) bracketing k pi
    let mut tasks = Vec::new();
    for i in 0..n {
        let (x0, x1) = (grid[i], grid[i + 1]);
        let (tp0, tp1) = (thetas[2 * i], thetas[2 * i + 2]);
        let first = (tp0 / PI).floor() as i64 + 1;
        for k in first..=((tp1 / PI).floor() as i64) {
            if !(k as f64 * PI == tp1 && i + 1 == n) {
                tasks.push((1.0, k, x0, x1));
            }
        }
        let (tn0, tn1) = (thetas[2 * i + 1], thetas[2 * i + 3]);
        let top = (tn0 / PI).ceil() as i64 - 1;
        for k in ((tn1 / PI).ceil() as i64)..=top {
            if !(k as f64 * PI == tn1 && i + 1 == n) {
                tasks.push((-1.0, k, x0, x1));
            }
        }
    }
    let roots = map_ordered(&tasks, |&(sgn, k, lo, hi)| {
        let target = k as f64 * PI;
        let f = |x: f64| sgn * (theta_pieces(p, sgn * x) - target);
        sgn * solve_increasing(f, lo, hi, opts.eps)
    });
    let mut eig: Vec<f64> = roots.into_iter().filter(|l| l.abs() < r_max).collect();
    eig.sort_by(f64::total_cmp);
    let mut flags = Vec::new();
    for w in eig.windows(2) {
        if (w[1] - w[0]).abs() <= 1e3 * opts.eps * w[0].abs().max(1.0) {
            flags.push(w[0]);
        }
    }
    Ok(SpectrumResult {
        eigenvalues: eig,
        r_max,
        flags,
        tail: Vec::new(),
        tail_index: None,
    })
}

/// Root of a continuous non-decreasing `f` on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`,
/// by the Illinois variant of regula falsi with a bisection safeguard.
fn solve_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, eps: f64) -> f64 {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo >= 0.0 {
        return lo;
    }
    if fhi <= 0.0 {
        return hi;
    }
    let mut side = 0i8;
    for it in 0..200 {
        let tol = eps * lo.abs().max(hi.abs()).max(1.0);
        if hi - lo <= tol {
            break;
        }
        let mut x = if it % 4 == 3 {
            0.5 * (lo + hi)
        } else {
            (lo * fhi - hi * flo) / (fhi - flo)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}

/// `tr(A_H^{-1}) = -omega3(a, b)`.
pub fn trace_inverse(model: &HamiltonianModel) -> Result<f64> {
    require_integrable(model)?;
    Ok(0.0 - model.pieces().total().a12)
}

fn require_integrable(model: &HamiltonianModel) -> Result<()> {
    if !model.is_limit_circle() {
        return Err(Error::Divergent(
            "Omega(a, t) is unbounded as t -> b".into(),
        ));
    }
    if !model.is_definite() {
        return Err(Error::Indefinite {
            det: model.pieces().total().det(),
        });
    }
    Ok(())
}

/// `sum lambda^{-p}` for `p = 2` or `3` from iterated integrals of `H`,
/// evaluated exactly on every piece:
/// `p = 2`: `2 int omega2(a, t) h1(t) dt`;
/// `p = 3`: `-6 int int_a^s omega2(a, x) h3(x) dx h1(s) ds`.
pub fn schatten_sum(model: &HamiltonianModel, p: u32) -> Result<f64> {
    require_integrable(model)?;
    let pc = model.pieces();
    let nodes = pc.nodes();
    let vals = pc.values();
    match p {
        2 => {
            let mut acc = 0.0;
            for (k, v) in vals.iter().enumerate() {
                let d = nodes[k + 1] - nodes[k];
                let w2 = pc.prefix(k).a22;
                acc += v.a11 * (w2 * d + 0.5 * v.a22 * d * d);
            }
            Ok(2.0 * acc)
        }
        3 => {
            let mut acc = 0.0;
            let mut inner = 0.0;
            for (k, v) in vals.iter().enumerate() {
                let d = nodes[k + 1] - nodes[k];
                let w2 = pc.prefix(k).a22;
                acc += v.a11 * (inner * d + v.a12 * (0.5 * w2 * d * d + v.a22 * d * d * d / 6.0));
                inner += v.a12 * (w2 * d + 0.5 * v.a22 * d * d);
            }
            Ok(-6.0 * acc)
        }
        _ => Err(Error::Precondition(format!("p must be 2 or 3, got {p}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_angle() -> HamiltonianModel {
        HamiltonianModel::piecewise(
            vec![0.0, 1.0, 2.0],
            vec![
                SymMat2::projection(0.0),
                SymMat2::projection(std::f64::consts::FRAC_PI_4),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_is_rotation() {
        let m = HamiltonianModel::identity();
        let z = C64::new(1.3, -0.4);
        let w = fundamental_solution(&m, 0.7, z).unwrap();
        let (c, s) = ((z * 0.7).cos(), (z * 0.7).sin());
        assert!((w.w11() - c).norm() < 1e-14);
        assert!((w.w12() - s).norm() < 1e-14);
        assert!((w.w21() + s).norm() < 1e-14);
        assert!((w.w22() - c).norm() < 1e-14);
        assert!(w.det_residual() < 1e-14);
    }

    #[test]
    fn z_zero_is_identity() {
        let w = monodromy(&two_angle(), C64::new(0.0, 0.0)).unwrap();
        assert_eq!(w, Transfer2::identity());
    }

    #[test]
    fn rank_one_piece_is_affine() {
        let m =
            HamiltonianModel::piecewise(vec![0.0, 2.0], vec![SymMat2::projection(0.3)]).unwrap();
        let z = C64::new(0.8, 0.5);
        let w = monodromy(&m, z).unwrap();
        let (s, c) = 0.3f64.sin_cos();
        // I + 2z G with G = -xi xi^T J
        let expect22 = C64::new(1.0, 0.0) + z * 2.0 * (s * c);
        let expect21 = -z * 2.0 * s * s;
        assert!((w.w22() - expect22).norm() < 1e-14);
        assert!((w.w21() - expect21).norm() < 1e-14);
        assert!(w.det_residual() < 1e-14);
    }

    #[test]
    fn two_angle_w22_and_sums() {
        let m = two_angle();
        let z = C64::new(0.7, 0.2);
        let w = monodromy(&m, z).unwrap();
        assert!((w.w22() - (1.0 + z / 2.0)).norm() < 1e-14);
        let sr = eigenvalues(&m, 100.0).unwrap();
        assert_eq!(sr.eigenvalues.len(), 1);
        assert!((sr.eigenvalues[0] + 2.0).abs() < 1e-11);
        assert!((trace_inverse(&m).unwrap() + 0.5).abs() < 1e-15);
        assert!((schatten_sum(&m, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((schatten_sum(&m, 3).unwrap() + 0.125).abs() < 1e-15);
    }

    #[test]
    fn identity_eigenvalues_and_counting() {
        let m = HamiltonianModel::identity();
        let sr = eigenvalues(&m, 40.0).unwrap();
        let expect: Vec<f64> = (0..13).map(|k| (k as f64 + 0.5) * PI).collect();
        let pos: Vec<f64> = sr
            .eigenvalues
            .iter()
            .copied()
            .filter(|&l| l > 0.0)
            .collect();
        assert_eq!(pos.len(), expect.len());
        for (a, b) in pos.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(sr.eigenvalues.len(), 26);
        assert_eq!(sr.counting(10.0).unwrap(), 6);
        assert_eq!(sr.counting(1.0).unwrap(), 0);
        assert_eq!(sr.counting(40.0).unwrap(), 26);
        assert!(sr.counting(41.0).is_err());
        assert_eq!(counting_function(&m, 10.0).unwrap(), 6);
        assert!(eigenvalues(&m, 1.0).unwrap().eigenvalues.is_empty());
    }

    #[test]
    fn identity_schatten_and_trace() {
        let m = HamiltonianModel::identity();
        assert!((schatten_sum(&m, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(schatten_sum(&m, 3).unwrap(), 0.0);
        assert_eq!(trace_inverse(&m).unwrap(), 0.0);
    }

    #[test]
    fn log_w22_identity() {
        let m = HamiltonianModel::identity();
        assert_eq!(log_w22_imaginary(&m, 0.0).unwrap(), 0.0);
        for r in [0.5f64, 30.0, 1e6] {
            let expect = r + (-2.0 * r).exp().ln_1p() - 2f64.ln();
            assert!((log_w22_imaginary(&m, r).unwrap() - expect).abs() < 1e-9 * expect.max(1.0));
        }
        let r = 25.0;
        let lhs = log_w22_imaginary(&m, r).unwrap();
        let rhs = log_derivative_integral(&m, r).unwrap();
        assert!((lhs - rhs).abs() < 1e-9 * lhs);
    }

    #[test]
    fn beaded_string_against_dense_sampling() {
        let m = HamiltonianModel::piecewise(
            vec![0.0, 0.6, 1.5],
            vec![SymMat2::diag(1.0, 2.5), SymMat2::diag(3.0, 0.4)],
        )
        .unwrap();
        let r_max = 30.0;
        let sr = eigenvalues(&m, r_max).unwrap();
        // sign changes of w22 on a dense grid, refined by plain bisection
        let w22 = |x: f64| monodromy(&m, C64::new(x, 0.0)).unwrap().w22().re;
        let mut oracle = Vec::new();
        let h = 1e-3;
        let mut x = -r_max;
        while x < r_max {
            let (mut lo, mut hi) = (x, (x + h).min(r_max));
            if w22(lo).signum() != w22(hi).signum() {
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if w22(mid).signum() == w22(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                oracle.push(0.5 * (lo + hi));
            }
            x += h;
        }
        assert_eq!(sr.eigenvalues.len(), oracle.len());
        for (a, b) in sr.eigenvalues.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
