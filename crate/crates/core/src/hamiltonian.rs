//! Hamiltonian models on `[a, b)`.
//!
//! A model keeps its analytic description (`Body`) next to a lowered
//! piecewise-constant table. `omega` evaluates the analytic form (prefix table
//! plus quadrature on partial pieces); the compatible pair, kernel, partition
//! and spectrum modules run on the lowered table, where all algebra is exact.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{Compensated, SymMat2};
use crate::par::map_ordered;
use crate::pieces::Pieces;
use crate::quad;

pub const EPS_OMEGA: f64 = 1e-10;
pub const EPS_DEF: f64 = 1e-12;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Angle functions with a closed form.
#[derive(Clone)]
pub enum PhiFamily {
    Constant(f64),
    Linear {
        slope: f64,
        intercept: f64,
    },
    /// `t^gamma sin(t^-beta)`
    Chirp {
        gamma: f64,
        beta: f64,
    },
    /// `sum_{n<terms} alpha^n cos(beta^n pi t)`
    Weierstrass {
        alpha: f64,
        beta: f64,
        terms: usize,
    },
    /// `t^exponent`
    Power {
        exponent: f64,
    },
    Custom(RealFn),
}

impl fmt::Debug for PhiFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiFamily::Constant(c) => write!(f, "Constant({c})"),
            PhiFamily::Linear { slope, intercept } => write!(f, "Linear({slope}, {intercept})"),
            PhiFamily::Chirp { gamma, beta } => write!(f, "Chirp({gamma}, {beta})"),
            PhiFamily::Weierstrass { alpha, beta, terms } => {
                write!(f, "Weierstrass({alpha}, {beta}, {terms})")
            }
            PhiFamily::Power { exponent } => write!(f, "Power({exponent})"),
            PhiFamily::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PhiFamily {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PhiFamily::Constant(c) => *c,
            PhiFamily::Linear { slope, intercept } => slope * t + intercept,
            PhiFamily::Chirp { gamma, beta } => t.powf(*gamma) * t.powf(-beta).sin(),
            PhiFamily::Weierstrass { alpha, beta, terms } => {
                let mut amp = 1.0;
                let mut freq = std::f64::consts::PI;
                let mut sum = 0.0;
                for _ in 0..*terms {
                    sum += amp * (freq * t).cos();
                    amp *= alpha;
                    freq *= beta;
                }
                sum
            }
            PhiFamily::Power { exponent } => t.powf(*exponent),
            PhiFamily::Custom(f) => f(t),
        }
    }
}

/// `phi(t) = family(t + offset) - shift`.
#[derive(Clone, Debug)]
pub struct Phi {
    pub family: PhiFamily,
    pub offset: f64,
    pub shift: f64,
}

impl Phi {
    pub fn new(family: PhiFamily) -> Self {
        Phi {
            family,
            offset: 0.0,
            shift: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.family.eval(t + self.offset) - self.shift
    }
}

#[derive(Clone)]
pub enum DiagFn {
    Constant(f64),
    /// `coef * t^exponent`
    Power {
        coef: f64,
        exponent: f64,
    },
    Custom(RealFn),
}

impl fmt::Debug for DiagFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagFn::Constant(c) => write!(f, "Constant({c})"),
            DiagFn::Power { coef, exponent } => write!(f, "Power({coef}, {exponent})"),
            DiagFn::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl DiagFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DiagFn::Constant(c) => *c,
            DiagFn::Power { coef, exponent } => coef * t.powf(*exponent),
            DiagFn::Custom(f) => f(t),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Body {
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<SymMat2>,
    },
    Angle {
        phi: Phi,
    },
    Diagonal {
        h1: DiagFn,
        h2: DiagFn,
        offset: f64,
    },
}

/// Controls how analytic bodies are lowered to piecewise-constant tables.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Lowering {
    /// Largest r the table has to resolve.
    pub r_max: f64,
    /// Partition constant the resolution is measured against.
    pub c: f64,
    /// Pieces are split while det Omega(piece) > res^4 c / r_max^2 and H
    /// deviates from its piece average by more than res^2 sqrt(c) / r_max.
    pub res: f64,
    pub min_width: f64,
    pub max_pieces: usize,
    pub initial_panels: usize,
    pub eps_omega: f64,
    /// Left cutoff a' for angles that oscillate without bound at a.
    pub head: Option<f64>,
    /// Truncation point b' when b is infinite.
    pub cutoff: Option<f64>,
    /// When set, each initial panel is first integrated on `2^grid_depth`
    /// equal cells with one G7K15 rule per cell; panel integrals down to cell
    /// size then come from a prefix table instead of adaptive quadrature.
    #[serde(default)]
    pub grid_depth: Option<u32>,
}

impl Default for Lowering {
    fn default() -> Self {
        Lowering {
            r_max: 1e4,
            c: 1.0,
            res: 0.1,
            min_width: 1e-13,
            max_pieces: 2_000_000,
            initial_panels: 64,
            eps_omega: EPS_OMEGA,
            head: None,
            cutoff: None,
            grid_depth: None,
        }
    }
}

impl Lowering {
    fn det_floor(&self) -> f64 {
        self.res.powi(4) * self.c / (self.r_max * self.r_max)
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianModel {
    a: f64,
    b: f64,
    body: Body,
    /// Constant value used on `[a, head)` for angle models.
    head: Option<(f64, SymMat2)>,
    lowering: Lowering,
    limit_circle: bool,
    pieces: Arc<Pieces>,
}

fn density_of(body: &Body, head: Option<(f64, SymMat2)>) -> impl Fn(f64) -> SymMat2 + Sync + '_ {
    move |t| {
        if let Some((h, v)) = head {
            if t < h {
                return v;
            }
        }
        match body {
            Body::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let idx = breakpoints
                    .partition_point(|&x| x <= t)
                    .saturating_sub(1)
                    .min(values.len() - 1);
                values[idx]
            }
            Body::Angle { phi } => SymMat2::projection(phi.eval(t)),
            Body::Diagonal { h1, h2, offset } => {
                SymMat2::diag(h1.eval(t + offset), h2.eval(t + offset))
            }
        }
    }
}

fn integrate_density<F: Fn(f64) -> SymMat2>(f: &F, s: f64, t: f64, eps: f64) -> Result<SymMat2> {
    if !(t > s) {
        return Ok(SymMat2::ZERO);
    }
    let r = quad::integrate(
        |u| {
            let m = f(u);
            [m.a11, m.a12, m.a22]
        },
        s,
        t,
        eps,
        1e-300,
        40,
    );
    let m = SymMat2::new(r.value[0], r.value[1], r.value[2]);
    if !m.is_finite() {
        return Err(Error::NonFinite(format!("Omega on [{s}, {t}]")));
    }
    Ok(m)
}

/// Largest deviation of `(y - x) H(p)` from `Omega(x, y)` over five probes.
fn deviation<F: Fn(f64) -> SymMat2>(f: &F, x: f64, y: f64, om: &SymMat2) -> f64 {
    let w = y - x;
    [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&u| (f(x + u * w).scale(w) - *om).max_abs())
        .fold(0.0, f64::max)
}

fn refine<F: Fn(f64) -> SymMat2>(
    f: &F,
    x: f64,
    y: f64,
    om: SymMat2,
    opts: &Lowering,
    floor: f64,
    out: &mut Vec<(f64, SymMat2)>,
) -> Result<()> {
    if out.len() > opts.max_pieces {
        return Err(Error::Model(format!(
            "lowering exceeded {} pieces",
            opts.max_pieces
        )));
    }
    if om.det() <= floor || y - x <= opts.min_width || deviation(f, x, y, &om) <= floor.sqrt() {
        out.push((x, om.scale(1.0 / (y - x))));
        return Ok(());
    }
    let mid = 0.5 * (x + y);
    let left = integrate_density(f, x, mid, opts.eps_omega)?;
    let right = integrate_density(f, mid, y, opts.eps_omega)?;
    refine(f, x, mid, left, opts, floor, out)?;
    refine(f, mid, y, right, opts, floor, out)
}

/// Refine on the cell grid `[i0, i1)` of a panel, falling back to adaptive
/// refinement below cell size.
#[allow(clippy::too_many_arguments)]
fn refine_cells<F: Fn(f64) -> SymMat2>(
    f: &F,
    edge: &dyn Fn(usize) -> f64,
    prefix: &[Compensated],
    i0: usize,
    i1: usize,
    opts: &Lowering,
    floor: f64,
    out: &mut Vec<(f64, SymMat2)>,
) -> Result<()> {
    let (x, y) = (edge(i0), edge(i1));
    let om = prefix[i1].diff(&prefix[i0]);
    if i1 - i0 == 1 {
        return refine(f, x, y, om, opts, floor, out);
    }
    if out.len() > opts.max_pieces {
        return Err(Error::Model(format!(
            "lowering exceeded {} pieces",
            opts.max_pieces
        )));
    }
    if om.det() <= floor || deviation(f, x, y, &om) <= floor.sqrt() {
        out.push((x, om.scale(1.0 / (y - x))));
        return Ok(());
    }
    let mid = (i0 + i1) / 2;
    refine_cells(f, edge, prefix, i0, mid, opts, floor, out)?;
    refine_cells(f, edge, prefix, mid, i1, opts, floor, out)
}

fn lower_panel<F: Fn(f64) -> SymMat2>(
    f: &F,
    x: f64,
    y: f64,
    opts: &Lowering,
) -> Result<Vec<(f64, SymMat2)>> {
    let floor = opts.det_floor();
    let mut out = Vec::new();
    match opts.grid_depth {
        Some(depth) => {
            let cells = 1usize << depth;
            let h = (y - x) / cells as f64;
            let edge = move |i: usize| if i == cells { y } else { x + i as f64 * h };
            let mut g = |u: f64| {
                let m = f(u);
                [m.a11, m.a12, m.a22]
            };
            let mut prefix = Vec::with_capacity(cells + 1);
            let mut acc = Compensated::default();
            prefix.push(acc);
            for i in 0..cells {
                let (v, _) = quad::gk15(&mut g, edge(i), edge(i + 1));
                acc.add(SymMat2::new(v[0], v[1], v[2]));
                prefix.push(acc);
            }
            refine_cells(f, &edge, &prefix, 0, cells, opts, floor, &mut out)?;
        }
        None => {
            let om = integrate_density(f, x, y, opts.eps_omega)?;
            refine(f, x, y, om, opts, floor, &mut out)?;
        }
    }
    Ok(out)
}

fn lower<F: Fn(f64) -> SymMat2 + Sync>(
    f: &F,
    lo: f64,
    hi: f64,
    opts: &Lowering,
) -> Result<(Vec<f64>, Vec<SymMat2>)> {
    let n = opts.initial_panels.max(1);
    let edges: Vec<f64> = (0..=n)
        .map(|k| lo + (hi - lo) * k as f64 / n as f64)
        .collect();
    let chunks: Vec<Result<Vec<(f64, SymMat2)>>> = map_ordered(&(0..n).collect::<Vec<_>>(), |&k| {
        lower_panel(f, edges[k], edges[k + 1], opts)
    });
    let mut nodes = Vec::new();
    let mut vals = Vec::new();
    for c in chunks {
        for (x, v) in c? {
            nodes.push(x);
            vals.push(v);
        }
    }
    if vals.len() > opts.max_pieces {
        return Err(Error::Model(format!(
            "lowering exceeded {} pieces",
            opts.max_pieces
        )));
    }
    nodes.push(hi);
    Ok((nodes, vals))
}

impl HamiltonianModel {
    /// Piecewise-constant model on `[breakpoints[0], breakpoints[m])`.
    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<SymMat2>) -> Result<Self> {
        let pieces = Pieces::new(breakpoints.clone(), values.clone())?;
        Ok(HamiltonianModel {
            a: pieces.a(),
            b: pieces.b(),
            body: Body::PiecewiseConstant {
                breakpoints,
                values,
            },
            head: None,
            lowering: Lowering::default(),
            limit_circle: true,
            pieces: Arc::new(pieces),
        })
    }

    /// `H = I` on `[0, 1]`.
    pub fn identity() -> Self {
        Self::piecewise(vec![0.0, 1.0], vec![SymMat2::IDENTITY]).unwrap()
    }

    /// `H = xi_phi xi_phi^T` on `[a, b)`, `b` finite.
    pub fn angle(a: f64, b: f64, phi: Phi, lowering: Lowering) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Model(format!(
                "angle model needs a finite interval, got [{a}, {b})"
            )));
        }
        let body = Body::Angle { phi };
        let head = match lowering.head {
            Some(h) if h > a && h < b => {
                let w = (h - a).min(b - h);
                let f = density_of(&body, None);
                let avg = integrate_density(&f, h, h + w, lowering.eps_omega)?.scale(1.0 / w);
                Some((h, avg))
            }
            Some(h) => return Err(Error::Model(format!("head cutoff {h} outside ({a}, {b})"))),
            None => None,
        };
        Self::from_body(a, b, body, head, lowering)
    }

    /// `H = diag(h1, h2)` on `[a, b)`; `b` may be infinite if a cutoff is set.
    pub fn diagonal(a: f64, b: f64, h1: DiagFn, h2: DiagFn, lowering: Lowering) -> Result<Self> {
        if !(b > a) || !a.is_finite() {
            return Err(Error::Model(format!("bad interval [{a}, {b})")));
        }
        Self::from_body(
            a,
            b,
            Body::Diagonal {
                h1,
                h2,
                offset: 0.0,
            },
            None,
            lowering,
        )
    }

    fn from_body(
        a: f64,
        b: f64,
        body: Body,
        head: Option<(f64, SymMat2)>,
        lowering: Lowering,
    ) -> Result<Self> {
        let b_eff = if b.is_finite() {
            b
        } else {
            match lowering.cutoff {
                Some(c) if c > a && c.is_finite() => c,
                _ => {
                    return Err(Error::Model(
                        "infinite right endpoint needs a finite cutoff".into(),
                    ))
                }
            }
        };
        let f = density_of(&body, head);
        let (mut nodes, mut vals) = match head {
            Some((h, v)) => {
                let (n, vs) = lower(&f, h, b_eff, &lowering)?;
                let mut nodes = vec![a];
                nodes.extend(n);
                let mut vals = vec![v];
                vals.extend(vs);
                (nodes, vals)
            }
            None => lower(&f, a, b_eff, &lowering)?,
        };
        // exact zeros of tr H would make a piece invalid; merge such pieces into neighbours
        clean_zero_trace(&mut nodes, &mut vals);
        let pieces = Pieces::new(nodes, vals)?;
        let limit_circle = if b.is_finite() {
            true
        } else {
            tail_is_integrable(&f, b_eff)
        };
        drop(f);
        Ok(HamiltonianModel {
            a,
            b,
            body,
            head,
            lowering,
            limit_circle,
            pieces: Arc::new(pieces),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn lowering(&self) -> &Lowering {
        &self.lowering
    }

    pub fn head(&self) -> Option<(f64, SymMat2)> {
        self.head
    }

    /// The lowered piecewise-constant table.
    pub fn pieces(&self) -> &Pieces {
        &self.pieces
    }

    /// Right end of the computational domain (the cutoff in the limit point case).
    pub fn b_eff(&self) -> f64 {
        self.pieces.b()
    }

    pub fn eval(&self, t: f64) -> Result<SymMat2> {
        if !(t >= self.a && t < self.b) {
            return Err(Error::Domain {
                t,
                a: self.a,
                b: self.b,
            });
        }
        let v = density_of(&self.body, self.head)(t);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("H({t})")));
        }
        Ok(v)
    }

    /// Omega(s, t) of the analytic model.
    pub fn omega(&self, s: f64, t: f64) -> Result<SymMat2> {
        if !(s >= self.a && s <= t && t <= self.b) {
            return Err(Error::Domain {
                t,
                a: self.a,
                b: self.b,
            });
        }
        if t == self.b && !self.limit_circle {
            return Err(Error::Unbounded);
        }
        if t == s {
            return Ok(SymMat2::ZERO);
        }
        if let Body::PiecewiseConstant { .. } = self.body {
            return Ok(self.pieces.omega(s, t));
        }
        let p = &self.pieces;
        let f = density_of(&self.body, self.head);
        let eps = self.lowering.eps_omega;
        let partial = |x: f64, y: f64| -> Result<SymMat2> {
            match self.head {
                Some((h, v)) if y <= h => Ok(v.scale(y - x)),
                _ => integrate_density(&f, x, y, eps),
            }
        };
        let b_eff = p.b();
        let (t_in, beyond) = if t > b_eff {
            (b_eff, Some((b_eff, t)))
        } else {
            (t, None)
        };
        let mut total = if s >= b_eff {
            SymMat2::ZERO
        } else {
            let js = p.piece_of(s);
            let jt = p.piece_of(t_in);
            if js == jt {
                partial(s, t_in)?
            } else {
                partial(s, p.nodes()[js + 1])?
                    + p.omega_nodes(js + 1, jt)
                    + partial(p.nodes()[jt], t_in)?
            }
        };
        if let Some((x, y)) = beyond {
            total += integrate_density(&f, x.max(s), y, eps)?;
        }
        Ok(total)
    }

    pub fn det_omega(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.omega(s, t)?.det().max(0.0))
    }

    pub fn is_limit_circle(&self) -> bool {
        self.limit_circle
    }

    /// det Omega over the whole (possibly truncated) domain exceeds
    /// `EPS_DEF * (tr Omega)^2`.
    pub fn is_definite(&self) -> bool {
        let o = self.pieces.total();
        o.det() > EPS_DEF * o.trace() * o.trace()
    }

    /// `N_alpha H N_alpha^{-1}`.
    pub fn rotate(&self, alpha: f64) -> Result<Self> {
        let head = self.head.map(|(h, v)| (h, v.rotate(alpha)));
        let pieces = Arc::new(self.pieces.map_values(|v| v.rotate(alpha))?);
        let body = match &self.body {
            Body::PiecewiseConstant {
                breakpoints,
                values,
            } => Body::PiecewiseConstant {
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|v| v.rotate(alpha)).collect(),
            },
            Body::Angle { phi } => {
                let mut phi = phi.clone();
                phi.shift += alpha;
                Body::Angle { phi }
            }
            Body::Diagonal { .. } => Body::PiecewiseConstant {
                breakpoints: pieces.nodes().to_vec(),
                values: pieces.values().to_vec(),
            },
        };
        Ok(HamiltonianModel {
            body,
            head,
            pieces,
            ..self.clone()
        })
    }

    /// Trace-normalised reparameterisation on `(0, int tr H)`.
    pub fn trace_normalize(&self) -> Result<Self> {
        if let Body::Angle { phi } = &self.body {
            let mut phi = phi.clone();
            phi.offset += self.a;
            let shift = self.a;
            let nodes: Vec<f64> = self.pieces.nodes().iter().map(|x| x - shift).collect();
            let pieces = Pieces::new(nodes, self.pieces.values().to_vec())?;
            let mut lowering = self.lowering.clone();
            lowering.head = lowering.head.map(|h| h - shift);
            return Ok(HamiltonianModel {
                a: 0.0,
                b: self.b - shift,
                body: Body::Angle { phi },
                head: self.head.map(|(h, v)| (h - shift, v)),
                lowering,
                limit_circle: self.limit_circle,
                pieces: Arc::new(pieces),
            });
        }
        let p = &self.pieces;
        let mut nodes = Vec::with_capacity(p.len() + 1);
        let mut vals = Vec::with_capacity(p.len());
        let mut x = 0.0;
        nodes.push(0.0);
        for (k, v) in p.values().iter().enumerate() {
            let tr = v.trace();
            x += (p.nodes()[k + 1] - p.nodes()[k]) * tr;
            nodes.push(x);
            vals.push(v.scale(1.0 / tr));
        }
        let mut m = HamiltonianModel::piecewise(nodes, vals)?;
        if !self.limit_circle {
            m.b = f64::INFINITY;
            m.limit_circle = false;
            m.lowering.cutoff = Some(x);
        }
        Ok(m)
    }
}

fn clean_zero_trace(nodes: &mut Vec<f64>, vals: &mut Vec<SymMat2>) {
    let mut k = 0;
    while k < vals.len() && vals.len() > 1 {
        if vals[k].trace() <= 0.0 {
            // absorb the empty piece into a neighbour, keeping Omega unchanged
            let (w, n) = (
                nodes[k + 1] - nodes[k],
                if k + 1 < vals.len() { k + 1 } else { k - 1 },
            );
            let wn = nodes[n + 1] - nodes[n];
            vals[n] = vals[n].scale(wn / (wn + w));
            vals.remove(k);
            nodes.remove(if n > k { k + 1 } else { k });
        } else {
            k += 1;
        }
    }
}

fn tail_is_integrable<F: Fn(f64) -> SymMat2>(f: &F, from: f64) -> bool {
    let mut lo = from.max(1.0);
    let mut last = f64::INFINITY;
    let mut total = 0.0;
    let mut shrinking = 0;
    for _ in 0..60 {
        let hi = 2.0 * lo;
        let r = quad::integrate_scalar(|t| f(t).trace(), lo, hi, 1e-8, 1e-300);
        let v = r.value[0];
        if !v.is_finite() {
            return false;
        }
        total += v;
        if v <= 0.75 * last {
            shrinking += 1;
        } else {
            shrinking = 0;
        }
        if shrinking >= 10 && v <= 1e-10 * total.max(1e-300) {
            return true;
        }
        last = v;
        lo = hi;
    }
    false
}

/// Tensor-product evaluation of `(1/2) int int sin^2(phi(x) - phi(y)) dx dy`
/// over `[s, t]^2`, with panels chosen from the variation of `phi`.
pub fn det_omega_angle_identity(phi: &dyn Fn(f64) -> f64, s: f64, t: f64) -> Result<f64> {
    if !(t > s) {
        return Ok(0.0);
    }
    let mut panels = Vec::new();
    let mut stack = vec![(s, t, 0u32)];
    while let Some((x, y, d)) = stack.pop() {
        let probes: Vec<f64> = (0..=8).map(|k| phi(x + (y - x) * k as f64 / 8.0)).collect();
        if probes.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("phi on [{x}, {y}]")));
        }
        let lo = probes.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = probes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // small-amplitude oscillations pass the spread test, so phi must
        // also be resolved by the panel rule
        let g = |u: f64, v: f64| {
            quad::gauss7(u, v)
                .iter()
                .map(|&(x, w)| w * phi(x))
                .sum::<f64>()
        };
        let m = 0.5 * (x + y);
        let mismatch = (g(x, y) - g(x, m) - g(m, y)).abs();
        let scale = lo.abs().max(hi.abs());
        let resolved = mismatch <= (y - x) * (1e-11 * (hi - lo) + 1e-15 * scale);
        if (hi - lo <= 0.05 && resolved) || d >= 40 {
            panels.push((x, y));
        } else {
            let m = 0.5 * (x + y);
            stack.push((m, y, d + 1));
            stack.push((x, m, d + 1));
        }
    }
    let mut nodes = Vec::with_capacity(7 * panels.len());
    for &(x, y) in &panels {
        for (u, w) in quad::gauss7(x, y) {
            let v = phi(u);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("phi({u})")));
            }
            nodes.push((v, w));
        }
    }
    let rows = map_ordered(&(0..nodes.len()).collect::<Vec<_>>(), |&i| {
        let (pi, wi) = nodes[i];
        let mut acc = 0.0;
        for &(pj, wj) in &nodes[..i] {
            let d = (pi - pj).sin();
            acc += wj * d * d;
        }
        wi * acc
    });
    // the integrand is symmetric and vanishes on the diagonal
    Ok(rows.iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn linear_angle() -> HamiltonianModel {
        HamiltonianModel::angle(
            0.0,
            PI,
            Phi::new(PhiFamily::Linear {
                slope: 1.0,
                intercept: 0.0,
            }),
            Lowering {
                r_max: 100.0,
                ..Lowering::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let id = HamiltonianModel::identity();
        assert_eq!(id.eval(0.5).unwrap(), SymMat2::IDENTITY);
        assert!(id.eval(1.0).is_err());
        let l = Lowering::default();
        let z = HamiltonianModel::angle(0.0, 1.0, Phi::new(PhiFamily::Constant(0.0)), l.clone())
            .unwrap();
        assert_eq!(z.eval(0.3).unwrap(), SymMat2::diag(1.0, 0.0));
        let q =
            HamiltonianModel::angle(0.0, 1.0, Phi::new(PhiFamily::Constant(FRAC_PI_4)), l).unwrap();
        let v = q.eval(0.9).unwrap();
        assert!(
            (v.a11 - 0.5).abs() < 1e-15
                && (v.a12 - 0.5).abs() < 1e-15
                && (v.a22 - 0.5).abs() < 1e-15
        );
    }

    #[test]
    fn omega_linear_angle_full_period() {
        let m = linear_angle();
        let o = m.omega(0.0, PI).unwrap();
        assert!((o.a11 - PI / 2.0).abs() < 1e-9);
        assert!((o.a22 - PI / 2.0).abs() < 1e-9);
        assert!(o.a12.abs() < 1e-9);
        assert_eq!(m.omega(0.4, 0.4).unwrap(), SymMat2::ZERO);
    }

    #[test]
    fn angle_identity_linear_matches_closed_form() {
        let v = det_omega_angle_identity(&|u| u, 0.0, PI).unwrap();
        assert!((v - PI * PI / 4.0).abs() < 1e-9 * PI * PI);
        assert_eq!(det_omega_angle_identity(&|_| 0.3, 0.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn predicates() {
        let id = HamiltonianModel::identity();
        assert!(id.is_limit_circle() && id.is_definite());
        let rank1 =
            HamiltonianModel::piecewise(vec![0.0, 1.0], vec![SymMat2::projection(0.3)]).unwrap();
        assert!(!rank1.is_definite());
        let two = HamiltonianModel::piecewise(
            vec![0.0, 1.0, 2.0],
            vec![SymMat2::projection(0.0), SymMat2::projection(FRAC_PI_4)],
        )
        .unwrap();
        assert!(two.is_definite());
        let lowering = Lowering {
            cutoff: Some(50.0),
            ..Lowering::default()
        };
        let free = HamiltonianModel::diagonal(
            0.0,
            f64::INFINITY,
            DiagFn::Constant(1.0),
            DiagFn::Constant(1.0),
            lowering,
        )
        .unwrap();
        assert!(!free.is_limit_circle());
        assert_eq!(free.omega(0.0, f64::INFINITY), Err(Error::Unbounded));
    }

    #[test]
    fn rotation_examples() {
        let id = HamiltonianModel::identity();
        let r = id.rotate(0.7).unwrap();
        assert!((r.eval(0.2).unwrap() - SymMat2::IDENTITY).max_abs() < 1e-15);
        let l = Lowering::default();
        let q =
            HamiltonianModel::angle(0.0, 1.0, Phi::new(PhiFamily::Constant(FRAC_PI_4)), l).unwrap();
        let z = q.rotate(FRAC_PI_4).unwrap();
        assert!((z.eval(0.5).unwrap() - SymMat2::diag(1.0, 0.0)).max_abs() < 1e-15);
        let same = q.rotate(0.0).unwrap();
        assert_eq!(same.eval(0.5).unwrap(), q.eval(0.5).unwrap());
    }

    #[test]
    fn trace_normalize_examples() {
        let m = HamiltonianModel::piecewise(vec![0.0, 1.0], vec![SymMat2::diag(2.0, 0.0)]).unwrap();
        let n = m.trace_normalize().unwrap();
        assert_eq!(n.b(), 2.0);
        assert_eq!(n.eval(1.5).unwrap(), SymMat2::diag(1.0, 0.0));
        let m2 = HamiltonianModel::piecewise(
            vec![0.0, 1.0, 3.0],
            vec![SymMat2::diag(1.0, 1.0), SymMat2::projection(0.4)],
        )
        .unwrap();
        let n2 = m2.trace_normalize().unwrap();
        assert_eq!(n2.pieces().nodes(), &[0.0, 2.0, 4.0]);
        let ang = HamiltonianModel::angle(
            1.0,
            2.0,
            Phi::new(PhiFamily::Linear {
                slope: 2.0,
                intercept: 0.0,
            }),
            Lowering {
                r_max: 50.0,
                ..Lowering::default()
            },
        )
        .unwrap();
        let an = ang.trace_normalize().unwrap();
        assert_eq!(an.a(), 0.0);
        assert!((an.eval(0.25).unwrap() - ang.eval(1.25).unwrap()).max_abs() < 1e-15);
    }

    #[test]
    fn zero_trace_pieces_are_absorbed() {
        let mut nodes = vec![0.0, 1.0, 2.0, 3.0];
        let mut vals = vec![SymMat2::IDENTITY, SymMat2::ZERO, SymMat2::diag(2.0, 0.0)];
        clean_zero_trace(&mut nodes, &mut vals);
        assert_eq!(vals.len(), 2);
        let p = Pieces::new(nodes, vals).unwrap();
        assert!((p.total() - SymMat2::diag(3.0, 1.0)).max_abs() < 1e-15);
    }
}
