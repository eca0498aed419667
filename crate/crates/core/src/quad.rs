//! Adaptive Gauss–Kronrod (7/15) quadrature for small vector-valued integrands.

#![allow(clippy::excessive_precision)]

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One G7K15 panel: (Kronrod value, |Kronrod - Gauss|).
pub fn gk15<const N: usize, F>(f: &mut F, a: f64, b: f64) -> ([f64; N], f64)
where
    F: FnMut(f64) -> [f64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(c);
    for i in 0..N {
        k[i] = WGK[7] * fc[i];
        g[i] = WG[3] * fc[i];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..N {
        k[i] *= h;
        g[i] *= h;
        err = err.max((k[i] - g[i]).abs());
    }
    (k, err)
}

/// Adaptive integration of `f` over `[a, b]`. A panel is accepted when its
/// error estimate is below `max(rel * |panel|, abs * width / (b - a))`.
pub fn integrate<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    rel: f64,
    abs: f64,
    max_depth: u32,
) -> QuadResult<N>
where
    F: FnMut(f64) -> [f64; N],
{
    let mut value = [0.0; N];
    let mut error = 0.0;
    let mut evals = 0;
    let mut converged = true;
    if !(b > a) {
        return QuadResult {
            value,
            error,
            evals,
            converged,
        };
    }
    let width = b - a;
    let mut stack: Vec<(f64, f64, u32)> = vec![(a, b, 0)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(&mut f, lo, hi);
        evals += 15;
        let tol = (rel * norm(&v)).max(abs * (hi - lo) / width);
        if e <= tol || depth >= max_depth || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs())
        {
            if e > tol {
                converged = false;
            }
            for i in 0..N {
                value[i] += v[i];
            }
            error += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    QuadResult {
        value,
        error,
        evals,
        converged,
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, rel: f64, abs: f64) -> QuadResult<1>
where
    F: FnMut(f64) -> f64,
{
    integrate(|x| [f(x)], a, b, rel, abs, 48)
}

/// Seven-point Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss7(a: f64, b: f64) -> [(f64, f64); 7] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    [
        (c - h * XGK[1], h * WG[0]),
        (c - h * XGK[3], h * WG[1]),
        (c - h * XGK[5], h * WG[2]),
        (c, h * WG[3]),
        (c + h * XGK[5], h * WG[2]),
        (c + h * XGK[3], h * WG[1]),
        (c + h * XGK[1], h * WG[0]),
    ]
}
