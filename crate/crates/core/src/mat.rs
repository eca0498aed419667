//! Symmetric 2x2 matrices and compensated sums of them.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Sub};

pub const EPS_PSD: f64 = 1e-12;

/// Symmetric real 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 {
        a11: 0.0,
        a12: 0.0,
        a22: 0.0,
    };
    pub const IDENTITY: SymMat2 = SymMat2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        SymMat2 { a11, a12, a22 }
    }

    pub const fn diag(a11: f64, a22: f64) -> Self {
        SymMat2 { a11, a12: 0.0, a22 }
    }

    /// Rank one projection onto `(cos phi, sin phi)`.
    pub fn projection(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        SymMat2 {
            a11: c * c,
            a12: s * c,
            a22: s * s,
        }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    /// Mixed term of the determinant: `det(A + B) = det A + A.cross(B) + det B`.
    pub fn cross(&self, other: &SymMat2) -> f64 {
        self.a11 * other.a22 + self.a22 * other.a11 - 2.0 * self.a12 * other.a12
    }

    pub fn scale(&self, s: f64) -> Self {
        SymMat2 {
            a11: self.a11 * s,
            a12: self.a12 * s,
            a22: self.a22 * s,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a22.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    /// Positive semidefinite up to `eps` (scaled by the trace for the determinant).
    pub fn is_psd(&self, eps: f64) -> bool {
        let tr = self.trace();
        self.a11 >= -eps && self.a22 >= -eps && self.det() >= -eps * tr * tr
    }

    /// `N H N^{-1}` with `N = [[cos a, sin a], [-sin a, cos a]]`.
    pub fn rotate(&self, alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        let (p, q, r) = (self.a11, self.a12, self.a22);
        SymMat2 {
            a11: c * c * p + 2.0 * c * s * q + s * s * r,
            a12: -c * s * p + (c * c - s * s) * q + c * s * r,
            a22: s * s * p - 2.0 * c * s * q + c * c * r,
        }
    }

    /// `sqrt(det)`, clamped at zero.
    pub fn sqrt_det(&self) -> f64 {
        self.det().max(0.0).sqrt()
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2 {
            a11: self.a11 + o.a11,
            a12: self.a12 + o.a12,
            a22: self.a22 + o.a22,
        }
    }
}

impl AddAssign for SymMat2 {
    fn add_assign(&mut self, o: SymMat2) {
        self.a11 += o.a11;
        self.a12 += o.a12;
        self.a22 += o.a22;
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2 {
            a11: self.a11 - o.a11,
            a12: self.a12 - o.a12,
            a22: self.a22 - o.a22,
        }
    }
}

impl Mul<SymMat2> for f64 {
    type Output = SymMat2;
    fn mul(self, m: SymMat2) -> SymMat2 {
        m.scale(self)
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Double-length accumulator for running sums of `SymMat2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated {
    pub hi: SymMat2,
    pub lo: SymMat2,
}

impl Compensated {
    pub fn add(&mut self, m: SymMat2) {
        let (h11, e11) = two_sum(self.hi.a11, m.a11);
        let (h12, e12) = two_sum(self.hi.a12, m.a12);
        let (h22, e22) = two_sum(self.hi.a22, m.a22);
        self.hi = SymMat2::new(h11, h12, h22);
        self.lo += SymMat2::new(e11, e12, e22);
    }

    /// `self - other`, rounded once at the end.
    pub fn diff(&self, other: &Compensated) -> SymMat2 {
        (self.hi - other.hi) + (self.lo - other.lo)
    }

    pub fn value(&self) -> SymMat2 {
        self.hi + self.lo
    }
}
