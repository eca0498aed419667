//! Example Hamiltonians with known growth of `kappa_H` and `int K_H`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, Lowering, Phi, PhiFamily};
use crate::mat::SymMat2;

/// Oscillation fraction used for the homogenized head: the local period at
/// `a'` is this fraction of `1 / r_max`.
pub const HEAD_FRACTION: f64 = 0.05;
/// Number of indivisible pairs kept by `stacked_indivisible`.
pub const STACK_PAIRS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ExampleSpec {
    Identity,
    Chirp {
        gamma: f64,
        beta: f64,
    },
    Weierstrass {
        alpha: f64,
        beta: f64,
        terms: usize,
    },
    StackedIndivisible,
    InversePower {
        rho: f64,
    },
    TwoAngle {
        phi1: f64,
        phi2: f64,
        l1: f64,
        l2: f64,
    },
}

/// Growth `r^index (log r)^log_power`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Growth {
    pub index: f64,
    pub log_power: f64,
}

impl Growth {
    pub const fn new(index: f64, log_power: f64) -> Self {
        Growth { index, log_power }
    }

    pub fn eval(&self, r: f64) -> f64 {
        r.powf(self.index) * r.ln().powf(self.log_power)
    }
}

/// Predicted growth of `kappa_H(r)` and of `int K_H(t; r) dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PredictedGrowth {
    pub kappa: Growth,
    pub integral: Growth,
}

impl ExampleSpec {
    /// Weierstrass angle with enough terms for dyadic levels up to `m_max`.
    pub fn weierstrass(alpha: f64, beta: f64, m_max: usize) -> Self {
        ExampleSpec::Weierstrass {
            alpha,
            beta,
            terms: m_max + 3,
        }
    }

    pub fn two_angle_default() -> Self {
        ExampleSpec::TwoAngle {
            phi1: 0.0,
            phi2: PI / 4.0,
            l1: 1.0,
            l2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Model(msg));
        match *self {
            ExampleSpec::Chirp { gamma, beta } => {
                if gamma == 0.0 && beta == 0.0 {
                    return bad("chirp needs (gamma, beta) != (0, 0)".into());
                }
                if !(beta > 0.0) || !(beta + 1.0 - gamma.min(0.0) > 0.0) || !gamma.is_finite() {
                    return bad(format!(
                        "chirp needs beta > 0 (got gamma={gamma}, beta={beta})"
                    ));
                }
            }
            ExampleSpec::Weierstrass { alpha, beta, terms } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return bad(format!("weierstrass needs 0 < alpha < 1, got {alpha}"));
                }
                if beta.fract() != 0.0 || beta % 2.0 != 0.0 || beta < 2.0 {
                    return bad(format!(
                        "weierstrass needs an even integer beta, got {beta}"
                    ));
                }
                if !(alpha * beta > 1.0 + PI / 2.0) {
                    return bad(format!(
                        "weierstrass needs alpha beta > 1 + pi/2, got {}",
                        alpha * beta
                    ));
                }
                if terms == 0 {
                    return bad("weierstrass needs at least one term".into());
                }
            }
            ExampleSpec::InversePower { rho } => {
                if !(rho > 0.5 && rho < 1.0) {
                    return bad(format!("inverse_power needs 1/2 < rho < 1, got {rho}"));
                }
            }
            ExampleSpec::TwoAngle { phi1, phi2, l1, l2 } => {
                if !(l1 > 0.0 && l2 > 0.0) || !phi1.is_finite() || !phi2.is_finite() {
                    return bad("two_angle needs positive lengths".into());
                }
            }
            ExampleSpec::Identity | ExampleSpec::StackedIndivisible => {}
        }
        Ok(())
    }

    /// Left cutoff `a'` below which the angle is homogenized, for a table
    /// resolving `r <= r_max`.
    pub fn left_cutoff(&self, r_max: f64) -> Option<f64> {
        self.family()
            .and_then(|f| angle_hints(&f, 0.0, 1.0, r_max).0)
    }

    fn family(&self) -> Option<PhiFamily> {
        match *self {
            ExampleSpec::Chirp { gamma, beta } => Some(PhiFamily::Chirp { gamma, beta }),
            ExampleSpec::Weierstrass { alpha, beta, terms } => {
                Some(PhiFamily::Weierstrass { alpha, beta, terms })
            }
            ExampleSpec::InversePower { rho } => Some(PhiFamily::Power {
                exponent: rho / (rho - 1.0),
            }),
            _ => None,
        }
    }

    pub fn build(&self, r_max: f64) -> Result<HamiltonianModel> {
        self.validate()?;
        if !(r_max > 1.0) || !r_max.is_finite() {
            return Err(Error::Precondition(format!(
                "r_max must exceed 1, got {r_max}"
            )));
        }
        let lowering = Lowering {
            r_max,
            head: self.left_cutoff(r_max),
            grid_depth: self.grid_depth(),
            ..Default::default()
        };
        match *self {
            ExampleSpec::Identity => Ok(HamiltonianModel::identity()),
            ExampleSpec::Chirp { gamma, beta } => HamiltonianModel::angle(
                0.0,
                1.0,
                Phi::new(PhiFamily::Chirp { gamma, beta }),
                lowering,
            ),
            ExampleSpec::Weierstrass { alpha, beta, terms } => HamiltonianModel::angle(
                0.0,
                1.0,
                Phi::new(PhiFamily::Weierstrass { alpha, beta, terms }),
                lowering,
            ),
            ExampleSpec::InversePower { rho } => HamiltonianModel::angle(
                0.0,
                1.0,
                Phi::new(PhiFamily::Power {
                    exponent: rho / (rho - 1.0),
                }),
                lowering,
            ),
            ExampleSpec::StackedIndivisible => stacked_indivisible(STACK_PAIRS),
            ExampleSpec::TwoAngle { phi1, phi2, l1, l2 } => HamiltonianModel::piecewise(
                vec![0.0, l1, l1 + l2],
                vec![SymMat2::projection(phi1), SymMat2::projection(phi2)],
            ),
        }
    }

    pub fn predicted_growth(&self) -> PredictedGrowth {
        let same = |g: Growth| PredictedGrowth {
            kappa: g,
            integral: g,
        };
        match *self {
            ExampleSpec::Identity => same(Growth::new(1.0, 0.0)),
            ExampleSpec::Chirp { gamma, beta } => {
                let g = if beta < gamma + 1.0 {
                    Growth::new(0.5, 0.0)
                } else if beta == gamma + 1.0 {
                    Growth::new(0.5, 1.0)
                } else if gamma >= 0.0 {
                    Growth::new(beta / (beta + gamma + 1.0), 0.0)
                } else {
                    Growth::new((beta - gamma) / (beta - gamma + 1.0), 0.0)
                };
                same(g)
            }
            ExampleSpec::Weierstrass { alpha, beta, .. } => {
                let nu = -alpha.ln() / beta.ln();
                same(Growth::new(1.0 / (1.0 + nu), 0.0))
            }
            ExampleSpec::StackedIndivisible => PredictedGrowth {
                kappa: Growth::new(0.0, 1.0),
                integral: Growth::new(0.0, 2.0),
            },
            ExampleSpec::InversePower { rho } => same(Growth::new(rho, 0.0)),
            ExampleSpec::TwoAngle { .. } => same(Growth::new(0.0, 0.0)),
        }
    }

    fn grid_depth(&self) -> Option<u32> {
        self.family().and_then(|f| angle_hints(&f, 0.0, 1.0, 2.0).1)
    }

    /// Hölder exponent of the angle, where one is part of the example.
    pub fn holder_exponent(&self) -> Option<f64> {
        match *self {
            ExampleSpec::Weierstrass { alpha, beta, .. } => Some(-alpha.ln() / beta.ln()),
            _ => None,
        }
    }
}

impl fmt::Display for ExampleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExampleSpec::Identity => write!(f, "identity"),
            ExampleSpec::Chirp { gamma, beta } => write!(f, "chirp({gamma},{beta})"),
            ExampleSpec::Weierstrass { alpha, beta, terms } => {
                write!(f, "weierstrass({alpha},{beta},{terms})")
            }
            ExampleSpec::StackedIndivisible => write!(f, "stacked_indivisible"),
            ExampleSpec::InversePower { rho } => write!(f, "inverse_power({rho})"),
            ExampleSpec::TwoAngle { phi1, phi2, l1, l2 } => {
                write!(f, "two_angle({phi1},{phi2},{l1},{l2})")
            }
        }
    }
}

/// Lowering hints for an angle on `[a, b)` at resolution `r_max`.
///
/// A family oscillating without bound at `a = 0` gets the head cutoff `a'`,
/// where the local period is `HEAD_FRACTION / r_max`. A Weierstrass sum gets a
/// cell depth such that cells of one initial panel (1/64 of the interval) are
/// no longer than half a period of the fastest cosine.
pub fn angle_hints(family: &PhiFamily, a: f64, b: f64, r_max: f64) -> (Option<f64>, Option<u32>) {
    let cut = |speed_exp: f64| {
        (speed_exp * HEAD_FRACTION / (2.0 * PI * r_max)).powf(1.0 / (speed_exp + 1.0))
    };
    match *family {
        PhiFamily::Chirp { gamma, beta } if a == 0.0 && beta > 0.0 => (
            Some(cut(if gamma >= 0.0 { beta } else { beta - gamma })),
            None,
        ),
        PhiFamily::Power { exponent } if a == 0.0 && exponent < 0.0 => (Some(cut(-exponent)), None),
        PhiFamily::Weierstrass { beta, terms, .. } => {
            let top = beta.powi(terms as i32 - 1) * (b - a);
            (None, Some((top / 64.0).log2().ceil().max(0.0) as u32))
        }
        _ => (None, None),
    }
}

/// Parses `identity`, `chirp(g,b)`, `weierstrass(a,b[,N])`,
/// `stacked_indivisible`, `inverse_power(rho)` and `two_angle[(p1,p2,l1,l2)]`.
impl FromStr for ExampleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], &s[i + 1..s.len() - 1]),
            Some(_) => return Err(Error::Model(format!("unbalanced parentheses in '{s}'"))),
            None => (s, ""),
        };
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Model(format!("bad number '{x}' in '{s}'")))
                })
                .collect::<Result<_>>()?
        };
        let need = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Model(format!(
                    "'{name}' takes {n} arguments, got {}",
                    nums.len()
                )))
            }
        };
        let spec = match name {
            "identity" => {
                need(0)?;
                ExampleSpec::Identity
            }
            "chirp" => {
                need(2)?;
                ExampleSpec::Chirp {
                    gamma: nums[0],
                    beta: nums[1],
                }
            }
            "weierstrass" => match nums.len() {
                2 => ExampleSpec::weierstrass(nums[0], nums[1], 6),
                3 => ExampleSpec::Weierstrass {
                    alpha: nums[0],
                    beta: nums[1],
                    terms: nums[2] as usize,
                },
                n => {
                    return Err(Error::Model(format!(
                        "'weierstrass' takes 2 or 3 arguments, got {n}"
                    )))
                }
            },
            "stacked_indivisible" => {
                need(0)?;
                ExampleSpec::StackedIndivisible
            }
            "inverse_power" => {
                need(1)?;
                ExampleSpec::InversePower { rho: nums[0] }
            }
            "two_angle" if nums.is_empty() => ExampleSpec::two_angle_default(),
            "two_angle" => {
                need(4)?;
                ExampleSpec::TwoAngle {
                    phi1: nums[0],
                    phi2: nums[1],
                    l1: nums[2],
                    l2: nums[3],
                }
            }
            _ => return Err(Error::Model(format!("unknown example '{name}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `diag(1,0)` on `(e^-(2n+1), e^-2n]` and `diag(0,1)` on `(e^-(2n+2), e^-(2n+1)]`
/// for `n < pairs`, with the exact average on `[0, e^-2pairs]`.
fn stacked_indivisible(pairs: usize) -> Result<HamiltonianModel> {
    let m = 2 * pairs;
    let mut nodes = Vec::with_capacity(m + 2);
    let mut vals = Vec::with_capacity(m + 1);
    nodes.push(0.0);
    vals.push(SymMat2::diag(E / (E + 1.0), 1.0 / (E + 1.0)));
    for k in (0..m).rev() {
        nodes.push((-((k + 1) as f64)).exp());
        vals.push(if k % 2 == 0 {
            SymMat2::diag(1.0, 0.0)
        } else {
            SymMat2::diag(0.0, 1.0)
        });
    }
    nodes.push(1.0);
    HamiltonianModel::piecewise(nodes, vals)
}

/// Empirical Hölder constant `max |phi(x) - phi(y)| / |x - y|^nu` over pairs at
/// dyadic distances `2^-j`, `j < levels`, with `per_level` base points each.
pub fn holder_constant(
    phi: &dyn Fn(f64) -> f64,
    nu: f64,
    a: f64,
    b: f64,
    levels: u32,
    per_level: usize,
) -> f64 {
    let mut eta = 0.0f64;
    for j in 0..levels {
        let h = (b - a) * 0.5f64.powi(j as i32);
        let n = per_level.max(1);
        for i in 0..n {
            let x = a + (b - a - h) * (i as f64 + 0.5) / n as f64;
            eta = eta.max((phi(x + h) - phi(x)).abs() / h.powf(nu));
        }
    }
    eta
}

/// `osc / (2 sqrt(lip)) * r^(1/2)` once `r >= max(lip / osc^2, lip)`; the
/// accompanying partition constant is `c = 1/16`.
pub fn lipschitz_floor(osc: f64, lip: f64, r: f64) -> Option<f64> {
    if !(osc > 0.0 && lip > 0.0) {
        return None;
    }
    let threshold = (lip / (osc * osc)).max(lip);
    (r >= threshold).then(|| osc / (2.0 * lip.sqrt()) * r.sqrt())
}

/// Right-hand side `4(1+nu)(b-a)(eta / 2 sqrt c)^{1/(1+nu)} r^{1/(1+nu)}`
/// bounding `int_{t_hat}^b K` for a Hölder angle.
pub fn holder_ceiling(nu: f64, eta: f64, length: f64, c: f64, r: f64) -> f64 {
    let e = 1.0 / (1.0 + nu);
    4.0 * (1.0 + nu) * length * (eta / (2.0 * c.sqrt())).powf(e) * r.powf(e)
}
