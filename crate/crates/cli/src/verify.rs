//! `cansys verify`: the acceptance checks that apply to one example.

use std::f64::consts::PI;
use std::io::Write;

use cansys::analysis::{estimate_order, GrowthSamples};
use cansys::examples::ExampleSpec;
use cansys::par::map_ordered;
use cansys::partition::{bracket_kappa, kappa, kappa_cap, kappa_grid, theorem3_bounds};
use cansys::spectrum::{eigenvalues, log_w22_imaginary, monodromy, trace_inverse};
use cansys::{CompatiblePair, HamiltonianModel, KernelEval};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::{CliResult, Common, Failure};

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct Report {
    schema_version: u32,
    example: String,
    source: String,
    checks: Vec<Check>,
    pass: bool,
}

struct Ctx<'a> {
    m: &'a HamiltonianModel,
    c: f64,
    grid: Vec<f64>,
    ke: KernelEval<'a>,
}

impl Ctx<'_> {
    fn integral_k(&self, rs: &[f64]) -> CliResult<Vec<f64>> {
        let v = map_ordered(rs, |&r| self.ke.integral_k(r).map(|k| k.total));
        Ok(v.into_iter().collect::<cansys::Result<_>>()?)
    }

    /// Grid points at or above `from`.
    fn upper_grid(&self, from: f64) -> Vec<f64> {
        self.grid
            .iter()
            .copied()
            .filter(|&r| r >= from * (1.0 - 1e-12))
            .collect()
    }
}

fn sandwich(cx: &Ctx) -> CliResult<Check> {
    let ik = cx.integral_k(&cx.grid)?;
    let mut bad = Vec::new();
    for (&r, &v) in cx.grid.iter().zip(&ik) {
        let pr = kappa(cx.m, cx.c, r)?;
        let (lo, hi) = theorem3_bounds(cx.m, &pr);
        if !(lo < v && v < hi) {
            bad.push(format!("{r:e}"));
        }
    }
    Ok(Check {
        name: "kappa_sandwich",
        pass: bad.is_empty(),
        detail: format!(
            "{} grid points, violations at [{}]",
            cx.grid.len(),
            bad.join(", ")
        ),
    })
}

fn partition(cx: &Ctx) -> CliResult<Check> {
    let mut bad = Vec::new();
    for &r in &cx.grid {
        let pr = kappa(cx.m, cx.c, r)?;
        if bracket_kappa(cx.m, cx.c, r, &pr.sigma)? != (pr.kappa, pr.kappa) {
            bad.push(format!("bracket at {r:e}"));
        }
        if pr.kappa > kappa_cap(cx.m, cx.c, r) {
            bad.push(format!("cap at {r:e}"));
        }
        for n in [2usize, 3, 5] {
            if kappa(cx.m, cx.c, n as f64 * r)?.kappa > n * pr.kappa {
                bad.push(format!("subadditivity n={n} at {r:e}"));
            }
        }
    }
    Ok(Check {
        name: "partition_tools",
        pass: bad.is_empty(),
        detail: format!("failures: [{}]", bad.join(", ")),
    })
}

fn det_w(cx: &Ctx) -> CliResult<Check> {
    let zs = [
        C64::new(3.0, 0.0),
        C64::new(-250.0, 0.0),
        C64::new(0.0, 1e4),
        C64::new(40.0, 70.0),
    ];
    let mut worst = 0.0f64;
    for z in zs {
        worst = worst.max(monodromy(cx.m, z)?.det_residual());
    }
    Ok(Check {
        name: "det_w",
        pass: worst <= 1e-8,
        detail: format!("max residual {worst:.2e} (<= 1e-8)"),
    })
}

fn log_cosh(r: f64) -> f64 {
    r + (-2.0 * r).exp().ln_1p() - std::f64::consts::LN_2
}

fn closed_forms(cx: &Ctx) -> CliResult<Check> {
    let sr = eigenvalues(cx.m, 160.0)?;
    let pos: Vec<f64> = sr
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > 0.0)
        .collect();
    let neg: Vec<f64> = sr
        .eigenvalues
        .iter()
        .rev()
        .copied()
        .filter(|&l| l < 0.0)
        .collect();
    let mut eig = if pos.len() < 50 || neg.len() < 50 {
        f64::INFINITY
    } else {
        0.0f64
    };
    for k in 0..pos.len().min(neg.len()).min(50) {
        let l = (k as f64 + 0.5) * PI;
        eig = eig.max((pos[k] - l).abs()).max((neg[k] + l).abs());
    }
    let rs = [10.0, 100.0, 1000.0];
    let ik = cx.integral_k(&rs)?;
    let kern = rs
        .iter()
        .zip(&ik)
        .map(|(r, v)| (v - (r - 0.5)).abs() / (r - 0.5))
        .fold(0.0, f64::max);
    let mut w = 0.0f64;
    for &r in &cx.grid {
        w = w.max((log_w22_imaginary(cx.m, r)? - log_cosh(r)).abs());
    }
    let ks = kappa_grid(cx.m, cx.c, &cx.grid)?;
    let kap = cx
        .grid
        .iter()
        .zip(&ks)
        .all(|(&r, &k)| k.abs_diff((r / cx.c.sqrt()).ceil() as usize) <= 1);
    Ok(Check {
        name: "closed_forms",
        pass: eig <= 1e-8 && kern <= 1e-6 && w <= 1e-6 && kap,
        detail: format!("eigenvalues {eig:.2e}, int K {kern:.2e}, log|w22| {w:.2e}, kappa within ceil(r)+-1: {kap}"),
    })
}

fn trace(cx: &Ctx) -> CliResult<Check> {
    let tr = trace_inverse(cx.m)?;
    let sum: f64 = eigenvalues(cx.m, 1e3)?
        .eigenvalues
        .iter()
        .map(|l| 1.0 / l)
        .sum();
    Ok(Check {
        name: "trace_inverse",
        pass: (tr + 0.5).abs() <= 1e-10 && (sum - tr).abs() <= 1e-2,
        detail: format!("tr A^-1 = {tr}, sum 1/lambda (R = 1e3) = {sum}"),
    })
}

fn slope_check(
    name: &'static str,
    grid: &[f64],
    vals: Vec<f64>,
    target: f64,
    tol: f64,
) -> CliResult<Check> {
    let gs = GrowthSamples::new(name, grid.to_vec(), vals)?;
    let s = estimate_order(&gs, 1.0)?.slope;
    Ok(Check {
        name,
        pass: (s - target).abs() <= tol,
        detail: format!("slope {s:.4}, expected {target:.4} +- {tol}"),
    })
}

fn spread_check(name: &'static str, grid: &[f64], vals: &[f64], f: impl Fn(f64) -> f64) -> Check {
    let q: Vec<f64> = grid.iter().zip(vals).map(|(&r, &v)| v / f(r)).collect();
    let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = hi / lo;
    Check {
        name,
        pass: q.len() >= 2 && spread <= 4.0,
        detail: format!("ratio spread {spread:.3} (<= 4)"),
    }
}

fn growth_checks(cx: &Ctx, spec: &ExampleSpec) -> CliResult<Vec<Check>> {
    let g = spec.predicted_growth();
    let grid = cx.upper_grid(100.0);
    let mut out = Vec::new();
    match spec {
        ExampleSpec::InversePower { rho } => {
            let vals = map_ordered(&grid, |&r| log_w22_imaginary(cx.m, r));
            let vals = vals.into_iter().collect::<cansys::Result<Vec<_>>>()?;
            out.push(slope_check("w22_slope", &grid, vals, *rho, 0.07)?);
        }
        ExampleSpec::Chirp { .. }
        | ExampleSpec::Weierstrass { .. }
        | ExampleSpec::StackedIndivisible => {
            let ks: Vec<f64> = kappa_grid(cx.m, cx.c, &grid)?
                .into_iter()
                .map(|k| k as f64)
                .collect();
            if g.kappa.log_power == 0.0 {
                let tol = if g.kappa.index == 0.5 { 0.05 } else { 0.07 };
                out.push(slope_check("kappa_slope", &grid, ks, g.kappa.index, tol)?);
            } else {
                out.push(spread_check("kappa_ratio", &grid, &ks, |r| g.kappa.eval(r)));
                if g.integral != g.kappa {
                    let ik = cx.integral_k(&grid)?;
                    out.push(spread_check("integral_ratio", &grid, &ik, |r| {
                        g.integral.eval(r)
                    }));
                }
            }
        }
        _ => {}
    }
    Ok(out)
}

pub fn cmd_verify(cfg: &Common, as_example: Option<&str>) -> CliResult<()> {
    let name = match (as_example, &cfg.example) {
        (Some(n), _) => n.to_string(),
        (None, Some(n)) => n.clone(),
        (None, None) => return Err(Failure::Input("verify needs --example or --as NAME".into())),
    };
    let spec: ExampleSpec = name.parse()?;
    let m = cfg.load()?;
    let pair = CompatiblePair::new(&m, cfg.c)?;
    let from = cfg.rmin.max(2.0 * pair.r0());
    let grid: Vec<f64> = cfg.grid()?.into_iter().filter(|&r| r >= from).collect();
    if grid.is_empty() {
        return Err(Failure::Input(format!(
            "no grid points above max(rmin, 2 r0) = {from}"
        )));
    }
    let cx = Ctx {
        m: &m,
        c: cfg.c,
        grid,
        ke: KernelEval::new(pair).with_tolerance(cfg.tol_quad, cansys::kernel::ABS_K),
    };

    let mut checks = vec![sandwich(&cx)?, partition(&cx)?, det_w(&cx)?];
    match spec {
        ExampleSpec::Identity => checks.push(closed_forms(&cx)?),
        ExampleSpec::TwoAngle { .. } if spec == ExampleSpec::two_angle_default() => {
            checks.push(trace(&cx)?)
        }
        _ => {}
    }
    checks.extend(growth_checks(&cx, &spec)?);

    let pass = checks.iter().all(|c| c.pass);
    let source = match &cfg.model {
        Some(p) => p.display().to_string(),
        None => "example".to_string(),
    };
    let report = Report {
        schema_version: 1,
        example: spec.to_string(),
        source,
        checks,
        pass,
    };
    let mut out = cfg.output()?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    out.flush()?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Numeric(format!(
            "{} failed verification",
            report.example
        )))
    }
}
