use std::f64::consts::LN_2;

use cansys::analysis::{
    convergence_class_test, estimate_order, log_grid, ratio_stability_report, GrowthSamples, Trend,
};
use cansys::examples::ExampleSpec;
use cansys::partition::kappa_grid;
use cansys::spectrum::log_w22_imaginary;
use cansys::{CompatiblePair, HamiltonianModel, KernelEval};

const SHIPPED: [&str; 8] = [
    "identity",
    "chirp(0,2)",
    "chirp(1,1)",
    "chirp(0,1)",
    "weierstrass(0.5,6)",
    "stacked_indivisible",
    "inverse_power(0.75)",
    "two_angle",
];

fn build(name: &str, res: f64) -> HamiltonianModel {
    name.parse::<ExampleSpec>().unwrap().build(res).unwrap()
}

fn slope(grid: &[f64], vals: Vec<f64>) -> f64 {
    estimate_order(&GrowthSamples::new("x", grid.to_vec(), vals).unwrap(), 1.0)
        .unwrap()
        .slope
}

fn kappas(m: &HamiltonianModel, grid: &[f64]) -> Vec<f64> {
    kappa_grid(m, 1.0, grid)
        .unwrap()
        .into_iter()
        .map(|k| k as f64)
        .collect()
}

fn integrals(m: &HamiltonianModel, grid: &[f64]) -> Vec<f64> {
    let ke = KernelEval::new(CompatiblePair::new(m, 1.0).unwrap());
    grid.iter()
        .map(|&r| ke.integral_k(r).unwrap().total)
        .collect()
}

/// Log growth only flattens out at large r: the local slope of log r is 1/ln r.
fn fit_window(name: &str) -> (f64, f64, usize) {
    match name {
        "stacked_indivisible" | "two_angle" => (1e9, 1e15, 4),
        _ => (1e2, 1e4, 10),
    }
}

#[test]
fn identity_kappa_order_is_one() {
    let g = log_grid(1e2, 1e4, 10);
    let s = slope(&g, kappas(&HamiltonianModel::identity(), &g));
    assert!((s - 1.0).abs() <= 0.01, "slope {s}");
}

#[test]
fn weierstrass_kappa_order() {
    let m = build("weierstrass(0.5,6)", 1e5);
    let g = log_grid(1e2, 1e5, 10);
    let s = slope(&g, kappas(&m, &g));
    let target = 6f64.ln() / 12f64.ln();
    assert!((s - target).abs() <= 0.05, "slope {s}, target {target}");
}

#[test]
fn stacked_kappa_order_is_zero() {
    let m = build("stacked_indivisible", 1e4);
    let g = log_grid(1e6, 1e12, 4);
    let s = slope(&g, kappas(&m, &g));
    assert!(s.abs() <= 0.05, "slope {s}");
}

#[test]
fn kappa_and_integral_orders_agree() {
    for name in SHIPPED {
        let m = build(name, 1e4);
        let (lo, hi, per) = fit_window(name);
        let g = log_grid(lo, hi, per);
        let (sk, si) = (slope(&g, kappas(&m, &g)), slope(&g, integrals(&m, &g)));
        assert!((sk - si).abs() <= 0.05, "{name}: kappa {sk}, int K {si}");
    }
}

#[test]
fn krein_de_branges_window() {
    for name in SHIPPED {
        let m = build(name, 1e4);
        let p = m.pieces();
        let root_det: f64 = p
            .nodes()
            .windows(2)
            .zip(p.values())
            .map(|(w, v)| (w[1] - w[0]) * v.det().max(0.0).sqrt())
            .sum();
        let upper = 4.0 * p.total().det().sqrt();
        let ke = KernelEval::new(CompatiblePair::new(&m, 1.0).unwrap());
        for r in log_grid(1e3, 1e4, 5) {
            let right = ke.integral_k(r).unwrap().right / r;
            assert!(right <= upper, "{name} at {r}: {right} > {upper}");
            assert!(
                right >= root_det * LN_2,
                "{name} at {r}: {right} < {}",
                root_det * LN_2
            );
        }
    }
}

#[test]
fn identity_growth_matches_integral() {
    let m = HamiltonianModel::identity();
    let g = log_grid(1e3, 1e5, 5);
    let w: Vec<f64> = g
        .iter()
        .map(|&r| log_w22_imaginary(&m, r).unwrap())
        .collect();
    let num = GrowthSamples::new("log|w22|", g.clone(), w).unwrap();
    let den = GrowthSamples::new("int K", g.clone(), integrals(&m, &g)).unwrap();
    let rep = ratio_stability_report(&num, &den, 1.02).unwrap();
    assert!(!rep.drift && (rep.max - 1.0).abs() < 0.02, "{rep:?}");
}

#[test]
fn stacked_integral_is_log_squared() {
    let m = build("stacked_indivisible", 1e4);
    let g = log_grid(1e2, 1e6, 4);
    let num = GrowthSamples::new("int K", g.clone(), integrals(&m, &g)).unwrap();
    let den = GrowthSamples::new(
        "log^2",
        g.clone(),
        g.iter().map(|r| r.ln().powi(2)).collect(),
    )
    .unwrap();
    let rep = ratio_stability_report(&num, &den, 4.0).unwrap();
    assert!(!rep.drift, "{rep:?}");
    let conv = convergence_class_test(&m, 1.0, 1.0, 1e6, 5).unwrap();
    assert_eq!(conv.trend, Trend::Converging);
}
