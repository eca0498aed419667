use cansys::partition::{cut_out, kappa, kappa_cap};
use cansys::spectrum::{counting_function, fundamental_solution, log_w22_imaginary, monodromy};
use cansys::{CompatiblePair, HamiltonianModel, SymMat2};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn psd() -> impl Strategy<Value = SymMat2> {
    (0.0..2.0f64, 0.0..2.0f64, -1.0..1.0f64)
        .prop_map(|(a, d, rho)| SymMat2::new(a, rho * (a * d).sqrt(), d))
}

/// Piecewise-constant model that is definite thanks to one identity piece.
fn model() -> impl Strategy<Value = HamiltonianModel> {
    (
        prop::collection::vec((0.05..1.5f64, psd()), 1..7),
        0usize..7,
    )
        .prop_map(|(mut pieces, at)| {
            let at = at.min(pieces.len());
            pieces.insert(at, (0.3, SymMat2::IDENTITY));
            let mut nodes = vec![0.0];
            for (w, _) in &pieces {
                nodes.push(nodes.last().unwrap() + w);
            }
            HamiltonianModel::piecewise(nodes, pieces.into_iter().map(|p| p.1).collect()).unwrap()
        })
}

fn three_points(m: &HamiltonianModel, u: [f64; 3]) -> (f64, f64, f64) {
    let (a, b) = (m.a(), m.b());
    let mut x = u.map(|v| a + v * (b - a));
    x.sort_by(f64::total_cmp);
    (x[0], x[1], x[2])
}

fn close(a: &SymMat2, b: &SymMat2, tol: f64) -> bool {
    (*a - *b).max_abs() <= tol * (1.0 + a.max_abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega_is_additive(m in model(), u in prop::array::uniform3(0.0..1.0f64)) {
        let (s, t, v) = three_points(&m, u);
        let whole = m.omega(s, v).unwrap();
        let split = m.omega(s, t).unwrap() + m.omega(t, v).unwrap();
        prop_assert!(close(&whole, &split, 1e-12));
    }

    #[test]
    fn det_omega_is_monotone_and_superadditive(m in model(), u in prop::array::uniform3(0.0..1.0f64)) {
        let (s, t, v) = three_points(&m, u);
        let (d1, d2, d) = (m.det_omega(s, t).unwrap(), m.det_omega(t, v).unwrap(), m.det_omega(s, v).unwrap());
        let tol = 1e-12 * m.omega(s, v).unwrap().trace().powi(2);
        prop_assert!(d1 <= d + tol && d2 <= d + tol);
        prop_assert!(d1.max(0.0).sqrt() + d2.max(0.0).sqrt() <= d.max(0.0).sqrt() + tol.sqrt());
    }

    #[test]
    fn rotation_preserves_det_and_kappa(m in model(), alpha in -3.0..3.0f64, r in 2.0..200.0f64, u in prop::array::uniform3(0.0..1.0f64)) {
        let rot = m.rotate(alpha).unwrap();
        let (s, _, v) = three_points(&m, u);
        let (d0, d1) = (m.det_omega(s, v).unwrap(), rot.det_omega(s, v).unwrap());
        prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + d0));
        let r = r * CompatiblePair::new(&m, 1.0).unwrap().r0();
        prop_assert!(kappa(&m, 1.0, r).unwrap().kappa.abs_diff(kappa(&rot, 1.0, r).unwrap().kappa) <= 1);
    }

    #[test]
    fn compatible_pair_is_monotone(m in model(), f in 1.5..50.0f64, g in 1.01..3.0f64, u in 0.0..1.0f64) {
        let pair = CompatiblePair::new(&m, 1.0).unwrap();
        let r = f * pair.r0();
        let (t1, t2) = (pair.t_hat(r).unwrap(), pair.t_hat(g * r).unwrap());
        prop_assert!(t2 <= t1);
        let t = t1 + u * (m.b() - t1);
        let t_later = t + 0.5 * (m.b() - t);
        let s = pair.s_hat(t, r).unwrap();
        prop_assert!(pair.s_hat(t_later, r).unwrap() >= s - 1e-12);
        prop_assert!(pair.s_hat(t, g * r).unwrap() >= s - 1e-12);
        prop_assert!(s < t);
    }

    #[test]
    fn kappa_monotone_capped_and_rescalable(m in model(), f in 1.0..100.0f64, g in 1.0..4.0f64, c in 0.1..10.0f64) {
        let r = f * CompatiblePair::new(&m, 1.0).unwrap().r0();
        let k = kappa(&m, 1.0, r).unwrap().kappa;
        prop_assert!(kappa(&m, 1.0, g * r).unwrap().kappa >= k);
        prop_assert!(k <= kappa_cap(&m, 1.0, r));
        let scaled = kappa(&m, c, r).unwrap().kappa;
        prop_assert!(scaled.abs_diff(kappa(&m, 1.0, r / c.sqrt()).unwrap().kappa) <= 1);
    }

    #[test]
    fn kappa_survives_trace_normalization(m in model(), f in 1.0..100.0f64) {
        let r = f * CompatiblePair::new(&m, 1.0).unwrap().r0();
        let n = m.trace_normalize().unwrap();
        prop_assert!(kappa(&m, 1.0, r).unwrap().kappa.abs_diff(kappa(&n, 1.0, r).unwrap().kappa) <= 1);
    }

    #[test]
    fn transfer_matrix_has_unit_det_and_real_symmetry(m in model(), re in -300.0..300.0f64, im in -300.0..300.0f64, u in 0.0..1.0f64) {
        let z = C64::new(re, im);
        let w = monodromy(&m, z).unwrap();
        prop_assert!(w.det_residual() <= 1e-8);
        let x = m.a() + u * (m.b() - m.a());
        prop_assert!(fundamental_solution(&m, x, z).unwrap().det_residual() <= 1e-8);
        let wc = monodromy(&m, z.conj()).unwrap().conj();
        for i in 0..2 {
            for j in 0..2 {
                let (p, q) = (w.w[i][j], wc.w[i][j]);
                prop_assert!((p - q).norm() <= 1e-12 * (1.0 + p.norm()));
            }
        }
        prop_assert!((w.logscale - wc.logscale).abs() <= 1e-12 * (1.0 + w.logscale));
    }

    #[test]
    fn counting_bounded_by_growth(m in model(), r in 0.5..300.0f64) {
        let n = counting_function(&m, r).unwrap() as f64;
        let lw = log_w22_imaginary(&m, r).unwrap();
        prop_assert!(n <= 2.0 / std::f64::consts::LN_2 * lw + 1e-9);
    }

    #[test]
    fn cut_out_never_raises_kappa(m in model(), u in prop::array::uniform3(0.0..1.0f64), f in 1.0..100.0f64) {
        let (x, y, _) = three_points(&m, u);
        prop_assume!(y > x);
        let cut = cut_out(&m, &[(m.a(), x), (y, m.b())]).unwrap();
        prop_assume!(cut.is_definite());
        let r = f * CompatiblePair::new(&m, 1.0).unwrap().r0();
        prop_assert!(kappa(&cut, 1.0, r).unwrap().kappa <= kappa(&m, 1.0, r).unwrap().kappa);
    }
}
