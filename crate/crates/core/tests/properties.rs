use std::f64::consts::TAU;

use muskat_core::birkhoff_rott::{self, Domain, FluidParams, SolveMethod, SolverSettings};
use muskat_core::conformal::{self, BranchSpec};
use muskat_core::contour::{self, CurveMode, SampledCurve};
use muskat_core::diagnostics;
use muskat_core::spectral::{self, GridFunction, C64};
use proptest::prelude::*;

const N: usize = 64;

fn band_limited(coeffs: &[(f64, f64)]) -> GridFunction {
    GridFunction::from_fn(N, |a| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (c, s))| c * (k as f64 * a).cos() + s * (k as f64 * a).sin())
            .sum()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..N / 2)
}

fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn combine(a: f64, f: &GridFunction, b: f64, g: &GridFunction) -> GridFunction {
    GridFunction::new(f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect()).unwrap()
}

/// Closed curve `r(α) e^{iα}` with a few smooth radial modes.
fn wavy_loop(n: usize, scale: f64, amp: [f64; 3]) -> SampledCurve {
    SampledCurve::from_fn(CurveMode::Closed, n, |a| {
        let r = 1.0 + amp[0] * (2.0 * a).cos() + amp[1] * (3.0 * a).sin() + amp[2] * a.cos();
        C64::from_polar(scale * r, a)
    })
    .unwrap()
}

fn wavy_graph(n: usize, amp: [f64; 3]) -> SampledCurve {
    SampledCurve::from_fn(CurveMode::GraphPeriodic, n, |a| {
        C64::new(
            a,
            -0.5 + amp[0] * a.cos() + amp[1] * (2.0 * a).sin() + amp[2] * (3.0 * a).cos(),
        )
    })
    .unwrap()
}

fn amps(limit: f64) -> impl Strategy<Value = [f64; 3]> {
    [-limit..limit, -limit..limit, -limit..limit]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multipliers_act_exactly_on_resolved_modes(k in 1i64..(N as i64 / 2), phase in 0.0..TAU) {
        let kf = k as f64;
        let f = GridFunction::from_fn(N, |a| (kf * a + phase).cos()).unwrap();
        let d = GridFunction::from_fn(N, |a| -kf * (kf * a + phase).sin()).unwrap();
        let h = GridFunction::from_fn(N, |a| (kf * a + phase).sin()).unwrap();
        let l = GridFunction::from_fn(N, |a| kf * (kf * a + phase).cos()).unwrap();
        prop_assert!(max_diff(&spectral::deriv(&f), &d) < 1e-12 * kf);
        prop_assert!(max_diff(&spectral::hilbert(&f), &h) < 1e-12);
        prop_assert!(max_diff(&spectral::lambda_op(&f), &l) < 1e-12 * kf);
    }

    #[test]
    fn operators_are_linear(c1 in coeffs(), c2 in coeffs(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let (f, g) = (band_limited(&c1), band_limited(&c2));
        let mix = combine(a, &f, b, &g);
        for op in [spectral::deriv, spectral::hilbert, spectral::lambda_op] {
            let lhs = op(&mix);
            let rhs = combine(a, &op(&f), b, &op(&g));
            prop_assert!(max_diff(&lhs, &rhs) < 1e-12 * (1.0 + lhs.max_abs()));
        }
    }

    #[test]
    fn hilbert_identities(c in coeffs()) {
        let f = band_limited(&c);
        let hh = spectral::hilbert(&spectral::hilbert(&f));
        let centred = GridFunction::new(f.values().iter().map(|v| -(v - f.mean())).collect()).unwrap();
        prop_assert!(max_diff(&hh, &centred) < 1e-12);
        let hd = spectral::hilbert(&spectral::deriv(&f));
        prop_assert!(max_diff(&hd, &spectral::lambda_op(&f)) < 1e-12 * (1.0 + hd.max_abs()));
    }

    #[test]
    fn parseval_matches_the_trapezoid_rule(c in coeffs()) {
        let f = band_limited(&c);
        let trapezoid = f.values().iter().map(|v| v * v).sum::<f64>() * TAU / N as f64;
        let norm = spectral::sobolev_norm(&f, 0);
        prop_assert!((norm * norm - trapezoid).abs() < 1e-12 * trapezoid.max(1e-300));
    }

    #[test]
    fn filter_is_a_projection(c in coeffs(), t in 0.0..0.5f64) {
        let f = band_limited(&c);
        let once = spectral::filter(&f, t);
        prop_assert!(max_diff(&spectral::filter(&once, t), &once) < 1e-15 * (1.0 + f.max_abs()) * N as f64);
    }

    #[test]
    fn conformal_round_trips(re in -1.5..1.5f64, im in -1.5..1.5f64) {
        let zeta = C64::new(re, im);
        let q = conformal::singular_points().points;
        prop_assume!(q.iter().all(|p| (zeta - p).norm() > 0.2));
        let b = BranchSpec::principal();
        let w = conformal::map_P_inv(zeta).unwrap();
        let back = conformal::map_P(w, &b).unwrap();
        prop_assert!((back - zeta).norm().min((back + zeta).norm()) < 1e-12);
        let w2 = conformal::map_P_inv(back).unwrap();
        prop_assert!((w2 - w).norm() < 1e-12);
        let chain = conformal::dP_dw(w, &b).unwrap() * conformal::dP_inv(zeta).unwrap();
        prop_assert!((chain.norm() - 1.0).abs() < 1e-8);
        let (g1, g2) = (conformal::grad_P1_inv(zeta).unwrap(), conformal::grad_P2_inv(zeta).unwrap());
        prop_assert!((g1[0] * g2[0] + g1[1] * g2[1]).abs() < 1e-10);
    }

    #[test]
    fn map_is_two_pi_periodic(re in -3.0..3.0f64, im in -1.0..-0.1f64) {
        let b = BranchSpec::principal();
        let w = C64::new(re, im);
        let p0 = conformal::map_P(w, &b).unwrap();
        let p1 = conformal::map_P(w + C64::new(TAU, 0.0), &b).unwrap();
        prop_assert!((p0 - p1).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn chord_arc_positive_iff_f_finite(a in amps(0.3)) {
        let curve = wavy_loop(64, 1.0, a);
        let c = contour::chord_arc_constant(&curve);
        prop_assert!(c > 0.0);
        prop_assert!(contour::f_functional(&curve).is_finite());
        let translated = curve.displaced(&[TAU; 64], &[0.0; 64]).unwrap();
        prop_assert!((contour::chord_arc_constant(&translated) - c).abs() < 1e-13 * c);
    }

    #[test]
    fn h1_distance_is_a_metric(a in amps(0.2), b in amps(0.2), c in amps(0.2)) {
        let (x, y, z) = (wavy_graph(64, a), wavy_graph(64, b), wavy_graph(64, c));
        let xy = diagnostics::h1_distance(&x, &y).unwrap();
        let yz = diagnostics::h1_distance(&y, &z).unwrap();
        let xz = diagnostics::h1_distance(&x, &z).unwrap();
        prop_assert!(xz <= xy + yz + 1e-14);
        prop_assert_eq!(diagnostics::h1_distance(&x, &x).unwrap(), 0.0);
        prop_assert!((xy - diagnostics::h1_distance(&y, &x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn br_is_linear_in_the_amplitude(a in amps(0.2), s in -2.0..2.0f64) {
        let curve = wavy_loop(64, 1.0, a);
        let w1 = GridFunction::from_fn(64, |t| t.sin()).unwrap();
        let w2 = GridFunction::from_fn(64, |t| (2.0 * t).cos() + 0.5).unwrap();
        let mix = combine(s, &w1, 1.0 - s, &w2);
        let lhs = birkhoff_rott::br_eval(&curve, &mix).unwrap();
        let r1 = birkhoff_rott::br_eval(&curve, &w1).unwrap();
        let r2 = birkhoff_rott::br_eval(&curve, &w2).unwrap();
        for ((l, x), y) in lhs.iter().zip(&r1).zip(&r2) {
            prop_assert!((l - (x * s + y * (1.0 - s))).norm() < 1e-12);
        }
    }

    #[test]
    fn solved_omega_meets_the_residual_contract(a in amps(0.25), tilde in any::<bool>()) {
        let params = FluidParams::new(1.0, 1.0).unwrap();
        let (curve, domain) = if tilde {
            (wavy_loop(128, 0.5, a), Domain::Tilde)
        } else {
            (wavy_graph(128, a), Domain::Physical)
        };
        let sol = birkhoff_rott::solve_omega(&curve, &params, domain, None, &SolverSettings::default()).unwrap();
        let f = birkhoff_rott::omega_forcing(&curve, &params, domain).unwrap();
        let k = birkhoff_rott::br_operator_apply(&curve, &sol.omega).unwrap();
        let residual = sol.omega.values().iter().zip(k.values()).zip(f.values())
            .fold(0.0f64, |m, ((w, k), f)| m.max((w + k - f).abs()));
        prop_assert!(residual < 1e-10);
    }

    #[test]
    fn omega_depends_lipschitz_on_the_curve(a in amps(0.2)) {
        let params = FluidParams::default();
        let settings = SolverSettings::default();
        let base = wavy_graph(128, a);
        let profile = GridFunction::from_fn(128, |t| (2.0 * t).cos()).unwrap();
        let zero = GridFunction::zeros(128).unwrap();
        let omega = |c: &SampledCurve| birkhoff_rott::solve_omega(c, &params, Domain::Physical, None, &settings).unwrap().omega;
        let w0 = omega(&base);
        let change = |eps: f64| {
            let moved = contour::perturb(&base, eps, (&zero, &profile)).unwrap();
            let dw = combine(1.0, &omega(&moved), -1.0, &w0);
            spectral::sobolev_norm(&dw, 0) / diagnostics::h1_distance(&moved, &base).unwrap()
        };
        let (s1, s2) = (change(1e-4), change(1e-5));
        prop_assert!((s1 - s2).abs() < 0.01 * s2);
    }
}

/// The corpus of the second-kind acceptance check: Krylov and Picard agree where
/// both converge.
#[test]
fn krylov_and_picard_agree_on_a_curve_corpus() {
    let params = FluidParams::new(1.0, 1.0).unwrap();
    let picard = SolverSettings {
        method: SolveMethod::Picard,
        max_iterations: 2000,
        ..Default::default()
    };
    let mut agreed = 0;
    for j in 0..20 {
        let t = j as f64 / 20.0;
        let a = [
            0.25 * (7.0 * t).sin(),
            0.2 * (3.0 * t + 1.0).cos(),
            0.1 * (11.0 * t).sin(),
        ];
        let curve = wavy_graph(128, a);
        let k =
            birkhoff_rott::solve_omega(&curve, &params, Domain::Physical, None, &SolverSettings::default()).unwrap();
        assert!(k.residual < 1e-10);
        if let Ok(p) = birkhoff_rott::solve_omega(&curve, &params, Domain::Physical, None, &picard) {
            let diff = combine(1.0, &k.omega, -1.0, &p.omega).max_abs();
            assert!(diff < 1e-8, "curve {j}: {diff}");
            agreed += 1;
        }
    }
    assert!(agreed > 0);
}
