use std::f64::consts::{PI, TAU};

use outer_billiard::billiard::{BilliardMap, PhasePoint};
use outer_billiard::curve::{presets, ConvexCurve};
use outer_billiard::generating::{angles_to_chord, chord_to_angles, s_derivatives, ChordCoords, CHART_TOL};
use outer_billiard::geometry::wrap_angle;
use outer_billiard::jacobi::{build_window, hessian_minimality, propagate_jacobi, MinimalityVerdict};
use outer_billiard::rigidity::{i_closed, i_numeric, integrand, q_integral, rigidity_report, NumericSettings, ReportSettings};
use proptest::prelude::*;

fn preset(index: usize) -> ConvexCurve {
    presets::all().swap_remove(index % 3).1
}

/// Small perturbations of the unit circle in harmonics 2..=4; always strictly convex.
fn wobbly_curve() -> impl Strategy<Value = ConvexCurve> {
    (prop::collection::vec(-0.02..0.02f64, 3), prop::collection::vec(-0.02..0.02f64, 3)).prop_map(|(c, s)| {
        let cos = [vec![0.0], c].concat();
        let sin = [vec![0.0], s].concat();
        ConvexCurve::fourier(1.0, cos, sin).expect("small harmonics keep the curve convex")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrand_split_is_exact(k in 0usize..3, phi in 0.0..TAU, t in 1e-4..1e3f64) {
        let e = integrand(&preset(k), phi, t).decomposition_error();
        prop_assert!(e < 1e-10, "split error {e:e}");
    }

    #[test]
    fn chart_round_trip(k in 0usize..3, phi in 0.0..TAU, t in 1e-3..50.0f64) {
        let curve = preset(k);
        let a = chord_to_angles(&curve, ChordCoords::new(phi, t));
        let back = angles_to_chord(&curve, a.phi0, a.phi1, CHART_TOL).unwrap();
        prop_assert!(wrap_angle(back.phi - phi).abs() < 1e-10);
        prop_assert!((back.t - t).abs() < 1e-10 * t);
    }

    #[test]
    fn twist_and_measure(k in 0usize..3, phi in 0.0..TAU, t in 1e-3..100.0f64) {
        let d = s_derivatives(&preset(k), ChordCoords::new(phi, t));
        prop_assert!(d.s12 < 0.0);
        let target = d.chi * t;
        prop_assert!((d.measure_density() - target).abs() < 1e-12 * target);
    }

    #[test]
    fn step_then_inverse(k in 0usize..3, phi in -PI..PI, stretch in 1.01..6.0f64) {
        let curve = preset(k);
        let rho = stretch * curve.radius(phi);
        let x = PhasePoint::from_polar(&curve, 0.5 * rho * rho, phi).unwrap();
        let map = BilliardMap::new(&curve);
        let back = map.inverse_step(&map.step(&x).unwrap()).unwrap();
        prop_assert!(back.cartesian.distance(x.cartesian) < 1e-12 * rho);
    }

    #[test]
    fn momentum_forms_agree(k in 0usize..3, phi in 0.0..TAU, t in 0.05..3.0f64, dq0 in -1.0..1.0f64, dq1 in -1.0..1.0f64) {
        let curve = preset(k);
        let seed = PhasePoint::from_chord(&curve, phi, t).unwrap();
        let w = build_window(&curve, &seed, 5, 30).unwrap();
        let field = propagate_jacobi(&w, dq0, dq1);
        prop_assert!(field.dp_mismatch < 1e-9, "{:e}", field.dp_mismatch);
        prop_assert!(field.recurrence_residual < 1e-12);
    }

    /// Positive pivots of the window Hessian exactly when the field pinned at
    /// the left end keeps its sign across the window.
    #[test]
    fn hessian_matches_field(phi in 0.0..TAU, t in 0.05..3.0f64, len in 10usize..150) {
        let curve = presets::trefoil_005();
        let seed = PhasePoint::from_chord(&curve, phi, t).unwrap();
        let w = build_window(&curve, &seed, 0, len - 1).unwrap();
        let dq = propagate_jacobi(&w, 0.0, 1.0).dq;
        let first_flip = (2..dq.len()).find(|&j| !(dq[j] > 0.0));
        match hessian_minimality(&w) {
            MinimalityVerdict::PositiveDefinite => prop_assert_eq!(first_flip, None),
            MinimalityVerdict::Indefinite { first_failing_minor } => prop_assert_eq!(first_flip, Some(first_failing_minor + 1)),
        }
    }

    #[test]
    fn ellipses_are_equality_cases(a in 0.3..3.0f64, b in 0.3..3.0f64) {
        let curve = ConvexCurve::ellipse(a, b).unwrap();
        let q = q_integral(&curve, 2048);
        prop_assert!((q - TAU).abs() < 1e-9, "Q - 2 pi = {:e}", q - TAU);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn inequalities_at_santalo_point(curve in wobbly_curve()) {
        let (report, _) = rigidity_report(&curve, &ReportSettings::default()).unwrap();
        prop_assert!(report.q_minus_2pi <= 1e-9, "Q - 2 pi = {:e}", report.q_minus_2pi);
        prop_assert!(report.bs_product <= PI * PI + 1e-9, "bs = {}", report.bs_product);
        prop_assert!((report.i_closed - report.i_numeric.value).abs() <= report.i_numeric.error.max(1e-12));
    }

    #[test]
    fn defect_routes_agree(curve in wobbly_curve()) {
        let closed = i_closed(&curve, 2048).value;
        let numeric = i_numeric(&curve, &NumericSettings::default());
        prop_assert!((closed - numeric.value).abs() <= numeric.error.max(1e-12));
        prop_assert!((curve.total_curvature(2048) - TAU).abs() < 1e-9);
    }
}
