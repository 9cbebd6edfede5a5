//! Invariant suite run by `outer-billiard --cmd verify`.
//!
//! Every check records the worst observed value next to its limit so that a
//! failing run says by how much it failed.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::billiard::{det2, BilliardMap, PhasePoint};
use crate::curve::ConvexCurve;
use crate::generating::{
    angles_to_chord, chart_jacobian, chord_to_angles, forward_map_via_s, s_derivatives, s_first_derivatives_chain_rule,
    twist_scan_by, ChordCoords, CHART_TOL,
};
use crate::geometry::wrap_angle;
use crate::jacobi::{build_window, jacobi_step, propagate_jacobi};
use crate::rigidity::{area_and_dual, i_closed, i_numeric, integrand, NumericSettings};

/// Deliberate corruption used to confirm that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Scan `-S_12` in place of `S_12`.
    S12SignFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifySettings {
    pub samples: usize,
    pub phi_grid: usize,
    pub t_grid: usize,
    pub t_max: f64,
    pub fault: Option<Fault>,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self { samples: 200, phi_grid: 256, t_grid: 256, t_max: 20.0, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst value observed (an error, or the scanned maximum).
    pub value: f64,
    pub limit: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub passed: bool,
    pub failed: Vec<&'static str>,
    pub settings: VerifySettings,
    pub checks: Vec<Check>,
}

/// Low-discrepancy chord samples: `phi` uniform on the circle, `t` in `[t_lo, t_hi]`.
pub fn chord_samples(n: usize, t_lo: f64, t_hi: f64) -> Vec<ChordCoords> {
    // Additive recurrence on the plastic-number lattice.
    let (g1, g2) = (0.754_877_666_246_692_8, 0.569_840_290_998_053_3);
    (1..=n)
        .map(|k| {
            let u = (0.5 + g1 * k as f64).fract();
            let v = (0.5 + g2 * k as f64).fract();
            ChordCoords::new(TAU * u, t_lo + (t_hi - t_lo) * v)
        })
        .collect()
}

fn check(name: &'static str, value: f64, limit: f64, samples: usize) -> Check {
    Check { name, passed: value < limit, value, limit, samples }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Runs every check; dynamics failures count as failed checks with value `inf`.
pub fn run_suite(curve: &ConvexCurve, settings: &VerifySettings) -> VerifySummary {
    let chords = chord_samples(settings.samples, 0.05, 5.0);
    let n = chords.len();
    let mut checks = Vec::new();

    // Closed-form first derivatives against the chain rule through the chart.
    let mut worst: f64 = 0.0;
    for &c in &chords {
        let d = s_derivatives(curve, c);
        let (s1, s2) = s_first_derivatives_chain_rule(curve, c);
        worst = worst.max(rel(s1, d.s1)).max(rel(s2, d.s2));
    }
    checks.push(check("first_derivatives_closed_form", worst, 1e-12, n));

    // Second derivatives and |J| against central differences in the angle chart.
    let h = 1e-5;
    let mut worst_second: f64 = 0.0;
    let mut worst_jac: f64 = 0.0;
    let mut worst_round_trip: f64 = 0.0;
    let mut chart_failures = false;
    for &c in &chords {
        let a = chord_to_angles(curve, c);
        let d = s_derivatives(curve, c);
        match angles_to_chord(curve, a.phi0, a.phi1, CHART_TOL) {
            Ok(back) => {
                worst_round_trip = worst_round_trip.max(wrap_angle(back.phi - c.phi).abs()).max((back.t - c.t).abs() / c.t);
            }
            Err(_) => chart_failures = true,
        }
        let firsts = |x: f64, y: f64| angles_to_chord(curve, x, y, CHART_TOL).map(|ch| s_derivatives(curve, ch));
        let stencil = (
            firsts(a.phi0 + h, a.phi1),
            firsts(a.phi0 - h, a.phi1),
            firsts(a.phi0, a.phi1 + h),
            firsts(a.phi0, a.phi1 - h),
        );
        if let (Ok(p0), Ok(m0), Ok(p1), Ok(m1)) = stencil {
            let s11 = (p0.s1 - m0.s1) / (2.0 * h);
            let s12 = (p1.s1 - m1.s1) / (2.0 * h);
            let s22 = (p1.s2 - m1.s2) / (2.0 * h);
            worst_second = worst_second.max(rel(s11, d.s11)).max(rel(s12, d.s12)).max(rel(s22, d.s22));
        } else {
            chart_failures = true;
        }
        let j = chart_jacobian(curve, c);
        let fd = |dp: f64, dt: f64| chord_to_angles(curve, ChordCoords::new(c.phi + dp, c.t + dt));
        let (pp, pm) = (fd(h, 0.0), fd(-h, 0.0));
        let (tp, tm) = (fd(0.0, h * c.t), fd(0.0, -h * c.t));
        let m = [
            [(pp.phi0 - pm.phi0) / (2.0 * h), (tp.phi0 - tm.phi0) / (2.0 * h * c.t)],
            [(pp.phi1 - pm.phi1) / (2.0 * h), (tp.phi1 - tm.phi1) / (2.0 * h * c.t)],
        ];
        worst_jac = worst_jac.max(rel(det2(&m).abs(), d.jac_det)).max(rel(det2(&j).abs(), d.jac_det));
    }
    let penalty = |v: f64| if chart_failures { f64::INFINITY } else { v };
    checks.push(check("second_derivatives_fd", penalty(worst_second), 1e-5, n));
    checks.push(check("jacobian_fd", worst_jac, 1e-6, n));
    checks.push(check("chart_round_trip", penalty(worst_round_trip), 1e-10, n));

    // Invariant measure density and the three-term split.
    let mut worst_measure: f64 = 0.0;
    let mut worst_split: f64 = 0.0;
    for &c in &chords {
        let d = s_derivatives(curve, c);
        worst_measure = worst_measure.max((d.measure_density() - d.chi * c.t).abs() / (d.chi * c.t));
        worst_split = worst_split.max(integrand(curve, c.phi, c.t).decomposition_error());
    }
    checks.push(check("measure_identity", worst_measure, 1e-12, n));
    checks.push(check("integrand_decomposition", worst_split, 1e-10, n));

    let scan = match settings.fault {
        None => twist_scan_by(curve, settings.phi_grid, settings.t_grid, settings.t_max, |d| d.s12),
        Some(Fault::S12SignFlip) => twist_scan_by(curve, settings.phi_grid, settings.t_grid, settings.t_max, |d| -d.s12),
    };
    checks.push(check("twist", scan.max_s12, 0.0, settings.phi_grid * settings.t_grid));

    // Dynamics: geometric step against the generating-function step, area
    // preservation and inversion.
    let map = BilliardMap::new(curve);
    let (mut worst_map, mut worst_det, mut worst_inverse, mut worst_linear): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for &c in &chords {
        let result = (|| -> Option<(f64, f64, f64, f64)> {
            let x = PhasePoint::from_chord(curve, c.phi, c.t).ok()?;
            let (y, tan) = map.step_with_tangency(&x).ok()?;
            let via_s = forward_map_via_s(curve, x.p, x.phi).ok()?;
            let e_map = rel(via_s.p1, y.p).max(wrap_angle(via_s.phi1 - y.phi).abs());
            let dt = map.differential_fd(&x, 1e-6).ok()?;
            let e_det = (det2(&dt) - 1.0).abs();
            let back = map.inverse_step(&y).ok()?;
            let e_inv = back.cartesian.distance(x.cartesian) / x.rho();
            let d = s_derivatives(curve, ChordCoords::new(tan.phi_m, tan.t));
            let mut e_lin: f64 = 0.0;
            for (dp0, dq0) in [(1.0, 0.0), (0.0, 1.0)] {
                let (dp1, dq1) = jacobi_step(&d, dp0, dq0);
                let fd_p = dt[0][0] * dp0 + dt[0][1] * dq0;
                let fd_q = dt[1][0] * dp0 + dt[1][1] * dq0;
                e_lin = e_lin.max(rel(dp1, fd_p)).max(rel(dq1, fd_q));
            }
            Some((e_map, e_det, e_inv, e_lin))
        })();
        match result {
            Some((a, b, c, d)) => {
                worst_map = worst_map.max(a);
                worst_det = worst_det.max(b);
                worst_inverse = worst_inverse.max(c);
                worst_linear = worst_linear.max(d);
            }
            None => {
                worst_map = f64::INFINITY;
                worst_det = f64::INFINITY;
                worst_inverse = f64::INFINITY;
                worst_linear = f64::INFINITY;
            }
        }
    }
    checks.push(check("step_vs_generating_function", worst_map, 1e-9, n));
    checks.push(check("symplectic_determinant", worst_det, 1e-6, n));
    checks.push(check("inverse_round_trip", worst_inverse, 1e-10, n));
    checks.push(check("jacobi_vs_differential", worst_linear, 1e-5, n));

    // Both momentum forms along a Jacobi field.
    let dp_forms = PhasePoint::from_chord(curve, 0.3, 1.1)
        .ok()
        .and_then(|seed| build_window(curve, &seed, 20, 80).ok())
        .map(|w| propagate_jacobi(&w, 0.0, 1.0).dp_mismatch)
        .unwrap_or(f64::INFINITY);
    checks.push(check("momentum_forms", dp_forms, 1e-10, 101));

    let curvature = curve.total_curvature(2048);
    checks.push(check("total_curvature", (curvature - TAU).abs(), 1e-9, 2048));
    let areas = area_and_dual(curve, 2048);
    checks.push(check("dual_area_forms", (areas.area_dual - areas.area_dual_alt).abs(), 1e-10, 2048));
    let closed = i_closed(curve, 2048);
    let numeric = i_numeric(curve, &NumericSettings::default());
    checks.push(check("defect_routes_agree", (closed.value - numeric.value).abs(), numeric.error.max(1e-9), 2048));

    let failed: Vec<&'static str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    VerifySummary { passed: failed.is_empty(), failed, settings: *settings, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::presets;

    #[test]
    fn presets_pass() {
        for (name, curve) in presets::all() {
            let s = run_suite(&curve, &VerifySettings { samples: 40, phi_grid: 64, t_grid: 64, ..Default::default() });
            assert!(s.passed, "{name}: {:#?}", s.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sign_flip_breaks_twist() {
        let settings = VerifySettings { samples: 10, phi_grid: 64, t_grid: 64, fault: Some(Fault::S12SignFlip), ..Default::default() };
        let s = run_suite(&presets::unit_circle(), &settings);
        assert!(!s.passed);
        assert_eq!(s.failed, vec!["twist"]);
    }
}
