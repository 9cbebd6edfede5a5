//! Acceptance gate: one line per criterion, nonzero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the summary is always shown.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use outer_billiard::billiard::{det2, BilliardMap, PhasePoint};
use outer_billiard::curve::{presets, ConvexCurve, CurveShape};
use outer_billiard::generating::{
    angles_to_chord, chord_endpoints, chord_to_angles, forward_map_via_s, s_derivatives, s_first_derivatives_chain_rule,
    twist_scan, ChordCoords, CHART_TOL,
};
use outer_billiard::geometry::{wrap_angle, PlanePoint};
use outer_billiard::jacobi::{conjugate_scan, hopf_omega, HopfOutcome, HopfSettings};
use outer_billiard::rigidity::{
    i_closed, i_numeric, integrand, q_integral, rigidity_report, NumericSettings, ReportSettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x0b11_a4d0 + stream)
}

fn random_chords(rng: &mut ChaCha8Rng, n: usize, t_lo: f64, t_hi: f64) -> Vec<ChordCoords> {
    (0..n).map(|_| ChordCoords::new(rng.gen_range(0.0..TAU), rng.gen_range(t_lo..t_hi))).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// `S` as a function of the endpoint angles, through the inverse chart.
fn s_of_angles(curve: &ConvexCurve, phi0: f64, phi1: f64) -> f64 {
    let c = angles_to_chord(curve, phi0, phi1, CHART_TOL).expect("inverse chart converges");
    c.t * curve.radius(c.phi).powi(2)
}

fn generating_function_exactness() -> Outcome {
    let mut rng = rng(1);
    let (mut worst_first, mut worst_fd) = (0.0f64, 0.0f64);
    for (name, curve) in presets::all() {
        for c in random_chords(&mut rng, 1000, 0.05, 10.0) {
            let d = s_derivatives(&curve, c);
            // Geometric radii of the chord endpoints, independent of the closed forms.
            let (m0, m1) = chord_endpoints(&curve, c);
            let (r0sq, r1sq) = ((m0 - curve.origin()).norm_sq(), (m1 - curve.origin()).norm_sq());
            let (s1, s2) = s_first_derivatives_chain_rule(&curve, c);
            for (v, want) in [(d.s1, -0.5 * r0sq), (d.s2, 0.5 * r1sq), (s1, -0.5 * r0sq), (s2, 0.5 * r1sq)] {
                worst_first = worst_first.max(rel(v, want));
            }

            let a = chord_to_angles(&curve, c);
            let s = |x: f64, y: f64| s_of_angles(&curve, a.phi0 + x, a.phi1 + y);
            // Central stencils with one Richardson step, so truncation is O(h^4).
            let s0 = s(0.0, 0.0);
            let d1 = |h: f64| ((s(h, 0.0) - s(-h, 0.0)) / (2.0 * h), (s(0.0, h) - s(0.0, -h)) / (2.0 * h));
            let d2 = |h: f64| {
                (
                    (s(h, 0.0) - 2.0 * s0 + s(-h, 0.0)) / (h * h),
                    (s(h, h) - s(h, -h) - s(-h, h) + s(-h, -h)) / (4.0 * h * h),
                    (s(0.0, h) - 2.0 * s0 + s(0.0, -h)) / (h * h),
                )
            };
            let richardson = |coarse: f64, fine: f64| (4.0 * fine - coarse) / 3.0;
            let (h1, h2) = (1e-3, 4e-3);
            let ((a1, a2), (b1, b2)) = (d1(h1), d1(h1 / 2.0));
            let (fd_s1, fd_s2) = (richardson(a1, b1), richardson(a2, b2));
            let ((a11, a12, a22), (b11, b12, b22)) = (d2(h2), d2(h2 / 2.0));
            let (fd_s11, fd_s12, fd_s22) = (richardson(a11, b11), richardson(a12, b12), richardson(a22, b22));
            for (fd, exact, label) in [
                (fd_s1, d.s1, "S1"),
                (fd_s2, d.s2, "S2"),
                (fd_s11, d.s11, "S11"),
                (fd_s12, d.s12, "S12"),
                (fd_s22, d.s22, "S22"),
            ] {
                // Relative to the local scale of the second derivatives so that
                // isolated zeros of S11 or S22 do not blow up the ratio.
                let scale = exact.abs().max(1e-2 * (d.s11.abs() + d.s22.abs() + d.s12.abs()));
                let e = (fd - exact).abs() / scale;
                ensure!(e < 1e-5, "{name}: finite-difference {label} off by {e:e} at {c:?}");
                worst_fd = worst_fd.max(e);
            }
        }
    }
    ensure!(worst_first < 1e-12, "closed-form S1/S2 off by {worst_first:e}");
    Ok(format!("S1,S2 worst rel {worst_first:.1e}; FD worst rel {worst_fd:.1e} over 3x1000 chords"))
}

fn twist_everywhere() -> Outcome {
    let mut parts = Vec::new();
    for (name, curve) in presets::all() {
        let scan = twist_scan(&curve, 256, 256, 20.0);
        ensure!(scan.max_s12 < 0.0, "{name}: max S12 = {:e} at phi={} t={}", scan.max_s12, scan.phi, scan.t);
        parts.push(format!("{name} max S12 {:.3e}", scan.max_s12));
    }
    Ok(parts.join("; "))
}

fn random_exterior(rng: &mut ChaCha8Rng, curve: &ConvexCurve) -> PhasePoint {
    loop {
        let phi = rng.gen_range(-PI..PI);
        let r = curve.radius(phi);
        let rho = r * rng.gen_range(1.02..4.0);
        if let Ok(p) = PhasePoint::from_polar(curve, 0.5 * rho * rho, phi) {
            return p;
        }
    }
}

fn map_consistency() -> Outcome {
    let mut rng = rng(3);
    let (mut w_map, mut w_det, mut w_inv) = (0.0f64, 0.0f64, 0.0f64);
    for (name, curve) in presets::all() {
        let map = BilliardMap::new(&curve);
        for _ in 0..1000 {
            let x = random_exterior(&mut rng, &curve);
            let y = map.step(&x).map_err(|e| format!("{name}: {e}"))?;
            let s = forward_map_via_s(&curve, x.p, x.phi).map_err(|e| format!("{name}: {e}"))?;
            let e_map = ((s.p1 - y.p).abs() / y.p).max(wrap_angle(s.phi1 - y.phi).abs());
            let dt = map.differential_fd(&x, 1e-6).map_err(|e| format!("{name}: {e}"))?;
            let e_det = (det2(&dt) - 1.0).abs();
            let back = map.inverse_step(&y).map_err(|e| format!("{name}: {e}"))?;
            let e_inv = back.cartesian.distance(x.cartesian) / x.rho();
            ensure!(e_map < 1e-9, "{name}: step vs S-map differ by {e_map:e} at {x:?}");
            ensure!(e_det < 1e-6, "{name}: |det DT - 1| = {e_det:e} at {x:?}");
            ensure!(e_inv < 1e-10, "{name}: inverse round trip {e_inv:e} at {x:?}");
            w_map = w_map.max(e_map);
            w_det = w_det.max(e_det);
            w_inv = w_inv.max(e_inv);
        }
    }
    Ok(format!("step/S-map {w_map:.1e}, |det DT - 1| {w_det:.1e}, inverse {w_inv:.1e} over 3x1000 points"))
}

fn circle_laws() -> Outcome {
    let circle = presets::unit_circle();
    let map = BilliardMap::new(&circle);
    let mut rng = rng(4);
    let (mut w_angle, mut w_radius) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let x = random_exterior(&mut rng, &circle);
        let y = map.step(&x).map_err(|e| e.to_string())?;
        let rho = x.rho();
        let expected = 2.0 * (1.0 / rho).acos();
        w_angle = w_angle.max((wrap_angle(y.phi - x.phi) - expected).abs());
        w_radius = w_radius.max((y.rho() - rho).abs() / rho);
    }
    ensure!(w_angle < 1e-10, "rotation angle off by {w_angle:e}");
    ensure!(w_radius < 1e-10, "radius drift {w_radius:e}");
    let q = q_integral(&circle, 2048);
    ensure!((q - TAU).abs() < 1e-12, "Q - 2 pi = {:e}", q - TAU);
    let closed = i_closed(&circle, 2048).value;
    let numeric = i_numeric(&circle, &NumericSettings::default()).value;
    ensure!(closed.abs() < 1e-9 && numeric.abs() < 1e-9, "I closed {closed:e}, numeric {numeric:e}");
    Ok(format!(
        "angle {w_angle:.1e}, radius {w_radius:.1e}, Q-2pi {:.1e}, I {closed:.1e}/{numeric:.1e}",
        q - TAU
    ))
}

fn ellipse_equality() -> Outcome {
    let ellipse = presets::ellipse_2_1();
    let (report, centred) = rigidity_report(&ellipse, &ReportSettings::default()).map_err(|e| e.to_string())?;
    ensure!(centred.origin().norm() < 1e-9, "Santalo point {:?}", centred.origin());
    ensure!(report.q_minus_2pi.abs() < 1e-7, "Q - 2 pi = {:e}", report.q_minus_2pi);
    ensure!(report.i_closed.abs() < 1e-6, "I closed {:e}", report.i_closed);
    ensure!(report.i_numeric.value.abs() < 1e-6, "I numeric {:e}", report.i_numeric.value);
    ensure!((report.bs_product - PI * PI).abs() < 1e-7, "bs product - pi^2 = {:e}", report.bs_product - PI * PI);
    ensure!(report.verdicts.equality, "equality verdict not set");

    let CurveShape::Ellipse { a, b } = *ellipse.shape() else { unreachable!() };
    let level = |p: &PhasePoint| (p.cartesian.x / a).powi(2) + (p.cartesian.y / b).powi(2);
    let map = BilliardMap::new(&ellipse);
    let mut w_level = 0.0f64;
    for seed in [PlanePoint::new(4.0, 0.0), PlanePoint::new(0.3, 1.7), PlanePoint::new(-5.0, 3.0)] {
        let x = PhasePoint::from_cartesian(&ellipse, seed).map_err(|e| e.to_string())?;
        let orbit = map.orbit(&x, 1000).map_err(|e| e.to_string())?;
        let base = level(&orbit[0]);
        for p in &orbit {
            w_level = w_level.max((level(p) - base).abs() / base);
        }
    }
    ensure!(w_level < 1e-8, "homothetic level drift {w_level:e}");

    let rows = conjugate_scan(&ellipse, 20, 20, 3.0, 10_000).map_err(|e| e.to_string())?;
    let hits: Vec<_> = rows.iter().filter(|r| r.n_conjugate.is_some()).collect();
    ensure!(hits.is_empty(), "{} ellipse seeds report conjugate points, e.g. {:?}", hits.len(), hits[0]);
    Ok(format!(
        "Q-2pi {:.1e}, I {:.1e}/{:.1e}, bs-pi^2 {:.1e}, level drift {w_level:.1e}, 400 seeds free of conjugate points",
        report.q_minus_2pi,
        report.i_closed,
        report.i_numeric.value,
        report.bs_product - PI * PI
    ))
}

fn non_ellipse_defect() -> Outcome {
    // Start away from the symmetric point so the Santalo search has work to do.
    let base = presets::trefoil_005();
    let moved = base.reorigin(PlanePoint::new(0.08, -0.05), 4096).map_err(|e| e.to_string())?.curve;
    let (report, centred) = rigidity_report(&moved, &ReportSettings::default()).map_err(|e| e.to_string())?;
    ensure!(report.santalo_point.norm() < 1e-8, "Santalo point {:?} should be the symmetry centre", report.santalo_point);
    ensure!(report.q_minus_2pi < -1e-6, "Q - 2 pi = {:e}", report.q_minus_2pi);
    ensure!((report.q - report.q_fine).abs() < 1e-9, "Q at two resolutions: {} vs {}", report.q, report.q_fine);
    ensure!(report.bs_product < PI * PI - 1e-6, "bs product {}", report.bs_product);
    ensure!(report.verdicts.conjugate_points_certified, "defect verdict not set");

    let rows = conjugate_scan(&centred, 40, 40, 3.0, 10_000).map_err(|e| e.to_string())?;
    let first = rows.iter().find(|r| r.n_conjugate.is_some()).ok_or("no conjugate point on the 40x40 grid")?;
    let n = first.n_conjugate.unwrap();
    ensure!(n <= 10_000, "conjugate index {n}");

    // Independent confirmation: push the radial vector through finite-difference DT.
    let map = BilliardMap::new(&centred);
    let mut x = PhasePoint::from_chord(&centred, first.seed_phi, first.seed_t).map_err(|e| e.to_string())?;
    let (mut dp, mut dq) = (1.0, 0.0);
    let mut sign_change = None;
    for k in 1..=n + 1 {
        let m = map.differential_fd(&x, 1e-7).map_err(|e| e.to_string())?;
        (dp, dq) = (m[0][0] * dp + m[0][1] * dq, m[1][0] * dp + m[1][1] * dq);
        let size = dp.abs().max(dq.abs());
        (dp, dq) = (dp / size, dq / size);
        x = map.step(&x).map_err(|e| e.to_string())?;
        if dq <= 0.0 {
            sign_change = Some(k);
            break;
        }
    }
    ensure!(sign_change.is_some_and(|k| k.abs_diff(n) <= 1), "FD propagation disagrees: {sign_change:?} vs {n}");
    let hits = rows.iter().filter(|r| r.n_conjugate.is_some()).count();
    Ok(format!(
        "Q-2pi {:.6e}, bs-pi^2 {:.3e}, {hits}/1600 seeds with conjugate points, first at phi={:.4} t={:.4} n={n}",
        report.q_minus_2pi,
        report.bs_product - PI * PI,
        first.seed_phi,
        first.seed_t
    ))
}

fn integral_identities() -> Outcome {
    let mut rng = rng(7);
    let mut worst_split = 0.0f64;
    for (_, curve) in presets::all() {
        for c in random_chords(&mut rng, 10_000, 1e-3, 100.0) {
            worst_split = worst_split.max(integrand(&curve, c.phi, c.t).decomposition_error());
        }
    }
    ensure!(worst_split < 1e-10, "F1+F2+F3 vs total: {worst_split:e}");
    let mut parts = vec![format!("split {worst_split:.1e}")];
    for (name, curve) in presets::all() {
        let kappa = curve.total_curvature(2048);
        ensure!((kappa - TAU).abs() < 1e-9, "{name}: total curvature {kappa}");
        let closed = i_closed(&curve, 2048).value;
        let values: Vec<_> = [25.0, 50.0, 100.0]
            .iter()
            .map(|&t_max| i_numeric(&curve, &NumericSettings { t_max, ..Default::default() }))
            .collect();
        let at50 = &values[1];
        ensure!(
            (at50.value - closed).abs() <= at50.error,
            "{name}: |I_num - I_closed| = {:e} exceeds reported error {:e}",
            (at50.value - closed).abs(),
            at50.error
        );
        let lo = values.iter().map(|v| v.value).fold(f64::INFINITY, f64::min);
        let hi = values.iter().map(|v| v.value).fold(f64::NEG_INFINITY, f64::max);
        ensure!(hi - lo < 1e-8, "{name}: t_max spread {:e}", hi - lo);
        parts.push(format!("{name} |dI| {:.1e} (err {:.1e}) spread {:.1e}", (at50.value - closed).abs(), at50.error, hi - lo));
    }
    Ok(parts.join("; "))
}

fn omega_machinery() -> Outcome {
    let settings = HopfSettings::default();
    let mut checked = 0;
    let mut worst_rel = 0.0f64;
    for (curve, seeds) in [
        (presets::unit_circle(), vec![(0.0, 1.0), (1.3, 0.3), (4.0, 2.5)]),
        (presets::ellipse_2_1(), vec![(0.0, 1.0), (1.0, 0.4), (2.5, 2.5), (5.0, 0.1)]),
    ] {
        for (phi, t) in seeds {
            let seed = PhasePoint::from_chord(&curve, phi, t).map_err(|e| e.to_string())?;
            match hopf_omega(&curve, &seed, &settings).map_err(|e| e.to_string())? {
                HopfOutcome::Minimizing(o) => {
                    ensure!(o.converged, "not converged at ({phi}, {t})");
                    ensure!(o.image_relation_residual < 1e-8, "image relation {:e} at ({phi}, {t})", o.image_relation_residual);
                    ensure!(o.seed_relation_residual < 1e-8, "seed relation {:e} at ({phi}, {t})", o.seed_relation_residual);
                    ensure!(
                        o.lower_bound < o.omega && o.omega < o.upper_bound,
                        "omega {} outside ({}, {})",
                        o.omega,
                        o.lower_bound,
                        o.upper_bound
                    );
                    worst_rel = worst_rel.max(o.image_relation_residual).max(o.seed_relation_residual);
                    checked += 1;
                }
                other => return Err(format!("expected a minimizing orbit at ({phi}, {t}), got {other:?}")),
            }
        }
    }

    let fourier = presets::trefoil_005();
    let rows = conjugate_scan(&fourier, 12, 12, 3.0, settings.n_cap).map_err(|e| e.to_string())?;
    let mut failures = 0;
    for row in rows.iter().filter(|r| r.n_conjugate.is_some()).take(8) {
        let seed = PhasePoint::from_chord(&fourier, row.seed_phi, row.seed_t).map_err(|e| e.to_string())?;
        match hopf_omega(&fourier, &seed, &settings) {
            Ok(HopfOutcome::PositivityFailure { .. }) => failures += 1,
            other => return Err(format!("seed {row:?} with a conjugate point gave {other:?}")),
        }
    }
    ensure!(failures > 0, "no perturbed seeds with conjugate points to test");
    Ok(format!("{checked} circle/ellipse seeds converged (relations {worst_rel:.1e}); {failures} perturbed seeds report positivity failure"))
}

fn deterministic_reports() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_outer-billiard");
    let run = |workers: usize, extra: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(bin)
            .args(["--curve", "preset:fourier", "--workers", &workers.to_string()])
            .args(extra)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "exit {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
        Ok(out.stdout)
    };
    let mut sizes = Vec::new();
    for extra in [
        &["--cmd", "rigidity", "--conjugate-scan", "--scan-grid", "8", "--n-max", "2000"][..],
        &["--cmd", "conjugate-scan", "--scan-grid", "10", "--n-max", "2000"][..],
        &["--cmd", "twist-scan"][..],
    ] {
        let reference = run(1, extra)?;
        for workers in [4, 8] {
            ensure!(run(workers, extra)? == reference, "{:?} differs between 1 and {workers} workers", extra[1]);
        }
        sizes.push(format!("{} {} bytes", extra[1], reference.len()));
    }
    Ok(format!("identical for 1/4/8 workers: {}", sizes.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("generating-function exactness", Duration::from_secs(10), generating_function_exactness),
        ("twist", Duration::from_secs(5), twist_everywhere),
        ("map consistency", Duration::from_secs(30), map_consistency),
        ("circle laws", Duration::from_secs(60), circle_laws),
        ("ellipse equality case", Duration::from_secs(120), ellipse_equality),
        ("non-ellipse defect", Duration::from_secs(300), non_ellipse_defect),
        ("integral identities", Duration::from_secs(120), integral_identities),
        ("omega machinery", Duration::from_secs(300), omega_machinery),
        ("determinism", Duration::from_secs(300), deterministic_reports),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > *limit => Err(format!("took {elapsed:.1?}, limit {limit:?} ({detail})")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} [{:.1?}] {detail}", i + 1, elapsed),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{:.1?}] {why}", i + 1, elapsed);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
