//! The area generating function `S(phi0, phi1)` and its derivative calculus.
//!
//! A chord is described either by the tangency angle and chord parameter
//! `(phi, t)`, with endpoints `M0 = gamma - t gamma'` and `M1 = gamma + t gamma'`,
//! or by the polar angles `(phi0, phi1)` of those endpoints. `S` is the area
//! of the triangle `O M0 M1`, which in chord coordinates is `t r(phi)^2`, and
//! generates the billiard map in the symplectic polar coordinates
//! `(p = rho^2/2, phi)`: `S_1 = -p0`, `S_2 = p1`.
//!
//! Partial derivatives with indices 1, 2 are taken with respect to `phi0`,
//! `phi1`. All second derivatives and the chart Jacobian are the closed
//! rational-in-`t` forms; the tests re-derive them by finite differences.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{ConvexCurve, CurveSample};
use crate::error::ChartError;
use crate::geometry::PlanePoint;
use crate::roots::bisect_newton;

/// Default residual tolerance (radians) for [`angles_to_chord`].
pub const CHART_TOL: f64 = 1e-12;
const CHART_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChordCoords {
    pub phi: f64,
    pub t: f64,
}

impl ChordCoords {
    pub fn new(phi: f64, t: f64) -> Self {
        Self { phi, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleCoords {
    pub phi0: f64,
    pub phi1: f64,
    pub r0sq: f64,
    pub r1sq: f64,
}

/// `S` and its derivatives at one chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SDerivatives {
    pub s: f64,
    pub s1: f64,
    pub s2: f64,
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
    /// `|J| = |d(phi0, phi1) / d(phi, t)|`.
    pub jac_det: f64,
    pub r0sq: f64,
    pub r1sq: f64,
    pub chi: f64,
}

impl SDerivatives {
    /// Density of the invariant area measure in `(phi, t)`: `-S_12 |J|`.
    pub fn measure_density(&self) -> f64 {
        -self.s12 * self.jac_det
    }
}

#[inline]
fn endpoint_radii(s: &CurveSample, t: f64) -> (f64, f64) {
    let (r, r1) = (s.r, s.r_prime);
    let tr2 = (t * r).powi(2);
    ((r - t * r1).powi(2) + tr2, (r + t * r1).powi(2) + tr2)
}

/// Endpoint angles and squared radii of a chord.
///
/// The angular offsets use the two-argument arctangent of `(t r, r -/+ t r')`
/// so they stay in `(0, pi)` when `r -/+ t r'` changes sign.
pub fn chord_to_angles(curve: &ConvexCurve, c: ChordCoords) -> AngleCoords {
    let s = curve.eval(c.phi);
    let (r, r1, t) = (s.r, s.r_prime, c.t);
    let off0 = (t * r).atan2(r - t * r1);
    let off1 = (t * r).atan2(r + t * r1);
    let (r0sq, r1sq) = endpoint_radii(&s, t);
    AngleCoords { phi0: c.phi - off0, phi1: c.phi + off1, r0sq, r1sq }
}

/// Chord endpoints `M0`, `M1` in the plane.
pub fn chord_endpoints(curve: &ConvexCurve, c: ChordCoords) -> (PlanePoint, PlanePoint) {
    let (g, dg, _) = curve.frame(c.phi);
    (g - dg * c.t, g + dg * c.t)
}

/// `J = d(phi0, phi1) / d(phi, t)` as `[[dphi0/dphi, dphi0/dt], [dphi1/dphi, dphi1/dt]]`.
pub fn chart_jacobian(curve: &ConvexCurve, c: ChordCoords) -> [[f64; 2]; 2] {
    let s = curve.eval(c.phi);
    let (r0sq, r1sq) = endpoint_radii(&s, c.t);
    let bend = c.t * c.t * (-s.chi + s.speed_sq());
    let r2 = s.r * s.r;
    [[1.0 - bend / r0sq, -r2 / r0sq], [1.0 - bend / r1sq, r2 / r1sq]]
}

/// Inverse chart by damped Newton on `(phi, ln t)` with the analytic Jacobian,
/// started from the circle guess `phi = (phi0 + phi1)/2`, `t = tan((phi1 - phi0)/2)`.
pub fn angles_to_chord(curve: &ConvexCurve, phi0: f64, phi1: f64, tol: f64) -> Result<ChordCoords, ChartError> {
    let gap = phi1 - phi0;
    let guess = ChordCoords::new(0.5 * (phi0 + phi1), (0.5 * gap).tan());
    angles_to_chord_from(curve, phi0, phi1, tol, guess)
}

/// [`angles_to_chord`] with an explicit starting chord.
pub fn angles_to_chord_from(
    curve: &ConvexCurve,
    phi0: f64,
    phi1: f64,
    tol: f64,
    guess: ChordCoords,
) -> Result<ChordCoords, ChartError> {
    let gap = phi1 - phi0;
    if !(gap > 0.0 && gap < PI) {
        return Err(ChartError::InvalidAnglePair { phi0, phi1 });
    }
    let residual = |phi: f64, u: f64| {
        let a = chord_to_angles(curve, ChordCoords::new(phi, u.exp()));
        (a.phi0 - phi0, a.phi1 - phi1)
    };
    let norm = |(x, y): (f64, f64)| x.abs().max(y.abs());

    let (mut phi, mut u) = (guess.phi, guess.t.max(f64::MIN_POSITIVE).ln());
    let mut res = residual(phi, u);
    let mut polish = 0;
    for _ in 0..CHART_MAX_ITER {
        let rn = norm(res);
        if rn < tol {
            // A couple of extra steps take the solution to round-off level.
            polish += 1;
            if polish > 2 || rn == 0.0 {
                break;
            }
        }
        let t = u.exp();
        let j = chart_jacobian(curve, ChordCoords::new(phi, t));
        // Columns for (phi, u = ln t).
        let (a, b, c, d) = (j[0][0], j[0][1] * t, j[1][0], j[1][1] * t);
        let det = a * d - b * c;
        let dphi = -(d * res.0 - b * res.1) / det;
        let du = -(-c * res.0 + a * res.1) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = residual(phi + lambda * dphi, u + lambda * du);
            if norm(cand) < rn || (polish > 0 && norm(cand) <= rn) {
                phi += lambda * dphi;
                u += lambda * du;
                res = cand;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let rn = norm(res);
    if rn < tol {
        Ok(ChordCoords::new(phi, u.exp()))
    } else {
        Err(ChartError::NonConvergence { iterations: CHART_MAX_ITER, residual: rn })
    }
}

/// `S = t r(phi)^2`, the area of the triangle `O M0 M1`.
pub fn s_value(curve: &ConvexCurve, c: ChordCoords) -> f64 {
    c.t * curve.radius(c.phi).powi(2)
}

/// Closed forms of `S`, its first and second partials, and `|J|` at a chord.
pub fn s_derivatives(curve: &ConvexCurve, c: ChordCoords) -> SDerivatives {
    s_derivatives_at(&curve.eval(c.phi), c.t)
}

/// [`s_derivatives`] from an already evaluated curve sample.
pub fn s_derivatives_at(s: &CurveSample, t: f64) -> SDerivatives {
    let (r, r1, chi) = (s.r, s.r_prime, s.chi);
    let r2 = r * r;
    let (r0sq, r1sq) = endpoint_radii(s, t);
    let q = chi * t * t + r2;
    let denom = 2.0 * r2 * q;
    let common = chi * t * (t * t - 1.0) * r2 + 2.0 * t * r2 * r2 + t * (q + r2) * r1 * r1;
    let skew = 2.0 * r2 * r * r1;
    SDerivatives {
        s: t * r2,
        s1: -0.5 * r0sq,
        s2: 0.5 * r1sq,
        s11: r0sq * (common - skew) / denom,
        s22: r1sq * (common + skew) / denom,
        s12: -chi * t * r0sq * r1sq / denom,
        jac_det: 2.0 * r2 * q / (r0sq * r1sq),
        r0sq,
        r1sq,
        chi,
    }
}

/// `S_1` and `S_2` assembled by the chain rule from `S = t r^2` and the
/// inverse chart derivatives, rather than read off as `-r0^2/2`, `r1^2/2`.
pub fn s_first_derivatives_chain_rule(curve: &ConvexCurve, c: ChordCoords) -> (f64, f64) {
    let s = curve.eval(c.phi);
    let (r, r1, chi, t) = (s.r, s.r_prime, s.chi, c.t);
    let r2 = r * r;
    let (r0sq, r1sq) = endpoint_radii(&s, t);
    let q = chi * t * t + r2;
    let dphi_dphi0 = r0sq / (2.0 * q);
    let dphi_dphi1 = r1sq / (2.0 * q);
    let dt_dphi0 = -r0sq * (q + 2.0 * t * r * r1) / (2.0 * r2 * q);
    let dt_dphi1 = r1sq * (q - 2.0 * t * r * r1) / (2.0 * r2 * q);
    let s_phi = 2.0 * r * r1 * t;
    let s_t = r2;
    (s_phi * dphi_dphi0 + s_t * dt_dphi0, s_phi * dphi_dphi1 + s_t * dt_dphi1)
}

/// Image of `(p0, phi0)` under the billiard map computed through `S` alone:
/// solve `S_1(phi0, phi1) = -p0` for `phi1` in `(phi0, phi0 + pi)`, then
/// `p1 = S_2(phi0, phi1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SImage {
    pub p1: f64,
    pub phi1: f64,
    pub chord: ChordCoords,
}

pub fn forward_map_via_s(curve: &ConvexCurve, p0: f64, phi0: f64) -> Result<SImage, ChartError> {
    let r = curve.radius(phi0);
    if !(2.0 * p0 > r * r) || !p0.is_finite() {
        return Err(ChartError::InsideCurve { p: p0, phi: phi0 });
    }
    let delta = 1e-9;
    let mut last = ChordCoords::new(phi0, 1.0);
    let mut failure: Option<ChartError> = None;
    let mut g = |phi1: f64| -> (f64, f64) {
        let gap = phi1 - phi0;
        let guess = ChordCoords::new(0.5 * (phi0 + phi1), (0.5 * gap).tan());
        let start = if (last.phi - guess.phi).abs() < 0.5 { last } else { guess };
        let chord = angles_to_chord_from(curve, phi0, phi1, CHART_TOL, start)
            .or_else(|_| angles_to_chord_from(curve, phi0, phi1, CHART_TOL, guess));
        match chord {
            Ok(c) => {
                last = c;
                let d = s_derivatives(curve, c);
                (-d.s1 - p0, -d.s12)
            }
            Err(e) => {
                failure = Some(e);
                (f64::NAN, f64::NAN)
            }
        }
    };

    let bracket_err = ChartError::Bracketing { p: p0, phi: phi0 };
    let mid = phi0 + 0.5 * PI;
    let (lo, hi) = if g(mid).0 > 0.0 {
        let mut gap = 0.5 * PI;
        loop {
            gap *= 0.25;
            if gap < delta {
                return Err(failure.unwrap_or(bracket_err));
            }
            if g(phi0 + gap).0 < 0.0 {
                break (phi0 + gap, phi0 + 4.0 * gap);
            }
        }
    } else {
        let mut gap = 0.5 * PI;
        loop {
            gap *= 0.25;
            if gap < delta {
                return Err(failure.unwrap_or(bracket_err));
            }
            if g(phi0 + PI - gap).0 > 0.0 {
                break (phi0 + PI - 4.0 * gap, phi0 + PI - gap);
            }
        }
    };
    let x_tol = 4.0 * f64::EPSILON * (1.0 + hi.abs());
    let root = bisect_newton(&mut g, lo, hi, 1e-6 * (hi - lo), x_tol, 200);
    if let Some(e) = failure {
        return Err(e);
    }
    let root = root.ok_or(bracket_err)?;
    let chord = angles_to_chord_from(curve, phi0, root.x, CHART_TOL, last)?;
    let d = s_derivatives(curve, chord);
    Ok(SImage { p1: d.s2, phi1: root.x, chord })
}

/// Largest `S_12` over a `(phi, t)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwistScan {
    pub max_s12: f64,
    pub phi: f64,
    pub t: f64,
    pub phi_grid: usize,
    pub t_grid: usize,
    pub t_max: f64,
}

/// Grid nodes `phi_i = 2 pi i / n_phi`, `t_j = t_max j / n_t` for `j = 1..=n_t`.
pub fn chord_grid(phi_grid: usize, t_grid: usize, t_max: f64) -> impl Iterator<Item = ChordCoords> {
    (0..phi_grid).flat_map(move |i| {
        let phi = 2.0 * PI * i as f64 / phi_grid as f64;
        (1..=t_grid).map(move |j| ChordCoords::new(phi, t_max * j as f64 / t_grid as f64))
    })
}

/// Twist check on the product grid of [`chord_grid`].
pub fn twist_scan(curve: &ConvexCurve, phi_grid: usize, t_grid: usize, t_max: f64) -> TwistScan {
    twist_scan_by(curve, phi_grid, t_grid, t_max, |d| d.s12)
}

/// [`twist_scan`] with the scanned quantity supplied by the caller.
///
/// Rows are evaluated in parallel; the maximum is reduced in grid order with
/// the first occurrence winning ties.
pub fn twist_scan_by<F>(curve: &ConvexCurve, phi_grid: usize, t_grid: usize, t_max: f64, pick: F) -> TwistScan
where
    F: Fn(&SDerivatives) -> f64 + Sync,
{
    let rows: Vec<(f64, f64, f64)> = (0..phi_grid)
        .into_par_iter()
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / phi_grid as f64;
            let s = curve.eval(phi);
            let mut best = (f64::NEG_INFINITY, phi, 0.0);
            for j in 1..=t_grid {
                let t = t_max * j as f64 / t_grid as f64;
                let v = pick(&s_derivatives_at(&s, t));
                if v > best.0 {
                    best = (v, phi, t);
                }
            }
            best
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for row in rows {
        if row.0 > best.0 {
            best = row;
        }
    }
    TwistScan { max_s12: best.0, phi: best.1, t: best.2, phi_grid, t_grid, t_max }
}

/// Rows `(chord, derivatives)` over [`chord_grid`], in grid order.
pub fn derivative_table(curve: &ConvexCurve, phi_grid: usize, t_grid: usize, t_max: f64) -> Vec<(ChordCoords, SDerivatives)> {
    let rows: Vec<Vec<(ChordCoords, SDerivatives)>> = (0..phi_grid)
        .into_par_iter()
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / phi_grid as f64;
            let s = curve.eval(phi);
            (1..=t_grid)
                .map(|j| {
                    let c = ChordCoords::new(phi, t_max * j as f64 / t_grid as f64);
                    (c, s_derivatives_at(&s, c.t))
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}
