//! Discrete Jacobi fields along billiard orbits.
//!
//! Along an orbit with polar angles `q_n` the action sum `sum S(q_n, q_{n+1})`
//! has Hessian tridiagonal with diagonal `a_n = S_22(q_{n-1}, q_n) + S_11(q_n, q_{n+1})`
//! and off-diagonal `b_n = S_12(q_n, q_{n+1})`. Its kernel equation
//! `b_{n-1} dq_{n-1} + a_n dq_n + b_n dq_{n+1} = 0` is the Jacobi equation; a
//! field vanishing at two places marks a pair of conjugate points, and the
//! orbit then fails to be locally minimizing.
//!
//! Momenta follow `dp_n = -S_11(q_n, q_{n+1}) dq_n - S_12(q_n, q_{n+1}) dq_{n+1}`,
//! equivalently `dp_n = S_22(q_{n-1}, q_n) dq_n + S_12(q_{n-1}, q_n) dq_{n-1}`.
//!
//! Only counterclockwise orbits are handled: the generating function is
//! written for increasing angles.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::billiard::{BilliardMap, PhasePoint};
use crate::curve::ConvexCurve;
use crate::error::{JacobiError, MapError};
use crate::generating::{s_derivatives, ChordCoords, SDerivatives};
use crate::geometry::wrap_angle;

/// A field value is treated as zero below this fraction of the largest
/// magnitude seen so far.
pub const SIGN_TOL: f64 = 1e-12;
/// Fields are renormalised once they exceed this magnitude.
const RESCALE_AT: f64 = 1e100;

/// Orbit followed in both directions from a seed, extended on demand.
///
/// `pair(k)` is the chord between orbit points `k` and `k + 1`.
struct OrbitTrace<'a> {
    map: BilliardMap<'a>,
    head: PhasePoint,
    tail: PhasePoint,
    fwd: Vec<(ChordCoords, SDerivatives, f64)>,
    bwd: Vec<(ChordCoords, SDerivatives, f64)>,
    seed_phi: f64,
}

impl<'a> OrbitTrace<'a> {
    fn new(curve: &'a ConvexCurve, seed: &PhasePoint) -> Self {
        Self {
            map: BilliardMap::new(curve),
            head: *seed,
            tail: *seed,
            fwd: Vec::new(),
            bwd: Vec::new(),
            seed_phi: seed.phi,
        }
    }

    /// Makes pairs `0..n` available.
    fn extend_forward(&mut self, n: usize) -> Result<(), MapError> {
        while self.fwd.len() < n {
            let step = self.fwd.len();
            let (next, tan) = self
                .map
                .step_with_tangency(&self.head)
                .map_err(|e| MapError::Orbit { step, source: Box::new(e) })?;
            let chord = ChordCoords::new(tan.phi_m, tan.t);
            let prev = self.fwd.last().map_or(self.seed_phi, |x| x.2);
            let angle = prev + wrap_angle(next.phi - prev);
            self.fwd.push((chord, s_derivatives(self.map.curve(), chord), angle));
            self.head = next;
        }
        Ok(())
    }

    /// Makes pairs `-n..0` available.
    fn extend_backward(&mut self, n: usize) -> Result<(), MapError> {
        while self.bwd.len() < n {
            let step = self.bwd.len();
            let (prev_point, tan) = self
                .map
                .inverse_step_with_tangency(&self.tail)
                .map_err(|e| MapError::Orbit { step, source: Box::new(e) })?;
            let chord = ChordCoords::new(tan.phi_m, tan.t);
            let next = self.bwd.last().map_or(self.seed_phi, |x| x.2);
            let angle = next + wrap_angle(prev_point.phi - next);
            self.bwd.push((chord, s_derivatives(self.map.curve(), chord), angle));
            self.tail = prev_point;
        }
        Ok(())
    }

    fn pair(&self, k: isize) -> &SDerivatives {
        if k >= 0 {
            &self.fwd[k as usize].1
        } else {
            &self.bwd[(-k - 1) as usize].1
        }
    }

    fn chord(&self, k: isize) -> ChordCoords {
        if k >= 0 {
            self.fwd[k as usize].0
        } else {
            self.bwd[(-k - 1) as usize].0
        }
    }

    /// Unwrapped polar angle of orbit point `k`.
    fn angle(&self, k: isize) -> f64 {
        match k {
            0 => self.seed_phi,
            k if k > 0 => self.fwd[k as usize - 1].2,
            k => self.bwd[(-k) as usize - 1].2,
        }
    }
}

/// Jacobi coefficients of an orbit segment.
///
/// Window position `i` (orbit index `first + i`) carries `a[i]`; `b[i]` is
/// `S_12` of the pair `(first + i - 1, first + i)`, so `b` has one more entry
/// than `a` and `angles` two more.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitWindow {
    /// Orbit index (seed = 0) of the first diagonal entry.
    pub first: isize,
    /// Unwrapped polar angles of orbit points `first - 1 ..= first + len`.
    pub angles: Vec<f64>,
    pub chords: Vec<ChordCoords>,
    #[serde(skip)]
    pub pairs: Vec<SDerivatives>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl OrbitWindow {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    fn from_trace(trace: &OrbitTrace<'_>, m_back: usize, n_fwd: usize) -> Self {
        let lo = -(m_back as isize) - 1;
        let hi = n_fwd as isize;
        let pairs: Vec<SDerivatives> = (lo..=hi).map(|k| *trace.pair(k)).collect();
        let chords = (lo..=hi).map(|k| trace.chord(k)).collect();
        let angles = (lo..=hi + 1).map(|k| trace.angle(k)).collect();
        let a = pairs.windows(2).map(|w| w[0].s22 + w[1].s11).collect();
        let b = pairs.iter().map(|d| d.s12).collect();
        Self { first: -(m_back as isize), angles, chords, pairs, a, b }
    }
}

/// Orbit window with `m_back` points before and `n_fwd` after the seed.
pub fn build_window(curve: &ConvexCurve, seed: &PhasePoint, m_back: usize, n_fwd: usize) -> Result<OrbitWindow, MapError> {
    let mut trace = OrbitTrace::new(curve, seed);
    trace.extend_forward(n_fwd + 1)?;
    trace.extend_backward(m_back + 1)?;
    Ok(OrbitWindow::from_trace(&trace, m_back, n_fwd))
}

/// A Jacobi field over all `len + 2` angle slots of a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiState {
    pub dq: Vec<f64>,
    /// First momentum form where the forward pair exists, second form at the last slot.
    pub dp: Vec<f64>,
    /// Largest relative disagreement between the two momentum forms.
    pub dp_mismatch: f64,
    /// Largest relative residual of the Jacobi equation.
    pub recurrence_residual: f64,
}

/// Forward recurrence from the two leftmost slots of the window.
pub fn propagate_jacobi(w: &OrbitWindow, dq0: f64, dq1: f64) -> JacobiState {
    let len = w.len();
    let mut dq = Vec::with_capacity(len + 2);
    dq.push(dq0);
    dq.push(dq1);
    for i in 0..len {
        let next = -(w.a[i] * dq[i + 1] + w.b[i] * dq[i]) / w.b[i + 1];
        dq.push(next);
    }

    let mut recurrence_residual: f64 = 0.0;
    for i in 0..len {
        let terms = [w.b[i] * dq[i], w.a[i] * dq[i + 1], w.b[i + 1] * dq[i + 2]];
        let scale: f64 = terms.iter().map(|x| x.abs()).sum();
        if scale > 0.0 {
            recurrence_residual = recurrence_residual.max(terms.iter().sum::<f64>().abs() / scale);
        }
    }

    let mut dp = Vec::with_capacity(len + 2);
    let mut dp_mismatch: f64 = 0.0;
    for j in 0..len + 2 {
        let second = (j > 0).then(|| {
            let d = &w.pairs[j - 1];
            (d.s22 * dq[j] + d.s12 * dq[j - 1], (d.s22 * dq[j]).abs() + (d.s12 * dq[j - 1]).abs())
        });
        let first = (j < len + 1).then(|| {
            let d = &w.pairs[j];
            (-d.s11 * dq[j] - d.s12 * dq[j + 1], (d.s11 * dq[j]).abs() + (d.s12 * dq[j + 1]).abs())
        });
        if let (Some((x, sx)), Some((y, sy))) = (first, second) {
            let scale = sx.max(sy);
            if scale > 0.0 {
                dp_mismatch = dp_mismatch.max((x - y).abs() / scale);
            }
        }
        dp.push(first.or(second).map_or(0.0, |v| v.0));
    }
    JacobiState { dq, dp, dp_mismatch, recurrence_residual }
}

/// One step of the linearised map in `(dp, dq)` through the chord derivatives.
pub fn jacobi_step(d: &SDerivatives, dp0: f64, dq0: f64) -> (f64, f64) {
    let dq1 = -(dp0 + d.s11 * dq0) / d.s12;
    (d.s22 * dq1 + d.s12 * dq0, dq1)
}

/// `DT` in `(p, phi)` coordinates, `[[dp1/dp0, dp1/dphi0], [dphi1/dp0, dphi1/dphi0]]`.
pub fn linearized_map(d: &SDerivatives) -> [[f64; 2]; 2] {
    let (dp_p, dq_p) = jacobi_step(d, 1.0, 0.0);
    let (dp_q, dq_q) = jacobi_step(d, 0.0, 1.0);
    [[dp_p, dp_q], [dq_p, dq_q]]
}

/// First `n >= 1` at which the radial variation `(dp, dq) = (1, 0)` at the
/// seed becomes radial again, searched up to `n_max` steps.
pub fn radial_conjugate_scan(curve: &ConvexCurve, seed: &PhasePoint, n_max: usize) -> Result<Option<usize>, MapError> {
    let map = BilliardMap::new(curve);
    let pair_at = |point: &PhasePoint, step: usize| -> Result<(PhasePoint, SDerivatives), MapError> {
        let (next, tan) = map
            .step_with_tangency(point)
            .map_err(|e| MapError::Orbit { step, source: Box::new(e) })?;
        Ok((next, s_derivatives(curve, ChordCoords::new(tan.phi_m, tan.t))))
    };
    if n_max == 0 {
        return Ok(None);
    }
    let (mut point, mut prev) = pair_at(seed, 0)?;
    let (mut q_prev, mut q_cur) = (0.0, -1.0 / prev.s12);
    let mut peak = q_cur.abs();
    if !(q_cur > SIGN_TOL * peak) {
        return Ok(Some(1));
    }
    for n in 1..n_max {
        let (next_point, cur) = pair_at(&point, n)?;
        let q_next = -((prev.s22 + cur.s11) * q_cur + prev.s12 * q_prev) / cur.s12;
        peak = peak.max(q_next.abs());
        if !(q_next > SIGN_TOL * peak) {
            return Ok(Some(n + 1));
        }
        q_prev = q_cur;
        q_cur = q_next;
        if peak > RESCALE_AT {
            q_prev /= peak;
            q_cur /= peak;
            peak = 1.0;
        }
        point = next_point;
        prev = cur;
    }
    Ok(None)
}

/// One row of a conjugate-point scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugateRow {
    pub seed_phi: f64,
    pub seed_t: f64,
    pub n_conjugate: Option<usize>,
}

/// [`radial_conjugate_scan`] over seeds `gamma(phi) - t gamma'(phi)` with
/// `phi_i = 2 pi i / phi_grid` and `t_j = t_max j / t_grid`, `j = 1..=t_grid`.
///
/// Rows come back in grid order whatever the scheduling; the first failing
/// seed in that order decides the error.
pub fn conjugate_scan(
    curve: &ConvexCurve,
    phi_grid: usize,
    t_grid: usize,
    t_max: f64,
    n_max: usize,
) -> Result<Vec<ConjugateRow>, MapError> {
    let seeds: Vec<(f64, f64)> = (0..phi_grid)
        .flat_map(|i| {
            let phi = 2.0 * PI * i as f64 / phi_grid as f64;
            (1..=t_grid).map(move |j| (phi, t_max * j as f64 / t_grid as f64))
        })
        .collect();
    let rows: Vec<Result<ConjugateRow, MapError>> = seeds
        .par_iter()
        .map(|&(phi, t)| {
            let seed = PhasePoint::from_chord(curve, phi, t)?;
            let n_conjugate = radial_conjugate_scan(curve, &seed, n_max)?;
            Ok(ConjugateRow { seed_phi: phi, seed_t: t, n_conjugate })
        })
        .collect();
    rows.into_iter().collect()
}

/// First row (in grid order) with a conjugate point.
pub fn first_conjugate(rows: &[ConjugateRow]) -> Option<&ConjugateRow> {
    rows.iter().find(|r| r.n_conjugate.is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MinimalityVerdict {
    PositiveDefinite,
    /// 1-based size of the first leading principal minor that is not positive.
    Indefinite { first_failing_minor: usize },
}

/// LDL^T positivity test of the window Hessian `tridiag(b, a, b)`.
pub fn hessian_minimality(w: &OrbitWindow) -> MinimalityVerdict {
    let mut pivot = 0.0;
    for (k, &a) in w.a.iter().enumerate() {
        pivot = if k == 0 { a } else { a - w.b[k] * w.b[k] / pivot };
        if !(pivot > 0.0) {
            return MinimalityVerdict::Indefinite { first_failing_minor: k + 1 };
        }
    }
    MinimalityVerdict::PositiveDefinite
}

/// Limits for [`hopf_omega`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfSettings {
    pub tol: f64,
    pub start: usize,
    pub n_cap: usize,
}

impl Default for HopfSettings {
    fn default() -> Self {
        Self { tol: 1e-10, start: 8, n_cap: 1 << 14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaSample {
    pub omega: f64,
    pub window: usize,
    pub converged: bool,
    /// Limit of `dq_1` for the field normalised by `dq_0 = 1`.
    pub dq1: f64,
    pub omega_image: f64,
    /// `|omega(T x) - S_22 - S_12 / dq_1|`.
    pub image_relation_residual: f64,
    /// `|omega(x) + S_11 + S_12 dq_1|`.
    pub seed_relation_residual: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub within_bounds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum HopfOutcome {
    Minimizing(OmegaSample),
    /// The field vanishing at `-window` stops being positive at orbit index `position`.
    PositivityFailure { window: usize, position: isize },
}

enum FieldOutcome {
    /// `dq_{-1}`, `dq_1` scaled so that `dq_0 = 1`.
    Positive { before: f64, after: f64 },
    SignChange { position: isize },
}

/// Field with `dq_from = 0`, `dq_{from+1} = 1`, checked positive through `to`.
fn zero_start_field(trace: &OrbitTrace<'_>, from: isize, to: isize) -> FieldOutcome {
    debug_assert!(from < -1 && to > 1);
    let (mut q_prev, mut q_cur) = (0.0, 1.0);
    let mut peak: f64 = 1.0;
    let mut saved = [0.0; 3];
    for n in from + 1..to {
        if (-1..=1).contains(&n) {
            saved[(n + 1) as usize] = q_cur;
        }
        let prev = trace.pair(n - 1);
        let cur = trace.pair(n);
        let q_next = -((prev.s22 + cur.s11) * q_cur + prev.s12 * q_prev) / cur.s12;
        peak = peak.max(q_next.abs());
        if !(q_next > SIGN_TOL * peak) {
            return FieldOutcome::SignChange { position: n + 1 };
        }
        q_prev = q_cur;
        q_cur = q_next;
        if peak > RESCALE_AT {
            q_prev /= peak;
            q_cur /= peak;
            for s in saved.iter_mut() {
                *s /= peak;
            }
            peak = 1.0;
        }
    }
    FieldOutcome::Positive { before: saved[0] / saved[1], after: saved[2] / saved[1] }
}

struct OmegaEstimate {
    omega: f64,
    dq1: f64,
    window: usize,
}

fn omega_with_trace(trace: &mut OrbitTrace<'_>, settings: &HopfSettings) -> Result<Result<OmegaEstimate, (usize, isize)>, JacobiError> {
    let estimate = |trace: &OrbitTrace<'_>, n: usize| -> Result<(f64, f64), (usize, isize)> {
        match zero_start_field(trace, -(n as isize), n as isize) {
            FieldOutcome::SignChange { position } => Err((n, position)),
            FieldOutcome::Positive { before, after } => {
                let d = trace.pair(-1);
                Ok((d.s22 + d.s12 * before, after))
            }
        }
    };
    let mut n = settings.start.max(4);
    trace.extend_forward(n)?;
    trace.extend_backward(n)?;
    let mut raw = match estimate(trace, n) {
        Ok(v) => v,
        Err(f) => return Ok(Err(f)),
    };
    let mut extrapolated: Option<(f64, f64)> = None;
    let mut previous_omega = raw.0;
    loop {
        let next_n = 2 * n;
        if next_n > settings.n_cap {
            let last = extrapolated.map_or(raw.0, |e| e.0);
            return Err(JacobiError::HopfNonConvergence { window: n, previous: previous_omega, last });
        }
        trace.extend_forward(next_n)?;
        trace.extend_backward(next_n)?;
        let next_raw = match estimate(trace, next_n) {
            Ok(v) => v,
            Err(f) => return Ok(Err(f)),
        };
        // omega_N carries an O(1/N) bias; one Richardson step removes its leading term.
        let next_ext = (2.0 * next_raw.0 - raw.0, 2.0 * next_raw.1 - raw.1);
        if let Some(prev) = extrapolated {
            if (next_ext.0 - prev.0).abs() < settings.tol && (next_ext.1 - prev.1).abs() < settings.tol {
                return Ok(Ok(OmegaEstimate { omega: next_ext.0, dq1: next_ext.1, window: next_n }));
            }
        }
        previous_omega = extrapolated.map_or(raw.0, |e| e.0);
        extrapolated = Some(next_ext);
        raw = next_raw;
        n = next_n;
    }
}

/// Hopf construction of the slope field `omega = dp_0 / dq_0` at the seed.
///
/// For windows `N = start, 2 start, ...` the field with `dq_{-N} = 0` is
/// propagated through `N`; once the Richardson-corrected `omega` settles,
/// positivity of the field is confirmed on the full cap window. `omega` at
/// the image point is computed by a separate run so that both evolution
/// relations are genuine checks.
pub fn hopf_omega(curve: &ConvexCurve, seed: &PhasePoint, settings: &HopfSettings) -> Result<HopfOutcome, JacobiError> {
    let mut trace = OrbitTrace::new(curve, seed);
    let est = match omega_with_trace(&mut trace, settings)? {
        Ok(e) => e,
        Err((window, position)) => return Ok(HopfOutcome::PositivityFailure { window, position }),
    };
    let cap = settings.n_cap as isize;
    trace.extend_forward(settings.n_cap + 1)?;
    trace.extend_backward(settings.n_cap + 1)?;
    if let FieldOutcome::SignChange { position } = zero_start_field(&trace, -cap, cap) {
        return Ok(HopfOutcome::PositivityFailure { window: settings.n_cap, position });
    }

    let image = BilliardMap::new(curve).step(seed)?;
    let mut image_trace = OrbitTrace::new(curve, &image);
    let image_est = match omega_with_trace(&mut image_trace, settings)? {
        Ok(e) => e,
        Err((window, position)) => {
            return Ok(HopfOutcome::PositivityFailure { window, position: position + 1 });
        }
    };

    let d0 = *trace.pair(0);
    let dm = *trace.pair(-1);
    let image_relation_residual = (image_est.omega - (d0.s22 + d0.s12 / est.dq1)).abs();
    let seed_relation_residual = (est.omega + d0.s11 + d0.s12 * est.dq1).abs();
    let (lower_bound, upper_bound) = (-d0.s11, dm.s22);
    Ok(HopfOutcome::Minimizing(OmegaSample {
        omega: est.omega,
        window: est.window,
        converged: true,
        dq1: est.dq1,
        omega_image: image_est.omega,
        image_relation_residual,
        seed_relation_residual,
        lower_bound,
        upper_bound,
        within_bounds: lower_bound < est.omega && est.omega < upper_bound,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::presets;
    use crate::geometry::PlanePoint;
    use approx::assert_abs_diff_eq;

    fn circle_seed() -> (ConvexCurve, PhasePoint) {
        let c = presets::unit_circle();
        let s = PhasePoint::from_chord(&c, 0.0, 1.0).unwrap();
        (c, s)
    }

    #[test]
    fn circle_window_coefficients() {
        let (c, s) = circle_seed();
        let w = build_window(&c, &s, 5, 7).unwrap();
        assert_eq!(w.len(), 13);
        assert_eq!(w.b.len(), 14);
        assert_eq!(w.angles.len(), 15);
        for &a in &w.a {
            assert_abs_diff_eq!(a, 2.0, epsilon = 1e-12);
        }
        for &b in &w.b {
            assert_abs_diff_eq!(b, -1.0, epsilon = 1e-12);
        }
        for pair in w.angles.windows(2) {
            assert_abs_diff_eq!(pair[1] - pair[0], PI / 2.0, epsilon = 1e-12);
        }
        let single = build_window(&c, &s, 0, 0).unwrap();
        assert_eq!((single.a.len(), single.b.len()), (1, 2));
    }

    #[test]
    fn ellipse_window_twists() {
        let e = presets::ellipse_2_1();
        let s = PhasePoint::from_cartesian(&e, PlanePoint::new(4.0, 0.0)).unwrap();
        let w = build_window(&e, &s, 10, 10).unwrap();
        assert!(w.b.iter().all(|&b| b < 0.0));
        assert!(w.angles.windows(2).all(|p| p[1] > p[0] && p[1] - p[0] < PI));
    }

    #[test]
    fn circle_field_is_linear() {
        let (c, s) = circle_seed();
        let w = build_window(&c, &s, 0, 20).unwrap();
        let st = propagate_jacobi(&w, 0.0, 1.0);
        for (n, &q) in st.dq.iter().enumerate() {
            assert_abs_diff_eq!(q, n as f64, epsilon = 1e-10);
        }
        assert!(st.dp_mismatch < 1e-12);
        assert!(st.recurrence_residual < 1e-12);
        let zero = propagate_jacobi(&w, 0.0, 0.0);
        assert!(zero.dq.iter().chain(&zero.dp).all(|&x| x == 0.0));
    }

    #[test]
    fn dp_forms_agree_on_fourier_orbit() {
        let f = presets::trefoil_005();
        let s = PhasePoint::from_chord(&f, 0.3, 1.2).unwrap();
        let w = build_window(&f, &s, 10, 30).unwrap();
        let st = propagate_jacobi(&w, 0.4, -0.7);
        assert!(st.dp_mismatch < 1e-10, "{}", st.dp_mismatch);
        assert!(st.recurrence_residual < 1e-12);
    }

    #[test]
    fn circle_has_no_conjugate_points() {
        let (c, s) = circle_seed();
        assert_eq!(radial_conjugate_scan(&c, &s, 10_000).unwrap(), None);
    }

    #[test]
    fn circle_hessian_spectrum() {
        let (c, s) = circle_seed();
        for m in [1, 2, 10, 50] {
            let w = build_window(&c, &s, 0, m - 1).unwrap();
            assert_eq!(hessian_minimality(&w), MinimalityVerdict::PositiveDefinite);
        }
    }

    #[test]
    fn single_entry_verdict_follows_sign() {
        let (c, s) = circle_seed();
        let mut w = build_window(&c, &s, 0, 0).unwrap();
        w.a[0] = -0.5;
        assert_eq!(hessian_minimality(&w), MinimalityVerdict::Indefinite { first_failing_minor: 1 });
    }

    #[test]
    fn linearisation_matches_finite_differences() {
        let f = presets::trefoil_005();
        let map = BilliardMap::new(&f);
        let mut x = PhasePoint::from_chord(&f, 1.0, 0.8).unwrap();
        for _ in 0..20 {
            let (y, tan) = map.step_with_tangency(&x).unwrap();
            let d = s_derivatives(&f, ChordCoords::new(tan.phi_m, tan.t));
            let lin = linearized_map(&d);
            let fd = map.differential_fd(&x, 1e-6).unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    assert!((lin[r][c] - fd[r][c]).abs() < 1e-5 * (1.0 + fd[r][c].abs()), "{lin:?} {fd:?}");
                }
            }
            assert!((crate::billiard::det2(&lin) - 1.0).abs() < 1e-12);
            x = y;
        }
    }

    #[test]
    fn circle_omega_vanishes() {
        let (c, s) = circle_seed();
        match hopf_omega(&c, &s, &HopfSettings::default()).unwrap() {
            HopfOutcome::Minimizing(o) => {
                assert_abs_diff_eq!(o.omega, 0.0, epsilon = 1e-10);
                assert_abs_diff_eq!(o.lower_bound, -1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(o.upper_bound, 1.0, epsilon = 1e-12);
                assert!(o.within_bounds);
                assert!(o.image_relation_residual < 1e-8 && o.seed_relation_residual < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ellipse_omega_converges() {
        let e = presets::ellipse_2_1();
        for &(phi, t) in &[(0.0, 1.0), (1.0, 0.4), (2.5, 2.5)] {
            let s = PhasePoint::from_chord(&e, phi, t).unwrap();
            match hopf_omega(&e, &s, &HopfSettings::default()).unwrap() {
                HopfOutcome::Minimizing(o) => {
                    assert!(o.within_bounds, "{o:?}");
                    assert!(o.image_relation_residual < 1e-8, "{o:?}");
                    assert!(o.seed_relation_residual < 1e-8, "{o:?}");
                }
                other => panic!("{other:?}"),
            }
        }
    }
}
