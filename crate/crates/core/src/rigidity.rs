//! Integral quantities tied to total integrability: the defect integral
//! `Q = int sqrt(chi)/r dphi`, the weighted phase-space integral `I` in its
//! closed and numerical forms, polar-dual areas and the Santalo point.
//!
//! With weights `A = 1/r0^2`, `B = 1/r1^2` the integrand
//! `(A^2 S_11 + 2 A B S_12 + B^2 S_22)(-S_12)|J|` splits as `F1 + F2 + F3`,
//! each with an elementary antiderivative in `t`. Summed over the chord
//! angle this gives `I = pi (Q - 2 pi)`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{ConvexCurve, CurveSample};
use crate::error::{CurveError, SantaloError};
use crate::generating::s_derivatives_at;
use crate::geometry::PlanePoint;
use crate::jacobi::{first_conjugate, ConjugateRow};
use crate::quadrature::{adaptive_gauss_kronrod, graded_breakpoints, periodic_nodes, periodic_trapezoid, DEFAULT_PHI_NODES};

/// Default truncation of the chord parameter before the analytic tails.
pub const DEFAULT_T_MAX: f64 = 50.0;
/// Tolerance for classifying `Q = 2 pi` and `Area * Area* = pi^2` as equalities.
pub const EQUALITY_TOL: f64 = 1e-7;
/// Relative Santalo tolerance (multiplied by the curve diameter).
pub const SANTALO_REL_TOL: f64 = 1e-9;
const T_ROW_TOL: f64 = 1e-13;
const T_MAX_DEPTH: u32 = 40;
const T_GRADING: u32 = 12;

/// `int_0^{2 pi} sqrt(chi) / r dphi` on `nodes` trapezoid nodes.
pub fn q_integral(curve: &ConvexCurve, nodes: usize) -> f64 {
    periodic_trapezoid(nodes, |phi| {
        let s = curve.eval(phi);
        s.chi.sqrt() / s.r
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrandSample {
    pub phi: f64,
    pub t: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// The assembled weighted integrand.
    pub total: f64,
}

impl IntegrandSample {
    /// `|F1 + F2 + F3 - total|` relative to the size of the summands.
    pub fn decomposition_error(&self) -> f64 {
        let scale = self.f1.abs() + self.f2.abs() + self.f3.abs();
        (self.f1 + self.f2 + self.f3 - self.total).abs() / scale.max(f64::MIN_POSITIVE)
    }
}

pub fn integrand(curve: &ConvexCurve, phi: f64, t: f64) -> IntegrandSample {
    integrand_at(&curve.eval(phi), t)
}

fn integrand_at(s: &CurveSample, t: f64) -> IntegrandSample {
    let d = s_derivatives_at(s, t);
    let (a, b) = (1.0 / d.r0sq, 1.0 / d.r1sq);
    let total = (a * a * d.s11 + 2.0 * a * b * d.s12 + b * b * d.s22) * d.measure_density();
    let (r, r1, chi) = (s.r, s.r_prime, s.chi);
    IntegrandSample {
        phi: s.phi,
        t,
        f1: 2.0 * chi / (chi * t * t + r * r),
        f2: chi * (t * r1 - r) / (r * d.r0sq),
        f3: -chi * (r + t * r1) / (r * d.r1sq),
        total,
    }
}

/// Analytic tails `int_T^inf F1 dt` and `int_T^inf (F2 + F3) dt` at one angle.
///
/// The second uses the antiderivative
/// `G(t) = chi/K [atan(r'/r - t K/r^2) - atan(r'/r + t K/r^2)] + chi r' / (2 r K) ln(r0^2/r1^2)`,
/// `K = r^2 + r'^2`, whose logarithm tends to zero as `t -> inf`.
pub fn integrand_tails(s: &CurveSample, t_max: f64) -> (f64, f64) {
    let (r, r1, chi) = (s.r, s.r_prime, s.chi);
    let root = chi.sqrt();
    let f1_tail = 2.0 * root / r * (r / (root * t_max)).atan();
    let k = s.speed_sq();
    let u = r1 / r;
    let v = t_max * k / (r * r);
    let tr2 = (t_max * r).powi(2);
    let r0sq = (r - t_max * r1).powi(2) + tr2;
    let r1sq = (r + t_max * r1).powi(2) + tr2;
    let g = chi / k * ((u - v).atan() - (u + v).atan()) + chi * r1 / (2.0 * r * k) * (r0sq / r1sq).ln();
    (f1_tail, -PI * chi / k - g)
}

/// `pi (Q - 2 pi)` with the curvature integral that closes it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedDefect {
    pub value: f64,
    pub q: f64,
    pub total_curvature: f64,
    /// `pi Q - pi int chi/(r^2+r'^2) dphi`, the same quantity before the curvature integral is replaced by `2 pi`.
    pub unreduced: f64,
}

pub fn i_closed(curve: &ConvexCurve, nodes: usize) -> ClosedDefect {
    let q = q_integral(curve, nodes);
    let total_curvature = curve.total_curvature(nodes);
    ClosedDefect { value: PI * (q - TAU), q, total_curvature, unreduced: PI * q - PI * total_curvature }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericSettings {
    pub phi_grid: usize,
    pub t_max: f64,
    pub row_tol: f64,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self { phi_grid: DEFAULT_PHI_NODES, t_max: DEFAULT_T_MAX, row_tol: T_ROW_TOL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericDefect {
    pub value: f64,
    pub error: f64,
    /// Quadrature over `(0, t_max]` alone.
    pub truncated: f64,
    pub tail_f1: f64,
    pub tail_f23: f64,
    /// Same integral on every second angle node.
    pub half_grid_value: f64,
    pub panels: usize,
    pub t_max: f64,
    pub phi_grid: usize,
}

struct Row {
    truncated: f64,
    tail_f1: f64,
    tail_f23: f64,
    error: f64,
    magnitude: f64,
    panels: usize,
}

/// `I` by trapezoid in the angle times adaptive Gauss-Kronrod in `t` on a
/// mesh graded toward `t = 0`, plus the analytic tails beyond `t_max`.
///
/// The error estimate adds the Kronrod estimates, the difference to the
/// half-resolution angle grid and a round-off floor.
pub fn i_numeric(curve: &ConvexCurve, settings: &NumericSettings) -> NumericDefect {
    let n = settings.phi_grid;
    let breaks = graded_breakpoints(settings.t_max, T_GRADING);
    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map(|j| {
            let phi = TAU * j as f64 / n as f64;
            let s = curve.eval(phi);
            let mut magnitude = 0.0;
            let quad = adaptive_gauss_kronrod(
                |t| {
                    let v = integrand_at(&s, t).total;
                    magnitude += v.abs();
                    v
                },
                &breaks,
                settings.row_tol,
                T_MAX_DEPTH,
            );
            let (tail_f1, tail_f23) = integrand_tails(&s, settings.t_max);
            Row { truncated: quad.value, tail_f1, tail_f23, error: quad.error, magnitude, panels: quad.panels }
        })
        .collect();

    let w = TAU / n as f64;
    let (mut truncated, mut tail_f1, mut tail_f23, mut error, mut panels) = (0.0, 0.0, 0.0, 0.0, 0);
    let (mut half, mut magnitude) = (0.0, 0.0);
    for (j, row) in rows.iter().enumerate() {
        truncated += row.truncated;
        tail_f1 += row.tail_f1;
        tail_f23 += row.tail_f23;
        error += row.error;
        panels += row.panels;
        magnitude += row.magnitude / (15.0 * row.panels as f64);
        if j % 2 == 0 {
            half += row.truncated + row.tail_f1 + row.tail_f23;
        }
    }
    let value = w * (truncated + tail_f1 + tail_f23);
    let half_grid_value = 2.0 * w * half;
    let round_off = 64.0 * f64::EPSILON * w * (magnitude * settings.t_max + tail_f1.abs() + tail_f23.abs());
    NumericDefect {
        value,
        error: w * error + (value - half_grid_value).abs() + round_off,
        truncated: w * truncated,
        tail_f1: w * tail_f1,
        tail_f23: w * tail_f23,
        half_grid_value,
        panels,
        t_max: settings.t_max,
        phi_grid: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaDual {
    pub area_gamma: f64,
    /// `1/2 int (h^2 - h'^2) dphi`, `h = 1/r`.
    pub area_dual: f64,
    /// `1/2 int (h^2 + h h'') dphi`.
    pub area_dual_alt: f64,
    pub bs_product: f64,
}

pub fn area_and_dual(curve: &ConvexCurve, nodes: usize) -> AreaDual {
    let mut gamma = 0.0;
    let mut dual = 0.0;
    let mut dual_alt = 0.0;
    for phi in periodic_nodes(nodes) {
        let s = curve.eval(phi);
        let h = 1.0 / s.r;
        let dh = -s.r_prime * h * h;
        let ddh = -s.r_second * h * h + 2.0 * s.r_prime * s.r_prime * h * h * h;
        gamma += s.r * s.r;
        dual += h * h - dh * dh;
        dual_alt += h * h + h * ddh;
    }
    let w = 0.5 * TAU / nodes as f64;
    let (area_gamma, area_dual) = (w * gamma, w * dual);
    AreaDual { area_gamma, area_dual, area_dual_alt: w * dual_alt, bs_product: area_gamma * area_dual }
}

/// `int (1/h) sqrt(h (h + h'')) dphi <= sqrt(int h^-2) sqrt(int (h^2 + h h''))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchySchwarz {
    pub lhs: f64,
    pub rhs: f64,
    /// `sqrt(2 Area)` and `sqrt(2 Area*)`, the two factors of `rhs`.
    pub factors: (f64, f64),
    /// Largest pointwise `|chi - (h + h'')/h^3|` relative to `chi`.
    pub chi_identity_error: f64,
}

pub fn cauchy_schwarz(curve: &ConvexCurve, nodes: usize) -> CauchySchwarz {
    let (mut lhs, mut inv, mut dual) = (0.0, 0.0, 0.0);
    let mut chi_identity_error: f64 = 0.0;
    for phi in periodic_nodes(nodes) {
        let s = curve.eval(phi);
        let h = 1.0 / s.r;
        let ddh = -s.r_second * h * h + 2.0 * s.r_prime * s.r_prime * h * h * h;
        let chi_dual = (h + ddh) / (h * h * h);
        chi_identity_error = chi_identity_error.max((chi_dual - s.chi).abs() / s.chi);
        lhs += (h * (h + ddh)).sqrt() / h;
        inv += 1.0 / (h * h);
        dual += h * h + h * ddh;
    }
    let w = TAU / nodes as f64;
    let factors = ((w * inv).sqrt(), (w * dual).sqrt());
    CauchySchwarz { lhs: w * lhs, rhs: factors.0 * factors.1, factors, chi_identity_error }
}

/// Area of the polar dual about an arbitrary interior point, from the
/// support function of the curve: `1/2 int k / h_x^2 ds` with
/// `h_x = <gamma - x, n>`. Precomputes boundary samples once.
#[derive(Debug, Clone)]
pub struct DualAreaObjective {
    points: Vec<PlanePoint>,
    normals: Vec<PlanePoint>,
    weights: Vec<f64>,
}

impl DualAreaObjective {
    pub fn new(curve: &ConvexCurve, nodes: usize) -> Self {
        let w = TAU / nodes as f64;
        let mut points = Vec::with_capacity(nodes);
        let mut normals = Vec::with_capacity(nodes);
        let mut weights = Vec::with_capacity(nodes);
        for phi in periodic_nodes(nodes) {
            let s = curve.eval(phi);
            let (g, dg, _) = curve.frame(phi);
            points.push(g);
            normals.push(-dg.perp() * (1.0 / dg.norm()));
            weights.push(0.5 * w * s.chi / s.speed_sq());
        }
        Self { points, normals, weights }
    }

    /// `+inf` when `x` is not strictly inside.
    pub fn value(&self, x: PlanePoint) -> f64 {
        let mut sum = 0.0;
        for ((g, n), w) in self.points.iter().zip(&self.normals).zip(&self.weights) {
            let h = (*g - x).dot(*n);
            if !(h > 0.0) {
                return f64::INFINITY;
            }
            sum += w / (h * h);
        }
        sum
    }

    /// Value, gradient and Hessian `[[xx, xy], [xy, yy]]`.
    pub fn second_order(&self, x: PlanePoint) -> (f64, PlanePoint, [[f64; 2]; 2]) {
        let mut v = 0.0;
        let mut g = PlanePoint::ORIGIN;
        let mut hess = [[0.0; 2]; 2];
        for ((p, n), w) in self.points.iter().zip(&self.normals).zip(&self.weights) {
            let h = (*p - x).dot(*n);
            let h2 = h * h;
            v += w / h2;
            g = g + *n * (2.0 * w / (h2 * h));
            let c = 6.0 * w / (h2 * h2);
            hess[0][0] += c * n.x * n.x;
            hess[0][1] += c * n.x * n.y;
            hess[1][1] += c * n.y * n.y;
        }
        hess[1][0] = hess[0][1];
        (v, g, hess)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SantaloPoint {
    pub point: PlanePoint,
    pub area_dual: f64,
    pub evaluations: usize,
    pub restarts: usize,
    /// Length of the last polishing step.
    pub last_step: f64,
}

const NM_MAX_EVALS: usize = 4000;
const NM_RESTARTS: usize = 4;

/// Nelder-Mead on the plane; returns the best vertex and the evaluation count,
/// or `None` if the evaluation budget runs out.
fn nelder_mead<F: Fn(PlanePoint) -> f64>(f: &F, start: PlanePoint, size: f64, tol: f64, budget: usize) -> Option<(PlanePoint, f64, usize)> {
    let mut simplex = [start, start + PlanePoint::new(size, 0.0), start + PlanePoint::new(0.0, size)];
    let mut values = simplex.map(f);
    let mut evals = 3;
    loop {
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        let diameter = simplex[0].distance(simplex[1]).max(simplex[0].distance(simplex[2])).max(simplex[1].distance(simplex[2]));
        if diameter < tol {
            return Some((simplex[0], values[0], evals));
        }
        if evals >= budget {
            return None;
        }
        let centroid = (simplex[0] + simplex[1]) * 0.5;
        let reflected = centroid + (centroid - simplex[2]);
        let fr = f(reflected);
        evals += 1;
        if fr < values[0] {
            let expanded = centroid + (centroid - simplex[2]) * 2.0;
            let fe = f(expanded);
            evals += 1;
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[2] {
            let c = centroid + (reflected - centroid) * 0.5;
            (c, f(c))
        } else {
            let c = centroid + (simplex[2] - centroid) * 0.5;
            (c, f(c))
        };
        evals += 1;
        if fc < values[2].min(fr) {
            simplex[2] = contracted;
            values[2] = fc;
            continue;
        }
        for k in 1..3 {
            simplex[k] = simplex[0] + (simplex[k] - simplex[0]) * 0.5;
            values[k] = f(simplex[k]);
        }
        evals += 2;
    }
}

/// Interior point minimising the dual area.
///
/// Simplex descent from the area centroid, restarted with a fresh simplex
/// until two consecutive runs agree to `tol`, then Newton steps on the
/// analytic gradient and Hessian, since function values alone cannot locate a
/// quadratic minimum much below the square root of machine precision.
pub fn santalo_point(curve: &ConvexCurve, tol: f64, nodes: usize) -> Result<SantaloPoint, SantaloError> {
    let objective = DualAreaObjective::new(curve, nodes);
    let f = |x: PlanePoint| objective.value(x);
    let diameter = curve.diameter();
    let mut x = curve.area_centroid(nodes);
    let mut evaluations = 0;
    let mut restarts = 0;
    let mut size = 0.05 * diameter;
    let nm_tol = tol.max(1e-7 * diameter);
    loop {
        let budget = NM_MAX_EVALS.saturating_sub(evaluations);
        let (best, _, used) = nelder_mead(&f, x, size, nm_tol, budget)
            .ok_or(SantaloError::NonConvergence { evaluations: NM_MAX_EVALS, diameter: size })?;
        evaluations += used;
        let moved = best.distance(x);
        x = best;
        if moved < nm_tol || restarts >= NM_RESTARTS {
            break;
        }
        restarts += 1;
        size = (4.0 * moved).max(10.0 * nm_tol);
    }

    let mut last_step = f64::INFINITY;
    for _ in 0..50 {
        let (v, g, h) = objective.second_order(x);
        evaluations += 1;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if !(det > 0.0 && v.is_finite()) {
            break;
        }
        let step = PlanePoint::new((h[1][1] * g.x - h[0][1] * g.y) / det, (h[0][0] * g.y - h[1][0] * g.x) / det);
        let next = x - step;
        // Summation noise makes values unreliable for sub-tolerance steps.
        if step.norm() >= tol && !(objective.value(next) <= v * (1.0 + 1e-12)) {
            break;
        }
        x = next;
        last_step = step.norm();
        if last_step < 1e-3 * tol {
            break;
        }
    }
    if !(last_step < tol) {
        return Err(SantaloError::NonConvergence { evaluations, diameter: last_step });
    }
    Ok(SantaloPoint { point: x, area_dual: objective.value(x), evaluations, restarts, last_step })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportSettings {
    pub phi_grid: usize,
    pub t_max: f64,
    pub row_tol: f64,
    pub santalo_tol: f64,
    pub equality_tol: f64,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self {
            phi_grid: DEFAULT_PHI_NODES,
            t_max: DEFAULT_T_MAX,
            row_tol: T_ROW_TOL,
            santalo_tol: SANTALO_REL_TOL,
            equality_tol: EQUALITY_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    /// `Q >= 2 pi - tol`: necessary when every orbit is locally minimizing.
    pub q_at_least_2pi: bool,
    /// `Q <= 2 pi + tol` about the Santalo point, true for every convex curve.
    pub q_at_most_2pi_at_santalo: bool,
    /// `|Q - 2 pi| < tol`.
    pub equality: bool,
    /// `Area * Area* <= pi^2 + tol`.
    pub santalo_bound: bool,
    /// `Q < 2 pi - tol`: some orbit has conjugate points.
    pub conjugate_points_certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateSummary {
    pub phi_grid: usize,
    pub t_grid: usize,
    pub t_max: f64,
    pub n_max: usize,
    pub seeds: usize,
    pub with_conjugate: usize,
    pub first: Option<ConjugateRow>,
}

impl ConjugateSummary {
    pub fn from_rows(rows: &[ConjugateRow], phi_grid: usize, t_grid: usize, t_max: f64, n_max: usize) -> Self {
        Self {
            phi_grid,
            t_grid,
            t_max,
            n_max,
            seeds: rows.len(),
            with_conjugate: rows.iter().filter(|r| r.n_conjugate.is_some()).count(),
            first: first_conjugate(rows).copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub settings: ReportSettings,
    pub input_origin: PlanePoint,
    pub santalo_point: PlanePoint,
    pub santalo_evaluations: usize,
    /// Pointwise error of the radial function refit about the Santalo point
    /// (zero when the origin was already there).
    pub refit_residual: f64,
    pub q: f64,
    /// `Q` on twice as many angle nodes.
    pub q_fine: f64,
    pub q_minus_2pi: f64,
    pub total_curvature: f64,
    pub i_closed: f64,
    pub i_numeric: NumericDefect,
    pub area_gamma: f64,
    pub area_dual: f64,
    pub area_dual_alt: f64,
    pub bs_product: f64,
    pub cauchy_schwarz: CauchySchwarz,
    pub verdicts: Verdicts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conjugate_scan: Option<ConjugateSummary>,
}

/// Moves the origin to the Santalo point and evaluates every quantity there.
///
/// Returns the report and the curve about the Santalo point.
pub fn rigidity_report(curve: &ConvexCurve, settings: &ReportSettings) -> Result<(RigidityReport, ConvexCurve), SantaloError> {
    let n = settings.phi_grid;
    let tol = settings.santalo_tol * curve.diameter();
    let sp = santalo_point(curve, tol, n)?;
    // Keep the exact representation when the origin is already the minimiser.
    let (centred, refit_residual) = if sp.point.distance(curve.origin()) < tol {
        (curve.clone(), 0.0)
    } else {
        let moved = curve.reorigin(sp.point, 2 * n).map_err(SantaloError::from)?;
        (moved.curve, moved.residual)
    };
    let closed = i_closed(&centred, n);
    let numeric = i_numeric(&centred, &NumericSettings { phi_grid: n, t_max: settings.t_max, row_tol: settings.row_tol });
    let areas = area_and_dual(&centred, n);
    let q_minus_2pi = closed.q - TAU;
    let eq = settings.equality_tol;
    let verdicts = Verdicts {
        q_at_least_2pi: q_minus_2pi >= -eq,
        q_at_most_2pi_at_santalo: q_minus_2pi <= eq,
        equality: q_minus_2pi.abs() < eq,
        santalo_bound: areas.bs_product <= PI * PI + eq,
        conjugate_points_certified: q_minus_2pi < -eq,
    };
    let report = RigidityReport {
        settings: *settings,
        input_origin: curve.origin(),
        santalo_point: centred.origin(),
        santalo_evaluations: sp.evaluations,
        refit_residual,
        q: closed.q,
        q_fine: q_integral(&centred, 2 * n),
        q_minus_2pi,
        total_curvature: closed.total_curvature,
        i_closed: closed.value,
        i_numeric: numeric,
        area_gamma: areas.area_gamma,
        area_dual: areas.area_dual,
        area_dual_alt: areas.area_dual_alt,
        bs_product: areas.bs_product,
        cauchy_schwarz: cauchy_schwarz(&centred, n),
        verdicts,
        conjugate_scan: None,
    };
    Ok((report, centred))
}

/// Dual area about `x` after refitting the radial function there.
pub fn dual_area_about(curve: &ConvexCurve, x: PlanePoint, nodes: usize) -> Result<f64, CurveError> {
    let moved = curve.reorigin(x, 2 * nodes)?;
    Ok(area_and_dual(&moved.curve, nodes).area_dual)
}
