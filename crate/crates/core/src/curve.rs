//! Strictly convex closed curves given by a radial function about an origin.
//!
//! A curve is `gamma(phi) = origin + r(phi) e_phi`. Circles and ellipses are
//! centred at their origin and evaluated in closed form; Fourier curves carry
//! a finite trigonometric series for `r`. Every constructor validates the
//! curve on a dense grid, so a [`ConvexCurve`] value is always strictly convex.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::CurveError;
use crate::geometry::{PlanePoint, PlaneVector};
use crate::quadrature::{periodic_nodes, periodic_trapezoid};

/// Grid used by the constructors' convexity check.
pub const VALIDATION_GRID: usize = 4096;
/// Minimum grid accepted by [`CurveShape::validate`].
pub const MIN_VALIDATION_GRID: usize = 256;
/// `chi` must exceed this multiple of `r_max^2` everywhere on the grid.
pub const CHI_RELATIVE_THRESHOLD: f64 = 1e-6;
/// Refit coefficients below this magnitude are dropped.
pub const FOURIER_CUTOFF: f64 = 1e-13;
/// Largest accepted pointwise refit error.
pub const REFIT_RESIDUAL_LIMIT: f64 = 1e-8;

/// Finite trigonometric series `a0 + sum_k cos[k-1] cos(k phi) + sin[k-1] sin(k phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub a0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn harmonics(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    /// `(r, r', r'')` by term-by-term differentiation.
    fn eval3(&self, phi: f64) -> (f64, f64, f64) {
        let (s1, c1) = phi.sin_cos();
        let (mut ck, mut sk) = (1.0, 0.0);
        let (mut r, mut dr, mut ddr) = (self.a0, 0.0, 0.0);
        for k in 1..=self.harmonics() {
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
            // Re-anchor the recurrence periodically to keep round-off flat.
            if k % 64 == 0 {
                let (s, c) = (k as f64 * phi).sin_cos();
                ck = c;
                sk = s;
            }
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            let kf = k as f64;
            r += a * ck + b * sk;
            dr += kf * (b * ck - a * sk);
            ddr -= kf * kf * (a * ck + b * sk);
        }
        (r, dr, ddr)
    }
}

/// Geometric kind of a curve.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveShape {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Fourier(FourierSeries),
}

/// One evaluation of the radial function and the curvature data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub phi: f64,
    pub r: f64,
    pub r_prime: f64,
    pub r_second: f64,
    /// `r^2 + 2 r'^2 - r r''`.
    pub chi: f64,
    /// `chi / (r^2 + r'^2)^{3/2}`.
    pub curvature: f64,
    /// `ds/dphi = sqrt(r^2 + r'^2)`.
    pub arc_element: f64,
}

impl CurveSample {
    fn new(phi: f64, r: f64, r_prime: f64, r_second: f64) -> Self {
        let chi = r * r + 2.0 * r_prime * r_prime - r * r_second;
        let speed_sq = r * r + r_prime * r_prime;
        let arc_element = speed_sq.sqrt();
        Self { phi, r, r_prime, r_second, chi, curvature: chi / (speed_sq * arc_element), arc_element }
    }

    /// `r^2 + r'^2`.
    #[inline]
    pub fn speed_sq(&self) -> f64 {
        self.r * self.r + self.r_prime * self.r_prime
    }
}

/// Grid minima reported by a successful validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub grid: usize,
    pub min_r: f64,
    pub min_r_phi: f64,
    pub min_chi: f64,
    pub min_chi_phi: f64,
    pub max_r: f64,
}

impl CurveShape {
    fn check_parameters(&self) -> Result<(), CurveError> {
        let bad = |what: &str| Err(CurveError::InvalidParameter(what.to_string()));
        match self {
            CurveShape::Circle { radius } if !(radius.is_finite() && *radius > 0.0) => bad("circle radius must be positive"),
            CurveShape::Ellipse { a, b } if !(a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0) => {
                bad("ellipse semi-axes must be positive")
            }
            CurveShape::Fourier(s) if !s.a0.is_finite() || s.cos.iter().chain(&s.sin).any(|c| !c.is_finite()) => {
                bad("Fourier coefficients must be finite")
            }
            _ => Ok(()),
        }
    }

    /// `(r, r', r'')` at `phi`.
    pub fn radial(&self, phi: f64) -> (f64, f64, f64) {
        match self {
            CurveShape::Circle { radius } => (*radius, 0.0, 0.0),
            CurveShape::Ellipse { a, b } => {
                // r = ab D^{-1/2}, D = b^2 cos^2 + a^2 sin^2 = b^2 + (a^2 - b^2) sin^2.
                let (s, c) = phi.sin_cos();
                let (s2, c2) = (2.0 * phi).sin_cos();
                let diff = a * a - b * b;
                let d = b * b * c * c + a * a * s * s;
                let d1 = diff * s2;
                let d2 = 2.0 * diff * c2;
                let ab = a * b;
                let inv_sqrt = 1.0 / d.sqrt();
                let inv_d = 1.0 / d;
                let r = ab * inv_sqrt;
                let r1 = -0.5 * ab * d1 * inv_sqrt * inv_d;
                let r2 = ab * inv_sqrt * inv_d * (0.75 * d1 * d1 * inv_d - 0.5 * d2);
                (r, r1, r2)
            }
            CurveShape::Fourier(series) => series.eval3(phi),
        }
    }

    pub fn eval(&self, phi: f64) -> CurveSample {
        let (r, r1, r2) = self.radial(phi);
        CurveSample::new(phi, r, r1, r2)
    }

    /// Accept iff `r > 0` and `chi > CHI_RELATIVE_THRESHOLD * r_max^2` on a uniform grid.
    pub fn validate(&self, grid: usize) -> Result<ValidationReport, CurveError> {
        self.check_parameters()?;
        if grid < MIN_VALIDATION_GRID {
            return Err(CurveError::GridTooSmall(grid));
        }
        let mut report = ValidationReport {
            grid,
            min_r: f64::INFINITY,
            min_r_phi: 0.0,
            min_chi: f64::INFINITY,
            min_chi_phi: 0.0,
            max_r: 0.0,
        };
        for phi in periodic_nodes(grid) {
            let s = self.eval(phi);
            if s.r < report.min_r {
                report.min_r = s.r;
                report.min_r_phi = phi;
            }
            if s.chi < report.min_chi {
                report.min_chi = s.chi;
                report.min_chi_phi = phi;
            }
            report.max_r = report.max_r.max(s.r);
        }
        if !(report.min_r > 0.0) {
            return Err(CurveError::NonPositiveRadius { phi: report.min_r_phi, value: report.min_r });
        }
        let threshold = CHI_RELATIVE_THRESHOLD * report.max_r * report.max_r;
        if !(report.min_chi > threshold) {
            return Err(CurveError::NotStrictlyConvex { phi: report.min_chi_phi, value: report.min_chi, threshold });
        }
        Ok(report)
    }
}

/// A validated strictly convex curve together with the origin its radial
/// function refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCurve {
    shape: CurveShape,
    origin: PlanePoint,
    validation: ValidationReport,
}

impl ConvexCurve {
    pub fn new(shape: CurveShape, origin: PlanePoint) -> Result<Self, CurveError> {
        if !origin.is_finite() {
            return Err(CurveError::InvalidParameter("origin must be finite".into()));
        }
        let validation = shape.validate(VALIDATION_GRID)?;
        Ok(Self { shape, origin, validation })
    }

    pub fn circle(radius: f64) -> Result<Self, CurveError> {
        Self::new(CurveShape::Circle { radius }, PlanePoint::ORIGIN)
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self, CurveError> {
        Self::new(CurveShape::Ellipse { a, b }, PlanePoint::ORIGIN)
    }

    pub fn fourier(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, CurveError> {
        Self::new(CurveShape::Fourier(FourierSeries { a0, cos, sin }), PlanePoint::ORIGIN)
    }

    /// The same radial function about a different origin, i.e. the curve
    /// translated by `origin - self.origin()`.
    pub fn translated_to(&self, origin: PlanePoint) -> Self {
        Self { shape: self.shape.clone(), origin, validation: self.validation }
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn origin(&self) -> PlanePoint {
        self.origin
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.validation
    }

    #[inline]
    pub fn eval(&self, phi: f64) -> CurveSample {
        self.shape.eval(phi)
    }

    #[inline]
    pub fn radius(&self, phi: f64) -> f64 {
        self.shape.radial(phi).0
    }

    /// `gamma(phi)`.
    #[inline]
    pub fn boundary_point(&self, phi: f64) -> PlanePoint {
        self.origin + PlanePoint::from_polar(self.radius(phi), phi)
    }

    /// `gamma'(phi) = r' e_phi + r e_phi^perp`.
    #[inline]
    pub fn tangent_vector(&self, phi: f64) -> PlaneVector {
        let (r, r1, _) = self.shape.radial(phi);
        let e = PlanePoint::unit(phi);
        e * r1 + e.perp() * r
    }

    /// `(gamma, gamma', gamma'')` at `phi`.
    #[inline]
    pub fn frame(&self, phi: f64) -> (PlanePoint, PlaneVector, PlaneVector) {
        let (r, r1, r2) = self.shape.radial(phi);
        let e = PlanePoint::unit(phi);
        let n = e.perp();
        (self.origin + e * r, e * r1 + n * r, e * (r2 - r) + n * (2.0 * r1))
    }

    /// Polar coordinates `(rho, phi)` of `point` about the origin.
    pub fn polar_of(&self, point: PlanePoint) -> (f64, f64) {
        let d = point - self.origin;
        (d.norm(), d.angle())
    }

    /// Signed radial gap `rho - r(phi)`: positive outside, negative inside.
    pub fn radial_gap(&self, point: PlanePoint) -> f64 {
        let (rho, phi) = self.polar_of(point);
        rho - self.radius(phi)
    }

    pub fn contains_strictly(&self, point: PlanePoint) -> bool {
        self.radial_gap(point) < 0.0
    }

    pub fn max_radius(&self) -> f64 {
        self.validation.max_r
    }

    /// Largest distance between two of 1024 boundary samples.
    pub fn diameter(&self) -> f64 {
        match self.shape {
            CurveShape::Circle { radius } => 2.0 * radius,
            CurveShape::Ellipse { a, b } => 2.0 * a.max(b),
            CurveShape::Fourier(_) => {
                let pts: Vec<PlanePoint> = periodic_nodes(1024).map(|p| self.boundary_point(p)).collect();
                let mut best: f64 = 0.0;
                for (i, p) in pts.iter().enumerate() {
                    for q in &pts[i + 1..] {
                        best = best.max(p.distance(*q));
                    }
                }
                best
            }
        }
    }

    /// `1/2 int r^2 dphi`.
    pub fn area(&self, nodes: usize) -> f64 {
        0.5 * periodic_trapezoid(nodes, |phi| self.radius(phi).powi(2))
    }

    /// Centroid of the enclosed region.
    pub fn area_centroid(&self, nodes: usize) -> PlanePoint {
        let area = self.area(nodes);
        let mx = periodic_trapezoid(nodes, |phi| self.radius(phi).powi(3) * phi.cos()) / 3.0;
        let my = periodic_trapezoid(nodes, |phi| self.radius(phi).powi(3) * phi.sin()) / 3.0;
        self.origin + PlanePoint::new(mx / area, my / area)
    }

    /// `int k ds = int chi / (r^2 + r'^2) dphi`, which is `2 pi` for a closed convex curve.
    pub fn total_curvature(&self, nodes: usize) -> f64 {
        periodic_trapezoid(nodes, |phi| {
            let s = self.eval(phi);
            s.chi / s.speed_sq()
        })
    }

    /// Distance along the ray `new_origin + s e_theta` to the boundary.
    fn ray_exit(&self, new_origin: PlanePoint, theta: f64, s_hi: f64) -> Option<f64> {
        let dir = PlanePoint::unit(theta);
        let gap = |s: f64| self.radial_gap(new_origin + dir * s);
        let (mut lo, mut hi) = (0.0, s_hi);
        if !(gap(lo) < 0.0 && gap(hi) > 0.0) {
            return None;
        }
        while hi - lo > 1e-15 * s_hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Radial function about `new_origin`, refitted as a Fourier series on
    /// `grid` uniform angles. See [`Reorigined`].
    pub fn reorigin(&self, new_origin: PlanePoint, grid: usize) -> Result<Reorigined, CurveError> {
        if new_origin == self.origin {
            return Ok(Reorigined { curve: self.clone(), residual: 0.0 });
        }
        if !new_origin.is_finite() || !self.contains_strictly(new_origin) {
            return Err(CurveError::OriginOutside { x: new_origin.x, y: new_origin.y });
        }
        if grid < 8 || grid % 2 != 0 {
            return Err(CurveError::InvalidParameter(format!("refit grid must be even and >= 8, got {grid}")));
        }
        let s_hi = 2.0 * (self.max_radius() * 1.01 + new_origin.distance(self.origin));
        let outside = || CurveError::OriginOutside { x: new_origin.x, y: new_origin.y };
        let mut samples = Vec::with_capacity(grid);
        for theta in periodic_nodes(grid) {
            samples.push(self.ray_exit(new_origin, theta, s_hi).ok_or_else(outside)?);
        }
        let series = real_dft(&samples);
        let shape = CurveShape::Fourier(series);

        let mut residual: f64 = 0.0;
        for j in 0..grid {
            let theta = TAU * (j as f64 + 0.5) / grid as f64;
            let exact = self.ray_exit(new_origin, theta, s_hi).ok_or_else(outside)?;
            residual = residual.max((shape.radial(theta).0 - exact).abs());
        }
        if residual > REFIT_RESIDUAL_LIMIT {
            return Err(CurveError::RefitResidual { residual, limit: REFIT_RESIDUAL_LIMIT, grid });
        }
        Ok(Reorigined { curve: ConvexCurve::new(shape, new_origin)?, residual })
    }
}

/// Result of moving the origin: the refitted curve and the largest pointwise
/// error of the refit on the interleaved (doubled) grid.
#[derive(Debug, Clone)]
pub struct Reorigined {
    pub curve: ConvexCurve,
    pub residual: f64,
}

/// Real Fourier coefficients of equispaced samples, Nyquist term dropped and
/// coefficients under [`FOURIER_CUTOFF`] removed.
fn real_dft(samples: &[f64]) -> FourierSeries {
    let n = samples.len();
    let table: Vec<(f64, f64)> = (0..n).map(|m| (TAU * m as f64 / n as f64).sin_cos()).collect();
    let a0 = samples.iter().sum::<f64>() / n as f64;
    let mut cos = Vec::with_capacity(n / 2);
    let mut sin = Vec::with_capacity(n / 2);
    for k in 1..n / 2 {
        let (mut c, mut s) = (0.0, 0.0);
        for (j, v) in samples.iter().enumerate() {
            let (sv, cv) = table[(k * j) % n];
            c += v * cv;
            s += v * sv;
        }
        let scale = 2.0 / n as f64;
        let c = c * scale;
        let s = s * scale;
        cos.push(if c.abs() < FOURIER_CUTOFF { 0.0 } else { c });
        sin.push(if s.abs() < FOURIER_CUTOFF { 0.0 } else { s });
    }
    while cos.last() == Some(&0.0) {
        cos.pop();
    }
    while sin.last() == Some(&0.0) {
        sin.pop();
    }
    FourierSeries { a0, cos, sin }
}

/// JSON curve description: `{"kind":"circle","radius":1.0}`,
/// `{"kind":"ellipse","a":2.0,"b":1.0}` or
/// `{"kind":"fourier","a0":1.0,"cos":[0,0,0.05],"sin":[]}`, each with an
/// optional `"origin":[x,y]`. Entry `k-1` of `cos`/`sin` is harmonic `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(flatten)]
    pub kind: CurveKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveKindSpec {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Fourier(FourierSeries),
}

impl CurveSpec {
    pub fn from_json(text: &str) -> Result<Self, CurveError> {
        serde_json::from_str(text).map_err(|e| CurveError::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("curve spec serializes")
    }

    pub fn build(&self) -> Result<ConvexCurve, CurveError> {
        let shape = match &self.kind {
            CurveKindSpec::Circle { radius } => CurveShape::Circle { radius: *radius },
            CurveKindSpec::Ellipse { a, b } => CurveShape::Ellipse { a: *a, b: *b },
            CurveKindSpec::Fourier(s) => CurveShape::Fourier(s.clone()),
        };
        let origin = self.origin.map(|[x, y]| PlanePoint::new(x, y)).unwrap_or_default();
        ConvexCurve::new(shape, origin)
    }
}

impl From<&ConvexCurve> for CurveSpec {
    fn from(curve: &ConvexCurve) -> Self {
        let kind = match curve.shape() {
            CurveShape::Circle { radius } => CurveKindSpec::Circle { radius: *radius },
            CurveShape::Ellipse { a, b } => CurveKindSpec::Ellipse { a: *a, b: *b },
            CurveShape::Fourier(s) => CurveKindSpec::Fourier(s.clone()),
        };
        let o = curve.origin();
        CurveSpec { kind, origin: (o != PlanePoint::ORIGIN).then_some([o.x, o.y]) }
    }
}

/// Built-in test curves.
pub mod presets {
    use super::*;

    pub fn unit_circle() -> ConvexCurve {
        ConvexCurve::circle(1.0).expect("unit circle is valid")
    }

    pub fn ellipse_2_1() -> ConvexCurve {
        ConvexCurve::ellipse(2.0, 1.0).expect("ellipse is valid")
    }

    /// `r = 1 + 0.05 cos 3 phi`.
    pub fn trefoil_005() -> ConvexCurve {
        ConvexCurve::fourier(1.0, vec![0.0, 0.0, 0.05], vec![]).expect("perturbed circle is valid")
    }

    pub fn all() -> Vec<(&'static str, ConvexCurve)> {
        vec![("circle", unit_circle()), ("ellipse", ellipse_2_1()), ("fourier", trefoil_005())]
    }
}
