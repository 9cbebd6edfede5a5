//! The outer billiard map as a plane construction.
//!
//! `T(A)` is the reflection of `A` in the point where a tangent line from `A`
//! touches the curve. Nothing here uses the generating function; the module
//! is the geometric oracle the variational machinery is checked against.
//!
//! Orientation: with [`Orientation::Ccw`] the image is taken through the
//! tangency point `M = gamma(phi_m)` for which `A = gamma(phi_m) - t gamma'(phi_m)`
//! with `t > 0`, so orbits turn counterclockwise about the curve.
//! [`Orientation::Cw`] swaps the forward and backward branches.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::ConvexCurve;
use crate::error::MapError;
use crate::geometry::{wrap_angle, PlanePoint};
use crate::roots::bisect_newton;

/// Chords shorter than this (in the `t` parameter) carry a proximity warning.
pub const NEAR_BOUNDARY_T: f64 = 1e-8;
/// Accepted tangency residual `|cross(gamma', A - gamma)| / (|gamma'| |A - gamma|)`.
pub const TANGENCY_TOL: f64 = 1e-12;
const BISECT_WIDTH: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Ccw,
    Cw,
}

/// A point of the phase space (the exterior of the curve), with its
/// symplectic polar coordinates `p = rho^2 / 2`, `phi` about the curve origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub cartesian: PlanePoint,
    pub p: f64,
    pub phi: f64,
}

impl PhasePoint {
    pub fn from_cartesian(curve: &ConvexCurve, point: PlanePoint) -> Result<Self, MapError> {
        let (rho, phi) = curve.polar_of(point);
        if !point.is_finite() || !(rho > curve.radius(phi)) {
            return Err(MapError::InsideCurve { x: point.x, y: point.y });
        }
        Ok(Self { cartesian: point, p: 0.5 * rho * rho, phi })
    }

    pub fn from_polar(curve: &ConvexCurve, p: f64, phi: f64) -> Result<Self, MapError> {
        let rho = (2.0 * p).sqrt();
        let cartesian = curve.origin() + PlanePoint::from_polar(rho, phi);
        if !(p.is_finite() && phi.is_finite() && rho > curve.radius(phi)) {
            return Err(MapError::InsideCurve { x: cartesian.x, y: cartesian.y });
        }
        Ok(Self { cartesian, p, phi: wrap_angle(phi) })
    }

    /// The chord start `gamma(phi) - t gamma'(phi)` of chord coordinates `(phi, t)`.
    pub fn from_chord(curve: &ConvexCurve, phi: f64, t: f64) -> Result<Self, MapError> {
        let (g, dg, _) = curve.frame(phi);
        Self::from_cartesian(curve, g - dg * t)
    }

    pub fn rho(&self) -> f64 {
        (2.0 * self.p).sqrt()
    }
}

/// Which tangent line from a point is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `A = gamma - t gamma'`, `t > 0` (counterclockwise image).
    Forward,
    /// `A = gamma + t gamma'`, `t > 0` (counterclockwise preimage).
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangencyResult {
    /// Polar angle of the tangency point `M`.
    pub phi_m: f64,
    /// Positive chord parameter: `A = M -/+ t gamma'(phi_m)`.
    pub t: f64,
    pub tangency_point: PlanePoint,
    pub branch: Branch,
    /// Normalised tangency residual.
    pub residual: f64,
    /// Set when `t < NEAR_BOUNDARY_T`.
    pub near_boundary: bool,
}

/// Tangent line from `point` touching the curve, on the requested branch.
///
/// `f(phi) = cross(gamma'(phi), A - gamma(phi))` is negative exactly on the
/// arc visible from `A`, which contains the radial foot `phi_A`, and positive
/// at `phi_A + pi`. The forward tangency is the unique sign change on
/// `[phi_A, phi_A + pi]`, the backward one on `[phi_A - pi, phi_A]`.
pub fn tangency_on(curve: &ConvexCurve, point: &PhasePoint, branch: Branch) -> Result<TangencyResult, MapError> {
    let a = point.cartesian;
    let f = |phi: f64| {
        let (g, dg, ddg) = curve.frame(phi);
        let d = a - g;
        (dg.cross(d), ddg.cross(d))
    };
    let (lo, hi) = match branch {
        Branch::Forward => (point.phi, point.phi + PI),
        Branch::Backward => (point.phi - PI, point.phi),
    };
    let x_tol = 4.0 * f64::EPSILON * (1.0 + hi.abs());
    let root = bisect_newton(f, lo, hi, BISECT_WIDTH, x_tol, 200).ok_or(MapError::Bracketing { lo, hi })?;

    let (g, dg, _) = curve.frame(root.x);
    let d = a - g;
    let scale = dg.norm() * d.norm();
    let residual = if scale > 0.0 { dg.cross(d).abs() / scale } else { 0.0 };
    if residual > TANGENCY_TOL {
        return Err(MapError::Refinement { residual });
    }
    let t = match branch {
        Branch::Forward => -d.dot(dg) / dg.norm_sq(),
        Branch::Backward => d.dot(dg) / dg.norm_sq(),
    };
    Ok(TangencyResult {
        phi_m: wrap_angle(root.x),
        t,
        tangency_point: g,
        branch,
        residual,
        near_boundary: t < NEAR_BOUNDARY_T,
    })
}

/// The outer billiard map of a curve.
#[derive(Debug, Clone, Copy)]
pub struct BilliardMap<'a> {
    curve: &'a ConvexCurve,
    orientation: Orientation,
}

impl<'a> BilliardMap<'a> {
    pub fn new(curve: &'a ConvexCurve) -> Self {
        Self { curve, orientation: Orientation::Ccw }
    }

    pub fn with_orientation(curve: &'a ConvexCurve, orientation: Orientation) -> Self {
        Self { curve, orientation }
    }

    pub fn curve(&self) -> &'a ConvexCurve {
        self.curve
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn forward_branch(&self) -> Branch {
        match self.orientation {
            Orientation::Ccw => Branch::Forward,
            Orientation::Cw => Branch::Backward,
        }
    }

    fn backward_branch(&self) -> Branch {
        match self.orientation {
            Orientation::Ccw => Branch::Backward,
            Orientation::Cw => Branch::Forward,
        }
    }

    /// Tangency used by [`Self::step`].
    pub fn tangency(&self, a: &PhasePoint) -> Result<TangencyResult, MapError> {
        tangency_on(self.curve, a, self.forward_branch())
    }

    fn reflect(&self, a: &PhasePoint, tan: &TangencyResult) -> Result<PhasePoint, MapError> {
        PhasePoint::from_cartesian(self.curve, tan.tangency_point * 2.0 - a.cartesian)
    }

    /// `T(A) = 2 gamma(phi_m) - A`.
    pub fn step(&self, a: &PhasePoint) -> Result<PhasePoint, MapError> {
        self.step_with_tangency(a).map(|(b, _)| b)
    }

    pub fn step_with_tangency(&self, a: &PhasePoint) -> Result<(PhasePoint, TangencyResult), MapError> {
        let tan = self.tangency(a)?;
        Ok((self.reflect(a, &tan)?, tan))
    }

    /// `T^{-1}(B)`, through the mirrored tangent line.
    pub fn inverse_step(&self, b: &PhasePoint) -> Result<PhasePoint, MapError> {
        self.inverse_step_with_tangency(b).map(|(a, _)| a)
    }

    pub fn inverse_step_with_tangency(&self, b: &PhasePoint) -> Result<(PhasePoint, TangencyResult), MapError> {
        let tan = tangency_on(self.curve, b, self.backward_branch())?;
        Ok((self.reflect(b, &tan)?, tan))
    }

    /// `[A, T(A), ..., T^n(A)]`.
    pub fn orbit(&self, a: &PhasePoint, n: usize) -> Result<Vec<PhasePoint>, MapError> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(*a);
        let mut cur = *a;
        for step in 0..n {
            cur = self.step(&cur).map_err(|e| MapError::Orbit { step, source: Box::new(e) })?;
            out.push(cur);
        }
        Ok(out)
    }

    /// Central-difference `DT` in `(p, phi)` coordinates:
    /// `[[dp1/dp0, dp1/dphi0], [dphi1/dp0, dphi1/dphi0]]`.
    ///
    /// The `p` step is `h * p`, the angle step is `h`.
    pub fn differential_fd(&self, a: &PhasePoint, h: f64) -> Result<[[f64; 2]; 2], MapError> {
        let hp = h * a.p;
        let image = |p: f64, phi: f64| -> Result<(f64, f64), MapError> {
            let x = PhasePoint::from_polar(self.curve, p, phi).map_err(|_| MapError::StencilInside { h })?;
            let y = self.step(&x)?;
            Ok((y.p, y.phi))
        };
        let base = self.step(a)?;
        let rel = |(p, phi): (f64, f64)| (p, base.phi + wrap_angle(phi - base.phi));
        let pp = rel(image(a.p + hp, a.phi)?);
        let pm = rel(image(a.p - hp, a.phi)?);
        let fp = rel(image(a.p, a.phi + h)?);
        let fm = rel(image(a.p, a.phi - h)?);
        Ok([
            [(pp.0 - pm.0) / (2.0 * hp), (fp.0 - fm.0) / (2.0 * h)],
            [(pp.1 - pm.1) / (2.0 * hp), (fp.1 - fm.1) / (2.0 * h)],
        ])
    }
}

pub fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::presets;
    use approx::assert_abs_diff_eq;

    fn pt(curve: &ConvexCurve, x: f64, y: f64) -> PhasePoint {
        PhasePoint::from_cartesian(curve, PlanePoint::new(x, y)).unwrap()
    }

    #[test]
    fn circle_tangency_from_two_zero() {
        let c = presets::unit_circle();
        let tan = BilliardMap::new(&c).tangency(&pt(&c, 2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(tan.phi_m, PI / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(tan.t, 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn circle_step_and_inverse() {
        let c = presets::unit_circle();
        let map = BilliardMap::new(&c);
        let b = map.step(&pt(&c, 2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(b.cartesian.x, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.cartesian.y, 3f64.sqrt(), epsilon = 1e-14);
        let a = map.inverse_step(&pt(&c, -1.0, 3f64.sqrt())).unwrap();
        assert_abs_diff_eq!(a.cartesian.x, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.cartesian.y, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn tangency_degenerates_near_boundary() {
        let c = presets::unit_circle();
        let map = BilliardMap::new(&c);
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-10] {
            let tan = map.tangency(&pt(&c, 1.0 + eps, 0.0)).unwrap();
            assert!(tan.t > 0.0 && tan.t < last);
            last = tan.t;
        }
        assert!(!map.tangency(&pt(&c, 1.5, 0.0)).unwrap().near_boundary);
    }

    #[test]
    fn three_periodic_circle_orbit() {
        let c = presets::unit_circle();
        let orbit = BilliardMap::new(&c).orbit(&pt(&c, 2.0, 0.0), 3).unwrap();
        let expect = [(2.0, 0.0), (-1.0, 3f64.sqrt()), (-1.0, -3f64.sqrt()), (2.0, 0.0)];
        for (p, (x, y)) in orbit.iter().zip(expect) {
            assert_abs_diff_eq!(p.cartesian.x, x, epsilon = 1e-13);
            assert_abs_diff_eq!(p.cartesian.y, y, epsilon = 1e-13);
        }
        assert_eq!(BilliardMap::new(&c).orbit(&pt(&c, 2.0, 0.0), 0).unwrap().len(), 1);
    }

    #[test]
    fn ellipse_midpoint_and_inverse_on_homothetic_ellipse() {
        let e = presets::ellipse_2_1();
        let map = BilliardMap::new(&e);
        let a = pt(&e, 4.0, 0.0);
        let (b, tan) = map.step_with_tangency(&a).unwrap();
        let mid = (a.cartesian + b.cartesian) * 0.5;
        assert!(mid.distance(e.boundary_point(tan.phi_m)) < 1e-10);
        let pre = map.inverse_step(&a).unwrap();
        let q = pre.cartesian.x.powi(2) / 16.0 + pre.cartesian.y.powi(2) / 4.0;
        assert_abs_diff_eq!(q, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inside_points_are_rejected() {
        let c = presets::unit_circle();
        assert!(matches!(
            PhasePoint::from_cartesian(&c, PlanePoint::new(0.5, 0.0)),
            Err(MapError::InsideCurve { .. })
        ));
        assert!(PhasePoint::from_polar(&c, 0.4, 1.0).is_err());
    }

    #[test]
    fn clockwise_orientation_reverses() {
        let c = presets::trefoil_005();
        let a = pt(&c, 1.7, 0.4);
        let ccw = BilliardMap::new(&c);
        let cw = BilliardMap::with_orientation(&c, Orientation::Cw);
        let b = cw.step(&a).unwrap();
        let back = ccw.step(&b).unwrap();
        assert!(back.cartesian.distance(a.cartesian) < 1e-12);
    }

    #[test]
    fn differential_is_symplectic_and_converges() {
        let c = presets::trefoil_005();
        let map = BilliardMap::new(&c);
        let a = pt(&c, 1.6, 0.9);
        let d5 = map.differential_fd(&a, 1e-5).unwrap();
        let d6 = map.differential_fd(&a, 1e-6).unwrap();
        assert!((det2(&d5) - 1.0).abs() < 1e-7);
        for i in 0..2 {
            for j in 0..2 {
                assert!((d5[i][j] - d6[i][j]).abs() < 1e-6 * (1.0 + d5[i][j].abs()));
            }
        }
        let near = PhasePoint::from_polar(&c, 0.5 * c.radius(0.0).powi(2) * (1.0 + 1e-9), 0.0).unwrap();
        assert!(matches!(map.differential_fd(&near, 1e-3), Err(MapError::StencilInside { .. })));
    }
}
