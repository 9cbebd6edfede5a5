//! Bracketed root refinement shared by the tangency, ray and image-angle solvers.

/// Outcome of a bracketed solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Bisection down to `bisect_width`, then Newton safeguarded by the bracket.
///
/// `f` returns `(value, derivative)`. The bracket must satisfy
/// `sign f(lo) != sign f(hi)`; returns `None` otherwise. Newton steps that
/// leave the current bracket fall back to bisection. Iteration stops once a
/// step is below `x_tol` or the residual is exactly zero.
pub fn bisect_newton<F>(mut f: F, lo: f64, hi: f64, bisect_width: f64, x_tol: f64, max_iter: usize) -> Option<Root>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Some(Root { x: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Some(Root { x: b, residual: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let neg_at_a = fa < 0.0;
    let mut iterations = 0;

    while b - a > bisect_width && iterations < max_iter {
        let m = 0.5 * (a + b);
        let (fm, _) = f(m);
        iterations += 1;
        if fm == 0.0 {
            return Some(Root { x: m, residual: 0.0, iterations });
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }

    let mut x = 0.5 * (a + b);
    let mut last_residual = f64::INFINITY;
    while iterations < max_iter {
        let (fx, dfx) = f(x);
        iterations += 1;
        last_residual = fx.abs();
        if fx == 0.0 {
            break;
        }
        if (fx < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= x_tol || b - a <= x_tol {
            let (fx, _) = f(x);
            last_residual = fx.abs();
            break;
        }
    }
    Some(Root { x, residual: last_residual, iterations })
}
