//! Fixed-step integration and quadrature helpers.

use nalgebra::SMatrix;

use crate::model::C64;

/// One classical fourth-order Runge–Kutta step of `dy/dt = f(t, y)`.
pub fn rk4_step<const R: usize, const C: usize, F>(
    f: &F,
    t: f64,
    y: &SMatrix<C64, R, C>,
    h: f64,
) -> SMatrix<C64, R, C>
where
    F: Fn(f64, &SMatrix<C64, R, C>) -> SMatrix<C64, R, C>,
{
    let half = 0.5 * h;
    let k1 = f(t, y);
    let k2 = f(t + half, &(y + k1 * C64::from(half)));
    let k3 = f(t + half, &(y + k2 * C64::from(half)));
    let k4 = f(t + h, &(y + k3 * C64::from(h)));
    y + (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(h / 6.0)
}

/// Trapezoid weights for `n` uniform samples spaced by `dx`.
pub fn trapezoid_weights(n: usize, dx: f64) -> Vec<f64> {
    let mut w = vec![dx; n];
    if n > 0 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

/// Integral of uniformly sampled values: composite Simpson when the number of
/// intervals is even, Simpson plus a closing trapezoid otherwise.
pub fn integrate_uniform(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * dx * (values[0] + values[1]);
    }
    let (body, tail) = if (n - 1).is_multiple_of(2) {
        (n, 0.0)
    } else {
        (n - 1, 0.5 * dx * (values[n - 2] + values[n - 1]))
    };
    let mut s = values[0] + values[body - 1];
    for (i, v) in values.iter().enumerate().take(body - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * dx / 3.0 + tail
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * dx * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}
