#![allow(dead_code)]

use curvdisk_core::{DiskMesh, ScalarField};

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    assert!(fa * f(b) < 0.0, "no sign change");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Smooth trigonometric field with the given coefficients, invariant under
/// rotation by π when only even angular modes are used.
pub fn smooth_field(mesh: &DiskMesh, c: &[f64; 6]) -> ScalarField {
    ScalarField::from_fn(mesh, |x, y| {
        let r2 = x * x + y * y;
        c[0] + c[1] * r2 + c[2] * (x * x - y * y) + c[3] * x * y + c[4] * r2 * r2 + c[5] * (x + 0.5 * y).sin()
    })
}

pub fn max_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
