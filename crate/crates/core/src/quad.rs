//! Adaptive integration on top of the tanh-sinh rule from `quadrature`.
//!
//! Intervals whose error estimate misses the target are bisected; infinite
//! ends are mapped to finite ones by `x = a + s/(1−s)`.

const MAX_DEPTH: u32 = 14;

/// `∫_a^b f` to roughly `tol` absolute error. Either bound may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_dyn(&f, a, b, tol)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate_dyn(f, b, a, tol);
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, a, b, tol, 0),
        (true, false) => adaptive(
            &|s: f64| {
                let d = 1.0 - s;
                f(a + s / d) / (d * d)
            },
            0.0,
            1.0,
            tol,
            0,
        ),
        (false, true) => adaptive(
            &|s: f64| {
                let d = 1.0 - s;
                f(b - s / d) / (d * d)
            },
            0.0,
            1.0,
            tol,
            0,
        ),
        (false, false) => {
            integrate_dyn(f, f64::NEG_INFINITY, 0.0, 0.5 * tol)
                + integrate_dyn(f, 0.0, f64::INFINITY, 0.5 * tol)
        }
    }
}

/// Like [`integrate`], split at the given interior points (for kinks and
/// endpoint-type singularities). Points outside `(a, b)` are ignored.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| a < x && x < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut knots = Vec::with_capacity(pts.len() + 2);
    knots.push(a);
    knots.extend(pts);
    knots.push(b);
    let share = tol / (knots.len() - 1) as f64;
    knots.windows(2).map(|w| integrate_dyn(&f, w[0], w[1], share)).sum()
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let out = quadrature::integrate(f, a, b, tol);
    if out.error_estimate <= tol.max(4.0 * f64::EPSILON * out.integral.abs()) || depth >= MAX_DEPTH {
        return out.integral;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth + 1) + adaptive(f, m, b, 0.5 * tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-12) - 9.0).abs() < 1e-12);
        assert!((integrate(|x| x * x, 3.0, 0.0, 1e-12) + 9.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_endpoint() {
        let v = integrate(|x| (1.0 - x * x).sqrt(), -1.0, 1.0, 1e-12);
        assert!((v - PI / 2.0).abs() < 1e-11);
    }

    #[test]
    fn infinite_ranges() {
        let v = integrate(|x| 1.0 / (x * x), 1.0, f64::INFINITY, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
        let v = integrate(|x| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-12);
        assert!((v - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn breaks_handle_kinks() {
        let v = integrate_with_breaks(|x: f64| x.abs(), -1.0, 2.0, &[0.0, 5.0], 1e-12);
        assert!((v - 2.5).abs() < 1e-12);
    }
}
