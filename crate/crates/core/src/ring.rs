//! Exact arithmetic in the ring of integers of an imaginary quadratic field.
//!
//! Elements are stored in the integral basis `(1, ω)` where
//! `ω = i√|D|/2` when `D ≡ 0 (mod 4)` and `ω = (1 + i√|D|)/2` otherwise.
//! All norms and traces are computed in `i64`; with `N ≤ 10^5` the largest
//! norm handled is `N² = 10^10`, far from overflow.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// An imaginary quadratic field, described by its discriminant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    d_k: i64,
    tr_omega: i64,
    n_omega: i64,
    covol: f64,
    omega_im: f64,
}

impl FieldParams {
    /// Only the congruence class of `d_k` is checked; fundamentality is not.
    pub fn new(d_k: i64) -> Result<Self> {
        if d_k >= 0 || !matches!(d_k.rem_euclid(4), 0 | 1) {
            return Err(Error::InvalidDiscriminant(d_k));
        }
        let abs_d = -d_k;
        let (tr_omega, n_omega) = if d_k.rem_euclid(4) == 0 {
            (0, abs_d / 4)
        } else {
            (1, (1 + abs_d) / 4)
        };
        let half_sqrt = (abs_d as f64).sqrt() / 2.0;
        Ok(FieldParams {
            d_k,
            tr_omega,
            n_omega,
            covol: half_sqrt,
            omega_im: half_sqrt,
        })
    }

    /// The Gaussian integers, `D = -4`.
    pub fn gaussian() -> Self {
        FieldParams::new(-4).expect("-4 is a valid discriminant")
    }

    pub fn d_k(&self) -> i64 {
        self.d_k
    }

    pub fn abs_d(&self) -> i64 {
        -self.d_k
    }

    pub fn tr_omega(&self) -> i64 {
        self.tr_omega
    }

    pub fn n_omega(&self) -> i64 {
        self.n_omega
    }

    /// Area of the fundamental parallelogram, `√|D|/2`.
    pub fn covol(&self) -> f64 {
        self.covol
    }

    pub fn omega_im(&self) -> f64 {
        self.omega_im
    }

    /// True when `D ≡ 0 (mod 4)`, i.e. `tr(ω) = 0`.
    pub fn is_even(&self) -> bool {
        self.tr_omega == 0
    }

    pub fn norm(&self, q: QuadInt) -> i64 {
        norm(q, self)
    }

    pub fn mul(&self, a: QuadInt, b: QuadInt) -> QuadInt {
        // ω² = tr(ω)·ω − n(ω)
        let bd = a.y * b.y;
        QuadInt::new(
            a.x * b.x - self.n_omega * bd,
            a.x * b.y + a.y * b.x + self.tr_omega * bd,
        )
    }

    /// Complex conjugate, expressed back in the `(1, ω)` basis.
    pub fn conj(&self, q: QuadInt) -> QuadInt {
        // ω̄ = tr(ω) − ω
        QuadInt::new(q.x + self.tr_omega * q.y, -q.y)
    }

    /// Embedding into ℂ as `(re, im)`.
    pub fn to_complex(&self, q: QuadInt) -> (f64, f64) {
        (
            q.x as f64 + q.y as f64 * self.tr_omega as f64 / 2.0,
            q.y as f64 * self.omega_im,
        )
    }

    pub fn abs(&self, q: QuadInt) -> f64 {
        (self.norm(q) as f64).sqrt()
    }
}

impl fmt::Display for FieldParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt({}))", self.d_k)
    }
}

/// The element `x + ω·y` of the ring of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct QuadInt {
    pub x: i64,
    pub y: i64,
}

impl QuadInt {
    pub const ZERO: QuadInt = QuadInt { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        QuadInt { x, y }
    }

    pub fn is_zero(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub fn scale(self, m: i64) -> Self {
        QuadInt::new(self.x * m, self.y * m)
    }
}

impl Add for QuadInt {
    type Output = QuadInt;
    fn add(self, rhs: QuadInt) -> QuadInt {
        QuadInt::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for QuadInt {
    type Output = QuadInt;
    fn sub(self, rhs: QuadInt) -> QuadInt {
        QuadInt::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        QuadInt::new(-self.x, -self.y)
    }
}

impl From<(i64, i64)> for QuadInt {
    fn from((x, y): (i64, i64)) -> Self {
        QuadInt::new(x, y)
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// `n(q) = x² + x·y·tr(ω) + y²·n(ω)`.
pub fn norm(q: QuadInt, k: &FieldParams) -> i64 {
    q.x * q.x + q.x * q.y * k.tr_omega + q.y * q.y * k.n_omega
}

/// `tr(p̄·z) = x′_p·x_z + y′_p·y_z`.
pub fn trace_conj_prod(p: QuadInt, z: QuadInt, k: &FieldParams) -> i64 {
    let (xp, yp) = trace_coefficients(p, k);
    xp * z.x + yp * z.y
}

/// The linear form `z ↦ tr(p̄ z)` in coordinates: `(x′_p, y′_p)`.
pub fn trace_coefficients(p: QuadInt, k: &FieldParams) -> (i64, i64) {
    (
        2 * p.x + p.y * k.tr_omega,
        p.x * k.tr_omega + 2 * k.n_omega * p.y,
    )
}

/// `r_K(a)`: the number of ring elements of norm exactly `a`.
pub fn count_representations(a: i64, k: &FieldParams) -> u64 {
    if a < 0 {
        return 0;
    }
    if a == 0 {
        return 1;
    }
    // 4·n(x + ωy) = (2x + y·tr)² + y²·|D|
    let abs_d = k.abs_d();
    let four_a = 4 * a;
    let y_max = isqrt(four_a / abs_d);
    let mut count = 0;
    for y in -y_max..=y_max {
        let rest = four_a - y * y * abs_d;
        if rest < 0 {
            continue;
        }
        let r = isqrt(rest);
        if r * r != rest {
            continue;
        }
        for s in if r == 0 { vec![0] } else { vec![r, -r] } {
            let twice_x = s - y * k.tr_omega;
            if twice_x.rem_euclid(2) == 0 {
                debug_assert_eq!(norm(QuadInt::new(twice_x / 2, y), k), a);
                count += 1;
            }
        }
    }
    count
}

/// Largest integer `m` with `m ≤ radius²`, tolerant to the last few ulps so
/// that e.g. `radius = 10` gives exactly 100.
pub fn norm_cap_for_radius(radius: f64) -> i64 {
    if radius <= 0.0 || radius.is_nan() {
        return 0;
    }
    let r2 = radius * radius;
    (r2 * (1.0 + 1e-12)).floor() as i64
}

/// Norm cap for `|p| ≤ N^α`, i.e. `n(p) ≤ N^{2α}`.
pub fn norm_cap_for_power(n: f64, alpha: f64) -> i64 {
    norm_cap_for_radius(n.powf(alpha))
}

/// Every nonzero element with `|q| ≤ radius`, ordered lexicographically by
/// `(y, x)`.
pub fn points_in_disc(radius: f64, k: &FieldParams) -> DiscPoints {
    DiscPoints::with_norm_cap(norm_cap_for_radius(radius), k)
}

/// Stream of nonzero ring elements of norm at most a cap, in `(y, x)` order.
#[derive(Debug, Clone)]
pub struct DiscPoints {
    cap: i64,
    abs_d: i64,
    tr: i64,
    y: i64,
    y_max: i64,
    x: i64,
    x_end: i64,
}

impl DiscPoints {
    pub fn with_norm_cap(cap: i64, k: &FieldParams) -> Self {
        let cap = cap.max(0);
        let y_max = isqrt(4 * cap / k.abs_d());
        let mut it = DiscPoints {
            cap,
            abs_d: k.abs_d(),
            tr: k.tr_omega(),
            y: -y_max,
            y_max,
            x: 0,
            x_end: -1,
        };
        it.load_row();
        it
    }

    /// Sets the x-range of the current row: `(2x + y·tr)² ≤ 4·cap − y²|D|`.
    fn load_row(&mut self) {
        let rest = 4 * self.cap - self.y * self.y * self.abs_d;
        if rest < 0 {
            self.x = 0;
            self.x_end = -1;
            return;
        }
        let r = isqrt(rest);
        let yt = self.y * self.tr;
        self.x = div_ceil(-r - yt, 2);
        self.x_end = (r - yt).div_euclid(2);
    }
}

impl Iterator for DiscPoints {
    type Item = QuadInt;

    fn next(&mut self) -> Option<QuadInt> {
        loop {
            if self.y > self.y_max {
                return None;
            }
            if self.x <= self.x_end {
                let q = QuadInt::new(self.x, self.y);
                self.x += 1;
                if q.is_zero() {
                    continue;
                }
                return Some(q);
            }
            self.y += 1;
            if self.y > self.y_max {
                return None;
            }
            self.load_row();
        }
    }
}

/// Floor of the square root of a nonnegative integer, exact.
pub fn isqrt(n: i64) -> i64 {
    assert!(n >= 0, "isqrt of negative {n}");
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Exact floor square root for wide intermediates.
pub fn isqrt_i128(n: i128) -> i128 {
    assert!(n >= 0, "isqrt of negative {n}");
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub(crate) fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

pub(crate) fn div_ceil_i128(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Returns `(g, s, t)` with `a·s + b·t = g = gcd(a, b) ≥ 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}
