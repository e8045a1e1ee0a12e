//! Line-by-line parametrization of the pair set
//! `J_{p,N} = {q : 0 < n(q) < n(p+q) ≤ N²}`.
//!
//! For fixed `p ≠ 0` the linear form `z ↦ tr(p̄ z)` takes the values `k·c′_p`
//! on the ring, so the ring is foliated by the lines
//! `L_{p,k} = {z : tr(p̄ z) = k·c′_p}` orthogonal to `p`. Each line meets the
//! ring in `w_{p,k} + ℤ·v_p`, and the half-plane `n(z) < n(p+z)` is exactly
//! the union of the lines with `k ≥ κ_p`. Everything here is exact integer
//! arithmetic; floating point only appears in reported diagnostics.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::ring::{
    div_ceil_i128, ext_gcd, gcd, isqrt_i128, norm, trace_coefficients, trace_conj_prod,
    FieldParams, QuadInt,
};

/// All `p`-dependent geometry of the parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairFrame {
    pub field: FieldParams,
    pub p: QuadInt,
    pub xp_prime: i64,
    pub yp_prime: i64,
    /// `gcd(x′_p, y′_p) > 0`; the lattice `tr(p̄·O_K)` is `c′_p ℤ`.
    pub cp_prime: i64,
    /// Primitive direction of the lines, orthogonal to `p`.
    pub v_p: QuadInt,
    /// First line index inside the open half-plane `n(z) < n(p+z)`.
    pub kappa_p: i64,
    pub norm_p: i64,
    pub norm_v: i64,
    pub abs_p: f64,
    pub abs_v: f64,
}

impl PairFrame {
    /// `c′_p·|v_p|`, the weight denominator used by the density formulas.
    pub fn cp_abs_v(&self) -> f64 {
        self.cp_prime as f64 * self.abs_v
    }
}

/// One line `L_{p,k}` and the range of points on it inside `B(−p, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSolution {
    pub k: i64,
    /// Point of `L_{p,k} ∩ O_K` closest to the foot `z_{p,k}` of the line.
    pub w: QuadInt,
    /// Signed `v_p`-coordinate of `w − z_{p,k}`, in `[−1/2, 1/2]`.
    pub t_pk: f64,
    /// Indices `ℓ` with `|w + ℓ·v_p + p| ≤ N`; empty when the line misses.
    pub ell_range: RangeInclusive<i64>,
}

pub fn make_frame(p: QuadInt, field: &FieldParams) -> Result<PairFrame> {
    if p.is_zero() {
        return Err(Error::ZeroElement);
    }
    let (xp, yp) = trace_coefficients(p, field);
    let c = gcd(xp, yp);
    let v_p = QuadInt::new(yp / c, -xp / c);
    let norm_p = norm(p, field);
    let norm_v = norm(v_p, field);
    Ok(PairFrame {
        field: *field,
        p,
        xp_prime: xp,
        yp_prime: yp,
        cp_prime: c,
        v_p,
        kappa_p: (-norm_p).div_euclid(c) + 1,
        norm_p,
        norm_v,
        abs_p: (norm_p as f64).sqrt(),
        abs_v: (norm_v as f64).sqrt(),
    })
}

/// True while the line `L_{p,k}` is within distance `N` of `−p`, i.e.
/// `(k·c′_p + 2n(p))² ≤ 4N²·n(p)`.
fn line_reaches_disc(frame: &PairFrame, n_cap: i64, k: i64) -> bool {
    let shifted = k as i128 * frame.cp_prime as i128 + 2 * frame.norm_p as i128;
    shifted * shifted <= 4 * (n_cap as i128).pow(2) * frame.norm_p as i128
}

/// Solves `tr(p̄ w) = k·c′_p` and locates the points of the line in
/// `B(−p, N)`.
pub fn line_solution(frame: &PairFrame, n_cap: i64, k: i64) -> Result<LineSolution> {
    if k < frame.kappa_p {
        return Err(Error::LineOutsideHalfPlane {
            k,
            kappa: frame.kappa_p,
        });
    }
    let field = &frame.field;
    let c = frame.cp_prime;
    let (a, b) = (frame.xp_prime / c, frame.yp_prime / c);
    let (g, s, t) = ext_gcd(a, b);
    debug_assert_eq!(g, 1);
    let w0 = QuadInt::new(k * s, k * t);
    let v = frame.v_p;

    // w0 − z_{p,k} = τ·v with τ = tr(v̄ w0) / (2 n(v)), since z_{p,k} ⟂ v.
    let num = trace_conj_prod(v, w0, field);
    let den = 2 * frame.norm_v;
    let m_lo = (-num).div_euclid(den);
    let d_lo = (num + m_lo * den).abs();
    let d_hi = (num + (m_lo + 1) * den).abs();
    let m = if d_hi < d_lo { m_lo + 1 } else { m_lo };
    let w = w0 + v.scale(m);
    let t_pk = (num + m * den) as f64 / den as f64;

    // |p + w + ℓv|² ≤ N²  ⇔  (2n(v)ℓ + B)² ≤ B² − 4n(v)(n(p+w) − N²)
    let u = frame.p + w;
    let bb = trace_conj_prod(v, u, field) as i128;
    let nv = frame.norm_v as i128;
    let disc = bb * bb - 4 * nv * (norm(u, field) as i128 - (n_cap as i128).pow(2));
    let ell_range = if disc < 0 {
        #[allow(clippy::reversed_empty_ranges)]
        {
            1..=0
        }
    } else {
        let r = isqrt_i128(disc);
        let lo = div_ceil_i128(-r - bb, 2 * nv);
        let hi = (r - bb).div_euclid(2 * nv);
        lo as i64..=hi as i64
    };

    Ok(LineSolution {
        k,
        w,
        t_pk,
        ell_range,
    })
}

/// Streams `J_{p,N}` line by line, starting at `k = κ_p`.
pub fn enumerate_j(frame: &PairFrame, n_cap: i64) -> JPoints {
    JPoints::new(*frame, n_cap)
}

/// Iterator over `J_{p,N}`; lines in increasing `k`, points in increasing `ℓ`.
#[derive(Debug, Clone)]
pub struct JPoints {
    frame: PairFrame,
    n_cap: i64,
    n_sq: i64,
    k: i64,
    done: bool,
    cur: QuadInt,
    remaining: i64,
}

impl JPoints {
    fn new(frame: PairFrame, n_cap: i64) -> Self {
        let n_cap = n_cap.max(0);
        // empty as soon as |p| ≥ 2N
        let done = n_cap == 0 || frame.norm_p as i128 >= 4 * (n_cap as i128).pow(2);
        JPoints {
            frame,
            n_cap,
            n_sq: n_cap * n_cap,
            k: frame.kappa_p,
            done,
            cur: QuadInt::ZERO,
            remaining: 0,
        }
    }

    /// Advances to the next line with a nonempty range; false when exhausted.
    fn load_line(&mut self) -> bool {
        while !self.done {
            let k = self.k;
            if !line_reaches_disc(&self.frame, self.n_cap, k) {
                self.done = true;
                break;
            }
            self.k += 1;
            let line = line_solution(&self.frame, self.n_cap, k)
                .expect("k starts at kappa_p and only increases");
            let (lo, hi) = (*line.ell_range.start(), *line.ell_range.end());
            if lo <= hi {
                self.cur = line.w + self.frame.v_p.scale(lo);
                self.remaining = hi - lo + 1;
                return true;
            }
        }
        false
    }

    /// Next point with its norms `(q, n(q), n(p+q))`.
    pub fn next_with_norms(&mut self) -> Option<(QuadInt, i64, i64)> {
        let field = self.frame.field;
        loop {
            if self.remaining == 0 && !self.load_line() {
                return None;
            }
            let q = self.cur;
            self.cur = self.cur + self.frame.v_p;
            self.remaining -= 1;
            let nq = norm(q, &field);
            let npq = norm(q + self.frame.p, &field);
            if 0 < nq && nq < npq && npq <= self.n_sq {
                return Some((q, nq, npq));
            }
        }
    }

    /// Adapter yielding `(n(q), n(p+q))` for each point.
    pub fn norm_pairs(mut self) -> impl Iterator<Item = (i64, i64)> {
        std::iter::from_fn(move || self.next_with_norms().map(|(_, a, b)| (a, b)))
    }
}

impl Iterator for JPoints {
    type Item = QuadInt;

    fn next(&mut self) -> Option<QuadInt> {
        self.next_with_norms().map(|(q, _, _)| q)
    }
}

/// Largest `N` accepted by [`brute_force_j`].
pub const BRUTE_FORCE_MAX_N: i64 = 500;

/// Box-scan oracle for `J_{p,N}`, independent of the line parametrization.
pub fn brute_force_j(p: QuadInt, n_cap: i64, field: &FieldParams) -> Result<BTreeSet<QuadInt>> {
    if !(1..=BRUTE_FORCE_MAX_N).contains(&n_cap) {
        return Err(Error::Guard(format!(
            "brute-force J requires 1 <= N <= {BRUTE_FORCE_MAX_N}, got {n_cap}"
        )));
    }
    let n_sq = n_cap * n_cap;
    // |q| < N: |y|·√|D|/2 ≤ N and |x + y·tr/2| ≤ N
    let y_max = (2 * n_cap) / (field.abs_d() as f64).sqrt().floor().max(1.0) as i64 + 1;
    let mut out = BTreeSet::new();
    for y in -y_max..=y_max {
        let x_max = n_cap + y.abs();
        for x in -x_max..=x_max {
            let q = QuadInt::new(x, y);
            let nq = norm(q, field);
            let npq = norm(q + p, field);
            if 0 < nq && nq < npq && npq <= n_sq {
                out.insert(q);
            }
        }
    }
    Ok(out)
}

/// Applies `j_{p,N}⁻¹`: coordinates of `q/N` in the orthonormal frame
/// `(p/|p|, v_p/|v_p|)`.
pub fn rescaled_points(frame: &PairFrame, n_cap: i64) -> impl Iterator<Item = (f64, f64)> {
    let f = *frame;
    let n = n_cap as f64;
    enumerate_j(frame, n_cap).map(move |q| {
        let s = trace_conj_prod(f.p, q, &f.field) as f64 / (2.0 * n * f.abs_p);
        let t = trace_conj_prod(f.v_p, q, &f.field) as f64 / (2.0 * n * f.abs_v);
        (s, t)
    })
}
