//! Closed-form limit objects: the kernel `g`, its primitive-type companion
//! `h`, the transition density `ρ_{1−α}`, the intermediate density `Θ_N`,
//! the normalizations `S_{N,k}` and `ψ(N)`, and the regime table.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{CorrelationConfig, PsiMode, Scaling};
use crate::empirical::TestFunction;
use crate::error::{Error, Result};
use crate::pairgeom::make_frame;
use crate::quad;
use crate::ring::{norm_cap_for_power, DiscPoints, FieldParams};

/// Below this argument `g` is summed from its Taylor series.
pub const G_SERIES_CUTOFF: f64 = 0.1;
const G_SERIES_TERMS: usize = 12;

/// Tolerance used when comparing `β` with the regime thresholds.
pub const THRESHOLD_TOL: f64 = 1e-9;

/// Taylor coefficients of `g` in powers of `u²`.
fn g_series_coefficients() -> [f64; G_SERIES_TERMS] {
    // arcsin u = Σ a_n u^{2n+1},  u√(1−u²) = Σ b_n u^{2n+1}
    let mut out = [0.0; G_SERIES_TERMS];
    let mut a = 1.0 / 6.0;
    let mut b = -0.5;
    for (i, c) in out.iter_mut().enumerate() {
        let n = (i + 1) as f64;
        *c = a - b;
        a *= (2.0 * n + 1.0).powi(2) / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
        b *= (n - 0.5) / (n + 1.0);
    }
    out
}

fn g_series(u: f64) -> f64 {
    let u2 = u * u;
    g_series_coefficients()
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * u2 + c)
}

fn g_series_prime(u: f64) -> f64 {
    let u2 = u * u;
    let c = g_series_coefficients();
    // d/du Σ c_n u^{2n−2} = Σ (2n−2) c_n u^{2n−3}
    (1..G_SERIES_TERMS)
        .rev()
        .fold(0.0, |acc, i| acc * u2 + 2.0 * i as f64 * c[i])
        * u
}

/// `g` without the domain check, for hot loops. Requires `u ≥ 0`.
#[inline]
pub(crate) fn g_unchecked(u: f64) -> f64 {
    if u > 1.0 {
        FRAC_PI_2 / (u * u * u)
    } else if u < G_SERIES_CUTOFF {
        g_series(u)
    } else {
        (u.asin() - u * (1.0 - u * u).sqrt()) / (u * u * u)
    }
}

fn check_nonneg(func: &'static str, u: f64) -> Result<()> {
    if u >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { func, value: u })
    }
}

/// The kernel `g(u) = (arcsin u − u√(1−u²))/u³` on `(0, 1]`,
/// `π/(2u³)` for `u > 1`, `g(0) = 2/3`.
pub fn kernel_g(u: f64) -> Result<f64> {
    check_nonneg("kernel_g", u)?;
    Ok(g_unchecked(u))
}

/// `g′(u)`; infinite at `u = 1`.
pub fn kernel_g_prime(u: f64) -> Result<f64> {
    check_nonneg("kernel_g_prime", u)?;
    Ok(if u > 1.0 {
        -3.0 * FRAC_PI_2 / u.powi(4)
    } else if u == 1.0 {
        f64::INFINITY
    } else if u < G_SERIES_CUTOFF {
        g_series_prime(u)
    } else {
        2.0 / (u * (1.0 - u * u).sqrt()) - 3.0 * g_unchecked(u) / u
    })
}

/// `h(u) = (u(1−2u²)√(1−u²) − arcsin u)/(4u⁴)` on `(0, 1]`, a primitive of
/// `g(u)/u²`. Evaluated as `−(g(u) + 2√(1−u²))/(4u)`, which is the same
/// expression without the cancellation near 0.
pub fn primitive_h(u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::Domain {
            func: "primitive_h",
            value: u,
        });
    }
    Ok(-(g_unchecked(u) + 2.0 * (1.0 - u * u).sqrt()) / (4.0 * u))
}

/// The transition density `ρ_{1−α}` for a critical constant `λ`.
pub fn density_rho(t: f64, lambda: f64, field: &FieldParams) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", format!("must be positive and finite, got {lambda}")));
    }
    if t.is_nan() {
        return Err(Error::Domain {
            func: "density_rho",
            value: t,
        });
    }
    let d = field.abs_d() as f64;
    let u = t.abs() / (2.0 * lambda);
    Ok(if u <= 1.0 {
        // equals −(4π/|D|)·u·h(u), continued to u = 0
        PI / d * (g_unchecked(u) + 2.0 * (1.0 - u * u).sqrt())
    } else {
        4.0 * PI * PI * lambda.powi(3) / (d * t.abs().powi(3))
    })
}

/// `∫_ℝ ρ_{1−α} = 4π²λ/|D_K|`.
pub fn density_rho_total(lambda: f64, field: &FieldParams) -> f64 {
    4.0 * PI * PI * lambda / field.abs_d() as f64
}

/// Sum with a fixed binary reduction tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs.len(), &|i| xs[i])
}

fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: &F) -> f64 {
    fn go<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= 16 {
            (lo..hi).map(f).sum()
        } else {
            let m = lo + (hi - lo) / 2;
            go(lo, m, f) + go(m, hi, f)
        }
    }
    go(0, n, f)
}

/// `S_{N,k} = (|D_K|(k+1)/4π)·Σ_{0<|p|≤N^α} |p|^k/(c′_p|v_p|)`, summed over
/// actual frames.
pub fn s_nk(k: u32, n: f64, alpha: f64, field: &FieldParams) -> f64 {
    let terms: Vec<f64> = DiscPoints::with_norm_cap(norm_cap_for_power(n, alpha), field)
        .map(|p| {
            let fr = make_frame(p, field).expect("disc stream excludes 0");
            fr.abs_p.powi(k as i32) / fr.cp_abs_v()
        })
        .collect();
    field.abs_d() as f64 * (k as f64 + 1.0) / (4.0 * PI) * pairwise_sum(&terms)
}

/// The `D_K ≡ 0 (mod 4)` form `(√|D_K|(k+1)/4π)·Σ|p|^{k−1}`, which uses
/// `c′_p|v_p| = √|D_K|·|p|`.
pub fn s_nk_reduced(k: u32, n: f64, alpha: f64, field: &FieldParams) -> Result<f64> {
    if !field.is_even() {
        return Err(Error::param("dk", "reduced S_{N,k} needs D_K = 0 mod 4"));
    }
    let terms: Vec<f64> = DiscPoints::with_norm_cap(norm_cap_for_power(n, alpha), field)
        .map(|p| field.abs(p).powi(k as i32 - 1))
        .collect();
    Ok((field.abs_d() as f64).sqrt() * (k as f64 + 1.0) / (4.0 * PI) * pairwise_sum(&terms))
}

/// Case labels of the regime table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    One,
    Two,
    Three,
    Four,
    Five,
    Experimental,
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseId::One => "1",
            CaseId::Two => "2",
            CaseId::Three => "3",
            CaseId::Four => "4",
            CaseId::Five => "5",
            CaseId::Experimental => "experimental",
        };
        f.write_str(s)
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "1" => CaseId::One,
            "2" => CaseId::Two,
            "3" => CaseId::Three,
            "4" => CaseId::Four,
            "5" => CaseId::Five,
            "experimental" => CaseId::Experimental,
            other => return Err(Error::param("case_id", format!("unknown case `{other}`"))),
        })
    }
}

/// Which renormalization a case prescribes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiFormula {
    /// `N²·S_{N,1}`
    N2S1,
    /// `N^{3+α}/φ(N)`
    N3AlphaOverPhi,
    /// `N³·S_{N,0}/φ(N)`
    N3S0OverPhi,
}

impl PsiFormula {
    pub fn eval(&self, cfg: &CorrelationConfig) -> f64 {
        let n = cfg.n();
        match self {
            PsiFormula::N2S1 => n * n * s_nk(1, n, cfg.alpha, &cfg.field),
            PsiFormula::N3AlphaOverPhi => n.powf(3.0 + cfg.alpha) / cfg.phi(),
            PsiFormula::N3S0OverPhi => n.powi(3) * s_nk(0, n, cfg.alpha, &cfg.field) / cfg.phi(),
        }
    }
}

impl fmt::Display for PsiFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsiFormula::N2S1 => "N^2*S_N1",
            PsiFormula::N3AlphaOverPhi => "N^(3+alpha)/phi",
            PsiFormula::N3S0OverPhi => "N^3*S_N0/phi",
        })
    }
}

/// The limit measure `m_φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitMeasure {
    Dirac { weight: f64 },
    Density { lambda: f64 },
    Constant { height: f64 },
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeInfo {
    pub case_id: CaseId,
    /// `lim φ(N)/N^{1−α}`
    pub lambda: f64,
    /// `lim φ(N)/N^{1−α/2}`
    pub lambda1: f64,
    /// `lim φ(N)/N`
    pub lambda2: f64,
    /// `lim φ(N)/N^{1+α/2}`
    pub lambda3: f64,
    pub psi_formula: Option<PsiFormula>,
    pub gamma: f64,
    pub alpha_ok: bool,
    pub limit: LimitMeasure,
}

fn limit_against(beta: f64, exponent: f64, coef: f64) -> f64 {
    if (beta - exponent).abs() <= THRESHOLD_TOL {
        coef
    } else if beta < exponent {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Locates `φ = c·N^β` in the regime table.
pub fn classify_regime(alpha: f64, scaling: Scaling, field: &FieldParams) -> RegimeInfo {
    let (c, beta) = (scaling.coef, scaling.beta);
    let lambda = limit_against(beta, 1.0 - alpha, c);
    let lambda1 = limit_against(beta, 1.0 - alpha / 2.0, c);
    let lambda2 = limit_against(beta, 1.0, c);
    let lambda3 = limit_against(beta, 1.0 + alpha / 2.0, c);
    let d = field.abs_d() as f64;
    let mut info = RegimeInfo {
        case_id: CaseId::Experimental,
        lambda,
        lambda1,
        lambda2,
        lambda3,
        psi_formula: None,
        gamma: (1.0 - 2.0 * alpha) / 4.0,
        alpha_ok: false,
        limit: LimitMeasure::None,
    };
    let sane = alpha > 0.0 && alpha < 0.5 && c > 0.0 && c.is_finite() && beta > 0.0 && beta.is_finite();
    if !sane {
        return info;
    }
    let poisson = LimitMeasure::Constant {
        height: 8.0 * PI / (3.0 * d),
    };
    if lambda == 0.0 {
        info.case_id = CaseId::One;
        info.psi_formula = Some(PsiFormula::N2S1);
        info.alpha_ok = true;
        info.limit = LimitMeasure::Dirac {
            weight: 4.0 * PI * PI / d,
        };
    } else if lambda.is_finite() {
        if field.is_even() {
            info.case_id = CaseId::Two;
            info.psi_formula = Some(PsiFormula::N3AlphaOverPhi);
            info.alpha_ok = true;
            info.limit = LimitMeasure::Density { lambda };
        }
    } else if lambda1.is_finite() {
        info.case_id = CaseId::Three;
        info.psi_formula = Some(PsiFormula::N3S0OverPhi);
        info.gamma = (2.0 - 3.0 * alpha) / 8.0;
        info.alpha_ok = alpha < 0.4;
        info.limit = poisson;
    } else if lambda3 == 0.0 {
        info.case_id = if lambda2 == 0.0 { CaseId::Four } else { CaseId::Five };
        info.psi_formula = Some(PsiFormula::N3S0OverPhi);
        info.gamma = (1.0 - 4.0 * alpha) / 2.0;
        info.alpha_ok = alpha <= 2.0 / 11.0;
        info.limit = poisson;
    }
    info
}

/// Regime of a run configuration.
pub fn regime_of(cfg: &CorrelationConfig) -> RegimeInfo {
    classify_regime(cfg.alpha, cfg.scaling, &cfg.field)
}

/// `ψ(N)` for a configuration: the explicit value, or the regime's formula.
pub fn resolve_psi(cfg: &CorrelationConfig) -> Result<f64> {
    if let Some(v) = cfg.psi.explicit_value(cfg.n()) {
        return Ok(v);
    }
    let regime = regime_of(cfg);
    let formula = regime
        .psi_formula
        .ok_or_else(|| Error::UnresolvedPsi(regime.case_id.to_string()))?;
    let psi = formula.eval(cfg);
    if psi > 0.0 && psi.is_finite() {
        Ok(psi)
    } else {
        Err(Error::UnresolvedPsi(format!(
            "{} (formula {formula} gives {psi} at N = {})",
            regime.case_id, cfg.n_cap
        )))
    }
}

/// `m_φ(f)`.
pub fn limit_measure_eval(regime: &RegimeInfo, f: &TestFunction, field: &FieldParams) -> Result<f64> {
    match regime.limit {
        LimitMeasure::None => Err(Error::ExperimentalRegime),
        LimitMeasure::Dirac { weight } => Ok(weight * f.eval(0.0)),
        LimitMeasure::Constant { height } => Ok(height * f.lebesgue_integral()),
        LimitMeasure::Density { lambda } => {
            let (lo, hi) = f.support();
            let mut breaks = vec![-2.0 * lambda, 0.0, 2.0 * lambda];
            breaks.extend(f.kinks());
            Ok(quad::integrate_with_breaks(
                |t| f.eval(t) * density_rho(t, lambda, field).unwrap_or(0.0),
                lo,
                hi,
                &breaks,
                1e-13,
            ))
        }
    }
}

/// The summand data of `Θ_N`, grouped by `(n(p), c′_p, n(v_p))`.
#[derive(Debug, Clone)]
pub struct ThetaSum {
    /// `N³/(ψφ)`
    prefactor: f64,
    /// `N/(2φ)`
    scale: f64,
    /// `(|p|, multiplicity/(c′_p|v_p|))`
    terms: Vec<(f64, f64)>,
}

impl ThetaSum {
    pub fn new(cfg: &CorrelationConfig, psi: f64) -> Self {
        let field = &cfg.field;
        let mut groups: BTreeMap<(i64, i64, i64), u64> = BTreeMap::new();
        for p in DiscPoints::with_norm_cap(norm_cap_for_power(cfg.n(), cfg.alpha), field) {
            let fr = make_frame(p, field).expect("disc stream excludes 0");
            *groups.entry((fr.norm_p, fr.cp_prime, fr.norm_v)).or_insert(0) += 1;
        }
        let terms = groups
            .into_iter()
            .map(|((np, cp, nv), m)| ((np as f64).sqrt(), m as f64 / (cp as f64 * (nv as f64).sqrt())))
            .collect();
        let n = cfg.n();
        let phi = cfg.phi();
        ThetaSum {
            prefactor: n.powi(3) / (psi * phi),
            scale: n / (2.0 * phi),
            terms,
        }
    }

    /// With `ψ` from the configuration (explicit or regime formula).
    pub fn from_config(cfg: &CorrelationConfig) -> Result<Self> {
        Ok(Self::new(cfg, resolve_psi(cfg)?))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = t.abs() * self.scale;
        self.prefactor * pairwise_sum_by(self.terms.len(), &|i| {
            let (abs_p, w) = self.terms[i];
            w * g_unchecked(s / abs_p)
        })
    }

    pub fn eval_many(&self, ts: &[f64]) -> Vec<f64> {
        ts.par_iter().map(|&t| self.eval(t)).collect()
    }

    /// Largest kink `t* = 2φ·max|p|/N`; beyond it `Θ_N(t) = C/t³`.
    pub fn last_kink(&self) -> f64 {
        self.terms.iter().map(|&(a, _)| a).fold(0.0, f64::max) / self.scale
    }

    /// The `C` of `Θ_N(t) = C/t³` for `t ≥ t*`.
    pub fn tail_coefficient(&self) -> f64 {
        self.prefactor
            * pairwise_sum_by(self.terms.len(), &|i| {
                let (abs_p, w) = self.terms[i];
                w * FRAC_PI_2 * (abs_p / self.scale).powi(3)
            })
    }

    /// `∫_0^∞ Θ_N`: trapezoid with `steps` panels on `[0, t*]` plus the
    /// exact tail `C/(2t*²)`.
    pub fn mass(&self, steps: usize) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let steps = steps.max(1);
        let t_star = self.last_kink();
        let h = t_star / steps as f64;
        let ts: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
        let mut ys = self.eval_many(&ts);
        ys[0] *= 0.5;
        ys[steps] *= 0.5;
        h * pairwise_sum(&ys) + self.tail_coefficient() / (2.0 * t_star * t_star)
    }
}

/// Default panel count for [`ThetaSum::mass`].
pub const THETA_MASS_STEPS: usize = 1 << 20;

/// `Θ_N(t)` with `ψ` taken from the given regime (or the explicit config value).
pub fn theta_n(t: f64, cfg: &CorrelationConfig, regime: &RegimeInfo) -> Result<f64> {
    let psi = match cfg.psi.explicit_value(cfg.n()) {
        Some(v) => v,
        None => regime
            .psi_formula
            .ok_or_else(|| Error::UnresolvedPsi(regime.case_id.to_string()))?
            .eval(cfg),
    };
    Ok(ThetaSum::new(cfg, psi).eval(t))
}

/// The `D_K ≡ 0 (mod 4)` form of `Θ_N` under `ψ = N^{3+α}/φ`:
/// `(1/(√|D_K|N^{2α}))·Σ (N^α/|p|)·g(tN/(2φ|p|))`.
pub fn theta_n_reduced(t: f64, cfg: &CorrelationConfig) -> Result<f64> {
    let field = &cfg.field;
    if !field.is_even() {
        return Err(Error::param("dk", "reduced Theta_N needs D_K = 0 mod 4"));
    }
    let n = cfg.n();
    let na = n.powf(cfg.alpha);
    let s = t.abs() * n / (2.0 * cfg.phi());
    let terms: Vec<f64> = DiscPoints::with_norm_cap(norm_cap_for_power(n, cfg.alpha), field)
        .map(|p| {
            let a = field.abs(p);
            na / a * g_unchecked(s / a)
        })
        .collect();
    Ok(pairwise_sum(&terms) / ((field.abs_d() as f64).sqrt() * na * na))
}

/// Convenience for callers that only hold a config with `psi = auto`.
pub fn theta_config(cfg: &CorrelationConfig) -> Result<(RegimeInfo, ThetaSum)> {
    let regime = regime_of(cfg);
    let sum = match cfg.psi {
        PsiMode::Auto => ThetaSum::from_config(cfg)?,
        _ => ThetaSum::new(cfg, resolve_psi(cfg)?),
    };
    Ok((regime, sum))
}
