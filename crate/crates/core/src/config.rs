//! Run configuration shared by the empirical and theoretical sides.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ring::FieldParams;

/// Power scaling `φ(N) = coef·N^β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub coef: f64,
    pub beta: f64,
}

impl Scaling {
    pub fn power(beta: f64) -> Self {
        Scaling { coef: 1.0, beta }
    }

    pub fn phi(&self, n: f64) -> f64 {
        self.coef * n.powf(self.beta)
    }
}

/// How the renormalization `ψ(N)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiMode {
    /// Use the formula attached to the classified regime.
    Auto,
    /// `ψ(N) = N^X`.
    Power(f64),
    /// A fixed value.
    Value(f64),
}

impl PsiMode {
    /// Value for the explicit modes; `None` for `Auto`.
    pub fn explicit_value(&self, n: f64) -> Option<f64> {
        match *self {
            PsiMode::Auto => None,
            PsiMode::Power(x) => Some(n.powf(x)),
            PsiMode::Value(v) => Some(v),
        }
    }
}

impl fmt::Display for PsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiMode::Auto => write!(f, "auto"),
            PsiMode::Power(x) => write!(f, "n^{x}"),
            PsiMode::Value(v) => write!(f, "value:{v}"),
        }
    }
}

impl FromStr for PsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param("psi", format!("expected auto, n^X or value:V, got `{s}`"));
        if s.eq_ignore_ascii_case("auto") {
            return Ok(PsiMode::Auto);
        }
        if let Some(x) = s.strip_prefix("n^").or_else(|| s.strip_prefix("N^")) {
            let x: f64 = x.parse().map_err(|_| bad())?;
            if !x.is_finite() {
                return Err(bad());
            }
            return Ok(PsiMode::Power(x));
        }
        if let Some(v) = s.strip_prefix("value:") {
            let v: f64 = v.parse().map_err(|_| bad())?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param("psi", "value must be positive and finite"));
            }
            return Ok(PsiMode::Value(v));
        }
        Err(bad())
    }
}

/// Everything needed to build one empirical pair-correlation measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationConfig {
    pub field: FieldParams,
    pub alpha: f64,
    pub scaling: Scaling,
    pub n_cap: i64,
    pub psi: PsiMode,
    pub bin_width: f64,
    pub range: (f64, f64),
}

impl CorrelationConfig {
    pub fn new(field: FieldParams, alpha: f64, scaling: Scaling, n_cap: i64) -> Self {
        CorrelationConfig {
            field,
            alpha,
            scaling,
            n_cap,
            psi: PsiMode::Auto,
            bin_width: 0.1,
            range: (-10.0, 10.0),
        }
    }

    pub fn with_psi(mut self, psi: PsiMode) -> Self {
        self.psi = psi;
        self
    }

    pub fn with_bins(mut self, bin_width: f64, lo: f64, hi: f64) -> Self {
        self.bin_width = bin_width;
        self.range = (lo, hi);
        self
    }

    pub fn n(&self) -> f64 {
        self.n_cap as f64
    }

    pub fn phi(&self) -> f64 {
        self.scaling.phi(self.n())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::param("alpha", format!("must lie in (0, 1/2), got {}", self.alpha)));
        }
        if self.n_cap < 1 {
            return Err(Error::param("n", format!("must be >= 1, got {}", self.n_cap)));
        }
        if !(self.scaling.coef > 0.0 && self.scaling.coef.is_finite()) {
            return Err(Error::param("coef", "must be positive and finite"));
        }
        if !(self.scaling.beta >= 0.0 && self.scaling.beta.is_finite()) {
            return Err(Error::param("beta", "must be nonnegative and finite"));
        }
        BinGrid::new(self.range.0, self.range.1, self.bin_width)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<BinGrid> {
        BinGrid::new(self.range.0, self.range.1, self.bin_width)
    }
}

/// Uniform bins on `[lo, hi)`; bin `i` is `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    edges: Vec<f64>,
    symmetric: bool,
}

/// Where a value lands on a [`BinGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Under,
    Bin(usize),
    Over,
}

impl BinGrid {
    pub fn new(lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::param("bins", format!("bin width must be positive, got {width}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param("range", format!("need lo < hi, got {lo}:{hi}")));
        }
        let count = (hi - lo) / width;
        let nbins = count.round();
        if nbins < 1.0 || (count - nbins).abs() > 1e-6 * nbins.max(1.0) {
            return Err(Error::param(
                "bins",
                format!("range {lo}:{hi} is not a whole number of bins of width {width}"),
            ));
        }
        if nbins > 1e8 {
            return Err(Error::param("bins", "too many bins"));
        }
        let n = nbins as usize;
        let symmetric = lo == -hi;
        let mut edges: Vec<f64> = (0..=n).map(|i| lo + i as f64 * width).collect();
        edges[n] = hi;
        if symmetric {
            for i in 0..=n / 2 {
                edges[n - i] = -edges[i];
            }
            if n.is_multiple_of(2) {
                edges[n / 2] = 0.0;
            }
        }
        Ok(BinGrid { edges, symmetric })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn slot(&self, v: f64) -> Slot {
        let n = self.len();
        if v < self.lo() {
            return Slot::Under;
        }
        if v >= self.hi() {
            return Slot::Over;
        }
        let width = (self.hi() - self.lo()) / n as f64;
        let mut i = (((v - self.lo()) / width) as usize).min(n - 1);
        // settle rounding against the stored edges
        while i > 0 && v < self.edges[i] {
            i -= 1;
        }
        while i + 1 < n && v >= self.edges[i + 1] {
            i += 1;
        }
        Slot::Bin(i)
    }

    /// Slot of `−v` given the slot of `v`, when the grid is symmetric.
    pub fn mirror(&self, s: Slot) -> Slot {
        match s {
            Slot::Under => Slot::Over,
            Slot::Over => Slot::Under,
            Slot::Bin(i) => Slot::Bin(self.len() - 1 - i),
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Parses `lo:hi`.
pub fn parse_range(s: &str, name: &'static str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::param(name, format!("expected lo:hi, got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::param(name, format!("need lo < hi, got `{s}`")));
    }
    Ok((lo, hi))
}
