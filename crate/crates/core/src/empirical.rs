//! Empirical pair-correlation measures.
//!
//! The measure is built through the pair parametrization: for every
//! `0 < |p| ≤ N^α` and every `q ∈ J_{p,N}` one ordered pair of norms
//! `a = n(q) < b = n(p+q)` contributes mass `1/ψ(N)` at `φ(N)(ln b − ln a)`
//! and, by the `(a,b) ↔ (b,a)` symmetry, the same mass at the mirror point.
//! [`oracle_measure`] computes the same atoms directly from the pair counts
//! `r_{K,α}(a, b, N)` by double enumeration of representations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{BinGrid, CorrelationConfig, Slot};
use crate::error::{Error, Result};
use crate::pairgeom::{enumerate_j, make_frame};
use crate::ring::{norm, norm_cap_for_power, DiscPoints, QuadInt};
use crate::theory;

/// Above this many ordered pairs only binned counts are kept.
pub const ATOM_EXACT_MAX_PAIRS: u64 = 1_000_000;

/// Largest `N` accepted by [`oracle_measure`].
pub const ORACLE_MAX_N: i64 = 60;

/// Position of the atom attached to the norm pair `(a, b)`: `φ·(ln a − ln b)`.
#[inline]
pub fn gap_position(phi: f64, a: i64, b: i64) -> f64 {
    phi * ((a as f64).ln() - (b as f64).ln())
}

/// Elements `p` with `0 < |p| ≤ N^α`, in the disc stream order.
pub fn short_vectors(cfg: &CorrelationConfig) -> DiscPoints {
    DiscPoints::with_norm_cap(norm_cap_for_power(cfg.n(), cfg.alpha), &cfg.field)
}

/// Every positive gap `φ(N)·(ln n(p+q) − ln n(q))`, in `(p, q)` enumeration order.
pub fn pair_gap_stream(cfg: &CorrelationConfig) -> impl Iterator<Item = f64> {
    let phi = cfg.phi();
    let field = cfg.field;
    let n_cap = cfg.n_cap;
    short_vectors(cfg).flat_map(move |p| {
        let frame = make_frame(p, &field).expect("disc stream excludes 0");
        enumerate_j(&frame, n_cap)
            .norm_pairs()
            .map(move |(a, b)| gap_position(phi, b, a))
    })
}

/// One atom of the measure: the norm pair, its position and its mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub a: i64,
    pub b: i64,
    pub position: f64,
    pub weight: f64,
}

/// A binned finite measure on ℝ with overflow bins and, when small, the
/// exact atom list.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub underflow: f64,
    pub overflow: f64,
    /// Unweighted number of ordered pairs `(p, q)` with `a < b`.
    pub total_pairs: u64,
    pub psi: f64,
    pub atoms: Option<Vec<Atom>>,
}

impl Histogram {
    pub fn zeros(grid: &BinGrid, psi: f64) -> Self {
        Histogram {
            edges: grid.edges().to_vec(),
            mass: vec![0.0; grid.len()],
            underflow: 0.0,
            overflow: 0.0,
            total_pairs: 0,
            psi,
            atoms: Some(Vec::new()),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.underflow + self.overflow
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Mass per unit length in each bin.
    pub fn density(&self) -> Vec<f64> {
        self.mass
            .iter()
            .zip(self.widths())
            .map(|(m, w)| m / w)
            .collect()
    }
}

/// Integer accumulator; merging is plain addition, so any split of the
/// work gives identical totals.
#[derive(Debug, Clone, Default)]
struct PairCounts {
    bins: Vec<u64>,
    under: u64,
    over: u64,
    pairs: u64,
    atoms: Option<BTreeMap<(i64, i64), u64>>,
}

impl PairCounts {
    fn new(nbins: usize) -> Self {
        PairCounts {
            bins: vec![0; nbins],
            atoms: Some(BTreeMap::new()),
            ..Default::default()
        }
    }

    fn bump(&mut self, s: Slot) {
        match s {
            Slot::Under => self.under += 1,
            Slot::Over => self.over += 1,
            Slot::Bin(i) => self.bins[i] += 1,
        }
    }

    fn merge(&mut self, other: PairCounts) {
        for (x, y) in self.bins.iter_mut().zip(other.bins) {
            *x += y;
        }
        self.under += other.under;
        self.over += other.over;
        self.pairs += other.pairs;
        self.atoms = match (self.atoms.take(), other.atoms) {
            (Some(mut a), Some(b)) if self.pairs <= ATOM_EXACT_MAX_PAIRS => {
                for (key, c) in b {
                    *a.entry(key).or_insert(0) += c;
                }
                Some(a)
            }
            _ => None,
        };
    }
}

fn count_for_p(cfg: &CorrelationConfig, grid: &BinGrid, phi: f64, p: QuadInt) -> PairCounts {
    let mut acc = PairCounts::new(grid.len());
    let frame = make_frame(p, &cfg.field).expect("disc stream excludes 0");
    for (a, b) in enumerate_j(&frame, cfg.n_cap).norm_pairs() {
        let v = gap_position(phi, b, a);
        let s = grid.slot(v);
        acc.bump(s);
        acc.bump(if grid.is_symmetric() {
            grid.mirror(s)
        } else {
            grid.slot(-v)
        });
        acc.pairs += 1;
        if let Some(atoms) = acc.atoms.as_mut() {
            *atoms.entry((a, b)).or_insert(0) += 1;
            if acc.pairs > ATOM_EXACT_MAX_PAIRS {
                acc.atoms = None;
            }
        }
    }
    acc
}

/// Options for [`empirical_measure_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct AccumulateOptions {
    /// Worker cap; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

/// Builds the symmetrized, binned measure with `ψ` taken from the config
/// (resolved through the regime classification when set to auto).
pub fn empirical_measure(cfg: &CorrelationConfig) -> Result<Histogram> {
    let psi = theory::resolve_psi(cfg)?;
    empirical_measure_with(cfg, psi, AccumulateOptions::default())
}

/// Builds the symmetrized, binned measure for a given `ψ(N)`.
pub fn empirical_measure_with(
    cfg: &CorrelationConfig,
    psi: f64,
    opts: AccumulateOptions,
) -> Result<Histogram> {
    cfg.validate()?;
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(Error::param("psi", format!("must be positive and finite, got {psi}")));
    }
    let grid = cfg.grid()?;
    let phi = cfg.phi();
    let ps: Vec<QuadInt> = short_vectors(cfg).collect();

    let work = || -> Vec<PairCounts> {
        ps.par_iter()
            .map(|&p| count_for_p(cfg, &grid, phi, p))
            .collect()
    };
    let parts = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut total = PairCounts::new(grid.len());
    for part in parts {
        total.merge(part);
    }

    let scale = 1.0 / psi;
    let atoms = total.atoms.map(|map| mirrored_atoms(&map, phi, psi));
    Ok(Histogram {
        edges: grid.edges().to_vec(),
        mass: total.bins.iter().map(|&c| c as f64 * scale).collect(),
        underflow: total.under as f64 * scale,
        overflow: total.over as f64 * scale,
        total_pairs: total.pairs,
        psi,
        atoms,
    })
}

/// Expands counts keyed by `(n(q), n(p+q))` into both signed atoms,
/// sorted by `(a, b)`.
fn mirrored_atoms(map: &BTreeMap<(i64, i64), u64>, phi: f64, psi: f64) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::with_capacity(2 * map.len());
    for (&(small, large), &c) in map {
        let weight = c as f64 / psi;
        for (a, b) in [(small, large), (large, small)] {
            out.push(Atom {
                a,
                b,
                position: gap_position(phi, a, b),
                weight,
            });
        }
    }
    out.sort_by_key(|at| (at.a, at.b));
    out
}

/// Pair counts `r_{K,α}(a, b, N)` for all `0 < a ≠ b ≤ N²`, by direct
/// enumeration of all pairs `(w, z)` of representations.
pub fn oracle_pair_counts(cfg: &CorrelationConfig) -> Result<BTreeMap<(i64, i64), u64>> {
    if !(1..=ORACLE_MAX_N).contains(&cfg.n_cap) {
        return Err(Error::Guard(format!(
            "oracle measure requires 1 <= N <= {ORACLE_MAX_N}, got {}",
            cfg.n_cap
        )));
    }
    let field = &cfg.field;
    let diff_cap = norm_cap_for_power(cfg.n(), cfg.alpha);
    let pts: Vec<(QuadInt, i64)> = DiscPoints::with_norm_cap(cfg.n_cap * cfg.n_cap, field)
        .map(|z| (z, norm(z, field)))
        .collect();
    let mut counts = BTreeMap::new();
    for &(w, a) in &pts {
        for &(z, b) in &pts {
            if a != b && norm(z - w, field) <= diff_cap {
                *counts.entry((a, b)).or_insert(0u64) += 1;
            }
        }
    }
    Ok(counts)
}

/// Atoms `φ(N)(ln a − ln b)` with weights `r_{K,α}(a, b, N)/ψ(N)`.
pub fn oracle_measure(cfg: &CorrelationConfig, psi: f64) -> Result<Vec<Atom>> {
    let phi = cfg.phi();
    let counts = oracle_pair_counts(cfg)?;
    Ok(counts
        .into_iter()
        .map(|((a, b), c)| Atom {
            a,
            b,
            position: gap_position(phi, a, b),
            weight: c as f64 / psi,
        })
        .collect())
}

/// Built-in test functions for weak-star comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// Indicator of the closed interval `[lo, hi]`; bounds may be infinite.
    Indicator { lo: f64, hi: f64 },
    /// Tent of height 1 at `center`, vanishing at distance `half_width`.
    Triangle { center: f64, half_width: f64 },
    /// `exp(−(t−center)²/(2σ²))` on `|t − center| ≤ cutoff`, zero outside.
    TruncatedGaussian { center: f64, sigma: f64, cutoff: f64 },
}

impl TestFunction {
    pub fn one() -> Self {
        TestFunction::Indicator {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TestFunction::Indicator { lo, hi } => {
                if lo <= t && t <= hi {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Triangle { center, half_width } => {
                (1.0 - (t - center).abs() / half_width).max(0.0)
            }
            TestFunction::TruncatedGaussian {
                center,
                sigma,
                cutoff,
            } => {
                let d = t - center;
                if d.abs() <= cutoff {
                    (-d * d / (2.0 * sigma * sigma)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            TestFunction::Indicator { lo, hi } => (lo, hi),
            TestFunction::Triangle { center, half_width } => {
                (center - half_width, center + half_width)
            }
            TestFunction::TruncatedGaussian { center, cutoff, .. } => {
                (center - cutoff, center + cutoff)
            }
        }
    }

    /// Interior points where the function is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            TestFunction::Triangle { center, .. } => vec![center],
            _ => Vec::new(),
        }
    }

    /// `∫_ℝ f`.
    pub fn lebesgue_integral(&self) -> f64 {
        match *self {
            TestFunction::Indicator { lo, hi } => hi - lo,
            TestFunction::Triangle { half_width, .. } => half_width,
            TestFunction::TruncatedGaussian { center, cutoff, .. } => {
                crate::quad::integrate(|t| self.eval(t), center - cutoff, center + cutoff, 1e-13)
            }
        }
    }

    fn validate(self, src: &str) -> Result<Self> {
        let ok = match self {
            TestFunction::Indicator { lo, hi } => lo <= hi && !lo.is_nan() && !hi.is_nan(),
            TestFunction::Triangle { center, half_width } => {
                center.is_finite() && half_width > 0.0 && half_width.is_finite()
            }
            TestFunction::TruncatedGaussian {
                center,
                sigma,
                cutoff,
            } => center.is_finite() && sigma > 0.0 && cutoff > 0.0 && cutoff.is_finite(),
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::UnknownTestFunction(src.to_string()))
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Indicator { lo, hi } => write!(f, "ind:{lo}:{hi}"),
            TestFunction::Triangle { center, half_width } => write!(f, "tri:{center}:{half_width}"),
            TestFunction::TruncatedGaussian {
                center,
                sigma,
                cutoff,
            } => write!(f, "gauss:{center}:{sigma}:{cutoff}"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// `one`, `ind:lo:hi`, `tri:center:half_width`, `gauss:center:sigma:cutoff`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownTestFunction(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            let raw = parts.get(i).ok_or_else(unknown)?.trim();
            match raw {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => raw.parse().map_err(|_| unknown()),
            }
        };
        let f = match (parts[0], parts.len()) {
            ("one", 1) => TestFunction::one(),
            ("ind", 3) => TestFunction::Indicator {
                lo: num(1)?,
                hi: num(2)?,
            },
            ("tri", 3) => TestFunction::Triangle {
                center: num(1)?,
                half_width: num(2)?,
            },
            ("gauss", 4) => TestFunction::TruncatedGaussian {
                center: num(1)?,
                sigma: num(2)?,
                cutoff: num(3)?,
            },
            _ => return Err(unknown()),
        };
        f.validate(s)
    }
}

/// `∫ f dμ`: exact over atoms when the atom list is kept, otherwise
/// `Σ f(bin center)·mass`. Overflow mass has no position and is ignored.
pub fn integrate_against(h: &Histogram, f: &TestFunction) -> f64 {
    match &h.atoms {
        Some(atoms) => atoms.iter().map(|a| f.eval(a.position) * a.weight).sum(),
        None => h
            .centers()
            .iter()
            .zip(&h.mass)
            .map(|(&c, &m)| f.eval(c) * m)
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PsiMode, Scaling};
    use crate::ring::FieldParams;

    fn cfg(d: i64, n: i64, alpha: f64, beta: f64) -> CorrelationConfig {
        CorrelationConfig::new(FieldParams::new(d).unwrap(), alpha, Scaling::power(beta), n)
            .with_psi(PsiMode::Value(1.0))
            .with_bins(0.5, -10.0, 10.0)
    }

    #[test]
    fn gap_stream_example() {
        // p = 1, q = 2 in Z[i], N = 3, φ(N) = N
        let c = cfg(-4, 3, 0.4, 1.0);
        let want = 3.0 * (9f64.ln() - 4f64.ln());
        assert!((want - 2.4328).abs() < 1e-4);
        let gaps: Vec<f64> = pair_gap_stream(&c).collect();
        assert!(gaps.contains(&want));
        assert!(gaps.iter().all(|&g| g > 0.0));
    }

    #[test]
    fn gap_stream_empty_for_n_one() {
        for alpha in [0.1, 0.3, 0.49] {
            assert_eq!(pair_gap_stream(&cfg(-4, 1, alpha, 1.0)).count(), 0);
        }
    }

    #[test]
    fn small_measure_matches_pair_count() {
        let c = cfg(-4, 3, 0.4, 1.0);
        let h = empirical_measure_with(&c, 1.0, AccumulateOptions::default()).unwrap();
        // |p| ≤ 3^0.4 ≈ 1.55 keeps the four units and the four of norm 2
        assert_eq!(short_vectors(&c).count(), 8);
        let pairs = pair_gap_stream(&c).count() as u64;
        assert_eq!(h.total_pairs, pairs);
        assert_eq!(h.total_mass(), 2.0 * pairs as f64);
        let oracle = oracle_measure(&c, 1.0).unwrap();
        assert_eq!(h.atoms.as_ref().unwrap(), &oracle);
    }

    #[test]
    fn histogram_is_mirror_symmetric() {
        let c = cfg(-3, 20, 0.3, 0.8).with_bins(0.25, -5.0, 5.0);
        let h = empirical_measure_with(&c, 7.0, AccumulateOptions::default()).unwrap();
        let n = h.mass.len();
        for i in 0..n {
            assert_eq!(h.mass[i], h.mass[n - 1 - i]);
        }
        assert_eq!(h.underflow, h.overflow);
    }

    #[test]
    fn asymmetric_grid_keeps_total_mass() {
        let c = cfg(-4, 15, 0.3, 1.0).with_bins(0.5, -1.0, 4.0);
        let h = empirical_measure_with(&c, 2.0, AccumulateOptions::default()).unwrap();
        let want = h.total_pairs as f64;
        assert!((h.total_mass() - want).abs() < 1e-9 * want);
    }

    #[test]
    fn empty_stream_gives_zero_histogram() {
        let c = cfg(-4, 1, 0.3, 1.0);
        let h = empirical_measure_with(&c, 1.0, AccumulateOptions::default()).unwrap();
        assert_eq!(h.total_pairs, 0);
        assert_eq!(h.total_mass(), 0.0);
        assert_eq!(integrate_against(&h, &TestFunction::one()), 0.0);
    }

    #[test]
    fn rejects_bad_psi() {
        let c = cfg(-4, 3, 0.3, 1.0);
        assert!(empirical_measure_with(&c, 0.0, AccumulateOptions::default()).is_err());
        assert!(empirical_measure_with(&c, f64::NAN, AccumulateOptions::default()).is_err());
    }

    #[test]
    fn oracle_guard() {
        assert!(matches!(oracle_measure(&cfg(-4, 61, 0.3, 1.0), 1.0), Err(Error::Guard(_))));
    }

    #[test]
    fn oracle_counts_are_symmetric() {
        let counts = oracle_pair_counts(&cfg(-4, 12, 0.3, 1.0)).unwrap();
        for (&(a, b), &c) in &counts {
            assert_eq!(counts.get(&(b, a)), Some(&c));
        }
    }

    #[test]
    fn oracle_weight_reaches_product_of_representation_counts() {
        let counts = oracle_pair_counts(&cfg(-4, 50, 0.49, 1.0)).unwrap();
        assert_eq!(counts[&(1, 2)], 16);
        assert_eq!(counts[&(2, 1)], 16);
    }

    #[test]
    fn doubling_phi_doubles_positions() {
        let c1 = cfg(-4, 10, 0.3, 1.0);
        let mut c2 = c1.clone();
        c2.scaling.coef = 2.0;
        let a1 = oracle_measure(&c1, 1.0).unwrap();
        let a2 = oracle_measure(&c2, 1.0).unwrap();
        assert_eq!(a1.len(), a2.len());
        for (x, y) in a1.iter().zip(&a2) {
            assert_eq!(2.0 * x.position, y.position);
            assert_eq!(x.weight, y.weight);
        }
    }

    #[test]
    fn test_function_parsing() {
        assert_eq!("one".parse::<TestFunction>().unwrap(), TestFunction::one());
        assert_eq!(
            "tri:0:1".parse::<TestFunction>().unwrap(),
            TestFunction::Triangle {
                center: 0.0,
                half_width: 1.0
            }
        );
        assert_eq!(
            "ind:2:inf".parse::<TestFunction>().unwrap(),
            TestFunction::Indicator {
                lo: 2.0,
                hi: f64::INFINITY
            }
        );
        for bad in ["", "tri:0", "tri:0:-1", "box:0:1", "gauss:0:1"] {
            assert!(matches!(bad.parse::<TestFunction>(), Err(Error::UnknownTestFunction(_))));
        }
    }

    #[test]
    fn integrate_binned_against_riemann_sum() {
        let grid = BinGrid::new(-4.0, 4.0, 0.01).unwrap();
        let mut h = Histogram::zeros(&grid, 1.0);
        h.atoms = None;
        let density = |t: f64| (-t * t / 2.0).exp() * (1.0 + 0.3 * t.sin());
        let centers = grid.centers();
        for (m, &c) in h.mass.iter_mut().zip(&centers) {
            *m = density(c) * 0.01;
        }
        let tri = TestFunction::Triangle {
            center: 0.3,
            half_width: 1.5,
        };
        let got = integrate_against(&h, &tri);
        let want: f64 = centers.iter().map(|&c| tri.eval(c) * density(c) * 0.01).sum();
        assert!((got - want).abs() < 1e-12);
        let total = integrate_against(&h, &TestFunction::one());
        assert!((total - h.total_mass()).abs() < 1e-12);
    }
}
