//! Distances between a binned empirical density and a theory curve.

use super::csv::CsvTable;
use crate::error::{Error, Result};

/// Relative slack allowed when checking that grids line up.
const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub sup: f64,
    pub l1: f64,
    pub mass_diff: f64,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Metrics {
    pub fn to_table(&self, left: &str, right: &str) -> CsvTable {
        let mut t = CsvTable::new();
        t.set("kind", "compare");
        t.set("left", left);
        t.set("right", right);
        t.set("interval", format!("{}:{}", self.lo, self.hi));
        t.set("bins", self.bins);
        t.set("sup", self.sup);
        t.set("l1", self.l1);
        t.set("mass_diff", self.mass_diff);
        t
    }

    /// The one-row report: `lo,hi,bins,sup,l1,mass_diff`.
    pub fn render_row(&self, left: &str, right: &str) -> String {
        format!(
            "# left={left}\n# right={right}\nlo,hi,bins,sup,l1,mass_diff\n{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}\n",
            self.lo, self.hi, self.bins, self.sup, self.l1, self.mass_diff
        )
    }
}

/// Average over `[a, b]` of the piecewise-linear interpolant through the
/// sorted nodes `(xs, ys)`; `None` if the nodes do not cover `[a, b]`.
pub fn linear_average(xs: &[f64], ys: &[f64], a: f64, b: f64) -> Option<f64> {
    let n = xs.len();
    if n < 2 || b <= a {
        return None;
    }
    let slack = GRID_TOL * (b - a).max(1.0);
    if xs[0] > a + slack || xs[n - 1] < b - slack {
        return None;
    }
    let interp = |i: usize, x: f64| {
        let (x0, x1) = (xs[i], xs[i + 1]);
        ys[i] + (ys[i + 1] - ys[i]) * (x - x0) / (x1 - x0)
    };
    let start = xs.partition_point(|&x| x <= a).saturating_sub(1).min(n - 2);
    let mut acc = 0.0;
    for i in start..n - 1 {
        let lo = xs[i].max(a);
        let hi = xs[i + 1].min(b);
        if hi > lo {
            acc += 0.5 * (interp(i, lo) + interp(i, hi)) * (hi - lo);
        }
        if xs[i + 1] >= b {
            break;
        }
    }
    Some(acc / (b - a))
}

fn bin_width(hist: &CsvTable) -> Result<f64> {
    if let Some(w) = hist.get("bin_width") {
        return w
            .parse()
            .map_err(|_| Error::param("bin_width", format!("unparsable header value `{w}`")));
    }
    match hist.rows.as_slice() {
        [a, b, ..] => Ok(b.0 - a.0),
        _ => Err(Error::param("histogram", "need a bin_width header or two rows")),
    }
}

/// Compares the histogram density rows of `hist` (bin centers) with the
/// curve in `theory` over the bins lying inside `interval` (default: all).
/// When the grids differ the curve is averaged over each bin.
pub fn compare(hist: &CsvTable, theory: &CsvTable, interval: Option<(f64, f64)>) -> Result<Metrics> {
    if hist.rows.is_empty() {
        return Err(Error::param("histogram", "no rows"));
    }
    let w = bin_width(hist)?;
    let (lo, hi) = interval.unwrap_or_else(|| {
        let first = hist.rows[0].0;
        let last = hist.rows[hist.rows.len() - 1].0;
        (first - 0.5 * w, last + 0.5 * w)
    });
    let slack = GRID_TOL * w.max(1.0);
    let same_grid = hist.rows.len() == theory.rows.len()
        && hist
            .rows
            .iter()
            .zip(&theory.rows)
            .all(|(a, b)| (a.0 - b.0).abs() <= slack);
    let (txs, tys) = (theory.ts(), theory.values());
    if !same_grid && txs.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::param("theory", "t column must be strictly increasing"));
    }

    let mut m = Metrics {
        sup: 0.0,
        l1: 0.0,
        mass_diff: 0.0,
        lo,
        hi,
        bins: 0,
    };
    for (i, &(c, d)) in hist.rows.iter().enumerate() {
        let (a, b) = (c - 0.5 * w, c + 0.5 * w);
        if a < lo - slack || b > hi + slack {
            continue;
        }
        let th = if same_grid {
            theory.rows[i].1
        } else {
            linear_average(&txs, &tys, a, b).ok_or_else(|| {
                Error::param(
                    "theory",
                    format!("curve does not cover bin [{a}, {b}]; grid mismatch beyond resampling"),
                )
            })?
        };
        let diff = d - th;
        m.sup = m.sup.max(diff.abs());
        m.l1 += diff.abs() * w;
        m.mass_diff += diff * w;
        m.bins += 1;
    }
    if m.bins == 0 {
        return Err(Error::param("range", format!("no bins inside {lo}:{hi}")));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<(f64, f64)>, width: Option<f64>) -> CsvTable {
        let mut t = CsvTable::new();
        if let Some(w) = width {
            t.set("bin_width", w);
        }
        t.rows = rows;
        t
    }

    #[test]
    fn identical_is_zero() {
        let h = table((0..20).map(|i| (i as f64 * 0.1 + 0.05, i as f64)).collect(), Some(0.1));
        let m = compare(&h, &h, None).unwrap();
        assert_eq!((m.sup, m.l1, m.mass_diff), (0.0, 0.0, 0.0));
        assert_eq!(m.bins, 20);
    }

    #[test]
    fn linear_curve_is_averaged_exactly() {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 * 0.013).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        let avg = linear_average(&xs, &ys, 0.2, 0.7).unwrap();
        assert!((avg - (3.0 * 0.45 + 1.0)).abs() < 1e-12);
        assert!(linear_average(&xs, &ys, -0.1, 0.5).is_none());
    }

    #[test]
    fn resampled_comparison() {
        let h = table((0..10).map(|i| (i as f64 * 0.2 + 0.1, 1.0)).collect(), Some(0.2));
        let curve = table((0..=200).map(|i| (i as f64 * 0.01, 2.0)).collect(), None);
        let m = compare(&h, &curve, None).unwrap();
        assert!((m.sup - 1.0).abs() < 1e-12);
        assert!((m.l1 - 2.0).abs() < 1e-12);
        assert!((m.mass_diff + 2.0).abs() < 1e-12);
        let m = compare(&h, &curve, Some((0.0, 1.0))).unwrap();
        assert_eq!(m.bins, 5);
        let short = table((0..=50).map(|i| (i as f64 * 0.01, 2.0)).collect(), None);
        assert!(compare(&h, &short, None).is_err());
    }
}
