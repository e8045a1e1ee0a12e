//! Scenario execution and CSV emission.

pub mod compare;
pub mod csv;

use std::fmt;
use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{CorrelationConfig, PsiMode, Scaling};
use crate::empirical::{empirical_measure_with, AccumulateOptions};
use crate::error::{Error, Result};
use crate::ring::FieldParams;
use crate::theory::{self, density_rho, CaseId, ThetaSum};

pub use self::compare::{compare, Metrics};
pub use self::csv::CsvTable;

/// Panels used for the `mass` header entry of Θ_N tables.
pub const THETA_HEADER_MASS_STEPS: usize = 1 << 14;

/// `lo:hi:steps`, with `steps` equally spaced points including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl TGrid {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::param("t-range", format!("need finite lo <= hi, got {lo}:{hi}")));
        }
        if steps == 0 || (steps == 1 && lo != hi) {
            return Err(Error::param("t-range", "need at least two points for a nonempty range"));
        }
        Ok(TGrid { lo, hi, steps })
    }

    pub fn single(t: f64) -> Result<Self> {
        Self::new(t, t, 1)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        let mut ts: Vec<f64> = (0..self.steps).map(|i| self.lo + i as f64 * h).collect();
        ts[self.steps - 1] = self.hi;
        ts
    }
}

impl FromStr for TGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("t-range", format!("expected lo:hi:steps, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let steps = parts[2].trim().parse().map_err(|_| bad())?;
        TGrid::new(lo, hi, steps)
    }
}

impl fmt::Display for TGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig1,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::Fig1,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8,
        FigureId::Fig9,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
            FigureId::Fig9 => "fig9",
        }
    }

    /// `(β, exponents m of N = 10^m)` for the Θ_N families.
    pub fn theta_ladder(&self) -> Option<(f64, std::ops::RangeInclusive<i32>)> {
        match self {
            FigureId::Fig4 => Some((0.8, 7..=14)),
            FigureId::Fig5 => Some((0.85, 7..=10)),
            FigureId::Fig6 => Some((0.9, 7..=14)),
            FigureId::Fig7 => Some((1.05, 6..=11)),
            // the caption gives no β; 0.95 sits inside (1 − α/2, 1)
            FigureId::Fig8 => Some((0.95, 6..=11)),
            _ => None,
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| Error::param("figure", format!("unknown figure `{s}`")))
    }
}

/// Flags that override a figure preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub bins: Option<f64>,
    pub range: Option<(f64, f64)>,
    pub t_grid: Option<TGrid>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    Empirical,
    Theta,
    Density { lambda: f64 },
    Compare { left: PathBuf, right: PathBuf, interval: Option<(f64, f64)> },
    Reproduce { figure: FigureId, overrides: Overrides },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub cfg: CorrelationConfig,
    pub t_grid: TGrid,
    /// File for single-output kinds (stdout when absent); directory for
    /// `reproduce`.
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub enum RunError {
    Invalid(Error),
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 2,
            RunError::Io { .. } => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Invalid(Error::InvalidParameter { name, reason }) => {
                write!(f, "invalid value for --{name}: {reason}")
            }
            RunError::Invalid(e @ Error::InvalidDiscriminant(_)) => write!(f, "invalid value for --dk: {e}"),
            RunError::Invalid(e @ Error::UnresolvedPsi(_)) => write!(f, "--psi: {e}"),
            RunError::Invalid(e) => write!(f, "{e}"),
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Invalid(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Binned empirical density: rows are bin centers and mass per unit length.
pub fn empirical_table(cfg: &CorrelationConfig, opts: AccumulateOptions) -> Result<CsvTable> {
    cfg.validate()?;
    let psi = theory::resolve_psi(cfg)?;
    let h = empirical_measure_with(cfg, psi, opts)?;
    let mut t = CsvTable::new();
    t.set("kind", "empirical");
    t.set_config(cfg);
    t.set("psi_value", psi);
    t.set("case_id", theory::regime_of(cfg).case_id);
    t.set("mass", h.total_mass());
    t.set("total_pairs", h.total_pairs);
    t.set("underflow", h.underflow);
    t.set("overflow", h.overflow);
    t.rows = h.centers().into_iter().zip(h.density()).collect();
    Ok(t)
}

/// `Θ_N` sampled on a grid of `t ≥ 0`.
pub fn theta_table(cfg: &CorrelationConfig, grid: &TGrid) -> Result<CsvTable> {
    cfg.validate()?;
    if grid.lo < 0.0 {
        return Err(Error::param("t-range", "Theta_N is defined for t >= 0"));
    }
    let regime = theory::regime_of(cfg);
    let psi = theory::resolve_psi(cfg)?;
    let sum = ThetaSum::new(cfg, psi);
    let ts = grid.points();
    let mut t = CsvTable::new();
    t.set("kind", "theta");
    t.set_config(cfg);
    t.set("t_range", grid);
    t.set("psi_value", psi);
    t.set("case_id", regime.case_id);
    t.set("mass", sum.mass(THETA_HEADER_MASS_STEPS));
    t.rows = ts.iter().copied().zip(sum.eval_many(&ts)).collect();
    Ok(t)
}

/// `ρ_{1−α}` with critical constant `λ` sampled on a grid.
pub fn density_table(cfg: &CorrelationConfig, lambda: f64, grid: &TGrid) -> Result<CsvTable> {
    let mut t = CsvTable::new();
    t.set("kind", "density");
    t.set_config(cfg);
    t.set("lambda", lambda);
    t.set("t_range", grid);
    t.set("case_id", theory::regime_of(cfg).case_id);
    t.set("mass", theory::density_rho_total(lambda, &cfg.field));
    t.rows = grid
        .points()
        .into_iter()
        .map(|x| Ok((x, density_rho(x, lambda, &cfg.field)?)))
        .collect::<Result<_>>()?;
    Ok(t)
}

pub fn read_table(path: &Path) -> Result<CsvTable, RunError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    CsvTable::read_from(BufReader::new(f)).map_err(io_err(path))
}

pub fn write_table(table: &CsvTable, path: &Path) -> Result<(), RunError> {
    fs::write(path, table.render()).map_err(io_err(path))
}

fn emit(table: &CsvTable, out: Option<&Path>) -> Result<Vec<PathBuf>, RunError> {
    match out {
        Some(p) => {
            write_table(table, p)?;
            Ok(vec![p.to_path_buf()])
        }
        None => {
            let stdout = io::stdout();
            table
                .write_to(stdout.lock())
                .map_err(io_err(Path::new("<stdout>")))?;
            Ok(Vec::new())
        }
    }
}

fn with_n(cfg: &CorrelationConfig, n: i64) -> CorrelationConfig {
    let mut c = cfg.clone();
    c.n_cap = n;
    c
}

/// The configurations and file names of a figure preset.
pub fn figure_plan(figure: FigureId, ov: &Overrides) -> Vec<(String, PlannedTable)> {
    let gauss = FieldParams::gaussian();
    let alpha = 0.15;
    let t_grid = ov.t_grid.unwrap_or(TGrid {
        lo: 0.0,
        hi: 10.0,
        steps: 1001,
    });
    let mut plan = Vec::new();
    match figure {
        FigureId::Fig1 => {
            let base = CorrelationConfig::new(gauss, alpha, Scaling::power(1.0 - alpha), 2000)
                .with_psi(PsiMode::Power(2.0 + 2.0 * alpha));
            let w = ov.bins.unwrap_or(0.1);
            let (r2000, r3000) = match ov.range {
                Some(r) => (r, r),
                None => ((-10.0, 10.0), (-2.0, 2.0)),
            };
            for (n, (lo, hi)) in [(2000, r2000), (3000, r3000)] {
                plan.push((
                    format!("fig1_n{n}.csv"),
                    PlannedTable::Empirical(with_n(&base, n).with_bins(w, lo, hi)),
                ));
            }
            let rho_grid = ov.t_grid.unwrap_or(TGrid {
                lo: -10.0,
                hi: 10.0,
                steps: 4001,
            });
            plan.push(("fig1_rho.csv".into(), PlannedTable::Density(base, 1.0, rho_grid)));
        }
        FigureId::Fig9 => {
            let (lo, hi) = ov.range.unwrap_or((-10.0, 10.0));
            let w = ov.bins.unwrap_or(0.05);
            for beta in [1.3, 1.5, 1.7, 1.9, 2.0] {
                let cfg = CorrelationConfig::new(gauss, alpha, Scaling::power(beta), 2000)
                    .with_psi(PsiMode::Power(3.0 + alpha - beta))
                    .with_bins(w, lo, hi);
                plan.push((format!("fig9_beta{beta}.csv"), PlannedTable::Empirical(cfg)));
            }
        }
        _ => {
            let (beta, ladder) = figure.theta_ladder().expect("Θ_N figure");
            for m in ladder {
                let cfg = CorrelationConfig::new(gauss, alpha, Scaling::power(beta), 10i64.pow(m as u32));
                plan.push((
                    format!("{}_n1e{m}.csv", figure.name()),
                    PlannedTable::Theta(cfg, t_grid),
                ));
            }
        }
    }
    plan
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlannedTable {
    Empirical(CorrelationConfig),
    Theta(CorrelationConfig, TGrid),
    Density(CorrelationConfig, f64, TGrid),
}

impl PlannedTable {
    pub fn build(&self, opts: AccumulateOptions) -> Result<CsvTable> {
        match self {
            PlannedTable::Empirical(cfg) => empirical_table(cfg, opts),
            PlannedTable::Theta(cfg, grid) => theta_table(cfg, grid),
            PlannedTable::Density(cfg, lambda, grid) => density_table(cfg, *lambda, grid),
        }
    }
}

/// Runs one scenario and returns the files written.
pub fn run(s: &Scenario) -> Result<Vec<PathBuf>, RunError> {
    let opts = AccumulateOptions { threads: s.threads };
    match &s.kind {
        ScenarioKind::Empirical => emit(&empirical_table(&s.cfg, opts)?, s.out.as_deref()),
        ScenarioKind::Theta => emit(&theta_table(&s.cfg, &s.t_grid)?, s.out.as_deref()),
        ScenarioKind::Density { lambda } => emit(&density_table(&s.cfg, *lambda, &s.t_grid)?, s.out.as_deref()),
        ScenarioKind::Compare { left, right, interval } => {
            let l = read_table(left)?;
            let r = read_table(right)?;
            let m = compare(&l, &r, *interval)?;
            let text = m.render_row(&left.display().to_string(), &right.display().to_string());
            match &s.out {
                Some(p) => {
                    fs::write(p, text).map_err(io_err(p))?;
                    Ok(vec![p.clone()])
                }
                None => {
                    print!("{text}");
                    Ok(Vec::new())
                }
            }
        }
        ScenarioKind::Reproduce { figure, overrides } => {
            let dir = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let mut written = Vec::new();
            for (name, planned) in figure_plan(*figure, overrides) {
                let table = planned.build(opts)?;
                let path = dir.join(name);
                write_table(&table, &path)?;
                written.push(path);
            }
            Ok(written)
        }
    }
}

/// Case label recorded for a configuration (for callers outside `run`).
pub fn case_label(cfg: &CorrelationConfig) -> CaseId {
    theory::regime_of(cfg).case_id
}
