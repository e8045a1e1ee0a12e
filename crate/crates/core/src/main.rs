use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use paircorr::config::{parse_range, CorrelationConfig, PsiMode, Scaling};
use paircorr::error::Error;
use paircorr::ring::FieldParams;
use paircorr::runner::{run, FigureId, Overrides, RunError, Scenario, ScenarioKind, TGrid};

#[derive(Parser)]
#[command(name = "paircorr", version, about = "Pair correlations of norm-form values in imaginary quadratic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Binned empirical pair-correlation density.
    Empirical(Common),
    /// The intermediate density Θ_N on a t-grid.
    Theta(Common),
    /// The transition density ρ at critical scaling.
    Density {
        #[command(flatten)]
        common: Common,
        /// Critical constant λ.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Single evaluation point (overrides --t-range).
        #[arg(long, allow_negative_numbers = true)]
        t: Option<f64>,
    },
    /// Sup, L¹ and mass distances between a histogram CSV and a theory CSV.
    Compare {
        left: PathBuf,
        right: PathBuf,
        /// Interval lo:hi to compare over (default: the histogram range).
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind one figure into the --out directory.
    Reproduce {
        /// fig1, fig4, fig5, fig6, fig7, fig8 or fig9.
        figure: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Field discriminant D_K.
    #[arg(long, default_value_t = -4, allow_negative_numbers = true)]
    dk: i64,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    #[arg(long, default_value_t = 0.85, allow_negative_numbers = true)]
    beta: f64,
    /// Coefficient c of φ(N) = c·N^β.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    coef: f64,
    #[arg(long, default_value_t = 1000, allow_negative_numbers = true)]
    n: i64,
    /// Bin width.
    #[arg(long)]
    bins: Option<f64>,
    /// Histogram range lo:hi.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Evaluation grid lo:hi:steps.
    #[arg(long = "t-range", allow_hyphen_values = true)]
    t_range: Option<String>,
    /// auto, n^X or value:V.
    #[arg(long, default_value = "auto")]
    psi: String,
    /// Worker cap (falls back to PAIRCORR_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file, or directory for reproduce.
    #[arg(long)]
    out: Option<PathBuf>,
}

const DEFAULT_T_GRID: TGrid = TGrid {
    lo: 0.0,
    hi: 10.0,
    steps: 1001,
};

impl Common {
    fn overrides(&self) -> Result<Overrides, Error> {
        Ok(Overrides {
            bins: self.bins,
            range: self.range.as_deref().map(|r| parse_range(r, "range")).transpose()?,
            t_grid: self.t_range.as_deref().map(str::parse).transpose()?,
        })
    }

    fn config(&self) -> Result<CorrelationConfig, Error> {
        let field = FieldParams::new(self.dk)?;
        let psi: PsiMode = self.psi.parse()?;
        let (lo, hi) = match &self.range {
            Some(r) => parse_range(r, "range")?,
            None => (-10.0, 10.0),
        };
        let cfg = CorrelationConfig::new(
            field,
            self.alpha,
            Scaling {
                coef: self.coef,
                beta: self.beta,
            },
            self.n,
        )
        .with_psi(psi)
        .with_bins(self.bins.unwrap_or(0.1), lo, hi);
        cfg.validate()?;
        Ok(cfg)
    }

    fn threads(&self) -> Result<Option<usize>, Error> {
        if let Some(t) = self.threads {
            return match t {
                0 => Err(Error::InvalidParameter {
                    name: "threads",
                    reason: "must be at least 1".into(),
                }),
                t => Ok(Some(t)),
            };
        }
        match std::env::var("PAIRCORR_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(t) if t > 0 => Ok(Some(t)),
                _ => Err(Error::InvalidParameter {
                    name: "threads",
                    reason: format!("PAIRCORR_THREADS must be a positive integer, got `{v}`"),
                }),
            },
            Err(_) => Ok(None),
        }
    }

    fn scenario(&self, kind: ScenarioKind, t_grid: Option<TGrid>) -> Result<Scenario, Error> {
        let t_grid = match t_grid {
            Some(g) => g,
            None => self.overrides()?.t_grid.unwrap_or(DEFAULT_T_GRID),
        };
        Ok(Scenario {
            kind,
            cfg: self.config()?,
            t_grid,
            out: self.out.clone(),
            threads: self.threads()?,
        })
    }
}

fn scenario(cmd: Command) -> Result<Scenario, Error> {
    match cmd {
        Command::Empirical(c) => c.scenario(ScenarioKind::Empirical, None),
        Command::Theta(c) => c.scenario(ScenarioKind::Theta, None),
        Command::Density { common, lambda, t } => {
            let grid = t.map(TGrid::single).transpose()?;
            common.scenario(ScenarioKind::Density { lambda }, grid)
        }
        Command::Compare { left, right, range, out } => {
            let interval = range.as_deref().map(|r| parse_range(r, "range")).transpose()?;
            Ok(Scenario {
                kind: ScenarioKind::Compare { left, right, interval },
                cfg: CorrelationConfig::new(FieldParams::gaussian(), 0.15, Scaling::power(0.85), 1),
                t_grid: DEFAULT_T_GRID,
                out,
                threads: None,
            })
        }
        Command::Reproduce { figure, common } => {
            let figure: FigureId = figure.parse()?;
            let overrides = common.overrides()?;
            common.scenario(ScenarioKind::Reproduce { figure, overrides }, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = scenario(cli.command).map_err(RunError::from).and_then(|s| {
        if let Some(t) = s.threads {
            // first build wins; ignore if a pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
        run(&s)
    });
    match result {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
