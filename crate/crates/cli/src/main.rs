//! `pwt`: command-line front end for simulations, estimates and the
//! reproducibility experiments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use poisson_wavelet::estimator::{default_j0, estimate, GammaNConfig, ThresholdVariant};
use poisson_wavelet::harness::{
    self, lower_bound_probe, run_plan, uppth_probe, ExperimentPlan, ExperimentReport, GammaGrid, J0Policy,
    SWEEP_RUNS, TABLE1_J0, TABLE1_NS, TABLE1_RUNS,
};
use poisson_wavelet::signals::{sample, PointProcess, SeedSpec, SignalId};
use poisson_wavelet::wavelet::{dump_basis_csv, reconstruct, BasisKind};
use serde_json::json;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] poisson_wavelet::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical_guard() => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pwt", version, about = "Wavelet thresholding estimates of Poisson intensities")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw one realization; writes the event positions.
    Simulate {
        #[arg(long)]
        signal: SignalId,
        #[arg(long)]
        n: u64,
    },
    /// Thresholding estimate of one realization; writes the kept coefficients.
    Estimate(EstimateArgs),
    /// Exact mean R_n(gamma) curves over all change points.
    SweepGamma {
        #[arg(long = "signals", alias = "signal", value_delimiter = ',', required = true)]
        signals: Vec<SignalId>,
        #[arg(long = "bases", alias = "basis", value_delimiter = ',', default_value = "haar,spline15")]
        bases: Vec<BasisKind>,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024,2048,4096")]
        n: Vec<u64>,
        #[arg(long, default_value_t = SWEEP_RUNS)]
        runs: usize,
        /// Integer or `log2n`.
        #[arg(long, default_value = "log2n")]
        j0: String,
        /// Write one gamma_min row per curve instead of the curves.
        #[arg(long)]
        gamma_min: bool,
    },
    /// Mean r_n, R_n and R_n^log at fixed gamma values.
    Table1 {
        #[arg(long = "signals", alias = "signal", value_delimiter = ',', default_value = "haar1,haar2,blocks,comb,gauss1,gauss2,beta05,beta4,bumps")]
        signals: Vec<SignalId>,
        #[arg(long = "bases", alias = "basis", value_delimiter = ',', default_value = "haar,spline15")]
        bases: Vec<BasisKind>,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = TABLE1_RUNS)]
        runs: usize,
        #[arg(long, default_value_t = TABLE1_J0.to_string())]
        j0: String,
        #[arg(long, default_value = "simulation")]
        variant: ThresholdVariant,
        /// Write every run instead of the aggregates.
        #[arg(long)]
        per_run: bool,
    },
    /// Risk of the uniform signal below and above gamma = 1.
    ProbeLower {
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5")]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
    },
    /// Oracle ratios on the adversarial signal built for the largest gamma.
    ProbeUppth {
        #[arg(long, default_value_t = 1024)]
        n: u64,
        /// Default `1 + sqrt 2`.
        #[arg(long)]
        gamma_min: Option<f64>,
        /// Default `gamma_min,16`.
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
        /// Bump level (default: largest feasible one).
        #[arg(long)]
        level: Option<u32>,
        #[arg(long, default_value = "theorem")]
        variant: ThresholdVariant,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
    },
    /// Analysis pieces and filters of a basis.
    DumpBasis {
        #[arg(long)]
        basis: BasisKind,
    },
    /// Run a `key=value` experiment plan file.
    RunPlan {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        per_run: bool,
    },
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Signal to sample; not needed with `--points`.
    #[arg(long)]
    signal: Option<SignalId>,
    #[arg(long)]
    basis: BasisKind,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Default `floor(log2 n)`.
    #[arg(long)]
    j0: Option<u32>,
    #[arg(long, default_value = "simulation")]
    variant: ThresholdVariant,
    /// Event positions written by `simulate`, instead of sampling.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Reconstruction grid `lo:hi:step`.
    #[arg(long)]
    grid: Option<String>,
    /// Where to write the reconstruction (default: after the coefficients).
    #[arg(long)]
    recon_out: Option<PathBuf>,
}

/// A rendered result: manifest plus CSV body or JSON value.
struct Output {
    manifest: String,
    csv: String,
    json: serde_json::Value,
}

impl Output {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => format!("# {}\n{}", self.manifest, self.csv),
            Format::Json => {
                let v = json!({ "manifest": self.manifest, "data": self.json });
                serde_json::to_string_pretty(&v).expect("serializable") + "\n"
            }
        }
    }
}

fn write_to(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("grid must be lo:hi:step with step > 0, got `{spec}`"));
    let parts: Vec<f64> = spec.split(':').map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0 && lo.is_finite() && hi >= lo) {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

/// Reads event positions: `#` lines and a non-numeric header are skipped.
fn read_points(path: &Path, n: u64) -> Result<PointProcess> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(x) => points.push(x),
            Err(_) if points.is_empty() && line.chars().any(char::is_alphabetic) => continue,
            Err(_) => return Err(CliError::Usage(format!("{}:{}: not a number: `{line}`", path.display(), i + 1))),
        }
    }
    Ok(PointProcess::new(n, points)?)
}

fn simulate(c: &Common, signal: SignalId, n: u64) -> Result<Output> {
    let pts = sample(&signal.spec(), n, SeedSpec(c.seed))?;
    let mut csv = String::from("x\n");
    for x in &pts.points {
        let _ = writeln!(csv, "{x}");
    }
    Ok(Output {
        manifest: format!("pwt simulate signal={signal} n={n} seed={} count={}", c.seed, pts.len()),
        csv,
        json: json!({ "n": n, "points": pts.points }),
    })
}

fn estimate_cmd(c: &Common, a: &EstimateArgs) -> Result<Output> {
    let (pts, source) = match (&a.points, a.signal) {
        (Some(p), _) => (read_points(p, a.n)?, format!("points={}", p.display())),
        (None, Some(s)) => (sample(&s.spec(), a.n, SeedSpec(c.seed))?, format!("signal={s} seed={}", c.seed)),
        (None, None) => return Err(CliError::Usage("estimate needs --signal or --points".into())),
    };
    let j0 = a.j0.unwrap_or_else(|| default_j0(a.n));
    let cfg = GammaNConfig::new(j0, a.gamma, a.variant)?;
    let basis = a.basis.basis();
    let table = estimate(&pts, &basis, &cfg)?;
    let manifest = format!(
        "pwt estimate {source} basis={} n={} gamma={} j0={j0} variant={} events={} kept={}",
        a.basis,
        a.n,
        a.gamma,
        a.variant,
        pts.len(),
        table.kept().count()
    );
    let mut csv = String::from("j,k,beta_hat,v_hat,v_tilde,eta\n");
    let mut rows = Vec::new();
    for r in table.kept() {
        let t = r.threshold.expect("thresholded");
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.lambda.j, r.lambda.k, r.beta_hat, r.v_hat, t.v_tilde, t.eta);
        rows.push(json!({ "j": r.lambda.j, "k": r.lambda.k, "beta_hat": r.beta_hat, "v_hat": r.v_hat, "v_tilde": t.v_tilde, "eta": t.eta }));
    }
    let mut json = json!({ "coefficients": rows });
    if let Some(g) = &a.grid {
        let grid = parse_grid(g)?;
        let values = reconstruct(&basis, &table.kept_coeffs(), &grid);
        let mut recon = String::from("x,f_hat\n");
        for (x, v) in grid.iter().zip(&values) {
            let _ = writeln!(recon, "{x},{v}");
        }
        match &a.recon_out {
            Some(p) => write_to(Some(p), &format!("# {manifest} grid={g}\n{recon}"))?,
            None => {
                let _ = write!(csv, "# reconstruction grid={g}\n{recon}");
                json["reconstruction"] = json!({ "x": grid, "f_hat": values });
            }
        }
    }
    Ok(Output { manifest, csv, json })
}

fn report_output(name: &str, plan: &ExperimentPlan, report: &ExperimentReport, csv: String) -> Output {
    Output { manifest: format!("pwt {name} {}", plan.manifest()), csv, json: to_json(report) }
}

fn run(cli: Cli) -> Result<Output> {
    let c = &cli.common;
    match &cli.command {
        Command::Simulate { signal, n } => simulate(c, *signal, *n),
        Command::Estimate(a) => estimate_cmd(c, a),
        Command::SweepGamma { signals, bases, n, runs, j0, gamma_min } => {
            let mut plan = ExperimentPlan::sweep(signals.clone(), bases.clone(), n.clone(), c.seed);
            plan.runs = *runs;
            plan.j0 = J0Policy::parse(j0)?;
            let report = harness::sweep_gamma(&plan, c.workers)?;
            let csv = if *gamma_min { report.gamma_min_csv() } else { report.curve_csv() };
            Ok(report_output("sweep-gamma", &plan, &report, csv))
        }
        Command::Table1 { signals, bases, n, gamma, runs, j0, variant, per_run } => {
            let ns = n.clone().unwrap_or_else(|| TABLE1_NS.to_vec());
            let mut plan = ExperimentPlan::table1(signals.clone(), bases.clone(), ns, c.seed);
            plan.gammas = GammaGrid::List(gamma.clone());
            plan.runs = *runs;
            plan.j0 = J0Policy::parse(j0)?;
            plan.variant = *variant;
            let report = run_plan(&plan, c.workers)?;
            let csv = if *per_run { report.breakdown_csv() } else { report.summary_csv() };
            Ok(report_output("table1", &plan, &report, csv))
        }
        Command::ProbeLower { n, gamma, runs } => {
            let rows = lower_bound_probe(n, gamma, *runs, c.seed, c.workers)?;
            let mut csv = String::from("n,gamma,runs,mean_r_n,se_r_n,r_n_times_n_pow_0.6,r_n_times_n_over_ln_n\n");
            for r in &rows {
                let _ = writeln!(csv, "{},{},{runs},{},{},{},{}", r.n, r.gamma, r.r_n.mean, r.r_n.se, r.scaled_slow, r.scaled_fast);
            }
            Ok(Output {
                manifest: format!(
                    "pwt probe-lower signal=haar1 basis=haar n={} gamma={} runs={runs} j0=log2n variant=simulation seed={}",
                    join(n),
                    join(gamma),
                    c.seed
                ),
                csv,
                json: to_json(&rows),
            })
        }
        Command::ProbeUppth { n, gamma_min, gamma, level, variant, runs } => {
            let gmin = gamma_min.unwrap_or(1.0 + 2f64.sqrt());
            let gammas = gamma.clone().unwrap_or_else(|| vec![gmin, 16.0]);
            let r = uppth_probe(*n, gmin, &gammas, *level, *variant, *runs, c.seed, c.workers)?;
            let mut csv = String::from("gamma,runs,mean_r_n,se_r_n,mean_R_n,se_R_n\n");
            for row in &r.rows {
                let _ = writeln!(csv, "{},{runs},{},{},{},{}", row.gamma, row.r_n.mean, row.r_n.se, row.ratio.mean, row.ratio.se);
            }
            Ok(Output {
                manifest: format!(
                    "pwt probe-uppth n={n} gamma_min={gmin} gamma={} level={} coeff={} j0={} variant={variant} runs={runs} seed={} oracle_denom={}",
                    join(&gammas),
                    r.level,
                    r.coeff,
                    r.j0,
                    c.seed,
                    r.oracle_denom
                ),
                csv,
                json: to_json(&r),
            })
        }
        Command::DumpBasis { basis } => {
            let b = basis.basis();
            let csv = dump_basis_csv(&b);
            let pieces: Vec<_> = b.psi().pieces().collect();
            Ok(Output {
                manifest: format!("pwt dump-basis basis={basis}"),
                json: json!({ "basis": basis, "phi": b.phi().pieces().collect::<Vec<_>>(), "psi": pieces }),
                csv,
            })
        }
        Command::RunPlan { plan, per_run } => {
            let text = fs::read_to_string(plan).map_err(|source| CliError::Io { path: plan.display().to_string(), source })?;
            let p = ExperimentPlan::parse(&text)?;
            let report = run_plan(&p, c.workers)?;
            let csv = match (&p.gammas, per_run) {
                (GammaGrid::Changepoints, _) => report.curve_csv(),
                (_, true) => report.breakdown_csv(),
                (_, false) => report.summary_csv(),
            };
            Ok(report_output("run-plan", &p, &report, csv))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let format = cli.common.format;
    let out = cli.common.out.clone();
    let result = run(cli).and_then(|o| write_to(out.as_deref(), &o.render(format)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pwt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0:1:0.001").unwrap().len(), 1001);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn guard_errors_map_to_exit_2() {
        let e = CliError::Lib(poisson_wavelet::Error::TailEnergy { cell: "x".into(), tail_energy: 1.0, oracle_denom: 1.0 });
        assert_eq!(e.exit_code(), 2);
        assert_eq!(CliError::Usage("bad".into()).exit_code(), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
