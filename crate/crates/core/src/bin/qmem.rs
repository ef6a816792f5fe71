use std::fs::{self, File};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qmem::metrology::{bounded_fidelity, haar_average_fidelity};
use qmem::par::{init_workers_from_env, Execution};
use qmem::scenario::{read_rows, run_scenario, run_sweep, verdict, RunError, ScenarioConfig, SweepConfig};

/// Synchronous quantum memory simulator. Worker count for sweeps and the
/// Monte Carlo oracle comes from QMEM_WORKERS.
#[derive(Parser)]
#[command(name = "qmem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one write-hold-read protocol and write trajectory, schedule and summary CSVs.
    Run(Overrides),
    /// Run a parameter sweep and write sweep.csv.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Parameter to sweep: T_hold, gamma_over_kappa or n_bar.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Evaluate points one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Print quantum-memory verdicts for the rows of a summary or sweep CSV.
    Verdict {
        summary: PathBuf,
    },
    /// Haar-averaged loss-channel fidelity by Monte Carlo.
    Oracle {
        #[arg(long)]
        eta: f64,
        #[arg(long = "nm", default_value_t = 2)]
        n_m: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Overrides {
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<u8>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
    /// Storage time.
    #[arg(long = "T")]
    t_hold: Option<f64>,
    /// Oscillator damping in units of the cavity damping.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Real input amplitude.
    #[arg(long, allow_hyphen_values = true)]
    a0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(v) = self.case {
            cfg.case = v;
        }
        if let Some(v) = self.t0 {
            cfg.t0 = v;
        }
        if let Some(v) = self.t_hold {
            cfg.t_hold = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma_over_kappa = v;
        }
        if let Some(v) = self.nbar {
            cfg.n_bar = v;
        }
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if let Some(v) = self.a0 {
            cfg.a0 = qmem::scenario::Amplitude::Real(v);
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
    }

    fn config_text(&self) -> Result<String, RunError> {
        match &self.config {
            Some(p) => fs::read_to_string(p).map_err(|e| RunError::Config(format!("{}: {e}", p.display()))),
            None => Ok(String::new()),
        }
    }

    fn scenario(&self) -> Result<ScenarioConfig, RunError> {
        let mut cfg = ScenarioConfig::from_toml(&self.config_text()?)?;
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run(o) => {
            let cfg = o.scenario()?;
            let summary = run_scenario(&cfg)?;
            println!("vacuum-output residual  {:.3e}", summary.vacuum_residual);
            print!("{}", summary.report.table());
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Sweep { overrides, axis, values, sequential } => {
            let text = overrides.config_text()?;
            let mut sweep = if text.contains("axis") {
                SweepConfig::from_toml(&text)?
            } else {
                let base = ScenarioConfig::from_toml(&text)?;
                SweepConfig { base, axis: qmem::scenario::SweepAxis::THold, values: Vec::new() }
            };
            overrides.apply(&mut sweep.base);
            if let Some(a) = axis {
                sweep.axis = a.parse()?;
            }
            if let Some(v) = values {
                sweep.values = v;
            }
            sweep.validate()?;
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let rows = run_sweep(&sweep, exec)?;
            println!("{:>12} {:>10} {:>10} {:>10}  verdict", sweep.axis.name(), "sqrt_eta", "F_coh", "bound");
            for row in &rows {
                match &row.outcome {
                    Ok(s) => println!(
                        "{:>12} {:>10.4} {:>10.4} {:>10.4}  {}",
                        row.value,
                        s.sqrt_eta,
                        s.report.f_coherent,
                        s.report.f_classical_coherent,
                        if s.report.verdicts.coherent { "PASS" } else { "FAIL" }
                    ),
                    Err(e) => println!("{:>12} error: {e}", row.value),
                }
            }
            if let Some(Err(e)) = rows.iter().map(|r| &r.outcome).find(|o| o.is_err()) {
                return Err(RunError::Config(format!("some sweep points failed (first: {e})")));
            }
        }
        Command::Verdict { summary } => {
            let file = File::open(&summary).map_err(|e| RunError::Config(format!("{}: {e}", summary.display())))?;
            let rows = read_rows(file)?;
            if rows.is_empty() {
                return Err(RunError::Config("summary file has no rows".into()));
            }
            for (i, row) in rows.iter().enumerate() {
                if rows.len() > 1 {
                    let label = match (row.get("axis"), row.get("value")) {
                        (Some(a), Some(v)) => format!("{a} = {v}"),
                        _ => format!("row {i}"),
                    };
                    println!("[{label}]");
                }
                for line in verdict(row)? {
                    println!("{line}");
                }
            }
        }
        Command::Oracle { eta, n_m, samples, seed } => {
            let est = haar_average_fidelity(eta, n_m, samples, seed)?;
            println!("eta = {eta}, n_m = {n_m}, samples = {samples}, seed = {seed}");
            println!("haar mean fidelity  {:.6} ± {:.6}", est.mean, est.std_err);
            if let Ok(closed) = bounded_fidelity(eta, n_m as u32) {
                let z = (est.mean - closed).abs() / est.std_err.max(f64::MIN_POSITIVE);
                println!("closed form         {closed:.6}  ({z:.2} standard errors)");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    init_workers_from_env();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qmem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
