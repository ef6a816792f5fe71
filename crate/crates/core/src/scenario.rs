//! Config-driven protocol runs and parameter sweeps.
//!
//! Configs are flat TOML files, one key per line:
//!
//! ```toml
//! case = 1                 # 1: variable coupling, 2: variable detuning
//! t0 = -5.0                # pulse arrival time
//! T_hold = 5.0             # storage time
//! a0 = 1.0                 # input amplitude, or [re, im]
//! gamma_over_kappa = 0.0
//! n_bar = 20.0             # coherent-ensemble mean photon number
//! dt = 0.001
//! output_dir = "out"
//! ```
//!
//! Sweep files add `axis = "T_hold"` and `values = [5.0, 10.0]`.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::design::{design_coupling_sech, design_detuning_sech, write_grid, Design, MemoryParams, MIN_LEAD};
use crate::dynamics::{run_protocol, vacuum_output_residual, ProtocolResult, ProtocolTiming};
use crate::error::Error;
use crate::metrology::{fidelity_report, pass_fail, protocol_efficiency, FidelityReport};
use crate::par::{self, Execution};
use crate::signal::fmt_num;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "config error: {msg}"),
            RunError::Numerical(e) => write!(f, "numerical error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) | Error::UnsupportedInput(m) => RunError::Config(m),
            other => RunError::Numerical(other),
        }
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Config(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Config(format!("csv: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> Complex64 {
        match self {
            Amplitude::Real(x) => Complex64::new(x, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// One protocol run. Defaults reproduce the lossless variable-coupling round trip.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub case: u8,
    pub t0: f64,
    #[serde(rename = "T_hold")]
    pub t_hold: f64,
    pub a0: Amplitude,
    pub gamma_over_kappa: f64,
    pub n_bar: f64,
    pub dt: f64,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            case: 1,
            t0: -5.0,
            t_hold: 5.0,
            a0: Amplitude::Real(1.0),
            gamma_over_kappa: 0.0,
            n_bar: 20.0,
            dt: 1e-3,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if !matches!(self.case, 1 | 2) {
            return bad(format!("case must be 1 or 2, got {}", self.case));
        }
        let a0 = self.a0.value();
        for (name, v) in [
            ("t0", self.t0),
            ("T_hold", self.t_hold),
            ("a0", a0.re),
            ("a0", a0.im),
            ("gamma_over_kappa", self.gamma_over_kappa),
            ("n_bar", self.n_bar),
            ("dt", self.dt),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.t_hold < 0.0 {
            return bad(format!("T_hold must be non-negative, got {}", self.t_hold));
        }
        if self.gamma_over_kappa < 0.0 {
            return bad(format!("gamma_over_kappa must be non-negative, got {}", self.gamma_over_kappa));
        }
        if self.n_bar < 0.0 {
            return bad(format!("n_bar must be non-negative, got {}", self.n_bar));
        }
        if self.dt <= 0.0 {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        Ok(())
    }

    fn set_axis(&mut self, axis: SweepAxis, value: f64) {
        match axis {
            SweepAxis::THold => self.t_hold = value,
            SweepAxis::GammaOverKappa => self.gamma_over_kappa = value,
            SweepAxis::NBar => self.n_bar = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    THold,
    GammaOverKappa,
    NBar,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::THold => "T_hold",
            SweepAxis::GammaOverKappa => "gamma_over_kappa",
            SweepAxis::NBar => "n_bar",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        match s {
            "T_hold" | "T" => Ok(SweepAxis::THold),
            "gamma_over_kappa" | "gamma" => Ok(SweepAxis::GammaOverKappa),
            "n_bar" | "nbar" => Ok(SweepAxis::NBar),
            other => Err(RunError::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepConfig {
    pub fn new(base: ScenarioConfig, axis: SweepAxis, values: Vec<f64>) -> Result<Self, RunError> {
        let cfg = Self { base, axis, values };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        let axis = match table.remove("axis") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(_) => return Err(RunError::Config("axis must be a string".into())),
            None => return Err(RunError::Config("sweep config needs an `axis` key".into())),
        };
        let values = match table.remove("values") {
            Some(toml::Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(x),
                    toml::Value::Integer(i) => Ok(i as f64),
                    other => Err(RunError::Config(format!("sweep value `{other}` is not a number"))),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(_) => return Err(RunError::Config("values must be an array".into())),
            None => return Err(RunError::Config("sweep config needs a `values` key".into())),
        };
        let base: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
        Self::new(base, axis, values)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.values.is_empty() {
            return Err(RunError::Config("sweep needs at least one value".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(RunError::Config("sweep values must be finite".into()));
        }
        self.base.validate()
    }
}

/// Scalars from one run plus the fidelity report derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub case: u8,
    pub t0: f64,
    pub t_hold: f64,
    pub gamma_over_kappa: f64,
    pub dt: f64,
    pub a0: Complex64,
    pub sqrt_eta: f64,
    pub eta: f64,
    pub vacuum_residual: f64,
    pub memory_regime: bool,
    pub report: FidelityReport,
}

impl Summary {
    pub const HEADER: [&'static str; 22] = [
        "case", "t0", "T_hold", "gamma_over_kappa", "n_bar", "dt", "a0_re", "a0_im", "sqrt_eta", "eta",
        "vacuum_residual", "memory_regime", "F_coherent", "F_classical_coherent", "eta_threshold", "F1", "F2",
        "clone_bound_1", "clone_bound_2", "verdict_coherent", "verdict_n1", "verdict_n2",
    ];

    pub fn fields(&self) -> Vec<String> {
        let r = &self.report;
        vec![
            self.case.to_string(),
            fmt_num(self.t0),
            fmt_num(self.t_hold),
            fmt_num(self.gamma_over_kappa),
            fmt_num(r.n_bar),
            fmt_num(self.dt),
            fmt_num(self.a0.re),
            fmt_num(self.a0.im),
            fmt_num(self.sqrt_eta),
            fmt_num(self.eta),
            fmt_num(self.vacuum_residual),
            self.memory_regime.to_string(),
            fmt_num(r.f_coherent),
            fmt_num(r.f_classical_coherent),
            fmt_num(r.eta_threshold),
            fmt_num(r.f1),
            fmt_num(r.f2),
            fmt_num(r.clone_bound_1),
            fmt_num(r.clone_bound_2),
            pass_fail(r.verdicts.coherent).into(),
            pass_fail(r.verdicts.bounded_1).into(),
            pass_fail(r.verdicts.bounded_2).into(),
        ]
    }
}

pub fn build_design(cfg: &ScenarioConfig) -> Result<Design, RunError> {
    let grid = write_grid(cfg.t0, MIN_LEAD, cfg.dt)?;
    Ok(match cfg.case {
        1 => design_coupling_sech(cfg.t0, grid)?.into(),
        _ => design_detuning_sech(cfg.t0, grid)?.into(),
    })
}

/// Runs a scenario in memory.
pub fn simulate(cfg: &ScenarioConfig) -> Result<(ProtocolResult, Summary), RunError> {
    cfg.validate()?;
    let design = build_design(cfg)?;
    let params = MemoryParams::lossy(cfg.gamma_over_kappa)?;
    let timing = ProtocolTiming::new(cfg.t0, cfg.t_hold)?;
    let a0 = cfg.a0.value();
    let result = run_protocol(params, &design, timing, a0)?;
    let eff = protocol_efficiency(&result)?;
    let report = fidelity_report(eff.intensity_efficiency, cfg.n_bar)?;
    let summary = Summary {
        case: cfg.case,
        t0: cfg.t0,
        t_hold: cfg.t_hold,
        gamma_over_kappa: cfg.gamma_over_kappa,
        dt: cfg.dt,
        a0,
        sqrt_eta: eff.amplitude_efficiency,
        eta: eff.intensity_efficiency,
        vacuum_residual: vacuum_output_residual(&result)?,
        memory_regime: timing.is_memory_regime(),
        report,
    };
    Ok((result, summary))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, RunError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes `trajectory.csv`, `schedule.csv` and `summary.csv` into `output_dir`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Summary, RunError> {
    let (result, summary) = simulate(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    result.write_csv(create(&cfg.output_dir, "trajectory.csv")?)?;
    result.schedule.write_csv(create(&cfg.output_dir, "schedule.csv")?)?;
    let mut w = csv::Writer::from_writer(create(&cfg.output_dir, "summary.csv")?);
    w.write_record(Summary::HEADER)?;
    w.write_record(summary.fields())?;
    w.flush()?;
    Ok(summary)
}

#[derive(Debug)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<Summary, RunError>,
}

/// Evaluates every sweep point independently; rows come back sorted by axis value.
pub fn sweep_rows(cfg: &SweepConfig, exec: Execution) -> Result<Vec<SweepRow>, RunError> {
    cfg.validate()?;
    let mut values = cfg.values.clone();
    values.sort_by(f64::total_cmp);
    Ok(par::map(&values, exec, |&value| {
        let mut point = cfg.base.clone();
        point.set_axis(cfg.axis, value);
        SweepRow { value, outcome: simulate(&point).map(|(_, s)| s) }
    }))
}

/// Runs the sweep and writes `sweep.csv` into the base output directory.
pub fn run_sweep(cfg: &SweepConfig, exec: Execution) -> Result<Vec<SweepRow>, RunError> {
    let rows = sweep_rows(cfg, exec)?;
    fs::create_dir_all(&cfg.base.output_dir)?;
    let mut w = csv::Writer::from_writer(create(&cfg.base.output_dir, "sweep.csv")?);
    let mut header = vec!["axis", "value"];
    header.extend(Summary::HEADER);
    header.push("error");
    w.write_record(&header)?;
    for row in &rows {
        let mut rec = vec![cfg.axis.name().to_string(), fmt_num(row.value)];
        match &row.outcome {
            Ok(s) => {
                rec.extend(s.fields());
                rec.push(String::new());
            }
            Err(e) => {
                rec.extend(std::iter::repeat(String::new()).take(Summary::HEADER.len()));
                rec.push(e.to_string());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(rows)
}

/// PASS/FAIL lines for one summary row, keyed by column name. Needs `n_bar`
/// and one of `eta` / `sqrt_eta`.
pub fn verdict(row: &HashMap<String, String>) -> Result<Vec<String>, RunError> {
    let num = |key: &str| -> Option<Result<f64, RunError>> {
        row.get(key).filter(|s| !s.is_empty()).map(|s| {
            s.trim().parse::<f64>().map_err(|_| RunError::Config(format!("column {key} is not a number: `{s}`")))
        })
    };
    let eta = match (num("eta"), num("sqrt_eta")) {
        (Some(e), _) => e?,
        (None, Some(r)) => r?.powi(2),
        (None, None) => return Err(RunError::Config("row has no eta or sqrt_eta column".into())),
    };
    let n_bar = num("n_bar").ok_or_else(|| RunError::Config("row has no n_bar column".into()))??;
    let r = fidelity_report(eta.clamp(0.0, 1.0), n_bar)?;
    Ok(vec![
        format!(
            "coherent (n_bar = {n_bar}): F = {:.4} vs classical {:.4}: {}",
            r.f_coherent,
            r.f_classical_coherent,
            pass_fail(r.verdicts.coherent)
        ),
        format!("n_m = 1: F = {:.4} vs cloning {:.4}: {}", r.f1, r.clone_bound_1, pass_fail(r.verdicts.bounded_1)),
        format!("n_m = 2: F = {:.4} vs cloning {:.4}: {}", r.f2, r.clone_bound_2, pass_fail(r.verdicts.bounded_2)),
    ])
}

/// Reads every record of a summary or sweep CSV as a column → value map.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<HashMap<String, String>>, RunError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(header.iter().map(String::from).zip(rec.iter().map(String::from)).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_parsing() {
        let cfg = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        let cfg = ScenarioConfig::from_toml("case = 2\nT_hold = 10\na0 = [0.5, -0.5]\ngamma_over_kappa = 0.01\n").unwrap();
        assert_eq!(cfg.case, 2);
        assert_eq!(cfg.t_hold, 10.0);
        assert_eq!(cfg.a0.value(), Complex64::new(0.5, -0.5));
        assert_eq!(ScenarioConfig::from_toml("case = 3").unwrap_err().exit_code(), 2);
        assert_eq!(ScenarioConfig::from_toml("speed = 1").unwrap_err().exit_code(), 2);
        assert_eq!(ScenarioConfig::from_toml("dt = -1.0").unwrap_err().exit_code(), 2);
        assert_eq!(ScenarioConfig::from_toml("gamma_over_kappa = nan").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sweep_parsing() {
        let s = SweepConfig::from_toml("gamma_over_kappa = 0.01\naxis = \"T_hold\"\nvalues = [20, 5.0]\n").unwrap();
        assert_eq!(s.axis, SweepAxis::THold);
        assert_eq!(s.values, vec![20.0, 5.0]);
        assert_eq!(s.base.gamma_over_kappa, 0.01);
        assert_eq!(SweepConfig::from_toml("axis = \"T_hold\"\nvalues = []").unwrap_err().exit_code(), 2);
        assert_eq!(SweepConfig::from_toml("axis = \"dt\"\nvalues = [1]").unwrap_err().exit_code(), 2);
        assert_eq!(SweepConfig::from_toml("values = [1]").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn stiff_case_two_exits_with_numerical_code() {
        let cfg = ScenarioConfig { case: 2, ..ScenarioConfig::default() };
        let err = simulate(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("need dt"), "{err}");
    }

    #[test]
    fn verdict_needs_fields() {
        let mut row = HashMap::new();
        row.insert("sqrt_eta".to_string(), "0.871".to_string());
        assert_eq!(verdict(&row).unwrap_err().exit_code(), 2);
        row.insert("n_bar".to_string(), "20".to_string());
        let lines = verdict(&row).unwrap();
        assert!(lines[0].ends_with("PASS"));
        row.insert("sqrt_eta".to_string(), "0.748".to_string());
        let lines = verdict(&row).unwrap();
        assert!(lines[0].ends_with("FAIL"));
        assert!(lines[2].ends_with("PASS"));
    }
}
