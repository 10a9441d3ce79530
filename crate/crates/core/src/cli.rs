//! Run configuration, run modes and CSV output for the `mhd` binary.
//!
//! Config files are flat `key = value` lines; `#` starts a comment. Command
//! line flags override file values. Times and step sizes accept fractions
//! such as `1/500`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::PhysParams;
use crate::error::{MhdError, Result};
use crate::harness::{
    l2_error, run_energy_study, run_spatial_study, run_temporal_study, ConvergenceTable, EnergyRow, EnergySeries,
    InitialVortex, ManufacturedSolution, StudyKind,
};
use crate::linsolve::DEFAULT_TOL;
use crate::mesh::Mesh;
use crate::scheme::{Fields, Forcing, NoForcing, StepOptions, Startup, Stepper, TimeGrid, ZeroFields};

/// Per-step energy increase tolerated before a run is declared unstable.
pub const ENERGY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    SingleRun,
    ConvergeTime,
    ConvergeSpace,
    Energy,
}

impl FromStr for Mode {
    type Err = MhdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-run" => Ok(Mode::SingleRun),
            "converge-time" => Ok(Mode::ConvergeTime),
            "converge-space" => Ok(Mode::ConvergeSpace),
            "energy" => Ok(Mode::Energy),
            _ => Err(MhdError::Config(format!(
                "unknown mode `{s}` (expected single-run, converge-time, converge-space or energy)"
            ))),
        }
    }
}

/// Problem solved by `single-run`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    /// Manufactured solution with its sources.
    Mms,
    /// Unforced vortex initial data.
    Vortex,
    /// Zero data, zero sources.
    Zero,
}

impl FromStr for Problem {
    type Err = MhdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mms" => Ok(Problem::Mms),
            "vortex" => Ok(Problem::Vortex),
            "zero" => Ok(Problem::Zero),
            _ => Err(MhdError::Config(format!("invalid value for `problem`: {s}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: Problem,
    /// Mesh for single-run, converge-time and energy.
    pub m: usize,
    /// Meshes for converge-space.
    pub m_list: Vec<usize>,
    /// Step for single-run, converge-space and energy.
    pub tau: f64,
    /// Step counts for converge-time.
    pub n_list: Vec<usize>,
    pub t_final: f64,
    pub params: PhysParams,
    pub tol: f64,
    pub out: PathBuf,
    pub paper_exact: bool,
}

impl RunConfig {
    /// Desk-scale defaults; `paper_exact` switches to the published settings.
    pub fn defaults(mode: Mode, paper_exact: bool) -> Self {
        let (m, m_list, tau, n_list, t_final) = match (mode, paper_exact) {
            (Mode::ConvergeTime, false) => (64, vec![], 0.1, vec![10, 20, 40, 80], 1.0),
            (Mode::ConvergeTime, true) => (100, vec![], 0.1, vec![10, 20, 40, 80], 1.0),
            (Mode::ConvergeSpace, false) => (8, vec![8, 16, 32], 1.0 / 500.0, vec![], 1.0),
            (Mode::ConvergeSpace, true) => (10, vec![10, 20, 40, 80], 1.0 / 2000.0, vec![], 1.0),
            (Mode::Energy, false) => (32, vec![], 10.0, vec![], 1000.0),
            (Mode::Energy, true) => (50, vec![], 10.0, vec![], 1000.0),
            (Mode::SingleRun, _) => (16, vec![], 0.01, vec![], 1.0),
        };
        RunConfig {
            mode,
            problem: Problem::Mms,
            m,
            m_list,
            tau,
            n_list,
            t_final,
            params: PhysParams::default(),
            tol: DEFAULT_TOL,
            out: PathBuf::from("."),
            paper_exact,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| MhdError::Config(format!("invalid value for `{key}`: {value:?} ({what})"));
        let pos_f64 = || -> Result<f64> {
            let v = parse_number(value).ok_or_else(|| bad("not a number"))?;
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(bad("must be positive"))
            }
        };
        let pos_usize = |s: &str| -> Result<usize> {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| bad("must be a positive integer"))
        };
        let list = || -> Result<Vec<usize>> {
            let v = value.split(',').map(pos_usize).collect::<Result<Vec<_>>>()?;
            if v.len() < 2 {
                return Err(bad("need at least two entries"));
            }
            Ok(v)
        };
        match key {
            "mode" => {
                let m: Mode = value.parse().map_err(|_| bad("unknown mode"))?;
                if m != self.mode {
                    return Err(bad("does not match the mode given on the command line"));
                }
            }
            "problem" => self.problem = value.parse()?,
            "M" => self.m = pos_usize(value)?,
            "M_list" => self.m_list = list()?,
            "tau" => self.tau = pos_f64()?,
            "N_list" => self.n_list = list()?,
            "T" => self.t_final = pos_f64()?,
            "mu" => self.params.mu = pos_f64()?,
            "sigma" => self.params.sigma = pos_f64()?,
            "nu" => self.params.nu = pos_f64()?,
            "tol" => self.tol = pos_f64()?,
            "out" => self.out = PathBuf::from(value),
            "paper_exact" => {
                self.paper_exact = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("expected true or false")),
                }
            }
            _ => return Err(MhdError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Checks cross-field requirements of the mode.
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::ConvergeTime => {
                for &n in &self.n_list {
                    if n < 2 {
                        return Err(MhdError::Config("invalid value for `N_list`: every entry must be at least 2".into()));
                    }
                }
            }
            Mode::ConvergeSpace | Mode::Energy | Mode::SingleRun => {
                TimeGrid::with_final_time(self.tau, self.t_final)
                    .map_err(|e| MhdError::Config(format!("invalid `tau`/`T` combination: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            tol: self.tol,
            coupling: true,
        }
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

/// Parses `key = value` lines into ordered pairs.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| MhdError::Config(format!("line {}: expected `key = value`, got {raw:?}", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Builds the configuration: defaults, then file settings, then flags.
/// `paper_exact` selects the defaults and is applied first.
pub fn parse_config(
    mode: Mode,
    file: Option<&Path>,
    flags: &[(&str, String)],
    paper_exact: bool,
) -> Result<RunConfig> {
    let file_pairs = match file {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| MhdError::Config(format!("cannot read config {}: {e}", p.display())))?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    let paper = paper_exact
        || file_pairs
            .iter()
            .any(|(k, v)| k == "paper_exact" && matches!(v.as_str(), "true" | "1" | "yes"));
    let mut cfg = RunConfig::defaults(mode, paper);
    for (k, v) in &file_pairs {
        cfg.set(k, v)?;
    }
    for (k, v) in flags {
        cfg.set(k, v)?;
    }
    cfg.paper_exact = paper;
    cfg.validate()?;
    Ok(cfg)
}

/// Formats with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn table_csv(table: &ConvergenceTable) -> String {
    let mut s = String::from("resolution,err_u,order_u,err_H,order_H\n");
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.resolution,
            fmt_num(r.err_u),
            fmt_opt(r.order_u),
            fmt_num(r.err_h),
            fmt_opt(r.order_h)
        );
    }
    s
}

pub fn energy_csv(rows: &[EnergyRow]) -> String {
    let mut s = String::from("step,t,energy,div_residual,equiv_residual\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.step,
            fmt_num(r.t),
            fmt_num(r.energy),
            fmt_opt(r.div_residual),
            fmt_opt(r.equiv_residual)
        );
    }
    s
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

/// Executes the configured run and returns the files written.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let opts = cfg.step_options();
    match cfg.mode {
        Mode::ConvergeTime => {
            let table = run_temporal_study(cfg.m, cfg.t_final, &cfg.n_list, cfg.params, opts)?;
            Ok(vec![write(&cfg.out, "temporal.csv", &table_csv(&table))?])
        }
        Mode::ConvergeSpace => {
            let table = run_spatial_study(cfg.tau, cfg.t_final, &cfg.m_list, cfg.params, opts)?;
            debug_assert_eq!(table.kind, StudyKind::Spatial);
            Ok(vec![write(&cfg.out, "spatial.csv", &table_csv(&table))?])
        }
        Mode::Energy => {
            let grid = TimeGrid::with_final_time(cfg.tau, cfg.t_final)?;
            let series = run_energy_study(cfg.m, grid.tau, grid.steps, cfg.params, opts)?;
            let path = write(&cfg.out, "energy.csv", &energy_csv(&series.rows))?;
            series.check_monotone(ENERGY_TOL)?;
            Ok(vec![path])
        }
        Mode::SingleRun => single_run(cfg),
    }
}

fn single_run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let grid = TimeGrid::with_final_time(cfg.tau, cfg.t_final)?;
    let stepper = Stepper::new(Arc::new(Mesh::uniform(cfg.m)?), cfg.params, grid.tau, cfg.step_options())?;
    let mms = ManufacturedSolution::new(cfg.params);
    let (fields, forcing, startup): (&dyn Fields, &dyn Forcing, Startup) = match cfg.problem {
        Problem::Mms => (&mms, &mms, Startup::ExactFields),
        Problem::Vortex => (&InitialVortex, &NoForcing, Startup::Bootstrap),
        Problem::Zero => (&ZeroFields, &NoForcing, Startup::Bootstrap),
    };
    let level0 = stepper.initial_state(fields);
    let mut rows = vec![EnergyRow {
        step: 0,
        t: 0.0,
        energy: stepper.energy(&level0)?,
        div_residual: None,
        equiv_residual: None,
    }];
    let (state, first) = stepper.startup(fields, forcing, startup)?;
    let row = |r: &crate::scheme::StepReport| EnergyRow {
        step: r.step,
        t: r.t,
        energy: r.energy,
        div_residual: Some(r.div_residual),
        equiv_residual: r.equiv_residual,
    };
    rows.push(row(&first));
    let state = stepper.run(state, forcing, grid.steps - 1, |_, r| rows.push(row(r)))?;

    let mut written = vec![write(&cfg.out, "series.csv", &energy_csv(&rows))?];
    let mut fields_csv = String::from("field,index,value\n");
    for (name, f) in [("u", &state.u), ("H", &state.h), ("p", &state.p)] {
        for (i, v) in f.values().iter().enumerate() {
            let _ = writeln!(fields_csv, "{name},{i},{}", fmt_num(*v));
        }
    }
    written.push(write(&cfg.out, "fields.csv", &fields_csv)?);
    if cfg.problem == Problem::Mms {
        let t = grid.final_time();
        let f = stepper.forms();
        let eu = l2_error(&f.velocity, &state.u, |x, y| mms.velocity(t, x, y));
        let eh = l2_error(&f.magnetic, &state.h, |x, y| Fields::magnetic(&mms, t, x, y));
        written.push(write(&cfg.out, "errors.csv", &format!("err_u,err_H\n{},{}\n", fmt_num(eu), fmt_num(eh)))?);
    }
    if cfg.problem != Problem::Mms {
        EnergySeries { rows }.check_monotone(ENERGY_TOL)?;
    }
    Ok(written)
}

/// Process exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &MhdError) -> i32 {
    match err {
        MhdError::Config(_) => 2,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_energy_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "mode = energy\nM = 32\ntau = 10 # big step\n\nT = 1000\n").unwrap();
        let cfg = parse_config(Mode::Energy, Some(&path), &[], false).unwrap();
        assert_eq!((cfg.m, cfg.tau, cfg.t_final), (32, 10.0, 1000.0));
        let cfg = parse_config(Mode::Energy, Some(&path), &[("M", "8".into())], false).unwrap();
        assert_eq!(cfg.m, 8);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::defaults(Mode::Energy, false);
        let e = cfg.set("tau", "-1").unwrap_err();
        assert!(e.to_string().contains("tau"));
        assert_eq!(exit_code(&e), 2);
        let e = cfg.set("frobnicate", "3").unwrap_err();
        assert!(e.to_string().contains("frobnicate"));
        assert!(cfg.set("M", "0").is_err());
        assert!(cfg.set("mode", "single-run").is_err());
        assert!(cfg.set("N_list", "10").is_err());
    }

    #[test]
    fn fractions_and_lists() {
        let mut cfg = RunConfig::defaults(Mode::ConvergeSpace, false);
        cfg.set("tau", "1/500").unwrap();
        assert_eq!(cfg.tau, 1.0 / 500.0);
        cfg.set("M_list", "4, 8,16").unwrap();
        assert_eq!(cfg.m_list, vec![4, 8, 16]);
        assert!(parse_config_text("no equals sign").is_err());
    }

    #[test]
    fn paper_defaults() {
        assert_eq!(RunConfig::defaults(Mode::ConvergeTime, true).m, 100);
        assert_eq!(RunConfig::defaults(Mode::ConvergeSpace, true).m_list, vec![10, 20, 40, 80]);
        assert_eq!(RunConfig::defaults(Mode::Energy, false).m, 32);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn csv_layout() {
        let t = ConvergenceTable::from_errors(StudyKind::Temporal, &[(10, 1.0, 2.0), (20, 0.25, 0.5)]);
        let csv = table_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "resolution,err_u,order_u,err_H,order_H");
        assert!(lines[1].starts_with("10,") && lines[1].contains(",,"));
        assert!(lines[2].contains("2.0000000000000000e0"));
    }
}
