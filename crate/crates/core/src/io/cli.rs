//! The `nematoflow` command line. Exit codes: 0 success, 1 invalid input or
//! failed check, 2 numerical abort. Errors are printed as `ERROR: ...` lines.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::config::{Backend, RunConfig};
use super::driver::{
    execute_run, inequality_constant, io_err, layout_of, list_snapshots, load_config, load_run_config, read_text, write_text, CliError, Simulation,
    BOUNDARY_FILE, ENERGY_FILE,
};
use super::snapshot::Snapshot;
use super::tables::{energy_csv, parse_boundary_csv, parse_energy_csv};
use crate::bounded::{dirichlet_energy_check, BoundaryKind};
use crate::diagnostics::{
    apriori_tracker, energy_inequality_check, energy_law_residual, interpolation_check, interpolation_check_weighted, weak_residual, EnergyRecord,
    InterpolationReport, WeakForm,
};
use crate::error::SolverError;
use crate::galerkin::SolverState;

#[derive(Parser, Debug)]
#[command(name = "nematoflow", version, about = "Nematic liquid-crystal flow simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a simulation described by a config file.
    Run { config: PathBuf },
    /// Check the discrete energy law of a finished run.
    CheckEnergy { rundir: PathBuf },
    /// Weak-form momentum residual between consecutive snapshots (spectral runs).
    Residual {
        rundir: PathBuf,
        /// Number of random test functions per snapshot pair.
        #[arg(long, default_value_t = 8)]
        tests: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rerun a config over a range of one discretization parameter.
    ConvergenceStudy {
        config: PathBuf,
        #[arg(long, value_enum)]
        vary: Vary,
        /// Comma-separated values; defaults depend on the parameter.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Recompute energy, a priori and interpolation tables from snapshots.
    ExportCsv { rundir: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Vary {
    #[value(name = "N")]
    N,
    #[value(name = "M")]
    M,
    #[value(name = "dt")]
    Dt,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(out, "{text}");
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 1 } else { 0 };
            }
            let mut lines = text.lines();
            let first = lines.next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "ERROR: {}", first.trim_start_matches("error: "));
            for l in lines {
                let _ = writeln!(err, "{l}");
            }
            return 1;
        }
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config, out),
        Command::CheckEnergy { rundir } => cmd_check_energy(&rundir, out),
        Command::Residual { rundir, tests, seed } => cmd_residual(&rundir, tests, seed, out),
        Command::ConvergenceStudy { config, vary, values } => cmd_study(&config, vary, values, out),
        Command::ExportCsv { rundir } => cmd_export(&rundir, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            for m in e.messages() {
                let _ = writeln!(err, "ERROR: {m}");
            }
            e.exit_code()
        }
    }
}

fn cmd_run(config: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = load_config(config)?;
    let o = execute_run(&c)?;
    let last = o.history.last().copied().unwrap_or_default();
    let _ = writeln!(
        out,
        "steps={} t={} energy={:e} divmax={:e} dir={}",
        o.steps,
        last.t,
        last.total(c.model.lambda),
        last.divmax,
        o.dir.display()
    );
    match o.abort {
        Some(e) => Err(CliError::from(e)),
        None => Ok(0),
    }
}

fn load_history(dir: &Path) -> Result<Vec<EnergyRecord>, CliError> {
    let p = dir.join(ENERGY_FILE);
    parse_energy_csv(&read_text(&p)?).map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))
}

fn cmd_check_energy(dir: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = load_run_config(dir)?;
    let hist = load_history(dir)?;
    if hist.len() < 2 {
        return Err(CliError::invalid(format!("{}: need at least two energy records", dir.display())));
    }
    let tol = c.energy_tol;
    if c.backend == Backend::Mac && c.boundary == BoundaryKind::Dirichlet {
        let p = dir.join(BOUNDARY_FILE);
        let b = parse_boundary_csv(&read_text(&p)?).map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))?;
        let rep = dirichlet_energy_check(&hist, &b, &c.model, tol)?;
        let mut csv = String::from("t,residual,boundary_work\n");
        for s in &rep.steps {
            csv.push_str(&format!("{},{},{}\n", s.t, s.residual, s.boundary_work));
        }
        write_text(&dir.join("energy_check.csv"), &csv)?;
        let _ = writeln!(out, "max_positive_residual={:e} tol={:e} boundary_pairing={}", rep.max_residual.max(0.0), tol, rep.surrogate);
        let _ = writeln!(out, "max_abs_boundary_work={:e}", rep.max_abs_boundary_work);
        return Ok(verdict(rep.passed(), out));
    }
    let residuals: Vec<(f64, f64)> = hist.windows(2).map(|w| (w[1].t, energy_law_residual(&w[0], &w[1], w[1].t - w[0].t, &c.model))).collect();
    let max_pos = residuals.iter().fold(0.0f64, |m, r| m.max(r.1));
    let ineq = energy_inequality_check(&hist, &c.model, inequality_constant(&c)?, tol);
    let mut csv = String::from("t,residual,inequality_margin\n");
    for ((t, r), s) in residuals.iter().zip(&ineq.steps) {
        csv.push_str(&format!("{t},{r},{}\n", s.margin));
    }
    write_text(&dir.join("energy_check.csv"), &csv)?;
    let _ = writeln!(out, "max_positive_residual={max_pos:e} tol={tol:e}");
    let _ = writeln!(
        out,
        "inequality: constant={:e} min_margin={:e} failures={}",
        ineq.constant,
        ineq.min_margin,
        ineq.failures()
    );
    Ok(verdict(max_pos <= tol && ineq.passed(), out))
}

fn verdict(pass: bool, out: &mut dyn Write) -> i32 {
    let _ = writeln!(out, "{}", if pass { "PASS" } else { "FAIL" });
    if pass {
        0
    } else {
        1
    }
}

fn read_spectral_snapshots(dir: &Path, c: &RunConfig) -> Result<Vec<SolverState<f64>>, CliError> {
    let grid = c.spectral_grid().map_err(CliError::invalid)?;
    list_snapshots(dir)?
        .iter()
        .map(|p| Ok(Snapshot::read(p, layout_of(c))?.to_spectral::<f64>(&grid, c.scheme.dt)?))
        .collect()
}

fn cmd_residual(dir: &Path, tests: usize, seed: u64, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = load_run_config(dir)?;
    if c.backend != Backend::Spectral {
        return Err(CliError::invalid("residual requires a spectral run"));
    }
    if tests == 0 {
        return Err(CliError::invalid("--tests must be at least 1"));
    }
    let sim = Simulation::new(&c)?;
    let Simulation::Spectral { solver, .. } = &sim else { unreachable!("spectral config builds a spectral simulation") };
    let snaps = read_spectral_snapshots(dir, &c)?;
    if snaps.len() < 2 {
        return Err(CliError::invalid(format!("{}: need at least two snapshots", dir.display())));
    }
    let form = WeakForm::from_solver(solver);
    let mut csv = String::from("t,residual\n");
    let mut worst = 0.0f64;
    for w in snaps.windows(2) {
        let r = weak_residual(&form, &w[0], &w[1], tests, seed)?;
        worst = worst.max(r);
        csv.push_str(&format!("{},{r}\n", w[1].t));
    }
    write_text(&dir.join("residual.csv"), &csv)?;
    let _ = writeln!(out, "pairs={} tests={tests} seed={seed} max_residual={worst:e}", snaps.len() - 1);
    Ok(0)
}

fn cmd_export(dir: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = load_run_config(dir)?;
    let sim = Simulation::new(&c)?;
    let paths = list_snapshots(dir)?;
    if paths.is_empty() {
        return Err(CliError::invalid(format!("{}: no snapshots", dir.display())));
    }
    let interp: InterpolationReport;
    let records: Vec<EnergyRecord>;
    match &sim {
        Simulation::Spectral { solver, .. } => {
            let snaps = read_spectral_snapshots(dir, &c)?;
            records = snaps.iter().map(|s| solver.record(s)).collect::<Result<_, _>>()?;
            let f = solver.fourier();
            let grads = snaps.iter().map(|s| Ok((s.t, f.gradient(&s.d).map_err(SolverError::from)?))).collect::<Result<Vec<_>, CliError>>()?;
            let refs: Vec<_> = grads.iter().map(|(t, g)| (*t, g)).collect();
            interp = interpolation_check(&refs)?;
            let e0 = records[0].total(c.model.lambda);
            let ceiling = e0 + inequality_constant(&c)? * records[0].fnorm.powi(2) * c.scheme.t_end;
            let apriori = apriori_tracker(f, &c.model, solver.potential(), &snaps, ceiling)?;
            write_text(&dir.join("apriori.csv"), &apriori.to_csv())?;
            let _ = writeln!(out, "apriori: ceiling={ceiling:e} within={}", apriori.all_within());
        }
        Simulation::Mac { solver, .. } => {
            let grid = solver.grid();
            let mut recs = Vec::with_capacity(paths.len());
            let mut samples = Vec::with_capacity(paths.len());
            for p in &paths {
                let s = Snapshot::read(p, layout_of(&c))?.to_mac::<f64>(grid, c.scheme.dt)?;
                recs.push(solver.record(&s));
                samples.push((s.t, grid.director_gradient_magnitudes(&s.d)));
            }
            records = recs;
            interp = interpolation_check_weighted(&samples, &vec![grid.cell_area(); grid.num_cells()]);
        }
    }
    write_text(&dir.join("export.csv"), &energy_csv(&records))?;
    let mut csv = String::from("t,lhs,rhs,ratio\n");
    for r in &interp.rows {
        csv.push_str(&format!("{},{},{},{}\n", r.t, r.lhs, r.rhs, r.ratio));
    }
    write_text(&dir.join("interpolation.csv"), &csv)?;
    let _ = writeln!(out, "snapshots={} interpolation_c1={:e}", records.len(), interp.c1);
    Ok(0)
}

/// One row of a study CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub value: f64,
    pub steps: u64,
    pub final_energy: f64,
    pub max_residual: f64,
    /// `∫ (1/M)‖∇u‖_r^r dt` by the right-endpoint rule.
    pub reg_integral: f64,
    pub max_div: f64,
    pub aborted: bool,
}

pub const STUDY_CSV_HEADER: &str = "value,steps,final_energy,max_residual,reg_integral,max_div,aborted";

fn default_values(c: &RunConfig, vary: Vary) -> Vec<f64> {
    match vary {
        Vary::N => [c.scheme.n / 4, c.scheme.n / 2, c.scheme.n].iter().filter(|&&v| v >= 2).map(|&v| v as f64).collect(),
        Vary::M => vec![8.0, 16.0, 32.0],
        Vary::Dt => vec![c.scheme.dt, c.scheme.dt / 2.0, c.scheme.dt / 4.0],
    }
}

fn variant(c: &RunConfig, vary: Vary, value: f64) -> Result<RunConfig, CliError> {
    let mut v = c.clone();
    let int = || -> Result<usize, CliError> {
        if value >= 1.0 && value.fract() == 0.0 {
            Ok(value as usize)
        } else {
            Err(CliError::invalid(format!("--values: {value} is not a positive integer")))
        }
    };
    let tag = match vary {
        Vary::N => {
            v.scheme.n = int()?;
            v.scheme.m = v.scheme.m.min(v.scheme.n);
            format!("N_{}", v.scheme.n)
        }
        Vary::M => {
            v.scheme.m = int()?;
            format!("M_{}", v.scheme.m)
        }
        Vary::Dt => {
            if !(value > 0.0) {
                return Err(CliError::invalid(format!("--values: dt = {value} must be positive")));
            }
            v.scheme.dt = value;
            format!("dt_{value:e}")
        }
    };
    v.output_dir = c.output_dir.join(format!("vary_{tag}"));
    v.snapshot_every = 0;
    let errs = v.validate();
    if !errs.is_empty() {
        return Err(CliError::Validation(errs.into_iter().map(|e| format!("{tag}: {e}")).collect()));
    }
    Ok(v)
}

fn study_row(value: f64, c: &RunConfig, hist: &[EnergyRecord], aborted: bool) -> StudyRow {
    let mut row = StudyRow {
        value,
        steps: hist.len().saturating_sub(1) as u64,
        final_energy: 0.0,
        max_residual: f64::NEG_INFINITY,
        reg_integral: 0.0,
        max_div: 0.0,
        aborted,
    };
    row.final_energy = hist.last().map(|r| r.total(c.model.lambda)).unwrap_or(f64::NAN);
    for w in hist.windows(2) {
        let dt = w[1].t - w[0].t;
        row.max_residual = row.max_residual.max(energy_law_residual(&w[0], &w[1], dt, &c.model));
        row.reg_integral += w[1].reg_diss * dt;
    }
    row.max_div = hist.iter().fold(0.0, |m, r| m.max(r.divmax));
    row
}

fn cmd_study(config: &Path, vary: Vary, values: Option<Vec<f64>>, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = load_config(config)?;
    if vary != Vary::Dt && c.backend != Backend::Spectral {
        return Err(CliError::invalid("varying N or M requires the spectral backend"));
    }
    let values = values.unwrap_or_else(|| default_values(&c, vary));
    if values.is_empty() {
        return Err(CliError::invalid("--values is empty"));
    }
    let variants = values.iter().map(|&v| variant(&c, vary, v)).collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(&c.output_dir).map_err(|e| io_err(&c.output_dir, e))?;
    let outcomes: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = variants.iter().map(|v| s.spawn(move || execute_run(v))).collect();
        handles.into_iter().map(|h| h.join().expect("study variant panicked")).collect()
    });
    let mut csv = format!("{STUDY_CSV_HEADER}\n");
    let mut numerical = None;
    for ((value, v), o) in values.iter().zip(&variants).zip(outcomes) {
        let o = o?;
        if let Some(e) = &o.abort {
            numerical.get_or_insert_with(|| format!("variant {}: {e}", v.output_dir.display()));
        }
        let r = study_row(*value, v, &o.history, o.abort.is_some());
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.value, r.steps, r.final_energy, r.max_residual, r.reg_integral, r.max_div, r.aborted as u8
        ));
        let _ = writeln!(out, "value={} steps={} reg_integral={:e} max_residual={:e}", r.value, r.steps, r.reg_integral, r.max_residual);
    }
    let name = match vary {
        Vary::N => "study_N.csv",
        Vary::M => "study_M.csv",
        Vary::Dt => "study_dt.csv",
    };
    write_text(&c.output_dir.join(name), &csv)?;
    match numerical {
        Some(m) => Err(CliError::Numerical(m)),
        None => Ok(0),
    }
}

/// Entry point of the binary.
pub fn main_from_env() -> i32 {
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    run_cli(std::env::args_os(), &mut out, &mut err)
}
