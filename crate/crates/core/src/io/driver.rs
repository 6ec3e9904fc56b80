use std::fs;
use std::path::{Path, PathBuf};

use super::config::{parse_config, Backend, ForcingSpec, InitialSpec, RunConfig};
use super::snapshot::{Layout, Snapshot};
use super::tables::{boundary_csv, energy_csv, parse_boundary_data};
use crate::bounded::{BoundaryHistory, BoundaryKind, BoundaryRegime, MacSolver, MacState, MacVelocity};
use crate::diagnostics::{default_inequality_constant, EnergyRecord};
use crate::error::SolverError;
use crate::fields::VectorField;
use crate::galerkin::{SolverState, SpectralSolver};
use crate::potential::Potential;
use crate::presets::mac_preset;

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 1.
    Validation(Vec<String>),
    /// Numerical abort: exit code 2.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Validation(m) => m.clone(),
            CliError::Numerical(m) => vec![m.clone()],
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if let SolverError::Invalid(m) = e {
            CliError::Validation(m)
        } else {
            CliError::Validation(vec![e.to_string()])
        }
    }
}

impl From<super::snapshot::SnapshotError> for CliError {
    fn from(e: super::snapshot::SnapshotError) -> Self {
        CliError::invalid(e.to_string())
    }
}

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::invalid(format!("{}: {e}", path.display()))
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Reads a config file and resolves its relative paths against the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = read_text(path)?;
    let mut c = parse_config(&text).map_err(CliError::Validation)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    c.resolve_paths(&base);
    Ok(c)
}

/// A solver paired with its current state.
pub enum Simulation {
    Spectral { solver: SpectralSolver<f64>, state: SolverState<f64> },
    Mac { solver: MacSolver<f64>, state: MacState<f64> },
}

impl Simulation {
    pub fn new(c: &RunConfig) -> Result<Self, CliError> {
        let errs = c.validate();
        if !errs.is_empty() {
            return Err(CliError::Validation(errs));
        }
        let potential = Potential::<f64>::new(c.potential.clone()).map_err(|e| CliError::invalid(e.to_string()))?;
        match c.backend {
            Backend::Spectral => {
                let grid = c.spectral_grid().map_err(CliError::invalid)?;
                let forcing = match &c.forcing {
                    ForcingSpec::Zero => None,
                    ForcingSpec::Modes(modes) => Some(VectorField::from_fn(&grid, |x| {
                        let mut f = [0.0; 3];
                        for m in modes {
                            let mut ph = 0.0;
                            for a in 0..grid.dim() {
                                ph += m.k[a] as f64 * std::f64::consts::TAU * x[a] / grid.length(a);
                            }
                            for (fc, ac) in f.iter_mut().zip(&m.amplitude) {
                                *fc += ac * ph.cos();
                            }
                        }
                        f
                    })),
                    ForcingSpec::File(p) => Some(Snapshot::read(p, Layout::Collocated)?.to_spectral::<f64>(&grid, c.scheme.dt)?.u),
                };
                let mut solver = SpectralSolver::new(&grid, c.model, c.scheme, potential, forcing)?;
                let state = match &c.initial {
                    InitialSpec::Preset { preset, amplitude } => {
                        let (u0, d0) = preset.build::<f64>(&grid, *amplitude, c.seed);
                        solver.initial_state(&u0, &d0)?
                    }
                    InitialSpec::File(p) => {
                        let s = Snapshot::read(p, Layout::Collocated)?.to_spectral::<f64>(&grid, c.scheme.dt)?;
                        solver.resume(&s)?;
                        s
                    }
                };
                Ok(Simulation::Spectral { solver, state })
            }
            Backend::Mac => {
                let grid = c.mac_grid().map_err(CliError::invalid)?;
                let periodic = grid.is_periodic();
                let regime = match c.boundary {
                    BoundaryKind::Dirichlet => {
                        let path = c.h_file.as_ref().ok_or_else(|| CliError::invalid("boundary.h_file is required"))?;
                        let h = parse_boundary_data(&read_text(path)?).map_err(|e| CliError::invalid(format!("boundary.h_file: {e}")))?;
                        BoundaryRegime::dirichlet(h)
                    }
                    _ => c.regime_kind(),
                };
                let forcing = match &c.forcing {
                    ForcingSpec::Zero => None,
                    ForcingSpec::Modes(modes) => Some(MacVelocity::from_fn(&grid, |x| {
                        let mut f = [0.0; 2];
                        for m in modes {
                            let ph = std::f64::consts::TAU * (m.k[0] as f64 * x[0] / grid.lx() + m.k[1] as f64 * x[1] / grid.ly());
                            f[0] += m.amplitude[0] * ph.cos();
                            f[1] += m.amplitude[1] * ph.cos();
                        }
                        f
                    })),
                    ForcingSpec::File(p) => Some(Snapshot::read(p, Layout::Staggered { periodic })?.to_mac::<f64>(&grid, c.scheme.dt)?.u),
                };
                let mut solver = MacSolver::new(grid.clone(), c.model, potential, regime, c.scheme.dt, c.scheme.stabilization, forcing)?;
                let state = match &c.initial {
                    InitialSpec::Preset { preset, amplitude } => {
                        let (u, d) = mac_preset::<f64>(*preset, &grid, *amplitude, c.seed);
                        solver.start(0.0, u, d)?
                    }
                    InitialSpec::File(p) => {
                        let s = Snapshot::read(p, Layout::Staggered { periodic })?.to_mac::<f64>(&grid, c.scheme.dt)?;
                        solver.resume(&s)?;
                        s
                    }
                };
                Ok(Simulation::Mac { solver, state })
            }
        }
    }

    pub fn advance(&mut self) -> Result<EnergyRecord, SolverError> {
        match self {
            Simulation::Spectral { solver, state } => solver.advance(state),
            Simulation::Mac { solver, state } => solver.advance(state),
        }
    }

    pub fn history(&self) -> &[EnergyRecord] {
        match self {
            Simulation::Spectral { solver, .. } => solver.history(),
            Simulation::Mac { solver, .. } => solver.history(),
        }
    }

    pub fn boundary_history(&self) -> Option<&BoundaryHistory> {
        match self {
            Simulation::Mac { solver, .. } if solver.regime().kind == BoundaryKind::Dirichlet => Some(solver.boundary_history()),
            _ => None,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Simulation::Spectral { state, .. } => state.t,
            Simulation::Mac { state, .. } => state.t,
        }
    }

    pub fn step_index(&self) -> u64 {
        match self {
            Simulation::Spectral { state, .. } => state.step_index,
            Simulation::Mac { state, .. } => state.step_index,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        match self {
            Simulation::Spectral { state, .. } => Snapshot::from_spectral(state),
            Simulation::Mac { solver, state } => Snapshot::from_mac(solver.grid(), state),
        }
    }
}

/// Constant of the stepwise energy inequality for the configured domain.
pub fn inequality_constant(c: &RunConfig) -> Result<f64, CliError> {
    let poincare = match c.backend {
        Backend::Spectral => {
            let g = c.spectral_grid().map_err(CliError::invalid)?;
            (0..g.dim()).map(|a| g.length(a)).fold(0.0, f64::max) / std::f64::consts::TAU
        }
        Backend::Mac => c.mac_grid().map_err(CliError::invalid)?.poincare_constant(),
    };
    Ok(default_inequality_constant(poincare, c.model.mu))
}

pub fn layout_of(c: &RunConfig) -> Layout {
    match c.backend {
        Backend::Spectral => Layout::Collocated,
        Backend::Mac => Layout::Staggered { periodic: c.boundary == BoundaryKind::Periodic },
    }
}

pub const CONFIG_FILE: &str = "config.txt";
pub const ENERGY_FILE: &str = "energy.csv";
pub const BOUNDARY_FILE: &str = "boundary.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Outcome of a run; `abort` holds the numerical failure if one stopped it.
pub struct RunOutcome {
    pub dir: PathBuf,
    pub steps: u64,
    pub history: Vec<EnergyRecord>,
    pub abort: Option<SolverError>,
}

/// Runs `c` to `scheme.t_end`, writing the config, energy CSV, snapshots
/// and (for Dirichlet runs) the boundary records into `c.output_dir`.
pub fn execute_run(c: &RunConfig) -> Result<RunOutcome, CliError> {
    let mut sim = Simulation::new(c)?;
    let dir = c.output_dir.clone();
    let snaps = dir.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snaps).map_err(|e| io_err(&snaps, e))?;
    if let Ok(entries) = fs::read_dir(&snaps) {
        for e in entries.flatten() {
            if e.path().extension().is_some_and(|x| x == "bin") {
                fs::remove_file(e.path()).map_err(|err| io_err(&e.path(), err))?;
            }
        }
    }
    write_text(&dir.join(CONFIG_FILE), &c.to_text())?;
    let write_snap = |sim: &Simulation| -> Result<(), CliError> {
        let p = snaps.join(format!("snap_{:08}.bin", sim.step_index()));
        sim.snapshot().write(&p)?;
        Ok(())
    };
    write_snap(&sim)?;
    let total = c.scheme.num_steps();
    let mut abort = None;
    while sim.step_index() < total {
        if let Err(e) = sim.advance() {
            abort = Some(e);
            break;
        }
        let n = sim.step_index();
        if n == total || (c.snapshot_every > 0 && n % c.snapshot_every == 0) {
            write_snap(&sim)?;
        }
    }
    if abort.is_some() && sim.step_index() > 0 {
        write_snap(&sim)?;
    }
    write_text(&dir.join(ENERGY_FILE), &energy_csv(sim.history()))?;
    if let Some(b) = sim.boundary_history() {
        write_text(&dir.join(BOUNDARY_FILE), &boundary_csv(b))?;
    }
    Ok(RunOutcome { dir, steps: sim.step_index(), history: sim.history().to_vec(), abort })
}

/// Snapshot files of a run directory in step order.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let snaps = dir.join(SNAPSHOT_DIR);
    let mut out: Vec<PathBuf> = fs::read_dir(&snaps)
        .map_err(|e| io_err(&snaps, e))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    out.sort();
    Ok(out)
}

/// The configuration stored in a run directory.
pub fn load_run_config(dir: &Path) -> Result<RunConfig, CliError> {
    let text = read_text(&dir.join(CONFIG_FILE))?;
    parse_config(&text).map_err(CliError::Validation)
}
