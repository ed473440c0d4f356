//! Command implementations behind the `kerr-dg` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::RunConfig;
use crate::diagnostics::{write_energy_row, ENERGY_HEADER};
use crate::driver::{
    convergence_study, run_to_end, ConvergenceAxis, ConvergenceRow, RunSummary, Simulation,
};
use crate::error::{Error, Result};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad arguments, configuration or I/O.
    pub const USAGE: i32 = 1;
    /// Newton failure or a non-finite value.
    pub const NUMERICAL: i32 = 2;
    /// Energy growth beyond the stability bound without a source.
    pub const UNSTABLE: i32 = 3;
}

/// Stability bound on `E^n / E^0` for source-free runs.
pub const STABILITY_RATIO: f64 = 3.0;
/// Runs stop early once the energy exceeds this multiple of its initial value.
pub const ABORT_RATIO: f64 = 1e3;

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    /// No source and the energy exceeded [`STABILITY_RATIO`] times its initial value.
    pub unstable: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.unstable {
            exit::UNSTABLE
        } else {
            exit::OK
        }
    }
}

/// Exit code for a failed command.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::Step { source, .. } => error_exit_code(source),
        Error::NewtonDiverged { .. }
        | Error::NonFinite { .. }
        | Error::NotPositiveDefinite { .. } => exit::NUMERICAL,
        _ => exit::USAGE,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_snapshot(sim: &Simulation, cfg: &RunConfig) -> Result<()> {
    if let Some(path) = cfg.output.snapshot_path(sim.step) {
        let mut out = create(&path)?;
        sim.state.write_snapshot(&sim.problem.space, &mut out)?;
        out.flush()?;
    }
    Ok(())
}

/// Integrates `cfg` to its final time, writing the energy trace and
/// snapshots. Progress and the final energies go to `log`.
pub fn cmd_run<W: Write>(cfg: &RunConfig, log: &mut W) -> Result<RunOutcome> {
    let setup = cfg.setup()?;
    let mut sim = Simulation::new(&setup)?;
    writeln!(
        log,
        "{}: {}x{} cells, k = {}, dt = {:e}, {} steps",
        sim.scenario.name, cfg.nx, cfg.ny, cfg.order, sim.plan.dt, sim.plan.n_steps
    )?;
    let mut energy = cfg.output.energy.as_deref().map(create).transpose()?;
    if let Some(out) = energy.as_mut() {
        writeln!(out, "{ENERGY_HEADER}")?;
    }
    let stride = cfg.output.snapshot_stride;
    let summary = run_to_end(&mut sim, Some(ABORT_RATIO), |s| {
        if let Some(out) = energy.as_mut() {
            write_energy_row(out, s.step, s.time(), &s.energy())?;
        }
        if stride > 0 && s.step % stride == 0 {
            write_snapshot(s, cfg)?;
        }
        Ok(())
    })?;
    if let Some(mut out) = energy {
        out.flush()?;
    }
    if stride == 0 || sim.step % stride != 0 {
        write_snapshot(&sim, cfg)?;
    }
    let unstable = sim.scenario.source.is_none()
        && (summary.aborted || summary.max_energy > STABILITY_RATIO * summary.initial_energy);
    if let Some(e) = &summary.errors {
        writeln!(
            log,
            "L2 errors: Ex {:.6e}  Ey {:.6e}  Hz {:.6e}",
            e.ex, e.ey, e.hz
        )?;
    }
    if summary.aborted {
        writeln!(
            log,
            "aborted at step {}: energy grew beyond {ABORT_RATIO:e} E0",
            summary.steps
        )?;
    }
    writeln!(
        log,
        "E0 = {:.12e}  EN = {:.12e}  ratio = {:.12e}",
        summary.initial_energy,
        summary.final_energy,
        summary.ratio()
    )?;
    Ok(RunOutcome { summary, unstable })
}

pub const CONVERGENCE_HEADER: &str = "level,size,err_Ex,err_Ey,err_Hz,order";

pub fn write_convergence_table<W: Write>(
    out: &mut W,
    rows: &[ConvergenceRow],
) -> std::io::Result<()> {
    writeln!(out, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        let order = r.order.map(|o| format!("{o:.6}")).unwrap_or_default();
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{order}",
            r.level, r.size, r.errors.ex, r.errors.ey, r.errors.hz
        )?;
    }
    Ok(())
}

/// Refinement study; the table goes to `output.convergence` when set and
/// always to `log`.
pub fn cmd_converge<W: Write>(
    cfg: &RunConfig,
    axis: ConvergenceAxis,
    levels: usize,
    log: &mut W,
) -> Result<Vec<ConvergenceRow>> {
    let setup = cfg.setup()?;
    let rows = convergence_study(&setup, axis, levels)?;
    if let Some(path) = &cfg.output.convergence {
        let mut out = create(path)?;
        write_convergence_table(&mut out, &rows)?;
        out.flush()?;
    }
    write_convergence_table(log, &rows)?;
    let newton = rows
        .iter()
        .map(|r| r.newton_max_iterations)
        .max()
        .unwrap_or(0);
    if newton > 0 {
        writeln!(log, "max Newton iterations per element and step: {newton}")?;
    }
    Ok(rows)
}
