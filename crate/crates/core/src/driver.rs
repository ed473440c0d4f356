//! Run orchestration shared by the command line and the test suites:
//! set up a problem from a scenario, integrate to the final time while
//! tracking energies, and run refinement studies.

use crate::constitutive::NewtonSettings;
use crate::diagnostics::{
    convergence_rates, energy_semidiscrete, l2_error_vs_reference, BoundaryAccumulator,
    EnergyReport, FieldErrors,
};
use crate::error::{Error, Result};
use crate::field::{FieldState, MaterialField};
use crate::mesh::Mesh;
use crate::operator::{wall_trace_energy, DgProblem, SourceSample};
use crate::projection::{project_2d, Projector2d};
use crate::scenario::Scenario;
use crate::space::DgSpace;
use crate::timestep::{
    cfl_max_dt, default_c_inv, init_half_step_h, step_leapfrog, step_rk4, AugmentedState,
    HalfStepInit, StepPlan,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Leapfrog,
    Rk4Reference,
}

#[derive(Clone, Debug)]
pub struct SimulationSetup {
    pub scenario: Scenario,
    pub nx: usize,
    pub ny: usize,
    pub order: usize,
    pub quadrature_nodes: Option<usize>,
    pub c0: f64,
    /// Explicit step; overrides the CFL-based choice.
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    pub c_inv: Option<f64>,
    pub t_final: f64,
    pub newton: NewtonSettings,
    pub integrator: Integrator,
    pub h_half: HalfStepInit,
}

impl SimulationSetup {
    pub fn new(scenario: Scenario, n: usize, order: usize, t_final: f64) -> Self {
        Self {
            scenario,
            nx: n,
            ny: n,
            order,
            quadrature_nodes: None,
            c0: 0.5,
            dt: None,
            cfl_safety: 0.9,
            c_inv: None,
            t_final,
            newton: NewtonSettings::default(),
            integrator: Integrator::Leapfrog,
            h_half: HalfStepInit::Taylor,
        }
    }
}

/// Initial data by the projections `Ex = Pi1 Ex0`, `Ey = Pi2 Ey0`, `Hz = Pi3 Hz0`.
pub fn project_fields<F>(space: &DgSpace, f: F, t: f64) -> FieldState
where
    F: Fn(f64, f64) -> [f64; 3] + Sync,
{
    let ex = project_2d(Projector2d::Pi1, |x, y| f(x, y)[0], space);
    let ey = project_2d(Projector2d::Pi2, |x, y| f(x, y)[1], space);
    let hz = project_2d(Projector2d::Pi3, |x, y| f(x, y)[2], space);
    FieldState::from_parts(space, ex, ey, hz, t).expect("projection shapes match the space")
}

/// A running simulation. For the leapfrog integrator `state` holds
/// `(E^n, H^{n+1/2})` with `state.t = t^n`.
pub struct Simulation {
    pub problem: DgProblem,
    pub scenario: Scenario,
    pub plan: StepPlan,
    pub integrator: Integrator,
    pub newton: NewtonSettings,
    pub state: FieldState,
    pub step: usize,
    /// `H^{n-1/2}` of the previous leapfrog step.
    pub h_previous: Option<Vec<f64>>,
    accumulator: f64,
    trapezoid: BoundaryAccumulator,
    /// Largest Newton iteration count of any element in any step.
    pub newton_max_iterations: usize,
    /// `||J^{n+1/2}||^2` weighted by `1 / (eps0 (1 + chi1))` for each taken step.
    pub source_norms_sq: Vec<f64>,
}

impl Simulation {
    pub fn new(setup: &SimulationSetup) -> Result<Self> {
        let (r, s, p, q) = setup.scenario.domain;
        let mesh = Mesh::uniform(r, s, p, q, setup.nx, setup.ny)?;
        let space = match setup.quadrature_nodes {
            Some(m) => DgSpace::new(mesh, crate::basis::Basis1D::new(setup.order, m)?),
            None => DgSpace::with_degree(mesh, setup.order)?,
        };
        let materials = MaterialField::sample(&setup.scenario.materials, &space)?;
        let c_inv = setup.c_inv.unwrap_or_else(|| default_c_inv(setup.order));
        let dt_max = match setup.dt {
            Some(dt) => dt,
            None => cfl_max_dt(&space.mesh, &materials, c_inv, setup.cfl_safety)?,
        };
        let plan = StepPlan::new(setup.t_final, dt_max)?;
        let problem = DgProblem::new(space, materials, setup.c0)?;
        let init = setup.scenario.initial.clone();
        let mut state = project_fields(&problem.space, |x, y| init(x, y, 0.0), 0.0);
        if setup.integrator == Integrator::Leapfrog {
            state.hz = match (setup.h_half, &setup.scenario.exact) {
                (HalfStepInit::Analytic, Some(exact)) => {
                    let half = 0.5 * plan.dt;
                    project_2d(
                        Projector2d::Pi3,
                        |x, y| exact(x, y, half)[2],
                        &problem.space,
                    )
                }
                (HalfStepInit::Analytic, None) => {
                    return Err(Error::InvalidArgument(format!(
                        "scenario `{}` has no exact solution for an analytic half-step start",
                        setup.scenario.name
                    )))
                }
                (HalfStepInit::Taylor, _) => init_half_step_h(&problem, &state, plan.dt),
            };
        }
        let mut sim = Self {
            problem,
            scenario: setup.scenario.clone(),
            plan,
            integrator: setup.integrator,
            newton: setup.newton,
            state,
            step: 0,
            h_previous: None,
            accumulator: 0.0,
            trapezoid: BoundaryAccumulator::default(),
            newton_max_iterations: 0,
            source_norms_sq: Vec::new(),
        };
        if sim.integrator == Integrator::Leapfrog {
            let rate = sim.boundary_rate();
            sim.trapezoid.advance(0.0, rate);
        }
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.plan.n_steps
    }

    fn boundary_rate(&self) -> f64 {
        if self.problem.c0 == 0.0 {
            return 0.0;
        }
        2.0 * self.problem.c0 * wall_trace_energy(&self.problem.space, &self.state)
    }

    fn source_sample(&self, t: f64) -> Option<SourceSample> {
        self.scenario
            .source
            .as_ref()
            .map(|j| SourceSample::sample(&self.problem.space, |x, y| j(x, y, t)))
    }

    /// Energy of the current state. For the leapfrog integrator the
    /// accumulator is the trapezoidal integral over the electric levels.
    pub fn energy(&self) -> EnergyReport {
        let acc = match self.integrator {
            Integrator::Leapfrog => self.trapezoid.value,
            Integrator::Rk4Reference => self.accumulator,
        };
        energy_semidiscrete(&self.problem, &self.state, acc)
    }

    /// The energy the integrator is designed to control: the fully
    /// discrete total for leapfrog, the accumulator-augmented
    /// semi-discrete total for RK4.
    pub fn monitored_energy(&self) -> f64 {
        let e = self.energy();
        match self.integrator {
            Integrator::Leapfrog => e.total_fullydiscrete,
            Integrator::Rk4Reference => e.total_semidiscrete,
        }
    }

    pub fn advance(&mut self) -> Result<()> {
        let dt = self.plan.dt;
        let step = self.step;
        match self.integrator {
            Integrator::Leapfrog => {
                let t_half = self.plan.time(step) + 0.5 * dt;
                let src = self.source_sample(t_half);
                if let Some(s) = &src {
                    let inv: Vec<f64> = self
                        .problem
                        .eps_linear_all()
                        .iter()
                        .map(|e| 1.0 / e)
                        .collect();
                    self.source_norms_sq
                        .push(s.weighted_norm_sq(&inv, &self.problem.space));
                } else {
                    self.source_norms_sq.push(0.0);
                }
                let (mut next, report) =
                    step_leapfrog(&self.problem, &self.state, dt, self.newton, src.as_ref())
                        .map_err(|e| e.at_step(step))?;
                next.t = self.plan.time(step + 1);
                self.newton_max_iterations = self.newton_max_iterations.max(report.max_iterations);
                self.h_previous = Some(std::mem::replace(&mut self.state, next).hz);
                let rate = self.boundary_rate();
                self.trapezoid.advance(self.state.t, rate);
            }
            Integrator::Rk4Reference => {
                let space = &self.problem.space;
                let source = |t: f64| {
                    self.scenario
                        .source
                        .as_ref()
                        .map(|j| SourceSample::sample(space, |x, y| j(x, y, t)))
                };
                let y = AugmentedState {
                    fields: self.state.clone(),
                    accumulator: self.accumulator,
                };
                let next = step_rk4(&self.problem, &y, dt, &source).map_err(|e| e.at_step(step))?;
                self.state = next.fields;
                self.state.t = self.plan.time(step + 1);
                self.accumulator = next.accumulator;
            }
        }
        self.step += 1;
        Ok(())
    }

    /// Errors against the scenario's exact solution, with each component
    /// compared at the time level it represents.
    pub fn errors(&self) -> Result<Option<FieldErrors>> {
        let Some(exact) = self.scenario.exact.clone() else {
            return Ok(None);
        };
        let t_e = self.state.t;
        let t_h = match self.integrator {
            Integrator::Leapfrog => t_e + 0.5 * self.plan.dt,
            Integrator::Rk4Reference => t_e,
        };
        let e = l2_error_vs_reference(
            &self.problem,
            &self.state,
            |x, y| {
                let v = exact(x, y, t_e);
                [v[0], v[1]]
            },
            |x, y| exact(x, y, t_h)[2],
        )?;
        Ok(Some(e))
    }

    /// Fields at a common time level: for leapfrog `H` is averaged over the
    /// two neighbouring half steps.
    pub fn synchronized_state(&self) -> FieldState {
        let mut s = self.state.clone();
        if let (Integrator::Leapfrog, Some(prev)) = (self.integrator, &self.h_previous) {
            s.hz = s.hz.iter().zip(prev).map(|(a, b)| 0.5 * (a + b)).collect();
        }
        s
    }
}

/// Summary of a completed run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_energy: f64,
    pub steps: usize,
    pub dt: f64,
    pub newton_max_iterations: usize,
    pub errors: Option<FieldErrors>,
    /// Run stopped early because the energy exceeded `abort_ratio` times its initial value.
    pub aborted: bool,
}

impl RunSummary {
    pub fn ratio(&self) -> f64 {
        if self.initial_energy > 0.0 {
            self.final_energy / self.initial_energy
        } else if self.final_energy == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

/// Integrates to the final time, calling `observe` on the initial state and
/// after every step. Stops early when the monitored energy grows beyond
/// `abort_ratio` times its initial value.
pub fn run_to_end<F>(
    sim: &mut Simulation,
    abort_ratio: Option<f64>,
    mut observe: F,
) -> Result<RunSummary>
where
    F: FnMut(&Simulation) -> Result<()>,
{
    observe(sim)?;
    let e0 = sim.monitored_energy();
    let mut max_e = e0;
    let mut last = e0;
    let mut aborted = false;
    while !sim.is_done() {
        sim.advance()?;
        observe(sim)?;
        last = sim.monitored_energy();
        if !last.is_finite() {
            return Err(Error::NonFinite {
                what: format!("energy at step {}", sim.step),
            }
            .at_step(sim.step));
        }
        max_e = max_e.max(last);
        if let Some(r) = abort_ratio {
            if e0 > 0.0 && last > r * e0 {
                aborted = true;
                break;
            }
        }
    }
    Ok(RunSummary {
        initial_energy: e0,
        final_energy: last,
        max_energy: max_e,
        steps: sim.step,
        dt: sim.plan.dt,
        newton_max_iterations: sim.newton_max_iterations,
        errors: sim.errors()?,
        aborted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceAxis {
    Space,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    /// Mesh width (space) or time step (time).
    pub size: f64,
    pub errors: FieldErrors,
    /// Observed order of the summed error against the previous level.
    pub order: Option<f64>,
    pub newton_max_iterations: usize,
}

/// Time-axis errors are measured against a run on the same mesh with this
/// many times smaller step than the finest level, so the spatial error
/// cancels.
pub const TIME_REFERENCE_REFINEMENT: usize = 4;

/// Refinement ladder. Space: the mesh is halved per level with the time
/// step scaled by the same factor, errors against the exact solution.
/// Time: the time step is halved on a fixed mesh, errors against a
/// finer-step reference run (see [`TIME_REFERENCE_REFINEMENT`]).
pub fn convergence_study(
    base: &SimulationSetup,
    axis: ConvergenceAxis,
    levels: usize,
) -> Result<Vec<ConvergenceRow>> {
    if levels < 2 {
        return Err(Error::InvalidArgument(
            "a convergence study needs at least two levels".into(),
        ));
    }
    if base.scenario.exact.is_none() {
        return Err(Error::InvalidArgument(format!(
            "scenario `{}` has no exact solution",
            base.scenario.name
        )));
    }
    let dt0 = match base.dt {
        Some(dt) => dt,
        None => Simulation::new(base)?.plan.dt,
    };
    let mut runs = Vec::with_capacity(levels);
    for level in 0..levels {
        let factor = (1usize << level) as f64;
        let mut setup = base.clone();
        if axis == ConvergenceAxis::Space {
            setup.nx = base.nx << level;
            setup.ny = base.ny << level;
        }
        setup.dt = Some(dt0 / factor);
        let mut sim = Simulation::new(&setup)?;
        let summary = run_to_end(&mut sim, None, |_| Ok(()))?;
        runs.push((sim, summary));
    }
    let reference = match axis {
        ConvergenceAxis::Space => None,
        ConvergenceAxis::Time => {
            let mut setup = base.clone();
            let finest = runs.last().map_or(dt0, |(sim, _)| sim.plan.dt);
            setup.dt = Some(finest / TIME_REFERENCE_REFINEMENT as f64);
            let mut sim = Simulation::new(&setup)?;
            run_to_end(&mut sim, None, |_| Ok(()))?;
            Some(sim.synchronized_state())
        }
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for (level, (sim, summary)) in runs.iter().enumerate() {
        let (size, errors) = match &reference {
            None => (
                sim.problem.space.mesh.h_max(),
                summary.errors.expect("scenario has an exact solution"),
            ),
            Some(r) => (sim.plan.dt, state_difference(&sim.synchronized_state(), r)),
        };
        let order = rows
            .last()
            .map(|prev| {
                convergence_rates(&[(prev.size, prev.errors.sum()), (size, errors.sum())])
                    .map(|r| r[0])
            })
            .transpose()?;
        rows.push(ConvergenceRow {
            level,
            size,
            errors,
            order,
            newton_max_iterations: summary.newton_max_iterations,
        });
    }
    Ok(rows)
}

/// Componentwise L2 distance of two states on the same space (the basis
/// is orthonormal, so this is the coefficient distance).
pub fn state_difference(a: &FieldState, b: &FieldState) -> FieldErrors {
    let d = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };
    FieldErrors {
        ex: d(&a.ex, &b.ex),
        ey: d(&a.ey, &b.ey),
        hz: d(&a.hz, &b.hz),
    }
}
