//! Time integration: the staggered leapfrog scheme with implicit
//! constitutive update, and a classical RK4 reference integrator for the
//! semi-discrete system.

use crate::constitutive::{newton_electric_update, NewtonReport, NewtonSettings};
use crate::error::{Error, Result};
use crate::field::{FieldState, MaterialField};
use crate::mesh::Mesh;
use crate::operator::{wall_trace_energy, DgProblem, FluxMode, SourceSample};

/// `safety * min(h_min / (4 c_inv C_eps_mu), 1/4)`.
pub fn cfl_max_dt(mesh: &Mesh, materials: &MaterialField, c_inv: f64, safety: f64) -> Result<f64> {
    if !(c_inv > 0.0) || !(safety > 0.0) || safety > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "need c_inv > 0 and safety in (0, 1], got {c_inv}, {safety}"
        )));
    }
    Ok(safety * (mesh.h_min() / (4.0 * c_inv * materials.c_eps_mu())).min(0.25))
}

/// Default inverse-inequality constant `(k + 1)^2`.
pub fn default_c_inv(k: usize) -> f64 {
    ((k + 1) * (k + 1)) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPlan {
    pub dt: f64,
    pub n_steps: usize,
    pub t_final: f64,
}

impl StepPlan {
    /// Largest uniform step not exceeding `dt_max` that lands exactly on `t_final`.
    pub fn new(t_final: f64, dt_max: f64) -> Result<Self> {
        if !(t_final >= 0.0) || !(dt_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need t_final >= 0 and dt > 0, got {t_final}, {dt_max}"
            )));
        }
        if t_final == 0.0 {
            return Ok(Self {
                dt: dt_max,
                n_steps: 0,
                t_final,
            });
        }
        let raw = t_final / dt_max;
        // tolerate representation error when T is an integer multiple of dt
        let n = if (raw - raw.round()).abs() < 1e-9 * raw {
            raw.round()
        } else {
            raw.ceil()
        } as usize;
        let n = n.max(1);
        Ok(Self {
            dt: t_final / n as f64,
            n_steps: n,
            t_final,
        })
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t_final * step as f64 / self.n_steps.max(1) as f64
    }
}

/// How `H^{1/2}` is obtained from the initial data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HalfStepInit {
    /// `H^0 + dt/2 * dH/dt(0)`.
    Taylor,
    /// Projection of the exact `H(dt/2)`.
    Analytic,
}

/// `H^0 + dt/2 * mu^{-1} rz(E^0)`.
pub fn init_half_step_h(problem: &DgProblem, state: &FieldState, dt: f64) -> Vec<f64> {
    let mut rz = problem.residual(state, FluxMode::SemiDiscrete, None).rz;
    problem.apply_inverse_mu(&mut rz);
    state
        .hz
        .iter()
        .zip(&rz)
        .map(|(h, r)| h + 0.5 * dt * r)
        .collect()
}

/// One leapfrog step from `(E^n, H^{n+1/2})` to `(E^{n+1}, H^{n+3/2})`;
/// `source` holds `J^{n+1/2}`.
pub fn step_leapfrog(
    problem: &DgProblem,
    state: &FieldState,
    dt: f64,
    settings: NewtonSettings,
    source: Option<&SourceSample>,
) -> Result<(FieldState, NewtonReport)> {
    let g0 = problem.residual(state, FluxMode::FullyDiscretePair, source);
    let (ex, ey, report) = newton_electric_update(
        problem,
        (&state.ex, &state.ey),
        (&g0.rx, &g0.ry),
        dt,
        settings,
    )?;
    let mut next = FieldState::from_parts(&problem.space, ex, ey, state.hz.clone(), state.t + dt)?;
    let mut rz = problem
        .residual(&next, FluxMode::FullyDiscretePair, None)
        .rz;
    problem.apply_inverse_mu(&mut rz);
    next.hz.iter_mut().zip(&rz).for_each(|(h, r)| *h += dt * r);
    next.ensure_finite("leapfrog state")?;
    Ok((next, report))
}

/// Exact algebraic inverse of [`step_leapfrog`] for `c0 = 0` and `J = 0`.
pub fn step_leapfrog_backward(
    problem: &DgProblem,
    state: &FieldState,
    dt: f64,
    settings: NewtonSettings,
) -> Result<FieldState> {
    let mut rz = problem
        .residual(state, FluxMode::FullyDiscretePair, None)
        .rz;
    problem.apply_inverse_mu(&mut rz);
    let hz: Vec<f64> = state.hz.iter().zip(&rz).map(|(h, r)| h - dt * r).collect();
    let mid = FieldState::from_parts(
        &problem.space,
        state.ex.clone(),
        state.ey.clone(),
        hz,
        state.t,
    )?;
    let g0 = problem.residual(&mid, FluxMode::FullyDiscretePair, None);
    let (ex, ey, _) =
        newton_electric_update(problem, (&mid.ex, &mid.ey), (&g0.rx, &g0.ry), -dt, settings)?;
    FieldState::from_parts(&problem.space, ex, ey, mid.hz, state.t - dt)
}

/// `a + s * b` componentwise.
pub fn axpy(a: &FieldState, s: f64, b: &FieldState) -> FieldState {
    let f = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| u + s * v).collect::<Vec<_>>();
    let mut out = a.clone();
    out.ex = f(&a.ex, &b.ex);
    out.ey = f(&a.ey, &b.ey);
    out.hz = f(&a.hz, &b.hz);
    out
}

/// Semi-discrete state augmented with the boundary accumulator
/// `2 c0 int_0^t (int_bottom (Ex+)^2 + int_left (Ey+)^2)`.
#[derive(Clone, Debug)]
pub struct AugmentedState {
    pub fields: FieldState,
    pub accumulator: f64,
}

/// Right-hand side of the augmented semi-discrete system at time `fields.t`.
pub fn augmented_rhs<J>(
    problem: &DgProblem,
    state: &FieldState,
    source: &J,
) -> Result<(FieldState, f64)>
where
    J: Fn(f64) -> Option<SourceSample>,
{
    let src = source(state.t);
    let rate = problem.semidiscrete_rhs(state, src.as_ref())?;
    let acc = if problem.c0 > 0.0 {
        2.0 * problem.c0 * wall_trace_energy(&problem.space, state)
    } else {
        0.0
    };
    Ok((rate, acc))
}

/// One classical RK4 step of the augmented system.
pub fn step_rk4<J>(
    problem: &DgProblem,
    y: &AugmentedState,
    dt: f64,
    source: &J,
) -> Result<AugmentedState>
where
    J: Fn(f64) -> Option<SourceSample>,
{
    let t = y.fields.t;
    let stage = |base: &FieldState, s: f64, k: &FieldState, tt: f64| {
        let mut z = axpy(base, s, k);
        z.t = tt;
        z
    };
    let (k1, a1) = augmented_rhs(problem, &y.fields, source)?;
    let (k2, a2) = augmented_rhs(
        problem,
        &stage(&y.fields, 0.5 * dt, &k1, t + 0.5 * dt),
        source,
    )?;
    let (k3, a3) = augmented_rhs(
        problem,
        &stage(&y.fields, 0.5 * dt, &k2, t + 0.5 * dt),
        source,
    )?;
    let (k4, a4) = augmented_rhs(problem, &stage(&y.fields, dt, &k3, t + dt), source)?;
    let mut next = y.fields.clone();
    let w = dt / 6.0;
    let combine = |dst: &mut [f64], k: [&[f64]; 4]| {
        for (i, d) in dst.iter_mut().enumerate() {
            *d += w * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    };
    combine(&mut next.ex, [&k1.ex, &k2.ex, &k3.ex, &k4.ex]);
    combine(&mut next.ey, [&k1.ey, &k2.ey, &k3.ey, &k4.ey]);
    combine(&mut next.hz, [&k1.hz, &k2.hz, &k3.hz, &k4.hz]);
    next.t = t + dt;
    next.ensure_finite("rk4 state")?;
    Ok(AugmentedState {
        fields: next,
        accumulator: y.accumulator + w * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
    })
}
