//! Energies, error norms and observed convergence orders.

use std::io::Write;

use rayon::prelude::*;

use crate::basis::eval_tensor;
use crate::error::{Error, Result};
use crate::field::{evaluate_volume, FieldState};
use crate::operator::DgProblem;
use crate::reduce::pairwise_sum;
use crate::space::DgSpace;

/// Energy components of one state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyReport {
    /// `||E||^2` weighted by `eps0 (1 + chi1)`.
    pub quadratic_e: f64,
    /// `||H||^2` weighted by `mu0`.
    pub quadratic_h: f64,
    /// `|| |E|^2 ||^2` weighted by `eps0 chi3`.
    pub quartic: f64,
    pub boundary_accumulator: f64,
    /// `quadratic_e + quadratic_h + 3/2 quartic + boundary_accumulator`.
    pub total_semidiscrete: f64,
    /// `quadratic_e + quadratic_h + quartic`.
    pub total_fullydiscrete: f64,
}

impl EnergyReport {
    pub fn from_parts(
        quadratic_e: f64,
        quadratic_h: f64,
        quartic: f64,
        boundary_accumulator: f64,
    ) -> Self {
        Self {
            quadratic_e,
            quadratic_h,
            quartic,
            boundary_accumulator,
            total_semidiscrete: quadratic_e + quadratic_h + 1.5 * quartic + boundary_accumulator,
            total_fullydiscrete: quadratic_e + quadratic_h + quartic,
        }
    }
}

/// `(||E||^2_{eps0(1+chi1)}, ||H||^2_{mu0}, || |E|^2 ||^2_{eps0 chi3})`.
pub fn energy_components(problem: &DgProblem, state: &FieldState) -> (f64, f64, f64) {
    let sp = &problem.space;
    let vol = evaluate_volume(state, sp);
    let nq = sp.n_quad();
    let parts: Vec<[f64; 3]> = (0..sp.n_cells())
        .into_par_iter()
        .map(|c| {
            let jac = sp.cell(c).jacobian();
            let (ex, ey, hz) = (vol.ex(c), vol.ey(c), vol.hz(c));
            let el = problem.eps_linear(c);
            let ec = problem.eps_cubic(c);
            let mu = problem.materials.cell_mu0(c);
            let mut acc = [0.0; 3];
            for q in 0..nq {
                let w = sp.quad_weight(q) * jac;
                let e2 = ex[q] * ex[q] + ey[q] * ey[q];
                acc[0] += w * el[q] * e2;
                acc[1] += w * mu[q] * hz[q] * hz[q];
                acc[2] += w * ec[q] * e2 * e2;
            }
            acc
        })
        .collect();
    let sum = |i: usize| pairwise_sum(&parts.iter().map(|p| p[i]).collect::<Vec<_>>());
    (sum(0), sum(1), sum(2))
}

/// Semi-discrete energy with the given boundary accumulator.
pub fn energy_semidiscrete(
    problem: &DgProblem,
    state: &FieldState,
    accumulator: f64,
) -> EnergyReport {
    let (qe, qh, q4) = energy_components(problem, state);
    EnergyReport::from_parts(qe, qh, q4, accumulator)
}

/// Fully discrete energy of `(E^n, H^{n+1/2})` as stored by the leapfrog state.
pub fn energy_fully_discrete(problem: &DgProblem, state: &FieldState) -> EnergyReport {
    energy_semidiscrete(problem, state, 0.0)
}

/// Running trapezoidal integral of `2 c0 (int_bottom (Ex+)^2 + int_left (Ey+)^2)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BoundaryAccumulator {
    pub value: f64,
    last: Option<(f64, f64)>,
}

impl BoundaryAccumulator {
    /// Adds the sample `rate` at time `t`.
    pub fn advance(&mut self, t: f64, rate: f64) {
        if let Some((t0, r0)) = self.last {
            self.value += 0.5 * (t - t0) * (r0 + rate);
        }
        self.last = Some((t, rate));
    }
}

/// Evaluates per-cell coefficients at the quadrature points of `fine`
/// (same mesh and degree as the coefficients).
fn eval_on(space: &DgSpace, coeffs: &[f64], c: usize, out: &mut [f64]) {
    let v = space.basis.values();
    eval_tensor(
        &coeffs[c * space.n_modes()..(c + 1) * space.n_modes()],
        v,
        v,
        space.n1(),
        out,
    );
    let s = space.cell(c).scale();
    out.iter_mut().for_each(|x| *x *= s);
}

/// `||u_h - u||_omega` with two extra quadrature nodes per direction.
pub fn l2_error_scalar<U, W>(
    coeffs: &[f64],
    u: U,
    weight: Option<W>,
    space: &DgSpace,
) -> Result<f64>
where
    U: Fn(f64, f64) -> f64 + Sync,
    W: Fn(f64, f64) -> f64 + Sync,
{
    let fine = space.with_nodes(space.m() + 2)?;
    let nq = fine.n_quad();
    let parts: Vec<f64> = (0..fine.n_cells())
        .into_par_iter()
        .map(|c| {
            let mut vals = vec![0.0; nq];
            eval_on(&fine, coeffs, c, &mut vals);
            let jac = fine.cell(c).jacobian();
            let mut s = 0.0;
            for q in 0..nq {
                let (x, y) = fine.quad_point(c, q);
                let om = weight.as_ref().map_or(1.0, |w| w(x, y));
                let d = vals[q] - u(x, y);
                s += fine.quad_weight(q) * om * d * d;
            }
            s * jac
        })
        .collect();
    Ok(pairwise_sum(&parts).sqrt())
}

/// Component errors in the weighted norms `eps0(1+chi1)`, `eps0(1+chi1)`, `mu0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldErrors {
    pub ex: f64,
    pub ey: f64,
    pub hz: f64,
}

impl FieldErrors {
    pub fn sum(&self) -> f64 {
        self.ex + self.ey + self.hz
    }
}

/// Errors of `state` against exact electric (`exact_e`) and magnetic
/// (`exact_h`) fields, each already evaluated at the time level the state
/// stores for that component.
pub fn l2_error_vs_reference<FE, FH>(
    problem: &DgProblem,
    state: &FieldState,
    exact_e: FE,
    exact_h: FH,
) -> Result<FieldErrors>
where
    FE: Fn(f64, f64) -> [f64; 2] + Sync,
    FH: Fn(f64, f64) -> f64 + Sync,
{
    let model = problem.materials.model();
    let eps = |x: f64, y: f64| model.eps0 * (1.0 + model.chi1.at(x, y));
    let mu = |x: f64, y: f64| model.mu0.at(x, y);
    let sp = &problem.space;
    Ok(FieldErrors {
        ex: l2_error_scalar(&state.ex, |x, y| exact_e(x, y)[0], Some(eps), sp)?,
        ey: l2_error_scalar(&state.ey, |x, y| exact_e(x, y)[1], Some(eps), sp)?,
        hz: l2_error_scalar(&state.hz, &exact_h, Some(mu), sp)?,
    })
}

/// Observed orders `log(e1/e2) / log(h1/h2)` between consecutive pairs.
pub fn convergence_rates(pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two (h, error) pairs".into(),
        ));
    }
    if let Some(p) = pairs.iter().find(|p| !(p.0 > 0.0) || !(p.1 > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "nonpositive entry {p:?} (exact solution reproduced?)"
        )));
    }
    Ok(pairs
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect())
}

/// `(max_n E^n, exp(8T + 1) [3 E^0 + dt sum_n ||J^{n+1/2}||^2])` for the
/// leapfrog stability bound; `j_norms_sq` holds the source norms weighted
/// by `1 / (eps0 (1 + chi1))`.
pub fn fully_discrete_source_bound(
    energies: &[f64],
    j_norms_sq: &[f64],
    dt: f64,
    t_final: f64,
) -> (f64, f64) {
    let lhs = energies.iter().copied().fold(0.0, f64::max);
    let e0 = energies.first().copied().unwrap_or(0.0);
    let rhs = (8.0 * t_final + 1.0).exp() * (3.0 * e0 + dt * pairwise_sum(j_norms_sq));
    (lhs, rhs)
}

/// `(max_t E(t), 2 E(0) + 8 (int_0^T ||J||)^2)` for the semi-discrete bound,
/// with `j_norms` sampled at uniformly spaced times (trapezoidal rule).
pub fn semidiscrete_source_bound(energies: &[f64], j_norms: &[f64], dt: f64) -> (f64, f64) {
    let lhs = energies.iter().copied().fold(0.0, f64::max);
    let e0 = energies.first().copied().unwrap_or(0.0);
    let integral = match j_norms.len() {
        0 | 1 => 0.0,
        n => dt * (pairwise_sum(&j_norms[1..n - 1]) + 0.5 * (j_norms[0] + j_norms[n - 1])),
    };
    (lhs, 2.0 * e0 + 8.0 * integral * integral)
}

pub const ENERGY_HEADER: &str =
    "step,t,quadratic_E,quadratic_H,quartic,boundary_accumulator,total_semidiscrete,total_fullydiscrete";

pub fn write_energy_row<W: Write>(
    out: &mut W,
    step: usize,
    t: f64,
    e: &EnergyReport,
) -> std::io::Result<()> {
    writeln!(
        out,
        "{step},{t:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
        e.quadratic_e,
        e.quadratic_h,
        e.quartic,
        e.boundary_accumulator,
        e.total_semidiscrete,
        e.total_fullydiscrete
    )
}
