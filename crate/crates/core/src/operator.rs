//! Weak-form curl operator with alternating interior fluxes and PEC
//! boundary fluxes carrying the penalty `c0` on the bottom and left walls.
//!
//! Residuals are the right-hand sides of the element equations before the
//! constitutive (mass) inversion:
//!
//! ```text
//! rx = [H^ Phi]_top - [H^ Phi]_bottom - (H, dy Phi) + (Jx, Phi)
//! ry = -[H^ Phi]_right + [H^ Phi]_left + (H, dx Phi) + (Jy, Phi)
//! rz = -[Ey^ Phi]_right + [Ey^ Phi]_left + (Ey, dx Phi)
//!      + [Ex^ Phi]_top - [Ex^ Phi]_bottom - (Ex, dy Phi)
//! ```

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{eval_tensor, integrate_tensor, weighted_mass};
use crate::constitutive;
use crate::error::{Error, Result};
use crate::field::{
    cell_traces, evaluate_volume, extract_traces, FieldState, MaterialField, Side, TraceSet,
    TRACE_SLOTS,
};
use crate::reduce::pairwise_sum;
use crate::space::DgSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxMode {
    /// Penalty `c0 * E+`.
    SemiDiscrete,
    /// Penalty `c0/2 * (E_a+ + E_b+)` from a pair of electric states.
    FullyDiscretePair,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxConfig {
    pub c0: f64,
    pub mode: FluxMode,
}

impl FluxConfig {
    pub fn new(c0: f64, mode: FluxMode) -> Result<Self> {
        if !(c0 >= 0.0) || !c0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "c0 = {c0} must be nonnegative"
            )));
        }
        Ok(Self { c0, mode })
    }

    pub fn semi(c0: f64) -> Self {
        Self {
            c0,
            mode: FluxMode::SemiDiscrete,
        }
    }

    pub fn with_mode(self, mode: FluxMode) -> Self {
        Self { mode, ..self }
    }
}

/// Numerical flux values seen by every cell on each of its sides, at the
/// face quadrature nodes. Both neighbours of an interior face read the same
/// numbers.
#[derive(Clone, Debug)]
pub struct FaceFluxes {
    data: Vec<f64>,
    m: usize,
}

impl FaceFluxes {
    fn slot(&self, c: usize, s: usize) -> &[f64] {
        let base = (8 * c + s) * self.m;
        &self.data[base..base + self.m]
    }

    /// Tangential electric flux (`Ex^` on bottom/top, `Ey^` on left/right).
    pub fn e_hat(&self, c: usize, side: Side) -> &[f64] {
        self.slot(c, side as usize * 2)
    }

    pub fn h_hat(&self, c: usize, side: Side) -> &[f64] {
        self.slot(c, side as usize * 2 + 1)
    }
}

/// Evaluates all numerical fluxes from one-sided traces.
///
/// In [`FluxMode::FullyDiscretePair`] the boundary penalty uses
/// `c0/2 * (E+ of traces + E+ of pair)`; without a pair only the first
/// state contributes.
pub fn compute_fluxes(
    space: &DgSpace,
    traces: &TraceSet,
    cfg: FluxConfig,
    pair: Option<&TraceSet>,
) -> FaceFluxes {
    let m = traces.m();
    let nx = space.mesh.nx();
    let ny = space.mesh.ny();
    let pen = match cfg.mode {
        FluxMode::SemiDiscrete => cfg.c0,
        FluxMode::FullyDiscretePair => 0.5 * cfg.c0,
    };
    let mut data = vec![0.0; 8 * m * space.n_cells()];
    data.par_chunks_mut(8 * m)
        .enumerate()
        .for_each(|(c, chunk)| {
            let (i, j) = space.mesh.cell_coords(c);
            let mut put = |side: Side, e: &dyn Fn(usize) -> f64, h: &dyn Fn(usize) -> f64| {
                let base = side as usize * 2 * m;
                for q in 0..m {
                    chunk[base + q] = e(q);
                    chunk[base + m + q] = h(q);
                }
            };
            let penalised = |side: Side, q: usize| {
                let own = traces.e(c, side)[q];
                own + pair.map_or(0.0, |p| p.e(c, side)[q])
            };

            let h_top = traces.h(c, Side::Top);
            if j + 1 < ny {
                let up = traces.e(c + nx, Side::Bottom);
                put(Side::Top, &|q| up[q], &|q| h_top[q]);
            } else {
                put(Side::Top, &|_| 0.0, &|q| h_top[q]);
            }

            if j > 0 {
                let h_down = traces.h(c - nx, Side::Top);
                let e_own = traces.e(c, Side::Bottom);
                put(Side::Bottom, &|q| e_own[q], &|q| h_down[q]);
            } else {
                let h_own = traces.h(c, Side::Bottom);
                put(Side::Bottom, &|_| 0.0, &|q| {
                    h_own[q] + pen * penalised(Side::Bottom, q)
                });
            }

            let h_right = traces.h(c, Side::Right);
            if i + 1 < nx {
                let right = traces.e(c + 1, Side::Left);
                put(Side::Right, &|q| right[q], &|q| h_right[q]);
            } else {
                put(Side::Right, &|_| 0.0, &|q| h_right[q]);
            }

            if i > 0 {
                let h_left = traces.h(c - 1, Side::Right);
                let e_own = traces.e(c, Side::Left);
                put(Side::Left, &|q| e_own[q], &|q| h_left[q]);
            } else {
                let h_own = traces.h(c, Side::Left);
                put(Side::Left, &|_| 0.0, &|q| {
                    h_own[q] - pen * penalised(Side::Left, q)
                });
            }
        });
    FaceFluxes { data, m }
}

/// Current density sampled at the volume quadrature points, cell-major.
#[derive(Clone, Debug)]
pub struct SourceSample {
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
}

impl SourceSample {
    pub fn sample<F: Fn(f64, f64) -> [f64; 2]>(space: &DgSpace, j: F) -> Self {
        let n = space.n_cells() * space.n_quad();
        let mut jx = Vec::with_capacity(n);
        let mut jy = Vec::with_capacity(n);
        for c in 0..space.n_cells() {
            for q in 0..space.n_quad() {
                let (x, y) = space.quad_point(c, q);
                let [vx, vy] = j(x, y);
                jx.push(vx);
                jy.push(vy);
            }
        }
        Self { jx, jy }
    }

    /// `||J||^2` with pointwise weight `omega`.
    pub fn weighted_norm_sq(&self, omega: &[f64], space: &DgSpace) -> f64 {
        let ax = crate::field::weighted_square_integrals(&self.jx, omega, space);
        let ay = crate::field::weighted_square_integrals(&self.jy, omega, space);
        pairwise_sum(&ax) + pairwise_sum(&ay)
    }
}

/// Weak-form right-hand sides, one `(k+1)^2` block per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakResidual {
    pub rx: Vec<f64>,
    pub ry: Vec<f64>,
    pub rz: Vec<f64>,
}

impl WeakResidual {
    /// `rx.Ex + ry.Ey + rz.Hz` as coefficient dot products.
    pub fn power(&self, state: &FieldState) -> f64 {
        let n = state.n_modes();
        let per_cell: Vec<f64> = (0..state.n_cells())
            .map(|c| {
                let r = c * n..(c + 1) * n;
                dot(&self.rx[r.clone()], &state.ex[r.clone()])
                    + dot(&self.ry[r.clone()], &state.ey[r.clone()])
                    + dot(&self.rz[r.clone()], &state.hz[r])
            })
            .collect();
        pairwise_sum(&per_cell)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `D[d * n1 + b] = int_{-1}^{1} phi_d phi_b'`.
pub fn derivative_matrix(space: &DgSpace) -> Vec<f64> {
    let b = &space.basis;
    let n1 = space.n1();
    let mut d = vec![0.0; n1 * n1];
    for q in 0..space.m() {
        let w = b.rule().weights[q];
        for i in 0..n1 {
            for k in 0..n1 {
                d[i * n1 + k] += w * b.value(q, i) * b.deriv(q, k);
            }
        }
    }
    d
}

/// Assembles the weak residual from a state and precomputed fluxes.
pub fn curl_residual(
    space: &DgSpace,
    state: &FieldState,
    fluxes: &FaceFluxes,
    source: Option<&SourceSample>,
) -> WeakResidual {
    let n1 = space.n1();
    let nm = space.n_modes();
    let m = space.m();
    let nq = space.n_quad();
    let dm = derivative_matrix(space);
    let wv = space.basis.weighted_values();
    let (left, right) = (space.basis.left(), space.basis.right());
    let mut rx = vec![0.0; space.n_dofs()];
    let mut ry = vec![0.0; space.n_dofs()];
    let mut rz = vec![0.0; space.n_dofs()];

    rx.par_chunks_mut(nm)
        .zip(ry.par_chunks_mut(nm))
        .zip(rz.par_chunks_mut(nm))
        .enumerate()
        .for_each(|(c, ((ox, oy), oz))| {
            let g = space.cell(c);
            let s = g.scale();
            let (hx, hy) = (g.hx, g.hy);
            let (ex, ey, hz) = (state.cell_ex(c), state.cell_ey(c), state.cell_hz(c));

            // Volume terms through the exact modal derivative matrix.
            for b in 0..n1 {
                for a in 0..n1 {
                    let mut dy_h = 0.0;
                    let mut dy_ex = 0.0;
                    for d in 0..n1 {
                        dy_h += hz[a + n1 * d] * dm[d * n1 + b];
                        dy_ex += ex[a + n1 * d] * dm[d * n1 + b];
                    }
                    let mut dx_h = 0.0;
                    let mut dx_ey = 0.0;
                    for cc in 0..n1 {
                        dx_h += hz[cc + n1 * b] * dm[cc * n1 + a];
                        dx_ey += ey[cc + n1 * b] * dm[cc * n1 + a];
                    }
                    let idx = a + n1 * b;
                    ox[idx] = -2.0 / hy * dy_h;
                    oy[idx] = 2.0 / hx * dx_h;
                    oz[idx] = 2.0 / hx * dx_ey - 2.0 / hy * dy_ex;
                }
            }

            // Face terms: project the nodal flux values onto the 1D modes.
            let mut gm = [0.0; 16];
            let mut project = |vals: &[f64]| -> [f64; 16] {
                for a in 0..n1 {
                    gm[a] = (0..m).map(|q| wv[q * n1 + a] * vals[q]).sum();
                }
                gm
            };
            let cx = 0.5 * s * hx;
            let cy = 0.5 * s * hy;
            let top_h = project(fluxes.h_hat(c, Side::Top));
            let top_e = project(fluxes.e_hat(c, Side::Top));
            let bot_h = project(fluxes.h_hat(c, Side::Bottom));
            let bot_e = project(fluxes.e_hat(c, Side::Bottom));
            let rgt_h = project(fluxes.h_hat(c, Side::Right));
            let rgt_e = project(fluxes.e_hat(c, Side::Right));
            let lft_h = project(fluxes.h_hat(c, Side::Left));
            let lft_e = project(fluxes.e_hat(c, Side::Left));
            for b in 0..n1 {
                for a in 0..n1 {
                    let idx = a + n1 * b;
                    ox[idx] += cx * (top_h[a] * right[b] - bot_h[a] * left[b]);
                    oy[idx] -= cy * (right[a] * rgt_h[b] - left[a] * lft_h[b]);
                    oz[idx] += cx * (top_e[a] * right[b] - bot_e[a] * left[b])
                        - cy * (right[a] * rgt_e[b] - left[a] * lft_e[b]);
                }
            }

            if let Some(src) = source {
                let jac = s * g.jacobian();
                let mut tmp = vec![0.0; nm];
                for (vals, out) in [(&src.jx, &mut *ox), (&src.jy, &mut *oy)] {
                    integrate_tensor(&vals[c * nq..(c + 1) * nq], wv, wv, n1, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += jac * t);
                }
            }
        });
    WeakResidual { rx, ry, rz }
}

/// `int_bottom (Ex+)^2 + int_left (Ey+)^2` over the penalised walls.
pub fn boundary_trace_energy(space: &DgSpace, traces: &TraceSet) -> f64 {
    let w = &space.basis.rule().weights;
    let nx = space.mesh.nx();
    let ny = space.mesh.ny();
    let mut parts = Vec::with_capacity(nx + ny);
    for i in 0..nx {
        let c = space.mesh.cell_index(i, 0);
        let e = traces.e(c, Side::Bottom);
        let hx = space.cell(c).hx;
        parts.push(0.5 * hx * e.iter().zip(w).map(|(v, w)| w * v * v).sum::<f64>());
    }
    for j in 0..ny {
        let c = space.mesh.cell_index(0, j);
        let e = traces.e(c, Side::Left);
        let hy = space.cell(c).hy;
        parts.push(0.5 * hy * e.iter().zip(w).map(|(v, w)| w * v * v).sum::<f64>());
    }
    pairwise_sum(&parts)
}

/// [`boundary_trace_energy`] evaluated directly from `state`, touching only
/// the wall cells.
pub fn wall_trace_energy(space: &DgSpace, state: &FieldState) -> f64 {
    let w = &space.basis.rule().weights;
    let m = space.m();
    let mut chunk = vec![0.0; TRACE_SLOTS * m];
    let mut parts = Vec::with_capacity(space.mesh.nx() + space.mesh.ny());
    let mut side_energy = |c: usize, side: Side, h: f64| {
        cell_traces(space, state, c, &mut chunk);
        let e = &chunk[side as usize * 2 * m..][..m];
        parts.push(0.5 * h * e.iter().zip(w).map(|(v, w)| w * v * v).sum::<f64>());
    };
    for i in 0..space.mesh.nx() {
        let c = space.mesh.cell_index(i, 0);
        side_energy(c, Side::Bottom, space.cell(c).hx);
    }
    for j in 0..space.mesh.ny() {
        let c = space.mesh.cell_index(0, j);
        side_energy(c, Side::Left, space.cell(c).hy);
    }
    pairwise_sum(&parts)
}

/// Element mass `(omega u, v)` for a scalar weight: a multiple of the
/// identity when the weight is constant on the cell, else a dense
/// Cholesky factor.
#[derive(Clone, Debug)]
pub enum CellMass {
    Scalar(f64),
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>, DMatrix<f64>),
}

impl CellMass {
    pub fn assemble(space: &DgSpace, c: usize, weight: &[f64]) -> Result<Self> {
        let first = weight[0];
        if weight.iter().all(|&w| w == first) {
            return Ok(CellMass::Scalar(first));
        }
        let nm = space.n_modes();
        let f: Vec<f64> = weight
            .iter()
            .enumerate()
            .map(|(q, w)| w * space.quad_weight(q))
            .collect();
        let mut out = vec![0.0; nm * nm];
        weighted_mass(&f, space.basis.values(), space.n1(), &mut out);
        let mat = DMatrix::from_row_slice(nm, nm, &out);
        let chol = nalgebra::Cholesky::new(mat.clone())
            .ok_or(Error::NotPositiveDefinite { element: c })?;
        Ok(CellMass::Dense(chol, mat))
    }

    pub fn solve_in_place(&self, v: &mut [f64]) {
        match self {
            CellMass::Scalar(s) => v.iter_mut().for_each(|x| *x /= s),
            CellMass::Dense(chol, _) => {
                let sol = chol.solve(&DVector::from_column_slice(v));
                v.copy_from_slice(sol.as_slice());
            }
        }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        match self {
            CellMass::Scalar(s) => out.iter_mut().zip(v).for_each(|(o, x)| *o = s * x),
            CellMass::Dense(_, mat) => {
                let r = mat * DVector::from_column_slice(v);
                out.copy_from_slice(r.as_slice());
            }
        }
    }
}

/// Space, sampled materials and flux settings bundled with the per-cell
/// linear mass matrices.
#[derive(Clone, Debug)]
pub struct DgProblem {
    pub space: DgSpace,
    pub materials: MaterialField,
    pub c0: f64,
    mu_mass: Vec<CellMass>,
    eps_mass: Vec<CellMass>,
    eps_lin: Vec<f64>,
    eps_cub: Vec<f64>,
}

impl DgProblem {
    pub fn new(space: DgSpace, materials: MaterialField, c0: f64) -> Result<Self> {
        FluxConfig::new(c0, FluxMode::SemiDiscrete)?;
        if materials.mu0.len() != space.n_cells() * space.n_quad() {
            return Err(Error::InvalidArgument(
                "materials sampled on a different space".into(),
            ));
        }
        let nq = space.n_quad();
        let eps_lin = materials.eps_linear();
        let eps_cub = materials.eps_cubic();
        let mu_mass = (0..space.n_cells())
            .into_par_iter()
            .map(|c| CellMass::assemble(&space, c, materials.cell_mu0(c)))
            .collect::<Result<Vec<_>>>()?;
        let eps_mass = (0..space.n_cells())
            .into_par_iter()
            .map(|c| CellMass::assemble(&space, c, &eps_lin[c * nq..(c + 1) * nq]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space,
            materials,
            c0,
            mu_mass,
            eps_mass,
            eps_lin,
            eps_cub,
        })
    }

    pub fn flux(&self, mode: FluxMode) -> FluxConfig {
        FluxConfig { c0: self.c0, mode }
    }

    pub fn mu_mass(&self, c: usize) -> &CellMass {
        &self.mu_mass[c]
    }

    pub fn eps_mass(&self, c: usize) -> &CellMass {
        &self.eps_mass[c]
    }

    /// `eps0 (1 + chi1)` on cell `c`.
    pub fn eps_linear(&self, c: usize) -> &[f64] {
        let nq = self.space.n_quad();
        &self.eps_lin[c * nq..(c + 1) * nq]
    }

    /// `eps0 chi3` on cell `c`.
    pub fn eps_cubic(&self, c: usize) -> &[f64] {
        let nq = self.space.n_quad();
        &self.eps_cub[c * nq..(c + 1) * nq]
    }

    pub fn eps_linear_all(&self) -> &[f64] {
        &self.eps_lin
    }

    pub fn eps_cubic_all(&self) -> &[f64] {
        &self.eps_cub
    }

    /// Weak residual of a single state in the given flux mode.
    pub fn residual(
        &self,
        state: &FieldState,
        mode: FluxMode,
        source: Option<&SourceSample>,
    ) -> WeakResidual {
        let traces = extract_traces(state, &self.space);
        let fluxes = compute_fluxes(&self.space, &traces, self.flux(mode), None);
        curl_residual(&self.space, state, &fluxes, source)
    }

    /// Solves `M_mu v = r` cellwise in place.
    pub fn apply_inverse_mu(&self, r: &mut [f64]) {
        let nm = self.space.n_modes();
        r.par_chunks_mut(nm)
            .enumerate()
            .for_each(|(c, v)| self.mu_mass[c].solve_in_place(v));
    }

    /// Semi-discrete time derivative `(dEx, dEy, dHz)` of `state`.
    pub fn semidiscrete_rhs(
        &self,
        state: &FieldState,
        source: Option<&SourceSample>,
    ) -> Result<FieldState> {
        let r = self.residual(state, FluxMode::SemiDiscrete, source);
        let WeakResidual { rx, ry, mut rz } = r;
        let (vx, vy) = constitutive::solve_semidiscrete_velocity(self, state, rx, ry)?;
        self.apply_inverse_mu(&mut rz);
        FieldState::from_parts(&self.space, vx, vy, rz, state.t)
    }
}

/// Terms of the semi-discrete energy balance evaluated from one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRate {
    /// `(eps(1+chi1) E, dE) + (mu H, dH) + 3 (eps chi3 |E|^2 E, dE)`.
    pub lhs_rate: f64,
    /// `c0 (int_bottom (Ex+)^2 + int_left (Ey+)^2)`.
    pub boundary_dissipation: f64,
    /// `(J, E)`.
    pub source_power: f64,
}

impl EnergyRate {
    pub fn defect(&self) -> f64 {
        self.lhs_rate + self.boundary_dissipation - self.source_power
    }

    pub fn scale(&self) -> f64 {
        self.lhs_rate.abs() + self.boundary_dissipation.abs() + self.source_power.abs()
    }
}

pub fn discrete_energy_rate_identity(
    problem: &DgProblem,
    state: &FieldState,
    source: Option<&SourceSample>,
) -> Result<EnergyRate> {
    let space = &problem.space;
    let rate = problem.semidiscrete_rhs(state, source)?;
    let vol = evaluate_volume(state, space);
    let dvol = evaluate_volume(&rate, space);
    let nq = space.n_quad();
    let parts: Vec<(f64, f64)> = (0..space.n_cells())
        .into_par_iter()
        .map(|c| {
            let jac = space.cell(c).jacobian();
            let (ex, ey, hz) = (vol.ex(c), vol.ey(c), vol.hz(c));
            let (dex, dey, dhz) = (dvol.ex(c), dvol.ey(c), dvol.hz(c));
            let el = problem.eps_linear(c);
            let ec = problem.eps_cubic(c);
            let mu = problem.materials.cell_mu0(c);
            let mut lhs = 0.0;
            let mut src = 0.0;
            for q in 0..nq {
                let w = space.quad_weight(q) * jac;
                let e_de = ex[q] * dex[q] + ey[q] * dey[q];
                let e2 = ex[q] * ex[q] + ey[q] * ey[q];
                lhs += w * (el[q] * e_de + mu[q] * hz[q] * dhz[q] + 3.0 * ec[q] * e2 * e_de);
                if let Some(s) = source {
                    src += w * (s.jx[c * nq + q] * ex[q] + s.jy[c * nq + q] * ey[q]);
                }
            }
            (lhs, src)
        })
        .collect();
    let lhs: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let src: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let traces = extract_traces(state, space);
    Ok(EnergyRate {
        lhs_rate: pairwise_sum(&lhs),
        boundary_dissipation: problem.c0 * boundary_trace_energy(space, &traces),
        source_power: pairwise_sum(&src),
    })
}

/// Evaluates one field block of cell `c` at arbitrary reference tables.
pub(crate) fn eval_block(space: &DgSpace, c: usize, coeffs: &[f64], out: &mut [f64]) {
    let v = space.basis.values();
    eval_tensor(coeffs, v, v, space.n1(), out);
    let s = space.cell(c).scale();
    out.iter_mut().for_each(|x| *x *= s);
}
