//! Modal field storage, material samples, volume/trace evaluation and
//! weighted norms.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::eval_tensor;
use crate::error::{Error, Result};
use crate::reduce::pairwise_sum;
use crate::space::DgSpace;

/// Modal coefficients of `(E_x, E_y, H_z)`, one `(k+1)^2` block per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub hz: Vec<f64>,
    pub t: f64,
    n_modes: usize,
}

impl FieldState {
    pub fn zeros(space: &DgSpace) -> Self {
        let n = space.n_dofs();
        Self {
            ex: vec![0.0; n],
            ey: vec![0.0; n],
            hz: vec![0.0; n],
            t: 0.0,
            n_modes: space.n_modes(),
        }
    }

    pub fn from_parts(
        space: &DgSpace,
        ex: Vec<f64>,
        ey: Vec<f64>,
        hz: Vec<f64>,
        t: f64,
    ) -> Result<Self> {
        let n = space.n_dofs();
        if ex.len() != n || ey.len() != n || hz.len() != n {
            return Err(Error::InvalidArgument(format!(
                "field arrays must have {n} entries, got {}/{}/{}",
                ex.len(),
                ey.len(),
                hz.len()
            )));
        }
        Ok(Self {
            ex,
            ey,
            hz,
            t,
            n_modes: space.n_modes(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_cells(&self) -> usize {
        self.ex.len() / self.n_modes
    }

    pub fn cell_ex(&self, c: usize) -> &[f64] {
        &self.ex[c * self.n_modes..(c + 1) * self.n_modes]
    }

    pub fn cell_ey(&self, c: usize) -> &[f64] {
        &self.ey[c * self.n_modes..(c + 1) * self.n_modes]
    }

    pub fn cell_hz(&self, c: usize) -> &[f64] {
        &self.hz[c * self.n_modes..(c + 1) * self.n_modes]
    }

    pub fn is_finite(&self) -> bool {
        self.ex
            .iter()
            .chain(&self.ey)
            .chain(&self.hz)
            .all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                what: what.to_string(),
            })
        }
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.ex
            .iter()
            .chain(&self.ey)
            .chain(&self.hz)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes the comma-separated coefficient snapshot
    /// (`cell_i,cell_j,mode_ix,mode_iy,coeff_Ex,coeff_Ey,coeff_Hz`).
    pub fn write_snapshot<W: Write>(&self, space: &DgSpace, mut out: W) -> Result<()> {
        writeln!(
            out,
            "cell_i,cell_j,mode_ix,mode_iy,coeff_Ex,coeff_Ey,coeff_Hz"
        )?;
        let n1 = space.n1();
        for c in 0..space.n_cells() {
            let (i, j) = space.mesh.cell_coords(c);
            for b in 0..n1 {
                for a in 0..n1 {
                    let idx = c * self.n_modes + a + n1 * b;
                    writeln!(
                        out,
                        "{i},{j},{a},{b},{:.17e},{:.17e},{:.17e}",
                        self.ex[idx], self.ey[idx], self.hz[idx]
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Parses a snapshot written by [`FieldState::write_snapshot`].
    pub fn read_snapshot<R: BufRead>(space: &DgSpace, input: R, t: f64) -> Result<Self> {
        let mut state = Self::zeros(space);
        state.t = t;
        let n1 = space.n1();
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "cell_i,cell_j,mode_ix,mode_iy,coeff_Ex,coeff_Ey,coeff_Hz" {
            return Err(Error::InvalidArgument(format!(
                "unexpected snapshot header `{header}`"
            )));
        }
        let mut seen = 0usize;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::InvalidArgument(format!("snapshot line {}: `{line}`", lineno + 2));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(bad());
            }
            let idx: Vec<usize> = cols[..4]
                .iter()
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            let vals: Vec<f64> = cols[4..]
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if idx[0] >= space.mesh.nx()
                || idx[1] >= space.mesh.ny()
                || idx[2] >= n1
                || idx[3] >= n1
            {
                return Err(bad());
            }
            let c = space.mesh.cell_index(idx[0], idx[1]);
            let k = c * state.n_modes + idx[2] + n1 * idx[3];
            state.ex[k] = vals[0];
            state.ey[k] = vals[1];
            state.hz[k] = vals[2];
            seen += 1;
        }
        if seen != space.n_dofs() {
            return Err(Error::InvalidArgument(format!(
                "snapshot has {seen} rows, expected {}",
                space.n_dofs()
            )));
        }
        Ok(state)
    }
}

pub type ScalarFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A spatially varying or constant material coefficient.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Variable(Arc<ScalarFn>),
}

impl Coefficient {
    pub fn at(&self, x: f64, y: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Variable(f) => f(x, y),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "Constant({v})"),
            Coefficient::Variable(_) => write!(f, "Variable(..)"),
        }
    }
}

/// Functional description of `eps0`, `mu0(x)`, `chi1(x)` and `chi3(x)`.
#[derive(Clone, Debug)]
pub struct MaterialModel {
    pub eps0: f64,
    pub mu0: Coefficient,
    pub chi1: Coefficient,
    pub chi3: Coefficient,
}

impl MaterialModel {
    pub fn constant(eps0: f64, mu0: f64, chi1: f64, chi3: f64) -> Self {
        Self {
            eps0,
            mu0: Coefficient::Constant(mu0),
            chi1: Coefficient::Constant(chi1),
            chi3: Coefficient::Constant(chi3),
        }
    }
}

/// Material coefficients sampled at the quadrature points of every cell.
#[derive(Clone, Debug)]
pub struct MaterialField {
    model: MaterialModel,
    pub eps0: f64,
    pub mu0: Vec<f64>,
    pub chi1: Vec<f64>,
    pub chi3: Vec<f64>,
    n_quad: usize,
}

impl MaterialField {
    pub fn sample(model: &MaterialModel, space: &DgSpace) -> Result<Self> {
        if !(model.eps0 > 0.0) || !model.eps0.is_finite() {
            return Err(Error::InvalidMaterial(format!(
                "eps0 = {} must be positive",
                model.eps0
            )));
        }
        let mu0 = space.sample(|x, y| model.mu0.at(x, y));
        let chi1 = space.sample(|x, y| model.chi1.at(x, y));
        let chi3 = space.sample(|x, y| model.chi3.at(x, y));
        if let Some(v) = mu0.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "mu0 sample {v} must be positive"
            )));
        }
        if let Some(v) = chi1.iter().find(|v| !(**v > -1.0) || !v.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "chi1 sample {v} must exceed -1"
            )));
        }
        if let Some(v) = chi3.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "chi3 sample {v} must be nonnegative"
            )));
        }
        Ok(Self {
            model: model.clone(),
            eps0: model.eps0,
            mu0,
            chi1,
            chi3,
            n_quad: space.n_quad(),
        })
    }

    pub fn constant(space: &DgSpace, eps0: f64, mu0: f64, chi1: f64, chi3: f64) -> Result<Self> {
        Self::sample(&MaterialModel::constant(eps0, mu0, chi1, chi3), space)
    }

    pub fn model(&self) -> &MaterialModel {
        &self.model
    }

    /// Re-samples the same model on another space (e.g. a finer quadrature).
    pub fn resample(&self, space: &DgSpace) -> Result<Self> {
        Self::sample(&self.model, space)
    }

    pub fn n_quad(&self) -> usize {
        self.n_quad
    }

    fn range(&self, c: usize) -> std::ops::Range<usize> {
        c * self.n_quad..(c + 1) * self.n_quad
    }

    pub fn cell_mu0(&self, c: usize) -> &[f64] {
        &self.mu0[self.range(c)]
    }

    pub fn cell_chi1(&self, c: usize) -> &[f64] {
        &self.chi1[self.range(c)]
    }

    pub fn cell_chi3(&self, c: usize) -> &[f64] {
        &self.chi3[self.range(c)]
    }

    /// `eps0 * (1 + chi1)` at every sample.
    pub fn eps_linear(&self) -> Vec<f64> {
        self.chi1.iter().map(|c| self.eps0 * (1.0 + c)).collect()
    }

    /// `eps0 * chi3` at every sample.
    pub fn eps_cubic(&self) -> Vec<f64> {
        self.chi3.iter().map(|c| self.eps0 * c).collect()
    }

    /// `C_eps_mu = max (eps0 * mu0 * (1 + chi1))^{-1/2}` over all samples.
    pub fn c_eps_mu(&self) -> f64 {
        self.mu0
            .iter()
            .zip(&self.chi1)
            .map(|(mu, chi)| (self.eps0 * mu * (1.0 + chi)).powf(-0.5))
            .fold(0.0, f64::max)
    }

    pub fn is_linear_on(&self, c: usize) -> bool {
        self.cell_chi3(c).iter().all(|&v| v == 0.0)
    }
}

/// Quadrature-point values of `(E_x, E_y, H_z)`; layout `[cell][field][q]`.
#[derive(Clone, Debug)]
pub struct VolumeValues {
    data: Vec<f64>,
    n_quad: usize,
}

impl VolumeValues {
    fn slot(&self, c: usize, f: usize) -> &[f64] {
        let base = (3 * c + f) * self.n_quad;
        &self.data[base..base + self.n_quad]
    }

    pub fn ex(&self, c: usize) -> &[f64] {
        self.slot(c, 0)
    }

    pub fn ey(&self, c: usize) -> &[f64] {
        self.slot(c, 1)
    }

    pub fn hz(&self, c: usize) -> &[f64] {
        self.slot(c, 2)
    }

    /// One field over all cells, cell-major.
    pub fn component(&self, f: usize) -> Vec<f64> {
        let n_cells = self.data.len() / (3 * self.n_quad);
        (0..n_cells)
            .flat_map(|c| self.slot(c, f).iter().copied())
            .collect()
    }
}

/// Evaluates one element block at the quadrature points of `space`.
pub fn eval_cell(space: &DgSpace, c: usize, coeffs: &[f64], out: &mut [f64]) {
    let b = &space.basis;
    eval_tensor(coeffs, b.values(), b.values(), space.n1(), out);
    let s = space.cell(c).scale();
    out.iter_mut().for_each(|v| *v *= s);
}

pub fn evaluate_volume(state: &FieldState, space: &DgSpace) -> VolumeValues {
    let nq = space.n_quad();
    let mut data = vec![0.0; 3 * nq * space.n_cells()];
    data.par_chunks_mut(3 * nq)
        .enumerate()
        .for_each(|(c, chunk)| {
            let (ex, rest) = chunk.split_at_mut(nq);
            let (ey, hz) = rest.split_at_mut(nq);
            eval_cell(space, c, state.cell_ex(c), ex);
            eval_cell(space, c, state.cell_ey(c), ey);
            eval_cell(space, c, state.cell_hz(c), hz);
        });
    VolumeValues { data, n_quad: nq }
}

/// Side of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

/// One-sided limits of the fields on every cell side, at the face quadrature nodes.
///
/// Bottom/top sides carry `(E_x, H_z)`, left/right sides carry `(E_y, H_z)`;
/// these are the components entering the fluxes across that face orientation.
#[derive(Clone, Debug)]
pub struct TraceSet {
    data: Vec<f64>,
    m: usize,
    nx: usize,
    ny: usize,
}

const SLOTS: usize = 8;

impl TraceSet {
    fn slot(&self, c: usize, s: usize) -> &[f64] {
        let base = (SLOTS * c + s) * self.m;
        &self.data[base..base + self.m]
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Tangential electric trace on a side (`E_x` on bottom/top, `E_y` on left/right).
    pub fn e(&self, c: usize, side: Side) -> &[f64] {
        self.slot(c, side as usize * 2)
    }

    pub fn h(&self, c: usize, side: Side) -> &[f64] {
        self.slot(c, side as usize * 2 + 1)
    }

    /// `(lower, upper)` cells of horizontal face `jf` (0..=ny) in column `i`.
    pub fn horizontal_neighbours(&self, i: usize, jf: usize) -> (Option<usize>, Option<usize>) {
        let lower = (jf > 0).then(|| i + self.nx * (jf - 1));
        let upper = (jf < self.ny).then(|| i + self.nx * jf);
        (lower, upper)
    }

    /// `(left, right)` cells of vertical face `if_` (0..=nx) in row `j`.
    pub fn vertical_neighbours(&self, if_: usize, j: usize) -> (Option<usize>, Option<usize>) {
        let left = (if_ > 0).then(|| if_ - 1 + self.nx * j);
        let right = (if_ < self.nx).then(|| if_ + self.nx * j);
        (left, right)
    }
}

/// Number of trace slots per cell.
pub const TRACE_SLOTS: usize = SLOTS;

/// Traces of cell `c` into `chunk` (`TRACE_SLOTS * m` values, slot
/// `2 * side + {0: E, 1: H}`).
pub fn cell_traces(space: &DgSpace, state: &FieldState, c: usize, chunk: &mut [f64]) {
    let m = space.m();
    let n1 = space.n1();
    let b = &space.basis;
    let s = space.cell(c).scale();
    let fields = [state.cell_ex(c), state.cell_ey(c), state.cell_hz(c)];
    let mut stack = [0.0; 16];
    let mut heap = Vec::new();
    let g: &mut [f64] = if n1 <= stack.len() {
        &mut stack[..n1]
    } else {
        heap.resize(n1, 0.0);
        &mut heap
    };
    // bottom/top: (Ex, Hz) evaluated at eta = -1 / +1 along x nodes
    for (side, ends) in [(Side::Bottom, b.left()), (Side::Top, b.right())] {
        for (slot_off, field) in [(0usize, fields[0]), (1, fields[2])] {
            for a in 0..n1 {
                g[a] = (0..n1).map(|bb| field[a + n1 * bb] * ends[bb]).sum();
            }
            let out = &mut chunk[(side as usize * 2 + slot_off) * m..][..m];
            for q in 0..m {
                out[q] = s * (0..n1).map(|a| b.value(q, a) * g[a]).sum::<f64>();
            }
        }
    }
    // left/right: (Ey, Hz) evaluated at xi = -1 / +1 along y nodes
    for (side, ends) in [(Side::Left, b.left()), (Side::Right, b.right())] {
        for (slot_off, field) in [(0usize, fields[1]), (1, fields[2])] {
            for bb in 0..n1 {
                g[bb] = (0..n1).map(|a| field[a + n1 * bb] * ends[a]).sum();
            }
            let out = &mut chunk[(side as usize * 2 + slot_off) * m..][..m];
            for q in 0..m {
                out[q] = s * (0..n1).map(|bb| b.value(q, bb) * g[bb]).sum::<f64>();
            }
        }
    }
}

/// Evaluates traces of all cells.
pub fn extract_traces(state: &FieldState, space: &DgSpace) -> TraceSet {
    let m = space.m();
    let mut data = vec![0.0; SLOTS * m * space.n_cells()];
    data.par_chunks_mut(SLOTS * m)
        .enumerate()
        .for_each(|(c, chunk)| cell_traces(space, state, c, chunk));
    TraceSet {
        data,
        m,
        nx: space.mesh.nx(),
        ny: space.mesh.ny(),
    }
}

/// Per-cell contributions `sum_q w_q * omega_q * v_q^2 * |J|`.
pub fn weighted_square_integrals(values: &[f64], weight: &[f64], space: &DgSpace) -> Vec<f64> {
    let nq = space.n_quad();
    assert_eq!(values.len(), nq * space.n_cells());
    assert_eq!(weight.len(), values.len());
    (0..space.n_cells())
        .into_par_iter()
        .map(|c| {
            let jac = space.cell(c).jacobian();
            let v = &values[c * nq..(c + 1) * nq];
            let w = &weight[c * nq..(c + 1) * nq];
            let s: f64 = (0..nq)
                .map(|q| space.quad_weight(q) * w[q] * v[q] * v[q])
                .sum();
            s * jac
        })
        .collect()
}

/// `||v||_omega` from quadrature values.
pub fn weighted_l2_norm(values: &[f64], weight: &[f64], space: &DgSpace) -> f64 {
    pairwise_sum(&weighted_square_integrals(values, weight, space)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::projection::{project_2d, Projector2d};
    use std::f64::consts::PI;

    fn space(n: usize, k: usize) -> DgSpace {
        DgSpace::with_degree(Mesh::uniform(0.0, 1.0, 0.0, 1.0, n, n).unwrap(), k).unwrap()
    }

    #[test]
    fn zero_state_evaluates_to_zero() {
        let sp = space(3, 2);
        let st = FieldState::zeros(&sp);
        let vol = evaluate_volume(&st, &sp);
        assert!(vol
            .component(0)
            .iter()
            .chain(&vol.component(2))
            .all(|&v| v == 0.0));
    }

    #[test]
    fn constant_field_values_and_traces() {
        let sp = space(4, 2);
        let mut st = FieldState::zeros(&sp);
        st.hz = project_2d(Projector2d::Pi4, |_, _| 1.0, &sp);
        st.ex = project_2d(Projector2d::Pi1, |_, _| -2.0, &sp);
        let vol = evaluate_volume(&st, &sp);
        assert!(vol.component(2).iter().all(|&v| (v - 1.0).abs() < 1e-13));
        let tr = extract_traces(&st, &sp);
        for c in 0..sp.n_cells() {
            for side in [Side::Bottom, Side::Top, Side::Left, Side::Right] {
                assert!(tr.h(c, side).iter().all(|&v| (v - 1.0).abs() < 1e-13));
            }
            assert!(tr.e(c, Side::Top).iter().all(|&v| (v + 2.0).abs() < 1e-13));
        }
    }

    #[test]
    fn single_cell_k0_traces() {
        let sp = space(1, 0);
        let mut st = FieldState::zeros(&sp);
        st.ex[0] = 0.7;
        st.ey[0] = -0.2;
        st.hz[0] = 3.0;
        let tr = extract_traces(&st, &sp);
        for side in [Side::Bottom, Side::Top] {
            assert!(tr.e(0, side).iter().all(|&v| (v - 0.7).abs() < 1e-15));
        }
        for side in [Side::Left, Side::Right] {
            assert!(tr.e(0, side).iter().all(|&v| (v + 0.2).abs() < 1e-15));
            assert!(tr.h(0, side).iter().all(|&v| (v - 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn traces_match_direct_evaluation() {
        let sp = space(3, 3);
        let mut st = FieldState::zeros(&sp);
        let f = |x: f64, y: f64| (2.0 * x + 0.3).sin() * (1.0 + y * y);
        st.ex = project_2d(Projector2d::Pi4, f, &sp);
        st.hz = project_2d(Projector2d::Pi3, |x, y| f(y, x), &sp);
        let tr = extract_traces(&st, &sp);
        let b = &sp.basis;
        let n1 = sp.n1();
        for c in 0..sp.n_cells() {
            let s = sp.cell(c).scale();
            for q in 0..sp.m() {
                let xi = b.rule().nodes[q];
                let px = b.eval_at(xi);
                let direct = |coeffs: &[f64], eta: f64| {
                    let py = b.eval_at(eta);
                    let mut v = 0.0;
                    for bb in 0..n1 {
                        for a in 0..n1 {
                            v += coeffs[a + n1 * bb] * px[a] * py[bb];
                        }
                    }
                    s * v
                };
                assert!((direct(st.cell_ex(c), -1.0) - tr.e(c, Side::Bottom)[q]).abs() < 1e-13);
                assert!((direct(st.cell_hz(c), 1.0) - tr.h(c, Side::Top)[q]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn projected_field_close_to_analytic() {
        let sp = space(4, 2);
        let f = |x: f64, y: f64| (PI * x).cos() * (PI * y).sin();
        let mut st = FieldState::zeros(&sp);
        st.ex = project_2d(Projector2d::Pi1, f, &sp);
        let vol = evaluate_volume(&st, &sp);
        let exact = sp.sample(f);
        let err = vol
            .component(0)
            .iter()
            .zip(&exact)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        // C h^3 with h = 1/4 and C ~ pi^3 / 3! (Taylor remainder bound)
        assert!(err < PI.powi(3) / 6.0 * 0.25f64.powi(3), "err = {err}");
    }

    #[test]
    fn weighted_norm_examples() {
        let sp = space(3, 2);
        let ones = vec![1.0; sp.n_cells() * sp.n_quad()];
        let fours = vec![4.0; ones.len()];
        assert!((weighted_l2_norm(&ones, &ones, &sp) - 1.0).abs() < 1e-14);
        assert!((weighted_l2_norm(&ones, &fours, &sp) - 2.0).abs() < 1e-14);
        let s = sp.sample(|x, y| (PI * x).sin() * (PI * y).sin());
        assert!((weighted_l2_norm(&s, &ones, &sp) - 0.5).abs() < 1e-6);
        // cellwise vs one concatenated pass
        let per_cell = weighted_square_integrals(&s, &ones, &sp);
        let mut flat = 0.0;
        for c in 0..sp.n_cells() {
            let jac = sp.cell(c).jacobian();
            for q in 0..sp.n_quad() {
                let v = s[c * sp.n_quad() + q];
                flat += sp.quad_weight(q) * v * v * jac;
            }
        }
        assert!((pairwise_sum(&per_cell) - flat).abs() < 1e-13);
    }

    #[test]
    fn snapshot_roundtrip() {
        let sp = space(2, 1);
        let mut st = FieldState::zeros(&sp);
        for (i, v) in st.ex.iter_mut().enumerate() {
            *v = (i as f64).sin() / 3.0;
        }
        st.hz[5] = -1e-300;
        let mut buf = Vec::new();
        st.write_snapshot(&sp, &mut buf).unwrap();
        let back = FieldState::read_snapshot(&sp, &buf[..], 0.0).unwrap();
        assert_eq!(back, st);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("cell_i,cell_j,mode_ix,mode_iy,coeff_Ex,coeff_Ey,coeff_Hz\n"));
        assert_eq!(text.lines().count(), 1 + sp.n_dofs());
    }

    #[test]
    fn material_validation() {
        let sp = space(2, 1);
        assert!(MaterialField::constant(&sp, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(MaterialField::constant(&sp, 1.0, -1.0, 0.0, 0.0).is_err());
        assert!(MaterialField::constant(&sp, 1.0, 1.0, -1.0, 0.0).is_err());
        assert!(MaterialField::constant(&sp, 1.0, 1.0, 0.0, -0.1).is_err());
        let m = MaterialField::constant(&sp, 1.0, 4.0, 0.0, 0.0).unwrap();
        assert!((m.c_eps_mu() - 0.5).abs() < 1e-15);
        assert!(m.is_linear_on(0));
    }
}
