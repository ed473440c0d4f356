//! Kerr constitutive law `D = eps0 ((1 + chi1) E + chi3 |E|^2 E)`.
//!
//! Semi-discrete: the nonlinear mass `M(E)` with pointwise kernel
//! `eps0 [(1 + chi1) I + chi3 (|E|^2 I + 2 E E^T)]`.
//! Fully discrete: the midpoint difference `C(a; b)` standing for
//! `D(a) - D(b)`, whose dot product with `a + b` telescopes into the
//! discrete energy, and a per-element Newton solve for the electric update.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{integrate_tensor, weighted_mass_2x2};
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::operator::{eval_block, CellMass, DgProblem};

/// Returns `(|E|^2 (E.Ed) + 2 [Ex^2 Edx Ex + Ey^2 Edy Ey] + 2 Ex Ey (Edy Ex + Edx Ey),
/// 3 |E|^2 (E.Ed))`; the two agree identically.
pub fn cubic_energy_identity_check(e: [f64; 2], ed: [f64; 2]) -> (f64, f64) {
    let e2 = e[0] * e[0] + e[1] * e[1];
    let edot = e[0] * ed[0] + e[1] * ed[1];
    let lhs = e2 * edot
        + 2.0 * (e[0] * e[0] * ed[0] * e[0] + e[1] * e[1] * ed[1] * e[1])
        + 2.0 * e[0] * e[1] * (ed[1] * e[0] + ed[0] * e[1]);
    (lhs, 3.0 * e2 * edot)
}

/// Largest relative defects of the two pointwise identities over random
/// inputs. Defects are scaled by the magnitude of the terms involved, so
/// cancelling right-hand sides do not inflate them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentitySweep {
    pub samples: usize,
    pub cubic: f64,
    pub telescoping: f64,
}

pub fn identity_sweep(samples: usize, seed: u64) -> IdentitySweep {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut cubic, mut tele) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let mut v = || [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let (e, ed, a, b) = (v(), v(), v(), v());
        let el = rng.gen_range(0.1..10.0);
        let ec = rng.gen_range(0.0..10.0);
        let (l, r) = cubic_energy_identity_check(e, ed);
        let n2 = e[0] * e[0] + e[1] * e[1];
        let scale = 3.0 * n2 * n2.sqrt() * (ed[0] * ed[0] + ed[1] * ed[1]).sqrt();
        if scale > 0.0 {
            cubic = cubic.max((l - r).abs() / scale);
        }
        let (l, r) = telescoping_identity_check(a, b, el, ec);
        let a2 = a[0] * a[0] + a[1] * a[1];
        let b2 = b[0] * b[0] + b[1] * b[1];
        let scale = el * (a2 + b2) + 1.5 * ec * (a2 * a2 + b2 * b2);
        if scale > 0.0 {
            tele = tele.max((l - r).abs() / scale);
        }
    }
    IdentitySweep {
        samples,
        cubic,
        telescoping: tele,
    }
}

/// Pointwise midpoint difference `C(a; b)` for linear weight `el = eps0 (1+chi1)`
/// and cubic weight `ec = eps0 chi3`.
#[inline]
pub fn midpoint_delta_pointwise(a: [f64; 2], b: [f64; 2], el: f64, ec: f64) -> [f64; 2] {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let half = 0.5 * (a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1]);
    let cross = a[0] * a[1] + b[0] * b[1];
    [
        el * dx + ec * (half * dx + (a[0] * a[0] + b[0] * b[0]) * dx + cross * dy),
        el * dy + ec * (half * dy + (a[1] * a[1] + b[1] * b[1]) * dy + cross * dx),
    ]
}

/// Returns `(C(a; b) . (a + b), el (|a|^2 - |b|^2) + 3/2 ec (|a|^4 - |b|^4))`;
/// the two agree identically.
pub fn telescoping_identity_check(a: [f64; 2], b: [f64; 2], el: f64, ec: f64) -> (f64, f64) {
    let d = midpoint_delta_pointwise(a, b, el, ec);
    let lhs = d[0] * (a[0] + b[0]) + d[1] * (a[1] + b[1]);
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    (lhs, el * (a2 - b2) + 1.5 * ec * (a2 * a2 - b2 * b2))
}

/// Derivative of [`midpoint_delta_pointwise`] in `a`: `(dxx, dxy, dyy)`.
#[inline]
pub fn midpoint_jacobian_pointwise(a: [f64; 2], b: [f64; 2], el: f64, ec: f64) -> (f64, f64, f64) {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let half = 0.5 * (a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1]);
    let cross = a[0] * a[1] + b[0] * b[1];
    let xx = el + ec * (3.0 * a[0] * dx + half + a[0] * a[0] + b[0] * b[0] + a[1] * dy);
    let yy = el + ec * (3.0 * a[1] * dy + half + a[1] * a[1] + b[1] * b[1] + a[0] * dx);
    let xy = ec * (a[1] * dx + a[0] * dy + cross);
    (xx, xy, yy)
}

/// Dense `2N x 2N` matrix on stacked `(Ex, Ey)` blocks of one element.
#[derive(Clone, Debug)]
pub struct NonlinearMassBlock {
    pub element: usize,
    pub matrix: DMatrix<f64>,
}

/// Assembles a `2N x 2N` matrix from pointwise symmetric 2x2 kernels
/// (already multiplied by quadrature weights).
fn assemble_blocks(problem: &DgProblem, fxx: &[f64], fxy: &[f64], fyy: &[f64]) -> DMatrix<f64> {
    let two = 2 * problem.space.n_modes();
    let mut data = vec![0.0; two * two];
    weighted_mass_2x2(
        fxx,
        fxy,
        fyy,
        problem.space.basis.values(),
        problem.space.n1(),
        &mut data,
    );
    DMatrix::from_vec(two, two, data)
}

/// Nonlinear mass `M(E)` of element `c` from the quadrature values of `E`.
pub fn assemble_nonlinear_mass(
    problem: &DgProblem,
    c: usize,
    ex: &[f64],
    ey: &[f64],
) -> NonlinearMassBlock {
    let nq = problem.space.n_quad();
    let el = problem.eps_linear(c);
    let ec = problem.eps_cubic(c);
    let mut fxx = vec![0.0; nq];
    let mut fxy = vec![0.0; nq];
    let mut fyy = vec![0.0; nq];
    // The element basis is orthonormal: scale^2 * jacobian = 1.
    for q in 0..nq {
        let w = problem.space.quad_weight(q);
        let e2 = ex[q] * ex[q] + ey[q] * ey[q];
        fxx[q] = w * (el[q] + ec[q] * (e2 + 2.0 * ex[q] * ex[q]));
        fyy[q] = w * (el[q] + ec[q] * (e2 + 2.0 * ey[q] * ey[q]));
        fxy[q] = w * ec[q] * 2.0 * ex[q] * ey[q];
    }
    NonlinearMassBlock {
        element: c,
        matrix: assemble_blocks(problem, &fxx, &fxy, &fyy),
    }
}

/// Solves `M(E) (dEx, dEy) = (rx, ry)` element by element.
pub fn solve_semidiscrete_velocity(
    problem: &DgProblem,
    state: &FieldState,
    mut rx: Vec<f64>,
    mut ry: Vec<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let sp = &problem.space;
    let nm = sp.n_modes();
    let nq = sp.n_quad();
    rx.par_chunks_mut(nm)
        .zip(ry.par_chunks_mut(nm))
        .enumerate()
        .try_for_each(|(c, (vx, vy))| -> Result<()> {
            if problem.materials.is_linear_on(c) {
                let m = problem.eps_mass(c);
                m.solve_in_place(vx);
                m.solve_in_place(vy);
                return Ok(());
            }
            let mut ex = vec![0.0; nq];
            let mut ey = vec![0.0; nq];
            eval_block(sp, c, state.cell_ex(c), &mut ex);
            eval_block(sp, c, state.cell_ey(c), &mut ey);
            let block = assemble_nonlinear_mass(problem, c, &ex, &ey);
            let chol = nalgebra::Cholesky::new(block.matrix)
                .ok_or(Error::NotPositiveDefinite { element: c })?;
            let mut rhs = DVector::zeros(2 * nm);
            rhs.as_mut_slice()[..nm].copy_from_slice(vx);
            rhs.as_mut_slice()[nm..].copy_from_slice(vy);
            chol.solve_mut(&mut rhs);
            vx.copy_from_slice(&rhs.as_slice()[..nm]);
            vy.copy_from_slice(&rhs.as_slice()[nm..]);
            Ok(())
        })?;
    Ok((rx, ry))
}

/// Weak vector `(C(a; b), Phi)` of element `c`, stacked `(x, y)`, from
/// coefficient blocks of the new (`a`) and old (`b`) electric field.
pub fn midpoint_constitutive_delta(
    problem: &DgProblem,
    c: usize,
    a: (&[f64], &[f64]),
    b: (&[f64], &[f64]),
) -> Vec<f64> {
    let mut w = CellWork::new(problem);
    w.load_old(problem, c, b);
    w.eval_new(problem, c, a);
    w.delta(problem, c);
    w.weak.clone()
}

/// Newton controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// Linear-solve counts of one electric update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NewtonReport {
    pub max_iterations: usize,
    pub total_iterations: usize,
}

impl NewtonReport {
    pub fn merge(self, other: Self) -> Self {
        Self {
            max_iterations: self.max_iterations.max(other.max_iterations),
            total_iterations: self.total_iterations + other.total_iterations,
        }
    }
}

/// Scratch space for one element's Newton iteration.
struct CellWork {
    bx: Vec<f64>,
    by: Vec<f64>,
    ax: Vec<f64>,
    ay: Vec<f64>,
    px: Vec<f64>,
    py: Vec<f64>,
    fxy: Vec<f64>,
    weak: Vec<f64>,
    tmp: Vec<f64>,
    jac: DMatrix<f64>,
    r: Vec<f64>,
    rt: Vec<f64>,
    step: DVector<f64>,
    trial_x: Vec<f64>,
    trial_y: Vec<f64>,
}

impl CellWork {
    fn new(problem: &DgProblem) -> Self {
        let nq = problem.space.n_quad();
        let nm = problem.space.n_modes();
        Self {
            bx: vec![0.0; nq],
            by: vec![0.0; nq],
            ax: vec![0.0; nq],
            ay: vec![0.0; nq],
            px: vec![0.0; nq],
            py: vec![0.0; nq],
            fxy: vec![0.0; nq],
            weak: vec![0.0; 2 * nm],
            tmp: vec![0.0; nm],
            jac: DMatrix::zeros(2 * nm, 2 * nm),
            r: vec![0.0; 2 * nm],
            rt: vec![0.0; 2 * nm],
            step: DVector::zeros(2 * nm),
            trial_x: vec![0.0; nm],
            trial_y: vec![0.0; nm],
        }
    }

    fn load_old(&mut self, problem: &DgProblem, c: usize, b: (&[f64], &[f64])) {
        eval_block(&problem.space, c, b.0, &mut self.bx);
        eval_block(&problem.space, c, b.1, &mut self.by);
    }

    fn eval_new(&mut self, problem: &DgProblem, c: usize, a: (&[f64], &[f64])) {
        eval_block(&problem.space, c, a.0, &mut self.ax);
        eval_block(&problem.space, c, a.1, &mut self.ay);
    }

    /// `weak <- (C(a; b), Phi)` using the loaded values.
    fn delta(&mut self, problem: &DgProblem, c: usize) {
        let sp = &problem.space;
        let el = problem.eps_linear(c);
        let ec = problem.eps_cubic(c);
        for q in 0..sp.n_quad() {
            let d = midpoint_delta_pointwise(
                [self.ax[q], self.ay[q]],
                [self.bx[q], self.by[q]],
                el[q],
                ec[q],
            );
            self.px[q] = d[0];
            self.py[q] = d[1];
        }
        let g = sp.cell(c);
        let f = g.scale() * g.jacobian();
        let wv = sp.basis.weighted_values();
        let n1 = sp.n1();
        let nm = sp.n_modes();
        integrate_tensor(&self.px, wv, wv, n1, &mut self.tmp);
        for i in 0..nm {
            self.weak[i] = f * self.tmp[i];
        }
        integrate_tensor(&self.py, wv, wv, n1, &mut self.tmp);
        for i in 0..nm {
            self.weak[nm + i] = f * self.tmp[i];
        }
    }

    /// `jac <-` Jacobian of `C(a; b)` in `a` using the loaded values.
    fn jacobian(&mut self, problem: &DgProblem, c: usize) {
        let sp = &problem.space;
        let el = problem.eps_linear(c);
        let ec = problem.eps_cubic(c);
        // px, py are free after delta(): reuse them for the xx, yy kernels
        for q in 0..sp.n_quad() {
            let w = sp.quad_weight(q);
            let (xx, xy, yy) = midpoint_jacobian_pointwise(
                [self.ax[q], self.ay[q]],
                [self.bx[q], self.by[q]],
                el[q],
                ec[q],
            );
            self.px[q] = w * xx;
            self.fxy[q] = w * xy;
            self.py[q] = w * yy;
        }
        weighted_mass_2x2(
            &self.px,
            &self.fxy,
            &self.py,
            sp.basis.values(),
            sp.n1(),
            self.jac.as_mut_slice(),
        );
    }

    /// `out <- C(a; b) + dt B a - dt g0` for the loaded values.
    fn residual(
        &mut self,
        problem: &DgProblem,
        c: usize,
        a: (&[f64], &[f64]),
        g0: (&[f64], &[f64]),
        dt: f64,
        pen: Option<&DMatrix<f64>>,
        trial: bool,
    ) {
        let nm = problem.space.n_modes();
        self.delta(problem, c);
        let out = if trial { &mut self.rt } else { &mut self.r };
        for i in 0..nm {
            out[i] = self.weak[i] - dt * g0.0[i];
            out[nm + i] = self.weak[nm + i] - dt * g0.1[i];
        }
        if let Some(p) = pen {
            for (j, aj) in a.0.iter().chain(a.1.iter()).enumerate() {
                let col = p.column(j);
                for (o, pij) in out.iter_mut().zip(col.iter()) {
                    *o += dt * pij * aj;
                }
            }
        }
    }
}

/// Boundary penalty coupling `B` of element `c` (zero off the penalised walls).
pub fn penalty_matrix(problem: &DgProblem, c: usize) -> Option<DMatrix<f64>> {
    let sp = &problem.space;
    let (i, j) = sp.mesh.cell_coords(c);
    if problem.c0 == 0.0 || (i > 0 && j > 0) {
        return None;
    }
    let n1 = sp.n1();
    let nm = sp.n_modes();
    let g = sp.cell(c);
    let l = sp.basis.left();
    let mut b = DMatrix::zeros(2 * nm, 2 * nm);
    if j == 0 {
        let f = 0.5 * problem.c0 * 2.0 / g.hy;
        for a in 0..n1 {
            for bb in 0..n1 {
                for d in 0..n1 {
                    b[(a + n1 * bb, a + n1 * d)] += f * l[bb] * l[d];
                }
            }
        }
    }
    if i == 0 {
        let f = 0.5 * problem.c0 * 2.0 / g.hx;
        for a in 0..n1 {
            for cc in 0..n1 {
                for bb in 0..n1 {
                    b[(nm + a + n1 * bb, nm + cc + n1 * bb)] += f * l[a] * l[cc];
                }
            }
        }
    }
    Some(b)
}

/// Newton residual `C(a; b) + dt B a - dt g0` and its Jacobian.
pub fn newton_residual_and_jacobian(
    problem: &DgProblem,
    c: usize,
    a: (&[f64], &[f64]),
    b: (&[f64], &[f64]),
    g0: (&[f64], &[f64]),
    dt: f64,
) -> (Vec<f64>, DMatrix<f64>) {
    let mut w = CellWork::new(problem);
    w.load_old(problem, c, b);
    w.eval_new(problem, c, a);
    let pen = penalty_matrix(problem, c);
    w.residual(problem, c, a, g0, dt, pen.as_ref(), false);
    w.jacobian(problem, c);
    let mut jac = w.jac;
    if let Some(p) = &pen {
        jac += p * dt;
    }
    (w.r, jac)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the electric update of one element into `a`, starting from the
/// linearised step. Returns the number of linear solves.
fn newton_cell(
    problem: &DgProblem,
    c: usize,
    b: (&[f64], &[f64]),
    g0: (&[f64], &[f64]),
    dt: f64,
    settings: NewtonSettings,
    pen: Option<&DMatrix<f64>>,
    a: (&mut [f64], &mut [f64]),
    w: &mut CellWork,
) -> Result<usize> {
    let nm = problem.space.n_modes();
    let (ax, ay) = a;

    let mass = problem.eps_mass(c);
    if pen.is_none() && problem.materials.is_linear_on(c) {
        if let CellMass::Scalar(eps) = mass {
            for i in 0..nm {
                ax[i] = b.0[i] + dt * g0.0[i] / eps;
                ay[i] = b.1[i] + dt * g0.1[i] / eps;
            }
            return Ok(1);
        }
    }

    // linear predictor as the initial guess
    ax.copy_from_slice(g0.0);
    mass.solve_in_place(ax);
    ay.copy_from_slice(g0.1);
    mass.solve_in_place(ay);
    for i in 0..nm {
        ax[i] = b.0[i] + dt * ax[i];
        ay[i] = b.1[i] + dt * ay[i];
    }

    w.load_old(problem, c, b);
    w.eval_new(problem, c, (ax, ay));
    w.residual(problem, c, (ax, ay), g0, dt, pen, false);
    let mut rn = norm(&w.r);
    if !rn.is_finite() {
        return Err(Error::NonFinite {
            what: format!("newton residual on element {c}"),
        });
    }
    let target = settings.tol * (1.0 + rn);
    if rn <= target {
        return Ok(0);
    }
    for it in 1..=settings.max_iter {
        w.jacobian(problem, c);
        if let Some(p) = pen {
            for (j, pj) in w.jac.iter_mut().zip(p.iter()) {
                *j += dt * pj;
            }
        }
        w.step.as_mut_slice().copy_from_slice(&w.r);
        let solved = w.jac.clone().lu().solve_mut(&mut w.step);
        if !solved {
            return Err(Error::NewtonDiverged {
                element: c,
                residual: rn,
                iterations: it,
            });
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut trial_x = std::mem::take(&mut w.trial_x);
            let mut trial_y = std::mem::take(&mut w.trial_y);
            for i in 0..nm {
                trial_x[i] = ax[i] - lambda * w.step[i];
                trial_y[i] = ay[i] - lambda * w.step[nm + i];
            }
            w.eval_new(problem, c, (&trial_x, &trial_y));
            w.residual(problem, c, (&trial_x, &trial_y), g0, dt, pen, true);
            w.trial_x = trial_x;
            w.trial_y = trial_y;
            let rtn = norm(&w.rt);
            if rtn.is_finite() && (rtn <= rn || lambda < 1e-6) {
                accepted = Some(rtn);
                break;
            }
            lambda *= 0.5;
        }
        let Some(rtn) = accepted else {
            return Err(Error::NewtonDiverged {
                element: c,
                residual: rn,
                iterations: it,
            });
        };
        ax.copy_from_slice(&w.trial_x);
        ay.copy_from_slice(&w.trial_y);
        std::mem::swap(&mut w.r, &mut w.rt);
        rn = rtn;
        let step_norm = lambda * w.step.norm();
        let a_norm = (norm(ax).powi(2) + norm(ay).powi(2)).sqrt();
        if rn <= target || step_norm <= 4.0 * f64::EPSILON * (1.0 + a_norm) {
            return Ok(it);
        }
    }
    Err(Error::NewtonDiverged {
        element: c,
        residual: rn,
        iterations: settings.max_iter,
    })
}

/// Electric update of the leapfrog scheme: finds `E^{n+1}` with
/// `C(E^{n+1}; E^n) + dt B E^{n+1} = dt g0` on every element, where `g0`
/// is the weak residual evaluated with `H^{n+1/2}`, `J^{n+1/2}` and the
/// penalty carrying only `c0/2 E^n`. A negative `dt` runs the step backwards.
pub fn newton_electric_update(
    problem: &DgProblem,
    e_n: (&[f64], &[f64]),
    g0: (&[f64], &[f64]),
    dt: f64,
    settings: NewtonSettings,
) -> Result<(Vec<f64>, Vec<f64>, NewtonReport)> {
    let nm = problem.space.n_modes();
    let penalties: Vec<Option<DMatrix<f64>>> = (0..problem.space.n_cells())
        .map(|c| penalty_matrix(problem, c))
        .collect();
    let mut ex = e_n.0.to_vec();
    let mut ey = e_n.1.to_vec();
    let counts: Vec<usize> = ex
        .par_chunks_mut(nm)
        .zip(ey.par_chunks_mut(nm))
        .enumerate()
        .map_init(
            || CellWork::new(problem),
            |w, (c, (ax, ay))| {
                let r = c * nm..(c + 1) * nm;
                newton_cell(
                    problem,
                    c,
                    (&e_n.0[r.clone()], &e_n.1[r.clone()]),
                    (&g0.0[r.clone()], &g0.1[r]),
                    dt,
                    settings,
                    penalties[c].as_ref(),
                    (ax, ay),
                    w,
                )
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let report = NewtonReport {
        max_iterations: counts.iter().copied().max().unwrap_or(0),
        total_iterations: counts.iter().sum(),
    };
    Ok((ex, ey, report))
}
