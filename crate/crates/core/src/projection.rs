//! One-dimensional L² and endpoint-matching projectors and their tensor
//! products onto `Q_k`.
//!
//! Each 1D projector is stored as a `(k+1) x (m+2)` matrix acting on the
//! samples `[u(x_0), .., u(x_{m-1}), u(-1), u(+1)]` in reference
//! coordinates, producing reference-orthonormal coefficients.

use rayon::prelude::*;

use crate::basis::Basis1D;
use crate::space::DgSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// All `k+1` moments matched.
    Plain,
    /// Moments up to degree `k-1` and the left endpoint value.
    Plus,
    /// Moments up to degree `k-1` and the right endpoint value.
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProjectorKind {
    pub axis: Axis,
    pub flavor: Flavor,
}

/// The four tensor-product projectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projector2d {
    Pi1,
    Pi2,
    Pi3,
    Pi4,
}

impl Projector2d {
    pub const ALL: [Projector2d; 4] = [Self::Pi1, Self::Pi2, Self::Pi3, Self::Pi4];

    pub fn factors(self) -> (ProjectorKind, ProjectorKind) {
        let (fx, fy) = match self {
            Self::Pi1 => (Flavor::Plain, Flavor::Plus),
            Self::Pi2 => (Flavor::Plus, Flavor::Plain),
            Self::Pi3 => (Flavor::Minus, Flavor::Minus),
            Self::Pi4 => (Flavor::Plain, Flavor::Plain),
        };
        (
            ProjectorKind {
                axis: Axis::X,
                flavor: fx,
            },
            ProjectorKind {
                axis: Axis::Y,
                flavor: fy,
            },
        )
    }
}

/// Reference-interval projector matrix, row-major `(k+1) x (m+2)`.
pub fn projector_matrix(flavor: Flavor, basis: &Basis1D) -> Vec<f64> {
    let n1 = basis.n_modes();
    let m = basis.n_nodes();
    let cols = m + 2;
    let w = &basis.rule().weights;
    let mut p = vec![0.0; n1 * cols];
    // Moment rows: c_n = sum_q w_q phi_n(x_q) u_q.
    for n in 0..n1 {
        for q in 0..m {
            p[n * cols + q] = w[q] * basis.value(q, n);
        }
    }
    let (end_col, end_vals) = match flavor {
        Flavor::Plain => return p,
        Flavor::Plus => (m, basis.left()),
        Flavor::Minus => (m + 1, basis.right()),
    };
    // Replace the top moment by the endpoint condition
    // sum_n c_n phi_n(end) = u(end). Orthonormality decouples the lower
    // moments, so the defining system is triangular; solve it directly.
    let k = n1 - 1;
    let top = end_vals[k];
    for col in 0..cols {
        let lower: f64 = (0..k).map(|n| end_vals[n] * p[n * cols + col]).sum();
        let rhs = if col == end_col { 1.0 } else { 0.0 };
        p[k * cols + col] = (rhs - lower) / top;
    }
    p
}

/// Gauss nodes used for the moments of a projection. Far more than the
/// element rule, so the defining integral conditions hold to round-off
/// for smooth data.
pub const PROJECTION_NODES: usize = 24;

fn projection_basis(basis: &Basis1D) -> Basis1D {
    let m = PROJECTION_NODES.max(basis.n_nodes());
    Basis1D::new(basis.degree(), m).expect("projection rule is valid for any degree")
}

/// Physical coefficients of the 1D projection of `u` onto `P_k(a, b)`
/// in the basis `sqrt(2/h) phi_n`.
pub fn project_1d<F: Fn(f64) -> f64>(
    flavor: Flavor,
    u: F,
    interval: (f64, f64),
    basis: &Basis1D,
) -> Vec<f64> {
    let basis = &projection_basis(basis);
    let (a, b) = interval;
    let h = b - a;
    let nodes = &basis.rule().nodes;
    let mut samples: Vec<f64> = nodes
        .iter()
        .map(|&xi| u(a + 0.5 * (xi + 1.0) * h))
        .collect();
    samples.push(u(a));
    samples.push(u(b));
    let p = projector_matrix(flavor, basis);
    let cols = samples.len();
    let scale = (0.5 * h).sqrt();
    (0..basis.n_modes())
        .map(|n| scale * (0..cols).map(|c| p[n * cols + c] * samples[c]).sum::<f64>())
        .collect()
}

/// Projects `u` cell by cell with the selected tensor projector.
pub fn project_2d<F: Fn(f64, f64) -> f64 + Sync>(
    which: Projector2d,
    u: F,
    space: &DgSpace,
) -> Vec<f64> {
    let (kx, ky) = which.factors();
    let basis = &projection_basis(&space.basis);
    let px = projector_matrix(kx.flavor, basis);
    let py = projector_matrix(ky.flavor, basis);
    let n1 = space.n1();
    let m = basis.n_nodes();
    let cols = m + 2;
    let mut ref_pts: Vec<f64> = basis.rule().nodes.clone();
    ref_pts.push(-1.0);
    ref_pts.push(1.0);

    let mut out = vec![0.0; space.n_dofs()];
    out.par_chunks_mut(n1 * n1)
        .enumerate()
        .for_each(|(c, block)| {
            let g = space.cell(c);
            // samples[i + cols*j] = u(x_i, y_j)
            let mut samples = vec![0.0; cols * cols];
            for (j, &eta) in ref_pts.iter().enumerate() {
                for (i, &xi) in ref_pts.iter().enumerate() {
                    let (x, y) = g.map(xi, eta);
                    samples[i + cols * j] = u(x, y);
                }
            }
            // Contract along x, then y.
            let mut tmp = vec![0.0; n1 * cols];
            for j in 0..cols {
                for a in 0..n1 {
                    tmp[a + n1 * j] = (0..cols)
                        .map(|i| px[a * cols + i] * samples[i + cols * j])
                        .sum();
                }
            }
            let scale = 0.5 * (g.hx * g.hy).sqrt();
            for b in 0..n1 {
                for a in 0..n1 {
                    block[a + n1 * b] = scale
                        * (0..cols)
                            .map(|j| py[b * cols + j] * tmp[a + n1 * j])
                            .sum::<f64>();
                }
            }
        });
    out
}

/// L² projection errors of `u` on a ladder of uniform meshes of the unit
/// square with `base_n * 2^l` cells per direction.
pub fn projection_error_study<F: Fn(f64, f64) -> f64 + Sync>(
    which: Projector2d,
    u: F,
    k: usize,
    base_n: usize,
    levels: usize,
) -> crate::error::Result<Vec<(f64, f64)>> {
    let mut rows = Vec::with_capacity(levels);
    for l in 0..levels {
        let n = base_n << l;
        let mesh = crate::mesh::Mesh::uniform(0.0, 1.0, 0.0, 1.0, n, n)?;
        let space = DgSpace::with_degree(mesh, k)?;
        let coeffs = project_2d(which, &u, &space);
        let err =
            crate::diagnostics::l2_error_scalar(&coeffs, &u, None::<fn(f64, f64) -> f64>, &space)?;
        rows.push((space.mesh.h_max(), err));
    }
    Ok(rows)
}
