//! The discrete space `U_h^k`: a mesh together with the 1D basis tables.
//!
//! On cell `K = I x J` the element basis is
//! `Phi_ab(x, y) = sx * sy * phi_a(xi) * phi_b(eta)` with `sx = sqrt(2/hx)`,
//! `sy = sqrt(2/hy)`, so that the element mass matrix is the identity.

use crate::basis::Basis1D;
use crate::error::Result;
use crate::mesh::Mesh;

#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl CellGeometry {
    /// Normalisation `sx * sy` of the element basis.
    #[inline]
    pub fn scale(&self) -> f64 {
        2.0 / (self.hx * self.hy).sqrt()
    }

    /// Area Jacobian of the reference map.
    #[inline]
    pub fn jacobian(&self) -> f64 {
        0.25 * self.hx * self.hy
    }

    #[inline]
    pub fn map(&self, xi: f64, eta: f64) -> (f64, f64) {
        (
            self.x0 + 0.5 * (xi + 1.0) * self.hx,
            self.y0 + 0.5 * (eta + 1.0) * self.hy,
        )
    }
}

#[derive(Clone, Debug)]
pub struct DgSpace {
    pub mesh: Mesh,
    pub basis: Basis1D,
}

impl DgSpace {
    pub fn new(mesh: Mesh, basis: Basis1D) -> Self {
        Self { mesh, basis }
    }

    /// Default quadrature (`2k + 2` nodes per direction).
    pub fn with_degree(mesh: Mesh, k: usize) -> Result<Self> {
        Ok(Self::new(mesh, Basis1D::with_default_quadrature(k)?))
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    /// Modes per direction, `k + 1`.
    pub fn n1(&self) -> usize {
        self.basis.n_modes()
    }

    /// Modes per element, `(k + 1)^2`.
    pub fn n_modes(&self) -> usize {
        self.n1() * self.n1()
    }

    /// Quadrature nodes per direction.
    pub fn m(&self) -> usize {
        self.basis.n_nodes()
    }

    /// Quadrature points per element.
    pub fn n_quad(&self) -> usize {
        self.m() * self.m()
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_cells() * self.n_modes()
    }

    pub fn cell(&self, cell: usize) -> CellGeometry {
        let (i, j) = self.mesh.cell_coords(cell);
        CellGeometry {
            x0: self.mesh.x_edges()[i],
            y0: self.mesh.y_edges()[j],
            hx: self.mesh.hx()[i],
            hy: self.mesh.hy()[j],
        }
    }

    /// Physical coordinates of quadrature point `q = qx + m*qy` of `cell`.
    pub fn quad_point(&self, cell: usize, q: usize) -> (f64, f64) {
        let m = self.m();
        let nodes = &self.basis.rule().nodes;
        self.cell(cell).map(nodes[q % m], nodes[q / m])
    }

    /// Tensor quadrature weight of point `q` on the reference square.
    #[inline]
    pub fn quad_weight(&self, q: usize) -> f64 {
        let m = self.m();
        let w = &self.basis.rule().weights;
        w[q % m] * w[q / m]
    }

    /// Samples `f` at every quadrature point, cell-major.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let nq = self.n_quad();
        let mut out = Vec::with_capacity(self.n_cells() * nq);
        for c in 0..self.n_cells() {
            for q in 0..nq {
                let (x, y) = self.quad_point(c, q);
                out.push(f(x, y));
            }
        }
        out
    }

    /// Same mesh and degree with a different number of quadrature nodes.
    pub fn with_nodes(&self, m: usize) -> Result<Self> {
        Ok(Self::new(
            self.mesh.clone(),
            Basis1D::new(self.degree(), m)?,
        ))
    }
}
