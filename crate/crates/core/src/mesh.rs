//! Cartesian tensor-product partition of a rectangle `(r,s) x (p,q)`.
//!
//! Cells are addressed either by `(i, j)` with `i` the column (x direction)
//! and `j` the row (y direction), or by the flat index `i + nx * j`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    x_edges: Vec<f64>,
    y_edges: Vec<f64>,
    hx: Vec<f64>,
    hy: Vec<f64>,
    h_max: f64,
}

impl Mesh {
    /// Uniform `nx x ny` partition of `(r,s) x (p,q)`.
    pub fn uniform(r: f64, s: f64, p: f64, q: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(r < s) || !(p < q) {
            return Err(Error::InvalidMesh(format!(
                "degenerate domain ({r},{s}) x ({p},{q})"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!(
                "cell counts must be positive, got {nx} x {ny}"
            )));
        }
        let edges = |a: f64, b: f64, n: usize| -> Vec<f64> {
            (0..=n)
                .map(|i| {
                    if i == n {
                        b
                    } else {
                        a + (b - a) * (i as f64) / (n as f64)
                    }
                })
                .collect()
        };
        Self::from_edges(edges(r, s, nx), edges(p, q, ny))
    }

    /// Partition from explicit, strictly increasing edge lists.
    pub fn from_edges(x_edges: Vec<f64>, y_edges: Vec<f64>) -> Result<Self> {
        let hx = widths(&x_edges, "x")?;
        let hy = widths(&y_edges, "y")?;
        let h_max = hx.iter().chain(hy.iter()).copied().fold(0.0, f64::max);
        Ok(Self {
            x_edges,
            y_edges,
            hx,
            hy,
            h_max,
        })
    }

    pub fn nx(&self) -> usize {
        self.hx.len()
    }

    pub fn ny(&self) -> usize {
        self.hy.len()
    }

    pub fn n_cells(&self) -> usize {
        self.nx() * self.ny()
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i + self.nx() * j
    }

    #[inline]
    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx(), cell / self.nx())
    }

    pub fn x_edges(&self) -> &[f64] {
        &self.x_edges
    }

    pub fn y_edges(&self) -> &[f64] {
        &self.y_edges
    }

    pub fn hx(&self) -> &[f64] {
        &self.hx
    }

    pub fn hy(&self) -> &[f64] {
        &self.hy
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Smallest cell dimension in either direction.
    pub fn h_min(&self) -> f64 {
        self.hx
            .iter()
            .chain(self.hy.iter())
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `(r, s, p, q)`.
    pub fn domain(&self) -> (f64, f64, f64, f64) {
        (
            self.x_edges[0],
            self.x_edges[self.nx()],
            self.y_edges[0],
            self.y_edges[self.ny()],
        )
    }

    /// Cell extent as `((x_left, x_right), (y_bottom, y_top))`.
    pub fn cell_bounds(&self, cell: usize) -> ((f64, f64), (f64, f64)) {
        let (i, j) = self.cell_coords(cell);
        (
            (self.x_edges[i], self.x_edges[i + 1]),
            (self.y_edges[j], self.y_edges[j + 1]),
        )
    }

    /// Max over cells of `hx * hy / rho`, where `rho = min(hx, hy) / 2` is the inradius.
    ///
    /// Reported as written in the shape-regularity assumption; the quantity has
    /// units of length and is not enforced anywhere.
    pub fn shape_regularity(&self) -> f64 {
        let mut worst = 0.0_f64;
        for &hy in &self.hy {
            for &hx in &self.hx {
                let rho = 0.5 * hx.min(hy);
                worst = worst.max(hx * hy / rho);
            }
        }
        worst
    }
}

fn widths(edges: &[f64], axis: &str) -> Result<Vec<f64>> {
    if edges.len() < 2 {
        return Err(Error::InvalidMesh(format!(
            "{axis}: need at least two edges, got {}",
            edges.len()
        )));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidMesh(format!("{axis}: non-finite edge")));
    }
    let h: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(pos) = h.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::InvalidMesh(format!(
            "{axis}: edges not strictly increasing at index {pos}"
        )));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_unit_square() {
        let m = Mesh::uniform(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        assert_eq!(m.n_cells(), 16);
        assert_eq!(m.h_max(), 0.25);
        assert_eq!(m.cell_coords(m.cell_index(3, 2)), (3, 2));
    }

    #[test]
    fn single_cell() {
        let m = Mesh::uniform(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        assert_eq!(m.x_edges(), &[0.0, 1.0]);
        assert_eq!(m.y_edges(), &[0.0, 1.0]);
        assert_eq!(m.cell_bounds(0), ((0.0, 1.0), (0.0, 1.0)));
    }

    #[test]
    fn explicit_edges() {
        let m = Mesh::from_edges(vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 1.0]).unwrap();
        assert_eq!(m.hx(), &[0.5, 0.5]);
        assert_eq!(m.hy(), &[0.25, 0.75]);
        assert_eq!(m.h_max(), 0.75);
        assert_eq!(m.h_min(), 0.25);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Mesh::uniform(1.0, 1.0, 0.0, 1.0, 2, 2).is_err());
        assert!(Mesh::uniform(0.0, 1.0, 2.0, 1.0, 2, 2).is_err());
        assert!(Mesh::uniform(0.0, 1.0, 0.0, 1.0, 0, 2).is_err());
        assert!(Mesh::uniform(0.0, 1.0, 0.0, 1.0, 2, 0).is_err());
        assert!(Mesh::from_edges(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Mesh::from_edges(vec![0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn shape_regularity_values() {
        let m = Mesh::uniform(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        assert!((m.shape_regularity() - 0.5).abs() < 1e-15);
        let m = Mesh::uniform(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        assert!((m.shape_regularity() - 2.0).abs() < 1e-15);
        let m = Mesh::from_edges(vec![0.0, 0.5], vec![0.0, 0.25]).unwrap();
        assert!((m.shape_regularity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn widths_sum_to_domain() {
        for n in [1usize, 3, 7, 10, 33] {
            let m = Mesh::uniform(-0.3, 2.1, 0.7, 1.9, n, n + 2).unwrap();
            let sx: f64 = m.hx().iter().sum();
            let sy: f64 = m.hy().iter().sum();
            assert!((sx - 2.4).abs() / 2.4 < 1e-14);
            assert!((sy - 1.2).abs() / 1.2 < 1e-14);
            assert!(m.x_edges().windows(2).all(|w| w[0] < w[1]));
            assert!(m.y_edges().windows(2).all(|w| w[0] < w[1]));
        }
    }
}
