//! Gauss–Legendre quadrature and the L²-orthonormal Legendre basis on `(-1, 1)`,
//! plus the sum-factorised tensor kernels used for `Q_k` elements.
//!
//! Two-dimensional arrays are stored flat. Modal coefficients of an element use
//! index `a + n * b` (x degree `a` fastest, `n = k + 1`); quadrature values use
//! `qx + m * qy`.

use crate::error::{Error, Result};

pub const MAX_NODES: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral over `(-1, 1)` of `f` sampled at the nodes.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `m`-point Gauss–Legendre rule on `(-1, 1)`, nodes ascending.
pub fn gauss_legendre(m: usize) -> Result<QuadratureRule> {
    if m == 0 || m > MAX_NODES {
        return Err(Error::InvalidBasis(format!(
            "gauss_legendre: node count {m} outside 1..={MAX_NODES}"
        )));
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        // Newton iteration on P_m from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Classical Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() > 1e-300 {
        nf * (x * p1 - p0) / (x * x - 1.0)
    } else {
        // endpoint value of P_n'
        let s = if x > 0.0 {
            1.0
        } else {
            (-1.0f64).powi(n as i32 + 1)
        };
        s * nf * (nf + 1.0) / 2.0
    };
    (p1, d)
}

/// Orthonormal Legendre values `phi_0..phi_k` and derivatives at `x`.
pub fn orthonormal_legendre(k: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) {
    debug_assert!(values.len() > k && derivs.len() > k);
    let mut p = vec![0.0; k + 1];
    let mut dp = vec![0.0; k + 1];
    p[0] = 1.0;
    if k >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for n in 1..k {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
        dp[n + 1] = dp[n - 1] + (2.0 * nf + 1.0) * p[n];
    }
    for n in 0..=k {
        let s = ((2 * n + 1) as f64 / 2.0).sqrt();
        values[n] = s * p[n];
        derivs[n] = s * dp[n];
    }
}

/// Basis tables for degree `k` on an `m`-point Gauss rule.
#[derive(Clone, Debug)]
pub struct Basis1D {
    k: usize,
    rule: QuadratureRule,
    /// `values[q * (k+1) + n] = phi_n(x_q)`
    values: Vec<f64>,
    derivs: Vec<f64>,
    /// weighted tables `w_q * phi_n(x_q)` and `w_q * phi_n'(x_q)`
    weighted_values: Vec<f64>,
    weighted_derivs: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Basis1D {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if m < k + 1 {
            return Err(Error::InvalidBasis(format!(
                "need at least k+1 = {} quadrature nodes, got {m}",
                k + 1
            )));
        }
        let rule = gauss_legendre(m)?;
        let n = k + 1;
        let mut values = vec![0.0; m * n];
        let mut derivs = vec![0.0; m * n];
        for (q, &x) in rule.nodes.iter().enumerate() {
            orthonormal_legendre(
                k,
                x,
                &mut values[q * n..(q + 1) * n],
                &mut derivs[q * n..(q + 1) * n],
            );
        }
        let weighted_values = values
            .iter()
            .enumerate()
            .map(|(idx, v)| v * rule.weights[idx / n])
            .collect();
        let weighted_derivs = derivs
            .iter()
            .enumerate()
            .map(|(idx, v)| v * rule.weights[idx / n])
            .collect();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        orthonormal_legendre(k, -1.0, &mut left, &mut scratch);
        orthonormal_legendre(k, 1.0, &mut right, &mut scratch);
        Ok(Self {
            k,
            rule,
            values,
            derivs,
            weighted_values,
            weighted_derivs,
            left,
            right,
        })
    }

    /// Degree `k` with the default `2k + 2` nodes.
    pub fn with_default_quadrature(k: usize) -> Result<Self> {
        Self::new(k, 2 * k + 2)
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// Number of 1D modes, `k + 1`.
    pub fn n_modes(&self) -> usize {
        self.k + 1
    }

    /// Number of 1D quadrature nodes.
    pub fn n_nodes(&self) -> usize {
        self.rule.len()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn weighted_values(&self) -> &[f64] {
        &self.weighted_values
    }

    pub fn weighted_derivs(&self) -> &[f64] {
        &self.weighted_derivs
    }

    /// Basis values at the reference point -1.
    pub fn left(&self) -> &[f64] {
        &self.left
    }

    /// Basis values at the reference point +1.
    pub fn right(&self) -> &[f64] {
        &self.right
    }

    #[inline]
    pub fn value(&self, q: usize, n: usize) -> f64 {
        self.values[q * (self.k + 1) + n]
    }

    #[inline]
    pub fn deriv(&self, q: usize, n: usize) -> f64 {
        self.derivs[q * (self.k + 1) + n]
    }

    /// All basis values at an arbitrary reference point.
    pub fn eval_at(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.k + 1];
        let mut d = vec![0.0; self.k + 1];
        orthonormal_legendre(self.k, x, &mut v, &mut d);
        v
    }
}

/// `sum_n coeffs[n] * phi_n(x_ref)`.
pub fn eval_modal_1d(coeffs: &[f64], basis: &Basis1D, x_ref: f64) -> f64 {
    assert_eq!(
        coeffs.len(),
        basis.n_modes(),
        "coefficient length must be k+1"
    );
    basis
        .eval_at(x_ref)
        .iter()
        .zip(coeffs)
        .map(|(p, c)| p * c)
        .sum()
}

const SCRATCH: usize = 64;

/// Zeroed buffer of length `len`, on the stack when it fits.
fn scratch<'a>(stack: &'a mut [f64; SCRATCH], heap: &'a mut Vec<f64>, len: usize) -> &'a mut [f64] {
    if len <= SCRATCH {
        &mut stack[..len]
    } else {
        heap.resize(len, 0.0);
        heap
    }
}

/// `out[qx + mx*qy] = sum_{a,b} c[a + n*b] * ax[qx*n + a] * ay[qy*n + b]`.
pub fn eval_tensor(c: &[f64], ax: &[f64], ay: &[f64], n: usize, out: &mut [f64]) {
    let mx = ax.len() / n;
    let my = ay.len() / n;
    debug_assert_eq!(out.len(), mx * my);
    let mut stack = [0.0; SCRATCH];
    let mut heap = Vec::new();
    let tmp = scratch(&mut stack, &mut heap, mx * n);
    for b in 0..n {
        let cb = &c[n * b..n * (b + 1)];
        for qx in 0..mx {
            let row = &ax[qx * n..(qx + 1) * n];
            tmp[qx + mx * b] = row.iter().zip(cb).map(|(x, y)| x * y).sum();
        }
    }
    for qy in 0..my {
        let row = &ay[qy * n..(qy + 1) * n];
        for qx in 0..mx {
            let mut s = 0.0;
            for b in 0..n {
                s += row[b] * tmp[qx + mx * b];
            }
            out[qx + mx * qy] = s;
        }
    }
}

/// Transpose of [`eval_tensor`]: `out[a + n*b] = sum_q vals[qx + mx*qy] * ax[qx*n + a] * ay[qy*n + b]`.
pub fn integrate_tensor(vals: &[f64], ax: &[f64], ay: &[f64], n: usize, out: &mut [f64]) {
    let mx = ax.len() / n;
    let my = ay.len() / n;
    debug_assert_eq!(vals.len(), mx * my);
    let mut stack = [0.0; SCRATCH];
    let mut heap = Vec::new();
    let tmp = scratch(&mut stack, &mut heap, n * my);
    for qy in 0..my {
        let line = &vals[mx * qy..mx * (qy + 1)];
        for qx in 0..mx {
            let v = line[qx];
            if v == 0.0 {
                continue;
            }
            let row = &ax[qx * n..(qx + 1) * n];
            for a in 0..n {
                tmp[a + n * qy] += v * row[a];
            }
        }
    }
    for b in 0..n {
        for a in 0..n {
            let mut s = 0.0;
            for qy in 0..my {
                s += ay[qy * n + b] * tmp[a + n * qy];
            }
            out[a + n * b] = s;
        }
    }
}

/// Dense `N x N` (row-major, `N = n*n`) matrix
/// `M[(a,b),(c,d)] = sum_q f[q] v[qx,a] v[qx,c] v[qy,b] v[qy,d]`.
///
/// `f` must already include quadrature weights.
pub fn weighted_mass(f: &[f64], v: &[f64], n: usize, out: &mut [f64]) {
    let m = v.len() / n;
    let big = n * n;
    debug_assert_eq!(f.len(), m * m);
    debug_assert_eq!(out.len(), big * big);
    // t[qy][a][c] = sum_qx f[qx,qy] v[qx,a] v[qx,c]
    let mut t = vec![0.0; m * big];
    for (qy, tq) in t.chunks_exact_mut(big).enumerate() {
        for (qx, row) in v.chunks_exact(n).enumerate() {
            let fq = f[qx + m * qy];
            for (a, dst) in tq.chunks_exact_mut(n).enumerate() {
                let fa = fq * row[a];
                for (d, r) in dst.iter_mut().zip(row) {
                    *d += fa * r;
                }
            }
        }
    }
    out.fill(0.0);
    for (tq, row) in t.chunks_exact(big).zip(v.chunks_exact(n)) {
        for b in 0..n {
            for d in 0..n {
                let s = row[b] * row[d];
                for (a, trow) in tq.chunks_exact(n).enumerate() {
                    let start = (a + n * b) * big + n * d;
                    for (o, x) in out[start..start + n].iter_mut().zip(trow) {
                        *o += s * x;
                    }
                }
            }
        }
    }
}

/// Symmetric `2N x 2N` block matrix (column-major, `N = n*n`) with blocks
/// `[[Mxx, Mxy], [Mxy^T, Myy]]`, each block as in [`weighted_mass`] with
/// kernels `fxx`, `fxy`, `fyy`.
pub fn weighted_mass_2x2(
    fxx: &[f64],
    fxy: &[f64],
    fyy: &[f64],
    v: &[f64],
    n: usize,
    out: &mut [f64],
) {
    let m = v.len() / n;
    let big = n * n;
    let two = 2 * big;
    debug_assert_eq!(out.len(), two * two);
    // t[qy][a*n + c][kernel]
    let mut stack = [0.0; SCRATCH];
    let mut heap = Vec::new();
    let t = scratch(&mut stack, &mut heap, m * big * 3);
    for qy in 0..m {
        let tq = &mut t[qy * big * 3..(qy + 1) * big * 3];
        for (qx, row) in v.chunks_exact(n).enumerate() {
            let q = qx + m * qy;
            let (fa, fb, fc) = (fxx[q], fxy[q], fyy[q]);
            for a in 0..n {
                let ra = row[a];
                for c in 0..n {
                    let p = ra * row[c];
                    let k = 3 * (a * n + c);
                    tq[k] += fa * p;
                    tq[k + 1] += fb * p;
                    tq[k + 2] += fc * p;
                }
            }
        }
    }
    out.fill(0.0);
    for (qy, row) in v.chunks_exact(n).enumerate() {
        let tq = &t[qy * big * 3..(qy + 1) * big * 3];
        for d in 0..n {
            for c in 0..n {
                let j = c + n * d;
                let (col_x, col_y) = (j * two, (big + j) * two);
                for b in 0..n {
                    let s = row[b] * row[d];
                    for a in 0..n {
                        let i = a + n * b;
                        let k = 3 * (a * n + c);
                        out[col_x + i] += s * tq[k];
                        out[col_y + i] += s * tq[k + 1];
                        out[col_y + big + i] += s * tq[k + 2];
                    }
                }
            }
        }
    }
    // lower-left block is the transpose of the upper-right one
    for j in 0..big {
        for i in 0..big {
            out[j * two + big + i] = out[(big + i) * two + j];
        }
    }
}
