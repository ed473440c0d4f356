//! Built-in reference problems on the unit square.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::MaterialModel;

/// `(x, y, t) -> [Ex, Ey, Hz]`.
pub type FieldFn = Arc<dyn Fn(f64, f64, f64) -> [f64; 3] + Send + Sync>;
/// `(x, y, t) -> [Jx, Jy]`.
pub type SourceFn = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    /// `(r, s, p, q)`.
    pub domain: (f64, f64, f64, f64),
    pub materials: MaterialModel,
    /// Initial fields, evaluated at `t = 0`.
    pub initial: FieldFn,
    pub exact: Option<FieldFn>,
    pub source: Option<SourceFn>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("materials", &self.materials)
            .field("exact", &self.exact.is_some())
            .field("source", &self.source.is_some())
            .finish()
    }
}

const UNIT: (f64, f64, f64, f64) = (0.0, 1.0, 0.0, 1.0);

impl Scenario {
    /// Replaces `chi3`. A nonzero value invalidates any linear exact solution.
    pub fn with_chi3(mut self, chi3: f64) -> Self {
        self.materials.chi3 = crate::field::Coefficient::Constant(chi3);
        if chi3 != 0.0 && self.name == "cavity" {
            self.exact = None;
        }
        self
    }

    pub fn source_at(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self.source.as_ref().map_or([0.0, 0.0], |j| j(x, y, t))
    }
}

/// PEC eigenmode `Hz = cos(m pi x) cos(n pi y) cos(w t)` of the linear
/// cavity with relative permittivity `eps_r`.
pub fn cavity_mode(m: u32, n: u32, eps_r: f64) -> Result<Scenario> {
    if m == 0 && n == 0 {
        return Err(Error::InvalidArgument("cavity mode needs m + n > 0".into()));
    }
    if !(eps_r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_r = {eps_r} must be positive"
        )));
    }
    let (kx, ky) = (m as f64 * PI, n as f64 * PI);
    let omega = ((kx * kx + ky * ky) / eps_r).sqrt();
    let fields: FieldFn = Arc::new(move |x, y, t| {
        let (cx, sx) = ((kx * x).cos(), (kx * x).sin());
        let (cy, sy) = ((ky * y).cos(), (ky * y).sin());
        let st = (omega * t).sin();
        [
            -ky / (eps_r * omega) * cx * sy * st,
            kx / (eps_r * omega) * sx * cy * st,
            cx * cy * (omega * t).cos(),
        ]
    });
    Ok(Scenario {
        name: "cavity".into(),
        domain: UNIT,
        materials: MaterialModel::constant(1.0, 1.0, eps_r - 1.0, 0.0),
        initial: fields.clone(),
        exact: Some(fields),
        source: None,
    })
}

/// Angular frequency of [`cavity_mode`].
pub fn cavity_frequency(m: u32, n: u32, eps_r: f64) -> f64 {
    PI * ((m * m + n * n) as f64 / eps_r).sqrt()
}

/// Manufactured solution with the current density that makes it exact:
/// `E = A cos(t) (-cos(pi x) sin(pi y), sin(pi x) cos(pi y))`,
/// `Hz = -(2 pi A / mu0) cos(pi x) cos(pi y) sin(t)`.
pub fn manufactured_kerr(amplitude: f64) -> Scenario {
    manufactured_kerr_with(amplitude, 1.0, 1.0, 1.0, 1.0)
}

pub fn manufactured_kerr_with(
    amplitude: f64,
    eps0: f64,
    mu0: f64,
    chi1: f64,
    chi3: f64,
) -> Scenario {
    let a = amplitude;
    let fields: FieldFn = Arc::new(move |x, y, t| {
        let (cx, sx) = ((PI * x).cos(), (PI * x).sin());
        let (cy, sy) = ((PI * y).cos(), (PI * y).sin());
        [
            -a * cx * sy * t.cos(),
            a * sx * cy * t.cos(),
            -2.0 * PI * a / mu0 * cx * cy * t.sin(),
        ]
    });
    let source: SourceFn = Arc::new(move |x, y, t| {
        let (cx, sx) = ((PI * x).cos(), (PI * x).sin());
        let (cy, sy) = ((PI * y).cos(), (PI * y).sin());
        let (ex, ey) = (-a * cx * sy, a * sx * cy);
        let c = t.cos();
        // d/dt D = eps0 c'(t) [(1 + chi1) + 3 chi3 c(t)^2 |e|^2] e
        let g = -eps0 * t.sin() * ((1.0 + chi1) + 3.0 * chi3 * c * c * (ex * ex + ey * ey));
        let curl = 2.0 * PI * PI * a / mu0 * t.sin();
        [g * ex - curl * cx * sy, g * ey + curl * sx * cy]
    });
    Scenario {
        name: "manufactured_kerr".into(),
        domain: UNIT,
        materials: MaterialModel::constant(eps0, mu0, chi1, chi3),
        initial: fields.clone(),
        exact: Some(fields),
        source: Some(source),
    }
}

/// Gaussian `Hz` hump with zero electric field and no source.
pub fn gaussian_pulse(
    center: (f64, f64),
    width: f64,
    amplitude: f64,
    chi3: f64,
) -> Result<Scenario> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pulse width {width} must be positive"
        )));
    }
    let initial: FieldFn = Arc::new(move |x, y, _| {
        let r2 = (x - center.0).powi(2) + (y - center.1).powi(2);
        [0.0, 0.0, amplitude * (-r2 / (width * width)).exp()]
    });
    Ok(Scenario {
        name: "gaussian_pulse".into(),
        domain: UNIT,
        materials: MaterialModel::constant(1.0, 1.0, 0.0, chi3),
        initial,
        exact: None,
        source: None,
    })
}

/// Identically zero fields.
pub fn zero(chi3: f64) -> Scenario {
    let f: FieldFn = Arc::new(|_, _, _| [0.0; 3]);
    Scenario {
        name: "zero".into(),
        domain: UNIT,
        materials: MaterialModel::constant(1.0, 1.0, 0.0, chi3),
        initial: f.clone(),
        exact: Some(f),
        source: None,
    }
}
