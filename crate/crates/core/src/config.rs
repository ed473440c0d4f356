//! Run configuration: flat `key = value` lines with dotted sections,
//! `#` comments and blank lines ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::constitutive::NewtonSettings;
use crate::driver::{Integrator, SimulationSetup};
use crate::error::{Error, Result};
use crate::scenario::{cavity_mode, gaussian_pulse, manufactured_kerr_with, zero, Scenario};
use crate::timestep::HalfStepInit;

const KEYS: &[&str] = &[
    "scenario",
    "scenario.m",
    "scenario.n",
    "scenario.eps_r",
    "scenario.amplitude",
    "scenario.center_x",
    "scenario.center_y",
    "scenario.width",
    "scenario.chi3",
    "mesh.nx",
    "mesh.ny",
    "order",
    "quadrature_nodes",
    "c0",
    "dt",
    "cfl_safety",
    "t_final",
    "c_inv",
    "integrator",
    "init.h_half",
    "newton.tol",
    "newton.max_iter",
    "output.energy",
    "output.snapshot",
    "output.snapshot_stride",
    "output.convergence",
];

/// Scenario parameters that apply to each named scenario.
fn scenario_params(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "cavity" => &[
            "scenario.m",
            "scenario.n",
            "scenario.eps_r",
            "scenario.chi3",
        ],
        "manufactured_kerr" => &["scenario.amplitude", "scenario.chi3"],
        "gaussian_pulse" => &[
            "scenario.amplitude",
            "scenario.center_x",
            "scenario.center_y",
            "scenario.width",
            "scenario.chi3",
        ],
        "zero" => &["scenario.chi3"],
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioSpec {
    Cavity {
        m: u32,
        n: u32,
        eps_r: f64,
        chi3: f64,
    },
    ManufacturedKerr {
        amplitude: f64,
        chi3: f64,
    },
    GaussianPulse {
        center: (f64, f64),
        width: f64,
        amplitude: f64,
        chi3: f64,
    },
    Zero {
        chi3: f64,
    },
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<Scenario> {
        Ok(match *self {
            ScenarioSpec::Cavity { m, n, eps_r, chi3 } => cavity_mode(m, n, eps_r)?.with_chi3(chi3),
            ScenarioSpec::ManufacturedKerr { amplitude, chi3 } => {
                manufactured_kerr_with(amplitude, 1.0, 1.0, 1.0, chi3)
            }
            ScenarioSpec::GaussianPulse {
                center,
                width,
                amplitude,
                chi3,
            } => gaussian_pulse(center, width, amplitude, chi3)?,
            ScenarioSpec::Zero { chi3 } => zero(chi3),
        })
    }

    fn echo(&self, out: &mut String) {
        let _ = match self {
            ScenarioSpec::Cavity { m, n, eps_r, chi3 } => writeln!(
                out,
                "scenario = cavity\nscenario.m = {m}\nscenario.n = {n}\nscenario.eps_r = {eps_r:e}\nscenario.chi3 = {chi3:e}"
            ),
            ScenarioSpec::ManufacturedKerr { amplitude, chi3 } => writeln!(
                out,
                "scenario = manufactured_kerr\nscenario.amplitude = {amplitude:e}\nscenario.chi3 = {chi3:e}"
            ),
            ScenarioSpec::GaussianPulse { center, width, amplitude, chi3 } => writeln!(
                out,
                "scenario = gaussian_pulse\nscenario.amplitude = {amplitude:e}\nscenario.center_x = {:e}\nscenario.center_y = {:e}\nscenario.width = {width:e}\nscenario.chi3 = {chi3:e}",
                center.0, center.1
            ),
            ScenarioSpec::Zero { chi3 } => writeln!(out, "scenario = zero\nscenario.chi3 = {chi3:e}"),
        };
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputConfig {
    pub energy: Option<PathBuf>,
    /// May contain `{step}`; see [`OutputConfig::snapshot_path`].
    pub snapshot: Option<PathBuf>,
    /// Every `snapshot_stride` steps; 0 writes the final state only.
    pub snapshot_stride: usize,
    pub convergence: Option<PathBuf>,
}

impl OutputConfig {
    /// Snapshot file for `step`. With a nonzero stride and no `{step}`
    /// placeholder the step number is appended to the file stem.
    pub fn snapshot_path(&self, step: usize) -> Option<PathBuf> {
        let base = self.snapshot.as_ref()?;
        let text = base.to_string_lossy();
        if text.contains("{step}") {
            return Some(PathBuf::from(text.replace("{step}", &format!("{step:06}"))));
        }
        if self.snapshot_stride == 0 {
            return Some(base.clone());
        }
        let stem = base
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let name = match base.extension() {
            Some(ext) => format!("{stem}_{step:06}.{}", ext.to_string_lossy()),
            None => format!("{stem}_{step:06}"),
        };
        Some(base.with_file_name(name))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub nx: usize,
    pub ny: usize,
    pub order: usize,
    pub quadrature_nodes: usize,
    pub c0: f64,
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    pub t_final: f64,
    pub c_inv: Option<f64>,
    pub integrator: Integrator,
    pub h_half: HalfStepInit,
    pub newton: NewtonSettings,
    pub output: OutputConfig,
    /// Non-fatal remarks produced while parsing.
    pub warnings: Vec<String>,
}

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        let v = self.take::<f64>(key, "a real number")?;
        match v {
            Some(x) if !x.is_finite() => {
                Err(Error::config(key, format!("value {x} is not finite")))
            }
            _ => Ok(v),
        }
    }

    /// Integers are read signed so that negative input is reported as a
    /// range violation rather than a type error.
    fn count(&mut self, key: &str, min: i64) -> Result<Option<usize>> {
        match self.take::<i64>(key, "an integer")? {
            None => Ok(None),
            Some(v) if v < min => Err(Error::config(
                key,
                format!("must be at least {min}, got {v}"),
            )),
            Some(v) => Ok(Some(v as usize)),
        }
    }

    fn required<T>(key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::config(key, "missing required key"))
    }
}

fn check(key: &str, ok: bool, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, message()))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::config(k, "unknown key"));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::config(k, "given more than once"));
        }
    }
    let mut e = Entries { map };
    let mut warnings = Vec::new();

    let name: String = Entries::required("scenario", e.take("scenario", "a scenario name")?)?;
    let Some(allowed) = scenario_params(&name) else {
        return Err(Error::config(
            "scenario",
            format!("unknown scenario `{name}` (cavity, manufactured_kerr, gaussian_pulse, zero)"),
        ));
    };
    if let Some(k) = e
        .map
        .keys()
        .find(|k| k.starts_with("scenario.") && !allowed.contains(&k.as_str()))
    {
        return Err(Error::config(
            k.clone(),
            format!("not a parameter of scenario `{name}`"),
        ));
    }
    let chi3_default = match name.as_str() {
        "gaussian_pulse" | "manufactured_kerr" => 1.0,
        _ => 0.0,
    };
    let chi3 = e.real("scenario.chi3")?.unwrap_or(chi3_default);
    check("scenario.chi3", chi3 >= 0.0, || {
        format!("must be nonnegative, got {chi3}")
    })?;
    let scenario = match name.as_str() {
        "cavity" => {
            let m = e.count("scenario.m", 0)?.unwrap_or(1) as u32;
            let n = e.count("scenario.n", 0)?.unwrap_or(1) as u32;
            check("scenario.m", m + n > 0, || {
                "mode numbers m and n are both zero".into()
            })?;
            let eps_r = e.real("scenario.eps_r")?.unwrap_or(1.0);
            check("scenario.eps_r", eps_r > 0.0, || {
                format!("must be positive, got {eps_r}")
            })?;
            ScenarioSpec::Cavity { m, n, eps_r, chi3 }
        }
        "manufactured_kerr" => ScenarioSpec::ManufacturedKerr {
            amplitude: e.real("scenario.amplitude")?.unwrap_or(1.0),
            chi3,
        },
        "gaussian_pulse" => {
            let width = e.real("scenario.width")?.unwrap_or(0.1);
            check("scenario.width", width > 0.0, || {
                format!("must be positive, got {width}")
            })?;
            ScenarioSpec::GaussianPulse {
                center: (
                    e.real("scenario.center_x")?.unwrap_or(0.5),
                    e.real("scenario.center_y")?.unwrap_or(0.5),
                ),
                width,
                amplitude: e.real("scenario.amplitude")?.unwrap_or(1.0),
                chi3,
            }
        }
        _ => ScenarioSpec::Zero { chi3 },
    };

    let nx = Entries::required("mesh.nx", e.count("mesh.nx", 1)?)?;
    let ny = Entries::required("mesh.ny", e.count("mesh.ny", 1)?)?;
    let order = Entries::required("order", e.count("order", 0)?)?;
    let quadrature_nodes = e
        .count("quadrature_nodes", order as i64 + 1)?
        .unwrap_or(2 * order + 2);
    let c0 = e.real("c0")?.unwrap_or(0.5);
    check("c0", c0 >= 0.0, || format!("must be nonnegative, got {c0}"))?;
    let t_final = Entries::required("t_final", e.real("t_final")?)?;
    check("t_final", t_final >= 0.0, || {
        format!("must be nonnegative, got {t_final}")
    })?;
    let dt = e.real("dt")?;
    if let Some(dt) = dt {
        check("dt", dt > 0.0, || format!("must be positive, got {dt}"))?;
    }
    let cfl = e.real("cfl_safety")?;
    if let Some(s) = cfl {
        check("cfl_safety", s > 0.0 && s <= 1.0, || {
            format!("must lie in (0, 1], got {s}")
        })?;
        if dt.is_some() {
            warnings.push("both `dt` and `cfl_safety` given; using `dt`".to_string());
        }
    }
    let c_inv = e.real("c_inv")?;
    if let Some(c) = c_inv {
        check("c_inv", c > 0.0, || format!("must be positive, got {c}"))?;
    }
    let integrator = match e.map.remove("integrator").as_deref() {
        None | Some("leapfrog") => Integrator::Leapfrog,
        Some("rk4_reference") => Integrator::Rk4Reference,
        Some(v) => {
            return Err(Error::config(
                "integrator",
                format!("expected `leapfrog` or `rk4_reference`, got `{v}`"),
            ))
        }
    };
    let h_half = match e.map.remove("init.h_half").as_deref() {
        None | Some("taylor") => HalfStepInit::Taylor,
        Some("analytic") => HalfStepInit::Analytic,
        Some(v) => {
            return Err(Error::config(
                "init.h_half",
                format!("expected `taylor` or `analytic`, got `{v}`"),
            ))
        }
    };
    let defaults = NewtonSettings::default();
    let tol = e.real("newton.tol")?.unwrap_or(defaults.tol);
    check("newton.tol", tol > 0.0, || {
        format!("must be positive, got {tol}")
    })?;
    let max_iter = e.count("newton.max_iter", 1)?.unwrap_or(defaults.max_iter);
    let output = OutputConfig {
        energy: e.map.remove("output.energy").map(PathBuf::from),
        snapshot: e.map.remove("output.snapshot").map(PathBuf::from),
        snapshot_stride: e.count("output.snapshot_stride", 0)?.unwrap_or(0),
        convergence: e.map.remove("output.convergence").map(PathBuf::from),
    };
    debug_assert!(e.map.is_empty(), "unconsumed keys {:?}", e.map);

    Ok(RunConfig {
        scenario,
        nx,
        ny,
        order,
        quadrature_nodes,
        c0,
        dt,
        cfl_safety: cfl.unwrap_or(0.9),
        t_final,
        c_inv,
        integrator,
        h_half,
        newton: NewtonSettings { tol, max_iter },
        output,
        warnings,
    })
}

impl RunConfig {
    pub fn setup(&self) -> Result<SimulationSetup> {
        let mut s = SimulationSetup::new(self.scenario.build()?, self.nx, self.order, self.t_final);
        s.ny = self.ny;
        s.quadrature_nodes = Some(self.quadrature_nodes);
        s.c0 = self.c0;
        s.dt = self.dt;
        s.cfl_safety = self.cfl_safety;
        s.c_inv = self.c_inv;
        s.newton = self.newton;
        s.integrator = self.integrator;
        s.h_half = self.h_half;
        Ok(s)
    }

    /// The effective configuration in the input format, defaults included.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        self.scenario.echo(&mut out);
        let _ = writeln!(out, "mesh.nx = {}\nmesh.ny = {}", self.nx, self.ny);
        let _ = writeln!(
            out,
            "order = {}\nquadrature_nodes = {}",
            self.order, self.quadrature_nodes
        );
        let _ = writeln!(out, "c0 = {:e}", self.c0);
        match self.dt {
            Some(dt) => writeln!(out, "dt = {dt:e}"),
            None => writeln!(out, "cfl_safety = {:e}", self.cfl_safety),
        }
        .ok();
        let _ = writeln!(out, "t_final = {:e}", self.t_final);
        if let Some(c) = self.c_inv {
            let _ = writeln!(out, "c_inv = {c:e}");
        }
        let integrator = match self.integrator {
            Integrator::Leapfrog => "leapfrog",
            Integrator::Rk4Reference => "rk4_reference",
        };
        let h_half = match self.h_half {
            HalfStepInit::Taylor => "taylor",
            HalfStepInit::Analytic => "analytic",
        };
        let _ = writeln!(out, "integrator = {integrator}\ninit.h_half = {h_half}");
        let _ = writeln!(
            out,
            "newton.tol = {:e}\nnewton.max_iter = {}",
            self.newton.tol, self.newton.max_iter
        );
        for (key, path) in [
            ("output.energy", &self.output.energy),
            ("output.snapshot", &self.output.snapshot),
            ("output.convergence", &self.output.convergence),
        ] {
            if let Some(p) = path {
                let _ = writeln!(out, "{key} = {}", p.display());
            }
        }
        let _ = writeln!(
            out,
            "output.snapshot_stride = {}",
            self.output.snapshot_stride
        );
        out
    }
}
