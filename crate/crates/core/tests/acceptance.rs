//! Acceptance suite. Runs every criterion in order, prints one line each
//! and exits with failure if any gating criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kerr_dg::basis::gauss_legendre;
use kerr_dg::constitutive::{
    identity_sweep, midpoint_constitutive_delta, newton_residual_and_jacobian,
};
use kerr_dg::diagnostics::{convergence_rates, fully_discrete_source_bound, l2_error_scalar};
use kerr_dg::driver::{
    convergence_study, run_to_end, ConvergenceAxis, Integrator, Simulation, SimulationSetup,
};
use kerr_dg::field::{evaluate_volume, FieldState, MaterialField, MaterialModel};
use kerr_dg::mesh::Mesh;
use kerr_dg::operator::{discrete_energy_rate_identity, DgProblem, SourceSample};
use kerr_dg::projection::{project_2d, Flavor, Projector2d};
use kerr_dg::scenario::{cavity_mode, gaussian_pulse, manufactured_kerr};
use kerr_dg::space::DgSpace;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Largest Newton iteration count seen in the stepping criteria.
#[derive(Default)]
struct Shared {
    newton: Vec<(&'static str, usize)>,
}

fn seeded(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DgProblem {
    let (x0, y0) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mesh = Mesh::uniform(
        x0,
        x0 + rng.gen_range(0.5..2.0),
        y0,
        y0 + rng.gen_range(0.5..2.0),
        n,
        n + 1,
    )
    .unwrap();
    let space = DgSpace::with_degree(mesh, k).unwrap();
    let model = MaterialModel::constant(
        rng.gen_range(0.5..2.0),
        rng.gen_range(0.5..2.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..2.0),
    );
    let mats = MaterialField::sample(&model, &space).unwrap();
    DgProblem::new(space, mats, rng.gen_range(0.0..1.0)).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, space: &DgSpace) -> FieldState {
    let n = space.n_dofs();
    let mut v = || {
        (0..n)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect::<Vec<f64>>()
    };
    FieldState::from_parts(space, v(), v(), v(), 0.0).unwrap()
}

// --- 1 ------------------------------------------------------------------

fn identities(_: &mut Shared) -> Outcome {
    const TOL: f64 = 1e-11;
    let sweep = identity_sweep(100_000, 1);
    // weak form: (C(a; b), Phi) . (a + b) against quadrature of the telescoped energy density
    let mut rng = seeded(1);
    let mut weak = 0.0f64;
    for _ in 0..200 {
        let k = rng.gen_range(0..=3);
        let p = random_problem(&mut rng, 2, k);
        let a = random_state(&mut rng, &p.space);
        let b = random_state(&mut rng, &p.space);
        let (va, vb) = (evaluate_volume(&a, &p.space), evaluate_volume(&b, &p.space));
        let c = rng.gen_range(0..p.space.n_cells());
        let nm = p.space.n_modes();
        let d = midpoint_constitutive_delta(
            &p,
            c,
            (a.cell_ex(c), a.cell_ey(c)),
            (b.cell_ex(c), b.cell_ey(c)),
        );
        let lhs: f64 = (0..nm)
            .map(|i| {
                d[i] * (a.cell_ex(c)[i] + b.cell_ex(c)[i])
                    + d[nm + i] * (a.cell_ey(c)[i] + b.cell_ey(c)[i])
            })
            .sum();
        let (el, ec) = (p.eps_linear(c), p.eps_cubic(c));
        let jac = p.space.cell(c).jacobian();
        let (mut rhs, mut scale) = (0.0, 0.0);
        for q in 0..p.space.n_quad() {
            let a2 = va.ex(c)[q].powi(2) + va.ey(c)[q].powi(2);
            let b2 = vb.ex(c)[q].powi(2) + vb.ey(c)[q].powi(2);
            let w = p.space.quad_weight(q) * jac;
            rhs += w * (el[q] * (a2 - b2) + 1.5 * ec[q] * (a2 * a2 - b2 * b2));
            scale += w * (el[q] * (a2 + b2) + 1.5 * ec[q] * (a2 * a2 + b2 * b2));
        }
        weak = weak.max((lhs - rhs).abs() / scale);
    }
    let worst = sweep.cubic.max(sweep.telescoping).max(weak);
    outcome(
        worst <= TOL,
        format!(
            "1e5 samples: cubic {:.1e}, telescoping {:.1e}; 200 cells weak form {:.1e} (tol {TOL:.0e})",
            sweep.cubic, sweep.telescoping, weak
        ),
    )
}

// --- 2 ------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Functional {
    /// `int_a^b u ((x - a)/h)^j dx`
    Moment(usize),
    /// `u(a)` or `u(b)`
    Left,
    Right,
}

fn functionals(flavor: Flavor, k: usize) -> Vec<Functional> {
    match flavor {
        Flavor::Plain => (0..=k).map(Functional::Moment).collect(),
        Flavor::Plus => (0..k)
            .map(Functional::Moment)
            .chain([Functional::Left])
            .collect(),
        Flavor::Minus => (0..k)
            .map(Functional::Moment)
            .chain([Functional::Right])
            .collect(),
    }
}

/// Applies `fx (x) fy` to `g` on `[ax, bx] x [ay, by]` with a 24-point rule.
fn apply_tensor(
    g: &dyn Fn(f64, f64) -> f64,
    fx: Functional,
    fy: Functional,
    bx: (f64, f64),
    by: (f64, f64),
) -> f64 {
    let rule = gauss_legendre(24).unwrap();
    let axis = |f: Functional, (a, b): (f64, f64)| -> Vec<(f64, f64)> {
        let h = b - a;
        match f {
            Functional::Left => vec![(a, 1.0)],
            Functional::Right => vec![(b, 1.0)],
            Functional::Moment(j) => rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&xi, &w)| {
                    let s = 0.5 * (xi + 1.0);
                    (a + s * h, 0.5 * h * w * s.powi(j as i32))
                })
                .collect(),
        }
    };
    let (px, py) = (axis(fx, bx), axis(fy, by));
    px.iter()
        .map(|&(x, wx)| py.iter().map(|&(y, wy)| wx * wy * g(x, y)).sum::<f64>())
        .sum()
}

fn projections(_: &mut Shared) -> Outcome {
    const TOL: f64 = 1e-12;
    let mut rng = seeded(2);
    let mut cond = 0.0f64;
    for k in 0..=3 {
        for _ in 0..5 {
            let (x0, y0) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let bx = (x0, x0 + rng.gen_range(0.1..1.0));
            let by = (y0, y0 + rng.gen_range(0.1..1.0));
            let space =
                DgSpace::with_degree(Mesh::uniform(bx.0, bx.1, by.0, by.1, 1, 1).unwrap(), k)
                    .unwrap();
            let (al, be, ga) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-3.0..3.0),
            );
            let u = move |x: f64, y: f64| (al * x + be * y).exp() + (ga * x * y).sin();
            for which in Projector2d::ALL {
                let c = project_2d(which, u, &space);
                let s = space.cell(0).scale();
                let basis = &space.basis;
                let pu = |x: f64, y: f64| {
                    let px = basis.eval_at(2.0 * (x - bx.0) / (bx.1 - bx.0) - 1.0);
                    let py = basis.eval_at(2.0 * (y - by.0) / (by.1 - by.0) - 1.0);
                    let n1 = k + 1;
                    let mut v = 0.0;
                    for b in 0..n1 {
                        for a in 0..n1 {
                            v += c[a + n1 * b] * px[a] * py[b];
                        }
                    }
                    s * v
                };
                let diff = |x: f64, y: f64| u(x, y) - pu(x, y);
                let (kx, ky) = which.factors();
                for fx in functionals(kx.flavor, k) {
                    for fy in functionals(ky.flavor, k) {
                        let d = apply_tensor(&diff, fx, fy, bx, by);
                        let m = apply_tensor(&u, fx, fy, bx, by);
                        cond = cond.max(d.abs() / (1.0 + m.abs()));
                    }
                }
            }
        }
    }
    // reproduction of Q_k
    let mut repro = 0.0f64;
    for k in 0..=3 {
        let space =
            DgSpace::with_degree(Mesh::uniform(0.0, 1.5, -0.5, 1.0, 3, 2).unwrap(), k).unwrap();
        let coef: Vec<f64> = (0..(k + 1) * (k + 1))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let p = |x: f64, y: f64| {
            let mut v = 0.0;
            for j in 0..=k {
                for i in 0..=k {
                    v += coef[i + (k + 1) * j] * x.powi(i as i32) * y.powi(j as i32);
                }
            }
            v
        };
        for which in Projector2d::ALL {
            let c = project_2d(which, p, &space);
            repro = repro.max(l2_error_scalar(&c, p, None::<fn(f64, f64) -> f64>, &space).unwrap());
        }
    }
    // orders
    let u = |x: f64, y: f64| (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
    let mut worst_margin = f64::INFINITY;
    let mut orders = Vec::new();
    for k in 1..=3 {
        let mut min_k = f64::INFINITY;
        for which in Projector2d::ALL {
            let rows = kerr_dg::projection::projection_error_study(which, u, k, 4, 4).unwrap();
            let rates = convergence_rates(&rows).unwrap();
            let r = rates.iter().copied().fold(f64::INFINITY, f64::min);
            min_k = min_k.min(r);
        }
        worst_margin = worst_margin.min(min_k - (k as f64 + 1.0 - 0.2));
        orders.push(format!("k={k}: {min_k:.2}"));
    }
    outcome(
        cond <= TOL && repro <= TOL && worst_margin >= 0.0,
        format!(
            "conditions {cond:.1e}, Q_k reproduction {repro:.1e} (tol {TOL:.0e}); min orders {} (need >= k+0.8)",
            orders.join(", ")
        ),
    )
}

// --- 3 ------------------------------------------------------------------

fn rk4_drift(setup_fn: &dyn Fn() -> SimulationSetup, dt: f64) -> f64 {
    let mut s = setup_fn();
    s.dt = Some(dt);
    let mut sim = Simulation::new(&s).unwrap();
    let sum = run_to_end(&mut sim, None, |_| Ok(())).unwrap();
    (sum.final_energy - sum.initial_energy).abs() / sum.initial_energy
}

fn semidiscrete_conservation(_: &mut Shared) -> Outcome {
    const TOL: f64 = 1e-8;
    const MIN_LOG2: f64 = 3.5;
    const MAX_LOG2: f64 = 5.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["cavity", "pulse"] {
        for c0 in [0.0, 0.5] {
            let make = || {
                let sc = match name {
                    "cavity" => cavity_mode(1, 1, 1.0).unwrap().with_chi3(1.0),
                    _ => gaussian_pulse((0.5, 0.5), 0.1, 1.0, 1.0).unwrap(),
                };
                let mut s = SimulationSetup::new(sc, 16, 2, 1.0);
                s.integrator = Integrator::Rk4Reference;
                s.c0 = c0;
                s
            };
            let coarse = rk4_drift(&make, 2e-3);
            let fine = rk4_drift(&make, 1e-3);
            let l2 = (coarse / fine).log2();
            pass &= fine < TOL && (MIN_LOG2..=MAX_LOG2).contains(&l2);
            parts.push(format!(
                "{name} c0={c0}: {fine:.1e} (x{:.1})",
                coarse / fine
            ));
        }
    }
    outcome(
        pass,
        format!(
            "drift at dt=1e-3 < {TOL:.0e}, halving factor in [2^{MIN_LOG2}, 2^{MAX_LOG2}]: {}",
            parts.join("; ")
        ),
    )
}

// --- 4 ------------------------------------------------------------------

fn energy_rate(_: &mut Shared) -> Outcome {
    const TOL: f64 = 1e-10;
    let mut rng = seeded(4);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let k = i % 4;
        let n = rng.gen_range(1..=4);
        let p = random_problem(&mut rng, n, k);
        let state = random_state(&mut rng, &p.space);
        let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let src = (i % 2 == 0)
            .then(|| SourceSample::sample(&p.space, |x, y| [a * (x * y).cos(), b * (x - y).sin()]));
        let r = discrete_energy_rate_identity(&p, &state, src.as_ref()).unwrap();
        worst = worst.max(r.defect().abs() / r.scale());
    }
    outcome(
        worst <= TOL,
        format!("100 random states: max relative defect {worst:.1e} (tol {TOL:.0e})"),
    )
}

// --- 5 ------------------------------------------------------------------

fn fully_discrete_stability(shared: &mut Shared) -> Outcome {
    const STEPS: usize = 10_000;
    const BOUND: f64 = 3.0;
    let pulse = gaussian_pulse((0.5, 0.5), 0.1, 1.0, 1.0).unwrap();
    let mut s = SimulationSetup::new(pulse, 32, 1, 1.0);
    let dt = Simulation::new(&s).unwrap().plan.dt;
    s.dt = Some(dt);
    s.t_final = STEPS as f64 * dt;
    let mut sim = Simulation::new(&s).unwrap();
    let sum = run_to_end(&mut sim, None, |_| Ok(())).unwrap();
    let ratio = sum.max_energy / sum.initial_energy;
    shared.newton.push(("pulse", sum.newton_max_iterations));

    let mut m = SimulationSetup::new(manufactured_kerr(1.0), 32, 1, 1.0);
    m.newton = s.newton;
    let mut sim = Simulation::new(&m).unwrap();
    let mut energies = Vec::new();
    let sm = run_to_end(&mut sim, None, |s| {
        energies.push(s.monitored_energy());
        Ok(())
    })
    .unwrap();
    let (lhs, rhs) = fully_discrete_source_bound(
        &energies,
        &sim.source_norms_sq,
        sim.plan.dt,
        sim.plan.t_final,
    );
    shared
        .newton
        .push(("manufactured", sm.newton_max_iterations));
    outcome(
        sum.steps == STEPS && ratio <= BOUND && lhs <= rhs,
        format!(
            "pulse, {} steps at dt={dt:.3e}: max E^n/E^0 = {ratio:.4} (<= {BOUND}); manufactured T=1: max E^n = {lhs:.3e} <= {rhs:.3e}",
            sum.steps
        ),
    )
}

// --- 6 / 9 --------------------------------------------------------------

/// Finest-pair spatial orders for the cavity and manufactured problems.
fn spatial_orders(c0: f64, levels: usize) -> Vec<(&'static str, usize, f64)> {
    let mut out = Vec::new();
    for (name, sc) in [
        ("cavity", cavity_mode(1, 1, 1.0).unwrap()),
        ("manufactured", manufactured_kerr(1.0)),
    ] {
        for k in [1, 2] {
            let mut s = SimulationSetup::new(sc.clone(), 8, k, 0.5);
            s.integrator = Integrator::Rk4Reference;
            s.c0 = c0;
            // dt = h / 6.25: RK4 time error stays far below the spatial error
            s.dt = Some(0.02);
            let rows = convergence_study(&s, ConvergenceAxis::Space, levels).unwrap();
            out.push((name, k, rows.last().unwrap().order.unwrap()));
        }
    }
    out
}

fn spatial_convergence(_: &mut Shared) -> Outcome {
    const BAND: f64 = 0.25;
    let orders = spatial_orders(0.5, 4);
    let pass = orders
        .iter()
        .all(|&(_, k, o)| (o - (k as f64 + 1.0)).abs() <= BAND);
    let text: Vec<String> = orders
        .iter()
        .map(|(n, k, o)| format!("{n} k={k}: {o:.3}"))
        .collect();
    outcome(
        pass,
        format!(
            "meshes 8..64, finest-pair orders (k+1 +- {BAND}): {}",
            text.join(", ")
        ),
    )
}

fn penalty_free_orders(_: &mut Shared) -> Outcome {
    let orders = spatial_orders(0.0, 3);
    let text: Vec<String> = orders
        .iter()
        .map(|(n, k, o)| format!("{n} k={k}: {o:.3}"))
        .collect();
    let at_least_half = orders.iter().all(|&(_, k, o)| o >= k as f64 + 0.5);
    outcome(
        true,
        format!(
            "informational, c0=0, meshes 8..32: {} ({} >= k+1/2)",
            text.join(", "),
            if at_least_half { "all" } else { "not all" }
        ),
    )
}

// --- 7 ------------------------------------------------------------------

fn temporal_convergence(shared: &mut Shared) -> Outcome {
    const BAND: f64 = 0.3;
    const T: f64 = 0.2;
    let mut s = SimulationSetup::new(manufactured_kerr(1.0), 32, 3, T);
    s.dt = Some(T / 100.0);
    let rows = convergence_study(&s, ConvergenceAxis::Time, 3).unwrap();
    let orders: Vec<f64> = rows.iter().filter_map(|r| r.order).collect();
    let newton = rows.iter().map(|r| r.newton_max_iterations).max().unwrap();
    shared.newton.push(("temporal", newton));
    let pass = orders.iter().all(|o| (o - 2.0).abs() <= BAND);
    outcome(
        pass,
        format!(
            "32x32, k=3, T={T}, dt = T/100, T/200, T/400 vs a T/1600 reference: orders {} (2 +- {BAND})",
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// --- 8 ------------------------------------------------------------------

fn newton_health(shared: &mut Shared) -> Outcome {
    const TOL: f64 = 1e-6;
    const MAX_ITER: usize = 5;
    let mut rng = seeded(8);
    let mut worst = 0.0f64;
    for i in 0..40 {
        let k = i % 4;
        let p = random_problem(&mut rng, 2, k);
        let a = random_state(&mut rng, &p.space);
        let b = random_state(&mut rng, &p.space);
        let g = random_state(&mut rng, &p.space);
        // cell 0 touches both penalised walls
        let c = if i % 2 == 0 { 0 } else { p.space.n_cells() - 1 };
        let dt = rng.gen_range(1e-3..1e-1);
        let (ax, ay) = (a.cell_ex(c).to_vec(), a.cell_ey(c).to_vec());
        let bb = (b.cell_ex(c), b.cell_ey(c));
        let g0 = (g.cell_ex(c), g.cell_ey(c));
        let (_, jac) = newton_residual_and_jacobian(&p, c, (&ax, &ay), bb, g0, dt);
        let nm = p.space.n_modes();
        let h = 1e-5;
        let mut err = 0.0f64;
        for col in 0..2 * nm {
            let shifted = |d: f64| {
                let (mut x, mut y) = (ax.clone(), ay.clone());
                if col < nm {
                    x[col] += d;
                } else {
                    y[col - nm] += d;
                }
                newton_residual_and_jacobian(&p, c, (&x, &y), bb, g0, dt).0
            };
            let (rp, rm) = (shifted(h), shifted(-h));
            for row in 0..2 * nm {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                err = err.max((fd - jac[(row, col)]).abs());
            }
        }
        worst = worst.max(err / jac.amax());
    }
    let iters = shared.newton.iter().map(|&(_, n)| n).max().unwrap_or(0);
    let runs: Vec<String> = shared
        .newton
        .iter()
        .map(|(n, i)| format!("{n} {i}"))
        .collect();
    outcome(
        worst <= TOL && iters <= MAX_ITER && !shared.newton.is_empty(),
        format!(
            "Jacobian vs central differences {worst:.1e} (tol {TOL:.0e}); max Newton iterations {} (<= {MAX_ITER})",
            runs.join(", ")
        ),
    )
}

type Criterion = fn(&mut Shared) -> Outcome;

fn main() {
    let criteria: [(u32, &str, Duration, Criterion); 9] = [
        (
            1,
            "algebraic identities",
            Duration::from_secs(5),
            identities,
        ),
        (2, "projections", Duration::from_secs(30), projections),
        (
            3,
            "semi-discrete energy conservation",
            Duration::from_secs(120),
            semidiscrete_conservation,
        ),
        (
            4,
            "discrete energy-rate identity",
            Duration::from_secs(10),
            energy_rate,
        ),
        (
            5,
            "fully discrete stability",
            Duration::from_secs(120),
            fully_discrete_stability,
        ),
        (
            6,
            "spatial convergence",
            Duration::from_secs(600),
            spatial_convergence,
        ),
        (
            7,
            "temporal convergence",
            Duration::from_secs(300),
            temporal_convergence,
        ),
        (8, "newton health", Duration::from_secs(60), newton_health),
        (
            9,
            "penalty-free orders",
            Duration::from_secs(600),
            penalty_free_orders,
        ),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut shared = Shared::default();
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let o = run(&mut shared);
        let took = start.elapsed();
        let in_time = took <= budget;
        let pass = o.pass && in_time;
        if !pass && id != 9 {
            failed += 1;
        }
        println!(
            "criterion {id} [{}] {name}: {} ({:.1}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
