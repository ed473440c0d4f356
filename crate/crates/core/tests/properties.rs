use proptest::prelude::*;

use kerr_dg::constitutive::{
    assemble_nonlinear_mass, newton_electric_update, newton_residual_and_jacobian, NewtonSettings,
};
use kerr_dg::diagnostics::{energy_components, BoundaryAccumulator};
use kerr_dg::field::{evaluate_volume, FieldState, MaterialField};
use kerr_dg::mesh::Mesh;
use kerr_dg::operator::{discrete_energy_rate_identity, DgProblem, FluxMode};
use kerr_dg::projection::{project_2d, Projector2d};
use kerr_dg::space::DgSpace;

fn problem(n: usize, k: usize, chi1: f64, chi3: f64, c0: f64) -> DgProblem {
    let sp = DgSpace::with_degree(Mesh::uniform(0.0, 1.0, 0.0, 2.0, n, n).unwrap(), k).unwrap();
    let mats = MaterialField::constant(&sp, 1.0, 1.3, chi1, chi3).unwrap();
    DgProblem::new(sp, mats, c0).unwrap()
}

fn state_from(p: &DgProblem, seed: &[f64]) -> FieldState {
    let n = p.space.n_dofs();
    let pick = |off: usize| {
        (0..n)
            .map(|i| seed[(i * 7 + off) % seed.len()] * ((i % 5) as f64 - 2.0) / 2.0)
            .collect()
    };
    FieldState::from_parts(&p.space, pick(0), pick(3), pick(5), 0.0).unwrap()
}

fn setup() -> impl Strategy<Value = (usize, usize, f64, f64, f64, Vec<f64>)> {
    (
        1usize..4,
        0usize..4,
        0.0..1.0f64,
        0.0..2.0f64,
        0.0..1.0f64,
        prop::collection::vec(-1.0..1.0f64, 11..13),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_rate_identity_holds((n, k, chi1, chi3, c0, seed) in setup()) {
        let p = problem(n, k, chi1, chi3, c0);
        let st = state_from(&p, &seed);
        let r = discrete_energy_rate_identity(&p, &st, None).unwrap();
        prop_assert!(r.defect().abs() <= 1e-11 * r.scale().max(1e-300));
        prop_assert!(r.boundary_dissipation >= 0.0);
    }

    #[test]
    fn energy_terms_scale_homogeneously((n, k, chi1, chi3, _c0, seed) in setup(), lambda in 0.1..3.0f64) {
        let p = problem(n, k, chi1, chi3, 0.0);
        let st = state_from(&p, &seed);
        let mut scaled = st.clone();
        for v in scaled.ex.iter_mut().chain(scaled.ey.iter_mut()).chain(scaled.hz.iter_mut()) {
            *v *= lambda;
        }
        let (qe, qh, q4) = energy_components(&p, &st);
        let (se, sh, s4) = energy_components(&p, &scaled);
        prop_assert!(qe >= 0.0 && qh >= 0.0 && q4 >= 0.0);
        let l2 = lambda * lambda;
        prop_assert!((se - l2 * qe).abs() <= 1e-12 * (se + 1.0));
        prop_assert!((sh - l2 * qh).abs() <= 1e-12 * (sh + 1.0));
        prop_assert!((s4 - l2 * l2 * q4).abs() <= 1e-12 * (s4 + 1.0));
    }

    #[test]
    fn nonlinear_mass_is_spd((n, k, chi1, chi3, _c0, seed) in setup()) {
        let p = problem(n, k, chi1, chi3, 0.0);
        let st = state_from(&p, &seed);
        let vol = evaluate_volume(&st, &p.space);
        for c in 0..p.space.n_cells() {
            let m = assemble_nonlinear_mass(&p, c, vol.ex(c), vol.ey(c)).matrix;
            let asym = (&m - m.transpose()).amax();
            prop_assert!(asym <= 1e-13 * m.amax());
            prop_assert!(m.clone().cholesky().is_some());
        }
    }

    #[test]
    fn newton_update_solves_the_cell_equations((n, k, chi1, chi3, c0, seed) in setup(), dt in 1e-3..5e-2f64) {
        let p = problem(n, k, chi1, chi3, c0);
        let st = state_from(&p, &seed);
        let g0 = p.residual(&st, FluxMode::FullyDiscretePair, None);
        let (ex, ey, _) =
            newton_electric_update(&p, (&st.ex, &st.ey), (&g0.rx, &g0.ry), dt, NewtonSettings::default()).unwrap();
        let nm = p.space.n_modes();
        for c in 0..p.space.n_cells() {
            let r = c * nm..(c + 1) * nm;
            let (res, _) = newton_residual_and_jacobian(
                &p, c,
                (&ex[r.clone()], &ey[r.clone()]),
                (&st.ex[r.clone()], &st.ey[r.clone()]),
                (&g0.rx[r.clone()], &g0.ry[r]),
                dt,
            );
            let scale = 1.0 + dt * g0.rx.iter().chain(&g0.ry).fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(res.iter().all(|v| v.abs() <= 1e-10 * scale));
        }
    }

    #[test]
    fn projections_reproduce_tensor_polynomials(k in 0usize..4, coef in prop::collection::vec(-2.0..2.0f64, 16), x0 in -1.0..1.0f64, w in 0.2..2.0f64) {
        let sp = DgSpace::with_degree(Mesh::uniform(x0, x0 + w, 0.0, 1.0, 2, 3).unwrap(), k).unwrap();
        let poly = |x: f64, y: f64| {
            let mut v = 0.0;
            for j in 0..=k {
                for i in 0..=k {
                    v += coef[i + 4 * j] * x.powi(i as i32) * y.powi(j as i32);
                }
            }
            v
        };
        let reference = project_2d(Projector2d::Pi4, poly, &sp);
        for which in [Projector2d::Pi1, Projector2d::Pi2, Projector2d::Pi3] {
            let c = project_2d(which, poly, &sp);
            let d = c.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(d <= 1e-11 * (1.0 + reference.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        }
    }

    #[test]
    fn snapshot_round_trip_is_exact((n, k, _chi1, _chi3, _c0, seed) in setup()) {
        let p = problem(n, k, 0.0, 0.0, 0.0);
        let st = state_from(&p, &seed);
        let mut buf = Vec::new();
        st.write_snapshot(&p.space, &mut buf).unwrap();
        let back = FieldState::read_snapshot(&p.space, buf.as_slice(), 0.0).unwrap();
        prop_assert_eq!(back.ex, st.ex);
        prop_assert_eq!(back.ey, st.ey);
        prop_assert_eq!(back.hz, st.hz);
    }

    #[test]
    fn boundary_accumulator_is_nondecreasing(rates in prop::collection::vec(0.0..5.0f64, 1..40), dt in 1e-4..1e-1f64) {
        let mut acc = BoundaryAccumulator::default();
        let mut last = 0.0;
        for (i, r) in rates.iter().enumerate() {
            acc.advance(i as f64 * dt, *r);
            prop_assert!(acc.value >= last);
            last = acc.value;
        }
    }
}

#[test]
fn residual_is_bitwise_independent_of_thread_count() {
    let p = problem(5, 2, 0.4, 1.0, 0.5);
    let seed: Vec<f64> = (0..12)
        .map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0)
        .collect();
    let st = state_from(&p, &seed);
    let eval = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let r = p.residual(&st, FluxMode::SemiDiscrete, None);
            let e = energy_components(&p, &st);
            (r.rx, r.ry, r.rz, e)
        })
    };
    assert_eq!(eval(1), eval(4));
}
