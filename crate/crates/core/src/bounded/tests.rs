use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::potential::PotentialKind;

fn random_velocity(g: &MacGrid, rng: &mut ChaCha8Rng) -> MacVelocity<f64> {
    let mut u = MacVelocity::zeros(g);
    u.ux.iter_mut().chain(u.uy.iter_mut()).for_each(|v| *v = rng.gen_range(-1.0..1.0));
    g.enforce_no_slip(&mut u);
    u
}

fn random_nodes(g: &MacGrid, rng: &mut ChaCha8Rng) -> Vec<Vec3<f64>> {
    (0..g.num_vertices()).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect()
}

fn dot_nodes(a: &[Vec3<f64>], b: &[Vec3<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).sum()
}

fn dot_faces(a: &MacVelocity<f64>, b: &MacVelocity<f64>) -> f64 {
    a.ux.iter().zip(&b.ux).chain(a.uy.iter().zip(&b.uy)).map(|(x, y)| x * y).sum()
}

fn grids() -> [MacGrid; 2] {
    [MacGrid::new(8, 6, 1.0, 0.8, false).unwrap(), MacGrid::new(8, 6, 2.0, 1.5, true).unwrap()]
}

fn solver(g: &MacGrid, regime: BoundaryRegime, kind: PotentialKind, dt: f64) -> MacSolver<f64> {
    MacSolver::new(g.clone(), ModelParams::default(), Potential::new(kind).unwrap(), regime, dt, 0.0, None).unwrap()
}

#[test]
fn coupling_adjoint_is_exact_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for g in grids() {
        let d = random_nodes(&g, &mut rng);
        let q = random_nodes(&g, &mut rng);
        let u = random_velocity(&g, &mut rng);
        let grad_d = g.director_gradient(&d);
        for alpha in [0.0, 0.3, 1.0] {
            let lhs = dot_nodes(&q, &g.coupling_apply(&d, &grad_d, &u, alpha));
            let rhs = dot_faces(&g.coupling_adjoint(&d, &grad_d, &q, alpha), &u);
            assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn viscous_operator_is_gradient_of_dissipation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for g in grids() {
        let u = random_velocity(&g, &mut rng);
        let v = random_velocity(&g, &mut rng);
        let ku = g.viscous_apply(&u);
        let kv = g.viscous_apply(&v);
        let n2 = g.gradient_norm_sq(&g.velocity_gradient(&u));
        assert!((dot_faces(&ku, &u) - n2).abs() < 1e-10 * n2);
        assert!((dot_faces(&ku, &v) - dot_faces(&u, &kv)).abs() < 1e-10 * n2);
    }
}

#[test]
fn wall_viscous_stencil_uses_reflected_ghosts() {
    let g = MacGrid::square(6, 1.0, false).unwrap();
    let mut u = MacVelocity::<f64>::zeros(&g);
    let k = g.ux_index(3, 0);
    u.ux[k] = 1.0;
    let h2 = g.hx() * g.hy();
    // −Δ_h at the first row: (2 + 1 + 2)/h² with the ghost at −u.
    let lap = g.viscous_apply(&u).ux[k] / h2;
    assert!((lap - 5.0 / (g.hy() * g.hy())).abs() < 1e-9);
}

#[test]
fn convection_conserves_energy_of_solenoidal_fields() {
    for g in grids() {
        let (lx, ly) = (g.lx(), g.ly());
        let psi = |x: [f64; 2]| {
            let (a, b) = (PI * x[0] / lx, PI * x[1] / ly);
            if g.is_periodic() {
                (2.0 * a).sin() * (2.0 * b).cos() + 0.3 * (4.0 * b).sin()
            } else {
                a.sin().powi(2) * b.sin().powi(2) * (1.0 + x[0])
            }
        };
        let u = MacVelocity::<f64>::from_stream_function(&g, psi);
        assert!(g.divergence(&u).iter().all(|v| v.abs() < 1e-12));
        let c = g.convection(&u);
        let e = g.kinetic(&u);
        assert!(g.inner(&c, &u).abs() < 1e-12 * e.max(1.0), "{}", g.inner(&c, &u));
    }
}

#[test]
fn stiffness_matches_reflected_laplacian_and_eigenvalue() {
    let n = 16;
    let g = MacGrid::square(n, 1.0, false).unwrap();
    let h = g.hx();
    let d: Vec<Vec3<f64>> = (0..g.vx())
        .flat_map(|i| (0..g.vy()).map(move |j| (i, j)))
        .map(|(i, _)| [(PI * i as f64 * h).cos(), 0.0, 0.0])
        .collect();
    let lap = g.laplacian(&d);
    let eig = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
    for (l, v) in lap.iter().zip(&d) {
        assert!((l[0] + eig * v[0]).abs() < 1e-9);
    }
    let e = g.elastic(&d);
    assert!((e - eig * dot_weighted(&g, &d)).abs() < 1e-10);
}

fn dot_weighted(g: &MacGrid, d: &[Vec3<f64>]) -> f64 {
    let mut s = 0.0;
    for i in 0..g.vx() {
        for j in 0..g.vy() {
            let v = d[g.vertex(i, j)];
            s += g.vertex_weight(i, j) * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        }
    }
    s
}

#[test]
fn boundary_nodes_run_counterclockwise() {
    let g = MacGrid::new(4, 5, 1.0, 1.0, false).unwrap();
    let nodes = g.boundary_nodes();
    assert_eq!(nodes.len(), 18);
    assert_eq!(&nodes[..5], &[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)]);
    assert_eq!(nodes[9], (4, 5));
    assert_eq!(nodes[13], (0, 5));
    assert_eq!(*nodes.last().unwrap(), (0, 1));
    let total: f64 = nodes.iter().map(|&(i, j)| g.boundary_length(i, j)).sum();
    assert!((total - 2.0 * (g.lx() + g.ly())).abs() < 1e-12);
}

#[test]
fn boundary_data_interpolates_linearly() {
    let h = BoundaryData::new(vec![0.0, 1.0], vec![vec![[0.0, 0.0, 0.0]], vec![[2.0, -2.0, 4.0]]]).unwrap();
    assert_eq!(h.eval(0.25), vec![[0.5, -0.5, 1.0]]);
    assert_eq!(h.eval(-1.0), vec![[0.0; 3]]);
    assert_eq!(h.eval(3.0), vec![[2.0, -2.0, 4.0]]);
    assert!(BoundaryData::new(vec![1.0, 0.5], vec![vec![], vec![]]).is_err());
}

#[test]
fn regime_and_compatibility_are_checked() {
    let g = MacGrid::square(8, 1.0, false).unwrap();
    let missing = BoundaryRegime { kind: BoundaryKind::Dirichlet, h: None };
    assert!(matches!(missing.validate(&g), Err(SolverError::Boundary(_))));
    assert!(BoundaryRegime::periodic().validate(&g).is_err());
    let h = BoundaryData::constant(vec![[1.0, 0.0, 0.0]; g.boundary_nodes().len()]);
    let mut s = solver(&g, BoundaryRegime::dirichlet(h), PotentialKind::default(), 1e-3);
    let err = s.initial_state(0.0, |_| [0.0, 0.0], |_| [0.0, 1.0, 0.0]).unwrap_err();
    assert!(matches!(err, SolverError::Boundary(m) if m.contains("h(0)")));
}

#[test]
fn constant_states_are_fixed_points() {
    let g = MacGrid::square(8, 1.0, false).unwrap();
    let e = [0.0, 0.6, 0.8];
    let h = BoundaryData::constant(vec![e; g.boundary_nodes().len()]);
    for regime in [BoundaryRegime::neumann(), BoundaryRegime::dirichlet(h)] {
        let mut s = solver(&g, regime, PotentialKind::default(), 1e-2);
        let mut st = s.initial_state(0.0, |_| [0.0, 0.0], |_| e).unwrap();
        let d0 = st.d.clone();
        for _ in 0..20 {
            s.advance(&mut st).unwrap();
        }
        assert_eq!(st.u.max_abs(), 0.0);
        for (a, b) in st.d.iter().zip(&d0) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn neumann_cosine_mode_decays_at_backward_euler_rate() {
    let g = MacGrid::square(128, 1.0, false).unwrap();
    let dt = 1e-3;
    let mut s = solver(&g, BoundaryRegime::neumann(), PotentialKind::Zero, dt);
    let mut st = s.initial_state(0.0, |_| [0.0, 0.0], |x| [(PI * x[0]).cos(), 0.0, 0.0]).unwrap();
    let before = st.d.clone();
    s.advance(&mut st).unwrap();
    let factor = dot_nodes(&st.d, &before) / dot_nodes(&before, &before);
    assert!((factor - 1.0 / (1.0 + PI * PI * dt)).abs() < 1e-6);
}

#[test]
fn rest_state_stays_at_rest_with_exact_no_slip() {
    let g = MacGrid::square(16, 1.0, false).unwrap();
    let mut s = solver(&g, BoundaryRegime::neumann(), PotentialKind::default(), 1e-3);
    let mut st = s.initial_state(0.0, |_| [0.0, 0.0], |_| [1.0, 0.0, 0.0]).unwrap();
    for _ in 0..10 {
        s.advance(&mut st).unwrap();
    }
    assert_eq!(st.u.max_abs(), 0.0);
    assert!(s.history().iter().all(|r| r.kinetic == 0.0));
}

/// Vortex whose velocity already vanishes on the walls.
fn vortex(g: &MacGrid) -> MacVelocity<f64> {
    MacVelocity::from_stream_function(g, |x| ((PI * x[0]).sin() * (PI * x[1]).sin()).powi(2) / PI)
}

#[test]
fn vortex_decays_and_matches_fine_step_oracle() {
    let g = MacGrid::square(16, 1.0, false).unwrap();
    // The flow stretches the director; a negligible λ decouples it, leaving Navier-Stokes.
    let params = ModelParams { lambda: 1e-12, ..ModelParams::default() };
    let make = |dt: f64| {
        MacSolver::new(g.clone(), params, Potential::new(PotentialKind::Zero).unwrap(), BoundaryRegime::neumann(), dt, 0.0, None).unwrap()
    };
    let t_end = 0.02;
    let run = |dt: f64| {
        let mut s = make(dt);
        let mut st = s.start(0.0, vortex(&g), vec![[1.0, 0.0, 0.0]; g.num_vertices()]).unwrap();
        let mut last = g.kinetic(&st.u);
        s.run(&mut st, t_end, |st, _| {
            let k = g.kinetic(&st.u);
            assert!(k < last);
            assert!(g.divergence(&st.u).iter().all(|v| v.abs() <= 1e-10));
            for j in 0..g.ny() {
                assert_eq!(st.u.ux[g.ux_index(0, j)], 0.0);
                assert_eq!(st.u.ux[g.ux_index(g.nx(), j)], 0.0);
            }
            last = k;
        })
        .unwrap();
        st.u
    };
    let dt = 2e-3;
    let fine = oracle_rk4(&g, &make(dt), vortex(&g), t_end, dt / 100.0);
    let diff = |u: &MacVelocity<f64>| {
        let mut e = u.clone();
        e.axpy(-1.0, &fine);
        (g.kinetic(&e) / g.kinetic(&fine)).sqrt()
    };
    let (e1, e2) = (diff(&run(dt)), diff(&run(dt / 2.0)));
    assert!(e1 < 1e-1, "{e1}");
    let ratio = e1 / e2;
    assert!((1.6..2.4).contains(&ratio), "{ratio}");
}

/// Classical RK4 on the projected semi-discrete Navier-Stokes system.
fn oracle_rk4(g: &MacGrid, s: &MacSolver<f64>, mut u: MacVelocity<f64>, t_end: f64, dt: f64) -> MacVelocity<f64> {
    let h2 = g.cell_area();
    let rate = |u: &MacVelocity<f64>| {
        let mut r = g.convection(u);
        r.ux.iter_mut().chain(r.uy.iter_mut()).for_each(|v| *v = -*v);
        let k = g.viscous_apply(u);
        r.axpy(-1.0 / h2, &k);
        g.enforce_no_slip(&mut r);
        s.project(&r, None).unwrap().0
    };
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        let k1 = rate(&u);
        let mut y = u.clone();
        y.axpy(dt / 2.0, &k1);
        let k2 = rate(&y);
        let mut y = u.clone();
        y.axpy(dt / 2.0, &k2);
        let k3 = rate(&y);
        let mut y = u.clone();
        y.axpy(dt, &k3);
        let k4 = rate(&y);
        u.axpy(dt / 6.0, &k1);
        u.axpy(dt / 3.0, &k2);
        u.axpy(dt / 3.0, &k3);
        u.axpy(dt / 6.0, &k4);
    }
    u
}

#[test]
fn projection_is_idempotent_and_solenoidal() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for g in grids() {
        let regime = if g.is_periodic() { BoundaryRegime::periodic() } else { BoundaryRegime::neumann() };
        let s = solver(&g, regime, PotentialKind::default(), 1e-3);
        let u = random_velocity(&g, &mut rng);
        let (p, _) = s.project(&u, None).unwrap();
        assert!(g.divergence(&p).iter().all(|v| v.abs() <= 1e-11));
        let (pp, _) = s.project(&p, None).unwrap();
        let mut e = pp.clone();
        e.axpy(-1.0, &p);
        assert!(e.max_abs() < 1e-10);
    }
}

#[test]
fn coupled_neumann_run_dissipates_energy() {
    let g = MacGrid::square(32, 1.0, false).unwrap();
    let mut s = solver(&g, BoundaryRegime::neumann(), PotentialKind::default(), 1e-3);
    let mut st = s
        .start(
            0.0,
            vortex(&g),
            (0..g.vx())
                .flat_map(|i| (0..g.vy()).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let x = g.vertex_coords(i, j);
                    let th = 0.8 * (2.0 * PI * x[0]).sin() * (PI * x[1]).cos();
                    [th.cos(), th.sin(), 0.0]
                })
                .collect(),
        )
        .unwrap();
    s.run(&mut st, 0.05, |_, _| {}).unwrap();
    let lam = s.params().lambda;
    for w in s.history().windows(2) {
        assert!(w[1].total(lam) <= w[0].total(lam));
        assert!(w[1].divmax <= 1e-10);
    }
}

#[test]
fn dirichlet_check_with_constant_trace_has_no_boundary_work() {
    let g = MacGrid::square(16, 1.0, false).unwrap();
    let d0 = |x: [f64; 2]| {
        let th = 0.5 * (PI * x[0]).sin() * (PI * x[1]).sin() + 0.2;
        [th.cos(), th.sin(), 0.0]
    };
    let h = BoundaryData::from_fn(&g, &[0.0], |_, x| d0(x)).unwrap();
    let mut s = solver(&g, BoundaryRegime::dirichlet(h), PotentialKind::default(), 1e-3);
    let mut st = s.initial_state(0.0, |_| [0.0, 0.0], d0).unwrap();
    s.run(&mut st, 0.02, |_, _| {}).unwrap();
    let rep = dirichlet_energy_check(s.history(), s.boundary_history(), s.params(), 1e-8).unwrap();
    assert_eq!(rep.max_abs_boundary_work, 0.0);
    assert!(rep.passed());
}

#[test]
fn dirichlet_check_of_zero_fields_is_zero() {
    let g = MacGrid::square(8, 1.0, false).unwrap();
    let h = BoundaryData::constant(vec![[0.0; 3]; g.boundary_nodes().len()]);
    let mut s = solver(&g, BoundaryRegime::dirichlet(h), PotentialKind::Zero, 1e-3);
    let mut st = s.initial_state(0.0, |_| [0.0, 0.0], |_| [0.0; 3]).unwrap();
    s.run(&mut st, 0.005, |_, _| {}).unwrap();
    let rep = dirichlet_energy_check(s.history(), s.boundary_history(), s.params(), 0.0).unwrap();
    assert!(rep.steps.iter().all(|st| st.residual == 0.0 && st.boundary_work == 0.0 && st.dissipation == 0.0));
}

#[test]
fn dirichlet_check_rejects_neumann_runs() {
    let g = MacGrid::square(8, 1.0, false).unwrap();
    let mut s = solver(&g, BoundaryRegime::neumann(), PotentialKind::default(), 1e-3);
    let mut st = s.initial_state(0.0, |_| [0.0, 0.0], |_| [1.0, 0.0, 0.0]).unwrap();
    s.advance(&mut st).unwrap();
    assert!(dirichlet_energy_check(s.history(), s.boundary_history(), s.params(), 1e-8).is_err());
}

#[test]
fn rotating_trace_balance_residual_is_first_order() {
    let g = MacGrid::square(16, 1.0, false).unwrap();
    let omega = 2.0;
    let base = |x: [f64; 2]| 0.4 * (PI * x[0]).sin() * (PI * x[1]).cos();
    let h = |t: f64, x: [f64; 2]| {
        let th = base(x) + omega * t;
        [th.cos(), th.sin(), 0.0]
    };
    let t_end = 0.02;
    let max_res = |dt: f64| {
        let times: Vec<f64> = (0..=((t_end / dt).round() as usize)).map(|k| k as f64 * dt).collect();
        let data = BoundaryData::from_fn(&g, &times, h).unwrap();
        let mut s = solver(&g, BoundaryRegime::dirichlet(data), PotentialKind::default(), dt);
        let mut st = s.initial_state(0.0, |_| [0.0, 0.0], |x| h(0.0, x)).unwrap();
        s.run(&mut st, t_end, |_, _| {}).unwrap();
        let rep = dirichlet_energy_check(s.history(), s.boundary_history(), s.params(), f64::INFINITY).unwrap();
        assert!(rep.max_abs_boundary_work > 0.0);
        rep.max_abs_residual
    };
    let (a, b) = (max_res(2e-3), max_res(1e-3));
    let ratio = a / b;
    assert!((1.6..2.4).contains(&ratio), "{a} {b} {ratio}");
}

#[test]
fn boundary_driven_growth_from_rest_is_not_a_runaway() {
    let g = MacGrid::square(16, 1.0, false).unwrap();
    let h = |t: f64, _: [f64; 2]| {
        let th = 50.0 * t * t;
        [th.cos(), th.sin(), 0.0]
    };
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 1e-3).collect();
    let data = BoundaryData::from_fn(&g, &times, h).unwrap();
    let mut s = solver(&g, BoundaryRegime::dirichlet(data), PotentialKind::default(), 1e-3);
    let mut st = s.initial_state(0.0, |_| [0.0, 0.0], |x| h(0.0, x)).unwrap();
    s.run(&mut st, 0.02, |_, _| {}).unwrap();
    let e = |k: usize| s.history()[k].total(1.0);
    assert!(e(2) > 10.0 * e(1), "{} {}", e(1), e(2));
}
