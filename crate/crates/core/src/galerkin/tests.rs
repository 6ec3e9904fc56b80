use super::*;
use crate::potential::PotentialKind;
use crate::presets::{random_band_limited, Preset};
use crate::stress::molecular_field;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solver(grid: &Grid, params: ModelParams, scheme: SchemeParams, kind: PotentialKind) -> SpectralSolver<f64> {
    SpectralSolver::new(grid, params, scheme, Potential::new(kind).unwrap(), None).unwrap()
}

fn l2_diff(a: &VectorField<f64>, b: &VectorField<f64>) -> f64 {
    let d = a.axpy(-1.0, b);
    d.inner(&d).sqrt()
}

fn l2(a: &VectorField<f64>) -> f64 {
    a.inner(a).sqrt()
}

#[test]
fn scheme_validation_messages() {
    let bad_r = SchemeParams { r: 3.5, ..Default::default() };
    assert!(bad_r.validate()[0].contains("scheme.r must lie in (3, 10/3)"));
    let bad_m = SchemeParams { m: 64, n: 32, ..Default::default() };
    assert!(bad_m.validate()[0].contains("M must be <= scheme.N"));
    assert!(SchemeParams::default().validate().is_empty());
    let g = Grid::torus(2, 32).unwrap();
    assert_eq!(SchemeParams { n: 17, m: 8, ..Default::default() }.validate_for_grid(&g).len(), 1);
}

#[test]
fn leray_removes_parallel_part() {
    let g = Grid::torus(2, 8).unwrap();
    let f = Fourier::<f64>::new(&g);
    let mut s = Spectrum::zeros(&g);
    let idx = g.index(1, 0, 0);
    s.comps[0][idx] = Complex::new(1.0, 0.0);
    s.comps[1][idx] = Complex::new(1.0, 0.0);
    f.leray(&mut s);
    assert_eq!(s.comps[0][idx], Complex::new(0.0, 0.0));
    assert_eq!(s.comps[1][idx], Complex::new(1.0, 0.0));
}

#[test]
fn leray_is_idempotent_and_divergence_free() {
    let g = Grid::torus(2, 16).unwrap();
    let f = Fourier::<f64>::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let v = random_band_limited::<f64>(&g, 7, &mut rng);
        let p = leray_project(&f, &v).unwrap();
        let pp = leray_project(&f, &p).unwrap();
        assert!(l2_diff(&p, &pp) < 1e-12);
        assert!(f.divergence(&p).unwrap().max_abs() < 1e-10);
    }
    let tg = Preset::TaylorGreen.build::<f64>(&g, 1.0, 0).0;
    assert!(l2_diff(&leray_project(&f, &tg).unwrap(), &tg) < 1e-12);
}

#[test]
fn truncation_examples() {
    let g = Grid::torus(2, 16).unwrap();
    let f = Fourier::<f64>::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let v = random_band_limited::<f64>(&g, 8, &mut rng);
    assert!(l2_diff(&truncate_modes(&f, &v, 8).unwrap(), &v) < 1e-12);
    let mode = VectorField::<f64>::from_fn(&g, |x| [(4.0 * x[0]).cos(), 0.0, (4.0 * x[1]).sin()]);
    assert!(truncate_modes(&f, &mode, 3).unwrap().max_abs() < 1e-14);
    for k in 0..=8 {
        assert!(l2(&truncate_modes(&f, &v, k).unwrap()) <= l2(&v) + 1e-14);
    }
    assert!(matches!(truncate_modes(&f, &v, 9), Err(FieldError::CutoffOutOfRange { cutoff: 9, nyquist: 8 })));
}

#[test]
fn r_laplacian_examples() {
    let g = Grid::torus(2, 32).unwrap();
    let f = Fourier::<f64>::new(&g);
    assert_eq!(r_laplacian_term(&f, &VectorField::zeros(&g), 3.2, 4).unwrap().max_abs(), 0.0);

    // |∇u|_F = 1 everywhere for u = (cos x₂, sin x₂, 0).
    let u = VectorField::<f64>::from_fn(&g, |x| [x[1].cos(), x[1].sin(), 0.0]);
    let t = r_laplacian_term(&f, &u, 3.2, 4).unwrap();
    let gu = f.gradient(&u).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            for (a, b) in t.comps[i][j].iter().zip(&gu.comps[i][j]) {
                assert!((a - b / 4.0).abs() < 1e-12);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let u = random_band_limited::<f64>(&g, 4, &mut rng);
        let t = r_laplacian_term(&f, &u, 3.2, 8).unwrap();
        let gu = f.gradient(&u).unwrap();
        let lhs = t.contract_integral(&gu);
        let lr = crate::fields::lp_norm(&gu, 3.2).unwrap().powf(3.2) / 8.0;
        assert!((lhs - lr).abs() <= 1e-10 * lr.max(1.0), "{lhs} vs {lr}");
    }
}

#[test]
fn director_heat_mode_decays_at_backward_euler_rate() {
    let g = Grid::torus(2, 16).unwrap();
    let s = solver(&g, ModelParams::default(), SchemeParams { n: 5, m: 5, dt: 0.01, ..Default::default() }, PotentialKind::Zero);
    let d0 = VectorField::<f64>::from_fn(&g, |x| [x[0].sin(), 0.0, 0.0]);
    let state = SolverState::new(VectorField::zeros(&g), d0.clone()).unwrap();
    let d1 = s.director_step(&state, &state.u, None).unwrap();
    let expected = d0.scaled(1.0 / 1.01);
    assert!(d1.axpy(-1.0, &expected).max_abs() < 1e-12);
}

#[test]
fn aligned_director_is_an_equilibrium() {
    let g = Grid::torus(2, 16).unwrap();
    let s = solver(&g, ModelParams::default(), SchemeParams { n: 5, m: 5, ..Default::default() }, PotentialKind::default());
    let d0 = VectorField::<f64>::constant(&g, [0.6, 0.0, 0.8]);
    let state = SolverState::new(VectorField::zeros(&g), d0.clone()).unwrap();
    let d1 = s.director_step(&state, &state.u, None).unwrap();
    assert!(d1.axpy(-1.0, &d0).max_abs() < 1e-12);
}

#[test]
fn rest_state_is_preserved() {
    let g = Grid::torus(2, 16).unwrap();
    let mut s = solver(&g, ModelParams::default(), SchemeParams { n: 8, m: 4, ..Default::default() }, PotentialKind::default());
    let (u0, d0) = Preset::Rest.build::<f64>(&g, 1.0, 0);
    let (u1, p) = s.velocity_step(&SolverState::new(u0.clone(), d0.clone()).unwrap(), &d0).unwrap();
    assert_eq!(u1.max_abs(), 0.0);
    assert_eq!(p.max_abs(), 0.0);
    let mut state = s.initial_state(&u0, &d0).unwrap();
    for _ in 0..100 {
        s.advance(&mut state).unwrap();
    }
    assert!(state.u.max_abs() < 1e-12);
    assert!(state.d.axpy(-1.0, &d0).max_abs() < 1e-12);
}

#[test]
fn taylor_green_decays_at_implicit_euler_rate() {
    let g = Grid::torus(2, 16).unwrap();
    let mu = 0.7;
    let dt = 0.01;
    let params = ModelParams { mu, ..Default::default() };
    let scheme = SchemeParams { n: 8, m: 8, dt, regularize: false, ..Default::default() };
    let mut s = solver(&g, params, scheme, PotentialKind::default());
    let (u0, d0) = Preset::TaylorGreen.build::<f64>(&g, 1.0, 0);
    // The director is held fixed so that the elastic stress vanishes identically.
    let mut state = s.initial_state(&u0, &d0).unwrap();
    for _ in 0..5 {
        let (u1, _) = s.velocity_step(&state, &d0).unwrap();
        let expected = state.u.scaled(1.0 / (1.0 + 2.0 * mu * dt));
        let err = u1.axpy(-1.0, &expected).max_abs();
        assert!(err < 1e-10, "{err}");
        state.u = u1;
    }
}

#[test]
fn mollifier_off_matches_plain_galerkin_update() {
    let g = Grid::torus(2, 32).unwrap();
    let params = ModelParams { alpha: 0.3, ..Default::default() };
    let scheme = SchemeParams { n: 10, m: 10, dt: 1e-3, regularize: false, ..Default::default() };
    let mut s = solver(&g, params, scheme, PotentialKind::default());
    let (u0, d0) = Preset::Smooth.build::<f64>(&g, 0.5, 3);
    let state = s.initial_state(&u0, &d0).unwrap();
    let (u1, _) = s.velocity_step(&state, &state.d).unwrap();

    let f = s.fourier();
    let uh = f.forward(&state.u);
    let gu = f.gradient_of(&uh);
    let gd = f.gradient(&state.d).unwrap();
    let g_mol = molecular_field(&f.laplacian(&state.d).unwrap(), &s.potential().grad_field(&state.d)).unwrap();
    let sigma = crate::stress::elastic_stress_from_g(&state.d, &gd, &g_mol, &params);
    let conv = crate::stress::transport(&state.u, &gu).unwrap();
    let mut rhs = f.tensor_divergence(&sigma);
    rhs.add_scaled(-1.0, &f.forward(&conv));
    let mut next = uh.clone();
    next.add_scaled(1e-3, &rhs);
    f.leray(&mut next);
    f.truncate(&mut next, 10);
    for c in 0..3 {
        for (idx, v) in next.comps[c].iter_mut().enumerate() {
            *v /= 1.0 + 1e-3 * f.k_squared(idx);
        }
    }
    let expected = f.inverse(&next);
    assert!(u1.axpy(-1.0, &expected).max_abs() < 1e-12);
}

#[test]
fn velocity_stays_in_galerkin_space() {
    let g = Grid::torus(2, 32).unwrap();
    let scheme = SchemeParams { n: 6, m: 3, dt: 1e-3, ..Default::default() };
    let mut s = solver(&g, ModelParams::default(), scheme, PotentialKind::default());
    let (u0, d0) = Preset::Smooth.build::<f64>(&g, 1.0, 5);
    let mut state = s.initial_state(&u0, &d0).unwrap();
    for _ in 0..10 {
        let rec = s.advance(&mut state).unwrap();
        assert!(rec.divmax <= 1e-10);
        let uh = s.fourier().forward(&state.u);
        for c in 0..3 {
            for (idx, v) in uh.comps[c].iter().enumerate() {
                if s.fourier().mode_linf(idx) > 6 {
                    assert!(v.norm() < 1e-10, "mode {idx} = {v}");
                }
            }
        }
    }
}

/// Semi-discrete right-hand sides, assembled from first principles for the RK4 oracle.
struct Oracle<'a> {
    f: &'a Fourier<f64>,
    params: ModelParams,
    w: &'a Potential<f64>,
    cut: usize,
}

impl Oracle<'_> {
    fn director_rate(&self, u: &VectorField<f64>, d: &VectorField<f64>) -> VectorField<f64> {
        let g = d.grid.clone();
        let gd = self.f.gradient(d).unwrap();
        let gu = self.f.gradient(u).unwrap();
        let lap = self.f.laplacian(d).unwrap();
        let mut out = VectorField::zeros(&g);
        let a = self.params.alpha;
        for idx in 0..g.num_points() {
            let (dv, uv, gdv, guv, lv) = (d.at(idx), u.at(idx), gd.at(idx), gu.at(idx), lap.at(idx));
            let gw = self.w.eval_grad_w(&dv);
            let mut r = [0.0; 3];
            for i in 0..3 {
                let adv: f64 = (0..3).map(|j| uv[j] * gdv[i][j]).sum();
                let ad: f64 = (0..3).map(|j| guv[i][j] * dv[j]).sum();
                let atd: f64 = (0..3).map(|j| guv[j][i] * dv[j]).sum();
                r[i] = -adv + a * ad - (1.0 - a) * atd + self.params.gamma * (lv[i] - gw[i]);
            }
            out.set(idx, r);
        }
        truncate_modes(self.f, &out, self.cut).unwrap()
    }
}

#[test]
fn director_step_matches_fine_rk4() {
    let g = Grid::torus(2, 16).unwrap();
    let params = ModelParams { alpha: 0.7, ..Default::default() };
    let dt = 1e-3;
    let scheme = SchemeParams { n: 5, m: 5, dt, ..Default::default() };
    let mut s = solver(&g, params, scheme, PotentialKind::default());
    let (u0, d0) = Preset::Smooth.build::<f64>(&g, 1.0, 9);
    let state = s.initial_state(&u0, &d0).unwrap();
    let d1 = s.director_step(&state, &state.u, None).unwrap();

    let w = Potential::new(PotentialKind::default()).unwrap();
    let oracle = Oracle { f: s.fourier(), params, w: &w, cut: 5 };
    let h = dt / 1000.0;
    let mut d = state.d.clone();
    for _ in 0..1000 {
        let k1 = oracle.director_rate(&state.u, &d);
        let k2 = oracle.director_rate(&state.u, &d.axpy(h / 2.0, &k1));
        let k3 = oracle.director_rate(&state.u, &d.axpy(h / 2.0, &k2));
        let k4 = oracle.director_rate(&state.u, &d.axpy(h, &k3));
        d = d.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4);
    }
    let rel = l2_diff(&d, &d1) / l2(&d);
    assert!(rel < 1e-4, "relative difference {rel}");
}

#[test]
fn picard_agrees_with_decoupled_to_second_order() {
    let g = Grid::torus(2, 32).unwrap();
    let (u0, d0) = Preset::Smooth.build::<f64>(&g, 1.0, 21);
    let mut diffs = Vec::new();
    for dt in [4e-3, 2e-3, 1e-3] {
        let base = SchemeParams { n: 10, m: 5, dt, ..Default::default() };
        let picard = SchemeParams { picard: Picard::On { max_iters: 50, tol: 1e-9 }, ..base };
        let mut a = solver(&g, ModelParams::default(), base, PotentialKind::default());
        let mut b = solver(&g, ModelParams::default(), picard, PotentialKind::default());
        let mut sa = a.initial_state(&u0, &d0).unwrap();
        let mut sb = b.initial_state(&u0, &d0).unwrap();
        a.advance(&mut sa).unwrap();
        b.advance(&mut sb).unwrap();
        diffs.push(l2_diff(&sa.u, &sb.u) + l2_diff(&sa.d, &sb.d));
    }
    for w in diffs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.0).contains(&ratio), "ratios from {diffs:?}");
    }
}

#[test]
fn picard_failure_reports_trace() {
    let g = Grid::torus(2, 16).unwrap();
    let scheme = SchemeParams { n: 5, m: 5, picard: Picard::On { max_iters: 2, tol: 1e-300 }, ..Default::default() };
    let mut s = solver(&g, ModelParams::default(), scheme, PotentialKind::default());
    let (u0, d0) = Preset::Smooth.build::<f64>(&g, 1.0, 2);
    let mut state = s.initial_state(&u0, &d0).unwrap();
    match s.advance(&mut state) {
        Err(SolverError::PicardDiverged { step: 1, iters: 2, trace }) => assert_eq!(trace.len(), 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn runaway_energy_aborts() {
    let g = Grid::torus(2, 16).unwrap();
    let scheme = SchemeParams { n: 5, m: 5, dt: 1.0, ..Default::default() };
    let mut s = solver(&g, ModelParams::default(), scheme, PotentialKind::default());
    let u0 = VectorField::zeros(&g);
    let d0 = VectorField::constant(&g, [30.0, 0.0, 0.0]);
    let mut state = s.initial_state(&u0, &d0).unwrap();
    let err = s.advance(&mut state).unwrap_err();
    assert!(matches!(err, SolverError::CflAbort { step: 1, .. }), "{err:?}");
    assert!(err.is_numerical());
    assert_eq!(state.step_index, 0);
}

#[test]
fn non_finite_initial_data_is_rejected() {
    let g = Grid::torus(2, 16).unwrap();
    let mut s = solver(&g, ModelParams::default(), SchemeParams { n: 5, m: 5, ..Default::default() }, PotentialKind::default());
    let mut d0 = VectorField::constant(&g, [1.0, 0.0, 0.0]);
    d0.comps[2][7] = f64::NAN;
    let err = s.initial_state(&VectorField::zeros(&g), &d0).unwrap_err();
    assert_eq!(err, SolverError::Field(FieldError::NonFinite { component: "d0[2]".into() }));
}

#[test]
fn nonzero_mean_forcing_is_rejected() {
    let g = Grid::torus(2, 16).unwrap();
    let f = VectorField::constant(&g, [1.0, 0.0, 0.0]);
    let w = Potential::new(PotentialKind::default()).unwrap();
    let r = SpectralSolver::new(&g, ModelParams::default(), SchemeParams { n: 5, m: 5, ..Default::default() }, w, Some(f));
    assert!(matches!(r, Err(SolverError::Invalid(_))));
}

#[test]
fn single_precision_runs() {
    let g = Grid::torus(2, 16).unwrap();
    let w = Potential::<f32>::new(PotentialKind::default()).unwrap();
    let mut s = SpectralSolver::new(&g, ModelParams::default(), SchemeParams { n: 5, m: 5, ..Default::default() }, w, None).unwrap();
    let (u0, d0) = Preset::Smooth.build::<f32>(&g, 1.0, 1);
    let mut state = s.initial_state(&u0, &d0).unwrap();
    for _ in 0..10 {
        s.advance(&mut state).unwrap();
    }
    let h = s.history();
    assert!(h.last().unwrap().total(1.0) < h[0].total(1.0));
}
