use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use uwdg::diagnostics::l2_error;
use uwdg::flux::{FluxConfig, FluxSetup};
use uwdg::mesh::{make_mesh, Mesh1D, MeshKind};
use uwdg::projection::{project_l2, project_star, DGFunction, PlaneWave};
use uwdg::solver::*;
use uwdg::UwdgError;

type C = Complex64;

fn families() -> [FluxConfig; 4] {
    [
        FluxConfig::central(),
        FluxConfig::alternating(1.0),
        FluxConfig::new(0.0, 3.0, 0.0),
        FluxConfig::new(0.25, 5.0, 0.1),
    ]
}

fn random_dg(mesh: &Arc<Mesh1D>, k: usize, rng: &mut ChaCha8Rng) -> DGFunction {
    let coeffs = (0..mesh.n_cells() * (k + 1))
        .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    DGFunction::from_coeffs(mesh.clone(), k, coeffs)
}

fn operator(mesh: Arc<Mesh1D>, k: usize, cfg: FluxConfig) -> DGOperator {
    DGOperator::new(Arc::new(FluxSetup::new(mesh, k, cfg).unwrap()))
}

fn conj(u: &DGFunction) -> DGFunction {
    DGFunction::from_coeffs(u.mesh.clone(), u.k, u.coeffs.iter().map(|c| c.conj()).collect())
}

/// Size of the operator's entries, used to make tolerances relative.
fn weak_scale(op: &DGOperator, u: &DGFunction, v: &DGFunction) -> f64 {
    let a: f64 = op.weak_action(u).iter().map(|c| c.norm()).sum();
    let b: f64 = v.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    a * b
}

#[test]
fn bilinear_form_is_symmetric_and_real_on_conjugates() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mesh = Arc::new(make_mesh(0.0, 2.0 * PI, 12, MeshKind::Perturbed { fraction: 0.2, seed: 3 }).unwrap());
    for cfg in families() {
        for k in [2, 3] {
            let op = operator(mesh.clone(), k, cfg);
            for _ in 0..100 {
                let u = random_dg(&mesh, k, &mut rng);
                let v = random_dg(&mesh, k, &mut rng);
                let scale = weak_scale(&op, &u, &v).max(weak_scale(&op, &v, &u));
                let d = apply_bilinear(&op, &u, &v) - apply_bilinear(&op, &v, &u);
                assert!(d.norm() <= 1e-12 * scale, "{cfg} k={k}");
                let self_form = apply_bilinear(&op, &v, &conj(&v));
                assert!(self_form.im.abs() <= 1e-12 * weak_scale(&op, &v, &v), "{cfg} k={k}");
            }
        }
    }
}

#[test]
fn semi_discrete_scheme_conserves_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mesh = Arc::new(make_mesh(0.0, 2.0 * PI, 10, MeshKind::Perturbed { fraction: 0.1, seed: 8 }).unwrap());
    for cfg in families() {
        for k in 2..=4 {
            let op = operator(mesh.clone(), k, cfg);
            for _ in 0..20 {
                let v = random_dg(&mesh, k, &mut rng);
                let r = time_derivative(&op, &v);
                let residual = 2.0 * r.inner(&v).re;
                let scale = r.l2_norm() * v.l2_norm();
                assert!(residual.abs() <= 1e-12 * scale, "{cfg} k={k}: {residual} vs {scale}");
            }
        }
    }
}

#[test]
fn time_derivative_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mesh = Arc::new(Mesh1D::uniform(0.0, 1.0, 8).unwrap());
    let op = operator(mesh.clone(), 3, FluxConfig::new(0.1, 2.0, 0.2));
    let u = random_dg(&mesh, 3, &mut rng);
    let v = random_dg(&mesh, 3, &mut rng);
    let (a, b) = (C::new(0.3, -1.2), C::new(2.0, 0.5));
    let lhs = time_derivative(&op, &u.scale(a).add(&v.scale(b)));
    let rhs = time_derivative(&op, &u).scale(a).add(&time_derivative(&op, &v).scale(b));
    let scale = lhs.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    assert!(lhs.sub(&rhs).coeffs.iter().all(|c| c.norm() <= 1e-13 * scale));
}

#[test]
fn constants_are_in_the_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mesh = Arc::new(make_mesh(0.0, 3.0, 9, MeshKind::Perturbed { fraction: 0.2, seed: 1 }).unwrap());
    for cfg in families() {
        let op = operator(mesh.clone(), 3, cfg);
        let mut u = DGFunction::zeros(mesh.clone(), 3);
        for j in 0..9 {
            u.cell_mut(j)[0] = C::new(1.5, -0.5);
        }
        let v = random_dg(&mesh, 3, &mut rng);
        assert!(apply_bilinear(&op, &u, &v).norm() < 1e-12);
        assert!(time_derivative(&op, &u).l2_norm() < 1e-12);
    }
}

#[test]
fn matrix_free_equals_assembled() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mesh = Arc::new(make_mesh(0.0, 2.0 * PI, 11, MeshKind::Perturbed { fraction: 0.2, seed: 2 }).unwrap());
    for cfg in families() {
        for k in 2..=4 {
            let op = operator(mesh.clone(), k, cfg);
            let u = random_dg(&mesh, k, &mut rng);
            let a = time_derivative(&op, &u);
            let b = op.time_derivative_matrix_free(&u);
            let scale = a.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                assert!((x - y).norm() <= 1e-13 * scale, "{cfg} k={k}");
            }
        }
    }
}

#[test]
fn discrete_operator_is_consistent_for_a_plane_wave() {
    let f = PlaneWave::new(3.0);
    for k in [2, 3] {
        let mut res = Vec::new();
        for n in [20, 40, 80] {
            let setup = Arc::new(FluxSetup::new(Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n).unwrap()), k, FluxConfig::central()).unwrap());
            let op = DGOperator::new(setup.clone());
            let u = project_star(&setup, &f, 0.0).unwrap();
            let r = time_derivative(&op, &u).sub(&u.scale(C::new(0.0, -9.0)));
            res.push(r.l2_norm() / u.l2_norm());
        }
        let order = (res[1] / res[2]).log2();
        assert!(order > k as f64 + 0.7, "k={k} order {order}");
    }
}

#[test]
fn rk4_matches_taylor_polynomial() {
    let lambda = 2.7;
    let dt = 0.13;
    let u0 = [C::new(1.0, 0.5), C::new(-0.2, 0.3)];
    let f = |u: &[C]| u.iter().map(|x| x * C::new(0.0, lambda)).collect::<Vec<_>>();
    let z = C::new(0.0, lambda * dt);
    let amp = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
    let out = rk4_step_with(f, &u0, dt);
    for (a, b) in out.iter().zip(&u0) {
        assert!((a - b * amp).norm() < 1e-15);
    }
}

#[test]
fn zero_stays_zero() {
    let mesh = Arc::new(Mesh1D::uniform(0.0, 1.0, 8).unwrap());
    let op = operator(mesh.clone(), 2, FluxConfig::central());
    let z = DGFunction::zeros(mesh, 2);
    assert_eq!(rk4_step(&op, &z, 1e-3).l2_norm(), 0.0);
    let out = integrate(&op, &z, TimeScheme::new(0.05, 0.01)).unwrap();
    assert_eq!(out.solution.l2_norm(), 0.0);
}

#[test]
fn fourier_and_physical_paths_agree() {
    let f = PlaneWave::new(3.0);
    for (k, cfg) in [(2, FluxConfig::central()), (3, FluxConfig::new(0.25, 5.0, 0.0)), (3, FluxConfig::alternating(-1.0))] {
        let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 16).unwrap());
        let setup = Arc::new(FluxSetup::new(mesh.clone(), k, cfg).unwrap());
        let op = DGOperator::new(setup);
        let u0 = project_l2(&f, 0.0, &mesh, k);
        let scheme = TimeScheme::new(TimeScheme::default_c(k), 0.05);
        let a = integrate_with(&op, &u0, scheme, StepperPath::Fourier).unwrap();
        let b = integrate_with(&op, &u0, scheme, StepperPath::Physical).unwrap();
        assert_eq!(a.steps, b.steps);
        assert!(a.solution.sub(&b.solution).l2_norm() < 1e-12 * u0.l2_norm(), "{cfg} k={k}");
    }
}

#[test]
fn fourier_path_needs_uniform_mesh() {
    let mesh = Arc::new(make_mesh(0.0, 1.0, 8, MeshKind::Perturbed { fraction: 0.1, seed: 0 }).unwrap());
    let op = operator(mesh.clone(), 2, FluxConfig::alternating(1.0));
    let u0 = DGFunction::zeros(mesh, 2);
    assert!(integrate_with(&op, &u0, TimeScheme::new(0.05, 0.01), StepperPath::Fourier).is_err());
}

#[test]
fn integration_conserves_norm_up_to_time_stepping_drift() {
    let f = PlaneWave::new(3.0);
    let mesh = Arc::new(make_mesh(0.0, 2.0 * PI, 20, MeshKind::Perturbed { fraction: 0.1, seed: 5 }).unwrap());
    let op = operator(mesh.clone(), 2, FluxConfig::alternating(1.0));
    let u0 = project_l2(&f, 0.0, &mesh, 2);
    let out = integrate(&op, &u0, TimeScheme::new(0.01, 0.2)).unwrap();
    let drift = out.solution.l2_norm() / u0.l2_norm() - 1.0;
    assert!(drift.abs() < 1e-6, "drift {drift}");
    assert!(drift <= 0.0, "RK4 on an imaginary spectrum is dissipative");
    assert!(out.norm_history.len() >= 2);
    assert_eq!(out.norm_history.last().unwrap().0, 0.2);
    assert!(l2_error(&out.solution, &f, 0.2) < 0.1 * u0.l2_norm());
}

#[test]
fn too_large_step_is_reported_unstable() {
    let f = PlaneWave::new(1.0);
    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 20).unwrap());
    let op = operator(mesh.clone(), 2, FluxConfig::central());
    let u0 = project_l2(&f, 0.0, &mesh, 2);
    match integrate(&op, &u0, TimeScheme::new(50.0, 1.0)) {
        Err(UwdgError::Unstable { dt, growth }) => {
            assert!(dt > 0.0);
            assert!(growth > 10.0);
        }
        other => panic!("expected instability, got {:?}", other.map(|o| o.steps)),
    }
}

#[test]
fn time_scheme_lands_on_end_time() {
    let s = TimeScheme::new(0.05, 1.0);
    let h = 2.0 * PI / 40.0;
    let dt = s.dt(h);
    assert!((dt - 0.05 * h.powf(2.5)).abs() < 1e-18);
    let (n, last) = s.steps(h);
    assert!(last > 0.0 && last <= dt * (1.0 + 1e-12));
    assert!(((n - 1) as f64 * dt + last - 1.0).abs() < 1e-12);
    assert_eq!(TimeScheme::new(0.05, 0.0).steps(h), (0, 0.0));
    let (n, last) = TimeScheme::new(0.1, 1.0).steps(1.0);
    assert_eq!(n, 10);
    assert!((last - 0.1).abs() < 1e-12);
    assert_eq!(TimeScheme::default_c(2), 0.05);
    assert_eq!(TimeScheme::default_c(3), 0.01);
}

#[test]
fn norm_examples() {
    let mesh = Arc::new(make_mesh(0.0, 1.0, 5, MeshKind::Perturbed { fraction: 0.2, seed: 1 }).unwrap());
    let mut u = DGFunction::zeros(mesh.clone(), 2);
    u.cell_mut(2)[0] = C::new(1.0, 0.0);
    assert!((l2_norm(&u) - mesh.size(2).sqrt()).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let v = random_dg(&mesh, 3, &mut rng);
    let zero = uwdg::projection::FnField(|_x: f64, _t: f64, _d: usize| C::from(0.0));
    assert!((l2_norm(&v) - l2_error(&v, &zero, 0.0)).abs() < 1e-12);
}
