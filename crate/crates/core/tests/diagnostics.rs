use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use uwdg::correction::build_correction;
use uwdg::diagnostics::*;
use uwdg::flux::{scale_flux, FluxConfig, FluxSetup};
use uwdg::mesh::{make_mesh, Mesh1D, MeshKind};
use uwdg::projection::*;

type C = Complex64;

fn setup(n: usize, k: usize, cfg: FluxConfig) -> FluxSetup {
    FluxSetup::new(Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n).unwrap()), k, cfg).unwrap()
}

#[test]
fn metrics_vanish_on_their_defining_projections() {
    let f = PlaneWave::new(3.0);
    for (k, cfg) in [(2, FluxConfig::central()), (3, FluxConfig::alternating(1.0)), (3, FluxConfig::new(0.25, 5.0, 0.0))] {
        let s = setup(21, k, cfg);
        let ps = project_star(&s, &f, 0.2).unwrap();
        let (ef, efx) = flux_errors(&s, &ps, &f, 0.2);
        assert!(ef < 1e-12 && efx < 1e-11, "{cfg}: {ef} {efx}");
        assert!(projection_error(&s, &ps, &f, 0.2).unwrap() < 1e-14);
        let p0 = project_l2(&f, 0.2, &s.mesh, k);
        assert!(cell_average_error(&p0, &f, 0.2) < 1e-14);
    }
}

#[test]
fn l2_error_decreases_at_optimal_rate() {
    let f = PlaneWave::new(3.0);
    let errs: Vec<f64> = [20, 40, 80]
        .iter()
        .map(|&n| {
            let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n).unwrap());
            l2_error(&project_l2(&f, 0.0, &mesh, 2), &f, 0.0)
        })
        .collect();
    let order = (errs[1] / errs[2]).log2();
    assert!((order - 3.0).abs() < 0.1, "{order}");
}

#[test]
fn flux_errors_ignore_corrections() {
    let f = PlaneWave::new(3.0);
    for (k, cfg) in [(3, FluxConfig::central()), (5, FluxConfig::alternating(-1.0))] {
        let s = setup(16, k, cfg);
        let u = project_l2(&f, 0.0, &s.mesh, k);
        let set = build_correction(&s, &f, 0.0, (k - 1) / 2).unwrap();
        let base = flux_errors(&s, &u, &f, 0.0);
        for w in &set.w {
            let shifted = flux_errors(&s, &u.add(&w.scale(C::new(3.0, -2.0))), &f, 0.0);
            assert!((shifted.0 - base.0).abs() < 1e-12 * base.0.max(1.0));
            assert!((shifted.1 - base.1).abs() < 1e-12 * base.1.max(1.0));
        }
    }
}

#[test]
fn point_errors_follow_the_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let zero = FnField(|_x: f64, _t: f64, _d: usize| C::from(0.0));
    let k = 3;
    let small = Arc::new(Mesh1D::uniform(0.0, 1.0, 8).unwrap());
    let large = Arc::new(Mesh1D::uniform(0.0, 2.0, 8).unwrap());
    let coeffs: Vec<C> = (0..8 * (k + 1)).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let u_small = DGFunction::from_coeffs(small.clone(), k, coeffs.clone());
    let u_large = DGFunction::from_coeffs(large.clone(), k, coeffs);
    let pts = vec![special_points(k, 1.0, &scale_flux(FluxConfig::central(), 1.0)).unwrap(); 8];
    let a = point_errors(&u_small, &zero, 0.0, &pts);
    let b = point_errors(&u_large, &zero, 0.0, &pts);
    assert!((a.e_u.unwrap() - b.e_u.unwrap()).abs() < 1e-14);
    assert!((a.e_ux.unwrap() - 2.0 * b.e_ux.unwrap()).abs() < 1e-12);
    assert!((a.e_uxx.unwrap() - 4.0 * b.e_uxx.unwrap()).abs() < 1e-10);
}

#[test]
fn point_errors_on_empty_sets_are_undefined() {
    let f = PlaneWave::new(3.0);
    let s = setup(10, 2, FluxConfig::new(0.3, 0.4, 0.4));
    let pts = special_points_on_mesh(&s).unwrap();
    let u = project_l2(&f, 0.0, &s.mesh, 2);
    let e = point_errors(&u, &f, 0.0, &pts);
    assert!(e.e_u.is_some());
    assert_eq!(e.e_ux, None);
    assert!(e.e_uxx.is_some());
}

#[test]
fn point_errors_vanish_for_exact_polynomials() {
    let mesh = Arc::new(make_mesh(0.0, 1.0, 6, MeshKind::Perturbed { fraction: 0.2, seed: 3 }).unwrap());
    let s = FluxSetup::new(mesh.clone(), 3, FluxConfig::alternating(1.0)).unwrap();
    let f = FnField(|x: f64, _t: f64, d: usize| {
        C::from(match d {
            0 => x * x - 0.5 * x,
            1 => 2.0 * x - 0.5,
            2 => 2.0,
            _ => 0.0,
        })
    });
    let u = project_l2(&f, 0.0, &mesh, 3);
    let e = point_errors(&u, &f, 0.0, &special_points_on_mesh(&s).unwrap());
    assert!(e.e_u.unwrap() < 1e-13 && e.e_ux.unwrap() < 1e-11 && e.e_uxx.unwrap() < 1e-9);
    assert!(l2_error(&u, &f, 0.0) < 1e-13);
}

#[test]
fn observed_order_examples() {
    let o = observed_orders(&[Some(1e-2), Some(2.5e-3)], &[10, 20]);
    assert_eq!(o[0], None);
    assert!((o[1].unwrap() - 2.0).abs() < 1e-12);
    let o = observed_orders(&[Some(3.0), Some(3.0), Some(3.0)], &[10, 20, 40]);
    assert_eq!(o[2], Some(0.0));
    let o = observed_orders(&[Some(1.0), None, Some(0.1), Some(0.0)], &[10, 20, 40, 80]);
    assert_eq!(o, vec![None, None, None, None]);
}

#[test]
fn metric_names_round_trip() {
    for m in Metric::ALL {
        assert_eq!(Metric::parse(m.name()), Some(m));
        assert_eq!(Metric::parse(&m.name().to_uppercase()), Some(m));
    }
    assert_eq!(Metric::parse("E*"), Some(Metric::EStar));
    assert_eq!(Metric::parse("ep"), Some(Metric::EP));
    assert_eq!(Metric::parse("nope"), None);
    assert!(Metric::L2.is_domain_norm() && !Metric::Ef.is_domain_norm());
}

fn row(n: usize, v: Option<f64>) -> ReportRow {
    ReportRow { n, values: vec![(Metric::L2, v)], dt: None, steps: None, annotation: None }
}

#[test]
fn report_orders_need_doubling() {
    let report = ErrorReport {
        metadata: vec![],
        metrics: vec![Metric::L2],
        rows: vec![row(10, Some(1e-2)), row(20, Some(1.25e-3)), row(30, Some(1e-4)), row(60, Some(1.25e-5))],
    };
    let o = report.orders(Metric::L2);
    assert_eq!(o[0], None);
    assert!((o[1].unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(o[2], None);
    assert!((report.finest_order(Metric::L2).unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(report.value(30, Metric::L2), Some(1e-4));
    assert_eq!(report.value(30, Metric::Ef), None);
    assert_eq!(report.ns(), vec![10, 20, 30, 60]);
}
