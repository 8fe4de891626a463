use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use uwdg::basis::{bspline_eval, gauss_rule};
use uwdg::mesh::{make_mesh, Mesh1D, MeshKind};
use uwdg::projection::{project_l2, DGFunction, FnField, PlaneWave};
use uwdg::siac::*;

type C = Complex64;

#[test]
fn bspline_moments_match_quadrature() {
    for order in 1..=6 {
        let mom = bspline_moments(order, 8);
        assert!((mom[0] - 1.0).abs() < 1e-15);
        assert!((mom[2] - order as f64 / 12.0).abs() < 1e-14);
        let rule = gauss_rule(10);
        let half = order as f64 / 2.0;
        for (p, &m) in mom.iter().enumerate() {
            let q: f64 = (0..order)
                .map(|i| {
                    let a = -half + i as f64;
                    rule.integrate_on(a, a + 1.0, |x| bspline_eval(order, x) * x.powi(p as i32))
                })
                .sum();
            assert!((q - m).abs() < 1e-12 * m.abs().max(1.0), "order {order} p {p}");
        }
    }
}

#[test]
fn first_degree_kernel_weights() {
    let spec = kernel_coeffs(1).unwrap();
    let want = [-1.0 / 12.0, 7.0 / 6.0, -1.0 / 12.0];
    for (a, b) in spec.weights.iter().zip(want) {
        assert!((a - b).abs() < 1e-13);
    }
    assert_eq!(spec.order, 2);
    assert_eq!(spec.half_width, 2.0);
}

#[test]
fn kernel_weights_are_symmetric_with_unit_sum() {
    assert!(kernel_coeffs(0).is_err());
    for k in 1..=6 {
        let spec = kernel_coeffs(k).unwrap();
        assert_eq!(spec.weights.len(), 2 * k + 1);
        let n = spec.weights.len();
        for g in 0..n {
            assert_eq!(spec.weights[g], spec.weights[n - 1 - g]);
        }
        assert!((spec.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12, "k={k}");
        let knots = spec.knots();
        assert_eq!(knots.len(), 3 * k + 2);
        assert_eq!(knots[0], -spec.half_width);
        assert!(spec.eval(spec.half_width + 0.01) == 0.0 && spec.eval(-spec.half_width - 0.01) == 0.0);
    }
}

/// `int K(s) (x + s)^m ds` by Gauss quadrature on every knot interval.
fn convolve_monomial(spec: &KernelSpec, x: f64, m: usize) -> f64 {
    let rule = gauss_rule(spec.order + m + 1);
    spec.knots()
        .windows(2)
        .map(|w| rule.integrate_on(w[0], w[1], |s| spec.eval(s) * (x + s).powi(m as i32)))
        .sum()
}

#[test]
fn kernel_reproduces_monomials() {
    for k in 1..=4 {
        let spec = kernel_coeffs(k).unwrap();
        for m in 0..=2 * k + 1 {
            let worst = (0..50)
                .map(|i| {
                    let x = -1.0 + 2.0 * i as f64 / 49.0;
                    (convolve_monomial(&spec, x, m) - x.powi(m as i32)).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst < 1e-9, "k={k} m={m}: {worst}");
        }
    }
}

#[test]
fn constants_are_preserved_everywhere() {
    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 12).unwrap());
    for k in 1..=4 {
        let mut u = DGFunction::zeros(mesh.clone(), k);
        for j in 0..12 {
            u.cell_mut(j)[0] = C::new(2.0, -1.0);
        }
        let spec = kernel_coeffs(k).unwrap();
        for x in [0.0, 0.01, 1.0, PI, 2.0 * PI - 1e-3, 7.5, -0.3] {
            let v = postprocess_value(&u, x, &spec).unwrap();
            assert!((v - C::new(2.0, -1.0)).norm() < 1e-12, "k={k} x={x}");
        }
    }
}

#[test]
fn piecewise_exact_polynomials_are_reproduced() {
    // A long domain keeps the kernel support away from the periodic seam.
    let mesh = Arc::new(Mesh1D::uniform(0.0, 40.0, 40).unwrap());
    for k in 1..=4 {
        let spec = kernel_coeffs(k).unwrap();
        for m in 0..=k {
            let f = FnField(move |x: f64, _t: f64, _d: usize| C::from(((x - 20.0) / 10.0).powi(m as i32)));
            let u = project_l2(&f, 0.0, &mesh, k);
            for x in [12.0, 15.3, 20.0, 24.71, 28.0] {
                let v = postprocess_value(&u, x, &spec).unwrap();
                let want = ((x - 20.0) / 10.0).powi(m as i32);
                assert!((v.re - want).abs() < 1e-10 && v.im.abs() < 1e-14, "k={k} m={m} x={x}");
            }
        }
    }
}

#[test]
fn gauss_rule_per_piece_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 10).unwrap());
    for k in 1..=4 {
        let spec = kernel_coeffs(k).unwrap();
        let coeffs = (0..10 * (k + 1)).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let u = DGFunction::from_coeffs(mesh.clone(), k, coeffs);
        for _ in 0..10 {
            let x = rng.gen_range(0.0..2.0 * PI);
            let a = postprocess_value_with(&u, x, &spec, k + 1).unwrap();
            let b = postprocess_value_with(&u, x, &spec, 2 * (k + 1)).unwrap();
            assert!((a - b).norm() < 1e-13, "k={k}");
        }
    }
}

#[test]
fn post_processing_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mesh = Arc::new(Mesh1D::uniform(-1.0, 1.0, 16).unwrap());
    let spec = kernel_coeffs(2).unwrap();
    let mut random = || {
        let c = (0..48).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        DGFunction::from_coeffs(mesh.clone(), 2, c)
    };
    let (u, v) = (random(), random());
    let (a, b) = (C::new(0.5, 2.0), C::new(-1.0, 0.25));
    let w = u.scale(a).add(&v.scale(b));
    for x in [-0.99, -0.2, 0.0, 0.61] {
        let lhs = postprocess_value(&w, x, &spec).unwrap();
        let rhs = a * postprocess_value(&u, x, &spec).unwrap() + b * postprocess_value(&v, x, &spec).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
    }
}

#[test]
fn nonuniform_meshes_are_rejected() {
    let mesh = Arc::new(make_mesh(0.0, 1.0, 8, MeshKind::Perturbed { fraction: 0.1, seed: 2 }).unwrap());
    let u = DGFunction::zeros(mesh, 2);
    let spec = kernel_coeffs(2).unwrap();
    assert!(postprocess_value(&u, 0.5, &spec).is_err());
    assert!(postprocessed_error(&u, &PlaneWave::new(1.0), 0.0, &spec).is_err());
}

#[test]
fn filtered_projection_error_beats_unfiltered() {
    let f = PlaneWave::new(3.0);
    let spec = kernel_coeffs(2).unwrap();
    let mut errs = Vec::new();
    for n in [20, 40] {
        let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n).unwrap());
        let u = project_l2(&f, 0.0, &mesh, 2);
        let e = postprocessed_error(&u, &f, 0.0, &spec).unwrap();
        assert!(e < uwdg::diagnostics::l2_error(&u, &f, 0.0));
        errs.push(e);
    }
    assert!((errs[0] / errs[1]).log2() > 3.5);
}
