//! DG functions, analytic fields, the projections P0, P-star and P-dagger,
//! and the superconvergence point sets.

use crate::basis::{default_quadrature_points, gauss_rule, legendre_series, LegendreTable};
use crate::error::{Result, UwdgError};
use crate::flux::{cell_blocks, trace_minus, trace_plus, FluxSetup, ScaledFlux};
use crate::mesh::Mesh1D;
use nalgebra::Vector2;
use num_complex::Complex64;
use std::sync::Arc;

type C = Complex64;

/// Complex piecewise polynomial of degree `k` stored as per-cell Legendre
/// coefficients, `coeffs[j * (k + 1) + m]` multiplying `L_{j,m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DGFunction {
    pub mesh: Arc<Mesh1D>,
    pub k: usize,
    pub coeffs: Vec<C>,
}

impl DGFunction {
    pub fn zeros(mesh: Arc<Mesh1D>, k: usize) -> Self {
        let len = mesh.n_cells() * (k + 1);
        DGFunction { mesh, k, coeffs: vec![C::default(); len] }
    }

    pub fn from_coeffs(mesh: Arc<Mesh1D>, k: usize, coeffs: Vec<C>) -> Self {
        assert_eq!(coeffs.len(), mesh.n_cells() * (k + 1), "coefficient count mismatch");
        DGFunction { mesh, k, coeffs }
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    pub fn cell(&self, j: usize) -> &[C] {
        let np = self.k + 1;
        &self.coeffs[j * np..(j + 1) * np]
    }

    pub fn cell_mut(&mut self, j: usize) -> &mut [C] {
        let np = self.k + 1;
        &mut self.coeffs[j * np..(j + 1) * np]
    }

    /// `s`-th physical derivative at reference point `xi` of cell `j`.
    pub fn eval(&self, j: usize, xi: f64, s: usize) -> C {
        legendre_series(self.cell(j), s, xi) * (2.0 / self.mesh.size(j)).powi(s as i32)
    }

    /// Value at a physical point (periodic wrap; interface points take the
    /// cell to their right).
    pub fn value_at(&self, x: f64) -> C {
        let (j, xi) = self.mesh.locate(x);
        self.eval(j, xi, 0)
    }

    /// `[u; u_x]` at the right end of cell `j`.
    pub fn right_trace(&self, j: usize) -> Vector2<C> {
        let hj = self.mesh.size(j);
        self.cell(j)
            .iter()
            .enumerate()
            .fold(Vector2::zeros(), |acc, (m, &c)| acc + trace_minus(m, hj).map(C::from) * c)
    }

    /// `[u; u_x]` at the left end of cell `j`.
    pub fn left_trace(&self, j: usize) -> Vector2<C> {
        let hj = self.mesh.size(j);
        self.cell(j)
            .iter()
            .enumerate()
            .fold(Vector2::zeros(), |acc, (m, &c)| acc + trace_plus(m, hj).map(C::from) * c)
    }

    /// `int u conj(v)` by Parseval.
    pub fn inner(&self, other: &DGFunction) -> C {
        let np = self.k + 1;
        let mut acc = C::default();
        for j in 0..self.n_cells() {
            let hj = self.mesh.size(j);
            for m in 0..np {
                acc += self.coeffs[j * np + m] * other.coeffs[j * np + m].conj() * hj
                    / (2.0 * m as f64 + 1.0);
            }
        }
        acc
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: C, other: &DGFunction) -> DGFunction {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&x, &y)| x + a * y).collect();
        DGFunction { mesh: self.mesh.clone(), k: self.k, coeffs }
    }

    pub fn sub(&self, other: &DGFunction) -> DGFunction {
        self.axpy(C::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &DGFunction) -> DGFunction {
        self.axpy(C::new(1.0, 0.0), other)
    }

    pub fn scale(&self, a: C) -> DGFunction {
        let coeffs = self.coeffs.iter().map(|&x| a * x).collect();
        DGFunction { mesh: self.mesh.clone(), k: self.k, coeffs }
    }
}

/// Exact solution provider: `eval(x, t, d)` returns the `d`-th spatial
/// derivative.
pub trait AnalyticField: Sync {
    fn eval(&self, x: f64, t: f64, d: usize) -> C;

    /// Highest supported derivative order.
    fn d_max(&self) -> usize {
        usize::MAX
    }
}

/// `exp(i kappa (x - kappa t))`, an exact solution of `i u_t + u_xx = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub kappa: f64,
}

impl PlaneWave {
    pub fn new(kappa: f64) -> Self {
        PlaneWave { kappa }
    }
}

impl AnalyticField for PlaneWave {
    fn eval(&self, x: f64, t: f64, d: usize) -> C {
        let ik = C::new(0.0, self.kappa);
        (ik * (x - self.kappa * t)).exp() * ik.powu(d as u32)
    }
}

/// Field given by a closure, handy for polynomials in tests.
pub struct FnField<F>(pub F);

impl<F: Fn(f64, f64, usize) -> C + Sync> AnalyticField for FnField<F> {
    fn eval(&self, x: f64, t: f64, d: usize) -> C {
        (self.0)(x, t, d)
    }
}

/// `d^r u / dt^r = i^r d^{2r} u / dx^{2r}` for a solution of the equation.
pub struct TimeDerivative<'a> {
    pub field: &'a dyn AnalyticField,
    pub order: usize,
}

impl AnalyticField for TimeDerivative<'_> {
    fn eval(&self, x: f64, t: f64, d: usize) -> C {
        C::new(0.0, 1.0).powu(self.order as u32) * self.field.eval(x, t, d + 2 * self.order)
    }

    fn d_max(&self) -> usize {
        self.field.d_max().saturating_sub(2 * self.order)
    }
}

/// L2 projection onto the degree-`k` DG space.
pub fn project_l2(f: &dyn AnalyticField, t: f64, mesh: &Arc<Mesh1D>, k: usize) -> DGFunction {
    let rule = gauss_rule(default_quadrature_points(k));
    let tables: Vec<LegendreTable> = rule.nodes.iter().map(|&x| LegendreTable::new(k, x)).collect();
    let mut out = DGFunction::zeros(mesh.clone(), k);
    for j in 0..mesh.n_cells() {
        let vals: Vec<C> = rule.nodes.iter().map(|&xi| f.eval(mesh.to_physical(j, xi), t, 0)).collect();
        for m in 0..=k {
            let integral: C = vals
                .iter()
                .zip(&tables)
                .zip(&rule.weights)
                .map(|((&v, tab), &w)| v * (w * tab.value[m]))
                .sum();
            out.cell_mut(j)[m] = integral * ((2.0 * m as f64 + 1.0) / 2.0);
        }
    }
    out
}

/// `[u; u_x]` at the right end of every cell.
pub fn interface_data(f: &dyn AnalyticField, t: f64, mesh: &Mesh1D) -> Vec<Vector2<C>> {
    (0..mesh.n_cells())
        .map(|j| {
            let x = mesh.right(j);
            Vector2::new(f.eval(x, t, 0), f.eval(x, t, 1))
        })
        .collect()
}

/// Zero the top two coefficients and return the traces of what remains.
fn low_part(mut u: DGFunction) -> (DGFunction, Vec<Vector2<C>>, Vec<Vector2<C>>) {
    let k = u.k;
    for j in 0..u.n_cells() {
        let cell = u.cell_mut(j);
        cell[k - 1] = C::default();
        cell[k] = C::default();
    }
    let minus = (0..u.n_cells()).map(|j| u.right_trace(j)).collect();
    let plus = (0..u.n_cells()).map(|j| u.left_trace(j)).collect();
    (u, minus, plus)
}

/// Fill the top two coefficients of a function whose lower coefficients are
/// already set, so that its numerical fluxes equal `data` at every interface.
pub fn complete_flux_matching(
    setup: &FluxSetup,
    low: DGFunction,
    data: &[Vector2<C>],
) -> Result<DGFunction> {
    let k = setup.k;
    let (mut u, minus, plus) = low_part(low);
    let top = setup.solve_top_two(data, &minus, &plus)?;
    for (j, x) in top.into_iter().enumerate() {
        let cell = u.cell_mut(j);
        cell[k - 1] = x[0];
        cell[k] = x[1];
    }
    Ok(u)
}

/// The flux-matching projection P-star.
pub fn project_star(setup: &FluxSetup, f: &dyn AnalyticField, t: f64) -> Result<DGFunction> {
    let low = project_l2(f, t, &setup.mesh, setup.k);
    let data = interface_data(f, t, &setup.mesh);
    complete_flux_matching(setup, low, &data)
}

/// The cell-local projection P-dagger: both endpoint conditions of a cell
/// are imposed on that cell alone.
pub fn project_dagger(setup: &FluxSetup, f: &dyn AnalyticField, t: f64) -> Result<DGFunction> {
    let k = setup.k;
    let mesh = &setup.mesh;
    let data = interface_data(f, t, mesh);
    let (mut u, minus, plus) = low_part(project_l2(f, t, mesh, k));
    let g = setup.interface.g.map(C::from);
    let h = setup.interface.h.map(C::from);
    for j in 0..mesh.n_cells() {
        let sum = setup.blocks[j].sum().map(C::from);
        let inv = sum.try_inverse().ok_or_else(|| {
            UwdgError::ProjectionUndefined(format!(
                "cell {j}: (-1)^(k+1) Gamma_j / Lambda_j must differ from 1"
            ))
        })?;
        let x = inv * (g * (data[j] - minus[j]) + h * (data[mesh.prev(j)] - plus[j]));
        let cell = u.cell_mut(j);
        cell[k - 1] = x[0];
        cell[k] = x[1];
    }
    Ok(u)
}

/// Coefficients `(b, c)` of `R_{k+1} = L_{k+1} + b L_k + c L_{k-1}`.
pub fn leading_residual(k: usize, h_j: f64, sf: &ScaledFlux) -> Result<(f64, f64)> {
    let cb = cell_blocks(sf, k, h_j);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let denom = cb.gamma + sign * cb.lambda;
    if denom.abs() * h_j <= 1e-14 {
        return Err(UwdgError::ProjectionUndefined(
            "Gamma_j + (-1)^k Lambda_j vanishes, residual polynomial undefined".into(),
        ));
    }
    let kf = k as f64;
    let s = sf.s();
    let b = -2.0 * sf.alpha1 * (2.0 * kf + 1.0) / h_j / denom;
    let num = sf.beta1 - 2.0 * (kf + 1.0).powi(2) / h_j * (s + 0.25)
        + sign * 2.0 * (kf + 1.0) / h_j * (s - 0.25)
        + sf.beta2 / (h_j * h_j) * kf * (kf + 2.0) * (kf + 1.0).powi(2);
    Ok((b, -num / denom))
}

/// Superconvergence point sets of one cell on the reference interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialPoints {
    pub b: f64,
    pub c: f64,
    /// Legendre coefficients of `R_{k+1}`.
    pub residual: Vec<f64>,
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Monomial coefficients (ascending) of a Legendre series.
pub fn legendre_to_monomial(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut out = vec![0.0; n.max(1)];
    let mut p_prev = vec![0.0; n + 1];
    let mut p_cur = vec![0.0; n + 1];
    p_prev[0] = 1.0; // L_0
    if n > 0 {
        out[0] += coeffs[0];
    }
    if n > 1 {
        p_cur[1] = 1.0; // L_1
        out[1] += coeffs[1];
    }
    for m in 1..n.saturating_sub(1) {
        let mf = m as f64;
        let mut next = vec![0.0; n + 1];
        for i in 0..n {
            next[i + 1] += (2.0 * mf + 1.0) * p_cur[i] / (mf + 1.0);
            next[i] -= mf * p_prev[i] / (mf + 1.0);
        }
        for i in 0..n {
            out[i] += coeffs[m + 1] * next[i];
        }
        p_prev = std::mem::replace(&mut p_cur, next);
    }
    out
}

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect()
}

/// Real roots of a monomial polynomial within `[-1, 1]` (or the open
/// interval when `closed` is false), ascending and deduplicated.
///
/// Sign changes on a fine grid are refined by bisection and one Newton step;
/// grid points where the polynomial vanishes to roundoff catch even-order
/// roots.
pub fn real_roots_in_interval(p: &[f64], closed: bool) -> Vec<f64> {
    const GRID: usize = 4096;
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || p.len() < 2 {
        return Vec::new();
    }
    let dp = poly_derivative(p);
    let f = |x: f64| poly_eval(p, x) / scale;
    let zero_tol = 1e-13;
    let xs: Vec<f64> = (0..=GRID).map(|i| -1.0 + 2.0 * i as f64 / GRID as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..=GRID {
        if fs[i].abs() <= zero_tol {
            roots.push(xs[i]);
        }
    }
    for i in 0..GRID {
        let (mut lo, mut hi) = (xs[i], xs[i + 1]);
        let (mut flo, fhi) = (fs[i], fs[i + 1]);
        if flo.abs() <= zero_tol || fhi.abs() <= zero_tol || flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid);
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    let mut roots: Vec<f64> = roots
        .into_iter()
        .map(|x| {
            let d = poly_eval(&dp, x);
            let y = if d != 0.0 { x - poly_eval(p, x) / d } else { x };
            if (y - x).abs() < 1e-10 {
                y
            } else {
                x
            }
        })
        .filter_map(|x| {
            if closed {
                if x.abs() <= 1.0 - 1e-12 {
                    Some(x)
                } else if x.abs() <= 1.0 + 1e-9 {
                    Some(x.signum())
                } else {
                    None
                }
            } else if x.abs() < 1.0 - 1e-12 {
                Some(x)
            } else {
                None
            }
        })
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    roots
}

/// Roots of `R_{k+1}`, `R'_{k+1}` and `R''_{k+1}` on the reference interval.
///
/// Endpoint roots are kept for the value and first-derivative sets and
/// dropped for the second-derivative set.
pub fn special_points(k: usize, h_j: f64, sf: &ScaledFlux) -> Result<SpecialPoints> {
    let (b, c) = leading_residual(k, h_j, sf)?;
    let mut residual = vec![0.0; k + 2];
    residual[k + 1] = 1.0;
    residual[k] = b;
    residual[k - 1] = c;
    let p0 = legendre_to_monomial(&residual);
    let p1 = poly_derivative(&p0);
    let p2 = poly_derivative(&p1);
    Ok(SpecialPoints {
        b,
        c,
        d0: real_roots_in_interval(&p0, true),
        d1: real_roots_in_interval(&p1, true),
        d2: real_roots_in_interval(&p2, false),
        residual,
    })
}

/// Special points of every cell of a mesh.
pub fn special_points_on_mesh(setup: &FluxSetup) -> Result<Vec<SpecialPoints>> {
    setup
        .mesh
        .sizes
        .iter()
        .map(|&hj| special_points(setup.k, hj, &setup.scaled))
        .collect()
}
