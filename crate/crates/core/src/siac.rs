//! SIAC post-processing with the symmetric kernel of `2k + 1` shifted
//! B-splines of order `k + 1`.

use crate::basis::{bspline_eval, default_quadrature_points, gauss_rule, legendre_series};
use crate::error::{Result, UwdgError};
use crate::projection::{AnalyticField, DGFunction};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub k: usize,
    /// B-spline order `k + 1`.
    pub order: usize,
    /// `weights[g + k]` multiplies the spline centred at `g`.
    pub weights: Vec<f64>,
    /// Support half-width in units of `h`.
    pub half_width: f64,
}

/// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `int psi_order(x) x^p dx` for `p = 0..=p_max`, by the convolution
/// recursion starting from the unit box.
pub fn bspline_moments(order: usize, p_max: usize) -> Vec<f64> {
    let box_moments: Vec<f64> = (0..=p_max)
        .map(|r| if r % 2 == 0 { 0.5f64.powi(r as i32) / (r as f64 + 1.0) } else { 0.0 })
        .collect();
    let mut m = box_moments.clone();
    for _ in 1..order {
        m = (0..=p_max)
            .map(|p| compensated_sum((0..=p).map(|i| binomial(p, i) * m[i] * box_moments[p - i])))
            .collect();
    }
    m
}

pub fn kernel_coeffs(k: usize) -> Result<KernelSpec> {
    if k < 1 {
        return Err(UwdgError::Config("kernel needs k >= 1".into()));
    }
    let order = k + 1;
    let size = 2 * k + 1;
    let mom = bspline_moments(order, 2 * k);
    // Row m: int x^m psi(x - g) dx = sum_i C(m, i) g^(m-i) mom_i.
    let a = DMatrix::from_fn(size, size, |m, col| {
        let g = col as f64 - k as f64;
        compensated_sum((0..=m).map(|i| binomial(m, i) * g.powi((m - i) as i32) * mom[i]))
    });
    let mut rhs = DVector::zeros(size);
    rhs[0] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| UwdgError::Other(format!("singular kernel moment system for k = {k}")))?;
    let mut weights: Vec<f64> = sol.iter().copied().collect();
    // Enforce the exact even symmetry the system has in exact arithmetic.
    for g in 0..k {
        let avg = 0.5 * (weights[g] + weights[size - 1 - g]);
        weights[g] = avg;
        weights[size - 1 - g] = avg;
    }
    Ok(KernelSpec { k, order, weights, half_width: (3 * k + 1) as f64 / 2.0 })
}

impl KernelSpec {
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.k as f64;
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &c)| c * bspline_eval(self.order, x - (i as f64 - k)))
            .sum()
    }

    /// Breakpoints of the kernel, ascending.
    pub fn knots(&self) -> Vec<f64> {
        (0..=3 * self.k + 1).map(|i| -self.half_width + i as f64).collect()
    }
}

/// `u*(x) = int K_h(y - x) u_h(y) dy` with `K_h(s) = K(s / h) / h`, exact
/// for the piecewise polynomial integrand.
pub fn postprocess_value(u_h: &DGFunction, x: f64, spec: &KernelSpec) -> Result<C> {
    postprocess_value_with(u_h, x, spec, spec.k + 1)
}

/// As [`postprocess_value`] with a chosen number of Gauss points per piece.
pub fn postprocess_value_with(u_h: &DGFunction, x: f64, spec: &KernelSpec, points: usize) -> Result<C> {
    let mesh = &u_h.mesh;
    if !mesh.is_uniform() {
        return Err(UwdgError::Unsupported("post-processing needs a uniform mesh".into()));
    }
    let h = mesh.size(0);
    let hw = spec.half_width;
    // Breakpoints in the scaled variable s = (y - x) / h.
    let mut br = spec.knots();
    let shift = (mesh.a - x) / h;
    let first = (-hw - shift).floor() as i64;
    let last = (hw - shift).ceil() as i64;
    for i in first..=last {
        let s = shift + i as f64;
        if s > -hw && s < hw {
            br.push(s);
        }
    }
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let rule = gauss_rule(points);
    let len = mesh.length();
    let mut acc = C::default();
    for w in br.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 - s0 <= 0.0 {
            continue;
        }
        let ym = x + h * 0.5 * (s0 + s1);
        let (j, _) = mesh.locate(ym);
        // Unwrapped position of cell j's centre near ym.
        let centre = mesh.center(j) + ((ym - mesh.center(j)) / len).round() * len;
        let cell = u_h.cell(j);
        let half = 0.5 * (s1 - s0);
        let mid = 0.5 * (s0 + s1);
        for (&r, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let s = mid + half * r;
            let y = x + h * s;
            let xi = (y - centre) * 2.0 / h;
            acc += legendre_series(cell, 0, xi) * (spec.eval(s) * wt * half);
        }
    }
    Ok(acc)
}

/// `||u - u*||` by per-cell quadrature with `u*` evaluated at every node.
pub fn postprocessed_error(u_h: &DGFunction, f: &dyn AnalyticField, t: f64, spec: &KernelSpec) -> Result<f64> {
    let mesh = &u_h.mesh;
    let rule = gauss_rule(default_quadrature_points(u_h.k));
    let parts: Result<Vec<f64>> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|j| {
            let half = 0.5 * mesh.size(j);
            let mut sum = 0.0;
            for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
                let x = mesh.to_physical(j, xi);
                let us = postprocess_value(u_h, x, spec)?;
                sum += (f.eval(x, t, 0) - us).norm_sqr() * w * half;
            }
            Ok(sum)
        })
        .collect();
    Ok(parts?.iter().sum::<f64>().sqrt())
}
