//! Correction functions `w_q`, the reference interpolant `u_I` and the
//! diagnostics of `zeta_h = u_I - u_h`.

use crate::basis::{antiderivative_map, derivative_coeffs};
use crate::error::{Result, UwdgError};
use crate::flux::FluxSetup;
use crate::projection::{
    complete_flux_matching, project_l2, project_star, AnalyticField, DGFunction, TimeDerivative,
};
use nalgebra::Vector2;
use num_complex::Complex64;
use std::collections::HashMap;

type C = Complex64;

/// Largest correction index used by default, `floor((k - 1) / 2)`.
pub fn default_q_max(k: usize) -> usize {
    (k - 1) / 2
}

/// The corrections `w_1 .. w_{q_max}` at one time, plus the time derivatives
/// built along the way.
#[derive(Debug, Clone)]
pub struct CorrectionSet {
    pub q_max: usize,
    /// `w[q - 1]` is `w_q`.
    pub w: Vec<DGFunction>,
    /// `d^r w_q / dt^r` keyed by `(q, r)`, including `r = 0`.
    pub derivatives: HashMap<(usize, usize), DGFunction>,
}

impl CorrectionSet {
    /// `sum over q of w_q`, or zero when there are no corrections.
    pub fn total(&self, zero: &DGFunction) -> DGFunction {
        self.w.iter().fold(zero.clone(), |acc, w| acc.add(w))
    }
}

struct Builder<'a> {
    setup: &'a FluxSetup,
    f: &'a dyn AnalyticField,
    t: f64,
    /// Legendre coefficients of `D^{-2} L_m` for `m <= k - 2`.
    antiderivatives: Vec<Vec<f64>>,
    memo: HashMap<(usize, usize), DGFunction>,
}

impl Builder<'_> {
    /// Degree `<= k` Legendre coefficients of `d^{r+1} w_0 / dt^{r+1}`.
    fn base_rate(&self, r: usize) -> Result<DGFunction> {
        let g = TimeDerivative { field: self.f, order: r + 1 };
        let p0 = project_l2(&g, self.t, &self.setup.mesh, self.setup.k);
        let ps = project_star(self.setup, &g, self.t)?;
        Ok(p0.sub(&ps))
    }

    fn w(&mut self, q: usize, r: usize) -> Result<DGFunction> {
        if let Some(v) = self.memo.get(&(q, r)) {
            return Ok(v.clone());
        }
        let rate = if q == 1 { self.base_rate(r)? } else { self.w(q - 1, r + 1)? };
        let k = self.setup.k;
        let mesh = self.setup.mesh.clone();
        let mut low = DGFunction::zeros(mesh.clone(), k);
        for j in 0..mesh.n_cells() {
            let hj = mesh.size(j);
            let src = rate.cell(j);
            for m in 0..=k - 2 {
                // Integral over the cell of rate * D^{-2} L_m, by orthogonality.
                let integral: C = self.antiderivatives[m]
                    .iter()
                    .enumerate()
                    .filter(|(n, _)| *n <= k)
                    .map(|(n, &d)| src[n] * (d * hj / (2.0 * n as f64 + 1.0)))
                    .sum();
                low.cell_mut(j)[m] =
                    C::new(0.0, -1.0) * integral * ((2.0 * m as f64 + 1.0) / hj * hj * hj / 4.0);
            }
        }
        let zero = vec![Vector2::zeros(); mesh.n_cells()];
        let w = complete_flux_matching(self.setup, low, &zero)?;
        self.memo.insert((q, r), w.clone());
        Ok(w)
    }
}

/// Build `w_1 .. w_{q_max}` for the field `f` at time `t`.
pub fn build_correction(
    setup: &FluxSetup,
    f: &dyn AnalyticField,
    t: f64,
    q_max: usize,
) -> Result<CorrectionSet> {
    let k = setup.k;
    if q_max > default_q_max(k) {
        return Err(UwdgError::Config(format!(
            "q_max = {q_max} exceeds floor((k-1)/2) = {} for k = {k}",
            default_q_max(k)
        )));
    }
    let antiderivatives = (0..=k - 2)
        .map(|m| {
            let mut e = vec![0.0; m + 1];
            e[m] = 1.0;
            antiderivative_map(2, &e)
        })
        .collect();
    let mut b = Builder { setup, f, t, antiderivatives, memo: HashMap::new() };
    let w = (1..=q_max).map(|q| b.w(q, 0)).collect::<Result<Vec<_>>>()?;
    Ok(CorrectionSet { q_max, w, derivatives: b.memo })
}

/// `u_I = P-star u - sum over q of w_q`.
pub fn reference_interpolant(
    setup: &FluxSetup,
    f: &dyn AnalyticField,
    t: f64,
    q_max: usize,
) -> Result<DGFunction> {
    let ps = project_star(setup, f, t)?;
    let set = build_correction(setup, f, t, q_max)?;
    Ok(set.w.iter().fold(ps, |acc, w| acc.sub(w)))
}

/// Norm of the second derivative and interface-jump RMS values of a DG
/// function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaMetrics {
    pub zeta_l2: f64,
    pub zeta_xx: f64,
    pub jump: f64,
    pub jump_x: f64,
}

/// Metrics of `zeta = u_i - u_h`.
pub fn zeta_metrics(u_i: &DGFunction, u_h: &DGFunction) -> ZetaMetrics {
    let zeta = u_i.sub(u_h);
    let mesh = &zeta.mesh;
    let n = mesh.n_cells();
    let mut xx = 0.0;
    let mut jump = 0.0;
    let mut jump_x = 0.0;
    for j in 0..n {
        let hj = mesh.size(j);
        let d2 = derivative_coeffs(&derivative_coeffs(zeta.cell(j)));
        let s = (2.0 / hj).powi(2);
        xx += d2
            .iter()
            .enumerate()
            .map(|(m, c)| (c * s).norm_sqr() * hj / (2.0 * m as f64 + 1.0))
            .sum::<f64>();
        let diff = zeta.right_trace(j) - zeta.left_trace(mesh.next(j));
        jump += diff[0].norm_sqr();
        jump_x += diff[1].norm_sqr();
    }
    ZetaMetrics {
        zeta_l2: zeta.l2_norm(),
        zeta_xx: xx.sqrt(),
        jump: (jump / n as f64).sqrt(),
        jump_x: (jump_x / n as f64).sqrt(),
    }
}

/// Build `u_I` at time `t` and measure `zeta = u_I - u_h`.
pub fn zeta_diagnostics(
    setup: &FluxSetup,
    u_h: &DGFunction,
    f: &dyn AnalyticField,
    t: f64,
    q_max: usize,
) -> Result<ZetaMetrics> {
    let u_i = reference_interpolant(setup, f, t, q_max)?;
    Ok(zeta_metrics(&u_i, u_h))
}
