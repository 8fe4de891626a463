//! The semi-discrete UWDG operator and RK4 time marching.

use crate::basis::{reference_matrices, ReferenceMatrices};
use crate::error::{Result, UwdgError};
use crate::flux::{trace_minus, trace_plus, FluxSetup};
use crate::projection::DGFunction;
use nalgebra::Vector2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::sync::Arc;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Boundary part of `A_j(u, L_{j,m})` contributed by the flux pair at the
/// right interface, given the test function's right trace.
fn right_term(flux: Vector2<C>, v: Vector2<f64>) -> C {
    flux[1] * v[0] - flux[0] * v[1]
}

/// Same for the left interface.
fn left_term(flux: Vector2<C>, v: Vector2<f64>) -> C {
    flux[0] * v[1] - flux[1] * v[0]
}

/// The operator `u -> u_t` of the semi-discrete scheme, assembled as real
/// block-tridiagonal matrices `K` with `r_j = i (K_{j,-1} u_{j-1} + K_{j,0} u_j + K_{j,1} u_{j+1})`.
#[derive(Debug, Clone)]
pub struct DGOperator {
    pub setup: Arc<FluxSetup>,
    pub reference: ReferenceMatrices,
    /// Per cell, three row-major `(k+1) x (k+1)` blocks for offsets -1, 0, +1.
    blocks: Vec<[Vec<f64>; 3]>,
}

impl DGOperator {
    pub fn new(setup: Arc<FluxSetup>) -> Self {
        let k = setup.k;
        let np = k + 1;
        let reference = reference_matrices(k);
        let mesh = setup.mesh.clone();
        let g = setup.interface.g;
        let h = setup.interface.h;
        let blocks = (0..mesh.n_cells())
            .map(|j| {
                let hj = mesh.size(j);
                let hl = mesh.size(mesh.prev(j));
                let hr = mesh.size(mesh.next(j));
                let mut kb = [vec![0.0; np * np], vec![0.0; np * np], vec![0.0; np * np]];
                for m in 0..np {
                    let scale = (2.0 * m as f64 + 1.0) / hj;
                    let vr = trace_minus(m, hj);
                    let vl = trace_plus(m, hj);
                    let rt = |f: Vector2<f64>| f[1] * vr[0] - f[0] * vr[1];
                    let lt = |f: Vector2<f64>| f[0] * vl[1] - f[1] * vl[0];
                    for n in 0..np {
                        let own = 2.0 / hj * reference.stiff2[m][n]
                            + rt(g * trace_minus(n, hj))
                            + lt(h * trace_plus(n, hj));
                        kb[1][m * np + n] = scale * own;
                        kb[2][m * np + n] = scale * rt(h * trace_plus(n, hr));
                        kb[0][m * np + n] = scale * lt(g * trace_minus(n, hl));
                    }
                }
                kb
            })
            .collect();
        DGOperator { setup, reference, blocks }
    }

    pub fn k(&self) -> usize {
        self.setup.k
    }

    pub fn n_cells(&self) -> usize {
        self.setup.mesh.n_cells()
    }

    /// `A(u, L_{j,m})` for every `(j, m)`, evaluated directly from fluxes and
    /// traces without the assembled blocks.
    pub fn weak_action(&self, u: &DGFunction) -> Vec<C> {
        let k = self.k();
        let np = k + 1;
        let mesh = &self.setup.mesh;
        let n = mesh.n_cells();
        let im = &self.setup.interface;
        let fluxes: Vec<Vector2<C>> =
            (0..n).map(|j| im.flux(u.right_trace(j), u.left_trace(mesh.next(j)))).collect();
        let mut out = vec![C::default(); n * np];
        for j in 0..n {
            let hj = mesh.size(j);
            let cell = u.cell(j);
            for m in 0..np {
                let vol: C = (0..np).map(|q| cell[q] * self.reference.stiff2[m][q]).sum::<C>() * (2.0 / hj);
                out[j * np + m] = vol
                    + right_term(fluxes[j], trace_minus(m, hj))
                    + left_term(fluxes[mesh.prev(j)], trace_plus(m, hj));
            }
        }
        out
    }

    /// `u_t` computed matrix-free.
    pub fn time_derivative_matrix_free(&self, u: &DGFunction) -> DGFunction {
        let np = self.k() + 1;
        let mesh = &self.setup.mesh;
        let coeffs = self
            .weak_action(u)
            .into_iter()
            .enumerate()
            .map(|(idx, a)| {
                let (j, m) = (idx / np, idx % np);
                I * a * ((2.0 * m as f64 + 1.0) / mesh.size(j))
            })
            .collect();
        DGFunction::from_coeffs(u.mesh.clone(), u.k, coeffs)
    }

    /// `out = L u` with the assembled blocks; `u` and `out` are flat
    /// coefficient vectors.
    pub fn apply(&self, u: &[C], out: &mut [C]) {
        let np = self.k() + 1;
        let mesh = &self.setup.mesh;
        let n = mesh.n_cells();
        for j in 0..n {
            let nbr = [mesh.prev(j), j, mesh.next(j)];
            for m in 0..np {
                let mut acc = C::default();
                for (o, &jj) in nbr.iter().enumerate() {
                    let row = &self.blocks[j][o][m * np..(m + 1) * np];
                    let src = &u[jj * np..(jj + 1) * np];
                    for (&kv, &uv) in row.iter().zip(src) {
                        acc += uv * kv;
                    }
                }
                out[j * np + m] = I * acc;
            }
        }
    }

    /// Block `K_{j,o}` for `o` in {-1, 0, 1}, row-major.
    pub fn block(&self, j: usize, offset: isize) -> &[f64] {
        &self.blocks[j][(offset + 1) as usize]
    }
}

/// `A(u, v) = sum over j, m of v_{j,m} A(u, L_{j,m})`, bilinear (no conjugation).
pub fn apply_bilinear(op: &DGOperator, u: &DGFunction, v: &DGFunction) -> C {
    op.weak_action(u).iter().zip(&v.coeffs).map(|(a, b)| a * b).sum()
}

/// `u_t` of the semi-discrete scheme, using the assembled operator.
pub fn time_derivative(op: &DGOperator, u: &DGFunction) -> DGFunction {
    let mut out = vec![C::default(); u.coeffs.len()];
    op.apply(&u.coeffs, &mut out);
    DGFunction::from_coeffs(u.mesh.clone(), u.k, out)
}

pub fn l2_norm(u: &DGFunction) -> f64 {
    u.l2_norm()
}

/// One classical RK4 step of `u' = f(u)`.
pub fn rk4_step_with<F>(f: F, u: &[C], dt: f64) -> Vec<C>
where
    F: Fn(&[C]) -> Vec<C>,
{
    let stage = |base: &[C], k: &[C], a: f64| -> Vec<C> {
        base.iter().zip(k).map(|(&b, &kv)| b + kv * a).collect()
    };
    let k1 = f(u);
    let k2 = f(&stage(u, &k1, 0.5 * dt));
    let k3 = f(&stage(u, &k2, 0.5 * dt));
    let k4 = f(&stage(u, &k3, dt));
    (0..u.len())
        .map(|i| u[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0))
        .collect()
}

pub fn rk4_step(op: &DGOperator, u: &DGFunction, dt: f64) -> DGFunction {
    let f = |x: &[C]| {
        let mut out = vec![C::default(); x.len()];
        op.apply(x, &mut out);
        out
    };
    DGFunction::from_coeffs(u.mesh.clone(), u.k, rk4_step_with(f, &u.coeffs, dt))
}

/// `dt = c h^{2.5}` up to the end time, last step truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScheme {
    pub c: f64,
    pub t_end: f64,
}

impl TimeScheme {
    pub fn new(c: f64, t_end: f64) -> Self {
        TimeScheme { c, t_end }
    }

    /// Default step constant: 0.05 for k = 2, 0.01 otherwise.
    pub fn default_c(k: usize) -> f64 {
        if k <= 2 {
            0.05
        } else {
            0.01
        }
    }

    pub fn dt(&self, h: f64) -> f64 {
        self.c * h.powf(2.5)
    }

    /// Number of full steps and the size of the final step (equal to `dt`
    /// when `t_end` is a whole multiple).
    pub fn steps(&self, h: f64) -> (usize, f64) {
        let dt = self.dt(h);
        if self.t_end <= 0.0 {
            return (0, 0.0);
        }
        let n = (self.t_end / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let last = self.t_end - (n - 1) as f64 * dt;
        (n, last)
    }
}

/// Which time-stepping implementation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepperPath {
    /// Per-mode stepping on uniform meshes, physical space otherwise.
    Auto,
    /// Each Fourier mode of the block-circulant operator is advanced with its
    /// own RK4 amplification matrix; uniform meshes only.
    Fourier,
    Physical,
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub solution: DGFunction,
    pub dt: f64,
    pub steps: usize,
    /// `(t, ||u_h(t)||)` samples, first and last included.
    pub norm_history: Vec<(f64, f64)>,
}

const HISTORY_SAMPLES: usize = 100;
const MAX_GROWTH: f64 = 10.0;

pub fn integrate(op: &DGOperator, u0: &DGFunction, scheme: TimeScheme) -> Result<Integration> {
    integrate_with(op, u0, scheme, StepperPath::Auto)
}

pub fn integrate_with(
    op: &DGOperator,
    u0: &DGFunction,
    scheme: TimeScheme,
    path: StepperPath,
) -> Result<Integration> {
    let mesh = &op.setup.mesh;
    let dt = scheme.dt(mesh.h);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(UwdgError::Config(format!("invalid time step {dt}")));
    }
    let (steps, last) = scheme.steps(mesh.h);
    let stride = (steps / HISTORY_SAMPLES).max(1);
    let use_fourier = match path {
        StepperPath::Auto => mesh.is_uniform(),
        StepperPath::Fourier => {
            if !mesh.is_uniform() {
                return Err(UwdgError::Config("Fourier stepping needs a uniform mesh".into()));
            }
            true
        }
        StepperPath::Physical => false,
    };
    let (solution, norms) = if use_fourier {
        integrate_fourier(op, u0, dt, steps, last, stride)
    } else {
        integrate_physical(op, u0, dt, steps, last, stride)?
    };
    let mut norm_history: Vec<(f64, f64)> = norms
        .into_iter()
        .map(|(s, n)| ((s as f64 * dt).min(scheme.t_end), n))
        .collect();
    if let Some(last) = norm_history.last_mut() {
        if steps > 0 {
            last.0 = scheme.t_end;
        }
    }
    let n0 = norm_history.first().map(|p| p.1).unwrap_or(0.0);
    for &(_, n) in &norm_history {
        let growth = if n0 > 0.0 { n / n0 } else if n > 0.0 { f64::INFINITY } else { 1.0 };
        if !(growth <= MAX_GROWTH) {
            return Err(UwdgError::Unstable { dt, growth });
        }
    }
    Ok(Integration { solution, dt, steps, norm_history })
}

fn sample_steps(steps: usize, stride: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..=steps).step_by(stride).collect();
    if *v.last().unwrap() != steps {
        v.push(steps);
    }
    v
}

fn integrate_physical(
    op: &DGOperator,
    u0: &DGFunction,
    dt: f64,
    steps: usize,
    last: f64,
    stride: usize,
) -> Result<(DGFunction, Vec<(usize, f64)>)> {
    let len = u0.coeffs.len();
    let mut u = u0.coeffs.clone();
    let mut k1 = vec![C::default(); len];
    let mut k2 = vec![C::default(); len];
    let mut k3 = vec![C::default(); len];
    let mut k4 = vec![C::default(); len];
    let mut tmp = vec![C::default(); len];
    let norm = |c: &[C]| DGFunction::from_coeffs(u0.mesh.clone(), u0.k, c.to_vec()).l2_norm();
    let n0 = norm(&u);
    let mut history = vec![(0, n0)];
    for s in 1..=steps {
        let h = if s == steps { last } else { dt };
        op.apply(&u, &mut k1);
        for i in 0..len {
            tmp[i] = u[i] + k1[i] * (0.5 * h);
        }
        op.apply(&tmp, &mut k2);
        for i in 0..len {
            tmp[i] = u[i] + k2[i] * (0.5 * h);
        }
        op.apply(&tmp, &mut k3);
        for i in 0..len {
            tmp[i] = u[i] + k3[i] * h;
        }
        op.apply(&tmp, &mut k4);
        for i in 0..len {
            u[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
        if s % stride == 0 || s == steps {
            let n = norm(&u);
            history.push((s, n));
            if !(n <= MAX_GROWTH * n0.max(f64::MIN_POSITIVE)) && n0 > 0.0 {
                return Err(UwdgError::Unstable { dt, growth: n / n0 });
            }
        }
    }
    Ok((DGFunction::from_coeffs(u0.mesh.clone(), u0.k, u), history))
}

/// Small dense complex matrix helpers for the per-mode propagators.
fn matmul(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = vec![C::default(); n * n];
    for i in 0..n {
        for l in 0..n {
            let ail = a[i * n + l];
            for j in 0..n {
                out[i * n + j] += ail * b[l * n + j];
            }
        }
    }
    out
}

/// RK4 amplification matrix `I + z + z^2/2 + z^3/6 + z^4/24` for `z = dt S`.
fn rk4_amplification(s: &[C], dt: f64, n: usize) -> Vec<C> {
    let z: Vec<C> = s.iter().map(|&v| v * dt).collect();
    let mut p: Vec<C> = vec![C::default(); n * n];
    for i in 0..n {
        p[i * n + i] = C::new(1.0, 0.0);
    }
    // Horner: I + z (I + z/2 (I + z/3 (I + z/4))).
    for d in [4.0, 3.0, 2.0, 1.0] {
        let mut t = matmul(&z, &p, n);
        for v in t.iter_mut() {
            *v /= d;
        }
        for i in 0..n {
            t[i * n + i] += 1.0;
        }
        p = t;
    }
    p
}

fn integrate_fourier(
    op: &DGOperator,
    u0: &DGFunction,
    dt: f64,
    steps: usize,
    last: f64,
    stride: usize,
) -> (DGFunction, Vec<(usize, f64)>) {
    let np = op.k() + 1;
    let n = op.n_cells();
    let h = op.setup.mesh.size(0);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    // Spectral coefficients: spec[l][m].
    let mut spec = vec![vec![C::default(); np]; n];
    for m in 0..np {
        let mut col: Vec<C> = (0..n).map(|j| u0.coeffs[j * np + m]).collect();
        fwd.process(&mut col);
        for l in 0..n {
            spec[l][m] = col[l];
        }
    }
    let samples = sample_steps(steps, stride);
    let weights: Vec<f64> = (0..np).map(|m| h / (2.0 * m as f64 + 1.0) / n as f64).collect();
    let (k_m, k_0, k_p) = (op.block(0, -1), op.block(0, 0), op.block(0, 1));

    let results: Vec<(Vec<C>, Vec<f64>)> = spec
        .into_par_iter()
        .enumerate()
        .map(|(l, mut v)| {
            let w = C::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / n as f64);
            let sym: Vec<C> = (0..np * np)
                .map(|i| I * (k_0[i] + k_p[i] * w + k_m[i] * w.conj()))
                .collect();
            let p_full = rk4_amplification(&sym, dt, np);
            let p_last = rk4_amplification(&sym, last, np);
            let energy = |v: &[C]| v.iter().zip(&weights).map(|(c, w)| c.norm_sqr() * w).sum::<f64>();
            let mut norms = Vec::with_capacity(samples.len());
            norms.push(energy(&v));
            let mut tmp = vec![C::default(); np];
            let mut done = 0;
            for &target in samples.iter().skip(1) {
                while done < target {
                    let p = if done + 1 == steps { &p_last } else { &p_full };
                    for i in 0..np {
                        let row = &p[i * np..(i + 1) * np];
                        tmp[i] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                    }
                    std::mem::swap(&mut v, &mut tmp);
                    done += 1;
                }
                norms.push(energy(&v));
            }
            (v, norms)
        })
        .collect();

    let mut totals = vec![0.0; samples.len()];
    for (_, norms) in &results {
        for (t, e) in totals.iter_mut().zip(norms) {
            *t += e;
        }
    }
    let mut coeffs = vec![C::default(); n * np];
    for m in 0..np {
        let mut col: Vec<C> = results.iter().map(|(v, _)| v[m]).collect();
        inv.process(&mut col);
        for j in 0..n {
            coeffs[j * np + m] = col[j] / n as f64;
        }
    }
    let history = samples.into_iter().zip(totals).map(|(s, e)| (s, e.max(0.0).sqrt())).collect();
    (DGFunction::from_coeffs(u0.mesh.clone(), u0.k, coeffs), history)
}
