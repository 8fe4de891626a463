//! Flux parameters, interface matrices, cell blocks, assumption
//! classification and the block-circulant solver.

use crate::error::{Result, UwdgError};
use crate::mesh::Mesh1D;
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::fmt;
use std::sync::Arc;

type C = Complex64;

/// Tolerance for detecting `alpha1^2 + beta1 beta2 = 1/4`.
pub const A1_TOL: f64 = 1e-12;
/// Tolerance on `|z^N - 1|` in the non-resonance checks.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Symbol blocks with a larger condition number count as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Dimensionless flux parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxConfig {
    pub alpha1_t: f64,
    pub beta1_t: f64,
    pub beta2_t: f64,
}

impl FluxConfig {
    pub fn new(alpha1_t: f64, beta1_t: f64, beta2_t: f64) -> Self {
        FluxConfig { alpha1_t, beta1_t, beta2_t }
    }

    pub fn central() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Alternating flux with `alpha1 = sign / 2`.
    pub fn alternating(sign: f64) -> Self {
        Self::new(0.5 * sign.signum(), 0.0, 0.0)
    }
}

impl fmt::Display for FluxConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.alpha1_t, self.beta1_t, self.beta2_t)
    }
}

/// Flux parameters instantiated at a mesh scale `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFlux {
    pub alpha1: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub h: f64,
}

impl ScaledFlux {
    /// `alpha1^2 + beta1 beta2`, which is scale free.
    pub fn s(&self) -> f64 {
        self.alpha1 * self.alpha1 + self.beta1 * self.beta2
    }
}

pub fn scale_flux(cfg: FluxConfig, h: f64) -> ScaledFlux {
    assert!(h > 0.0, "scaling length must be positive");
    ScaledFlux { alpha1: cfg.alpha1_t, beta1: cfg.beta1_t / h, beta2: cfg.beta2_t * h, h }
}

/// `[u_hat; u_x_tilde] = G [u^-; u_x^-] + H [u^+; u_x^+]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceMatrices {
    pub g: Matrix2<f64>,
    pub h: Matrix2<f64>,
}

impl InterfaceMatrices {
    /// Numerical flux pair from the left and right traces `[u; u_x]`.
    pub fn flux(&self, minus: Vector2<C>, plus: Vector2<C>) -> Vector2<C> {
        self.g.map(C::from) * minus + self.h.map(C::from) * plus
    }
}

pub fn interface_matrices(sf: &ScaledFlux) -> InterfaceMatrices {
    let g = Matrix2::new(0.5 + sf.alpha1, -sf.beta2, -sf.beta1, 0.5 - sf.alpha1);
    InterfaceMatrices { g, h: Matrix2::identity() - g }
}

/// Right-end trace `[L_m; d/dx L_m]` of a basis function on a cell of size `h_j`.
pub fn trace_minus(m: usize, h_j: f64) -> Vector2<f64> {
    let mm = (m * (m + 1)) as f64;
    Vector2::new(1.0, mm / h_j)
}

/// Left-end trace `[L_m; d/dx L_m]` of a basis function on a cell of size `h_j`.
pub fn trace_plus(m: usize, h_j: f64) -> Vector2<f64> {
    let mm = (m * (m + 1)) as f64;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    Vector2::new(sign, -sign * mm / h_j)
}

/// Per-cell quantities of the projection systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBlocks {
    pub k: usize,
    pub h_j: f64,
    pub a: Matrix2<f64>,
    pub b: Matrix2<f64>,
    pub gamma: f64,
    pub lambda: f64,
}

pub fn cell_blocks(sf: &ScaledFlux, k: usize, h_j: f64) -> CellBlocks {
    assert!(k >= 2, "cell blocks need k >= 2");
    let im = interface_matrices(sf);
    let lm = Matrix2::from_columns(&[trace_minus(k - 1, h_j), trace_minus(k, h_j)]);
    let lp = Matrix2::from_columns(&[trace_plus(k - 1, h_j), trace_plus(k, h_j)]);
    let kf = k as f64;
    let s = sf.s();
    let gamma = sf.beta1 + sf.beta2 / (h_j * h_j) * kf * kf * (kf * kf - 1.0)
        - 2.0 * kf * kf / h_j * (s + 0.25);
    let lambda = -2.0 * kf / h_j * (s - 0.25);
    CellBlocks { k, h_j, a: im.g * lm, b: im.h * lp, gamma, lambda }
}

impl CellBlocks {
    pub fn sum(&self) -> Matrix2<f64> {
        self.a + self.b
    }

    /// `(A_j + B_j)^{-1} (G L^-_m + H L^+_m)`: the flux-matching response of
    /// the top two coefficients to a unit coefficient at degree `m`.
    pub fn m_vector(&self, m: usize, im: &InterfaceMatrices) -> Result<Vector2<f64>> {
        let inv = self.sum().try_inverse().ok_or_else(|| {
            UwdgError::ProjectionUndefined("A_j + B_j is singular".into())
        })?;
        Ok(inv * (im.g * trace_minus(m, self.h_j) + im.h * trace_plus(m, self.h_j)))
    }

    /// `Q = -A^{-1} B`, when `A` is invertible.
    pub fn q_matrix(&self) -> Option<Matrix2<f64>> {
        self.a.try_inverse().map(|ai| -ai * self.b)
    }
}

/// Which projection theory applies to a flux on a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    A1,
    A2,
    A3,
    Unsupported,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::A1 => "A1",
            Assumption::A2 => "A2",
            Assumption::A3 => "A3",
            Assumption::Unsupported => "Unsupported",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionDiagnostics {
    /// `alpha1^2 + beta1 beta2`.
    pub s: f64,
    /// `Gamma / Lambda` on a uniform mesh (undefined when `Lambda = 0`).
    pub gamma_over_lambda: Option<f64>,
    pub q_eigenvalues: Option<[C; 2]>,
    /// `|z^N - 1|` of the relevant non-resonance check.
    pub resonance: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionClass {
    pub tag: Assumption,
    pub diagnostics: AssumptionDiagnostics,
}

fn eigenvalues2(m: &Matrix2<f64>) -> [C; 2] {
    let tr = m.trace();
    let det = m.determinant();
    let disc = C::from(tr * tr - 4.0 * det).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0]
}

pub fn classify_assumption(cfg: FluxConfig, mesh: &Mesh1D, k: usize) -> AssumptionClass {
    assert!(k >= 2, "classification needs k >= 2");
    let sf = scale_flux(cfg, mesh.h);
    let s = sf.s();
    let n = mesh.n_cells();
    let blocks0 = cell_blocks(&sf, k, mesh.size(0));
    let mut diag = AssumptionDiagnostics {
        s,
        gamma_over_lambda: None,
        q_eigenvalues: None,
        resonance: None,
        note: String::new(),
    };
    if mesh.is_uniform() {
        diag.q_eigenvalues = blocks0.q_matrix().map(|q| eigenvalues2(&q));
    }
    let done = |tag, mut diag: AssumptionDiagnostics, note: &str| {
        diag.note = note.to_string();
        AssumptionClass { tag, diagnostics: diag }
    };

    if (s - 0.25).abs() <= A1_TOL {
        let degenerate = (0..n).any(|j| {
            let hj = mesh.size(j);
            (cell_blocks(&sf, k, hj).gamma * hj).abs() <= 1e-12
        });
        if degenerate {
            return done(Assumption::Unsupported, diag, "alpha1^2 + beta1 beta2 = 1/4 but Gamma_j = 0");
        }
        return done(Assumption::A1, diag, "local projection");
    }
    if blocks0.lambda == 0.0 {
        return done(Assumption::Unsupported, diag, "Lambda = 0, ratio Gamma/Lambda undefined");
    }
    let ratio = blocks0.gamma / blocks0.lambda;
    diag.gamma_over_lambda = Some(ratio);
    if !mesh.is_uniform() {
        return done(Assumption::Unsupported, diag, "global projection needs a uniform mesh");
    }
    let rho = if k % 2 == 1 { ratio } else { -ratio };
    if ratio.abs() > 1.0 + RESONANCE_TOL {
        return done(Assumption::A2, diag, "|Gamma/Lambda| > 1");
    }
    if (ratio.abs() - 1.0).abs() <= RESONANCE_TOL {
        let dev = (C::from(rho).powu(n as u32) - 1.0).norm();
        diag.resonance = Some(dev);
        if n % 2 == 1 && dev > RESONANCE_TOL {
            return done(Assumption::A3, diag, "|Gamma/Lambda| = 1, N odd, non-resonant");
        }
        return done(Assumption::Unsupported, diag, "|Gamma/Lambda| = 1 resonance");
    }
    let z = C::from(rho) + C::from(ratio * ratio - 1.0).sqrt();
    let dev = (z.powu(n as u32) - 1.0).norm();
    diag.resonance = Some(dev);
    if dev > RESONANCE_TOL {
        done(Assumption::A3, diag, "|Gamma/Lambda| < 1, non-resonant")
    } else {
        done(Assumption::Unsupported, diag, "|Gamma/Lambda| < 1 resonance")
    }
}

fn condition2(m: &Matrix2<C>) -> f64 {
    match m.try_inverse() {
        Some(inv) => m.norm() * inv.norm(),
        None => f64::INFINITY,
    }
}

/// Solve `A x_j + B x_{j+1} = rhs_j` for all `j` with periodic wrap, by
/// diagonalizing the block-circulant matrix with the DFT.
pub fn solve_block_circulant(
    a: &Matrix2<C>,
    b: &Matrix2<C>,
    rhs: &[Vector2<C>],
) -> Result<Vec<Vector2<C>>> {
    let n = rhs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut c0: Vec<C> = rhs.iter().map(|v| v[0]).collect();
    let mut c1: Vec<C> = rhs.iter().map(|v| v[1]).collect();
    fwd.process(&mut c0);
    fwd.process(&mut c1);
    for l in 0..n {
        let w = C::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / n as f64);
        let sym = a + b * w;
        let cond = condition2(&sym);
        if !(cond <= MAX_CONDITION) {
            return Err(UwdgError::Singular { frequency: l, condition: cond });
        }
        let x = sym.try_inverse().unwrap() * Vector2::new(c0[l], c1[l]);
        c0[l] = x[0];
        c1[l] = x[1];
    }
    inv.process(&mut c0);
    inv.process(&mut c1);
    let scale = 1.0 / n as f64;
    Ok(c0.into_iter().zip(c1).map(|(p, q)| Vector2::new(p * scale, q * scale)).collect())
}

/// Everything derived from a (mesh, degree, flux) triple, computed once and
/// shared by projections, corrections and the time stepper.
#[derive(Debug, Clone)]
pub struct FluxSetup {
    pub mesh: Arc<Mesh1D>,
    pub k: usize,
    pub cfg: FluxConfig,
    pub scaled: ScaledFlux,
    pub interface: InterfaceMatrices,
    pub blocks: Vec<CellBlocks>,
    pub class: AssumptionClass,
}

impl FluxSetup {
    pub fn new(mesh: Arc<Mesh1D>, k: usize, cfg: FluxConfig) -> Result<Self> {
        if k < 2 {
            return Err(UwdgError::Config(format!("degree k must be at least 2, got {k}")));
        }
        let scaled = scale_flux(cfg, mesh.h);
        let interface = interface_matrices(&scaled);
        let blocks = mesh.sizes.iter().map(|&hj| cell_blocks(&scaled, k, hj)).collect();
        let class = classify_assumption(cfg, &mesh, k);
        Ok(FluxSetup { mesh, k, cfg, scaled, interface, blocks, class })
    }

    /// Solve for the top two coefficients `x_j = (c_{j,k-1}, c_{j,k})` of every
    /// cell from the flux conditions
    /// `G tr^-_j + H tr^+_{j+1} = data_j` at each right interface `j`, where the
    /// traces are `low^- + [L^-_{k-1}, L^-_k] x` and likewise for `+`.
    pub fn solve_top_two(
        &self,
        data: &[Vector2<C>],
        low_minus: &[Vector2<C>],
        low_plus: &[Vector2<C>],
    ) -> Result<Vec<Vector2<C>>> {
        let n = self.mesh.n_cells();
        let g = self.interface.g.map(C::from);
        let h = self.interface.h.map(C::from);
        let rhs: Vec<Vector2<C>> = (0..n)
            .map(|j| data[j] - g * low_minus[j] - h * low_plus[self.mesh.next(j)])
            .collect();
        match self.class.tag {
            Assumption::A1 => (0..n)
                .map(|j| {
                    let sum = self.blocks[j].sum().map(C::from);
                    let inv = sum.try_inverse().ok_or_else(|| {
                        UwdgError::ProjectionUndefined(format!("A_j + B_j singular on cell {j}"))
                    })?;
                    Ok(inv * (g * rhs[j] + h * rhs[self.mesh.prev(j)]))
                })
                .collect(),
            Assumption::A2 | Assumption::A3 => {
                let a = self.blocks[0].a.map(C::from);
                let b = self.blocks[0].b.map(C::from);
                solve_block_circulant(&a, &b, &rhs)
            }
            Assumption::Unsupported => Err(UwdgError::Unsupported(self.class.diagnostics.note.clone())),
        }
    }
}
