//! Legendre polynomials, Gauss quadrature, antiderivative maps, reference
//! matrices and central B-splines.

use num_complex::Complex64;
use std::ops::{Add, Mul};

/// Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over [-1, 1].
    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: Add<Output = T> + Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::default(), |acc, (&x, &w)| acc + f(x) * w)
    }

    /// Integrate `f` over [a, b] by the affine map from the reference interval.
    pub fn integrate_on<T, F>(&self, a: f64, b: f64, mut f: F) -> T
    where
        T: Add<Output = T> + Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.integrate(|xi| f(mid + half * xi)) * half
    }
}

/// Number of quadrature points used for integrals of smooth, non-polynomial
/// data on a cell of a degree-`k` space.
pub fn default_quadrature_points(k: usize) -> usize {
    (k + 3).max(10)
}

/// `n`-point Gauss–Legendre rule, nodes ascending.
pub fn gauss_rule(n: usize) -> QuadratureRule {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Chebyshev-like initial guess, then Newton on L_n.
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for m in 1..n {
        let mf = m as f64;
        let p2 = ((2.0 * mf + 1.0) * x * p1 - mf * p0) / (mf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        // Endpoint derivative.
        x.powi(n as i32 + 1) * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, d)
}

/// Values of `L_0..=L_{kmax}` and their first two derivatives at `xi`.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl LegendreTable {
    pub fn new(kmax: usize, xi: f64) -> Self {
        let n = kmax + 1;
        let mut value = vec![0.0; n];
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        value[0] = 1.0;
        if n > 1 {
            value[1] = xi;
            d1[1] = 1.0;
        }
        for m in 1..kmax {
            let mf = m as f64;
            value[m + 1] = ((2.0 * mf + 1.0) * xi * value[m] - mf * value[m - 1]) / (mf + 1.0);
            // L'_{m+1} = L'_{m-1} + (2m+1) L_m, and the same one level up.
            d1[m + 1] = d1[m - 1] + (2.0 * mf + 1.0) * value[m];
            d2[m + 1] = d2[m - 1] + (2.0 * mf + 1.0) * d1[m];
        }
        LegendreTable { value, d1, d2 }
    }

    pub fn get(&self, m: usize, s: usize) -> f64 {
        match s {
            0 => self.value[m],
            1 => self.d1[m],
            2 => self.d2[m],
            _ => panic!("derivative order {s} not supported"),
        }
    }
}

/// `d^s L_m / dxi^s` at `xi`, for `s` in 0..=2.
pub fn legendre_eval(m: usize, s: usize, xi: f64) -> f64 {
    assert!(s <= 2, "derivative order {s} not supported");
    LegendreTable::new(m, xi).get(m, s)
}

/// Evaluate a Legendre series (or its `s`-th derivative) on the reference
/// interval.
pub fn legendre_series<T>(coeffs: &[T], s: usize, xi: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    if coeffs.is_empty() {
        return T::default();
    }
    let table = LegendreTable::new(coeffs.len() - 1, xi);
    coeffs
        .iter()
        .enumerate()
        .fold(T::default(), |acc, (m, &c)| acc + c * table.get(m, s))
}

/// Legendre coefficients of the derivative of a Legendre series.
///
/// Uses `L'_m = sum over n < m with m - n odd of (2n + 1) L_n`.
pub fn derivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut out = vec![Complex64::default(); n.saturating_sub(1).max(1)];
    for (m, &c) in coeffs.iter().enumerate() {
        let mut j = m as isize - 1;
        while j >= 0 {
            out[j as usize] += c * (2.0 * j as f64 + 1.0);
            j -= 2;
        }
    }
    out
}

/// Legendre coefficients of the antiderivative `D^{-order}` of the input
/// series, with lower limit -1. The result has `order` more entries.
pub fn antiderivative_map(order: usize, coeffs: &[f64]) -> Vec<f64> {
    assert!(order == 1 || order == 2, "antiderivative order must be 1 or 2");
    let once = antiderivative_once(coeffs);
    if order == 1 {
        once
    } else {
        antiderivative_once(&once)
    }
}

fn antiderivative_once(coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len() + 1];
    for (m, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if m == 0 {
            out[0] += c;
            out[1] += c;
        } else {
            let s = c / (2.0 * m as f64 + 1.0);
            out[m + 1] += s;
            out[m - 1] -= s;
        }
    }
    out
}

/// Reference mass diagonal and volume matrix of the weak form.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMatrices {
    pub k: usize,
    /// `mass_diag[m] = 2 / (2m + 1)`.
    pub mass_diag: Vec<f64>,
    /// `stiff2[m][n]` is the integral of `L_n L_m''` over [-1, 1].
    pub stiff2: Vec<Vec<f64>>,
}

pub fn reference_matrices(k: usize) -> ReferenceMatrices {
    let rule = gauss_rule(k + 1);
    let tables: Vec<LegendreTable> = rule.nodes.iter().map(|&x| LegendreTable::new(k, x)).collect();
    let mass_diag = (0..=k).map(|m| 2.0 / (2.0 * m as f64 + 1.0)).collect();
    let stiff2 = (0..=k)
        .map(|m| {
            (0..=k)
                .map(|n| {
                    tables
                        .iter()
                        .zip(&rule.weights)
                        .map(|(t, w)| w * t.value[n] * t.d2[m])
                        .sum()
                })
                .collect()
        })
        .collect();
    ReferenceMatrices { k, mass_diag, stiff2 }
}

/// Central B-spline of order `order` (degree `order - 1`), supported on
/// `[-order/2, order/2]` with integer-spaced knots.
pub fn bspline_eval(order: usize, x: f64) -> f64 {
    assert!(order >= 1, "B-spline order must be positive");
    let half = order as f64 / 2.0;
    let t = x + half;
    if !(0.0..order as f64).contains(&t) {
        return 0.0;
    }
    // Cox–de Boor on knots 0, 1, ..., order, shifted by half the order.
    let cell = t.floor() as usize;
    let mut n = vec![0.0; order];
    n[cell] = 1.0;
    for p in 1..order {
        let mut next = vec![0.0; order];
        for i in 0..order - p {
            let i_f = i as f64;
            let p_f = p as f64;
            next[i] = (t - i_f) / p_f * n[i] + (i_f + p_f + 1.0 - t) / p_f * n[i + 1];
        }
        n = next;
    }
    n[0]
}
