//! Periodic one-dimensional meshes.

use crate::error::{Result, UwdgError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How the nodes of a mesh are placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshKind {
    Uniform,
    /// Interior nodes of the uniform mesh moved independently by a uniform
    /// random offset in `[-fraction * h, fraction * h]`.
    Perturbed { fraction: f64, seed: u64 },
}

/// Name of the generator used for perturbed meshes, reported in run headers.
pub const MESH_RNG: &str = "ChaCha8";

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    pub kind: MeshKind,
    /// `N + 1` nodes, first `a`, last `b`.
    pub nodes: Vec<f64>,
    pub sizes: Vec<f64>,
    /// Largest cell size.
    pub h: f64,
    /// `h / min h_j`.
    pub sigma: f64,
    uniform: bool,
}

pub fn make_mesh(a: f64, b: f64, n: usize, kind: MeshKind) -> Result<Mesh1D> {
    if n < 4 {
        return Err(UwdgError::Config(format!("mesh needs at least 4 cells, got {n}")));
    }
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(UwdgError::Config(format!("invalid interval [{a}, {b}]")));
    }
    let h0 = (b - a) / n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|i| a + i as f64 * h0).collect();
    nodes[n] = b;
    if let MeshKind::Perturbed { fraction, seed } = kind {
        if !(0.0..0.5).contains(&fraction) {
            return Err(UwdgError::Config(format!(
                "perturbation fraction must lie in [0, 0.5), got {fraction}"
            )));
        }
        if fraction > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for node in nodes.iter_mut().take(n).skip(1) {
                *node += rng.gen_range(-fraction..=fraction) * h0;
            }
        }
    }
    let sizes: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    let h = sizes.iter().cloned().fold(0.0, f64::max);
    let hmin = sizes.iter().cloned().fold(f64::INFINITY, f64::min);
    let uniform = sizes.iter().all(|&s| (s - h0).abs() <= 1e-12 * h0);
    Ok(Mesh1D { a, b, kind, nodes, sizes, h, sigma: h / hmin, uniform })
}

impl Mesh1D {
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        make_mesh(a, b, n, MeshKind::Uniform)
    }

    pub fn n_cells(&self) -> usize {
        self.sizes.len()
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// All cells have the same size (up to roundoff).
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn size(&self, j: usize) -> f64 {
        self.sizes[j]
    }

    pub fn left(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    pub fn right(&self, j: usize) -> f64 {
        self.nodes[j + 1]
    }

    pub fn center(&self, j: usize) -> f64 {
        0.5 * (self.nodes[j] + self.nodes[j + 1])
    }

    /// Periodic successor.
    pub fn next(&self, j: usize) -> usize {
        (j + 1) % self.n_cells()
    }

    /// Periodic predecessor.
    pub fn prev(&self, j: usize) -> usize {
        (j + self.n_cells() - 1) % self.n_cells()
    }

    /// Map a physical point of cell `j` to the reference interval.
    pub fn to_reference(&self, j: usize, x: f64) -> f64 {
        (x - self.center(j)) * 2.0 / self.sizes[j]
    }

    pub fn to_physical(&self, j: usize, xi: f64) -> f64 {
        self.center(j) + 0.5 * self.sizes[j] * xi
    }

    /// Wrap `x` into `[a, b)` and return its cell and reference coordinate.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let len = self.length();
        let mut y = (x - self.a).rem_euclid(len) + self.a;
        if y >= self.b {
            y = self.a;
        }
        let j = match self.nodes.binary_search_by(|p| p.partial_cmp(&y).unwrap()) {
            Ok(i) => i.min(self.n_cells() - 1),
            Err(i) => i - 1,
        };
        (j, self.to_reference(j, y).clamp(-1.0, 1.0))
    }
}
