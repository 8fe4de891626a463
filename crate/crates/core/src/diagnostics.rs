//! Error metrics and observed convergence orders.

use crate::basis::{default_quadrature_points, gauss_rule, LegendreTable};
use crate::error::Result;
use crate::flux::FluxSetup;
use crate::projection::{interface_data, project_star, AnalyticField, DGFunction, SpecialPoints};
use num_complex::Complex64;
use std::fmt;

type C = Complex64;

/// RMS over interfaces of the errors in the two numerical fluxes.
pub fn flux_errors(setup: &FluxSetup, u_h: &DGFunction, f: &dyn AnalyticField, t: f64) -> (f64, f64) {
    let mesh = &setup.mesh;
    let n = mesh.n_cells();
    let data = interface_data(f, t, mesh);
    let (mut ef, mut efx) = (0.0, 0.0);
    for j in 0..n {
        let flux = setup.interface.flux(u_h.right_trace(j), u_h.left_trace(mesh.next(j)));
        let d = data[j] - flux;
        ef += d[0].norm_sqr();
        efx += d[1].norm_sqr();
    }
    ((ef / n as f64).sqrt(), (efx / n as f64).sqrt())
}

/// Cell-wise integral of `g(x, xi)` over every cell with the default rule.
fn per_cell<F: FnMut(usize, f64, f64) -> C>(u_h: &DGFunction, mut g: F) -> Vec<C> {
    let mesh = &u_h.mesh;
    let rule = gauss_rule(default_quadrature_points(u_h.k));
    (0..mesh.n_cells())
        .map(|j| {
            let half = 0.5 * mesh.size(j);
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&xi, &w)| g(j, mesh.to_physical(j, xi), xi) * (w * half))
                .sum()
        })
        .collect()
}

/// RMS over cells of the cell-average error.
pub fn cell_average_error(u_h: &DGFunction, f: &dyn AnalyticField, t: f64) -> f64 {
    let mesh = &u_h.mesh;
    let ints = per_cell(u_h, |_, x, _| f.eval(x, t, 0));
    let n = mesh.n_cells();
    let sum: f64 = (0..n)
        .map(|j| (ints[j] / mesh.size(j) - u_h.cell(j)[0]).norm_sqr())
        .sum();
    (sum / n as f64).sqrt()
}

/// `||u - u_h||` by quadrature.
pub fn l2_error(u_h: &DGFunction, f: &dyn AnalyticField, t: f64) -> f64 {
    let k = u_h.k;
    let ints = per_cell(u_h, |j, x, xi| {
        let tab = LegendreTable::new(k, xi);
        let uh: C = u_h.cell(j).iter().zip(&tab.value).map(|(c, v)| c * v).sum();
        C::from((f.eval(x, t, 0) - uh).norm_sqr())
    });
    ints.iter().map(|c| c.re).sum::<f64>().max(0.0).sqrt()
}

/// `||u_h - P-star u||`.
pub fn projection_error(setup: &FluxSetup, u_h: &DGFunction, f: &dyn AnalyticField, t: f64) -> Result<f64> {
    Ok(u_h.sub(&project_star(setup, f, t)?).l2_norm())
}

/// RMS point errors over the special point sets; `None` when a set is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointErrors {
    pub e_u: Option<f64>,
    pub e_ux: Option<f64>,
    pub e_uxx: Option<f64>,
}

pub fn point_errors(u_h: &DGFunction, f: &dyn AnalyticField, t: f64, pts: &[SpecialPoints]) -> PointErrors {
    let mesh = &u_h.mesh;
    let rms = |s: usize, pick: &dyn Fn(&SpecialPoints) -> &Vec<f64>| -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (j, p) in pts.iter().enumerate() {
            for &xi in pick(p) {
                let x = mesh.to_physical(j, xi);
                sum += (f.eval(x, t, s) - u_h.eval(j, xi, s)).norm_sqr();
                count += 1;
            }
        }
        (count > 0).then(|| (sum / count as f64).sqrt())
    };
    PointErrors {
        e_u: rms(0, &|p| &p.d0),
        e_ux: rms(1, &|p| &p.d1),
        e_uxx: rms(2, &|p| &p.d2),
    }
}

/// Orders `log(e_{i-1} / e_i) / log(N_i / N_{i-1})`; the first entry and any
/// pair with a missing or non-positive error is `None`.
pub fn observed_orders(errors: &[Option<f64>], ns: &[usize]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            let (e0, e1) = (errors[i - 1]?, errors[i]?);
            if !(e0 > 0.0 && e1 > 0.0) || ns[i] <= ns[i - 1] {
                return None;
            }
            Some((e0 / e1).ln() / (ns[i] as f64 / ns[i - 1] as f64).ln())
        })
        .collect()
}

/// A reported quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    L2,
    EP,
    Euxx,
    Eux,
    Eu,
    Ef,
    Efx,
    Ec,
    ZetaL2,
    ZetaXX,
    ZetaJump,
    ZetaJumpX,
    EStar,
}

impl Metric {
    pub const ALL: [Metric; 13] = [
        Metric::L2,
        Metric::EP,
        Metric::Euxx,
        Metric::Eux,
        Metric::Eu,
        Metric::Ef,
        Metric::Efx,
        Metric::Ec,
        Metric::ZetaL2,
        Metric::ZetaXX,
        Metric::ZetaJump,
        Metric::ZetaJumpX,
        Metric::EStar,
    ];

    /// The eight columns of the standard convergence table.
    pub const TABLE: [Metric; 8] = [
        Metric::L2,
        Metric::EP,
        Metric::Euxx,
        Metric::Eux,
        Metric::Eu,
        Metric::Ef,
        Metric::Efx,
        Metric::Ec,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::L2 => "L2",
            Metric::EP => "E_P",
            Metric::Euxx => "E_uxx",
            Metric::Eux => "E_ux",
            Metric::Eu => "E_u",
            Metric::Ef => "E_f",
            Metric::Efx => "E_fx",
            Metric::Ec => "E_c",
            Metric::ZetaL2 => "zeta",
            Metric::ZetaXX => "zeta_xx",
            Metric::ZetaJump => "E_jump_zeta",
            Metric::ZetaJumpX => "E_jump_zeta_x",
            Metric::EStar => "E_star",
        }
    }

    /// Case-insensitive, ignoring underscores; `E*` is accepted for `E_star`.
    pub fn parse(s: &str) -> Option<Metric> {
        let key = s.trim().to_ascii_lowercase().replace('_', "").replace('*', "star");
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.name().to_ascii_lowercase().replace('_', "") == key)
    }

    /// Whether the metric is an L2 norm over the whole domain.
    pub fn is_domain_norm(&self) -> bool {
        matches!(self, Metric::L2 | Metric::EP | Metric::ZetaL2 | Metric::ZetaXX | Metric::EStar)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One mesh of a study. A `None` value is reported as DNE.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub values: Vec<(Metric, Option<f64>)>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    /// Why the row is incomplete, if it is.
    pub annotation: Option<String>,
}

impl ReportRow {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values.iter().find(|(k, _)| *k == m).and_then(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    /// `(key, value)` pairs written as header comments.
    pub metadata: Vec<(String, String)>,
    pub metrics: Vec<Metric>,
    pub rows: Vec<ReportRow>,
}

impl ErrorReport {
    pub fn ns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn column(&self, m: Metric) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.get(m)).collect()
    }

    /// Orders between successive rows; defined only when `N` doubles.
    pub fn orders(&self, m: Metric) -> Vec<Option<f64>> {
        let ns = self.ns();
        let mut o = observed_orders(&self.column(m), &ns);
        for i in 1..ns.len() {
            if ns[i] != 2 * ns[i - 1] {
                o[i] = None;
            }
        }
        o
    }

    /// Order at the finest pair of meshes.
    pub fn finest_order(&self, m: Metric) -> Option<f64> {
        self.orders(m).last().copied().flatten()
    }

    pub fn value(&self, n: usize, m: Metric) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).and_then(|r| r.get(m))
    }
}
