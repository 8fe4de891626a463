//! Study configuration, convergence sweeps and report output.

use crate::correction::{default_q_max, reference_interpolant, zeta_metrics};
use crate::diagnostics::{
    cell_average_error, flux_errors, l2_error, point_errors, projection_error, ErrorReport, Metric,
    ReportRow,
};
use crate::error::{Result, UwdgError};
use crate::flux::{Assumption, FluxConfig, FluxSetup};
use crate::mesh::{make_mesh, MeshKind, MESH_RNG};
use crate::projection::{project_l2, special_points_on_mesh, AnalyticField, PlaneWave};
use crate::siac::{kernel_coeffs, postprocessed_error};
use crate::solver::{integrate, DGOperator, TimeScheme};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

/// Initial data of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// The corrected reference interpolant `u_I(0)`.
    ReferenceInterpolant,
    /// The L2 projection of the initial data.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldChoice {
    /// `exp(i kappa (x - kappa t))`.
    PlaneWave(f64),
}

impl FieldChoice {
    pub fn field(&self) -> PlaneWave {
        match *self {
            FieldChoice::PlaneWave(k) => PlaneWave::new(k),
        }
    }

    fn describe(&self) -> String {
        match self {
            FieldChoice::PlaneWave(k) => format!("exp(i*{k}*(x-{k}*t))"),
        }
    }
}

/// How domain L2 norms are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormConvention {
    /// The L2 norm divided by `sqrt(b - a)`, the convention of the published
    /// convergence tables.
    Rms,
    /// The plain L2 norm.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Pretty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub k: usize,
    pub ns: Vec<usize>,
    pub flux: FluxConfig,
    pub mesh: MeshKind,
    pub domain: (f64, f64),
    pub t_end: f64,
    /// Step constant; `None` selects the default for `k`.
    pub c: Option<f64>,
    pub init: Init,
    pub metrics: Vec<Metric>,
    /// `None` selects `floor((k - 1) / 2)`.
    pub q_max: Option<usize>,
    pub field: FieldChoice,
    pub norm: NormConvention,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            k: 2,
            ns: vec![10, 20, 40, 80, 160],
            flux: FluxConfig::central(),
            mesh: MeshKind::Uniform,
            domain: (0.0, 2.0 * std::f64::consts::PI),
            t_end: 1.0,
            c: None,
            init: Init::ReferenceInterpolant,
            metrics: Metric::TABLE.to_vec(),
            q_max: None,
            field: FieldChoice::PlaneWave(3.0),
            norm: NormConvention::Rms,
            out: None,
            format: Format::Csv,
        }
    }
}

fn bad(key: &str, value: &str) -> UwdgError {
    UwdgError::Config(format!("invalid value {value:?} for {key}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

/// Parse `uniform` or `perturbed:<fraction>:<seed>`.
pub fn parse_mesh(value: &str) -> Result<MeshKind> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("uniform") {
        return Ok(MeshKind::Uniform);
    }
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        ["perturbed", frac, seed] => {
            let fraction: f64 = parse_num("mesh", frac)?;
            if !(0.0..0.5).contains(&fraction) {
                return Err(bad("mesh", value));
            }
            Ok(MeshKind::Perturbed { fraction, seed: parse_num("mesh", seed)? })
        }
        _ => Err(bad("mesh", value)),
    }
}

/// Parse `a,b,c` tilde flux parameters.
pub fn parse_flux(value: &str) -> Result<FluxConfig> {
    let vals: Vec<f64> = value.split(',').map(|s| parse_num("flux", s)).collect::<Result<_>>()?;
    match vals.as_slice() {
        [a, b, c] if vals.iter().all(|v| v.is_finite()) => Ok(FluxConfig::new(*a, *b, *c)),
        _ => Err(bad("flux", value)),
    }
}

impl StudyConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().trim_start_matches("--") {
            "k" => self.k = parse_num("k", value)?,
            "N" | "n" | "ns" => {
                self.ns = value.split(',').map(|s| parse_num("N", s)).collect::<Result<_>>()?
            }
            "flux" => self.flux = parse_flux(value)?,
            "mesh" => self.mesh = parse_mesh(value)?,
            "tend" | "t_end" => self.t_end = parse_num("tend", value)?,
            "c" => self.c = Some(parse_num("c", value)?),
            "init" => {
                self.init = match value.to_ascii_lowercase().as_str() {
                    "ui" => Init::ReferenceInterpolant,
                    "l2" => Init::L2,
                    _ => return Err(bad("init", value)),
                }
            }
            "metrics" => {
                self.metrics = if value.eq_ignore_ascii_case("all") {
                    Metric::ALL.to_vec()
                } else if value.eq_ignore_ascii_case("table") {
                    Metric::TABLE.to_vec()
                } else {
                    value
                        .split(',')
                        .map(|s| Metric::parse(s).ok_or_else(|| bad("metrics", s)))
                        .collect::<Result<_>>()?
                }
            }
            "qmax" => self.q_max = Some(parse_num("qmax", value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "pretty" => Format::Pretty,
                    _ => return Err(bad("format", value)),
                }
            }
            "field" => {
                self.field = match value {
                    "plane3" => FieldChoice::PlaneWave(3.0),
                    "plane1" => FieldChoice::PlaneWave(1.0),
                    _ => return Err(bad("field", value)),
                }
            }
            "norm" => {
                self.norm = match value {
                    "rms" => NormConvention::Rms,
                    "l2" => NormConvention::L2,
                    _ => return Err(bad("norm", value)),
                }
            }
            other => return Err(UwdgError::Config(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| UwdgError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=6).contains(&self.k) {
            return Err(UwdgError::Config(format!("k must lie in [2, 6], got {}", self.k)));
        }
        if self.ns.is_empty() {
            return Err(UwdgError::Config("empty N list".into()));
        }
        if self.ns.iter().any(|&n| n < 4) {
            return Err(UwdgError::Config("every N must be at least 4".into()));
        }
        if self.ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(UwdgError::Config("N list must be strictly increasing".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(UwdgError::Config(format!("invalid end time {}", self.t_end)));
        }
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(UwdgError::Config(format!("invalid step constant {c}")));
            }
        }
        if let Some(q) = self.q_max {
            if q > default_q_max(self.k) {
                return Err(UwdgError::Config(format!(
                    "qmax {q} exceeds floor((k-1)/2) = {}",
                    default_q_max(self.k)
                )));
            }
        }
        if self.metrics.is_empty() {
            return Err(UwdgError::Config("no metrics selected".into()));
        }
        Ok(())
    }

    pub fn step_constant(&self) -> f64 {
        self.c.unwrap_or_else(|| TimeScheme::default_c(self.k))
    }

    pub fn q(&self) -> usize {
        self.q_max.unwrap_or_else(|| default_q_max(self.k))
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let mesh = match self.mesh {
            MeshKind::Uniform => "uniform".to_string(),
            MeshKind::Perturbed { fraction, seed } => {
                format!("perturbed fraction={fraction} seed={seed} rng={MESH_RNG}")
            }
        };
        let init = match self.init {
            Init::ReferenceInterpolant => "uI",
            Init::L2 => "l2",
        };
        let mut m = vec![
            ("k".into(), self.k.to_string()),
            ("flux".into(), self.flux.to_string()),
            ("mesh".into(), mesh),
            ("domain".into(), format!("{},{}", self.domain.0, self.domain.1)),
            ("field".into(), self.field.describe()),
            ("t_end".into(), self.t_end.to_string()),
            ("dt_constant".into(), self.step_constant().to_string()),
            ("dt_rule".into(), "c*h^2.5 (RK4)".into()),
            ("init".into(), init.into()),
            ("qmax".into(), self.q().to_string()),
            (
                "norm".into(),
                match self.norm {
                    NormConvention::Rms => "rms (L2 norms divided by sqrt(b-a))".into(),
                    NormConvention::L2 => "l2".into(),
                },
            ),
        ];
        if matches!(self.mesh, MeshKind::Perturbed { .. }) {
            m.push((
                "note".into(),
                "perturbed-mesh error magnitudes depend on the seed; compare orders only".into(),
            ));
        }
        m
    }
}

fn empty_row(cfg: &StudyConfig, n: usize, annotation: String) -> ReportRow {
    ReportRow {
        n,
        values: cfg.metrics.iter().map(|&m| (m, None)).collect(),
        dt: None,
        steps: None,
        annotation: Some(annotation),
    }
}

/// Run one mesh of a study. Failures become row annotations.
pub fn run_case(cfg: &StudyConfig, n: usize) -> ReportRow {
    match try_run_case(cfg, n) {
        Ok(row) => row,
        Err(e) => empty_row(cfg, n, e.to_string()),
    }
}

fn try_run_case(cfg: &StudyConfig, n: usize) -> Result<ReportRow> {
    let mesh = Arc::new(make_mesh(cfg.domain.0, cfg.domain.1, n, cfg.mesh)?);
    let setup = Arc::new(FluxSetup::new(mesh.clone(), cfg.k, cfg.flux)?);
    if setup.class.tag == Assumption::Unsupported {
        return Err(UwdgError::Unsupported(setup.class.diagnostics.note.clone()));
    }
    let field = cfg.field.field();
    let f: &dyn AnalyticField = &field;
    let q = cfg.q();
    let u0 = match cfg.init {
        Init::ReferenceInterpolant => reference_interpolant(&setup, f, 0.0, q)?,
        Init::L2 => project_l2(f, 0.0, &mesh, cfg.k),
    };
    let op = DGOperator::new(setup.clone());
    let run = integrate(&op, &u0, TimeScheme::new(cfg.step_constant(), cfg.t_end))?;
    let t = cfg.t_end;
    let u_h = &run.solution;

    let wants = |ms: &[Metric]| cfg.metrics.iter().any(|m| ms.contains(m));
    let fluxes = wants(&[Metric::Ef, Metric::Efx]).then(|| flux_errors(&setup, u_h, f, t));
    let points = if wants(&[Metric::Eu, Metric::Eux, Metric::Euxx]) {
        Some(point_errors(u_h, f, t, &special_points_on_mesh(&setup)?))
    } else {
        None
    };
    let zeta = if wants(&[Metric::ZetaL2, Metric::ZetaXX, Metric::ZetaJump, Metric::ZetaJumpX]) {
        Some(zeta_metrics(&reference_interpolant(&setup, f, t, q)?, u_h))
    } else {
        None
    };
    let mut notes = Vec::new();
    let mut values = Vec::new();
    for &m in &cfg.metrics {
        let v = match m {
            Metric::L2 => Some(l2_error(u_h, f, t)),
            Metric::EP => Some(projection_error(&setup, u_h, f, t)?),
            Metric::Euxx => points.and_then(|p| p.e_uxx),
            Metric::Eux => points.and_then(|p| p.e_ux),
            Metric::Eu => points.and_then(|p| p.e_u),
            Metric::Ef => fluxes.map(|e| e.0),
            Metric::Efx => fluxes.map(|e| e.1),
            Metric::Ec => Some(cell_average_error(u_h, f, t)),
            Metric::ZetaL2 => zeta.map(|z| z.zeta_l2),
            Metric::ZetaXX => zeta.map(|z| z.zeta_xx),
            Metric::ZetaJump => zeta.map(|z| z.jump),
            Metric::ZetaJumpX => zeta.map(|z| z.jump_x),
            Metric::EStar => {
                if mesh.is_uniform() {
                    Some(postprocessed_error(u_h, f, t, &kernel_coeffs(cfg.k)?)?)
                } else {
                    notes.push("E_star needs a uniform mesh".to_string());
                    None
                }
            }
        };
        let scale = match cfg.norm {
            NormConvention::Rms if m.is_domain_norm() => 1.0 / mesh.length().sqrt(),
            _ => 1.0,
        };
        values.push((m, v.map(|x| x * scale)));
    }
    Ok(ReportRow {
        n,
        values,
        dt: Some(run.dt),
        steps: Some(run.steps),
        annotation: (!notes.is_empty()).then(|| notes.join("; ")),
    })
}

/// Run every mesh of a study (concurrently) and collect the rows in order.
pub fn run_study(cfg: &StudyConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let rows: Vec<ReportRow> = cfg.ns.par_iter().map(|&n| run_case(cfg, n)).collect();
    let mut metadata = cfg.metadata();
    if let Ok(mesh) = make_mesh(cfg.domain.0, cfg.domain.1, cfg.ns[0], cfg.mesh) {
        let class = crate::flux::classify_assumption(cfg.flux, &mesh, cfg.k);
        metadata.push(("assumption".into(), class.tag.to_string()));
    }
    Ok(ErrorReport { metadata, metrics: cfg.metrics.clone(), rows })
}

/// `4.200000E-03` style with the given number of digits after the point.
pub fn format_sci(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.*e}", digits, x);
    let (mant, exp) = s.split_once('e').unwrap();
    let e: i32 = exp.parse().unwrap();
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}E{sign}{:02}", e.abs())
}

const DNE: &str = "DNE";

fn cells(report: &ErrorReport, sci_digits: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["N".to_string()];
    for m in &report.metrics {
        header.push(m.name().to_string());
        header.push("order".to_string());
    }
    let orders: Vec<Vec<Option<f64>>> = report.metrics.iter().map(|&m| report.orders(m)).collect();
    let body = report
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut line = vec![row.n.to_string()];
            for (mi, &m) in report.metrics.iter().enumerate() {
                line.push(row.get(m).map_or(DNE.into(), |v| format_sci(v, sci_digits)));
                line.push(orders[mi][i].map_or(DNE.into(), |o| format!("{o:.2}")));
            }
            line
        })
        .collect();
    (header, body)
}

/// Render a report as CSV (with `#` metadata lines) or as an aligned table.
pub fn render_report(report: &ErrorReport, format: Format) -> String {
    let mut out = String::new();
    for (k, v) in &report.metadata {
        let _ = writeln!(out, "# {k}={v}");
    }
    for row in &report.rows {
        if let Some(a) = &row.annotation {
            let _ = writeln!(out, "# N={}: {a}", row.n);
        }
        if let (Some(dt), Some(steps)) = (row.dt, row.steps) {
            let _ = writeln!(out, "# N={}: dt={} steps={steps}", row.n, format_sci(dt, 6));
        }
    }
    match format {
        Format::Csv => {
            let (header, body) = cells(report, 6);
            let _ = writeln!(out, "{}", header.join(","));
            for line in body {
                let _ = writeln!(out, "{}", line.join(","));
            }
        }
        Format::Pretty => {
            let (header, body) = cells(report, 2);
            let widths: Vec<usize> = (0..header.len())
                .map(|c| body.iter().map(|l| l[c].len()).chain([header[c].len()]).max().unwrap())
                .collect();
            let fmt_line = |l: &[String]| {
                l.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join("  ")
            };
            let _ = writeln!(out, "{}", fmt_line(&header));
            for line in body {
                let _ = writeln!(out, "{}", fmt_line(&line));
            }
        }
    }
    out
}

pub fn emit_report<W: Write>(report: &ErrorReport, format: Format, mut w: W) -> std::io::Result<()> {
    w.write_all(render_report(report, format).as_bytes())
}
