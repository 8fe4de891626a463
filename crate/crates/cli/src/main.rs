use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use uwdg::flux::scale_flux;
use uwdg::harness::{emit_report, parse_flux, run_study, StudyConfig};
use uwdg::projection::special_points;
use uwdg::siac::kernel_coeffs;

#[derive(Parser)]
#[command(name = "uwdg", version, about = "Ultra-weak DG convergence laboratory for i u_t + u_xx = 0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print b, c and the special point sets for one cell.
    Points {
        #[arg(long)]
        k: usize,
        /// Tilde flux parameters `alpha1,beta1,beta2`.
        #[arg(long, allow_hyphen_values = true)]
        flux: String,
        /// Cell size.
        #[arg(long, default_value_t = 1.0)]
        h: f64,
    },
    /// Print the SIAC kernel weights.
    Kernel {
        #[arg(long)]
        k: usize,
    },
    /// Run a single mesh.
    Run(StudyArgs),
    /// Run a convergence study over a list of meshes.
    Study(StudyArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// `key = value` config file, applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated cell counts.
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    flux: Option<String>,
    /// `uniform` or `perturbed:<fraction>:<seed>`.
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    tend: Option<String>,
    /// Step constant in `dt = c h^2`.
    #[arg(long)]
    c: Option<String>,
    /// `uI` or `l2`.
    #[arg(long)]
    init: Option<String>,
    /// Comma-separated metric names, `table` or `all`.
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    qmax: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// `csv` or `pretty`.
    #[arg(long)]
    format: Option<String>,
    /// `plane3` or `plane1`.
    #[arg(long)]
    field: Option<String>,
    /// `rms` or `l2`.
    #[arg(long)]
    norm: Option<String>,
}

impl StudyArgs {
    fn config(&self) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            ("k", &self.k),
            ("N", &self.n),
            ("flux", &self.flux),
            ("mesh", &self.mesh),
            ("tend", &self.tend),
            ("c", &self.c),
            ("init", &self.init),
            ("metrics", &self.metrics),
            ("qmax", &self.qmax),
            ("out", &self.out),
            ("format", &self.format),
            ("field", &self.field),
            ("norm", &self.norm),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn fmt_list(xs: &[f64]) -> String {
    if xs.is_empty() {
        return "DNE".into();
    }
    xs.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(", ")
}

fn study(cfg: &StudyConfig) -> Result<()> {
    let report = run_study(cfg)?;
    match &cfg.out {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            emit_report(&report, cfg.format, std::io::BufWriter::new(file))?;
        }
        None => emit_report(&report, cfg.format, std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Points { k, flux, h } => {
            if !(h > 0.0 && h.is_finite()) {
                bail!("cell size must be positive, got {h}");
            }
            if k < 2 {
                bail!("k must be at least 2, got {k}");
            }
            let sf = scale_flux(parse_flux(&flux)?, h);
            let pts = special_points(k, h, &sf)?;
            println!("k={k} h={h} flux={flux}");
            println!("b={}", pts.b);
            println!("c={}", pts.c);
            println!("D0: {}", fmt_list(&pts.d0));
            println!("D1: {}", fmt_list(&pts.d1));
            println!("D2: {}", fmt_list(&pts.d2));
        }
        Command::Kernel { k } => {
            let spec = kernel_coeffs(k)?;
            println!("k={k} spline_order={} half_width={}", spec.order, spec.half_width);
            for (i, w) in spec.weights.iter().enumerate() {
                println!("c[{:+}]={w:.15}", i as i64 - k as i64);
            }
            println!("sum={:.15}", spec.weights.iter().sum::<f64>());
        }
        Command::Run(args) => {
            let cfg = args.config()?;
            if cfg.ns.len() != 1 {
                bail!("run takes a single N, got {}", cfg.ns.len());
            }
            study(&cfg)?;
        }
        Command::Study(args) => study(&args.config()?)?,
    }
    Ok(())
}
