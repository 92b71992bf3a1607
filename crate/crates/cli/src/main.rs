//! `releq`: spectra, bifurcation tables, branches and checks from the command line.
//!
//! Exit status 0 on success, 1 on a numerical failure, 2 on a usage error.

mod check;
mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::SymmetricEigen;
use releq::bifurcation::{bif_points, body_asymptotics_check, n_index, sigma};
use releq::continuation::{branch_switch, continue_branch, verify_branch, ContinuationOptions, Direction};
use releq::potentials::{hessian_at, polygon_config};
use releq::symmetry::{classify_configuration, extract_blocks, SYMMETRY_TOL};
use releq::{DnlsPotential, Family, SystemSpec};

use output::*;

#[derive(Parser)]
#[command(name = "releq", version, about = "Bifurcations of polygonal relative equilibria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hessian blocks, sign indices and n_h at one parameter value.
    Spectrum(SpectrumArgs),
    /// Table of bifurcation values with their degree jumps.
    Bifpoints(BifArgs),
    /// Switch onto a bifurcating branch and follow it.
    Continue(ContinueArgs),
    /// Decompose a symmetric configuration into h-gons and 2h-gons.
    Classify(ClassifyArgs),
    /// Run the built-in consistency checks.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Vortex,
    Body,
    Alpha,
    DnlsCubic,
    DnlsSaturable,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Exponent for `--family alpha`.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n: usize,
}

impl SystemArgs {
    fn spec(&self, mu: f64) -> Result<SystemSpec, Failure> {
        let family = match (self.family, self.alpha) {
            (FamilyArg::Alpha, Some(alpha)) => Family::Celestial { alpha },
            (FamilyArg::Alpha, None) => return Err(Failure::Usage("--family alpha needs --alpha".into())),
            (_, Some(_)) => return Err(Failure::Usage("--alpha is only valid with --family alpha".into())),
            (FamilyArg::Vortex, None) => Family::vortex(),
            (FamilyArg::Body, None) => Family::body(),
            (FamilyArg::DnlsCubic, None) => Family::Dnls(DnlsPotential::Cubic),
            (FamilyArg::DnlsSaturable, None) => Family::Dnls(DnlsPotential::Saturable),
        };
        Ok(SystemSpec::new(family, self.n, mu)?)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BifArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Ring sizes for the μ_k/s_1 table (k = 1, 2, 3) of the gravitational family.
    #[arg(long, value_delimiter = ',')]
    asymptotics: Vec<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Plus,
    Minus,
}

#[derive(Args)]
struct ContinueArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    k: usize,
    /// Which bifurcation value of mode k, counted from the smallest.
    #[arg(long, default_value_t = 0)]
    root: usize,
    #[arg(long, value_enum, default_value = "plus")]
    side: Side,
    /// Radius of the first point off the polygon.
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,
    #[arg(long)]
    ds: Option<f64>,
    #[arg(long)]
    ds_min: Option<f64>,
    #[arg(long)]
    ds_max: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    mu_bound: Option<f64>,
    #[arg(long)]
    norm_bound: Option<f64>,
    #[arg(long, env = "RELEQ_NEWTON_TOL")]
    newton_tol: Option<f64>,
    #[arg(long, env = "RELEQ_COLLISION_TOL")]
    collision_tol: Option<f64>,
    /// Branch file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Step table; defaults to the branch file with a `.csv` extension.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// JSON file: a branch file or `{"center": [re, im] | null, "ring": [[re, im], ...]}`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    h: usize,
    /// Branch point to classify when the input is a branch file (default: last).
    #[arg(long)]
    index: Option<usize>,
    #[arg(long, default_value_t = SYMMETRY_TOL, env = "RELEQ_SYMMETRY_TOL")]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Ring sizes to check.
    #[arg(long, value_delimiter = ',', default_values_t = check::DEFAULT_GRID)]
    n: Vec<usize>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<releq::Error> for Failure {
    fn from(e: releq::Error) -> Self {
        match e {
            releq::Error::Domain(_) | releq::Error::InvalidDivisor { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Numerical(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Numerical(format!("json: {e}"))
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn csv_table<T: serde::Serialize>(rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<String, Failure> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Numerical(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|h| n % h == 0).collect()
}

/// Mode in `[1, n/2] ∪ {n}` with the same sign index as `k`.
fn mode_rep(n: usize, k: usize) -> usize {
    if k == n || 2 * k <= n {
        k
    } else {
        n - k
    }
}

fn run_spectrum(a: &SpectrumArgs) -> Result<(), Failure> {
    let spec = a.system.spec(a.mu)?;
    let (x0, omega) = polygon_config(&spec);
    let blocks = extract_blocks(&hessian_at(&spec, &x0)?, spec.layout())?;
    let modes: Vec<ModeJson> = blocks
        .blocks
        .iter()
        .map(|(k, b)| {
            let mut eigenvalues: Vec<f64> = SymmetricEigen::new(b.clone()).eigenvalues.iter().copied().collect();
            eigenvalues.sort_by(f64::total_cmp);
            ModeJson { k: *k, dim: b.nrows(), block: MatrixJson::new(b), eigenvalues, sigma: sigma(&spec, mode_rep(spec.n(), *k)).sigma.as_i8() }
        })
        .collect();
    let text = match a.out.format {
        Format::Json => {
            let n_index = divisors(spec.n())
                .into_iter()
                .map(|h| Ok(IndexJson { h, n_h: n_index(&spec, h)? }))
                .collect::<Result<_, releq::Error>>()?;
            json(&SpectrumJson {
                schema_version: SCHEMA_VERSION,
                spec: SpecJson::new(&spec, true),
                omega,
                off_block: blocks.off_block,
                modes,
                n_index,
            })?
        }
        Format::Csv => {
            #[derive(serde::Serialize)]
            struct Row {
                k: usize,
                dim: usize,
                sigma: i8,
                eigenvalues: String,
            }
            let rows = modes.iter().map(|m| Row {
                k: m.k,
                dim: m.dim,
                sigma: m.sigma,
                eigenvalues: m
                    .eigenvalues
                    .iter()
                    .map(|v| serde_json::to_string(v).expect("finite eigenvalue"))
                    .collect::<Vec<_>>()
                    .join(";"),
            });
            csv_table(rows, &["k", "dim", "sigma", "eigenvalues"])?
        }
    };
    emit(a.out.out.as_deref(), &text)
}

fn run_bifpoints(a: &BifArgs) -> Result<(), Failure> {
    let spec = a.system.spec(0.0)?;
    let points = bif_points(&spec)?;
    let asymptotics = if a.asymptotics.is_empty() {
        None
    } else {
        if !matches!(spec.family(), Family::Celestial { alpha } if *alpha == 2.0) {
            return Err(Failure::Usage("--asymptotics is only defined for --family body".into()));
        }
        if a.out.format == Format::Csv {
            return Err(Failure::Usage("--asymptotics is only written in JSON".into()));
        }
        let mut rows = Vec::new();
        for k in 1..=3 {
            for (n, ratio) in body_asymptotics_check(k, &a.asymptotics)? {
                rows.push(AsymptoticsJson { k, n, ratio });
            }
        }
        Some(rows)
    };
    let text = match a.out.format {
        Format::Json => json(&BifJson {
            schema_version: SCHEMA_VERSION,
            spec: SpecJson::new(&spec, false),
            points: points.iter().map(BifPointJson::from).collect(),
            asymptotics,
        })?,
        Format::Csv => csv_table(
            points.iter().map(BifRow::from),
            &["k", "h", "mu", "eta", "provenance", "physical", "note"],
        )?,
    };
    emit(a.out.out.as_deref(), &text)
}

fn run_continue(a: &ContinueArgs) -> Result<(), Failure> {
    let spec = a.system.spec(0.0)?;
    let n = spec.n();
    let valid = a.k == n && spec.family().has_center() || (1..=n / 2).contains(&a.k);
    if !valid {
        return Err(Failure::Usage(format!("mode k = {} does not exist for n = {n}", a.k)));
    }
    let candidates: Vec<_> = bif_points(&spec)?.into_iter().filter(|p| p.k == a.k && !p.trivial).collect();
    let Some(origin) = candidates.get(a.root) else {
        return Err(Failure::Usage(format!(
            "mode k = {} has {} bifurcation value(s); --root {} is out of range",
            a.k,
            candidates.len(),
            a.root
        )));
    };
    let d = ContinuationOptions::default();
    let opts = ContinuationOptions {
        ds: a.ds.unwrap_or(d.ds),
        ds_min: a.ds_min.unwrap_or(d.ds_min),
        ds_max: a.ds_max.unwrap_or(d.ds_max),
        newton_tol: a.newton_tol.unwrap_or(d.newton_tol),
        max_steps: a.max_steps.unwrap_or(d.max_steps),
        mu_bound: a.mu_bound.unwrap_or(d.mu_bound),
        norm_bound: a.norm_bound.unwrap_or(d.norm_bound),
        collision_tol: a.collision_tol.unwrap_or(d.collision_tol),
    };
    if !(opts.ds_min > 0.0 && opts.ds_min <= opts.ds && opts.ds <= opts.ds_max) {
        return Err(Failure::Usage("step sizes must satisfy 0 < ds-min <= ds <= ds-max".into()));
    }
    let direction = match a.side {
        Side::Plus => Direction::Plus,
        Side::Minus => Direction::Minus,
    };
    let seed = branch_switch(&spec, origin, direction, a.eps, opts.newton_tol)?;
    let branch = continue_branch(&spec, &seed, &opts)?;
    let report = verify_branch(&branch, &spec)?;
    fs::write(&a.out, json(&BranchJson::new(&spec, &branch, &report))?)?;
    let rows = branch.points.iter().enumerate().map(|(step, p)| BranchRow {
        step,
        mu: p.mu,
        norm: p.norm(),
        min_distance: p.x.min_distance().0,
    });
    let csv_path = a.csv.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    fs::write(csv_path, csv_table(rows, &["step", "mu", "norm", "min_distance"])?)?;
    eprintln!(
        "{} steps, termination {}, max residual {:e}, maximality {}",
        branch.steps(),
        branch.termination.as_str(),
        report.max_residual,
        if report.maximal { "pass" } else { "fail" }
    );
    Ok(())
}

fn run_classify(a: &ClassifyArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.input)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", a.input.display())))?;
    let x = parse_configuration(&value, a.index).map_err(Failure::Usage)?;
    if x.ring.is_empty() || a.h == 0 || x.ring.len() % a.h != 0 {
        return Err(Failure::Usage(format!("h = {} does not divide the ring size {}", a.h, x.ring.len())));
    }
    let c = classify_configuration(&x, a.h, a.tol)?;
    emit(a.out.as_deref(), &json(&ClassificationJson::from(&c))?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => run_spectrum(a),
        Command::Bifpoints(a) => run_bifpoints(a),
        Command::Continue(a) => run_continue(a),
        Command::Classify(a) => run_classify(a),
        Command::Check(a) => {
            if a.n.is_empty() {
                Err(Failure::Usage("--n needs at least one ring size".into()))
            } else if check::run(&a.n, a.inject_fault) {
                Ok(())
            } else {
                Err(Failure::Numerical("checks failed".into()))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Failure::Usage(_) => 2,
                Failure::Numerical(_) => 1,
            })
        }
    }
}
