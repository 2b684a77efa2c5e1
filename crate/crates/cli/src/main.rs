//! `specsing`: delta-array scans, threshold tables of pumped slabs, and the
//! cross-engine verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numerical failure.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use specsing::config::{Command, DeltasConfig, OutputFormat, RunConfig, SlabConfig};
use specsing::delta::{closed_form_matrix, find_singularities_delta, k_grid};
use specsing::finder::{full_numeric_singularity, SingularityResult};
use specsing::optics::threshold_table;
use specsing::potential::{DeltaArray, WaveNumber};
use specsing::verify::{run_all, VerifyOptions};
use specsing::Error;

use output::{curves_path, emit, num, Csv};

#[derive(Parser)]
#[command(name = "specsing", version, about = "Spectral singularities of complex potentials on [0, 1]")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan |M22| of a delta array over k and locate its spectral singularities.
    Deltas(DeltasArgs),
    /// Threshold wavelengths and gains of an inhomogeneously pumped slab.
    Slab(SlabArgs),
    /// Run the cross-engine property suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides the config, standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct DeltasArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SlabArgs {
    #[command(flatten)]
    common: Common,
    /// Also emit lambda* and g* on a fine nu grid.
    #[arg(long)]
    curves: bool,
    /// Grid for --curves as START:STOP:STEP.
    #[arg(long, default_value = "0:0.5:0.01", requires = "curves")]
    nu_grid: String,
    /// Append the full nonlinear solve seeded at each first-order point.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Skip the nested second-order quadrature checks.
    #[arg(long)]
    quick: bool,
    /// Replace every absolute tolerance of the suite.
    #[arg(long)]
    tol: Option<f64>,
}

enum Failure {
    Verification,
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

fn numerical(e: Error) -> Failure {
    Failure::Numerical(e.to_string())
}

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Deltas(a) => cmd_deltas(&a),
        Cmd::Slab(a) => cmd_slab(&a),
        Cmd::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verification => eprintln!("verification failed"),
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Numerical(m) => eprintln!("numerical failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

/// Sizes the global worker pool; `SPECSING_THREADS` wins over the config.
fn init_threads(config_threads: usize) -> Result<(), Failure> {
    let threads = match std::env::var("SPECSING_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::Config(format!("SPECSING_THREADS = {v:?} is not a thread count")))?,
        Err(_) => config_threads,
    };
    // A second initialization in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

struct Loaded {
    cfg: RunConfig,
    out: Option<PathBuf>,
    format: OutputFormat,
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let cfg = RunConfig::load(&common.config).map_err(config_error)?;
    init_threads(cfg.numerics.threads)?;
    let out = common.out.clone().or_else(|| cfg.output.path.clone());
    let format = common.format.map(Into::into).unwrap_or(cfg.output.format);
    Ok(Loaded { cfg, out, format })
}

fn write(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    emit(path, text).map_err(|e| Failure::Config(format!("cannot write output: {e}")))
}

#[derive(Serialize)]
struct M22Row {
    k: f64,
    m22_re: f64,
    m22_im: f64,
    m22_abs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coupling_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coupling: Option<Complex64>,
}

fn m22_row(spec: &DeltaArray, k: f64, coupling: Option<(usize, Complex64)>) -> specsing::Result<M22Row> {
    let mut spec = spec.clone();
    if let Some((i, z)) = coupling {
        spec.couplings[i] = z;
    }
    let m = closed_form_matrix(&spec, WaveNumber::new(k)?)?.m22;
    Ok(M22Row {
        k,
        m22_re: m.re,
        m22_im: m.im,
        m22_abs: m.norm(),
        coupling_index: coupling.map(|c| c.0),
        coupling: coupling.map(|c| c.1),
    })
}

fn delta_rows(d: &DeltasConfig) -> specsing::Result<(Vec<M22Row>, Vec<M22Row>)> {
    let spec = d.array()?;
    let scan = k_grid(d.k_min, d.k_max, d.points)
        .into_par_iter()
        .map(|k| m22_row(&spec, k, None))
        .collect::<specsing::Result<Vec<_>>>()?;
    let roots = find_singularities_delta(&spec, d.k_min, d.k_max, d.points, d.strategy)?
        .iter()
        .map(|r| m22_row(&spec, r.k, r.coupling))
        .collect::<specsing::Result<Vec<_>>>()?;
    Ok((scan, roots))
}

fn cmd_deltas(args: &DeltasArgs) -> Result<(), Failure> {
    let loaded = load(&args.common)?;
    let Command::Deltas(d) = loaded.cfg.command().map_err(config_error)? else {
        return Err(Failure::Config("the deltas command needs a [deltas] block".into()));
    };
    let (scan, roots) = delta_rows(d).map_err(numerical)?;
    let text = match loaded.format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                scan: &'a [M22Row],
                roots: &'a [M22Row],
            }
            serde_json::to_string_pretty(&Doc { scan: &scan, roots: &roots }).expect("serializable") + "\n"
        }
        OutputFormat::Csv => {
            let mut csv =
                Csv::new(&["kind", "k", "m22_re", "m22_im", "m22_abs", "coupling_index", "coupling_re", "coupling_im"]);
            for (kind, rows) in [("scan", &scan), ("root", &roots)] {
                for r in rows {
                    let (index, re, im) = match (r.coupling_index, r.coupling) {
                        (Some(i), Some(z)) => (i.to_string(), num(z.re), num(z.im)),
                        _ => (String::new(), String::new(), String::new()),
                    };
                    csv.row(&[kind.into(), num(r.k), num(r.m22_re), num(r.m22_im), num(r.m22_abs), index, re, im]);
                }
            }
            csv.into_string()
        }
    };
    write(loaded.out.as_deref(), &text)?;
    eprintln!("{} scan points, {} singularities", scan.len(), roots.len());
    Ok(())
}

/// `START:STOP:STEP` with endpoints included.
fn parse_nu_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Config(format!("--nu-grid {s:?} is not START:STOP:STEP with 0 <= START <= STOP, STEP > 0"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if !(a >= 0.0 && b >= a && step > 0.0 && b.is_finite()) {
        return Err(bad());
    }
    let intervals = ((b - a) / step + 1e-9).floor() as usize;
    if intervals > 1_000_000 {
        return Err(bad());
    }
    let stop = a + intervals as f64 * step;
    Ok((0..=intervals)
        .map(|i| if intervals == 0 { a } else { a + (stop - a) * i as f64 / intervals as f64 })
        .collect())
}

#[derive(Serialize)]
struct TableRow {
    m: i64,
    nu: f64,
    pumping: &'static str,
    lambda0_nm: f64,
    g0_per_cm: f64,
    lambda_star_nm: f64,
    g_star_per_cm: f64,
    eps: f64,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    full_lambda_star_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    full_g_star_per_cm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    full_residual: Option<f64>,
}

#[derive(Serialize)]
struct CurvePoint {
    m: i64,
    pumping: &'static str,
    nu: f64,
    lambda_star_nm: f64,
    g_star_per_cm: f64,
}

fn table_row(r: &SingularityResult, full: Option<&SingularityResult>) -> TableRow {
    TableRow {
        m: r.mode_m,
        nu: r.nu,
        pumping: r.pumping.as_str(),
        lambda0_nm: r.lambda0_nm,
        g0_per_cm: r.g0_per_cm,
        lambda_star_nm: r.lambda_star_nm,
        g_star_per_cm: r.g_star_per_cm,
        eps: r.eps,
        residual: r.residual,
        full_lambda_star_nm: full.map(|f| f.lambda_star_nm),
        full_g_star_per_cm: full.map(|f| f.g_star_per_cm),
        full_residual: full.map(|f| f.residual),
    }
}

fn full_solves(s: &SlabConfig, rows: &[SingularityResult], tol: f64) -> Result<Vec<SingularityResult>, Failure> {
    let base = s.medium();
    rows.par_iter()
        .map(|r| {
            let medium = base.with_pumping(r.pumping, r.nu);
            full_numeric_singularity(&medium, r.mode_m, (r.lambda_star_nm, r.g_star_per_cm), tol).map_err(|e| {
                Error::Cell { mode: r.mode_m, nu: r.nu, pumping: r.pumping.to_string(), source: Box::new(e) }
            })
        })
        .collect::<specsing::Result<Vec<_>>>()
        .map_err(numerical)
}

fn cmd_slab(args: &SlabArgs) -> Result<(), Failure> {
    let loaded = load(&args.common)?;
    let Command::Slab(s) = loaded.cfg.command().map_err(config_error)? else {
        return Err(Failure::Config("the slab command needs a [slab] block".into()));
    };
    let grid = if args.curves { Some(parse_nu_grid(&args.nu_grid)?) } else { None };
    let numerics = &loaded.cfg.numerics;
    let medium = s.medium();

    let results = threshold_table(&medium, &s.modes, &s.nus, numerics.quad()).map_err(numerical)?;
    let full = if args.verify { Some(full_solves(s, &results, numerics.tol)?) } else { None };
    let table: Vec<TableRow> =
        results.iter().enumerate().map(|(i, r)| table_row(r, full.as_ref().map(|f| &f[i]))).collect();

    let curves = match &grid {
        Some(nus) => {
            let mut points = threshold_table(&medium, &s.modes, nus, numerics.quad()).map_err(numerical)?;
            points.sort_by(|a, b| (a.mode_m, a.pumping).cmp(&(b.mode_m, b.pumping)).then(a.nu.total_cmp(&b.nu)));
            Some(
                points
                    .iter()
                    .map(|p| CurvePoint {
                        m: p.mode_m,
                        pumping: p.pumping.as_str(),
                        nu: p.nu,
                        lambda_star_nm: p.lambda_star_nm,
                        g_star_per_cm: p.g_star_per_cm,
                    })
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };

    match loaded.format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                table: &'a [TableRow],
                #[serde(skip_serializing_if = "Option::is_none")]
                curves: Option<&'a [CurvePoint]>,
            }
            let doc = Doc { table: &table, curves: curves.as_deref() };
            write(loaded.out.as_deref(), &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"))?;
        }
        OutputFormat::Csv => {
            let table_csv = table_csv(&table, args.verify);
            let curves_csv = curves.as_deref().map(curves_csv);
            match (&loaded.out, curves_csv) {
                (Some(path), Some(c)) => {
                    write(Some(path), &table_csv)?;
                    write(Some(&curves_path(path)), &c)?;
                }
                (None, Some(c)) => write(None, &format!("{table_csv}\n{c}"))?,
                (out, None) => write(out.as_deref(), &table_csv)?,
            }
        }
    }
    Ok(())
}

fn table_csv(rows: &[TableRow], with_full: bool) -> String {
    let mut header = vec![
        "m",
        "nu",
        "pumping",
        "lambda0_nm",
        "g0_per_cm",
        "lambda_star_nm",
        "g_star_per_cm",
        "eps",
        "residual",
    ];
    if with_full {
        header.extend(["full_lambda_star_nm", "full_g_star_per_cm", "full_residual"]);
    }
    let mut csv = Csv::new(&header);
    for r in rows {
        let mut cells = vec![
            r.m.to_string(),
            num(r.nu),
            r.pumping.into(),
            num(r.lambda0_nm),
            num(r.g0_per_cm),
            num(r.lambda_star_nm),
            num(r.g_star_per_cm),
            num(r.eps),
            num(r.residual),
        ];
        if with_full {
            cells.extend([r.full_lambda_star_nm, r.full_g_star_per_cm, r.full_residual].map(|v| v.map(num).unwrap_or_default()));
        }
        csv.row(&cells);
    }
    csv.into_string()
}

fn curves_csv(points: &[CurvePoint]) -> String {
    let mut csv = Csv::new(&["m", "pumping", "nu", "lambda_star_nm", "g_star_per_cm"]);
    for p in points {
        csv.row(&[p.m.to_string(), p.pumping.into(), num(p.nu), num(p.lambda_star_nm), num(p.g_star_per_cm)]);
    }
    csv.into_string()
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Config(format!("--tol {t} must be positive")));
        }
    }
    init_threads(0)?;
    let outcomes = run_all(VerifyOptions { quick: args.quick, tolerance: args.tol });
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    println!("{}/{} checks passed", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        Ok(())
    } else {
        eprintln!("failed: {}", failed.join(", "));
        Err(Failure::Verification)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_grid_arithmetic() {
        let g = parse_nu_grid("0:0.5:0.01").ok().unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[50], 0.5);
        assert_eq!(parse_nu_grid("0.1:0.1:0.05").ok().unwrap(), vec![0.1]);
        for bad in ["0:0.5", "0.5:0:0.1", "0:1:0", "a:b:c", "-1:0:0.1"] {
            assert!(parse_nu_grid(bad).is_err(), "{bad}");
        }
    }
}
