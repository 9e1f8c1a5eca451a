// NaN inputs are rejected through negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod fmt;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chaos_bounds::bounds::{bound_report, tail_threshold, CalibrationPack, Form};
use chaos_bounds::coeffs::{load_matrix_source, Family};
use chaos_bounds::montecarlo::{
    calibrate_constants, empirical_moment, ratio_sweep, sample_chaos_with, sweep_models, CalibrationSpec, SweepSpec,
};
use chaos_bounds::norms::{bilinear_norm, linear_norm};
use chaos_bounds::par::{with_threads, Exec};
use chaos_bounds::rng::StreamKey;
use chaos_bounds::{ConstraintBudget, DistributionModel, Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fmt::{g12, json_num};

#[derive(Parser)]
#[command(name = "chaosbound", version, about = "Moment and tail estimates for order-2 random chaoses")]
struct Cli {
    /// Worker threads for the parallel loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file (default: standard output).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic moment bound for each p, as CSV.
    Bound(BoundArgs),
    /// Constrained-supremum norm of a vector or matrix, as JSON.
    Norm(NormArgs),
    /// Monte-Carlo moments of one chaos against its bound, as CSV.
    Simulate(SimulateArgs),
    /// Ratio sweep over models, matrix families and sizes, as CSV.
    Sweep(SweepArgs),
    /// Oracle-versus-solver checks, as a pass/fail CSV.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Coefficient matrix JSON, or a generator spec with a `family` key.
    #[arg(long)]
    matrix: PathBuf,

    /// Model of the row variables.
    #[arg(long)]
    model_x: PathBuf,

    /// Model of the column variables (default: same as --model-x).
    #[arg(long)]
    model_y: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    models: ModelArgs,

    /// Comma-separated moment orders, each >= 1.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,

    /// decoupled, undecoupled, gaussian, rademacher, weibull or truncweibull.
    #[arg(long, default_value = "decoupled")]
    form: String,

    /// Calibration pack; adds tail threshold columns.
    #[arg(long)]
    calibration: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormMode {
    Linear,
    Bilinear,
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    models: ModelArgs,

    #[arg(long)]
    p: f64,

    /// `linear` uses the first row of the matrix as the vector.
    #[arg(long, value_enum, default_value = "bilinear")]
    mode: NormMode,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    models: ModelArgs,

    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    p: Vec<f64>,

    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,

    /// Seed of the Monte-Carlo streams.
    #[arg(long, default_value_t = 2024)]
    seed: u64,

    /// Simulate Σ a_ij X_i X_j (symmetric zero-diagonal matrix required).
    #[arg(long)]
    undecoupled: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Model files (default: Gaussian, Rademacher, Weibull(1), TruncWeibull(0.5, 4)).
    #[arg(long, value_delimiter = ',')]
    models: Vec<PathBuf>,

    /// Matrix families: diagonal, rank1, random_full (or dense), sparse.
    #[arg(long, value_delimiter = ',', default_value = "diagonal,rank1,random_full,sparse")]
    families: Vec<String>,

    #[arg(long, value_delimiter = ',', default_value = "4,16,32")]
    sizes: Vec<usize>,

    /// Matrix instances per (family, size).
    #[arg(long, default_value_t = 2)]
    instances: usize,

    /// Matrix seed of the first instance.
    #[arg(long, default_value_t = 0)]
    first_seed: u64,

    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    p: Vec<f64>,

    #[arg(long, default_value_t = 100_000)]
    samples: usize,

    /// Seed of the Monte-Carlo streams.
    #[arg(long, default_value_t = 2024)]
    seed: u64,

    #[arg(long)]
    undecoupled: bool,

    /// Also write the per (model, family) summary CSV here.
    #[arg(long)]
    summary: Option<PathBuf>,

    /// Fit a calibration pack on the even-seed instances and write it here.
    #[arg(long)]
    calibrate: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "small")]
    suite: String,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn csv_out(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(path)?))
}

fn check_p_list(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&x| !(x >= 1.0) || !x.is_finite()) {
        return Err(Error::Config(format!("p list must be nonempty with every entry >= 1, got {p:?}")));
    }
    Ok(())
}

fn load_models(m: &ModelArgs) -> Result<(chaos_bounds::CoeffMatrix, DistributionModel, DistributionModel)> {
    let a = load_matrix_source(&m.matrix)?;
    let mx = DistributionModel::from_json_file(&m.model_x)?;
    let my = match &m.model_y {
        Some(p) => DistributionModel::from_json_file(p)?,
        None => mx.clone(),
    };
    Ok((a, mx, my))
}

/// Family and seed labels of a generator spec; plain matrices get `file`.
fn source_labels(path: &Path) -> (String, u64) {
    let v: Option<serde_json::Value> = std::fs::read_to_string(path).ok().and_then(|t| serde_json::from_str(&t).ok());
    match v {
        Some(v) if v.get("family").is_some() => (
            v["family"].as_str().unwrap_or("generated").to_string(),
            v.get("seed").and_then(|s| s.as_u64()).unwrap_or(0),
        ),
        _ => ("file".to_string(), 0),
    }
}

fn run_bound(args: &BoundArgs, out: Option<&Path>) -> Result<()> {
    check_p_list(&args.p)?;
    let form = Form::parse(&args.form)?;
    let (a, mx, my) = load_models(&args.models)?;
    let pack = args.calibration.as_deref().map(CalibrationPack::from_json_file).transpose()?;
    let mut w = csv_out(out)?;
    let mut header = vec!["p", "bilinear", "bilinear_upper", "row", "col", "total", "total_upper", "methods"];
    if pack.is_some() {
        header.extend(["threshold_up", "level_up", "threshold_low", "level_low"]);
    }
    w.write_record(&header)?;
    for &p in &args.p {
        let r = bound_report(form, &a, &mx, Some(&my), p)?;
        let mut rec = vec![
            g12(p),
            g12(r.bilinear_term),
            g12(r.bilinear_upper),
            g12(r.row_term),
            g12(r.col_term),
            g12(r.total),
            g12(r.total_upper()),
            r.method_tags(),
        ];
        if let Some(pack) = &pack {
            let t = tail_threshold(&r, pack);
            rec.extend([g12(t.threshold_up), g12(t.upper_level), g12(t.threshold_low), g12(t.lower_level)]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn run_norm(args: &NormArgs, out: Option<&Path>) -> Result<()> {
    let (a, mx, my) = load_models(&args.models)?;
    let bx = ConstraintBudget::new(args.p, mx)?;
    let sol = match args.mode {
        NormMode::Linear => linear_norm(a.row(0), &bx)?,
        NormMode::Bilinear => bilinear_norm(&a, &bx, &ConstraintBudget::new(args.p, my)?)?,
    };
    let cert = |v: &[f64]| serde_json::Value::Array(v.iter().map(|&x| json_num(x)).collect());
    let mut certificate = json!({ "x": cert(&sol.certificate_x) });
    if let Some(y) = &sol.certificate_y {
        certificate["y"] = cert(y);
    }
    let doc = json!({
        "value": json_num(sol.value),
        "lower": json_num(sol.lower()),
        "upper": json_num(sol.upper),
        "method": sol.method.name(),
        "feasibility_slack": json_num(sol.feasibility_slack),
        "certificate": certificate,
    });
    let mut s = sink(out)?;
    writeln!(s, "{}", serde_json::to_string_pretty(&doc)?)?;
    s.flush()?;
    Ok(())
}

const MC_HEADER: [&str; 8] =
    ["family", "instance_seed", "p", "bound_total", "mc_value", "mc_ci_low", "mc_ci_high", "ratio"];

fn run_simulate(args: &SimulateArgs, out: Option<&Path>) -> Result<()> {
    check_p_list(&args.p)?;
    let (a, mx, my) = load_models(&args.models)?;
    let (family, instance_seed) = source_labels(&args.models.matrix);
    let form = if args.undecoupled { Form::Undecoupled } else { Form::Decoupled };
    let samples = sample_chaos_with(
        &a,
        &mx,
        (!args.undecoupled).then_some(&my),
        StreamKey::new(args.seed, 0, 0),
        args.samples,
        Exec::default(),
    )?;
    let mut w = csv_out(out)?;
    let mut header = MC_HEADER.to_vec();
    header.push("estimator");
    w.write_record(&header)?;
    for &p in &args.p {
        let r = bound_report(form, &a, &mx, Some(&my), p)?;
        let mc = empirical_moment(&samples, p)?;
        w.write_record([
            family.clone(),
            instance_seed.to_string(),
            g12(p),
            g12(r.total),
            g12(mc.value),
            g12(mc.ci_low),
            g12(mc.ci_high),
            g12(mc.value / r.total),
            mc.estimator.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_sweep(args: &SweepArgs, out: Option<&Path>) -> Result<()> {
    check_p_list(&args.p)?;
    let models = if args.models.is_empty() {
        sweep_models()
    } else {
        args.models.iter().map(|p| DistributionModel::from_json_file(p)).collect::<Result<_>>()?
    };
    let families = args.families.iter().map(|f| Family::parse(f)).collect::<Result<Vec<_>>>()?;
    let spec = SweepSpec {
        models,
        families,
        sizes: args.sizes.clone(),
        instances: args.instances,
        first_seed: args.first_seed,
        seed_stride: 1,
        p_grid: args.p.clone(),
        samples: args.samples,
        mc_seed: args.seed,
        decoupled: !args.undecoupled,
        exec: Exec::default(),
    };
    if let Some(path) = &args.calibrate {
        let pack = calibrate_constants(&CalibrationSpec { sweep: spec, ..CalibrationSpec::default() })?;
        std::fs::write(path, pack.to_json_pretty()).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        return Ok(());
    }
    let (rows, summary) = ratio_sweep(&spec)?;
    let mut w = csv_out(out)?;
    let mut header = MC_HEADER.to_vec();
    header.extend(["model", "n", "estimator"]);
    w.write_record(&header)?;
    for r in &rows {
        w.write_record([
            r.family.clone(),
            r.instance_seed.to_string(),
            g12(r.p),
            g12(r.bound_total),
            g12(r.mc_value),
            g12(r.mc_ci_low),
            g12(r.mc_ci_high),
            g12(r.ratio),
            r.model.clone(),
            r.n.to_string(),
            r.estimator.name().to_string(),
        ])?;
    }
    w.flush()?;
    if let Some(path) = &args.summary {
        let mut w = csv_out(Some(path))?;
        w.write_record(["model", "family", "min", "max", "spread", "all_finite_positive"])?;
        for s in &summary {
            w.write_record([
                s.model.clone(),
                s.family.clone(),
                g12(s.min),
                g12(s.max),
                g12(s.spread),
                s.all_finite_positive.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Returns whether every check passed.
fn run_verify(args: &VerifyArgs, out: Option<&Path>) -> Result<bool> {
    let checks = match args.suite.as_str() {
        "small" => verify::small_suite()?,
        other => return Err(Error::Config(format!("unknown verify suite `{other}`"))),
    };
    let mut w = csv_out(out)?;
    w.write_record(["check", "expected_low", "expected_high", "got", "pass"])?;
    for c in &checks {
        w.write_record([c.name.clone(), g12(c.low), g12(c.high), g12(c.got), c.pass().to_string()])?;
    }
    w.flush()?;
    Ok(checks.iter().all(|c| c.pass()))
}

fn error_record(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            error_record("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    let out = cli.output.as_deref();
    let result = with_threads(cli.threads, || match &cli.command {
        Command::Bound(a) => run_bound(a, out).map(|_| true),
        Command::Norm(a) => run_norm(a, out).map(|_| true),
        Command::Simulate(a) => run_simulate(a, out).map(|_| true),
        Command::Sweep(a) => run_sweep(a, out).map(|_| true),
        Command::Verify(a) => run_verify(a, out),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            error_record("verify_failed", "one or more oracle checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            error_record(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}
