use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capnodal::chaos::{local_trispectrum, second_chaos_projection};
use capnodal::field::sample_field;
use capnodal::mc::io::{read_config, write_json, write_records_csv, write_run};
use capnodal::mc::sweep::write_sweep_csv;
use capnodal::mc::{run_experiment, sweep, ExperimentConfig, RRule};
use capnodal::nodal::{
    nodal_length_cap, nodal_length_cap_value, nodal_length_global, nodal_length_global_value, CapDomain, NodalResult,
};
use capnodal::theory::theory_report;
use capnodal::validation::{ValidationPlan, Validator, CRITERIA};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Nodal length of random spherical harmonics restricted to spherical caps.
///
/// All angles are in radians. The cap is centred at the north pole.
#[derive(Parser, Debug)]
#[command(name = "capnodal", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print closed-form and quadrature predictions as JSON.
    Predict(PredictArgs),
    /// Draw one field and report its cap statistics.
    Sample(SampleArgs),
    /// Run a Monte Carlo experiment; writes a CSV and a JSON manifest.
    Mc(McArgs),
    /// Run one experiment per degree and print a trend table.
    Sweep(SweepArgs),
    /// Run the acceptance suite with pinned seeds.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
struct Base {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spherical harmonic degree [default: 50].
    #[arg(long)]
    ell: Option<u32>,
    /// Cap radius in radians, in (0, π) [default: 0.4].
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    base: Base,
    /// Also evaluate the Kac-Rice variance and exact chaos quantities by quadrature.
    #[arg(long)]
    quadrature: bool,
    /// Global-length variance to use in the identities instead of the asymptotic value.
    #[arg(long)]
    var_global: Option<f64>,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    base: Base,
    /// Chart grid size [default: 20 cells per wavelength].
    #[arg(long)]
    grid: Option<usize>,
    /// Field seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Also compute the nodal length of the whole sphere.
    #[arg(long)]
    with_global: bool,
    /// Write the nodal polylines as JSON to --out.
    #[arg(long, requires = "out")]
    dump_segments: bool,
    /// Output path for --dump-segments.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Chart grid size [default: 20 cells per wavelength].
    #[arg(long)]
    grid: Option<usize>,
    /// Number of replicates [default: 100].
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores [default: 0].
    #[arg(long)]
    threads: Option<usize>,
    /// Also compute the nodal length of the whole sphere.
    #[arg(long)]
    with_global: bool,
    /// Richardson-extrapolate lengths from grids n and n/2.
    #[arg(long)]
    extrapolate: bool,
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    base: Base,
    #[command(flatten)]
    run: RunArgs,
    /// CSV path; the manifest is written next to it. Without it the CSV goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON experiment config for the shared settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Increasing degrees, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    ells: Vec<u32>,
    /// Fixed cap radius in radians, in (0, π) [default: 0.5].
    #[arg(long, conflicts_with_all = ["r_c", "r_alpha"])]
    radius: Option<f64>,
    /// Use r = c ell^(-alpha): the constant c.
    #[arg(long, requires = "r_alpha")]
    r_c: Option<f64>,
    /// Use r = c ell^(-alpha): the exponent alpha < 1.
    #[arg(long, requires = "r_c")]
    r_alpha: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
    /// Trend-table CSV path [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Worker threads; 0 uses all cores [default: 0].
    #[arg(long)]
    threads: Option<usize>,
    /// Run only these criteria, comma separated.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u32>,
    /// Also write the outcomes as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<capnodal::error::Error> for Failure {
    fn from(e: capnodal::error::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

/// Defaults, then the config file, then flags.
fn load_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => read_config(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
    }
}

fn apply_base(cfg: &mut ExperimentConfig, b: &Base) {
    if let Some(v) = b.ell {
        cfg.ell = v;
    }
    if let Some(v) = b.radius {
        cfg.radius = v;
    }
}

fn apply_run(cfg: &mut ExperimentConfig, r: &RunArgs) {
    if let Some(v) = r.grid {
        cfg.grid_n = Some(v);
    }
    if let Some(v) = r.reps {
        cfg.reps = v;
    }
    if let Some(v) = r.seed {
        cfg.seed = v;
    }
    if let Some(v) = r.threads {
        cfg.threads = v;
    }
    cfg.with_global |= r.with_global;
    cfg.extrapolate |= r.extrapolate;
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => write_json(p, value)?,
        None => {
            let mut w = io::stdout().lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let mut cfg = load_config(a.base.config.as_deref())?;
    apply_base(&mut cfg, &a.base);
    cfg.validate()?;
    let rep = theory_report(cfg.ell, cfg.radius, a.var_global, a.quadrature)?;
    emit_json(&rep, a.out.as_deref())
}

#[derive(Serialize)]
struct SampleReport {
    ell: u32,
    radius: f64,
    seed: u64,
    grid_n: usize,
    z_local: f64,
    h4_local: f64,
    m_local: f64,
    proj2: f64,
    z_global: Option<f64>,
}

fn sample(a: SampleArgs) -> CliResult<()> {
    let mut cfg = load_config(a.base.config.as_deref())?;
    apply_base(&mut cfg, &a.base);
    if let Some(v) = a.grid {
        cfg.grid_n = Some(v);
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.with_global |= a.with_global;
    cfg.reps = 1;
    cfg.validate()?;
    let f = sample_field(cfg.ell, cfg.seed)?;
    let cap = CapDomain::new(cfg.radius)?;
    let grid_n = cfg.effective_grid_n();
    let chaos = local_trispectrum(&f, &cap, cfg.quad_n)?;
    let proj2 = second_chaos_projection(&f, &cap, cfg.n_nodes)?;
    let local = if a.dump_segments { Some(nodal_length_cap(&f, &cap, Some(grid_n))?) } else { None };
    let z_local = match &local {
        Some(res) => res.total_length,
        None => nodal_length_cap_value(&f, &cap, Some(grid_n))?,
    };
    let global = if cfg.with_global && a.dump_segments { Some(nodal_length_global(&f, cfg.global_grid_n)?) } else { None };
    let z_global = match (&global, cfg.with_global) {
        (Some(g), _) => Some(g.total_length),
        (None, true) => Some(nodal_length_global_value(&f, cfg.global_grid_n)?),
        (None, false) => None,
    };
    let report = SampleReport {
        ell: cfg.ell,
        radius: cfg.radius,
        seed: cfg.seed,
        grid_n,
        z_local,
        h4_local: chaos.h4,
        m_local: chaos.m_local,
        proj2,
        z_global,
    };
    if a.dump_segments {
        #[derive(Serialize)]
        struct Dump<'a> {
            local: Option<&'a NodalResult>,
            global: Option<&'a NodalResult>,
        }
        let out = a.out.as_deref().expect("clap enforces --out");
        write_json(out, &Dump { local: local.as_ref(), global: global.as_ref() })?;
        log::info!("segments written to {}", out.display());
    }
    emit_json(&report, None)
}

fn mc(a: McArgs) -> CliResult<()> {
    let mut cfg = load_config(a.base.config.as_deref())?;
    apply_base(&mut cfg, &a.base);
    apply_run(&mut cfg, &a.run);
    let out = run_experiment(&cfg)?;
    match a.out.as_deref() {
        Some(p) => {
            let manifest = write_run(&out, p)?;
            log::info!("wrote {} and {}", p.display(), manifest.display());
            emit_json(&out.estimates, None)?;
        }
        None => {
            write_records_csv(io::stdout().lock(), &out.records)?;
        }
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> CliResult<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    apply_run(&mut cfg, &a.run);
    let rule = match (a.radius, a.r_c, a.r_alpha) {
        (_, Some(c), Some(alpha)) => RRule::Power { c, alpha },
        (Some(r), _, _) => RRule::Fixed { r },
        _ if a.config.is_some() => RRule::Fixed { r: cfg.radius },
        _ => RRule::Fixed { r: 0.5 },
    };
    let rows = sweep(&a.ells, rule, &cfg)?;
    match a.out.as_deref() {
        Some(p) => write_sweep_csv(BufWriter::new(File::create(p)?), &rows)?,
        None => write_sweep_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

/// Returns whether every selected criterion passed.
fn validate(a: ValidateArgs) -> CliResult<bool> {
    let plan = ValidationPlan { threads: a.threads.unwrap_or(0), ..ValidationPlan::default() };
    let ids: Vec<u32> = if a.only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { a.only.clone() };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(Failure::Config(format!("no criterion {bad}; valid ids are 1 to {}", CRITERIA.len())));
    }
    let v = Validator::new(plan);
    let mut outcomes = Vec::new();
    let mut stdout = io::stdout().lock();
    for id in ids {
        let o = v.run(id);
        writeln!(stdout, "{}", o.line())?;
        stdout.flush()?;
        outcomes.push(o);
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if failed.is_empty() {
        writeln!(stdout, "{} passed", outcomes.len())?;
    } else {
        writeln!(stdout, "{} passed, failed: {failed:?}", outcomes.len() - failed.len())?;
    }
    if let Some(p) = a.out.as_deref() {
        write_json(p, &outcomes)?;
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Predict(a) => predict(a).map(|_| true),
        Cmd::Sample(a) => sample(a).map(|_| true),
        Cmd::Mc(a) => mc(a).map(|_| true),
        Cmd::Sweep(a) => sweep_cmd(a).map(|_| true),
        Cmd::Validate(a) => validate(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
