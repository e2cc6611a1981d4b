//! `certimeasure`: certified invariant densities from the command line.
//!
//! Exit status is 0 when the run certifies, 2 when it completes without a
//! certificate, 1 on usage or I/O errors.

use anyhow::{bail, Context};
use certimeasure::{run_with_threads, Grid, MapDescriptor, RunConfig, SchemeKind, CATALOG};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// `println!` that ignores a closed stdout instead of panicking.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "certimeasure", version, about = "Certified invariant densities of interval maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify the invariant density of a catalog map.
    Run(RunArgs),
    /// List the catalog maps.
    Maps,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Catalog map name.
    #[arg(long)]
    map: Option<String>,
    /// Map parameter as KEY=VALUE, values are rationals like 1/100.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Use this iterate of the map.
    #[arg(long)]
    iterate: Option<usize>,
    /// ulam or hat.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    coarse_n: Option<usize>,
    #[arg(long)]
    fine_n: Option<usize>,
    /// Single grid run with --n cells.
    #[arg(long)]
    one_grid: bool,
    #[arg(long)]
    n: Option<usize>,
    /// Initial number of powers; doubled while no contraction is found.
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also enclose the Lyapunov exponent.
    #[arg(long)]
    lyapunov: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the interval matrix as matrix.coo plus matrix.json.
    #[arg(long)]
    dump_matrix: bool,
    /// TOML file with the same fields as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Mirror of the flags for `--config`.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    map: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, String>,
    iterate: Option<usize>,
    scheme: Option<String>,
    coarse_n: Option<usize>,
    fine_n: Option<usize>,
    #[serde(default)]
    one_grid: bool,
    n: Option<usize>,
    kmax: Option<usize>,
    out: Option<PathBuf>,
    #[serde(default)]
    lyapunov: bool,
    threads: Option<usize>,
    #[serde(default)]
    dump_matrix: bool,
}

fn load_file_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

struct Plan {
    cfg: RunConfig,
    out: PathBuf,
    threads: Option<usize>,
    dump_matrix: bool,
}

fn plan(args: RunArgs) -> anyhow::Result<Plan> {
    let file = match &args.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    let Some(name) = args.map.or(file.map) else {
        bail!("--map is required (one of: {})", CATALOG.join(", "));
    };
    let mut desc = MapDescriptor::named(&name);
    desc.params = file.params;
    for kv in &args.params {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--param expects KEY=VALUE, got `{kv}`");
        };
        desc.params.insert(k.trim().to_string(), v.trim().to_string());
    }
    desc.iterate = args.iterate.or(file.iterate).unwrap_or(1);
    let scheme: SchemeKind = args.scheme.or(file.scheme).as_deref().unwrap_or("ulam").parse()?;
    let one = args.one_grid || file.one_grid;
    let grid = if one {
        let Some(n) = args.n.or(file.n) else { bail!("--one-grid needs --n") };
        Grid::OneGrid { n }
    } else {
        match (args.coarse_n.or(file.coarse_n), args.fine_n.or(file.fine_n), args.n.or(file.n)) {
            (Some(c), Some(f), _) => Grid::TwoGrid { coarse_n: c, fine_n: f },
            (None, None, Some(n)) => Grid::OneGrid { n },
            _ => bail!("give --coarse-n and --fine-n, or --one-grid --n N"),
        }
    };
    let mut cfg = RunConfig::new(desc, scheme, grid);
    if let Some(k) = args.kmax.or(file.kmax) {
        cfg.k_max = k;
        cfg.k_max_budget = cfg.k_max_budget.max(k);
    }
    cfg.lyapunov = args.lyapunov || file.lyapunov;
    let Some(out) = args.out.or(file.out) else { bail!("--out DIR is required") };
    let threads = args.threads.or(file.threads);
    if threads == Some(0) {
        bail!("--threads must be positive");
    }
    Ok(Plan {
        cfg,
        out,
        threads,
        dump_matrix: args.dump_matrix || file.dump_matrix,
    })
}

fn execute(args: RunArgs) -> anyhow::Result<bool> {
    let p = plan(args)?;
    let threads = p.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let output = run_with_threads(&p.cfg, threads)?;
    output.write_to(&p.out, p.dump_matrix)?;
    let r = &output.report;
    match (&r.error, &r.status) {
        (Some(e), _) => {
            say!("certified: |u - u_h| <= {:e} (m = {})", e.bound, e.m_used);
            if let Some(l) = &r.lyapunov {
                say!("lyapunov exponent in {}", l.value);
            }
            if let Some(msg) = &r.diagnostics.lyapunov_failure {
                say!("lyapunov exponent not enclosed: {msg}");
            }
        }
        (None, certimeasure::Status::Failed { stage, reason, recommendation }) => {
            say!("not certified at stage {stage:?}: {reason}");
            if let Some(h) = recommendation {
                say!("hint: {h}");
            }
        }
        (None, certimeasure::Status::Certified) => unreachable!("certified runs carry a bound"),
    }
    say!("report written to {}", p.out.join("report.json").display());
    Ok(r.is_certified())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Maps => {
            for m in CATALOG {
                say!("{m}");
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
