use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use svdmds::experiments::{run_sweep, write_outputs, Algorithm, ExperimentConfig, OutputFormat};
use svdmds::io::{load_json, load_matrix, save_completion, save_json, save_mds, save_packing};
use svdmds::metrics::{
    coordinate_bound, expectation_bound, minimax_lower_bound, tail_bound, BoundParams,
};
use svdmds::sampling::ObservationMeta;
use svdmds::{
    classic_mds, estimate_p, generate_packing, optspace_complete, svd_reconstruct, verify_packing,
    CompletionResult, MaskMatrix, Observation, OptSpaceConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "svdmds",
    version,
    about = "Distance matrix completion and localization experiments"
)]
struct Cli {
    /// Output directory (default depends on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override: replaces the config's master_seed for `sweep`, seeds `packing`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
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

#[derive(Subcommand, Debug)]
enum Command {
    /// Complete one partially observed distance matrix.
    Complete(CompleteArgs),
    /// Complete, then recover coordinates by classic MDS.
    Localize {
        #[command(flatten)]
        input: CompleteArgs,
        /// Embedding dimension.
        #[arg(long, default_value_t = 3)]
        d: usize,
    },
    /// Run a Monte Carlo sweep from a TOML config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Also write errors_vs_nu.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Generate and verify a delta-packing of rank-r matrices.
    Packing {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Draw only this many matrices.
        #[arg(long)]
        sample_m: Option<usize>,
    },
    /// Tabulate the error bounds over a parameter grid.
    Bounds(BoundsArgs),
}

#[derive(Args, Debug)]
struct CompleteArgs {
    /// Observed matrix, zeros where unobserved.
    #[arg(long)]
    y: PathBuf,
    /// 0/1 observation mask.
    #[arg(long)]
    mask: PathBuf,
    /// Sidecar written by the library (`observation.json`); supplies p and nu.
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Sampling probability; estimated from the mask when absent.
    #[arg(long)]
    p: Option<f64>,
    /// Noise standard deviation, used by OptSpace's regularization floor.
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value_t = 5)]
    r: usize,
    #[arg(long, default_value = "svd_reconstruct")]
    algorithm: Algorithm,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    r: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    d: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    nu: Vec<f64>,
    /// Incoherence bound; defaults to 4 d, the squared diameter of (-1, 1)^d.
    #[arg(long, value_delimiter = ',')]
    zeta: Vec<f64>,
    /// The unspecified absolute constant.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    c: Vec<f64>,
    /// Thresholds for the tail bound; no tail rows without them.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct BoundRow {
    bound: &'static str,
    n: usize,
    p: f64,
    m: f64,
    r: usize,
    d: usize,
    zeta: f64,
    nu: f64,
    c: f64,
    t: Option<f64>,
    value: f64,
}

fn read_observation(a: &CompleteArgs) -> svdmds::Result<Observation> {
    let y = load_matrix(&a.y)?;
    let mask = MaskMatrix::from_matrix(load_matrix(&a.mask)?)?;
    let meta: Option<ObservationMeta> = a.meta.as_deref().map(load_json).transpose()?;
    let p =
        a.p.or(meta.as_ref().map(|m| m.p))
            .unwrap_or_else(|| estimate_p(&mask));
    let nu = a.nu.or(meta.as_ref().map(|m| m.nu)).unwrap_or(0.0);
    Observation::new(y, mask, p, nu)
}

fn run_completion(a: &CompleteArgs) -> svdmds::Result<CompletionResult> {
    let obs = read_observation(a)?;
    match a.algorithm {
        Algorithm::SvdReconstruct => svd_reconstruct(&obs, a.r),
        Algorithm::OptSpace => optspace_complete(&obs, &OptSpaceConfig::new(a.r)),
    }
}

fn rows(m: &svdmds::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn bounds_table(a: &BoundsArgs) -> svdmds::Result<Vec<BoundRow>> {
    let mut out = Vec::new();
    for &n in &a.n {
        for &p in &a.p {
            for &r in &a.r {
                for &d in &a.d {
                    let zetas = if a.zeta.is_empty() {
                        vec![4.0 * d as f64]
                    } else {
                        a.zeta.clone()
                    };
                    for &zeta in &zetas {
                        for &nu in &a.nu {
                            for &c in &a.c {
                                let bp = BoundParams::from_probability(n, p, r, d, zeta, nu, c);
                                for w in bp.warnings() {
                                    eprintln!("warning: n={n} p={p} r={r}: {w}");
                                }
                                let row = |bound, t, value| BoundRow {
                                    bound,
                                    n,
                                    p,
                                    m: bp.m,
                                    r,
                                    d,
                                    zeta,
                                    nu,
                                    c,
                                    t,
                                    value,
                                };
                                out.push(row("expectation", None, expectation_bound(&bp)?));
                                out.push(row("coordinate", None, coordinate_bound(&bp)?));
                                out.push(row("minimax", None, minimax_lower_bound(&bp)?));
                                for &t in &a.t {
                                    out.push(row("tail", Some(t), tail_bound(t, &bp)?));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn write_bounds(dir: &Path, table: &[BoundRow], format: Format) -> svdmds::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    match format {
        Format::Json => {
            let path = dir.join("bounds.json");
            save_json(&path, &table)?;
            Ok(path)
        }
        Format::Csv => {
            let path = dir.join("bounds.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record([
                "bound", "n", "p", "m", "r", "d", "zeta", "nu", "c", "t", "value",
            ])?;
            for b in table {
                w.write_record([
                    b.bound.to_string(),
                    b.n.to_string(),
                    b.p.to_string(),
                    b.m.to_string(),
                    b.r.to_string(),
                    b.d.to_string(),
                    b.zeta.to_string(),
                    b.nu.to_string(),
                    b.c.to_string(),
                    b.t.map_or(String::new(), |t| t.to_string()),
                    b.value.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(path)
        }
    }
}

fn run(cli: Cli) -> svdmds::Result<()> {
    let out = |default: &str| cli.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match &cli.command {
        Command::Complete(a) => {
            let res = run_completion(a)?;
            let dir = out("results");
            match cli.format {
                Format::Csv => save_completion(&dir, &res)?,
                Format::Json => {
                    std::fs::create_dir_all(&dir)?;
                    save_json(
                        &dir.join("completion.json"),
                        &json!({"d_hat": rows(&res.d_hat), "diagnostics": res.diagnostics}),
                    )?;
                }
            }
            eprintln!("wrote completion to {}", dir.display());
        }
        Command::Localize { input, d } => {
            let res = run_completion(input)?;
            let mds = classic_mds(&res.d_hat, *d)?;
            let dir = out("results");
            match cli.format {
                Format::Csv => {
                    save_completion(&dir, &res)?;
                    save_mds(&dir, &mds)?;
                }
                Format::Json => {
                    std::fs::create_dir_all(&dir)?;
                    save_json(
                        &dir.join("localize.json"),
                        &json!({
                            "d_hat": rows(&res.d_hat),
                            "x_hat": rows(&mds.x_hat),
                            "completion": res.diagnostics,
                            "mds": mds.diagnostics,
                        }),
                    )?;
                }
            }
            eprintln!("wrote localization to {}", dir.display());
        }
        Command::Sweep { config, plot } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(seed) = cli.seed {
                cfg.master_seed = seed;
            }
            if let Some(dir) = &cli.out {
                cfg.outputs = dir.clone();
            }
            let records = run_sweep(&cfg)?;
            let failures = records.iter().filter(|r| r.failed()).count();
            let files = write_outputs(&cfg.outputs, &cfg, &records, cli.format.into(), *plot)?;
            eprintln!(
                "{} records ({failures} failed), wrote {} files to {}",
                records.len(),
                files.len(),
                cfg.outputs.display()
            );
        }
        Command::Packing {
            n,
            r,
            delta,
            sample_m,
        } => {
            let seed = cli.seed.unwrap_or(0);
            let ps = generate_packing(*n, *r, *delta, seed, *sample_m)?;
            let v = verify_packing(&ps);
            let dir = out("results/packing");
            match cli.format {
                Format::Csv => {
                    save_packing(&dir, &ps, Some(v))?;
                }
                Format::Json => {
                    std::fs::create_dir_all(&dir)?;
                    let mats: Vec<_> = ps.matrices.iter().map(rows).collect();
                    save_json(
                        &dir.join("packing.json"),
                        &json!({
                            "n": ps.n, "r": ps.r, "delta": ps.delta, "M": ps.cardinality, "seed": ps.seed,
                            "matrices": mats, "verification": v,
                        }),
                    )?;
                }
            }
            eprintln!(
                "M = {}, drew {}, min pairwise {}, success {}",
                ps.cardinality,
                ps.matrices.len(),
                v.min_pairwise,
                v.success
            );
        }
        Command::Bounds(a) => {
            let table = bounds_table(a)?;
            let path = write_bounds(&out("results"), &table, cli.format)?;
            eprintln!("wrote {} rows to {}", table.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
