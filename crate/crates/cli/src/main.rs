use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use medianlab::commands::{self, Family, RunOptions, RunReport};
use medianlab::constructions::{
    gamma_path, grid_window, path_tree, product_space, random_tree, sec5_space, star_tree, subdivided_sec5, tree_space,
};
use medianlab::{CoarseSpace, Exact, Scalar};
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "medianlab", version, about = "Median algebras, free median algebras and coarse median checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every sampled scan.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Spaces up to this many points get exhaustive quadruple scans.
    #[arg(long, global = true, default_value_t = 150)]
    sample_cap: usize,
    /// Samples drawn by scans that are not exhaustive.
    #[arg(long, global = true, default_value_t = 200_000)]
    samples: usize,
    /// Subsets drawn per empirical H(p).
    #[arg(long, global = true, default_value_t = 64)]
    h_samples: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the CSV table of commands that produce one.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Absolute tolerance for floating metrics.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// The free median algebra on P generators.
    FreeAlgebra { p: usize },
    /// Measure the coarse median constants of a space file.
    Verify {
        space: PathBuf,
        /// Read the metric as exact rationals.
        #[arg(long)]
        exact: bool,
        /// Compare intervals with zero-coarse intervals instead.
        #[arg(long)]
        intervals: bool,
    },
    /// Corner certificates across a family of windows.
    RankScan {
        #[arg(long, value_enum, default_value_t = FamilyArg::Grid)]
        family: FamilyArg,
        /// Leg counts, e.g. `2,3` or `2..4`.
        #[arg(long, default_value = "2,3")]
        k: String,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Window sizes, e.g. `4..12`.
        #[arg(long, default_value = "4..12")]
        windows: String,
    },
    /// Distances and Hausdorff distances along the weighted windows.
    Counterexample {
        #[arg(long, default_value = "1..16")]
        n: String,
        #[arg(long, default_value_t = 1)]
        margin: i64,
    },
    /// Four-point hyperbolicity constant of a space file.
    Delta {
        space: PathBuf,
        #[arg(long)]
        exact: bool,
    },
    /// Ledger of constants for given control parameters, e.g. `--k 1/3`.
    Report {
        #[arg(long)]
        k: String,
        #[arg(long)]
        h0: String,
        #[arg(long)]
        h3: String,
        #[arg(long)]
        h4: String,
        #[arg(long)]
        h5: String,
        #[arg(long, default_value_t = medianlab::ledger::DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Emit a constructed space as space JSON.
    Space {
        #[command(subcommand)]
        kind: SpaceKind,
    },
}

#[derive(Subcommand, Debug)]
enum SpaceKind {
    /// The unit ℓ¹ grid on [0,n]².
    Grid { n: i64 },
    /// The weighted window for n.
    Sec5 {
        n: i64,
        #[arg(long, default_value_t = 1)]
        margin: i64,
    },
    /// The weighted window with long vertical edges subdivided.
    Subdivided {
        n: i64,
        #[arg(long, default_value_t = 1)]
        margin: i64,
    },
    /// A path with n vertices.
    Path { n: usize },
    /// A star with the given number of leaves.
    Star { leaves: usize },
    /// A tree from an edge list such as `0-1,1-2,1-3`.
    Tree { edges: String },
    /// A random tree on n vertices drawn with --seed.
    Random { n: usize },
    /// Product of two space files.
    Product {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        exact: bool,
    },
    /// The path γ for n, as a coordinate list.
    Gamma { n: i64 },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Grid,
    Path,
    Star,
    Sec5,
    Subdivided,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Grid => Family::Grid,
            FamilyArg::Path => Family::Path,
            FamilyArg::Star => Family::Star,
            FamilyArg::Sec5 => Family::Sec5,
            FamilyArg::Subdivided => Family::Subdivided,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Lib(medianlab::Error),
    Input(String),
}

impl From<medianlab::Error> for Failure {
    fn from(e: medianlab::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(e) if e.is_resource_limit() => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Input(msg) => write!(f, "{msg}"),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

/// `2,3`, `4..12`, `4..=12` and mixtures like `1,4..6`.
fn parse_list(text: &str) -> Outcome<Vec<i64>> {
    let bad = || Failure::Input(format!("cannot read \"{text}\" as a list or range"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            let (lo, hi): (i64, i64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
            if lo > hi {
                return Err(bad());
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn parse_sizes(text: &str) -> Outcome<Vec<usize>> {
    parse_list(text)?
        .into_iter()
        .map(|x| usize::try_from(x).map_err(|_| Failure::Input(format!("\"{text}\" contains a negative size"))))
        .collect()
}

fn parse_rational(name: &str, text: &str) -> Outcome<Exact> {
    if let Ok(q) = text.trim().parse::<Exact>() {
        return Ok(q);
    }
    text.trim()
        .parse::<f64>()
        .ok()
        .and_then(|x| Exact::from_json(&Value::from(x)))
        .ok_or_else(|| Failure::Input(format!("--{name}: \"{text}\" is not a number")))
}

fn parse_edges(text: &str) -> Outcome<(usize, Vec<(usize, usize)>)> {
    let bad = || Failure::Input(format!("cannot read \"{text}\" as edges like 0-1,1-2"));
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (u, v) = part.split_once('-').ok_or_else(bad)?;
        edges.push((u.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?));
    }
    let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(1);
    Ok((n, edges))
}

fn read_input(path: &Path) -> Outcome<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load<S: Scalar>(bytes: &[u8]) -> Outcome<CoarseSpace<S>> {
    let text = std::str::from_utf8(bytes).map_err(|_| Failure::Input("space file is not UTF-8".into()))?;
    Ok(CoarseSpace::from_json_str(text)?)
}

/// Writes next to the destination and renames over it.
fn write_atomic(path: &Path, contents: &[u8]) -> Outcome<()> {
    let io = |e: std::io::Error| Failure::Lib(medianlab::Error::Io(e));
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Input(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

fn emit_json(global: &Global, value: &Value) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Lib(e.into()))?;
    text.push('\n');
    match &global.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(global: &Global, report: &RunReport) -> Outcome<()> {
    if let Some(path) = &global.csv {
        let csv = report
            .csv
            .as_ref()
            .ok_or_else(|| Failure::Input(format!("\"{}\" produces no CSV table", report.command)))?;
        write_atomic(path, csv.as_bytes())?;
    }
    emit_json(global, &report.to_json())
}

fn build_space(kind: &SpaceKind, seed: u64) -> Outcome<Value> {
    Ok(match kind {
        SpaceKind::Grid { n } => grid_window::<Exact>(*n)?.to_json(),
        SpaceKind::Sec5 { n, margin } => sec5_space::<Exact>(*n, *margin)?.to_json(),
        SpaceKind::Subdivided { n, margin } => subdivided_sec5::<Exact>(*n, *margin)?.to_json(),
        SpaceKind::Path { n } => path_tree::<Exact>(*n)?.to_json(),
        SpaceKind::Star { leaves } => star_tree::<Exact>(*leaves)?.to_json(),
        SpaceKind::Tree { edges } => {
            let (n, edges) = parse_edges(edges)?;
            tree_space::<Exact>(n, &edges)?.to_json()
        }
        SpaceKind::Random { n } => random_tree::<Exact>(*n, seed)?.to_json(),
        SpaceKind::Product { left, right, exact } => {
            let (l, r) = (read_input(left)?, read_input(right)?);
            if *exact {
                product_space(&load::<Exact>(&l)?, &load::<Exact>(&r)?)?.to_json()
            } else {
                product_space(&load::<f64>(&l)?, &load::<f64>(&r)?)?.to_json()
            }
        }
        SpaceKind::Gamma { n } => serde_json::to_value(gamma_path(*n)).map_err(|e| Failure::Lib(e.into()))?,
    })
}

fn run(cli: Cli) -> Outcome<()> {
    let g = &cli.global;
    let options = RunOptions {
        seed: g.seed,
        sample_cap: g.sample_cap,
        samples: g.samples,
        h_samples: g.h_samples,
        tolerance: g.tolerance,
    };
    let report = match &cli.command {
        Command::FreeAlgebra { p } => commands::free_algebra(*p, &options)?,
        Command::Verify { space, exact, intervals } => {
            let bytes = read_input(space)?;
            match (exact, intervals) {
                (true, true) => commands::intervals(&load::<Exact>(&bytes)?, &bytes, &options)?,
                (false, true) => commands::intervals(&load::<f64>(&bytes)?, &bytes, &options)?,
                (true, false) => commands::verify(&load::<Exact>(&bytes)?, &bytes, &options)?,
                (false, false) => commands::verify(&load::<f64>(&bytes)?, &bytes, &options)?,
            }
        }
        Command::RankScan { family, k, lambda, windows } => {
            commands::rank_scan((*family).into(), &parse_sizes(k)?, *lambda, &parse_sizes(windows)?, &options)?
        }
        Command::Counterexample { n, margin } => commands::counterexample(&parse_list(n)?, *margin, &options)?,
        Command::Delta { space, exact } => {
            let bytes = read_input(space)?;
            if *exact {
                commands::delta(&load::<Exact>(&bytes)?, &bytes, &options)?
            } else {
                commands::delta(&load::<f64>(&bytes)?, &bytes, &options)?
            }
        }
        Command::Report { k, h0, h3, h4, h5, depth } => commands::report(
            parse_rational("k", k)?,
            parse_rational("h0", h0)?,
            parse_rational("h3", h3)?,
            parse_rational("h4", h4)?,
            parse_rational("h5", h5)?,
            *depth,
            &options,
        )?,
        Command::Space { kind } => {
            if g.csv.is_some() {
                return Err(Failure::Input("\"space\" produces no CSV table".into()));
            }
            return emit_json(g, &build_space(kind, g.seed)?);
        }
    };
    emit_report(g, &report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("medianlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
