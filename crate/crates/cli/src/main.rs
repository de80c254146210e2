//! `sgdraw` command-line entry point.
//!
//! Exit codes: 0 success, 1 output or network failure, 2 invalid input
//! (usage, config, graph or layout files), 3 the optimizer diverged.

use std::fmt::Display;
use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use sgdraw::io::{self, LayoutFile, RunConfig, SvgStyle};
use sgdraw::optimizer::{initial_layout, run_layout, RunTrace};
use sgdraw::quality::{evaluate_all, quality_csv, QualityRow, CSV_HEADER};
use sgdraw::{Error, Graph};
use sgdraw_service::{serve, Cadence, ServiceOptions, Session};

#[derive(Parser)]
#[command(
    name = "sgdraw",
    version,
    about = "Straight-line graph layout by stochastic gradient descent over readability criteria",
    after_help = "The seed comes from --seed, then the config's `seed`, then SGDRAW_SEED, then 0."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph as an edge list.
    ///
    /// Generators: grid ROWS COLS, tree BRANCHING DEPTH, dodecahedron,
    /// path N, cycle N, complete N, star LEAVES, random N EXTRA_EDGES [SEED].
    Generate(GenerateArgs),
    /// Run the optimizer described by a TOML config.
    Layout(LayoutArgs),
    /// Write the nine quality measures of a layout as a CSV row.
    Eval(EvalArgs),
    /// Serve live-steerable layout sessions over WebSocket.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator name.
    name: String,
    /// Generator arguments.
    args: Vec<u64>,
    /// Output file (default: standard output).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LayoutArgs {
    /// Run configuration (TOML).
    config: PathBuf,
    /// Layout JSON output; overrides `output.layout`. Without either the
    /// layout goes to standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// SVG drawing output; overrides `output.svg`.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Per-iteration trace CSV output; overrides `output.trace`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration limit; overrides `optimizer.max_iter`. 0 writes the
    /// initial layout.
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["graph", "generator"]))]
struct EvalArgs {
    /// Layout JSON to evaluate.
    layout: PathBuf,
    /// Graph file (edge list or Matrix Market).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Generator spec instead of a file, e.g. "grid 6 10".
    #[arg(long)]
    generator: Option<String>,
    /// Value of the `method` column.
    #[arg(long, default_value = "sgdraw")]
    method: String,
    /// Output file (default: standard output).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Append the row to `--output`, writing the header only if the file is
    /// new or empty.
    #[arg(long, requires = "output")]
    append: bool,
}

#[derive(Args)]
struct ServeArgs {
    /// Run configuration (TOML); every connection starts a fresh session
    /// from it.
    config: PathBuf,
    /// TCP port; 0 picks a free one.
    #[arg(short, long, default_value_t = 8765)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Send a frame every this many iterations.
    #[arg(long, default_value_t = 1)]
    every_k: usize,
    /// Attach qualities to every this many frames.
    #[arg(long, default_value_t = 50)]
    quality_every: usize,
    /// Frames buffered per connection before the oldest is dropped.
    #[arg(long, default_value_t = 64)]
    queue: usize,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(context: impl Display, e: impl Display) -> Failure {
        Failure {
            code: 2,
            message: format!("{context}: {e}"),
        }
    }

    fn output(context: impl Display, e: impl Display) -> Failure {
        Failure {
            code: 1,
            message: format!("{context}: {e}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Layout(a) => layout(a),
        Command::Eval(a) => eval(a),
        Command::Serve(a) => serve_command(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sgdraw: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::output(p.display(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(a: GenerateArgs) -> Result<(), Failure> {
    let g = io::generate(&a.name, &a.args).map_err(|e| Failure::input("generate", e))?;
    write_output(a.output.as_deref(), &g.to_edge_list())
}

fn load_config(path: &Path) -> Result<(RunConfig, PathBuf), Failure> {
    let config = RunConfig::load(path).map_err(|e| Failure::input(path.display(), e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, base))
}

fn seed_for(flag: Option<u64>, config: &RunConfig) -> Result<u64, Failure> {
    match flag {
        Some(s) => Ok(s),
        None => config.resolved_seed().map_err(|e| Failure::input("seed", e)),
    }
}

/// Config output paths are relative to the config file; flags to the
/// working directory.
fn output_path(flag: Option<PathBuf>, configured: &Option<PathBuf>, base: &Path) -> Option<PathBuf> {
    flag.or_else(|| {
        configured
            .as_ref()
            .map(|p| if p.is_relative() { base.join(p) } else { p.clone() })
    })
}

fn layout(a: LayoutArgs) -> Result<(), Failure> {
    let (config, base) = load_config(&a.config)?;
    let graph = config.graph.load(Some(&base)).map_err(|e| Failure::input("graph", e))?;
    let seed = seed_for(a.seed, &config)?;
    let mut opt = config.optimizer.clone();
    opt.seed = seed;
    if let Some(n) = a.iterations {
        opt.max_iter = n;
    }
    let init = initial_layout(graph.n(), seed);

    let (result, trace) = if opt.max_iter == 0 {
        (init, RunTrace::new())
    } else {
        run_layout(&graph, &config.criteria, &opt, init).map_err(|e| match e {
            Error::Diverged { .. } | Error::NonFinite(_) => Failure {
                code: 3,
                message: format!("optimization aborted: {e}"),
            },
            e => Failure::input("layout", e),
        })?
    };
    eprintln!(
        "{}: {} iterations, stop: {}",
        graph.name(),
        trace.records.last().map_or(0, |r| r.iteration),
        trace.stop.map_or("none".to_string(), |s| format!("{s:?}"))
    );

    let out = &config.output;
    let file = LayoutFile::new(&result, graph.name(), Some(seed));
    let json = file.to_json().map_err(|e| Failure {
        code: 3,
        message: format!("layout: {e}"),
    })? + "\n";
    write_output(output_path(a.output, &out.layout, &base).as_deref(), &json)?;
    if let Some(p) = output_path(a.svg, &out.svg, &base) {
        let svg = io::render_svg(&graph, &result, &SvgStyle::default()).map_err(|e| Failure::output("svg", e))?;
        write_output(Some(&p), &svg)?;
    }
    if let Some(p) = output_path(a.trace, &out.trace, &base) {
        write_output(Some(&p), &trace.to_csv())?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let graph: Graph = match (&a.graph, &a.generator) {
        (Some(path), _) => io::load_graph(path).map_err(|e| Failure::input(path.display(), e))?,
        (None, Some(spec)) => io::generate_from_spec(spec).map_err(|e| Failure::input("generator", e))?,
        (None, None) => unreachable!("clap requires a graph source"),
    };
    let layout = LayoutFile::load(&a.layout)
        .map_err(|e| Failure::input(a.layout.display(), e))?
        .layout();
    layout
        .check(graph.n())
        .map_err(|e| Failure::input(a.layout.display(), e))?;
    let report = evaluate_all(&graph, &layout).map_err(|e| Failure::input("eval", e))?;
    let csv = quality_csv(&[QualityRow {
        method: a.method,
        graph: graph.name().to_string(),
        report,
    }]);
    match (&a.output, a.append) {
        (Some(path), true) => {
            let existing = fs::read_to_string(path).unwrap_or_default();
            let mut text = existing.clone();
            if existing.trim().is_empty() {
                text = csv;
            } else {
                if existing.lines().next() != Some(CSV_HEADER) {
                    return Err(Failure::input(path.display(), "existing file has a different header"));
                }
                if !text.ends_with('\n') {
                    text.push('\n');
                }
                text.push_str(csv.lines().nth(1).unwrap_or_default());
                text.push('\n');
            }
            write_output(Some(path), &text)
        }
        (path, _) => write_output(path.as_deref(), &csv),
    }
}

fn serve_command(a: ServeArgs) -> Result<(), Failure> {
    let (mut config, base) = load_config(&a.config)?;
    config.seed = Some(seed_for(a.seed, &config)?);
    let cadence = Cadence {
        every_k: a.every_k,
        quality_every: a.quality_every,
    };
    // Fail before listening if the config cannot start a session.
    Session::from_config(&config, Some(&base), cadence).map_err(|e| Failure::input(a.config.display(), e))?;

    let listener = TcpListener::bind((a.host.as_str(), a.port)).map_err(|e| Failure::output("bind", e))?;
    let addr = listener.local_addr().map_err(|e| Failure::output("bind", e))?;
    eprintln!("listening on ws://{addr}");
    let opts = ServiceOptions {
        cadence,
        queue_capacity: a.queue.max(1),
        ..Default::default()
    };
    let factory = move || Session::from_config(&config, Some(&base), cadence);
    serve(listener, factory, opts, Arc::new(AtomicBool::new(false))).map_err(|e| Failure::output("serve", e))
}
