use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use pcgcn::model::read_checkpoint_header;
use pcgcn::{
    build_dataset, evaluate, read_checkpoint, read_instances, read_jsonl, solve_exact, train,
    write_checkpoint, write_jsonl, GapReport, GapSummary, Instance, Setting, TrainConfig,
};

const THREADS_ENV: &str = "PCGCN_THREADS";

#[derive(Parser)]
#[command(name = "pcgcn", version, about = "Vertex p-center learning pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances, solve them exactly and write labelled JSONL
    Generate(GenerateArgs),
    /// Solve one instance exactly
    Solve(SolveArgs),
    /// Train a model and write its checkpoint
    Train(TrainArgs),
    /// Decode a test set with a trained model and write the gap report
    Eval(EvalArgs),
    /// Turn a gap report into sorted-gap plot data
    GapPlot(GapPlotArgs),
    /// Print a checkpoint header
    Inspect(InspectArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    p: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["file", "coords"])))]
struct SolveArgs {
    /// JSONL file of instances
    #[arg(long)]
    file: Option<PathBuf>,
    /// Line of the instance within --file (0-based)
    #[arg(long, requires = "file", default_value_t = 0)]
    index: usize,
    /// Inline points as "x,y;x,y;..."
    #[arg(long, value_parser = parse_coords, requires = "p")]
    coords: Option<Points>,
    /// Number of centres for --coords
    #[arg(long, requires = "coords")]
    p: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    /// batch 100, 5 epochs
    Desk,
    /// batch 1000, 50 epochs (A) or 20 (B, C)
    Full,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_parser = parse_setting)]
    setting: Setting,
    #[arg(long)]
    train_file: PathBuf,
    /// Defaults for epochs and batch size
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    scale: Scale,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    batch: Option<u64>,
    #[arg(long, default_value_t = 1e-4, value_parser = parse_lr)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    checkpoint_out: PathBuf,
    /// Per-batch loss log (epoch,batch,seconds,loss)
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    test_file: PathBuf,
    /// Base seed of the random baseline decoder
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report_csv: PathBuf,
}

#[derive(Args)]
struct GapPlotArgs {
    #[arg(long)]
    report_csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    checkpoint: PathBuf,
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    s.parse().map_err(|e: pcgcn::Error| e.to_string())
}

fn parse_lr(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("expected a finite non-negative number, got {s:?}")),
    }
}

#[derive(Clone)]
struct Points(Vec<[i32; 2]>);

fn parse_coords(s: &str) -> Result<Points, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (x, y) = pair
                .split_once(',')
                .ok_or_else(|| format!("expected \"x,y\", got {pair:?}"))?;
            let num = |v: &str| v.trim().parse::<i32>().map_err(|e| format!("{v:?}: {e}"));
            Ok([num(x)?, num(y)?])
        })
        .collect::<Result<_, _>>()
        .map(Points)
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<pcgcn::Error> for Failure {
    fn from(e: pcgcn::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t > 0 => t,
        _ => {
            return Err(Failure::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {raw:?}"
            )))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn generate(a: GenerateArgs) -> Result<(), Failure> {
    if a.p > a.n {
        return Err(Failure::Usage(format!("--p {} exceeds --n {}", a.p, a.n)));
    }
    let samples = build_dataset(a.count as usize, a.n as usize, a.p as usize, a.seed)?;
    write_jsonl(&samples, create(&a.out)?)?;
    eprintln!(
        "wrote {} labelled instances to {}",
        samples.len(),
        a.out.display()
    );
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let inst = match (a.file, a.coords) {
        (Some(path), _) => {
            let all = read_instances(open(&path)?)?;
            let count = all.len();
            all.into_iter().nth(a.index).ok_or_else(|| {
                Failure::Data(format!(
                    "{} holds {count} instances, no index {}",
                    path.display(),
                    a.index
                ))
            })?
        }
        (None, Some(Points(coords))) => {
            let p = a.p.expect("clap requires --p with --coords");
            Instance::new(0, p, coords).map_err(|e| Failure::Usage(e.to_string()))?
        }
        (None, None) => unreachable!("clap requires --file or --coords"),
    };
    let cert = solve_exact(&inst)?;
    let verts: Vec<String> = cert
        .solution
        .vertices()
        .iter()
        .map(usize::to_string)
        .collect();
    println!("z*={}", cert.z_star);
    println!("solution={}", verts.join(","));
    Ok(())
}

fn run_train(a: TrainArgs) -> Result<(), Failure> {
    let mut cfg = match a.scale {
        Scale::Desk => TrainConfig::desk(a.setting, a.seed),
        Scale::Full => TrainConfig::full(a.setting, a.seed),
    };
    if let Some(e) = a.epochs {
        cfg.epochs = e as usize;
    }
    if let Some(b) = a.batch {
        cfg.batch_size = b as usize;
    }
    cfg.lr = a.lr;
    let data = read_jsonl(open(&a.train_file)?)?;
    let start = Instant::now();
    let (params, history) = train(&cfg, &data)?;
    write_checkpoint(&params, create(&a.checkpoint_out)?)?;
    if let Some(path) = &a.loss_csv {
        history.write_csv(create(path)?)?;
    }
    println!(
        "setting {} trained on {} instances: {} batches in {:.1}s, final epoch mean loss {:.6}",
        a.setting,
        data.len(),
        history.len(),
        start.elapsed().as_secs_f64(),
        history.final_epoch_mean().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn summary_line(name: &str, s: GapSummary) -> String {
    format!(
        "{name:<9} mean {:>8.3}%  median {:>8.3}%  max {:>8.3}%",
        s.mean, s.median, s.max
    )
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let params = read_checkpoint(open(&a.checkpoint)?)?;
    let test = read_jsonl(open(&a.test_file)?)?;
    let report = evaluate(&params, &test, a.seed)?;
    report.write_csv(create(&a.report_csv)?)?;
    println!("{} test instances", report.rows.len());
    println!("{}", summary_line("naive", report.naive()));
    println!("{}", summary_line("greedy", report.greedy()));
    println!("{}", summary_line("baseline", report.baseline()));
    Ok(())
}

fn gap_plot(a: GapPlotArgs) -> Result<(), Failure> {
    let report = GapReport::read_csv(open(&a.report_csv)?)?;
    report.write_plot_csv(create(&a.out)?)?;
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<(), Failure> {
    let header = read_checkpoint_header(&mut open(&a.checkpoint)?)?;
    let cfg = header.config()?;
    println!("h={}", cfg.h);
    println!("L={}", cfg.layers);
    println!("k={}", cfg.k);
    println!("mlp_layers={}", header.mlp_layers);
    println!("format={}", header.format);
    println!("param_count={}", header.param_count);
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
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Train(a) => run_train(a),
        Command::Eval(a) => eval(a),
        Command::GapPlot(a) => gap_plot(a),
        Command::Inspect(a) => inspect(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
