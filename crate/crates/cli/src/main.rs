use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use rpnjoin::bench::{run_benchmark, write_results, BenchConfig, GridLayout, KeyRange, Shape};
use rpnjoin::error::ErrorClass;
use rpnjoin::join::{
    CostCounters, JoinAlgorithm, JoinResultPolicy, DEFAULT_MAX_OUTPUT_TUPLES, DEFAULT_PAGE_SIZE,
};
use rpnjoin::plan::{parse_plan, PlanTree};
use rpnjoin::relation::{generate_relation, read_relation_csv, write_relation_csv};
use rpnjoin::{eval_plan, Catalog, Error, EvalContext, EvalMode};

#[derive(Parser)]
#[command(
    name = "rpnjoin",
    version,
    about = "Multi-join evaluation with RPN plan programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random relation CSV
    Gen(GenArgs),
    /// Print a plan in infix and RPN form
    Plan(PlanArgs),
    /// Evaluate a plan over relation CSV files
    Run(RunArgs),
    /// Time linear and bushy plans over a grid of sizes
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    name: String,
    #[arg(long)]
    count: usize,
    #[arg(long, allow_negative_numbers = true)]
    key_lo: i64,
    #[arg(long, allow_negative_numbers = true)]
    key_hi: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["shape", "expr"])))]
struct PlanSpec {
    /// Relation names for a generated shape
    #[arg(long, value_delimiter = ',', requires = "shape")]
    relations: Vec<String>,
    /// Generated shape: linear or bushy
    #[arg(long, requires = "relations")]
    shape: Option<Shape>,
    /// Plan expression, e.g. "(R1 JOIN R2) JOIN R3"
    #[arg(long)]
    expr: Option<String>,
}

impl PlanSpec {
    fn build(&self) -> rpnjoin::Result<PlanTree> {
        match (&self.expr, self.shape) {
            (Some(expr), _) => parse_plan(expr),
            (None, Some(shape)) => shape.build(&self.relations),
            (None, None) => unreachable!("clap requires one of --shape/--expr"),
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    plan: PlanSpec,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    plan: PlanSpec,
    /// Relation input as name=path; repeatable
    #[arg(long = "input", value_parser = parse_input)]
    inputs: Vec<(String, PathBuf)>,
    #[arg(long, default_value = "sortmerge")]
    algorithm: JoinAlgorithm,
    #[arg(long, default_value = "sequential")]
    mode: EvalMode,
    /// Result CSV; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print comparison and page-read counters to standard error
    #[arg(long)]
    stats: bool,
    #[arg(long, default_value_t = DEFAULT_PAGE_SIZE)]
    page_size: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_OUTPUT_TUPLES)]
    max_output: usize,
}

#[derive(Args)]
#[command(group(ArgGroup::new("layout").args(["paired", "cross"])))]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    tuples: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    relations: Vec<usize>,
    /// Zip the tuple and relation lists (default)
    #[arg(long)]
    paired: bool,
    /// Use every tuple count with every relation count
    #[arg(long)]
    cross: bool,
    #[arg(long, value_delimiter = ',', default_value = "linear,bushy")]
    shapes: Vec<Shape>,
    #[arg(long, default_value = "sortmerge")]
    algorithm: JoinAlgorithm,
    #[arg(long, default_value = "sequential")]
    mode: EvalMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Fixed key range lower bound (default: [0, tuples/10) per cell)
    #[arg(long, requires = "key_hi", allow_negative_numbers = true)]
    key_lo: Option<i64>,
    #[arg(long, requires = "key_lo", allow_negative_numbers = true)]
    key_hi: Option<i64>,
    #[arg(long, default_value_t = DEFAULT_MAX_OUTPUT_TUPLES)]
    max_output: usize,
    /// Results CSV; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_input(arg: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = arg
        .split_once('=')
        .ok_or_else(|| format!("expected name=path, got '{arg}'"))?;
    if name.is_empty() || path.is_empty() {
        return Err(format!("expected name=path, got '{arg}'"));
    }
    Ok((name.to_owned(), PathBuf::from(path)))
}

fn output(path: &Option<PathBuf>) -> rpnjoin::Result<Box<dyn Write>> {
    Ok(match path {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_gen(args: GenArgs) -> rpnjoin::Result<()> {
    let relation = generate_relation(args.name, args.count, args.key_lo, args.key_hi, args.seed)?;
    write_relation_csv(&relation, output(&args.out)?)
}

fn cmd_plan(args: PlanArgs) -> rpnjoin::Result<()> {
    let plan = args.plan.build()?;
    let mut out = io::stdout().lock();
    writeln!(out, "{plan}")?;
    writeln!(out, "{}", plan.to_rpn())?;
    Ok(())
}

fn cmd_run(args: RunArgs) -> rpnjoin::Result<()> {
    if args.page_size == 0 {
        return Err(Error::InvalidConfig("page size must be positive".into()));
    }
    let plan = args.plan.build()?;
    let mut catalog = Catalog::new();
    for (name, path) in &args.inputs {
        catalog.insert(read_relation_csv(name.as_str(), File::open(path)?)?)?;
    }
    let mut ctx = EvalContext::new(&catalog, args.algorithm)
        .with_mode(args.mode)
        .with_policy(JoinResultPolicy {
            max_output_tuples: args.max_output,
        })
        .with_counters(CostCounters::with_page_size(args.page_size));
    let result = eval_plan(&plan, &mut ctx)?;
    write_relation_csv(&result, output(&args.out)?)?;

    eprintln!("cardinality={}", result.cardinality());
    if args.stats {
        eprintln!(
            "tuple_comparisons={} page_reads={}",
            ctx.counters.tuple_comparisons, ctx.counters.page_reads
        );
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> rpnjoin::Result<()> {
    let key_range = match (args.key_lo, args.key_hi) {
        (Some(lo), Some(hi)) => KeyRange::Fixed { lo, hi },
        _ => KeyRange::PerCell,
    };
    let config = BenchConfig {
        tuples_per_relation: args.tuples,
        relation_counts: args.relations,
        layout: if args.cross {
            GridLayout::Cross
        } else {
            GridLayout::Paired
        },
        key_range,
        seed: args.seed,
        shapes: args.shapes,
        algorithm: args.algorithm,
        repetitions: args.reps,
        warmup: args.warmup,
        policy: JoinResultPolicy {
            max_output_tuples: args.max_output,
        },
        mode: args.mode,
    };
    let records = run_benchmark(&config)?;
    write_results(&records, output(&args.out)?)
}

fn exit_code(err: &Error) -> u8 {
    match err.class() {
        ErrorClass::Parse => 2,
        ErrorClass::Catalog => 3,
        ErrorClass::Cap => 4,
        ErrorClass::Io => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
