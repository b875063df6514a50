//! `mas` command-line front end: `align`, `verify` and `bench`.
//!
//! Exit codes are stable: 0 success, 1 IO or engine failure, 2 usage or
//! validation error, 3 verification mismatch. Only data goes to stdout.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use mas_core::bench::{emit_report, run_bench, BenchError, BenchPlan, ReportFormat};
use mas_core::io::{read_tensor, write_tensor, IoError, Tensor};
use mas_core::oracle::best_paths;
use mas_core::{align, solve_item, Engine, ItemView, MasConfig, PathVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

/// Largest text length `verify` accepts; the oracle enumerates every path.
pub const VERIFY_T_LIMIT: usize = 6;
pub const VERIFY_S_LIMIT: usize = 10;

/// Engine score vs oracle maximum, relative with a unit floor.
pub const VERIFY_REL_TOL: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "mas", version, about = "Monotonic alignment search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align a likelihood tensor file and write the alignment tensor.
    Align(AlignArgs),
    /// Check both engines against the exhaustive oracle on random instances.
    Verify(VerifyArgs),
    /// Time the engines over a sweep of text lengths.
    Bench(BenchArgs),
}

#[derive(Debug, clap::Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "parallel")]
    pub engine: Engine,
    /// Sentinel for unreachable cells; must be finite and <= -1e30.
    #[arg(long, default_value_t = -1e32, allow_negative_numbers = true)]
    pub neg_val: f32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = VERIFY_T_LIMIT as u8,
          value_parser = clap::value_parser!(u8).range(1..=VERIFY_T_LIMIT as i64))]
    pub t_max: u8,
    #[arg(long, default_value_t = VERIFY_S_LIMIT as u8,
          value_parser = clap::value_parser!(u8).range(1..=VERIFY_S_LIMIT as i64))]
    pub s_max: u8,
    /// Trial `k` draws its instance from `seed + k`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// Comma-separated text lengths.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "128,256,384,512,640,768,896,1024,1152,1280,1408,1536,1664,1792,1920,2048"
    )]
    pub t_values: Vec<usize>,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Speech length as a multiple of the text length.
    #[arg(long, default_value_t = 4)]
    pub s_ratio: usize,
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    #[arg(long, value_delimiter = ',', default_value = "reference,parallel")]
    pub engines: Vec<Engine>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Report destination; `stdout` or `-` for standard output.
    #[arg(long, default_value = "stdout")]
    pub out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

/// Single-item solver checked by `verify`.
pub type Solver<'a> = &'a dyn Fn(ItemView<'_, f32>) -> (f32, PathVector);

pub type BoxedSolver = Box<dyn Fn(ItemView<'_, f32>) -> (f32, PathVector)>;

/// Both production engines, labelled for `verify` output.
pub fn engine_solvers() -> Vec<(String, BoxedSolver)> {
    Engine::ALL
        .iter()
        .map(|&engine| {
            let cfg = MasConfig::<f32>::new(engine);
            let solve: BoxedSolver = Box::new(move |view| solve_item(view, &cfg));
            (engine.to_string(), solve)
        })
        .collect()
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let solvers = engine_solvers();
    let solvers: Vec<(&str, Solver)> = solvers
        .iter()
        .map(|(n, s)| (n.as_str(), s.as_ref()))
        .collect();
    run_with_solvers(args, out, err, &solvers)
}

/// [`run`] with the solvers `verify` should check.
pub fn run_with_solvers<I, T>(
    args: I,
    out: &mut dyn Write,
    err: &mut dyn Write,
    solvers: &[(&str, Solver)],
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let info = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            if info {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            let _ = write!(err, "{}", e.render());
            return EXIT_USAGE;
        }
    };
    match cli.command {
        Command::Align(a) => cmd_align(&a, err),
        Command::Verify(v) => cmd_verify(&v, out, err, solvers),
        Command::Bench(b) => cmd_bench(&b, out, err),
    }
}

pub fn cmd_align(args: &AlignArgs, err: &mut dyn Write) -> i32 {
    let cfg = match MasConfig::new(args.engine).with_max_neg_val(args.neg_val) {
        Ok(cfg) => cfg.with_threads(args.threads.map(|n| n as usize)),
        Err(e) => return fail(err, EXIT_USAGE, &format!("--neg-val: {e}")),
    };
    let batch = match read_tensor(&args.input) {
        Ok(Tensor::Likelihood(batch)) => batch,
        Ok(Tensor::Alignment(_)) => {
            return fail(
                err,
                EXIT_USAGE,
                "input holds an alignment tensor, expected likelihoods",
            )
        }
        Err(IoError::Invalid(e)) => return fail(err, EXIT_USAGE, &e.to_string()),
        Err(e) => return fail(err, EXIT_IO, &format!("{}: {e}", args.input.display())),
    };
    let aligned = match align(&batch, &cfg) {
        Ok(a) => a,
        Err(e) => return fail(err, EXIT_USAGE, &e.to_string()),
    };
    if let Err(e) = write_tensor(&args.output, &Tensor::Alignment(aligned)) {
        return fail(err, EXIT_IO, &format!("{}: {e}", args.output.display()));
    }
    EXIT_OK
}

pub fn cmd_verify(
    args: &VerifyArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
    solvers: &[(&str, Solver)],
) -> i32 {
    let (t_max, s_max) = (args.t_max as usize, args.s_max as usize);
    if t_max > s_max {
        return fail(
            err,
            EXIT_USAGE,
            &format!("--t-max {t_max} exceeds --s-max {s_max}"),
        );
    }
    let (mut passed, mut failed) = (0usize, 0usize);
    for trial in 0..args.trials as u64 {
        let seed = args.seed.wrapping_add(trial);
        let (t, s, values) = verify_instance(seed, t_max, s_max);
        let view = ItemView::dense(&values, t, s).expect("t * s values");
        let truth = match best_paths(view) {
            Ok(truth) => truth,
            Err(e) => return fail(err, EXIT_IO, &e.to_string()),
        };
        let mut ok = true;
        for (name, solve) in solvers {
            let (score, path) = solve(view);
            let score = score as f64;
            let close =
                (score - truth.max_score).abs() <= VERIFY_REL_TOL * truth.max_score.abs().max(1.0);
            if !close || !truth.contains(&path) {
                ok = false;
                let _ = writeln!(
                    err,
                    "mismatch: seed {seed} dims {t}x{s} engine {name}: score {score} path {:?}, oracle {} paths {:?}",
                    path.one_based(),
                    truth.max_score,
                    truth.argmax_paths.iter().map(PathVector::one_based).collect::<Vec<_>>()
                );
            }
        }
        if ok {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    let _ = writeln!(out, "passed {passed} failed {failed}");
    if failed > 0 {
        EXIT_MISMATCH
    } else {
        EXIT_OK
    }
}

/// Random `t x s` instance with uniform `[-5, 5]` values, a pure function of
/// `seed`.
pub fn verify_instance(seed: u64, t_max: usize, s_max: usize) -> (usize, usize, Vec<f32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = rng.gen_range(1..=t_max);
    let s = rng.gen_range(t..=s_max);
    let values = (0..t * s).map(|_| rng.gen_range(-5.0f32..=5.0)).collect();
    (t, s, values)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let plan = BenchPlan {
        t_values: args.t_values.clone(),
        batch_size: args.batch_size,
        s_ratio: args.s_ratio,
        repeats: args.repeats,
        warmup: args.warmup,
        engines: args.engines.clone(),
        seed: args.seed,
        threads: args.threads,
    };
    let report = match run_bench(&plan) {
        Ok(r) => r,
        Err(e @ BenchError::InvalidPlan(_)) => return fail(err, EXIT_USAGE, &e.to_string()),
        Err(e) => return fail(err, EXIT_IO, &e.to_string()),
    };
    let text = match emit_report(&report, args.format.into()) {
        Ok(text) => text,
        Err(e) => return fail(err, EXIT_IO, &e.to_string()),
    };
    let written = match args.out.as_str() {
        "stdout" | "-" => out.write_all(text.as_bytes()),
        path => fs::write(path, text),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => fail(err, EXIT_IO, &format!("{}: {e}", args.out)),
    }
}

fn fail(err: &mut dyn Write, code: i32, msg: &str) -> i32 {
    let _ = writeln!(err, "error: {msg}");
    code
}
