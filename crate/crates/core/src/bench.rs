//! Timing harness: random batches over a sweep of text lengths, warmup,
//! repeated wall-clock runs around the align call, percentile summaries.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::alignment::AlignmentMatrix;
use crate::batch::LikelihoodBatch;
use crate::config::{Engine, MasConfig};
use crate::error::MasError;

/// Range of the uniform likelihoods drawn by [`generate_random_batch`].
pub const LIKELIHOOD_RANGE: (f32, f32) = (-5.0, 5.0);

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("report has no rows")]
    EmptyReport,
    #[error("need at least {needed} distinct T values for {engine}, found {found}")]
    InsufficientPoints {
        engine: Engine,
        needed: usize,
        found: usize,
    },
    #[error("engine {engine} failed at T={t}: {source}")]
    Engine {
        engine: Engine,
        t: usize,
        #[source]
        source: MasError,
    },
}

/// Sweep definition. `S = s_ratio * T` for every point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub t_values: Vec<usize>,
    pub batch_size: usize,
    pub s_ratio: usize,
    pub repeats: usize,
    pub warmup: usize,
    pub engines: Vec<Engine>,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            t_values: (1..=16).map(|k| 128 * k).collect(),
            batch_size: 32,
            s_ratio: 4,
            repeats: 20,
            warmup: 3,
            engines: Engine::ALL.to_vec(),
            seed: 0,
            threads: None,
        }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidPlan(m.to_string()));
        if self.t_values.is_empty() || self.t_values.contains(&0) {
            return bad("t_values must be non-empty and >= 1");
        }
        if self.batch_size == 0 || self.s_ratio == 0 {
            return bad("batch_size and s_ratio must be >= 1");
        }
        if self.repeats == 0 {
            return bad("repeats must be >= 1");
        }
        if self.engines.is_empty() {
            return bad("no engines selected");
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1");
        }
        Ok(())
    }
}

/// `B` items of i.i.d. uniform `[-5, 5]` likelihoods, all with extent `(T, S)`.
///
/// A pure function of its arguments.
pub fn generate_random_batch(b: usize, t: usize, s: usize, seed: u64) -> LikelihoodBatch<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(LIKELIHOOD_RANGE.0, LIKELIHOOD_RANGE.1);
    let values = (0..b * t * s).map(|_| dist.sample(&mut rng)).collect();
    LikelihoodBatch::full(b, t, s, values).expect("B, T, S >= 1 and T <= S")
}

/// Timing summary for one `(engine, T)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub engine: Engine,
    pub t: usize,
    pub s: usize,
    pub b: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p20_ms: f64,
    pub p80_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub cpu_model: String,
    pub threads: usize,
    pub build: String,
}

impl Environment {
    pub fn detect(threads: Option<usize>) -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|info| {
                info.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|m| m.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        let threads = threads.unwrap_or_else(rayon::current_num_threads);
        let profile = if cfg!(debug_assertions) {
            "debug"
        } else {
            "release"
        };
        let mut features = Vec::new();
        if cfg!(target_feature = "sse4.2") {
            features.push("sse4.2");
        }
        if cfg!(target_feature = "avx2") {
            features.push("avx2");
        }
        if cfg!(target_feature = "neon") {
            features.push("neon");
        }
        let build = format!(
            "profile={profile} arch={} features={}",
            std::env::consts::ARCH,
            if features.is_empty() {
                "baseline".to_string()
            } else {
                features.join(",")
            }
        );
        Self {
            cpu_model,
            threads,
            build,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub repeats: usize,
    pub environment: Environment,
}

impl BenchReport {
    pub fn row(&self, engine: Engine, t: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.engine == engine && r.t == t)
    }
}

/// Hooks the harness needs; swapped out in tests to observe the timed region.
pub trait BenchDriver {
    fn generate(&mut self, b: usize, t: usize, s: usize, seed: u64) -> LikelihoodBatch<f32>;
    fn align(
        &mut self,
        engine: Engine,
        batch: &LikelihoodBatch<f32>,
    ) -> Result<AlignmentMatrix, MasError>;
    /// Monotonic time since an arbitrary origin.
    fn now(&mut self) -> Duration;
}

/// Real batches, real engines, `Instant` clock.
#[derive(Debug)]
pub struct SystemDriver {
    origin: Instant,
    threads: Option<usize>,
}

impl SystemDriver {
    pub fn new(threads: Option<usize>) -> Self {
        Self {
            origin: Instant::now(),
            threads,
        }
    }
}

impl BenchDriver for SystemDriver {
    fn generate(&mut self, b: usize, t: usize, s: usize, seed: u64) -> LikelihoodBatch<f32> {
        generate_random_batch(b, t, s, seed)
    }

    fn align(
        &mut self,
        engine: Engine,
        batch: &LikelihoodBatch<f32>,
    ) -> Result<AlignmentMatrix, MasError> {
        let cfg = MasConfig::new(engine).with_threads(self.threads);
        crate::align(batch, &cfg)
    }

    fn now(&mut self) -> Duration {
        self.origin.elapsed()
    }
}

/// Linear-interpolated percentile of sorted data, `p` in `[0, 1]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

fn summarize(engine: Engine, t: usize, s: usize, b: usize, mut samples: Vec<f64>) -> BenchRow {
    samples.sort_by(f64::total_cmp);
    BenchRow {
        engine,
        t,
        s,
        b,
        mean_ms: samples.iter().sum::<f64>() / samples.len() as f64,
        median_ms: percentile(&samples, 0.5),
        p20_ms: percentile(&samples, 0.2),
        p80_ms: percentile(&samples, 0.8),
    }
}

/// Runs the plan with the real engines and clock.
pub fn run_bench(plan: &BenchPlan) -> Result<BenchReport, BenchError> {
    run_bench_with(plan, &mut SystemDriver::new(plan.threads))
}

/// Runs the plan against `driver`. Configurations run one after another;
/// only the align call sits between the two clock reads.
pub fn run_bench_with<D: BenchDriver>(
    plan: &BenchPlan,
    driver: &mut D,
) -> Result<BenchReport, BenchError> {
    plan.validate()?;
    let mut rows = Vec::with_capacity(plan.t_values.len() * plan.engines.len());
    for &t in &plan.t_values {
        let s = plan.s_ratio * t;
        let batch = driver.generate(plan.batch_size, t, s, plan.seed.wrapping_add(t as u64));
        for &engine in &plan.engines {
            let fail = |source| BenchError::Engine { engine, t, source };
            for _ in 0..plan.warmup {
                black_box(driver.align(engine, &batch).map_err(fail)?);
            }
            let mut samples = Vec::with_capacity(plan.repeats);
            for _ in 0..plan.repeats {
                let start = driver.now();
                let out = driver.align(engine, black_box(&batch));
                let stop = driver.now();
                black_box(out.map_err(fail)?);
                samples.push((stop - start).as_secs_f64() * 1e3);
            }
            rows.push(summarize(engine, t, s, plan.batch_size, samples));
        }
    }
    Ok(BenchReport {
        rows,
        repeats: plan.repeats,
        environment: Environment::detect(plan.threads),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub const CSV_HEADER: &str = "engine,T,S,B,mean_ms,median_ms,p20_ms,p80_ms";

/// Renders a report. CSV has one row per `(engine, T)` after `#` comment
/// lines carrying the environment; markdown pivots median times into a
/// `T x engine` table.
pub fn emit_report(report: &BenchReport, format: ReportFormat) -> Result<String, BenchError> {
    if report.rows.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    let env = &report.environment;
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            writeln!(out, "# cpu: {}", env.cpu_model).unwrap();
            writeln!(out, "# threads: {}", env.threads).unwrap();
            writeln!(out, "# build: {}", env.build).unwrap();
            writeln!(out, "# repeats: {}", report.repeats).unwrap();
            writeln!(out, "{CSV_HEADER}").unwrap();
            for r in &report.rows {
                writeln!(
                    out,
                    "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                    r.engine, r.t, r.s, r.b, r.mean_ms, r.median_ms, r.p20_ms, r.p80_ms
                )
                .unwrap();
            }
        }
        ReportFormat::Markdown => {
            let mut engines: Vec<Engine> = Vec::new();
            let mut ts: Vec<usize> = Vec::new();
            for r in &report.rows {
                if !engines.contains(&r.engine) {
                    engines.push(r.engine);
                }
                if !ts.contains(&r.t) {
                    ts.push(r.t);
                }
            }
            write!(out, "| T |").unwrap();
            for e in &engines {
                write!(out, " {e} |").unwrap();
            }
            write!(out, "\n|---:|").unwrap();
            for _ in &engines {
                write!(out, "---:|").unwrap();
            }
            out.push('\n');
            for &t in &ts {
                write!(out, "| {t} |").unwrap();
                for &e in &engines {
                    match report.row(e, t) {
                        Some(r) => write!(out, " {:.3} |", r.median_ms).unwrap(),
                        None => write!(out, " - |").unwrap(),
                    }
                }
                out.push('\n');
            }
            writeln!(
                out,
                "\nMedian ms over {} runs. cpu: {}; threads: {}; build: {}",
                report.repeats, env.cpu_model, env.threads, env.build
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Least-squares line of median time against `T * S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    /// Milliseconds per lattice cell.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub const MIN_FIT_POINTS: usize = 4;

/// Fits `median_ms = slope * (T * S) + intercept` over `engine`'s rows.
///
/// `r_squared` is 0 when the medians have no variance to explain.
pub fn fit_scaling(report: &BenchReport, engine: Engine) -> Result<ScalingFit, BenchError> {
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.engine == engine)
        .map(|r| ((r.t * r.s) as f64, r.median_ms))
        .collect();
    let mut distinct: Vec<usize> = report
        .rows
        .iter()
        .filter(|r| r.engine == engine)
        .map(|r| r.t)
        .collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < MIN_FIT_POINTS {
        return Err(BenchError::InsufficientPoints {
            engine,
            needed: MIN_FIT_POINTS,
            found: distinct.len(),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let scale: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let r_squared = if ss_tot <= 1e-24 * scale.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Environment {
        Environment {
            cpu_model: "test cpu".into(),
            threads: 1,
            build: "profile=test".into(),
        }
    }

    fn row(engine: Engine, t: usize, median_ms: f64) -> BenchRow {
        BenchRow {
            engine,
            t,
            s: 4 * t,
            b: 32,
            mean_ms: median_ms,
            median_ms,
            p20_ms: median_ms,
            p80_ms: median_ms,
        }
    }

    fn report(rows: Vec<BenchRow>) -> BenchReport {
        BenchReport {
            rows,
            repeats: 5,
            environment: env(),
        }
    }

    #[test]
    fn default_plan_follows_the_sweep() {
        let plan = BenchPlan::default();
        assert_eq!(plan.t_values.first(), Some(&128));
        assert_eq!(plan.t_values.last(), Some(&2048));
        assert_eq!(plan.t_values.len(), 16);
        assert_eq!((plan.batch_size, plan.s_ratio), (32, 4));
        assert!(plan.repeats >= 20);
        assert!(plan.validate().is_ok());
        let bad = BenchPlan {
            repeats: 0,
            ..BenchPlan::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn random_batches_are_deterministic_and_bounded() {
        let a = generate_random_batch(2, 3, 12, 7);
        assert_eq!(a, generate_random_batch(2, 3, 12, 7));
        assert_ne!(a, generate_random_batch(2, 3, 12, 8));
        assert!(a.values().iter().all(|v| (-5.0..=5.0).contains(v)));
        let big = generate_random_batch(32, 128, 512, 0);
        assert_eq!(big.shape(), [32, 128, 512]);
        assert!(big
            .valid_lengths()
            .iter()
            .all(|l| (l.text, l.speech) == (128, 512)));
    }

    #[test]
    fn percentiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&xs, 0.5), 3.0);
        assert!((percentile(&xs, 0.2) - 1.8).abs() < 1e-12);
        assert!((percentile(&xs, 0.8) - 4.2).abs() < 1e-12);
        assert_eq!(percentile(&[2.5], 0.8), 2.5);
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let r = report(vec![
            row(Engine::Reference, 128, 2.0),
            row(Engine::Parallel, 128, 1.0),
        ]);
        let csv = emit_report(&r, ReportFormat::Csv).unwrap();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 3);
        assert_eq!(data[0], CSV_HEADER);
        assert!(data[1].starts_with("reference,128,512,32,2.000000"));
        assert!(csv.lines().any(|l| l == "# cpu: test cpu"));
    }

    #[test]
    fn markdown_pivots_engines_into_columns() {
        let r = report(vec![
            row(Engine::Reference, 128, 2.0),
            row(Engine::Parallel, 128, 1.0),
            row(Engine::Reference, 256, 8.0),
            row(Engine::Parallel, 256, 3.5),
        ]);
        let md = emit_report(&r, ReportFormat::Markdown).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| T | reference | parallel |");
        assert_eq!(lines[2], "| 128 | 2.000 | 1.000 |");
        assert_eq!(lines[3], "| 256 | 8.000 | 3.500 |");
        let grid: Vec<usize> = lines[2..4]
            .iter()
            .map(|l| l.matches('|').count() - 2)
            .collect();
        assert_eq!(grid, vec![2, 2]);
    }

    #[test]
    fn empty_report_is_an_error() {
        assert!(matches!(
            emit_report(&report(vec![]), ReportFormat::Csv),
            Err(BenchError::EmptyReport)
        ));
    }

    #[test]
    fn perfect_linear_fit() {
        let c = 3e-6;
        let rows = (1..=5)
            .map(|k| row(Engine::Reference, 128 * k, c * (128 * k * 512 * k) as f64))
            .collect();
        let fit = fit_scaling(&report(rows), Engine::Reference).unwrap();
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.slope - c).abs() < 1e-15);
        assert!(fit.intercept.abs() < 1e-9);
    }

    #[test]
    fn constant_time_fit() {
        let rows = (1..=5)
            .map(|k| row(Engine::Parallel, 128 * k, 0.7))
            .collect();
        let fit = fit_scaling(&report(rows), Engine::Parallel).unwrap();
        assert_eq!(fit.r_squared, 0.0);
        assert!(fit.slope.abs() < 1e-15);
    }

    #[test]
    fn fit_needs_four_points() {
        let rows = (1..=3)
            .map(|k| row(Engine::Reference, 128 * k, k as f64))
            .collect();
        assert!(matches!(
            fit_scaling(&report(rows), Engine::Reference),
            Err(BenchError::InsufficientPoints { found: 3, .. })
        ));
    }
}
