//! Command-line front end: configuration, record cache, report stream and
//! the pipelines behind the `verify`, `scan`, `kolyvagin` and `cache-gc`
//! verbs.

pub mod cache;
pub mod config;
pub mod report;
pub mod run;

pub use cache::Cache;
pub use config::{validate_config, FieldSpec, Mode, OutputFormat, RunConfig};
pub use report::Record;
pub use run::Runner;

use crate::par::ExecMode;
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "starkgras", version, about = "Index formulas, Stark units and derived classes for real abelian fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class-number formula, index formula, regulator and Selmer checks.
    Verify(RunArgs),
    /// Fields in a discriminant range whose class number is divisible by p.
    Scan(RunArgs),
    /// Derived classes at every admissible level, with their local conditions.
    Kolyvagin(RunArgs),
    /// Remove corrupt, stale and temporary cache files.
    CacheGc(CacheArgs),
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    #[arg(long, env = config::CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Config file; flags override its values.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Fields: `d` for Q(sqrt d), `base:twist` for Q(sqrt base, sqrt twist).
    #[arg(long = "field", value_delimiter = ',')]
    pub fields: Vec<FieldSpec>,
    /// Scan range `lo..hi` (inclusive).
    #[arg(long, value_parser = parse_range)]
    pub range: Option<(i64, i64)>,
    /// Scan Q(sqrt base, sqrt d) instead of Q(sqrt d).
    #[arg(long)]
    pub base: Option<i64>,
    #[arg(long, short, value_delimiter = ',')]
    pub p: Vec<u64>,
    #[arg(long, short)]
    pub m: Option<u32>,
    #[arg(long)]
    pub digits: Option<u32>,
    /// Finite primes of S.
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<u64>>,
    /// Search bound for Kolyvagin primes.
    #[arg(long)]
    pub q_bound: Option<u64>,
    #[arg(long)]
    pub minkowski_cap: Option<u64>,
    #[arg(long)]
    pub prime_bound: Option<u64>,
    #[arg(long)]
    pub level_cap: Option<u64>,
    #[arg(long, env = config::CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file; standard output when absent or `-`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Run every job on the calling thread.
    #[arg(long)]
    pub sequential: bool,
    /// Print timings and cache counters to standard error.
    #[arg(long)]
    pub stats: bool,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once("..").ok_or("expected lo..hi")?;
    let int = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((int(a)?, int(b)?))
}

impl RunArgs {
    /// Defaults, then the config file, then the flags.
    pub fn to_config(&self, mode: Mode) -> crate::Result<RunConfig> {
        let mut cfg = RunConfig::new(mode);
        if let Some(path) = &self.config {
            cfg.apply_file(&config::read_config(path)?);
            // the verb decides the mode
            cfg.mode = mode;
        }
        if !self.fields.is_empty() {
            cfg.fields = self.fields.clone();
        }
        if let Some((lo, hi)) = self.range {
            cfg.scan = Some(config::ScanRange { lo, hi, base: self.base });
        } else if let (Some(b), Some(r)) = (self.base, cfg.scan.as_mut()) {
            r.base = Some(b);
        }
        if !self.p.is_empty() {
            cfg.p = self.p.clone();
        }
        let set = |slot: &mut u64, v: Option<u64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.q_bound, self.q_bound);
        set(&mut cfg.caps.minkowski, self.minkowski_cap);
        set(&mut cfg.caps.prime_bound, self.prime_bound);
        set(&mut cfg.caps.level_cap, self.level_cap);
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(d) = self.digits {
            cfg.digits = d;
        }
        if self.s.is_some() {
            cfg.s = self.s.clone();
        }
        if self.t.is_some() {
            cfg.t = self.t.clone();
        }
        if self.cache_dir.is_some() {
            cfg.cache_dir = self.cache_dir.clone();
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(o) = &self.output {
            cfg.output = (o.as_os_str() != "-").then(|| o.clone());
        }
        Ok(cfg)
    }
}

fn emit(cfg: &RunConfig, records: &[Record]) -> std::io::Result<()> {
    let mut out: Box<dyn Write> = match &cfg.output {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match cfg.format {
        OutputFormat::Jsonl => report::write_jsonl(&mut out, records),
        OutputFormat::Table => report::write_table(&mut out, records),
    }
}

/// Runs one invocation and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (mode, args) = match cli.command {
        Command::Verify(a) => (Mode::Verify, a),
        Command::Scan(a) => (Mode::Scan, a),
        Command::Kolyvagin(a) => (Mode::Kolyvagin, a),
        Command::CacheGc(a) => return cache_gc(a),
    };
    let start = Instant::now();
    let cfg = match args.to_config(mode) {
        Ok(c) => c,
        Err(e) => {
            let records = vec![Record::error(None, None, "config", &e)];
            let records = [records.clone(), vec![report::summary(&records)]].concat();
            let _ = emit(&RunConfig::new(mode), &records);
            return report::exit_code(&records);
        }
    };
    let cache = if args.no_cache {
        None
    } else {
        match Cache::open(&cfg.resolved_cache_dir()) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!("running without a cache: {e}");
                None
            }
        }
    };
    let exec = if args.sequential { ExecMode::Sequential } else { ExecMode::default() };
    let runner = Runner {
        cache: cache.as_ref(),
        exec,
    };
    let records = runner.run(&cfg);
    if let Err(e) = emit(&cfg, &records) {
        eprintln!("error writing report: {e}");
        return 1;
    }
    if args.stats {
        let stats = serde_json::json!({
            "record": "stats",
            "elapsed_ms": start.elapsed().as_millis() as u64,
            "cache": cache.as_ref().map(|c| c.stats()),
        });
        eprintln!("{stats}");
    }
    report::exit_code(&records)
}

fn cache_gc(args: CacheArgs) -> i32 {
    let dir = args.cache_dir.unwrap_or_else(|| PathBuf::from(config::DEFAULT_CACHE_DIR));
    let result = Cache::open(&dir).and_then(|c| c.gc());
    let mut records = match result {
        Ok(r) => vec![Record::CacheGc {
            dir: dir.display().to_string(),
            kept: r.kept,
            removed: r.removed,
        }],
        Err(e) => vec![Record::error(None, None, "cache-gc", &e)],
    };
    records.push(report::summary(&records));
    let code = report::exit_code(&records);
    let mut out = std::io::stdout().lock();
    match report::write_jsonl(&mut out, &records) {
        Ok(()) => code,
        Err(_) => 1,
    }
}
