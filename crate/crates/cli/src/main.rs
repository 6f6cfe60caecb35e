use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hashmem::backends::{BackendKind, SimOptions};
use hashmem::dram::{write_trace_csv, PagePolicy, SimConfig};
use hashmem::rlu::BatchPolicy;
use hashmem::workload::{
    bucket_length_experiment, compute_speedup, generate_dataset, ingest_wordlist_file,
    parse_reports, read_dataset, reports_to_csv, reports_to_json, run_backend, select_probe_keys,
    write_dataset, BenchOutcome, BenchReport, DEFAULT_REPS, DEFAULT_WORD_COUNT,
};

#[derive(Parser)]
#[command(name = "hashmem", version, about = "Processing-in-memory hashmap simulator and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random key/value dataset.
    Generate {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a dataset into one or more backends and probe a sample of its keys.
    /// Wall-clock backends report the median of five repetitions.
    Run(RunArgs),
    /// Like `run`, repeated: wall-clock backends report the median repetition,
    /// simulated backends are checked for identical results.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = DEFAULT_REPS)]
        reps: usize,
    },
    /// Hash a word list into buckets and write the bucket lengths as CSV.
    AnalyzeBuckets {
        #[arg(long)]
        wordlist: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WORD_COUNT)]
        n_words: usize,
        #[arg(long, default_value_t = 4096)]
        buckets: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Speedup of a subject report over a baseline (baseline mean / subject mean).
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        subject: PathBuf,
        /// Allow comparing simulated against wall-clock reports.
        #[arg(long)]
        allow_cross_domain: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Serial,
    BankParallel,
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated: pim-area, pim-perf, conventional, chained, tree, hopscotch.
    #[arg(long, value_delimiter = ',', required = true)]
    backend: Vec<BackendKind>,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    probe_fraction: f64,
    /// Share of probes replaced by keys absent from the dataset.
    #[arg(long, default_value_t = 0.0)]
    miss_fraction: f64,
    /// Seed for probe selection.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// DRAM configuration file; built-in DDR4-3200 defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    report: ReportFormat,
    #[arg(long, value_enum, default_value_t = Policy::Serial)]
    policy: Policy,
    /// Single-tick content-addressable match (pim-perf only; ignored by other backends).
    #[arg(long)]
    cam_mode: bool,
    /// Leave rows open between probes.
    #[arg(long)]
    open_page: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the DRAM command trace of a single simulated backend as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

impl RunArgs {
    fn options(&self) -> Result<SimOptions> {
        Ok(SimOptions {
            config: load_config(self.config.as_deref())?,
            cam_mode: self.cam_mode,
            page_policy: if self.open_page { PagePolicy::Open } else { PagePolicy::Closed },
            batch_policy: match self.policy {
                Policy::Serial => BatchPolicy::Serial,
                Policy::BankParallel => BatchPolicy::BankParallel,
            },
            record_trace: self.trace.is_some(),
        })
    }

    fn execute(&self, reps: usize, verify_repeats: bool) -> Result<()> {
        if self.trace.is_some() {
            ensure!(
                self.backend.len() == 1 && self.backend[0].is_simulated(),
                "--trace needs exactly one simulated backend"
            );
        }
        let options = self.options()?;
        let pairs = read_dataset(&self.dataset)
            .with_context(|| format!("reading dataset {}", self.dataset.display()))?;
        let probes = select_probe_keys(&pairs, self.probe_fraction, self.miss_fraction, self.seed)?;

        let mut reports = Vec::with_capacity(self.backend.len());
        for &kind in &self.backend {
            let out = measure(kind, &options, &pairs, &probes, reps, verify_repeats)?;
            if out.mismatches > 0 {
                bail!("{kind}: {} probe results disagree with the dataset", out.mismatches);
            }
            if let Some(path) = &self.trace {
                let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
                write_trace_csv(std::io::BufWriter::new(file), &out.trace)?;
            }
            reports.push(out.report);
        }
        emit(&reports, self.report, self.out.as_deref())
    }
}

fn measure(
    kind: BackendKind,
    options: &SimOptions,
    pairs: &[(u32, u32)],
    probes: &[u32],
    reps: usize,
    verify_repeats: bool,
) -> Result<BenchOutcome> {
    let first = run_backend(kind, options, pairs, probes, reps)?;
    if verify_repeats && kind.is_simulated() {
        for _ in 1..reps {
            let again = run_backend(kind, options, pairs, probes, 1)?;
            ensure!(again.report == first.report, "{kind}: repeated simulation gave a different report");
        }
    }
    Ok(first)
}

fn emit(reports: &[BenchReport], format: ReportFormat, out: Option<&Path>) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => reports_to_csv(reports)?,
        ReportFormat::Json => reports_to_json(reports)?,
    };
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_single_report(path: &Path) -> Result<BenchReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut reports = parse_reports(&text).with_context(|| format!("parsing {}", path.display()))?;
    ensure!(
        reports.len() == 1,
        "{} holds {} reports; compare needs exactly one",
        path.display(),
        reports.len()
    );
    Ok(reports.remove(0))
}

fn analyze_buckets(wordlist: &Path, n_words: usize, buckets: u64, out: &Path, config: Option<&Path>) -> Result<()> {
    let config = load_config(config)?;
    let keys = ingest_wordlist_file(wordlist, n_words)
        .with_context(|| format!("reading word list {}", wordlist.display()))?;
    let h = bucket_length_experiment(&keys, buckets, config.geometry)?;
    let mut csv = String::from("bucket,length\n");
    for (b, len) in h.lengths.iter().enumerate() {
        csv.push_str(&format!("{b},{len}\n"));
    }
    fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    let ratio = if h.mean > 0.0 { h.max as f64 / h.mean } else { 0.0 };
    println!(
        "words={} buckets={buckets} mean={:.3} max={} max_over_mean={ratio:.3} cv={:.4}",
        keys.len(),
        h.mean,
        h.max,
        h.coefficient_of_variation
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { n, seed, out } => {
            let pairs = generate_dataset(n, seed)?;
            write_dataset(&out, &pairs).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Run(args) => args.execute(DEFAULT_REPS, false)?,
        Command::Bench { run, reps } => {
            ensure!(reps >= 1, "--reps must be at least 1");
            run.execute(reps, true)?
        }
        Command::AnalyzeBuckets { wordlist, n_words, buckets, out, config } => {
            analyze_buckets(&wordlist, n_words, buckets, &out, config.as_deref())?
        }
        Command::Compare { baseline, subject, allow_cross_domain } => {
            let b = read_single_report(&baseline)?;
            let s = read_single_report(&subject)?;
            let speedup = compute_speedup(&b, &s, allow_cross_domain)?;
            print!("speedup {:.4}x ({} over {})", speedup.ratio, s.backend, b.backend);
            if speedup.cross_domain {
                print!(" [indicative only: simulated and wall-clock times are not comparable]");
            }
            println!();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
