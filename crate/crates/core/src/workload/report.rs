//! Benchmark reports: CSV (one row per backend) and JSON with the same fields.

use serde::{Deserialize, Serialize};

use crate::backends::{BackendKind, TimeDomain};
use crate::error::{Error, Result};

pub const REPORT_CSV_HEADER: &str =
    "backend,n_probes,mean_ns,median_ns,p99_ns,total_ns,activations,bytes_on_bus";

/// Per-probe latency summary for one backend. Simulated backends report
/// modeled nanoseconds and their command counters; software backends report
/// wall-clock nanoseconds and leave the counters empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub backend: BackendKind,
    pub n_probes: u64,
    pub mean_ns: f64,
    pub median_ns: f64,
    pub p99_ns: f64,
    pub total_ns: f64,
    pub activations: Option<u64>,
    pub bytes_on_bus: Option<u64>,
}

impl BenchReport {
    pub fn time_domain(&self) -> TimeDomain {
        self.backend.time_domain()
    }

    /// Summarizes per-probe latencies; `total_ns` is supplied separately
    /// since overlapping probes make it differ from the sum.
    pub fn from_latencies(backend: BackendKind, latencies: &[f64], total_ns: f64) -> Self {
        let stats = LatencySummary::new(latencies);
        Self {
            backend,
            n_probes: latencies.len() as u64,
            mean_ns: stats.mean,
            median_ns: stats.median,
            p99_ns: stats.p99,
            total_ns,
            activations: None,
            bytes_on_bus: None,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mean_ns", self.mean_ns),
            ("median_ns", self.median_ns),
            ("p99_ns", self.p99_ns),
            ("total_ns", self.total_ns),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Dataset(format!("{name} = {v} is not a non-negative number")));
            }
        }
        if self.backend.is_simulated() != self.activations.is_some()
            || self.backend.is_simulated() != self.bytes_on_bus.is_some()
        {
            return Err(Error::Dataset(format!(
                "{}: counters must be present exactly for simulated backends",
                self.backend
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencySummary {
    pub mean: f64,
    /// Midpoint of the two middle values for even counts.
    pub median: f64,
    /// Nearest rank: the `ceil(0.99 n)`-th smallest value.
    pub p99: f64,
}

impl LatencySummary {
    pub fn new(latencies: &[f64]) -> Self {
        if latencies.is_empty() {
            return Self { mean: 0.0, median: 0.0, p99: 0.0 };
        }
        let mut v = latencies.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
        Self {
            mean: v.iter().sum::<f64>() / n as f64,
            median,
            p99: v[rank - 1],
        }
    }
}

pub fn write_reports_csv<W: std::io::Write>(out: W, reports: &[BenchReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if reports.is_empty() {
        w.write_record(REPORT_CSV_HEADER.split(','))?;
    }
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn reports_to_csv(reports: &[BenchReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_reports_csv(&mut buf, reports)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn reports_to_json(reports: &[BenchReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)? + "\n")
}

pub fn parse_reports_csv(text: &str) -> Result<Vec<BenchReport>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<&str> = r.headers()?.iter().collect();
    if header.join(",") != REPORT_CSV_HEADER {
        return Err(Error::parse(1, format!("expected header `{REPORT_CSV_HEADER}`")));
    }
    let reports = r.deserialize().collect::<std::result::Result<Vec<BenchReport>, _>>()?;
    reports.iter().try_for_each(BenchReport::validate)?;
    Ok(reports)
}

/// Accepts a JSON array of reports or a single report object.
pub fn parse_reports_json(text: &str) -> Result<Vec<BenchReport>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<BenchReport>),
        One(BenchReport),
    }
    let reports = match serde_json::from_str(text)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(r) => vec![r],
    };
    reports.iter().try_for_each(BenchReport::validate)?;
    Ok(reports)
}

/// JSON when the first non-blank character opens an array or object, CSV otherwise.
pub fn parse_reports(text: &str) -> Result<Vec<BenchReport>> {
    match text.trim_start().chars().next() {
        Some('[') | Some('{') => parse_reports_json(text),
        _ => parse_reports_csv(text),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub ratio: f64,
    /// Set when the two reports come from different time domains; such
    /// ratios are indicative only.
    pub cross_domain: bool,
}

/// Baseline mean per-probe latency over the subject's.
pub fn compute_speedup(baseline: &BenchReport, subject: &BenchReport, allow_cross_domain: bool) -> Result<Speedup> {
    let cross_domain = baseline.time_domain() != subject.time_domain();
    if cross_domain && !allow_cross_domain {
        return Err(Error::Usage(format!(
            "{} and {} report different time domains; pass --allow-cross-domain to compare anyway",
            baseline.backend, subject.backend
        )));
    }
    if baseline.n_probes != subject.n_probes {
        return Err(Error::Usage(format!(
            "probe counts differ ({} vs {})",
            baseline.n_probes, subject.n_probes
        )));
    }
    if subject.mean_ns <= 0.0 {
        return Err(Error::Usage("subject mean latency is zero".into()));
    }
    Ok(Speedup {
        ratio: baseline.mean_ns / subject.mean_ns,
        cross_domain,
    })
}
