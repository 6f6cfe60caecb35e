use std::collections::HashMap;
use std::hint::black_box;
use std::time::Instant;

use crate::backends::{Backend, BackendKind, SimOptions};
use crate::dram::TraceEvent;
use crate::error::Result;
use crate::map::{BucketHistogram, HashConfig, HashMemMap};
use crate::dram::DramGeometry;

use super::report::BenchReport;

/// Probes per timed chunk on software backends.
const WALL_CHUNK: usize = 64;
pub const DEFAULT_REPS: usize = 5;

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub report: BenchReport,
    /// Probes that returned the dataset's value for their key.
    pub found: usize,
    /// Probes whose result disagreed with the dataset (a wrong value, a miss
    /// on a present key or a hit on an absent one).
    pub mismatches: usize,
    /// Command trace of the probe phase, when the backend records one.
    pub trace: Vec<TraceEvent>,
}

/// Loads `pairs` into `backend` and probes every key of `probes`.
///
/// Simulated backends are measured once: per-probe latency is the modeled
/// time of its chain walk, `total_ns` the simulated span of the probe phase.
/// Software backends repeat the probe loop `reps` times under a monotonic
/// clock; the repetition with the median total is reported, its per-probe
/// figures taken from chunk averages.
pub fn run_benchmark(
    backend: &mut dyn Backend,
    pairs: &[(u32, u32)],
    probes: &[u32],
    reps: usize,
) -> Result<BenchOutcome> {
    for &(k, v) in pairs {
        backend.insert(k, v)?;
    }
    let expected: HashMap<u32, u32> = pairs.iter().copied().collect();
    let kind = backend.kind();

    let (mut report, values) = if kind.is_simulated() {
        simulated(backend, probes)?
    } else {
        wall_clock(backend, probes, reps.max(1))?
    };

    let mut found = 0;
    let mut mismatches = 0;
    for (k, v) in probes.iter().zip(&values) {
        let want = expected.get(k).copied();
        if *v == want {
            found += usize::from(v.is_some());
        } else {
            mismatches += 1;
        }
    }
    if let Some(stats) = backend.stats() {
        report.activations = Some(stats.activations);
        report.bytes_on_bus = Some(stats.bytes_on_bus);
    }
    Ok(BenchOutcome {
        report,
        found,
        mismatches,
        trace: backend.take_trace(),
    })
}

fn simulated(backend: &mut dyn Backend, probes: &[u32]) -> Result<(BenchReport, Vec<Option<u32>>)> {
    // drop anything recorded while loading
    backend.take_trace();
    backend.begin_batch();
    let t0 = backend.sim_clock().unwrap_or(0.0);
    let mut latencies = Vec::with_capacity(probes.len());
    let mut values = Vec::with_capacity(probes.len());
    for &k in probes {
        let p = backend.probe(k)?;
        latencies.push(p.latency_ns.unwrap_or(0.0));
        values.push(p.value);
    }
    let total = backend.sim_clock().unwrap_or(0.0) - t0;
    Ok((BenchReport::from_latencies(backend.kind(), &latencies, total), values))
}

fn wall_clock(backend: &mut dyn Backend, probes: &[u32], reps: usize) -> Result<(BenchReport, Vec<Option<u32>>)> {
    let mut runs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(reps);
    let mut values = Vec::with_capacity(probes.len());
    for rep in 0..reps {
        let mut chunk_means = Vec::with_capacity(probes.len().div_ceil(WALL_CHUNK));
        let mut total = 0.0;
        for chunk in probes.chunks(WALL_CHUNK) {
            let start = Instant::now();
            for &k in chunk {
                let v = black_box(backend.probe(black_box(k))?.value);
                if rep == 0 {
                    values.push(v);
                }
            }
            let ns = start.elapsed().as_nanos() as f64;
            total += ns;
            chunk_means.extend(std::iter::repeat_n(ns / chunk.len() as f64, chunk.len()));
        }
        runs.push((total, chunk_means));
    }
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (total, latencies) = &runs[runs.len() / 2];
    let mut report = BenchReport::from_latencies(backend.kind(), latencies, *total);
    if !probes.is_empty() {
        report.mean_ns = total / probes.len() as f64;
    }
    Ok((report, values))
}

/// Convenience wrapper: builds the backend, then runs [`run_benchmark`].
pub fn run_backend(
    kind: BackendKind,
    options: &SimOptions,
    pairs: &[(u32, u32)],
    probes: &[u32],
    reps: usize,
) -> Result<BenchOutcome> {
    let mut backend = crate::backends::build_backend(kind, pairs.len() as u64, options)?;
    run_benchmark(backend.as_mut(), pairs, probes, reps)
}

/// Bucket lengths after hashing `keys` into `bucket_count` buckets.
pub fn bucket_length_experiment(keys: &[u32], bucket_count: u64, geometry: DramGeometry) -> Result<BucketHistogram> {
    let mut map = HashMemMap::new(geometry, HashConfig::new(bucket_count))?;
    for (i, &k) in keys.iter().enumerate() {
        map.insert(k, i as u32)?;
    }
    Ok(map.bucket_histogram())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::build_backend;
    use crate::dram::check_protocol;
    use crate::map::BucketHistogram;
    use crate::rlu::BatchPolicy;
    use crate::workload::{generate_dataset, select_probes};

    #[test]
    fn zero_probes() {
        let pairs = generate_dataset(100, 1).unwrap();
        for kind in BackendKind::ALL {
            let out = run_backend(kind, &SimOptions::default(), &pairs, &[], 3).unwrap();
            assert_eq!(out.report.n_probes, 0);
            assert_eq!(out.report.total_ns, 0.0);
            assert_eq!(out.report.mean_ns, 0.0);
        }
    }

    #[test]
    fn all_probes_found_and_deterministic() {
        let pairs = generate_dataset(20_000, 2).unwrap();
        let probes = select_probes(&pairs, 0.1, 3).unwrap();
        let options = SimOptions { record_trace: true, ..SimOptions::default() };
        for kind in BackendKind::ALL {
            let out = run_backend(kind, &options, &pairs, &probes, 2).unwrap();
            assert_eq!(out.found, probes.len(), "{kind}");
            assert_eq!(out.mismatches, 0);
            assert_eq!(out.report.n_probes, probes.len() as u64);
            if kind.is_simulated() {
                assert!(out.report.activations.unwrap() >= probes.len() as u64);
                assert!(check_protocol(&out.trace, &options.config.timing).is_empty());
                let again = run_backend(kind, &options, &pairs, &probes, 1).unwrap();
                assert_eq!(again.report, out.report);
            }
        }
    }

    #[test]
    fn serial_total_is_sum_and_parallel_is_shorter() {
        let pairs = generate_dataset(20_000, 4).unwrap();
        let probes = select_probes(&pairs, 0.1, 5).unwrap();
        let serial = run_backend(BackendKind::PimPerf, &SimOptions::default(), &pairs, &probes, 1).unwrap();
        let r = &serial.report;
        assert!((r.total_ns - r.mean_ns * r.n_probes as f64).abs() < 1e-6 * r.total_ns);

        let options = SimOptions { batch_policy: BatchPolicy::BankParallel, ..SimOptions::default() };
        let parallel = run_backend(BackendKind::PimPerf, &options, &pairs, &probes, 1).unwrap();
        assert!(parallel.report.total_ns < serial.report.total_ns / 4.0);
        assert_eq!(parallel.report.mean_ns, serial.report.mean_ns);
    }

    #[test]
    fn perf_ticks_identical_across_single_page_buckets() {
        let pairs = generate_dataset(5_000, 6).unwrap();
        let mut b = build_backend(BackendKind::PimPerf, 5_000, &SimOptions::default()).unwrap();
        for &(k, v) in &pairs {
            b.insert(k, v).unwrap();
        }
        let mut latencies: Vec<f64> = pairs.iter().take(500).map(|p| b.probe(p.0).unwrap().latency_ns.unwrap()).collect();
        latencies.dedup();
        assert_eq!(latencies.len(), 1);
    }

    #[test]
    fn misses_counted_as_not_found() {
        let pairs = generate_dataset(1_000, 7).unwrap();
        let probes = crate::workload::select_probe_keys(&pairs, 1.0, 0.25, 8).unwrap();
        let out = run_backend(BackendKind::PimArea, &SimOptions::default(), &pairs, &probes, 1).unwrap();
        assert_eq!(out.found, 750);
        assert_eq!(out.mismatches, 0);
    }

    #[test]
    fn bucket_experiment() {
        let h = bucket_length_experiment(&[], 8, DramGeometry::default()).unwrap();
        assert_eq!(h, BucketHistogram::from_lengths(vec![0; 8]));
        let h = bucket_length_experiment(&[1, 2, 3, 4], 1, DramGeometry::default()).unwrap();
        assert_eq!(h.lengths, vec![4]);
    }
}
