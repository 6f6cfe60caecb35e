//! Acceptance suite. Runs every criterion in order, prints one line each and
//! exits non-zero if any fails.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hashmem::backends::{
    build_backend, equivalence_check, random_op_log, Backend, BackendKind, HopscotchTable,
    SimBackend, SimOptions,
};
use hashmem::dram::{check_protocol, DramGeometry, DramTiming, PagePolicy, TraceEvent};
use hashmem::map::{HashConfig, HashMemMap, ProbeEngine};
use hashmem::pe::{encode_row, PeConfig};
use hashmem::rlu::{BatchPolicy, ProbeCommand, Rlu};
use hashmem::workload::{
    bucket_length_experiment, compute_speedup, ingest_wordlist, reports_to_csv, run_backend,
    BenchReport, DatasetSpec,
};
use hashmem::SlotRange;

type Verdict = Result<String, String>;

fn check(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let log = random_op_log(100_000, 20_000, 0xACCE);
    let options = SimOptions::default();
    let mut backends: Vec<Box<dyn Backend>> = BackendKind::ALL
        .iter()
        .map(|&k| build_backend(k, 20_000, &options))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let report = equivalence_check(&log, &mut backends).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if let Some(d) = report.divergence {
        return Err(format!("{} diverged at op {}: {:?} vs {:?}", d.backend, d.op_index, d.actual, d.expected));
    }
    check(
        elapsed < Duration::from_secs(30),
        format!("{} ops on 6 backends agree in {:.1}s (limit 30s)", report.ops, elapsed.as_secs_f64()),
    )
}

fn rlu(pe: PeConfig) -> Rlu {
    Rlu::new(DramGeometry::default(), DramTiming::default(), pe, PagePolicy::Closed, BatchPolicy::Serial).unwrap()
}

fn latency_scaling() -> Verdict {
    let mut store = hashmem::map::PageStore::new();
    let full: Vec<(u32, u32)> = (0..1024).map(|k| (k * 3 + 1, k)).collect();
    store.put(0, encode_row(&full, 1024).unwrap());
    let mut area = rlu(PeConfig::area_optimized());
    for p in [1u32, 64, 256, 1024] {
        let cmd = ProbeCommand { key: full[p as usize - 1].0, page_id: 0, range: SlotRange::new(0, 1024) };
        let r = area.execute_probe(&store, &cmd).unwrap();
        if r.pe_ticks != p as u64 || r.value() != Some(p - 1) {
            return Err(format!("area-optimized match at {p}: {} ticks", r.pe_ticks));
        }
    }
    let perf_cfg = PeConfig::perf_optimized();
    let expected = (perf_cfg.key_bits + perf_cfg.value_bits) as u64;
    let mut perf = rlu(perf_cfg);
    for (page, occ) in [(1u64, 1usize), (2, 64), (3, 256), (4, 1024)] {
        store.put(page, encode_row(&full[..occ], 1024).unwrap());
        let cmd = ProbeCommand { key: full[0].0, page_id: page, range: SlotRange::new(0, 1024) };
        let r = perf.execute_probe(&store, &cmd).unwrap();
        if r.pe_ticks != expected || expected != 64 {
            return Err(format!("perf-optimized at occupancy {occ}: {} ticks", r.pe_ticks));
        }
    }
    Ok("area ticks = match position for 1/64/256/1024; perf ticks = 64 at every occupancy".into())
}

struct Microbench {
    reports: Vec<BenchReport>,
    traces: Vec<(BackendKind, Vec<TraceEvent>)>,
    elapsed: Duration,
    mismatches: usize,
}

fn microbenchmark() -> Result<Microbench, String> {
    let start = Instant::now();
    let spec = DatasetSpec::default();
    let pairs = spec.generate().map_err(|e| e.to_string())?;
    let probes = spec.probes(&pairs).map_err(|e| e.to_string())?;
    let options = SimOptions { record_trace: true, ..SimOptions::default() };
    let mut reports = Vec::new();
    let mut traces = Vec::new();
    let mut mismatches = 0;
    for kind in [BackendKind::ConventionalSim, BackendKind::PimArea, BackendKind::PimPerf] {
        let out = run_backend(kind, &options, &pairs, &probes, 1).map_err(|e| e.to_string())?;
        mismatches += out.mismatches + (probes.len() - out.found);
        reports.push(out.report);
        traces.push((kind, out.trace));
    }
    Ok(Microbench { reports, traces, elapsed: start.elapsed(), mismatches })
}

fn ordering(mb: &Microbench) -> Verdict {
    let [conv, area, perf] = &mb.reports[..] else { unreachable!() };
    let area_speedup = compute_speedup(conv, area, false).map_err(|e| e.to_string())?.ratio;
    let perf_speedup = compute_speedup(conv, perf, false).map_err(|e| e.to_string())?.ratio;
    let detail = format!(
        "mean ns conventional {:.2} > pim-area {:.2} > pim-perf {:.2}; speedups {:.2}x / {:.2}x; {} probes, {} wrong; {:.1}s (limit 120s)",
        conv.mean_ns,
        area.mean_ns,
        perf.mean_ns,
        area_speedup,
        perf_speedup,
        perf.n_probes,
        mb.mismatches,
        mb.elapsed.as_secs_f64()
    );
    check(
        conv.mean_ns > area.mean_ns
            && area.mean_ns > perf.mean_ns
            && perf_speedup > area_speedup
            && perf.n_probes == 100_000
            && mb.mismatches == 0
            && mb.elapsed < Duration::from_secs(120),
        detail,
    )
}

fn bytes_on_bus() -> Verdict {
    let sizes = [1usize, 7, 8, 9, 100, 513, 1024];
    let options = SimOptions::default();
    let hash = HashConfig::new(sizes.len() as u64);
    for kind in [BackendKind::PimArea, BackendKind::PimPerf, BackendKind::ConventionalSim] {
        let mut b = SimBackend::new(kind, hash, &options).map_err(|e| e.to_string())?;
        let mut next = 0u32;
        let mut probe_keys = Vec::new();
        for (bucket, &size) in sizes.iter().enumerate() {
            let mut placed = 0;
            while placed < size {
                if b.map().bucket_of(next).unwrap() == bucket {
                    b.insert(next, next).map_err(|e| e.to_string())?;
                    if placed == size / 2 {
                        probe_keys.push(next);
                    }
                    placed += 1;
                }
                next += 1;
            }
        }
        for (bucket, &key) in probe_keys.iter().enumerate() {
            let before = b.stats().unwrap().bytes_on_bus;
            b.probe(key).map_err(|e| e.to_string())?;
            let moved = b.stats().unwrap().bytes_on_bus - before;
            let bucket_bytes = sizes[bucket] as u64 * 8;
            let expected = match kind {
                BackendKind::ConventionalSim => bucket_bytes.div_ceil(64) * 64,
                _ => 64,
            };
            if moved != expected {
                return Err(format!("{kind}: bucket of {} pairs moved {moved} bytes, expected {expected}", sizes[bucket]));
            }
        }
    }
    Ok(format!("PIM 64 B per probe; conventional ceil(8n/64)*64 for bucket sizes {sizes:?}"))
}

fn overflow_bookkeeping() -> Verdict {
    let mut map = HashMemMap::new(DramGeometry::default(), HashConfig::new(1)).map_err(|e| e.to_string())?;
    for k in 0..5_000u32 {
        map.insert(k, k ^ 0x5555).map_err(|e| e.to_string())?;
    }
    let chain = map.chain(0).len();
    let mut unit = rlu(PeConfig::perf_optimized());
    let mut found = 0;
    for k in 0..5_000u32 {
        let issue = ProbeEngine::now(&unit);
        if map.probe_with(k, &mut unit, issue).map_err(|e| e.to_string())?.value == Some(k ^ 0x5555) {
            found += 1;
        }
    }
    check(chain == 5 && found == 5_000, format!("chain of {chain} pages, {found}/5000 probes found"))
}

fn tombstones() -> Verdict {
    let geometry = DramGeometry { row_size_bytes: 256, ..DramGeometry::default() };
    let mut map = HashMemMap::new(geometry, HashConfig::new(16)).map_err(|e| e.to_string())?;
    let mut unit = rlu(PeConfig::area_optimized());
    let mut live: HashMap<u32, u32> = HashMap::new();
    let mut tomb = [0usize; 16];
    let mut rng = ChaCha8Rng::seed_from_u64(0x70B5);
    let mut deletes = 0;
    for i in 0..50_000 {
        let key = rng.gen_range(0..2_000u32);
        let bucket = map.bucket_of(key).unwrap();
        if rng.gen_bool(0.55) {
            let v: u32 = rng.gen();
            map.insert(key, v).map_err(|e| e.to_string())?;
            if live.insert(key, v).is_none() && tomb[bucket] > 0 {
                tomb[bucket] -= 1;
            }
        } else {
            let present = map.delete(key).map_err(|e| e.to_string())?;
            if present != live.remove(&key).is_some() {
                return Err(format!("op {i}: delete status mismatch for {key}"));
            }
            if present {
                tomb[bucket] += 1;
                deletes += 1;
                let issue = ProbeEngine::now(&unit);
                if map.probe_with(key, &mut unit, issue).map_err(|e| e.to_string())?.value.is_some() {
                    return Err(format!("op {i}: deleted key {key} still found"));
                }
            }
        }
        let expected = live.len() + tomb.iter().sum::<usize>();
        if map.occupied_slots() != expected {
            return Err(format!("op {i}: {} occupied slots, oracle {expected}", map.occupied_slots()));
        }
    }
    Ok(format!("{deletes} deletes all probe NotFound; occupied slots track live + tombstones over 50000 ops"))
}

fn protocol(mb: &Microbench) -> Verdict {
    let timing = DramTiming::default();
    let mut total = 0;
    for (kind, trace) in &mb.traces {
        if trace.is_empty() {
            return Err(format!("{kind}: empty trace"));
        }
        let v = check_protocol(trace, &timing);
        if let Some(first) = v.first() {
            return Err(format!("{kind}: {} violations, first {:?}", v.len(), first.rule));
        }
        total += trace.len();
    }
    Ok(format!("{total} events, 0 violations"))
}

/// Deterministic pronounceable pseudo-words.
fn word_list(n: usize) -> String {
    const ONSETS: &[&str] = &["", "b", "br", "c", "ch", "d", "f", "g", "gr", "h", "k", "l", "m", "n", "p", "pr", "qu", "r", "s", "sh", "st", "t", "th", "tr", "v", "w", "z"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "ou", "y"];
    const CODAS: &[&str] = &["", "n", "r", "s", "t", "ng", "ck", "l", "m", "st", "nd"];
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1C7);
    let mut seen = HashSet::new();
    let mut out = String::new();
    while seen.len() < n {
        let syllables = rng.gen_range(1..=4);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
            w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
            w.push_str(CODAS[rng.gen_range(0..CODAS.len())]);
        }
        if seen.insert(w.clone()) {
            out.push_str(&w);
            out.push('\n');
        }
    }
    out
}

fn bucket_variance() -> Verdict {
    let text = word_list(120_000);
    let keys = ingest_wordlist(&text, 350_000);
    if keys.len() < 100_000 {
        return Err(format!("only {} distinct words", keys.len()));
    }
    let h = bucket_length_experiment(&keys, 4096, DramGeometry::default()).map_err(|e| e.to_string())?;
    let ratio = h.max as f64 / h.mean;
    check(
        ratio >= 1.2 && h.coefficient_of_variation > 0.05,
        format!("{} words into 4096 buckets: max/mean {ratio:.3} (>= 1.2), CV {:.4} (> 0.05)", keys.len(), h.coefficient_of_variation),
    )
}

fn hopscotch_integrity() -> Verdict {
    let capacity = 1 << 17;
    let target = (capacity as f64 * 0.7) as usize;
    let mut table = HopscotchTable::new(capacity).map_err(|e| e.to_string())?;
    let mut oracle: HashMap<u32, u32> = HashMap::new();
    let mut keys: Vec<u32> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4095);
    while oracle.len() < target {
        let k = rng.gen_range(0..u32::MAX - 1);
        if oracle.insert(k, k).is_none() {
            table.insert(k, k).map_err(|e| e.to_string())?;
            keys.push(k);
        }
    }
    for i in 0..100_000 {
        let grow = table.load_factor() < 0.7 || (table.load_factor() <= 0.7 + 1e-3 && rng.gen_bool(0.5));
        if grow {
            let k = rng.gen_range(0..u32::MAX - 1);
            let v = rng.gen();
            table.insert(k, v).map_err(|e| format!("mutation {i}: {e}"))?;
            if oracle.insert(k, v).is_none() {
                keys.push(k);
            }
        } else {
            let idx = rng.gen_range(0..keys.len());
            let k = keys.swap_remove(idx);
            oracle.remove(&k);
            if !table.remove(k).map_err(|e| e.to_string())? {
                return Err(format!("mutation {i}: live key {k} not removed"));
            }
        }
    }
    table.check_invariant()?;
    let missing = oracle.iter().filter(|(k, v)| table.get(**k).ok().flatten() != Some(**v)).count();
    check(
        missing == 0 && table.len() == oracle.len(),
        format!("load {:.3} after 100000 mutations, invariant holds, {missing} of {} live keys missing", table.load_factor(), oracle.len()),
    )
}

fn determinism(first: &Microbench) -> Verdict {
    let second = microbenchmark()?;
    let a = reports_to_csv(&first.reports).map_err(|e| e.to_string())?;
    let b = reports_to_csv(&second.reports).map_err(|e| e.to_string())?;
    check(a == b, format!("two runs produce {} identical CSV bytes", a.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, v: Verdict| {
        match v {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    };
    report(1, "oracle equivalence", oracle_equivalence());
    report(2, "latency scaling laws", latency_scaling());
    let mb = microbenchmark();
    match &mb {
        Ok(mb) => report(3, "microbenchmark ordering", ordering(mb)),
        Err(e) => report(3, "microbenchmark ordering", Err(e.clone())),
    }
    report(4, "bytes on bus", bytes_on_bus());
    report(5, "overflow bookkeeping", overflow_bookkeeping());
    report(6, "tombstones", tombstones());
    match &mb {
        Ok(mb) => report(7, "DRAM protocol", protocol(mb)),
        Err(e) => report(7, "DRAM protocol", Err(e.clone())),
    }
    report(8, "bucket-length variance", bucket_variance());
    report(9, "hopscotch integrity", hopscotch_integrity());
    match &mb {
        Ok(mb) => report(10, "determinism", determinism(mb)),
        Err(e) => report(10, "determinism", Err(e.clone())),
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
