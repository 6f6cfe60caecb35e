//! Workloads and measurement: datasets, word lists, the probe benchmark and
//! its reports.

mod bench;
mod dataset;
mod report;
mod wordlist;

pub use bench::{bucket_length_experiment, run_backend, run_benchmark, BenchOutcome, DEFAULT_REPS};
pub use dataset::{
    decode_dataset, encode_dataset, generate_dataset, probe_seed, read_dataset, select_probe_keys,
    select_probes, write_dataset, DatasetSpec, DATASET_MAGIC, DATASET_VERSION, HEADER_BYTES, KEY_SPACE,
};
pub use report::{
    compute_speedup, parse_reports, parse_reports_csv, parse_reports_json, reports_to_csv,
    reports_to_json, write_reports_csv, BenchReport, LatencySummary, Speedup, REPORT_CSV_HEADER,
};
pub use wordlist::{ingest_wordlist, ingest_wordlist_file, word_hash, DEFAULT_WORD_COUNT};
