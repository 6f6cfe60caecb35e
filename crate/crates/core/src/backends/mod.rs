//! One interface over the simulated and software hashmaps.
//!
//! Simulated backends ([`BackendKind::PimArea`], [`BackendKind::PimPerf`],
//! [`BackendKind::ConventionalSim`]) share a [`HashMemMap`] layout and differ in
//! the engine that executes probes. They report modeled nanoseconds. Software
//! backends run natively and are timed with a wall clock by the benchmark
//! harness.

mod conventional;
mod hopscotch;
mod soft;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dram::{PagePolicy, SimConfig, TraceEvent};
use crate::error::{Error, Result};
use crate::map::{HashConfig, HashMemMap, InsertStatus, ProbeEngine};
use crate::pe::{PeConfig, EMPTY_KEY};
use crate::rlu::{BatchPolicy, Rlu, RluStats};

pub use conventional::{bytes_on_bus, conventional_probe_cost, ConventionalEngine};
pub use hopscotch::{HopscotchMap, HopscotchTable, DEFAULT_NEIGHBORHOOD};
pub use soft::{ChainedMap, TreeMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackendKind {
    #[serde(rename = "pim-area")]
    PimArea,
    #[serde(rename = "pim-perf")]
    PimPerf,
    #[serde(rename = "conventional")]
    ConventionalSim,
    #[serde(rename = "chained")]
    SoftChained,
    #[serde(rename = "tree")]
    SoftTree,
    #[serde(rename = "hopscotch")]
    SoftHopscotch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeDomain {
    Simulated,
    WallClock,
}

impl BackendKind {
    pub const ALL: [BackendKind; 6] = [
        BackendKind::PimArea,
        BackendKind::PimPerf,
        BackendKind::ConventionalSim,
        BackendKind::SoftChained,
        BackendKind::SoftTree,
        BackendKind::SoftHopscotch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::PimArea => "pim-area",
            BackendKind::PimPerf => "pim-perf",
            BackendKind::ConventionalSim => "conventional",
            BackendKind::SoftChained => "chained",
            BackendKind::SoftTree => "tree",
            BackendKind::SoftHopscotch => "hopscotch",
        }
    }

    pub fn is_simulated(self) -> bool {
        self.time_domain() == TimeDomain::Simulated
    }

    pub fn time_domain(self) -> TimeDomain {
        match self {
            BackendKind::PimArea | BackendKind::PimPerf | BackendKind::ConventionalSim => {
                TimeDomain::Simulated
            }
            _ => TimeDomain::WallClock,
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BackendKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown backend `{s}`")))
    }
}

/// Result of one probe. `latency_ns` is set by simulated backends only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub value: Option<u32>,
    pub latency_ns: Option<f64>,
}

pub trait Backend {
    fn kind(&self) -> BackendKind;
    fn insert(&mut self, key: u32, value: u32) -> Result<InsertStatus>;
    fn probe(&mut self, key: u32) -> Result<Probe>;
    /// Returns whether the key was present.
    fn delete(&mut self, key: u32) -> Result<bool>;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Marks the start of a group of independent probes. Under a bank-parallel
    /// policy every probe of the group may start at this instant.
    fn begin_batch(&mut self) {}

    /// Simulated time of the latest completed command.
    fn sim_clock(&self) -> Option<f64> {
        None
    }

    fn stats(&self) -> Option<RluStats> {
        None
    }

    /// Drains the recorded command trace, if recording is enabled.
    fn take_trace(&mut self) -> Vec<TraceEvent> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub config: SimConfig,
    pub cam_mode: bool,
    pub page_policy: PagePolicy,
    pub batch_policy: BatchPolicy,
    pub record_trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            config: SimConfig::default(),
            cam_mode: false,
            page_policy: PagePolicy::Closed,
            batch_policy: BatchPolicy::Serial,
            record_trace: false,
        }
    }
}

/// A [`HashMemMap`] probed through a simulated engine.
pub struct SimBackend {
    kind: BackendKind,
    map: HashMemMap,
    engine: Box<dyn ProbeEngine>,
    batch_start: f64,
    record_trace: bool,
    trace: Vec<TraceEvent>,
}

impl SimBackend {
    pub fn new(kind: BackendKind, hash: HashConfig, options: &SimOptions) -> Result<Self> {
        let c = &options.config;
        c.validate()?;
        let pe = match kind {
            BackendKind::PimArea => PeConfig::area_optimized(),
            BackendKind::PimPerf => PeConfig {
                cam_mode: options.cam_mode,
                ..PeConfig::perf_optimized()
            },
            _ => PeConfig::area_optimized(),
        };
        let engine: Box<dyn ProbeEngine> = match kind {
            BackendKind::PimArea | BackendKind::PimPerf => Box::new(Rlu::new(
                c.geometry,
                c.timing,
                pe,
                options.page_policy,
                options.batch_policy,
            )?),
            BackendKind::ConventionalSim => Box::new(ConventionalEngine::new(
                c.geometry,
                c.timing,
                c.cpu_scan_ns_per_line,
                options.batch_policy,
            )?),
            other => {
                return Err(Error::Usage(format!("{other} is not a simulated backend")));
            }
        };
        Ok(Self {
            kind,
            map: HashMemMap::new(c.geometry, hash)?,
            engine,
            batch_start: 0.0,
            record_trace: options.record_trace,
            trace: Vec::new(),
        })
    }

    pub fn map(&self) -> &HashMemMap {
        &self.map
    }

    pub fn map_mut(&mut self) -> &mut HashMemMap {
        &mut self.map
    }
}

impl Backend for SimBackend {
    fn kind(&self) -> BackendKind {
        self.kind
    }

    fn insert(&mut self, key: u32, value: u32) -> Result<InsertStatus> {
        self.map.insert(key, value)
    }

    fn probe(&mut self, key: u32) -> Result<Probe> {
        let issue_at = self.batch_start.max(0.0);
        let r = self.map.probe_with(key, self.engine.as_mut(), issue_at)?;
        if self.record_trace {
            self.trace.extend(r.trace);
        }
        Ok(Probe {
            value: r.value,
            latency_ns: Some(r.latency_ns),
        })
    }

    fn delete(&mut self, key: u32) -> Result<bool> {
        self.map.delete(key)
    }

    fn len(&self) -> usize {
        self.map.len()
    }

    fn begin_batch(&mut self) {
        self.batch_start = self.engine.now();
    }

    fn sim_clock(&self) -> Option<f64> {
        Some(self.engine.now())
    }

    fn stats(&self) -> Option<RluStats> {
        Some(self.engine.stats())
    }

    fn take_trace(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.trace)
    }
}

macro_rules! soft_backend {
    ($ty:ty, $kind:expr) => {
        impl Backend for $ty {
            fn kind(&self) -> BackendKind {
                $kind
            }

            fn insert(&mut self, key: u32, value: u32) -> Result<InsertStatus> {
                <$ty>::insert(self, key, value)
            }

            fn probe(&mut self, key: u32) -> Result<Probe> {
                Ok(Probe {
                    value: self.get(key)?,
                    latency_ns: None,
                })
            }

            fn delete(&mut self, key: u32) -> Result<bool> {
                self.remove(key)
            }

            fn len(&self) -> usize {
                <$ty>::len(self)
            }
        }
    };
}

soft_backend!(ChainedMap, BackendKind::SoftChained);
soft_backend!(TreeMap, BackendKind::SoftTree);
soft_backend!(HopscotchMap, BackendKind::SoftHopscotch);

/// Builds a backend sized for about `expected_pairs` pairs.
pub fn build_backend(kind: BackendKind, expected_pairs: u64, options: &SimOptions) -> Result<Box<dyn Backend>> {
    let pairs = usize::try_from(expected_pairs).map_err(|_| Error::Capacity("dataset too large".into()))?;
    Ok(match kind {
        BackendKind::PimArea | BackendKind::PimPerf | BackendKind::ConventionalSim => {
            let hash = HashConfig::for_dataset(expected_pairs, options.config.geometry.page_capacity());
            Box::new(SimBackend::new(kind, hash, options)?)
        }
        BackendKind::SoftChained => Box::new(ChainedMap::new(pairs.max(16).next_power_of_two())?),
        BackendKind::SoftTree => Box::new(TreeMap::new()),
        BackendKind::SoftHopscotch => {
            // start at or below 0.5 load; the map grows on demand
            Box::new(HopscotchMap::new((pairs * 2).max(64).next_power_of_two())?)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    Insert { key: u32, value: u32 },
    Probe { key: u32 },
    Delete { key: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpStatus {
    Inserted,
    Updated,
    Found,
    NotFound,
    Deleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: OpStatus,
    pub value: Option<u32>,
}

pub fn apply(backend: &mut dyn Backend, op: Op) -> Result<Outcome> {
    Ok(match op {
        Op::Insert { key, value } => Outcome {
            status: match backend.insert(key, value)? {
                InsertStatus::Inserted => OpStatus::Inserted,
                InsertStatus::Updated => OpStatus::Updated,
            },
            value: None,
        },
        Op::Probe { key } => {
            let value = backend.probe(key)?.value;
            Outcome {
                status: if value.is_some() { OpStatus::Found } else { OpStatus::NotFound },
                value,
            }
        }
        Op::Delete { key } => Outcome {
            status: if backend.delete(key)? { OpStatus::Deleted } else { OpStatus::NotFound },
            value: None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub op_index: usize,
    /// Position in the backend list passed to [`equivalence_check`].
    pub backend_index: usize,
    pub backend: BackendKind,
    pub op: Op,
    pub expected: Outcome,
    pub actual: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub ops: usize,
    pub divergence: Option<Divergence>,
}

impl EquivalenceReport {
    pub fn agrees(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Replays `log` on every backend next to a [`ChainedMap`] oracle and reports
/// the first (status, value) mismatch. Stops at the first divergence.
pub fn equivalence_check(log: &[Op], backends: &mut [Box<dyn Backend>]) -> Result<EquivalenceReport> {
    let mut oracle = ChainedMap::new(1024)?;
    for (op_index, &op) in log.iter().enumerate() {
        let expected = apply(&mut oracle, op)?;
        for (backend_index, b) in backends.iter_mut().enumerate() {
            let actual = apply(b.as_mut(), op)?;
            if actual != expected {
                return Ok(EquivalenceReport {
                    ops: op_index + 1,
                    divergence: Some(Divergence {
                        op_index,
                        backend_index,
                        backend: b.kind(),
                        op,
                        expected,
                        actual,
                    }),
                });
            }
        }
    }
    Ok(EquivalenceReport {
        ops: log.len(),
        divergence: None,
    })
}

/// Seeded mix of 50% inserts, 30% probes and 20% deletes over keys in
/// `0..key_space` (capped below the sentinels).
pub fn random_op_log(n: usize, key_space: u32, seed: u64) -> Vec<Op> {
    let space = key_space.clamp(1, EMPTY_KEY);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let key = rng.gen_range(0..space);
            match rng.gen_range(0..10) {
                0..=4 => Op::Insert { key, value: rng.gen() },
                5..=7 => Op::Probe { key },
                _ => Op::Delete { key },
            }
        })
        .collect()
}
