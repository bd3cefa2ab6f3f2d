//! Event-driven continuous-time simulation of a repeater chain.
//!
//! Level-0 generation on every link is one merged Poisson stream of rate
//! `K p` with a uniformly chosen link; a generation that the protocol cannot
//! admit is dropped. Swaps fire the instant their inputs are usable. With
//! classical delay enabled, each swap outcome reaches the endpoints
//! `2^(n-1) d/c` later, and the endpoint qubits sit in communication-delay
//! memory until then.

mod engine;
mod record;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, AllocationPolicy, ChainConfig, FullMemoryRule, MemoryAllocation, Protocol};

pub use record::{BATCHES, T_QUANTILE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// Stop at this simulated time.
    Time(f64),
    /// Stop at this many end-to-end deliveries.
    Deliveries(u64),
}

impl Horizon {
    pub fn label(&self) -> String {
        match self {
            Horizon::Time(t) => format!("time:{t}"),
            Horizon::Deliveries(n) => format!("deliveries:{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub chain: ChainConfig,
    pub alloc: MemoryAllocation,
    pub protocol: Protocol,
    pub policy: AllocationPolicy,
    pub classical_delay: bool,
    pub horizon: Horizon,
    pub seed: u64,
    /// Independent random stream under the same seed, e.g. a sweep cell index.
    pub stream: u64,
}

impl SimConfig {
    pub fn new(chain: ChainConfig, alloc: MemoryAllocation, protocol: Protocol, horizon: Horizon, seed: u64) -> Self {
        SimConfig {
            chain,
            alloc,
            protocol,
            policy: AllocationPolicy::default(),
            classical_delay: false,
            horizon,
            seed,
            stream: 0,
        }
    }

    pub fn with_rule(mut self, rule: FullMemoryRule) -> Self {
        self.policy.full_memory_rule = rule;
        self
    }

    pub fn with_classical_delay(mut self, on: bool) -> Self {
        self.classical_delay = on;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn check(&self) -> Result<()> {
        validate(&self.chain, &self.alloc)?;
        match (self.protocol, &self.alloc) {
            (Protocol::ModifiedDoubling, MemoryAllocation::Reserved(_)) => {}
            (Protocol::ModifiedDoubling, _) => {
                return Err(Error::AllocationKind("modified doubling needs a reserved allocation"))
            }
            (_, MemoryAllocation::Cognitive(_)) => {}
            (_, _) => return Err(Error::AllocationKind("pooled protocols need a cognitive allocation")),
        }
        if self.protocol.needs_pool() && self.policy.full_memory_rule == FullMemoryRule::DiscardOldest {
            return Err(Error::SimConfig("pooled protocols never discard; use the block rule".into()));
        }
        match self.horizon {
            Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => {
                Err(Error::SimConfig(format!("horizon time must be positive and finite, got {t}")))
            }
            Horizon::Deliveries(0) => Err(Error::SimConfig("horizon of zero deliveries".into())),
            _ => Ok(()),
        }
    }

    pub fn delay_label(&self) -> &'static str {
        if self.classical_delay {
            "classical"
        } else {
            "none"
        }
    }
}

/// Residence figures for one delivered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySample {
    /// Longest time any constituent level-0 qubit spent in memory.
    pub max_residence: f64,
    /// Delivery time minus the earliest constituent generation time.
    pub span: f64,
}

/// Queue statistics of one level over the measurement window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    /// Pairs entering the level's memories, including those swapped on arrival.
    pub arrivals: u64,
    /// Departures (swap or discard) of pairs that arrived inside the window.
    pub departures: u64,
    pub wait_total: f64,
    /// Time-average number of stored pairs at this level, chain-wide.
    pub mean_queue: f64,
    /// Largest per-side occupancy seen at this level, reservations included.
    pub peak_side: u32,
}

impl LevelStats {
    pub fn mean_wait(&self) -> f64 {
        if self.departures == 0 {
            0.0
        } else {
            self.wait_total / self.departures as f64
        }
    }
}

/// Whole-run pair accounting for one level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conservation {
    pub created: u64,
    /// Taken as a swap input, whatever the outcome.
    pub consumed: u64,
    pub discarded: u64,
    /// Stored when the run ended.
    pub alive: u64,
    /// Lost because the destination memory was full.
    pub blocked: u64,
}

impl Conservation {
    pub fn balanced(&self) -> bool {
        self.created == self.consumed + self.discarded + self.alive + self.blocked
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapCounts {
    pub started: u64,
    pub succeeded: u64,
    pub failed: u64,
    /// Outcomes still travelling when the run ended.
    pub in_flight: u64,
}

/// Communication-delay holds that started inside the window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HoldStats {
    /// Each hold keeps two qubits, one per endpoint.
    pub count: u64,
    pub total_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub delivered: u64,
    pub elapsed: f64,
    /// Start of the measurement window (end of warm-up).
    pub window_start: f64,
    pub window_delivered: u64,
    /// Deliveries per unit time over the window.
    pub rate: f64,
    pub rate_half_width: f64,
    pub queue_occupancy: Vec<f64>,
    pub comm_occupancy: Vec<f64>,
    /// Node totals divided by the number of links.
    pub queue_mem_avg: f64,
    pub comm_mem_avg: f64,
    pub comm_mem_half_width: f64,
    pub delays: Vec<DelaySample>,
    pub levels: Vec<LevelStats>,
    pub conservation: Vec<Conservation>,
    pub swaps: SwapCounts,
    pub holds: HoldStats,
    pub blocked_generations: u64,
    /// Peak pool occupancy under the pooled protocols, placeholders included.
    pub peak_pool: u32,
    /// Between-event instants with both inputs of a swap stored.
    pub coexistence: u64,
}

impl SimStats {
    pub fn window(&self) -> f64 {
        self.elapsed - self.window_start
    }

    pub fn delay_mean(&self) -> f64 {
        if self.delays.is_empty() {
            return 0.0;
        }
        self.delays.iter().map(|d| d.max_residence).sum::<f64>() / self.delays.len() as f64
    }

    pub fn delay_max(&self) -> f64 {
        self.delays.iter().map(|d| d.max_residence).fold(0.0, f64::max)
    }

    /// One stats row; the seed column reads `seed:stream`.
    pub fn csv_row(&self, cfg: &SimConfig) -> String {
        format!(
            "{},{:.16e},{:.16e},{},{},{},{},{}:{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            cfg.chain.k,
            cfg.chain.p,
            cfg.chain.q,
            cfg.alloc.label(),
            cfg.protocol.label(),
            cfg.policy.full_memory_rule.label(),
            cfg.delay_label(),
            cfg.seed,
            cfg.stream,
            cfg.horizon.label(),
            self.delivered,
            self.elapsed,
            self.rate,
            self.rate_half_width,
            self.comm_mem_avg,
            self.queue_mem_avg,
            self.delay_mean(),
            self.delay_max(),
        )
    }
}

pub const STATS_HEADER: &str =
    "k,p,q,alloc,protocol,policy,delay_mode,seed,horizon,delivered,elapsed,rate,rate_ci,comm_mem_avg,queue_mem_avg,delay_mean,delay_max";

pub fn simulate(cfg: &SimConfig) -> Result<SimStats> {
    cfg.check()?;
    engine::Engine::new(cfg, None).run()
}

/// Runs `cfg` and writes one tab-separated line per event to `trace`.
pub fn simulate_traced(cfg: &SimConfig, trace: &mut dyn Write) -> Result<SimStats> {
    cfg.check()?;
    engine::Engine::new(cfg, Some(trace)).run()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub half_width: f64,
}

pub fn ratio_to_bound(stats: &SimStats, bound: f64) -> Result<RatioEstimate> {
    if bound == 0.0 || !bound.is_finite() {
        return Err(Error::ZeroBound);
    }
    Ok(RatioEstimate {
        ratio: stats.rate / bound,
        half_width: stats.rate_half_width / bound.abs(),
    })
}

pub fn measure_ratio_to_bound(cfg: &SimConfig, bound: f64) -> Result<RatioEstimate> {
    if bound == 0.0 || !bound.is_finite() {
        return Err(Error::ZeroBound);
    }
    ratio_to_bound(&simulate(cfg)?, bound)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommMemory {
    pub per_node: Vec<f64>,
    pub chain_avg: f64,
    pub half_width: f64,
    /// Time-average number of held qubits, chain-wide.
    pub little_l: f64,
    /// Hold-start rate of qubits times their mean hold time.
    pub little_lambda_w: f64,
}

impl CommMemory {
    pub fn from_stats(stats: &SimStats) -> Self {
        let window = stats.window();
        let little_l = stats.comm_occupancy.iter().sum();
        let little_lambda_w = if window > 0.0 { 2.0 * stats.holds.total_duration / window } else { 0.0 };
        CommMemory {
            per_node: stats.comm_occupancy.clone(),
            chain_avg: stats.comm_mem_avg,
            half_width: stats.comm_mem_half_width,
            little_l,
            little_lambda_w,
        }
    }

    pub fn little_gap(&self) -> f64 {
        relative_gap(self.little_l, self.little_lambda_w)
    }
}

pub fn measure_comm_delay_memory(cfg: &SimConfig) -> Result<CommMemory> {
    if !cfg.classical_delay {
        return Err(Error::SimConfig("communication-delay memory needs classical_delay".into()));
    }
    Ok(CommMemory::from_stats(&simulate(cfg)?))
}

/// Little's-law view of one level's queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDelay {
    pub level: u32,
    pub mean_queue: f64,
    pub arrival_rate: f64,
    pub mean_wait: f64,
}

impl LevelDelay {
    pub fn little_gap(&self) -> f64 {
        relative_gap(self.mean_queue, self.arrival_rate * self.mean_wait)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySummary {
    pub levels: Vec<LevelDelay>,
    pub residence_mean: f64,
    pub residence_max: f64,
    pub span_mean: f64,
}

impl DelaySummary {
    pub fn from_stats(stats: &SimStats) -> Self {
        let window = stats.window();
        let levels = stats
            .levels
            .iter()
            .enumerate()
            .map(|(j, l)| LevelDelay {
                level: j as u32,
                mean_queue: l.mean_queue,
                arrival_rate: if window > 0.0 { l.arrivals as f64 / window } else { 0.0 },
                mean_wait: l.mean_wait(),
            })
            .collect();
        let n = stats.delays.len().max(1) as f64;
        DelaySummary {
            levels,
            residence_mean: stats.delay_mean(),
            residence_max: stats.delay_max(),
            span_mean: stats.delays.iter().map(|d| d.span).sum::<f64>() / n,
        }
    }
}

pub fn measure_delays(cfg: &SimConfig) -> Result<DelaySummary> {
    Ok(DelaySummary::from_stats(&simulate(cfg)?))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
