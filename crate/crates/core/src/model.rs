//! Chain topology, protocol parameters and memory allocations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A homogeneous chain of `K = 2^k` links with nodes labelled `0..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Chain size exponent.
    pub k: u32,
    /// Poisson rate of successful level-0 generation on each link.
    pub p: f64,
    /// Entanglement-swapping success probability.
    pub q: f64,
    /// Per-link distance.
    pub d: f64,
    /// Classical signal speed.
    pub c: f64,
}

impl ChainConfig {
    /// Chain with unit link length and unit signal speed.
    pub fn new(k: u32, p: f64, q: f64) -> Result<Self> {
        Self::with_delay(k, p, q, 1.0, 1.0)
    }

    pub fn with_delay(k: u32, p: f64, q: f64, d: f64, c: f64) -> Result<Self> {
        let cfg = ChainConfig { k, p, q, d, c };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        positive("p", self.p)?;
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::SwapProbability(self.q));
        }
        positive("d", self.d)?;
        positive("c", self.c)?;
        if self.k > 30 {
            return Err(Error::config("k", "chains beyond 2^30 links are not supported"));
        }
        Ok(())
    }

    /// Number of links `K = 2^k`.
    pub fn links(&self) -> usize {
        1usize << self.k
    }

    pub fn nodes(&self) -> usize {
        self.links() + 1
    }

    /// One-link classical signalling time `d/c`.
    pub fn link_delay(&self) -> f64 {
        self.d / self.c
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name, value })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemoryAllocation {
    /// `B_i` memories per side per node for level-`i` pairs, `i = 0..k-1`.
    Reserved(Vec<u32>),
    /// A shared pool of `B` memories per link side.
    Cognitive(u32),
}

impl MemoryAllocation {
    pub fn levels(&self) -> Option<&[u32]> {
        match self {
            MemoryAllocation::Reserved(levels) => Some(levels),
            MemoryAllocation::Cognitive(_) => None,
        }
    }

    /// Compact label used in result tables: `R:1;2` or `C:3`.
    pub fn label(&self) -> String {
        match self {
            MemoryAllocation::Reserved(levels) => {
                let parts: Vec<String> = levels.iter().map(|b| b.to_string()).collect();
                format!("R:{}", parts.join(";"))
            }
            MemoryAllocation::Cognitive(b) => format!("C:{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FullMemoryRule {
    /// Stop producing a pair whose destination memory is full.
    #[default]
    Block,
    /// Make room by dropping the oldest stored pair in the destination memory.
    DiscardOldest,
}

impl FullMemoryRule {
    pub fn label(&self) -> &'static str {
        match self {
            FullMemoryRule::Block => "block",
            FullMemoryRule::DiscardOldest => "discard-oldest",
        }
    }
}

/// Swapping protocol driving the chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Doubling swaps with per-level reservations `B_i`.
    #[default]
    ModifiedDoubling,
    /// Doubling swaps over a shared per-link pool; higher levels keep their slots.
    Cognitive,
    /// The cognitive method plus placeholder occupants on every link a stored
    /// pair spans.
    AuxiliaryVirtual,
}

impl Protocol {
    pub fn label(&self) -> &'static str {
        match self {
            Protocol::ModifiedDoubling => "modified-doubling",
            Protocol::Cognitive => "cognitive",
            Protocol::AuxiliaryVirtual => "auxiliary-virtual",
        }
    }

    pub fn needs_pool(&self) -> bool {
        !matches!(self, Protocol::ModifiedDoubling)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationPolicy {
    pub full_memory_rule: FullMemoryRule,
}

pub fn validate(config: &ChainConfig, alloc: &MemoryAllocation) -> Result<()> {
    config.check()?;
    match alloc {
        MemoryAllocation::Reserved(levels) => {
            if levels.len() != config.k as usize {
                return Err(Error::DimensionMismatch {
                    expected: config.k as usize,
                    found: levels.len(),
                });
            }
            if let Some(&b) = levels.iter().find(|&&b| b == 0) {
                return Err(Error::NonPositive { name: "B_i", value: b as f64 });
            }
        }
        MemoryAllocation::Cognitive(b) => {
            if *b == 0 {
                return Err(Error::NonPositive { name: "B", value: 0.0 });
            }
        }
    }
    Ok(())
}

/// `B_i = B` at every level.
pub fn allocation_constant(b: u32, k: u32) -> Result<MemoryAllocation> {
    if b == 0 {
        return Err(Error::NonPositive { name: "B", value: 0.0 });
    }
    if k == 0 {
        return Err(Error::NonPositive { name: "k", value: 0.0 });
    }
    Ok(MemoryAllocation::Reserved(vec![b; k as usize]))
}

/// `B_i = ceil(gamma^(i + i0))`.
pub fn allocation_exponential(gamma: f64, i0: u32, k: u32) -> Result<MemoryAllocation> {
    check_gamma(gamma)?;
    if i0 == 0 {
        return Err(Error::NonPositive { name: "i0", value: 0.0 });
    }
    if k == 0 {
        return Err(Error::NonPositive { name: "k", value: 0.0 });
    }
    let levels = (0..k)
        .map(|i| {
            let b = gamma.powi((i + i0) as i32).ceil();
            if b > u32::MAX as f64 {
                Err(Error::config("gamma", "allocation overflows u32"))
            } else {
                Ok(b as u32)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MemoryAllocation::Reserved(levels))
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(Error::Gamma(gamma))
    }
}
