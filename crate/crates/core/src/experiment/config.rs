use serde::{Deserialize, Serialize};

use crate::analytic::select_i0;
use crate::error::{Error, Result};
use crate::model::{
    allocation_constant, allocation_exponential, ChainConfig, FullMemoryRule, MemoryAllocation, Protocol,
};
use crate::sim::Horizon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Analytic,
    Exact,
    Simulate,
    RatioCurve,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    pub mode: Mode,
    /// Result table path; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Master seed; simulation cells draw independent streams from it.
    #[serde(default)]
    pub seed: u64,
    pub chain: ChainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<AnalyticSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default = "one")]
    pub d: f64,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AllocationSection {
    Reserved {
        levels: Vec<u32>,
    },
    Constant {
        b: u32,
    },
    Exponential {
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        i0: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Cognitive {
        b: u32,
    },
}

/// Value lists; an empty list falls back to the single value given in the
/// other sections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    /// Levels for the per-level analytic quantities.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub i: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub rule: FullMemoryRule,
    #[serde(default)]
    pub classical_delay: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_deliveries: Option<u64>,
    #[serde(default = "one_u32")]
    pub replications: u32,
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    RateBound,
    CognitiveF,
    SelectI0,
    AvgMemory,
    MaxMemory,
    CommDelayMemory,
    EndToEndDelay,
    QueuingDelay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSection {
    pub quantity: Quantity,
}

/// One resolved allocation together with the grid values that produced it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AllocCell {
    pub alloc: MemoryAllocation,
    pub b: Option<u32>,
    pub gamma: Option<f64>,
    pub i0: Option<u32>,
    pub delta: Option<f64>,
}

impl Experiment {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1)).unwrap_or(0);
            Error::config(format!("<syntax, line {line}>"), e.message().to_string())
        })?;
        let exp: Experiment = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().to_string();
            Error::config(if path == "." { "<root>".to_string() } else { path }, message)
        })?;
        exp.check()?;
        Ok(exp)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn check(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        let simulating = matches!(self.mode, Mode::Simulate | Mode::Sweep);
        if simulating {
            let sim = self
                .simulation
                .as_ref()
                .ok_or_else(|| Error::config("simulation", "required by simulate and sweep modes"))?;
            match (sim.horizon_time, sim.horizon_deliveries) {
                (Some(_), Some(_)) => {
                    return Err(Error::config("simulation.horizon_time", "give either horizon_time or horizon_deliveries"))
                }
                (None, None) => return Err(Error::config("simulation.horizon_time", "a horizon is required")),
                _ => {}
            }
            if sim.replications == 0 {
                return Err(Error::config("simulation.replications", "must be at least 1"));
            }
        }
        if self.mode == Mode::Analytic && self.analytic.is_none() {
            return Err(Error::config("analytic.quantity", "required by analytic mode"));
        }
        let needs_alloc = match self.mode {
            Mode::Analytic => !matches!(self.quantity(), Some(Quantity::SelectI0 | Quantity::CognitiveF)),
            _ => true,
        };
        if needs_alloc && self.allocation.is_none() {
            return Err(Error::config("allocation", "required by this mode"));
        }
        let needs_q = match self.mode {
            Mode::Analytic => matches!(
                self.quantity(),
                Some(
                    Quantity::RateBound | Quantity::CommDelayMemory | Quantity::EndToEndDelay | Quantity::QueuingDelay
                )
            ),
            _ => true,
        };
        if needs_q && self.grid.q.is_empty() && self.chain.q.is_none() {
            return Err(Error::config("chain.q", "set chain.q or grid.q"));
        }
        if self.needs_k() && self.grid.k.is_empty() && self.chain.k.is_none() {
            return Err(Error::config("chain.k", "set chain.k or grid.k"));
        }
        if self.mode == Mode::Simulate {
            for (field, len) in [
                ("grid.q", self.grid.q.len()),
                ("grid.k", self.grid.k.len()),
                ("grid.b", self.grid.b.len()),
                ("grid.gamma", self.grid.gamma.len()),
                ("grid.delta", self.grid.delta.len()),
            ] {
                if len > 1 {
                    return Err(Error::config(field, "simulate mode takes one configuration; use mode = \"sweep\""));
                }
            }
        }
        if self.mode == Mode::Analytic {
            match self.quantity() {
                Some(Quantity::SelectI0) => {
                    self.gammas()?;
                    self.deltas()?;
                }
                Some(Quantity::CognitiveF) => {
                    self.bs()?;
                    if self.grid.i.is_empty() {
                        return Err(Error::config("grid.i", "cognitive-f needs a list of levels"));
                    }
                }
                Some(Quantity::QueuingDelay) if self.grid.i.is_empty() => {
                    return Err(Error::config("grid.i", "queuing-delay needs a list of levels"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn needs_k(&self) -> bool {
        !matches!(self.quantity(), Some(Quantity::SelectI0 | Quantity::CognitiveF)) || self.mode != Mode::Analytic
    }

    pub(crate) fn quantity(&self) -> Option<Quantity> {
        self.analytic.as_ref().map(|a| a.quantity)
    }

    pub(crate) fn ks(&self) -> Vec<u32> {
        if self.grid.k.is_empty() {
            self.chain.k.into_iter().collect()
        } else {
            self.grid.k.clone()
        }
    }

    pub(crate) fn qs(&self) -> Vec<f64> {
        if self.grid.q.is_empty() {
            self.chain.q.into_iter().collect()
        } else {
            self.grid.q.clone()
        }
    }

    pub(crate) fn bs(&self) -> Result<Vec<u32>> {
        if !self.grid.b.is_empty() {
            return Ok(self.grid.b.clone());
        }
        match &self.allocation {
            Some(AllocationSection::Constant { b } | AllocationSection::Cognitive { b }) => Ok(vec![*b]),
            _ => Err(Error::config("grid.b", "no memory size given")),
        }
    }

    pub(crate) fn gammas(&self) -> Result<Vec<f64>> {
        if !self.grid.gamma.is_empty() {
            return Ok(self.grid.gamma.clone());
        }
        match &self.allocation {
            Some(AllocationSection::Exponential { gamma, .. }) => Ok(vec![*gamma]),
            _ => Err(Error::config("grid.gamma", "no gamma given")),
        }
    }

    pub(crate) fn deltas(&self) -> Result<Vec<f64>> {
        if !self.grid.delta.is_empty() {
            return Ok(self.grid.delta.clone());
        }
        match &self.allocation {
            Some(AllocationSection::Exponential { delta: Some(d), .. }) => Ok(vec![*d]),
            _ => Err(Error::config("grid.delta", "no delta given")),
        }
    }

    pub(crate) fn chain(&self, k: u32, q: f64) -> Result<ChainConfig> {
        ChainConfig::with_delay(k, self.chain.p, q, self.chain.d, self.chain.c).map_err(|e| {
            let field = match &e {
                Error::SwapProbability(_) => "chain.q".to_string(),
                Error::NonPositive { name, .. } => format!("chain.{name}"),
                Error::Config { field, .. } => format!("chain.{field}"),
                _ => return e,
            };
            Error::config(field, e.to_string())
        })
    }

    pub(crate) fn protocol(&self) -> Protocol {
        self.simulation.as_ref().map(|s| s.protocol).unwrap_or_default()
    }

    pub(crate) fn rule(&self) -> FullMemoryRule {
        self.simulation.as_ref().map(|s| s.rule).unwrap_or_default()
    }

    pub(crate) fn horizon(&self) -> Result<Horizon> {
        let sim = self.simulation.as_ref().ok_or_else(|| Error::config("simulation", "missing"))?;
        Ok(match (sim.horizon_time, sim.horizon_deliveries) {
            (Some(t), _) => Horizon::Time(t),
            (None, Some(n)) => Horizon::Deliveries(n),
            (None, None) => return Err(Error::config("simulation.horizon_time", "a horizon is required")),
        })
    }

    /// Allocations for chain size `k`, one per grid combination.
    pub(crate) fn allocations(&self, k: u32) -> Result<Vec<AllocCell>> {
        let section = self.allocation.as_ref().ok_or_else(|| Error::config("allocation", "missing"))?;
        let plain = |alloc| AllocCell { alloc, b: None, gamma: None, i0: None, delta: None };
        match section {
            AllocationSection::Reserved { levels } => {
                if levels.len() != k as usize {
                    return Err(Error::config(
                        "allocation.levels",
                        format!("{} levels given for k = {k}", levels.len()),
                    ));
                }
                Ok(vec![plain(MemoryAllocation::Reserved(levels.clone()))])
            }
            AllocationSection::Constant { .. } => self
                .bs()?
                .into_iter()
                .map(|b| {
                    Ok(AllocCell { b: Some(b), ..plain(allocation_constant(b, k).map_err(|e| Error::config("allocation.b", e.to_string()))?) })
                })
                .collect(),
            AllocationSection::Cognitive { .. } => {
                Ok(self.bs()?.into_iter().map(|b| AllocCell { b: Some(b), ..plain(MemoryAllocation::Cognitive(b)) }).collect())
            }
            AllocationSection::Exponential { i0, .. } => {
                let mut out = Vec::new();
                for gamma in self.gammas()? {
                    let choices: Vec<(u32, Option<f64>)> = match i0 {
                        Some(i0) => vec![(*i0, None)],
                        None => self
                            .deltas()?
                            .into_iter()
                            .map(|d| Ok((select_i0(gamma, d).map_err(|e| Error::config("grid.delta", e.to_string()))?, Some(d))))
                            .collect::<Result<_>>()?,
                    };
                    for (i0, delta) in choices {
                        let alloc = allocation_exponential(gamma, i0, k)
                            .map_err(|e| Error::config("allocation.gamma", e.to_string()))?;
                        out.push(AllocCell { alloc, b: None, gamma: Some(gamma), i0: Some(i0), delta });
                    }
                }
                Ok(out)
            }
        }
    }
}
