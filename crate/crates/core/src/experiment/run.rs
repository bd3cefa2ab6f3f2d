use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::analytic::{
    avg_memory_reserved, cognitive_f, comm_delay_memory, end_to_end_delay, log_tail_sum, max_memory_exponential,
    queuing_delay, rate_lower_bound_cognitive, rate_lower_bound_doubling, select_i0, DelayPolicy, RateKind,
};
use crate::ctmc::{solve_exact, theorem1_ratio_curve};
use crate::error::{Error, Result};
use crate::model::MemoryAllocation;
use crate::sim::{simulate, SimConfig, STATS_HEADER};
use crate::VERSION;

use super::config::{AllocCell, Experiment, Mode, Quantity};

/// Environment variable holding the worker-pool size for sweeps.
pub const WORKERS_ENV: &str = "REPEATER_WORKERS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: String,
    pub rows: Vec<String>,
}

impl Table {
    fn new(header: &str) -> Self {
        Table { header: header.to_string(), rows: Vec::new() }
    }

    /// Header and rows, without the metadata block.
    pub fn body(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 64);
        out.push_str(&self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, got {v:?}"))),
        },
    }
}

pub fn run_experiment(exp: &Experiment) -> Result<Table> {
    exp.check()?;
    match exp.mode {
        Mode::Analytic => analytic(exp),
        Mode::Exact => exact(exp),
        Mode::RatioCurve => ratio_curve(exp),
        Mode::Simulate | Mode::Sweep => simulation(exp),
    }
}

/// Writes the metadata block and `table` to `path`.
pub fn write_table(path: &Path, exp: &Experiment, table: &Table) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "# repeater {VERSION}")?;
    writeln!(out, "# experiment: {}", exp.name)?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(out, "# generated-unix: {stamp}")?;
    for line in exp.to_toml().lines() {
        writeln!(out, "# config: {line}")?;
    }
    out.extend_from_slice(table.body().as_bytes());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, out)?;
    Ok(())
}

fn rate_kind(kind: RateKind) -> &'static str {
    match kind {
        RateKind::DoublingLowerBound => "doubling-lower-bound",
        RateKind::CognitiveLowerBound => "cognitive-lower-bound",
        RateKind::OptimalInfiniteMemory => "optimal",
    }
}

fn analytic(exp: &Experiment) -> Result<Table> {
    let p = exp.chain.p;
    let quantity = exp.quantity().expect("checked");
    let mut table;
    match quantity {
        Quantity::SelectI0 => {
            table = Table::new("gamma,delta,i0,tail_sum,tail_remainder");
            for gamma in exp.gammas()? {
                for delta in exp.deltas()? {
                    let i0 = select_i0(gamma, delta)?;
                    let (sum, rem) = log_tail_sum(gamma, i0)?;
                    table.rows.push(format!("{},{},{i0},{},{}", real(gamma), real(delta), real(sum), real(rem)));
                }
            }
        }
        Quantity::CognitiveF => {
            table = Table::new("b,i,f");
            for b in exp.bs()? {
                for &i in &exp.grid.i {
                    table.rows.push(format!("{b},{i},{}", real(cognitive_f(b, i))));
                }
            }
        }
        Quantity::RateBound => {
            table = Table::new("k,p,q,alloc,kind,rate_bound");
            for k in exp.ks() {
                for cell in exp.allocations(k)? {
                    for q in exp.qs() {
                        let chain = exp.chain(k, q)?;
                        let bound = match &cell.alloc {
                            MemoryAllocation::Cognitive(b) => rate_lower_bound_cognitive(p, q, *b, k),
                            _ => rate_lower_bound_doubling(&chain, &cell.alloc)?,
                        };
                        table.rows.push(format!(
                            "{k},{},{},{},{},{}",
                            real(p),
                            real(q),
                            cell.alloc.label(),
                            rate_kind(bound.kind),
                            real(bound.value)
                        ));
                    }
                }
            }
        }
        Quantity::AvgMemory => {
            table = Table::new("k,alloc,avg_memory");
            for k in exp.ks() {
                for cell in exp.allocations(k)? {
                    let levels = reserved_levels(&cell)?;
                    let levels: Vec<f64> = levels.iter().map(|&b| b as f64).collect();
                    table.rows.push(format!("{k},{},{}", cell.alloc.label(), real(avg_memory_reserved(&levels))));
                }
            }
        }
        Quantity::MaxMemory => {
            table = Table::new("k,gamma,i0,max_memory,max_memory_bound");
            for k in exp.ks() {
                for cell in exp.allocations(k)? {
                    let (Some(gamma), Some(i0)) = (cell.gamma, cell.i0) else {
                        return Err(Error::config("allocation.kind", "max-memory needs an exponential allocation"));
                    };
                    let m = max_memory_exponential(gamma, i0, k)?;
                    table.rows.push(format!("{k},{},{i0},{},{}", real(gamma), real(m.exact), real(m.bound)));
                }
            }
        }
        Quantity::CommDelayMemory => {
            table = Table::new("k,p,q,d,c,alloc,per_node_avg_bound,any_node_bound");
            for k in exp.ks() {
                for cell in exp.allocations(k)? {
                    let levels = reserved_levels(&cell)?;
                    for q in exp.qs() {
                        let chain = exp.chain(k, q)?;
                        let m = comm_delay_memory(&chain, Some(&levels))?;
                        table.rows.push(format!(
                            "{k},{},{},{},{},{},{},{}",
                            real(p),
                            real(q),
                            real(chain.d),
                            real(chain.c),
                            cell.alloc.label(),
                            real(m.per_node_avg_bound),
                            real(m.any_node_bound)
                        ));
                    }
                }
            }
        }
        Quantity::EndToEndDelay => {
            table = Table::new("k,p,q,d,c,alloc,delay,linear_in_k");
            for k in exp.ks() {
                for cell in exp.allocations(k)? {
                    let policy = match (cell.b, cell.gamma, cell.i0) {
                        (Some(b), _, _) => DelayPolicy::Constant { b },
                        (_, Some(gamma), Some(i0)) => {
                            DelayPolicy::Exponential { gamma, i0, delta: cell.delta.unwrap_or(f64::NAN) }
                        }
                        _ => {
                            return Err(Error::config(
                                "allocation.kind",
                                "end-to-end-delay needs a constant or exponential allocation",
                            ))
                        }
                    };
                    for q in exp.qs() {
                        let chain = exp.chain(k, q)?;
                        let d = end_to_end_delay(&chain, policy)?;
                        table.rows.push(format!(
                            "{k},{},{},{},{},{},{},{}",
                            real(p),
                            real(q),
                            real(chain.d),
                            real(chain.c),
                            cell.alloc.label(),
                            real(d.value),
                            d.linear_in_k
                        ));
                    }
                }
            }
        }
        Quantity::QueuingDelay => {
            table = Table::new("k,p,q,alloc,i,queuing_delay");
            for k in exp.ks() {
                for cell in exp.allocations(k)? {
                    let levels = reserved_levels(&cell)?;
                    for q in exp.qs() {
                        for &i in &exp.grid.i {
                            let t = queuing_delay(i, p, q, &levels)?;
                            table.rows.push(format!("{k},{},{},{},{i},{}", real(p), real(q), cell.alloc.label(), real(t)));
                        }
                    }
                }
            }
        }
    }
    Ok(table)
}

fn reserved_levels(cell: &AllocCell) -> Result<Vec<u32>> {
    cell.alloc
        .levels()
        .map(<[u32]>::to_vec)
        .ok_or_else(|| Error::config("allocation.kind", "this quantity needs a per-level allocation"))
}

fn exact(exp: &Experiment) -> Result<Table> {
    let mut table = Table::new("k,p,q,alloc,protocol,policy,states,rate");
    let protocol = exp.protocol();
    let rule = exp.rule();
    let mut jobs = Vec::new();
    for k in exp.ks() {
        for cell in exp.allocations(k)? {
            for q in exp.qs() {
                jobs.push((exp.chain(k, q)?, cell.alloc.clone()));
            }
        }
    }
    let results: Vec<Result<String>> = in_pool(|| {
        jobs.par_iter()
            .map(|(chain, alloc)| {
                let sol = solve_exact(chain, alloc, protocol, rule)?;
                Ok(format!(
                    "{},{},{},{},{},{},{},{}",
                    chain.k,
                    real(chain.p),
                    real(chain.q),
                    alloc.label(),
                    protocol.label(),
                    rule.label(),
                    sol.generator.len(),
                    real(sol.rate)
                ))
            })
            .collect()
    })?;
    for row in results {
        table.rows.push(row?);
    }
    Ok(table)
}

fn ratio_curve(exp: &Experiment) -> Result<Table> {
    let mut table = Table::new("k,p,alloc,policy,q,exact_rate,lower_bound,ratio");
    let rule = exp.rule();
    let p = exp.chain.p;
    let qs = exp.qs();
    for k in exp.ks() {
        for cell in exp.allocations(k)? {
            let points = in_pool(|| theorem1_ratio_curve(k, p, &cell.alloc, &qs, rule))??;
            for pt in points {
                table.rows.push(format!(
                    "{k},{},{},{},{},{},{},{}",
                    real(p),
                    cell.alloc.label(),
                    rule.label(),
                    real(pt.q),
                    real(pt.exact_rate),
                    real(pt.lower_bound),
                    real(pt.ratio)
                ));
            }
        }
    }
    Ok(table)
}

fn simulation(exp: &Experiment) -> Result<Table> {
    let sim = exp.simulation.as_ref().expect("checked");
    let horizon = exp.horizon()?;
    let mut cells = Vec::new();
    for k in exp.ks() {
        for cell in exp.allocations(k)? {
            for q in exp.qs() {
                for _ in 0..sim.replications {
                    let stream = cells.len() as u64;
                    let cfg = SimConfig::new(exp.chain(k, q)?, cell.alloc.clone(), sim.protocol, horizon, exp.seed)
                        .with_rule(sim.rule)
                        .with_classical_delay(sim.classical_delay)
                        .with_stream(stream);
                    cfg.check()?;
                    cells.push(cfg);
                }
            }
        }
    }
    let rows: Vec<Result<String>> =
        in_pool(|| cells.par_iter().map(|cfg| Ok(simulate(cfg)?.csv_row(cfg))).collect())?;
    let mut table = Table::new(STATS_HEADER);
    for row in rows {
        table.rows.push(row?);
    }
    Ok(table)
}

fn in_pool<T: Send>(job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers_from_env()? {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(WORKERS_ENV, e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}
