use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::model::{FullMemoryRule, MemoryAllocation, Protocol};

use super::record::{half_width, Bins, Tally};
use super::{Conservation, DelaySample, HoldStats, Horizon, LevelStats, SimConfig, SimStats, SwapCounts};

#[derive(Debug, Clone, Copy)]
struct Pair {
    level: u32,
    segment: usize,
    /// When the pair entered its memory.
    arrived: f64,
    measured: bool,
    earliest: f64,
    left_born: f64,
    right_born: f64,
    /// Longest residence among qubits already measured away.
    max_internal: f64,
}

impl Pair {
    fn fresh(segment: usize, t: f64) -> Self {
        Pair {
            level: 0,
            segment,
            arrived: t,
            measured: false,
            earliest: t,
            left_born: t,
            right_born: t,
            max_internal: 0.0,
        }
    }

    fn joined(a: &Pair, b: &Pair, t: f64) -> Self {
        Pair {
            level: a.level + 1,
            segment: a.segment / 2,
            arrived: t,
            measured: false,
            earliest: a.earliest.min(b.earliest),
            left_born: a.left_born,
            right_born: b.right_born,
            max_internal: a
                .max_internal
                .max(b.max_internal)
                .max(t - a.right_born)
                .max(t - b.left_born),
        }
    }

    fn ends(&self) -> (usize, usize) {
        let a = self.segment << self.level;
        (a, a + (1 << self.level))
    }
}

/// The swap node of one level-`j` segment pair: left inputs come from
/// segment `2u`, right inputs from `2u + 1`.
#[derive(Debug, Default)]
struct Site {
    left: VecDeque<Pair>,
    right: VecDeque<Pair>,
    reserved_left: u32,
    reserved_right: u32,
}

impl Site {
    fn side(&self, left: bool) -> (&VecDeque<Pair>, u32) {
        if left {
            (&self.left, self.reserved_left)
        } else {
            (&self.right, self.reserved_right)
        }
    }

    fn side_mut(&mut self, left: bool) -> (&mut VecDeque<Pair>, &mut u32) {
        if left {
            (&mut self.left, &mut self.reserved_left)
        } else {
            (&mut self.right, &mut self.reserved_right)
        }
    }
}

enum Pool {
    Reserved(Vec<u32>),
    /// Per-node memory banks facing the left and right links.
    Banks { b: u32, left: Vec<u32>, right: Vec<u32> },
    /// Per-link occupancy, counting every link a pair spans.
    Links { b: u32, occupied: Vec<u32> },
}

struct Pending {
    time: f64,
    seq: u64,
    pair: Pair,
    success: bool,
    started: f64,
    reserved: bool,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: the heap pops the earliest outcome first
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

pub(crate) struct Engine<'a> {
    cfg: &'a SimConfig,
    k: u32,
    rule: FullMemoryRule,
    delay: bool,
    sites: Vec<Vec<Site>>,
    pool: Pool,
    rng: ChaCha8Rng,
    now: f64,
    heap: BinaryHeap<Pending>,
    seq: u64,
    trace: Option<&'a mut dyn Write>,
    trace_error: Option<std::io::Error>,

    warm: Option<f64>,
    bins: Option<Bins>,
    held: u32,
    held_since: f64,
    queue: Vec<Tally>,
    comm: Vec<Tally>,
    stored: Vec<Tally>,
    levels: Vec<LevelStats>,
    conservation: Vec<Conservation>,
    swaps: SwapCounts,
    holds: HoldStats,
    delays: Vec<DelaySample>,
    delivered: u64,
    window_delivered: u64,
    blocked_generations: u64,
    peak_pool: u32,
    coexistence: u64,
}

impl<'a> Engine<'a> {
    pub fn new(cfg: &'a SimConfig, trace: Option<&'a mut dyn Write>) -> Self {
        let k = cfg.chain.k;
        let links = cfg.chain.links();
        let nodes = cfg.chain.nodes();
        let sites = (0..k).map(|j| (0..links >> (j + 1)).map(|_| Site::default()).collect()).collect();
        let pool = match (&cfg.alloc, cfg.protocol) {
            (MemoryAllocation::Reserved(levels), _) => Pool::Reserved(levels.clone()),
            (MemoryAllocation::Cognitive(b), Protocol::AuxiliaryVirtual) => Pool::Links {
                b: *b,
                occupied: vec![0; links],
            },
            (MemoryAllocation::Cognitive(b), _) => Pool::Banks {
                b: *b,
                left: vec![0; nodes],
                right: vec![0; nodes],
            },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(cfg.stream);
        Engine {
            cfg,
            k,
            rule: cfg.policy.full_memory_rule,
            delay: cfg.classical_delay,
            sites,
            pool,
            rng,
            now: 0.0,
            heap: BinaryHeap::new(),
            seq: 0,
            trace,
            trace_error: None,
            warm: None,
            bins: None,
            held: 0,
            held_since: 0.0,
            queue: vec![Tally::default(); nodes],
            comm: vec![Tally::default(); nodes],
            stored: vec![Tally::default(); k as usize],
            levels: vec![LevelStats::default(); k as usize],
            conservation: vec![Conservation::default(); k as usize],
            swaps: SwapCounts::default(),
            holds: HoldStats::default(),
            delays: Vec::new(),
            delivered: 0,
            window_delivered: 0,
            blocked_generations: 0,
            peak_pool: 0,
            coexistence: 0,
        }
    }

    pub fn run(mut self) -> Result<SimStats> {
        let links = self.cfg.chain.links();
        let gen = Exp::new(links as f64 * self.cfg.chain.p).map_err(|e| Error::SimConfig(e.to_string()))?;
        let (end_time, target) = match self.cfg.horizon {
            Horizon::Time(t) => (Some(t), u64::MAX),
            Horizon::Deliveries(n) => (None, n),
        };
        let warm_time = end_time.map(|t| 0.1 * t);
        let warm_count = target / 10;
        if warm_time.is_none() && warm_count == 0 {
            self.open_window(0.0, None);
        }

        let mut next_gen = gen.sample(&mut self.rng);
        loop {
            let next_outcome = self.heap.peek().map(|p| p.time);
            let outcome_first = matches!(next_outcome, Some(t) if t <= next_gen);
            let t = if outcome_first { next_outcome.unwrap() } else { next_gen };
            if let (Some(tw), None) = (warm_time, self.warm) {
                if t >= tw {
                    self.open_window(tw, end_time);
                }
            }
            if let Some(end) = end_time {
                if t > end {
                    self.now = end;
                    break;
                }
            }
            self.now = t;
            if outcome_first {
                let pending = self.heap.pop().unwrap();
                self.arrive(pending);
            } else {
                let link = self.rng.random_range(0..links);
                self.generate(link);
                next_gen = t + gen.sample(&mut self.rng);
            }
            if self.warm.is_none() && end_time.is_none() && self.delivered >= warm_count {
                self.open_window(self.now, None);
            }
            if self.delivered >= target {
                break;
            }
        }
        self.finish()
    }

    fn open_window(&mut self, t: f64, end: Option<f64>) {
        self.warm = Some(t);
        for tally in self.queue.iter_mut().chain(self.comm.iter_mut()).chain(self.stored.iter_mut()) {
            tally.restart(t);
        }
        let guess = 100.0 / self.cfg.chain.p;
        self.bins = Some(Bins::new(t, end, guess));
        self.held_since = t;
    }

    fn in_window(&self) -> bool {
        self.warm.is_some()
    }

    fn trace(&mut self, kind: &str, node: usize, level: u32, outcome: &str) {
        if let Some(w) = self.trace.as_mut() {
            if self.trace_error.is_none() {
                if let Err(e) = writeln!(w, "{:.16e}\t{kind}\t{node}\t{level}\t{outcome}", self.now) {
                    self.trace_error = Some(e);
                }
            }
        }
    }

    // ---- admission -------------------------------------------------------

    fn cap(&self, level: u32) -> Option<u32> {
        match &self.pool {
            Pool::Reserved(levels) => Some(levels[level as usize]),
            _ => None,
        }
    }

    fn has_room(&self, level: u32, segment: usize) -> bool {
        match self.cap(level) {
            None => true,
            Some(cap) => {
                let (queue, reserved) = self.sites[level as usize][segment / 2].side(segment.is_multiple_of(2));
                (queue.len() as u32 + reserved) < cap
            }
        }
    }

    fn partner_waiting(&self, level: u32, segment: usize) -> bool {
        let (queue, _) = self.sites[level as usize][segment / 2].side(segment % 2 == 1);
        !queue.is_empty()
    }

    /// Whether a swap producing a level-`level + 1` pair on `out_segment` may start.
    /// Without delay the output lands at once, so the whole cascade must fit.
    fn output_fits(&self, level: u32, out_segment: usize) -> bool {
        if level + 1 == self.k || self.rule == FullMemoryRule::DiscardOldest {
            true
        } else if self.delay {
            self.has_room(level + 1, out_segment)
        } else {
            self.admissible(level + 1, out_segment)
        }
    }

    /// Whether a new usable pair at (`level`, `segment`) can be taken in
    /// under the reserved allocation.
    fn admissible(&self, level: u32, segment: usize) -> bool {
        if level == self.k || self.rule == FullMemoryRule::DiscardOldest {
            return true;
        }
        if self.partner_waiting(level, segment) && self.output_fits(level, segment / 2) {
            return true;
        }
        // without delay a waiting partner whose cascade is blocked blocks this pair too
        (self.delay || !self.partner_waiting(level, segment)) && self.has_room(level, segment)
    }

    fn generation_allowed(&self, link: usize) -> bool {
        match &self.pool {
            Pool::Reserved(_) => self.admissible(0, link),
            Pool::Banks { b, left, right } => right[link] < *b && left[link + 1] < *b,
            Pool::Links { b, occupied } => occupied[link] < *b,
        }
    }

    fn pool_change(&mut self, pair: &Pair, delta: i32) {
        let (a, b) = pair.ends();
        let bump = |v: &mut u32| *v = (*v as i64 + delta as i64) as u32;
        match &mut self.pool {
            Pool::Reserved(_) => {}
            Pool::Banks { left, right, .. } => {
                bump(&mut right[a]);
                bump(&mut left[b]);
                self.peak_pool = self.peak_pool.max(right[a]).max(left[b]);
            }
            Pool::Links { occupied, .. } => {
                for slot in &mut occupied[a..b] {
                    bump(slot);
                    self.peak_pool = self.peak_pool.max(*slot);
                }
            }
        }
    }

    // ---- events ----------------------------------------------------------

    fn generate(&mut self, link: usize) {
        if !self.generation_allowed(link) {
            self.blocked_generations += 1;
            self.trace("generate", link, 0, "blocked");
            return;
        }
        self.trace("generate", link, 0, "stored");
        let pair = Pair::fresh(link, self.now);
        if self.k > 0 {
            self.conservation[0].created += 1;
        }
        self.pool_change(&pair, 1);
        let mut work = Vec::new();
        self.place(pair, &mut work);
        self.settle(work);
    }

    fn arrive(&mut self, pending: Pending) {
        let Pending { pair, success, started, reserved, .. } = pending;
        let j = pair.level;
        let (a, b) = pair.ends();
        self.set_held(-1);
        self.comm[a].add(-1, self.now);
        self.comm[b].add(-1, self.now);
        if self.in_window() && started >= self.warm.unwrap() {
            self.holds.count += 1;
            self.holds.total_duration += self.now - started;
        }
        self.swaps.in_flight -= 1;
        if reserved {
            let site = &mut self.sites[j as usize][pair.segment / 2];
            *site.side_mut(pair.segment % 2 == 0).1 -= 1;
        }
        let node = (2 * pair.segment + 1) << (j - 1);
        let mut work = Vec::new();
        if success {
            self.swaps.succeeded += 1;
            self.trace("outcome", node, j, "success");
            let mut pair = pair;
            pair.arrived = self.now;
            if j < self.k {
                self.conservation[j as usize].created += 1;
            }
            self.place(pair, &mut work);
        } else {
            self.swaps.failed += 1;
            self.trace("outcome", node, j, "failure");
            self.pool_change(&pair, -1);
            // the released reservation may unblock the swap below
            work.push((j - 1, pair.segment));
        }
        self.settle(work);
    }

    /// Puts a usable pair into its memory, or delivers it at the top level.
    fn place(&mut self, mut pair: Pair, work: &mut Vec<(u32, usize)>) {
        let j = pair.level;
        if j == self.k {
            self.deliver(pair);
            return;
        }
        let left = pair.segment.is_multiple_of(2);
        let u = pair.segment / 2;
        let full = !self.has_room(j, pair.segment);
        let partner = self.partner_waiting(j, pair.segment);
        if full && !(partner && self.output_fits(j, u)) {
            match self.rule {
                FullMemoryRule::DiscardOldest => {
                    let old = self.sites[j as usize][u].side_mut(left).0.pop_front().unwrap();
                    self.conservation[j as usize].discarded += 1;
                    let node = self.swap_node(j, u);
                    self.trace("discard", node, j, "oldest");
                    self.depart(&old);
                    self.pool_change(&old, -1);
                }
                FullMemoryRule::Block => {
                    // admission rules out this branch; count it rather than overfill
                    self.conservation[j as usize].blocked += 1;
                    self.pool_change(&pair, -1);
                    return;
                }
            }
        }
        pair.arrived = self.now;
        pair.measured = self.in_window();
        let (a, b) = pair.ends();
        self.queue[a].add(1, self.now);
        self.queue[b].add(1, self.now);
        self.stored[j as usize].add(1, self.now);
        if pair.measured {
            self.levels[j as usize].arrivals += 1;
        }
        let site = &mut self.sites[j as usize][u];
        let (queue, reserved) = site.side_mut(left);
        queue.push_back(pair);
        let occupancy = queue.len() as u32 + *reserved;
        let stats = &mut self.levels[j as usize];
        stats.peak_side = stats.peak_side.max(occupancy);
        work.push((j, u));
    }

    fn depart(&mut self, pair: &Pair) {
        let (a, b) = pair.ends();
        let j = pair.level as usize;
        self.queue[a].add(-1, self.now);
        self.queue[b].add(-1, self.now);
        self.stored[j].add(-1, self.now);
        if pair.measured {
            self.levels[j].departures += 1;
            self.levels[j].wait_total += self.now - pair.arrived;
        }
    }

    fn swap_node(&self, level: u32, site: usize) -> usize {
        (2 * site + 1) << level
    }

    fn ready(&self, level: u32, u: usize) -> bool {
        let site = &self.sites[level as usize][u];
        !site.left.is_empty() && !site.right.is_empty() && self.output_fits(level, u)
    }

    fn settle(&mut self, mut work: Vec<(u32, usize)>) {
        while let Some((j, u)) = work.pop() {
            while self.ready(j, u) {
                self.fire(j, u, &mut work);
            }
            let site = &self.sites[j as usize][u];
            if !site.left.is_empty() && !site.right.is_empty() {
                self.coexistence += 1;
            }
        }
    }

    fn fire(&mut self, j: u32, u: usize, work: &mut Vec<(u32, usize)>) {
        let site = &mut self.sites[j as usize][u];
        let a = site.left.pop_front().unwrap();
        let b = site.right.pop_front().unwrap();
        self.depart(&a);
        self.depart(&b);
        self.conservation[j as usize].consumed += 2;
        self.pool_change(&a, -1);
        self.pool_change(&b, -1);
        self.swaps.started += 1;
        let out = Pair::joined(&a, &b, self.now);
        let success = self.rng.random::<f64>() < self.cfg.chain.q;
        let node = self.swap_node(j, u);

        if !self.delay {
            if success {
                self.swaps.succeeded += 1;
                self.trace("swap", node, j + 1, "success");
                if j + 1 < self.k {
                    self.conservation[j as usize + 1].created += 1;
                }
                self.pool_change(&out, 1);
                self.place(out, work);
            } else {
                self.swaps.failed += 1;
                self.trace("swap", node, j + 1, "failure");
            }
            return;
        }

        self.trace("swap", node, j + 1, "pending");
        let (left_end, right_end) = out.ends();
        self.set_held(1);
        self.comm[left_end].add(1, self.now);
        self.comm[right_end].add(1, self.now);
        let reserved = j + 1 < self.k && self.rule == FullMemoryRule::Block && self.cap(j + 1).is_some();
        if reserved {
            let site = &mut self.sites[j as usize + 1][u / 2];
            *site.side_mut(u.is_multiple_of(2)).1 += 1;
        }
        self.pool_change(&out, 1);
        self.swaps.in_flight += 1;
        self.seq += 1;
        let hold = (1u64 << j) as f64 * self.cfg.chain.link_delay();
        self.heap.push(Pending {
            time: self.now + hold,
            seq: self.seq,
            pair: out,
            success,
            started: self.now,
            reserved,
        });
        // freed input slots may unblock the swaps feeding this level
        if j > 0 {
            work.push((j - 1, 2 * u));
            work.push((j - 1, 2 * u + 1));
        }
    }

    fn deliver(&mut self, pair: Pair) {
        self.delivered += 1;
        self.trace("deliver", 0, self.k, "delivered");
        self.pool_change(&pair, -1);
        if self.in_window() {
            self.window_delivered += 1;
            self.bins.as_mut().unwrap().delivery(self.now);
            let t = self.now;
            self.delays.push(DelaySample {
                max_residence: pair.max_internal.max(t - pair.left_born).max(t - pair.right_born),
                span: t - pair.earliest,
            });
        }
    }

    fn set_held(&mut self, delta: i32) {
        if let Some(bins) = self.bins.as_mut() {
            bins.integrate(self.held as f64, self.held_since, self.now);
        }
        self.held_since = self.now;
        self.held = (self.held as i64 + 2 * delta as i64) as u32;
    }

    fn finish(mut self) -> Result<SimStats> {
        if let Some(e) = self.trace_error.take() {
            return Err(e.into());
        }
        let end = self.now;
        self.set_held(0);
        for tally in self.queue.iter_mut().chain(self.comm.iter_mut()).chain(self.stored.iter_mut()) {
            tally.flush(end);
        }
        let start = self.warm.unwrap_or(end);
        let window = end - start;
        let per = |t: &Tally| if window > 0.0 { t.area / window } else { 0.0 };
        let links = self.cfg.chain.links() as f64;
        let queue_occupancy: Vec<f64> = self.queue.iter().map(per).collect();
        let comm_occupancy: Vec<f64> = self.comm.iter().map(per).collect();
        for (j, level) in self.levels.iter_mut().enumerate() {
            level.mean_queue = per(&self.stored[j]);
        }
        for (j, site_row) in self.sites.iter().enumerate() {
            self.conservation[j].alive = site_row.iter().map(|s| (s.left.len() + s.right.len()) as u64).sum();
        }

        let rate = if window > 0.0 { self.window_delivered as f64 / window } else { 0.0 };
        let batches = self.bins.as_mut().and_then(|b| b.batches(end));
        let (rate_half_width, comm_mem_half_width) = match &batches {
            Some(batches) => (
                half_width(batches.iter().map(|b| b.0)),
                half_width(batches.iter().map(|b| b.1 / links)),
            ),
            None => (f64::INFINITY, f64::INFINITY),
        };

        Ok(SimStats {
            delivered: self.delivered,
            elapsed: end,
            window_start: start,
            window_delivered: self.window_delivered,
            rate,
            rate_half_width,
            queue_mem_avg: queue_occupancy.iter().sum::<f64>() / links,
            comm_mem_avg: comm_occupancy.iter().sum::<f64>() / links,
            queue_occupancy,
            comm_occupancy,
            comm_mem_half_width,
            delays: self.delays,
            levels: self.levels,
            conservation: self.conservation,
            swaps: self.swaps,
            holds: self.holds,
            blocked_generations: self.blocked_generations,
            peak_pool: self.peak_pool,
            coexistence: self.coexistence,
        })
    }
}
