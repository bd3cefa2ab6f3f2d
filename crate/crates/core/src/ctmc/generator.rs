use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{validate, ChainConfig, FullMemoryRule, MemoryAllocation, Protocol};

use super::state::{enumerate_states, StateSpace};

/// One arc of the generator: `rate` from `from` to `to`, optionally carrying
/// an end-to-end delivery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub delivers: bool,
}

/// Transition rates restricted to the states reachable from the empty chain.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub space: StateSpace,
    /// Reachable state indices (into `space`), ascending; arcs use positions in this list.
    pub reachable: Vec<usize>,
    pub transitions: Vec<Transition>,
}

impl GeneratorMatrix {
    pub fn len(&self) -> usize {
        self.reachable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reachable.is_empty()
    }

    pub fn exit_rates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for t in &self.transitions {
            out[t.from] += t.rate;
        }
        out
    }

    /// Arcs leaving a state given by its index in the full state space.
    pub fn outgoing(&self, state: usize) -> Vec<Transition> {
        match self.reachable.binary_search(&state) {
            Ok(local) => self
                .transitions
                .iter()
                .filter(|t| t.from == local)
                .map(|t| Transition {
                    from: self.reachable[t.from],
                    to: self.reachable[t.to],
                    ..*t
                })
                .collect(),
            Err(_) => Vec::new(),
        }
    }
}

struct Blocked;

/// Outcome distribution of one generation event.
struct Cascade<'a> {
    space: &'a StateSpace,
    q: f64,
    rule: FullMemoryRule,
    out: Vec<(f64, Vec<i32>, bool)>,
}

impl Cascade<'_> {
    /// Places a new pair of `level` on `segment`, swapping immediately if the
    /// partner pair is waiting.
    fn place(&mut self, flat: &mut Vec<i32>, level: u32, segment: usize, weight: f64) -> std::result::Result<(), Blocked> {
        if level == self.space.levels() {
            self.out.push((weight, flat.clone(), true));
            return Ok(());
        }
        let (pos, is_left) = self.space.slot(level, segment);
        let step = if is_left { 1 } else { -1 };
        let counter = flat[pos];
        let partner_waiting = if is_left { counter < 0 } else { counter > 0 };
        if partner_waiting {
            flat[pos] += step;
            if self.q < 1.0 {
                self.out.push((weight * (1.0 - self.q), flat.clone(), false));
            }
            let result = self.place(flat, level + 1, segment / 2, weight * self.q);
            flat[pos] -= step;
            return result;
        }
        if counter.unsigned_abs() < self.space.cap_at(pos) {
            flat[pos] += step;
            self.out.push((weight, flat.clone(), false));
            flat[pos] -= step;
            Ok(())
        } else {
            match self.rule {
                FullMemoryRule::Block => Err(Blocked),
                // the newest pair replaces the oldest; counts are unchanged
                FullMemoryRule::DiscardOldest => {
                    self.out.push((weight, flat.clone(), false));
                    Ok(())
                }
            }
        }
    }
}

/// Reserved levels for an exact solve; the pooled protocols are only
/// supported on two-link chains with `B <= 2`, where they coincide with a
/// reservation of `B`.
fn exact_levels(config: &ChainConfig, alloc: &MemoryAllocation, protocol: Protocol) -> Result<Vec<u32>> {
    validate(config, alloc)?;
    if config.k == 0 {
        return Err(Error::Unsupported("single-link chain has no swap dynamics".into()));
    }
    match (protocol, alloc) {
        (Protocol::ModifiedDoubling, MemoryAllocation::Reserved(levels)) => Ok(levels.clone()),
        (Protocol::ModifiedDoubling, _) => Err(Error::AllocationKind("modified doubling needs a reserved allocation")),
        (_, MemoryAllocation::Cognitive(b)) if config.k == 1 && *b <= 2 => Ok(vec![*b]),
        (_, MemoryAllocation::Cognitive(_)) => Err(Error::Unsupported(format!(
            "{} exact solve only for k = 1 and B <= 2",
            protocol.label()
        ))),
        (_, MemoryAllocation::Reserved(_)) => Err(Error::AllocationKind("pooled protocols need a cognitive allocation")),
    }
}

pub fn build_generator(
    config: &ChainConfig,
    alloc: &MemoryAllocation,
    protocol: Protocol,
    rule: FullMemoryRule,
    state_cap: usize,
) -> Result<GeneratorMatrix> {
    let levels = exact_levels(config, alloc, protocol)?;
    let space = enumerate_states(config.k, &levels, state_cap)?;
    let links = space.links();

    let mut index_of: HashMap<usize, usize> = HashMap::new();
    let mut reachable = Vec::new();
    let mut queue = VecDeque::new();
    let start = space.encode(&vec![0; space.width()]);
    index_of.insert(start, 0);
    reachable.push(start);
    queue.push_back(start);

    let mut raw: Vec<(usize, usize, f64, bool)> = Vec::new();
    while let Some(state) = queue.pop_front() {
        let from = index_of[&state];
        let mut flat = space.decode(state);
        let mut arcs: Vec<(usize, f64, bool)> = Vec::new();
        for link in 0..links {
            let mut cascade = Cascade { space: &space, q: config.q, rule, out: Vec::new() };
            if cascade.place(&mut flat, 0, link, 1.0).is_err() {
                continue;
            }
            for (weight, next, delivers) in cascade.out {
                if weight == 0.0 {
                    continue;
                }
                let to = space.encode(&next);
                if to == state && !delivers {
                    continue;
                }
                match arcs.iter_mut().find(|(t, _, d)| *t == to && *d == delivers) {
                    Some(arc) => arc.1 += weight * config.p,
                    None => arcs.push((to, weight * config.p, delivers)),
                }
            }
        }
        for (to, rate, delivers) in arcs {
            let to_local = *index_of.entry(to).or_insert_with(|| {
                reachable.push(to);
                queue.push_back(to);
                reachable.len() - 1
            });
            raw.push((from, to_local, rate, delivers));
        }
    }

    // renumber so that local indices follow the global ordering
    let mut order: Vec<usize> = (0..reachable.len()).collect();
    order.sort_by_key(|&i| reachable[i]);
    let mut rank = vec![0; reachable.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut transitions: Vec<Transition> = raw
        .into_iter()
        .map(|(f, t, rate, delivers)| Transition { from: rank[f], to: rank[t], rate, delivers })
        .collect();
    transitions.sort_by_key(|a| (a.from, a.to, a.delivers));
    reachable.sort_unstable();

    Ok(GeneratorMatrix { space, reachable, transitions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::state::DEFAULT_STATE_CAP;

    fn gen(k: u32, levels: Vec<u32>, q: f64, rule: FullMemoryRule) -> GeneratorMatrix {
        let cfg = ChainConfig::new(k, 1.0, q).unwrap();
        build_generator(&cfg, &MemoryAllocation::Reserved(levels), Protocol::ModifiedDoubling, rule, DEFAULT_STATE_CAP).unwrap()
    }

    #[test]
    fn empty_two_link_chain() {
        let g = gen(1, vec![1], 0.3, FullMemoryRule::Block);
        // states -1, 0, +1 at indices 0, 1, 2
        let arcs = g.outgoing(1);
        assert_eq!(arcs.len(), 2);
        assert!(arcs.iter().all(|a| a.rate == 1.0 && !a.delivers));
        let mut targets: Vec<usize> = arcs.iter().map(|a| a.to).collect();
        targets.sort();
        assert_eq!(targets, [0, 2]);
    }

    #[test]
    fn full_left_memory() {
        let g = gen(1, vec![1], 0.3, FullMemoryRule::Block);
        let arcs = g.outgoing(2);
        assert_eq!(arcs.len(), 2);
        let success = arcs.iter().find(|a| a.delivers).unwrap();
        let failure = arcs.iter().find(|a| !a.delivers).unwrap();
        assert_eq!(success.to, 1);
        assert_eq!(failure.to, 1);
        assert!((success.rate - 0.3).abs() < 1e-15);
        assert!((failure.rate - 0.7).abs() < 1e-15);
    }

    #[test]
    fn full_two_memories() {
        let g = gen(1, vec![2], 0.4, FullMemoryRule::Block);
        // -2..=2 at indices 0..=4; +2 is index 4, +1 is index 3
        let arcs = g.outgoing(4);
        assert_eq!(arcs.len(), 2);
        assert!(arcs.iter().all(|a| a.to == 3));
        let total: f64 = arcs.iter().map(|a| a.rate).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cascade_reaches_delivery() {
        // left half holds a level-0 pair, a level-1 pair waits on the right
        let g = gen(2, vec![1, 1], 0.5, FullMemoryRule::Block);
        let flat = [1, 0, -1];
        let state = g.space.encode(&flat);
        let arcs = g.outgoing(state);
        let delivery: f64 = arcs.iter().filter(|a| a.delivers).map(|a| a.rate).sum();
        assert!((delivery - 0.25).abs() < 1e-15);
        // level-0 swap fails: one arc; level-0 succeeds, level-1 fails: another
        let to_a = g.space.encode(&[0, 0, -1]);
        let to_b = g.space.encode(&[0, 0, 0]);
        let rate = |to| arcs.iter().filter(|a| a.to == to && !a.delivers).map(|a| a.rate).sum::<f64>();
        assert!((rate(to_a) - 0.5).abs() < 1e-15);
        assert!((rate(to_b) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn blocking_removes_generation() {
        let g = gen(2, vec![1, 1], 0.5, FullMemoryRule::Block);
        // E^L full, left sub-chain holds a left pair: right-link generation blocked
        let state = g.space.encode(&[1, 0, 1]);
        let arcs = g.outgoing(state);
        let blocked_target = g.space.encode(&[0, 0, 1]);
        assert!(arcs.iter().all(|a| a.to != blocked_target));

        let g = gen(2, vec![1, 1], 0.5, FullMemoryRule::DiscardOldest);
        let arcs = g.outgoing(state);
        let rate: f64 = arcs.iter().filter(|a| a.to == blocked_target).map(|a| a.rate).sum();
        assert!((rate - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_states_reachable() {
        for rule in [FullMemoryRule::Block, FullMemoryRule::DiscardOldest] {
            let g = gen(2, vec![2, 1], 0.2, rule);
            assert_eq!(g.len(), g.space.len());
            assert!(g.transitions.iter().all(|t| t.from != t.to && t.rate > 0.0));
        }
    }

    #[test]
    fn unsupported_pairings() {
        let cfg = ChainConfig::new(2, 1.0, 0.5).unwrap();
        let err = build_generator(&cfg, &MemoryAllocation::Cognitive(1), Protocol::Cognitive, FullMemoryRule::Block, DEFAULT_STATE_CAP);
        assert!(matches!(err, Err(Error::Unsupported(_))));
        let cfg = ChainConfig::new(1, 1.0, 0.5).unwrap();
        assert!(build_generator(&cfg, &MemoryAllocation::Cognitive(2), Protocol::Cognitive, FullMemoryRule::Block, DEFAULT_STATE_CAP).is_ok());
        assert!(build_generator(&cfg, &MemoryAllocation::Cognitive(1), Protocol::ModifiedDoubling, FullMemoryRule::Block, DEFAULT_STATE_CAP).is_err());
    }
}
