use std::fmt;

use crate::error::{Error, Result};

/// Default bound on the number of enumerated states.
pub const DEFAULT_STATE_CAP: usize = 2_000_000;

/// Recursive chain state.
///
/// A two-link chain holds `|s|` level-0 pairs on one side of its middle
/// node: `s > 0` for pairs on the left link, `s < 0` for the right link. A
/// chain of `2^n` links is its two halves plus the number of level-`(n-1)`
/// pairs waiting at the middle node on each side, at most one side nonzero.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RepeaterState {
    Base(i32),
    Split {
        left: Box<RepeaterState>,
        right: Box<RepeaterState>,
        e_left: u32,
        e_right: u32,
    },
}

impl RepeaterState {
    pub fn level(&self) -> u32 {
        match self {
            RepeaterState::Base(_) => 1,
            RepeaterState::Split { left, .. } => left.level() + 1,
        }
    }

    /// Whether a single generation event can complete an end-to-end pair.
    pub fn swappable(&self) -> bool {
        match self {
            RepeaterState::Base(s) => *s != 0,
            RepeaterState::Split { left, right, e_left, e_right } => {
                (*e_left > 0 && right.swappable()) || (*e_right > 0 && left.swappable())
            }
        }
    }

    /// Builds the tree form of a flat state (see [`StateSpace`]).
    fn from_flat(flat: &[i32]) -> Self {
        if flat.len() == 1 {
            return RepeaterState::Base(flat[0]);
        }
        let half = (flat.len() - 1) / 2;
        let e = flat[flat.len() - 1];
        RepeaterState::Split {
            left: Box::new(Self::from_flat(&flat[..half])),
            right: Box::new(Self::from_flat(&flat[half..2 * half])),
            e_left: e.max(0) as u32,
            e_right: (-e).max(0) as u32,
        }
    }
}

impl fmt::Display for RepeaterState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepeaterState::Base(s) => write!(f, "{s}"),
            RepeaterState::Split { left, right, e_left, e_right } => {
                write!(f, "({left},{right},{e_left},{e_right})")
            }
        }
    }
}

/// Indexed state space of a `2^n`-link chain under a reserved allocation.
///
/// States are stored flat, one signed counter per swap node in post-order
/// (left half, right half, middle). A middle counter `e > 0` is `E^L = e`,
/// `e < 0` is `E^R = -e`. Indices follow lexicographic order on
/// `(S^L, S^R, E^L, E^R)`; the space is a full product so the index is a
/// mixed-radix number.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    n: u32,
    caps: Vec<u32>,
    /// `sizes[m]` = number of states of a `2^m`-link sub-chain.
    sizes: Vec<u64>,
    /// Level of the pairs counted at each flat position.
    slot_level: Vec<u32>,
    /// Flat position of the counter kept by each node (`usize::MAX` for end nodes).
    slot_of_node: Vec<usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.sizes[self.n as usize] as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn levels(&self) -> u32 {
        self.n
    }

    pub fn caps(&self) -> &[u32] {
        &self.caps
    }

    pub fn links(&self) -> usize {
        1 << self.n
    }

    /// Number of flat counters, `2^n - 1`.
    pub fn width(&self) -> usize {
        self.slot_level.len()
    }

    /// Flat position of the counter for level-`level` pairs in segment
    /// `segment`, and whether that segment is the left input.
    pub(crate) fn slot(&self, level: u32, segment: usize) -> (usize, bool) {
        let node = (2 * (segment / 2) + 1) << level;
        (self.slot_of_node[node], segment.is_multiple_of(2))
    }

    pub(crate) fn cap_at(&self, pos: usize) -> u32 {
        self.caps[self.slot_level[pos] as usize]
    }

    fn e_index(e: i32, cap: u32) -> u64 {
        match e {
            0 => 0,
            e if e < 0 => (-e) as u64,
            e => cap as u64 + e as u64,
        }
    }

    fn e_value(index: u64, cap: u32) -> i32 {
        let cap = cap as u64;
        if index == 0 {
            0
        } else if index <= cap {
            -(index as i32)
        } else {
            (index - cap) as i32
        }
    }

    pub fn encode(&self, flat: &[i32]) -> usize {
        self.encode_sub(self.n, flat) as usize
    }

    fn encode_sub(&self, m: u32, flat: &[i32]) -> u64 {
        let cap = self.caps[m as usize - 1];
        if m == 1 {
            return (flat[0] + cap as i32) as u64;
        }
        let half = flat.len() / 2;
        let left = self.encode_sub(m - 1, &flat[..half]);
        let right = self.encode_sub(m - 1, &flat[half..2 * half]);
        let e = Self::e_index(flat[2 * half], cap);
        (left * self.sizes[m as usize - 1] + right) * (2 * cap as u64 + 1) + e
    }

    pub fn decode(&self, index: usize) -> Vec<i32> {
        let mut flat = vec![0; self.width()];
        self.decode_sub(self.n, index as u64, &mut flat);
        flat
    }

    fn decode_sub(&self, m: u32, index: u64, flat: &mut [i32]) {
        let cap = self.caps[m as usize - 1];
        if m == 1 {
            flat[0] = index as i32 - cap as i32;
            return;
        }
        let radix = 2 * cap as u64 + 1;
        let e = Self::e_value(index % radix, cap);
        let rest = index / radix;
        let size = self.sizes[m as usize - 1];
        let half = flat.len() / 2;
        self.decode_sub(m - 1, rest / size, &mut flat[..half]);
        self.decode_sub(m - 1, rest % size, &mut flat[half..2 * half]);
        flat[2 * half] = e;
    }

    pub fn state(&self, index: usize) -> RepeaterState {
        RepeaterState::from_flat(&self.decode(index))
    }

    pub fn states(&self) -> impl Iterator<Item = RepeaterState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    pub(crate) fn swappable_flat(flat: &[i32]) -> bool {
        if flat.len() == 1 {
            return flat[0] != 0;
        }
        let half = flat.len() / 2;
        let e = flat[2 * half];
        (e > 0 && Self::swappable_flat(&flat[half..2 * half])) || (e < 0 && Self::swappable_flat(&flat[..half]))
    }
}

fn layout(m: u32, offset: usize, slot_level: &mut Vec<u32>, slot_of_node: &mut [usize]) {
    if m == 1 {
        slot_of_node[offset + 1] = slot_level.len();
        slot_level.push(0);
        return;
    }
    let half = 1usize << (m - 1);
    layout(m - 1, offset, slot_level, slot_of_node);
    layout(m - 1, offset + half, slot_level, slot_of_node);
    slot_of_node[offset + half] = slot_level.len();
    slot_level.push(m - 1);
}

/// Enumerates the states of a `2^n`-link chain with reservations
/// `caps[0..n]`, refusing spaces larger than `cap` states.
pub fn enumerate_states(n: u32, caps: &[u32], cap: usize) -> Result<StateSpace> {
    if n == 0 {
        return Err(Error::NonPositive { name: "n", value: 0.0 });
    }
    if caps.len() < n as usize {
        return Err(Error::DimensionMismatch {
            expected: n as usize,
            found: caps.len(),
        });
    }
    if caps[..n as usize].contains(&0) {
        return Err(Error::NonPositive { name: "B_i", value: 0.0 });
    }
    let mut sizes = vec![1u128];
    for m in 1..=n {
        let radix = 2 * caps[m as usize - 1] as u128 + 1;
        let prev = sizes[m as usize - 1];
        let size = if m == 1 { radix } else { prev.saturating_mul(prev).saturating_mul(radix) };
        if size > cap as u128 {
            return Err(Error::StateSpaceCap { states: size, cap });
        }
        sizes.push(size);
    }
    let links = 1usize << n;
    let mut slot_level = Vec::with_capacity(links - 1);
    let mut slot_of_node = vec![usize::MAX; links + 1];
    layout(n, 0, &mut slot_level, &mut slot_of_node);
    Ok(StateSpace {
        n,
        caps: caps[..n as usize].to_vec(),
        sizes: sizes.into_iter().map(|s| s as u64).collect(),
        slot_level,
        slot_of_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_counts() {
        assert_eq!(enumerate_states(1, &[1], DEFAULT_STATE_CAP).unwrap().len(), 3);
        assert_eq!(enumerate_states(1, &[2], DEFAULT_STATE_CAP).unwrap().len(), 5);
        // |S_1|^2 * |{(E^L, E^R) : E^L E^R = 0, each <= B_1}| = 3 * 3 * 3
        assert_eq!(enumerate_states(2, &[1, 1], DEFAULT_STATE_CAP).unwrap().len(), 27);
        assert_eq!(enumerate_states(2, &[2, 1], DEFAULT_STATE_CAP).unwrap().len(), 75);
        assert_eq!(enumerate_states(3, &[1, 1, 1], DEFAULT_STATE_CAP).unwrap().len(), 2187);
    }

    #[test]
    fn cap_exceeded() {
        let err = enumerate_states(4, &[2, 2, 2, 2], DEFAULT_STATE_CAP).unwrap_err();
        assert!(matches!(err, Error::StateSpaceCap { .. }));
        assert!(enumerate_states(2, &[1, 1], 26).is_err());
        assert!(enumerate_states(2, &[1], 100).is_err());
    }

    #[test]
    fn base_ordering_and_text() {
        let space = enumerate_states(1, &[1], DEFAULT_STATE_CAP).unwrap();
        let text: Vec<String> = space.states().map(|s| s.to_string()).collect();
        assert_eq!(text, ["-1", "0", "1"]);
    }

    #[test]
    fn lexicographic_and_invariants() {
        let space = enumerate_states(2, &[2, 1], DEFAULT_STATE_CAP).unwrap();
        let states: Vec<RepeaterState> = space.states().collect();
        assert!(states.windows(2).all(|w| w[0] < w[1]));
        for s in &states {
            if let RepeaterState::Split { e_left, e_right, .. } = s {
                assert_eq!(e_left * e_right, 0);
                assert!(*e_left <= 1 && *e_right <= 1);
            }
        }
        assert_eq!(states[0].to_string(), "(-2,-2,0,0)");
        assert_eq!(states[1].to_string(), "(-2,-2,0,1)");
        assert_eq!(states[2].to_string(), "(-2,-2,1,0)");
    }

    #[test]
    fn encode_decode_roundtrip() {
        let space = enumerate_states(3, &[1, 2, 1], DEFAULT_STATE_CAP).unwrap();
        for i in (0..space.len()).step_by(97) {
            assert_eq!(space.encode(&space.decode(i)), i);
        }
    }

    #[test]
    fn slots_map_segments_to_swap_nodes() {
        let space = enumerate_states(2, &[1, 1], DEFAULT_STATE_CAP).unwrap();
        // post-order: node 1, node 3, node 2
        assert_eq!(space.slot(0, 0), (0, true));
        assert_eq!(space.slot(0, 1), (0, false));
        assert_eq!(space.slot(0, 2), (1, true));
        assert_eq!(space.slot(0, 3), (1, false));
        assert_eq!(space.slot(1, 0), (2, true));
        assert_eq!(space.slot(1, 1), (2, false));
    }
}
