//! Small-q limits of the stationary distributions.
//!
//! As `q -> 0` swaps become rare relative to generation, each sub-chain
//! mixes before its parent changes, and the stationary law factorizes over
//! the recursive state.

use std::collections::HashMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::analytic::cognitive_f_table;
use crate::error::{Error, Result};

use super::solve::StationaryDistribution;
use super::state::{enumerate_states, RepeaterState, StateSpace, DEFAULT_STATE_CAP};

/// Exact limit for reserved memories: the two-link base is uniform over its
/// `2B_0 + 1` signed states and every level multiplies by `1/(2B_{m-1} + 1)`.
pub fn limiting_doubling_exact(n: u32, levels: &[u32]) -> Result<(StateSpace, Vec<BigRational>)> {
    let space = enumerate_states(n, levels, DEFAULT_STATE_CAP)?;
    let width = space.width();
    let mass = (0..width).fold(BigRational::one(), |acc, pos| {
        acc * BigRational::new(BigInt::one(), BigInt::from(2 * space.cap_at(pos) as u64 + 1))
    });
    let probabilities = vec![mass; space.len()];
    Ok((space, probabilities))
}

pub fn limiting_distribution_doubling(n: u32, levels: &[u32]) -> Result<StationaryDistribution> {
    let (space, exact) = limiting_doubling_exact(n, levels)?;
    let probabilities = exact.iter().map(|p| p.to_f64().unwrap_or(0.0)).collect();
    Ok(StationaryDistribution { space, probabilities, residual: 0.0 })
}

/// Limit distribution of the virtual-occupant pooled method.
#[derive(Debug, Clone)]
pub struct CognitiveDistribution {
    pub states: Vec<RepeaterState>,
    pub probabilities: Vec<f64>,
}

impl CognitiveDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn swappable_mass(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.probabilities)
            .filter(|(s, _)| s.swappable())
            .map(|(_, p)| p)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "state,probability")?;
        for (s, p) in self.states.iter().zip(&self.probabilities) {
            writeln!(out, "\"{s}\",{p:.16e}")?;
        }
        Ok(())
    }
}

/// Recursion for the pooled method with `b` memories per link.
///
/// Each of the `e` level-`(n-1)` pairs waiting at the middle node occupies a
/// slot on every link of its half, so that half runs with `b - e` memories.
/// The middle counter is a birth-death chain whose up-rate from `e` is the
/// production rate of a half with `b - e` memories and whose down-rate is
/// that of a half with `b`, giving weights
/// `w(e) = Π_{j<e} f[b-j][n-1] / f[b][n-1]^e` normalized by
/// `1 + 2 Σ_{e=1..b} w(e)`.
pub fn limiting_distribution_cognitive(n: u32, b: u32) -> Result<CognitiveDistribution> {
    if n == 0 {
        return Err(Error::NonPositive { name: "n", value: 0.0 });
    }
    if b == 0 {
        return Err(Error::NonPositive { name: "B", value: 0.0 });
    }
    let f = cognitive_f_table(b, n);
    let mut memo = HashMap::new();
    let mut pairs = pooled(n, b, &f, &mut memo);
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    let (states, probabilities) = pairs.into_iter().unzip();
    Ok(CognitiveDistribution { states, probabilities })
}

type Memo = HashMap<(u32, u32), Vec<(RepeaterState, f64)>>;

fn pooled(n: u32, cap: u32, f: &[Vec<f64>], memo: &mut Memo) -> Vec<(RepeaterState, f64)> {
    if let Some(hit) = memo.get(&(n, cap)) {
        return hit.clone();
    }
    let result = if n == 1 {
        let mass = 1.0 / (2 * cap + 1) as f64;
        (-(cap as i32)..=cap as i32).map(|s| (RepeaterState::Base(s), mass)).collect()
    } else {
        let below = (n - 1) as usize;
        let weights: Vec<f64> = (0..=cap)
            .map(|e| {
                (0..e).fold(1.0, |acc, j| acc * f[(cap - j) as usize][below] / f[cap as usize][below])
            })
            .collect();
        let norm = 1.0 + 2.0 * weights[1..].iter().sum::<f64>();
        let mut out = Vec::new();
        let mut sides = vec![(0u32, 0u32)];
        sides.extend((1..=cap).map(|e| (0, e)));
        sides.extend((1..=cap).map(|e| (e, 0)));
        for (e_left, e_right) in sides {
            let w = weights[e_left.max(e_right) as usize] / norm;
            let left = pooled(n - 1, cap - e_left, f, memo);
            let right = pooled(n - 1, cap - e_right, f, memo);
            for (sl, pl) in &left {
                for (sr, pr) in &right {
                    out.push((
                        RepeaterState::Split {
                            left: Box::new(sl.clone()),
                            right: Box::new(sr.clone()),
                            e_left,
                            e_right,
                        },
                        pl * pr * w,
                    ));
                }
            }
        }
        out
    };
    memo.insert((n, cap), result.clone());
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{cognitive_f, swappable_mass_exact};

    #[test]
    fn doubling_base_is_uniform() {
        let d = limiting_distribution_doubling(1, &[1]).unwrap();
        assert!(d.probabilities.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let d = limiting_distribution_doubling(2, &[1, 1]).unwrap();
        assert_eq!(d.probabilities.len(), 27);
        assert!(d.probabilities.iter().all(|p| (p - 1.0 / 27.0).abs() < 1e-15));
    }

    #[test]
    fn doubling_swappable_mass_exact() {
        for levels in [vec![1], vec![2], vec![1, 1], vec![2, 1], vec![1, 3], vec![1, 1, 1], vec![2, 1, 1]] {
            let n = levels.len() as u32;
            let (space, probs) = limiting_doubling_exact(n, &levels).unwrap();
            let total: BigRational = probs.iter().cloned().sum();
            assert_eq!(total, BigRational::one());
            let swappable: BigRational = probs
                .iter()
                .enumerate()
                .filter(|(i, _)| StateSpace::swappable_flat(&space.decode(*i)))
                .map(|(_, p)| p.clone())
                .sum();
            assert_eq!(swappable, swappable_mass_exact(&levels), "{levels:?}");
        }
    }

    #[test]
    fn cognitive_base_case() {
        let d = limiting_distribution_cognitive(1, 2).unwrap();
        assert_eq!(d.states.len(), 5);
        assert!(d.probabilities.iter().all(|p| (p - 0.2).abs() < 1e-15));
        assert!((d.swappable_mass() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn cognitive_single_memory_mass() {
        for n in 1..=4 {
            let d = limiting_distribution_cognitive(n, 1).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-10);
            assert!((d.swappable_mass() - (2.0f64 / 3.0).powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn cognitive_mass_matches_recursion() {
        for b in 1..=3 {
            for n in 1..=3 {
                let d = limiting_distribution_cognitive(n, b).unwrap();
                assert!((d.total() - 1.0).abs() < 1e-10);
                assert!((d.swappable_mass() - cognitive_f(b, n)).abs() < 1e-12, "b={b} n={n}");
                assert!(d.states.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn cognitive_pool_shrinks_under_waiting_pairs() {
        let d = limiting_distribution_cognitive(2, 2).unwrap();
        for s in &d.states {
            if let RepeaterState::Split { left, right, e_left, e_right } = s {
                let bound = |st: &RepeaterState| match st {
                    RepeaterState::Base(x) => x.unsigned_abs(),
                    _ => unreachable!(),
                };
                assert!(bound(left) <= 2 - e_left);
                assert!(bound(right) <= 2 - e_right);
            }
        }
    }
}
