//! Closed-form rate bounds, memory footprints and delays.
//!
//! Rates are in delivered end-to-end pairs per unit time, memories in qubits
//! per node, delays in time units.

use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_gamma, ChainConfig, MemoryAllocation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateKind {
    DoublingLowerBound,
    CognitiveLowerBound,
    OptimalInfiniteMemory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBound {
    pub value: f64,
    pub kind: RateKind,
}

/// `2B/(2B+1)`: long-run fraction of time a two-link segment with `B`
/// memories per side holds a pair ready to swap.
pub fn level_factor(b: u32) -> f64 {
    let two_b = 2.0 * b as f64;
    two_b / (two_b + 1.0)
}

fn level_factor_exact(b: u32) -> BigRational {
    let two_b = BigInt::from(2u64 * b as u64);
    BigRational::new(two_b.clone(), two_b + 1)
}

/// `Π_i 2B_i/(2B_i+1)` in exact arithmetic.
pub fn swappable_mass_exact(levels: &[u32]) -> BigRational {
    levels
        .iter()
        .fold(BigRational::one(), |acc, &b| acc * level_factor_exact(b))
}

pub fn swappable_mass(levels: &[u32]) -> f64 {
    levels.iter().map(|&b| level_factor(b)).product()
}

/// Small-q rate of the modified doubling protocol, `p q^k Π 2B_i/(2B_i+1)`.
pub fn rate_lower_bound_doubling(config: &ChainConfig, alloc: &MemoryAllocation) -> Result<RateBound> {
    let levels = alloc
        .levels()
        .ok_or(Error::AllocationKind("modified doubling needs a reserved allocation"))?;
    if levels.len() != config.k as usize {
        return Err(Error::DimensionMismatch {
            expected: config.k as usize,
            found: levels.len(),
        });
    }
    Ok(RateBound {
        value: config.p * config.q.powi(config.k as i32) * swappable_mass(levels),
        kind: RateKind::DoublingLowerBound,
    })
}

/// Rate with infinite memories, `p q^k`.
pub fn rate_optimal(p: f64, q: f64, k: u32) -> RateBound {
    RateBound {
        value: p * q.powi(k as i32),
        kind: RateKind::OptimalInfiniteMemory,
    }
}

/// `p (2Bq/(2B+1))^k`.
pub fn rate_constant_alloc(p: f64, q: f64, b: u32, k: u32) -> RateBound {
    RateBound {
        value: p * (level_factor(b) * q).powi(k as i32),
        kind: RateKind::DoublingLowerBound,
    }
}

/// Average queuing memory per node for a reserved allocation,
/// `(1/2^k) Σ_i 2B_i (2^(k-i) - 1)`.
pub fn avg_memory_reserved(levels: &[f64]) -> f64 {
    let k = levels.len() as i32;
    let total: f64 = levels
        .iter()
        .enumerate()
        .map(|(i, &b)| 2.0 * b * (2f64.powi(k - i as i32) - 1.0))
        .sum();
    total / 2f64.powi(k)
}

pub fn avg_memory_constant(b: u32, k: u32) -> f64 {
    avg_memory_reserved(&vec![b as f64; k as usize])
}

/// Distance-independent bound `2 gamma^i0 / (1 - gamma/2)` on the average
/// memory of the exponential allocation.
pub fn avg_memory_exponential_bound(gamma: f64, i0: u32) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(2.0 * gamma.powi(i0 as i32) / (1.0 - gamma / 2.0))
}

/// Exact average memory with real-valued `B_i = gamma^(i+i0)`.
pub fn avg_memory_exponential(gamma: f64, i0: u32, k: u32) -> Result<f64> {
    check_gamma(gamma)?;
    let levels: Vec<f64> = (0..k).map(|i| gamma.powi((i + i0) as i32)).collect();
    Ok(avg_memory_reserved(&levels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxMemory {
    /// `2 Σ_i gamma^(i+i0)`, the memory of the busiest node.
    pub exact: f64,
    /// `(2 gamma^i0/(gamma-1)) K^(log2 gamma)`.
    pub bound: f64,
}

pub fn max_memory_exponential(gamma: f64, i0: u32, k: u32) -> Result<MaxMemory> {
    check_gamma(gamma)?;
    let g0 = gamma.powi(i0 as i32);
    let exact = 2.0 * g0 * (gamma.powi(k as i32) - 1.0) / (gamma - 1.0);
    let links = 2f64.powi(k as i32);
    let bound = 2.0 * g0 / (gamma - 1.0) * links.powf(gamma.log2());
    Ok(MaxMemory { exact, bound })
}

/// Truncation tolerance for the infinite tail in [`select_i0`].
pub const TAIL_EPSILON: f64 = 1e-12;

/// `Σ_{i >= i0} ln(2 gamma^i / (2 gamma^i + 1))`, returned with a bound on the
/// truncation error.
///
/// Terms are `-ln(1 + x_i)` with `x_i = 1/(2 gamma^i)`. Since `ln(1+x) <= x`
/// and `x_{i+1} = x_i / gamma`, everything past index `M` is bounded by
/// `x_{M+1} / (1 - 1/gamma)`; summation stops once that drops below
/// [`TAIL_EPSILON`].
pub fn log_tail_sum(gamma: f64, i0: u32) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    let dominance = 1.0 - 1.0 / gamma;
    let mut x = 0.5 / gamma.powi(i0 as i32);
    let mut sum = 0.0;
    loop {
        sum -= x.ln_1p();
        x /= gamma;
        let remainder = x / dominance;
        if remainder < TAIL_EPSILON {
            return Ok((sum, remainder));
        }
    }
}

/// Smallest `i0 >= 1` whose exponential allocation keeps
/// `Π_{i<k} 2γ^(i+i0)/(2γ^(i+i0)+1) >= 1 - delta` for every `k`.
pub fn select_i0(gamma: f64, delta: f64) -> Result<u32> {
    check_gamma(gamma)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Delta(delta));
    }
    let target = (1.0 - delta).ln();
    for i0 in 1u32.. {
        let (tail, _) = log_tail_sum(gamma, i0)?;
        if tail >= target {
            return Ok(i0);
        }
    }
    unreachable!("tail sum tends to zero")
}

/// `Π_{i<k} 2γ^(i+i0)/(2γ^(i+i0)+1)` with real-valued reservations.
pub fn exponential_product(gamma: f64, i0: u32, k: u32) -> f64 {
    (0..k)
        .map(|i| {
            let b = 2.0 * gamma.powi((i + i0) as i32);
            b / (b + 1.0)
        })
        .product()
}

/// Swappable-mass table `f[b][i]` of the cognitive method for pool sizes
/// `1..=b_max` and chains of `2^i` links, `i = 0..=i_max`.
///
/// Row 0 is unused. `f[b][0] = 1` (a single link always delivers), and for
/// `i >= 1`
///
/// ```text
/// f[b][i] / f[b][i-1] = 1 - 1 / (1 + 2 Σ_{j<b} Π_{j0<=j} f[b-j0][i-1] / f[b][i-1]^(j+1))
/// ```
///
/// which gives `f[b][1] = 2b/(2b+1)` and `f[1][i] = (2/3)^i`.
fn cognitive_table<T>(b_max: u32, i_max: u32, from_int: impl Fn(u32) -> T) -> Vec<Vec<T>>
where
    T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let cols = i_max as usize + 1;
    let mut f = vec![vec![T::zero(); cols]; b_max as usize + 1];
    for row in f.iter_mut().skip(1) {
        row[0] = T::one();
    }
    let two = from_int(2);
    for i in 1..cols {
        for b in 1..=b_max as usize {
            let base = f[b][i - 1].clone();
            let mut sum = T::zero();
            let mut numer = T::one();
            let mut denom = T::one();
            for j in 0..b {
                numer = numer * f[b - j][i - 1].clone();
                denom = denom * base.clone();
                sum = sum + numer.clone() / denom.clone();
            }
            let bracket = T::one() + two.clone() * sum;
            f[b][i] = base * (T::one() - T::one() / bracket);
        }
    }
    f
}

/// Cognitive swappable mass `f_{B,i}` for a chain of `2^i` links.
pub fn cognitive_f(b: u32, i: u32) -> f64 {
    if b == 0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    cognitive_table(b, i, f64::from)[b as usize][i as usize]
}

/// Exact rational `f_{B,i}`; denominators grow quickly, intended for small inputs.
pub fn cognitive_f_exact(b: u32, i: u32) -> BigRational {
    if b == 0 {
        return if i == 0 { BigRational::one() } else { BigRational::zero() };
    }
    cognitive_table(b, i, |n| BigRational::from_integer(BigInt::from(n)))[b as usize][i as usize].clone()
}

/// Full `f` table as floats, indexed `[pool][level]`.
pub fn cognitive_f_table(b_max: u32, i_max: u32) -> Vec<Vec<f64>> {
    cognitive_table(b_max, i_max, f64::from)
}

/// `p q^i f_{B,i}`.
pub fn rate_lower_bound_cognitive(p: f64, q: f64, b: u32, i: u32) -> RateBound {
    RateBound {
        value: p * q.powi(i as i32) * cognitive_f(b, i),
        kind: RateKind::CognitiveLowerBound,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommDelayMemory {
    /// Expected communication-delay qubits per node, averaged over the chain.
    pub per_node_avg_bound: f64,
    /// Expected communication-delay qubits at the busiest node.
    pub any_node_bound: f64,
}

/// Little's-law bounds on communication-delay memory.
///
/// A level-`n` swap delivers its outcome after `2^(n-1) d/c`, and swaps at
/// level `n` happen at rate `p q^(n-1) Π_{i<=n-2} 2B_i/(2B_i+1)`. Passing
/// `levels` applies that product; `None` drops it, giving the closed forms.
pub fn comm_delay_memory(config: &ChainConfig, levels: Option<&[u32]>) -> Result<CommDelayMemory> {
    config.check()?;
    let ChainConfig { k, p, q, .. } = *config;
    let dc = config.link_delay();
    match levels {
        None => {
            let per_node_avg_bound = if q < 1.0 {
                p * dc / (1.0 - q) * (1.0 - q.powi(k as i32))
            } else {
                p * dc * k as f64
            };
            let any_node_bound = if (2.0 * q - 1.0).abs() > 1e-15 {
                p * dc * (1.0 - (2.0 * q).powi(k as i32)) / (1.0 - 2.0 * q)
            } else {
                p * dc * k as f64
            };
            Ok(CommDelayMemory { per_node_avg_bound, any_node_bound })
        }
        Some(levels) => {
            if levels.len() != k as usize {
                return Err(Error::DimensionMismatch {
                    expected: k as usize,
                    found: levels.len(),
                });
            }
            let mut per_node_avg_bound = 0.0;
            let mut any_node_bound = 0.0;
            let mut refine = 1.0;
            for n in 1..=k {
                if n >= 2 {
                    refine *= level_factor(levels[n as usize - 2]);
                }
                let swap_rate = p * q.powi(n as i32 - 1) * refine;
                per_node_avg_bound += swap_rate * dc;
                any_node_bound += swap_rate * 2f64.powi(n as i32 - 1) * dc;
            }
            Ok(CommDelayMemory { per_node_avg_bound, any_node_bound })
        }
    }
}

/// Little's-law average queuing delay of level `i`,
/// `(B_i/2) / (p q^(i-1) Π_{m<=i-2} 2B_m/(2B_m+1))`, for `1 <= i <= k`.
///
/// No memory is reserved for level `k`; the top level reuses `B_{k-1}`,
/// which is exact for constant allocations.
pub fn queuing_delay(i: u32, p: f64, q: f64, levels: &[u32]) -> Result<f64> {
    let k = levels.len() as u32;
    if i == 0 || i > k {
        return Err(Error::Level { level: i, max: k });
    }
    let b_i = levels[(i as usize).min(levels.len() - 1)] as f64;
    let arrival = p * q.powi(i as i32 - 1) * swappable_mass(&levels[..i as usize - 1]);
    Ok(b_i / 2.0 / arrival)
}

/// `(B/(2p)) ((2B+1)/(2Bq))^(i-1)`.
pub fn queuing_delay_constant(i: u32, p: f64, q: f64, b: u32) -> f64 {
    b as f64 / (2.0 * p) * (1.0 / (level_factor(b) * q)).powi(i as i32 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DelayPolicy {
    Constant { b: u32 },
    Exponential { gamma: f64, i0: u32, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndToEndDelay {
    pub value: f64,
    /// Whether the queuing part grows no faster than the `2^(k-1) d/c`
    /// signalling part, so the total is `O(K)`.
    pub linear_in_k: bool,
}

pub fn end_to_end_delay(config: &ChainConfig, policy: DelayPolicy) -> Result<EndToEndDelay> {
    config.check()?;
    let ChainConfig { k, p, q, .. } = *config;
    if k == 0 {
        return Err(Error::NonPositive { name: "k", value: 0.0 });
    }
    let signalling = 2f64.powi(k as i32 - 1) * config.link_delay();
    match policy {
        DelayPolicy::Constant { b } => {
            if b == 0 {
                return Err(Error::NonPositive { name: "B", value: 0.0 });
            }
            let growth = (2.0 * b as f64 + 1.0) / (2.0 * b as f64 * q);
            Ok(EndToEndDelay {
                value: queuing_delay_constant(k, p, q, b) + signalling,
                linear_in_k: growth < 2.0,
            })
        }
        DelayPolicy::Exponential { gamma, i0, delta } => {
            check_gamma(gamma)?;
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Delta(delta));
            }
            let growth = gamma / q;
            let queuing = q * gamma.powi(i0 as i32) / (2.0 * p * (1.0 - delta)) * growth.powi(k as i32 - 1);
            Ok(EndToEndDelay {
                value: queuing + signalling,
                linear_in_k: growth < 2.0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn doubling_bound_examples() {
        for q in [0.1, 0.5, 1.0] {
            let cfg = ChainConfig::new(1, 1.0, q).unwrap();
            let r = rate_lower_bound_doubling(&cfg, &MemoryAllocation::Reserved(vec![1])).unwrap();
            assert!(close(r.value, 2.0 * q / 3.0, 1e-15));
        }
        let cfg = ChainConfig::new(2, 2.0, 0.5).unwrap();
        let r = rate_lower_bound_doubling(&cfg, &MemoryAllocation::Reserved(vec![1, 2])).unwrap();
        assert!(close(r.value, 4.0 / 15.0, 1e-15));

        // huge reservations approach p q^k
        let cfg = ChainConfig::new(3, 1.5, 0.3).unwrap();
        let r = rate_lower_bound_doubling(&cfg, &MemoryAllocation::Reserved(vec![1_000_000; 3])).unwrap();
        assert!(close(r.value, rate_optimal(1.5, 0.3, 3).value, 1e-5));
    }

    #[test]
    fn doubling_bound_errors() {
        let cfg = ChainConfig::new(2, 1.0, 0.5).unwrap();
        assert!(matches!(
            rate_lower_bound_doubling(&cfg, &MemoryAllocation::Cognitive(2)),
            Err(Error::AllocationKind(_))
        ));
        assert!(rate_lower_bound_doubling(&cfg, &MemoryAllocation::Reserved(vec![1])).is_err());
    }

    #[test]
    fn constant_alloc_examples() {
        assert!(close(rate_constant_alloc(1.0, 1.0, 1, 3).value, 8.0 / 27.0, 1e-15));
        assert!(close(rate_constant_alloc(1.0, 0.5, 2, 1).value, 0.4, 1e-15));
        assert_eq!(rate_constant_alloc(2.5, 0.3, 4, 0).value, 2.5);
    }

    #[test]
    fn avg_memory_examples() {
        assert!(close(avg_memory_constant(1, 1), 1.0, 1e-15));
        // k=2: three interior nodes with 2 level-0 memories, node 2 with 2 level-1
        assert!(close(avg_memory_constant(1, 2), 2.0, 1e-15));
        assert!(close(avg_memory_exponential_bound(1.5, 1).unwrap(), 12.0, 1e-14));
        assert!(close(avg_memory_exponential_bound(1.2, 2).unwrap(), 7.2, 1e-14));
        let exact = avg_memory_exponential(1.5, 1, 4).unwrap();
        assert!(exact > 0.0 && exact <= 12.0);
        assert!(avg_memory_exponential_bound(2.0, 1).is_err());
    }

    #[test]
    fn max_memory_examples() {
        assert!(close(max_memory_exponential(1.5, 1, 1).unwrap().exact, 3.0, 1e-15));
        assert!(close(max_memory_exponential(1.5, 1, 2).unwrap().exact, 7.5, 1e-15));
    }

    #[test]
    fn select_i0_example() {
        assert_eq!(select_i0(1.5, 0.5).unwrap(), 2);
        let (s2, _) = log_tail_sum(1.5, 2).unwrap();
        let (s1, _) = log_tail_sum(1.5, 1).unwrap();
        assert!((s2 - -0.627).abs() < 1e-3, "{s2}");
        assert!((s1 - -0.914).abs() < 1e-3, "{s1}");
        assert!(select_i0(1.5, 1.0).is_err());
        assert!(select_i0(2.5, 0.5).is_err());
    }

    #[test]
    fn tail_sum_matches_long_direct_sum() {
        for &gamma in &[1.1, 1.5, 1.9] {
            for i0 in 1..5 {
                let (tail, err) = log_tail_sum(gamma, i0).unwrap();
                // 2γ^i/(2γ^i+1) = 2/(2+γ^-i); 3000 terms leave < 1e-13 behind
                let direct: f64 = (i0..i0 + 3000)
                    .map(|i| (2.0 / (2.0 + gamma.powi(-(i as i32)))).ln())
                    .sum();
                assert!(err < TAIL_EPSILON);
                assert!((tail - direct).abs() < 1e-10, "gamma={gamma} i0={i0}: {tail} vs {direct}");
            }
        }
    }

    #[test]
    fn select_i0_high_gamma() {
        let i0 = select_i0(1.9, 0.9).unwrap();
        assert!(i0 >= 1);
        for k in 1..=30 {
            assert!(exponential_product(1.9, i0, k) >= 0.1);
        }
    }

    #[test]
    fn cognitive_examples() {
        assert!(close(cognitive_f(1, 3), 8.0 / 27.0, 1e-12));
        assert!(close(cognitive_f(2, 1), 4.0 / 5.0, 1e-12));
        // hand evaluation: bracket 1 + 2(1 + (2/3)/(4/5)) = 14/3, ratio 11/14
        assert!(close(cognitive_f(2, 2), 22.0 / 35.0, 1e-12));
        assert_eq!(cognitive_f(3, 0), 1.0);
        assert!(close(rate_lower_bound_cognitive(1.0, 0.5, 1, 2).value, 1.0 / 9.0, 1e-12));
        assert!(close(rate_lower_bound_cognitive(1.0, 0.1, 2, 2).value, 0.01 * 22.0 / 35.0, 1e-12));
    }

    #[test]
    fn cognitive_exact_rationals() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(cognitive_f_exact(2, 2), r(22, 35));
        assert_eq!(cognitive_f_exact(1, 5), r(32, 243));
        for b in 1..6u32 {
            assert_eq!(cognitive_f_exact(b, 1), level_factor_exact(b));
        }
    }

    #[test]
    fn cognitive_power_law_for_single_memory() {
        for i in 0..=20 {
            assert!(close(cognitive_f(1, i), (2.0f64 / 3.0).powi(i as i32), 1e-12));
        }
    }

    #[test]
    fn cognitive_monotone() {
        let table = cognitive_f_table(8, 10);
        for b in 1..=8 {
            for i in 1..=10 {
                assert!(table[b][i] <= table[b][i - 1] + 1e-15);
                if b > 1 {
                    assert!(table[b][i] >= table[b - 1][i] - 1e-15);
                }
            }
        }
    }

    #[test]
    fn comm_delay_examples() {
        // k = 30 is within 1e-9 of the k -> infinity limit p d / (c (1 - q))
        let cfg = ChainConfig::with_delay(30, 1.0, 0.5, 1.0, 1.0).unwrap();
        let m = comm_delay_memory(&cfg, None).unwrap();
        assert!(close(m.per_node_avg_bound, 2.0, 1e-8));
        assert!(close(m.any_node_bound, 30.0, 1e-12));

        let cfg = ChainConfig::with_delay(3, 1.0, 0.25, 2.0, 1.0).unwrap();
        let m = comm_delay_memory(&cfg, None).unwrap();
        assert!(close(m.per_node_avg_bound, 2.625, 1e-14));
        // direct geometric sums
        let direct_any: f64 = (1..=3).map(|n| 0.25f64.powi(n - 1) * 2f64.powi(n - 1) * 2.0).sum();
        assert!(close(m.any_node_bound, direct_any, 1e-14));
    }

    #[test]
    fn comm_delay_refinement_is_smaller() {
        let cfg = ChainConfig::with_delay(4, 1.3, 0.7, 2.0, 0.5).unwrap();
        let plain = comm_delay_memory(&cfg, None).unwrap();
        let refined = comm_delay_memory(&cfg, Some(&[1, 2, 1, 3])).unwrap();
        assert!(refined.per_node_avg_bound <= plain.per_node_avg_bound);
        assert!(refined.any_node_bound <= plain.any_node_bound);
        // the refinement with infinite memory reproduces the closed form
        let huge = comm_delay_memory(&cfg, Some(&[u32::MAX; 4])).unwrap();
        assert!(close(huge.per_node_avg_bound, plain.per_node_avg_bound, 1e-8));
    }

    #[test]
    fn queuing_delay_examples() {
        assert!(close(queuing_delay(1, 1.0, 0.3, &[1, 1]).unwrap(), 0.5, 1e-15));
        assert!(close(queuing_delay(2, 1.0, 0.5, &[1, 1]).unwrap(), 1.5, 1e-15));
        for i in 1..=4 {
            let general = queuing_delay(i, 1.7, 0.4, &[3; 4]).unwrap();
            assert!(close(general, queuing_delay_constant(i, 1.7, 0.4, 3), 1e-13));
        }
        assert!(queuing_delay(0, 1.0, 0.5, &[1, 1]).is_err());
        assert!(queuing_delay(3, 1.0, 0.5, &[1, 1]).is_err());
    }

    #[test]
    fn end_to_end_examples() {
        let cfg = ChainConfig::with_delay(2, 1.0, 1.0, 1.0, 1.0).unwrap();
        let d = end_to_end_delay(&cfg, DelayPolicy::Constant { b: 1 }).unwrap();
        assert!(close(d.value, 2.75, 1e-15));

        let cfg = ChainConfig::new(3, 1.0, 0.9).unwrap();
        assert!(end_to_end_delay(&cfg, DelayPolicy::Constant { b: 1 }).unwrap().linear_in_k);
        let cfg = ChainConfig::new(3, 1.0, 0.5).unwrap();
        assert!(!end_to_end_delay(&cfg, DelayPolicy::Constant { b: 1 }).unwrap().linear_in_k);

        let cfg = ChainConfig::new(3, 1.0, 0.8).unwrap();
        let policy = DelayPolicy::Exponential { gamma: 1.2, i0: 2, delta: 0.1 };
        let d = end_to_end_delay(&cfg, policy).unwrap();
        assert!(d.linear_in_k);
        let expected = 0.8 * 1.44 / (2.0 * 0.9) * 1.5f64.powi(2) + 4.0;
        assert!(close(d.value, expected, 1e-14));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn doubling_bound_monotone_in_memory(
                levels in proptest::collection::vec(1u32..10, 1..6),
                bump in 0usize..6,
                p in 0.1f64..5.0,
                q in 0.01f64..1.0,
            ) {
                let k = levels.len() as u32;
                let cfg = ChainConfig::new(k, p, q).unwrap();
                let base = rate_lower_bound_doubling(&cfg, &MemoryAllocation::Reserved(levels.clone())).unwrap();
                let mut more = levels.clone();
                more[bump % levels.len()] += 1;
                let bumped = rate_lower_bound_doubling(&cfg, &MemoryAllocation::Reserved(more)).unwrap();
                prop_assert!(bumped.value >= base.value);
                prop_assert!(base.value <= rate_optimal(p, q, k).value);
                prop_assert!(base.value <= p);

                let cfg_q = ChainConfig::new(k, p, (q * 1.01).min(1.0)).unwrap();
                if cfg_q.q > q {
                    let higher = rate_lower_bound_doubling(&cfg_q, &MemoryAllocation::Reserved(levels.clone())).unwrap();
                    prop_assert!(higher.value > base.value);
                }
            }

            #[test]
            fn constant_matches_general(b in 1u32..20, k in 0u32..12, p in 0.1f64..5.0, q in 0.01f64..1.0) {
                let cfg = ChainConfig::new(k, p, q).unwrap();
                let general = rate_lower_bound_doubling(&cfg, &MemoryAllocation::Reserved(vec![b; k as usize])).unwrap();
                let constant = rate_constant_alloc(p, q, b, k);
                prop_assert!((general.value - constant.value).abs() <= 1e-12 * constant.value);
            }
        }
    }
}
