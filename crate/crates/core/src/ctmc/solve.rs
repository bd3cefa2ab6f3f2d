use std::io::Write;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::rate_lower_bound_doubling;
use crate::error::{Error, Result};
use crate::model::{ChainConfig, FullMemoryRule, MemoryAllocation, Protocol};

use super::generator::{build_generator, GeneratorMatrix};
use super::state::{StateSpace, DEFAULT_STATE_CAP};

/// Largest allowed `‖πQ‖∞`, relative to the fastest exit rate.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Probabilities above `-NOISE_FLOOR` are clamped to zero; anything lower is an error.
pub const NOISE_FLOOR: f64 = 1e-14;

/// Stationary probabilities over a [`StateSpace`], zero on unreachable states.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    pub space: StateSpace,
    pub probabilities: Vec<f64>,
    /// `‖πQ‖∞` of the solve; zero for distributions built in closed form.
    pub residual: f64,
}

impl StationaryDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Probability of the states from which one generation can deliver an
    /// end-to-end pair.
    pub fn swappable_mass(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(i, _)| StateSpace::swappable_flat(&self.space.decode(*i)))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn max_abs_deviation(&self, other: &StationaryDistribution) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::Schema("distributions over different state spaces".into()));
        }
        Ok(self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `state,probability` rows; states in bracketed form, reals with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "state,probability")?;
        for (i, p) in self.probabilities.iter().enumerate() {
            writeln!(out, "\"{}\",{:.16e}", self.space.state(i), p)?;
        }
        Ok(())
    }
}

/// Solves `πQ = 0, Σπ = 1` by sparse LU on `Qᵀ` with its last row replaced
/// by the normalization constraint.
pub fn stationary(gen: &GeneratorMatrix) -> Result<StationaryDistribution> {
    let n = gen.len();
    let exit = gen.exit_rates();
    let pi_local = if n == 1 {
        vec![1.0]
    } else {
        let last = n - 1;
        let mut triplets: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(2 * gen.transitions.len() + 2 * n);
        for t in &gen.transitions {
            if t.to != last {
                triplets.push(Triplet::new(t.to, t.from, t.rate));
            }
        }
        for (i, &rate) in exit.iter().enumerate() {
            if i != last {
                triplets.push(Triplet::new(i, i, -rate));
            }
            triplets.push(Triplet::new(last, i, 1.0));
        }
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Solve(format!("assembly: {e:?}")))?;
        let lu = matrix.sp_lu().map_err(|e| Error::Solve(format!("factorization: {e:?}")))?;
        let rhs = Col::<f64>::from_fn(n, |i| if i == last { 1.0 } else { 0.0 });
        let x = lu.solve(&rhs);
        (0..n).map(|i| x[i]).collect::<Vec<f64>>()
    };

    let mut pi_local = pi_local;
    for (i, p) in pi_local.iter_mut().enumerate() {
        if !p.is_finite() || *p < -NOISE_FLOOR {
            return Err(Error::Solve(format!("probability {p:e} at state {}", gen.reachable[i])));
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }

    let mut balance = vec![0.0; n];
    for t in &gen.transitions {
        let flow = pi_local[t.from] * t.rate;
        balance[t.to] += flow;
        balance[t.from] -= flow;
    }
    let residual = balance.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let scale = exit.iter().cloned().fold(1.0f64, f64::max);
    if residual > RESIDUAL_TOLERANCE * scale {
        return Err(Error::Solve(format!("residual {residual:e} above tolerance")));
    }
    let total: f64 = pi_local.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Solve(format!("probabilities sum to {total}")));
    }

    let mut probabilities = vec![0.0; gen.space.len()];
    for (local, &global) in gen.reachable.iter().enumerate() {
        probabilities[global] = pi_local[local];
    }
    Ok(StationaryDistribution { space: gen.space.clone(), probabilities, residual })
}

/// Long-run delivery flux `Σ rate · π(source)` over delivering arcs.
pub fn delivery_rate(gen: &GeneratorMatrix, dist: &StationaryDistribution) -> f64 {
    gen.transitions
        .iter()
        .filter(|t| t.delivers)
        .map(|t| t.rate * dist.probabilities[gen.reachable[t.from]])
        .sum()
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub generator: GeneratorMatrix,
    pub distribution: StationaryDistribution,
    pub rate: f64,
}

pub fn solve_exact(
    config: &ChainConfig,
    alloc: &MemoryAllocation,
    protocol: Protocol,
    rule: FullMemoryRule,
) -> Result<ExactSolution> {
    let generator = build_generator(config, alloc, protocol, rule, DEFAULT_STATE_CAP)?;
    let distribution = stationary(&generator)?;
    let rate = delivery_rate(&generator, &distribution);
    Ok(ExactSolution { generator, distribution, rate })
}

/// Exact end-to-end delivery rate.
pub fn exact_rate(config: &ChainConfig, alloc: &MemoryAllocation, protocol: Protocol, rule: FullMemoryRule) -> Result<f64> {
    Ok(solve_exact(config, alloc, protocol, rule)?.rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    pub q: f64,
    pub exact_rate: f64,
    pub lower_bound: f64,
    /// `lower_bound / exact_rate`, which tends to 1 as `q -> 0`.
    pub ratio: f64,
}

/// Small-q bound against the exact rate along a grid of `q` values.
pub fn theorem1_ratio_curve(
    k: u32,
    p: f64,
    alloc: &MemoryAllocation,
    qs: &[f64],
    rule: FullMemoryRule,
) -> Result<Vec<RatioPoint>> {
    qs.par_iter()
        .map(|&q| {
            let cfg = ChainConfig::new(k, p, q)?;
            let exact = exact_rate(&cfg, alloc, Protocol::ModifiedDoubling, rule)?;
            let bound = rate_lower_bound_doubling(&cfg, alloc)?.value;
            Ok(RatioPoint { q, exact_rate: exact, lower_bound: bound, ratio: bound / exact })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::state::enumerate_states;
    use crate::ctmc::generator::Transition;

    #[test]
    fn two_state_chain() {
        // a -> b at rate 2, b -> a at rate 3: π = (3/5, 2/5)
        let space = enumerate_states(1, &[1], DEFAULT_STATE_CAP).unwrap();
        let gen = GeneratorMatrix {
            space,
            reachable: vec![0, 1],
            transitions: vec![
                Transition { from: 0, to: 1, rate: 2.0, delivers: false },
                Transition { from: 1, to: 0, rate: 3.0, delivers: true },
            ],
        };
        let dist = stationary(&gen).unwrap();
        assert!((dist.probabilities[0] - 0.6).abs() < 1e-14);
        assert!((dist.probabilities[1] - 0.4).abs() < 1e-14);
        assert_eq!(dist.probabilities[2], 0.0);
        assert!((delivery_rate(&gen, &dist) - 1.2).abs() < 1e-14);
    }

    #[test]
    fn two_link_chain_is_uniform() {
        for b in 1..=2u32 {
            for q in [0.1, 0.5, 1.0] {
                let cfg = ChainConfig::new(1, 1.7, q).unwrap();
                let sol = solve_exact(&cfg, &MemoryAllocation::Reserved(vec![b]), Protocol::ModifiedDoubling, FullMemoryRule::Block).unwrap();
                let uniform = 1.0 / (2 * b + 1) as f64;
                assert!(sol.distribution.probabilities.iter().all(|p| (p - uniform).abs() < 1e-12));
                let expected = 1.7 * q * 2.0 * b as f64 / (2.0 * b as f64 + 1.0);
                assert!((sol.rate - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn four_link_chain_near_bound_at_small_q() {
        let cfg = ChainConfig::new(2, 1.0, 0.01).unwrap();
        let rate = exact_rate(&cfg, &MemoryAllocation::Reserved(vec![1, 1]), Protocol::ModifiedDoubling, FullMemoryRule::Block).unwrap();
        let bound = 0.01f64.powi(2) * (2.0f64 / 3.0).powi(2);
        assert!((rate / bound - 1.0).abs() < 0.02, "{rate} vs {bound}");
    }

    #[test]
    fn solved_chains_balance() {
        for rule in [FullMemoryRule::Block, FullMemoryRule::DiscardOldest] {
            let cfg = ChainConfig::new(2, 1.0, 0.3).unwrap();
            let sol = solve_exact(&cfg, &MemoryAllocation::Reserved(vec![2, 2]), Protocol::ModifiedDoubling, rule).unwrap();
            assert!((sol.distribution.total() - 1.0).abs() < 1e-10);
            assert!(sol.distribution.residual < 1e-10);
        }
    }

    #[test]
    fn ratio_curve_for_two_links_is_flat() {
        let curve = theorem1_ratio_curve(1, 1.0, &MemoryAllocation::Reserved(vec![1]), &[0.9, 0.5, 0.1], FullMemoryRule::Block).unwrap();
        for pt in curve {
            assert!((pt.ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export() {
        let cfg = ChainConfig::new(1, 1.0, 0.5).unwrap();
        let sol = solve_exact(&cfg, &MemoryAllocation::Reserved(vec![1]), Protocol::ModifiedDoubling, FullMemoryRule::Block).unwrap();
        let mut buf = Vec::new();
        sol.distribution.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "state,probability");
        assert_eq!(lines[1], "\"-1\",3.3333333333333331e-1");
        assert_eq!(lines.len(), 4);
    }
}
