//! Ensemble-averaged leaf distributions and the TV hardness proxy.
//!
//! For the computational-basis strategy started from a basis state `|i₀⟩`,
//! both ensembles are invariant under `U ↦ ΠUΠ†` with `Π = π₁ ⊗ π₂` a product
//! of block permutations fixing the blocks of `i₀`. Such a `Π` maps leaf
//! `(i₁, …, i_T)` to `(Π i₁, …, Π i_T)` without changing `p^U`, so the averaged
//! leaf probabilities are constant on orbits. The orbits are labelled by the
//! equality patterns of the high-block digits `(h₀, h₁, …, h_T)` and of the
//! low-block digits `(l₀, …, l_T)`, and the total variation between averaged
//! distributions equals the total variation between their orbit sums. This
//! cuts the per-unitary output from `d^T` leaves to `Bell(T+1)²` classes.

use serde::{Deserialize, Serialize};

use super::{check_strategy_dim, leaf_count, run_tree_exact, LeafDistribution, Strategy, Transcript, LEAF_CAP};
use crate::error::{Error, Result};
use crate::matrix::{QuantumState, UnitaryMatrix};
use crate::otoc::{EnsembleKind, OtocInstance};
use crate::parallel::map_indexed;
use crate::rng::{RandomSource, SourceId};
use crate::stats::{percentile_interval, resample_indices};

/// Longest depth for which pattern lookup tables are built.
pub const MAX_LUMPED_DEPTH: usize = 7;
/// Bound on stored per-sample values in the leaf-level method.
pub const MAX_STORED_VALUES: usize = 50_000_000;

/// Orbit labelling for the computational-basis strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPatternLumping {
    block_bits: usize,
}

/// Restricted-growth strings `(0, a₁, …, a_T)` indexed by the code
/// `Σ a_t (T+1)^{t-1}`.
struct PatternIndex {
    depth: usize,
    lookup: Vec<u32>,
    count: usize,
}

impl PatternIndex {
    fn new(depth: usize) -> Self {
        let base = depth + 1;
        let mut lookup = vec![u32::MAX; base.pow(depth as u32)];
        let mut count = 0usize;
        fn grow(t: usize, depth: usize, base: usize, max: usize, code: usize, lookup: &mut [u32], count: &mut usize) {
            if t > depth {
                lookup[code] = *count as u32;
                *count += 1;
                return;
            }
            for a in 0..=max + 1 {
                let next_max = max.max(a);
                grow(t + 1, depth, base, next_max, code + a * base.pow(t as u32 - 1), lookup, count);
            }
        }
        grow(1, depth, base, 0, 0, &mut lookup, &mut count);
        Self { depth, lookup, count }
    }
}

/// Running pattern of one block: distinct digits seen so far and the code.
#[derive(Clone, Copy)]
struct Pattern {
    seen: [usize; MAX_LUMPED_DEPTH + 1],
    distinct: usize,
    code: usize,
}

impl Pattern {
    fn start(digit: usize) -> Self {
        let mut seen = [0; MAX_LUMPED_DEPTH + 1];
        seen[0] = digit;
        Self {
            seen,
            distinct: 1,
            code: 0,
        }
    }

    fn push(&self, digit: usize, weight: usize) -> Self {
        let label = self.seen[..self.distinct].iter().position(|&s| s == digit).unwrap_or(self.distinct);
        let mut next = *self;
        if label == self.distinct {
            next.seen[label] = digit;
            next.distinct += 1;
        }
        next.code += label * weight;
        next
    }
}

impl BlockPatternLumping {
    pub fn new(block_bits: usize) -> Self {
        Self { block_bits }
    }

    pub fn block_bits(&self) -> usize {
        self.block_bits
    }

    pub fn num_classes(&self, depth: usize) -> Result<usize> {
        Self::check_depth(depth)?;
        let b = PatternIndex::new(depth).count;
        Ok(b * b)
    }

    fn check_depth(depth: usize) -> Result<()> {
        if depth == 0 || depth > MAX_LUMPED_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "lumped enumeration supports depth 1..={MAX_LUMPED_DEPTH}, got {depth}"
            )));
        }
        Ok(())
    }

    fn split(&self, i: usize) -> (usize, usize) {
        (i >> self.block_bits, i & ((1 << self.block_bits) - 1))
    }

    /// Class index of a transcript started from basis state `start`.
    pub fn class_of(&self, start: usize, transcript: &[usize]) -> Result<usize> {
        let depth = transcript.len();
        Self::check_depth(depth)?;
        let index = PatternIndex::new(depth);
        let (h0, l0) = self.split(start);
        let (mut hp, mut lp) = (Pattern::start(h0), Pattern::start(l0));
        for (t, &i) in transcript.iter().enumerate() {
            let (h, l) = self.split(i);
            let w = (depth + 1).pow(t as u32);
            hp = hp.push(h, w);
            lp = lp.push(l, w);
        }
        Ok(index.lookup[hp.code] as usize * index.count + index.lookup[lp.code] as usize)
    }
}

/// Orbit sums of `p^U` for the computational-basis tree of the given depth
/// started at `|start⟩`. Entry `a · B + b` pairs high pattern `a` with low pattern `b`.
pub fn lumped_class_sums(
    lumping: &BlockPatternLumping,
    u: &UnitaryMatrix,
    start: usize,
    depth: usize,
) -> Result<Vec<f64>> {
    BlockPatternLumping::check_depth(depth)?;
    let d = u.dim();
    if d != 1 << (2 * lumping.block_bits) {
        return Err(Error::StrategyDimension {
            strategy: 1 << (2 * lumping.block_bits),
            other: d,
            what: "unitary",
        });
    }
    if start >= d {
        return Err(Error::IndexOutOfRange { index: start, d });
    }
    let index = PatternIndex::new(depth);
    // weights[cur * d + next] = |U_{next, cur}|²
    let m = u.matrix();
    let mut weights = vec![0.0; d * d];
    for next in 0..d {
        for (cur, z) in m.row(next).iter().enumerate() {
            weights[cur * d + next] = z.norm_sqr();
        }
    }
    // Block sums of each weight row: over low digits for a fixed high digit,
    // and over high digits for a fixed low digit.
    let bd = 1usize << lumping.block_bits;
    let mut row_sums = vec![0.0; d * bd];
    let mut col_sums = vec![0.0; d * bd];
    let mut totals = vec![0.0; d];
    for cur in 0..d {
        for next in 0..d {
            let q = weights[cur * d + next];
            row_sums[cur * bd + next / bd] += q;
            col_sums[cur * bd + next % bd] += q;
            totals[cur] += q;
        }
    }
    let mut sums = vec![0.0; index.count * index.count];
    let split: Vec<(usize, usize)> = (0..d).map(|i| lumping.split(i)).collect();
    let powers: Vec<usize> = (0..depth).map(|t| (depth + 1).pow(t as u32)).collect();

    struct Walk<'a> {
        d: usize,
        block_dim: usize,
        depth: usize,
        weights: &'a [f64],
        split: &'a [(usize, usize)],
        powers: &'a [usize],
        index: &'a PatternIndex,
        row_sums: &'a [f64],
        col_sums: &'a [f64],
        totals: &'a [f64],
        sums: &'a mut [f64],
    }

    impl Walk<'_> {
        fn go(&mut self, t: usize, cur: usize, p: f64, hp: Pattern, lp: Pattern) {
            let row = &self.weights[cur * self.d..(cur + 1) * self.d];
            let w = self.powers[t];
            if t + 1 == self.depth {
                // Pool the last step by label pair. Digits already seen are
                // looked up directly; a new digit takes the rest of its block
                // row or column sum.
                const L: usize = MAX_LUMPED_DEPTH + 2;
                let bd = self.block_dim;
                let (nh, nl) = (hp.distinct, lp.distinct);
                let rows = &self.row_sums[cur * bd..(cur + 1) * bd];
                let cols = &self.col_sums[cur * bd..(cur + 1) * bd];
                let mut pooled = [0.0f64; L * L];
                let mut seen_total = 0.0;
                for b in 0..nl {
                    pooled[nh * L + b] = cols[lp.seen[b]];
                }
                for a in 0..nh {
                    let h = hp.seen[a];
                    let mut row_seen = 0.0;
                    for b in 0..nl {
                        let q = row[h * bd + lp.seen[b]];
                        pooled[a * L + b] = q;
                        pooled[nh * L + b] -= q;
                        row_seen += q;
                    }
                    pooled[a * L + nl] = rows[h] - row_seen;
                    seen_total += rows[h];
                }
                let col_seen: f64 = (0..nl).map(|b| cols[lp.seen[b]]).sum();
                let pair_seen: f64 = (0..nh).map(|a| (0..nl).map(|b| pooled[a * L + b]).sum::<f64>()).sum();
                pooled[nh * L + nl] = self.totals[cur] - seen_total - col_seen + pair_seen;
                let stride = self.index.count;
                for a in 0..=nh {
                    let ca = self.index.lookup[hp.code + a * w] as usize;
                    for b in 0..=nl {
                        let q = pooled[a * L + b];
                        if (a < nh || nh < bd) && (b < nl || nl < bd) && q != 0.0 {
                            let cb = self.index.lookup[lp.code + b * w] as usize;
                            self.sums[ca * stride + cb] += p * q;
                        }
                    }
                }
                return;
            }
            for (next, &q) in row.iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                let (h, l) = self.split[next];
                self.go(t + 1, next, p * q, hp.push(h, w), lp.push(l, w));
            }
        }
    }

    let (h0, l0) = lumping.split(start);
    let mut walk = Walk {
        d,
        block_dim: 1 << lumping.block_bits,
        depth,
        weights: &weights,
        split: &split,
        powers: &powers,
        index: &index,
        row_sums: &row_sums,
        col_sums: &col_sums,
        totals: &totals,
        sums: &mut sums,
    };
    walk.go(0, start, 1.0, Pattern::start(h0), Pattern::start(l0));
    debug_assert_eq!(index.depth, depth);
    Ok(sums)
}

/// Per-unitary leaf probabilities for one ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafSamples {
    pub transcripts: Vec<Transcript>,
    /// `values[s][j]` is `p^{U_s}` of transcript `j`.
    pub values: Vec<Vec<f64>>,
}

impl LeafSamples {
    pub fn mean(&self) -> Vec<f64> {
        column_means(&self.values, None)
    }
}

fn ensemble_instance(strategy: &dyn Strategy) -> Result<OtocInstance> {
    let d = strategy.dim();
    if !d.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("strategy dimension {d} is not a power of two")));
    }
    OtocInstance::new(d.trailing_zeros() as usize)
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 10 {
        return Err(Error::TooFew {
            what: "samples",
            min: 10,
            got: samples,
        });
    }
    Ok(())
}

/// `p^U` for `samples` draws from the ensemble; draw `s` uses `rng.child(s)`.
pub fn ensemble_leaf_samples(
    strategy: &dyn Strategy,
    ensemble: EnsembleKind,
    rho0: &QuantumState,
    samples: usize,
    rng: &RandomSource,
) -> Result<LeafSamples> {
    check_samples(samples)?;
    let instance = ensemble_instance(strategy)?;
    check_strategy_dim(strategy, rho0.dim(), "initial state")?;
    let leaves = leaf_count(strategy, LEAF_CAP)?;
    if leaves.saturating_mul(samples) > MAX_STORED_VALUES {
        return Err(Error::InvalidParameter(format!(
            "{samples} samples of {leaves} leaves exceed the storage bound of {MAX_STORED_VALUES} values"
        )));
    }
    let dists = map_indexed(samples, |s| {
        let u = ensemble.sample(instance, &mut rng.child(s as u64));
        run_tree_exact(strategy, &u, rho0)
    });
    let mut transcripts = Vec::new();
    let mut values = Vec::with_capacity(samples);
    for (s, dist) in dists.into_iter().enumerate() {
        let dist = dist?;
        if s == 0 {
            transcripts = dist.transcripts().to_vec();
        }
        values.push(dist.probabilities().to_vec());
    }
    Ok(LeafSamples { transcripts, values })
}

/// Monte Carlo estimate of `E_U[p^U(ℓ)]`.
pub fn ensemble_leaf_distribution(
    strategy: &dyn Strategy,
    ensemble: EnsembleKind,
    rho0: &QuantumState,
    samples: usize,
    rng: &RandomSource,
) -> Result<LeafDistribution> {
    let s = ensemble_leaf_samples(strategy, ensemble, rho0, samples, rng)?;
    let mean = s.mean();
    LeafDistribution::from_parts(s.transcripts, mean)
}

fn column_means(rows: &[Vec<f64>], pick: Option<&[usize]>) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; width];
    let mut count = 0usize;
    let mut add = |r: &Vec<f64>| {
        for (a, x) in acc.iter_mut().zip(r) {
            *a += x;
        }
        count += 1;
    };
    match pick {
        Some(idx) => idx.iter().for_each(|&i| add(&rows[i])),
        None => rows.iter().for_each(&mut add),
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    acc
}

fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardnessMethod {
    /// Orbit sums under block permutations.
    Lumped,
    /// Every leaf of the tree.
    Leaf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessOptions {
    /// Unitaries drawn from each ensemble.
    pub samples: usize,
    pub bootstrap: usize,
    pub level: f64,
    /// Use orbit sums when the strategy and initial state allow it.
    pub allow_lumping: bool,
}

impl HardnessOptions {
    pub fn new(samples: usize) -> Self {
        Self {
            samples,
            bootstrap: 200,
            level: 0.95,
            allow_lumping: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub strategy: String,
    pub n: usize,
    pub depth: usize,
    pub samples: usize,
    pub method: HardnessMethod,
    /// Number of aggregated outcomes compared.
    pub outcomes: usize,
    pub tv_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub lecam_bound: f64,
    pub bootstrap: usize,
    pub source: SourceId,
}

/// TV between the global and product ensemble averages, with a bootstrap
/// percentile interval over the sampled unitaries.
pub fn hardness_experiment(
    strategy: &dyn Strategy,
    n: usize,
    rho0: &QuantumState,
    samples: usize,
    rng: &RandomSource,
) -> Result<HardnessReport> {
    hardness_experiment_with(strategy, n, rho0, HardnessOptions::new(samples), rng)
}

pub fn hardness_experiment_with(
    strategy: &dyn Strategy,
    n: usize,
    rho0: &QuantumState,
    options: HardnessOptions,
    rng: &RandomSource,
) -> Result<HardnessReport> {
    let instance = OtocInstance::new(n)?;
    check_strategy_dim(strategy, instance.dim(), "qubit count")?;
    check_strategy_dim(strategy, rho0.dim(), "initial state")?;
    check_samples(options.samples)?;
    if options.bootstrap < 10 || !(0.0 < options.level && options.level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least 10 replicates and a level in (0, 1), got {} and {}",
            options.bootstrap, options.level
        )));
    }
    let (global_rng, product_rng, boot_rng) = (rng.child(0), rng.child(1), rng.child(2));

    let lumped = match (options.allow_lumping, strategy.lumping(), rho0.as_basis_state()) {
        (true, Some(l), Some(start)) if strategy.depth() <= MAX_LUMPED_DEPTH => Some((l, start)),
        _ => None,
    };
    let (method, global, product) = match lumped {
        Some((lumping, start)) => {
            let run = |kind: EnsembleKind, r: &RandomSource| -> Result<Vec<Vec<f64>>> {
                map_indexed(options.samples, |s| {
                    let u = kind.sample(instance, &mut r.child(s as u64));
                    lumped_class_sums(&lumping, &u, start, strategy.depth())
                })
                .into_iter()
                .collect()
            };
            (
                HardnessMethod::Lumped,
                run(EnsembleKind::GlobalHaar, &global_rng)?,
                run(EnsembleKind::ProductHaar, &product_rng)?,
            )
        }
        None => (
            HardnessMethod::Leaf,
            ensemble_leaf_samples(strategy, EnsembleKind::GlobalHaar, rho0, options.samples, &global_rng)?.values,
            ensemble_leaf_samples(strategy, EnsembleKind::ProductHaar, rho0, options.samples, &product_rng)?.values,
        ),
    };

    let tv = half_l1(&column_means(&global, None), &column_means(&product, None)).min(1.0);
    let mut replicates = map_indexed(options.bootstrap, |b| {
        let mut r = boot_rng.child(b as u64);
        let gi = resample_indices(global.len(), &mut r);
        let pi = resample_indices(product.len(), &mut r);
        half_l1(&column_means(&global, Some(&gi)), &column_means(&product, Some(&pi)))
    });
    let (ci_low, ci_high) = percentile_interval(&mut replicates, options.level);
    Ok(HardnessReport {
        strategy: strategy.name().to_string(),
        n,
        depth: strategy.depth(),
        samples: options.samples,
        method,
        outcomes: global.first().map_or(0, Vec::len),
        tv_estimate: tv,
        ci_low,
        ci_high: ci_high.min(1.0),
        lecam_bound: super::lecam_success_bound(tv)?,
        bootstrap: options.bootstrap,
        source: rng.id(),
    })
}
