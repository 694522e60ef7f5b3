//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Criteria listed in
//! [`EXPECTED_FAILURES`] are checked exactly as stated and reported red; the
//! process exits nonzero if any other criterion fails, or if an expected
//! failure unexpectedly passes.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use otoc_core::matrix::{sample_haar_unitary, ComplexMatrix, QuantumState};
use otoc_core::otoc::{
    expected_otoc_exact, expected_otoc_weingarten, monte_carlo_expected_otoc, otoc_samples, success_probability,
    EnsembleKind, OtocInstance,
};
use otoc_core::perm::{factorial, falling_factorial, longest_cycle_census};
use otoc_core::rng::RandomSource;
use otoc_core::stats::four_sigma_cell_ok;
use otoc_core::tree::{
    child_sum_check, hardness_experiment, leaf_count, run_tree_exact, sample_trajectory, CompBasis, OtoTheorem1,
    RandomizedOptions, RandomizedStrategy, Strategy,
};
use otoc_core::weingarten::{
    falling_factorial_reciprocal, gram_matrix, lemma6_sum, orthogonality_holds, rational_to_f64, weingarten_table,
};

const SEED: u64 = 20_240_601;

// Pinned tolerances and sizes.
const MC_SIGMAS: f64 = 4.0;
const PRODUCT_TOLERANCE: f64 = 1e-9;
const SUCCESS_TARGET_N6: f64 = 0.90;
const SUCCESS_TARGET_N8: f64 = 0.95;
const DISTINGUISHER_TRIALS: usize = 2000;
const TREE_STRATEGIES: usize = 50;
const TREE_MASS_TOLERANCE: f64 = 1e-9;
const TREE_CHILD_SUM_TOLERANCE: f64 = 1e-9;
const TREE_TRAJECTORIES: usize = 10_000;
/// Largest transcript space in the sampled family, to keep the per-cell count bounded.
const TREE_MAX_CELLS: usize = 64;
const HARDNESS_SAMPLES: usize = 500;
const HARDNESS_DEPTH: usize = 4;
const OTO_TV_TARGET: f64 = 0.8;
/// Recorded bound on `|Wg(e, d) - d^{-k}| d^{k+2}` for `k <= 4`, `d in 2k..=64`.
const DECAY_CONSTANT: f64 = 7.0;

/// Criteria that are checked as stated but cannot hold.
const EXPECTED_FAILURES: &[u32] = &[10];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn c1_orthogonality() -> Outcome {
    let mut checked = 0;
    for k in 1..=5 {
        for d in k..=16 {
            let table = weingarten_table(k, d).expect("d >= k");
            let gram = gram_matrix(k, d).expect("valid");
            if !orthogonality_holds(&table, &gram).expect("same shape") {
                return outcome(false, format!("Wg * G != I at k={k}, d={d}"));
            }
            checked += 1;
        }
    }
    outcome(true, format!("{checked} (k, d) pairs, exact"))
}

fn c2_abs_sum() -> Outcome {
    let mut checked = 0;
    for k in 1..=5 {
        for d in k..=16 {
            let lhs = lemma6_sum(k, d).expect("d >= k");
            let rhs = falling_factorial_reciprocal(k, d);
            if lhs != rhs {
                return outcome(false, format!("k={k}, d={d}: {lhs} != {rhs}"));
            }
            checked += 1;
        }
    }
    outcome(true, format!("{checked} (k, d) pairs, exact"))
}

fn c3_exact_otoc() -> Outcome {
    let mut parts = Vec::new();
    for n in [2, 4, 6] {
        let w = expected_otoc_weingarten(n).expect("n <= 6");
        let c = expected_otoc_exact(n).expect("even n");
        if w != c {
            return outcome(false, format!("n={n}: {w} != {c}"));
        }
        parts.push(format!("n={n}: {w}"));
    }
    outcome(true, parts.join(", "))
}

fn c4_monte_carlo() -> Outcome {
    let rng = RandomSource::new(SEED).child(4);
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, samples) in [(2, 10_000), (4, 10_000), (6, 1_000)] {
        let est = monte_carlo_expected_otoc(n, samples, &rng.child(n as u64)).expect("valid");
        let exact = rational_to_f64(&expected_otoc_exact(n).expect("even n"));
        let z = (est.mean - exact).abs() / est.stderr;
        pass &= z <= MC_SIGMAS;
        parts.push(format!("n={n}: {:.5} vs {exact:.5} ({z:.2} se)", est.mean));
    }
    outcome(pass, parts.join(", "))
}

fn c5_product() -> Outcome {
    let instance = OtocInstance::new(6).expect("even");
    let values = otoc_samples(instance, EnsembleKind::ProductHaar, 100, &RandomSource::new(SEED).child(5));
    let worst = values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    outcome(worst < PRODUCT_TOLERANCE, format!("max |OTOC - 1| = {worst:.2e} over 100 draws"))
}

fn c6_distinguisher() -> Outcome {
    let rng = RandomSource::new(SEED).child(6);
    let r6 = success_probability(6, DISTINGUISHER_TRIALS, &rng.child(6)).expect("valid");
    let r8 = success_probability(8, DISTINGUISHER_TRIALS, &rng.child(8)).expect("valid");
    outcome(
        r6.success_rate >= SUCCESS_TARGET_N6 && r8.success_rate >= SUCCESS_TARGET_N8,
        format!(
            "n=6: {:.4} +/- {:.4} (target {SUCCESS_TARGET_N6}), n=8: {:.4} +/- {:.4} (target {SUCCESS_TARGET_N8})",
            r6.success_rate, r6.ci, r8.success_rate, r8.ci
        ),
    )
}

fn c7_tree_soundness() -> Outcome {
    let root = RandomSource::new(SEED).child(7);
    let mut worst_mass = 0.0f64;
    let mut worst_child = 0.0f64;
    let mut cells = 0usize;
    let mut bad_cells = Vec::new();
    let mut built = 0u64;
    let mut attempt = 0u64;
    while built < TREE_STRATEGIES as u64 {
        let mut r = root.child(attempt);
        attempt += 1;
        let n = 1 + r.below(4);
        let depth = 1 + r.below(3);
        let options = RandomizedOptions {
            dim: 1 << n,
            depth,
            seed: r.child(0).seed() ^ attempt,
            adaptive: r.bernoulli(0.5),
            allow_inverse: r.bernoulli(0.5),
            overcomplete: r.bernoulli(0.5),
        };
        let Ok(strategy) = RandomizedStrategy::new(options) else { continue };
        if leaf_count(&strategy, TREE_MAX_CELLS).is_err() {
            continue;
        }
        built += 1;
        let d = strategy.dim();
        let u = sample_haar_unitary(d, &mut r).expect("d >= 1");
        let rho = QuantumState::zero(d).expect("d >= 1");
        let leaves = run_tree_exact(&strategy, &u, &rho).expect("valid tree");
        worst_mass = worst_mass.max((leaves.total_mass() - 1.0).abs());

        let v = sample_haar_unitary(d, &mut r).expect("d >= 1").matrix().column(0);
        for probe in [ComplexMatrix::outer(&v, &v), ComplexMatrix::identity(d)] {
            worst_child = worst_child.max(child_sum_check(&strategy, &probe).expect("valid tree"));
        }

        let mut counts = vec![0usize; leaves.len()];
        let index: std::collections::HashMap<&[usize], usize> =
            leaves.transcripts().iter().enumerate().map(|(i, t)| (t.as_slice(), i)).collect();
        let mut sampler = r.child(1);
        for _ in 0..TREE_TRAJECTORIES {
            let t = sample_trajectory(&strategy, &u, &rho, &mut sampler).expect("valid tree");
            counts[index[t.as_slice()]] += 1;
        }
        for (i, (&c, &p)) in counts.iter().zip(leaves.probabilities()).enumerate() {
            cells += 1;
            if !four_sigma_cell_ok(TREE_TRAJECTORIES, p.clamp(0.0, 1.0), c) {
                bad_cells.push(format!("strategy {built} leaf {i}: {c} vs {:.1}", p * TREE_TRAJECTORIES as f64));
            }
        }
    }
    let pass = worst_mass < TREE_MASS_TOLERANCE && worst_child < TREE_CHILD_SUM_TOLERANCE && bad_cells.is_empty();
    outcome(
        pass,
        format!(
            "{built} strategies, mass defect {worst_mass:.1e}, child-sum defect {worst_child:.1e}, \
             {cells} cells, {} outside 4 sigma {bad_cells:?}",
            bad_cells.len()
        ),
    )
}

fn c8_hardness() -> Outcome {
    let rng = RandomSource::new(SEED).child(8);
    let run = |n: usize| {
        let s = CompBasis::new(n, HARDNESS_DEPTH).expect("valid");
        hardness_experiment(&s, n, &QuantumState::zero(1 << n).expect("valid"), HARDNESS_SAMPLES, &rng.child(n as u64))
            .expect("valid")
    };
    let small = run(2);
    let large = run(6);
    let oto = hardness_experiment(
        &OtoTheorem1::new(6).expect("even"),
        6,
        &QuantumState::zero(64).expect("valid"),
        HARDNESS_SAMPLES,
        &rng.child(100),
    )
    .expect("valid");
    let trend = large.ci_high < small.ci_low;
    let oto_ok = oto.tv_estimate >= OTO_TV_TARGET;
    outcome(
        trend && oto_ok,
        format!(
            "comp-basis T=4: TV(n=2) = {:.4} [{:.4}, {:.4}], TV(n=6) = {:.4} [{:.4}, {:.4}]; \
             oto-theorem1 TV(n=6) = {:.4} [{:.4}, {:.4}]",
            small.tv_estimate,
            small.ci_low,
            small.ci_high,
            large.tv_estimate,
            large.ci_low,
            large.ci_high,
            oto.tv_estimate,
            oto.ci_low,
            oto.ci_high
        ),
    )
}

fn c9_identity_decay() -> Outcome {
    let mut worst = (0.0f64, 0, 0);
    for k in 1..=4usize {
        for d in 2 * k..=64 {
            let table = weingarten_table(k, d).expect("d >= k");
            let identity = otoc_core::perm::Permutation::identity(k);
            let dev = table.wg(&identity) - BigRational::new(BigInt::from(1), BigInt::from(d).pow(k as u32));
            let scaled = dev.abs() * BigRational::from_integer(BigInt::from(d).pow(k as u32 + 2));
            let value = rational_to_f64(&scaled);
            if value > worst.0 {
                worst = (value, k, d);
            }
        }
    }
    outcome(
        worst.0 < DECAY_CONSTANT,
        format!("max {:.4} at k={}, d={} (constant {DECAY_CONSTANT})", worst.0, worst.1, worst.2),
    )
}

fn c10_census() -> Outcome {
    let mut violations = Vec::new();
    for t in 1..=7 {
        let census = longest_cycle_census(t).expect("t <= 8");
        let total: u64 = census.values().sum();
        if total != factorial(t) {
            return outcome(false, format!("T={t}: census sums to {total}, not {}", factorial(t)));
        }
        for (&l, &count) in &census {
            let bound = falling_factorial(t, l);
            if count > bound {
                violations.push(format!("N({t},{l}) = {count} > {bound}"));
            }
        }
    }
    if violations.is_empty() {
        outcome(true, "sums equal T! and every bound holds for T <= 7")
    } else {
        outcome(
            false,
            format!("sums equal T!; bound N(T,L) <= T!/(T-L)! fails: {}", violations.join(", ")),
        )
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "Weingarten orthogonality", c1_orthogonality),
        (2, "absolute Weingarten sum", c2_abs_sum),
        (3, "exact OTOC expectation by contraction", c3_exact_otoc),
        (4, "Monte Carlo OTOC expectation", c4_monte_carlo),
        (5, "product invariance", c5_product),
        (6, "one-query distinguisher", c6_distinguisher),
        (7, "learning-tree soundness", c7_tree_soundness),
        (8, "hardness proxy", c8_hardness),
        (9, "identity Weingarten decay", c9_identity_decay),
        (10, "longest-cycle census", c10_census),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let expected_fail = EXPECTED_FAILURES.contains(&id);
        let tag = match (o.pass, expected_fail) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (expected)",
            (true, true) => "PASS (unexpected)",
        };
        if o.pass == expected_fail {
            unexpected += 1;
        }
        println!("criterion {id:>2} [{tag}] {name}: {} ({secs:.1}s)", o.detail);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criterion result(s) differ from expectation");
        ExitCode::FAILURE
    }
}
