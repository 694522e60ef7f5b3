use std::sync::Arc;

use otoc_core::matrix::{sample_haar_unitary, ComplexMatrix, QuantumState, UnitaryMatrix, C64};
use otoc_core::otoc::{expected_otoc_exact, otoc_value, EnsembleKind};
use otoc_core::rng::RandomSource;
use otoc_core::stats::four_sigma_cell_ok;
use otoc_core::tree::*;
use otoc_core::Error;
use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};
use proptest::strategy::Strategy as PropStrategy;

fn zero(n: usize) -> QuantumState {
    QuantumState::zero(1 << n).unwrap()
}

fn all_prefixes(s: &dyn Strategy) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![Vec::new()];
    while let Some(p) = stack.pop() {
        if p.len() == s.depth() {
            continue;
        }
        let (_, povm) = s.node(&p);
        for o in 0..povm.len() {
            let mut c = p.clone();
            c.push(o);
            stack.push(c);
        }
        out.push(p);
    }
    out
}

struct Custom {
    kind: QueryKind,
    povm: Arc<Povm>,
    time_ordered: bool,
}

impl Strategy for Custom {
    fn name(&self) -> &str {
        "custom"
    }
    fn description(&self) -> &str {
        "test fixture"
    }
    fn dim(&self) -> usize {
        self.povm.dim()
    }
    fn depth(&self) -> usize {
        2
    }
    fn time_ordered(&self) -> bool {
        self.time_ordered
    }
    fn node(&self, _: &[usize]) -> (QueryKind, Arc<Povm>) {
        (self.kind, Arc::clone(&self.povm))
    }
}

#[test]
fn exact_tree_examples() {
    let s = CompBasis::new(1, 1).unwrap();
    let d = run_tree_exact(&s, &UnitaryMatrix::identity(2), &zero(1)).unwrap();
    assert_eq!(d.get(&[0]), 1.0);
    assert_eq!(d.get(&[1]), 0.0);
    let x = UnitaryMatrix::new(ComplexMatrix::pauli_x()).unwrap();
    let d = run_tree_exact(&s, &x, &zero(1)).unwrap();
    assert_eq!(d.get(&[1]), 1.0);

    let t = TrivialStrategy::new(2, 2).unwrap();
    let u = sample_haar_unitary(4, &mut RandomSource::new(1)).unwrap();
    let d = run_tree_exact(&t, &u, &zero(2)).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d.get(&[0, 0]), 1.0);
}

#[test]
fn density_input_matches_pure_input() {
    let mut rng = RandomSource::new(9);
    let s = RandomizedStrategy::new(RandomizedOptions {
        dim: 4,
        depth: 2,
        seed: 4,
        adaptive: true,
        allow_inverse: true,
        overcomplete: true,
    })
    .unwrap();
    let u = sample_haar_unitary(4, &mut rng).unwrap();
    let psi = sample_haar_unitary(4, &mut rng).unwrap().matrix().column(0);
    let pure = QuantumState::pure(psi).unwrap();
    let mixed = QuantumState::density(pure.to_density()).unwrap();
    let a = run_tree_exact(&s, &u, &pure).unwrap();
    let b = run_tree_exact(&s, &u, &mixed).unwrap();
    assert_eq!(a.transcripts(), b.transcripts());
    for (p, q) in a.probabilities().iter().zip(b.probabilities()) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn oto_tree_acceptance_is_the_otoc() {
    let mut rng = RandomSource::new(2);
    for n in [2, 4] {
        let s = OtoTheorem1::new(n).unwrap();
        for kind in EnsembleKind::ALL {
            let u = kind.sample(otoc_core::OtocInstance::new(n).unwrap(), &mut rng);
            let d = run_tree_exact(&s, &u, &zero(n)).unwrap();
            assert!((d.get(&[0, 0]) - otoc_value(&u, n).unwrap()).abs() < 1e-12);
            assert!((d.total_mass() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn structural_errors() {
    let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
    let bad = Custom {
        kind: QueryKind::Forward,
        povm: Arc::new(Povm::from_matrices(vec![half.clone(), half]).unwrap()),
        time_ordered: true,
    };
    let u = UnitaryMatrix::identity(2);
    match run_tree_exact(&bad, &u, &zero(1)) {
        Err(Error::IncompletePovm { prefix, defect }) => {
            assert!(prefix.is_empty());
            assert!((defect - 0.5).abs() < 1e-15);
        }
        other => panic!("{other:?}"),
    }
    let liar = Custom {
        kind: QueryKind::Inverse,
        povm: Arc::new(Povm::computational(2).unwrap()),
        time_ordered: true,
    };
    assert!(matches!(run_tree_exact(&liar, &u, &zero(1)), Err(Error::InverseInTimeOrdered(_))));
    assert!(matches!(
        run_tree_exact(&CompBasis::new(1, 1).unwrap(), &UnitaryMatrix::identity(4), &zero(1)),
        Err(Error::StrategyDimension { .. })
    ));
    let big = CompBasis::new(6, 4).unwrap();
    assert!(matches!(
        run_tree_exact(&big, &UnitaryMatrix::identity(64), &zero(6)),
        Err(Error::TranscriptCap { cap: LEAF_CAP })
    ));
    // Sampling is not capped.
    let t = sample_trajectory(&big, &UnitaryMatrix::identity(64), &zero(6), &mut RandomSource::new(0)).unwrap();
    assert_eq!(t, vec![0, 0, 0, 0]);
}

#[test]
fn trajectory_examples() {
    let s = CompBasis::new(1, 1).unwrap();
    let mut rng = RandomSource::new(5);
    for _ in 0..50 {
        assert_eq!(sample_trajectory(&s, &UnitaryMatrix::identity(2), &zero(1), &mut rng).unwrap(), vec![0]);
    }
    let s2 = CompBasis::new(2, 3).unwrap();
    let u = sample_haar_unitary(4, &mut rng).unwrap();
    let a = sample_trajectory(&s2, &u, &zero(2), &mut RandomSource::new(77)).unwrap();
    let b = sample_trajectory(&s2, &u, &zero(2), &mut RandomSource::new(77)).unwrap();
    assert_eq!(a, b);

    // Haar-averaged single round: each outcome has probability 1/d.
    let samples = 10_000;
    let mut counts = [0usize; 4];
    let s1 = CompBasis::new(2, 1).unwrap();
    let root = RandomSource::new(31);
    for i in 0..samples {
        let mut r = root.child(i);
        let u = sample_haar_unitary(4, &mut r).unwrap();
        counts[sample_trajectory(&s1, &u, &zero(2), &mut r).unwrap()[0]] += 1;
    }
    for c in counts {
        assert!(four_sigma_cell_ok(samples as usize, 0.25, c), "{counts:?}");
    }
}

#[test]
fn ensemble_examples() {
    let rng = RandomSource::new(13);
    let s = CompBasis::new(2, 1).unwrap();
    let samples = ensemble_leaf_samples(&s, EnsembleKind::GlobalHaar, &zero(2), 2000, &rng).unwrap();
    let mean = samples.mean();
    for j in 0..4 {
        let xs: Vec<f64> = samples.values.iter().map(|v| v[j]).collect();
        let est = otoc_core::stats::MeanEstimate::from_real(&xs);
        assert!((mean[j] - 0.25).abs() <= 4.0 * est.stderr, "{j}: {est:?}");
    }

    let t = TrivialStrategy::new(2, 3).unwrap();
    for kind in EnsembleKind::ALL {
        let d = ensemble_leaf_distribution(&t, kind, &zero(2), 10, &rng).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.total_mass(), 1.0);
    }

    // Product ensemble: each block's marginal is uniform.
    let s4 = CompBasis::new(4, 1).unwrap();
    let samples = ensemble_leaf_samples(&s4, EnsembleKind::ProductHaar, &zero(4), 2000, &rng).unwrap();
    for block in 0..2 {
        for digit in 0..4 {
            let xs: Vec<f64> = samples
                .values
                .iter()
                .map(|v| (0..16).filter(|&i| if block == 0 { i >> 2 } else { i & 3 } == digit).map(|i| v[i]).sum())
                .collect();
            let est = otoc_core::stats::MeanEstimate::from_real(&xs);
            assert!((est.mean - 0.25).abs() <= 4.0 * est.stderr, "block {block} digit {digit}: {est:?}");
        }
    }
    assert!(ensemble_leaf_samples(&s, EnsembleKind::GlobalHaar, &zero(2), 5, &rng).is_err());
}

#[test]
fn depolarizing_examples() {
    let d = depolarizing_reference(&CompBasis::new(2, 1).unwrap(), &zero(2)).unwrap();
    assert!(d.probabilities().iter().all(|&p| p == 0.25));
    let d = depolarizing_reference(&CompBasis::new(1, 2).unwrap(), &zero(1)).unwrap();
    assert_eq!(d.len(), 4);
    assert!(d.probabilities().iter().all(|&p| p == 0.25));
    let d = depolarizing_reference(&TrivialStrategy::new(3, 3).unwrap(), &zero(3)).unwrap();
    assert_eq!(d.probabilities(), &[1.0]);

    // Overcomplete rank-one POVMs: tr(F†F) varies and leaves are not uniform.
    let s = RandomizedStrategy::new(RandomizedOptions {
        dim: 2,
        depth: 2,
        seed: 1,
        adaptive: true,
        allow_inverse: false,
        overcomplete: true,
    })
    .unwrap();
    let d = depolarizing_reference(&s, &zero(1)).unwrap();
    assert!((d.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn child_sum_examples() {
    let probe = QuantumState::zero(4).unwrap().to_density();
    assert!(child_sum_check(&CompBasis::new(2, 2).unwrap(), &probe).unwrap() < 1e-10);
    assert!(child_sum_check(&CompBasis::new(2, 2).unwrap(), &ComplexMatrix::identity(4)).unwrap() < 1e-9);
    let r = RandomBasis::new(2, 2, 3).unwrap();
    assert!(child_sum_check(&r, &probe).unwrap() < 1e-9);
    assert!(child_sum_check(&r, &ComplexMatrix::identity(2)).is_err());
}

#[test]
fn builtins_respect_time_order_and_child_sums() {
    let mut rng = RandomSource::new(40);
    for info in registry() {
        for n in [2, 4] {
            let s = build_strategy(info.name, n, info.fixed_depth.or(Some(2)), 7).unwrap();
            assert_eq!(s.time_ordered(), info.time_ordered);
            for p in all_prefixes(s.as_ref()) {
                let (kind, _) = s.node(&p);
                if s.time_ordered() {
                    assert_eq!(kind, QueryKind::Forward);
                }
            }
            let probe = sample_haar_unitary(1 << n, &mut rng).unwrap().matrix().column(0);
            let probe = ComplexMatrix::outer(&probe, &probe);
            assert!(child_sum_check(s.as_ref(), &probe).unwrap() < 1e-9, "{}", info.name);
        }
    }
    assert!(matches!(build_strategy("nope", 2, None, 0), Err(Error::UnknownStrategy(_))));
    assert!(build_strategy("oto-theorem1", 3, None, 0).is_err());
    assert!(build_strategy("oto-theorem1", 2, Some(3), 0).is_err());
}

#[test]
fn leaf_json_export() {
    let s = CompBasis::new(1, 2).unwrap();
    let h = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, -1.0]).unwrap().scale(C64::new(0.5f64.sqrt(), 0.0));
    let d = run_tree_exact(&s, &UnitaryMatrix::new(h).unwrap(), &zero(1)).unwrap();
    let json = d.to_json();
    let obj = json.as_object().unwrap();
    assert_eq!(obj.len(), 4);
    for key in ["0.0", "0.1", "1.0", "1.1"] {
        assert!((obj[key].as_f64().unwrap() - 0.25).abs() < 1e-12);
    }
}

#[test]
fn oto_hardness_and_lecam() {
    let n = 4;
    let s = OtoTheorem1::new(n).unwrap();
    let rng = RandomSource::new(8);
    let r = hardness_experiment(&s, n, &zero(n), 400, &rng).unwrap();
    let target = 1.0 - otoc_core::weingarten::rational_to_f64(&expected_otoc_exact(n).unwrap());
    assert!(r.ci_low <= target && target <= r.ci_high, "{r:?}");
    assert_eq!(r.method, HardnessMethod::Leaf);

    // The single-shot rule is a decision rule on these transcripts.
    let trials = otoc_core::otoc::success_probability(n, 2000, &RandomSource::new(9)).unwrap();
    let bound = lecam_success_bound(r.ci_high).unwrap();
    assert!(trials.success_rate <= bound + trials.ci, "{} vs {bound}", trials.success_rate);
}

#[test]
fn time_ordered_trend_small() {
    let rng = RandomSource::new(17);
    let a = hardness_experiment(&CompBasis::new(2, 2).unwrap(), 2, &zero(2), 500, &rng).unwrap();
    let b = hardness_experiment(&CompBasis::new(4, 2).unwrap(), 4, &zero(4), 500, &rng).unwrap();
    assert_eq!(a.method, HardnessMethod::Lumped);
    assert!(b.tv_estimate < a.tv_estimate, "{a:?} {b:?}");
    assert!(a.ci_low <= a.tv_estimate && a.tv_estimate <= a.ci_high);

    let same = hardness_experiment(&CompBasis::new(2, 2).unwrap(), 2, &zero(2), 500, &rng).unwrap();
    assert_eq!(a, same);

    // The leaf-level method agrees on the point estimate up to Monte Carlo error.
    let mut opts = HardnessOptions::new(500);
    opts.allow_lumping = false;
    let leaf = hardness_experiment_with(&CompBasis::new(2, 2).unwrap(), 2, &zero(2), opts, &rng).unwrap();
    assert_eq!(leaf.method, HardnessMethod::Leaf);
    assert!(leaf.tv_estimate >= a.tv_estimate - 1e-12);
}

fn randomized() -> impl PropStrategy<Value = RandomizedOptions> {
    (1usize..=2, 1usize..=3, any::<u64>(), any::<bool>(), any::<bool>(), any::<bool>()).prop_map(
        |(n, depth, seed, adaptive, allow_inverse, overcomplete)| RandomizedOptions {
            dim: 1 << n,
            depth,
            seed,
            adaptive,
            allow_inverse,
            overcomplete,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn randomized_trees_normalize(opts in randomized(), useed in any::<u64>()) {
        let s = RandomizedStrategy::new(opts).unwrap();
        let u = sample_haar_unitary(opts.dim, &mut RandomSource::new(useed)).unwrap();
        let rho = QuantumState::zero(opts.dim).unwrap();
        let d = run_tree_exact(&s, &u, &rho).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!(d.min_probability() >= -1e-12);
        let dep = depolarizing_reference(&s, &rho).unwrap();
        prop_assert!((dep.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!(child_sum_check(&s, &ComplexMatrix::identity(opts.dim)).unwrap() < 1e-9);
        if s.time_ordered() {
            for p in all_prefixes(&s) {
                prop_assert_eq!(s.node(&p).0, QueryKind::Forward);
            }
        }
    }

    #[test]
    fn tv_is_a_metric_on_leaves(a in proptest::collection::vec(0.0f64..1.0, 6), b in proptest::collection::vec(0.0f64..1.0, 6)) {
        let norm = |v: &Vec<f64>| { let s: f64 = v.iter().sum::<f64>() + 1e-9; v.iter().map(|x| x / s).collect::<Vec<_>>() };
        let ts: Vec<Vec<usize>> = (0..6).map(|i| vec![i]).collect();
        let p = LeafDistribution::from_parts(ts.clone(), norm(&a)).unwrap();
        let q = LeafDistribution::from_parts(ts, norm(&b)).unwrap();
        let tv = tv_distance(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tv));
        prop_assert!((tv - tv_distance(&q, &p)).abs() < 1e-15);
        prop_assert!(lecam_success_bound(tv.min(1.0)).unwrap() >= 0.5);
    }
}

#[test]
fn larger_randomized_trees_normalize() {
    // Non-adaptive trees reach T = 4 at n = 4 and T = 2 at n = 6.
    let rng = RandomSource::new(50);
    for (n, depth) in [(4usize, 4usize), (6, 2), (2, 4)] {
        for seed in 0..3 {
            let s = RandomizedStrategy::new(RandomizedOptions {
                dim: 1 << n,
                depth,
                seed,
                adaptive: false,
                allow_inverse: true,
                overcomplete: false,
            })
            .unwrap();
            let u = sample_haar_unitary(1 << n, &mut rng.child(seed)).unwrap();
            let d = run_tree_exact(&s, &u, &zero(n)).unwrap();
            assert!((d.total_mass() - 1.0).abs() < 1e-9, "n={n} T={depth}");
        }
    }
}
