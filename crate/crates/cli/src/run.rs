//! Executes a validated configuration and assembles the report.

use std::io::Write;
use std::time::Instant;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use otoc_core::otoc::{
    expected_otoc_exact, expected_otoc_weingarten, monte_carlo_expected_otoc, success_probability_with, DecisionRule,
    SuccessReport, MAX_WEINGARTEN_QUBITS,
};
use otoc_core::stats::MeanEstimate;
use otoc_core::tree::{
    build_strategy, child_sum_check, depolarizing_reference, ensemble_leaf_distribution, hardness_experiment_with,
    lecam_success_bound, leaf_count, tv_distance, HardnessOptions, HardnessReport, LEAF_CAP,
};
use otoc_core::weingarten::{
    falling_factorial_reciprocal, lemma6_sum, orthogonality_holds, rational_to_f64, wg_asymptotic_report,
    AsymptoticReport, WeingartenJson,
};
use otoc_core::{gram_matrix, sample_haar_unitary, weingarten_table, ComplexMatrix, EnsembleKind, QuantumState, RandomSource};

use crate::config::{Experiment, ExperimentConfig};

pub const TOOL: &str = "otoc-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exact rational as decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for Rational {
    fn from(r: &BigRational) -> Self {
        Self {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeingartenVerifyResult {
    pub table: WeingartenJson,
    pub orthogonality: bool,
    /// `Σ_τ |Wg(τ, d)|`.
    pub abs_sum: Rational,
    /// `(d - k)! / d!`.
    pub abs_sum_expected: Rational,
    pub abs_sum_matches: bool,
    pub asymptotic: AsymptoticReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OtocExpectationResult {
    pub n: usize,
    pub exact: Rational,
    pub exact_f64: f64,
    /// Same value from the second-moment Weingarten contraction, when `n` is small enough.
    pub weingarten: Option<Rational>,
    pub weingarten_matches: Option<bool>,
    pub monte_carlo: MeanEstimate<f64>,
    pub z_score: f64,
    pub within_four_sigma: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistinguishResult {
    pub shots: usize,
    pub report: SuccessReport,
    /// `1 - E[OTOC]/2`, the single-shot balanced success rate.
    pub single_shot_expected: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearningTreeResult {
    pub strategy: String,
    pub n: usize,
    pub depth: usize,
    pub time_ordered: bool,
    pub samples: usize,
    pub leaves: usize,
    pub global: serde_json::Value,
    pub product: serde_json::Value,
    pub depolarizing: serde_json::Value,
    pub tv_global_product: f64,
    pub tv_global_depolarizing: f64,
    pub tv_product_depolarizing: f64,
    pub lecam_bound: f64,
    pub child_sum_defect: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HardnessSweepResult {
    pub strategy: String,
    pub depth: usize,
    pub samples: usize,
    pub bootstrap: usize,
    pub points: Vec<HardnessReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Results {
    WeingartenVerify(WeingartenVerifyResult),
    OtocExpectation(OtocExpectationResult),
    Distinguish(DistinguishResult),
    LearningTree(LearningTreeResult),
    HardnessSweep(HardnessSweepResult),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub results: Results,
    pub wall_time_ms: f64,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

impl RunReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the experiment. Results depend only on the config.
pub fn execute(config: &ExperimentConfig) -> otoc_core::Result<RunReport> {
    let start = Instant::now();
    let results = compute(config)?;
    Ok(RunReport {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        config: config.clone(),
        results,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
    })
}

fn need<T: Copy>(v: Option<T>, what: &str) -> otoc_core::Result<T> {
    v.ok_or_else(|| otoc_core::Error::InvalidParameter(format!("config is missing {what}")))
}

pub fn compute(c: &ExperimentConfig) -> otoc_core::Result<Results> {
    let rng = RandomSource::new(c.seed);
    Ok(match c.experiment {
        Experiment::WeingartenVerify => {
            let (k, d) = (need(c.k, "k")?, need(c.d, "d")?);
            let table = weingarten_table(k, d)?;
            let gram = gram_matrix(k, d)?;
            let abs_sum = lemma6_sum(k, d)?;
            let expected = falling_factorial_reciprocal(k, d);
            Results::WeingartenVerify(WeingartenVerifyResult {
                table: table.to_json(),
                orthogonality: orthogonality_holds(&table, &gram)?,
                abs_sum_matches: abs_sum == expected,
                abs_sum: (&abs_sum).into(),
                abs_sum_expected: (&expected).into(),
                asymptotic: wg_asymptotic_report(k, d)?,
            })
        }
        Experiment::OtocExpectation => {
            let n = need(c.n, "n")?;
            let exact = expected_otoc_exact(n)?;
            let exact_f64 = rational_to_f64(&exact);
            let wg = if n <= MAX_WEINGARTEN_QUBITS {
                Some(expected_otoc_weingarten(n)?)
            } else {
                None
            };
            let mc = monte_carlo_expected_otoc(n, need(c.samples, "samples")?, &rng)?;
            let z_score = if mc.stderr > 0.0 {
                (mc.mean - exact_f64) / mc.stderr
            } else {
                0.0
            };
            Results::OtocExpectation(OtocExpectationResult {
                n,
                exact: (&exact).into(),
                exact_f64,
                weingarten_matches: wg.as_ref().map(|w| *w == exact),
                weingarten: wg.as_ref().map(Rational::from),
                monte_carlo: mc,
                z_score,
                within_four_sigma: z_score.abs() <= 4.0,
            })
        }
        Experiment::Distinguish => {
            let n = need(c.n, "n")?;
            let shots = need(c.shots, "shots")?;
            let report = success_probability_with(n, need(c.trials, "trials")?, DecisionRule { shots }, &rng)?;
            let e = rational_to_f64(&expected_otoc_exact(n)?);
            Results::Distinguish(DistinguishResult {
                shots,
                report,
                single_shot_expected: 1.0 - e / 2.0,
            })
        }
        Experiment::LearningTree => {
            let n = need(c.n, "n")?;
            let name = c.strategy.as_deref().unwrap_or(crate::config::DEFAULT_STRATEGY);
            let samples = need(c.samples, "samples")?;
            let strategy = build_strategy(name, n, c.depth, c.seed)?;
            let s = strategy.as_ref();
            let dim = s.dim();
            let rho0 = QuantumState::basis(dim, 0)?;
            let leaves = leaf_count(s, LEAF_CAP)?;
            let global = ensemble_leaf_distribution(s, EnsembleKind::GlobalHaar, &rho0, samples, &rng.child(0))?;
            let product = ensemble_leaf_distribution(s, EnsembleKind::ProductHaar, &rho0, samples, &rng.child(1))?;
            let depolarizing = depolarizing_reference(s, &rho0)?;
            let probe = sample_haar_unitary(dim, &mut rng.child(3))?.matrix().column(0);
            let tv = tv_distance(&global, &product);
            Results::LearningTree(LearningTreeResult {
                strategy: name.to_string(),
                n,
                depth: s.depth(),
                time_ordered: s.time_ordered(),
                samples,
                leaves,
                tv_global_product: tv,
                tv_global_depolarizing: tv_distance(&global, &depolarizing),
                tv_product_depolarizing: tv_distance(&product, &depolarizing),
                lecam_bound: lecam_success_bound(tv.clamp(0.0, 1.0))?,
                child_sum_defect: child_sum_check(s, &ComplexMatrix::outer(&probe, &probe))?,
                global: global.to_json(),
                product: product.to_json(),
                depolarizing: depolarizing.to_json(),
            })
        }
        Experiment::HardnessSweep => {
            let name = c.strategy.as_deref().unwrap_or(crate::config::DEFAULT_STRATEGY);
            let ns = c.n_values.clone().unwrap_or_default();
            let mut options = HardnessOptions::new(need(c.samples, "samples")?);
            options.bootstrap = need(c.bootstrap, "bootstrap")?;
            let mut points = Vec::with_capacity(ns.len());
            let mut depth = c.depth.unwrap_or(0);
            for &n in &ns {
                let strategy = build_strategy(name, n, c.depth, c.seed)?;
                depth = strategy.depth();
                let rho0 = QuantumState::basis(strategy.dim(), 0)?;
                // Each point has its own stream so adding sizes leaves the others unchanged.
                points.push(hardness_experiment_with(strategy.as_ref(), n, &rho0, options, &rng.child(n as u64))?);
            }
            Results::HardnessSweep(HardnessSweepResult {
                strategy: name.to_string(),
                depth,
                samples: options.samples,
                bootstrap: options.bootstrap,
                points,
            })
        }
    })
}

/// `n,tv,ci_low,ci_high`, one row per sweep point.
pub fn write_csv<W: Write>(sweep: &HardnessSweepResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "tv", "ci_low", "ci_high"])?;
    for p in &sweep.points {
        w.serialize((p.n, p.tv_estimate, p.ci_low, p.ci_high))?;
    }
    w.flush()?;
    Ok(())
}
