//! Three demo operations for the static page in `www/`. Each returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use otoc_core::otoc::{expected_otoc_exact, otoc_samples, MAX_QUBITS};
use otoc_core::tree::{build_strategy, hardness_experiment_with, registry, HardnessOptions, HardnessReport};
use otoc_core::weingarten::{orthogonality_holds, rational_to_f64, WeingartenJson};
use otoc_core::{gram_matrix, weingarten_table, EnsembleKind, OtocInstance, QuantumState, RandomSource};

/// Page limits, kept small so a single-threaded browser tab stays responsive.
pub const MAX_DEMO_K: usize = 6;
pub const MAX_DEMO_SAMPLES: usize = 20_000;
pub const MAX_SWEEP_QUBITS: usize = 6;

#[derive(Serialize)]
struct TableView {
    #[serde(flatten)]
    table: WeingartenJson,
    values: Vec<f64>,
    orthogonality: bool,
}

pub fn weingarten_json(k: usize, d: usize) -> Result<String, String> {
    if k > MAX_DEMO_K {
        return Err(format!("the demo stops at k = {MAX_DEMO_K}"));
    }
    let table = weingarten_table(k, d).map_err(|e| e.to_string())?;
    let gram = gram_matrix(k, d).map_err(|e| e.to_string())?;
    let view = TableView {
        values: table.entries().iter().map(|e| rational_to_f64(&e.value)).collect(),
        orthogonality: orthogonality_holds(&table, &gram).map_err(|e| e.to_string())?,
        table: table.to_json(),
    };
    Ok(serde_json::to_string(&view).expect("serializes"))
}

#[derive(Serialize)]
struct Histogram {
    n: usize,
    samples: usize,
    bins: usize,
    /// `E[OTOC]` over the global ensemble.
    exact_mean: f64,
    global_mean: f64,
    product_mean: f64,
    global_counts: Vec<usize>,
    product_counts: Vec<usize>,
}

fn bin_counts(values: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in values {
        counts[((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)] += 1;
    }
    counts
}

pub fn otoc_histogram_json(n: usize, samples: usize, bins: usize, seed: u64) -> Result<String, String> {
    let instance = OtocInstance::new(n).map_err(|e| e.to_string())?;
    if !(1..=MAX_DEMO_SAMPLES).contains(&samples) || !(1..=200).contains(&bins) {
        return Err(format!("samples must be in 1..={MAX_DEMO_SAMPLES} and bins in 1..=200"));
    }
    let rng = RandomSource::new(seed);
    let global = otoc_samples(instance, EnsembleKind::GlobalHaar, samples, &rng.child(0));
    let product = otoc_samples(instance, EnsembleKind::ProductHaar, samples, &rng.child(1));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let h = Histogram {
        n,
        samples,
        bins,
        exact_mean: rational_to_f64(&expected_otoc_exact(n).map_err(|e| e.to_string())?),
        global_mean: mean(&global),
        product_mean: mean(&product),
        global_counts: bin_counts(&global, bins),
        product_counts: bin_counts(&product, bins),
    };
    Ok(serde_json::to_string(&h).expect("serializes"))
}

pub fn tv_sweep_json(strategy: &str, depth: usize, samples: usize, max_n: usize, seed: u64) -> Result<String, String> {
    if max_n > MAX_SWEEP_QUBITS.min(MAX_QUBITS) {
        return Err(format!("the demo sweep stops at n = {MAX_SWEEP_QUBITS}"));
    }
    // Strategies with a fixed depth ignore the requested one.
    let depth = registry().into_iter().find(|i| i.name == strategy).and_then(|i| i.fixed_depth).unwrap_or(depth);
    let rng = RandomSource::new(seed);
    let mut options = HardnessOptions::new(samples);
    options.bootstrap = 50;
    let mut points: Vec<HardnessReport> = Vec::new();
    for n in (2..=max_n).step_by(2) {
        let s = build_strategy(strategy, n, Some(depth), seed).map_err(|e| e.to_string())?;
        let rho0 = QuantumState::basis(s.dim(), 0).map_err(|e| e.to_string())?;
        let report =
            hardness_experiment_with(s.as_ref(), n, &rho0, options, &rng.child(n as u64)).map_err(|e| e.to_string())?;
        points.push(report);
    }
    Ok(serde_json::to_string(&points).expect("serializes"))
}

#[wasm_bindgen(js_name = weingartenTable)]
pub fn weingarten_table_js(k: usize, d: usize) -> Result<String, JsError> {
    weingarten_json(k, d).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = otocHistogram)]
pub fn otoc_histogram_js(n: usize, samples: usize, bins: usize, seed: u32) -> Result<String, JsError> {
    otoc_histogram_json(n, samples, bins, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = tvSweep)]
pub fn tv_sweep_js(strategy: &str, depth: usize, samples: usize, max_n: usize, seed: u32) -> Result<String, JsError> {
    tv_sweep_json(strategy, depth, samples, max_n, u64::from(seed)).map_err(|e| JsError::new(&e))
}
