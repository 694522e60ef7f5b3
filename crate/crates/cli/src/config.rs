//! Experiment configuration: parsing and validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use otoc_core::otoc::MAX_QUBITS;
use otoc_core::perm::MAX_ENUMERATION;
use otoc_core::tree::{registry, DEFAULT_DEPTH, STRATEGY_NAMES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    WeingartenVerify,
    OtocExpectation,
    Distinguish,
    LearningTree,
    HardnessSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::WeingartenVerify,
        Experiment::OtocExpectation,
        Experiment::Distinguish,
        Experiment::LearningTree,
        Experiment::HardnessSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::WeingartenVerify => "weingarten-verify",
            Experiment::OtocExpectation => "otoc-expectation",
            Experiment::Distinguish => "distinguish",
            Experiment::LearningTree => "learning-tree",
            Experiment::HardnessSweep => "hardness-sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    /// Fields this experiment reads, besides `experiment`, `seed` and the output paths.
    fn fields(self) -> &'static [&'static str] {
        match self {
            Experiment::WeingartenVerify => &["k", "d"],
            Experiment::OtocExpectation => &["n", "samples"],
            Experiment::Distinguish => &["n", "trials", "shots"],
            Experiment::LearningTree => &["n", "strategy", "depth", "samples"],
            Experiment::HardnessSweep => &["n_values", "strategy", "depth", "samples", "bootstrap"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated configuration with defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_values: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bootstrap: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub csv_path: Option<String>,
}

/// Command-line overrides applied before validation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Sets `samples`, or `trials` for `distinguish`.
    pub samples: Option<usize>,
    pub output_path: Option<String>,
    pub csv_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid config ({} problem{}):", self.violations.len(), if self.violations.len() == 1 { "" } else { "s" })?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

pub const DEFAULT_MC_SAMPLES: usize = 10_000;
pub const DEFAULT_TRIALS: usize = 2_000;
pub const DEFAULT_TREE_SAMPLES: usize = 200;
pub const DEFAULT_SWEEP_SAMPLES: usize = 500;
pub const DEFAULT_BOOTSTRAP: usize = 200;
pub const DEFAULT_SWEEP: [usize; 3] = [2, 4, 6];
pub const DEFAULT_STRATEGY: &str = "comp-basis";

const KNOWN_FIELDS: [&str; 14] = [
    "experiment",
    "n",
    "n_values",
    "k",
    "d",
    "samples",
    "trials",
    "shots",
    "depth",
    "strategy",
    "bootstrap",
    "seed",
    "output_path",
    "csv_path",
];

struct Fields<'a> {
    map: &'a Map<String, Value>,
    errors: Vec<String>,
}

impl Fields<'_> {
    fn uint(&mut self, key: &str) -> Option<u64> {
        let v = self.map.get(key)?;
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.errors.push(format!("{key}: expected a non-negative integer, got {v}"));
                None
            }
        }
    }

    fn usize(&mut self, key: &str) -> Option<usize> {
        self.uint(key).map(|x| x as usize)
    }

    fn string(&mut self, key: &str) -> Option<String> {
        let v = self.map.get(key)?;
        match v.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.errors.push(format!("{key}: expected a string, got {v}"));
                None
            }
        }
    }

    fn usize_list(&mut self, key: &str) -> Option<Vec<usize>> {
        let v = self.map.get(key)?;
        let list = v.as_array().and_then(|a| a.iter().map(|x| x.as_u64().map(|x| x as usize)).collect::<Option<Vec<_>>>());
        if list.is_none() {
            self.errors.push(format!("{key}: expected an array of non-negative integers, got {v}"));
        }
        list
    }
}

fn check_even_n(n: usize, key: &str, errors: &mut Vec<String>) {
    if n == 0 || !n.is_multiple_of(2) {
        errors.push(format!("{key}: n must be even and positive, got {n}"));
    } else if n > MAX_QUBITS {
        errors.push(format!("{key}: n must be at most {MAX_QUBITS}, got {n}"));
    }
}

fn check_min(value: Option<usize>, key: &str, min: usize, errors: &mut Vec<String>) {
    if let Some(v) = value {
        if v < min {
            errors.push(format!("{key}: must be at least {min}, got {v}"));
        }
    }
}

/// Parses and validates a JSON config, reporting every violation at once.
pub fn parse_config(source: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(source, &Overrides::default())
}

pub fn parse_config_with(source: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let fail = |v: String| ConfigError { violations: vec![v] };
    let value: Value = serde_json::from_str(source).map_err(|e| fail(format!("not valid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(fail("config must be a JSON object".into()));
    };
    let mut f = Fields { map: &map, errors: Vec::new() };

    for key in map.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) {
            f.errors.push(format!("{key}: unknown field"));
        }
    }

    let experiment = match map.get("experiment") {
        None => {
            f.errors.push("experiment: missing (one of weingarten-verify, otoc-expectation, distinguish, learning-tree, hardness-sweep)".into());
            None
        }
        Some(Value::String(s)) => {
            let e = Experiment::parse(s);
            if e.is_none() {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                f.errors.push(format!("experiment: unknown experiment '{s}' (expected one of {})", names.join(", ")));
            }
            e
        }
        Some(v) => {
            f.errors.push(format!("experiment: expected a string, got {v}"));
            None
        }
    };

    let seed = match overrides.seed {
        Some(s) => Some(s),
        None if !map.contains_key("seed") => {
            f.errors.push("seed: missing (a 64-bit unsigned integer is required for reproducibility)".into());
            None
        }
        None => f.uint("seed"),
    };

    let mut config = ExperimentConfig {
        experiment: experiment.unwrap_or(Experiment::OtocExpectation),
        n: f.usize("n"),
        n_values: f.usize_list("n_values"),
        k: f.usize("k"),
        d: f.usize("d"),
        samples: f.usize("samples"),
        trials: f.usize("trials"),
        shots: f.usize("shots"),
        depth: f.usize("depth"),
        strategy: f.string("strategy"),
        bootstrap: f.usize("bootstrap"),
        seed: seed.unwrap_or(0),
        output_path: f.string("output_path"),
        csv_path: f.string("csv_path"),
    };
    let mut errors = f.errors;

    if let Some(s) = overrides.samples {
        if config.experiment == Experiment::Distinguish {
            config.trials = Some(s);
        } else {
            config.samples = Some(s);
        }
    }
    if overrides.output_path.is_some() {
        config.output_path.clone_from(&overrides.output_path);
    }
    if overrides.csv_path.is_some() {
        config.csv_path.clone_from(&overrides.csv_path);
    }

    if let Some(e) = experiment {
        validate(e, &mut config, &map, overrides, &mut errors);
    }
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError { violations: errors })
    }
}

fn validate(e: Experiment, c: &mut ExperimentConfig, map: &Map<String, Value>, o: &Overrides, errors: &mut Vec<String>) {
    let used = e.fields();
    for key in ["n", "n_values", "k", "d", "samples", "trials", "shots", "depth", "strategy", "bootstrap"] {
        let overridden = o.samples.is_some() && (key == "samples" || key == "trials");
        if map.contains_key(key) && !used.contains(&key) && !overridden {
            errors.push(format!("{key}: not used by experiment {e}"));
        }
    }
    if c.csv_path.is_some() && e != Experiment::HardnessSweep {
        errors.push(format!("csv_path: CSV export is only produced by hardness-sweep, not {e}"));
    }

    let require = |v: &Option<usize>, key: &str, errors: &mut Vec<String>| {
        if v.is_none() && !errors.iter().any(|x| x.starts_with(&format!("{key}:"))) {
            errors.push(format!("{key}: required by experiment {e}"));
        }
    };

    match e {
        Experiment::WeingartenVerify => {
            require(&c.k, "k", errors);
            require(&c.d, "d", errors);
            if let (Some(k), Some(d)) = (c.k, c.d) {
                if k == 0 || k > MAX_ENUMERATION {
                    errors.push(format!("k: must be in 1..={MAX_ENUMERATION}, got {k}"));
                }
                if d < k {
                    errors.push(format!("d: d < k ({d} < {k}) makes the Gram matrix singular"));
                }
            }
        }
        Experiment::OtocExpectation => {
            require(&c.n, "n", errors);
            if let Some(n) = c.n {
                check_even_n(n, "n", errors);
            }
            c.samples.get_or_insert(DEFAULT_MC_SAMPLES);
            check_min(c.samples, "samples", 100, errors);
        }
        Experiment::Distinguish => {
            require(&c.n, "n", errors);
            if let Some(n) = c.n {
                check_even_n(n, "n", errors);
            }
            c.trials.get_or_insert(DEFAULT_TRIALS);
            c.shots.get_or_insert(1);
            check_min(c.trials, "trials", 100, errors);
            check_min(c.shots, "shots", 1, errors);
        }
        Experiment::LearningTree | Experiment::HardnessSweep => {
            let ns: Vec<usize> = if e == Experiment::LearningTree {
                require(&c.n, "n", errors);
                c.n.into_iter().collect()
            } else {
                c.n_values.get_or_insert_with(|| DEFAULT_SWEEP.to_vec()).clone()
            };
            if e == Experiment::HardnessSweep && ns.is_empty() {
                errors.push("n_values: must not be empty".into());
            }
            let key = if e == Experiment::LearningTree { "n" } else { "n_values" };
            for &n in &ns {
                check_even_n(n, key, errors);
            }
            let strategy = c.strategy.get_or_insert_with(|| DEFAULT_STRATEGY.to_string()).clone();
            match registry().into_iter().find(|i| i.name == strategy) {
                None => errors.push(format!(
                    "strategy: unknown strategy '{strategy}' (expected one of {})",
                    STRATEGY_NAMES.join(", ")
                )),
                Some(info) => match (info.fixed_depth, c.depth) {
                    (Some(fixed), Some(t)) if t != fixed => {
                        errors.push(format!("depth: {strategy} has fixed depth {fixed}, got {t}"))
                    }
                    (Some(fixed), _) => c.depth = Some(fixed),
                    (None, _) => {
                        c.depth.get_or_insert(DEFAULT_DEPTH);
                    }
                },
            }
            check_min(c.depth, "depth", 1, errors);
            let default_samples = if e == Experiment::LearningTree { DEFAULT_TREE_SAMPLES } else { DEFAULT_SWEEP_SAMPLES };
            c.samples.get_or_insert(default_samples);
            check_min(c.samples, "samples", 10, errors);
            if e == Experiment::HardnessSweep {
                c.bootstrap.get_or_insert(DEFAULT_BOOTSTRAP);
                check_min(c.bootstrap, "bootstrap", 10, errors);
            }
        }
    }
}
