//! Built-in strategies and the name registry.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use super::{BlockPatternLumping, Ket, Povm, PovmElement, QueryKind, Strategy, Transcript};
use crate::error::{Error, Result};
use crate::matrix::{embed_single_qubit, sample_haar_unitary, ComplexMatrix, C64, ONE, ZERO};
use crate::otoc::{OtocInstance, MAX_QUBITS};
use crate::rng::RandomSource;

pub const STRATEGY_NAMES: [&str; 4] = ["comp-basis", "random-basis", "identity-then-measure", "oto-theorem1"];

/// Depth used when a time-ordered built-in is requested without one.
pub const DEFAULT_DEPTH: usize = 2;

fn check_qubits(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidQubitCount { n, max: MAX_QUBITS });
    }
    Ok(1 << n)
}

fn check_depth(depth: usize) -> Result<usize> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be positive".into()));
    }
    Ok(depth)
}

/// Forward query then a computational-basis measurement, every round.
#[derive(Debug, Clone)]
pub struct CompBasis {
    n: usize,
    depth: usize,
    povm: Arc<Povm>,
}

impl CompBasis {
    pub fn new(n: usize, depth: usize) -> Result<Self> {
        let d = check_qubits(n)?;
        Ok(Self {
            n,
            depth: check_depth(depth)?,
            povm: Arc::new(Povm::computational(d)?),
        })
    }
}

impl Strategy for CompBasis {
    fn name(&self) -> &str {
        "comp-basis"
    }
    fn description(&self) -> &str {
        "time-ordered: apply U, measure all qubits in the computational basis, repeat"
    }
    fn dim(&self) -> usize {
        1 << self.n
    }
    fn depth(&self) -> usize {
        self.depth
    }
    fn time_ordered(&self) -> bool {
        true
    }
    fn node(&self, _: &[usize]) -> (QueryKind, Arc<Povm>) {
        (QueryKind::Forward, Arc::clone(&self.povm))
    }
    fn lumping(&self) -> Option<BlockPatternLumping> {
        self.n.is_multiple_of(2).then(|| BlockPatternLumping::new(self.n / 2))
    }
}

/// Forward query then a measurement in a fixed Haar-random basis per round.
#[derive(Debug, Clone)]
pub struct RandomBasis {
    n: usize,
    bases: Vec<Arc<Povm>>,
}

impl RandomBasis {
    pub fn new(n: usize, depth: usize, seed: u64) -> Result<Self> {
        let d = check_qubits(n)?;
        check_depth(depth)?;
        let rng = RandomSource::with_stream(seed, 0x7261_6e64);
        let bases = (0..depth)
            .map(|t| {
                let u = sample_haar_unitary(d, &mut rng.child(t as u64)).expect("d >= 1");
                Arc::new(Povm::from_unitary_columns(&u))
            })
            .collect();
        Ok(Self { n, bases })
    }
}

impl Strategy for RandomBasis {
    fn name(&self) -> &str {
        "random-basis"
    }
    fn description(&self) -> &str {
        "time-ordered: apply U, measure in a seeded Haar-random basis that changes each round"
    }
    fn dim(&self) -> usize {
        1 << self.n
    }
    fn depth(&self) -> usize {
        self.bases.len()
    }
    fn time_ordered(&self) -> bool {
        true
    }
    fn node(&self, transcript: &[usize]) -> (QueryKind, Arc<Povm>) {
        (QueryKind::Forward, Arc::clone(&self.bases[transcript.len()]))
    }
}

/// Forward queries with the trivial POVM `{I}`, then one computational
/// measurement in the last round.
#[derive(Debug, Clone)]
pub struct IdentityThenMeasure {
    n: usize,
    depth: usize,
    trivial: Arc<Povm>,
    measure: Arc<Povm>,
}

impl IdentityThenMeasure {
    pub fn new(n: usize, depth: usize) -> Result<Self> {
        let d = check_qubits(n)?;
        Ok(Self {
            n,
            depth: check_depth(depth)?,
            trivial: Arc::new(Povm::trivial(d)?),
            measure: Arc::new(Povm::computational(d)?),
        })
    }
}

impl Strategy for IdentityThenMeasure {
    fn name(&self) -> &str {
        "identity-then-measure"
    }
    fn description(&self) -> &str {
        "time-ordered: apply U T times without measuring, then measure in the computational basis"
    }
    fn dim(&self) -> usize {
        1 << self.n
    }
    fn depth(&self) -> usize {
        self.depth
    }
    fn time_ordered(&self) -> bool {
        true
    }
    fn node(&self, transcript: &[usize]) -> (QueryKind, Arc<Povm>) {
        if transcript.len() + 1 == self.depth {
            (QueryKind::Forward, Arc::clone(&self.measure))
        } else {
            (QueryKind::Forward, Arc::clone(&self.trivial))
        }
    }
}

/// The one-query OTOC protocol as a depth-2 tree: `U`, then the single-outcome
/// POVM `{X₁}`, then `U†` and the two-outcome measurement of whether the
/// second block is all-zero. Transcript `(0, 0)` is acceptance.
#[derive(Debug, Clone)]
pub struct OtoTheorem1 {
    n: usize,
    flip: Arc<Povm>,
    block: Arc<Povm>,
}

impl OtoTheorem1 {
    pub fn new(n: usize) -> Result<Self> {
        let inst = OtocInstance::new(n)?;
        let x = embed_single_qubit(&ComplexMatrix::pauli_x(), 0, n)?;
        let mask = inst.block_dim() - 1;
        let accept: Vec<C64> = (0..inst.dim()).map(|i| if i & mask == 0 { ONE } else { ZERO }).collect();
        let reject: Vec<C64> = accept.iter().map(|a| ONE - a).collect();
        Ok(Self {
            n,
            flip: Arc::new(Povm::from_matrices(vec![x])?),
            block: Arc::new(Povm::from_matrices(vec![
                ComplexMatrix::from_diagonal(&accept),
                ComplexMatrix::from_diagonal(&reject),
            ])?),
        })
    }
}

impl Strategy for OtoTheorem1 {
    fn name(&self) -> &str {
        "oto-theorem1"
    }
    fn description(&self) -> &str {
        "out-of-time-order, depth 2: U, flip qubit 1, U dagger, test whether the second block is all-zero"
    }
    fn dim(&self) -> usize {
        1 << self.n
    }
    fn depth(&self) -> usize {
        2
    }
    fn time_ordered(&self) -> bool {
        false
    }
    fn node(&self, transcript: &[usize]) -> (QueryKind, Arc<Povm>) {
        if transcript.is_empty() {
            (QueryKind::Forward, Arc::clone(&self.flip))
        } else {
            (QueryKind::Inverse, Arc::clone(&self.block))
        }
    }
}

/// Every round measures the single-outcome POVM `{I}`, so nothing is learned.
#[derive(Debug, Clone)]
pub struct TrivialStrategy {
    n: usize,
    depth: usize,
    povm: Arc<Povm>,
}

impl TrivialStrategy {
    pub fn new(n: usize, depth: usize) -> Result<Self> {
        let d = check_qubits(n)?;
        Ok(Self {
            n,
            depth: check_depth(depth)?,
            povm: Arc::new(Povm::trivial(d)?),
        })
    }
}

impl Strategy for TrivialStrategy {
    fn name(&self) -> &str {
        "trivial"
    }
    fn description(&self) -> &str {
        "apply U every round and measure nothing"
    }
    fn dim(&self) -> usize {
        1 << self.n
    }
    fn depth(&self) -> usize {
        self.depth
    }
    fn time_ordered(&self) -> bool {
        true
    }
    fn node(&self, _: &[usize]) -> (QueryKind, Arc<Povm>) {
        (QueryKind::Forward, Arc::clone(&self.povm))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomizedOptions {
    pub dim: usize,
    pub depth: usize,
    pub seed: u64,
    /// A fresh POVM at every node rather than one per round.
    pub adaptive: bool,
    /// Draw the query kind at random at each node.
    pub allow_inverse: bool,
    /// Allow POVMs with `d + 1` rank-one outcomes.
    pub overcomplete: bool,
}

/// Seeded random tree with rank-one POVMs built from Haar unitaries.
///
/// A basis POVM uses the columns of a Haar `U(d)`. An overcomplete one with
/// `m = d + 1` outcomes uses `F_i = |i mod d⟩⟨w_i|`, where `w_i` holds the first
/// `d` entries of row `i` of a Haar `U(m)`; the columns of that unitary being
/// orthonormal gives `Σ |w_i⟩⟨w_i| = I`.
#[derive(Debug, Clone)]
pub struct RandomizedStrategy {
    options: RandomizedOptions,
    time_ordered: bool,
    nodes: HashMap<Transcript, (QueryKind, Arc<Povm>)>,
}

impl RandomizedStrategy {
    pub const MAX_NODES: usize = 100_000;

    pub fn new(options: RandomizedOptions) -> Result<Self> {
        if options.dim == 0 {
            return Err(Error::ZeroDimension);
        }
        check_depth(options.depth)?;
        let rng = RandomSource::with_stream(options.seed, 0x7472_6565);
        let mut nodes = HashMap::new();
        let mut per_round: Vec<Option<(QueryKind, Arc<Povm>)>> = vec![None; options.depth];
        let mut stack: Vec<Transcript> = vec![Vec::new()];
        let mut counter = 0u64;
        while let Some(prefix) = stack.pop() {
            if nodes.len() >= Self::MAX_NODES {
                return Err(Error::InvalidParameter(format!(
                    "randomized strategy would need more than {} nodes",
                    Self::MAX_NODES
                )));
            }
            let t = prefix.len();
            let node = match (&per_round[t], options.adaptive) {
                (Some(n), false) => n.clone(),
                _ => {
                    let mut r = rng.child(counter);
                    counter += 1;
                    let n = Self::draw_node(&options, &mut r);
                    if !options.adaptive {
                        per_round[t] = Some(n.clone());
                    }
                    n
                }
            };
            if t + 1 < options.depth {
                for o in (0..node.1.len()).rev() {
                    let mut child = prefix.clone();
                    child.push(o);
                    stack.push(child);
                }
            }
            nodes.insert(prefix, node);
        }
        let time_ordered = nodes.values().all(|(k, _)| *k == QueryKind::Forward);
        Ok(Self {
            options,
            time_ordered,
            nodes,
        })
    }

    fn draw_node(options: &RandomizedOptions, rng: &mut RandomSource) -> (QueryKind, Arc<Povm>) {
        let d = options.dim;
        let kind = if options.allow_inverse && rng.bernoulli(0.5) {
            QueryKind::Inverse
        } else {
            QueryKind::Forward
        };
        let povm = if options.overcomplete && rng.bernoulli(0.5) {
            let m = d + 1;
            let w = sample_haar_unitary(m, rng).expect("m >= 1");
            let elements = (0..m)
                .map(|i| PovmElement::RankOne {
                    ket: Ket::Basis(i % d),
                    bra: Ket::Dense(w.matrix().row(i)[..d].iter().map(|z| z.conj()).collect()),
                })
                .collect();
            Povm::new(d, elements).expect("shapes agree")
        } else {
            Povm::from_unitary_columns(&sample_haar_unitary(d, rng).expect("d >= 1"))
        };
        (kind, Arc::new(povm))
    }

    pub fn options(&self) -> &RandomizedOptions {
        &self.options
    }
}

impl Strategy for RandomizedStrategy {
    fn name(&self) -> &str {
        "randomized"
    }
    fn description(&self) -> &str {
        "seeded random tree with rank-one POVMs from Haar unitaries"
    }
    fn dim(&self) -> usize {
        self.options.dim
    }
    fn depth(&self) -> usize {
        self.options.depth
    }
    fn time_ordered(&self) -> bool {
        self.time_ordered
    }
    fn node(&self, transcript: &[usize]) -> (QueryKind, Arc<Povm>) {
        self.nodes[transcript].clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrategyInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub time_ordered: bool,
    /// Depth is fixed by the strategy rather than configurable.
    pub fixed_depth: Option<usize>,
    pub requires_even_n: bool,
}

pub fn registry() -> Vec<StrategyInfo> {
    vec![
        StrategyInfo {
            name: "comp-basis",
            description: "apply U, measure all qubits in the computational basis, repeat T times",
            time_ordered: true,
            fixed_depth: None,
            requires_even_n: false,
        },
        StrategyInfo {
            name: "random-basis",
            description: "apply U, measure in a seeded Haar-random basis that changes each round",
            time_ordered: true,
            fixed_depth: None,
            requires_even_n: false,
        },
        StrategyInfo {
            name: "identity-then-measure",
            description: "apply U T times without measuring, then measure in the computational basis",
            time_ordered: true,
            fixed_depth: None,
            requires_even_n: false,
        },
        StrategyInfo {
            name: "oto-theorem1",
            description: "U, flip qubit 1, U dagger, then test whether the second half of the qubits is all-zero",
            time_ordered: false,
            fixed_depth: Some(2),
            requires_even_n: true,
        },
    ]
}

/// Builds a registered strategy on `n` qubits. `depth` defaults to
/// [`DEFAULT_DEPTH`]; `seed` only matters for `random-basis`.
pub fn build_strategy(name: &str, n: usize, depth: Option<usize>, seed: u64) -> Result<Arc<dyn Strategy>> {
    let depth_or_default = depth.unwrap_or(DEFAULT_DEPTH);
    Ok(match name {
        "comp-basis" => Arc::new(CompBasis::new(n, depth_or_default)?),
        "random-basis" => Arc::new(RandomBasis::new(n, depth_or_default, seed)?),
        "identity-then-measure" => Arc::new(IdentityThenMeasure::new(n, depth_or_default)?),
        "oto-theorem1" => {
            if let Some(t) = depth.filter(|&t| t != 2) {
                return Err(Error::InvalidParameter(format!("oto-theorem1 has depth 2, got {t}")));
            }
            Arc::new(OtoTheorem1::new(n)?)
        }
        other => return Err(Error::UnknownStrategy(other.to_string())),
    })
}
