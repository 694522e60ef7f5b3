//! Learning trees for adaptive measurement protocols without quantum memory.
//!
//! A tree is given implicitly by a [`Strategy`]: a pure function from the
//! transcript so far to the next query (`U` or `U†`) and the POVM measured
//! after it. Leaf probabilities are obtained by propagating unnormalized
//! post-measurement states.

mod hardness;
mod strategies;

pub use hardness::{
    ensemble_leaf_distribution, ensemble_leaf_samples, hardness_experiment, hardness_experiment_with, lumped_class_sums,
    BlockPatternLumping, HardnessMethod, HardnessOptions, HardnessReport, LeafSamples,
};
pub use strategies::{
    build_strategy, registry, CompBasis, IdentityThenMeasure, OtoTheorem1, RandomBasis, RandomizedOptions,
    RandomizedStrategy, StrategyInfo, TrivialStrategy, DEFAULT_DEPTH, STRATEGY_NAMES,
};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, QuantumState, UnitaryMatrix, C64, ONE, ZERO};
use crate::rng::RandomSource;

/// Completeness tolerance for POVMs.
pub const POVM_TOLERANCE: f64 = 1e-9;
/// Largest number of leaves materialized by exact enumeration.
pub const LEAF_CAP: usize = 1_000_000;

pub type Transcript = Vec<usize>;

/// A vector given either as a computational basis index or by amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub enum Ket {
    Basis(usize),
    Dense(Vec<C64>),
}

impl Ket {
    fn norm_sqr(&self) -> f64 {
        match self {
            Ket::Basis(_) => 1.0,
            Ket::Dense(v) => v.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    fn to_dense(&self, dim: usize) -> Vec<C64> {
        match self {
            Ket::Basis(i) => {
                let mut v = vec![ZERO; dim];
                v[*i] = ONE;
                v
            }
            Ket::Dense(v) => v.clone(),
        }
    }

    fn len_hint(&self) -> Option<usize> {
        match self {
            Ket::Basis(_) => None,
            Ket::Dense(v) => Some(v.len()),
        }
    }

    /// `⟨self|ψ⟩`.
    fn inner(&self, psi: &[C64]) -> C64 {
        match self {
            Ket::Basis(i) => psi[*i],
            Ket::Dense(v) => v.iter().zip(psi).map(|(a, b)| a.conj() * b).sum(),
        }
    }
}

/// One Kraus-type operator `F` of a POVM.
#[derive(Clone, Debug, PartialEq)]
pub enum PovmElement {
    Dense(ComplexMatrix),
    /// `F = |ket⟩⟨bra|`.
    RankOne { ket: Ket, bra: Ket },
}

impl PovmElement {
    pub fn projector(i: usize) -> Self {
        PovmElement::RankOne {
            ket: Ket::Basis(i),
            bra: Ket::Basis(i),
        }
    }

    pub fn to_matrix(&self, dim: usize) -> ComplexMatrix {
        match self {
            PovmElement::Dense(m) => m.clone(),
            PovmElement::RankOne { ket, bra } => ComplexMatrix::outer(&ket.to_dense(dim), &bra.to_dense(dim)),
        }
    }

    /// `F†F`.
    pub fn effect(&self, dim: usize) -> ComplexMatrix {
        match self {
            PovmElement::Dense(m) => m.adjoint().multiply(m).expect("square"),
            PovmElement::RankOne { ket, bra } => {
                let b = bra.to_dense(dim);
                ComplexMatrix::outer(&b, &b).scale(C64::new(ket.norm_sqr(), 0.0))
            }
        }
    }

    /// `tr(F†F)`.
    pub fn effect_trace(&self) -> f64 {
        match self {
            PovmElement::Dense(m) => m.data().iter().map(|z| z.norm_sqr()).sum(),
            PovmElement::RankOne { ket, bra } => ket.norm_sqr() * bra.norm_sqr(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<PovmElement>,
}

impl Povm {
    /// Checks shape only; completeness is reported by [`validate_povm`].
    pub fn new(dim: usize, elements: Vec<PovmElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyPovm);
        }
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut dims = Vec::new();
        let mut mixed = false;
        for e in &elements {
            let ds: Vec<usize> = match e {
                PovmElement::Dense(m) => {
                    if !m.is_square() {
                        return Err(Error::NotSquare {
                            rows: m.rows(),
                            cols: m.cols(),
                        });
                    }
                    vec![m.rows()]
                }
                PovmElement::RankOne { ket, bra } => {
                    for k in [ket, bra] {
                        if let Ket::Basis(i) = k {
                            if *i >= dim {
                                return Err(Error::IndexOutOfRange { index: *i, d: dim });
                            }
                        }
                    }
                    [ket.len_hint(), bra.len_hint()].into_iter().flatten().collect()
                }
            };
            for d in ds {
                dims.push(d);
                mixed |= d != dim;
            }
        }
        if mixed {
            dims.insert(0, dim);
            dims.dedup();
            return Err(Error::MixedPovmDimensions(dims));
        }
        Ok(Self { dim, elements })
    }

    /// Infers the dimension from dense elements.
    pub fn from_matrices(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements.first().ok_or(Error::EmptyPovm)?;
        let dim = first.rows();
        Self::new(dim, elements.into_iter().map(PovmElement::Dense).collect())
    }

    /// `{|i⟩⟨i|}`.
    pub fn computational(dim: usize) -> Result<Self> {
        Self::new(dim, (0..dim).map(PovmElement::projector).collect())
    }

    /// The single outcome `{I}`.
    pub fn trivial(dim: usize) -> Result<Self> {
        Self::new(dim, vec![PovmElement::Dense(ComplexMatrix::identity(dim))])
    }

    /// Projectors onto the columns of a unitary.
    pub fn from_unitary_columns(u: &UnitaryMatrix) -> Self {
        let dim = u.dim();
        let elements = (0..dim)
            .map(|c| {
                let col = u.matrix().column(c);
                PovmElement::RankOne {
                    ket: Ket::Dense(col.clone()),
                    bra: Ket::Dense(col),
                }
            })
            .collect();
        Self { dim, elements }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    /// Every element is `|i⟩⟨i|` for the matching outcome `i`.
    pub fn is_computational(&self) -> bool {
        self.elements.len() == self.dim
            && self.elements.iter().enumerate().all(|(i, e)| {
                matches!(e, PovmElement::RankOne { ket: Ket::Basis(a), bra: Ket::Basis(b) } if *a == i && *b == i)
            })
    }
}

/// `‖Σ F†F − I‖_max`.
pub fn validate_povm(povm: &Povm) -> Result<f64> {
    if povm.elements.is_empty() {
        return Err(Error::EmptyPovm);
    }
    let d = povm.dim;
    let mut sum = ComplexMatrix::zeros(d, d);
    for e in &povm.elements {
        sum.add_assign(&e.effect(d))?;
    }
    sum.max_abs_diff(&ComplexMatrix::identity(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    /// Apply `U`.
    Forward,
    /// Apply `U†`.
    Inverse,
}

/// Adaptive protocol: the next query and POVM as a function of the outcomes so far.
pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn dim(&self) -> usize;
    /// Number of query rounds `T`.
    fn depth(&self) -> usize;
    /// Only forward queries are emitted.
    fn time_ordered(&self) -> bool;
    /// Must be deterministic in `transcript`, whose length is below `depth()`.
    fn node(&self, transcript: &[usize]) -> (QueryKind, Arc<Povm>);
    /// Symmetry the hardness experiment may use to aggregate leaves.
    fn lumping(&self) -> Option<BlockPatternLumping> {
        None
    }
}

impl fmt::Debug for dyn Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Strategy")
            .field("name", &self.name())
            .field("dim", &self.dim())
            .field("depth", &self.depth())
            .finish()
    }
}

/// Transcript → probability, listed in depth-first order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LeafDistribution {
    transcripts: Vec<Transcript>,
    probabilities: Vec<f64>,
}

impl LeafDistribution {
    pub fn from_parts(transcripts: Vec<Transcript>, probabilities: Vec<f64>) -> Result<Self> {
        if transcripts.len() != probabilities.len() {
            return Err(Error::InvalidParameter(format!(
                "{} transcripts but {} probabilities",
                transcripts.len(),
                probabilities.len()
            )));
        }
        Ok(Self {
            transcripts,
            probabilities,
        })
    }

    pub fn transcripts(&self) -> &[Transcript] {
        &self.transcripts
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.transcripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transcripts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Transcript, f64)> {
        self.transcripts.iter().zip(self.probabilities.iter().copied())
    }

    pub fn get(&self, transcript: &[usize]) -> f64 {
        self.iter().find(|(t, _)| t.as_slice() == transcript).map_or(0.0, |(_, p)| p)
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn min_probability(&self) -> f64 {
        self.probabilities.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Transcript strings such as `"0.3.1"` mapped to probabilities.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.iter().map(|(t, p)| (transcript_key(t), p)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_map()).expect("finite floats")
    }
}

pub fn transcript_key(t: &[usize]) -> String {
    t.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(".")
}

/// Unnormalized pure state: a scaled basis vector or amplitudes.
#[derive(Clone, Debug)]
enum PureState {
    Basis(usize, C64),
    Dense(Vec<C64>),
}

impl PureState {
    fn from_vec(v: &[C64]) -> Self {
        let nonzero: Vec<usize> = (0..v.len()).filter(|&i| v[i] != ZERO).collect();
        if nonzero.len() == 1 {
            PureState::Basis(nonzero[0], v[nonzero[0]])
        } else {
            PureState::Dense(v.to_vec())
        }
    }

    fn norm_sqr(&self) -> f64 {
        match self {
            PureState::Basis(_, s) => s.norm_sqr(),
            PureState::Dense(v) => v.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    fn rescale(self, factor: f64) -> Self {
        match self {
            PureState::Basis(i, s) => PureState::Basis(i, s * factor),
            PureState::Dense(v) => PureState::Dense(v.into_iter().map(|z| z * factor).collect()),
        }
    }

    fn query(&self, u: &UnitaryMatrix, kind: QueryKind) -> Vec<C64> {
        let m = u.matrix();
        let d = u.dim();
        match (self, kind) {
            (PureState::Basis(i, s), QueryKind::Forward) => (0..d).map(|r| m[(r, *i)] * s).collect(),
            (PureState::Basis(i, s), QueryKind::Inverse) => m.row(*i).iter().map(|z| z.conj() * s).collect(),
            (PureState::Dense(v), QueryKind::Forward) => u.apply(v).expect("dimension checked"),
            (PureState::Dense(v), QueryKind::Inverse) => u.apply_adjoint(v).expect("dimension checked"),
        }
    }

    fn measure(psi: &[C64], element: &PovmElement) -> PureState {
        match element {
            PovmElement::Dense(f) => PureState::Dense(f.apply(psi).expect("dimension checked")),
            PovmElement::RankOne { ket, bra } => {
                let amp = bra.inner(psi);
                match ket {
                    Ket::Basis(k) => PureState::Basis(*k, amp),
                    Ket::Dense(v) => PureState::Dense(v.iter().map(|z| z * amp).collect()),
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum TreeState {
    Pure(PureState),
    Mixed(ComplexMatrix),
}

impl TreeState {
    fn new(rho0: &QuantumState) -> Self {
        match rho0 {
            QuantumState::Pure(v) => TreeState::Pure(PureState::from_vec(v)),
            QuantumState::Density(m) => TreeState::Mixed(m.clone()),
        }
    }

    /// Children after the query and each POVM outcome, with their masses.
    fn children(&self, u: &UnitaryMatrix, kind: QueryKind, povm: &Povm) -> Vec<(TreeState, f64)> {
        match self {
            TreeState::Pure(p) => {
                let psi = p.query(u, kind);
                povm.elements
                    .iter()
                    .map(|e| {
                        let child = PureState::measure(&psi, e);
                        let mass = child.norm_sqr();
                        (TreeState::Pure(child), mass)
                    })
                    .collect()
            }
            TreeState::Mixed(rho) => {
                let q = match kind {
                    QueryKind::Forward => u.matrix().clone(),
                    QueryKind::Inverse => u.matrix().adjoint(),
                };
                let evolved = q.multiply(rho).and_then(|m| m.multiply(&q.adjoint())).expect("dimension checked");
                povm.elements
                    .iter()
                    .map(|e| {
                        let f = e.to_matrix(povm.dim);
                        let child = f
                            .multiply(&evolved)
                            .and_then(|m| m.multiply(&f.adjoint()))
                            .expect("dimension checked");
                        let mass = child.trace().re;
                        (TreeState::Mixed(child), mass)
                    })
                    .collect()
            }
        }
    }

    fn normalized(self, mass: f64) -> Self {
        let s = 1.0 / mass.sqrt();
        match self {
            TreeState::Pure(p) => TreeState::Pure(p.rescale(s)),
            TreeState::Mixed(m) => TreeState::Mixed(m.scale(C64::new(s * s, 0.0))),
        }
    }
}

/// Structural checks shared by every walk: POVM completeness (once per
/// distinct POVM), dimensions and query purity.
struct NodeChecker<'a> {
    strategy: &'a dyn Strategy,
    seen: HashSet<*const Povm>,
}

impl<'a> NodeChecker<'a> {
    fn new(strategy: &'a dyn Strategy) -> Result<Self> {
        if strategy.depth() == 0 {
            return Err(Error::InvalidParameter("strategy depth must be positive".into()));
        }
        Ok(Self {
            strategy,
            seen: HashSet::new(),
        })
    }

    fn node(&mut self, prefix: &[usize]) -> Result<(QueryKind, Arc<Povm>)> {
        let (kind, povm) = self.strategy.node(prefix);
        if kind == QueryKind::Inverse && self.strategy.time_ordered() {
            return Err(Error::InverseInTimeOrdered(prefix.to_vec()));
        }
        if self.seen.insert(Arc::as_ptr(&povm)) {
            if povm.dim() != self.strategy.dim() {
                return Err(Error::StrategyDimension {
                    strategy: self.strategy.dim(),
                    other: povm.dim(),
                    what: "POVM",
                });
            }
            let defect = validate_povm(&povm)?;
            if defect > POVM_TOLERANCE {
                return Err(Error::IncompletePovm {
                    prefix: prefix.to_vec(),
                    defect,
                });
            }
        }
        Ok((kind, povm))
    }
}

fn check_strategy_dim(strategy: &dyn Strategy, dim: usize, what: &'static str) -> Result<()> {
    if strategy.dim() != dim {
        return Err(Error::StrategyDimension {
            strategy: strategy.dim(),
            other: dim,
            what,
        });
    }
    Ok(())
}

/// Number of leaves, or an error once it exceeds `cap`.
pub fn leaf_count(strategy: &dyn Strategy, cap: usize) -> Result<usize> {
    fn walk(s: &dyn Strategy, prefix: &mut Transcript, count: &mut usize, cap: usize) -> Result<()> {
        if prefix.len() == s.depth() {
            *count += 1;
            return if *count > cap { Err(Error::TranscriptCap { cap }) } else { Ok(()) };
        }
        let (_, povm) = s.node(prefix);
        for o in 0..povm.len() {
            prefix.push(o);
            walk(s, prefix, count, cap)?;
            prefix.pop();
        }
        Ok(())
    }
    let mut count = 0;
    walk(strategy, &mut Vec::new(), &mut count, cap)?;
    Ok(count)
}

/// Exact leaf distribution `p^U(ℓ)`, including zero-probability leaves.
pub fn run_tree_exact(strategy: &dyn Strategy, u: &UnitaryMatrix, rho0: &QuantumState) -> Result<LeafDistribution> {
    check_strategy_dim(strategy, u.dim(), "unitary")?;
    check_strategy_dim(strategy, rho0.dim(), "initial state")?;
    leaf_count(strategy, LEAF_CAP)?;
    let mut checker = NodeChecker::new(strategy)?;
    let mut out = LeafDistribution::default();
    let mut prefix = Vec::with_capacity(strategy.depth());
    walk_exact(&mut checker, u, Some(TreeState::new(rho0)), 1.0, &mut prefix, &mut out)?;
    Ok(out)
}

fn walk_exact(
    checker: &mut NodeChecker<'_>,
    u: &UnitaryMatrix,
    state: Option<TreeState>,
    mass: f64,
    prefix: &mut Transcript,
    out: &mut LeafDistribution,
) -> Result<()> {
    if prefix.len() == checker.strategy.depth() {
        out.transcripts.push(prefix.clone());
        out.probabilities.push(mass);
        return Ok(());
    }
    let (kind, povm) = checker.node(prefix)?;
    // Zero-mass subtrees are still enumerated so every leaf appears.
    let children: Vec<(Option<TreeState>, f64)> = match state {
        // A single complete outcome keeps the parent mass exactly.
        Some(s) if mass > 0.0 && povm.len() == 1 => {
            let (c, _) = s.children(u, kind, &povm).pop().expect("one child");
            vec![(Some(c), mass)]
        }
        Some(s) if mass > 0.0 => s.children(u, kind, &povm).into_iter().map(|(c, m)| (Some(c), m)).collect(),
        _ => (0..povm.len()).map(|_| (None, 0.0)).collect(),
    };
    for (o, (child, m)) in children.into_iter().enumerate() {
        prefix.push(o);
        walk_exact(checker, u, child, m, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}

/// One root-to-leaf path drawn from `p^U`.
pub fn sample_trajectory(
    strategy: &dyn Strategy,
    u: &UnitaryMatrix,
    rho0: &QuantumState,
    rng: &mut RandomSource,
) -> Result<Transcript> {
    check_strategy_dim(strategy, u.dim(), "unitary")?;
    check_strategy_dim(strategy, rho0.dim(), "initial state")?;
    let mut checker = NodeChecker::new(strategy)?;
    let mut state = TreeState::new(rho0);
    let mut transcript = Vec::with_capacity(strategy.depth());
    while transcript.len() < strategy.depth() {
        let (kind, povm) = checker.node(&transcript)?;
        let mut children = state.children(u, kind, &povm);
        let weights: Vec<f64> = children.iter().map(|(_, m)| m.max(0.0)).collect();
        let pick = rng.categorical(&weights);
        let (child, mass) = children.swap_remove(pick);
        state = child.normalized(mass);
        transcript.push(pick);
    }
    Ok(transcript)
}

/// Leaf distribution when every query is replaced by `ρ ↦ I/d`:
/// each round contributes `tr(F†F)/d`, independent of the initial state.
pub fn depolarizing_reference(strategy: &dyn Strategy, rho0: &QuantumState) -> Result<LeafDistribution> {
    check_strategy_dim(strategy, rho0.dim(), "initial state")?;
    leaf_count(strategy, LEAF_CAP)?;
    let mut checker = NodeChecker::new(strategy)?;
    let d = strategy.dim() as f64;
    let mut out = LeafDistribution::default();

    fn walk(
        checker: &mut NodeChecker<'_>,
        d: f64,
        mass: f64,
        prefix: &mut Transcript,
        out: &mut LeafDistribution,
    ) -> Result<()> {
        if prefix.len() == checker.strategy.depth() {
            out.transcripts.push(prefix.clone());
            out.probabilities.push(mass);
            return Ok(());
        }
        let (_, povm) = checker.node(prefix)?;
        for (o, e) in povm.elements().iter().enumerate() {
            prefix.push(o);
            walk(checker, d, mass * e.effect_trace() / d, prefix, out)?;
            prefix.pop();
        }
        Ok(())
    }
    walk(&mut checker, d, 1.0, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// Largest defect of `Σ tr(F†F·probe) = tr(probe)` and `Σ tr(F†F) = d` over all nodes.
pub fn child_sum_check(strategy: &dyn Strategy, probe: &ComplexMatrix) -> Result<f64> {
    if probe.shape() != (strategy.dim(), strategy.dim()) {
        return Err(Error::StrategyDimension {
            strategy: strategy.dim(),
            other: probe.rows(),
            what: "probe",
        });
    }
    leaf_count(strategy, LEAF_CAP)?;
    let mut checker = NodeChecker::new(strategy)?;
    let d = strategy.dim();
    let target = probe.trace();
    // Effects are computed once per distinct POVM.
    let mut sums: HashMap<*const Povm, f64> = HashMap::new();
    let mut worst = 0.0f64;

    fn walk(
        checker: &mut NodeChecker<'_>,
        probe: &ComplexMatrix,
        target: C64,
        d: usize,
        sums: &mut HashMap<*const Povm, f64>,
        worst: &mut f64,
        prefix: &mut Transcript,
    ) -> Result<()> {
        if prefix.len() == checker.strategy.depth() {
            return Ok(());
        }
        let (_, povm) = checker.node(prefix)?;
        let defect = *sums.entry(Arc::as_ptr(&povm)).or_insert_with(|| {
            let mut weighted = ZERO;
            let mut traces = 0.0;
            for e in povm.elements() {
                let eff = e.effect(d);
                weighted += eff.multiply(probe).expect("dimension checked").trace();
                traces += e.effect_trace();
            }
            (weighted - target).norm().max((traces - d as f64).abs())
        });
        *worst = worst.max(defect);
        for o in 0..povm.len() {
            prefix.push(o);
            walk(checker, probe, target, d, sums, worst, prefix)?;
            prefix.pop();
        }
        Ok(())
    }
    walk(&mut checker, probe, target, d, &mut sums, &mut worst, &mut Vec::new())?;
    Ok(worst)
}

/// `½ Σ |p − q|` over the union of supports, summed in transcript order.
pub fn tv_distance(p: &LeafDistribution, q: &LeafDistribution) -> f64 {
    let mut diff: BTreeMap<&[usize], f64> = BTreeMap::new();
    for (t, x) in p.iter() {
        *diff.entry(t.as_slice()).or_default() += x;
    }
    for (t, x) in q.iter() {
        *diff.entry(t.as_slice()).or_default() -= x;
    }
    0.5 * diff.values().map(|v| v.abs()).sum::<f64>()
}

/// Best achievable success probability `(1 + tv)/2` for telling two leaf
/// distributions apart.
pub fn lecam_success_bound(tv: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tv) {
        return Err(Error::InvalidParameter(format!("total variation {tv} outside [0, 1]")));
    }
    Ok((1.0 + tv) / 2.0)
}
