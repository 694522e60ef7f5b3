//! Block-scrambling OTOC and the one-query distinguishing protocol.
//!
//! For `n` qubits (n even) split into two blocks of `n/2`, the correlator is
//!
//! `OTOC(V) = tr( (1 ⊗ |0⟩⟨0|^{⊗n/2}) · V†XV |0…0⟩⟨0…0| V†XV )`
//!
//! with `X` a bit flip on qubit 0. It equals 1 for every `V = U₁ ⊗ U₂` and is
//! small on average for a global Haar unitary.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sample_haar_unitary, UnitaryMatrix, C64, ZERO};
use crate::parallel::map_indexed;
use crate::perm::Permutation;
use crate::rng::{RandomSource, SourceId};
use crate::stats::{binomial_ci, MeanEstimate};
use crate::weingarten::{weingarten_table, WeingartenTable};

pub const MAX_QUBITS: usize = 10;
/// Largest `n` for the exact Weingarten contraction.
pub const MAX_WEINGARTEN_QUBITS: usize = 6;

/// Even qubit count, at most [`MAX_QUBITS`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct OtocInstance {
    n: usize,
}

impl OtocInstance {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) || n > MAX_QUBITS {
            return Err(Error::InvalidQubitCount { n, max: MAX_QUBITS });
        }
        Ok(Self { n })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Dimension of one block of `n/2` qubits.
    pub fn block_dim(&self) -> usize {
        1 << (self.n / 2)
    }
}

impl TryFrom<usize> for OtocInstance {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<OtocInstance> for usize {
    fn from(i: OtocInstance) -> usize {
        i.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// One Haar unitary on all `n` qubits.
    GlobalHaar,
    /// `U₁ ⊗ U₂`, each Haar on `n/2` qubits.
    ProductHaar,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 2] = [EnsembleKind::GlobalHaar, EnsembleKind::ProductHaar];

    pub fn sample(self, instance: OtocInstance, rng: &mut RandomSource) -> UnitaryMatrix {
        match self {
            EnsembleKind::GlobalHaar => sample_haar_unitary(instance.dim(), rng).expect("dim >= 1"),
            EnsembleKind::ProductHaar => {
                let u1 = sample_haar_unitary(instance.block_dim(), rng).expect("dim >= 1");
                let u2 = sample_haar_unitary(instance.block_dim(), rng).expect("dim >= 1");
                u1.tensor_product(&u2)
            }
        }
    }
}

fn check_dim(v: &UnitaryMatrix, instance: OtocInstance) -> Result<()> {
    if v.dim() != instance.dim() {
        return Err(Error::DimensionMismatch {
            left_rows: v.dim(),
            left_cols: v.dim(),
            right_rows: instance.dim(),
            right_cols: instance.dim(),
        });
    }
    Ok(())
}

/// `OTOC(V)` for an `n`-qubit unitary.
pub fn otoc_value(v: &UnitaryMatrix, n: usize) -> Result<f64> {
    let instance = OtocInstance::new(n)?;
    check_dim(v, instance)?;
    let d = instance.dim();
    let flip = 1usize << (n - 1);
    // X V |0>: the first column with qubit 0 flipped.
    let mut psi = vec![ZERO; d];
    for i in 0..d {
        psi[i ^ flip] = v.matrix()[(i, 0)];
    }
    let out = v.apply_adjoint(&psi)?;
    let mask = instance.block_dim() - 1;
    Ok((0..d).filter(|i| i & mask == 0).map(|i| out[i].norm_sqr()).sum())
}

/// `(2^{3n/2} - 1) / (2^{2n} - 1)`.
pub fn expected_otoc_exact(n: usize) -> Result<BigRational> {
    let instance = OtocInstance::new(n)?;
    let big = |e: usize| num_traits::pow(BigInt::from(2), e);
    Ok(BigRational::new(
        big(3 * instance.qubits() / 2) - BigInt::one(),
        big(2 * instance.qubits()) - BigInt::one(),
    ))
}

/// Contraction of fixed row tensors against a degree-2 Haar moment:
/// `Σ_I w(I, σ(I))` over `I ∈ [d]^2`, where `σ(I)_m = I_{σ(m)}`.
fn contract_pairs(sigma: &Permutation, d: usize, weight: impl Fn([usize; 2], [usize; 2]) -> i64) -> BigInt {
    let mut total = 0i64;
    for a in 0..d {
        for b in 0..d {
            let i = [a, b];
            let ip = [i[sigma.apply(0)], i[sigma.apply(1)]];
            total += weight(i, ip);
        }
    }
    BigInt::from(total)
}

/// `E_U[OTOC(U)]` over Haar `U(2^n)` by exact Weingarten contraction.
///
/// Writing the correlator as
/// `Σ conj(U_{a0}) X_{ab} U_{bc} P_{cc'} conj(U_{ec'}) X_{ef} U_{f0}`,
/// the `U` factors carry `I = (b, f)`, `J = (c, 0)` and the conjugated factors
/// carry `I' = (a, e)`, `J' = (0, c')`. The average is
/// `Σ_{σ,τ∈S_2} Wg(στ⁻¹) R(σ) C(τ)` where `R` contracts the two flips and `C`
/// contracts the block projector with the input state. Both coefficients are
/// integer sums evaluated directly from the operators.
pub fn expected_otoc_weingarten(n: usize) -> Result<BigRational> {
    let instance = OtocInstance::new(n)?;
    if n > MAX_WEINGARTEN_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "exact Weingarten contraction is limited to n <= {MAX_WEINGARTEN_QUBITS}, got {n}"
        )));
    }
    let d = instance.dim();
    let table = weingarten_table(2, d)?;
    let flip = 1usize << (n - 1);
    let mask = instance.block_dim() - 1;
    let x = |r: usize, c: usize| i64::from(r ^ flip == c);
    let p = |r: usize, c: usize| i64::from(r == c && r & mask == 0);
    Ok(contract_second_moment(&table, d, |i, ip| {
        // I = (b, f), I' = (a, e): weight X_{ab} X_{ef}
        x(ip[0], i[0]) * x(ip[1], i[1])
    }, |c, jp| {
        // J = (c, 0), J' = (0, c'): weight P_{cc'}
        if jp[0] == 0 { p(c, jp[1]) } else { 0 }
    }))
}

fn contract_second_moment(
    table: &WeingartenTable,
    d: usize,
    row_weight: impl Fn([usize; 2], [usize; 2]) -> i64,
    col_weight: impl Fn(usize, [usize; 2]) -> i64,
) -> BigRational {
    let group = [Permutation::identity(2), Permutation::transposition(2, 0, 1).expect("k = 2")];
    let rows: Vec<BigInt> = group.iter().map(|s| contract_pairs(s, d, &row_weight)).collect();
    let cols: Vec<BigInt> = group
        .iter()
        .map(|t| {
            let total: i64 = (0..d)
                .map(|c| {
                    let j = [c, 0];
                    col_weight(c, [j[t.apply(0)], j[t.apply(1)]])
                })
                .sum();
            BigInt::from(total)
        })
        .collect();
    let mut total = BigRational::zero();
    for (s, r) in group.iter().zip(&rows) {
        for (t, c) in group.iter().zip(&cols) {
            if r.is_zero() || c.is_zero() {
                continue;
            }
            let wg = table.wg(&s.compose(&t.inverse()).expect("k = 2"));
            total += wg * BigRational::from_integer(r * c);
        }
    }
    total
}

/// Mean and standard error of `OTOC(U)` over global Haar draws.
pub fn monte_carlo_expected_otoc(n: usize, samples: usize, rng: &RandomSource) -> Result<MeanEstimate<f64>> {
    let instance = OtocInstance::new(n)?;
    if samples < 100 {
        return Err(Error::TooFew {
            what: "samples",
            min: 100,
            got: samples,
        });
    }
    let values = otoc_samples(instance, EnsembleKind::GlobalHaar, samples, rng);
    Ok(MeanEstimate::from_real(&values))
}

/// `OTOC(U)` for `samples` independent draws; draw `s` uses `rng.child(s)`.
pub fn otoc_samples(instance: OtocInstance, kind: EnsembleKind, samples: usize, rng: &RandomSource) -> Vec<f64> {
    map_indexed(samples, |s| {
        let mut child = rng.child(s as u64);
        let u = kind.sample(instance, &mut child);
        otoc_value(&u, instance.qubits()).expect("dimension matches")
    })
}

/// How a run of the protocol turns measurement shots into a declaration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRule {
    /// Independent preparations of the protocol on the same hidden unitary.
    pub shots: usize,
}

impl Default for DecisionRule {
    fn default() -> Self {
        Self { shots: 1 }
    }
}

impl DecisionRule {
    /// `ProductHaar` when more than half of the shots return the block to all-zero.
    pub fn declare(&self, accepts: usize) -> EnsembleKind {
        if 2 * accepts > self.shots {
            EnsembleKind::ProductHaar
        } else {
            EnsembleKind::GlobalHaar
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub hidden: EnsembleKind,
    pub declared: EnsembleKind,
    pub correct: bool,
    /// Acceptance probability of a single shot for the sampled unitary.
    pub otoc: f64,
}

/// One run of the protocol: prepare `|0…0⟩`, apply `V`, flip qubit 0, apply
/// `V†`, and measure the second block. Each shot accepts with probability
/// `OTOC(V)`.
pub fn theorem1_trial(kind: EnsembleKind, n: usize, rng: &mut RandomSource) -> Result<TrialOutcome> {
    theorem1_trial_with(kind, n, DecisionRule::default(), rng)
}

pub fn theorem1_trial_with(
    kind: EnsembleKind,
    n: usize,
    rule: DecisionRule,
    rng: &mut RandomSource,
) -> Result<TrialOutcome> {
    let instance = OtocInstance::new(n)?;
    if rule.shots == 0 {
        return Err(Error::TooFew {
            what: "shots",
            min: 1,
            got: 0,
        });
    }
    let v = kind.sample(instance, rng);
    let otoc = otoc_value(&v, n)?.clamp(0.0, 1.0);
    let accepts = (0..rule.shots).filter(|_| rng.bernoulli(otoc)).count();
    let declared = rule.declare(accepts);
    Ok(TrialOutcome {
        hidden: kind,
        declared,
        correct: declared == kind,
        otoc,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// 95% half-width.
    pub ci: f64,
    pub seed: u64,
    pub source: SourceId,
}

/// Balanced success rate: each trial hides a uniformly chosen ensemble.
pub fn success_probability(n: usize, trials: usize, rng: &RandomSource) -> Result<SuccessReport> {
    success_probability_with(n, trials, DecisionRule::default(), rng)
}

pub fn success_probability_with(
    n: usize,
    trials: usize,
    rule: DecisionRule,
    rng: &RandomSource,
) -> Result<SuccessReport> {
    OtocInstance::new(n)?;
    if trials < 100 {
        return Err(Error::TooFew {
            what: "trials",
            min: 100,
            got: trials,
        });
    }
    let outcomes = map_indexed(trials, |t| {
        let mut child = rng.child(t as u64);
        let kind = if child.bernoulli(0.5) {
            EnsembleKind::GlobalHaar
        } else {
            EnsembleKind::ProductHaar
        };
        theorem1_trial_with(kind, n, rule, &mut child).expect("validated")
    });
    let successes = outcomes.iter().filter(|o| o.correct).count();
    let (success_rate, ci) = binomial_ci(successes, trials);
    Ok(SuccessReport {
        n,
        trials,
        successes,
        success_rate,
        ci,
        seed: rng.seed(),
        source: rng.id(),
    })
}

/// Fraction of sampled values strictly above `epsilon`.
pub fn fraction_above(values: &[f64], epsilon: f64) -> f64 {
    values.iter().filter(|&&v| v > epsilon).count() as f64 / values.len() as f64
}

/// The correlator straight from its defining trace, with dense matrices.
pub fn otoc_value_dense(v: &UnitaryMatrix, n: usize) -> Result<f64> {
    use crate::matrix::{embed_single_qubit, ComplexMatrix};
    let instance = OtocInstance::new(n)?;
    check_dim(v, instance)?;
    let x = embed_single_qubit(&ComplexMatrix::pauli_x(), 0, n)?;
    let w = v.matrix().adjoint().multiply(&x)?.multiply(v.matrix())?;
    let rho0 = crate::matrix::QuantumState::zero(instance.dim())?.to_density();
    let evolved = w.multiply(&rho0)?.multiply(&w.adjoint())?;
    let block_zero = ComplexMatrix::from_diagonal(
        &(0..instance.block_dim())
            .map(|i| if i == 0 { C64::new(1.0, 0.0) } else { ZERO })
            .collect::<Vec<_>>(),
    );
    let projector = ComplexMatrix::identity(instance.block_dim()).tensor_product(&block_zero);
    Ok(projector.multiply(&evolved)?.trace().re)
}
