//! Exact unitary Weingarten calculus at integer dimension.
//!
//! `Wg(·, d)` on `S_k` is the inverse of the Gram matrix
//! `G(σ, τ) = d^{#(στ⁻¹)}` of permutation operators on `(C^d)^{⊗k}`. Values are
//! kept as exact rationals, one per cycle type. Linear systems are solved by
//! fraction-free (Bareiss) elimination over arbitrary-precision integers.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::C64;
use crate::perm::{enumerate_group, CycleType, Permutation};
use crate::rng::RandomSource;
use crate::stats::MeanEstimate;

/// Largest order for which construction compares against a full-matrix inverse.
const FULL_INVERSE_CHECK_MAX_K: usize = 4;
/// Largest order for which construction re-checks the identity row of `Wg · G`.
const ROW_CHECK_MAX_K: usize = 5;

fn big_pow(base: usize, exp: usize) -> BigInt {
    num_traits::pow(BigInt::from(base), exp)
}

/// Group elements with lookup tables for products and inverses.
#[derive(Clone, Debug)]
pub struct GroupTable {
    k: usize,
    elements: Vec<Permutation>,
    index: HashMap<Permutation, usize>,
}

impl GroupTable {
    pub fn new(k: usize) -> Result<Self> {
        let elements = enumerate_group(k)?;
        let index = elements.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Ok(Self { k, elements, index })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, p: &Permutation) -> usize {
        self.index[p]
    }
}

/// `G(σ, τ) = d^{#(στ⁻¹)}` over the lexicographic enumeration of `S_k`.
///
/// Entries are produced on demand; only the cycle counts are stored.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    k: usize,
    d: usize,
    group: GroupTable,
    cycles: Vec<u8>,
}

impl GramMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> usize {
        self.group.len()
    }

    pub fn group(&self) -> &GroupTable {
        &self.group
    }

    /// `#(σ_i σ_j⁻¹)`.
    pub fn cycle_count(&self, i: usize, j: usize) -> usize {
        self.cycles[i * self.size() + j] as usize
    }

    pub fn entry(&self, i: usize, j: usize) -> BigInt {
        big_pow(self.d, self.cycle_count(i, j))
    }

    pub fn to_dense(&self) -> Vec<Vec<BigInt>> {
        let n = self.size();
        (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect()
    }
}

pub fn gram_matrix(k: usize, d: usize) -> Result<GramMatrix> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let group = GroupTable::new(k)?;
    let n = group.len();
    let inverses: Vec<Permutation> = group.elements.iter().map(Permutation::inverse).collect();
    let mut cycles = vec![0u8; n * n];
    for (i, s) in group.elements.iter().enumerate() {
        for (j, tinv) in inverses.iter().enumerate() {
            cycles[i * n + j] = s.compose(tinv)?.num_cycles() as u8;
        }
    }
    Ok(GramMatrix { k, d, group, cycles })
}

/// Solves `A X = B` exactly for square `A` with Bareiss elimination.
///
/// Returns `None` if `A` is singular. Every intermediate quantity is an integer
/// minor of the augmented matrix, so divisions are exact.
pub fn bareiss_solve(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut w: Vec<Vec<BigInt>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| row.iter().chain(rhs.iter()).cloned().collect())
        .collect();
    let width = n + m;
    let mut prev = BigInt::one();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| !w[r][col].is_zero())?;
        w.swap(pivot_row, col);
        let (top, bottom) = w.split_at_mut(col + 1);
        let pivot_line = &top[col];
        let pivot = &pivot_line[col];
        for row in bottom.iter_mut() {
            let lead = row[col].clone();
            for j in col + 1..width {
                let v = pivot * &row[j] - &lead * &pivot_line[j];
                row[j] = v / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = pivot.clone();
    }
    // prev is the determinant of the row-permuted system. Back substitution
    // runs in integers on y = det · x, which is integral by Cramer's rule.
    let det = prev;
    let mut solution = vec![vec![BigRational::zero(); m]; n];
    for c in 0..m {
        let mut y = vec![BigInt::zero(); n];
        for i in (0..n).rev() {
            let mut acc = &det * &w[i][n + c];
            for j in i + 1..n {
                acc -= &w[i][j] * &y[j];
            }
            y[i] = acc / &w[i][i];
        }
        for i in 0..n {
            solution[i][c] = BigRational::new(y[i].clone(), det.clone());
        }
    }
    Some(solution)
}

/// Exact inverse of the full Gram matrix.
pub fn inverse_gram(gram: &GramMatrix) -> Result<Vec<Vec<BigRational>>> {
    let n = gram.size();
    let identity: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    bareiss_solve(&gram.to_dense(), &identity).ok_or(Error::SingularGram {
        k: gram.k,
        d: gram.d,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeingartenEntry {
    pub cycle_type: CycleType,
    pub class_size: u64,
    #[serde(with = "rational_serde")]
    pub value: BigRational,
}

/// `Wg(σ, d)` for every cycle type of `S_k`.
#[derive(Clone, Debug)]
pub struct WeingartenTable {
    k: usize,
    d: usize,
    values: BTreeMap<CycleType, BigRational>,
    class_sizes: BTreeMap<CycleType, u64>,
}

impl WeingartenTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn value(&self, cycle_type: &CycleType) -> Option<&BigRational> {
        self.values.get(cycle_type)
    }

    /// `Wg(σ, d)`.
    pub fn wg(&self, sigma: &Permutation) -> &BigRational {
        &self.values[&sigma.cycle_type()]
    }

    pub fn entries(&self) -> Vec<WeingartenEntry> {
        self.values
            .iter()
            .map(|(ct, v)| WeingartenEntry {
                cycle_type: ct.clone(),
                class_size: self.class_sizes[ct],
                value: v.clone(),
            })
            .collect()
    }

    pub fn class_size(&self, cycle_type: &CycleType) -> u64 {
        self.class_sizes[cycle_type]
    }

    /// Exact `E[U^{⊗k}_{IJ} · conj(U)^{⊗k}_{I'J'}]` over Haar `U(d)`.
    ///
    /// Sums `δ_{σ(I),I'} δ_{τ(J),J'} Wg(στ⁻¹, d)` over all pairs, with
    /// `δ_{σ(I),I'} = Π_m [I_{σ(m)} = I'_m]`.
    pub fn moment(&self, i: &[usize], j: &[usize], ip: &[usize], jp: &[usize]) -> Result<BigRational> {
        for t in [i, j, ip, jp] {
            if t.len() != self.k {
                return Err(Error::TupleLength {
                    expected: self.k,
                    got: t.len(),
                });
            }
            if let Some(&bad) = t.iter().find(|&&x| x >= self.d) {
                return Err(Error::IndexOutOfRange { index: bad, d: self.d });
            }
        }
        let group = enumerate_group(self.k)?;
        let matches = |p: &Permutation, a: &[usize], b: &[usize]| (0..self.k).all(|m| a[p.apply(m)] == b[m]);
        let rows: Vec<&Permutation> = group.iter().filter(|s| matches(s, i, ip)).collect();
        let cols: Vec<Permutation> = group.iter().filter(|t| matches(t, j, jp)).map(Permutation::inverse).collect();
        let mut total = BigRational::zero();
        for s in &rows {
            for tinv in &cols {
                total += self.wg(&s.compose(tinv)?);
            }
        }
        Ok(total)
    }

    pub fn to_json(&self) -> WeingartenJson {
        WeingartenJson {
            k: self.k,
            d: self.d,
            entries: self
                .entries()
                .into_iter()
                .map(|e| WeingartenJsonEntry {
                    cycle_type: e.cycle_type.parts().to_vec(),
                    numerator: e.value.numer().to_string(),
                    denominator: e.value.denom().to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeingartenJson {
    pub k: usize,
    pub d: usize,
    pub entries: Vec<WeingartenJsonEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeingartenJsonEntry {
    pub cycle_type: Vec<usize>,
    pub numerator: String,
    pub denominator: String,
}

/// Builds the table for `S_k` at dimension `d >= k`.
///
/// Solves the class-reduced system `Σ_C Wg(C) Σ_{τ∈C} d^{#(τ⁻¹π)} = δ_{π,e}`
/// with one equation per cycle type. For `k <= 4` every entry of the full
/// inverse Gram matrix is compared against the table; for `k <= 5` the identity
/// row of `Wg · G` is re-checked against all of `S_k`.
pub fn weingarten_table(k: usize, d: usize) -> Result<WeingartenTable> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let group = GroupTable::new(k)?;
    if d < k {
        return Err(Error::SingularGram { k, d });
    }

    let mut class_sizes: BTreeMap<CycleType, u64> = BTreeMap::new();
    for p in group.elements() {
        *class_sizes.entry(p.cycle_type()).or_default() += 1;
    }
    let classes: Vec<CycleType> = class_sizes.keys().cloned().collect();
    let class_index: HashMap<&CycleType, usize> = classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let identity_class = class_index[&Permutation::identity(k).cycle_type()];

    let c = classes.len();
    let powers: Vec<BigInt> = (0..=k).map(|e| big_pow(d, e)).collect();
    let mut counts = vec![vec![vec![0u64; k + 1]; c]; c];
    for (row, ct) in classes.iter().enumerate() {
        let pi = ct.representative();
        for tau in group.elements() {
            let col = class_index[&tau.cycle_type()];
            let cyc = tau.inverse().compose(&pi)?.num_cycles();
            counts[row][col][cyc] += 1;
        }
    }
    let reduced: Vec<Vec<BigInt>> = counts
        .iter()
        .map(|row| {
            row.iter()
                .map(|hist| hist.iter().zip(&powers).map(|(&n, p)| p * BigInt::from(n)).sum())
                .collect()
        })
        .collect();
    let rhs: Vec<Vec<BigInt>> = (0..c)
        .map(|r| vec![if r == identity_class { BigInt::one() } else { BigInt::zero() }])
        .collect();
    let solution = bareiss_solve(&reduced, &rhs).ok_or(Error::SingularGram { k, d })?;
    let values: BTreeMap<CycleType, BigRational> = classes
        .iter()
        .cloned()
        .zip(solution.into_iter().map(|mut r| r.swap_remove(0)))
        .collect();
    let table = WeingartenTable {
        k,
        d,
        values,
        class_sizes,
    };

    if k <= FULL_INVERSE_CHECK_MAX_K {
        let gram = gram_matrix(k, d)?;
        let inv = inverse_gram(&gram)?;
        for (i, s) in group.elements().iter().enumerate() {
            let sinv = s.inverse();
            for (j, t) in group.elements().iter().enumerate() {
                // (G⁻¹)_{σ,τ} = Wg(σ⁻¹τ)
                let expected = table.wg(&sinv.compose(t)?);
                if &inv[i][j] != expected {
                    return Err(Error::InvalidParameter(format!(
                        "Weingarten inverse is not a class function at k={k}, d={d}: \
                         entry ({s}, {t}) = {} but class value is {expected}",
                        inv[i][j]
                    )));
                }
            }
        }
    } else if k <= ROW_CHECK_MAX_K {
        let gram = gram_matrix(k, d)?;
        let wg_by_index: Vec<&BigRational> = group.elements().iter().map(|t| table.wg(t)).collect();
        let n = group.len();
        for pi in 0..n {
            let sum: BigRational = (0..n)
                .map(|t| wg_by_index[t] * BigRational::from_integer(gram.entry(t, pi)))
                .sum();
            let want = if pi == 0 { BigRational::one() } else { BigRational::zero() };
            if sum != want {
                return Err(Error::InvalidParameter(format!(
                    "Weingarten orthogonality fails at k={k}, d={d}, column {pi}"
                )));
            }
        }
    }
    Ok(table)
}

/// Whether `W · G = I` holds exactly, where `W(σ, τ) = Wg(σ⁻¹τ)`.
///
/// Scales the table to a common denominator so the product is computed in
/// integers.
pub fn orthogonality_holds(table: &WeingartenTable, gram: &GramMatrix) -> Result<bool> {
    if table.k != gram.k || table.d != gram.d {
        return Err(Error::InvalidParameter("table and Gram matrix have different (k, d)".into()));
    }
    let group = gram.group();
    let n = group.len();
    let denom = table.values.values().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scaled: BTreeMap<&CycleType, BigInt> = table
        .values
        .iter()
        .map(|(ct, v)| (ct, v.numer() * (&denom / v.denom())))
        .collect();
    let w: Vec<Vec<&BigInt>> = group
        .elements()
        .iter()
        .map(|s| {
            let sinv = s.inverse();
            group
                .elements()
                .iter()
                .map(|t| &scaled[&sinv.compose(t).expect("same k").cycle_type()])
                .collect()
        })
        .collect();
    let powers: Vec<BigInt> = (0..=gram.k).map(|e| big_pow(gram.d, e)).collect();
    for s in 0..n {
        for p in 0..n {
            let mut acc = BigInt::zero();
            for t in 0..n {
                acc += w[s][t] * &powers[gram.cycle_count(t, p)];
            }
            let want = if s == p { denom.clone() } else { BigInt::zero() };
            if acc != want {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn weingarten_moment(
    k: usize,
    d: usize,
    i: &[usize],
    j: &[usize],
    ip: &[usize],
    jp: &[usize],
) -> Result<BigRational> {
    weingarten_table(k, d)?.moment(i, j, ip, jp)
}

/// Monte Carlo estimate of `E[U^{⊗k}_{IJ} · conj(U)^{⊗k}_{I'J'}]`.
///
/// Draw `s` uses the child stream `rng.child(s)`.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_moment(
    k: usize,
    d: usize,
    i: &[usize],
    j: &[usize],
    ip: &[usize],
    jp: &[usize],
    samples: usize,
    rng: &RandomSource,
) -> Result<MeanEstimate<C64>> {
    if samples < 100 {
        return Err(Error::TooFew {
            what: "samples",
            min: 100,
            got: samples,
        });
    }
    for t in [i, j, ip, jp] {
        if t.len() != k {
            return Err(Error::TupleLength { expected: k, got: t.len() });
        }
        if let Some(&bad) = t.iter().find(|&&x| x >= d) {
            return Err(Error::IndexOutOfRange { index: bad, d });
        }
    }
    let draws = crate::parallel::map_indexed(samples, |s| {
        let mut child = rng.child(s as u64);
        let u = crate::matrix::sample_haar_unitary(d, &mut child).expect("d >= 1");
        let m = u.matrix();
        let mut prod = C64::new(1.0, 0.0);
        for t in 0..k {
            prod *= m[(i[t], j[t])] * m[(ip[t], jp[t])].conj();
        }
        prod
    });
    Ok(MeanEstimate::from_complex(&draws))
}

/// `Σ_{τ∈S_k} |Wg(τ, d)|`.
pub fn lemma6_sum(k: usize, d: usize) -> Result<BigRational> {
    let table = weingarten_table(k, d)?;
    Ok(table
        .values
        .iter()
        .map(|(ct, v)| v.abs() * BigRational::from_integer(BigInt::from(table.class_sizes[ct])))
        .sum())
}

/// `(d - k)! / d!`.
pub fn falling_factorial_reciprocal(k: usize, d: usize) -> BigRational {
    let denom: BigInt = ((d - k + 1)..=d).map(BigInt::from).product();
    BigRational::new(BigInt::one(), denom)
}

fn catalan(n: usize) -> BigInt {
    // (2n)! / (n! (n+1)!)
    let mut c = BigInt::one();
    for i in 0..n {
        c = c * BigInt::from(2 * (2 * i + 1)) / BigInt::from(i + 2);
    }
    c
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticEntry {
    pub cycle_type: CycleType,
    /// `(-1)^{k-#σ} d^{2k-#σ} Wg(σ, d) / Π_i Cat(ℓ_i - 1)`.
    #[serde(with = "rational_serde")]
    pub ratio: BigRational,
    pub ratio_f64: f64,
    /// `1 / (1 - (k-1)/d)`.
    #[serde(with = "rational_serde")]
    pub lower: BigRational,
    /// `1 / (1 - 6 k^{7/2} / d^2)`; meaningful only when `d > √6 k^{7/4}`.
    pub upper: f64,
    pub upper_in_range: bool,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub k: usize,
    pub d: usize,
    pub entries: Vec<AsymptoticEntry>,
    /// `|Wg(e, d) - d^{-k}| · d^{k+2}`.
    pub identity_deviation_scaled: f64,
    /// `|Wg(e, d) - d^{-k}| · d^{k+2} / k^{7/2}`.
    pub identity_deviation_normalized: f64,
}

/// Normalized Weingarten values beside both sides of the asymptotic sandwich.
/// Nothing is asserted; each side is flagged.
pub fn wg_asymptotic_report(k: usize, d: usize) -> Result<AsymptoticReport> {
    let table = weingarten_table(k, d)?;
    let kf = k as f64;
    let df = d as f64;
    let lower = BigRational::new(BigInt::from(d), BigInt::from(d - k + 1));
    let upper_den = 1.0 - 6.0 * kf.powf(3.5) / (df * df);
    let upper_in_range = upper_den > 0.0;
    let upper = if upper_in_range { 1.0 / upper_den } else { f64::INFINITY };
    let entries = table
        .entries()
        .into_iter()
        .map(|e| {
            let cycles = e.cycle_type.num_cycles();
            let sign = if (k - cycles).is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
            let cat: BigInt = e.cycle_type.parts().iter().map(|&l| catalan(l - 1)).product();
            let ratio = e.value * BigRational::new(sign * big_pow(d, 2 * k - cycles), cat);
            let ratio_f64 = rational_to_f64(&ratio);
            AsymptoticEntry {
                cycle_type: e.cycle_type,
                lower_holds: lower <= ratio,
                upper_holds: upper_in_range && ratio_f64 <= upper,
                ratio,
                ratio_f64,
                lower: lower.clone(),
                upper,
                upper_in_range,
            }
        })
        .collect();
    let wg_e = table.wg(&Permutation::identity(k));
    let deviation = (wg_e - BigRational::new(BigInt::one(), big_pow(d, k))).abs();
    let scaled = deviation * BigRational::from_integer(big_pow(d, k + 2));
    let identity_deviation_scaled = rational_to_f64(&scaled);
    Ok(AsymptoticReport {
        k,
        d,
        entries,
        identity_deviation_scaled,
        identity_deviation_normalized: identity_deviation_scaled / kf.powf(3.5),
    })
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to scaling when numerator or denominator overflow f64.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000) as usize;
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Serializes rationals as `{"num": "...", "den": "..."}` decimal strings.
pub mod rational_serde {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        num: String,
        den: String,
    }

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let repr = Repr::deserialize(d)?;
        let num: BigInt = repr.num.parse().map_err(D::Error::custom)?;
        let den: BigInt = repr.den.parse().map_err(D::Error::custom)?;
        if den == BigInt::from(0) {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(BigRational::new(num, den))
    }
}
