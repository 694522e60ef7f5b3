//! Permutations of `{0, …, k-1}` in zero-indexed one-line notation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k` for which `S_k` may be enumerated (8! = 40320 elements).
pub const MAX_ENUMERATION: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

/// Cycle lengths in nonincreasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CycleType(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let k = images.len();
        if k == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut seen = vec![false; k];
        for &i in &images {
            if i >= k || seen[i] {
                return Err(Error::InvalidPermutation { size: k, images });
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            images: (0..k).collect(),
        }
    }

    /// Swap of `a` and `b` in `S_k`.
    pub fn transposition(k: usize, a: usize, b: usize) -> Result<Self> {
        if a >= k || b >= k {
            return Err(Error::IndexOutOfRange { index: a.max(b), d: k });
        }
        let mut images: Vec<usize> = (0..k).collect();
        images.swap(a, b);
        Ok(Self { images })
    }

    /// Build from disjoint cycles, e.g. `[[0, 1, 2]]` maps 0→1→2→0.
    pub fn from_cycles(k: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (0..k).collect();
        for cycle in cycles {
            for (pos, &from) in cycle.iter().enumerate() {
                let to = cycle[(pos + 1) % cycle.len()];
                if from >= k || to >= k {
                    return Err(Error::IndexOutOfRange { index: from.max(to), d: k });
                }
                images[from] = to;
            }
        }
        Self::new(images)
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.size() != other.size() {
            return Err(Error::PermutationSizeMismatch(self.size(), other.size()));
        }
        Ok(Permutation {
            images: other.images.iter().map(|&j| self.images[j]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.size()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Permutation { images }
    }

    /// Lengths of the disjoint cycles, in order of their smallest element.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let k = self.size();
        let mut seen = vec![false; k];
        let mut lengths = Vec::new();
        for start in 0..k {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.images[i];
                len += 1;
            }
            lengths.push(len);
        }
        lengths
    }

    pub fn cycle_type(&self) -> CycleType {
        let mut parts = self.cycle_lengths();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        CycleType(parts)
    }

    pub fn num_cycles(&self) -> usize {
        self.cycle_lengths().len()
    }

    pub fn longest_cycle(&self) -> usize {
        self.cycle_lengths().into_iter().max().unwrap_or(0)
    }

    /// Lexicographic successor of the image array, or `None` at the last permutation.
    pub fn next_lexicographic(&self) -> Option<Permutation> {
        let mut a = self.images.clone();
        let n = a.len();
        let i = (0..n.saturating_sub(1)).rev().find(|&i| a[i] < a[i + 1])?;
        let j = (i + 1..n).rev().find(|&j| a[j] > a[i])?;
        a.swap(i, j);
        a[i + 1..].reverse();
        Some(Permutation { images: a })
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (pos, i) in self.images.iter().enumerate() {
            if pos > 0 {
                write!(f, " ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

impl CycleType {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidParameter(format!("invalid cycle type {parts:?}")));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn num_cycles(&self) -> usize {
        self.0.len()
    }

    /// A permutation with this cycle type: consecutive blocks, each a cycle.
    pub fn representative(&self) -> Permutation {
        let k = self.size();
        let mut images = vec![0; k];
        let mut start = 0;
        for &len in &self.0 {
            for pos in 0..len {
                images[start + pos] = start + (pos + 1) % len;
            }
            start += len;
        }
        Permutation { images }
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (pos, p) in self.0.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

fn check_guard(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::ZeroDimension);
    }
    if k > MAX_ENUMERATION {
        return Err(Error::FactorialGuard { k, max: MAX_ENUMERATION });
    }
    Ok(())
}

/// All of `S_k` in lexicographic order of the image arrays; identity first.
pub fn enumerate_group(k: usize) -> Result<Vec<Permutation>> {
    check_guard(k)?;
    let mut out = Vec::with_capacity(factorial(k) as usize);
    let mut cur = Some(Permutation::identity(k));
    while let Some(p) = cur {
        cur = p.next_lexicographic();
        out.push(p);
    }
    Ok(out)
}

/// `N(T, L)`: number of permutations of `S_T` whose longest cycle has length `L`,
/// for every `L` in `1..=T`.
pub fn longest_cycle_census(t: usize) -> Result<BTreeMap<usize, u64>> {
    let group = enumerate_group(t)?;
    let mut census: BTreeMap<usize, u64> = (1..=t).map(|l| (l, 0)).collect();
    for p in &group {
        *census.entry(p.longest_cycle()).or_default() += 1;
    }
    Ok(census)
}

/// Falling factorial `T! / (T - L)!`.
pub fn falling_factorial(t: usize, l: usize) -> u64 {
    ((t - l + 1) as u64..=t as u64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashSet, VecDeque};

    fn p(images: &[usize]) -> Permutation {
        Permutation::new(images.to_vec()).unwrap()
    }

    #[test]
    fn compose_cases() {
        let sigma = p(&[1, 0, 2]); // (01)
        let tau = p(&[0, 2, 1]); // (12)
        let e = Permutation::identity(3);
        assert_eq!(e.compose(&sigma).unwrap(), sigma);
        assert_eq!(sigma.compose(&sigma.inverse()).unwrap(), e);
        // Table worked by hand: tau sends 0→0, 1→2, 2→1; then sigma sends 0→1, 2→2, 1→0.
        assert_eq!(sigma.compose(&tau).unwrap(), p(&[1, 2, 0]));
        assert_eq!(tau.compose(&sigma).unwrap(), p(&[2, 0, 1]));
        assert!(matches!(
            sigma.compose(&Permutation::identity(4)),
            Err(Error::PermutationSizeMismatch(3, 4))
        ));
    }

    #[test]
    fn inverse_cases() {
        let e = Permutation::identity(5);
        assert_eq!(e.inverse(), e);
        let t = Permutation::transposition(4, 1, 3).unwrap();
        assert_eq!(t.inverse(), t);
        let c = Permutation::from_cycles(3, &[&[0, 1, 2]]).unwrap();
        assert_eq!(c.images(), &[1, 2, 0]);
        assert_eq!(c.inverse(), Permutation::from_cycles(3, &[&[0, 2, 1]]).unwrap());
    }

    #[test]
    fn cycle_types() {
        let e = Permutation::identity(4);
        assert_eq!(e.cycle_type().parts(), &[1, 1, 1, 1]);
        assert_eq!(e.num_cycles(), 4);
        let t = Permutation::transposition(3, 0, 2).unwrap();
        assert_eq!(t.cycle_type().parts(), &[2, 1]);
        assert_eq!(t.num_cycles(), 2);
        let c5 = Permutation::from_cycles(5, &[&[0, 3, 1, 4, 2]]).unwrap();
        assert_eq!(c5.cycle_type().parts(), &[5]);
        assert_eq!(c5.num_cycles(), 1);
        let ct = CycleType::new(vec![1, 3, 2]).unwrap();
        assert_eq!(ct.representative().cycle_type(), ct);
        assert_eq!(ct.to_string(), "(3,2,1)");
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![2, 0]).is_err());
        assert!(Permutation::new(vec![]).is_err());
    }

    #[test]
    fn enumeration() {
        assert_eq!(enumerate_group(3).unwrap().len(), 6);
        let s4 = enumerate_group(4).unwrap();
        assert_eq!(s4.len(), 24);
        assert!(s4[0].is_identity());
        assert_eq!(s4.iter().collect::<HashSet<_>>().len(), 24);
        assert!(s4.windows(2).all(|w| w[0].images() < w[1].images()));
        let e = Permutation::identity(4);
        for s in &s4 {
            assert_eq!(s.compose(&s.inverse()).unwrap(), e);
        }
        assert_eq!(enumerate_group(8).unwrap().len(), 40320);
        let err = enumerate_group(9).unwrap_err();
        assert!(matches!(err, Error::FactorialGuard { k: 9, max: 8 }));
        assert!(err.to_string().contains("9!"));
    }

    #[test]
    fn group_axioms_exhaustive() {
        for k in 1..=5 {
            let g = enumerate_group(k).unwrap();
            let set: HashSet<_> = g.iter().cloned().collect();
            let e = Permutation::identity(k);
            for a in &g {
                assert_eq!(a.compose(&e).unwrap(), *a);
                assert_eq!(e.compose(a).unwrap(), *a);
                assert_eq!(a.inverse().compose(a).unwrap(), e);
            }
            // Closure is exhaustive; associativity on a deterministic sample of triples.
            for (i, a) in g.iter().enumerate() {
                for b in g.iter().step_by(7) {
                    let ab = a.compose(b).unwrap();
                    assert!(set.contains(&ab));
                    let c = &g[(i * 31 + 5) % g.len()];
                    assert_eq!(ab.compose(c).unwrap(), a.compose(&b.compose(c).unwrap()).unwrap());
                }
            }
        }
    }

    /// Breadth-first distance from the identity in the Cayley graph generated by
    /// all transpositions.
    fn transposition_distances(k: usize) -> std::collections::HashMap<Permutation, usize> {
        let mut dist = std::collections::HashMap::new();
        let e = Permutation::identity(k);
        dist.insert(e.clone(), 0);
        let mut queue = VecDeque::from([e]);
        while let Some(cur) = queue.pop_front() {
            let dcur = dist[&cur];
            for a in 0..k {
                for b in a + 1..k {
                    let next = cur.compose(&Permutation::transposition(k, a, b).unwrap()).unwrap();
                    if !dist.contains_key(&next) {
                        dist.insert(next.clone(), dcur + 1);
                        queue.push_back(next);
                    }
                }
            }
        }
        dist
    }

    #[test]
    fn cycles_count_minimal_transpositions() {
        for k in 1..=5 {
            let dist = transposition_distances(k);
            assert_eq!(dist.len() as u64, factorial(k));
            for (perm, d) in dist {
                assert_eq!(perm.num_cycles(), k - d, "{perm}");
            }
        }
    }

    #[test]
    fn census_small() {
        let c3 = longest_cycle_census(3).unwrap();
        assert_eq!(c3, BTreeMap::from([(1, 1), (2, 3), (3, 2)]));
        assert!(c3[&2] <= falling_factorial(3, 2));
        assert_eq!(falling_factorial(3, 2), 6);
        assert_eq!(longest_cycle_census(1).unwrap(), BTreeMap::from([(1, 1)]));
        assert!(longest_cycle_census(9).is_err());
    }

    #[test]
    fn census_matches_enumeration_oracle() {
        // Frozen from an independent brute-force enumeration of S_T.
        let expected: [&[u64]; 7] = [
            &[1],
            &[1, 1],
            &[1, 3, 2],
            &[1, 9, 8, 6],
            &[1, 25, 40, 30, 24],
            &[1, 75, 200, 180, 144, 120],
            &[1, 231, 980, 1260, 1008, 840, 720],
        ];
        for (t, row) in (1..=7).zip(expected) {
            let census = longest_cycle_census(t).unwrap();
            assert_eq!(census.values().copied().collect::<Vec<_>>(), row, "T={t}");
            assert_eq!(census.values().sum::<u64>(), factorial(t));
        }
    }

    #[test]
    fn falling_factorial_bound_breaks_at_five() {
        let violations: Vec<(usize, usize)> = (1..=7)
            .flat_map(|t| {
                longest_cycle_census(t)
                    .unwrap()
                    .into_iter()
                    .filter(move |&(l, n)| n > falling_factorial(t, l))
                    .map(move |(l, _)| (t, l))
            })
            .collect();
        // Involutions alone outnumber T!/(T-2)! from T = 5 on.
        assert_eq!(violations, vec![(5, 2), (6, 2), (6, 3), (7, 2), (7, 3), (7, 4)]);
    }
}
