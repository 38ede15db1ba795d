//! The n-fold oscillator realization on the level-L Fock subspace.
//!
//! `A_{+,k} = sqrt(a_k) b_k^+`, `A_{-,k} = sqrt(a_k) b_k` and `A_{0,k} = N_k + beta_k`,
//! restricted to states with total occupation `L`. Every intermediate Casimir
//! `Q_K` preserves the level, so it is a finite real symmetric matrix there.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A subset of the modes `[n]`, stored as a bitmask (bit `i` is mode `i + 1`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModeSet(u32);

impl ModeSet {
    pub const MAX_MODES: usize = 32;

    pub fn empty() -> Self {
        ModeSet(0)
    }

    /// Builds a set from 1-based mode indices.
    pub fn from_modes(modes: &[usize]) -> Self {
        let mut bits = 0u32;
        for &m in modes {
            assert!((1..=Self::MAX_MODES).contains(&m), "mode {m} out of range");
            bits |= 1 << (m - 1);
        }
        ModeSet(bits)
    }

    pub fn singleton(mode: usize) -> Self {
        Self::from_modes(&[mode])
    }

    /// The full set `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= Self::MAX_MODES);
        if n == Self::MAX_MODES {
            ModeSet(u32::MAX)
        } else {
            ModeSet((1u32 << n) - 1)
        }
    }

    /// The interval `{lo, ..., hi}` (1-based, inclusive).
    pub fn range(lo: usize, hi: usize) -> Self {
        Self::from_modes(&(lo..=hi).collect::<Vec<_>>())
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn from_bits(bits: u32) -> Self {
        ModeSet(bits)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, mode: usize) -> bool {
        (1..=Self::MAX_MODES).contains(&mode) && self.0 & (1 << (mode - 1)) != 0
    }

    /// 1-based modes in increasing order.
    pub fn modes(self) -> Vec<usize> {
        (0..Self::MAX_MODES)
            .filter(|i| self.0 & (1 << i) != 0)
            .map(|i| i + 1)
            .collect()
    }

    pub fn min_mode(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize + 1)
    }

    pub fn max_mode(self) -> Option<usize> {
        (self.0 != 0).then(|| 32 - self.0.leading_zeros() as usize)
    }

    pub fn union(self, other: Self) -> Self {
        ModeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ModeSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ModeSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Disjoint or nested: the compatibility condition for coupling trees.
    pub fn is_compatible(self, other: Self) -> bool {
        self.is_disjoint(other) || self.is_subset(other) || other.is_subset(self)
    }
}

impl Ord for ModeSet {
    /// By size, then lexicographically on the sorted elements.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.modes().cmp(&other.modes()))
    }
}

impl PartialOrd for ModeSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.modes().iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for ModeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.modes().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let modes = Vec::<usize>::deserialize(d)?;
        if modes.iter().any(|&m| m == 0 || m > Self::MAX_MODES) {
            return Err(serde::de::Error::custom("mode index out of range"));
        }
        Ok(ModeSet::from_modes(&modes))
    }
}

/// Central charges `a_i`, shifts `beta_i` and the Fock level `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    a: Vec<f64>,
    beta: Vec<f64>,
    level: usize,
}

impl ModeParams {
    pub fn new(a: Vec<f64>, beta: Vec<f64>, level: usize) -> Result<Self> {
        let n = a.len();
        if n < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 modes, got {n}")));
        }
        if n > ModeSet::MAX_MODES {
            return Err(Error::InvalidParams(format!("at most {} modes", ModeSet::MAX_MODES)));
        }
        if beta.len() != n {
            return Err(Error::InvalidParams(format!(
                "{} central charges but {} shifts",
                n,
                beta.len()
            )));
        }
        if let Some(x) = a.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidParams(format!("central charge {x} is not positive")));
        }
        if let Some(x) = beta.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidParams(format!("shift {x} is not positive")));
        }
        Ok(ModeParams { a, beta, level })
    }

    /// All shifts equal to one.
    pub fn with_unit_beta(a: Vec<f64>, level: usize) -> Result<Self> {
        let beta = vec![1.0; a.len()];
        Self::new(a, beta, level)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `a_K`, the sum of the central charges over `K`.
    pub fn a_of(&self, set: ModeSet) -> f64 {
        set.modes().iter().map(|&m| self.a[m - 1]).sum()
    }

    pub fn beta_of(&self, set: ModeSet) -> f64 {
        set.modes().iter().map(|&m| self.beta[m - 1]).sum()
    }

    pub fn full_set(&self) -> ModeSet {
        ModeSet::full(self.n())
    }

    pub fn check_mode(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n() {
            Err(Error::ModeOutOfRange { index: k, n: self.n() })
        } else {
            Ok(())
        }
    }

    pub fn check_set(&self, set: ModeSet) -> Result<()> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        if !set.is_subset(self.full_set()) {
            let bad = set.difference(self.full_set()).min_mode().unwrap_or(0);
            return Err(Error::ModeOutOfRange { index: bad, n: self.n() });
        }
        Ok(())
    }
}

/// Occupation numbers of one basis state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// All compositions of `level` into `n` parts, in colexicographic order
/// (compare the last component first).
pub fn enumerate_basis(n: usize, level: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for m in 0..=left {
            prefix.push(m);
            rec(n, left - m, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, level, &mut Vec::with_capacity(n), &mut out);
    out.sort_by(|x, y| x.0.iter().rev().cmp(y.0.iter().rev()));
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// A real operator on `V_L` stored as sorted `(row, col, value)` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseOperator {
    /// Collects entries, summing duplicates and dropping exact zeros.
    pub fn from_triples(dim: usize, triples: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in triples {
            assert!(r < dim && c < dim, "entry ({r},{c}) outside dimension {dim}");
            *acc.entry((r, c)).or_insert(0.0) += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        SparseOperator { dim, entries }
    }

    pub fn zero(dim: usize) -> Self {
        SparseOperator { dim, entries: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triples(dim, (0..dim).map(|i| (i, i, 1.0)))
    }

    /// Keeps entries with magnitude above `threshold`.
    pub fn from_dense(m: &DMatrix<f64>, threshold: f64) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v.abs() > threshold {
                    entries.push((r, c, v));
                }
            }
        }
        SparseOperator { dim: m.nrows(), entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        Self::from_triples(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v)))
    }

    /// Exact (bitwise) symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|&(r, c, v)| self.get(c, r) == v)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_triples(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, s * v)))
    }

    /// `sum_t w_t X_t` over operators of equal dimension.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)]) -> Result<Self> {
        let dim = terms.first().map(|(_, x)| x.dim).unwrap_or(0);
        for (_, x) in terms {
            if x.dim != dim {
                return Err(Error::DimensionMismatch(dim, x.dim));
            }
        }
        Ok(Self::from_triples(
            dim,
            terms
                .iter()
                .flat_map(|(w, x)| x.entries.iter().map(move |&(r, c, v)| (r, c, w * v))),
        ))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum()
    }
}

/// `V_L` together with its basis and an index lookup.
#[derive(Debug, Clone)]
pub struct FockSpace {
    params: ModeParams,
    basis: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
}

impl FockSpace {
    pub fn new(params: ModeParams) -> Self {
        let basis = enumerate_basis(params.n(), params.level());
        let index = basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        FockSpace { params, basis, index }
    }

    pub fn params(&self) -> &ModeParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[MultiIndex] {
        &self.basis
    }

    pub fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// `A_{0,k}`: diagonal with entries `m_k + beta_k`.
    pub fn number_operator(&self, k: usize) -> Result<SparseOperator> {
        self.params.check_mode(k)?;
        let beta = self.params.beta[k - 1];
        Ok(SparseOperator::from_triples(
            self.dim(),
            self.basis.iter().enumerate().map(|(s, m)| (s, s, m.0[k - 1] as f64 + beta)),
        ))
    }

    /// `sum_k A_{0,k}`.
    pub fn total_number_operator(&self) -> SparseOperator {
        let shift: f64 = self.params.beta.iter().sum();
        SparseOperator::from_triples(
            self.dim(),
            (0..self.dim()).map(|s| (s, s, self.params.level as f64 + shift)),
        )
    }

    /// Coefficient of `A_{+,i} A_{-,j}` taking `m` to `m + e_i - e_j` (i != j, 0-based).
    /// Factors are multiplied in a fixed order so that `(i, j)` and `(j, i)` give
    /// bitwise-identical values.
    fn hop_coefficient(&self, i: usize, j: usize, mi: usize, mj: usize) -> f64 {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let occ = ((mi + 1) * mj) as f64;
        (self.params.a[lo] * self.params.a[hi]).sqrt() * occ.sqrt()
    }

    fn hop_triples(&self, i: usize, j: usize) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (s, m) in self.basis.iter().enumerate() {
            if i == j {
                let v = self.params.a[i] * m.0[i] as f64;
                out.push((s, s, v));
                continue;
            }
            let mj = m.0[j];
            if mj == 0 {
                continue;
            }
            let mut target = m.clone();
            target.0[i] += 1;
            target.0[j] -= 1;
            let t = self
                .index_of(&target)
                .expect("hopping preserves the level, target must be in the basis");
            out.push((t, s, self.hop_coefficient(i, j, m.0[i], mj)));
        }
        out
    }

    /// `A_{+,i} A_{-,j}` restricted to `V_L` (1-based modes).
    pub fn hopping_operator(&self, i: usize, j: usize) -> Result<SparseOperator> {
        self.params.check_mode(i)?;
        self.params.check_mode(j)?;
        Ok(SparseOperator::from_triples(self.dim(), self.hop_triples(i - 1, j - 1)))
    }

    /// `Q_K = a_K sum_{i in K} A_{0,i} - sum_{i,j in K} A_{+,i} A_{-,j}`.
    pub fn casimir(&self, set: ModeSet) -> Result<SparseOperator> {
        self.params.check_set(set)?;
        let modes: Vec<usize> = set.modes().iter().map(|m| m - 1).collect();
        let a_k = self.params.a_of(set);
        let mut triples = Vec::new();
        for (s, m) in self.basis.iter().enumerate() {
            let diag: f64 = modes
                .iter()
                .map(|&i| a_k * (m.0[i] as f64 + self.params.beta[i]) - self.params.a[i] * m.0[i] as f64)
                .sum();
            triples.push((s, s, diag));
        }
        for &i in &modes {
            for &j in &modes {
                if i != j {
                    triples.extend(self.hop_triples(i, j).into_iter().map(|(r, c, v)| (r, c, -v)));
                }
            }
        }
        Ok(SparseOperator::from_triples(self.dim(), triples))
    }

    /// `Q_K` as a dense matrix.
    pub fn casimir_dense(&self, set: ModeSet) -> Result<DMatrix<f64>> {
        Ok(self.casimir(set)?.to_dense())
    }
}
