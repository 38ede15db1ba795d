//! Commutators, the relation catalogue of the oscillator Racah algebra, the
//! embedded sl(n-1) generators and their Chevalley-Serre checks.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSpace, ModeParams, ModeSet, SparseOperator};
use crate::trees::CouplingTree;

/// Default relative tolerance for relation residuals.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `XY - YX` on dense matrices.
pub fn dense_commutator(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y - y * x
}

/// `XY - YX`, dropping entries below `1e-14 ||X|| ||Y||`.
pub fn commutator(x: &SparseOperator, y: &SparseOperator) -> Result<SparseOperator> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    let c = dense_commutator(&x.to_dense(), &y.to_dense());
    let threshold = 1e-14 * x.frobenius_norm() * y.frobenius_norm();
    Ok(SparseOperator::from_dense(&c, threshold))
}

/// `||L - R||_F / (1 + ||L||_F + ||R||_F)`.
pub fn relative_residual(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> f64 {
    (lhs - rhs).norm() / (1.0 + lhs.norm() + rhs.norm())
}

/// Realization data attached to each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationContext {
    pub n: usize,
    pub level: usize,
    pub a: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RelationContext {
    pub fn of(params: &ModeParams) -> Self {
        RelationContext {
            n: params.n(),
            level: params.level(),
            a: params.a().to_vec(),
            beta: params.beta().to_vec(),
        }
    }
}

/// Outcome of one relation instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: String,
    /// Mode sets (or singleton modes) the instance was evaluated at.
    pub indices: Vec<ModeSet>,
    pub residual: f64,
    pub passed: bool,
    /// Reason the relation was not evaluated, if skipped.
    pub skipped: Option<String>,
    pub context: RelationContext,
}

impl RelationReport {
    fn checked(relation: &str, indices: Vec<ModeSet>, residual: f64, tol: f64, ctx: &RelationContext) -> Self {
        RelationReport {
            relation: relation.to_string(),
            indices,
            residual,
            passed: residual <= tol,
            skipped: None,
            context: ctx.clone(),
        }
    }

    fn skipped(relation: &str, reason: &str, ctx: &RelationContext) -> Self {
        RelationReport {
            relation: relation.to_string(),
            indices: Vec::new(),
            residual: 0.0,
            passed: true,
            skipped: Some(reason.to_string()),
            context: ctx.clone(),
        }
    }
}

/// Memoized dense `Q_K` matrices for one realization.
pub struct CasimirCache<'a> {
    space: &'a FockSpace,
    cache: HashMap<ModeSet, DMatrix<f64>>,
}

impl<'a> CasimirCache<'a> {
    pub fn new(space: &'a FockSpace) -> Self {
        CasimirCache { space, cache: HashMap::new() }
    }

    pub fn space(&self) -> &FockSpace {
        self.space
    }

    pub fn get(&mut self, set: ModeSet) -> Result<&DMatrix<f64>> {
        if !self.cache.contains_key(&set) {
            let q = self.space.casimir_dense(set)?;
            self.cache.insert(set, q);
        }
        Ok(&self.cache[&set])
    }

    /// `Q` of the set given by 1-based modes.
    pub fn q(&mut self, modes: &[usize]) -> DMatrix<f64> {
        self.get(ModeSet::from_modes(modes)).expect("valid mode set").clone()
    }
}

fn singletons(modes: &[usize]) -> Vec<ModeSet> {
    modes.iter().map(|&m| ModeSet::singleton(m)).collect()
}

fn distinct_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in 1..=n {
            if !cur.contains(&i) {
                cur.push(i);
                rec(n, len, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, len, &mut Vec::new(), &mut out);
    out
}

/// Evaluates every instance of the relation catalogue on the realization.
///
/// Order: SumQ, LinearDependence, Commutator, Fijk, Omega, Commsum, Relation1,
/// Relation2, DolanGrady; within a relation, index tuples in increasing order.
pub fn verify_relation_suite(space: &FockSpace, tol: f64) -> Vec<RelationReport> {
    let params = space.params();
    let n = params.n();
    let ctx = RelationContext::of(params);
    let a = |i: usize| params.a()[i - 1];
    let mut cache = CasimirCache::new(space);
    let mut out = Vec::new();
    let subsets: Vec<ModeSet> = (1..(1u32 << n)).map(ModeSet::from_bits).collect();

    // Q_{KLM} = Q_{KL} + Q_{KM} + Q_{LM} - Q_K - Q_L - Q_M, unordered disjoint triples.
    if n >= 3 {
        for (x, &k) in subsets.iter().enumerate() {
            for (y, &l) in subsets.iter().enumerate().skip(x + 1) {
                if !k.is_disjoint(l) {
                    continue;
                }
                for &m in subsets.iter().skip(y + 1) {
                    if !m.is_disjoint(k.union(l)) {
                        continue;
                    }
                    let mut q = |s: ModeSet| cache.get(s).unwrap().clone();
                    let lhs = q(k.union(l).union(m));
                    let rhs = q(k.union(l)) + q(k.union(m)) + q(l.union(m)) - q(k) - q(l) - q(m);
                    out.push(RelationReport::checked("SumQ", vec![k, l, m], relative_residual(&lhs, &rhs), tol, &ctx));
                }
            }
        }
    } else {
        out.push(RelationReport::skipped("SumQ", "needs three disjoint sets (n >= 3)", &ctx));
    }

    // Q_K = sum_{i<j in K} Q_ij - (|K| - 2) sum_{i in K} Q_i.
    for &k in subsets.iter().filter(|s| s.len() >= 2) {
        let modes = k.modes();
        let lhs = cache.q(&modes);
        let mut rhs = DMatrix::zeros(space.dim(), space.dim());
        for (x, &i) in modes.iter().enumerate() {
            for &j in &modes[x + 1..] {
                rhs += cache.q(&[i, j]);
            }
            rhs -= cache.q(&[i]) * (modes.len() as f64 - 2.0);
        }
        out.push(RelationReport::checked("LinearDependence", vec![k], relative_residual(&lhs, &rhs), tol, &ctx));
    }

    // [Q_K, Q_L] = 0 for nested or disjoint K != L.
    for (x, &k) in subsets.iter().enumerate() {
        for &l in subsets.iter().skip(x + 1) {
            if !k.is_compatible(l) {
                continue;
            }
            let qk = cache.get(k).unwrap().clone();
            let c = dense_commutator(&qk, cache.get(l).unwrap());
            let zero = DMatrix::zeros(space.dim(), space.dim());
            out.push(RelationReport::checked("Commutator", vec![k, l], relative_residual(&c, &zero), tol, &ctx));
        }
    }

    let triples = distinct_tuples(n, 3);
    let quads = distinct_tuples(n, 4);
    let three_reason = "needs three distinct modes (n >= 3)";
    let four_reason = "needs four distinct modes (n >= 4)";

    // [Q_ij, Q_jk] + [Q_ij, Q_ik] = 0.
    if triples.is_empty() {
        out.push(RelationReport::skipped("Fijk", three_reason, &ctx));
    }
    for t in &triples {
        let (i, j, k) = (t[0], t[1], t[2]);
        let lhs = dense_commutator(&cache.q(&[i, j]), &cache.q(&[j, k]));
        let rhs = -dense_commutator(&cache.q(&[i, j]), &cache.q(&[i, k]));
        out.push(RelationReport::checked("Fijk", singletons(t), relative_residual(&lhs, &rhs), tol, &ctx));
    }

    // [Q_ij, Q_jk] = [Q_jk, Q_ik] = [Q_ik, Q_ij].
    if triples.is_empty() {
        out.push(RelationReport::skipped("Omega", three_reason, &ctx));
    }
    for t in &triples {
        let (i, j, k) = (t[0], t[1], t[2]);
        let c1 = dense_commutator(&cache.q(&[i, j]), &cache.q(&[j, k]));
        let c2 = dense_commutator(&cache.q(&[j, k]), &cache.q(&[i, k]));
        let c3 = dense_commutator(&cache.q(&[i, k]), &cache.q(&[i, j]));
        let r = relative_residual(&c1, &c2).max(relative_residual(&c1, &c3));
        out.push(RelationReport::checked("Omega", singletons(t), r, tol, &ctx));
    }

    // a_i [Q_jk, Q_kl] = a_j [Q_ik, Q_kl] - a_k [Q_ij, Q_jl] + a_l [Q_ij, Q_jk].
    if quads.is_empty() {
        out.push(RelationReport::skipped("Commsum", four_reason, &ctx));
    }
    for t in &quads {
        let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
        let lhs = dense_commutator(&cache.q(&[j, k]), &cache.q(&[k, l])) * a(i);
        let rhs = dense_commutator(&cache.q(&[i, k]), &cache.q(&[k, l])) * a(j)
            - dense_commutator(&cache.q(&[i, j]), &cache.q(&[j, l])) * a(k)
            + dense_commutator(&cache.q(&[i, j]), &cache.q(&[j, k])) * a(l);
        out.push(RelationReport::checked("Commsum", singletons(t), relative_residual(&lhs, &rhs), tol, &ctx));
    }

    // [[Q_ij, Q_jk], Q_ij] in terms of Q_ij, Q_jk, Q_ik and the Q_i.
    if triples.is_empty() {
        out.push(RelationReport::skipped("Relation1", three_reason, &ctx));
    }
    for t in &triples {
        let (i, j, k) = (t[0], t[1], t[2]);
        let qij = cache.q(&[i, j]);
        let lhs = dense_commutator(&dense_commutator(&qij, &cache.q(&[j, k])), &qij);
        let rhs = &qij * (a(k) * (a(i) - a(j))) - cache.q(&[j, k]) * (a(i) * (a(i) + a(j)))
            + cache.q(&[i, k]) * (a(j) * (a(i) + a(j)))
            - cache.q(&[i]) * ((a(j) + a(k)) * (a(i) + a(j)))
            + cache.q(&[j]) * ((a(i) + a(k)) * (a(i) + a(j)))
            + cache.q(&[k]) * (a(i) * a(i) - a(j) * a(j));
        out.push(RelationReport::checked("Relation1", singletons(t), relative_residual(&lhs, &rhs), tol, &ctx));
    }

    // [[Q_ij, Q_jk], Q_kl] in terms of pair Casimirs.
    if quads.is_empty() {
        out.push(RelationReport::skipped("Relation2", four_reason, &ctx));
    }
    for t in &quads {
        let (i, j, k, l) = (t[0], t[1], t[2], t[3]);
        let lhs = dense_commutator(&dense_commutator(&cache.q(&[i, j]), &cache.q(&[j, k])), &cache.q(&[k, l]));
        let mut pair = |x: usize, y: usize| cache.q(&[x, y]) - cache.q(&[x]) - cache.q(&[y]);
        let rhs = pair(j, k) * (a(i) * a(l)) - pair(i, k) * (a(j) * a(l)) - pair(j, l) * (a(i) * a(k))
            + pair(i, l) * (a(j) * a(k));
        out.push(RelationReport::checked("Relation2", singletons(t), relative_residual(&lhs, &rhs), tol, &ctx));
    }

    // [Q_ij, [Q_ij, [Q_ij, Q_jk]]] = (a_i + a_j)^2 [Q_ij, Q_jk].
    if triples.is_empty() {
        out.push(RelationReport::skipped("DolanGrady", three_reason, &ctx));
    }
    for t in &triples {
        let (i, j, k) = (t[0], t[1], t[2]);
        let qij = cache.q(&[i, j]);
        let c = dense_commutator(&qij, &cache.q(&[j, k]));
        let lhs = dense_commutator(&qij, &dense_commutator(&qij, &c));
        let rhs = &c * (a(i) + a(j)).powi(2);
        out.push(RelationReport::checked("DolanGrady", singletons(t), relative_residual(&lhs, &rhs), tol, &ctx));
    }

    out
}

/// An sl2 triple attached to an internal node `A = K u L` with sibling `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlTriple {
    pub e: SparseOperator,
    pub f: SparseOperator,
    pub h: SparseOperator,
    pub node: ModeSet,
    pub left: ModeSet,
    pub right: ModeSet,
    pub sibling: ModeSet,
    pub lambda: f64,
    /// Residual of `[e, f]` against `2Q_A/a_A - Q_B/a_B - Q_K/a_K - Q_L/a_L + Q_M/a_M`.
    pub cartan_residual: f64,
}

impl SlTriple {
    pub fn parent(&self) -> ModeSet {
        self.node.union(self.sibling)
    }

    pub fn dense(&self) -> [DMatrix<f64>; 3] {
        [self.e.to_dense(), self.f.to_dense(), self.h.to_dense()]
    }

    /// `(e, f, h) -> (-f, -e, -h)`, the Chevalley involution on one triple.
    pub fn flipped(&self) -> SlTriple {
        SlTriple {
            e: self.f.scale(-1.0),
            f: self.e.scale(-1.0),
            h: self.h.scale(-1.0),
            ..self.clone()
        }
    }

    /// Worst residual of `[h,e] = 2e`, `[h,f] = -2f`, `[e,f] = h`.
    pub fn sl2_residual(&self) -> f64 {
        let [e, f, h] = self.dense();
        relative_residual(&dense_commutator(&h, &e), &(&e * 2.0))
            .max(relative_residual(&dense_commutator(&h, &f), &(&f * -2.0)))
            .max(relative_residual(&dense_commutator(&e, &f), &h))
    }
}

/// `lambda_A = 1 / sqrt(4 a_K a_L a_M a_A^2 a_B)`.
pub fn lambda(a_k: f64, a_l: f64, a_m: f64) -> Option<f64> {
    let a_a = a_k + a_l;
    let a_b = a_a + a_m;
    let rad = 4.0 * a_k * a_l * a_m * a_a * a_a * a_b;
    (rad > 0.0 && rad.is_finite()).then(|| 1.0 / rad.sqrt())
}

/// The triple for node `K u L` with left child `K`, right child `L` and sibling `M`.
pub fn sl_triple(space: &FockSpace, k: ModeSet, l: ModeSet, m: ModeSet) -> Result<SlTriple> {
    let params = space.params();
    for s in [k, l, m] {
        params.check_set(s)?;
    }
    if !(k.is_disjoint(l) && k.is_disjoint(m) && l.is_disjoint(m)) {
        return Err(Error::Overlap(format!("{k}, {l}, {m}")));
    }
    let node = k.union(l);
    let parent = node.union(m);
    let (a_k, a_l, a_m) = (params.a_of(k), params.a_of(l), params.a_of(m));
    let a_a = a_k + a_l;
    let a_b = a_a + a_m;
    let lam = lambda(a_k, a_l, a_m).ok_or_else(|| Error::NonPositiveRadicand(node.to_string()))?;

    let q = |s: ModeSet| space.casimir_dense(s);
    let q_a = q(node)?;
    let c = dense_commutator(&q_a, &q(l.union(m))?);
    let x = dense_commutator(&q_a, &c);
    let e = (&x + &c * a_a) * lam;
    let f = (&x - &c * a_a) * lam;
    let h = dense_commutator(&e, &f);
    let explicit = &q_a * (2.0 / a_a) - q(parent)? / a_b - q(k)? / a_k - q(l)? / a_l + q(m)? / a_m;
    let cartan_residual = relative_residual(&h, &explicit);

    let sparse = |x: &DMatrix<f64>| SparseOperator::from_dense(x, 1e-14 * (1.0 + x.norm()));
    Ok(SlTriple {
        e: sparse(&e),
        f: sparse(&f),
        h: sparse(&h),
        node,
        left: k,
        right: l,
        sibling: m,
        lambda: lam,
        cartan_residual,
    })
}

/// The triple of an internal non-root node, with orientation read from the tree.
pub fn sl_generators(space: &FockSpace, tree: &CouplingTree, node: ModeSet) -> Result<SlTriple> {
    if tree.n() != space.n() {
        return Err(Error::InvalidTree(format!("tree has {} leaves, space has {} modes", tree.n(), space.n())));
    }
    let ctx = tree
        .node_context(node)
        .ok_or_else(|| Error::NotInternalNode(node.to_string()))?;
    sl_triple(space, ctx.left, ctx.right, ctx.sibling)
}

/// Triples of the chain tree `(((1,2),3),...)`, nodes `[k+1]` for `k = 1..n-2`.
pub fn chain_triples(space: &FockSpace) -> Result<Vec<SlTriple>> {
    let n = space.n();
    (1..n.saturating_sub(1))
        .map(|k| {
            sl_triple(
                space,
                ModeSet::range(1, k),
                ModeSet::singleton(k + 1),
                ModeSet::singleton(k + 2),
            )
        })
        .collect()
}

/// Chevalley-Serre relations for triples forming a chain (Cartan matrix of type A).
pub fn verify_serre(triples: &[SlTriple], tol: f64) -> Vec<RelationReport> {
    let ctx = RelationContext { n: triples.len() + 2, level: 0, a: Vec::new(), beta: Vec::new() };
    let r = triples.len();
    let dense: Vec<[DMatrix<f64>; 3]> = triples.iter().map(|t| t.dense()).collect();
    let cartan = |i: usize, j: usize| -> f64 {
        if i == j {
            2.0
        } else if i.abs_diff(j) == 1 {
            -1.0
        } else {
            0.0
        }
    };
    let ids = |i: usize, j: usize| vec![triples[i].node, triples[j].node];
    let mut out = Vec::new();
    for t in triples {
        out.push(RelationReport::checked("Sl2", vec![t.node], t.sl2_residual(), tol, &ctx));
    }
    for i in 0..r {
        for j in i + 1..r {
            let c = dense_commutator(&dense[i][2], &dense[j][2]);
            let zero = DMatrix::zeros(c.nrows(), c.ncols());
            out.push(RelationReport::checked("S1", ids(i, j), relative_residual(&c, &zero), tol, &ctx));
        }
    }
    for i in 0..r {
        for j in 0..r {
            let c = dense_commutator(&dense[i][0], &dense[j][1]);
            let rhs = if i == j { dense[i][2].clone() } else { DMatrix::zeros(c.nrows(), c.ncols()) };
            out.push(RelationReport::checked("S2", ids(i, j), relative_residual(&c, &rhs), tol, &ctx));
        }
    }
    for i in 0..r {
        for j in 0..r {
            let a = cartan(i, j);
            let ce = dense_commutator(&dense[i][2], &dense[j][0]);
            let cf = dense_commutator(&dense[i][2], &dense[j][1]);
            let res = relative_residual(&ce, &(&dense[j][0] * a)).max(relative_residual(&cf, &(&dense[j][1] * -a)));
            out.push(RelationReport::checked("S3", ids(i, j), res, tol, &ctx));
        }
    }
    for (name, slot) in [("S+", 0usize), ("S-", 1usize)] {
        for i in 0..r {
            for j in 0..r {
                if i == j {
                    continue;
                }
                let power = (1.0 - cartan(i, j)) as usize;
                let mut x = dense[j][slot].clone();
                for _ in 0..power {
                    x = dense_commutator(&dense[i][slot], &x);
                }
                let zero = DMatrix::zeros(x.nrows(), x.ncols());
                let res = relative_residual(&x, &zero);
                out.push(RelationReport::checked(name, ids(i, j), res, tol, &ctx));
            }
        }
    }
    out
}

/// `C = S (S - 2) / 2` with `S = Q_K/a_K + Q_L/a_L + Q_M/a_M - Q_KLM/a_KLM`.
pub fn sl2_casimir(space: &FockSpace, k: ModeSet, l: ModeSet, m: ModeSet) -> Result<SparseOperator> {
    let params = space.params();
    for s in [k, l, m] {
        params.check_set(s)?;
    }
    if !(k.is_disjoint(l) && k.is_disjoint(m) && l.is_disjoint(m)) {
        return Err(Error::Overlap(format!("{k}, {l}, {m}")));
    }
    let all = k.union(l).union(m);
    let s = space.casimir_dense(k)? / params.a_of(k) + space.casimir_dense(l)? / params.a_of(l)
        + space.casimir_dense(m)? / params.a_of(m)
        - space.casimir_dense(all)? / params.a_of(all);
    let two = DMatrix::identity(s.nrows(), s.ncols()) * 2.0;
    let c = &s * (&s - two) * 0.5;
    Ok(SparseOperator::from_dense(&c, 1e-14 * (1.0 + c.norm())))
}

/// Numerical rank of the generating family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// Members: `Q_i`, `Q_[n]`, `Q_ij` (i<j), `[Q_1j, Q_jk]` (1<j<k).
    pub family_size: usize,
    pub expected_rank: usize,
    pub rank: usize,
    /// `sigma_rank / sigma_{rank+1}` (infinite if the family has full rank).
    pub gap: f64,
    pub singular_values: Vec<f64>,
    /// Rank on a single realization, where all `Q_i` are multiples of the identity.
    pub single_realization_rank: usize,
    pub shifts: Vec<Vec<f64>>,
}

fn flattened_family(space: &FockSpace) -> Vec<Vec<f64>> {
    let n = space.n();
    let mut cache = CasimirCache::new(space);
    let mut fam = Vec::new();
    for i in 1..=n {
        fam.push(cache.q(&[i]));
    }
    fam.push(cache.q(&(1..=n).collect::<Vec<_>>()));
    for i in 1..=n {
        for j in i + 1..=n {
            fam.push(cache.q(&[i, j]));
        }
    }
    for j in 2..=n {
        for k in j + 1..=n {
            fam.push(dense_commutator(&cache.q(&[1, j]), &cache.q(&[j, k])));
        }
    }
    fam.into_iter().map(|m| m.as_slice().to_vec()).collect()
}

fn rank_of(rows: &[Vec<f64>]) -> (usize, f64, Vec<f64>) {
    let cols = rows[0].len();
    let mut m = DMatrix::zeros(rows.len(), cols);
    for (r, row) in rows.iter().enumerate() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for (c, v) in row.iter().enumerate() {
            m[(r, c)] = v / norm;
        }
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = sv[0];
    let rank = sv.iter().filter(|&&s| s > 1e-8 * top).count();
    let gap = if rank < sv.len() { sv[rank - 1] / sv[rank] } else { f64::INFINITY };
    (rank, gap, sv)
}

/// Rank of the generating family over the direct sum of `n + 1` realizations
/// that share `a` and `L` but use distinct shift vectors, so the central
/// elements `Q_i` are not all proportional to the identity.
pub fn generator_rank(a: &[f64], level: usize) -> Result<RankReport> {
    let n = a.len();
    let mut shifts = vec![vec![1.0; n]];
    for i in 0..n {
        let mut b = vec![1.0; n];
        b[i] += (i + 1) as f64;
        shifts.push(b);
    }
    let mut stacked: Vec<Vec<f64>> = Vec::new();
    let mut single = 0;
    for (t, b) in shifts.iter().enumerate() {
        let space = FockSpace::new(ModeParams::new(a.to_vec(), b.clone(), level)?);
        let fam = flattened_family(&space);
        if t == 0 {
            single = rank_of(&fam).0;
            stacked = fam;
        } else {
            for (row, extra) in stacked.iter_mut().zip(fam) {
                row.extend(extra);
            }
        }
    }
    let (rank, gap, singular_values) = rank_of(&stacked);
    Ok(RankReport {
        family_size: stacked.len(),
        expected_rank: n * n - n + 1,
        rank,
        gap,
        singular_values,
        single_realization_rank: single,
        shifts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(a: &[f64], level: usize) -> FockSpace {
        FockSpace::new(ModeParams::with_unit_beta(a.to_vec(), level).unwrap())
    }

    #[test]
    fn commutator_basics() {
        let sp = space(&[2.0, 3.0, 5.0], 2);
        let q12 = sp.casimir(ModeSet::from_modes(&[1, 2])).unwrap();
        assert_eq!(commutator(&q12, &q12).unwrap().nnz(), 0);
        let q1 = sp.casimir(ModeSet::singleton(1)).unwrap();
        let q2 = sp.casimir(ModeSet::singleton(2)).unwrap();
        assert_eq!(commutator(&q1, &q2).unwrap().nnz(), 0);
        assert!(commutator(&q1, &SparseOperator::zero(3)).is_err());
    }

    #[test]
    fn commutator_matches_naive_product() {
        let sp = space(&[2.0, 3.0, 5.0], 2);
        let x = sp.casimir(ModeSet::from_modes(&[1, 2])).unwrap();
        let y = sp.casimir(ModeSet::from_modes(&[2, 3])).unwrap();
        let (xd, yd) = (x.to_dense(), y.to_dense());
        let d = sp.dim();
        let mut naive = 0.0;
        for r in 0..d {
            for c in 0..d {
                let mut s = 0.0;
                for t in 0..d {
                    s += xd[(r, t)] * yd[(t, c)] - yd[(r, t)] * xd[(t, c)];
                }
                naive += s * s;
            }
        }
        let got = commutator(&x, &y).unwrap().frobenius_norm();
        assert!(got > 1.0);
        assert!((got - naive.sqrt()).abs() < 1e-10 * got);
    }

    #[test]
    fn suite_n3_passes() {
        let sp = space(&[2.0, 3.0, 5.0], 3);
        let reports = verify_relation_suite(&sp, 1e-9);
        assert!(reports.iter().all(|r| r.passed), "{:?}", reports.iter().find(|r| !r.passed));
        let sumq = reports.iter().find(|r| r.relation == "SumQ").unwrap();
        assert_eq!(sumq.indices, singletons(&[1, 2, 3]));
        assert!(sumq.residual < 1e-14);
        assert!(reports.iter().any(|r| r.relation == "Relation2" && r.skipped.is_some()));
        assert!(reports.iter().any(|r| r.relation == "Commsum" && r.skipped.is_some()));
    }

    #[test]
    fn relation2_instance_n4() {
        let sp = space(&[2.0, 3.0, 5.0, 7.0], 2);
        let reports = verify_relation_suite(&sp, 1e-9);
        let inst = reports
            .iter()
            .find(|r| r.relation == "Relation2" && r.indices == singletons(&[1, 2, 3, 4]))
            .unwrap();
        assert!(inst.passed && inst.residual < 1e-12);
    }

    #[test]
    fn suite_detects_wrong_coefficients() {
        // The Dolan-Grady coefficient is specific: (a_i + a_j)^2 with another
        // exponent fails, so the residual measure is discriminating.
        let sp = space(&[2.0, 3.0, 5.0], 2);
        let mut cache = CasimirCache::new(&sp);
        let q12 = cache.q(&[1, 2]);
        let c = dense_commutator(&q12, &cache.q(&[2, 3]));
        let lhs = dense_commutator(&q12, &dense_commutator(&q12, &c));
        assert!(relative_residual(&lhs, &(&c * 25.0)) < 1e-12);
        assert!(relative_residual(&lhs, &(&c * 24.0)) > 1e-3);
    }

    #[test]
    fn lambda_unit_charges() {
        let lam = lambda(1.0, 1.0, 1.0).unwrap();
        assert!((lam - 1.0 / (4.0 * 3f64.sqrt())).abs() < 1e-15);
        assert!(lambda(1.0, 0.0, 1.0).is_none());
    }

    #[test]
    fn triple_eigen_relation_and_cartan_formula() {
        let sp = space(&[2.0, 3.0, 5.0], 3);
        let tree = CouplingTree::parse("((1,2),3)", 3).unwrap();
        let node = ModeSet::from_modes(&[1, 2]);
        let t = sl_generators(&sp, &tree, node).unwrap();
        assert!(t.sl2_residual() < 1e-12);
        assert!(t.cartan_residual < 1e-12);
        let q12 = sp.casimir_dense(node).unwrap();
        let [e, f, _] = t.dense();
        assert!(relative_residual(&dense_commutator(&q12, &e), &(&e * 5.0)) < 1e-12);
        assert!(relative_residual(&dense_commutator(&q12, &f), &(&f * -5.0)) < 1e-12);
        assert!(sl_generators(&sp, &tree, ModeSet::full(3)).is_err());
        assert!(sl_generators(&sp, &tree, ModeSet::singleton(1)).is_err());
    }

    #[test]
    fn twist_negates_e_and_f() {
        let sp = space(&[2.0, 3.0, 5.0], 3);
        let node = ModeSet::from_modes(&[1, 2]);
        let t = sl_generators(&sp, &CouplingTree::parse("((1,2),3)", 3).unwrap(), node).unwrap();
        let u = sl_generators(&sp, &CouplingTree::parse("((2,1),3)", 3).unwrap(), node).unwrap();
        let [e, f, h] = t.dense();
        let [e2, f2, h2] = u.dense();
        assert!(relative_residual(&e2, &-e) < 1e-13);
        assert!(relative_residual(&f2, &-f) < 1e-13);
        assert!(relative_residual(&h2, &h) < 1e-13);
    }

    #[test]
    fn serre_n4() {
        let sp = space(&[2.0, 3.0, 5.0, 7.0], 3);
        let triples = chain_triples(&sp).unwrap();
        let reports = verify_serre(&triples, 1e-8);
        assert!(reports.iter().all(|r| r.passed));
        for id in ["Sl2", "S1", "S2", "S3", "S+", "S-"] {
            assert!(reports.iter().any(|r| r.relation == id));
        }
    }

    #[test]
    fn serre_detects_a_wrong_cartan_entry() {
        let sp = space(&[2.0, 3.0, 5.0, 7.0], 3);
        let triples = chain_triples(&sp).unwrap();
        let [_, _, h1] = triples[0].dense();
        let [e2, _, _] = triples[1].dense();
        // The correct weight is -1; +1 must not pass.
        assert!(relative_residual(&dense_commutator(&h1, &e2), &e2) > 1e-3);
        assert!(relative_residual(&dense_commutator(&h1, &e2), &-e2) < 1e-12);
    }

    #[test]
    fn casimir_on_n3_sectors() {
        // Oracle: S is diagonal on each collective-mode sector with value
        // -(L - m); check C's spectrum against that by dense diagonalization.
        let sp = space(&[2.0, 3.0, 5.0], 2);
        let c = sl2_casimir(&sp, ModeSet::singleton(1), ModeSet::singleton(2), ModeSet::singleton(3))
            .unwrap()
            .to_dense();
        let mut ev: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // sector dims 3, 2, 1 give N = 2, 1, 0: values 4, 1.5, 0
        let expected = [0.0, 1.5, 1.5, 4.0, 4.0, 4.0];
        for (x, y) in ev.iter().zip(expected) {
            assert!((x - y).abs() < 1e-10, "{ev:?}");
        }
        assert!(sl2_casimir(&sp, ModeSet::singleton(1), ModeSet::singleton(1), ModeSet::singleton(3)).is_err());
    }

    #[test]
    fn rank_family() {
        let r = generator_rank(&[2.0, 3.0, 5.0, 7.0], 3).unwrap();
        assert_eq!(r.family_size, 14);
        assert_eq!(r.rank, 13);
        assert_eq!(r.expected_rank, 13);
        assert!(r.gap > 1e6);
        assert_eq!(r.single_realization_rank, 10);
    }
}
