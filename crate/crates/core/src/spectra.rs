//! Sectors of `V_L`, labelled joint eigenbases of labelling algebras and the
//! overlap matrices between them.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{dense_commutator, relative_residual};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, ModeSet};
use crate::trees::CouplingTree;

/// Relative width of an eigenvalue cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

/// An eigenspace of `Q_[n]` inside `V_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    /// Position in the decomposition (decreasing `Q_[n]` eigenvalue).
    pub index: usize,
    /// Orthonormal columns in `V_L` coordinates.
    pub frame: DMatrix<f64>,
    pub q_total: f64,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    /// `F^T X F`.
    pub fn restrict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.frame.transpose() * x * &self.frame
    }

    fn same_as(&self, other: &Sector) -> bool {
        self.index == other.index && self.dim() == other.dim() && self.q_total == other.q_total
    }
}

/// Groups sorted values into clusters of width `tol`; returns `(mean, members)`.
fn cluster_sorted(values: &[(f64, usize)], tol: f64) -> Vec<(f64, Vec<usize>)> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut last = f64::NAN;
    for &(v, i) in values {
        match out.last_mut() {
            Some((_, members)) if (v - last).abs() <= tol => members.push(i),
            _ => out.push((v, vec![i])),
        }
        last = v;
    }
    for (mean, members) in &mut out {
        *mean = members.iter().map(|&i| values.iter().find(|x| x.1 == i).unwrap().0).sum::<f64>()
            / members.len() as f64;
    }
    out
}

/// Symmetric eigen-decomposition with eigenpairs sorted ascending.
fn sorted_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("non-finite matrix entries".into()));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigenspaces of `Q_[n]`, ordered by decreasing eigenvalue, so sector `j`
/// carries `j` quanta of the collective mode.
pub fn sector_decompose(space: &FockSpace) -> Result<Vec<Sector>> {
    let q = space.casimir_dense(space.params().full_set())?;
    let (values, vectors) = sorted_eigen(&q)?;
    let radius = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut indexed: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
    indexed.reverse();
    let clusters = cluster_sorted(&indexed, CLUSTER_TOL * (1.0 + radius));
    Ok(clusters
        .into_iter()
        .enumerate()
        .map(|(index, (q_total, members))| {
            let frame = DMatrix::from_fn(space.dim(), members.len(), |r, c| vectors[(r, members[c])]);
            Sector { index, frame, q_total }
        })
        .collect())
}

/// Flips `v` so its largest-magnitude entry (lowest index among near-ties) is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pick = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap();
    if v[pick] < 0.0 {
        v.neg_mut();
    }
}

/// A joint eigenbasis of a labelling algebra on one sector.
#[derive(Debug, Clone)]
pub struct LabelledBasis {
    pub sector: Sector,
    pub tree: CouplingTree,
    /// Labelling sets in `ModeSet` order; label tuples follow this order.
    pub nodes: Vec<ModeSet>,
    /// Orthonormal columns in `V_L` coordinates, sorted by label tuple.
    pub vectors: DMatrix<f64>,
    /// `eigenvalues[v][a]`: eigenvalue of `Q_{nodes[a]}` on vector `v`.
    pub eigenvalues: Vec<Vec<f64>>,
    /// `labels[v][a]`: rank of that eigenvalue in the sorted spectrum of `Q_{nodes[a]}`.
    pub labels: Vec<Vec<usize>>,
}

impl LabelledBasis {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn node_position(&self, set: ModeSet) -> Option<usize> {
        self.nodes.iter().position(|&s| s == set)
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    pub fn position_of_labels(&self, labels: &[usize]) -> Option<usize> {
        self.labels.iter().position(|l| l == labels)
    }

    /// Labels `vectors` (joint eigenvectors of the tree's labelling algebra):
    /// applies the sign convention, reads eigenvalues as Rayleigh quotients,
    /// ranks them per node, checks ladder spacing and simplicity, and sorts.
    pub fn from_vectors(space: &FockSpace, sector: &Sector, tree: &CouplingTree, vectors: DMatrix<f64>) -> Result<Self> {
        let nodes: Vec<ModeSet> = tree.labelling_algebra().into_iter().collect();
        let d = vectors.ncols();
        let mut cols: Vec<DVector<f64>> = (0..d).map(|i| vectors.column(i).into_owned()).collect();
        for c in &mut cols {
            fix_sign(c);
        }
        let mut eigenvalues = vec![vec![0.0; nodes.len()]; d];
        let mut labels = vec![vec![0usize; nodes.len()]; d];
        for (a, &node) in nodes.iter().enumerate() {
            let q = space.casimir_dense(node)?;
            let radius = sector_radius(sector, &q);
            let tol = CLUSTER_TOL * (1.0 + radius);
            let mut vals = Vec::with_capacity(d);
            for (i, c) in cols.iter().enumerate() {
                let qc = &q * c;
                let lam = c.dot(&qc);
                if (qc - c * lam).norm() > 1e3 * tol {
                    return Err(Error::LabelMismatch(format!("vector {i} is not an eigenvector of Q_{node}")));
                }
                eigenvalues[i][a] = lam;
                vals.push((lam, i));
            }
            vals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let clusters = cluster_sorted(&vals, tol);
            let step = space.params().a_of(node);
            for w in clusters.windows(2) {
                if ((w[1].0 - w[0].0) - step).abs() > 1e2 * tol {
                    return Err(Error::LadderSpacing { node: node.to_string(), step });
                }
            }
            for (rank, (_, members)) in clusters.iter().enumerate() {
                for &i in members {
                    labels[i][a] = rank;
                }
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&x, &y| labels[x].cmp(&labels[y]));
        for w in order.windows(2) {
            if labels[w[0]] == labels[w[1]] {
                return Err(Error::DegenerateSpectrum(format!("label tuple {:?} repeats", labels[w[0]])));
            }
        }
        let sorted = DMatrix::from_fn(vectors.nrows(), d, |r, c| cols[order[c]][r]);
        Ok(LabelledBasis {
            sector: sector.clone(),
            tree: tree.clone(),
            nodes,
            vectors: sorted,
            eigenvalues: order.iter().map(|&i| eigenvalues[i].clone()).collect(),
            labels: order.iter().map(|&i| labels[i].clone()).collect(),
        })
    }
}

fn sector_radius(sector: &Sector, q: &DMatrix<f64>) -> f64 {
    sector.restrict(q).iter().fold(0.0f64, |m, x| m.max(x.abs())) * sector.dim().max(1) as f64
}

/// Joint eigenbasis by sequential refinement: diagonalize the first restricted
/// `Q_A`, then each following one inside the eigenspaces found so far.
pub fn joint_eigenbasis(space: &FockSpace, sector: &Sector, tree: &CouplingTree) -> Result<LabelledBasis> {
    if tree.n() != space.n() {
        return Err(Error::InvalidTree(format!("tree has {} leaves, space has {} modes", tree.n(), space.n())));
    }
    let nodes: Vec<ModeSet> = tree.labelling_algebra().into_iter().collect();
    let restricted: Vec<DMatrix<f64>> = nodes
        .iter()
        .map(|&s| Ok(sector.restrict(&space.casimir_dense(s)?)))
        .collect::<Result<_>>()?;
    for (i, x) in restricted.iter().enumerate() {
        for y in &restricted[i + 1..] {
            let r = relative_residual(&dense_commutator(x, y), &DMatrix::zeros(x.nrows(), x.ncols()));
            if r > 1e-9 {
                return Err(Error::NonCommuting(r));
            }
        }
    }
    let d = sector.dim();
    let mut clusters: Vec<DMatrix<f64>> = vec![DMatrix::identity(d, d)];
    for r in &restricted {
        let radius = r.iter().fold(0.0f64, |m, x| m.max(x.abs())) * d as f64;
        let tol = CLUSTER_TOL * (1.0 + radius);
        let mut next = Vec::new();
        for y in &clusters {
            let m = y.transpose() * r * y;
            let (vals, vecs) = sorted_eigen(&m)?;
            let indexed: Vec<(f64, usize)> = vals.iter().copied().zip(0..).collect();
            for (_, members) in cluster_sorted(&indexed, tol) {
                let z = DMatrix::from_fn(vecs.nrows(), members.len(), |row, c| vecs[(row, members[c])]);
                next.push(y * z);
            }
        }
        clusters = next;
    }
    if let Some(c) = clusters.iter().find(|c| c.ncols() > 1) {
        return Err(Error::DegenerateSpectrum(format!("a joint eigenspace of dimension {} remains", c.ncols())));
    }
    let mut y = DMatrix::zeros(d, clusters.len());
    for (i, c) in clusters.iter().enumerate() {
        y.set_column(i, &c.column(0));
    }
    LabelledBasis::from_vectors(space, sector, tree, &sector.frame * y)
}

/// `B[s][k] = <phi_s, psi_k>` with `psi` from the first basis (columns) and
/// `phi` from the second (rows).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapMatrix {
    pub row_nodes: Vec<ModeSet>,
    pub col_nodes: Vec<ModeSet>,
    pub row_labels: Vec<Vec<usize>>,
    pub col_labels: Vec<Vec<usize>>,
    pub row_eigenvalues: Vec<Vec<f64>>,
    pub col_eigenvalues: Vec<Vec<f64>>,
    #[serde(serialize_with = "serialize_rows")]
    pub b: DMatrix<f64>,
}

pub(crate) fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
    rows.serialize(s)
}

impl OverlapMatrix {
    pub fn identity_like(basis: &LabelledBasis) -> Self {
        overlap_matrix(basis, basis).expect("same sector")
    }

    /// `||B B^T - I||_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = &self.b * self.b.transpose();
        let id = DMatrix::<f64>::identity(p.nrows(), p.ncols());
        (p - id).amax()
    }

    /// `self` after `first`: rows of `self`, columns of `first`.
    pub fn after(&self, first: &OverlapMatrix) -> Result<OverlapMatrix> {
        if self.col_labels != first.row_labels || self.col_nodes != first.row_nodes {
            return Err(Error::LabelMismatch("intermediate bases do not line up".into()));
        }
        Ok(OverlapMatrix {
            row_nodes: self.row_nodes.clone(),
            col_nodes: first.col_nodes.clone(),
            row_labels: self.row_labels.clone(),
            col_labels: first.col_labels.clone(),
            row_eigenvalues: self.row_eigenvalues.clone(),
            col_eigenvalues: first.col_eigenvalues.clone(),
            b: &self.b * &first.b,
        })
    }

    /// Largest entrywise difference, or infinity if the label maps differ.
    pub fn max_difference(&self, other: &OverlapMatrix) -> f64 {
        if self.row_labels != other.row_labels || self.col_labels != other.col_labels {
            return f64::INFINITY;
        }
        (&self.b - &other.b).amax()
    }
}

pub fn overlap_matrix(b1: &LabelledBasis, b2: &LabelledBasis) -> Result<OverlapMatrix> {
    if !b1.sector.same_as(&b2.sector) {
        return Err(Error::SectorMismatch);
    }
    Ok(OverlapMatrix {
        row_nodes: b2.nodes.clone(),
        col_nodes: b1.nodes.clone(),
        row_labels: b2.labels.clone(),
        col_labels: b1.labels.clone(),
        row_eigenvalues: b2.eigenvalues.clone(),
        col_eigenvalues: b1.eigenvalues.clone(),
        b: b2.vectors.transpose() * &b1.vectors,
    })
}

/// The vectors of two single-swap bases sharing all labels except `G1 -> G2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapBlock {
    /// Labels of the shared nodes, in the first basis' node order.
    pub shared: Vec<usize>,
    /// Indices into the first basis, ascending in the `G1` label.
    pub psi: Vec<usize>,
    /// Indices into the second basis, ascending in the `G2` label.
    pub phi: Vec<usize>,
}

/// Partitions two bases related by one swap into blocks of equal shared labels.
pub fn swap_blocks(b1: &LabelledBasis, b2: &LabelledBasis) -> Result<(ModeSet, ModeSet, Vec<SwapBlock>)> {
    if !b1.sector.same_as(&b2.sector) {
        return Err(Error::SectorMismatch);
    }
    let only1: Vec<ModeSet> = b1.nodes.iter().copied().filter(|s| !b2.nodes.contains(s)).collect();
    let only2: Vec<ModeSet> = b2.nodes.iter().copied().filter(|s| !b1.nodes.contains(s)).collect();
    if only1.len() != 1 || only2.len() != 1 {
        return Err(Error::NotASwap(b1.tree.to_string(), b2.tree.to_string()));
    }
    let (g1, g2) = (only1[0], only2[0]);
    let shared: Vec<ModeSet> = b1.nodes.iter().copied().filter(|&s| s != g1).collect();
    let p1: Vec<usize> = shared.iter().map(|&s| b1.node_position(s).unwrap()).collect();
    let p2: Vec<usize> = shared.iter().map(|&s| b2.node_position(s).unwrap()).collect();
    let (q1, q2) = (b1.node_position(g1).unwrap(), b2.node_position(g2).unwrap());
    let mut groups: BTreeMap<Vec<usize>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, l) in b1.labels.iter().enumerate() {
        groups.entry(p1.iter().map(|&p| l[p]).collect()).or_default().0.push(i);
    }
    for (i, l) in b2.labels.iter().enumerate() {
        groups.entry(p2.iter().map(|&p| l[p]).collect()).or_default().1.push(i);
    }
    let mut blocks = Vec::new();
    for (key, (mut psi, mut phi)) in groups {
        if psi.len() != phi.len() {
            return Err(Error::LabelMismatch(format!(
                "shared labels {key:?}: {} vectors before the swap, {} after",
                psi.len(),
                phi.len()
            )));
        }
        psi.sort_by_key(|&i| b1.labels[i][q1]);
        phi.sort_by_key(|&i| b2.labels[i][q2]);
        blocks.push(SwapBlock { shared: key, psi, phi });
    }
    Ok((g1, g2, blocks))
}

/// Largest `|B_{sk}|` over pairs whose shared labels differ.
pub fn off_block_magnitude(overlap: &OverlapMatrix, blocks: &[SwapBlock]) -> f64 {
    let mut block_of_col = vec![usize::MAX; overlap.b.ncols()];
    let mut block_of_row = vec![usize::MAX; overlap.b.nrows()];
    for (bi, blk) in blocks.iter().enumerate() {
        for &k in &blk.psi {
            block_of_col[k] = bi;
        }
        for &s in &blk.phi {
            block_of_row[s] = bi;
        }
    }
    let mut worst = 0.0f64;
    for (s, &row_block) in block_of_row.iter().enumerate() {
        for (k, &col_block) in block_of_col.iter().enumerate() {
            if row_block != col_block {
                worst = worst.max(overlap.b[(s, k)].abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeParams;

    fn space(a: &[f64], level: usize) -> FockSpace {
        FockSpace::new(ModeParams::with_unit_beta(a.to_vec(), level).unwrap())
    }

    #[test]
    fn sectors_n3_l2() {
        let sp = space(&[2.0, 3.0, 5.0], 2);
        let sectors = sector_decompose(&sp).unwrap();
        let dims: Vec<usize> = sectors.iter().map(|s| s.dim()).collect();
        assert_eq!(dims, vec![3, 2, 1]);
        // Q_[3] = a_123 (L + sum beta - m) on sector m.
        for (m, s) in sectors.iter().enumerate() {
            assert!((s.q_total - 10.0 * (5.0 - m as f64)).abs() < 1e-9);
            let gram = s.frame.transpose() * &s.frame;
            assert!((gram - DMatrix::identity(s.dim(), s.dim())).amax() < 1e-12);
        }
    }

    #[test]
    fn sectors_against_dense_spectrum() {
        let sp = space(&[2.0, 3.0, 5.0], 3);
        let q = sp.casimir_dense(ModeSet::full(3)).unwrap();
        let mut ev: Vec<f64> = q.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let sectors = sector_decompose(&sp).unwrap();
        let mut flat = Vec::new();
        for s in &sectors {
            let r = s.restrict(&q);
            assert!((r - DMatrix::identity(s.dim(), s.dim()) * s.q_total).amax() < 1e-9);
            flat.extend(std::iter::repeat_n(s.q_total, s.dim()));
        }
        for (x, y) in ev.iter().zip(&flat) {
            assert!((x - y).abs() < 1e-9);
        }
        assert_eq!(flat.len(), sp.dim());
    }

    #[test]
    fn level_zero_single_sector() {
        let sp = space(&[2.0, 3.0, 5.0], 0);
        let sectors = sector_decompose(&sp).unwrap();
        assert_eq!(sectors.len(), 1);
        assert_eq!(sectors[0].dim(), 1);
        let b = joint_eigenbasis(&sp, &sectors[0], &CouplingTree::chain(3)).unwrap();
        assert_eq!(b.labels, vec![vec![0]]);
    }

    #[test]
    fn q12_ladder_n3() {
        let sp = space(&[2.0, 3.0, 5.0], 3);
        let tree = CouplingTree::chain(3);
        for s in sector_decompose(&sp).unwrap() {
            let b = joint_eigenbasis(&sp, &s, &tree).unwrap();
            let vals: Vec<f64> = b.eigenvalues.iter().map(|e| e[0]).collect();
            for w in vals.windows(2) {
                assert!((w[1] - w[0] - 5.0).abs() < 1e-8);
            }
            let labels: Vec<usize> = b.labels.iter().map(|l| l[0]).collect();
            assert_eq!(labels, (0..s.dim()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn chain_n4_distinct_labels() {
        let sp = space(&[2.0, 3.0, 5.0, 7.0], 3);
        let tree = CouplingTree::chain(4);
        let sectors = sector_decompose(&sp).unwrap();
        let b = joint_eigenbasis(&sp, &sectors[0], &tree).unwrap();
        assert_eq!(b.dim(), 10);
        let mut labels = b.labels.clone();
        labels.dedup();
        assert_eq!(labels.len(), 10);
        for (i, l) in b.labels.iter().enumerate() {
            let v = b.vector(i);
            for (a, &node) in b.nodes.iter().enumerate() {
                let q = sp.casimir_dense(node).unwrap();
                assert!((&q * &v - &v * b.eigenvalues[i][a]).norm() < 1e-9);
            }
            let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let first = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap();
            assert!(v[first] > 0.0);
            assert_eq!(l.len(), 2);
        }
    }

    #[test]
    fn overlap_identity_and_orthogonality() {
        let sp = space(&[2.0, 3.0, 5.0, 7.0], 3);
        let sectors = sector_decompose(&sp).unwrap();
        let b1 = joint_eigenbasis(&sp, &sectors[0], &CouplingTree::chain(4)).unwrap();
        let b2 = joint_eigenbasis(&sp, &sectors[0], &CouplingTree::parse("((1,2),(3,4))", 4).unwrap()).unwrap();
        let id = overlap_matrix(&b1, &b1).unwrap();
        assert!((id.b.clone() - DMatrix::identity(10, 10)).amax() < 1e-12);
        let o = overlap_matrix(&b1, &b2).unwrap();
        assert!(o.orthogonality_defect() < 1e-9);
        let (g1, g2, blocks) = swap_blocks(&b1, &b2).unwrap();
        assert_eq!((g1, g2), (ModeSet::from_modes(&[1, 2, 3]), ModeSet::from_modes(&[3, 4])));
        assert!(off_block_magnitude(&o, &blocks) < 1e-9);
        let other = joint_eigenbasis(&sp, &sectors[1], &CouplingTree::chain(4)).unwrap();
        assert_eq!(overlap_matrix(&b1, &other), Err(Error::SectorMismatch));
    }

    #[test]
    fn sign_convention() {
        let mut v = DVector::from_vec(vec![0.1, -0.7, 0.7]);
        fix_sign(&mut v);
        assert_eq!(v[1], 0.7);
        let mut v = DVector::from_vec(vec![0.2, -0.9]);
        fix_sign(&mut v);
        assert_eq!(v[1], 0.9);
    }
}
