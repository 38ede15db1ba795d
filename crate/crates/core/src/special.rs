//! Terminating hypergeometric series, Krawtchouk polynomials, the closed form
//! of single-swap overlaps and their composition along recoupling paths.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::sl_triple;
use crate::error::{Error, Result};
use crate::fock::{binomial, FockSpace, ModeSet};
use crate::spectra::{joint_eigenbasis, overlap_matrix, serialize_rows, swap_blocks, LabelledBasis, OverlapMatrix, Sector};
use crate::trees::{CouplingTree, Swap};

/// Largest block degree `N` for closed-form evaluation.
pub const MAX_DEGREE: usize = 30;

/// `(a)_k = a (a+1) ... (a+k-1)`.
pub fn pochhammer(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (a + t as f64))
}

/// `sum_{t=0}^{k} (-k)_t (b)_t / (c)_t z^t / t!`.
pub fn hyp2f1_terminating(k: usize, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for t in 1..=k {
        let s = (t - 1) as f64;
        if b + s == 0.0 {
            break;
        }
        if c + s == 0.0 {
            return Err(Error::VanishingPochhammer(t));
        }
        term *= (-(k as f64) + s) * (b + s) / ((c + s) * t as f64) * z;
        sum += term;
    }
    Ok(sum)
}

/// `K_k(x; p, N) = 2F1(-k, -x; -N; 1/p)`.
pub fn krawtchouk(k: usize, x: f64, p: f64, n: usize) -> Result<f64> {
    if k > n {
        return Err(Error::DegreeTooLarge { k, n });
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParams(format!("Krawtchouk parameter p = {p} outside (0, 1)")));
    }
    hyp2f1_terminating(k, -x, -(n as f64), 1.0 / p)
}

/// `C(N, x) p^x (1-p)^(N-x)`.
pub fn binomial_weight(x: usize, p: f64, n: usize) -> f64 {
    binomial(n, x) as f64 * p.powi(x as i32) * (1.0 - p).powi((n - x) as i32)
}

/// `T[k][x] = K_k(x; p, N)` for `k, x = 0..N`, from the three-term recurrence
/// `-x K_k = p(N-k) K_{k+1} - (p(N-k) + k(1-p)) K_k + k(1-p) K_{k-1}`.
/// Loses less precision than the hypergeometric sum when `1/p` is large.
pub fn krawtchouk_table(p: f64, n: usize) -> Result<DMatrix<f64>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParams(format!("Krawtchouk parameter p = {p} outside (0, 1)")));
    }
    if n > MAX_DEGREE {
        return Err(Error::OutOfGuard(n, format!("0..={MAX_DEGREE}")));
    }
    let nf = n as f64;
    let mut t = DMatrix::zeros(n + 1, n + 1);
    for x in 0..=n {
        let xf = x as f64;
        t[(0, x)] = 1.0;
        if n >= 1 {
            t[(1, x)] = 1.0 - xf / (p * nf);
        }
        for k in 1..n {
            let kf = k as f64;
            let up = p * (nf - kf);
            t[(k + 1, x)] = ((up + kf * (1.0 - p) - xf) * t[(k, x)] - kf * (1.0 - p) * t[(k - 1, x)]) / up;
        }
    }
    Ok(t)
}

/// `G[k][m] = sum_x w(x) K_k(x) K_m(x)` over `x = 0..N`.
pub fn krawtchouk_gram(p: f64, n: usize) -> Result<DMatrix<f64>> {
    let vals = krawtchouk_table(p, n)?;
    let w = DMatrix::from_diagonal(&DVector::from_fn(n + 1, |x, _| binomial_weight(x, p, n)));
    Ok(&vals * w * vals.transpose())
}

/// Expansion coefficients of the swapped Cartan element: `h~ = R_h h + R_e e + R_f f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RTriple {
    pub r_h: f64,
    pub r_e: f64,
    pub r_f: f64,
}

impl RTriple {
    /// `R_e R_f + R_h^2 - 1`.
    pub fn unit_circle_defect(&self) -> f64 {
        self.r_e * self.r_f + self.r_h * self.r_h - 1.0
    }

    /// The Krawtchouk parameter `p = (1 - R_h) / 2`.
    pub fn p(&self) -> f64 {
        (1.0 - self.r_h) / 2.0
    }
}

/// `R_h = -(a_K a_L - a_K a_M + a_L^2 + a_L a_M) / (a_KL a_LM)`,
/// `R_e = R_f = 2 sqrt(a_K a_L a_M a_KLM) / (a_KL a_LM)`.
pub fn r_parameters(a_k: f64, a_l: f64, a_m: f64) -> Result<RTriple> {
    if !(a_k > 0.0 && a_l > 0.0 && a_m > 0.0) {
        return Err(Error::InvalidParams(format!("a-values ({a_k}, {a_l}, {a_m}) must be positive")));
    }
    let den = (a_k + a_l) * (a_l + a_m);
    let r_h = -(a_k * a_l - a_k * a_m + a_l * a_l + a_l * a_m) / den;
    let r_e = 2.0 * (a_k * a_l * a_m * (a_k + a_l + a_m)).sqrt() / den;
    Ok(RTriple { r_h, r_e, r_f: r_e })
}

/// Parameters of one univariate family, with the swap they came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KrawtchoukParams {
    pub p: f64,
    pub n: usize,
    pub triple: Option<(ModeSet, ModeSet, ModeSet)>,
    pub r_h: Option<f64>,
}

impl KrawtchoukParams {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParams(format!("p = {p} outside (0, 1)")));
        }
        Ok(KrawtchoukParams { p, n, triple: None, r_h: None })
    }

    pub fn from_swap(r: &RTriple, n: usize, k: ModeSet, l: ModeSet, m: ModeSet) -> Result<Self> {
        let mut out = Self::new(r.p(), n)?;
        out.triple = Some((k, l, m));
        out.r_h = Some(r.r_h);
        Ok(out)
    }
}

/// `B~_k(nu) = (-N)_k (1 - R_h)^k K_k((nu + N)/2; (1 - R_h)/2, N)`.
pub fn recurrence_polynomial(r: &RTriple, k: usize, nu: f64, n: usize) -> Result<f64> {
    let x = (nu + n as f64) / 2.0;
    Ok(pochhammer(-(n as f64), k) * (1.0 - r.r_h).powi(k as i32) * krawtchouk(k, x, r.p(), n)?)
}

/// Largest defect, relative to the term magnitudes, of `nu B~_k = B~_{k+1} + R_h mu_k B~_k + R_e R_f A_k B~_{k-1}`
/// with `mu_k = -N + 2k`, `A_k = -k(k-1) + N k`, over `nu = -N + 2s` and `k < N`.
pub fn recurrence_residual(r: &RTriple, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in 0..=n {
        let nu = -(n as f64) + 2.0 * s as f64;
        for k in 0..n {
            let mu = -(n as f64) + 2.0 * k as f64;
            let a_k = -(k as f64) * (k as f64 - 1.0) + (n * k) as f64;
            let bk = recurrence_polynomial(r, k, nu, n)?;
            let prev = if k == 0 { 0.0 } else { recurrence_polynomial(r, k - 1, nu, n)? };
            let lhs = nu * bk;
            let terms = [recurrence_polynomial(r, k + 1, nu, n)?, r.r_h * mu * bk, r.r_e * r.r_f * a_k * prev];
            let rhs: f64 = terms.iter().sum();
            let scale = 1.0 + lhs.abs() + terms.iter().map(|t| t.abs()).sum::<f64>();
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

/// The closed-form coefficients of `phi_s` over `psi_0..psi_N` (unnormalized):
/// `c_k = (-N)_k (1-R_h)^k K_k((nu+N)/2) / prod_{t=1}^{k} (R_f f_{t,t-1})`,
/// where `f_{t,t-1} = <psi_{t-1}, f psi_t>`.
pub fn closed_form_row(r: &RTriple, nu: f64, f_elements: &[f64]) -> Result<Vec<f64>> {
    let n = f_elements.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut denom = 1.0;
    for k in 0..=n {
        if k > 0 {
            denom *= r.r_f * f_elements[k - 1];
        }
        out.push(recurrence_polynomial(r, k, nu, n)? / denom);
    }
    Ok(out)
}

/// `||v - (v.g / g.g) g|| / ||v||`: zero iff `v` is a multiple of `g`.
pub fn proportionality_spread(v: &[f64], g: &[f64]) -> f64 {
    let vg: f64 = v.iter().zip(g).map(|(a, b)| a * b).sum();
    let gg: f64 = g.iter().map(|b| b * b).sum();
    let vv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if gg == 0.0 || vv == 0.0 {
        return if gg == 0.0 && vv == 0.0 { 0.0 } else { 1.0 };
    }
    let c = vg / gg;
    v.iter().zip(g).map(|(a, b)| (a - c * b).powi(2)).sum::<f64>().sqrt() / vv
}

/// The sl2 data of one swap, restricted to one block of the first basis.
struct BlockData {
    psi: Vec<DVector<f64>>,
    f_elements: Vec<f64>,
    nu: Vec<f64>,
    mu: Vec<f64>,
}

struct SwapOperators {
    f: DMatrix<f64>,
    h: DMatrix<f64>,
    h_tilde: DMatrix<f64>,
    r: RTriple,
}

fn swap_operators(space: &FockSpace, k: ModeSet, l: ModeSet, m: ModeSet) -> Result<SwapOperators> {
    let t = sl_triple(space, k, l, m)?;
    let tilde = sl_triple(space, l, m, k)?;
    let p = space.params();
    Ok(SwapOperators {
        f: t.f.to_dense(),
        h: t.h.to_dense(),
        h_tilde: tilde.h.to_dense(),
        r: r_parameters(p.a_of(k), p.a_of(l), p.a_of(m))?,
    })
}

fn block_data(ops: &SwapOperators, psi: Vec<DVector<f64>>) -> Result<BlockData> {
    let n = psi.len() - 1;
    if n > MAX_DEGREE {
        return Err(Error::DegenerateBlock(format!("block degree {n} exceeds {MAX_DEGREE}")));
    }
    let mut f_elements = Vec::with_capacity(n);
    for t in 1..=n {
        let v = psi[t - 1].dot(&(&ops.f * &psi[t]));
        if v.abs() < 1e-10 {
            return Err(Error::DegenerateBlock(format!("f_({t},{}) vanishes", t - 1)));
        }
        f_elements.push(v);
    }
    let span = DMatrix::from_columns(&psi);
    let ht = span.transpose() * &ops.h_tilde * &span;
    let mut nu: Vec<f64> = ((&ht + ht.transpose()) * 0.5).symmetric_eigen().eigenvalues.iter().copied().collect();
    nu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mu = psi.iter().map(|v| v.dot(&(&ops.h * v))).collect();
    Ok(BlockData { psi, f_elements, nu, mu })
}

/// Numeric vs closed-form coefficients on one block of shared labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockComparison {
    pub shared: Vec<usize>,
    pub degree: usize,
    /// Eigenvalues of `h~` on the block, ascending.
    pub nu: Vec<f64>,
    /// Diagonal of `h` on the block, ascending.
    pub mu: Vec<f64>,
    pub f_elements: Vec<f64>,
    /// `numeric[s][k] = <phi_s, psi_k>`.
    #[serde(serialize_with = "serialize_rows")]
    pub numeric: DMatrix<f64>,
    /// Unnormalized closed form, same layout.
    #[serde(serialize_with = "serialize_rows")]
    pub formula: DMatrix<f64>,
    /// Proportionality spread of each `phi_s` coefficient vector.
    pub spreads: Vec<f64>,
}

/// Closed form vs numeric overlaps for one swap on one sector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedOverlap {
    pub removed: ModeSet,
    pub added: ModeSet,
    pub k: ModeSet,
    pub l: ModeSet,
    pub m: ModeSet,
    pub r: RTriple,
    pub params: KrawtchoukParams,
    pub blocks: Vec<BlockComparison>,
    pub max_spread: f64,
    /// Largest `|nu_s - (-N + 2s)|` and `|mu_k - (-N + 2k)|` over blocks.
    pub ladder_defect: f64,
}

/// Compares each `phi_s` (expanded over the `psi_k` of its block) with the
/// closed form; proportionality is per `phi_s`, so normalisation and sign
/// conventions drop out.
pub fn predicted_overlap(space: &FockSpace, sector: &Sector, t1: &CouplingTree, t2: &CouplingTree) -> Result<PredictedOverlap> {
    let swap = Swap::between(t1, t2)?;
    let b1 = joint_eigenbasis(space, sector, t1)?;
    let b2 = joint_eigenbasis(space, sector, t2)?;
    let (_, _, blocks) = swap_blocks(&b1, &b2)?;
    let ops = swap_operators(space, swap.k, swap.l, swap.m)?;
    let mut out_blocks = Vec::new();
    let mut max_spread = 0.0f64;
    let mut ladder_defect = 0.0f64;
    let mut max_degree = 0;
    for blk in &blocks {
        let psi: Vec<DVector<f64>> = blk.psi.iter().map(|&i| b1.vector(i)).collect();
        let data = block_data(&ops, psi)?;
        let n = data.f_elements.len();
        max_degree = max_degree.max(n);
        let mut numeric = DMatrix::zeros(n + 1, n + 1);
        let mut formula = DMatrix::zeros(n + 1, n + 1);
        let mut spreads = Vec::new();
        for (s, &row) in blk.phi.iter().enumerate() {
            let phi = b2.vector(row);
            let num: Vec<f64> = data.psi.iter().map(|p| phi.dot(p)).collect();
            let form = closed_form_row(&ops.r, data.nu[s], &data.f_elements)?;
            let spread = proportionality_spread(&num, &form);
            max_spread = max_spread.max(spread);
            spreads.push(spread);
            for k in 0..=n {
                numeric[(s, k)] = num[k];
                formula[(s, k)] = form[k];
            }
        }
        for (i, (&nu, &mu)) in data.nu.iter().zip(&data.mu).enumerate() {
            let target = -(n as f64) + 2.0 * i as f64;
            ladder_defect = ladder_defect.max((nu - target).abs()).max((mu - target).abs());
        }
        out_blocks.push(BlockComparison {
            shared: blk.shared.clone(),
            degree: n,
            nu: data.nu,
            mu: data.mu,
            f_elements: data.f_elements,
            numeric,
            formula,
            spreads,
        });
    }
    Ok(PredictedOverlap {
        removed: swap.removed,
        added: swap.added,
        k: swap.k,
        l: swap.l,
        m: swap.m,
        r: ops.r,
        params: KrawtchoukParams::from_swap(&ops.r, max_degree, swap.k, swap.l, swap.m)?,
        blocks: out_blocks,
        max_spread,
        ladder_defect,
    })
}

/// Builds the basis after `swap` from `current` using only the closed form:
/// each block's new vectors are normalised closed-form combinations of the
/// current ones, signs fixed by the usual convention.
pub fn closed_form_step(space: &FockSpace, current: &LabelledBasis, swap: &Swap) -> Result<LabelledBasis> {
    if !current.tree.same_labelling(&swap.from) {
        return Err(Error::LabelMismatch(format!(
            "basis is labelled by {}, swap starts at {}",
            current.tree, swap.from
        )));
    }
    let g1 = current
        .node_position(swap.removed)
        .ok_or_else(|| Error::LabelMismatch(format!("{} is not a label", swap.removed)))?;
    let ops = swap_operators(space, swap.k, swap.l, swap.m)?;
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, l) in current.labels.iter().enumerate() {
        let key: Vec<usize> = l.iter().enumerate().filter(|(a, _)| *a != g1).map(|(_, &x)| x).collect();
        groups.entry(key).or_default().push(i);
    }
    let mut columns = Vec::with_capacity(current.dim());
    for (_, mut members) in groups {
        members.sort_by_key(|&i| current.labels[i][g1]);
        let data = block_data(&ops, members.iter().map(|&i| current.vector(i)).collect())?;
        for &nu in &data.nu {
            let coeffs = closed_form_row(&ops.r, nu, &data.f_elements)?;
            let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            let mut v = DVector::zeros(current.vectors.nrows());
            for (c, p) in coeffs.iter().zip(&data.psi) {
                v += p * (c / norm);
            }
            columns.push(v);
        }
    }
    LabelledBasis::from_vectors(space, &current.sector, &swap.to, DMatrix::from_columns(&columns))
}

/// How per-step overlaps are obtained when composing along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompositionMode {
    /// Overlaps between numerically diagonalized bases.
    Numeric,
    /// Each new basis built from the previous one by the closed form.
    ClosedForm,
}

fn check_path(start: &CouplingTree, path: &[Swap]) -> Result<()> {
    let mut cur = start;
    for (i, sw) in path.iter().enumerate() {
        if !cur.same_labelling(&sw.from) {
            return Err(Error::LabelMismatch(format!("step {i} starts at {} but the path is at {}", sw.from, cur)));
        }
        cur = &sw.to;
    }
    Ok(())
}

/// The bases visited along a path, starting from the numeric basis of `start`.
pub fn path_bases(space: &FockSpace, sector: &Sector, start: &CouplingTree, path: &[Swap], mode: CompositionMode) -> Result<Vec<LabelledBasis>> {
    check_path(start, path)?;
    let mut bases = vec![joint_eigenbasis(space, sector, start)?];
    for sw in path {
        let next = match mode {
            CompositionMode::Numeric => joint_eigenbasis(space, sector, &sw.to)?,
            CompositionMode::ClosedForm => closed_form_step(space, bases.last().unwrap(), sw)?,
        };
        bases.push(next);
    }
    Ok(bases)
}

/// Per-step overlap matrices along a path.
pub fn step_overlaps(bases: &[LabelledBasis]) -> Result<Vec<OverlapMatrix>> {
    bases.windows(2).map(|w| overlap_matrix(&w[0], &w[1])).collect()
}

/// Ordered product of the per-step overlaps (last step leftmost).
pub fn compose_overlaps(space: &FockSpace, sector: &Sector, start: &CouplingTree, path: &[Swap], mode: CompositionMode) -> Result<OverlapMatrix> {
    let bases = path_bases(space, sector, start, path, mode)?;
    let mut acc = overlap_matrix(&bases[0], &bases[0])?;
    for step in step_overlaps(&bases)? {
        acc = step.after(&acc)?;
    }
    Ok(acc)
}

/// Largest number of intermediate label chains contributing to one entry of
/// the composed overlap (entries below `eps` count as zero).
pub fn contributing_chains(steps: &[OverlapMatrix], eps: f64) -> usize {
    let Some(first) = steps.first() else { return 1 };
    let indicator = |m: &DMatrix<f64>| m.map(|x| if x.abs() > eps { 1.0 } else { 0.0 });
    let mut count = indicator(&first.b);
    for s in &steps[1..] {
        count = indicator(&s.b) * count;
    }
    count.max() as usize
}

/// 9j labelling data attached to the `{12,34} -> {13,24}` overlap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NineJMeta {
    /// Column labels `(k_12, k_34)`.
    pub column_nodes: Vec<ModeSet>,
    /// Row labels `(s_13, s_24)`.
    pub row_nodes: Vec<ModeSet>,
    /// `Q_i = a_i beta_i`.
    pub central: Vec<f64>,
    /// `Q_1234` on the sector.
    pub q_total: f64,
    /// `Q_123` is summed over in the triple-sum composition; its spectrum on the sector.
    pub intermediate_node: ModeSet,
    pub intermediate_spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NineJ {
    pub overlap: OverlapMatrix,
    pub meta: NineJMeta,
}

/// Direct overlap between the `((1,2),(3,4))` and `((1,3),(2,4))` bases.
pub fn nine_j(space: &FockSpace, sector: &Sector) -> Result<NineJ> {
    if space.n() != 4 {
        return Err(Error::InvalidParams(format!("9j coefficients need n = 4, got {}", space.n())));
    }
    let t1 = CouplingTree::parse("((1,2),(3,4))", 4)?;
    let t2 = CouplingTree::parse("((1,3),(2,4))", 4)?;
    let b1 = joint_eigenbasis(space, sector, &t1)?;
    let b2 = joint_eigenbasis(space, sector, &t2)?;
    let overlap = overlap_matrix(&b1, &b2)?;
    let p = space.params();
    let node = ModeSet::from_modes(&[1, 2, 3]);
    let q123 = sector.restrict(&space.casimir_dense(node)?);
    let mut spectrum: Vec<f64> = ((&q123 + q123.transpose()) * 0.5).symmetric_eigen().eigenvalues.iter().copied().collect();
    spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = crate::spectra::CLUSTER_TOL * (1.0 + spectrum.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    spectrum.dedup_by(|a, b| (*a - *b).abs() <= tol);
    Ok(NineJ {
        overlap,
        meta: NineJMeta {
            column_nodes: b1.nodes.clone(),
            row_nodes: b2.nodes.clone(),
            central: p.a().iter().zip(p.beta()).map(|(a, b)| a * b).collect(),
            q_total: sector.q_total,
            intermediate_node: node,
            intermediate_spectrum: spectrum,
        },
    })
}
