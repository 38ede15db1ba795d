//! Planar rotations attached to swaps, their products along recoupling paths,
//! and the numeric conjugation between two embedded copies of sl(n-1).

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{dense_commutator, sl_generators, SlTriple};
use crate::error::{Error, Result};
use crate::fock::{FockSpace, ModeParams, ModeSet};
use crate::spectra::{serialize_rows, Sector};
use crate::trees::{chain_reversal_path, CouplingTree, Swap};

/// `theta = arccos sqrt(a_K a_M / (a_KL a_LM))`, in `(0, pi/2)`.
pub fn planar_angle(a_k: f64, a_l: f64, a_m: f64) -> Result<f64> {
    if !(a_k > 0.0 && a_l > 0.0 && a_m > 0.0) {
        return Err(Error::InvalidParams(format!("a-values ({a_k}, {a_l}, {a_m}) must be positive")));
    }
    Ok((a_k * a_m / ((a_k + a_l) * (a_l + a_m))).sqrt().acos())
}

/// Angle of the swap triple `(K, L, M)` under `params`.
pub fn swap_angle(params: &ModeParams, k: ModeSet, l: ModeSet, m: ModeSet) -> Result<f64> {
    planar_angle(params.a_of(k), params.a_of(l), params.a_of(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Offset {
    Zero,
    MinusHalfPi,
    PlusHalfPi,
}

impl Offset {
    pub fn radians(self) -> f64 {
        match self {
            Offset::Zero => 0.0,
            Offset::MinusHalfPi => -FRAC_PI_2,
            Offset::PlusHalfPi => FRAC_PI_2,
        }
    }
}

/// A rotation by `angle + offset` in the plane of axes `plane = (i, j)`, `i < j` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationStep {
    pub plane: (usize, usize),
    pub angle: f64,
    pub offset: Offset,
    pub triple: (ModeSet, ModeSet, ModeSet),
}

impl RotationStep {
    pub fn total_angle(&self) -> f64 {
        self.angle + self.offset.radians()
    }
}

/// One factor of a path rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RotationFactor {
    Planar(RotationStep),
    /// `diag(1, .., -1, .., 1)` with `-1` on the given axis (a twist).
    Reflection { axis: usize },
}

/// A real orthogonal matrix acting on the fundamental representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationMatrix {
    #[serde(serialize_with = "serialize_rows")]
    pub m: DMatrix<f64>,
}

impl RotationMatrix {
    pub fn identity(dim: usize) -> Self {
        RotationMatrix { m: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn det(&self) -> f64 {
        self.m.clone().determinant()
    }

    /// `||U^T U - I||_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.m.transpose() * &self.m - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    pub fn then(&self, other: &RotationMatrix) -> RotationMatrix {
        RotationMatrix { m: &self.m * &other.m }
    }

    /// `min(||U - V||_max, ||U + V||_max)`.
    pub fn distance_up_to_sign(&self, other: &RotationMatrix) -> f64 {
        (&self.m - &other.m).amax().min((&self.m + &other.m).amax())
    }
}

/// Identity except for the 2x2 rotation block in `step.plane`.
pub fn embed_planar(step: &RotationStep, dim: usize) -> Result<RotationMatrix> {
    let (i, j) = step.plane;
    if i == 0 || i >= j || j > dim {
        return Err(Error::InvalidParams(format!("plane ({i}, {j}) not valid in dimension {dim}")));
    }
    let (s, c) = step.total_angle().sin_cos();
    let mut m = DMatrix::identity(dim, dim);
    m[(i - 1, i - 1)] = c;
    m[(j - 1, j - 1)] = c;
    m[(i - 1, j - 1)] = -s;
    m[(j - 1, i - 1)] = s;
    Ok(RotationMatrix { m })
}

fn factor_matrix(f: &RotationFactor, dim: usize) -> Result<RotationMatrix> {
    match f {
        RotationFactor::Planar(step) => embed_planar(step, dim),
        RotationFactor::Reflection { axis } => {
            if *axis == 0 || *axis > dim {
                return Err(Error::InvalidParams(format!("axis {axis} not valid in dimension {dim}")));
            }
            let mut m = DMatrix::identity(dim, dim);
            m[(axis - 1, axis - 1)] = -1.0;
            Ok(RotationMatrix { m })
        }
    }
}

fn labelling(sets: &[&[usize]]) -> std::collections::BTreeSet<ModeSet> {
    sets.iter().map(|m| ModeSet::from_modes(m)).collect()
}

/// Plane and angle bookkeeping for the documented swap patterns:
/// the steps of the chain-reversal path (any `n`), and for `n = 4` the swaps
/// `{12,123} <-> {12,34}`, `{12,123} -> {13,123}` and `{13,123} -> {13,24}`.
pub fn rotation_factors(params: &ModeParams, swap: &Swap) -> Result<Vec<RotationFactor>> {
    let n = params.n();
    let from = swap.from.labelling_algebra();
    let to = swap.to.labelling_algebra();
    let triple = (swap.k, swap.l, swap.m);
    let theta = swap_angle(params, swap.k, swap.l, swap.m)?;
    let planar = |plane, angle, offset| RotationFactor::Planar(RotationStep { plane, angle, offset, triple });

    if n >= 3 {
        let (_, path) = chain_reversal_path(n);
        let mut idx = 0;
        for k in 2..n {
            for l in 1..k {
                let s = &path[idx];
                if s.from.labelling_algebra() == from && s.to.labelling_algebra() == to {
                    return Ok(vec![planar((k - l, k + 1 - l), theta, Offset::Zero)]);
                }
                idx += 1;
            }
        }
    }
    if n == 4 {
        let chain = labelling(&[&[1, 2], &[1, 2, 3]]);
        let balanced = labelling(&[&[1, 2], &[3, 4]]);
        let crossed = labelling(&[&[1, 3], &[1, 2, 3]]);
        let crossed_balanced = labelling(&[&[1, 3], &[2, 4]]);
        if from == chain && to == balanced {
            return Ok(vec![planar((2, 3), theta, Offset::MinusHalfPi)]);
        }
        if from == balanced && to == chain {
            return Ok(vec![planar((2, 3), -theta, Offset::PlusHalfPi)]);
        }
        if from == chain && to == crossed {
            return Ok(vec![planar((1, 2), -theta, Offset::Zero), RotationFactor::Reflection { axis: 2 }]);
        }
        if from == crossed && to == crossed_balanced {
            return Ok(vec![planar((2, 3), theta, Offset::MinusHalfPi)]);
        }
    }
    Err(Error::UndocumentedPattern(format!("{} -> {}", swap.from, swap.to)))
}

/// Ordered product of the step rotations along a path, normalised to
/// determinant `+1` by the global sign when the dimension is odd.
pub fn compose_rotations(params: &ModeParams, start: &CouplingTree, path: &[Swap]) -> Result<RotationMatrix> {
    let dim = params.n() - 1;
    let mut acc = RotationMatrix::identity(dim);
    let mut cur = start.clone();
    for sw in path {
        if !cur.same_labelling(&sw.from) {
            return Err(Error::LabelMismatch(format!("path is at {cur} but the next swap starts at {}", sw.from)));
        }
        for f in rotation_factors(params, sw)? {
            acc = acc.then(&factor_matrix(&f, dim)?);
        }
        cur = sw.to.clone();
    }
    if acc.det() < 0.0 && dim % 2 == 1 {
        acc.m.neg_mut();
    }
    Ok(acc)
}

/// Simple-root triples of a tree ordered and signed to form a Chevalley system
/// (`n = 3`: one triple; `n = 4`: two, with Cartan entry -1 between them).
///
/// A nested pair uses (child, parent). A disjoint pair uses the node holding
/// leaf 1 first and replaces the other by `(-f, -e, -h)`, since siblings have
/// `[h_B, e_A] = +e_A`.
pub fn chevalley_system(space: &FockSpace, tree: &CouplingTree) -> Result<Vec<SlTriple>> {
    let nodes: Vec<ModeSet> = tree.labelling_algebra().into_iter().collect();
    match tree.n() {
        3 => Ok(vec![sl_generators(space, tree, nodes[0])?]),
        4 => {
            let (x, y) = (nodes[0], nodes[1]);
            if x.is_subset(y) {
                Ok(vec![sl_generators(space, tree, x)?, sl_generators(space, tree, y)?])
            } else {
                let (first, second) = if x.contains(1) { (x, y) } else { (y, x) };
                Ok(vec![
                    sl_generators(space, tree, first)?,
                    sl_generators(space, tree, second)?.flipped(),
                ])
            }
        }
        n => Err(Error::OutOfGuard(n, "3..=4".into())),
    }
}

/// Operators of the sl2 / sl3 basis and their fundamental-representation
/// matrices: sl2 `[[h/2, f], [e, -h/2]]`; sl3 with `e12 = e_1`, `e21 = f_1`,
/// `e23 = e_2`, `e32 = f_2`, `e13 = [e12, e23]`, `e31 = [e32, e21]` placed at
/// `(2,1), (1,2), (3,2), (2,3), (3,1), (1,3)` and `h_1, h_2` on the diagonal.
/// Restricted operators paired with their fundamental-representation matrices.
type GeneratorBasis = (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>);

fn generator_basis(triples: &[SlTriple], sector: &Sector) -> Result<GeneratorBasis> {
    let unit = |k: usize, i: usize, j: usize| {
        let mut m = DMatrix::zeros(k, k);
        m[(i, j)] = 1.0;
        m
    };
    match triples {
        [t] => {
            let [e, f, h] = t.dense();
            let ops = vec![sector.restrict(&h), sector.restrict(&e), sector.restrict(&f)];
            let fund = vec![DMatrix::from_diagonal(&nalgebra::dvector![0.5, -0.5]), unit(2, 1, 0), unit(2, 0, 1)];
            Ok((ops, fund))
        }
        [t1, t2] => {
            let [e12, e21, h1] = t1.dense();
            let [e23, e32, h2] = t2.dense();
            let e13 = dense_commutator(&e12, &e23);
            let e31 = dense_commutator(&e32, &e21);
            let ops = [h1, h2, e12, e21, e23, e32, e13, e31].iter().map(|x| sector.restrict(x)).collect();
            let fund = vec![
                DMatrix::from_diagonal(&nalgebra::dvector![2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]),
                DMatrix::from_diagonal(&nalgebra::dvector![1.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0]),
                unit(3, 1, 0),
                unit(3, 0, 1),
                unit(3, 2, 1),
                unit(3, 1, 2),
                unit(3, 2, 0),
                unit(3, 0, 2),
            ];
            Ok((ops, fund))
        }
        _ => Err(Error::InvalidParams(format!("{} simple roots; only 1 or 2 are supported", triples.len()))),
    }
}

/// Result of the numeric conjugation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conjugation {
    /// `U` with `M~ = U^{-1} M U`.
    pub u: RotationMatrix,
    /// `||U M~ U^{-1} - M|| / (1 + ||M|| + ||M~||)` on the operator-valued matrices.
    pub residual: f64,
    /// Worst least-squares residual of the tilde generators in the original basis.
    pub expansion_residual: f64,
    /// Smallest over largest singular value of the linear system for `U`.
    pub null_ratio: f64,
}

/// Finds `U` relating the operator-valued fundamental matrices `M` (built from
/// `triples`) and `M~` (from `triples_tilde`) on a sector.
pub fn solve_conjugation(triples: &[SlTriple], triples_tilde: &[SlTriple], sector: &Sector) -> Result<Conjugation> {
    if triples.len() != triples_tilde.len() {
        return Err(Error::InvalidParams("generator families of different rank".into()));
    }
    let (ops, fund) = generator_basis(triples, sector)?;
    let (tilde_ops, _) = generator_basis(triples_tilde, sector)?;
    let g = ops.len();
    let k = fund[0].nrows();
    let d = sector.dim().max(1) as f64;

    // Least-squares expansion X~_b = sum_c A[b][c] X_c under <X, Y> = tr(X^T Y) / d.
    let gram = DMatrix::from_fn(g, g, |b, c| ops[b].dot(&ops[c]) / d);
    let gram_lu = gram.clone().lu();
    let mut coeffs = DMatrix::zeros(g, g);
    let mut expansion_residual = 0.0f64;
    for (b, y) in tilde_ops.iter().enumerate() {
        let rhs = nalgebra::DVector::from_fn(g, |c, _| ops[c].dot(y) / d);
        let sol = gram_lu.solve(&rhs).ok_or(Error::ExpansionResidual(f64::INFINITY))?;
        let mut approx = DMatrix::zeros(y.nrows(), y.ncols());
        for c in 0..g {
            approx += &ops[c] * sol[c];
            coeffs[(b, c)] = sol[c];
        }
        expansion_residual = expansion_residual.max((y - approx).norm() / (1.0 + y.norm()));
    }
    if expansion_residual > 1e-8 {
        return Err(Error::ExpansionResidual(expansion_residual));
    }

    // M~ = sum_c X_c (x) F_c with F_c = sum_b A[b][c] E_b; solve U F_c - E_c U = 0.
    let tilde_fund: Vec<DMatrix<f64>> = (0..g)
        .map(|c| (0..g).fold(DMatrix::zeros(k, k), |acc, b| acc + &fund[b] * coeffs[(b, c)]))
        .collect();
    let id = DMatrix::<f64>::identity(k, k);
    let mut system = DMatrix::zeros(g * k * k, k * k);
    for c in 0..g {
        let block = tilde_fund[c].transpose().kronecker(&id) - id.kronecker(&fund[c]);
        system.view_mut((c * k * k, 0), (k * k, k * k)).copy_from(&block);
    }
    let svd = system.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::NoConjugation(f64::NAN))?;
    let sv = &svd.singular_values;
    let (imin, smin) = sv.iter().copied().enumerate().fold((0, f64::INFINITY), |m, (i, s)| if s < m.1 { (i, s) } else { m });
    let smax = sv.iter().copied().fold(0.0f64, f64::max);
    let null_ratio = smin / smax;
    if null_ratio > 1e-8 {
        return Err(Error::NoConjugation(null_ratio));
    }
    let mut u = DMatrix::from_fn(k, k, |i, j| v_t[(imin, i + j * k)]);

    let det = u.clone().determinant();
    if det == 0.0 {
        return Err(Error::NoConjugation(null_ratio));
    }
    u /= det.abs().powf(1.0 / k as f64);
    if k % 2 == 1 {
        if det < 0.0 {
            u.neg_mut();
        }
    } else {
        let col = u.column(0);
        let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let pick = col.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap();
        if col[pick] < 0.0 {
            u.neg_mut();
        }
    }

    // Operator identity: (U (x) I) M~ (U^{-1} (x) I) = M, with blocks (i, j) = sum_c E_c[i,j] X_c.
    let dim = ops[0].nrows();
    let assemble = |mats: &[DMatrix<f64>]| {
        let mut big = DMatrix::zeros(k * dim, k * dim);
        for (c, x) in mats.iter().enumerate() {
            big += fund[c].kronecker(x);
        }
        big
    };
    let big = assemble(&ops);
    let big_tilde = assemble(&tilde_ops);
    let u_inv = u.clone().try_inverse().ok_or(Error::NoConjugation(null_ratio))?;
    let id_d = DMatrix::<f64>::identity(dim, dim);
    let conj = u.kronecker(&id_d) * &big_tilde * u_inv.kronecker(&id_d);
    let residual = (&conj - &big).norm() / (1.0 + big.norm() + big_tilde.norm());

    Ok(Conjugation { u: RotationMatrix { m: u }, residual, expansion_residual, null_ratio })
}

/// Conjugation between the Chevalley systems of two trees on one sector.
pub fn conjugation_between(space: &FockSpace, sector: &Sector, t1: &CouplingTree, t2: &CouplingTree) -> Result<Conjugation> {
    let a = chevalley_system(space, t1)?;
    let b = chevalley_system(space, t2)?;
    solve_conjugation(&a, &b, sector)
}
