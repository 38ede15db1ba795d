use racah::algebra::{chain_triples, verify_relation_suite, verify_serre, RelationReport};
use racah::rotations::{compose_rotations, conjugation_between, Conjugation, RotationMatrix};
use racah::special::{compose_overlaps, krawtchouk, nine_j, predicted_overlap, CompositionMode, NineJ, RTriple};
use racah::spectra::{joint_eigenbasis, overlap_matrix, sector_decompose, Sector};
use racah::trees::{chain_reversal_path, enumerate_trees, ninej_path, recoupling_graph, CouplingTree, Swap};
use racah::{Error, FockSpace, ModeSet, OverlapMatrix};
use serde::Serialize;

use crate::config::{Command, ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 1 for failures while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Lib(e) => match e {
                Error::InvalidParams(_)
                | Error::ModeOutOfRange { .. }
                | Error::EmptySet
                | Error::Overlap(_)
                | Error::DimensionMismatch(..)
                | Error::NotInternalNode(_)
                | Error::TreeSyntax { .. }
                | Error::InvalidTree(_)
                | Error::OutOfGuard(..)
                | Error::UnknownVertex(_)
                | Error::NotASwap(..)
                | Error::DegreeTooLarge { .. }
                | Error::UndocumentedPattern(_) => 2,
                _ => 1,
            },
        }
    }
}

/// A check that did not meet the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub id: String,
    pub residual: f64,
}

#[derive(Debug, Serialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub removed: ModeSet,
    pub added: ModeSet,
}

#[derive(Debug, Serialize)]
pub struct GraphReport {
    pub n: usize,
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
    pub connected: bool,
    pub diameter: usize,
    #[serde(skip)]
    pub dot: String,
}

#[derive(Debug, Serialize)]
pub struct BasisEntry {
    pub tree: String,
    pub nodes: Vec<ModeSet>,
    pub labels: Vec<Vec<usize>>,
    pub eigenvalues: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct SectorEntry {
    pub index: usize,
    pub dim: usize,
    pub q_total: f64,
    pub basis: Option<BasisEntry>,
}

#[derive(Debug, Serialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub level: usize,
    pub a: Vec<f64>,
    pub beta: Vec<f64>,
    pub space_dim: usize,
    pub sectors: Vec<SectorEntry>,
}

#[derive(Debug, Serialize)]
pub struct ClosedFormCheck {
    pub k: ModeSet,
    pub l: ModeSet,
    pub m: ModeSet,
    pub r: RTriple,
    pub p: f64,
    pub max_spread: f64,
}

#[derive(Debug, Serialize)]
pub struct OverlapReport {
    pub tree: String,
    pub tree2: String,
    pub sector: usize,
    pub overlap: OverlapMatrix,
    pub orthogonality_defect: f64,
    /// Present when the trees differ by one swap.
    pub closed_form: Option<ClosedFormCheck>,
}

#[derive(Debug, Serialize)]
pub struct KrawtchoukValue {
    pub k: usize,
    pub x: usize,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct KrawtchoukReport {
    pub p: f64,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub values: Vec<KrawtchoukValue>,
}

#[derive(Debug, Serialize)]
pub struct RotationReport {
    pub tree: String,
    pub tree2: String,
    pub sector: usize,
    /// Trees visited, starting with `tree`.
    pub path: Vec<String>,
    pub closed_form: Option<RotationMatrix>,
    pub closed_form_error: Option<String>,
    pub numeric: Option<Conjugation>,
    pub numeric_error: Option<String>,
    /// `min(|U - R|, |U + R|)` when both are available.
    pub difference: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct NineJReport {
    pub sector: usize,
    #[serde(flatten)]
    pub nine_j: NineJ,
    pub closed_form_difference: f64,
    pub numeric_difference: f64,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Report {
    Verify(Vec<RelationReport>),
    Trees(Vec<String>),
    Graph(GraphReport),
    Spectrum(SpectrumReport),
    Overlap(OverlapReport),
    Krawtchouk(KrawtchoukReport),
    Rotation(RotationReport),
    Ninej(NineJReport),
}

pub struct Outcome {
    pub report: Report,
    pub failures: Vec<Failure>,
}

fn pick_sector(space: &FockSpace, index: Option<usize>) -> Result<Sector, CliError> {
    let mut sectors = sector_decompose(space)?;
    let i = index.unwrap_or(0);
    if i >= sectors.len() {
        return Err(ConfigError::Invalid(format!("sector {i} out of range (0..{})", sectors.len())).into());
    }
    Ok(sectors.swap_remove(i))
}

fn check(failures: &mut Vec<Failure>, id: &str, residual: f64, tol: f64) {
    if residual.is_nan() || residual > tol {
        failures.push(Failure { id: id.to_string(), residual });
    }
}

pub fn run(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut failures = Vec::new();
    let report = match command {
        Command::Verify => {
            let space = FockSpace::new(cfg.params()?);
            let mut reports = verify_relation_suite(&space, cfg.tol);
            if space.n() >= 3 {
                reports.extend(verify_serre(&chain_triples(&space)?, cfg.tol));
            }
            for r in reports.iter().filter(|r| !r.passed) {
                let at: Vec<String> = r.indices.iter().map(|s| s.to_string()).collect();
                failures.push(Failure { id: format!("{}[{}]", r.relation, at.join(",")), residual: r.residual });
            }
            Report::Verify(reports)
        }
        Command::Trees => {
            let trees = enumerate_trees(cfg.require_n()?)?;
            Report::Trees(trees.iter().map(|t| t.canonical_string()).collect())
        }
        Command::Graph => {
            let g = recoupling_graph(cfg.require_n()?)?;
            let vertices: Vec<String> = g.vertices().iter().map(|t| t.canonical_string()).collect();
            let mut edges = Vec::new();
            for (i, adj) in g.adjacency().iter().enumerate() {
                for &j in adj.iter().filter(|&&j| j > i) {
                    let sw = Swap::between(&g.vertices()[i], &g.vertices()[j])?;
                    edges.push(Edge { from: vertices[i].clone(), to: vertices[j].clone(), removed: sw.removed, added: sw.added });
                }
            }
            Report::Graph(GraphReport {
                n: g.n(),
                connected: g.is_connected(),
                diameter: g.diameter(),
                dot: g.to_dot(),
                vertices,
                edges,
            })
        }
        Command::Spectrum => {
            let params = cfg.params()?;
            let space = FockSpace::new(params.clone());
            let tree = match &cfg.tree {
                Some(_) => Some(cfg.parse_tree(cfg.tree.as_ref(), "tree")?),
                None => None,
            };
            let mut sectors = Vec::new();
            for sector in sector_decompose(&space)? {
                if cfg.sector.is_some_and(|s| s != sector.index) {
                    continue;
                }
                let basis = match &tree {
                    Some(t) => {
                        let b = joint_eigenbasis(&space, &sector, t)?;
                        Some(BasisEntry { tree: t.to_string(), nodes: b.nodes, labels: b.labels, eigenvalues: b.eigenvalues })
                    }
                    None => None,
                };
                sectors.push(SectorEntry { index: sector.index, dim: sector.dim(), q_total: sector.q_total, basis });
            }
            if let Some(s) = cfg.sector.filter(|_| sectors.is_empty()) {
                return Err(ConfigError::Invalid(format!("sector {s} out of range")).into());
            }
            Report::Spectrum(SpectrumReport {
                n: params.n(),
                level: params.level(),
                a: params.a().to_vec(),
                beta: params.beta().to_vec(),
                space_dim: space.dim(),
                sectors,
            })
        }
        Command::Overlap => {
            let space = FockSpace::new(cfg.params()?);
            let t1 = cfg.parse_tree(cfg.tree.as_ref(), "tree")?;
            let t2 = cfg.parse_tree(cfg.tree2.as_ref(), "tree2")?;
            let sector = pick_sector(&space, cfg.sector)?;
            let b1 = joint_eigenbasis(&space, &sector, &t1)?;
            let b2 = joint_eigenbasis(&space, &sector, &t2)?;
            let overlap = overlap_matrix(&b1, &b2)?;
            let defect = overlap.orthogonality_defect();
            check(&mut failures, "orthogonality", defect, cfg.tol);
            let closed_form = match Swap::between(&t1, &t2) {
                Ok(_) => {
                    let pred = predicted_overlap(&space, &sector, &t1, &t2)?;
                    check(&mut failures, "closed-form spread", pred.max_spread, cfg.tol.max(1e-7));
                    Some(ClosedFormCheck { k: pred.k, l: pred.l, m: pred.m, p: pred.params.p, r: pred.r, max_spread: pred.max_spread })
                }
                Err(_) => None,
            };
            Report::Overlap(OverlapReport {
                tree: t1.to_string(),
                tree2: t2.to_string(),
                sector: sector.index,
                overlap,
                orthogonality_defect: defect,
                closed_form,
            })
        }
        Command::Krawtchouk { k, x, p, big_n } => {
            let p = p.to_f64();
            let ks: Vec<usize> = k.map_or_else(|| (0..=*big_n).collect(), |k| vec![k]);
            let xs: Vec<usize> = x.map_or_else(|| (0..=*big_n).collect(), |x| vec![x]);
            if xs.iter().any(|&x| x > *big_n) {
                return Err(ConfigError::Invalid(format!("x must lie in 0..={big_n}")).into());
            }
            let mut values = Vec::new();
            for &k in &ks {
                for &x in &xs {
                    values.push(KrawtchoukValue { k, x, value: krawtchouk(k, x as f64, p, *big_n)? });
                }
            }
            Report::Krawtchouk(KrawtchoukReport { p, big_n: *big_n, values })
        }
        Command::Rotation => {
            let space = FockSpace::new(cfg.params()?);
            let t1 = cfg.parse_tree(cfg.tree.as_ref(), "tree")?;
            let t2 = cfg.parse_tree(cfg.tree2.as_ref(), "tree2")?;
            let sector = pick_sector(&space, cfg.sector)?;
            let path = rotation_path(&t1, &t2)?;
            let oriented = |t: &CouplingTree| t.to_string() == t.canonical_string();
            let closed = if oriented(&t1) && oriented(&t2) {
                compose_rotations(space.params(), &t1, &path)
            } else {
                Err(Error::UndocumentedPattern(format!("twisted orientation {t1} -> {t2}")))
            };
            let numeric = conjugation_between(&space, &sector, &t1, &t2);
            let difference = match (&closed, &numeric) {
                (Ok(r), Ok(c)) => Some(c.u.distance_up_to_sign(r)),
                _ => None,
            };
            if let Ok(c) = &numeric {
                check(&mut failures, "conjugation residual", c.residual, cfg.tol);
            }
            if let Some(d) = difference {
                check(&mut failures, "closed form vs conjugation", d, cfg.tol);
            }
            if let (Err(e), Err(_)) = (&closed, &numeric) {
                return Err(e.clone().into());
            }
            Report::Rotation(RotationReport {
                tree: t1.to_string(),
                tree2: t2.to_string(),
                sector: sector.index,
                path: std::iter::once(t1.canonical_string()).chain(path.iter().map(|s| s.to.canonical_string())).collect(),
                closed_form_error: closed.as_ref().err().map(|e| e.to_string()),
                closed_form: closed.ok(),
                numeric_error: numeric.as_ref().err().map(|e| e.to_string()),
                numeric: numeric.ok(),
                difference,
            })
        }
        Command::Ninej => {
            let space = FockSpace::new(cfg.params()?);
            let sector = pick_sector(&space, cfg.sector)?;
            let nj = nine_j(&space, &sector)?;
            let (start, path) = ninej_path();
            let closed = compose_overlaps(&space, &sector, &start, &path, CompositionMode::ClosedForm)?;
            let numeric = compose_overlaps(&space, &sector, &start, &path, CompositionMode::Numeric)?;
            let closed_form_difference = nj.overlap.max_difference(&closed);
            let numeric_difference = nj.overlap.max_difference(&numeric);
            check(&mut failures, "9j vs closed-form composition", closed_form_difference, cfg.tol.max(1e-7));
            check(&mut failures, "9j vs numeric composition", numeric_difference, cfg.tol.max(1e-7));
            Report::Ninej(NineJReport { sector: sector.index, nine_j: nj, closed_form_difference, numeric_difference })
        }
    };
    Ok(Outcome { report, failures })
}

/// The documented paths when the endpoints match one, else a shortest path.
fn rotation_path(t1: &CouplingTree, t2: &CouplingTree) -> Result<Vec<Swap>, CliError> {
    let n = t1.n();
    let mut named = Vec::new();
    if n >= 3 {
        named.push(chain_reversal_path(n));
    }
    if n == 4 {
        named.push(ninej_path());
    }
    for (start, path) in named {
        let end = &path.last().expect("non-empty path").to;
        if start.same_labelling(t1) && end.same_labelling(t2) {
            return Ok(path);
        }
    }
    if t1.same_labelling(t2) {
        return Ok(Vec::new());
    }
    Ok(recoupling_graph(n)?.path(t1, t2)?)
}
