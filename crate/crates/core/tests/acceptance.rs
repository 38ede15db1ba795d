//! Acceptance criteria, one line of output per criterion; exits non-zero if any fails.
//! Run with `cargo test -p racah --test acceptance`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use racah::algebra::{chain_triples, generator_rank, sl2_casimir, verify_relation_suite, verify_serre};
use racah::fock::{FockSpace, ModeParams, ModeSet};
use racah::rotations::{compose_rotations, conjugation_between, planar_angle, RotationMatrix};
use racah::special::{compose_overlaps, krawtchouk_gram, nine_j, predicted_overlap, r_parameters, CompositionMode};
use racah::spectra::sector_decompose;
use racah::trees::{enumerate_trees, neighbors, ninej_path, recoupling_graph, chain_reversal_path, tree_count, CouplingTree};

const PRIMES: [f64; 6] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0];

fn space(n: usize, level: usize) -> FockSpace {
    FockSpace::new(ModeParams::with_unit_beta(PRIMES[..n].to_vec(), level).unwrap())
}

fn tree(s: &str, n: usize) -> CouplingTree {
    CouplingTree::parse(s, n).unwrap()
}

/// Outcome of one criterion: a verdict and a one-line summary of the worst figure.
struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn relation_suite() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut failed = Vec::new();
    for (n, level) in [(3, 3), (4, 3), (5, 2)] {
        for r in verify_relation_suite(&space(n, level), 1e-9) {
            if r.skipped.is_some() {
                continue;
            }
            count += 1;
            worst = worst.max(r.residual);
            if !r.passed {
                failed.push(format!("{}@n={n}", r.relation));
            }
        }
    }
    outcome(failed.is_empty() && count > 0, format!("{count} instances, worst residual {worst:.2e}, failures {failed:?}"))
}

fn serre_suite() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut ok = true;
    for n in [4, 5] {
        let sp = space(n, 2);
        let triples = chain_triples(&sp).unwrap();
        for r in verify_serre(&triples, 1e-8) {
            count += 1;
            worst = worst.max(r.residual);
            ok &= r.passed;
        }
        for t in &triples {
            worst = worst.max(t.sl2_residual());
            ok &= t.sl2_residual() <= 1e-8;
        }
    }
    outcome(ok, format!("{count} relations, worst residual {worst:.2e}"))
}

fn casimir_scalars() -> Outcome {
    let mut worst = 0.0f64;
    for level in 0..=4 {
        let sp = space(3, level);
        let c = sl2_casimir(&sp, ModeSet::singleton(1), ModeSet::singleton(2), ModeSet::singleton(3))
            .unwrap()
            .to_dense();
        for sector in sector_decompose(&sp).unwrap() {
            let d = sector.dim();
            let top = (d - 1) as f64;
            let target = DMatrix::identity(d, d) * ((top * top + 2.0 * top) / 2.0);
            let restricted = sector.restrict(&c);
            worst = worst.max((&restricted - &target).norm() / (1.0 + target.norm()));
        }
    }
    outcome(worst <= 1e-8, format!("worst residual {worst:.2e}"))
}

fn rank_check() -> Outcome {
    let report = generator_rank(&PRIMES[..4], 3).unwrap();
    let passed = report.rank == 13 && report.expected_rank == 13 && report.gap >= 1e6;
    outcome(
        passed,
        format!(
            "rank {} (expected {}), gap {:.2e}, family {}, single realization {}",
            report.rank, report.expected_rank, report.gap, report.family_size, report.single_realization_rank
        ),
    )
}

fn krawtchouk_bridge() -> Outcome {
    let mut worst_spread = 0.0f64;
    let mut worst_param = 0.0f64;
    let mut pairs = 0;
    for n in [3, 4] {
        let sp = space(n, 3);
        let sectors = sector_decompose(&sp).unwrap();
        for t in enumerate_trees(n).unwrap() {
            for sw in neighbors(&t) {
                pairs += 1;
                for sector in &sectors {
                    let pred = predicted_overlap(&sp, sector, &sw.from, &sw.to).unwrap();
                    worst_spread = worst_spread.max(pred.max_spread);
                    worst_param = worst_param
                        .max((pred.params.p - (1.0 - pred.r.r_h) / 2.0).abs())
                        .max(pred.r.unit_circle_defect().abs());
                }
            }
        }
    }
    outcome(
        worst_spread <= 1e-7 && worst_param <= 1e-12 && pairs > 0,
        format!("{pairs} swaps, worst spread {worst_spread:.2e}, parameter defect {worst_param:.2e}"),
    )
}

fn ninej_reproduction() -> Outcome {
    let (start, path) = ninej_path();
    let mut worst = 0.0f64;
    for level in 0..=3 {
        let sp = space(4, level);
        for sector in sector_decompose(&sp).unwrap() {
            let direct = nine_j(&sp, &sector).unwrap().overlap;
            let closed = compose_overlaps(&sp, &sector, &start, &path, CompositionMode::ClosedForm).unwrap();
            let numeric = compose_overlaps(&sp, &sector, &start, &path, CompositionMode::Numeric).unwrap();
            worst = worst.max(direct.max_difference(&closed)).max(direct.max_difference(&numeric));
        }
    }
    outcome(worst <= 1e-7, format!("worst entry difference {worst:.2e}"))
}

fn graph_combinatorics() -> Outcome {
    let expected = [1, 3, 15, 105, 945];
    let mut ok = true;
    let mut lines = Vec::new();
    for (n, &count) in (2..=6).zip(&expected) {
        let trees = enumerate_trees(n).unwrap();
        let distinct: BTreeSet<String> = trees.iter().map(|t| t.canonical_string()).collect();
        let g = recoupling_graph(n).unwrap();
        let bound = (n - 1) * (n - 2) / 2;
        let d = g.diameter();
        ok &= trees.len() == count && distinct.len() == count && tree_count(n) == count;
        ok &= g.is_connected() && d <= bound;
        lines.push(format!("n={n}: {} trees, diameter {d}", trees.len()));
    }
    outcome(ok, lines.join("; "))
}

fn rotations() -> Outcome {
    let mut worst_example = 0.0f64;
    let mut worst_orth = 0.0f64;
    let mut worst_cos = 0.0f64;

    // Closed-form matrices for a twist, an n = 3 swap and {12,34} -> {12,123}.
    let sp3 = space(3, 3);
    let s3 = &sector_decompose(&sp3).unwrap()[0];
    let a = &PRIMES;
    let chain3 = tree("((1,2),3)", 3);
    let twist = conjugation_between(&sp3, s3, &chain3, &tree("((2,1),3)", 3)).unwrap();
    let ex1 = RotationMatrix { m: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]) };
    worst_example = worst_example.max(twist.u.distance_up_to_sign(&ex1)).max(twist.residual);
    let den = (a[0] + a[1]) * (a[1] + a[2]);
    let c = (a[0] * a[2] / den).sqrt();
    let s = (a[1] * (a[0] + a[1] + a[2]) / den).sqrt();
    let ex2 = RotationMatrix { m: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]) };
    let swap = conjugation_between(&sp3, s3, &chain3, &tree("(1,(2,3))", 3)).unwrap();
    worst_example = worst_example.max(swap.u.distance_up_to_sign(&ex2)).max(swap.residual);

    let sp4 = space(4, 3);
    let s4 = &sector_decompose(&sp4).unwrap()[0];
    let (a12, a34, a123, a1234) = (a[0] + a[1], a[2] + a[3], a[0] + a[1] + a[2], a[0] + a[1] + a[2] + a[3]);
    let c = (a[2] * a1234 / (a123 * a34)).sqrt();
    let s = (a[3] * a12 / (a123 * a34)).sqrt();
    let ex4 = RotationMatrix { m: DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c]) };
    let balanced = tree("((1,2),(3,4))", 4);
    let chain4 = tree("(((1,2),3),4)", 4);
    let y = conjugation_between(&sp4, s4, &balanced, &chain4).unwrap();
    worst_example = worst_example.max(y.u.distance_up_to_sign(&ex4)).max(y.residual);

    // Composed rotations: chain reversal for n = 3..6 and the 9j path.
    let mut composed = Vec::new();
    for n in 3..=6 {
        let (start, path) = chain_reversal_path(n);
        composed.push(compose_rotations(&ModeParams::with_unit_beta(a[..n].to_vec(), 1).unwrap(), &start, &path).unwrap());
    }
    let (start, path) = ninej_path();
    let euler = compose_rotations(sp4.params(), &start, &path).unwrap();
    composed.push(euler.clone());
    for r in &composed {
        worst_orth = worst_orth.max(r.orthogonality_defect()).max((r.det() - 1.0).abs());
    }

    // R_h = cos 2 theta over every swap triple with n <= 6.
    for n in 3..=6 {
        let p = ModeParams::with_unit_beta(a[..n].to_vec(), 1).unwrap();
        for t in enumerate_trees(n).unwrap() {
            for sw in neighbors(&t) {
                let (ak, al, am) = (p.a_of(sw.k), p.a_of(sw.l), p.a_of(sw.m));
                let theta = planar_angle(ak, al, am).unwrap();
                let r = r_parameters(ak, al, am).unwrap();
                worst_cos = worst_cos.max((r.r_h - (2.0 * theta).cos()).abs());
            }
        }
    }

    // Euler product against the end-to-end conjugation.
    let end = conjugation_between(&sp4, s4, &start, &tree("((1,3),(2,4))", 4)).unwrap();
    let euler_gap = end.u.distance_up_to_sign(&euler).max(end.residual);

    let passed = worst_example <= 1e-8 && worst_orth <= 1e-10 && worst_cos <= 1e-12 && euler_gap <= 1e-7;
    outcome(
        passed,
        format!(
            "examples {worst_example:.2e}, orthogonality/det {worst_orth:.2e}, cos 2theta {worst_cos:.2e}, Euler product {euler_gap:.2e}"
        ),
    )
}

fn path_independence() -> Outcome {
    let sp = space(4, 3);
    let from = tree("((1,2),(3,4))", 4);
    let to = tree("((1,3),(2,4))", 4);
    let g = recoupling_graph(4).unwrap();
    let paths = g.shortest_paths(&from, &to, 3).unwrap();
    let mut worst = 0.0f64;
    for sector in sector_decompose(&sp).unwrap() {
        let composed: Vec<_> = paths
            .iter()
            .map(|p| compose_overlaps(&sp, &sector, &from, p, CompositionMode::ClosedForm).unwrap())
            .collect();
        for i in 0..composed.len() {
            for j in i + 1..composed.len() {
                worst = worst.max(composed[i].max_difference(&composed[j]));
            }
        }
    }
    outcome(paths.len() == 3 && worst <= 1e-8, format!("{} paths, worst pairwise difference {worst:.2e}", paths.len()))
}

fn krawtchouk_orthogonality() -> Outcome {
    let mut ps = vec![0.25];
    for (k, l, m) in [(0, 1, 2), (1, 0, 2), (0, 2, 1), (2, 3, 4), (4, 1, 3), (3, 4, 0)] {
        ps.push((1.0 - r_parameters(PRIMES[k], PRIMES[l], PRIMES[m]).unwrap().r_h) / 2.0);
    }
    let mut worst = 0.0f64;
    for &p in &ps {
        for n in 0..=12 {
            let g = krawtchouk_gram(p, n).unwrap();
            for k in 0..=n {
                for m in 0..=n {
                    if k != m {
                        worst = worst.max(g[(k, m)].abs());
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("{} values of p, worst off-diagonal {worst:.2e}", ps.len()))
}

fn main() -> std::process::ExitCode {
    let criteria: [Criterion; 10] = [
        ("relation suite", relation_suite),
        ("Serre relations", serre_suite),
        ("sl2 Casimir scalars", casimir_scalars),
        ("generator rank", rank_check),
        ("Krawtchouk bridge", krawtchouk_bridge),
        ("9j reproduction", ninej_reproduction),
        ("graph combinatorics", graph_combinatorics),
        ("rotations", rotations),
        ("path independence", path_independence),
        ("Krawtchouk orthogonality", krawtchouk_orthogonality),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("[{}] {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.passed {
            failed.push(*name);
        }
    }
    if failed.is_empty() {
        println!("all {} acceptance criteria passed", criteria.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
