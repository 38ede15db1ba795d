use std::f64::consts::FRAC_PI_2;

use racah::error::Error;
use racah::fock::{FockSpace, ModeParams, ModeSet};
use racah::rotations::{
    chevalley_system, compose_rotations, conjugation_between, embed_planar, planar_angle, rotation_factors, swap_angle,
    Offset, RotationMatrix, RotationStep,
};
use racah::spectra::{sector_decompose, Sector};
use racah::trees::{chain_reversal_path, ninej_path, CouplingTree, Swap};

fn setup(a: &[f64], level: usize) -> (FockSpace, Sector) {
    let sp = FockSpace::new(ModeParams::with_unit_beta(a.to_vec(), level).unwrap());
    let sector = sector_decompose(&sp).unwrap().remove(0);
    (sp, sector)
}

fn tree(s: &str, n: usize) -> CouplingTree {
    CouplingTree::parse(s, n).unwrap()
}

fn set(m: &[usize]) -> ModeSet {
    ModeSet::from_modes(m)
}

fn r(plane: (usize, usize), angle: f64, dim: usize) -> RotationMatrix {
    let t = (ModeSet::singleton(1), ModeSet::singleton(2), ModeSet::singleton(3));
    embed_planar(&RotationStep { plane, angle, offset: Offset::Zero, triple: t }, dim).unwrap()
}

#[test]
fn every_ninej_step_matches_its_template_in_both_directions() {
    let (sp, sector) = setup(&[2.0, 3.0, 5.0, 7.0], 3);
    let (start, path) = ninej_path();
    let mut cur = start;
    for sw in &path {
        for (from, to) in [(&cur, &sw.to), (&sw.to, &cur)] {
            let step = Swap::between(from, to).unwrap();
            let Ok(closed) = compose_rotations(sp.params(), from, &[step]) else { continue };
            let solved = conjugation_between(&sp, &sector, from, to).unwrap();
            assert!(solved.residual < 1e-10);
            assert!(solved.u.distance_up_to_sign(&closed) < 1e-8, "{from} -> {to}");
        }
        cur = sw.to.clone();
    }
}

#[test]
fn chain_to_balanced_inverts_balanced_to_chain() {
    let a = [3.0, 5.0, 7.0, 11.0];
    let (sp, sector) = setup(&a, 2);
    let chain = tree("(((1,2),3),4)", 4);
    let balanced = tree("((1,2),(3,4))", 4);
    let forward = conjugation_between(&sp, &sector, &chain, &balanced).unwrap();
    let back = conjugation_between(&sp, &sector, &balanced, &chain).unwrap();
    assert!((&forward.u.m * &back.u.m - nalgebra::DMatrix::identity(3, 3)).amax() < 1e-8);
    let theta = planar_angle(a[0] + a[1], a[2], a[3]).unwrap();
    assert!(forward.u.distance_up_to_sign(&r((2, 3), theta - FRAC_PI_2, 3)) < 1e-8);
}

#[test]
fn chain_reversal_n4_matches_solver() {
    let (sp, sector) = setup(&[2.0, 3.0, 5.0, 7.0], 3);
    let (start, path) = chain_reversal_path(4);
    let closed = compose_rotations(sp.params(), &start, &path).unwrap();
    let end = &path.last().unwrap().to;
    let solved = conjugation_between(&sp, &sector, &start, end).unwrap();
    assert!(solved.u.distance_up_to_sign(&closed) < 1e-8);
    // First step {12,123} -> {23,123}: rotation by theta_{1,2,3} in the (1,2) plane.
    let first = compose_rotations(sp.params(), &start, &path[..1]).unwrap();
    let theta = swap_angle(sp.params(), set(&[1]), set(&[2]), set(&[3])).unwrap();
    assert!(first.distance_up_to_sign(&r((1, 2), theta, 3)) < 1e-14);
}

#[test]
fn chain_reversal_step_count() {
    for n in 3..=7 {
        let (_, path) = chain_reversal_path(n);
        assert_eq!(path.len(), (n - 1) * (n - 2) / 2);
        let p = ModeParams::with_unit_beta((1..=n).map(|i| i as f64).collect(), 1).unwrap();
        let planes: Vec<_> = path
            .iter()
            .map(|sw| match rotation_factors(&p, sw).unwrap()[..] {
                [racah::rotations::RotationFactor::Planar(step)] => step.plane,
                _ => panic!("chain reversal steps are single planar rotations"),
            })
            .collect();
        assert!(planes.iter().all(|&(i, j)| j == i + 1 && j < n));
    }
}

#[test]
fn euler_middle_factor_uses_theta_2_1_3() {
    let a = [2.0, 3.0, 5.0, 7.0];
    let (sp, sector) = setup(&a, 3);
    let (start, _) = ninej_path();
    let end = conjugation_between(&sp, &sector, &start, &tree("((1,3),(2,4))", 4)).unwrap();
    let t1 = planar_angle(a[0] + a[1], a[2], a[3]).unwrap();
    let t2 = planar_angle(a[0], a[1], a[2]).unwrap();
    let t3 = planar_angle(a[0] + a[2], a[1], a[3]).unwrap();
    let with_theta_1_2_3 = r((2, 3), FRAC_PI_2 - t1, 3).then(&r((1, 2), -t2, 3)).then(&r((2, 3), t3 - FRAC_PI_2, 3));
    assert!(end.u.distance_up_to_sign(&with_theta_1_2_3) > 1e-3);
    assert!((end.u.m[(0, 0)].abs() - planar_angle(a[1], a[0], a[2]).unwrap().cos()).abs() < 1e-10);
}

#[test]
fn errors() {
    let (sp, _) = setup(&[2.0, 3.0, 5.0, 7.0], 1);
    let from = tree("(((1,2),3),4)", 4);
    let to = tree("(((1,2),4),3)", 4);
    let sw = Swap::between(&from, &to).unwrap();
    assert!(matches!(rotation_factors(sp.params(), &sw), Err(Error::UndocumentedPattern(_))));
    let (_, path) = ninej_path();
    assert!(matches!(compose_rotations(sp.params(), &from, &path), Err(Error::LabelMismatch(_))));
    let sp5 = FockSpace::new(ModeParams::with_unit_beta(vec![1.0; 5], 1).unwrap());
    assert!(matches!(chevalley_system(&sp5, &CouplingTree::chain(5)), Err(Error::OutOfGuard(5, _))));
}
