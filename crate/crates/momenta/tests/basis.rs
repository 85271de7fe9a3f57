//! Generated sets: invariance, evaluation, degenerate inputs and caching.

mod common;

use common::{rank_without, zero_part};
use momenta::basis_builder::{
    build_set, decompose_all, evaluate_set, minimal_flexible_set, specific_flexible_basis,
    symbols_in_scope, BasisError, InvariantSet, Mode, SetCache,
};
use momenta::cli::demo::graph_basis_order3;
use momenta::independence::SelectionConfig;
use momenta::moments::{Flavor, MomentSet};
use momenta::patterns::TensorSymbol;
use momenta::tensor_core::{Rotation3, SymTensor3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn h(l: usize, p: usize) -> TensorSymbol {
    TensorSymbol::irreducible(l, p)
}

fn random_moments(seed: u64, lmax: usize, flavor: Flavor) -> MomentSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tensors: Vec<SymTensor3> = (0..=lmax)
        .map(|l| SymTensor3::random_uniform(l, &mut rng))
        .collect();
    let m = MomentSet::new(Flavor::Volumetric, tensors).unwrap();
    if flavor == Flavor::Volumetric {
        return m;
    }
    // spherical data keeps only the top part of each order
    let d = decompose_all(&m).unwrap();
    let top: Vec<SymTensor3> = d.iter().map(|x| x.parts[0].embedded()).collect();
    MomentSet::new(Flavor::Spherical, top).unwrap()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs())))
        .fold(0.0, f64::max)
}

fn set(mode: Mode, flavor: Flavor, lmax: usize) -> InvariantSet {
    build_set(
        &symbols_in_scope(lmax, flavor),
        mode,
        None,
        flavor,
        lmax,
        &SelectionConfig::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_member_is_rotation_and_reflection_invariant(seed in any::<u64>(), reflect in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rot = if reflect { Rotation3::random_reflection(&mut rng) } else { Rotation3::random_proper(&mut rng) };
        for (mode, flavor) in [(Mode::Specific, Flavor::Volumetric), (Mode::Minimal, Flavor::Volumetric), (Mode::Minimal, Flavor::Spherical)] {
            let s = set(mode, flavor, 4);
            let m = random_moments(seed, 4, flavor);
            let a = evaluate_set(&s, &m).unwrap();
            let b = evaluate_set(&s, &m.rotated(&rot)).unwrap();
            prop_assert!(rel_diff(&a, &b) <= 1e-10);
        }
    }
}

#[test]
fn bujack_graphs_have_seven_distinct_keys() {
    let mut keys: Vec<String> = graph_basis_order3()
        .iter()
        .map(|p| p.canonical_key().unwrap())
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 7);
}

#[test]
fn zero_moments_give_zero_descriptors() {
    let s = set(Mode::Specific, Flavor::Volumetric, 3);
    let v = evaluate_set(&s, &MomentSet::zeros(Flavor::Volumetric, 3)).unwrap();
    assert_eq!(v.len(), 17);
    assert!(v.iter().all(|&x| x == 0.0));
}

#[test]
fn evaluation_checks_flavor_and_order() {
    let s = set(Mode::Specific, Flavor::Volumetric, 3);
    assert!(matches!(
        evaluate_set(&s, &MomentSet::zeros(Flavor::Spherical, 3)),
        Err(BasisError::FlavorMismatch { .. })
    ));
    assert!(matches!(
        evaluate_set(&s, &MomentSet::zeros(Flavor::Volumetric, 2)),
        Err(BasisError::OrderMismatch { need: 3, have: 2 })
    ));
}

#[test]
fn specific_basis_follows_the_data() {
    let cfg = SelectionConfig::default();
    let m = random_moments(3, 3, Flavor::Volumetric);
    let d = decompose_all(&m).unwrap();
    let s = specific_flexible_basis(&d, Some(h(3, 3)), Flavor::Volumetric, &cfg).unwrap();
    assert_eq!(s.robust, Some(h(3, 3)));
    assert_eq!(s.len(), 17);
    assert!(s
        .members
        .iter()
        .filter_map(|m| m.anchors)
        .all(|(a, _)| a == h(3, 3)));
    let auto = specific_flexible_basis(&d, None, Flavor::Volumetric, &cfg).unwrap();
    assert!(auto.robust.is_some());
    assert_eq!(
        minimal_flexible_set(&d, Flavor::Volumetric, &cfg)
            .unwrap()
            .len(),
        22
    );
}

#[test]
fn vanishing_robust_parts_are_refused() {
    let cfg = SelectionConfig::default();
    // only a second-order trace: every part of rank ≥ 2 vanishes
    let mut m2 = SymTensor3::zeros(2);
    for a in 0..3 {
        let mut idx = [0; 3];
        idx[a] = 2;
        m2.set(idx, 1.0);
    }
    let m = MomentSet::new(
        Flavor::Volumetric,
        vec![SymTensor3::scalar(1.0), SymTensor3::zeros(1), m2],
    )
    .unwrap();
    let d = decompose_all(&m).unwrap();
    assert!(matches!(
        specific_flexible_basis(&d, None, Flavor::Volumetric, &cfg),
        Err(BasisError::NoRobustCandidate)
    ));
    assert!(matches!(
        specific_flexible_basis(&d, Some(h(2, 2)), Flavor::Volumetric, &cfg),
        Err(BasisError::RobustVanishes(_))
    ));
    assert!(matches!(
        specific_flexible_basis(&d, Some(h(2, 0)), Flavor::Volumetric, &cfg),
        Err(BasisError::RobustRankTooLow(_))
    ));
    // minimal mode never needs a robust part
    assert_eq!(
        minimal_flexible_set(&d, Flavor::Volumetric, &cfg)
            .unwrap()
            .len(),
        7
    );
}

#[test]
fn zeroing_the_robust_part_costs_specific_basis_rank_only() {
    let cfg = SelectionConfig::default();
    let m = random_moments(8, 3, Flavor::Volumetric);
    let d = decompose_all(&m).unwrap();
    let specific = specific_flexible_basis(&d, Some(h(2, 2)), Flavor::Volumetric, &cfg).unwrap();
    let minimal = minimal_flexible_set(&d, Flavor::Volumetric, &cfg).unwrap();
    assert_eq!(rank_without(&minimal, &m, h(9, 9)), 17);
    assert_eq!(rank_without(&specific, &m, h(9, 9)), 17);
    let z = zero_part(&m, h(2, 2));
    // 15 coordinates remain, 3 of them are orientation
    assert_eq!(rank_without(&minimal, &z, h(2, 2)), 12);
    assert!(rank_without(&specific, &z, h(2, 2)) < 12);
}

#[test]
fn cache_stores_and_reuses_sets() {
    let dir = tempfile::tempdir().unwrap();
    let cache = SetCache::new(dir.path().join("sets"));
    let cfg = SelectionConfig::default();
    let first = cache
        .get_or_build(Mode::Minimal, Flavor::Spherical, 3, None, &cfg)
        .unwrap();
    let files: Vec<_> = std::fs::read_dir(cache.dir()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let path = files[0].as_ref().unwrap().path();
    assert_eq!(first.len(), 15);
    let second = cache
        .get_or_build(Mode::Minimal, Flavor::Spherical, 3, None, &cfg)
        .unwrap();
    assert_eq!(first, second);
    // damaged entries are rebuilt rather than trusted
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(
        cache
            .get_or_build(Mode::Minimal, Flavor::Spherical, 3, None, &cfg)
            .unwrap(),
        first
    );
    let other = cache
        .get_or_build(
            Mode::Minimal,
            Flavor::Spherical,
            3,
            None,
            &SelectionConfig { seed: 2, ..cfg },
        )
        .unwrap();
    assert_eq!(other.seed, 2);
    assert_eq!(std::fs::read_dir(cache.dir()).unwrap().count(), 2);
}

#[test]
fn sets_are_deterministic_per_seed() {
    let a = set(Mode::Specific, Flavor::Volumetric, 4);
    let b = set(Mode::Specific, Flavor::Volumetric, 4);
    assert_eq!(a, b);
    assert_eq!(InvariantSet::from_json(&a.to_json()).unwrap(), a);
}
