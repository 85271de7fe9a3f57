//! Irreducible decomposition and Jacobian rank against closed forms and
//! nalgebra.

use momenta::basis_builder::pure_invariants;
use momenta::independence::{
    assign_random, jacobian_rank, Assignment, CoordinateSpace, SelectionConfig,
};
use momenta::irreducible::{decompose, detrace, embed, is_traceless, traceless_basis};
use momenta::patterns::{ContractionPattern, TensorSymbol};
use momenta::tensor_core::{Rotation3, SymTensor3};
use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_matrix(t: &SymTensor3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| t.entry(&[i, j]))
}

fn dot_full(a: &SymTensor3, b: &SymTensor3) -> f64 {
    a.to_dense()
        .iter()
        .zip(b.to_dense())
        .map(|(x, y)| x * y)
        .sum()
}

#[test]
fn second_order_parts_are_deviator_and_isotropic_part() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let t = SymTensor3::random_uniform(2, &mut rng);
        let m = to_matrix(&t);
        let iso = Matrix3::identity() * (m.trace() / 3.0);
        let d = decompose(&t).unwrap();
        let dev = to_matrix(&d.part(2).unwrap().embedded());
        let sph = to_matrix(&d.part(0).unwrap().embedded());
        assert!((dev - (m - iso)).norm() < 1e-13);
        assert!((sph - iso).norm() < 1e-13);
    }
}

#[test]
fn third_order_vector_part_matches_closed_form() {
    // M = H + (v_i δ_jk + v_j δ_ik + v_k δ_ij) / 5 with v the trace vector
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let t = SymTensor3::random_uniform(3, &mut rng);
        let v: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| t.entry(&[i, j, j])).sum())
            .collect();
        let d = decompose(&t).unwrap();
        let e = d.part(1).unwrap().embedded();
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let want = (v[i] * delta(j, k) + v[j] * delta(i, k) + v[k] * delta(i, j)) / 5.0;
                    assert!((e.entry(&[i, j, k]) - want).abs() < 1e-13);
                }
            }
        }
    }
}

#[test]
fn parts_are_mutually_orthogonal_and_sum_to_the_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for order in 0..=7 {
        let t = SymTensor3::random_uniform(order, &mut rng);
        let d = decompose(&t).unwrap();
        let emb: Vec<SymTensor3> = d.parts.iter().map(|p| p.embedded()).collect();
        for (i, a) in emb.iter().enumerate() {
            for b in &emb[i + 1..] {
                assert!(dot_full(a, b).abs() < 1e-10 * (1.0 + dot_full(&t, &t)));
            }
        }
        let mut r = d.reconstruct();
        r.axpy(-1.0, &t);
        assert!(r.max_abs() <= 1e-12 * (1.0 + t.max_abs()), "order {order}");
        for p in &d.parts {
            assert!(is_traceless(&p.data, 1e-10));
        }
    }
}

#[test]
fn traceless_basis_is_orthonormal_and_spans_2p_plus_1() {
    for p in 0..=8 {
        let b = traceless_basis(p);
        assert_eq!(b.len(), 2 * p + 1);
        let g = DMatrix::from_fn(b.len(), b.len(), |i, j| {
            b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum::<f64>()
        });
        assert!((g - DMatrix::identity(b.len(), b.len())).norm() < 1e-12);
        for v in b {
            let t = SymTensor3::from_coeffs(p, v.clone()).unwrap();
            assert!(is_traceless(&t, 1e-12));
        }
    }
}

#[test]
fn embedding_a_traceless_part_and_detracing_recovers_it() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (l, p) in [(4, 2), (5, 3), (6, 0), (6, 4), (7, 1)] {
        let h = detrace(&SymTensor3::random_uniform(p, &mut rng))
            .unwrap()
            .data;
        let d = decompose(&embed(&h, l).unwrap()).unwrap();
        for part in &d.parts {
            let want = if part.rank == p { h.max_abs() } else { 0.0 };
            let mut diff = part.data.clone();
            if part.rank == p {
                diff.axpy(-1.0, &h);
            }
            assert!(
                diff.max_abs() <= 1e-11 * (1.0 + want),
                "({l},{p}) part {}",
                part.rank
            );
        }
    }
}

fn pat(f: Vec<TensorSymbol>, s: &str) -> ContractionPattern {
    ContractionPattern::from_notation(f, s).unwrap()
}

#[test]
fn second_order_traces_match_eigenvalue_power_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m2 = TensorSymbol::Moment(2);
    let pats = [
        pat(vec![m2], "(1,1)"),
        pat(vec![m2; 2], "(1,2)(1,2)"),
        pat(vec![m2; 3], "(1,2)(2,3)(3,1)"),
    ];
    for _ in 0..10 {
        let t = SymTensor3::random_uniform(2, &mut rng);
        let eig = SymmetricEigen::new(to_matrix(&t)).eigenvalues;
        let a = Assignment::new(vec![(m2, t)]).unwrap();
        for (k, p) in pats.iter().enumerate() {
            let want: f64 = eig.iter().map(|x| x.powi(k as i32 + 1)).sum();
            assert!((a.value(p).unwrap() - want).abs() < 1e-12);
        }
    }
}

/// Rank of stacked gradient rows by singular values.
fn svd_rank(patterns: &[ContractionPattern], a: &Assignment) -> usize {
    let space = CoordinateSpace::new(a.symbols());
    let rows: Vec<Vec<f64>> = patterns
        .iter()
        .map(|p| a.gradient(p, &space).unwrap().1)
        .collect();
    let m = DMatrix::from_fn(rows.len(), space.dim(), |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-9 * top).count()
}

#[test]
fn jacobian_rank_agrees_with_singular_values() {
    let cfg = SelectionConfig {
        seed: 9,
        ..Default::default()
    };
    for p in 2..=5 {
        let h = TensorSymbol::irreducible(p, p);
        let pure = pure_invariants(h, &cfg).unwrap();
        let a = assign_random(&[h], &cfg);
        assert_eq!(
            jacobian_rank(&pure, &a, cfg.tol).unwrap(),
            svd_rank(&pure, &a)
        );
        assert_eq!(svd_rank(&pure, &a), 2 * p - 2);
    }
    // a dependent family: powers of a matrix beyond the third are not new
    let m2 = TensorSymbol::Moment(2);
    let family = [
        pat(vec![m2], "(1,1)"),
        pat(vec![m2; 2], "(1,2)(1,2)"),
        pat(vec![m2; 3], "(1,2)(2,3)(3,1)"),
        pat(vec![m2; 4], "(1,2)(2,3)(3,4)(4,1)"),
        pat(vec![m2; 2], "(1,1)(2,2)"),
    ];
    let a = assign_random(&[m2], &cfg);
    assert_eq!(svd_rank(&family, &a), 3);
    assert_eq!(jacobian_rank(&family, &a, cfg.tol).unwrap(), 3);
}

#[test]
fn rotations_are_proper_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let r = Rotation3::random_proper(&mut rng);
        let m = Matrix3::from_fn(|i, j| r.matrix()[i][j]);
        assert!((m.transpose() * m - Matrix3::identity()).norm() < 1e-13);
        assert!((m.determinant() - 1.0).abs() < 1e-13);
        let f = Rotation3::random_reflection(&mut rng);
        let n = Matrix3::from_fn(|i, j| f.matrix()[i][j]);
        assert!((n.determinant() + 1.0).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_commutes_with_rotation(
        order in 0usize..=6,
        seed in any::<u64>(),
        angle in -3.2f64..3.2,
        ax in prop::array::uniform3(-1.0f64..1.0),
    ) {
        prop_assume!(ax.iter().map(|x| x * x).sum::<f64>() > 1e-3);
        let rot = Rotation3::from_axis_angle(ax, angle);
        let t = SymTensor3::random_uniform(order, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = decompose(&t.rotate(&rot)).unwrap();
        let b = decompose(&t).unwrap();
        for (pa, pb) in a.parts.iter().zip(&b.parts) {
            let mut d = pa.data.clone();
            d.axpy(-1.0, &pb.data.rotate(&rot));
            prop_assert!(d.max_abs() <= 1e-11 * (1.0 + t.max_abs()));
        }
    }

    #[test]
    fn degrees_of_freedom_add_up(order in 0usize..=10) {
        let dof: usize = decompose(&SymTensor3::zeros(order)).unwrap().parts.iter().map(|p| 2 * p.rank + 1).sum();
        prop_assert_eq!(dof, (order + 1) * (order + 2) / 2);
    }
}
