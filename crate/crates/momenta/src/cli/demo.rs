//! Two cubic fields that homogeneous moment invariants cannot tell apart,
//! and the invariant sets used to compare them.

use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis_builder::{
    decompose_all, evaluate_patterns, evaluate_set, specific_flexible_basis, BasisError,
};
use crate::independence::SelectionConfig;
use crate::moments::{spherical_moments, volumetric_moments, Flavor, MomentSet, PolynomialField};
use crate::patterns::{ContractionPattern, TensorSymbol};
use crate::tensor_core::Rotation3;

use super::poly::parse_polynomial;

pub const FIELD_A: &str = "3*x*y^2 - 3*x*z^2 - 3*sqrt(2)*y^2*z + sqrt(2)*z^3";
pub const FIELD_B: &str = "3*x*y^2 - 3*x*z^2 + y^3 - 3*y^2*z - 3*y*z^2 + z^3";

fn third_order(groups: &[&str]) -> Vec<ContractionPattern> {
    groups
        .iter()
        .map(|g| {
            let n = g.matches('(').count();
            ContractionPattern::from_notation(vec![TensorSymbol::Moment(3); n], g)
                .expect("fixture notation")
        })
        .collect()
}

/// Homogeneous third-order invariants of the graph-generated moment basis.
pub fn graph_basis_order3() -> Vec<ContractionPattern> {
    third_order(&[
        "(1,1,2)(2,3,3)",
        "(1,2,3)(1,2,3)",
        "(1,1,2)(2,3,4)(3,5,5)(4,6,6)",
        "(1,1,2)(2,3,4)(3,5,6)(4,5,6)",
        "(1,2,3)(1,2,4)(3,5,6)(4,5,6)",
        "(1,1,2)(2,3,4)(3,4,5)(5,6,6)",
        "(1,1,2)(2,3,4)(3,4,5)(5,6,7)(6,7,8)(8,9,9)",
    ])
}

/// Homogeneous third-order invariants of the greedily selected moment basis.
pub fn greedy_basis_order3() -> Vec<ContractionPattern> {
    third_order(&[
        "(1,1,2)(2,3,3)",
        "(1,2,3)(1,2,3)",
        "(1,1,2)(2,3,4)(3,5,5)(4,6,6)",
        "(1,1,2)(2,3,4)(3,5,6)(4,5,6)",
        "(1,2,3)(1,2,4)(3,5,6)(4,5,6)",
        "(1,2,3)(1,4,5)(2,5,6)(3,4,6)",
    ])
}

pub struct DemoOptions {
    pub flavor: Flavor,
    pub rotate: bool,
    pub seed: u64,
}

fn moments(f: &PolynomialField, flavor: Flavor) -> MomentSet {
    match flavor {
        Flavor::Volumetric => volumetric_moments(f, 3),
        Flavor::Spherical => spherical_moments(f, 3),
    }
    .expect("order 3 is supported")
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs())))
        .fold(0.0, f64::max)
}

/// Runs the comparison and returns the report text.
pub fn discriminate(opts: &DemoOptions) -> Result<String, BasisError> {
    let fa = parse_polynomial(FIELD_A).expect("fixture parses");
    let fb = parse_polynomial(FIELD_B).expect("fixture parses");
    let (ma, mb) = (moments(&fa, opts.flavor), moments(&fb, opts.flavor));
    let unit = ma.order(3).get([1, 2, 0]).abs();
    let mut out = String::new();
    writeln!(out, "fields: f1 = {FIELD_A}").unwrap();
    writeln!(out, "        f2 = {FIELD_B}").unwrap();
    writeln!(
        out,
        "flavor: {}, unit c = |M_122(f1)| = {unit:.6e}",
        opts.flavor
    )
    .unwrap();

    for (name, set) in [
        ("graph moment basis", graph_basis_order3()),
        ("greedy moment basis", greedy_basis_order3()),
    ] {
        let va = evaluate_patterns(&set, &ma)?;
        let vb = evaluate_patterns(&set, &mb)?;
        let scaled: Vec<String> = va
            .iter()
            .zip(&set)
            .map(|(v, p)| format!("{:.4}", v / unit.powi(p.factors().len() as i32)))
            .collect();
        writeln!(
            out,
            "{name}: equal: {}, max relative difference {:.2e}, values/c^k [{}]",
            max_rel_diff(&va, &vb) <= 1e-10,
            max_rel_diff(&va, &vb),
            scaled.join(", ")
        )
        .unwrap();
    }

    let cfg = SelectionConfig {
        seed: opts.seed,
        ..Default::default()
    };
    let set = specific_flexible_basis(&decompose_all(&ma)?, None, opts.flavor, &cfg)?;
    let va = evaluate_set(&set, &ma)?;
    let vb = evaluate_set(&set, &mb)?;
    let robust = set.robust.map_or("none".to_string(), |r| r.to_string());
    let differing: Vec<usize> = (0..va.len())
        .filter(|&i| (va[i] - vb[i]).abs() > 1e-10 * (1.0 + va[i].abs().max(vb[i].abs())))
        .collect();
    match differing.first() {
        Some(&i) => {
            let k = set.members[i].pattern.factors().len() as i32;
            let (sa, sb) = (va[i] / unit.powi(k), vb[i] / unit.powi(k));
            writeln!(
                out,
                "irreducible basis ({} members, robust {robust}): distinguished: true, member #{}, {sa:.4} vs {sb:.4} (×c^{k}), relative difference {:.3e}",
                set.len(),
                i + 1,
                (va[i] - vb[i]).abs() / va[i].abs().max(vb[i].abs())
            )
            .unwrap();
            writeln!(out, "  member #{}: {}", i + 1, set.members[i].pattern).unwrap();
        }
        None => {
            writeln!(
                out,
                "irreducible basis ({} members, robust {robust}): distinguished: false",
                set.len()
            )
            .unwrap();
        }
    }

    if opts.rotate {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let rot = Rotation3::random_proper(&mut rng);
        let vr = evaluate_set(&set, &moments(&fa.rotated(&rot), opts.flavor))?;
        let d = max_rel_diff(&va, &vr);
        writeln!(
            out,
            "rotated f1: equal to f1: {}, max relative difference {d:.2e}",
            d <= 1e-8
        )
        .unwrap();
    }
    Ok(out)
}
