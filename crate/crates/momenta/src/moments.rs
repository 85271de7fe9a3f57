//! Volumetric moments over the unit ball and spherical moments over the unit
//! sphere, from polynomials (exact) or sampled data (quadrature).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor_core::{multi_indices, Rotation3, SymTensor3};

/// Highest moment order accepted by default.
pub const DEFAULT_MAX_ORDER: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("{0} input cannot produce {1} moments")]
    FlavorMismatch(Flavor, Flavor),
    #[error("grid resolution {0} is below the minimum of 8")]
    GridTooCoarse(usize),
    #[error("grid of resolution {n} needs {expected} values, got {got}")]
    GridSize {
        n: usize,
        expected: usize,
        got: usize,
    },
    #[error("spherical weights sum to {0}, expected 4π")]
    WeightSum(f64),
    #[error("order {order} exceeds the configured maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("moment set is malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Volumetric,
    Spherical,
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Flavor::Volumetric => "volumetric",
            Flavor::Spherical => "spherical",
        })
    }
}

impl std::str::FromStr for Flavor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "volumetric" => Ok(Flavor::Volumetric),
            "spherical" => Ok(Flavor::Spherical),
            other => Err(format!("unknown flavor '{other}'")),
        }
    }
}

/// Γ(k/2) for a positive integer k.
fn gamma_half(k: u32) -> f64 {
    match k {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// ∫ over the unit sphere of x^a y^b z^c.
pub fn sphere_monomial(e: [u32; 3]) -> f64 {
    if e.iter().any(|x| x % 2 == 1) {
        return 0.0;
    }
    2.0 * gamma_half(e[0] + 1) * gamma_half(e[1] + 1) * gamma_half(e[2] + 1)
        / gamma_half(e[0] + e[1] + e[2] + 3)
}

/// ∫ over the unit ball of x^a y^b z^c.
pub fn ball_monomial(e: [u32; 3]) -> f64 {
    sphere_monomial(e) / (e[0] + e[1] + e[2] + 3) as f64
}

/// Polynomial in x, y, z with merged exponents and no zero terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialField {
    terms: BTreeMap<[u32; 3], f64>,
}

impl PolynomialField {
    pub fn new(terms: impl IntoIterator<Item = (f64, [u32; 3])>) -> Self {
        let mut out = Self::default();
        for (c, e) in terms {
            *out.terms.entry(e).or_insert(0.0) += c;
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn constant(c: f64) -> Self {
        Self::new([(c, [0, 0, 0])])
    }

    /// The coordinate `axis` (0 = x, 1 = y, 2 = z).
    pub fn coordinate(axis: usize) -> Self {
        let mut e = [0u32; 3];
        e[axis] = 1;
        Self::new([(1.0, e)])
    }

    /// Terms as (coefficient, exponents), ordered by exponents.
    pub fn terms(&self) -> impl Iterator<Item = (f64, [u32; 3])> + '_ {
        self.terms.iter().map(|(e, c)| (*c, *e))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e[0] + e[1] + e[2])
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, p: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32)
            })
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.terms().chain(other.terms()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.terms().map(|(c, e)| (c * s, e)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for (c1, e1) in self.terms() {
            for (c2, e2) in other.terms() {
                out.push((c1 * c2, [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]]));
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    /// The rotated field `g(x) = f(Aᵀ x)`, whose moments are the rotated
    /// moments of `f`.
    pub fn rotated(&self, rot: &Rotation3) -> Self {
        let a = rot.matrix();
        let lin: Vec<Self> = (0..3)
            .map(|i| {
                Self::new((0..3).map(|j| {
                    let mut e = [0u32; 3];
                    e[j] = 1;
                    (a[j][i], e)
                }))
            })
            .collect();
        let mut out = Self::default();
        for (c, e) in self.terms() {
            let t = lin[0]
                .pow(e[0])
                .mul(&lin[1].pow(e[1]))
                .mul(&lin[2].pow(e[2]));
            out = out.add(&t.scale(c));
        }
        out
    }
}

/// Sampled input data.
#[derive(Debug, Clone, PartialEq)]
pub enum SampledField {
    /// `n³` values on voxel centers of [-1, 1]³, x fastest.
    Voxels { n: usize, values: Vec<f64> },
    /// Weighted samples on the unit sphere.
    Sphere { samples: Vec<SphereSample> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSample {
    pub theta: f64,
    pub phi: f64,
    pub value: f64,
    pub weight: f64,
}

impl SampledField {
    pub fn voxels(n: usize, values: Vec<f64>) -> Result<Self, MomentError> {
        if n < 8 {
            return Err(MomentError::GridTooCoarse(n));
        }
        if values.len() != n * n * n {
            return Err(MomentError::GridSize {
                n,
                expected: n * n * n,
                got: values.len(),
            });
        }
        Ok(Self::Voxels { n, values })
    }

    pub fn sphere(samples: Vec<SphereSample>) -> Result<Self, MomentError> {
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        if (total - 4.0 * PI).abs() > 1e-6 {
            return Err(MomentError::WeightSum(total));
        }
        Ok(Self::Sphere { samples })
    }

    /// Rasterizes a polynomial on voxel centers.
    pub fn rasterize(f: &PolynomialField, n: usize) -> Result<Self, MomentError> {
        let mut values = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    values.push(f.eval([center(i, n), center(j, n), center(k, n)]));
                }
            }
        }
        Self::voxels(n, values)
    }
}

fn center(i: usize, n: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / n as f64
}

/// Moment tensors of orders `0..=lmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    flavor: Flavor,
    tensors: Vec<SymTensor3>,
}

impl MomentSet {
    pub fn new(flavor: Flavor, tensors: Vec<SymTensor3>) -> Result<Self, MomentError> {
        if tensors.is_empty() {
            return Err(MomentError::Malformed("no orders".into()));
        }
        for (l, t) in tensors.iter().enumerate() {
            if t.order() != l {
                return Err(MomentError::Malformed(format!(
                    "tensor at order {l} has order {}",
                    t.order()
                )));
            }
        }
        Ok(Self { flavor, tensors })
    }

    pub fn zeros(flavor: Flavor, lmax: usize) -> Self {
        Self {
            flavor,
            tensors: (0..=lmax).map(SymTensor3::zeros).collect(),
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn lmax(&self) -> usize {
        self.tensors.len() - 1
    }

    pub fn order(&self, l: usize) -> &SymTensor3 {
        &self.tensors[l]
    }

    pub fn tensors(&self) -> &[SymTensor3] {
        &self.tensors
    }

    pub fn rotated(&self, rot: &Rotation3) -> Self {
        Self {
            flavor: self.flavor,
            tensors: self.tensors.iter().map(|t| t.rotate(rot)).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut tensors = serde_json::Map::new();
        for (l, t) in self.tensors.iter().enumerate() {
            tensors.insert(l.to_string(), serde_json::json!(t.coeffs()));
        }
        serde_json::json!({
            "schema": crate::SCHEMA,
            "flavor": self.flavor,
            "lmax": self.lmax(),
            "tensors": tensors,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, MomentError> {
        #[derive(Deserialize)]
        struct Raw {
            flavor: Flavor,
            lmax: usize,
            tensors: BTreeMap<String, Vec<f64>>,
        }
        let raw: Raw =
            serde_json::from_value(v.clone()).map_err(|e| MomentError::Malformed(e.to_string()))?;
        let mut tensors = Vec::with_capacity(raw.lmax + 1);
        for l in 0..=raw.lmax {
            let coeffs = raw
                .tensors
                .get(&l.to_string())
                .ok_or_else(|| MomentError::Malformed(format!("order {l} missing")))?;
            tensors.push(
                SymTensor3::from_coeffs(l, coeffs.clone())
                    .map_err(|e| MomentError::Malformed(e.to_string()))?,
            );
        }
        if raw.tensors.len() != raw.lmax + 1 {
            return Err(MomentError::Malformed("orders beyond lmax present".into()));
        }
        Self::new(raw.flavor, tensors)
    }
}

fn check_order(lmax: usize) -> Result<(), MomentError> {
    if lmax > DEFAULT_MAX_ORDER {
        return Err(MomentError::OrderTooLarge {
            order: lmax,
            max: DEFAULT_MAX_ORDER,
        });
    }
    Ok(())
}

fn integrate_poly(
    f: &PolynomialField,
    lmax: usize,
    flavor: Flavor,
    monomial: impl Fn([u32; 3], usize) -> f64,
) -> Result<MomentSet, MomentError> {
    check_order(lmax)?;
    let tensors = (0..=lmax)
        .map(|l| {
            SymTensor3::from_fn(l, |m| {
                f.terms()
                    .map(|(c, e)| {
                        c * monomial(
                            [e[0] + m[0] as u32, e[1] + m[1] as u32, e[2] + m[2] as u32],
                            l,
                        )
                    })
                    .sum()
            })
        })
        .collect();
    MomentSet::new(flavor, tensors)
}

/// Exact volumetric moments `∫_B f(x) x^⊗l dV` of a polynomial.
pub fn volumetric_moments(f: &PolynomialField, lmax: usize) -> Result<MomentSet, MomentError> {
    integrate_poly(f, lmax, Flavor::Volumetric, |e, _| ball_monomial(e))
}

/// Exact volumetric moments of the r-independent field `f(x/|x|)`.
pub fn volumetric_moments_angular(
    f: &PolynomialField,
    lmax: usize,
) -> Result<MomentSet, MomentError> {
    integrate_poly(f, lmax, Flavor::Volumetric, |e, l| {
        sphere_monomial(e) / (l + 3) as f64
    })
}

/// Exact spherical moments `∫_S f(u) u^⊗l dΩ` of a polynomial restricted to
/// the unit sphere.
pub fn spherical_moments(f: &PolynomialField, lmax: usize) -> Result<MomentSet, MomentError> {
    integrate_poly(f, lmax, Flavor::Spherical, |e, _| sphere_monomial(e))
}

/// Spherical moments by weighted quadrature over samples.
pub fn spherical_moments_sampled(
    field: &SampledField,
    lmax: usize,
) -> Result<MomentSet, MomentError> {
    check_order(lmax)?;
    let samples = match field {
        SampledField::Sphere { samples } => samples,
        SampledField::Voxels { .. } => {
            return Err(MomentError::FlavorMismatch(
                Flavor::Volumetric,
                Flavor::Spherical,
            ))
        }
    };
    let mut tensors: Vec<SymTensor3> = (0..=lmax).map(SymTensor3::zeros).collect();
    for s in samples {
        let u = [
            s.theta.sin() * s.phi.cos(),
            s.theta.sin() * s.phi.sin(),
            s.theta.cos(),
        ];
        accumulate(&mut tensors, u, s.value * s.weight);
    }
    MomentSet::new(Flavor::Spherical, tensors)
}

fn accumulate(tensors: &mut [SymTensor3], p: [f64; 3], w: f64) {
    if w == 0.0 {
        return;
    }
    let lmax = tensors.len() - 1;
    let mut pw = vec![[1.0f64; 3]; lmax + 1];
    for k in 1..=lmax {
        for a in 0..3 {
            pw[k][a] = pw[k - 1][a] * p[a];
        }
    }
    for (l, t) in tensors.iter_mut().enumerate() {
        for (c, m) in t.coeffs_mut().iter_mut().zip(multi_indices(l)) {
            *c += w * pw[m[0]][0] * pw[m[1]][1] * pw[m[2]][2];
        }
    }
}

/// Volumetric moments by the midpoint rule over voxel centers inside the
/// unit ball. Slices are summed in a fixed order so results are bit-stable.
pub fn moments_from_grid(field: &SampledField, lmax: usize) -> Result<MomentSet, MomentError> {
    grid_moments(field, lmax, false)
}

/// Like [`moments_from_grid`], but first scales coordinates by the largest
/// radius of a nonzero voxel so the whole support lands in the unit ball.
pub fn moments_from_grid_rescaled(
    field: &SampledField,
    lmax: usize,
) -> Result<MomentSet, MomentError> {
    grid_moments(field, lmax, true)
}

fn grid_moments(
    field: &SampledField,
    lmax: usize,
    rescale: bool,
) -> Result<MomentSet, MomentError> {
    check_order(lmax)?;
    let (n, values) = match field {
        SampledField::Voxels { n, values } => (*n, values),
        SampledField::Sphere { .. } => {
            return Err(MomentError::FlavorMismatch(
                Flavor::Spherical,
                Flavor::Volumetric,
            ))
        }
    };
    let at = |i: usize, j: usize, k: usize| [center(i, n), center(j, n), center(k, n)];
    let mut radius = 1.0;
    if rescale {
        let mut r2 = 0.0f64;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    if values[(k * n + j) * n + i] != 0.0 {
                        let p = at(i, j, k);
                        r2 = r2.max(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                    }
                }
            }
        }
        if r2 > 0.0 {
            radius = r2.sqrt();
        }
    }
    let dv = (2.0 / n as f64 / radius).powi(3);
    let slices: Vec<Vec<SymTensor3>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut acc: Vec<SymTensor3> = (0..=lmax).map(SymTensor3::zeros).collect();
            for j in 0..n {
                for i in 0..n {
                    let p = at(i, j, k).map(|c| c / radius);
                    // the largest-radius voxel must survive roundoff
                    if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > 1.0 + 1e-12 {
                        continue;
                    }
                    accumulate(&mut acc, p, values[(k * n + j) * n + i] * dv);
                }
            }
            acc
        })
        .collect();
    let mut tensors: Vec<SymTensor3> = (0..=lmax).map(SymTensor3::zeros).collect();
    for slice in &slices {
        for (t, s) in tensors.iter_mut().zip(slice) {
            t.axpy(1.0, s);
        }
    }
    MomentSet::new(Flavor::Volumetric, tensors)
}

/// Deviation from the trace relation of r-independent inputs, per order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    pub per_order: Vec<(usize, f64)>,
    pub max_deviation: f64,
}

/// Checks `tr lM = (l+1)/(l+3) · (l-2)M` (volumetric) or `tr lM = (l-2)M`
/// (spherical) entrywise, reporting deviations relative to the order's scale.
pub fn check_trace_relation(m: &MomentSet) -> TraceReport {
    let mut per_order = Vec::new();
    for l in 2..=m.lmax() {
        let factor = match m.flavor() {
            Flavor::Volumetric => (l + 1) as f64 / (l + 3) as f64,
            Flavor::Spherical => 1.0,
        };
        let lhs = m.order(l).trace().expect("order ≥ 2");
        let rhs = m.order(l - 2).scaled(factor);
        // Relative to the larger of the compared entries and the tensor
        // itself, so exact cancellations do not read as large deviations.
        let scale = lhs.max_abs().max(rhs.max_abs()).max(m.order(l).max_abs());
        let diff = lhs
            .coeffs()
            .iter()
            .zip(rhs.coeffs())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        per_order.push((l, if scale > 0.0 { diff / scale } else { 0.0 }));
    }
    let max_deviation = per_order.iter().fold(0.0f64, |a, (_, d)| a.max(*d));
    TraceReport {
        per_order,
        max_deviation,
    }
}
