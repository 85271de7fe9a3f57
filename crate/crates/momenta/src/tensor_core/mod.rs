//! Compact symmetric tensors over R^3, orthogonal transforms and
//! contraction networks.
//!
//! A [`SymTensor3`] of order `l` stores one coefficient per exponent triple
//! `(a, b, c)` with `a + b + c = l`. The dense entry at index tuple
//! `(i1, ..., il)` equals the coefficient of the triple counting how often each
//! axis occurs in the tuple.

mod dense;
mod network;

pub use dense::{outer, symmetrize, DenseTensor};
pub use network::{contract_full, d_contract, Network, DEFAULT_RANK_CAP};

use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

/// Highest order for which dense index tables are built.
pub const MAX_DENSE_ORDER: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("order {order} needs {expected} coefficients, got {got}")]
    CoefficientCount {
        order: usize,
        expected: usize,
        got: usize,
    },
    #[error("pairing is not a perfect matching on {positions} positions: {reason}")]
    PairingNotPerfect { positions: usize, reason: String },
    #[error("intermediate rank {rank} exceeds the cap of {cap}")]
    IntermediateRankExceeded { rank: usize, cap: usize },
    #[error("unknown tensor symbol {0}")]
    UnknownSymbol(usize),
    #[error("order {order} exceeds the dense limit of {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),
}

/// Number of independent coefficients of a symmetric tensor of order `l`.
pub fn compact_len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Storage slot of the exponent triple `(a, b, c)` within its order.
pub fn compact_index(m: [usize; 3]) -> usize {
    let t = m[1] + m[2];
    t * (t + 1) / 2 + m[2]
}

/// Exponent triples of order `l` in storage order.
pub fn multi_indices(order: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(compact_len(order));
    for a in (0..=order).rev() {
        for b in (0..=order - a).rev() {
            out.push([a, b, order - a - b]);
        }
    }
    out
}

/// Number of dense index tuples sharing the exponent triple `m`.
pub fn multiplicity(m: [usize; 3]) -> f64 {
    let fact = |n: usize| (1..=n).fold(1.0f64, |acc, k| acc * k as f64);
    fact(m[0] + m[1] + m[2]) / (fact(m[0]) * fact(m[1]) * fact(m[2]))
}

static DENSE_TABLES: [OnceLock<Vec<u32>>; MAX_DENSE_ORDER + 1] =
    [const { OnceLock::new() }; MAX_DENSE_ORDER + 1];

/// Map from row-major dense offset (first index slowest) to compact slot.
pub(crate) fn dense_table(order: usize) -> &'static [u32] {
    assert!(order <= MAX_DENSE_ORDER, "order {order} beyond dense limit");
    DENSE_TABLES[order].get_or_init(|| {
        let n = 3usize.pow(order as u32);
        (0..n)
            .map(|lin| {
                let mut m = [0usize; 3];
                let mut rest = lin;
                for _ in 0..order {
                    m[rest % 3] += 1;
                    rest /= 3;
                }
                compact_index(m) as u32
            })
            .collect()
    })
}

/// Row-major dense offset of the canonical tuple (all x, then y, then z).
fn canonical_offset(m: [usize; 3]) -> usize {
    let mut lin = 0;
    for (axis, &count) in m.iter().enumerate() {
        for _ in 0..count {
            lin = lin * 3 + axis;
        }
    }
    lin
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3 {
    order: usize,
    coeffs: Vec<f64>,
}

impl SymTensor3 {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![0.0; compact_len(order)],
        }
    }

    pub fn from_coeffs(order: usize, coeffs: Vec<f64>) -> Result<Self, TensorError> {
        let expected = compact_len(order);
        if coeffs.len() != expected {
            return Err(TensorError::CoefficientCount {
                order,
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { order, coeffs })
    }

    pub fn from_fn(order: usize, mut f: impl FnMut([usize; 3]) -> f64) -> Self {
        Self {
            order,
            coeffs: multi_indices(order).into_iter().map(&mut f).collect(),
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            order: 0,
            coeffs: vec![value],
        }
    }

    pub fn vector(v: [f64; 3]) -> Self {
        Self {
            order: 1,
            coeffs: v.to_vec(),
        }
    }

    /// The Kronecker delta.
    pub fn delta() -> Self {
        Self::from_fn(2, |m| if m.contains(&2) { 1.0 } else { 0.0 })
    }

    /// Coefficients drawn uniformly from `[-1, 1]`.
    pub fn random_uniform<R: Rng + ?Sized>(order: usize, rng: &mut R) -> Self {
        Self::from_fn(order, |_| rng.gen_range(-1.0..=1.0))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, m: [usize; 3]) -> f64 {
        debug_assert_eq!(m.iter().sum::<usize>(), self.order);
        self.coeffs[compact_index(m)]
    }

    pub fn set(&mut self, m: [usize; 3], value: f64) {
        debug_assert_eq!(m.iter().sum::<usize>(), self.order);
        self.coeffs[compact_index(m)] = value;
    }

    /// Dense entry at an index tuple with values in `0..3`.
    pub fn entry(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order, "index tuple length");
        let mut m = [0usize; 3];
        for &i in idx {
            m[i] += 1;
        }
        self.get(m)
    }

    /// Dense row-major expansion with `3^order` entries.
    pub fn to_dense(&self) -> Vec<f64> {
        dense_table(self.order)
            .iter()
            .map(|&slot| self.coeffs[slot as usize])
            .collect()
    }

    /// Reads the compact form back from a dense row-major array, taking the
    /// entry at each canonical tuple.
    pub(crate) fn from_dense_canonical(order: usize, dense: &[f64]) -> Self {
        Self::from_fn(order, |m| dense[canonical_offset(m)])
    }

    /// Frobenius norm of the dense tensor.
    pub fn norm(&self) -> f64 {
        multi_indices(self.order)
            .iter()
            .zip(&self.coeffs)
            .map(|(&m, &c)| multiplicity(m) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Contraction of one index pair; `None` below order 2.
    pub fn trace(&self) -> Option<SymTensor3> {
        if self.order < 2 {
            return None;
        }
        Some(Self::from_fn(self.order - 2, |[a, b, c]| {
            self.get([a + 2, b, c]) + self.get([a, b + 2, c]) + self.get([a, b, c + 2])
        }))
    }

    /// Applies `times` successive single-pair traces.
    pub fn trace_n(&self, times: usize) -> Option<SymTensor3> {
        let mut t = self.clone();
        for _ in 0..times {
            t = t.trace()?;
        }
        Some(t)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SymTensor3) {
        assert_eq!(self.order, other.order, "order mismatch in axpy");
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += s * y;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Active transform `T'_{i..} = A_{i j} ... T_{j ..}`.
    pub fn rotate(&self, rot: &Rotation3) -> SymTensor3 {
        let order = self.order;
        let mut dense = self.to_dense();
        let mut scratch = vec![0.0; dense.len()];
        let a = rot.matrix();
        for axis in 0..order {
            let inner = 3usize.pow((order - 1 - axis) as u32);
            let outer = dense.len() / (3 * inner);
            for o in 0..outer {
                for i in 0..3 {
                    for k in 0..inner {
                        let mut s = 0.0;
                        for j in 0..3 {
                            s += a[i][j] * dense[(o * 3 + j) * inner + k];
                        }
                        scratch[(o * 3 + i) * inner + k] = s;
                    }
                }
            }
            std::mem::swap(&mut dense, &mut scratch);
        }
        Self::from_dense_canonical(order, &dense)
    }

    /// Symmetrized outer product `sym(self ⊗ other)`.
    ///
    /// With `P_T(x) = Σ mult(m) T_m x^m` this is polynomial multiplication,
    /// so no dense intermediate is needed.
    pub fn symmetric_product(&self, other: &SymTensor3) -> SymTensor3 {
        let order = self.order + other.order;
        let mut out = SymTensor3::zeros(order);
        for (ma, &ca) in multi_indices(self.order).iter().zip(&self.coeffs) {
            if ca == 0.0 {
                continue;
            }
            let wa = multiplicity(*ma) * ca;
            for (mb, &cb) in multi_indices(other.order).iter().zip(&other.coeffs) {
                let m = [ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]];
                out.coeffs[compact_index(m)] += wa * multiplicity(*mb) * cb;
            }
        }
        for (m, c) in multi_indices(order).iter().zip(out.coeffs.iter_mut()) {
            *c /= multiplicity(*m);
        }
        out
    }
}

/// A real orthogonal 3x3 matrix, proper or improper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    m: [[f64; 3]; 3],
}

impl Rotation3 {
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self, TensorError> {
        let mut dev = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((dot - want).abs());
            }
        }
        if dev > 1e-12 {
            return Err(TensorError::NotOrthogonal(dev));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Right-handed rotation by `angle` about `axis` (normalized internally).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (h, w) = ((angle / 2.0).sin(), (angle / 2.0).cos());
        Self::from_quaternion([w, h * axis[0] / n, h * axis[1] / n, h * axis[2] / n])
    }

    fn from_quaternion(q: [f64; 4]) -> Self {
        let [w, x, y, z] = q;
        Self {
            m: [
                [
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - z * w),
                    2.0 * (x * z + y * w),
                ],
                [
                    2.0 * (x * y + z * w),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - x * w),
                ],
                [
                    2.0 * (x * z - y * w),
                    2.0 * (y * z + x * w),
                    1.0 - 2.0 * (x * x + y * y),
                ],
            ],
        }
    }

    /// Haar-uniform proper rotation (Shoemake's quaternion construction).
    pub fn random_proper<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let u3: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        Self::from_quaternion([a * u2.sin(), a * u2.cos(), b * u3.sin(), b * u3.cos()])
    }

    /// Random rotation followed by the mirror `z -> -z`.
    pub fn random_reflection<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut r = Self::random_proper(rng);
        for row in r.m.iter_mut() {
            row[2] = -row[2];
        }
        r
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn transpose(&self) -> Self {
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[j][i];
            }
        }
        Self { m: t }
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }
}

/// Perfect matching over the flattened index positions of a factor product.
/// Positions are 0-based; each pair is stored with the smaller position first
/// and pairs are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pairing {
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    pub fn new(pairs: Vec<(usize, usize)>, positions: usize) -> Result<Self, TensorError> {
        let fail = |reason: String| TensorError::PairingNotPerfect { positions, reason };
        if positions % 2 == 1 {
            return Err(fail("odd number of positions".into()));
        }
        if pairs.len() * 2 != positions {
            return Err(fail(format!("{} pairs given", pairs.len())));
        }
        let mut seen = vec![false; positions];
        let mut norm = Vec::with_capacity(pairs.len());
        for (p, q) in pairs {
            if p == q {
                return Err(fail(format!("position {p} paired with itself")));
            }
            for x in [p, q] {
                if x >= positions {
                    return Err(fail(format!("position {x} out of range")));
                }
                if seen[x] {
                    return Err(fail(format!("position {x} used twice")));
                }
                seen[x] = true;
            }
            norm.push((p.min(q), p.max(q)));
        }
        norm.sort_unstable();
        Ok(Self { pairs: norm })
    }

    /// Builds a pairing from one label per position; equal labels pair up.
    pub fn from_labels<T: Ord + Copy>(labels: &[T]) -> Result<Self, TensorError> {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by_key(|&i| (labels[i], i));
        let mut pairs = Vec::with_capacity(labels.len() / 2);
        let mut k = 0;
        while k < order.len() {
            if k + 1 >= order.len() || labels[order[k]] != labels[order[k + 1]] {
                return Err(TensorError::PairingNotPerfect {
                    positions: labels.len(),
                    reason: "a label does not occur exactly twice".into(),
                });
            }
            if k + 2 < order.len() && labels[order[k + 2]] == labels[order[k]] {
                return Err(TensorError::PairingNotPerfect {
                    positions: labels.len(),
                    reason: "a label occurs more than twice".into(),
                });
            }
            pairs.push((order[k], order[k + 1]));
            k += 2;
        }
        Self::new(pairs, labels.len())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn positions(&self) -> usize {
        self.pairs.len() * 2
    }

    /// One label per position, numbered by first appearance starting at 0.
    pub fn to_labels(&self) -> Vec<u32> {
        let n = self.positions();
        let mut labels = vec![u32::MAX; n];
        let mut partner = vec![0usize; n];
        for &(p, q) in &self.pairs {
            partner[p] = q;
            partner[q] = p;
        }
        let mut next = 0;
        for pos in 0..n {
            if labels[pos] == u32::MAX {
                labels[pos] = next;
                labels[partner[pos]] = next;
                next += 1;
            }
        }
        labels
    }
}
