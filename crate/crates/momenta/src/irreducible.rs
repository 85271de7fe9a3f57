//! Decomposition of symmetric tensors into traceless (irreducible) parts.
//!
//! An order-`l` tensor splits as `M = Σ_k D(H_{l-2k}, l)` where `D(H, l)`
//! sums `H ⊗ δ ⊗ ... ⊗ δ` over its distinct index arrangements, i.e.
//! `D(H, l) = l!/(p! 2^k k!) · sym(H ⊗ δ^k)`. With this convention the
//! order-2 and order-3 parts are `tr M / 3` and `tr M / 5`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde_json::json;
use thiserror::Error;

use crate::tensor_core::{compact_len, SymTensor3};

pub const MAX_DECOMPOSITION_ORDER: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrreducibleError {
    #[error("cannot embed rank {rank} into order {order}: parity or size mismatch")]
    ParityMismatch { order: usize, rank: usize },
    #[error("order {0} exceeds the supported maximum")]
    OrderTooLarge(usize),
    #[error("decomposition is malformed: {0}")]
    Malformed(String),
}

/// A traceless symmetric tensor of rank `p` taken from an order-`l` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibleTensor {
    pub source_order: usize,
    pub rank: usize,
    pub data: SymTensor3,
}

impl IrreducibleTensor {
    pub fn embedded(&self) -> SymTensor3 {
        embed(&self.data, self.source_order).expect("part rank matches its source order")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub order: usize,
    /// Parts with ranks `l, l-2, ...` down to 0 or 1.
    pub parts: Vec<IrreducibleTensor>,
}

impl Decomposition {
    pub fn reconstruct(&self) -> SymTensor3 {
        let mut out = SymTensor3::zeros(self.order);
        for p in &self.parts {
            out.axpy(1.0, &p.embedded());
        }
        out
    }

    pub fn part(&self, rank: usize) -> Option<&IrreducibleTensor> {
        self.parts.iter().find(|p| p.rank == rank)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut parts = serde_json::Map::new();
        for p in &self.parts {
            parts.insert(
                format!("({},{})", p.source_order, p.rank),
                json!(p.data.coeffs()),
            );
        }
        json!({ "schema": crate::SCHEMA, "order": self.order, "parts": parts })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, IrreducibleError> {
        let bad = |m: &str| IrreducibleError::Malformed(m.to_string());
        let order = v["order"].as_u64().ok_or_else(|| bad("missing order"))? as usize;
        let raw = v["parts"].as_object().ok_or_else(|| bad("missing parts"))?;
        let mut by_rank = BTreeMap::new();
        for (key, coeffs) in raw {
            let inner = key
                .strip_prefix('(')
                .and_then(|k| k.strip_suffix(')'))
                .ok_or_else(|| bad("part key must look like (l,p)"))?;
            let (l, p) = inner
                .split_once(',')
                .ok_or_else(|| bad("part key needs two numbers"))?;
            let l: usize = l.trim().parse().map_err(|_| bad("bad order in key"))?;
            let p: usize = p.trim().parse().map_err(|_| bad("bad rank in key"))?;
            if l != order {
                return Err(bad("part order differs from decomposition order"));
            }
            let coeffs: Vec<f64> =
                serde_json::from_value(coeffs.clone()).map_err(|e| bad(&e.to_string()))?;
            let data = SymTensor3::from_coeffs(p, coeffs).map_err(|e| bad(&e.to_string()))?;
            by_rank.insert(p, data);
        }
        let parts: Vec<IrreducibleTensor> = part_ranks(order)
            .map(|p| {
                by_rank.remove(&p).map(|data| IrreducibleTensor {
                    source_order: order,
                    rank: p,
                    data,
                })
            })
            .collect::<Option<_>>()
            .ok_or_else(|| bad("missing part"))?;
        if !by_rank.is_empty() {
            return Err(bad("unexpected part rank"));
        }
        Ok(Self { order, parts })
    }
}

/// Ranks of the parts of an order-`l` tensor, highest first.
pub fn part_ranks(order: usize) -> impl Iterator<Item = usize> {
    (0..=order / 2).map(move |k| order - 2 * k)
}

fn distinct_arrangements(order: usize, rank: usize) -> f64 {
    let k = (order - rank) / 2;
    let fact = |n: usize| (1..=n).fold(1.0f64, |acc, x| acc * x as f64);
    fact(order) / (fact(rank) * 2f64.powi(k as i32) * fact(k))
}

/// `D(H, l)`: the sum over distinct arrangements of `H ⊗ δ^k`.
pub fn embed(h: &SymTensor3, order: usize) -> Result<SymTensor3, IrreducibleError> {
    let rank = h.order();
    if order < rank || (order - rank) % 2 == 1 {
        return Err(IrreducibleError::ParityMismatch { order, rank });
    }
    let mut out = h.clone();
    for _ in 0..(order - rank) / 2 {
        out = out.symmetric_product(&SymTensor3::delta());
    }
    Ok(out.scaled(distinct_arrangements(order, rank)))
}

static TRACE_COEFFS: [OnceLock<Vec<Vec<f64>>>; MAX_DECOMPOSITION_ORDER + 1] =
    [const { OnceLock::new() }; MAX_DECOMPOSITION_ORDER + 1];

/// `coeff[k][j]`: taking `j` traces of `D(H_{l-2k}, l)` gives
/// `coeff[k][j] · D(H_{l-2k}, l-2j)` for `j ≤ k`. One trace of `D(H_p, n)`
/// equals `(n + p + 1) D(H_p, n-2)`.
fn trace_coeffs(order: usize) -> &'static [Vec<f64>] {
    TRACE_COEFFS[order].get_or_init(|| {
        (0..=order / 2)
            .map(|k| {
                let p = order - 2 * k;
                let mut row = vec![1.0];
                for j in 1..=k {
                    let n = order - 2 * (j - 1);
                    row.push(row[j - 1] * (n + p + 1) as f64);
                }
                row
            })
            .collect()
    })
}

pub fn decompose(m: &SymTensor3) -> Result<Decomposition, IrreducibleError> {
    let order = m.order();
    if order > MAX_DECOMPOSITION_ORDER {
        return Err(IrreducibleError::OrderTooLarge(order));
    }
    let kmax = order / 2;
    let coeffs = trace_coeffs(order);
    let mut traces = vec![m.clone()];
    for _ in 0..kmax {
        let next = traces.last().unwrap().trace().expect("order ≥ 2");
        traces.push(next);
    }
    let mut found: Vec<Option<SymTensor3>> = vec![None; kmax + 1];
    for k in (0..=kmax).rev() {
        let mut rest = traces[k].clone();
        for (kk, h) in found.iter().enumerate().skip(k + 1) {
            let h = h.as_ref().expect("higher k solved first");
            rest.axpy(-coeffs[kk][k], &embed(h, order - 2 * k)?);
        }
        found[k] = Some(rest.scaled(1.0 / coeffs[k][k]));
    }
    let parts = found
        .into_iter()
        .enumerate()
        .map(|(k, h)| IrreducibleTensor {
            source_order: order,
            rank: order - 2 * k,
            data: h.expect("all parts solved"),
        })
        .collect();
    Ok(Decomposition { order, parts })
}

/// The top-rank (fully traceless) part of `t`.
pub fn detrace(t: &SymTensor3) -> Result<IrreducibleTensor, IrreducibleError> {
    Ok(decompose(t)?.parts.swap_remove(0))
}

/// Whether a single trace vanishes relative to the tensor's norm.
pub fn is_traceless(t: &SymTensor3, rel_tol: f64) -> bool {
    match t.trace() {
        None => true,
        Some(tr) => tr.norm() <= rel_tol * t.norm(),
    }
}

static TRACELESS_BASES: [OnceLock<Vec<Vec<f64>>>; MAX_DECOMPOSITION_ORDER + 1] =
    [const { OnceLock::new() }; MAX_DECOMPOSITION_ORDER + 1];

/// Orthonormal basis (in compact coordinates) of the traceless tensors of
/// rank `p`; it has `2p + 1` vectors.
pub fn traceless_basis(rank: usize) -> &'static [Vec<f64>] {
    TRACELESS_BASES[rank].get_or_init(|| {
        let n = compact_len(rank);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2 * rank + 1);
        for slot in 0..n {
            let mut e = SymTensor3::zeros(rank);
            e.coeffs_mut()[slot] = 1.0;
            let mut v = detrace(&e).expect("rank within limit").data.into_coeffs();
            for _ in 0..2 {
                for b in &basis {
                    let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    for (x, y) in v.iter_mut().zip(b) {
                        *x -= d * y;
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                basis.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        assert_eq!(basis.len(), 2 * rank + 1, "traceless dimension");
        basis
    })
}
