//! Zero-rank contraction patterns: products of tensor symbols with a perfect
//! pairing of all their indices.

mod canonical;
mod generate;

pub use canonical::{canonical_form, PatternGraph, MAX_CANONICAL_NODES};
pub use generate::{candidate_pool, enumerate, sequence_classes, CandidateFilter, PoolBounds};

use std::cmp::Ordering;
use std::fmt;

use serde_json::json;
use thiserror::Error;

use crate::tensor_core::{Pairing, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("pattern has {0} factors; canonical forms support at most {max}", max = MAX_CANONICAL_NODES)]
    TooManyNodes(usize),
    #[error("factor {factor} has {got} indices but its symbol has rank {rank}")]
    RankMismatch {
        factor: usize,
        rank: usize,
        got: usize,
    },
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error(transparent)]
    Pairing(#[from] TensorError),
    #[error("pattern JSON is malformed: {0}")]
    Json(String),
}

/// A tensor occurring in a product: a whole moment tensor of some order, or
/// the rank-`p` irreducible part of the order-`l` moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TensorSymbol {
    Moment(usize),
    Irreducible { order: usize, rank: usize },
}

impl TensorSymbol {
    pub fn irreducible(order: usize, rank: usize) -> Self {
        Self::Irreducible { order, rank }
    }

    /// Number of indices the symbol contributes to a product.
    pub fn rank(&self) -> usize {
        match *self {
            Self::Moment(l) => l,
            Self::Irreducible { rank, .. } => rank,
        }
    }

    /// The moment order the tensor comes from.
    pub fn source_order(&self) -> usize {
        match *self {
            Self::Moment(l) => l,
            Self::Irreducible { order, .. } => order,
        }
    }

    pub fn is_traceless(&self) -> bool {
        matches!(self, Self::Irreducible { .. })
    }

    fn sort_key(&self) -> (usize, usize, u8) {
        match *self {
            Self::Moment(l) => (l, l, 0),
            Self::Irreducible { order, rank } => (rank, order, 1),
        }
    }

    pub fn to_json(self) -> serde_json::Value {
        match self {
            Self::Moment(l) => json!(["M", l]),
            Self::Irreducible { order, rank } => json!(["H", order, rank]),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, PatternError> {
        let bad = || PatternError::Json(format!("bad factor {v}"));
        let arr = v.as_array().ok_or_else(bad)?;
        let num = |i: usize| {
            arr.get(i)
                .and_then(|x| x.as_u64())
                .map(|x| x as usize)
                .ok_or_else(bad)
        };
        match (arr.first().and_then(|k| k.as_str()), arr.len()) {
            (Some("M"), 2) => Ok(Self::Moment(num(1)?)),
            (Some("H"), 3) => {
                let (order, rank) = (num(1)?, num(2)?);
                if rank > order || (order - rank) % 2 == 1 {
                    return Err(bad());
                }
                Ok(Self::Irreducible { order, rank })
            }
            _ => Err(bad()),
        }
    }
}

/// Lower rank first, then lower source order; moments before parts.
impl Ord for TensorSymbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for TensorSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TensorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Moment(l) => write!(f, "M{l}"),
            Self::Irreducible { order, rank } => write!(f, "H{order}.{rank}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Pure,
    Mixed,
    Homogeneous,
    Simultaneous,
}

impl Tag {
    fn as_str(self) -> &'static str {
        match self {
            Tag::Pure => "pure",
            Tag::Mixed => "mixed",
            Tag::Homogeneous => "homogeneous",
            Tag::Simultaneous => "simultaneous",
        }
    }
}

/// A product of factors together with a perfect pairing of their indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContractionPattern {
    factors: Vec<TensorSymbol>,
    pairing: Pairing,
}

impl ContractionPattern {
    pub fn new(factors: Vec<TensorSymbol>, pairing: Pairing) -> Result<Self, PatternError> {
        let total: usize = factors.iter().map(|s| s.rank()).sum();
        if pairing.positions() != total {
            return Err(PatternError::Pairing(TensorError::PairingNotPerfect {
                positions: total,
                reason: format!("pairing covers {} positions", pairing.positions()),
            }));
        }
        Ok(Self { factors, pairing })
    }

    /// Builds a pattern from one label list per factor; equal labels pair up.
    pub fn from_factor_labels(
        factors: Vec<TensorSymbol>,
        labels: &[Vec<u32>],
    ) -> Result<Self, PatternError> {
        if labels.len() != factors.len() {
            return Err(PatternError::Parse {
                pos: 0,
                msg: format!(
                    "{} index groups for {} factors",
                    labels.len(),
                    factors.len()
                ),
            });
        }
        for (i, (s, l)) in factors.iter().zip(labels).enumerate() {
            if s.rank() != l.len() {
                return Err(PatternError::RankMismatch {
                    factor: i,
                    rank: s.rank(),
                    got: l.len(),
                });
            }
        }
        let flat: Vec<u32> = labels.concat();
        let pairing = Pairing::from_labels(&flat)?;
        Self::new(factors, pairing)
    }

    /// Parses index groups such as `(1,2,3)(1,2,4)(3,5,6)(4,5,6)`; commas and
    /// whitespace between groups are ignored, `()` is an empty group.
    pub fn from_notation(factors: Vec<TensorSymbol>, text: &str) -> Result<Self, PatternError> {
        let mut groups = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b' ' | b'\t' | b',' | b'\n' => i += 1,
                b'(' => {
                    let close = text[i..].find(')').ok_or(PatternError::Parse {
                        pos: i,
                        msg: "unclosed group".into(),
                    })? + i;
                    let mut group = Vec::new();
                    let mut pos = i + 1;
                    for item in text[i + 1..close].split(',') {
                        let t = item.trim();
                        if !t.is_empty() {
                            group.push(t.parse::<u32>().map_err(|_| PatternError::Parse {
                                pos,
                                msg: format!("'{t}' is not an index label"),
                            })?);
                        }
                        pos += item.len() + 1;
                    }
                    groups.push(group);
                    i = close + 1;
                }
                other => {
                    return Err(PatternError::Parse {
                        pos: i,
                        msg: format!("unexpected '{}'", other as char),
                    })
                }
            }
        }
        Self::from_factor_labels(factors, &groups)
    }

    pub fn factors(&self) -> &[TensorSymbol] {
        &self.factors
    }

    pub fn pairing(&self) -> &Pairing {
        &self.pairing
    }

    pub fn total_rank(&self) -> usize {
        self.pairing.positions()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(|s| s.rank()).collect()
    }

    /// Distinct symbols in ascending order.
    pub fn symbols(&self) -> Vec<TensorSymbol> {
        let mut s = self.factors.clone();
        s.sort();
        s.dedup();
        s
    }

    /// Number of factors using `symbol`.
    pub fn exponent(&self, symbol: TensorSymbol) -> usize {
        self.factors.iter().filter(|s| **s == symbol).count()
    }

    pub fn is_pure(&self) -> bool {
        self.symbols().len() == 1
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut orders: Vec<usize> = self.factors.iter().map(|s| s.source_order()).collect();
        orders.dedup();
        orders.sort_unstable();
        orders.dedup();
        orders.len() == 1
    }

    pub fn tags(&self) -> [Tag; 2] {
        [
            if self.is_pure() {
                Tag::Pure
            } else {
                Tag::Mixed
            },
            if self.is_homogeneous() {
                Tag::Homogeneous
            } else {
                Tag::Simultaneous
            },
        ]
    }

    /// Index labels per factor, numbered from 1 by first appearance.
    pub fn factor_labels(&self) -> Vec<Vec<u32>> {
        let flat = self.pairing.to_labels();
        let mut out = Vec::with_capacity(self.factors.len());
        let mut start = 0;
        for s in &self.factors {
            out.push(
                flat[start..start + s.rank()]
                    .iter()
                    .map(|l| l + 1)
                    .collect(),
            );
            start += s.rank();
        }
        out
    }

    /// Index groups like `(1,2,3)(1,2,3)`.
    pub fn notation(&self) -> String {
        self.factor_labels()
            .iter()
            .map(|g| {
                let inner: Vec<String> = g.iter().map(|l| l.to_string()).collect();
                format!("({})", inner.join(","))
            })
            .collect()
    }

    pub fn graph(&self) -> PatternGraph {
        PatternGraph::from_pattern(self)
    }

    /// The same pairing over renamed factors of equal rank.
    pub fn relabeled(
        &self,
        map: impl Fn(TensorSymbol) -> TensorSymbol,
    ) -> Result<Self, PatternError> {
        let factors: Vec<TensorSymbol> = self.factors.iter().map(|&s| map(s)).collect();
        for (i, (a, b)) in self.factors.iter().zip(&factors).enumerate() {
            if a.rank() != b.rank() {
                return Err(PatternError::RankMismatch {
                    factor: i,
                    rank: b.rank(),
                    got: a.rank(),
                });
            }
        }
        Self::new(factors, self.pairing.clone())
    }

    /// Key shared exactly by isomorphic patterns.
    pub fn canonical_key(&self) -> Result<String, PatternError> {
        canonical_form(&self.graph())
    }

    /// The isomorphic representative used throughout the crate.
    pub fn canonical(&self) -> Result<ContractionPattern, PatternError> {
        self.graph().canonical_pattern()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pairs: Vec<[usize; 2]> = self
            .pairing
            .pairs()
            .iter()
            .map(|&(p, q)| [p + 1, q + 1])
            .collect();
        json!({
            "factors": self.factors.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
            "pairing": pairs,
            "tags": self.tags().iter().map(|t| t.as_str()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, PatternError> {
        let factors = v["factors"]
            .as_array()
            .ok_or_else(|| PatternError::Json("missing factors".into()))?
            .iter()
            .map(TensorSymbol::from_json)
            .collect::<Result<Vec<_>, _>>()?;
        let pairs = v["pairing"]
            .as_array()
            .ok_or_else(|| PatternError::Json("missing pairing".into()))?
            .iter()
            .map(|p| {
                let a = p.as_array().filter(|a| a.len() == 2);
                let get = |i: usize| a.and_then(|a| a[i].as_u64()).filter(|x| *x >= 1);
                match (get(0), get(1)) {
                    (Some(x), Some(y)) => Ok((x as usize - 1, y as usize - 1)),
                    _ => Err(PatternError::Json(format!("bad pair {p}"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let total = factors.iter().map(|s| s.rank()).sum();
        let pattern = Self::new(factors, Pairing::new(pairs, total)?)?;
        if let Some(tags) = v.get("tags").and_then(|t| t.as_array()) {
            let want: Vec<&str> = pattern.tags().iter().map(|t| t.as_str()).collect();
            let got: Vec<&str> = tags.iter().filter_map(|t| t.as_str()).collect();
            if got != want {
                return Err(PatternError::Json(format!(
                    "tags {got:?} disagree with factors"
                )));
            }
        }
        Ok(pattern)
    }

    /// Graphviz text: one node per factor labeled with its rank, one edge per
    /// connected factor pair labeled with the number of contracted indices.
    /// Traces inside a factor are not drawn.
    pub fn to_dot(&self) -> String {
        let g = self.graph();
        let mut out = String::from("graph pattern {\n");
        for (i, s) in g.nodes().iter().enumerate() {
            out.push_str(&format!("  n{i} [label=\"{}\"];\n", s.rank()));
        }
        for ((a, b), w) in g.edges() {
            out.push_str(&format!("  n{a} -- n{b} [label=\"{w}\"];\n"));
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for ContractionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let syms = self.symbols();
        for (i, s) in syms.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            let e = self.exponent(*s);
            if e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        write!(f, " {}", self.notation())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(order: usize, rank: usize) -> TensorSymbol {
        TensorSymbol::irreducible(order, rank)
    }

    #[test]
    fn symbol_order_is_rank_first() {
        let mut v = vec![h(2, 2), h(3, 1), h(1, 1), h(0, 0), h(4, 2), h(3, 3)];
        v.sort();
        assert_eq!(
            v,
            vec![h(0, 0), h(1, 1), h(3, 1), h(2, 2), h(4, 2), h(3, 3)]
        );
        assert!(TensorSymbol::Moment(3) < h(3, 3));
    }

    #[test]
    fn notation_roundtrip_and_tags() {
        let p = ContractionPattern::from_notation(vec![h(3, 3); 4], "(1,2,3)(1,2,4)(3,5,6)(4,5,6)")
            .unwrap();
        assert_eq!(p.notation(), "(1,2,3)(1,2,4)(3,5,6)(4,5,6)");
        assert!(p.is_pure() && p.is_homogeneous());
        let q = ContractionPattern::from_notation(vec![h(1, 1), h(1, 1), h(2, 2)], "(1)(2)(1,2)")
            .unwrap();
        assert_eq!(q.tags(), [Tag::Mixed, Tag::Simultaneous]);
        let r =
            ContractionPattern::from_notation(vec![h(3, 1), h(3, 3), h(3, 3)], "(1)(1,2,3)(2,3,3)");
        assert!(r.is_err());
        let s = ContractionPattern::from_notation(vec![h(3, 1), h(3, 3)], "(1)(1,2,2)").unwrap();
        assert_eq!(s.tags(), [Tag::Mixed, Tag::Homogeneous]);
    }

    #[test]
    fn notation_errors() {
        let e = ContractionPattern::from_notation(vec![h(2, 2)], "(1,x)").unwrap_err();
        assert!(matches!(e, PatternError::Parse { pos: 3, .. }));
        let e = ContractionPattern::from_notation(vec![h(2, 2)], "(1,1").unwrap_err();
        assert!(matches!(e, PatternError::Parse { pos: 0, .. }));
        let e = ContractionPattern::from_notation(vec![h(2, 2)], "(1)").unwrap_err();
        assert!(matches!(e, PatternError::RankMismatch { .. }));
        let e =
            ContractionPattern::from_notation(vec![h(2, 2), h(2, 2)], "(1,2)(1,3)").unwrap_err();
        assert!(matches!(e, PatternError::Pairing(_)));
    }

    #[test]
    fn json_roundtrip() {
        let p = ContractionPattern::from_notation(
            vec![h(2, 2), h(3, 3), h(3, 3)],
            "(1,2)(2,3,4)(1,3,4)",
        )
        .unwrap();
        let v = p.to_json();
        assert_eq!(v["factors"][0], json!(["H", 2, 2]));
        assert_eq!(v["tags"], json!(["mixed", "simultaneous"]));
        assert_eq!(ContractionPattern::from_json(&v).unwrap(), p);
        let mut bad = v.clone();
        bad["tags"] = json!(["pure", "homogeneous"]);
        assert!(ContractionPattern::from_json(&bad).is_err());
        let m =
            ContractionPattern::from_notation(vec![TensorSymbol::Moment(1); 2], "(1)(1)").unwrap();
        assert_eq!(m.to_json()["factors"], json!([["M", 1], ["M", 1]]));
        assert_eq!(m.to_json()["pairing"], json!([[1, 2]]));
    }

    #[test]
    fn dot_output() {
        let m1 =
            ContractionPattern::from_notation(vec![TensorSymbol::Moment(1); 2], "(1)(1)").unwrap();
        assert_eq!(m1.to_dot(), "graph pattern {\n  n0 [label=\"1\"];\n  n1 [label=\"1\"];\n  n0 -- n1 [label=\"1\"];\n}\n");
        let m3 =
            ContractionPattern::from_notation(vec![TensorSymbol::Moment(3); 2], "(1,1,2)(2,3,3)")
                .unwrap();
        let dot = m3.to_dot();
        assert!(dot.contains("n0 -- n1 [label=\"1\"]"));
        assert_eq!(dot.matches("--").count(), 1);
    }

    #[test]
    fn display_form() {
        let p = ContractionPattern::from_notation(vec![h(1, 1), h(1, 1), h(2, 2)], "(1)(2)(1,2)")
            .unwrap();
        assert_eq!(p.to_string(), "H1.1^2*H2.2 (1)(2)(1,2)");
    }
}
