//! Invariant sets built from the irreducible parts of moment tensors.
//!
//! Every part gets its pure invariants. Mixed invariants then tie parts
//! together: in a specific basis each part is tied to one robust part, in a
//! minimal flexible set every pair of parts is tied. Both flavors share the
//! construction; spherical input keeps only the full-rank part of each order
//! since the others repeat lower orders.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::independence::{
    assign_random, select, Assignment, IndependenceError, SelectionConfig, Target,
};
use crate::irreducible::{decompose, Decomposition, IrreducibleError};
use crate::moments::{Flavor, MomentSet};
use crate::patterns::{
    candidate_pool, CandidateFilter, ContractionPattern, PatternError, PoolBounds, TensorSymbol,
};

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("every part of rank two or more vanishes; use the minimal flexible set instead")]
    NoRobustCandidate,
    #[error("robust part {0} must have rank at least 2")]
    RobustRankTooLow(TensorSymbol),
    #[error("robust part {0} vanishes for this input")]
    RobustVanishes(TensorSymbol),
    #[error("robust part {0} is not among the parts in scope")]
    RobustNotInScope(TensorSymbol),
    #[error("set is for {set} input but the moments are {moments}")]
    FlavorMismatch { set: Flavor, moments: Flavor },
    #[error("set needs orders up to {need} but the moments stop at {have}")]
    OrderMismatch { need: usize, have: usize },
    #[error("invariant set JSON is malformed: {0}")]
    Json(String),
    #[error(transparent)]
    Selection(#[from] IndependenceError),
    #[error(transparent)]
    Irreducible(#[from] IrreducibleError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("cache I/O failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Specific,
    Minimal,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Specific => "specific",
            Mode::Minimal => "minimal",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "specific" => Ok(Mode::Specific),
            "minimal" => Ok(Mode::Minimal),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

/// A part counts as vanishing below this fraction of its moment's norm.
pub const VANISHING_RATIO: f64 = 1e-10;

/// Number of independent invariants of one traceless tensor of rank `p`.
pub fn pure_count(rank: usize) -> usize {
    if rank <= 1 {
        1
    } else {
        2 * rank - 2
    }
}

/// Number of mixed invariants fixing the relative orientation of two parts.
pub fn mixed_count(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, _) => 0,
        (1, 1) => 1,
        (1, _) => 2,
        _ => 3,
    }
}

/// Parts in scope up to `lmax`, by order and then by descending rank.
pub fn symbols_in_scope(lmax: usize, flavor: Flavor) -> Vec<TensorSymbol> {
    let mut out = Vec::new();
    for l in 0..=lmax {
        for k in 0..=l / 2 {
            if flavor == Flavor::Spherical && k > 0 {
                break;
            }
            out.push(TensorSymbol::irreducible(l, l - 2 * k));
        }
    }
    out
}

/// Lowest-rank part with rank at least 2 (lower order on ties).
pub fn default_robust(symbols: &[TensorSymbol]) -> Option<TensorSymbol> {
    symbols
        .iter()
        .filter(|s| s.rank() >= 2)
        .min_by_key(|s| (s.rank(), s.source_order()))
        .copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRow {
    pub pure: usize,
    pub mixed: usize,
    pub total: usize,
}

fn count_row(symbols: &[TensorSymbol], mode: Mode) -> CountRow {
    let pure = symbols.iter().map(|s| pure_count(s.rank())).sum();
    let mixed = match mode {
        Mode::Specific => match default_robust(symbols) {
            None => 0,
            Some(r) => symbols
                .iter()
                .filter(|s| **s != r)
                .map(|s| mixed_count(r.rank(), s.rank()))
                .sum(),
        },
        Mode::Minimal => {
            let mut m = 0;
            for (i, a) in symbols.iter().enumerate() {
                for b in &symbols[i + 1..] {
                    m += mixed_count(a.rank(), b.rank());
                }
            }
            m
        }
    };
    CountRow {
        pure,
        mixed,
        total: pure + mixed,
    }
}

/// Set sizes for all parts up to `lmax`.
pub fn expected_counts(lmax: usize, flavor: Flavor, mode: Mode) -> CountRow {
    count_row(&symbols_in_scope(lmax, flavor), mode)
}

/// Set sizes for the parts of a single order-`l` tensor.
pub fn order_counts(l: usize) -> CountRow {
    let symbols: Vec<TensorSymbol> = symbols_in_scope(l, Flavor::Volumetric)
        .into_iter()
        .filter(|s| s.source_order() == l)
        .collect();
    count_row(&symbols, Mode::Specific)
}

const PURE_BOUNDS: [PoolBounds; 2] = [
    PoolBounds {
        max_exponent: 10,
        max_factors: 10,
        max_total_rank: usize::MAX,
        require_all: true,
    },
    PoolBounds {
        max_exponent: 12,
        max_factors: 12,
        max_total_rank: usize::MAX,
        require_all: true,
    },
];

const MIXED_BOUNDS: [PoolBounds; 2] = [
    PoolBounds {
        max_exponent: 10,
        max_factors: 10,
        max_total_rank: 24,
        require_all: true,
    },
    PoolBounds {
        max_exponent: 10,
        max_factors: 12,
        max_total_rank: 36,
        require_all: true,
    },
];

type MemoKey = (usize, usize, u64, u64);

fn memo() -> &'static Mutex<HashMap<MemoKey, Vec<ContractionPattern>>> {
    static MEMO: OnceLock<Mutex<HashMap<MemoKey, Vec<ContractionPattern>>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Runs selection with the first bounds, retrying once with the wider ones.
fn select_escalating(
    symbols: &[TensorSymbol],
    bounds: &[PoolBounds; 2],
    target: usize,
    prefill: &[ContractionPattern],
    cfg: &SelectionConfig,
) -> Result<Vec<ContractionPattern>, IndependenceError> {
    let assignment = assign_random(symbols, cfg);
    let mut last = None;
    for b in bounds {
        let pool = candidate_pool(symbols, CandidateFilter::SELECTION, *b);
        match select(pool, Target::Count(target), prefill, &assignment, cfg, None) {
            Ok(s) => return Ok(s.members),
            Err(e @ IndependenceError::TargetNotReached { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn stand_in_pure(p: usize) -> TensorSymbol {
    TensorSymbol::irreducible(p, p)
}

fn pure_shape(p: usize, cfg: &SelectionConfig) -> Result<Vec<ContractionPattern>, BasisError> {
    let key = (p, usize::MAX, cfg.seed, cfg.tol.to_bits());
    if let Some(v) = memo().lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let h = stand_in_pure(p);
    let found = match p {
        0 => vec![ContractionPattern::from_notation(vec![h], "()")?],
        1 => vec![ContractionPattern::from_notation(vec![h; 2], "(1)(1)")?],
        _ => select_escalating(&[h], &PURE_BOUNDS, pure_count(p), &[], cfg)?,
    };
    memo().lock().unwrap().insert(key, found.clone());
    Ok(found)
}

/// Stand-in symbols for a mixed pair of ranks `pa ≤ pb`; equal ranks get
/// different source orders so they stay distinct and ordered.
fn stand_in_pair(pa: usize, pb: usize) -> (TensorSymbol, TensorSymbol) {
    let a = TensorSymbol::irreducible(pa, pa);
    let b = if pa == pb {
        TensorSymbol::irreducible(pb + 2, pb)
    } else {
        TensorSymbol::irreducible(pb, pb)
    };
    (a, b)
}

fn mixed_shape(
    pa: usize,
    pb: usize,
    cfg: &SelectionConfig,
) -> Result<Vec<ContractionPattern>, BasisError> {
    let key = (pa, pb, cfg.seed, cfg.tol.to_bits());
    if let Some(v) = memo().lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let (a, b) = stand_in_pair(pa, pb);
    let target = mixed_count(pa, pb);
    let found = if target == 0 {
        Vec::new()
    } else {
        let mut prefill = pure_shape(pa, cfg)?
            .iter()
            .map(|p| p.relabeled(|_| a))
            .collect::<Result<Vec<_>, _>>()?;
        for p in pure_shape(pb, cfg)? {
            prefill.push(p.relabeled(|_| b)?);
        }
        select_escalating(&[a, b], &MIXED_BOUNDS, target, &prefill, cfg)?
    };
    memo().lock().unwrap().insert(key, found.clone());
    Ok(found)
}

/// Independent pure invariants of one part, selected in increasing
/// exponent. Parts of equal rank share the same shapes.
pub fn pure_invariants(
    h: TensorSymbol,
    cfg: &SelectionConfig,
) -> Result<Vec<ContractionPattern>, BasisError> {
    Ok(pure_shape(h.rank(), cfg)?
        .iter()
        .map(|p| p.relabeled(|_| h))
        .collect::<Result<Vec<_>, _>>()?)
}

/// Mixed invariants of two distinct parts, selected after prefilling the
/// Jacobian with both parts' pure invariants.
pub fn mixed_invariants(
    a: TensorSymbol,
    b: TensorSymbol,
    cfg: &SelectionConfig,
) -> Result<Vec<ContractionPattern>, BasisError> {
    assert_ne!(a, b, "mixed invariants need two distinct parts");
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let (sa, _) = stand_in_pair(lo.rank(), hi.rank());
    Ok(mixed_shape(lo.rank(), hi.rank(), cfg)?
        .iter()
        .map(|p| p.relabeled(|s| if s == sa { lo } else { hi }))
        .collect::<Result<Vec<_>, _>>()?)
}

/// One invariant of a set; mixed members record the two parts they tie.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMember {
    pub pattern: ContractionPattern,
    pub anchors: Option<(TensorSymbol, TensorSymbol)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSet {
    pub mode: Mode,
    pub flavor: Flavor,
    pub lmax: usize,
    pub robust: Option<TensorSymbol>,
    pub seed: u64,
    pub members: Vec<InvariantMember>,
}

impl InvariantSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = &ContractionPattern> {
        self.members.iter().map(|m| &m.pattern)
    }

    pub fn pure_len(&self) -> usize {
        self.members.iter().filter(|m| m.anchors.is_none()).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let members: Vec<serde_json::Value> = self
            .members
            .iter()
            .map(|m| {
                json!({
                    "pattern": m.pattern.to_json(),
                    "anchors": m.anchors.map(|(a, b)| json!([a.to_json(), b.to_json()])),
                })
            })
            .collect();
        json!({
            "schema": crate::SCHEMA,
            "mode": self.mode.to_string(),
            "flavor": self.flavor,
            "lmax": self.lmax,
            "robust": self.robust.map(|r| r.to_json()),
            "seed": self.seed,
            "members": members,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, BasisError> {
        let bad = |m: &str| BasisError::Json(m.to_string());
        if v["schema"].as_str() != Some(crate::SCHEMA) {
            return Err(bad("missing or unknown schema"));
        }
        let mode = v["mode"]
            .as_str()
            .ok_or_else(|| bad("missing mode"))?
            .parse::<Mode>()
            .map_err(|e| bad(&e))?;
        let flavor: Flavor =
            serde_json::from_value(v["flavor"].clone()).map_err(|e| bad(&e.to_string()))?;
        let lmax = v["lmax"].as_u64().ok_or_else(|| bad("missing lmax"))? as usize;
        let seed = v["seed"].as_u64().ok_or_else(|| bad("missing seed"))?;
        let robust = match &v["robust"] {
            serde_json::Value::Null => None,
            r => Some(TensorSymbol::from_json(r)?),
        };
        let mut members = Vec::new();
        for m in v["members"]
            .as_array()
            .ok_or_else(|| bad("missing members"))?
        {
            let pattern = ContractionPattern::from_json(&m["pattern"])?;
            let anchors = match &m["anchors"] {
                serde_json::Value::Null => None,
                serde_json::Value::Array(a) if a.len() == 2 => Some((
                    TensorSymbol::from_json(&a[0])?,
                    TensorSymbol::from_json(&a[1])?,
                )),
                _ => return Err(bad("anchors must be a pair")),
            };
            members.push(InvariantMember { pattern, anchors });
        }
        Ok(Self {
            mode,
            flavor,
            lmax,
            robust,
            seed,
            members,
        })
    }
}

/// Builds a set over the given parts (in the given order).
pub fn build_set(
    symbols: &[TensorSymbol],
    mode: Mode,
    robust: Option<TensorSymbol>,
    flavor: Flavor,
    lmax: usize,
    cfg: &SelectionConfig,
) -> Result<InvariantSet, BasisError> {
    if let Some(r) = robust {
        if r.rank() < 2 {
            return Err(BasisError::RobustRankTooLow(r));
        }
        if !symbols.contains(&r) {
            return Err(BasisError::RobustNotInScope(r));
        }
    }
    let robust = match mode {
        Mode::Specific => robust.or_else(|| default_robust(symbols)),
        Mode::Minimal => None,
    };
    let mut pairs = Vec::new();
    for (i, &a) in symbols.iter().enumerate() {
        for &b in &symbols[i + 1..] {
            let wanted = match (mode, robust) {
                (Mode::Minimal, _) => true,
                (Mode::Specific, Some(r)) => a == r || b == r,
                (Mode::Specific, None) => false,
            };
            if wanted && mixed_count(a.rank(), b.rank()) > 0 {
                pairs.push(if mode == Mode::Specific && b == robust.unwrap() {
                    (b, a)
                } else {
                    (a, b)
                });
            }
        }
    }
    // distinct shapes first, in parallel; assembly below is sequential
    let mut shapes: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(a, b)| (a.rank().min(b.rank()), a.rank().max(b.rank())))
        .collect();
    shapes.sort_unstable();
    shapes.dedup();
    shapes
        .par_iter()
        .map(|&(pa, pb)| mixed_shape(pa, pb, cfg).map(|_| ()))
        .collect::<Result<Vec<()>, BasisError>>()?;

    let mut members = Vec::new();
    for &s in symbols {
        for pattern in pure_invariants(s, cfg)? {
            members.push(InvariantMember {
                pattern,
                anchors: None,
            });
        }
    }
    for (a, b) in pairs {
        for pattern in mixed_invariants(a, b, cfg)? {
            members.push(InvariantMember {
                pattern,
                anchors: Some((a, b)),
            });
        }
    }
    Ok(InvariantSet {
        mode,
        flavor,
        lmax,
        robust,
        seed: cfg.seed,
        members,
    })
}

/// Decompositions of every order of a moment set.
pub fn decompose_all(m: &MomentSet) -> Result<Vec<Decomposition>, BasisError> {
    Ok(m.tensors()
        .iter()
        .map(decompose)
        .collect::<Result<Vec<_>, _>>()?)
}

struct PartInfo {
    symbol: TensorSymbol,
    norm: f64,
    vanishing: bool,
}

fn parts_in_scope(decomps: &[Decomposition], flavor: Flavor) -> Vec<PartInfo> {
    let mut out = Vec::new();
    for d in decomps {
        let scale = VANISHING_RATIO * d.reconstruct().norm().max(1.0);
        for p in &d.parts {
            if flavor == Flavor::Spherical && p.rank != d.order {
                continue;
            }
            let norm = p.data.norm();
            out.push(PartInfo {
                symbol: TensorSymbol::irreducible(d.order, p.rank),
                norm,
                vanishing: norm <= scale,
            });
        }
    }
    out
}

/// Picks the robust part: the lowest-rank part of rank ≥ 2 whose norm
/// exceeds the mean part norm; if none does, the largest non-vanishing part
/// of rank ≥ 2. `None` when no part of rank ≥ 2 is in scope at all.
pub fn select_robust(
    decomps: &[Decomposition],
    flavor: Flavor,
) -> Result<Option<TensorSymbol>, BasisError> {
    let parts = parts_in_scope(decomps, flavor);
    let candidates: Vec<&PartInfo> = parts.iter().filter(|p| p.symbol.rank() >= 2).collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let alive: Vec<&&PartInfo> = candidates.iter().filter(|p| !p.vanishing).collect();
    if alive.is_empty() {
        return Err(BasisError::NoRobustCandidate);
    }
    let mean = parts.iter().map(|p| p.norm).sum::<f64>() / parts.len() as f64;
    let above = alive
        .iter()
        .filter(|p| p.norm > mean)
        .min_by_key(|p| (p.symbol.rank(), p.symbol.source_order()));
    let pick = match above {
        Some(p) => p,
        None => alive
            .iter()
            .max_by(|a, b| a.norm.total_cmp(&b.norm))
            .expect("non-empty"),
    };
    Ok(Some(pick.symbol))
}

fn lmax_of(decomps: &[Decomposition]) -> usize {
    decomps.iter().map(|d| d.order).max().unwrap_or(0)
}

/// All pure invariants plus mixed invariants tying every other part to the
/// robust one (given, or chosen from the data).
pub fn specific_flexible_basis(
    decomps: &[Decomposition],
    robust: Option<TensorSymbol>,
    flavor: Flavor,
    cfg: &SelectionConfig,
) -> Result<InvariantSet, BasisError> {
    let parts = parts_in_scope(decomps, flavor);
    let robust = match robust {
        Some(r) => {
            if r.rank() < 2 {
                return Err(BasisError::RobustRankTooLow(r));
            }
            let info = parts
                .iter()
                .find(|p| p.symbol == r)
                .ok_or(BasisError::RobustNotInScope(r))?;
            if info.vanishing {
                return Err(BasisError::RobustVanishes(r));
            }
            Some(r)
        }
        None => select_robust(decomps, flavor)?,
    };
    let symbols: Vec<TensorSymbol> = parts.iter().map(|p| p.symbol).collect();
    build_set(
        &symbols,
        Mode::Specific,
        robust,
        flavor,
        lmax_of(decomps),
        cfg,
    )
}

/// All pure invariants plus mixed invariants for every pair of parts.
pub fn minimal_flexible_set(
    decomps: &[Decomposition],
    flavor: Flavor,
    cfg: &SelectionConfig,
) -> Result<InvariantSet, BasisError> {
    let symbols: Vec<TensorSymbol> = parts_in_scope(decomps, flavor)
        .iter()
        .map(|p| p.symbol)
        .collect();
    build_set(&symbols, Mode::Minimal, None, flavor, lmax_of(decomps), cfg)
}

/// Tensors for every moment order and every part of `m`.
pub fn moment_assignment(m: &MomentSet) -> Result<Assignment, BasisError> {
    let mut pairs = Vec::new();
    for (l, t) in m.tensors().iter().enumerate() {
        pairs.push((TensorSymbol::Moment(l), t.clone()));
        for p in decompose(t)?.parts {
            pairs.push((TensorSymbol::irreducible(l, p.rank), p.data));
        }
    }
    Ok(Assignment::new(pairs)?)
}

/// Values of arbitrary patterns over the moments and parts of `m`.
pub fn evaluate_patterns<'a>(
    patterns: impl IntoIterator<Item = &'a ContractionPattern>,
    m: &MomentSet,
) -> Result<Vec<f64>, BasisError> {
    let a = moment_assignment(m)?;
    let patterns: Vec<&ContractionPattern> = patterns.into_iter().collect();
    Ok(patterns
        .par_iter()
        .map(|p| a.value(p))
        .collect::<Result<Vec<f64>, _>>()?)
}

/// Descriptor vector of a set, in member order.
pub fn evaluate_set(set: &InvariantSet, m: &MomentSet) -> Result<Vec<f64>, BasisError> {
    if set.flavor != m.flavor() {
        return Err(BasisError::FlavorMismatch {
            set: set.flavor,
            moments: m.flavor(),
        });
    }
    if set.lmax > m.lmax() {
        return Err(BasisError::OrderMismatch {
            need: set.lmax,
            have: m.lmax(),
        });
    }
    evaluate_patterns(set.patterns(), m)
}

/// On-disk store of generated sets, one JSON file per request.
#[derive(Debug, Clone)]
pub struct SetCache {
    dir: PathBuf,
}

impl SetCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(
        &self,
        mode: Mode,
        flavor: Flavor,
        lmax: usize,
        robust: Option<TensorSymbol>,
        cfg: &SelectionConfig,
    ) -> PathBuf {
        let r = robust.map_or("auto".to_string(), |r| {
            format!("{}-{}", r.source_order(), r.rank())
        });
        self.dir.join(format!(
            "{mode}-{flavor}-l{lmax}-r{r}-s{}-t{:e}.json",
            cfg.seed, cfg.tol
        ))
    }

    /// Cached set for all parts up to `lmax`, building and storing it on a
    /// miss. Unreadable cache entries are rebuilt.
    pub fn get_or_build(
        &self,
        mode: Mode,
        flavor: Flavor,
        lmax: usize,
        robust: Option<TensorSymbol>,
        cfg: &SelectionConfig,
    ) -> Result<InvariantSet, BasisError> {
        let path = self.path(mode, flavor, lmax, robust, cfg);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(set) = serde_json::from_str(&text)
                .map_err(|e| BasisError::Json(e.to_string()))
                .and_then(|v| InvariantSet::from_json(&v))
            {
                return Ok(set);
            }
        }
        let set = build_set(
            &symbols_in_scope(lmax, flavor),
            mode,
            robust,
            flavor,
            lmax,
            cfg,
        )?;
        std::fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension("tmp");
        std::fs::write(
            &tmp,
            serde_json::to_string_pretty(&set.to_json()).expect("JSON value"),
        )?;
        std::fs::rename(&tmp, &path)?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(l: usize, p: usize) -> TensorSymbol {
        TensorSymbol::irreducible(l, p)
    }

    #[test]
    fn counts_follow_part_ranks() {
        assert_eq!(
            order_counts(5),
            CountRow {
                pure: 13,
                mixed: 5,
                total: 18
            }
        );
        let r = expected_counts(6, Flavor::Volumetric, Mode::Specific);
        assert_eq!((r.pure, r.mixed, r.total), (51, 30, 81));
        assert_eq!(
            expected_counts(3, Flavor::Volumetric, Mode::Minimal).total,
            22
        );
        assert_eq!(
            expected_counts(3, Flavor::Spherical, Mode::Minimal).total,
            15
        );
        assert_eq!(
            expected_counts(6, Flavor::Spherical, Mode::Specific).total,
            46
        );
    }

    #[test]
    fn scope_and_default_robust() {
        let s = symbols_in_scope(3, Flavor::Volumetric);
        assert_eq!(
            s,
            vec![h(0, 0), h(1, 1), h(2, 2), h(2, 0), h(3, 3), h(3, 1)]
        );
        assert_eq!(default_robust(&s), Some(h(2, 2)));
        assert_eq!(
            symbols_in_scope(2, Flavor::Spherical),
            vec![h(0, 0), h(1, 1), h(2, 2)]
        );
        assert_eq!(
            default_robust(&symbols_in_scope(1, Flavor::Volumetric)),
            None
        );
    }

    #[test]
    fn second_rank_pure_and_mixed_shapes() {
        let cfg = SelectionConfig::default();
        let pure: Vec<String> = pure_invariants(h(2, 2), &cfg)
            .unwrap()
            .iter()
            .map(|p| p.notation())
            .collect();
        assert_eq!(pure, vec!["(1,2)(2,1)", "(1,2)(2,3)(3,1)"]);
        let mixed = mixed_invariants(h(2, 2), h(1, 1), &cfg).unwrap();
        assert_eq!(mixed.len(), 2);
        assert!(mixed.iter().all(|p| p.symbols() == vec![h(1, 1), h(2, 2)]));
        let one = mixed_invariants(h(1, 1), h(3, 1), &cfg).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].notation(), "(1)(1)");
        assert!(mixed_invariants(h(0, 0), h(3, 3), &cfg).unwrap().is_empty());
    }

    #[test]
    fn equal_rank_pairs_keep_their_symbols() {
        let cfg = SelectionConfig::default();
        let m = mixed_invariants(h(3, 1), h(1, 1), &cfg).unwrap();
        assert_eq!(m[0].symbols(), vec![h(1, 1), h(3, 1)]);
    }

    #[test]
    fn set_json_roundtrip() {
        let cfg = SelectionConfig::default();
        let set = build_set(
            &symbols_in_scope(2, Flavor::Volumetric),
            Mode::Specific,
            None,
            Flavor::Volumetric,
            2,
            &cfg,
        )
        .unwrap();
        assert_eq!(set.len(), 7);
        assert_eq!(set.robust, Some(h(2, 2)));
        let back = InvariantSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn robust_must_have_rank_two() {
        let cfg = SelectionConfig::default();
        let err = build_set(
            &symbols_in_scope(2, Flavor::Volumetric),
            Mode::Specific,
            Some(h(1, 1)),
            Flavor::Volumetric,
            2,
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, BasisError::RobustRankTooLow(_)));
    }

    #[test]
    fn robust_selection_on_data() {
        let zero = MomentSet::zeros(Flavor::Volumetric, 3);
        let d = decompose_all(&zero).unwrap();
        assert!(matches!(
            select_robust(&d, Flavor::Volumetric),
            Err(BasisError::NoRobustCandidate)
        ));
        let d1 = decompose_all(&MomentSet::zeros(Flavor::Volumetric, 1)).unwrap();
        assert_eq!(select_robust(&d1, Flavor::Volumetric).unwrap(), None);
    }
}
