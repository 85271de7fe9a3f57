//! Greedy selection of functionally independent invariants.
//!
//! Each candidate pattern is differentiated with respect to the free
//! coefficients of every tensor in scope, at one random point. The candidate
//! is kept iff its gradient row raises the rank of the rows kept so far,
//! tested by orthogonalizing against an orthonormal row store.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::irreducible::{detrace, traceless_basis};
use crate::patterns::{ContractionPattern, TensorSymbol};
use crate::tensor_core::{compact_len, Network, SymTensor3, TensorError};

#[derive(Debug, Error)]
pub enum IndependenceError {
    #[error("found {found} of {target} independent invariants before the candidates ran out; enlarge the candidate pool")]
    TargetNotReached { found: usize, target: usize },
    #[error("symbol {0} has no assigned tensor")]
    SymbolNotInScope(TensorSymbol),
    #[error("tensor for {symbol} has order {got}, expected {expected}")]
    OrderMismatch {
        symbol: TensorSymbol,
        expected: usize,
        got: usize,
    },
    #[error("tolerance {0} must lie in (0, 1e-2)")]
    BadTolerance(f64),
    #[error("examined {0} candidates without finishing")]
    TooManyCandidates(usize),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("writing the selection trace failed: {0}")]
    Trace(#[from] std::io::Error),
}

/// Parameters of one selection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub seed: u64,
    /// Relative residual a gradient row must keep to count as new.
    pub tol: f64,
    pub max_candidates: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            tol: 1e-8,
            max_candidates: 1_000_000,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), IndependenceError> {
        if !(self.tol > 0.0 && self.tol < 1e-2) {
            return Err(IndependenceError::BadTolerance(self.tol));
        }
        Ok(())
    }
}

/// Tensors standing in for each symbol at the evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    symbols: Vec<TensorSymbol>,
    tensors: Vec<SymTensor3>,
}

impl Assignment {
    pub fn new(pairs: Vec<(TensorSymbol, SymTensor3)>) -> Result<Self, IndependenceError> {
        let mut pairs = pairs;
        pairs.sort_by_key(|a| a.0);
        pairs.dedup_by(|a, b| a.0 == b.0);
        for (s, t) in &pairs {
            if t.order() != s.rank() {
                return Err(IndependenceError::OrderMismatch {
                    symbol: *s,
                    expected: s.rank(),
                    got: t.order(),
                });
            }
        }
        let (symbols, tensors) = pairs.into_iter().unzip();
        Ok(Self { symbols, tensors })
    }

    pub fn symbols(&self) -> &[TensorSymbol] {
        &self.symbols
    }

    pub fn tensor(&self, s: TensorSymbol) -> Option<&SymTensor3> {
        self.index(s).map(|i| &self.tensors[i])
    }

    fn index(&self, s: TensorSymbol) -> Option<usize> {
        self.symbols.binary_search(&s).ok()
    }

    fn factors(&self, p: &ContractionPattern) -> Result<Vec<usize>, IndependenceError> {
        p.factors()
            .iter()
            .map(|&s| self.index(s).ok_or(IndependenceError::SymbolNotInScope(s)))
            .collect()
    }

    /// Value of a pattern at this point.
    pub fn value(&self, p: &ContractionPattern) -> Result<f64, IndependenceError> {
        let idx = self.factors(p)?;
        let factors: Vec<&SymTensor3> = idx.iter().map(|&i| &self.tensors[i]).collect();
        Ok(Network::new(&p.ranks(), p.pairing())?.value(&factors)?)
    }

    /// Value and gradient of a pattern in the free coordinates of `space`.
    pub fn gradient(
        &self,
        p: &ContractionPattern,
        space: &CoordinateSpace,
    ) -> Result<(f64, Vec<f64>), IndependenceError> {
        let idx = self.factors(p)?;
        let factors: Vec<&SymTensor3> = idx.iter().map(|&i| &self.tensors[i]).collect();
        let (value, slots) = Network::new(&p.ranks(), p.pairing())?.slot_gradients(&factors)?;
        let mut row = vec![0.0; space.dim()];
        for (&s, g) in p.factors().iter().zip(&slots) {
            let k = space
                .position(s)
                .ok_or(IndependenceError::SymbolNotInScope(s))?;
            let out = &mut row[space.offsets[k]..space.offsets[k] + space.dims[k]];
            if s.is_traceless() {
                for (o, b) in out.iter_mut().zip(traceless_basis(s.rank())) {
                    *o += b.iter().zip(g).map(|(x, y)| x * y).sum::<f64>();
                }
            } else {
                for (o, x) in out.iter_mut().zip(g) {
                    *o += x;
                }
            }
        }
        Ok((value, row))
    }
}

/// Random point: uniform `[-1, 1]` coefficients, detraced for irreducible
/// symbols.
pub fn assign_random(symbols: &[TensorSymbol], cfg: &SelectionConfig) -> Assignment {
    let mut symbols = symbols.to_vec();
    symbols.sort();
    symbols.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tensors = symbols
        .iter()
        .map(|s| {
            let t = SymTensor3::random_uniform(s.rank(), &mut rng);
            if s.is_traceless() {
                detrace(&t).expect("rank within decomposition limit").data
            } else {
                t
            }
        })
        .collect();
    Assignment { symbols, tensors }
}

/// Free coordinates of the symbols in scope: compact coefficients for
/// moments, an orthonormal traceless basis for irreducible parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSpace {
    symbols: Vec<TensorSymbol>,
    offsets: Vec<usize>,
    dims: Vec<usize>,
}

impl CoordinateSpace {
    pub fn new(symbols: &[TensorSymbol]) -> Self {
        let mut symbols = symbols.to_vec();
        symbols.sort();
        symbols.dedup();
        let dims: Vec<usize> = symbols
            .iter()
            .map(|s| {
                if s.is_traceless() {
                    2 * s.rank() + 1
                } else {
                    compact_len(s.rank())
                }
            })
            .collect();
        let offsets = dims
            .iter()
            .scan(0, |acc, d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        Self {
            symbols,
            offsets,
            dims,
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn symbols(&self) -> &[TensorSymbol] {
        &self.symbols
    }

    fn position(&self, s: TensorSymbol) -> Option<usize> {
        self.symbols.binary_search(&s).ok()
    }
}

/// Orthonormal store of accepted gradient rows.
#[derive(Debug, Clone)]
pub struct JacobianBasis {
    rows: Vec<Vec<f64>>,
    width: usize,
    tol: f64,
}

impl JacobianBasis {
    pub fn new(width: usize, tol: f64) -> Self {
        Self {
            rows: Vec::new(),
            width,
            tol,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Residual of `row` after removing its components along the stored rows
    /// (two modified Gram–Schmidt passes).
    fn residual(&self, row: &[f64]) -> Vec<f64> {
        let mut v = row.to_vec();
        for _ in 0..2 {
            for b in &self.rows {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= d * y;
                }
            }
        }
        v
    }

    /// Appends the row if it is independent; returns the residual norm
    /// relative to `max(|row|, 1)` and whether it was kept.
    pub fn insert(&mut self, row: &[f64]) -> (f64, bool) {
        assert_eq!(row.len(), self.width, "row width");
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r = self.residual(row);
        let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rel = rnorm / norm.max(1.0);
        let keep = rel > self.tol;
        if keep {
            self.rows.push(r.into_iter().map(|x| x / rnorm).collect());
        }
        (rel, keep)
    }
}

/// Outcome of testing one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub accepted: bool,
    pub residual: f64,
}

pub fn try_accept(
    p: &ContractionPattern,
    basis: &mut JacobianBasis,
    space: &CoordinateSpace,
    assignment: &Assignment,
) -> Result<Decision, IndependenceError> {
    let (_, row) = assignment.gradient(p, space)?;
    let (residual, accepted) = basis.insert(&row);
    Ok(Decision { accepted, residual })
}

/// How many invariants to look for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Count(usize),
    Exhaust,
}

/// Result of a selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub members: Vec<ContractionPattern>,
    pub residuals: Vec<f64>,
    /// Rank contributed by the prefilled patterns.
    pub prefill_rank: usize,
    pub examined: usize,
}

const BATCH: usize = 32;

/// Scans `candidates` in order and keeps each one that raises the Jacobian
/// rank. `prefill` rows enter the basis first and are not reported.
pub fn select(
    candidates: impl IntoIterator<Item = ContractionPattern>,
    target: Target,
    prefill: &[ContractionPattern],
    assignment: &Assignment,
    cfg: &SelectionConfig,
    mut trace: Option<&mut dyn Write>,
) -> Result<Selection, IndependenceError> {
    cfg.validate()?;
    let space = CoordinateSpace::new(assignment.symbols());
    let mut basis = JacobianBasis::new(space.dim(), cfg.tol);
    for p in prefill {
        try_accept(p, &mut basis, &space, assignment)?;
    }
    let mut out = Selection {
        members: Vec::new(),
        residuals: Vec::new(),
        prefill_rank: basis.rank(),
        examined: 0,
    };
    let done = |out: &Selection| matches!(target, Target::Count(n) if out.members.len() >= n);
    if done(&out) {
        return Ok(out);
    }
    let mut it = candidates.into_iter();
    loop {
        let batch: Vec<ContractionPattern> = it.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        let rows: Vec<Result<(f64, Vec<f64>), IndependenceError>> = batch
            .par_iter()
            .map(|p| assignment.gradient(p, &space))
            .collect();
        for (p, row) in batch.into_iter().zip(rows) {
            let (_, row) = row?;
            out.examined += 1;
            let (residual, accepted) = basis.insert(&row);
            if let Some(w) = trace.as_deref_mut() {
                serde_json::to_writer(
                    &mut *w,
                    &json!({"pattern": p.to_json(), "residual": residual, "accepted": accepted}),
                )
                .map_err(std::io::Error::from)?;
                writeln!(w)?;
            }
            if accepted {
                out.members.push(p);
                out.residuals.push(residual);
                if done(&out) {
                    return Ok(out);
                }
            }
            if basis.rank() >= space.dim() {
                break;
            }
            if out.examined >= cfg.max_candidates {
                return Err(IndependenceError::TooManyCandidates(out.examined));
            }
        }
        if basis.rank() >= space.dim() {
            break;
        }
    }
    match target {
        Target::Count(n) if out.members.len() < n => Err(IndependenceError::TargetNotReached {
            found: out.members.len(),
            target: n,
        }),
        _ => Ok(out),
    }
}

/// Rank of the Jacobian of `patterns` at the given point.
pub fn jacobian_rank(
    patterns: &[ContractionPattern],
    assignment: &Assignment,
    tol: f64,
) -> Result<usize, IndependenceError> {
    let space = CoordinateSpace::new(assignment.symbols());
    let rows: Vec<Result<(f64, Vec<f64>), IndependenceError>> = patterns
        .par_iter()
        .map(|p| assignment.gradient(p, &space))
        .collect();
    let mut basis = JacobianBasis::new(space.dim(), tol);
    for row in rows {
        basis.insert(&row?.1);
    }
    Ok(basis.rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irreducible::is_traceless;
    use crate::patterns::{candidate_pool, CandidateFilter, PoolBounds};

    fn m(l: usize) -> TensorSymbol {
        TensorSymbol::Moment(l)
    }

    fn h(l: usize, p: usize) -> TensorSymbol {
        TensorSymbol::irreducible(l, p)
    }

    fn pat(f: Vec<TensorSymbol>, s: &str) -> ContractionPattern {
        ContractionPattern::from_notation(f, s).unwrap()
    }

    #[test]
    fn random_assignment_is_seeded_and_traceless() {
        let cfg = SelectionConfig::default();
        let syms = [h(3, 3), m(2), h(4, 2)];
        let a = assign_random(&syms, &cfg);
        assert_eq!(a, assign_random(&syms, &cfg));
        let b = assign_random(&syms, &SelectionConfig { seed: 2, ..cfg });
        assert_ne!(a, b);
        assert!(is_traceless(a.tensor(h(3, 3)).unwrap(), 1e-12));
        assert!(is_traceless(a.tensor(h(4, 2)).unwrap(), 1e-12));
    }

    #[test]
    fn scalar_then_square_dependence() {
        let cfg = SelectionConfig::default();
        let a = assign_random(&[m(0), m(1)], &cfg);
        let space = CoordinateSpace::new(a.symbols());
        let mut basis = JacobianBasis::new(space.dim(), cfg.tol);
        let d = try_accept(&pat(vec![m(0)], "()"), &mut basis, &space, &a).unwrap();
        assert!(d.accepted);
        let sq = pat(vec![m(1); 2], "(1)(1)");
        assert!(try_accept(&sq, &mut basis, &space, &a).unwrap().accepted);
        let quad = pat(vec![m(1); 4], "(1)(1)(2)(2)");
        let d = try_accept(&quad, &mut basis, &space, &a).unwrap();
        assert!(!d.accepted);
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn third_order_irreducible_needs_four() {
        let cfg = SelectionConfig::default();
        let a = assign_random(&[h(3, 3)], &cfg);
        let bounds = PoolBounds {
            max_exponent: 10,
            max_factors: 10,
            max_total_rank: 30,
            require_all: true,
        };
        let pool = candidate_pool(&[h(3, 3)], CandidateFilter::SELECTION, bounds);
        let s = select(pool, Target::Count(4), &[], &a, &cfg, None).unwrap();
        let exps: Vec<usize> = s.members.iter().map(|p| p.factors().len()).collect();
        assert_eq!(exps, vec![2, 4, 6, 10]);
    }

    #[test]
    fn target_not_reached() {
        let cfg = SelectionConfig::default();
        let a = assign_random(&[m(1)], &cfg);
        let bounds = PoolBounds {
            max_exponent: 4,
            max_factors: 4,
            max_total_rank: 8,
            require_all: true,
        };
        let pool = candidate_pool(&[m(1)], CandidateFilter::SELECTION, bounds);
        let err = select(pool, Target::Count(2), &[], &a, &cfg, None).unwrap_err();
        assert!(matches!(
            err,
            IndependenceError::TargetNotReached {
                found: 1,
                target: 2
            }
        ));
    }

    #[test]
    fn trace_lines_are_json() {
        let cfg = SelectionConfig::default();
        let a = assign_random(&[h(2, 2)], &cfg);
        let bounds = PoolBounds {
            max_exponent: 4,
            max_factors: 4,
            max_total_rank: 8,
            require_all: true,
        };
        let pool = candidate_pool(&[h(2, 2)], CandidateFilter::SELECTION, bounds);
        let mut buf = Vec::new();
        let s = select(pool, Target::Exhaust, &[], &a, &cfg, Some(&mut buf)).unwrap();
        assert_eq!(s.members.len(), 2);
        let text = String::from_utf8(buf).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["accepted"], true);
    }

    #[test]
    fn bad_tolerance() {
        let cfg = SelectionConfig {
            tol: 0.5,
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(IndependenceError::BadTolerance(_))
        ));
    }
}
