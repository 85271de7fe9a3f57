//! Orderly generation of pattern classes.
//!
//! Patterns are written factor by factor (see the canonical module). A
//! depth-first search chooses, for each new factor, how many of each earlier
//! factor's open labels it closes, how many traces it carries and how many
//! labels it opens, trying choices in token order. A prefix is kept only if
//! no reordering of its factors writes a smaller string, so each class is
//! produced exactly once, as its canonical member, in canonical string order.

use super::canonical::{is_minimal, Structure, Token, Writer};
use super::{ContractionPattern, TensorSymbol};

/// Which candidates to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateFilter {
    /// Drop products that split into separately contracted groups.
    pub connected: bool,
    /// Allow traces on moment tensors.
    pub moment_traces: bool,
    /// Allow traces on irreducible parts (they vanish identically).
    pub traceless_traces: bool,
}

impl CandidateFilter {
    /// Every class, including traces and disconnected products.
    pub const ALL: Self = Self {
        connected: false,
        moment_traces: true,
        traceless_traces: true,
    };

    /// Classes that can contribute a new independent invariant.
    pub const SELECTION: Self = Self {
        connected: true,
        moment_traces: true,
        traceless_traces: false,
    };

    fn traces_allowed(&self, s: TensorSymbol) -> bool {
        if s.is_traceless() {
            self.traceless_traces
        } else {
            self.moment_traces
        }
    }
}

struct Search<'a> {
    seq: &'a [TensorSymbol],
    class_seq: Vec<usize>,
    filter: CandidateFilter,
    s: Structure,
    remaining: Vec<usize>,
    chunks: Vec<Vec<Token>>,
    labels: Vec<Vec<u32>>,
    out: Vec<(Vec<Token>, ContractionPattern)>,
}

impl<'a> Search<'a> {
    fn new(seq: &'a [TensorSymbol], filter: CandidateFilter) -> Self {
        let n = seq.len();
        let mut distinct = seq.to_vec();
        distinct.dedup();
        let class_seq: Vec<usize> = seq
            .iter()
            .map(|x| distinct.iter().position(|d| d == x).unwrap())
            .collect();
        let rank: Vec<usize> = seq.iter().map(|x| x.rank()).collect();
        let remaining = (0..n).map(|k| rank[k + 1..].iter().sum()).collect();
        Self {
            seq,
            class_seq: class_seq.clone(),
            filter,
            s: Structure {
                class: class_seq,
                rank,
                w: vec![vec![0; n]; n],
                loops: vec![0; n],
            },
            remaining,
            chunks: Vec::new(),
            labels: Vec::new(),
            out: Vec::new(),
        }
    }

    fn prefix(&self, k: usize) -> Structure {
        Structure {
            class: self.s.class[..=k].to_vec(),
            rank: self.s.rank[..=k].to_vec(),
            w: self.s.w[..=k]
                .iter()
                .map(|row| row[..=k].to_vec())
                .collect(),
            loops: self.s.loops[..=k].to_vec(),
        }
    }

    /// Every component of the placed factors still has open labels, or the
    /// pattern is complete and forms one component.
    fn components_ok(&self, k: usize, writer_open: &[usize]) -> bool {
        let n = k + 1;
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(c: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while c[r] != r {
                r = c[r];
            }
            c[x] = r;
            r
        }
        for a in 0..n {
            for b in a + 1..n {
                if self.s.w[a][b] > 0 {
                    let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                    comp[ra] = rb;
                }
            }
        }
        let roots: Vec<usize> = (0..n).map(|v| find(&mut comp, v)).collect();
        if k + 1 == self.seq.len() {
            return roots.iter().all(|r| *r == roots[0]);
        }
        let mut open = vec![0usize; n];
        for v in 0..n {
            open[roots[v]] += writer_open[v];
        }
        (0..n).all(|v| roots[v] != v || open[v] > 0)
    }

    fn run(&mut self, k: usize, writer: &Writer, open: &[usize]) {
        let n = self.seq.len();
        if k == n {
            let p = ContractionPattern::from_factor_labels(self.seq.to_vec(), &self.labels)
                .expect("generated labels pair up");
            self.out.push((self.chunks.concat(), p));
            return;
        }
        let r = self.s.rank[k];
        let origins: Vec<usize> = (0..k).filter(|&u| open[u] > 0).collect();
        let total_open: usize = open.iter().sum();
        let last = k + 1 == n;
        let mut splits = Vec::new();
        let mut cur = vec![0usize; origins.len()];
        split(&origins, open, r, 0, &mut cur, &mut splits);
        let mut choices: Vec<(Vec<Token>, Vec<usize>, usize)> = Vec::new();
        for m in splits {
            let closed: usize = m.iter().sum();
            let max_loops = if self.filter.traces_allowed(self.seq[k]) {
                (r - closed) / 2
            } else {
                0
            };
            for l in 0..=max_loops {
                let fresh = r - closed - 2 * l;
                if last && (closed != total_open || fresh != 0) {
                    continue;
                }
                if !last && total_open - closed + fresh > self.remaining[k] {
                    continue;
                }
                self.set(k, &origins, &m, l);
                let (tok, _) = writer.clone().write(&self.s, k);
                choices.push((tok, m.clone(), l));
            }
        }
        self.clear(k);
        choices.sort();
        for (tok, m, l) in choices {
            self.set(k, &origins, &m, l);
            let mut w = writer.clone();
            let (_, lab) = w.write(&self.s, k);
            let mut next_open = open.to_vec();
            for (&u, &mu) in origins.iter().zip(&m) {
                next_open[u] -= mu;
            }
            next_open.push(r - m.iter().sum::<usize>() - 2 * l);
            if self.filter.connected && !self.components_ok(k, &next_open) {
                continue;
            }
            self.chunks.push(tok);
            self.labels.push(lab);
            if is_minimal(&self.prefix(k), &self.class_seq[..=k], &self.chunks) {
                self.run(k + 1, &w, &next_open);
            }
            self.chunks.pop();
            self.labels.pop();
        }
        self.clear(k);
    }

    fn set(&mut self, k: usize, origins: &[usize], m: &[usize], loops: usize) {
        self.clear(k);
        for (&u, &mu) in origins.iter().zip(m) {
            self.s.w[u][k] = mu;
            self.s.w[k][u] = mu;
        }
        self.s.loops[k] = loops;
    }

    fn clear(&mut self, k: usize) {
        for u in 0..k {
            self.s.w[u][k] = 0;
            self.s.w[k][u] = 0;
        }
        self.s.loops[k] = 0;
    }
}

fn split(
    origins: &[usize],
    open: &[usize],
    budget: usize,
    i: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if i == origins.len() {
        out.push(cur.clone());
        return;
    }
    for m in 0..=open[origins[i]].min(budget) {
        cur[i] = m;
        split(origins, open, budget - m, i + 1, cur, out);
    }
    cur[i] = 0;
}

fn classes_with_keys(
    seq: &[TensorSymbol],
    filter: CandidateFilter,
) -> Vec<(Vec<Token>, ContractionPattern)> {
    assert!(
        seq.windows(2).all(|w| w[0] <= w[1]),
        "symbol sequence must be sorted"
    );
    if seq.is_empty() {
        return Vec::new();
    }
    if seq.iter().map(|s| s.rank()).sum::<usize>() % 2 == 1 {
        return Vec::new();
    }
    let mut search = Search::new(seq, filter);
    search.run(0, &Writer::new(seq.len()), &[]);
    search.out
}

/// All classes over one sorted factor sequence, in canonical string order.
pub fn sequence_classes(seq: &[TensorSymbol], filter: CandidateFilter) -> Vec<ContractionPattern> {
    classes_with_keys(seq, filter)
        .into_iter()
        .map(|(_, p)| p)
        .collect()
}

/// Exponent vectors with the given factor count, most factors of the
/// first symbol first.
fn exponent_vectors(k: usize, n: usize, max_each: usize, require_all: bool) -> Vec<Vec<usize>> {
    fn go(
        i: usize,
        left: usize,
        k: usize,
        max_each: usize,
        min_each: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if i + 1 == k {
            if left <= max_each && left >= min_each {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for e in (min_each..=left.min(max_each)).rev() {
            cur.push(e);
            go(i + 1, left - e, k, max_each, min_each, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    go(
        0,
        n,
        k,
        max_each,
        usize::from(require_all),
        &mut Vec::new(),
        &mut out,
    );
    out
}

fn expand(symbols: &[TensorSymbol], e: &[usize]) -> Vec<TensorSymbol> {
    symbols
        .iter()
        .zip(e)
        .flat_map(|(s, &k)| std::iter::repeat_n(*s, k))
        .collect()
}

fn sorted_distinct(symbols: &[TensorSymbol]) -> Vec<TensorSymbol> {
    let mut s = symbols.to_vec();
    s.sort();
    s.dedup();
    s
}

/// All pattern classes over products of `symbols` with at most `max_factors`
/// factors and total rank at most `max_total_rank`, ordered by total rank,
/// then factor count, then factor sequence and canonical string.
pub fn enumerate(
    symbols: &[TensorSymbol],
    max_factors: usize,
    max_total_rank: usize,
) -> Vec<ContractionPattern> {
    let symbols = sorted_distinct(symbols);
    let mut all = Vec::new();
    for n in 1..=max_factors {
        for e in exponent_vectors(symbols.len(), n, n, false) {
            let seq = expand(&symbols, &e);
            let rank: usize = seq.iter().map(|s| s.rank()).sum();
            if rank > max_total_rank {
                continue;
            }
            for (key, p) in classes_with_keys(&seq, CandidateFilter::ALL) {
                all.push(((rank, n, seq.clone(), key), p));
            }
        }
    }
    all.sort_by(|a, b| a.0.cmp(&b.0));
    all.into_iter().map(|(_, p)| p).collect()
}

/// Bounds on a candidate pool for independence selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolBounds {
    pub max_exponent: usize,
    pub max_factors: usize,
    pub max_total_rank: usize,
    /// Every listed symbol must occur in each candidate.
    pub require_all: bool,
}

/// Candidates in selection order: by factor count, then factor sequence
/// (more factors of lower symbols first), then canonical string. Lazy per
/// factor sequence.
pub fn candidate_pool(
    symbols: &[TensorSymbol],
    filter: CandidateFilter,
    bounds: PoolBounds,
) -> impl Iterator<Item = ContractionPattern> {
    let symbols = sorted_distinct(symbols);
    (1..=bounds.max_factors)
        .flat_map(move |n| {
            let symbols = symbols.clone();
            exponent_vectors(symbols.len(), n, bounds.max_exponent, bounds.require_all)
                .into_iter()
                .map(move |e| expand(&symbols, &e))
        })
        .filter(move |seq| seq.iter().map(|s| s.rank()).sum::<usize>() <= bounds.max_total_rank)
        .flat_map(move |seq| sequence_classes(&seq, filter))
}
