//! Canonical representatives of contraction patterns.
//!
//! A pattern is written factor by factor. Each factor's index slots are
//! emitted as tokens: first the labels it closes (most recently opened label
//! first), then its traces as open/close pairs, then the labels it opens.
//! Comparing token strings, a close beats an open and a more recent label
//! beats an older one. For a fixed factor order this greedy labeling is the
//! smallest string; the canonical string is the minimum over all factor
//! orders that keep equal symbols together in ascending symbol order.

use std::collections::BTreeMap;

use super::{ContractionPattern, PatternError, TensorSymbol};

/// Upper bound on factors for canonicalization.
pub const MAX_CANONICAL_NODES: usize = 12;

pub(crate) type Token = i64;
pub(crate) const OPEN: Token = 1;

pub(crate) fn close(label: u32) -> Token {
    -(label as Token) - 1
}

/// Adjacency form of a (possibly partial) pattern.
#[derive(Debug, Clone)]
pub(crate) struct Structure {
    pub class: Vec<usize>,
    pub rank: Vec<usize>,
    pub w: Vec<Vec<usize>>,
    pub loops: Vec<usize>,
}

/// Labeling state while writing factors in some order.
#[derive(Debug, Clone)]
pub(crate) struct Writer {
    lo: Vec<u32>,
    cnt: Vec<usize>,
    placed: Vec<bool>,
    next: u32,
}

impl Writer {
    pub fn new(n: usize) -> Self {
        Self {
            lo: vec![0; n],
            cnt: vec![0; n],
            placed: vec![false; n],
            next: 0,
        }
    }

    /// Writes node `v`; returns its tokens and the label at each slot.
    pub fn write(&mut self, s: &Structure, v: usize) -> (Vec<Token>, Vec<u32>) {
        let mut closes: Vec<u32> = Vec::new();
        let mut closed = 0;
        for u in 0..s.rank.len() {
            if !self.placed[u] || s.w[u][v] == 0 {
                continue;
            }
            let m = s.w[u][v];
            let top = self.lo[u] + self.cnt[u] as u32;
            closes.extend((top - m as u32)..top);
            self.cnt[u] -= m;
            closed += m;
        }
        closes.sort_unstable_by(|a, b| b.cmp(a));
        let mut tokens: Vec<Token> = closes.iter().map(|&l| close(l)).collect();
        let mut labels = closes;
        for _ in 0..s.loops[v] {
            tokens.push(OPEN);
            tokens.push(close(self.next));
            labels.push(self.next);
            labels.push(self.next);
            self.next += 1;
        }
        let fresh = s.rank[v] - closed - 2 * s.loops[v];
        self.lo[v] = self.next;
        self.cnt[v] = fresh;
        for _ in 0..fresh {
            tokens.push(OPEN);
            labels.push(self.next);
            self.next += 1;
        }
        self.placed[v] = true;
        (tokens, labels)
    }
}

struct Best {
    chunks: Vec<Vec<Token>>,
    labels: Vec<Vec<u32>>,
    order: Vec<usize>,
}

/// Smallest token string over admissible node orders.
fn minimize(s: &Structure, class_seq: &[usize]) -> Best {
    fn go(
        s: &Structure,
        class_seq: &[usize],
        writer: &Writer,
        cur: &mut Vec<(usize, Vec<Token>, Vec<u32>)>,
        best: &mut Option<Best>,
    ) {
        let depth = cur.len();
        if depth == class_seq.len() {
            let better = match best {
                None => true,
                Some(b) => cur.iter().map(|c| &c.1).lt(b.chunks.iter()),
            };
            if better {
                *best = Some(Best {
                    chunks: cur.iter().map(|c| c.1.clone()).collect(),
                    labels: cur.iter().map(|c| c.2.clone()).collect(),
                    order: cur.iter().map(|c| c.0).collect(),
                });
            }
            return;
        }
        for v in 0..s.rank.len() {
            if s.class[v] != class_seq[depth] || cur.iter().any(|c| c.0 == v) {
                continue;
            }
            let mut w = writer.clone();
            let (tok, lab) = w.write(s, v);
            if let Some(b) = best {
                let tied = cur.iter().zip(&b.chunks).all(|(c, bc)| c.1 == *bc);
                if tied && tok > b.chunks[depth] {
                    continue;
                }
            }
            cur.push((v, tok, lab));
            go(s, class_seq, &w, cur, best);
            cur.pop();
        }
    }
    let mut best = None;
    go(
        s,
        class_seq,
        &Writer::new(s.rank.len()),
        &mut Vec::new(),
        &mut best,
    );
    best.expect("at least one order exists")
}

/// Whether the identity order of `s` writes the smallest string among
/// admissible orders, given that it writes `actual`.
pub(crate) fn is_minimal(s: &Structure, class_seq: &[usize], actual: &[Vec<Token>]) -> bool {
    fn go(
        s: &Structure,
        class_seq: &[usize],
        actual: &[Vec<Token>],
        writer: &Writer,
        used: &mut Vec<bool>,
        depth: usize,
    ) -> bool {
        if depth == class_seq.len() {
            return true;
        }
        for v in 0..s.rank.len() {
            if used[v] || s.class[v] != class_seq[depth] {
                continue;
            }
            let mut w = writer.clone();
            let (tok, _) = w.write(s, v);
            match tok.cmp(&actual[depth]) {
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Greater => continue,
                std::cmp::Ordering::Equal => {
                    used[v] = true;
                    let ok = go(s, class_seq, actual, &w, used, depth + 1);
                    used[v] = false;
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }
    let mut used = vec![false; s.rank.len()];
    go(
        s,
        class_seq,
        actual,
        &Writer::new(s.rank.len()),
        &mut used,
        0,
    )
}

/// Multigraph view of a pattern: one node per factor, edge weights count
/// contracted index pairs between factors, loops count traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternGraph {
    nodes: Vec<TensorSymbol>,
    edges: BTreeMap<(usize, usize), usize>,
    loops: Vec<usize>,
}

impl PatternGraph {
    pub fn from_pattern(p: &ContractionPattern) -> Self {
        let mut owner = Vec::with_capacity(p.total_rank());
        for (i, s) in p.factors().iter().enumerate() {
            owner.extend(std::iter::repeat_n(i, s.rank()));
        }
        let mut edges = BTreeMap::new();
        let mut loops = vec![0; p.factors().len()];
        for &(a, b) in p.pairing().pairs() {
            let (x, y) = (owner[a], owner[b]);
            if x == y {
                loops[x] += 1;
            } else {
                *edges.entry((x.min(y), x.max(y))).or_insert(0) += 1;
            }
        }
        Self {
            nodes: p.factors().to_vec(),
            edges,
            loops,
        }
    }

    pub fn nodes(&self) -> &[TensorSymbol] {
        &self.nodes
    }

    /// Edges between distinct nodes with their multiplicities.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), usize)> + '_ {
        self.edges.iter().map(|(k, v)| (*k, *v))
    }

    pub fn loops(&self) -> &[usize] {
        &self.loops
    }

    pub fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in self.edges.keys() {
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    fn structure(&self) -> (Structure, Vec<TensorSymbol>, Vec<usize>) {
        let mut symbols = self.nodes.clone();
        symbols.sort();
        symbols.dedup();
        let class: Vec<usize> = self
            .nodes
            .iter()
            .map(|s| symbols.binary_search(s).expect("symbol listed"))
            .collect();
        let n = self.nodes.len();
        let mut w = vec![vec![0; n]; n];
        for (&(a, b), &m) in &self.edges {
            w[a][b] = m;
            w[b][a] = m;
        }
        let mut class_seq = class.clone();
        class_seq.sort_unstable();
        let s = Structure {
            class,
            rank: self.nodes.iter().map(|x| x.rank()).collect(),
            w,
            loops: self.loops.clone(),
        };
        (s, symbols, class_seq)
    }

    /// The canonical member of this graph's isomorphism class.
    pub fn canonical_pattern(&self) -> Result<ContractionPattern, PatternError> {
        if self.nodes.len() > MAX_CANONICAL_NODES {
            return Err(PatternError::TooManyNodes(self.nodes.len()));
        }
        let (s, symbols, class_seq) = self.structure();
        let best = minimize(&s, &class_seq);
        let factors = best.order.iter().map(|&v| self.nodes[v]).collect();
        debug_assert!(class_seq
            .iter()
            .zip(&best.order)
            .all(|(c, &v)| symbols[*c] == self.nodes[v]));
        ContractionPattern::from_factor_labels(factors, &best.labels)
    }
}

/// String key equal exactly for isomorphic labeled multigraphs.
pub fn canonical_form(g: &PatternGraph) -> Result<String, PatternError> {
    Ok(g.canonical_pattern()?.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(l: usize, n: usize) -> Vec<TensorSymbol> {
        vec![TensorSymbol::Moment(l); n]
    }

    fn key(factors: Vec<TensorSymbol>, text: &str) -> String {
        ContractionPattern::from_notation(factors, text)
            .unwrap()
            .canonical_key()
            .unwrap()
    }

    #[test]
    fn factor_swap_gives_same_key() {
        assert_eq!(
            key(m(3, 2), "(1,2,3)(1,2,3)"),
            key(m(3, 2), "(3,1,2)(2,3,1)")
        );
        assert_eq!(
            key(m(3, 2), "(1,1,2)(2,3,3)"),
            key(m(3, 2), "(1,2,2)(3,3,1)")
        );
        assert_ne!(
            key(m(3, 2), "(1,2,3)(1,2,3)"),
            key(m(3, 2), "(1,1,2)(2,3,3)")
        );
    }

    #[test]
    fn two_classes_for_second_order_squares() {
        let a = key(m(2, 2), "(1,1)(2,2)");
        let b = key(m(2, 2), "(1,2)(1,2)");
        let c = key(m(2, 2), "(1,2)(2,1)");
        assert_ne!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn canonical_strings_follow_recency_rule() {
        let h3 = vec![TensorSymbol::irreducible(3, 3); 6];
        let p = ContractionPattern::from_notation(h3, "(5,6,7)(7,8,9)(6,8,9)(1,2,3)(2,3,4)(1,4,5)")
            .unwrap()
            .canonical()
            .unwrap();
        assert_eq!(p.notation(), "(1,2,3)(3,2,4)(4,1,5)(5,6,7)(7,8,9)(9,8,6)");
    }

    #[test]
    fn too_many_nodes() {
        let labels: Vec<Vec<u32>> = (0..13u32).map(|i| vec![i, (i + 1) % 13]).collect();
        let p = ContractionPattern::from_factor_labels(m(2, 13), &labels).unwrap();
        assert_eq!(p.canonical_key(), Err(PatternError::TooManyNodes(13)));
    }

    #[test]
    fn mixed_symbols_sorted_by_rank() {
        let f = vec![
            TensorSymbol::irreducible(3, 3),
            TensorSymbol::irreducible(3, 3),
            TensorSymbol::irreducible(2, 2),
        ];
        let p = ContractionPattern::from_notation(f, "(1,3,4)(2,3,4)(1,2)")
            .unwrap()
            .canonical()
            .unwrap();
        assert_eq!(p.factors()[0], TensorSymbol::irreducible(2, 2));
        assert_eq!(p.notation(), "(1,2)(2,3,4)(4,3,1)");
    }

    #[test]
    fn connectivity() {
        let g = ContractionPattern::from_notation(m(2, 2), "(1,1)(2,2)")
            .unwrap()
            .graph();
        assert!(!g.is_connected());
        assert_eq!(g.loops(), &[1, 1]);
        let g = ContractionPattern::from_notation(m(2, 2), "(1,2)(1,2)")
            .unwrap()
            .graph();
        assert!(g.is_connected());
    }
}
