//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use momenta::basis_builder::{decompose_all, InvariantSet};
use momenta::independence::{Assignment, CoordinateSpace, JacobianBasis};
use momenta::irreducible::traceless_basis;
use momenta::moments::MomentSet;
use momenta::patterns::{enumerate, ContractionPattern, TensorSymbol};
use momenta::tensor_core::{Pairing, SymTensor3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Entry of a symmetric tensor at a full index tuple, counting axes here
/// rather than trusting the library's own lookup.
pub fn entry(t: &SymTensor3, idx: &[usize]) -> f64 {
    let mut m = [0usize; 3];
    for &i in idx {
        m[i] += 1;
    }
    t.get(m)
}

/// Sum over every assignment of axis values to the contracted pairs, with
/// compensated accumulation so the reference stays accurate under
/// cancellation.
pub fn naive_contract(factors: &[&SymTensor3], pairs: &[(usize, usize)]) -> f64 {
    naive_contract_with_scale(factors, pairs).0
}

/// The naive sum together with the sum of the absolute values of its terms,
/// the magnitude that floating-point rounding is proportional to.
pub fn naive_contract_with_scale(factors: &[&SymTensor3], pairs: &[(usize, usize)]) -> (f64, f64) {
    let positions: usize = factors.iter().map(|f| f.order()).sum();
    let mut idx = vec![0usize; positions];
    let (mut total, mut carry, mut magnitude) = (0.0f64, 0.0f64, 0.0f64);
    for code in 0..3usize.pow(pairs.len() as u32) {
        let mut c = code;
        for &(a, b) in pairs {
            idx[a] = c % 3;
            idx[b] = c % 3;
            c /= 3;
        }
        let mut prod = 1.0;
        let mut start = 0;
        for f in factors {
            prod *= entry(f, &idx[start..start + f.order()]);
            start += f.order();
        }
        let t = total + prod;
        carry += if total.abs() >= prod.abs() {
            (total - t) + prod
        } else {
            (prod - t) + total
        };
        total = t;
        magnitude += prod.abs();
    }
    (total + carry, magnitude)
}

pub fn perfect_matchings(items: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let mut out = Vec::new();
    for k in 1..items.len() {
        let rest: Vec<usize> = items[1..]
            .iter()
            .copied()
            .filter(|&x| x != items[k])
            .collect();
        for mut m in perfect_matchings(&rest) {
            m.insert(0, (first, items[k]));
            out.push(m);
        }
    }
    out
}

/// Ordered ways of writing `total` as positive parts no larger than `max_part`.
pub fn compositions(total: usize, max_part: usize) -> Vec<Vec<usize>> {
    if total == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=total.min(max_part) {
        for mut rest in compositions(total - first, max_part) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

pub type BruteKey = (Vec<TensorSymbol>, Vec<usize>);

/// Isomorphism invariant by exhaustion: the smallest (symbol, multiplicity
/// matrix) listing over all factor orders.
pub fn brute_key(factors: &[TensorSymbol], pairs: &[(usize, usize)]) -> BruteKey {
    let n = factors.len();
    let mut owner = Vec::new();
    for (k, s) in factors.iter().enumerate() {
        owner.extend(std::iter::repeat_n(k, s.rank()));
    }
    let mut adj = vec![vec![0usize; n]; n];
    for &(a, b) in pairs {
        let (x, y) = (owner[a], owner[b]);
        adj[x][y] += 1;
        if x != y {
            adj[y][x] += 1;
        }
    }
    let mut best: Option<BruteKey> = None;
    for perm in permutations(n) {
        let syms: Vec<TensorSymbol> = perm.iter().map(|&i| factors[i]).collect();
        let mut flat = Vec::with_capacity(n * n);
        for &i in &perm {
            for &j in &perm {
                flat.push(adj[i][j]);
            }
        }
        let cand = (syms, flat);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.expect("at least one order")
}

pub fn pattern_key(p: &ContractionPattern) -> BruteKey {
    brute_key(p.factors(), p.pairing().pairs())
}

/// Sorted factor sequences of at most `max_factors` symbols with even total
/// rank at most `max_rank`.
pub fn sequences(
    symbols: &[TensorSymbol],
    max_factors: usize,
    max_rank: usize,
) -> Vec<Vec<TensorSymbol>> {
    fn go(
        symbols: &[TensorSymbol],
        start: usize,
        cur: &mut Vec<TensorSymbol>,
        max_factors: usize,
        max_rank: usize,
        out: &mut Vec<Vec<TensorSymbol>>,
    ) {
        let rank: usize = cur.iter().map(|s| s.rank()).sum();
        if !cur.is_empty() && rank.is_multiple_of(2) {
            out.push(cur.clone());
        }
        if cur.len() == max_factors {
            return;
        }
        for i in start..symbols.len() {
            if rank + symbols[i].rank() <= max_rank {
                cur.push(symbols[i]);
                go(symbols, i, cur, max_factors, max_rank, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(symbols, 0, &mut Vec::new(), max_factors, max_rank, &mut out);
    out
}

/// Compares `enumerate` with classes found by exhausting every matching of
/// every factor sequence; returns the number of classes or the first
/// disagreement.
pub fn classes_match_brute_force(
    symbols: &[TensorSymbol],
    max_factors: usize,
    max_rank: usize,
) -> Result<usize, String> {
    let mut sorted = symbols.to_vec();
    sorted.sort();
    let mut want: BTreeMap<Vec<TensorSymbol>, BTreeSet<Vec<usize>>> = BTreeMap::new();
    for seq in sequences(&sorted, max_factors, max_rank) {
        let total: usize = seq.iter().map(|s| s.rank()).sum();
        let classes = want.entry(seq.clone()).or_default();
        for pairs in perfect_matchings(&(0..total).collect::<Vec<_>>()) {
            classes.insert(brute_key(&seq, &pairs).1);
        }
    }
    let got = enumerate(symbols, max_factors, max_rank);
    let mut seen: BTreeMap<Vec<TensorSymbol>, BTreeSet<Vec<usize>>> = BTreeMap::new();
    for p in &got {
        let (seq, adj) = pattern_key(p);
        let mut sorted_seq = p.factors().to_vec();
        sorted_seq.sort();
        if seq != sorted_seq {
            return Err(format!("{p}: factors out of order"));
        }
        if !seen.entry(seq).or_default().insert(adj) {
            return Err(format!("duplicate class {p}"));
        }
    }
    if seen != want {
        let missing = want.values().map(|c| c.len()).sum::<usize>() as i64
            - seen.values().map(|c| c.len()).sum::<usize>() as i64;
        return Err(format!("class sets differ ({missing:+} classes missing)"));
    }
    Ok(got.len())
}

/// Copy of `a` with symbol `s` moved by `h` along coordinate direction `dir`.
pub fn perturbed(a: &Assignment, s: TensorSymbol, dir: &[f64], h: f64) -> Assignment {
    let pairs = a
        .symbols()
        .iter()
        .map(|&t| {
            let mut x = a.tensor(t).unwrap().clone();
            if t == s {
                for (c, d) in x.coeffs_mut().iter_mut().zip(dir) {
                    *c += h * d;
                }
            }
            (t, x)
        })
        .collect();
    Assignment::new(pairs).unwrap()
}

/// Coordinate directions of a symbol, in the order gradient rows use.
pub fn directions(s: TensorSymbol) -> Vec<Vec<f64>> {
    if s.is_traceless() {
        traceless_basis(s.rank()).to_vec()
    } else {
        let n = (s.rank() + 1) * (s.rank() + 2) / 2;
        (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect()
    }
}

/// Central differences of the pattern value along every coordinate.
pub fn central_differences(
    a: &Assignment,
    p: &ContractionPattern,
    symbols: &[TensorSymbol],
    h: f64,
) -> Vec<f64> {
    let mut fd = Vec::new();
    for &s in symbols {
        for d in directions(s) {
            let up = perturbed(a, s, &d, h).value(p).unwrap();
            let down = perturbed(a, s, &d, -h).value(p).unwrap();
            fd.push((up - down) / (2.0 * h));
        }
    }
    fd
}

/// Random pairing over one to five random factors.
pub fn random_pattern(
    rng: &mut ChaCha8Rng,
    symbols: &[TensorSymbol],
    max_rank: usize,
) -> ContractionPattern {
    loop {
        let n = rng.gen_range(1..=5);
        let factors: Vec<TensorSymbol> = (0..n)
            .map(|_| symbols[rng.gen_range(0..symbols.len())])
            .collect();
        let total: usize = factors.iter().map(|s| s.rank()).sum();
        if total % 2 == 1 || total > max_rank || total == 0 {
            continue;
        }
        let mut slots: Vec<usize> = (0..total).collect();
        for i in (1..slots.len()).rev() {
            slots.swap(i, rng.gen_range(0..=i));
        }
        let pairs = slots
            .chunks(2)
            .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
            .collect();
        return ContractionPattern::new(factors, Pairing::new(pairs, total).unwrap()).unwrap();
    }
}

/// Jacobian rank over the coordinates of every part except `dropped`.
pub fn rank_without(set: &InvariantSet, m: &MomentSet, dropped: TensorSymbol) -> usize {
    let mut pairs = Vec::new();
    for d in decompose_all(m).unwrap() {
        for p in d.parts {
            pairs.push((TensorSymbol::irreducible(d.order, p.rank), p.data));
        }
    }
    let a = Assignment::new(pairs).unwrap();
    let space = CoordinateSpace::new(a.symbols());
    let mut keep = Vec::new();
    for &s in space.symbols() {
        keep.extend(std::iter::repeat_n(s != dropped, 2 * s.rank() + 1));
    }
    let width = keep.iter().filter(|&&k| k).count();
    let mut basis = JacobianBasis::new(width, 1e-8);
    for p in set.patterns() {
        let (_, row) = a.gradient(p, &space).unwrap();
        let row: Vec<f64> = row
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(x, _)| *x)
            .collect();
        basis.insert(&row);
    }
    basis.rank()
}

pub fn zero_part(m: &MomentSet, part: TensorSymbol) -> MomentSet {
    let mut d = decompose_all(m).unwrap();
    let order = &mut d[part.source_order()];
    let i = order
        .parts
        .iter()
        .position(|p| p.rank == part.rank())
        .unwrap();
    order.parts[i].data = SymTensor3::zeros(part.rank());
    MomentSet::new(m.flavor(), d.iter().map(|x| x.reconstruct()).collect()).unwrap()
}
