use super::dense::Labeled;
use super::{compact_index, compact_len, Pairing, SymTensor3, TensorError};

/// Default bound on the number of open indices of any intermediate.
pub const DEFAULT_RANK_CAP: usize = 12;

/// Contraction plan for a product of factors with a fixed pairing.
///
/// Factors are absorbed left to right. Index pairs inside one factor (loops)
/// are traced on the compact tensor before expansion.
#[derive(Debug, Clone)]
pub struct Network {
    ranks: Vec<usize>,
    labels: Vec<Vec<u32>>,
    cap: usize,
}

struct Expanded {
    /// Labels of the non-loop positions, in position order.
    open: Vec<u32>,
    loops: usize,
}

impl Network {
    pub fn new(ranks: &[usize], pairing: &Pairing) -> Result<Self, TensorError> {
        let total: usize = ranks.iter().sum();
        if pairing.positions() != total {
            return Err(TensorError::PairingNotPerfect {
                positions: total,
                reason: format!("pairing covers {} positions", pairing.positions()),
            });
        }
        let flat = pairing.to_labels();
        let mut labels = Vec::with_capacity(ranks.len());
        let mut start = 0;
        for &r in ranks {
            labels.push(flat[start..start + r].to_vec());
            start += r;
        }
        Ok(Self {
            ranks: ranks.to_vec(),
            labels,
            cap: DEFAULT_RANK_CAP,
        })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn factor_count(&self) -> usize {
        self.ranks.len()
    }

    fn layout(&self, j: usize) -> Expanded {
        let labels = &self.labels[j];
        let mut open = Vec::with_capacity(labels.len());
        let mut loops = 0;
        for (k, l) in labels.iter().enumerate() {
            let count = labels.iter().filter(|x| *x == l).count();
            if count == 2 {
                if labels[..k].contains(l) {
                    loops += 1;
                }
            } else {
                open.push(*l);
            }
        }
        Expanded { open, loops }
    }

    fn expand(&self, j: usize, t: &SymTensor3) -> Labeled {
        let lay = self.layout(j);
        let traced = t.trace_n(lay.loops).expect("rank matches labels");
        Labeled {
            labels: lay.open,
            data: traced.to_dense(),
        }
    }

    fn check_factors(&self, factors: &[&SymTensor3]) -> Result<(), TensorError> {
        if factors.len() != self.ranks.len() {
            return Err(TensorError::PairingNotPerfect {
                positions: self.ranks.iter().sum(),
                reason: format!("{} factors for {} slots", factors.len(), self.ranks.len()),
            });
        }
        for (f, &r) in factors.iter().zip(&self.ranks) {
            if f.order() != r {
                return Err(TensorError::PairingNotPerfect {
                    positions: self.ranks.iter().sum(),
                    reason: format!("factor of order {} in a slot of rank {r}", f.order()),
                });
            }
        }
        Ok(())
    }

    fn capped(&self, t: Labeled) -> Result<Labeled, TensorError> {
        if t.labels.len() > self.cap {
            return Err(TensorError::IntermediateRankExceeded {
                rank: t.labels.len(),
                cap: self.cap,
            });
        }
        Ok(t)
    }

    /// Value of the full contraction.
    pub fn value(&self, factors: &[&SymTensor3]) -> Result<f64, TensorError> {
        self.check_factors(factors)?;
        let mut acc = Labeled::scalar(1.0);
        for (j, f) in factors.iter().enumerate() {
            acc = self.capped(acc.contract(&self.expand(j, f)))?;
        }
        Ok(acc.data[0])
    }

    /// Value and, per factor slot, the derivative with respect to that slot's
    /// compact coefficients (holding all other slots fixed).
    pub fn slot_gradients(
        &self,
        factors: &[&SymTensor3],
    ) -> Result<(f64, Vec<Vec<f64>>), TensorError> {
        self.check_factors(factors)?;
        let n = factors.len();
        let expanded: Vec<Labeled> = factors
            .iter()
            .enumerate()
            .map(|(j, f)| self.expand(j, f))
            .collect();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(Labeled::scalar(1.0));
        for e in &expanded {
            let next = self.capped(prefix.last().unwrap().contract(e))?;
            prefix.push(next);
        }
        let mut suffix = vec![Labeled::scalar(1.0); n + 1];
        for j in (0..n).rev() {
            suffix[j] = self.capped(expanded[j].contract(&suffix[j + 1]))?;
        }
        let value = prefix[n].data[0];
        let mut grads = Vec::with_capacity(n);
        for j in 0..n {
            let lay = self.layout(j);
            let env = prefix[j].contract(&suffix[j + 1]).permuted(&lay.open);
            grads.push(self.scatter(j, &env));
        }
        Ok((value, grads))
    }

    /// Spreads an environment over the dense positions of slot `j` (loops
    /// contribute a Kronecker delta) and folds the result onto compact slots.
    fn scatter(&self, j: usize, env: &Labeled) -> Vec<f64> {
        let labels = &self.labels[j];
        let rank = labels.len();
        let mut distinct: Vec<u32> = Vec::new();
        for l in labels {
            if !distinct.contains(l) {
                distinct.push(*l);
            }
        }
        let pos_label: Vec<usize> = labels
            .iter()
            .map(|l| distinct.iter().position(|x| x == l).unwrap())
            .collect();
        let env_label: Vec<usize> = env
            .labels
            .iter()
            .map(|l| distinct.iter().position(|x| x == l).unwrap())
            .collect();
        let mut grad = vec![0.0; compact_len(rank)];
        let mut vals = vec![0usize; distinct.len()];
        for assign in 0..3usize.pow(distinct.len() as u32) {
            let mut rest = assign;
            for v in vals.iter_mut() {
                *v = rest % 3;
                rest /= 3;
            }
            let mut m = [0usize; 3];
            for &d in &pos_label {
                m[vals[d]] += 1;
            }
            let off = env_label.iter().fold(0, |acc, &d| acc * 3 + vals[d]);
            grad[compact_index(m)] += env.data[off];
        }
        grad
    }
}

/// Full contraction of `factors` along `pairing` (positions are the
/// concatenation of the factors' indices).
pub fn contract_full(factors: &[&SymTensor3], pairing: &Pairing) -> Result<f64, TensorError> {
    let ranks: Vec<usize> = factors.iter().map(|f| f.order()).collect();
    Network::new(&ranks, pairing)?.value(factors)
}

/// Derivative of a full contraction with respect to one compact coefficient
/// of a distinct tensor symbol.
///
/// `occurrence[j]` names the entry of `tensors` used at factor slot `j`; the
/// derivative sums over every slot that uses `symbol`.
pub fn d_contract(
    tensors: &[SymTensor3],
    occurrence: &[usize],
    pairing: &Pairing,
    symbol: usize,
    wrt: [usize; 3],
) -> Result<f64, TensorError> {
    if symbol >= tensors.len() || !occurrence.contains(&symbol) {
        return Err(TensorError::UnknownSymbol(symbol));
    }
    if let Some(&bad) = occurrence.iter().find(|&&o| o >= tensors.len()) {
        return Err(TensorError::UnknownSymbol(bad));
    }
    let factors: Vec<&SymTensor3> = occurrence.iter().map(|&o| &tensors[o]).collect();
    let ranks: Vec<usize> = factors.iter().map(|f| f.order()).collect();
    let (_, grads) = Network::new(&ranks, pairing)?.slot_gradients(&factors)?;
    let slot = compact_index(wrt);
    Ok(occurrence
        .iter()
        .zip(&grads)
        .filter(|(o, _)| **o == symbol)
        .map(|(_, g)| g[slot])
        .sum())
}
