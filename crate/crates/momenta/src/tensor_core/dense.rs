use super::{
    dense_table, multi_indices, multiplicity, Pairing, SymTensor3, TensorError, MAX_DENSE_ORDER,
};

/// A general (not necessarily symmetric) dense tensor over R^3, row-major with
/// the first index slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    rank: usize,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn from_data(rank: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        let expected = 3usize.pow(rank as u32);
        if data.len() != expected {
            return Err(TensorError::CoefficientCount {
                order: rank,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { rank, data })
    }

    pub fn from_sym(t: &SymTensor3) -> Self {
        Self {
            rank: t.order(),
            data: t.to_dense(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn entry(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.rank);
        self.data[idx.iter().fold(0, |acc, &i| acc * 3 + i)]
    }

    /// Sums all index pairs of `pairing` and returns the scalar.
    pub fn contract_full(&self, pairing: &Pairing) -> Result<f64, TensorError> {
        if pairing.positions() != self.rank {
            return Err(TensorError::PairingNotPerfect {
                positions: self.rank,
                reason: format!("pairing covers {} positions", pairing.positions()),
            });
        }
        let labels = pairing.to_labels();
        let npairs = pairing.pairs().len();
        let strides: Vec<usize> = (0..self.rank)
            .map(|k| 3usize.pow((self.rank - 1 - k) as u32))
            .collect();
        let mut total = 0.0;
        for assign in 0..3usize.pow(npairs as u32) {
            let mut off = 0;
            for (pos, &l) in labels.iter().enumerate() {
                off += (assign / 3usize.pow(l)) % 3 * strides[pos];
            }
            total += self.data[off];
        }
        Ok(total)
    }
}

/// Plain outer product `(T ⊗ U)_{i.. j..} = T_{i..} U_{j..}`.
pub fn outer(t: &SymTensor3, u: &SymTensor3) -> DenseTensor {
    let a = t.to_dense();
    let b = u.to_dense();
    let mut data = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            data.push(x * y);
        }
    }
    DenseTensor {
        rank: t.order() + u.order(),
        data,
    }
}

/// Average over all index permutations. Every arrangement of a multiset occurs
/// once among the dense entries, so the average over the entries sharing a
/// multiset is the symmetrized value.
pub fn symmetrize(t: &DenseTensor) -> SymTensor3 {
    assert!(t.rank <= MAX_DENSE_ORDER, "rank beyond dense limit");
    let table = dense_table(t.rank);
    let mut acc = SymTensor3::zeros(t.rank);
    {
        let c = acc.coeffs_mut();
        for (lin, &slot) in table.iter().enumerate() {
            c[slot as usize] += t.data[lin];
        }
    }
    let mults: Vec<f64> = multi_indices(t.rank)
        .into_iter()
        .map(multiplicity)
        .collect();
    for (c, m) in acc.coeffs_mut().iter_mut().zip(mults) {
        *c /= m;
    }
    acc
}

/// Dense tensor whose axes carry contraction labels; labels are distinct.
#[derive(Debug, Clone)]
pub(crate) struct Labeled {
    pub labels: Vec<u32>,
    pub data: Vec<f64>,
}

impl Labeled {
    pub fn scalar(v: f64) -> Self {
        Self {
            labels: Vec::new(),
            data: vec![v],
        }
    }

    /// Reorders axes so that they follow `order` (a permutation of the labels).
    pub fn permuted(&self, order: &[u32]) -> Labeled {
        if order == self.labels.as_slice() {
            return self.clone();
        }
        let rank = self.labels.len();
        let old_stride: Vec<usize> = (0..rank)
            .map(|k| 3usize.pow((rank - 1 - k) as u32))
            .collect();
        let src_stride: Vec<usize> = order
            .iter()
            .map(|l| {
                let k = self
                    .labels
                    .iter()
                    .position(|x| x == l)
                    .expect("label present");
                old_stride[k]
            })
            .collect();
        let mut out = vec![0.0; self.data.len()];
        let mut digits = vec![0usize; rank];
        let mut src = 0usize;
        for slot in out.iter_mut() {
            *slot = self.data[src];
            for k in (0..rank).rev() {
                digits[k] += 1;
                src += src_stride[k];
                if digits[k] < 3 {
                    break;
                }
                digits[k] = 0;
                src -= 3 * src_stride[k];
            }
        }
        Labeled {
            labels: order.to_vec(),
            data: out,
        }
    }

    /// Sums over the labels shared by `self` and `other`. The result carries
    /// the remaining labels of `self` followed by those of `other`.
    pub fn contract(&self, other: &Labeled) -> Labeled {
        let shared: Vec<u32> = self
            .labels
            .iter()
            .copied()
            .filter(|l| other.labels.contains(l))
            .collect();
        let keep_a: Vec<u32> = self
            .labels
            .iter()
            .copied()
            .filter(|l| !shared.contains(l))
            .collect();
        let keep_b: Vec<u32> = other
            .labels
            .iter()
            .copied()
            .filter(|l| !shared.contains(l))
            .collect();
        let a = self.permuted(&[keep_a.as_slice(), shared.as_slice()].concat());
        let b = other.permuted(&[shared.as_slice(), keep_b.as_slice()].concat());
        let m = 3usize.pow(keep_a.len() as u32);
        let k = 3usize.pow(shared.len() as u32);
        let n = 3usize.pow(keep_b.len() as u32);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for kk in 0..k {
                let aik = a.data[i * k + kk];
                if aik == 0.0 {
                    continue;
                }
                let brow = &b.data[kk * n..(kk + 1) * n];
                for (o, &bv) in row.iter_mut().zip(brow) {
                    *o += aik * bv;
                }
            }
        }
        Labeled {
            labels: [keep_a, keep_b].concat(),
            data: out,
        }
    }
}
