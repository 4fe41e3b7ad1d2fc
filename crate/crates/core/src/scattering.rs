//! Scalar S-matrix, vector exchange products and the multi-point scattering factors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special_fn::CouplingParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Closer than this to a zero of the denominator counts as hitting the pole.
pub const POLE_GUARD: f64 = 1e-12;

/// S(β) = (sinh β − i sin 2πb)/(sinh β + i sin 2πb).
pub fn s_matrix(beta: Complex64, p: &CouplingParams) -> Result<Complex64> {
    let sh = beta.sinh();
    let s = p.sin_2pi_b();
    let den = sh + I * s;
    if den.norm() < POLE_GUARD {
        return Err(Error::Pole { function: "s_matrix", at: beta });
    }
    Ok((sh - I * s) / den)
}

/// S(A ∪ B | B ∪ A) = ∏_j ∏_l S(a_j − b_l).
pub fn s_vector(a: &[Complex64], b: &[Complex64], p: &CouplingParams) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    for &x in a {
        for &y in b {
            acc *= s_matrix(x - y, p)?;
        }
    }
    Ok(acc)
}

/// S-factor of a general reordering, defined by 𝓕(x) = S(x | y)·𝓕(y).
///
/// `order[j]` is the position in `x` of the j-th entry of `y`. Every pair whose
/// relative order flips contributes S(x_first − x_second), first as in `x`.
pub fn s_permutation(x: &[Complex64], order: &[usize], p: &CouplingParams) -> Result<Complex64> {
    if order.len() != x.len() {
        return Err(Error::InvalidParam("permutation length mismatch".into()));
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for j in 0..order.len() {
        for l in j + 1..order.len() {
            let (a, b) = (order[j], order[l]);
            if a > b {
                acc *= s_matrix(x[b] - x[a], p)?;
            }
        }
    }
    Ok(acc)
}

/// Number of blocks (b, a) with k ≥ b > a ≥ 1.
pub fn block_count(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Storage position of block (b, a) in the order 21, 31, 32, 41, ...
pub fn block_index(b: usize, a: usize) -> usize {
    debug_assert!(b > a && a >= 1);
    (b - 1) * (b - 2) / 2 + (a - 1)
}

/// Inverse of [`block_index`].
pub fn block_pair(index: usize) -> (usize, usize) {
    let mut b = 2;
    while block_index(b + 1, 1) <= index {
        b += 1;
    }
    (b, index - block_index(b, 1) + 1)
}

/// Block-structured rapidity vector γ = (γ^(21), γ^(31), γ^(32), ..., γ^(k,k−1)).
#[derive(Debug, Clone, PartialEq)]
pub struct RapidityLayout {
    k: usize,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<Complex64>,
}

impl RapidityLayout {
    /// Zero-filled layout with block sizes given in storage order.
    pub fn zeros(k: usize, sizes: &[usize]) -> Result<Self> {
        let total = sizes.iter().sum();
        Self::with_data(k, sizes, vec![Complex64::new(0.0, 0.0); total])
    }

    pub fn with_data(k: usize, sizes: &[usize], data: Vec<Complex64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParam("a layout needs k ≥ 1".into()));
        }
        if sizes.len() != block_count(k) {
            return Err(Error::InvalidParam(format!(
                "k = {k} needs {} block sizes, got {}",
                block_count(k),
                sizes.len()
            )));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &s in sizes {
            acc += s;
            offsets.push(acc);
        }
        if acc != data.len() {
            return Err(Error::InvalidParam(format!(
                "block sizes sum to {acc} but {} rapidities given",
                data.len()
            )));
        }
        Ok(Self { k, sizes: sizes.to_vec(), offsets, data })
    }

    /// Builds a layout from blocks listed in storage order.
    pub fn from_blocks(k: usize, blocks: Vec<Vec<Complex64>>) -> Result<Self> {
        let sizes: Vec<usize> = blocks.iter().map(Vec::len).collect();
        Self::with_data(k, &sizes, blocks.into_iter().flatten().collect())
    }

    pub fn from_real_blocks(k: usize, blocks: &[Vec<f64>]) -> Result<Self> {
        Self::from_blocks(
            k,
            blocks
                .iter()
                .map(|b| b.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, b: usize, a: usize) -> usize {
        self.sizes[block_index(b, a)]
    }

    pub fn total_len(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn block(&self, b: usize, a: usize) -> &[Complex64] {
        let i = block_index(b, a);
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn block_mut(&mut self, b: usize, a: usize) -> &mut [Complex64] {
        let i = block_index(b, a);
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Offset of block (b, a) inside the flat storage.
    pub fn offset(&self, b: usize, a: usize) -> usize {
        self.offsets[block_index(b, a)]
    }

    /// Blocks in storage order as (b, a) pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        (0..self.sizes.len()).map(block_pair)
    }

    /// γ + θē.
    pub fn shifted(&self, theta: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x += theta);
        out
    }

    /// Swaps the contents of two blocks; sizes travel with the contents.
    pub fn swap_blocks(&self, first: (usize, usize), second: (usize, usize)) -> Self {
        let mut blocks: Vec<Vec<Complex64>> = self.pairs().map(|(b, a)| self.block(b, a).to_vec()).collect();
        blocks.swap(block_index(first.0, first.1), block_index(second.0, second.1));
        Self::from_blocks(self.k, blocks).expect("swap preserves the block count")
    }

    /// The relabeling σ_t that exchanges the roles of operators t and t+1.
    pub fn sigma_t(&self, t: usize) -> Result<Self> {
        check_t(t, self.k.saturating_sub(1))?;
        let mut out = self.clone();
        for p in t + 2..=self.k {
            out = out.swap_blocks((p, t), (p, t + 1));
        }
        for p in 1..t {
            out = out.swap_blocks((t, p), (t + 1, p));
        }
        Ok(out)
    }
}

fn check_t(t: usize, max: usize) -> Result<()> {
    if t == 0 || t > max {
        Err(Error::IndexOutOfRange { index: t, max })
    } else {
        Ok(())
    }
}

/// The global factor 𝒮(γ) = ∏_{v>p≥3} ∏_{p−1≥u>s} S(γ^(vu) ∪ γ^(ps) | γ^(ps) ∪ γ^(vu)).
pub fn s_global(gamma: &RapidityLayout, p: &CouplingParams) -> Result<Complex64> {
    let k = gamma.k();
    let mut acc = Complex64::new(1.0, 0.0);
    for pp in 3..=k {
        for v in pp + 1..=k {
            for u in 2..pp {
                for s in 1..u {
                    acc *= s_vector(gamma.block(v, u), gamma.block(pp, s), p)?;
                }
            }
        }
    }
    Ok(acc)
}

/// 𝒮^(t)(γ): the global factor times the exchange products attached to operator t.
pub fn s_t(gamma: &RapidityLayout, t: usize, p: &CouplingParams) -> Result<Complex64> {
    let k = gamma.k();
    check_t(t, k)?;
    let mut acc = s_global(gamma, p)?;
    for v in t + 1..=k {
        for u in 1..t {
            let vu = gamma.block(v, u);
            for s in 1..t {
                acc *= s_vector(gamma.block(t, s), vu, p)?;
            }
            for s in t + 1..=k {
                acc *= s_vector(vu, gamma.block(s, t), p)?;
            }
        }
    }
    Ok(acc)
}

/// 𝒮_add(γ) assembled from its unsimplified factor list, t ∈ 1..k−1.
///
/// The ratio 𝒮(γ^{σ_t})/𝒮(γ) is evaluated literally and multiplied by every
/// leftover vector exchange product. The product is identically one.
pub fn s_add(gamma: &RapidityLayout, t: usize, p: &CouplingParams) -> Result<Complex64> {
    let k = gamma.k();
    if k < 2 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    check_t(t, k - 1)?;
    let g = |b: usize, a: usize| gamma.block(b, a);
    let sv = |x: &[Complex64], y: &[Complex64]| s_vector(x, y, p);
    let mut acc = s_global(&gamma.sigma_t(t)?, p)? / s_global(gamma, p)?;
    for v in t + 2..=k {
        for u in 1..t {
            acc *= sv(g(t, u), g(v, t + 1))?;
        }
        for u in t + 2..=k {
            acc *= sv(g(v, t + 1), g(u, t))?;
        }
    }
    for u in 1..t {
        for v in 1..t {
            acc *= sv(g(t + 1, u), g(t, v))?;
        }
    }
    for v in t + 1..=k {
        for u in 1..t {
            acc *= sv(g(v, t), g(t + 1, u))?;
        }
    }
    for u in 1..t {
        acc *= sv(g(t + 1, u), g(t + 1, t))? * sv(g(t, u), g(t + 1, u))?;
    }
    for u in t + 2..=k {
        acc *= sv(g(u, t), g(u, t + 1))?;
    }
    Ok(acc)
}
