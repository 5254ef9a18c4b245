//! Block dissimilarity kernel and the pairwise statistics built on it.
//!
//! For a partition of the D coordinates into B blocks, the dissimilarity of
//! two vectors is
//!
//! ```text
//! h(u, v) = B^-1 * sum_b gamma(D_b^-1 * ||u_b - v_b||^2)
//! ```
//!
//! Summation order is fixed (block index ascending, coordinate index
//! ascending within each block) so results are identical run to run.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gamma::Gamma;

/// A partition of the feature indices `0..dim` into disjoint, exhaustive
/// blocks. Indices inside each block are kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blocking {
    blocks: Vec<Vec<usize>>,
    dim: usize,
}

impl Blocking {
    /// Build a blocking from 0-based index lists. The lists must be
    /// nonempty, pairwise disjoint, and cover `0..dim` exactly.
    pub fn new(mut blocks: Vec<Vec<usize>>, dim: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidBlocking("no blocks given".into()));
        }
        let mut seen = vec![false; dim];
        let mut covered = 0usize;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidBlocking("empty block".into()));
            }
            block.sort_unstable();
            for &i in block.iter() {
                if i >= dim {
                    return Err(Error::InvalidBlocking(format!(
                        "index {i} out of range for dimension {dim}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidBlocking(format!(
                        "index {i} appears in more than one block"
                    )));
                }
                seen[i] = true;
                covered += 1;
            }
        }
        if covered != dim {
            return Err(Error::InvalidBlocking(format!(
                "blocks cover {covered} of {dim} coordinates"
            )));
        }
        Ok(Blocking { blocks, dim })
    }

    /// One block per coordinate: B = dim.
    pub fn singletons(dim: usize) -> Self {
        Blocking {
            blocks: (0..dim).map(|i| vec![i]).collect(),
            dim,
        }
    }

    /// Consecutive pairs {0,1}, {2,3}, ...; a trailing singleton when `dim`
    /// is odd.
    pub fn consecutive_pairs(dim: usize) -> Self {
        let mut blocks = Vec::with_capacity(dim.div_ceil(2));
        let mut i = 0;
        while i + 1 < dim {
            blocks.push(vec![i, i + 1]);
            i += 2;
        }
        if i < dim {
            blocks.push(vec![i]);
        }
        Blocking { blocks, dim }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// 1-based index lists, the on-disk JSON convention.
    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&i| i + 1).collect())
            .collect()
    }

    /// Parse 1-based index lists (the on-disk JSON convention).
    pub fn from_one_based(lists: Vec<Vec<usize>>, dim: usize) -> Result<Self> {
        let mut blocks = Vec::with_capacity(lists.len());
        for list in lists {
            let mut block = Vec::with_capacity(list.len());
            for i in list {
                if i == 0 {
                    return Err(Error::InvalidBlocking(
                        "found index 0 in a 1-based block list".into(),
                    ));
                }
                block.push(i - 1);
            }
            blocks.push(block);
        }
        Blocking::new(blocks, dim)
    }

    /// Stable content hash of the partition, used as a cache key for
    /// quantities computed per (class, blocking, gamma).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"blocking-v1");
        hasher.update((self.dim as u64).to_le_bytes());
        for block in &self.blocks {
            hasher.update((block.len() as u64).to_le_bytes());
            for &i in block {
                hasher.update((i as u64).to_le_bytes());
            }
        }
        hex(&hasher.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Kernel without validation; callers guarantee matching finite inputs.
#[inline]
pub(crate) fn kernel_unchecked(u: &[f64], v: &[f64], blocking: &Blocking, gamma: Gamma) -> f64 {
    let mut acc = 0.0;
    for block in &blocking.blocks {
        let mut ss = 0.0;
        for &i in block {
            let d = u[i] - v[i];
            ss += d * d;
        }
        acc += gamma.apply(ss / block.len() as f64);
    }
    acc / blocking.blocks.len() as f64
}

fn contiguous<'a>(v: &ArrayView1<'a, f64>) -> Result<&'a [f64]> {
    v.to_slice()
        .ok_or_else(|| Error::InvalidParameter("non-contiguous input vector".into()))
}

fn check_vector(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    for &x in v {
        if x.is_nan() {
            return Err(Error::NanInput);
        }
        if x.is_infinite() {
            return Err(Error::NonFiniteInput);
        }
    }
    Ok(())
}

fn check_samples(samples: &ArrayView2<'_, f64>, dim: usize) -> Result<()> {
    if samples.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: samples.ncols(),
        });
    }
    for &x in samples.iter() {
        if x.is_nan() {
            return Err(Error::NanInput);
        }
        if x.is_infinite() {
            return Err(Error::NonFiniteInput);
        }
    }
    Ok(())
}

/// The block dissimilarity of two vectors. Symmetric, nonnegative, and zero
/// exactly when `u == v` for strictly increasing gamma with gamma(0) = 0.
pub fn block_dissimilarity(
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    blocking: &Blocking,
    gamma: Gamma,
) -> Result<f64> {
    let u = contiguous(&u)?;
    let v = contiguous(&v)?;
    check_vector(u, blocking.dim)?;
    check_vector(v, blocking.dim)?;
    Ok(kernel_unchecked(u, v, blocking, gamma))
}

/// Mean dissimilarity over all distinct pairs of one class's samples. This
/// is the scale-adjustment term; for at least two samples it equals the
/// ordered-pair mean with normalization {n(n-1)}^-1 by symmetry.
pub fn within_class_deviation(
    samples: ArrayView2<'_, f64>,
    blocking: &Blocking,
    gamma: Gamma,
) -> Result<f64> {
    check_samples(&samples, blocking.dim)?;
    let n = samples.nrows();
    if n < 2 {
        return Err(Error::ClassTooSmall {
            class: 0,
            size: n,
            min: 2,
        });
    }
    Ok(within_unchecked(&samples, blocking, gamma))
}

pub(crate) fn within_unchecked(
    samples: &ArrayView2<'_, f64>,
    blocking: &Blocking,
    gamma: Gamma,
) -> f64 {
    let n = samples.nrows();
    let mut total = 0.0;
    for l in 0..n {
        let a = samples.row(l);
        let a = a.to_slice().expect("row-major samples");
        for k in (l + 1)..n {
            let b = samples.row(k);
            let b = b.to_slice().expect("row-major samples");
            total += kernel_unchecked(a, b, blocking, gamma);
        }
    }
    total / (n * (n - 1) / 2) as f64
}

/// Mean dissimilarity from one point to every sample of a class.
pub fn cross_mean_dissimilarity(
    z: ArrayView1<'_, f64>,
    samples: ArrayView2<'_, f64>,
    blocking: &Blocking,
    gamma: Gamma,
) -> Result<f64> {
    let z = contiguous(&z)?;
    check_vector(z, blocking.dim)?;
    check_samples(&samples, blocking.dim)?;
    if samples.nrows() == 0 {
        return Err(Error::EmptySamples);
    }
    Ok(cross_mean_unchecked(z, &samples, blocking, gamma))
}

pub(crate) fn cross_mean_unchecked(
    z: &[f64],
    samples: &ArrayView2<'_, f64>,
    blocking: &Blocking,
    gamma: Gamma,
) -> f64 {
    let n = samples.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let b = samples.row(i);
        let b = b.to_slice().expect("row-major samples");
        total += kernel_unchecked(z, b, blocking, gamma);
    }
    total / n as f64
}
