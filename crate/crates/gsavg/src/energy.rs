//! Empirical energy-distance diagnostics.
//!
//! For one block, the two-sample energy distance under a transform gamma is
//! estimated by
//!
//! ```text
//! e = 2 * mean over all n1*n2 cross pairs
//!   -     mean over within-class-1 unordered pairs
//!   -     mean over within-class-2 unordered pairs
//! ```
//!
//! with every pair mapped through gamma(D_b^-1 ||. - .||^2). The within
//! means exclude the diagonal, which makes the estimate unbiased for the
//! population quantity (and can leave it slightly negative under the null).
//! Averaging block estimates gives the separation the classifier exploits;
//! this module reports it as a diagnostic only.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset};
use crate::dissim::Blocking;
use crate::error::{Error, Result};
use crate::gamma::Gamma;

/// Per-block energy estimates and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// (block index, estimate) pairs, one per block, in block order.
    pub per_block: Vec<BlockEnergy>,
    /// Mean of the per-block estimates.
    pub psi_hat: f64,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEnergy {
    pub block: usize,
    pub energy: f64,
}

/// Energy-distance estimate for one block. `xs` and `ys` are the two
/// classes' samples restricted to the block's coordinates; `block_size`
/// is the block's coordinate count and must match the column count.
pub fn empirical_energy(
    xs: ArrayView2<'_, f64>,
    ys: ArrayView2<'_, f64>,
    gamma: Gamma,
    block_size: usize,
) -> Result<f64> {
    if xs.ncols() != block_size || ys.ncols() != block_size {
        return Err(Error::DimensionMismatch {
            expected: block_size,
            got: if xs.ncols() != block_size {
                xs.ncols()
            } else {
                ys.ncols()
            },
        });
    }
    let (n1, n2) = (xs.nrows(), ys.nrows());
    for (class, size) in [(1u8, n1), (2u8, n2)] {
        if size < 2 {
            return Err(Error::ClassTooSmall {
                class,
                size,
                min: 2,
            });
        }
    }
    for &x in xs.iter().chain(ys.iter()) {
        if x.is_nan() {
            return Err(Error::NanInput);
        }
        if x.is_infinite() {
            return Err(Error::NonFiniteInput);
        }
    }
    Ok(energy_unchecked(&xs, &ys, gamma, block_size))
}

fn energy_unchecked(
    xs: &ArrayView2<'_, f64>,
    ys: &ArrayView2<'_, f64>,
    gamma: Gamma,
    block_size: usize,
) -> f64 {
    let scaled = |a: &[f64], b: &[f64]| -> f64 {
        let mut ss = 0.0;
        for i in 0..a.len() {
            let d = a[i] - b[i];
            ss += d * d;
        }
        gamma.apply(ss / block_size as f64)
    };
    let (n1, n2) = (xs.nrows(), ys.nrows());
    let row = |m: &ArrayView2<'_, f64>, i: usize| -> Vec<f64> { m.row(i).to_vec() };

    let mut cross = 0.0;
    for i in 0..n1 {
        let a = row(xs, i);
        for j in 0..n2 {
            cross += scaled(&a, &row(ys, j));
        }
    }
    cross /= (n1 * n2) as f64;

    let mut within_x = 0.0;
    for i in 0..n1 {
        let a = row(xs, i);
        for j in (i + 1)..n1 {
            within_x += scaled(&a, &row(xs, j));
        }
    }
    within_x /= (n1 * (n1 - 1) / 2) as f64;

    let mut within_y = 0.0;
    for i in 0..n2 {
        let a = row(ys, i);
        for j in (i + 1)..n2 {
            within_y += scaled(&a, &row(ys, j));
        }
    }
    within_y /= (n2 * (n2 - 1) / 2) as f64;

    2.0 * cross - within_x - within_y
}

/// Per-block energy estimates over a blocking, plus their mean.
pub fn separation(train: &Dataset, blocking: &Blocking, gamma: Gamma) -> Result<SeparationReport> {
    if blocking.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: blocking.dim(),
        });
    }
    let class1 = train.class_matrix(ClassId::One);
    let class2 = train.class_matrix(ClassId::Two);
    let (n1, n2) = (class1.nrows(), class2.nrows());
    for (class, size) in [(1u8, n1), (2u8, n2)] {
        if size < 2 {
            return Err(Error::ClassTooSmall {
                class,
                size,
                min: 2,
            });
        }
    }
    let restrict = |m: &Array2<f64>, idx: &[usize]| -> Array2<f64> {
        let mut out = Array2::zeros((m.nrows(), idx.len()));
        for (c, &j) in idx.iter().enumerate() {
            out.column_mut(c).assign(&m.column(j));
        }
        out
    };
    let mut per_block = Vec::with_capacity(blocking.num_blocks());
    let mut total = 0.0;
    for (b, idx) in blocking.blocks().iter().enumerate() {
        let xs = restrict(&class1, idx);
        let ys = restrict(&class2, idx);
        let e = energy_unchecked(&xs.view(), &ys.view(), gamma, idx.len());
        total += e;
        per_block.push(BlockEnergy {
            block: b,
            energy: e,
        });
    }
    Ok(SeparationReport {
        psi_hat: total / blocking.num_blocks() as f64,
        per_block,
        n1,
        n2,
    })
}
