//! Brute-force reference implementations used as independent oracles.
//!
//! Everything here is written as a literal transcription of the defining
//! formulas, with plain loops and no sharing with the library's computation
//! paths. Tests compare the library against these on small instances.
#![allow(dead_code)]

use gsavg::blocking::Dendrogram;
use gsavg::classifier::Variant;
use gsavg::dataset::{ClassId, Dataset};
use gsavg::dissim::Blocking;
use gsavg::gamma::Gamma;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-12;

/// Literal gamma evaluation, deliberately using different float paths than
/// the library (`1 - exp(-t)` instead of `exp_m1`, `ln(1 + t)` instead of
/// `ln_1p`).
pub fn naive_gamma(g: Gamma, t: f64) -> f64 {
    match g {
        Gamma::ExpSaturate => 1.0 - (-t).exp(),
        Gamma::SqrtHalf => t.sqrt() / 2.0,
        Gamma::Log1p => (1.0 + t).ln(),
        Gamma::Identity => t,
    }
}

/// Direct substitution into the block-dissimilarity definition:
/// B^-1 sum_b gamma(D_b^-1 ||u_b - v_b||^2).
pub fn naive_h(u: &[f64], v: &[f64], blocking: &Blocking, gamma: Gamma) -> f64 {
    let blocks = blocking.blocks();
    let mut total = 0.0;
    for block in blocks {
        let mut ss = 0.0;
        for &i in block {
            let d = u[i] - v[i];
            ss += d * d;
        }
        total += naive_gamma(gamma, ss / block.len() as f64);
    }
    total / blocks.len() as f64
}

fn row(m: ArrayView2<'_, f64>, i: usize) -> Vec<f64> {
    m.row(i).to_vec()
}

/// {n(n-1)}^-1 sum over all ordered pairs l != k of h(x_l, x_k).
pub fn naive_within(samples: ArrayView2<'_, f64>, blocking: &Blocking, gamma: Gamma) -> f64 {
    let n = samples.nrows();
    let mut total = 0.0;
    for l in 0..n {
        for k in 0..n {
            if l != k {
                total += naive_h(&row(samples, l), &row(samples, k), blocking, gamma);
            }
        }
    }
    total / (n * (n - 1)) as f64
}

pub fn naive_cross_mean(
    z: &[f64],
    samples: ArrayView2<'_, f64>,
    blocking: &Blocking,
    gamma: Gamma,
) -> f64 {
    let n = samples.nrows();
    let mut total = 0.0;
    for i in 0..n {
        total += naive_h(z, &row(samples, i), blocking, gamma);
    }
    total / n as f64
}

/// Discriminant computed from scratch: [cross(z, class2) - dev2/2] -
/// [cross(z, class1) - dev1/2], with deviations zeroed for the AVG variant.
pub fn naive_discriminant(
    z: &[f64],
    class1: ArrayView2<'_, f64>,
    class2: ArrayView2<'_, f64>,
    variant: Variant,
    blocking: &Blocking,
    gamma: Gamma,
) -> f64 {
    let (dev1, dev2) = match variant {
        Variant::Avg => (0.0, 0.0),
        _ => (
            naive_within(class1, blocking, gamma),
            naive_within(class2, blocking, gamma),
        ),
    };
    let t1 = naive_cross_mean(z, class1, blocking, gamma) - dev1 / 2.0;
    let t2 = naive_cross_mean(z, class2, blocking, gamma) - dev2 / 2.0;
    t2 - t1
}

/// Energy-distance estimate by direct pair enumeration:
/// 2 * mean over all n1*n2 cross pairs - mean over within-x unordered pairs
/// - mean over within-y unordered pairs, each pair through gamma(d_b^-1 ||.||^2).
pub fn naive_energy(
    xs: ArrayView2<'_, f64>,
    ys: ArrayView2<'_, f64>,
    gamma: Gamma,
    block_size: usize,
) -> f64 {
    let scaled = |a: &[f64], b: &[f64]| -> f64 {
        let mut ss = 0.0;
        for i in 0..a.len() {
            let d = a[i] - b[i];
            ss += d * d;
        }
        naive_gamma(gamma, ss / block_size as f64)
    };
    let (n1, n2) = (xs.nrows(), ys.nrows());
    let mut cross = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            cross += scaled(&row(xs, i), &row(ys, j));
        }
    }
    cross /= (n1 * n2) as f64;
    let mut wx = 0.0;
    for i in 0..n1 {
        for j in (i + 1)..n1 {
            wx += scaled(&row(xs, i), &row(xs, j));
        }
    }
    wx /= (n1 * (n1 - 1) / 2) as f64;
    let mut wy = 0.0;
    for i in 0..n2 {
        for j in (i + 1)..n2 {
            wy += scaled(&row(ys, i), &row(ys, j));
        }
    }
    wy /= (n2 * (n2 - 1) / 2) as f64;
    2.0 * cross - wx - wy
}

/// Leave-one-out error for a fixed blocking: every fold refits the
/// classifier from scratch on the reduced training set.
pub fn naive_loocv_error(train: &Dataset, blocking: &Blocking, gamma: Gamma) -> f64 {
    let n = train.n();
    let feats = train.features();
    let mut errors = 0usize;
    for u in 0..n {
        let mut c1 = Vec::new();
        let mut c2 = Vec::new();
        for i in 0..n {
            if i == u {
                continue;
            }
            match train.labels()[i] {
                ClassId::One => c1.push(row(feats.view(), i)),
                ClassId::Two => c2.push(row(feats.view(), i)),
            }
        }
        let to_mat = |rows: &[Vec<f64>]| {
            let d = train.dim();
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            Array2::from_shape_vec((rows.len(), d), flat).unwrap()
        };
        let m1 = to_mat(&c1);
        let m2 = to_mat(&c2);
        let z = row(feats.view(), u);
        let score = naive_discriminant(&z, m1.view(), m2.view(), Variant::Gsavg, blocking, gamma);
        let label = if score > 0.0 {
            ClassId::One
        } else {
            ClassId::Two
        };
        if label != train.labels()[u] {
            errors += 1;
        }
    }
    errors as f64 / n as f64
}

/// Leave-one-out errors for every percentile in `grid`, cutting a dendrogram
/// that was built once on the full training set.
pub fn naive_loocv_grid(
    train: &Dataset,
    dendro: &Dendrogram,
    gamma: Gamma,
    grid: &[f64],
) -> Vec<f64> {
    grid.iter()
        .map(|&p| {
            let blocking = dendro.cut_at_percentile(p).unwrap();
            naive_loocv_error(train, &blocking, gamma)
        })
        .collect()
}

/// Small deterministic Gaussian dataset helper for randomized comparisons.
pub fn random_dataset(rng: &mut ChaCha8Rng, n_per_class: usize, dim: usize) -> Dataset {
    let n = 2 * n_per_class;
    let mut values = Vec::with_capacity(n * dim);
    for _ in 0..(n * dim) {
        // Box-Muller on the test side as well, but fed from a different
        // stream than anything the library draws.
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        values.push((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos());
    }
    let feats = Array2::from_shape_vec((n, dim), values).unwrap();
    let labels = (0..n)
        .map(|i| {
            if i < n_per_class {
                ClassId::One
            } else {
                ClassId::Two
            }
        })
        .collect();
    Dataset::new(feats, labels).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0f64.max(a.abs()).max(b.abs())
}
