//! Data-driven block estimation.
//!
//! Features with strong pairwise correlation (of either sign) belong
//! together, so the dissimilarity between two features is `1 - |rho|`.
//! Average-linkage agglomerative clustering over that matrix gives a
//! dendrogram; cutting it at a percentile of the merge heights gives a
//! candidate blocking; leave-one-out cross-validation over a percentile
//! grid picks the cut.

use std::collections::HashMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::classifier::decide;
use crate::dataset::{ClassId, Dataset};
use crate::dissim::{kernel_unchecked, Blocking};
use crate::error::{Error, Result};
use crate::gamma::Gamma;

/// The percentile grid used when none is supplied.
pub const DEFAULT_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Which correlation coefficient feeds the feature dissimilarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrMethod {
    /// Sample (Pearson) correlation.
    #[serde(rename = "pearson")]
    Pearson,
    /// Rank (Spearman) correlation with average ranks for ties; the robust
    /// choice for heavy-tailed data.
    #[serde(rename = "spearman")]
    Spearman,
}

impl std::fmt::Display for CorrMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CorrMethod::Pearson => "pearson",
            CorrMethod::Spearman => "spearman",
        })
    }
}

impl std::str::FromStr for CorrMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pearson" => Ok(CorrMethod::Pearson),
            "spearman" => Ok(CorrMethod::Spearman),
            other => Err(Error::InvalidParameter(format!(
                "unknown correlation method {other:?}; expected pearson or spearman"
            ))),
        }
    }
}

/// Average ranks (ties share the mean of their rank range), 1-based.
fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// The D x D feature-dissimilarity matrix `l(d, d') = 1 - |rho(d, d')|`
/// over the pooled observations of both classes. Entries lie in [0, 1],
/// the diagonal is exactly 0, and the matrix is exactly symmetric.
///
/// Constant features have no correlation signal; their rho is taken as 0
/// (dissimilarity 1 to everything) and a warning is logged.
pub fn correlation_dissimilarity(data: &Dataset, method: CorrMethod) -> Result<Array2<f64>> {
    let n = data.n();
    let d = data.dim();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "correlation needs at least 3 observations, got {n}"
        )));
    }
    // Center each column and scale to unit norm so the correlation matrix
    // is just Z^T Z.
    let mut z = match method {
        CorrMethod::Pearson => data.features().to_owned(),
        CorrMethod::Spearman => {
            let mut m = Array2::zeros((n, d));
            for (j, col) in data.features().columns().into_iter().enumerate() {
                let values = col.to_vec();
                for (i, v) in ranks(&values).into_iter().enumerate() {
                    m[[i, j]] = v;
                }
            }
            m
        }
    };
    let mut constant = Vec::new();
    for (j, mut col) in z.columns_mut().into_iter().enumerate() {
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|x| x - mean);
        let norm = col.iter().map(|&x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            constant.push(j + 1);
        } else {
            col.mapv_inplace(|x| x / norm);
        }
    }
    if !constant.is_empty() {
        log::warn!(
            "{} constant feature(s) (1-based: {:?}); treating their correlations as 0",
            constant.len(),
            constant
        );
    }
    let rho = z.t().dot(&z);
    let mut l = Array2::zeros((d, d));
    for i in 0..d {
        for j in (i + 1)..d {
            let v = (1.0 - rho[[i, j]].abs()).clamp(0.0, 1.0);
            l[[i, j]] = v;
            l[[j, i]] = v;
        }
    }
    Ok(l)
}

/// One agglomeration step. Cluster ids follow the usual stepwise
/// convention: leaves are `0..n_leaves`, the cluster created by merge `k`
/// is `n_leaves + k`. `left < right` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

/// A stepwise dendrogram from average-linkage clustering. Heights are
/// non-decreasing along the merge sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    merges: Vec<Merge>,
    n_leaves: usize,
}

impl Dendrogram {
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    /// The multiset of merge heights, in merge order.
    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Cut the tree at the p-th percentile of the merge heights
    /// (lower-interpolation convention: `sorted[floor(p * (m - 1))]`) and
    /// return the clusters formed by all merges with height <= h_p.
    ///
    /// `p = 0` always yields singletons, even when some merge heights are
    /// zero; `p = 1` yields a single block.
    pub fn cut_at_percentile(&self, p: f64) -> Result<Blocking> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::PercentileOutOfRange(p));
        }
        if p == 0.0 || self.merges.is_empty() {
            return Ok(Blocking::singletons(self.n_leaves));
        }
        let mut sorted = self.heights();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite heights"));
        let idx = (p * (sorted.len() - 1) as f64).floor() as usize;
        let h_p = sorted[idx.min(sorted.len() - 1)];
        let applied = self.merges.iter().take_while(|m| m.height <= h_p).count();
        Ok(self.blocking_after(applied))
    }

    /// Clusters present after applying the first `applied` merges.
    fn blocking_after(&self, applied: usize) -> Blocking {
        let n = self.n_leaves;
        // map cluster id -> member leaves; ids >= n created by merges
        let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
        members.resize(n + applied, None);
        for (k, m) in self.merges.iter().take(applied).enumerate() {
            let mut a = members[m.left].take().expect("active cluster");
            let b = members[m.right].take().expect("active cluster");
            a.extend(b);
            members[n + k] = Some(a);
        }
        let mut blocks: Vec<Vec<usize>> = members.into_iter().flatten().collect();
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Blocking::new(blocks, n).expect("partition by construction")
    }
}

/// Average-linkage (UPGMA) agglomerative clustering of a symmetric
/// dissimilarity matrix with zero diagonal.
///
/// Ties on the minimal linkage are broken deterministically: each cluster
/// is represented by its smallest leaf index, and among tied pairs the one
/// with the lexicographically smallest (min-rep, max-rep) tuple merges
/// first. Representatives are distinct across live clusters, so the
/// (distance, rep-pair) key totally orders the candidate pairs and the
/// merge sequence is unique.
pub fn average_linkage(dissimilarity: &Array2<f64>) -> Result<Dendrogram> {
    let n = dissimilarity.nrows();
    if n == 0 || dissimilarity.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "dissimilarity matrix must be square and nonempty, got {}x{}",
            n,
            dissimilarity.ncols()
        )));
    }
    for i in 0..n {
        if dissimilarity[[i, i]] != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nonzero diagonal at ({i}, {i})"
            )));
        }
        for j in (i + 1)..n {
            let a = dissimilarity[[i, j]];
            let b = dissimilarity[[j, i]];
            if a.is_nan() || b.is_nan() {
                return Err(Error::NanInput);
            }
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFiniteInput);
            }
            if a != b {
                return Err(Error::InvalidParameter(format!(
                    "asymmetric dissimilarity at ({i}, {j})"
                )));
            }
        }
    }
    Ok(upgma(dissimilarity))
}

#[derive(Clone, Copy)]
struct Slot {
    id: usize,
    rep: usize,
    size: usize,
}

#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    key: (usize, usize),
    target: usize,
}

fn candidate(dist: &Array2<f64>, slots: &[Slot], si: usize, sj: usize) -> Candidate {
    let (ra, rb) = (slots[si].rep, slots[sj].rep);
    Candidate {
        dist: dist[[si, sj]],
        key: (ra.min(rb), ra.max(rb)),
        target: sj,
    }
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.dist < b.dist || (a.dist == b.dist && a.key < b.key)
}

/// Cached-nearest-neighbor agglomeration: each live cluster keeps its best
/// partner under the (distance, rep-pair) order, so a step costs O(A) plus
/// recomputation for clusters whose cached partner just merged. Selects the
/// same pair every step as a full scan over all candidate pairs (the order
/// is total), in roughly O(n^2) instead of O(n^3).
fn upgma(dissimilarity: &Array2<f64>) -> Dendrogram {
    let n = dissimilarity.nrows();
    // Working copy with Lance-Williams updates written in place.
    let mut dist = dissimilarity.to_owned();
    let mut slots: Vec<Slot> = (0..n)
        .map(|i| Slot {
            id: i,
            rep: i,
            size: 1,
        })
        .collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    let full_scan = |dist: &Array2<f64>, slots: &[Slot], active: &[usize], si: usize| {
        let mut best: Option<Candidate> = None;
        for &sk in active {
            if sk == si {
                continue;
            }
            let c = candidate(dist, slots, si, sk);
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
        best
    };

    // nearest[s]: the best partner of live slot s
    let mut nearest: Vec<Option<Candidate>> = vec![None; n];
    for &si in &active {
        nearest[si] = full_scan(&dist, &slots, &active, si);
    }

    for step in 0..n.saturating_sub(1) {
        let mut si = active[0];
        for &sk in &active {
            let (a, b) = (&nearest[sk], &nearest[si]);
            if let (Some(a), Some(b)) = (a, b) {
                if better(a, b) {
                    si = sk;
                }
            }
        }
        let chosen = nearest[si].expect("live slot has a partner");
        let sj = chosen.target;
        let height = chosen.dist;

        let (id_a, id_b) = (slots[si].id, slots[sj].id);
        merges.push(Merge {
            left: id_a.min(id_b),
            right: id_a.max(id_b),
            height,
        });

        // Lance-Williams update for average linkage: the merged cluster's
        // distance to k is the size-weighted mean of the two parts.
        let (na, nb) = (slots[si].size as f64, slots[sj].size as f64);
        for &sk in &active {
            if sk == si || sk == sj {
                continue;
            }
            let d_new = (na * dist[[sk, si]] + nb * dist[[sk, sj]]) / (na + nb);
            dist[[sk, si]] = d_new;
            dist[[si, sk]] = d_new;
        }
        slots[si].id = n + step;
        slots[si].rep = slots[si].rep.min(slots[sj].rep);
        slots[si].size += slots[sj].size;
        active.swap_remove(active.iter().position(|&s| s == sj).expect("sj live"));
        nearest[sj] = None;

        // Refresh caches: a cluster whose cached partner was consumed is
        // rescanned; everyone else only races its cache against the merged
        // cluster.
        nearest[si] = full_scan(&dist, &slots, &active, si);
        for &sk in &active {
            if sk == si {
                continue;
            }
            let stale = matches!(&nearest[sk], Some(c) if c.target == si || c.target == sj);
            if stale {
                nearest[sk] = full_scan(&dist, &slots, &active, sk);
            } else {
                let c = candidate(&dist, &slots, sk, si);
                if nearest[sk].as_ref().is_none_or(|b| better(&c, b)) {
                    nearest[sk] = Some(c);
                }
            }
        }
    }
    Dendrogram {
        merges,
        n_leaves: n,
    }
}

/// The LOOCV outcome over a percentile grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileSelection {
    /// The grid, sorted ascending.
    pub grid: Vec<f64>,
    /// Leave-one-out error at each grid point.
    pub errors: Vec<f64>,
    /// The argmin percentile; ties go to the smallest p.
    pub chosen: f64,
    pub chosen_blocking: Blocking,
}

/// Leave-one-out error for a fixed blocking, computed from the n x n
/// pairwise dissimilarity matrix. Every fold recomputes the left-out
/// point's class deviation over the reduced class, pair order ascending,
/// which reproduces a from-scratch refit bit for bit.
fn loocv_error(
    train: &Dataset,
    idx_by_class: &[Vec<usize>; 2],
    blocking: &Blocking,
    gamma: Gamma,
) -> f64 {
    let n = train.n();
    let feats = train.features();
    let mut h = Array2::<f64>::zeros((n, n));
    for l in 0..n {
        let a = feats.row(l);
        let a = a.to_slice().expect("row-major features");
        for k in (l + 1)..n {
            let b = feats.row(k);
            let b = b.to_slice().expect("row-major features");
            let v = kernel_unchecked(a, b, blocking, gamma);
            h[[l, k]] = v;
            h[[k, l]] = v;
        }
    }

    let pair_mean = |idx: &[usize], skip: Option<usize>| -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (a, &l) in idx.iter().enumerate() {
            if Some(l) == skip {
                continue;
            }
            for &k in &idx[(a + 1)..] {
                if Some(k) == skip {
                    continue;
                }
                total += h[[l, k]];
                count += 1;
            }
        }
        total / count as f64
    };
    let full_dev = [
        pair_mean(&idx_by_class[0], None),
        pair_mean(&idx_by_class[1], None),
    ];

    let mut errors = 0usize;
    for (u, &truth) in train.labels().iter().enumerate() {
        let mut dev = full_dev;
        dev[truth.index()] = pair_mean(&idx_by_class[truth.index()], Some(u));
        let cross = |idx: &[usize]| -> f64 {
            let mut total = 0.0;
            let mut count = 0usize;
            for &k in idx {
                if k == u {
                    continue;
                }
                total += h[[u, k]];
                count += 1;
            }
            total / count as f64
        };
        let t1 = cross(&idx_by_class[0]) - dev[0] / 2.0;
        let t2 = cross(&idx_by_class[1]) - dev[1] / 2.0;
        if decide(t2 - t1).label != truth {
            errors += 1;
        }
    }
    errors as f64 / n as f64
}

/// LOOCV percentile selection against a dendrogram that was already built
/// from the full training set.
pub fn select_percentile_with_dendrogram(
    train: &Dataset,
    dendrogram: &Dendrogram,
    gamma: Gamma,
    grid: &[f64],
) -> Result<PercentileSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty percentile grid".into()));
    }
    for &p in grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::PercentileOutOfRange(p));
        }
    }
    if dendrogram.n_leaves() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: dendrogram.n_leaves(),
        });
    }
    let (n1, n2) = train.class_counts();
    for (class, size) in [(1u8, n1), (2u8, n2)] {
        if size < 3 {
            return Err(Error::ClassTooSmall {
                class,
                size,
                min: 3,
            });
        }
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite percentile"));
    grid.dedup();

    let idx_by_class = [
        train.class_indices(ClassId::One),
        train.class_indices(ClassId::Two),
    ];

    // Distinct percentiles often induce the same merge prefix; cache the
    // error by prefix length (p = 0 forces the empty prefix).
    let mut by_prefix: HashMap<usize, f64> = HashMap::new();
    let mut errors = Vec::with_capacity(grid.len());
    let mut blockings = Vec::with_capacity(grid.len());
    for &p in &grid {
        let blocking = dendrogram.cut_at_percentile(p)?;
        let prefix = train.dim() - blocking.num_blocks();
        let e = *by_prefix
            .entry(prefix)
            .or_insert_with(|| loocv_error(train, &idx_by_class, &blocking, gamma));
        errors.push(e);
        blockings.push(blocking);
    }

    let mut chosen_idx = 0;
    for (i, &e) in errors.iter().enumerate() {
        if e < errors[chosen_idx] {
            chosen_idx = i;
        }
    }
    let chosen_blocking = blockings[chosen_idx].clone();
    if chosen_blocking.max_block_size() > train.dim().div_ceil(2) {
        log::warn!(
            "selected blocking has a block of size {} (dimension {}); the separation theory assumes bounded block sizes",
            chosen_blocking.max_block_size(),
            train.dim()
        );
    }
    Ok(PercentileSelection {
        chosen: grid[chosen_idx],
        grid,
        errors,
        chosen_blocking,
    })
}

/// Full pipeline: correlation dissimilarity, average-linkage dendrogram
/// (built once on the full training set), then LOOCV over the grid.
pub fn select_percentile_loocv(
    train: &Dataset,
    gamma: Gamma,
    grid: &[f64],
    method: CorrMethod,
) -> Result<PercentileSelection> {
    let l = correlation_dissimilarity(train, method)?;
    let dendro = average_linkage(&l)?;
    select_percentile_with_dendrogram(train, &dendro, gamma, grid)
}

/// Everything the `blocks` CLI command reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlocksReport {
    pub method: CorrMethod,
    pub gamma: Gamma,
    pub merges: Vec<Merge>,
    pub heights: Vec<f64>,
    pub per_p: Vec<PercentileEntry>,
    pub p_hat: f64,
    /// 1-based index lists of the blocking at `p_hat`.
    pub chosen_blocks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PercentileEntry {
    pub p: f64,
    pub num_blocks: usize,
    /// 1-based index lists.
    pub blocks: Vec<Vec<usize>>,
    pub error: f64,
}

/// Build the full blocks report for a training set.
pub fn blocks_report(
    train: &Dataset,
    method: CorrMethod,
    gamma: Gamma,
    grid: &[f64],
) -> Result<BlocksReport> {
    let l = correlation_dissimilarity(train, method)?;
    let dendro = average_linkage(&l)?;
    let selection = select_percentile_with_dendrogram(train, &dendro, gamma, grid)?;
    let per_p = selection
        .grid
        .iter()
        .zip(&selection.errors)
        .map(|(&p, &error)| {
            let blocking = dendro.cut_at_percentile(p)?;
            Ok(PercentileEntry {
                p,
                num_blocks: blocking.num_blocks(),
                blocks: blocking.to_one_based(),
                error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlocksReport {
        method,
        gamma,
        heights: dendro.heights(),
        merges: dendro.merges().to_vec(),
        per_p,
        p_hat: selection.chosen,
        chosen_blocks: selection.chosen_blocking.to_one_based(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<ClassId>) -> Dataset {
        let d = rows[0].len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Dataset::new(
            Array2::from_shape_vec((rows.len(), d), flat).unwrap(),
            labels,
        )
        .unwrap()
    }

    #[test]
    fn duplicated_and_negated_features_have_zero_dissimilarity() {
        let data = matrix(
            vec![
                vec![1.0, 1.0, -1.0],
                vec![2.0, 2.0, -2.0],
                vec![3.0, 3.0, -3.0],
                vec![5.0, 5.0, -5.0],
            ],
            vec![ClassId::One, ClassId::One, ClassId::Two, ClassId::Two],
        );
        let l = correlation_dissimilarity(&data, CorrMethod::Pearson).unwrap();
        assert!(l[[0, 1]].abs() < 1e-12);
        assert!(l[[0, 2]].abs() < 1e-12);
        assert_eq!(l[[0, 0]], 0.0);
    }

    #[test]
    fn pearson_matches_hand_computation() {
        // 3 features, 4 samples; Pearson computed inline by the textbook
        // formula as an independent route.
        let rows = [
            [1.0, 2.0, 0.5],
            [2.0, 1.5, 3.0],
            [3.0, 4.0, -1.0],
            [4.0, 3.5, 2.0],
        ];
        let data = matrix(
            rows.iter().map(|r| r.to_vec()).collect(),
            vec![ClassId::One, ClassId::One, ClassId::Two, ClassId::Two],
        );
        let l = correlation_dissimilarity(&data, CorrMethod::Pearson).unwrap();
        let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
        let pearson = |x: &[f64], y: &[f64]| {
            let n = x.len() as f64;
            let mx = x.iter().sum::<f64>() / n;
            let my = y.iter().sum::<f64>() / n;
            let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
            let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
            cov / (vx.sqrt() * vy.sqrt())
        };
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j {
                    0.0
                } else {
                    1.0 - pearson(&col(i), &col(j)).abs()
                };
                assert!(
                    (l[[i, j]] - expected).abs() < 1e-12,
                    "({i},{j}): {} vs {expected}",
                    l[[i, j]]
                );
            }
        }
    }

    #[test]
    fn constant_feature_gets_unit_dissimilarity() {
        let data = matrix(
            vec![
                vec![1.0, 7.0, 0.1],
                vec![2.0, 7.0, 0.4],
                vec![3.0, 7.0, 0.2],
                vec![4.0, 7.0, 0.9],
            ],
            vec![ClassId::One, ClassId::One, ClassId::Two, ClassId::Two],
        );
        let l = correlation_dissimilarity(&data, CorrMethod::Pearson).unwrap();
        assert_eq!(l[[0, 1]], 1.0);
        assert_eq!(l[[1, 2]], 1.0);
        assert_eq!(l[[1, 1]], 0.0);
    }

    #[test]
    fn correlation_needs_three_rows() {
        let data = matrix(
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![ClassId::One, ClassId::Two],
        );
        assert!(correlation_dissimilarity(&data, CorrMethod::Pearson).is_err());
    }

    #[test]
    fn upgma_two_leaves() {
        let d = array![[0.0, 0.3], [0.3, 0.0]];
        let dendro = average_linkage(&d).unwrap();
        assert_eq!(
            dendro.merges(),
            &[Merge {
                left: 0,
                right: 1,
                height: 0.3
            }]
        );
    }

    #[test]
    fn upgma_three_leaf_hand_trace() {
        // l(0,1)=0.1, l(0,2)=0.9, l(1,2)=0.7: first {0,1}@0.1 then @0.8
        let d = array![[0.0, 0.1, 0.9], [0.1, 0.0, 0.7], [0.9, 0.7, 0.0]];
        let dendro = average_linkage(&d).unwrap();
        assert_eq!(dendro.merges().len(), 2);
        assert_eq!((dendro.merges()[0].left, dendro.merges()[0].right), (0, 1));
        assert_eq!(dendro.merges()[0].height, 0.1);
        assert_eq!((dendro.merges()[1].left, dendro.merges()[1].right), (2, 3));
        assert!((dendro.merges()[1].height - 0.8).abs() < 1e-15);
    }

    /// Reference agglomeration: scan every live pair each step. Same
    /// selection rule, no caching.
    fn upgma_full_scan(dissimilarity: &Array2<f64>) -> Vec<Merge> {
        let n = dissimilarity.nrows();
        let mut dist = dissimilarity.to_owned();
        let mut slots: Vec<Slot> = (0..n)
            .map(|i| Slot {
                id: i,
                rep: i,
                size: 1,
            })
            .collect();
        let mut active: Vec<usize> = (0..n).collect();
        let mut merges = Vec::new();
        for step in 0..n.saturating_sub(1) {
            let mut best: Option<(Candidate, usize)> = None;
            for ai in 0..active.len() {
                for aj in (ai + 1)..active.len() {
                    let c = candidate(&dist, &slots, active[ai], active[aj]);
                    if best.as_ref().is_none_or(|(b, _)| better(&c, b)) {
                        best = Some((c, active[ai]));
                    }
                }
            }
            let (chosen, si) = best.unwrap();
            let sj = chosen.target;
            let (id_a, id_b) = (slots[si].id, slots[sj].id);
            merges.push(Merge {
                left: id_a.min(id_b),
                right: id_a.max(id_b),
                height: chosen.dist,
            });
            let (na, nb) = (slots[si].size as f64, slots[sj].size as f64);
            for &sk in &active {
                if sk == si || sk == sj {
                    continue;
                }
                let d_new = (na * dist[[sk, si]] + nb * dist[[sk, sj]]) / (na + nb);
                dist[[sk, si]] = d_new;
                dist[[si, sk]] = d_new;
            }
            slots[si].id = n + step;
            slots[si].rep = slots[si].rep.min(slots[sj].rep);
            slots[si].size += slots[sj].size;
            active.retain(|&s| s != sj);
        }
        merges
    }

    #[test]
    fn cached_upgma_matches_full_scan_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for case in 0..40 {
            let d = 2 + (rng.random::<u32>() % 60) as usize;
            let mut m = Array2::zeros((d, d));
            for i in 0..d {
                for j in (i + 1)..d {
                    // quantized values force plenty of exact ties
                    let v: f64 = if case % 3 == 0 {
                        (rng.random::<u32>() % 4) as f64 / 4.0
                    } else {
                        rng.random()
                    };
                    m[[i, j]] = v;
                    m[[j, i]] = v;
                }
            }
            let fast = average_linkage(&m).unwrap();
            let slow = upgma_full_scan(&m);
            assert_eq!(fast.merges(), slow.as_slice(), "case {case}, d={d}");
        }
        // fully tied matrix
        let d = 9;
        let m = Array2::from_shape_fn((d, d), |(i, j)| if i == j { 0.0 } else { 0.5 });
        assert_eq!(
            average_linkage(&m).unwrap().merges(),
            upgma_full_scan(&m).as_slice()
        );
    }

    #[test]
    fn upgma_tie_rule_is_lexicographic() {
        let d = Array2::from_shape_fn((3, 3), |(i, j)| if i == j { 0.0 } else { 0.5 });
        let dendro = average_linkage(&d).unwrap();
        // all pairs tied at 0.5: (0,1) merges first, then {0,1} with 2
        assert_eq!((dendro.merges()[0].left, dendro.merges()[0].right), (0, 1));
        assert_eq!((dendro.merges()[1].left, dendro.merges()[1].right), (2, 3));
        assert_eq!(dendro.merges()[1].height, 0.5);
    }

    #[test]
    fn upgma_rejects_bad_matrices() {
        let asym = array![[0.0, 0.1], [0.2, 0.0]];
        assert!(average_linkage(&asym).is_err());
        let nan = array![[0.0, f64::NAN], [f64::NAN, 0.0]];
        assert!(average_linkage(&nan).is_err());
        let diag = array![[0.5]];
        assert!(average_linkage(&diag).is_err());
    }

    #[test]
    fn heights_are_monotone_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 2 + (rng.random::<u32>() % 12) as usize;
            let mut m = Array2::zeros((n, n));
            for i in 0..n {
                for j in (i + 1)..n {
                    let v: f64 = rng.random();
                    m[[i, j]] = v;
                    m[[j, i]] = v;
                }
            }
            let dendro = average_linkage(&m).unwrap();
            let h = dendro.heights();
            assert!(h.windows(2).all(|w| w[0] <= w[1]), "heights not monotone");
        }
    }

    #[test]
    fn cut_endpoints() {
        let d = array![[0.0, 0.1, 0.9], [0.1, 0.0, 0.7], [0.9, 0.7, 0.0]];
        let dendro = average_linkage(&d).unwrap();
        assert_eq!(dendro.cut_at_percentile(0.0).unwrap().num_blocks(), 3);
        assert_eq!(dendro.cut_at_percentile(1.0).unwrap().num_blocks(), 1);
        let mid = dendro.cut_at_percentile(0.5).unwrap();
        assert_eq!(mid.blocks(), &[vec![0, 1], vec![2]]);
        assert!(dendro.cut_at_percentile(1.5).is_err());
        assert!(dendro.cut_at_percentile(-0.1).is_err());
    }

    #[test]
    fn cut_at_zero_ignores_zero_height_merges() {
        // duplicated features create an exactly zero merge height
        let d = array![[0.0, 0.0, 0.8], [0.0, 0.0, 0.8], [0.8, 0.8, 0.0]];
        let dendro = average_linkage(&d).unwrap();
        assert_eq!(dendro.heights()[0], 0.0);
        assert_eq!(dendro.cut_at_percentile(0.0).unwrap().num_blocks(), 3);
        // but any p > 0 applies the zero-height merge
        assert!(dendro.cut_at_percentile(0.1).unwrap().num_blocks() < 3);
    }

    #[test]
    fn block_count_monotone_in_p() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let n = 10;
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.random();
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        let dendro = average_linkage(&m).unwrap();
        let counts: Vec<usize> = DEFAULT_GRID
            .iter()
            .map(|&p| dendro.cut_at_percentile(p).unwrap().num_blocks())
            .collect();
        assert_eq!(counts[0], n);
        assert_eq!(*counts.last().unwrap(), 1);
        assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn separable_toy_selects_smallest_p() {
        // two tight, distant clusters: every cut classifies perfectly, so
        // the tie rule must pick p = 0
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..4 {
            rows.push(vec![i as f64 * 0.01, 1.0 + i as f64 * 0.01, 0.5]);
            labels.push(ClassId::One);
            rows.push(vec![50.0 + i as f64 * 0.01, -40.0, 0.5 + i as f64 * 0.02]);
            labels.push(ClassId::Two);
        }
        let data = matrix(rows, labels);
        let sel = select_percentile_loocv(
            &data,
            Gamma::ExpSaturate,
            &DEFAULT_GRID,
            CorrMethod::Pearson,
        )
        .unwrap();
        assert!(sel.errors.iter().all(|&e| e == 0.0));
        assert_eq!(sel.chosen, 0.0);
        assert_eq!(sel.chosen_blocking.num_blocks(), data.dim());
    }

    #[test]
    fn loocv_requires_three_per_class() {
        let data = matrix(
            vec![
                vec![0.0, 1.0],
                vec![0.1, 1.1],
                vec![5.0, 4.0],
                vec![5.1, 4.1],
                vec![5.2, 4.2],
            ],
            vec![
                ClassId::One,
                ClassId::One,
                ClassId::Two,
                ClassId::Two,
                ClassId::Two,
            ],
        );
        assert!(matches!(
            select_percentile_loocv(
                &data,
                Gamma::ExpSaturate,
                &DEFAULT_GRID,
                CorrMethod::Pearson
            ),
            Err(Error::ClassTooSmall { class: 1, .. })
        ));
    }

    #[test]
    fn empty_grid_is_rejected() {
        let data = matrix(
            vec![
                vec![0.0, 1.0],
                vec![0.1, 1.1],
                vec![0.2, 0.9],
                vec![5.0, 4.0],
                vec![5.1, 4.1],
                vec![5.2, 4.2],
            ],
            vec![
                ClassId::One,
                ClassId::One,
                ClassId::One,
                ClassId::Two,
                ClassId::Two,
                ClassId::Two,
            ],
        );
        assert!(matches!(
            select_percentile_loocv(&data, Gamma::ExpSaturate, &[], CorrMethod::Pearson),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn default_grid_matches_convention() {
        assert_eq!(DEFAULT_GRID.len(), 11);
        assert_eq!(DEFAULT_GRID[0], 0.0);
        assert_eq!(DEFAULT_GRID[10], 1.0);
        for (k, &p) in DEFAULT_GRID.iter().enumerate() {
            assert!((p - k as f64 * 0.1).abs() < 1e-12);
        }
    }
}
