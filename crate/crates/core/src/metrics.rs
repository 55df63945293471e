//! Embedding quality scores and cluster-then-pick workflow.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::nearest_indices;
use crate::dataset::pairwise_sq_distances;
use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_LLOYD: usize = 300;
pub const SWEEP_MIN_K: usize = 2;
pub const SWEEP_MAX_K: usize = 12;

fn check_same_rows<T: Scalar>(x: &Matrix<T>, y: &Matrix<T>) -> Result<()> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "original has {} rows, embedding has {}",
            x.rows(),
            y.rows()
        )));
    }
    Ok(())
}

/// Penalizes points that enter an embedded neighborhood without being original neighbors.
///
/// `1 − 2/(N·k·(2N−3k−1)) · Σ_i Σ_{j ∈ U_i} (r(i,j) − k)`, with `U_i` the
/// embedded `k`-neighbors of `i` that are not original `k`-neighbors and
/// `r(i,j)` the original rank of `j` (1-based).
pub fn trustworthiness<T: Scalar>(x: &Matrix<T>, y: &Matrix<T>, k: usize) -> Result<T> {
    check_same_rows(x, y)?;
    let n = x.rows();
    if k == 0 || 2 * k >= n {
        return Err(Error::KTooLarge { k, n, limit: n.div_ceil(2) });
    }
    let dx = pairwise_sq_distances(x);
    let dy = pairwise_sq_distances(y);
    let penalties: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            let order = nearest_indices(&dx, i, n);
            let mut rank = vec![0usize; n];
            for (r, &j) in order.iter().enumerate() {
                rank[j] = r + 1;
            }
            nearest_indices(&dy, i, k)
                .into_iter()
                .filter(|&j| rank[j] > k)
                .map(|j| rank[j] - k)
                .sum()
        })
        .collect();
    let total: usize = penalties.iter().sum();
    let (nf, kf) = (n as f64, k as f64);
    let norm = 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0));
    Ok(T::lit(1.0 - norm * total as f64))
}

/// Mean fraction of shared `k`-nearest neighbors between `x` and `y`.
pub fn knn_preservation<T: Scalar>(x: &Matrix<T>, y: &Matrix<T>, k: usize) -> Result<T> {
    check_same_rows(x, y)?;
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n, limit: n });
    }
    let dx = pairwise_sq_distances(x);
    let dy = pairwise_sq_distances(y);
    let shared: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = nearest_indices(&dx, i, k);
            nearest_indices(&dy, i, k).iter().filter(|j| a.contains(j)).count()
        })
        .collect();
    let total: usize = shared.iter().sum();
    Ok(T::lit(total as f64 / (n * k) as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<T> {
    pub labels: Vec<usize>,
    pub centroids: Matrix<T>,
    pub inertia: T,
    /// Lloyd iterations of the winning restart.
    pub iterations: usize,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<T>,
    /// Empty clusters repaired across all restarts.
    pub repaired_empty: usize,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum()
}

fn nearest_centroid<T: Scalar>(p: &[T], centroids: &Matrix<T>) -> (usize, T) {
    let mut best = (0, sq_dist(p, centroids.row(0)));
    for c in 1..centroids.rows() {
        let d = sq_dist(p, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn inertia_of<T: Scalar>(y: &Matrix<T>, labels: &[usize], centroids: &Matrix<T>) -> T {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(y.row(i), centroids.row(l)))
        .sum()
}

fn plus_plus_seeds<T: Scalar>(y: &Matrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let n = y.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(y.row(i), y.row(chosen[0])).to_f64_lossy()).collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in closest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| closest.iter().rposition(|&d| d > 0.0).expect("positive mass"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(sq_dist(y.row(i), y.row(next)).to_f64_lossy());
        }
    }
    y.select_rows(&chosen)
}

struct LloydRun<T> {
    labels: Vec<usize>,
    centroids: Matrix<T>,
    inertia: T,
    iterations: usize,
    trace: Vec<T>,
    repaired: usize,
}

fn lloyd<T: Scalar>(y: &Matrix<T>, mut centroids: Matrix<T>, max_iter: usize) -> LloydRun<T> {
    let (n, d, k) = (y.rows(), y.cols(), centroids.rows());
    let mut labels: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut repaired = 0;
    let mut iterations = 0;
    while iterations < max_iter {
        let assigned: Vec<(usize, T)> = (0..n)
            .into_par_iter()
            .map(|i| nearest_centroid(y.row(i), &centroids))
            .collect();
        trace.push(assigned.iter().map(|a| a.1).sum());
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        iterations += 1;
        if labels.as_ref() == Some(&new_labels) {
            break;
        }
        let mut labels_now = new_labels;
        let mut sums: Matrix<T> = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels_now.iter().enumerate() {
            counts[l] += 1;
            for (s, &v) in sums.row_mut(l).iter_mut().zip(y.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = T::from_usize_lossy(counts[c]);
                for (dst, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s / inv;
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far: Option<(usize, T)> = None;
            for i in 0..n {
                if counts[labels_now[i]] < 2 {
                    continue;
                }
                let dist = sq_dist(y.row(i), centroids.row(labels_now[i]));
                if far.is_none_or(|(_, best)| dist > best) {
                    far = Some((i, dist));
                }
            }
            let (i, _) = far.expect("some cluster has two members when one is empty");
            counts[labels_now[i]] -= 1;
            labels_now[i] = c;
            counts[c] = 1;
            centroids.row_mut(c).copy_from_slice(y.row(i));
            repaired += 1;
        }
        labels = Some(labels_now);
    }
    let labels = labels.expect("at least one iteration");
    let inertia = inertia_of(y, &labels, &centroids);
    LloydRun {
        labels,
        centroids,
        inertia,
        iterations,
        trace,
        repaired,
    }
}

/// Best-of-`restarts` Lloyd's algorithm with k-means++ seeding.
///
/// Empty clusters are repaired by moving in the point farthest from its
/// centroid; assignment ties go to the lower cluster index.
pub fn kmeans<T: Scalar>(y: &Matrix<T>, k: usize, seed: u64, restarts: usize) -> Result<KMeansResult<T>> {
    kmeans_with(y, k, seed, restarts, DEFAULT_MAX_LLOYD)
}

pub fn kmeans_with<T: Scalar>(
    y: &Matrix<T>,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
) -> Result<KMeansResult<T>> {
    let n = y.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cluster count {k} must be in 1..={n}")));
    }
    if restarts == 0 || max_iter == 0 {
        return Err(Error::InvalidInput("restarts and iteration limit must be positive".into()));
    }
    if !y.is_finite() {
        return Err(Error::InvalidInput("embedding contains non-finite values".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<LloydRun<T>> = None;
    let mut repaired = 0;
    for _ in 0..restarts {
        let run = lloyd(y, plus_plus_seeds(y, k, &mut rng), max_iter);
        repaired += run.repaired;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts > 0");
    Ok(KMeansResult {
        labels: best.labels,
        centroids: best.centroids,
        inertia: best.inertia,
        iterations: best.iterations,
        inertia_trace: best.trace,
        repaired_empty: repaired,
    })
}

/// Mean silhouette `(b − a)/max(a, b)` over all points, Euclidean distances.
///
/// Singleton clusters score 0.
pub fn silhouette<T: Scalar>(y: &Matrix<T>, labels: &[usize]) -> Result<T> {
    if labels.len() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} points",
            labels.len(),
            y.rows()
        )));
    }
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        let next = index.len();
        index.entry(l).or_insert(next);
    }
    let m = index.len();
    if m < 2 {
        return Err(Error::SingleCluster);
    }
    let cluster: Vec<usize> = labels.iter().map(|l| index[l]).collect();
    let mut sizes = vec![0usize; m];
    for &c in &cluster {
        sizes[c] += 1;
    }
    let n = y.rows();
    let scores: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = cluster[i];
            if sizes[own] == 1 {
                return T::zero();
            }
            let mut sums = vec![T::zero(); m];
            for j in 0..n {
                if j != i {
                    sums[cluster[j]] += sq_dist(y.row(i), y.row(j)).sqrt();
                }
            }
            let a = sums[own] / T::from_usize_lossy(sizes[own] - 1);
            let b = (0..m)
                .filter(|&c| c != own)
                .map(|c| sums[c] / T::from_usize_lossy(sizes[c]))
                .fold(T::infinity(), T::min);
            let denom = a.max(b);
            if denom > T::zero() {
                (b - a) / denom
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(scores.iter().copied().sum::<T>() / T::from_usize_lossy(n))
}

/// Silhouette of the k-means clustering for each `k` in `2..=12` (capped at `N`).
pub fn silhouette_sweep<T: Scalar>(y: &Matrix<T>, seed: u64, restarts: usize) -> Result<Vec<(usize, T)>> {
    let hi = SWEEP_MAX_K.min(y.rows());
    (SWEEP_MIN_K..=hi)
        .map(|k| {
            let km = kmeans(y, k, seed, restarts)?;
            Ok((k, silhouette(y, &km.labels)?))
        })
        .collect()
}

/// Index of the member nearest each centroid (ties by index), in cluster order.
///
/// Clusters without members are skipped.
pub fn representative_indices<T: Scalar>(y: &Matrix<T>, labels: &[usize], centroids: &Matrix<T>) -> Vec<usize> {
    (0..centroids.rows())
        .filter_map(|c| {
            let mut best: Option<(usize, T)> = None;
            for (i, _) in labels.iter().enumerate().filter(|(_, &l)| l == c) {
                let d = sq_dist(y.row(i), centroids.row(c));
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
            best.map(|b| b.0)
        })
        .collect()
}

/// Candidate ids of the cluster representatives; `ids[i]` labels row `i` of `y`.
pub fn pick_representatives<T: Scalar>(
    ids: &[String],
    labels: &[usize],
    centroids: &Matrix<T>,
    y: &Matrix<T>,
) -> Vec<String> {
    representative_indices(y, labels, centroids)
        .into_iter()
        .map(|i| ids[i].clone())
        .collect()
}

/// Scores of one embedding plus its clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport<T> {
    pub method: String,
    pub neighbors: usize,
    pub trustworthiness: T,
    pub knn_preservation: T,
    /// Absent when only one cluster was requested.
    pub silhouette: Option<T>,
    pub k_used: usize,
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub representative_ids: Vec<String>,
    pub sweep: Vec<(usize, T)>,
    pub repaired_empty: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub neighbors: usize,
    pub clusters: usize,
    pub seed: u64,
    pub restarts: usize,
    pub sweep: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            neighbors: 12,
            clusters: 3,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            sweep: true,
        }
    }
}

/// Scores embedding `y` of the original points `x` and clusters it.
pub fn quality_report<T: Scalar>(
    method: &str,
    ids: &[String],
    x: &Matrix<T>,
    y: &Matrix<T>,
    cfg: &ReportConfig,
) -> Result<QualityReport<T>> {
    if ids.len() != y.rows() {
        return Err(Error::IdMismatch(format!("{} ids for {} embedded rows", ids.len(), y.rows())));
    }
    let trust = trustworthiness(x, y, cfg.neighbors)?;
    let knn = knn_preservation(x, y, cfg.neighbors)?;
    let km = kmeans(y, cfg.clusters, cfg.seed, cfg.restarts)?;
    let silhouette = if cfg.clusters >= 2 {
        Some(silhouette(y, &km.labels)?)
    } else {
        None
    };
    let sweep = if cfg.sweep {
        silhouette_sweep(y, cfg.seed, cfg.restarts)?
    } else {
        Vec::new()
    };
    Ok(QualityReport {
        method: method.to_string(),
        neighbors: cfg.neighbors,
        trustworthiness: trust,
        knn_preservation: knn,
        silhouette,
        k_used: cfg.clusters,
        ids: ids.to_vec(),
        representative_ids: pick_representatives(ids, &km.labels, &km.centroids, y),
        labels: km.labels,
        sweep,
        repaired_empty: km.repaired_empty,
    })
}

fn fmt<T: Scalar>(x: T) -> String {
    format!("{:.6}", x.to_f64_lossy())
}

impl<T: Scalar> QualityReport<T> {
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("method", &self.method);
        kv.push("n", self.ids.len());
        kv.push("neighbors", self.neighbors);
        kv.push("trustworthiness", fmt(self.trustworthiness));
        kv.push("knn_preservation", fmt(self.knn_preservation));
        kv.push("silhouette", self.silhouette.map_or_else(|| "n/a".to_string(), fmt));
        kv.push("k_used", self.k_used);
        kv.push("empty_clusters_repaired", self.repaired_empty);
        kv.push("representative_ids", self.representative_ids.join(","));
        for (k, s) in &self.sweep {
            kv.push(format!("silhouette_k{k}"), fmt(*s));
        }
        kv
    }

    /// Writes the key-value report and an `id,cluster` labels CSV.
    pub fn write(&self, report_path: &Path, labels_path: &Path) -> Result<()> {
        fs::write(report_path, self.to_kv().render()).map_err(|e| Error::io(report_path, e))?;
        let mut w = csv::Writer::from_path(labels_path).map_err(|e| Error::csv(labels_path, e))?;
        w.write_record(["id", "cluster"]).map_err(|e| Error::csv(labels_path, e))?;
        for (id, l) in self.ids.iter().zip(&self.labels) {
            w.write_record([id.as_str(), &l.to_string()])
                .map_err(|e| Error::csv(labels_path, e))?;
        }
        w.flush().map_err(|e| Error::io(labels_path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(n: usize, d: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    fn euclid(m: &Matrix<f64>, i: usize, j: usize) -> f64 {
        sq_dist(m.row(i), m.row(j)).sqrt()
    }

    /// Sort-everything reference with explicit rank lookup via position search.
    fn reference_trust(x: &Matrix<f64>, y: &Matrix<f64>, k: usize) -> f64 {
        let n = x.rows();
        let sorted = |m: &Matrix<f64>, i: usize| {
            let mut v: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (euclid(m, i, j), j)).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v.into_iter().map(|p| p.1).collect::<Vec<_>>()
        };
        let mut sum = 0.0;
        for i in 0..n {
            let ox = sorted(x, i);
            let oy = sorted(y, i);
            for &j in &oy[..k] {
                if !ox[..k].contains(&j) {
                    let r = ox.iter().position(|&v| v == j).unwrap() + 1;
                    sum += (r - k) as f64;
                }
            }
        }
        let (n, k) = (n as f64, k as f64);
        1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * sum
    }

    fn rotate(x: &Matrix<f64>, angle: f64, shift: (f64, f64)) -> Matrix<f64> {
        let (c, s) = (angle.cos(), angle.sin());
        Matrix::from_fn(x.rows(), 2, |i, j| {
            let (a, b) = (x[(i, 0)], x[(i, 1)]);
            if j == 0 {
                c * a - s * b + shift.0
            } else {
                s * a + c * b + shift.1
            }
        })
    }

    #[test]
    fn trust_isometry_and_reversal() {
        let x = random_matrix(30, 2, 1);
        let y = rotate(&x, 0.7, (3.0, -2.0));
        assert!((trustworthiness(&x, &y, 5).unwrap() - 1.0).abs() < 1e-15);
        assert!((knn_preservation(&x, &y, 5).unwrap() - 1.0).abs() < 1e-15);
        let line = Matrix::from_fn(20, 1, |i, _| (i * i) as f64);
        let rev = line.map(|v| -v);
        assert_eq!(trustworthiness(&line, &rev, 4).unwrap(), 1.0);
    }

    #[test]
    fn trust_matches_reference() {
        let x = random_matrix(40, 5, 2);
        let y = random_matrix(40, 2, 3);
        let got = trustworthiness(&x, &y, 5).unwrap();
        assert!((got - reference_trust(&x, &y, 5)).abs() < 1e-14);
        assert!(got < 0.8);
    }

    #[test]
    fn trust_k_bounds() {
        let x = random_matrix(10, 2, 4);
        assert!(matches!(trustworthiness(&x, &x, 5), Err(Error::KTooLarge { .. })));
        assert!(matches!(trustworthiness(&x, &x, 0), Err(Error::KTooLarge { .. })));
        assert!(trustworthiness(&x, &x, 4).is_ok());
    }

    #[test]
    fn knn_constant_embedding_uses_index_order() {
        let x = random_matrix(12, 3, 5);
        let y = Matrix::zeros(12, 2);
        let k = 3;
        let dx = pairwise_sq_distances(&x);
        let mut expect = 0;
        for i in 0..12 {
            let index_order: Vec<usize> = (0..12).filter(|&j| j != i).take(k).collect();
            expect += nearest_indices(&dx, i, k).iter().filter(|j| index_order.contains(j)).count();
        }
        assert_eq!(knn_preservation(&x, &y, k).unwrap(), expect as f64 / 36.0);
    }

    #[test]
    fn knn_matches_brute_force() {
        let x = random_matrix(30, 4, 6);
        let y = random_matrix(30, 2, 7);
        let k = 4;
        let mut total = 0;
        for i in 0..30 {
            let nn = |m: &Matrix<f64>| {
                let mut v: Vec<(f64, usize)> = (0..30).filter(|&j| j != i).map(|j| (euclid(m, i, j), j)).collect();
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                v[..k].iter().map(|p| p.1).collect::<Vec<_>>()
            };
            let (a, b) = (nn(&x), nn(&y));
            total += a.iter().filter(|j| b.contains(j)).count();
        }
        assert_eq!(knn_preservation(&x, &y, k).unwrap(), total as f64 / 120.0);
    }

    #[test]
    fn kmeans_k_equals_n() {
        let y = random_matrix(8, 2, 8);
        let km = kmeans(&y, 8, 1, 3).unwrap();
        assert_eq!(km.inertia, 0.0);
        let mut sorted = km.labels.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..8).collect::<Vec<_>>());
        for i in 0..8 {
            assert_eq!(km.centroids.row(km.labels[i]), y.row(i));
        }
    }

    #[test]
    fn kmeans_two_pairs_is_optimal() {
        let y = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]).unwrap();
        let km = kmeans(&y, 2, 4, 5).unwrap();
        assert_eq!(km.labels[0], km.labels[1]);
        assert_eq!(km.labels[2], km.labels[3]);
        assert_ne!(km.labels[0], km.labels[2]);
        assert!((km.inertia - 1.0f64).abs() < 1e-12);
        // all 2-partitions: the pair split is the unique optimum
        let mut best = f64::INFINITY;
        for mask in 1u32..7 {
            let labels: Vec<usize> = (0..4).map(|i| ((mask >> i) & 1) as usize).collect();
            let mut cost = 0.0;
            for c in 0..2 {
                let members: Vec<usize> = (0..4).filter(|&i| labels[i] == c).collect();
                let mean: Vec<f64> = (0..2)
                    .map(|d| members.iter().map(|&i| y[(i, d)]).sum::<f64>() / members.len() as f64)
                    .collect();
                cost += members.iter().map(|&i| sq_dist(y.row(i), &mean)).sum::<f64>();
            }
            best = best.min(cost);
        }
        assert!((best - km.inertia).abs() < 1e-12);
    }

    #[test]
    fn kmeans_deterministic_and_monotone() {
        let y = random_matrix(200, 2, 9);
        let a = kmeans(&y, 6, 11, 4).unwrap();
        let b = kmeans(&y, 6, 11, 4).unwrap();
        assert_eq!(a, b);
        for w in a.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", a.inertia_trace);
        }
        assert!(a.iterations <= DEFAULT_MAX_LLOYD);
    }

    #[test]
    fn kmeans_repairs_duplicate_seeds() {
        let y = Matrix::from_rows(&[[0.0], [0.0], [0.0], [5.0]]).unwrap();
        let km = kmeans(&y, 3, 0, 2).unwrap();
        let distinct: std::collections::BTreeSet<_> = km.labels.iter().collect();
        assert_eq!(distinct.len(), 3);
        assert_eq!(km.inertia, 0.0);
    }

    #[test]
    fn kmeans_rejects_bad_k() {
        let y = random_matrix(4, 2, 1);
        assert!(kmeans(&y, 0, 0, 1).is_err());
        assert!(kmeans(&y, 5, 0, 1).is_err());
    }

    #[test]
    fn silhouette_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let y = Matrix::from_fn(40, 2, |i, j| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + if i >= 20 && j == 0 { 20.0 } else { 0.0 }
        });
        let labels: Vec<usize> = (0..40).map(|i| i / 20).collect();
        // brute-force recomputation
        let mut total = 0.0;
        for i in 0..40 {
            let mean_to = |c: usize| {
                let m: Vec<usize> = (0..40).filter(|&j| j != i && labels[j] == c).collect();
                m.iter().map(|&j| euclid(&y, i, j)).sum::<f64>() / m.len() as f64
            };
            let (a, b) = (mean_to(labels[i]), mean_to(1 - labels[i]));
            total += (b - a) / a.max(b);
        }
        let s = silhouette(&y, &labels).unwrap();
        assert!((s - total / 40.0).abs() < 1e-12);
        assert!(s > 0.9);
    }

    #[test]
    fn silhouette_edge_cases() {
        let y = random_matrix(5, 2, 13);
        assert!(matches!(silhouette(&y, &[7; 5]), Err(Error::SingleCluster)));
        let s = silhouette(&y, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn silhouette_random_labels_near_zero() {
        let y = random_matrix(400, 2, 14);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let labels: Vec<usize> = (0..400).map(|_| rng.random_range(0..3)).collect();
        assert!(silhouette(&y, &labels).unwrap().abs() < 0.15);
    }

    #[test]
    fn representatives() {
        let y = Matrix::from_rows(&[[0.0, 0.0], [2.0, 0.0], [9.0, 9.0]]).unwrap();
        let centroids = Matrix::from_rows(&[[1.0, 0.0], [9.0, 9.0]]).unwrap();
        let ids: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        assert_eq!(pick_representatives(&ids, &[0, 0, 1], &centroids, &y), vec!["a", "c"]);
    }

    #[test]
    fn representatives_match_exhaustive_scan() {
        let y = random_matrix(50, 2, 16);
        let km = kmeans(&y, 5, 17, 3).unwrap();
        let got = representative_indices(&y, &km.labels, &km.centroids);
        for (c, &g) in got.iter().enumerate() {
            let members: Vec<usize> = (0..50).filter(|&i| km.labels[i] == c).collect();
            let best = members
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    sq_dist(y.row(a), km.centroids.row(c))
                        .partial_cmp(&sq_dist(y.row(b), km.centroids.row(c)))
                        .unwrap()
                        .then(a.cmp(&b))
                })
                .unwrap();
            assert_eq!(g, best);
        }
    }

    #[test]
    fn sweep_covers_range() {
        let y = random_matrix(30, 2, 18);
        let sweep = silhouette_sweep(&y, 1, 2).unwrap();
        assert_eq!(sweep.iter().map(|s| s.0).collect::<Vec<_>>(), (2..=12).collect::<Vec<_>>());
    }

    #[test]
    fn report_round_trip() {
        let x = random_matrix(20, 3, 19);
        let y = x.select_rows(&(0..20).collect::<Vec<_>>());
        let ids: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
        let cfg = ReportConfig {
            neighbors: 4,
            clusters: 3,
            sweep: false,
            ..ReportConfig::default()
        };
        let r = quality_report("pca", &ids, &x, &y, &cfg).unwrap();
        assert_eq!(r.trustworthiness, 1.0);
        assert_eq!(r.representative_ids.len(), 3);
        let kv = r.to_kv();
        assert_eq!(kv.get("trustworthiness"), Some("1.000000"));
        let dir = tempfile::tempdir().unwrap();
        r.write(&dir.path().join("r.txt"), &dir.path().join("l.csv")).unwrap();
        let labels = fs::read_to_string(dir.path().join("l.csv")).unwrap();
        assert_eq!(labels.lines().count(), 21);
        assert!(matches!(
            quality_report("pca", &ids[..5], &x, &y, &cfg),
            Err(Error::IdMismatch(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn silhouette_scale_invariant(seed in 0u64..1000, c in 0.01f64..100.0) {
            let y = random_matrix(25, 2, seed);
            let labels: Vec<usize> = (0..25).map(|i| i % 3).collect();
            let a = silhouette(&y, &labels).unwrap();
            let b = silhouette(&y.map(|v| v * c), &labels).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn orthogonal_maps_preserve_neighborhoods(seed in 0u64..1000, angle in 0.0f64..6.3) {
            let x = random_matrix(24, 2, seed);
            let y = rotate(&x, angle, (1.5, -4.0));
            prop_assert!((trustworthiness(&x, &y, 4).unwrap() - 1.0).abs() < 1e-15);
            prop_assert!((knn_preservation(&x, &y, 4).unwrap() - 1.0).abs() < 1e-15);
        }
    }
}
