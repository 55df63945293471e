//! Linear and graph-geodesic baselines: PCA, classical MDS and Isomap.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::{pairwise_sq_distances, DistanceMatrix};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymmetricEigen};
use crate::scalar::Scalar;

pub const DEFAULT_ISOMAP_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult<T> {
    /// `N×d` scores.
    pub projection: Matrix<T>,
    /// `K×d` orthonormal loadings; column `c` is the `c`-th principal axis.
    pub components: Matrix<T>,
    pub explained_variance_ratio: Vec<T>,
    /// Column means removed before projecting.
    pub mean: Vec<T>,
}

fn column_means<T: Scalar>(x: &Matrix<T>) -> Vec<T> {
    let n = T::from_usize_lossy(x.rows());
    (0..x.cols())
        .map(|j| (0..x.rows()).map(|i| x[(i, j)]).fold(T::zero(), |a, b| a + b) / n)
        .collect()
}

/// Effective rank of a descending spectrum.
fn spectrum_rank<T: Scalar>(values: &[T]) -> usize {
    let top = values.first().copied().unwrap_or_else(T::zero).max(T::zero());
    if top == T::zero() {
        return 0;
    }
    let tol = top * T::lit(1e-12);
    values.iter().filter(|&&v| v > tol).count()
}

/// Projects onto the top-`d` eigenvectors of the sample covariance.
pub fn pca_project<T: Scalar>(x: &Matrix<T>, d: usize) -> Result<PcaResult<T>> {
    let (n, k) = x.shape();
    if n < 2 || k == 0 || d == 0 {
        return Err(Error::InvalidInput(format!(
            "PCA needs N ≥ 2, K ≥ 1, d ≥ 1 (got N = {n}, K = {k}, d = {d})"
        )));
    }
    let mean = column_means(x);
    let centered = Matrix::from_fn(n, k, |i, j| x[(i, j)] - mean[j]);
    let mut cov = centered.transpose().matmul(&centered);
    let denom = T::from_usize_lossy(n - 1);
    for v in cov.as_mut_slice() {
        *v /= denom;
    }
    let eig = SymmetricEigen::new(&cov);
    let rank = spectrum_rank(&eig.values);
    if d > rank {
        return Err(Error::RankDeficient { requested: d, rank });
    }
    let total: T = eig.values.iter().map(|&v| v.max(T::zero())).sum();
    let explained_variance_ratio = eig.values[..d]
        .iter()
        .map(|&v| (v.max(T::zero()) / total).min(T::one()))
        .collect();
    let components = Matrix::from_fn(k, d, |i, j| eig.vectors[(i, j)]);
    let projection = centered.matmul(&components);
    Ok(PcaResult {
        projection,
        components,
        explained_variance_ratio,
        mean,
    })
}

/// Undirected weighted graph on the points; weights are Euclidean edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph<T> {
    /// Neighbor lists sorted by index, no self-loops, symmetric.
    pub adjacency: Vec<Vec<(usize, T)>>,
    pub k: usize,
}

impl<T: Scalar> NeighborGraph<T> {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search_by(|(v, _)| v.cmp(&j)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn add_edge(&mut self, i: usize, j: usize, w: T) {
        for (a, b) in [(i, j), (j, i)] {
            let list = &mut self.adjacency[a];
            if let Err(pos) = list.binary_search_by(|(v, _)| v.cmp(&b)) {
                list.insert(pos, (b, w));
            }
        }
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on `nodes` (re-indexed in the given order).
    pub fn subgraph(&self, nodes: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n()];
        for (new, &old) in nodes.iter().enumerate() {
            map[old] = new;
        }
        let adjacency = nodes
            .iter()
            .map(|&old| {
                let mut list: Vec<(usize, T)> = self.adjacency[old]
                    .iter()
                    .filter(|(v, _)| map[*v] != usize::MAX)
                    .map(|&(v, w)| (map[v], w))
                    .collect();
                list.sort_by_key(|&(v, _)| v);
                list
            })
            .collect();
        Self { adjacency, k: self.k }
    }
}

/// Indices of the `k` nearest points to `i` under `dist` (ties by smaller index).
pub(crate) fn nearest_indices<T: Scalar>(dist: &DistanceMatrix<T>, i: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dist.n()).filter(|&j| j != i).collect();
    let row = dist.row(i);
    order.sort_by(|&a, &b| {
        row[a]
            .partial_cmp(&row[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Union-symmetrized `k`-nearest-neighbor graph.
pub fn knn_graph<T: Scalar>(x: &Matrix<T>, k: usize) -> Result<NeighborGraph<T>> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n, limit: n });
    }
    let dist = pairwise_sq_distances(x);
    let lists: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| nearest_indices(&dist, i, k))
        .collect();
    let mut g = NeighborGraph {
        adjacency: vec![Vec::new(); n],
        k,
    };
    for (i, list) in lists.iter().enumerate() {
        for &j in list {
            g.add_edge(i, j, dist.get(i, j).sqrt());
        }
    }
    Ok(g)
}

/// Total order wrapper for heap keys; inputs are finite.
#[derive(Clone, Copy, PartialEq)]
struct HeapKey<T>(T, usize);

impl<T: Scalar> Eq for HeapKey<T> {}

impl<T: Scalar> PartialOrd for HeapKey<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for HeapKey<T> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then(other.1.cmp(&self.1))
    }
}

fn dijkstra<T: Scalar>(g: &NeighborGraph<T>, source: usize) -> Vec<T> {
    let mut dist = vec![T::infinity(); g.n()];
    dist[source] = T::zero();
    let mut heap = BinaryHeap::from([HeapKey(T::zero(), source)]);
    while let Some(HeapKey(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &g.adjacency[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapKey(nd, v));
            }
        }
    }
    dist
}

/// All-pairs shortest paths, returned squared. Fails on a disconnected graph.
pub fn geodesic_distances<T: Scalar>(g: &NeighborGraph<T>) -> Result<DistanceMatrix<T>> {
    let comps = g.components();
    if comps.len() > 1 {
        return Err(Error::DisconnectedGraph { components: comps });
    }
    let n = g.n();
    let rows: Vec<Vec<T>> = (0..n).into_par_iter().map(|s| dijkstra(g, s)).collect();
    // path lengths are direction-independent up to rounding; take the lower-index source
    let values = Matrix::from_fn(n, n, |i, j| {
        let d = if i <= j { rows[i][j] } else { rows[j][i] };
        d * d
    });
    Ok(DistanceMatrix::from_matrix_unchecked(values))
}

/// What to do when the neighbor graph falls apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DisconnectedPolicy {
    /// Return [`Error::DisconnectedGraph`].
    Strict,
    /// Embed the largest component only and report the rest.
    #[default]
    LargestComponent,
    /// Bridge components with a minimum spanning tree over their closest pairs.
    ConnectMst,
}

impl FromStr for DisconnectedPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(Self::Strict),
            "largest" => Ok(Self::LargestComponent),
            "mst" => Ok(Self::ConnectMst),
            other => Err(Error::InvalidInput(format!(
                "unknown connect policy `{other}` (strict|largest|mst)"
            ))),
        }
    }
}

impl fmt::Display for DisconnectedPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Strict => "strict",
            Self::LargestComponent => "largest",
            Self::ConnectMst => "mst",
        })
    }
}

/// Adds the edges of a minimum spanning tree over components, where the
/// candidate edge between two components is their closest point pair.
pub fn connect_components<T: Scalar>(g: &NeighborGraph<T>, x: &Matrix<T>) -> NeighborGraph<T> {
    let comps = g.components();
    let mut out = g.clone();
    if comps.len() < 2 {
        return out;
    }
    let dist = pairwise_sq_distances(x);
    let mut bridges: Vec<(T, usize, usize, usize, usize)> = Vec::new();
    for a in 0..comps.len() {
        for b in (a + 1)..comps.len() {
            let mut best = (T::infinity(), 0, 0);
            for &i in &comps[a] {
                for &j in &comps[b] {
                    let d = dist.get(i, j);
                    if d < best.0 {
                        best = (d, i, j);
                    }
                }
            }
            bridges.push((best.0, a, b, best.1, best.2));
        }
    }
    bridges.sort_by(|l, r| {
        l.0.partial_cmp(&r.0)
            .unwrap_or(Ordering::Equal)
            .then((l.1, l.2).cmp(&(r.1, r.2)))
    });
    let mut parent: Vec<usize> = (0..comps.len()).collect();
    fn find(parent: &mut [usize], mut u: usize) -> usize {
        while parent[u] != u {
            parent[u] = parent[parent[u]];
            u = parent[u];
        }
        u
    }
    for (d, a, b, i, j) in bridges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            out.add_edge(i, j, d.sqrt());
        }
    }
    out
}

/// Double-centers `−½·J·D·J` and embeds with the top-`d` eigenpairs
/// (negative eigenvalues clamped to zero).
pub fn classical_mds<T: Scalar>(dist: &DistanceMatrix<T>, d: usize) -> Result<Matrix<T>> {
    let n = dist.n();
    if d == 0 || d > n {
        return Err(Error::InvalidInput(format!("cannot embed {n} points in {d} dimensions")));
    }
    let nt = T::from_usize_lossy(n);
    let row_mean: Vec<T> = (0..n).map(|i| dist.row(i).iter().copied().sum::<T>() / nt).collect();
    let grand = row_mean.iter().copied().sum::<T>() / nt;
    let half = T::lit(0.5);
    // D is symmetric, so column means equal row means
    let b = Matrix::from_fn(n, n, |i, j| -half * (dist.get(i, j) - row_mean[i] - row_mean[j] + grand));
    let eig = SymmetricEigen::new(&b);
    let scales: Vec<T> = eig.values[..d].iter().map(|&v| v.max(T::zero()).sqrt()).collect();
    Ok(Matrix::from_fn(n, d, |i, k| eig.vectors[(i, k)] * scales[k]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsomapConfig {
    pub k: usize,
    pub out_dim: usize,
    pub policy: DisconnectedPolicy,
}

impl IsomapConfig {
    pub fn new(k: usize, out_dim: usize) -> Self {
        Self {
            k,
            out_dim,
            policy: DisconnectedPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsomapResult<T> {
    /// One row per entry of `embedded`.
    pub embedding: Matrix<T>,
    /// Input row indices that were embedded, ascending.
    pub embedded: Vec<usize>,
    /// Input rows left out (outside the largest component).
    pub unembedded: Vec<usize>,
}

/// `classical_mds(geodesic_distances(knn_graph(x, k)), d)` with the default policy.
pub fn isomap<T: Scalar>(x: &Matrix<T>, k: usize, d: usize) -> Result<IsomapResult<T>> {
    isomap_with(x, &IsomapConfig::new(k, d))
}

pub fn isomap_with<T: Scalar>(x: &Matrix<T>, cfg: &IsomapConfig) -> Result<IsomapResult<T>> {
    let n = x.rows();
    let graph = knn_graph(x, cfg.k)?;
    let all: Vec<usize> = (0..n).collect();
    let (graph, embedded, unembedded) = match cfg.policy {
        DisconnectedPolicy::Strict => (graph, all, Vec::new()),
        DisconnectedPolicy::ConnectMst => (connect_components(&graph, x), all, Vec::new()),
        DisconnectedPolicy::LargestComponent => {
            let comps = graph.components();
            if comps.len() == 1 {
                (graph, all, Vec::new())
            } else {
                // components are ordered by smallest member, so max_by_key's
                // last-wins tie rule must be avoided
                let mut largest = 0;
                for (c, comp) in comps.iter().enumerate() {
                    if comp.len() > comps[largest].len() {
                        largest = c;
                    }
                }
                let keep = comps[largest].clone();
                let rest: Vec<usize> = all.iter().copied().filter(|i| keep.binary_search(i).is_err()).collect();
                (graph.subgraph(&keep), keep, rest)
            }
        }
    };
    if embedded.len() <= cfg.out_dim {
        return Err(Error::InvalidInput(format!(
            "largest neighbor-graph component has only {} points",
            embedded.len()
        )));
    }
    let geo = geodesic_distances(&graph)?;
    let embedding = classical_mds(&geo, cfg.out_dim)?;
    Ok(IsomapResult {
        embedding,
        embedded,
        unembedded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclid(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn pca_collinear_is_one_dimensional() {
        let x = Matrix::from_fn(5, 3, |i, j| (i + 1) as f64 * [1.0, 2.0, 2.0][j]);
        let r = pca_project(&x, 1).unwrap();
        assert!((r.explained_variance_ratio[0] - 1.0).abs() < 1e-10);
        for i in 0..5 {
            for j in 0..5 {
                let orig = euclid(x.row(i), x.row(j));
                let proj = (r.projection[(i, 0)] - r.projection[(j, 0)]).abs();
                assert!((orig - proj).abs() < 1e-12);
            }
        }
        assert!(matches!(pca_project(&x, 2), Err(Error::RankDeficient { requested: 2, rank: 1 })));
    }

    #[test]
    fn pca_sign_convention_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = Matrix::from_fn(40, 4, |_, j| rng.random_range(-1.0f64..1.0) * (j + 1) as f64);
        let r = pca_project(&x, 3).unwrap();
        let gram = r.components.transpose().matmul(&r.components);
        assert!(gram.max_abs_diff(&Matrix::identity(3)) < 1e-8);
        for c in 0..3 {
            let col = r.components.column(c);
            let top = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(top > 0.0);
        }
        let ratios = &r.explained_variance_ratio;
        assert!(ratios.windows(2).all(|w| w[0] >= w[1]));
        assert!(ratios.iter().sum::<f64>() <= 1.0 + 1e-10);
    }

    #[test]
    fn pca_shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = Matrix::from_fn(30, 3, |_, _| rng.random_range(-1.0f64..1.0));
        let shifted = Matrix::from_fn(30, 3, |i, j| x[(i, j)] + [10.0, -3.0, 0.5][j]);
        let a = pca_project(&x, 2).unwrap();
        let b = pca_project(&shifted, 2).unwrap();
        assert!(a.projection.max_abs_diff(&b.projection) < 1e-10);
    }

    #[test]
    fn pca_isotropic_ratios() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let x = Matrix::from_fn(500, 3, |_, _| StandardNormal.sample(&mut rng));
        let r = pca_project(&x, 2).unwrap();
        for &v in &r.explained_variance_ratio {
            assert!((0.25..=0.45).contains(&v), "{v}");
        }
    }

    #[test]
    fn knn_line_example() {
        let x = Matrix::from_vec(4, 1, vec![0.0f64, 1.0, 2.0, 10.0]);
        let g = knn_graph(&x, 1).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && g.has_edge(2, 3));
        assert_eq!(g.adjacency[3], vec![(2, 8.0)]);
    }

    #[test]
    fn knn_tie_breaks_to_lowest_index() {
        let x = Matrix::from_rows(&[[1.0f64, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let g = knn_graph(&x, 1).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(0, 2) && !g.has_edge(1, 2));
        for i in 0..3 {
            for &(j, _) in &g.adjacency[i] {
                assert!(g.has_edge(j, i));
            }
        }
        assert!(matches!(knn_graph(&x, 3), Err(Error::KTooLarge { .. })));
    }

    #[test]
    fn knn_matches_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let x = Matrix::from_fn(30, 4, |_, _| rng.random_range(0.0f64..1.0));
        let g = knn_graph(&x, 5).unwrap();
        let mut expect = vec![vec![false; 30]; 30];
        for i in 0..30 {
            let mut all: Vec<(f64, usize)> = (0..30).filter(|&j| j != i).map(|j| (euclid(x.row(i), x.row(j)), j)).collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for &(_, j) in &all[..5] {
                expect[i][j] = true;
                expect[j][i] = true;
            }
        }
        for i in 0..30 {
            assert!(g.adjacency[i].len() >= 5);
            for j in 0..30 {
                assert_eq!(g.has_edge(i, j), expect[i][j], "({i},{j})");
            }
        }
    }

    #[test]
    fn geodesic_path_sum() {
        let x = Matrix::from_vec(3, 1, vec![0.0f64, 1.0, 2.0]);
        let g = knn_graph(&x, 1).unwrap();
        let geo = geodesic_distances(&g).unwrap();
        assert_eq!(geo.get(0, 2), 4.0);
    }

    #[test]
    fn geodesic_c_shape_exceeds_euclidean() {
        // 20 points on a C: arc from 30° to 330° on the unit circle
        let pts: Vec<[f64; 2]> = (0..20)
            .map(|i| {
                let a = (30.0 + 300.0 * i as f64 / 19.0).to_radians();
                [a.cos(), a.sin()]
            })
            .collect();
        let x = Matrix::from_rows(&pts).unwrap();
        let g = knn_graph(&x, 2).unwrap();
        let geo = geodesic_distances(&g).unwrap();
        // exhaustive shortest-path oracle: Floyd–Warshall on the same graph
        let n = 20;
        let mut fw = vec![vec![f64::INFINITY; n]; n];
        for i in 0..n {
            fw[i][i] = 0.0;
            for &(j, w) in &g.adjacency[i] {
                fw[i][j] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if fw[i][k] + fw[k][j] < fw[i][j] {
                        fw[i][j] = fw[i][k] + fw[k][j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((geo.get(i, j).sqrt() - fw[i][j]).abs() < 1e-12);
            }
        }
        let tips_geo = geo.get(0, 19).sqrt();
        let tips_euclid = euclid(x.row(0), x.row(19));
        assert!(tips_geo > 4.0 * tips_euclid);
    }

    #[test]
    fn geodesic_on_complete_graph_is_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let x = Matrix::from_fn(9, 3, |_, _| rng.random_range(0.0f64..1.0));
        let geo = geodesic_distances(&knn_graph(&x, 8).unwrap()).unwrap();
        let e = pairwise_sq_distances(&x);
        for i in 0..9 {
            for j in 0..9 {
                assert!((geo.get(i, j).sqrt() - e.get(i, j).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geodesic_triangle_inequality_and_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let x = Matrix::from_fn(40, 2, |_, _| rng.random_range(0.0f64..1.0));
        let geo = geodesic_distances(&knn_graph(&x, 6).unwrap()).unwrap();
        let e = pairwise_sq_distances(&x);
        for i in 0..40 {
            for j in 0..40 {
                let gij = geo.get(i, j).sqrt();
                assert!(gij + 1e-12 >= e.get(i, j).sqrt());
                for k in 0..40 {
                    assert!(gij <= geo.get(i, k).sqrt() + geo.get(k, j).sqrt() + 1e-12);
                }
            }
        }
    }

    fn two_blobs() -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        Matrix::from_fn(20, 2, |i, _| rng.random_range(0.0f64..0.1) + if i < 10 { 0.0 } else { 100.0 })
    }

    #[test]
    fn disconnected_graph_policies() {
        let x = two_blobs();
        let g = knn_graph(&x, 3).unwrap();
        match geodesic_distances(&g) {
            Err(Error::DisconnectedGraph { components }) => {
                assert_eq!(components.len(), 2);
                assert_eq!(components[0], (0..10).collect::<Vec<_>>());
            }
            other => panic!("{other:?}"),
        }
        let strict = IsomapConfig {
            policy: DisconnectedPolicy::Strict,
            ..IsomapConfig::new(3, 2)
        };
        assert!(matches!(isomap_with(&x, &strict), Err(Error::DisconnectedGraph { .. })));

        let largest = isomap(&x, 3, 2).unwrap();
        assert_eq!(largest.embedded, (0..10).collect::<Vec<_>>());
        assert_eq!(largest.unembedded, (10..20).collect::<Vec<_>>());
        assert_eq!(largest.embedding.rows(), 10);

        let mst = IsomapConfig {
            policy: DisconnectedPolicy::ConnectMst,
            ..IsomapConfig::new(3, 2)
        };
        let bridged = isomap_with(&x, &mst).unwrap();
        assert_eq!(bridged.embedding.rows(), 20);
        assert_eq!(connect_components(&g, &x).components().len(), 1);
    }

    fn recovered_error(x: &Matrix<f64>, y: &Matrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..x.rows() {
            for j in 0..x.rows() {
                worst = worst.max((euclid(x.row(i), x.row(j)) - euclid(y.row(i), y.row(j))).abs());
            }
        }
        worst
    }

    #[test]
    fn mds_three_four_five() {
        let x = Matrix::from_rows(&[[0.0f64, 0.0], [3.0, 0.0], [0.0, 4.0]]).unwrap();
        let y = classical_mds(&pairwise_sq_distances(&x), 2).unwrap();
        assert!(recovered_error(&x, &y) < 1e-8);
    }

    #[test]
    fn mds_zero_matrix_collapses() {
        let d = DistanceMatrix::from_matrix(Matrix::<f64>::zeros(4, 4)).unwrap();
        let y = classical_mds(&d, 2).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mds_round_trips_planar_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = Matrix::from_fn(12, 2, |_, _| rng.random_range(-5.0f64..5.0));
        let y = classical_mds(&pairwise_sq_distances(&x), 2).unwrap();
        let back = pairwise_sq_distances(&y);
        let orig = pairwise_sq_distances(&x);
        assert!(back.values().max_abs_diff(orig.values()) < 1e-8);
    }

    #[test]
    fn isomap_on_isometric_plane() {
        // seven points on a plane, rigidly placed in 5-D; k = 6 connects every pair
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let plane: Vec<[f64; 2]> = (0..7).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let a = 0.7f64;
        let basis = [[a.cos(), a.sin(), 0.0, 0.0, 0.0], [0.0, 0.0, 0.6, 0.8, 0.0]];
        let x = Matrix::from_fn(7, 5, |i, j| plane[i][0] * basis[0][j] + plane[i][1] * basis[1][j] + [1.0, 2.0, 3.0, 4.0, 5.0][j]);
        let r = isomap(&x, 6, 2).unwrap();
        let flat = Matrix::from_rows(&plane).unwrap();
        assert!(recovered_error(&flat, &r.embedding) < 1e-6);
    }

    #[test]
    fn isomap_complete_graph_equals_mds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = Matrix::from_fn(15, 4, |_, _| rng.random_range(-1.0f64..1.0));
        let iso = isomap(&x, 14, 2).unwrap();
        let mds = classical_mds(&pairwise_sq_distances(&x), 2).unwrap();
        assert!(iso.embedding.max_abs_diff(&mds) < 1e-8);
    }

    #[test]
    fn eigen_matches_reference_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for &n in &[3usize, 8, 25] {
            let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0f64..1.0));
            let s = Matrix::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)]);
            let ours = SymmetricEigen::new(&s);
            let reference = nalgebra::DMatrix::from_fn(n, n, |i, j| s[(i, j)]).symmetric_eigen();
            let mut ref_vals: Vec<(f64, usize)> = reference.eigenvalues.iter().copied().zip(0..).collect();
            ref_vals.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
            for (c, &(v, idx)) in ref_vals.iter().enumerate() {
                assert!((ours.values[c] - v).abs() < 1e-8);
                let rv = reference.eigenvectors.column(idx);
                let dot: f64 = (0..n).map(|i| rv[i] * ours.vectors[(i, c)]).sum();
                assert!((dot.abs() - 1.0).abs() < 1e-8);
            }
        }
    }
}
