//! Initial hard clusterings: regularized spectral embedding + k-means,
//! Ward agglomeration on connection profiles, and uniform random labels.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::network::LevelGraph;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    Spectral,
    Hierarchical,
    Random,
    /// Caller-provided memberships.
    Given,
}

/// Number of k-means restarts in spectral initialization.
pub const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITER: usize = 100;

/// Hard labels in `0..q` for every node of `g`.
pub fn init_clustering(g: &LevelGraph, q: usize, method: InitMethod, seed: u64) -> Result<Vec<usize>> {
    check_q(g.n(), q)?;
    match method {
        InitMethod::Spectral => SpectralEmbedding::new(g).labels(q, seed),
        InitMethod::Hierarchical => Ok(ward_labels(&connection_profiles(g, None), g.n(), q)),
        InitMethod::Random => Ok(random_labels(g.n(), q, seed)),
        InitMethod::Given => Err(Error::InvalidArgument(
            "the `given` method takes memberships from the caller".into(),
        )),
    }
}

fn check_q(n: usize, q: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be >= 1".into()));
    }
    if q > n {
        return Err(Error::InvalidArgument(format!("q = {q} exceeds the {n} nodes")));
    }
    Ok(())
}

pub fn random_labels(n: usize, q: usize, seed: u64) -> Vec<usize> {
    let mut rng = Stream::new(seed);
    (0..n).map(|_| rng.below(q)).collect()
}

/// Relabels so that labels appear in increasing order of first use.
pub fn compact_labels(z: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    z.iter()
        .map(|&k| match map.iter().find(|(old, _)| *old == k) {
            Some(&(_, new)) => new,
            None => {
                let new = map.len();
                map.push((k, new));
                new
            }
        })
        .collect()
}

/// Eigenvectors of `D^-1/2 S D^-1/2` where `S` is the symmetrized observed
/// adjacency and `D` the degree matrix shifted by the mean degree. Vectors
/// are ordered by decreasing absolute eigenvalue, so that disassortative
/// structure (negative eigenvalues) is captured too.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    n: usize,
    /// Column-major `n x n`, column `c` is the `c`-th eigenvector in order.
    vectors: Vec<f64>,
}

impl SpectralEmbedding {
    pub fn new(g: &LevelGraph) -> Self {
        let n = g.n();
        let mut s = DMatrix::<f64>::zeros(n, n);
        let mut degree = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                if g.is_edge(i, j) || g.is_edge(j, i) {
                    s[(i, j)] = 1.0;
                    degree[i] += 1.0;
                }
            }
        }
        let mean_degree = if n == 0 { 0.0 } else { degree.iter().sum::<f64>() / n as f64 };
        let reg = if mean_degree > 0.0 { mean_degree } else { 1.0 };
        let scale: Vec<f64> = degree.iter().map(|&d| 1.0 / sqrt(d + reg)).collect();
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] *= scale[i] * scale[j];
            }
        }
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .abs()
                .total_cmp(&eig.eigenvalues[a].abs())
                .then(a.cmp(&b))
        });
        let mut vectors = Vec::with_capacity(n * n);
        for &c in &order {
            vectors.extend(eig.eigenvectors.column(c).iter().copied());
        }
        Self { n, vectors }
    }

    /// k-means on the row-normalized leading `q` eigenvectors.
    pub fn labels(&self, q: usize, seed: u64) -> Result<Vec<usize>> {
        check_q(self.n, q)?;
        if q == 1 {
            return Ok(vec![0; self.n]);
        }
        let n = self.n;
        let mut points = vec![0.0; n * q];
        for i in 0..n {
            let mut norm = 0.0;
            for c in 0..q {
                let v = self.vectors[c * n + i];
                points[i * q + c] = v;
                norm += v * v;
            }
            let norm = sqrt(norm);
            if norm > 1e-12 {
                points[i * q..(i + 1) * q].iter_mut().for_each(|v| *v /= norm);
            }
        }
        Ok(compact_labels(&kmeans(&points, q, q, KMEANS_RESTARTS, seed)))
    }
}

/// Lloyd's k-means with k-means++ seeding; best of `restarts` by inertia.
/// `points` is row-major with `dim` columns.
pub fn kmeans(points: &[f64], dim: usize, k: usize, restarts: usize, seed: u64) -> Vec<usize> {
    let n = points.len() / dim;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = Stream::child(seed, r as u64);
        let (inertia, labels) = kmeans_once(points, dim, n, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_once(points: &[f64], dim: usize, n: usize, k: usize, rng: &mut Stream) -> (f64, Vec<usize>) {
    let pt = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centers: Vec<f64> = Vec::with_capacity(k * dim);
    centers.extend_from_slice(pt(rng.below(n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(pt(i), &centers[0..dim])).collect();
    while centers.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 { rng.categorical(&d2) } else { rng.below(n) };
        let c = centers.len() / dim;
        centers.extend_from_slice(pt(next));
        for i in 0..n {
            let d = sq_dist(pt(i), &centers[c * dim..(c + 1) * dim]);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    let mut labels = vec![0usize; n];
    for iter in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(pt(i), &centers[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, &v) in sums[labels[i] * dim..(labels[i] + 1) * dim].iter_mut().zip(pt(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centers[c * dim + d] = sums[c * dim + d] / counts[c] as f64;
                }
            }
        }
    }
    let inertia = (0..n)
        .map(|i| sq_dist(pt(i), &centers[labels[i] * dim..(labels[i] + 1) * dim]))
        .sum();
    (inertia, labels)
}

/// Connection profile of each node (optionally a subset): its observed
/// adjacency row, followed by its column when the graph is directed.
/// Returns row-major points; the row length is `n` or `2n`.
pub fn connection_profiles(g: &LevelGraph, nodes: Option<&[usize]>) -> Vec<f64> {
    let n = g.n();
    let all: Vec<usize>;
    let nodes = match nodes {
        Some(s) => s,
        None => {
            all = (0..n).collect();
            &all
        }
    };
    let dim = if g.is_directed() { 2 * n } else { n };
    let mut out = Vec::with_capacity(nodes.len() * dim);
    for &i in nodes {
        out.extend((0..n).map(|j| if g.is_edge(i, j) { 1.0 } else { 0.0 }));
        if g.is_directed() {
            out.extend((0..n).map(|j| if g.is_edge(j, i) { 1.0 } else { 0.0 }));
        }
    }
    out
}

/// Ward agglomerative clustering (nearest-neighbor chain) of `m` points,
/// cut at `q` clusters. Labels are compacted by first appearance.
pub fn ward_labels(points: &[f64], m: usize, q: usize) -> Vec<usize> {
    if m == 0 {
        return Vec::new();
    }
    if q >= m {
        return (0..m).collect();
    }
    let dim = points.len() / m;
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d = sq_dist(&points[i * dim..(i + 1) * dim], &points[j * dim..(j + 1) * dim]);
            dist[i * m + j] = d;
            dist[j * m + i] = d;
        }
    }
    let mut size = vec![1usize; m];
    let mut active = vec![true; m];
    // (height, order, a, b): cluster b merged into a.
    let mut merges: Vec<(f64, usize, usize, usize)> = Vec::with_capacity(m - 1);
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = m;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap());
        }
        let a = *chain.last().unwrap();
        let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        if let Some(p) = prev {
            best = p;
            best_d = dist[a * m + p];
        }
        for c in 0..m {
            if c == a || !active[c] {
                continue;
            }
            let d = dist[a * m + c];
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if Some(best) == prev {
            chain.pop();
            chain.pop();
            let (x, y) = if a < best { (a, best) } else { (best, a) };
            let (nx, ny) = (size[x] as f64, size[y] as f64);
            let dxy = dist[x * m + y];
            for c in 0..m {
                if !active[c] || c == x || c == y {
                    continue;
                }
                let nc = size[c] as f64;
                let d = ((nx + nc) * dist[x * m + c] + (ny + nc) * dist[y * m + c] - nc * dxy) / (nx + ny + nc);
                dist[x * m + c] = d;
                dist[c * m + x] = d;
            }
            size[x] += size[y];
            active[y] = false;
            merges.push((best_d, merges.len(), x, y));
            remaining -= 1;
        } else {
            chain.push(best);
        }
    }
    merges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(_, _, x, y) in merges.iter().take(m - q) {
        let rx = find(&mut parent, x);
        let ry = find(&mut parent, y);
        if rx != ry {
            parent[ry] = rx;
        }
    }
    let roots: Vec<usize> = (0..m).map(|i| find(&mut parent, i)).collect();
    compact_labels(&roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques(size: usize) -> LevelGraph {
        let mut edges = Vec::new();
        for base in [0, size] {
            for i in 0..size {
                for j in (i + 1)..size {
                    edges.push((base + i, base + j));
                }
            }
        }
        LevelGraph::from_edges(2 * size, false, &edges).unwrap()
    }

    #[test]
    fn spectral_separates_cliques() {
        let g = two_cliques(5);
        let z = init_clustering(&g, 2, InitMethod::Spectral, 1).unwrap();
        assert_eq!(z, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn hierarchical_separates_cliques() {
        let g = two_cliques(4);
        let z = init_clustering(&g, 2, InitMethod::Hierarchical, 0).unwrap();
        assert_eq!(z, vec![0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn single_block_all_zero() {
        let g = two_cliques(3);
        for m in [InitMethod::Spectral, InitMethod::Hierarchical, InitMethod::Random] {
            assert_eq!(init_clustering(&g, 1, m, 0).unwrap(), vec![0; 6]);
        }
    }

    #[test]
    fn q_equals_n_gives_singletons() {
        let g = two_cliques(3);
        assert_eq!(init_clustering(&g, 6, InitMethod::Hierarchical, 0).unwrap(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn q_above_n_rejected() {
        let g = two_cliques(2);
        assert!(init_clustering(&g, 5, InitMethod::Spectral, 0).is_err());
        assert!(init_clustering(&g, 0, InitMethod::Random, 0).is_err());
    }

    #[test]
    fn compaction_by_first_use() {
        assert_eq!(compact_labels(&[4, 4, 1, 7, 1]), vec![0, 0, 1, 2, 1]);
    }

    #[test]
    fn ward_on_line_points() {
        let pts = [0.0, 0.1, 0.2, 5.0, 5.1, 9.0];
        assert_eq!(ward_labels(&pts, 6, 3), vec![0, 0, 0, 1, 1, 2]);
        assert_eq!(ward_labels(&pts, 6, 2), vec![0, 0, 0, 1, 1, 1]);
    }
}
