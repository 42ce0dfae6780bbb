//! Multilevel network data model, validation, densities and masking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::matrix::BinMatrix;
use crate::rng::Stream;

/// The two levels of a multilevel network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    /// Inter-individual level.
    Ind,
    /// Inter-organizational level.
    Org,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Ind => "ind",
            Level::Org => "org",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One binary graph with its observation mask.
///
/// Undirected graphs are stored as full symmetric matrices. Entries of
/// `adjacency` where `mask` is false are never read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelGraph {
    n: usize,
    directed: bool,
    adjacency: BinMatrix,
    mask: BinMatrix,
}

impl LevelGraph {
    /// Wraps matrices without checking invariants (see [`LevelGraph::violations`]).
    pub fn from_parts(directed: bool, adjacency: BinMatrix, mask: BinMatrix) -> Self {
        Self {
            n: adjacency.rows(),
            directed,
            adjacency,
            mask,
        }
    }

    /// Fully observed graph from an edge list. Undirected edges listed once
    /// fill both orientations.
    pub fn from_edges(n: usize, directed: bool, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = BinMatrix::new(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch(format!(
                    "edge ({i}, {j}) references a node >= {n}"
                )));
            }
            adjacency.set(i, j, true);
            if !directed {
                adjacency.set(j, i, true);
            }
        }
        Ok(Self::from_parts(directed, adjacency, BinMatrix::full(n, n)))
    }

    pub fn empty(n: usize, directed: bool) -> Self {
        Self::from_parts(directed, BinMatrix::new(n, n), BinMatrix::full(n, n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn adjacency(&self) -> &BinMatrix {
        &self.adjacency
    }

    pub fn mask(&self) -> &BinMatrix {
        &self.mask
    }

    /// Dyad `(i, j)` is off-diagonal and observed.
    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        i != j && self.mask.get(i, j)
    }

    /// Dyad `(i, j)` is observed and carries an edge.
    #[inline]
    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.is_observed(i, j) && self.adjacency.get(i, j)
    }

    /// Dyads counted once: `i < j` when undirected, `i != j` when directed.
    pub fn dyads(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        let directed = self.directed;
        (0..n).flat_map(move |i| {
            let start = if directed { 0 } else { i + 1 };
            (start..n).filter(move |&j| j != i).map(move |j| (i, j))
        })
    }

    pub fn observed_dyads(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.dyads().filter(|&(i, j)| self.is_observed(i, j))
    }

    pub fn masked_dyads(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.dyads().filter(|&(i, j)| !self.is_observed(i, j))
    }

    /// Observed edges, each undirected edge once with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.dyads().filter(|&(i, j)| self.is_edge(i, j))
    }

    pub fn n_observed_dyads(&self) -> usize {
        self.observed_dyads().count()
    }

    pub fn n_edges(&self) -> usize {
        self.edges().count()
    }

    /// Observed edges over observed dyads; 0 when nothing is observed.
    pub fn density(&self) -> f64 {
        let dyads = self.n_observed_dyads();
        if dyads == 0 {
            0.0
        } else {
            self.n_edges() as f64 / dyads as f64
        }
    }

    pub fn is_fully_observed(&self) -> bool {
        self.masked_dyads().next().is_none()
    }

    pub fn violations(&self, level: Level) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.n;
        if self.adjacency.cols() != n || self.mask.rows() != n || self.mask.cols() != n {
            out.push(Violation::Shape {
                level,
                rows: self.adjacency.rows(),
                cols: self.adjacency.cols(),
            });
            return out;
        }
        for i in 0..n {
            if self.adjacency.get(i, i) {
                out.push(Violation::NonzeroDiagonal { level, index: i });
            }
        }
        if !self.directed {
            for i in 0..n {
                for j in (i + 1)..n {
                    if self.mask.get(i, j) != self.mask.get(j, i) {
                        out.push(Violation::AsymmetricMask { level, i, j });
                    } else if self.mask.get(i, j) && self.adjacency.get(i, j) != self.adjacency.get(j, i) {
                        out.push(Violation::AsymmetricAdjacency { level, i, j });
                    }
                }
            }
        }
        out
    }

    /// Copy with the given dyads hidden (both orientations when undirected).
    pub fn with_masked(&self, dyads: &[(usize, usize)]) -> Self {
        let mut g = self.clone();
        for &(i, j) in dyads {
            g.mask.set(i, j, false);
            if !g.directed {
                g.mask.set(j, i, false);
            }
        }
        g
    }

    /// Copy with the given edges removed (both orientations when undirected).
    pub fn with_removed_edges(&self, edges: &[(usize, usize)]) -> Self {
        let mut g = self.clone();
        for &(i, j) in edges {
            g.adjacency.set(i, j, false);
            if !g.directed {
                g.adjacency.set(j, i, false);
            }
        }
        g
    }
}

/// A broken structural invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonzeroDiagonal { level: Level, index: usize },
    AsymmetricAdjacency { level: Level, i: usize, j: usize },
    AsymmetricMask { level: Level, i: usize, j: usize },
    AffiliationRowSum { row: usize, sum: usize },
    Shape { level: Level, rows: usize, cols: usize },
    AffiliationShape { rows: usize, cols: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonzeroDiagonal { level, index } => {
                write!(f, "nonzero diagonal at {level} {index}")
            }
            Violation::AsymmetricAdjacency { level, i, j } => {
                write!(f, "undirected x_{level} asymmetric at ({i}, {j})")
            }
            Violation::AsymmetricMask { level, i, j } => {
                write!(f, "undirected mask_{level} asymmetric at ({i}, {j})")
            }
            Violation::AffiliationRowSum { row, sum } => {
                write!(f, "affiliation row {row} sums to {sum}")
            }
            Violation::Shape { level, rows, cols } => {
                write!(f, "x_{level} has shape {rows}x{cols}, expected a square matrix matching its mask")
            }
            Violation::AffiliationShape { rows, cols } => write!(
                f,
                "affiliation has shape {rows}x{cols}, expected n_ind x n_org"
            ),
        }
    }
}

/// Summary statistics of a multilevel network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub density_ind: f64,
    pub density_org: f64,
    pub org_sizes: Vec<usize>,
}

/// Two graphs joined by an affiliation matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilevelNetwork {
    ind: LevelGraph,
    org: LevelGraph,
    affiliation: BinMatrix,
    org_of: Vec<usize>,
}

impl MultilevelNetwork {
    /// Assembles a network without validation. Use [`MultilevelNetwork::new`]
    /// for anything that feeds inference.
    pub fn from_parts_unchecked(ind: LevelGraph, org: LevelGraph, affiliation: BinMatrix) -> Self {
        let org_of = (0..affiliation.rows())
            .map(|i| affiliation.row(i).iter().position(|&b| b).unwrap_or(usize::MAX))
            .collect();
        Self {
            ind,
            org,
            affiliation,
            org_of,
        }
    }

    pub fn new(ind: LevelGraph, org: LevelGraph, affiliation: BinMatrix) -> Result<Self> {
        let net = Self::from_parts_unchecked(ind, org, affiliation);
        let v = net.validate();
        if v.is_empty() {
            Ok(net)
        } else {
            Err(Error::InvalidNetwork(v))
        }
    }

    /// Builds a validated network from an organization index per individual.
    pub fn from_affiliation_index(ind: LevelGraph, org: LevelGraph, org_of: &[usize]) -> Result<Self> {
        let n_org = org.n();
        let mut a = BinMatrix::new(org_of.len(), n_org);
        for (i, &j) in org_of.iter().enumerate() {
            if j >= n_org {
                return Err(Error::DimensionMismatch(format!(
                    "individual {i} affiliated to organization {j} >= {n_org}"
                )));
            }
            a.set(i, j, true);
        }
        Self::new(ind, org, a)
    }

    /// Every broken invariant; empty iff the network is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.ind.violations(Level::Ind);
        out.extend(self.org.violations(Level::Org));
        let a = &self.affiliation;
        if a.rows() != self.ind.n() || a.cols() != self.org.n() {
            out.push(Violation::AffiliationShape {
                rows: a.rows(),
                cols: a.cols(),
            });
            return out;
        }
        for i in 0..a.rows() {
            let sum = a.row_count(i);
            if sum != 1 {
                out.push(Violation::AffiliationRowSum { row: i, sum });
            }
        }
        out
    }

    pub fn ind(&self) -> &LevelGraph {
        &self.ind
    }

    pub fn org(&self) -> &LevelGraph {
        &self.org
    }

    pub fn level(&self, level: Level) -> &LevelGraph {
        match level {
            Level::Ind => &self.ind,
            Level::Org => &self.org,
        }
    }

    pub fn n_ind(&self) -> usize {
        self.ind.n()
    }

    pub fn n_org(&self) -> usize {
        self.org.n()
    }

    pub fn affiliation(&self) -> &BinMatrix {
        &self.affiliation
    }

    /// Organization of each individual.
    pub fn org_of(&self) -> &[usize] {
        &self.org_of
    }

    /// Replaces one level, keeping the rest.
    pub fn with_level(&self, level: Level, graph: LevelGraph) -> Self {
        let mut net = self.clone();
        match level {
            Level::Ind => net.ind = graph,
            Level::Org => net.org = graph,
        }
        net
    }

    pub fn stats(&self) -> NetworkStats {
        let mut org_sizes = vec![0; self.n_org()];
        for &j in &self.org_of {
            if j < org_sizes.len() {
                org_sizes[j] += 1;
            }
        }
        NetworkStats {
            density_ind: self.ind.density(),
            density_org: self.org.density(),
            org_sizes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Hide dyads: mask set to 0, the value is kept but never read.
    Dyads,
    /// Remove existing links: x set to 0, dyad stays observed.
    Links,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskSelection {
    /// Uniform random subset of `floor(fraction * eligible)` entries.
    Fraction(f64),
    /// Explicit dyads; each must be eligible for the mode.
    Explicit(Vec<(usize, usize)>),
}

/// Output of [`apply_mask`]: the modified network and the affected dyads.
#[derive(Debug, Clone)]
pub struct Masked {
    pub network: MultilevelNetwork,
    /// Masked dyads (`Dyads` mode) or removed links (`Links` mode), each
    /// undirected dyad once with `i < j`.
    pub held_out: Vec<(usize, usize)>,
}

/// Hides dyads or removes links uniformly at random on one level.
///
/// Eligible entries are the observed off-diagonal dyads (`Dyads`) or the
/// observed edges (`Links`); one undirected dyad counts once.
pub fn apply_mask(
    net: &MultilevelNetwork,
    level: Level,
    selection: &MaskSelection,
    mode: MaskMode,
    seed: u64,
) -> Result<Masked> {
    let graph = net.level(level);
    let eligible: Vec<(usize, usize)> = match mode {
        MaskMode::Dyads => graph.observed_dyads().collect(),
        MaskMode::Links => graph.edges().collect(),
    };
    if mode == MaskMode::Links && eligible.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "links mode on level {level} with no existing edges"
        )));
    }
    let chosen: Vec<(usize, usize)> = match selection {
        MaskSelection::Fraction(f) => {
            let upper_ok = match mode {
                MaskMode::Dyads => *f < 1.0,
                MaskMode::Links => *f <= 1.0,
            };
            if !(*f >= 0.0 && upper_ok) {
                return Err(Error::InvalidArgument(format!(
                    "missing fraction {f} out of range"
                )));
            }
            // Truncation is the floor for non-negative values.
            let count = (f * eligible.len() as f64) as usize;
            let mut rng = Stream::new(seed);
            let mut picked: Vec<(usize, usize)> = rng
                .sample_indices(eligible.len(), count)
                .into_iter()
                .map(|k| eligible[k])
                .collect();
            picked.sort_unstable();
            picked
        }
        MaskSelection::Explicit(pairs) => {
            let mut picked = Vec::with_capacity(pairs.len());
            for &(i, j) in pairs {
                let (a, b) = if graph.is_directed() || i < j { (i, j) } else { (j, i) };
                if eligible.binary_search(&(a, b)).is_err() {
                    return Err(Error::InvalidArgument(format!(
                        "dyad ({i}, {j}) is not eligible for masking on level {level}"
                    )));
                }
                picked.push((a, b));
            }
            picked.sort_unstable();
            picked.dedup();
            picked
        }
    };
    let new_graph = match mode {
        MaskMode::Dyads => graph.with_masked(&chosen),
        MaskMode::Links => graph.with_removed_edges(&chosen),
    };
    Ok(Masked {
        network: net.with_level(level, new_graph),
        held_out: chosen,
    })
}
