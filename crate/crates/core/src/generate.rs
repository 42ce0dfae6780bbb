//! Sampling multilevel networks and building the standard simulation designs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::powf;
use crate::matrix::{BinMatrix, Matrix};
use crate::model::{Assignments, ModelParams};
use crate::network::{LevelGraph, MultilevelNetwork};
use crate::rng::Stream;

/// Canonical connectivity patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// `eps` on the diagonal, 1 elsewhere.
    Assortative,
    /// 1 on the diagonal, `eps` elsewhere.
    Disassortative,
    /// `eps` on entries `(k, k')` with `k + k' <= q - 2` (block 0 is the
    /// core), 1 elsewhere.
    CorePeriphery,
}

/// `d` times the pattern matrix of `kind` with contrast `eps`.
pub fn topology_alpha(kind: Topology, d: f64, eps: f64, q: usize) -> Result<Matrix> {
    if !(d > 0.0) || !(eps >= 1.0) || q == 0 {
        return Err(Error::InvalidArgument(format!(
            "topology needs d > 0, eps >= 1, q >= 1 (got d={d}, eps={eps}, q={q})"
        )));
    }
    if d * eps > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "d * eps = {} exceeds 1",
            d * eps
        )));
    }
    let mut a = Matrix::zeros(q, q);
    for k in 0..q {
        for k2 in 0..q {
            let strong = match kind {
                Topology::Assortative => k == k2,
                Topology::Disassortative => k != k2,
                Topology::CorePeriphery => k + k2 + 2 <= q,
            };
            a[(k, k2)] = d * if strong { eps } else { 1.0 };
        }
    }
    Ok(a)
}

/// Square mixing matrix with `delta` on the diagonal and
/// `(1 - delta) / (q - 1)` elsewhere. `delta = 1/q` gives independent
/// levels, `delta = 1` a deterministic link.
pub fn gamma_from_delta(delta: f64, q: usize) -> Result<Matrix> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside [0, 1]")));
    }
    if q < 2 {
        return Err(Error::InvalidArgument("gamma_from_delta needs q >= 2".into()));
    }
    let off = (1.0 - delta) / (q - 1) as f64;
    let mut g = Matrix::filled(q, q, off);
    for k in 0..q {
        g[(k, k)] = delta;
    }
    Ok(g)
}

/// Distribution of organization sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeLaw {
    /// Organization of rank `r` (1-based, over a random permutation) gets
    /// weight `r^-exponent`; individuals are assigned i.i.d. by weight.
    PowerLaw { exponent: f64 },
    Uniform,
}

/// Affiliation matrix with exactly one organization per individual.
pub fn sample_affiliation(n_ind: usize, n_org: usize, law: SizeLaw, seed: u64) -> Result<BinMatrix> {
    if n_org == 0 && n_ind > 0 {
        return Err(Error::InvalidArgument("individuals need at least one organization".into()));
    }
    let mut rng = Stream::new(seed);
    let weights = match law {
        SizeLaw::PowerLaw { exponent } => {
            if !(exponent > 1.0) || !exponent.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "power-law exponent must be > 1, got {exponent}"
                )));
            }
            let mut order: Vec<usize> = (0..n_org).collect();
            rng.shuffle(&mut order);
            let mut w = vec![0.0; n_org];
            for (rank, &j) in order.iter().enumerate() {
                w[j] = powf((rank + 1) as f64, -exponent);
            }
            w
        }
        SizeLaw::Uniform => vec![1.0; n_org],
    };
    let mut a = BinMatrix::new(n_ind, n_org);
    for i in 0..n_ind {
        let j = rng.categorical(&weights);
        a.set(i, j, true);
    }
    Ok(a)
}

/// Draws memberships then dyads from the multilevel SBM.
///
/// Sampling order is fixed: organization blocks, individual blocks in index
/// order, individual dyads row-major, organization dyads row-major (upper
/// triangle only for undirected levels).
pub fn sample_network(
    params: &ModelParams,
    n_ind: usize,
    n_org: usize,
    affiliation: &BinMatrix,
    seed: u64,
) -> Result<(MultilevelNetwork, Assignments)> {
    params.check()?;
    if affiliation.rows() != n_ind || affiliation.cols() != n_org {
        return Err(Error::DimensionMismatch(format!(
            "affiliation is {}x{}, expected {n_ind}x{n_org}",
            affiliation.rows(),
            affiliation.cols()
        )));
    }
    let org_of: Vec<usize> = (0..n_ind)
        .map(|i| {
            let row = affiliation.row(i);
            if row.iter().filter(|&&b| b).count() == 1 {
                Ok(row.iter().position(|&b| b).unwrap())
            } else {
                Err(Error::InvalidArgument(format!(
                    "affiliation row {i} must contain exactly one 1"
                )))
            }
        })
        .collect::<Result<_>>()?;

    let mut rng = Stream::new(seed);
    let z_org: Vec<usize> = (0..n_org).map(|_| rng.categorical(&params.pi_org)).collect();
    let q_ind = params.q_ind();
    let z_ind: Vec<usize> = org_of
        .iter()
        .map(|&j| {
            let col: Vec<f64> = (0..q_ind).map(|k| params.gamma[(k, z_org[j])]).collect();
            rng.categorical(&col)
        })
        .collect();
    let ind = sample_level(&mut rng, &params.alpha_ind, &z_ind, params.directed_ind);
    let org = sample_level(&mut rng, &params.alpha_org, &z_org, params.directed_org);
    let net = MultilevelNetwork::new(ind, org, affiliation.clone())?;
    Ok((net, Assignments { z_ind, z_org }))
}

fn sample_level(rng: &mut Stream, alpha: &Matrix, z: &[usize], directed: bool) -> LevelGraph {
    let n = z.len();
    let mut x = BinMatrix::new(n, n);
    for i in 0..n {
        let start = if directed { 0 } else { i + 1 };
        for j in start..n {
            if i == j {
                continue;
            }
            if rng.bernoulli(alpha[(z[i], z[j])]) {
                x.set(i, j, true);
                if !directed {
                    x.set(j, i, true);
                }
            }
        }
    }
    LevelGraph::from_parts(directed, x, BinMatrix::full(n, n))
}

/// One cell of the standard two-level simulation grid: three blocks per
/// level, assortative organization level (`d = 0.1`, `eps = 5`), uniform
/// organization block proportions, `gamma` built from `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub n_ind: usize,
    pub n_org: usize,
    pub q: usize,
    pub ind_topology: Topology,
    pub ind_d: f64,
    pub ind_eps: f64,
    pub org_topology: Topology,
    pub org_d: f64,
    pub org_eps: f64,
    pub delta: f64,
    pub size_law: SizeLaw,
    pub directed_ind: bool,
    pub directed_org: bool,
}

/// Default organization-size exponent of the simulation designs.
pub const DEFAULT_POWER_LAW_EXPONENT: f64 = 1.5;

impl Design {
    pub fn standard(ind_topology: Topology) -> Self {
        Self {
            n_ind: 180,
            n_org: 60,
            q: 3,
            ind_topology,
            ind_d: 0.1,
            ind_eps: 5.0,
            org_topology: Topology::Assortative,
            org_d: 0.1,
            org_eps: 5.0,
            delta: 0.8,
            size_law: SizeLaw::PowerLaw {
                exponent: DEFAULT_POWER_LAW_EXPONENT,
            },
            directed_ind: false,
            directed_org: false,
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams {
            pi_org: vec![1.0 / self.q as f64; self.q],
            gamma: gamma_from_delta(self.delta, self.q)?,
            alpha_ind: topology_alpha(self.ind_topology, self.ind_d, self.ind_eps, self.q)?,
            alpha_org: topology_alpha(self.org_topology, self.org_d, self.org_eps, self.q)?,
            directed_ind: self.directed_ind,
            directed_org: self.directed_org,
        })
    }

    /// Samples affiliation (stream 0 of `seed`) and network (stream 1).
    pub fn sample(&self, seed: u64) -> Result<(MultilevelNetwork, Assignments, ModelParams)> {
        let params = self.params()?;
        let a = sample_affiliation(
            self.n_ind,
            self.n_org,
            self.size_law,
            crate::rng::derive_seed(seed, 0),
        )?;
        let (net, z) = sample_network(&params, self.n_ind, self.n_org, &a, crate::rng::derive_seed(seed, 1))?;
        Ok((net, z, params))
    }
}
