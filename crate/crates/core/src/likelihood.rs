//! Complete log-likelihood, variational bound and exact (enumerated)
//! log-likelihood.
//!
//! Masked dyads never enter any sum. Undirected levels sum each unordered
//! dyad once; directed levels sum over ordered pairs. A probability of
//! exactly 0 or 1 that contradicts an observation yields `-inf`, never NaN.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ln, powf, xlogy, LogSumExp};
use crate::matrix::Matrix;
use crate::model::{Assignments, ModelParams, SbmParams};
use crate::network::{LevelGraph, MultilevelNetwork};

/// Largest number of joint assignments [`exact_log_likelihood`] enumerates.
pub const EXACT_ENUMERATION_LIMIT: f64 = 1e7;

/// Block-pair sums over observed ordered dyads, weighted by memberships.
#[derive(Debug, Clone)]
pub struct PairMoments {
    /// `sum tau_ik tau_jl` over observed edges `(i, j)`.
    pub edges: Matrix,
    /// Same over observed non-edges.
    pub non_edges: Matrix,
}

impl PairMoments {
    /// Soft version, `O(n^2 q)`.
    pub fn from_tau(g: &LevelGraph, tau: &Matrix) -> Self {
        let n = g.n();
        let q = tau.cols();
        let mut edges = Matrix::zeros(q, q);
        let mut non_edges = Matrix::zeros(q, q);
        let mut e1 = vec![0.0; q];
        let mut e0 = vec![0.0; q];
        for i in 0..n {
            e1.iter_mut().for_each(|v| *v = 0.0);
            e0.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..n {
                if !g.is_observed(i, j) {
                    continue;
                }
                let acc = if g.adjacency().get(i, j) { &mut e1 } else { &mut e0 };
                for (a, &t) in acc.iter_mut().zip(tau.row(j)) {
                    *a += t;
                }
            }
            for (k, &t) in tau.row(i).iter().enumerate() {
                for k2 in 0..q {
                    edges[(k, k2)] += t * e1[k2];
                    non_edges[(k, k2)] += t * e0[k2];
                }
            }
        }
        Self { edges, non_edges }
    }

    /// Hard version: integer counts of ordered dyads per block pair.
    pub fn from_labels(g: &LevelGraph, z: &[usize], q: usize) -> Self {
        let n = g.n();
        let mut edges = Matrix::zeros(q, q);
        let mut non_edges = Matrix::zeros(q, q);
        for i in 0..n {
            for j in 0..n {
                if !g.is_observed(i, j) {
                    continue;
                }
                if g.adjacency().get(i, j) {
                    edges[(z[i], z[j])] += 1.0;
                } else {
                    non_edges[(z[i], z[j])] += 1.0;
                }
            }
        }
        Self { edges, non_edges }
    }

    /// Bernoulli log-likelihood term of one level given block-pair moments.
    pub fn level_term(&self, alpha: &Matrix, directed: bool) -> f64 {
        let q = alpha.rows();
        let mut s = 0.0;
        for k in 0..q {
            for k2 in 0..q {
                let a = alpha[(k, k2)];
                s += xlogy(self.edges[(k, k2)], a) + xlogy(self.non_edges[(k, k2)], 1.0 - a);
            }
        }
        if directed {
            s
        } else {
            0.5 * s
        }
    }
}

/// `sum_i ln pi[z_i]`.
pub fn label_prior_term(z: &[usize], pi: &[f64]) -> f64 {
    z.iter().map(|&k| xlogy(1.0, pi[k])).sum()
}

/// `sum_i ln gamma[z_ind_i, z_org[org(i)]]`.
pub fn membership_term(org_of: &[usize], z_ind: &[usize], z_org: &[usize], gamma: &Matrix) -> f64 {
    z_ind
        .iter()
        .zip(org_of)
        .map(|(&k, &j)| xlogy(1.0, gamma[(k, z_org[j])]))
        .sum()
}

/// Complete-data log-likelihood of the multilevel model.
pub fn complete_log_likelihood(net: &MultilevelNetwork, params: &ModelParams, z: &Assignments) -> Result<f64> {
    check_dims(net, params)?;
    if z.z_ind.len() != net.n_ind() || z.z_org.len() != net.n_org() {
        return Err(Error::DimensionMismatch("assignment lengths differ from network sizes".into()));
    }
    z.check(params.q_ind(), params.q_org())?;
    let org_prior = label_prior_term(&z.z_org, &params.pi_org);
    let membership = membership_term(net.org_of(), &z.z_ind, &z.z_org, &params.gamma);
    let ind = PairMoments::from_labels(net.ind(), &z.z_ind, params.q_ind()).level_term(&params.alpha_ind, net.ind().is_directed());
    let org = PairMoments::from_labels(net.org(), &z.z_org, params.q_org()).level_term(&params.alpha_org, net.org().is_directed());
    Ok(org_prior + membership + ind + org)
}

/// Complete-data log-likelihood of a single-level SBM.
pub fn sbm_complete_log_likelihood(g: &LevelGraph, params: &SbmParams, z: &[usize]) -> f64 {
    label_prior_term(z, &params.pi) + PairMoments::from_labels(g, z, params.q()).level_term(&params.alpha, g.is_directed())
}

/// `-sum tau ln tau`.
pub fn entropy(tau: &Matrix) -> f64 {
    -tau.as_slice().iter().map(|&t| xlogy(t, t)).sum::<f64>()
}

/// Expected membership term `sum_i sum_k sum_l tauI_ik tauO_{org(i) l} ln gamma_kl`.
pub fn expected_membership_term(org_of: &[usize], tau_ind: &Matrix, tau_org: &Matrix, gamma: &Matrix) -> f64 {
    let mut s = 0.0;
    for (i, &j) in org_of.iter().enumerate() {
        for (k, &ti) in tau_ind.row(i).iter().enumerate() {
            for (l, &to) in tau_org.row(j).iter().enumerate() {
                s += xlogy(ti * to, gamma[(k, l)]);
            }
        }
    }
    s
}

/// `sum_i sum_k tau_ik ln pi_k`.
pub fn expected_prior_term(tau: &Matrix, pi: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..tau.rows() {
        for (k, &t) in tau.row(i).iter().enumerate() {
            s += xlogy(t, pi[k]);
        }
    }
    s
}

/// Mean-field lower bound of the log-likelihood: expected complete
/// log-likelihood under the factorized distribution plus its entropy.
pub fn variational_bound(net: &MultilevelNetwork, params: &ModelParams, tau_ind: &Matrix, tau_org: &Matrix) -> f64 {
    let prior = expected_prior_term(tau_org, &params.pi_org);
    let membership = expected_membership_term(net.org_of(), tau_ind, tau_org, &params.gamma);
    let ind = PairMoments::from_tau(net.ind(), tau_ind).level_term(&params.alpha_ind, net.ind().is_directed());
    let org = PairMoments::from_tau(net.org(), tau_org).level_term(&params.alpha_org, net.org().is_directed());
    prior + membership + ind + org + entropy(tau_ind) + entropy(tau_org)
}

/// Mean-field lower bound for a single-level SBM.
pub fn sbm_variational_bound(g: &LevelGraph, params: &SbmParams, tau: &Matrix) -> f64 {
    expected_prior_term(tau, &params.pi) + PairMoments::from_tau(g, tau).level_term(&params.alpha, g.is_directed()) + entropy(tau)
}

/// Exact `ln p(X | A)` by enumerating every joint assignment.
pub fn exact_log_likelihood(net: &MultilevelNetwork, params: &ModelParams) -> Result<f64> {
    check_dims(net, params)?;
    let (qi, qo) = (params.q_ind(), params.q_org());
    let (ni, no) = (net.n_ind(), net.n_org());
    let total = powf(qi as f64, ni as f64) * powf(qo as f64, no as f64);
    if total > EXACT_ENUMERATION_LIMIT {
        return Err(Error::InstanceTooLarge {
            assignments: total,
            limit: EXACT_ENUMERATION_LIMIT,
        });
    }
    // ln p(X^I | Z^I) does not depend on Z^O: tabulate once.
    let ind_configs = enumerate_labels(ni, qi);
    let ind_terms: Vec<f64> = ind_configs
        .iter()
        .map(|z| PairMoments::from_labels(net.ind(), z, qi).level_term(&params.alpha_ind, net.ind().is_directed()))
        .collect();
    let mut outer = LogSumExp::default();
    for z_org in enumerate_labels(no, qo) {
        let org_part = label_prior_term(&z_org, &params.pi_org)
            + PairMoments::from_labels(net.org(), &z_org, qo).level_term(&params.alpha_org, net.org().is_directed());
        if org_part == f64::NEG_INFINITY {
            continue;
        }
        let mut inner = LogSumExp::default();
        for (z_ind, &ind_term) in ind_configs.iter().zip(&ind_terms) {
            inner.push(membership_term(net.org_of(), z_ind, &z_org, &params.gamma) + ind_term);
        }
        outer.push(org_part + inner.value());
    }
    Ok(outer.value())
}

fn enumerate_labels(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut z = vec![0usize; n];
    loop {
        out.push(z.clone());
        let mut pos = 0;
        loop {
            if pos == n {
                return out;
            }
            z[pos] += 1;
            if z[pos] < q {
                break;
            }
            z[pos] = 0;
            pos += 1;
        }
    }
}

fn check_dims(net: &MultilevelNetwork, params: &ModelParams) -> Result<()> {
    if params.directed_ind != net.ind().is_directed() || params.directed_org != net.org().is_directed() {
        return Err(Error::DimensionMismatch("directedness of parameters and network differ".into()));
    }
    params.check()
}

/// `ln phi(x, a) = x ln a + (1 - x) ln(1 - a)`.
#[inline]
pub fn log_phi(x: bool, a: f64) -> f64 {
    if x {
        ln(a)
    } else {
        ln(1.0 - a)
    }
}
