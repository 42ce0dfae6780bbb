//! Model parameters and block assignments.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const SUM_TOL: f64 = 1e-9;

/// Parameters of a multilevel SBM with `q_ind` individual blocks and
/// `q_org` organization blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Prior block proportions of organizations (length `q_org`).
    pub pi_org: Vec<f64>,
    /// `q_ind x q_org`; column `l` is the block distribution of an
    /// individual whose organization sits in block `l`.
    pub gamma: Matrix,
    /// `q_ind x q_ind` connection probabilities between individual blocks.
    pub alpha_ind: Matrix,
    /// `q_org x q_org` connection probabilities between organization blocks.
    pub alpha_org: Matrix,
    pub directed_ind: bool,
    pub directed_org: bool,
}

impl ModelParams {
    pub fn q_ind(&self) -> usize {
        self.alpha_ind.rows()
    }

    pub fn q_org(&self) -> usize {
        self.alpha_org.rows()
    }

    /// Checks shapes, simplex constraints and symmetry of undirected levels.
    pub fn check(&self) -> Result<()> {
        let (qi, qo) = (self.q_ind(), self.q_org());
        if qi == 0 || qo == 0 {
            return Err(Error::InvalidArgument("block counts must be >= 1".into()));
        }
        if self.alpha_ind.cols() != qi || self.alpha_org.cols() != qo {
            return Err(Error::DimensionMismatch("alpha matrices must be square".into()));
        }
        if self.pi_org.len() != qo || self.gamma.rows() != qi || self.gamma.cols() != qo {
            return Err(Error::DimensionMismatch(format!(
                "expected pi_org of length {qo} and gamma of shape {qi}x{qo}"
            )));
        }
        check_simplex(&self.pi_org, "pi_org")?;
        for l in 0..qo {
            let col: Vec<f64> = (0..qi).map(|k| self.gamma[(k, l)]).collect();
            check_simplex(&col, "gamma column")?;
        }
        check_alpha(&self.alpha_ind, self.directed_ind, "alpha_ind")?;
        check_alpha(&self.alpha_org, self.directed_org, "alpha_org")?;
        Ok(())
    }

    /// True when all columns of `gamma` coincide, i.e. the two levels are
    /// independent.
    pub fn has_independent_levels(&self, tol: f64) -> bool {
        (1..self.q_org()).all(|l| (0..self.q_ind()).all(|k| (self.gamma[(k, l)] - self.gamma[(k, 0)]).abs() <= tol))
    }

    /// Marginal block proportions of individuals, `gamma * pi_org`.
    pub fn pi_ind_marginal(&self) -> Vec<f64> {
        (0..self.q_ind())
            .map(|k| (0..self.q_org()).map(|l| self.gamma[(k, l)] * self.pi_org[l]).sum())
            .collect()
    }

    /// Sufficient condition for identifiability up to label switching:
    /// the entries of `alpha_ind * gamma * pi_org` are pairwise distinct and
    /// so are those of `alpha_org * pi_org`.
    pub fn distinct_coefficients(&self, tol: f64) -> bool {
        let gp = self.pi_ind_marginal();
        let ind: Vec<f64> = (0..self.q_ind())
            .map(|k| (0..self.q_ind()).map(|k2| self.alpha_ind[(k, k2)] * gp[k2]).sum())
            .collect();
        let org: Vec<f64> = (0..self.q_org())
            .map(|l| (0..self.q_org()).map(|l2| self.alpha_org[(l, l2)] * self.pi_org[l2]).sum())
            .collect();
        pairwise_distinct(&ind, tol) && pairwise_distinct(&org, tol)
    }

    /// Relabels blocks: new block `perm[k]` takes the role of old block `k`.
    pub fn permuted(&self, perm_ind: &[usize], perm_org: &[usize]) -> Self {
        let (qi, qo) = (self.q_ind(), self.q_org());
        let mut gamma = Matrix::zeros(qi, qo);
        let mut alpha_ind = Matrix::zeros(qi, qi);
        let mut alpha_org = Matrix::zeros(qo, qo);
        let mut pi_org = alloc::vec![0.0; qo];
        for k in 0..qi {
            for l in 0..qo {
                gamma[(perm_ind[k], perm_org[l])] = self.gamma[(k, l)];
            }
            for k2 in 0..qi {
                alpha_ind[(perm_ind[k], perm_ind[k2])] = self.alpha_ind[(k, k2)];
            }
        }
        for l in 0..qo {
            pi_org[perm_org[l]] = self.pi_org[l];
            for l2 in 0..qo {
                alpha_org[(perm_org[l], perm_org[l2])] = self.alpha_org[(l, l2)];
            }
        }
        Self {
            pi_org,
            gamma,
            alpha_ind,
            alpha_org,
            ..self.clone()
        }
    }
}

/// Parameters of a single-level SBM.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub pi: Vec<f64>,
    pub alpha: Matrix,
    pub directed: bool,
}

impl SbmParams {
    pub fn q(&self) -> usize {
        self.pi.len()
    }
}

/// Hard block memberships, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignments {
    pub z_ind: Vec<usize>,
    pub z_org: Vec<usize>,
}

impl Assignments {
    pub fn check(&self, q_ind: usize, q_org: usize) -> Result<()> {
        if self.z_ind.iter().any(|&k| k >= q_ind) || self.z_org.iter().any(|&l| l >= q_org) {
            return Err(Error::InvalidArgument("block label out of range".into()));
        }
        Ok(())
    }
}

fn check_simplex(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidArgument(format!("{what} has entries outside [0, 1]")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidArgument(format!("{what} sums to {s}, expected 1")));
    }
    Ok(())
}

fn check_alpha(a: &Matrix, directed: bool, what: &str) -> Result<()> {
    if a.as_slice().iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidArgument(format!("{what} has entries outside [0, 1]")));
    }
    if !directed && !a.is_symmetric(1e-12) {
        return Err(Error::InvalidArgument(format!("{what} must be symmetric for an undirected level")));
    }
    Ok(())
}

fn pairwise_distinct(v: &[f64], tol: f64) -> bool {
    v.iter()
        .enumerate()
        .all(|(i, a)| v[i + 1..].iter().all(|b| (a - b).abs() > tol))
}
