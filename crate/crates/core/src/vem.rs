//! Variational EM for the multilevel SBM and the single-level SBM.
//!
//! The M-step uses closed forms. The VE-step runs sequential fixed-point
//! sweeps, organizations first, in log space. Each row update is a
//! coordinate ascent move on the bound: a candidate row that would lower
//! the row's share of the bound (possible only through the floor) is
//! discarded, so the bound never decreases across a sweep.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::init::{random_labels, InitMethod, SpectralEmbedding};
use crate::likelihood::{entropy, expected_membership_term, expected_prior_term, PairMoments};
use crate::math::{exp, ln};
use crate::matrix::Matrix;
use crate::model::{Assignments, ModelParams, SbmParams};
use crate::network::{Level, LevelGraph, MultilevelNetwork};
use crate::rng::{derive_seed, Stream};
use crate::select::{icl_mlvsbm, icl_sbm};

/// Smallest membership probability kept in any `tau` entry.
pub const TAU_FLOOR: f64 = 1e-9;
/// Connection probabilities are kept in `[ALPHA_CLAMP, 1 - ALPHA_CLAMP]`.
pub const ALPHA_CLAMP: f64 = 1e-9;
/// Fraction of nodes relabeled at random in perturbed restarts.
pub const RESTART_RELABEL_RATE: f64 = 0.2;
/// Expected block size below which a block is reported as empty.
pub const EMPTY_BLOCK_MASS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_outer_iterations: usize,
    /// Stop when `(bound_t - bound_{t-1}) / |bound_{t-1}|` falls below this.
    pub bound_rel_tolerance: f64,
    pub max_fixed_point_sweeps: usize,
    /// A VE step stops once no `tau` entry moves by more than this.
    pub fixed_point_tolerance: f64,
    /// Total number of starting points of [`fit`] (at least one).
    pub n_random_restarts: usize,
    pub init_method: InitMethod,
    pub seed: u64,
    /// Weight of the new row when blending with the old one, in `(0, 1]`.
    pub damping: f64,
    /// Constrain the columns of `gamma` to be equal (independent levels).
    pub independent_levels: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_outer_iterations: 1000,
            bound_rel_tolerance: 1e-6,
            max_fixed_point_sweeps: 50,
            fixed_point_tolerance: 1e-6,
            n_random_restarts: 10,
            init_method: InitMethod::Spectral,
            seed: 0,
            damping: 1.0,
            independent_levels: false,
        }
    }
}

impl FitOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.bound_rel_tolerance > 0.0) || !(self.fixed_point_tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be > 0".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument("damping must lie in (0, 1]".into()));
        }
        if self.max_outer_iterations == 0 || self.max_fixed_point_sweeps == 0 {
            return Err(Error::InvalidArgument("iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Non-fatal events recorded during a fit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitWarning {
    /// A block's expected size dropped below [`EMPTY_BLOCK_MASS`].
    EmptyBlock { level: Level, block: usize },
    /// A closed-form denominator was zero; the degenerate-input rule applied.
    DegenerateEstimate { level: Level, block: usize },
    /// Some VE steps stopped at the sweep cap.
    FixedPointCap,
    /// The outer loop stopped at the iteration cap.
    IterationCap,
}

impl fmt::Display for FitWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitWarning::EmptyBlock { level, block } => write!(f, "{level} block {block} is empty"),
            FitWarning::DegenerateEstimate { level, block } => {
                write!(f, "{level} block {block} has no mass; estimates fall back to defaults")
            }
            FitWarning::FixedPointCap => write!(f, "VE fixed point stopped at the sweep cap"),
            FitWarning::IterationCap => write!(f, "outer loop stopped at the iteration cap"),
        }
    }
}

fn note(warnings: &mut Vec<FitWarning>, w: FitWarning) {
    if !warnings.contains(&w) {
        warnings.push(w);
    }
}

/// Membership probabilities of the mean-field distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub tau_ind: Matrix,
    pub tau_org: Matrix,
}

impl VariationalState {
    pub fn from_labels(z_ind: &[usize], q_ind: usize, z_org: &[usize], q_org: usize) -> Self {
        Self {
            tau_ind: one_hot(z_ind, q_ind),
            tau_org: one_hot(z_org, q_org),
        }
    }

    pub fn q_ind(&self) -> usize {
        self.tau_ind.cols()
    }

    pub fn q_org(&self) -> usize {
        self.tau_org.cols()
    }

    /// Row-wise argmax, ties to the lowest block.
    pub fn map(&self) -> Assignments {
        Assignments {
            z_ind: self.tau_ind.row_argmax(),
            z_org: self.tau_org.row_argmax(),
        }
    }

    fn check(&self, net: &MultilevelNetwork) -> Result<()> {
        if self.tau_ind.rows() != net.n_ind() || self.tau_org.rows() != net.n_org() {
            return Err(Error::DimensionMismatch("tau rows differ from network sizes".into()));
        }
        if self.q_ind() == 0 || self.q_org() == 0 {
            return Err(Error::InvalidArgument("block counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Floored one-hot membership matrix.
pub fn one_hot(z: &[usize], q: usize) -> Matrix {
    let mut tau = Matrix::filled(z.len(), q, TAU_FLOOR);
    for (i, &k) in z.iter().enumerate() {
        tau[(i, k)] = 1.0 - (q - 1) as f64 * TAU_FLOOR;
    }
    tau
}

/// Writes `floor + (1 - q floor) softmax(logits)` into `out`.
pub fn floored_softmax(logits: &[f64], out: &mut [f64]) {
    let q = logits.len();
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, &v) in out.iter_mut().zip(logits) {
        *o = if m.is_finite() { exp(v - m) } else { 1.0 };
        s += *o;
    }
    let mass = 1.0 - q as f64 * TAU_FLOOR;
    out.iter_mut().for_each(|o| *o = TAU_FLOOR + mass * *o / s);
}

fn row_objective(logits: &[f64], tau: &[f64]) -> f64 {
    logits.iter().zip(tau).map(|(&l, &t)| t * (l - ln(t))).sum()
}

fn clamp_prob(a: f64) -> f64 {
    a.clamp(ALPHA_CLAMP, 1.0 - ALPHA_CLAMP)
}

/// `ln max(p, MIN_POSITIVE)`: keeps zero-probability entries of
/// user-provided parameters finite in the VE logits.
fn safe_ln(p: f64) -> f64 {
    ln(p.max(f64::MIN_POSITIVE))
}

/// Edge and hidden-dyad lists of a level, by direction. For undirected
/// levels only the `out_*` lists are filled and serve both directions.
pub(crate) struct Neighbors {
    directed: bool,
    /// `out_edges[i]`: nodes `j` with an observed edge `i -> j`.
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    /// `out_hidden[i]`: nodes `j != i` with `(i, j)` unobserved.
    out_hidden: Vec<Vec<usize>>,
    in_hidden: Vec<Vec<usize>>,
}

impl Neighbors {
    pub(crate) fn new(g: &LevelGraph) -> Self {
        let n = g.n();
        let directed = g.is_directed();
        let mut nb = Self {
            directed,
            out_edges: vec![Vec::new(); n],
            in_edges: vec![Vec::new(); if directed { n } else { 0 }],
            out_hidden: vec![Vec::new(); n],
            in_hidden: vec![Vec::new(); if directed { n } else { 0 }],
        };
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if g.is_edge(i, j) {
                    nb.out_edges[i].push(j);
                    if directed {
                        nb.in_edges[j].push(i);
                    }
                } else if !g.is_observed(i, j) {
                    nb.out_hidden[i].push(j);
                    if directed {
                        nb.in_hidden[j].push(i);
                    }
                }
            }
        }
        nb
    }

    fn in_edges(&self, i: usize) -> &[usize] {
        if self.directed {
            &self.in_edges[i]
        } else {
            &self.out_edges[i]
        }
    }

    fn in_hidden(&self, i: usize) -> &[usize] {
        if self.directed {
            &self.in_hidden[i]
        } else {
            &self.out_hidden[i]
        }
    }
}

fn add_rows(acc: &mut [f64], tau: &Matrix, nodes: &[usize]) {
    for &j in nodes {
        for (a, &t) in acc.iter_mut().zip(tau.row(j)) {
            *a += t;
        }
    }
}

/// Per-node sums of neighbor memberships over edges and over hidden dyads,
/// by direction, plus the column sums of `tau`. Sums over observed
/// non-edges follow by difference. Kept in sync with `tau` during a VE step
/// at a cost proportional to the changed node's degree.
struct LevelField {
    directed: bool,
    q: usize,
    total: Vec<f64>,
    out1: Vec<f64>,
    out_hid: Vec<f64>,
    in1: Vec<f64>,
    in_hid: Vec<f64>,
}

impl LevelField {
    fn build(nb: &Neighbors, tau: &Matrix) -> Self {
        let (n, q) = (tau.rows(), tau.cols());
        let directed = nb.directed;
        let size = if directed { n * q } else { 0 };
        let mut f = Self {
            directed,
            q,
            total: (0..q).map(|k| tau.col_sum(k)).collect(),
            out1: vec![0.0; n * q],
            out_hid: vec![0.0; n * q],
            in1: vec![0.0; size],
            in_hid: vec![0.0; size],
        };
        for i in 0..n {
            add_rows(&mut f.out1[i * q..(i + 1) * q], tau, &nb.out_edges[i]);
            add_rows(&mut f.out_hid[i * q..(i + 1) * q], tau, &nb.out_hidden[i]);
            if directed {
                add_rows(&mut f.in1[i * q..(i + 1) * q], tau, &nb.in_edges[i]);
                add_rows(&mut f.in_hid[i * q..(i + 1) * q], tau, &nb.in_hidden[i]);
            }
        }
        f
    }

    /// Sum of `tau_j` over observed non-edges `(i, j)`.
    fn out0(&self, i: usize, tau_i: &[f64], k: usize) -> f64 {
        let q = self.q;
        self.total[k] - tau_i[k] - self.out_hid[i * q + k] - self.out1[i * q + k]
    }

    fn in0(&self, i: usize, tau_i: &[f64], k: usize) -> f64 {
        let q = self.q;
        self.total[k] - tau_i[k] - self.in_hid[i * q + k] - self.in1[i * q + k]
    }

    fn add_logits(&self, i: usize, tau_i: &[f64], logs: &AlphaLogs, logits: &mut [f64]) {
        let q = self.q;
        for k2 in 0..q {
            let o1 = self.out1[i * q + k2];
            let o0 = self.out0(i, tau_i, k2);
            for (k, l) in logits.iter_mut().enumerate() {
                *l += o1 * logs.edge[k * q + k2] + o0 * logs.non_edge[k * q + k2];
            }
        }
        if self.directed {
            for k2 in 0..q {
                let i1 = self.in1[i * q + k2];
                let i0 = self.in0(i, tau_i, k2);
                for (k, l) in logits.iter_mut().enumerate() {
                    *l += i1 * logs.edge[k2 * q + k] + i0 * logs.non_edge[k2 * q + k];
                }
            }
        }
    }

    fn update(&mut self, nb: &Neighbors, i: usize, delta: &[f64]) {
        let q = self.q;
        let bump = |acc: &mut Vec<f64>, nodes: &[usize]| {
            for &j in nodes {
                for (a, &d) in acc[j * q..(j + 1) * q].iter_mut().zip(delta) {
                    *a += d;
                }
            }
        };
        for (t, &d) in self.total.iter_mut().zip(delta) {
            *t += d;
        }
        bump(&mut self.out1, nb.in_edges(i));
        bump(&mut self.out_hid, nb.in_hidden(i));
        if self.directed {
            bump(&mut self.in1, &nb.out_edges[i]);
            bump(&mut self.in_hid, &nb.out_hidden[i]);
        }
    }

    fn moments(&self, tau: &Matrix) -> PairMoments {
        let q = self.q;
        let mut edges = Matrix::zeros(q, q);
        let mut non_edges = Matrix::zeros(q, q);
        for i in 0..tau.rows() {
            let ti = tau.row(i);
            for k2 in 0..q {
                let o1 = self.out1[i * q + k2];
                let o0 = self.out0(i, ti, k2);
                for (k, &t) in ti.iter().enumerate() {
                    edges[(k, k2)] += t * o1;
                    non_edges[(k, k2)] += t * o0;
                }
            }
        }
        PairMoments { edges, non_edges }
    }
}

/// Block-pair moments of `tau`, through freshly built neighbor sums.
fn level_moments(nb: &Neighbors, tau: &Matrix) -> PairMoments {
    LevelField::build(nb, tau).moments(tau)
}

struct AlphaLogs {
    edge: Vec<f64>,
    non_edge: Vec<f64>,
}

impl AlphaLogs {
    fn new(alpha: &Matrix) -> Self {
        Self {
            edge: alpha.as_slice().iter().map(|&a| ln(clamp_prob(a))).collect(),
            non_edge: alpha.as_slice().iter().map(|&a| ln(1.0 - clamp_prob(a))).collect(),
        }
    }
}

/// One sequential sweep over the rows of `tau`. `extra` adds the terms that
/// do not come from the level's own dyads; `on_change` sees every applied
/// row difference. Returns the largest absolute entry change.
fn sweep(
    nb: &Neighbors,
    field: &mut LevelField,
    tau: &mut Matrix,
    logs: &AlphaLogs,
    damping: f64,
    mut extra: impl FnMut(usize, &mut [f64]),
    mut on_change: impl FnMut(usize, &[f64]),
) -> f64 {
    let q = tau.cols();
    if q == 1 {
        return 0.0;
    }
    let mut logits = vec![0.0; q];
    let mut cand = vec![0.0; q];
    let mut delta = vec![0.0; q];
    let mut max_change: f64 = 0.0;
    for i in 0..tau.rows() {
        logits.iter_mut().for_each(|v| *v = 0.0);
        extra(i, &mut logits);
        field.add_logits(i, tau.row(i), logs, &mut logits);
        floored_softmax(&logits, &mut cand);
        let old = tau.row(i);
        if damping < 1.0 {
            for (c, &o) in cand.iter_mut().zip(old) {
                *c = damping * *c + (1.0 - damping) * o;
            }
        }
        if row_objective(&logits, &cand) < row_objective(&logits, old) {
            continue;
        }
        let mut changed = false;
        for k in 0..q {
            delta[k] = cand[k] - old[k];
            changed |= delta[k] != 0.0;
            max_change = max_change.max(delta[k].abs());
        }
        if changed {
            field.update(nb, i, &delta);
            on_change(i, &delta);
            tau.row_mut(i).copy_from_slice(&cand);
        }
    }
    max_change
}

/// Outcome of a VE step.
#[derive(Debug, Clone)]
pub struct VeOutcome {
    pub state: VariationalState,
    pub sweeps: usize,
    pub converged: bool,
}

struct VeInternal {
    state: VariationalState,
    sweeps: usize,
    converged: bool,
    moments_ind: PairMoments,
    moments_org: PairMoments,
}

fn ve_internal(
    net: &MultilevelNetwork,
    nbs: &(Neighbors, Neighbors),
    params: &ModelParams,
    state: VariationalState,
    opts: &FitOptions,
) -> VeInternal {
    let VariationalState { mut tau_ind, mut tau_org } = state;
    let (qi, qo) = (tau_ind.cols(), tau_org.cols());
    let logs_ind = AlphaLogs::new(&params.alpha_ind);
    let logs_org = AlphaLogs::new(&params.alpha_org);
    let ln_gamma: Vec<f64> = params.gamma.as_slice().iter().map(|&g| safe_ln(g)).collect();
    let ln_pi: Vec<f64> = params.pi_org.iter().map(|&p| safe_ln(p)).collect();
    let (nb_ind, nb_org) = nbs;
    let mut field_ind = LevelField::build(nb_ind, &tau_ind);
    let mut field_org = LevelField::build(nb_org, &tau_org);
    let org_of = net.org_of();
    // Sum of member memberships for each organization.
    let mut member_sum = vec![0.0; net.n_org() * qi];
    for (i, &j) in org_of.iter().enumerate() {
        for (a, &t) in member_sum[j * qi..(j + 1) * qi].iter_mut().zip(tau_ind.row(i)) {
            *a += t;
        }
    }
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.max_fixed_point_sweeps {
        sweeps += 1;
        let c_org = sweep(
            nb_org,
            &mut field_org,
            &mut tau_org,
            &logs_org,
            opts.damping,
            |j, logits| {
                let s = &member_sum[j * qi..(j + 1) * qi];
                for (l, v) in logits.iter_mut().enumerate() {
                    *v += ln_pi[l] + (0..qi).map(|k| s[k] * ln_gamma[k * qo + l]).sum::<f64>();
                }
            },
            |_, _| {},
        );
        let tau_org_ref = &tau_org;
        let c_ind = sweep(
            nb_ind,
            &mut field_ind,
            &mut tau_ind,
            &logs_ind,
            opts.damping,
            |i, logits| {
                let t = tau_org_ref.row(org_of[i]);
                for (k, v) in logits.iter_mut().enumerate() {
                    *v += (0..qo).map(|l| t[l] * ln_gamma[k * qo + l]).sum::<f64>();
                }
            },
            |i, delta| {
                let j = org_of[i];
                for (a, &d) in member_sum[j * qi..(j + 1) * qi].iter_mut().zip(delta) {
                    *a += d;
                }
            },
        );
        if c_org.max(c_ind) < opts.fixed_point_tolerance {
            converged = true;
            break;
        }
    }
    let moments_ind = level_moments(nb_ind, &tau_ind);
    let moments_org = level_moments(nb_org, &tau_org);
    VeInternal {
        state: VariationalState { tau_ind, tau_org },
        sweeps,
        converged,
        moments_ind,
        moments_org,
    }
}

/// Fixed-point VE step for the multilevel model.
pub fn ve_step(net: &MultilevelNetwork, params: &ModelParams, state: &VariationalState, opts: &FitOptions) -> VeOutcome {
    let nbs = (Neighbors::new(net.ind()), Neighbors::new(net.org()));
    let out = ve_internal(net, &nbs, params, state.clone(), opts);
    VeOutcome {
        state: out.state,
        sweeps: out.sweeps,
        converged: out.converged,
    }
}

fn block_mass(tau: &Matrix) -> Vec<f64> {
    (0..tau.cols()).map(|k| tau.col_sum(k)).collect()
}

/// Closed-form `alpha` from block-pair moments; symmetrized when undirected.
fn alpha_from_moments(
    m: &PairMoments,
    directed: bool,
    density: f64,
    level: Level,
    warnings: &mut Vec<FitWarning>,
) -> Matrix {
    let q = m.edges.rows();
    let mut alpha = Matrix::zeros(q, q);
    for k in 0..q {
        for k2 in 0..q {
            let (e, o) = if directed {
                (m.edges[(k, k2)], m.edges[(k, k2)] + m.non_edges[(k, k2)])
            } else {
                let e = m.edges[(k, k2)] + m.edges[(k2, k)];
                (e, e + m.non_edges[(k, k2)] + m.non_edges[(k2, k)])
            };
            alpha[(k, k2)] = if o > 0.0 {
                clamp_prob(e / o)
            } else {
                note(warnings, FitWarning::DegenerateEstimate { level, block: k.min(k2) });
                clamp_prob(density)
            };
        }
    }
    alpha
}

fn report_empty(tau: &Matrix, level: Level, warnings: &mut Vec<FitWarning>) {
    for (k, &m) in block_mass(tau).iter().enumerate() {
        if m < EMPTY_BLOCK_MASS {
            note(warnings, FitWarning::EmptyBlock { level, block: k });
        }
    }
}

fn m_step_internal(
    net: &MultilevelNetwork,
    state: &VariationalState,
    moments_ind: &PairMoments,
    moments_org: &PairMoments,
    independent: bool,
    warnings: &mut Vec<FitWarning>,
) -> ModelParams {
    let (tau_ind, tau_org) = (&state.tau_ind, &state.tau_org);
    let (qi, qo) = (tau_ind.cols(), tau_org.cols());
    let n_org = tau_org.rows() as f64;
    let pi_org: Vec<f64> = if n_org > 0.0 {
        block_mass(tau_org).iter().map(|m| m / n_org).collect()
    } else {
        vec![1.0 / qo as f64; qo]
    };
    let mut gamma = Matrix::zeros(qi, qo);
    if independent {
        let n_ind = tau_ind.rows() as f64;
        let mass = block_mass(tau_ind);
        for k in 0..qi {
            let v = if n_ind > 0.0 { mass[k] / n_ind } else { 1.0 / qi as f64 };
            for l in 0..qo {
                gamma[(k, l)] = v;
            }
        }
    } else {
        let mut num = Matrix::zeros(qi, qo);
        let mut den = vec![0.0; qo];
        for (i, &j) in net.org_of().iter().enumerate() {
            let to = tau_org.row(j);
            for (l, &t) in to.iter().enumerate() {
                den[l] += t;
                for k in 0..qi {
                    num[(k, l)] += tau_ind[(i, k)] * t;
                }
            }
        }
        for l in 0..qo {
            if den[l] > 0.0 {
                let s: f64 = (0..qi).map(|k| num[(k, l)]).sum();
                for k in 0..qi {
                    gamma[(k, l)] = num[(k, l)] / s;
                }
            } else {
                note(warnings, FitWarning::DegenerateEstimate { level: Level::Org, block: l });
                for k in 0..qi {
                    gamma[(k, l)] = 1.0 / qi as f64;
                }
            }
        }
    }
    report_empty(tau_ind, Level::Ind, warnings);
    report_empty(tau_org, Level::Org, warnings);
    ModelParams {
        pi_org,
        gamma,
        alpha_ind: alpha_from_moments(moments_ind, net.ind().is_directed(), net.ind().density(), Level::Ind, warnings),
        alpha_org: alpha_from_moments(moments_org, net.org().is_directed(), net.org().density(), Level::Org, warnings),
        directed_ind: net.ind().is_directed(),
        directed_org: net.org().is_directed(),
    }
}

/// Closed-form M-step. With `independent_levels` the columns of `gamma`
/// are constrained equal. Returns the estimates and any warnings.
pub fn m_step(net: &MultilevelNetwork, state: &VariationalState, independent_levels: bool) -> (ModelParams, Vec<FitWarning>) {
    let mi = PairMoments::from_tau(net.ind(), &state.tau_ind);
    let mo = PairMoments::from_tau(net.org(), &state.tau_org);
    let mut warnings = Vec::new();
    let p = m_step_internal(net, state, &mi, &mo, independent_levels, &mut warnings);
    (p, warnings)
}

fn bound_from_moments(
    net: &MultilevelNetwork,
    params: &ModelParams,
    state: &VariationalState,
    mi: &PairMoments,
    mo: &PairMoments,
) -> f64 {
    expected_prior_term(&state.tau_org, &params.pi_org)
        + expected_membership_term(net.org_of(), &state.tau_ind, &state.tau_org, &params.gamma)
        + mi.level_term(&params.alpha_ind, params.directed_ind)
        + mo.level_term(&params.alpha_org, params.directed_org)
        + entropy(&state.tau_ind)
        + entropy(&state.tau_org)
}

/// Result of a multilevel fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    pub state: VariationalState,
    /// Final value of the variational bound.
    pub bound: f64,
    /// Bound after each outer iteration; the last entry is `bound`.
    pub bound_trace: Vec<f64>,
    pub map_assignments: Assignments,
    pub n_iterations: usize,
    pub converged: bool,
    /// Integrated classification likelihood at (`params`, MAP).
    pub icl: f64,
    /// Index of the starting point that produced this fit.
    pub restart: usize,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn q(&self) -> (usize, usize) {
        (self.params.q_ind(), self.params.q_org())
    }

    /// The multilevel model with equal `gamma` columns assembled from two
    /// single-level fits. Its bound is the sum of theirs.
    pub fn from_independent(net: &MultilevelNetwork, ind: &SbmFit, org: &SbmFit) -> Self {
        let (qi, qo) = (ind.params.q(), org.params.q());
        let mut gamma = Matrix::zeros(qi, qo);
        for k in 0..qi {
            for l in 0..qo {
                gamma[(k, l)] = ind.params.pi[k];
            }
        }
        let params = ModelParams {
            pi_org: org.params.pi.clone(),
            gamma,
            alpha_ind: ind.params.alpha.clone(),
            alpha_org: org.params.alpha.clone(),
            directed_ind: ind.params.directed,
            directed_org: org.params.directed,
        };
        let map_assignments = Assignments {
            z_ind: ind.map.clone(),
            z_org: org.map.clone(),
        };
        let bound = ind.bound + org.bound;
        let icl = icl_mlvsbm(net, &params, &map_assignments);
        let mut warnings = ind.warnings.clone();
        for w in &org.warnings {
            note(&mut warnings, w.clone());
        }
        Self {
            params,
            state: VariationalState {
                tau_ind: ind.tau.clone(),
                tau_org: org.tau.clone(),
            },
            bound,
            bound_trace: vec![bound],
            map_assignments,
            n_iterations: ind.n_iterations.max(org.n_iterations),
            converged: ind.converged && org.converged,
            icl,
            restart: 0,
            warnings,
        }
    }
}

/// Step-by-step variational EM from a given state, for callers that need
/// every iterate.
pub struct VemRunner<'a> {
    net: &'a MultilevelNetwork,
    opts: FitOptions,
    params: ModelParams,
    state: VariationalState,
    neighbors: (Neighbors, Neighbors),
    moments: (PairMoments, PairMoments),
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    warnings: Vec<FitWarning>,
}

impl<'a> VemRunner<'a> {
    pub fn new(net: &'a MultilevelNetwork, init: VariationalState, opts: &FitOptions) -> Result<Self> {
        opts.check()?;
        init.check(net)?;
        let neighbors = (Neighbors::new(net.ind()), Neighbors::new(net.org()));
        let mi = level_moments(&neighbors.0, &init.tau_ind);
        let mo = level_moments(&neighbors.1, &init.tau_org);
        let mut warnings = Vec::new();
        let params = m_step_internal(net, &init, &mi, &mo, opts.independent_levels, &mut warnings);
        let mut runner = Self {
            net,
            opts: opts.clone(),
            params,
            state: init,
            neighbors,
            moments: (mi, mo),
            trace: Vec::new(),
            iterations: 0,
            converged: false,
            warnings,
        };
        runner.ve_and_bound();
        Ok(runner)
    }

    fn ve_and_bound(&mut self) {
        let state = core::mem::replace(
            &mut self.state,
            VariationalState {
                tau_ind: Matrix::zeros(0, 0),
                tau_org: Matrix::zeros(0, 0),
            },
        );
        let ve = ve_internal(self.net, &self.neighbors, &self.params, state, &self.opts);
        if !ve.converged {
            note(&mut self.warnings, FitWarning::FixedPointCap);
        }
        self.state = ve.state;
        self.moments = (ve.moments_ind, ve.moments_org);
        let b = bound_from_moments(self.net, &self.params, &self.state, &self.moments.0, &self.moments.1);
        self.trace.push(b);
        self.iterations += 1;
    }

    /// Runs one more M-step + VE-step. Returns `false` once the loop has
    /// stopped (converged or at the iteration cap).
    pub fn step(&mut self) -> bool {
        if self.is_done() {
            return false;
        }
        self.params = m_step_internal(
            self.net,
            &self.state,
            &self.moments.0,
            &self.moments.1,
            self.opts.independent_levels,
            &mut self.warnings,
        );
        self.ve_and_bound();
        let n = self.trace.len();
        let (prev, cur) = (self.trace[n - 2], self.trace[n - 1]);
        let rel = (cur - prev) / prev.abs().max(f64::MIN_POSITIVE);
        if rel < self.opts.bound_rel_tolerance || !cur.is_finite() {
            self.converged = cur.is_finite();
        }
        !self.is_done()
    }

    pub fn is_done(&self) -> bool {
        self.converged || self.iterations >= self.opts.max_outer_iterations || !self.bound().is_finite()
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn state(&self) -> &VariationalState {
        &self.state
    }

    pub fn bound(&self) -> f64 {
        *self.trace.last().unwrap()
    }

    pub fn bound_trace(&self) -> &[f64] {
        &self.trace
    }

    /// Iterates to the end, then refreshes the parameters with a last M-step.
    pub fn finish(mut self) -> FitResult {
        while self.step() {}
        if !self.converged {
            note(&mut self.warnings, FitWarning::IterationCap);
        }
        self.params = m_step_internal(
            self.net,
            &self.state,
            &self.moments.0,
            &self.moments.1,
            self.opts.independent_levels,
            &mut self.warnings,
        );
        let b = bound_from_moments(self.net, &self.params, &self.state, &self.moments.0, &self.moments.1);
        self.trace.push(b);
        let map_assignments = self.state.map();
        let icl = icl_mlvsbm(self.net, &self.params, &map_assignments);
        FitResult {
            params: self.params,
            state: self.state,
            bound: b,
            bound_trace: self.trace,
            map_assignments,
            n_iterations: self.iterations,
            converged: self.converged,
            icl,
            restart: 0,
            warnings: self.warnings,
        }
    }
}

/// Full variational EM from one starting state.
pub fn fit_from(net: &MultilevelNetwork, init: VariationalState, opts: &FitOptions) -> Result<FitResult> {
    Ok(VemRunner::new(net, init, opts)?.finish())
}

/// Randomly relabels about [`RESTART_RELABEL_RATE`] of the nodes.
pub fn perturb_labels(z: &[usize], q: usize, seed: u64) -> Vec<usize> {
    let mut rng = Stream::new(seed);
    z.iter()
        .map(|&k| if rng.bernoulli(RESTART_RELABEL_RATE) { rng.below(q) } else { k })
        .collect()
}

fn check_level_fit(g: &LevelGraph, q: usize, level: Level) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be >= 1".into()));
    }
    if q > g.n() {
        return Err(Error::InvalidArgument(alloc::format!(
            "q = {q} exceeds the {} nodes of the {level} level",
            g.n()
        )));
    }
    if q > 1 && g.n_observed_dyads() == 0 {
        return Err(Error::DegenerateFit(alloc::format!(
            "the {level} level has no observed dyads, so {q} blocks cannot be estimated"
        )));
    }
    Ok(())
}

/// Starting labels of every restart for one level.
fn restart_labels(g: &LevelGraph, q: usize, opts: &FitOptions, salt: u64) -> Result<Vec<Vec<usize>>> {
    let runs = opts.n_random_restarts.max(1);
    let seed = derive_seed(opts.seed, salt);
    let base = match opts.init_method {
        InitMethod::Spectral => SpectralEmbedding::new(g).labels(q, seed)?,
        InitMethod::Hierarchical => crate::init::init_clustering(g, q, InitMethod::Hierarchical, seed)?,
        InitMethod::Random => {
            return Ok((0..runs).map(|r| random_labels(g.n(), q, derive_seed(seed, r as u64))).collect());
        }
        InitMethod::Given => {
            return Err(Error::InvalidArgument(
                "the `given` method needs starting memberships (use fit_from)".into(),
            ))
        }
    };
    let mut out = vec![base.clone()];
    out.extend((1..runs).map(|r| perturb_labels(&base, q, derive_seed(seed, r as u64))));
    Ok(out)
}

fn pick_best<T>(fits: Vec<T>, bound: impl Fn(&T) -> f64) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (r, f) in fits.into_iter().enumerate() {
        let b = bound(&f);
        if b.is_nan() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, cur)| b > bound(cur)) {
            best = Some((r, f));
        }
    }
    best
}

/// Fits the multilevel model with `q_ind` x `q_org` blocks from every
/// default starting point and keeps the best bound.
pub fn fit(net: &MultilevelNetwork, q_ind: usize, q_org: usize, opts: &FitOptions) -> Result<FitResult> {
    fit_with(net, q_ind, q_org, opts, &Sequential)
}

/// [`fit`] with restarts dispatched through `exec`.
pub fn fit_with<E: Executor>(
    net: &MultilevelNetwork,
    q_ind: usize,
    q_org: usize,
    opts: &FitOptions,
    exec: &E,
) -> Result<FitResult> {
    opts.check()?;
    check_level_fit(net.ind(), q_ind, Level::Ind)?;
    check_level_fit(net.org(), q_org, Level::Org)?;
    let inits_ind = restart_labels(net.ind(), q_ind, opts, 0)?;
    let inits_org = restart_labels(net.org(), q_org, opts, 1)?;
    let jobs: Vec<VariationalState> = inits_ind
        .iter()
        .zip(&inits_org)
        .map(|(zi, zo)| VariationalState::from_labels(zi, q_ind, zo, q_org))
        .collect();
    let fits = exec.map(jobs, |init| fit_from(net, init, opts));
    let fits: Vec<FitResult> = fits.into_iter().collect::<Result<_>>()?;
    let (r, mut best) = pick_best(fits, |f| f.bound)
        .ok_or_else(|| Error::DegenerateFit("every restart produced an undefined bound".into()))?;
    best.restart = r;
    Ok(best)
}

/// Result of a single-level SBM fit.
#[derive(Debug, Clone)]
pub struct SbmFit {
    pub params: SbmParams,
    pub tau: Matrix,
    pub bound: f64,
    pub bound_trace: Vec<f64>,
    pub map: Vec<usize>,
    pub n_iterations: usize,
    pub converged: bool,
    pub icl: f64,
    pub restart: usize,
    pub warnings: Vec<FitWarning>,
}

fn sbm_m_step(g: &LevelGraph, tau: &Matrix, m: &PairMoments, level: Level, warnings: &mut Vec<FitWarning>) -> SbmParams {
    let n = tau.rows() as f64;
    let q = tau.cols();
    report_empty(tau, level, warnings);
    SbmParams {
        pi: if n > 0.0 {
            block_mass(tau).iter().map(|m| m / n).collect()
        } else {
            vec![1.0 / q as f64; q]
        },
        alpha: alpha_from_moments(m, g.is_directed(), g.density(), level, warnings),
        directed: g.is_directed(),
    }
}

fn sbm_ve(nb: &Neighbors, params: &SbmParams, tau: &mut Matrix, opts: &FitOptions) -> (bool, PairMoments) {
    let logs = AlphaLogs::new(&params.alpha);
    let ln_pi: Vec<f64> = params.pi.iter().map(|&p| safe_ln(p)).collect();
    let mut field = LevelField::build(nb, tau);
    let mut converged = false;
    for _ in 0..opts.max_fixed_point_sweeps {
        let c = sweep(
            nb,
            &mut field,
            tau,
            &logs,
            opts.damping,
            |_, logits| logits.iter_mut().zip(&ln_pi).for_each(|(v, &p)| *v += p),
            |_, _| {},
        );
        if c < opts.fixed_point_tolerance {
            converged = true;
            break;
        }
    }
    (converged, level_moments(nb, tau))
}

/// Fixed-point VE step of a single-level SBM.
pub fn sbm_ve_step(g: &LevelGraph, params: &SbmParams, tau: &Matrix, opts: &FitOptions) -> (Matrix, bool) {
    let mut t = tau.clone();
    let (c, _) = sbm_ve(&Neighbors::new(g), params, &mut t, opts);
    (t, c)
}

/// Closed-form M-step of a single-level SBM.
pub fn sbm_m_step_params(g: &LevelGraph, tau: &Matrix) -> SbmParams {
    let m = PairMoments::from_tau(g, tau);
    sbm_m_step(g, tau, &m, Level::Ind, &mut Vec::new())
}

fn sbm_bound(g: &LevelGraph, params: &SbmParams, tau: &Matrix, m: &PairMoments) -> f64 {
    expected_prior_term(tau, &params.pi) + m.level_term(&params.alpha, g.is_directed()) + entropy(tau)
}

/// Variational EM of a single-level SBM from one starting `tau`. `level`
/// only labels warnings.
pub fn fit_sbm_from(g: &LevelGraph, init: Matrix, opts: &FitOptions, level: Level) -> Result<SbmFit> {
    opts.check()?;
    if init.rows() != g.n() || init.cols() == 0 {
        return Err(Error::DimensionMismatch("tau does not match the graph".into()));
    }
    let mut tau = init;
    let mut warnings = Vec::new();
    let nb = Neighbors::new(g);
    let mut moments = level_moments(&nb, &tau);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let params = sbm_m_step(g, &tau, &moments, level, &mut warnings);
        let (ve_conv, m) = sbm_ve(&nb, &params, &mut tau, opts);
        if !ve_conv {
            note(&mut warnings, FitWarning::FixedPointCap);
        }
        moments = m;
        let b = sbm_bound(g, &params, &tau, &moments);
        iterations += 1;
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if (b - prev) / prev.abs().max(f64::MIN_POSITIVE) < opts.bound_rel_tolerance {
                converged = true;
            }
        }
        trace.push(b);
        if converged || !b.is_finite() || iterations >= opts.max_outer_iterations {
            break;
        }
    }
    if !converged {
        note(&mut warnings, FitWarning::IterationCap);
    }
    let params = sbm_m_step(g, &tau, &moments, level, &mut warnings);
    let bound = sbm_bound(g, &params, &tau, &moments);
    trace.push(bound);
    let map = tau.row_argmax();
    let icl = icl_sbm(g, &params, &map);
    Ok(SbmFit {
        params,
        tau,
        bound,
        bound_trace: trace,
        map,
        n_iterations: iterations,
        converged,
        icl,
        restart: 0,
        warnings,
    })
}

/// Fits a single-level SBM with `q` blocks from every default starting
/// point and keeps the best bound.
pub fn fit_sbm(g: &LevelGraph, q: usize, opts: &FitOptions) -> Result<SbmFit> {
    fit_sbm_with(g, q, opts, &Sequential)
}

pub fn fit_sbm_with<E: Executor>(g: &LevelGraph, q: usize, opts: &FitOptions, exec: &E) -> Result<SbmFit> {
    opts.check()?;
    check_level_fit(g, q, Level::Ind)?;
    let inits = restart_labels(g, q, opts, 0)?;
    let fits = exec.map(inits, |z| fit_sbm_from(g, one_hot(&z, q), opts, Level::Ind));
    let fits: Vec<SbmFit> = fits.into_iter().collect::<Result<_>>()?;
    let (r, mut best) = pick_best(fits, |f| f.bound)
        .ok_or_else(|| Error::DegenerateFit("every restart produced an undefined bound".into()))?;
    best.restart = r;
    Ok(best)
}
