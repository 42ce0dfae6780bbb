//! ICL model selection: penalties, ICL of fitted models, split/merge
//! proposals and the stepwise search over `(q_ind, q_org)`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::init::{connection_profiles, ward_labels, SpectralEmbedding};
use crate::likelihood::{complete_log_likelihood, sbm_complete_log_likelihood};
use crate::math::ln;
use crate::model::{Assignments, ModelParams, SbmParams};
use crate::network::{Level, LevelGraph, MultilevelNetwork};
use crate::vem::{fit_from, fit_sbm_from, fit_with, one_hot, FitOptions, FitResult, SbmFit, VariationalState};

/// Penalty of the connection parameters of one level with `q` blocks.
pub fn alpha_penalty(n: usize, q: usize, directed: bool) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let pairs = (n * (n - 1)) as f64;
    let q = q as f64;
    if directed {
        0.5 * q * q * ln(pairs)
    } else {
        0.5 * (q * (q + 1.0) / 2.0) * ln(pairs / 2.0)
    }
}

/// ICL penalty of a single-level SBM.
pub fn penalty_sbm(n: usize, q: usize, directed: bool) -> f64 {
    alpha_penalty(n, q, directed) + proportion_penalty(n, q)
}

fn proportion_penalty(n: usize, q: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (q as f64 - 1.0) / 2.0 * ln(n as f64)
    }
}

/// ICL penalty of the multilevel model.
pub fn penalty_mlvsbm(q_ind: usize, q_org: usize, n_ind: usize, n_org: usize, directed_ind: bool, directed_org: bool) -> f64 {
    alpha_penalty(n_ind, q_ind, directed_ind)
        + q_org as f64 * proportion_penalty(n_ind, q_ind)
        + alpha_penalty(n_org, q_org, directed_org)
        + proportion_penalty(n_org, q_org)
}

/// ICL of a single-level SBM at parameters `params` and hard labels `z`.
pub fn icl_sbm(g: &LevelGraph, params: &SbmParams, z: &[usize]) -> f64 {
    sbm_complete_log_likelihood(g, params, z) - penalty_sbm(g.n(), params.q(), g.is_directed())
}

/// ICL of the multilevel model at parameters `params` and hard labels `z`.
///
/// With a single block on either level the model factorizes into two
/// independent SBMs; the value is then computed as the sum of the two
/// single-level ICLs so that both views agree exactly.
pub fn icl_mlvsbm(net: &MultilevelNetwork, params: &ModelParams, z: &Assignments) -> f64 {
    let (qi, qo) = (params.q_ind(), params.q_org());
    if qi == 1 || qo == 1 {
        let (ind, org) = factor_views(params);
        return icl_sbm(net.ind(), &ind, &z.z_ind) + icl_sbm(net.org(), &org, &z.z_org);
    }
    let ll = complete_log_likelihood(net, params, z).unwrap_or(f64::NEG_INFINITY);
    ll - penalty_mlvsbm(qi, qo, net.n_ind(), net.n_org(), params.directed_ind, params.directed_org)
}

/// The two single-level SBMs of a model with a single block on a level.
fn factor_views(params: &ModelParams) -> (SbmParams, SbmParams) {
    let pi_ind = if params.q_org() == 1 {
        (0..params.q_ind()).map(|k| params.gamma[(k, 0)]).collect()
    } else {
        vec![1.0]
    };
    (
        SbmParams {
            pi: pi_ind,
            alpha: params.alpha_ind.clone(),
            directed: params.directed_ind,
        },
        SbmParams {
            pi: params.pi_org.clone(),
            alpha: params.alpha_org.clone(),
            directed: params.directed_org,
        },
    )
}

/// Splits block `block` of labels `z` (with `q` blocks) in two by Ward
/// clustering of its members' connection profiles. Members in the cluster
/// of the first member keep `block`; the others get label `q`. Returns
/// `None` when the block has fewer than two members.
pub fn split_labels(g: &LevelGraph, z: &[usize], q: usize, block: usize) -> Option<Vec<usize>> {
    let members: Vec<usize> = (0..z.len()).filter(|&i| z[i] == block).collect();
    if members.len() < 2 {
        return None;
    }
    let profiles = connection_profiles(g, Some(&members));
    let halves = ward_labels(&profiles, members.len(), 2);
    let mut out = z.to_vec();
    for (&i, &h) in members.iter().zip(&halves) {
        if h == 1 {
            out[i] = q;
        }
    }
    Some(out)
}

/// Relabels block `b` as `a` and closes the gap left by `b`.
pub fn merge_labels(z: &[usize], a: usize, b: usize) -> Result<Vec<usize>> {
    if a == b {
        return Err(Error::InvalidArgument("cannot merge a block with itself".into()));
    }
    Ok(z.iter()
        .map(|&k| {
            let k = if k == b { a } else { k };
            if k > b {
                k - 1
            } else {
                k
            }
        })
        .collect())
}

/// Split proposal on the MAP labels of `fit`.
pub fn propose_split(net: &MultilevelNetwork, fit: &FitResult, level: Level, block: usize) -> Option<Vec<usize>> {
    let (z, q) = map_of(fit, level);
    split_labels(net.level(level), z, q, block)
}

/// Merge proposal on the MAP labels of `fit`.
pub fn propose_merge(fit: &FitResult, level: Level, a: usize, b: usize) -> Result<Vec<usize>> {
    merge_labels(map_of(fit, level).0, a, b)
}

fn map_of(fit: &FitResult, level: Level) -> (&[usize], usize) {
    match level {
        Level::Ind => (&fit.map_assignments.z_ind, fit.params.q_ind()),
        Level::Org => (&fit.map_assignments.z_org, fit.params.q_org()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectOptions {
    /// Largest block count tried on either level.
    pub q_max: usize,
    pub fit: FitOptions,
    /// Upper bound on search rounds.
    pub max_rounds: usize,
    /// Fit every `(q_ind, q_org)` up to `q_max` instead of searching.
    /// Meant for tiny instances in tests.
    pub exhaustive: bool,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            q_max: 10,
            fit: FitOptions::default(),
            max_rounds: 100,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Dependent,
    Independent,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Dependent => "dependent",
            Verdict::Independent => "independent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    /// Starting model built from the single-level fits.
    Start,
    Split { level: Level, block: usize },
    Merge { level: Level, a: usize, b: usize },
    /// Grid point of an exhaustive search.
    Grid,
    /// Fit with the full restart budget at the final block counts.
    Refit,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Start => write!(f, "start"),
            Move::Split { level, block } => write!(f, "split {level} {block}"),
            Move::Merge { level, a, b } => write!(f, "merge {level} {a} {b}"),
            Move::Grid => write!(f, "grid"),
            Move::Refit => write!(f, "refit"),
        }
    }
}

/// One fitted candidate of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub round: usize,
    pub mv: Move,
    pub q: (usize, usize),
    /// `None` when the fit failed.
    pub icl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectWarning {
    /// The single-level ICL peaked at the largest block count tried.
    CapReached { level: Level, q_max: usize },
}

impl fmt::Display for SelectWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectWarning::CapReached { level, q_max } => {
                write!(f, "{level} level ICL is largest at the cap q = {q_max}")
            }
        }
    }
}

/// Single-level fits for `q = 1..=q_max` and their ICL values.
#[derive(Debug, Clone)]
pub struct SbmPath {
    pub fits: Vec<SbmFit>,
    /// `icl[q - 1]`; may be raised by multilevel fits that factorize.
    pub icl: Vec<f64>,
}

impl SbmPath {
    /// Block count with the largest ICL, ties to the smaller count.
    pub fn best_q(&self) -> usize {
        argmax(&self.icl) + 1
    }

    pub fn best_icl(&self) -> f64 {
        self.icl[argmax(&self.icl)]
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// Multilevel fit with the largest ICL found.
    pub best_fit: FitResult,
    pub best_q: (usize, usize),
    /// Largest ICL found for every fitted `(q_ind, q_org)`.
    pub explored: BTreeMap<(usize, usize), f64>,
    /// Block counts chosen by the two independent single-level SBMs.
    pub independent_q: (usize, usize),
    /// Sum of the two best single-level ICLs.
    pub icl_independent: f64,
    pub verdict: Verdict,
    pub search_trace: Vec<TraceEntry>,
    pub sbm_icl_ind: Vec<f64>,
    pub sbm_icl_org: Vec<f64>,
    pub warnings: Vec<SelectWarning>,
}

impl SelectionResult {
    /// ICL of the best multilevel fit.
    pub fn icl_mlvsbm(&self) -> f64 {
        self.best_fit.icl
    }

    /// Block counts of the preferred model: `independent_q` when the
    /// verdict is independent, `best_q` otherwise.
    pub fn selected_q(&self) -> (usize, usize) {
        match self.verdict {
            Verdict::Independent => self.independent_q,
            Verdict::Dependent => self.best_q,
        }
    }
}

/// Single-level SBM fits for every `q` in `1..=min(q_max, n)`, each from a
/// spectral and a hierarchical start; the better bound is kept per `q`.
pub fn select_sbm<E: Executor>(g: &LevelGraph, level: Level, q_max: usize, opts: &FitOptions, exec: &E) -> Result<SbmPath> {
    opts.check()?;
    let top = q_max.min(g.n()).max(1);
    let embedding = SpectralEmbedding::new(g);
    let profiles = connection_profiles(g, None);
    let mut jobs = Vec::new();
    for q in 1..=top {
        let spectral = embedding.labels(q, crate::rng::derive_seed(opts.seed, q as u64))?;
        let hierarchical = ward_labels(&profiles, g.n(), q);
        jobs.push((q, spectral));
        if q > 1 {
            jobs.push((q, hierarchical));
        }
    }
    let fits = exec.map(jobs, |(q, z)| fit_sbm_from(g, one_hot(&z, q), opts, level));
    let mut best: Vec<Option<SbmFit>> = vec![None; top];
    for f in fits {
        let f = f?;
        let slot = &mut best[f.params.q() - 1];
        if slot.as_ref().is_none_or(|cur| f.bound > cur.bound) {
            *slot = Some(f);
        }
    }
    let fits: Vec<SbmFit> = best.into_iter().map(|f| f.unwrap()).collect();
    let icl = fits.iter().map(|f| f.icl).collect();
    Ok(SbmPath { fits, icl })
}

/// Stepwise ICL search with the default sequential executor.
pub fn select(net: &MultilevelNetwork, opts: &SelectOptions) -> Result<SelectionResult> {
    select_with(net, opts, &Sequential)
}

struct Candidate {
    mv: Move,
    init: VariationalState,
}

/// Stepwise ICL search: independent SBMs per level first, then moves to
/// the best split or merge neighbor while the ICL increases.
pub fn select_with<E: Executor>(net: &MultilevelNetwork, opts: &SelectOptions, exec: &E) -> Result<SelectionResult> {
    if opts.q_max == 0 {
        return Err(Error::InvalidArgument("q_max must be >= 1".into()));
    }
    let fit_opts = &opts.fit;
    let mut path_ind = select_sbm(net.ind(), Level::Ind, opts.q_max, fit_opts, exec)?;
    let mut path_org = select_sbm(net.org(), Level::Org, opts.q_max, fit_opts, exec)?;
    let mut warnings = Vec::new();
    for (path, level, n) in [(&path_ind, Level::Ind, net.n_ind()), (&path_org, Level::Org, net.n_org())] {
        let cap = opts.q_max.min(n);
        if path.best_q() == cap && cap > 1 {
            warnings.push(SelectWarning::CapReached { level, q_max: cap });
        }
    }
    let mut explored: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut trace = Vec::new();

    let record = |explored: &mut BTreeMap<(usize, usize), f64>,
                  path_ind: &mut SbmPath,
                  path_org: &mut SbmPath,
                  f: &FitResult| {
        let q = f.q();
        let e = explored.entry(q).or_insert(f64::NEG_INFINITY);
        if f.icl > *e {
            *e = f.icl;
        }
        // A multilevel fit with one block on a level is a pair of SBMs:
        // its parts also count as single-level candidates.
        if q.0 == 1 || q.1 == 1 {
            let (ind, org) = factor_views(&f.params);
            let a = icl_sbm(net.ind(), &ind, &f.map_assignments.z_ind);
            let b = icl_sbm(net.org(), &org, &f.map_assignments.z_org);
            if q.0 <= path_ind.icl.len() && a > path_ind.icl[q.0 - 1] {
                path_ind.icl[q.0 - 1] = a;
            }
            if q.1 <= path_org.icl.len() && b > path_org.icl[q.1 - 1] {
                path_org.icl[q.1 - 1] = b;
            }
        }
    };

    let mut current = if opts.exhaustive {
        let mut grid = Vec::new();
        for qi in 1..=opts.q_max.min(net.n_ind()) {
            for qo in 1..=opts.q_max.min(net.n_org()) {
                grid.push((qi, qo));
            }
        }
        let mut best: Option<FitResult> = None;
        for (qi, qo) in grid {
            match fit_with(net, qi, qo, fit_opts, exec) {
                Ok(f) => {
                    trace.push(TraceEntry {
                        round: 0,
                        mv: Move::Grid,
                        q: (qi, qo),
                        icl: Some(f.icl),
                    });
                    record(&mut explored, &mut path_ind, &mut path_org, &f);
                    if best.as_ref().is_none_or(|b| f.icl > b.icl) {
                        best = Some(f);
                    }
                }
                Err(e) if e.is_numerical() => trace.push(TraceEntry {
                    round: 0,
                    mv: Move::Grid,
                    q: (qi, qo),
                    icl: None,
                }),
                Err(e) => return Err(e),
            }
        }
        best.ok_or_else(|| Error::DegenerateFit("no grid point could be fitted".into()))?
    } else {
        let (qi, qo) = (path_ind.best_q(), path_org.best_q());
        let (si, so) = (&path_ind.fits[qi - 1], &path_org.fits[qo - 1]);
        let start = if qi == 1 || qo == 1 {
            FitResult::from_independent(net, si, so)
        } else {
            let init = VariationalState {
                tau_ind: si.tau.clone(),
                tau_org: so.tau.clone(),
            };
            fit_from(net, init, fit_opts)?
        };
        trace.push(TraceEntry {
            round: 0,
            mv: Move::Start,
            q: start.q(),
            icl: Some(start.icl),
        });
        record(&mut explored, &mut path_ind, &mut path_org, &start);
        start
    };

    if !opts.exhaustive {
        for round in 1..=opts.max_rounds {
            let candidates = neighbors(net, &current, opts.q_max);
            if candidates.is_empty() {
                break;
            }
            let moves: Vec<Move> = candidates.iter().map(|c| c.mv.clone()).collect();
            let fits = exec.map(candidates, |c| fit_from(net, c.init, fit_opts));
            let mut best: Option<FitResult> = None;
            for (mv, f) in moves.into_iter().zip(fits) {
                match f {
                    Ok(f) => {
                        trace.push(TraceEntry {
                            round,
                            mv,
                            q: f.q(),
                            icl: Some(f.icl),
                        });
                        record(&mut explored, &mut path_ind, &mut path_org, &f);
                        if best.as_ref().is_none_or(|b| f.icl > b.icl) {
                            best = Some(f);
                        }
                    }
                    Err(e) if e.is_numerical() => trace.push(TraceEntry {
                        round,
                        mv,
                        q: (0, 0),
                        icl: None,
                    }),
                    Err(e) => return Err(e),
                }
            }
            match best {
                Some(b) if b.icl > current.icl => current = b,
                _ => break,
            }
        }
        // Search fits start from one proposal each; a fresh fit with all
        // restarts at the chosen counts can still land higher.
        let (qi, qo) = current.q();
        match fit_with(net, qi, qo, fit_opts, exec) {
            Ok(f) => {
                trace.push(TraceEntry {
                    round: trace.last().map_or(0, |t| t.round) + 1,
                    mv: Move::Refit,
                    q: f.q(),
                    icl: Some(f.icl),
                });
                record(&mut explored, &mut path_ind, &mut path_org, &f);
                if f.icl > current.icl {
                    current = f;
                }
            }
            Err(e) if e.is_numerical() => {}
            Err(e) => return Err(e),
        }
    }

    let independent_q = (path_ind.best_q(), path_org.best_q());
    let icl_independent = path_ind.best_icl() + path_org.best_icl();
    let best_ml = explored.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let verdict = if icl_independent >= best_ml {
        Verdict::Independent
    } else {
        Verdict::Dependent
    };
    Ok(SelectionResult {
        best_q: current.q(),
        best_fit: current,
        explored,
        independent_q,
        icl_independent,
        verdict,
        search_trace: trace,
        sbm_icl_ind: path_ind.icl,
        sbm_icl_org: path_org.icl,
        warnings,
    })
}

/// Split and merge neighbors of `fit` on each level, in a fixed order:
/// individual level first, splits before merges.
fn neighbors(net: &MultilevelNetwork, fit: &FitResult, q_max: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    for level in [Level::Ind, Level::Org] {
        let (z, q) = map_of(fit, level);
        let n = net.level(level).n();
        let with_level = |labels: Vec<usize>, q_new: usize| -> VariationalState {
            let tau = one_hot(&labels, q_new);
            match level {
                Level::Ind => VariationalState {
                    tau_ind: tau,
                    tau_org: fit.state.tau_org.clone(),
                },
                Level::Org => VariationalState {
                    tau_ind: fit.state.tau_ind.clone(),
                    tau_org: tau,
                },
            }
        };
        if q < q_max.min(n) {
            for block in 0..q {
                if let Some(labels) = split_labels(net.level(level), z, q, block) {
                    out.push(Candidate {
                        mv: Move::Split { level, block },
                        init: with_level(labels, q + 1),
                    });
                }
            }
        }
        if q >= 2 {
            for a in 0..q {
                for b in (a + 1)..q {
                    let labels = merge_labels(z, a, b).expect("distinct blocks");
                    out.push(Candidate {
                        mv: Move::Merge { level, a, b },
                        init: with_level(labels, q - 1),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_gain_matches_cross_term() {
        for &(qi, qo, ni, no) in &[(3, 3, 60, 20), (2, 5, 100, 7), (1, 4, 9, 30)] {
            let gain = penalty_mlvsbm(qi, qo, ni, no, false, false) - penalty_sbm(ni, qi, false) - penalty_sbm(no, qo, false);
            let want = 0.5 * (qo as f64 - 1.0) * (qi as f64 - 1.0) * (ni as f64).ln();
            assert!((gain - want).abs() < 1e-10);
        }
    }

    #[test]
    fn merging_the_only_two_blocks() {
        assert_eq!(merge_labels(&[0, 1, 1, 0], 0, 1).unwrap(), vec![0; 4]);
        assert_eq!(merge_labels(&[0, 1, 2, 3], 1, 2).unwrap(), vec![0, 1, 1, 2]);
        assert!(merge_labels(&[0, 1], 1, 1).is_err());
    }

    #[test]
    fn split_separates_two_cliques() {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((8, 0));
        let g = LevelGraph::from_edges(9, false, &edges).unwrap();
        let z = [0, 0, 0, 0, 0, 0, 0, 0, 1];
        let s = split_labels(&g, &z, 2, 0).unwrap();
        assert_eq!(s, vec![0, 0, 0, 0, 2, 2, 2, 2, 1]);
        assert!(split_labels(&g, &z, 2, 1).is_none());
    }
}
