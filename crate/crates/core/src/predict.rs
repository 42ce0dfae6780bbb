//! Dyad prediction from a fit, AUC and ARI, and the masked-dyad
//! prediction experiment.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::math::sqrt;
use crate::matrix::Matrix;
use crate::network::{apply_mask, Level, LevelGraph, MaskMode, MaskSelection, MultilevelNetwork};
use crate::rng::derive_seed;
use crate::select::{select, select_sbm, SelectOptions};
use crate::vem::{fit, fit_sbm, FitOptions, FitResult};

/// Which dyads to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSet {
    /// Unobserved off-diagonal dyads.
    Masked,
    /// Observed dyads without an edge.
    ZeroDyads,
    AllOffDiagonal,
}

impl TargetSet {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetSet::Masked => "masked",
            TargetSet::ZeroDyads => "zero-dyads",
            TargetSet::AllOffDiagonal => "all",
        }
    }
}

/// Edge probabilities of a set of dyads (each undirected dyad once, `i < j`).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionScores {
    pub level: Level,
    pub target: TargetSet,
    pub dyads: Vec<(usize, usize)>,
    pub scores: Vec<f64>,
}

/// `tau_i^T alpha tau_j` for every dyad.
pub fn score_dyads(tau: &Matrix, alpha: &Matrix, dyads: &[(usize, usize)]) -> Vec<f64> {
    let q = tau.cols();
    // Row i of tau * alpha, computed lazily would save little: precompute.
    let ta = tau.matmul(alpha);
    dyads
        .iter()
        .map(|&(i, j)| {
            let s: f64 = (0..q).map(|k| ta[(i, k)] * tau[(j, k)]).sum();
            s.clamp(0.0, 1.0)
        })
        .collect()
}

/// Dyads of `g` selected by `target`.
pub fn target_dyads(g: &LevelGraph, target: TargetSet) -> Vec<(usize, usize)> {
    match target {
        TargetSet::Masked => g.masked_dyads().collect(),
        TargetSet::ZeroDyads => g.observed_dyads().filter(|&(i, j)| !g.is_edge(i, j)).collect(),
        TargetSet::AllOffDiagonal => g.dyads().collect(),
    }
}

/// Predicted edge probabilities on one level of the network `fit` was
/// computed on.
pub fn dyad_probabilities(net: &MultilevelNetwork, fit: &FitResult, level: Level, target: TargetSet) -> Result<PredictionScores> {
    let (tau, alpha) = match level {
        Level::Ind => (&fit.state.tau_ind, &fit.params.alpha_ind),
        Level::Org => (&fit.state.tau_org, &fit.params.alpha_org),
    };
    let g = net.level(level);
    if tau.rows() != g.n() {
        return Err(Error::DimensionMismatch("fit does not match the network".into()));
    }
    let dyads = target_dyads(g, target);
    if dyads.is_empty() {
        return Err(Error::InvalidArgument(alloc::format!(
            "no {} dyads to score on the {level} level",
            target.as_str()
        )));
    }
    let scores = score_dyads(tau, alpha, &dyads);
    Ok(PredictionScores {
        level,
        target,
        dyads,
        scores,
    })
}

/// Area under the ROC curve: probability that a positive outscores a
/// negative, ties counting one half (midranks).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch("scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("AUC needs at least one positive and one negative".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start..end (0-based) share the midrank.
        let midrank = (start + end + 1) as f64 / 2.0;
        rank_sum += midrank * order[start..end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Adjusted Rand index (Hubert and Arabie). Two single-cluster partitions
/// give 1.
pub fn ari(z1: &[usize], z2: &[usize]) -> Result<f64> {
    if z1.len() != z2.len() {
        return Err(Error::DimensionMismatch("assignments differ in length".into()));
    }
    let n = z1.len();
    if n < 2 {
        return Err(Error::InvalidArgument("ARI needs at least two items".into()));
    }
    let r = z1.iter().max().unwrap() + 1;
    let c = z2.iter().max().unwrap() + 1;
    let mut table = vec![0u64; r * c];
    for (&a, &b) in z1.iter().zip(z2) {
        table[a * c + b] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&x| choose2(x)).sum();
    let rows: f64 = (0..r).map(|a| choose2(table[a * c..(a + 1) * c].iter().sum())).sum();
    let cols: f64 = (0..c).map(|b| choose2((0..r).map(|a| table[a * c + b]).sum())).sum();
    let total = choose2(n as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictModel {
    Mlvsbm,
    /// Single-level SBM on the predicted level only.
    Sbm,
}

impl PredictModel {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictModel::Mlvsbm => "mlvsbm",
            PredictModel::Sbm => "sbm",
        }
    }
}

/// How each masked network is refitted.
#[derive(Debug, Clone, PartialEq)]
pub enum Refit {
    /// Full ICL selection for each model.
    Select,
    /// Fixed block counts; the SBM uses the count of the predicted level.
    Fixed { q_ind: usize, q_org: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub fractions: Vec<f64>,
    pub mode: MaskMode,
    pub level: Level,
    pub models: Vec<PredictModel>,
    pub repeats: usize,
    pub seed: u64,
    pub refit: Refit,
    pub select: SelectOptions,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            fractions: vec![0.1, 0.2, 0.3],
            mode: MaskMode::Dyads,
            level: Level::Ind,
            models: vec![PredictModel::Mlvsbm, PredictModel::Sbm],
            repeats: 10,
            seed: 0,
            refit: Refit::Select,
            select: SelectOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucRecord {
    pub fraction: f64,
    pub mode: MaskMode,
    pub model: PredictModel,
    pub repeat: usize,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucSummary {
    pub fraction: f64,
    pub mode: MaskMode,
    pub model: PredictModel,
    pub mean_auc: f64,
    /// Standard deviation over repeats divided by the square root of their
    /// number.
    pub stderr: f64,
    pub n: usize,
}

/// Scores of the held-out entries of one masked network under one model.
fn model_scores(
    masked: &MultilevelNetwork,
    level: Level,
    model: PredictModel,
    refit: &Refit,
    opts: &SelectOptions,
    dyads: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let fit_opts: &FitOptions = &opts.fit;
    match model {
        PredictModel::Mlvsbm => {
            let f = match refit {
                Refit::Select => select(masked, opts)?.best_fit,
                Refit::Fixed { q_ind, q_org } => fit(masked, *q_ind, *q_org, fit_opts)?,
            };
            let (tau, alpha) = match level {
                Level::Ind => (&f.state.tau_ind, &f.params.alpha_ind),
                Level::Org => (&f.state.tau_org, &f.params.alpha_org),
            };
            Ok(score_dyads(tau, alpha, dyads))
        }
        PredictModel::Sbm => {
            let g = masked.level(level);
            let f = match refit {
                Refit::Select => {
                    let path = select_sbm(g, level, opts.q_max, fit_opts, &Sequential)?;
                    let q = path.best_q();
                    path.fits.into_iter().nth(q - 1).unwrap()
                }
                Refit::Fixed { q_ind, q_org } => {
                    let q = if level == Level::Ind { *q_ind } else { *q_org };
                    fit_sbm(g, q, fit_opts)?
                }
            };
            Ok(score_dyads(&f.tau, &f.params.alpha, dyads))
        }
    }
}

/// Hides a fraction of dyads (or removes a fraction of links), refits every
/// model from scratch on the masked network and scores the held-out
/// entries by AUC. All models see the same masked network in a given
/// (repeat, fraction) cell. A zero fraction has nothing to score and is
/// skipped.
pub fn prediction_experiment<E: Executor>(net: &MultilevelNetwork, opts: &ExperimentOptions, exec: &E) -> Result<Vec<AucRecord>> {
    let mut jobs = Vec::new();
    for repeat in 0..opts.repeats {
        for (fi, &fraction) in opts.fractions.iter().enumerate() {
            if fraction > 0.0 {
                jobs.push((repeat, fi, fraction));
            }
        }
    }
    let results = exec.map(jobs, |(repeat, fi, fraction)| -> Result<Vec<AucRecord>> {
        let seed = derive_seed(derive_seed(opts.seed, repeat as u64), fi as u64);
        let masked = apply_mask(net, opts.level, &MaskSelection::Fraction(fraction), opts.mode, seed)?;
        let original = net.level(opts.level);
        let (dyads, labels): (Vec<(usize, usize)>, Vec<bool>) = match opts.mode {
            MaskMode::Dyads => {
                let labels = masked.held_out.iter().map(|&(i, j)| original.is_edge(i, j)).collect();
                (masked.held_out.clone(), labels)
            }
            MaskMode::Links => {
                let dyads = target_dyads(masked.network.level(opts.level), TargetSet::ZeroDyads);
                let labels = dyads.iter().map(|&(i, j)| original.is_edge(i, j)).collect();
                (dyads, labels)
            }
        };
        let mut out = Vec::new();
        for &model in &opts.models {
            let scores = model_scores(&masked.network, opts.level, model, &opts.refit, &opts.select, &dyads)?;
            out.push(AucRecord {
                fraction,
                mode: opts.mode,
                model,
                repeat,
                auc: auc(&scores, &labels)?,
            });
        }
        Ok(out)
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    records.sort_by(|a, b| {
        a.fraction
            .total_cmp(&b.fraction)
            .then((a.model as u8).cmp(&(b.model as u8)))
            .then(a.repeat.cmp(&b.repeat))
    });
    Ok(records)
}

/// Mean AUC and standard error per (fraction, mode, model), in order of
/// first appearance.
pub fn summarize(records: &[AucRecord]) -> Vec<AucSummary> {
    let mut keys: Vec<(f64, MaskMode, PredictModel)> = Vec::new();
    for r in records {
        let key = (r.fraction, r.mode, r.model);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(fraction, mode, model)| {
            let v: Vec<f64> = records
                .iter()
                .filter(|r| r.fraction == fraction && r.mode == mode && r.model == model)
                .map(|r| r.auc)
                .collect();
            let (mean, se) = mean_stderr(&v);
            AucSummary {
                fraction,
                mode,
                model,
                mean_auc: mean,
                stderr: se,
                n: v.len(),
            }
        })
        .collect()
}

/// Sample mean and standard error (`sd / sqrt(n)`, `sd` with `n - 1`).
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}
