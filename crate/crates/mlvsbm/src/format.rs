//! CSV and JSON formats.
//!
//! Edge lists are CSV with header `from,to`; affiliations are CSV with
//! header `individual,organization`, one line per individual. Node
//! identifiers are dense 0-based integers. Undirected edges are written
//! once with `from < to`; reading one orientation fills both. All files use
//! LF line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mlvsbm_core::predict::{AucRecord, AucSummary, PredictionScores};
use mlvsbm_core::select::{SelectionResult, TraceEntry, Verdict};
use mlvsbm_core::vem::{FitOptions, FitResult, VariationalState};
use mlvsbm_core::{Assignments, LevelGraph, Matrix, ModelParams, MultilevelNetwork};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, IoResult};

pub const IND_EDGES: &str = "ind.csv";
pub const ORG_EDGES: &str = "org.csv";
pub const AFFILIATION: &str = "affiliation.csv";
pub const MASK_IND: &str = "mask_ind.csv";
pub const MASK_ORG: &str = "mask_org.csv";

const EDGE_HEADER: [&str; 2] = ["from", "to"];
const AFFILIATION_HEADER: [&str; 2] = ["individual", "organization"];

/// Reads a two-column integer CSV with the given header.
pub fn read_pairs(path: &Path, header: [&str; 2]) -> IoResult<Vec<(usize, usize)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.len() != 2 || found.get(0) != Some(header[0]) || found.get(1) != Some(header[1]) {
        return Err(IoError::Parse {
            path: path.into(),
            line: 1,
            msg: format!("expected header `{},{}`", header[0], header[1]),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let parse = |k: usize| -> IoResult<usize> {
            let field = record.get(k).unwrap_or("").trim();
            field.parse().map_err(|_| IoError::Parse {
                path: path.into(),
                line,
                msg: format!("`{field}` is not a node index"),
            })
        };
        if record.len() != 2 {
            return Err(IoError::Parse {
                path: path.into(),
                line,
                msg: format!("expected 2 fields, found {}", record.len()),
            });
        }
        out.push((parse(0)?, parse(1)?));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => IoError::io(path, source),
        other => IoError::Parse {
            path: path.into(),
            line,
            msg: format!("{other:?}"),
        },
    }
}

fn csv_writer(path: &Path) -> IoResult<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

/// Writes rows of displayable fields under `header`.
pub fn write_rows<R: AsRef<[String]>>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> IoResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row.as_ref()).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn write_pairs(path: &Path, header: [&str; 2], pairs: &[(usize, usize)]) -> IoResult<()> {
    write_rows(path, &header, pairs.iter().map(|&(a, b)| [a.to_string(), b.to_string()]))
}

/// Directedness and sizes that CSV edge lists do not carry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvLayout {
    pub directed_ind: bool,
    pub directed_org: bool,
    /// Number of organizations; defaults to one past the largest index seen.
    pub n_org: Option<usize>,
}

/// Paths of a CSV network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvPaths {
    pub ind: PathBuf,
    pub org: PathBuf,
    pub affiliation: PathBuf,
    pub mask_ind: Option<PathBuf>,
    pub mask_org: Option<PathBuf>,
}

impl CsvPaths {
    /// Standard file names inside `dir`; mask files are used when present.
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |name: &str| Some(dir.join(name)).filter(|p| p.exists());
        Self {
            ind: dir.join(IND_EDGES),
            org: dir.join(ORG_EDGES),
            affiliation: dir.join(AFFILIATION),
            mask_ind: opt(MASK_IND),
            mask_org: opt(MASK_ORG),
        }
    }
}

/// Reads and validates a network from CSV files. The number of
/// individuals is the number of affiliation lines.
pub fn load_network(paths: &CsvPaths, layout: &CsvLayout) -> IoResult<MultilevelNetwork> {
    let aff = read_pairs(&paths.affiliation, AFFILIATION_HEADER)?;
    let n_ind = aff.len();
    let mut org_of = vec![usize::MAX; n_ind];
    for (line, &(i, j)) in aff.iter().enumerate() {
        if i >= n_ind || org_of[i] != usize::MAX {
            return Err(IoError::Parse {
                path: paths.affiliation.clone(),
                line: line as u64 + 2,
                msg: format!("individual {i} is out of range or listed twice"),
            });
        }
        org_of[i] = j;
    }
    let ind_edges = read_pairs(&paths.ind, EDGE_HEADER)?;
    let org_edges = read_pairs(&paths.org, EDGE_HEADER)?;
    let seen = org_of
        .iter()
        .copied()
        .chain(org_edges.iter().flat_map(|&(a, b)| [a, b]))
        .max()
        .map_or(0, |m| m + 1);
    let n_org = layout.n_org.unwrap_or(seen);
    let mut ind = LevelGraph::from_edges(n_ind, layout.directed_ind, &ind_edges)?;
    let mut org = LevelGraph::from_edges(n_org, layout.directed_org, &org_edges)?;
    if let Some(p) = &paths.mask_ind {
        ind = ind.with_masked(&read_pairs(p, EDGE_HEADER)?);
    }
    if let Some(p) = &paths.mask_org {
        org = org.with_masked(&read_pairs(p, EDGE_HEADER)?);
    }
    Ok(MultilevelNetwork::from_affiliation_index(ind, org, &org_of)?)
}

/// Writes the standard CSV files into `dir` and returns their paths.
/// Mask files are written only for levels with hidden dyads.
pub fn save_network(dir: &Path, net: &MultilevelNetwork) -> IoResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, header: [&str; 2], pairs: Vec<(usize, usize)>| -> IoResult<()> {
        let p = dir.join(name);
        write_pairs(&p, header, &pairs)?;
        written.push(p);
        Ok(())
    };
    put(IND_EDGES, EDGE_HEADER, net.ind().edges().collect())?;
    put(ORG_EDGES, EDGE_HEADER, net.org().edges().collect())?;
    put(AFFILIATION, AFFILIATION_HEADER, net.org_of().iter().copied().enumerate().collect())?;
    if !net.ind().is_fully_observed() {
        put(MASK_IND, EDGE_HEADER, net.ind().masked_dyads().collect())?;
    }
    if !net.org().is_fully_observed() {
        put(MASK_ORG, EDGE_HEADER, net.org().masked_dyads().collect())?;
    }
    Ok(written)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> IoResult<T> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| IoError::Json {
        path: path.into(),
        source,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> IoResult<()> {
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| IoError::Json {
        path: path.into(),
        source,
    })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| IoError::io(path, e))
}

type Pairs = Vec<[usize; 2]>;

fn to_pairs(it: impl Iterator<Item = (usize, usize)>) -> Pairs {
    it.map(|(a, b)| [a, b]).collect()
}

fn from_pairs(p: &[[usize; 2]]) -> Vec<(usize, usize)> {
    p.iter().map(|&[a, b]| (a, b)).collect()
}

/// Whole network in one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBundle {
    pub n_ind: usize,
    pub n_org: usize,
    pub directed_ind: bool,
    pub directed_org: bool,
    pub edges_ind: Pairs,
    pub edges_org: Pairs,
    /// Organization of each individual.
    pub affiliation: Vec<usize>,
    /// Hidden dyads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_ind: Option<Pairs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_org: Option<Pairs>,
}

impl NetworkBundle {
    pub fn from_network(net: &MultilevelNetwork) -> Self {
        let mask = |g: &LevelGraph| (!g.is_fully_observed()).then(|| to_pairs(g.masked_dyads()));
        Self {
            n_ind: net.n_ind(),
            n_org: net.n_org(),
            directed_ind: net.ind().is_directed(),
            directed_org: net.org().is_directed(),
            edges_ind: to_pairs(net.ind().edges()),
            edges_org: to_pairs(net.org().edges()),
            affiliation: net.org_of().to_vec(),
            mask_ind: mask(net.ind()),
            mask_org: mask(net.org()),
        }
    }

    pub fn to_network(&self) -> mlvsbm_core::Result<MultilevelNetwork> {
        if self.affiliation.len() != self.n_ind {
            return Err(mlvsbm_core::Error::DimensionMismatch(format!(
                "affiliation has {} entries for {} individuals",
                self.affiliation.len(),
                self.n_ind
            )));
        }
        let mut ind = LevelGraph::from_edges(self.n_ind, self.directed_ind, &from_pairs(&self.edges_ind))?;
        let mut org = LevelGraph::from_edges(self.n_org, self.directed_org, &from_pairs(&self.edges_org))?;
        for (g, mask) in [(&mut ind, &self.mask_ind), (&mut org, &self.mask_org)] {
            if let Some(m) = mask {
                let pairs = from_pairs(m);
                if pairs.iter().any(|&(a, b)| a >= g.n() || b >= g.n()) {
                    return Err(mlvsbm_core::Error::DimensionMismatch("masked pair out of range".into()));
                }
                *g = g.with_masked(&pairs);
            }
        }
        MultilevelNetwork::from_affiliation_index(ind, org, &self.affiliation)
    }
}

/// Loads a network from a JSON bundle, or from a directory of CSV files.
pub fn load_any(path: &Path, layout: &CsvLayout) -> IoResult<MultilevelNetwork> {
    if path.is_dir() {
        load_network(&CsvPaths::in_dir(path), layout)
    } else {
        Ok(read_json::<NetworkBundle>(path)?.to_network()?)
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

fn matrix(name: &str, rows: &[Vec<f64>], r: usize, c: usize) -> mlvsbm_core::Result<Matrix> {
    Matrix::from_rows(rows)
        .filter(|m| m.rows() == r && m.cols() == c)
        .or_else(|| (r == 0).then(|| Matrix::zeros(0, c)))
        .ok_or_else(|| mlvsbm_core::Error::DimensionMismatch(format!("{name} must be {r}x{c}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub q_ind: usize,
    pub q_org: usize,
    pub pi_org: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub alpha_ind: Vec<Vec<f64>>,
    pub alpha_org: Vec<Vec<f64>>,
    pub directed_ind: bool,
    pub directed_org: bool,
}

impl From<&ModelParams> for ParamsJson {
    fn from(p: &ModelParams) -> Self {
        Self {
            q_ind: p.q_ind(),
            q_org: p.q_org(),
            pi_org: p.pi_org.clone(),
            gamma: rows(&p.gamma),
            alpha_ind: rows(&p.alpha_ind),
            alpha_org: rows(&p.alpha_org),
            directed_ind: p.directed_ind,
            directed_org: p.directed_org,
        }
    }
}

impl ParamsJson {
    pub fn to_params(&self) -> mlvsbm_core::Result<ModelParams> {
        let p = ModelParams {
            pi_org: self.pi_org.clone(),
            gamma: matrix("gamma", &self.gamma, self.q_ind, self.q_org)?,
            alpha_ind: matrix("alpha_ind", &self.alpha_ind, self.q_ind, self.q_ind)?,
            alpha_org: matrix("alpha_org", &self.alpha_org, self.q_org, self.q_org)?,
            directed_ind: self.directed_ind,
            directed_org: self.directed_org,
        };
        p.check()?;
        Ok(p)
    }
}

/// Hard memberships, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentsJson {
    pub z_ind: Vec<usize>,
    pub z_org: Vec<usize>,
}

impl From<&Assignments> for AssignmentsJson {
    fn from(a: &Assignments) -> Self {
        Self {
            z_ind: a.z_ind.clone(),
            z_org: a.z_org.clone(),
        }
    }
}

impl From<AssignmentsJson> for Assignments {
    fn from(a: AssignmentsJson) -> Self {
        Assignments {
            z_ind: a.z_ind,
            z_org: a.z_org,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionsJson {
    pub max_outer_iterations: usize,
    pub bound_rel_tolerance: f64,
    pub max_fixed_point_sweeps: usize,
    pub fixed_point_tolerance: f64,
    pub n_random_restarts: usize,
    pub init_method: String,
    pub seed: u64,
    pub damping: f64,
    pub independent_levels: bool,
}

impl From<&FitOptions> for OptionsJson {
    fn from(o: &FitOptions) -> Self {
        Self {
            max_outer_iterations: o.max_outer_iterations,
            bound_rel_tolerance: o.bound_rel_tolerance,
            max_fixed_point_sweeps: o.max_fixed_point_sweeps,
            fixed_point_tolerance: o.fixed_point_tolerance,
            n_random_restarts: o.n_random_restarts,
            init_method: format!("{:?}", o.init_method).to_lowercase(),
            seed: o.seed,
            damping: o.damping,
            independent_levels: o.independent_levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    pub params: ParamsJson,
    pub tau_ind: Vec<Vec<f64>>,
    pub tau_org: Vec<Vec<f64>>,
    pub map_z_ind: Vec<usize>,
    pub map_z_org: Vec<usize>,
    pub bound: f64,
    pub bound_trace: Vec<f64>,
    pub icl: f64,
    pub converged: bool,
    pub n_iterations: usize,
    pub restart: usize,
    pub warnings: Vec<String>,
    pub options_echo: OptionsJson,
}

impl FitJson {
    pub fn new(fit: &FitResult, opts: &FitOptions) -> Self {
        Self {
            params: (&fit.params).into(),
            tau_ind: rows(&fit.state.tau_ind),
            tau_org: rows(&fit.state.tau_org),
            map_z_ind: fit.map_assignments.z_ind.clone(),
            map_z_org: fit.map_assignments.z_org.clone(),
            bound: fit.bound,
            bound_trace: fit.bound_trace.clone(),
            icl: fit.icl,
            converged: fit.converged,
            n_iterations: fit.n_iterations,
            restart: fit.restart,
            warnings: fit.warnings.iter().map(|w| w.to_string()).collect(),
            options_echo: opts.into(),
        }
    }

    /// Parameters and memberships, enough to score dyads.
    pub fn to_model(&self) -> mlvsbm_core::Result<(ModelParams, VariationalState)> {
        let p = self.params.to_params()?;
        let state = VariationalState {
            tau_ind: matrix("tau_ind", &self.tau_ind, self.tau_ind.len(), p.q_ind())?,
            tau_org: matrix("tau_org", &self.tau_org, self.tau_org.len(), p.q_org())?,
        };
        Ok((p, state))
    }

    pub fn map_assignments(&self) -> Assignments {
        Assignments {
            z_ind: self.map_z_ind.clone(),
            z_org: self.map_z_org.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploredJson {
    pub q_ind: usize,
    pub q_org: usize,
    pub icl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceJson {
    pub round: usize,
    #[serde(rename = "move")]
    pub mv: String,
    pub q_ind: usize,
    pub q_org: usize,
    /// Absent when the fit failed.
    pub icl: Option<f64>,
}

impl From<&TraceEntry> for TraceJson {
    fn from(t: &TraceEntry) -> Self {
        Self {
            round: t.round,
            mv: t.mv.to_string(),
            q_ind: t.q.0,
            q_org: t.q.1,
            icl: t.icl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionJson {
    pub best_q: [usize; 2],
    pub verdict: String,
    pub selected_q: [usize; 2],
    pub icl_mlvsbm: f64,
    pub icl_independent: f64,
    pub independent_q: [usize; 2],
    pub explored: Vec<ExploredJson>,
    pub sbm_icl_ind: Vec<f64>,
    pub sbm_icl_org: Vec<f64>,
    pub search_trace: Vec<TraceJson>,
    pub warnings: Vec<String>,
    pub best_fit: FitJson,
}

impl SelectionJson {
    pub fn new(r: &SelectionResult, opts: &FitOptions) -> Self {
        let sel = r.selected_q();
        Self {
            best_q: [r.best_q.0, r.best_q.1],
            verdict: r.verdict.as_str().into(),
            selected_q: [sel.0, sel.1],
            icl_mlvsbm: r.icl_mlvsbm(),
            icl_independent: r.icl_independent,
            independent_q: [r.independent_q.0, r.independent_q.1],
            explored: r
                .explored
                .iter()
                .map(|(&(q_ind, q_org), &icl)| ExploredJson { q_ind, q_org, icl })
                .collect(),
            sbm_icl_ind: r.sbm_icl_ind.clone(),
            sbm_icl_org: r.sbm_icl_org.clone(),
            search_trace: r.search_trace.iter().map(Into::into).collect(),
            warnings: r.warnings.iter().map(|w| w.to_string()).collect(),
            best_fit: FitJson::new(&r.best_fit, opts),
        }
    }

    pub fn verdict(&self) -> Option<Verdict> {
        match self.verdict.as_str() {
            "dependent" => Some(Verdict::Dependent),
            "independent" => Some(Verdict::Independent),
            _ => None,
        }
    }
}

/// Dyad scores as CSV `from,to,score`.
pub fn write_scores(path: &Path, s: &PredictionScores) -> IoResult<()> {
    write_rows(
        path,
        &["from", "to", "score"],
        s.dyads
            .iter()
            .zip(&s.scores)
            .map(|(&(i, j), &v)| [i.to_string(), j.to_string(), v.to_string()]),
    )
}

fn mode_str(m: mlvsbm_core::network::MaskMode) -> &'static str {
    match m {
        mlvsbm_core::network::MaskMode::Dyads => "dyads",
        mlvsbm_core::network::MaskMode::Links => "links",
    }
}

pub fn write_auc_records(path: &Path, records: &[AucRecord]) -> IoResult<()> {
    write_rows(
        path,
        &["fraction", "mode", "model", "repeat", "auc"],
        records.iter().map(|r| {
            [
                r.fraction.to_string(),
                mode_str(r.mode).to_string(),
                r.model.as_str().to_string(),
                r.repeat.to_string(),
                r.auc.to_string(),
            ]
        }),
    )
}

pub fn write_auc_summary(path: &Path, summary: &[AucSummary]) -> IoResult<()> {
    write_rows(
        path,
        &["fraction", "mode", "model", "mean_auc", "stderr"],
        summary.iter().map(|s| {
            [
                s.fraction.to_string(),
                mode_str(s.mode).to_string(),
                s.model.as_str().to_string(),
                s.mean_auc.to_string(),
                s.stderr.to_string(),
            ]
        }),
    )
}

