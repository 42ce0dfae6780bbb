//! Shared fixtures and brute-force oracles. The oracles read the raw
//! matrices and loop over dyads directly; they share no code with the
//! library's likelihood routines.
#![allow(dead_code)]

use mlvsbm_core::generate::{sample_affiliation, sample_network, SizeLaw};
use mlvsbm_core::rng::Stream;
use mlvsbm_core::vem::VariationalState;
use mlvsbm_core::{Assignments, LevelGraph, Matrix, ModelParams, MultilevelNetwork};

pub fn random_prob_vector(rng: &mut Stream, q: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..q).map(|_| 0.2 + rng.uniform()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn random_alpha(rng: &mut Stream, q: usize, directed: bool) -> Matrix {
    let mut a = Matrix::zeros(q, q);
    for k in 0..q {
        for l in 0..q {
            if directed || l >= k {
                let v = 0.05 + 0.9 * rng.uniform();
                a[(k, l)] = v;
                if !directed {
                    a[(l, k)] = v;
                }
            }
        }
    }
    a
}

pub fn random_params(seed: u64, qi: usize, qo: usize, directed_ind: bool, directed_org: bool) -> ModelParams {
    let mut rng = Stream::new(seed);
    let mut gamma = Matrix::zeros(qi, qo);
    for l in 0..qo {
        let col = random_prob_vector(&mut rng, qi);
        for k in 0..qi {
            gamma[(k, l)] = col[k];
        }
    }
    ModelParams {
        pi_org: random_prob_vector(&mut rng, qo),
        gamma,
        alpha_ind: random_alpha(&mut rng, qi, directed_ind),
        alpha_org: random_alpha(&mut rng, qo, directed_org),
        directed_ind,
        directed_org,
    }
}

pub fn random_tau(rng: &mut Stream, n: usize, q: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_prob_vector(rng, q)).collect();
    Matrix::from_rows(&rows).unwrap_or_else(|| Matrix::zeros(n, q))
}

pub fn random_state(seed: u64, n_ind: usize, n_org: usize, qi: usize, qo: usize) -> VariationalState {
    let mut rng = Stream::new(seed);
    VariationalState {
        tau_ind: random_tau(&mut rng, n_ind, qi),
        tau_org: random_tau(&mut rng, n_org, qo),
    }
}

/// Hides each dyad with probability `p` (both orientations when undirected).
pub fn random_mask(g: &LevelGraph, p: f64, seed: u64) -> LevelGraph {
    let mut rng = Stream::new(seed);
    let hidden: Vec<(usize, usize)> = g.dyads().filter(|_| rng.bernoulli(p)).collect();
    g.with_masked(&hidden)
}

/// Sampled network with random parameters and optional random masks.
pub fn tiny_instance(
    seed: u64,
    n_ind: usize,
    n_org: usize,
    qi: usize,
    qo: usize,
    directed: (bool, bool),
    mask_p: f64,
) -> (MultilevelNetwork, ModelParams, Assignments) {
    let params = random_params(seed, qi, qo, directed.0, directed.1);
    let a = sample_affiliation(n_ind, n_org, SizeLaw::Uniform, seed ^ 0xa5a5).unwrap();
    let (net, z) = sample_network(&params, n_ind, n_org, &a, seed ^ 0x5a5a).unwrap();
    let net = if mask_p > 0.0 {
        let ind = random_mask(net.ind(), mask_p, seed ^ 1);
        let org = random_mask(net.org(), mask_p, seed ^ 2);
        MultilevelNetwork::from_affiliation_index(ind, org, net.org_of()).unwrap()
    } else {
        net
    };
    (net, params, z)
}

fn dyad_pairs(g: &LevelGraph) -> Vec<(usize, usize)> {
    let n = g.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (g.is_directed() || i < j) && g.mask().get(i, j) {
                out.push((i, j));
            }
        }
    }
    out
}

fn bern(x: bool, a: f64) -> f64 {
    if x {
        a.ln()
    } else {
        (1.0 - a).ln()
    }
}

/// Complete log-likelihood by direct summation over observed dyads.
pub fn oracle_complete(net: &MultilevelNetwork, p: &ModelParams, z_ind: &[usize], z_org: &[usize]) -> f64 {
    let mut s = 0.0;
    for &l in z_org {
        s += p.pi_org[l].ln();
    }
    for (i, &k) in z_ind.iter().enumerate() {
        s += p.gamma[(k, z_org[net.org_of()[i]])].ln();
    }
    for (i, j) in dyad_pairs(net.ind()) {
        s += bern(net.ind().adjacency().get(i, j), p.alpha_ind[(z_ind[i], z_ind[j])]);
    }
    for (i, j) in dyad_pairs(net.org()) {
        s += bern(net.org().adjacency().get(i, j), p.alpha_org[(z_org[i], z_org[j])]);
    }
    s
}

fn next_labels(z: &mut [usize], q: usize) -> bool {
    for v in z.iter_mut() {
        *v += 1;
        if *v < q {
            return true;
        }
        *v = 0;
    }
    false
}

/// Log marginal likelihood by enumerating every pair of assignments.
pub fn oracle_exact(net: &MultilevelNetwork, p: &ModelParams) -> f64 {
    let (qi, qo) = (p.q_ind(), p.q_org());
    let mut terms = Vec::new();
    let mut zo = vec![0; net.n_org()];
    loop {
        let mut zi = vec![0; net.n_ind()];
        loop {
            terms.push(oracle_complete(net, p, &zi, &zo));
            if !next_labels(&mut zi, qi) {
                break;
            }
        }
        if !next_labels(&mut zo, qo) {
            break;
        }
    }
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Variational bound by direct summation.
pub fn oracle_bound(net: &MultilevelNetwork, p: &ModelParams, ti: &Matrix, to: &Matrix) -> f64 {
    let (qi, qo) = (p.q_ind(), p.q_org());
    let mut s = 0.0;
    for j in 0..net.n_org() {
        for l in 0..qo {
            let t = to[(j, l)];
            s += t * (p.pi_org[l].ln() - t.ln());
        }
    }
    for i in 0..net.n_ind() {
        let j = net.org_of()[i];
        for k in 0..qi {
            let t = ti[(i, k)];
            s -= t * t.ln();
            for l in 0..qo {
                s += t * to[(j, l)] * p.gamma[(k, l)].ln();
            }
        }
    }
    for (g, tau, alpha) in [(net.ind(), ti, &p.alpha_ind), (net.org(), to, &p.alpha_org)] {
        let q = alpha.rows();
        for (i, j) in dyad_pairs(g) {
            let x = g.adjacency().get(i, j);
            for k in 0..q {
                for l in 0..q {
                    s += tau[(i, k)] * tau[(j, l)] * bern(x, alpha[(k, l)]);
                }
            }
        }
    }
    s
}

/// ARI from pair counts (agreement table over all item pairs).
pub fn oracle_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut ss, mut sd, mut ds, mut dd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if den == 0.0 {
        return 1.0;
    }
    2.0 * (ss * dd - sd * ds) / den
}

/// AUC by comparing every positive with every negative.
pub fn oracle_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
