use std::fs;
use std::path::Path;

use mlvsbm::format::{
    load_network, read_json, read_pairs, save_network, write_json, AssignmentsJson, CsvLayout, CsvPaths, FitJson,
    NetworkBundle, ParamsJson,
};
use mlvsbm::IoError;
use mlvsbm_core::generate::{Design, Topology};
use mlvsbm_core::network::{apply_mask, MaskMode, MaskSelection};
use mlvsbm_core::vem::{fit, FitOptions};
use mlvsbm_core::{Level, LevelGraph, MultilevelNetwork};
use proptest::prelude::*;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn paths(dir: &Path, ind: &str, org: &str, aff: &str) -> CsvPaths {
    CsvPaths {
        ind: write(dir, "ind.csv", ind),
        org: write(dir, "org.csv", org),
        affiliation: write(dir, "affiliation.csv", aff),
        mask_ind: None,
        mask_org: None,
    }
}

#[test]
fn loading_examples() {
    let dir = tempfile::tempdir().unwrap();
    let p = paths(dir.path(), "from,to\n0,1\n", "from,to\n", "individual,organization\n0,1\n1,0\n");
    let net = load_network(&p, &CsvLayout::default()).unwrap();
    assert_eq!(net.ind().adjacency().to_rows(), vec![vec![0, 1], vec![1, 0]]);
    assert_eq!(net.org().n_edges(), 0);
    assert_eq!(net.n_org(), 2);
    assert_eq!(net.affiliation().to_rows(), vec![vec![0, 1], vec![1, 0]]);
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = paths(dir.path(), "from,to\n0,1\n1,x\n", "from,to\n", "individual,organization\n0,0\n1,0\n");
    match load_network(&p, &CsvLayout::default()) {
        Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let bad_header = write(dir.path(), "h.csv", "a,b\n0,1\n");
    assert!(matches!(read_pairs(&bad_header, ["from", "to"]), Err(IoError::Parse { line: 1, .. })));
    let short = write(dir.path(), "s.csv", "from,to\n0\n");
    assert!(matches!(read_pairs(&short, ["from", "to"]), Err(IoError::Parse { line: 2, .. })));
}

#[test]
fn invalid_content_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out_of_range = paths(dir.path(), "from,to\n0,5\n", "from,to\n", "individual,organization\n0,0\n1,0\n");
    assert!(matches!(load_network(&out_of_range, &CsvLayout::default()), Err(IoError::Core(_))));
    let twice = paths(dir.path(), "from,to\n", "from,to\n", "individual,organization\n0,0\n0,1\n");
    assert!(matches!(load_network(&twice, &CsvLayout::default()), Err(IoError::Parse { line: 3, .. })));
    let loop_ = paths(dir.path(), "from,to\n1,1\n", "from,to\n", "individual,organization\n0,0\n1,0\n");
    assert!(load_network(&loop_, &CsvLayout::default()).is_err());
}

fn masked_sample(seed: u64, directed: bool) -> MultilevelNetwork {
    let mut d = Design::standard(Topology::Assortative);
    d.n_ind = 30;
    d.n_org = 8;
    d.directed_ind = directed;
    let (net, _, _) = d.sample(seed).unwrap();
    apply_mask(&net, Level::Ind, &MaskSelection::Fraction(0.1), MaskMode::Dyads, seed).unwrap().network
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn csv_round_trip_is_exact(seed in 0u64..1000, directed in any::<bool>()) {
        let net = masked_sample(seed, directed);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        save_network(a.path(), &net).unwrap();
        let layout = CsvLayout { directed_ind: directed, directed_org: false, n_org: Some(net.n_org()) };
        let back = load_network(&CsvPaths::in_dir(a.path()), &layout).unwrap();
        prop_assert_eq!(back.ind().mask(), net.ind().mask());
        prop_assert_eq!(back.ind().edges().collect::<Vec<_>>(), net.ind().edges().collect::<Vec<_>>());
        prop_assert_eq!(back.org(), net.org());
        prop_assert_eq!(back.org_of(), net.org_of());
        save_network(b.path(), &back).unwrap();
        prop_assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
    }

    #[test]
    fn bundle_round_trip_is_exact(seed in 0u64..1000, directed in any::<bool>()) {
        let net = masked_sample(seed, directed);
        let bundle = NetworkBundle::from_network(&net);
        let text = serde_json::to_string(&bundle).unwrap();
        let again: NetworkBundle = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&again, &bundle);
        let back = again.to_network().unwrap();
        prop_assert_eq!(NetworkBundle::from_network(&back), bundle);
    }
}

#[test]
fn undirected_edges_are_written_once() {
    let ind = LevelGraph::from_edges(3, false, &[(2, 0), (1, 2)]).unwrap();
    let org = LevelGraph::empty(1, false);
    let net = MultilevelNetwork::from_affiliation_index(ind, org, &[0, 0, 0]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_network(dir.path(), &net).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("ind.csv")).unwrap(), "from,to\n0,2\n1,2\n");
    assert_eq!(fs::read_to_string(dir.path().join("org.csv")).unwrap(), "from,to\n");
    assert!(!dir.path().join("mask_ind.csv").exists());
}

#[test]
fn json_documents_round_trip() {
    let (net, z, params) = Design::standard(Topology::Assortative).sample(1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let pj = ParamsJson::from(&params);
    write_json(&dir.path().join("p.json"), &pj).unwrap();
    let back: ParamsJson = read_json(&dir.path().join("p.json")).unwrap();
    assert_eq!(back.to_params().unwrap(), params);

    let aj = AssignmentsJson::from(&z);
    write_json(&dir.path().join("z.json"), &aj).unwrap();
    assert_eq!(read_json::<AssignmentsJson>(&dir.path().join("z.json")).unwrap(), aj);

    let opts = FitOptions {
        n_random_restarts: 2,
        ..FitOptions::default()
    };
    let f = fit(&net, 3, 3, &opts).unwrap();
    let fj = FitJson::new(&f, &opts);
    write_json(&dir.path().join("f.json"), &fj).unwrap();
    let back: FitJson = read_json(&dir.path().join("f.json")).unwrap();
    assert_eq!(back, fj);
    let (p, s) = back.to_model().unwrap();
    assert_eq!(p, f.params);
    assert_eq!(s, f.state);
    let text = fs::read_to_string(dir.path().join("f.json")).unwrap();
    for key in ["params", "tau_ind", "tau_org", "map_z_ind", "map_z_org", "bound", "bound_trace", "icl", "converged", "n_iterations", "options_echo"] {
        assert!(text.contains(&format!("\"{key}\"")), "{key}");
    }
}

#[test]
fn malformed_params_are_rejected() {
    let (_, _, params) = Design::standard(Topology::Assortative).sample(1).unwrap();
    let mut pj = ParamsJson::from(&params);
    pj.gamma[0][0] += 0.5;
    assert!(pj.to_params().is_err());
    let mut pj = ParamsJson::from(&params);
    pj.alpha_ind.pop();
    assert!(pj.to_params().is_err());
}
