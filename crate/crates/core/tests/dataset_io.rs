use std::path::Path;

use fraudbench::graphdata::{build_graph, export_dataset, extract_features, load_dataset, Dataset, Edge, WindowSpec};
use fraudbench::simcore::{generate, SimConfig};
use fraudbench::splits::temporal_windows;

fn shipped(name: &str) -> SimConfig {
    SimConfig::from_path(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

#[test]
fn amlsim2_round_trip_is_identity() {
    let sim = shipped("amlsim2.json");
    let (log, accounts) = generate(&sim).unwrap();
    let features = extract_features(&log, &accounts, WindowSpec::all(sim.months)).unwrap();
    let dataset = Dataset {
        log,
        accounts,
        features: None,
    };
    let dir = tempfile::tempdir().unwrap();
    export_dataset(dir.path(), &dataset).unwrap();
    assert_eq!(load_dataset(dir.path()).unwrap(), dataset);

    // features survive at nine significant digits
    let with = Dataset {
        features: Some(features.clone()),
        ..dataset
    };
    export_dataset(dir.path(), &with).unwrap();
    let back = load_dataset(dir.path()).unwrap().features.unwrap();
    assert_eq!(back.labels, features.labels);
    assert_eq!(back.active, features.active);
    for (a, b) in back.features.iter().zip(features.features.iter()) {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300));
    }
}

#[test]
fn export_is_byte_deterministic() {
    let sim = shipped("amlsim1.json");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let (log, accounts) = generate(&sim).unwrap();
        let features = Some(extract_features(&log, &accounts, WindowSpec::all(12)).unwrap());
        export_dataset(d.path(), &Dataset { log, accounts, features }).unwrap();
    }
    for file in ["accounts.csv", "transactions.csv", "features.csv"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
}

#[test]
fn hand_written_fixture_loads() {
    let d = load_dataset(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/three_nodes")).unwrap();
    assert!(d.features.is_none());
    let g = build_graph(&d.log, &d.accounts, WindowSpec::all(3)).unwrap();
    assert_eq!(g.node_count(), 3);
    assert_eq!(
        g.edges(0).unwrap(),
        &[Edge { src: 0, dst: 1, weight: 2 }, Edge { src: 1, dst: 2, weight: 1 }]
    );
}

#[test]
fn edge_weights_count_transactions() {
    let sim = shipped("amlsim1.json");
    let (log, accounts) = generate(&sim).unwrap();
    assert_eq!(build_graph(&log, &accounts, WindowSpec::all(12)).unwrap().total_weight(), 10000);

    let sim = shipped("amlsim3.json");
    let (log, accounts) = generate(&sim).unwrap();
    let w = |a, b| WindowSpec::new(a, b).unwrap();
    let windows = temporal_windows(&log, &accounts, w(1, 4), &[w(5, 8), w(9, 12)]).unwrap();
    assert_eq!(windows.len(), 3);
    assert_eq!(windows.iter().map(|d| d.graph.total_weight()).sum::<u64>(), 10000);
    for d in &windows {
        assert_eq!(d.nodes.labels, accounts.labels());
    }
}
