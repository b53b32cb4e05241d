use std::fs;

use birefsim::config::{load_config, preset};
use birefsim::experiment::{run_study, tradeoff_curve, TRADEOFF_SAMPLES};
use birefsim::landscape::FidelityKind;
use birefsim::output::{parse_landscape_csv, study_directory, write_study, RunSummary};

#[test]
fn study_files_reload_to_the_same_numbers() {
    let mut cfg = preset("fig2").unwrap();
    cfg.landscape.resolution = 32;
    cfg.study.as_mut().unwrap().omega_b = vec![0.5];
    let dir = tempfile::tempdir().unwrap();

    // the config itself survives a trip through a file
    let path = dir.path().join("scenario.toml");
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    assert_eq!(load_config(&path).unwrap(), cfg);

    let results = run_study(&cfg).unwrap();
    write_study(dir.path(), &cfg, &results).unwrap();

    let summary = RunSummary::from_json(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.study.len(), 1);
    let point = &summary.study[0];
    assert_eq!(point.average_raw, results[0].average_raw);

    let csv = fs::read_to_string(dir.path().join(study_directory(0.5)).join("landscape_cc.csv")).unwrap();
    let landscape = parse_landscape_csv(&csv, cfg.landscape.patterns[0]).unwrap();
    let curve = tradeoff_curve(&[landscape], FidelityKind::Raw, &cfg.landscape.thresholds, TRADEOFF_SAMPLES).unwrap();
    for (reloaded, original) in curve.marks.iter().zip(&point.marks_raw) {
        assert!((reloaded.retained - original.retained).abs() < 1e-10);
    }
    assert!((curve.total - results[0].success_patterns).abs() < 1e-10);
}

#[test]
fn invalid_file_names_every_bad_field() {
    let mut cfg = preset("fig3").unwrap();
    cfg.node_b.kappa_v = 0.0;
    cfg.landscape.resolution = 1;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    let msg = load_config(&path).unwrap_err().to_string();
    assert!(msg.contains("node_b.kappa_v"), "{msg}");
    assert!(msg.contains("landscape.resolution"), "{msg}");
}
