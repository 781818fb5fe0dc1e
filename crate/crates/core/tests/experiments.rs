use std::fs;

use weakdisc::experiment::{run, ExperimentKind, ExperimentSpec, RunError};

fn spec_in(dir: &std::path::Path, kind: ExperimentKind, trials: Option<u64>) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(kind);
    s.output_dir = dir.to_path_buf();
    s.parameters.trials = trials;
    s
}

fn csv_outputs(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    for kind in [ExperimentKind::Fig4, ExperimentKind::Fig6, ExperimentKind::TsvfReport] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let trials = match kind {
            ExperimentKind::Fig6 => Some(1000),
            ExperimentKind::Fig4 => Some(200),
            _ => None,
        };
        run(&spec_in(a.path(), kind, trials)).unwrap();
        run(&spec_in(b.path(), kind, trials)).unwrap();
        let (fa, fb) = (csv_outputs(a.path()), csv_outputs(b.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{kind:?}");
    }
}

#[test]
fn summary_has_required_fields() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&spec_in(dir.path(), ExperimentKind::HelstromTable, None)).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["experiment", "parameters", "master_seed", "prng", "headline", "version", "wall_seconds"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["experiment"], "helstrom-table");
    assert_eq!(summary.files.last().unwrap(), "summary.json");
    let table = fs::read_to_string(dir.path().join("helstrom.csv")).unwrap();
    assert!(table.starts_with("theta_deg,helstrom\n"));
    assert!(table.ends_with('\n'));
    assert_eq!(table.lines().count(), 11);
}

#[test]
fn csv_headers_follow_schema() {
    let dir = tempfile::tempdir().unwrap();
    run(&spec_in(dir.path(), ExperimentKind::Fig5, Some(200))).unwrap();
    let c = fs::read_to_string(dir.path().join("fig5_m5.csv")).unwrap();
    assert!(c.starts_with("theta_deg,success,stderr,helstrom\n"));

    let mut s = spec_in(dir.path(), ExperimentKind::Fig2, Some(50));
    s.parameters.sigma = Some(3.0);
    s.dump_trajectories = true;
    s.parameters.dump_limit = Some(3);
    run(&s).unwrap();
    let t = fs::read_to_string(dir.path().join("fig2_trajectories.csv")).unwrap();
    assert!(t.starts_with("trial,step,reading,alpha,beta\n"));
    let trials: std::collections::BTreeSet<&str> = t.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(trials.len(), 3);

    run(&spec_in(dir.path(), ExperimentKind::TsvfReport, None)).unwrap();
    let r = fs::read_to_string(dir.path().join("tsvf_report.csv")).unwrap();
    assert!(r.starts_with(
        "eta,g,sigma,mean_analytic,mean_quadrature,second_moment_analytic,second_moment_quadrature,postselect_prob\n"
    ));
    assert_eq!(r.lines().count(), 61);

    run(&spec_in(dir.path(), ExperimentKind::Fig6, Some(1000))).unwrap();
    let c = fs::read_to_string(dir.path().join("fig6_cdf_m5.csv")).unwrap();
    assert!(c.starts_with("mean_reading,cdf\n"));
}

#[test]
fn invalid_spec_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut s = spec_in(&out, ExperimentKind::Fig3, Some(0));
    s.parameters.boundaries = Some([80.0, 10.0]);
    match run(&s) {
        Err(RunError::Invalid(errs)) => assert_eq!(errs.len(), 2, "{errs:?}"),
        other => panic!("expected invalid spec, got {other:?}"),
    }
    assert!(!out.exists());
}

#[test]
fn seed_changes_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut s = spec_in(a.path(), ExperimentKind::Fig6, Some(1000));
    run(&s).unwrap();
    s.output_dir = b.path().to_path_buf();
    s.master_seed += 1;
    run(&s).unwrap();
    assert_ne!(csv_outputs(a.path()), csv_outputs(b.path()));
}

#[test]
fn spec_round_trips_through_json() {
    let json = r#"{
        "experiment": "fig5",
        "parameters": {"sigma": 2.5, "m_list": [1, 3], "trials": 300},
        "master_seed": 7,
        "output_dir": "somewhere"
    }"#;
    let s = ExperimentSpec::from_json(json).unwrap();
    assert_eq!(s.experiment, ExperimentKind::Fig5);
    assert_eq!(s.parameters.m_list, Some(vec![1, 3]));
    let back = ExperimentSpec::from_json(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
}
