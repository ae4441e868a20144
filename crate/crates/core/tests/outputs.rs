use fracpost::experiments::{
    run_study, summary, write_outputs, OutputFormats, Prop31BoundaryConfig, StudyConfig, StudyKind,
    SUMMARY_SCHEMA,
};

fn boundary_config() -> StudyConfig {
    StudyConfig::Prop31Boundary(Prop31BoundaryConfig {
        k_max: 10_000,
        ..Default::default()
    })
}

#[test]
fn artifacts_written_with_declared_schema() {
    let cfg = boundary_config();
    let out = run_study(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_outputs(&cfg, &out, dir.path(), OutputFormats::default()).unwrap();
    let names: Vec<String> = paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["prop31-boundary.csv", "prop31-boundary.json"]);
    let csv = std::fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "case,beta,mu,gamma,schedule,n,alpha,sqrt_n_tn1,tail_bound"
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
    assert_eq!(json["schema"], SUMMARY_SCHEMA);
    assert_eq!(json["study"], "prop31-boundary");
    assert_eq!(json["params"]["k_max"], 10_000);
    assert_eq!(json["config_hash"], cfg.config_hash());
    assert_eq!(json["metrics"]["case1_respect"], "decreasing");
}

#[test]
fn summary_params_rebuild_the_config() {
    let cfg = boundary_config();
    let out = run_study(&cfg).unwrap();
    let s = summary(&cfg, &out);
    let back: StudyConfig = serde_json::from_value(s.params).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.config_hash(), s.config_hash);
}

#[test]
fn format_toggles() {
    let cfg = boundary_config();
    let out = run_study(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let only_json = write_outputs(
        &cfg,
        &out,
        dir.path(),
        OutputFormats {
            csv: false,
            json: true,
        },
    )
    .unwrap();
    assert_eq!(only_json.len(), 1);
    assert!(only_json[0].extension().unwrap() == "json");
}

#[test]
fn invalid_config_rejected_before_running() {
    let mut cfg = StudyConfig::default_for(StudyKind::GwnCoverage);
    cfg.set_reps(0).unwrap();
    let err = run_study(&cfg).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("`reps`"));
}
