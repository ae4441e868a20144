use std::path::Path;
use std::process::{Command, Output};

fn fracpost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracpost"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_names_every_study() {
    let o = fracpost(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in [
        "gwn-coverage",
        "gwn-bvm",
        "hist-bvm",
        "hist-counterexample",
        "density-gp-bvm",
        "contraction-slope",
        "supnorm-slope",
        "prop31-boundary",
    ] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}

#[test]
fn validate_config_prints_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "good.toml",
        "[study]\nkind = \"gwn-coverage\"\nreps = 20\n",
    );
    let o = fracpost(&["validate-config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("reps = 20"));
    assert!(text.contains("k_max = 10000"));
    // The normalized output is itself a valid config.
    let again = write(dir.path(), "again.toml", &text);
    assert_eq!(
        fracpost(&["validate-config", &again]).status.code(),
        Some(0)
    );
}

#[test]
fn zero_reps_is_a_config_error_naming_reps() {
    let o = fracpost(&[
        "gwn-coverage",
        "--reps",
        "0",
        "--out",
        "/nonexistent/never-written",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`reps`"), "{}", stderr(&o));
}

#[test]
fn bad_config_fields_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (text, field) in [
        ("[study]\nkind = \"gwn-coverage\"\nlevel = 2.0\n", "level"),
        ("[study]\nkind = \"gwn-coverage\"\nbogus = 1\n", "bogus"),
        ("[study]\nkind = \"hist-bvm\"\n", "kind"),
    ] {
        let cfg = write(dir.path(), "bad.toml", text);
        let o = fracpost(&["gwn-coverage", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(field), "{field}: {}", stderr(&o));
    }
    let o = fracpost(&["validate-config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flags_are_rejected() {
    let o = fracpost(&["gwn-coverage", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_csv_and_paths_are_printed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "case1.toml",
        "[study]\nkind = \"gwn-coverage\"\nreps = 200\n",
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let a = fracpost(&[
        "gwn-coverage",
        &cfg,
        "--seed",
        "7",
        "--out",
        out_a.to_str().unwrap(),
    ]);
    let b = fracpost(&[
        "gwn-coverage",
        &cfg,
        "--seed",
        "7",
        "--threads",
        "2",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
    let printed: Vec<String> = stdout(&a).lines().map(String::from).collect();
    assert_eq!(printed.len(), 3);
    for p in &printed {
        assert!(Path::new(p).is_file(), "{p}");
    }
    for name in ["gwn-coverage.csv", "gwn-coverage_replications.csv"] {
        let x = std::fs::read(out_a.join(name)).unwrap();
        let y = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let c = fracpost(&[
        "gwn-coverage",
        &cfg,
        "--seed",
        "8",
        "--csv",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(stdout(&c).lines().count(), 2);
    assert_ne!(
        std::fs::read(out_a.join("gwn-coverage_replications.csv")).unwrap(),
        std::fs::read(out_b.join("gwn-coverage_replications.csv")).unwrap()
    );
}

#[test]
fn json_summary_carries_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = fracpost(&[
        "prop31-boundary",
        "--json",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("prop31-boundary.json")).unwrap();
    for key in [
        "\"schema\": 1",
        "\"study\": \"prop31-boundary\"",
        "\"params\"",
        "\"metrics\"",
        "\"seed\": 3",
        "\"build_id\"",
        "\"config_hash\"",
    ] {
        assert!(text.contains(key), "{key} missing:\n{text}");
    }
    assert!(!out.join("prop31-boundary.csv").exists());
}

#[test]
fn reps_override_on_study_without_reps() {
    let o = fracpost(&["prop31-boundary", "--reps", "5", "--out", "/nonexistent/x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`reps`"));
}
