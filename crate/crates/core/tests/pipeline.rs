use std::fs;
use std::path::{Path, PathBuf};

use pagrad_core::pipeline::{
    render_report, run_pag, run_phantom, run_radiomics, with_threads, RunConfig, RunOptions,
};
use pagrad_core::Error;

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.phantom.n_per_group = 10;
    cfg.grid = Some("n_trees=25".into());
    cfg
}

fn phantom(cfg: &RunConfig, dir: &Path) -> PathBuf {
    run_phantom(cfg, &dir.join("phantom")).unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn phantom_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let a = run_phantom(&cfg, &dir.path().join("a")).unwrap();
    let b = run_phantom(&cfg, &dir.path().join("b")).unwrap();
    assert_eq!(read(&a), read(&b));
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a/volumes"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(
            fs::read(dir.path().join("a/volumes").join(&n)).unwrap(),
            fs::read(dir.path().join("b/volumes").join(&n)).unwrap()
        );
    }
}

#[test]
fn pag_report_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let manifest = phantom(&cfg, dir.path());
    let mut reports = Vec::new();
    for threads in [1, 3] {
        let out = dir.path().join(format!("pag{threads}"));
        with_threads(threads, || {
            run_pag(&manifest, &cfg, &out, RunOptions::default())
        })
        .unwrap()
        .unwrap();
        reports.push((
            read(out.join("report.json")),
            read(out.join("predictions.csv")),
        ));
    }
    assert_eq!(reports[0], reports[1]);

    let out = dir.path().join("pag1");
    let report: serde_json::Value = serde_json::from_str(&reports[0].0).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!(report.get("generated_at").is_none());
    for region in report["regions"].as_array().unwrap() {
        assert_eq!(region["graph_summary"].as_array().unwrap().len(), 6);
    }
    assert!(report["fusion"].is_object());
    assert!(read(out.join("cohort_graph_report.csv"))
        .starts_with("region,group,statistic,n,min,q1,median,q3,max\n"));
    assert!(render_report(&out.join("report.json"))
        .unwrap()
        .contains("left_cistern"));
}

#[test]
fn timestamp_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let manifest = phantom(&cfg, dir.path());
    let out = dir.path().join("pag");
    let r = run_pag(&manifest, &cfg, &out, RunOptions { timestamp: true }).unwrap();
    assert!(r.generated_at.is_some());
    assert!(read(out.join("report.json")).contains("\"generated_at\""));
}

#[test]
fn missing_volume_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let manifest = phantom(&cfg, dir.path());
    let victim = fs::read_dir(dir.path().join("phantom/volumes"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "hdr"))
        .unwrap();
    fs::remove_file(&victim).unwrap();
    let err = run_pag(
        &manifest,
        &cfg,
        &dir.path().join("out"),
        RunOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
    assert!(!err.is_analysis_failure());
    let name = victim.file_name().unwrap().to_string_lossy().into_owned();
    assert!(err.to_string().contains(&name), "{err}");
}

#[test]
fn radiomics_writes_drop_logs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.phantom.n_per_group = 10;
    cfg.grid = Some("n_trees=100".into());
    let manifest = phantom(&cfg, dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let report = run_radiomics(&manifest, &cfg, &a, RunOptions::default()).unwrap();
    run_radiomics(&manifest, &cfg, &b, RunOptions::default()).unwrap();
    assert_eq!(read(a.join("report.json")), read(b.join("report.json")));
    assert_eq!(
        report.feature_selection_scope.as_deref(),
        Some("per_training_fold")
    );

    for region in &report.regions {
        let name = region.region.to_string();
        let header = read(a.join("features").join(format!("{name}.csv")));
        let all: Vec<&str> = header.lines().next().unwrap().split(',').skip(2).collect();
        let drops = read(a.join("drops").join(format!("{name}.csv")));
        let mut lines = drops.lines();
        assert_eq!(lines.next(), Some("feature,rule,statistic"));
        let dropped: Vec<String> = lines
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                assert!(
                    matches!(cols[1], "target_correlation" | "pairwise_correlation"),
                    "{l}"
                );
                cols[0].to_string()
            })
            .collect();
        let selection = region.final_selection.as_ref().unwrap();
        let reduced: Vec<&str> = all
            .iter()
            .copied()
            .filter(|f| !dropped.iter().any(|d| d == f))
            .collect();
        for f in &selection.features {
            assert!(
                reduced.contains(&f.as_str()),
                "{f} selected after being dropped"
            );
        }
        assert_eq!(dropped.len() + reduced.len(), all.len());
        assert!(a
            .join("importance")
            .join(format!("{name}_splits.csv"))
            .exists());
    }
}
