use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use msef_cli::commands::curate::CurationSummary;
use msef_cli::commands::evaluate::PredictionRow;
use msef_cli::report::{schema, EvalReport};
use msef_data::io::{read_csv, read_images, write_csv, write_images};
use msef_data::likert::HumanScore;
use msef_data::synth::truth_scores;
use msef_data::DimensionRegistry;

const SMALL: &str = r#"
seed = 7
[generate]
communities = 10
images_per_community = 8
[train]
epochs = 2
steps_per_epoch = 3
[evaluate]
max_images = 6
repetitions = 2
"#;

fn msef(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_msef"));
    cmd.args(args).arg("--config").arg(dir.join("run.toml")).env_remove("MSEF_REPORT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> String {
    let out = msef(dir, args, env);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

fn full_run(dir: &Path, env: &[(&str, &str)]) -> Vec<u8> {
    for stage in [&["generate", "--create"][..], &["curate"], &["train"], &["evaluate"], &["audit"]] {
        ok(dir, stage, env);
    }
    std::fs::read(dir.join("report/report.json")).unwrap()
}

fn report(dir: &Path) -> EvalReport {
    serde_json::from_slice(&std::fs::read(dir.join("report/report.json")).unwrap()).unwrap()
}

#[test]
fn pipeline_is_byte_deterministic_across_thread_counts() {
    let (a, b) = (setup(SMALL), setup(SMALL));
    let ra = full_run(a.path(), &[("RAYON_NUM_THREADS", "1")]);
    let rb = full_run(b.path(), &[("RAYON_NUM_THREADS", "4")]);
    assert_eq!(ra, rb);
    for f in ["train/checkpoint.json", "eval/predictions.csv", "curated/triplets.jsonl"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let r = report(a.path());
    for f in ["eval/predictions.csv", "curated/human_scores.csv", "train/checkpoint.json"] {
        let digest = msef_data::io::sha256_file(&a.path().join(f)).unwrap();
        assert_eq!(r.inputs.get(f), Some(&digest), "{f}");
    }
    assert_eq!(r.figures.len(), 4, "{:?}", r.omitted_figures);
    for f in &r.figures {
        let svg = std::fs::read_to_string(a.path().join(f)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    let validator = jsonschema::validator_for(&schema()).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:?}");
    let published: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("report/report.schema.json")).unwrap()).unwrap();
    assert_eq!(published, schema());
}

#[test]
fn schema_rejects_malformed_reports() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    assert!(!validator.is_valid(&serde_json::json!({"schema_version": "1.0.0"})));
    let dir = setup(SMALL);
    full_run(dir.path(), &[]);
    let mut doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report/report.json")).unwrap()).unwrap();
    assert!(validator.is_valid(&doc));
    doc["macro_f1"] = serde_json::json!({"status": "ok", "value": 1.5});
    assert!(!validator.is_valid(&doc));
    doc["macro_f1"] = serde_json::json!({"status": "omitted"});
    assert!(!validator.is_valid(&doc));
}

#[test]
fn predictions_equal_to_reference_score_perfectly() {
    let dir = setup(SMALL);
    ok(dir.path(), &["generate", "--create"], &[]);
    ok(dir.path(), &["curate"], &[]);
    let d = dir.path();
    let images = read_images(&d.join("curated/images.jsonl")).unwrap();
    let humans: Vec<HumanScore> = read_csv(&d.join("curated/human_scores.csv")).unwrap();
    let human: BTreeMap<(String, String), f64> =
        humans.into_iter().map(|h| ((h.image_id, h.dimension), h.normalized_mean)).collect();
    let registry = DimensionRegistry::default();
    let mut rows = Vec::new();
    for image in &images {
        let truth = truth_scores(image);
        for dim in registry.keys() {
            let score = human.get(&(image.image_id.clone(), dim.to_string())).copied().unwrap_or(truth[dim]);
            rows.push(PredictionRow {
                image_id: image.image_id.clone(),
                dimension: dim.to_string(),
                score,
                repetition_sd: 0.0,
                rationale: String::new(),
            });
        }
    }
    std::fs::create_dir_all(d.join("eval")).unwrap();
    write_csv(&d.join("eval/predictions.csv"), &rows).unwrap();
    let out = ok(d, &["audit"], &[]);
    assert!(out.contains("figure attention_heatmap.svg") && out.contains("no checkpoint"), "{out}");
    let r = report(d);
    assert_eq!(r.macro_f1.value(), Some(&1.0));
    for (dim, c) in &r.classification {
        assert_eq!(c.value().unwrap().report.macro_avg.f1, 1.0, "{dim}");
    }
    let agreement = r.agreement.value().unwrap();
    assert_eq!((agreement.exact, agreement.fuzzy), (1.0, 1.0));
    for (dim, ba) in &r.bland_altman {
        let ba = ba.value().unwrap();
        assert!(ba.bias.abs() < 1e-12 && ba.sd.abs() < 1e-12, "{dim}");
    }
    assert_eq!(r.out_of_range.value().unwrap().rate, 0.0);
    assert!(r.omitted_figures.contains_key("attention_heatmap.svg"));
}

#[test]
fn ols_table_lists_every_planted_predictor() {
    let dir = setup(SMALL);
    full_run(dir.path(), &[]);
    let r = report(dir.path());
    let ols = r.ols.value().unwrap();
    let names: Vec<&str> = ols.coefficients.iter().map(|c| c.name.as_str()).collect();
    let mut expected = vec!["const"];
    expected.extend(msef_data::synth::TABLE1_BETAS.iter().map(|(k, _)| *k));
    assert_eq!(names, expected);
    let csv = std::fs::read_to_string(dir.path().join("report/tables/ols.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("term,beta,se,t,p,ci_lo,ci_hi"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn too_few_predictions_omit_statistics_with_reasons() {
    let dir = setup(&SMALL.replace("max_images = 6", "max_images = 2"));
    full_run(dir.path(), &[]);
    let r = report(dir.path());
    match &r.normality {
        msef_cli::report::Stat::Omitted { reason } => assert!(!reason.is_empty()),
        other => panic!("{other:?}"),
    }
    assert!(r.classification.values().all(|c| c.value().is_none()));
    assert!(r.macro_f1.value().is_none());
    assert!(r.ols.value().is_some());
}

#[test]
fn resumed_training_repeats_an_uninterrupted_run() {
    let (whole, split) = (setup(SMALL), setup(&SMALL.replace("epochs = 2", "epochs = 1")));
    for d in [whole.path(), split.path()] {
        ok(d, &["generate", "--create"], &[]);
        ok(d, &["curate"], &[]);
        ok(d, &["train"], &[]);
    }
    std::fs::write(split.path().join("run.toml"), SMALL).unwrap();
    let out = ok(split.path(), &["train", "--resume"], &[]);
    assert!(out.contains("trained steps 3..6"), "{out}");
    for f in ["train/checkpoint.json", "train/loss.csv", "train/swaps.jsonl", "train/state.json"] {
        assert_eq!(std::fs::read(whole.path().join(f)).unwrap(), std::fs::read(split.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn planted_duplicate_is_removed_once() {
    let dir = setup(SMALL);
    ok(dir.path(), &["generate", "--create"], &[]);
    let path = dir.path().join("corpus/images.jsonl");
    let mut images = read_images(&path).unwrap();
    let mut copy = images[3].clone();
    copy.image_id = "copy-of-3".into();
    copy.capture_time += 60;
    copy.lat += 0.01;
    images.push(copy);
    write_images(&path, &images).unwrap();
    ok(dir.path(), &["curate"], &[]);
    let summary: CurationSummary =
        serde_json::from_slice(&std::fs::read(dir.path().join("curated/curation.json")).unwrap()).unwrap();
    assert_eq!(summary.duplicates_removed, 1);
    let kept = read_images(&dir.path().join("curated/images.jsonl")).unwrap();
    assert!(kept.iter().all(|i| i.image_id != "copy-of-3"));
    assert!(kept.iter().any(|i| i.image_id == images[3].image_id));
}

#[test]
fn missing_inputs_are_user_errors() {
    let dir = setup(SMALL);
    let out = msef(dir.path(), &["generate"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--create"));

    ok(dir.path(), &["generate", "--create"], &[]);
    std::fs::remove_file(dir.path().join("corpus/ratings.csv")).unwrap();
    let out = msef(dir.path(), &["curate"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing input") && err.contains("ratings"), "{err}");
    assert!(!dir.path().join("curated/triplets.jsonl").exists());

    for stage in ["train", "evaluate", "audit"] {
        assert_eq!(msef(dir.path(), &[stage], &[]).status.code(), Some(1), "{stage}");
    }
}

#[test]
fn empty_validation_split_is_rejected() {
    let dir = setup(&format!("{SMALL}\n[curation]\nval_fraction = 0.0\n"));
    ok(dir.path(), &["generate", "--create"], &[]);
    ok(dir.path(), &["curate"], &[]);
    ok(dir.path(), &["train"], &[]);
    let out = msef(dir.path(), &["evaluate"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("validation split is empty"));
}

#[test]
fn bad_config_and_arguments_exit_with_user_error() {
    let dir = setup("seed = 1\n[generate]\ncommunitees = 3\n");
    let out = msef(dir.path(), &["generate", "--create"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("communitees"));
    let out = Command::new(env!("CARGO_BIN_EXE_msef")).arg("explode").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_msef")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn report_directory_and_seed_overrides() {
    let dir = setup(SMALL);
    let elsewhere: PathBuf = dir.path().join("elsewhere");
    let e = elsewhere.to_str().unwrap();
    for stage in [&["generate", "--create"][..], &["curate"], &["train"], &["evaluate"], &["audit"]] {
        ok(dir.path(), stage, &[("MSEF_REPORT_DIR", e)]);
    }
    assert!(elsewhere.join("report.json").exists());
    assert!(!dir.path().join("report").exists());

    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let a = ok(dir.path(), &["generate", "--create", "--seed", "8", "--out", o], &[]);
    let b = ok(dir.path(), &["generate", "--create"], &[]);
    assert_ne!(a.lines().last(), b.lines().last());
    assert!(out.path().join("corpus/manifest.json").exists());
}
