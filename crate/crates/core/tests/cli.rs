use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quantevo::dataset::write_dataset;
use quantevo::experiment::MetricsReport;
use quantevo::{load_dataset, synth, FeatureVector, QuantizationGenome};

const SMALL_GA: &[&str] = &["--population", "12", "--generations", "3", "--seed", "4"];

fn quantevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quantevo"))
        .args(args)
        .output()
        .expect("run quantevo")
}

fn ok(args: &[&str]) -> String {
    let out = quantevo(args);
    assert!(
        out.status.success(),
        "quantevo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = quantevo(args);
    assert!(!out.status.success(), "quantevo {args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn dataset(dir: &Path, classes: usize, per_class: usize) -> String {
    let root = dir.join("data");
    write_dataset(&synth::random_palettes(classes, per_class, 10, 9), &root).unwrap();
    root.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn loading_skips_undecodable_files_and_rejects_empty_roots() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 2, 3);
    fs::write(Path::new(&root).join("k1").join("broken.ppm"), b"P6\n4 4\n255\n").unwrap();
    let (data, manifest) = load_dataset(&root).unwrap();
    assert_eq!(data.len(), 6);
    assert_eq!(manifest.skipped().count(), 1);

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert!(load_dataset(&empty).is_err());
}

#[test]
fn extract_with_genome_file() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 2, 3);
    let genome = dir.path().join("ones.txt");
    fs::write(&genome, QuantizationGenome::all_ones(8).unwrap().to_line()).unwrap();
    let out = dir.path().join("features.txt");

    let stdout = ok(&[
        "extract", "--dataset", &root, "--descriptor", "gch", "--genome", s(&genome), "--out", s(&out),
    ]);
    assert!(stdout.contains("dimension 512"), "{stdout}");
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    for line in lines {
        let v = FeatureVector::parse_line(line).unwrap();
        assert_eq!(v.dimension(), 512);
        let max = v.values().iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
    }
}

#[test]
fn extract_reports_missing_genome_file() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 2, 2);
    let missing = dir.path().join("nope.txt");
    let out = dir.path().join("features.txt");
    let stderr = fails(&["extract", "--dataset", &root, "--genome", s(&missing), "--out", s(&out)]);
    assert!(stderr.contains("nope.txt"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn optimize_respects_limit_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 3, 3);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["optimize", "--dataset", &root, "--limit", "64", "--out", s(&out)];
        args.extend_from_slice(SMALL_GA);
        ok(&args);
        out
    };
    let a = run("a");
    let b = run("b");
    let genome = fs::read_to_string(a.join("genome.txt")).unwrap();
    assert_eq!(genome, fs::read_to_string(b.join("genome.txt")).unwrap());
    assert_eq!(
        fs::read_to_string(a.join("evolution.csv")).unwrap(),
        fs::read_to_string(b.join("evolution.csv")).unwrap()
    );
    let genome = QuantizationGenome::parse(genome.trim()).unwrap();
    assert!(genome.dimension(quantevo::Descriptor::Bic) <= 64);
    assert!(a.join("manifest.json").exists());
}

#[test]
fn optimize_with_zero_generations_keeps_initial_population() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 2, 3);
    let out = dir.path().join("opt");
    let stdout = ok(&[
        "optimize", "--dataset", &root, "--out", s(&out), "--population", "6", "--generations", "0",
    ]);
    assert!(stdout.contains("generation 0"), "{stdout}");
    let log = fs::read_to_string(out.join("evolution.csv")).unwrap();
    // header plus generation 0
    assert_eq!(log.lines().count(), 2);
}

#[test]
fn evaluate_baseline_only() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 2, 5);
    let out = dir.path().join("eval");
    ok(&["evaluate", "--dataset", &root, "--methods", "baseline", "--out", s(&out)]);
    let report: MetricsReport =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.methods.len(), 1);
    assert!(report.t_tests.is_empty());
    assert!(out.join("fold0").join("baseline_metrics.csv").exists());
    assert!(!out.join("fold0").join("nla_genome.txt").exists());
}

#[test]
fn evaluate_learned_methods_with_limits() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 3, 4);
    let out = dir.path().join("eval");
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# small run\npopulation = 12\ngenerations = 2\nfolds = 3\n").unwrap();
    ok(&[
        "evaluate", "--config", s(&conf), "--dataset", &root, "--limit", "64,128", "--out", s(&out),
    ]);
    let report: MetricsReport =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.methods.len(), 4);
    // three learned methods, two metrics each
    assert_eq!(report.t_tests.len(), 6);
    assert_eq!(report.fold_plan.k, 3);
    for f in 0..3 {
        for m in ["nla", "la64", "la128"] {
            assert!(out.join(format!("fold{f}")).join(format!("{m}_genome.txt")).exists());
        }
    }
}

#[test]
fn evaluate_rejects_more_folds_than_images() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 2, 2);
    let out = dir.path().join("eval");
    fails(&["evaluate", "--dataset", &root, "--folds", "5", "--out", s(&out)]);
    assert!(!out.join("report.json").exists());
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let root = dataset(dir.path(), 2, 2);
    let out = dir.path().join("x");
    fails(&["extract", "--dataset", &root, "--descriptor", "hsv", "--baseline", "4", "--out", s(&out)]);
    fails(&["extract", "--dataset", &root, "--baseline", "3", "--out", s(&out)]);
    fails(&["optimize", "--dataset", &root, "--limit", "16,32", "--out", s(&out)]);
    fails(&["evaluate", "--dataset", &root, "--methods", "magic", "--out", s(&out)]);
}
