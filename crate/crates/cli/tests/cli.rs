use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anagram_cli::records::{parse_records, strip_header_line, Summary};

fn anagram(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_anagram"));
    cmd.args(args).env_remove("ANAGRAM_OUTPUT_DIR").env_remove("ANAGRAM_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn small_config(out: &Path, seeds: &str, iterations: usize) -> String {
    format!(
        r#"output_dir = "{}"
seeds = {seeds}
log_level = "warn"

[model]
hidden_widths = [4]

[train]
max_iterations = {iterations}

[plots]
enabled = false

[[problems]]
name = "heat"
grid = {{ counts = [5, 5], boundary = 5, reference = 9 }}
"#,
        out.display()
    )
}

#[test]
fn one_iteration_writes_one_record() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &small_config(&out, "[3]", 1));
    let o = anagram(&["run", cfg.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("heat/seed-3/records.csv")).unwrap();
    assert_eq!(parse_records(&text).unwrap().len(), 1);
    let summary = Summary::load(&out.join("heat/seed-3/summary.json")).unwrap();
    assert!(summary.is_ok());
    assert_eq!(summary.iterations, Some(1));
}

#[test]
fn unknown_problem_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seeds = [0]\n[[problems]]\nname = \"wave\"\n");
    let o = anagram(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("problems[0].name"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seeds = [0]\n[train]\nepsilom = 1.0\n[[problems]]\nname = \"heat\"\n");
    let o = anagram(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilom"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &small_config(&out, "[0]", 1));
    let o = anagram(&["run", cfg.to_str().unwrap()], &[("ANAGRAM_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(2));
}

fn two_pass(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn table_csv(dirs: &[&Path], tmp: &Path) -> Vec<Vec<String>> {
    let csv = tmp.join("table.csv");
    let mut args = vec!["table".to_string()];
    args.extend(dirs.iter().map(|d| d.to_str().unwrap().to_string()));
    args.extend(["--csv".to_string(), csv.to_str().unwrap().to_string()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = anagram(&args, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(&csv).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn two_seed_std_matches_two_pass_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env-out");
    // the environment variable overrides the configured directory
    let cfg = write_config(tmp.path(), &small_config(Path::new("unused"), "[0, 1]", 2));
    let o = anagram(
        &["run", cfg.to_str().unwrap()],
        &[("ANAGRAM_OUTPUT_DIR", out.to_str().unwrap()), ("ANAGRAM_THREADS", "2")],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mse: Vec<f64> = (0..2)
        .map(|k| Summary::load(&out.join(format!("heat/seed-{k}/summary.json"))).unwrap().final_mse.unwrap())
        .collect();
    let (mean, std) = two_pass(&mse);
    let rows = table_csv(&[&out], tmp.path());
    assert_eq!(rows.len(), 1);
    let got_mean: f64 = rows[0][4].parse().unwrap();
    let got_std: f64 = rows[0][5].parse().unwrap();
    assert!((got_mean - mean).abs() <= 1e-14 * mean.abs());
    assert!((got_std - std).abs() <= 1e-10 * std.abs().max(f64::MIN_POSITIVE));
}

fn fake_summary(dir: &Path, seed: u64, mse: f64) {
    let d = dir.join(format!("heat/seed-{seed}"));
    std::fs::create_dir_all(&d).unwrap();
    let s = Summary {
        problem: "heat".into(),
        seed,
        strategy: "adaptive".into(),
        epsilon: 1e-10,
        status: "ok".into(),
        final_mse: Some(mse),
        final_rel_l2: Some(0.5),
        iterations: Some(3),
        termination: Some("iteration-cap".into()),
        error: None,
    };
    std::fs::write(d.join("summary.json"), s.to_json()).unwrap();
}

#[test]
fn table_of_synthetic_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    fake_summary(&runs, 0, 1e-4);
    fake_summary(&runs, 1, 4e-4);
    let rows = table_csv(&[&runs], tmp.path());
    assert_eq!(rows.len(), 1);
    let mean: f64 = rows[0][4].parse().unwrap();
    let std: f64 = rows[0][5].parse().unwrap();
    let (m, s) = two_pass(&[1e-4, 4e-4]);
    assert!((mean - 2.5e-4).abs() < 1e-18);
    assert!((std - s).abs() < 1e-18 && (m - mean).abs() < 1e-18);
    let o = anagram(&["table", runs.to_str().unwrap()], &[]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("2.50e-4 ± 2.12e-4"));
}

#[test]
fn table_edge_cases() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(table_csv(&[], tmp.path()).is_empty());
    let one = tmp.path().join("one");
    fake_summary(&one, 5, 1e-6);
    assert_eq!(table_csv(&[&one], tmp.path()).len(), 1);
    let missing = tmp.path().join("missing");
    let o = anagram(&["table", missing.to_str().unwrap(), one.to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing"));
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn copy_fixture(to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for f in ["records.csv", "rce_curves.csv", "summary.json"] {
        std::fs::copy(fixture_dir().join("plot_run").join(f), to.join(f)).unwrap();
    }
}

#[test]
fn plot_matches_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    copy_fixture(&run);
    let o = anagram(&["plot", run.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["loss.svg", "rce_t0.svg", "rce_t3.svg"] {
        let got = std::fs::read(run.join(f)).unwrap();
        let want = std::fs::read(fixture_dir().join("golden").join(f)).unwrap();
        assert!(got == want, "{f} differs from the golden copy");
    }
}

#[test]
fn plot_out_of_range_uses_nearest() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    copy_fixture(&run);
    let records = run.join("records.csv");
    let o = anagram(&["plot", records.to_str().unwrap(), "--iteration", "2", "--iteration", "99"], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not recorded"));
    assert!(run.join("rce_t3.svg").exists());
    assert!(!run.join("rce_t0.svg").exists());
}

#[test]
fn plot_single_iteration_with_constant_loss() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    std::fs::create_dir_all(&run).unwrap();
    std::fs::write(
        run.join("records.csv"),
        "# x\nt,train_loss,rel_l2,r_min,r_max,r_int,r_eps,elbow,eta,phase\n0,1e-3,,0,1,0,1,1,0,ignition\n",
    )
    .unwrap();
    std::fs::write(run.join("rce_curves.csv"), "# x\niteration,N,rce,sigma\n0,0,1e-3,\n0,1,1e-3,2.0\n").unwrap();
    let o = anagram(&["plot", run.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svgs: Vec<_> = std::fs::read_dir(&run)
        .unwrap()
        .filter_map(|e| e.unwrap().file_name().into_string().ok())
        .filter(|n| n.starts_with("rce_t"))
        .collect();
    assert_eq!(svgs, vec!["rce_t0.svg".to_string()]);
    assert!(std::fs::read_to_string(run.join("loss.svg")).unwrap().contains("<svg"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |out: &Path, f: &str| std::fs::read_to_string(out.join("heat/seed-4").join(f)).unwrap();
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("out{k}"));
        let cfg = write_config(tmp.path(), &small_config(&out, "[4]", 3));
        let o = anagram(&["run", cfg.to_str().unwrap()], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(out);
    }
    for f in ["records.csv", "rce_curves.csv"] {
        let (a, b) = (read(&outs[0], f), read(&outs[1], f));
        assert!(a.starts_with('#'));
        assert_eq!(strip_header_line(&a), strip_header_line(&b), "{f}");
    }
}

#[test]
fn selftest_passes() {
    let o = anagram(&["selftest"], &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}
