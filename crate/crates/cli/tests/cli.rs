use std::path::Path;
use std::process::{Command, Output};

fn confinv(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confinv"))
        .args(args)
        .env("CONFINV_OUT_DIR", out)
        .output()
        .expect("run confinv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn reports(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

#[test]
fn canon_merges_equivalent_terms() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(&["canon", "Ric[a,b]*Ric[b,a] + Ric[c,d]*Ric[c,d]"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "2 * Ric[i,j]*Ric[i,j]");
    assert!(reports(dir.path()).is_empty());
}

#[test]
fn syntax_error_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(&["canon", "R[a,b"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("column"));
}

#[test]
fn bad_contraction_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(&["canon", "R[a,a,a,b]"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn vary_rejects_wrong_weight() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(&["vary", "P[a,a]", "--order", "1", "--n", "4"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn vary_prints_truncation_marker() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(
        &["vary", "P[a,a]*P[b,b]", "--order", "1", "--n", "4", "--max-length", "2"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("O(length >= 3)"), "{text}");
    assert!(text.contains("P[i,i]*phi[j,j]"), "{text}");
}

#[test]
fn vary_second_order_of_trace_square() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(&["vary", "P[a,a]*P[b,b]", "--order", "2", "--n", "4"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("phi[i,i]*phi[j,j]"), "{text}");
    assert!(!text.contains("O(length"), "{text}");
}

#[test]
fn sphere_check_writes_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["check-gb", "--n", "4", "--topology", "sphere"];
    let first = confinv(&args, dir.path());
    assert!(first.status.success());
    let files = reports(dir.path());
    assert_eq!(files.len(), 1);
    let name = files[0].file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.starts_with("check-gb-") && name.len() == "check-gb-".len() + 16 + 5, "{name}");
    let text = std::fs::read_to_string(&files[0]).unwrap();

    let again = confinv(&args, dir.path());
    assert!(again.status.success());
    assert_eq!(reports(dir.path()), files);
    assert_eq!(std::fs::read_to_string(&files[0]).unwrap(), text);

    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["tool"], "confinv");
    assert_eq!(json["pass"], true);
    assert_eq!(json["config"]["topology"], "sphere");
    assert_eq!(json["result"]["euler_characteristic"], 2);
}

#[test]
fn out_flag_overrides_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = confinv(
        &["check-gb", "--n", "2", "--grid", "16", "--out", flag_dir.path().to_str().unwrap()],
        env_dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(reports(env_dir.path()).is_empty());
    assert_eq!(reports(flag_dir.path()).len(), 1);
}

#[test]
fn different_seeds_get_different_reports() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2"] {
        let o = confinv(&["check-gb", "--n", "2", "--grid", "16", "--seed", seed], dir.path());
        assert!(o.status.success());
    }
    assert_eq!(reports(dir.path()).len(), 2);
}

#[test]
fn odd_dimension_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(&["kernel", "--n", "5"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(reports(dir.path()).is_empty());
}

#[test]
fn impossible_tolerance_is_a_verification_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(&["check-gb", "--n", "2", "--grid", "4", "--tol", "0"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    let files = reports(dir.path());
    assert_eq!(files.len(), 1);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(json["pass"], false);
}

#[test]
fn kernel_in_four_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = confinv(&["kernel", "--n", "4", "--grid", "8"], dir.path());
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("kernel dimension: 1"));
}
