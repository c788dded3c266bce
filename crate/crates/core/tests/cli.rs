use std::process::Command;

fn mfspec(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mfspec")).args(args).output().unwrap()
}

#[test]
fn spectrum_writes_csv_and_json() {
    let dir = std::env::temp_dir().join(format!("mfspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("grid.csv");
    let json = dir.join("grid.json");
    for out in [&csv, &json] {
        let o = mfspec(&["spectrum", "--model", "full2", "--alpha-grid", "5", "--n", "8", "--k", "1", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 6);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 5);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn errors_are_reported_as_json() {
    let o = mfspec(&["fixedset", "--carpet", "s9"]);
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"], "UnknownCatalogEntry");
}

#[test]
fn bundled_model_files_load() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../models/");
    let o = mfspec(&["balls", "--model", &format!("{root}golden.json"), "--metric", &format!("{root}metric_half_quarter.json"), "--n", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = mfspec(&["pressure", "--model", "full2", "--potential", &format!("{root}cocycle_2x2.json"), "--n", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = mfspec(&["fdim", "--model", &format!("{root}full3.json"), "--potential", "digit:3", "--target", "constant:0.2", "--k", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = mfspec(&["spectrum", "--potential", &format!("{root}pair_frequency.json"), "--k", "2", "--alpha-grid", "3", "--n", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
