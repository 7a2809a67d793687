use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn zoosynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zoosynth"))
        .args(args)
        .env_remove("ZOOSYNTH_BACKEND_URL")
        .output()
        .expect("binary runs")
}

fn demo(dir: &Path) -> PathBuf {
    let out = dir.join("assets");
    let o = zoosynth(&["demo-assets", "--out", out.to_str().unwrap(), "--poses", "40", "--dim", "8", "--no-banks"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "toml"))
        .expect("config written")
}

#[test]
fn generate_preview_split_eval() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo(dir.path());
    let data = dir.path().join("data");
    let o = zoosynth(&[
        "generate", "--config", config.to_str().unwrap(), "--out", data.to_str().unwrap(),
        "-n", "6", "--seed", "5", "--image-size", "64", "--workers", "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = data.join("manifest.jsonl");
    let lines = std::fs::read_to_string(&manifest).unwrap().lines().count();
    assert_eq!(lines, 7);

    let first = std::fs::read_to_string(&manifest).unwrap().lines().nth(1).unwrap().to_string();
    let rec: serde_json::Value = serde_json::from_str(&first).unwrap();
    let id = rec["sample_id"].as_str().unwrap();
    let preview = dir.path().join("preview.png");
    let o = zoosynth(&[
        "preview", "--manifest", manifest.to_str().unwrap(), "--sample", id, "--out", preview.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read(&preview).unwrap().starts_with(b"\x89PNG"));

    let split = dir.path().join("split");
    let o = zoosynth(&["split", "--manifest", manifest.to_str().unwrap(), "--out", split.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(split.join("train.jsonl").exists() && split.join("test.jsonl").exists());

    let predictions: String = std::fs::read_to_string(&manifest)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let r: serde_json::Value = serde_json::from_str(l).unwrap();
            let p = serde_json::json!({"sample_id": r["sample_id"], "betas": r["betas"], "pose": r["pose"]});
            format!("{p}\n")
        })
        .collect();
    let pred_path = dir.path().join("pred.jsonl");
    std::fs::write(&pred_path, predictions).unwrap();
    let csv = dir.path().join("scores.csv");
    let o = zoosynth(&[
        "eval", "--manifest", manifest.to_str().unwrap(), "--predictions", pred_path.to_str().unwrap(),
        "--config", config.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PCK@"));
    let mean = std::fs::read_to_string(&csv).unwrap().lines().last().unwrap().to_string();
    assert!(mean.starts_with("mean,1.000000000,"), "{mean}");
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoosynth(&[
        "generate", "--config", dir.path().join("absent.toml").to_str().unwrap(), "--out", dir.path().join("d").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_asset_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo(dir.path());
    let text = std::fs::read_to_string(&config).unwrap();
    let broken = config.with_file_name("broken.toml");
    std::fs::write(&broken, text.replace("body_model = \"body_model.zsb\"", "body_model = \"nowhere.zsb\"")).unwrap();
    let o = zoosynth(&[
        "generate", "--config", broken.to_str().unwrap(), "--out", dir.path().join("d").to_str().unwrap(), "-n", "1", "--image-size", "32",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unreachable_backend_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo(dir.path());
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut text = std::fs::read_to_string(&config).unwrap();
    let http = format!("[backend]\nkind = \"http\"\nendpoint = \"http://127.0.0.1:{port}\"\nmax_retries = 0\ntimeout_secs = 2.0\n");
    assert!(text.contains("[backend]\nkind = \"stub\"\n"));
    text = text.replace("[backend]\nkind = \"stub\"\n", &http);
    std::fs::write(&config, text).unwrap();
    let o = zoosynth(&[
        "generate", "--config", config.to_str().unwrap(), "--out", dir.path().join("d").to_str().unwrap(),
        "-n", "2", "--image-size", "32", "--failure-threshold", "0",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let o = zoosynth(&["frobnicate"]);
    assert!(!o.status.success());
}
