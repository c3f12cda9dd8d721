use std::process::Command;

fn chorale() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chorale"));
    c.env("RUST_LOG", "warn");
    c
}

#[test]
fn prints_a_loadable_default_config() {
    let out = chorale().arg("--print-default-config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("num_tracks = 50"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("default.toml");
    std::fs::write(&path, &text).unwrap();
    // A config file with an invalid value is a configuration error.
    std::fs::write(dir.path().join("bad.toml"), text.replace("frame_rate = 250.0", "frame_rate = 300.0")).unwrap();
    let bad = chorale()
        .args(["generate", "--config"])
        .arg(dir.path().join("bad.toml"))
        .arg("--out")
        .arg(dir.path().join("never"))
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!dir.path().join("never").exists());
}

#[test]
fn unknown_ensemble_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = chorale().args(["generate", "--ensembles", "kazoo", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_validate_stats() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("corpus");
    let gen = chorale()
        .args(["generate", "--num-tracks", "1", "--ensembles", "string,random", "--seed", "11", "--workers", "1", "--out"])
        .arg(&root)
        .output()
        .unwrap();
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let manifest = std::fs::read_to_string(root.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 2);

    let val = chorale().arg("validate").arg(&root).output().unwrap();
    assert!(val.status.success());
    assert!(String::from_utf8_lossy(&val.stdout).contains("2 tracks checked, 0 with violations"));

    let stats_dir = dir.path().join("stats");
    let st = chorale().arg("stats").arg(&root).arg("--out").arg(&stats_dir).output().unwrap();
    assert!(st.status.success());
    let hist = std::fs::read_to_string(stats_dir.join("histograms.csv")).unwrap();
    assert!(hist.starts_with("histogram,bin_low,bin_high,count,mass"));
    assert_eq!(hist.lines().filter(|l| l.starts_with("frame_deviation")).count(), 100);
    let summary = std::fs::read_to_string(stats_dir.join("summary.csv")).unwrap();
    assert!(summary.contains("\nstring,1,") && summary.contains("\nrandom,1,"));

    // Regenerating without --overwrite fails per track.
    let again = chorale()
        .args(["generate", "--num-tracks", "1", "--ensembles", "string", "--seed", "11", "--workers", "1", "--out"])
        .arg(&root)
        .output()
        .unwrap();
    assert_eq!(again.status.code(), Some(1));

    // Corrupt one WAV: exactly that track is flagged.
    let entry = manifest.lines().next().unwrap();
    let path: String = entry.split("\"path\":\"").nth(1).unwrap().split('"').next().unwrap().to_string();
    std::fs::write(root.join(&path).join("mix.wav"), b"RIFFjunk").unwrap();
    let val = chorale().arg("validate").arg(&root).output().unwrap();
    assert_eq!(val.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&val.stdout).contains("2 tracks checked, 1 with violations"));
}

#[test]
fn validate_missing_root() {
    let out = chorale().args(["validate", "/nonexistent/corpus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
