use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn tinysv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tinysv"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_tone(path: &Path, seconds: usize) {
    std::fs::write(path, tone_wav(16_000, seconds * 16_000)).unwrap();
}

/// A minimal PCM WAV with a 300 Hz tone, built by hand.
fn tone_wav(rate: u32, samples: usize) -> Vec<u8> {
    let data: Vec<u8> = (0..samples)
        .flat_map(|n| {
            let v = (8000.0 * (2.0 * std::f64::consts::PI * 300.0 * n as f64 / f64::from(rate)).sin()) as i16;
            v.to_le_bytes()
        })
        .collect();
    let mut out = Vec::new();
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(&data);
    out
}

#[test]
fn inspect_prints_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&tinysv(&["inspect"], dir.path()));
    assert!(text.contains("17,643") && text.contains("25,971") && text.contains("24,388"));
    assert!(text.contains("r=8, q=20, m=16, s=2"));
    assert!(text.contains("103884") && text.contains("97552"));
}

#[test]
fn bundles_classify_and_stream() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&tinysv(&["init-bundles", "."], d));
    assert!(d.join("models/keyword-spotter.twb").exists());

    let text = ok(&tinysv(&["inspect", "models/keyword-spotter.twb", "models/dvector-extractor.twb"], d));
    assert!(text.contains("memory budget"));

    write_tone(&d.join("clip.wav"), 2);
    let out = ok(&tinysv(&["ks", "classify", "clip.wav"], d));
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert!(v["y"].is_u64() && v["scores"].as_array().unwrap().len() == 3);

    let out = ok(&tinysv(&["run", "--input", "clip.wav"], d));
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    for (k, l) in lines.iter().enumerate() {
        assert_eq!(l["t"].as_f64().unwrap(), k as f64 * 0.25);
        assert!(l["x"].is_u64() && l["detail"].is_object());
    }
}

#[test]
fn run_reads_raw_pcm_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&tinysv(&["init-bundles", "."], d));
    let mut child = Command::new(env!("CARGO_BIN_EXE_tinysv"))
        .args(["run", "--input", "mic"])
        .current_dir(d)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let pcm = vec![0u8; 20_000 * 2 + 1];
    child.stdin.take().unwrap().write_all(&pcm).unwrap();
    let out = ok(&child.wait_with_output().unwrap());
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn enrollment_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("set.json"),
        r#"{"dim":3,"capacity":2,"threshold":0.7,"vectors":[[1,0,0],[0,1,0]]}"#,
    )
    .unwrap();
    ok(&tinysv(&["asv", "import", "set.json", "set.bin"], d));
    let text = ok(&tinysv(&["asv", "export", "set.bin"], d));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["capacity"], 2);
    assert_eq!(v["vectors"][1][1], 1.0);
    assert!((v["threshold"].as_f64().unwrap() - 0.7).abs() < 1e-6);

    std::fs::write(d.join("bad.json"), r#"{"dim":2,"capacity":1,"threshold":0.5,"vectors":[[1,0],[0,1]]}"#).unwrap();
    assert!(!tinysv(&["asv", "import", "bad.json", "bad.bin"], d).status.success());
}

#[test]
fn eval_run_on_synthetic_speakers() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&tinysv(
        &["eval", "run", "--methods", "asv,mcs", "--n", "1,8,16,64", "--csv", "r.csv"],
        dir.path(),
    ));
    assert!(out.contains("n=64") && out.contains("ASV") && out.contains("MCS"));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("method,n,speaker"));
    assert!(!tinysv(&["eval", "run", "--methods", "nope"], dir.path()).status.success());
}

#[test]
fn missing_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tinysv(&["run", "--input", "x.wav"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tinysv.toml"));
}
