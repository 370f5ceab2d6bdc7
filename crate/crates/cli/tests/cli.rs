use std::path::PathBuf;
use std::process::{Command, Output};

fn crom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crom")).args(args).output().expect("run crom")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crom-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_samples(path: &PathBuf, x: &[f64]) {
    let bytes: Vec<u8> = x.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes).unwrap();
}

fn read_samples(path: &PathBuf) -> Vec<f64> {
    std::fs::read(path)
        .unwrap()
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

fn s(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

fn block(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919) % 1000) as f64 / 250.0 - 2.0).collect()
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

#[test]
fn encode_then_decode_prefixes() {
    let dir = scratch("roundtrip");
    let (input, stream, full, half) = (dir.join("x.f64"), dir.join("x.crom"), dir.join("full.f64"), dir.join("half.f64"));
    let x = block(256);
    write_samples(&input, &x);
    let out = crom(&["encode", s(&input), "-o", s(&stream), "--n", "256", "--rate", "1.0", "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    assert!(crom(&["decode", s(&stream), "-o", s(&full)]).status.success());
    assert!(crom(&["decode", s(&stream), "-o", s(&half), "--prefix-messages", "20"]).status.success());
    let (d_full, d_half) = (mse(&x, &read_samples(&full)), mse(&x, &read_samples(&half)));
    let power = mse(&x, &vec![0.0; 256]);
    assert!(d_full < d_half && d_half < power, "{d_full} {d_half} {power}");

    // a byte prefix decodes to the messages it fully holds
    let bytes = std::fs::read(&stream).unwrap();
    let cut = dir.join("cut.f64");
    let out = crom(&["decode", s(&stream), "-o", s(&cut), "--prefix-bytes", &(49 + 10).to_string()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("decoded 10 of"));
    assert!(bytes.len() > 59);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn exit_codes() {
    let dir = scratch("exit");
    let (input, stream, out_path) = (dir.join("x.f64"), dir.join("x.crom"), dir.join("y.f64"));
    write_samples(&input, &block(64));

    // wrong n is a configuration error
    let out = crom(&["encode", s(&input), "-o", s(&stream), "--n", "128", "--rate", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    // rate too low for a single message
    let out = crom(&["encode", s(&input), "-o", s(&stream), "--n", "64", "--rate", "0.001"]);
    assert_eq!(out.status.code(), Some(2));
    // unknown flag value rejected by the parser
    let out = crom(&["encode", s(&input), "-o", s(&stream), "--n", "64", "--rate", "1", "--scheme", "bogus"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&stream, b"NOPE and some more bytes to pass the header length check ........").unwrap();
    assert_eq!(crom(&["decode", s(&stream), "-o", s(&out_path)]).status.code(), Some(3));
    std::fs::write(&stream, b"CROM\x01").unwrap();
    assert_eq!(crom(&["decode", s(&stream), "-o", s(&out_path)]).status.code(), Some(3));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn simulate_writes_versioned_csv() {
    let out = crom(&[
        "simulate", "--codec", "crom", "--n", "64", "--rate", "0.5", "--trials", "3", "--scheme", "sparse-givens-dct",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# crom-curve v1"));
    assert!(lines.next().unwrap().starts_with("series,codec"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("measured,crom")).count(), 5);
    assert_eq!(csv.lines().filter(|l| l.starts_with("reference,crom")).count(), 5);

    let again = crom(&[
        "simulate", "--codec", "crom", "--n", "64", "--rate", "0.5", "--trials", "3", "--scheme", "sparse-givens-dct",
    ]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), csv);

    for codec in ["sparc", "zero-rate"] {
        let out = crom(&["simulate", "--codec", codec, "--n", "64", "--m", "16", "--trials", "2"]);
        assert!(out.status.success(), "{codec}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn zero_rate_and_channel_reports() {
    let out = crom(&["zero-rate", "--n", "1024", "--trials", "50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("n,k,alpha"));

    let out = crom(&["channel", "--n-grid", "16,64", "--trials", "100"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,trials,error_rate,P_n,R_n,capacity_ratio"));
    assert!(text.lines().nth(2).unwrap().starts_with("64,100,"));

    let out = crom(&["channel", "--n-grid", "1", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
}
