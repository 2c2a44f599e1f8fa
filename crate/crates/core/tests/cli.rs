use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cscode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cscode")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = cscode(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn capacity_and_rate_table() {
    assert!(ok(&["capacity", "dcfree:5"]).contains("capacity=0.792481"));
    assert!(ok(&["capacity", "rll:1,3"]).contains("capacity=0.551463"));
    let table = ok(&["rate-table", "--capacity", "0.7925", "--kmax", "20"]);
    assert!(table.lines().any(|l| l == "2\t3\t0.6667\t84.12"));
    assert!(table.lines().any(|l| l == "19\t24\t0.7917\t99.89"));
    assert_eq!(table.lines().count(), 21);
}

#[test]
fn encode_and_decode() {
    assert_eq!(ok(&["encode", "--codebook", "builtin:4b6b", "0000"]).trim(), "001110");
    assert_eq!(ok(&["decode", "--codebook", "builtin:4b6b", "001110"]).trim(), "0000");
    assert_eq!(ok(&["decode", "--codebook", "builtin:rll13", "010001001"]).trim(), "01110");
    let resync = ok(&["decode", "--codebook", "builtin:rll13", "--method", "resync", "010011001"]);
    assert_eq!(resync.trim(), "01010");
    let coded = ok(&["encode", "--codebook", "builtin:dcfree-vl", "0001101000"]);
    let back = ok(&["decode", "--codebook", "builtin:dcfree-vl", coded.trim()]);
    assert_eq!(back.trim(), "0001101000");
}

#[test]
fn exit_codes() {
    assert_eq!(cscode(&["capacity", "nonsense"]).status.code(), Some(2));
    assert_eq!(cscode(&["encode", "--codebook", "builtin:4b6b", "012"]).status.code(), Some(2));
    assert_eq!(cscode(&["sweep", "--config", "/nonexistent.txt", "--out", "/tmp/x"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("diverge.txt");
    fs::write(&cfg, "arch=mlp\nepochs=50\nlr=1e300\n").unwrap();
    let out = dir.path().join("run");
    let o = cscode(&["train-fl", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    fs::write(&cfg, "arch=mlp\nunknown_key=1\n").unwrap();
    let o = cscode(&["train-fl", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_documents_the_snr_convention() {
    let help = ok(&["--help"]);
    assert!(help.contains("Eb/N0"));
    assert!(help.contains("Exit codes"));
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn train_sweep_nve_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut runs = Vec::new();
    for snr in [1, 4] {
        let cfg = d.join(format!("train{snr}.txt"));
        write(
            &cfg,
            &format!("arch=mlp\nepochs=300\ntrain_snr_db={snr}\nvalidate_snrs=2,4\nvalidate_bits=4000\n"),
        );
        let run = d.join(format!("run{snr}"));
        ok(&["train-fl", "--config", cfg.to_str().unwrap(), "--out", run.to_str().unwrap(), "--quiet"]);
        for f in ["config.txt", "loss.csv", "model.ckpt", "nve.csv"] {
            assert!(run.join(f).exists(), "{f} missing");
        }
        let loss = fs::read_to_string(run.join("loss.csv")).unwrap();
        assert!(loss.starts_with("epoch,loss\n"));
        assert_eq!(loss.lines().count(), 301);
        runs.push(run);
    }
    let nve = ok(&["nve", "--runs", runs[0].to_str().unwrap(), runs[1].to_str().unwrap()]);
    assert!(nve.contains("selected"));
    assert_eq!(nve.matches('*').count(), 1);

    let ckpt = runs[0].join("model.ckpt");
    let sweep_cfg = d.join("sweep.txt");
    write(
        &sweep_cfg,
        &format!("decoder=dnn:{}\nsnrs=0:4:2\nmax_bits=20000\nseed=5\n", ckpt.display()),
    );
    let out = d.join("sweep");
    ok(&["sweep", "--config", sweep_cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    for f in ["sweep.csv", "sweep.txt", "sweep.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("snr_db,trials,bit_errors,block_errors,ber,bler,ci95\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(fs::read_to_string(out.join("sweep.txt")).unwrap().contains("config_hash="));

    let map_cfg = d.join("map.txt");
    write(&map_cfg, "decoder=map\nsnrs=0:4:2\nmax_bits=20000\nseed=5\n");
    let map_out = d.join("map");
    ok(&["sweep", "--config", map_cfg.to_str().unwrap(), "--out", map_out.to_str().unwrap()]);

    let svg = d.join("both.svg");
    ok(&[
        "plot",
        "--out",
        svg.to_str().unwrap(),
        out.join("sweep.csv").to_str().unwrap(),
        map_out.join("sweep.csv").to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 2);
}

#[test]
fn variable_length_sweep_writes_raw_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("vl.txt");
    write(&cfg, "decoder=vl-resync\ncodebook=builtin:rll13\nsnrs=4,8\nmax_bits=20000\n");
    let out = dir.path().join("out");
    ok(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let raw = fs::read_to_string(out.join("raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 3);
    let svg = fs::read_to_string(out.join("sweep.svg")).unwrap();
    assert!(svg.contains(">raw<"));
}
