use std::path::Path;
use std::process::{Command, Output};

use microring_rc::experiment::{CellStatus, ResultMap};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_microring-rc"))
}

fn run_in(dir: &Path, args: &[&str], workers: &str) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .env("MICRORING_WORKERS", workers)
        .output()
        .unwrap()
}

fn read_map(path: &Path) -> ResultMap {
    ResultMap::read_csv(std::fs::read_to_string(path).unwrap().as_bytes()).unwrap()
}

const XOR: &str = r#"
kind = "xor_rc"
seed = 5
output = "out"

[[axis]]
name = "bitrate"
values = ["50Mbps", "110Mbps", "2Gbps"]

[settings]
washout = 20
train = 300
test = 300
"#;

#[test]
fn presets_are_listed() {
    let out = bin().args(["presets", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["self-pulsing", "logic", "feedback", "linear"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn invalid_config_names_every_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "kind = \"xor_rc\"\npreset = \"nope\"\n[[axis]]\nname = \"bitrate\"\nvalues = [\"3ns\"]\n[settings]\nnoize = 0.1\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["run", "bad.toml"], "1");
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    for field in ["seed", "preset", "axis[0].values[0]"] {
        assert!(err.contains(field), "missing `{field}` in:\n{err}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn rerun_and_worker_count_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xor.toml"), XOR).unwrap();
    let first = run_in(dir.path(), &["run", "xor.toml"], "1");
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let out = dir.path().join("out");
    let snapshot: Vec<Vec<u8>> = ["map.csv", "baseline.csv", "rb.csv"]
        .iter()
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect();
    assert!(run_in(dir.path(), &["run", "xor.toml"], "3").status.success());
    for (f, before) in ["map.csv", "baseline.csv", "rb.csv"].iter().zip(&snapshot) {
        assert_eq!(&std::fs::read(out.join(f)).unwrap(), before, "{f} changed");
    }

    let map = read_map(&out.join("map.csv"));
    assert_eq!(map.cells.len(), 3);
    let seeds: Vec<u64> = map.cells.iter().map(|c| c.seed).collect();
    assert!(seeds.windows(2).all(|w| w[0] != w[1]));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["sampling"]["sample_rate_hz"]["max"].as_f64().unwrap() > 0.0);
    assert_eq!(manifest["axes"][0]["values"][1], 110e6);
}

#[test]
fn compare_subcommand_and_axis_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xor.toml"), XOR).unwrap();
    assert!(run_in(dir.path(), &["run", "xor.toml"], "1").status.success());
    let out = run_in(
        dir.path(),
        &["compare", "out/map.csv", "out/baseline.csv", "-o", "rb2.csv"],
        "1",
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rb = read_map(&dir.path().join("rb2.csv"));
    let direct = read_map(&dir.path().join("out/rb.csv"));
    assert_eq!(rb.column("rb"), direct.column("rb"));
    // The ring beats the raw input near the carrier lifetime.
    assert!(rb.column("rb").unwrap()[1].value > 1.0);

    std::fs::write(
        dir.path().join("other.toml"),
        XOR.replace("\"2Gbps\"", "\"3Gbps\"").replace("output = \"out\"", "output = \"other\""),
    )
    .unwrap();
    assert!(run_in(dir.path(), &["run", "other.toml"], "1").status.success());
    let out = run_in(dir.path(), &["compare", "out/map.csv", "other/baseline.csv"], "1");
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("axis mismatch"));
}

#[test]
fn traces_are_dumped_on_request() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xor.toml"), XOR).unwrap();
    assert!(run_in(dir.path(), &["run", "xor.toml"], "1").status.success());
    assert!(!dir.path().join("out/trace").exists());
    assert!(run_in(dir.path(), &["run", "xor.toml", "--dump-traces"], "1").status.success());
    for i in 0..3 {
        let t = std::fs::read_to_string(dir.path().join(format!("out/trace/cell_{i:04}.csv"))).unwrap();
        assert!(t.starts_with("t,pump,probe\n"));
    }
    assert!(dir.path().join("out/cells/cell_0000_readout.json").exists());
}

#[test]
fn diverged_cell_is_marked_and_sweep_continues() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("div.toml"),
        r#"
kind = "stability_map"
preset = "logic"
seed = 1
output = "out"
[device]
tpa_gen_coeff = 1e300
fca_loss_coeff = 1e300
[[axis]]
name = "power"
values = ["0W", "1W"]
[settings]
settle_time = "10ns"
observe_time = "20ns"
sample_interval = "1ns"
"#,
    )
    .unwrap();
    let out = run_in(dir.path(), &["run", "div.toml"], "1");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let map = read_map(&dir.path().join("out/map.csv"));
    assert_eq!(map.cells[0].status, CellStatus::Ok);
    assert_eq!(map.cells[1].status, CellStatus::Diverged);
    assert!(map.cells[1].metrics[0].value.is_nan());
    let stab = std::fs::read_to_string(dir.path().join("out/stability.csv")).unwrap();
    assert!(stab.lines().nth(2).unwrap().contains("diverged"));
}

#[test]
fn bad_worker_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("xor.toml"), XOR).unwrap();
    let out = run_in(dir.path(), &["run", "xor.toml"], "zero");
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("MICRORING_WORKERS"));
}
