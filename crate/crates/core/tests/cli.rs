use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_repeater");

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn repeater(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("REPEATER_WORKERS", "2").output().unwrap()
}

fn run_to(config: &Path, out: &Path) -> Output {
    repeater(&["run", config.to_str().unwrap(), "-o", out.to_str().unwrap()])
}

fn body(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn simulate_agrees_with_exact() {
    let dir = scratch("agree");
    let sim = dir.join("sim.csv");
    let exact = dir.join("exact.csv");
    assert!(run_to(&configs().join("simulate-k1.toml"), &sim).status.success());
    assert!(run_to(&configs().join("exact-k1.toml"), &exact).status.success());
    let out = repeater(&["compare", sim.to_str().unwrap(), exact.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let text = std::fs::read_to_string(&exact).unwrap();
    assert!(text.starts_with("# repeater "));
    assert!(text.contains("# config: name = \"exact-k1\""));
    let perturbed = dir.join("perturbed.csv");
    let rate = text.lines().last().unwrap().rsplit(',').next().unwrap().to_string();
    std::fs::write(&perturbed, text.replace(&rate, "0.2")).unwrap();
    let out = repeater(&["compare", sim.to_str().unwrap(), perturbed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = scratch("rerun");
    let config = dir.join("sweep.toml");
    std::fs::write(
        &config,
        "name = \"sweep\"\nmode = \"sweep\"\nseed = 3\n[chain]\nk = 2\n[allocation]\nkind = \"cognitive\"\nb = 1\n\
         [grid]\nq = [0.3, 0.9]\n[simulation]\nprotocol = \"cognitive\"\nhorizon_time = 5000.0\nreplications = 2\n",
    )
    .unwrap();
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    assert!(run_to(&config, &a).status.success());
    assert!(run_to(&config, &b).status.success());
    assert_eq!(body(&a), body(&b));
    assert_eq!(body(&a).lines().count(), 5);
}

#[test]
fn default_output_sits_next_to_config() {
    let dir = scratch("default-output");
    let config = dir.join("i0.toml");
    std::fs::copy(configs().join("select-i0.toml"), &config).unwrap();
    let out = repeater(&["run", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = String::from_utf8_lossy(&out.stdout);
    let path = written.trim().strip_prefix("wrote ").unwrap();
    assert!(Path::new(path).starts_with(&dir));
}

#[test]
fn exit_codes() {
    let dir = scratch("exit-codes");
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\nmode = \"exact\"\n[chain]\nk = 1\nq = 1.5\n[allocation]\nkind = \"reserved\"\nlevels = [1]\n").unwrap();
    let out = run_to(&bad, &dir.join("bad.csv"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("chain.q"));

    let huge = dir.join("huge.toml");
    std::fs::write(&huge, "name = \"x\"\nmode = \"exact\"\n[chain]\nk = 4\nq = 0.5\n[allocation]\nkind = \"constant\"\nb = 4\n").unwrap();
    assert_eq!(run_to(&huge, &dir.join("huge.csv")).status.code(), Some(2));

    let missing = dir.join("missing.toml");
    assert_eq!(run_to(&missing, &dir.join("m.csv")).status.code(), Some(1));

    let out = repeater(&["version"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("repeater "));
}

#[test]
fn annotated_config_parses() {
    let text = std::fs::read_to_string(configs().join("annotated.toml")).unwrap();
    repeater_core::experiment::Experiment::from_toml_str(&text).unwrap();
}
