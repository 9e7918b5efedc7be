use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(file)
        .to_string_lossy()
        .into_owned()
}

fn gasfuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gasfuzz"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn token_fuzz(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = vec![
        "fuzz".into(),
        "--bin".into(),
        corpus("Token.bin"),
        "--abi".into(),
        corpus("Token.abi"),
        "--function".into(),
        "transferFrom".into(),
    ];
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    gasfuzz(&refs)
}

#[test]
fn help_lists_every_fuzz_flag() {
    let out = gasfuzz(&["fuzz", "--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for flag in [
        "--bin", "--abi", "--function", "--strategy", "--time", "--iterations", "--rng-seed", "--out",
        "--csv", "--persist-storage", "--randomize-sender", "--max-array-len", "--temperature",
        "--random-accept", "--gas-limit", "--jobs", "--stop-on-oog", "--reproducible", "--config",
        "--pool-capacity", "--call-value",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    for sub in ["fuzz", "compare", "disasm", "cfg", "estimate", "trace"] {
        assert!(stdout(&gasfuzz(&["--help"])).contains(sub));
    }
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(gasfuzz(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(gasfuzz(&["fuzz", "--iterations", "x"]).status.code(), Some(64));
    // no budget
    assert_eq!(run(&token_fuzz(&[])).status.code(), Some(64));
    assert_eq!(run(&token_fuzz(&["--iterations", "1", "--strategy", "fastest"])).status.code(), Some(64));
    let unknown = run(&[
        "fuzz".into(), "--bin".into(), corpus("Token.bin"), "--abi".into(), corpus("Token.abi"),
        "--function".into(), "mint".into(), "--iterations".into(), "1".into(),
    ]);
    assert_eq!(unknown.status.code(), Some(64));
}

#[test]
fn bad_inputs_exit_65() {
    let out = run(&[
        "fuzz".into(), "--bin".into(), corpus("Token.abi"), "--abi".into(), corpus("Token.abi"),
        "--function".into(), "transfer".into(), "--iterations".into(), "1".into(),
    ]);
    assert_eq!(out.status.code(), Some(65));
    let out = run(&[
        "fuzz".into(), "--bin".into(), corpus("Token.bin"), "--abi".into(), corpus("Token.bin"),
        "--function".into(), "transfer".into(), "--iterations".into(), "1".into(),
    ]);
    assert_eq!(out.status.code(), Some(65));
    // deployment with too little gas
    let out = run(&[
        "fuzz".into(), "--bin".into(), corpus("Token.bin"), "--abi".into(), corpus("Token.abi"),
        "--function".into(), "transfer".into(), "--iterations".into(), "1".into(),
        "--gas-limit".into(), "60000".into(),
    ]);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("OUT_OF_GAS"));
}

#[test]
fn identical_flags_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("r{i}.json"));
        let out = run(&token_fuzz(&[
            "--iterations", "40", "--rng-seed", "5", "--reproducible", "--out", path.to_str().unwrap(),
        ]));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        texts.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn config_file_and_environment_supply_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    let out_path = dir.path().join("r.json");
    std::fs::write(
        &config,
        format!(
            "bin = {:?}\nabi = {:?}\nfunction = \"approve\"\niterations = 3\nrng-seed = 2\nstrategy = \"random\"\nreproducible = true\nout = {:?}\n",
            corpus("Token.bin"),
            corpus("Token.abi"),
            out_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gasfuzz"))
        .args(["fuzz", "--config", config.to_str().unwrap(), "--rng-seed", "4"])
        .env_clear()
        .env("GASFUZZ_STRATEGY", "perffuzz")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(report["function"], "approve(address,uint256)");
    assert_eq!(report["strategy"], "perffuzz");
    assert_eq!(report["rng_seed"], 4);
    assert_eq!(report["iterations"], 3);

    std::fs::write(&config, "iteration = 3\n").unwrap();
    let out = gasfuzz(&["fuzz", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn estimate_separates_loop_from_straight_line() {
    let out = gasfuzz(&["estimate", "--bin", &corpus("DistributeFixed.bin")]);
    assert_eq!(stdout(&out).trim(), "infinite");
    let out = gasfuzz(&["estimate", "--bin", &corpus("Registry.bin-runtime")]);
    assert!(stdout(&out).trim().parse::<u64>().unwrap() > 0);
}

#[test]
fn cfg_and_disasm_describe_the_runtime_code() {
    let out = gasfuzz(&["cfg", "--bin", &corpus("Token.bin-runtime"), "--format", "json"]);
    assert!(out.status.success());
    let graph: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(graph["blocks"].as_array().unwrap().len() > 10);
    let dot = stdout(&gasfuzz(&["cfg", "--bin", &corpus("Token.bin")]));
    assert!(dot.starts_with("digraph"));
    let deployed = stdout(&gasfuzz(&["disasm", "--bin", &corpus("Token.bin"), "--deployed"]));
    let runtime = stdout(&gasfuzz(&["disasm", "--bin", &corpus("Token.bin-runtime")]));
    assert_eq!(deployed, runtime);
    assert!(runtime.contains("PUSH4 0xa9059cbb"));
}

#[test]
fn trace_replays_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = run(&[
        "fuzz".into(), "--bin".into(), corpus("DistributeFixed.bin"), "--abi".into(),
        corpus("DistributeFixed.abi"), "--function".into(), "distributeFixed".into(),
        "--iterations".into(), "30".into(), "--out".into(), report.to_str().unwrap().into(),
    ]);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let best = parsed["best_gas"].as_u64().unwrap();

    let out = run(&[
        "trace".into(), "--bin".into(), corpus("DistributeFixed.bin"), "--abi".into(),
        corpus("DistributeFixed.abi"), "--report".into(), report.to_str().unwrap().into(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    let used = u64::from_str_radix(last["gasUsed"].as_str().unwrap().trim_start_matches("0x"), 16).unwrap();
    assert_eq!(used, best);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["pc"], 0);
    assert_eq!(first["opName"], "PUSH1");
}

#[test]
fn compare_writes_four_reports_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "compare".into(), "--bin".into(), corpus("Registry.bin"), "--abi".into(), corpus("Registry.abi"),
        "--function".into(), "addSERAPHIM".into(), "--iterations".into(), "20".into(),
        "--out-dir".into(), dir.path().to_str().unwrap().into(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for s in ["gas", "random", "slowfuzz", "perffuzz"] {
        assert!(dir.path().join(format!("{s}.json")).exists());
        assert!(dir.path().join(format!("{s}.csv")).exists());
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    let rows = summary["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["gas_rate"].as_f64().unwrap() > 0.0));
    assert!(stdout(&out).contains("gas_rate"));
}
