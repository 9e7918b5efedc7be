use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;

use anyhow::Context;
use gasfuzz_core::abi::seeded_gene;
use gasfuzz_core::evm::{self, JsonTracer};
use gasfuzz_core::fuzzer::run_campaign_with;
use gasfuzz_core::harness::{self, default_balance, DEPLOYER};
use gasfuzz_core::report::{write_report, write_series_csv, ComparisonSummary, NamedValue};
use gasfuzz_core::{
    disassemble, parse_hex_code, Address, CampaignConfig, CampaignReport, Contract, ContractInstance,
    ExecutionEnv, ExecutionResult, Runner, Strategy, Wcfg, Word,
};

use crate::args::{CfgArgs, CodeArgs, CompareArgs, DisasmArgs, FuzzArgs, GraphFormat, TraceArgs};
use crate::settings::{self, ContractSettings, FileConfig};
use crate::Failure;

/// Exit status signalling that some execution ran out of gas.
const EXIT_OUT_OF_GAS: u8 = 2;

struct Target {
    contract: Contract,
    instance: ContractInstance,
    runner: Runner,
}

fn load_target(s: &ContractSettings, gas_limit: u64, seed: u64) -> Result<Target, Failure> {
    let contract = Contract::load(&s.bin, &s.abi)
        .with_context(|| format!("loading {} and {}", s.bin.display(), s.abi.display()))
        .map_err(Failure::Input)?;
    let spec = contract.function(&s.function).map_err(|e| Failure::Usage(e.to_string()))?.clone();
    let ctor_args = contract.constructor_args(seed).map_err(|e| Failure::Input(e.into()))?;
    let instance = contract
        .instantiate(&ctor_args, gas_limit)
        .with_context(|| format!("deploying {}", contract.name))
        .map_err(Failure::Input)?;
    let runner = Runner::new(&instance, spec);
    Ok(Target {
        contract,
        instance,
        runner,
    })
}

/// Runtime code of `bin`, deploying it first unless it is a `.bin-runtime` file.
fn runtime_code(args: &CodeArgs, file: &FileConfig) -> Result<Vec<u8>, Failure> {
    let bin = settings::required(args.bin.clone().or_else(|| file.bin.clone()), "--bin")?;
    let code = read_code(&bin)?;
    if is_runtime(&bin) {
        return Ok(code);
    }
    let instance = harness::deploy(&code, settings::gas_limit(args.gas_limit, file))
        .with_context(|| format!("deploying {}", bin.display()))
        .map_err(Failure::Input)?;
    Ok(instance.runtime_code.to_vec())
}

fn read_code(path: &Path) -> Result<Vec<u8>, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)?;
    parse_hex_code(&text)
        .with_context(|| format!("decoding {}", path.display()))
        .map_err(Failure::Input)
}

fn is_runtime(path: &Path) -> bool {
    path.to_string_lossy().ends_with(".bin-runtime")
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn run_one(target: &Target, config: &CampaignConfig, reproducible: bool, stop: &AtomicBool) -> anyhow::Result<CampaignReport> {
    let outcome = run_campaign_with(&target.instance, &target.runner, config, Some(stop), &mut |_| {})?;
    eprintln!(
        "{}: best gas {} (initial {}) at iteration {} of {}, status {}, stopped by {:?}",
        config.strategy,
        outcome.best_gas(),
        outcome.initial_gas,
        outcome.iteration_of_best,
        outcome.iterations,
        outcome.best_status,
        outcome.stop_reason,
    );
    Ok(CampaignReport::new(
        &target.contract.name,
        &target.instance,
        &target.runner,
        config,
        &outcome,
        reproducible,
    )?)
}

fn exit_for(out_of_gas: bool) -> ExitCode {
    if out_of_gas {
        ExitCode::from(EXIT_OUT_OF_GAS)
    } else {
        ExitCode::SUCCESS
    }
}

pub fn fuzz(args: &FuzzArgs, file: &FileConfig, stop: &AtomicBool) -> Result<ExitCode, Failure> {
    let contract = settings::contract(&args.contract, file)?;
    let strategy = settings::strategy(args.strategy.as_deref(), file)?;
    let config = settings::campaign(&args.campaign, file, strategy)?;
    let target = load_target(&contract, config.harness.gas_limit, config.rng_seed)?;
    let report = run_one(&target, &config, settings::reproducible(&args.campaign, file), stop)?;

    let out = args.out.clone().or_else(|| file.out.clone());
    match &out {
        Some(path) => write_report(&report, path)?,
        None => write_output(None, &report.to_json()?)?,
    }
    if let Some(csv) = args.csv.clone().or_else(|| file.csv.clone()) {
        write_series_csv(&report, &csv)?;
    }
    Ok(exit_for(report.flags.out_of_gas_observed))
}

pub fn compare(args: &CompareArgs, file: &FileConfig, stop: &AtomicBool) -> Result<ExitCode, Failure> {
    let contract = settings::contract(&args.contract, file)?;
    let base = settings::campaign(&args.campaign, file, Strategy::Gas)?;
    let reproducible = settings::reproducible(&args.campaign, file);
    let dir = args
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("gasfuzz-compare"));
    let target = load_target(&contract, base.harness.gas_limit, base.rng_seed)?;

    let mut reports = Vec::new();
    for strategy in Strategy::ALL {
        let config = CampaignConfig {
            strategy,
            ..base.clone()
        };
        let report = run_one(&target, &config, reproducible, stop)?;
        write_report(&report, &dir.join(format!("{strategy}.json")))?;
        write_series_csv(&report, &dir.join(format!("{strategy}.csv")))?;
        reports.push(report);
    }
    let summary = ComparisonSummary::from_reports(&reports).expect("four reports");
    let table = summary.to_table();
    let mut json = serde_json::to_string_pretty(&summary).context("serializing summary")?;
    json.push('\n');
    write_output(Some(&dir.join("summary.json")), &json)?;
    write_output(Some(&dir.join("summary.txt")), &table)?;
    write_output(None, &table)?;
    Ok(exit_for(reports.iter().any(|r| r.flags.out_of_gas_observed)))
}

pub fn disasm(args: &DisasmArgs, file: &FileConfig) -> Result<ExitCode, Failure> {
    let code = if args.deployed {
        runtime_code(
            &CodeArgs {
                bin: args.bin.clone(),
                gas_limit: args.gas_limit,
            },
            file,
        )?
    } else {
        read_code(&settings::required(args.bin.clone().or_else(|| file.bin.clone()), "--bin")?)?
    };
    let mut text = String::new();
    for ins in disassemble(&code) {
        text.push_str(&ins.to_string());
        text.push('\n');
    }
    write_output(None, &text)?;
    Ok(ExitCode::SUCCESS)
}

pub fn cfg(args: &CfgArgs, file: &FileConfig) -> Result<ExitCode, Failure> {
    let cfg = Wcfg::from_code(&runtime_code(&args.code, file)?);
    let text = match args.format {
        GraphFormat::Dot => cfg.to_dot(),
        GraphFormat::Json => {
            let mut t = serde_json::to_string_pretty(&cfg.to_json()).context("serializing graph")?;
            t.push('\n');
            t
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

pub fn estimate(args: &CodeArgs, file: &FileConfig) -> Result<ExitCode, Failure> {
    let estimate = Wcfg::from_code(&runtime_code(args, file)?).static_estimate();
    write_output(None, &format!("{estimate}\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn env_value<'a>(values: &'a [NamedValue], name: &str) -> anyhow::Result<&'a str> {
    values
        .iter()
        .find(|v| v.name == name)
        .and_then(|v| v.value.as_str())
        .with_context(|| format!("report has no environment value `{name}`"))
}

/// Environment recorded in a report's best inputs.
fn report_env(report: &CampaignReport, address: Address) -> anyhow::Result<ExecutionEnv> {
    let env = &report.best_inputs.env;
    let addr = |name| -> anyhow::Result<Address> { Ok(env_value(env, name)?.parse()?) };
    let int = |name| -> anyhow::Result<Word> {
        Word::from_dec_str(env_value(env, name)?).map_err(|e| anyhow::anyhow!("`{name}`: {e:?}"))
    };
    Ok(ExecutionEnv {
        address,
        coinbase: addr("coinbase")?,
        difficulty: int("difficulty")?,
        block_number: int("number")?.low_u64(),
        timestamp: int("timestamp")?.low_u64(),
        sender: addr("sender")?,
        origin: addr("origin")?,
        gas_limit: report.gas_limit,
        ..ExecutionEnv::default()
    })
}

fn decode_hex(text: &str) -> Result<Vec<u8>, Failure> {
    hex::decode(text.trim().trim_start_matches("0x")).map_err(|e| Failure::Usage(format!("calldata: {e}")))
}

pub fn trace(args: &TraceArgs, file: &FileConfig) -> Result<ExitCode, Failure> {
    let report = match &args.report {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(Failure::Input)?;
            Some(CampaignReport::from_json(&text).map_err(|e| Failure::Input(e.into()))?)
        }
        None => None,
    };
    let mut contract_args = args.contract.clone();
    if contract_args.function.is_none() && file.function.is_none() {
        contract_args.function = report.as_ref().map(|r| r.function.clone());
    }
    let contract = settings::contract(&contract_args, file)?;
    let seed = args.rng_seed.or(file.rng_seed).unwrap_or(0);
    let gas_limit = args
        .gas_limit
        .or(file.gas_limit)
        .or(report.as_ref().map(|r| r.gas_limit))
        .unwrap_or(evm::DEFAULT_GAS_LIMIT);
    let target = load_target(&contract, gas_limit, seed)?;

    let (calldata, mut env) = if let Some(r) = &report {
        let mut env = report_env(r, target.instance.address).map_err(Failure::Input)?;
        env.gas_limit = gas_limit;
        (decode_hex(&r.best_inputs.calldata)?, env)
    } else if let Some(hex) = &args.calldata {
        let env = ExecutionEnv {
            address: target.instance.address,
            sender: DEPLOYER,
            origin: DEPLOYER,
            gas_limit,
            ..ExecutionEnv::default()
        };
        (decode_hex(hex)?, env)
    } else {
        let (gene, map) = seeded_gene(std::slice::from_ref(&target.runner.spec), seed);
        let calldata = target.runner.calldata(&gene, &map).map_err(|e| Failure::Input(e.into()))?;
        let config = gasfuzz_core::HarnessConfig {
            gas_limit,
            ..Default::default()
        };
        (calldata, harness::env_from_gene(&gene, &map, target.instance.address, &config))
    };
    env.gas_limit = gas_limit;

    let mut world = target.instance.world.clone();
    if !world.exists(env.sender) {
        world.set_balance(env.sender, default_balance());
    }
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };
    let mut tracer = JsonTracer::new(sink);
    let result = evm::execute_traced(
        &target.instance.runtime_code,
        &calldata,
        &env,
        &mut world,
        &target.runner.wcfg,
        &mut tracer,
    );
    let mut sink = tracer.finish().context("writing trace")?;
    writeln!(sink, "{}", summary_line(&result)).context("writing trace")?;
    sink.flush().context("writing trace")?;
    Ok(ExitCode::SUCCESS)
}

fn summary_line(result: &ExecutionResult) -> String {
    serde_json::json!({
        "output": format!("0x{}", hex::encode(&result.return_data)),
        "gasUsed": format!("{:#x}", result.gas_used),
        "status": result.status.as_str(),
    })
    .to_string()
}
