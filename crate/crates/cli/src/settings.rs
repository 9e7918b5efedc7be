//! Merging of flags, environment variables and the TOML config file into the
//! settings of one command.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use gasfuzz_core::fuzzer::{Acceptance, MutationConfig};
use gasfuzz_core::{evm, CampaignConfig, HarnessConfig, Strategy, Word};
use serde::Deserialize;

use crate::args::{CampaignArgs, ContractArgs};
use crate::Failure;

/// Keys of the config file; each one mirrors the flag of the same name.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub bin: Option<PathBuf>,
    pub abi: Option<PathBuf>,
    pub function: Option<String>,
    pub strategy: Option<String>,
    pub time: Option<f64>,
    pub iterations: Option<u64>,
    pub rng_seed: Option<u64>,
    pub gas_limit: Option<u64>,
    pub max_array_len: Option<usize>,
    pub temperature: Option<f64>,
    pub random_accept: Option<f64>,
    pub pool_capacity: Option<usize>,
    pub jobs: Option<usize>,
    pub call_value: Option<String>,
    pub persist_storage: Option<bool>,
    pub randomize_sender: Option<bool>,
    pub stop_on_oog: Option<bool>,
    pub reproducible: Option<bool>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, Failure> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }
}

pub struct ContractSettings {
    pub bin: PathBuf,
    pub abi: PathBuf,
    pub function: String,
}

pub fn contract(args: &ContractArgs, file: &FileConfig) -> Result<ContractSettings, Failure> {
    let bin = required(args.bin.clone().or_else(|| file.bin.clone()), "--bin")?;
    let abi = required(args.abi.clone().or_else(|| file.abi.clone()), "--abi")?;
    let function = required(args.function.clone().or_else(|| file.function.clone()), "--function")?;
    Ok(ContractSettings { bin, abi, function })
}

pub fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required option {flag}")))
}

pub fn strategy(flag: Option<&str>, file: &FileConfig) -> Result<Strategy, Failure> {
    match flag.or(file.strategy.as_deref()) {
        None => Ok(Strategy::Gas),
        Some(name) => Strategy::from_str(name).map_err(Failure::Usage),
    }
}

pub fn campaign(args: &CampaignArgs, file: &FileConfig, strategy: Strategy) -> Result<CampaignConfig, Failure> {
    let time = args.time.or(file.time);
    let iterations = args.iterations.or(file.iterations);
    if time.is_none() && iterations.is_none() {
        return Err(Failure::Usage("give a budget with --time or --iterations".into()));
    }
    let time_budget = match time {
        Some(t) if !(t.is_finite() && t >= 0.0) => {
            return Err(Failure::Usage(format!("--time must be a non-negative number, got {t}")))
        }
        Some(t) => Some(Duration::from_secs_f64(t)),
        None => None,
    };

    let defaults = CampaignConfig::default();
    let temperature = args
        .temperature
        .or(file.temperature)
        .unwrap_or(defaults.acceptance.temperature);
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Failure::Usage(format!("--temperature must be >= 0, got {temperature}")));
    }
    let random_accept = args
        .random_accept
        .or(file.random_accept)
        .unwrap_or(defaults.acceptance.random_accept);
    if !(0.0..=1.0).contains(&random_accept) {
        return Err(Failure::Usage(format!("--random-accept must lie in [0, 1], got {random_accept}")));
    }
    let pool_capacity = args.pool_capacity.or(file.pool_capacity).unwrap_or(defaults.pool_capacity);
    if pool_capacity == 0 {
        return Err(Failure::Usage("--pool-capacity must be at least 1".into()));
    }
    let call_value = match args.call_value.as_deref().or(file.call_value.as_deref()) {
        None => Word::zero(),
        Some(text) => Word::from_dec_str(text)
            .map_err(|_| Failure::Usage(format!("--call-value is not a decimal amount: {text}")))?,
    };

    Ok(CampaignConfig {
        strategy,
        rng_seed: args.rng_seed.or(file.rng_seed).unwrap_or(0),
        time_budget,
        iteration_budget: iterations,
        acceptance: Acceptance {
            temperature,
            random_accept,
        },
        mutation: MutationConfig {
            max_array_len: args
                .max_array_len
                .or(file.max_array_len)
                .unwrap_or(defaults.mutation.max_array_len),
            ..defaults.mutation
        },
        pool_capacity,
        jobs: args.jobs.or(file.jobs).unwrap_or(1).max(1),
        persist_storage: args.persist_storage || file.persist_storage.unwrap_or(false),
        stop_on_oog: args.stop_on_oog || file.stop_on_oog.unwrap_or(false),
        harness: HarnessConfig {
            gas_limit: gas_limit(args.gas_limit, file),
            randomize_sender: args.randomize_sender || file.randomize_sender.unwrap_or(false),
            call_value,
        },
    })
}

pub fn gas_limit(flag: Option<u64>, file: &FileConfig) -> u64 {
    flag.or(file.gas_limit).unwrap_or(evm::DEFAULT_GAS_LIMIT)
}

pub fn reproducible(args: &CampaignArgs, file: &FileConfig) -> bool {
    args.reproducible || file.reproducible.unwrap_or(false)
}
