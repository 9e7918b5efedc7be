use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Gas-guided fuzzing of EVM smart contracts.
///
/// Every flag can also be given as an environment variable (`GASFUZZ_` and the
/// flag name in upper snake case) or as a key of the `--config` TOML file.
/// Flags win over environment variables, which win over the file.
#[derive(Debug, Parser)]
#[command(name = "gasfuzz", version, about, long_about)]
pub struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true, env = "GASFUZZ_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one campaign and write its report.
    Fuzz(FuzzArgs),
    /// Run every strategy with the same budget and seed and tabulate them.
    Compare(CompareArgs),
    /// Print the instruction stream of a bytecode file.
    Disasm(DisasmArgs),
    /// Write the weighted control-flow graph as DOT or JSON.
    Cfg(CfgArgs),
    /// Print the static gas estimate of the runtime code.
    Estimate(CodeArgs),
    /// Execute one call and print a JSON line per instruction.
    Trace(TraceArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct ContractArgs {
    /// Init code (`.bin`) or runtime code (`.bin-runtime`) as hex.
    #[arg(long, env = "GASFUZZ_BIN", value_name = "PATH")]
    pub bin: Option<PathBuf>,

    /// ABI JSON of the contract.
    #[arg(long, env = "GASFUZZ_ABI", value_name = "PATH")]
    pub abi: Option<PathBuf>,

    /// Target function, by name or by full signature for overloads.
    #[arg(long, env = "GASFUZZ_FUNCTION", value_name = "NAME")]
    pub function: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CampaignArgs {
    /// Time budget in seconds.
    #[arg(long, env = "GASFUZZ_TIME", value_name = "SECONDS")]
    pub time: Option<f64>,

    /// Iteration budget; each iteration runs one mutant per mutator.
    #[arg(long, env = "GASFUZZ_ITERATIONS", value_name = "N")]
    pub iterations: Option<u64>,

    /// Seed of the campaign's random number generator [default: 0].
    #[arg(long, env = "GASFUZZ_RNG_SEED", value_name = "N")]
    pub rng_seed: Option<u64>,

    /// Transaction gas limit [default: 80039143].
    #[arg(long, env = "GASFUZZ_GAS_LIMIT", value_name = "GAS")]
    pub gas_limit: Option<u64>,

    /// Largest array or byte-string length the resize mutator picks [default: 1024].
    #[arg(long, env = "GASFUZZ_MAX_ARRAY_LEN", value_name = "N")]
    pub max_array_len: Option<usize>,

    /// Acceptance temperature for uninteresting seeds; 0 disables [default: 500].
    #[arg(long, env = "GASFUZZ_TEMPERATURE", value_name = "GAS")]
    pub temperature: Option<f64>,

    /// Acceptance probability of the random strategy [default: 0.5].
    #[arg(long, env = "GASFUZZ_RANDOM_ACCEPT", value_name = "P")]
    pub random_accept: Option<f64>,

    /// Seed pool capacity [default: 256].
    #[arg(long, env = "GASFUZZ_POOL_CAPACITY", value_name = "N")]
    pub pool_capacity: Option<usize>,

    /// Worker threads per iteration; results do not depend on it [default: 1].
    #[arg(long, env = "GASFUZZ_JOBS", value_name = "N")]
    pub jobs: Option<usize>,

    /// Wei sent with every call, in decimal [default: 0].
    #[arg(long, env = "GASFUZZ_CALL_VALUE", value_name = "WEI")]
    pub call_value: Option<String>,

    /// Keep storage written by one execution for the next.
    #[arg(long, env = "GASFUZZ_PERSIST_STORAGE")]
    pub persist_storage: bool,

    /// Take sender and origin from the fuzzed environment instead of the deployer.
    #[arg(long, env = "GASFUZZ_RANDOMIZE_SENDER")]
    pub randomize_sender: bool,

    /// Stop at the first out-of-gas execution.
    #[arg(long, env = "GASFUZZ_STOP_ON_OOG")]
    pub stop_on_oog: bool,

    /// Leave wall-clock fields out of reports so reruns are byte-identical.
    #[arg(long, env = "GASFUZZ_REPRODUCIBLE")]
    pub reproducible: bool,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[command(flatten)]
    pub contract: ContractArgs,

    #[command(flatten)]
    pub campaign: CampaignArgs,

    /// gas (alias vgas), random, slowfuzz or perffuzz [default: gas].
    #[arg(long, env = "GASFUZZ_STRATEGY", value_name = "NAME")]
    pub strategy: Option<String>,

    /// Report path; stdout when absent.
    #[arg(long, env = "GASFUZZ_OUT", value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Best-gas-over-time CSV path.
    #[arg(long, env = "GASFUZZ_CSV", value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub contract: ContractArgs,

    #[command(flatten)]
    pub campaign: CampaignArgs,

    /// Directory receiving one report and CSV per strategy plus the summary.
    #[arg(long, env = "GASFUZZ_OUT_DIR", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    /// Init code (`.bin`, deployed first) or runtime code (`.bin-runtime`).
    #[arg(long, env = "GASFUZZ_BIN", value_name = "PATH")]
    pub bin: Option<PathBuf>,

    /// Gas limit for deploying init code [default: 80039143].
    #[arg(long, env = "GASFUZZ_GAS_LIMIT", value_name = "GAS")]
    pub gas_limit: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DisasmArgs {
    /// Bytecode file as hex.
    #[arg(long, env = "GASFUZZ_BIN", value_name = "PATH")]
    pub bin: Option<PathBuf>,

    /// Deploy the init code and disassemble the runtime code it returns.
    #[arg(long)]
    pub deployed: bool,

    /// Gas limit for deploying init code [default: 80039143].
    #[arg(long, env = "GASFUZZ_GAS_LIMIT", value_name = "GAS")]
    pub gas_limit: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Dot,
    Json,
}

#[derive(Debug, Args)]
pub struct CfgArgs {
    #[command(flatten)]
    pub code: CodeArgs,

    #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
    pub format: GraphFormat,

    /// Output path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub contract: ContractArgs,

    /// Replay the best inputs and environment of a report.
    #[arg(long, value_name = "PATH", conflicts_with = "calldata")]
    pub report: Option<PathBuf>,

    /// Raw calldata as hex, sent with the default environment.
    #[arg(long, value_name = "HEX")]
    pub calldata: Option<String>,

    /// Seed for a random input when neither a report nor calldata is given [default: 0].
    #[arg(long, env = "GASFUZZ_RNG_SEED", value_name = "N")]
    pub rng_seed: Option<u64>,

    /// Transaction gas limit [default: 80039143, or the report's].
    #[arg(long, env = "GASFUZZ_GAS_LIMIT", value_name = "GAS")]
    pub gas_limit: Option<u64>,

    /// Trace output path; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
