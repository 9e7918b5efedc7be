//! Contract lifecycle: loading artifacts, deployment and per-function runners.

use std::path::Path;
use std::sync::Arc;

use primitive_types::U256;

use crate::abi::{self, EnvField, FunctionSpec, Gene, GeneMap};
use crate::bytecode::parse_hex_code;
use crate::error::{Error, Result};
use crate::evm::{
    self, Address, ExecutionEnv, ExecutionResult, Tracer, WorldState, DEFAULT_GAS_LIMIT,
};
use crate::wcfg::Wcfg;

pub const CONTRACT_ADDRESS: Address = Address([
    0x0f, 0x00, 0x0f, 0x00, 0x0f, 0x00, 0x0f, 0x00, 0x0f, 0x00, 0x0f, 0x00, 0x0f, 0x00, 0x0f,
    0x00, 0x0f, 0x00, 0x0f, 0x00,
]);
pub const DEPLOYER: Address = Address([
    0xde, 0xad, 0xbe, 0xef, 0xde, 0xad, 0xbe, 0xef, 0xde, 0xad, 0xbe, 0xef, 0xde, 0xad, 0xbe,
    0xef, 0xde, 0xad, 0xbe, 0xef,
]);

/// Balance given to the deployer, the contract and any fuzzed sender.
pub fn default_balance() -> U256 {
    U256::one() << 128
}

/// Compiled artifacts of one contract.
#[derive(Debug, Clone)]
pub struct Contract {
    pub name: String,
    pub init_code: Option<Vec<u8>>,
    pub runtime_code: Option<Vec<u8>>,
    pub functions: Vec<FunctionSpec>,
}

impl Contract {
    /// Loads a `.bin` (init code) or `.bin-runtime` file together with its ABI.
    pub fn load(bin: &Path, abi_path: &Path) -> Result<Contract> {
        let code = parse_hex_code(&std::fs::read_to_string(bin)?)?;
        let functions = abi::parse_abi(&std::fs::read_to_string(abi_path)?)?;
        let file = bin.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let runtime_only = file.ends_with(".bin-runtime");
        let name = file
            .trim_end_matches(".bin-runtime")
            .trim_end_matches(".bin")
            .to_string();
        Ok(if runtime_only {
            Contract {
                name,
                init_code: None,
                runtime_code: Some(code),
                functions,
            }
        } else {
            Contract {
                name,
                init_code: Some(code),
                runtime_code: None,
                functions,
            }
        })
    }

    pub fn constructor(&self) -> Option<&FunctionSpec> {
        self.functions.iter().find(|f| f.is_constructor)
    }

    /// Looks a function up by name, or by full signature when the name is
    /// overloaded.
    pub fn function(&self, name_or_signature: &str) -> Result<&FunctionSpec> {
        let wanted = name_or_signature.replace(' ', "");
        let callable = || self.functions.iter().filter(|f| !f.is_constructor);
        if wanted.contains('(') {
            return callable()
                .find(|f| f.signature() == wanted)
                .ok_or(Error::UnknownFunction(wanted));
        }
        let matches: Vec<&FunctionSpec> = callable().filter(|f| f.name == wanted).collect();
        match matches.as_slice() {
            [] => Err(Error::UnknownFunction(wanted)),
            [only] => Ok(only),
            many => Err(Error::AmbiguousFunction {
                name: wanted,
                candidates: many.iter().map(|f| f.signature()).collect(),
            }),
        }
    }

    /// Encoded constructor arguments drawn from `seed`; empty when the
    /// constructor takes none.
    pub fn constructor_args(&self, seed: u64) -> Result<Vec<u8>> {
        match self.constructor() {
            Some(ctor) if !ctor.inputs.is_empty() => {
                let (gene, map) = abi::seeded_gene(std::slice::from_ref(ctor), seed);
                abi::encode_args(ctor, &gene, &map)
            }
            _ => Ok(Vec::new()),
        }
    }

    /// Deploys the contract, or installs the runtime code directly when no
    /// init code is available. `constructor_args` is appended to the init code.
    pub fn instantiate(&self, constructor_args: &[u8], gas_limit: u64) -> Result<ContractInstance> {
        match (&self.init_code, &self.runtime_code) {
            (Some(init), _) => {
                let mut code = init.clone();
                code.extend_from_slice(constructor_args);
                deploy(&code, gas_limit)
            }
            (None, Some(runtime)) => Ok(ContractInstance::from_runtime(runtime.clone())),
            (None, None) => Err(Error::MissingCode),
        }
    }
}

/// A deployed contract and the world right after construction.
#[derive(Debug, Clone)]
pub struct ContractInstance {
    pub runtime_code: Arc<Vec<u8>>,
    pub address: Address,
    pub world: WorldState,
    /// Gas charged by the creating transaction; zero when the runtime code was
    /// installed directly.
    pub deploy_gas: u64,
}

fn base_world() -> WorldState {
    let mut world = WorldState::new();
    world.set_balance(DEPLOYER, default_balance());
    world
}

impl ContractInstance {
    pub fn from_runtime(code: Vec<u8>) -> Self {
        let mut world = base_world();
        world.set_code(CONTRACT_ADDRESS, code.clone());
        world.set_balance(CONTRACT_ADDRESS, default_balance());
        ContractInstance {
            runtime_code: Arc::new(code),
            address: CONTRACT_ADDRESS,
            world,
            deploy_gas: 0,
        }
    }
}

/// Runs `init_code` (with any constructor arguments already appended) from the
/// deployer account.
pub fn deploy(init_code: &[u8], gas_limit: u64) -> Result<ContractInstance> {
    let mut world = base_world();
    let env = ExecutionEnv {
        address: CONTRACT_ADDRESS,
        sender: DEPLOYER,
        origin: DEPLOYER,
        gas_limit,
        ..ExecutionEnv::default()
    };
    let result = evm::execute_create(init_code, &env, &mut world);
    if !result.status.is_success() {
        return Err(Error::Deployment(result.status));
    }
    world.set_balance(CONTRACT_ADDRESS, default_balance());
    Ok(ContractInstance {
        runtime_code: Arc::new(result.return_data),
        address: CONTRACT_ADDRESS,
        world,
        deploy_gas: result.gas_used,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarnessConfig {
    pub gas_limit: u64,
    /// Take the sender and origin from the gene instead of the deployer.
    pub randomize_sender: bool,
    pub call_value: U256,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            gas_limit: DEFAULT_GAS_LIMIT,
            randomize_sender: false,
            call_value: U256::zero(),
        }
    }
}

/// A function bound to a deployed contract.
#[derive(Debug, Clone)]
pub struct Runner {
    pub spec: FunctionSpec,
    pub selector: [u8; 4],
    pub wcfg: Arc<Wcfg>,
}

impl Runner {
    pub fn new(instance: &ContractInstance, spec: FunctionSpec) -> Self {
        Runner {
            selector: abi::selector(&spec),
            wcfg: Arc::new(Wcfg::from_code(&instance.runtime_code)),
            spec,
        }
    }

    /// Calls the function with the arguments and environment held in `gene`,
    /// against a private copy of the post-construction world.
    pub fn run(
        &self,
        instance: &ContractInstance,
        gene: &Gene,
        map: &GeneMap,
        config: &HarnessConfig,
    ) -> Result<ExecutionResult> {
        let mut world = instance.world.clone();
        self.run_in(instance, &mut world, gene, map, config)
    }

    /// Like [`Runner::run`] but against `world`, which keeps the effects.
    pub fn run_in(
        &self,
        instance: &ContractInstance,
        world: &mut WorldState,
        gene: &Gene,
        map: &GeneMap,
        config: &HarnessConfig,
    ) -> Result<ExecutionResult> {
        self.run_traced(instance, world, gene, map, config, &mut evm::NoopTracer)
    }

    pub fn run_traced<T: Tracer>(
        &self,
        instance: &ContractInstance,
        world: &mut WorldState,
        gene: &Gene,
        map: &GeneMap,
        config: &HarnessConfig,
        tracer: &mut T,
    ) -> Result<ExecutionResult> {
        let calldata = self.calldata(gene, map)?;
        let env = env_from_gene(gene, map, instance.address, config);
        if !world.exists(env.sender) {
            world.set_balance(env.sender, default_balance());
        }
        Ok(evm::execute_traced(
            &instance.runtime_code,
            &calldata,
            &env,
            world,
            &self.wcfg,
            tracer,
        ))
    }

    pub fn calldata(&self, gene: &Gene, map: &GeneMap) -> Result<Vec<u8>> {
        abi::encode_args(&self.spec, gene, map)
    }
}

/// Convenience wrapper over [`Runner::run`].
pub fn run_function(
    instance: &ContractInstance,
    runner: &Runner,
    gene: &Gene,
    map: &GeneMap,
    config: &HarnessConfig,
) -> Result<ExecutionResult> {
    runner.run(instance, gene, map, config)
}

fn env_bytes<'g>(gene: &'g Gene, map: &GeneMap, field: EnvField) -> Option<&'g [u8]> {
    map.env(field).map(|e| &gene.bytes[e.range.clone()])
}

/// Transaction and block context described by the environment part of a gene.
/// Missing fields keep their defaults.
pub fn env_from_gene(gene: &Gene, map: &GeneMap, contract: Address, config: &HarnessConfig) -> ExecutionEnv {
    let mut env = ExecutionEnv {
        address: contract,
        sender: DEPLOYER,
        origin: DEPLOYER,
        gas_limit: config.gas_limit,
        call_value: config.call_value,
        ..ExecutionEnv::default()
    };
    let u64_of = |b: &[u8]| abi::read_uint(b).low_u64();
    if let Some(b) = env_bytes(gene, map, EnvField::Coinbase) {
        env.coinbase = abi::read_address(b);
    }
    if let Some(b) = env_bytes(gene, map, EnvField::Difficulty) {
        env.difficulty = abi::read_uint(b);
    }
    if let Some(b) = env_bytes(gene, map, EnvField::Number) {
        env.block_number = u64_of(b);
    }
    if let Some(b) = env_bytes(gene, map, EnvField::Timestamp) {
        env.timestamp = u64_of(b);
    }
    if config.randomize_sender {
        if let Some(b) = env_bytes(gene, map, EnvField::Sender) {
            env.sender = abi::read_address(b);
        }
        if let Some(b) = env_bytes(gene, map, EnvField::Origin) {
            env.origin = abi::read_address(b);
        }
    }
    env
}
