//! Gas-guided mutational search over function inputs.
//!
//! Each iteration picks a seed from the pool, derives one mutant per mutator,
//! runs them all, and keeps the mutants the active [`Strategy`] finds
//! interesting. The gas strategy keeps seeds that raise the total gas or the
//! gas of any single edge; the others are rival feedback signals (path length,
//! per-edge hit counts, none at all).

mod mutate;
mod pool;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abi::{self, Gene, GeneKey, GeneMap};
use crate::error::{Error, Result};
use crate::evm::{ExecutionResult, Feedback, Status};
use crate::harness::{ContractInstance, HarnessConfig, Runner};
use crate::wcfg::{Edge, EdgeKind, Wcfg};

pub use mutate::{mutate, mutate_with, MutationConfig, Mutator, ARITH_MAX, MAX_ARRAY_LEN};
pub use pool::{
    acceptance_probability, is_interesting, select_seed, Acceptance, Bests, Seed, SeedPool,
    EXPLOIT_PROBABILITY, POOL_CAPACITY,
};

/// Floor used for `time_to_best` when the best seed was found instantly.
pub const TIMER_RESOLUTION: Duration = Duration::from_micros(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Total and per-edge gas feedback with probabilistic acceptance.
    Gas,
    /// Keep seeds at random, ignoring feedback.
    Random,
    /// Keep seeds whose execution path is longer than any before.
    SlowFuzz,
    /// Keep seeds that execute some edge more often than any before.
    PerfFuzz,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Gas,
        Strategy::Random,
        Strategy::SlowFuzz,
        Strategy::PerfFuzz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Gas => "gas",
            Strategy::Random => "random",
            Strategy::SlowFuzz => "slowfuzz",
            Strategy::PerfFuzz => "perffuzz",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gas" | "vgas" => Ok(Strategy::Gas),
            "random" => Ok(Strategy::Random),
            "slowfuzz" => Ok(Strategy::SlowFuzz),
            "perffuzz" => Ok(Strategy::PerfFuzz),
            other => Err(format!(
                "unknown strategy `{other}` (expected gas, random, slowfuzz or perffuzz)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub strategy: Strategy,
    pub rng_seed: u64,
    pub time_budget: Option<Duration>,
    pub iteration_budget: Option<u64>,
    pub acceptance: Acceptance,
    pub mutation: MutationConfig,
    pub pool_capacity: usize,
    /// Worker threads for running each iteration's mutants. Results do not
    /// depend on it.
    pub jobs: usize,
    /// Let storage written by one execution be seen by the next.
    pub persist_storage: bool,
    /// End the campaign at the first out-of-gas execution.
    pub stop_on_oog: bool,
    pub harness: HarnessConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            strategy: Strategy::Gas,
            rng_seed: 0,
            time_budget: None,
            iteration_budget: None,
            acceptance: Acceptance::default(),
            mutation: MutationConfig::default(),
            pool_capacity: POOL_CAPACITY,
            jobs: 1,
            persist_storage: false,
            stop_on_oog: false,
            harness: HarnessConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    IterationBudget,
    TimeBudget,
    Interrupted,
    OutOfGas,
}

/// A point of the best-gas-over-time curve, recorded whenever the best improves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesPoint {
    pub elapsed: Duration,
    pub iteration: u64,
    pub executions: u64,
    pub best_gas: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeProfile {
    pub from: u32,
    pub to: u32,
    pub kind: EdgeKind,
    pub max_gas: u64,
    pub max_hits: u64,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub strategy: Strategy,
    pub rng_seed: u64,
    pub initial_gas: u64,
    pub best: Seed,
    pub best_status: Status,
    pub time_to_best: Duration,
    pub iteration_of_best: u64,
    pub iterations: u64,
    pub executions: u64,
    pub elapsed: Duration,
    pub series: Vec<SeriesPoint>,
    /// Edges taken at least once, with the largest gas and hit count observed.
    pub edge_profile: Vec<EdgeProfile>,
    pub out_of_gas_observed: bool,
    /// Some dynamic argument of the best seed is at the array-length cap.
    pub hit_array_cap: bool,
    pub pool_size: usize,
    pub stop_reason: StopReason,
}

impl CampaignOutcome {
    pub fn best_gas(&self) -> u64 {
        self.best.feedback.total_gas
    }

    pub fn gas_rate(&self) -> f64 {
        gas_rate(self.best_gas(), self.time_to_best.as_secs_f64())
    }
}

/// Best gas per second of search until it was found.
pub fn gas_rate(best_gas: u64, time_to_best_secs: f64) -> f64 {
    best_gas as f64 / time_to_best_secs.max(TIMER_RESOLUTION.as_secs_f64())
}

/// One execution as seen by a campaign observer.
#[derive(Debug)]
pub struct ExecutionEvent<'a> {
    pub iteration: u64,
    /// `None` for the initial seed.
    pub mutator: Option<Mutator>,
    pub feedback: &'a Feedback,
    /// Bests as they stood before this execution.
    pub bests_before: &'a Bests,
    /// The seed entered the pool.
    pub accepted: bool,
}

pub fn run_campaign(
    instance: &ContractInstance,
    runner: &Runner,
    config: &CampaignConfig,
) -> Result<CampaignOutcome> {
    run_campaign_with(instance, runner, config, None, &mut |_| {})
}

/// Runs a campaign, polling `stop` between iterations and reporting every
/// execution to `observer`.
pub fn run_campaign_with(
    instance: &ContractInstance,
    runner: &Runner,
    config: &CampaignConfig,
    stop: Option<&AtomicBool>,
    observer: &mut dyn FnMut(&ExecutionEvent<'_>),
) -> Result<CampaignOutcome> {
    if config.time_budget.is_none() && config.iteration_budget.is_none() {
        return Err(Error::NoBudget);
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mutation = MutationConfig {
        regen_sender: config.harness.randomize_sender,
        ..config.mutation.clone()
    };
    let workers = if config.jobs > 1 && !config.persist_storage {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.jobs)
                .build()
                .expect("worker pool"),
        )
    } else {
        None
    };
    let mut world = config.persist_storage.then(|| instance.world.clone());
    let mut execute = |batch: &[(Gene, Arc<GeneMap>)]| -> Result<Vec<ExecutionResult>> {
        match (&mut world, &workers) {
            (Some(world), _) => batch
                .iter()
                .map(|(g, m)| runner.run_in(instance, world, g, m, &config.harness))
                .collect(),
            (None, Some(workers)) => workers.install(|| {
                batch
                    .par_iter()
                    .map(|(g, m)| runner.run(instance, g, m, &config.harness))
                    .collect()
            }),
            (None, None) => batch
                .iter()
                .map(|(g, m)| runner.run(instance, g, m, &config.harness))
                .collect(),
        }
    };

    let mut profile: Wcfg = (*runner.wcfg).clone();
    let mut bests = Bests::default();
    let mut pool = SeedPool::new(config.pool_capacity);

    let (gene, map) = abi::random_gene(std::slice::from_ref(&runner.spec), &mut rng);
    let initial = vec![(gene, Arc::new(map))];
    let first = execute(&initial)?.pop().expect("one result per input");
    let (gene, map) = initial.into_iter().next().expect("initial seed");
    let initial_gas = first.gas_used;
    let mut out_of_gas_observed = first.status == Status::OutOfGas;
    observer(&ExecutionEvent {
        iteration: 0,
        mutator: None,
        feedback: &first.feedback,
        bests_before: &bests,
        accepted: true,
    });
    bests.update(&first.feedback);
    profile.observe(&first.feedback);
    let mut best = Seed {
        gene,
        map,
        feedback: first.feedback,
        birth_iteration: 0,
    };
    pool.insert(best.clone());
    let mut time_to_best = started.elapsed();
    let mut series = vec![SeriesPoint {
        elapsed: time_to_best,
        iteration: 0,
        executions: 1,
        best_gas: initial_gas,
    }];
    let mut iteration = 0u64;
    let mut executions = 1u64;

    let stop_reason = loop {
        if config.stop_on_oog && out_of_gas_observed {
            break StopReason::OutOfGas;
        }
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            break StopReason::Interrupted;
        }
        if config.iteration_budget.is_some_and(|n| iteration >= n) {
            break StopReason::IterationBudget;
        }
        if config.time_budget.is_some_and(|t| started.elapsed() >= t) {
            break StopReason::TimeBudget;
        }
        iteration += 1;

        let parent = select_seed(&pool, &mut rng)?;
        let (parent_gene, parent_map) = (parent.gene.clone(), Arc::clone(&parent.map));
        let batch: Vec<(Gene, Arc<GeneMap>)> = Mutator::ALL
            .iter()
            .map(|&m| mutate_with(m, &parent_gene, &parent_map, &mut rng, &mutation))
            .collect();
        let results = execute(&batch)?;

        for ((mutator, (gene, map)), result) in Mutator::ALL.into_iter().zip(batch).zip(results) {
            executions += 1;
            let fb = result.feedback;
            out_of_gas_observed |= fb.status == Status::OutOfGas;
            let accepted = is_interesting(&fb, &bests, config.strategy, &config.acceptance, &mut rng);
            observer(&ExecutionEvent {
                iteration,
                mutator: Some(mutator),
                feedback: &fb,
                bests_before: &bests,
                accepted,
            });
            bests.update(&fb);
            profile.observe(&fb);
            let seed = Seed {
                gene,
                map,
                feedback: fb,
                birth_iteration: iteration,
            };
            if seed.feedback.total_gas > best.feedback.total_gas {
                best = seed.clone();
                time_to_best = started.elapsed();
                series.push(SeriesPoint {
                    elapsed: time_to_best,
                    iteration,
                    executions,
                    best_gas: best.feedback.total_gas,
                });
            }
            if accepted {
                pool.insert(seed);
            }
        }
    };

    let hit_array_cap = best.map.entries().iter().any(|e| {
        matches!(e.key, GeneKey::Param { .. })
            && e.ty.is_dynamic()
            && e.len == Some(mutation.max_array_len)
    });
    let edge_profile = profile
        .edges()
        .filter(|(_, info)| info.slot.max_hits > 0)
        .map(|(Edge { from, to }, info)| EdgeProfile {
            from,
            to,
            kind: info.kind,
            max_gas: info.slot.max_gas,
            max_hits: info.slot.max_hits,
        })
        .collect();

    Ok(CampaignOutcome {
        strategy: config.strategy,
        rng_seed: config.rng_seed,
        initial_gas,
        best_status: best.feedback.status,
        best,
        time_to_best,
        iteration_of_best: series.last().map_or(0, |p| p.iteration),
        iterations: iteration,
        executions,
        elapsed: started.elapsed(),
        series,
        edge_profile,
        out_of_gas_observed,
        hit_array_cap,
        pool_size: pool.len(),
        stop_reason,
    })
}
