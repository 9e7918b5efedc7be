//! Campaign reports: JSON document, best-gas CSV and comparison metrics.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::abi::{self, EnvField};
use crate::error::{Error, Result};
use crate::evm::Status;
use crate::fuzzer::{CampaignConfig, CampaignOutcome, EdgeProfile, StopReason, Strategy};
use crate::harness::{env_from_gene, ContractInstance, Runner};
use crate::wcfg::GasEstimate;

pub const SCHEMA_VERSION: u32 = 1;

/// Static estimate minus observed gas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GasDiff {
    Finite(i128),
    /// The static estimate was unbounded.
    Infinite,
}

impl GasDiff {
    /// Value used when binning diffs: the unbounded case counts as zero.
    pub fn histogram_value(self) -> i128 {
        match self {
            GasDiff::Finite(d) => d,
            GasDiff::Infinite => 0,
        }
    }
}

impl fmt::Display for GasDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GasDiff::Finite(d) => write!(f, "{d:+}"),
            GasDiff::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for GasDiff {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GasDiff::Finite(d) => s.serialize_i64(*d as i64),
            GasDiff::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for GasDiff {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_i64()
                .map(|v| GasDiff::Finite(v as i128))
                .ok_or_else(|| serde::de::Error::custom("diff out of range")),
            Value::String(s) if s == "infinite" => Ok(GasDiff::Infinite),
            other => Err(serde::de::Error::custom(format!("invalid diff {other}"))),
        }
    }
}

pub fn compute_diff(static_estimate: GasEstimate, observed_gas: u64) -> GasDiff {
    match static_estimate {
        GasEstimate::Finite(est) => GasDiff::Finite(est as i128 - observed_gas as i128),
        GasEstimate::Infinite => GasDiff::Infinite,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub time_seconds: Option<f64>,
    pub iterations: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestInputs {
    pub args: Vec<NamedValue>,
    /// Environment the best execution actually ran with.
    pub env: Vec<NamedValue>,
    pub calldata: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    /// Absent in reproducible reports.
    pub elapsed_s: Option<f64>,
    pub iteration: u64,
    pub executions: u64,
    pub best_gas: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub hit_array_cap: bool,
    pub out_of_gas_observed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema_version: u32,
    pub contract: String,
    pub function: String,
    pub selector: String,
    pub strategy: Strategy,
    pub rng_seed: u64,
    pub budget: Budget,
    pub gas_limit: u64,
    pub initial_gas: u64,
    pub best_gas: u64,
    pub best_status: Status,
    pub time_to_best: Option<f64>,
    pub gas_rate: Option<f64>,
    pub iteration_of_best: u64,
    pub iterations: u64,
    pub executions: u64,
    pub elapsed: Option<f64>,
    pub static_estimate: GasEstimate,
    pub diff: GasDiff,
    pub best_inputs: BestInputs,
    pub series: Vec<SeriesEntry>,
    pub edge_profile: Vec<EdgeProfile>,
    pub flags: Flags,
    pub stop_reason: StopReason,
}

impl CampaignReport {
    /// Assembles the report of a finished campaign. With `reproducible` set,
    /// every wall-clock field is left out so that identical runs serialize to
    /// identical bytes.
    pub fn new(
        contract: &str,
        instance: &ContractInstance,
        runner: &Runner,
        config: &CampaignConfig,
        outcome: &CampaignOutcome,
        reproducible: bool,
    ) -> Result<Self> {
        let best = &outcome.best;
        let spec = &runner.spec;
        let args = abi::decode_args(spec, &best.gene, &best.map)?
            .into_iter()
            .zip(&spec.inputs)
            .map(|((name, value), p)| NamedValue {
                name,
                ty: p.ty.to_string(),
                value,
            })
            .collect();
        let env = env_from_gene(&best.gene, &best.map, instance.address, &config.harness);
        let env_values = EnvField::ALL
            .into_iter()
            .map(|f| {
                let value = match f {
                    EnvField::Coinbase => env.coinbase.to_string(),
                    EnvField::Difficulty => env.difficulty.to_string(),
                    EnvField::Number => env.block_number.to_string(),
                    EnvField::Timestamp => env.timestamp.to_string(),
                    EnvField::Sender => env.sender.to_string(),
                    EnvField::Origin => env.origin.to_string(),
                };
                NamedValue {
                    name: f.name().to_string(),
                    ty: f.ty().to_string(),
                    value: Value::String(value),
                }
            })
            .collect();
        let calldata = runner.calldata(&best.gene, &best.map)?;
        let clock = |secs: f64| (!reproducible).then_some(secs);
        let static_estimate = runner.wcfg.static_estimate();
        Ok(CampaignReport {
            schema_version: SCHEMA_VERSION,
            contract: contract.to_string(),
            function: spec.signature(),
            selector: hex::encode(runner.selector),
            strategy: outcome.strategy,
            rng_seed: outcome.rng_seed,
            budget: Budget {
                time_seconds: config.time_budget.map(|d| d.as_secs_f64()),
                iterations: config.iteration_budget,
            },
            gas_limit: config.harness.gas_limit,
            initial_gas: outcome.initial_gas,
            best_gas: outcome.best_gas(),
            best_status: outcome.best_status,
            time_to_best: clock(outcome.time_to_best.as_secs_f64()),
            gas_rate: clock(outcome.gas_rate()),
            iteration_of_best: outcome.iteration_of_best,
            iterations: outcome.iterations,
            executions: outcome.executions,
            elapsed: clock(outcome.elapsed.as_secs_f64()),
            static_estimate,
            diff: compute_diff(static_estimate, outcome.best_gas()),
            best_inputs: BestInputs {
                args,
                env: env_values,
                calldata: format!("0x{}", hex::encode(calldata)),
            },
            series: outcome
                .series
                .iter()
                .map(|p| SeriesEntry {
                    elapsed_s: clock(p.elapsed.as_secs_f64()),
                    iteration: p.iteration,
                    executions: p.executions,
                    best_gas: p.best_gas,
                })
                .collect(),
            edge_profile: outcome.edge_profile.clone(),
            flags: Flags {
                hit_array_cap: outcome.hit_array_cap,
                out_of_gas_observed: outcome.out_of_gas_observed,
            },
            stop_reason: outcome.stop_reason,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(Error::Report)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(Error::Report)
    }

    /// `elapsed_s,best_gas` rows; the time column is empty in reproducible
    /// reports.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("elapsed_s,best_gas\n");
        for p in &self.series {
            match p.elapsed_s {
                Some(t) => out.push_str(&format!("{t:.6},{}\n", p.best_gas)),
                None => out.push_str(&format!(",{}\n", p.best_gas)),
            }
        }
        out
    }
}

pub fn write_report(report: &CampaignReport, path: &Path) -> Result<()> {
    write_atomically(path, report.to_json()?.as_bytes())
}

pub fn write_series_csv(report: &CampaignReport, path: &Path) -> Result<()> {
    write_atomically(path, report.series_csv().as_bytes())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    Ok(())
}

/// One line of a strategy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub best_gas: u64,
    pub time_to_best: Option<f64>,
    pub gas_rate: Option<f64>,
    pub diff: GasDiff,
    pub out_of_gas_observed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub contract: String,
    pub function: String,
    pub rng_seed: u64,
    pub static_estimate: GasEstimate,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonSummary {
    pub fn from_reports(reports: &[CampaignReport]) -> Option<Self> {
        let first = reports.first()?;
        Some(ComparisonSummary {
            contract: first.contract.clone(),
            function: first.function.clone(),
            rng_seed: first.rng_seed,
            static_estimate: first.static_estimate,
            rows: reports
                .iter()
                .map(|r| ComparisonRow {
                    strategy: r.strategy,
                    best_gas: r.best_gas,
                    time_to_best: r.time_to_best,
                    gas_rate: r.gas_rate,
                    diff: r.diff,
                    out_of_gas_observed: r.flags.out_of_gas_observed,
                })
                .collect(),
        })
    }

    /// Plain-text table, one row per strategy.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>14} {:>12} {:>16} {:>14} {:>4}\n",
            "strategy", "best_gas", "time_s", "gas_rate", "diff", "oog"
        );
        let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<10} {:>14} {:>12} {:>16} {:>14} {:>4}\n",
                r.strategy.name(),
                r.best_gas,
                opt(r.time_to_best, 3),
                opt(r.gas_rate, 0),
                r.diff.to_string(),
                if r.out_of_gas_observed { "yes" } else { "no" }
            ));
        }
        out
    }
}
