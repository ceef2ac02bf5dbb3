use std::path::{Path, PathBuf};

use fogchain::sim::SimConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

/// One swept parameter. `param` is a dotted path into [`SimConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<Value>,
}

/// Serialized chain size over a grid of block counts and block sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainGrowth {
    pub blocks: Vec<usize>,
    pub tx_per_block: Vec<usize>,
    pub tx_bytes: usize,
}

impl Default for ChainGrowth {
    fn default() -> Self {
        Self {
            blocks: vec![10, 100, 1000],
            tx_per_block: vec![1, 5, 10],
            tx_bytes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub base: SimConfig,
    pub sweep: Vec<SweepAxis>,
    pub chain_growth: Option<ChainGrowth>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            seeds: vec![1],
            output: PathBuf::from("out"),
            base: SimConfig::default(),
            sweep: Vec::new(),
            chain_growth: None,
        }
    }
}

/// A fully resolved sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub config: SimConfig,
    /// `(param, rendered value)` for each axis.
    pub labels: Vec<(String, String)>,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: Self = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() && self.chain_growth.is_none() {
            return Err(CliError::invalid("seeds", "at least one seed is required"));
        }
        self.base
            .validate()
            .map_err(|e| CliError::invalid(format!("base.{}", e.field), e.reason))?;
        for (i, axis) in self.sweep.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(CliError::invalid(format!("sweep[{i}].values"), "empty value list"));
            }
            if axis.param == "seed" {
                return Err(CliError::invalid(
                    format!("sweep[{i}].param"),
                    "sweep seeds through `seeds`",
                ));
            }
        }
        self.points()?;
        if let Some(growth) = &self.chain_growth {
            if growth.blocks.is_empty() || growth.tx_per_block.is_empty() {
                return Err(CliError::invalid("chain_growth", "empty grid"));
            }
        }
        Ok(())
    }

    /// Cartesian product of the sweep axes, first axis outermost.
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        let base = Value::try_from(&self.base).map_err(|e| CliError::invalid("base", e.to_string()))?;
        let mut partial: Vec<(Value, Vec<(String, String)>)> = vec![(base, Vec::new())];
        for (i, axis) in self.sweep.iter().enumerate() {
            let mut next = Vec::with_capacity(partial.len() * axis.values.len());
            for (value, labels) in &partial {
                for v in &axis.values {
                    let mut value = value.clone();
                    let slot = lookup(&mut value, &axis.param).ok_or_else(|| {
                        CliError::invalid(
                            format!("sweep[{i}].param"),
                            format!("no field {:?} in base", axis.param),
                        )
                    })?;
                    *slot = v.clone();
                    let mut labels = labels.clone();
                    labels.push((axis.param.clone(), render(v)));
                    next.push((value, labels));
                }
            }
            partial = next;
        }
        partial
            .into_iter()
            .enumerate()
            .map(|(index, (value, labels))| {
                let config: SimConfig = value.try_into().map_err(|e: toml::de::Error| {
                    CliError::invalid(format!("sweep point {index}"), e.message().to_string())
                })?;
                config
                    .validate()
                    .map_err(|e| CliError::invalid(format!("sweep point {index}: {}", e.field), e.reason))?;
                Ok(Point { index, config, labels })
            })
            .collect()
    }

    pub fn defaults_reference() -> String {
        let body = toml::to_string_pretty(&ExperimentSpec {
            chain_growth: Some(ChainGrowth::default()),
            ..Self::default()
        })
        .expect("defaults serialize");
        format!("{DEFAULTS_HEADER}\n{body}")
    }
}

const DEFAULTS_HEADER: &str = "\
# Every configuration field with its default value. Regenerate with
# `fogchain defaults`. Times are milliseconds, energies joules.
#
# seeds                one run per seed and sweep point
# output               directory for runs.csv, summary.csv and logs
# chain_growth         optional blocks x tx_per_block grid of chain sizes
# sweep                list of { param = \"<field path>\", values = [...] }
#
# base.period          packet generation period per device
# base.service_dist    gateway service time; kind = constant | uniform | exponential | lognormal
# base.length_dist     packet length in bytes, same kinds
# base.retransmission_limit  retries per packet per hop, one period apart
# base.saturated       offer the next packet as soon as the first channel frees
# base.aggregation_ratio     probability a gateway forwards instead of absorbing
# base.hop_params      per-hop propagation (omega) and gateway latency
# base.energy_params   per-hop transmit and receive joules per byte
# base.difficulty      leading zero hex digits required of block hashes
# base.tx_per_block    transactions per mined block
# base.mining_interval spacing of mining ticks
# base.miners          candidate miners weighted by fog_demand
# base.duration        simulated horizon
# base.protocol_sessions     device authorization sessions to run
# base.token_ttl       token lifetime
# base.single_use_tokens     reject a second key request per token
";

pub fn load_config(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentSpec::parse(&text).map_err(|e| e.in_file(path))
}

fn parse_error(text: &str, e: &toml::de::Error) -> CliError {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            (line, column)
        }
        None => (0, 0),
    };
    CliError::Parse {
        file: None,
        line,
        column,
        message: e.message().trim().to_string(),
    }
}

fn lookup<'a>(root: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    let mut cur = root;
    for key in path.split('.') {
        cur = match cur {
            Value::Table(t) => t.get_mut(key)?,
            Value::Array(a) => a.get_mut(key.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    Some(cur)
}

pub fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        other => {
            let mut t = Table::new();
            t.insert("v".into(), other.clone());
            let s = toml::to_string(&t).unwrap_or_default();
            s.trim().trim_start_matches("v = ").to_string()
        }
    }
}
