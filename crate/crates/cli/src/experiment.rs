use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fogchain::ledger::{mine_block, Chain};
use fogchain::sim::{Kernel, SimReport, TraceEvent};
use rayon::prelude::*;

use crate::spec::{ChainGrowth, ExperimentSpec, Point};
use crate::{io_error, CliError};

pub const RUN_COLUMNS: [&str; 9] = [
    "nodes",
    "seed",
    "transmission_delay_ms",
    "sigma_per_packet_ms",
    "action_duration_s",
    "energy_consumption_kj",
    "drops",
    "blocks_mined",
    "chain_bytes",
];

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub point: usize,
    pub nodes: usize,
    pub seed: u64,
    pub labels: Vec<(String, String)>,
    pub report: SimReport,
}

impl RunRecord {
    pub fn run_id(&self) -> String {
        format!("{}-{}", self.point, self.seed)
    }

    fn metrics(&self) -> [f64; 7] {
        let r = &self.report;
        [
            r.sigma,
            r.sigma_per_packet,
            r.action_duration_s,
            r.energy_kj(),
            r.drops as f64,
            r.blocks_mined as f64,
            r.chain_bytes as f64,
        ]
    }
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub runs: Vec<RunRecord>,
    pub files: Vec<PathBuf>,
}

/// Fails if `dir` cannot be created or written.
fn probe_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(io_error(&probe))?;
    fs::remove_file(&probe).map_err(io_error(&probe))
}

fn simulate(point: &Point, seed: u64, trace: bool) -> Result<(RunRecord, Option<Vec<TraceEvent>>), CliError> {
    let config = fogchain::sim::SimConfig {
        seed,
        ..point.config.clone()
    };
    let kernel = Kernel::new(config)?;
    let (report, events) = if trace {
        let (report, events) = kernel.run_with_trace();
        (report, Some(events))
    } else {
        (kernel.run(), None)
    };
    let record = RunRecord {
        point: point.index,
        nodes: point.config.n_devices,
        seed,
        labels: point.labels.clone(),
        report,
    };
    Ok((record, events))
}

/// Median of `values`; the mean of the two middle values for even counts.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

struct Csv {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Csv {
    fn create(path: PathBuf, header: &[String]) -> Result<Self, CliError> {
        let writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|source| CliError::Csv {
                path: path.clone(),
                source,
            })?;
        let mut csv = Csv { path, writer };
        csv.row(header)?;
        Ok(csv)
    }

    fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<(), CliError> {
        self.writer.write_record(fields).map_err(|source| CliError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(io_error(&self.path))?;
        Ok(self.path)
    }
}

fn text_file(path: PathBuf) -> Result<(PathBuf, std::io::BufWriter<fs::File>), CliError> {
    let file = fs::File::create(&path).map_err(io_error(&path))?;
    Ok((path, std::io::BufWriter::new(file)))
}

/// Runs every (point, seed) pair and writes `runs.csv`, `summary.csv`,
/// `timing.csv`, `protocol.tsv` and, when configured, `chain_growth.csv`.
/// With `trace` set each run's event log goes to `traces/<run-id>.tsv`.
pub fn run_experiment(spec: &ExperimentSpec, trace: bool) -> Result<ExperimentOutput, CliError> {
    spec.validate()?;
    let points = spec.points()?;
    let dir = spec.output.clone();
    probe_writable(&dir)?;
    let trace_dir = dir.join("traces");
    if trace {
        fs::create_dir_all(&trace_dir).map_err(io_error(&trace_dir))?;
    }

    let extras: Vec<String> = spec
        .sweep
        .iter()
        .map(|a| a.param.clone())
        .filter(|p| p != "n_devices")
        .collect();
    let header: Vec<String> = RUN_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain(extras.iter().cloned())
        .collect();
    let mut runs_csv = Csv::create(dir.join("runs.csv"), &header)?;
    let mut timing = Csv::create(dir.join("timing.csv"), &["run_id".into(), "wall_clock_s".into()])?;
    let (protocol_path, mut protocol_log) = text_file(dir.join("protocol.tsv"))?;

    let jobs: Vec<(&Point, u64)> = points
        .iter()
        .flat_map(|p| spec.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let batch = rayon::current_num_threads().max(1) * 2;
    let mut runs = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(batch) {
        let results: Vec<_> = chunk
            .par_iter()
            .map(|&(point, seed)| simulate(point, seed, trace))
            .collect::<Result<_, _>>()?;
        for (record, events) in results {
            let id = record.run_id();
            let mut row = vec![record.nodes.to_string(), record.seed.to_string()];
            row.extend(record.metrics().iter().map(|m| m.to_string()));
            for param in &extras {
                row.push(label(&record.labels, param));
            }
            runs_csv.row(&row)?;
            timing.row(&[id.clone(), record.report.wall_clock_s.to_string()])?;
            for event in &record.report.protocol_events {
                writeln!(protocol_log, "{id}\t{event}").map_err(io_error(&protocol_path))?;
            }
            if let Some(events) = events {
                write_trace(&trace_dir.join(format!("{id}.tsv")), &events)?;
            }
            runs.push(record);
        }
    }
    protocol_log.flush().map_err(io_error(&protocol_path))?;

    let mut summary = Csv::create(dir.join("summary.csv"), &header)?;
    for point in &points {
        let group: Vec<&RunRecord> = runs.iter().filter(|r| r.point == point.index).collect();
        if group.is_empty() {
            continue;
        }
        let mut row = vec![group[0].nodes.to_string(), "median".to_string()];
        for m in 0..7 {
            let mut values: Vec<f64> = group.iter().map(|r| r.metrics()[m]).collect();
            let med = median(&mut values);
            row.push(if m == 3 { format!("{med:.1}") } else { med.to_string() });
        }
        for param in &extras {
            row.push(label(&point.labels, param));
        }
        summary.row(&row)?;
    }

    let mut files = vec![runs_csv.finish()?, summary.finish()?, timing.finish()?, protocol_path];
    if let Some(growth) = &spec.chain_growth {
        let mut csv = Csv::create(
            dir.join("chain_growth.csv"),
            &["n_blocks".into(), "tx_per_block".into(), "chain_bytes".into()],
        )?;
        for (blocks, tx, bytes) in chain_growth(growth, spec.base.difficulty) {
            csv.row(&[blocks.to_string(), tx.to_string(), bytes.to_string()])?;
        }
        files.push(csv.finish()?);
    }
    let resolved = dir.join("experiment.toml");
    let text = toml::to_string_pretty(spec).map_err(|e| CliError::invalid("spec", e.to_string()))?;
    fs::write(&resolved, text).map_err(io_error(&resolved))?;
    files.push(resolved);
    Ok(ExperimentOutput { dir, runs, files })
}

fn label(labels: &[(String, String)], param: &str) -> String {
    labels
        .iter()
        .find(|(p, _)| p == param)
        .map(|(_, v)| v.clone())
        .unwrap_or_default()
}

/// One base run at `seed` (default: the first listed seed), ignoring sweeps.
pub fn run_single(spec: &ExperimentSpec, seed: Option<u64>, trace: bool) -> Result<ExperimentOutput, CliError> {
    let seed = seed.or_else(|| spec.seeds.first().copied()).unwrap_or(spec.base.seed);
    let single = ExperimentSpec {
        seeds: vec![seed],
        sweep: Vec::new(),
        chain_growth: None,
        ..spec.clone()
    };
    run_experiment(&single, trace)
}

fn write_trace(path: &Path, events: &[TraceEvent]) -> Result<(), CliError> {
    let (path, mut out) = text_file(path.to_path_buf())?;
    for event in events {
        writeln!(out, "{event}").map_err(io_error(&path))?;
    }
    out.flush().map_err(io_error(&path))
}

/// Re-runs `<point>-<seed>` with tracing and writes its event log to `path`
/// (default `<output>/traces/<run-id>.tsv`).
pub fn emit_trace(spec: &ExperimentSpec, run_id: &str, path: Option<&Path>) -> Result<PathBuf, CliError> {
    spec.validate()?;
    let unknown = || CliError::UnknownRun(run_id.to_string());
    let (point, seed) = run_id.split_once('-').ok_or_else(unknown)?;
    let point: usize = point.parse().map_err(|_| unknown())?;
    let seed: u64 = seed.parse().map_err(|_| unknown())?;
    let points = spec.points()?;
    let point = points.get(point).ok_or_else(unknown)?;
    if !spec.seeds.contains(&seed) {
        return Err(unknown());
    }
    let path = match path {
        Some(p) => p.to_path_buf(),
        None => spec.output.join("traces").join(format!("{run_id}.tsv")),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        probe_writable(parent)?;
    }
    let (_, events) = simulate(point, seed, true)?;
    write_trace(&path, &events.expect("traced run"))?;
    Ok(path)
}

/// `(n_blocks, tx_per_block, chain_bytes)` over the grid, each chain mined
/// at `difficulty` with fixed-size transactions.
pub fn chain_growth(growth: &ChainGrowth, difficulty: u32) -> Vec<(usize, usize, u64)> {
    let mut blocks = growth.blocks.clone();
    blocks.sort_unstable();
    blocks.dedup();
    let max = blocks.last().copied().unwrap_or(0);
    let per_tx: Vec<Vec<(usize, u64)>> = growth
        .tx_per_block
        .par_iter()
        .map(|&tx| {
            let mut chain = Chain::new(difficulty);
            let mut sizes = Vec::new();
            for b in 1..=max {
                let payload = (0..tx)
                    .map(|i| {
                        let mut t = format!("b{b}t{i}:").into_bytes();
                        t.resize(growth.tx_bytes.max(t.len()), b'.');
                        t
                    })
                    .collect();
                let block = mine_block(&chain, payload, b as u64);
                chain.append_block(block).expect("mined on the tip");
                if blocks.binary_search(&b).is_ok() {
                    sizes.push((b, chain.serialized_len() as u64));
                }
            }
            sizes
        })
        .collect();
    let mut out = Vec::new();
    for &b in &blocks {
        for (ti, &tx) in growth.tx_per_block.iter().enumerate() {
            if let Some(&(_, bytes)) = per_tx[ti].iter().find(|(n, _)| *n == b) {
                out.push((b, tx, bytes));
            }
        }
    }
    out
}
