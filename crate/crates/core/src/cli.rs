//! Command-line front end: `run`, `sweep`, `validate` and `trace`.
//!
//! Exit codes: 0 success, 1 liveness or schedule failure, 2 malformed
//! input (bad JSON, failed validation, unreadable file).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accounting::validate_schedule;
use crate::arena::{self, Arena, ScenarioReport};
use crate::config::{stake_floor, ScenarioConfig, StakeSchedule, StrategyKind};
use crate::graph::{MoveKind, Outcome, Party};
use crate::{Error, Result, Round};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;

pub const SWEEP_SCHEMA: &str = "bold-arena/sweep/v1";
pub const THREADS_ENV: &str = "BOLD_ARENA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bold-arena", version, about = "BoLD dispute game simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and print its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every cell of a sweep; writes one report per cell and summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the config's gas and stake schedule against ratio target rho.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        rho: u64,
    },
    /// Print the executed moves as JSON lines.
    Trace {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Runs the CLI on `args` (including the program name).
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_MALFORMED } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli.cmd, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_MALFORMED
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run { config, seed, out: path } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = arena::run(&cfg)?;
            let json = report.to_json();
            match path {
                Some(p) => std::fs::write(p, json + "\n")?,
                None => writeln!(out, "{json}")?,
            }
            Ok(exit_code(&report))
        }
        Command::Sweep { config, out: dir } => {
            let text = std::fs::read_to_string(&config)?;
            let spec = SweepSpec::from_json(&text)?;
            let cells = spec.cells()?;
            let reports = run_cells(&cells, spec.threads)?;
            std::fs::create_dir_all(&dir)?;
            for (id, r) in &reports {
                std::fs::write(dir.join(format!("{id}.json")), r.to_json() + "\n")?;
            }
            let csv = summary_csv(&reports)?;
            std::fs::write(dir.join("summary.csv"), &csv)?;
            out.write_all(csv.as_bytes())?;
            let ok = reports.iter().all(|(_, r)| r.liveness_ok());
            Ok(if ok { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Validate { config, rho } => {
            let cfg = load_config(&config)?;
            let check = validate_schedule(&cfg.gas, &cfg.stakes()?, &cfg.levels()?, rho)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&check)?)?;
            Ok(if check.pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Trace { config } => {
            let cfg = load_config(&config)?;
            let (lines, report) = trace(&cfg)?;
            for l in &lines {
                writeln!(out, "{}", serde_json::to_string(l)?)?;
            }
            Ok(exit_code(&report))
        }
    }
}

/// Exit code for a finished run; depends on the report only.
pub fn exit_code(report: &ScenarioReport) -> i32 {
    if report.liveness_ok() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = ScenarioConfig::from_json(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// One executed move in a trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLine {
    pub round: Round,
    pub mover: Party,
    #[serde(rename = "move")]
    pub kind: MoveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub created: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub censored: bool,
}

/// Plays `cfg` to the end and returns one line per executed move.
pub fn trace(cfg: &ScenarioConfig) -> Result<(Vec<TraceLine>, ScenarioReport)> {
    let mut arena = Arena::new(cfg)?;
    arena.run_to_end()?;
    let g = arena.graph();
    let lines = g
        .log()
        .iter()
        .map(|e| TraceLine {
            round: e.round,
            mover: e.mover,
            kind: e.mv.kind(),
            target: e.mv.target().map(|n| arena.label(n)),
            outcome: e.outcome,
            created: e.created.iter().map(|&c| arena.label(g.node(c))).collect(),
            censored: arena.logs()[e.round as usize - 1].censored,
        })
        .collect();
    Ok((lines, arena.report()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StakeKind {
    Fixed,
    Horizontal,
}

/// Values to take the cartesian product over. Empty axes keep the base.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub n_a: Vec<u32>,
    #[serde(default)]
    pub ks: Vec<Vec<u32>>,
    #[serde(default)]
    pub threshold: Vec<u64>,
    #[serde(default)]
    pub delta: Vec<u64>,
    #[serde(default)]
    pub c_max: Vec<u64>,
    #[serde(default)]
    pub strategy: Vec<StrategyKind>,
    #[serde(default)]
    pub stake_kind: Vec<StakeKind>,
    #[serde(default)]
    pub seed: Vec<u64>,
}

fn d_sweep_schema() -> String {
    SWEEP_SCHEMA.to_string()
}

fn d_max_cells() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "d_sweep_schema")]
    pub schema: String,
    pub base: ScenarioConfig,
    #[serde(default)]
    pub axes: SweepAxes,
    /// Worker threads; `BOLD_ARENA_THREADS` wins when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default = "d_max_cells")]
    pub max_cells: usize,
}

impl SweepSpec {
    /// Parses a sweep file. A plain scenario config is a one-cell sweep.
    pub fn from_json(text: &str) -> Result<SweepSpec> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        if v.get("base").is_none() {
            return Ok(SweepSpec {
                schema: d_sweep_schema(),
                base: ScenarioConfig::from_json(text)?,
                axes: SweepAxes::default(),
                threads: None,
                max_cells: d_max_cells(),
            });
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: SweepSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        if spec.schema != SWEEP_SCHEMA {
            return Err(Error::config("schema", format!("expected `{SWEEP_SCHEMA}`")));
        }
        Ok(spec)
    }

    /// Expands the axes into validated `(id, config)` cells.
    pub fn cells(&self) -> Result<Vec<(String, ScenarioConfig)>> {
        fn axis<T: Clone>(v: &[T], base: T) -> Vec<T> {
            if v.is_empty() {
                vec![base]
            } else {
                v.to_vec()
            }
        }
        let a = &self.axes;
        let b = &self.base;
        let mut out = Vec::new();
        let n = [
            a.n_a.len(),
            a.ks.len(),
            a.threshold.len(),
            a.delta.len(),
            a.c_max.len(),
            a.strategy.len(),
            a.stake_kind.len(),
            a.seed.len(),
        ]
        .iter()
        .map(|&l| l.max(1))
        .product::<usize>();
        if n > self.max_cells {
            return Err(Error::config("max_cells", format!("sweep has {n} cells, cap is {}", self.max_cells)));
        }
        for ks in axis(&a.ks, b.ks.clone()) {
            for delta in axis(&a.delta, b.delta) {
                for c_max in axis(&a.c_max, b.c_max) {
                    for threshold in axis(&a.threshold, b.threshold.unwrap_or(0)) {
                        for strategy in axis(&a.strategy, b.adversary.strategy) {
                            for n_a in axis(&a.n_a, u32::MAX) {
                                for stake in axis(&a.stake_kind, StakeKind::Fixed) {
                                    for seed in axis(&a.seed, b.seed) {
                                        let mut c = b.clone();
                                        c.ks = ks.clone();
                                        c.delta = delta;
                                        c.c_max = c_max;
                                        c.threshold = (threshold > 0).then_some(threshold);
                                        if strategy != b.adversary.strategy {
                                            c.adversary.strategy = strategy;
                                        }
                                        if n_a != u32::MAX {
                                            c.adversary.n_a = Some(n_a);
                                            c.adversary.divergences = None;
                                            c.adversary.root_rounds = None;
                                        }
                                        if c.adversary.strategy == StrategyKind::Passive {
                                            c.adversary.n_a = None;
                                        }
                                        if !a.stake_kind.is_empty() {
                                            c.stakes = match stake {
                                                StakeKind::Fixed => None,
                                                StakeKind::Horizontal => {
                                                    let lv = c.levels()?;
                                                    let base = (1..=lv.levels())
                                                        .map(|l| stake_floor(&lv, &c.gas, l))
                                                        .max()
                                                        .unwrap_or(0);
                                                    Some(StakeSchedule::Horizontal { base })
                                                }
                                            };
                                        }
                                        if !a.ks.is_empty() || !a.delta.is_empty() || !a.c_max.is_empty() {
                                            c.max_rounds = None;
                                        }
                                        c.seed = seed;
                                        let id = format!("cell-{:04}", out.len());
                                        c.name = if b.name.is_empty() { id.clone() } else { format!("{}/{id}", b.name) };
                                        c.validate()?;
                                        out.push((id, c));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Number of sweep workers: env var, then the sweep file, then rayon's default.
pub fn thread_count(spec_threads: Option<usize>) -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(spec_threads)
}

/// Runs the cells on a worker pool; results keep the input order.
pub fn run_cells(cells: &[(String, ScenarioConfig)], threads: Option<usize>) -> Result<Vec<(String, ScenarioReport)>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(threads) {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::invalid(e.to_string()))?;
    pool.install(|| {
        cells
            .par_iter()
            .map(|(id, c)| arena::run(c).map(|r| (id.clone(), r)))
            .collect()
    })
}

pub const CSV_HEADER: [&str; 14] = [
    "scenario_id",
    "seed",
    "n_a",
    "levels",
    "threshold",
    "winner",
    "winning_round",
    "round_bound",
    "censored_rounds",
    "g_h",
    "g_a",
    "s_a",
    "s_h",
    "ratio",
];

pub fn summary_csv(reports: &[(String, ScenarioReport)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for (id, r) in reports {
        let winner = serde_json::to_value(&r.winner)?;
        w.write_record([
            id.clone(),
            r.seed.to_string(),
            r.n_a.to_string(),
            r.ks.len().to_string(),
            r.threshold.to_string(),
            winner.as_str().unwrap_or_default().to_string(),
            r.winning_round.map(|x| x.to_string()).unwrap_or_default(),
            r.round_bound.to_string(),
            r.censored_rounds.to_string(),
            r.costs.g_h.to_string(),
            r.costs.g_a.to_string(),
            r.costs.s_a.to_string(),
            r.costs.s_h.to_string(),
            r.costs.ratio.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_config_is_a_single_cell_sweep() {
        let spec = SweepSpec::from_json(r#"{"ks":[2],"name":"x"}"#).unwrap();
        let cells = spec.cells().unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].1.name, "x/cell-0000");
    }

    #[test]
    fn axes_expand_to_the_cartesian_product() {
        let spec = SweepSpec::from_json(
            r#"{"base":{"ks":[2],"adversary":{"strategy":"root_spammer"}},
                "axes":{"n_a":[1,2],"delta":[0,1,2],"stake_kind":["fixed","horizontal"]}}"#,
        )
        .unwrap();
        let cells = spec.cells().unwrap();
        assert_eq!(cells.len(), 12);
        assert!(cells.iter().any(|(_, c)| matches!(c.stakes, Some(StakeSchedule::Horizontal { .. }))));
    }

    #[test]
    fn cell_cap_is_enforced() {
        let spec = SweepSpec::from_json(r#"{"base":{"ks":[2]},"axes":{"seed":[1,2,3]},"max_cells":2}"#).unwrap();
        assert!(matches!(spec.cells(), Err(Error::Config { field, .. }) if field == "max_cells"));
    }

    #[test]
    fn sweep_unknown_field_is_named() {
        let e = SweepSpec::from_json(r#"{"base":{"ks":[2]},"axez":{}}"#).unwrap_err();
        assert!(e.to_string().contains("axez"), "{e}");
    }

    #[test]
    fn csv_has_the_fixed_header() {
        let csv = summary_csv(&[]).unwrap();
        assert_eq!(
            csv.trim(),
            "scenario_id,seed,n_a,levels,threshold,winner,winning_round,round_bound,censored_rounds,g_h,g_a,s_a,s_h,ratio"
        );
    }

    #[test]
    fn help_exits_zero() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(main_with(["bold-arena", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(String::from_utf8(out).unwrap().contains("sweep"));
    }
}
