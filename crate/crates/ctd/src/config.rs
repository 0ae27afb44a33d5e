//! `key=value` experiment configuration.
//!
//! A config source is either a plain `key=value` file (`#` starts a comment)
//! or a file previously written by this tool, whose header carries the full
//! configuration it was produced with.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ctd_core::lattice::{InitPolicy, ProposalMix};
use ctd_core::Mode;

use crate::acceptance::Tolerances;
use crate::error::{CliError, Result};
use crate::output::{fmt_f64, HEADER_END, HEADER_PREFIX, HEADER_START};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Schedule,
    Verify,
    Sample,
    Mcmc,
    CtdDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Schedule => "schedule",
            Command::Verify => "verify",
            Command::Sample => "sample",
            Command::Mcmc => "mcmc",
            Command::CtdDemo => "ctd-demo",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "analyze" => Command::Analyze,
            "schedule" => Command::Schedule,
            "verify" => Command::Verify,
            "sample" => Command::Sample,
            "mcmc" => Command::Mcmc,
            "ctd-demo" => Command::CtdDemo,
            _ => return Err(format!("unknown command `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("expected csv or json, got `{s}`")),
        }
    }
}

pub fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    match s {
        "exact" => Ok(Mode::Exact),
        "paper" => Ok(Mode::Paper),
        _ => Err(format!("expected exact or paper, got `{s}`")),
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Exact => "exact",
        Mode::Paper => "paper",
    }
}

pub fn parse_init(s: &str) -> std::result::Result<InitPolicy, String> {
    match s {
        "random" => Ok(InitPolicy::Random),
        "aligned" => Ok(InitPolicy::Aligned),
        "neel" => Ok(InitPolicy::Neel),
        _ => Err(format!("expected random, aligned or neel, got `{s}`")),
    }
}

pub fn init_name(init: InitPolicy) -> &'static str {
    match init {
        InitPolicy::Random => "random",
        InitPolicy::Aligned => "aligned",
        InitPolicy::Neel => "neel",
    }
}

/// `n_lo..n_hi`, both inclusive.
pub fn parse_schedule(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected n_lo..n_hi, got `{s}`"))?;
    let lo = lo.trim().parse().map_err(|_| format!("bad n_lo in `{s}`"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad n_hi in `{s}`"))?;
    if lo == 0 || lo >= hi {
        return Err(format!("schedule needs 1 <= n_lo < n_hi, got `{s}`"));
    }
    Ok((lo, hi))
}

/// `1000` or `32x32`.
pub fn parse_dims(s: &str) -> std::result::Result<Vec<usize>, String> {
    let dims = s
        .split(['x', ','])
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad side length in `{s}`")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if dims.is_empty() || dims.len() > 2 || dims.iter().any(|&d| d < 2) {
        return Err(format!("dims must be one or two side lengths >= 2, got `{s}`"));
    }
    Ok(dims)
}

pub fn parse_betas(s: &str) -> std::result::Result<Vec<f64>, String> {
    let betas = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_f64(p.trim()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
        return Err(format!("betas must be finite and >= 0, got `{s}`"));
    }
    Ok(betas)
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("invalid number `{s}`"))
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    // accept 1e6 style counts as long as they are exact integers
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f = parse_f64(s)?;
    if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 {
        Ok(f as u64)
    } else {
        Err(format!("expected a non-negative integer, got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Set when the source was an output header.
    pub command: Option<Command>,
    pub epsilon: f64,
    pub truncation: usize,
    pub mode: Mode,
    pub beta: Vec<f64>,
    pub schedule: Option<(usize, usize)>,
    pub dims: Vec<usize>,
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: Option<u64>,
    /// Independent replicas per schedule entry in `ctd-demo`.
    pub seeds: usize,
    pub init: InitPolicy,
    pub w_global: f64,
    pub format: Format,
    /// Subset of acceptance criteria for `verify`; empty means all.
    pub criteria: Vec<u32>,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
    /// Directory for the offset/convexity tables written by `verify`.
    pub tables: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            epsilon: 0.1,
            truncation: 8,
            mode: Mode::Exact,
            beta: Vec::new(),
            schedule: None,
            dims: vec![1000],
            sweeps: 10_000,
            burn_in: 1_000,
            thin: 10,
            seed: None,
            seeds: 1,
            init: InitPolicy::Random,
            w_global: ProposalMix::default().global,
            format: Format::Csv,
            criteria: Vec::new(),
            tolerances: Tolerances::default(),
            out: None,
            tables: None,
        }
    }
}

impl ExperimentConfig {
    /// Applies one `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "command" => self.command = Some(value.parse()?),
            "epsilon" => self.epsilon = parse_f64(value)?,
            "truncation" => {
                self.truncation = value
                    .parse()
                    .map_err(|_| format!("expected an integer, got `{value}`"))?
            }
            "mode" => self.mode = parse_mode(value)?,
            "beta" => self.beta = parse_betas(value)?,
            "schedule" => {
                self.schedule = if value.is_empty() {
                    None
                } else {
                    Some(parse_schedule(value)?)
                }
            }
            "dims" => self.dims = parse_dims(value)?,
            "sweeps" => self.sweeps = parse_count(value)?,
            "burn_in" | "burn-in" => self.burn_in = parse_count(value)?,
            "thin" => self.thin = parse_count(value)?,
            "seed" => {
                self.seed = Some(
                    value
                        .parse()
                        .map_err(|_| format!("seed must be a 64-bit unsigned integer, got `{value}`"))?,
                )
            }
            "seeds" => self.seeds = parse_count(value)? as usize,
            "init" => self.init = parse_init(value)?,
            "w_global" => self.w_global = parse_f64(value)?,
            "format" => self.format = value.parse()?,
            "criteria" => {
                self.criteria = value
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| p.trim().parse::<u32>().map_err(|_| format!("bad criterion id `{p}`")))
                    .collect::<std::result::Result<_, _>>()?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "tables" => self.tables = Some(PathBuf::from(value)),
            _ => match key.strip_prefix("tol.") {
                Some(name) => self.tolerances.set(name, parse_f64(value)?)?,
                None => return Err(format!("unknown key `{key}`")),
            },
        }
        Ok(())
    }

    /// Reads a config file or the header of a previous output file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut cfg = Self::default();
        if text.trim_start().starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
            let map = v
                .get("header")
                .and_then(|h| h.get("config"))
                .and_then(|c| c.as_object())
                .ok_or("JSON input has no header.config object")?;
            for (k, val) in map {
                let s = val.as_str().ok_or_else(|| format!("header field `{k}` is not a string"))?;
                cfg.set(k, s).map_err(|e| format!("field `{k}`: {e}"))?;
            }
            return Ok(cfg);
        }
        let from_header = text.starts_with(HEADER_START);
        for (i, raw) in text.lines().enumerate() {
            let line = if from_header {
                if raw.trim() == HEADER_END {
                    break;
                }
                match raw.strip_prefix(HEADER_PREFIX) {
                    Some(rest) => rest,
                    None => return Err(format!("line {}: header ended without `{HEADER_END}`", i + 1)),
                }
            } else {
                raw.split('#').next().unwrap_or("")
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got `{line}`", i + 1))?;
            let k = k.trim();
            // generator metadata, not configuration
            if from_header && (k == "generator" || k == "timestamp") {
                continue;
            }
            cfg.set(k, v).map_err(|e| format!("line {}: field `{k}`: {e}", i + 1))?;
        }
        Ok(cfg)
    }

    /// Canonical `key=value` pairs recorded in output headers. Output paths are
    /// left out so a rerun never clobbers its source.
    pub fn entries(&self, command: Command) -> Vec<(String, String)> {
        let mut e: Vec<(String, String)> = vec![
            ("command".into(), command.name().into()),
            ("epsilon".into(), fmt_f64(self.epsilon)),
            ("truncation".into(), self.truncation.to_string()),
            ("mode".into(), mode_name(self.mode).into()),
            ("beta".into(), self.beta.iter().map(|b| fmt_f64(*b)).collect::<Vec<_>>().join(",")),
            (
                "schedule".into(),
                self.schedule.map(|(a, b)| format!("{a}..{b}")).unwrap_or_default(),
            ),
            (
                "dims".into(),
                self.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x"),
            ),
            ("sweeps".into(), self.sweeps.to_string()),
            ("burn_in".into(), self.burn_in.to_string()),
            ("thin".into(), self.thin.to_string()),
        ];
        if let Some(seed) = self.seed {
            e.push(("seed".into(), seed.to_string()));
        }
        e.push(("seeds".into(), self.seeds.to_string()));
        e.push(("init".into(), init_name(self.init).into()));
        e.push(("w_global".into(), fmt_f64(self.w_global)));
        e.push(("format".into(), self.format.to_string()));
        if command == Command::Verify {
            e.push((
                "criteria".into(),
                self.criteria.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
            ));
            for (name, value) in self.tolerances.entries() {
                e.push((format!("tol.{name}"), fmt_f64(value)));
            }
        }
        e
    }

    pub fn proposal(&self) -> Result<ProposalMix> {
        if !(0.0..=1.0).contains(&self.w_global) {
            return Err(CliError::Config(format!("w_global must lie in [0, 1], got {}", self.w_global)));
        }
        ProposalMix::new(self.w_global, 1.0 - self.w_global).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| CliError::Config("a seed is required (--seed or seed=...); there is no default".into()))
    }

    pub fn single_beta(&self) -> Result<f64> {
        match self.beta.as_slice() {
            [b] => Ok(*b),
            [] => Err(CliError::Config("a beta value is required (--beta)".into())),
            _ => Err(CliError::Config("this command takes exactly one beta".into())),
        }
    }
}
