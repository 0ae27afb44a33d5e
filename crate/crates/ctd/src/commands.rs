//! The six subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use ctd_core::bond::{beta_schedule, bond_distribution, closed_form_beta, RegionKind, TemperatureSchedule};
use ctd_core::lattice::{ctd_entry, run_chain_with, sample_chain_exact, CtdEntry, LatticeState, WellKernel};
use ctd_core::{Character, ModelParams, WellLedger};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde_json::{json, Map, Value};

use crate::acceptance::{self, SuiteOptions, ALL_CRITERIA, DEFAULT_SUITE_SEED};
use crate::config::{Command, ExperimentConfig, Format};
use crate::error::{CliError, Result};
use crate::output::{fmt_f64, ledger_json, num, write_csv, write_json, Header, Sink};

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<()> {
    match command {
        Command::Analyze => analyze(cfg),
        Command::Schedule => schedule(cfg),
        Command::Verify => verify(cfg),
        Command::Sample => sample(cfg),
        Command::Mcmc => mcmc(cfg),
        Command::CtdDemo => ctd_demo(cfg),
    }
}

fn ledger(cfg: &ExperimentConfig) -> Result<WellLedger> {
    let params = ModelParams::new(cfg.epsilon, cfg.truncation, cfg.mode).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(WellLedger::new(params)?)
}

fn require_schedule(cfg: &ExperimentConfig) -> Result<(usize, usize)> {
    cfg.schedule
        .ok_or_else(|| CliError::Config("a schedule is required (--schedule n_lo..n_hi)".into()))
}

fn schedule_of(cfg: &ExperimentConfig, l: &WellLedger) -> Result<TemperatureSchedule> {
    let (lo, hi) = require_schedule(cfg)?;
    Ok(beta_schedule(l, lo, hi)?)
}

fn s(x: f64) -> String {
    fmt_f64(x)
}

fn region_name(kind: RegionKind) -> String {
    kind.to_string()
}

fn analyze(cfg: &ExperimentConfig) -> Result<()> {
    let l = ledger(cfg)?;
    let mut betas = cfg.beta.clone();
    if cfg.schedule.is_some() {
        betas.extend(schedule_of(cfg, &l)?.entries.iter().map(|e| e.beta));
    }
    if betas.is_empty() {
        return Err(CliError::Config("analyze needs --beta or --schedule".into()));
    }
    let dists = betas
        .iter()
        .map(|&b| bond_distribution(&l, b))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let header = Header::new(Command::Analyze, cfg);
    match cfg.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for d in &dists {
                let m = d.order_parameter(&l);
                let arg = d.argmax_well();
                for (i, r) in d.regions.iter().enumerate() {
                    rows.push(vec![
                        s(d.beta),
                        region_name(r.kind),
                        s(d.log_weights[i]),
                        s(d.probabilities[i]),
                        s(m),
                        arg.well.to_string(),
                    ]);
                }
            }
            write_csv(
                cfg.out.as_deref(),
                &header,
                &["beta", "region", "log_weight", "probability", "order_parameter", "argmax"],
                &rows,
            )
        }
        Format::Json => {
            let items: Vec<Value> = dists
                .iter()
                .map(|d| {
                    let arg = d.argmax_well();
                    json!({
                        "beta": s(d.beta),
                        "argmax": arg.well,
                        "degenerate": arg.degenerate,
                        "background_dominates": arg.background_dominates,
                        "order_parameter": s(d.order_parameter(&l)),
                        "log_partition": s(d.log_partition),
                        "log_shift": s(d.log_shift),
                        "regions": d.regions.iter().enumerate().map(|(i, r)| json!({
                            "region": region_name(r.kind),
                            "log_measure": s(r.log_measure),
                            "energy": s(r.energy),
                            "log_weight": s(d.log_weights[i]),
                            "probability": s(d.probabilities[i]),
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let mut body = Map::new();
            body.insert("ledger".into(), ledger_json(&l));
            body.insert("distributions".into(), Value::Array(items));
            write_json(cfg.out.as_deref(), &header, body)
        }
    }
}

fn character_name(c: Character) -> &'static str {
    c.short()
}

fn schedule(cfg: &ExperimentConfig) -> Result<()> {
    let l = ledger(cfg)?;
    let sched = schedule_of(cfg, &l)?;
    let header = Header::new(Command::Schedule, cfg);
    let ratio = |i: usize| (i > 0).then(|| sched.entries[i].beta / sched.entries[i - 1].beta);
    match cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = sched
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    vec![
                        e.n.to_string(),
                        s(e.beta),
                        character_name(e.character()).into(),
                        ratio(i).map(s).unwrap_or_default(),
                        s(closed_form_beta(&l, e.n)),
                        e.corrected.to_string(),
                    ]
                })
                .collect();
            write_csv(
                cfg.out.as_deref(),
                &header,
                &["n", "beta", "character", "ratio", "closed_form_beta", "corrected"],
                &rows,
            )
        }
        Format::Json => {
            let entries: Vec<Value> = sched
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    json!({
                        "n": e.n,
                        "beta": s(e.beta),
                        "character": character_name(e.character()),
                        "ratio": ratio(i).map(s),
                        "closed_form_beta": s(closed_form_beta(&l, e.n)),
                        "corrected": e.corrected,
                    })
                })
                .collect();
            let mut body = Map::new();
            body.insert("entries".into(), Value::Array(entries));
            write_json(cfg.out.as_deref(), &header, body)
        }
    }
}

fn verify(cfg: &ExperimentConfig) -> Result<()> {
    let ids: Vec<u32> = if cfg.criteria.is_empty() {
        ALL_CRITERIA.to_vec()
    } else {
        cfg.criteria.clone()
    };
    if let Some(bad) = ids.iter().find(|id| !ALL_CRITERIA.contains(id)) {
        return Err(CliError::Config(format!("no acceptance criterion {bad}")));
    }
    let opts = SuiteOptions {
        epsilon: cfg.epsilon,
        seed: cfg.seed.unwrap_or(DEFAULT_SUITE_SEED),
        tolerances: cfg.tolerances.clone(),
    };
    let verdict = acceptance::run_suite(&ids, &opts);
    if let Err(e) = &verdict.precondition {
        eprintln!("precondition FAIL: {e}");
    }
    for r in &verdict.results {
        eprintln!("{}", r.line());
    }
    if let Some(dir) = &cfg.tables {
        if verdict.precondition.is_ok() {
            write_tables(dir, cfg, &opts)?;
        }
    }
    let header = Header::new(Command::Verify, cfg);
    let Value::Object(body) = verdict.to_json() else {
        unreachable!("verdict is an object")
    };
    write_json(cfg.out.as_deref(), &header, body)?;
    if verdict.passed() {
        return Ok(());
    }
    Err(CliError::Criterion(match (&verdict.precondition, verdict.first_failure()) {
        (Err(e), _) => format!("validity precondition: {e}"),
        (_, Some(r)) => format!(
            "criterion {} ({}): expected {}, actual {}",
            r.id, r.name, r.expected, r.actual
        ),
        _ => "unknown".into(),
    }))
}

fn write_tables(dir: &Path, cfg: &ExperimentConfig, opts: &SuiteOptions) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let (offsets, convexity) = acceptance::offset_and_convexity_tables(opts).map_err(CliError::Config)?;
    let header = Header::new(Command::Verify, cfg);
    let rows: Vec<Vec<String>> = offsets
        .iter()
        .map(|r| {
            vec![
                r.n_max.to_string(),
                r.k.to_string(),
                match r.side {
                    ctd_core::asymptotics::OffsetSide::Plus => "plus".into(),
                    ctd_core::asymptotics::OffsetSide::Minus => "minus".into(),
                },
                s(r.closed_form),
                s(r.direct),
                s(r.abs_diff()),
            ]
        })
        .collect();
    write_csv(
        Some(&dir.join("offsets.csv")),
        &header,
        &["n_max", "k", "side", "closed_form", "direct", "abs_diff"],
        &rows,
    )?;
    let rows: Vec<Vec<String>> = convexity
        .iter()
        .map(|r| vec![s(r.beta), r.n.to_string(), s(r.second_difference), s(r.lower_bound)])
        .collect();
    write_csv(
        Some(&dir.join("convexity.csv")),
        &header,
        &["beta", "n", "second_difference", "lower_bound"],
        &rows,
    )
}

fn chain_length(cfg: &ExperimentConfig) -> Result<usize> {
    match cfg.dims.as_slice() {
        [l] => Ok(*l),
        _ => Err(CliError::Config("exact sampling needs a one-dimensional chain (--dims L)".into())),
    }
}

fn sample(cfg: &ExperimentConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let beta = cfg.single_beta()?;
    let length = chain_length(cfg)?;
    let l = ledger(cfg)?;
    WellKernel::new(&l)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let (state, bonds) = sample_chain_exact(length, &l, beta, &mut rng)?;
    let header = Header::new(Command::Sample, cfg);
    let angles = state.angles();
    let bond_angle = |i: usize| angles[i + 1].wrapping_sub(angles[i]).signed_radians();
    let side = |b: &ctd_core::bond::BondSample| match b.side {
        ctd_core::bond::Side::Plus => "plus",
        ctd_core::bond::Side::Minus => "minus",
    };
    match cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = bonds
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    vec![
                        i.to_string(),
                        region_name(b.region),
                        side(b).into(),
                        s(b.log_offset),
                        s(bond_angle(i)),
                    ]
                })
                .collect();
            write_csv(
                cfg.out.as_deref(),
                &header,
                &["bond", "region", "side", "log_offset", "bond_angle"],
                &rows,
            )
        }
        Format::Json => {
            let items: Vec<Value> = bonds
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    json!({
                        "bond": i,
                        "region": region_name(b.region),
                        "side": side(b),
                        "log_offset": s(b.log_offset),
                        "bond_angle": s(bond_angle(i)),
                    })
                })
                .collect();
            let mut body = Map::new();
            body.insert("first_angle".into(), Value::String(s(angles[0].radians())));
            body.insert("bonds".into(), Value::Array(items));
            write_json(cfg.out.as_deref(), &header, body)
        }
    }
}

const RECORD_COLUMNS: [&str; 7] = [
    "sweep",
    "energy_per_bond",
    "magnetization_x",
    "magnetization_y",
    "staggered_x",
    "staggered_y",
    "nn_bond_order",
];

/// `out.csv` → `out.report.json`.
pub fn report_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

fn mcmc(cfg: &ExperimentConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let beta = cfg.single_beta()?;
    let proposal = cfg.proposal()?;
    let l = ledger(cfg)?;
    let kernel = WellKernel::new(&l)?;
    if cfg.sweeps <= cfg.burn_in {
        return Err(CliError::Config("sweeps must exceed burn_in".into()));
    }
    if cfg.thin == 0 {
        return Err(CliError::Config("thin must be at least 1".into()));
    }
    let mut state = LatticeState::new(&cfg.dims, beta, seed, cfg.init).map_err(|e| CliError::Config(e.to_string()))?;
    state.proposal = proposal;
    let n_wells = kernel.n_wells();
    let header = Header::new(Command::Mcmc, cfg);

    let mut stream = match cfg.format {
        Format::Csv => {
            let mut sink = Sink::open(cfg.out.as_deref())?;
            let mut columns: Vec<String> = RECORD_COLUMNS.iter().map(|c| c.to_string()).collect();
            columns.extend((1..=n_wells).map(|n| format!("bonds_annulus{n}")));
            columns.push("bonds_background".into());
            header.write_csv(&mut sink).map_err(|e| sink.wrap(e))?;
            writeln!(sink, "{}", columns.join(",")).map_err(|e| sink.wrap(e))?;
            Some(sink)
        }
        Format::Json => None,
    };
    let mut io_error = None;
    let mut records = 0u64;
    let mut sums = [0.0f64; 4];
    let mut hist = vec![0u64; n_wells + 1];
    run_chain_with(&mut state, &l, cfg.sweeps, cfg.thin, cfg.burn_in, |r| {
        records += 1;
        sums[0] += r.energy_per_bond;
        sums[1] += r.magnetization[0].hypot(r.magnetization[1]);
        sums[2] += r.staggered_magnetization[0].hypot(r.staggered_magnetization[1]);
        sums[3] += r.nn_bond_order;
        for (h, c) in hist.iter_mut().zip(&r.bond_well_histogram) {
            *h += c;
        }
        if let (Some(sink), None) = (stream.as_mut(), io_error.as_ref()) {
            let mut row = vec![
                r.sweep.to_string(),
                s(r.energy_per_bond),
                s(r.magnetization[0]),
                s(r.magnetization[1]),
                s(r.staggered_magnetization[0]),
                s(r.staggered_magnetization[1]),
                s(r.nn_bond_order),
            ];
            row.extend(r.bond_well_histogram.iter().map(|c| c.to_string()));
            if let Err(e) = writeln!(sink, "{}", row.join(",")) {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(sink) = stream {
        if let Some(e) = io_error {
            return Err(sink.wrap(e));
        }
        sink.finish()?;
    }

    let total: u64 = hist.iter().sum();
    let r = records.max(1) as f64;
    let mut body = Map::new();
    body.insert("records".into(), json!(records));
    body.insert("acceptance_rate".into(), Value::String(s(state.acceptance_rate())));
    body.insert("mean_energy_per_bond".into(), Value::String(s(sums[0] / r)));
    body.insert("mean_magnetization".into(), Value::String(s(sums[1] / r)));
    body.insert("mean_staggered_magnetization".into(), Value::String(s(sums[2] / r)));
    body.insert("mean_nn_bond_order".into(), Value::String(s(sums[3] / r)));
    body.insert(
        "bond_histogram".into(),
        hist.iter().map(|&c| Value::String(s(c as f64 / total.max(1) as f64))).collect(),
    );
    if cfg.dims.len() == 1 {
        // an open chain's bonds are independent draws from the single-bond measure
        let d = bond_distribution(&l, beta)?;
        body.insert(
            "exact_bond_distribution".into(),
            d.probabilities.iter().map(|&p| Value::String(s(p))).collect(),
        );
        body.insert(
            "total_variation".into(),
            Value::String(s(acceptance::total_variation(&hist, &d.probabilities))),
        );
    }
    match (cfg.format, &cfg.out) {
        (Format::Json, out) => write_json(out.as_deref(), &header, body),
        (Format::Csv, Some(out)) => write_json(Some(&report_path(out)), &header, body),
        (Format::Csv, None) => Ok(()),
    }
}

fn ctd_demo(cfg: &ExperimentConfig) -> Result<()> {
    let seed = cfg.require_seed()?;
    let l = ledger(cfg)?;
    WellKernel::new(&l)?;
    let sched = schedule_of(cfg, &l)?;
    if cfg.sweeps < 2 {
        return Err(CliError::Config("ctd-demo needs at least 2 sweeps".into()));
    }
    if cfg.seeds == 0 {
        return Err(CliError::Config("seeds must be at least 1".into()));
    }
    let jobs: Vec<(usize, f64, u64)> = (0..cfg.seeds as u64)
        .flat_map(|r| sched.entries.iter().map(move |e| (e.n, e.beta, seed.wrapping_add(r))))
        .collect();
    let results: Vec<ctd_core::Result<CtdEntry>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(n, beta, seed)| {
                let l = &l;
                scope.spawn(move || ctd_entry(l, n, beta, &cfg.dims, cfg.sweeps, seed, cfg.init))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let entries = results.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    let per_replica = sched.entries.len();
    let alternates: Vec<bool> = entries.chunks(per_replica).map(ctd_core::lattice::alternates).collect();
    for (r, a) in alternates.iter().enumerate() {
        eprintln!(
            "replica seed {}: dominant character {}",
            seed.wrapping_add(r as u64),
            if *a { "alternates" } else { "does not alternate" }
        );
    }
    let header = Header::new(Command::CtdDemo, cfg);
    let well = |e: &CtdEntry| e.dominant_well.map(|w| w.to_string()).unwrap_or_else(|| "background".into());
    let character = |e: &CtdEntry| e.dominant_character.map(character_name).unwrap_or("none");
    match cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = entries
                .iter()
                .map(|e| {
                    vec![
                        e.n.to_string(),
                        s(e.beta),
                        e.seed.to_string(),
                        character_name(Character::of_index(e.n)).into(),
                        s(e.nn_bond_order),
                        s(e.magnetization),
                        s(e.staggered_magnetization),
                        well(e),
                        character(e).into(),
                        s(e.dominant_fraction),
                        s(e.acceptance_rate),
                    ]
                })
                .collect();
            write_csv(
                cfg.out.as_deref(),
                &header,
                &[
                    "n",
                    "beta",
                    "seed",
                    "expected_character",
                    "nn_bond_order",
                    "magnetization",
                    "staggered_magnetization",
                    "dominant_well",
                    "dominant_character",
                    "dominant_fraction",
                    "acceptance_rate",
                ],
                &rows,
            )
        }
        Format::Json => {
            let items: Vec<Value> = entries
                .iter()
                .map(|e| {
                    json!({
                        "n": e.n,
                        "beta": s(e.beta),
                        "seed": e.seed,
                        "expected_character": character_name(Character::of_index(e.n)),
                        "nn_bond_order": s(e.nn_bond_order),
                        "magnetization": s(e.magnetization),
                        "staggered_magnetization": s(e.staggered_magnetization),
                        "dominant_well": well(e),
                        "dominant_character": character(e),
                        "dominant_fraction": s(e.dominant_fraction),
                        "acceptance_rate": s(e.acceptance_rate),
                    })
                })
                .collect();
            let mut body = Map::new();
            body.insert("entries".into(), Value::Array(items));
            body.insert("alternates".into(), json!(alternates));
            body.insert("sweeps".into(), num(cfg.sweeps as f64));
            write_json(cfg.out.as_deref(), &header, body)
        }
    }
}
