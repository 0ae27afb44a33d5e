//! The ten acceptance criteria, each run at pinned parameters and checked
//! against overridable tolerances.

use std::time::Instant;

use ctd_core::asymptotics::{
    convexity_check, f_tilde, n_max_closed, offset_free_energy, OffsetSide, SeparatedWellsModel,
};
use ctd_core::bond::{beta_schedule, bond_distribution, BondDistribution, BondSampler, RegionKind};
use ctd_core::lattice::{ctd_entry, run_chain_with, sample_chain_exact_with, InitPolicy, LatticeState};
use ctd_core::{Mode, ModelParams, WellLedger};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde_json::{json, Value};

use crate::oracle::{numeric_argmin, quadrature_probabilities};
use crate::output::fmt_f64;

macro_rules! tolerances {
    ($($name:ident = $default:expr;)*) => {
        /// Thresholds and sizes of the suite; each can be overridden as `tol.<name>`.
        #[derive(Debug, Clone, PartialEq)]
        pub struct Tolerances {
            $(pub $name: f64,)*
        }

        impl Default for Tolerances {
            fn default() -> Self {
                Self { $($name: $default,)* }
            }
        }

        impl Tolerances {
            pub fn entries(&self) -> Vec<(&'static str, f64)> {
                vec![$((stringify!($name), self.$name),)*]
            }

            pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
                match name {
                    $(stringify!($name) => self.$name = value,)*
                    _ => return Err(format!("unknown tolerance `{name}`")),
                }
                Ok(())
            }
        }
    };
}

tolerances! {
    order_min = 0.9;
    alternation_seconds = 1.0;
    peak_margin = 0.01;
    peak_n0_max = 5.0;
    peak_tail = 1e-6;
    argmin_rel = 1e-9;
    offset_rel = 1e-12;
    ratio_c_min = 1.0;
    ratio_growth = 0.05;
    convexity_rel = 1e-9;
    quadrature_rel = 1e-8;
    quadrature_seconds = 5.0;
    mcmc_tv = 0.02;
    mcmc_sweeps = 1e6;
    mcmc_seconds = 60.0;
    correlation_sigmas = 3.0;
    correlation_samples = 1e5;
    demo_sweeps = 4000.0;
}

pub const DEFAULT_SUITE_SEED: u64 = 0x5eed_0c7d;
pub const ALL_CRITERIA: [u32; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Parameters shared by every criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// ε of the asymptotic criteria 1–6.
    pub epsilon: f64,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            seed: DEFAULT_SUITE_SEED,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    /// Non-gating criteria are reported but never fail the suite.
    pub gating: bool,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
    pub seconds: f64,
    pub details: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let tag = match (self.gating, self.passed) {
            (true, true) => "PASS",
            (true, false) => "FAIL",
            (false, true) => "REPORT ok",
            (false, false) => "REPORT not observed",
        };
        format!(
            "criterion {:>2} {tag}: {} | actual {} | expected {} | {:.2}s",
            self.id, self.name, self.actual, self.expected, self.seconds
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "id": self.id,
            "name": self.name,
            "gating": self.gating,
            "passed": self.passed,
            "expected": self.expected,
            "actual": self.actual,
            "details": self.details,
        })
    }

    fn failed_precondition(id: u32, reason: &str) -> Self {
        Self {
            id,
            name: name_of(id),
            gating: true,
            passed: false,
            expected: "validity precondition".into(),
            actual: reason.into(),
            seconds: 0.0,
            details: Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub precondition: Result<(), String>,
    pub results: Vec<CriterionResult>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.precondition.is_ok() && self.results.iter().all(|r| r.passed || !r.gating)
    }

    pub fn first_failure(&self) -> Option<&CriterionResult> {
        self.results.iter().find(|r| r.gating && !r.passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "passed": self.passed(),
            "precondition": match &self.precondition {
                Ok(()) => json!({"passed": true}),
                Err(e) => json!({"passed": false, "reason": e}),
            },
            "criteria": self.results.iter().map(CriterionResult::to_json).collect::<Vec<_>>(),
            "first_failure": self.first_failure().map(CriterionResult::to_json),
        })
    }
}

pub fn name_of(id: u32) -> &'static str {
    match id {
        1 => "alternation of the dominant well",
        2 => "peak mass",
        3 => "closed-form minimizer",
        4 => "offset formulas",
        5 => "ratio bound",
        6 => "convexity",
        7 => "quadrature oracle",
        8 => "MCMC versus exact (d=1)",
        9 => "correlation factorization",
        10 => "d=2 demonstration",
        _ => "unknown",
    }
}

/// The asymptotic criteria assume well-separated nesting: the inner-well
/// correction `ε^24` of the widest annulus must be negligible.
pub fn check_precondition(epsilon: f64) -> Result<(), String> {
    ModelParams::new(epsilon, 42, Mode::Exact).map_err(|e| e.to_string())?;
    let correction = epsilon.powi(24);
    if correction > 1e-6 {
        return Err(format!(
            "epsilon = {epsilon} violates well separation: epsilon^24 = {correction:.3e} > 1e-6 (needs epsilon <= 0.562)"
        ));
    }
    Ok(())
}

pub fn run_suite(ids: &[u32], opts: &SuiteOptions) -> Verdict {
    let precondition = check_precondition(opts.epsilon);
    let results = ids
        .iter()
        .map(|&id| match (&precondition, id) {
            (Err(e), 1..=6) => CriterionResult::failed_precondition(id, e),
            _ => run_criterion(id, opts),
        })
        .collect();
    Verdict { precondition, results }
}

pub fn run_criterion(id: u32, opts: &SuiteOptions) -> CriterionResult {
    let start = Instant::now();
    let outcome = match id {
        1 => alternation(opts),
        2 => peak_mass(opts),
        3 => closed_form_minimizer(opts),
        4 => offsets(opts).map(|o| o.0),
        5 => ratio_bound(opts),
        6 => convexity(opts).map(|c| c.0),
        7 => quadrature(opts),
        8 => mcmc_vs_exact(opts),
        9 => correlations(opts),
        10 => demo_2d(opts),
        _ => Err(format!("no criterion {id}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (gating, passed, expected, actual, details) = match outcome {
        Ok(o) => (o.gating, o.passed, o.expected, o.actual, o.details),
        Err(e) => (true, false, "computation succeeds".into(), e, Value::Null),
    };
    CriterionResult {
        id,
        name: name_of(id),
        gating,
        passed,
        expected,
        actual,
        seconds,
        details,
    }
}

struct Outcome {
    gating: bool,
    passed: bool,
    expected: String,
    actual: String,
    details: Value,
}

type Check = Result<Outcome, String>;

fn gate(passed: bool, expected: String, actual: String, details: Value) -> Check {
    Ok(Outcome {
        gating: true,
        passed,
        expected,
        actual,
        details,
    })
}

fn ledger(epsilon: f64, truncation: usize, mode: Mode) -> Result<WellLedger, String> {
    ModelParams::new(epsilon, truncation, mode)
        .and_then(WellLedger::new)
        .map_err(|e| e.to_string())
}

fn alternation(opts: &SuiteOptions) -> Check {
    let t = &opts.tolerances;
    let start = Instant::now();
    let l = ledger(opts.epsilon, 42, Mode::Exact)?;
    let schedule = beta_schedule(&l, 3, 40).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for e in &schedule.entries {
        let d = bond_distribution(&l, e.beta).map_err(|e| e.to_string())?;
        let arg = d.argmax_well();
        let m = d.order_parameter(&l);
        let sign_ok = if e.n % 2 == 0 { m > 0.0 } else { m < 0.0 };
        let size_ok = e.n < 5 || m.abs() >= t.order_min;
        if arg.well != e.n || !sign_ok || !size_ok {
            bad.push(e.n);
        }
        rows.push(json!({"n": e.n, "beta": fmt_f64(e.beta), "argmax": arg.well, "order_parameter": fmt_f64(m)}));
    }
    let seconds = start.elapsed().as_secs_f64();
    let passed = bad.is_empty() && seconds < t.alternation_seconds;
    gate(
        passed,
        format!(
            "argmax = n, sign (-1)^n, |m| >= {} for n >= 5, n = 3..40, under {} s",
            t.order_min, t.alternation_seconds
        ),
        format!(
            "{} entries, failing n = {bad:?}, runtime limit {}",
            rows.len(),
            if seconds < t.alternation_seconds { "met" } else { "exceeded" }
        ),
        json!({"entries": rows}),
    )
}

fn peak_mass(opts: &SuiteOptions) -> Check {
    let t = &opts.tolerances;
    let l = ledger(opts.epsilon, 42, Mode::Exact)?;
    let schedule = beta_schedule(&l, 1, 40).map_err(|e| e.to_string())?;
    let mut peaks = Vec::new();
    for e in &schedule.entries {
        let d = bond_distribution(&l, e.beta).map_err(|e| e.to_string())?;
        peaks.push((e.n, d.probability(RegionKind::Annulus(e.n))));
    }
    let threshold = 0.5 + t.peak_margin;
    // smallest n from which every later entry clears the threshold
    let n0 = peaks
        .iter()
        .rev()
        .take_while(|(_, p)| *p > threshold)
        .last()
        .map(|&(n, _)| n);
    let tail_ok = peaks.iter().filter(|(n, _)| *n >= 12).all(|(_, p)| *p >= 1.0 - t.peak_tail);
    let monotone = peaks.windows(2).all(|w| w[1].1 >= w[0].1);
    let n0_ok = n0.is_some_and(|n| n as f64 <= t.peak_n0_max);
    gate(
        n0_ok && tail_ok && monotone,
        format!(
            "P_n > {threshold} for n >= n0 with n0 <= {}, P_n >= 1 - {:e} for n >= 12, nondecreasing",
            t.peak_n0_max, t.peak_tail
        ),
        format!("n0 = {n0:?}, tail {tail_ok}, monotone {monotone}"),
        json!({
            "n0": n0,
            "delta": peaks.iter().map(|(n, p)| json!({"n": n, "p": fmt_f64(*p), "delta": fmt_f64(p - 0.5)})).collect::<Vec<_>>(),
        }),
    )
}

fn closed_form_minimizer(opts: &SuiteOptions) -> Check {
    let t = &opts.tolerances;
    let model = SeparatedWellsModel::new(opts.epsilon).map_err(|e| e.to_string())?;
    let (b_lo, b_hi) = (model.schedule_beta(1.0), model.schedule_beta(30.0));
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for i in 0..50 {
        let beta = (b_lo.ln() + (b_hi.ln() - b_lo.ln()) * i as f64 / 49.0).exp();
        let closed = n_max_closed(beta, &model).map_err(|e| e.to_string())?.continuous;
        let numeric = numeric_argmin(|n| f_tilde(n, beta, &model), -5.0, 60.0, 1e-6);
        let rel = (numeric - closed).abs() / closed.abs();
        worst = worst.max(rel);
        rows.push(json!({"beta": fmt_f64(beta), "closed": fmt_f64(closed), "numeric": fmt_f64(numeric), "rel": fmt_f64(rel)}));
    }
    gate(
        worst <= t.argmin_rel,
        format!("relative difference <= {:e} at 50 log-spaced beta", t.argmin_rel),
        format!("max relative difference {worst:.3e}"),
        json!({"rows": rows}),
    )
}

/// One row of the offset table.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetRow {
    pub n_max: u32,
    pub k: u32,
    pub side: OffsetSide,
    pub closed_form: f64,
    pub direct: f64,
}

impl OffsetRow {
    pub fn abs_diff(&self) -> f64 {
        (self.closed_form - self.direct).abs()
    }
}

pub fn offset_table(epsilon: f64) -> Result<Vec<OffsetRow>, String> {
    let model = SeparatedWellsModel::new(epsilon).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for n_max in 1..=30u32 {
        let beta = model.schedule_beta(n_max as f64);
        for k in 0..=6u32 {
            for side in [OffsetSide::Plus, OffsetSide::Minus] {
                let x = n_max as f64 + side.sign() * k as f64;
                rows.push(OffsetRow {
                    n_max,
                    k,
                    side,
                    closed_form: offset_free_energy(n_max as f64, k as f64, &model, side),
                    direct: f_tilde(x, beta, &model),
                });
            }
        }
    }
    Ok(rows)
}

fn offsets(opts: &SuiteOptions) -> Result<(Outcome, Vec<OffsetRow>), String> {
    let t = &opts.tolerances;
    let rows = offset_table(opts.epsilon)?;
    let worst = rows
        .iter()
        .map(|r| r.abs_diff() / r.closed_form.abs())
        .fold(0.0, f64::max);
    let o = gate(
        worst <= t.offset_rel,
        format!("relative difference <= {:e} for k <= 6, n_max <= 30", t.offset_rel),
        format!("max relative difference {worst:.3e} over {} rows", rows.len()),
        json!({"rows": rows.len(), "max_rel": fmt_f64(worst)}),
    )?;
    Ok((o, rows))
}

fn ratio_bound(opts: &SuiteOptions) -> Check {
    let t = &opts.tolerances;
    let l = ledger(opts.epsilon, 42, Mode::Exact)?;
    let schedule = beta_schedule(&l, 2, 30).map_err(|e| e.to_string())?;
    let mut cs = Vec::new();
    for e in &schedule.entries {
        let d: BondDistribution = bond_distribution(&l, e.beta).map_err(|e| e.to_string())?;
        let lp = |m: usize| d.log_probability(RegionKind::Annulus(m));
        let base = lp(e.n);
        let c = (1..=l.truncation())
            .filter(|&m| m != e.n)
            .map(|m| (base - lp(m)) / (m as f64 - e.n as f64).abs())
            .fold(f64::INFINITY, f64::min);
        cs.push((e.n, c));
    }
    let c_ok = cs.iter().all(|&(_, c)| c >= t.ratio_c_min);
    let ratios: Vec<(usize, f64)> = cs.windows(2).map(|w| (w[0].0, w[1].1 / w[0].1)).collect();
    let growth_ok = ratios
        .iter()
        .filter(|(n, _)| *n >= 15)
        .all(|(_, r)| (r / 3.0 - 1.0).abs() <= t.ratio_growth);
    let worst_growth = ratios
        .iter()
        .filter(|(n, _)| *n >= 15)
        .map(|(_, r)| (r / 3.0 - 1.0).abs())
        .fold(0.0, f64::max);
    let min_c = cs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    gate(
        c_ok && growth_ok,
        format!(
            "c_n >= {} for n >= 2 and |c_(n+1)/c_n / 3 - 1| <= {} from n = 15",
            t.ratio_c_min, t.ratio_growth
        ),
        format!("min c_n {min_c:.4e}, worst growth deviation {worst_growth:.3e}"),
        json!({
            "c": cs.iter().map(|(n, c)| json!({"n": n, "c": fmt_f64(*c)})).collect::<Vec<_>>(),
            "growth": ratios.iter().map(|(n, r)| json!({"n": n, "ratio": fmt_f64(*r)})).collect::<Vec<_>>(),
        }),
    )
}

/// Row of the convexity table: second difference at `n` and the β=0 bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityRow {
    pub beta: f64,
    pub n: i64,
    pub second_difference: f64,
    pub lower_bound: f64,
}

fn convexity(opts: &SuiteOptions) -> Result<(Outcome, Vec<ConvexityRow>), String> {
    let t = &opts.tolerances;
    let model = SeparatedWellsModel::new(opts.epsilon).map_err(|e| e.to_string())?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed.wrapping_add(6));
    let mut rows = Vec::new();
    let mut all_positive = true;
    let mut betas = vec![0.0];
    betas.extend((0..100).map(|_| 10f64.powf(rng.gen_range(-3.0..15.0))));
    for &beta in &betas {
        let r = convexity_check(&model, beta, 1, 60);
        all_positive &= r.all_positive;
        for &(n, d) in &r.second_differences {
            rows.push(ConvexityRow {
                beta,
                n,
                second_difference: d,
                lower_bound: 4.0 / 3.0 * model.c_eps * 3f64.powi(n as i32 - 1),
            });
        }
    }
    let bound_ok = rows
        .iter()
        .filter(|r| r.beta == 0.0)
        .all(|r| r.second_difference >= r.lower_bound * (1.0 - t.convexity_rel));
    let o = gate(
        all_positive && bound_ok,
        format!(
            "second differences > 0 on n = 1..60 for 100 random beta; at beta = 0 >= (4/3) c 3^(n-1) (1 - {:e})",
            t.convexity_rel
        ),
        format!("all positive {all_positive}, beta = 0 bound {bound_ok}"),
        json!({"betas": betas.len()}),
    )?;
    Ok((o, rows))
}

pub fn offset_and_convexity_tables(opts: &SuiteOptions) -> Result<(Vec<OffsetRow>, Vec<ConvexityRow>), String> {
    Ok((offsets(opts)?.1, convexity(opts)?.1))
}

fn quadrature(opts: &SuiteOptions) -> Check {
    let t = &opts.tolerances;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for eps in [0.2, 0.25] {
        let l = ledger(eps, 4, Mode::Exact)?;
        for beta in [0.0, 5.0, 20.0, 50.0] {
            let d = bond_distribution(&l, beta).map_err(|e| e.to_string())?;
            for (kind, q) in quadrature_probabilities(eps, 4, beta, 1e-13) {
                let p = d.probability(kind);
                let rel = (p - q).abs() / q.abs();
                worst = worst.max(rel);
                rows.push(json!({"epsilon": eps, "beta": beta, "region": kind.to_string(), "exact": fmt_f64(p), "quadrature": fmt_f64(q), "rel": fmt_f64(rel)}));
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    gate(
        worst <= t.quadrature_rel && seconds < t.quadrature_seconds,
        format!("relative difference <= {:e}, under {} s", t.quadrature_rel, t.quadrature_seconds),
        format!(
            "max relative difference {worst:.3e}, runtime limit {}",
            if seconds < t.quadrature_seconds { "met" } else { "exceeded" }
        ),
        json!({"rows": rows}),
    )
}

/// Total variation distance between a count histogram and probabilities.
pub fn total_variation(counts: &[u64], probabilities: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    0.5 * counts
        .iter()
        .zip(probabilities)
        .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
        .sum::<f64>()
}

fn mcmc_vs_exact(opts: &SuiteOptions) -> Check {
    let t = &opts.tolerances;
    let (eps, beta) = (0.25, 20.0);
    let l = ledger(eps, 4, Mode::Exact)?;
    let d = bond_distribution(&l, beta).map_err(|e| e.to_string())?;
    let sweeps = t.mcmc_sweeps as u64;
    let burn_in = (sweeps / 100).max(1);
    let thin = 100.min(sweeps - burn_in).max(1);
    let mut state =
        LatticeState::new(&[1000], beta, opts.seed.wrapping_add(8), InitPolicy::Random).map_err(|e| e.to_string())?;
    let mut hist = vec![0u64; l.truncation() + 1];
    let start = Instant::now();
    run_chain_with(&mut state, &l, sweeps, thin, burn_in, |r| {
        for (h, c) in hist.iter_mut().zip(&r.bond_well_histogram) {
            *h += c;
        }
    })
    .map_err(|e| e.to_string())?;
    let seconds = start.elapsed().as_secs_f64();
    let tv = total_variation(&hist, &d.probabilities);
    let total: u64 = hist.iter().sum();
    gate(
        tv <= t.mcmc_tv,
        format!("TV <= {} after {sweeps} sweeps (runtime target {} s)", t.mcmc_tv, t.mcmc_seconds),
        format!(
            "TV {tv:.4e}, runtime target {}, acceptance {:.3}",
            if seconds < t.mcmc_seconds { "met" } else { "missed" },
            state.acceptance_rate()
        ),
        json!({
            "tv": fmt_f64(tv),
            "runtime_target_met": seconds < t.mcmc_seconds,
            "histogram": hist.iter().map(|&c| fmt_f64(c as f64 / total as f64)).collect::<Vec<_>>(),
            "exact": d.probabilities.iter().map(|&p| fmt_f64(p)).collect::<Vec<_>>(),
        }),
    )
}

fn correlations(opts: &SuiteOptions) -> Check {
    let t = &opts.tolerances;
    let (eps, beta) = (0.25, 20.0);
    let l = ledger(eps, 4, Mode::Exact)?;
    let sampler = BondSampler::new(&l, beta).map_err(|e| e.to_string())?;
    let m = sampler.distribution().order_parameter(&l);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed.wrapping_add(9));
    let samples = t.correlation_samples as usize;
    let mut sums = [0.0f64; 5];
    let mut squares = [0.0f64; 5];
    for _ in 0..samples {
        let (state, _) = sample_chain_exact_with(6, &sampler, &l, &mut rng).map_err(|e| e.to_string())?;
        let a = state.angles();
        for r in 1..=5 {
            let c = a[0].wrapping_sub(a[r]).signed_radians().cos();
            sums[r - 1] += c;
            squares[r - 1] += c * c;
        }
    }
    let n = samples as f64;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for r in 1..=5 {
        let mean = sums[r - 1] / n;
        let var = (squares[r - 1] / n - mean * mean) * n / (n - 1.0);
        let se = (var / n).sqrt();
        let expected = m.powi(r as i32);
        let z = (mean - expected).abs() / se;
        worst = worst.max(z);
        rows.push(json!({"r": r, "mean": fmt_f64(mean), "expected": fmt_f64(expected), "se": fmt_f64(se), "z": fmt_f64(z)}));
    }
    gate(
        worst <= t.correlation_sigmas,
        format!("|mean - m^r| <= {} standard errors for r = 1..5", t.correlation_sigmas),
        format!("worst deviation {worst:.2} standard errors, m = {m:.6}"),
        json!({"order_parameter": fmt_f64(m), "rows": rows}),
    )
}

fn demo_2d(opts: &SuiteOptions) -> Check {
    let t = &opts.tolerances;
    let l = ledger(0.25, 4, Mode::Exact)?;
    let schedule = beta_schedule(&l, 2, 3).map_err(|e| e.to_string())?;
    let sweeps = t.demo_sweeps as u64;
    let jobs: Vec<(usize, f64, u64)> = (0..3u64)
        .flat_map(|s| schedule.entries.iter().map(move |e| (e.n, e.beta, s)))
        .collect();
    let base = opts.seed.wrapping_add(10);
    let results: Vec<Result<ctd_core::lattice::CtdEntry, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(n, beta, s)| {
                let l = &l;
                scope.spawn(move || {
                    ctd_entry(l, n, beta, &[32, 32], sweeps, base.wrapping_add(s), InitPolicy::Random)
                        .map_err(|e| e.to_string())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let entries = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let per_seed: Vec<(f64, f64)> = entries.chunks(2).map(|c| (c[0].nn_bond_order, c[1].nn_bond_order)).collect();
    let consistent = per_seed.iter().all(|&(lo, hi)| lo > 0.0 && hi < 0.0);
    Ok(Outcome {
        gating: false,
        passed: consistent,
        expected: "nn_bond_order positive at beta_2, negative at beta_3, for each of 3 seeds".into(),
        actual: per_seed
            .iter()
            .map(|(a, b)| format!("({a:+.3}, {b:+.3})"))
            .collect::<Vec<_>>()
            .join(" "),
        details: json!({
            "betas": schedule.entries.iter().map(|e| fmt_f64(e.beta)).collect::<Vec<_>>(),
            "sweeps": sweeps,
            "runs": entries.iter().map(|e| json!({
                "n": e.n,
                "seed": e.seed,
                "nn_bond_order": fmt_f64(e.nn_bond_order),
                "magnetization": fmt_f64(e.magnetization),
                "staggered_magnetization": fmt_f64(e.staggered_magnetization),
                "dominant_well": e.dominant_well,
                "dominant_fraction": fmt_f64(e.dominant_fraction),
            })).collect::<Vec<_>>(),
        }),
    })
}
