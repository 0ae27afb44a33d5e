//! Exact Gibbs measure of a single bond on the circle.
//!
//! The circle splits into the annuli `annulus(n) = well n \ well n+2` for
//! `n = 1..=N` and the background outside wells 1 and 2. The potential is
//! constant on each region, so the bond measure at inverse temperature β is a
//! finite distribution with weights `measure · exp(β U)`.
//!
//! All arithmetic is done on logarithms. In exact mode every annulus energy
//! is `1/2 − 2^-(n+1)`; the common `β/2` is carried separately in
//! [`BondDistribution::log_shift`] so that the β-dependent part of each log
//! weight keeps full relative precision even for β around `10^31`.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand::Rng;

use crate::logmath::{log1m_exp_neg, log_add_exp, log_sin_from_log, log_sub_exp, log_sum_exp, sinc};
use crate::potential::{depth_deficit, Character, Mode, WellLedger};
use crate::{Error, Result, PI, TAU};

/// Top-two annulus log weights closer than this (relative to their size,
/// with an absolute floor of the same value) are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RegionKind {
    Annulus(usize),
    Background,
}

impl RegionKind {
    pub fn center(self) -> f64 {
        match self {
            RegionKind::Annulus(n) => Character::of_index(n).center(),
            RegionKind::Background => 0.0,
        }
    }
}

impl core::fmt::Display for RegionKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RegionKind::Annulus(n) => write!(f, "annulus{n}"),
            RegionKind::Background => f.write_str("background"),
        }
    }
}

/// A piece of the circle on which the potential is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Region {
    pub kind: RegionKind,
    /// ln of the arc length.
    pub log_measure: f64,
    /// `U` on the region.
    pub energy: f64,
}

/// Regions in the order annulus 1, …, annulus N, background.
pub fn regions(ledger: &WellLedger) -> Vec<Region> {
    let n_wells = ledger.truncation();
    let mut out = Vec::with_capacity(n_wells + 1);
    for w in ledger.wells() {
        let mut log_measure = LN_2 + w.log_half_width;
        if w.index + 2 <= n_wells {
            let inner = ledger.well(w.index + 2).log_half_width;
            log_measure += log1m_exp_neg(w.log_half_width - inner);
        }
        out.push(Region {
            kind: RegionKind::Annulus(w.index),
            log_measure,
            energy: w.depth,
        });
    }
    out.push(Region {
        kind: RegionKind::Background,
        log_measure: background_log_measure(ledger),
        energy: 0.0,
    });
    out
}

/// `ln(2π − 2ε₁ − 2ε₂)`.
fn background_log_measure(ledger: &WellLedger) -> f64 {
    let e1 = libm::exp(ledger.well(1).log_half_width);
    let e2 = libm::exp(ledger.well(2).log_half_width);
    libm::log(TAU) + libm::log1p(-(e1 + e2) / PI)
}

/// Effective energy relative to the top of the potential (`U − 1/2`), scaled
/// by the mode's β multiplier.
#[inline]
fn relative_energy(mode: Mode, kind: RegionKind) -> f64 {
    let raw = match kind {
        RegionKind::Annulus(n) => -depth_deficit(n),
        RegionKind::Background => -0.5,
    };
    mode.beta_scale() * raw
}

/// Log weight of a region with the mode-dependent constant `log_shift`
/// removed.
#[inline]
pub fn relative_log_weight(mode: Mode, region: &Region, beta: f64) -> f64 {
    region.log_measure + beta * relative_energy(mode, region.kind)
}

/// Constant dropped by [`relative_log_weight`]: `β/2` in exact mode, zero in
/// paper mode.
#[inline]
pub fn log_shift(mode: Mode, beta: f64) -> f64 {
    match mode {
        Mode::Exact => 0.5 * beta,
        Mode::Paper => 0.0,
    }
}

/// `ln(measure) + β·U` in exact mode; `ln(measure) − 3β/2^(n+1)` for
/// annuli (and `ln(measure) − 3β/2` for the background) in paper mode.
pub fn log_region_weight(ledger: &WellLedger, region: &Region, beta: f64) -> f64 {
    match ledger.mode() {
        Mode::Exact => region.log_measure + beta * region.energy,
        Mode::Paper => relative_log_weight(Mode::Paper, region, beta),
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 0.0 {
        Ok(())
    } else if beta.is_infinite() {
        Err(Error::Overflow { beta, region: 0 })
    } else {
        Err(Error::InvalidArgument("beta must be a finite non-negative number"))
    }
}

/// Normalized single-bond measure at one inverse temperature.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BondDistribution {
    pub beta: f64,
    pub mode: Mode,
    pub regions: Vec<Region>,
    /// Per-region log weights minus `log_shift`.
    pub log_weights: Vec<f64>,
    pub log_shift: f64,
    /// `ln Z_β − log_shift`.
    pub log_partition: f64,
    pub probabilities: Vec<f64>,
}

/// Result of [`argmax_well`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArgmaxWell {
    /// Most probable annulus.
    pub well: usize,
    /// Runner-up annulus is within [`DEGENERACY_TOL`].
    pub degenerate: bool,
    /// The background outweighs every annulus.
    pub background_dominates: bool,
}

pub fn bond_distribution(ledger: &WellLedger, beta: f64) -> Result<BondDistribution> {
    check_beta(beta)?;
    let mode = ledger.mode();
    let regions = regions(ledger);
    let log_weights: Vec<f64> = regions
        .iter()
        .map(|r| relative_log_weight(mode, r, beta))
        .collect();
    if let Some(i) = log_weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::Overflow { beta, region: i });
    }
    let log_partition = log_sum_exp(&log_weights);
    let probabilities = log_weights
        .iter()
        .map(|w| libm::exp(w - log_partition))
        .collect();
    Ok(BondDistribution {
        beta,
        mode,
        regions,
        log_weights,
        log_shift: log_shift(mode, beta),
        log_partition,
        probabilities,
    })
}

impl BondDistribution {
    pub fn truncation(&self) -> usize {
        self.regions.len() - 1
    }

    pub fn index_of(&self, kind: RegionKind) -> usize {
        match kind {
            RegionKind::Annulus(n) => n - 1,
            RegionKind::Background => self.truncation(),
        }
    }

    pub fn probability(&self, kind: RegionKind) -> f64 {
        self.probabilities[self.index_of(kind)]
    }

    /// `ln P(region)`, finite even where the probability underflows.
    pub fn log_probability(&self, kind: RegionKind) -> f64 {
        self.log_weights[self.index_of(kind)] - self.log_partition
    }

    /// Full `ln Z_β`.
    pub fn full_log_partition(&self) -> f64 {
        self.log_shift + self.log_partition
    }

    pub fn argmax_well(&self) -> ArgmaxWell {
        let n = self.truncation();
        let annuli = &self.log_weights[..n];
        let mut best = 0;
        for i in 1..n {
            if annuli[i] > annuli[best] {
                best = i;
            }
        }
        let runner_up = annuli
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != best)
            .map(|(_, &w)| w)
            .fold(f64::NEG_INFINITY, f64::max);
        let top = annuli[best];
        let scale = libm::fmax(1.0, libm::fabs(top));
        ArgmaxWell {
            well: best + 1,
            degenerate: top - runner_up < DEGENERACY_TOL * scale,
            background_dominates: self.log_weights[n] > top,
        }
    }

    /// `E[cos x]` under this distribution.
    ///
    /// Annuli contribute `±P · (sin a − sin b)/(a − b)` with `a`, `b` the
    /// outer and inner half-widths; the background contributes
    /// `(2 sin ε₁ − 2 sin ε₂)/Z`.
    pub fn order_parameter(&self, ledger: &WellLedger) -> f64 {
        let n_wells = self.truncation();
        let mut total = 0.0;
        for w in ledger.wells() {
            let p = self.probabilities[w.index - 1];
            if p == 0.0 {
                continue;
            }
            let outer = libm::exp(w.log_half_width);
            let inner = if w.index + 2 <= n_wells {
                libm::exp(ledger.well(w.index + 2).log_half_width)
            } else {
                0.0
            };
            let correction = libm::cos(0.5 * (outer + inner)) * sinc(0.5 * (outer - inner));
            let sign = match w.character {
                Character::Ferromagnetic => 1.0,
                Character::Antiferromagnetic => -1.0,
            };
            total += sign * p * correction;
        }
        total + self.background_cosine(ledger)
    }

    fn background_cosine(&self, ledger: &WellLedger) -> f64 {
        let l1 = ledger.well(1).log_half_width;
        let l2 = ledger.well(2).log_half_width;
        // 2 sin a − 2 sin b = 4 cos((a+b)/2) sin((a−b)/2)
        let half_diff = log_sub_exp(l1, l2) - LN_2;
        let mid = 0.5 * (libm::exp(l1) + libm::exp(l2));
        let log_integral = libm::log(4.0) + libm::log(libm::cos(mid)) + log_sin_from_log(half_diff);
        let bg = relative_energy(self.mode, RegionKind::Background) * self.beta;
        libm::exp(log_integral + bg - self.log_partition)
    }
}

pub fn argmax_well(ledger: &WellLedger, beta: f64) -> Result<ArgmaxWell> {
    Ok(bond_distribution(ledger, beta)?.argmax_well())
}

pub fn order_parameter(ledger: &WellLedger, beta: f64) -> Result<f64> {
    Ok(bond_distribution(ledger, beta)?.order_parameter(ledger))
}

/// Bisection for the sign change of a function that is positive at `lo` and
/// negative at `hi`. Runs until the bracket cannot shrink further.
fn bisect_sign_change(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (libm::fabs(f(lo)), libm::fabs(f(hi)));
    if flo <= fhi {
        lo
    } else {
        hi
    }
}

/// Doubles `hi` until `f(hi) ≤ 0`.
fn bracket_above(start: f64, f: &impl Fn(f64) -> f64) -> Option<f64> {
    let mut hi = libm::fmax(start, 1.0);
    for _ in 0..1100 {
        if f(hi) <= 0.0 {
            return Some(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    None
}

/// The β at which annuli `n` and `n + 1` carry equal weight.
pub fn transition_beta(ledger: &WellLedger, n: usize) -> Result<f64> {
    if n == 0 || n + 1 > ledger.truncation() {
        return Err(Error::InvalidArgument("transition needs wells n and n+1 in the ledger"));
    }
    let mode = ledger.mode();
    let regs = regions(ledger);
    let (a, b) = (regs[n - 1], regs[n]);
    // weight(n) − weight(n+1) falls linearly in β
    let gap = |beta: f64| relative_log_weight(mode, &a, beta) - relative_log_weight(mode, &b, beta);
    if gap(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let hi = bracket_above(1.0, &gap).ok_or(Error::Overflow { beta: f64::INFINITY, region: n })?;
    Ok(bisect_sign_change(0.0, hi, gap))
}

/// β above which annulus `n` outweighs the background (0 if it always does).
pub fn background_crossing_beta(ledger: &WellLedger, n: usize) -> Result<f64> {
    if n == 0 || n > ledger.truncation() {
        return Err(Error::InvalidArgument("well index outside the ledger"));
    }
    let mode = ledger.mode();
    let regs = regions(ledger);
    let (bg, an) = (regs[ledger.truncation()], regs[n - 1]);
    let lead = |beta: f64| relative_log_weight(mode, &bg, beta) - relative_log_weight(mode, &an, beta);
    if lead(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let hi = bracket_above(1.0, &lead).ok_or(Error::Overflow { beta: f64::INFINITY, region: n })?;
    Ok(bisect_sign_change(0.0, hi, lead))
}

/// Stationary β of the mode's well free energy for integer `n`:
/// `2 c_ε (ln3/ln2) 6^n` (exact) or `c_ε (2/3) (ln3/ln2) 6^n` (paper).
pub fn closed_form_beta(ledger: &WellLedger, n: usize) -> f64 {
    let a = libm::log(3.0) / LN_2;
    let base = ledger.params().c_eps() * a * libm::pow(6.0, n as f64);
    match ledger.mode() {
        Mode::Exact => 2.0 * base,
        Mode::Paper => base * 2.0 / 3.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScheduleEntry {
    pub n: usize,
    pub beta: f64,
    /// The closed-form β failed verification and was moved inside the
    /// bracket where well `n` dominates.
    pub corrected: bool,
}

impl ScheduleEntry {
    pub fn character(&self) -> Character {
        Character::of_index(self.n)
    }
}

/// Inverse temperatures that pin the dominant bond well, one per index.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TemperatureSchedule {
    pub entries: Vec<ScheduleEntry>,
}

fn dominates(ledger: &WellLedger, n: usize, beta: f64) -> Result<bool> {
    let arg = argmax_well(ledger, beta)?;
    Ok(arg.well == n && !arg.degenerate && !arg.background_dominates)
}

/// Builds `β_n` for `n_lo..=n_hi` and checks each one.
pub fn beta_schedule(ledger: &WellLedger, n_lo: usize, n_hi: usize) -> Result<TemperatureSchedule> {
    if n_lo < 1 || n_lo >= n_hi || n_hi + 1 > ledger.truncation() {
        return Err(Error::InvalidArgument("schedule needs 1 <= n_lo < n_hi <= truncation - 1"));
    }
    let mut entries: Vec<ScheduleEntry> = Vec::with_capacity(n_hi - n_lo + 1);
    for n in n_lo..=n_hi {
        let beta = closed_form_beta(ledger, n);
        let entry = if dominates(ledger, n, beta)? {
            ScheduleEntry { n, beta, corrected: false }
        } else {
            ScheduleEntry {
                n,
                beta: corrected_beta(ledger, n)?,
                corrected: true,
            }
        };
        if let Some(prev) = entries.last() {
            if !(entry.beta > prev.beta) {
                return Err(Error::ScheduleInfeasible { well: n });
            }
        }
        entries.push(entry);
    }
    Ok(TemperatureSchedule { entries })
}

/// Midpoint of the β interval on which annulus `n` beats both neighbours and
/// the background; bracket ends found by bisection.
fn corrected_beta(ledger: &WellLedger, n: usize) -> Result<f64> {
    let mut lo = background_crossing_beta(ledger, n)?;
    if n >= 2 {
        lo = libm::fmax(lo, transition_beta(ledger, n - 1)?);
    }
    let hi = transition_beta(ledger, n)?;
    if !(lo < hi) {
        return Err(Error::ScheduleInfeasible { well: n });
    }
    let beta = 0.5 * (lo + hi);
    if dominates(ledger, n, beta)? {
        Ok(beta)
    } else {
        Err(Error::ScheduleInfeasible { well: n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// A bond angle drawn from the exact measure, kept symbolically.
///
/// `fraction` locates the point inside the region's arc on the given side of
/// the center: for annuli it runs from the outer edge (0) towards the next
/// nested well; for the background it runs from the edge of well 2 towards
/// the edge of well 1. `log_offset` is the ln of the distance to the center
/// and is exact even when `numeric_angle` collapses onto the center.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BondSample {
    pub region: RegionKind,
    pub side: Side,
    pub fraction: f64,
    pub log_offset: f64,
    pub numeric_angle: f64,
    /// `numeric_angle` rounded onto the center.
    pub collapsed: bool,
}

/// Inverse-CDF sampler over the regions of one bond distribution.
#[derive(Debug, Clone)]
pub struct BondSampler {
    distribution: BondDistribution,
    cumulative: Vec<f64>,
    log_half_widths: Vec<f64>,
}

impl BondSampler {
    pub fn new(ledger: &WellLedger, beta: f64) -> Result<Self> {
        let distribution = bond_distribution(ledger, beta)?;
        let mut acc = 0.0;
        let cumulative = distribution
            .probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            distribution,
            cumulative,
            log_half_widths: ledger.wells().iter().map(|w| w.log_half_width).collect(),
        })
    }

    pub fn distribution(&self) -> &BondDistribution {
        &self.distribution
    }

    fn draw_region(&self, u: f64) -> usize {
        let total = *self.cumulative.last().expect("at least three regions");
        let target = u * total;
        let i = self.cumulative.partition_point(|&c| c <= target);
        i.min(self.cumulative.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BondSample {
        let idx = self.draw_region(rng.gen::<f64>());
        let side = if rng.gen::<bool>() { Side::Plus } else { Side::Minus };
        let fraction: f64 = rng.gen();
        let n_wells = self.log_half_widths.len();
        let region = if idx == n_wells {
            RegionKind::Background
        } else {
            RegionKind::Annulus(idx + 1)
        };
        let log_offset = match region {
            RegionKind::Annulus(n) => {
                let outer = self.log_half_widths[n - 1];
                let inner = if n + 2 <= n_wells {
                    self.log_half_widths[n + 1]
                } else {
                    f64::NEG_INFINITY
                };
                // (1 − f)·outer + f·inner
                log_add_exp(libm::log1p(-fraction) + outer, libm::log(fraction) + inner)
            }
            RegionKind::Background => {
                let e1 = libm::exp(self.log_half_widths[0]);
                let e2 = libm::exp(self.log_half_widths[1]);
                libm::log(e2 + fraction * (PI - e1 - e2))
            }
        };
        let center = region.center();
        let offset = libm::exp(log_offset);
        let raw = center + side.sign() * offset;
        let numeric_angle = crate::potential::reduce_angle(raw);
        BondSample {
            region,
            side,
            fraction,
            log_offset,
            numeric_angle,
            collapsed: numeric_angle == center,
        }
    }
}

pub fn sample_bond<R: Rng + ?Sized>(ledger: &WellLedger, beta: f64, rng: &mut R) -> Result<BondSample> {
    Ok(BondSampler::new(ledger, beta)?.sample(rng))
}
