//! Separated-wells approximation of the well free energy.
//!
//! Ignoring that the wells nest, the log-probability of well `n` is
//! `−f̃_β(n)` with `f̃_β(n) = 3β/2^(n+1) + c_ε 3^n`. Its continuous minimizer
//! has a closed form, it is strictly convex in `n`, and its gaps around the
//! minimizer grow like `3^n`. These functions evaluate `f̃` on real `n`
//! through `exp(n ln 2)`/`exp(n ln 3)`; there are no integer fast paths.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::logmath::log_sub_exp;
use crate::potential::WellLedger;
use crate::{Error, Result};

const LN_3: f64 = 1.098_612_288_668_109_8;
const LN_6: f64 = LN_2 + LN_3;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeparatedWellsModel {
    /// `c_ε = −ln ε`.
    pub c_eps: f64,
    /// `a = ln 3 / ln 2`.
    pub a: f64,
}

impl SeparatedWellsModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParams("epsilon must lie in (0, 1)"));
        }
        Ok(Self {
            c_eps: -libm::log(epsilon),
            a: LN_3 / LN_2,
        })
    }

    pub fn from_ledger(ledger: &WellLedger) -> Self {
        Self {
            c_eps: ledger.params().c_eps(),
            a: LN_3 / LN_2,
        }
    }

    /// `β_m = c_ε (2/3) a 6^m`, the β whose continuous minimizer is `m`.
    pub fn schedule_beta(&self, n_max: f64) -> f64 {
        self.c_eps * (2.0 / 3.0) * self.a * libm::exp(n_max * LN_6)
    }
}

/// `3β/2^(n+1) − ln(ε_n − ε_{n+2})` with the subtraction done on logs.
pub fn f_paper(n: usize, beta: f64, ledger: &WellLedger) -> Result<f64> {
    if n < 1 || n + 2 > ledger.truncation() {
        return Err(Error::InvalidArgument("f_paper needs 1 <= n <= truncation - 2"));
    }
    let outer = ledger.well(n).log_half_width;
    let inner = ledger.well(n + 2).log_half_width;
    Ok(3.0 * beta * libm::ldexp(1.0, -(n as i32) - 1) - log_sub_exp(outer, inner))
}

/// `f̃_β(n) = 3β/2^(n+1) + c_ε 3^n` on real `n`.
#[inline]
pub fn f_tilde(n: f64, beta: f64, model: &SeparatedWellsModel) -> f64 {
    3.0 * beta * libm::exp(-(n + 1.0) * LN_2) + model.c_eps * libm::exp(n * LN_3)
}

/// Continuous minimizer of `f̃_β` with the neighbouring integers.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NMax {
    pub continuous: f64,
    pub floor: (i64, f64),
    pub ceil: (i64, f64),
}

impl NMax {
    /// Integer with the smaller `f̃`; ties go to the lower index.
    pub fn best_integer(&self) -> i64 {
        if self.ceil.1 < self.floor.1 {
            self.ceil.0
        } else {
            self.floor.0
        }
    }
}

/// `n_max = log₆(3β ln2 / (2 c_ε ln3))`.
pub fn n_max_closed(beta: f64, model: &SeparatedWellsModel) -> Result<NMax> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument("beta must be positive and finite"));
    }
    let continuous = libm::log(3.0 * beta * LN_2 / (2.0 * model.c_eps * LN_3)) / LN_6;
    // a schedule β for m = 1 may land a rounding error below 1
    if continuous < 1.0 - 1e-12 {
        return Err(Error::OutOfRange { value: continuous });
    }
    let lo = libm::floor(continuous);
    let hi = libm::ceil(continuous);
    Ok(NMax {
        continuous,
        floor: (lo as i64, f_tilde(lo, beta, model)),
        ceil: (hi as i64, f_tilde(hi, beta, model)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OffsetSide {
    Plus,
    Minus,
}

impl OffsetSide {
    pub fn sign(self) -> f64 {
        match self {
            OffsetSide::Plus => 1.0,
            OffsetSide::Minus => -1.0,
        }
    }
}

/// `f̃_{β_m}(m ± k) = 3^m c_ε (2^(∓k) a + 3^(±k))` at the schedule β for `m`.
pub fn offset_free_energy(n_max: f64, k: f64, model: &SeparatedWellsModel, side: OffsetSide) -> f64 {
    let s = side.sign();
    libm::exp(n_max * LN_3) * model.c_eps * (libm::exp(-s * k * LN_2) * model.a + libm::exp(s * k * LN_3))
}

/// Smallest gap `f̃(m ± 1) − f̃(m)` at `β_m`; by convexity every `k`-step gap
/// is at least `k` times this.
///
/// Equals `3^m c_ε · min(2 − a/2, a − 2/3)`; the minus side is the smaller.
pub fn ratio_exponent(n_max: f64, model: &SeparatedWellsModel) -> f64 {
    let base = offset_free_energy(n_max, 0.0, model, OffsetSide::Plus);
    let plus = offset_free_energy(n_max, 1.0, model, OffsetSide::Plus) - base;
    let minus = offset_free_energy(n_max, 1.0, model, OffsetSide::Minus) - base;
    libm::fmin(plus, minus)
}

/// Discrete second differences of `f̃_β` over `n_lo..=n_hi`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvexityReport {
    pub beta: f64,
    /// `(n, f̃(n+1) − 2f̃(n) + f̃(n−1))`.
    pub second_differences: Vec<(i64, f64)>,
    pub min_second_difference: f64,
    pub min_at: i64,
    pub all_positive: bool,
}

pub fn convexity_check(model: &SeparatedWellsModel, beta: f64, n_lo: i64, n_hi: i64) -> ConvexityReport {
    let second_differences: Vec<(i64, f64)> = (n_lo..=n_hi)
        .map(|n| {
            let x = n as f64;
            let d2 = f_tilde(x + 1.0, beta, model) - 2.0 * f_tilde(x, beta, model) + f_tilde(x - 1.0, beta, model);
            (n, d2)
        })
        .collect();
    let (min_at, min_second_difference) = second_differences
        .iter()
        .copied()
        .fold((n_lo, f64::INFINITY), |acc, (n, d)| if d < acc.1 { (n, d) } else { acc });
    ConvexityReport {
        beta,
        all_positive: second_differences.iter().all(|&(_, d)| d > 0.0),
        second_differences,
        min_second_difference,
        min_at,
    }
}
