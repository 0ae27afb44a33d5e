//! The wells-in-wells potential on the circle.
//!
//! `U(x)` is the depth of the deepest well containing the bond angle `x`, or
//! zero outside every well. Well `n` is ferromagnetic (centered at 0) for even
//! `n` and antiferromagnetic (centered at π) for odd `n`; its half-width is
//! `ε^(3^n)`, stored only as `3^n · ln ε` since the raw width underflows
//! already around `n = 6` for `ε = 0.1`.

use alloc::vec::Vec;

use crate::{Error, Result, PI, TAU};

/// Largest supported truncation: keeps `3^N · ln ε` comfortably finite.
pub const MAX_TRUNCATION: usize = 600;

/// Which well-energy convention the bond measure uses.
///
/// `Exact` integrates the potential as written (annulus `n` has energy
/// `1/2 − 2^-(n+1)`); `Paper` uses the effective weight `exp(−3β/2^(n+1))`.
/// The two agree up to `β → 3β` and a β-dependent constant absorbed by the
/// partition function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    #[default]
    Exact,
    Paper,
}

impl Mode {
    /// Multiplier applied to β in the effective region energy.
    #[inline]
    pub fn beta_scale(self) -> f64 {
        match self {
            Mode::Exact => 1.0,
            Mode::Paper => 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Character {
    Ferromagnetic,
    Antiferromagnetic,
}

impl Character {
    #[inline]
    pub fn of_index(n: usize) -> Self {
        if n % 2 == 0 {
            Character::Ferromagnetic
        } else {
            Character::Antiferromagnetic
        }
    }

    #[inline]
    pub fn center(self) -> f64 {
        match self {
            Character::Ferromagnetic => 0.0,
            Character::Antiferromagnetic => PI,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Character::Ferromagnetic => "F",
            Character::Antiferromagnetic => "AF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    epsilon: f64,
    truncation: usize,
    mode: Mode,
}

impl ModelParams {
    pub fn new(epsilon: f64, truncation: usize, mode: Mode) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParams("epsilon must lie in (0, 1)"));
        }
        if !(epsilon * epsilon * epsilon < PI / 4.0) {
            return Err(Error::InvalidParams("epsilon^3 must be below pi/4"));
        }
        if truncation < 2 {
            return Err(Error::InvalidParams("truncation must be at least 2"));
        }
        if truncation > MAX_TRUNCATION {
            return Err(Error::InvalidParams("truncation exceeds 600"));
        }
        Ok(Self {
            epsilon,
            truncation,
            mode,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `c_ε = −ln ε`.
    pub fn c_eps(&self) -> f64 {
        -libm::log(self.epsilon)
    }

    pub fn with_mode(self, mode: Mode) -> Self {
        Self { mode, ..self }
    }
}

/// One step of the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Well {
    pub index: usize,
    pub character: Character,
    pub center: f64,
    /// `3^n · ln ε`.
    pub log_half_width: f64,
    /// Cumulative depth `1/2 − 2^-(n+1)`.
    pub depth: f64,
}

impl Well {
    fn new(index: usize, ln_eps: f64) -> Self {
        let character = Character::of_index(index);
        Self {
            index,
            character,
            center: character.center(),
            log_half_width: libm::pow(3.0, index as f64) * ln_eps,
            depth: 0.5 - depth_deficit(index),
        }
    }

    /// `1/2 − depth = 2^-(n+1)`, exact for every index.
    #[inline]
    pub fn depth_deficit(&self) -> f64 {
        depth_deficit(self.index)
    }

    #[inline]
    pub fn contains_distance_log(&self, log_distance: f64) -> bool {
        log_distance <= self.log_half_width
    }
}

#[inline]
pub(crate) fn depth_deficit(n: usize) -> f64 {
    libm::ldexp(1.0, -(n as i32) - 1)
}

/// The potential in tabulated form: wells `1..=truncation`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WellLedger {
    params: ModelParams,
    wells: Vec<Well>,
}

pub fn build_ledger(params: ModelParams) -> Result<WellLedger> {
    WellLedger::new(params)
}

impl WellLedger {
    pub fn new(params: ModelParams) -> Result<Self> {
        let ln_eps = libm::log(params.epsilon);
        let wells: Vec<Well> = (1..=params.truncation)
            .map(|n| Well::new(n, ln_eps))
            .collect();
        if wells.iter().any(|w| !w.log_half_width.is_finite()) {
            return Err(Error::InvalidParams("well widths not representable in the log domain"));
        }
        Ok(Self { params, wells })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.params.mode
    }

    pub fn truncation(&self) -> usize {
        self.params.truncation
    }

    pub fn wells(&self) -> &[Well] {
        &self.wells
    }

    /// Well `n` (1-based). Panics outside `1..=truncation`.
    pub fn well(&self, n: usize) -> &Well {
        &self.wells[n - 1]
    }

    /// Same ledger geometry under a different energy convention.
    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            params: self.params.with_mode(mode),
            wells: self.wells.clone(),
        }
    }

    /// Largest `n` whose well contains `x`, or `None` outside every well.
    pub fn deepest_containing_well(&self, x: f64) -> Option<usize> {
        let x = reduce_angle(x);
        let to_zero = if x <= PI { x } else { TAU - x };
        let to_pi = libm::fabs(x - PI);
        let (family_start, distance) = if to_pi < to_zero {
            (1, to_pi)
        } else {
            (2, to_zero)
        };
        let log_d = libm::log(distance);
        let mut deepest = None;
        let mut n = family_start;
        while n <= self.truncation() {
            if !self.well(n).contains_distance_log(log_d) {
                break;
            }
            deepest = Some(n);
            n += 2;
        }
        deepest
    }

    /// `U(x)`.
    pub fn evaluate_potential(&self, x: f64) -> f64 {
        self.deepest_containing_well(x)
            .map_or(0.0, |n| self.well(n).depth)
    }
}

/// Reduce to `[0, 2π)`.
#[inline]
pub fn reduce_angle(x: f64) -> f64 {
    let mut r = libm::fmod(x, TAU);
    if r < 0.0 {
        r += TAU;
    }
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger(eps: f64, n: usize) -> WellLedger {
        WellLedger::new(ModelParams::new(eps, n, Mode::Exact).unwrap()).unwrap()
    }

    #[test]
    fn depths_of_first_wells() {
        let l = ledger(0.1, 6);
        assert_eq!(l.well(1).depth, 0.25);
        assert_eq!(l.well(1).center, PI);
        assert_eq!(l.well(2).depth, 0.375);
        assert_eq!(l.well(2).center, 0.0);
        assert_eq!(l.well(5).depth, 31.0 / 64.0);
        assert_eq!(l.wells().len(), 6);
    }

    #[test]
    fn depth_partial_sums_match_coefficients() {
        // direct summation of the two families' coefficients
        let l = ledger(0.3, 12);
        for w in l.wells() {
            let mut sum = 0.0;
            let mut m = w.index;
            while m >= 1 {
                sum += coefficient(m);
                if m < 2 {
                    break;
                }
                m -= 2;
            }
            assert_eq!(sum, w.depth, "well {}", w.index);
        }
    }

    fn coefficient(m: usize) -> f64 {
        if m == 1 {
            return 0.25;
        }
        // m = 2k: 2^-2k + 2^-(2k+1); m = 2k+1: 2^-(2k+1) + 2^-(2k+2)
        libm::pow(2.0, -(m as f64)) + libm::pow(2.0, -(m as f64) - 1.0)
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 4, Mode::Exact).is_err());
        assert!(ModelParams::new(1.0, 4, Mode::Exact).is_err());
        assert!(ModelParams::new(0.93, 4, Mode::Exact).is_err());
        assert!(ModelParams::new(0.1, 1, Mode::Exact).is_err());
        assert!(ModelParams::new(f64::NAN, 4, Mode::Exact).is_err());
        assert!(ModelParams::new(0.92, 2, Mode::Exact).is_ok());
    }

    #[test]
    fn potential_examples() {
        let l = ledger(0.1, 6);
        assert_eq!(l.evaluate_potential(PI / 2.0), 0.0);
        assert_eq!(l.evaluate_potential(PI), 31.0 / 64.0);
        assert_eq!(l.evaluate_potential(0.0), 63.0 / 128.0);
        assert_eq!(l.evaluate_potential(TAU), 63.0 / 128.0);
        assert_eq!(l.deepest_containing_well(PI / 2.0), None);
    }

    #[test]
    fn deepest_at_zero_depends_on_parity() {
        assert_eq!(ledger(0.1, 6).deepest_containing_well(0.0), Some(6));
        assert_eq!(ledger(0.1, 7).deepest_containing_well(0.0), Some(6));
        assert_eq!(ledger(0.1, 7).deepest_containing_well(PI), Some(7));
    }

    #[test]
    fn inside_first_outside_third() {
        let eps: f64 = 0.25;
        let l = ledger(eps, 4);
        let x = PI - libm::pow(eps, 3.0) * 0.99;
        assert_eq!(l.deepest_containing_well(x), Some(1));
        let x = PI - libm::pow(eps, 3.0) * 1.01;
        assert_eq!(l.deepest_containing_well(x), None);
    }

    #[test]
    fn telescoping_increments() {
        let l = ledger(0.2, 50);
        for n in 1..50 {
            let d = l.well(n + 1).depth - l.well(n).depth;
            assert_eq!(d, libm::ldexp(1.0, -(n as i32) - 2), "n = {n}");
        }
        for n in 3..=50 {
            let d = l.well(n).depth - l.well(n - 2).depth;
            assert_eq!(d, 3.0 * libm::ldexp(1.0, -(n as i32) - 1), "n = {n}");
        }
    }

    #[test]
    fn widths_shrink_and_nest() {
        let l = ledger(0.1, 40);
        for pair in l.wells().windows(2) {
            assert!(pair[1].log_half_width < pair[0].log_half_width);
            assert!(pair[1].depth > pair[0].depth);
            assert!(pair[1].depth < 0.5 || pair[1].index > 52);
        }
        for n in 1..=38 {
            assert_eq!(l.well(n).character, l.well(n + 2).character);
        }
    }

    #[test]
    fn huge_truncation_rejected() {
        assert!(ModelParams::new(0.1, MAX_TRUNCATION + 1, Mode::Exact).is_err());
        let l = ledger(1e-300, MAX_TRUNCATION);
        assert!(l.wells().iter().all(|w| w.log_half_width.is_finite()));
    }
}
