//! Metropolis–Hastings for `H = −Σ_<ij> U(θ_i − θ_j)` on finite lattices.
//!
//! Spins are stored as fixed-point fractions of a full turn in a `u128`, so
//! bond angles are exact wrapping differences and the antiferromagnetic
//! center is exactly half a turn. One unit is `2π / 2^128 ≈ 1.8e-38` rad;
//! wells narrower than that collapse onto their center cell.
//!
//! Chains in d = 1 use free boundaries (bonds are then exactly i.i.d.);
//! d = 2 uses periodic boundaries.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::bond::{BondSample, BondSampler, RegionKind, TemperatureSchedule};
use crate::potential::{Character, WellLedger};
use crate::{Error, Result, TAU};

/// The generator behind every lattice run.
pub type ChainRng = Xoshiro256PlusPlus;

/// Half a turn (π).
pub const HALF_TURN: u128 = 1 << 127;

/// Smallest ε accepted for simulation.
pub const MIN_SIM_EPSILON: f64 = 0.15;
/// Largest truncation accepted for simulation.
pub const MAX_SIM_TRUNCATION: usize = 5;

const F64_UNIT: f64 = 1.0 / (1u64 << 53) as f64;
const RAD_PER_UNIT: f64 = TAU / 340_282_366_920_938_463_463_374_607_431_768_211_456.0;
const LN_UNITS_PER_TURN: f64 = 128.0 * LN_2;

/// A spin angle as a fraction of a full turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Angle(pub u128);

impl Angle {
    pub fn from_radians(x: f64) -> Self {
        let r = crate::potential::reduce_angle(x);
        Angle((r / TAU * 340_282_366_920_938_463_463_374_607_431_768_211_456.0) as u128)
    }

    /// In `[0, 2π)`.
    pub fn radians(self) -> f64 {
        let r = self.0 as f64 * RAD_PER_UNIT;
        if r >= TAU {
            0.0
        } else {
            r
        }
    }

    /// In `[−π, π)`.
    pub fn signed_radians(self) -> f64 {
        (self.0 as i128) as f64 * RAD_PER_UNIT
    }

    #[inline]
    pub fn wrapping_sub(self, other: Angle) -> Angle {
        Angle(self.0.wrapping_sub(other.0))
    }

    #[inline]
    pub fn wrapping_add(self, other: Angle) -> Angle {
        Angle(self.0.wrapping_add(other.0))
    }
}

/// Circle distance to 0 in units.
#[inline]
fn dist_to_zero(b: u128) -> u128 {
    b.min(b.wrapping_neg())
}

/// Uniform in `[0, span)` by masked rejection; exact for any `span ≥ 1`.
#[inline]
fn uniform_below<R: Rng + ?Sized>(rng: &mut R, span: u128) -> u128 {
    if span <= 1 {
        return 0;
    }
    let mask = u128::MAX >> (span - 1).leading_zeros();
    loop {
        let r = rng.gen::<u128>() & mask;
        if r < span {
            return r;
        }
    }
}

/// Half-width of a well in lattice units, `floor(ε_n · 2^128 / 2π)`.
pub fn half_width_units(log_half_width: f64) -> u128 {
    let ln_units = log_half_width - libm::log(TAU) + LN_UNITS_PER_TURN;
    if ln_units < 0.0 {
        0
    } else {
        libm::exp(ln_units) as u128
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    Random,
    Aligned,
    Neel,
}

/// Mixture weights of the single-site proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalMix {
    /// Uniform on the circle.
    pub global: f64,
    /// Uniform inside a well-shaped window around a random neighbour.
    pub well: f64,
}

impl Default for ProposalMix {
    fn default() -> Self {
        Self {
            global: 0.2,
            well: 0.8,
        }
    }
}

impl ProposalMix {
    pub fn new(global: f64, well: f64) -> Result<Self> {
        if !(global >= 0.0 && well >= 0.0 && global + well > 0.0) || !(global + well).is_finite() {
            return Err(Error::InvalidArgument("proposal weights must be non-negative with a positive sum"));
        }
        let total = global + well;
        Ok(Self {
            global: global / total,
            well: well / total,
        })
    }
}

/// Site neighbourhoods and the bond list of a finite lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    dims: Vec<usize>,
    neighbors: Vec<[u32; 4]>,
    /// Bond id of each neighbour slot.
    incident: Vec<[u32; 4]>,
    degree: Vec<u8>,
    bonds: Vec<(u32, u32)>,
    /// +1/−1 checkerboard sign per site.
    parity: Vec<f64>,
}

impl Geometry {
    pub fn new(dims: &[usize]) -> Result<Self> {
        match dims {
            [len] => Self::chain(*len),
            [lx, ly] => Self::torus(*lx, *ly),
            _ => Err(Error::InvalidDims("only d = 1 and d = 2 are supported")),
        }
    }

    fn chain(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidDims("side lengths must be at least 2"));
        }
        if len > u32::MAX as usize {
            return Err(Error::InvalidDims("lattice too large"));
        }
        let mut neighbors = vec![[0u32; 4]; len];
        let mut incident = vec![[0u32; 4]; len];
        let mut degree = vec![0u8; len];
        let mut bonds = Vec::with_capacity(len - 1);
        for i in 0..len - 1 {
            let b = bonds.len() as u32;
            bonds.push((i as u32, i as u32 + 1));
            for (site, other) in [(i, i + 1), (i + 1, i)] {
                neighbors[site][degree[site] as usize] = other as u32;
                incident[site][degree[site] as usize] = b;
                degree[site] += 1;
            }
        }
        let parity = (0..len).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Ok(Self {
            dims: vec![len],
            neighbors,
            incident,
            degree,
            bonds,
            parity,
        })
    }

    fn torus(lx: usize, ly: usize) -> Result<Self> {
        if lx < 2 || ly < 2 {
            return Err(Error::InvalidDims("side lengths must be at least 2"));
        }
        let n = lx.checked_mul(ly).filter(|&n| n <= u32::MAX as usize).ok_or(Error::InvalidDims("lattice too large"))?;
        let idx = |x: usize, y: usize| (y * lx + x) as u32;
        let mut neighbors = vec![[0u32; 4]; n];
        let mut incident = vec![[0u32; 4]; n];
        let mut bonds = Vec::with_capacity(2 * n);
        let mut parity = Vec::with_capacity(n);
        // bond 2i points right from site i, bond 2i + 1 points down
        for y in 0..ly {
            for x in 0..lx {
                let i = idx(x, y) as usize;
                let (right, left) = (idx((x + 1) % lx, y), idx((x + lx - 1) % lx, y));
                let (down, up) = (idx(x, (y + 1) % ly), idx(x, (y + ly - 1) % ly));
                neighbors[i] = [right, left, down, up];
                incident[i] = [2 * i as u32, 2 * left, 2 * i as u32 + 1, 2 * up + 1];
                bonds.push((i as u32, right));
                bonds.push((i as u32, down));
            }
        }
        for y in 0..ly {
            for x in 0..lx {
                parity.push(if (x + y) % 2 == 0 { 1.0 } else { -1.0 });
            }
        }
        Ok(Self {
            dims: vec![lx, ly],
            neighbors,
            incident,
            degree: vec![4; n],
            bonds,
            parity,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.degree.len()
    }

    pub fn bonds(&self) -> &[(u32, u32)] {
        &self.bonds
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i][..self.degree[i] as usize]
    }
}

/// Well geometry in lattice units plus the proposal-density tables.
#[derive(Debug, Clone)]
pub struct WellKernel {
    n_wells: usize,
    /// `W_m` for `m = 1..=N` (index `m − 1`).
    widths: [u128; MAX_SIM_TRUNCATION],
    /// `W_m + 1`, zero past the truncation.
    limits: [u128; MAX_SIM_TRUNCATION + 1],
    /// High halves of `limits`.
    limits_hi: [u64; MAX_SIM_TRUNCATION + 1],
    /// Depth of the deepest ferromagnetic well among the first `K` windows.
    /// Depths are multiples of `2^−(N+1)`; these count them in that unit.
    depth_f: [i32; MAX_SIM_TRUNCATION + 1],
    depth_af: [i32; MAX_SIM_TRUNCATION + 1],
    unit: f64,
    /// Maps a byte to a window index, uniformly; `u8::MAX` means reject.
    pick: [u8; 256],
    /// `Σ_{m ≤ K} 2^128 / (2 W_m + 1)`.
    window_prefix: [f64; MAX_SIM_TRUNCATION + 1],
}

impl WellKernel {
    /// Enforces the simulation regime: ε ≥ 0.15, N ≤ 5, all widths normal
    /// floats.
    pub fn new(ledger: &WellLedger) -> Result<Self> {
        let n_wells = ledger.truncation();
        if n_wells > MAX_SIM_TRUNCATION {
            let w = ledger.well(MAX_SIM_TRUNCATION + 1);
            return Err(Error::RegimeViolation {
                well: w.index,
                log_half_width: w.log_half_width,
                reason: "exceeds the simulation truncation limit of 5",
            });
        }
        if ledger.params().epsilon() < MIN_SIM_EPSILON {
            let w = ledger.well(n_wells);
            return Err(Error::RegimeViolation {
                well: w.index,
                log_half_width: w.log_half_width,
                reason: "is too narrow to simulate (epsilon below 0.15)",
            });
        }
        if let Some(w) = ledger
            .wells()
            .iter()
            .find(|w| !libm::exp(w.log_half_width).is_normal())
        {
            return Err(Error::RegimeViolation {
                well: w.index,
                log_half_width: w.log_half_width,
                reason: "has a half-width that underflows",
            });
        }
        let mut widths = [0u128; MAX_SIM_TRUNCATION];
        let mut limits = [0u128; MAX_SIM_TRUNCATION + 1];
        let mut depth_f = [0; MAX_SIM_TRUNCATION + 1];
        let mut depth_af = [0; MAX_SIM_TRUNCATION + 1];
        let per_unit = libm::ldexp(1.0, n_wells as i32 + 1);
        let mut window_prefix = [0.0; MAX_SIM_TRUNCATION + 1];
        for w in ledger.wells() {
            let m = w.index;
            widths[m - 1] = half_width_units(w.log_half_width);
            limits[m - 1] = widths[m - 1] + 1;
            let cells = (2 * widths[m - 1] + 1) as f64;
            window_prefix[m] = window_prefix[m - 1] + 340_282_366_920_938_463_463_374_607_431_768_211_456.0 / cells;
            match w.character {
                Character::Ferromagnetic => {
                    depth_f[m] = (w.depth * per_unit) as i32;
                    depth_af[m] = depth_af[m - 1];
                }
                Character::Antiferromagnetic => {
                    depth_af[m] = (w.depth * per_unit) as i32;
                    depth_f[m] = depth_f[m - 1];
                }
            }
        }
        Ok(Self {
            n_wells,
            widths,
            limits,
            limits_hi: limits.map(|l| (l >> 64) as u64),
            depth_f,
            depth_af,
            unit: 1.0 / per_unit,
            pick: core::array::from_fn(|v| {
                let keep = 256 - 256 % n_wells;
                if v < keep { (v % n_wells) as u8 } else { u8::MAX }
            }),
            window_prefix,
        })
    }

    pub fn n_wells(&self) -> usize {
        self.n_wells
    }

    pub fn width_units(&self, n: usize) -> u128 {
        self.widths[n - 1]
    }

    /// Number of windows containing a point at distance `d`. Widths shrink
    /// with the index, so these are the first `K` windows.
    #[inline]
    fn count(&self, d: u128) -> usize {
        let hi = (d >> 64) as u64;
        let mut k = 0;
        for &l in &self.limits_hi[..MAX_SIM_TRUNCATION] {
            k += (hi < l) as usize;
        }
        // limits are descending, so only the following ones can tie on the
        // high half; the zero sentinel ends the scan
        while self.limits_hi[k] == hi && d < self.limits[k] {
            k += 1;
        }
        k
    }

    /// Returns `(U, window mass)` for one bond.
    /// Windows are narrower than a quarter turn, so only the nearer center
    /// can contain the bond.
    #[inline(always)]
    fn bond_terms(&self, bond: u128) -> (i32, f64) {
        let d0 = dist_to_zero(bond);
        let dpi = HALF_TURN - d0;
        let k = self.count(d0.min(dpi));
        let depth = if dpi < d0 { self.depth_af[k] } else { self.depth_f[k] };
        (depth, self.window_prefix[k])
    }

    /// `U` of a bond angle.
    #[inline]
    pub fn bond_potential(&self, bond: Angle) -> f64 {
        self.bond_terms(bond.0).0 as f64 * self.unit
    }

    /// Deepest well containing the bond, `None` for the background.
    pub fn bond_region(&self, bond: Angle) -> Option<usize> {
        let k0 = self.count(dist_to_zero(bond.0));
        let kpi = self.count(dist_to_zero(bond.0.wrapping_sub(HALF_TURN)));
        if k0 >= 2 {
            Some(if k0 % 2 == 0 { k0 } else { k0 - 1 })
        } else if kpi >= 1 {
            Some(if kpi % 2 == 1 { kpi } else { kpi - 1 })
        } else {
            None
        }
    }

    /// Histogram slot in bond-distribution order (background last).
    #[inline]
    pub fn region_slot(&self, bond: Angle) -> usize {
        self.bond_region(bond).map_or(self.n_wells, |n| n - 1)
    }
}

/// Spins on a finite lattice together with the chain's RNG.
#[derive(Debug, Clone)]
pub struct LatticeState {
    geometry: Geometry,
    angles: Vec<Angle>,
    pub beta: f64,
    pub sweep_count: u64,
    rng_seed: u64,
    rng: ChainRng,
    pub proposal: ProposalMix,
    /// Cached `Σ_bonds U`, updated incrementally.
    potential_sum: Option<f64>,
    /// Per-bond `(U, window mass)`, valid while `potential_sum` is `Some`.
    bond_cache: Vec<(i32, f64)>,
    /// `exp(β j unit)` for `j` in `±4·2^N`, built for `boltzmann_beta`.
    boltzmann: Vec<f64>,
    boltzmann_beta: f64,
    pub proposed: u64,
    pub accepted: u64,
}

pub fn init_lattice(dims: &[usize], beta: f64, seed: u64, init: InitPolicy) -> Result<LatticeState> {
    LatticeState::new(dims, beta, seed, init)
}

impl LatticeState {
    pub fn new(dims: &[usize], beta: f64, seed: u64, init: InitPolicy) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument("beta must be a finite non-negative number"));
        }
        let geometry = Geometry::new(dims)?;
        let mut rng = ChainRng::seed_from_u64(seed);
        let angles = (0..geometry.n_sites())
            .map(|i| match init {
                InitPolicy::Random => Angle(rng.gen::<u128>()),
                InitPolicy::Aligned => Angle(0),
                InitPolicy::Neel => Angle(if geometry.parity[i] > 0.0 { 0 } else { HALF_TURN }),
            })
            .collect();
        Ok(Self {
            geometry,
            angles,
            beta,
            sweep_count: 0,
            rng_seed: seed,
            rng,
            proposal: ProposalMix::default(),
            potential_sum: None,
            bond_cache: Vec::new(),
            boltzmann: Vec::new(),
            boltzmann_beta: f64::NAN,
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    pub fn set_angle(&mut self, i: usize, angle: Angle) {
        self.angles[i] = angle;
        self.potential_sum = None;
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn n_bonds(&self) -> usize {
        self.geometry.bonds.len()
    }

    #[inline]
    pub fn bond(&self, b: usize) -> Angle {
        let (i, j) = self.geometry.bonds[b];
        self.angles[j as usize].wrapping_sub(self.angles[i as usize])
    }

    pub fn bond_angles(&self) -> impl Iterator<Item = Angle> + '_ {
        (0..self.n_bonds()).map(|b| self.bond(b))
    }

    /// `Σ_bonds U`, recomputed from scratch.
    pub fn recompute_potential_sum(&self, kernel: &WellKernel) -> f64 {
        self.bond_angles().map(|b| kernel.bond_potential(b)).sum()
    }

    /// Cached `Σ_bonds U` if a sweep has run.
    pub fn cached_potential_sum(&self) -> Option<f64> {
        self.potential_sum
    }

    /// `H = −Σ U`.
    pub fn energy(&self, kernel: &WellKernel) -> f64 {
        -self.potential_sum.unwrap_or_else(|| self.recompute_potential_sum(kernel))
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn rebuild_cache(&mut self, kernel: &WellKernel) {
        let cache: Vec<(i32, f64)> = (0..self.n_bonds()).map(|b| kernel.bond_terms(self.bond(b).0)).collect();
        let units: i64 = cache.iter().map(|t| t.0 as i64).sum();
        self.potential_sum = Some(units as f64 * kernel.unit);
        self.bond_cache = cache;
    }

    #[inline]
    fn update_site(&mut self, kernel: &WellKernel, window_weight: &[f64; 5], i: usize) {
        let nbrs = self.geometry.neighbors[i];
        let incident = self.geometry.incident[i];
        let degree = self.geometry.degree[i] as usize;
        let mix = self.proposal;
        // one draw decides global vs window (top 53 bits), the neighbour
        // (bits 0..2, degrees are powers of two), the half-turn (bit 2) and
        // usually the window (bits 3..11)
        let r = self.rng.next_u64();
        let new = if (r >> 11) as f64 * F64_UNIT < mix.global {
            self.rng.gen::<u128>()
        } else {
            let j = nbrs[(r as usize) & (degree - 1)] as usize;
            let shift = if r & 4 != 0 { HALF_TURN } else { 0 };
            let m = match kernel.pick[(r >> 3) as u8 as usize] {
                u8::MAX => self.rng.gen_range(0..kernel.n_wells),
                m => m as usize,
            };
            let w = kernel.widths[m];
            let offset = uniform_below(&mut self.rng, 2 * w + 1).wrapping_sub(w);
            self.angles[j].0.wrapping_add(shift).wrapping_add(offset)
        };
        let (mut u_old, mut w_old, mut u_new, mut w_new) = (0, 0.0, 0, 0.0);
        let mut fresh = [(0, 0.0); 4];
        for k in 0..degree {
            let (u, w) = self.bond_cache[incident[k] as usize];
            u_old += u;
            w_old += w;
            let t = kernel.bond_terms(new.wrapping_sub(self.angles[nbrs[k] as usize].0));
            u_new += t.0;
            w_new += t.1;
            fresh[k] = t;
        }
        let window_weight = window_weight[degree];
        let q_old = mix.global + window_weight * w_old;
        let q_new = mix.global + window_weight * w_new;
        self.proposed += 1;
        let delta = u_new - u_old;
        let accept = if delta >= 0 && q_old >= q_new {
            true
        } else if q_old == 0.0 {
            false
        } else {
            let mid = self.boltzmann.len() / 2;
            let ratio = self.boltzmann[(mid as isize + delta as isize) as usize] * (q_old / q_new);
            self.rng.gen::<f64>() < ratio
        };
        if accept {
            self.angles[i] = Angle(new);
            self.accepted += 1;
            for k in 0..degree {
                self.bond_cache[incident[k] as usize] = fresh[k];
            }
            if let Some(s) = self.potential_sum.as_mut() {
                *s += delta as f64 * kernel.unit;
            }
        }
    }

    /// One Metropolis–Hastings pass over all sites in index order.
    pub fn sweep(&mut self, kernel: &WellKernel) {
        if self.potential_sum.is_none() || self.bond_cache.len() != self.n_bonds() {
            self.rebuild_cache(kernel);
        }
        let span = 4i32 << kernel.n_wells;
        if self.boltzmann_beta.to_bits() != self.beta.to_bits() || self.boltzmann.len() != (2 * span + 1) as usize {
            self.boltzmann = (-span..=span).map(|j| libm::exp(self.beta * (j as f64 * kernel.unit))).collect();
            self.boltzmann_beta = self.beta;
        }
        let mut window_weight = [0.0; 5];
        for (d, w) in window_weight.iter_mut().enumerate().skip(1) {
            *w = self.proposal.well / (2 * d * kernel.n_wells) as f64;
        }
        for i in 0..self.geometry.n_sites() {
            self.update_site(kernel, &window_weight, i);
        }
        self.sweep_count += 1;
    }

    pub fn observe(&self, kernel: &WellKernel) -> ObservableRecord {
        let n_sites = self.angles.len() as f64;
        let (mut mx, mut my, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for (a, &p) in self.angles.iter().zip(&self.geometry.parity) {
            let t = a.radians();
            let (s, c) = (libm::sin(t), libm::cos(t));
            mx += c;
            my += s;
            sx += p * c;
            sy += p * s;
        }
        let mut histogram = vec![0u64; kernel.n_wells + 1];
        let mut cos_sum = 0.0;
        let mut u_sum = 0.0;
        for b in self.bond_angles() {
            histogram[kernel.region_slot(b)] += 1;
            cos_sum += libm::cos(b.signed_radians());
            u_sum += kernel.bond_potential(b);
        }
        let n_bonds = self.n_bonds() as f64;
        ObservableRecord {
            sweep: self.sweep_count,
            energy_per_bond: -u_sum / n_bonds,
            magnetization: [mx / n_sites, my / n_sites],
            staggered_magnetization: [sx / n_sites, sy / n_sites],
            bond_well_histogram: histogram,
            nn_bond_order: cos_sum / n_bonds,
        }
    }
}

/// Measurements taken after one sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservableRecord {
    pub sweep: u64,
    /// `H / #bonds`.
    pub energy_per_bond: f64,
    pub magnetization: [f64; 2],
    pub staggered_magnetization: [f64; 2],
    /// Bonds per deepest well (index `n − 1`), background last.
    pub bond_well_histogram: Vec<u64>,
    /// Mean of `cos(θ_i − θ_j)` over bonds.
    pub nn_bond_order: f64,
}

/// One sweep with a freshly built kernel.
pub fn metropolis_sweep(state: &mut LatticeState, ledger: &WellLedger) -> Result<()> {
    let kernel = WellKernel::new(ledger)?;
    state.sweep(&kernel);
    Ok(())
}

/// Runs `n_sweeps` sweeps and hands a record to `sink` every `thin` sweeps
/// once `burn_in` sweeps have passed.
pub fn run_chain_with<F: FnMut(ObservableRecord)>(
    state: &mut LatticeState,
    ledger: &WellLedger,
    n_sweeps: u64,
    thin: u64,
    burn_in: u64,
    mut sink: F,
) -> Result<()> {
    if n_sweeps <= burn_in {
        return Err(Error::InvalidArgument("n_sweeps must exceed burn_in"));
    }
    if thin == 0 {
        return Err(Error::InvalidArgument("thin must be at least 1"));
    }
    let kernel = WellKernel::new(ledger)?;
    for s in 1..=n_sweeps {
        state.sweep(&kernel);
        if s > burn_in && (s - burn_in) % thin == 0 {
            sink(state.observe(&kernel));
        }
    }
    Ok(())
}

pub fn run_chain(
    state: &mut LatticeState,
    ledger: &WellLedger,
    n_sweeps: u64,
    thin: u64,
    burn_in: u64,
) -> Result<Vec<ObservableRecord>> {
    let mut out = Vec::new();
    run_chain_with(state, ledger, n_sweeps, thin, burn_in, |r| out.push(r))?;
    Ok(out)
}

/// Lattice units for a symbolic bond sample.
///
/// The offset is rounded to the nearest unit and then kept strictly outside
/// the next nested well and inside its own, whenever the unit grid can tell
/// them apart.
pub fn bond_turns(sample: &BondSample, ledger: &WellLedger) -> Angle {
    let n_wells = ledger.truncation();
    let width = |n: usize| half_width_units(ledger.well(n).log_half_width);
    let ln_units = sample.log_offset - libm::log(TAU) + LN_UNITS_PER_TURN;
    let raw = if ln_units < -1.0 {
        0
    } else {
        libm::round(libm::exp(ln_units)) as u128
    };
    let (center, offset) = match sample.region {
        RegionKind::Annulus(n) => {
            let outer = width(n);
            let mut off = raw.min(outer);
            if n + 2 <= n_wells {
                let inner = width(n + 2);
                if off <= inner && inner < outer {
                    off = inner + 1;
                }
            }
            let center = match Character::of_index(n) {
                Character::Ferromagnetic => 0,
                Character::Antiferromagnetic => HALF_TURN,
            };
            (center, off)
        }
        RegionKind::Background => {
            let lo = width(2) + 1;
            let hi = HALF_TURN - width(1) - 1;
            (0, raw.clamp(lo, hi))
        }
    };
    let signed = match sample.side {
        crate::bond::Side::Plus => offset,
        crate::bond::Side::Minus => offset.wrapping_neg(),
    };
    Angle(center).wrapping_add(Angle(signed))
}

/// Exact sample of the free-boundary chain: a uniform first spin followed
/// by i.i.d. bonds from the single-bond measure.
pub fn sample_chain_exact<R: Rng + ?Sized>(
    length: usize,
    ledger: &WellLedger,
    beta: f64,
    rng: &mut R,
) -> Result<(LatticeState, Vec<BondSample>)> {
    let sampler = BondSampler::new(ledger, beta)?;
    sample_chain_exact_with(length, &sampler, ledger, rng)
}

/// [`sample_chain_exact`] reusing a prepared sampler.
pub fn sample_chain_exact_with<R: Rng + ?Sized>(
    length: usize,
    sampler: &BondSampler,
    ledger: &WellLedger,
    rng: &mut R,
) -> Result<(LatticeState, Vec<BondSample>)> {
    let beta = sampler.distribution().beta;
    let mut state = LatticeState::new(&[length], beta, 0, InitPolicy::Aligned)?;
    let mut theta = Angle(rng.gen::<u128>());
    state.set_angle(0, theta);
    let mut bonds = Vec::with_capacity(length - 1);
    for i in 1..length {
        let s = sampler.sample(rng);
        theta = theta.wrapping_add(bond_turns(&s, ledger));
        state.set_angle(i, theta);
        bonds.push(s);
    }
    Ok((state, bonds))
}

/// One schedule entry of [`ctd_demo`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CtdEntry {
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
    /// Mean over post-burn-in records.
    pub nn_bond_order: f64,
    pub magnetization: f64,
    pub staggered_magnetization: f64,
    /// Most populated histogram slot; `None` means the background.
    pub dominant_well: Option<usize>,
    pub dominant_character: Option<Character>,
    pub dominant_fraction: f64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CtdReport {
    pub dims: Vec<usize>,
    pub sweeps: u64,
    pub entries: Vec<CtdEntry>,
    /// Dominant character flips between every pair of consecutive entries.
    pub alternates: bool,
}

/// Runs one chain for a single inverse temperature and summarizes it.
pub fn ctd_entry(
    ledger: &WellLedger,
    n: usize,
    beta: f64,
    dims: &[usize],
    sweeps: u64,
    seed: u64,
    init: InitPolicy,
) -> Result<CtdEntry> {
    let kernel = WellKernel::new(ledger)?;
    let mut state = LatticeState::new(dims, beta, seed, init)?;
    let burn_in = sweeps / 2;
    let thin = core::cmp::max(1, (sweeps - burn_in) / 200);
    let mut records = 0u64;
    let mut order = 0.0;
    let mut mag = 0.0;
    let mut stag = 0.0;
    let mut hist = vec![0u64; kernel.n_wells() + 1];
    run_chain_with(&mut state, ledger, sweeps, thin, burn_in, |r| {
        records += 1;
        order += r.nn_bond_order;
        mag += libm::hypot(r.magnetization[0], r.magnetization[1]);
        stag += libm::hypot(r.staggered_magnetization[0], r.staggered_magnetization[1]);
        for (h, c) in hist.iter_mut().zip(&r.bond_well_histogram) {
            *h += c;
        }
    })?;
    let total: u64 = hist.iter().sum();
    let (slot, &count) = hist
        .iter()
        .enumerate()
        .max_by_key(|&(_, c)| *c)
        .expect("non-empty histogram");
    let dominant_well = (slot < kernel.n_wells()).then_some(slot + 1);
    let r = records.max(1) as f64;
    Ok(CtdEntry {
        n,
        beta,
        seed,
        nn_bond_order: order / r,
        magnetization: mag / r,
        staggered_magnetization: stag / r,
        dominant_well,
        dominant_character: dominant_well.map(Character::of_index),
        dominant_fraction: count as f64 / total.max(1) as f64,
        acceptance_rate: state.acceptance_rate(),
    })
}

/// Whether the dominant character flips at every step of `entries`.
pub fn alternates(entries: &[CtdEntry]) -> bool {
    entries.len() >= 2
        && entries.windows(2).all(|w| match (w[0].dominant_character, w[1].dominant_character) {
            (Some(a), Some(b)) => a != b,
            _ => false,
        })
}

/// Runs a chain at every schedule β (random start, seed `seed + index`).
pub fn ctd_demo(
    ledger: &WellLedger,
    schedule: &TemperatureSchedule,
    dims: &[usize],
    sweeps: u64,
    seed: u64,
) -> Result<CtdReport> {
    WellKernel::new(ledger)?;
    if sweeps < 2 {
        return Err(Error::InvalidArgument("ctd demo needs at least 2 sweeps"));
    }
    let entries = schedule
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| ctd_entry(ledger, e.n, e.beta, dims, sweeps, seed.wrapping_add(k as u64), InitPolicy::Random))
        .collect::<Result<Vec<_>>>()?;
    Ok(CtdReport {
        dims: dims.to_vec(),
        sweeps,
        alternates: alternates(&entries),
        entries,
    })
}
