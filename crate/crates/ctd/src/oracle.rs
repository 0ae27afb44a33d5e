//! Independent reference computations for the exact engine.
//!
//! Region probabilities are recomputed by adaptive Gauss–Kronrod quadrature
//! of `exp(βU)`, where `U` is summed directly from the step coefficients and
//! the widths come from `powf`. Integration runs in offset coordinates
//! around each center so that narrow wells next to π keep full precision.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use ctd_core::bond::RegionKind;
use ctd_core::Character;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: `(estimate, error)`.
fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Globally adaptive G7/K15 over `[a, b]`, starting from one panel per
/// breakpoint interval and bisecting the worst panel until the summed error
/// estimate is below `rel_tol · |value|`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breakpoints: &[f64], rel_tol: f64) -> Quadrature {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        let (value, error) = kronrod(&f, w[0], w[1]);
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let max_panels = 10_000;
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= rel_tol * value.abs() || heap.len() >= max_panels {
            return Quadrature {
                value,
                error,
                panels: heap.len(),
            };
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            return Quadrature {
                value,
                error,
                panels: heap.len(),
            };
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = kronrod(&f, a, b);
            heap.push(Panel { a, b, value, error });
        }
    }
}

/// Step coefficient of well `m`.
pub fn coefficient(m: usize) -> f64 {
    if m == 1 {
        0.25
    } else {
        2f64.powi(-(m as i32)) + 2f64.powi(-(m as i32) - 1)
    }
}

/// Half-width `ε^(3^m)` by direct exponentiation.
pub fn raw_width(epsilon: f64, m: usize) -> f64 {
    epsilon.powf(3f64.powi(m as i32))
}

/// `U` at distance `t` from the center of the given character, summed from
/// the coefficients of every well of that character containing it.
pub fn potential_at_offset(epsilon: f64, truncation: usize, center: Character, t: f64) -> f64 {
    (1..=truncation)
        .filter(|&m| Character::of_index(m) == center && t.abs() <= raw_width(epsilon, m))
        .map(coefficient)
        .sum()
}

/// Region probabilities `∫_region e^{βU} / ∫_circle e^{βU}` in the order
/// annulus 1..=N, background.
pub fn quadrature_probabilities(epsilon: f64, truncation: usize, beta: f64, rel_tol: f64) -> Vec<(RegionKind, f64)> {
    let widths: Vec<f64> = (1..=truncation).map(|m| raw_width(epsilon, m)).collect();
    let side = |center: Character, lo: f64, hi: f64| {
        let cuts: Vec<f64> = (1..=truncation)
            .filter(|&m| Character::of_index(m) == center)
            .map(|m| widths[m - 1])
            .collect();
        let f = |t: f64| (beta * potential_at_offset(epsilon, truncation, center, t)).exp();
        2.0 * integrate(f, lo, hi, &cuts, rel_tol).value
    };
    let mut masses: Vec<(RegionKind, f64)> = (1..=truncation)
        .map(|n| {
            let inner = if n + 2 <= truncation { widths[n + 1] } else { 0.0 };
            (RegionKind::Annulus(n), side(Character::of_index(n), inner, widths[n - 1]))
        })
        .collect();
    let background = side(Character::Ferromagnetic, widths[1], FRAC_PI_2)
        + side(Character::Antiferromagnetic, widths[0], FRAC_PI_2);
    masses.push((RegionKind::Background, background));
    let z: f64 = masses.iter().map(|m| m.1).sum();
    masses.into_iter().map(|(k, m)| (k, m / z)).collect()
}

/// Minimizer of a smooth convex `f` on `[lo, hi]`, by bisection on the sign
/// of the central difference with step `h`.
pub fn numeric_argmin<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, h: f64) -> f64 {
    let slope = |x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
