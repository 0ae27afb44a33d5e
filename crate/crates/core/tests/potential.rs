use ctd_core::{Mode, ModelParams, WellLedger, PI, TAU};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn ledger(eps: f64, n: usize) -> WellLedger {
    WellLedger::new(ModelParams::new(eps, n, Mode::Exact).unwrap()).unwrap()
}

fn circle_distance(x: f64, c: f64) -> f64 {
    let d = (x - c).abs() % TAU;
    d.min(TAU - d)
}

// Straight summation of the step coefficients with raw widths.
fn brute_force(x: f64, eps: f64, n: usize) -> f64 {
    let mut u = 0.0;
    for m in 1..=n {
        let width = eps.powf(3f64.powi(m as i32));
        let center = if m % 2 == 0 { 0.0 } else { PI };
        if circle_distance(x, center) <= width {
            u += if m == 1 {
                0.25
            } else {
                2f64.powi(-(m as i32)) + 2f64.powi(-(m as i32) - 1)
            };
        }
    }
    u
}

// Skip points whose membership hinges on the last bits of the edge.
fn near_edge(x: f64, eps: f64, n: usize) -> bool {
    (1..=n).any(|m| {
        let width = eps.powf(3f64.powi(m as i32));
        let center = if m % 2 == 0 { 0.0 } else { PI };
        let d = circle_distance(x, center);
        d != 0.0 && (d - width).abs() <= 1e-14 * width + 1e-15
    })
}

#[test]
fn potential_matches_coefficient_summation() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    for (eps, n) in [(0.2, 5), (0.25, 4), (0.3, 5), (0.5, 3)] {
        let l = ledger(eps, n);
        let w1 = eps.powi(3);
        let mut checked = 0;
        for i in 0..10_000 {
            // half the points land near a center so the inner wells are hit
            let x = match i % 4 {
                0 | 1 => rng.gen_range(0.0..TAU),
                2 => rng.gen_range(-w1..w1) * rng.gen::<f64>().powi(8),
                _ => PI + rng.gen_range(-w1..w1) * rng.gen::<f64>().powi(8),
            };
            if near_edge(x, eps, n) {
                continue;
            }
            assert_eq!(l.evaluate_potential(x), brute_force(x, eps, n), "eps {eps} x {x}");
            checked += 1;
        }
        assert!(checked > 9_900, "eps {eps}: {checked}");
    }
}

#[test]
fn centers_hold_the_deepest_wells() {
    let l = ledger(0.1, 6);
    assert_eq!(l.evaluate_potential(PI), 31.0 / 64.0);
    assert_eq!(l.evaluate_potential(0.0), 63.0 / 128.0);
    assert_eq!(l.evaluate_potential(1.0), 0.0);
}

#[test]
fn log_widths_are_exact_multiples() {
    let l = ledger(0.1, 3);
    let w = l.well(2);
    assert_eq!(w.depth, 0.375);
    assert_eq!(w.log_half_width, 9.0 * 0.1f64.ln());
}

proptest! {
    #[test]
    fn potential_is_even(x in 0.0..TAU, eps in 0.15..0.6f64, n in 2usize..7) {
        let l = ledger(eps, n);
        prop_assume!(!near_edge(x, eps, n));
        prop_assert_eq!(l.evaluate_potential(x), l.evaluate_potential(-x));
    }

    #[test]
    fn potential_is_periodic(x in -10.0..10.0f64, k in -3i32..4) {
        let l = ledger(0.3, 5);
        let y = x + k as f64 * TAU;
        prop_assume!(!near_edge(x, 0.3, 5) && !near_edge(y, 0.3, 5));
        prop_assert_eq!(l.evaluate_potential(x), l.evaluate_potential(y));
    }

    #[test]
    fn potential_is_bounded(x in 0.0..TAU, eps in 0.05..0.9f64, n in 2usize..40) {
        prop_assume!(eps.powi(3) < PI / 4.0);
        let u = ledger(eps, n).evaluate_potential(x);
        prop_assert!((0.0..0.5).contains(&u));
    }

    #[test]
    fn depth_steps_telescope(eps in 0.05..0.9f64, n in 3usize..50) {
        prop_assume!(eps.powi(3) < PI / 4.0);
        let l = ledger(eps, n);
        for m in 1..n {
            prop_assert_eq!(l.well(m + 1).depth - l.well(m).depth, 2f64.powi(-(m as i32) - 2));
        }
        for m in 3..=n {
            prop_assert_eq!(l.well(m).depth - l.well(m - 2).depth, 3.0 * 2f64.powi(-(m as i32) - 1));
        }
    }
}
