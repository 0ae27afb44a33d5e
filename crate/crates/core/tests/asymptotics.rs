use ctd_core::asymptotics::{
    convexity_check, f_tilde, n_max_closed, offset_free_energy, ratio_exponent, OffsetSide, SeparatedWellsModel,
};
use proptest::prelude::*;

fn model() -> SeparatedWellsModel {
    SeparatedWellsModel::new(0.1).unwrap()
}

fn derivative(n: f64, beta: f64, m: &SeparatedWellsModel) -> f64 {
    let h = 1e-6;
    (f_tilde(n + h, beta, m) - f_tilde(n - h, beta, m)) / (2.0 * h)
}

#[test]
fn closed_form_minimizer_is_stationary() {
    let m = model();
    for k in 0..50 {
        let beta = 10f64.powf(2.0 + 8.0 * k as f64 / 49.0);
        let n = n_max_closed(beta, &m).unwrap().continuous;
        let slope = derivative(n, beta, &m);
        let scale = m.c_eps * 3f64.powf(n) * 3f64.ln();
        assert!(slope.abs() <= 1e-6 * scale, "beta {beta}: {slope}");
        assert!(derivative(n - 0.5, beta, &m) < 0.0 && derivative(n + 0.5, beta, &m) > 0.0);
    }
}

#[test]
fn integer_tie_puts_minimizer_between() {
    let m = model();
    for n in 1..20 {
        // f̃(n) = f̃(n+1) ⇔ 3β/2^(n+2) = 2 c_ε 3^n
        let beta = 2.0 * m.c_eps * 3f64.powi(n) * 2f64.powi(n + 2) / 3.0;
        let (a, b) = (f_tilde(n as f64, beta, &m), f_tilde(n as f64 + 1.0, beta, &m));
        assert!((a - b).abs() <= 1e-12 * a, "n {n}");
        let c = n_max_closed(beta, &m).unwrap().continuous;
        assert!(c > n as f64 && c < n as f64 + 1.0, "n {n}: {c}");
    }
}

#[test]
fn gaps_scale_like_three_to_the_n() {
    let m = model();
    let base = |n: i32, side| {
        let beta = m.schedule_beta(n as f64);
        let s: f64 = if side == OffsetSide::Plus { 1.0 } else { -1.0 };
        (f_tilde(n as f64 + s, beta, &m) - f_tilde(n as f64, beta, &m)) / 3f64.powi(n)
    };
    for side in [OffsetSide::Plus, OffsetSide::Minus] {
        let c = base(2, side);
        assert!(c > 0.0);
        for n in 3..25 {
            assert!((base(n, side) / c - 1.0).abs() < 1e-12, "{side:?} n {n}");
        }
    }
}

#[test]
fn ratio_exponent_takes_the_smaller_side() {
    let m = model();
    for n in 1..30 {
        let e = ratio_exponent(n as f64, &m);
        let expected = 3f64.powi(n) * m.c_eps * (m.a - 2.0 / 3.0);
        assert!((e / expected - 1.0).abs() < 1e-12, "n {n}");
        assert!(m.a - 2.0 / 3.0 < 2.0 - m.a / 2.0);
    }
}

#[test]
fn offsets_agree_with_direct_evaluation() {
    let m = model();
    for n in 1..=30 {
        let beta = m.schedule_beta(n as f64);
        for k in 0..=6 {
            for side in [OffsetSide::Plus, OffsetSide::Minus] {
                let x = n as f64 + side.sign() * k as f64;
                let direct = f_tilde(x, beta, &m);
                let closed = offset_free_energy(n as f64, k as f64, &m, side);
                assert!((direct / closed - 1.0).abs() <= 1e-12, "n {n} k {k} {side:?}");
            }
        }
    }
}

#[test]
fn infinite_temperature_second_differences() {
    let m = model();
    let r = convexity_check(&m, 0.0, 1, 60);
    assert!(r.all_positive);
    for &(n, d) in &r.second_differences {
        let bound = 4.0 / 3.0 * m.c_eps * 3f64.powi(n as i32 - 1);
        assert!(d >= bound * (1.0 - 1e-9), "n {n}");
    }
    assert_eq!(r.min_at, 1);
}

proptest! {
    #[test]
    fn convex_for_any_beta(log_beta in 0.0..60.0f64, eps in 0.01..0.9f64) {
        let m = SeparatedWellsModel::new(eps).unwrap();
        let r = convexity_check(&m, log_beta.exp(), 1, 60);
        prop_assert!(r.all_positive, "min {} at {}", r.min_second_difference, r.min_at);
    }

    #[test]
    fn closed_form_round_trips(n in 1.0..40.0f64, eps in 0.01..0.9f64) {
        let m = SeparatedWellsModel::new(eps).unwrap();
        let back = n_max_closed(m.schedule_beta(n), &m).unwrap().continuous;
        prop_assert!((back - n).abs() <= 1e-12 * n);
    }
}
