//! Log-domain helpers. Everything tiny in this crate (well widths, annulus
//! measures, probabilities far in the tail) lives here as a logarithm.

/// `ln(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// `ln Σ exp(x_i)` with the running maximum factored out.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| libm::exp(v - max)).sum();
    max + libm::log(sum)
}

/// `ln(1 − exp(−x))` for `x ≥ 0`.
///
/// Switches between `log(-expm1(-x))` and `log1p(-exp(-x))` at `ln 2`, which
/// keeps full relative accuracy at both ends.
#[inline]
pub fn log1m_exp_neg(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= core::f64::consts::LN_2 {
        libm::log(-libm::expm1(-x))
    } else {
        libm::log1p(-libm::exp(-x))
    }
}

/// `ln(exp(a) − exp(b))` for `a ≥ b`.
#[inline]
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + log1m_exp_neg(a - b)
}

/// `ln(sin y)` for `0 < y ≤ π/2`, given `ln y`.
///
/// Uses `sin y / y = 1 − y²/6 + …` when `y` is small enough that the
/// correction is below one ulp.
#[inline]
pub fn log_sin_from_log(log_y: f64) -> f64 {
    if log_y < -27.0 {
        log_y
    } else {
        let y = libm::exp(log_y);
        libm::log(libm::sin(y))
    }
}

/// `sin(x)/x`, exact at zero.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if libm::fabs(x) < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        libm::sin(x) / x
    }
}
