//! Small numerical helpers shared by the analytic formulas and estimators.

/// Neumaier-compensated sum.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `1 - base^(-k)` without cancellation for `base` near 1 or large `k`.
pub fn one_minus_pow_neg(base: f64, k: f64) -> f64 {
    -(-k * base.ln()).exp_m1()
}

/// `ln(1 - base^(-k))` for `base > 1`, `k > 0`; stays finite when the
/// probability rounds to 1.
pub fn ln_one_minus_pow_neg(base: f64, k: f64) -> f64 {
    debug_assert!(base > 1.0 && k > 0.0);
    let x = (-k * base.ln()).exp();
    if x < 0.5 {
        (-x).ln_1p()
    } else {
        one_minus_pow_neg(base, k).ln()
    }
}

/// Clamps a value that should be a probability. Values outside `[0, 1]` by
/// more than `tol` indicate a bug and trip a debug assertion.
pub fn clamp_probability(p: f64, tol: f64) -> f64 {
    debug_assert!(
        p >= -tol && p <= 1.0 + tol,
        "probability {p} outside [0,1] beyond tolerance {tol}"
    );
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut v = vec![1.0e16, 1.0, -1.0e16];
        v.extend(std::iter::repeat_n(0.1, 10));
        assert!((kahan_sum(v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pow_helpers() {
        assert!((one_minus_pow_neg(2.0, 4.0) - 0.9375).abs() < 1e-15);
        assert!((ln_one_minus_pow_neg(2.0, 4.0) - 0.9375f64.ln()).abs() < 1e-15);
        let tiny = ln_one_minus_pow_neg(2.0, 200.0);
        assert!(tiny < 0.0 && tiny > -1e-59);
    }
}
