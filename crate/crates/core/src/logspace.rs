//! Log-semiring helpers. Impossible entries are `-inf`, never a large negative
//! sentinel.

pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

/// `ln(exp(a) + exp(b))` without overflow.
#[inline(always)]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == LOG_ZERO {
        return b;
    }
    if b == LOG_ZERO {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln(sum(exp(x)))` over an iterator, shifted by the maximum.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(LOG_ZERO, f64::max);
    if max == LOG_ZERO {
        return LOG_ZERO;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = iter.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Natural log that maps 0 to `-inf` (the default behaviour, spelled out).
#[inline]
pub fn ln_or_neg_inf(p: f64) -> f64 {
    if p <= 0.0 {
        LOG_ZERO
    } else {
        p.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_exp_matches_direct_sum() {
        let expected = (0.5f64.exp() + 2f64.exp()).ln();
        assert!((log_add_exp(0.5, 2.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn add_exp_large_magnitudes() {
        // 1232 + ln(e^2 + 1)
        let expected = 1232.0 + (2f64.exp() + 1.0).ln();
        assert!((log_add_exp(1234.0, 1232.0) - expected).abs() < 1e-12);
        assert!((1234f64.exp() + 1232f64.exp()).ln().is_infinite());
    }

    #[test]
    fn add_exp_identity_is_exact() {
        assert_eq!(log_add_exp(LOG_ZERO, -3.25), -3.25);
        assert_eq!(log_add_exp(-3.25, LOG_ZERO), -3.25);
        assert_eq!(log_add_exp(LOG_ZERO, LOG_ZERO), LOG_ZERO);
    }

    #[test]
    fn sum_exp_handles_empty_and_all_zero() {
        assert_eq!(log_sum_exp(Vec::<f64>::new()), LOG_ZERO);
        assert_eq!(log_sum_exp([LOG_ZERO, LOG_ZERO]), LOG_ZERO);
        let v = [0.25f64.ln(), 0.5f64.ln(), 0.25f64.ln()];
        assert!(log_sum_exp(v).abs() < 1e-15);
    }
}
