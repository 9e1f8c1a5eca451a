use statrs::function::erf;

/// Natural log of `erfc(x)` for `x >= 0`, accurate far into the tail.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 20.0 {
        return erf::erfc(x).ln();
    }
    // Asymptotic expansion erfc(x) ~ e^{-x^2}/(x sqrt(pi)) * sum (-1)^k (2k-1)!!/(2x^2)^k
    let z = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) * z;
        series += term;
    }
    -x * x - (x * std::f64::consts::PI.sqrt()).ln() + series.ln()
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(sum(exp(xs)))`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_erfc_is_continuous_across_switch() {
        let below = erf::erfc(19.999_999).ln();
        let above = ln_erfc(20.0);
        assert!((below - above).abs() < 1e-4);
        assert!((ln_erfc(20.0) - erf::erfc(20.0).ln()).abs() < 1e-10);
    }

    #[test]
    fn log_sum_exp_basic() {
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
