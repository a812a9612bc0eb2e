//! Special functions and summation helpers shared by the zeta engine and the
//! geometric layer.

use statrs::function::gamma::gamma as statrs_gamma;

/// Euler's gamma function.
pub fn gamma(x: f64) -> f64 {
    statrs_gamma(x)
}

/// Reciprocal gamma `1/Γ(x)`, entire: exactly zero at the non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        0.0
    } else {
        1.0 / statrs_gamma(x)
    }
}

/// `e^x K_nu(x)` for real order and `x > 0`.
///
/// Evaluated from `K_nu(x) = ∫_0^∞ exp(-x cosh t) cosh(nu t) dt` with the
/// trapezoid rule, which converges geometrically for this analytic integrand.
/// The step shrinks like `x^{-1/2}` so that the peak at `t = 0` stays resolved.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k_scaled requires x > 0, got {x}");
    let h = (0.5 / x.sqrt()).min(0.1);
    let integrand = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let mut sum = 0.5 * integrand(0.0);
    let mut j = 1usize;
    loop {
        let t = j as f64 * h;
        let term = integrand(t);
        sum += term;
        // the integrand is eventually monotone decreasing in t
        if term < 1e-19 * sum && x * (t.cosh() - 1.0) > nu.abs() * t + 1.0 {
            break;
        }
        j += 1;
        if j > 200_000 {
            break;
        }
    }
    h * sum
}

/// Modified Bessel function of the second kind `K_nu(x)`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_scaled(nu, x) * (-x).exp()
}

/// `ln(1 - e^{-x})` for `x > 0`, accurate for both small and large `x`.
pub fn ln_one_minus_exp_neg(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// `coth(x)` and `csch(x)` for `x > 0` from `q = e^{-x}`, free of overflow.
pub fn coth_csch(x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    let q = (-x).exp();
    // 1 - q^2 without cancellation
    let denom = -(-2.0 * x).exp_m1();
    let coth = 1.0 + 2.0 * q * q / denom;
    let csch = 2.0 * q / denom;
    (coth, csch)
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn bessel_k_half_integer_closed_forms() {
        for &x in &[0.05, 0.3, 1.0, 4.0, 25.0, 300.0] {
            let k_half = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert_relative_eq!(bessel_k(0.5, x), k_half, max_relative = 1e-13);
            assert_relative_eq!(bessel_k(-0.5, x), k_half, max_relative = 1e-13);
            let k_three_halves = k_half * (1.0 + 1.0 / x);
            assert_relative_eq!(bessel_k(1.5, x), k_three_halves, max_relative = 1e-13);
        }
    }

    #[test]
    fn bessel_k_integer_order_reference_values() {
        // K_0(1), K_1(1), K_1(0.1) from standard tables
        assert_relative_eq!(
            bessel_k(0.0, 1.0),
            0.421_024_438_240_708_3,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            bessel_k(1.0, 1.0),
            0.601_907_230_197_234_6,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            bessel_k(1.0, 0.1),
            9.853_844_780_870_606,
            max_relative = 1e-12
        );
    }

    #[test]
    fn bessel_k_recurrence() {
        // K_{nu+1}(x) = K_{nu-1}(x) + (2 nu / x) K_nu(x)
        for &nu in &[0.3, 1.7, -0.8] {
            for &x in &[0.2, 2.0, 11.0] {
                let lhs = bessel_k(nu + 1.0, x);
                let rhs = bessel_k(nu - 1.0, x) + 2.0 * nu / x * bessel_k(nu, x);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn rgamma_zeros_and_values() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert_relative_eq!(rgamma(-0.5), -1.0 / (2.0 * PI.sqrt()), max_relative = 1e-13);
        assert_relative_eq!(gamma(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn hyperbolic_helpers_are_stable() {
        let (c, s) = coth_csch(1.0);
        assert_relative_eq!(c, 1.0 / 1.0f64.tanh(), max_relative = 1e-15);
        assert_relative_eq!(s, 1.0 / 1.0f64.sinh(), max_relative = 1e-15);
        let (c, s) = coth_csch(900.0);
        assert_eq!(c, 1.0);
        assert_eq!(s, 0.0);
        assert_relative_eq!(
            ln_one_minus_exp_neg(1e-9),
            (1e-9f64).ln(),
            max_relative = 1e-8
        );
        assert_relative_eq!(
            ln_one_minus_exp_neg(40.0),
            -(-40.0f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let acc: CompensatedSum = [1.0, 1e-16, 1e-16, -1.0].into_iter().collect();
        assert_relative_eq!(acc.value(), 2e-16, max_relative = 1e-12);
    }
}
