//! Special functions for the predictive distribution heads.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// Natural log of Γ(z) for z > 0 (Lanczos, g = 7, nine terms).
pub fn ln_gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires z > 0, got {z}")));
    }
    Ok(ln_gamma_unchecked(z))
}

pub(crate) fn ln_gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        // reflection: Γ(z)Γ(1−z) = π / sin(πz)
        return (PI / (PI * z).sin()).ln() - ln_gamma_unchecked(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + x.ln()
}

/// Digamma ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (5.0 / 660.0)))))
}

/// Returns `(P(s,x), Q(s,x))`, both taken from the same evaluation branch so
/// that `P + Q == 1` up to rounding.
fn incomplete_gamma_pair(s: f64, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefactor = -x + s * x.ln() - ln_gamma_unchecked(s);
    if x < s + 1.0 {
        // power series for γ(s,x)
        let mut ap = s;
        let mut del = 1.0 / s;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        let p = (sum * log_prefactor.exp()).clamp(0.0, 1.0);
        (p, 1.0 - p)
    } else {
        // modified Lentz continued fraction for Γ(s,x)
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (log_prefactor.exp() * h).clamp(0.0, 1.0);
        (1.0 - q, q)
    }
}

fn check_incomplete_args(s: f64, x: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("incomplete gamma requires s > 0, got {s}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("incomplete gamma requires x >= 0, got {x}")));
    }
    Ok(())
}

/// Regularized lower incomplete gamma P(s, x) = γ(s, x) / Γ(s).
pub fn reg_lower_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    check_incomplete_args(s, x)?;
    Ok(incomplete_gamma_pair(s, x).0)
}

/// Regularized upper incomplete gamma Q(s, x) = 1 − P(s, x), accurate in the tail.
pub fn reg_upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    check_incomplete_args(s, x)?;
    Ok(incomplete_gamma_pair(s, x).1)
}

/// Standard normal CDF Φ(z), using erf(t) = P(1/2, t²).
pub fn std_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let (p, q) = incomplete_gamma_pair(0.5, 0.5 * z * z);
    if z >= 0.0 {
        0.5 + 0.5 * p
    } else {
        0.5 * q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ln_gamma_reference_values() {
        assert_abs_diff_eq!(ln_gamma(1.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ln_gamma(2.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ln_gamma(0.5).unwrap(), 0.5 * PI.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ln_gamma(5.0).unwrap(), 24f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn ln_gamma_matches_factorial_sums_across_range() {
        // ln Γ(n) = Σ_{k<n} ln k, computed independently
        let mut acc = 0.0;
        for n in 1..=1000u32 {
            let got = ln_gamma(n as f64).unwrap();
            assert!((got - acc).abs() <= 1e-10, "n={n}: {got} vs {acc}");
            acc += (n as f64).ln();
        }
    }

    #[test]
    fn ln_gamma_small_arguments_via_recurrence() {
        // Γ(z+1) = zΓ(z)
        for &z in &[1e-3, 0.01, 0.1, 0.3, 0.7] {
            let lhs = ln_gamma(z).unwrap();
            let rhs = ln_gamma(z + 1.0).unwrap() - f64::ln(z);
            assert!((lhs - rhs).abs() <= 1e-10, "z={z}");
        }
    }

    #[test]
    fn ln_gamma_domain() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn incomplete_gamma_closed_forms() {
        assert_eq!(reg_lower_incomplete_gamma(2.5, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            reg_lower_incomplete_gamma(1.0, 1.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(reg_lower_incomplete_gamma(0.5, 200.0).unwrap(), 1.0, epsilon = 1e-8);
        // P(1, x) = 1 − e^{−x} on both branches
        for &x in &[0.1, 0.9, 2.0, 7.5, 30.0] {
            assert_abs_diff_eq!(
                reg_lower_incomplete_gamma(1.0, x).unwrap(),
                1.0 - (-x).exp(),
                epsilon = 1e-13
            );
        }
        assert!(reg_lower_incomplete_gamma(0.0, 1.0).is_err());
        assert!(reg_lower_incomplete_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_abs_diff_eq!(std_normal_cdf(1.96), 0.975_002_104_851_780, epsilon = 1e-9);
        assert!(std_normal_cdf(-40.0) <= 1e-12);
        for i in -100..=100 {
            let z = i as f64 * 0.37;
            assert!((std_normal_cdf(z) + std_normal_cdf(-z) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn digamma_recurrence_and_value() {
        // ψ(1) = −γ
        assert_abs_diff_eq!(digamma(1.0), -0.577_215_664_901_532_9, epsilon = 1e-12);
        for &x in &[0.2, 1.3, 4.0, 11.0] {
            assert_abs_diff_eq!(digamma(x + 1.0) - digamma(x), 1.0 / x, epsilon = 1e-12);
        }
    }
}
