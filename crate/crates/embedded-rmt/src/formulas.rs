//! Closed-form limit moments of the embedded GUE level density, the targets
//! that both the diagram engine and the Monte Carlo estimates must hit.
//!
//! The fourth, sixth and eighth moments interpolate between the Gaussian
//! values (2n-1)!! at k = 0 and the semicircular Catalan values for 2k > m;
//! every correction term carries at least one factor C(m-k, k), which
//! switches off throughout the canonical domain.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::combinatorics::{binomial, catalan, double_factorial_odd, BigCount, ExactRatio};
use crate::error::{Error, Result};

/// Moment regime of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// k = 0: Gaussian moments (2n-1)!!.
    GaussianEndpoint,
    /// 0 < 2k <= m: moments interpolate with kinks at k = m/2, m/3, ...
    Critical,
    /// 2k > m: the semicircular Catalan values.
    Canonical,
}

pub fn regime(m: u64, k: u64) -> Regime {
    if k == 0 {
        Regime::GaussianEndpoint
    } else if 2 * k > m {
        Regime::Canonical
    } else {
        Regime::Critical
    }
}

/// A closed-form moment value with its regime tag.
#[derive(Debug, Clone)]
pub struct MomentFormulaResult {
    pub order: u32,
    pub value: ExactRatio,
    pub regime: Regime,
}

fn big(x: BigCount) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn int(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Limit kurtosis: 2 + C(m-k,k)/C(m,k).
pub fn fourth_moment_limit(m: u64, k: u64) -> ExactRatio {
    assert!(k <= m, "interaction order k must not exceed m");
    let c = big(binomial(m, k as i64));
    int(2) + big(binomial(m - k, k as i64)) / c
}

/// Limit sixth moment:
/// 5 + C(m-k,k)C(m-2k,k)/C(m,k)^2 + 6 C(m-k,k)/C(m,k) + 3 C(m-k,k)^2/C(m,k)^2.
pub fn sixth_moment_limit(m: u64, k: u64) -> ExactRatio {
    assert!(k <= m);
    let c = big(binomial(m, k as i64));
    let c1 = big(binomial(m - k, k as i64));
    let c2 = big(binomial_sub(m, 2 * k, k));
    int(5)
        + c1.clone() * c2 / (c.clone() * c.clone())
        + int(6) * c1.clone() / c.clone()
        + int(3) * c1.clone() * c1 / (c.clone() * c)
}

fn binomial_sub(m: u64, sub: u64, k: u64) -> BigCount {
    crate::combinatorics::binomial_signed(m as i64 - sub as i64, k as i64)
}

/// Which prefactor to use for the Hahn summand of the eighth moment. The
/// printed eleven-term sum leaves a selector unbound in its prefactor; the
/// collapsed closed form fixes it, and only that variant returns 105 at
/// k = 0. Both are exposed for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HahnVariant {
    /// C(m-k,k)/C(m,k)^3 * sum_a C(m-k-a,k) C(m-2k,a) C(k,a).
    Closed,
    /// The prefactor read inside the sum: sum_a C(m-k-a,k)^2 C(m-2k,a) C(k,a) / C(m,k)^3.
    PrefactorInsideSum,
}

/// The Hahn summand of the eighth moment (without its coefficient 2).
pub fn hahn_summand(m: u64, k: u64, variant: HahnVariant) -> ExactRatio {
    let c3 = big(binomial(m, k as i64).pow(3));
    if c3.is_zero() {
        return BigRational::zero();
    }
    let mut acc = BigRational::zero();
    for a in 0..=k {
        let base = big(binomial_sub(m, k + a, k))
            * big(binomial_sub(m, 2 * k, a))
            * big(binomial(k, a as i64));
        acc += match variant {
            HahnVariant::Closed => base,
            HahnVariant::PrefactorInsideSum => base * big(binomial_sub(m, k + a, k)),
        };
    }
    match variant {
        HahnVariant::Closed => big(binomial(m - k, k as i64)) * acc / c3,
        HahnVariant::PrefactorInsideSum => acc / c3,
    }
}

/// Limit eighth moment: the eleven-term sum with the Hahn summand taken in
/// its collapsed form.
pub fn eighth_moment_limit(m: u64, k: u64) -> ExactRatio {
    eighth_moment_limit_with(m, k, HahnVariant::Closed)
}

pub fn eighth_moment_limit_with(m: u64, k: u64, variant: HahnVariant) -> ExactRatio {
    assert!(k <= m);
    let c = big(binomial(m, k as i64));
    let c2 = c.clone() * c.clone();
    let c3 = c2.clone() * c.clone();
    let b1 = big(binomial(m - k, k as i64));
    let b2 = big(binomial_sub(m, 2 * k, k));
    let b3 = big(binomial_sub(m, 3 * k, k));
    int(14)
        + b1.clone() * b2.clone() * b3 / c3.clone()
        + int(4) * b1.clone() * b2.clone() * b2.clone() / c3.clone()
        + int(8) * b1.clone() * b2.clone() / c2.clone()
        + int(8) * b1.clone() * b1.clone() * b2.clone() / c3.clone()
        + int(8) * b1.clone() * b1.clone() * b1.clone() / c3.clone()
        + int(4) * b1.clone() * b1.clone() / c2.clone()
        + int(28) * b1.clone() / c.clone()
        + int(24) * b1.clone() * b1.clone() / c2
        + int(4) * b1.clone() * b1.clone() * b1.clone() / c3
        + int(2) * hahn_summand(m, k, variant)
}

/// Moments of the Gaussian: (2n-1)!!.
pub fn gaussian_moment(n: u64) -> BigCount {
    double_factorial_odd(n)
}

/// Moments of the semicircle: the Catalan numbers.
pub fn semicircle_moment(n: u64) -> BigCount {
    catalan(n)
}

/// Dispatch on the half order n (beta_2n): n = 1 is exactly 1 by
/// normalization; 2, 3, 4 are the closed forms.
pub fn nth_moment_limit(n: u32, m: u64, k: u64) -> Result<ExactRatio> {
    match n {
        1 => Ok(BigRational::one()),
        2 => Ok(fourth_moment_limit(m, k)),
        3 => Ok(sixth_moment_limit(m, k)),
        4 => Ok(eighth_moment_limit(m, k)),
        other => Err(Error::UnsupportedOrder(other)),
    }
}

pub fn moment_table(m: u64, k: u64, orders: &[u32]) -> Result<Vec<MomentFormulaResult>> {
    orders
        .iter()
        .map(|&n2| {
            if n2 % 2 != 0 || n2 == 0 {
                return Err(Error::UnsupportedOrder(n2));
            }
            let value = nth_moment_limit(n2 / 2, m, k)?;
            Ok(MomentFormulaResult { order: n2, value, regime: regime(m, k) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn rat(n: i64, d: i64) -> ExactRatio {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn fourth_moment_cases() {
        assert_eq!(fourth_moment_limit(5, 0), rat(3, 1));
        assert_eq!(fourth_moment_limit(4, 1), rat(11, 4));
        for m in 1..=40u64 {
            for k in m / 2 + 1..=m {
                assert_eq!(fourth_moment_limit(m, k), rat(2, 1), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn sixth_moment_cases() {
        assert_eq!(sixth_moment_limit(7, 0), rat(15, 1));
        assert_eq!(sixth_moment_limit(4, 1), rat(185, 16));
        for m in 1..=40u64 {
            for k in m / 2 + 1..=m {
                assert_eq!(sixth_moment_limit(m, k), rat(5, 1), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn eighth_moment_cases() {
        assert_eq!(eighth_moment_limit(9, 0), rat(105, 1));
        for m in 1..=40u64 {
            for k in m / 2 + 1..=m {
                assert_eq!(eighth_moment_limit(m, k), rat(14, 1), "m={m} k={k}");
            }
        }
        // coefficient sum at k = 0: 14+1+4+8+8+8+4+28+24+4+2 = 105
        let coeffs = [14u64, 1, 4, 8, 8, 8, 4, 28, 24, 4, 2];
        assert_eq!(coeffs.iter().sum::<u64>(), 105);
    }

    #[test]
    fn hahn_variants_agree_only_at_the_ends() {
        // the collapsed prefactor is the one consistent with 105 at k = 0
        assert_eq!(
            eighth_moment_limit_with(9, 0, HahnVariant::PrefactorInsideSum),
            rat(105, 1)
        );
        // generically the two variants differ
        let a = hahn_summand(8, 2, HahnVariant::Closed);
        let b = hahn_summand(8, 2, HahnVariant::PrefactorInsideSum);
        assert_ne!(a, b);
    }

    #[test]
    fn hahn_summand_via_both_lemma_sides() {
        for m in 0..=20u64 {
            for k in 0..=m / 2 {
                let lhs = crate::combinatorics::hahn_lhs(m, k).unwrap();
                let rhs = crate::combinatorics::hahn_rhs(m, k).unwrap();
                assert_eq!(lhs, rhs);
                let c3 = big(binomial(m, k as i64).pow(3));
                let direct = hahn_summand(m, k, HahnVariant::Closed);
                let via_lemma = big(binomial(m - k, k as i64)) * big(lhs) / c3;
                assert_eq!(direct, via_lemma, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn reference_moments() {
        for n in 1..=4u64 {
            assert_eq!(
                gaussian_moment(n),
                double_factorial_odd(n)
            );
        }
        assert_eq!(semicircle_moment(2).to_u64(), Some(2));
        assert_eq!(semicircle_moment(3).to_u64(), Some(5));
        assert_eq!(semicircle_moment(4).to_u64(), Some(14));
        assert_eq!(gaussian_moment(2).to_u64(), Some(3));
        assert_eq!(gaussian_moment(3).to_u64(), Some(15));
        assert_eq!(gaussian_moment(4).to_u64(), Some(105));
    }

    #[test]
    fn dilute_limit_trend() {
        // at k = 1 all three moments increase monotonically toward the
        // Gaussian values as m grows
        let mut last4 = rat(0, 1);
        let mut last6 = rat(0, 1);
        let mut last8 = rat(0, 1);
        for m in 2..=200u64 {
            let f4 = fourth_moment_limit(m, 1);
            let f6 = sixth_moment_limit(m, 1);
            let f8 = eighth_moment_limit(m, 1);
            assert!(f4 > last4 && f4 < rat(3, 1), "m={m}");
            assert!(f6 > last6 && f6 < rat(15, 1), "m={m}");
            assert!(f8 > last8 && f8 < rat(105, 1), "m={m}");
            last4 = f4;
            last6 = f6;
            last8 = f8;
        }
        // explicit dilute form at k = 1: 2 + (m-1)/m
        assert_eq!(fourth_moment_limit(10, 1), rat(2, 1) + rat(9, 10));
    }

    #[test]
    fn critical_domain_kinks() {
        use num_traits::Zero;
        // the correction factors vanish exactly at the thresholds
        // k > m/2, m/3, m/4
        for m in 2..=24u64 {
            for k in 1..=m {
                let b1 = binomial(m - k, k as i64);
                let b2 = binomial_sub(m, 2 * k, k);
                let b3 = binomial_sub(m, 3 * k, k);
                assert_eq!(b1.is_zero(), 2 * k > m, "m={m} k={k}");
                assert_eq!(b2.is_zero(), 3 * k > m, "m={m} k={k}");
                assert_eq!(b3.is_zero(), 4 * k > m, "m={m} k={k}");
            }
        }
    }
}
