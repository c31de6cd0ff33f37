//! Exact arbitrary-precision combinatorics: binomials, multinomials, double
//! factorials, Catalan numbers, symbolic binomial products with their large-l
//! arguments, and the finite-sum identity relating the two Hahn-type sums.
//!
//! Everything here is pure integer/rational arithmetic; floating point is
//! deliberately absent.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision nonnegative count.
pub type BigCount = BigUint;

/// Arbitrary-precision fraction, always in lowest terms.
pub type ExactRatio = BigRational;

/// C(n, k). Out-of-range selections return 0 rather than erroring: the
/// closed-form moment expressions rely on C(m-jk, k) switching itself off
/// once jk exceeds m.
pub fn binomial(n: u64, k: i64) -> BigCount {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// C(n, k) where a signed upper index that dropped below zero means the
/// selection is empty.
pub fn binomial_signed(n: i64, k: i64) -> BigCount {
    if n < 0 {
        return BigUint::zero();
    }
    binomial(n as u64, k)
}

/// n!
pub fn factorial(n: u64) -> BigCount {
    let mut acc = BigUint::one();
    for i in 2..=n {
        acc *= BigUint::from(i);
    }
    acc
}

/// Multinomial coefficient n! / (parts_1! ... parts_r! (n - sum)!), with the
/// unlisted remainder n - sum(parts) treated as an implicit final part.
pub fn multinomial(n: u64, parts: &[u64]) -> Result<BigCount> {
    let total: u64 = parts.iter().sum();
    if total > n {
        return Err(Error::MultinomialOverflow { n, got: total });
    }
    let mut acc = BigUint::one();
    let mut remaining = n;
    for &p in parts {
        acc *= binomial(remaining, p as i64);
        remaining -= p;
    }
    Ok(acc)
}

/// (2n-1)!!, the number of perfect matchings on 2n items.
pub fn double_factorial_odd(n: u64) -> BigCount {
    let mut acc = BigUint::one();
    let mut f = 1u64;
    for _ in 1..=n {
        acc *= BigUint::from(f);
        f += 2;
    }
    acc
}

/// The n'th Catalan number C(2n, n) / (n + 1).
pub fn catalan(n: u64) -> BigCount {
    binomial(2 * n, n as i64) / BigUint::from(n + 1)
}

/// One factor C(l - offset, lower)^exponent of a binomial product in the
/// symbolic level count l.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinomialFactor {
    pub offset: i64,
    pub lower: u64,
    pub exponent: u32,
}

/// A product of binomials in the symbolic variable l, `prod_n C(l - a_n, b_n)^{i_n}`.
/// The argument (power of l as l grows) is `sum_n i_n b_n`; the coefficient of
/// that leading power is `prod_n (1/b_n!)^{i_n}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinomialProduct {
    pub factors: Vec<BinomialFactor>,
}

impl BinomialProduct {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, offset: i64, lower: u64, exponent: u32) {
        if exponent > 0 {
            self.factors.push(BinomialFactor { offset, lower, exponent });
        }
    }

    /// Append the binomial chain for multinomial(l; parts): each part p_i
    /// contributes C(l - (p_1 + ... + p_{i-1}), p_i).
    pub fn push_multinomial(&mut self, parts: &[u64]) {
        let mut prefix = 0i64;
        for &p in parts {
            self.push(prefix, p, 1);
            prefix += p as i64;
        }
    }

    /// Power of l carried by the product as l grows without bound.
    pub fn argument(&self) -> u64 {
        self.factors.iter().map(|f| f.exponent as u64 * f.lower).sum()
    }

    /// Rational coefficient of l^argument in the large-l expansion.
    pub fn leading_coefficient(&self) -> ExactRatio {
        let mut acc = BigRational::one();
        for f in &self.factors {
            let b = BigRational::new(BigInt::one(), BigInt::from(factorial(f.lower)));
            for _ in 0..f.exponent {
                acc *= b.clone();
            }
        }
        acc
    }

    /// Evaluate at a concrete l. Factors whose upper index drops below the
    /// lower one evaluate to 0 by the out-of-range convention.
    pub fn evaluate(&self, l: u64) -> BigCount {
        let mut acc = BigUint::one();
        for f in &self.factors {
            let upper = l as i64 - f.offset;
            let v = binomial_signed(upper, f.lower as i64);
            if v.is_zero() {
                return BigUint::zero();
            }
            for _ in 0..f.exponent {
                acc *= v.clone();
            }
        }
        acc
    }
}

/// Power of l carried by a binomial product (Stirling count of its factors).
pub fn argument_of(p: &BinomialProduct) -> u64 {
    p.argument()
}

/// Left side of the Hahn identity: sum_a C(m-k-a, k) C(k, a) C(m-2k, a).
pub fn hahn_lhs(m: u64, k: u64) -> Result<BigCount> {
    if 2 * k > m {
        return Err(Error::HahnDomain { m, k });
    }
    let mut acc = BigUint::zero();
    for a in 0..=k.min(m - 2 * k) {
        acc += binomial_signed(m as i64 - k as i64 - a as i64, k as i64)
            * binomial(k, a as i64)
            * binomial(m - 2 * k, a as i64);
    }
    Ok(acc)
}

/// Right side of the Hahn identity,
/// C(m-k, k) * sum_p C(k, p)^2 C(m-2k, k-p) / C(m-k, p),
/// evaluated in exact rational arithmetic. The result is asserted integral.
pub fn hahn_rhs(m: u64, k: u64) -> Result<BigCount> {
    if 2 * k > m {
        return Err(Error::HahnDomain { m, k });
    }
    let mut acc = BigRational::zero();
    for p in 0..=k {
        let num = BigInt::from(binomial(k, p as i64).pow(2) * binomial(m - 2 * k, (k - p) as i64));
        let den = BigInt::from(binomial(m - k, p as i64));
        if den.is_zero() {
            continue;
        }
        acc += BigRational::new(num, den);
    }
    let total = acc * BigRational::from_integer(BigInt::from(binomial(m - k, k as i64)));
    assert!(total.is_integer(), "hahn_rhs({m},{k}) is not integral");
    assert!(!total.is_negative());
    Ok(total.to_integer().to_biguint().expect("nonnegative"))
}

/// Convenience: an exact ratio of two counts.
pub fn ratio(num: BigCount, den: BigCount) -> ExactRatio {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_small_cases() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        for n in 0..20 {
            assert_eq!(binomial(n, 0), BigUint::one());
        }
        // k > n returns zero so that C(m-k, k) vanishes in the canonical domain
        assert_eq!(binomial(1, 3), BigUint::zero());
        assert_eq!(binomial(5, -1), BigUint::zero());
    }

    #[test]
    fn multinomial_cases() {
        // 10!/(2! 1 1 1 1 4!) cross-checked by factorial brute force
        let brute = factorial(10)
            / (factorial(2) * factorial(1).pow(4) * factorial(4));
        assert_eq!(multinomial(10, &[2, 1, 1, 1, 1]).unwrap(), brute);
        assert_eq!(brute, BigUint::from(75600u32));
        assert_eq!(multinomial(7, &[]).unwrap(), BigUint::one());
        assert_eq!(multinomial(5, &[5]).unwrap(), BigUint::one());
        assert!(multinomial(4, &[3, 2]).is_err());
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial_odd(1), BigUint::from(1u32));
        assert_eq!(double_factorial_odd(3), BigUint::from(15u32));
        assert_eq!(double_factorial_odd(4), BigUint::from(105u32));
    }

    #[test]
    fn catalan_sequence() {
        let expect = [1u64, 1, 2, 5, 14, 42];
        for (n, &c) in expect.iter().enumerate() {
            assert_eq!(catalan(n as u64), BigUint::from(c));
        }
        assert_eq!(catalan(10), BigUint::from(16796u32));
    }

    #[test]
    fn catalan_reflection() {
        // C_n = C(2n, n) - C(2n, n+1), the Dyck-word count
        for n in 0..=30u64 {
            let refl = binomial(2 * n, n as i64)
                - binomial(2 * n, n as i64 + 1);
            assert_eq!(catalan(n), refl, "n = {n}");
        }
    }

    #[test]
    fn arguments() {
        // arg C(l, m) = m
        let mut p = BinomialProduct::new();
        p.push(0, 4, 1);
        assert_eq!(argument_of(&p), 4);

        // arg C(l-m, r) C(l-m-r, r) = 2r, applied termwise
        let mut q = BinomialProduct::new();
        q.push(4, 2, 1);
        q.push(6, 2, 1);
        assert_eq!(argument_of(&q), 4);

        assert_eq!(argument_of(&BinomialProduct::new()), 0);
    }

    #[test]
    fn binomial_product_evaluation_matches_multinomial() {
        let mut p = BinomialProduct::new();
        p.push_multinomial(&[2, 1, 1, 1, 1]);
        assert_eq!(p.evaluate(10), BigUint::from(75600u32));
        assert_eq!(p.argument(), 6);
    }

    #[test]
    fn hahn_identity_examples() {
        for m in 0..=8u64 {
            assert_eq!(hahn_lhs(m, 0).unwrap(), BigUint::one());
            assert_eq!(hahn_rhs(m, 0).unwrap(), BigUint::one());
        }
        assert_eq!(hahn_lhs(4, 1).unwrap(), BigUint::from(7u32));
        assert_eq!(hahn_rhs(4, 1).unwrap(), BigUint::from(7u32));
        assert_eq!(hahn_lhs(6, 2).unwrap(), hahn_rhs(6, 2).unwrap());
        assert!(hahn_lhs(3, 2).is_err());
    }

    #[test]
    fn hahn_identity_full_range() {
        for m in 0..=30u64 {
            for k in 0..=m / 2 {
                assert_eq!(
                    hahn_lhs(m, k).unwrap(),
                    hahn_rhs(m, k).unwrap(),
                    "m = {m}, k = {k}"
                );
            }
        }
    }

    #[test]
    fn vandermonde() {
        // sum_w C(k, w) C(m-2k, k-w) = C(m-k, k)
        for m in 0..=40u64 {
            for k in 0..=m / 2 {
                let mut acc = BigUint::zero();
                for w in 0..=k {
                    acc += binomial(k, w as i64) * binomial(m - 2 * k, (k - w) as i64);
                }
                assert_eq!(acc, binomial(m - k, k as i64), "m = {m}, k = {k}");
            }
        }
    }

    proptest! {
        #[test]
        fn pascal_recurrence(n in 1u64..200, k in 0i64..200) {
            let lhs = binomial(n, k);
            let rhs = binomial(n - 1, k) + binomial(n - 1, k - 1);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn binomial_symmetry(n in 0u64..120, k in 0u64..120) {
            prop_assert_eq!(binomial(n, k as i64), binomial(n, n as i64 - k as i64));
        }
    }
}
