//! Arbitrary-precision helpers: binomials, determinants, logarithms and
//! decimal formatting of exact rationals.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type ExactInteger = BigInt;
pub type ExactRational = BigRational;

/// Exact binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Full rows `C(n, 0..=n)` of Pascal's triangle, memoized by `n`.
///
/// Readers share rows through `Arc`; a missing row is computed outside the
/// lock and inserted once.
#[derive(Default)]
pub struct BinomialRows {
    rows: RwLock<HashMap<u64, Arc<[BigUint]>>>,
}

impl BinomialRows {
    pub fn global() -> &'static BinomialRows {
        static CACHE: OnceLock<BinomialRows> = OnceLock::new();
        CACHE.get_or_init(BinomialRows::default)
    }

    pub fn row(&self, n: u64) -> Arc<[BigUint]> {
        if let Some(row) = self.rows.read().unwrap_or_else(|e| e.into_inner()).get(&n) {
            return Arc::clone(row);
        }
        let mut row = Vec::with_capacity(n as usize + 1);
        let mut c = BigUint::one();
        row.push(c.clone());
        for i in 0..n {
            c = c * (n - i) / (i + 1);
            row.push(c.clone());
        }
        let row: Arc<[BigUint]> = row.into();
        let mut guard = self.rows.write().unwrap_or_else(|e| e.into_inner());
        Arc::clone(guard.entry(n).or_insert(row))
    }

    pub fn get(&self, n: u64, k: u64) -> BigUint {
        if k > n {
            BigUint::zero()
        } else {
            self.row(n)[k as usize].clone()
        }
    }
}

/// Natural logarithm of a positive big integer.
///
/// The exponent is extracted exactly and only the leading 64 bits go through
/// `f64::ln`, so the relative error stays at the f64 level for numbers of any
/// size.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().map(|v| (v as f64).ln()).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational.
pub fn ln_rational(x: &BigRational) -> f64 {
    if !x.is_positive() {
        return f64::NAN;
    }
    ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude())
}

/// Determinant of a square integer matrix by fraction-free (Bareiss)
/// elimination. Every intermediate quantity is an integer.
pub fn det_bareiss(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    debug_assert!(a.iter().all(|row| row.len() == n));
    let mut sign_flip = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign_flip = !sign_flip;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                // exact by Sylvester's identity
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign_flip {
        -det
    } else {
        det
    }
}

/// Determinant of a rational matrix: each row is scaled to integers by the
/// lcm of its denominators, then [`det_bareiss`] is applied.
pub fn det_rational(a: &[Vec<BigRational>]) -> BigRational {
    let mut scale = BigInt::one();
    let rows = a
        .iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            scale *= &lcm;
            row.iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    BigRational::new(det_bareiss(rows), scale)
}

/// Decimal rendering: the exact integer when the denominator is 1, else
/// `num/den`.
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `7`, `-3/4`, `0.25` or `1.5e-2` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidWeight(format!("cannot parse `{s}` as an exact rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let negative = int_part.starts_with('-');
    let int_digits = int_part.trim_start_matches(['-', '+']);
    let digits = format!("{int_digits}{frac_part}");
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let mut value = BigRational::from_integer(BigInt::from_biguint(
        Sign::Plus,
        digits.parse::<BigUint>().map_err(|_| bad())?,
    ));
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10u32));
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    value = if scale >= 0 { value * pow } else { value / pow };
    Ok(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
        let row = BinomialRows::global().row(10);
        assert_eq!(row[3], binomial(10, 3));
        assert_eq!(row.len(), 11);
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let m = vec![
            vec![int(2), int(-1), int(0)],
            vec![int(1), int(3), int(4)],
            vec![int(0), int(5), int(-2)],
        ];
        // 2*(3*-2 - 4*5) - (-1)*(1*-2 - 0) + 0 = -52 - 2
        assert_eq!(det_bareiss(m), int(-54));
        // needs a pivot swap
        let m = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        assert_eq!(det_bareiss(m), int(-1));
        let singular = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert_eq!(det_bareiss(singular), int(0));
    }

    #[test]
    fn rational_determinant() {
        let h = |a: i64, b: i64| BigRational::new(int(a), int(b));
        let m = vec![vec![h(1, 2), h(1, 3)], vec![h(1, 4), h(1, 5)]];
        assert_eq!(det_rational(&m), h(1, 10) - h(1, 12));
    }

    #[test]
    fn big_logs() {
        let x = BigUint::from(10u32).pow(400);
        assert!((ln_biguint(&x) - 400.0 * 10f64.ln()).abs() < 1e-10);
        assert_eq!(ln_biguint(&BigUint::one()), 0.0);
        let q = BigRational::new(int(1), int(3));
        assert!((ln_rational(&q) + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rational_parsing_and_format() {
        let half = BigRational::new(int(1), int(2));
        assert_eq!(parse_rational("1/2").unwrap(), half);
        assert_eq!(parse_rational("0.5").unwrap(), half);
        assert_eq!(parse_rational("5e-1").unwrap(), half);
        assert_eq!(
            parse_rational("-2.25").unwrap(),
            BigRational::new(int(-9), int(4))
        );
        assert_eq!(
            parse_rational("7").unwrap(),
            BigRational::from_integer(int(7))
        );
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(format_rational(&half), "1/2");
        assert_eq!(format_rational(&BigRational::from_integer(int(8))), "8");
    }
}
