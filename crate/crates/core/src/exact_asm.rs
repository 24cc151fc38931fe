//! Exact enumeration of alternating sign matrices: product formulas, the
//! 1-refined counts by first-row position, and an exhaustive enumerator used
//! as an independent check.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::entropy::asm_s;
use crate::error::{Error, Result};
use crate::exact::{binomial, factorial, ln_rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsmCount {
    pub n: u64,
    pub value: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinedAsmCount {
    pub n: u64,
    pub k: u64,
    pub value: BigUint,
}

fn ratio_of(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn into_integer(q: BigRational, what: &str) -> BigUint {
    assert!(q.is_integer(), "{what} is not an integer");
    q.to_integer().to_biguint().expect("counts are nonnegative")
}

// Π_{j=0}^{m-1} (3j+1)! / (n+j)!
fn product_factor(n: u64, m: u64) -> BigRational {
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for j in 0..m {
        num *= factorial(3 * j + 1);
        den *= factorial(n + j);
    }
    ratio_of(num, den)
}

/// `A_n = Π_{j=0}^{n-1} (3j+1)! / (n+j)!`.
pub fn asm_count(n: u64) -> Result<AsmCount> {
    if n < 1 {
        return Err(Error::IndexRange(format!(
            "ASM order must be >= 1, got {n}"
        )));
    }
    Ok(AsmCount {
        n,
        value: into_integer(product_factor(n, n), "A_n"),
    })
}

/// `A_n(k|-) = C(n+k-2, k-1) (2n-k-1)!/(n-k)! Π_{j=0}^{n-2} (3j+1)!/(n+j)!`.
pub fn asm_1refined(n: u64, k: u64) -> Result<RefinedAsmCount> {
    if n < 1 || k < 1 || k > n {
        return Err(Error::IndexRange(format!(
            "A_n(k|-) needs 1 <= k <= n (n={n}, k={k})"
        )));
    }
    if n == 1 {
        return Ok(RefinedAsmCount {
            n,
            k,
            value: BigUint::one(),
        });
    }
    let head = ratio_of(
        binomial(n + k - 2, k - 1) * factorial(2 * n - k - 1),
        factorial(n - k),
    );
    let value = into_integer(head * product_factor(n, n - 1), "A_n(k|-)");
    Ok(RefinedAsmCount { n, k, value })
}

/// `A_{n+1}(k|-)/A_n = C(n+k-1, n) C(2n-k+1, n) / C(2n, n)`, `1 <= k <= n+1`.
pub fn z1out(n: u64, k: u64) -> Result<BigRational> {
    if n < 1 || k < 1 || k > n + 1 {
        return Err(Error::IndexRange(format!(
            "z1out needs 1 <= k <= n+1 (n={n}, k={k})"
        )));
    }
    Ok(ratio_of(
        binomial(n + k - 1, n) * binomial(2 * n - k + 1, n),
        binomial(2 * n, n),
    ))
}

/// `A_{n+1}/A_n = C(3n+1, n) / C(2n, n)`.
pub fn asm_growth_ratio(n: u64) -> BigRational {
    ratio_of(binomial(3 * n + 1, n), binomial(2 * n, n))
}

/// `(1/n) log(A_{n+1}/A_n)`.
pub fn asm_growth_rate(n: u64) -> f64 {
    ln_rational(&asm_growth_ratio(n)) / n as f64
}

/// `A_{n+1}(1|1)/A_n`: a 1 in the corner forces the first row and column,
/// leaving an arbitrary ASM of order `n`, so the ratio is `A_n/A_n`.
pub fn asm_11_ratio(n: u64) -> Result<BigRational> {
    let a = asm_count(n)?.value;
    Ok(ratio_of(a.clone(), a))
}

/// `(1/n) log z1out(n, ⌊rn⌋)`, `0 < r <= 1/2`.
pub fn asm_rate(n: u64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::DomainError(format!(
            "asm_rate needs 0 < r <= 1/2, got {r}"
        )));
    }
    let k = (r * n as f64).floor();
    if k < 1.0 {
        return Err(Error::DomainError(format!(
            "floor(rn) must be >= 1 (r={r}, n={n})"
        )));
    }
    Ok(ln_rational(&z1out(n, k as u64)?) / n as f64)
}

/// Predicted rate of the top-bottom and top-top refinements,
/// `S(r1, 1/2) + S(r2, 1/2)`.
pub fn tb_tt_predicted_rate(r1: f64, r2: f64) -> Result<f64> {
    Ok(asm_s(r1, 0.5)? + asm_s(r2, 0.5)?)
}

/// Census of all ASMs of a given order, by exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsmCensus {
    pub n: usize,
    pub total: u64,
    /// `first_row[k-1]` counts matrices whose first-row 1 sits in column `k`.
    pub first_row: Vec<u64>,
    /// matrices with a 1 in the top-left corner
    pub corner: u64,
}

/// Largest order accepted by [`enumerate_asms`].
pub const ENUMERATION_CAP: usize = 7;

/// Enumerates ASMs row by row. Column partial sums must stay in `{0, 1}`;
/// a row may place `+1` only where its column sum is 0 and `-1` only where
/// it is 1, alternating and starting and ending with `+1`.
pub fn enumerate_asms(n: usize) -> Result<AsmCensus> {
    if !(1..=ENUMERATION_CAP).contains(&n) {
        return Err(Error::CapExceeded(format!(
            "enumeration needs 1 <= n <= {ENUMERATION_CAP}, got {n}"
        )));
    }
    let mut census = AsmCensus {
        n,
        total: 0,
        first_row: vec![0; n],
        corner: 0,
    };
    let mut columns = vec![0u8; n];
    let mut rows = Vec::new();
    rows_from(&columns, &mut rows);
    for (row, first) in rows {
        apply(&mut columns, &row);
        let count = count_completions(&mut columns, n - 1);
        revert(&mut columns, &row);
        census.total += count;
        census.first_row[first] += count;
        if first == 0 {
            census.corner += count;
        }
    }
    Ok(census)
}

fn apply(columns: &mut [u8], row: &[i8]) {
    for (c, &e) in columns.iter_mut().zip(row) {
        *c = (*c as i8 + e) as u8;
    }
}

fn revert(columns: &mut [u8], row: &[i8]) {
    for (c, &e) in columns.iter_mut().zip(row) {
        *c = (*c as i8 - e) as u8;
    }
}

fn count_completions(columns: &mut Vec<u8>, rows_left: usize) -> u64 {
    if rows_left == 0 {
        return u64::from(columns.iter().all(|&c| c == 1));
    }
    // every remaining row adds net +1; columns at 0 need at least one more +1
    let zeros = columns.iter().filter(|&&c| c == 0).count();
    if zeros != rows_left {
        return 0;
    }
    let mut rows = Vec::new();
    rows_from(columns, &mut rows);
    let mut total = 0;
    for (row, _) in rows {
        apply(columns, &row);
        total += count_completions(columns, rows_left - 1);
        revert(columns, &row);
    }
    total
}

// All admissible rows given the column sums, with the column of their first +1.
fn rows_from(columns: &[u8], out: &mut Vec<(Vec<i8>, usize)>) {
    let mut row = vec![0i8; columns.len()];
    extend_row(columns, 0, true, None, &mut row, out);
}

fn extend_row(
    columns: &[u8],
    j: usize,
    want_plus: bool,
    first: Option<usize>,
    row: &mut Vec<i8>,
    out: &mut Vec<(Vec<i8>, usize)>,
) {
    if j == columns.len() {
        // the last nonzero entry must be +1, i.e. we are waiting for a -1
        if !want_plus {
            out.push((row.clone(), first.expect("a finished row has a +1")));
        }
        return;
    }
    row[j] = 0;
    extend_row(columns, j + 1, want_plus, first, row, out);
    if want_plus && columns[j] == 0 {
        row[j] = 1;
        extend_row(columns, j + 1, false, first.or(Some(j)), row, out);
    } else if !want_plus && columns[j] == 1 {
        row[j] = -1;
        extend_row(columns, j + 1, true, first, row, out);
    }
    row[j] = 0;
}

/// Converts a rational count ratio to `f64` (for display).
pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn small_counts() {
        let known = [1u64, 2, 7, 42, 429, 7436, 218_348];
        for (i, &a) in known.iter().enumerate() {
            assert_eq!(asm_count(i as u64 + 1).unwrap().value, big(a));
        }
        assert!(asm_count(0).is_err());
    }

    #[test]
    fn enumeration_matches_formulas() {
        for n in 1..=6 {
            let census = enumerate_asms(n).unwrap();
            assert_eq!(
                BigUint::from(census.total),
                asm_count(n as u64).unwrap().value,
                "n={n}"
            );
            for k in 1..=n {
                assert_eq!(
                    BigUint::from(census.first_row[k - 1]),
                    asm_1refined(n as u64, k as u64).unwrap().value,
                    "n={n} k={k}"
                );
            }
            if n >= 2 {
                assert_eq!(
                    BigUint::from(census.corner),
                    asm_count(n as u64 - 1).unwrap().value
                );
            }
        }
        assert!(enumerate_asms(ENUMERATION_CAP + 1).is_err());
    }

    #[test]
    fn refined_counts_partition_and_reflect() {
        for n in 1..=30u64 {
            let mut sum = BigUint::zero();
            for k in 1..=n {
                let v = asm_1refined(n, k).unwrap().value;
                assert_eq!(v, asm_1refined(n, n + 1 - k).unwrap().value);
                sum += v;
            }
            assert_eq!(sum, asm_count(n).unwrap().value);
            if n >= 2 {
                assert_eq!(
                    asm_1refined(n, 1).unwrap().value,
                    asm_count(n - 1).unwrap().value
                );
            }
        }
        assert!(asm_1refined(4, 0).is_err());
        assert!(asm_1refined(4, 5).is_err());
    }

    #[test]
    fn growth_ratio_identity() {
        for n in 1..=50u64 {
            let a = asm_count(n).unwrap().value;
            let b = asm_count(n + 1).unwrap().value;
            assert_eq!(ratio_of(b, a), asm_growth_ratio(n));
        }
    }

    #[test]
    fn z1out_consistency() {
        for n in 1..=30u64 {
            let a = BigRational::from_integer(BigInt::from(asm_count(n).unwrap().value));
            for k in 1..=n + 1 {
                let refined =
                    BigRational::from_integer(BigInt::from(asm_1refined(n + 1, k).unwrap().value));
                assert_eq!(z1out(n, k).unwrap() * &a, refined);
            }
        }
        assert!(z1out(3, 0).is_err());
        assert!(z1out(3, 5).is_err());
    }

    #[test]
    fn corner_ratio_is_one() {
        for n in 1..=10 {
            assert_eq!(asm_11_ratio(n).unwrap(), BigRational::one());
        }
    }

    #[test]
    fn rates_near_targets() {
        assert!((asm_growth_rate(500) - (27.0f64 / 16.0).ln()).abs() < 2e-2);
        let half = asm_rate(500, 0.5).unwrap();
        assert!((half - (27.0f64 / 16.0).ln()).abs() < 2e-2);
        assert!(asm_rate(500, 0.6).is_err());
        assert!(asm_rate(5, 0.1).is_err());
    }

    #[test]
    fn predicted_tb_tt() {
        let full = tb_tt_predicted_rate(0.5, 0.5).unwrap();
        assert!((full - 2.0 * (27.0f64 / 16.0).ln()).abs() < 1e-14);
        assert_eq!(
            tb_tt_predicted_rate(0.1, 0.3).unwrap(),
            tb_tt_predicted_rate(0.3, 0.1).unwrap()
        );
        // S(0, 1/2) = 0 on the lower branch
        assert!(tb_tt_predicted_rate(0.0, 0.2).unwrap() - asm_s(0.2, 0.5).unwrap() == 0.0);
    }
}
