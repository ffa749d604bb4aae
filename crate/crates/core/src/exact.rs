//! Exact integer linear algebra on small square matrices.
//!
//! Everything here works over arbitrary-precision integers so that
//! determinants, minors and adjugates never round.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Row-major integer matrix.
pub type IntMatrix = Vec<Vec<i64>>;

fn to_big(m: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    m.iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

/// Leading principal minors `det(M[..k, ..k])` for `k = 1..=n`, computed by
/// fraction-free (Bareiss) elimination without pivoting.
///
/// Elimination stops at the first vanishing minor; the returned vector then
/// ends with that zero.
pub fn leading_principal_minors(m: &[Vec<i64>]) -> Vec<BigInt> {
    let n = m.len();
    let mut a = to_big(m);
    let mut minors = Vec::with_capacity(n);
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = a[k][k].clone();
        minors.push(pivot.clone());
        if pivot.is_zero() {
            break;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&pivot * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = pivot;
    }
    minors
}

/// Determinant by Bareiss elimination with row pivoting.
pub fn determinant(m: &[Vec<i64>]) -> BigInt {
    determinant_big(to_big(m))
}

fn determinant_big(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Adjugate (transposed cofactor matrix), so that `M * adj(M) = det(M) * I`.
pub fn adjugate(m: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![BigInt::one()]];
    }
    let big = to_big(m);
    let mut adj = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<BigInt>> = big
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != i)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, x)| x.clone())
                        .collect()
                })
                .collect();
            let cof = determinant_big(minor);
            adj[j][i] = if (i + j) % 2 == 0 { cof } else { -cof };
        }
    }
    adj
}

/// Checked narrowing of a big integer to `i64`.
pub fn to_i64(x: &BigInt) -> Option<i64> {
    x.to_i64()
}

pub fn mat_vec(m: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> IntMatrix {
    let n = a.len();
    let p = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

/// Non-negative remainder.
pub fn modulo(x: i64, m: i64) -> i64 {
    x.mod_floor(&m)
}

/// Renders a rational as `p/q`, or `p` when the denominator is one.
pub fn rational_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q` or `p` into a reduced rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(BigRational::new(p, q))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// `gcd` of a slice, zero for the empty slice.
pub fn gcd_all(xs: &[i64]) -> i64 {
    xs.iter().fold(0i64, |acc, &x| acc.gcd(&x.abs()))
}

pub fn is_positive(r: &BigRational) -> bool {
    r.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_small_cases() {
        assert_eq!(determinant(&[vec![3, 2], vec![2, 3]]), BigInt::from(5));
        assert_eq!(determinant(&[vec![0, 1], vec![1, 0]]), BigInt::from(-1));
        assert_eq!(
            determinant(&[vec![2, 1, 1], vec![1, 2, 1], vec![1, 1, 2]]),
            BigInt::from(4)
        );
        assert_eq!(determinant(&[vec![1, 2], vec![2, 4]]), BigInt::zero());
    }

    #[test]
    fn minors_stop_at_zero() {
        let m = leading_principal_minors(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(m, vec![BigInt::zero()]);
        let m = leading_principal_minors(&[vec![2, 1], vec![1, 2]]);
        assert_eq!(m, vec![BigInt::from(2), BigInt::from(3)]);
    }

    #[test]
    fn adjugate_identity() {
        let k = vec![vec![3, 1, 0], vec![1, 3, 1], vec![0, 1, 3]];
        let adj = adjugate(&k);
        let det = determinant(&k);
        for i in 0..3 {
            for j in 0..3 {
                let s: BigInt = (0..3).map(|l| BigInt::from(k[i][l]) * &adj[l][j]).sum();
                let expect = if i == j { det.clone() } else { BigInt::zero() };
                assert_eq!(s, expect);
            }
        }
    }

    #[test]
    fn rational_strings() {
        let r = parse_rational("-2/5").unwrap();
        assert_eq!(rational_to_string(&r), "-2/5");
        assert_eq!(rational_to_string(&parse_rational("4/2").unwrap()), "2");
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("x").is_none());
    }
}
