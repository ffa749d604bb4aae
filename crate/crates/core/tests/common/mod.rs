//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the library's numerical kernels: determinants use
//! Laplace expansion, theta values use plain wide-window summation, and
//! binomials come from Pascal's triangle.
#![allow(dead_code)]

use std::f64::consts::PI;

use kvw_core::wen::WenMatrix;
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Determinant by cofactor expansion along the first row.
pub fn laplace_det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<i128>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                .collect();
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * m[0][j] * laplace_det(&minor)
        })
        .sum()
}

fn widen(k: &[Vec<i64>]) -> Vec<Vec<i128>> {
    k.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect()
}

pub fn det_oracle(k: &[Vec<i64>]) -> i128 {
    laplace_det(&widen(k))
}

/// Adjugate: transpose of the cofactor matrix.
pub fn adjugate_oracle(k: &[Vec<i64>]) -> Vec<Vec<i128>> {
    let m = widen(k);
    let n = m.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0i128; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i128>> = m
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != i)
                .map(|(_, row)| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[j][i] = sign * laplace_det(&minor);
        }
    }
    adj
}

pub fn rho_oracle(k: &[Vec<i64>]) -> i128 {
    adjugate_oracle(k).iter().flatten().sum()
}

pub fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Number of `v ∈ [0,δ)ᵍ` with `Kv ≡ 0 (mod δ)`, i.e. `|K⁻¹Zᵍ/Zᵍ|`.
pub fn pi_order_bruteforce(k: &[Vec<i64>]) -> i64 {
    let g = k.len();
    let delta = det_oracle(k) as i64;
    let total = (delta as u64).pow(g as u32);
    let mut count = 0;
    for flat in 0..total {
        let mut v = vec![0i64; g];
        let mut f = flat;
        for x in v.iter_mut() {
            *x = (f % delta as u64) as i64;
            f /= delta as u64;
        }
        if (0..g).all(|i| (0..g).map(|j| k[i][j] * v[j]).sum::<i64>().rem_euclid(delta) == 0) {
            count += 1;
        }
    }
    count
}

/// `C(n, i)` for `i = 0..=m`, from the first `m+1` columns of Pascal's triangle.
pub fn pascal_prefix(n: usize, m: usize) -> Vec<u128> {
    let mut row = vec![1u128];
    for _ in 0..n {
        let len = (row.len() + 1).min(m + 1);
        let mut next = vec![1u128; len];
        for i in 1..len {
            next[i] = row[i - 1] + row.get(i).copied().unwrap_or(0);
        }
        row = next;
    }
    row
}

/// `θ[a,b](z|τ)` by direct summation over `|k| ≤ 60`.
pub fn theta1_oracle(a: f64, b: f64, z: Complex64, tau: Complex64) -> Complex64 {
    let i = Complex64::i();
    (-60..=60)
        .map(|k| {
            let n = k as f64 + a;
            (PI * i * tau * n * n + 2.0 * PI * i * n * (z + b)).exp()
        })
        .sum()
}

/// `Θ[a,b](z|Ω)` by direct summation over the box `|k_i| ≤ r`.
pub fn riemann_oracle(a: &[f64], b: &[f64], z: &[Complex64], omega: &[Vec<Complex64>], r: i64) -> Complex64 {
    let g = a.len();
    let i = Complex64::i();
    let side = (2 * r + 1) as usize;
    let total = side.pow(g as u32);
    let mut sum = c(0.0, 0.0);
    for flat in 0..total {
        let mut f = flat;
        let n: Vec<f64> = (0..g)
            .map(|j| {
                let k = (f % side) as i64 - r;
                f /= side;
                k as f64 + a[j]
            })
            .collect();
        let mut quad = c(0.0, 0.0);
        let mut lin = c(0.0, 0.0);
        for p in 0..g {
            for q in 0..g {
                quad += n[p] * omega[p][q] * n[q];
            }
            lin += n[p] * (z[p] + b[p]);
        }
        sum += (PI * i * quad + 2.0 * PI * i * lin).exp();
    }
    sum
}

/// A random Wen matrix with `g` layers: off-diagonal entries in `0..=max_off`,
/// diagonal of random common parity, dominant enough to be positive definite.
/// Candidates failing validation (e.g. `K⁻¹e` not positive) are redrawn.
pub fn random_wen<R: Rng>(rng: &mut R, g: usize, max_off: i64) -> WenMatrix {
    loop {
        let parity = rng.gen_range(0..2i64);
        let mut k = vec![vec![0i64; g]; g];
        for i in 0..g {
            for j in i + 1..g {
                let v = rng.gen_range(0..=max_off);
                k[i][j] = v;
                k[j][i] = v;
            }
        }
        for i in 0..g {
            let off: i64 = (0..g).filter(|&j| j != i).map(|j| k[i][j]).sum();
            let mut d = off + rng.gen_range(0..3);
            if d.rem_euclid(2) != parity {
                d += 1;
            }
            k[i][i] = d.max(if parity == 0 { 2 } else { 1 });
        }
        if let Ok(m) = WenMatrix::new(k) {
            return m;
        }
    }
}
