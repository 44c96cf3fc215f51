//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// σ_j by summing over all j-subsets; also returns Σ |products| as the
/// conditioning scale of the sum.
pub fn brute_sigma(v: &[f64], j: usize) -> (f64, f64) {
    let n = v.len();
    if j > n {
        return (0.0, 0.0);
    }
    let (mut sum, mut abs) = (0.0, 0.0);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != j {
            continue;
        }
        let p: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| v[i]).product();
        sum += p;
        abs += p.abs();
    }
    (sum, abs)
}

pub fn without(v: &[f64], skip: &[usize]) -> Vec<f64> {
    v.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, &x)| x).collect()
}

pub fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Residual scaled by the conditioning of the reference sum.
pub fn scaled_err(got: f64, want: f64, scale: f64) -> f64 {
    (got - want).abs() / scale.max(want.abs()).max(f64::MIN_POSITIVE)
}

pub fn uniform_box(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Rejection sample of a sorted point in Γ_k from the box [lo, hi]^n.
pub fn gamma_point(rng: &mut ChaCha8Rng, n: usize, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let v = sorted_desc(uniform_box(rng, n, lo, hi));
        if (1..=k).all(|j| brute_sigma(&v, j).0 > 0.0) {
            return v;
        }
    }
}

pub fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = uniform_box(rng, n, -1.0, 1.0);
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// Central-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let at = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut y = x.to_vec();
        y[di] += si * h;
        y[dj] += sj * h;
        f(&y)
    };
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0) + at(i, -1.0, j, -1.0))
                / (4.0 * h * h);
        }
    }
    out
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Hessian by central differences at the step, from a geometric ladder,
/// where successive halvings agree best; robust near ∂Γ_k where the
/// useful step depends on the distance to the boundary.
pub fn fd_hessian_auto(f: impl Fn(&[f64]) -> f64 + Copy, x: &[f64]) -> Vec<Vec<f64>> {
    let mut best = (f64::INFINITY, Vec::new());
    let mut prev = fd_hessian(f, x, 1e-2);
    let mut h = 5e-3;
    while h > 1e-7 {
        let cur = fd_hessian(f, x, h);
        let gap = max_abs(cur.iter().flatten().zip(prev.iter().flatten()).map(|(a, b)| a - b));
        if gap < best.0 {
            best = (gap, cur.clone());
        }
        prev = cur;
        h *= 0.5;
    }
    best.1
}
