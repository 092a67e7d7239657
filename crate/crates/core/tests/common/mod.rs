//! Independent finite-difference curvature pipeline used as an oracle.
//!
//! Metric values come from plain `f64` evaluation of the catalog
//! expressions; derivatives are central differences with one Richardson
//! step; the inverse is nalgebra's; curvature is assembled from the lowered
//! Christoffel symbols rather than from a connection derivative.

#![allow(dead_code, clippy::needless_range_loop)]

use msgr::catalog::MetricSpec;
use nalgebra::Matrix4;

pub const STEP: f64 = 1e-4;

pub type T3 = [[[f64; 4]; 4]; 4];
pub type T4 = [[[[f64; 4]; 4]; 4]; 4];

fn shifted(x: [f64; 4], moves: &[(usize, f64)]) -> [f64; 4] {
    let mut y = x;
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

fn g_at(spec: &MetricSpec, x: [f64; 4]) -> [[f64; 4]; 4] {
    spec.metric_at(x).expect("metric evaluates")
}

fn first(spec: &MetricSpec, x: [f64; 4], mu: usize, h: f64) -> [[f64; 4]; 4] {
    let a = g_at(spec, shifted(x, &[(mu, h)]));
    let b = g_at(spec, shifted(x, &[(mu, -h)]));
    std::array::from_fn(|i| std::array::from_fn(|j| (a[i][j] - b[i][j]) / (2.0 * h)))
}

fn second(spec: &MetricSpec, x: [f64; 4], mu: usize, nu: usize, h: f64) -> [[f64; 4]; 4] {
    if mu == nu {
        let a = g_at(spec, shifted(x, &[(mu, h)]));
        let b = g_at(spec, x);
        let c = g_at(spec, shifted(x, &[(mu, -h)]));
        return std::array::from_fn(|i| std::array::from_fn(|j| (a[i][j] - 2.0 * b[i][j] + c[i][j]) / (h * h)));
    }
    let pp = g_at(spec, shifted(x, &[(mu, h), (nu, h)]));
    let pm = g_at(spec, shifted(x, &[(mu, h), (nu, -h)]));
    let mp = g_at(spec, shifted(x, &[(mu, -h), (nu, h)]));
    let mm = g_at(spec, shifted(x, &[(mu, -h), (nu, -h)]));
    std::array::from_fn(|i| std::array::from_fn(|j| (pp[i][j] - pm[i][j] - mp[i][j] + mm[i][j]) / (4.0 * h * h)))
}

fn richardson(coarse: [[f64; 4]; 4], fine: [[f64; 4]; 4]) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| (4.0 * fine[i][j] - coarse[i][j]) / 3.0))
}

pub struct Oracle {
    pub g: [[f64; 4]; 4],
    /// `[μ][a][b]`
    pub dg: T3,
    /// `[μ][ν][a][b]`
    pub d2g: T4,
    /// `Γ^λ_{μν}` as `[λ][μ][ν]`
    pub gamma: T3,
    pub ricci: [[f64; 4]; 4],
    pub scalar: f64,
    pub einstein: [[f64; 4]; 4],
}

pub fn oracle(spec: &MetricSpec, x: [f64; 4]) -> Oracle {
    let h = STEP;
    let g = g_at(spec, x);
    let dg: T3 = std::array::from_fn(|mu| richardson(first(spec, x, mu, h), first(spec, x, mu, h / 2.0)));
    let d2g: T4 = std::array::from_fn(|mu| {
        std::array::from_fn(|nu| richardson(second(spec, x, mu, nu, h), second(spec, x, mu, nu, h / 2.0)))
    });
    let gm = Matrix4::from_fn(|i, j| g[i][j]);
    let gi = gm.try_inverse().expect("invertible metric");
    let ginv: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| gi[(i, j)]));

    // Γ_{kμν} and its derivative ∂_l Γ_{kμν}
    let low = |k: usize, m: usize, n: usize| 0.5 * (dg[m][k][n] + dg[n][k][m] - dg[k][m][n]);
    let dlow = |l: usize, k: usize, m: usize, n: usize| 0.5 * (d2g[l][m][k][n] + d2g[l][n][k][m] - d2g[l][k][m][n]);
    // ∂_l g^{ab} = −g^{ac} ∂_l g_{cd} g^{db}
    let dginv = |l: usize, a: usize, b: usize| {
        let mut s = 0.0;
        for c in 0..4 {
            for d in 0..4 {
                s -= ginv[a][c] * dg[l][c][d] * ginv[d][b];
            }
        }
        s
    };
    let gamma: T3 = std::array::from_fn(|r| {
        std::array::from_fn(|m| std::array::from_fn(|n| (0..4).map(|k| ginv[r][k] * low(k, m, n)).sum()))
    });
    let dgamma = |l: usize, r: usize, m: usize, n: usize| -> f64 {
        (0..4).map(|k| dginv(l, r, k) * low(k, m, n) + ginv[r][k] * dlow(l, k, m, n)).sum()
    };
    // R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} − ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} − Γ^ρ_{νλ}Γ^λ_{μσ}
    let riemann = |r: usize, s: usize, m: usize, n: usize| {
        let mut v = dgamma(m, r, n, s) - dgamma(n, r, m, s);
        for l in 0..4 {
            v += gamma[r][m][l] * gamma[l][n][s] - gamma[r][n][l] * gamma[l][m][s];
        }
        v
    };
    let ricci: [[f64; 4]; 4] =
        std::array::from_fn(|s| std::array::from_fn(|n| (0..4).map(|r| riemann(r, s, r, n)).sum()));
    let scalar: f64 = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| ginv[a][b] * ricci[a][b]).sum();
    let einstein = std::array::from_fn(|a| std::array::from_fn(|b| ricci[a][b] - 0.5 * g[a][b] * scalar));
    Oracle { g, dg, d2g, gamma, ricci, scalar, einstein }
}

/// `max|a − b| / max(1, max|b|)` over paired components.
pub fn scaled_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    let pairs: Vec<(f64, f64)> = a.into_iter().copied().zip(b.into_iter().copied()).collect();
    let scale = pairs.iter().fold(1.0f64, |m, (_, b)| m.max(b.abs()));
    pairs.iter().fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

pub fn sample(spec: &MetricSpec, rng: &mut rand_chacha::ChaCha8Rng) -> [f64; 4] {
    use rand::Rng;
    // keep the finite-difference stencil inside the box
    std::array::from_fn(|i| {
        let (lo, hi) = spec.domain[i];
        let pad = (hi - lo) * 0.01;
        rng.gen_range(lo + pad..=hi - pad)
    })
}
