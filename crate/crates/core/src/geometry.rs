//! Inverse metric, density, connections and curvature at a point.
//!
//! Everything is generic over [`Scalar`], so the same code yields values
//! (`f64`), exact tangents (`Dual`) and Taylor series (`JetScalar`).
//!
//! Index conventions: a connection is stored as `gamma[λ][μ][ν] = Γ^λ_{μν}`,
//! its derivatives as `dgamma[ρ][λ][μ][ν] = ∂_ρ Γ^λ_{μν}`, metric derivatives
//! as `dg[μ][α][β] = ∂_μ g_{αβ}` and `d2g[μ][ν][α][β]`.
//!
//! The Ricci tensor of a connection follows the Palatini Lagrangian:
//! `R_{αβ} = ∂_γΓ^γ_{βα} − ∂_βΓ^γ_{γα} + Γ^γ_{βα}Γ^σ_{σγ} − Γ^γ_{βσ}Γ^σ_{γα}`.

use crate::error::{Error, Result};
use crate::fieldspace::collapse_sym;
use crate::scalar::Scalar;

pub type Mat4<S> = [[S; 4]; 4];
pub type Conn<S> = [[[S; 4]; 4]; 4];
pub type DConn<S> = [[[[S; 4]; 4]; 4]; 4];

fn fill<S: Clone, const N: usize>(v: &S) -> [S; N] {
    std::array::from_fn(|_| v.clone())
}

fn zero_mat<S: Scalar>(z: &S) -> Mat4<S> {
    std::array::from_fn(|_| fill(z))
}

fn zero_conn<S: Scalar>(z: &S) -> Conn<S> {
    std::array::from_fn(|_| zero_mat(z))
}

/// Determinant of a 4×4 matrix by 2×2 minors.
pub fn det4<S: Scalar>(m: &Mat4<S>) -> S {
    let (s, c) = minors(m);
    s[0].clone() * c[5].clone() - s[1].clone() * c[4].clone()
        + s[2].clone() * c[3].clone()
        + s[3].clone() * c[2].clone()
        - s[4].clone() * c[1].clone()
        + s[5].clone() * c[0].clone()
}

fn minors<S: Scalar>(m: &Mat4<S>) -> ([S; 6], [S; 6]) {
    let x = |i: usize, j: usize| m[i][j].clone();
    let two = |a: usize, b: usize, r0: usize, r1: usize| x(r0, a) * x(r1, b) - x(r1, a) * x(r0, b);
    let s = [two(0, 1, 0, 1), two(0, 2, 0, 1), two(0, 3, 0, 1), two(1, 2, 0, 1), two(1, 3, 0, 1), two(2, 3, 0, 1)];
    let c = [two(0, 1, 2, 3), two(0, 2, 2, 3), two(0, 3, 2, 3), two(1, 2, 2, 3), two(1, 3, 2, 3), two(2, 3, 2, 3)];
    (s, c)
}

/// Cofactor inverse and density `ϱ = √|det g|`.
pub fn inverse_and_density<S: Scalar>(g: &Mat4<S>) -> Result<(Mat4<S>, S)> {
    let (s, c) = minors(g);
    let det = det4(g);
    if det.value().abs() < 1e-14 || !det.value().is_finite() {
        return Err(Error::DegenerateMetric { det: det.value() });
    }
    let m = |i: usize, j: usize| g[i][j].clone();
    let inv_det = det.lift(1.0) / det.clone();
    let adj: [[S; 4]; 4] = [
        [
            m(1, 1) * c[5].clone() - m(1, 2) * c[4].clone() + m(1, 3) * c[3].clone(),
            -(m(0, 1) * c[5].clone()) + m(0, 2) * c[4].clone() - m(0, 3) * c[3].clone(),
            m(3, 1) * s[5].clone() - m(3, 2) * s[4].clone() + m(3, 3) * s[3].clone(),
            -(m(2, 1) * s[5].clone()) + m(2, 2) * s[4].clone() - m(2, 3) * s[3].clone(),
        ],
        [
            -(m(1, 0) * c[5].clone()) + m(1, 2) * c[2].clone() - m(1, 3) * c[1].clone(),
            m(0, 0) * c[5].clone() - m(0, 2) * c[2].clone() + m(0, 3) * c[1].clone(),
            -(m(3, 0) * s[5].clone()) + m(3, 2) * s[2].clone() - m(3, 3) * s[1].clone(),
            m(2, 0) * s[5].clone() - m(2, 2) * s[2].clone() + m(2, 3) * s[1].clone(),
        ],
        [
            m(1, 0) * c[4].clone() - m(1, 1) * c[2].clone() + m(1, 3) * c[0].clone(),
            -(m(0, 0) * c[4].clone()) + m(0, 1) * c[2].clone() - m(0, 3) * c[0].clone(),
            m(3, 0) * s[4].clone() - m(3, 1) * s[2].clone() + m(3, 3) * s[0].clone(),
            -(m(2, 0) * s[4].clone()) + m(2, 1) * s[2].clone() - m(2, 3) * s[0].clone(),
        ],
        [
            -(m(1, 0) * c[3].clone()) + m(1, 1) * c[1].clone() - m(1, 2) * c[0].clone(),
            m(0, 0) * c[3].clone() - m(0, 1) * c[1].clone() + m(0, 2) * c[0].clone(),
            -(m(3, 0) * s[3].clone()) + m(3, 1) * s[1].clone() - m(3, 2) * s[0].clone(),
            m(2, 0) * s[3].clone() - m(2, 1) * s[1].clone() + m(2, 2) * s[0].clone(),
        ],
    ];
    let ginv = adj.map(|row| row.map(|v| v * inv_det.clone()));
    let rho = det.abs().sqrt();
    Ok((ginv, rho))
}

/// Christoffel symbols of the first kind,
/// `Γ_{σμν} = ½(∂_μ g_{σν} + ∂_ν g_{σμ} − ∂_σ g_{μν})`, stored `[σ][μ][ν]`.
pub fn christoffel_lower<S: Scalar>(dg: &Conn<S>) -> Conn<S> {
    std::array::from_fn(|s| {
        std::array::from_fn(|mu| {
            std::array::from_fn(|nu| (dg[mu][s][nu].clone() + dg[nu][s][mu].clone() - dg[s][mu][nu].clone()) * 0.5)
        })
    })
}

fn raise_first<S: Scalar>(ginv: &Mat4<S>, low: &Conn<S>) -> Conn<S> {
    let z = ginv[0][0].zero_like();
    let mut out = zero_conn(&z);
    for (l, out_l) in out.iter_mut().enumerate() {
        for s in 0..4 {
            for mu in 0..4 {
                for nu in mu..4 {
                    let t = out_l[mu][nu].clone() + ginv[l][s].clone() * low[s][mu][nu].clone();
                    out_l[mu][nu] = t;
                }
            }
        }
        for mu in 0..4 {
            for nu in 0..mu {
                out_l[mu][nu] = out_l[nu][mu].clone();
            }
        }
    }
    out
}

/// Levi-Civita connection `Γ^ρ_{μν} = ½ g^{ρσ}(∂_μ g_{σν} + ∂_ν g_{σμ} − ∂_σ g_{μν})`.
pub fn christoffel_lc<S: Scalar>(ginv: &Mat4<S>, dg: &Conn<S>) -> Conn<S> {
    raise_first(ginv, &christoffel_lower(dg))
}

/// `∂_ρ g^{αβ} = −g^{αμ} ∂_ρ g_{μν} g^{νβ}`, stored `[ρ][α][β]`.
pub fn inverse_derivative<S: Scalar>(ginv: &Mat4<S>, dg: &Conn<S>) -> Conn<S> {
    std::array::from_fn(|rho| {
        let t: Mat4<S> = std::array::from_fn(|a| {
            std::array::from_fn(|nu| {
                let mut acc = ginv[0][0].zero_like();
                for mu in 0..4 {
                    acc = acc + ginv[a][mu].clone() * dg[rho][mu][nu].clone();
                }
                acc
            })
        });
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let mut acc = ginv[0][0].zero_like();
                for nu in 0..4 {
                    acc = acc - t[a][nu].clone() * ginv[nu][b].clone();
                }
                acc
            })
        })
    })
}

/// Derivatives of the Levi-Civita connection by the chain rule.
pub fn christoffel_lc_derivative<S: Scalar>(ginv: &Mat4<S>, dg: &Conn<S>, d2g: &DConn<S>) -> DConn<S> {
    let low = christoffel_lower(dg);
    let dinv = inverse_derivative(ginv, dg);
    std::array::from_fn(|rho| {
        let dlow = christoffel_lower(&d2g[rho]);
        let a = raise_first(ginv, &dlow);
        let b = raise_first(&dinv[rho], &low);
        std::array::from_fn(|l| {
            std::array::from_fn(|mu| std::array::from_fn(|nu| a[l][mu][nu].clone() + b[l][mu][nu].clone()))
        })
    })
}

/// Ricci tensor of an arbitrary connection (not assumed symmetric).
pub fn ricci_from_connection<S: Scalar>(gamma: &Conn<S>, dgamma: &DConn<S>) -> Mat4<S> {
    let z = gamma[0][0][0].zero_like();
    // trace Γ^σ_{σγ}
    let tr: [S; 4] = std::array::from_fn(|c| (0..4).fold(z.clone(), |acc, s| acc + gamma[s][s][c].clone()));
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut acc = z.clone();
            for c in 0..4 {
                acc = acc + dgamma[c][c][b][a].clone() - dgamma[b][c][c][a].clone()
                    + gamma[c][b][a].clone() * tr[c].clone();
                for s in 0..4 {
                    acc = acc - gamma[c][b][s].clone() * gamma[s][c][a].clone();
                }
            }
            acc
        })
    })
}

/// `g^{αβ} T_{αβ}`.
pub fn trace<S: Scalar>(ginv: &Mat4<S>, t: &Mat4<S>) -> S {
    let mut acc = ginv[0][0].zero_like();
    for a in 0..4 {
        for b in 0..4 {
            acc = acc + ginv[a][b].clone() * t[a][b].clone();
        }
    }
    acc
}

/// `A^{αβ} = g^{αμ} g^{βν} A_{μν}`.
pub fn raise_both<S: Scalar>(ginv: &Mat4<S>, t: &Mat4<S>) -> Mat4<S> {
    let z = ginv[0][0].zero_like();
    let half: Mat4<S> = std::array::from_fn(|a| {
        std::array::from_fn(|n| (0..4).fold(z.clone(), |acc, m| acc + ginv[a][m].clone() * t[m][n].clone()))
    });
    std::array::from_fn(|a| {
        std::array::from_fn(|b| (0..4).fold(z.clone(), |acc, n| acc + half[a][n].clone() * ginv[b][n].clone()))
    })
}

/// Connection and curvature data of a metric at a point.
#[derive(Clone, Debug)]
pub struct CurvatureSuite<S> {
    pub ginv: Mat4<S>,
    pub rho: S,
    pub gamma: Conn<S>,
    pub dgamma: DConn<S>,
    pub ricci: Mat4<S>,
    pub scalar: S,
    pub einstein_lower: Mat4<S>,
    pub einstein_upper: Mat4<S>,
}

impl<S: Scalar> CurvatureSuite<S> {
    /// Ordered (α≤β) components of `G^{αβ}`.
    pub fn einstein_upper_ordered(&self) -> [S; 10] {
        collapse_sym(&self.einstein_upper)
    }
}

/// Full curvature suite from the metric 2-jet.
pub fn einstein_suite<S: Scalar>(g: &Mat4<S>, dg: &Conn<S>, d2g: &DConn<S>) -> Result<CurvatureSuite<S>> {
    let (ginv, rho) = inverse_and_density(g)?;
    let gamma = christoffel_lc(&ginv, dg);
    let dgamma = christoffel_lc_derivative(&ginv, dg, d2g);
    let ricci = ricci_from_connection(&gamma, &dgamma);
    let scalar = trace(&ginv, &ricci);
    let einstein_lower: Mat4<S> =
        std::array::from_fn(|a| std::array::from_fn(|b| ricci[a][b].clone() - g[a][b].clone() * scalar.clone() * 0.5));
    let einstein_upper = raise_both(&ginv, &einstein_lower);
    Ok(CurvatureSuite { ginv, rho, gamma, dgamma, ricci, scalar, einstein_lower, einstein_upper })
}

/// Torsion `T^α_{βγ} = Γ^α_{βγ} − Γ^α_{γβ}`.
pub fn torsion<S: Scalar>(gamma: &Conn<S>) -> Conn<S> {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| std::array::from_fn(|c| gamma[a][b][c].clone() - gamma[a][c][b].clone()))
    })
}

/// The 24 independent torsion components `T^α_{βγ}`, `β<γ`, ordered by α
/// then by the antisymmetric pair.
pub fn torsion_packed<S: Scalar>(t: &Conn<S>) -> [S; 24] {
    std::array::from_fn(|k| {
        let [b, c] = crate::fieldspace::ANTI_PAIRS[k % 6];
        t[k / 6][b][c].clone()
    })
}

/// The torsion trace `T^λ_{λμ}`.
pub fn torsion_trace<S: Scalar>(t: &Conn<S>) -> [S; 4] {
    let z = t[0][0][0].zero_like();
    std::array::from_fn(|mu| (0..4).fold(z.clone(), |acc, l| acc + t[l][l][mu].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eta() -> Mat4<f64> {
        let mut g = [[0.0; 4]; 4];
        g[0][0] = -1.0;
        g[1][1] = 1.0;
        g[2][2] = 1.0;
        g[3][3] = 1.0;
        g
    }

    #[test]
    fn minkowski_inverse_and_density() {
        let (ginv, rho) = inverse_and_density(&eta()).unwrap();
        assert_eq!(ginv, eta());
        assert_eq!(rho, 1.0);
    }

    #[test]
    fn schwarzschild_density() {
        let (r, th) = (3.0f64, std::f64::consts::FRAC_PI_2);
        let mut g = [[0.0; 4]; 4];
        g[0][0] = -(1.0 - 2.0 / r);
        g[1][1] = 1.0 / (1.0 - 2.0 / r);
        g[2][2] = r * r;
        g[3][3] = r * r * th.sin().powi(2);
        let (_, rho) = inverse_and_density(&g).unwrap();
        assert!((rho - 9.0).abs() < 1e-13);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let mut g = eta();
        g[0][0] = 0.0;
        assert!(matches!(inverse_and_density(&g), Err(Error::DegenerateMetric { .. })));
    }

    #[test]
    fn inverse_of_dense_matrix() {
        let g: Mat4<f64> =
            [[-1.3, 0.2, 0.1, -0.05], [0.2, 1.1, 0.3, 0.0], [0.1, 0.3, 0.9, 0.2], [-0.05, 0.0, 0.2, 1.4]];
        let (ginv, _) = inverse_and_density(&g).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let p: f64 = (0..4).map(|m| ginv[a][m] * g[m][b]).sum();
                assert!((p - if a == b { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
        let nd = nalgebra::Matrix4::from_fn(|i, j| g[i][j]).determinant();
        assert!((det4(&g) - nd).abs() < 1e-13);
    }

    #[test]
    fn ricci_of_zero_connection_is_zero() {
        let z = zero_conn(&0.0);
        let dz: DConn<f64> = std::array::from_fn(|_| z);
        assert_eq!(ricci_from_connection(&z, &dz), [[0.0; 4]; 4]);
    }

    #[test]
    fn torsion_of_single_component() {
        let mut gamma = zero_conn(&0.0);
        gamma[1][2][3] = 1.0;
        let t = torsion(&gamma);
        assert_eq!(t[1][2][3], 1.0);
        assert_eq!(t[1][3][2], -1.0);
        let packed = torsion_packed(&t);
        assert_eq!(packed[6 + 5], 1.0);
        assert_eq!(packed.iter().filter(|v| **v != 0.0).count(), 1);
    }
}
