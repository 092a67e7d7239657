//! The first-order Einstein–Palatini model on `J¹Π`: Lagrangian, momenta,
//! Hamiltonian, Poincaré–Cartan form and the constraint families.
//!
//! The connection is general (64 independent components). Momenta are
//! `L_α^{βγ,σ} = ∂L_EP/∂Γ^α_{βγ,σ}`, the Hamiltonian is the Legendre
//! combination `H = L_α^{βγ,σ} Γ^α_{βγ,σ} − L_EP`. Antisymmetrizations use
//! `A_{[μν]} = ½(A_{μν} − A_{νμ})`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eh::perturb;
use crate::error::{Error, Result};
use crate::exterior::{contract, d3x, d4x, CotangentVector, Factor, FormTerm};
use crate::fieldspace::{
    directional, ep, fiber_partial, gradient, metric_view, multiplicity, partial_at, EpJetPoint, FiberFunction,
    JetPoint, ANTI_PAIRS, PAIRS,
};
use crate::geometry::{inverse_and_density, ricci_from_connection, torsion, trace, Conn, DConn, Mat4};
use crate::scalar::{Dual, Scalar};

fn nan_like<S: Scalar>(s: &S) -> S {
    s.lift(f64::NAN)
}

/// `Γ^λ_{μν}` as `[λ][μ][ν]`.
pub fn gamma_view<S: Scalar>(c: &[S]) -> Conn<S> {
    std::array::from_fn(|l| std::array::from_fn(|m| std::array::from_fn(|n| c[ep::gamma(l, m, n)].clone())))
}

/// `Γ^λ_{μν,ρ}` as `[ρ][λ][μ][ν]`.
pub fn dgamma_view<S: Scalar>(c: &[S]) -> DConn<S> {
    std::array::from_fn(|r| {
        std::array::from_fn(|l| std::array::from_fn(|m| std::array::from_fn(|n| c[ep::dgamma(l, m, n, r)].clone())))
    })
}

fn lagrangian_from<S: Scalar>(g: &Mat4<S>, gamma: &Conn<S>, dgamma: &DConn<S>) -> S {
    let Ok((ginv, rho)) = inverse_and_density(g) else {
        return nan_like(&g[0][0]);
    };
    rho * trace(&ginv, &ricci_from_connection(gamma, dgamma))
}

/// `L_EP = ϱ g^{αβ} R_{αβ}(Γ, ∂Γ)` on flat EP coordinates.
pub fn lagrangian_ep_coords<S: Scalar>(c: &[S]) -> S {
    lagrangian_from(&metric_view(c, ep::G), &gamma_view(c), &dgamma_view(c))
}

/// `Σ_k w_k ∂L_EP/∂Γ_{k}` over the 256 connection-derivative coordinates
/// (`w` indexed like the `dΓ` block).
fn lagrangian_along_dgamma<S: Scalar>(c: &[S], w: &[S]) -> S {
    let g = metric_view(c, ep::G).map(|r| r.map(Dual::constant));
    let gamma = gamma_view(c).map(|x| x.map(|y| y.map(Dual::constant)));
    let dgamma: DConn<Dual<S>> = std::array::from_fn(|r| {
        std::array::from_fn(|l| {
            std::array::from_fn(|m| {
                std::array::from_fn(|n| {
                    let k = 4 * ep::conn(l, m, n) + r;
                    Dual::new(c[ep::DGAMMA + k].clone(), w[k].clone())
                })
            })
        })
    });
    lagrangian_from(&g, &gamma, &dgamma).eps
}

/// Legendre combination `H = Σ (∂L/∂Γ_{,}) Γ_{,} − L`.
pub fn hamiltonian_ep_coords<S: Scalar>(c: &[S]) -> S {
    lagrangian_along_dgamma(c, &c[ep::DGAMMA..]) - lagrangian_ep_coords(c)
}

/// Closed form `ϱ(g^{γβ}δ^σ_α − g^{γσ}δ^β_α)`, indexed `[α][β][γ][σ]`.
pub fn momenta_closed<S: Scalar>(ginv: &Mat4<S>, rho: &S) -> [[[[S; 4]; 4]; 4]; 4] {
    let z = rho.zero_like();
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|g| {
                std::array::from_fn(|s| {
                    let mut v = z.clone();
                    if s == a {
                        v = v + ginv[g][b].clone();
                    }
                    if b == a {
                        v = v - ginv[g][s].clone();
                    }
                    rho.clone() * v
                })
            })
        })
    })
}

// ---------------------------------------------------------------------------
// fiber functions

pub struct LagrangianEp;

impl FiberFunction for LagrangianEp {
    fn order(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        lagrangian_ep_coords(c)
    }
}

pub struct HamiltonianEp;

impl FiberFunction for HamiltonianEp {
    fn order(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        hamiltonian_ep_coords(c)
    }
}

/// `L_α^{βγ,σ}` by exact fiber differentiation; `k = 4·(16α+4β+γ) + σ`.
pub struct MomentumEp {
    pub k: usize,
}

impl FiberFunction for MomentumEp {
    fn order(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        partial_at(&LagrangianEp, c, ep::DGAMMA + self.k)
    }
}

/// `Σ L_α^{βγ,σ} Γ̄^α_{βγ,σ}` with the connection derivatives frozen at
/// given values (so only the momenta vary).
struct MomentaDotFrozen<'a> {
    dgamma: &'a [f64],
}

impl FiberFunction for MomentaDotFrozen<'_> {
    fn order(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        let w: Vec<S> = self.dgamma.iter().map(|v| c[0].lift(*v)).collect();
        lagrangian_along_dgamma(c, &w)
    }
}

/// `Φ = w_H H + Σ_k w_k L_k`, one nested pass.
struct Combination {
    w_h: f64,
    w: Vec<f64>,
}

impl FiberFunction for Combination {
    fn order(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        let w: Vec<S> = (0..256).map(|k| c[ep::DGAMMA + k].clone() * self.w_h + self.w[k]).collect();
        let mut acc = lagrangian_along_dgamma(c, &w);
        if self.w_h != 0.0 {
            acc = acc - lagrangian_ep_coords(c) * self.w_h;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// operations

pub fn lagrangian_ep(p: &EpJetPoint) -> f64 {
    lagrangian_ep_coords(p.coords())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpMomenta {
    /// `L_α^{βγ,σ}` by fiber differentiation, `[4·(16α+4β+γ) + σ]`.
    pub lmom: Vec<f64>,
    /// The closed-form oracle, same layout.
    pub lmom_closed: Vec<f64>,
    pub h: f64,
}

pub fn momenta_ep(p: &EpJetPoint) -> Result<EpMomenta> {
    let lmom = (0..256).map(|k| fiber_partial(&LagrangianEp, ep::DGAMMA + k, p)).collect::<Result<_>>()?;
    let (ginv, rho) = inverse_and_density(&p.metric())?;
    let closed = momenta_closed(&ginv, &rho);
    let mut lmom_closed = vec![0.0; 256];
    for a in 0..4 {
        for b in 0..4 {
            for g in 0..4 {
                for s in 0..4 {
                    lmom_closed[4 * ep::conn(a, b, g) + s] = closed[a][b][g][s];
                }
            }
        }
    }
    Ok(EpMomenta { lmom, lmom_closed, h: hamiltonian_ep_coords(p.coords()) })
}

/// Values of the five constraint families at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct EpConstraintValues {
    /// `∂H/∂g_{μν} − (∂L_α^{βγ,σ}/∂g_{μν}) Γ^α_{βγ,σ}` over ordered `μ≤ν`.
    pub c0: [f64; 10],
    /// `[ρσ][μ]`.
    pub premetric: [[f64; 4]; 10],
    /// Trace-removed torsion, `[6α + pair(β<γ)]`.
    pub torsion: [f64; 24],
    /// `[6α + pair(β<γ)][ν]`.
    pub torsion_deriv: [[f64; 4]; 24],
    /// `[ρσ][pair(μ<ν)]`.
    pub integrability: [[f64; 6]; 10],
}

pub fn constraint_c0(p: &EpJetPoint) -> [f64; 10] {
    let c = p.coords();
    let frozen = MomentaDotFrozen { dgamma: &c[ep::DGAMMA..] };
    std::array::from_fn(|q| partial_at(&HamiltonianEp, c, ep::g(q)) - partial_at(&frozen, c, ep::g(q)))
}

pub fn constraint_premetricity(p: &EpJetPoint) -> [[f64; 4]; 10] {
    let c = p.coords();
    let g = p.metric();
    let gamma = gamma_view(c);
    let t = torsion(&gamma);
    std::array::from_fn(|q| {
        let [r, s] = PAIRS[q];
        std::array::from_fn(|mu| {
            let mut v = c[ep::dg(q, mu)];
            for l in 0..4 {
                v -= g[s][l] * gamma[l][mu][r] + g[r][l] * gamma[l][mu][s];
                v -= 2.0 / 3.0 * g[r][s] * t[l][l][mu];
            }
            v
        })
    })
}

/// `T^α_{βγ} − ⅓δ^α_β T^μ_{μγ} + ⅓δ^α_γ T^μ_{μβ}` over `β<γ`.
pub fn remove_trace(t: &Conn<f64>) -> [f64; 24] {
    std::array::from_fn(|k| {
        let a = k / 6;
        let [b, g] = ANTI_PAIRS[k % 6];
        let tr = |x: usize| (0..4).map(|m| t[m][m][x]).sum::<f64>();
        let mut v = t[a][b][g];
        if a == b {
            v -= tr(g) / 3.0;
        }
        if a == g {
            v += tr(b) / 3.0;
        }
        v
    })
}

fn unpack_torsion(v: &[f64; 24]) -> Conn<f64> {
    let mut t = [[[0.0; 4]; 4]; 4];
    for (k, x) in v.iter().enumerate() {
        let [b, g] = ANTI_PAIRS[k % 6];
        t[k / 6][b][g] = *x;
        t[k / 6][g][b] = -*x;
    }
    t
}

/// Trace removal applied to its own output (for the idempotence check).
pub fn remove_trace_packed(v: &[f64; 24]) -> [f64; 24] {
    remove_trace(&unpack_torsion(v))
}

pub fn constraint_torsion(p: &EpJetPoint) -> [f64; 24] {
    remove_trace(&torsion(&gamma_view(p.coords())))
}

pub fn constraint_torsion_deriv(p: &EpJetPoint) -> [[f64; 4]; 24] {
    let d = dgamma_view(p.coords());
    let per_nu: [[f64; 24]; 4] = std::array::from_fn(|nu| remove_trace(&torsion(&d[nu])));
    std::array::from_fn(|k| std::array::from_fn(|nu| per_nu[nu][k]))
}

pub fn constraint_integrability(p: &EpJetPoint) -> [[f64; 6]; 10] {
    let c = p.coords();
    let g = p.metric();
    let gamma = gamma_view(c);
    let d = dgamma_view(c);
    let dt: [Conn<f64>; 4] = std::array::from_fn(|nu| torsion(&d[nu]));
    // Γ^γ_{νλ} Γ^λ_{μσ}
    let gg =
        |gm: usize, nu: usize, mu: usize, s: usize| (0..4).map(|l| gamma[gm][nu][l] * gamma[l][mu][s]).sum::<f64>();
    std::array::from_fn(|q| {
        let [r, s] = PAIRS[q];
        std::array::from_fn(|a| {
            let [mu, nu] = ANTI_PAIRS[a];
            let mut v = 0.0;
            for x in 0..4 {
                v += g[r][x] * 0.5 * (gg(x, nu, mu, s) - gg(x, mu, nu, s));
                v += g[s][x] * 0.5 * (gg(x, nu, mu, r) - gg(x, mu, nu, r));
                v += g[r][x] * 0.5 * (d[nu][x][mu][s] - d[mu][x][nu][s]);
                v += g[s][x] * 0.5 * (d[nu][x][mu][r] - d[mu][x][nu][r]);
                v += 2.0 / 3.0 * g[r][s] * 0.5 * (dt[nu][x][x][mu] - dt[mu][x][x][nu]);
            }
            v
        })
    })
}

pub fn constraints_ep(p: &EpJetPoint) -> EpConstraintValues {
    EpConstraintValues {
        c0: constraint_c0(p),
        premetric: constraint_premetricity(p),
        torsion: constraint_torsion(p),
        torsion_deriv: constraint_torsion_deriv(p),
        integrability: constraint_integrability(p),
    }
}

/// `Γ^α_{βγ} += δ^α_γ A_β`, `Γ^α_{βγ,ρ} += δ^α_γ ∂_ρ A_β` for an affine
/// covector field with value `a` and derivatives `da[β][ρ] = ∂_ρ A_β`.
/// Second derivatives of an affine field vanish, so the extension is kept.
pub fn projective_shift(p: &EpJetPoint, a: [f64; 4], da: [[f64; 4]; 4]) -> Result<EpJetPoint> {
    let mut c = p.coords().to_vec();
    for b in 0..4 {
        for g in 0..4 {
            c[ep::gamma(g, b, g)] += a[b];
            for r in 0..4 {
                c[ep::dgamma(g, b, g, r)] += da[b][r];
            }
        }
    }
    EpJetPoint::new(c, p.extension().cloned())
}

// ---------------------------------------------------------------------------
// Poincaré–Cartan form

/// Deferred keys: 0 is `H`, `1 + k` is `L_k` with `k = 4·(16α+4β+γ) + μ`.
pub const KEY_COUNT: usize = 257;

pub fn cartan_form_ep() -> Vec<FormTerm> {
    let mut terms = Vec::with_capacity(KEY_COUNT);
    let [a, b, c, d] = d4x();
    terms.push(FormTerm::new(1.0, [Factor::Deferred(0), a, b, c, d]));
    for conn in 0..64 {
        for mu in 0..4 {
            let (s, [x, y, z]) = d3x(mu);
            let k = 4 * conn + mu;
            terms.push(FormTerm::new(-s, [Factor::Deferred(1 + k), Factor::Coord(ep::GAMMA + conn), x, y, z]));
        }
    }
    terms
}

struct KeyFunction(usize);

impl FiberFunction for KeyFunction {
    fn order(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        if self.0 == 0 {
            hamiltonian_ep_coords(c)
        } else {
            MomentumEp { k: self.0 - 1 }.eval(c)
        }
    }
}

pub fn cartan_form_ep_dense(p: &EpJetPoint) -> Vec<FormTerm> {
    cartan_form_ep()
        .into_iter()
        .map(|mut t| {
            if let Factor::Deferred(k) = t.factors[0] {
                t.factors[0] = Factor::Dense(gradient(&KeyFunction(k), p).into());
            }
            t
        })
        .collect()
}

fn resolve(p: &EpJetPoint, mut cv: CotangentVector) -> Vec<f64> {
    if cv.deferred.iter().any(|w| *w != 0.0) {
        let phi = Combination { w_h: cv.deferred[0], w: cv.deferred[1..].to_vec() };
        let c = p.coords();
        for (id, d) in cv.dense.iter_mut().enumerate() {
            *d += partial_at(&phi, c, id);
        }
    }
    cv.dense
}

fn lifts(p: &EpJetPoint) -> Result<Vec<Vec<f64>>> {
    if p.extension().is_none() {
        return Err(Error::Usage("field equation needs the second-order extension of the section".into()));
    }
    (0..4).map(|tau| p.tangent_lift(tau)).collect()
}

/// `i(X₀∧X₁∧X₂∧X₃)Ω` for the tangent lifts of the section through `p`.
pub fn field_equation_covector_ep(p: &EpJetPoint) -> Result<Vec<f64>> {
    let lifts = lifts(p)?;
    let mut pairings = vec![[0.0; 4]; KEY_COUNT];
    for (tau, t) in lifts.iter().enumerate() {
        for (k, row) in pairings.iter_mut().enumerate() {
            row[tau] = directional(&KeyFunction(k), p, t);
        }
    }
    let deferred = |k: usize, tau: usize| pairings[k][tau];
    let vs = [&lifts[0][..], &lifts[1][..], &lifts[2][..], &lifts[3][..]];
    let cv = contract(&cartan_form_ep(), &vs, &deferred, ep::DIM, KEY_COUNT)?;
    Ok(resolve(p, cv))
}

pub fn field_equation_covector_ep_dense(p: &EpJetPoint) -> Result<Vec<f64>> {
    let lifts = lifts(p)?;
    let vs = [&lifts[0][..], &lifts[1][..], &lifts[2][..], &lifts[3][..]];
    let none = |_: usize, _: usize| 0.0;
    Ok(contract(&cartan_form_ep_dense(p), &vs, &none, ep::DIM, 0)?.dense)
}

pub fn verify_field_equation_ep(p: &EpJetPoint) -> Result<f64> {
    Ok(field_equation_covector_ep(p)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Largest scale-normalized changes under randomization of the first-order
/// blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct EpProjectability {
    /// `H` and the momenta, with `dg` and `dΓ` randomized.
    pub h: f64,
    pub lmom: f64,
    /// `H` with only `dΓ` randomized.
    pub h_dgamma_only: f64,
    /// Control: `L_EP` with only `dΓ` randomized.
    pub lagrangian: f64,
}

impl EpProjectability {
    pub fn max_invariant(&self) -> f64 {
        self.h.max(self.lmom).max(self.h_dgamma_only)
    }
}

fn scaled_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

/// Momenta via one nested pass per `g` direction would be more code than
/// this needs; the 256 fiber partials are cheap at this size.
fn lmom_ad(c: &[f64]) -> Vec<f64> {
    (0..256).map(|k| partial_at(&LagrangianEp, c, ep::DGAMMA + k)).collect()
}

pub fn projectability_check_ep(p: &EpJetPoint, trials: usize, seed: u64) -> Result<EpProjectability> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = p.coords();
    let (h0, l0, m0) = (hamiltonian_ep_coords(c), lagrangian_ep_coords(c), lmom_ad(c));
    let mut dev = EpProjectability { h: 0.0, lmom: 0.0, h_dgamma_only: 0.0, lagrangian: 0.0 };
    for _ in 0..trials {
        let q = p.map_coords(|id, v| if id >= ep::DG { perturb(&mut rng, v) } else { v })?;
        let qc = q.coords();
        dev.h = dev.h.max(scaled_change(h0, hamiltonian_ep_coords(qc)));
        for (a, b) in m0.iter().zip(lmom_ad(qc)) {
            dev.lmom = dev.lmom.max(scaled_change(*a, b));
        }
        let r = p.map_coords(|id, v| if id >= ep::DGAMMA { perturb(&mut rng, v) } else { v })?;
        dev.h_dgamma_only = dev.h_dgamma_only.max(scaled_change(h0, hamiltonian_ep_coords(r.coords())));
        dev.lagrangian = dev.lagrangian.max(scaled_change(l0, lagrangian_ep_coords(r.coords())));
    }
    Ok(dev)
}

/// Symmetric ordered pair weight, re-exported for report code.
pub fn pair_weight(q: usize) -> f64 {
    multiplicity(PAIRS[q][0], PAIRS[q][1])
}
