//! The second-order Einstein–Hilbert model on `J³π`: Lagrangian, momenta,
//! Hamiltonian, Poincaré–Cartan form, constraints and field equations.
//!
//! Momenta use the ordered conventions of the coordinates:
//! `L^{αβ,μν} = (1/n(μν)) ∂L/∂g_{αβ,μν}` with the closed form
//! `(n(αβ)/2) ϱ (g^{αμ}g^{βν} + g^{αν}g^{βμ} − 2g^{αβ}g^{μν})`, which is
//! symmetric in `μν` and is used with free `μ, ν` wherever a sum runs over
//! the full range. `L^{αβ,μ} = ∂L/∂g_{αβ,μ} − Σ_ν D_ν L^{αβ,μν}`.
//!
//! The Legendre sum form of `H` carries the weight `n(μν)` on the ordered
//! second-order sum: `H = Σ_{α≤β,μ≤ν} n(μν) L^{αβ,μν} g_{αβ,μν} +
//! Σ_{α≤β} L^{αβ,μ} g_{αβ,μ} − L`, i.e. `Σ (∂L/∂u) u` over the ordered
//! coordinates. Without it the sum form disagrees with the closed form
//! `ϱ g_{αβ,μ} g_{kl,ν} H^{αβklμν}` (full-range sums).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exterior::{contract, d3x, d4x, CotangentVector, Factor, FormTerm};
use crate::fieldspace::{
    d2metric_view, directional, dmetric_view, eh, fiber_partial, gradient, metric_view, multiplicity, pair_index,
    partial_at, EhJetPoint, FiberFunction, JetPoint, PAIRS,
};
use crate::geometry::{
    christoffel_lc, christoffel_lc_derivative, einstein_suite, inverse_and_density, ricci_from_connection, trace, Conn,
    DConn, Mat4,
};
use crate::scalar::{Dual, Scalar};
use crate::taylor::{JetScalar, MultiIndex};

/// `L^{αβ,μν}` over ordered `αβ` (index `p`) and full-range `μ, ν`.
pub type L2Full<S> = [[[S; 4]; 4]; 10];

fn nan_like<S: Scalar>(s: &S) -> S {
    s.lift(f64::NAN)
}

fn fill<S: Clone, const N: usize>(v: &S) -> [S; N] {
    std::array::from_fn(|_| v.clone())
}

/// `ϱ R` from the metric 2-jet.
pub fn curvature_density<S: Scalar>(g: &Mat4<S>, dg: &Conn<S>, d2g: &DConn<S>) -> S {
    let Ok((ginv, rho)) = inverse_and_density(g) else {
        return nan_like(&g[0][0]);
    };
    let gamma = christoffel_lc(&ginv, dg);
    let dgamma = christoffel_lc_derivative(&ginv, dg, d2g);
    let ricci = ricci_from_connection(&gamma, &dgamma);
    rho * trace(&ginv, &ricci)
}

/// `L = ϱ R` on flat EH coordinates.
pub fn lagrangian_coords<S: Scalar>(c: &[S]) -> S {
    curvature_density(&metric_view(c, eh::G), &dmetric_view(c, eh::DG), &d2metric_view(c, eh::D2G))
}

/// `Σ_{α≤β,μ} w_{αβ,μ} ∂L/∂g_{αβ,μ}`: one exact directional derivative.
fn lagrangian_along_dg<S: Scalar>(c: &[S], w: &[[S; 4]; 10]) -> S {
    let g = metric_view(c, eh::G).map(|r| r.map(Dual::constant));
    let dg: Conn<Dual<S>> = std::array::from_fn(|mu| {
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let p = pair_index(a, b);
                Dual::new(c[eh::dg(p, mu)].clone(), w[p][mu].clone())
            })
        })
    });
    let d2g = d2metric_view(c, eh::D2G).map(|x| x.map(|y| y.map(|r| r.map(Dual::constant))));
    curvature_density(&g, &dg, &d2g).eps
}

/// Closed form of `L^{αβ,μν}` from `g^{-1}` and `ϱ`.
pub fn l2_closed_from<S: Scalar>(ginv: &Mat4<S>, rho: &S) -> L2Full<S> {
    std::array::from_fn(|p| {
        let [a, b] = PAIRS[p];
        let f = rho.clone() * (multiplicity(a, b) / 2.0);
        std::array::from_fn(|mu| {
            std::array::from_fn(|nu| {
                let x = ginv[a][mu].clone() * ginv[b][nu].clone() + ginv[a][nu].clone() * ginv[b][mu].clone()
                    - ginv[a][b].clone() * ginv[mu][nu].clone() * 2.0;
                f.clone() * x
            })
        })
    })
}

fn l2_closed_coords<S: Scalar>(c: &[S]) -> L2Full<S> {
    match inverse_and_density(&metric_view(c, eh::G)) {
        Ok((ginv, rho)) => l2_closed_from(&ginv, &rho),
        Err(_) => fill(&fill(&fill(&nan_like(&c[0])))),
    }
}

/// `D_ν L^{αβ,μκ}` for all components, indexed `[ν][p][μ][κ]`. The closed
/// form depends on `g` only, so one tangent pass per direction suffices.
fn l2_total_derivatives<S: Scalar>(c: &[S]) -> [L2Full<S>; 4] {
    std::array::from_fn(|nu| {
        let g: Mat4<Dual<S>> = std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let p = pair_index(a, b);
                Dual::new(c[eh::g(p)].clone(), c[eh::dg(p, nu)].clone())
            })
        });
        match inverse_and_density(&g) {
            Ok((ginv, rho)) => l2_closed_from(&ginv, &rho).map(|x| x.map(|y| y.map(|d| d.eps))),
            Err(_) => fill(&fill(&fill(&nan_like(&c[0])))),
        }
    })
}

/// `Σ w_{αβ,μ} L^{αβ,μ}`.
fn l1_weighted<S: Scalar>(c: &[S], w: &[[S; 4]; 10], dl2: &[L2Full<S>; 4]) -> S {
    let mut acc = lagrangian_along_dg(c, w);
    for p in 0..10 {
        for mu in 0..4 {
            for (nu, d) in dl2.iter().enumerate() {
                acc = acc - w[p][mu].clone() * d[p][mu][nu].clone();
            }
        }
    }
    acc
}

fn dg_block<S: Scalar>(c: &[S]) -> [[S; 4]; 10] {
    std::array::from_fn(|p| std::array::from_fn(|mu| c[eh::dg(p, mu)].clone()))
}

/// `Σ_{α≤β,μ≤ν} n(μν) L^{αβ,μν} g_{αβ,μν}`.
fn second_order_legendre<S: Scalar>(c: &[S], l2: &L2Full<S>) -> S {
    let mut acc = c[0].zero_like();
    for (p, l2p) in l2.iter().enumerate() {
        for (q, &[mu, nu]) in PAIRS.iter().enumerate() {
            acc = acc + l2p[mu][nu].clone() * c[eh::D2G + 10 * p + q].clone() * multiplicity(mu, nu);
        }
    }
    acc
}

/// Legendre sum form of `H` on flat coordinates.
pub fn hamiltonian_sum_coords<S: Scalar>(c: &[S]) -> S {
    let l2 = l2_closed_coords(c);
    let dl2 = l2_total_derivatives(c);
    second_order_legendre(c, &l2) + l1_weighted(c, &dg_block(c), &dl2) - lagrangian_coords(c)
}

/// `ϱ Σ g_{αβ,μ} g_{kl,ν} H^{αβklμν}` over full index ranges, contracted in
/// factored form; `d[μ][a][b] = g_{ab,μ}`.
pub fn hamiltonian_closed_from<S: Scalar>(ginv: &Mat4<S>, rho: &S, d: &Conn<S>) -> S {
    let z = rho.zero_like();
    let tr: [S; 4] = std::array::from_fn(|mu| trace(ginv, &d[mu]));
    // r[μ][k][l] = g^{ak} g^{bl} g_{ab,μ}
    let r: Conn<S> = std::array::from_fn(|mu| crate::geometry::raise_both(ginv, &d[mu]));
    // b[ν][k][μ] = g_{kl,ν} g^{lμ}
    let b: Conn<S> = std::array::from_fn(|nu| {
        std::array::from_fn(|k| {
            std::array::from_fn(|mu| (0..4).fold(z.clone(), |acc, l| acc + d[nu][k][l].clone() * ginv[l][mu].clone()))
        })
    });
    let mut t1 = z.clone();
    let mut t2 = z.clone();
    let mut t3 = z.clone();
    let mut t4 = z.clone();
    for mu in 0..4 {
        for nu in 0..4 {
            t1 = t1 + ginv[mu][nu].clone() * tr[mu].clone() * tr[nu].clone();
            let mut rd = z.clone();
            for k in 0..4 {
                for l in 0..4 {
                    rd = rd + r[mu][k][l].clone() * d[nu][k][l].clone();
                }
                t3 = t3 + r[mu][k][nu].clone() * b[nu][k][mu].clone();
            }
            t2 = t2 + ginv[mu][nu].clone() * rd;
            t4 = t4 + tr[mu].clone() * r[nu][mu][nu].clone();
        }
    }
    rho.clone() * (t1 * 0.25 - t2 * 0.25 + t3 * 0.5 - t4 * 0.5)
}

pub fn hamiltonian_closed_coords<S: Scalar>(c: &[S]) -> S {
    match inverse_and_density(&metric_view(c, eh::G)) {
        Ok((ginv, rho)) => hamiltonian_closed_from(&ginv, &rho, &dmetric_view(c, eh::DG)),
        Err(_) => nan_like(&c[0]),
    }
}

/// The coefficient `H^{αβklμν}` exactly as displayed (indices `[α,β,k,l,μ,ν]`).
pub fn h_coefficient<S: Scalar>(ginv: &Mat4<S>, i: [usize; 6]) -> S {
    let [a, b, k, l, mu, nu] = i;
    let g = |x: usize, y: usize| ginv[x][y].clone();
    g(a, b) * g(k, l) * g(mu, nu) * 0.25 - g(a, k) * g(b, l) * g(mu, nu) * 0.25 + g(a, k) * g(l, mu) * g(b, nu) * 0.5
        - g(a, b) * g(l, nu) * g(k, mu) * 0.5
}

/// `L^{αβ} = −ϱ n(αβ) G^{αβ}` on flat coordinates.
pub fn einstein_constraint_coords<S: Scalar>(c: &[S]) -> [S; 10] {
    match einstein_suite(&metric_view(c, eh::G), &dmetric_view(c, eh::DG), &d2metric_view(c, eh::D2G)) {
        Ok(s) => std::array::from_fn(|p| {
            let [a, b] = PAIRS[p];
            -(s.rho.clone() * s.einstein_upper[a][b].clone() * multiplicity(a, b))
        }),
        Err(_) => fill(&nan_like(&c[0])),
    }
}

// ---------------------------------------------------------------------------
// fiber functions

/// `L = ϱR`.
pub struct Lagrangian;

impl FiberFunction for Lagrangian {
    fn order(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        lagrangian_coords(c)
    }
}

/// Closed-form `L^{αβ,μν}` (`p` indexes the ordered pair `αβ`).
pub struct MomentumL2 {
    pub p: usize,
    pub mu: usize,
    pub nu: usize,
}

impl FiberFunction for MomentumL2 {
    fn order(&self) -> usize {
        0
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        match inverse_and_density(&metric_view(c, eh::G)) {
            Ok((ginv, rho)) => l2_closed_from(&ginv, &rho)[self.p][self.mu][self.nu].clone(),
            Err(_) => nan_like(&c[0]),
        }
    }
}

/// `L^{αβ,μ}`.
pub struct MomentumL1 {
    pub p: usize,
    pub mu: usize,
}

impl FiberFunction for MomentumL1 {
    fn order(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        let z = c[0].zero_like();
        let mut w: [[S; 4]; 10] = fill(&fill(&z));
        w[self.p][self.mu] = z.lift(1.0);
        l1_weighted(c, &w, &l2_total_derivatives(c))
    }
}

/// `H` by the Legendre sum form.
pub struct HamiltonianSum;

impl FiberFunction for HamiltonianSum {
    fn order(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        hamiltonian_sum_coords(c)
    }
}

/// `H` by the closed form.
pub struct HamiltonianClosed;

impl FiberFunction for HamiltonianClosed {
    fn order(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        hamiltonian_closed_coords(c)
    }
}

/// One component of `L^{αβ}`.
pub struct EinsteinConstraint {
    pub p: usize,
}

impl FiberFunction for EinsteinConstraint {
    fn order(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        einstein_constraint_coords(c)[self.p].clone()
    }
}

/// The coefficient functions of the Poincaré–Cartan form, each with one
/// deferred-differential key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EhKey {
    H,
    L1 { p: usize, mu: usize },
    L2 { p: usize, mu: usize, nu: usize },
}

impl EhKey {
    pub const COUNT: usize = 1 + 40 + 160;

    pub fn index(self) -> usize {
        match self {
            EhKey::H => 0,
            EhKey::L1 { p, mu } => 1 + 4 * p + mu,
            EhKey::L2 { p, mu, nu } => 41 + 16 * p + 4 * mu + nu,
        }
    }

    pub fn from_index(k: usize) -> EhKey {
        match k {
            0 => EhKey::H,
            1..=40 => EhKey::L1 { p: (k - 1) / 4, mu: (k - 1) % 4 },
            _ => {
                let r = k - 41;
                EhKey::L2 { p: r / 16, mu: (r / 4) % 4, nu: r % 4 }
            }
        }
    }

    /// Value of the keyed function on flat coordinates.
    pub fn eval<S: Scalar>(self, c: &[S]) -> S {
        match self {
            EhKey::H => hamiltonian_sum_coords(c),
            EhKey::L1 { p, mu } => MomentumL1 { p, mu }.eval(c),
            EhKey::L2 { p, mu, nu } => MomentumL2 { p, mu, nu }.eval(c),
        }
    }
}

struct KeyFunction(EhKey);

impl FiberFunction for KeyFunction {
    fn order(&self) -> usize {
        match self.0 {
            EhKey::L2 { .. } => 0,
            _ => 2,
        }
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        self.0.eval(c)
    }
}

/// `Φ = Σ_k w_k F_k` over the keyed functions, evaluated with shared
/// intermediates so its gradient costs about as much as one `F_k`.
struct Combination {
    w_h: f64,
    w1: [[f64; 4]; 10],
    w2: [[[f64; 4]; 4]; 10],
}

impl Combination {
    fn from_weights(w: &[f64]) -> Self {
        let mut out = Combination { w_h: w[0], w1: [[0.0; 4]; 10], w2: [[[0.0; 4]; 4]; 10] };
        for (k, &v) in w.iter().enumerate().skip(1) {
            match EhKey::from_index(k) {
                EhKey::L1 { p, mu } => out.w1[p][mu] = v,
                EhKey::L2 { p, mu, nu } => out.w2[p][mu][nu] = v,
                EhKey::H => unreachable!(),
            }
        }
        out
    }
}

impl FiberFunction for Combination {
    fn order(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, c: &[S]) -> S {
        let z = c[0].zero_like();
        let l2 = l2_closed_coords(c);
        let dl2 = l2_total_derivatives(c);
        let dg = dg_block(c);
        // H contributes L^{αβ,μ} with weights g_{αβ,μ}
        let w: [[S; 4]; 10] =
            std::array::from_fn(|p| std::array::from_fn(|mu| dg[p][mu].clone() * self.w_h + self.w1[p][mu]));
        let mut acc = l1_weighted(c, &w, &dl2);
        if self.w_h != 0.0 {
            acc = acc + (second_order_legendre(c, &l2) - lagrangian_coords(c)) * self.w_h;
        }
        let mut l2sum = z;
        for p in 0..10 {
            for mu in 0..4 {
                for nu in 0..4 {
                    if self.w2[p][mu][nu] != 0.0 {
                        l2sum = l2sum + l2[p][mu][nu].clone() * self.w2[p][mu][nu];
                    }
                }
            }
        }
        acc + l2sum
    }
}

// ---------------------------------------------------------------------------
// operations on jet points

pub fn lagrangian_eh(p: &EhJetPoint) -> f64 {
    lagrangian_coords(p.coords())
}

/// Momenta and Hamiltonian, each by two routes.
#[derive(Clone, Debug, PartialEq)]
pub struct EhMomenta {
    /// `(1/n(μν)) ∂L/∂g_{αβ,μν}` by exact fiber differentiation, `[p][q]`
    /// over ordered pairs.
    pub l2_ad: [[f64; 10]; 10],
    /// Closed-form `L^{αβ,μν}`, `[p][q]` over ordered pairs.
    pub l2_closed: [[f64; 10]; 10],
    pub l1: [[f64; 4]; 10],
    pub h_sum: f64,
    pub h_closed: f64,
    pub lagrangian: f64,
}

pub fn momenta_and_hamiltonian(p: &EhJetPoint) -> Result<EhMomenta> {
    let c = p.coords();
    let mut l2_ad = [[0.0; 10]; 10];
    for (pi, row) in l2_ad.iter_mut().enumerate() {
        for (q, &[mu, nu]) in PAIRS.iter().enumerate() {
            row[q] = fiber_partial(&Lagrangian, eh::D2G + 10 * pi + q, p)? / multiplicity(mu, nu);
        }
    }
    let full = l2_closed_coords(c);
    let l2_closed = std::array::from_fn(|pi| std::array::from_fn(|q| full[pi][PAIRS[q][0]][PAIRS[q][1]]));
    let l1 = std::array::from_fn(|pi| std::array::from_fn(|mu| MomentumL1 { p: pi, mu }.eval(c)));
    Ok(EhMomenta {
        l2_ad,
        l2_closed,
        l1,
        h_sum: hamiltonian_sum_coords(c),
        h_closed: hamiltonian_closed_coords(c),
        lagrangian: lagrangian_coords(c),
    })
}

/// `ϱ Σ g_{αβ,μ} g_{kl,ν} H^{αβklμν}` by the literal six-index sum.
pub fn hamiltonian_index_form(p: &EhJetPoint) -> Result<f64> {
    let (ginv, rho) = inverse_and_density(&p.metric())?;
    let d = dmetric_view(p.coords(), eh::DG);
    let mut acc = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    for mu in 0..4 {
                        for nu in 0..4 {
                            acc += d[mu][a][b] * d[nu][k][l] * h_coefficient(&ginv, [a, b, k, l, mu, nu]);
                        }
                    }
                }
            }
        }
    }
    Ok(rho * acc)
}

pub fn constraint_einstein(p: &EhJetPoint) -> [f64; 10] {
    einstein_constraint_coords(p.coords())
}

/// `D_τ L^{αβ}`, `[p][τ]`. `L^{αβ}` lives on `J²π`, so this needs the
/// third-order coordinates only.
pub fn constraint_einstein_derivative(p: &EhJetPoint) -> Result<[[f64; 4]; 10]> {
    let mut out = [[0.0; 4]; 10];
    for tau in 0..4 {
        let t = p.total_tangent(tau, 2)?;
        let seeded = crate::fieldspace::seed(p.coords(), &t);
        let d = einstein_constraint_coords(&seeded);
        for q in 0..10 {
            out[q][tau] = d[q].eps;
        }
    }
    Ok(out)
}

/// Residuals of the two holonomy equations.
#[derive(Clone, Debug, PartialEq)]
pub struct Holonomy {
    /// `g_{αβ,μ} − ∂g_{αβ}/∂x^μ`, `[p][μ]`.
    pub first: [[f64; 4]; 10],
    /// `g_{αβ,μν} − (1/n(μν))(∂_ν g_{αβ,μ} + ∂_μ g_{αβ,ν})`, `[p][q]`, where
    /// the bracket sums over the distinct orderings of `(μ, ν)`.
    pub second: [[f64; 10]; 10],
}

impl Holonomy {
    pub fn max_abs(&self) -> f64 {
        self.first.iter().flatten().chain(self.second.iter().flatten()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Holonomy residuals of `p` against the section given by the metric
/// series (whose first derivatives define `g_{αβ,μ}(x)`).
pub fn holonomy_residuals(p: &EhJetPoint, section: &[JetScalar; 10]) -> Result<Holonomy> {
    for s in section {
        if s.order() < 2 {
            return Err(Error::Usage("holonomy needs section derivatives of order 2".into()));
        }
        if s.base_point() != p.x() {
            return Err(Error::Usage("section is expanded at a different point".into()));
        }
    }
    let d = |s: &JetScalar, dirs: &[usize]| s.derivative(MultiIndex::from_dirs(dirs)).expect("order checked");
    let c = p.coords();
    let first = std::array::from_fn(|q| std::array::from_fn(|mu| c[eh::dg(q, mu)] - d(&section[q], &[mu])));
    let second = std::array::from_fn(|q| {
        std::array::from_fn(|r| {
            let [mu, nu] = PAIRS[r];
            // ∂_ν g_{,μ} and ∂_μ g_{,ν} coincide as one term when μ = ν
            let orderings = if mu == nu { d(&section[q], &[mu, nu]) } else { 2.0 * d(&section[q], &[mu, nu]) };
            c[eh::D2G + 10 * q + r] - orderings / multiplicity(mu, nu)
        })
    });
    Ok(Holonomy { first, second })
}

/// The Poincaré–Cartan form as a list of terms whose coefficient
/// differentials are deferred to [`EhKey`] indices.
pub fn cartan_form_eh() -> Vec<FormTerm> {
    let mut terms = Vec::with_capacity(EhKey::COUNT);
    let [a, b, c, d] = d4x();
    terms.push(FormTerm::new(1.0, [Factor::Deferred(EhKey::H.index()), a, b, c, d]));
    for p in 0..10 {
        for mu in 0..4 {
            let (s, [x, y, z]) = d3x(mu);
            let key = EhKey::L1 { p, mu }.index();
            terms.push(FormTerm::new(-s, [Factor::Deferred(key), Factor::Coord(eh::g(p)), x, y, z]));
        }
    }
    for p in 0..10 {
        for mu in 0..4 {
            for nu in 0..4 {
                let (s, [x, y, z]) = d3x(nu);
                let key = EhKey::L2 { p, mu, nu }.index();
                terms.push(FormTerm::new(-s, [Factor::Deferred(key), Factor::Coord(eh::dg(p, mu)), x, y, z]));
            }
        }
    }
    terms
}

/// The same form with every coefficient differential expanded densely (one
/// gradient per term; slow, used to cross-check the deferred route).
pub fn cartan_form_eh_dense(p: &EhJetPoint) -> Vec<FormTerm> {
    cartan_form_eh()
        .into_iter()
        .map(|mut t| {
            if let Factor::Deferred(k) = t.factors[0] {
                t.factors[0] = Factor::Dense(gradient(&KeyFunction(EhKey::from_index(k)), p).into());
            }
            t
        })
        .collect()
}

/// `D_τ F_k` for every key: pairings of the coefficient differentials with
/// the tangent lifts.
fn key_pairings(p: &EhJetPoint) -> Result<Vec<[f64; 4]>> {
    let c = p.coords();
    let mut out = vec![[0.0; 4]; EhKey::COUNT];
    let dl2 = l2_total_derivatives(c);
    for tau in 0..4 {
        let t = p.total_tangent(tau, 2)?;
        out[0][tau] = directional(&HamiltonianSum, p, &t);
        for q in 0..10 {
            for mu in 0..4 {
                out[EhKey::L1 { p: q, mu }.index()][tau] = directional(&MomentumL1 { p: q, mu }, p, &t);
                for nu in 0..4 {
                    out[EhKey::L2 { p: q, mu, nu }.index()][tau] = dl2[tau][q][mu][nu];
                }
            }
        }
    }
    Ok(out)
}

/// Replace deferred weights by dense components: `dense + dΦ`,
/// `Φ = Σ_k w_k F_k`.
fn resolve(p: &EhJetPoint, mut cv: CotangentVector) -> Vec<f64> {
    if cv.deferred.iter().any(|w| *w != 0.0) {
        let phi = Combination::from_weights(&cv.deferred);
        let c = p.coords();
        for id in 0..eh::len_up_to(phi.order()) {
            cv.dense[id] += partial_at(&phi, c, id);
        }
    }
    cv.dense
}

/// `i(X₀∧X₁∧X₂∧X₃)Ω_L` for the tangent lifts `X_τ` of the prolonged section
/// through `p`, as a dense covector on `J³π`.
pub fn field_equation_covector(p: &EhJetPoint) -> Result<Vec<f64>> {
    let lifts: Vec<Vec<f64>> = (0..4).map(|tau| p.tangent_lift(tau)).collect::<Result<_>>()?;
    let pairings = key_pairings(p)?;
    let deferred = |k: usize, tau: usize| pairings[k][tau];
    let vs = [&lifts[0][..], &lifts[1][..], &lifts[2][..], &lifts[3][..]];
    let cv = contract(&cartan_form_eh(), &vs, &deferred, eh::DIM, EhKey::COUNT)?;
    Ok(resolve(p, cv))
}

/// The same covector through the dense form (cross-check route).
pub fn field_equation_covector_dense(p: &EhJetPoint) -> Result<Vec<f64>> {
    let lifts: Vec<Vec<f64>> = (0..4).map(|tau| p.tangent_lift(tau)).collect::<Result<_>>()?;
    let vs = [&lifts[0][..], &lifts[1][..], &lifts[2][..], &lifts[3][..]];
    let none = |_: usize, _: usize| 0.0;
    Ok(contract(&cartan_form_eh_dense(p), &vs, &none, eh::DIM, 0)?.dense)
}

/// Max-norm of [`field_equation_covector`].
pub fn verify_field_equation(p: &EhJetPoint) -> Result<f64> {
    Ok(field_equation_covector(p)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Largest changes seen when the second- and third-order coordinates are
/// randomized. All values are scale-normalized: `|Δ| / max(1, |value|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EhProjectability {
    pub h_closed: f64,
    pub h_sum: f64,
    pub l2: f64,
    pub l1: f64,
    /// Control: the Lagrangian itself must change.
    pub lagrangian: f64,
}

impl EhProjectability {
    pub fn max_invariant(&self) -> f64 {
        self.h_closed.max(self.h_sum).max(self.l2).max(self.l1)
    }
}

fn scaled_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

/// Draw `u ∈ [−0.1, 0.1]` and set `c ← c + u·max(|c|, 1)`.
pub fn perturb(rng: &mut ChaCha8Rng, c: f64) -> f64 {
    c + rng.gen_range(-0.1..=0.1) * c.abs().max(1.0)
}

pub fn projectability_check(p: &EhJetPoint, trials: usize, seed: u64) -> Result<EhProjectability> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = momenta_and_hamiltonian_cheap(p);
    let mut dev = EhProjectability { h_closed: 0.0, h_sum: 0.0, l2: 0.0, l1: 0.0, lagrangian: 0.0 };
    for _ in 0..trials {
        let q = p.map_coords(|id, v| if id >= eh::D2G { perturb(&mut rng, v) } else { v })?;
        let m = momenta_and_hamiltonian_cheap(&q);
        dev.h_closed = dev.h_closed.max(scaled_change(base.h_closed, m.h_closed));
        dev.h_sum = dev.h_sum.max(scaled_change(base.h_sum, m.h_sum));
        dev.lagrangian = dev.lagrangian.max(scaled_change(base.lagrangian, m.lagrangian));
        for (x, y) in base.l2_closed.iter().flatten().zip(m.l2_closed.iter().flatten()) {
            dev.l2 = dev.l2.max(scaled_change(*x, *y));
        }
        for (x, y) in base.l1.iter().flatten().zip(m.l1.iter().flatten()) {
            dev.l1 = dev.l1.max(scaled_change(*x, *y));
        }
    }
    Ok(dev)
}

/// Momenta without the fiber-AD second-order route.
fn momenta_and_hamiltonian_cheap(p: &EhJetPoint) -> EhMomenta {
    let c = p.coords();
    let full = l2_closed_coords(c);
    let l2_closed = std::array::from_fn(|pi| std::array::from_fn(|q| full[pi][PAIRS[q][0]][PAIRS[q][1]]));
    let dl2 = l2_total_derivatives(c);
    let l1 = std::array::from_fn(|pi| {
        std::array::from_fn(|mu| {
            let mut w = [[0.0; 4]; 10];
            w[pi][mu] = 1.0;
            l1_weighted(c, &w, &dl2)
        })
    });
    EhMomenta {
        l2_ad: [[f64::NAN; 10]; 10],
        l2_closed,
        l1,
        h_sum: hamiltonian_sum_coords(c),
        h_closed: hamiltonian_closed_coords(c),
        lagrangian: lagrangian_coords(c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin;

    fn point(name: &str, x: [f64; 4]) -> EhJetPoint {
        builtin(name, &[]).unwrap().eh_point_at(x).unwrap()
    }

    #[test]
    fn minkowski_momenta() {
        let p = point("minkowski", [0.5; 4]);
        let m = momenta_and_hamiltonian(&p).unwrap();
        assert_eq!(m.l2_closed[pair_index(0, 0)][pair_index(1, 1)], 1.0);
        assert!(m.l1.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(m.h_sum, 0.0);
        assert_eq!(m.h_closed, 0.0);
        assert_eq!(lagrangian_eh(&p), 0.0);
    }

    #[test]
    fn de_sitter_lagrangian() {
        let p = point("desitter", [0.0, 0.5, 0.5, 0.5]);
        assert!((lagrangian_eh(&p) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn flrw_einstein_constraint() {
        let p = point("flrw", [0.0, 0.5, 0.5, 0.5]);
        let l = constraint_einstein(&p);
        assert!((l[0] + 0.03).abs() < 1e-12, "{}", l[0]);
    }

    #[test]
    fn key_indices_round_trip() {
        for k in 0..EhKey::COUNT {
            assert_eq!(EhKey::from_index(k).index(), k);
        }
        assert_eq!(cartan_form_eh().len(), EhKey::COUNT);
    }

    #[test]
    fn closed_h_matches_index_form() {
        let p = point("schwarzschild", [0.3, 4.0, 1.1, 0.2]);
        let a = hamiltonian_closed_coords(p.coords());
        let b = hamiltonian_index_form(&p).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} {b}");
    }
}
