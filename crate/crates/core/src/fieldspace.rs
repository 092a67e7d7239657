//! Jet coordinates of the two field theories and exact differentiation of
//! functions defined on them.
//!
//! Coordinates are stored flat, in the ordered convention of the models
//! (`α≤β` for metric components, `μ≤ν`, `μ≤ν≤λ` for derivative indices).
//! Full-range tensor views are available for formulas written with free
//! index sums.
//!
//! Einstein–Hilbert layout on `J³π` (354 coordinates):
//!
//! | block             | offset | size    |
//! |-------------------|--------|---------|
//! | `x^μ`             | 0      | 4       |
//! | `g_{αβ}`          | 4      | 10      |
//! | `g_{αβ,μ}`        | 14     | 10 × 4  |
//! | `g_{αβ,μν}`       | 54     | 10 × 10 |
//! | `g_{αβ,μνλ}`      | 154    | 10 × 20 |
//!
//! Einstein–Palatini layout on `J¹Π` (374 coordinates): `x^μ` (4), `g_{αβ}`
//! (10), `Γ^λ_{μν}` (64, index `16λ+4μ+ν`), `g_{αβ,μ}` (10 × 4),
//! `Γ^λ_{μν,ρ}` (64 × 4).

use crate::error::{Error, Result};
use crate::scalar::{Dual, Scalar};
use crate::taylor::{JetScalar, MultiIndex};

// ---------------------------------------------------------------------------
// ordered index tables

const fn make_pairs() -> [[usize; 2]; 10] {
    let mut out = [[0; 2]; 10];
    let mut k = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = a;
        while b < 4 {
            out[k] = [a, b];
            k += 1;
            b += 1;
        }
        a += 1;
    }
    out
}

const fn make_triples() -> [[usize; 3]; 20] {
    let mut out = [[0; 3]; 20];
    let mut k = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = a;
        while b < 4 {
            let mut c = b;
            while c < 4 {
                out[k] = [a, b, c];
                k += 1;
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

const fn make_quads() -> [[usize; 4]; 35] {
    let mut out = [[0; 4]; 35];
    let mut k = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = a;
        while b < 4 {
            let mut c = b;
            while c < 4 {
                let mut d = c;
                while d < 4 {
                    out[k] = [a, b, c, d];
                    k += 1;
                    d += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

/// Ordered symmetric pairs `α≤β`, also used for `μ≤ν`.
pub const PAIRS: [[usize; 2]; 10] = make_pairs();
/// Ordered triples `μ≤ν≤λ`.
pub const TRIPLES: [[usize; 3]; 20] = make_triples();
/// Ordered quadruples, for the fourth-order extension block.
pub const QUADS: [[usize; 4]; 35] = make_quads();

/// Antisymmetric pairs `μ<ν`.
pub const ANTI_PAIRS: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

fn sorted<const N: usize>(mut idx: [usize; N]) -> [usize; N] {
    idx.sort_unstable();
    idx
}

/// Position of the unordered pair `{a, b}` in [`PAIRS`].
#[inline]
pub fn pair_index(a: usize, b: usize) -> usize {
    const TABLE: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]];
    TABLE[a][b]
}

pub fn triple_index(a: usize, b: usize, c: usize) -> usize {
    let s = sorted([a, b, c]);
    TRIPLES.iter().position(|t| *t == s).expect("indices in 0..4")
}

pub fn quad_index(a: usize, b: usize, c: usize, d: usize) -> usize {
    let s = sorted([a, b, c, d]);
    QUADS.iter().position(|t| *t == s).expect("indices in 0..4")
}

/// The multiplicity `n(μν)`: 1 on the diagonal, 2 off it.
#[inline]
pub fn multiplicity(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        2.0
    }
}

/// Expand 10 ordered components into a symmetric 4×4 matrix.
pub fn expand_sym<S: Clone>(v: &[S]) -> [[S; 4]; 4] {
    std::array::from_fn(|a| std::array::from_fn(|b| v[pair_index(a, b)].clone()))
}

/// Collapse a symmetric 4×4 matrix into its 10 ordered components.
pub fn collapse_sym<S: Clone>(m: &[[S; 4]; 4]) -> [S; 10] {
    std::array::from_fn(|k| {
        let [a, b] = PAIRS[k];
        m[a][b].clone()
    })
}

// ---------------------------------------------------------------------------
// Einstein–Hilbert coordinates

/// Coordinate ids on `J³π`.
pub mod eh {
    use super::*;

    pub const X: usize = 0;
    pub const G: usize = 4;
    pub const DG: usize = 14;
    pub const D2G: usize = 54;
    pub const D3G: usize = 154;
    /// Number of coordinates of `J³π`.
    pub const DIM: usize = 354;
    /// Size of the optional fourth-order block.
    pub const D4G_LEN: usize = 350;
    /// Dimension of the configuration bundle `E` (base + metric components).
    pub const BUNDLE_DIM: usize = G + 10;

    #[inline]
    pub fn x(mu: usize) -> usize {
        X + mu
    }
    #[inline]
    pub fn g(p: usize) -> usize {
        G + p
    }
    #[inline]
    pub fn dg(p: usize, mu: usize) -> usize {
        DG + 4 * p + mu
    }
    #[inline]
    pub fn d2g(p: usize, mu: usize, nu: usize) -> usize {
        D2G + 10 * p + pair_index(mu, nu)
    }
    pub fn d3g(p: usize, mu: usize, nu: usize, la: usize) -> usize {
        D3G + 20 * p + triple_index(mu, nu, la)
    }

    /// Jet order of a coordinate (base coordinates count as order 0).
    pub fn order_of(id: usize) -> usize {
        match id {
            _ if id < DG => 0,
            _ if id < D2G => 1,
            _ if id < D3G => 2,
            _ => 3,
        }
    }

    /// Number of coordinates of jet order ≤ `order`.
    pub fn len_up_to(order: usize) -> usize {
        match order {
            0 => DG,
            1 => D2G,
            2 => D3G,
            _ => DIM,
        }
    }

    /// Human-readable coordinate name, e.g. `g_{01,23}`.
    pub fn name(id: usize) -> String {
        let digits = |v: &[usize]| v.iter().map(|d| d.to_string()).collect::<String>();
        match order_of(id) {
            _ if id < G => format!("x^{id}"),
            0 => format!("g_{{{}}}", digits(&PAIRS[id - G])),
            1 => {
                let (p, mu) = ((id - DG) / 4, (id - DG) % 4);
                format!("g_{{{},{mu}}}", digits(&PAIRS[p]))
            }
            2 => {
                let (p, q) = ((id - D2G) / 10, (id - D2G) % 10);
                format!("g_{{{},{}}}", digits(&PAIRS[p]), digits(&PAIRS[q]))
            }
            _ => {
                let (p, r) = ((id - D3G) / 20, (id - D3G) % 20);
                format!("g_{{{},{}}}", digits(&PAIRS[p]), digits(&TRIPLES[r]))
            }
        }
    }
}

/// Coordinate ids on `J¹Π`.
pub mod ep {
    use super::*;

    pub const X: usize = 0;
    pub const G: usize = 4;
    pub const GAMMA: usize = 14;
    pub const DG: usize = 78;
    pub const DGAMMA: usize = 118;
    /// Number of coordinates of `J¹Π`.
    pub const DIM: usize = 374;
    /// Dimension of the configuration bundle (base + metric + connection).
    pub const BUNDLE_DIM: usize = DG;

    /// Flat index of `Γ^λ_{μν}` within a 64-component connection.
    #[inline]
    pub fn conn(la: usize, mu: usize, nu: usize) -> usize {
        16 * la + 4 * mu + nu
    }
    #[inline]
    pub fn g(p: usize) -> usize {
        G + p
    }
    #[inline]
    pub fn gamma(la: usize, mu: usize, nu: usize) -> usize {
        GAMMA + conn(la, mu, nu)
    }
    #[inline]
    pub fn dg(p: usize, rho: usize) -> usize {
        DG + 4 * p + rho
    }
    #[inline]
    pub fn dgamma(la: usize, mu: usize, nu: usize, rho: usize) -> usize {
        DGAMMA + 4 * conn(la, mu, nu) + rho
    }

    pub fn order_of(id: usize) -> usize {
        if id < DG {
            0
        } else {
            1
        }
    }

    pub fn name(id: usize) -> String {
        let digits = |v: &[usize]| v.iter().map(|d| d.to_string()).collect::<String>();
        match id {
            _ if id < G => format!("x^{id}"),
            _ if id < GAMMA => format!("g_{{{}}}", digits(&PAIRS[id - G])),
            _ if id < DG => {
                let k = id - GAMMA;
                format!("Gamma^{}_{{{}{}}}", k / 16, (k / 4) % 4, k % 4)
            }
            _ if id < DGAMMA => {
                let (p, rho) = ((id - DG) / 4, (id - DG) % 4);
                format!("g_{{{},{rho}}}", digits(&PAIRS[p]))
            }
            _ => {
                let (k, rho) = ((id - DGAMMA) / 4, (id - DGAMMA) % 4);
                format!("Gamma^{}_{{{}{},{rho}}}", k / 16, (k / 4) % 4, k % 4)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// metric validation

/// Check that a symmetric metric has signature (-,+,+,+) and is not
/// degenerate; returns its determinant.
pub fn check_lorentzian(g: &[[f64; 4]; 4]) -> Result<f64> {
    if g.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("metric has non-finite components".into()));
    }
    let m = nalgebra::Matrix4::from_fn(|i, j| g[i][j]);
    let det = m.determinant();
    if det.abs() < 1e-14 {
        return Err(Error::DegenerateMetric { det });
    }
    let eig = nalgebra::SymmetricEigen::new(m).eigenvalues;
    let negative = eig.iter().filter(|&&e| e < 0.0).count();
    if negative != 1 {
        return Err(Error::NotLorentzian(format!("eigenvalues {:?}", eig.as_slice())));
    }
    Ok(det)
}

// ---------------------------------------------------------------------------
// jet points

/// Common access to a jet point, used by the generic differentiation
/// operators.
pub trait JetPoint {
    fn coords(&self) -> &[f64];

    /// Jet order of a coordinate id.
    fn order_of(&self, id: usize) -> usize;

    /// Components of the total derivative `D_τ` restricted to coordinates of
    /// jet order ≤ `max_order`. Needs the jet data of order `max_order + 1`.
    fn total_tangent(&self, tau: usize, max_order: usize) -> Result<Vec<f64>>;
}

/// A point of `J³π`, optionally carrying the fourth-order block used by
/// total derivatives of third-order coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct EhJetPoint {
    coords: Vec<f64>,
    d4g: Option<Vec<f64>>,
}

impl EhJetPoint {
    pub fn new(coords: Vec<f64>, d4g: Option<Vec<f64>>) -> Result<Self> {
        if coords.len() != eh::DIM {
            return Err(Error::Usage(format!("expected {} jet coordinates, got {}", eh::DIM, coords.len())));
        }
        if let Some(d) = &d4g {
            if d.len() != eh::D4G_LEN {
                return Err(Error::Usage(format!(
                    "expected {} fourth-order coordinates, got {}",
                    eh::D4G_LEN,
                    d.len()
                )));
            }
        }
        let p = EhJetPoint { coords, d4g };
        check_lorentzian(&p.metric())?;
        Ok(p)
    }

    pub fn x(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.coords[i])
    }

    pub fn metric(&self) -> [[f64; 4]; 4] {
        expand_sym(&self.coords[eh::G..eh::DG])
    }

    pub fn g(&self, a: usize, b: usize) -> f64 {
        self.coords[eh::g(pair_index(a, b))]
    }

    pub fn dg(&self, a: usize, b: usize, mu: usize) -> f64 {
        self.coords[eh::dg(pair_index(a, b), mu)]
    }

    pub fn d2g(&self, a: usize, b: usize, mu: usize, nu: usize) -> f64 {
        self.coords[eh::d2g(pair_index(a, b), mu, nu)]
    }

    pub fn d3g(&self, a: usize, b: usize, mu: usize, nu: usize, la: usize) -> f64 {
        self.coords[eh::d3g(pair_index(a, b), mu, nu, la)]
    }

    pub fn d4g(&self, p: usize, idx: [usize; 4]) -> Option<f64> {
        self.d4g.as_ref().map(|d| d[35 * p + quad_index(idx[0], idx[1], idx[2], idx[3])])
    }

    pub fn has_order4(&self) -> bool {
        self.d4g.is_some()
    }

    pub fn d4g_block(&self) -> Option<&[f64]> {
        self.d4g.as_deref()
    }

    /// A copy with coordinate `id` replaced (metric validity is rechecked).
    pub fn with_coord(&self, id: usize, value: f64) -> Result<Self> {
        let mut coords = self.coords.clone();
        coords[id] = value;
        EhJetPoint::new(coords, self.d4g.clone())
    }

    /// A copy with the given coordinate transformation applied.
    pub fn map_coords(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let coords = self.coords.iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        EhJetPoint::new(coords, self.d4g.clone())
    }

    /// A copy without the fourth-order block.
    pub fn truncated(&self) -> Self {
        EhJetPoint { coords: self.coords.clone(), d4g: None }
    }

    /// The tangent lift `X_τ` of the prolonged section through this point:
    /// the full `D_τ` on all 354 coordinates. Requires the fourth-order block.
    pub fn tangent_lift(&self, tau: usize) -> Result<Vec<f64>> {
        self.total_tangent(tau, 3)
    }
}

impl JetPoint for EhJetPoint {
    fn coords(&self) -> &[f64] {
        &self.coords
    }

    fn order_of(&self, id: usize) -> usize {
        eh::order_of(id)
    }

    fn total_tangent(&self, tau: usize, max_order: usize) -> Result<Vec<f64>> {
        if tau > 3 {
            return Err(Error::Usage(format!("direction {tau} out of range 0..3")));
        }
        if max_order >= 3 && self.d4g.is_none() {
            return Err(Error::Usage(
                "total derivative of third-order coordinates needs the fourth-order block".into(),
            ));
        }
        let mut t = vec![0.0; eh::DIM];
        t[eh::x(tau)] = 1.0;
        for p in 0..10 {
            t[eh::g(p)] = self.coords[eh::dg(p, tau)];
            if max_order >= 1 {
                for mu in 0..4 {
                    t[eh::dg(p, mu)] = self.coords[eh::d2g(p, mu, tau)];
                }
            }
            if max_order >= 2 {
                for (q, &[mu, nu]) in PAIRS.iter().enumerate() {
                    t[eh::D2G + 10 * p + q] = self.coords[eh::d3g(p, mu, nu, tau)];
                }
            }
            if max_order >= 3 {
                let d4 = self.d4g.as_ref().expect("checked above");
                for (r, &[mu, nu, la]) in TRIPLES.iter().enumerate() {
                    t[eh::D3G + 20 * p + r] = d4[35 * p + quad_index(mu, nu, la, tau)];
                }
            }
        }
        Ok(t)
    }
}

/// Second-order data of an Einstein–Palatini section, needed for the
/// tangent lift of its first prolongation.
#[derive(Clone, Debug, PartialEq)]
pub struct EpExtension {
    /// `g_{αβ,μν}`, 10 × 10 (ordered μ≤ν).
    pub d2g: Vec<f64>,
    /// `Γ^λ_{μν,ρσ}`, 64 × 10 (ordered ρ≤σ).
    pub d2gamma: Vec<f64>,
}

/// A point of `J¹Π`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpJetPoint {
    coords: Vec<f64>,
    ext: Option<EpExtension>,
}

impl EpJetPoint {
    pub fn new(coords: Vec<f64>, ext: Option<EpExtension>) -> Result<Self> {
        if coords.len() != ep::DIM {
            return Err(Error::Usage(format!("expected {} jet coordinates, got {}", ep::DIM, coords.len())));
        }
        if let Some(e) = &ext {
            if e.d2g.len() != 100 || e.d2gamma.len() != 640 {
                return Err(Error::Usage("malformed second-order extension".into()));
            }
        }
        let p = EpJetPoint { coords, ext };
        check_lorentzian(&p.metric())?;
        Ok(p)
    }

    /// Assemble from blocks: metric (10), connection (64), metric first
    /// derivatives (`dg[p][ρ]`) and connection first derivatives
    /// (`dgamma[k][ρ]`).
    pub fn from_parts(
        x: [f64; 4],
        g: &[f64; 10],
        gamma: &[f64; 64],
        dg: &[[f64; 4]; 10],
        dgamma: &[[f64; 4]; 64],
        ext: Option<EpExtension>,
    ) -> Result<Self> {
        let mut c = Vec::with_capacity(ep::DIM);
        c.extend_from_slice(&x);
        c.extend_from_slice(g);
        c.extend_from_slice(gamma);
        dg.iter().for_each(|r| c.extend_from_slice(r));
        dgamma.iter().for_each(|r| c.extend_from_slice(r));
        EpJetPoint::new(c, ext)
    }

    pub fn x(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.coords[i])
    }

    pub fn metric(&self) -> [[f64; 4]; 4] {
        expand_sym(&self.coords[ep::G..ep::GAMMA])
    }

    pub fn gamma(&self, la: usize, mu: usize, nu: usize) -> f64 {
        self.coords[ep::gamma(la, mu, nu)]
    }

    pub fn dgamma(&self, la: usize, mu: usize, nu: usize, rho: usize) -> f64 {
        self.coords[ep::dgamma(la, mu, nu, rho)]
    }

    pub fn dg(&self, a: usize, b: usize, rho: usize) -> f64 {
        self.coords[ep::dg(pair_index(a, b), rho)]
    }

    pub fn extension(&self) -> Option<&EpExtension> {
        self.ext.as_ref()
    }

    pub fn map_coords(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let coords = self.coords.iter().enumerate().map(|(i, &v)| f(i, v)).collect();
        EpJetPoint::new(coords, self.ext.clone())
    }

    pub fn with_extension(&self, ext: Option<EpExtension>) -> Result<Self> {
        EpJetPoint::new(self.coords.clone(), ext)
    }

    /// Tangent lift of the prolonged section (requires the extension).
    pub fn tangent_lift(&self, tau: usize) -> Result<Vec<f64>> {
        self.total_tangent(tau, 1)
    }
}

impl JetPoint for EpJetPoint {
    fn coords(&self) -> &[f64] {
        &self.coords
    }

    fn order_of(&self, id: usize) -> usize {
        ep::order_of(id)
    }

    fn total_tangent(&self, tau: usize, max_order: usize) -> Result<Vec<f64>> {
        if tau > 3 {
            return Err(Error::Usage(format!("direction {tau} out of range 0..3")));
        }
        let ext = match (max_order, &self.ext) {
            (0, _) => None,
            (_, Some(e)) => Some(e),
            (_, None) => {
                return Err(Error::Usage(
                    "total derivative of first-order coordinates needs the second-order extension".into(),
                ))
            }
        };
        let mut t = vec![0.0; ep::DIM];
        t[tau] = 1.0;
        for p in 0..10 {
            t[ep::g(p)] = self.coords[ep::dg(p, tau)];
        }
        for k in 0..64 {
            t[ep::GAMMA + k] = self.coords[ep::DGAMMA + 4 * k + tau];
        }
        if let Some(e) = ext {
            for p in 0..10 {
                for rho in 0..4 {
                    t[ep::dg(p, rho)] = e.d2g[10 * p + pair_index(rho, tau)];
                }
            }
            for k in 0..64 {
                for rho in 0..4 {
                    t[ep::DGAMMA + 4 * k + rho] = e.d2gamma[10 * k + pair_index(rho, tau)];
                }
            }
        }
        Ok(t)
    }
}

// ---------------------------------------------------------------------------
// prolongation

fn common_base(series: &[JetScalar], min_order: usize) -> Result<[f64; 4]> {
    let base = series.first().ok_or_else(|| Error::Usage("no series given".into()))?.base_point();
    for s in series {
        if s.base_point() != base {
            return Err(Error::Usage("series expanded at different base points".into()));
        }
        if s.order() < min_order {
            return Err(Error::Usage(format!(
                "series of truncation order {} cannot supply jets of order {min_order}",
                s.order()
            )));
        }
    }
    Ok(base)
}

fn deriv(s: &JetScalar, dirs: &[usize]) -> f64 {
    s.derivative(MultiIndex::from_dirs(dirs)).expect("order checked")
}

/// Prolong a metric given as 10 Taylor series (ordered components) to a
/// point of `J³π`; `order` 4 also fills the fourth-order block.
pub fn prolong(metric: &[JetScalar; 10], order: usize) -> Result<EhJetPoint> {
    if !(3..=4).contains(&order) {
        return Err(Error::Usage(format!("prolongation order must be 3 or 4, got {order}")));
    }
    let base = common_base(metric, order)?;
    let mut c = vec![0.0; eh::DIM];
    c[..4].copy_from_slice(&base);
    for (p, s) in metric.iter().enumerate() {
        c[eh::g(p)] = s.constant_term();
        for mu in 0..4 {
            c[eh::dg(p, mu)] = deriv(s, &[mu]);
        }
        for (q, pq) in PAIRS.iter().enumerate() {
            c[eh::D2G + 10 * p + q] = deriv(s, pq);
        }
        for (r, t) in TRIPLES.iter().enumerate() {
            c[eh::D3G + 20 * p + r] = deriv(s, t);
        }
    }
    let d4g = (order == 4).then(|| metric.iter().flat_map(|s| QUADS.iter().map(move |q| deriv(s, q))).collect());
    EhJetPoint::new(c, d4g)
}

/// Prolong a metric and a connection (64 series, index `16λ+4μ+ν`) to a
/// point of `J¹Π`. With truncation order ≥ 2 the second-order extension is
/// filled as well.
pub fn prolong_ep(metric: &[JetScalar; 10], connection: &[JetScalar]) -> Result<EpJetPoint> {
    if connection.len() != 64 {
        return Err(Error::Usage("a connection has 64 components".into()));
    }
    let all: Vec<JetScalar> = metric.iter().chain(connection).cloned().collect();
    let base = common_base(&all, 1)?;
    let with_ext = all.iter().all(|s| s.order() >= 2);
    let g: [f64; 10] = std::array::from_fn(|p| metric[p].constant_term());
    let gamma: [f64; 64] = std::array::from_fn(|k| connection[k].constant_term());
    let dg: [[f64; 4]; 10] = std::array::from_fn(|p| std::array::from_fn(|r| deriv(&metric[p], &[r])));
    let dgamma: [[f64; 4]; 64] = std::array::from_fn(|k| std::array::from_fn(|r| deriv(&connection[k], &[r])));
    let ext = with_ext.then(|| EpExtension {
        d2g: metric.iter().flat_map(|s| PAIRS.iter().map(move |q| deriv(s, q))).collect(),
        d2gamma: connection.iter().flat_map(|s| PAIRS.iter().map(move |q| deriv(s, q))).collect(),
    });
    EpJetPoint::from_parts(base, &g, &gamma, &dg, &dgamma, ext)
}

// ---------------------------------------------------------------------------
// fiber functions and their exact derivatives

/// A scalar function on a jet space, written once over any [`Scalar`] so it
/// can be evaluated on values, tangents or nested tangents.
pub trait FiberFunction {
    /// Highest jet order of the coordinates `eval` reads.
    fn order(&self) -> usize;

    fn eval<S: Scalar>(&self, coords: &[S]) -> S;
}

/// Seed `coords` with a tangent vector (missing trailing components are 0).
pub fn seed<S: Scalar>(coords: &[S], tangent: &[S]) -> Vec<Dual<S>> {
    coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let t = tangent.get(i).cloned().unwrap_or_else(|| c.zero_like());
            Dual::new(c.clone(), t)
        })
        .collect()
}

/// Exact directional derivative of `f` at `coords` along `tangent`, over any
/// scalar type (this is what makes derivatives nest).
pub fn directional_at<S: Scalar, F: FiberFunction + ?Sized>(f: &F, coords: &[S], tangent: &[S]) -> S {
    f.eval(&seed(coords, tangent)).eps
}

/// Exact partial derivative with respect to one coordinate, over any scalar.
pub fn partial_at<S: Scalar, F: FiberFunction + ?Sized>(f: &F, coords: &[S], id: usize) -> S {
    let seeded: Vec<Dual<S>> = coords
        .iter()
        .enumerate()
        .map(|(i, c)| if i == id { Dual::variable(c.clone()) } else { Dual::constant(c.clone()) })
        .collect();
    f.eval(&seeded).eps
}

/// `∂f/∂u` at a jet point, for a single ordered coordinate `u` (no
/// multiplicity folding).
pub fn fiber_partial<F: FiberFunction + ?Sized, P: JetPoint>(f: &F, coord: usize, p: &P) -> Result<f64> {
    let c = p.coords();
    if coord >= c.len() {
        return Err(Error::Usage(format!("coordinate id {coord} out of range 0..{}", c.len())));
    }
    if p.order_of(coord) > f.order() {
        return Ok(0.0);
    }
    Ok(partial_at(f, c, coord))
}

/// Exact derivative of `f` along an arbitrary tangent vector at `p`.
pub fn directional<F: FiberFunction + ?Sized, P: JetPoint>(f: &F, p: &P, tangent: &[f64]) -> f64 {
    directional_at(f, p.coords(), tangent)
}

/// The total derivative `D_τ f` at `p`: `∂f/∂x^τ + Σ_u (∂f/∂u)·u_{,τ}`,
/// evaluated as one exact directional derivative along the `D_τ` field.
pub fn total_derivative<F: FiberFunction + ?Sized, P: JetPoint>(f: &F, tau: usize, p: &P) -> Result<f64> {
    let t = p.total_tangent(tau, f.order())?;
    Ok(directional(f, p, &t))
}

/// The full differential `df` as a dense covector over all coordinates of
/// `p`'s space (components above `f.order()` are structurally zero).
pub fn gradient<F: FiberFunction + ?Sized, P: JetPoint>(f: &F, p: &P) -> Vec<f64> {
    let c = p.coords();
    (0..c.len()).map(|id| if p.order_of(id) > f.order() { 0.0 } else { partial_at(f, c, id) }).collect()
}

// ---------------------------------------------------------------------------
// tensor views over flat coordinates

/// Metric block as a symmetric matrix (`offset` = start of the 10 components).
pub fn metric_view<S: Scalar>(c: &[S], offset: usize) -> [[S; 4]; 4] {
    expand_sym(&c[offset..offset + 10])
}

/// First-derivative block `dg[μ][a][b] = ∂_μ g_{ab}` from the `p·4+μ` layout.
pub fn dmetric_view<S: Scalar>(c: &[S], offset: usize) -> [[[S; 4]; 4]; 4] {
    std::array::from_fn(|mu| {
        std::array::from_fn(|a| std::array::from_fn(|b| c[offset + 4 * pair_index(a, b) + mu].clone()))
    })
}

/// Second-derivative block `d2g[μ][ν][a][b]` from the EH `p·10+q` layout.
pub fn d2metric_view<S: Scalar>(c: &[S], offset: usize) -> [[[[S; 4]; 4]; 4]; 4] {
    std::array::from_fn(|mu| {
        std::array::from_fn(|nu| {
            std::array::from_fn(|a| {
                std::array::from_fn(|b| c[offset + 10 * pair_index(a, b) + pair_index(mu, nu)].clone())
            })
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_tables_have_stars_and_bars_sizes() {
        assert_eq!(PAIRS.len(), 10);
        assert_eq!(TRIPLES.len(), 20);
        assert_eq!(QUADS.len(), 35);
        for (k, &[a, b]) in PAIRS.iter().enumerate() {
            assert!(a <= b);
            assert_eq!(pair_index(a, b), k);
            assert_eq!(pair_index(b, a), k);
        }
        for (k, t) in TRIPLES.iter().enumerate() {
            assert_eq!(triple_index(t[2], t[0], t[1]), k);
        }
        assert_eq!(4 + 10 + 40 + 100 + 200, eh::DIM);
    }

    #[test]
    fn multiplicity_is_one_only_on_the_diagonal() {
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(multiplicity(a, b), if a == b { 1.0 } else { 2.0 });
            }
        }
    }

    #[test]
    fn expand_collapse_round_trip() {
        let v: Vec<f64> = (0..10).map(|i| i as f64 * 1.5 - 3.0).collect();
        let m = expand_sym(&v);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(m[a][b], m[b][a]);
            }
        }
        assert_eq!(collapse_sym(&m).to_vec(), v);
    }

    #[test]
    fn bundle_dimensions() {
        assert_eq!(eh::BUNDLE_DIM, 14);
        assert_eq!(ep::BUNDLE_DIM, 78);
        assert_eq!(ep::DIM, 374);
    }

    #[test]
    fn coordinate_names_and_orders() {
        assert_eq!(eh::name(eh::d2g(pair_index(0, 1), 3, 2)), "g_{01,23}");
        assert_eq!(eh::order_of(eh::d3g(0, 1, 2, 3)), 3);
        assert_eq!(ep::name(ep::dgamma(1, 2, 3, 0)), "Gamma^1_{23,0}");
        assert_eq!(ep::order_of(ep::gamma(3, 3, 3)), 0);
    }

    #[test]
    fn lorentzian_check() {
        let eta = [[-1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        assert!((check_lorentzian(&eta).unwrap() + 1.0).abs() < 1e-15);
        let mut riem = eta;
        riem[0][0] = 1.0;
        assert!(matches!(check_lorentzian(&riem), Err(Error::NotLorentzian(_))));
        let mut deg = eta;
        deg[0][0] = 0.0;
        assert!(matches!(check_lorentzian(&deg), Err(Error::DegenerateMetric { .. })));
    }

    struct Square(usize);
    impl FiberFunction for Square {
        fn order(&self) -> usize {
            0
        }
        fn eval<S: Scalar>(&self, c: &[S]) -> S {
            c[self.0].clone() * c[self.0].clone()
        }
    }

    struct Constant;
    impl FiberFunction for Constant {
        fn order(&self) -> usize {
            0
        }
        fn eval<S: Scalar>(&self, c: &[S]) -> S {
            c[0].lift(7.0)
        }
    }

    struct BaseCoord(usize);
    impl FiberFunction for BaseCoord {
        fn order(&self) -> usize {
            0
        }
        fn eval<S: Scalar>(&self, c: &[S]) -> S {
            c[self.0].clone()
        }
    }

    fn minkowski_point() -> EhJetPoint {
        let mut c = vec![0.0; eh::DIM];
        c[eh::g(0)] = -1.0;
        c[eh::g(4)] = 1.0;
        c[eh::g(7)] = 1.0;
        c[eh::g(9)] = 1.0;
        EhJetPoint::new(c, Some(vec![0.0; eh::D4G_LEN])).unwrap()
    }

    #[test]
    fn fiber_partial_examples() {
        // flipping g11 gives two timelike directions
        let p = minkowski_point().with_coord(eh::g(pair_index(1, 1)), -1.0).unwrap_err();
        assert!(matches!(p, Error::NotLorentzian(_)));
        let q = minkowski_point().with_coord(eh::g(pair_index(0, 1)), 0.5).unwrap();
        let id = eh::g(pair_index(0, 1));
        assert_eq!(fiber_partial(&Square(id), id, &q).unwrap(), 1.0);
        let mut c = q.coords().to_vec();
        c[eh::dg(0, 0)] = 3.0;
        let r = EhJetPoint::new(c, None).unwrap();
        // order-0 function never reads the first-order block
        assert_eq!(fiber_partial(&Square(eh::dg(0, 0)), eh::dg(0, 0), &r).unwrap(), 0.0);
        assert_eq!(fiber_partial(&Constant, eh::g(3), &r).unwrap(), 0.0);
        assert!(fiber_partial(&Constant, eh::DIM, &r).is_err());
    }

    #[test]
    fn total_derivative_of_base_and_metric_coordinates() {
        let mut c = minkowski_point().coords().to_vec();
        for (i, v) in c.iter_mut().enumerate().skip(eh::DG).take(40) {
            *v = 0.01 * i as f64;
        }
        let p = EhJetPoint::new(c, None).unwrap();
        for tau in 0..4 {
            for sigma in 0..4 {
                let d = total_derivative(&BaseCoord(eh::x(sigma)), tau, &p).unwrap();
                assert_eq!(d, if sigma == tau { 1.0 } else { 0.0 });
            }
            for q in 0..10 {
                let d = total_derivative(&BaseCoord(eh::g(q)), tau, &p).unwrap();
                assert_eq!(d, p.coords()[eh::dg(q, tau)]);
            }
        }
    }

    #[test]
    fn missing_blocks_are_usage_errors() {
        let p = minkowski_point().truncated();
        assert!(p.tangent_lift(0).is_err());
        assert!(p.total_tangent(0, 2).is_ok());
        assert!(p.total_tangent(4, 0).is_err());
    }
}
