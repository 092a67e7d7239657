//! Wedge monomials of covectors on a jet space and their contraction with
//! four tangent vectors.
//!
//! A [`FormTerm`] is `κ · a⁰∧a¹∧a²∧a³∧a⁴`. Contracting with `v1..v4` leaves
//! the covector `κ Σ_i (−1)^i M_i a^i`, where `M_i` is the 4×4 minor of the
//! pairing matrix `[a^j(v_k)]` with row `i` removed. Reversing the order of
//! the four insertions is an even permutation, so `i(v1)…i(v4)Ω` and
//! `Ω(v1,…,v4,·)` agree.
//!
//! Factors that are differentials of model functions can be kept
//! *deferred*: they are referred to by a key, their pairings with the
//! vectors are supplied by the caller, and when they end up in the free slot
//! the result records a weight for the key instead of a dense row. The model
//! then resolves all weighted keys at once with a single gradient.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::det4;

#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    /// The coordinate differential `du` of coordinate id `u`.
    Coord(usize),
    /// A covector given by its components over all coordinates.
    Dense(Arc<[f64]>),
    /// The differential of the model function with this key.
    Deferred(usize),
}

/// `coefficient · f0∧f1∧f2∧f3∧f4`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormTerm {
    pub coefficient: f64,
    pub factors: [Factor; 5],
}

impl FormTerm {
    pub fn new(coefficient: f64, factors: [Factor; 5]) -> Self {
        FormTerm { coefficient, factors }
    }

    /// The same form written with factors `i` and `j` exchanged (so the
    /// coefficient changes sign).
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut t = self.clone();
        if i != j {
            t.factors.swap(i, j);
            t.coefficient = -t.coefficient;
        }
        t
    }
}

/// `d⁴x = dx⁰∧dx¹∧dx²∧dx³` (base coordinates have ids 0..3 in both jet
/// spaces).
pub fn d4x() -> [Factor; 4] {
    [Factor::Coord(0), Factor::Coord(1), Factor::Coord(2), Factor::Coord(3)]
}

/// `d³x_μ = i(∂/∂x^μ)d⁴x` as a sign and three coordinate differentials.
pub fn d3x(mu: usize) -> (f64, [Factor; 3]) {
    let mut rest = (0..4).filter(|&i| i != mu).map(Factor::Coord);
    let f = [rest.next().unwrap(), rest.next().unwrap(), rest.next().unwrap()];
    (if mu.is_multiple_of(2) { 1.0 } else { -1.0 }, f)
}

/// Result of a contraction: dense components plus weights of deferred
/// differentials.
#[derive(Clone, Debug, PartialEq)]
pub struct CotangentVector {
    pub dense: Vec<f64>,
    pub deferred: Vec<f64>,
}

impl CotangentVector {
    pub fn zero(dim: usize, deferred_keys: usize) -> Self {
        CotangentVector { dense: vec![0.0; dim], deferred: vec![0.0; deferred_keys] }
    }

    pub fn max_norm(&self) -> f64 {
        self.dense.iter().chain(&self.deferred).fold(0.0, |m, v| m.max(v.abs()))
    }

    fn accumulate(&mut self, f: &Factor, w: f64) {
        if w == 0.0 {
            return;
        }
        match f {
            Factor::Coord(id) => self.dense[*id] += w,
            Factor::Dense(c) => self.dense.iter_mut().zip(c.iter()).for_each(|(d, c)| *d += w * c),
            Factor::Deferred(k) => self.deferred[*k] += w,
        }
    }
}

/// Pairings of deferred factors with the contracted vectors:
/// `deferred(key, k)` is `⟨dF_key, v_k⟩`.
pub type DeferredPairing<'a> = &'a dyn Fn(usize, usize) -> f64;

fn pair(f: &Factor, v: &[f64], k: usize, deferred: DeferredPairing) -> f64 {
    match f {
        Factor::Coord(id) => v[*id],
        Factor::Dense(c) => c.iter().zip(v).map(|(a, b)| a * b).sum(),
        Factor::Deferred(key) => deferred(*key, k),
    }
}

fn check_dims(t: &FormTerm, vs: &[&[f64]; 4], out: &CotangentVector) -> Result<()> {
    let dim = out.dense.len();
    if vs.iter().any(|v| v.len() != dim) {
        return Err(Error::Usage(format!("tangent vectors must have {dim} components")));
    }
    for f in &t.factors {
        let ok = match f {
            Factor::Coord(id) => *id < dim,
            Factor::Dense(c) => c.len() == dim,
            Factor::Deferred(k) => *k < out.deferred.len(),
        };
        if !ok {
            return Err(Error::Usage("form factor does not fit the ambient space".into()));
        }
    }
    Ok(())
}

/// Add `t(v1, v2, v3, v4, ·)` to `out`.
pub fn contract_term_into(
    t: &FormTerm,
    vs: &[&[f64]; 4],
    deferred: DeferredPairing,
    out: &mut CotangentVector,
) -> Result<()> {
    check_dims(t, vs, out)?;
    let m: [[f64; 4]; 5] = std::array::from_fn(|i| std::array::from_fn(|k| pair(&t.factors[i], vs[k], k, deferred)));
    for i in 0..5 {
        let minor: [[f64; 4]; 4] = std::array::from_fn(|r| m[if r < i { r } else { r + 1 }]);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        out.accumulate(&t.factors[i], t.coefficient * sign * det4(&minor));
    }
    Ok(())
}

/// `t(v1, v2, v3, v4, ·)` for a term without deferred factors.
pub fn contract_term(t: &FormTerm, vs: &[&[f64]; 4]) -> Result<CotangentVector> {
    let dim = vs[0].len();
    let mut out = CotangentVector::zero(dim, 0);
    let none = |_: usize, _: usize| -> f64 { unreachable!("no deferred factors") };
    if t.factors.iter().any(|f| matches!(f, Factor::Deferred(_))) {
        return Err(Error::Usage("term has deferred factors; use contract_term_into".into()));
    }
    contract_term_into(t, vs, &none, &mut out)?;
    Ok(out)
}

/// Contraction of a sum of terms.
pub fn contract(
    terms: &[FormTerm],
    vs: &[&[f64]; 4],
    deferred: DeferredPairing,
    dim: usize,
    deferred_keys: usize,
) -> Result<CotangentVector> {
    let mut out = CotangentVector::zero(dim, deferred_keys);
    for t in terms {
        contract_term_into(t, vs, deferred, &mut out)?;
    }
    Ok(out)
}
