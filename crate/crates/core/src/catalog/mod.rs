//! Exact spacetimes: built-in metrics and user metric files, evaluated as
//! Taylor series around sample points.

mod expr;
mod file;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

pub use expr::{parse_expression, BinOp, EvalValue, Expr, Func};
pub use file::parse_metric_file;

use crate::error::{Error, Result};
use crate::fieldspace::{check_lorentzian, expand_sym, pair_index, prolong, prolong_ep, EhJetPoint, EpJetPoint};
use crate::geometry;
use crate::taylor::{JetScalar, DEFAULT_ORDER};

/// Whether a metric is expected to solve the vacuum equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vacuum {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Vacuum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Vacuum::Yes => "yes",
            Vacuum::No => "no",
            Vacuum::Unknown => "unknown",
        })
    }
}

impl std::str::FromStr for Vacuum {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yes" | "true" => Ok(Vacuum::Yes),
            "no" | "false" => Ok(Vacuum::No),
            "unknown" => Ok(Vacuum::Unknown),
            _ => Err(Error::Config(format!("vacuum must be yes, no or unknown, got `{s}`"))),
        }
    }
}

/// A metric given by component expressions, with its sample box.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    pub name: String,
    /// Ordered components `g_{αβ}`, `α≤β`.
    pub components: [Expr; 10],
    pub params: BTreeMap<String, f64>,
    pub domain: [(f64, f64); 4],
    pub vacuum: Vacuum,
    /// Connection components overriding the Levi-Civita default, keyed by
    /// the flat index `16λ+4μ+ν`.
    pub connection: BTreeMap<usize, Expr>,
}

impl MetricSpec {
    /// Build from component texts (`(α, β, text)`, unlisted components 0).
    pub fn from_texts(
        name: &str,
        components: &[(usize, usize, &str)],
        params: &[(&str, f64)],
        domain: [(f64, f64); 4],
        vacuum: Vacuum,
    ) -> Result<Self> {
        let names: Vec<&str> = params.iter().map(|p| p.0).collect();
        let mut comps: [Expr; 10] = std::array::from_fn(|_| Expr::Num(0.0));
        for &(a, b, text) in components {
            comps[pair_index(a, b)] = parse_expression(text, &names)?;
        }
        let spec = MetricSpec {
            name: name.to_string(),
            components: comps,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            domain,
            vacuum,
            connection: BTreeMap::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// True when the connection is the Levi-Civita one of the metric.
    pub fn connection_is_lc(&self) -> bool {
        self.connection.is_empty()
    }

    fn check_in_domain(&self, x: [f64; 4]) -> Result<()> {
        for (i, (&xi, &(lo, hi))) in x.iter().zip(&self.domain).enumerate() {
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            if !(xi >= lo - slack && xi <= hi + slack) {
                return Err(Error::Domain(format!("x{i} = {xi} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Metric value at `x`.
    pub fn metric_at(&self, x: [f64; 4]) -> Result<[[f64; 4]; 4]> {
        let mut v = [0.0; 10];
        for (k, e) in self.components.iter().enumerate() {
            v[k] = e.eval(&x, &self.params).map_err(numeric_to_domain)?;
        }
        Ok(expand_sym(&v))
    }

    /// Spot-check nondegeneracy and signature on a 3⁴ grid over the box.
    pub fn validate(&self) -> Result<()> {
        for (i, &(lo, hi)) in self.domain.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::Config(format!("empty or invalid domain for x{i}: {lo}..{hi}")));
            }
        }
        let mut names = Vec::new();
        self.components.iter().chain(self.connection.values()).for_each(|e| e.params(&mut names));
        if let Some(p) = names.iter().find(|p| !self.params.contains_key(*p)) {
            return Err(Error::Config(format!("parameter `{p}` has no value")));
        }
        let at = |i: usize, k: usize| {
            let (lo, hi) = self.domain[i];
            lo + (hi - lo) * k as f64 / 2.0
        };
        for n in 0..81 {
            let x = [at(0, n % 3), at(1, (n / 3) % 3), at(2, (n / 9) % 3), at(3, n / 27)];
            let g = self.metric_at(x).map_err(|e| Error::Config(format!("{}: at {x:?}: {e}", self.name)))?;
            check_lorentzian(&g).map_err(|e| Error::Config(format!("{}: at {x:?}: {e}", self.name)))?;
        }
        Ok(())
    }

    /// The 10 metric components as Taylor series of truncation `order`
    /// centred at `x`.
    pub fn metric_jet_at(&self, x: [f64; 4], order: usize) -> Result<[JetScalar; 10]> {
        self.check_in_domain(x)?;
        let vars = coordinate_series(x, order)?;
        let mut out = Vec::with_capacity(10);
        for e in &self.components {
            out.push(e.eval(&vars, &self.params).map_err(numeric_to_domain)?);
        }
        Ok(out.try_into().expect("10 components"))
    }

    /// Connection series of truncation `order`: Levi-Civita of the metric,
    /// with any `[connection]` overrides applied. Index `16λ+4μ+ν`.
    pub fn connection_jet_at(&self, x: [f64; 4], order: usize) -> Result<Vec<JetScalar>> {
        let metric = self.metric_jet_at(x, order + 1)?;
        let mut gamma = levi_civita_series(&metric)?;
        if !self.connection.is_empty() {
            let vars = coordinate_series(x, order)?;
            for (&k, e) in &self.connection {
                gamma[k] = e.eval(&vars, &self.params).map_err(numeric_to_domain)?;
            }
        }
        Ok(gamma)
    }

    /// Prolongation of the metric to `J³π` with the fourth-order block.
    pub fn eh_point_at(&self, x: [f64; 4]) -> Result<EhJetPoint> {
        prolong(&self.metric_jet_at(x, DEFAULT_ORDER)?, 4)
    }

    /// First prolongation of `(g, Γ)` to `J¹Π`, with second-order data for
    /// tangent lifts.
    pub fn ep_point_at(&self, x: [f64; 4]) -> Result<EpJetPoint> {
        let metric = self.metric_jet_at(x, 2)?;
        let gamma = self.connection_jet_at(x, 2)?;
        prolong_ep(&metric, &gamma)
    }
}

fn numeric_to_domain(e: Error) -> Error {
    match e {
        Error::SingularPoint(m) => Error::Domain(m),
        other => other,
    }
}

/// The coordinate functions `x^μ` as series at `x`.
pub fn coordinate_series(x: [f64; 4], order: usize) -> Result<[JetScalar; 4]> {
    let v: Vec<JetScalar> = (0..4).map(|d| JetScalar::variable(d, order, x)).collect::<Result<_>>()?;
    Ok(v.try_into().expect("4 coordinates"))
}

/// Levi-Civita connection of a metric series; the result has truncation
/// order one less than the input.
pub fn levi_civita_series(metric: &[JetScalar; 10]) -> Result<Vec<JetScalar>> {
    let order = metric[0].order();
    if order == 0 {
        return Err(Error::Usage("connection needs a metric series of order ≥ 1".into()));
    }
    let g: Vec<JetScalar> = metric.iter().map(|s| s.truncate(order - 1)).collect::<Result<_>>()?;
    let g = expand_sym(&g);
    let dg_flat: Vec<[JetScalar; 10]> = (0..4)
        .map(|mu| {
            let v: Vec<JetScalar> = metric.iter().map(|s| s.partial(mu)).collect::<Result<_>>()?;
            Ok(v.try_into().expect("10"))
        })
        .collect::<Result<_>>()?;
    let dg: geometry::Conn<JetScalar> = std::array::from_fn(|mu| expand_sym(&dg_flat[mu]));
    let (ginv, _) = geometry::inverse_and_density(&g)?;
    let gamma = geometry::christoffel_lc(&ginv, &dg);
    Ok(gamma.into_iter().flatten().flatten().collect())
}

/// Names of the built-in metrics.
pub const BUILTIN_NAMES: [&str; 7] =
    ["minkowski", "spherical-flat", "schwarzschild", "kasner", "ppwave", "flrw", "desitter"];

/// One-line description for `catalog list`.
pub fn builtin_summary(name: &str) -> Option<&'static str> {
    Some(match name {
        "minkowski" => "flat space, Cartesian chart",
        "spherical-flat" => "flat space, spherical chart",
        "schwarzschild" => "exterior Schwarzschild, parameter m (default 1)",
        "kasner" => "Kasner cosmology, parameters p1 p2 p3 (default 2/3 2/3 -1/3)",
        "ppwave" => "plane-fronted wave with profile x2^2 - x3^2",
        "flrw" => "spatially flat FLRW, a(t) = 1 + 0.1 t (non-vacuum control)",
        "desitter" => "de Sitter flat slicing a(t) = exp(H t), parameter H (default 0.5)",
        _ => return None,
    })
}

/// Built-in metric with optional parameter overrides.
pub fn builtin(name: &str, overrides: &[(String, f64)]) -> Result<MetricSpec> {
    let mut params: BTreeMap<&str, f64> = match name {
        "schwarzschild" => [("m", 1.0)].into(),
        "kasner" => [("p1", 2.0 / 3.0), ("p2", 2.0 / 3.0), ("p3", -1.0 / 3.0)].into(),
        "flrw" => [("h", 0.1)].into(),
        "desitter" => [("H", 0.5)].into(),
        _ if BUILTIN_NAMES.contains(&name) => BTreeMap::new(),
        _ => return Err(Error::Config(format!("unknown metric `{name}`"))),
    };
    for (k, v) in overrides {
        match params.get_mut(k.as_str()) {
            Some(slot) => *slot = *v,
            None => return Err(Error::Config(format!("metric `{name}` has no parameter `{k}`"))),
        }
    }
    let p: Vec<(&str, f64)> = params.iter().map(|(k, v)| (*k, *v)).collect();
    let unit = [(0.0, 1.0); 4];
    match name {
        "minkowski" => {
            MetricSpec::from_texts(name, &[(0, 0, "-1"), (1, 1, "1"), (2, 2, "1"), (3, 3, "1")], &p, unit, Vacuum::Yes)
        }
        "spherical-flat" => MetricSpec::from_texts(
            name,
            &[(0, 0, "-1"), (1, 1, "1"), (2, 2, "x1^2"), (3, 3, "x1^2*sin(x2)^2")],
            &p,
            [(0.0, 1.0), (1.0, 5.0), (0.3, 2.8), (0.0, 6.0)],
            Vacuum::Yes,
        ),
        "schwarzschild" => {
            let m = params["m"];
            if m <= 0.0 {
                return Err(Error::Config("schwarzschild needs m > 0".into()));
            }
            MetricSpec::from_texts(
                name,
                &[(0, 0, "-(1 - 2*m/x1)"), (1, 1, "1/(1 - 2*m/x1)"), (2, 2, "x1^2"), (3, 3, "x1^2*sin(x2)^2")],
                &p,
                [(0.0, 1.0), (3.0 * m, 10.0 * m), (0.3, 2.8), (0.0, 6.0)],
                Vacuum::Yes,
            )
        }
        "kasner" => {
            let (p1, p2, p3) = (params["p1"], params["p2"], params["p3"]);
            let vacuum = (p1 + p2 + p3 - 1.0).abs() < 1e-12 && (p1 * p1 + p2 * p2 + p3 * p3 - 1.0).abs() < 1e-12;
            MetricSpec::from_texts(
                name,
                &[(0, 0, "-1"), (1, 1, "exp(2*p1*ln(x0))"), (2, 2, "exp(2*p2*ln(x0))"), (3, 3, "exp(2*p3*ln(x0))")],
                &p,
                [(1.0, 3.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
                if vacuum { Vacuum::Yes } else { Vacuum::No },
            )
        }
        "ppwave" => MetricSpec::from_texts(
            name,
            &[(0, 0, "x2^2 - x3^2"), (0, 1, "1"), (2, 2, "1"), (3, 3, "1")],
            &p,
            [(0.0, 1.0), (0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
            Vacuum::Yes,
        ),
        "flrw" => MetricSpec::from_texts(
            name,
            &[(0, 0, "-1"), (1, 1, "(1 + h*x0)^2"), (2, 2, "(1 + h*x0)^2"), (3, 3, "(1 + h*x0)^2")],
            &p,
            unit,
            Vacuum::No,
        ),
        "desitter" => MetricSpec::from_texts(
            name,
            &[(0, 0, "-1"), (1, 1, "exp(2*H*x0)"), (2, 2, "exp(2*H*x0)"), (3, 3, "exp(2*H*x0)")],
            &p,
            unit,
            Vacuum::No,
        ),
        _ => unreachable!("checked above"),
    }
}

/// Resolve a metric argument: a file path if one exists, otherwise a
/// builtin name with optional `name:key=value,...` overrides.
pub fn resolve(arg: &str) -> Result<MetricSpec> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{arg}: {e}")))?;
        return parse_metric_file(&text);
    }
    let (name, rest) = arg.split_once(':').unwrap_or((arg, ""));
    let mut overrides = Vec::new();
    for kv in rest.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("parameter `{k}` is not a number: `{v}`")))?;
        overrides.push((k.trim().to_string(), v));
    }
    builtin(name, &overrides)
}
