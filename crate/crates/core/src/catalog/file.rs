//! Text format for user metrics.
//!
//! ```text
//! # comment
//! [metric]
//! name = schwarzschild-file
//! vacuum = yes
//! g 0 0 = -(1 - 2*m/x1)
//! g 1 1 = 1/(1 - 2*m/x1)
//! [params]
//! m = 1
//! [domain]
//! x1 = 3..10
//! [connection]
//! Gamma 1 0 0 = 0
//! ```
//!
//! Omitted components are 0, omitted domain intervals are `0..1`. Sections
//! may appear in any order.

use std::collections::BTreeMap;

use super::{parse_expression, Expr, MetricSpec, Vacuum};
use crate::error::{Error, Result};
use crate::fieldspace::{ep, pair_index};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Metric,
    Params,
    Domain,
    Connection,
}

struct Line<'a> {
    number: usize,
    section: Section,
    key: &'a str,
    value: &'a str,
}

fn at(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {e}"))
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(i) if i < 4 => Ok(i),
        _ => Err(at(line, format!("index `{tok}` is not in 0..3"))),
    }
}

fn parse_real(v: &str, line: usize) -> Result<f64> {
    v.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| at(line, format!("`{v}` is not a finite number")))
}

/// Parse a metric definition file.
pub fn parse_metric_file(text: &str) -> Result<MetricSpec> {
    let mut section = Section::None;
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            section = match content {
                "[metric]" => Section::Metric,
                "[params]" => Section::Params,
                "[domain]" => Section::Domain,
                "[connection]" => Section::Connection,
                _ => return Err(at(number, format!("unknown section `{content}`"))),
            };
            continue;
        }
        if section == Section::None {
            return Err(at(number, "content before the first section"));
        }
        let (key, value) = content.split_once('=').ok_or_else(|| at(number, "expected `key = value`"))?;
        lines.push(Line { number, section, key: key.trim(), value: value.trim() });
    }

    let mut params = BTreeMap::new();
    for l in lines.iter().filter(|l| l.section == Section::Params) {
        let valid = l.key.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && l.key.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !valid || matches!(l.key, "x0" | "x1" | "x2" | "x3" | "pi" | "sin" | "cos" | "exp" | "sqrt" | "ln") {
            return Err(at(l.number, format!("`{}` cannot be a parameter name", l.key)));
        }
        if params.insert(l.key.to_string(), parse_real(l.value, l.number)?).is_some() {
            return Err(at(l.number, format!("parameter `{}` given twice", l.key)));
        }
    }
    let names: Vec<&str> = params.keys().map(String::as_str).collect();
    let expr = |l: &Line| -> Result<Expr> { parse_expression(l.value, &names).map_err(|e| at(l.number, e)) };

    let mut name = None;
    let mut vacuum = Vacuum::Unknown;
    let mut components: [Option<Expr>; 10] = Default::default();
    let mut domain = [(0.0, 1.0); 4];
    let mut domain_seen = [false; 4];
    let mut connection = BTreeMap::new();
    for l in &lines {
        let toks: Vec<&str> = l.key.split_whitespace().collect();
        match l.section {
            Section::Metric => match toks.as_slice() {
                ["name"] => name = Some(l.value.to_string()),
                ["vacuum"] => vacuum = l.value.parse().map_err(|e| at(l.number, e))?,
                ["g", a, b] => {
                    let k = pair_index(parse_index(a, l.number)?, parse_index(b, l.number)?);
                    if components[k].replace(expr(l)?).is_some() {
                        return Err(at(l.number, format!("component g {a} {b} given twice")));
                    }
                }
                _ => return Err(at(l.number, format!("unknown metric entry `{}`", l.key))),
            },
            Section::Domain => {
                let i = match toks.as_slice() {
                    [v] if v.len() == 2 && v.starts_with('x') => parse_index(&v[1..], l.number)?,
                    _ => return Err(at(l.number, format!("unknown domain entry `{}`", l.key))),
                };
                let (lo, hi) = l.value.split_once("..").ok_or_else(|| at(l.number, "expected `lo..hi`"))?;
                let (lo, hi) = (parse_real(lo.trim(), l.number)?, parse_real(hi.trim(), l.number)?);
                if lo > hi {
                    return Err(at(l.number, format!("empty interval {lo}..{hi}")));
                }
                if std::mem::replace(&mut domain_seen[i], true) {
                    return Err(at(l.number, format!("domain of x{i} given twice")));
                }
                domain[i] = (lo, hi);
            }
            Section::Connection => match toks.as_slice() {
                ["Gamma", la, mu, nu] => {
                    let k =
                        ep::conn(parse_index(la, l.number)?, parse_index(mu, l.number)?, parse_index(nu, l.number)?);
                    if connection.insert(k, expr(l)?).is_some() {
                        return Err(at(l.number, format!("component Gamma {la} {mu} {nu} given twice")));
                    }
                }
                _ => return Err(at(l.number, format!("unknown connection entry `{}`", l.key))),
            },
            Section::Params | Section::None => {}
        }
    }
    let spec = MetricSpec {
        name: name.ok_or_else(|| Error::Config("[metric] section needs a `name`".into()))?,
        components: components.map(|c| c.unwrap_or(Expr::Num(0.0))),
        params,
        domain,
        vacuum,
        connection,
    };
    spec.validate()?;
    Ok(spec)
}
