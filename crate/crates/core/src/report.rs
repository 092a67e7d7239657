//! Batch runner: samples points of a metric, evaluates every check family of
//! a model and aggregates the residuals into a report.
//!
//! Sampling is serial from one seeded stream, point evaluation runs on a
//! rayon pool, and aggregation walks the points in sampling order, so the
//! report does not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::catalog::MetricSpec;
use crate::eh;
use crate::ep;
use crate::error::{Error, Result};
use crate::fieldspace::prolong;
use crate::taylor::DEFAULT_ORDER;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Randomization trials per point in the projectability families.
const PROJECTABILITY_TRIALS: usize = 3;
/// A control perturbation smaller than this counts as "did not change".
const CONTROL_FLOOR: f64 = 1e-12;
/// Fraction of sample points that may be skipped as singular.
const MAX_SKIPPED: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Eh,
    Ep,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Eh => "eh",
            Model::Ep => "ep",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eh" => Ok(Model::Eh),
            "ep" => Ok(Model::Ep),
            _ => Err(Error::Usage(format!("unknown model `{s}` (expected eh or ep)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Usage(format!("unknown format `{s}` (expected json or csv)"))),
        }
    }
}

/// How a family's residual is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// `|a − b| / max(1, |a|, |b|)` between two routes to the same value.
    Relative,
    /// Plain magnitude of a quantity that should vanish.
    Absolute,
}

impl Measure {
    fn as_str(self) -> &'static str {
        match self {
            Measure::Relative => "relative",
            Measure::Absolute => "absolute",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Family {
    pub name: &'static str,
    pub measure: Measure,
    pub default_tol: f64,
}

const IDENTITY: f64 = 1e-10;
const VACUUM: f64 = 1e-8;

const fn fam(name: &'static str, measure: Measure, default_tol: f64) -> Family {
    Family { name, measure, default_tol }
}

pub const EH_FAMILIES: [Family; 7] = [
    fam("holonomy", Measure::Absolute, IDENTITY),
    fam("momenta-identity", Measure::Relative, IDENTITY),
    fam("hamiltonian-dual-form", Measure::Relative, IDENTITY),
    fam("einstein-constraint", Measure::Absolute, VACUUM),
    fam("einstein-constraint-derivative", Measure::Absolute, VACUUM),
    fam("projectability", Measure::Relative, IDENTITY),
    fam("field-equation", Measure::Absolute, VACUUM),
];

pub const EP_FAMILIES: [Family; 9] = [
    fam("ep-momenta-identity", Measure::Relative, IDENTITY),
    fam("ep-constraint-c0", Measure::Absolute, VACUUM),
    fam("premetricity", Measure::Absolute, VACUUM),
    fam("torsion", Measure::Absolute, VACUUM),
    fam("torsion-derivative", Measure::Absolute, VACUUM),
    fam("integrability", Measure::Absolute, VACUUM),
    fam("ep-projectability", Measure::Relative, IDENTITY),
    fam("eh-equivalence", Measure::Relative, IDENTITY),
    fam("ep-field-equation", Measure::Absolute, VACUUM),
];

/// The families a model runs on a given metric. `eh-equivalence` needs the
/// Levi-Civita connection.
pub fn families(model: Model, spec: &MetricSpec) -> Vec<Family> {
    match model {
        Model::Eh => EH_FAMILIES.to_vec(),
        Model::Ep => {
            EP_FAMILIES.iter().filter(|f| f.name != "eh-equivalence" || spec.connection_is_lc()).copied().collect()
        }
    }
}

fn known_family(name: &str) -> bool {
    EH_FAMILIES.iter().chain(&EP_FAMILIES).any(|f| f.name == name)
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub model: Model,
    pub metric: MetricSpec,
    /// The metric argument as given (echoed in the report).
    pub metric_source: String,
    pub points: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    /// Worker count; `None` uses `MSGR_THREADS` or rayon's default.
    pub threads: Option<usize>,
}

impl CheckConfig {
    pub fn new(model: Model, metric: MetricSpec, metric_source: &str) -> Self {
        CheckConfig {
            model,
            metric,
            metric_source: metric_source.to_string(),
            points: 20,
            seed: 0,
            tolerances: BTreeMap::new(),
            threads: None,
        }
    }

    /// Parse and apply a `family=value` override.
    pub fn set_tolerance(&mut self, spec: &str) -> Result<()> {
        let (name, value) =
            spec.split_once('=').ok_or_else(|| Error::Usage(format!("expected family=value, got `{spec}`")))?;
        let name = name.trim();
        if !known_family(name) {
            return Err(Error::Usage(format!("unknown check family `{name}`")));
        }
        let v: f64 =
            value.trim().parse().map_err(|_| Error::Usage(format!("tolerance for `{name}` is not a number")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Usage(format!("tolerance for `{name}` must be positive")));
        }
        self.tolerances.insert(name.to_string(), v);
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::Usage("--points must be at least 1".into()));
        }
        if let Some(name) = self.tolerances.keys().find(|k| !known_family(k)) {
            return Err(Error::Usage(format!("unknown check family `{name}`")));
        }
        if let Some((name, _)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Usage(format!("tolerance for `{name}` must be positive")));
        }
        if self.threads == Some(0) {
            return Err(Error::Usage("thread count must be at least 1".into()));
        }
        Ok(())
    }

    fn tolerance(&self, f: &Family) -> f64 {
        self.tolerances.get(f.name).copied().unwrap_or(f.default_tol)
    }
}

/// Worker count from `MSGR_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("MSGR_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("MSGR_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyRecord {
    pub family: String,
    pub measure: Measure,
    pub points: usize,
    pub max_resid: f64,
    pub mean_resid: f64,
    pub tol: f64,
    pub pass: bool,
    pub worst_point: Option<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintReport {
    pub model: Model,
    pub metric: String,
    pub metric_source: String,
    pub seed: u64,
    pub points_requested: usize,
    pub points_skipped: usize,
    pub families: Vec<FamilyRecord>,
    pub pass: bool,
}

impl ConstraintReport {
    pub fn family(&self, name: &str) -> Option<&FamilyRecord> {
        self.families.iter().find(|f| f.family == name)
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "pass"
        } else {
            "fail"
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

fn control_gate(invariant: f64, control: f64) -> f64 {
    if control > CONTROL_FLOOR {
        invariant
    } else {
        f64::INFINITY
    }
}

fn eval_eh(spec: &MetricSpec, x: [f64; 4], seed: u64) -> Result<Vec<f64>> {
    let series = spec.metric_jet_at(x, DEFAULT_ORDER)?;
    let p = prolong(&series, 4)?;
    let holonomy = eh::holonomy_residuals(&p, &series)?.max_abs();
    let m = eh::momenta_and_hamiltonian(&p)?;
    let momenta =
        m.l2_ad.iter().flatten().zip(m.l2_closed.iter().flatten()).fold(0.0f64, |acc, (a, b)| acc.max(rel(*a, *b)));
    let dual = rel(m.h_sum, eh::hamiltonian_index_form(&p)?);
    let l = max_abs(&eh::constraint_einstein(&p));
    let dl = max_abs(eh::constraint_einstein_derivative(&p)?.iter().flatten());
    let proj = eh::projectability_check(&p, PROJECTABILITY_TRIALS, seed)?;
    let proj = control_gate(proj.max_invariant(), proj.lagrangian);
    let fe = eh::verify_field_equation(&p)?;
    Ok(vec![holonomy, momenta, dual, l, dl, proj, fe])
}

fn eval_ep(spec: &MetricSpec, x: [f64; 4], seed: u64) -> Result<Vec<f64>> {
    let p = spec.ep_point_at(x)?;
    let m = ep::momenta_ep(&p)?;
    let momenta = m.lmom.iter().zip(&m.lmom_closed).fold(0.0f64, |acc, (a, b)| acc.max(rel(*a, *b)));
    let v = ep::constraints_ep(&p);
    let proj = ep::projectability_check_ep(&p, PROJECTABILITY_TRIALS, seed)?;
    let proj = control_gate(proj.max_invariant(), proj.lagrangian);
    let equivalence = if spec.connection_is_lc() {
        rel(ep::lagrangian_ep(&p), eh::lagrangian_eh(&spec.eh_point_at(x)?))
    } else {
        f64::NAN
    };
    let fe = ep::verify_field_equation_ep(&p)?;
    Ok(vec![
        momenta,
        max_abs(&v.c0),
        max_abs(v.premetric.iter().flatten()),
        max_abs(&v.torsion),
        max_abs(v.torsion_deriv.iter().flatten()),
        max_abs(v.integrability.iter().flatten()),
        proj,
        equivalence,
        fe,
    ])
}

/// Sample, evaluate and aggregate.
pub fn run_check(cfg: &CheckConfig) -> Result<ConstraintReport> {
    cfg.validate()?;
    let spec = &cfg.metric;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<([f64; 4], u64)> = (0..cfg.points)
        .map(|_| {
            let x = std::array::from_fn(|i| {
                let (lo, hi) = spec.domain[i];
                if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..=hi)
                }
            });
            (x, rng.gen())
        })
        .collect();

    let model = cfg.model;
    let evaluate = |&(x, seed): &([f64; 4], u64)| -> Result<Option<Vec<f64>>> {
        let r = match model {
            Model::Eh => eval_eh(spec, x, seed),
            Model::Ep => eval_ep(spec, x, seed),
        };
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.is_numeric() => Ok(None),
            Err(e) => Err(e),
        }
    };
    let threads = match cfg.threads {
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Option<Vec<f64>>>> = pool.install(|| samples.par_iter().map(evaluate).collect());
    let results: Vec<Option<Vec<f64>>> = results.into_iter().collect::<Result<_>>()?;

    let skipped = results.iter().filter(|r| r.is_none()).count();
    if skipped as f64 > MAX_SKIPPED * cfg.points as f64 {
        return Err(Error::Domain(format!("{skipped} of {} sample points were singular", cfg.points)));
    }

    let all = match model {
        Model::Eh => &EH_FAMILIES[..],
        Model::Ep => &EP_FAMILIES[..],
    };
    let wanted = families(model, spec);
    let mut records = Vec::new();
    for (k, f) in all.iter().enumerate() {
        if !wanted.iter().any(|w| w.name == f.name) {
            continue;
        }
        let mut points = 0;
        let mut max = 0.0f64;
        let mut sum = 0.0;
        let mut worst = None;
        for ((x, _), r) in samples.iter().zip(&results) {
            let Some(r) = r else { continue };
            let v = r[k];
            points += 1;
            sum += v;
            if worst.is_none() || v > max || (v.is_nan() && !max.is_nan()) {
                max = v;
                worst = Some(*x);
            }
        }
        let tol = cfg.tolerance(f);
        let mean = if points > 0 { sum / points as f64 } else { f64::NAN };
        records.push(FamilyRecord {
            family: f.name.to_string(),
            measure: f.measure,
            points,
            max_resid: max,
            mean_resid: mean,
            tol,
            pass: points > 0 && max <= tol,
            worst_point: worst,
        });
    }
    let pass = records.iter().all(|r| r.pass);
    Ok(ConstraintReport {
        model,
        metric: spec.name.clone(),
        metric_source: cfg.metric_source.clone(),
        seed: cfg.seed,
        points_requested: cfg.points,
        points_skipped: skipped,
        families: records,
        pass,
    })
}

// ---------------------------------------------------------------------------
// emitters

/// Seventeen significant digits; non-finite values have no JSON spelling.
fn number(v: f64) -> Box<RawValue> {
    let s = if v.is_finite() { format!("{v:.16e}") } else { "null".to_string() };
    RawValue::from_string(s).expect("valid JSON number")
}

#[derive(Serialize)]
struct JsonFamily<'a> {
    family: &'a str,
    measure: &'a str,
    points: usize,
    max_resid: Box<RawValue>,
    mean_resid: Box<RawValue>,
    tol: Box<RawValue>,
    pass: bool,
    worst_point: Option<Vec<Box<RawValue>>>,
}

#[derive(Serialize)]
struct JsonConfig<'a> {
    metric_source: &'a str,
    points: usize,
    seed: u64,
    tolerances: BTreeMap<&'a str, Box<RawValue>>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    model: &'a str,
    metric: &'a str,
    seed: u64,
    version: &'a str,
    verdict: &'a str,
    points_requested: usize,
    points_skipped: usize,
    families: Vec<JsonFamily<'a>>,
    config: JsonConfig<'a>,
}

pub fn to_json(r: &ConstraintReport) -> String {
    let report = JsonReport {
        model: r.model.as_str(),
        metric: &r.metric,
        seed: r.seed,
        version: VERSION,
        verdict: r.verdict(),
        points_requested: r.points_requested,
        points_skipped: r.points_skipped,
        families: r
            .families
            .iter()
            .map(|f| JsonFamily {
                family: &f.family,
                measure: f.measure.as_str(),
                points: f.points,
                max_resid: number(f.max_resid),
                mean_resid: number(f.mean_resid),
                tol: number(f.tol),
                pass: f.pass,
                worst_point: f.worst_point.map(|x| x.iter().map(|v| number(*v)).collect()),
            })
            .collect(),
        config: JsonConfig {
            metric_source: &r.metric_source,
            points: r.points_requested,
            seed: r.seed,
            tolerances: r.families.iter().map(|f| (f.family.as_str(), number(f.tol))).collect(),
        },
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    s
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

pub fn to_csv(r: &ConstraintReport) -> String {
    let mut s = String::from("family,points,max_resid,mean_resid,tol,pass\n");
    for f in &r.families {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            f.family,
            f.points,
            csv_number(f.max_resid),
            csv_number(f.mean_resid),
            csv_number(f.tol),
            f.pass
        );
    }
    s
}

pub fn emit(r: &ConstraintReport, format: Format) -> String {
    match format {
        Format::Json => to_json(r),
        Format::Csv => to_csv(r),
    }
}

/// Process exit code for an error: 2 for usage, configuration and I/O
/// problems, 3 for numeric domain failures.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        3
    } else {
        2
    }
}
