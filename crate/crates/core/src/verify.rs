//! Scenario harness: solve, locate a zero pair, compare with the length
//! bound, and sweep parameter grids for counterexamples.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{best_min_length, fite_lhs, fite_rhs, BoundReport};
use crate::error::{domain, Error, Result};
use crate::rlops::RuleCache;
use crate::sfde::{solve_system_cached, Coef, CoefficientSet, SolveMethod, SolveOptions};
use crate::weighted::{GradedGrid, Order, WeightedFn};
use crate::zeros::first_zero_pair;

/// Solutions with full weighted norm at or below this are treated as trivial.
pub const TRIVIAL_NORM: f64 = 1e-8;

/// Samples used to bound polynomial coefficients on [a, c].
const POLY_SAMPLES: usize = 8192;

/// A coefficient on [a, c]: constant, polynomial in (t − a), or a table
/// interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefSpec {
    Const(f64),
    Poly(Vec<f64>),
    Table(Vec<[f64; 2]>),
}

impl CoefSpec {
    pub fn validate(&self, a: f64, c: f64) -> Result<()> {
        match self {
            CoefSpec::Const(x) if !x.is_finite() => {
                Err(domain("coefficient", "constant must be finite"))
            }
            CoefSpec::Poly(cs) if cs.is_empty() || cs.iter().any(|x| !x.is_finite()) => Err(
                domain("coefficient", "poly needs at least one finite coefficient"),
            ),
            CoefSpec::Table(rows) => {
                if rows.len() < 2 || rows.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(domain(
                        "coefficient",
                        "table needs at least two finite rows",
                    ));
                }
                if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(domain(
                        "coefficient",
                        "table abscissae must increase strictly",
                    ));
                }
                if rows[0][0] > a || rows[rows.len() - 1][0] < c {
                    return Err(domain(
                        "coefficient",
                        format!("table must cover [{a}, {c}]"),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64, a: f64) -> f64 {
        match self {
            CoefSpec::Const(x) => *x,
            CoefSpec::Poly(cs) => {
                let u = t - a;
                cs.iter().rev().fold(0.0, |acc, c| acc * u + c)
            }
            CoefSpec::Table(rows) => {
                let k = rows.partition_point(|r| r[0] <= t).clamp(1, rows.len() - 1);
                let ([t0, v0], [t1, v1]) = (rows[k - 1], rows[k]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Values that bracket the coefficient on [a, c]: exact for constants and
    /// tables, dense sampling for polynomials.
    fn probe_values(&self, a: f64, c: f64) -> Vec<f64> {
        match self {
            CoefSpec::Const(x) => vec![*x],
            CoefSpec::Poly(_) => (0..=POLY_SAMPLES)
                .map(|k| self.eval(a + (c - a) * k as f64 / POLY_SAMPLES as f64, a))
                .collect(),
            CoefSpec::Table(rows) => {
                let mut v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r[0] > a && r[0] < c)
                    .map(|r| r[1])
                    .collect();
                v.push(self.eval(a, a));
                v.push(self.eval(c, a));
                v
            }
        }
    }

    pub fn sup(&self, a: f64, c: f64) -> f64 {
        self.probe_values(a, c)
            .into_iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self, a: f64, c: f64) -> f64 {
        self.probe_values(a, c)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_coef(&self, a: f64) -> Coef<f64> {
        let spec = self.clone();
        Arc::new(move |t| spec.eval(t, a))
    }
}

fn default_n() -> usize {
    1024
}
fn default_grading() -> f64 {
    2.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    200
}
fn default_method() -> SolveMethod {
    SolveMethod::Auto
}

/// One instance of D^α(D^α f) + P f = V on (a, c] with zero window [b, c].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p: CoefSpec,
    /// Forcing; when present P must be a positive constant.
    #[serde(default)]
    pub v: Option<CoefSpec>,
    pub f_a: f64,
    pub g_a: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_method")]
    pub method: SolveMethod,
}

impl Scenario {
    /// Constant-coefficient Fite scenario with default solver controls.
    pub fn fite(alpha: f64, p: f64, a: f64, b: f64, c: f64, f_a: f64, g_a: f64) -> Self {
        Self {
            alpha,
            a,
            b,
            c,
            p: CoefSpec::Const(p),
            v: None,
            f_a,
            g_a,
            n: default_n(),
            grading: default_grading(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            method: default_method(),
        }
    }

    pub fn order(&self) -> Result<Order<f64>> {
        Order::new(self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        self.order()?;
        let (a, b, c) = (self.a, self.b, self.c);
        if !(a.is_finite() && c.is_finite() && a < c) {
            return Err(Error::InvalidInterval { a, c });
        }
        if !(a < b && b < c) {
            return Err(Error::Window { a, b, c, end: c });
        }
        if self.n < 2 {
            return Err(Error::TooFewCells(self.n));
        }
        if !(self.grading >= 1.0 && self.grading.is_finite()) {
            return Err(domain(
                "scenario",
                format!("grading = {} must be >= 1", self.grading),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) || self.max_iter == 0 {
            return Err(domain("scenario", "tol must be > 0 and max_iter >= 1"));
        }
        if !(self.f_a.is_finite() && self.g_a.is_finite()) {
            return Err(domain("scenario", "f_a and g_a must be finite"));
        }
        self.p.validate(a, c)?;
        match &self.v {
            None => {
                if self.p.min(a, c) < 0.0 {
                    return Err(domain("scenario", "P must be nonnegative on [a, c]"));
                }
                if self.f_a == 0.0 && self.g_a == 0.0 {
                    return Err(domain(
                        "scenario",
                        "(f_a, g_a) = (0, 0) gives the trivial solution",
                    ));
                }
            }
            Some(v) => {
                v.validate(a, c)?;
                if !matches!(self.p, CoefSpec::Const(x) if x > 0.0) {
                    return Err(domain(
                        "scenario",
                        "forced scenarios need a positive constant P",
                    ));
                }
            }
        }
        Ok(())
    }

    /// P_∞ = sup |P| on [a, c].
    pub fn p_sup(&self) -> f64 {
        self.p.sup(self.a, self.c)
    }

    /// m = max(1, P_∞): G ≡ 1 and R = −P.
    pub fn m(&self) -> f64 {
        self.p_sup().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    BoundHolds,
    NoZeroPair,
    Counterexample,
    SolverFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scenario: Scenario,
    pub verdict: Verdict,
    /// Bound holds only because the solution is trivial.
    pub vacuous: bool,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub method: Option<SolveMethod>,
    pub zero_pair: Option<(f64, f64)>,
    pub norm_f: Option<f64>,
    pub bound: BoundReport<f64>,
    pub error: Option<String>,
}

/// Test hook: scales the theorem's right-hand side before comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub rhs_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { rhs_scale: 1.0 }
    }
}

/// Bound at the optimal p with m = max(1, P_∞) and length c − a.
fn bound_for(s: &Scenario, order: Order<f64>, opts: &VerifyOptions) -> Result<BoundReport<f64>> {
    let m = s.m();
    let length = s.c - s.a;
    let (p, min_length) = best_min_length(order, m)?;
    let lhs = fite_lhs(order, p, m, length)?;
    let rhs = fite_rhs(order)? * opts.rhs_scale;
    Ok(BoundReport {
        alpha: s.alpha,
        p_used: p,
        m,
        length,
        lhs,
        rhs,
        satisfied: lhs >= rhs,
        min_length,
    })
}

struct Solved {
    f: WeightedFn<f64>,
    g: WeightedFn<f64>,
    residual: f64,
    iterations: usize,
    method: SolveMethod,
}

fn solve(cache: &RuleCache<f64>, s: &Scenario, order: Order<f64>) -> Result<Solved> {
    let grid = Arc::new(GradedGrid::new(s.a, s.c, s.n, s.grading)?);
    let opts = SolveOptions {
        tol: s.tol,
        max_iter: s.max_iter,
        method: s.method,
        accept_stalled: false,
    };
    let p_sup = s.p_sup();
    let zero = CoefSpec::Const(0.0);
    let forcing = s.v.as_ref().unwrap_or(&zero);
    let coeffs = CoefficientSet::fite(s.p.to_coef(s.a), p_sup, forcing.to_coef(s.a))?;
    let rep = solve_system_cached(cache, &coeffs, order, s.f_a, s.g_a, grid.clone(), &opts)?;
    if s.v.is_none() {
        return Ok(Solved {
            f: rep.f,
            g: rep.g,
            residual: rep.residual,
            iterations: rep.iterations,
            method: rep.method,
        });
    }
    // compare against the forced solution with zero data: the difference
    // solves the homogeneous system
    let base = solve_system_cached(cache, &coeffs, order, 0.0, 0.0, grid, &opts)?;
    Ok(Solved {
        f: rep.f.add_scaled(-1.0, &base.f)?,
        g: rep.g.add_scaled(-1.0, &base.g)?,
        residual: rep.residual.max(base.residual),
        iterations: rep.iterations + base.iterations,
        method: rep.method,
    })
}

pub fn run_scenario(s: &Scenario) -> Result<VerifyReport> {
    run_scenario_with(&RuleCache::new(), s, &VerifyOptions::default())
}

/// Runs one scenario. Invalid scenarios are errors; solver failures become
/// the SOLVER_FAILED verdict.
pub fn run_scenario_with(
    cache: &RuleCache<f64>,
    s: &Scenario,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    s.validate()?;
    let order = s.order()?;
    let bound = bound_for(s, order, opts)?;
    let mut report = VerifyReport {
        scenario: s.clone(),
        verdict: Verdict::SolverFailed,
        vacuous: false,
        residual: None,
        iterations: None,
        method: None,
        zero_pair: None,
        norm_f: None,
        bound,
        error: None,
    };
    let solved = match solve(cache, s, order) {
        Ok(x) => x,
        Err(e @ (Error::SolverNonConvergence { .. } | Error::SingularStep { .. })) => {
            report.error = Some(e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.residual = Some(solved.residual);
    report.iterations = Some(solved.iterations);
    report.method = Some(solved.method);
    let norm_f = solved.f.norm_full();
    report.norm_f = Some(norm_f);
    if !norm_f.is_finite() || !solved.g.norm_full().is_finite() {
        report.error = Some("solution is not finite".into());
        return Ok(report);
    }
    let nontrivial = norm_f > TRIVIAL_NORM;
    report.zero_pair = first_zero_pair(&solved.f, &solved.g, s.b, s.c)?;
    report.verdict = match (report.zero_pair, bound.satisfied) {
        (None, _) => Verdict::NoZeroPair,
        (Some(_), true) => Verdict::BoundHolds,
        (Some(_), false) if nontrivial => Verdict::Counterexample,
        (Some(_), false) => Verdict::BoundHolds,
    };
    report.vacuous = report.zero_pair.is_some() && !nontrivial;
    Ok(report)
}

/// Cartesian sweep over constant P ≡ P_∞ on (a, a + length] with window
/// [a + b_fraction·length, a + length] and initial data on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub p_sups: Vec<f64>,
    pub lengths: Vec<f64>,
    pub directions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "default_b_fraction")]
    pub b_fraction: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_b_fraction() -> f64 {
    1e-3
}

impl SweepSpec {
    /// α ∈ {0.6, 0.75, 0.9} × P_∞ ∈ {0.5, 1, 2} × lengths {0.05, 0.5, 5} × 8
    /// directions.
    pub fn acceptance(seed: u64) -> Self {
        Self {
            alphas: vec![0.6, 0.75, 0.9],
            p_sups: vec![0.5, 1.0, 2.0],
            lengths: vec![0.05, 0.5, 5.0],
            directions: 8,
            seed,
            a: 0.0,
            b_fraction: default_b_fraction(),
            n: default_n(),
            grading: default_grading(),
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    /// Scenarios in canonical order: α, then P_∞, then length, then direction.
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        if !(self.b_fraction > 0.0 && self.b_fraction < 1.0) {
            return Err(domain("sweep", "b_fraction must lie in (0, 1)"));
        }
        let shift: f64 = ChaCha8Rng::seed_from_u64(self.seed).gen();
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &p in &self.p_sups {
                for &length in &self.lengths {
                    for k in 0..self.directions {
                        let theta = 2.0 * PI * (k as f64 + shift) / self.directions as f64;
                        let mut s = Scenario::fite(
                            alpha,
                            p,
                            self.a,
                            self.a + self.b_fraction * length,
                            self.a + length,
                            theta.cos(),
                            theta.sin(),
                        );
                        s.n = self.n;
                        s.grading = self.grading;
                        s.tol = self.tol;
                        s.max_iter = self.max_iter;
                        out.push(s);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VerdictCounts {
    pub bound_holds: usize,
    pub no_zero_pair: usize,
    pub counterexample: usize,
    pub solver_failed: usize,
    pub vacuous: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub total: usize,
    pub counts: VerdictCounts,
    /// Smallest lhs/rhs over scenarios with a zero pair; recorded only.
    pub min_ratio: Option<f64>,
    pub counterexamples: Vec<VerifyReport>,
    pub records: Vec<VerifyReport>,
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepReport> {
    sweep_with(spec, &VerifyOptions::default())
}

/// Runs every scenario of `spec` in parallel; the report is independent of
/// the worker count.
pub fn sweep_with(spec: &SweepSpec, opts: &VerifyOptions) -> Result<SweepReport> {
    let scenarios = spec.scenarios()?;
    let cache = RuleCache::new();
    let records = scenarios
        .par_iter()
        .map(|s| run_scenario_with(&cache, s, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = VerdictCounts::default();
    let mut min_ratio: Option<f64> = None;
    for r in &records {
        match r.verdict {
            Verdict::BoundHolds => counts.bound_holds += 1,
            Verdict::NoZeroPair => counts.no_zero_pair += 1,
            Verdict::Counterexample => counts.counterexample += 1,
            Verdict::SolverFailed => counts.solver_failed += 1,
        }
        counts.vacuous += usize::from(r.vacuous);
        if r.zero_pair.is_some() {
            let ratio = r.bound.lhs / r.bound.rhs;
            min_ratio = Some(min_ratio.map_or(ratio, |m| m.min(ratio)));
        }
    }
    let counterexamples = records
        .iter()
        .filter(|r| r.verdict == Verdict::Counterexample)
        .cloned()
        .collect();
    Ok(SweepReport {
        spec: spec.clone(),
        total: records.len(),
        counts,
        min_ratio,
        counterexamples,
        records,
    })
}

/// Second-order check with x = sin(√P (t − t0)): whenever a zero of x and a
/// zero of x′ both lie in [b, c], (c − b)·max(1, P) ≥ 1 must hold. Phases t0
/// cover a uniform grid plus the placements that put a zero on b.
pub fn classical_fite_check(p: f64, b: f64, c: f64) -> bool {
    if !(p > 0.0 && b < c) {
        return false;
    }
    let omega = p.sqrt();
    let half = PI / omega;
    let lands = |first: f64| {
        let k = ((b - first) / half).ceil();
        first + k * half <= c
    };
    let mut phases: Vec<f64> = (0..64).map(|k| b + half * k as f64 / 64.0).collect();
    phases.push(b);
    phases.push(b - half / 2.0);
    phases.iter().all(|&t0| {
        let pair = lands(t0) && lands(t0 + half / 2.0);
        !pair || (c - b) * p.max(1.0) >= 1.0
    })
}
