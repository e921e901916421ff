//! Linear sequential fractional systems
//!
//!   D^α f = G g + Q,   D^α g = R f + V   on (a, c],
//!
//! solved through the equivalent weakly singular Volterra pair
//!
//!   f(x) = f_a (x−a)^(α−1) + Γ(α)^(−1) ∫_a^x (G g + Q)(s) (x−s)^(α−1) ds,
//!   g(x) = g_a (x−a)^(α−1) + Γ(α)^(−1) ∫_a^x (R f + V)(s) (x−s)^(α−1) ds.
//!
//! Both unknowns live in X_{1−α} and are stored through their regularized
//! parts. Two solution algorithms share one product-integration rule: global
//! Picard iteration, and a causal march that solves a 2×2 system per node.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::rlops::{ProductRule, RuleCache};
use crate::scalar::Real;
use crate::specfn::gamma_fn;
use crate::weighted::{GradedGrid, Order, WeightedFn};

/// A continuous coefficient on [a, c].
pub type Coef<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

pub fn constant<T: Real>(value: T) -> Coef<T> {
    Arc::new(move |_| value)
}

/// Largest |f| over `samples + 1` equispaced points of [a, c].
pub fn sampled_sup<T: Real>(f: &dyn Fn(T) -> T, a: T, c: T, samples: usize) -> T {
    let n = samples.max(1);
    let step = (c - a) / T::from_usize_lossy(n);
    (0..=n)
        .map(|k| f(a + step * T::from_usize_lossy(k)).abs())
        .fold(T::zero(), T::max)
}

/// Coefficients G, Q, R, V of the system with cached sup-norms of G and R.
#[derive(Clone)]
pub struct CoefficientSet<T> {
    pub g: Coef<T>,
    pub q: Coef<T>,
    pub r: Coef<T>,
    pub v: Coef<T>,
    sup_g: T,
    sup_r: T,
}

impl<T: Real> CoefficientSet<T> {
    /// `sup_g` and `sup_r` must bound |G| and |R| on the solution interval.
    pub fn new(g: Coef<T>, q: Coef<T>, r: Coef<T>, v: Coef<T>, sup_g: T, sup_r: T) -> Result<Self> {
        for (name, s) in [("sup_g", sup_g), ("sup_r", sup_r)] {
            if !(s.is_finite() && s >= T::zero()) {
                return Err(domain(
                    "coefficients",
                    format!("{name} = {s} must be finite and >= 0"),
                ));
            }
        }
        Ok(Self {
            g,
            q,
            r,
            v,
            sup_g,
            sup_r,
        })
    }

    /// Sup-norms estimated by dense sampling of [a, c].
    pub fn sampled(g: Coef<T>, q: Coef<T>, r: Coef<T>, v: Coef<T>, a: T, c: T) -> Result<Self> {
        let sup_g = sampled_sup(g.as_ref(), a, c, 8192);
        let sup_r = sampled_sup(r.as_ref(), a, c, 8192);
        Self::new(g, q, r, v, sup_g, sup_r)
    }

    /// The embedding of D^α(D^α f) + P f = V: G ≡ 1, Q ≡ 0, R = −P.
    pub fn fite(p: Coef<T>, p_sup: T, v: Coef<T>) -> Result<Self> {
        let neg: Coef<T> = Arc::new(move |t| -p(t));
        Self::new(
            constant(T::one()),
            constant(T::zero()),
            neg,
            v,
            T::one(),
            p_sup,
        )
    }

    pub fn sup_g(&self) -> T {
        self.sup_g
    }

    pub fn sup_r(&self) -> T {
        self.sup_r
    }

    /// m = max(‖G‖∞, ‖R‖∞).
    pub fn m(&self) -> T {
        self.sup_g.max(self.sup_r)
    }
}

impl<T: Real> fmt::Debug for CoefficientSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("sup_g", &self.sup_g)
            .field("sup_r", &self.sup_r)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Picard iteration, falling back to marching when it diverges or stalls.
    Auto,
    Picard,
    Marching,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    pub method: SolveMethod,
    /// Return the last Picard iterate, flagged unconverged, instead of an
    /// error when the iteration is still contracting at `max_iter`.
    pub accept_stalled: bool,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: 200,
            method: SolveMethod::Auto,
            accept_stalled: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub f: WeightedFn<T>,
    pub g: WeightedFn<T>,
    /// Picard sweeps performed (0 for a pure march).
    pub iterations: usize,
    /// Max regularized defect of both integral equations over nodes j ≥ 1.
    pub residual: T,
    /// Algorithm that produced `f` and `g`.
    pub method: SolveMethod,
    /// False only for a stalled Picard iterate returned on request.
    pub converged: bool,
    /// Ratios of successive Picard increments in the full weighted norm.
    pub increment_ratios: Vec<T>,
}

/// Nodal data of one discretized problem.
struct Discrete<'a, T> {
    rule: &'a ProductRule<T>,
    f_a: T,
    g_a: T,
    g: Vec<T>,
    r: Vec<T>,
    /// (t−a)^γ Q(t) and (t−a)^γ V(t): regularized forcing.
    q_reg: Vec<T>,
    v_reg: Vec<T>,
    /// (t−a)^γ / Γ(α).
    lift: Vec<T>,
}

impl<'a, T: Real> Discrete<'a, T> {
    fn new(
        rule: &'a ProductRule<T>,
        coeffs: &CoefficientSet<T>,
        order: Order<T>,
        f_a: T,
        g_a: T,
    ) -> Result<Self> {
        let grid = rule.grid();
        let gamma = order.gamma();
        let inv_gamma_alpha = T::one() / gamma_fn(order.alpha())?;
        let weight: Vec<T> = grid
            .offsets()
            .iter()
            .map(|u| {
                if *u == T::zero() {
                    T::zero()
                } else {
                    u.powf(gamma)
                }
            })
            .collect();
        let at = |c: &Coef<T>| grid.nodes().iter().map(|&t| c(t)).collect::<Vec<T>>();
        let scaled = |c: &Coef<T>| {
            grid.nodes()
                .iter()
                .zip(&weight)
                .map(|(&t, &w)| if w == T::zero() { T::zero() } else { c(t) * w })
                .collect::<Vec<T>>()
        };
        let out = Self {
            rule,
            f_a,
            g_a,
            g: at(&coeffs.g),
            r: at(&coeffs.r),
            q_reg: scaled(&coeffs.q),
            v_reg: scaled(&coeffs.v),
            lift: weight.iter().map(|w| *w * inv_gamma_alpha).collect(),
        };
        let finite = |v: &[T]| v.iter().all(|x| x.is_finite());
        if !(finite(&out.g) && finite(&out.r) && finite(&out.q_reg) && finite(&out.v_reg)) {
            return Err(domain("solve_system", "coefficient not finite on the grid"));
        }
        Ok(out)
    }

    fn n(&self) -> usize {
        self.g.len() - 1
    }

    /// Right-hand sides h_H = G·W_g + (t−a)^γ Q and h_V = R·W_f + (t−a)^γ V.
    fn forcing(&self, wf: &[T], wg: &[T]) -> (Vec<T>, Vec<T>) {
        let hh = (0..=self.n())
            .map(|j| self.g[j] * wg[j] + self.q_reg[j])
            .collect();
        let hv = (0..=self.n())
            .map(|j| self.r[j] * wf[j] + self.v_reg[j])
            .collect();
        (hh, hv)
    }

    /// One application of the integral maps.
    fn apply(&self, wf: &[T], wg: &[T]) -> (Vec<T>, Vec<T>) {
        let (hh, hv) = self.forcing(wf, wg);
        let qh = self.rule.apply(&hh);
        let qv = self.rule.apply(&hv);
        let mut nf = Vec::with_capacity(self.n() + 1);
        let mut ng = Vec::with_capacity(self.n() + 1);
        nf.push(self.f_a);
        ng.push(self.g_a);
        for i in 1..=self.n() {
            nf.push(self.f_a + self.lift[i] * qh[i]);
            ng.push(self.g_a + self.lift[i] * qv[i]);
        }
        (nf, ng)
    }

    fn residual(&self, wf: &[T], wg: &[T]) -> T {
        let (tf, tg) = self.apply(wf, wg);
        (1..=self.n())
            .map(|j| (wf[j] - tf[j]).abs().max((wg[j] - tg[j]).abs()))
            .fold(T::zero(), T::max)
    }

    fn march(&self) -> Result<(Vec<T>, Vec<T>)> {
        let n = self.n();
        let mut wf = vec![T::zero(); n + 1];
        let mut wg = vec![T::zero(); n + 1];
        let mut hh = vec![T::zero(); n + 1];
        let mut hv = vec![T::zero(); n + 1];
        wf[0] = self.f_a;
        wg[0] = self.g_a;
        hh[0] = self.g[0] * self.g_a + self.q_reg[0];
        hv[0] = self.r[0] * self.f_a + self.v_reg[0];
        for i in 1..=n {
            let s = self.lift[i];
            let diag = s * self.rule.weight(i, i);
            let b1 = self.f_a + s * self.rule.history(i, &hh) + diag * self.q_reg[i];
            let b2 = self.g_a + s * self.rule.history(i, &hv) + diag * self.v_reg[i];
            let (ag, ar) = (diag * self.g[i], diag * self.r[i]);
            let det = T::one() - ag * ar;
            if det.abs() < T::lit(1e-12) {
                return Err(Error::SingularStep { node: i });
            }
            wf[i] = (b1 + ag * b2) / det;
            wg[i] = (b2 + ar * b1) / det;
            hh[i] = self.g[i] * wg[i] + self.q_reg[i];
            hv[i] = self.r[i] * wf[i] + self.v_reg[i];
        }
        Ok((wf, wg))
    }
}

enum PicardOutcome<T> {
    Converged {
        wf: Vec<T>,
        wg: Vec<T>,
        iterations: usize,
        ratios: Vec<T>,
    },
    Diverged {
        ratios: Vec<T>,
    },
    Stalled {
        wf: Vec<T>,
        wg: Vec<T>,
        iterations: usize,
        last_increment: T,
        ratios: Vec<T>,
    },
}

fn picard<T: Real>(d: &Discrete<'_, T>, opts: &SolveOptions<T>) -> PicardOutcome<T> {
    let n = d.n();
    let mut wf = vec![d.f_a; n + 1];
    let mut wg = vec![d.g_a; n + 1];
    let mut ratios = Vec::new();
    let mut prev: Option<T> = None;
    let mut first: Option<T> = None;
    let mut last_increment = T::infinity();
    for k in 1..=opts.max_iter {
        let (nf, ng) = d.apply(&wf, &wg);
        let inc = nf
            .iter()
            .zip(&wf)
            .chain(ng.iter().zip(&wg))
            .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
        wf = nf;
        wg = ng;
        if !inc.is_finite() {
            return PicardOutcome::Diverged { ratios };
        }
        if let Some(p) = prev {
            if p > T::zero() {
                ratios.push(inc / p);
            }
        }
        let base = *first.get_or_insert(inc);
        if inc > T::lit(1e12) * base.max(T::one()) {
            return PicardOutcome::Diverged { ratios };
        }
        last_increment = inc;
        if inc <= opts.tol {
            return PicardOutcome::Converged {
                wf,
                wg,
                iterations: k,
                ratios,
            };
        }
        prev = Some(inc);
    }
    if ratios.last().is_some_and(|r| *r >= T::one()) {
        return PicardOutcome::Diverged { ratios };
    }
    PicardOutcome::Stalled {
        wf,
        wg,
        iterations: opts.max_iter,
        last_increment,
        ratios,
    }
}

/// Solves the system on `grid` with data (f_a, g_a).
pub fn solve_system<T: Real>(
    coeffs: &CoefficientSet<T>,
    order: Order<T>,
    f_a: T,
    g_a: T,
    grid: Arc<GradedGrid<T>>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    let gamma = order.gamma();
    let rule = ProductRule::new(grid, gamma, gamma)?;
    solve_system_with(&rule, coeffs, order, f_a, g_a, opts)
}

/// [`solve_system`] with the product rule taken from a shared cache.
pub fn solve_system_cached<T: Real>(
    cache: &RuleCache<T>,
    coeffs: &CoefficientSet<T>,
    order: Order<T>,
    f_a: T,
    g_a: T,
    grid: Arc<GradedGrid<T>>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    let gamma = order.gamma();
    let rule = cache.rule(grid, gamma, gamma)?;
    solve_system_with(&rule, coeffs, order, f_a, g_a, opts)
}

/// [`solve_system`] with a prebuilt rule for β = γ = 1 − α.
pub fn solve_system_with<T: Real>(
    rule: &ProductRule<T>,
    coeffs: &CoefficientSet<T>,
    order: Order<T>,
    f_a: T,
    g_a: T,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    if !(opts.tol > T::zero() && opts.tol.is_finite()) {
        return Err(domain(
            "solve_system",
            format!("tol = {} must be > 0", opts.tol),
        ));
    }
    let gamma = order.gamma();
    if rule.beta() != gamma || rule.gamma() != gamma {
        return Err(domain(
            "solve_system",
            "product rule exponents differ from 1 - alpha",
        ));
    }
    if !(f_a.is_finite() && g_a.is_finite()) {
        return Err(domain("solve_system", "initial data must be finite"));
    }
    let d = Discrete::new(rule, coeffs, order, f_a, g_a)?;
    let mut converged = true;
    let (wf, wg, iterations, method, ratios) = match opts.method {
        SolveMethod::Marching => {
            let (wf, wg) = d.march()?;
            (wf, wg, 0, SolveMethod::Marching, Vec::new())
        }
        SolveMethod::Picard | SolveMethod::Auto => match picard(&d, opts) {
            PicardOutcome::Converged {
                wf,
                wg,
                iterations,
                ratios,
            } => (wf, wg, iterations, SolveMethod::Picard, ratios),
            PicardOutcome::Diverged { ratios } | PicardOutcome::Stalled { ratios, .. }
                if opts.method == SolveMethod::Auto =>
            {
                let (wf, wg) = d.march()?;
                (wf, wg, 0, SolveMethod::Marching, ratios)
            }
            PicardOutcome::Diverged { ratios } => {
                return Err(Error::SolverNonConvergence {
                    iterations: ratios.len() + 1,
                    last_increment: f64::INFINITY,
                    last_ratio: ratios.last().map(|r| r.as_f64()),
                })
            }
            PicardOutcome::Stalled {
                wf,
                wg,
                iterations,
                ratios,
                ..
            } if opts.accept_stalled => {
                converged = false;
                (wf, wg, iterations, SolveMethod::Picard, ratios)
            }
            PicardOutcome::Stalled {
                iterations,
                last_increment,
                ratios,
                ..
            } => {
                return Err(Error::SolverNonConvergence {
                    iterations,
                    last_increment: last_increment.as_f64(),
                    last_ratio: ratios.last().map(|r| r.as_f64()),
                })
            }
        },
    };
    let residual = d.residual(&wf, &wg);
    let grid = rule.grid().clone();
    Ok(SolveReport {
        f: WeightedFn::from_samples(gamma, grid.clone(), wf)?,
        g: WeightedFn::from_samples(gamma, grid, wg)?,
        iterations,
        residual,
        method,
        converged,
        increment_ratios: ratios,
    })
}

/// Recomputes the defect of a reported solution.
pub fn residual<T: Real>(
    coeffs: &CoefficientSet<T>,
    order: Order<T>,
    report: &SolveReport<T>,
) -> Result<T> {
    let grid = report.f.grid().clone();
    if *grid != **report.g.grid() {
        return Err(Error::GridMismatch);
    }
    let gamma = order.gamma();
    let rule = ProductRule::new(grid, gamma, gamma)?;
    let d = Discrete::new(&rule, coeffs, order, report.f.limit(), report.g.limit())?;
    Ok(d.residual(report.f.samples(), report.g.samples()))
}

/// D^α(D^α f) + P f = 0 through G ≡ 1, Q ≡ 0, R = −P, V ≡ 0; the returned `g`
/// is D^α f.
pub fn solve_fite<T: Real>(
    p: Coef<T>,
    order: Order<T>,
    f_a: T,
    g_a: T,
    grid: Arc<GradedGrid<T>>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    let p_sup = sampled_sup(p.as_ref(), grid.a(), grid.c(), 8192);
    let coeffs = CoefficientSet::fite(p, p_sup, constant(T::zero()))?;
    solve_system(&coeffs, order, f_a, g_a, grid, opts)
}

/// Sequential relaxation-oscillation equation D^α(D^α f) + P f = V with
/// constant P > 0.
pub fn solve_relax_osc<T: Real>(
    p_const: T,
    v: Coef<T>,
    order: Order<T>,
    f_a: T,
    g_a: T,
    grid: Arc<GradedGrid<T>>,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    if !(p_const > T::zero() && p_const.is_finite()) {
        return Err(domain(
            "solve_relax_osc",
            format!("P = {p_const} must be > 0"),
        ));
    }
    let coeffs = CoefficientSet::fite(constant(p_const), p_const, v)?;
    solve_system(&coeffs, order, f_a, g_a, grid, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfn::mittag_leffler;
    use crate::weighted::build_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(a: f64, c: f64, n: usize) -> Arc<GradedGrid<f64>> {
        Arc::new(build_grid(a, c, n, 2.0).unwrap())
    }

    fn order(alpha: f64) -> Order<f64> {
        Order::new(alpha).unwrap()
    }

    fn system(g: f64, q: f64, r: f64, v: f64) -> CoefficientSet<f64> {
        CoefficientSet::new(
            constant(g),
            constant(q),
            constant(r),
            constant(v),
            g.abs(),
            r.abs(),
        )
        .unwrap()
    }

    #[test]
    fn zero_fixed_point() {
        let rep = solve_system(
            &system(2.0, 0.0, -3.0, 0.0),
            order(0.8),
            0.0,
            0.0,
            grid(0.0, 1.0, 64),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.f.norm_full(), 0.0);
        assert_eq!(rep.g.norm_full(), 0.0);
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn decoupled_free_term() {
        let g = grid(0.5, 2.0, 64);
        let rep = solve_system(
            &system(1.0, 0.0, 0.0, 0.0),
            order(0.7),
            1.0,
            0.0,
            g.clone(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.g.norm_full(), 0.0);
        for &t in &g.nodes()[1..] {
            assert_relative_eq!(
                rep.f.eval_raw(t).unwrap(),
                (t - 0.5f64).powf(-0.3),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn fite_with_zero_coefficient() {
        let g = grid(0.0, 1.0, 32);
        let rep = solve_fite(
            constant(0.0),
            order(0.75),
            1.0,
            0.0,
            g,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(rep.f.samples().iter().all(|w| *w == 1.0));
        assert_eq!(rep.g.norm_full(), 0.0);
    }

    fn mittag_leffler_instance(n: usize) -> (f64, f64) {
        let alpha = 0.75;
        let coeffs = system(1.0, 0.0, 1.0, 0.0);
        let rep = solve_system(
            &coeffs,
            order(alpha),
            1.0,
            1.0,
            grid(0.0, 1.0, n),
            &SolveOptions::default(),
        )
        .unwrap();
        let exact = gamma_fn(alpha).unwrap() * mittag_leffler(alpha, alpha, 1.0).unwrap();
        (rep.f.samples()[n], exact)
    }

    #[test]
    fn mittag_leffler_oracle() {
        let (got, exact) = mittag_leffler_instance(1024);
        assert_relative_eq!(exact, 4.507_972_816_227_402, max_relative = 1e-12);
        assert_relative_eq!(got, exact, max_relative = 1e-4);
    }

    #[test]
    fn mesh_convergence_rate() {
        let e1 = {
            let (g, x) = mittag_leffler_instance(256);
            (g - x).abs()
        };
        let e2 = {
            let (g, x) = mittag_leffler_instance(512);
            (g - x).abs()
        };
        assert!(e1 / e2 >= 2.5, "error ratio {}", e1 / e2);
    }

    #[test]
    fn two_schemes_agree() {
        let g = grid(0.0, 1.0, 256);
        let p = constant(1.0);
        let picard = SolveOptions {
            method: SolveMethod::Picard,
            ..SolveOptions::default()
        };
        let march = SolveOptions {
            method: SolveMethod::Marching,
            ..SolveOptions::default()
        };
        let a = solve_fite(p.clone(), order(0.75), 0.0, 1.0, g.clone(), &picard).unwrap();
        let b = solve_fite(p, order(0.75), 0.0, 1.0, g, &march).unwrap();
        assert_eq!(a.method, SolveMethod::Picard);
        assert_eq!(b.method, SolveMethod::Marching);
        assert!(a.f.max_diff(&b.f).unwrap() <= 1e-6);
        assert!(a.g.max_diff(&b.g).unwrap() <= 1e-6);
        assert!(b.residual <= 1e-10, "{}", b.residual);
    }

    #[test]
    fn derivative_consistency() {
        let alpha = 0.75;
        let g = grid(0.0, 1.0, 1024);
        let rep = solve_fite(
            constant(1.0),
            order(alpha),
            0.0,
            1.0,
            g.clone(),
            &SolveOptions::default(),
        )
        .unwrap();
        let d = crate::rlops::rl_derivative(&rep.f, alpha).unwrap();
        let want = rep.g.reweighted(alpha, 0.0).unwrap();
        let n = g.cells();
        let err = (3..n - 2)
            .map(|j| (d.samples()[j] - want.samples()[j]).abs())
            .fold(0.0, f64::max);
        assert!(err <= 5e-3, "consistency error {err}");
    }

    #[test]
    fn residual_responds_to_perturbation() {
        let coeffs = system(1.0, 0.0, 1.0, 0.0);
        let o = order(0.75);
        let rep = solve_system(
            &coeffs,
            o,
            1.0,
            1.0,
            grid(0.0, 1.0, 128),
            &SolveOptions {
                tol: 1e-8,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!(rep.residual <= 1e-6);
        assert_relative_eq!(
            residual(&coeffs, o, &rep).unwrap(),
            rep.residual,
            max_relative = 1e-6,
            epsilon = 1e-15
        );
        let mut bumped = rep.clone();
        let mut s = bumped.f.samples().to_vec();
        s[40] += 1.0;
        bumped.f = WeightedFn::from_samples(o.gamma(), bumped.f.grid().clone(), s).unwrap();
        assert!(residual(&coeffs, o, &bumped).unwrap() >= 0.5);
    }

    #[test]
    fn relaxation_oscillation() {
        let o = order(0.75);
        let g = grid(0.0, 1.0, 64);
        let zero = solve_relax_osc(
            1.0,
            constant(0.0),
            o,
            0.0,
            0.0,
            g.clone(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(zero.f.norm_full(), 0.0);

        let opts = SolveOptions {
            tol: 1e-10,
            ..SolveOptions::default()
        };
        let sine = solve_relax_osc(1.0, Arc::new(|t: f64| t.sin()), o, 0.0, 0.0, g, &opts).unwrap();
        assert!(sine.residual <= opts.tol);

        // unit forcing on a long interval drives g through zero
        let long = grid(0.0, 12.0, 512);
        let rep = solve_relax_osc(
            1.0,
            constant(1.0),
            o,
            0.0,
            0.0,
            long,
            &SolveOptions::default(),
        )
        .unwrap();
        let s = rep.g.samples();
        assert!(s[1..].windows(2).any(|w| w[0] * w[1] < 0.0));
        assert!(
            solve_relax_osc(0.0, constant(1.0), o, 0.0, 0.0, grid(0.0, 1.0, 8), &opts).is_err()
        );
    }

    #[test]
    fn linear_in_data_and_forcing() {
        let o = order(0.7);
        let g = grid(0.0, 2.0, 128);
        let solve = |fa: f64, ga: f64, q: f64, v: f64| {
            let c = CoefficientSet::new(
                Arc::new(|t: f64| 1.0 + 0.5 * t),
                Arc::new(move |t: f64| q * t.cos()),
                Arc::new(|t: f64| -2.0 + t),
                Arc::new(move |t: f64| v * (1.0 + t)),
                2.0,
                2.0,
            )
            .unwrap();
            let opts = SolveOptions {
                method: SolveMethod::Marching,
                ..SolveOptions::default()
            };
            solve_system(&c, o, fa, ga, g.clone(), &opts).unwrap()
        };
        let x = solve(1.0, -0.5, 0.3, 0.0);
        let y = solve(0.2, 0.7, 0.0, -1.1);
        let z = solve(1.0 + 3.0 * 0.2, -0.5 + 3.0 * 0.7, 0.3, -3.3);
        let combo = x.f.add_scaled(3.0, &y.f).unwrap();
        assert!(z.f.max_diff(&combo).unwrap() <= 1e-8);
        let combo = x.g.add_scaled(3.0, &y.g).unwrap();
        assert!(z.g.max_diff(&combo).unwrap() <= 1e-8);
    }

    #[test]
    fn picard_falls_back_on_long_intervals() {
        let g = grid(0.0, 40.0, 256);
        let opts = SolveOptions {
            max_iter: 30,
            ..SolveOptions::default()
        };
        let rep = solve_fite(constant(2.0), order(0.6), 1.0, 0.0, g.clone(), &opts).unwrap();
        assert_eq!(rep.method, SolveMethod::Marching);
        let strict = SolveOptions {
            method: SolveMethod::Picard,
            ..opts
        };
        assert!(matches!(
            solve_fite(constant(2.0), order(0.6), 1.0, 0.0, g, &strict),
            Err(Error::SolverNonConvergence { .. })
        ));
    }

    #[test]
    fn stalls_with_tiny_budget() {
        let opts = SolveOptions {
            max_iter: 1,
            method: SolveMethod::Picard,
            ..SolveOptions::default()
        };
        let err = solve_fite(
            constant(1.0),
            order(0.75),
            1.0,
            0.0,
            grid(0.0, 0.5, 32),
            &opts,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::SolverNonConvergence { iterations: 1, .. }
        ));
        let partial = SolveOptions {
            accept_stalled: true,
            ..opts
        };
        let rep = solve_fite(
            constant(1.0),
            order(0.75),
            1.0,
            0.0,
            grid(0.0, 0.5, 32),
            &partial,
        )
        .unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 1);
        let auto = SolveOptions {
            method: SolveMethod::Auto,
            ..opts
        };
        let rep = solve_fite(
            constant(1.0),
            order(0.75),
            1.0,
            0.0,
            grid(0.0, 0.5, 32),
            &auto,
        )
        .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.method, SolveMethod::Marching);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn converged_residual_within_tol(
            alpha in 0.55f64..0.95,
            p in -5.0f64..5.0,
            length in 0.05f64..3.0,
            f_a in -1.0f64..1.0,
            g_a in -1.0f64..1.0,
        ) {
            let coeffs = system(1.0, 0.0, -p, 0.0);
            let opts = SolveOptions::default();
            let rep = solve_system(&coeffs, order(alpha), f_a, g_a, grid(0.0, length, 128), &opts).unwrap();
            prop_assert!(rep.converged);
            prop_assert!(rep.residual <= opts.tol);
        }
    }
}
