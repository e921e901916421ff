//! Functions with a (t−a)^(−γ) endpoint singularity, stored through their
//! regularized part (t−a)^γ f(t) on a graded grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fractional order α ∈ (1/2, 1) together with the weight exponent γ = 1 − α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order<T> {
    alpha: T,
    gamma: T,
}

impl<T: Real> Order<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha > T::lit(0.5) && alpha < T::one()) {
            return Err(Error::Order(alpha.as_f64()));
        }
        Ok(Self {
            alpha,
            gamma: T::one() - alpha,
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }
}

/// Nodes t_j = a + (c − a)(j/n)^r, j = 0..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedGrid<T> {
    a: T,
    c: T,
    n: usize,
    r: T,
    nodes: Vec<T>,
    offsets: Vec<T>,
}

/// Builds a graded grid on [a, c] with `n` cells and grading exponent `r ≥ 1`.
pub fn build_grid<T: Real>(a: T, c: T, n: usize, r: T) -> Result<GradedGrid<T>> {
    GradedGrid::new(a, c, n, r)
}

impl<T: Real> GradedGrid<T> {
    pub fn new(a: T, c: T, n: usize, r: T) -> Result<Self> {
        if !(a.is_finite() && c.is_finite() && a < c) {
            return Err(Error::InvalidInterval {
                a: a.as_f64(),
                c: c.as_f64(),
            });
        }
        if n < 2 {
            return Err(Error::TooFewCells(n));
        }
        if !(r >= T::one() && r.is_finite()) {
            return Err(crate::error::domain(
                "build_grid",
                format!("grading exponent {r} must be >= 1"),
            ));
        }
        let len = c - a;
        let nf = T::from_usize_lossy(n);
        let offsets: Vec<T> = (0..=n)
            .map(|j| {
                if j == n {
                    len
                } else {
                    len * (T::from_usize_lossy(j) / nf).powf(r)
                }
            })
            .collect();
        let nodes = offsets
            .iter()
            .enumerate()
            .map(|(j, &u)| if j == n { c } else { a + u })
            .collect();
        Ok(Self {
            a,
            c,
            n,
            r,
            nodes,
            offsets,
        })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn grading(&self) -> T {
        self.r
    }

    pub fn length(&self) -> T {
        self.c - self.a
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Node offsets t_j − a, computed without the cancellation of `t_j - a`.
    pub fn offsets(&self) -> &[T] {
        &self.offsets
    }

    /// Index j of the cell [t_j, t_{j+1}] containing `t` (clamped to the grid).
    pub fn cell_of(&self, t: T) -> usize {
        let k = self.nodes.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.n - 1)
    }
}

/// A member of the weighted space X_γ, sampled as w_j = (t_j − a)^γ f(t_j)
/// with w_0 = lim_{t↘a} (t − a)^γ f(t).
///
/// Exponents in (−1, 0) are accepted as well; they describe functions that
/// vanish like (t − a)^|γ| and are used for fractional integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFn<T> {
    gamma: T,
    grid: Arc<GradedGrid<T>>,
    samples: Vec<T>,
}

impl<T: Real> WeightedFn<T> {
    /// Wraps regularized samples; `samples[0]` is the limit value at `a`.
    pub fn from_samples(gamma: T, grid: Arc<GradedGrid<T>>, samples: Vec<T>) -> Result<Self> {
        if samples.len() != grid.cells() + 1 {
            return Err(Error::GridMismatch);
        }
        if !(gamma > -T::one() && gamma < T::one()) {
            return Err(crate::error::domain(
                "weighted",
                format!("weight exponent {gamma} outside (-1, 1)"),
            ));
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t: grid.nodes()[j].as_f64(),
            });
        }
        Ok(Self {
            gamma,
            grid,
            samples,
        })
    }

    /// Samples `reg(t) = (t − a)^γ f(t)` at every node after the first; the
    /// first sample is `f_a`.
    pub fn from_callable<F>(reg: F, f_a: T, gamma: T, grid: Arc<GradedGrid<T>>) -> Result<Self>
    where
        F: Fn(T) -> T,
    {
        let samples = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, &t)| if j == 0 { f_a } else { reg(t) })
            .collect();
        Self::from_samples(gamma, grid, samples)
    }

    /// The zero function of weight `gamma`.
    pub fn zeros(gamma: T, grid: Arc<GradedGrid<T>>) -> Self {
        let samples = vec![T::zero(); grid.cells() + 1];
        Self {
            gamma,
            grid,
            samples,
        }
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn grid(&self) -> &Arc<GradedGrid<T>> {
        &self.grid
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    /// The limit value f_a.
    pub fn limit(&self) -> T {
        self.samples[0]
    }

    /// Piecewise-linear interpolant W(t) of the regularized samples, t ∈ [a, c].
    pub fn eval_reg(&self, t: T) -> Result<T> {
        let g = &self.grid;
        if !(t >= g.a() && t <= g.c()) {
            return Err(self.out_of_range(t));
        }
        Ok(self.interp(t))
    }

    pub(crate) fn interp(&self, t: T) -> T {
        let g = &self.grid;
        let j = g.cell_of(t);
        let (t0, t1) = (g.nodes()[j], g.nodes()[j + 1]);
        let (w0, w1) = (self.samples[j], self.samples[j + 1]);
        if t <= t0 {
            return w0;
        }
        if t >= t1 {
            return w1;
        }
        let s = (t - t0) / (t1 - t0);
        w0 + (w1 - w0) * s
    }

    /// f(t) = W(t) / (t − a)^γ for a < t ≤ c.
    pub fn eval_raw(&self, t: T) -> Result<T> {
        let g = &self.grid;
        if !(t > g.a() && t <= g.c()) {
            return Err(self.out_of_range(t));
        }
        Ok(self.interp(t) / (t - g.a()).powf(self.gamma))
    }

    /// ‖f‖_{L∞(a,γ;b,c_w)}: max of |W| over the nodes inside [b, c_w] and the
    /// interpolant at both window ends.
    pub fn norm_window(&self, b: T, c_w: T) -> Result<T> {
        let g = &self.grid;
        if !(b > g.a() && b <= c_w && c_w <= g.c()) {
            return Err(Error::Window {
                a: g.a().as_f64(),
                b: b.as_f64(),
                c: c_w.as_f64(),
                end: g.c().as_f64(),
            });
        }
        let mut m = self.interp(b).abs().max(self.interp(c_w).abs());
        for (t, w) in g.nodes().iter().zip(&self.samples) {
            if *t >= b && *t <= c_w {
                m = m.max(w.abs());
            }
        }
        Ok(m)
    }

    /// ‖f‖_{L∞(a,γ;c)} = max(|w_0|, max_j |w_j|).
    pub fn norm_full(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, w| m.max(w.abs()))
    }

    /// Same function viewed in X_{new_gamma}: w_j ↦ (t_j − a)^{new−old} w_j,
    /// with the supplied limit at `a`.
    pub fn reweighted(&self, new_gamma: T, limit: T) -> Result<Self> {
        let shift = new_gamma - self.gamma;
        let samples = self
            .samples
            .iter()
            .zip(self.grid.offsets())
            .enumerate()
            .map(|(j, (&w, &u))| if j == 0 { limit } else { w * u.powf(shift) })
            .collect();
        Self::from_samples(new_gamma, self.grid.clone(), samples)
    }

    /// Max regularized distance between two functions on the same grid and weight.
    pub fn max_diff(&self, other: &Self) -> Result<T> {
        self.check_compatible(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs())))
    }

    /// `self + scale · other`.
    pub fn add_scaled(&self, scale: T, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(x, y)| *x + scale * *y)
            .collect();
        Self::from_samples(self.gamma, self.grid.clone(), samples)
    }

    pub fn scaled(&self, scale: T) -> Self {
        Self {
            gamma: self.gamma,
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|w| *w * scale).collect(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.gamma != other.gamma || *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn out_of_range(&self, t: T) -> Error {
        Error::OutOfRange {
            t: t.as_f64(),
            lo: self.grid.a().as_f64(),
            hi: self.grid.c().as_f64(),
        }
    }
}
