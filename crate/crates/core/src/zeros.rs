//! Sign-change zero localization on the regularized interpolant.
//!
//! On (a, c] the weight (t−a)^γ is positive, so zeros of f and of its
//! regularized part coincide. Only sign changes and exact node zeros are
//! reported; tangential zeros are invisible to this search.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::weighted::WeightedFn;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ZeroSet<T> {
    pub zeros_f: Vec<T>,
    pub zeros_g: Vec<T>,
    pub window: (T, T),
}

impl<T: Real> ZeroSet<T> {
    pub fn locate(f: &WeightedFn<T>, g: &WeightedFn<T>, b: T, c_w: T) -> Result<Self> {
        if **f.grid() != **g.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            zeros_f: find_zeros(f, b, c_w)?,
            zeros_g: find_zeros(g, b, c_w)?,
            window: (b, c_w),
        })
    }

    /// Earliest zero of f and earliest zero of g, when both exist.
    pub fn first_pair(&self) -> Option<(T, T)> {
        Some((*self.zeros_f.first()?, *self.zeros_g.first()?))
    }
}

fn check_window<T: Real>(w: &WeightedFn<T>, b: T, c_w: T) -> Result<()> {
    let grid = w.grid();
    if !(grid.a() < b && b < c_w && c_w <= grid.c()) {
        return Err(Error::Window {
            a: grid.a().as_f64(),
            b: b.as_f64(),
            c: c_w.as_f64(),
            end: grid.c().as_f64(),
        });
    }
    Ok(())
}

/// Zeros of `w` inside [b, c_w], sorted and merged within 1e-12·(c−a).
pub fn find_zeros<T: Real>(w: &WeightedFn<T>, b: T, c_w: T) -> Result<Vec<T>> {
    check_window(w, b, c_w)?;
    let grid = w.grid();
    let tol = T::lit(1e-12) * grid.length();

    let mut pts = vec![b];
    pts.extend(grid.nodes().iter().copied().filter(|&t| t > b && t < c_w));
    pts.push(c_w);
    let vals: Vec<T> = pts.iter().map(|&t| w.interp(t)).collect();

    let mut zeros: Vec<T> = Vec::new();
    let push = |z: T, zeros: &mut Vec<T>| {
        if zeros.last().is_none_or(|&last| z - last > tol) {
            zeros.push(z);
        }
    };
    for k in 0..pts.len() {
        if vals[k] == T::zero() {
            push(pts[k], &mut zeros);
        } else if k + 1 < pts.len()
            && vals[k + 1] != T::zero()
            && (vals[k] < T::zero()) != (vals[k + 1] < T::zero())
        {
            push(refine(w, pts[k], pts[k + 1], vals[k], tol), &mut zeros);
        }
    }
    Ok(zeros)
}

/// Bisection on a bracketing segment, finished by the root of the chord.
fn refine<T: Real>(w: &WeightedFn<T>, mut lo: T, mut hi: T, mut f_lo: T, tol: T) -> T {
    let mut f_hi = w.interp(hi);
    while hi - lo > tol {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = w.interp(mid);
        if f_mid == T::zero() {
            return mid;
        }
        if (f_mid < T::zero()) == (f_lo < T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let z = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    z.max(lo).min(hi)
}

/// Earliest zero of `f` and of `g` inside [b, c_w], if both have one.
pub fn first_zero_pair<T: Real>(
    f: &WeightedFn<T>,
    g: &WeightedFn<T>,
    b: T,
    c_w: T,
) -> Result<Option<(T, T)>> {
    Ok(ZeroSet::locate(f, g, b, c_w)?.first_pair())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfde::{constant, solve_fite, SolveOptions};
    use crate::weighted::{build_grid, GradedGrid, Order};
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(c: f64, n: usize) -> Arc<GradedGrid<f64>> {
        Arc::new(build_grid(0.0, c, n, 2.0).unwrap())
    }

    fn sine(k: f64, c: f64, n: usize) -> WeightedFn<f64> {
        WeightedFn::from_callable(|t: f64| (k * t).sin(), 0.0, 0.25, grid(c, n)).unwrap()
    }

    #[test]
    fn single_sine_zero() {
        let w = sine(PI, 2.0, 512);
        let z = find_zeros(&w, 0.5, 1.5).unwrap();
        assert_eq!(z.len(), 1);
        assert!((z[0] - 1.0).abs() < 1e-5);
        assert!(w.interp(z[0]).abs() <= 1e-10 * w.norm_window(0.5, 1.5).unwrap());
    }

    #[test]
    fn positive_samples_have_no_zeros() {
        let w = WeightedFn::from_callable(|t: f64| 1.0 + t, 1.0, 0.25, grid(1.0, 64)).unwrap();
        assert!(find_zeros(&w, 0.1, 1.0).unwrap().is_empty());
    }

    #[test]
    fn node_zeros_reported_once() {
        let g = grid(1.0, 4);
        let w = WeightedFn::from_samples(0.25, g.clone(), vec![1.0, 0.0, 0.0, -1.0, 2.0]).unwrap();
        let z = find_zeros(&w, 0.01, 1.0).unwrap();
        // zeros at nodes 1 and 2, then a sign change in (t3, t4)
        assert_eq!(z.len(), 3);
        assert_eq!(z[0], g.nodes()[1]);
        assert_eq!(z[1], g.nodes()[2]);
        assert!(z[2] > g.nodes()[3] && z[2] < g.nodes()[4]);
    }

    #[test]
    fn window_errors() {
        let w = sine(1.0, 1.0, 16);
        assert!(matches!(
            find_zeros(&w, 0.0, 0.5),
            Err(Error::Window { .. })
        ));
        assert!(matches!(
            find_zeros(&w, 0.6, 0.5),
            Err(Error::Window { .. })
        ));
        assert!(matches!(
            find_zeros(&w, 0.1, 1.5),
            Err(Error::Window { .. })
        ));
    }

    #[test]
    fn zero_pairs() {
        let g = grid(3.0, 1024);
        let f = WeightedFn::from_callable(|t: f64| t - 1.0, -1.0, 0.25, g.clone()).unwrap();
        let d = WeightedFn::from_callable(|t: f64| t - 1.2, -1.2, 0.25, g.clone()).unwrap();
        let (t1, t2) = first_zero_pair(&f, &d, 0.5, 2.0).unwrap().unwrap();
        assert!((t1 - 1.0).abs() < 1e-12 && (t2 - 1.2).abs() < 1e-12);

        let pos = WeightedFn::from_callable(|_| 1.0, 1.0, 0.25, g).unwrap();
        assert_eq!(first_zero_pair(&f, &pos, 0.5, 2.0).unwrap(), None);
        let (z1, z2) = first_zero_pair(&f, &f, 0.5, 2.0).unwrap().unwrap();
        assert_eq!(z1, z2);
    }

    #[test]
    fn fite_solution_zeros_are_consistent() {
        let g = Arc::new(build_grid(0.0f64, 12.0, 1024, 2.0).unwrap());
        let o = Order::new(0.75).unwrap();
        let rep = solve_fite(constant(4.0), o, 0.0, 1.0, g, &SolveOptions::default()).unwrap();
        let z = find_zeros(&rep.f, 0.1, 12.0).unwrap();
        assert!(!z.is_empty());
        let norm = rep.f.norm_window(0.1, 12.0).unwrap();
        for t in z {
            assert!(rep.f.interp(t).abs() <= 1e-10 * norm);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn sine_zero_counts(k in 1u32..=20, b in 0.02f64..0.5, span in 0.5f64..2.5) {
            let c = 3.0;
            let c_w = (b + span).min(c);
            let w = sine(k as f64, c, 1024);
            let z = find_zeros(&w, b, c_w).unwrap();
            let kf = k as f64;
            let expected = ((kf * c_w / PI).floor() - (kf * b / PI).ceil() + 1.0).max(0.0) as usize;
            // keep clear of zeros sitting on the window edges
            let edge = |t: f64| ((kf * t / PI) - (kf * t / PI).round()).abs() < 1e-3;
            prop_assume!(!edge(b) && !edge(c_w));
            prop_assert_eq!(z.len(), expected);
            prop_assert!(z.windows(2).all(|p| p[0] < p[1]));
            prop_assert!(z.iter().all(|&t| t >= b && t <= c_w));
        }

        #[test]
        fn refinement_stays_in_bracket(vals in prop::collection::vec(-1.0f64..1.0, 9)) {
            let g = grid(1.0, 8);
            let w = WeightedFn::from_samples(0.25, g.clone(), vals.clone()).unwrap();
            let z = find_zeros(&w, 1e-3, 1.0).unwrap();
            for t in z {
                let j = g.cell_of(t);
                let (lo, hi) = (g.nodes()[j], g.nodes()[j + 1]);
                prop_assert!(t >= lo && t <= hi);
                prop_assert!(w.interp(t).abs() <= 1e-10);
            }
        }
    }
}
