//! Finite differences, grid search and Gauss-Hermite quadrature.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Central differences `(f(x + h e_i) − f(x − h e_i)) / 2h`.
pub fn fd_gradient<T: Scalar>(f: impl Fn(&[T]) -> T, x: &[T], h: T) -> Result<Vec<T>> {
    if !(h > T::zero()) {
        return Err(Error::config("finite-difference step must be positive"));
    }
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            if !(up.is_finite() && down.is_finite()) {
                return Err(Error::NonFinite {
                    iteration: i,
                    what: "finite-difference evaluation".into(),
                });
            }
            Ok((up - down) / (T::lit(2.0) * h))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Goal {
    Maximize,
    Minimize,
}

/// Largest grid the search accepts.
pub const GRID_POINT_CAP: f64 = 2e8;

/// Exhaustive search over the grid `lo + k · resolution` (plus `hi`) on each axis of a box.
///
/// Non-finite objective values mark infeasible points and are skipped.
/// Returns the best point and its value.
pub fn grid_search<T: Scalar>(
    f: impl Fn(&[T]) -> T,
    bounds: &[(T, T)],
    resolution: T,
    goal: Goal,
) -> Result<(Vec<T>, T)> {
    if bounds.is_empty() || bounds.len() > 3 {
        return Err(Error::unsupported(format!(
            "grid search supports 1 to 3 dimensions, got {}",
            bounds.len()
        )));
    }
    if !(resolution > T::zero()) {
        return Err(Error::config("grid resolution must be positive"));
    }
    let axes: Vec<Vec<T>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            if !(lo <= hi) {
                return Err(Error::config("grid bounds need lo <= hi"));
            }
            let steps = ((hi - lo) / resolution).as_f64().floor() as usize;
            let mut axis: Vec<T> = (0..=steps)
                .map(|k| lo + T::from_count(k) * resolution)
                .collect();
            if *axis.last().unwrap() < hi {
                axis.push(hi);
            }
            Ok(axis)
        })
        .collect::<Result<_>>()?;
    let total: f64 = axes.iter().map(|a| a.len() as f64).product();
    if total > GRID_POINT_CAP {
        return Err(Error::EnumerationTooLarge {
            size: total,
            cap: GRID_POINT_CAP,
        });
    }
    let better = |a: T, b: T| match goal {
        Goal::Maximize => a > b,
        Goal::Minimize => a < b,
    };
    let mut best: Option<(Vec<T>, T)> = None;
    let mut idx = vec![0usize; axes.len()];
    let mut point: Vec<T> = axes.iter().map(|a| a[0]).collect();
    loop {
        let v = f(&point);
        if v.is_finite() && best.as_ref().is_none_or(|(_, b)| better(v, *b)) {
            best = Some((point.clone(), v));
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == axes.len() {
                return best
                    .ok_or_else(|| Error::validation("objective is non-finite on the whole grid"));
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                point[d] = axes[d][idx[d]];
                break;
            }
            idx[d] = 0;
            point[d] = axes[d][0];
            d += 1;
        }
    }
}

/// Nodes and weights of `n`-point Gauss-Hermite quadrature for `∫ e^{−x²} f(x) dx`.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::config("quadrature needs at least one node"));
    }
    const PI_M4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0_f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PI_M4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::validation(format!(
                "Gauss-Hermite root {i} did not converge"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// `E[f(X)]` for `X ~ N(mean, var)` by `n`-point Gauss-Hermite quadrature.
pub fn gaussian_expectation<T: Scalar>(
    mean: T,
    var: T,
    n: usize,
    f: impl Fn(T) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    let (x, w) = gauss_hermite(n)?;
    let scale = (T::lit(2.0) * var).sqrt();
    let norm = T::PI().sqrt();
    let mut acc: Option<Vec<T>> = None;
    for (&xi, &wi) in x.iter().zip(&w) {
        let v = f(mean + scale * T::lit(xi))?;
        let wi = T::lit(wi) / norm;
        match &mut acc {
            None => acc = Some(v.into_iter().map(|y| wi * y).collect()),
            Some(a) => a.iter_mut().zip(v).for_each(|(a, y)| *a += wi * y),
        }
    }
    Ok(acc.expect("at least one node"))
}
