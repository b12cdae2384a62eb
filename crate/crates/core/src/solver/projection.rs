//! The dual feasible set and closed forms of the regularized Lagrangian.
//!
//! `Λ = {λ ≥ 0, ‖λ‖ ≤ √U · j_max / ω}`; for `ω = 0` only the orthant remains.
//! Closed forms take `J − b` directly, i.e. the constraint slacks at a fixed policy.

use crate::error::{Error, Result};
use crate::scalar::{dot, norm2, Scalar};

/// Radius of the dual ball, `None` when unregularized.
pub fn lambda_radius<T: Scalar>(omega: T, num_constraints: usize, j_max: T) -> Option<T> {
    (omega > T::zero()).then(|| T::from_count(num_constraints).sqrt() * j_max / omega)
}

/// Clamp to the orthant, then shrink onto the ball if outside.
/// This is the exact Euclidean projection onto the intersection.
pub fn project_onto<T: Scalar>(raw: &[T], radius: Option<T>) -> Vec<T> {
    let mut out: Vec<T> = raw.iter().map(|x| x.pos()).collect();
    if let Some(r) = radius {
        let n = norm2(&out);
        if n > r {
            let s = r / n;
            out.iter_mut().for_each(|x| *x *= s);
        }
    }
    out
}

pub fn project_lambda<T: Scalar>(raw: &[T], omega: T, j_max: T) -> Vec<T> {
    project_onto(raw, lambda_radius(omega, raw.len(), j_max))
}

fn require_omega<T: Scalar>(omega: T) -> Result<()> {
    if omega > T::zero() {
        Ok(())
    } else {
        Err(Error::unsupported("closed form requires omega > 0"))
    }
}

/// Maximizer of the regularized Lagrangian over λ: `(J − b)⁺ / ω`.
pub fn lambda_star_closed_form<T: Scalar>(slack: &[T], omega: T) -> Result<Vec<T>> {
    require_omega(omega)?;
    Ok(slack.iter().map(|s| s.pos() / omega).collect())
}

/// `H_ω = J₀ + ‖(J − b)⁺‖² / (2ω)`.
pub fn h_omega_closed_form<T: Scalar>(j0: T, slack: &[T], omega: T) -> Result<T> {
    require_omega(omega)?;
    let sq: T = slack.iter().map(|s| s.pos() * s.pos()).sum();
    Ok(j0 + sq / (T::lit(2.0) * omega))
}

/// `L_ω(v, λ) = J₀ + ⟨λ, J − b⟩ − (ω/2)‖λ‖²`.
pub fn lagrangian_value<T: Scalar>(j0: T, slack: &[T], lambda: &[T], omega: T) -> T {
    j0 + dot(lambda, slack) - omega / T::lit(2.0) * dot(lambda, lambda)
}

/// Weight of the dual gap in the potential when none is given.
pub const DEFAULT_CHI: f64 = 0.1;

/// Potential `a + χ b` with `a = H_ω(v) − H*` and `b = H_ω(v) − L_ω(v, λ)`.
pub fn potential_diag<T: Scalar>(
    j0: T,
    slack: &[T],
    lambda: &[T],
    omega: T,
    h_star: Option<T>,
    chi: T,
) -> Result<T> {
    let h_star = h_star.ok_or_else(|| Error::config("potential needs a reference H*"))?;
    let h = h_omega_closed_form(j0, slack, omega)?;
    Ok(h - h_star + chi * (h - lagrangian_value(j0, slack, lambda, omega)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_onto(&[-1.0, 2.0], Some(10.0)), vec![0.0, 2.0]);
        let p = project_onto(&[3.0_f64, 4.0], Some(2.5));
        assert!((p[0] - 1.5).abs() < 1e-15 && (p[1] - 2.0).abs() < 1e-15);
        assert_eq!(project_lambda(&[-3.0, 1e9], 0.0, 1.0), vec![0.0, 1e9]);
        let r = lambda_radius(0.5_f64, 4, 3.0).unwrap();
        assert!((r - 12.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let l = lambda_star_closed_form(&[0.5_f64, -0.2], 0.1).unwrap();
        assert!((l[0] - 5.0).abs() < 1e-12 && l[1] == 0.0);
        assert_eq!(
            lambda_star_closed_form(&[-0.1, 0.0], 0.3).unwrap(),
            vec![0.0, 0.0]
        );
        let h = h_omega_closed_form(-1.0_f64, &[0.5, -0.2], 0.1).unwrap();
        assert!((h - 0.25).abs() < 1e-12);
        assert_eq!(h_omega_closed_form(-0.7, &[-0.2], 0.1).unwrap(), -0.7);
        assert!(lambda_star_closed_form(&[0.1], 0.0).is_err());
        assert!(h_omega_closed_form(0.0, &[0.1], 0.0).is_err());
    }

    #[test]
    fn potential_examples() {
        let slack = [0.3_f64, -0.1];
        let omega = 0.2;
        let lstar = lambda_star_closed_form(&slack, omega).unwrap();
        let h = h_omega_closed_form(-0.5, &slack, omega).unwrap();
        let p = potential_diag(-0.5, &slack, &lstar, omega, Some(h), 0.1).unwrap();
        assert!(p.abs() < 1e-12);
        let p = potential_diag(-0.5, &slack, &lstar, omega, Some(h - 0.4), 0.1).unwrap();
        assert!((p - 0.4).abs() < 1e-12);
        assert!(potential_diag(-0.5, &slack, &lstar, omega, None, 0.1).is_err());
    }
}
