//! Unified risk measures `ρ(C) = min_η E[f(C, η)] + g(η)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RiskMeasure<T> {
    ExpectedCost,
    MeanVariance { kappa: T },
    CVaR { alpha: T },
    Chance { n: T },
}

impl<T: Scalar> RiskMeasure<T> {
    pub fn mean_variance(kappa: T) -> Result<Self> {
        if !(kappa > T::zero()) {
            return Err(Error::config(format!(
                "mean-variance kappa {kappa} must be > 0"
            )));
        }
        Ok(Self::MeanVariance { kappa })
    }

    pub fn cvar(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::config(format!(
                "CVaR alpha {alpha} must lie in (0, 1)"
            )));
        }
        Ok(Self::CVaR { alpha })
    }

    pub fn chance(n: T) -> Result<Self> {
        if !(n >= T::zero()) {
            return Err(Error::config(format!("chance level {n} must be >= 0")));
        }
        Ok(Self::Chance { n })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::ExpectedCost => Ok(()),
            Self::MeanVariance { kappa } => Self::mean_variance(kappa).map(drop),
            Self::CVaR { alpha } => Self::cvar(alpha).map(drop),
            Self::Chance { n } => Self::chance(n).map(drop),
        }
    }

    pub fn needs_eta(&self) -> bool {
        matches!(self, Self::MeanVariance { .. } | Self::CVaR { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ExpectedCost => "expected_cost",
            Self::MeanVariance { .. } => "mean_variance",
            Self::CVaR { .. } => "cvar",
            Self::Chance { .. } => "chance",
        }
    }

    pub fn f(&self, c: T, eta: T) -> T {
        match *self {
            Self::ExpectedCost => c,
            Self::MeanVariance { kappa } => {
                (T::one() - T::lit(2.0) * kappa * eta) * c + kappa * c * c
            }
            Self::CVaR { alpha } => (c - eta).pos() / (T::one() - alpha),
            Self::Chance { n } => {
                if c >= n {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn g(&self, eta: T) -> T {
        match *self {
            Self::ExpectedCost | Self::Chance { .. } => T::zero(),
            Self::MeanVariance { kappa } => kappa * eta * eta,
            Self::CVaR { .. } => eta,
        }
    }

    /// `∂f/∂η`; for CVaR the subgradient with the kink `C = η` counted as active.
    pub fn f_eta_subgrad(&self, c: T, eta: T) -> Result<T> {
        match *self {
            Self::MeanVariance { kappa } => Ok(-T::lit(2.0) * kappa * c),
            Self::CVaR { alpha } => Ok(if c >= eta {
                -T::one() / (T::one() - alpha)
            } else {
                T::zero()
            }),
            _ => Err(Error::unsupported(format!(
                "{} does not depend on eta",
                self.name()
            ))),
        }
    }

    pub fn g_eta_grad(&self, eta: T) -> Result<T> {
        match *self {
            Self::MeanVariance { kappa } => Ok(T::lit(2.0) * kappa * eta),
            Self::CVaR { .. } => Ok(T::one()),
            _ => Err(Error::unsupported(format!(
                "{} does not depend on eta",
                self.name()
            ))),
        }
    }
}

/// Finite distribution over cost values.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDist<T> {
    support: Vec<T>,
    probs: Vec<T>,
}

impl<T: Scalar> DiscreteDist<T> {
    pub fn new(support: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::validation(
                "support and probabilities must be nonempty and equal length",
            ));
        }
        if probs.iter().any(|&p| !(p >= T::zero())) || support.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation(
                "probabilities must be nonnegative and values finite",
            ));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) {
            return Err(Error::validation(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { support, probs })
    }

    pub fn point(x: T) -> Self {
        Self {
            support: vec![x],
            probs: vec![T::one()],
        }
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn expect(&self, f: impl Fn(T) -> T) -> T {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&x, &p)| p * f(x))
            .sum()
    }

    pub fn mean(&self) -> T {
        self.expect(|x| x)
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// `E[f(C, η)] + g(η)` for a risk measure.
    pub fn risk_objective(&self, measure: &RiskMeasure<T>, eta: T) -> T {
        self.expect(|c| measure.f(c, eta)) + measure.g(eta)
    }
}

/// Closed-form value of a risk measure on a finite distribution.
pub fn exact_measure<T: Scalar>(dist: &DiscreteDist<T>, measure: &RiskMeasure<T>) -> T {
    match *measure {
        RiskMeasure::ExpectedCost => dist.mean(),
        RiskMeasure::MeanVariance { kappa } => dist.mean() + kappa * dist.variance(),
        RiskMeasure::CVaR { .. } => {
            // Piecewise linear and convex in η with kinks on the support: the minimum sits on one.
            dist.support
                .iter()
                .map(|&eta| dist.risk_objective(measure, eta))
                .fold(T::infinity(), T::min)
        }
        RiskMeasure::Chance { n } => dist.expect(|c| if c >= n { T::one() } else { T::zero() }),
    }
}

/// Auxiliary risk variables `η_0..η_U`.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskVars<T> {
    pub eta: Vec<T>,
}

impl<T: Scalar> RiskVars<T> {
    pub fn new(eta: Vec<T>) -> Self {
        Self { eta }
    }

    pub fn clamp(&mut self, upper: T) {
        for e in &mut self.eta {
            *e = e.max(T::zero()).min(upper);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn f_examples() {
        let cvar = RiskMeasure::cvar(0.95).unwrap();
        assert!(close(cvar.f(3.0, 2.0), 20.0));
        let mv = RiskMeasure::mean_variance(0.5).unwrap();
        assert!(close(mv.f(2.0, 1.0), 2.0));
        let ch = RiskMeasure::chance(2.0).unwrap();
        assert_eq!(ch.f(1.0, 0.0), 0.0);
        assert_eq!(ch.f(2.0, 0.0), 1.0);
        assert_eq!(RiskMeasure::ExpectedCost.f(0.7, 5.0), 0.7);
    }

    #[test]
    fn g_examples() {
        assert!(close(RiskMeasure::mean_variance(0.5).unwrap().g(3.0), 4.5));
        assert!(close(RiskMeasure::cvar(0.9).unwrap().g(1.2), 1.2));
        assert_eq!(RiskMeasure::<f64>::ExpectedCost.g(7.0), 0.0);
    }

    #[test]
    fn eta_derivatives() {
        let cvar = RiskMeasure::cvar(0.95).unwrap();
        assert!(close(cvar.f_eta_subgrad(3.0, 2.0).unwrap(), -20.0));
        assert_eq!(cvar.f_eta_subgrad(1.0, 2.0).unwrap(), 0.0);
        assert_eq!(cvar.g_eta_grad(42.0).unwrap(), 1.0);
        let mv = RiskMeasure::mean_variance(0.5).unwrap();
        assert!(close(mv.f_eta_subgrad(2.0, 0.0).unwrap(), -2.0));
        assert!(close(mv.g_eta_grad(3.0).unwrap(), 3.0));
        // η above every cost: only the g term remains
        assert_eq!(
            cvar.f_eta_subgrad(1.0, 5.0).unwrap() + cvar.g_eta_grad(5.0).unwrap(),
            1.0
        );
        assert!(RiskMeasure::<f64>::ExpectedCost
            .f_eta_subgrad(1.0, 0.0)
            .is_err());
        assert!(RiskMeasure::chance(1.0f64)
            .unwrap()
            .g_eta_grad(0.0)
            .is_err());
    }

    #[test]
    fn needs_eta_column() {
        assert!(!RiskMeasure::<f64>::ExpectedCost.needs_eta());
        assert!(RiskMeasure::mean_variance(1.0f64).unwrap().needs_eta());
        assert!(RiskMeasure::cvar(0.5f64).unwrap().needs_eta());
        assert!(!RiskMeasure::chance(1.0f64).unwrap().needs_eta());
    }

    #[test]
    fn parameter_validation() {
        assert!(RiskMeasure::cvar(1.0f64).is_err());
        assert!(RiskMeasure::cvar(0.0f64).is_err());
        assert!(RiskMeasure::mean_variance(0.0f64).is_err());
        assert!(RiskMeasure::chance(-1.0f64).is_err());
    }

    #[test]
    fn exact_measure_examples() {
        let point = DiscreteDist::point(5.0f64);
        assert!(close(
            exact_measure(&point, &RiskMeasure::cvar(0.9).unwrap()),
            5.0
        ));
        assert!(close(
            exact_measure(&point, &RiskMeasure::mean_variance(0.3).unwrap()),
            5.0
        ));
        assert!(close(
            exact_measure(&point, &RiskMeasure::chance(5.0).unwrap()),
            1.0
        ));

        let two = DiscreteDist::new(vec![0.0f64, 10.0], vec![0.5, 0.5]).unwrap();
        assert!(close(
            exact_measure(&two, &RiskMeasure::cvar(0.5).unwrap()),
            10.0
        ));
        assert!(close(
            exact_measure(&two, &RiskMeasure::mean_variance(0.1).unwrap()),
            7.5
        ));
        assert!(close(exact_measure(&two, &RiskMeasure::ExpectedCost), 5.0));
    }

    #[test]
    fn invalid_distributions() {
        assert!(DiscreteDist::new(vec![1.0f64, 2.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteDist::new(vec![1.0f64], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDist::new(vec![1.0f64, 2.0], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn clamp_eta() {
        let mut v = RiskVars::new(vec![-1.0f64, 0.5, 7.0]);
        v.clamp(3.0);
        assert_eq!(v.eta, vec![0.0, 0.5, 3.0]);
    }
}
