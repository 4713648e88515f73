//! Closed-form power and radius calculators for the complete-graph
//! Gaussian regime.
//!
//! These express how large a change must be, measured in expected
//! gap-spanning distance, for the central-split test at level alpha to
//! reach power 1 - beta, plus the information-theoretic minimum radius any
//! test needs and the null expectation of the gap weight. They are pure
//! formula evaluations used for documentation figures and property tests;
//! nothing here touches data.

use crate::error::{Error, Result};
use crate::specialfn::f_quantile;

/// Inputs for the power calculators.
///
/// `mu_l_sq` and `mu_r_sq` are the expected spanning distances of the two
/// half-window graphs; they are free parameters of the guarantee, with a
/// Gaussian complete-graph default available via
/// [`default_mean_spanning_sq`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerInputs {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub mu_l_sq: f64,
    pub mu_r_sq: f64,
}

impl PowerInputs {
    /// Inputs with explicit half-window spanning expectations.
    pub fn new(
        n: usize,
        d: usize,
        alpha: f64,
        beta: f64,
        sigma2: f64,
        mu_l_sq: f64,
        mu_r_sq: f64,
    ) -> Result<Self> {
        let inputs = PowerInputs {
            n,
            d,
            alpha,
            beta,
            sigma2,
            mu_l_sq,
            mu_r_sq,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    /// Inputs with the Gaussian complete-graph plug-in for both halves.
    pub fn with_default_plugins(
        n: usize,
        d: usize,
        alpha: f64,
        beta: f64,
        sigma2: f64,
    ) -> Result<Self> {
        let mu = default_mean_spanning_sq(n, d, sigma2)?;
        Self::new(n, d, alpha, beta, sigma2, mu, mu)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.d == 0 {
            return Err(Error::domain("need n >= 2 and d >= 1"));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::domain(format!("{name} must lie in (0,1)")));
            }
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::domain("sigma2 must be positive"));
        }
        if self.mu_l_sq < 0.0 || self.mu_r_sq < 0.0 {
            return Err(Error::domain("spanning expectations must be nonnegative"));
        }
        Ok(())
    }
}

/// Expected complete-graph spanning distance of n i.i.d. N(mu, sigma2 I_d)
/// points: n(n-1)/2 pairs, each with expectation 2 sigma2 d.
pub fn default_mean_spanning_sq(n: usize, d: usize, sigma2: f64) -> Result<f64> {
    if n == 0 || d == 0 || !(sigma2 > 0.0) {
        return Err(Error::domain("need n >= 1, d >= 1, sigma2 > 0"));
    }
    Ok(sigma2 * (n * (n - 1) * d) as f64)
}

/// The linear coefficients of a power guarantee: value = c1 * (shift term
/// + c2 * sigma2) for the mean case, value = c1 * mu + c2 * sigma2 for the
/// variance cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConstants {
    pub c1: f64,
    pub c2: f64,
}

/// Coefficients of the mean-change guarantee at (n, d, alpha, beta).
///
/// c1 = 5 (N/D) F^{-1}(1 - alpha; N, D) with N = d, D = 2(n-1)d;
/// c2 = (D + 2 sqrt(D L) + 4 L) - (5/4)(N - 2 sqrt(N L) - 10 L) with
/// L = ln(2 / beta).
pub fn delta_mu_constants(inputs: &PowerInputs) -> Result<PowerConstants> {
    inputs.validate()?;
    let num = inputs.d as f64;
    let den = (2 * (inputs.n - 1) * inputs.d) as f64;
    let l = (2.0 / inputs.beta).ln();
    let c1 = 5.0 * (num / den) * f_quantile(1.0 - inputs.alpha, num, den)?;
    let c2 = (den + 2.0 * (den * l).sqrt() + 4.0 * l)
        - 1.25 * (num - 2.0 * (num * l).sqrt() - 10.0 * l);
    Ok(PowerConstants { c1, c2 })
}

/// Gap-spanning distance sufficient for the mean test to reach power
/// 1 - beta at level alpha: c1 * (mu_l_sq + mu_r_sq + c2 * sigma2).
pub fn delta_mu(inputs: &PowerInputs) -> Result<f64> {
    let PowerConstants { c1, c2 } = delta_mu_constants(inputs)?;
    Ok(c1 * (inputs.mu_l_sq + inputs.mu_r_sq + c2 * inputs.sigma2))
}

/// Coefficients shared by the two variance-change guarantees. Both block
/// degrees of freedom equal (n-1)d, which makes the F quantile symmetric
/// between the upward and downward cases.
pub fn delta_sigma_constants(inputs: &PowerInputs) -> Result<PowerConstants> {
    inputs.validate()?;
    let df = ((inputs.n - 1) * inputs.d) as f64;
    let l = (2.0 / inputs.beta).ln();
    let f = f_quantile(1.0 - inputs.alpha, df, df)?;
    let c1 = 2.5 * f;
    let c2 = 1.25 * f * (df + 2.0 * (df * l).sqrt() + 4.0 * l)
        - 1.25 * (df - 2.0 * (df * l).sqrt() - 10.0 * l);
    Ok(PowerConstants { c1, c2 })
}

/// Spanning-distance growth sufficient for the upward variance test:
/// c1 * mu_r_sq + c2 * sigma2.
pub fn delta_sigma_plus(inputs: &PowerInputs) -> Result<f64> {
    let PowerConstants { c1, c2 } = delta_sigma_constants(inputs)?;
    Ok(c1 * inputs.mu_r_sq + c2 * inputs.sigma2)
}

/// Downward counterpart of [`delta_sigma_plus`]; the roles of the two
/// half-window graphs exchange, so the left expectation enters.
pub fn delta_sigma_minus(inputs: &PowerInputs) -> Result<f64> {
    let PowerConstants { c1, c2 } = delta_sigma_constants(inputs)?;
    Ok(c1 * inputs.mu_l_sq + c2 * inputs.sigma2)
}

/// The (alpha, beta) radius coefficient: sqrt(2 ln(1 + 4 (1-alpha-beta)^2)).
pub fn theta(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha must lie in (0,1)"));
    }
    if !(beta > 0.0 && beta < 1.0 - alpha) {
        return Err(Error::domain("beta must lie in (0, 1 - alpha)"));
    }
    let s = 1.0 - alpha - beta;
    Ok((2.0 * (1.0 + 4.0 * s * s).ln()).sqrt())
}

/// Minimum mean-shift radius any level-alpha test needs for power
/// 1 - beta: theta(alpha, beta) * sqrt(n d) * sigma2.
pub fn min_radius(alpha: f64, beta: f64, n: usize, d: usize, sigma2: f64) -> Result<f64> {
    if n == 0 || d == 0 || !(sigma2 > 0.0) {
        return Err(Error::domain("need n >= 1, d >= 1, sigma2 > 0"));
    }
    Ok(theta(alpha, beta)? * ((n * d) as f64).sqrt() * sigma2)
}

/// Null expectation of the gap-spanning distance between the two
/// half-window complete graphs: 2 sigma2 n^2 d.
pub fn gap_expectation(n: usize, d: usize, sigma2: f64) -> Result<f64> {
    if n == 0 || d == 0 || !(sigma2 > 0.0) {
        return Err(Error::domain("need n >= 1, d >= 1, sigma2 > 0"));
    }
    Ok(2.0 * sigma2 * (n * n * d) as f64)
}

/// (beta, delta_mu) pairs over a beta grid at fixed other inputs, for the
/// power-vs-beta figure.
pub fn delta_mu_series(base: &PowerInputs, betas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(betas.len());
    for &beta in betas {
        let inputs = PowerInputs { beta, ..*base };
        out.push((beta, delta_mu(&inputs)?));
    }
    Ok(out)
}
