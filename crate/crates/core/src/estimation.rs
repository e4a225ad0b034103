//! Cramer-Rao lower bounds for estimating `T = tau^2`.
//!
//! Both setups count binomially (transmitted vs absorbed), so the Fisher
//! information is `N (dp/dT)^2 / (p (1 - p))`. In the standard setup this
//! gives `tau^2 (1 - tau^2) / N`; in the Zeno regime, with the leading-order
//! absorption law, `4 tau^2 (1 - tau)^3 (1 + tau) L / (pi^2 N)`. Rewritten in
//! terms of the expected number of absorbed particles both collapse to
//! `tau (1 - tau^2) / sqrt(N_a)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::interferometer::{
    asymptotic_absorption, zeno_probabilities, zeno_threshold, ApparatusConfig,
};

fn check_interior_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::TauOutOfRange(tau))
    }
}

/// Fisher information about `T` carried by `N` binomial trials whose success
/// probability is `p(T)` with slope `dp/dT`.
pub fn binomial_fisher_information(n_particles: f64, p: f64, dp_dt: f64) -> f64 {
    n_particles * dp_dt * dp_dt / (p * (1.0 - p))
}

/// `(Delta T_st)^2 >= tau^2 (1 - tau^2) / N`.
pub fn crlb_standard(tau: f64, n_particles: u64) -> Result<f64> {
    check_interior_tau(tau)?;
    if n_particles == 0 {
        return Err(Error::ZeroParticles);
    }
    let t = tau * tau;
    Ok(t * (1.0 - t) / n_particles as f64)
}

/// `(Delta T_Ze)^2 >= 4 tau^2 (1 - tau)^3 (1 + tau) L / (pi^2 N)`, valid in
/// the Zeno regime only.
pub fn crlb_zeno(tau: f64, n_particles: u64, loops: u32) -> Result<f64> {
    check_interior_tau(tau)?;
    if n_particles == 0 {
        return Err(Error::ZeroParticles);
    }
    let cfg = ApparatusConfig::new(loops, tau)?;
    if !cfg.in_zeno_regime() {
        return Err(Error::OutsideZenoRegime {
            tau,
            loops,
            threshold: zeno_threshold(loops),
        });
    }
    Ok(
        4.0 * tau * tau * (1.0 - tau).powi(3) * (1.0 + tau) * f64::from(loops)
            / (PI * PI * n_particles as f64),
    )
}

/// Common bound on the standard deviation of `T` given `N_a` absorbed
/// particles: `tau (1 - tau^2) / sqrt(N_a)`.
pub fn crlb_per_absorbed(tau: f64, n_absorbed: f64) -> Result<f64> {
    check_interior_tau(tau)?;
    if n_absorbed.is_nan() || n_absorbed <= 0.0 {
        return Err(Error::InvalidModel(format!(
            "absorbed particle count must be positive, got {n_absorbed}"
        )));
    }
    Ok(tau * (1.0 - tau * tau) / n_absorbed.sqrt())
}

/// Both bounds for one `(tau, N, L)` together with the absorbed-particle
/// budgets that make them coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbReport {
    pub tau: f64,
    pub n_particles: u64,
    pub loops: u32,
    pub variance_bound_standard: f64,
    pub variance_bound_zeno: f64,
    /// `tau (1 - tau^2) / sqrt(N_a^st)`.
    pub bound_per_absorbed: f64,
    pub n_absorbed_standard: f64,
    /// `N p_a` with the leading-order absorption law.
    pub n_absorbed_zeno: f64,
    /// `N p_a` with the exact absorption probability.
    pub n_absorbed_zeno_exact: f64,
}

impl CrlbReport {
    pub fn new(tau: f64, n_particles: u64, loops: u32) -> Result<Self> {
        let variance_bound_standard = crlb_standard(tau, n_particles)?;
        let variance_bound_zeno = crlb_zeno(tau, n_particles, loops)?;
        let n = n_particles as f64;
        let n_absorbed_standard = n * (1.0 - tau * tau);
        let n_absorbed_zeno = n * asymptotic_absorption(tau, loops);
        let exact = zeno_probabilities(&ApparatusConfig::new(loops, tau)?)?;
        Ok(Self {
            tau,
            n_particles,
            loops,
            variance_bound_standard,
            variance_bound_zeno,
            bound_per_absorbed: crlb_per_absorbed(tau, n_absorbed_standard)?,
            n_absorbed_standard,
            n_absorbed_zeno,
            n_absorbed_zeno_exact: n * exact.p_a,
        })
    }

    /// `|sqrt(var_st) - tau (1 - tau^2) / sqrt(N_a^st)|`.
    pub fn residual_standard(&self) -> f64 {
        (self.variance_bound_standard.sqrt() - self.bound_per_absorbed).abs()
    }

    /// Relative gap between `sqrt(var_Ze)` and the per-absorbed bound at
    /// `N_a^Ze`, using the asymptotic or the exact absorption count.
    pub fn residual_zeno(&self, exact: bool) -> f64 {
        let n_a = if exact {
            self.n_absorbed_zeno_exact
        } else {
            self.n_absorbed_zeno
        };
        let per_absorbed = self.tau * (1.0 - self.tau * self.tau) / n_a.sqrt();
        (self.variance_bound_zeno.sqrt() - per_absorbed).abs() / per_absorbed
    }
}
