//! Single-channel protocol: decide between two gray levels from the number
//! of absorbed particles alone.

use super::Hypothesis;
use crate::error::{Error, Result};
use crate::special::binomial_cdf;

/// Upper bound on the bracketing search in [`required_particles`].
const MAX_PARTICLES: u64 = 1 << 40;

/// Relative distance from an integer below which the real-valued decision
/// level is treated as landing exactly on a lattice point.
const INTEGER_LEVEL_TOLERANCE: f64 = 1e-9;

/// What a [`BinomialRule`] does over the whole range `0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinomialDecision {
    /// Every outcome is assigned to `H1` (decision level at or above `N`).
    AlwaysH1,
    /// Every outcome is assigned to `H2` (decision level below 0).
    AlwaysH2,
    /// `n_a <= level` chooses `H1`, otherwise `H2`.
    Level(u64),
}

/// Decision level on the absorbed count.
///
/// `threshold` is the greatest integer not exceeding the real-valued level,
/// clamped into `[-1, N]`: `-1` encodes "always H2" and `N` "always H1".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialRule {
    pub threshold: i64,
    pub threshold_raw: f64,
    pub n_particles: u64,
}

impl BinomialRule {
    /// A rule that ignores the data and picks one hypothesis.
    pub fn constant(choice: Hypothesis, n_particles: u64) -> Self {
        let (threshold, threshold_raw) = match choice {
            Hypothesis::H1 => (n_particles as i64, f64::INFINITY),
            Hypothesis::H2 => (-1, f64::NEG_INFINITY),
        };
        Self {
            threshold,
            threshold_raw,
            n_particles,
        }
    }

    pub fn decision(&self) -> BinomialDecision {
        if self.threshold < 0 {
            BinomialDecision::AlwaysH2
        } else if self.threshold as u64 >= self.n_particles {
            BinomialDecision::AlwaysH1
        } else {
            BinomialDecision::Level(self.threshold as u64)
        }
    }

    pub fn decide(&self, n_absorbed: u64) -> Hypothesis {
        if (n_absorbed as i64) <= self.threshold {
            Hypothesis::H1
        } else {
            Hypothesis::H2
        }
    }
}

fn check_open_probability(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange { name, value })
    }
}

/// `ln R` for the binomial likelihood ratio of `H1` (prior `alpha`, absorption
/// `p_a1`) against `H2` at `n_absorbed` of `N`; the binomial coefficient cancels.
pub fn log_likelihood_ratio(
    p_a1: f64,
    p_a2: f64,
    alpha: f64,
    n_particles: u64,
    n_absorbed: f64,
) -> f64 {
    (alpha / (1.0 - alpha)).ln()
        + n_absorbed * (p_a1 / p_a2).ln()
        + (n_particles as f64 - n_absorbed) * ((1.0 - p_a1) / (1.0 - p_a2)).ln()
}

/// Optimum decision level from equal likelihoods `R = 1`:
///
/// `n_a^d = [ln((1 - alpha)/alpha) - N ln((1 - p_a1)/(1 - p_a2))]
///        / [ln(p_a1/p_a2) - ln((1 - p_a1)/(1 - p_a2))]`.
///
/// `H1` must be the less absorbing hypothesis.
pub fn binomial_threshold(
    p_a1: f64,
    p_a2: f64,
    alpha: f64,
    n_particles: u64,
) -> Result<BinomialRule> {
    check_open_probability("p_a1", p_a1)?;
    check_open_probability("p_a2", p_a2)?;
    check_open_probability("alpha", alpha)?;
    if n_particles == 0 {
        return Err(Error::ZeroParticles);
    }
    if p_a1 == p_a2 {
        return Err(Error::IndistinguishableHypotheses);
    }
    if p_a1 > p_a2 {
        return Err(Error::MisorderedHypotheses { p_a1, p_a2 });
    }
    let n = n_particles as f64;
    let transmit_log = ((1.0 - p_a1) / (1.0 - p_a2)).ln();
    let raw =
        (((1.0 - alpha) / alpha).ln() - n * transmit_log) / ((p_a1 / p_a2).ln() - transmit_log);

    let mut floor = raw.floor();
    // Outcomes exactly on R = 1 go to the larger prior.
    let nearest = raw.round();
    if (raw - nearest).abs() <= INTEGER_LEVEL_TOLERANCE * raw.abs().max(1.0)
        && Hypothesis::tie_break(alpha) == Hypothesis::H2
    {
        floor = nearest - 1.0;
    }
    let threshold = if floor < 0.0 {
        -1
    } else if floor >= n {
        n_particles as i64
    } else {
        floor as i64
    };
    Ok(BinomialRule {
        threshold,
        threshold_raw: raw,
        n_particles,
    })
}

/// Prior-weighted misclassification probability of `rule`:
///
/// `P_e = alpha [1 - I_{1-p_a1}(N - k, k + 1)] + (1 - alpha) I_{1-p_a2}(N - k, k + 1)`
///
/// with `k` the integer decision level.
pub fn binomial_error(
    p_a1: f64,
    p_a2: f64,
    alpha: f64,
    n_particles: u64,
    rule: &BinomialRule,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ProbabilityOutOfRange {
            name: "alpha",
            value: alpha,
        });
    }
    let k = rule.threshold;
    let miss_h1 = 1.0 - binomial_cdf(k, n_particles, p_a1)?;
    let miss_h2 = binomial_cdf(k, n_particles, p_a2)?;
    Ok(alpha * miss_h1 + (1.0 - alpha) * miss_h2)
}

/// [`binomial_error`] at the optimum level for `N` particles. Accepts the
/// hypotheses in either absorption order.
pub fn optimal_binomial_error(p_a1: f64, p_a2: f64, alpha: f64, n_particles: u64) -> Result<f64> {
    let (lo, hi, a) = if p_a1 <= p_a2 {
        (p_a1, p_a2, alpha)
    } else {
        (p_a2, p_a1, 1.0 - alpha)
    };
    let rule = binomial_threshold(lo, hi, a, n_particles)?;
    binomial_error(lo, hi, a, n_particles, &rule)
}

/// Mean number of absorbed particles, `N [alpha p_a1 + (1 - alpha) p_a2]`.
pub fn mean_absorbed(alpha: f64, p_a1: f64, p_a2: f64, n_particles: u64) -> f64 {
    n_particles as f64 * (alpha * p_a1 + (1.0 - alpha) * p_a2)
}

/// Smallest particle count reaching `target_pe` with the optimum binomial rule.
///
/// `P_e(N)` decreases overall but jumps whenever the integer decision level
/// moves, so the search brackets by doubling, bisects inside the bracket,
/// and then walks forward to the first `N` at which `P_e` stays within the
/// target for three consecutive counts. The returned `N` meets the target
/// and `N - 1` does not. Hypotheses may be given in either absorption order.
pub fn required_particles(p_a1: f64, p_a2: f64, alpha: f64, target_pe: f64) -> Result<u64> {
    check_open_probability("p_a1", p_a1)?;
    check_open_probability("p_a2", p_a2)?;
    check_open_probability("alpha", alpha)?;
    if p_a1 == p_a2 {
        return Err(Error::UnreachableTarget {
            target: target_pe,
            reason: "hypotheses are indistinguishable",
        });
    }
    if !(target_pe > 0.0 && target_pe < alpha.min(1.0 - alpha)) {
        return Err(Error::UnreachableTarget {
            target: target_pe,
            reason: "target must lie in (0, min(alpha, 1 - alpha))",
        });
    }
    let pe = |n: u64| optimal_binomial_error(p_a1, p_a2, alpha, n);
    let meets = |n: u64| -> Result<bool> { Ok(pe(n)? <= target_pe) };

    let mut hi = 1u64;
    while !meets(hi)? {
        hi *= 2;
        if hi > MAX_PARTICLES {
            return Err(Error::UnreachableTarget {
                target: target_pe,
                reason: "particle count exceeds search limit",
            });
        }
    }
    let mut lo = hi / 2;
    // Invariant: lo fails (or is 0), hi meets.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if meets(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut n = hi;
    loop {
        if meets(n)? && meets(n + 1)? && meets(n + 2)? {
            return Ok(n);
        }
        n += 1;
    }
}
