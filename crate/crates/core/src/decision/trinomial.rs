//! Two-channel protocol: the equal-likelihood line `n_z - a n_o = b`.

use super::{GrayModel, Hypothesis};
use crate::error::{Error, Result};
use crate::interferometer::ChannelProbabilities;

/// Pairwise decision line between two adjacent gray levels.
///
/// Which side belongs to `H1` is not read off the sign of the denominator of
/// `a`; it is fixed by evaluating the likelihood ratio directly at a witness
/// outcome, stored with its decision.
#[derive(Debug, Clone, PartialEq)]
pub struct TrinomialRule {
    pub slope_a: f64,
    pub intercept_b: f64,
    /// `ln[p_z(tau2) p_a(tau1) / (p_z(tau1) p_a(tau2))]`.
    pub denominator: f64,
    pub n_particles: u64,
    pub alpha: f64,
    /// `(n_z, n_o)` used to orient the line.
    pub witness: (u64, u64),
    pub witness_decision: Hypothesis,
    witness_side: f64,
}

/// Direct `ln R` of the trinomial likelihoods; the multinomial coefficient cancels.
fn direct_log_ratio(
    p1: &ChannelProbabilities,
    p2: &ChannelProbabilities,
    alpha: f64,
    n: u64,
    n_z: f64,
    n_o: f64,
) -> f64 {
    let n_a = n as f64 - n_z - n_o;
    (alpha / (1.0 - alpha)).ln()
        + n_z * (p1.p_z / p2.p_z).ln()
        + n_o * (p1.p_o / p2.p_o).ln()
        + n_a * (p1.p_a / p2.p_a).ln()
}

/// Coefficients of the equal-likelihood line between `probs1` (`H1`, prior
/// `alpha`) and `probs2` (`H2`, prior `1 - alpha`) for `N` particles:
///
/// `a = ln[p_o1 p_a2 / (p_o2 p_a1)] / D`,
/// `b = (N ln[p_a1 / p_a2] + ln[alpha / (1 - alpha)]) / D`,
/// `D = ln[p_z2 p_a1 / (p_z1 p_a2)]`.
pub fn trinomial_line(
    probs1: &ChannelProbabilities,
    probs2: &ChannelProbabilities,
    alpha: f64,
    n_particles: u64,
) -> Result<TrinomialRule> {
    for (name, p) in [("H1", probs1), ("H2", probs2)] {
        for value in p.as_array() {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::ProbabilityOutOfRange { name, value });
            }
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ProbabilityOutOfRange {
            name: "alpha",
            value: alpha,
        });
    }
    if n_particles == 0 {
        return Err(Error::ZeroParticles);
    }
    let denominator = ((probs2.p_z * probs1.p_a) / (probs1.p_z * probs2.p_a)).ln();
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::DegenerateGeometry);
    }
    let slope_a = ((probs1.p_o * probs2.p_a) / (probs2.p_o * probs1.p_a)).ln() / denominator;
    let n = n_particles as f64;
    let intercept_b =
        (n * (probs1.p_a / probs2.p_a).ln() + (alpha / (1.0 - alpha)).ln()) / denominator;

    let side_of = |n_z: f64, n_o: f64| n_z - slope_a * n_o - intercept_b;
    // All particles in the Zeno port, unless that point sits on the line.
    let witness = if side_of(n, 0.0) != 0.0 {
        (n_particles, 0)
    } else {
        (0, 0)
    };
    let (wz, wo) = (witness.0 as f64, witness.1 as f64);
    let ln_r = direct_log_ratio(probs1, probs2, alpha, n_particles, wz, wo);
    let witness_decision = if ln_r > 0.0 {
        Hypothesis::H1
    } else if ln_r < 0.0 {
        Hypothesis::H2
    } else {
        Hypothesis::tie_break(alpha)
    };
    Ok(TrinomialRule {
        slope_a,
        intercept_b,
        denominator,
        n_particles,
        alpha,
        witness,
        witness_decision,
        witness_side: side_of(wz, wo).signum(),
    })
}

impl TrinomialRule {
    /// Signed offset `n_z - a n_o - b`; zero on the line.
    pub fn offset(&self, n_z: f64, n_o: f64) -> f64 {
        n_z - self.slope_a * n_o - self.intercept_b
    }

    /// `ln R` reconstructed from the line coefficients: `-D (n_z - a n_o - b)`.
    pub fn log_likelihood_ratio(&self, n_z: f64, n_o: f64) -> f64 {
        -self.denominator * self.offset(n_z, n_o)
    }

    /// Side test. Points on the line follow the larger prior.
    pub fn decide(&self, n_z: u64, n_o: u64) -> Hypothesis {
        let side = self.offset(n_z as f64, n_o as f64);
        if side == 0.0 {
            Hypothesis::tie_break(self.alpha)
        } else if side.signum() == self.witness_side {
            self.witness_decision
        } else {
            self.witness_decision.other()
        }
    }

    /// Absorbed-count level when the orthogonal port is ignored (`n_o = 0`,
    /// `n_z = N - n_a`): `n_a^d = N - b`.
    pub fn binomial_limit_level(&self) -> f64 {
        self.n_particles as f64 - self.intercept_b
    }
}

/// Lines between each pair of adjacent levels, with the pair's priors
/// renormalized to sum to one.
pub fn adjacent_lines(
    model: &GrayModel,
    probs: &[ChannelProbabilities],
    n_particles: u64,
) -> Result<Vec<TrinomialRule>> {
    if probs.len() != model.len() {
        return Err(Error::InvalidModel(format!(
            "{} channel laws for {} levels",
            probs.len(),
            model.len()
        )));
    }
    model
        .levels()
        .windows(2)
        .zip(probs.windows(2))
        .map(|(levels, pair)| {
            let alpha = levels[0].alpha / (levels[0].alpha + levels[1].alpha);
            trinomial_line(&pair[0], &pair[1], alpha, n_particles)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{binomial_threshold, MlClassifier};
    use crate::interferometer::{zeno_probabilities, ApparatusConfig};

    fn zeno(loops: u32, tau: f64) -> ChannelProbabilities {
        zeno_probabilities(&ApparatusConfig::new(loops, tau).unwrap()).unwrap()
    }

    #[test]
    fn slope_ignores_prior_and_particle_count() {
        let (p1, p2) = (zeno(165, 0.8), zeno(165, 0.96));
        let base = trinomial_line(&p1, &p2, 0.5, 10).unwrap().slope_a;
        for alpha in [0.02, 0.3, 0.93] {
            for n in [1, 50, 10_000] {
                let rule = trinomial_line(&p1, &p2, alpha, n).unwrap();
                assert_eq!(rule.slope_a, base);
            }
        }
    }

    #[test]
    fn ignoring_orthogonal_port_recovers_binomial_level() {
        for &(pa1, pa2, alpha, n) in &[
            (0.02, 0.05, 0.3, 200u64),
            (0.076, 0.204, 0.97, 112),
            (0.3, 0.5, 0.5, 9),
        ] {
            let tiny = 1e-12;
            let p1 = ChannelProbabilities {
                p_z: 1.0 - pa1 - tiny,
                p_o: tiny,
                p_a: pa1,
            };
            let p2 = ChannelProbabilities {
                p_z: 1.0 - pa2 - tiny,
                p_o: tiny,
                p_a: pa2,
            };
            let rule = trinomial_line(&p1, &p2, alpha, n).unwrap();
            let binomial = binomial_threshold(pa1, pa2, alpha, n).unwrap();
            let diff = (rule.binomial_limit_level() - binomial.threshold_raw).abs();
            assert!(
                diff < 1e-6 * binomial.threshold_raw.abs().max(1.0),
                "{diff}"
            );
        }
    }

    #[test]
    fn line_has_unit_ratio_and_separates_sides() {
        let (p1, p2) = (zeno(40, 0.7), zeno(40, 0.8));
        let rule = trinomial_line(&p1, &p2, 0.6, 60).unwrap();
        // Points exactly on the line.
        for n_o in [0.0, 3.5, 10.0] {
            let n_z = rule.intercept_b + rule.slope_a * n_o;
            let ln_r = direct_log_ratio(&p1, &p2, 0.6, 60, n_z, n_o);
            assert!(ln_r.abs() < 1e-9, "{ln_r}");
        }
        // Lattice points: line-derived ln R agrees with direct evaluation.
        for n_z in 0..=60u64 {
            for n_o in 0..=(60 - n_z) {
                let direct = direct_log_ratio(&p1, &p2, 0.6, 60, n_z as f64, n_o as f64);
                let via_line = rule.log_likelihood_ratio(n_z as f64, n_o as f64);
                assert!((direct - via_line).abs() < 1e-9 * direct.abs().max(1.0));
                if direct.abs() > 1e-9 {
                    let expected = if direct > 0.0 {
                        Hypothesis::H1
                    } else {
                        Hypothesis::H2
                    };
                    assert_eq!(rule.decide(n_z, n_o), expected);
                }
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let p = zeno(40, 0.7);
        assert_eq!(
            trinomial_line(&p, &p, 0.5, 10),
            Err(Error::DegenerateGeometry)
        );
        let white = zeno(40, 1.0);
        assert!(trinomial_line(&p, &white, 0.5, 10).is_err());
        assert!(trinomial_line(&p, &zeno(40, 0.8), 0.0, 10).is_err());
    }

    #[test]
    fn lines_agree_with_argmax_for_two_levels() {
        let (p1, p2) = (zeno(165, 0.96), zeno(165, 0.99));
        let model = GrayModel::two_level(0.96, 0.99, 0.7).unwrap();
        let lines = adjacent_lines(&model, &[p1, p2], 60).unwrap();
        assert_eq!(lines.len(), 1);
        let clf = MlClassifier::from_model(&model, &[p1, p2], 60).unwrap();
        for n_z in 0..=60u64 {
            for n_o in 0..=(60 - n_z) {
                let ln_r = lines[0].log_likelihood_ratio(n_z as f64, n_o as f64);
                if ln_r.abs() < 1e-9 {
                    continue;
                }
                let by_line = match lines[0].decide(n_z, n_o) {
                    Hypothesis::H1 => 0,
                    Hypothesis::H2 => 1,
                };
                assert_eq!(by_line, clf.classify(n_z, n_o).unwrap());
            }
        }
    }

    #[test]
    fn unit_slope_makes_boundaries_orthogonal() {
        // Scan L for a regime with a close to 1.
        let (t1, t2) = (0.96, 0.99);
        let best = (2..400u32)
            .filter_map(|l| trinomial_line(&zeno(l, t1), &zeno(l, t2), 0.5, 100).ok())
            .min_by(|x, y| (x.slope_a - 1.0).abs().total_cmp(&(y.slope_a - 1.0).abs()))
            .unwrap();
        assert!((best.slope_a - 1.0).abs() < 0.05, "{}", best.slope_a);
        // Line direction (a, 1) against the binomial boundary direction (1, -1).
        let cos = (best.slope_a - 1.0) / ((best.slope_a.powi(2) + 1.0).sqrt() * 2f64.sqrt());
        assert!(cos.abs() < 0.03);
    }
}
