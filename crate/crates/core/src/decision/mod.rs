//! Minimum-error discrimination of gray levels from counted outcomes.
//!
//! Two protocols are covered. The binomial protocol looks only at the number
//! of absorbed particles and compares it with a single decision level. The
//! trinomial protocol uses both output ports; for two hypotheses its equal
//! likelihood locus is a straight line `n_z - a n_o = b` across the outcome
//! triangle. For `M` levels the [`MlClassifier`] picks the level with the
//! largest prior-weighted likelihood, which reproduces the strip-shaped
//! regions cut by the pairwise lines.

mod binomial;
mod trinomial;

pub use binomial::{
    binomial_error, binomial_threshold, log_likelihood_ratio, mean_absorbed,
    optimal_binomial_error, required_particles, BinomialDecision, BinomialRule,
};
pub use trinomial::{adjacent_lines, trinomial_line, TrinomialRule};

use crate::error::{Error, Result};
use crate::interferometer::ChannelProbabilities;
use crate::special::ln_choose;

/// Tolerance on prior sums.
const PRIOR_SUM_TOLERANCE: f64 = 1e-12;
/// Relative gap below which two log-likelihoods are treated as equal.
const TIE_TOLERANCE: f64 = 1e-12;

/// One of two competing hypotheses in a pairwise test. `H1` is the level
/// with the smaller transmission amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H1,
    H2,
}

impl Hypothesis {
    pub fn other(self) -> Self {
        match self {
            Hypothesis::H1 => Hypothesis::H2,
            Hypothesis::H2 => Hypothesis::H1,
        }
    }

    /// Equal-likelihood tie break: larger prior wins, `H1` on equal priors.
    pub fn tie_break(alpha: f64) -> Self {
        if alpha < 1.0 - alpha {
            Hypothesis::H2
        } else {
            Hypothesis::H1
        }
    }
}

/// A gray level: transmission amplitude and its frequency in the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrayLevel {
    pub tau: f64,
    pub alpha: f64,
}

/// Ordered set of gray-level hypotheses, ascending in `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayModel {
    levels: Vec<GrayLevel>,
}

impl GrayModel {
    pub fn new(levels: Vec<GrayLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidModel("no gray levels".into()));
        }
        for (i, level) in levels.iter().enumerate() {
            if !(0.0..1.0).contains(&level.tau) {
                return Err(Error::InvalidModel(format!(
                    "level {i}: tau = {} outside [0, 1)",
                    level.tau
                )));
            }
            if !(level.alpha > 0.0 && level.alpha <= 1.0) {
                return Err(Error::InvalidModel(format!(
                    "level {i}: alpha = {} outside (0, 1]",
                    level.alpha
                )));
            }
        }
        if let Some(w) = levels.windows(2).find(|w| w[0].tau >= w[1].tau) {
            return Err(Error::InvalidModel(format!(
                "tau values must be strictly increasing ({} then {})",
                w[0].tau, w[1].tau
            )));
        }
        let sum: f64 = levels.iter().map(|l| l.alpha).sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!("alphas sum to {sum}, not 1")));
        }
        Ok(Self { levels })
    }

    /// Levels from `(tau, weight)` pairs; the weights are divided by their
    /// sum to give the priors.
    pub fn from_weights(pairs: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = pairs.iter().map(|&(_, w)| w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidModel(format!("weights sum to {total}")));
        }
        Self::new(
            pairs
                .iter()
                .map(|&(tau, w)| GrayLevel {
                    tau,
                    alpha: w / total,
                })
                .collect(),
        )
    }

    /// Two levels with `P(H1) = alpha`, `tau1 < tau2`.
    pub fn two_level(tau1: f64, tau2: f64, alpha: f64) -> Result<Self> {
        Self::new(vec![
            GrayLevel { tau: tau1, alpha },
            GrayLevel {
                tau: tau2,
                alpha: 1.0 - alpha,
            },
        ])
    }

    pub fn levels(&self) -> &[GrayLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn priors(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.alpha).collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.tau).collect()
    }

    /// Prior-weighted mean absorption probability per particle.
    pub fn mean_absorption(&self, probs: &[ChannelProbabilities]) -> f64 {
        self.levels
            .iter()
            .zip(probs)
            .map(|(l, p)| l.alpha * p.p_a)
            .sum()
    }
}

/// `count * ln(p)` with `0 * ln 0 = 0`.
fn weighted_log(count: u64, ln_p: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * ln_p
    }
}

#[derive(Debug, Clone, Copy)]
struct LevelLogs {
    prior: f64,
    ln_prior: f64,
    ln_p_z: f64,
    ln_p_o: f64,
    ln_p_a: f64,
}

/// Prior-weighted maximum-likelihood classifier over the outcome triangle.
///
/// Scores drop the multinomial coefficient, which is common to all levels.
/// Zero priors and zero channel probabilities are allowed and give `-inf`
/// scores, so a degenerate prior always wins.
#[derive(Debug, Clone)]
pub struct MlClassifier {
    n_particles: u64,
    levels: Vec<LevelLogs>,
}

impl MlClassifier {
    pub fn new(priors: &[f64], probs: &[ChannelProbabilities], n_particles: u64) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::ZeroParticles);
        }
        if priors.is_empty() || priors.len() != probs.len() {
            return Err(Error::InvalidModel(format!(
                "{} priors for {} channel laws",
                priors.len(),
                probs.len()
            )));
        }
        let levels = priors
            .iter()
            .zip(probs)
            .map(|(&prior, p)| {
                if !(0.0..=1.0).contains(&prior) {
                    return Err(Error::ProbabilityOutOfRange {
                        name: "prior",
                        value: prior,
                    });
                }
                Ok(LevelLogs {
                    prior,
                    ln_prior: prior.ln(),
                    ln_p_z: p.p_z.ln(),
                    ln_p_o: p.p_o.ln(),
                    ln_p_a: p.p_a.ln(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_particles,
            levels,
        })
    }

    pub fn from_model(
        model: &GrayModel,
        probs: &[ChannelProbabilities],
        n_particles: u64,
    ) -> Result<Self> {
        Self::new(&model.priors(), probs, n_particles)
    }

    pub fn n_particles(&self) -> u64 {
        self.n_particles
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    fn check_outcome(&self, n_z: u64, n_o: u64) -> Result<u64> {
        match n_z.checked_add(n_o) {
            Some(detected) if detected <= self.n_particles => Ok(self.n_particles - detected),
            _ => Err(Error::OutcomeOutsideTriangle {
                n_z,
                n_o,
                n_particles: self.n_particles,
            }),
        }
    }

    fn score_unchecked(&self, level: usize, n_z: u64, n_o: u64, n_a: u64) -> f64 {
        let l = &self.levels[level];
        if l.prior == 0.0 {
            return f64::NEG_INFINITY;
        }
        l.ln_prior
            + weighted_log(n_z, l.ln_p_z)
            + weighted_log(n_o, l.ln_p_o)
            + weighted_log(n_a, l.ln_p_a)
    }

    /// `ln[alpha_i p_z^n_z p_o^n_o p_a^n_a]`, the log posterior up to a
    /// level-independent constant.
    pub fn score(&self, level: usize, n_z: u64, n_o: u64) -> Result<f64> {
        let n_a = self.check_outcome(n_z, n_o)?;
        Ok(self.score_unchecked(level, n_z, n_o, n_a))
    }

    fn argmax(&self, n_z: u64, n_o: u64, n_a: u64) -> usize {
        let mut best = 0;
        let mut best_score = self.score_unchecked(0, n_z, n_o, n_a);
        for i in 1..self.levels.len() {
            let s = self.score_unchecked(i, n_z, n_o, n_a);
            let tied = if s.is_finite() && best_score.is_finite() {
                (s - best_score).abs() <= TIE_TOLERANCE * s.abs().max(best_score.abs()).max(1.0)
            } else {
                s == best_score
            };
            if tied {
                if self.levels[i].prior > self.levels[best].prior {
                    best = i;
                    best_score = s;
                }
            } else if s > best_score {
                best = i;
                best_score = s;
            }
        }
        best
    }

    /// Gray-level index with the largest prior-weighted likelihood.
    /// Ties go to the larger prior, then to the lower index.
    pub fn classify(&self, n_z: u64, n_o: u64) -> Result<usize> {
        let n_a = self.check_outcome(n_z, n_o)?;
        Ok(self.argmax(n_z, n_o, n_a))
    }

    /// Exact Bayes error of this classifier when outcomes follow `laws`
    /// (one law per level, weighted by the classifier's priors), by
    /// enumeration of the outcome triangle. `O(N^2 M)`.
    pub fn expected_error(&self, laws: &[ChannelProbabilities]) -> f64 {
        assert_eq!(laws.len(), self.levels.len());
        let n = self.n_particles;
        let mut correct = 0.0;
        for n_z in 0..=n {
            for n_o in 0..=(n - n_z) {
                let n_a = n - n_z - n_o;
                let k = self.argmax(n_z, n_o, n_a);
                correct += self.levels[k].prior * multinomial_pmf(n, n_z, n_o, &laws[k]);
            }
        }
        (1.0 - correct).max(0.0)
    }
}

/// Probability of `(n_z, n_o, n - n_z - n_o)` under the trinomial law.
pub fn multinomial_pmf(n: u64, n_z: u64, n_o: u64, law: &ChannelProbabilities) -> f64 {
    if n_z + n_o > n {
        return 0.0;
    }
    let n_a = n - n_z - n_o;
    let ln = ln_choose(n, n_z)
        + ln_choose(n - n_z, n_o)
        + weighted_log(n_z, law.p_z.ln())
        + weighted_log(n_o, law.p_o.ln())
        + weighted_log(n_a, law.p_a.ln());
    ln.exp()
}

/// Prior-weighted maximum-likelihood gray level for outcome `(n_z, n_o)`.
pub fn classify(
    outcome: (u64, u64),
    model: &GrayModel,
    channel_probs: &[ChannelProbabilities],
    n_particles: u64,
) -> Result<usize> {
    if channel_probs.len() != model.len() {
        return Err(Error::InvalidModel(format!(
            "{} channel laws for {} levels",
            channel_probs.len(),
            model.len()
        )));
    }
    MlClassifier::from_model(model, channel_probs, n_particles)?.classify(outcome.0, outcome.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{zeno_probabilities, ApparatusConfig};

    fn zeno(loops: u32, tau: f64) -> ChannelProbabilities {
        zeno_probabilities(&ApparatusConfig::new(loops, tau).unwrap()).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(GrayModel::new(vec![]).is_err());
        assert!(GrayModel::two_level(0.9, 0.8, 0.5).is_err());
        assert!(GrayModel::two_level(0.8, 1.0, 0.5).is_err());
        assert!(GrayModel::two_level(0.8, 0.9, 0.0).is_err());
        assert!(GrayModel::new(vec![
            GrayLevel {
                tau: 0.1,
                alpha: 0.5
            },
            GrayLevel {
                tau: 0.2,
                alpha: 0.6
            },
        ])
        .is_err());
        let m = GrayModel::new(vec![
            GrayLevel {
                tau: 0.8,
                alpha: 0.93,
            },
            GrayLevel {
                tau: 0.96,
                alpha: 0.07,
            },
        ])
        .unwrap();
        assert_eq!(m.len(), 2);
        // A single level with certainty is a valid (blank) model.
        assert!(GrayModel::new(vec![GrayLevel {
            tau: 0.5,
            alpha: 1.0
        }])
        .is_ok());
    }

    #[test]
    fn degenerate_prior_always_wins() {
        let probs = [zeno(165, 0.8), zeno(165, 0.96), zeno(165, 0.99)];
        let n = 30;
        for k in 0..3 {
            let mut priors = [0.0; 3];
            priors[k] = 1.0;
            let clf = MlClassifier::new(&priors, &probs, n).unwrap();
            for n_z in 0..=n {
                for n_o in 0..=(n - n_z) {
                    assert_eq!(clf.classify(n_z, n_o).unwrap(), k);
                }
            }
        }
    }

    #[test]
    fn outcome_outside_triangle_rejected() {
        let model = GrayModel::two_level(0.8, 0.9, 0.5).unwrap();
        let probs = [zeno(100, 0.8), zeno(100, 0.9)];
        assert!(matches!(
            classify((8, 3), &model, &probs, 10),
            Err(Error::OutcomeOutsideTriangle { .. })
        ));
        assert!(classify((7, 3), &model, &probs, 10).is_ok());
        assert!(classify((7, 3), &model, &probs[..1], 10).is_err());
    }

    #[test]
    fn ties_follow_larger_prior_then_lower_index() {
        let same = zeno(100, 0.7);
        let clf = MlClassifier::new(&[0.3, 0.7], &[same, same], 10).unwrap();
        assert_eq!(clf.classify(4, 2).unwrap(), 1);
        let clf = MlClassifier::new(&[0.5, 0.5], &[same, same], 10).unwrap();
        assert_eq!(clf.classify(4, 2).unwrap(), 0);
    }

    #[test]
    fn three_levels_cut_triangle_into_strips() {
        let model = GrayModel::from_weights(&[(0.8, 0.93), (0.96, 0.07), (0.99, 0.02)]).unwrap();
        let probs: Vec<_> = model.taus().iter().map(|&t| zeno(165, t)).collect();
        let n = 84;
        let clf = MlClassifier::from_model(&model, &probs, n).unwrap();
        let mut seen = [false; 3];
        for n_o in 0..=n {
            // Along each row of fixed n_o the decision changes monotonically.
            let row: Vec<usize> = (0..=(n - n_o))
                .map(|n_z| clf.classify(n_z, n_o).unwrap())
                .collect();
            for &k in &row {
                seen[k] = true;
            }
            assert!(row.windows(2).all(|w| w[0] >= w[1]), "n_o={n_o}: {row:?}");
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn trinomial_classifier_dominates_merged_binomial() {
        let cases = [
            (165, 0.8, 0.96, 0.93),
            (10, 0.96, 0.99, 0.3),
            (40, 0.5, 0.7, 0.5),
            (2000, 0.97, 0.99, 0.97),
        ];
        for &(loops, t1, t2, alpha) in &cases {
            let laws = [zeno(loops, t1), zeno(loops, t2)];
            let merged: Vec<_> = laws
                .iter()
                .map(|p| ChannelProbabilities {
                    p_z: p.detected(),
                    p_o: 0.0,
                    p_a: p.p_a,
                })
                .collect();
            for n in [5u64, 20, 60, 100] {
                let tri = MlClassifier::new(&[alpha, 1.0 - alpha], &laws, n).unwrap();
                let bin = MlClassifier::new(&[alpha, 1.0 - alpha], &merged, n).unwrap();
                let e_tri = tri.expected_error(&laws);
                let e_bin = bin.expected_error(&merged);
                assert!(e_tri <= e_bin + 1e-12, "L={loops} N={n}: {e_tri} > {e_bin}");
            }
        }
    }

    #[test]
    fn multinomial_pmf_sums_to_one() {
        let law = zeno(30, 0.9);
        let n = 25;
        let total: f64 = (0..=n)
            .flat_map(|z| (0..=(n - z)).map(move |o| (z, o)))
            .map(|(z, o)| multinomial_pmf(n, z, o, &law))
            .sum();
        assert!((total - 1.0).abs() < 1e-13);
    }
}
