//! Monte Carlo tomographic reconstruction.
//!
//! Every pixel of a ground-truth [`GrayImage`] is illuminated with `N`
//! particles; the counts are drawn from the setup's channel law and the
//! gray level is decided by the prior-weighted maximum-likelihood rule.
//! Each pixel draws from its own ChaCha stream selected by the pixel index,
//! so results do not depend on scheduling or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::decision::{mean_absorbed, required_particles, GrayModel, MlClassifier};
use crate::error::{Error, Result};
use crate::interferometer::{
    check_tau, standard_probabilities, zeno_probabilities, zeno_probabilities_asymptotic,
    ApparatusConfig, ChannelProbabilities,
};

/// 2D grid of gray-level indices, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<usize>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<usize>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Fraction of pixels at each of `n_levels` indices.
    pub fn level_frequencies(&self, n_levels: usize) -> Vec<f64> {
        let mut counts = vec![0usize; n_levels];
        for &p in &self.pixels {
            if p < n_levels {
                counts[p] += 1;
            }
        }
        counts
            .into_iter()
            .map(|c| c as f64 / self.pixels.len() as f64)
            .collect()
    }

    fn check_levels(&self, n_levels: usize) -> Result<()> {
        match self.pixels.iter().position(|&p| p >= n_levels) {
            Some(i) => Err(Error::InvalidImage(format!(
                "pixel {i} has level {} but the model has {n_levels} levels",
                self.pixels[i]
            ))),
            None => Ok(()),
        }
    }
}

/// Counts for one illuminated pixel; `n_z + n_o + n_a = N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PixelOutcome {
    pub n_z: u64,
    pub n_o: u64,
    pub n_a: u64,
}

impl PixelOutcome {
    pub fn total(&self) -> u64 {
        self.n_z + self.n_o + self.n_a
    }
}

/// Counts for one pixel of the single-pass experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardOutcome {
    pub n_t: u64,
    pub n_a: u64,
}

/// Which apparatus illuminates the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setup {
    Standard,
    Zeno { loops: u32 },
}

impl Setup {
    /// Per-particle outcome law for a pixel of transmission `tau`. The
    /// standard setup reports detected particles in the Zeno slot and never
    /// uses the orthogonal one.
    pub fn channel_probabilities(&self, tau: f64) -> Result<ChannelProbabilities> {
        match *self {
            Setup::Standard => ChannelProbabilities::standard(tau),
            Setup::Zeno { loops } => zeno_probabilities(&ApparatusConfig::new(loops, tau)?),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Setup::Standard => "standard".to_string(),
            Setup::Zeno { loops } => format!("zeno-L{loops}"),
        }
    }

    pub fn loops(&self) -> Option<u32> {
        match self {
            Setup::Standard => None,
            Setup::Zeno { loops } => Some(*loops),
        }
    }
}

/// Random stream for pixel `index` under `master_seed`.
pub fn pixel_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn draw_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p)
        .expect("probability validated in [0, 1]")
        .sample(rng)
}

/// Trinomial draw as two chained binomials: absorbed first, then the
/// orthogonal port among the survivors.
pub fn simulate_pixel<R: Rng + ?Sized>(
    probs: &ChannelProbabilities,
    n_particles: u64,
    rng: &mut R,
) -> PixelOutcome {
    let n_a = draw_binomial(n_particles, probs.p_a, rng);
    let survivors = n_particles - n_a;
    let transmitted = probs.p_z + probs.p_o;
    let q = if transmitted > 0.0 {
        (probs.p_o / transmitted).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let n_o = draw_binomial(survivors, q, rng);
    PixelOutcome {
        n_z: survivors - n_o,
        n_o,
        n_a,
    }
}

/// Binomial draw for the single-pass experiment.
pub fn simulate_standard_pixel<R: Rng + ?Sized>(
    tau: f64,
    n_particles: u64,
    rng: &mut R,
) -> Result<StandardOutcome> {
    let p = standard_probabilities(tau)?;
    let n_a = draw_binomial(n_particles, p.absorbed, rng);
    Ok(StandardOutcome {
        n_t: n_particles - n_a,
        n_a,
    })
}

/// Channel laws of every model level under `setup`.
pub fn level_probabilities(model: &GrayModel, setup: Setup) -> Result<Vec<ChannelProbabilities>> {
    model
        .levels()
        .iter()
        .map(|l| setup.channel_probabilities(l.tau))
        .collect()
}

/// Particles per pixel giving a mean of `n_absorbed` absorbed particles over
/// the model's level mix, rounded up.
pub fn particles_for_absorbed(model: &GrayModel, setup: Setup, n_absorbed: f64) -> Result<u64> {
    if !(n_absorbed > 0.0 && n_absorbed.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "absorbed budget must be positive, got {n_absorbed}"
        )));
    }
    let probs = level_probabilities(model, setup)?;
    let per_particle = model.mean_absorption(&probs);
    if per_particle <= 0.0 {
        return Err(Error::InvalidModel(
            "model absorbs nothing under this setup".into(),
        ));
    }
    Ok(((n_absorbed / per_particle).ceil() as u64).max(1))
}

/// Result of reconstructing one sample with one setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub setup: Setup,
    pub reconstructed: GrayImage,
    /// `true` where the decided level differs from the truth.
    pub misinterpreted: Vec<bool>,
    pub error_count: usize,
    /// Empirical mean of absorbed particles per pixel.
    pub mean_absorbed_per_pixel: f64,
    /// Model expectation of absorbed particles per pixel.
    pub expected_absorbed_per_pixel: f64,
    pub n_particles: u64,
    pub total_particles: u64,
}

/// Illuminates every pixel of `sample` with `n_particles` particles and
/// decides its level. Standard setup decisions use the absorbed count;
/// Zeno decisions use both output ports.
pub fn reconstruct(
    sample: &GrayImage,
    model: &GrayModel,
    setup: Setup,
    n_particles: u64,
    master_seed: u64,
) -> Result<ReconstructionReport> {
    sample.check_levels(model.len())?;
    let probs = level_probabilities(model, setup)?;
    let classifier = MlClassifier::from_model(model, &probs, n_particles)?;

    let decided: Vec<(usize, u64)> = sample
        .pixels
        .par_iter()
        .enumerate()
        .map(|(index, &truth)| {
            let mut rng = pixel_rng(master_seed, index as u64);
            let outcome = simulate_pixel(&probs[truth], n_particles, &mut rng);
            let level = classifier
                .classify(outcome.n_z, outcome.n_o)
                .expect("simulated outcome lies in the triangle");
            (level, outcome.n_a)
        })
        .collect();

    let misinterpreted: Vec<bool> = decided
        .iter()
        .zip(&sample.pixels)
        .map(|(&(level, _), &truth)| level != truth)
        .collect();
    let error_count = misinterpreted.iter().filter(|&&m| m).count();
    let absorbed: u64 = decided.iter().map(|&(_, n_a)| n_a).sum();
    let pixels = sample.len() as f64;
    let truth_freq = sample.level_frequencies(model.len());
    let expected_absorbed_per_pixel = n_particles as f64
        * truth_freq
            .iter()
            .zip(&probs)
            .map(|(f, p)| f * p.p_a)
            .sum::<f64>();

    Ok(ReconstructionReport {
        setup,
        reconstructed: GrayImage::new(
            sample.width,
            sample.height,
            decided.iter().map(|&(level, _)| level).collect(),
        )?,
        misinterpreted,
        error_count,
        mean_absorbed_per_pixel: absorbed as f64 / pixels,
        expected_absorbed_per_pixel,
        n_particles,
        total_particles: n_particles * sample.len() as u64,
    })
}

/// Source of the Zeno channel law in [`irradiation_ratio_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZenoLaw {
    /// `L`-th power of the loop matrix.
    #[default]
    Exact,
    /// Leading-order absorption law; requires the Zeno regime.
    Asymptotic,
}

/// One point of an irradiation-ratio curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    pub alpha: f64,
    pub particles_zeno: u64,
    pub particles_standard: u64,
    pub absorbed_zeno: f64,
    pub absorbed_standard: f64,
    /// `N_a^Ze / N_a^st` at equal error probability.
    pub ratio: f64,
}

/// For each prior `alpha` of the darker level `tau`, the ratio of mean
/// absorbed particles needed by the Zeno (merged-port, binomial) and the
/// standard setup to discriminate `tau` from `tau + d_tau` at `target_pe`.
/// Grid points that fail carry their own error.
pub fn irradiation_ratio_curve(
    tau: f64,
    d_tau: f64,
    loops: u32,
    target_pe: f64,
    alpha_grid: &[f64],
    law: ZenoLaw,
) -> Result<Vec<Result<RatioPoint>>> {
    check_tau(tau)?;
    let tau2 = tau + d_tau;
    if !(d_tau > 0.0 && tau2 < 1.0) {
        return Err(Error::TauOutOfRange(tau2));
    }
    let zeno_pa = |t: f64| -> Result<f64> {
        let cfg = ApparatusConfig::new(loops, t)?;
        Ok(match law {
            ZenoLaw::Exact => zeno_probabilities(&cfg)?.p_a,
            ZenoLaw::Asymptotic => zeno_probabilities_asymptotic(&cfg)?.p_a,
        })
    };
    let (z1, z2) = (zeno_pa(tau)?, zeno_pa(tau2)?);
    let (s1, s2) = (
        standard_probabilities(tau)?.absorbed,
        standard_probabilities(tau2)?.absorbed,
    );

    Ok(alpha_grid
        .par_iter()
        .map(|&alpha| {
            let particles_zeno = required_particles(z1, z2, alpha, target_pe)?;
            let particles_standard = required_particles(s1, s2, alpha, target_pe)?;
            let absorbed_zeno = mean_absorbed(alpha, z1, z2, particles_zeno);
            let absorbed_standard = mean_absorbed(alpha, s1, s2, particles_standard);
            Ok(RatioPoint {
                alpha,
                particles_zeno,
                particles_standard,
                absorbed_zeno,
                absorbed_standard,
                ratio: absorbed_zeno / absorbed_standard,
            })
        })
        .collect())
}

/// Deterministic stand-in sample: a lobed cell whose core holds the rarest
/// level, surrounded by a shell of the next rarest, on a background of the
/// most frequent one. Level counts are `round(frequency * pixels)` with the
/// background absorbing the rounding remainder.
pub fn synthetic_cell(width: usize, height: usize, frequencies: &[f64]) -> Result<GrayImage> {
    let total = width * height;
    if total == 0 || frequencies.is_empty() {
        return Err(Error::InvalidImage("empty synthetic sample".into()));
    }
    let mut order: Vec<usize> = (0..frequencies.len()).collect();
    order.sort_by(|&a, &b| frequencies[a].total_cmp(&frequencies[b]).then(a.cmp(&b)));
    let mut counts: Vec<usize> = order
        .iter()
        .map(|&l| (frequencies[l] * total as f64).round() as usize)
        .collect();
    let inner: usize = counts[..counts.len() - 1].iter().sum();
    if inner > total {
        return Err(Error::InvalidImage("frequencies exceed one".into()));
    }
    *counts.last_mut().expect("non-empty") = total - inner;

    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let scale = width.min(height) as f64 / 2.0;
    let mut ranked: Vec<(f64, usize)> = (0..total)
        .map(|i| {
            let dx = (i % width) as f64 - cx;
            let dy = ((i / width) as f64 - cy) / 0.7;
            let phi = dy.atan2(dx);
            let r = (dx * dx + dy * dy).sqrt() / scale * (1.0 + 0.15 * (3.0 * phi).sin());
            (r, i)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut pixels = vec![0usize; total];
    let mut cursor = ranked.iter();
    for (&level, &count) in order.iter().zip(&counts) {
        for &(_, i) in cursor.by_ref().take(count) {
            pixels[i] = level;
        }
    }
    GrayImage::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig5_model() -> GrayModel {
        GrayModel::from_weights(&[(0.8, 0.93), (0.96, 0.07), (0.99, 0.02)]).unwrap()
    }

    #[test]
    fn deterministic_channel() {
        let mut rng = pixel_rng(1, 0);
        let probs = ChannelProbabilities::new(0.0, 1.0, 0.0).unwrap();
        assert_eq!(
            simulate_pixel(&probs, 50, &mut rng),
            PixelOutcome {
                n_z: 0,
                n_o: 50,
                n_a: 0
            }
        );
        assert_eq!(
            simulate_standard_pixel(1.0, 50, &mut rng).unwrap(),
            StandardOutcome { n_t: 50, n_a: 0 }
        );
    }

    #[test]
    fn seeded_streams_reproduce() {
        let probs = ChannelProbabilities::new(0.5, 0.2, 0.3).unwrap();
        let a = simulate_pixel(&probs, 1000, &mut pixel_rng(7, 42));
        let b = simulate_pixel(&probs, 1000, &mut pixel_rng(7, 42));
        let c = simulate_pixel(&probs, 1000, &mut pixel_rng(7, 43));
        assert_eq!(a, b);
        assert_ne!(a, c);
        let s1 = simulate_standard_pixel(0.8, 10_000, &mut pixel_rng(3, 1)).unwrap();
        let s2 = simulate_standard_pixel(0.8, 10_000, &mut pixel_rng(3, 1)).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn trinomial_moments() {
        let probs = ChannelProbabilities::new(0.6, 0.15, 0.25).unwrap();
        let (n, pixels) = (40u64, 100_000usize);
        let draws: Vec<PixelOutcome> = (0..pixels)
            .map(|i| simulate_pixel(&probs, n, &mut pixel_rng(9, i as u64)))
            .collect();
        assert!(draws.iter().all(|d| d.total() == n));
        let m = pixels as f64;
        let mean = |f: fn(&PixelOutcome) -> u64| draws.iter().map(|d| f(d) as f64).sum::<f64>() / m;
        let (mz, mo, ma) = (mean(|d| d.n_z), mean(|d| d.n_o), mean(|d| d.n_a));
        let nf = n as f64;
        let se_a = (nf * 0.25 * 0.75 / m).sqrt();
        assert!((ma - nf * 0.25).abs() < 3.0 * se_a, "{ma}");
        let cov = draws
            .iter()
            .map(|d| (d.n_z as f64 - mz) * (d.n_o as f64 - mo))
            .sum::<f64>()
            / (m - 1.0);
        let expected = -nf * 0.6 * 0.15;
        // sd of the product (n_z - mz)(n_o - mo) is below N * sqrt(p_z p_o) * 2.
        let se_cov = 2.0 * nf * (0.6_f64 * 0.15).sqrt() / m.sqrt();
        assert!((cov - expected).abs() < 3.0 * se_cov, "{cov} vs {expected}");
    }

    #[test]
    fn standard_absorption_rate() {
        let out = simulate_standard_pixel(0.8, 10_000, &mut pixel_rng(5, 0)).unwrap();
        let sigma = (0.36_f64 * 0.64 / 10_000.0).sqrt();
        assert!((out.n_a as f64 / 10_000.0 - 0.36).abs() < 3.0 * sigma);
        assert!(simulate_standard_pixel(1.5, 10, &mut pixel_rng(5, 0)).is_err());
    }

    #[test]
    fn synthetic_cell_has_requested_frequencies() {
        let img = synthetic_cell(100, 100, &[0.91, 0.07, 0.02]).unwrap();
        let counts: Vec<usize> = (0..3)
            .map(|l| img.pixels.iter().filter(|&&p| p == l).count())
            .collect();
        assert_eq!(counts, vec![9100, 700, 200]);
        // Rarest level sits at the center.
        assert_eq!(img.pixels[50 * 100 + 50], 2);
        assert_eq!(img.pixels[0], 0);
    }

    #[test]
    fn huge_budget_reconstructs_perfectly() {
        let model = fig5_model();
        let sample = synthetic_cell(20, 20, &[0.93, 0.07, 0.02]).unwrap();
        for setup in [
            Setup::Standard,
            Setup::Zeno { loops: 10 },
            Setup::Zeno { loops: 165 },
        ] {
            let report = reconstruct(&sample, &model, setup, 20_000, 1).unwrap();
            assert_eq!(report.error_count, 0, "{setup:?}");
            assert_eq!(report.reconstructed, sample);
        }
    }

    #[test]
    fn report_is_reproducible_and_consistent() {
        let model = fig5_model();
        let sample = synthetic_cell(30, 30, &[0.93, 0.07, 0.02]).unwrap();
        let setup = Setup::Zeno { loops: 10 };
        let a = reconstruct(&sample, &model, setup, 12, 77).unwrap();
        let b = reconstruct(&sample, &model, setup, 12, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.error_count,
            a.misinterpreted.iter().filter(|&&m| m).count()
        );
        assert_eq!(a.total_particles, 12 * 900);
    }

    #[test]
    fn image_model_mismatch() {
        let model = GrayModel::two_level(0.8, 0.9, 0.5).unwrap();
        let sample = GrayImage::new(2, 1, vec![0, 2]).unwrap();
        assert!(reconstruct(&sample, &model, Setup::Standard, 10, 0).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn particle_budget_matches_total_energy_scaling() {
        let model = fig5_model();
        let ratio = |setup| particles_for_absorbed(&model, setup, 13.0).unwrap() as f64 / 13.0;
        assert!((ratio(Setup::Standard) - 3.0).abs() < 0.1);
        assert!((ratio(Setup::Zeno { loops: 10 }) - 1.8).abs() < 0.15);
        assert!((ratio(Setup::Zeno { loops: 165 }) - 6.5).abs() < 0.1);
        assert!(particles_for_absorbed(&model, Setup::Standard, 0.0).is_err());
    }

    #[test]
    fn ratio_curve_rejects_white_upper_level() {
        assert!(irradiation_ratio_curve(0.99, 0.02, 2000, 0.005, &[0.5], ZenoLaw::Exact).is_err());
    }

    #[test]
    fn ratio_curve_can_exceed_one_for_uniform_priors() {
        let curve =
            irradiation_ratio_curve(0.8, 0.02, 2000, 0.005, &[0.05, 0.5], ZenoLaw::Exact).unwrap();
        let low = curve[0].as_ref().unwrap();
        assert!(low.ratio > 1.0, "{low:?}");
    }
}
