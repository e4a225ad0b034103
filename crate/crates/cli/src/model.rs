//! Sample model files: pixel value ranges mapped to gray levels.
//!
//! ```toml
//! [[level]]
//! name = "black"
//! tau = 0.8
//! alpha = 0.93
//! pixel_min = 0
//! pixel_max = 84
//! value = 0
//! ```
//!
//! `alpha` may be left out when priors are measured from the image.

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use zeno_tomo::decision::GrayModel;
use zeno_tomo::pgm::Graymap;
use zeno_tomo::simulator::{synthetic_cell, GrayImage};

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub name: String,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub pixel_min: u16,
    pub pixel_max: u16,
    /// Gray value written for this level in reconstructions.
    pub value: u8,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    level: Vec<LevelSpec>,
}

/// Levels sorted by ascending `tau` together with the validated model.
#[derive(Debug, Clone)]
pub struct SampleModel {
    pub levels: Vec<LevelSpec>,
    pub model: GrayModel,
}

pub fn parse_levels(text: &str) -> Result<Vec<LevelSpec>> {
    let file: ModelFile = toml::from_str(text).context("malformed model file")?;
    let mut levels = file.level;
    ensure!(!levels.is_empty(), "model file declares no levels");
    levels.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    for l in &levels {
        ensure!(
            l.pixel_min <= l.pixel_max,
            "level {}: pixel_min {} exceeds pixel_max {}",
            l.name,
            l.pixel_min,
            l.pixel_max
        );
    }
    for (i, a) in levels.iter().enumerate() {
        for b in &levels[i + 1..] {
            if a.pixel_min <= b.pixel_max && b.pixel_min <= a.pixel_max {
                bail!(
                    "levels {} and {} have overlapping pixel ranges",
                    a.name,
                    b.name
                );
            }
        }
    }
    Ok(levels)
}

/// Maps every pixel to its level index.
pub fn classify_pixels(levels: &[LevelSpec], image: &Graymap) -> Result<GrayImage> {
    let pixels = image
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            levels
                .iter()
                .position(|l| (l.pixel_min..=l.pixel_max).contains(&v))
                .with_context(|| format!("pixel {i} (value {v}) matches no level of the model"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrayImage::new(image.width, image.height, pixels)?)
}

/// Builds the gray model. With `measured` the priors are the level
/// frequencies in `truth`; otherwise the declared `alpha` values are used
/// after dividing by their sum.
pub fn build_model(
    levels: Vec<LevelSpec>,
    truth: &GrayImage,
    measured: bool,
) -> Result<SampleModel> {
    let weights: Vec<f64> = if measured {
        let freq = truth.level_frequencies(levels.len());
        for (l, f) in levels.iter().zip(&freq) {
            ensure!(*f > 0.0, "level {} does not occur in the image", l.name);
        }
        freq
    } else {
        levels
            .iter()
            .map(|l| {
                l.alpha.with_context(|| {
                    format!(
                        "level {} has no alpha; declare it or measure priors",
                        l.name
                    )
                })
            })
            .collect::<Result<_>>()?
    };
    let pairs: Vec<(f64, f64)> = levels
        .iter()
        .zip(&weights)
        .map(|(l, &w)| (l.tau, w))
        .collect();
    let model = GrayModel::from_weights(&pairs)?;
    Ok(SampleModel { levels, model })
}

/// Gray value per level index, for writing reconstructions.
pub fn render(levels: &[LevelSpec], image: &GrayImage) -> Result<Graymap> {
    let data = image
        .pixels
        .iter()
        .map(|&k| u16::from(levels[k].value))
        .collect();
    Ok(Graymap::new(image.width, image.height, 255, data)?)
}

/// Three-level cell: black `tau = 0.8`, gray `0.96`, white `0.99`, with
/// weights 0.93, 0.07 and 0.02.
pub fn default_levels() -> Vec<LevelSpec> {
    let level = |name: &str, tau, alpha, pixel_min, pixel_max, value| LevelSpec {
        name: name.to_string(),
        tau,
        alpha: Some(alpha),
        pixel_min,
        pixel_max,
        value,
    };
    vec![
        level("black", 0.8, 0.93, 0, 84, 0),
        level("gray", 0.96, 0.07, 85, 169, 128),
        level("white", 0.99, 0.02, 170, 255, 255),
    ]
}

/// Levels as a model file.
pub fn to_toml(levels: &[LevelSpec]) -> Result<String> {
    let file = ModelFile {
        level: levels.to_vec(),
    };
    Ok(toml::to_string(&file)?)
}

/// Synthetic stand-in sample with level frequencies proportional to the
/// declared weights.
pub fn default_sample(levels: &[LevelSpec], width: usize, height: usize) -> Result<GrayImage> {
    let weights: Vec<f64> = levels.iter().map(|l| l.alpha.unwrap_or(0.0)).collect();
    let total: f64 = weights.iter().sum();
    ensure!(total > 0.0, "levels carry no weights");
    let freq: Vec<f64> = weights.iter().map(|w| w / total).collect();
    Ok(synthetic_cell(width, height, &freq)?)
}
