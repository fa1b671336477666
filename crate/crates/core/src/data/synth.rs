use ndarray::Array3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{IdentityDataset, Sample, Split};
use crate::rng::rng_for;
use crate::{Error, Result};

/// Parameters of the synthetic identity generator. Recorded in the dataset
/// and in step-plan manifests so the data can be regenerated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub num_identities: usize,
    pub images_per_identity: usize,
    /// `(channels, height, width)`.
    pub image_shape: (usize, usize, usize),
    /// Std of the additive per-pixel Gaussian noise.
    pub noise_sigma: f64,
    /// Images are translated by up to this many pixels in each axis.
    pub max_shift: usize,
    /// Side of the coarse random grid that is upsampled into a template.
    pub template_resolution: usize,
    /// Weight of a pattern shared by every identity of the generator.
    pub style_strength: f64,
    /// Identities are random mixtures of this many attribute patterns; 0
    /// gives every identity an independent random template.
    pub attribute_count: usize,
    /// Seed of the attribute patterns.
    pub attribute_domain: u64,
    /// Std of the per-image nuisance: a random combination of a small set of
    /// fixed smooth patterns shared by every identity of the domain.
    pub nuisance_strength: f64,
    /// Number of nuisance patterns.
    pub nuisance_rank: usize,
    /// Seed of the nuisance patterns; generators with different values model
    /// different capture domains.
    pub nuisance_domain: u64,
    /// Identity ids are `identity_offset..identity_offset + num_identities`.
    pub identity_offset: u32,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            num_identities: 64,
            images_per_identity: 8,
            image_shape: (3, 32, 32),
            noise_sigma: 0.3,
            max_shift: 2,
            template_resolution: 8,
            style_strength: 0.5,
            attribute_count: 0,
            attribute_domain: 0,
            nuisance_strength: 0.0,
            nuisance_rank: 4,
            nuisance_domain: 0,
            identity_offset: 0,
            seed: 7,
        }
    }
}

fn upsample_bilinear(grid: &Array3<f64>, h: usize, w: usize) -> Array3<f64> {
    let (c, gh, gw) = grid.dim();
    let coord = |i: usize, n: usize, g: usize| -> (usize, usize, f64) {
        if n <= 1 || g <= 1 {
            return (0, 0, 0.0);
        }
        let pos = i as f64 * (g - 1) as f64 / (n - 1) as f64;
        let lo = (pos.floor() as usize).min(g - 2);
        (lo, lo + 1, pos - lo as f64)
    };
    Array3::from_shape_fn((c, h, w), |(ch, y, x)| {
        let (y0, y1, fy) = coord(y, h, gh);
        let (x0, x1, fx) = coord(x, w, gw);
        let top = grid[[ch, y0, x0]] * (1.0 - fx) + grid[[ch, y0, x1]] * fx;
        let bottom = grid[[ch, y1, x0]] * (1.0 - fx) + grid[[ch, y1, x1]] * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

fn random_pattern(params: &SynthParams, path: &[u64]) -> Array3<f64> {
    pattern_from(params, params.seed, path)
}

fn pattern_from(params: &SynthParams, seed: u64, path: &[u64]) -> Array3<f64> {
    let (c, h, w) = params.image_shape;
    let r = params.template_resolution.max(1);
    let mut rng = rng_for(seed, path);
    let grid = Array3::from_shape_fn((c, r, r), |_| StandardNormal.sample(&mut rng));
    upsample_bilinear(&grid, h, w)
}

/// Clean template of one identity: a free random pattern, or a random
/// combination of the domain's attribute patterns when `attribute_count > 0`.
fn template(params: &SynthParams, style: &Array3<f64>, attributes: &[Array3<f64>], identity: u32) -> Array3<f64> {
    let face = if attributes.is_empty() {
        random_pattern(params, &[1, identity as u64])
    } else {
        let mut rng = rng_for(params.seed, &[1, identity as u64]);
        let norm = (attributes.len() as f64).sqrt();
        let mut face = Array3::zeros(params.image_shape);
        for atom in attributes {
            let z: f64 = StandardNormal.sample(&mut rng);
            face.scaled_add(z / norm, atom);
        }
        face
    };
    face + style * params.style_strength
}

fn shifted(img: &Array3<f64>, dy: isize, dx: isize) -> Array3<f64> {
    let (c, h, w) = img.dim();
    Array3::from_shape_fn((c, h, w), |(ch, y, x)| {
        let sy = (y as isize - dy).clamp(0, h as isize - 1) as usize;
        let sx = (x as isize - dx).clamp(0, w as isize - 1) as usize;
        img[[ch, sy, sx]]
    })
}

/// Images are `template(identity)` translated by a random integer shift plus
/// Gaussian noise. Fully determined by `params`.
pub fn synth_identities(params: &SynthParams, split: Split) -> Result<IdentityDataset> {
    let (c, h, w) = params.image_shape;
    if params.num_identities == 0 || params.images_per_identity == 0 {
        return Err(Error::config("synthetic data needs at least one identity and image"));
    }
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::config("image shape must be positive"));
    }
    if !(params.noise_sigma >= 0.0) {
        return Err(Error::config("noise sigma must be non-negative"));
    }
    let style = random_pattern(params, &[0]);
    let attributes: Vec<Array3<f64>> = (0..params.attribute_count)
        .map(|j| pattern_from(params, params.attribute_domain, &[5, j as u64]))
        .collect();
    let nuisance: Vec<Array3<f64>> = if params.nuisance_strength != 0.0 {
        (0..params.nuisance_rank)
            .map(|k| pattern_from(params, params.nuisance_domain, &[4, k as u64]))
            .collect()
    } else {
        Vec::new()
    };
    let shift = params.max_shift as i64;
    let mut samples = Vec::with_capacity(params.num_identities * params.images_per_identity);
    for k in 0..params.num_identities {
        let identity = params.identity_offset + k as u32;
        let base = template(params, &style, &attributes, identity);
        for index in 0..params.images_per_identity {
            let mut rng = rng_for(params.seed, &[2, identity as u64, index as u64]);
            let (dy, dx) = if shift > 0 {
                (
                    rng.random_range(-shift..=shift) as isize,
                    rng.random_range(-shift..=shift) as isize,
                )
            } else {
                (0, 0)
            };
            let mut image = shifted(&base, dy, dx);
            for pattern in &nuisance {
                let z: f64 = StandardNormal.sample(&mut rng);
                image.scaled_add(params.nuisance_strength * z, pattern);
            }
            if params.noise_sigma > 0.0 {
                image.mapv_inplace(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + params.noise_sigma * z
                });
            }
            samples.push(Sample {
                image,
                identity,
                index: index as u32,
            });
        }
    }
    IdentityDataset::new(samples, split, Some(params.clone()))
}
