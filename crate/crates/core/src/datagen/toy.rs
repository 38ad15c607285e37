//! Single-channel three-class toy scene: a low-noise background with one
//! vertically striped and one horizontally striped rectangle. Both stripe
//! orientations are separable by 7×7 filter masks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClassPalette, LabeledImage, PaletteClass};
use crate::error::{Error, Result};
use crate::tensor::TensorOf;

pub const TOY_CLASSES: usize = 3;
pub const TOY_BACKGROUND_LEVEL: f64 = 0.1;
pub const STRIPE_AMPLITUDE: f64 = 0.8;
pub const STRIPE_PERIOD: usize = 4;
const NOISE: f64 = 0.05;
const MIN_SIZE: usize = 32;

pub fn toy_palette() -> ClassPalette {
    let class = |name: &str, rgb| PaletteClass {
        name: name.into(),
        rgb,
    };
    ClassPalette {
        classes: vec![
            class("background", [0, 0, 0]),
            class("vertical", [255, 0, 0]),
            class("horizontal", [0, 0, 255]),
        ],
        background: Some(0),
    }
}

struct Rect {
    top: usize,
    left: usize,
    height: usize,
    width: usize,
}

/// Places a rectangle inside the half-image starting at column `x0` covering
/// at least `min_area` pixels.
fn place(rng: &mut ChaCha8Rng, x0: usize, half: usize, height: usize, min_area: usize) -> Rect {
    let mut w = (half as f64 * rng.gen_range(0.5..0.58)).round() as usize;
    let mut h = (height as f64 * rng.gen_range(0.44..0.5)).round() as usize;
    while w * h < min_area {
        if h + 2 < height {
            h += 1;
        } else {
            w += 1;
        }
    }
    let left = x0 + rng.gen_range(1..=half - w - 1);
    let top = rng.gen_range(1..=height - h - 1);
    Rect {
        top,
        left,
        height: h,
        width: w,
    }
}

pub fn gen_toy(seed: u64, width: usize, height: usize) -> Result<LabeledImage> {
    if width < MIN_SIZE || height < MIN_SIZE {
        return Err(Error::Parameter(format!(
            "toy image must be at least {MIN_SIZE}x{MIN_SIZE}, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = width / 2;
    let min_area = (width * height).div_ceil(10);
    let swap = rng.gen_bool(0.5);
    let (x_vert, x_horiz) = if swap { (half, 0) } else { (0, half) };
    let vertical = place(&mut rng, x_vert, half, height, min_area);
    let horizontal = place(&mut rng, x_horiz, half, height, min_area);
    let phase_v = rng.gen_range(0..STRIPE_PERIOD);
    let phase_h = rng.gen_range(0..STRIPE_PERIOD);

    let inside = |r: &Rect, y: usize, x: usize| {
        y >= r.top && y < r.top + r.height && x >= r.left && x < r.left + r.width
    };
    let stripe = |offset: usize| {
        if offset % STRIPE_PERIOD < STRIPE_PERIOD / 2 {
            STRIPE_AMPLITUDE
        } else {
            0.0
        }
    };
    let mut labels = Vec::with_capacity(width * height);
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (label, signal) = if inside(&vertical, y, x) {
                (1, stripe(x - vertical.left + phase_v))
            } else if inside(&horizontal, y, x) {
                (2, stripe(y - horizontal.top + phase_h))
            } else {
                (0, 0.0)
            };
            let noise = rng.gen_range(-NOISE..NOISE);
            labels.push(label);
            pixels.push((TOY_BACKGROUND_LEVEL + signal + noise).clamp(0.0, 1.0));
        }
    }
    LabeledImage::new(TensorOf::new(vec![1, height, width], pixels)?, labels, TOY_CLASSES)
}
