use rand::Rng;

use super::LabeledImage;
use crate::error::{Error, Result};
use crate::tensor::TensorOf;

fn check_patch(img: &LabeledImage, patch: usize) -> Result<()> {
    if patch.is_multiple_of(2) {
        return Err(Error::Parameter(format!("patch size must be odd, got {patch}")));
    }
    if patch > img.height() || patch > img.width() {
        return Err(Error::Parameter(format!(
            "patch {patch} larger than image {}x{}",
            img.height(),
            img.width()
        )));
    }
    Ok(())
}

/// The `patch × patch` window with top-left corner `(top, left)` and the
/// label of its centre pixel.
pub fn patch_at(img: &LabeledImage, patch: usize, top: usize, left: usize) -> Result<(TensorOf<f64>, u8)> {
    check_patch(img, patch)?;
    let window = img.image.crop(top, left, patch, patch)?;
    Ok((window, img.label_at(top + patch / 2, left + patch / 2)))
}

/// A window at a uniformly random position fully inside the image.
pub fn sample_patch(img: &LabeledImage, patch: usize, rng: &mut impl Rng) -> Result<(TensorOf<f64>, u8)> {
    check_patch(img, patch)?;
    let top = rng.gen_range(0..=img.height() - patch);
    let left = rng.gen_range(0..=img.width() - patch);
    patch_at(img, patch, top, left)
}

/// Like [`sample_patch`] but redraws until the centre label satisfies
/// `accept`, giving up after `max_tries` draws.
pub fn sample_patch_where(
    img: &LabeledImage,
    patch: usize,
    rng: &mut impl Rng,
    max_tries: usize,
    accept: impl Fn(u8) -> bool,
) -> Result<(TensorOf<f64>, u8)> {
    check_patch(img, patch)?;
    for _ in 0..max_tries {
        let top = rng.gen_range(0..=img.height() - patch);
        let left = rng.gen_range(0..=img.width() - patch);
        let center = img.label_at(top + patch / 2, left + patch / 2);
        if accept(center) {
            return patch_at(img, patch, top, left);
        }
    }
    Err(Error::Data(format!("no acceptable patch centre found in {max_tries} draws")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gen_toy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_image_patch() {
        let img = gen_toy(0, 33, 33).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (patch, label) = sample_patch(&img, 33, &mut rng).unwrap();
        assert_eq!(patch, img.image);
        assert_eq!(label, img.label_at(16, 16));
    }

    #[test]
    fn rejects_even_or_oversized() {
        let img = gen_toy(0, 32, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_patch(&img, 6, &mut rng), Err(Error::Parameter(_))));
        assert!(matches!(sample_patch(&img, 33, &mut rng), Err(Error::Parameter(_))));
    }

    #[test]
    fn reproducible_sequence() {
        let img = gen_toy(2, 40, 40).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_patch(&img, 7, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn sampling_frequency_tracks_pixel_share() {
        let img = gen_toy(4, 128, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            counts[sample_patch(&img, 7, &mut rng).unwrap().1 as usize] += 1;
        }
        let hist = img.class_histogram();
        for c in 0..3 {
            let freq = counts[c] as f64 / 10_000.0;
            let share = hist[c] as f64 / (128.0 * 128.0);
            assert!((freq - share).abs() <= 0.05, "class {c}: {freq} vs {share}");
        }
    }

    #[test]
    fn filtered_sampling() {
        let img = gen_toy(4, 48, 48).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_ne!(sample_patch_where(&img, 7, &mut rng, 1000, |l| l != 0).unwrap().1, 0);
        }
        assert!(sample_patch_where(&img, 7, &mut rng, 10, |_| false).is_err());
    }
}
