//! Labeled segmentation images: synthetic generators, Netpbm ingestion and
//! patch sampling.

mod facade;
mod loader;
pub mod pnm;
mod sample;
mod toy;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::TensorOf;

pub use facade::{facade_palette, gen_facade_like, FacadeClass, FACADE_LISTED_CLASSES};
pub use loader::{load_labeled_dir, save_labeled_image, LoadReport, UnknownColor};
pub use sample::{patch_at, sample_patch, sample_patch_where};
pub use toy::{gen_toy, toy_palette, STRIPE_AMPLITUDE, STRIPE_PERIOD, TOY_BACKGROUND_LEVEL, TOY_CLASSES};

/// An image with values in `[0, 1]` and one class index per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    /// `[C, H, W]`.
    pub image: TensorOf<f64>,
    /// Row-major `H × W`.
    pub labels: Vec<u8>,
    pub num_classes: usize,
}

impl LabeledImage {
    pub fn new(image: TensorOf<f64>, labels: Vec<u8>, num_classes: usize) -> Result<Self> {
        let img = Self {
            image,
            labels,
            num_classes,
        };
        img.validate()?;
        Ok(img)
    }

    pub fn validate(&self) -> Result<()> {
        let (_, h, w) = self.image.dims3()?;
        if self.labels.len() != h * w {
            return Err(Error::dim(
                "labeled image",
                format!("{} labels for a {h}x{w} image", self.labels.len()),
            ));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l as usize >= self.num_classes) {
            return Err(Error::Data(format!("label {l} out of range for {} classes", self.num_classes)));
        }
        if let Some(v) = self.image.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Data(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.image.shape()[0]
    }

    pub fn height(&self) -> usize {
        self.image.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.image.shape()[2]
    }

    pub fn label_at(&self, y: usize, x: usize) -> u8 {
        self.labels[y * self.width() + x]
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.num_classes];
        for &l in &self.labels {
            hist[l as usize] += 1;
        }
        hist
    }

    /// Labels of the centred `h × w` window, matching the output of a
    /// padding-free network.
    pub fn center_crop_labels(&self, h: usize, w: usize) -> Result<Vec<u8>> {
        let (ih, iw) = (self.height(), self.width());
        if h > ih || w > iw {
            return Err(Error::dim("center crop", format!("{h}x{w} larger than {ih}x{iw}")));
        }
        let (top, left) = ((ih - h) / 2, (iw - w) / 2);
        Ok((top..top + h)
            .flat_map(|y| (left..left + w).map(move |x| (y, x)))
            .map(|(y, x)| self.labels[y * iw + x])
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaletteClass {
    pub name: String,
    pub rgb: [u8; 3],
}

/// Colour coding of classes in label images.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPalette {
    pub classes: Vec<PaletteClass>,
    /// Class that unknown colours map to and that metrics may exclude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<usize>,
}

impl ClassPalette {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() || self.classes.len() > 256 {
            return Err(Error::Data(format!("palette needs 1..=256 classes, has {}", self.classes.len())));
        }
        let mut seen = HashSet::new();
        for c in &self.classes {
            if !seen.insert(c.rgb) {
                return Err(Error::Data(format!("palette colour {:?} used twice", c.rgb)));
            }
        }
        if let Some(b) = self.background {
            if b >= self.classes.len() {
                return Err(Error::Data(format!("background index {b} out of range")));
            }
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, rgb: [u8; 3]) -> Option<u8> {
        self.classes.iter().position(|c| c.rgb == rgb).map(|i| i as u8)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let palette: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            source,
        })?;
        palette.validate()?;
        Ok(palette)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("palette serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_labels() {
        let img = TensorOf::zeros(&[1, 2, 2]);
        assert!(LabeledImage::new(img.clone(), vec![0, 1, 2, 3], 3).is_err());
        assert!(LabeledImage::new(img.clone(), vec![0, 1], 3).is_err());
        assert!(LabeledImage::new(img, vec![0, 1, 2, 2], 3).is_ok());
    }

    #[test]
    fn center_crop() {
        let img = LabeledImage::new(TensorOf::zeros(&[1, 3, 4]), (0..12).map(|v| v as u8).collect(), 12).unwrap();
        assert_eq!(img.center_crop_labels(1, 2).unwrap(), vec![5, 6]);
        assert_eq!(img.center_crop_labels(3, 4).unwrap(), img.labels);
    }

    #[test]
    fn palette_validation() {
        let mut p = toy_palette();
        p.validate().unwrap();
        p.classes[1].rgb = p.classes[0].rgb;
        assert!(p.validate().is_err());
        let mut p = toy_palette();
        p.background = Some(7);
        assert!(p.validate().is_err());
    }

    #[test]
    fn palette_json_shape() {
        let p = toy_palette();
        let json = serde_json::to_value(&p).unwrap();
        assert!(json["classes"][0]["rgb"].is_array());
        let back: ClassPalette = serde_json::from_value(json).unwrap();
        assert_eq!(back, p);
    }
}
