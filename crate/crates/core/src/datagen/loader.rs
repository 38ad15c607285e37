//! Directory ingestion of `name.ppm` / `name.pgm` images paired with
//! `name_labels.ppm` (palette colours) or `name_labels.pgm` (raw class
//! indices).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::pnm::{read_pnm, write_pnm, PnmImage, PnmKind};
use super::{ClassPalette, LabeledImage};
use crate::error::{Error, Result};
use crate::tensor::TensorOf;

const LABEL_SUFFIX: &str = "_labels";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownColor {
    pub file: PathBuf,
    pub rgb: [u8; 3],
    pub pixels: usize,
}

/// Colours that were not in the palette, one entry per file and colour.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub unknown_colors: Vec<UnknownColor>,
}

impl LoadReport {
    pub fn is_empty(&self) -> bool {
        self.unknown_colors.is_empty()
    }
}

fn image_tensor(img: &PnmImage) -> Result<TensorOf<f64>> {
    let (c, h, w) = (img.kind.channels(), img.height, img.width);
    let scale = 1.0 / img.maxval as f64;
    let mut data = vec![0.0; c * h * w];
    for p in 0..h * w {
        for ch in 0..c {
            data[ch * h * w + p] = img.data[p * c + ch] as f64 * scale;
        }
    }
    TensorOf::new(vec![c, h, w], data)
}

fn decode_labels(
    img: &PnmImage,
    path: &Path,
    palette: &ClassPalette,
    report: &mut LoadReport,
) -> Result<Vec<u8>> {
    let k = palette.num_classes();
    match img.kind {
        PnmKind::Graymap => {
            if let Some(&bad) = img.data.iter().find(|&&v| v as usize >= k) {
                return Err(Error::Data(format!(
                    "{}: class index {bad} out of range for {k} classes",
                    path.display()
                )));
            }
            Ok(img.data.clone())
        }
        PnmKind::Pixmap => {
            let mut unknown: BTreeMap<[u8; 3], usize> = BTreeMap::new();
            let labels = img
                .data
                .chunks_exact(3)
                .map(|px| {
                    let rgb = [px[0], px[1], px[2]];
                    palette.class_of(rgb).ok_or(rgb)
                })
                .map(|r| match r {
                    Ok(class) => Ok(class),
                    Err(rgb) => {
                        *unknown.entry(rgb).or_default() += 1;
                        palette.background.map(|b| b as u8).ok_or_else(|| {
                            Error::Data(format!(
                                "{}: colour {rgb:?} not in palette and no background class",
                                path.display()
                            ))
                        })
                    }
                })
                .collect::<Result<Vec<u8>>>()?;
            report
                .unknown_colors
                .extend(unknown.into_iter().map(|(rgb, pixels)| UnknownColor {
                    file: path.to_path_buf(),
                    rgb,
                    pixels,
                }));
            Ok(labels)
        }
    }
}

fn label_path(dir: &Path, stem: &str) -> Result<PathBuf> {
    let color = dir.join(format!("{stem}{LABEL_SUFFIX}.ppm"));
    if color.exists() {
        return Ok(color);
    }
    let raw = dir.join(format!("{stem}{LABEL_SUFFIX}.pgm"));
    if raw.exists() {
        return Ok(raw);
    }
    Err(Error::io(
        color,
        std::io::Error::new(std::io::ErrorKind::NotFound, "label file for image not found"),
    ))
}

/// Loads every image in `dir` (sorted by file name) with its label map.
pub fn load_labeled_dir(dir: &Path, palette: &ClassPalette) -> Result<(Vec<LabeledImage>, LoadReport)> {
    palette.validate()?;
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut images: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_pnm = matches!(path.extension().and_then(|e| e.to_str()), Some("ppm" | "pgm"));
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else {
            continue;
        };
        if is_pnm && !stem.ends_with(LABEL_SUFFIX) {
            images.push((stem, path));
        }
    }
    images.sort();

    let mut report = LoadReport::default();
    let mut out = Vec::with_capacity(images.len());
    for (stem, path) in images {
        let img = read_pnm(&path)?;
        let lpath = label_path(dir, &stem)?;
        let limg = read_pnm(&lpath)?;
        if (limg.width, limg.height) != (img.width, img.height) {
            return Err(Error::Data(format!(
                "{}: label map is {}x{}, image is {}x{}",
                lpath.display(),
                limg.width,
                limg.height,
                img.width,
                img.height
            )));
        }
        let labels = decode_labels(&limg, &lpath, palette, &mut report)?;
        out.push(LabeledImage::new(image_tensor(&img)?, labels, palette.num_classes())?);
    }
    Ok((out, report))
}

/// Writes `name.pgm` (one channel) or `name.ppm` (three channels) and the
/// colour-coded `name_labels.ppm`.
pub fn save_labeled_image(dir: &Path, name: &str, img: &LabeledImage, palette: &ClassPalette) -> Result<()> {
    let (c, h, w) = img.image.dims3()?;
    let kind = match c {
        1 => PnmKind::Graymap,
        3 => PnmKind::Pixmap,
        _ => return Err(Error::Data(format!("cannot store a {c}-channel image as PNM"))),
    };
    if palette.num_classes() < img.num_classes {
        return Err(Error::Data("palette has fewer classes than the image".into()));
    }
    let mut data = vec![0u8; c * h * w];
    for p in 0..h * w {
        for ch in 0..c {
            data[p * c + ch] = (img.image.data()[ch * h * w + p] * 255.0).round() as u8;
        }
    }
    let ext = if c == 1 { "pgm" } else { "ppm" };
    write_pnm(&dir.join(format!("{name}.{ext}")), &PnmImage::new(kind, w, h, data))?;
    let colors = img
        .labels
        .iter()
        .flat_map(|&l| palette.classes[l as usize].rgb)
        .collect();
    write_pnm(
        &dir.join(format!("{name}{LABEL_SUFFIX}.ppm")),
        &PnmImage::new(PnmKind::Pixmap, w, h, colors),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_facade_like, gen_toy, toy_palette};

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, report) = load_labeled_dir(dir.path(), &toy_palette()).unwrap();
        assert!(imgs.is_empty());
        assert!(report.is_empty());
    }

    #[test]
    fn hand_built_two_colour_labels() {
        let dir = tempfile::tempdir().unwrap();
        let palette = toy_palette();
        write_pnm(&dir.path().join("a.pgm"), &PnmImage::new(PnmKind::Graymap, 2, 2, vec![0, 64, 128, 255])).unwrap();
        let red = palette.classes[1].rgb;
        let blue = palette.classes[2].rgb;
        let colors = [red, blue, blue, red].concat();
        write_pnm(&dir.path().join("a_labels.ppm"), &PnmImage::new(PnmKind::Pixmap, 2, 2, colors)).unwrap();
        let (imgs, report) = load_labeled_dir(dir.path(), &palette).unwrap();
        assert_eq!(imgs.len(), 1);
        assert_eq!(imgs[0].labels, vec![1, 2, 2, 1]);
        assert_eq!(imgs[0].image.data()[3], 1.0);
        assert!(report.is_empty());
    }

    #[test]
    fn unknown_colour_maps_to_background() {
        let dir = tempfile::tempdir().unwrap();
        let palette = toy_palette();
        write_pnm(&dir.path().join("a.pgm"), &PnmImage::new(PnmKind::Graymap, 2, 1, vec![0, 0])).unwrap();
        let colors = [palette.classes[1].rgb, [1, 2, 3]].concat();
        write_pnm(&dir.path().join("a_labels.ppm"), &PnmImage::new(PnmKind::Pixmap, 2, 1, colors)).unwrap();
        let (imgs, report) = load_labeled_dir(dir.path(), &palette).unwrap();
        assert_eq!(imgs[0].labels, vec![1, 0]);
        assert_eq!(report.unknown_colors.len(), 1);
        assert_eq!(report.unknown_colors[0].rgb, [1, 2, 3]);
        assert_eq!(report.unknown_colors[0].pixels, 1);
    }

    #[test]
    fn missing_label_file_names_it() {
        let dir = tempfile::tempdir().unwrap();
        write_pnm(&dir.path().join("lonely.pgm"), &PnmImage::new(PnmKind::Graymap, 1, 1, vec![0])).unwrap();
        let err = load_labeled_dir(dir.path(), &toy_palette()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("lonely_labels.ppm"), "{err}");
    }

    #[test]
    fn malformed_file_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.ppm"), b"P6\n2 2\n255\n\x00").unwrap();
        std::fs::write(dir.path().join("bad_labels.pgm"), b"P5\n2 2\n255\n\x00\x00\x00\x00").unwrap();
        let err = load_labeled_dir(dir.path(), &toy_palette()).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }

    #[test]
    fn raw_index_label_maps() {
        let dir = tempfile::tempdir().unwrap();
        write_pnm(&dir.path().join("a.ppm"), &PnmImage::new(PnmKind::Pixmap, 1, 2, vec![0; 6])).unwrap();
        write_pnm(&dir.path().join("a_labels.pgm"), &PnmImage::new(PnmKind::Graymap, 1, 2, vec![2, 1])).unwrap();
        let (imgs, _) = load_labeled_dir(dir.path(), &toy_palette()).unwrap();
        assert_eq!(imgs[0].labels, vec![2, 1]);
        assert_eq!(imgs[0].channels(), 3);
    }

    #[test]
    fn save_then_load_recovers_labels() {
        let dir = tempfile::tempdir().unwrap();
        let toy = gen_toy(1, 40, 32).unwrap();
        save_labeled_image(dir.path(), "toy", &toy, &toy_palette()).unwrap();
        let (imgs, report) = load_labeled_dir(dir.path(), &toy_palette()).unwrap();
        assert_eq!(imgs[0].labels, toy.labels);
        assert!(report.is_empty());
        for (a, b) in imgs[0].image.data().iter().zip(toy.image.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }

        let dir = tempfile::tempdir().unwrap();
        let palette = crate::datagen::facade_palette();
        let scenes = gen_facade_like(2, 36, 32, 3).unwrap();
        for (i, s) in scenes.iter().enumerate() {
            save_labeled_image(dir.path(), &format!("facade_{i:03}"), s, &palette).unwrap();
        }
        let (imgs, _) = load_labeled_dir(dir.path(), &palette).unwrap();
        for (a, b) in imgs.iter().zip(&scenes) {
            assert_eq!(a.labels, b.labels);
        }
    }
}
